//! Linearized maps `W -> F_{q^4}` and the Gabidulin code with its
//! distinguished subspaces.

use thiserror::Error;

use crate::code::{CodeError, SubspaceCode};
use crate::field::{Elem, FieldTables};
use crate::geometry::Ambient;
use crate::linalg::{self, SubspaceRREF};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GabidulinError {
    #[error("Z must be a 2-dimensional subspace of W")]
    BadZ,
    #[error("the point r must be nonzero")]
    BadPoint,
    #[error("map has a nonzero x^(q^2) coefficient")]
    NotInG,
}

/// `x -> a0 x + a1 x^q + a2 x^(q^2)` restricted to `W`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinearizedMap {
    pub a: [Elem; 3],
}

impl LinearizedMap {
    pub const ZERO: LinearizedMap = LinearizedMap { a: [Elem::ZERO; 3] };

    pub fn binomial(a0: Elem, a1: Elem) -> LinearizedMap {
        LinearizedMap { a: [a0, a1, Elem::ZERO] }
    }

    /// `u x^q - u^q x`.
    pub fn delta_map(ft: &FieldTables, u: Elem) -> LinearizedMap {
        LinearizedMap::binomial(ft.neg(ft.frobenius(u)), u)
    }

    pub fn eval(&self, ft: &FieldTables, x: Elem) -> Elem {
        let x1 = ft.frobenius(x);
        let x2 = ft.frobenius(x1);
        ft.add(ft.add(ft.mul(self.a[0], x), ft.mul(self.a[1], x1)), ft.mul(self.a[2], x2))
    }

    pub fn add(&self, ft: &FieldTables, o: &LinearizedMap) -> LinearizedMap {
        LinearizedMap { a: [0, 1, 2].map(|i| ft.add(self.a[i], o.a[i])) }
    }

    pub fn sub(&self, ft: &FieldTables, o: &LinearizedMap) -> LinearizedMap {
        LinearizedMap { a: [0, 1, 2].map(|i| ft.sub(self.a[i], o.a[i])) }
    }

    /// `r f`.
    pub fn scale(&self, ft: &FieldTables, r: Elem) -> LinearizedMap {
        LinearizedMap { a: self.a.map(|c| ft.mul(r, c)) }
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().all(|c| c.is_zero())
    }

    pub fn in_g(&self) -> bool {
        self.a[2].is_zero()
    }

    /// Values on the pinned basis of `W`.
    pub fn on_basis(&self, ft: &FieldTables) -> [Elem; 3] {
        ft.w_basis().map(|w| self.eval(ft, w))
    }

    /// `3 - dim(ker f ∩ W)`.
    pub fn rank_on_w(&self, ft: &FieldTables) -> usize {
        let rows: Vec<u64> = self
            .on_basis(ft)
            .iter()
            .map(|&y| linalg::pack(&ft.coords(y)))
            .collect();
        linalg::rank(ft.base(), &rows)
    }

    /// Nonzero elements of `F_{q^4}` killed by the binomial part.
    pub fn kernel_points(&self, ft: &FieldTables) -> Vec<u32> {
        let mut pts: Vec<u32> = ft
            .elements()
            .skip(1)
            .filter(|&x| self.eval(ft, x).is_zero())
            .map(|x| ft.point(x))
            .collect();
        pts.sort_unstable();
        pts.dedup();
        pts
    }
}

/// Named subsets of the Gabidulin code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MapFamily {
    G,
    R,
    T,
    /// `D(Z, P)` with `Z = <a, b>` and `P = F_q(0, r)`.
    D { z: [Elem; 2], r: Elem },
    G0,
    G1,
}

impl MapFamily {
    pub fn d(ft: &FieldTables, z: [Elem; 2], r: Elem) -> Result<MapFamily, GabidulinError> {
        if !z.iter().all(|&x| ft.in_w(x)) || ft.delta(z[0], z[1]).is_zero() {
            return Err(GabidulinError::BadZ);
        }
        if r.is_zero() {
            return Err(GabidulinError::BadPoint);
        }
        Ok(MapFamily::D { z, r })
    }

    pub fn size(&self, q: u32) -> u64 {
        let q = q as u64;
        match self {
            MapFamily::G => q.pow(8),
            MapFamily::R => q.pow(4),
            MapFamily::T => q.pow(3),
            MapFamily::D { .. } => q.pow(2),
            MapFamily::G1 => q.pow(7) - q.pow(3),
            MapFamily::G0 => q.pow(8) - q.pow(7) + q.pow(3),
        }
    }

    /// Members, each once; `G` in `(a0, a1)` index order.
    pub fn members(&self, ft: &FieldTables) -> Vec<LinearizedMap> {
        match self {
            MapFamily::G => ft
                .elements()
                .flat_map(|a0| ft.elements().map(move |a1| LinearizedMap::binomial(a0, a1)))
                .collect(),
            MapFamily::R => ft.elements().map(|u| LinearizedMap::delta_map(ft, u)).collect(),
            MapFamily::T => ft.w().iter().map(|&u| LinearizedMap::delta_map(ft, u)).collect(),
            MapFamily::D { z, r } => {
                let c = ft.div(*r, ft.delta(z[0], z[1]));
                let q = ft.q() as u8;
                (0..q)
                    .flat_map(|s| (0..q).map(move |t| (s, t)))
                    .map(|(s, t)| {
                        let u = ft.add(ft.smul(s, z[0]), ft.smul(t, z[1]));
                        LinearizedMap::delta_map(ft, u).scale(ft, c)
                    })
                    .collect()
            }
            MapFamily::G1 => {
                let rt: Vec<LinearizedMap> = ft
                    .elements()
                    .filter(|&u| !ft.in_w(u))
                    .map(|u| LinearizedMap::delta_map(ft, u))
                    .collect();
                (0..ft.n_points())
                    .flat_map(|i| {
                        let r = ft.alpha_pow(i as u64);
                        rt.iter().map(move |f| f.scale(ft, r))
                    })
                    .collect()
            }
            MapFamily::G0 => {
                let mut g1 = MapFamily::G1.members(ft);
                g1.sort_unstable();
                MapFamily::G
                    .members(ft)
                    .into_iter()
                    .filter(|f| g1.binary_search(f).is_err())
                    .collect()
            }
        }
    }

    pub fn contains(&self, ft: &FieldTables, f: &LinearizedMap) -> bool {
        if !f.in_g() {
            return false;
        }
        match self {
            MapFamily::G => true,
            MapFamily::R => f.a[0] == ft.neg(ft.frobenius(f.a[1])),
            MapFamily::T => MapFamily::R.contains(ft, f) && ft.in_w(f.a[1]),
            MapFamily::D { z, r } => z.iter().all(|&x| {
                let y = f.eval(ft, x);
                y.is_zero() || ft.as_scalar(ft.div(y, *r)).is_some()
            }),
            MapFamily::G1 => {
                if f.a[0].is_zero() || f.a[1].is_zero() {
                    return false;
                }
                let k = f.kernel_points(ft);
                k.len() == 1 && !ft.in_w(ft.alpha_pow(k[0] as u64))
            }
            MapFamily::G0 => !MapFamily::G1.contains(ft, f),
        }
    }
}

/// The graph `{(x, f(x)) : x in W}`.
pub fn lift(amb: &Ambient, f: &LinearizedMap) -> Result<SubspaceRREF, GabidulinError> {
    if !f.in_g() {
        return Err(GabidulinError::NotInG);
    }
    let ft = amb.ft();
    let vs: Vec<(Elem, Elem)> = ft.w_basis().iter().map(|&w| (w, f.eval(ft, w))).collect();
    Ok(amb.span(&vs))
}

/// The lifted Gabidulin code.
pub fn lifted_code(amb: &Ambient) -> Result<SubspaceCode, CodeError> {
    let planes = MapFamily::G
        .members(amb.ft())
        .iter()
        .map(|f| lift(amb, f).expect("member of G"))
        .collect();
    SubspaceCode::new(amb.q(), planes, "lmrd")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::verify_t2;
    use rand::{Rng, SeedableRng};
    use std::collections::HashSet;

    #[test]
    fn eval_basics() {
        let ft = FieldTables::new(3).unwrap();
        assert!(LinearizedMap::ZERO.eval(&ft, ft.alpha_pow(5)).is_zero());
        assert_eq!(LinearizedMap::ZERO.rank_on_w(&ft), 0);
        for &a in ft.w().iter().skip(1) {
            let f = LinearizedMap::delta_map(&ft, a);
            assert!(f.eval(&ft, a).is_zero());
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = ft.order() as u16;
        for _ in 0..10_000 {
            let f = LinearizedMap { a: [0; 3].map(|_| Elem(rng.gen_range(0..n))) };
            let x = Elem(rng.gen_range(0..n));
            let y = Elem(rng.gen_range(0..n));
            assert_eq!(f.eval(&ft, ft.add(x, y)), ft.add(f.eval(&ft, x), f.eval(&ft, y)));
        }
    }

    #[test]
    fn ranks_of_t_and_r() {
        for q in [2, 3] {
            let ft = FieldTables::new(q).unwrap();
            for f in MapFamily::T.members(&ft).iter().filter(|f| !f.is_zero()) {
                assert_eq!(f.rank_on_w(&ft), 2);
            }
            let t: HashSet<_> = MapFamily::T.members(&ft).into_iter().collect();
            for f in MapFamily::R.members(&ft).iter().filter(|f| !t.contains(f)) {
                assert_eq!(f.rank_on_w(&ft), 3);
            }
        }
    }

    #[test]
    fn family_sizes_and_chain() {
        let ft = FieldTables::new(2).unwrap();
        let w = ft.w();
        let fam_d = MapFamily::d(&ft, [w[1], w[2]], ft.alpha_pow(3)).unwrap();
        let all = [MapFamily::G, MapFamily::R, MapFamily::T];
        let sizes: Vec<usize> = all.iter().chain([&fam_d]).map(|f| f.members(&ft).len()).collect();
        assert_eq!(sizes, vec![256, 16, 8, 4]);
        // D(Z,P) sits in T exactly when r lies in F_q delta(a,b), and in G always.
        let untwisted = MapFamily::d(&ft, [w[1], w[2]], ft.delta(w[1], w[2])).unwrap();
        assert!(untwisted.members(&ft).iter().all(|f| MapFamily::T.contains(&ft, f)));
        assert!(fam_d.members(&ft).iter().all(|f| MapFamily::G.contains(&ft, f)));
        for (i, fam) in all.iter().enumerate() {
            let m: HashSet<_> = fam.members(&ft).into_iter().collect();
            assert_eq!(m.len() as u64, fam.size(2));
            for outer in &all[..i] {
                assert!(m.iter().all(|f| outer.contains(&ft, f)));
            }
        }
        assert!(MapFamily::d(&ft, [w[1], w[1]], Elem::ONE).is_err());
        assert!(MapFamily::d(&ft, [w[1], w[2]], Elem::ZERO).is_err());
    }

    #[test]
    fn d_characterization() {
        for q in [2, 3] {
            let ft = FieldTables::new(q).unwrap();
            let amb = Ambient::new(ft.clone());
            let g = MapFamily::G.members(&ft);
            for (i, z) in amb.w_lines().iter().enumerate().step_by(3) {
                let r = ft.alpha_pow(i as u64 * 7);
                let fam = MapFamily::d(&ft, *z, r).unwrap();
                let mut direct: Vec<_> = g.iter().filter(|f| fam.contains(&ft, f)).copied().collect();
                let mut listed = fam.members(&ft);
                direct.sort_unstable();
                listed.sort_unstable();
                assert_eq!(direct, listed);
            }
        }
    }

    #[test]
    fn mrd_distance() {
        let ft = FieldTables::new(2).unwrap();
        let g = MapFamily::G.members(&ft);
        for f in &g {
            for h in &g {
                if f != h {
                    assert!(f.sub(&ft, h).rank_on_w(&ft) >= 2);
                }
            }
        }
    }

    #[test]
    fn unique_representation() {
        let ft = FieldTables::new(2).unwrap();
        let mut seen = HashSet::new();
        for a0 in ft.elements() {
            for a1 in ft.elements() {
                for a2 in ft.elements() {
                    let f = LinearizedMap { a: [a0, a1, a2] };
                    assert!(seen.insert(f.on_basis(&ft)));
                }
            }
        }
        assert_eq!(seen.len(), 1 << 12);
    }

    #[test]
    fn g1_and_g0() {
        for q in [2u64, 3] {
            let ft = FieldTables::new(q as u32).unwrap();
            let g1 = MapFamily::G1.members(&ft);
            let set: HashSet<_> = g1.iter().copied().collect();
            assert_eq!(set.len() as u64, q.pow(7) - q.pow(3));
            let g = MapFamily::G.members(&ft);
            let by_pred: HashSet<_> = g.iter().filter(|f| MapFamily::G1.contains(&ft, f)).copied().collect();
            assert_eq!(set, by_pred);
            let g0: Vec<_> = g.iter().filter(|f| !set.contains(f)).collect();
            let n4 = q.pow(4) - 1;
            let zero = g0.iter().filter(|f| f.is_zero()).count() as u64;
            let mono = g0.iter().filter(|f| f.a[0].is_zero() != f.a[1].is_zero()).count() as u64;
            let bi: Vec<_> = g0.iter().filter(|f| !f.a[0].is_zero() && !f.a[1].is_zero()).collect();
            let rank2 = bi.iter().filter(|f| f.rank_on_w(&ft) == 2).count() as u64;
            let free = bi.iter().filter(|f| f.kernel_points(&ft).is_empty()).count() as u64;
            assert_eq!(zero, 1);
            assert_eq!(mono, 2 * n4);
            assert_eq!(rank2, n4 * (q * q + q + 1));
            assert_eq!(free, n4 * (q.pow(3) + q * q + q + 1) * (q - 2));
            assert_eq!(zero + mono + rank2 + free, g0.len() as u64);
        }
    }

    #[test]
    fn lifted_code_q2() {
        let amb = Ambient::for_q(2).unwrap();
        let c = lifted_code(&amb).unwrap();
        assert_eq!(c.len(), 256);
        let r = verify_t2(&c);
        assert!(r.t2_ok);
        assert_eq!(r.covered_lines, 1792);
        let zero = lift(&amb, &LinearizedMap::ZERO).unwrap();
        let w = amb.span(&amb.ft().w_basis().map(|x| (x, Elem::ZERO)));
        assert_eq!(zero, w);
        let s = amb.special_solid();
        assert!(c.planes().iter().all(|p| p.intersect_dim(&s).unwrap() == 0));
    }
}
