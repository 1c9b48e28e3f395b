//! The ambient space `V = W x F_{q^4}` identified with `F_q^7`.
//!
//! A vector `(x, y)` maps to the coordinates of `x` in the pinned basis of
//! `W` followed by the power-basis coordinates of `y`. The special solid `S`
//! is `{0} x F_{q^4}`, i.e. the span of the last four unit vectors.

use thiserror::Error;

use crate::field::{BaseField, Elem, FieldTables};
use crate::linalg::{self, digit, enumerate_subspaces, pack, SubspaceRREF};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("element {0} is not in the trace-zero plane")]
    NotInW(Elem),
    #[error("generators are linearly dependent")]
    Dependent,
    #[error("map has {got} values for a domain basis of size {expected}")]
    MapLength { got: usize, expected: usize },
    #[error("flats above S have dimension 5 or 6, not {0}")]
    FlatDim(usize),
}

/// Ambient dimension.
pub const N: usize = 7;

/// Field tables together with the coordinate model of `V`.
#[derive(Debug, Clone)]
pub struct Ambient {
    ft: FieldTables,
    w_coords: Vec<Option<[u8; 3]>>,
}

/// A subspace `U(Z, T, f) = {(x, f(x) + y) : x in Z, y in T}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSubspace {
    /// Basis of `Z ⊆ W`.
    pub z: Vec<Elem>,
    /// Basis of `T ⊆ F_{q^4}`.
    pub t: Vec<Elem>,
    /// Values of `f` on the basis of `Z`.
    pub f: Vec<Elem>,
}

impl Ambient {
    pub fn new(ft: FieldTables) -> Ambient {
        let q = ft.q() as usize;
        let wb = ft.w_basis();
        let mut w_coords = vec![None; ft.order() as usize];
        for code in 0..q.pow(3) {
            let c = [(code % q) as u8, ((code / q) % q) as u8, (code / (q * q)) as u8];
            let x = ft.combine(&c, &wb);
            w_coords[x.0 as usize] = Some(c);
        }
        Ambient { ft, w_coords }
    }

    pub fn for_q(q: u32) -> Result<Ambient, crate::field::FieldError> {
        Ok(Ambient::new(FieldTables::new(q)?))
    }

    pub fn ft(&self) -> &FieldTables {
        &self.ft
    }

    pub fn q(&self) -> u32 {
        self.ft.q()
    }

    pub fn bf(&self) -> &'static BaseField {
        self.ft.base()
    }

    /// Coordinates of `x` in the pinned basis of `W`.
    pub fn w_coords(&self, x: Elem) -> Option<[u8; 3]> {
        self.w_coords[x.0 as usize]
    }

    /// Packed coordinates of `(x, y)`; `x` must lie in `W`.
    #[inline]
    pub fn vector(&self, x: Elem, y: Elem) -> u64 {
        let a = self.w_coords[x.0 as usize].expect("first component lies in W");
        let b = self.ft.coords(y);
        pack(&[a[0], a[1], a[2], b[0], b[1], b[2], b[3]])
    }

    /// Inverse of [`Ambient::vector`].
    pub fn split(&self, v: u64) -> (Elem, Elem) {
        let a = [digit(v, 0), digit(v, 1), digit(v, 2)];
        let b = [digit(v, 3), digit(v, 4), digit(v, 5), digit(v, 6)];
        (self.ft.combine(&a, &self.ft.w_basis()), self.ft.from_coords(b))
    }

    /// Row space of the given vectors of `V`.
    pub fn span(&self, vs: &[(Elem, Elem)]) -> SubspaceRREF {
        let rows = vs.iter().map(|&(x, y)| self.vector(x, y)).collect();
        SubspaceRREF::from_packed(self.bf(), N, rows)
    }

    /// The special solid `S = {0} x F_{q^4}`.
    pub fn special_solid(&self) -> SubspaceRREF {
        let rows = (3..7).map(|j| pack(&(0..7).map(|i| u8::from(i == j)).collect::<Vec<_>>())).collect();
        SubspaceRREF::from_rref_unchecked(self.q(), N, rows)
    }

    /// Points of `PG(W)` as canonical representatives (RREF of the 1-space).
    pub fn w_points(&self) -> Vec<Elem> {
        enumerate_subspaces(3, 1, self.q())
            .expect("small")
            .map(|s| self.w_elem(s.rows()[0]))
            .collect()
    }

    /// Lines of `PG(W)` as canonical bases, in lexicographic order.
    pub fn w_lines(&self) -> Vec<[Elem; 2]> {
        enumerate_subspaces(3, 2, self.q())
            .expect("small")
            .map(|s| [self.w_elem(s.rows()[0]), self.w_elem(s.rows()[1])])
            .collect()
    }

    fn w_elem(&self, row: u64) -> Elem {
        let c = [digit(row, 0), digit(row, 1), digit(row, 2)];
        self.ft.combine(&c, &self.ft.w_basis())
    }

    /// Canonical basis of the `F_q`-span of elements of `W`.
    pub fn canonical_w_basis(&self, gens: &[Elem]) -> Result<Vec<Elem>, GeometryError> {
        let mut rows = Vec::new();
        for &g in gens {
            let c = self.w_coords(g).ok_or(GeometryError::NotInW(g))?;
            rows.push(pack(&c));
        }
        linalg::reduce(self.bf(), &mut rows);
        Ok(rows.into_iter().map(|r| self.w_elem(r)).collect())
    }

    /// Realizes `U(Z, T, f)` as a coordinate subspace.
    pub fn realize(&self, p: &ParamSubspace) -> Result<SubspaceRREF, GeometryError> {
        if p.f.len() != p.z.len() {
            return Err(GeometryError::MapLength { got: p.f.len(), expected: p.z.len() });
        }
        if self.canonical_w_basis(&p.z)?.len() != p.z.len() {
            return Err(GeometryError::Dependent);
        }
        let mut rows = Vec::with_capacity(p.z.len() + p.t.len());
        for (&x, &fx) in p.z.iter().zip(&p.f) {
            rows.push(self.vector(x, fx));
        }
        for &y in &p.t {
            rows.push(self.vector(Elem::ZERO, y));
        }
        let want = rows.len();
        let s = SubspaceRREF::from_packed(self.bf(), N, rows);
        if s.dim() != want {
            return Err(GeometryError::Dependent);
        }
        Ok(s)
    }

    /// Recovers `(Z, T, f)`; `Z` gets its canonical basis.
    pub fn decompose(&self, u: &SubspaceRREF) -> ParamSubspace {
        let mut p = ParamSubspace { z: Vec::new(), t: Vec::new(), f: Vec::new() };
        for &row in u.rows() {
            let (x, y) = self.split(row);
            if linalg::leading(row).expect("nonzero") < 3 {
                p.z.push(x);
                p.f.push(y);
            } else {
                p.t.push(y);
            }
        }
        p
    }

    /// Whether `U(Z', T', f') ⊆ U(Z, T, f)`, decided from the parameters.
    pub fn incidence(&self, sub: &ParamSubspace, sup: &ParamSubspace) -> bool {
        let ft = &self.ft;
        if !sub.t.iter().all(|&y| in_span(ft, &sup.t, y).is_some()) {
            return false;
        }
        for (&x, &fx) in sub.z.iter().zip(&sub.f) {
            let Some(c) = in_span(ft, &sup.z, x) else { return false };
            let g = ft.combine(&c, &sup.f);
            if in_span(ft, &sup.t, ft.sub(g, fx)).is_none() {
                return false;
            }
        }
        true
    }

    /// Flats containing `S`: the hyperplanes `Z x F_{q^4}` (`dim = 6`) or the
    /// 4-flats `F_q x x F_{q^4}` (`dim = 5`).
    pub fn flats_above_s(&self, dim: usize) -> Result<Vec<SubspaceRREF>, GeometryError> {
        let s: Vec<Elem> = (0..4).map(|j| self.ft.alpha_pow(j)).collect();
        let zs: Vec<Vec<Elem>> = match dim {
            5 => self.w_points().into_iter().map(|x| vec![x]).collect(),
            6 => self.w_lines().into_iter().map(|l| l.to_vec()).collect(),
            d => return Err(GeometryError::FlatDim(d)),
        };
        zs.into_iter()
            .map(|z| {
                let f = vec![Elem::ZERO; z.len()];
                self.realize(&ParamSubspace { z, t: s.clone(), f })
            })
            .collect()
    }
}

/// Coefficients expressing `x` in the span of `basis`, by exhaustive search.
pub fn in_span(ft: &FieldTables, basis: &[Elem], x: Elem) -> Option<Vec<u8>> {
    let q = ft.q() as usize;
    let k = basis.len();
    (0..q.pow(k as u32)).find_map(|mut code| {
        let c: Vec<u8> = (0..k)
            .map(|_| {
                let v = (code % q) as u8;
                code /= q;
                v
            })
            .collect();
        (ft.combine(&c, basis) == x).then_some(c)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn amb(q: u32) -> Ambient {
        Ambient::for_q(q).unwrap()
    }

    fn random_param(a: &Ambient, rng: &mut ChaCha8Rng) -> ParamSubspace {
        let ft = a.ft();
        let w = ft.w();
        loop {
            let zk = rng.gen_range(0..=3);
            let tk = rng.gen_range(0..=3);
            let z: Vec<Elem> = (0..zk).map(|_| w[rng.gen_range(0..w.len())]).collect();
            let t: Vec<Elem> = (0..tk).map(|_| Elem(rng.gen_range(0..ft.order()) as u16)).collect();
            let f: Vec<Elem> = (0..zk).map(|_| Elem(rng.gen_range(0..ft.order()) as u16)).collect();
            let p = ParamSubspace { z, t, f };
            if a.realize(&p).is_ok() {
                return p;
            }
        }
    }

    #[test]
    fn realize_examples() {
        let a = amb(2);
        let ft = a.ft();
        let w = ft.w_basis().to_vec();
        let s: Vec<Elem> = (0..4).map(|j| ft.alpha_pow(j)).collect();
        let full = a.realize(&ParamSubspace { z: w.clone(), t: s.clone(), f: vec![Elem::ZERO; 3] }).unwrap();
        assert_eq!(full.dim(), 7);
        let w0 = a.realize(&ParamSubspace { z: w.clone(), t: vec![], f: vec![Elem::ZERO; 3] }).unwrap();
        let e123 = SubspaceRREF::from_digit_rows(2, 7, &(0..3).map(|i| (0..7).map(|j| u8::from(i == j)).collect()).collect::<Vec<_>>()).unwrap();
        assert_eq!(w0, e123);
        let gamma = a.realize(&ParamSubspace { z: w.clone(), t: vec![], f: w.clone() }).unwrap();
        assert_eq!(gamma.dim(), 3);
        assert_eq!(gamma.intersect_dim(&a.special_solid()).unwrap(), 0);
        assert_eq!(
            a.realize(&ParamSubspace { z: vec![w[0], w[0]], t: vec![], f: vec![Elem::ZERO; 2] }),
            Err(GeometryError::Dependent)
        );
        assert_eq!(
            a.realize(&ParamSubspace { z: vec![ft.d()], t: vec![], f: vec![Elem::ZERO] }),
            Err(GeometryError::NotInW(ft.d()))
        );
    }

    #[test]
    fn decompose_special_solid() {
        let a = amb(3);
        let p = a.decompose(&a.special_solid());
        assert!(p.z.is_empty());
        assert_eq!(p.t.len(), 4);
        assert_eq!(a.realize(&p).unwrap(), a.special_solid());
    }

    #[test]
    fn roundtrip_and_incidence_q2() {
        let a = amb(2);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = a.special_solid();
        for _ in 0..10_000 {
            let p = random_param(&a, &mut rng);
            let u = a.realize(&p).unwrap();
            let d = a.decompose(&u);
            assert_eq!(a.realize(&d).unwrap(), u);
            assert_eq!(d.t.len(), u.intersect_dim(&s).unwrap());
            assert!(a.incidence(&p, &p));
            let p2 = random_param(&a, &mut rng);
            let u2 = a.realize(&p2).unwrap();
            assert_eq!(a.incidence(&p2, &p), u.contains(&u2).unwrap());
        }
    }

    #[test]
    fn plane_meeting_s_in_line_has_that_line_as_t() {
        let a = amb(3);
        let ft = a.ft();
        let x = ft.w_basis()[1];
        let l = vec![ft.alpha_pow(2), ft.alpha_pow(9)];
        let u = a.realize(&ParamSubspace { z: vec![x], t: l.clone(), f: vec![ft.alpha_pow(5)] }).unwrap();
        let d = a.decompose(&u);
        let tl = a.span(&l.iter().map(|&y| (Elem::ZERO, y)).collect::<Vec<_>>());
        let td = a.span(&d.t.iter().map(|&y| (Elem::ZERO, y)).collect::<Vec<_>>());
        assert_eq!(tl, td);
    }

    #[test]
    fn flats_above_s_counts() {
        for (q, n) in [(2, 7), (3, 13)] {
            let a = amb(q);
            let s = a.special_solid();
            for dim in [5, 6] {
                let flats = a.flats_above_s(dim).unwrap();
                assert_eq!(flats.len(), n);
                for f in &flats {
                    assert_eq!(f.dim(), dim);
                    assert!(f.contains(&s).unwrap());
                }
            }
        }
        assert!(amb(2).flats_above_s(4).is_err());
    }

    #[test]
    fn graphs_are_exactly_planes_disjoint_from_s() {
        let a = amb(2);
        let s = a.special_solid();
        let mut disjoint = 0;
        for u in enumerate_subspaces(7, 3, 2).unwrap() {
            let p = a.decompose(&u);
            let is_graph = p.z.len() == 3 && p.t.is_empty();
            assert_eq!(is_graph, u.intersect_dim(&s).unwrap() == 0);
            disjoint += usize::from(is_graph);
        }
        assert_eq!(disjoint, 4096);
    }
}
