//! Code constructions: the packing-augmented LMRD code, the rearrangement
//! of `R`, the expurgated code `L0` with its new planes `N`, and the codes
//! `C0`, `C` and the extension by the short-orbit planes.

use std::collections::{BTreeMap, HashMap, HashSet};

use thiserror::Error;

use crate::code::{CodeError, SubspaceCode};
use crate::field::{Elem, FieldError, FieldTables};
use crate::gabidulin::{self, LinearizedMap, MapFamily};
use crate::geometry::Ambient;
use crate::linalg::SubspaceRREF;
use crate::mis::Bits;
use crate::projective::{ProjLine, ProjPlane, ProjPoint, Projective};

#[derive(Debug, Error)]
pub enum ConstructionError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error("invalid packing: {0}")]
    Packing(String),
    #[error("choice {index} at point {point} exceeds the {size} planes of the class")]
    Choice { point: u32, index: usize, size: usize },
    #[error("choice list has {got} entries, expected {expected}")]
    ChoiceLength { got: usize, expected: usize },
}

/// Field tables with both the coordinate model and the projective invariants.
#[derive(Clone, Debug)]
pub struct Context {
    pub amb: Ambient,
    pub proj: Projective,
}

impl Context {
    pub fn new(q: u32) -> Result<Context, FieldError> {
        Ok(Context::from_tables(FieldTables::new(q)?))
    }

    pub fn from_tables(ft: FieldTables) -> Context {
        let proj = Projective::new(&ft);
        Context { amb: Ambient::new(ft), proj }
    }

    pub fn ft(&self) -> &FieldTables {
        self.amb.ft()
    }

    pub fn q(&self) -> u32 {
        self.amb.q()
    }

    /// Number of points of `S` (and of `PG(3,q)`).
    pub fn n(&self) -> u32 {
        self.proj.n()
    }

    /// Line `{0} x L` of the special solid.
    pub fn s_line(&self, l: &ProjLine) -> [(Elem, Elem); 2] {
        let p = l.points();
        [(Elem::ZERO, self.proj.elem(p[0])), (Elem::ZERO, self.proj.elem(p[1]))]
    }

    /// Plane spanned by a point outside `S` and a line of `S`.
    pub fn join(&self, pt: (Elem, Elem), l: &ProjLine) -> SubspaceRREF {
        let [a, b] = self.s_line(l);
        self.amb.span(&[pt, a, b])
    }
}

/// A partition of the lines of `PG(3,q)` into spreads.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Packing {
    pub spreads: Vec<Vec<ProjLine>>,
}

/// Checks the packing axioms.
pub fn validate_packing(proj: &Projective, p: &Packing) -> Result<(), ConstructionError> {
    let q = proj.q() as usize;
    if p.spreads.len() != q * q + q + 1 {
        return Err(ConstructionError::Packing(format!("{} spreads", p.spreads.len())));
    }
    let mut all = HashSet::new();
    for (i, s) in p.spreads.iter().enumerate() {
        let mut pts: Vec<u32> = s.iter().flat_map(|l| l.points().to_vec()).collect();
        pts.sort_unstable();
        if s.len() != q * q + 1 || pts != (0..proj.n()).collect::<Vec<_>>() {
            return Err(ConstructionError::Packing(format!("spread {i} is not a spread")));
        }
        for l in s {
            proj.line(l.points()).map_err(|e| ConstructionError::Packing(e.to_string()))?;
            if !all.insert(l.clone()) {
                return Err(ConstructionError::Packing(format!("line {:?} repeated", l.points())));
            }
        }
    }
    Ok(())
}

/// All line spreads, as sorted index lists into `lines`.
pub fn all_spreads(proj: &Projective, lines: &[ProjLine]) -> Vec<Vec<usize>> {
    let n = proj.n() as usize;
    let mut through = vec![Vec::new(); n];
    for (i, l) in lines.iter().enumerate() {
        for &p in l.points() {
            through[p as usize].push(i);
        }
    }
    fn rec(lines: &[ProjLine], through: &[Vec<usize>], cov: &mut [bool], ch: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let Some(p) = cov.iter().position(|&c| !c) else {
            let mut s = ch.clone();
            s.sort_unstable();
            out.push(s);
            return;
        };
        for &i in &through[p] {
            let pts = lines[i].points();
            if pts.iter().any(|&x| cov[x as usize]) {
                continue;
            }
            pts.iter().for_each(|&x| cov[x as usize] = true);
            ch.push(i);
            rec(lines, through, cov, ch, out);
            ch.pop();
            pts.iter().for_each(|&x| cov[x as usize] = false);
        }
    }
    let mut out = Vec::new();
    rec(lines, &through, &mut vec![false; n], &mut Vec::new(), &mut out);
    out
}

/// A line packing found by exact cover of the lines by spreads, branching
/// on the line contained in the fewest compatible spreads.
pub fn find_line_packing(proj: &Projective) -> Result<Packing, ConstructionError> {
    let lines = proj.all_lines();
    let spreads: Vec<Bits> = all_spreads(proj, &lines)
        .into_iter()
        .map(|s| {
            let mut b = Bits::new(lines.len());
            s.into_iter().for_each(|i| b.insert(i));
            b
        })
        .collect();
    let mut by_line = vec![Vec::new(); lines.len()];
    for (j, s) in spreads.iter().enumerate() {
        s.iter().for_each(|i| by_line[i].push(j));
    }
    fn rec(spreads: &[Bits], by_line: &[Vec<usize>], cov: &Bits, ch: &mut Vec<usize>) -> bool {
        let mut best: Option<Vec<usize>> = None;
        for (i, cands) in by_line.iter().enumerate() {
            if cov.contains(i) {
                continue;
            }
            let c: Vec<usize> = cands.iter().copied().filter(|&j| !spreads[j].intersects(cov)).collect();
            if c.is_empty() {
                return false;
            }
            if best.as_ref().is_none_or(|b| c.len() < b.len()) {
                best = Some(c);
            }
        }
        let Some(best) = best else { return true };
        for j in best {
            ch.push(j);
            let mut next = cov.clone();
            spreads[j].iter().for_each(|i| next.insert(i));
            if rec(spreads, by_line, &next, ch) {
                return true;
            }
            ch.pop();
        }
        false
    }
    let mut chosen = Vec::new();
    if !rec(&spreads, &by_line, &Bits::new(lines.len()), &mut chosen) {
        return Err(ConstructionError::Packing("no packing found".into()));
    }
    let p = Packing { spreads: chosen.iter().map(|&j| spreads[j].iter().map(|i| lines[i].clone()).collect()).collect() };
    validate_packing(proj, &p)?;
    Ok(p)
}

/// For each point `x` of `W` (in `Projective::w_points` order), the spread
/// of the packing containing the line `delta(x, W)`.
pub fn spreads_by_w_point(ctx: &Context, packing: &Packing) -> Result<Vec<usize>, ConstructionError> {
    let proj = &ctx.proj;
    let ft = ctx.ft();
    proj.w_points()
        .iter()
        .map(|&xp| {
            let x = proj.elem(xp);
            let mut pts: Vec<ProjPoint> = proj
                .w_points()
                .iter()
                .filter(|&&w| w != xp)
                .map(|&w| ft.point(ft.delta(x, proj.elem(w))))
                .collect();
            pts.sort_unstable();
            pts.dedup();
            let l = proj.line_through(pts[0], pts[1]);
            packing
                .spreads
                .iter()
                .position(|s| s.contains(&l))
                .ok_or_else(|| ConstructionError::Packing("line delta(x,W) missing".into()))
        })
        .collect()
}

fn line_meeting_planes(ctx: &Context, packing: &Packing, offset: impl Fn(ProjPoint) -> Elem) -> Result<Vec<SubspaceRREF>, ConstructionError> {
    validate_packing(&ctx.proj, packing)?;
    let which = spreads_by_w_point(ctx, packing)?;
    let mut out = Vec::new();
    for (i, &xp) in ctx.proj.w_points().iter().enumerate() {
        let pt = (ctx.proj.elem(xp), offset(xp));
        for l in &packing.spreads[which[i]] {
            out.push(ctx.join(pt, l));
        }
    }
    Ok(out)
}

/// Lifted Gabidulin code augmented by one plane per line of `S`.
pub fn almrd_code(ctx: &Context, packing: &Packing) -> Result<SubspaceCode, ConstructionError> {
    let extra = line_meeting_planes(ctx, packing, |_| Elem::ZERO)?;
    Ok(gabidulin::lifted_code(&ctx.amb)?.extended(extra, "almrd")?)
}

/// `N(Z, F_q r, g)` from the values of `g` on a basis of `Z`.
fn n_plane(ctx: &Context, z: [Elem; 2], g: [Elem; 2], r: Elem) -> SubspaceRREF {
    ctx.amb.span(&[(z[0], g[0]), (z[1], g[1]), (Elem::ZERO, r)])
}

/// New planes replacing the graphs of `R`, one per hyperplane above `S`
/// and coset of `D(Z, P)` in `R`.
pub fn rspace_new_planes(ctx: &Context) -> Vec<SubspaceRREF> {
    let ft = ctx.ft();
    let r_maps = MapFamily::R.members(ft);
    let mut out = Vec::new();
    for z in ctx.amb.w_lines() {
        let r = ft.delta(z[0], z[1]);
        for f in &r_maps {
            out.push(n_plane(ctx, z, [f.eval(ft, z[0]), f.eval(ft, z[1])], r));
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// The code obtained by rearranging the free lines of the graphs of `R`.
pub fn rspace_code(ctx: &Context) -> Result<SubspaceCode, ConstructionError> {
    let lifted = gabidulin::lifted_code(&ctx.amb)?;
    let removed: Vec<SubspaceRREF> = MapFamily::R
        .members(ctx.ft())
        .iter()
        .map(|f| gabidulin::lift(&ctx.amb, f).expect("in G"))
        .collect();
    Ok(lifted.without(&removed, "rspace").extended(rspace_new_planes(ctx), "rspace")?)
}

/// Smallest-log `y` with `(x, y)` outside the affine solid covered by the
/// rearranged planes in the 4-flat over `x`.
pub fn rspace_free_offset(proj: &Projective, xp: ProjPoint) -> Elem {
    let covered = proj.plane_points(ProjPlane((proj.q() + 1) * xp % proj.n()));
    let k = (0..).find(|k| covered.binary_search(k).is_err()).expect("plane is proper");
    proj.elem(k)
}

/// `rspace_code` augmented by one plane per line of `S`.
pub fn rspace_aug_code(ctx: &Context, packing: &Packing) -> Result<SubspaceCode, ConstructionError> {
    let extra = line_meeting_planes(ctx, packing, |xp| rspace_free_offset(&ctx.proj, xp))?;
    Ok(rspace_code(ctx)?.extended(extra, "rspace-aug")?)
}

/// `L0` and the removed maps `G1`.
pub fn expurgate(ctx: &Context) -> Result<(SubspaceCode, Vec<LinearizedMap>), ConstructionError> {
    let g1 = MapFamily::G1.members(ctx.ft());
    let removed: Vec<SubspaceRREF> = g1.iter().map(|f| gabidulin::lift(&ctx.amb, f).expect("in G")).collect();
    Ok((gabidulin::lifted_code(&ctx.amb)?.without(&removed, "L0"), g1))
}

/// A plane of `N`, meeting `S` in `P_r`, parametrized by a plane `E != W`
/// of `PG(3,q)` and a scalar `lambda`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NewPlane {
    pub r: ProjPoint,
    pub e: ProjPlane,
    pub lambda: u8,
    /// Canonical basis of `Z = E ∩ W`.
    pub z: [Elem; 2],
    pub plane: SubspaceRREF,
}

/// Canonical basis `a, b` of `E ∩ W` and the direction `d + mu c` of `E`.
pub fn plane_frame(ctx: &Context, e: ProjPlane) -> ([Elem; 2], Elem) {
    let ft = ctx.ft();
    let proj = &ctx.proj;
    let zl = proj.meet_w(e).expect("E != W");
    let zb = ctx
        .amb
        .canonical_w_basis(&[proj.elem(zl.points()[0]), proj.elem(zl.points()[1])])
        .expect("Z in W");
    let z = [zb[0], zb[1]];
    let c = *ft.w().iter().find(|&&x| !x.is_zero() && !zl.contains(ft.point(x))).expect("W != Z");
    let ep = proj.plane_points(e);
    let dir = (0..ft.q() as u8)
        .map(|mu| ft.add(ft.d(), ft.smul(mu, c)))
        .find(|&v| ep.binary_search(&ft.point(v)).is_ok())
        .expect("unique mu");
    (z, dir)
}

pub fn new_plane(ctx: &Context, r: ProjPoint, e: ProjPlane, lambda: u8) -> NewPlane {
    let ft = ctx.ft();
    let (z, dir) = plane_frame(ctx, e);
    let p = ft.smul(lambda, dir);
    let den = ft.delta(z[0], z[1]);
    let rr = ctx.proj.elem(r);
    let g = z.map(|x| ft.mul(rr, ft.div(ft.delta(p, x), den)));
    NewPlane { r, e, lambda, z, plane: n_plane(ctx, z, g, rr) }
}

/// The `(q-1)` planes at `P_r` parametrized by `E`.
pub fn new_planes_for(ctx: &Context, r: ProjPoint, e: ProjPlane) -> Vec<NewPlane> {
    (1..ctx.q() as u8).map(|l| new_plane(ctx, r, e, l)).collect()
}

/// All `(q^4 - q)` new planes through `P_r`.
pub fn new_planes_at(ctx: &Context, r: ProjPoint) -> Vec<NewPlane> {
    (1..ctx.n()).flat_map(|e| new_planes_for(ctx, r, ProjPlane(e))).collect()
}

/// The full set `N`.
pub fn enumerate_n(ctx: &Context) -> Vec<NewPlane> {
    (0..ctx.n()).flat_map(|r| new_planes_at(ctx, r)).collect()
}

/// Pairs of new planes through `P_r` that share a line.
pub fn collisions_at(ctx: &Context, r: ProjPoint) -> Vec<(NewPlane, NewPlane)> {
    let at = new_planes_at(ctx, r);
    let mut out = Vec::new();
    for i in 0..at.len() {
        for j in i + 1..at.len() {
            if at[i].plane.intersect_dim(&at[j].plane).expect("same ambient") == 2 {
                out.push((at[i].clone(), at[j].clone()));
            }
        }
    }
    out
}

/// Parametrizing planes sharing one value of `sigma`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CollisionClass {
    pub sigma: ProjPoint,
    pub members: Vec<ProjPlane>,
}

/// Classes of planes `E != W` by `sigma(E)`, sorted by `sigma`; the same at
/// every point of `S`.
pub fn collision_classes(proj: &Projective) -> Vec<CollisionClass> {
    let mut m: BTreeMap<ProjPoint, Vec<ProjPlane>> = BTreeMap::new();
    for e in 1..proj.n() {
        m.entry(proj.sigma(ProjPlane(e)).expect("E != W")).or_default().push(ProjPlane(e));
    }
    m.into_iter().map(|(sigma, members)| CollisionClass { sigma, members }).collect()
}

/// Members of the class `sigma = F_q`, i.e. the planes `a^(q+1) W != W`.
pub fn trivial_class(proj: &Projective) -> Vec<ProjPlane> {
    collision_classes(proj).into_iter().find(|c| c.sigma == 0).map(|c| c.members).unwrap_or_default()
}

/// `L0` together with the new planes of all singleton classes at all points.
pub fn build_c0(ctx: &Context) -> Result<SubspaceCode, ConstructionError> {
    let (l0, _) = expurgate(ctx)?;
    let singles: Vec<ProjPlane> = collision_classes(&ctx.proj)
        .into_iter()
        .filter(|c| c.members.len() == 1)
        .map(|c| c.members[0])
        .collect();
    let extra: Vec<SubspaceRREF> = (0..ctx.n())
        .flat_map(|r| singles.iter().flat_map(move |&e| new_planes_for(ctx, r, e)))
        .map(|np| np.plane)
        .collect();
    Ok(l0.extended(extra, "C0")?)
}

/// New planes selected from the trivial class: `choice[r]` indexes its
/// members at `P_r`.
pub fn trivial_class_planes(ctx: &Context, choice: &[usize]) -> Result<Vec<NewPlane>, ConstructionError> {
    let class = trivial_class(&ctx.proj);
    if choice.len() != ctx.n() as usize {
        return Err(ConstructionError::ChoiceLength { got: choice.len(), expected: ctx.n() as usize });
    }
    let mut out = Vec::new();
    for (r, &i) in choice.iter().enumerate() {
        let e = *class.get(i).ok_or(ConstructionError::Choice { point: r as u32, index: i, size: class.len() })?;
        out.extend(new_planes_for(ctx, r as u32, e));
    }
    Ok(out)
}

/// `C0` plus one trivial-class member per point.
pub fn build_c(ctx: &Context, choice: Option<&[usize]>) -> Result<SubspaceCode, ConstructionError> {
    let default = vec![0; ctx.n() as usize];
    let extra = trivial_class_planes(ctx, choice.unwrap_or(&default))?;
    Ok(build_c0(ctx)?.extended(extra.into_iter().map(|n| n.plane), "C")?)
}

/// The `q^2+1` planes `F_q epsilon x F_{q^2} r`.
pub fn short_orbit_planes(ctx: &Context) -> Vec<SubspaceRREF> {
    let eps = ctx.ft().epsilon();
    let table = ctx.proj.line_orbits();
    table.short_orbit().members.iter().map(|l| ctx.join((eps, Elem::ZERO), l)).collect()
}

/// `C` extended by the short-orbit planes.
pub fn build_c_ext(ctx: &Context, choice: Option<&[usize]>) -> Result<SubspaceCode, ConstructionError> {
    Ok(build_c(ctx, choice)?.extended(short_orbit_planes(ctx), "C-ext")?)
}

/// Checks that for every 2-subspace `Z` the maps `G1` split into cosets
/// `f + D(Z, P)` matching the given new planes, each coset once.
pub fn verify_coset_decomposition(ctx: &Context, g1: &[LinearizedMap], planes: &[SubspaceRREF]) -> Result<(), String> {
    let ft = ctx.ft();
    let g1set: HashSet<LinearizedMap> = g1.iter().copied().collect();
    let all_g = MapFamily::G.members(ft);
    for z in ctx.amb.w_lines() {
        let by_restriction: HashMap<(Elem, Elem), LinearizedMap> =
            all_g.iter().map(|f| ((f.eval(ft, z[0]), f.eval(ft, z[1])), *f)).collect();
        let mut used = HashSet::new();
        for p in planes {
            let d = ctx.amb.decompose(p);
            if d.t.len() != 1 || ctx.amb.canonical_w_basis(&d.z).ok() != Some(z.to_vec()) {
                continue;
            }
            let r = d.t[0];
            let q = ft.q() as u8;
            for s in 0..q {
                for t in 0..q {
                    let key = (ft.add(d.f[0], ft.smul(s, r)), ft.add(d.f[1], ft.smul(t, r)));
                    let f = by_restriction[&key];
                    if !g1set.contains(&f) {
                        return Err(format!("coset over {z:?} leaves G1"));
                    }
                    if !used.insert(f) {
                        return Err(format!("cosets over {z:?} overlap"));
                    }
                }
            }
        }
        if used.len() != g1.len() {
            return Err(format!("cosets over {z:?} cover {} of {} maps", used.len(), g1.len()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{check_spectrum_system, spectrum, verify_t2};

    #[test]
    fn packings() {
        for q in [2, 3] {
            let ctx = Context::new(q).unwrap();
            let p = find_line_packing(&ctx.proj).unwrap();
            assert_eq!(p.spreads.len() as u32, q * q + q + 1);
            let which = spreads_by_w_point(&ctx, &p).unwrap();
            let mut w = which.clone();
            w.sort_unstable();
            w.dedup();
            assert_eq!(w.len(), which.len());
        }
    }

    #[test]
    fn spread_counts() {
        let proj = Context::new(2).unwrap().proj;
        assert_eq!(all_spreads(&proj, &proj.all_lines()).len(), 56);
    }

    #[test]
    fn rspace_q2() {
        let ctx = Context::new(2).unwrap();
        let c = rspace_code(&ctx).unwrap();
        assert_eq!(c.len(), 268);
        assert!(verify_t2(&c).t2_ok);
        let p = find_line_packing(&ctx.proj).unwrap();
        let a = rspace_aug_code(&ctx, &p).unwrap();
        assert_eq!(a.len(), 303);
        assert!(verify_t2(&a).t2_ok);
        let l = almrd_code(&ctx, &p).unwrap();
        assert_eq!(l.len(), 291);
        assert!(verify_t2(&l).t2_ok);
    }

    #[test]
    fn z_to_delta_injective() {
        for q in [2, 3] {
            let ctx = Context::new(q).unwrap();
            let ft = ctx.ft();
            let pts: HashSet<u32> = ctx.amb.w_lines().iter().map(|z| ft.point(ft.delta(z[0], z[1]))).collect();
            assert_eq!(pts.len() as u32, q * q + q + 1);
        }
    }

    #[test]
    fn new_planes_q2() {
        let ctx = Context::new(2).unwrap();
        let n = enumerate_n(&ctx);
        assert_eq!(n.len(), 210);
        let s = ctx.amb.special_solid();
        for np in &n {
            let meet = np.plane.intersection(&s).unwrap();
            assert_eq!(meet.dim(), 1);
            assert!(meet.contains_vector(ctx.amb.vector(Elem::ZERO, ctx.proj.elem(np.r))));
        }
        let mut planes: Vec<_> = n.iter().map(|x| x.plane.clone()).collect();
        planes.sort();
        planes.dedup();
        assert_eq!(planes.len(), 210);
        let (l0, g1) = expurgate(&ctx).unwrap();
        assert_eq!(l0.len(), 136);
        verify_coset_decomposition(&ctx, &g1, &planes).unwrap();
        let r = MapFamily::R.members(ctx.ft());
        verify_coset_decomposition(&ctx, &r, &rspace_new_planes(&ctx)).unwrap();
        let both = l0.extended(planes, "L0+N").unwrap();
        assert!(!verify_t2(&both).t2_ok);
        for r in [0, 7] {
            let c = collisions_at(&ctx, r);
            assert!(!c.is_empty());
            for (a, b) in &c {
                assert_ne!(a.e, b.e);
                assert_eq!(ctx.proj.sigma(a.e).unwrap(), ctx.proj.sigma(b.e).unwrap());
            }
        }
    }

    #[test]
    fn classes_q2() {
        let ctx = Context::new(2).unwrap();
        let cl = collision_classes(&ctx.proj);
        assert_eq!(cl.iter().filter(|c| c.members.len() == 1).count(), 10);
        assert_eq!(cl.iter().filter(|c| c.members.len() == 4).count(), 1);
        assert_eq!(trivial_class(&ctx.proj), vec![ProjPlane(3), ProjPlane(6), ProjPlane(9), ProjPlane(12)]);
    }

    #[test]
    fn codes_q2() {
        let ctx = Context::new(2).unwrap();
        let s = ctx.amb.special_solid();
        let c0 = build_c0(&ctx).unwrap();
        assert_eq!(c0.len(), 286);
        assert!(verify_t2(&c0).t2_ok);
        assert_eq!(spectrum(&c0, &s).0, [136, 150, 0, 0]);
        let c = build_c(&ctx, None).unwrap();
        assert_eq!(c.len(), 301);
        assert!(verify_t2(&c).t2_ok);
        let e = build_c_ext(&ctx, Some(&[1; 15])).unwrap();
        assert_eq!(e.len(), 306);
        assert!(verify_t2(&e).t2_ok);
        let chk = check_spectrum_system(&spectrum(&e, &s), 2);
        assert!(chk.ok && chk.slack[..3].iter().all(|&x| x > 0));
        assert!(build_c(&ctx, Some(&[4; 15])).is_err());
    }
}
