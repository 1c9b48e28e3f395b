//! Extensions of `C0`: free lines and planes in the 4-flats above `S`, the
//! candidate set of free planes meeting `S` in a line, partial-spread
//! wiring, the forbidden-point tables for the binary case, and a search
//! harness over the conflict graph of all candidates.

use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::code::{plane_line_keys, CodeError, SubspaceCode};
use crate::constructions::{self, ConstructionError, Context, NewPlane};
use crate::field::Elem;
use crate::linalg::SubspaceRREF;
use crate::mis::{self, Graph};
use crate::projective::{LineOrbitTable, OrbitDecomposition, ProjError, ProjLine, ProjPoint};

#[derive(Debug, Error)]
pub enum ExtensionError {
    #[error("line does not meet S in exactly a point")]
    NotPointMeeting,
    #[error("plane does not meet S in exactly a line")]
    NotLineMeeting,
    #[error("invalid wiring: {0}")]
    Wiring(String),
    #[error("operation requires q = 2")]
    BinaryOnly,
    #[error(transparent)]
    Proj(#[from] ProjError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Construction(#[from] ConstructionError),
}

/// Ovoid index required of `delta(L')` for planes in the 4-flat over `x`.
pub fn associated_ovoid(ctx: &Context, x: ProjPoint) -> u32 {
    ctx.proj.ovoid_index(ctx.q() * x % ctx.n())
}

/// Whether a line meeting `S` in a point is free with respect to `C0`.
pub fn free_line(ctx: &Context, l: &SubspaceRREF) -> Result<bool, ExtensionError> {
    let d = ctx.amb.decompose(l);
    if l.dim() != 2 || d.z.len() != 1 {
        return Err(ExtensionError::NotPointMeeting);
    }
    let ft = ctx.ft();
    let (x, y, r) = (d.z[0], d.f[0], d.t[0]);
    if y.is_zero() || ft.point(y) == ft.point(r) {
        return Ok(true);
    }
    let lp = ctx.proj.line_of(r, y);
    Ok(ctx.proj.ovoid_index(ctx.proj.delta_line(&lp)) == associated_ovoid(ctx, ft.point(x)))
}

/// Whether a plane meeting `S` in a line is free with respect to `C0`.
pub fn free_plane(ctx: &Context, e: &SubspaceRREF) -> Result<bool, ExtensionError> {
    let d = ctx.amb.decompose(e);
    if e.dim() != 3 || d.z.len() != 1 {
        return Err(ExtensionError::NotLineMeeting);
    }
    if !d.f[0].is_zero() {
        return Ok(false);
    }
    let lp = ctx.proj.line_of(d.t[0], d.t[1]);
    Ok(ctx.proj.ovoid_index(ctx.proj.delta_line(&lp)) == associated_ovoid(ctx, ctx.ft().point(d.z[0])))
}

/// A decomposable plane `F_q x × L'`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FreePlaneCandidate {
    pub x: ProjPoint,
    pub line: ProjLine,
    /// Orbit of `L'` and its position `k` (`L' = alpha^k rep`).
    pub orbit: usize,
    pub k: u32,
    pub plane: SubspaceRREF,
}

fn candidate(ctx: &Context, table: &LineOrbitTable, x: ProjPoint, orbit: usize, k: u32) -> FreePlaneCandidate {
    let line = table.orbits[orbit].members[k as usize].clone();
    let plane = ctx.join((ctx.proj.elem(x), Elem::ZERO), &line);
    FreePlaneCandidate { x, line, orbit, k, plane }
}

fn orbit_for(table: &LineOrbitTable, ovoid: u32) -> usize {
    table.orbits.iter().position(|o| o.ovoid == ovoid).expect("one orbit per ovoid")
}

/// All free planes meeting `S` in a line.
pub fn enumerate_e(ctx: &Context) -> Vec<FreePlaneCandidate> {
    let table = ctx.proj.line_orbits();
    let mut out = Vec::new();
    for &x in ctx.proj.w_points() {
        let o = orbit_for(&table, associated_ovoid(ctx, x));
        for k in 0..table.orbits[o].members.len() as u32 {
            out.push(candidate(ctx, &table, x, o, k));
        }
    }
    out
}

/// Decompositions of the regular orbits into `q+1` partial spreads, with
/// Frobenius-paired orbits decomposed consistently.
pub fn default_decompositions(ctx: &Context, node_limit: u64) -> Result<Vec<OrbitDecomposition>, ExtensionError> {
    let table = ctx.proj.line_orbits();
    let parts = ctx.q() as usize + 1;
    (0..table.orbits.len())
        .filter(|&o| !table.orbits[o].short)
        .map(|o| Ok(ctx.proj.paired_decomposition(&table, o, parts, node_limit)?))
        .collect()
}

/// Assignment of partial spreads to the points of one ovoid section.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SectionWiring {
    pub ovoid: u32,
    pub orbit: usize,
    pub points: Vec<ProjPoint>,
    /// Index into the orbit's cocliques, per point.
    pub spread: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WiringPlan {
    /// The point `F_q epsilon`, wired to the whole short orbit.
    pub short_point: ProjPoint,
    pub sections: Vec<SectionWiring>,
}

fn sections(ctx: &Context, table: &LineOrbitTable) -> Vec<(u32, usize, Vec<ProjPoint>)> {
    (1..=ctx.q())
        .map(|j| {
            let pts: Vec<ProjPoint> =
                ctx.proj.w_points().iter().copied().filter(|&x| ctx.proj.ovoid_index(x) == j).collect();
            let o = orbit_for(table, associated_ovoid(ctx, pts[0]));
            (j, o, pts)
        })
        .collect()
}

impl WiringPlan {
    /// Points in increasing order wired to cocliques in decomposition order.
    pub fn identity(ctx: &Context) -> WiringPlan {
        let table = ctx.proj.line_orbits();
        let sections = sections(ctx, &table)
            .into_iter()
            .map(|(ovoid, orbit, points)| SectionWiring { ovoid, orbit, spread: (0..points.len()).collect(), points })
            .collect();
        WiringPlan { short_point: ctx.ft().point(ctx.ft().epsilon()), sections }
    }

    pub fn validate(&self, ctx: &Context, decomps: &[OrbitDecomposition]) -> Result<(), ExtensionError> {
        if self.short_point != ctx.ft().point(ctx.ft().epsilon()) {
            return Err(ExtensionError::Wiring("short orbit not at epsilon".into()));
        }
        for s in &self.sections {
            let d = decomps
                .iter()
                .find(|d| d.orbit == s.orbit)
                .ok_or_else(|| ExtensionError::Wiring(format!("no decomposition of orbit {}", s.orbit)))?;
            let mut seen = s.spread.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != s.points.len() || s.spread.len() != s.points.len() || seen.iter().any(|&i| i >= d.cocliques.len())
            {
                return Err(ExtensionError::Wiring(format!("section {} is not a bijection", s.ovoid)));
            }
            if s.points.iter().any(|&x| associated_ovoid(ctx, x) != ctx.proj.line_orbits().orbits[s.orbit].ovoid) {
                return Err(ExtensionError::Wiring(format!("section {} wired to the wrong orbit", s.ovoid)));
            }
        }
        Ok(())
    }
}

/// The free planes selected by a wiring: the short orbit at `epsilon` and
/// each point's partial spread.
pub fn e_planes(
    ctx: &Context,
    decomps: &[OrbitDecomposition],
    wiring: &WiringPlan,
) -> Result<Vec<FreePlaneCandidate>, ExtensionError> {
    wiring.validate(ctx, decomps)?;
    let table = ctx.proj.line_orbits();
    let short = table.orbits.iter().position(|o| o.short).expect("short orbit");
    let mut out: Vec<FreePlaneCandidate> =
        (0..table.orbits[short].members.len() as u32).map(|k| candidate(ctx, &table, wiring.short_point, short, k)).collect();
    for s in &wiring.sections {
        let d = decomps.iter().find(|d| d.orbit == s.orbit).expect("validated");
        for (&x, &j) in s.points.iter().zip(&s.spread) {
            out.extend(d.cocliques[j].iter().map(|&k| candidate(ctx, &table, x, s.orbit, k)));
        }
    }
    Ok(out)
}

/// `C0` extended by the planes selected by a wiring.
pub fn extend_by_e(
    ctx: &Context,
    c0: &SubspaceCode,
    decomps: &[OrbitDecomposition],
    wiring: &WiringPlan,
) -> Result<SubspaceCode, ExtensionError> {
    let planes = e_planes(ctx, decomps, wiring)?;
    Ok(c0.extended(planes.into_iter().map(|c| c.plane), "C0+E")?)
}

/// Position `k` of the line `L'` through the point `1` with
/// `delta(L') = F_q x^q`, inside its orbit.
pub fn pencil_offset(ctx: &Context, table: &LineOrbitTable, x: ProjPoint) -> u32 {
    let o = orbit_for(table, associated_ovoid(ctx, x));
    let target = ctx.q() * x % ctx.n();
    table.orbits[o]
        .members
        .iter()
        .position(|l| l.contains(0) && ctx.proj.delta_line(l) == target)
        .expect("delta is bijective on the pencil") as u32
}

/// Forbidden points of `S` for one ovoid section: `entries[i][j]` lists the
/// `r` for which an `N''` plane at `P_r` with `points[i]` in `Z` conflicts
/// with the planes of coclique `j` at `points[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SectionTable {
    pub orbit: usize,
    pub points: Vec<ProjPoint>,
    pub cocliques: Vec<Vec<u32>>,
    pub entries: Vec<Vec<Vec<u32>>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForbiddenTable {
    pub sections: Vec<SectionTable>,
}

impl ForbiddenTable {
    /// Rows ordered so that row `i` maps coclique `0` onto coclique `i`,
    /// which makes every array symmetric.
    pub fn new(ctx: &Context, decomps: &[OrbitDecomposition]) -> Result<ForbiddenTable, ExtensionError> {
        let table = ctx.proj.line_orbits();
        let n = ctx.n();
        let mut out = Vec::new();
        for (_, orbit, pts) in sections(ctx, &table) {
            let d = decomps
                .iter()
                .find(|d| d.orbit == orbit)
                .ok_or_else(|| ExtensionError::Wiring(format!("no decomposition of orbit {orbit}")))?;
            let sorted: Vec<Vec<u32>> = d
                .cocliques
                .iter()
                .map(|c| {
                    let mut c = c.clone();
                    c.sort_unstable();
                    c
                })
                .collect();
            let shift = |c: &[u32], k: u32| -> Vec<u32> { c.iter().map(|&i| (i + n - k) % n).collect() };
            let mut rows: Vec<Option<ProjPoint>> = vec![None; d.cocliques.len()];
            for &x in &pts {
                let k = pencil_offset(ctx, &table, x);
                let mut s = shift(&sorted[0], k);
                s.sort_unstable();
                let j = sorted
                    .iter()
                    .position(|c| *c == s)
                    .ok_or_else(|| ExtensionError::Wiring(format!("no symmetric ordering at point {x}")))?;
                if rows[j].replace(x).is_some() {
                    return Err(ExtensionError::Wiring(format!("no symmetric ordering at point {x}")));
                }
            }
            let points: Vec<ProjPoint> = rows
                .into_iter()
                .map(|x| x.ok_or_else(|| ExtensionError::Wiring("section smaller than decomposition".into())))
                .collect::<Result<_, _>>()?;
            let entries = points
                .iter()
                .map(|&x| {
                    let k = pencil_offset(ctx, &table, x);
                    d.cocliques.iter().map(|c| shift(c, k)).collect()
                })
                .collect();
            out.push(SectionTable { orbit, points, cocliques: d.cocliques.clone(), entries });
        }
        Ok(ForbiddenTable { sections: out })
    }

    /// Main-diagonal matching of rows to cocliques.
    pub fn diagonal_wiring(&self, ctx: &Context) -> WiringPlan {
        let table = ctx.proj.line_orbits();
        WiringPlan {
            short_point: ctx.ft().point(ctx.ft().epsilon()),
            sections: self
                .sections
                .iter()
                .map(|s| SectionWiring {
                    ovoid: ctx.proj.ovoid_index(s.points[0]),
                    orbit: s.orbit,
                    points: s.points.clone(),
                    spread: (0..s.points.len()).collect(),
                })
                .inspect(|s| debug_assert_eq!(table.orbits[s.orbit].ovoid, associated_ovoid(ctx, s.points[0])))
                .collect(),
        }
    }

    /// Points of `W` forbidden at `P_r` under a wiring.
    pub fn forbidden_at(&self, wiring: &WiringPlan, r: ProjPoint) -> Vec<ProjPoint> {
        let mut out = Vec::new();
        for (t, w) in self.sections.iter().zip(&wiring.sections) {
            for (&x, &j) in w.points.iter().zip(&w.spread) {
                let i = t.points.iter().position(|&p| p == x).expect("same section");
                if t.entries[i][j].contains(&r) {
                    out.push(x);
                }
            }
        }
        out.sort_unstable();
        out
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..n {
            let mut v: Vec<usize> = p.iter().map(|&j| j + usize::from(j >= i)).collect();
            v.insert(0, i);
            out.push(v);
        }
    }
    out.sort();
    out
}

/// Lines of `W` not through `epsilon`, in lexicographic order of their
/// canonical bases: the intersections `E ∩ W` of the trivial class.
pub fn passants(ctx: &Context) -> Vec<ProjLine> {
    let eps = ctx.ft().point(ctx.ft().epsilon());
    ctx.amb.w_lines().iter().map(|z| ctx.proj.line_of(z[0], z[1])).filter(|l| !l.contains(eps)).collect()
}

/// Points `P_r` at which every passant contains a forbidden point.
pub fn bad_points(ctx: &Context, table: &ForbiddenTable, wiring: &WiringPlan) -> Vec<ProjPoint> {
    let zs = passants(ctx);
    (0..ctx.n())
        .filter(|&r| {
            let f = table.forbidden_at(wiring, r);
            zs.iter().all(|z| f.iter().any(|&x| z.contains(x)))
        })
        .collect()
}

/// Transversal matching of every array with pairwise disjoint forbidden
/// sets and the fewest bad points; ties go to the lexicographically last
/// choice.
pub fn disjoint_transversal_wiring(ctx: &Context, table: &ForbiddenTable) -> Result<WiringPlan, ExtensionError> {
    let mut options: Vec<Vec<Vec<usize>>> = Vec::new();
    for t in &table.sections {
        let ok: Vec<Vec<usize>> = permutations(t.points.len())
            .into_iter()
            .filter(|p| {
                let mut all: Vec<u32> = p.iter().enumerate().flat_map(|(i, &j)| t.entries[i][j].clone()).collect();
                let len = all.len();
                all.sort_unstable();
                all.dedup();
                all.len() == len
            })
            .collect();
        if ok.is_empty() {
            return Err(ExtensionError::Wiring("no transversal with disjoint forbidden sets".into()));
        }
        options.push(ok);
    }
    let mut best: Option<(usize, WiringPlan)> = None;
    let mut idx = vec![0; options.len()];
    let base = table.diagonal_wiring(ctx);
    loop {
        let mut w = base.clone();
        for (s, (o, &i)) in w.sections.iter_mut().zip(options.iter().zip(&idx)) {
            s.spread = o[i].clone();
        }
        let bad = bad_points(ctx, table, &w).len();
        if best.as_ref().is_none_or(|(b, _)| bad <= *b) {
            best = Some((bad, w));
        }
        let mut k = options.len();
        loop {
            if k == 0 {
                return Ok(best.expect("nonempty").1);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < options[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// All planes of `N''`: the new planes parametrized by the trivial class.
pub fn n2_planes(ctx: &Context) -> Vec<NewPlane> {
    let class = constructions::trivial_class(&ctx.proj);
    (0..ctx.n())
        .flat_map(|r| class.iter().flat_map(move |&e| constructions::new_planes_for(ctx, r, e)))
        .collect()
}

/// Result of the binary matching construction.
#[derive(Clone, Debug)]
pub struct Q2Extension {
    pub code: SubspaceCode,
    pub table: ForbiddenTable,
    pub wiring: WiringPlan,
    pub e_added: usize,
    pub n2_added: Vec<NewPlane>,
    /// Points of `S` where every admissible `Z` is blocked.
    pub bad_points: Vec<ProjPoint>,
}

/// The 329-plane binary code: `C0`, the free planes wired by a disjoint
/// transversal, and one `N''` plane per point with an unblocked passant
/// `Z` (the first one).
pub fn match_and_extend_q2(ctx: &Context, c0: &SubspaceCode) -> Result<Q2Extension, ExtensionError> {
    if ctx.q() != 2 {
        return Err(ExtensionError::BinaryOnly);
    }
    let decomps = default_decompositions(ctx, u64::MAX)?;
    let table = ForbiddenTable::new(ctx, &decomps)?;
    let wiring = disjoint_transversal_wiring(ctx, &table)?;
    let e = e_planes(ctx, &decomps, &wiring)?;
    let class = constructions::trivial_class(&ctx.proj);
    let zs = passants(ctx);
    let mut n2 = Vec::new();
    let mut bad = Vec::new();
    for r in 0..ctx.n() {
        let forb = table.forbidden_at(&wiring, r);
        match zs.iter().find(|z| !forb.iter().any(|&x| z.contains(x))) {
            Some(z) => {
                let e = *class.iter().find(|&&e| ctx.proj.meet_w(e).ok().as_ref() == Some(z)).expect("tangent plane");
                n2.extend(constructions::new_planes_for(ctx, r, e));
            }
            None => bad.push(r),
        }
    }
    let code = c0
        .extended(e.iter().map(|c| c.plane.clone()), "C0-bar")?
        .extended(n2.iter().map(|n| n.plane.clone()), "C0-bar")?;
    Ok(Q2Extension { code, table, wiring, e_added: e.len(), n2_added: n2, bad_points: bad })
}

/// Candidates for extending `C0`: all of `N''` followed by all of `E`.
pub fn extension_candidates(ctx: &Context) -> Vec<SubspaceRREF> {
    n2_planes(ctx).into_iter().map(|n| n.plane).chain(enumerate_e(ctx).into_iter().map(|c| c.plane)).collect()
}

/// Simple upper bound: `C0`, `q-1` planes of `N''` per point, and the
/// largest selection of free planes meeting `S` in a line.
pub fn extension_upper_bound(ctx: &Context, c0: &SubspaceCode, decomps: &[OrbitDecomposition]) -> usize {
    let short = ctx.q() as usize * ctx.q() as usize + 1;
    let e: usize = sections(ctx, &ctx.proj.line_orbits())
        .iter()
        .map(|(_, o, pts)| {
            let d = decomps.iter().find(|d| d.orbit == *o).expect("decomposition");
            let mut sizes: Vec<usize> = d.cocliques.iter().map(Vec::len).collect();
            sizes.sort_unstable_by(|a, b| b.cmp(a));
            sizes.iter().take(pts.len()).sum::<usize>()
        })
        .sum();
    c0.len() + (ctx.q() as usize - 1) * ctx.n() as usize + short + e
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Greedy,
    GreedySwaps,
    ExactSmall,
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub seed: u64,
    pub budget: Duration,
    pub strategy: Strategy,
    /// Independent restarts run in parallel.
    pub restarts: usize,
    /// Perturbation rounds per restart; the result is reproducible when this
    /// cap, not the time budget, ends the search.
    pub max_iters: u64,
    /// Largest conflict graph handed to the exact solver.
    pub exact_threshold: usize,
    pub node_limit: u64,
}

impl Default for SearchConfig {
    fn default() -> SearchConfig {
        SearchConfig {
            seed: 0,
            budget: Duration::from_secs(3600),
            strategy: Strategy::GreedySwaps,
            restarts: 4,
            max_iters: u64::MAX,
            exact_threshold: 200,
            node_limit: 50_000_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub code: SubspaceCode,
    /// Candidate indices added to `C0`.
    pub added: Vec<usize>,
    /// Candidates compatible with `C0` (graph vertices).
    pub vertices: usize,
    pub exact: bool,
    /// Improvements of the global best: `(code size, seconds)`.
    pub log: Vec<(usize, f64)>,
}

/// Conflict graph on the candidates that are compatible with `code`; the
/// returned vector maps vertices to candidate indices.
pub fn conflict_graph(code: &SubspaceCode, candidates: &[SubspaceRREF]) -> (Vec<usize>, Graph) {
    let covered: HashSet<u128> = code.planes().iter().flat_map(plane_line_keys).collect();
    let kept: Vec<usize> = (0..candidates.len())
        .filter(|&i| plane_line_keys(&candidates[i]).iter().all(|k| !covered.contains(k)))
        .collect();
    let mut by_line: HashMap<u128, Vec<usize>> = HashMap::new();
    for (v, &i) in kept.iter().enumerate() {
        for k in plane_line_keys(&candidates[i]) {
            by_line.entry(k).or_default().push(v);
        }
    }
    let mut g = Graph::new(kept.len());
    for vs in by_line.values() {
        for a in 0..vs.len() {
            for b in a + 1..vs.len() {
                g.add_edge(vs[a], vs[b]);
            }
        }
    }
    (kept, g)
}

/// Independent set by repeatedly taking a vertex of minimum residual degree.
pub fn greedy_independent_set(g: &Graph, rng: &mut impl Rng) -> Vec<usize> {
    let n = g.len();
    let mut alive = mis::Bits::full(n);
    let mut deg: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let mut out = Vec::new();
    while !alive.is_empty() {
        let min = alive.iter().map(|v| deg[v]).min().expect("nonempty");
        let ties: Vec<usize> = alive.iter().filter(|&v| deg[v] == min).collect();
        let v = *ties.choose(rng).expect("nonempty");
        out.push(v);
        let mut gone = g.neighbors(v).and(&alive);
        gone.insert(v);
        for u in gone.iter() {
            alive.remove(u);
            for w in g.neighbors(u).and(&alive).iter() {
                deg[w] -= 1;
            }
        }
    }
    out.sort_unstable();
    out
}

struct Ils<'a> {
    g: &'a Graph,
    adj: Vec<Vec<usize>>,
    in_sol: Vec<bool>,
    tight: Vec<u32>,
    size: usize,
}

impl<'a> Ils<'a> {
    fn new(g: &'a Graph, start: &[usize]) -> Ils<'a> {
        let adj = (0..g.len()).map(|v| g.neighbors(v).iter().collect()).collect();
        let mut s = Ils { g, adj, in_sol: vec![false; g.len()], tight: vec![0; g.len()], size: 0 };
        for &v in start {
            if s.tight[v] == 0 && !s.in_sol[v] {
                s.add(v);
            }
        }
        s
    }

    fn add(&mut self, v: usize) {
        self.in_sol[v] = true;
        self.size += 1;
        for &u in &self.adj[v] {
            self.tight[u] += 1;
        }
    }

    fn remove(&mut self, v: usize) {
        self.in_sol[v] = false;
        self.size -= 1;
        for &u in &self.adj[v] {
            self.tight[u] -= 1;
        }
    }

    fn solution(&self) -> Vec<usize> {
        (0..self.g.len()).filter(|&v| self.in_sol[v]).collect()
    }

    fn fill(&mut self, rng: &mut impl Rng) {
        let mut free: Vec<usize> = (0..self.g.len()).filter(|&v| !self.in_sol[v] && self.tight[v] == 0).collect();
        free.shuffle(rng);
        for v in free {
            if self.tight[v] == 0 && !self.in_sol[v] {
                self.add(v);
            }
        }
    }

    /// Replaces one solution vertex by two, if possible.
    fn two_improve(&mut self, rng: &mut impl Rng) -> bool {
        let mut sol = self.solution();
        sol.shuffle(rng);
        for v in sol {
            let c: Vec<usize> = self.adj[v].iter().copied().filter(|&u| self.tight[u] == 1).collect();
            for (i, &a) in c.iter().enumerate() {
                if let Some(&b) = c[i + 1..].iter().find(|&&b| !self.g.adjacent(a, b)) {
                    self.remove(v);
                    self.add(a);
                    self.add(b);
                    return true;
                }
            }
        }
        false
    }

    fn local_search(&mut self, rng: &mut impl Rng) {
        self.fill(rng);
        while self.two_improve(rng) {
            self.fill(rng);
        }
    }

    fn force(&mut self, v: usize) {
        if self.in_sol[v] {
            return;
        }
        let nb: Vec<usize> = self.adj[v].iter().copied().filter(|&u| self.in_sol[u]).collect();
        for u in nb {
            self.remove(u);
        }
        self.add(v);
    }

    fn load(&mut self, set: &[usize]) {
        for v in self.solution() {
            self.remove(v);
        }
        for &v in set {
            self.add(v);
        }
    }
}

struct Progress<'a> {
    best: AtomicUsize,
    start: Instant,
    log: Mutex<Vec<(usize, f64)>>,
    base: usize,
    report: &'a (dyn Fn(usize, f64) + Sync),
}

impl Progress<'_> {
    fn offer(&self, added: usize) {
        if added <= self.best.load(Ordering::Relaxed) {
            return;
        }
        let mut log = self.log.lock().expect("log");
        if added > self.best.load(Ordering::Relaxed) {
            self.best.store(added, Ordering::Relaxed);
            let t = self.start.elapsed().as_secs_f64();
            log.push((self.base + added, t));
            (self.report)(self.base + added, t);
        }
    }
}

fn ils_run(g: &Graph, start: &[usize], seed: u64, cfg: &SearchConfig, progress: &Progress) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = Ils::new(g, start);
    s.local_search(&mut rng);
    let mut best = s.solution();
    progress.offer(best.len());
    let n = g.len();
    if n == 0 {
        return best;
    }
    let mut iter = 0u64;
    while iter < cfg.max_iters && progress.start.elapsed() < cfg.budget {
        iter += 1;
        let k = if rng.gen_bool(0.5) { 1 } else { 1 + rng.gen_range(1..=3) };
        for _ in 0..k {
            let v = rng.gen_range(0..n);
            s.force(v);
        }
        s.local_search(&mut rng);
        if s.size > best.len() {
            best = s.solution();
            progress.offer(best.len());
        } else if s.size + 2 < best.len() || (s.size < best.len() && rng.gen_bool(0.02)) {
            s.load(&best);
        }
    }
    best
}

/// Largest extension of `code` by pairwise compatible candidates that the
/// configured strategy finds; `start` planes seed the search.
pub fn search_extension(
    code: &SubspaceCode,
    candidates: &[SubspaceRREF],
    start: Option<&[SubspaceRREF]>,
    cfg: &SearchConfig,
    report: &(dyn Fn(usize, f64) + Sync),
) -> Result<SearchOutcome, ExtensionError> {
    let (kept, g) = conflict_graph(code, candidates);
    let pos: HashMap<&SubspaceRREF, usize> = kept.iter().enumerate().map(|(v, &i)| (&candidates[i], v)).collect();
    let mut seed_set: Vec<usize> = start.unwrap_or(&[]).iter().filter_map(|p| pos.get(p).copied()).collect();
    seed_set.sort_unstable();
    seed_set.dedup();
    if !g.is_independent(&seed_set) {
        return Err(ExtensionError::Wiring("seed planes conflict".into()));
    }
    let progress = Progress {
        best: AtomicUsize::new(0),
        start: Instant::now(),
        log: Mutex::new(Vec::new()),
        base: code.len(),
        report,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best = greedy_independent_set(&g, &mut rng);
    if seed_set.len() >= best.len() {
        let mut s = Ils::new(&g, &seed_set);
        s.fill(&mut rng);
        best = s.solution();
    }
    progress.offer(best.len());
    let mut exact = false;
    if cfg.strategy != Strategy::Greedy {
        let runs: Vec<Vec<usize>> = (0..cfg.restarts.max(1))
            .into_par_iter()
            .map(|i| {
                let from = if i == 0 { best.clone() } else { Vec::new() };
                ils_run(&g, &from, cfg.seed.wrapping_add(i as u64), cfg, &progress)
            })
            .collect();
        for r in runs {
            if r.len() > best.len() {
                best = r;
            }
        }
    }
    if cfg.strategy == Strategy::ExactSmall && g.len() <= cfg.exact_threshold {
        let r = mis::max_independent_set(&g, Some(&best), cfg.node_limit);
        exact = r.exact;
        if r.set.len() > best.len() {
            best = r.set;
            progress.offer(best.len());
        }
    }
    best.sort_unstable();
    let added: Vec<usize> = best.iter().map(|&v| kept[v]).collect();
    let out = code.extended(added.iter().map(|&i| candidates[i].clone()), "C0-bar")?;
    let log = progress.log.into_inner().expect("log");
    Ok(SearchOutcome { code: out, added, vertices: g.len(), exact, log })
}

/// Starting planes for the search: the wired free planes and, for the
/// binary field, the matched `N''` planes.
pub fn structured_start(ctx: &Context, c0: &SubspaceCode) -> Result<Vec<SubspaceRREF>, ExtensionError> {
    if ctx.q() == 2 {
        let e = match_and_extend_q2(ctx, c0)?;
        return Ok(e.code.planes().iter().filter(|p| !c0.contains(p)).cloned().collect());
    }
    let decomps = default_decompositions(ctx, 50_000_000)?;
    Ok(e_planes(ctx, &decomps, &WiringPlan::identity(ctx))?.into_iter().map(|c| c.plane).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::{spectrum, verify_t2};
    use crate::linalg::enumerate_subspaces;
    use crate::code::conflicting_planes;

    fn binary() -> (Context, SubspaceCode) {
        let ctx = Context::new(2).unwrap();
        let c0 = constructions::build_c0(&ctx).unwrap();
        (ctx, c0)
    }

    fn covered(c: &SubspaceCode) -> HashSet<u128> {
        c.planes().iter().flat_map(plane_line_keys).collect()
    }

    #[test]
    fn free_lines_match_coverage() {
        let (ctx, c0) = binary();
        let cov = covered(&c0);
        let s = ctx.amb.special_solid();
        let mut n = 0;
        for l in enumerate_subspaces(7, 2, 2).unwrap() {
            if l.intersect_dim(&s).unwrap() != 1 {
                assert!(free_line(&ctx, &l).is_err());
                continue;
            }
            n += 1;
            assert_eq!(free_line(&ctx, &l).unwrap(), !cov.contains(&l.line_key()));
        }
        assert_eq!(n, 840);
    }

    #[test]
    fn free_planes_match_coverage() {
        let (ctx, c0) = binary();
        let cov = covered(&c0);
        let s = ctx.amb.special_solid();
        let mut n = 0;
        for f in ctx.amb.flats_above_s(5).unwrap() {
            for e in f.subspaces(3) {
                if e.intersect_dim(&s).unwrap() != 2 {
                    continue;
                }
                n += 1;
                let brute = plane_line_keys(&e).iter().all(|k| !cov.contains(k));
                assert_eq!(free_plane(&ctx, &e).unwrap(), brute);
            }
        }
        assert_eq!(n, 980);
    }

    #[test]
    fn candidates_binary() {
        let (ctx, c0) = binary();
        let e = enumerate_e(&ctx);
        assert_eq!(e.len(), 95);
        let cov = covered(&c0);
        assert!(e.iter().all(|c| plane_line_keys(&c.plane).iter().all(|k| !cov.contains(k))));
        let eps = ctx.ft().point(ctx.ft().epsilon());
        assert_eq!(e.iter().filter(|c| c.x == eps).count(), 5);
        let table = ctx.proj.line_orbits();
        let l1 = table.locate(&ctx.proj.line(&[0, 1, 4]).unwrap()).unwrap().0;
        for x in [1, 4, 10] {
            assert!(e.iter().filter(|c| c.x == x).all(|c| c.orbit == l1));
        }
        for a in &e {
            for b in &e {
                if a.x == b.x && a != b {
                    assert_eq!(a.plane.intersect_dim(&b.plane).unwrap() == 2, a.line.meets(&b.line));
                }
            }
        }
    }

    #[test]
    fn forbidden_tables_binary() {
        let (ctx, _) = binary();
        let d = default_decompositions(&ctx, u64::MAX).unwrap();
        let t = ForbiddenTable::new(&ctx, &d).unwrap();
        let sorted = |v: &[u32]| {
            let mut v = v.to_vec();
            v.sort_unstable();
            v
        };
        let first = t.sections.iter().find(|s| s.points.contains(&10)).unwrap();
        assert_eq!(first.points, vec![10, 1, 4]);
        let want = [
            [[0, 2, 7, 9], [1, 3, 8, 10], [4, 6, 11, 13]],
            [[1, 3, 8, 10], [2, 4, 9, 11], [5, 7, 12, 14]],
            [[4, 6, 11, 13], [5, 7, 12, 14], [8, 10, 0, 2]],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(sorted(&first.entries[i][j]), sorted(&want[i][j]));
            }
        }
        let second = t.sections.iter().find(|s| s.points.contains(&5)).unwrap();
        assert_eq!(second.points, vec![5, 2, 8]);
        let want = [
            [[0, 4, 14, 3], [2, 6, 1, 5], [8, 12, 7, 11]],
            [[2, 6, 1, 5], [4, 8, 3, 7], [10, 14, 9, 13]],
            [[8, 12, 7, 11], [10, 14, 9, 13], [1, 5, 0, 4]],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(sorted(&second.entries[i][j]), sorted(&want[i][j]));
            }
        }
    }

    #[test]
    fn binary_329() {
        let (ctx, c0) = binary();
        let e = match_and_extend_q2(&ctx, &c0).unwrap();
        assert_eq!(e.code.len(), 329);
        assert_eq!(e.e_added, 29);
        assert_eq!(e.n2_added.len(), 14);
        assert_eq!(e.bad_points, vec![11]);
        assert!(verify_t2(&e.code).t2_ok);
        assert_eq!(spectrum(&e.code, &ctx.amb.special_solid()).0, [136, 164, 29, 0]);

        let d = default_decompositions(&ctx, u64::MAX).unwrap();
        let mid = extend_by_e(&ctx, &c0, &d, &e.wiring).unwrap();
        assert_eq!(mid.len(), 315);
        for r in 0..15 {
            for t in &e.table.sections {
                let f = e.table.forbidden_at(&e.wiring, r);
                assert!(f.iter().filter(|x| t.points.contains(x)).count() <= 1);
            }
        }
        assert_eq!(bad_points(&ctx, &e.table, &e.table.diagonal_wiring(&ctx)), vec![0, 2, 4]);
        let n2 = n2_planes(&ctx);
        assert_eq!(n2.len(), 60);
        for np in &n2 {
            let forb = e.table.forbidden_at(&e.wiring, np.r);
            let admissible = !forb.iter().any(|&x| ctx.proj.meet_w(np.e).unwrap().contains(x));
            let geometric = conflicting_planes(&mid, std::slice::from_ref(&np.plane)).is_empty();
            assert_eq!(admissible, geometric);
        }
    }

    #[test]
    fn exact_search_binary() {
        let (ctx, c0) = binary();
        let cands = extension_candidates(&ctx);
        assert_eq!(cands.len(), 155);
        let start = structured_start(&ctx, &c0).unwrap();
        let cfg = SearchConfig { strategy: Strategy::ExactSmall, restarts: 1, max_iters: 200, ..SearchConfig::default() };
        let out = search_extension(&c0, &cands, Some(&start), &cfg, &|_, _| {}).unwrap();
        assert_eq!(out.code.len(), 329);
        assert!(out.exact);
        assert!(verify_t2(&out.code).t2_ok);
        assert!(out.log.windows(2).all(|w| w[0].0 < w[1].0));
        let d = default_decompositions(&ctx, u64::MAX).unwrap();
        assert_eq!(extension_upper_bound(&ctx, &c0, &d), 330);
    }

    #[test]
    fn empty_candidates() {
        let (_, c0) = binary();
        let out = search_extension(&c0, &[], None, &SearchConfig::default(), &|_, _| {}).unwrap();
        assert_eq!(out.code.len(), c0.len());
        assert!(out.added.is_empty());
    }
}
