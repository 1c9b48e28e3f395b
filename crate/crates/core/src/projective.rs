//! Invariants of `PG(3,q)` realized as `F_{q^4}/F_q`: points are log classes
//! modulo `N = q^3+q^2+q+1`, planes are the multiplicative translates `aW`
//! of the trace-zero plane, and products of points give the maps `delta`.

use std::collections::HashMap;

use thiserror::Error;

use crate::field::{Elem, FieldTables};
use crate::mis::{self, Graph};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProjError {
    #[error("points {0:?} do not form a line")]
    NotALine(Vec<u32>),
    #[error("point index {0} out of range")]
    PointRange(u32),
    #[error("sigma is undefined on W itself")]
    PlaneIsW,
    #[error("operation needs a regular line orbit")]
    ShortOrbit,
    #[error("orbit index {0} out of range")]
    OrbitRange(usize),
    #[error("coclique search exceeded its node limit")]
    SearchLimit,
}

/// Log class `i` of the point `F_q alpha^i`.
pub type ProjPoint = u32;

/// A line of `PG(3,q)` as the sorted list of its `q+1` point classes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProjLine(Vec<ProjPoint>);

impl ProjLine {
    pub fn points(&self) -> &[ProjPoint] {
        &self.0
    }

    pub fn contains(&self, p: ProjPoint) -> bool {
        self.0.binary_search(&p).is_ok()
    }

    pub fn meets(&self, o: &ProjLine) -> bool {
        self.0.iter().any(|p| o.contains(*p))
    }
}

/// The plane `aW`, stored by the class of `a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProjPlane(pub ProjPoint);

/// The `q+1` ovoids `alpha^j O`, `O` the `(q+1)`-th power classes.
#[derive(Clone, Debug)]
pub struct OvoidFibration {
    pub ovoids: Vec<Vec<ProjPoint>>,
}

/// One orbit of lines under multiplication by `alpha`.
#[derive(Clone, Debug)]
pub struct LineOrbit {
    /// Lexicographically smallest member through the point `0`.
    pub rep: ProjLine,
    /// `members[k] = alpha^k rep`.
    pub members: Vec<ProjLine>,
    /// Ovoid index of `delta` of any member's class, as `delta(rep) mod (q+1)`.
    pub ovoid: u32,
    pub short: bool,
}

/// All line orbits, indexed by the ovoid they are associated with.
#[derive(Clone, Debug)]
pub struct LineOrbitTable {
    pub orbits: Vec<LineOrbit>,
    index: HashMap<ProjLine, (usize, u32)>,
}

impl LineOrbitTable {
    /// Orbit index and exponent `k` with `line = alpha^k rep`.
    pub fn locate(&self, line: &ProjLine) -> Option<(usize, u32)> {
        self.index.get(line).copied()
    }

    pub fn short_orbit(&self) -> &LineOrbit {
        self.orbits.iter().find(|o| o.short).expect("short orbit exists")
    }
}

/// Disjoint cocliques of a circulant orbit graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitDecomposition {
    pub orbit: usize,
    /// Each coclique lists exponents `k` of the members `alpha^k rep`.
    pub cocliques: Vec<Vec<u32>>,
    pub remainder: Vec<u32>,
    /// Whether the covered count is proved maximal.
    pub optimal: bool,
}

impl OrbitDecomposition {
    pub fn covered(&self) -> usize {
        self.cocliques.iter().map(Vec::len).sum()
    }
}

/// Point, line and plane invariants for one field.
#[derive(Clone, Debug)]
pub struct Projective {
    ft: FieldTables,
    n: u32,
    q: u32,
    w_points: Vec<ProjPoint>,
    w_sum: u32,
}

impl Projective {
    pub fn new(ft: &FieldTables) -> Projective {
        let n = ft.n_points();
        let mut w_points: Vec<ProjPoint> =
            ft.w().iter().filter(|x| !x.is_zero()).map(|&x| ft.point(x)).collect();
        w_points.sort_unstable();
        w_points.dedup();
        let w_sum = w_points.iter().fold(0, |s, &p| (s + p) % n);
        Projective { ft: ft.clone(), n, q: ft.q(), w_points, w_sum }
    }

    pub fn ft(&self) -> &FieldTables {
        &self.ft
    }

    /// Number of points `N`.
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    /// Canonical element `alpha^i` of a point.
    pub fn elem(&self, p: ProjPoint) -> Elem {
        self.ft.alpha_pow(p as u64)
    }

    pub fn point(&self, x: Elem) -> ProjPoint {
        self.ft.point(x)
    }

    /// Points of `W`, sorted.
    pub fn w_points(&self) -> &[ProjPoint] {
        &self.w_points
    }

    /// Points of the plane `aW`, sorted.
    pub fn plane_points(&self, e: ProjPlane) -> Vec<ProjPoint> {
        let mut v: Vec<_> = self.w_points.iter().map(|&w| (w + e.0) % self.n).collect();
        v.sort_unstable();
        v
    }

    /// Line through two distinct points.
    pub fn line_through(&self, a: ProjPoint, b: ProjPoint) -> ProjLine {
        assert!(a != b, "line through a single point");
        let x = self.elem(a);
        let y = self.elem(b);
        let mut pts = vec![a];
        for s in 0..self.q as u8 {
            pts.push(self.point(self.ft.add(self.ft.smul(s, x), y)));
        }
        pts.sort_unstable();
        ProjLine(pts)
    }

    /// Validates a point list as a line.
    pub fn line(&self, pts: &[ProjPoint]) -> Result<ProjLine, ProjError> {
        let mut v = pts.to_vec();
        v.sort_unstable();
        v.dedup();
        if let Some(&p) = v.iter().find(|&&p| p >= self.n) {
            return Err(ProjError::PointRange(p));
        }
        if v.len() != self.q as usize + 1 || self.line_through(v[0], v[1]).0 != v {
            return Err(ProjError::NotALine(pts.to_vec()));
        }
        Ok(ProjLine(v))
    }

    /// Line spanned by two independent field elements.
    pub fn line_of(&self, x: Elem, y: Elem) -> ProjLine {
        self.line_through(self.point(x), self.point(y))
    }

    /// All lines, sorted.
    pub fn all_lines(&self) -> Vec<ProjLine> {
        let mut seen: HashMap<(u32, u32), ()> = HashMap::new();
        let mut out = Vec::new();
        for a in 0..self.n {
            for b in a + 1..self.n {
                if seen.contains_key(&(a, b)) {
                    continue;
                }
                let l = self.line_through(a, b);
                for (i, &u) in l.0.iter().enumerate() {
                    for &v in &l.0[i + 1..] {
                        seen.insert((u, v), ());
                    }
                }
                out.push(l);
            }
        }
        out.sort();
        out
    }

    /// Lines contained in the plane `aW`.
    pub fn lines_in_plane(&self, e: ProjPlane) -> Vec<ProjLine> {
        let pts = self.plane_points(e);
        let mut out: Vec<ProjLine> = Vec::new();
        for (i, &a) in pts.iter().enumerate() {
            for &b in &pts[i + 1..] {
                let l = self.line_through(a, b);
                if l.0[0] == a && l.0[1] == b {
                    out.push(l);
                }
            }
        }
        out.sort();
        out
    }

    /// `alpha^k L`.
    pub fn shift(&self, l: &ProjLine, k: u32) -> ProjLine {
        let mut v: Vec<_> = l.0.iter().map(|&p| (p + k) % self.n).collect();
        v.sort_unstable();
        ProjLine(v)
    }

    /// Frobenius image `L^q`.
    pub fn frobenius_line(&self, l: &ProjLine) -> ProjLine {
        let mut v: Vec<_> = l.0.iter().map(|&p| p * self.q % self.n).collect();
        v.sort_unstable();
        ProjLine(v)
    }

    /// Class of `delta(x,y)` for any basis of `L`: the product of its points.
    pub fn delta_line(&self, l: &ProjLine) -> ProjPoint {
        l.0.iter().fold(0, |s, &p| (s + p) % self.n)
    }

    /// Product of all points of `aW`.
    pub fn delta_plane(&self, e: ProjPlane) -> ProjPoint {
        let k = (self.q * self.q + self.q + 1) % self.n;
        (k * e.0 % self.n + self.w_sum) % self.n
    }

    /// `aW ∩ W` for `aW != W`.
    pub fn meet_w(&self, e: ProjPlane) -> Result<ProjLine, ProjError> {
        if e.0 == 0 {
            return Err(ProjError::PlaneIsW);
        }
        let pts: Vec<_> = self
            .plane_points(e)
            .into_iter()
            .filter(|p| self.w_points.binary_search(p).is_ok())
            .collect();
        self.line(&pts)
    }

    /// `sigma(E) = delta(E) / delta(E ∩ W)^(q+1)`.
    pub fn sigma(&self, e: ProjPlane) -> Result<ProjPoint, ProjError> {
        let z = self.meet_w(e)?;
        let dz = self.delta_line(&z) as u64 * (self.q as u64 + 1) % self.n as u64;
        Ok(((self.delta_plane(e) as u64 + self.n as u64 - dz) % self.n as u64) as u32)
    }

    /// `sigma(E)^(q-1)`, independent of the representative.
    pub fn sigma_power(&self, e: ProjPlane) -> Result<Elem, ProjError> {
        let s = self.sigma(e)?;
        Ok(self.ft.alpha_pow(s as u64 * (self.q as u64 - 1)))
    }

    /// `1 - (a^((q-1)(q^2+1)) - 1) / (a^(q-1) - 1)` for `a` outside `F_q`.
    pub fn sigma_power_formula(&self, a: Elem) -> Option<Elem> {
        let ft = &self.ft;
        let q = self.q as u64;
        let den = ft.sub(ft.pow(a, q - 1), Elem::ONE);
        if a.is_zero() || den.is_zero() {
            return None;
        }
        let num = ft.sub(ft.pow(a, (q - 1) * (q * q + 1)), Elem::ONE);
        Some(ft.sub(Elem::ONE, ft.div(num, den)))
    }

    /// Class of `epsilon a^(-q) (a^q - a)^(q+1)` for `a` outside `F_q`.
    pub fn sigma_closed_form(&self, a: Elem) -> Option<ProjPoint> {
        let ft = &self.ft;
        let q = self.q as u64;
        let aq = ft.frobenius(a);
        let diff = ft.sub(aq, a);
        if a.is_zero() || diff.is_zero() {
            return None;
        }
        let v = ft.mul(ft.mul(ft.epsilon(), ft.inv(aq)), ft.pow(diff, q + 1));
        Some(self.point(v))
    }

    /// Index `j` of the ovoid `alpha^j O` containing `p`.
    pub fn ovoid_index(&self, p: ProjPoint) -> u32 {
        p % (self.q + 1)
    }

    pub fn ovoid_fibration(&self) -> OvoidFibration {
        let m = self.q + 1;
        OvoidFibration { ovoids: (0..m).map(|j| (j..self.n).step_by(m as usize).collect()).collect() }
    }

    /// Planes meeting `pts` in exactly one point, with that point.
    pub fn tangent_planes(&self, pts: &[ProjPoint]) -> Vec<(ProjPlane, ProjPoint)> {
        (0..self.n)
            .filter_map(|a| {
                let e = ProjPlane(a);
                let hit: Vec<_> = self.plane_points(e).into_iter().filter(|p| pts.contains(p)).collect();
                (hit.len() == 1).then(|| (e, hit[0]))
            })
            .collect()
    }

    pub fn line_orbits(&self) -> LineOrbitTable {
        let lines = self.all_lines();
        let mut index: HashMap<ProjLine, (usize, u32)> = HashMap::new();
        let mut orbits: Vec<LineOrbit> = Vec::new();
        for l in &lines {
            if index.contains_key(l) {
                continue;
            }
            let mut members = vec![l.clone()];
            loop {
                let next = self.shift(members.last().unwrap(), 1);
                if &next == l {
                    break;
                }
                members.push(next);
            }
            let len = members.len() as u32;
            let rep = members.iter().filter(|m| m.0[0] == 0).min().unwrap().clone();
            let start = members.iter().position(|m| *m == rep).unwrap();
            members.rotate_left(start);
            let slot = orbits.len();
            for (k, m) in members.iter().enumerate() {
                index.insert(m.clone(), (slot, k as u32));
            }
            let ovoid = self.ovoid_index(self.delta_line(&rep));
            orbits.push(LineOrbit { rep, members, ovoid, short: len < self.n });
        }
        orbits.sort_by_key(|o| o.ovoid);
        let remap: Vec<usize> = {
            let mut r = vec![0; orbits.len()];
            for (new, o) in orbits.iter().enumerate() {
                r[index[&o.rep].0] = new;
            }
            r
        };
        for v in index.values_mut() {
            v.0 = remap[v.0];
        }
        LineOrbitTable { orbits, index }
    }

    /// Differences of point classes on the representative: `alpha^i L` and
    /// `alpha^j L` meet iff `j - i` lies in this set.
    pub fn connection_set(&self, orbit: &LineOrbit) -> Vec<u32> {
        if orbit.short {
            return Vec::new();
        }
        let p = orbit.rep.points();
        let mut s: Vec<u32> = p
            .iter()
            .flat_map(|&a| p.iter().filter(move |&&b| b != a).map(move |&b| (a + self.n - b) % self.n))
            .collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Circulant graph on `Z_N` for a regular orbit.
    pub fn circulant_graph(&self, orbit: &LineOrbit) -> Result<Graph, ProjError> {
        if orbit.short {
            return Err(ProjError::ShortOrbit);
        }
        let n = self.n as usize;
        let mut g = Graph::new(n);
        for d in self.connection_set(orbit) {
            for i in 0..n {
                g.add_edge(i, (i + d as usize) % n);
            }
        }
        Ok(g)
    }

    /// Splits a regular orbit into `parts` disjoint cocliques covering as many
    /// members as possible; among optimal choices the lexicographically
    /// smallest tuple of maximum cocliques is returned.
    pub fn decompose_orbit(
        &self,
        table: &LineOrbitTable,
        orbit: usize,
        parts: usize,
        node_limit: u64,
    ) -> Result<OrbitDecomposition, ProjError> {
        let o = table.orbits.get(orbit).ok_or(ProjError::OrbitRange(orbit))?;
        let g = self.circulant_graph(o)?;
        let best = mis::max_independent_set(&g, None, node_limit);
        if !best.exact {
            return Err(ProjError::SearchLimit);
        }
        let alpha = best.set.len();
        let all = mis::independent_sets_of_size(&g, alpha, node_limit).ok_or(ProjError::SearchLimit)?;
        let n = self.n as usize;
        let masks: Vec<mis::Bits> = all
            .iter()
            .map(|s| {
                let mut b = mis::Bits::new(n);
                s.iter().for_each(|&i| b.insert(i));
                b
            })
            .collect();
        let mut chosen = Vec::new();
        let exact = pick_disjoint(&masks, parts, 0, &mut mis::Bits::new(n), &mut chosen);
        let cocliques: Vec<Vec<usize>> = if exact {
            chosen.iter().map(|&i| all[i].clone()).collect()
        } else {
            greedy_cocliques(&g, parts, node_limit)?
        };
        let optimal = exact || cocliques.iter().map(Vec::len).sum::<usize>() == parts * alpha;
        Ok(self.finish_decomposition(orbit, cocliques, optimal))
    }

    fn finish_decomposition(&self, orbit: usize, cocliques: Vec<Vec<usize>>, optimal: bool) -> OrbitDecomposition {
        let mut used = vec![false; self.n as usize];
        let cocliques: Vec<Vec<u32>> = cocliques
            .into_iter()
            .map(|c| {
                c.iter().for_each(|&i| used[i] = true);
                c.into_iter().map(|i| i as u32).collect()
            })
            .collect();
        let remainder = (0..self.n).filter(|&i| !used[i as usize]).collect();
        OrbitDecomposition { orbit, cocliques, remainder, optimal }
    }

    /// Image of a decomposition under Frobenius: the member `alpha^k rep` of
    /// one orbit maps to `alpha^(qk+m) rep'` in the partner orbit.
    pub fn frobenius_decomposition(&self, table: &LineOrbitTable, dec: &OrbitDecomposition) -> OrbitDecomposition {
        let rep = &table.orbits[dec.orbit].rep;
        let (target, m) = table.locate(&self.frobenius_line(rep)).expect("image is a line");
        let map = |k: u32| (k * self.q + m) % self.n;
        let mut cocliques: Vec<Vec<u32>> = dec
            .cocliques
            .iter()
            .map(|c| c.iter().map(|&k| map(k)).collect())
            .collect();
        let mut remainder: Vec<u32> = dec.remainder.iter().map(|&k| map(k)).collect();
        remainder.sort_unstable();
        for c in cocliques.iter_mut() {
            c.sort_unstable();
        }
        OrbitDecomposition { orbit: target, cocliques, remainder, optimal: dec.optimal }
    }

    /// Orbit paired with `orbit` by Frobenius.
    pub fn frobenius_partner(&self, table: &LineOrbitTable, orbit: usize) -> usize {
        table.locate(&self.frobenius_line(&table.orbits[orbit].rep)).expect("image is a line").0
    }

    /// Decomposition of `orbit` that is computed directly when its
    /// representative is lexicographically no larger than its Frobenius
    /// partner's, and transported from the partner otherwise.
    pub fn paired_decomposition(
        &self,
        table: &LineOrbitTable,
        orbit: usize,
        parts: usize,
        node_limit: u64,
    ) -> Result<OrbitDecomposition, ProjError> {
        let partner = self.frobenius_partner(table, orbit);
        if partner == orbit || table.orbits[orbit].rep <= table.orbits[partner].rep {
            self.decompose_orbit(table, orbit, parts, node_limit)
        } else {
            let d = self.decompose_orbit(table, partner, parts, node_limit)?;
            Ok(self.frobenius_decomposition(table, &d))
        }
    }
}

fn pick_disjoint(
    masks: &[mis::Bits],
    parts: usize,
    from: usize,
    used: &mut mis::Bits,
    chosen: &mut Vec<usize>,
) -> bool {
    if chosen.len() == parts {
        return true;
    }
    for i in from..masks.len() {
        if masks[i].intersects(used) {
            continue;
        }
        let saved = used.clone();
        masks[i].iter().for_each(|v| used.insert(v));
        chosen.push(i);
        if pick_disjoint(masks, parts, i + 1, used, chosen) {
            return true;
        }
        chosen.pop();
        *used = saved;
    }
    false
}

fn greedy_cocliques(g: &Graph, parts: usize, node_limit: u64) -> Result<Vec<Vec<usize>>, ProjError> {
    let n = g.len();
    let mut alive: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    for _ in 0..parts {
        if alive.is_empty() {
            break;
        }
        let mut sub = Graph::new(alive.len());
        for (i, &u) in alive.iter().enumerate() {
            for (j, &v) in alive.iter().enumerate().skip(i + 1) {
                if g.adjacent(u, v) {
                    sub.add_edge(i, j);
                }
            }
        }
        let r = mis::max_independent_set(&sub, None, node_limit);
        let size = r.set.len();
        let first = mis::independent_sets_of_size(&sub, size, node_limit)
            .and_then(|v| v.into_iter().next())
            .ok_or(ProjError::SearchLimit)?;
        let picked: Vec<usize> = first.iter().map(|&i| alive[i]).collect();
        alive.retain(|v| !picked.contains(v));
        out.push(picked);
    }
    Ok(out)
}
