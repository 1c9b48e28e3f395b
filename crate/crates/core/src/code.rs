//! Plane subspace codes in `PG(6,q)`: storage, the `t = 2` verifier,
//! spectra with respect to solids, parameter checks and the text format.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use num_bigint::BigUint;
use rayon::prelude::*;
use thiserror::Error;

use crate::field::BaseField;
use crate::linalg::{self, combine, enumerate_subspaces, gaussian, line_key_of, unpack, SubspaceRREF};

/// Ambient dimension and plane dimension handled by the store.
pub const V: usize = 7;
pub const K: usize = 3;

#[derive(Debug, Error)]
pub enum CodeError {
    #[error("duplicate plane {0:?}")]
    Duplicate(SubspaceRREF),
    #[error("plane {0:?} is not a plane of PG(6,{1})")]
    Shape(SubspaceRREF, u32),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported field order {0}")]
    Field(u32),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Sorted, duplicate-free set of planes of `PG(6,q)` with a provenance tag.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubspaceCode {
    q: u32,
    planes: Vec<SubspaceRREF>,
    tag: String,
}

impl SubspaceCode {
    /// Builds a code, rejecting duplicates and non-planes.
    pub fn new(q: u32, mut planes: Vec<SubspaceRREF>, tag: &str) -> Result<SubspaceCode, CodeError> {
        BaseField::get(q).map_err(|_| CodeError::Field(q))?;
        if let Some(p) = planes.iter().find(|p| p.q() != q || p.n() != V || p.dim() != K) {
            return Err(CodeError::Shape(p.clone(), q));
        }
        planes.par_sort_unstable();
        if let Some(w) = planes.windows(2).find(|w| w[0] == w[1]) {
            return Err(CodeError::Duplicate(w[0].clone()));
        }
        Ok(SubspaceCode { q, planes, tag: tag.to_string() })
    }

    /// Builds a code, silently merging duplicates.
    pub fn new_dedup(q: u32, mut planes: Vec<SubspaceRREF>, tag: &str) -> Result<SubspaceCode, CodeError> {
        planes.par_sort_unstable();
        planes.dedup();
        SubspaceCode::new(q, planes, tag)
    }

    pub fn empty(q: u32, tag: &str) -> SubspaceCode {
        SubspaceCode { q, planes: Vec::new(), tag: tag.to_string() }
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn len(&self) -> usize {
        self.planes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.planes.is_empty()
    }

    pub fn planes(&self) -> &[SubspaceRREF] {
        &self.planes
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn with_tag(mut self, tag: &str) -> SubspaceCode {
        self.tag = tag.to_string();
        self
    }

    pub fn contains(&self, p: &SubspaceRREF) -> bool {
        self.planes.binary_search(p).is_ok()
    }

    /// Adds planes; fails if any is already present or repeated.
    pub fn extended(&self, extra: impl IntoIterator<Item = SubspaceRREF>, tag: &str) -> Result<SubspaceCode, CodeError> {
        let mut all = self.planes.clone();
        all.extend(extra);
        SubspaceCode::new(self.q, all, tag)
    }

    /// Removes the given planes (absent ones are ignored).
    pub fn without(&self, remove: &[SubspaceRREF], tag: &str) -> SubspaceCode {
        let mut r = remove.to_vec();
        r.sort_unstable();
        let planes = self.planes.iter().filter(|p| r.binary_search(p).is_err()).cloned().collect();
        SubspaceCode { q: self.q, planes, tag: tag.to_string() }
    }

    fn bf(&self) -> &'static BaseField {
        BaseField::get(self.q).expect("validated on construction")
    }
}

/// Packed coefficient pairs selecting the lines of a plane from its rows.
fn line_selectors(q: u32) -> Vec<[[u8; 3]; 2]> {
    linalg::coefficient_subspaces(q, K, 2)
        .into_iter()
        .map(|rows| {
            let a = unpack(rows[0], K);
            let b = unpack(rows[1], K);
            [[a[0], a[1], a[2]], [b[0], b[1], b[2]]]
        })
        .collect()
}

/// Keys of the `q^2+q+1` lines of a plane.
pub fn plane_line_keys(plane: &SubspaceRREF) -> Vec<u128> {
    let bf = plane.base();
    line_selectors(plane.q())
        .iter()
        .map(|s| line_key_of(bf, combine(bf, &s[0], plane.rows()), combine(bf, &s[1], plane.rows())))
        .collect()
}

fn line_keys_with(bf: &BaseField, sel: &[[[u8; 3]; 2]], plane: &SubspaceRREF, out: &mut Vec<u128>) {
    for s in sel {
        out.push(line_key_of(bf, combine(bf, &s[0], plane.rows()), combine(bf, &s[1], plane.rows())));
    }
}

/// Outcome of the `t = 2` check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationReport {
    pub t2_ok: bool,
    /// Two planes sharing a line, if any.
    pub violation: Option<(SubspaceRREF, SubspaceRREF)>,
    /// Number of distinct lines covered.
    pub covered_lines: usize,
    pub size: usize,
}

/// Checks that no line lies in two planes, by sorting all line keys.
pub fn verify_t2(code: &SubspaceCode) -> VerificationReport {
    let bf = code.bf();
    let sel = line_selectors(code.q);
    let mut keys: Vec<(u128, u32)> = code
        .planes
        .par_iter()
        .enumerate()
        .flat_map_iter(|(i, p)| {
            let mut v = Vec::with_capacity(sel.len());
            line_keys_with(bf, &sel, p, &mut v);
            v.into_iter().map(move |k| (k, i as u32))
        })
        .collect();
    keys.par_sort_unstable();
    let mut violation = None;
    let mut distinct = 0;
    for (j, w) in keys.iter().enumerate() {
        if j > 0 && keys[j - 1].0 == w.0 {
            if violation.is_none() {
                let a = &code.planes[keys[j - 1].1 as usize];
                let b = &code.planes[w.1 as usize];
                violation = Some((a.clone(), b.clone()));
            }
        } else {
            distinct += 1;
        }
    }
    VerificationReport { t2_ok: violation.is_none(), violation, covered_lines: distinct, size: code.len() }
}

/// Planes of `extra` that share a line with `code` or with each other.
pub fn conflicting_planes(code: &SubspaceCode, extra: &[SubspaceRREF]) -> Vec<usize> {
    let sel = line_selectors(code.q);
    let bf = code.bf();
    let mut owner: HashMap<u128, usize> = HashMap::new();
    let mut buf = Vec::new();
    for p in &code.planes {
        buf.clear();
        line_keys_with(bf, &sel, p, &mut buf);
        for &k in &buf {
            owner.insert(k, usize::MAX);
        }
    }
    let mut bad = Vec::new();
    for (i, p) in extra.iter().enumerate() {
        buf.clear();
        line_keys_with(bf, &sel, p, &mut buf);
        if buf.iter().any(|k| owner.contains_key(k)) {
            bad.push(i);
        }
        for &k in &buf {
            owner.entry(k).or_insert(i);
        }
    }
    bad
}

/// Quadratic oracle: all pairwise intersections have dimension at most one.
pub fn verify_t2_pairwise(code: &SubspaceCode) -> bool {
    let p = &code.planes;
    (0..p.len()).into_par_iter().all(|i| (i + 1..p.len()).all(|j| p[i].intersect_dim(&p[j]).unwrap() <= 1))
}

/// Counts `alpha_i = #{E : dim(E ∩ S) = i}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Spectrum(pub [u64; 4]);

impl Spectrum {
    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }
}

impl std::fmt::Display for Spectrum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let a = self.0;
        write!(f, "({},{},{},{})", a[0], a[1], a[2], a[3])
    }
}

/// Spectrum of a code with respect to a solid.
pub fn spectrum(code: &SubspaceCode, solid: &SubspaceRREF) -> Spectrum {
    assert_eq!(solid.dim(), 4, "spectrum needs a solid");
    let counts = code
        .planes
        .par_iter()
        .map(|p| {
            let mut c = [0u64; 4];
            c[p.intersect_dim(solid).unwrap()] += 1;
            c
        })
        .reduce(|| [0; 4], |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]);
    Spectrum(counts)
}

/// Spectrum of the set of all planes of `PG(6,q)` with respect to a solid.
pub fn plane_census(q: u32, solid: &SubspaceRREF) -> Result<Spectrum, CodeError> {
    let all = enumerate_subspaces(V, K, q).map_err(|e| CodeError::Parse { line: 0, msg: e.to_string() })?;
    let code = SubspaceCode { q, planes: all.collect(), tag: "all".into() };
    Ok(spectrum(&code, solid))
}

/// Histogram of spectra over every solid of `PG(6,q)`.
pub fn spectra_all_solids(code: &SubspaceCode) -> Result<BTreeMap<Spectrum, u64>, CodeError> {
    let solids: Vec<SubspaceRREF> = enumerate_subspaces(V, 4, code.q)
        .map_err(|e| CodeError::Parse { line: 0, msg: e.to_string() })?
        .collect();
    let hist = solids
        .par_iter()
        .map(|s| spectrum(code, s))
        .fold(BTreeMap::new, |mut m, s| {
            *m.entry(s).or_insert(0) += 1;
            m
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            a
        });
    Ok(hist)
}

/// Left-hand sides, right-hand sides and slacks of the four spectrum
/// inequalities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemCheck {
    pub lhs: [i128; 4],
    pub rhs: [i128; 4],
    pub slack: [i128; 4],
    pub ok: bool,
}

impl SystemCheck {
    pub fn equalities(&self) -> [bool; 4] {
        self.slack.map(|s| s == 0)
    }
}

pub fn check_spectrum_system(a: &Spectrum, q: u32) -> SystemCheck {
    let q = q as i128;
    let [a0, a1, a2, a3] = a.0.map(|x| x as i128);
    let g31 = q * q + q + 1;
    let g41 = q * q * q + q * q + q + 1;
    let g42 = (q * q + 1) * g31;
    let lhs = [g31 * a0 + q * q * a1, (q + 1) * a1 + (q * q + q) * a2, a2 + g31 * a3, a3];
    let rhs = [q.pow(8) * g31, q.pow(3) * g31 * g41, g42, 1];
    let slack = [rhs[0] - lhs[0], rhs[1] - lhs[1], rhs[2] - lhs[2], rhs[3] - lhs[3]];
    SystemCheck { lhs, rhs, slack, ok: slack.iter().all(|&s| s >= 0) }
}

/// Parameters forced on a `q`-analogue of the Fano plane.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QAnalogue {
    pub size: u128,
    pub planes_per_point: u128,
    pub alpha0: [u128; 4],
    pub alpha1: [u128; 4],
    pub f0: u128,
    pub f1: u128,
}

pub fn q_analogue_parameters(q: u32) -> QAnalogue {
    let q = q as u128;
    let p = |e: u32| q.pow(e);
    QAnalogue {
        size: p(8) + p(6) + p(5) + p(4) + p(3) + p(2) + 1,
        planes_per_point: p(4) + p(2) + 1,
        alpha0: [p(8) - p(7) + p(3), p(7) + p(6) + p(5) - p(3) - p(2) - q, p(4) + p(3) + 2 * p(2) + q + 1, 0],
        alpha1: [p(8) - p(7), p(7) + p(6) + p(5), p(4) + p(3) + p(2), 1],
        f0: p(12) + p(10) + p(9) + p(8) + p(7) + p(6) + p(4),
        f1: p(11) + p(10) + 2 * p(9) + 3 * p(8) + 3 * p(7) + 4 * p(6) + 4 * p(5) + 3 * p(4) + 3 * p(3) + 2 * p(2)
            + q
            + 1,
    }
}

/// One derived-design count `[v-s, t-s]_q / [k-s, t-s]_q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivedCount {
    pub s: u32,
    pub numerator: BigUint,
    pub denominator: BigUint,
    pub integral: bool,
}

/// Divisibility conditions for a `t-(v,k,1)_q` design, `s = 0..=t`.
pub fn derived_design_counts(q: u32, t: u32, k: u32, v: u32) -> Vec<DerivedCount> {
    (0..=t)
        .map(|s| {
            let numerator = gaussian(v - s, t - s, q);
            let denominator = gaussian(k - s, t - s, q);
            let integral = (&numerator % &denominator) == BigUint::from(0u32);
            DerivedCount { s, numerator, denominator, integral }
        })
        .collect()
}

pub fn derived_design_integral(q: u32, t: u32, k: u32, v: u32) -> bool {
    derived_design_counts(q, t, k, v).iter().all(|c| c.integral)
}

fn row_string(row: u64) -> String {
    unpack(row, V).iter().map(|d| char::from(b'0' + d)).collect()
}

/// Canonical text form.
pub fn format_code(code: &SubspaceCode) -> String {
    let mut s = String::new();
    writeln!(s, "subspacecode v1 q={} n={} k={} count={}", code.q, V, K, code.len()).unwrap();
    for p in &code.planes {
        let rows: Vec<String> = p.rows().iter().map(|&r| row_string(r)).collect();
        writeln!(s, "{}", rows.join(" ")).unwrap();
    }
    s
}

fn parse_header(line: &str) -> Option<(u32, usize)> {
    let mut it = line.split_whitespace();
    if it.next()? != "subspacecode" || it.next()? != "v1" {
        return None;
    }
    let mut field = |name: &str| -> Option<usize> { it.next()?.strip_prefix(name)?.parse().ok() };
    let q = field("q=")?;
    let n = field("n=")?;
    let k = field("k=")?;
    let count = field("count=")?;
    if n != V || k != K || it.next().is_some() {
        return None;
    }
    Some((u32::try_from(q).ok()?, count))
}

/// Parses the text form; the error names the offending line.
pub fn parse_code(text: &str, tag: &str) -> Result<SubspaceCode, CodeError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hl, header) = lines.next().ok_or(CodeError::Parse { line: 1, msg: "missing header".into() })?;
    let err = |line: usize, msg: &str| CodeError::Parse { line, msg: msg.to_string() };
    let (q, count) = parse_header(header).ok_or_else(|| err(hl, "malformed header"))?;
    BaseField::get(q).map_err(|_| err(hl, "unsupported field order"))?;
    let mut seen: HashMap<SubspaceRREF, usize> = HashMap::new();
    let mut planes = Vec::new();
    for (ln, l) in lines {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != K {
            return Err(err(ln, "expected three rows"));
        }
        let mut rows = Vec::with_capacity(K);
        for t in toks {
            if t.len() != V {
                return Err(err(ln, "row must have seven digits"));
            }
            let mut digits = Vec::with_capacity(V);
            for c in t.chars() {
                match c.to_digit(10) {
                    Some(d) if d < q => digits.push(d as u8),
                    _ => return Err(err(ln, &format!("digit {c:?} out of range for q={q}"))),
                }
            }
            rows.push(linalg::pack(&digits));
        }
        if !SubspaceRREF::is_rref(q, V, &rows) || rows.len() != K {
            return Err(err(ln, "rows are not a reduced row echelon form"));
        }
        let p = SubspaceRREF::from_rref_unchecked(q, V, rows);
        if let Some(first) = seen.insert(p.clone(), ln) {
            return Err(err(ln, &format!("duplicate plane (first at line {first})")));
        }
        planes.push(p);
    }
    if planes.len() != count {
        return Err(err(hl, &format!("header count {count} but {} planes", planes.len())));
    }
    SubspaceCode::new(q, planes, tag)
}

pub fn read_code(path: &Path) -> Result<SubspaceCode, CodeError> {
    let text = std::fs::read_to_string(path)?;
    parse_code(&text, &path.display().to_string())
}

pub fn write_code(code: &SubspaceCode, path: &Path) -> Result<(), CodeError> {
    std::fs::write(path, format_code(code))?;
    Ok(())
}
