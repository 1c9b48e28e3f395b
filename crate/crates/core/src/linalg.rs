//! Subspaces of `F_q^n` (`n <= 16`) in canonical reduced row-echelon form.
//!
//! A row is packed into a `u64` with four bits per coordinate; coordinate `j`
//! (0-based) occupies bits `(15 - j) * 4 ..`. Integer order on packed rows is
//! therefore lexicographic order on digit vectors.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use thiserror::Error;

use crate::field::{BaseField, FieldError};

/// Largest supported ambient dimension.
pub const MAX_N: usize = 16;

/// Enumeration size limit for [`enumerate_subspaces`].
pub const ENUM_GUARD: u128 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("row {row} has length {len}, expected {expected}")]
    RowLength { row: usize, len: usize, expected: usize },
    #[error("ambient dimension {0} exceeds {MAX_N}")]
    TooLarge(usize),
    #[error("digit {digit} out of range for q={q}")]
    Digit { digit: u8, q: u32 },
    #[error("subspaces live in different ambient spaces")]
    Mismatch,
    #[error("enumeration of [{n} {k}]_{q} exceeds the size guard")]
    Guard { n: usize, k: usize, q: u32 },
    #[error("invalid dimensions n={n}, k={k}")]
    Dimensions { n: usize, k: usize },
}

#[inline]
pub fn digit(row: u64, j: usize) -> u8 {
    ((row >> ((15 - j) * 4)) & 0xf) as u8
}

#[inline]
fn with_digit(row: u64, j: usize, v: u8) -> u64 {
    let sh = (15 - j) * 4;
    (row & !(0xf << sh)) | ((v as u64) << sh)
}

/// Packs a digit vector.
pub fn pack(digits: &[u8]) -> u64 {
    digits.iter().enumerate().fold(0u64, |r, (j, &d)| with_digit(r, j, d))
}

/// Unpacks the first `n` digits.
pub fn unpack(row: u64, n: usize) -> Vec<u8> {
    (0..n).map(|j| digit(row, j)).collect()
}

/// Index of the first nonzero coordinate.
#[inline]
pub fn leading(row: u64) -> Option<usize> {
    (row != 0).then(|| (row.leading_zeros() / 4) as usize)
}

/// `a + s * b`.
#[inline]
pub fn axpy(bf: &BaseField, a: u64, s: u8, b: u64) -> u64 {
    match (bf.q(), s) {
        (_, 0) => a,
        (2, _) => a ^ b,
        (_, 1) if bf.additive_xor() => a ^ b,
        _ if bf.additive_xor() => a ^ scale(bf, s, b),
        _ => {
            let mut out = 0u64;
            let mut x = a;
            let mut y = b;
            let mut sh = 0;
            while x | y != 0 {
                let d = bf.add((x & 0xf) as u8, bf.mul(s, (y & 0xf) as u8));
                out |= (d as u64) << sh;
                x >>= 4;
                y >>= 4;
                sh += 4;
            }
            out
        }
    }
}

/// `s * a`.
#[inline]
pub fn scale(bf: &BaseField, s: u8, a: u64) -> u64 {
    match s {
        0 => 0,
        1 => a,
        _ => {
            let mut out = 0u64;
            let mut x = a;
            let mut sh = 0;
            while x != 0 {
                out |= (bf.mul(s, (x & 0xf) as u8) as u64) << sh;
                x >>= 4;
                sh += 4;
            }
            out
        }
    }
}

/// Linear combination of packed rows.
pub fn combine(bf: &BaseField, coeffs: &[u8], rows: &[u64]) -> u64 {
    coeffs.iter().zip(rows).fold(0, |acc, (&c, &r)| axpy(bf, acc, c, r))
}

/// Reduces packed rows in place to RREF and returns the rank.
pub fn reduce(bf: &BaseField, rows: &mut Vec<u64>) -> usize {
    let mut r = 0;
    for col in 0..MAX_N {
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).find(|&i| digit(rows[i], col) != 0) else {
            continue;
        };
        rows.swap(r, p);
        let lead = digit(rows[r], col);
        if lead != 1 {
            rows[r] = scale(bf, bf.inv(lead), rows[r]);
        }
        let piv = rows[r];
        for i in 0..rows.len() {
            if i != r {
                let v = digit(rows[i], col);
                if v != 0 {
                    rows[i] = axpy(bf, rows[i], bf.neg(v), piv);
                }
            }
        }
        r += 1;
    }
    rows.truncate(r);
    r
}

/// Rank of packed rows.
pub fn rank(bf: &BaseField, rows: &[u64]) -> usize {
    let mut v = rows.to_vec();
    reduce(bf, &mut v)
}

/// A subspace of `F_q^n` in canonical RREF. Equality is equality of subspaces
/// and ordering is lexicographic on the RREF rows.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SubspaceRREF {
    q: u8,
    n: u8,
    rows: Vec<u64>,
}

impl Ord for SubspaceRREF {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.q, self.n, self.rows.len(), &self.rows).cmp(&(other.q, other.n, other.rows.len(), &other.rows))
    }
}

impl PartialOrd for SubspaceRREF {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for SubspaceRREF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<")?;
        for (i, &r) in self.rows.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            for d in unpack(r, self.n as usize) {
                write!(f, "{d}")?;
            }
        }
        write!(f, ">")
    }
}

impl SubspaceRREF {
    /// Row space of the given digit vectors.
    pub fn from_digit_rows(q: u32, n: usize, rows: &[Vec<u8>]) -> Result<SubspaceRREF, LinalgError> {
        if n > MAX_N {
            return Err(LinalgError::TooLarge(n));
        }
        let bf = BaseField::get(q)?;
        let mut packed = Vec::with_capacity(rows.len());
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(LinalgError::RowLength { row: i, len: r.len(), expected: n });
            }
            if let Some(&d) = r.iter().find(|&&d| d as u32 >= q) {
                return Err(LinalgError::Digit { digit: d, q });
            }
            packed.push(pack(r));
        }
        reduce(bf, &mut packed);
        Ok(SubspaceRREF { q: q as u8, n: n as u8, rows: packed })
    }

    /// Row space of packed rows whose digits are already in range.
    pub fn from_packed(bf: &BaseField, n: usize, mut rows: Vec<u64>) -> SubspaceRREF {
        debug_assert!(n <= MAX_N);
        reduce(bf, &mut rows);
        SubspaceRREF { q: bf.q(), n: n as u8, rows }
    }

    /// Wraps rows that are known to be in RREF.
    pub fn from_rref_unchecked(q: u32, n: usize, rows: Vec<u64>) -> SubspaceRREF {
        SubspaceRREF { q: q as u8, n: n as u8, rows }
    }

    /// Checks whether packed rows are a valid RREF with digits in range.
    pub fn is_rref(q: u32, n: usize, rows: &[u64]) -> bool {
        let Ok(bf) = BaseField::get(q) else { return false };
        if rows.iter().any(|&r| r != 0 && (r.trailing_zeros() / 4) < (16 - n) as u32) {
            return false;
        }
        if rows.iter().any(|&r| unpack(r, n).iter().any(|&d| d as u32 >= q)) {
            return false;
        }
        let mut copy = rows.to_vec();
        reduce(bf, &mut copy);
        copy.as_slice() == rows
    }

    pub fn q(&self) -> u32 {
        self.q as u32
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[u64] {
        &self.rows
    }

    pub fn digit_rows(&self) -> Vec<Vec<u8>> {
        self.rows.iter().map(|&r| unpack(r, self.n())).collect()
    }

    /// Pivot columns.
    pub fn pivots(&self) -> Vec<usize> {
        self.rows.iter().map(|&r| leading(r).expect("nonzero row")).collect()
    }

    pub fn base(&self) -> &'static BaseField {
        BaseField::get(self.q()).expect("validated at construction")
    }

    fn check(&self, other: &SubspaceRREF) -> Result<(), LinalgError> {
        if self.q != other.q || self.n != other.n {
            Err(LinalgError::Mismatch)
        } else {
            Ok(())
        }
    }

    /// `dim(U + V)`.
    pub fn sum_dim(&self, other: &SubspaceRREF) -> Result<usize, LinalgError> {
        self.check(other)?;
        let mut v = self.rows.clone();
        v.extend_from_slice(&other.rows);
        Ok(reduce(self.base(), &mut v))
    }

    /// `dim(U ∩ V) = dim U + dim V - dim(U + V)`.
    pub fn intersect_dim(&self, other: &SubspaceRREF) -> Result<usize, LinalgError> {
        Ok(self.dim() + other.dim() - self.sum_dim(other)?)
    }

    /// `U + V`.
    pub fn sum(&self, other: &SubspaceRREF) -> Result<SubspaceRREF, LinalgError> {
        self.check(other)?;
        let mut v = self.rows.clone();
        v.extend_from_slice(&other.rows);
        Ok(SubspaceRREF::from_packed(self.base(), self.n(), v))
    }

    /// Whether `other ⊆ self`.
    pub fn contains(&self, other: &SubspaceRREF) -> Result<bool, LinalgError> {
        Ok(self.sum_dim(other)? == self.dim())
    }

    /// Whether the packed vector lies in the subspace.
    pub fn contains_vector(&self, v: u64) -> bool {
        let bf = self.base();
        let mut r = v;
        for &row in &self.rows {
            let c = leading(row).expect("nonzero row");
            let d = digit(r, c);
            if d != 0 {
                r = axpy(bf, r, bf.neg(d), row);
            }
        }
        r == 0
    }

    /// `U ∩ V`, computed from the left kernel of the stacked generators.
    pub fn intersection(&self, other: &SubspaceRREF) -> Result<SubspaceRREF, LinalgError> {
        self.check(other)?;
        let bf = self.base();
        let stacked: Vec<Vec<u8>> = self.digit_rows().into_iter().chain(other.digit_rows()).collect();
        let kernel = left_kernel(bf, &stacked, self.n());
        let k = self.dim();
        let gens: Vec<u64> = kernel
            .iter()
            .map(|lam| combine(bf, &lam[..k], &self.rows))
            .collect();
        Ok(SubspaceRREF::from_packed(bf, self.n(), gens))
    }

    /// All nonzero vectors normalized to leading coefficient one, i.e. the
    /// projective points of the subspace.
    pub fn points(&self) -> Vec<u64> {
        let bf = self.base();
        let q = self.q() as usize;
        let k = self.dim();
        let mut out = Vec::new();
        for lead in 0..k {
            let free = k - lead - 1;
            for code in 0..q.pow(free as u32) {
                let mut v = self.rows[lead];
                let mut c = code;
                for j in (lead + 1)..k {
                    v = axpy(bf, v, (c % q) as u8, self.rows[j]);
                    c /= q;
                }
                out.push(v);
            }
        }
        out
    }

    /// All `k`-dimensional subspaces of this subspace.
    pub fn subspaces(&self, k: usize) -> Vec<SubspaceRREF> {
        let bf = self.base();
        coefficient_subspaces(self.q(), self.dim(), k)
            .into_iter()
            .map(|coef| {
                let rows = coef
                    .iter()
                    .map(|&c| combine(bf, &unpack(c, self.dim()), &self.rows))
                    .collect();
                SubspaceRREF::from_packed(bf, self.n(), rows)
            })
            .collect()
    }

    /// Exact 128-bit key of a subspace of dimension at most two.
    pub fn line_key(&self) -> u128 {
        debug_assert!(self.dim() <= 2);
        let a = self.rows.first().copied().unwrap_or(0) as u128;
        let b = self.rows.get(1).copied().unwrap_or(0) as u128;
        (a << 64) | b
    }
}

/// Key of the span of two independent packed rows.
#[inline]
pub fn line_key_of(bf: &BaseField, a: u64, b: u64) -> u128 {
    // Two-row RREF by hand.
    let (mut x, mut y) = if a.leading_zeros() <= b.leading_zeros() { (a, b) } else { (b, a) };
    let cx = leading(x).expect("independent rows");
    let dy = digit(y, cx);
    if dy != 0 {
        let dx = digit(x, cx);
        y = axpy(bf, y, bf.neg(bf.mul(dy, bf.inv(dx))), x);
    }
    let lx = digit(x, cx);
    if lx != 1 {
        x = scale(bf, bf.inv(lx), x);
    }
    let cy = leading(y).expect("independent rows");
    let ly = digit(y, cy);
    if ly != 1 {
        y = scale(bf, bf.inv(ly), y);
    }
    let dx = digit(x, cy);
    if dx != 0 {
        x = axpy(bf, x, bf.neg(dx), y);
    }
    ((x as u128) << 64) | y as u128
}

/// Packed RREF row sets of all `k`-subspaces of `F_q^m`, in enumeration order.
pub fn coefficient_subspaces(q: u32, m: usize, k: usize) -> Vec<Vec<u64>> {
    enumerate_subspaces(m, k, q)
        .expect("small coefficient space")
        .map(|s| s.rows)
        .collect()
}

/// Left kernel of a digit matrix with `n` columns.
pub fn left_kernel(bf: &BaseField, rows: &[Vec<u8>], n: usize) -> Vec<Vec<u8>> {
    let m = rows.len();
    // Augment [A | I] in digit form and reduce column by column over the A part.
    let mut aug: Vec<Vec<u8>> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut v = r.clone();
            v.extend((0..m).map(|j| u8::from(i == j)));
            v
        })
        .collect();
    let mut r = 0;
    for col in 0..n {
        let Some(p) = (r..m).find(|&i| aug[i][col] != 0) else { continue };
        aug.swap(r, p);
        let inv = bf.inv(aug[r][col]);
        for v in aug[r].iter_mut() {
            *v = bf.mul(inv, *v);
        }
        for i in 0..m {
            if i != r && aug[i][col] != 0 {
                let f = bf.neg(aug[i][col]);
                for j in 0..n + m {
                    aug[i][j] = bf.add(aug[i][j], bf.mul(f, aug[r][j]));
                }
            }
        }
        r += 1;
    }
    aug[r..].iter().map(|v| v[n..].to_vec()).collect()
}

/// Exact Gaussian binomial `[n k]_q`.
pub fn gaussian(n: u32, k: u32, q: u32) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let q = BigUint::from(q);
    let one = BigUint::from(1u32);
    let mut num = BigUint::from(1u32);
    let mut den = BigUint::from(1u32);
    for i in 0..k {
        num *= q.pow(n - i) - &one;
        den *= q.pow(k - i) - &one;
    }
    num / den
}

/// `[n k]_q` as `u128`; panics on overflow.
pub fn gaussian_u128(n: u32, k: u32, q: u32) -> u128 {
    u128::try_from(gaussian(n, k, q)).expect("fits in u128")
}

/// Number of free entries in an RREF with the given pivot columns.
pub fn wildcards(pivots: &[usize], n: usize) -> usize {
    pivots
        .iter()
        .enumerate()
        .map(|(i, &p)| (p + 1..n).filter(|c| !pivots[i + 1..].contains(c)).count())
        .sum()
}

/// Streams all `k`-subspaces of `F_q^n` ordered by pivot set, then by free entries.
pub fn enumerate_subspaces(n: usize, k: usize, q: u32) -> Result<SubspaceIter, LinalgError> {
    if n > MAX_N {
        return Err(LinalgError::TooLarge(n));
    }
    if k > n {
        return Err(LinalgError::Dimensions { n, k });
    }
    BaseField::get(q)?;
    let binom = (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128);
    let exp = (k * (n - k)) as u32;
    let bound = (q as u128).checked_pow(exp).and_then(|v| v.checked_mul(binom));
    if bound.is_none_or(|b| b > ENUM_GUARD) {
        return Err(LinalgError::Guard { n, k, q });
    }
    let mut it = SubspaceIter {
        q,
        n,
        k,
        pivots: (0..k).collect(),
        free: Vec::new(),
        values: Vec::new(),
        done: false,
    };
    it.reset_free();
    Ok(it)
}

/// Iterator returned by [`enumerate_subspaces`].
pub struct SubspaceIter {
    q: u32,
    n: usize,
    k: usize,
    pivots: Vec<usize>,
    free: Vec<(usize, usize)>,
    values: Vec<u8>,
    done: bool,
}

impl SubspaceIter {
    fn reset_free(&mut self) {
        self.free.clear();
        for (i, &p) in self.pivots.iter().enumerate() {
            for c in p + 1..self.n {
                if !self.pivots[i + 1..].contains(&c) {
                    self.free.push((i, c));
                }
            }
        }
        self.values = vec![0; self.free.len()];
    }

    fn next_pivots(&mut self) -> bool {
        let k = self.k;
        let n = self.n;
        let mut i = k;
        while i > 0 {
            i -= 1;
            if self.pivots[i] < n - k + i {
                self.pivots[i] += 1;
                for j in i + 1..k {
                    self.pivots[j] = self.pivots[j - 1] + 1;
                }
                return true;
            }
        }
        false
    }

    fn current(&self) -> SubspaceRREF {
        let mut rows: Vec<u64> = self.pivots.iter().map(|&p| with_digit(0, p, 1)).collect();
        for (&(i, c), &v) in self.free.iter().zip(&self.values) {
            rows[i] = with_digit(rows[i], c, v);
        }
        SubspaceRREF { q: self.q as u8, n: self.n as u8, rows }
    }
}

impl Iterator for SubspaceIter {
    type Item = SubspaceRREF;

    fn next(&mut self) -> Option<SubspaceRREF> {
        if self.done {
            return None;
        }
        let out = self.current();
        // Advance the free entries like an odometer, last entry fastest.
        let mut j = self.values.len();
        loop {
            if j == 0 {
                if self.next_pivots() {
                    self.reset_free();
                } else {
                    self.done = true;
                }
                break;
            }
            j -= 1;
            if (self.values[j] as u32) + 1 < self.q {
                self.values[j] += 1;
                break;
            }
            self.values[j] = 0;
        }
        Some(out)
    }
}
