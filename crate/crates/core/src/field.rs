//! Arithmetic in `F_q` and `F_{q^4}` for `q` in `{2, 3, 4, 5}`.
//!
//! Elements of `F_{q^4}` are table indices: `0` is the zero element and
//! `i > 0` stands for `alpha^(i-1)` where `alpha` is a root of the chosen
//! primitive quartic. Base-field scalars are small integers `0..q`; for
//! `q = 4` they index `F_4 = {0, 1, b, b^2}` with `b^2 = b + 1`.

use std::fmt;
use std::sync::OnceLock;

use thiserror::Error;

/// Failure to set up field tables.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("q={0} is not a prime power")]
    NotPrimePower(u32),
    #[error("q={0} is not supported (expected 2, 3, 4 or 5)")]
    Unsupported(u32),
    #[error("polynomial {0:?} is not primitive of degree 4 over F_q")]
    NotPrimitive([u8; 4]),
}

/// An element of `F_{q^4}` stored as its table index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Elem(pub u16);

impl Elem {
    pub const ZERO: Elem = Elem(0);
    pub const ONE: Elem = Elem(1);

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == 0 {
            write!(f, "0")
        } else {
            write!(f, "a^{}", self.0 - 1)
        }
    }
}

const GF4_MUL: [[u8; 4]; 4] = [[0, 0, 0, 0], [0, 1, 2, 3], [0, 2, 3, 1], [0, 3, 1, 2]];

/// Arithmetic tables of the base field `F_q`.
#[derive(Debug, Clone)]
pub struct BaseField {
    q: u8,
    p: u8,
    add: Vec<u8>,
    mul: Vec<u8>,
    neg: Vec<u8>,
    inv: Vec<u8>,
}

impl BaseField {
    fn build(q: u8) -> BaseField {
        let n = q as usize;
        let mut add = vec![0u8; n * n];
        let mut mul = vec![0u8; n * n];
        let p = if q == 4 { 2 } else { q };
        for a in 0..n {
            for b in 0..n {
                if q == 4 {
                    add[a * n + b] = (a ^ b) as u8;
                    mul[a * n + b] = GF4_MUL[a][b];
                } else {
                    add[a * n + b] = ((a + b) % n) as u8;
                    mul[a * n + b] = ((a * b) % n) as u8;
                }
            }
        }
        let mut neg = vec![0u8; n];
        let mut inv = vec![0u8; n];
        for a in 0..n {
            for b in 0..n {
                if add[a * n + b] == 0 {
                    neg[a] = b as u8;
                }
                if mul[a * n + b] == 1 {
                    inv[a] = b as u8;
                }
            }
        }
        BaseField { q, p, add, mul, neg, inv }
    }

    /// Shared tables for a supported `q`.
    pub fn get(q: u32) -> Result<&'static BaseField, FieldError> {
        static TABLES: OnceLock<Vec<BaseField>> = OnceLock::new();
        check_q(q)?;
        let all = TABLES.get_or_init(|| (2..=5).map(BaseField::build).collect());
        Ok(&all[(q - 2) as usize])
    }

    /// Field order.
    pub fn q(&self) -> u8 {
        self.q
    }

    /// Characteristic.
    pub fn p(&self) -> u8 {
        self.p
    }

    #[inline]
    pub fn add(&self, a: u8, b: u8) -> u8 {
        self.add[a as usize * self.q as usize + b as usize]
    }

    #[inline]
    pub fn sub(&self, a: u8, b: u8) -> u8 {
        self.add(a, self.neg[b as usize])
    }

    #[inline]
    pub fn mul(&self, a: u8, b: u8) -> u8 {
        self.mul[a as usize * self.q as usize + b as usize]
    }

    #[inline]
    pub fn neg(&self, a: u8) -> u8 {
        self.neg[a as usize]
    }

    /// Multiplicative inverse; `inv(0)` returns 0.
    #[inline]
    pub fn inv(&self, a: u8) -> u8 {
        self.inv[a as usize]
    }

    /// Whether addition is bitwise xor on the digit encoding.
    pub fn additive_xor(&self) -> bool {
        self.p == 2
    }
}

fn check_q(q: u32) -> Result<(), FieldError> {
    if q < 2 || !is_prime_power(q) {
        return Err(FieldError::NotPrimePower(q));
    }
    if q > 5 {
        return Err(FieldError::Unsupported(q));
    }
    Ok(())
}

fn is_prime_power(q: u32) -> bool {
    if q < 2 {
        return false;
    }
    let mut p = 2;
    while p * p <= q && !q.is_multiple_of(p) {
        p += 1;
    }
    if !q.is_multiple_of(p) {
        return true;
    }
    let mut m = q;
    while m.is_multiple_of(p) {
        m /= p;
    }
    m == 1
}

/// Full arithmetic for `F_{q^4}` together with its trace-zero plane and the
/// distinguished elements `epsilon` and `d`.
#[derive(Debug, Clone)]
pub struct FieldTables {
    q: u32,
    bf: &'static BaseField,
    modulus: [u8; 4],
    order: u32,
    coords: Vec<[u8; 4]>,
    by_code: Vec<u16>,
    add: Vec<u16>,
    neg: Vec<u16>,
    w: Vec<Elem>,
    w_basis: [Elem; 3],
    epsilon: Elem,
    d: Elem,
}

impl FieldTables {
    /// Tables with the default modulus: `x^4+x+1` for `q=2`, `x^4-x^3-1` for
    /// `q=3`, otherwise the smallest primitive quartic.
    pub fn new(q: u32) -> Result<FieldTables, FieldError> {
        Self::with_modulus(q, None)
    }

    /// Tables for `x^4 + c3 x^3 + c2 x^2 + c1 x + c0` given as `[c0, c1, c2, c3]`.
    pub fn with_modulus(q: u32, poly: Option<[u8; 4]>) -> Result<FieldTables, FieldError> {
        check_q(q)?;
        let bf = BaseField::get(q)?;
        let modulus = match poly {
            Some(c) => {
                if c.iter().any(|&v| v as u32 >= q) || power_sequence(bf, c).is_none() {
                    return Err(FieldError::NotPrimitive(c));
                }
                c
            }
            None => default_modulus(bf),
        };
        let seq = power_sequence(bf, modulus).ok_or(FieldError::NotPrimitive(modulus))?;
        Ok(Self::from_sequence(q, bf, modulus, seq))
    }

    fn from_sequence(q: u32, bf: &'static BaseField, modulus: [u8; 4], seq: Vec<[u8; 4]>) -> FieldTables {
        let order = q.pow(4);
        let mut coords = Vec::with_capacity(order as usize);
        coords.push([0u8; 4]);
        coords.extend(seq);
        let mut by_code = vec![0u16; order as usize];
        for (i, c) in coords.iter().enumerate() {
            by_code[code_of(q, c)] = i as u16;
        }
        let n = order as usize;
        let mut add = vec![0u16; n * n];
        let mut neg = vec![0u16; n];
        for a in 0..n {
            for b in 0..n {
                let mut s = [0u8; 4];
                for j in 0..4 {
                    s[j] = bf.add(coords[a][j], coords[b][j]);
                }
                add[a * n + b] = by_code[code_of(q, &s)];
            }
            let mut m = [0u8; 4];
            for j in 0..4 {
                m[j] = bf.neg(coords[a][j]);
            }
            neg[a] = by_code[code_of(q, &m)];
        }
        let mut ft = FieldTables {
            q,
            bf,
            modulus,
            order,
            coords,
            by_code,
            add,
            neg,
            w: Vec::new(),
            w_basis: [Elem::ZERO; 3],
            epsilon: Elem::ZERO,
            d: Elem::ZERO,
        };
        ft.w = (0..order as u16).map(Elem).filter(|&x| ft.trace(x) == 0).collect();
        ft.w_basis = ft.trace_kernel_basis();
        ft.epsilon = if q.is_multiple_of(2) {
            Elem::ONE
        } else {
            ft.alpha_pow((q * q * q + q * q + q).div_ceil(2) as u64)
        };
        ft.d = (1..order as u16).map(Elem).find(|&x| ft.trace(x) == 1).expect("trace is onto");
        ft
    }

    fn trace_kernel_basis(&self) -> [Elem; 3] {
        // RREF basis of the kernel of c -> sum c_j Tr(alpha^j) in power-basis coordinates.
        let bf = self.bf;
        let t: Vec<u8> = (0..4).map(|j| self.trace(self.alpha_pow(j))).collect();
        let pivot = t.iter().position(|&v| v != 0).expect("trace is nonzero");
        let inv = bf.inv(t[pivot]);
        let free: Vec<usize> = (0..4).filter(|&j| j != pivot).collect();
        let mut basis = [Elem::ZERO; 3];
        for (k, &fj) in free.iter().enumerate() {
            // e_fj - (t_fj / t_pivot) e_pivot solves the trace equation.
            let mut c = [0u8; 4];
            c[fj] = 1;
            c[pivot] = bf.neg(bf.mul(t[fj], inv));
            basis[k] = self.from_coords(c);
        }
        basis
    }

    /// Base field order `q`.
    pub fn q(&self) -> u32 {
        self.q
    }

    /// Base field tables.
    pub fn base(&self) -> &'static BaseField {
        self.bf
    }

    /// Coefficients `[c0, c1, c2, c3]` of the modulus `x^4 + c3 x^3 + ... + c0`.
    pub fn modulus(&self) -> [u8; 4] {
        self.modulus
    }

    /// `q^4`.
    pub fn order(&self) -> u32 {
        self.order
    }

    /// Number of projective points `(q^4-1)/(q-1)`.
    pub fn n_points(&self) -> u32 {
        (self.order - 1) / (self.q - 1)
    }

    /// All field elements in index order.
    pub fn elements(&self) -> impl Iterator<Item = Elem> {
        (0..self.order as u16).map(Elem)
    }

    /// Power-basis coordinates of `x` with respect to `1, alpha, alpha^2, alpha^3`.
    #[inline]
    pub fn coords(&self, x: Elem) -> [u8; 4] {
        self.coords[x.0 as usize]
    }

    /// Element with the given power-basis coordinates.
    #[inline]
    pub fn from_coords(&self, c: [u8; 4]) -> Elem {
        Elem(self.by_code[code_of(self.q, &c)])
    }

    /// Embeds a base-field scalar.
    #[inline]
    pub fn scalar(&self, s: u8) -> Elem {
        self.from_coords([s, 0, 0, 0])
    }

    /// Returns `Some(s)` if `x` lies in the base field.
    pub fn as_scalar(&self, x: Elem) -> Option<u8> {
        let c = self.coords(x);
        (c[1] == 0 && c[2] == 0 && c[3] == 0).then_some(c[0])
    }

    /// `alpha^k`.
    #[inline]
    pub fn alpha_pow(&self, k: u64) -> Elem {
        Elem((k % (self.order as u64 - 1)) as u16 + 1)
    }

    /// Discrete log base `alpha`, `None` for zero.
    #[inline]
    pub fn log(&self, x: Elem) -> Option<u32> {
        (x.0 != 0).then(|| x.0 as u32 - 1)
    }

    #[inline]
    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        Elem(self.add[a.0 as usize * self.order as usize + b.0 as usize])
    }

    #[inline]
    pub fn neg(&self, a: Elem) -> Elem {
        Elem(self.neg[a.0 as usize])
    }

    #[inline]
    pub fn sub(&self, a: Elem, b: Elem) -> Elem {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        if a.0 == 0 || b.0 == 0 {
            return Elem::ZERO;
        }
        let m = self.order - 1;
        Elem((((a.0 as u32 - 1) + (b.0 as u32 - 1)) % m) as u16 + 1)
    }

    /// Multiplicative inverse. Panics on zero.
    #[inline]
    pub fn inv(&self, a: Elem) -> Elem {
        assert!(a.0 != 0, "inverse of zero");
        let m = self.order - 1;
        Elem(((m - (a.0 as u32 - 1)) % m) as u16 + 1)
    }

    /// `a / b`. Panics if `b` is zero.
    #[inline]
    pub fn div(&self, a: Elem, b: Elem) -> Elem {
        self.mul(a, self.inv(b))
    }

    /// `a^e` with `0^0 = 1`.
    pub fn pow(&self, a: Elem, e: u64) -> Elem {
        if e == 0 {
            return Elem::ONE;
        }
        if a.0 == 0 {
            return Elem::ZERO;
        }
        let m = (self.order - 1) as u64;
        Elem((((a.0 - 1) as u64 * (e % m)) % m) as u16 + 1)
    }

    /// Scalar multiple `s * x` for `s` in `F_q`.
    #[inline]
    pub fn smul(&self, s: u8, x: Elem) -> Elem {
        self.mul(self.scalar(s), x)
    }

    /// Frobenius `x -> x^q`.
    #[inline]
    pub fn frobenius(&self, x: Elem) -> Elem {
        self.pow(x, self.q as u64)
    }

    /// `x^(q^k)`.
    pub fn frobenius_k(&self, x: Elem, k: u32) -> Elem {
        self.pow(x, (self.q as u64).pow(k % 4))
    }

    /// Absolute trace to `F_q`, as a base-field scalar.
    pub fn trace(&self, x: Elem) -> u8 {
        let mut s = Elem::ZERO;
        let mut y = x;
        for _ in 0..4 {
            s = self.add(s, y);
            y = self.frobenius(y);
        }
        self.as_scalar(s).expect("trace lies in F_q")
    }

    /// `delta(x, y) = x y^q - x^q y`.
    #[inline]
    pub fn delta(&self, x: Elem, y: Elem) -> Elem {
        self.sub(self.mul(x, self.frobenius(y)), self.mul(self.frobenius(x), y))
    }

    /// The trace-zero plane `W`, sorted by index.
    pub fn w(&self) -> &[Elem] {
        &self.w
    }

    /// Whether `x` has trace zero.
    pub fn in_w(&self, x: Elem) -> bool {
        self.trace(x) == 0
    }

    /// RREF basis of `W` in power-basis coordinates.
    pub fn w_basis(&self) -> [Elem; 3] {
        self.w_basis
    }

    /// The element with `epsilon^q = -epsilon`: `1` for even `q`, else `alpha^(N/2)`.
    pub fn epsilon(&self) -> Elem {
        self.epsilon
    }

    /// Smallest power of `alpha` with trace one.
    pub fn d(&self) -> Elem {
        self.d
    }

    /// Projective point of a nonzero element, as its log class modulo `N`.
    #[inline]
    pub fn point(&self, x: Elem) -> u32 {
        (x.0 as u32 - 1) % self.n_points()
    }

    /// `F_q`-linear combination `sum c_i v_i`.
    pub fn combine(&self, coeffs: &[u8], vs: &[Elem]) -> Elem {
        coeffs
            .iter()
            .zip(vs)
            .fold(Elem::ZERO, |acc, (&c, &v)| self.add(acc, self.smul(c, v)))
    }
}

fn code_of(q: u32, c: &[u8; 4]) -> usize {
    let q = q as usize;
    c[0] as usize + q * (c[1] as usize + q * (c[2] as usize + q * c[3] as usize))
}

/// Powers `x^0, x^1, ...` modulo the quartic, or `None` if `x` does not have
/// order `q^4 - 1`.
fn power_sequence(bf: &BaseField, c: [u8; 4]) -> Option<Vec<[u8; 4]>> {
    if c[0] == 0 {
        return None;
    }
    let q = bf.q() as usize;
    let m = q.pow(4) - 1;
    let mut seq = Vec::with_capacity(m);
    let mut v = [1u8, 0, 0, 0];
    for i in 0..m {
        if i > 0 && v == [1, 0, 0, 0] {
            return None;
        }
        seq.push(v);
        let top = v[3];
        let shifted = [0, v[0], v[1], v[2]];
        for j in 0..4 {
            v[j] = bf.sub(shifted[j], bf.mul(top, c[j]));
        }
    }
    (v == [1, 0, 0, 0]).then_some(seq)
}

fn default_modulus(bf: &BaseField) -> [u8; 4] {
    match bf.q() {
        2 => [1, 1, 0, 0],
        3 => [2, 0, 0, 2],
        q => {
            let q = q as usize;
            (0..q.pow(4))
                .map(|code| {
                    // Enumerate in lexicographic order of (c3, c2, c1, c0).
                    let mut c = [0u8; 4];
                    let mut r = code;
                    for j in 0..4 {
                        c[j] = (r % q) as u8;
                        r /= q;
                    }
                    c
                })
                .find(|&c| power_sequence(bf, c).is_some())
                .expect("primitive quartic exists")
        }
    }
}

/// Whether `c` (as `[c0, c1, c2, c3]`) is a primitive quartic over `F_q`.
pub fn is_primitive(q: u32, c: [u8; 4]) -> Result<bool, FieldError> {
    let bf = BaseField::get(q)?;
    Ok(c.iter().all(|&v| (v as u32) < q) && power_sequence(bf, c).is_some())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w_logs(ft: &FieldTables) -> Vec<u32> {
        let mut v: Vec<u32> = ft.w().iter().filter(|x| !x.is_zero()).map(|&x| ft.point(x)).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    #[test]
    fn rejects_bad_q() {
        assert_eq!(FieldTables::new(6).unwrap_err(), FieldError::NotPrimePower(6));
        assert_eq!(FieldTables::new(1).unwrap_err(), FieldError::NotPrimePower(1));
        assert_eq!(FieldTables::new(7).unwrap_err(), FieldError::Unsupported(7));
        assert_eq!(FieldTables::new(8).unwrap_err(), FieldError::Unsupported(8));
    }

    #[test]
    fn rejects_non_primitive_override() {
        // x^4 + x^3 + x^2 + x + 1 divides x^5 - 1.
        assert!(matches!(
            FieldTables::with_modulus(2, Some([1, 1, 1, 1])),
            Err(FieldError::NotPrimitive(_))
        ));
        // Reducible: x^4 + 1 = (x+1)^4.
        assert!(FieldTables::with_modulus(2, Some([1, 0, 0, 0])).is_err());
        assert!(FieldTables::with_modulus(3, Some([3, 0, 0, 0])).is_err());
        assert!(FieldTables::with_modulus(2, Some([1, 0, 0, 1])).is_ok());
    }

    #[test]
    fn reference_w_points() {
        assert_eq!(w_logs(&FieldTables::new(2).unwrap()), vec![0, 1, 2, 4, 5, 8, 10]);
        assert_eq!(
            w_logs(&FieldTables::new(3).unwrap()),
            vec![5, 13, 15, 20, 22, 25, 26, 31, 34, 35, 37, 38, 39]
        );
    }

    #[test]
    fn epsilon_values() {
        let f2 = FieldTables::new(2).unwrap();
        assert_eq!(f2.epsilon(), Elem::ONE);
        let f3 = FieldTables::new(3).unwrap();
        assert_eq!(f3.epsilon(), f3.alpha_pow(20));
        // Brute-force scan for eps^2 = -1 outside F_3.
        let found: Vec<u32> = f3
            .elements()
            .filter(|&x| !x.is_zero() && f3.as_scalar(x).is_none())
            .filter(|&x| f3.mul(x, x) == f3.neg(Elem::ONE))
            .map(|x| f3.point(x))
            .collect();
        assert!(found.iter().all(|&p| p == 20));
    }

    #[test]
    fn table_consistency_all_q() {
        for q in 2..=5 {
            let ft = FieldTables::new(q).unwrap();
            assert_eq!(ft.w().len() as u32, q * q * q);
            let eps = ft.epsilon();
            assert!(!eps.is_zero());
            assert_eq!(ft.frobenius(eps), ft.neg(eps));
            assert_eq!(ft.trace(ft.d()), 1);
            for x in ft.elements() {
                assert_eq!(ft.frobenius_k(x, 4), x);
                let mut f = x;
                for _ in 0..4 {
                    f = ft.frobenius(f);
                }
                assert_eq!(f, x);
                if !x.is_zero() {
                    assert_eq!(ft.alpha_pow(ft.log(x).unwrap() as u64), x);
                    assert_eq!(ft.mul(x, ft.inv(x)), Elem::ONE);
                }
            }
            for b in ft.w_basis() {
                assert!(ft.in_w(b));
            }
        }
    }

    #[test]
    fn multiplication_matches_polynomial_arithmetic() {
        for q in 2..=5 {
            let ft = FieldTables::new(q).unwrap();
            let bf = ft.base();
            let c = ft.modulus();
            // alpha^4 = -(c0 + c1 alpha + c2 alpha^2 + c3 alpha^3).
            let a4 = ft.alpha_pow(4);
            let expect = [bf.neg(c[0]), bf.neg(c[1]), bf.neg(c[2]), bf.neg(c[3])];
            assert_eq!(ft.coords(a4), expect);
            // Distributivity on a sample.
            for (i, x) in ft.elements().enumerate().step_by(7) {
                for y in ft.elements().skip(i % 5).step_by(11) {
                    let z = ft.alpha_pow(3);
                    assert_eq!(ft.mul(ft.add(x, y), z), ft.add(ft.mul(x, z), ft.mul(y, z)));
                }
            }
        }
    }

    #[test]
    fn default_moduli() {
        assert_eq!(FieldTables::new(2).unwrap().modulus(), [1, 1, 0, 0]);
        assert_eq!(FieldTables::new(3).unwrap().modulus(), [2, 0, 0, 2]);
        for q in [4, 5] {
            let ft = FieldTables::new(q).unwrap();
            assert!(is_primitive(q, ft.modulus()).unwrap());
        }
    }

    #[test]
    fn frobenius_examples() {
        let f2 = FieldTables::new(2).unwrap();
        assert_eq!(f2.frobenius(Elem::ZERO), Elem::ZERO);
        assert_eq!(f2.frobenius(f2.alpha_pow(1)), f2.alpha_pow(2));
        assert_eq!(f2.trace(Elem::ZERO), 0);
        assert_eq!(f2.trace(f2.alpha_pow(1)), 0);
        let f3 = FieldTables::new(3).unwrap();
        assert_eq!(f3.trace(f3.alpha_pow(20)), 0);
    }

    #[test]
    fn delta_examples() {
        let f2 = FieldTables::new(2).unwrap();
        for x in f2.elements() {
            assert_eq!(f2.delta(x, x), Elem::ZERO);
        }
        assert_eq!(f2.point(f2.delta(Elem::ONE, f2.alpha_pow(1))), 5);
    }

    #[test]
    fn delta_image_is_rotated_w() {
        for q in [2, 3] {
            let ft = FieldTables::new(q).unwrap();
            for x in ft.elements().skip(1) {
                let mut img: Vec<Elem> = ft.elements().map(|y| ft.delta(x, y)).collect();
                img.sort_unstable();
                img.dedup();
                let xq1 = ft.pow(x, q as u64 + 1);
                let mut rot: Vec<Elem> = ft.w().iter().map(|&w| ft.mul(xq1, w)).collect();
                rot.sort_unstable();
                assert_eq!(img, rot);
            }
        }
    }

    #[test]
    fn epsilon_is_unique_order_two_class() {
        for q in [3, 5] {
            let ft = FieldTables::new(q).unwrap();
            let n = ft.n_points();
            let eps = ft.point(ft.epsilon());
            let classes: Vec<u32> = (1..n).filter(|&i| (2 * i) % n == 0).collect();
            assert_eq!(classes, vec![eps]);
            assert_eq!(ft.pow(ft.epsilon(), q as u64 - 1), ft.neg(Elem::ONE));
        }
    }

    #[test]
    fn eps_twisted_delta_in_w() {
        for q in [2, 3] {
            let ft = FieldTables::new(q).unwrap();
            let q3 = (q as u64).pow(3);
            for &a in ft.w() {
                for &b in ft.w() {
                    let dl = ft.pow(ft.delta(a, b), q as u64 + 1);
                    let v = ft.mul(ft.mul(ft.epsilon(), ft.pow(a, q3)), dl);
                    assert!(ft.in_w(v));
                }
            }
        }
    }
}
