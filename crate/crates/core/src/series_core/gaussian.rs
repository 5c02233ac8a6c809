//! Integer and Gaussian-integer factorization, and the exponent-vector
//! decomposition `q = i^u · Π πₖ^{eₖ}` of a nonzero element of ℚ(i).

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::field::FieldElem;
use crate::error::{Error, Result};

const SMALL_PRIMES_LIMIT: u64 = 1 << 12;

fn small_primes() -> Vec<u64> {
    let n = SMALL_PRIMES_LIMIT as usize;
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut k = 2;
    while k * k <= n {
        if sieve[k] {
            let mut m = k * k;
            while m <= n {
                sieve[m] = false;
                m += k;
            }
        }
        k += 1;
    }
    (0..=n).filter(|&k| sieve[k]).map(|k| k as u64).collect()
}

/// Deterministic Miller–Rabin for `n < 3.3·10²⁴`, strong probable prime beyond.
pub fn is_probable_prime(n: &BigInt) -> bool {
    let two = BigInt::from(2);
    if n < &two {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41] {
        let p = BigInt::from(p);
        if n == &p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }
    let nm1 = n - 1u32;
    let s = nm1.trailing_zeros().unwrap_or(0);
    let d = &nm1 >> s;
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41] {
        let mut x = BigInt::from(a).modpow(&d, n);
        if x.is_one() || x == nm1 {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == nm1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn pollard_brent(n: &BigInt) -> BigInt {
    if n.is_even() {
        return BigInt::from(2);
    }
    let mut c = BigInt::one();
    loop {
        let f = |x: &BigInt| (x * x + &c) % n;
        let (mut x, mut y, mut g) = (BigInt::from(2), BigInt::from(2), BigInt::one());
        while g.is_one() {
            x = f(&x);
            y = f(&f(&y));
            g = (&x - &y).abs().gcd(n);
        }
        if &g != n {
            return g;
        }
        c += 1u32;
    }
}

/// Prime factorization of a positive integer, primes ascending.
pub fn factor_integer(n: &BigInt) -> Vec<(BigInt, u32)> {
    assert!(n.is_positive(), "factor_integer needs n > 0");
    let mut out: BTreeMap<BigInt, u32> = BTreeMap::new();
    let mut rest = n.clone();
    for p in small_primes() {
        let pb = BigInt::from(p);
        while (&rest % &pb).is_zero() {
            rest /= &pb;
            *out.entry(pb.clone()).or_default() += 1;
        }
        if rest.is_one() {
            break;
        }
    }
    let mut stack = vec![rest];
    while let Some(m) = stack.pop() {
        if m.is_one() {
            continue;
        }
        if is_probable_prime(&m) {
            *out.entry(m).or_default() += 1;
            continue;
        }
        let d = pollard_brent(&m);
        stack.push(&m / &d);
        stack.push(d);
    }
    out.into_iter().collect()
}

/// A Gaussian integer `re + im·i`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GaussInt {
    pub re: BigInt,
    pub im: BigInt,
}

impl GaussInt {
    pub fn new(re: impl Into<BigInt>, im: impl Into<BigInt>) -> Self {
        GaussInt { re: re.into(), im: im.into() }
    }

    pub fn norm(&self) -> BigInt {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn mul(&self, o: &GaussInt) -> GaussInt {
        GaussInt {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }

    fn conj(&self) -> GaussInt {
        GaussInt { re: self.re.clone(), im: -&self.im }
    }

    /// Exact quotient, if `o` divides `self`.
    pub fn exact_div(&self, o: &GaussInt) -> Option<GaussInt> {
        let n = o.norm();
        let p = self.mul(&o.conj());
        if (&p.re % &n).is_zero() && (&p.im % &n).is_zero() {
            Some(GaussInt { re: p.re / &n, im: p.im / &n })
        } else {
            None
        }
    }

    fn rem(&self, o: &GaussInt) -> GaussInt {
        let n = o.norm();
        let p = self.mul(&o.conj());
        let round = |a: &BigInt| {
            let two_a: BigInt = a * 2 + &n;
            two_a.div_floor(&(&n * 2))
        };
        let q = GaussInt { re: round(&p.re), im: round(&p.im) };
        let qo = q.mul(o);
        GaussInt { re: &self.re - &qo.re, im: &self.im - &qo.im }
    }

    pub fn gcd(a: &GaussInt, b: &GaussInt) -> GaussInt {
        let (mut a, mut b) = (a.clone(), b.clone());
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.normalized().0
    }

    /// The associate with `re > 0, im ≥ 0`, and the unit exponent `u` with
    /// `self = i^u · associate`.
    pub fn normalized(&self) -> (GaussInt, u8) {
        let mut z = self.clone();
        let mut u = 0u8;
        if z.is_zero() {
            return (z, 0);
        }
        while !(z.re.is_positive() && !z.im.is_negative()) {
            // multiply by −i: (a + bi)(−i) = b − ai
            z = GaussInt { re: z.im.clone(), im: -&z.re };
            u += 1;
        }
        (z, u % 4)
    }

    pub fn to_field(&self) -> FieldElem {
        FieldElem::new(
            BigRational::from_integer(self.re.clone()),
            BigRational::from_integer(self.im.clone()),
        )
    }
}

impl std::fmt::Display for GaussInt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.to_field())
    }
}

/// `x` with `x² ≡ −1 (mod p)` for a prime `p ≡ 1 (mod 4)`.
fn sqrt_minus_one(p: &BigInt) -> BigInt {
    let e = (p - 1u32) / 4u32;
    let mut c = BigInt::from(2);
    loop {
        let x = c.modpow(&e, p);
        if ((&x * &x + 1u32) % p).is_zero() {
            return x;
        }
        c += 1u32;
    }
}

/// The normalized Gaussian primes above a rational prime `p`.
pub fn gaussian_primes_above(p: &BigInt) -> Vec<GaussInt> {
    if p == &BigInt::from(2) {
        return vec![GaussInt::new(1, 1)];
    }
    if (p % 4u32) == BigInt::from(3) {
        return vec![GaussInt::new(p.clone(), 0)];
    }
    let x = sqrt_minus_one(p);
    let pi = GaussInt::gcd(&GaussInt::new(p.clone(), 0), &GaussInt::new(x, 1));
    let pibar = pi.conj().normalized().0;
    let mut v = vec![pi, pibar];
    v.sort();
    v
}

/// `z = i^u · Π π^e` for a nonzero Gaussian integer.
pub fn factor_gaussian_integer(z: &GaussInt) -> (u8, BTreeMap<GaussInt, i64>) {
    assert!(!z.is_zero(), "cannot factor 0");
    let mut rest = z.clone();
    let mut out = BTreeMap::new();
    for (p, _) in factor_integer(&z.norm()) {
        for pi in gaussian_primes_above(&p) {
            let mut e = 0i64;
            while let Some(q) = rest.exact_div(&pi) {
                rest = q;
                e += 1;
            }
            if e > 0 {
                out.insert(pi, e);
            }
        }
    }
    let (unit, u) = rest.normalized();
    debug_assert!(unit.re.is_one() && unit.im.is_zero());
    (u, out)
}

/// Multiplicative decomposition of a nonzero element of ℚ(i).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExponentVector {
    /// `q = i^unit · Π primes[π]^e`.
    pub unit: u8,
    pub primes: BTreeMap<GaussInt, i64>,
}

impl ExponentVector {
    pub fn of(q: &FieldElem) -> Result<Self> {
        if q.is_zero() {
            return Err(Error::InvalidParameter("0 has no exponent vector".into()));
        }
        let d = q.denominator_lcm();
        let num = GaussInt {
            re: (&q.re * BigRational::from_integer(d.clone())).to_integer(),
            im: (&q.im * BigRational::from_integer(d.clone())).to_integer(),
        };
        let (u_num, mut primes) = factor_gaussian_integer(&num);
        let (u_den, den) = factor_gaussian_integer(&GaussInt::new(d, 0));
        for (pi, e) in den {
            *primes.entry(pi).or_default() -= e;
        }
        primes.retain(|_, e| *e != 0);
        Ok(ExponentVector {
            unit: (u_num + 4 - u_den) % 4,
            primes,
        })
    }

    pub fn is_unit(&self) -> bool {
        self.primes.is_empty()
    }

    /// `self^n`.
    pub fn scaled(&self, n: i64) -> Self {
        ExponentVector {
            unit: (self.unit as i64 * n).rem_euclid(4) as u8,
            primes: self.primes.iter().map(|(k, e)| (k.clone(), e * n)).collect(),
        }
    }

    /// `self · other`.
    pub fn combine(&self, other: &Self) -> Self {
        let mut primes = self.primes.clone();
        for (k, e) in &other.primes {
            *primes.entry(k.clone()).or_default() += e;
        }
        primes.retain(|_, e| *e != 0);
        ExponentVector {
            unit: (self.unit + other.unit) % 4,
            primes,
        }
    }
}

/// Smallest `(n₁, n₂) ≠ (0, 0)` with `n₁ > 0` or `n₁ = 0 < n₂` such that
/// `q₁^{n₁}·q₂^{n₂} = 1`, if any.
pub fn multiplicative_relation(q1: &FieldElem, q2: &FieldElem) -> Result<Option<(i64, i64)>> {
    let e1 = ExponentVector::of(q1)?;
    let e2 = ExponentVector::of(q2)?;
    let unit_order = |u: u8| [1i64, 4, 2, 4][u as usize];
    if e1.is_unit() {
        return Ok(Some((unit_order(e1.unit), 0)));
    }
    if e2.is_unit() {
        return Ok(Some((0, unit_order(e2.unit))));
    }
    // prime parts must be proportional: n₁·e₁ + n₂·e₂ = 0
    let keys: Vec<&GaussInt> = e1.primes.keys().chain(e2.primes.keys()).collect();
    let (k0, a0, b0) = {
        let k = keys[0];
        (k, *e1.primes.get(k).unwrap_or(&0), *e2.primes.get(k).unwrap_or(&0))
    };
    if a0 == 0 || b0 == 0 {
        let _ = k0;
        return Ok(None);
    }
    let g = a0.gcd(&b0);
    let (mut n1, mut n2) = (b0 / g, -a0 / g);
    if n1 < 0 {
        n1 = -n1;
        n2 = -n2;
    }
    for k in &keys {
        let a = *e1.primes.get(*k).unwrap_or(&0);
        let b = *e2.primes.get(*k).unwrap_or(&0);
        if n1 * a + n2 * b != 0 {
            return Ok(None);
        }
    }
    for mult in [1i64, 2, 4] {
        let u = (e1.unit as i64 * n1 * mult + e2.unit as i64 * n2 * mult).rem_euclid(4);
        if u == 0 {
            return Ok(Some((n1 * mult, n2 * mult)));
        }
    }
    unreachable!("i^4 = 1 always closes the unit part")
}

/// Multiplicative relation between two positive integers, `p₁^{n₁} = p₂^{n₂}`.
pub fn integer_power_relation(p1: u64, p2: u64) -> Option<(u64, u64)> {
    let f1 = factor_integer(&BigInt::from(p1));
    let f2 = factor_integer(&BigInt::from(p2));
    if f1.len() != f2.len() || f1.iter().zip(&f2).any(|(a, b)| a.0 != b.0) {
        return None;
    }
    let (a0, b0) = (f1[0].1 as u64, f2[0].1 as u64);
    let g = a0.gcd(&b0);
    let (n1, n2) = (b0 / g, a0 / g);
    f1.iter()
        .zip(&f2)
        .all(|(a, b)| a.1 as u64 * n1 == b.1 as u64 * n2)
        .then_some((n1, n2))
}

/// Small helper for callers that need a machine-size prime list.
pub fn primes_up_to(limit: u64) -> Vec<u64> {
    small_primes().into_iter().filter(|&p| p <= limit).collect()
}

/// Converts to `i64`, failing loudly on overflow.
pub fn bigint_to_i64(n: &BigInt) -> Result<i64> {
    n.to_i64()
        .ok_or_else(|| Error::InvalidParameter(format!("{n} exceeds the machine integer range")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_factoring() {
        let n = BigInt::from(2u64 * 2 * 3 * 1_000_003 * 998_244_353);
        let f = factor_integer(&n);
        assert_eq!(
            f,
            vec![
                (BigInt::from(2), 2),
                (BigInt::from(3), 1),
                (BigInt::from(1_000_003), 1),
                (BigInt::from(998_244_353), 1)
            ]
        );
    }

    #[test]
    fn split_primes() {
        let ps = gaussian_primes_above(&BigInt::from(5));
        assert_eq!(ps, vec![GaussInt::new(1, 2), GaussInt::new(2, 1)]);
        for pi in &ps {
            assert_eq!(pi.norm(), BigInt::from(5));
        }
    }

    #[test]
    fn exponent_vector_reconstructs() {
        for s in ["3/5+4/5*i", "12", "-7/9*i", "5+12*i", "1/2"] {
            let q: FieldElem = s.parse().unwrap();
            let ev = ExponentVector::of(&q).unwrap();
            let mut acc = FieldElem::i().pow_u(ev.unit as u64);
            for (pi, e) in &ev.primes {
                acc = &acc * &pi.to_field().pow(*e).unwrap();
            }
            assert_eq!(acc, q, "{s}");
        }
    }

    #[test]
    fn relations() {
        let two = FieldElem::from_int(2);
        let four = FieldElem::from_int(4);
        assert_eq!(multiplicative_relation(&two, &four).unwrap(), Some((2, -1)));
        let three = FieldElem::from_int(3);
        assert_eq!(multiplicative_relation(&two, &three).unwrap(), None);
        let a = FieldElem::gaussian(1, 1);
        let b = FieldElem::gaussian(0, 2);
        // (1+i)^2 = 2i
        assert_eq!(multiplicative_relation(&a, &b).unwrap(), Some((2, -1)));
        let c = FieldElem::from_int(-2);
        // 2^2 · (-2)^-2 = 1
        assert_eq!(multiplicative_relation(&two, &c).unwrap(), Some((2, -2)));
        assert_eq!(integer_power_relation(4, 8), Some((3, 2)));
        assert_eq!(integer_power_relation(2, 3), None);
        assert_eq!(integer_power_relation(12, 18), None);
    }
}
