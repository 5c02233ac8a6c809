//! Truncated Puiseux series `Σ c_k x^{(v+k)/j} + O(x^{N/j})`.
//!
//! Every value carries its own order of validity `N`; arithmetic returns the
//! tightest order that the inputs justify.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::field::FieldElem;
use super::gaussian::GaussInt;
use super::ratfunc::RationalFunction;
use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TruncatedPuiseux {
    ramification: u64,
    valuation: i64,
    coeffs: Vec<FieldElem>,
    order: i64,
}

impl TruncatedPuiseux {
    /// Builds and normalizes: coefficients at or beyond `order` are dropped,
    /// leading and trailing zeros are stripped and the ramification is
    /// lowered as far as the exponents and order allow.
    pub fn new(ramification: u64, valuation: i64, mut coeffs: Vec<FieldElem>, order: i64) -> Self {
        assert!(ramification >= 1, "ramification must be positive");
        let keep = (order - valuation).max(0) as usize;
        coeffs.truncate(keep);
        let lead = coeffs.iter().position(|c| !c.is_zero());
        let Some(lead) = lead else {
            return TruncatedPuiseux::zero_ramified(ramification, order);
        };
        coeffs.drain(..lead);
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        TruncatedPuiseux {
            ramification,
            valuation: valuation + lead as i64,
            coeffs,
            order,
        }
        .reduced()
    }

    fn zero_ramified(ramification: u64, order: i64) -> Self {
        let g = num_integer::gcd(ramification as i64, order).unsigned_abs().max(1);
        TruncatedPuiseux {
            ramification: ramification / g,
            valuation: order / g as i64,
            coeffs: Vec::new(),
            order: order / g as i64,
        }
    }

    fn reduced(self) -> Self {
        let mut g = num_integer::gcd(self.ramification as i64, self.order);
        for (k, c) in self.coeffs.iter().enumerate() {
            if g == 1 {
                break;
            }
            if !c.is_zero() {
                g = g.gcd(&(self.valuation + k as i64));
            }
        }
        let g = g.unsigned_abs().max(1);
        if g == 1 {
            return self;
        }
        let coeffs = self.coeffs.into_iter().step_by(g as usize).collect();
        TruncatedPuiseux {
            ramification: self.ramification / g,
            valuation: self.valuation / g as i64,
            coeffs,
            order: self.order / g as i64,
        }
    }

    /// Ordinary power series `Σ c_k x^k + O(x^order)`.
    pub fn from_coeffs(coeffs: Vec<FieldElem>, order: i64) -> Self {
        TruncatedPuiseux::new(1, 0, coeffs, order)
    }

    pub fn zero(order: i64) -> Self {
        TruncatedPuiseux::zero_ramified(1, order)
    }

    pub fn one(order: i64) -> Self {
        TruncatedPuiseux::from_coeffs(vec![FieldElem::one()], order)
    }

    /// `c · x^{index/j} + O(x^{order/j})`.
    pub fn monomial(c: FieldElem, index: i64, ramification: u64, order: i64) -> Self {
        TruncatedPuiseux::new(ramification, index, vec![c], order)
    }

    pub fn ramification(&self) -> u64 {
        self.ramification
    }

    /// Valuation in units of `1/j`; equals `order` for a zero series.
    pub fn valuation(&self) -> i64 {
        self.valuation
    }

    /// Order of validity in units of `1/j`.
    pub fn order(&self) -> i64 {
        self.order
    }

    pub fn valuation_q(&self) -> BigRational {
        BigRational::new(self.valuation.into(), (self.ramification as i64).into())
    }

    pub fn order_q(&self) -> BigRational {
        BigRational::new(self.order.into(), (self.ramification as i64).into())
    }

    pub fn coeffs(&self) -> &[FieldElem] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn leading_coefficient(&self) -> Option<&FieldElem> {
        self.coeffs.first()
    }

    /// Coefficient at exponent `index/j` (zero outside the stored window).
    pub fn coeff_at(&self, index: i64) -> FieldElem {
        let k = index - self.valuation;
        if k < 0 {
            return FieldElem::zero();
        }
        self.coeffs.get(k as usize).cloned().unwrap_or_else(FieldElem::zero)
    }

    /// Coefficient at a rational exponent; `None` when the exponent lies at
    /// or beyond the trusted order.
    pub fn coeff_q(&self, exponent: &BigRational) -> Option<FieldElem> {
        if exponent >= &self.order_q() {
            return None;
        }
        let scaled = exponent * BigRational::from_integer((self.ramification as i64).into());
        if !scaled.is_integer() {
            return Some(FieldElem::zero());
        }
        let idx: i64 = scaled.to_integer().try_into().ok()?;
        Some(self.coeff_at(idx))
    }

    /// Dense coefficients for indices `from..to` at ramification `j·k`.
    fn window(&self, k: u64, from: i64, to: i64) -> Vec<FieldElem> {
        let mut out = vec![FieldElem::zero(); (to - from).max(0) as usize];
        for (i, c) in self.coeffs.iter().enumerate() {
            let idx = (self.valuation + i as i64) * k as i64;
            if idx >= from && idx < to && !c.is_zero() {
                out[(idx - from) as usize] = c.clone();
            }
        }
        out
    }

    fn common(&self, other: &Self) -> (u64, u64, u64) {
        let j = self.ramification.lcm(&other.ramification);
        (j, j / self.ramification, j / other.ramification)
    }

    /// Re-expresses at ramification `j·k` without normalizing.
    pub fn spread_parts(&self, k: u64) -> (u64, i64, Vec<FieldElem>, i64) {
        let j = self.ramification * k;
        let v = self.valuation * k as i64;
        let n = self.order * k as i64;
        (j, v, self.window(k, v, n), n)
    }

    pub fn add(&self, other: &Self) -> Self {
        let (j, ka, kb) = self.common(other);
        let order = (self.order * ka as i64).min(other.order * kb as i64);
        let from = (self.valuation * ka as i64).min(other.valuation * kb as i64).min(order);
        let mut a = self.window(ka, from, order);
        let b = other.window(kb, from, order);
        for (x, y) in a.iter_mut().zip(&b) {
            if !y.is_zero() {
                *x += y;
            }
        }
        TruncatedPuiseux::new(j, from, a, order)
    }

    pub fn neg(&self) -> Self {
        TruncatedPuiseux {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
            ..self.clone()
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &FieldElem) -> Self {
        TruncatedPuiseux::new(
            self.ramification,
            self.valuation,
            self.coeffs.iter().map(|a| a * c).collect(),
            self.order,
        )
    }

    /// Multiplies by `x^{index/j}`, shifting the order along.
    pub fn mul_monomial(&self, index: i64, ramification: u64) -> Self {
        let j = self.ramification.lcm(&ramification);
        let ks = (j / self.ramification) as i64;
        let kr = (j / ramification) as i64;
        let (_, v, c, n) = self.spread_parts(ks as u64);
        TruncatedPuiseux::new(j, v + index * kr, c, n + index * kr)
    }

    /// Truncates to a smaller order (in units of this series' ramification).
    pub fn truncate(&self, order: i64) -> Self {
        if order >= self.order {
            return self.clone();
        }
        TruncatedPuiseux::new(self.ramification, self.valuation, self.coeffs.clone(), order)
    }

    /// Truncates to order `x^{q}` for a rational `q`.
    pub fn truncate_q(&self, order: &BigRational) -> Self {
        let j = self.ramification.lcm(&order.denom().try_into().unwrap_or(1u64));
        let k = j / self.ramification;
        let (_, v, c, n) = self.spread_parts(k);
        let target = (order * BigRational::from_integer((j as i64).into())).to_integer();
        let target: i64 = target.try_into().unwrap_or(i64::MAX);
        TruncatedPuiseux::new(j, v, c, n.min(target))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (j, ka, kb) = self.common(other);
        let (va, na) = (self.valuation * ka as i64, self.order * ka as i64);
        let (vb, nb) = (other.valuation * kb as i64, other.order * kb as i64);
        let order = (va + nb).min(vb + na);
        let v = va + vb;
        if self.is_zero() || other.is_zero() || order <= v {
            return TruncatedPuiseux::zero_ramified(j, order);
        }
        let len = (order - v) as usize;
        // integer convolution; one normalization per output coefficient
        let (ia_parts, da) = integral_parts(&self.coeffs);
        let (ib_parts, db) = integral_parts(&other.coeffs);
        let mut re = vec![BigInt::zero(); len];
        let mut im = vec![BigInt::zero(); len];
        for (i, (ar, ai)) in ia_parts.iter().enumerate() {
            if ar.is_zero() && ai.is_zero() {
                continue;
            }
            let ia = i * ka as usize;
            if ia >= len {
                break;
            }
            for (l, (br, bi)) in ib_parts.iter().enumerate() {
                let pos = ia + l * kb as usize;
                if pos >= len {
                    break;
                }
                if !br.is_zero() {
                    re[pos] += ar * br;
                    im[pos] += ai * br;
                }
                if !bi.is_zero() {
                    re[pos] -= ai * bi;
                    im[pos] += ar * bi;
                }
            }
        }
        let d = da * db;
        let out = re
            .into_iter()
            .zip(im)
            .map(|(r, i)| FieldElem::new(BigRational::new(r, d.clone()), BigRational::new(i, d.clone())))
            .collect();
        TruncatedPuiseux::new(j, v, out, order)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = TruncatedPuiseux::one(i64::MAX / 4);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Multiplicative inverse. The result is trusted to `x^{(N − 2v)/j}`.
    pub fn invert(&self) -> Result<Self> {
        let Some(c0) = self.coeffs.first() else {
            return Err(Error::InvertZeroSeries);
        };
        let len = (self.order - self.valuation) as usize;
        let inv0 = c0.inv()?;
        let mut d: Vec<FieldElem> = Vec::with_capacity(len);
        d.push(inv0.clone());
        for n in 1..len {
            let mut acc = FieldElem::zero();
            for k in 1..=n.min(self.coeffs.len() - 1) {
                let c = &self.coeffs[k];
                if !c.is_zero() {
                    acc += &(c * &d[n - k]);
                }
            }
            d.push(-(&acc * &inv0));
        }
        Ok(TruncatedPuiseux::new(
            self.ramification,
            -self.valuation,
            d,
            self.order - 2 * self.valuation,
        ))
    }

    /// `f(x^p)`: exponents and order are multiplied by `p`.
    pub fn substitute_power(&self, p: u64) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() * p as usize);
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                coeffs.extend(std::iter::repeat_n(FieldElem::zero(), p as usize - 1));
            }
            coeffs.push(c.clone());
        }
        TruncatedPuiseux::new(
            self.ramification,
            self.valuation * p as i64,
            coeffs,
            self.order * p as i64,
        )
    }

    /// `f(q·x)`. At ramification `j > 1` a declared `q_root` with
    /// `q_root^j = q` is required.
    pub fn substitute_scale(&self, q: &FieldElem, q_root: Option<&FieldElem>) -> Result<Self> {
        if q.is_zero() {
            return Err(Error::InvalidParameter("scaling by q = 0".into()));
        }
        let root = if self.ramification == 1 {
            q.clone()
        } else {
            match q_root {
                Some(r) if &r.pow_u(self.ramification) == q => r.clone(),
                _ => {
                    return Err(Error::RootUnavailable {
                        value: Box::new(q.clone()),
                        root: self.ramification,
                    })
                }
            }
        };
        let mut w = root.pow(self.valuation)?;
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for c in &self.coeffs {
            coeffs.push(c * &w);
            w = &w * &root;
        }
        Ok(TruncatedPuiseux::new(self.ramification, self.valuation, coeffs, self.order))
    }

    /// Exact expansion of a rational function at 0, trusted to `x^order`.
    pub fn from_rational(r: &RationalFunction, order: i64) -> Self {
        let Some(v) = r.valuation_at_zero() else {
            return TruncatedPuiseux::zero(order);
        };
        let len = order - v;
        if len <= 0 {
            return TruncatedPuiseux::zero(order);
        }
        let num = r.num().shift_down(r.num().ord0().unwrap());
        let den = r.den().shift_down(r.den().ord0().unwrap());
        let coeffs = power_series_divide(num.coeffs(), den.coeffs(), len as usize);
        TruncatedPuiseux::new(1, v, coeffs, order)
    }

    /// Distance between valuation and order, i.e. the count of trusted
    /// coefficient slots.
    pub fn precision(&self) -> i64 {
        self.order - self.valuation
    }
}

/// First `len` coefficients of `a / b` for power series with `b[0] ≠ 0`.
///
/// Runs on Gaussian integers: with `a, b` scaled to integral `a', b'` and
/// `E_n = b'_0^{n+1}·d_n`, `E_n = a'_n·b'_0^n − Σ_{k≥1} b'_k·b'_0^{k−1}·E_{n−k}`.
pub(crate) fn power_series_divide(a: &[FieldElem], b: &[FieldElem], len: usize) -> Vec<FieldElem> {
    assert!(!b[0].is_zero(), "unit constant term");
    let (ai, da) = integral_parts(a);
    let (bi, db) = integral_parts(b);
    let to_g = |(re, im): &(BigInt, BigInt)| GaussInt::new(re.clone(), im.clone());
    // a/b = (a'·db)/(b'·da); fold the scalars into a'
    let scale = GaussInt::new(db, BigInt::zero());
    let a_int: Vec<GaussInt> = ai.iter().map(|z| to_g(z).mul(&scale)).collect();
    let b_int: Vec<GaussInt> = bi.iter().map(to_g).collect();
    let b0 = b_int[0].clone();
    let deg = b_int.len() - 1;
    let mut b0_pows = vec![GaussInt::new(1, 0)];
    for _ in 0..deg {
        let next = b0_pows.last().unwrap().mul(&b0);
        b0_pows.push(next);
    }
    // b'_k·b'_0^{k−1}
    let weights: Vec<GaussInt> = (1..=deg).map(|k| b_int[k].mul(&b0_pows[k - 1])).collect();
    let conj0 = GaussInt::new(b0.re.clone(), -&b0.im);
    let norm0 = b0.norm();
    let mut b0_n = GaussInt::new(1, 0);
    let mut conj_pow = conj0.clone();
    let mut norm_pow = &norm0 * &da;
    let mut e: Vec<GaussInt> = Vec::with_capacity(len);
    let mut out = Vec::with_capacity(len);
    for n in 0..len {
        let mut acc = match a_int.get(n) {
            Some(x) if !x.is_zero() => x.mul(&b0_n),
            _ => GaussInt::new(0, 0),
        };
        for k in 1..=n.min(deg) {
            let w = &weights[k - 1];
            let prev = &e[n - k];
            if !w.is_zero() && !prev.is_zero() {
                let t = w.mul(prev);
                acc.re -= t.re;
                acc.im -= t.im;
            }
        }
        // d_n = E_n / (b'_0^{n+1}·da) = E_n·conj^{n+1} / (N^{n+1}·da)
        let num = acc.mul(&conj_pow);
        out.push(FieldElem::new(
            BigRational::new(num.re, norm_pow.clone()),
            BigRational::new(num.im, norm_pow.clone()),
        ));
        e.push(acc);
        b0_n = b0_n.mul(&b0);
        conj_pow = conj_pow.mul(&conj0);
        norm_pow *= &norm0;
    }
    out
}

impl fmt::Display for TruncatedPuiseux {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let j = self.ramification as i64;
        let exp = |idx: i64| {
            let r = BigRational::new(idx.into(), j.into());
            if r.is_integer() {
                r.to_integer().to_string()
            } else {
                format!("({r})")
            }
        };
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            let idx = self.valuation + k as i64;
            if idx == 0 {
                write!(f, "({c})")?;
            } else {
                write!(f, "({c})*x^{}", exp(idx))?;
            }
        }
        if !first {
            f.write_str(" + ")?;
        }
        write!(f, "O(x^{})", exp(self.order))
    }
}

impl fmt::Debug for TruncatedPuiseux {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TruncatedPuiseux[j={}]({self})", self.ramification)
    }
}

/// Coefficients scaled by the lcm `d` of their denominators, as
/// `(d·re, d·im)` integer pairs.
fn integral_parts(coeffs: &[FieldElem]) -> (Vec<(BigInt, BigInt)>, BigInt) {
    let mut d = BigInt::one();
    for c in coeffs {
        for part in [&c.re, &c.im] {
            if !part.denom().is_one() {
                d = d.lcm(part.denom());
            }
        }
    }
    let parts = coeffs
        .iter()
        .map(|c| {
            let scale = |r: &BigRational| r.numer() * (&d / r.denom());
            (scale(&c.re), scale(&c.im))
        })
        .collect();
    (parts, d)
}
