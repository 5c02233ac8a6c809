//! Laurent series at infinity in the local variable `t = 1/x`.

use std::fmt;

use num_traits::{One, Zero};

use super::field::FieldElem;
use super::puiseux::{power_series_divide, TruncatedPuiseux};
use super::ratfunc::RationalFunction;
use crate::error::Result;

/// `Σ c_k t^{v+k} + O(t^N)` with `t = x⁻¹`; always unramified.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct AtInfinitySeries(TruncatedPuiseux);

impl AtInfinitySeries {
    pub fn new(valuation: i64, coeffs: Vec<FieldElem>, order: i64) -> Self {
        AtInfinitySeries(TruncatedPuiseux::new(1, valuation, coeffs, order))
    }

    pub fn zero(order: i64) -> Self {
        AtInfinitySeries(TruncatedPuiseux::zero(order))
    }

    pub fn one(order: i64) -> Self {
        AtInfinitySeries(TruncatedPuiseux::one(order))
    }

    /// The underlying series in `t`.
    pub fn as_t_series(&self) -> &TruncatedPuiseux {
        &self.0
    }

    pub fn from_t_series(s: TruncatedPuiseux) -> Self {
        assert_eq!(s.ramification(), 1, "series at infinity are unramified");
        AtInfinitySeries(s)
    }

    pub fn valuation(&self) -> i64 {
        self.0.valuation()
    }

    pub fn order(&self) -> i64 {
        self.0.order()
    }

    pub fn coeffs(&self) -> &[FieldElem] {
        self.0.coeffs()
    }

    pub fn coeff_at(&self, k: i64) -> FieldElem {
        self.0.coeff_at(k)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn add(&self, other: &Self) -> Self {
        AtInfinitySeries(self.0.add(&other.0))
    }

    pub fn sub(&self, other: &Self) -> Self {
        AtInfinitySeries(self.0.sub(&other.0))
    }

    pub fn neg(&self) -> Self {
        AtInfinitySeries(self.0.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        AtInfinitySeries(self.0.mul(&other.0))
    }

    pub fn scale(&self, c: &FieldElem) -> Self {
        AtInfinitySeries(self.0.scale(c))
    }

    pub fn invert(&self) -> Result<Self> {
        Ok(AtInfinitySeries(self.0.invert()?))
    }

    pub fn truncate(&self, order: i64) -> Self {
        AtInfinitySeries(self.0.truncate(order))
    }

    /// `f(x + h)`, i.e. `t ↦ t/(1 + h·t)`, to the same order.
    ///
    /// The coefficient of `t^m` is `Σ_k c_k · binom(−k, m−k) · h^{m−k}`.
    pub fn substitute_shift(&self, h: &FieldElem) -> Self {
        if h.is_zero() || self.is_zero() {
            return self.clone();
        }
        let v = self.valuation();
        let n = self.order();
        let len = (n - v) as usize;
        let mut out = vec![FieldElem::zero(); len];
        for (i, c) in self.coeffs().iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let k = v + i as i64;
            // term = c · binom(−k, r) · h^r, updated in r
            let mut term = c.clone();
            for r in 0..(len - i) {
                out[i + r] += &term;
                let factor = FieldElem::from_ratio(-k - r as i64, r as i64 + 1);
                term = &(&term * &factor) * h;
                if term.is_zero() {
                    break;
                }
            }
        }
        AtInfinitySeries::new(v, out, n)
    }

    /// Exact expansion of `r` at infinity, trusted to `t^order`.
    pub fn from_rational(r: &RationalFunction, order: i64) -> Self {
        let Some(v) = r.valuation_at_infinity() else {
            return AtInfinitySeries::zero(order);
        };
        let len = order - v;
        if len <= 0 {
            return AtInfinitySeries::zero(order);
        }
        // num(x)/den(x) = t^{deg den − deg num} · rev(num)(t)/rev(den)(t)
        let rev = |p: &super::poly::Polynomial| {
            let mut c = p.coeffs().to_vec();
            c.reverse();
            c
        };
        let coeffs = power_series_divide(&rev(r.num()), &rev(r.den()), len as usize);
        AtInfinitySeries::new(v, coeffs, order)
    }

    pub fn is_one(&self) -> bool {
        self.coeffs().len() == 1 && self.valuation() == 0 && self.coeffs()[0].is_one()
    }
}

impl fmt::Display for AtInfinitySeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.0.to_string().replace("x^", "t^");
        f.write_str(&s)
    }
}

impl fmt::Debug for AtInfinitySeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AtInfinitySeries({self})")
    }
}
