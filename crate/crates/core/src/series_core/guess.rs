//! Rational reconstruction of a coefficient stream by minimal linear
//! recurrence detection (Berlekamp–Massey over ℚ(i)).

use num_traits::{One, Zero};

use super::field::FieldElem;
use super::poly::Polynomial;
use super::puiseux::TruncatedPuiseux;
use super::ratfunc::RationalFunction;
use crate::error::{Error, Result};

/// Shortest connection polynomial `C(z) = 1 + c₁z + … + c_L z^L` with
/// `Σ_{i=0}^{L} c_i s_{k−i} = 0` for all `L ≤ k < len(s)`. Returns `(C, L)`.
pub fn berlekamp_massey(s: &[FieldElem]) -> (Vec<FieldElem>, usize) {
    let mut c = vec![FieldElem::one()];
    let mut b = vec![FieldElem::one()];
    let mut l = 0usize;
    let mut m = 1usize;
    let mut last = FieldElem::one();
    for n in 0..s.len() {
        let mut d = s[n].clone();
        for i in 1..=l.min(c.len() - 1) {
            if !c[i].is_zero() {
                d += &(&c[i] * &s[n - i]);
            }
        }
        if d.is_zero() {
            m += 1;
            continue;
        }
        let coef = &d / &last;
        let prev = c.clone();
        if c.len() < b.len() + m {
            c.resize(b.len() + m, FieldElem::zero());
        }
        for (i, bi) in b.iter().enumerate() {
            if !bi.is_zero() {
                c[i + m] -= &(&coef * bi);
            }
        }
        if 2 * l <= n {
            l = n + 1 - l;
            b = prev;
            last = d;
            m = 1;
        } else {
            m += 1;
        }
    }
    c.truncate(l + 1);
    c.resize(l + 1, FieldElem::zero());
    (c, l)
}

/// Guesses a rational function whose expansion at 0 agrees with every
/// trusted coefficient of `f`.
///
/// Needs `order − valuation ≥ 2·bound + 2`. Returns `None` when the minimal
/// recurrence is longer than `bound`. A returned guess has been re-expanded
/// and compared to all trusted coefficients.
pub fn rationality_guess(f: &TruncatedPuiseux, bound: usize) -> Result<Option<RationalFunction>> {
    if f.ramification() != 1 {
        return Err(Error::RamificationMismatch(format!(
            "rationality guessing needs an unramified series, got j = {}",
            f.ramification()
        )));
    }
    if f.is_zero() {
        return Ok(Some(RationalFunction::zero()));
    }
    let n = f.precision();
    let need = 2 * bound as i64 + 2;
    if n < need {
        return Err(Error::InsufficientOrder(format!(
            "{n} trusted coefficients, {need} needed for bound {bound}"
        )));
    }
    let v = f.valuation();
    let stream: Vec<FieldElem> = (0..n).map(|k| f.coeff_at(v + k)).collect();
    let (c, l) = berlekamp_massey(&stream);
    if l > bound {
        return Ok(None);
    }
    let den = Polynomial::new(c);
    let sc = Polynomial::new(stream[..l].to_vec());
    // numerator = (S·C) mod z^L
    let prod = &sc * &den;
    let num = Polynomial::new(prod.coeffs().iter().take(l).cloned().collect());
    let g = RationalFunction::new(num, den)?;
    let r = &g * &RationalFunction::x_pow(v);
    if TruncatedPuiseux::from_rational(&r, f.order()) != *f {
        return Ok(None);
    }
    Ok(Some(r))
}
