//! Named series with annihilating difference equations: Mahler power sums,
//! automatic-sequence products, q-factorials, q-Pochhammer symbols and basic
//! hypergeometric series.

use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{Operator, OperatorPair, Role};
use crate::relation_finder::SeriesSource;
use crate::series_core::{Expansion, FieldElem, Polynomial, RationalFunction, TruncatedPuiseux};
use crate::systems::{residual_check, Residual, ScalarEquation};

/// Recipe regenerating a named series to any order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Generator {
    MahlerPowerSum { p: u64 },
    ThueMorseProduct { p: u64 },
    BasicHypergeometric {
        alphas: Vec<FieldElem>,
        betas: Vec<FieldElem>,
        q: FieldElem,
    },
}

impl Generator {
    pub fn generate(&self, order: i64) -> Result<TruncatedPuiseux> {
        match self {
            Generator::MahlerPowerSum { p } => Ok(power_sum_series(*p, order)),
            Generator::ThueMorseProduct { p } => Ok(thue_morse_series(*p, order)),
            Generator::BasicHypergeometric { alphas, betas, q } => {
                check_hypergeometric(betas, q, order)?;
                Ok(hypergeometric_series(alphas, betas, q, order))
            }
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::MahlerPowerSum { p } => write!(f, "mahler_power_sum(p={p})"),
            Generator::ThueMorseProduct { p } => write!(f, "thue_morse_product(p={p})"),
            Generator::BasicHypergeometric { alphas, betas, q } => {
                let list = |v: &[FieldElem]| v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ");
                write!(f, "basic_hypergeometric([{}]; [{}]; q={q})", list(alphas), list(betas))
            }
        }
    }
}

/// A series together with the equations it satisfies to its trusted order.
#[derive(Clone, Debug)]
pub struct NamedSeries {
    pub series: TruncatedPuiseux,
    /// Primary annihilator, possibly inhomogeneous.
    pub equation: ScalarEquation,
    pub extra_equations: Vec<ScalarEquation>,
    pub provenance: String,
    pub generator: Generator,
}

impl NamedSeries {
    /// Fails with `Invariant` unless every attached equation has a zero
    /// residual.
    pub fn new(generator: Generator, order: i64, equation: ScalarEquation, extra: Vec<ScalarEquation>) -> Result<Self> {
        let series = generator.generate(order)?;
        let ns = NamedSeries {
            series,
            equation,
            extra_equations: extra,
            provenance: generator.to_string(),
            generator,
        };
        for eq in ns.equations() {
            match residual_check(eq, &Expansion::AtZero(ns.series.clone()), None)? {
                Residual::Zero { .. } => {}
                Residual::Nonzero { exponent, .. } => {
                    return Err(Error::Invariant(format!(
                        "{} violates its attached equation at x^{exponent}",
                        ns.provenance
                    )))
                }
            }
        }
        Ok(ns)
    }

    pub fn equations(&self) -> impl Iterator<Item = &ScalarEquation> {
        std::iter::once(&self.equation).chain(&self.extra_equations)
    }

    pub fn order(&self) -> i64 {
        self.series.order()
    }
}

impl SeriesSource for NamedSeries {
    fn label(&self) -> String {
        self.provenance.clone()
    }

    fn expand(&self, order: i64) -> Result<TruncatedPuiseux> {
        if order <= self.series.order() {
            return Ok(self.series.truncate(order));
        }
        self.generator.generate(order)
    }

    fn extendable(&self) -> bool {
        true
    }
}

/// Pair whose two entries are the same operator, for single-operator
/// equations.
pub fn single_pair(op: Operator) -> Result<OperatorPair> {
    OperatorPair::new(op.clone(), op)
}

fn power_sum_series(p: u64, order: i64) -> TruncatedPuiseux {
    let mut c = vec![FieldElem::zero(); order.max(0) as usize];
    let mut k: u64 = 1;
    while (k as i64) < order {
        c[k as usize] = FieldElem::one();
        k = match k.checked_mul(p) {
            Some(k) => k,
            None => break,
        };
    }
    TruncatedPuiseux::from_coeffs(c, order)
}

fn thue_morse_series(p: u64, order: i64) -> TruncatedPuiseux {
    let mut s = TruncatedPuiseux::one(order);
    let mut k: u64 = 1;
    while (k as i64) < order {
        let f = TruncatedPuiseux::one(order).sub(&TruncatedPuiseux::monomial(FieldElem::one(), k as i64, 1, order));
        s = s.mul(&f);
        k = match k.checked_mul(p) {
            Some(k) => k,
            None => break,
        };
    }
    s
}

/// `L(y) = b` into the homogeneous `σ(b)·L(y) − b·σ(L(y)) = 0`, made
/// primitive with a monic leading coefficient.
pub fn homogenize(eq: &ScalarEquation) -> Result<ScalarEquation> {
    if eq.is_homogeneous() {
        return Ok(eq.clone());
    }
    let b = &eq.rhs;
    let sb = eq.op.apply_rational(b);
    let n = eq.coeffs.len();
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let left = if k < n { &sb * &eq.coeffs[k] } else { RationalFunction::zero() };
        let right = if k > 0 {
            b * &eq.op.apply_rational(&eq.coeffs[k - 1])
        } else {
            RationalFunction::zero()
        };
        out.push(&left - &right);
    }
    let out = primitive(out)?;
    ScalarEquation::with_operator(&eq.pair, eq.role, eq.op.clone(), out, RationalFunction::zero())
}

fn primitive(coeffs: Vec<RationalFunction>) -> Result<Vec<RationalFunction>> {
    let mut den = Polynomial::one();
    for c in &coeffs {
        let g = Polynomial::gcd(&den, c.den());
        den = &den * &c.den().exact_div(&g).expect("gcd divides");
    }
    let dr = RationalFunction::from_poly(den);
    let nums: Vec<Polynomial> = coeffs
        .iter()
        .map(|c| {
            let v = c * &dr;
            debug_assert!(v.is_polynomial());
            v.num().clone()
        })
        .collect();
    let mut g = Polynomial::zero();
    for p in &nums {
        if !p.is_zero() {
            g = Polynomial::gcd(&g, p);
        }
    }
    let lead = nums.iter().rev().find(|p| !p.is_zero()).ok_or(Error::DivisionByZero)?;
    let lc = lead.exact_div(&g).expect("gcd divides").lc();
    let g = g.scale(&lc);
    Ok(nums
        .iter()
        .map(|p| RationalFunction::from_poly(p.exact_div(&g).expect("gcd divides")))
        .collect())
}

/// `Σ_{n≥0} x^{pⁿ}` with `F(x^p) = F(x) − x` and its homogeneous order-2 form.
pub fn mahler_power_sum(p: u64, order: i64) -> Result<NamedSeries> {
    let pair = single_pair(Operator::Mahler(p))?;
    let eq = ScalarEquation::new(
        &pair,
        Role::Phi,
        vec![RationalFunction::from_int(-1), RationalFunction::one()],
        -&RationalFunction::x(),
    )?;
    let hom = homogenize(&eq)?;
    NamedSeries::new(Generator::MahlerPowerSum { p }, order, eq, vec![hom])
}

/// `∏_{n≥0} (1 − x^{pⁿ})`, annihilated by `T(x^p) = T(x)/(1 − x)`.
pub fn thue_morse_product(p: u64, order: i64) -> Result<NamedSeries> {
    let pair = single_pair(Operator::Mahler(p))?;
    let one_minus_x: RationalFunction = "1-x".parse()?;
    let eq = ScalarEquation::new(
        &pair,
        Role::Phi,
        vec![-&one_minus_x.inv()?, RationalFunction::one()],
        RationalFunction::zero(),
    )?;
    NamedSeries::new(Generator::ThueMorseProduct { p }, order, eq, vec![])
}

/// `[i]_q = 1 + q + … + q^{i−1}`.
fn q_integer(i: u64, q: &FieldElem) -> FieldElem {
    let mut s = FieldElem::zero();
    let mut t = FieldElem::one();
    for _ in 0..i {
        s = &s + &t;
        t = &t * q;
    }
    s
}

/// `[n]!_q = ∏_{i=1}^{n} (1 − qⁱ)/(1 − q)`, evaluated through `[i]_q`.
pub fn q_factorial(n: u64, q: &FieldElem) -> Result<FieldElem> {
    if q.is_one() {
        return Err(Error::QIsOne);
    }
    let mut acc = FieldElem::one();
    for i in 1..=n {
        acc = &acc * &q_integer(i, q);
    }
    Ok(acc)
}

/// `(a; q)_n = ∏_{i=0}^{n−1} (1 − a·qⁱ)`.
pub fn q_pochhammer(a: &FieldElem, q: &FieldElem, n: u64) -> FieldElem {
    let mut acc = FieldElem::one();
    let mut aq = a.clone();
    for _ in 0..n {
        acc = &acc * &(&FieldElem::one() - &aq);
        aq = &aq * q;
    }
    acc
}

fn check_hypergeometric(betas: &[FieldElem], q: &FieldElem, order: i64) -> Result<()> {
    if q.is_one() {
        return Err(Error::QIsOne);
    }
    if q.is_zero() {
        return Err(Error::InvalidParameter("q must be nonzero".into()));
    }
    if q.is_root_of_unity() {
        return Err(Error::QRootOfUnity(Box::new(q.clone())));
    }
    for (index, b) in betas.iter().enumerate() {
        // β·qⁱ = 1 means β = q^{−i}
        let mut bq = b.clone();
        for i in 0..=order.max(0) {
            if bq.is_one() {
                return Err(Error::InvalidBeta { index, exponent: -i });
            }
            bq = &bq * q;
        }
    }
    Ok(())
}

/// Sign-twist exponent `s − r` where the series has `r + 1` upper
/// parameters.
fn twist_exponent(alphas: &[FieldElem], betas: &[FieldElem]) -> i64 {
    betas.len() as i64 + 1 - alphas.len() as i64
}

/// `c_{n+1}/c_n = ∏(1−α_i qⁿ)/∏(1−β_j qⁿ) · (−qⁿ)^e · (1−q)/(1−q^{n+1})`.
fn hypergeometric_series(alphas: &[FieldElem], betas: &[FieldElem], q: &FieldElem, order: i64) -> TruncatedPuiseux {
    let e = twist_exponent(alphas, betas);
    let n_max = order.max(0) as usize;
    let mut c = Vec::with_capacity(n_max);
    let mut cur = FieldElem::one();
    let mut qn = FieldElem::one();
    let one = FieldElem::one();
    for _ in 0..n_max {
        c.push(cur.clone());
        let mut num = &one - q;
        for a in alphas {
            num = &num * &(&one - &(a * &qn));
        }
        let qn1 = &qn * q;
        let mut den = &one - &qn1;
        for b in betas {
            den = &den * &(&one - &(b * &qn));
        }
        let tw = (-&qn).pow(e).expect("qⁿ is nonzero");
        cur = &(&cur * &num) * &tw;
        cur = cur.checked_div(&den).expect("denominators were checked");
        qn = qn1;
    }
    TruncatedPuiseux::from_coeffs(c, order)
}

/// `_{r+1}φ_s(α_1, …, α_{r+1}; β_1, …, β_s | q, x)` to order `N`, with the
/// annihilator `Σ_k (B̃_k − x·A_k)·σ_q^k f = 0` where `c_{n+1}/c_n =
/// A(qⁿ)/B(qⁿ)` and `B̃(u) = B(u/q)`; the boundary term `B̃(1)·c_0` vanishes
/// because `B` carries the factor `1 − q·u`.
pub fn basic_hypergeometric(alphas: &[FieldElem], betas: &[FieldElem], q: &FieldElem, order: i64) -> Result<NamedSeries> {
    if alphas.is_empty() {
        return Err(Error::InvalidParameter("at least one upper parameter is required".into()));
    }
    check_hypergeometric(betas, q, order)?;
    let e = twist_exponent(alphas, betas);
    let one = FieldElem::one();
    let lin = |c: &FieldElem| Polynomial::new(vec![one.clone(), -c]);
    let mut a = Polynomial::constant(&one - q);
    for al in alphas {
        a = &a * &lin(al);
    }
    let mut b = lin(q);
    for be in betas {
        b = &b * &lin(be);
    }
    let minus_u = Polynomial::monomial(-&one, 1);
    if e >= 0 {
        a = &a * &minus_u.pow(e as u32);
    } else {
        b = &b * &minus_u.pow((-e) as u32);
    }
    let b_tilde = b.substitute_scale(&q.inv()?);
    let deg = a.deg().max(b_tilde.deg());
    let x = RationalFunction::x();
    let coeffs = (0..=deg)
        .map(|k| {
            let bk = RationalFunction::constant(b_tilde.coeff(k));
            let ak = RationalFunction::constant(a.coeff(k));
            &bk - &(&x * &ak)
        })
        .collect();
    let rhs = RationalFunction::constant(b_tilde.eval(&one));
    let pair = single_pair(Operator::Scale(q.clone()))?;
    let eq = ScalarEquation::new(&pair, Role::Phi, coeffs, rhs)?;
    let generator = Generator::BasicHypergeometric {
        alphas: alphas.to_vec(),
        betas: betas.to_vec(),
        q: q.clone(),
    };
    NamedSeries::new(generator, order, eq, vec![])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fe(s: &str) -> FieldElem {
        s.parse().unwrap()
    }

    #[test]
    fn power_sum_terms() {
        let f = mahler_power_sum(2, 10).unwrap();
        let nz: Vec<i64> = (0..10).filter(|i| !f.series.coeff_at(*i).is_zero()).collect();
        assert_eq!(nz, vec![1, 2, 4, 8]);
        let hom = &f.extra_equations[0];
        assert_eq!(hom.coeffs[0], RationalFunction::x());
        assert_eq!(hom.coeffs[1], "-1-x".parse().unwrap());
        assert_eq!(hom.coeffs[2], RationalFunction::one());
    }

    #[test]
    fn q_factorial_values() {
        assert_eq!(q_factorial(0, &fe("5")).unwrap(), FieldElem::one());
        assert_eq!(q_factorial(3, &fe("2")).unwrap(), FieldElem::from_int(21));
        assert_eq!(q_factorial(2, &FieldElem::one()), Err(Error::QIsOne));
    }

    #[test]
    fn phi_first_coefficients() {
        let a = fe("3/7");
        let f = basic_hypergeometric(std::slice::from_ref(&a), &[], &fe("2"), 10).unwrap();
        assert_eq!(f.series.coeff_at(0), FieldElem::one());
        assert_eq!(f.series.coeff_at(1), &FieldElem::one() - &a);
    }

    #[test]
    fn invalid_beta() {
        let q = fe("2");
        let b = fe("1/4");
        assert_eq!(
            basic_hypergeometric(&[fe("3")], &[b], &q, 10).unwrap_err(),
            Error::InvalidBeta { index: 0, exponent: -2 }
        );
    }

    #[test]
    fn thue_morse_satisfies_equation() {
        let t = thue_morse_product(2, 64).unwrap();
        for n in 0..64u32 {
            let sign = if n.count_ones() % 2 == 0 { 1 } else { -1 };
            assert_eq!(t.series.coeff_at(n as i64), FieldElem::from_int(sign));
        }
    }
}
