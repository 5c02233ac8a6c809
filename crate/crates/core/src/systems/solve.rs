//! Exact solving of `φ(y) = a·y + b` by greedy residual elimination.
//!
//! The residual `b − φ(y) + a·y` is kept as a sparse map of exponents below
//! a target `M`. Its lowest term is cancelled by a single monomial of `y`
//! whose image under `L = φ − a` has that term as its lowest one; the lowest
//! residual exponent strictly increases at every step.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::{residual_check, rational_string, Residual, ScalarEquation};
use crate::error::{Error, Result};
use crate::operators::{Operator, OperatorPair, Role};
use crate::series_core::{
    rational_to_series, AtInfinitySeries, Expansion, FieldElem, Locus, RationalFunction, TruncatedPuiseux,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveOptions {
    /// Coefficient of the leading monomial in the homogeneous case.
    pub init: FieldElem,
    pub ramification_cap: u64,
    pub step_cap: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            init: FieldElem::one(),
            ramification_cap: 4096,
            step_cap: 1_000_000,
        }
    }
}

/// Factor stripped from `a` before a homogeneous solve: the equation solved
/// is `φ(y) = a_norm·y` with `a_norm = a·x^{−v_a}/t_a` (at infinity
/// `a·x^{v_a}/t_a`, `v_a` measured in `t = 1/x`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Normalization {
    pub t_a: FieldElem,
    pub v_a: i64,
    #[serde(with = "rational_string")]
    pub start_exponent: BigRational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Order1Solution {
    pub series: Expansion,
    /// The equation `series` satisfies: coefficients `[−a', 1]`, rhs `b`.
    pub equation: ScalarEquation,
    pub normalization: Option<Normalization>,
    /// `None` for inhomogeneous equations, which start from `y = 0`.
    pub initial_value: Option<FieldElem>,
    pub verified_order: BigRational,
}

pub fn solve_order1(
    a: &RationalFunction,
    b: &RationalFunction,
    pair: &OperatorPair,
    role: Role,
    order: i64,
) -> Result<Order1Solution> {
    solve_order1_with(a, b, pair, role, order, &SolveOptions::default())
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn val_at(r: &RationalFunction, locus: Locus) -> i64 {
    match locus {
        Locus::AtZero => r.valuation_at_zero(),
        Locus::AtInfinity => r.valuation_at_infinity(),
    }
    .expect("nonzero rational function")
}

/// Expansion of `a` at the locus, extended on demand.
struct LazySeries {
    func: RationalFunction,
    locus: Locus,
    valuation: i64,
    order: i64,
    coeffs: Vec<FieldElem>,
}

impl LazySeries {
    fn new(func: RationalFunction, locus: Locus) -> Self {
        let valuation = val_at(&func, locus);
        let mut s = LazySeries {
            func,
            locus,
            valuation,
            order: valuation,
            coeffs: Vec::new(),
        };
        s.ensure(valuation + 8);
        s
    }

    fn ensure(&mut self, order: i64) {
        if order <= self.order {
            return;
        }
        let order = order.max(self.valuation + 2 * (self.order - self.valuation));
        let e = rational_to_series(&self.func, self.locus, order);
        let inner = e.inner();
        self.coeffs = (0..order - self.valuation)
            .map(|k| inner.coeff_at(self.valuation + k))
            .collect();
        self.order = order;
    }

    /// Coefficient of exponent `valuation + k`.
    fn coeff(&mut self, k: usize) -> FieldElem {
        self.ensure(self.valuation + k as i64 + 1);
        self.coeffs[k].clone()
    }
}

/// Nonzero terms of a Laurent polynomial in the locus variable.
fn laurent_terms(r: &RationalFunction, locus: Locus) -> Vec<(i64, FieldElem)> {
    if r.is_zero() {
        return Vec::new();
    }
    let v = val_at(r, locus);
    let span = (r.num().deg() + r.den().deg() + 1) as i64;
    let e = rational_to_series(r, locus, v + span);
    let inner = e.inner();
    (0..span)
        .map(|k| (v + k, inner.coeff_at(v + k)))
        .filter(|(_, c)| !c.is_zero())
        .collect()
}

/// Denominator of `a` divided by its lowest term at the locus, so that it is
/// a unit there with constant term 1.
fn unit_denominator(a: &RationalFunction, locus: Locus) -> RationalFunction {
    let den = a.den();
    let lowest = match locus {
        Locus::AtZero => {
            let k = den.ord0().expect("nonzero denominator");
            RationalFunction::x_pow(k as i64).scale(&den.coeff(k))
        }
        Locus::AtInfinity => RationalFunction::x_pow(den.deg() as i64).scale(&den.lc()),
    };
    RationalFunction::from_poly(den.clone())
        .checked_div(&lowest)
        .expect("nonzero lowest term")
}

/// `L = D·φ − N` with `a = N/D` and `D` a unit at the locus: same solutions
/// and residual valuations as `φ − a`, but every image is finite in `a`.
struct Kernel {
    op: Operator,
    a: LazySeries,
    d_terms: Vec<(i64, FieldElem)>,
    n_terms: Vec<(i64, FieldElem)>,
    lead: FieldElem,
    /// Exclusive bound on tracked residual exponents.
    target: BigRational,
}

impl Kernel {
    fn v(&self) -> i64 {
        self.a.valuation
    }

    /// Exponent `e` of the monomial whose image has lowest term at `m`, and
    /// that term's coefficient per unit of `y`.
    fn pivot(&mut self, m: &BigRational) -> Result<(BigRational, FieldElem)> {
        let v = self.v();
        let t = self.lead.clone();
        let one = FieldElem::one();
        let (e, kappa) = match &self.op {
            Operator::Mahler(p) => {
                let p = *p as i64;
                let e_star = BigRational::new(v.into(), (p - 1).into());
                let m_star = &e_star * rat(p);
                if m < &m_star {
                    (m / rat(p), one)
                } else if m > &m_star {
                    (m - rat(v), -&t)
                } else {
                    (e_star, &one - &t)
                }
            }
            Operator::Scale(q) => {
                let mi = to_i64(m)?;
                if v > 0 {
                    (m.clone(), q.pow(mi)?)
                } else if v < 0 {
                    (m - rat(v), -&t)
                } else {
                    (m.clone(), &q.pow(mi)? - &t)
                }
            }
            Operator::Shift(h) => {
                if v < 0 {
                    (m - rat(v), -&t)
                } else if v > 0 {
                    (m.clone(), one)
                } else if t != one {
                    (m.clone(), &one - &t)
                } else {
                    let e = m - rat(1);
                    let beta = self.a.coeff(1);
                    let ef = FieldElem::from_rational(e.clone());
                    (e, -(&(&ef * h) + &beta))
                }
            }
        };
        if kappa.is_zero() {
            return Err(Error::Resonance { exponent: e });
        }
        Ok((e, kappa))
    }

    /// Terms of `L(c·x^e)` below the target.
    fn image(&mut self, e: &BigRational, c: &FieldElem) -> Result<Vec<(BigRational, FieldElem)>> {
        let mut phi = Vec::new();
        match &self.op {
            Operator::Mahler(p) => phi.push((e * rat(*p as i64), c.clone())),
            Operator::Scale(q) => phi.push((e.clone(), c * &q.pow(to_i64(e)?)?)),
            Operator::Shift(h) => {
                // (1 + h·t)^{−e} applied to t^e
                let mut term = c.clone();
                let mut r = 0i64;
                let ef = FieldElem::from_rational(e.clone());
                while e + rat(r) < self.target && !term.is_zero() {
                    phi.push((e + rat(r), term.clone()));
                    let f = &(-&ef - &FieldElem::from_int(r)) * h;
                    term = &(&term * &f) / &FieldElem::from_int(r + 1);
                    r += 1;
                }
            }
        }
        let mut out = Vec::new();
        for (pe, pc) in &phi {
            for (k, d) in &self.d_terms {
                let x = pe + rat(*k);
                if x < self.target {
                    out.push((x, pc * d));
                }
            }
        }
        for (k, n) in &self.n_terms {
            let x = e + rat(*k);
            if x < self.target {
                out.push((x, -(n * c)));
            }
        }
        Ok(out)
    }
}

fn to_i64(r: &BigRational) -> Result<i64> {
    if !r.is_integer() {
        return Err(Error::Invariant(format!("non-integral exponent {r} outside the Mahler case")));
    }
    r.to_integer()
        .to_i64()
        .ok_or_else(|| Error::InvalidParameter(format!("exponent {r} out of range")))
}

fn sub_into(map: &mut BTreeMap<BigRational, FieldElem>, terms: Vec<(BigRational, FieldElem)>) {
    for (k, v) in terms {
        let entry = map.entry(k.clone()).or_insert_with(FieldElem::zero);
        *entry -= &v;
        if entry.is_zero() {
            map.remove(&k);
        }
    }
}

/// Lowest exponent of `L(x^e)` over all `e ≥ N`; the residual must vanish
/// below it for `y` to be exact below `N`.
fn residual_target(op: &Operator, v: i64, n: i64) -> i64 {
    match op {
        Operator::Mahler(p) => {
            let p = *p as i64;
            // N ≥ v/(p−1) ⇔ N + v ≤ p·N
            (n + v).min(p * n)
        }
        Operator::Scale(_) => n + v.min(0),
        Operator::Shift(_) => n + v.min(0) + 1,
    }
}

pub fn solve_order1_with(
    a: &RationalFunction,
    b: &RationalFunction,
    pair: &OperatorPair,
    role: Role,
    order: i64,
    opts: &SolveOptions,
) -> Result<Order1Solution> {
    if a.is_zero() {
        return Err(Error::InvalidParameter("order-one coefficient a must be nonzero".into()));
    }
    let op = pair.op(role).clone();
    let locus = op.locus();
    let homogeneous = b.is_zero();

    let raw = LazySeries::new(a.clone(), locus);
    let (a_used, normalization) = if homogeneous {
        let t = raw.coeffs[0].clone();
        let v = raw.valuation;
        let strip = match locus {
            Locus::AtZero => RationalFunction::x_pow(-v),
            Locus::AtInfinity => RationalFunction::x_pow(v),
        };
        let a_norm = (a * &strip).scale(&t.inv()?);
        (a_norm, Some((t, v)))
    } else {
        (a.clone(), None)
    };

    let lazy = LazySeries::new(a_used.clone(), locus);
    let v = lazy.valuation;
    let target = residual_target(&op, v, order);
    let d_unit = unit_denominator(&a_used, locus);
    let mut kernel = Kernel {
        op: op.clone(),
        d_terms: laurent_terms(&d_unit, locus),
        n_terms: laurent_terms(&(&a_used * &d_unit), locus),
        lead: lazy.coeffs[0].clone(),
        a: lazy,
        target: rat(target),
    };

    let mut y: BTreeMap<BigRational, FieldElem> = BTreeMap::new();
    let mut residual: BTreeMap<BigRational, FieldElem> = BTreeMap::new();
    let mut start = None;
    if homogeneous {
        let e0 = match &op {
            Operator::Shift(h) => {
                let beta = kernel.a.coeff(1);
                let e0 = (-&beta).checked_div(h)?;
                match e0.as_rational() {
                    Some(r) if r.is_integer() => r.clone(),
                    _ => {
                        return Err(Error::NoFormalSolution(format!(
                            "indicial exponent {e0} is not an integer"
                        )))
                    }
                }
            }
            _ => BigRational::zero(),
        };
        if !opts.init.is_zero() {
            y.insert(e0.clone(), opts.init.clone());
            let img = kernel.image(&e0, &opts.init)?;
            sub_into(&mut residual, img);
        }
        start = Some(e0);
    } else {
        let bs = rational_to_series(&(b * &d_unit), locus, target);
        let inner = bs.inner();
        let j = inner.ramification() as i64;
        for (k, c) in inner.coeffs().iter().enumerate() {
            if !c.is_zero() {
                residual.insert(BigRational::new((inner.valuation() + k as i64).into(), j.into()), c.clone());
            }
        }
    }

    let mut ram: BigInt = BigInt::one();
    let mut steps = 0usize;
    while let Some((m, r)) = residual.first_key_value() {
        let (m, r) = (m.clone(), r.clone());
        steps += 1;
        if steps > opts.step_cap {
            return Err(Error::NoFormalSolution(format!(
                "no convergence after {} elimination steps (residual at exponent {m})",
                opts.step_cap
            )));
        }
        let (e, kappa) = kernel.pivot(&m)?;
        ram = ram.lcm(e.denom());
        if ram > BigInt::from(opts.ramification_cap) {
            return Err(Error::NoFormalSolution(format!(
                "ramification exceeds {} near exponent {e}",
                opts.ramification_cap
            )));
        }
        let c = &r / &kappa;
        let slot = y.entry(e.clone()).or_insert_with(FieldElem::zero);
        *slot += &c;
        if slot.is_zero() {
            y.remove(&e);
        }
        let img = kernel.image(&e, &c)?;
        sub_into(&mut residual, img);
        if residual.contains_key(&m) {
            return Err(Error::Invariant(format!("pivot failed to clear exponent {m}")));
        }
    }

    let series = assemble(&y, locus, order, &ram)?;
    let equation = ScalarEquation::with_operator(
        pair,
        role,
        op,
        vec![-&a_used, RationalFunction::one()],
        b.clone(),
    )?;
    let verified_order = match residual_check(&equation, &series, None)? {
        Residual::Zero { order } => order,
        Residual::Nonzero { exponent, .. } => {
            return Err(Error::Invariant(format!(
                "solver output fails its own equation at exponent {exponent}"
            )))
        }
    };
    Ok(Order1Solution {
        series,
        equation,
        normalization: normalization.map(|(t_a, v_a)| Normalization {
            t_a,
            v_a,
            start_exponent: start.clone().unwrap_or_else(BigRational::zero),
        }),
        initial_value: homogeneous.then(|| opts.init.clone()),
        verified_order,
    })
}

fn assemble(y: &BTreeMap<BigRational, FieldElem>, locus: Locus, order: i64, ram: &BigInt) -> Result<Expansion> {
    let j = ram.to_i64().expect("ramification within cap");
    let Some(lo) = y.keys().next() else {
        return Ok(match locus {
            Locus::AtZero => Expansion::AtZero(TruncatedPuiseux::zero(order)),
            Locus::AtInfinity => Expansion::AtInfinity(AtInfinitySeries::zero(order)),
        });
    };
    let index = |e: &BigRational| -> i64 { (e * rat(j)).to_integer().to_i64().expect("index in range") };
    let v = index(lo);
    let top = order * j;
    let mut dense = vec![FieldElem::zero(); (top - v).max(0) as usize];
    for (e, c) in y {
        let k = index(e) - v;
        if k < 0 || k as usize >= dense.len() {
            continue;
        }
        dense[k as usize] = c.clone();
    }
    Ok(match locus {
        Locus::AtZero => Expansion::AtZero(TruncatedPuiseux::new(j as u64, v, dense, top)),
        Locus::AtInfinity => {
            if j != 1 {
                return Err(Error::Invariant("ramified expansion at infinity".into()));
            }
            Expansion::AtInfinity(AtInfinitySeries::new(v, dense, order))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rf(s: &str) -> RationalFunction {
        s.parse().unwrap()
    }

    #[test]
    fn thue_morse_product() {
        let pair = OperatorPair::mahler(2, 3).unwrap();
        let sol = solve_order1(&rf("1/(1-x)"), &RationalFunction::zero(), &pair, Role::Phi, 64).unwrap();
        // brute product ∏(1 − x^{2ⁿ}) to x^64
        let mut prod = vec![FieldElem::zero(); 64];
        prod[0] = FieldElem::one();
        let mut k = 1usize;
        while k < 64 {
            for i in (k..64).rev() {
                let t = prod[i - k].clone();
                prod[i] -= &t;
            }
            k *= 2;
        }
        let s = sol.series.inner();
        for (i, c) in prod.iter().enumerate() {
            assert_eq!(&s.coeff_at(i as i64), c, "coefficient {i}");
        }
        assert_eq!(s.order(), 64);
    }

    #[test]
    fn q_exponential() {
        let pair = OperatorPair::parse(crate::operators::Case::QScale, "2", "3").unwrap();
        let sol = solve_order1(&rf("1+x"), &RationalFunction::zero(), &pair, Role::Phi, 20).unwrap();
        let s = sol.series.inner();
        let mut f = FieldElem::one();
        for n in 1..20i64 {
            let qn = FieldElem::from_int(2).pow(n).unwrap();
            f = &f / &(&qn - &FieldElem::one());
            assert_eq!(s.coeff_at(n), f);
        }
    }

    #[test]
    fn trivial_constant() {
        for (case, phi, sigma) in [("2M", "2", "3"), ("2Q", "2", "3"), ("2S", "1", "i")] {
            let pair = OperatorPair::parse(case.parse().unwrap(), phi, sigma).unwrap();
            let sol = solve_order1(&RationalFunction::one(), &RationalFunction::zero(), &pair, Role::Phi, 10).unwrap();
            assert_eq!(sol.series.inner(), &TruncatedPuiseux::one(10));
        }
    }

    #[test]
    fn mahler_power_sum_inhomogeneous() {
        let pair = OperatorPair::mahler(2, 3).unwrap();
        let sol = solve_order1(&RationalFunction::one(), &rf("-x"), &pair, Role::Phi, 100).unwrap();
        let s = sol.series.inner();
        for i in 0..100i64 {
            let expect = if i > 0 && (i & (i - 1)) == 0 { 1 } else { 0 };
            assert_eq!(s.coeff_at(i), FieldElem::from_int(expect));
        }
    }

    #[test]
    fn shift_indicial_exponent() {
        let pair = OperatorPair::parse(crate::operators::Case::Shift, "1", "i").unwrap();
        // y(x+1) = (x+1)/x · y(x) has y = x
        let sol = solve_order1(&rf("(x+1)/x"), &RationalFunction::zero(), &pair, Role::Phi, 6).unwrap();
        assert_eq!(sol.series.inner(), &TruncatedPuiseux::monomial(FieldElem::one(), -1, 1, 6));
        let bad = solve_order1(&rf("(x+1/2)/x"), &RationalFunction::zero(), &pair, Role::Phi, 6);
        assert!(matches!(bad, Err(Error::NoFormalSolution(_))));
    }

    #[test]
    fn q_resonance() {
        let pair = OperatorPair::parse(crate::operators::Case::QScale, "2", "3").unwrap();
        // f(2x) = 8 f(x) + x^3 obstructs at exponent 3
        let err = solve_order1(&rf("8"), &rf("x^3"), &pair, Role::Phi, 10).unwrap_err();
        assert_eq!(err, Error::Resonance { exponent: rat(3) });
    }

    #[test]
    fn mahler_below_balance_has_no_puiseux_solution() {
        let pair = OperatorPair::mahler(2, 3).unwrap();
        // y(x^2) = x^3·y(x) + x forces exponents 1/2, 7/4, 19/8, ... → 3
        let err = solve_order1(&rf("x^3"), &rf("x"), &pair, Role::Phi, 8).unwrap_err();
        assert!(matches!(err, Error::NoFormalSolution(_)));
    }
}
