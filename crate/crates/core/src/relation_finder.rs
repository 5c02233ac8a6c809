//! Bounded-degree algebraic relation search between truncated series, σ-probes
//! and σ-dimension profiles.
//!
//! Candidate columns are `x^k·Y^α`; a column is dependent when it lies in the
//! span of the columns before it, the first dependent column yields the
//! canonical relation.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{Operator, OperatorPair, Role};
use crate::series_core::gaussian::GaussInt;
use crate::series_core::{AtInfinitySeries, FieldElem, Locus, Polynomial, TruncatedPuiseux};

/// Minimum ratio of equations to unknowns, as `num/den`.
const MARGIN: (usize, usize) = (5, 4);

/// A series that can be produced to any requested order, or only up to a
/// fixed one.
pub trait SeriesSource {
    fn label(&self) -> String;
    fn expand(&self, order: i64) -> Result<TruncatedPuiseux>;
    /// Whether `expand` reaches past the order the source was built with.
    fn extendable(&self) -> bool;
}

impl SeriesSource for TruncatedPuiseux {
    fn label(&self) -> String {
        "series".into()
    }

    fn expand(&self, order: i64) -> Result<TruncatedPuiseux> {
        if order > self.order() {
            return Err(Error::InsufficientOrder(format!(
                "series trusted to {} but {order} requested",
                self.order_q()
            )));
        }
        Ok(self.truncate(order * self.ramification() as i64))
    }

    fn extendable(&self) -> bool {
        false
    }
}

/// A source defined by a generator closure.
pub struct FnSource<F> {
    pub label: String,
    pub generate: F,
}

impl<F: Fn(i64) -> Result<TruncatedPuiseux>> SeriesSource for FnSource<F> {
    fn label(&self) -> String {
        self.label.clone()
    }

    fn expand(&self, order: i64) -> Result<TruncatedPuiseux> {
        (self.generate)(order)
    }

    fn extendable(&self) -> bool {
        true
    }
}

/// `op(f)` for a base source; the base is expanded just far enough.
pub struct Twisted<'a> {
    pub base: &'a dyn SeriesSource,
    pub op: Operator,
    pub q_root: Option<FieldElem>,
}

impl SeriesSource for Twisted<'_> {
    fn label(&self) -> String {
        format!("({})|{}", self.base.label(), self.op)
    }

    fn expand(&self, order: i64) -> Result<TruncatedPuiseux> {
        match &self.op {
            Operator::Mahler(p) => {
                let p = *p as i64;
                let need = Integer::div_ceil(&order, &p).max(order.min(0));
                let s = self.base.expand(need)?;
                Ok(s.substitute_power(p as u64))
            }
            Operator::Scale(q) => self.base.expand(order)?.substitute_scale(q, self.q_root.as_ref()),
            Operator::Shift(h) => {
                let s = self.base.expand(order)?;
                if s.ramification() != 1 {
                    return Err(Error::RamificationMismatch("shifts act on unramified series at infinity".into()));
                }
                Ok(AtInfinitySeries::from_t_series(s).substitute_shift(h).as_t_series().clone())
            }
        }
    }

    fn extendable(&self) -> bool {
        self.base.extendable()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationQuery {
    #[serde(rename = "D")]
    pub total_degree: u32,
    #[serde(rename = "Dx")]
    pub x_degree: u32,
    #[serde(rename = "N")]
    pub truncation: i64,
    pub allow_x_coefficients: bool,
    /// Restrict to monomials of total degree exactly `D`.
    #[serde(default)]
    pub homogeneous: bool,
}

impl RelationQuery {
    pub fn new(total_degree: u32, x_degree: u32, truncation: i64) -> Self {
        RelationQuery {
            total_degree,
            x_degree,
            truncation,
            allow_x_coefficients: true,
            homogeneous: false,
        }
    }

    /// Homogeneous linear search `Σ a_i(x)·Y_i = 0`, `deg a_i ≤ Dx`.
    pub fn linear(x_degree: u32, truncation: i64) -> Self {
        RelationQuery {
            homogeneous: true,
            ..RelationQuery::new(1, x_degree, truncation)
        }
    }

    fn dx(&self) -> u32 {
        if self.allow_x_coefficients {
            self.x_degree
        } else {
            0
        }
    }

    pub fn bounds(&self) -> Bounds {
        Bounds {
            d: self.total_degree,
            dx: self.dx(),
            n: self.truncation,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bounds {
    #[serde(rename = "D")]
    pub d: u32,
    #[serde(rename = "Dx")]
    pub dx: u32,
    #[serde(rename = "N")]
    pub n: i64,
}

/// `Σ_α P_α(x)·Y^α` with `Y_i` the i-th input series.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationPolynomial {
    pub nvars: usize,
    /// Keyed by exponent vector, in descending monomial order when printed.
    pub terms: Vec<(Vec<u32>, Polynomial)>,
}

impl RelationPolynomial {
    pub fn total_degree(&self) -> u32 {
        self.terms.iter().map(|(a, _)| a.iter().sum::<u32>()).max().unwrap_or(0)
    }

    /// Substitutes series for the `Y_i`; the result is trusted to the
    /// smallest order among the terms.
    pub fn evaluate(&self, ys: &[TruncatedPuiseux], order: i64) -> Result<TruncatedPuiseux> {
        if ys.len() != self.nvars {
            return Err(Error::DimensionMismatch("relation arity".into()));
        }
        let mut powers = PowerCache::new(ys, order);
        let mut acc: Option<TruncatedPuiseux> = None;
        for (alpha, p) in &self.terms {
            let m = powers.get(alpha)?;
            let mut term = TruncatedPuiseux::zero(order);
            for (k, c) in p.coeffs().iter().enumerate() {
                if !c.is_zero() {
                    term = term.add(&m.mul_monomial(k as i64, 1).scale(c));
                }
            }
            acc = Some(match acc {
                None => term,
                Some(a) => a.add(&term),
            });
        }
        Ok(acc.unwrap_or_else(|| TruncatedPuiseux::zero(order)))
    }
}

impl fmt::Display for RelationPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (alpha, p) in self.terms.iter().rev() {
            let mono: Vec<String> = alpha
                .iter()
                .enumerate()
                .filter(|(_, e)| **e > 0)
                .map(|(i, e)| if *e == 1 { format!("Y{}", i + 1) } else { format!("Y{}^{}", i + 1, e) })
                .collect();
            let coeff = p.to_string();
            let simple = p.coeffs().iter().filter(|c| !c.is_zero()).count() == 1 && p.is_constant();
            let body = match (mono.is_empty(), coeff.as_str()) {
                (true, _) => coeff.clone(),
                (false, "1") => mono.join("*"),
                (false, "-1") => format!("-{}", mono.join("*")),
                (false, _) if simple && !coeff.contains(['+', ' ']) && !coeff[1..].contains('-') => {
                    format!("{coeff}*{}", mono.join("*"))
                }
                (false, _) => format!("({coeff})*{}", mono.join("*")),
            };
            if first {
                write!(f, "{body}")?;
                first = false;
            } else if let Some(rest) = body.strip_prefix('-') {
                write!(f, " - {rest}")?;
            } else {
                write!(f, " + {body}")?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    pub polynomial: RelationPolynomial,
    /// Order in `x` below which the substituted relation vanishes exactly.
    pub verified_order: i64,
    /// False when some input could not be extended past `N`.
    pub extended: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RelationOutcome {
    Relation(Relation),
    /// The nullspace at the bounds is exactly zero.
    NoRelationAtBound(Bounds),
    /// A nullspace vector exists at `N` but fails at the extended order.
    Spurious {
        polynomial: RelationPolynomial,
        failed_at: BigRational,
        bounds: Bounds,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationReport {
    pub verdict: String,
    pub bounds: Bounds,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relation: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verified_order: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extended: Option<bool>,
    pub statement: String,
}

impl RelationOutcome {
    pub fn report(&self, bounds: Bounds) -> RelationReport {
        match self {
            RelationOutcome::Relation(r) => RelationReport {
                verdict: "relation".into(),
                bounds,
                relation: Some(r.polynomial.to_string()),
                verified_order: Some(r.verified_order),
                extended: Some(r.extended),
                statement: format!(
                    "relation vanishes modulo x^{}{}",
                    r.verified_order,
                    if r.extended { "" } else { " (inputs not extendable past N)" }
                ),
            },
            RelationOutcome::NoRelationAtBound(b) => RelationReport {
                verdict: "no_relation_at_bound".into(),
                bounds: *b,
                relation: None,
                verified_order: None,
                extended: None,
                statement: format!(
                    "no relation with total degree <= {}, x-degree <= {}: the nullspace of the system truncated at x^{} is exactly zero",
                    b.d, b.dx, b.n
                ),
            },
            RelationOutcome::Spurious {
                polynomial, failed_at, ..
            } => RelationReport {
                verdict: "spurious_at_bound".into(),
                bounds,
                relation: Some(polynomial.to_string()),
                verified_order: None,
                extended: Some(true),
                statement: format!("nullspace vector at N fails at exponent {failed_at}"),
            },
        }
    }
}

/// Products `Y^α`, built incrementally.
struct PowerCache<'a> {
    ys: &'a [TruncatedPuiseux],
    order: i64,
    memo: BTreeMap<Vec<u32>, TruncatedPuiseux>,
}

impl<'a> PowerCache<'a> {
    fn new(ys: &'a [TruncatedPuiseux], order: i64) -> Self {
        PowerCache {
            ys,
            order,
            memo: BTreeMap::new(),
        }
    }

    fn get(&mut self, alpha: &[u32]) -> Result<TruncatedPuiseux> {
        if let Some(s) = self.memo.get(alpha) {
            return Ok(s.clone());
        }
        let s = match alpha.iter().position(|e| *e > 0) {
            None => TruncatedPuiseux::one(self.order),
            Some(i) => {
                let mut lower = alpha.to_vec();
                lower[i] -= 1;
                let base = self.get(&lower)?;
                base.mul(&self.ys[i])
            }
        };
        self.memo.insert(alpha.to_vec(), s.clone());
        Ok(s)
    }
}

/// All `α ∈ ℕ^m` with `|α| ≤ d` (or `= d`), graded then lexicographic.
fn monomials(m: usize, d: u32, homogeneous: bool) -> Vec<Vec<u32>> {
    fn rec(m: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for e in 0..=left {
            cur.push(e);
            rec(m, left - e, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, d, &mut Vec::new(), &mut out);
    if homogeneous {
        out.retain(|a| a.iter().sum::<u32>() == d);
    }
    out.sort_by(|a, b| {
        let da: u32 = a.iter().sum();
        let db: u32 = b.iter().sum();
        da.cmp(&db).then_with(|| a.cmp(b))
    });
    out
}

/// Highest variable index in use, 0 for the constant monomial.
fn stage_of(alpha: &[u32]) -> usize {
    alpha.iter().rposition(|e| *e > 0).unwrap_or(0)
}

fn gi_sub(a: &GaussInt, b: &GaussInt) -> GaussInt {
    GaussInt {
        re: &a.re - &b.re,
        im: &a.im - &b.im,
    }
}

fn gi_bits(a: &GaussInt) -> u64 {
    a.re.bits() + a.im.bits()
}

/// Scales a rational column to Gaussian integers; returns the scale.
fn integralize(col: &[FieldElem]) -> (Vec<GaussInt>, BigInt) {
    let mut d = BigInt::one();
    for c in col {
        d = d.lcm(&c.denominator_lcm());
    }
    let df = BigRational::from_integer(d.clone());
    let v = col
        .iter()
        .map(|c| GaussInt {
            re: (&c.re * &df).to_integer(),
            im: (&c.im * &df).to_integer(),
        })
        .collect();
    (v, d)
}

fn content(vs: &[&[GaussInt]]) -> GaussInt {
    let mut g = GaussInt::new(0, 0);
    for v in vs {
        for x in v.iter() {
            if !x.is_zero() {
                g = GaussInt::gcd(&g, x);
                if g.norm().is_one() {
                    return g;
                }
            }
        }
    }
    g
}

/// Rational-integer content; much cheaper than the Gaussian gcd.
fn integer_content(vs: &[&[GaussInt]]) -> BigInt {
    let mut g = BigInt::zero();
    for v in vs {
        for x in v.iter() {
            for part in [&x.re, &x.im] {
                if !part.is_zero() {
                    g = g.gcd(part);
                    if g.is_one() {
                        return g;
                    }
                }
            }
        }
    }
    g
}

fn divide_all_int(v: &mut [GaussInt], g: &BigInt) {
    for x in v.iter_mut() {
        x.re /= g;
        x.im /= g;
    }
}

struct Basis {
    vec: Vec<GaussInt>,
    combo: Vec<GaussInt>,
    pivot: usize,
}

/// Same contract as [`column_dependencies`], by exact fraction-free
/// elimination over ℤ[i] with smallest-bit-length pivots.
pub fn column_dependencies_fraction_free(cols: &[Vec<FieldElem>]) -> Vec<Option<Vec<FieldElem>>> {
    let ncols = cols.len();
    let mut basis: Vec<Basis> = Vec::new();
    let mut out = Vec::with_capacity(ncols);
    for (k, col) in cols.iter().enumerate() {
        let (mut v, scale) = integralize(col);
        let mut combo = vec![GaussInt::new(0, 0); ncols];
        combo[k] = GaussInt::new(scale, 0);
        for b in &basis {
            let c = v[b.pivot].clone();
            if c.is_zero() {
                continue;
            }
            let p = &b.vec[b.pivot];
            for (x, y) in v.iter_mut().zip(&b.vec) {
                if !x.is_zero() || !y.is_zero() {
                    *x = gi_sub(&x.mul(p), &y.mul(&c));
                }
            }
            for (x, y) in combo.iter_mut().zip(&b.combo) {
                if !x.is_zero() || !y.is_zero() {
                    *x = gi_sub(&x.mul(p), &y.mul(&c));
                }
            }
            let g = integer_content(&[&v, &combo]);
            if !g.is_zero() && !g.is_one() {
                divide_all_int(&mut v, &g);
                divide_all_int(&mut combo, &g);
            }
        }
        let pivot = v
            .iter()
            .enumerate()
            .filter(|(_, x)| !x.is_zero())
            .min_by_key(|(i, x)| (gi_bits(x), *i))
            .map(|(i, _)| i);
        match pivot {
            Some(pivot) => {
                out.push(None);
                basis.push(Basis { vec: v, combo, pivot });
            }
            None => {
                let lead = combo[k].to_field();
                let w = combo.iter().map(|c| &c.to_field() / &lead).collect();
                out.push(Some(w));
            }
        }
    }
    out
}

/// Primes `p ≡ 1 (mod 4)`, so that `i` has an image in `𝔽_p`.
const PRIMES: [u64; 6] = [
    4611686018427387817,
    4611686018427387761,
    4611686018427387737,
    4611686018427387733,
    4611686018427387709,
    4611686018427387701,
];

struct ModP {
    p: u64,
    /// A square root of −1.
    iota: u64,
}

impl ModP {
    fn new(p: u64) -> Self {
        let mut g = 2;
        loop {
            let m = ModP { p, iota: 0 };
            let r = m.pow(g, (p - 1) / 4);
            if m.mul(r, r) == p - 1 {
                return ModP { p, iota: r };
            }
            g += 1;
        }
    }

    fn mul(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.p as u128) as u64
    }

    fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + (self.p - b)
        }
    }

    fn pow(&self, mut a: u64, mut e: u64) -> u64 {
        let mut r = 1;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        r
    }

    fn inv(&self, a: u64) -> u64 {
        self.pow(a, self.p - 2)
    }

    fn reduce_int(&self, n: &BigInt) -> u64 {
        let p = BigInt::from(self.p);
        let r = n.mod_floor(&p);
        r.to_u64().expect("reduced below p")
    }

    fn reduce(&self, z: &GaussInt) -> u64 {
        let re = self.reduce_int(&z.re);
        let im = self.reduce_int(&z.im);
        (re + self.mul(im, self.iota)) % self.p
    }
}

/// Solves `A·x = b` for a nonsingular square `A` over ℤ[i]: Bareiss forward
/// elimination, then back substitution in ℚ(i).
fn solve_square(mut m: Vec<Vec<GaussInt>>) -> Option<Vec<FieldElem>> {
    let r = m.len();
    let mut prev = GaussInt::new(1, 0);
    for k in 0..r {
        let piv = (k..r).find(|&i| !m[i][k].is_zero())?;
        m.swap(k, piv);
        for i in k + 1..r {
            for j in k + 1..=r {
                let t = gi_sub(&m[k][k].mul(&m[i][j]), &m[i][k].mul(&m[k][j]));
                m[i][j] = t.exact_div(&prev)?;
            }
            m[i][k] = GaussInt::new(0, 0);
        }
        prev = m[k][k].clone();
    }
    let mut x = vec![FieldElem::zero(); r];
    for k in (0..r).rev() {
        let mut acc = m[k][r].to_field();
        for j in k + 1..r {
            if !m[k][j].is_zero() {
                acc = &acc - &(&m[k][j].to_field() * &x[j]);
            }
        }
        x[k] = acc.checked_div(&m[k][k].to_field()).ok()?;
    }
    Some(x)
}

enum ModularRun {
    Done(Vec<Option<Vec<FieldElem>>>),
    /// A column dependent modulo `p` proved independent over ℚ(i).
    UnluckyPrime,
}

fn modular_dependencies(ints: &[(Vec<GaussInt>, BigInt)], field: &ModP) -> ModularRun {
    let ncols = ints.len();
    // (column index, pivot row, reduced vector)
    let mut basis: Vec<(usize, usize, Vec<u64>)> = Vec::new();
    let mut out = Vec::with_capacity(ncols);
    for (k, (col, scale)) in ints.iter().enumerate() {
        let mut v: Vec<u64> = col.iter().map(|z| field.reduce(z)).collect();
        for (_, piv, b) in &basis {
            let c = v[*piv];
            if c == 0 {
                continue;
            }
            let f = field.mul(c, field.inv(b[*piv]));
            for (x, y) in v.iter_mut().zip(b) {
                if *y != 0 {
                    *x = field.sub(*x, field.mul(f, *y));
                }
            }
        }
        if let Some(piv) = v.iter().position(|x| *x != 0) {
            basis.push((k, piv, v));
            out.push(None);
            continue;
        }
        // exact solve on the pivot rows, where the basis is nonsingular
        let rows: Vec<usize> = basis.iter().map(|(_, piv, _)| *piv).collect();
        let system: Vec<Vec<GaussInt>> = rows
            .iter()
            .map(|&r| {
                let mut row: Vec<GaussInt> = basis.iter().map(|(j, _, _)| ints[*j].0[r].clone()).collect();
                row.push(col[r].clone());
                row
            })
            .collect();
        let Some(x) = solve_square(system) else {
            return ModularRun::UnluckyPrime;
        };
        let holds = (0..col.len()).all(|r| {
            let mut acc = FieldElem::zero();
            for ((j, _, _), xj) in basis.iter().zip(&x) {
                let e = &ints[*j].0[r];
                if !e.is_zero() && !xj.is_zero() {
                    acc = &acc + &(xj * &e.to_field());
                }
            }
            acc == col[r].to_field()
        });
        if !holds {
            return ModularRun::UnluckyPrime;
        }
        let mut w = vec![FieldElem::zero(); ncols];
        let dk = FieldElem::from_bigint(scale.clone());
        for ((j, _, _), xj) in basis.iter().zip(&x) {
            let dj = FieldElem::from_bigint(ints[*j].1.clone());
            w[*j] = -&(&(xj * &dj) / &dk);
        }
        w[k] = FieldElem::one();
        out.push(Some(w));
    }
    ModularRun::Done(out)
}

/// For each column in order: `None` if it is independent of the columns
/// before it, else the canonical dependency `w` (supported on earlier
/// independent columns and this one, `w[this] = 1`, `Σ w_j·col_j = 0`).
///
/// Candidates come from elimination modulo a large prime; independence
/// there implies independence over ℚ(i), and every dependency is solved and
/// checked exactly before it is reported.
pub fn column_dependencies(cols: &[Vec<FieldElem>]) -> Vec<Option<Vec<FieldElem>>> {
    let ints: Vec<(Vec<GaussInt>, BigInt)> = cols.iter().map(|c| integralize(c)).collect();
    for p in PRIMES {
        if let ModularRun::Done(out) = modular_dependencies(&ints, &ModP::new(p)) {
            return out;
        }
    }
    column_dependencies_fraction_free(cols)
}

/// One candidate column `x^k·Y^α`.
#[derive(Clone, Debug)]
struct Column {
    alpha: Vec<u32>,
    k: u32,
}

/// Evaluation matrix columns for the given candidate list at truncation `N`.
fn evaluation_columns(ys: &[TruncatedPuiseux], cands: &[Column], n: i64) -> Result<Vec<Vec<FieldElem>>> {
    let j = ys.iter().fold(1u64, |acc, s| acc.lcm(&s.ramification()));
    let mut powers = PowerCache::new(ys, n);
    let mut series = Vec::with_capacity(cands.len());
    let nq = BigRational::from_integer(n.into());
    for c in cands {
        let base = powers.get(&c.alpha)?;
        let s = base.mul_monomial(c.k as i64, 1);
        if s.order_q() < nq && !(s.is_zero() && s.order_q() >= nq) {
            return Err(Error::InsufficientOrder(format!(
                "monomial trusted only to x^{} but N = {n}",
                s.order_q()
            )));
        }
        series.push(s);
    }
    let lo = series
        .iter()
        .filter(|s| !s.is_zero())
        .map(|s| (s.valuation_q() * BigRational::from_integer((j as i64).into())).to_integer())
        .min()
        .map(|v| v.to_i64().expect("valuation in range"))
        .unwrap_or(0)
        .min(0);
    let hi = n * j as i64;
    let jq = BigRational::from_integer((j as i64).into());
    Ok(series
        .iter()
        .map(|s| {
            (lo..hi)
                .map(|i| {
                    s.coeff_q(&(BigRational::from_integer(i.into()) / &jq))
                        .unwrap_or_else(FieldElem::zero)
                })
                .collect()
        })
        .collect())
}

fn check_margin(rows: usize, cols: usize) -> Result<()> {
    if rows * MARGIN.1 < cols * MARGIN.0 || rows <= cols {
        return Err(Error::InvalidParameter(format!(
            "{rows} equations for {cols} unknowns: the query needs at least 25% more equations than candidate monomials"
        )));
    }
    Ok(())
}

/// Trusted order needed from each input so that products of `d` factors
/// still reach `x^n`.
fn input_order(ys: &[TruncatedPuiseux], n: i64, d: u32) -> i64 {
    let vmin = ys
        .iter()
        .filter(|s| !s.is_zero())
        .map(|s| s.valuation_q())
        .min()
        .unwrap_or_else(BigRational::zero);
    if vmin.is_negative() {
        n + (-vmin * BigRational::from_integer((d.max(1) as i64 - 1).into()))
            .ceil()
            .to_integer()
            .to_i64()
            .expect("order in range")
    } else {
        n
    }
}

fn expand_all(sources: &[&dyn SeriesSource], n: i64, d: u32) -> Result<Vec<TruncatedPuiseux>> {
    let first: Vec<TruncatedPuiseux> = sources.iter().map(|s| s.expand(n)).collect::<Result<_>>()?;
    let need = input_order(&first, n, d);
    if need == n {
        return Ok(first);
    }
    sources.iter().map(|s| s.expand(need)).collect()
}

fn build_relation(nvars: usize, cands: &[Column], w: &[FieldElem]) -> RelationPolynomial {
    // primitive Gaussian-integer multiple with normalized leading coefficient
    let mut d = BigInt::one();
    for c in w {
        d = d.lcm(&c.denominator_lcm());
    }
    let df = BigRational::from_integer(d);
    let mut ints: Vec<GaussInt> = w
        .iter()
        .map(|c| GaussInt {
            re: (&c.re * &df).to_integer(),
            im: (&c.im * &df).to_integer(),
        })
        .collect();
    let zg = integer_content(&[&ints]);
    divide_all_int(&mut ints, &zg);
    let g = content(&[&ints]);
    let lead_idx = ints.iter().rposition(|c| !c.is_zero()).expect("nonzero relation");
    let lead = ints[lead_idx].exact_div(&g).expect("content divides");
    let (_, u) = lead.normalized();
    // multiply by i^{−u} so the leading coefficient is the normalized associate
    let unit = match u {
        0 => GaussInt::new(1, 0),
        1 => GaussInt::new(0, -1),
        2 => GaussInt::new(-1, 0),
        _ => GaussInt::new(0, 1),
    };
    let mut by_alpha: BTreeMap<Vec<u32>, Vec<FieldElem>> = BTreeMap::new();
    for (c, col) in ints.iter().zip(cands) {
        if c.is_zero() {
            continue;
        }
        let v = c.exact_div(&g).expect("content divides").mul(&unit).to_field();
        let entry = by_alpha.entry(col.alpha.clone()).or_default();
        if entry.len() <= col.k as usize {
            entry.resize(col.k as usize + 1, FieldElem::zero());
        }
        entry[col.k as usize] = v;
    }
    let mut terms: Vec<(Vec<u32>, Polynomial)> = by_alpha
        .into_iter()
        .map(|(a, cs)| (a, Polynomial::new(cs)))
        .collect();
    terms.sort_by(|a, b| {
        let da: u32 = a.0.iter().sum();
        let db: u32 = b.0.iter().sum();
        da.cmp(&db).then_with(|| a.0.cmp(&b.0))
    });
    RelationPolynomial { nvars, terms }
}

/// First exponent where the relation fails, if any below `order`.
fn verify_relation(rel: &RelationPolynomial, sources: &[&dyn SeriesSource], order: i64) -> Result<Option<BigRational>> {
    let ys = expand_all(sources, order, rel.total_degree())?;
    let r = rel.evaluate(&ys, order)?;
    let ord = BigRational::from_integer(order.into());
    if r.order_q() < ord {
        return Err(Error::InsufficientOrder(format!("relation evaluated only to x^{}", r.order_q())));
    }
    Ok(if r.is_zero() { None } else { Some(r.valuation_q()) })
}

/// Searches for `P(Y_1, …, Y_m)` with polynomial `x`-coefficients vanishing
/// on the inputs to `x^N`; any hit is re-verified at `2N` when all inputs
/// extend.
pub fn find_relation(sources: &[&dyn SeriesSource], query: &RelationQuery) -> Result<RelationOutcome> {
    if sources.is_empty() {
        return Err(Error::InvalidParameter("no input series".into()));
    }
    if query.total_degree == 0 {
        return Err(Error::InvalidParameter("total degree must be at least 1".into()));
    }
    let n = query.truncation;
    let ys = expand_all(sources, n, query.total_degree)?;
    let cands: Vec<Column> = monomials(sources.len(), query.total_degree, query.homogeneous)
        .into_iter()
        .flat_map(|alpha| (0..=query.dx()).map(move |k| Column { alpha: alpha.clone(), k }))
        .collect();
    let cols = evaluation_columns(&ys, &cands, n)?;
    check_margin(cols.first().map_or(0, |c| c.len()), cols.len())?;
    let deps = column_dependencies(&cols);
    let Some(w) = deps.into_iter().flatten().next() else {
        return Ok(RelationOutcome::NoRelationAtBound(query.bounds()));
    };
    let poly = build_relation(sources.len(), &cands, &w);
    let extended = sources.iter().all(|s| s.extendable());
    let check_order = if extended { 2 * n } else { n };
    match verify_relation(&poly, sources, check_order)? {
        None => Ok(RelationOutcome::Relation(Relation {
            polynomial: poly,
            verified_order: check_order,
            extended,
        })),
        Some(at) => Ok(RelationOutcome::Spurious {
            polynomial: poly,
            failed_at: at,
            bounds: query.bounds(),
        }),
    }
}

/// Relation search among `f, σ(f), …, σ^m(f)`.
pub fn sigma_probe(
    f: &dyn SeriesSource,
    pair: &OperatorPair,
    m: u32,
    query: &RelationQuery,
    q_root: Option<&FieldElem>,
) -> Result<RelationOutcome> {
    let twists = twists(f, pair, m, q_root)?;
    let refs: Vec<&dyn SeriesSource> = twists.iter().map(|t| t as &dyn SeriesSource).collect();
    find_relation(&refs, query)
}

fn twists<'a>(f: &'a dyn SeriesSource, pair: &OperatorPair, m: u32, q_root: Option<&FieldElem>) -> Result<Vec<Twisted<'a>>> {
    let sigma = pair.op(Role::Sigma);
    if sigma.locus() == Locus::AtInfinity && q_root.is_some() {
        return Err(Error::InvalidParameter("a root of q is meaningless for shifts".into()));
    }
    (0..=m)
        .map(|i| {
            let op = if i == 0 {
                identity_like(sigma)
            } else {
                sigma.power(i as u64)?
            };
            Ok(Twisted {
                base: f,
                op,
                q_root: match (sigma, q_root) {
                    (Operator::Scale(_), Some(r)) => Some(r.pow_u(i as u64)),
                    _ => None,
                },
            })
        })
        .collect()
}

fn identity_like(op: &Operator) -> Operator {
    match op {
        Operator::Shift(_) => Operator::Shift(FieldElem::zero()),
        Operator::Scale(_) => Operator::Scale(FieldElem::one()),
        Operator::Mahler(_) => Operator::Mahler(1),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionProfile {
    /// `d[i]`: number of monomials in `f, …, σ^i(f)` of degree `≤ D` that are
    /// independent over polynomials of degree `≤ Dx`, at truncation `N`.
    pub d: Vec<u64>,
    /// Candidate monomial count at each stage.
    pub monomials: Vec<u64>,
    pub bounds: Bounds,
}

impl DimensionProfile {
    pub fn is_nondecreasing(&self) -> bool {
        self.d.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.d.windows(2).all(|w| w[0] < w[1])
    }
}

/// σ-dimension profile `d_0, …, d_{i_max}`. A monomial block
/// `{x^k·Y^α : k ≤ Dx}` counts as dependent when one of its columns lies in
/// the span of the columns before it; stage `i` columns are a prefix of
/// stage `i+1` columns, so the profile is nondecreasing.
pub fn sigma_dimension_profile(
    f: &dyn SeriesSource,
    pair: &OperatorPair,
    i_max: u32,
    query: &RelationQuery,
    q_root: Option<&FieldElem>,
) -> Result<DimensionProfile> {
    let tw = twists(f, pair, i_max, q_root)?;
    let refs: Vec<&dyn SeriesSource> = tw.iter().map(|t| t as &dyn SeriesSource).collect();
    let n = query.truncation;
    let ys = expand_all(&refs, n, query.total_degree)?;
    let mut alphas = monomials(refs.len(), query.total_degree, query.homogeneous);
    alphas.sort_by_key(|a| stage_of(a));
    let cands: Vec<Column> = alphas
        .iter()
        .flat_map(|alpha| (0..=query.dx()).map(move |k| Column { alpha: alpha.clone(), k }))
        .collect();
    let cols = evaluation_columns(&ys, &cands, n)?;
    check_margin(cols.first().map_or(0, |c| c.len()), cols.len())?;
    let deps = column_dependencies(&cols);
    let mut dependent: BTreeMap<Vec<u32>, bool> = BTreeMap::new();
    for (c, dep) in cands.iter().zip(&deps) {
        *dependent.entry(c.alpha.clone()).or_default() |= dep.is_some();
    }
    let mut d = Vec::new();
    let mut counts = Vec::new();
    for i in 0..=i_max as usize {
        let in_stage: Vec<&Vec<u32>> = alphas.iter().filter(|a| stage_of(a) <= i).collect();
        counts.push(in_stage.len() as u64);
        d.push(in_stage.iter().filter(|a| !dependent[**a]).count() as u64);
    }
    Ok(DimensionProfile {
        d,
        monomials: counts,
        bounds: query.bounds(),
    })
}
