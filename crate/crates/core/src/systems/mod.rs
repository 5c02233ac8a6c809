//! Scalar difference equations, first-order systems `φ(Y) = A·Y`, and exact
//! series solving with residual verification.

pub mod matrix;
mod solve;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

pub use matrix::RMatrix;
pub use solve::{solve_order1, solve_order1_with, Normalization, Order1Solution, SolveOptions};

use crate::error::{Error, Result};
use crate::operators::{Case, Operator, OperatorPair, PairRecord, Role};
use crate::series_core::{rational_to_series, Expansion, FieldElem, Locus, RationalFunction, TruncatedPuiseux};

/// `Σ_{k=0}^{n} a_k · op^k(y) = rhs`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScalarEquation {
    pub pair: OperatorPair,
    pub role: Role,
    /// The acting operator: `pair.op(role)` or one of its iterates.
    pub op: Operator,
    pub coeffs: Vec<RationalFunction>,
    pub rhs: RationalFunction,
}

impl ScalarEquation {
    pub fn new(pair: &OperatorPair, role: Role, coeffs: Vec<RationalFunction>, rhs: RationalFunction) -> Result<Self> {
        let op = pair.op(role).clone();
        ScalarEquation::with_operator(pair, role, op, coeffs, rhs)
    }

    pub fn with_operator(
        pair: &OperatorPair,
        role: Role,
        op: Operator,
        coeffs: Vec<RationalFunction>,
        rhs: RationalFunction,
    ) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::InvalidParameter("an equation needs order n >= 1".into()));
        }
        if coeffs.last().unwrap().is_zero() {
            return Err(Error::InvalidParameter("leading coefficient a_n must be nonzero".into()));
        }
        Ok(ScalarEquation {
            pair: pair.clone(),
            role,
            op,
            coeffs,
            rhs,
        })
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_homogeneous(&self) -> bool {
        self.rhs.is_zero()
    }

    /// Divides through by `a_n`.
    pub fn normalized(&self) -> Self {
        let lead = self.coeffs.last().unwrap().clone();
        if lead.is_one() {
            return self.clone();
        }
        let inv = lead.inv().expect("nonzero leading coefficient");
        ScalarEquation {
            coeffs: self.coeffs.iter().map(|c| c * &inv).collect(),
            rhs: &self.rhs * &inv,
            ..self.clone()
        }
    }

    pub fn locus(&self) -> Locus {
        self.op.locus()
    }

    pub fn record(&self) -> EquationRecord {
        EquationRecord {
            op: self.role,
            pair: self.pair.record(),
            operator: self.op.to_string(),
            coeffs: self.coeffs.iter().map(|c| c.to_string()).collect(),
            rhs: self.rhs.to_string(),
        }
    }
}

/// Serialized form of a scalar equation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquationRecord {
    pub op: Role,
    #[serde(flatten)]
    pub pair: PairRecord,
    pub operator: String,
    pub coeffs: Vec<String>,
    pub rhs: String,
}

/// `op(Y) = A·Y` with `A` invertible over K.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiffSystem {
    pub pair: OperatorPair,
    pub role: Role,
    pub op: Operator,
    pub a: RMatrix,
}

impl DiffSystem {
    pub fn new(pair: &OperatorPair, role: Role, a: RMatrix) -> Result<Self> {
        let op = pair.op(role).clone();
        DiffSystem::with_operator(pair, role, op, a)
    }

    pub fn with_operator(pair: &OperatorPair, role: Role, op: Operator, a: RMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch("system matrix must be square".into()));
        }
        if a.determinant()?.is_zero() {
            return Err(Error::SingularMatrix);
        }
        Ok(DiffSystem {
            pair: pair.clone(),
            role,
            op,
            a,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    pub fn record(&self) -> SystemRecord {
        SystemRecord {
            op: self.role,
            pair: self.pair.record(),
            operator: self.op.to_string(),
            a: self.a.fmt_rows(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemRecord {
    pub op: Role,
    #[serde(flatten)]
    pub pair: PairRecord,
    pub operator: String,
    #[serde(rename = "A")]
    pub a: Vec<Vec<String>>,
}

/// Companion matrix with last row `(−a₀, …, −a_{n−1})` of the normalized
/// equation; acts on `Y = (y, φy, …, φ^{n−1}y)`.
pub fn companion_system(eq: &ScalarEquation) -> Result<DiffSystem> {
    if eq.coeffs[0].is_zero() {
        return Err(Error::SingularLeadingCoefficient);
    }
    let eq = eq.normalized();
    let n = eq.order();
    let mut a = RMatrix::zeros(n, n);
    for i in 0..n - 1 {
        a.set(i, i + 1, RationalFunction::one());
    }
    for j in 0..n {
        a.set(n - 1, j, -&eq.coeffs[j]);
    }
    DiffSystem::with_operator(&eq.pair, eq.role, eq.op.clone(), a)
}

/// `Ã = φ(T)·A·T⁻¹`.
pub fn gauge_transform(sys: &DiffSystem, t: &RMatrix) -> Result<DiffSystem> {
    if t.rows() != sys.dim() || t.cols() != sys.dim() {
        return Err(Error::DimensionMismatch("gauge matrix size".into()));
    }
    let t_inv = t.inverse().map_err(|e| match e {
        Error::SingularMatrix => Error::SingularGauge,
        other => other,
    })?;
    let a = t.apply(&sys.op).mul(&sys.a)?.mul(&t_inv)?;
    Ok(DiffSystem {
        a,
        ..sys.clone()
    })
}

/// `A_[r] = φ^{r−1}(A)···φ(A)·A`, acting through `φ^r`.
pub fn iterate_system(sys: &DiffSystem, r: u64) -> Result<DiffSystem> {
    if r == 0 {
        return Err(Error::InvalidParameter("iteration count must be positive".into()));
    }
    let mut acc = sys.a.clone();
    let mut twisted = sys.a.clone();
    for _ in 1..r {
        twisted = twisted.apply(&sys.op);
        acc = twisted.mul(&acc)?;
    }
    Ok(DiffSystem {
        a: acc,
        op: sys.op.power(r)?,
        ..sys.clone()
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Compatibility {
    Compatible,
    Violation(RMatrix),
}

/// Checks `φ(Ã)·A − σ(A)·Ã = 0` for `A` the φ-system and `Ã` the σ-system.
pub fn compatibility_check(sys_phi: &DiffSystem, sys_sigma: &DiffSystem) -> Result<Compatibility> {
    if sys_phi.dim() != sys_sigma.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} against {}x{}",
            sys_phi.dim(),
            sys_phi.dim(),
            sys_sigma.dim(),
            sys_sigma.dim()
        )));
    }
    if sys_phi.pair != sys_sigma.pair {
        return Err(Error::InvalidParameter("systems belong to different operator pairs".into()));
    }
    let lhs = sys_sigma.a.apply(&sys_phi.op).mul(&sys_phi.a)?;
    let rhs = sys_phi.a.apply(&sys_sigma.op).mul(&sys_sigma.a)?;
    let diff = lhs.sub(&rhs)?;
    Ok(if diff.is_zero() {
        Compatibility::Compatible
    } else {
        Compatibility::Violation(diff)
    })
}

/// Outcome of substituting a candidate into an equation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Residual {
    /// Vanishes below `x^order` (or `t^order` at infinity).
    Zero {
        #[serde(with = "rational_string")]
        order: BigRational,
    },
    Nonzero {
        #[serde(with = "rational_string")]
        exponent: BigRational,
        coefficient: FieldElem,
    },
}

impl Residual {
    pub fn is_zero(&self) -> bool {
        matches!(self, Residual::Zero { .. })
    }
}

pub mod rational_string {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub(crate) fn ceil_q(r: &BigRational) -> i64 {
    r.ceil().to_integer().try_into().expect("exponent in machine range")
}

fn q(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// `Σ c_k · s_k − rhs`, trusted to the tightest order the inputs allow.
/// Returns the combination, its trusted order and the lowest exponent that
/// any term could contribute.
fn linear_form(
    terms: &[(RationalFunction, TruncatedPuiseux)],
    rhs: &RationalFunction,
    locus: Locus,
) -> (TruncatedPuiseux, BigRational, Option<BigRational>) {
    let mut target: Option<BigRational> = None;
    let mut lowest: Option<BigRational> = None;
    let note_low = |v: BigRational, lowest: &mut Option<BigRational>| {
        if lowest.as_ref().is_none_or(|l| &v < l) {
            *lowest = Some(v);
        }
    };
    for (c, s) in terms {
        let Some(w) = val_at(c, locus) else { continue };
        let o = &q(w) + s.order_q();
        if target.as_ref().is_none_or(|t| &o < t) {
            target = Some(o);
        }
        if !s.is_zero() {
            note_low(&q(w) + s.valuation_q(), &mut lowest);
        }
    }
    if let Some(w) = val_at(rhs, locus) {
        note_low(q(w), &mut lowest);
    }
    let target = target.unwrap_or_else(|| {
        terms
            .iter()
            .map(|(_, s)| s.order_q())
            .min()
            .unwrap_or_else(BigRational::zero)
    });
    let tgt_int = ceil_q(&target);
    let mut acc = rational_to_series(&-rhs, locus, tgt_int.max(1))
        .inner()
        .truncate_q(&target);
    for (c, s) in terms {
        if c.is_zero() {
            continue;
        }
        let rel = &target - s.valuation_q();
        let ord = ceil_q(&rel).max(1);
        let ce = rational_to_series(c, locus, ord);
        acc = acc.add(&ce.inner().mul(s).truncate_q(&target));
    }
    (acc.truncate_q(&target), target, lowest)
}

fn val_at(r: &RationalFunction, locus: Locus) -> Option<i64> {
    match locus {
        Locus::AtZero => r.valuation_at_zero(),
        Locus::AtInfinity => r.valuation_at_infinity(),
    }
}

fn verdict(res: &TruncatedPuiseux, order: BigRational, lowest: Option<BigRational>) -> Result<Residual> {
    if let Some(low) = &lowest {
        if &order <= low {
            return Err(Error::InsufficientOrder(format!(
                "residual trusted only below exponent {order}, nothing beyond {low} can be tested"
            )));
        }
    }
    Ok(match res.leading_coefficient() {
        None => Residual::Zero { order },
        Some(c) => Residual::Nonzero {
            exponent: res.valuation_q(),
            coefficient: c.clone(),
        },
    })
}

fn check_locus(op: &Operator, y: &Expansion) -> Result<()> {
    if op.locus() != y.locus() {
        return Err(Error::WrongField(format!(
            "operator {op} needs series {}",
            match op.locus() {
                Locus::AtZero => "at 0",
                Locus::AtInfinity => "at infinity",
            }
        )));
    }
    Ok(())
}

/// Substitutes `y` into `eq`; `q_root` is needed only for ramified q-scaling.
pub fn residual_check(eq: &ScalarEquation, y: &Expansion, q_root: Option<&FieldElem>) -> Result<Residual> {
    check_locus(&eq.op, y)?;
    let mut terms = Vec::with_capacity(eq.coeffs.len());
    let mut cur = y.clone();
    for (k, c) in eq.coeffs.iter().enumerate() {
        if k > 0 {
            cur = eq.op.apply_series(&cur, q_root)?;
        }
        terms.push((c.clone(), cur.inner().clone()));
    }
    let (res, order, lowest) = linear_form(&terms, &eq.rhs, eq.locus());
    verdict(&res, order, lowest)
}

/// Componentwise residual of `op(Y) − A·Y`; the first nonzero component wins.
pub fn residual_check_system(sys: &DiffSystem, ys: &[Expansion], q_root: Option<&FieldElem>) -> Result<Vec<Residual>> {
    if ys.len() != sys.dim() {
        return Err(Error::DimensionMismatch("solution vector length".into()));
    }
    let mut twisted = Vec::with_capacity(ys.len());
    for y in ys {
        check_locus(&sys.op, y)?;
        twisted.push(sys.op.apply_series(y, q_root)?);
    }
    let locus = sys.op.locus();
    let mut out = Vec::with_capacity(ys.len());
    for (i, ty) in twisted.iter().enumerate() {
        let mut terms = vec![(RationalFunction::one(), ty.inner().clone())];
        for (j, y) in ys.iter().enumerate() {
            terms.push((-sys.a.get(i, j), y.inner().clone()));
        }
        let (res, order, lowest) = linear_form(&terms, &RationalFunction::zero(), locus);
        out.push(verdict(&res, order, lowest)?);
    }
    Ok(out)
}

/// A nonzero kernel vector of the column set, by Gauss–Jordan over K.
fn kernel_vector(cols: &[Vec<RationalFunction>]) -> Option<Vec<RationalFunction>> {
    let ncols = cols.len();
    let nrows = cols.first().map_or(0, |c| c.len());
    let mut m: Vec<Vec<RationalFunction>> = (0..nrows)
        .map(|i| cols.iter().map(|c| c[i].clone()).collect())
        .collect();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..ncols {
        let Some(p) = (row..nrows).find(|&r| !m[r][col].is_zero()) else {
            // free column: build the kernel vector
            let mut v = vec![RationalFunction::zero(); ncols];
            v[col] = RationalFunction::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -&m[r][col];
            }
            return Some(v);
        };
        m.swap(row, p);
        let inv = m[row][col].inv().ok()?;
        for j in 0..ncols {
            m[row][j] = &m[row][j] * &inv;
        }
        for r in 0..nrows {
            if r != row && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for j in 0..ncols {
                    let t = &f * &m[row][j];
                    m[r][j] = &m[r][j] - &t;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    None
}

/// For each coordinate of a solution vector, the minimal-order scalar
/// equation it satisfies, derived exactly from the rows of `A_[k]` and
/// verified against the supplied series.
pub fn scalar_from_coordinates(
    sys: &DiffSystem,
    coords: &[Expansion],
    q_root: Option<&FieldElem>,
) -> Result<Vec<ScalarEquation>> {
    let n = sys.dim();
    if coords.len() != n {
        return Err(Error::DimensionMismatch("solution vector length".into()));
    }
    let mut out = Vec::with_capacity(n);
    for (i, y) in coords.iter().enumerate() {
        let mut e_i = vec![RationalFunction::zero(); n];
        e_i[i] = RationalFunction::one();
        let mut rows = vec![e_i];
        let eq = loop {
            if let Some(c) = kernel_vector(&rows) {
                let lead = c.last().unwrap().inv()?;
                let coeffs = c.iter().map(|v| v * &lead).collect();
                break ScalarEquation::with_operator(
                    &sys.pair,
                    sys.role,
                    sys.op.clone(),
                    coeffs,
                    RationalFunction::zero(),
                )?;
            }
            if rows.len() > n {
                return Err(Error::Invariant("more than n independent twists".into()));
            }
            let last = rows.last().unwrap();
            let twisted: Vec<RationalFunction> = last.iter().map(|v| sys.op.apply_rational(v)).collect();
            let next = (0..n)
                .map(|j| {
                    (0..n).fold(RationalFunction::zero(), |acc, k| {
                        &acc + &(&twisted[k] * sys.a.get(k, j))
                    })
                })
                .collect();
            rows.push(next);
        };
        match residual_check(&eq, y, q_root)? {
            Residual::Zero { .. } => out.push(eq),
            Residual::Nonzero { exponent, .. } => {
                return Err(Error::InvalidParameter(format!(
                    "coordinate {i} is not a solution of the system (residual at exponent {exponent})"
                )))
            }
        }
    }
    Ok(out)
}

/// Order-one equation `φ(y) = a·y + b` as a scalar equation.
pub fn order1_equation(pair: &OperatorPair, role: Role, a: &RationalFunction, b: &RationalFunction) -> Result<ScalarEquation> {
    ScalarEquation::new(pair, role, vec![-a, RationalFunction::one()], b.clone())
}

/// The case of an equation's acting operator.
pub fn case_of(eq: &ScalarEquation) -> Case {
    eq.op.case()
}
