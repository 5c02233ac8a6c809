//! The order-one certificate criterion `a = c·xⁿ·φ(b)/b`: shift divisors,
//! q-orbit pairing, Mahler solve-and-guess, and an exact verifier.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{Case, Operator, OperatorPair, Role};
use crate::series_core::factor::factor;
use crate::series_core::gaussian::ExponentVector;
use crate::series_core::{rationality_guess, FieldElem, Polynomial, RamifiedRational, RationalFunction};
use crate::systems::{rational_string, solve_order1};

/// Bound on `|k|` when a q-logarithm must be found by search.
pub const DEFAULT_KMAX: u64 = 64;
/// Series order used by the Mahler solve-and-guess step.
pub const MAHLER_GUESS_ORDER: i64 = 400;
/// Degree bound handed to the rationality guesser.
pub const MAHLER_GUESS_BOUND: usize = 20;

/// `a = c · xⁿ · φ(b)/b`, with `b` written in `t = x^{1/ramification}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub c: FieldElem,
    pub n: BigRational,
    pub b: RamifiedRational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateRecord {
    pub c: FieldElem,
    #[serde(with = "rational_string")]
    pub n: BigRational,
    pub b: RationalFunction,
    #[serde(default = "one_u64", skip_serializing_if = "is_one_u64")]
    pub ramification: u64,
}

fn one_u64() -> u64 {
    1
}

fn is_one_u64(j: &u64) -> bool {
    *j == 1
}

impl From<&Certificate> for CertificateRecord {
    fn from(c: &Certificate) -> Self {
        CertificateRecord {
            c: c.c.clone(),
            n: c.n.clone(),
            b: c.b.func.clone(),
            ramification: c.b.ramification,
        }
    }
}

impl From<CertificateRecord> for Certificate {
    fn from(r: CertificateRecord) -> Self {
        Certificate {
            c: r.c,
            n: r.n,
            b: RamifiedRational {
                ramification: r.ramification.max(1),
                func: r.b,
            },
        }
    }
}

impl Serialize for Certificate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CertificateRecord::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Certificate {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        CertificateRecord::deserialize(d).map(Certificate::from)
    }
}

/// One class of irreducible factors under the operator's orbit relation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DivisorClass {
    pub class_rep: Polynomial,
    pub multiplicity: i64,
}

/// Signed factor multiplicities summed per class.
#[derive(Clone, Debug, Eq, Serialize, Deserialize)]
pub struct ShiftDivisor {
    pub classes: Vec<DivisorClass>,
}

impl ShiftDivisor {
    pub fn is_zero(&self) -> bool {
        self.classes.iter().all(|c| c.multiplicity == 0)
    }

    fn support(&self) -> BTreeMap<String, i64> {
        self.classes
            .iter()
            .filter(|c| c.multiplicity != 0)
            .map(|c| (c.class_rep.key(), c.multiplicity))
            .collect()
    }

    pub fn add(&self, other: &ShiftDivisor) -> ShiftDivisor {
        let mut map: BTreeMap<String, DivisorClass> = BTreeMap::new();
        for c in self.classes.iter().chain(&other.classes) {
            map.entry(c.class_rep.key())
                .or_insert_with(|| DivisorClass {
                    class_rep: c.class_rep.clone(),
                    multiplicity: 0,
                })
                .multiplicity += c.multiplicity;
        }
        ShiftDivisor {
            classes: map.into_values().collect(),
        }
    }
}

/// Equality of divisors ignores classes of multiplicity zero.
impl PartialEq for ShiftDivisor {
    fn eq(&self, other: &Self) -> bool {
        self.support() == other.support()
    }
}

/// Monic irreducible factors of `f` with signed multiplicities.
fn signed_factors(f: &RationalFunction) -> Result<(FieldElem, Vec<(Polynomial, i64)>)> {
    let fnum = factor(f.num())?;
    let fden = factor(f.den())?;
    let mut out: Vec<(Polynomial, i64)> = fnum.factors.into_iter().map(|(p, e)| (p, e as i64)).collect();
    out.extend(fden.factors.into_iter().map(|(p, e)| (p, -(e as i64))));
    out.sort_by(|a, b| a.0.deg().cmp(&b.0.deg()).then_with(|| a.0.key().cmp(&b.0.key())));
    Ok((&fnum.unit / &fden.unit, out))
}

/// `(R, s)` with `P(x) = R(x + s·h)` and `R` the orbit normal form: the
/// real part of `R_{d−1}/(d·h)` lies in `[0, 1)`.
fn shift_normal_form(p: &Polynomial, h: &FieldElem) -> Result<(Polynomial, i64)> {
    let d = p.deg();
    let u = p
        .coeff(d - 1)
        .checked_div(&(h * &FieldElem::from_int(d as i64)))?;
    let k = -u.re.floor().to_integer();
    let k = k
        .to_i64()
        .ok_or_else(|| Error::InvalidParameter("shift orbit index out of range".into()))?;
    let r = p.substitute_shift(&(h * &FieldElem::from_int(k)));
    Ok((r, -k))
}

/// The h-divisor of `f`: factors grouped along `α + hℤ`.
pub fn shift_divisor(f: &RationalFunction, h: &FieldElem) -> Result<ShiftDivisor> {
    if f.is_zero() {
        return Err(Error::InvalidParameter("divisor of zero".into()));
    }
    if h.is_zero() {
        return Err(Error::InvalidParameter("shift h must be nonzero".into()));
    }
    let (_, factors) = signed_factors(f)?;
    let mut map: BTreeMap<String, DivisorClass> = BTreeMap::new();
    for (p, m) in factors {
        let (r, _) = shift_normal_form(&p, h)?;
        map.entry(r.key())
            .or_insert_with(|| DivisorClass {
                class_rep: r,
                multiplicity: 0,
            })
            .multiplicity += m;
    }
    Ok(ShiftDivisor {
        classes: map.into_values().collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QLog {
    Found(i64),
    Absent,
    /// No exponent within the search bound.
    Exhausted,
}

/// `k` with `q^k = r`: exponent vectors when `|q| ≠ 1`, bounded search
/// otherwise.
pub fn q_log(q: &FieldElem, r: &FieldElem, kmax: u64) -> Result<QLog> {
    if r.is_one() {
        return Ok(QLog::Found(0));
    }
    if r.is_zero() {
        return Ok(QLog::Absent);
    }
    if !q.norm().is_one() {
        let eq = ExponentVector::of(q)?;
        let er = ExponentVector::of(r)?;
        let Some((pi, e)) = eq.primes.iter().next() else {
            return Ok(QLog::Absent);
        };
        let f = *er.primes.get(pi).unwrap_or(&0);
        if f % e != 0 {
            return Ok(QLog::Absent);
        }
        let k = f / e;
        return Ok(if eq.scaled(k) == er { QLog::Found(k) } else { QLog::Absent });
    }
    if !r.norm().is_one() {
        return Ok(QLog::Absent);
    }
    let qi = q.inv()?;
    let (mut up, mut down) = (FieldElem::one(), FieldElem::one());
    for k in 1..=kmax as i64 {
        up = &up * q;
        down = &down * &qi;
        if &up == r {
            return Ok(QLog::Found(k));
        }
        if &down == r {
            return Ok(QLog::Found(-k));
        }
    }
    Ok(QLog::Exhausted)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Decision {
    Certificate { certificate: Certificate },
    NoCertificate { reason: String, divisor: Option<ShiftDivisor> },
    /// Undecided within the stated bound.
    Inconclusive { bound: u64, reason: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecideOptions {
    pub kmax: u64,
    pub guess_order: i64,
    pub guess_bound: usize,
}

impl Default for DecideOptions {
    fn default() -> Self {
        DecideOptions {
            kmax: DEFAULT_KMAX,
            guess_order: MAHLER_GUESS_ORDER,
            guess_bound: MAHLER_GUESS_BOUND,
        }
    }
}

pub fn decide_certificate(a: &RationalFunction, pair: &OperatorPair, role: Role) -> Result<Decision> {
    decide_certificate_with(a, pair, role, &DecideOptions::default())
}

pub fn decide_certificate_with(
    a: &RationalFunction,
    pair: &OperatorPair,
    role: Role,
    opts: &DecideOptions,
) -> Result<Decision> {
    if a.is_zero() {
        return Err(Error::InvalidParameter("a must be nonzero".into()));
    }
    let op = pair.op(role).clone();
    let decision = match &op {
        Operator::Shift(h) => decide_shift(a, h)?,
        Operator::Scale(q) => decide_q(a, q, opts.kmax)?,
        Operator::Mahler(p) => decide_mahler(a, *p, pair, role, opts)?,
    };
    if let Decision::Certificate { certificate } = &decision {
        if let Verification::Invalid { residual } = verify_certificate(a, certificate, pair, role)? {
            return Err(Error::Invariant(format!("constructed certificate fails verification: {residual}")));
        }
    }
    Ok(decision)
}

/// Class member `T^k A` for the anchor `A`, with exponent relative to it.
struct Member {
    k: i64,
    mult: i64,
}

/// `b` with `φ(b)/b = Π (T^{k_i} A / A)^{m_i}`, `T^j A` supplied by `twist`.
fn telescope(anchor: &Polynomial, members: &[Member], twist: &dyn Fn(&Polynomial, i64) -> Polynomial) -> RationalFunction {
    let mut num = Polynomial::one();
    let mut den = Polynomial::one();
    for m in members {
        if m.k == 0 || m.mult == 0 {
            continue;
        }
        let (range, sign) = if m.k > 0 { (0..m.k, m.mult) } else { (m.k..0, -m.mult) };
        for j in range {
            let f = twist(anchor, j).pow(sign.unsigned_abs() as u32);
            if sign > 0 {
                num = &num * &f;
            } else {
                den = &den * &f;
            }
        }
    }
    RationalFunction::new(num, den).expect("nonzero denominator")
}

/// `a·b/(xⁿ·φ(b))` when it is a constant.
fn leftover_constant(a: &RationalFunction, b: &RationalFunction, n: i64, op: &Operator) -> Option<FieldElem> {
    let phib = op.apply_rational(b);
    let r = &(a * b) / &(&RationalFunction::x_pow(n) * &phib);
    r.as_constant()
}

fn decide_shift(a: &RationalFunction, h: &FieldElem) -> Result<Decision> {
    let div = shift_divisor(a, h)?;
    if !div.is_zero() {
        return Ok(Decision::NoCertificate {
            reason: "shift divisor is nonzero".into(),
            divisor: Some(div),
        });
    }
    let (_, factors) = signed_factors(a)?;
    let mut classes: BTreeMap<String, Vec<(Polynomial, i64, i64)>> = BTreeMap::new();
    for (p, m) in factors {
        let (r, s) = shift_normal_form(&p, h)?;
        classes.entry(r.key()).or_default().push((p, s, m));
    }
    let twist = |p: &Polynomial, j: i64| p.substitute_shift(&(h * &FieldElem::from_int(j)));
    let mut b = RationalFunction::one();
    for members in classes.values() {
        let anchor = anchor_of(members);
        let members: Vec<Member> = members
            .iter()
            .map(|(_, s, m)| Member { k: s - anchor.1, mult: *m })
            .collect();
        b = &b * &telescope(&anchor.0, &members, &twist);
    }
    let op = Operator::Shift(h.clone());
    let c = leftover_constant(a, &b, 0, &op)
        .ok_or_else(|| Error::Invariant("telescoped quotient is not constant".into()))?;
    Ok(Decision::Certificate {
        certificate: Certificate {
            c,
            n: BigRational::zero(),
            b: RamifiedRational::unramified(b),
        },
    })
}

/// The member with the lexicographically smallest coefficient string.
fn anchor_of(members: &[(Polynomial, i64, i64)]) -> (Polynomial, i64) {
    let m = members
        .iter()
        .min_by(|x, y| x.0.key().cmp(&y.0.key()))
        .expect("nonempty class");
    (m.0.clone(), m.1)
}

/// `P/P(0)`, so that `P(q^k x)` is normalized the same way.
fn unit_constant(p: &Polynomial) -> Polynomial {
    let c0 = p.coeff(0);
    p.scale(&c0.inv().expect("factor coprime to x"))
}

fn decide_q(a: &RationalFunction, q: &FieldElem, kmax: u64) -> Result<Decision> {
    let (_, factors) = signed_factors(a)?;
    let mut n = 0i64;
    // (base, members: (P, k relative to base, mult))
    let mut classes: Vec<(Polynomial, Vec<(Polynomial, i64, i64)>)> = Vec::new();
    let mut exhausted = false;
    'outer: for (p, m) in factors {
        if p == Polynomial::x() {
            n += m;
            continue;
        }
        let pn = unit_constant(&p);
        for (base, members) in classes.iter_mut() {
            if base.deg() != pn.deg() {
                continue;
            }
            let d = pn.deg() as i64;
            let ratio = pn.coeff(d as usize).checked_div(&base.coeff(d as usize))?;
            match q_log(q, &ratio, kmax.saturating_mul(d as u64))? {
                QLog::Found(kd) if kd % d == 0 => {
                    let k = kd / d;
                    if base.substitute_scale(&q.pow(k)?) == pn {
                        members.push((pn, k, m));
                        continue 'outer;
                    }
                }
                QLog::Exhausted => exhausted = true,
                _ => {}
            }
        }
        classes.push((pn.clone(), vec![(pn, 0, m)]));
    }
    let divisor = ShiftDivisor {
        classes: classes
            .iter()
            .map(|(base, members)| DivisorClass {
                class_rep: base.clone(),
                multiplicity: members.iter().map(|m| m.2).sum(),
            })
            .collect(),
    };
    if !divisor.is_zero() {
        return Ok(if exhausted {
            Decision::Inconclusive {
                bound: kmax,
                reason: format!("q-orbit pairing needs |k| > {kmax}"),
            }
        } else {
            Decision::NoCertificate {
                reason: "q-orbit divisor is nonzero".into(),
                divisor: Some(divisor),
            }
        });
    }
    let qc = q.clone();
    let twist = move |p: &Polynomial, j: i64| p.substitute_scale(&qc.pow(j).expect("q nonzero"));
    let mut b = RationalFunction::one();
    for (_, members) in &classes {
        let anchor = anchor_of(members);
        let members: Vec<Member> = members
            .iter()
            .map(|(_, k, m)| Member { k: k - anchor.1, mult: *m })
            .collect();
        b = &b * &telescope(&anchor.0, &members, &twist);
    }
    let op = Operator::Scale(q.clone());
    let c = leftover_constant(a, &b, n, &op)
        .ok_or_else(|| Error::Invariant("telescoped quotient is not constant".into()))?;
    Ok(Decision::Certificate {
        certificate: Certificate {
            c,
            n: BigRational::from_integer(BigInt::from(n)),
            b: RamifiedRational::unramified(b),
        },
    })
}

fn decide_mahler(a: &RationalFunction, p: u64, pair: &OperatorPair, role: Role, opts: &DecideOptions) -> Result<Decision> {
    let sol = match solve_order1(a, &RationalFunction::zero(), pair, role, opts.guess_order) {
        Ok(s) => s,
        Err(e) => {
            return Ok(Decision::Inconclusive {
                bound: opts.guess_bound as u64,
                reason: format!("normalized equation not solvable: {e}"),
            })
        }
    };
    let norm = sol.normalization.expect("homogeneous solve is normalized");
    let Some(f) = rationality_guess(sol.series.inner(), opts.guess_bound)? else {
        return Ok(Decision::Inconclusive {
            bound: opts.guess_bound as u64,
            reason: format!(
                "no rational solution of degree <= {} at order {}",
                opts.guess_bound, opts.guess_order
            ),
        });
    };
    // b = f · x^{v_a/(p−1)}
    let s = BigRational::new(BigInt::from(norm.v_a), BigInt::from(p as i64 - 1));
    let j = s.denom().to_u64().expect("small denominator");
    let sn = s.numer().to_i64().expect("small numerator");
    let b = RamifiedRational {
        ramification: j,
        func: &f.substitute_power(j as usize) * &RationalFunction::x_pow(sn),
    }
    .normalized();
    Ok(Decision::Certificate {
        certificate: Certificate {
            c: norm.t_a,
            n: BigRational::zero(),
            b,
        },
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verification {
    Valid,
    Invalid { residual: String },
}

impl Verification {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verification::Valid)
    }
}

/// Checks `a·b/(c·xⁿ·φ(b)) − 1 = 0` exactly, in `t = x^{1/j}`.
pub fn verify_certificate(a: &RationalFunction, cert: &Certificate, pair: &OperatorPair, role: Role) -> Result<Verification> {
    verify_certificate_with_root(a, cert, pair, role, None)
}

/// As [`verify_certificate`]; ramified q-scaling needs a declared root of `q`.
pub fn verify_certificate_with_root(
    a: &RationalFunction,
    cert: &Certificate,
    pair: &OperatorPair,
    role: Role,
    q_root: Option<&FieldElem>,
) -> Result<Verification> {
    let invalid = |why: &str| Ok(Verification::Invalid { residual: why.to_string() });
    if cert.c.is_zero() {
        return invalid("c = 0");
    }
    if cert.b.is_zero() || cert.b.ramification == 0 {
        return invalid("b = 0");
    }
    if pair.case() != Case::QScale && !cert.n.is_zero() {
        return invalid("n must be 0 outside the q-scaling case");
    }
    if pair.case() == Case::Shift && cert.b.ramification != 1 {
        return invalid("b must be unramified in the shift case");
    }
    let op = pair.op(role);
    let nd = cert.n.denom().to_u64().ok_or_else(|| Error::InvalidParameter("n out of range".into()))?;
    let j = num_integer::lcm(cert.b.ramification, nd);
    let b = cert.b.reramify(j / cert.b.ramification);
    let phib = op.apply_ramified(&b, q_root)?;
    let a_t = a.substitute_power(j as usize);
    let nt = (&cert.n * BigRational::from_integer(BigInt::from(j)))
        .to_integer()
        .to_i64()
        .ok_or_else(|| Error::InvalidParameter("n out of range".into()))?;
    let rhs = &RationalFunction::x_pow(nt).scale(&cert.c) * &phib.func;
    let residual = &(&(&a_t * &b.func) / &rhs) - &RationalFunction::one();
    if residual.is_zero() {
        Ok(Verification::Valid)
    } else {
        Ok(Verification::Invalid {
            residual: RamifiedRational {
                ramification: j,
                func: residual,
            }
            .normalized()
            .to_string(),
        })
    }
}
