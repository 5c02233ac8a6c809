//! The three commuting operator pairs: shifts `x ↦ x + h`, q-scalings
//! `x ↦ q·x` and Mahler maps `x ↦ x^p`.

use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series_core::gaussian::{integer_power_relation, multiplicative_relation};
use crate::series_core::parse::parse_positive_int;
use crate::series_core::{
    AtInfinitySeries, Expansion, FieldElem, Locus, RamifiedRational, RationalFunction,
    TruncatedPuiseux,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Case {
    #[serde(rename = "2S")]
    Shift,
    #[serde(rename = "2Q")]
    QScale,
    #[serde(rename = "2M")]
    Mahler,
}

impl Case {
    pub fn label(&self) -> &'static str {
        match self {
            Case::Shift => "2S",
            Case::QScale => "2Q",
            Case::Mahler => "2M",
        }
    }

    /// Where series solutions of this case live.
    pub fn locus(&self) -> Locus {
        match self {
            Case::Shift => Locus::AtInfinity,
            Case::QScale | Case::Mahler => Locus::AtZero,
        }
    }
}

impl std::str::FromStr for Case {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "2S" | "S" | "SHIFT" => Ok(Case::Shift),
            "2Q" | "Q" => Ok(Case::QScale),
            "2M" | "M" | "MAHLER" => Ok(Case::Mahler),
            other => Err(Error::Parse(format!("unknown case {other:?}; expected 2S, 2Q or 2M"))),
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Phi,
    Sigma,
}

impl std::str::FromStr for Role {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "phi" => Ok(Role::Phi),
            "sigma" => Ok(Role::Sigma),
            other => Err(Error::Parse(format!("unknown operator role {other:?}"))),
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Phi => "phi",
            Role::Sigma => "sigma",
        })
    }
}

/// A single field automorphism (or endomorphism, for Mahler) of ℚ(i)(x).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Operator {
    Shift(FieldElem),
    Scale(FieldElem),
    Mahler(u64),
}

impl Operator {
    pub fn case(&self) -> Case {
        match self {
            Operator::Shift(_) => Case::Shift,
            Operator::Scale(_) => Case::QScale,
            Operator::Mahler(_) => Case::Mahler,
        }
    }

    pub fn locus(&self) -> Locus {
        self.case().locus()
    }

    pub fn is_identity(&self) -> bool {
        match self {
            Operator::Shift(h) => h.is_zero(),
            Operator::Scale(q) => q.is_one(),
            Operator::Mahler(p) => *p == 1,
        }
    }

    /// The `r`-th iterate: `h ↦ r·h`, `q ↦ q^r`, `p ↦ p^r`.
    pub fn power(&self, r: u64) -> Result<Operator> {
        Ok(match self {
            Operator::Shift(h) => Operator::Shift(h * &FieldElem::from_int(r as i64)),
            Operator::Scale(q) => Operator::Scale(q.pow_u(r)),
            Operator::Mahler(p) => Operator::Mahler(
                u32::try_from(r)
                    .ok()
                    .and_then(|r| p.checked_pow(r))
                    .ok_or_else(|| Error::InvalidParameter(format!("{p}^{r} overflows")))?,
            ),
        })
    }

    pub fn apply_rational(&self, f: &RationalFunction) -> RationalFunction {
        match self {
            Operator::Shift(h) => f.substitute_shift(h),
            Operator::Scale(q) => f.substitute_scale(q),
            Operator::Mahler(p) => f.substitute_power(*p as usize),
        }
    }

    /// Action on `ℚ(i)(x^{1/j})`; q-scaling of a ramified element needs a
    /// declared `j`-th root of `q`.
    pub fn apply_ramified(&self, f: &RamifiedRational, q_root: Option<&FieldElem>) -> Result<RamifiedRational> {
        let j = f.ramification;
        if j == 1 {
            return Ok(RamifiedRational::unramified(self.apply_rational(&f.func)));
        }
        let func = match self {
            Operator::Shift(_) => {
                return Err(Error::WrongField("shifts act on unramified rational functions".into()))
            }
            Operator::Scale(q) => match q_root {
                Some(r) if &r.pow_u(j) == q => f.func.substitute_scale(r),
                _ => return Err(Error::RootUnavailable { value: Box::new(q.clone()), root: j }),
            },
            Operator::Mahler(p) => f.func.substitute_power(*p as usize),
        };
        Ok(RamifiedRational { ramification: j, func }.normalized())
    }

    pub fn apply_puiseux(&self, f: &TruncatedPuiseux, q_root: Option<&FieldElem>) -> Result<TruncatedPuiseux> {
        match self {
            Operator::Shift(_) => Err(Error::WrongField(
                "shift operators act on series at infinity".into(),
            )),
            Operator::Scale(q) => f.substitute_scale(q, q_root),
            Operator::Mahler(p) => Ok(f.substitute_power(*p)),
        }
    }

    pub fn apply_infinity(&self, f: &AtInfinitySeries) -> Result<AtInfinitySeries> {
        match self {
            Operator::Shift(h) => Ok(f.substitute_shift(h)),
            _ => Err(Error::WrongField(
                "q-scaling and Mahler operators act on series at 0".into(),
            )),
        }
    }

    pub fn apply_series(&self, f: &Expansion, q_root: Option<&FieldElem>) -> Result<Expansion> {
        match f {
            Expansion::AtZero(s) => Ok(Expansion::AtZero(self.apply_puiseux(s, q_root)?)),
            Expansion::AtInfinity(s) => Ok(Expansion::AtInfinity(self.apply_infinity(s)?)),
        }
    }

    /// The parameter in the exact text grammar.
    pub fn param_string(&self) -> String {
        match self {
            Operator::Shift(h) | Operator::Scale(h) => h.to_string(),
            Operator::Mahler(p) => p.to_string(),
        }
    }

    fn parse(case: Case, s: &str) -> Result<Operator> {
        Ok(match case {
            Case::Shift => Operator::Shift(s.parse()?),
            Case::QScale => Operator::Scale(s.parse()?),
            Case::Mahler => Operator::Mahler(parse_positive_int(s)?),
        })
    }

    fn check(&self) -> Result<()> {
        match self {
            Operator::Shift(h) if h.is_zero() => {
                Err(Error::InvalidParameter("shift parameter must be nonzero".into()))
            }
            Operator::Scale(q) if q.is_zero() => {
                Err(Error::InvalidParameter("q must be nonzero".into()))
            }
            Operator::Scale(q) if q.is_root_of_unity() => Err(Error::QRootOfUnity(Box::new(q.clone()))),
            Operator::Mahler(p) if *p < 2 => {
                Err(Error::InvalidParameter("Mahler exponent must be at least 2".into()))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operator::Shift(h) => write!(f, "x -> x+({h})"),
            Operator::Scale(q) => write!(f, "x -> ({q})*x"),
            Operator::Mahler(p) => write!(f, "x -> x^{p}"),
        }
    }
}

/// Two operators of the same case, `φ` and `σ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OperatorPair {
    case: Case,
    phi: Operator,
    sigma: Operator,
}

impl OperatorPair {
    pub fn new(phi: Operator, sigma: Operator) -> Result<Self> {
        if phi.case() != sigma.case() {
            return Err(Error::InvalidParameter("mixed-case operator pairs are not supported".into()));
        }
        phi.check()?;
        sigma.check()?;
        Ok(OperatorPair {
            case: phi.case(),
            phi,
            sigma,
        })
    }

    pub fn shift(h1: FieldElem, h2: FieldElem) -> Result<Self> {
        OperatorPair::new(Operator::Shift(h1), Operator::Shift(h2))
    }

    pub fn q_scale(q1: FieldElem, q2: FieldElem) -> Result<Self> {
        OperatorPair::new(Operator::Scale(q1), Operator::Scale(q2))
    }

    pub fn mahler(p1: u64, p2: u64) -> Result<Self> {
        OperatorPair::new(Operator::Mahler(p1), Operator::Mahler(p2))
    }

    /// Parses the parameters in the exact text grammar of the given case.
    pub fn parse(case: Case, phi: &str, sigma: &str) -> Result<Self> {
        OperatorPair::new(Operator::parse(case, phi)?, Operator::parse(case, sigma)?)
    }

    pub fn case(&self) -> Case {
        self.case
    }

    pub fn phi(&self) -> &Operator {
        &self.phi
    }

    pub fn sigma(&self) -> &Operator {
        &self.sigma
    }

    pub fn op(&self, role: Role) -> &Operator {
        match role {
            Role::Phi => &self.phi,
            Role::Sigma => &self.sigma,
        }
    }

    pub fn swapped(&self) -> Self {
        OperatorPair {
            case: self.case,
            phi: self.sigma.clone(),
            sigma: self.phi.clone(),
        }
    }

    pub fn apply_rational(&self, role: Role, f: &RationalFunction) -> RationalFunction {
        self.op(role).apply_rational(f)
    }

    pub fn apply_series(&self, role: Role, f: &Expansion, q_root: Option<&FieldElem>) -> Result<Expansion> {
        self.op(role).apply_series(f, q_root)
    }

    pub fn record(&self) -> PairRecord {
        PairRecord {
            case: self.case,
            phi: self.phi.param_string(),
            sigma: self.sigma.param_string(),
        }
    }
}

/// Serialized form `{case: "2M", phi: "2", sigma: "3"}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRecord {
    pub case: Case,
    pub phi: String,
    pub sigma: String,
}

impl PairRecord {
    pub fn to_pair(&self) -> Result<OperatorPair> {
        OperatorPair::parse(self.case, &self.phi, &self.sigma)
    }
}

impl Serialize for OperatorPair {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.record().serialize(s)
    }
}

impl<'de> Deserialize<'de> for OperatorPair {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        PairRecord::deserialize(d)?.to_pair().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub condition: String,
    pub status: CheckStatus,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

/// Outcome of checking a pair against the independence hypotheses.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub pair: PairRecord,
    /// The case's independence condition holds.
    pub independent: bool,
    /// False when the pair falls in an excluded class (modulus one for 2Q).
    pub within_theorem_scope: bool,
    pub entries: Vec<CheckEntry>,
}

impl ValidationReport {
    /// Independent and inside the class covered by the theorems.
    pub fn accepted(&self) -> bool {
        self.independent && self.within_theorem_scope
    }
}

/// Checks the independence hypothesis of the pair's case.
pub fn validate_pair(pair: &OperatorPair) -> ValidationReport {
    let mut entries = Vec::new();
    let mut scope = true;
    let independent = match (&pair.phi, &pair.sigma) {
        (Operator::Shift(h1), Operator::Shift(h2)) => {
            let ratio = h1 / h2;
            match ratio.as_rational() {
                Some(r) => {
                    entries.push(CheckEntry {
                        condition: "h1, h2 linearly independent over Z".into(),
                        status: CheckStatus::Fail,
                        detail: format!("h1/h2 = {r} is rational"),
                        witness: Some(format!("{}*h1 - {}*h2 = 0", r.denom(), r.numer())),
                    });
                    false
                }
                None => {
                    entries.push(CheckEntry {
                        condition: "h1, h2 linearly independent over Z".into(),
                        status: CheckStatus::Pass,
                        detail: format!("h1/h2 = {ratio} is not rational"),
                        witness: None,
                    });
                    true
                }
            }
        }
        (Operator::Scale(q1), Operator::Scale(q2)) => {
            let rel = multiplicative_relation(q1, q2);
            let independent = match rel {
                Ok(Some((n1, n2))) => {
                    entries.push(CheckEntry {
                        condition: "q1, q2 multiplicatively independent".into(),
                        status: CheckStatus::Fail,
                        detail: "exponent vectors over the Gaussian primes are proportional".into(),
                        witness: Some(format!("q1^{n1} * q2^{n2} = 1")),
                    });
                    false
                }
                Ok(None) => {
                    entries.push(CheckEntry {
                        condition: "q1, q2 multiplicatively independent".into(),
                        status: CheckStatus::Pass,
                        detail: "exponent vectors over the Gaussian primes are not proportional".into(),
                        witness: None,
                    });
                    true
                }
                Err(e) => {
                    entries.push(CheckEntry {
                        condition: "q1, q2 multiplicatively independent".into(),
                        status: CheckStatus::Fail,
                        detail: format!("could not decompose the parameters: {e}"),
                        witness: None,
                    });
                    false
                }
            };
            let unit1 = q1.norm().is_one();
            let unit2 = q2.norm().is_one();
            if unit1 && unit2 {
                scope = false;
                entries.push(CheckEntry {
                    condition: "q1, q2 not both of modulus one".into(),
                    status: CheckStatus::Warning,
                    detail: "|q1| = |q2| = 1; the pair lies in the excluded class".into(),
                    witness: Some("q1*conj(q1) = 1, q2*conj(q2) = 1".into()),
                });
            } else {
                entries.push(CheckEntry {
                    condition: "q1, q2 not both of modulus one".into(),
                    status: CheckStatus::Pass,
                    detail: format!("|q1|^2 = {}, |q2|^2 = {}", q1.norm(), q2.norm()),
                    witness: None,
                });
            }
            independent
        }
        (Operator::Mahler(p1), Operator::Mahler(p2)) => match integer_power_relation(*p1, *p2) {
            Some((n1, n2)) => {
                entries.push(CheckEntry {
                    condition: "p1, p2 multiplicatively independent".into(),
                    status: CheckStatus::Fail,
                    detail: "prime exponent vectors are proportional".into(),
                    witness: Some(format!("{p1}^{n1} = {p2}^{n2}")),
                });
                false
            }
            None => {
                entries.push(CheckEntry {
                    condition: "p1, p2 multiplicatively independent".into(),
                    status: CheckStatus::Pass,
                    detail: "prime exponent vectors are not proportional".into(),
                    witness: None,
                });
                true
            }
        },
        _ => unreachable!("pairs are single-case by construction"),
    };
    ValidationReport {
        pair: pair.record(),
        independent,
        within_theorem_scope: scope,
        entries,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rf(s: &str) -> RationalFunction {
        s.parse().unwrap()
    }

    #[test]
    fn mahler_validation() {
        let r = validate_pair(&OperatorPair::mahler(2, 3).unwrap());
        assert!(r.accepted());
        let r = validate_pair(&OperatorPair::mahler(4, 8).unwrap());
        assert!(!r.independent);
        assert_eq!(r.entries[0].witness.as_deref(), Some("4^3 = 8^2"));
    }

    #[test]
    fn modulus_one_exclusion() {
        let pair = OperatorPair::parse(Case::QScale, "3/5+4/5*i", "5/13+12/13*i").unwrap();
        let r = validate_pair(&pair);
        assert!(r.independent);
        assert!(!r.within_theorem_scope);
        assert!(!r.accepted());
        assert!(r.entries.iter().any(|e| e.status == CheckStatus::Warning));
    }

    #[test]
    fn shift_validation() {
        let ok = OperatorPair::parse(Case::Shift, "1", "i").unwrap();
        assert!(validate_pair(&ok).accepted());
        let bad = OperatorPair::parse(Case::Shift, "2", "3").unwrap();
        let r = validate_pair(&bad);
        assert!(!r.independent);
        assert_eq!(r.entries[0].witness.as_deref(), Some("3*h1 - 2*h2 = 0"));
    }

    #[test]
    fn rejects_degenerate_parameters() {
        assert!(OperatorPair::parse(Case::QScale, "i", "2").is_err());
        assert!(OperatorPair::parse(Case::Shift, "0", "2").is_err());
        assert!(OperatorPair::mahler(1, 2).is_err());
    }

    #[test]
    fn actions() {
        let m = OperatorPair::mahler(2, 3).unwrap();
        assert_eq!(m.apply_rational(Role::Phi, &rf("x/(1-x)")), rf("x^2/(1-x^2)"));
        let s = OperatorPair::parse(Case::Shift, "1", "i").unwrap();
        assert_eq!(s.apply_rational(Role::Phi, &rf("x")), rf("x+1"));
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, r#"{"case":"2M","phi":"2","sigma":"3"}"#);
        assert_eq!(serde_json::from_str::<OperatorPair>(&json).unwrap(), m);
    }
}
