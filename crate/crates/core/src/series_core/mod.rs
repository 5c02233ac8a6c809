//! Exact arithmetic over ℚ(i): scalars, polynomials, rational functions and
//! truncated series at 0 and at infinity.

pub mod factor;
pub mod field;
pub mod gaussian;
pub mod guess;
pub mod infinity;
pub mod parse;
pub mod poly;
pub mod puiseux;
pub mod ratfunc;

use serde::{Deserialize, Serialize};

pub use field::FieldElem;
pub use guess::{berlekamp_massey, rationality_guess};
pub use infinity::AtInfinitySeries;
pub use poly::Polynomial;
pub use puiseux::TruncatedPuiseux;
pub use ratfunc::{RamifiedRational, RationalFunction};

use crate::error::{Error, Result};

/// Where a series expansion is taken.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Locus {
    AtZero,
    AtInfinity,
}

/// A series at either locus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expansion {
    AtZero(TruncatedPuiseux),
    AtInfinity(AtInfinitySeries),
}

impl Expansion {
    pub fn locus(&self) -> Locus {
        match self {
            Expansion::AtZero(_) => Locus::AtZero,
            Expansion::AtInfinity(_) => Locus::AtInfinity,
        }
    }

    /// The underlying coefficient series (in `x`, or in `t = 1/x`).
    pub fn inner(&self) -> &TruncatedPuiseux {
        match self {
            Expansion::AtZero(s) => s,
            Expansion::AtInfinity(s) => s.as_t_series(),
        }
    }

    fn wrap(locus: Locus, s: TruncatedPuiseux) -> Self {
        match locus {
            Locus::AtZero => Expansion::AtZero(s),
            Locus::AtInfinity => Expansion::AtInfinity(AtInfinitySeries::from_t_series(s)),
        }
    }

    fn same_locus(&self, other: &Self) -> Result<()> {
        if self.locus() != other.locus() {
            return Err(Error::InvalidParameter(
                "series expanded at different loci cannot be combined".into(),
            ));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_locus(other)?;
        Ok(Expansion::wrap(self.locus(), self.inner().add(other.inner())))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_locus(other)?;
        Ok(Expansion::wrap(self.locus(), self.inner().sub(other.inner())))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_locus(other)?;
        Ok(Expansion::wrap(self.locus(), self.inner().mul(other.inner())))
    }

    pub fn scale(&self, c: &FieldElem) -> Self {
        Expansion::wrap(self.locus(), self.inner().scale(c))
    }

    pub fn is_zero(&self) -> bool {
        self.inner().is_zero()
    }

    pub fn order(&self) -> i64 {
        self.inner().order()
    }
}

/// Exact expansion of `r` at the requested locus, trusted to order `order`
/// in the local variable.
pub fn rational_to_series(r: &RationalFunction, locus: Locus, order: i64) -> Expansion {
    match locus {
        Locus::AtZero => Expansion::AtZero(TruncatedPuiseux::from_rational(r, order)),
        Locus::AtInfinity => Expansion::AtInfinity(AtInfinitySeries::from_rational(r, order)),
    }
}

/// Serialized form of a series: `{locus, ramification, valuation, order, coeffs}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesRecord {
    #[serde(default = "default_locus")]
    pub locus: Locus,
    pub ramification: u64,
    pub valuation: i64,
    pub order: i64,
    pub coeffs: Vec<FieldElem>,
}

fn default_locus() -> Locus {
    Locus::AtZero
}

impl From<&Expansion> for SeriesRecord {
    fn from(e: &Expansion) -> Self {
        let s = e.inner();
        SeriesRecord {
            locus: e.locus(),
            ramification: s.ramification(),
            valuation: s.valuation(),
            order: s.order(),
            coeffs: s.coeffs().to_vec(),
        }
    }
}

impl From<&TruncatedPuiseux> for SeriesRecord {
    fn from(s: &TruncatedPuiseux) -> Self {
        SeriesRecord::from(&Expansion::AtZero(s.clone()))
    }
}

impl SeriesRecord {
    pub fn to_expansion(&self) -> Result<Expansion> {
        if self.ramification == 0 {
            return Err(Error::Parse("ramification must be positive".into()));
        }
        if self.locus == Locus::AtInfinity && self.ramification != 1 {
            return Err(Error::Parse("series at infinity must be unramified".into()));
        }
        let s = TruncatedPuiseux::new(
            self.ramification,
            self.valuation,
            self.coeffs.clone(),
            self.order,
        );
        Ok(Expansion::wrap(self.locus, s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_round_trip() {
        let r: RationalFunction = "(1+i*x)/(1-x/3)".parse().unwrap();
        for locus in [Locus::AtZero, Locus::AtInfinity] {
            let e = rational_to_series(&r, locus, 12);
            let json = serde_json::to_string(&SeriesRecord::from(&e)).unwrap();
            let back: SeriesRecord = serde_json::from_str(&json).unwrap();
            assert_eq!(back.to_expansion().unwrap(), e);
        }
    }
}
