//! Reduced rational functions over ℚ(i) and their ramified variants.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::field::FieldElem;
use super::poly::Polynomial;
use crate::error::{Error, Result};

/// `num / den` with `den` monic and `gcd(num, den) = 1`. Zero is `0/1`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalFunction {
    num: Polynomial,
    den: Polynomial,
}

impl RationalFunction {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if num.is_zero() {
            return Ok(RationalFunction::zero());
        }
        let g = Polynomial::gcd(&num, &den);
        let (mut num, mut den) = if g.is_one() {
            (num, den)
        } else {
            (num.exact_div(&g).unwrap(), den.exact_div(&g).unwrap())
        };
        let lc = den.lc();
        if !lc.is_one() {
            let inv = lc.inv()?;
            num = num.scale(&inv);
            den = den.scale(&inv);
        }
        Ok(RationalFunction { num, den })
    }

    /// Builds from parts already known to be coprime; only normalizes the
    /// denominator to be monic.
    pub(crate) fn from_coprime(num: Polynomial, den: Polynomial) -> Self {
        debug_assert!(!den.is_zero());
        if num.is_zero() {
            return RationalFunction::zero();
        }
        let lc = den.lc();
        if lc.is_one() {
            return RationalFunction { num, den };
        }
        let inv = lc.inv().expect("nonzero");
        RationalFunction {
            num: num.scale(&inv),
            den: den.scale(&inv),
        }
    }

    pub fn from_poly(p: Polynomial) -> Self {
        RationalFunction {
            num: p,
            den: Polynomial::one(),
        }
    }

    pub fn constant(c: FieldElem) -> Self {
        RationalFunction::from_poly(Polynomial::constant(c))
    }

    pub fn from_int(n: i64) -> Self {
        RationalFunction::constant(FieldElem::from_int(n))
    }

    pub fn x() -> Self {
        RationalFunction::from_poly(Polynomial::x())
    }

    /// `x^k` for any integer `k`.
    pub fn x_pow(k: i64) -> Self {
        if k >= 0 {
            RationalFunction::from_poly(Polynomial::monomial(FieldElem::one(), k as usize))
        } else {
            RationalFunction {
                num: Polynomial::one(),
                den: Polynomial::monomial(FieldElem::one(), (-k) as usize),
            }
        }
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn is_constant(&self) -> bool {
        self.den.is_one() && self.num.is_constant()
    }

    /// The constant value, if this is a constant.
    pub fn as_constant(&self) -> Option<FieldElem> {
        self.is_constant().then(|| self.num.coeff(0))
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(RationalFunction::from_coprime(self.den.clone(), self.num.clone()))
    }

    pub fn checked_div(&self, other: &RationalFunction) -> Result<Self> {
        Ok(self * &other.inv()?)
    }

    pub fn pow(&self, e: i64) -> Result<Self> {
        if e < 0 {
            return self.inv()?.pow(-e);
        }
        Ok(RationalFunction::from_coprime(
            self.num.pow(e as u32),
            self.den.pow(e as u32),
        ))
    }

    pub fn scale(&self, c: &FieldElem) -> Self {
        RationalFunction::from_coprime(self.num.scale(c), self.den.clone())
    }

    /// Valuation at 0: `ord0(num) − ord0(den)`; `None` for zero.
    pub fn valuation_at_zero(&self) -> Option<i64> {
        Some(self.num.ord0()? as i64 - self.den.ord0().unwrap() as i64)
    }

    /// Valuation at infinity in `t = 1/x`: `deg den − deg num`.
    pub fn valuation_at_infinity(&self) -> Option<i64> {
        Some(self.den.deg() as i64 - self.num.degree()? as i64)
    }

    pub fn eval(&self, at: &FieldElem) -> Result<FieldElem> {
        self.num.eval(at).checked_div(&self.den.eval(at))
    }

    /// `r(q·x)`.
    pub fn substitute_scale(&self, q: &FieldElem) -> Self {
        RationalFunction::from_coprime(self.num.substitute_scale(q), self.den.substitute_scale(q))
    }

    /// `r(x^k)`.
    pub fn substitute_power(&self, k: usize) -> Self {
        RationalFunction::from_coprime(self.num.substitute_power(k), self.den.substitute_power(k))
    }

    /// `r(x + h)`.
    pub fn substitute_shift(&self, h: &FieldElem) -> Self {
        RationalFunction::from_coprime(self.num.substitute_shift(h), self.den.substitute_shift(h))
    }

    pub fn conj(&self) -> Self {
        RationalFunction::from_coprime(self.num.conj(), self.den.conj())
    }

    pub fn fmt_var(&self, var: &str) -> String {
        if self.den.is_one() {
            return self.num.fmt_var(var);
        }
        format!("({})/({})", self.num.fmt_var(var), self.den.fmt_var(var))
    }

    /// Total degree measure `deg num + deg den`.
    pub fn total_degree(&self) -> usize {
        self.num.deg() + self.den.deg()
    }
}

impl Zero for RationalFunction {
    fn zero() -> Self {
        RationalFunction {
            num: Polynomial::zero(),
            den: Polynomial::one(),
        }
    }
    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
}

impl One for RationalFunction {
    fn one() -> Self {
        RationalFunction::from_int(1)
    }
}

impl Default for RationalFunction {
    fn default() -> Self {
        RationalFunction::zero()
    }
}

impl From<Polynomial> for RationalFunction {
    fn from(p: Polynomial) -> Self {
        RationalFunction::from_poly(p)
    }
}

impl From<FieldElem> for RationalFunction {
    fn from(c: FieldElem) -> Self {
        RationalFunction::constant(c)
    }
}

impl<'a> Add<&'a RationalFunction> for &'a RationalFunction {
    type Output = RationalFunction;
    fn add(self, rhs: &RationalFunction) -> RationalFunction {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        if self.den == rhs.den {
            return RationalFunction::new(&self.num + &rhs.num, self.den.clone()).unwrap();
        }
        let num = &(&self.num * &rhs.den) + &(&rhs.num * &self.den);
        RationalFunction::new(num, &self.den * &rhs.den).unwrap()
    }
}

impl<'a> Sub<&'a RationalFunction> for &'a RationalFunction {
    type Output = RationalFunction;
    fn sub(self, rhs: &RationalFunction) -> RationalFunction {
        self + &(-rhs)
    }
}

impl<'a> Mul<&'a RationalFunction> for &'a RationalFunction {
    type Output = RationalFunction;
    fn mul(self, rhs: &RationalFunction) -> RationalFunction {
        if self.is_zero() || rhs.is_zero() {
            return RationalFunction::zero();
        }
        // Cross-cancel so the product is already reduced.
        let g1 = Polynomial::gcd(&self.num, &rhs.den);
        let g2 = Polynomial::gcd(&rhs.num, &self.den);
        let a = self.num.exact_div(&g1).unwrap();
        let d = rhs.den.exact_div(&g1).unwrap();
        let c = rhs.num.exact_div(&g2).unwrap();
        let b = self.den.exact_div(&g2).unwrap();
        RationalFunction::from_coprime(&a * &c, &b * &d)
    }
}

impl<'a> Div<&'a RationalFunction> for &'a RationalFunction {
    type Output = RationalFunction;
    fn div(self, rhs: &RationalFunction) -> RationalFunction {
        self.checked_div(rhs).expect("division by the zero rational function")
    }
}

impl Neg for &RationalFunction {
    type Output = RationalFunction;
    fn neg(self) -> RationalFunction {
        RationalFunction {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

macro_rules! forward_owned_rf {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr<RationalFunction> for RationalFunction {
            type Output = RationalFunction;
            fn $m(self, rhs: RationalFunction) -> RationalFunction { (&self).$m(&rhs) }
        }
    )*};
}
forward_owned_rf!(Add add, Sub sub, Mul mul, Div div);

impl fmt::Display for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.fmt_var("x"))
    }
}

impl fmt::Debug for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RationalFunction({self})")
    }
}

impl FromStr for RationalFunction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        super::parse::parse_rational_function(s, "x")
    }
}

impl Serialize for RationalFunction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for RationalFunction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An element of ℂ(x^{1/j}): a rational function in `t = x^{1/j}`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RamifiedRational {
    pub ramification: u64,
    pub func: RationalFunction,
}

impl RamifiedRational {
    pub fn unramified(func: RationalFunction) -> Self {
        RamifiedRational { ramification: 1, func }
    }

    /// Re-expresses the element in `x^{1/(j·k)}`.
    pub fn reramify(&self, k: u64) -> Self {
        RamifiedRational {
            ramification: self.ramification * k,
            func: self.func.substitute_power(k as usize),
        }
    }

    /// `x^{num/den}` as a ramified monomial.
    pub fn x_pow_rational(num: i64, den: u64) -> Self {
        RamifiedRational {
            ramification: den,
            func: RationalFunction::x_pow(num),
        }
    }

    /// Lowers the ramification as far as the exponents allow.
    pub fn normalized(&self) -> Self {
        let mut g = self.ramification;
        for p in [self.func.num(), self.func.den()] {
            for (k, c) in p.coeffs().iter().enumerate() {
                if !c.is_zero() {
                    g = num_integer::gcd(g, k as u64);
                }
            }
        }
        if g <= 1 {
            return self.clone();
        }
        let squeeze = |p: &Polynomial| {
            Polynomial::new(p.coeffs().iter().step_by(g as usize).cloned().collect())
        };
        RamifiedRational {
            ramification: self.ramification / g,
            func: RationalFunction::from_coprime(squeeze(self.func.num()), squeeze(self.func.den())),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.func.is_zero()
    }
}

impl fmt::Display for RamifiedRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ramification == 1 {
            write!(f, "{}", self.func)
        } else {
            write!(f, "{} [t = x^(1/{})]", self.func.fmt_var("t"), self.ramification)
        }
    }
}
