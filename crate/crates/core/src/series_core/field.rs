//! Gaussian rationals `a + b·i` with `a, b ∈ ℚ`.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An exact element of ℚ(i). Both parts are kept in lowest terms by
/// `BigRational`, so structural equality is field equality.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct FieldElem {
    pub re: BigRational,
    pub im: BigRational,
}

impl FieldElem {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        FieldElem { re, im }
    }

    pub fn from_int(n: i64) -> Self {
        FieldElem::new(BigRational::from_integer(n.into()), BigRational::zero())
    }

    pub fn from_bigint(n: BigInt) -> Self {
        FieldElem::new(BigRational::from_integer(n), BigRational::zero())
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        FieldElem::new(
            BigRational::new(num.into(), den.into()),
            BigRational::zero(),
        )
    }

    pub fn from_rational(r: BigRational) -> Self {
        FieldElem::new(r, BigRational::zero())
    }

    /// `re + im·i` from small integers.
    pub fn gaussian(re: i64, im: i64) -> Self {
        FieldElem::new(
            BigRational::from_integer(re.into()),
            BigRational::from_integer(im.into()),
        )
    }

    pub fn i() -> Self {
        FieldElem::gaussian(0, 1)
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        FieldElem::new(self.re.clone(), -self.im.clone())
    }

    /// `z · z̄ = |z|²`, always rational.
    pub fn norm(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if self.im.is_zero() {
            return Ok(FieldElem::from_rational(self.re.recip()));
        }
        let n = self.norm();
        Ok(FieldElem::new(&self.re / &n, -&self.im / &n))
    }

    pub fn checked_div(&self, other: &FieldElem) -> Result<FieldElem> {
        Ok(self * &other.inv()?)
    }

    pub fn pow(&self, exp: i64) -> Result<Self> {
        if exp < 0 {
            return self.inv()?.pow(-exp);
        }
        Ok(self.pow_u(exp as u64))
    }

    pub fn pow_u(&self, mut exp: u64) -> Self {
        let mut base = self.clone();
        let mut acc = FieldElem::one();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = &acc * &base;
            }
            exp >>= 1;
            if exp > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// The rational value, if the imaginary part vanishes.
    pub fn as_rational(&self) -> Option<&BigRational> {
        self.is_real().then_some(&self.re)
    }

    /// The integer value, if this is a rational integer.
    pub fn as_integer(&self) -> Option<BigInt> {
        match self.as_rational() {
            Some(r) if r.is_integer() => Some(r.to_integer()),
            _ => None,
        }
    }

    /// Least common multiple of the denominators of both parts.
    pub fn denominator_lcm(&self) -> BigInt {
        self.re.denom().lcm(self.im.denom())
    }

    /// Is this one of ±1, ±i.
    pub fn is_root_of_unity(&self) -> bool {
        self.pow_u(4).is_one()
    }

    /// A rough size measure used for pivoting.
    pub fn bit_size(&self) -> u64 {
        self.re.numer().bits() + self.re.denom().bits() + self.im.numer().bits() + self.im.denom().bits()
    }

    /// Canonical text used for lexicographic tie-breaking.
    pub fn key(&self) -> String {
        self.to_string()
    }
}

impl Zero for FieldElem {
    fn zero() -> Self {
        FieldElem::new(BigRational::zero(), BigRational::zero())
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
}

impl One for FieldElem {
    fn one() -> Self {
        FieldElem::from_int(1)
    }
    fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }
}

impl From<i64> for FieldElem {
    fn from(n: i64) -> Self {
        FieldElem::from_int(n)
    }
}

impl From<BigRational> for FieldElem {
    fn from(r: BigRational) -> Self {
        FieldElem::from_rational(r)
    }
}

impl<'a> Add<&'a FieldElem> for &'a FieldElem {
    type Output = FieldElem;
    fn add(self, rhs: &FieldElem) -> FieldElem {
        if self.im.is_zero() && rhs.im.is_zero() {
            return FieldElem::from_rational(&self.re + &rhs.re);
        }
        FieldElem::new(&self.re + &rhs.re, &self.im + &rhs.im)
    }
}

impl<'a> Sub<&'a FieldElem> for &'a FieldElem {
    type Output = FieldElem;
    fn sub(self, rhs: &FieldElem) -> FieldElem {
        if self.im.is_zero() && rhs.im.is_zero() {
            return FieldElem::from_rational(&self.re - &rhs.re);
        }
        FieldElem::new(&self.re - &rhs.re, &self.im - &rhs.im)
    }
}

impl<'a> Mul<&'a FieldElem> for &'a FieldElem {
    type Output = FieldElem;
    fn mul(self, rhs: &FieldElem) -> FieldElem {
        if self.is_zero() || rhs.is_zero() {
            return FieldElem::zero();
        }
        match (self.im.is_zero(), rhs.im.is_zero()) {
            (true, true) => FieldElem::from_rational(&self.re * &rhs.re),
            (true, false) => FieldElem::new(&self.re * &rhs.re, &self.re * &rhs.im),
            (false, true) => FieldElem::new(&self.re * &rhs.re, &self.im * &rhs.re),
            (false, false) => FieldElem::new(
                &self.re * &rhs.re - &self.im * &rhs.im,
                &self.re * &rhs.im + &self.im * &rhs.re,
            ),
        }
    }
}

impl<'a> Div<&'a FieldElem> for &'a FieldElem {
    type Output = FieldElem;
    fn div(self, rhs: &FieldElem) -> FieldElem {
        self.checked_div(rhs).expect("division by zero in Q(i)")
    }
}

impl Neg for &FieldElem {
    type Output = FieldElem;
    fn neg(self) -> FieldElem {
        FieldElem::new(-&self.re, -&self.im)
    }
}

impl Neg for FieldElem {
    type Output = FieldElem;
    fn neg(self) -> FieldElem {
        FieldElem::new(-self.re, -self.im)
    }
}

macro_rules! forward_owned {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr<FieldElem> for FieldElem {
            type Output = FieldElem;
            fn $m(self, rhs: FieldElem) -> FieldElem { (&self).$m(&rhs) }
        }
        impl<'a> $tr<&'a FieldElem> for FieldElem {
            type Output = FieldElem;
            fn $m(self, rhs: &FieldElem) -> FieldElem { (&self).$m(rhs) }
        }
        impl<'a> $tr<FieldElem> for &'a FieldElem {
            type Output = FieldElem;
            fn $m(self, rhs: FieldElem) -> FieldElem { self.$m(&rhs) }
        }
    )*};
}
forward_owned!(Add add, Sub sub, Mul mul, Div div);

impl AddAssign<&FieldElem> for FieldElem {
    fn add_assign(&mut self, rhs: &FieldElem) {
        self.re += &rhs.re;
        if !rhs.im.is_zero() {
            self.im += &rhs.im;
        }
    }
}

impl SubAssign<&FieldElem> for FieldElem {
    fn sub_assign(&mut self, rhs: &FieldElem) {
        self.re -= &rhs.re;
        if !rhs.im.is_zero() {
            self.im -= &rhs.im;
        }
    }
}

impl MulAssign<&FieldElem> for FieldElem {
    fn mul_assign(&mut self, rhs: &FieldElem) {
        *self = &*self * rhs;
    }
}

fn fmt_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for FieldElem {
    /// Canonical grammar: `p/q`, `p/q*i`, `i`, `-i`, `a/b+c/d*i`, `a/b-i`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let im_abs = self.im.abs();
        let im_part = if im_abs.is_one() {
            "i".to_string()
        } else {
            format!("{}*i", fmt_rational(&im_abs))
        };
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => write!(f, "{}", fmt_rational(&self.re)),
            (true, false) => {
                if self.im.is_negative() {
                    write!(f, "-{im_part}")
                } else {
                    write!(f, "{im_part}")
                }
            }
            (false, false) => {
                let sign = if self.im.is_negative() { '-' } else { '+' };
                write!(f, "{}{}{}", fmt_rational(&self.re), sign, im_part)
            }
        }
    }
}

impl fmt::Debug for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for FieldElem {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        crate::series_core::parse::parse_field_elem(s)
    }
}

impl Serialize for FieldElem {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for FieldElem {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_forms() {
        assert_eq!(FieldElem::from_ratio(-3, 6).to_string(), "-1/2");
        assert_eq!(FieldElem::i().to_string(), "i");
        assert_eq!((-FieldElem::i()).to_string(), "-i");
        assert_eq!(FieldElem::gaussian(0, 3).to_string(), "3*i");
        let z = FieldElem::new(BigRational::new(3.into(), 5.into()), BigRational::new(4.into(), 5.into()));
        assert_eq!(z.to_string(), "3/5+4/5*i");
        assert_eq!(z.conj().to_string(), "3/5-4/5*i");
    }

    #[test]
    fn field_axioms_small() {
        let a = FieldElem::gaussian(2, -1);
        let b = FieldElem::from_ratio(1, 3);
        assert_eq!(&(&a * &b) / &b, a);
        assert_eq!(&a * &a.inv().unwrap(), FieldElem::one());
        assert!(FieldElem::zero().inv().is_err());
        assert_eq!(FieldElem::i().pow(2).unwrap(), FieldElem::from_int(-1));
        assert_eq!(FieldElem::gaussian(0, 2).pow(-2).unwrap(), FieldElem::from_ratio(-1, 4));
    }

    #[test]
    fn modulus_one_norm() {
        let z: FieldElem = "3/5+4/5*i".parse().unwrap();
        assert!(z.norm().is_one());
        assert!(!z.is_root_of_unity());
        assert!(FieldElem::i().is_root_of_unity());
    }

    #[test]
    fn parse_roundtrip() {
        for s in ["0", "7", "-2/3", "i", "-i", "5*i", "1/2-3/4*i", "-1+i"] {
            let z: FieldElem = s.parse().unwrap();
            assert_eq!(z.to_string(), s);
        }
    }
}
