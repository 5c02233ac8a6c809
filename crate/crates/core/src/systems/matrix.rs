//! Dense matrices over K = ℚ(i)(x).

use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::Operator;
use crate::series_core::{Polynomial, RationalFunction};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RMatrix {
    rows: usize,
    cols: usize,
    data: Vec<RationalFunction>,
}

impl RMatrix {
    pub fn from_rows(rows: Vec<Vec<RationalFunction>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged matrix rows".into()));
        }
        Ok(RMatrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        RMatrix {
            rows,
            cols,
            data: vec![RationalFunction::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = RMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, RationalFunction::one());
        }
        m
    }

    pub fn diagonal(d: &[RationalFunction]) -> Self {
        let mut m = RMatrix::zeros(d.len(), d.len());
        for (i, v) in d.iter().enumerate() {
            m.set(i, i, v.clone());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &RationalFunction {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: RationalFunction) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[RationalFunction] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<RationalFunction>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    pub fn mul(&self, other: &RMatrix) -> Result<RMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = RMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = RationalFunction::zero();
                for k in 0..self.cols {
                    let a = self.get(i, k);
                    let b = other.get(k, j);
                    if !a.is_zero() && !b.is_zero() {
                        acc = &acc + &(a * b);
                    }
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &RMatrix) -> Result<RMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch("matrix difference".into()));
        }
        Ok(RMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    /// Entrywise action of an operator.
    pub fn apply(&self, op: &Operator) -> RMatrix {
        RMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| op.apply_rational(v)).collect(),
        }
    }

    /// Row `i` scaled to polynomial entries, with the scaling denominator.
    fn polynomial_rows(&self) -> (Vec<Vec<Polynomial>>, Vec<Polynomial>) {
        let mut rows = Vec::with_capacity(self.rows);
        let mut dens = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let mut d = Polynomial::one();
            for v in self.row(i) {
                let g = Polynomial::gcd(&d, v.den());
                d = &d * &v.den().exact_div(&g).expect("gcd divides");
            }
            let row = self
                .row(i)
                .iter()
                .map(|v| (v.num() * &d).exact_div(v.den()).expect("common denominator"))
                .collect();
            rows.push(row);
            dens.push(d);
        }
        (rows, dens)
    }

    /// Determinant by fraction-free (Bareiss) elimination on the
    /// denominator-cleared matrix.
    pub fn determinant(&self) -> Result<RationalFunction> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch("determinant of a non-square matrix".into()));
        }
        let n = self.rows;
        if n == 0 {
            return Ok(RationalFunction::one());
        }
        let (mut m, dens) = self.polynomial_rows();
        let mut sign = Sign::Plus;
        let mut prev = Polynomial::one();
        for k in 0..n {
            let Some(piv) = (k..n).find(|&r| !m[r][k].is_zero()) else {
                return Ok(RationalFunction::zero());
            };
            if piv != k {
                m.swap(piv, k);
                sign.flip();
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let t = &(&m[k][k] * &m[i][j]) - &(&m[i][k] * &m[k][j]);
                    m[i][j] = t
                        .exact_div(&prev)
                        .ok_or_else(|| Error::Invariant("inexact Bareiss division".into()))?;
                }
                m[i][k] = Polynomial::zero();
            }
            prev = m[k][k].clone();
        }
        let mut det = RationalFunction::from_poly(m[n - 1][n - 1].clone());
        if sign == Sign::Minus {
            det = -&det;
        }
        let den = dens.iter().fold(Polynomial::one(), |acc, d| &acc * d);
        det.checked_div(&RationalFunction::from_poly(den))
    }

    /// Inverse by fraction-free Gauss–Jordan elimination of `[D·A | D]`,
    /// where `D` clears the row denominators.
    pub fn inverse(&self) -> Result<RMatrix> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch("inverse of a non-square matrix".into()));
        }
        let n = self.rows;
        let (rows, dens) = self.polynomial_rows();
        let mut m: Vec<Vec<Polynomial>> = rows
            .into_iter()
            .enumerate()
            .map(|(i, mut row)| {
                row.extend((0..n).map(|j| if i == j { dens[i].clone() } else { Polynomial::zero() }));
                row
            })
            .collect();
        let mut prev = Polynomial::one();
        for k in 0..n {
            let piv = (k..n)
                .filter(|&r| !m[r][k].is_zero())
                .min_by_key(|&r| m[r][k].deg())
                .ok_or(Error::SingularMatrix)?;
            m.swap(piv, k);
            for i in 0..n {
                if i == k {
                    continue;
                }
                for j in 0..2 * n {
                    if j == k {
                        continue;
                    }
                    let t = &(&m[k][k] * &m[i][j]) - &(&m[i][k] * &m[k][j]);
                    m[i][j] = t
                        .exact_div(&prev)
                        .ok_or_else(|| Error::Invariant("inexact fraction-free division".into()))?;
                }
                m[i][k] = Polynomial::zero();
            }
            prev = m[k][k].clone();
        }
        // every diagonal entry now equals the last pivot
        let mut out = RMatrix::zeros(n, n);
        for i in 0..n {
            let d = RationalFunction::from_poly(m[i][i].clone());
            for j in 0..n {
                let v = RationalFunction::from_poly(m[i][n + j].clone());
                out.set(i, j, v.checked_div(&d)?);
            }
        }
        Ok(out)
    }

    pub fn fmt_rows(&self) -> Vec<Vec<String>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.to_string()).collect())
            .collect()
    }
}

#[derive(PartialEq, Eq, Clone, Copy)]
enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn flip(&mut self) {
        *self = match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        };
    }
}

impl fmt::Debug for RMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.fmt_rows())
    }
}

impl Serialize for RMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.fmt_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for RMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<RationalFunction>> = Vec::deserialize(d)?;
        RMatrix::from_rows(rows).map_err(serde::de::Error::custom)
    }
}
