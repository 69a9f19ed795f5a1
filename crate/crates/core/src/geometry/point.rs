use std::fmt;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{rat, BigInt, BigRat};

/// A point of the integer lattice.
///
/// Coordinates are stored as `i64`; every operation that combines them works in
/// `i128` with checked arithmetic and reports [`Error::Overflow`] instead of
/// wrapping. Ordering is lexicographic.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatticePoint(Vec<i64>);

impl LatticePoint {
    pub fn new(coords: Vec<i64>) -> Self {
        LatticePoint(coords)
    }

    pub fn origin(dim: usize) -> Self {
        LatticePoint(vec![0; dim])
    }

    /// The `i`-th standard basis vector (indexed from 0).
    pub fn unit(dim: usize, i: usize) -> Self {
        let mut v = vec![0; dim];
        v[i] = 1;
        LatticePoint(v)
    }

    pub fn from_bigints(coords: &[BigInt]) -> Result<Self> {
        coords
            .iter()
            .map(|c| c.to_i64().ok_or(Error::Overflow("lattice point coordinate")))
            .collect::<Result<Vec<_>>>()
            .map(LatticePoint)
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<i64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn to_rational(&self) -> RationalPoint {
        RationalPoint(self.0.iter().map(|&x| rat(x)).collect())
    }

    /// `(self, last)` in one dimension higher.
    pub fn lift(&self, last: i64) -> Self {
        let mut v = self.0.clone();
        v.push(last);
        LatticePoint(v)
    }

    /// Drops the last coordinate.
    pub fn project(&self) -> Self {
        LatticePoint(self.0[..self.0.len().saturating_sub(1)].to_vec())
    }

    pub fn is_primitive(&self) -> bool {
        crate::exact::gcd_slice(&self.0) == 1
    }
}

impl std::ops::Deref for LatticePoint {
    type Target = [i64];
    fn deref(&self) -> &[i64] {
        &self.0
    }
}

impl AsRef<[i64]> for LatticePoint {
    fn as_ref(&self) -> &[i64] {
        &self.0
    }
}

impl From<Vec<i64>> for LatticePoint {
    fn from(v: Vec<i64>) -> Self {
        LatticePoint(v)
    }
}

impl fmt::Debug for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

/// A point with exact rational coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalPoint(pub Vec<BigRat>);

impl RationalPoint {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// The lattice point, if every coordinate is integral.
    pub fn to_lattice(&self) -> Option<LatticePoint> {
        self.0
            .iter()
            .map(|x| {
                if x.is_integer() {
                    x.to_integer().to_i64()
                } else {
                    None
                }
            })
            .collect::<Option<Vec<_>>>()
            .map(LatticePoint)
    }
}

impl AsRef<[BigRat]> for RationalPoint {
    fn as_ref(&self) -> &[BigRat] {
        &self.0
    }
}

impl From<&LatticePoint> for RationalPoint {
    fn from(p: &LatticePoint) -> Self {
        p.to_rational()
    }
}

/// Closed half-space `{x : <normal, x> + offset >= 0}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HalfSpace {
    pub normal: Vec<BigRat>,
    pub offset: BigRat,
}

impl HalfSpace {
    pub fn new(normal: Vec<BigRat>, offset: BigRat) -> Result<Self> {
        if normal.iter().all(num_traits::Zero::is_zero) {
            return Err(Error::Argument("half-space with zero normal".into()));
        }
        Ok(HalfSpace { normal, offset })
    }

    pub fn from_int(normal: &[i64], offset: i64) -> Result<Self> {
        Self::new(normal.iter().map(|&x| rat(x)).collect(), rat(offset))
    }

    pub fn eval(&self, x: &[BigRat]) -> BigRat {
        self.normal
            .iter()
            .zip(x)
            .fold(self.offset.clone(), |acc, (a, b)| acc + a * b)
    }

    pub fn eval_int(&self, x: &[i64]) -> BigRat {
        self.normal
            .iter()
            .zip(x)
            .fold(self.offset.clone(), |acc, (a, &b)| acc + a * BigInt::from(b))
    }

    /// Integer form `(normal, offset)` scaled to a primitive vector, if the
    /// coefficients fit in `i64`.
    pub fn to_int(&self) -> Result<(Vec<i64>, i64)> {
        let den = crate::exact::common_denominator(
            self.normal.iter().chain(std::iter::once(&self.offset)),
        );
        let scaled: Vec<BigInt> = self
            .normal
            .iter()
            .chain(std::iter::once(&self.offset))
            .map(|x| x.numer() * (&den / x.denom()))
            .collect();
        let ints = scaled
            .iter()
            .map(|x| x.to_i64().ok_or(Error::Overflow("half-space coefficients")))
            .collect::<Result<Vec<_>>>()?;
        let g = crate::exact::gcd_slice(&ints).max(1);
        let mut ints: Vec<i64> = ints.into_iter().map(|x| x / g).collect();
        let offset = ints.pop().unwrap();
        Ok((ints, offset))
    }
}
