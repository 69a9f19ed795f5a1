//! Exact arithmetic: big integers, reduced rationals, and the small dense
//! linear algebra the rest of the crate is built on.
//!
//! Determinants are computed by fraction-free (Bareiss) elimination. Integer
//! matrices first try an `i128` pass with checked arithmetic and fall back to
//! arbitrary precision on overflow, so results are always exact.

use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

pub use num_bigint::BigInt;

/// Reduced rational with positive denominator. Canonical form is enforced on
/// construction, so derived equality and hashing are structural.
pub type BigRat = num_rational::BigRational;

/// Integer as a [`BigRat`].
pub fn rat(n: i64) -> BigRat {
    BigRat::from_integer(BigInt::from(n))
}

/// `num / den` as a reduced [`BigRat`]. Panics if `den == 0`.
pub fn ratio(num: i64, den: i64) -> BigRat {
    BigRat::new(BigInt::from(num), BigInt::from(den))
}

/// Formats a rational as `"p"` or `"p/q"`.
pub fn format_rat(r: &BigRat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `"p"` or `"p/q"` (q nonzero) into a reduced rational.
pub fn parse_rat(s: &str) -> Option<BigRat> {
    match s.split_once('/') {
        None => s.trim().parse::<BigInt>().ok().map(BigRat::from_integer),
        Some((p, q)) => {
            let p = p.trim().parse::<BigInt>().ok()?;
            let q = q.trim().parse::<BigInt>().ok()?;
            if q.is_zero() {
                None
            } else {
                Some(BigRat::new(p, q))
            }
        }
    }
}

/// Dense row-major matrix of rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    entries: Vec<BigRat>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<BigRat>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::dim(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(Matrix {
            rows,
            cols,
            entries,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            entries: vec![BigRat::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.entries[i * n + i] = BigRat::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<BigRat>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::dim("ragged rows"));
        }
        Self::new(r, c, rows.into_iter().flatten().collect())
    }

    pub fn from_int_rows<R: AsRef<[i64]>>(rows: &[R]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.as_ref().iter().map(|&x| rat(x)).collect())
                .collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRat {
        assert!(i < self.rows && j < self.cols, "matrix index out of bounds");
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigRat) {
        assert!(i < self.rows && j < self.cols, "matrix index out of bounds");
        self.entries[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[BigRat] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.entries.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::dim(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let idx = i * other.cols + j;
                    out.entries[idx] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }
}

/// Exact determinant of a square matrix.
///
/// Each row is scaled to integers by the lcm of its denominators, the integer
/// matrix is reduced by Bareiss elimination, and the scaling is divided out.
pub fn det(m: &Matrix) -> Result<BigRat> {
    if m.rows != m.cols {
        return Err(Error::dim(format!(
            "determinant of a non-square {}x{} matrix",
            m.rows, m.cols
        )));
    }
    let n = m.rows;
    let mut scale = BigInt::one();
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let lcm = m
            .row(i)
            .iter()
            .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        rows.push(
            m.row(i)
                .iter()
                .map(|x| x.numer() * (&lcm / x.denom()))
                .collect::<Vec<_>>(),
        );
        scale *= lcm;
    }
    Ok(BigRat::new(bareiss_det(rows), scale))
}

/// Fraction-free determinant of a square integer matrix.
pub fn bareiss_det(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut negate = false;
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(i, k);
                    negate = !negate;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    let d = a[n - 1][n - 1].clone();
    if negate {
        -d
    } else {
        d
    }
}

/// Bareiss elimination in `i128`; `None` on overflow. `a` is row-major `n x n`.
pub(crate) fn bareiss_i128(a: &mut [i128], n: usize) -> Option<i128> {
    if n == 0 {
        return Some(1);
    }
    let mut negate = false;
    let mut prev: i128 = 1;
    for k in 0..n - 1 {
        if a[k * n + k] == 0 {
            let Some(i) = (k + 1..n).find(|&i| a[i * n + k] != 0) else {
                return Some(0);
            };
            for j in 0..n {
                a.swap(i * n + j, k * n + j);
            }
            negate = !negate;
        }
        let pivot = a[k * n + k];
        for i in k + 1..n {
            let aik = a[i * n + k];
            for j in k + 1..n {
                let v = a[i * n + j]
                    .checked_mul(pivot)?
                    .checked_sub(aik.checked_mul(a[k * n + j])?)?;
                a[i * n + j] = v / prev;
            }
        }
        prev = pivot;
    }
    let d = a[n * n - 1];
    Some(if negate { -d } else { d })
}

/// Exact determinant of a square integer matrix given as rows.
pub fn det_i64<R: AsRef<[i64]>>(rows: &[R]) -> Result<BigInt> {
    let n = rows.len();
    if rows.iter().any(|r| r.as_ref().len() != n) {
        return Err(Error::dim("determinant of a non-square integer matrix"));
    }
    let mut flat: Vec<i128> = rows
        .iter()
        .flat_map(|r| r.as_ref().iter().map(|&x| x as i128))
        .collect();
    if let Some(d) = bareiss_i128(&mut flat, n) {
        return Ok(BigInt::from(d));
    }
    Ok(bareiss_det(
        rows.iter()
            .map(|r| r.as_ref().iter().map(|&x| BigInt::from(x)).collect())
            .collect(),
    ))
}

/// Rank of a rational matrix given as rows (Gaussian elimination).
pub fn rank<P: AsRef<[BigRat]>>(rows: &[P]) -> usize {
    let mut m: Vec<Vec<BigRat>> = rows.iter().map(|r| r.as_ref().to_vec()).collect();
    let cols = m.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let pivot = m[r][c].clone();
        for i in r + 1..m.len() {
            if m[i][c].is_zero() {
                continue;
            }
            let f = &m[i][c] / &pivot;
            for j in c..cols {
                let v = &f * &m[r][j];
                m[i][j] -= v;
            }
        }
        r += 1;
        if r == m.len() {
            break;
        }
    }
    r
}

/// Dimension of the affine hull of a nonempty point set.
pub fn affine_rank<P: AsRef<[BigRat]>>(points: &[P]) -> Result<usize> {
    let first = points
        .first()
        .ok_or_else(|| Error::Argument("affine rank of an empty point set".into()))?
        .as_ref();
    let dim = first.len();
    if points.iter().any(|p| p.as_ref().len() != dim) {
        return Err(Error::dim("points of differing dimension"));
    }
    let diffs: Vec<Vec<BigRat>> = points[1..]
        .iter()
        .map(|p| p.as_ref().iter().zip(first).map(|(a, b)| a - b).collect())
        .collect();
    Ok(rank(&diffs))
}

/// Affine function `x -> <coeffs, x> + constant`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AffineFunctional {
    pub coeffs: Vec<BigRat>,
    pub constant: BigRat,
}

impl AffineFunctional {
    pub fn eval(&self, x: &[BigRat]) -> BigRat {
        debug_assert_eq!(x.len(), self.coeffs.len());
        self.coeffs
            .iter()
            .zip(x)
            .fold(self.constant.clone(), |acc, (c, xi)| acc + c * xi)
    }

    pub fn eval_int(&self, x: &[i64]) -> BigRat {
        debug_assert_eq!(x.len(), self.coeffs.len());
        let mut acc = self.constant.clone();
        for (c, &xi) in self.coeffs.iter().zip(x) {
            if xi != 0 && !c.is_zero() {
                acc += c * BigInt::from(xi);
            }
        }
        acc
    }
}

/// The unique affine function taking `values[i]` at `vertices[i]`, for `d + 1`
/// affinely independent vertices in dimension `d`.
pub fn affine_interpolant<P: AsRef<[BigRat]>>(
    vertices: &[P],
    values: &[BigRat],
) -> Result<AffineFunctional> {
    let k = vertices.len();
    if k == 0 || values.len() != k {
        return Err(Error::Argument(format!(
            "{} vertices with {} values",
            k,
            values.len()
        )));
    }
    let d = vertices[0].as_ref().len();
    if k != d + 1 || vertices.iter().any(|v| v.as_ref().len() != d) {
        return Err(Error::dim(format!(
            "interpolation needs {} points in dimension {d}, got {k}",
            d + 1
        )));
    }
    // Augmented system [v | 1 | value]; unknowns are (coeffs, constant).
    let mut m: Vec<Vec<BigRat>> = vertices
        .iter()
        .zip(values)
        .map(|(v, val)| {
            let mut row = v.as_ref().to_vec();
            row.push(BigRat::one());
            row.push(val.clone());
            row
        })
        .collect();
    let n = d + 1;
    for c in 0..n {
        let p = (c..n)
            .find(|&i| !m[i][c].is_zero())
            .ok_or_else(|| Error::Singular("interpolation vertices are affinely dependent".into()))?;
        m.swap(c, p);
        let pivot = m[c][c].clone();
        for j in c..=n {
            let v = &m[c][j] / &pivot;
            m[c][j] = v;
        }
        for i in 0..n {
            if i == c || m[i][c].is_zero() {
                continue;
            }
            let f = m[i][c].clone();
            for j in c..=n {
                let v = &f * &m[c][j];
                m[i][j] -= v;
            }
        }
    }
    let mut sol: Vec<BigRat> = m.into_iter().map(|mut row| row.pop().unwrap()).collect();
    let constant = sol.pop().unwrap();
    Ok(AffineFunctional {
        coeffs: sol,
        constant,
    })
}

/// Greatest common divisor of a slice of `i64` (0 for an all-zero slice).
pub(crate) fn gcd_slice(xs: &[i64]) -> i64 {
    xs.iter().fold(0i64, |g, &x| g.gcd(&x))
}

/// Least common multiple of denominators, as a positive integer.
pub(crate) fn common_denominator<'a>(values: impl IntoIterator<Item = &'a BigRat>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// Serializes an integer as a decimal string.
pub fn serialize_bigint<S: serde::Serializer>(x: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(x)
}
