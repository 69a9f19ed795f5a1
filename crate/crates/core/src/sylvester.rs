//! Sylvester's sequence and the weighted simplices built from it.

use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{det_i64, BigInt};
use crate::geometry::{apply_affine, IntHalfSpace, LatticePoint, LatticeSimplex};

/// Terms `s_0, ..., s_k` and prefix products `s_0 * ... * s_k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SylvesterCache {
    values: Vec<BigInt>,
    products: Vec<BigInt>,
}

impl Default for SylvesterCache {
    fn default() -> Self {
        Self::new()
    }
}

impl SylvesterCache {
    pub fn new() -> Self {
        SylvesterCache {
            values: vec![BigInt::from(2)],
            products: vec![BigInt::from(2)],
        }
    }

    fn extend_to(&mut self, k: usize) {
        while self.values.len() <= k {
            let next = self.products.last().unwrap() + 1u32;
            let prod = self.products.last().unwrap() * &next;
            self.values.push(next);
            self.products.push(prod);
        }
    }

    pub fn value(&mut self, k: usize) -> BigInt {
        self.extend_to(k);
        self.values[k].clone()
    }

    /// `s_0 * ... * s_k`.
    pub fn product(&mut self, k: usize) -> BigInt {
        self.extend_to(k);
        self.products[k].clone()
    }

    pub fn values(&self) -> &[BigInt] {
        &self.values
    }
}

static CACHE: Mutex<SylvesterCache> = Mutex::new(SylvesterCache {
    values: Vec::new(),
    products: Vec::new(),
});

fn with_cache<T>(f: impl FnOnce(&mut SylvesterCache) -> T) -> T {
    let mut guard = CACHE.lock().unwrap_or_else(|e| e.into_inner());
    if guard.values.is_empty() {
        *guard = SylvesterCache::new();
    }
    f(&mut guard)
}

/// `s_n`.
pub fn sylvester(n: usize) -> BigInt {
    with_cache(|c| c.value(n))
}

/// `s_n` as a machine integer; fails from `s_7` on.
pub fn sylvester_i64(n: usize) -> Result<i64> {
    sylvester(n)
        .to_i64()
        .ok_or(Error::Overflow("Sylvester term"))
}

/// `(d_1, d_2) = (2 s_{n-1} - 2, s_n - 1)`.
pub fn degrees(n: usize) -> Result<(BigInt, BigInt)> {
    if n == 0 {
        return Err(Error::Argument("degrees are defined for n >= 1".into()));
    }
    Ok((2 * sylvester(n - 1) - 2, sylvester(n) - 1))
}

/// The three simplex families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    P1,
    P2,
    P2dual,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::P1 => "p1",
            Family::P2 => "p2",
            Family::P2dual => "p2dual",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "p1" => Ok(Family::P1),
            "p2" => Ok(Family::P2),
            "p2dual" => Ok(Family::P2dual),
            other => Err(Error::Argument(format!(
                "unknown family {other:?} (expected p1, p2 or p2dual)"
            ))),
        }
    }
}

/// Size limits shared by enumeration and triangulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Largest `n` for which `P2`/`P2dual` are enumerated and triangulated;
    /// `P1` is allowed one level higher.
    pub max_n: usize,
    /// Largest `n` for which bounding-box oracles are run.
    pub max_bruteforce_n: usize,
    /// Cap on enumerated lattice points.
    pub max_points: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_n: 5,
            max_bruteforce_n: 3,
            max_points: 10_000_000,
        }
    }
}

/// A member of one of the families together with its dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FamilySpec {
    pub family: Family,
    pub n: usize,
}

impl FamilySpec {
    pub fn new(family: Family, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Argument("family index must be at least 1".into()));
        }
        Ok(FamilySpec { family, n })
    }

    /// Rejects specs beyond `limits`.
    pub fn check(&self, limits: &Limits) -> Result<()> {
        let bound = match self.family {
            Family::P1 => limits.max_n + 1,
            _ => limits.max_n,
        };
        if self.n > bound {
            return Err(Error::Feasibility {
                what: format!("{} with n = {}", self.family, self.n),
                needed: format!("n = {}", self.n),
                limit: format!("n <= {bound}"),
            });
        }
        Ok(())
    }

    /// Normalized volume of the simplex, which is also the number of cells in
    /// any of its unimodular triangulations.
    pub fn nvol(&self) -> BigInt {
        match self.family {
            Family::P1 => 2 * (sylvester(self.n - 1) - 1),
            _ => sylvester(self.n) - 1,
        }
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.family, self.n)
    }
}

fn small(n: usize) -> Result<Vec<i64>> {
    (0..=n).map(sylvester_i64).collect()
}

/// `w_1` of `P1^(n)`.
pub fn w1(n: usize) -> Result<LatticePoint> {
    let s = small(n)?;
    let d1 = 2 * s[n - 1] - 2;
    let mut v: Vec<i64> = s[..n - 1].iter().map(|&si| -d1 / si).collect();
    v.push(-1);
    Ok(LatticePoint::new(v))
}

/// `w_2` of `P2^(n)`.
pub fn w2(n: usize) -> Result<LatticePoint> {
    let s = small(n)?;
    let d2 = s[n] - 1;
    Ok(LatticePoint::new(s[..n].iter().map(|&si| -d2 / si).collect()))
}

/// The simplex named by `spec`, vertices in the order `e_0, ..., e_{n-1}`
/// followed by the special vertex (for `P2dual`, the images of those vertices
/// under the duality map).
pub fn build(spec: FamilySpec) -> Result<LatticeSimplex> {
    let n = spec.n;
    let mut verts: Vec<LatticePoint> = (0..n).map(|i| LatticePoint::unit(n, i)).collect();
    match spec.family {
        Family::P1 => verts.push(w1(n)?),
        Family::P2 => verts.push(w2(n)?),
        Family::P2dual => {
            let t = duality_map(n)?;
            verts.push(w2(n)?);
            verts = verts.iter().map(|v| t.apply(v)).collect::<Result<_>>()?;
        }
    }
    LatticeSimplex::new(verts)
}

/// The map `T` with `T(e_i) = (-1, ..., s_i - 1, ..., -1)` carrying `P2^(n)`
/// onto `P2dual^(n)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualityMap {
    /// Rows of the matrix; column `i` is `T(e_i)`.
    pub matrix: Vec<Vec<i64>>,
    inverse: Vec<Vec<i64>>,
}

impl DualityMap {
    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn inverse_matrix(&self) -> &[Vec<i64>] {
        &self.inverse
    }

    pub fn det(&self) -> Result<BigInt> {
        det_i64(&self.matrix)
    }

    pub fn apply(&self, p: &LatticePoint) -> Result<LatticePoint> {
        apply_affine(&self.matrix, &vec![0; self.dim()], p)
    }

    pub fn apply_inverse(&self, p: &LatticePoint) -> Result<LatticePoint> {
        apply_affine(&self.inverse, &vec![0; self.dim()], p)
    }
}

pub fn duality_map(n: usize) -> Result<DualityMap> {
    if n == 0 {
        return Err(Error::Argument("duality map needs n >= 1".into()));
    }
    let s = small(n)?;
    let matrix: Vec<Vec<i64>> = (0..n)
        .map(|r| (0..n).map(|c| if r == c { s[c] - 1 } else { -1 }).collect())
        .collect();
    // T = diag(s) - J, so T^{-1} = diag(1/s) + (s_n - 1) (1/s_i)(1/s_j).
    let big = |x: i64| BigInt::from(x);
    let sn1 = big(s[n] - 1);
    let mut inverse = vec![vec![0i64; n]; n];
    for i in 0..n {
        for j in 0..n {
            let num = if i == j {
                &sn1 + big(s[i])
            } else {
                sn1.clone()
            };
            let den = big(s[i]) * big(s[j]);
            if (&num % &den) != BigInt::from(0) {
                return Err(Error::Invariant("duality map inverse is not integral".into()));
            }
            inverse[i][j] = (num / den).to_i64().ok_or(Error::Overflow("duality map inverse"))?;
        }
    }
    let map = DualityMap { matrix, inverse };
    if !map.det()?.is_one() {
        return Err(Error::Invariant("duality map determinant differs from 1".into()));
    }
    Ok(map)
}

/// Largest last coordinate of a lattice point of `P2dual^(n+1)` lying over
/// the lattice point `y` of `P2dual^(n)`.
pub fn column_height(n_plus_1: usize, y: &LatticePoint) -> Result<i64> {
    if n_plus_1 < 2 {
        return Err(Error::Argument("column heights start at level 2".into()));
    }
    let n = n_plus_1 - 1;
    if y.dim() != n {
        return Err(Error::dim(format!("expected a point of dimension {n}")));
    }
    let s = small(n)?;
    let top = slanted_value(&s, y)?;
    if y.iter().any(|&c| c < -1) || top < -1 {
        return Err(Error::Domain(format!("{y} is not a lattice point of P2dual_{n}")));
    }
    if y.iter().all(|&c| c == -1) {
        return Ok(s[n] - 1);
    }
    Ok(top)
}

/// Height of the slanted hyperplane through the facet of `P2dual^(n+1)`
/// opposite the apex `(-1, ..., -1, s_n - 1)`, over `y`. It agrees with
/// [`column_height`] except below the apex, where it is one less.
pub fn slanted_height(n_plus_1: usize, y: &LatticePoint) -> Result<i64> {
    if n_plus_1 < 2 || y.dim() + 1 != n_plus_1 {
        return Err(Error::dim(format!("expected a point of dimension {}", n_plus_1.max(2) - 1)));
    }
    slanted_value(&small(n_plus_1 - 1)?, y)
}

/// The slanted hyperplane as `x_n + sum_i (s_n - 1)/s_i * x_i = 0`, so that
/// `P2dual^(n+1)` lies on its nonpositive side except for the apex.
pub fn slanted_hyperplane(n_plus_1: usize) -> Result<IntHalfSpace> {
    if n_plus_1 < 2 {
        return Err(Error::Argument("the slanted hyperplane starts at level 2".into()));
    }
    let n = n_plus_1 - 1;
    let s = small(n)?;
    let mut normal: Vec<i64> = s[..n].iter().map(|&si| (s[n] - 1) / si).collect();
    normal.push(1);
    Ok(IntHalfSpace { normal, offset: 0 })
}

/// Apex `(-1, ..., -1, s_n - 1)` of `P2dual^(n+1)`.
pub fn p2dual_apex(n_plus_1: usize) -> Result<LatticePoint> {
    if n_plus_1 < 2 {
        return Err(Error::Argument("the apex is defined from level 2".into()));
    }
    let mut v = vec![-1; n_plus_1];
    v[n_plus_1 - 1] = sylvester_i64(n_plus_1 - 1)? - 1;
    Ok(LatticePoint::new(v))
}

/// `-sum_i (s_n - 1)/s_i * y_i`; at least `-1` exactly on `P2dual^(n)`.
fn slanted_value(s: &[i64], y: &[i64]) -> Result<i64> {
    let n = y.len();
    let d2 = s[n] as i128 - 1;
    let v: i128 = -y
        .iter()
        .enumerate()
        .map(|(i, &c)| d2 / s[i] as i128 * c as i128)
        .sum::<i128>();
    i64::try_from(v).map_err(|_| Error::Overflow("column height"))
}

/// Lattice points of `P2dual^(n)` in lexicographic order, enumerated column
/// by column.
pub fn lattice_points_p2dual(n: usize, limits: &Limits) -> Result<Vec<LatticePoint>> {
    FamilySpec::new(Family::P2dual, n)?.check(limits)?;
    let mut level: Vec<LatticePoint> = (-1..=1).map(|t| LatticePoint::new(vec![t])).collect();
    for k in 2..=n {
        let heights = level
            .iter()
            .map(|y| column_height(k, y))
            .collect::<Result<Vec<_>>>()?;
        let total: u128 = heights.iter().map(|&h| (h as i128 + 2) as u128).sum();
        if total > limits.max_points as u128 {
            return Err(Error::Feasibility {
                what: format!("enumerating lattice points of P2dual_{k}"),
                needed: format!("{total} points"),
                limit: format!("{} points", limits.max_points),
            });
        }
        let mut next = Vec::with_capacity(total as usize);
        for (y, &h) in level.iter().zip(&heights) {
            for t in -1..=h {
                next.push(y.lift(t));
            }
        }
        level = next;
    }
    Ok(level)
}

/// Lattice points of `P2^(n)`, obtained from those of `P2dual^(n)` through
/// the inverse duality map, sorted.
pub fn lattice_points_p2(n: usize, limits: &Limits) -> Result<Vec<LatticePoint>> {
    let t = duality_map(n)?;
    let mut pts = lattice_points_p2dual(n, limits)?
        .iter()
        .map(|p| t.apply_inverse(p))
        .collect::<Result<Vec<_>>>()?;
    pts.sort();
    Ok(pts)
}

/// Lattice points of `P1^(n+1)`: those of `P2^(n)` at height 0 plus `e_n`
/// and `w_1`, sorted.
pub fn lattice_points_p1(n_plus_1: usize, limits: &Limits) -> Result<Vec<LatticePoint>> {
    if n_plus_1 < 2 {
        return Err(Error::Argument("P1 point enumeration needs n + 1 >= 2".into()));
    }
    let n = n_plus_1 - 1;
    let mut pts: Vec<LatticePoint> = lattice_points_p2(n, limits)?
        .iter()
        .map(|p| p.lift(0))
        .collect();
    pts.push(LatticePoint::unit(n_plus_1, n));
    pts.push(w1(n_plus_1)?);
    pts.sort();
    Ok(pts)
}
