//! Integer primitives for small point configurations: hyperplanes, facets by
//! vertex-subset enumeration, barycentric coordinates, affine frames.
//!
//! Every configuration handled here has at most a few dozen points in
//! dimension at most 7, so exhaustive subset scans are cheap and trivially
//! exact.

use num_traits::Signed;

use crate::error::{Error, Result};
use crate::exact::{bareiss_i128, det_i64, BigInt, BigRat};
use crate::geometry::HalfSpace;

pub(crate) fn dot(a: &[i64], x: &[i64]) -> i128 {
    a.iter().zip(x).map(|(&a, &b)| a as i128 * b as i128).sum()
}

fn gcd_i128(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Half-space `<normal, x> + offset >= 0` with a primitive integer normal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntHalfSpace {
    pub normal: Vec<i64>,
    pub offset: i64,
}

impl IntHalfSpace {
    pub fn eval(&self, x: &[i64]) -> i128 {
        dot(&self.normal, x) + self.offset as i128
    }

    pub fn negated(&self) -> Self {
        IntHalfSpace {
            normal: self.normal.iter().map(|x| -x).collect(),
            offset: -self.offset,
        }
    }

    pub fn to_halfspace(&self) -> HalfSpace {
        HalfSpace::from_int(&self.normal, self.offset).expect("nonzero normal")
    }

    /// Builds from `i128` coefficients, dividing out the content of the normal.
    fn from_wide(normal: &[i128], offset: i128) -> Result<Self> {
        let g = normal.iter().fold(0i128, |g, &x| gcd_i128(g, x));
        if g == 0 {
            return Err(Error::Degenerate("zero hyperplane normal".into()));
        }
        let cvt = |x: i128| i64::try_from(x).map_err(|_| Error::Overflow("hyperplane coefficients"));
        // Offsets are only divisible by g when the hyperplane meets the
        // lattice; every hyperplane built here passes through lattice points.
        if offset % g != 0 {
            return Err(Error::Invariant("hyperplane misses the lattice".into()));
        }
        Ok(IntHalfSpace {
            normal: normal.iter().map(|&x| cvt(x / g)).collect::<Result<_>>()?,
            offset: cvt(offset / g)?,
        })
    }
}

/// Hyperplane through `d` points of `Z^d`, or `None` if they are affinely
/// dependent. Orientation is arbitrary.
pub(crate) fn hyperplane_through(points: &[&[i64]]) -> Result<Option<IntHalfSpace>> {
    let d = points[0].len();
    debug_assert_eq!(points.len(), d);
    let p0 = points[0];
    let edges: Vec<Vec<i128>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(p0).map(|(&a, &b)| a as i128 - b as i128).collect())
        .collect();
    let mut normal = vec![0i128; d];
    let m = d - 1;
    let mut buf = vec![0i128; m * m];
    for (i, slot) in normal.iter_mut().enumerate() {
        for (r, e) in edges.iter().enumerate() {
            let mut c = 0;
            for (j, &x) in e.iter().enumerate() {
                if j != i {
                    buf[r * m + c] = x;
                    c += 1;
                }
            }
        }
        let minor = bareiss_i128(&mut buf, m).ok_or(Error::Overflow("hyperplane normal"))?;
        *slot = if i % 2 == 0 { minor } else { -minor };
    }
    if normal.iter().all(|&x| x == 0) {
        return Ok(None);
    }
    let offset = -normal
        .iter()
        .zip(p0)
        .try_fold(0i128, |acc, (&a, &b)| acc.checked_add(a.checked_mul(b as i128)?))
        .ok_or(Error::Overflow("hyperplane offset"))?;
    IntHalfSpace::from_wide(&normal, offset).map(Some)
}

/// Rank of an integer matrix given by rows.
pub(crate) fn int_rank<R: AsRef<[i64]>>(rows: &[R]) -> usize {
    let cols = rows.first().map_or(0, |r| r.as_ref().len());
    let mut m: Vec<Vec<i128>> = rows
        .iter()
        .map(|r| r.as_ref().iter().map(|&x| x as i128).collect())
        .collect();
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..m.len()).find(|&i| m[i][c] != 0) else {
            continue;
        };
        m.swap(rank, p);
        for i in rank + 1..m.len() {
            if m[i][c] == 0 {
                continue;
            }
            let (a, b) = (m[rank][c], m[i][c]);
            let mut ok = true;
            let mut row = vec![0i128; cols];
            for j in 0..cols {
                match m[i][j]
                    .checked_mul(a)
                    .and_then(|x| x.checked_sub(m[rank][j].checked_mul(b)?))
                {
                    Some(v) => row[j] = v,
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                return rational_rank(rows);
            }
            let g = row.iter().fold(0i128, |g, &x| gcd_i128(g, x));
            if g > 1 {
                row.iter_mut().for_each(|x| *x /= g);
            }
            m[i] = row;
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

fn rational_rank<R: AsRef<[i64]>>(rows: &[R]) -> usize {
    let rows: Vec<Vec<BigRat>> = rows
        .iter()
        .map(|r| r.as_ref().iter().map(|&x| crate::exact::rat(x)).collect())
        .collect();
    crate::exact::rank(&rows)
}

pub(crate) fn affine_rank_int(points: &[&[i64]]) -> usize {
    let Some(p0) = points.first() else { return 0 };
    let edges: Vec<Vec<i64>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(p0.iter()).map(|(a, b)| a - b).collect())
        .collect();
    int_rank(&edges)
}

/// Barycentric coordinates of a full-dimensional simplex `v_0..v_d` in `Z^d`:
/// `lambda_i(x) * det = rows[i] . (x, 1)`.
#[derive(Clone, Debug)]
pub(crate) struct Barycentric {
    pub det: i128,
    pub rows: Vec<Vec<i128>>,
}

impl Barycentric {
    /// Returns `None` for a degenerate simplex.
    pub fn new(verts: &[&[i64]]) -> Result<Option<Self>> {
        let n = verts.len();
        let d = n - 1;
        debug_assert!(verts.iter().all(|v| v.len() == d));
        // M has columns (v_j, 1).
        let entry = |r: usize, c: usize| -> i128 {
            if r < d {
                verts[c][r] as i128
            } else {
                1
            }
        };
        let mut full: Vec<i128> = (0..n * n).map(|k| entry(k / n, k % n)).collect();
        let det = bareiss_i128(&mut full, n).ok_or(Error::Overflow("simplex determinant"))?;
        if det == 0 {
            return Ok(None);
        }
        let m = n - 1;
        let mut buf = vec![0i128; m * m];
        let mut rows = vec![vec![0i128; n]; n];
        // adj[i][k] = (-1)^(i+k) * minor(row k, col i)
        for (i, row) in rows.iter_mut().enumerate() {
            for (k, slot) in row.iter_mut().enumerate() {
                let mut idx = 0;
                for r in (0..n).filter(|&r| r != k) {
                    for c in (0..n).filter(|&c| c != i) {
                        buf[idx] = entry(r, c);
                        idx += 1;
                    }
                }
                let minor = bareiss_i128(&mut buf, m).ok_or(Error::Overflow("simplex adjugate"))?;
                *slot = if (i + k) % 2 == 0 { minor } else { -minor };
            }
        }
        Ok(Some(Barycentric { det, rows }))
    }

    /// `lambda_i(x) * det`.
    pub fn scaled(&self, i: usize, x: &[i64]) -> i128 {
        let row = &self.rows[i];
        let d = row.len() - 1;
        let mut acc = row[d];
        for j in 0..d {
            acc += row[j] * x[j] as i128;
        }
        acc
    }

    /// The facet opposite vertex `i` as a half-space containing the simplex.
    pub fn facet(&self, i: usize) -> Result<IntHalfSpace> {
        let s = self.det.signum();
        let row = &self.rows[i];
        let d = row.len() - 1;
        let normal: Vec<i128> = row[..d].iter().map(|&x| x * s).collect();
        IntHalfSpace::from_wide(&normal, row[d] * s)
    }
}

/// A facet of a point configuration: its inequality and the indices of the
/// configuration points lying on it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct HullFacet {
    pub ineq: IntHalfSpace,
    pub members: Vec<usize>,
}

/// Visits every `k`-subset of `0..n` in lexicographic order.
pub(crate) fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        if idx[i] == i + n - k {
            return;
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Facets of the convex hull of a full-dimensional configuration in `Z^d`.
pub(crate) fn hull_facets(points: &[&[i64]]) -> Result<Vec<HullFacet>> {
    let n = points.len();
    let d = points.first().map_or(0, |p| p.len());
    if n > 64 {
        return Err(Error::Argument(format!(
            "facet enumeration supports at most 64 points, got {n}"
        )));
    }
    if n < d + 1 {
        return Err(Error::Degenerate("too few points for a full-dimensional hull".into()));
    }
    let mut found: Vec<(u64, HullFacet)> = Vec::new();
    let mut err = None;
    for_each_subset(n, d, |sub| {
        if err.is_some() {
            return;
        }
        let mask = sub.iter().fold(0u64, |m, &i| m | 1 << i);
        if found.iter().any(|(fm, _)| mask & fm == mask) {
            return;
        }
        let pts: Vec<&[i64]> = sub.iter().map(|&i| points[i]).collect();
        let h = match hyperplane_through(&pts) {
            Ok(Some(h)) => h,
            Ok(None) => return,
            Err(e) => {
                err = Some(e);
                return;
            }
        };
        let vals: Vec<i128> = points.iter().map(|p| h.eval(p)).collect();
        let pos = vals.iter().any(|&v| v > 0);
        let neg = vals.iter().any(|&v| v < 0);
        if pos && neg || !pos && !neg {
            return;
        }
        let ineq = if neg { h.negated() } else { h };
        let members: Vec<usize> = (0..n).filter(|&i| vals[i] == 0).collect();
        let fmask = members.iter().fold(0u64, |m, &i| m | 1 << i);
        found.push((fmask, HullFacet { ineq, members }));
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(found.into_iter().map(|(_, f)| f).collect())
}

/// Coordinates selected so that projecting onto them is injective on the
/// affine hull of a configuration. Face structure and convex membership are
/// preserved by the projection; lattice volumes are not.
#[derive(Clone, Debug)]
pub(crate) struct Frame {
    pub dim: usize,
    pub coords: Vec<usize>,
    base: Vec<i64>,
    basis: Vec<Vec<i64>>,
}

impl Frame {
    pub fn of(points: &[&[i64]]) -> Self {
        let base = points[0].to_vec();
        let ambient = base.len();
        let edges: Vec<Vec<i64>> = points[1..]
            .iter()
            .map(|p| p.iter().zip(&base).map(|(a, b)| a - b).collect())
            .collect();
        let mut basis: Vec<Vec<i64>> = Vec::new();
        for e in &edges {
            let mut trial = basis.clone();
            trial.push(e.clone());
            if int_rank(&trial) == trial.len() {
                basis = trial;
            }
        }
        let dim = basis.len();
        let mut coords: Vec<usize> = Vec::new();
        for c in 0..ambient {
            if coords.len() == dim {
                break;
            }
            let mut trial = coords.clone();
            trial.push(c);
            let sub: Vec<Vec<i64>> = basis
                .iter()
                .map(|b| trial.iter().map(|&j| b[j]).collect())
                .collect();
            if int_rank(&sub) == trial.len() {
                coords = trial;
            }
        }
        Frame {
            dim,
            coords,
            base,
            basis,
        }
    }

    pub fn is_full(&self) -> bool {
        self.dim == self.base.len()
    }

    pub fn project(&self, p: &[i64]) -> Vec<i64> {
        self.coords.iter().map(|&j| p[j]).collect()
    }

    pub fn contains_affinely(&self, p: &[i64]) -> bool {
        if self.is_full() {
            return true;
        }
        let mut rows = self.basis.clone();
        rows.push(p.iter().zip(&self.base).map(|(a, b)| a - b).collect());
        int_rank(&rows) == self.dim
    }

    /// Rational version of [`Frame::contains_affinely`].
    pub fn contains_affinely_rational(&self, p: &[BigRat]) -> bool {
        if self.is_full() {
            return true;
        }
        let mut rows: Vec<Vec<BigRat>> = self
            .basis
            .iter()
            .map(|b| b.iter().map(|&x| crate::exact::rat(x)).collect())
            .collect();
        rows.push(
            p.iter()
                .zip(&self.base)
                .map(|(a, &b)| a - crate::exact::rat(b))
                .collect(),
        );
        crate::exact::rank(&rows) == self.dim
    }
}

/// Indices of the points that are vertices of the configuration's hull.
/// Duplicate points are reported once (first occurrence).
pub(crate) fn vertex_indices(points: &[&[i64]]) -> Result<Vec<usize>> {
    let mut distinct: Vec<usize> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if !distinct.iter().any(|&j| points[j] == *p) {
            distinct.push(i);
        }
    }
    let pts: Vec<&[i64]> = distinct.iter().map(|&i| points[i]).collect();
    let frame = Frame::of(&pts);
    if pts.len() == frame.dim + 1 {
        return Ok(distinct);
    }
    let proj: Vec<Vec<i64>> = pts.iter().map(|p| frame.project(p)).collect();
    let proj_refs: Vec<&[i64]> = proj.iter().map(Vec::as_slice).collect();
    let facets = hull_facets(&proj_refs)?;
    let all: u64 = if pts.len() == 64 { !0 } else { (1u64 << pts.len()) - 1 };
    let mut out = Vec::new();
    for (local, &global) in distinct.iter().enumerate() {
        let mut meet = all;
        for f in &facets {
            if f.members.contains(&local) {
                meet &= f.members.iter().fold(0u64, |m, &i| m | 1 << i);
            }
        }
        if meet == 1 << local {
            out.push(global);
        }
    }
    Ok(out)
}

/// Facets of a polytope given by (a superset of) its vertices, computed in the
/// affine frame of the configuration. Member indices refer to `points`.
pub(crate) fn relative_facets(points: &[&[i64]], frame: &Frame) -> Result<Vec<HullFacet>> {
    let proj: Vec<Vec<i64>> = points.iter().map(|p| frame.project(p)).collect();
    let refs: Vec<&[i64]> = proj.iter().map(Vec::as_slice).collect();
    if frame.dim == 0 {
        return Ok(Vec::new());
    }
    if points.len() == frame.dim + 1 {
        let bary = Barycentric::new(&refs)?
            .ok_or_else(|| Error::Degenerate("simplex in its own frame".into()))?;
        return (0..points.len())
            .map(|i| {
                Ok(HullFacet {
                    ineq: bary.facet(i)?,
                    members: (0..points.len()).filter(|&j| j != i).collect(),
                })
            })
            .collect();
    }
    hull_facets(&refs)
}

/// Splits a polytope into simplices by recursively coning from its
/// lexicographically smallest vertex over the facets that avoid it. Returns
/// index sets into `points`.
pub(crate) fn triangulate_points(points: &[&[i64]]) -> Result<Vec<Vec<usize>>> {
    let verts = vertex_indices(points)?;
    let vpts: Vec<&[i64]> = verts.iter().map(|&i| points[i]).collect();
    let frame = Frame::of(&vpts);
    if vpts.len() == frame.dim + 1 {
        return Ok(vec![verts]);
    }
    let apex_local = (0..vpts.len())
        .min_by(|&a, &b| vpts[a].cmp(vpts[b]))
        .expect("nonempty");
    let facets = relative_facets(&vpts, &frame)?;
    let mut out = Vec::new();
    for f in facets.iter().filter(|f| !f.members.contains(&apex_local)) {
        let sub: Vec<&[i64]> = f.members.iter().map(|&i| vpts[i]).collect();
        for simplex in triangulate_points(&sub)? {
            let mut cell = vec![verts[apex_local]];
            cell.extend(simplex.iter().map(|&i| verts[f.members[i]]));
            out.push(cell);
        }
    }
    Ok(out)
}

/// Normalized volume of a simplex relative to the lattice in its affine hull:
/// the gcd of the maximal minors of its edge matrix.
pub(crate) fn simplex_relative_nvol(points: &[&[i64]]) -> Result<BigInt> {
    let k = points.len() - 1;
    let d = points[0].len();
    let edges: Vec<Vec<i64>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(points[0]).map(|(a, b)| a - b).collect())
        .collect();
    if k == 0 {
        return Ok(BigInt::from(1));
    }
    if k == d {
        return Ok(det_i64(&edges)?.abs());
    }
    let mut g = BigInt::from(0);
    let mut err = None;
    for_each_subset(d, k, |cols| {
        if err.is_some() {
            return;
        }
        let sub: Vec<Vec<i64>> = edges
            .iter()
            .map(|e| cols.iter().map(|&j| e[j]).collect())
            .collect();
        match det_i64(&sub) {
            Ok(m) => g = num_integer::Integer::gcd(&g, &m),
            Err(e) => err = Some(e),
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(g)
}

/// Normalized volume of the polytope spanned by `points`, relative to its
/// affine hull. Zero volume is reported for an empty set only.
pub(crate) fn polytope_relative_nvol(points: &[&[i64]]) -> Result<BigInt> {
    let mut total = BigInt::from(0);
    for s in triangulate_points(points)? {
        let pts: Vec<&[i64]> = s.iter().map(|&i| points[i]).collect();
        total += simplex_relative_nvol(&pts)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_are_enumerated_once() {
        let mut seen = Vec::new();
        for_each_subset(5, 3, |s| seen.push(s.to_vec()));
        assert_eq!(seen.len(), 10);
        assert_eq!(seen[0], vec![0, 1, 2]);
        assert_eq!(seen[9], vec![2, 3, 4]);
        let mut count = 0;
        for_each_subset(4, 0, |_| count += 1);
        assert_eq!(count, 1);
        count = 0;
        for_each_subset(3, 4, |_| count += 1);
        assert_eq!(count, 0);
    }

    #[test]
    fn square_has_four_facets_and_vertices() {
        let pts: Vec<Vec<i64>> = vec![vec![0, 0], vec![2, 0], vec![0, 2], vec![2, 2], vec![1, 1], vec![1, 0]];
        let refs: Vec<&[i64]> = pts.iter().map(Vec::as_slice).collect();
        let f = hull_facets(&refs).unwrap();
        assert_eq!(f.len(), 4);
        assert_eq!(vertex_indices(&refs).unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(polytope_relative_nvol(&refs).unwrap(), BigInt::from(8));
    }

    #[test]
    fn barycentric_facets_contain_simplex() {
        let pts: Vec<Vec<i64>> = vec![vec![1, 0], vec![0, 1], vec![-3, -2]];
        let refs: Vec<&[i64]> = pts.iter().map(Vec::as_slice).collect();
        let b = Barycentric::new(&refs).unwrap().unwrap();
        assert_eq!(b.det.abs(), 6);
        for i in 0..3 {
            let f = b.facet(i).unwrap();
            assert!(f.eval(&pts[i]) > 0);
            for j in (0..3).filter(|&j| j != i) {
                assert_eq!(f.eval(&pts[j]), 0);
            }
            // the origin is interior
            assert!(f.eval(&[0, 0]) > 0);
        }
    }

    #[test]
    fn relative_volume_of_segment_and_triangle_in_space() {
        let seg: Vec<Vec<i64>> = vec![vec![0, 0, 0], vec![2, 4, 6]];
        let refs: Vec<&[i64]> = seg.iter().map(Vec::as_slice).collect();
        assert_eq!(simplex_relative_nvol(&refs).unwrap(), BigInt::from(2));
        let tri: Vec<Vec<i64>> = vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]];
        let refs: Vec<&[i64]> = tri.iter().map(Vec::as_slice).collect();
        assert_eq!(simplex_relative_nvol(&refs).unwrap(), BigInt::from(1));
    }

    #[test]
    fn frame_of_tilted_plane() {
        let pts: Vec<Vec<i64>> = vec![vec![-1, 1, 0], vec![0, 0, 0], vec![1, -1, 5]];
        let refs: Vec<&[i64]> = pts.iter().map(Vec::as_slice).collect();
        let f = Frame::of(&refs);
        assert_eq!(f.dim, 2);
        assert!(f.contains_affinely(&[2, -2, 10]));
        assert!(!f.contains_affinely(&[1, 0, 0]));
    }
}
