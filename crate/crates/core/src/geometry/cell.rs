use std::collections::BTreeSet;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::{BigInt, BigRat};
use crate::geometry::hull::{self, Frame, HullFacet, IntHalfSpace};
use crate::geometry::{LatticePoint, RationalPoint};

/// Default cap on the number of candidate points a bounding-box scan may
/// visit.
pub const DEFAULT_SCAN_LIMIT: u64 = 10_000_000;

/// Position of a point relative to a polytope. `Interior` refers to the
/// relative interior.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Membership {
    Interior,
    Boundary,
    Outside,
}

/// A lattice polytope stored as its vertex set.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CellPolytope {
    vertices: Vec<LatticePoint>,
    dim: usize,
}

impl CellPolytope {
    /// Builds the polytope spanned by `points`, discarding points that are not
    /// vertices. Vertices are kept in lexicographic order.
    pub fn from_points(points: &[LatticePoint]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Argument("polytope without points".into()));
        }
        let d = points[0].dim();
        if points.iter().any(|p| p.dim() != d) {
            return Err(Error::dim("points of different dimensions"));
        }
        let refs: Vec<&[i64]> = points.iter().map(|p| p.coords()).collect();
        let mut vertices: Vec<LatticePoint> = hull::vertex_indices(&refs)?
            .into_iter()
            .map(|i| points[i].clone())
            .collect();
        vertices.sort();
        let vrefs: Vec<&[i64]> = vertices.iter().map(|p| p.coords()).collect();
        let dim = hull::affine_rank_int(&vrefs);
        Ok(CellPolytope { vertices, dim })
    }

    pub(crate) fn from_vertices_unchecked(vertices: Vec<LatticePoint>, dim: usize) -> Self {
        CellPolytope { vertices, dim }
    }

    pub fn vertices(&self) -> &[LatticePoint] {
        &self.vertices
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ambient_dim(&self) -> usize {
        self.vertices[0].dim()
    }

    pub fn is_simplex(&self) -> bool {
        self.vertices.len() == self.dim + 1
    }

    fn refs(&self) -> Vec<&[i64]> {
        self.vertices.iter().map(|v| v.coords()).collect()
    }

    pub(crate) fn frame(&self) -> Frame {
        Frame::of(&self.refs())
    }

    /// Facets in the coordinates of the cell's frame.
    pub(crate) fn frame_facets(&self, frame: &Frame) -> Result<Vec<HullFacet>> {
        hull::relative_facets(&self.refs(), frame)
    }

    /// Facet inequalities in ambient coordinates; needs a full-dimensional
    /// cell.
    pub fn halfspaces(&self) -> Result<Vec<crate::geometry::HalfSpace>> {
        if self.dim != self.ambient_dim() {
            return Err(Error::Degenerate(
                "facet inequalities need a full-dimensional cell".into(),
            ));
        }
        let frame = self.frame();
        Ok(self
            .frame_facets(&frame)?
            .iter()
            .map(|f| f.ineq.to_halfspace())
            .collect())
    }

    /// Primitive integer facet inequalities of a full-dimensional cell.
    pub(crate) fn int_facets(&self) -> Result<Vec<IntHalfSpace>> {
        if self.dim != self.ambient_dim() {
            return Err(Error::Degenerate(
                "facet inequalities need a full-dimensional cell".into(),
            ));
        }
        let frame = self.frame();
        Ok(self.frame_facets(&frame)?.into_iter().map(|f| f.ineq).collect())
    }

    /// Normalized volume relative to the lattice in the affine hull.
    pub fn nvol(&self) -> Result<BigInt> {
        hull::polytope_relative_nvol(&self.refs())
    }

    /// Every nonempty proper face, ordered by dimension and then by vertex
    /// list.
    pub fn faces(&self) -> Result<Vec<CellPolytope>> {
        let mut seen: BTreeSet<(usize, Vec<LatticePoint>)> = BTreeSet::new();
        let mut stack = vec![self.clone()];
        while let Some(c) = stack.pop() {
            if c.dim == 0 {
                continue;
            }
            let frame = c.frame();
            for f in c.frame_facets(&frame)? {
                let verts: Vec<LatticePoint> =
                    f.members.iter().map(|&i| c.vertices[i].clone()).collect();
                let face = CellPolytope::from_points(&verts)?;
                if seen.insert((face.dim, face.vertices.clone())) {
                    stack.push(face);
                }
            }
        }
        Ok(seen
            .into_iter()
            .map(|(dim, vertices)| CellPolytope { vertices, dim })
            .collect())
    }

    /// Exact classification of a rational point.
    pub fn contains(&self, p: &RationalPoint) -> Result<Membership> {
        if p.dim() != self.ambient_dim() {
            return Err(Error::dim("point and polytope dimensions differ"));
        }
        let frame = self.frame();
        if !frame.contains_affinely_rational(&p.0) {
            return Ok(Membership::Outside);
        }
        if self.dim == 0 {
            return Ok(if p.to_lattice().as_ref() == Some(&self.vertices[0]) {
                Membership::Interior
            } else {
                Membership::Outside
            });
        }
        let proj: Vec<BigRat> = frame.coords.iter().map(|&j| p.0[j].clone()).collect();
        let mut boundary = false;
        for f in self.frame_facets(&frame)? {
            let v = f
                .ineq
                .normal
                .iter()
                .zip(&proj)
                .fold(BigRat::from(BigInt::from(f.ineq.offset)), |acc, (&a, x)| {
                    acc + x * BigInt::from(a)
                });
            if v.is_negative() {
                return Ok(Membership::Outside);
            }
            boundary |= v.is_zero();
        }
        Ok(if boundary {
            Membership::Boundary
        } else {
            Membership::Interior
        })
    }

    /// Lattice points of the cell by scanning its bounding box, sorted
    /// lexicographically.
    pub fn lattice_points_bruteforce(&self) -> Result<Vec<LatticePoint>> {
        self.lattice_points_bruteforce_with_limit(DEFAULT_SCAN_LIMIT)
    }

    pub fn lattice_points_bruteforce_with_limit(&self, limit: u64) -> Result<Vec<LatticePoint>> {
        let d = self.ambient_dim();
        let lo: Vec<i64> = (0..d)
            .map(|j| self.vertices.iter().map(|v| v[j]).min().unwrap())
            .collect();
        let hi: Vec<i64> = (0..d)
            .map(|j| self.vertices.iter().map(|v| v[j]).max().unwrap())
            .collect();
        let mut count: u128 = 1;
        for j in 0..d {
            count = count.saturating_mul((hi[j] as i128 - lo[j] as i128 + 1) as u128);
        }
        if count > limit as u128 {
            return Err(Error::Feasibility {
                what: "bounding-box lattice point scan".into(),
                needed: format!("{count} candidates"),
                limit: format!("{limit} candidates"),
            });
        }
        let frame = self.frame();
        let facets = if self.dim > 0 {
            self.frame_facets(&frame)?
        } else {
            Vec::new()
        };
        let mut out = Vec::new();
        let mut cur = lo.clone();
        loop {
            let inside = frame.contains_affinely(&cur) && {
                let proj = frame.project(&cur);
                if self.dim == 0 {
                    cur == self.vertices[0].coords()
                } else {
                    facets.iter().all(|f| f.ineq.eval(&proj) >= 0)
                }
            };
            if inside {
                out.push(LatticePoint::new(cur.clone()));
            }
            // odometer increment, last coordinate fastest
            let mut j = d;
            loop {
                if j == 0 {
                    return Ok(out);
                }
                j -= 1;
                if cur[j] < hi[j] {
                    cur[j] += 1;
                    cur[j + 1..d].copy_from_slice(&lo[j + 1..d]);
                    break;
                }
            }
        }
    }
}
