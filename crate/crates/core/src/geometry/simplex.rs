use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{BigInt, BigRat};
use crate::geometry::hull::{self, Barycentric};
use crate::geometry::{CellPolytope, HalfSpace, LatticePoint, Membership, RationalPoint};

/// A lattice simplex given by affinely independent vertices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeSimplex {
    vertices: Vec<LatticePoint>,
}

/// Result of [`LatticeSimplex::polar_dual`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PolarDual {
    /// Every dual vertex is integral: the simplex is reflexive.
    Lattice(LatticeSimplex),
    Rational(Vec<RationalPoint>),
}

impl PolarDual {
    pub fn is_lattice(&self) -> bool {
        matches!(self, PolarDual::Lattice(_))
    }

    pub fn vertices(&self) -> Vec<RationalPoint> {
        match self {
            PolarDual::Lattice(s) => s.vertices.iter().map(LatticePoint::to_rational).collect(),
            PolarDual::Rational(v) => v.clone(),
        }
    }
}

impl LatticeSimplex {
    pub fn new(vertices: Vec<LatticePoint>) -> Result<Self> {
        let Some(first) = vertices.first() else {
            return Err(Error::Argument("simplex without vertices".into()));
        };
        let d = first.dim();
        if vertices.iter().any(|v| v.dim() != d) {
            return Err(Error::dim("simplex vertices of different dimensions"));
        }
        let refs: Vec<&[i64]> = vertices.iter().map(|v| v.coords()).collect();
        if hull::affine_rank_int(&refs) + 1 != vertices.len() {
            return Err(Error::Degenerate("simplex vertices are affinely dependent".into()));
        }
        Ok(LatticeSimplex { vertices })
    }

    pub fn vertices(&self) -> &[LatticePoint] {
        &self.vertices
    }

    /// Dimension of the simplex itself.
    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn ambient_dim(&self) -> usize {
        self.vertices[0].dim()
    }

    pub fn is_full_dimensional(&self) -> bool {
        self.dim() == self.ambient_dim()
    }

    fn refs(&self) -> Vec<&[i64]> {
        self.vertices.iter().map(|v| v.coords()).collect()
    }

    /// Normalized volume; relative to the lattice in the affine hull for a
    /// lower-dimensional simplex.
    pub fn nvol(&self) -> Result<BigInt> {
        let v = hull::simplex_relative_nvol(&self.refs())?;
        if v.is_zero() {
            return Err(Error::Degenerate("simplex has zero volume".into()));
        }
        Ok(v)
    }

    pub fn is_unimodular(&self) -> Result<bool> {
        Ok(self.nvol()?.is_one())
    }

    fn barycentric(&self) -> Result<Barycentric> {
        if !self.is_full_dimensional() {
            return Err(Error::Degenerate(
                "facet inequalities need a full-dimensional simplex".into(),
            ));
        }
        Barycentric::new(&self.refs())?
            .ok_or_else(|| Error::Degenerate("simplex has zero volume".into()))
    }

    /// The `d + 1` facet inequalities, the `i`-th one opposite vertex `i`.
    /// When the origin is interior they are scaled to offset 1, otherwise
    /// they have primitive integer coefficients.
    pub fn halfspaces(&self) -> Result<Vec<HalfSpace>> {
        let b = self.barycentric()?;
        let int: Vec<_> = (0..self.vertices.len())
            .map(|i| b.facet(i))
            .collect::<Result<_>>()?;
        let origin_inside = int.iter().all(|h| h.offset > 0);
        Ok(int
            .iter()
            .map(|h| {
                let mut hs = h.to_halfspace();
                if origin_inside {
                    let off = hs.offset.clone();
                    hs.normal.iter_mut().for_each(|x| *x /= &off);
                    hs.offset = BigRat::one();
                }
                hs
            })
            .collect())
    }

    /// Polar dual `{y : <x, y> + 1 >= 0 for all x}`; requires the origin in the
    /// interior.
    pub fn polar_dual(&self) -> Result<PolarDual> {
        let hs = self.halfspaces()?;
        if hs.iter().any(|h| !h.offset.is_one()) {
            return Err(Error::Domain(
                "the origin is not in the interior of the simplex".into(),
            ));
        }
        let verts: Vec<RationalPoint> = hs.into_iter().map(|h| RationalPoint(h.normal)).collect();
        match verts.iter().map(RationalPoint::to_lattice).collect::<Option<Vec<_>>>() {
            Some(v) => Ok(PolarDual::Lattice(LatticeSimplex::new(v)?)),
            None => Ok(PolarDual::Rational(verts)),
        }
    }

    pub fn contains(&self, p: &RationalPoint) -> Result<Membership> {
        if p.dim() != self.ambient_dim() {
            return Err(Error::dim("point and simplex dimensions differ"));
        }
        if !self.is_full_dimensional() {
            return self.to_cell().contains(p);
        }
        let hs = self.halfspaces()?;
        let mut boundary = false;
        for h in &hs {
            let v = h.eval(&p.0);
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

    pub fn to_cell(&self) -> CellPolytope {
        CellPolytope::from_vertices_unchecked(self.vertices.clone(), self.dim())
    }

    /// Image under `x -> M x + t` for an integer matrix `M` (row-major).
    pub fn map(&self, matrix: &[Vec<i64>], translation: &[i64]) -> Result<Self> {
        let verts = self
            .vertices
            .iter()
            .map(|v| super::apply_affine(matrix, translation, v))
            .collect::<Result<Vec<_>>>()?;
        Self::new(verts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ratio;

    fn simplex(rows: &[&[i64]]) -> LatticeSimplex {
        LatticeSimplex::new(rows.iter().map(|r| LatticePoint::new(r.to_vec())).collect()).unwrap()
    }

    #[test]
    fn unit_simplex_volume() {
        assert_eq!(simplex(&[&[0, 0], &[1, 0], &[0, 1]]).nvol().unwrap(), BigInt::from(1));
    }

    #[test]
    fn segment_halfspaces_and_self_duality() {
        let s = simplex(&[&[1], &[-1]]);
        let hs = s.halfspaces().unwrap();
        assert_eq!(hs[0], HalfSpace::from_int(&[1], 1).unwrap());
        assert_eq!(hs[1], HalfSpace::from_int(&[-1], 1).unwrap());
        match s.polar_dual().unwrap() {
            PolarDual::Lattice(d) => assert_eq!(d, s),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rational_polar_dual_is_reported() {
        let s = simplex(&[&[2], &[-1]]);
        match s.polar_dual().unwrap() {
            PolarDual::Rational(v) => {
                assert_eq!(v[0].0[0], ratio(1, 1));
                assert_eq!(v[1].0[0], ratio(-1, 2));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn polar_dual_rejects_boundary_origin() {
        let s = simplex(&[&[0, 0], &[1, 0], &[0, 1]]);
        assert!(matches!(s.polar_dual(), Err(Error::Domain(_))));
    }

    #[test]
    fn membership_classification() {
        let s = simplex(&[&[0, 0], &[1, 0], &[0, 1]]);
        let p = RationalPoint(vec![ratio(1, 3), ratio(1, 3)]);
        assert_eq!(s.contains(&p).unwrap(), Membership::Interior);
        let p = RationalPoint(vec![ratio(1, 1), ratio(0, 1)]);
        assert_eq!(s.contains(&p).unwrap(), Membership::Boundary);
        let p = RationalPoint(vec![ratio(1, 1), ratio(1, 1)]);
        assert_eq!(s.contains(&p).unwrap(), Membership::Outside);
    }

    #[test]
    fn degenerate_simplex_rejected() {
        let r = LatticeSimplex::new(vec![
            LatticePoint::new(vec![-1, -1]),
            LatticePoint::new(vec![0, 0]),
            LatticePoint::new(vec![1, 1]),
        ]);
        assert!(matches!(r, Err(Error::Degenerate(_))));
    }
}
