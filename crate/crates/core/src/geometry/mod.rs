//! Lattice points, simplices and small lattice polytopes.

mod cell;
pub(crate) mod hull;
mod point;
mod simplex;

pub use cell::{CellPolytope, Membership, DEFAULT_SCAN_LIMIT};
pub use hull::IntHalfSpace;
pub use point::{HalfSpace, LatticePoint, RationalPoint};
pub use simplex::{LatticeSimplex, PolarDual};

use crate::error::{Error, Result};

/// `M p + t` for an integer matrix given by rows.
pub fn apply_affine(matrix: &[Vec<i64>], translation: &[i64], p: &[i64]) -> Result<LatticePoint> {
    if matrix.iter().any(|r| r.len() != p.len()) || translation.len() != matrix.len() {
        return Err(Error::dim("affine map and point dimensions differ"));
    }
    matrix
        .iter()
        .zip(translation)
        .map(|(row, &t)| {
            let v = hull::dot(row, p) + t as i128;
            i64::try_from(v).map_err(|_| Error::Overflow("affine map image"))
        })
        .collect::<Result<Vec<_>>>()
        .map(LatticePoint::new)
}
