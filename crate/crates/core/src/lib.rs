//! Regular unimodular triangulations of Sylvester-weighted simplices and the
//! crepant toric resolutions they define.

pub mod artifact;
pub mod error;
pub mod exact;
pub mod geometry;
pub mod pipeline;
pub mod regularity;
pub mod subdivision;
pub mod sylvester;
pub mod toric;

pub use error::{Error, Result};
pub use exact::{BigInt, BigRat, Matrix};
pub use geometry::{
    CellPolytope, HalfSpace, LatticePoint, LatticeSimplex, Membership, PolarDual, RationalPoint,
};
