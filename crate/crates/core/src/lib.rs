//! Flexible simplicial surfaces, their curvature invariants, and the heat
//! coefficients of the domains they bound.

mod error;
mod linalg;

pub mod distance;
pub mod embed;
pub mod families;
pub mod fedosov;
pub mod flex;
pub mod surface;
pub mod tent;

pub use distance::hausdorff_distance;
pub use embed::is_embedded;
pub use error::{Error, Result};
pub use fedosov::{BoundaryCondition, FedosovCoefficients, Spectrum};
pub use flex::{advance_flex, check_congruence, FlexContext, FlexFamily, FlexState};
pub use surface::{orient_coherently, DihedralData, Ridge, SimplicialSurface};
