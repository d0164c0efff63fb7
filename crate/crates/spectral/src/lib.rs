//! Laplace eigenvalues of planar polygonal domains with piecewise-linear
//! finite elements: meshing, assembly, a shift-invert eigensolver, and the
//! spectral experiments built on them.

pub mod analysis;
pub mod eigen;
mod error;
pub mod fem;
pub mod mesh;

pub use analysis::{
    corner_coefficient, counting_function, flex_spectrum_sweep, flex_spectrum_sweep_with, polygon_loop, richardson, weyl_table, solve_eigenpairs, solve_eigs,
    CornerFit, CornerProtocol, SpectrumSweep,
};
pub use eigen::SolverOptions;
pub use error::{Error, Result};
pub use mesh::{triangulate, Mesh2D};
