//! Cut-and-project point sets in `R^d × R^m` with box-union windows and
//! null or point-free decorations, together with closed-form predictions
//! for their density, autocorrelation, Bragg spectrum and Fourier–Bohr
//! coefficients, and the empirical estimators those predictions are
//! checked against.

pub mod averaging;
pub mod cps;
pub mod diffraction;
pub mod error;
pub mod geometry;
pub mod modelset;
pub mod oracle;
pub mod output;
pub mod provenance;
pub mod scenario;
pub mod torus;
pub mod window;

pub use cps::{dual_cps, enumerate_lattice, lattice_density, make_cps, Cps, DualCps, LatticePoint};
pub use error::{Error, Result};
pub use geometry::Aabb;
pub use modelset::{cut_project, Patch};
pub use window::Window;

/// The golden ratio.
pub const TAU: f64 = 1.618_033_988_749_895;

pub use num_complex::Complex64;
