//! Bound states of the two-dimensional quantum dipole `-lap(psi) + cos(t)/r psi = e psi`
//! by Rayleigh-Ritz over nonorthogonal Slater-type bases.
//!
//! The pipeline is: [`basis`] enumerates the functions, [`assembly`] builds the
//! exact rational overlap, kinetic and potential matrices at unit decay constant
//! together with an exact LDL^T factorization of the overlap, [`eigen`] reduces
//! the generalized problem at a given `alpha` and solves it in arbitrary precision,
//! [`optimize`] tunes `alpha` per state, and [`observables`] turns coefficient
//! vectors into densities and the quartic coupling constant. [`oracle_fd`] is an
//! independent finite-difference solver used for cross-checks.

pub mod assembly;
pub mod basis;
pub mod cache;
pub mod eigen;
pub mod error;
pub mod integrals;
pub mod observables;
pub mod optimize;
pub mod oracle_fd;
pub mod quadrature;

pub use assembly::{assemble, ExactMatrixSet};
pub use basis::{basis_size, enumerate_basis, BasisFunction, Parity};
pub use eigen::{spectrum, Precision, ReducedPencil, Spectrum};
pub use error::{Error, Result};
pub use observables::{coupling_constant, normalize, DensityGrid, PhysicalUnits, WaveFunction};
pub use oracle_fd::{fd_spectrum, FdConfig};
pub use optimize::{k_sweep, optimize_alpha, OptOptions, OptResult};
pub use rug::{Float, Rational};
