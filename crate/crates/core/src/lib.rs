//! Numerical laboratory for a planar Chern-Simons-Schrodinger condensate held in a
//! tight transverse wave-guide, together with the effective one-dimensional
//! cubic-quintic nonlinear Schrodinger equation that governs the loose direction.
//!
//! The crate provides the spectral substrate (periodic grids, unitary transforms,
//! quadrature), the gauge constructions (Coulomb-gauge field from flux attachment,
//! the column-integrated gauge adapted to the wave-guide, the phase connecting them),
//! the dimensional-reduction toolkit (transverse profile, ansatz builder, projector,
//! consistency residuals), time evolution for both systems, normalized gradient-flow
//! ground states, and config-driven reproducible experiment drivers.

pub mod config;
pub mod dynamics1d;
pub mod dynamics2d;
pub mod error;
pub mod experiments;
pub mod field;
pub mod gauge;
pub mod grid;
pub mod groundstate;
pub mod observables;
pub mod reduction;
pub mod snapshot;
pub mod spectral;

pub use error::{Error, Result};
pub use field::{Field1D, Field2D, RealField2D, VectorField2D};
pub use grid::{Grid1D, Grid2D};
