//! Numerical spectral toolkit for the three-dimensional magnetic Robin Laplacian.
//!
//! The crate is organised by role:
//!
//! * [`eigsolve`]: generalized symmetric eigensolvers for assembled forms.
//! * [`model1d`]: Montgomery, de Gennes, harmonic and weighted Robin transverse models.
//! * [`geometry`]: parametric surfaces, fundamental forms, effective boundary energy.
//! * [`effective2d`]: boundary charts, the effective surface operator, trial states.
//! * [`ball`]: Fourier-mode solution of the unit ball with an axial field.
//! * [`asymfit`]: asymptotic expansion fitting and Richardson extrapolation.

pub mod asymfit;
pub mod ball;
pub mod effective2d;
pub mod eigsolve;
pub mod error;
pub mod fem1d;
pub mod fixtures;
pub mod geometry;
pub mod model1d;
pub mod optimize;
pub mod quadrature;

pub use error::{Error, Result};
