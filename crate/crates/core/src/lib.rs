//! Numerical laboratory for solitons of derivative nonlinear Schrödinger
//! equations: exact profiles, conserved quantities, linearized spectra,
//! approximate unstable profiles, gauge-transformed evolution and
//! orbital-instability experiments.
//!
//! The closed-form layer ([`params`], [`helmholtz::KernelSpec`]) is generic
//! over the scalar type; everything that touches FFTs or dense linear
//! algebra works in `f64`.

pub mod approx;
pub mod conserved;
pub mod error;
pub mod evolution;
pub mod experiments;
pub mod gauge;
pub mod grid;
pub mod helmholtz;
pub mod linearized;
pub mod params;
pub mod scalar;
pub mod soliton;
pub mod spectral;

pub use error::{LabError, ParamError, Result};
pub use grid::{ComplexField, Grid, PairField};
pub use params::{Equation, SolitonParams};
pub use scalar::Scalar;
pub use spectral::Spectral;

pub type Real = f64;
pub type C64 = num_complex::Complex<Real>;
pub type Params = SolitonParams<Real>;
pub type Kernel = helmholtz::KernelSpec<Real>;
