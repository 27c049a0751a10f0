//! Space-time-polarization adaptive anti-jam processing for a single
//! dual-polarized GPS antenna element.
//!
//! The crate is organized bottom-up:
//!
//! * [`polarization`]: plane-wave polarization states and field inner products.
//! * [`antenna`]: complex radiation fields of the RHCP/LHCP ports, either
//!   interpolated from a measured grid or from a parametric model.
//! * [`signals`]: synthesis of GPS C/A signals, jammers and noise into
//!   multi-channel baseband sample streams.
//! * [`linalg`]: the dense complex linear algebra the beamformers need.
//! * [`beamform`]: covariance estimation, constraint design and the weight
//!   rules (constraint-matrix MVDR with eigenvector constraints, single
//!   constraint MVDR, MMSE, two-element STAP and power minimization).
//! * [`metrics`]: prompt correlation, C/N0 estimation and suppression.
//!
//! All numerical code is generic over the scalar type through [`Real`];
//! the `*64` / `*32` aliases below name the common instantiations.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod antenna;
pub mod beamform;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod polarization;
pub mod scalar;
pub mod signals;

pub use error::{Error, Result};
pub use scalar::Real;

pub use num_complex::Complex;

pub type Complex64 = Complex<f64>;
pub type Complex32 = Complex<f32>;

pub type FieldVector64 = polarization::FieldVector<f64>;
pub type RadiationField64 = antenna::RadiationField<f64>;
pub type CMatrix64 = linalg::CMatrix<f64>;
pub type CMatrix32 = linalg::CMatrix<f32>;
pub type SvdFactors64 = linalg::SvdFactors<f64>;
pub type WeightVector64 = beamform::WeightVector<f64>;
pub type WeightVector32 = beamform::WeightVector<f32>;
pub type ConstraintMatrix64 = beamform::ConstraintMatrix<f64>;
pub type CovarianceEstimate64 = beamform::CovarianceEstimate<f64>;
pub type SampleStream64 = signals::SampleStream<f64>;
pub type SampleStream32 = signals::SampleStream<f32>;
