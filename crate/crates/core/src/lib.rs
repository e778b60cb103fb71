//! Regression of hypothesized haemodynamic responses from ROI-averaged fMRI
//! time series, with ridge regression and island-model genetic programming,
//! plus the generalizability protocols and significance tests used to compare
//! them.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the `*64` aliases
//! below fix the scalar to `f64`, which is what the command-line pipeline uses.

pub mod dataset;
pub mod design;
pub mod eval;
pub mod fit;
pub mod gp;
pub mod error;
pub mod linalg;
pub mod ridge;
pub mod scalar;
pub mod special;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Real;

pub type RoiMatrix64 = dataset::RoiMatrix<f64>;
pub type HrTarget64 = design::HrTarget<f64>;
pub type Hrf64 = design::Hrf<f64>;
pub type LinearModel64 = ridge::LinearModel<f64>;
pub type ExpressionGenome64 = gp::ExpressionGenome<f64>;
pub type Model64 = eval::Model<f64>;
pub type EvalReport64 = eval::EvalReport<f64>;
