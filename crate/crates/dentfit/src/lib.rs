//! Dent characterization for 3D-scanned surfaces.
//!
//! The crate implements a seven-parameter analytic dent model (length,
//! width, depth, exponential base, egg-factor boundary, and a deepest-point
//! shift), samples synthetic dents from it, and fits it to scanned point
//! clouds: base-plane removal, per-dent segmentation, and bounded
//! derivative-free least squares. Reports carry the fitted parameters,
//! residual metrics and the traditional box measures they replace.

pub mod cli;
pub mod cloud;
pub mod error;
pub mod fit;
pub mod jsonfmt;
pub mod model;
pub mod render;
pub mod synth;

pub use cloud::{DentSegment, PlaneFrame, PointCloud};
pub use error::{CloudError, FitError, ModelError};
pub use fit::{FitConfig, FitMode, FitReport, Pose};
pub use model::{DentParams, HeightField, SrmBox};
