//! Nonintrusive parametric reduced-order modeling by operator inference.
//!
//! The offline pipeline scales and concatenates snapshot trajectories,
//! builds a global POD basis, learns one quadratic reduced model per
//! training parameter by regularized least squares, and interpolates the
//! learned operators over the parameter domain. The online stage integrates
//! the interpolated model and lifts it back to physical fields.

pub mod cli;
pub mod diff;
pub mod error;
pub mod features;
pub mod metrics;
pub mod opinf;
pub mod parametric;
pub mod pod;
pub mod rom;
pub mod scaling;
pub mod signal;
pub mod snapshots;
pub mod synthfom;
pub mod train;

pub use error::{Error, Result};
pub use features::FeatureDims;
pub use opinf::{ReducedOperatorSet, Regularization, RegularizationGrid};
pub use parametric::{load_model, save_model, ParametricRom};
pub use pod::PodBasis;
pub use scaling::ScalingTransform;
pub use snapshots::{SnapshotSet, VariableLayout};
