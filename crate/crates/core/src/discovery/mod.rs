//! Sparse discovery of PDE coefficients through the differentiable solver.

pub mod adam;
pub mod expr;
pub mod loss;
pub mod metrics;
pub mod noise;
pub mod template;
pub mod train;
pub mod transform;

pub use metrics::{e_inf, threshold, tpr, Terms};
pub use noise::add_noise;
pub use template::{PdeTemplate, TemplateSpec, TransformKind};
pub use loss::LossNorm;
pub use train::{train, DiscoveryReport, PatchSampling, TrainConfig, Trainer};
