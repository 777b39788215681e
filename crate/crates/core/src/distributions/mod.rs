//! Exact KPZ-class distribution functions.

pub mod kernels;
pub mod table;
pub mod tracy_widom;

pub use kernels::{airy_heat_kernel, airy_kernel, AiryWeight, BackwardComplementKernel, FactoredAiryKernel, GoeKernel};
pub use table::{DistributionTable, TableProvenance};
pub use tracy_widom::{tw_gue_cdf, tw_goe_cdf, tw_moments, tw_table, Ensemble, TwOptions};
pub mod crossover;
pub use crossover::{crossover_cdf_and_density, crossover_generating, smoothed_airy_kernel, CrossoverParams};
pub mod two_point;
pub use two_point::{two_point_covariance, TwoPointResult};
pub mod scaling;
pub use scaling::{effective_lambda, kpz_rescale, ScalingParams};
