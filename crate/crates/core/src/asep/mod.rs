//! Asymmetric simple exclusion through its height function: exact kinetic
//! Monte Carlo, the Gärtner transform, and τ-moments.
//!
//! Heights are stored in the growth frame, where ∨ flips to ∧ (height +2) at
//! rate q and ∧ flips to ∨ (height −2) at rate p, and step data is h(j) = |j|
//! (sites 1, 2, ... occupied). The canonical frame is the reflection
//! h_c(j) = −h(−j), in which step data reads −|j|.

mod ensemble;
mod gartner;
mod state;
mod tau_moment;

pub use ensemble::{height_ensemble, tasep_gue_scale, tasep_step_scaled};
pub use gartner::{gartner_transform, weak_asymmetry_config, WeakAsymmetryConfig};
pub use state::{init_flat, init_stationary, init_step, kmc_evolve, step_window, AsepRates, AsepState, InitialCondition};
pub use tau_moment::{modified_partition, tau_moment_contour, tau_moment_contour_with, tau_moment_mc, tau_moment_sample, ContourValue};
