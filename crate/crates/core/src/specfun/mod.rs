//! Special functions and quadrature rules.

pub mod airy;
pub mod gamma;
pub mod identities;
pub mod qexp;
pub mod quadrature;

pub use gamma::{gumbel_characteristic, ln_gamma};
pub use airy::{ai, airy_ai, airy_ai_prime, airy_pair, AiryEvaluator};
pub use identities::{airy_cubic_identity_residual, airy_product_identity_residual, airy_product_integral};
pub use qexp::{q_exponential, q_exponential_with_cutoff};
pub use quadrature::{gauss_legendre, QuadratureRule};
