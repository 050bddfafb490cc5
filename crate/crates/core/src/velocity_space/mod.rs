//! Velocity grids, Maxwellians, moments, macro/micro projections, the
//! collision frequency σ and the time–velocity weights.

mod grid;
mod maxwellian;
mod projection;
pub mod quadrature;
mod sigma;
mod weight;

pub use grid::{VelocityField, VelocityGrid};
pub use maxwellian::{build_maxwellian, moments, sqrt_mu, MaxwellianParams, Moments};
pub use projection::{project_p0_p1, ChiBasis, GRAM_TOL};
pub use sigma::{collision_frequency, sigma_eigenvalues, sigma_equivalent_terms, sigma_norm, SigmaField};
pub use weight::{japanese, weight_w, WeightParams};
