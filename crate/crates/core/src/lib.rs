//! Numerical core for the Landau–contact-wave laboratory.
//!
//! Everything here is `no_std` + `alloc`: velocity grids and Maxwellians, the
//! discrete Coulomb Landau operator and its linearisations, Burnett inversions
//! and transport coefficients, the self-similar viscous contact wave, the
//! Lagrangian Navier–Stokes solver and the energy/weight functionals built on
//! top of them. File formats, caching and the CLI live in `landau-lab`.
//!
//! Transcendental functions go through `libm` so results are bit-identical
//! across platforms.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod chapman_enskog;
pub mod collision_operator;
pub mod contact_wave;
pub mod energy_diagnostics;
mod error;
pub mod fft;
pub mod fit;
pub mod fluid_solver;
pub mod krylov;
pub mod sum;
pub mod velocity_space;

pub use error::{Error, Result};

/// Gas constant; fixed so that the reference state (1, 0, 3/2) has Rθ = 1.
pub const R_GAS: f64 = 2.0 / 3.0;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
