//! Discrete Coulomb Landau operator Q, its normalised form Γ, the
//! linearisations L_M and 𝓛, the constrained inverse L_M⁻¹ and the
//! coercivity estimate.

mod kernel;
mod operator;
mod stencil;

use alloc::format;
use alloc::vec::Vec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub use kernel::{component, unit_cube_inverse_distance, CoulombKernel, COMPONENTS};
pub use operator::{AssemblyMode, DiscreteLandauOperator, OperatorSettings};

use crate::krylov::{minres, MinresOptions};
use crate::velocity_space::{SigmaField, VelocityField};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Largest admissible ‖P0 rhs‖/‖rhs‖ (both in the ⟨f, g/M⟩ norm).
    pub micro_tol: f64,
}

impl Default for InversionOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 500, micro_tol: 1e-6 }
    }
}

#[derive(Debug, Clone)]
pub struct Inversion {
    pub solution: VelocityField,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// ‖h‖ in the ⟨f, g/M⟩ norm of the operator's background.
pub fn m_inverse_norm(op: &DiscreteLandauOperator, h: &VelocityField) -> f64 {
    let m = op.background().values();
    let w = op.grid().weights();
    let v = h.values();
    libm::sqrt(crate::sum::pairwise_by(v.len(), &|a| w[a] * v[a] * v[a] / m[a]))
}

/// Solves L_M x = rhs with P0 x = 0.
///
/// The system is symmetrised as f = x/√M, T f = rhs/√M with T = M^{-1/2}L_M M^{1/2},
/// which is self-adjoint in the plain quadrature product; its kernel
/// {√M, ξ√M, |ξ|²√M} is projected out of every Krylov vector.
pub fn invert_l_m(op: &DiscreteLandauOperator, rhs: &VelocityField, opts: InversionOptions) -> Result<Inversion> {
    let chi = op.chi();
    let total = m_inverse_norm(op, rhs);
    if total == 0.0 {
        return Ok(Inversion { solution: VelocityField::zeros(rhs.grid().clone()), iterations: 0, relative_residual: 0.0 });
    }
    let macro_part = chi.macro_size(rhs);
    if macro_part > opts.micro_tol * total {
        return Err(Error::Precondition(format!(
            "right-hand side is not microscopic: |P0 rhs|/|rhs| = {:.3e} > {:.1e}",
            macro_part / total,
            opts.micro_tol
        )));
    }
    let rhs = chi.p1(rhs)?;
    let sm = op.sqrt_background();
    let b: Vec<f64> = rhs.values().iter().zip(sm).map(|(x, s)| x / s).collect();
    let kernel: [Vec<f64>; 5] = core::array::from_fn(|k| chi.chi(k).values().iter().zip(sm).map(|(x, s)| x / s).collect());
    let grid = op.grid().clone();
    let project = |v: &mut [f64]| {
        for e in &kernel {
            let c = grid.inner(v, e);
            v.iter_mut().zip(e).for_each(|(x, y)| *x -= c * y);
        }
    };
    let diag = op.jacobi_diagonal();
    let jacobi = |r: &[f64]| -> Vec<f64> { r.iter().zip(&diag).map(|(x, d)| x / d).collect() };
    let out = minres(
        |v| op.symmetrized_raw(v),
        &b,
        |a, c| grid.inner(a, c),
        project,
        Some(&jacobi),
        MinresOptions { tol: opts.tol, max_iter: opts.max_iter },
    );
    if !out.converged {
        return Err(Error::Convergence {
            iterations: out.iterations,
            residual: out.relative_residual,
            hint: "increase max_iter or relax tol".into(),
        });
    }
    let x: Vec<f64> = out.solution.iter().zip(sm).map(|(f, s)| f * s).collect();
    Ok(Inversion { solution: rhs.with_values(x), iterations: out.iterations, relative_residual: out.relative_residual })
}

#[derive(Debug, Clone)]
pub struct CoercivityEstimate {
    /// min over samples of −⟨𝓛g, g⟩ / |g|²_σ.
    pub c2: f64,
    pub quotients: Vec<f64>,
}

/// Monomial exponents of total degree ≤ `degree` in three variables.
pub fn monomials(degree: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for d in 0..=degree {
        for i in (0..=d).rev() {
            for j in (0..=d - i).rev() {
                out.push([i, j, d - i - j]);
            }
        }
    }
    out
}

/// √M · Σ c_α ξ̂^α, the smooth test functions used for coercivity sampling.
pub fn polynomial_sample(op: &DiscreteLandauOperator, exps: &[[usize; 3]], coeffs: &[f64]) -> VelocityField {
    let grid = op.grid();
    let p = op.params();
    let sm = op.sqrt_background();
    VelocityField::from_fn(grid.clone(), |_| 0.0).with_values(
        (0..grid.len())
            .map(|a| {
                let c = p.hat(grid.node(a));
                let poly: f64 = exps
                    .iter()
                    .zip(coeffs)
                    .map(|(e, k)| k * libm::pow(c[0], e[0] as f64) * libm::pow(c[1], e[1] as f64) * libm::pow(c[2], e[2] as f64))
                    .sum();
                sm[a] * poly
            })
            .collect(),
    )
}

/// Projects the kernel of the symmetrised operator out of g (in place).
pub fn remove_kernel(op: &DiscreteLandauOperator, g: &mut VelocityField) {
    let sm = op.sqrt_background();
    let grid = op.grid().clone();
    for k in 0..5 {
        let e: Vec<f64> = op.chi().chi(k).values().iter().zip(sm).map(|(x, s)| x / s).collect();
        let c = grid.inner(g.values(), &e);
        g.values_mut().iter_mut().zip(&e).for_each(|(x, y)| *x -= c * y);
    }
}

/// Samples random microscopic g = √M·(polynomial of degree ≤ `degree`) with the
/// kernel projected out and returns the smallest −⟨𝓛g,g⟩/|g|²_σ.
pub fn estimate_coercivity(
    op: &DiscreteLandauOperator,
    sigma: &SigmaField,
    samples: usize,
    degree: usize,
    seed: u64,
) -> Result<CoercivityEstimate> {
    if samples == 0 {
        return Err(Error::Precondition("need at least one sample".into()));
    }
    if sigma.grid().as_ref() != op.grid().as_ref() {
        return Err(Error::Shape("σ table and operator live on different grids".into()));
    }
    let exps = monomials(degree);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut quotients = Vec::with_capacity(samples);
    let mut attempts = 0;
    while quotients.len() < samples {
        attempts += 1;
        if attempts > 10 * samples {
            return Err(Error::Degenerate("coercivity samples keep vanishing in the σ-norm".into()));
        }
        let coeffs: Vec<f64> = exps
            .iter()
            .map(|e| {
                let z: f64 = StandardNormal.sample(&mut rng);
                let fact: f64 = e.iter().map(|&k| (1..=k).product::<usize>() as f64).product();
                z / libm::sqrt(fact)
            })
            .collect();
        let mut g = polynomial_sample(op, &exps, &coeffs);
        remove_kernel(op, &mut g);
        let s = crate::velocity_space::sigma_norm(&g, None, sigma);
        if !(s > 1e-300) {
            continue;
        }
        let lg = op.apply_symmetrized(&g)?;
        quotients.push(-lg.inner(&g) / s);
    }
    let c2 = quotients.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(CoercivityEstimate { c2, quotients })
}
