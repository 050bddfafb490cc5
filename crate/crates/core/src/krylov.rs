//! MINRES for self-adjoint (possibly semidefinite) operators in a weighted
//! inner product, with an optional projection applied to every Krylov vector.
//!
//! The projection is how singular systems are handled: if the operator's
//! kernel is projected out of the right-hand side and of every new Lanczos
//! vector, the iteration never leaves the range and converges to the minimum
//! norm solution.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinresOptions {
    /// Stop when ‖r‖/‖b‖ ≤ tol (recurrence estimate, confirmed on exit).
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MinresOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 500 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinresOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// True relative residual ‖b − Ax‖/‖b‖ recomputed at exit.
    pub relative_residual: f64,
    pub converged: bool,
}

/// Solves A x = b. `inner` must make `op` self-adjoint; `project` is applied
/// to b and to each A·v. `precond` (if any) must be self-adjoint and positive
/// definite in `inner`; it is applied between projections so the iteration
/// stays in the projected subspace.
pub fn minres<A, I, P>(
    op: A,
    b: &[f64],
    inner: I,
    project: P,
    precond: Option<&dyn Fn(&[f64]) -> Vec<f64>>,
    opts: MinresOptions,
) -> MinresOutcome
where
    A: Fn(&[f64]) -> Vec<f64>,
    I: Fn(&[f64], &[f64]) -> f64,
    P: Fn(&mut [f64]),
{
    let n = b.len();
    let psolve = |r: &[f64]| -> Vec<f64> {
        match precond {
            Some(p) => {
                let mut z = p(r);
                project(&mut z);
                z
            }
            None => r.to_vec(),
        }
    };
    let mut r1 = b.to_vec();
    project(&mut r1);
    let mut y = psolve(&r1);
    let beta1 = libm::sqrt(inner(&r1, &y).max(0.0));
    let bnorm = libm::sqrt(inner(b, b).max(0.0));
    if beta1 == 0.0 {
        return MinresOutcome { solution: vec![0.0; n], iterations: 0, relative_residual: 0.0, converged: true };
    }
    let mut x = vec![0.0; n];
    let mut r2 = r1.clone();
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0, 0.0);
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    // The recurrence tracks the residual in the preconditioned norm; the
    // target is tightened whenever it disagrees with the true residual.
    let mut target = opts.tol;
    let true_residual = |x: &[f64]| -> f64 {
        let mut xp = x.to_vec();
        project(&mut xp);
        let ax = op(&xp);
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(a, b)| a - b).collect();
        project(&mut r);
        libm::sqrt(inner(&r, &r).max(0.0)) / bnorm.max(f64::MIN_POSITIVE)
    };

    for itn in 1..=opts.max_iter {
        iterations = itn;
        let s = 1.0 / beta;
        let v: Vec<f64> = y.iter().map(|t| s * t).collect();
        y = op(&v);
        project(&mut y);
        if itn >= 2 {
            let f = beta / oldb;
            y.iter_mut().zip(&r1).for_each(|(a, b)| *a -= f * b);
        }
        let alfa = inner(&v, &y);
        let f = alfa / beta;
        y.iter_mut().zip(&r2).for_each(|(a, b)| *a -= f * b);
        r1 = core::mem::replace(&mut r2, y);
        y = psolve(&r2);
        oldb = beta;
        beta = libm::sqrt(inner(&r2, &y).max(0.0));

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = libm::hypot(gbar, beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        let denom = 1.0 / gamma;
        let w1 = core::mem::replace(&mut w2, core::mem::take(&mut w));
        w = (0..n).map(|i| (v[i] - oldeps * w1[i] - delta * w2[i]) * denom).collect();
        x.iter_mut().zip(&w).for_each(|(a, b)| *a += phi * b);

        if phibar / beta1 <= target || beta == 0.0 {
            let rt = true_residual(&x);
            if rt <= opts.tol || beta == 0.0 {
                converged = true;
                break;
            }
            target = (0.5 * target * opts.tol / rt).min(0.5 * phibar / beta1);
        }
    }
    project(&mut x);
    let relative_residual = true_residual(&x);
    converged = converged && relative_residual <= 10.0 * opts.tol;
    MinresOutcome { solution: x, iterations, relative_residual, converged }
}
