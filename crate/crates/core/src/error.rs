use alloc::string::String;

/// Failure modes shared by every module of the core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate state: {0}")]
    Degenerate(String),
    #[error("velocity grid cannot resolve the Maxwellian: Gram deviation {deviation:.3e} exceeds {tol:.1e}")]
    Resolution { deviation: f64, tol: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("no convergence after {iterations} iterations (relative residual {residual:.3e}); {hint}")]
    Convergence { iterations: usize, residual: f64, hint: String },
    #[error("weight collapse: q(t) = {q:.6e} at t = {t}")]
    WeightCollapse { q: f64, t: f64 },
    #[error("positivity lost at t = {t}, cell {cell}: {detail}")]
    BlowUp { t: f64, cell: usize, detail: String },
    #[error("time step {dt:.3e} exceeds the parabolic bound {bound:.3e}")]
    Cfl { dt: f64, bound: f64 },
    #[error("discretisation failure: {0}")]
    Discretization(String),
}

pub type Result<T> = core::result::Result<T, Error>;
