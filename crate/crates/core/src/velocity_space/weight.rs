use alloc::sync::Arc;
use alloc::vec::Vec;

use super::{VelocityField, VelocityGrid};
use crate::{Error, Result};

/// Parameters of the time–velocity weight w(β) = ⟨ξ⟩^{l−|β|} exp(q(t)⟨ξ⟩²)
/// with q(t) = q₁ − q₂ ∫₀ᵗ q₃.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightParams {
    pub l: f64,
    pub q1: f64,
    pub q2: f64,
    /// (t, q₃(t)) samples, strictly increasing in t and starting at t = 0.
    history: Vec<(f64, f64)>,
}

impl WeightParams {
    pub fn new(l: f64, q1: f64, q2: f64) -> Result<Self> {
        if !(q1 > 0.0 && q2 > 0.0) {
            return Err(Error::Domain(alloc::format!("q1 = {q1}, q2 = {q2} must both be positive")));
        }
        if !(l >= 0.0) {
            return Err(Error::Domain(alloc::format!("l = {l} must be non-negative")));
        }
        Ok(Self { l, q1, q2, history: Vec::new() })
    }

    /// q₁ = ε₀, q₂ = 1/(C̃₀√ε₀) with ε₀ = 0.1, C̃₀ = 10 and l = 2.
    pub fn default_params() -> Self {
        let eps0: f64 = 0.1;
        Self { l: 2.0, q1: eps0, q2: 1.0 / (10.0 * libm::sqrt(eps0)), history: Vec::new() }
    }

    pub fn history(&self) -> &[(f64, f64)] {
        &self.history
    }

    /// Appends a q₃ sample; time must increase and q₃ must be non-negative.
    pub fn push(&mut self, t: f64, q3: f64) -> Result<()> {
        if !(q3 >= 0.0 && q3.is_finite()) {
            return Err(Error::Domain(alloc::format!("q3({t}) = {q3} must be finite and non-negative")));
        }
        if let Some(&(tl, _)) = self.history.last() {
            if !(t > tl) {
                return Err(Error::Precondition(alloc::format!("q3 sample at t = {t} after t = {tl}")));
            }
        }
        self.history.push((t, q3));
        Ok(())
    }

    /// ∫₀ᵗ q₃ by the trapezoidal rule on the stored history (linear between
    /// samples); beyond the last sample nothing is added.
    pub fn q3_integral(&self, t: f64) -> f64 {
        let h = &self.history;
        let mut acc = 0.0;
        for win in h.windows(2) {
            let ((t0, a), (t1, b)) = (win[0], win[1]);
            if t <= t0 {
                break;
            }
            if t >= t1 {
                acc += 0.5 * (a + b) * (t1 - t0);
            } else {
                let s = (t - t0) / (t1 - t0);
                let qt = a + s * (b - a);
                acc += 0.5 * (a + qt) * (t - t0);
                break;
            }
        }
        acc
    }

    pub fn q(&self, t: f64) -> f64 {
        self.q1 - self.q2 * self.q3_integral(t)
    }

    /// q at each history sample, accumulated in order (bit-reproducible).
    pub fn q_series(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.history.len());
        for (k, &(_, b)) in self.history.iter().enumerate() {
            if k > 0 {
                let (t0, a) = self.history[k - 1];
                acc += 0.5 * (a + b) * (self.history[k].0 - t0);
            }
            out.push(self.q1 - self.q2 * acc);
        }
        out
    }

    /// q(t), or a weight-collapse error if it is not strictly positive.
    pub fn q_checked(&self, t: f64) -> Result<f64> {
        let q = self.q(t);
        if q > 0.0 {
            Ok(q)
        } else {
            Err(Error::WeightCollapse { q, t })
        }
    }
}

/// ⟨ξ⟩ = √(1 + |ξ|²).
#[inline]
pub fn japanese(xi: [f64; 3]) -> f64 {
    libm::sqrt(1.0 + xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2])
}

/// w(β)(t, ξ) for |β| = `beta_order`.
pub fn weight_w(beta_order: usize, t: f64, params: &WeightParams, grid: &Arc<VelocityGrid>) -> Result<VelocityField> {
    if (beta_order as f64) > params.l {
        return Err(Error::Precondition(alloc::format!("|β| = {beta_order} exceeds l = {}", params.l)));
    }
    let q = params.q_checked(t)?;
    let expo = params.l - beta_order as f64;
    Ok(VelocityField::from_fn(grid.clone(), |xi| {
        let b = japanese(xi);
        libm::pow(b, expo) * libm::exp(q * b * b)
    }))
}
