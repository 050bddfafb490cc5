use alloc::format;
use alloc::sync::Arc;
use core::f64::consts::PI;

use super::{VelocityField, VelocityGrid};
use crate::{Error, Result, R_GAS};

/// Fluid state (v, u, θ) parameterising a local Maxwellian; R is fixed at 2/3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxwellianParams {
    pub v: f64,
    pub u: [f64; 3],
    pub theta: f64,
}

impl MaxwellianParams {
    pub fn new(v: f64, u: [f64; 3], theta: f64) -> Result<Self> {
        let p = Self { v, u, theta };
        p.validate()?;
        Ok(p)
    }

    /// The global equilibrium (1, 0, 3/2), for which Rθ = 1.
    pub fn reference() -> Self {
        Self { v: 1.0, u: [0.0; 3], theta: 1.5 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v > 0.0 && self.v.is_finite()) {
            return Err(Error::Domain(format!("specific volume must be positive, got {}", self.v)));
        }
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(Error::Domain(format!("temperature must be positive, got {}", self.theta)));
        }
        if self.u.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("bulk velocity must be finite".into()));
        }
        Ok(())
    }

    pub fn rtheta(&self) -> f64 {
        R_GAS * self.theta
    }

    /// p = Rθ/v = 2θ/(3v).
    pub fn pressure(&self) -> f64 {
        self.rtheta() / self.v
    }

    /// Thermal variable ξ̂ = (ξ − u)/√(Rθ).
    #[inline]
    pub fn hat(&self, xi: [f64; 3]) -> [f64; 3] {
        let s = 1.0 / libm::sqrt(self.rtheta());
        [(xi[0] - self.u[0]) * s, (xi[1] - self.u[1]) * s, (xi[2] - self.u[2]) * s]
    }

    #[inline]
    pub fn eval(&self, xi: [f64; 3]) -> f64 {
        let rt = self.rtheta();
        let c2: f64 = (0..3).map(|i| (xi[i] - self.u[i]) * (xi[i] - self.u[i])).sum();
        libm::exp(-c2 / (2.0 * rt)) / (self.v * libm::pow(2.0 * PI * rt, 1.5))
    }
}

/// M(ξ) = (1/v)(2πRθ)^{-3/2} exp(−|ξ−u|²/(2Rθ)) on the grid.
pub fn build_maxwellian(params: &MaxwellianParams, grid: &Arc<VelocityGrid>) -> Result<VelocityField> {
    params.validate()?;
    Ok(VelocityField::from_fn(grid.clone(), |xi| params.eval(xi)))
}

/// √μ for the reference state.
pub fn sqrt_mu(grid: &Arc<VelocityGrid>) -> VelocityField {
    let mu = MaxwellianParams::reference();
    VelocityField::from_fn(grid.clone(), |xi| libm::sqrt(mu.eval(xi)))
}

/// The five moments against 1, ξ, |ξ|²/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub rho: f64,
    pub momentum: [f64; 3],
    /// ρ(e + |u|²/2) with e = θ.
    pub energy: f64,
}

impl Moments {
    /// (v, u, θ) from the conserved moments, using v = 1/ρ and e = (3/2)Rθ = θ.
    pub fn to_params(&self) -> Result<MaxwellianParams> {
        if !(self.rho > 0.0) {
            return Err(Error::Degenerate(format!("density {} is not positive", self.rho)));
        }
        let u = self.momentum.map(|m| m / self.rho);
        let ke = 0.5 * (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
        let theta = self.energy / self.rho - ke;
        if !(theta > 0.0) {
            return Err(Error::Degenerate(format!("internal energy {theta} is not positive")));
        }
        Ok(MaxwellianParams { v: 1.0 / self.rho, u, theta })
    }
}

pub fn moments(f: &VelocityField) -> Moments {
    let g = f.grid();
    let vals = f.values();
    let m = |k: usize| crate::sum::pairwise_by(vals.len(), &|a| g.weights()[a] * vals[a] * g.node(a)[k]);
    let energy = crate::sum::pairwise_by(vals.len(), &|a| {
        let x = g.node(a);
        g.weights()[a] * vals[a] * 0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2])
    });
    Moments { rho: f.integral(), momentum: [m(0), m(1), m(2)], energy }
}
