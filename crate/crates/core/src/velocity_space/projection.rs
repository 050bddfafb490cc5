use alloc::format;
use alloc::vec::Vec;

use super::{MaxwellianParams, VelocityField};
use crate::{Error, Result};

/// Default tolerance on |⟨χᵢ, χⱼ/M⟩ − δᵢⱼ| before the grid is declared too coarse.
pub const GRAM_TOL: f64 = 1e-6;

/// The macroscopic basis χ₀..χ₄ of a local Maxwellian, Lagrangian form:
/// χ₀ = √v M, χᵢ = √v (ξᵢ−uᵢ)/√(Rθ) M, χ₄ = √v (|ξ−u|²/(Rθ) − 3)/√6 M.
///
/// The analytic basis is orthonormal in ⟨f, g/M⟩ only up to quadrature
/// error. After checking that error against a tolerance we re-orthonormalise
/// on the grid (Cholesky of the Gram matrix) so that the discrete P0 is an
/// exact projector.
#[derive(Debug, Clone)]
pub struct ChiBasis {
    params: MaxwellianParams,
    maxwellian: VelocityField,
    /// χ̃ₖ/M after orthonormalisation, so that P0h = Σₖ ⟨h, χ̃ₖ/M⟩ χ̃ₖ.
    polys: [Vec<f64>; 5],
    gram_deviation: f64,
}

impl ChiBasis {
    pub fn new(params: &MaxwellianParams, maxwellian: &VelocityField, tol: f64) -> Result<Self> {
        let basis = Self::unchecked(params, maxwellian)?;
        if basis.gram_deviation > tol {
            return Err(Error::Resolution { deviation: basis.gram_deviation, tol });
        }
        Ok(basis)
    }

    /// Builds the basis without the resolution gate (the deviation is still recorded).
    pub fn unchecked(params: &MaxwellianParams, maxwellian: &VelocityField) -> Result<Self> {
        params.validate()?;
        let grid = maxwellian.grid().clone();
        let sv = libm::sqrt(params.v);
        let raw: [Vec<f64>; 5] = core::array::from_fn(|k| {
            (0..grid.len())
                .map(|a| {
                    let c = params.hat(grid.node(a));
                    sv * match k {
                        0 => 1.0,
                        1..=3 => c[k - 1],
                        _ => (c[0] * c[0] + c[1] * c[1] + c[2] * c[2] - 3.0) / libm::sqrt(6.0),
                    }
                })
                .collect()
        });
        let m = maxwellian.values();
        let w = grid.weights();
        let mut gram = [[0.0; 5]; 5];
        let mut gram_deviation: f64 = 0.0;
        for i in 0..5 {
            for j in 0..=i {
                let g = crate::sum::pairwise_by(m.len(), &|a| w[a] * m[a] * raw[i][a] * raw[j][a]);
                gram[i][j] = g;
                gram[j][i] = g;
                let target = if i == j { 1.0 } else { 0.0 };
                gram_deviation = gram_deviation.max((g - target).abs());
            }
        }
        let l = cholesky5(&gram)
            .ok_or_else(|| Error::Degenerate(format!("χ Gram matrix is not positive definite (deviation {gram_deviation:.3e})")))?;
        // Forward substitution: p' = L⁻¹ p.
        let mut polys: [Vec<f64>; 5] = Default::default();
        for k in 0..5 {
            let mut p = raw[k].clone();
            for (j, pj) in polys.iter().enumerate().take(k) {
                let c = l[k][j];
                p.iter_mut().zip(pj).for_each(|(x, y)| *x -= c * y);
            }
            let d = 1.0 / l[k][k];
            p.iter_mut().for_each(|x| *x *= d);
            polys[k] = p;
        }
        Ok(Self { params: *params, maxwellian: maxwellian.clone(), polys, gram_deviation })
    }

    pub fn params(&self) -> &MaxwellianParams {
        &self.params
    }

    pub fn maxwellian(&self) -> &VelocityField {
        &self.maxwellian
    }

    pub fn gram_deviation(&self) -> f64 {
        self.gram_deviation
    }

    /// Coefficients ⟨h, χ̃ₖ/M⟩.
    pub fn coefficients(&self, h: &VelocityField) -> [f64; 5] {
        core::array::from_fn(|k| h.grid().inner(h.values(), &self.polys[k]))
    }

    /// χ̃ₖ as a field.
    pub fn chi(&self, k: usize) -> VelocityField {
        let m = self.maxwellian.values();
        self.maxwellian.with_values(m.iter().zip(&self.polys[k]).map(|(a, b)| a * b).collect())
    }

    pub fn p0(&self, h: &VelocityField) -> Result<VelocityField> {
        h.check_grid(&self.maxwellian)?;
        let c = self.coefficients(h);
        let m = self.maxwellian.values();
        let vals = (0..m.len()).map(|a| m[a] * (0..5).map(|k| c[k] * self.polys[k][a]).sum::<f64>()).collect();
        Ok(h.with_values(vals))
    }

    pub fn p1(&self, h: &VelocityField) -> Result<VelocityField> {
        let p0 = self.p0(h)?;
        Ok(h.axpy(-1.0, &p0))
    }

    /// ‖h‖ in the ⟨f, g/M⟩ product restricted to the macroscopic part, i.e.
    /// |coefficients|₂ — the size of P0h measured the way the projection sees it.
    pub fn macro_size(&self, h: &VelocityField) -> f64 {
        libm::sqrt(self.coefficients(h).iter().map(|c| c * c).sum())
    }
}

/// (P0h, P1h) for the local Maxwellian of `params`, with the Gram gate at [`GRAM_TOL`].
pub fn project_p0_p1(h: &VelocityField, params: &MaxwellianParams) -> Result<(VelocityField, VelocityField)> {
    let m = super::build_maxwellian(params, h.grid())?;
    let basis = ChiBasis::new(params, &m, GRAM_TOL)?;
    let p0 = basis.p0(h)?;
    let p1 = h.axpy(-1.0, &p0);
    Ok((p0, p1))
}

fn cholesky5(a: &[[f64; 5]; 5]) -> Option<[[f64; 5]; 5]> {
    let mut l = [[0.0; 5]; 5];
    for i in 0..5 {
        for j in 0..=i {
            let s: f64 = a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[i][i] = libm::sqrt(s);
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}
