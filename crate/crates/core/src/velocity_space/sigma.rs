use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::quadrature::gauss_legendre;
use super::{VelocityField, VelocityGrid};
use crate::sum;

/// Eigenvalues (parallel, transverse) of σ(ξ) = φ ∗ μ at |ξ| = r.
///
/// In polar coordinates centred on ξ, with z = ρω and c = ω·ξ̂,
///   λ∥ = 2π ∫ρ dρ ∫(1 − c²) μ(ξ − ρω) dc,  λ⊥ = π ∫ρ dρ ∫(1 + c²) μ(ξ − ρω) dc.
/// The ρ integral uses unit-width Gauss panels out to r + 12; the c integral
/// uses c = 1 − 2t², which resolves the exp(rρc) peak at c = 1.
pub fn sigma_eigenvalues(r: f64) -> (f64, f64) {
    let (xr, wr) = gauss_legendre(16);
    let (xt, wt) = gauss_legendre(64);
    let norm = libm::pow(2.0 * PI, -1.5);
    let rho_max = r + 12.0;
    let panels = libm::ceil(rho_max) as usize;
    let mut par = Vec::with_capacity(panels);
    let mut perp = Vec::with_capacity(panels);
    for p in 0..panels {
        let (lo, hi) = (p as f64, (p + 1) as f64);
        let (mut sp, mut st) = (0.0, 0.0);
        for (x, w) in xr.iter().zip(&wr) {
            let rho = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x;
            let jac = 0.5 * (hi - lo) * w * rho;
            let (mut ip, mut it) = (0.0, 0.0);
            for (y, v) in xt.iter().zip(&wt) {
                // t ∈ [0, 1]
                let t = 0.5 * (1.0 + y);
                let c = 1.0 - 2.0 * t * t;
                let dc = 4.0 * t * 0.5 * v;
                let e = norm * libm::exp(-0.5 * (r * r - 2.0 * r * rho * c + rho * rho));
                ip += dc * (1.0 - c * c) * e;
                it += dc * (1.0 + c * c) * e;
            }
            sp += jac * ip;
            st += jac * it;
        }
        par.push(sp);
        perp.push(st);
    }
    (2.0 * PI * sum::pairwise(&par), PI * sum::pairwise(&perp))
}

/// σ^{ij}(ξ) = (φ^{ij} ∗ μ)(ξ), symmetric positive definite.
pub fn collision_frequency(xi: [f64; 3]) -> [[f64; 3]; 3] {
    let r = libm::sqrt(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]);
    let (lp, lt) = sigma_eigenvalues(r);
    let e = if r > 0.0 { xi.map(|c| c / r) } else { [0.0; 3] };
    core::array::from_fn(|i| {
        core::array::from_fn(|j| {
            let d = if i == j { lt } else { 0.0 };
            d + (lp - lt) * e[i] * e[j]
        })
    })
}

/// σ eigenvalues at every node of a grid, computed once per distinct radius.
#[derive(Debug, Clone)]
pub struct SigmaField {
    grid: Arc<VelocityGrid>,
    parallel: Vec<f64>,
    transverse: Vec<f64>,
}

impl SigmaField {
    pub fn new(grid: &Arc<VelocityGrid>) -> Self {
        let mut table: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
        let mut parallel = Vec::with_capacity(grid.len());
        let mut transverse = Vec::with_capacity(grid.len());
        for a in 0..grid.len() {
            let key = grid.radius_key(a);
            let (lp, lt) = *table.entry(key).or_insert_with(|| {
                let x = grid.node(a);
                sigma_eigenvalues(libm::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]))
            });
            parallel.push(lp);
            transverse.push(lt);
        }
        Self { grid: grid.clone(), parallel, transverse }
    }

    pub fn grid(&self) -> &Arc<VelocityGrid> {
        &self.grid
    }

    /// Pointwise σ-density: σ∇g·∇g + σ(ξ/2)·(ξ/2) g², returned per node.
    pub fn density(&self, g: &[f64]) -> Vec<f64> {
        let grid = &self.grid;
        let d = grid.gradient(g);
        (0..grid.len())
            .map(|a| {
                let x = grid.node(a);
                let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
                let grad = [d[0][a], d[1][a], d[2][a]];
                let g2 = grad[0] * grad[0] + grad[1] * grad[1] + grad[2] * grad[2];
                let radial2 = if r2 > 0.0 {
                    let s = grad[0] * x[0] + grad[1] * x[1] + grad[2] * x[2];
                    s * s / r2
                } else {
                    0.0
                };
                let (lp, lt) = (self.parallel[a], self.transverse[a]);
                lt * g2 + (lp - lt) * radial2 + 0.25 * lp * r2 * g[a] * g[a]
            })
            .collect()
    }
}

/// |g|²_{σ,w} = Σᵢⱼ ∫ w² [σ^{ij}∂ᵢg∂ⱼg + σ^{ij}(ξᵢ/2)(ξⱼ/2)g²] dξ; `weight = None` means w ≡ 1.
pub fn sigma_norm(g: &VelocityField, weight: Option<&VelocityField>, sigma: &SigmaField) -> f64 {
    let dens = sigma.density(g.values());
    let grid = g.grid();
    match weight {
        None => grid.integrate(&dens),
        Some(w) => {
            let wv = w.values();
            sum::pairwise_by(dens.len(), &|a| grid.weights()[a] * wv[a] * wv[a] * dens[a])
        }
    }
}

/// The three squared terms whose sum is equivalent to |g|²_σ:
/// ‖⟨ξ⟩^{-1/2} g‖², ‖⟨ξ⟩^{-3/2} ξ̂·∇g‖², ‖⟨ξ⟩^{-1/2} ξ̂×∇g‖².
pub fn sigma_equivalent_terms(g: &VelocityField) -> [f64; 3] {
    let grid = g.grid();
    let v = g.values();
    let d = grid.gradient(v);
    let mut t = [Vec::with_capacity(v.len()), Vec::with_capacity(v.len()), Vec::with_capacity(v.len())];
    for a in 0..grid.len() {
        let x = grid.node(a);
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        let br = 1.0 + r2;
        let grad = [d[0][a], d[1][a], d[2][a]];
        let g2 = grad[0] * grad[0] + grad[1] * grad[1] + grad[2] * grad[2];
        let radial2 = if r2 > 0.0 {
            let s = grad[0] * x[0] + grad[1] * x[1] + grad[2] * x[2];
            s * s / r2
        } else {
            0.0
        };
        t[0].push(v[a] * v[a] / libm::sqrt(br));
        t[1].push(radial2 / (br * libm::sqrt(br)));
        t[2].push((g2 - radial2).max(0.0) / libm::sqrt(br));
    }
    t.map(|x| grid.integrate(&x))
}
