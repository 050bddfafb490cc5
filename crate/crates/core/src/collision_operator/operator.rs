use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::kernel::{component, CoulombKernel};
use super::stencil::{pos, CellStencil, CORNERS, FAMILIES};
use crate::fft::LatticeConvolver;
use crate::velocity_space::{build_maxwellian, ChiBasis, MaxwellianParams, VelocityField, VelocityGrid, GRAM_TOL};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssemblyMode {
    /// Kernel sums by zero-padded FFT convolution, O(N³ log N) per apply.
    MatrixFree,
    /// Explicit N³ × N³ matrix of L_M (columns assembled from the FFT apply).
    Dense,
}

/// Settings that define the discrete operator (and hence its cache key).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorSettings {
    /// Offsets with 0 < |z| < factor·h use the cell-averaged magnitude.
    pub reg_radius_factor: f64,
    /// Tolerance on the χ Gram deviation; `None` skips the resolution gate.
    pub gram_tol: Option<f64>,
}

impl Default for OperatorSettings {
    fn default() -> Self {
        Self { reg_radius_factor: 0.5, gram_tol: Some(GRAM_TOL) }
    }
}

/// Discrete Landau operator on one velocity grid around a background Maxwellian M.
///
/// Weak form on the cell lattice (see [`super::stencil`]): for each of the
/// eight corner gradients D from nodes to cell centres, with cell volume |c|,
/// kernel φ_cc' on the cell lattice and node weights W,
///
///   Q(F₁,F₂) = −⅛ Σ_D W⁻¹ Dᵀ |c| J_D,
///   J_D,c = Σ_c' |c| φ_cc' [F̂₁_c' (D_M F₂)_c − (D_M F₁)_c' F̂₂_c],
///
/// where D_M F = M̂ ⊙ (D(F/M) + avg(F/M) ∇log M̂), F̂ = M̂ avg(F/M), and M̂ is
/// M at the cell centres. Pairing with ψ = 1, ξ, |ξ|²/2 gives
/// −Σ_cc' (Dψ)_c φ_cc'[…] with Dψ = 0, eᵢ, ξ_c exactly; the bracket is
/// antisymmetric in (c, c') or annihilated by φ(ξ_c − ξ_c'), so Q(F,F)
/// conserves mass, momentum and energy to round-off on any grid. D_M M =
/// M̂∇log M̂ makes Q(M,M) vanish identically, and the linearisation reduces to
///
///   L_M h = −⅛ Σ_D W⁻¹ Dᵀ |c| J_D,   J_D,c = M̂_c Σ_c' |c| φ_cc' M̂_c' (V_c − V_c'),  V = D(h/M),
///
/// a symmetric, non-positive form in ⟨f, g/M⟩ whose kernel is exactly
/// {M, ξM, |ξ|²M}.
#[derive(Debug, Clone)]
pub struct DiscreteLandauOperator {
    grid: Arc<VelocityGrid>,
    params: MaxwellianParams,
    settings: OperatorSettings,
    background: VelocityField,
    sqrt_background: Vec<f64>,
    /// M and ∇log M at the cell centres.
    cell_m: Vec<f64>,
    cell_log_grad: [Vec<f64>; 3],
    cell_volume: f64,
    conv: LatticeConvolver,
    /// φ ∗ (|c| M̂), six components.
    s_background: Vec<Vec<f64>>,
    chi: ChiBasis,
    dense: Option<Vec<f64>>,
}

impl DiscreteLandauOperator {
    pub fn new(grid: Arc<VelocityGrid>, params: MaxwellianParams, settings: OperatorSettings) -> Result<Self> {
        let background = build_maxwellian(&params, &grid)?;
        let chi = match settings.gram_tol {
            Some(tol) => ChiBasis::new(&params, &background, tol)?,
            None => ChiBasis::unchecked(&params, &background)?,
        };
        let h = grid.spacing();
        let kern = CoulombKernel::new(h, settings.reg_radius_factor * h);
        let kernels: Vec<_> = (0..6).map(|c| move |i: i64, j: i64, k: i64| kern.entry(c, [i, j, k])).collect();
        let conv = LatticeConvolver::new(grid.n() - 1, &kernels);
        let stencil = CellStencil::new(&grid);
        let centres = stencil.centres(&grid);
        let rt = params.rtheta();
        let cell_m: Vec<f64> = centres.iter().map(|x| params.eval(*x)).collect();
        let cell_log_grad = core::array::from_fn(|k| centres.iter().map(|x| -(x[k] - params.u[k]) / rt).collect());
        let cell_volume = h * h * h;
        let sqrt_background = background.values().iter().map(|m| libm::sqrt(*m)).collect();
        let vm: Vec<f64> = cell_m.iter().map(|m| cell_volume * m).collect();
        let plan: Vec<[(usize, usize); 1]> = (0..6).map(|c| [(c, 0)]).collect();
        let plan_refs: Vec<&[(usize, usize)]> = plan.iter().map(|p| &p[..]).collect();
        let s_background = conv.apply(&[&vm], &plan_refs);
        Ok(Self {
            grid,
            params,
            settings,
            background,
            sqrt_background,
            cell_m,
            cell_log_grad,
            cell_volume,
            conv,
            s_background,
            chi,
            dense: None,
        })
    }

    /// Operator around μ = M[1, 0, 3/2], the setting of Γ and 𝓛.
    pub fn reference(grid: Arc<VelocityGrid>) -> Result<Self> {
        Self::new(grid, MaxwellianParams::reference(), OperatorSettings::default())
    }

    pub fn grid(&self) -> &Arc<VelocityGrid> {
        &self.grid
    }
    pub fn params(&self) -> &MaxwellianParams {
        &self.params
    }
    pub fn settings(&self) -> &OperatorSettings {
        &self.settings
    }
    pub fn background(&self) -> &VelocityField {
        &self.background
    }
    pub fn chi(&self) -> &ChiBasis {
        &self.chi
    }
    pub fn reg_radius(&self) -> f64 {
        self.settings.reg_radius_factor * self.grid.spacing()
    }
    pub fn mode(&self) -> AssemblyMode {
        if self.dense.is_some() {
            AssemblyMode::Dense
        } else {
            AssemblyMode::MatrixFree
        }
    }

    fn check(&self, f: &VelocityField) -> Result<()> {
        if f.grid().as_ref() == self.grid.as_ref() {
            Ok(())
        } else {
            Err(Error::Shape("field grid differs from the operator grid".into()))
        }
    }

    fn stencil(&self) -> CellStencil {
        CellStencil::new(&self.grid)
    }

    /// −⅛ W⁻¹ |c| Σ Dᵀ t over the 3 × 4 edge families, where t holds the
    /// flux components already summed over the corners sharing a family.
    fn divergence(&self, st: &CellStencil, t: &[[Vec<f64>; FAMILIES]; 3]) -> Vec<f64> {
        let w = self.grid.weights();
        let mut out = vec![0.0; w.len()];
        for (axis, ta) in t.iter().enumerate() {
            for (p, tp) in ta.iter().enumerate() {
                st.edge_transpose_add(tp, axis, p, &mut out);
            }
        }
        let s = self.cell_volume / CORNERS as f64;
        out.iter_mut().zip(w).for_each(|(o, wa)| *o = -s * *o / wa);
        out
    }

    /// Q(F₁, F₂).
    pub fn apply_q(&self, f1: &VelocityField, f2: &VelocityField) -> Result<VelocityField> {
        self.check(f1)?;
        self.check(f2)?;
        Ok(f1.with_values(self.q_raw(f1.values(), f2.values())))
    }

    /// D_M F per edge family: M̂ (D r + avg(r) ∇log M̂) with r = F/M.
    fn relative_gradients(&self, st: &CellStencil, r: &[f64], avg: &[f64]) -> [[Vec<f64>; FAMILIES]; 3] {
        let cm = &self.cell_m;
        let mut e = st.edge_gradients(r);
        for (k, ek) in e.iter_mut().enumerate() {
            for ekp in ek.iter_mut() {
                for (c, x) in ekp.iter_mut().enumerate() {
                    *x = cm[c] * (*x + avg[c] * self.cell_log_grad[k][c]);
                }
            }
        }
        e
    }

    fn q_raw(&self, f1: &[f64], f2: &[f64]) -> Vec<f64> {
        let st = self.stencil();
        let m = self.background.values();
        let cm = &self.cell_m;
        let nc = cm.len();
        let vol = self.cell_volume;
        let r1: Vec<f64> = f1.iter().zip(m).map(|(a, b)| a / b).collect();
        let r2: Vec<f64> = f2.iter().zip(m).map(|(a, b)| a / b).collect();
        let (a1, a2) = (st.average(&r1), st.average(&r2));
        let g1 = self.relative_gradients(&st, &r1, &a1);
        let g2 = self.relative_gradients(&st, &r2, &a2);
        let hat1: Vec<f64> = (0..nc).map(|c| vol * cm[c] * a1[c]).collect();
        let vg1: Vec<Vec<f64>> = g1.iter().flatten().map(|g| g.iter().map(|x| vol * x).collect()).collect();
        // Outputs 0..6: φ ∗ (|c| F̂₁) per component; then one per (axis, family).
        let mut plan: Vec<Vec<(usize, usize)>> = (0..6).map(|c| vec![(c, 0)]).collect();
        plan.extend(family_plan(1));
        let plan_refs: Vec<&[(usize, usize)]> = plan.iter().map(|p| &p[..]).collect();
        let mut inputs: Vec<&[f64]> = vec![&hat1];
        inputs.extend(vg1.iter().map(|v| &v[..]));
        let outs = self.conv.apply(&inputs, &plan_refs);
        let t = core::array::from_fn(|i| {
            core::array::from_fn(|p| {
                let mut ti: Vec<f64> = (0..nc).map(|c| -cm[c] * a2[c] * outs[6 + i * FAMILIES + p][c]).collect();
                for v in corners_of(i, p) {
                    for k in 0..3 {
                        let (s, g) = (&outs[component(i, k)], &g2[k][pos(k, v)]);
                        ti.iter_mut().enumerate().for_each(|(c, x)| *x += s[c] * g[c]);
                    }
                }
                ti
            })
        });
        self.divergence(&st, &t)
    }

    /// L_M h = Q(h, M) + Q(M, h), via the reduced flux.
    pub fn apply_l_m(&self, h: &VelocityField) -> Result<VelocityField> {
        self.check(h)?;
        Ok(h.with_values(self.l_m_raw(h.values())))
    }

    pub(crate) fn l_m_raw(&self, h: &[f64]) -> Vec<f64> {
        if let Some(mat) = &self.dense {
            let n = h.len();
            return (0..n).map(|r| crate::sum::dot(&mat[r * n..(r + 1) * n], h)).collect();
        }
        self.l_m_matrix_free(h)
    }

    fn l_m_matrix_free(&self, h: &[f64]) -> Vec<f64> {
        let st = self.stencil();
        let m = self.background.values();
        let cm = &self.cell_m;
        let nc = cm.len();
        let ratio: Vec<f64> = h.iter().zip(m).map(|(a, b)| a / b).collect();
        let v = st.edge_gradients(&ratio);
        let vmv: Vec<Vec<f64>> = v.iter().flatten().map(|vk| (0..nc).map(|c| self.cell_volume * cm[c] * vk[c]).collect()).collect();
        let plan = family_plan(0);
        let plan_refs: Vec<&[(usize, usize)]> = plan.iter().map(|p| &p[..]).collect();
        let inputs: Vec<&[f64]> = vmv.iter().map(|x| &x[..]).collect();
        let conv = self.conv.apply(&inputs, &plan_refs);
        let s = &self.s_background;
        let t = core::array::from_fn(|i| {
            core::array::from_fn(|p| {
                let mut ti: Vec<f64> = conv[i * FAMILIES + p].iter().map(|x| -x).collect();
                for corner in corners_of(i, p) {
                    for k in 0..3 {
                        let (sk, vk) = (&s[component(i, k)], &v[k][pos(k, corner)]);
                        ti.iter_mut().enumerate().for_each(|(c, x)| *x += sk[c] * vk[c]);
                    }
                }
                ti.iter_mut().zip(cm).for_each(|(x, m)| *x *= m);
                ti
            })
        });
        self.divergence(&st, &t)
    }

    /// Γ(f, g) = R^{-1/2} Q(√R f, √R g) with R the background (μ for the reference operator).
    pub fn apply_gamma(&self, f: &VelocityField, g: &VelocityField) -> Result<VelocityField> {
        self.check(f)?;
        self.check(g)?;
        let sm = &self.sqrt_background;
        let a: Vec<f64> = f.values().iter().zip(sm).map(|(x, s)| x * s).collect();
        let b: Vec<f64> = g.values().iter().zip(sm).map(|(x, s)| x * s).collect();
        let q = self.q_raw(&a, &b);
        Ok(f.with_values(q.iter().zip(sm).map(|(x, s)| x / s).collect()))
    }

    /// 𝓛f = Γ(√R, f) + Γ(f, √R), literally.
    pub fn apply_calligraphic_l(&self, f: &VelocityField) -> Result<VelocityField> {
        let sqrt_r = f.with_values(self.sqrt_background.clone());
        let a = self.apply_gamma(&sqrt_r, f)?;
        let b = self.apply_gamma(f, &sqrt_r)?;
        Ok(a.axpy(1.0, &b))
    }

    /// R^{-1/2} L_R (R^{1/2} f): the same operator as 𝓛 through the reduced flux.
    pub(crate) fn symmetrized_raw(&self, f: &[f64]) -> Vec<f64> {
        let sm = &self.sqrt_background;
        let h: Vec<f64> = f.iter().zip(sm).map(|(x, s)| x * s).collect();
        let l = self.l_m_raw(&h);
        l.iter().zip(sm).map(|(x, s)| x / s).collect()
    }

    pub fn apply_symmetrized(&self, f: &VelocityField) -> Result<VelocityField> {
        self.check(f)?;
        Ok(f.with_values(self.symmetrized_raw(f.values())))
    }

    /// Positive diagonal preconditioner for the symmetrised operator: the
    /// magnitude of the local (self-interaction) part of diag L_M, which
    /// carries the exp(h|ξ|) stiffness of coarse grids at large |ξ|.
    pub fn jacobi_diagonal(&self) -> Vec<f64> {
        let st = self.stencil();
        let m = self.background.values();
        let w = self.grid.weights();
        let s = &self.s_background;
        let mut diag = vec![0.0; m.len()];
        for corner in 0..CORNERS {
            // Per cell, the ≤ 4 nodes touched and their gradient vectors.
            let mut current = usize::MAX;
            let mut touched: Vec<(usize, [f64; 3])> = Vec::with_capacity(4);
            let flush = |c: usize, touched: &mut Vec<(usize, [f64; 3])>, diag: &mut [f64]| {
                for (a, d) in touched.drain(..) {
                    let mut q = 0.0;
                    for i in 0..3 {
                        for k in 0..3 {
                            q += d[i] * s[component(i, k)][c] * d[k];
                        }
                    }
                    diag[a] += self.cell_m[c] * q;
                }
            };
            st.for_each_entry(corner, |c, node, axis, val| {
                if c != current {
                    if current != usize::MAX {
                        flush(current, &mut touched, &mut diag);
                    }
                    current = c;
                }
                match touched.iter_mut().find(|(a, _)| *a == node) {
                    Some((_, d)) => d[axis] += val,
                    None => {
                        let mut d = [0.0; 3];
                        d[axis] = val;
                        touched.push((node, d));
                    }
                }
            });
            if current != usize::MAX {
                flush(current, &mut touched, &mut diag);
            }
        }
        let scale = self.cell_volume / CORNERS as f64;
        diag.iter_mut().enumerate().for_each(|(a, d)| *d *= scale / (w[a] * m[a]));
        diag
    }

    pub fn sqrt_background(&self) -> &[f64] {
        &self.sqrt_background
    }

    /// Assembles the dense matrix of L_M column by column (row-major storage).
    pub fn assemble_dense(&mut self) {
        self.dense = None;
        let n = self.grid.len();
        let mut mat = vec![0.0; n * n];
        let mut e = vec![0.0; n];
        for c in 0..n {
            e[c] = 1.0;
            let col = self.l_m_matrix_free(&e);
            e[c] = 0.0;
            for (r, v) in col.into_iter().enumerate() {
                mat[r * n + c] = v;
            }
        }
        self.dense = Some(mat);
    }

    pub fn dense_matrix(&self) -> Option<&[f64]> {
        self.dense.as_deref()
    }

    /// Installs a previously assembled matrix (e.g. from a cache).
    pub fn set_dense_matrix(&mut self, mat: Vec<f64>) -> Result<()> {
        let n = self.grid.len();
        if mat.len() != n * n {
            return Err(Error::Shape(format!("dense matrix has {} entries, expected {}", mat.len(), n * n)));
        }
        self.dense = Some(mat);
        Ok(())
    }

    pub fn drop_dense(&mut self) {
        self.dense = None;
    }

    /// Power-iteration estimate of ‖L_M‖ in the ⟨f, g/M⟩ norm, i.e. of the
    /// spectral radius of the symmetrised operator.
    pub fn norm_estimate(&self, iterations: usize) -> f64 {
        let grid = &self.grid;
        let mut f: Vec<f64> = (0..grid.len())
            .map(|a| {
                let x = grid.node(a);
                libm::sin(1.3 * x[0] + 0.7 * x[1] - 0.4 * x[2] + 0.1) * self.sqrt_background[a]
            })
            .collect();
        let mut lambda = 0.0;
        for _ in 0..iterations {
            let nrm = libm::sqrt(grid.inner(&f, &f));
            f.iter_mut().for_each(|x| *x /= nrm);
            let g = self.symmetrized_raw(&f);
            lambda = libm::sqrt(grid.inner(&g, &g));
            f = g;
        }
        lambda
    }
}

/// The two corners whose `axis` component uses edge family `p`.
fn corners_of(axis: usize, p: usize) -> impl Iterator<Item = usize> {
    (0..CORNERS).filter(move |&v| pos(axis, v) == p)
}

/// Convolution plan producing, for each (axis i, family p), the sum over
/// the corners v using that family of Σ_j φ_ij ∗ Y_j,pos(j,v), where the
/// inputs Y_j,q sit at `offset + j·4 + q`.
fn family_plan(offset: usize) -> Vec<Vec<(usize, usize)>> {
    let mut plan = Vec::with_capacity(3 * FAMILIES);
    for i in 0..3 {
        for p in 0..FAMILIES {
            let mut terms = Vec::new();
            for v in corners_of(i, p) {
                for j in 0..3 {
                    terms.push((component(i, j), offset + j * FAMILIES + pos(j, v)));
                }
            }
            plan.push(terms);
        }
    }
    plan
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Worst relative error of φ ∗ (|c|M̂) against σ₁₁ inside |ξ| ≤ 5.
    fn sigma_error(n: usize) -> (f64, f64) {
        let grid = Arc::new(VelocityGrid::thermal(7.0, n, 1.5).unwrap());
        let settings = OperatorSettings { gram_tol: None, ..Default::default() };
        let op = DiscreteLandauOperator::new(grid.clone(), MaxwellianParams::reference(), settings).unwrap();
        let mut worst = 0.0_f64;
        for (k, x) in CellStencil::new(&grid).centres(&grid).iter().enumerate() {
            if x[0] * x[0] + x[1] * x[1] + x[2] * x[2] <= 25.0 {
                let s = crate::velocity_space::collision_frequency(*x);
                worst = worst.max((op.s_background[0][k] - s[0][0]).abs() / s[0][0]);
            }
        }
        (grid.spacing(), worst)
    }

    #[test]
    fn background_collision_frequency_converges_at_second_order() {
        let (h1, e1) = sigma_error(16);
        let (h2, e2) = sigma_error(24);
        assert!(e1 < 0.035, "{e1}");
        let order = libm::log(e1 / e2) / libm::log(h1 / h2);
        assert!(order > 1.5, "{order}");
    }
}
