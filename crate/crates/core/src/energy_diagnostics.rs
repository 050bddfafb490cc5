//! Functionals of the energy method evaluated on fluid snapshots: E, D, F,
//! q₃ and q(t), the ω-localized integrals and the weighted inequality for
//! ∫∫h²ω².

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::chapman_enskog::{chapman_enskog_g, BurnettTable};
use crate::contact_wave::ContactWaveProfile;
use crate::fit::{log_log, LineFit};
use crate::fluid_solver::{
    central_first, central_second, perturbation_system_residual, trapezoid, MacroState, PerturbationResidual, PerturbationState,
    SpatialGrid, StabilityRun,
};
use crate::sum::pairwise_by;
use crate::velocity_space::{japanese, sqrt_mu, weight_w, MaxwellianParams, SigmaField, VelocityField, VelocityGrid, WeightParams};
use crate::{Error, Result, R_GAS};

/// ω = (1+t)^{-1/2} e^{−λx²/(1+t)}, 𝔤 = ∫_{−∞}^x ω, 𝔣 = ∫_{−∞}^x ω².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizerPair {
    lambda: f64,
}

impl LocalizerPair {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Domain(format!("λ = {lambda} must be positive")));
        }
        Ok(Self { lambda })
    }

    /// λ = min(cap, c₁/4) for a fitted envelope rate c₁.
    pub fn from_envelope(c1: f64, cap: f64) -> Result<Self> {
        if !(c1 > 0.0) {
            return Err(Error::Precondition(format!("envelope rate c₁ = {c1} must be positive")));
        }
        Self::new(cap.min(0.25 * c1))
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn omega(&self, t: f64, x: f64) -> f64 {
        libm::exp(-self.lambda * x * x / (1.0 + t)) / libm::sqrt(1.0 + t)
    }

    pub fn omega_x(&self, t: f64, x: f64) -> f64 {
        -2.0 * self.lambda * x / (1.0 + t) * self.omega(t, x)
    }

    pub fn g(&self, t: f64, x: f64) -> f64 {
        0.5 * libm::sqrt(PI / self.lambda) * (1.0 + libm::erf(x * libm::sqrt(self.lambda / (1.0 + t))))
    }

    /// 𝔤_t = −(x/(2(1+t)))ω.
    pub fn g_t(&self, t: f64, x: f64) -> f64 {
        -0.5 * x / (1.0 + t) * self.omega(t, x)
    }

    /// ‖𝔤(t,·)‖_∞ = √π λ^{-1/2}.
    pub fn g_sup(&self) -> f64 {
        libm::sqrt(PI / self.lambda)
    }

    /// 𝔤 by composite Gauss–Legendre quadrature of ω over [x − L, x], with L
    /// twelve Gaussian widths.
    pub fn g_quadrature(&self, t: f64, x: f64, panels: usize) -> f64 {
        let (nodes, weights) = crate::velocity_space::quadrature::gauss_legendre(8);
        let width = libm::sqrt((1.0 + t) / self.lambda);
        let lo = x.min(0.0) - 12.0 * width;
        let h = (x - lo) / panels as f64;
        let mut acc = 0.0;
        for p in 0..panels {
            let a = lo + h * p as f64;
            let s: f64 = nodes.iter().zip(&weights).map(|(z, w)| w * self.omega(t, a + 0.5 * h * (z + 1.0))).sum();
            acc += 0.5 * h * s;
        }
        acc
    }

    pub fn f(&self, t: f64, x: f64) -> f64 {
        0.5 * libm::sqrt(PI / (2.0 * self.lambda)) / libm::sqrt(1.0 + t) * (1.0 + libm::erf(x * libm::sqrt(2.0 * self.lambda / (1.0 + t))))
    }

    pub fn f_t(&self, t: f64, x: f64) -> f64 {
        let w = self.omega(t, x);
        -0.5 / (1.0 + t) * self.f(t, x) - 0.5 * x / (1.0 + t) * w * w
    }

    /// sup_x 𝔣 = √(π/(2λ))(1+t)^{-1/2}.
    pub fn f_sup(&self, t: f64) -> f64 {
        libm::sqrt(PI / (2.0 * self.lambda) / (1.0 + t))
    }

    /// The bounds 2λ^{-1/2}(1+t)^{-1/2} on 𝔣 and 4λ^{-1/2}(1+t)^{-3/2} on 𝔣_t.
    pub fn f_bounds(&self, t: f64) -> (f64, f64) {
        let s = 1.0 / libm::sqrt(self.lambda);
        (2.0 * s / libm::sqrt(1.0 + t), 4.0 * s / libm::pow(1.0 + t, 1.5))
    }
}

/// Multi-indices α = (t-order, x-order) with |α| ≤ 2.
pub const ALPHAS: [(usize, usize); 6] = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)];

/// A scalar field and its α-derivatives at one time level, indexed like `ALPHAS`.
pub type AlphaJet = [Vec<f64>; 6];

#[derive(Debug, Clone, Copy, PartialEq)]
enum Slot {
    Start,
    Centre,
    End,
}

fn window(k: usize, len: usize) -> (usize, Slot) {
    if k == 0 {
        (0, Slot::Start)
    } else if k + 1 == len {
        (len - 3, Slot::End)
    } else {
        (k - 1, Slot::Centre)
    }
}

/// α-jet at the slot of a three-level window; time derivatives are second
/// order (one-sided at the ends, where f_tt is first order).
fn alpha_jet(levels: [&[f64]; 3], slot: Slot, dt: f64, h: f64) -> AlphaJet {
    let [f0, f1, f2] = levels;
    let n = f1.len();
    let (val, ft): (Vec<f64>, Vec<f64>) = match slot {
        Slot::Start => (f0.to_vec(), (0..n).map(|i| (-3.0 * f0[i] + 4.0 * f1[i] - f2[i]) / (2.0 * dt)).collect()),
        Slot::Centre => (f1.to_vec(), (0..n).map(|i| (f2[i] - f0[i]) / (2.0 * dt)).collect()),
        Slot::End => (f2.to_vec(), (0..n).map(|i| (3.0 * f2[i] - 4.0 * f1[i] + f0[i]) / (2.0 * dt)).collect()),
    };
    let ftt = (0..n).map(|i| (f2[i] - 2.0 * f1[i] + f0[i]) / (dt * dt)).collect();
    let fx = central_first(&val, h);
    let fxx = central_second(&val, h);
    let ftx = central_first(&ft, h);
    [val, ft, fx, ftt, ftx, fxx]
}

fn l2_sq(f: &[f64], h: f64) -> f64 {
    trapezoid(f.len(), h, |i| f[i] * f[i])
}

fn check_spacing(times: &[f64]) -> Result<f64> {
    if times.len() < 3 {
        return Err(Error::Precondition(format!("need at least 3 snapshots for time derivatives, got {}", times.len())));
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    for w in times.windows(2) {
        if !((w[1] - w[0] - dt).abs() <= 1e-9 * dt) {
            return Err(Error::Precondition("snapshots must be equally spaced in time".into()));
        }
    }
    Ok(dt)
}

/// α-jets of the five perturbation fields [ṽ, ũ₁, ũ₂, ũ₃, θ̃] at every snapshot.
pub struct PerturbationJets {
    pub t: Vec<f64>,
    pub dx: f64,
    /// jets[k][field]
    pub jets: Vec<[AlphaJet; 5]>,
}

impl PerturbationJets {
    pub fn new(snapshots: &[MacroState], profile: &ContactWaveProfile) -> Result<Self> {
        let times: Vec<f64> = snapshots.iter().map(|s| s.t).collect();
        let dt = check_spacing(&times)?;
        let perts: Vec<PerturbationState> = snapshots.iter().map(|s| PerturbationState::new(s, profile)).collect();
        Ok(Self::from_fields(times, snapshots[0].grid.dx(), dt, &perts.iter().map(|p| p.fields.clone()).collect::<Vec<_>>()))
    }

    fn from_fields(t: Vec<f64>, h: f64, dt: f64, fields: &[[Vec<f64>; 5]]) -> Self {
        let len = fields.len();
        let jets = (0..len)
            .map(|k| {
                let (k0, slot) = window(k, len);
                core::array::from_fn(|f| alpha_jet([&fields[k0][f], &fields[k0 + 1][f], &fields[k0 + 2][f]], slot, dt, h))
            })
            .collect();
        Self { t, dx: h, jets }
    }
}

/// q₃ split into the wave part and the perturbation part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Q3Sample {
    pub t: f64,
    pub wave: f64,
    pub perturbation: f64,
}

impl Q3Sample {
    pub fn total(&self) -> f64 {
        self.wave + self.perturbation
    }
}

/// Wave part of q₃ on explicit nodes: ‖v̄ₓ‖³_∞ + ‖v̄_t‖² + Σ_{|α|=2}‖∂^αv̄‖² + Σ_{1≤|α|≤2}‖∂^αū‖².
fn wave_q3_on(profile: &ContactWaveProfile, t: f64, x0: f64, h: f64, n: usize) -> f64 {
    let mut vx_max: f64 = 0.0;
    let mut sq = [0.0; 9];
    let jets: Vec<_> = (0..n).map(|i| profile.jet(t, x0 + h * i as f64)).collect();
    for j in &jets {
        vx_max = vx_max.max(j.v.x.abs());
    }
    let comps = |k: usize, i: usize| -> f64 {
        let (v, u) = (&jets[i].v, &jets[i].u1);
        [v.t, v.tt, v.tx, v.xx, u.t, u.x, u.tt, u.tx, u.xx][k]
    };
    for (k, s) in sq.iter_mut().enumerate() {
        *s = trapezoid(n, h, |i| {
            let c = comps(k, i);
            c * c
        });
    }
    vx_max * vx_max * vx_max + sq.iter().sum::<f64>()
}

/// Wave part of q₃ at time t over |x| ≤ Z√(1+t), where the profile varies.
pub fn wave_q3(profile: &ContactWaveProfile, t: f64, points: usize) -> f64 {
    let half = profile.z() * libm::sqrt(1.0 + t);
    let h = 2.0 * half / (points - 1) as f64;
    wave_q3_on(profile, t, -half, h, points)
}

/// Log-log slope of the wave part of q₃ against 1+t.
pub fn fit_wave_q3(profile: &ContactWaveProfile, t_range: (f64, f64), samples: usize, points: usize) -> Result<LineFit> {
    let (t0, t1) = t_range;
    if !(t0 >= 0.0 && t1 > t0) || samples < 3 {
        return Err(Error::Precondition("need t1 > t0 ≥ 0 and at least 3 samples".into()));
    }
    let (a, b) = (libm::log(1.0 + t0), libm::log(1.0 + t1));
    let mut xs = Vec::with_capacity(samples);
    let mut ys = Vec::with_capacity(samples);
    for k in 0..samples {
        let s = libm::exp(a + (b - a) * k as f64 / (samples - 1) as f64);
        xs.push(s);
        ys.push(wave_q3(profile, s - 1.0, points));
    }
    log_log(&xs, &ys)
}

/// q₃ at every snapshot, on the snapshot grid.
pub fn compute_q3(snapshots: &[MacroState], profile: &ContactWaveProfile) -> Result<Vec<Q3Sample>> {
    let jets = PerturbationJets::new(snapshots, profile)?;
    Ok(q3_from_jets(&jets, snapshots[0].grid, profile))
}

fn q3_from_jets(jets: &PerturbationJets, grid: SpatialGrid, profile: &ContactWaveProfile) -> Vec<Q3Sample> {
    let h = jets.dx;
    jets.t
        .iter()
        .zip(&jets.jets)
        .map(|(&t, j)| {
            // ṽ, ũ₁, ũ₂, ũ₃ with every α ≠ 0.
            let pert = j[..4].iter().flat_map(|field| &field[1..6]).fold(0.0, |s, x| s + l2_sq(x, h));
            Q3Sample { t, wave: wave_q3_on(profile, t, -grid.half_width, h, grid.nodes()), perturbation: pert }
        })
        .collect()
}

/// ∂_β multi-indices with |β| ≤ 2, as lists of velocity axes.
const BETAS: [&[usize]; 10] = [&[], &[0], &[1], &[2], &[0, 0], &[0, 1], &[0, 2], &[1, 1], &[1, 2], &[2, 2]];

struct BetaBlock {
    order: usize,
    /// ∂_βψ_k at the velocity nodes.
    fields: Vec<Vec<f64>>,
    /// σ-density of each pair (k ≤ l) by polarization, row-major upper triangle.
    sigma: Vec<Vec<f64>>,
}

/// A frozen velocity basis ψ_k: the micro part is modelled as
/// g(t,x,ξ) = Σ_k c_k(t,x)ψ_k(ξ), so every weighted norm is a Gram form.
pub struct MicroBasis {
    grid: Arc<VelocityGrid>,
    blocks: Vec<BetaBlock>,
    japanese_sq: Vec<f64>,
    size: usize,
}

fn pair_index(k: usize, l: usize, n: usize) -> usize {
    let (a, b) = if k <= l { (k, l) } else { (l, k) };
    a * n - a * (a + 1) / 2 + b
}

impl MicroBasis {
    pub fn from_fields(fields: &[VelocityField]) -> Result<Self> {
        let Some(first) = fields.first() else {
            return Err(Error::Precondition("empty micro basis".into()));
        };
        if fields.iter().any(|f| !f.same_grid(first)) {
            return Err(Error::Shape("micro basis fields live on different grids".into()));
        }
        let grid = first.grid().clone();
        let sigma = SigmaField::new(&grid);
        let size = fields.len();
        let blocks = BETAS
            .iter()
            .map(|beta| {
                let d: Vec<Vec<f64>> =
                    fields.iter().map(|f| beta.iter().fold(f.values().to_vec(), |acc, &axis| grid.derivative(&acc, axis))).collect();
                let dens: Vec<Vec<f64>> = d.iter().map(|f| sigma.density(f)).collect();
                let mut pairs = Vec::with_capacity(size * (size + 1) / 2);
                for k in 0..size {
                    for l in k..size {
                        if k == l {
                            pairs.push(dens[k].clone());
                        } else {
                            let sum: Vec<f64> = d[k].iter().zip(&d[l]).map(|(a, b)| a + b).collect();
                            let ds = sigma.density(&sum);
                            pairs.push((0..grid.len()).map(|a| 0.5 * (ds[a] - dens[k][a] - dens[l][a])).collect());
                        }
                    }
                }
                BetaBlock { order: beta.len(), fields: d, sigma: pairs }
            })
            .collect();
        let japanese_sq = (0..grid.len())
            .map(|a| {
                let j = japanese(grid.node(a));
                j * j
            })
            .collect();
        Ok(Self { grid, blocks, japanese_sq, size })
    }

    /// ψ₀ = A₁/√μ, ψ_j = B₁ⱼ/√μ from the table at the reference state
    /// (v, u, θ) = (1, 0, θ_ref).
    pub fn chapman_enskog(table: &BurnettTable, grid: &Arc<VelocityGrid>, theta_ref: f64) -> Result<Self> {
        let params = MaxwellianParams::new(1.0, [0.0; 3], theta_ref)?;
        let root = sqrt_mu(grid);
        let mut fields = Vec::with_capacity(4);
        // Unit gradients that isolate each Burnett function.
        let a_unit = libm::sqrt(theta_ref) / libm::sqrt(R_GAS);
        let units: [(f64, [f64; 3]); 4] = [(a_unit, [0.0; 3]), (0.0, [1.0, 0.0, 0.0]), (0.0, [0.0, 1.0, 0.0]), (0.0, [0.0, 0.0, 1.0])];
        for (tx, ux) in units {
            let g = chapman_enskog_g(table, grid, &params, tx, ux);
            let vals = g.values().iter().zip(root.values()).map(|(a, r)| a / r).collect();
            fields.push(VelocityField::new(grid.clone(), vals)?);
        }
        Self::from_fields(&fields)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn grid(&self) -> &Arc<VelocityGrid> {
        &self.grid
    }

    /// Gram matrices (upper triangles) per β for ‖·‖_w, ‖·‖_{σ,w} and ‖⟨ξ⟩·‖_w at time t.
    fn grams(&self, weights: &WeightParams, t: f64) -> Result<Vec<[Vec<f64>; 3]>> {
        let w: Vec<VelocityField> = (0..=2).map(|o| weight_w(o, t, weights, &self.grid)).collect::<Result<_>>()?;
        let gw = self.grid.weights();
        let n = self.size;
        Ok(self
            .blocks
            .iter()
            .map(|b| {
                let wv = w[b.order].values();
                let mut out = [Vec::new(), Vec::new(), Vec::new()];
                for k in 0..n {
                    for l in k..n {
                        let (fk, fl) = (&b.fields[k], &b.fields[l]);
                        let sig = &b.sigma[pair_index(k, l, n)];
                        out[0].push(pairwise_by(fk.len(), &|a| gw[a] * wv[a] * wv[a] * fk[a] * fl[a]));
                        out[1].push(pairwise_by(fk.len(), &|a| gw[a] * wv[a] * wv[a] * sig[a]));
                        out[2].push(pairwise_by(fk.len(), &|a| gw[a] * wv[a] * wv[a] * self.japanese_sq[a] * fk[a] * fl[a]));
                    }
                }
                out
            })
            .collect())
    }
}

/// E, D, F at one time with their macroscopic and microscopic parts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EdfValues {
    pub e_macro: f64,
    pub e_micro: f64,
    pub d_macro: f64,
    pub d_micro: f64,
    pub f: f64,
}

impl EdfValues {
    pub fn e(&self) -> f64 {
        self.e_macro + self.e_micro
    }

    pub fn d(&self) -> f64 {
        self.d_macro + self.d_micro
    }
}

/// E = Σ_{|α|≤2}‖∂^α[ṽ,ũ,θ̃]‖² + Σ_{|α|+|β|≤2}‖∂^α_β g‖²_{w(β)},
/// D = Σ_{1≤|α|≤2}‖∂^α[ṽ,ũ,θ̃]‖² + Σ‖∂^α_β g‖²_{σ,w(β)},
/// F = Σ‖⟨ξ⟩∂^α_β g‖²_{w(β)}, with g = Σ_k c_k ψ_k given by the α-jets of c.
pub fn compute_e_d_f(
    macro_jets: &[AlphaJet; 5],
    micro: Option<(&MicroBasis, &[AlphaJet])>,
    weights: &WeightParams,
    t: f64,
    dx: f64,
) -> Result<EdfValues> {
    let mut out = EdfValues::default();
    for jet in macro_jets {
        for (a, f) in jet.iter().enumerate() {
            let s = l2_sq(f, dx);
            out.e_macro += s;
            if a > 0 {
                out.d_macro += s;
            }
        }
    }
    let Some((basis, coeffs)) = micro else {
        return Ok(out);
    };
    let n = basis.size;
    if coeffs.len() != n {
        return Err(Error::Shape(format!("{} coefficient jets for a basis of {n}", coeffs.len())));
    }
    let grams = basis.grams(weights, t)?;
    // ∫∂^αc_k ∂^αc_l dx per α.
    let moments: Vec<Vec<f64>> = (0..6)
        .map(|a| {
            let mut m = Vec::with_capacity(n * (n + 1) / 2);
            for k in 0..n {
                for l in k..n {
                    let (ck, cl) = (&coeffs[k][a], &coeffs[l][a]);
                    m.push(trapezoid(ck.len(), dx, |i| ck[i] * cl[i]));
                }
            }
            m
        })
        .collect();
    for (b, block) in basis.blocks.iter().enumerate() {
        for (a, &(at, ax)) in ALPHAS.iter().enumerate() {
            if at + ax + block.order > 2 {
                continue;
            }
            let mut acc = [0.0; 3];
            let mut idx = 0;
            for k in 0..n {
                for l in k..n {
                    let mult = if k == l { 1.0 } else { 2.0 };
                    for q in 0..3 {
                        acc[q] += mult * moments[a][idx] * grams[b][q][idx];
                    }
                    idx += 1;
                }
            }
            out.e_micro += acc[0];
            out.d_micro += acc[1];
            out.f += acc[2];
        }
    }
    Ok(out)
}

/// Chapman–Enskog coefficients c = (√R θ̃ₓ/√θ_ref, ũ₁ₓ, ũ₂ₓ, ũ₃ₓ) per node.
fn ce_coefficients(fields: &[Vec<f64>; 5], h: f64, theta_ref: f64) -> [Vec<f64>; 4] {
    let s = libm::sqrt(R_GAS / theta_ref);
    let thx = central_first(&fields[4], h);
    [thx.iter().map(|d| s * d).collect(), central_first(&fields[1], h), central_first(&fields[2], h), central_first(&fields[3], h)]
}

/// ∫(ṽ² + ũ² + θ̃²)ω² dx at the perturbation's time.
pub fn localized_integral(pert: &PerturbationState, localizer: &LocalizerPair) -> f64 {
    let g = pert.grid;
    trapezoid(g.nodes(), g.dx(), |i| {
        let w = localizer.omega(pert.t, g.x(i));
        pert.fields.iter().map(|f| f[i] * f[i]).sum::<f64>() * w * w
    })
}

/// Running trapezoidal time integral of a sampled series.
pub fn running_integral(t: &[f64], y: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(y.len());
    for k in 0..y.len() {
        if k > 0 {
            acc += 0.5 * (y[k] + y[k - 1]) * (t[k] - t[k - 1]);
        }
        out.push(acc);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySample {
    pub t: f64,
    pub edf: EdfValues,
    pub q3: Q3Sample,
    pub q: f64,
    pub localized: f64,
    pub localized_running: f64,
    pub sup: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub l: f64,
    pub q1: f64,
    pub q2: f64,
    pub lambda: f64,
    pub samples: Vec<EnergySample>,
    /// ∫₀ᵀ D dt.
    pub d_integral: f64,
    pub residual: PerturbationResidual,
}

impl EnergyReport {
    /// ∫_{T/2}^T q₃ / ∫₀ᵀ q₃.
    pub fn q3_tail_fraction(&self) -> f64 {
        let t: Vec<f64> = self.samples.iter().map(|s| s.t).collect();
        let y: Vec<f64> = self.samples.iter().map(|s| s.q3.total()).collect();
        let run = running_integral(&t, &y);
        let total = *run.last().unwrap_or(&0.0);
        let half = t.last().copied().unwrap_or(0.0) / 2.0;
        let k = t.iter().position(|&s| s >= half).unwrap_or(0);
        if total > 0.0 {
            (total - run[k]) / total
        } else {
            0.0
        }
    }
}

/// Micro-part configuration: a frozen Chapman–Enskog basis at θ_ref.
pub struct MicroProxy<'a> {
    pub basis: &'a MicroBasis,
    pub theta_ref: f64,
}

/// Evaluates every functional along a stability run. q(t) is driven by the
/// computed q₃ through `weights` (its history must be empty on entry).
pub fn energy_report(
    run: &StabilityRun,
    profile: &ContactWaveProfile,
    mut weights: WeightParams,
    localizer: LocalizerPair,
    micro: Option<MicroProxy<'_>>,
) -> Result<EnergyReport> {
    if !weights.history().is_empty() {
        return Err(Error::Precondition("weight history must start empty".into()));
    }
    let snaps = &run.snapshots;
    let times: Vec<f64> = snaps.iter().map(|s| s.t).collect();
    let dt = check_spacing(&times)?;
    let grid = snaps[0].grid;
    let h = grid.dx();
    let perts: Vec<PerturbationState> = snaps.iter().map(|s| PerturbationState::new(s, profile)).collect();
    let fields: Vec<[Vec<f64>; 5]> = perts.iter().map(|p| p.fields.clone()).collect();
    let jets = PerturbationJets::from_fields(times.clone(), h, dt, &fields);
    let q3 = q3_from_jets(&jets, grid, profile);
    let coeffs: Option<Vec<[Vec<f64>; 4]>> = micro.as_ref().map(|m| fields.iter().map(|f| ce_coefficients(f, h, m.theta_ref)).collect());
    let localized: Vec<f64> = perts.iter().map(|p| localized_integral(p, &localizer)).collect();
    let loc_running = running_integral(&times, &localized);
    let mut samples = Vec::with_capacity(snaps.len());
    for k in 0..snaps.len() {
        weights.push(times[k], q3[k].total())?;
        let q = weights.q_checked(times[k])?;
        let micro_jets: Option<Vec<AlphaJet>> = coeffs.as_ref().map(|c| {
            let (k0, slot) = window(k, snaps.len());
            (0..4).map(|j| alpha_jet([&c[k0][j], &c[k0 + 1][j], &c[k0 + 2][j]], slot, dt, h)).collect()
        });
        let edf =
            compute_e_d_f(&jets.jets[k], micro.as_ref().zip(micro_jets.as_deref()).map(|(m, j)| (m.basis, j)), &weights, times[k], h)?;
        samples.push(EnergySample {
            t: times[k],
            edf,
            q3: q3[k],
            q,
            localized: localized[k],
            localized_running: loc_running[k],
            sup: perts[k].sup(),
        });
    }
    let d: Vec<f64> = samples.iter().map(|s| s.edf.d()).collect();
    let d_integral = *running_integral(&times, &d).last().unwrap_or(&0.0);
    let residual = perturbation_system_residual(snaps, profile)?;
    Ok(EnergyReport { l: weights.l, q1: weights.q1, q2: weights.q2, lambda: localizer.lambda(), samples, d_integral, residual })
}

/// A scalar field h(t, x) sampled at equally spaced times on a spatial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HSeries {
    pub grid: SpatialGrid,
    pub t: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl HSeries {
    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: SpatialGrid, t: &[f64], f: F) -> Self {
        let values = t.iter().map(|&s| (0..grid.nodes()).map(|i| f(s, grid.x(i))).collect()).collect();
        Self { grid, t: t.to_vec(), values }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalizedBound {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    /// The three right-hand terms.
    pub terms: [f64; 3],
}

/// ∫₀ᵀ∫h²ω² against 4π‖h(0)‖² + 4πλ⁻¹∫₀ᵀ‖hₓ‖² + 8λ∫₀ᵀ(h_t, h𝔤²).
pub fn localized_inequality(h: &HSeries, localizer: &LocalizerPair) -> Result<LocalizedBound> {
    let dt = check_spacing(&h.t)?;
    if h.values.len() != h.t.len() || h.values.iter().any(|v| v.len() != h.grid.nodes()) {
        return Err(Error::Shape("h samples do not match the time and space grids".into()));
    }
    let g = h.grid;
    let dx = g.dx();
    let lam = localizer.lambda();
    let n = h.t.len();
    let mut inner = Vec::with_capacity(n);
    let mut hx2 = Vec::with_capacity(n);
    let mut pairing = Vec::with_capacity(n);
    for k in 0..n {
        let (k0, slot) = window(k, n);
        let jet = alpha_jet([&h.values[k0], &h.values[k0 + 1], &h.values[k0 + 2]], slot, dt, dx);
        let t = h.t[k];
        let hv = &jet[0];
        inner.push(trapezoid(g.nodes(), dx, |i| {
            let w = localizer.omega(t, g.x(i));
            hv[i] * hv[i] * w * w
        }));
        hx2.push(l2_sq(&jet[2], dx));
        pairing.push(trapezoid(g.nodes(), dx, |i| {
            let gg = localizer.g(t, g.x(i));
            jet[1][i] * hv[i] * gg * gg
        }));
    }
    let integ = |y: &[f64]| *running_integral(&h.t, y).last().unwrap_or(&0.0);
    let lhs = integ(&inner);
    let terms = [4.0 * PI * l2_sq(&h.values[0], dx), 4.0 * PI / lam * integ(&hx2), 8.0 * lam * integ(&pairing)];
    let rhs = terms.iter().sum::<f64>();
    Ok(LocalizedBound { lhs, rhs, margin: rhs - lhs, terms })
}

/// The standard harness cases: analytic fields plus the fields the weighted
/// macro estimate uses (h = ⅔θ̃ + ⅔p₊ṽ, h = ũᵢ, and ṽ, θ̃ alone) from a run.
pub fn localized_inequality_suite(
    run: &StabilityRun,
    profile: &ContactWaveProfile,
    localizer: &LocalizerPair,
) -> Result<Vec<(String, LocalizedBound)>> {
    let grid = run.snapshots[0].grid;
    let t: Vec<f64> = run.snapshots.iter().map(|s| s.t).collect();
    let mut out = Vec::new();
    let mut push = |name: &str, h: HSeries| -> Result<()> {
        out.push((String::from(name), localized_inequality(&h, localizer)?));
        Ok(())
    };
    push("zero", HSeries::from_fn(grid, &t, |_, _| 0.0))?;
    push("static gaussian", HSeries::from_fn(grid, &t, |_, x| libm::exp(-x * x)))?;
    push("static wide gaussian", HSeries::from_fn(grid, &t, |_, x| libm::exp(-x * x / 100.0)))?;
    push("travelling gaussian", HSeries::from_fn(grid, &t, |s, x| libm::exp(-(x - 0.1 * s) * (x - 0.1 * s) / 4.0)))?;
    push("heat kernel", HSeries::from_fn(grid, &t, |s, x| libm::exp(-x * x / (4.0 * (1.0 + s))) / libm::pow(1.0 + s, 0.25)))?;
    push("decaying tanh bump", HSeries::from_fn(grid, &t, |s, x| (libm::tanh(x + 5.0) - libm::tanh(x - 5.0)) / (1.0 + s)))?;
    let p_plus = profile.p_plus();
    let perts: Vec<PerturbationState> = run.snapshots.iter().map(|s| PerturbationState::new(s, profile)).collect();
    let series = |f: &dyn Fn(&PerturbationState, usize) -> f64| HSeries {
        grid,
        t: t.clone(),
        values: perts.iter().map(|p| (0..grid.nodes()).map(|i| f(p, i)).collect()).collect(),
    };
    push("h = 2/3 theta + 2/3 p+ v", series(&|p, i| 2.0 / 3.0 * p.fields[4][i] + 2.0 / 3.0 * p_plus * p.fields[0][i]))?;
    push("h = u1", series(&|p, i| p.fields[1][i]))?;
    push("h = u2", series(&|p, i| p.fields[2][i]))?;
    push("h = u3", series(&|p, i| p.fields[3][i]))?;
    push("h = v", series(&|p, i| p.fields[0][i]))?;
    push("h = theta", series(&|p, i| p.fields[4][i]))?;
    Ok(out)
}

/// ‖𝔤(t,·)‖_∞ from quadrature of ω (the far-right limit) and the largest
/// relative deviation from √π λ^{-1/2} over the given times.
pub fn g_sup_check(localizer: &LocalizerPair, times: &[f64]) -> f64 {
    let exact = localizer.g_sup();
    times
        .iter()
        .map(|&t| {
            let far = 12.0 * libm::sqrt((1.0 + t) / localizer.lambda());
            (localizer.g_quadrature(t, far, 400) - exact).abs() / exact
        })
        .fold(0.0, f64::max)
}
