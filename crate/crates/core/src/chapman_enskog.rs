//! Burnett functions and their L_M-inversions, the Burnett inner-product identities,
//! transport coefficients μ(θ), κ(θ), the velocity-decay check, the
//! microscopic correction Ḡ and the Θ₁ remainder.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::collision_operator::{invert_l_m, DiscreteLandauOperator, InversionOptions, OperatorSettings};
use crate::velocity_space::{ChiBasis, MaxwellianParams, VelocityField, VelocityGrid};
use crate::{Error, Result, R_GAS};

/// Â_j(ξ̂) = ((|ξ̂|² − 5)/2) ξ̂_j.
#[inline]
pub fn hat_a(j: usize, x: [f64; 3]) -> f64 {
    0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2] - 5.0) * x[j]
}

/// B̂_ij(ξ̂) = ξ̂_i ξ̂_j − δ_ij |ξ̂|²/3.
#[inline]
pub fn hat_b(i: usize, j: usize, x: [f64; 3]) -> f64 {
    let d = if i == j { (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / 3.0 } else { 0.0 };
    x[i] * x[j] - d
}

/// Unordered index pairs (i ≤ j) in the order used for storage.
const PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

fn pair_index(i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    PAIRS.iter().position(|&p| p == (a, b)).unwrap_or(0)
}

/// The full family Â, B̂ and A = L_M⁻¹(ÂM), B = L_M⁻¹(B̂M) for one Maxwellian.
#[derive(Debug, Clone)]
pub struct BurnettSet {
    params: MaxwellianParams,
    hat_a: [VelocityField; 3],
    hat_b: [VelocityField; 6],
    a: [VelocityField; 3],
    b: [VelocityField; 6],
    tol: f64,
    /// Largest Krylov iteration count over the nine solves.
    pub max_iterations: usize,
    /// Largest |P0(ĥM)|/|ĥM| removed from the right-hand sides.
    pub rhs_macro_fraction: f64,
}

fn hat_fields(params: &MaxwellianParams, grid: &Arc<VelocityGrid>) -> ([VelocityField; 3], [VelocityField; 6]) {
    let ha = core::array::from_fn(|j| VelocityField::from_fn(grid.clone(), |x| hat_a(j, params.hat(x))));
    let hb = core::array::from_fn(|p| {
        let (i, j) = PAIRS[p];
        VelocityField::from_fn(grid.clone(), |x| hat_b(i, j, params.hat(x)))
    });
    (ha, hb)
}

/// Solves L_M X = P1(ĥM). ĥM is microscopic in the continuum; on a grid its
/// macroscopic part is quadrature error, returned as a fraction of ‖ĥM‖.
fn invert_times_m(op: &DiscreteLandauOperator, hat: &VelocityField, opts: InversionOptions) -> Result<(VelocityField, usize, f64)> {
    let rhs = hat.mul(op.background());
    let scale = crate::collision_operator::m_inverse_norm(op, &rhs);
    let fraction = if scale > 0.0 { op.chi().macro_size(&rhs) / scale } else { 0.0 };
    let inv = invert_l_m(op, &op.chi().p1(&rhs)?, opts)?;
    Ok((inv.solution, inv.iterations, fraction))
}

/// Solves L_M A_j = Â_j M and L_M B_ij = B̂_ij M on (ker L_M)^⊥.
pub fn build_burnett_set(op: &DiscreteLandauOperator, opts: InversionOptions) -> Result<BurnettSet> {
    let params = *op.params();
    let (hat_a, hat_b) = hat_fields(&params, op.grid());
    let (mut max_iterations, mut rhs_macro_fraction) = (0, 0.0_f64);
    let mut solve = |h: &VelocityField| -> Result<VelocityField> {
        let (x, it, frac) = invert_times_m(op, h, opts)?;
        max_iterations = max_iterations.max(it);
        rhs_macro_fraction = rhs_macro_fraction.max(frac);
        Ok(x)
    };
    let a = [solve(&hat_a[0])?, solve(&hat_a[1])?, solve(&hat_a[2])?];
    let b = [solve(&hat_b[0])?, solve(&hat_b[1])?, solve(&hat_b[2])?, solve(&hat_b[3])?, solve(&hat_b[4])?, solve(&hat_b[5])?];
    Ok(BurnettSet { params, hat_a, hat_b, a, b, tol: opts.tol, max_iterations, rhs_macro_fraction })
}

impl BurnettSet {
    pub fn params(&self) -> &MaxwellianParams {
        &self.params
    }
    pub fn tol(&self) -> f64 {
        self.tol
    }
    pub fn hat_a(&self, j: usize) -> &VelocityField {
        &self.hat_a[j]
    }
    pub fn hat_b(&self, i: usize, j: usize) -> &VelocityField {
        &self.hat_b[pair_index(i, j)]
    }
    pub fn a(&self, j: usize) -> &VelocityField {
        &self.a[j]
    }
    pub fn b(&self, i: usize, j: usize) -> &VelocityField {
        &self.b[pair_index(i, j)]
    }

    /// ⟨Â_i, A_j⟩ = ∫ Â_i A_j dξ.
    pub fn aa(&self, i: usize, j: usize) -> f64 {
        self.hat_a[i].inner(&self.a[j])
    }
    /// ⟨Â_i, B_jk⟩.
    pub fn ab(&self, i: usize, j: usize, k: usize) -> f64 {
        self.hat_a[i].inner(self.b(j, k))
    }
    /// ⟨B̂_ij, B_kl⟩.
    pub fn bb(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.hat_b(i, j).inner(self.b(k, l))
    }
}

/// (μ(θ), κ(θ)) from μ = −Rθ∫B̂_12 B_12, κ = −R²θ∫Â_1 A_1.
pub fn transport_coefficients(bs: &BurnettSet) -> Result<(f64, f64)> {
    let theta = bs.params.theta;
    let mu = -R_GAS * theta * bs.bb(0, 1, 0, 1);
    let kappa = -R_GAS * R_GAS * theta * bs.aa(0, 0);
    if !(mu > 0.0 && kappa > 0.0) {
        return Err(Error::Discretization(format!("transport coefficients not positive: μ = {mu}, κ = {kappa}")));
    }
    Ok((mu, kappa))
}

/// One Burnett identity as checked on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub name: String,
    /// Worst relative deviation from the statement (0 for sign-only checks that pass).
    pub deviation: f64,
    pub tolerance: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityTolerances {
    /// Cross terms relative to the diagonal scale.
    pub cross: f64,
    /// Index independence, relative.
    pub index: f64,
    /// The isotropy identity ⟨B̂ii,Bii⟩ − ⟨B̂ii,Bjj⟩ = 2⟨B̂ij,Bij⟩, relative.
    pub isotropy: f64,
}

impl Default for IdentityTolerances {
    fn default() -> Self {
        Self { cross: 1e-4, index: 1e-3, isotropy: 0.1 }
    }
}

fn spread(vals: &[f64]) -> f64 {
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let dev = vals.iter().fold(0.0_f64, |m, v| m.max((v - mean).abs()));
    dev / mean.abs().max(f64::MIN_POSITIVE)
}

fn identity(name: &str, deviation: f64, tolerance: f64, sign_ok: bool) -> IdentityCheck {
    IdentityCheck { name: name.into(), deviation, tolerance, holds: sign_ok && deviation <= tolerance }
}

/// The eight inner-product identities of the Burnett functions.
///
/// The fifth is checked in the form the other identities force: since B̂ is
/// trace-free, Σ_j ⟨B̂_ii, B_jj⟩ = 0, and with the remaining index symmetry
/// ⟨B̂_ii, B_jj⟩ = −½⟨B̂_ii, B_ii⟩ for i ≠ j, which is *positive*. So
/// ⟨B̂_ii, B_jj⟩ (not its negative) is positive and index independent.
pub fn burnett_identities(bs: &BurnettSet, tol: IdentityTolerances) -> Vec<IdentityCheck> {
    let off = |i: usize, j: usize| i != j;
    let da = (0..3).map(|i| bs.aa(i, i).abs()).sum::<f64>() / 3.0;
    let db = (0..3).map(|i| bs.bb(i, i, i, i).abs()).fold(0.0, f64::max).max(bs.bb(0, 1, 0, 1).abs());
    let dab = libm::sqrt(da * db);
    let mut out = Vec::new();

    let aii: Vec<f64> = (0..3).map(|i| -bs.aa(i, i)).collect();
    out.push(identity("-<Ai^,Ai> positive and independent of i", spread(&aii), tol.index, aii.iter().all(|v| *v > 0.0)));

    let mut cross = 0.0_f64;
    for i in 0..3 {
        for j in 0..3 {
            if off(i, j) {
                cross = cross.max(bs.aa(i, j).abs() / da);
            }
            for k in 0..3 {
                cross = cross.max(bs.ab(i, j, k).abs() / dab);
            }
        }
    }
    out.push(identity("<Ai^,Aj> = 0 (i != j), <Ai^,Bjk> = 0", cross, tol.cross, true));

    let mut sym = 0.0_f64;
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    let v = bs.bb(i, j, k, l);
                    sym = sym.max((v - bs.bb(k, l, i, j)).abs() / db);
                    sym = sym.max((v - bs.bb(j, i, k, l)).abs() / db);
                }
            }
        }
    }
    out.push(identity("<Bij^,Bkl> = <Bkl^,Bij> = <Bji^,Bkl>", sym, tol.cross, true));

    let bij: Vec<f64> = [(0, 1), (0, 2), (1, 2), (1, 0), (2, 0), (2, 1)].iter().map(|&(i, j)| -bs.bb(i, j, i, j)).collect();
    out.push(identity("-<Bij^,Bij> positive and independent of i != j", spread(&bij), tol.index, bij.iter().all(|v| *v > 0.0)));

    let bii_jj: Vec<f64> = [(0, 1), (0, 2), (1, 2), (1, 0), (2, 0), (2, 1)].iter().map(|&(i, j)| bs.bb(i, i, j, j)).collect();
    let half: f64 = (0..3).map(|i| -0.5 * bs.bb(i, i, i, i)).sum::<f64>() / 3.0;
    let trace_dev = bii_jj.iter().fold(0.0_f64, |m, v| m.max((v - half).abs())) / db;
    out.push(identity(
        "<Bii^,Bjj> positive, independent of i != j, equal to -<Bii^,Bii>/2",
        spread(&bii_jj).max(trace_dev),
        tol.index,
        bii_jj.iter().all(|v| *v > 0.0),
    ));

    let bii: Vec<f64> = (0..3).map(|i| -bs.bb(i, i, i, i)).collect();
    out.push(identity("-<Bii^,Bii> positive and independent of i", spread(&bii), tol.index, bii.iter().all(|v| *v > 0.0)));

    let mut zero = 0.0_f64;
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    let allowed = (i, j) == (k, l) || (i, j) == (l, k) || (i == j && k == l);
                    if !allowed {
                        zero = zero.max(bs.bb(i, j, k, l).abs() / db);
                    }
                }
            }
        }
    }
    out.push(identity("<Bij^,Bkl> = 0 unless (i,j) in {(k,l),(l,k)} or i=j, k=l", zero, tol.cross, true));

    let mut iso = 0.0_f64;
    for i in 0..3 {
        for j in 0..3 {
            if off(i, j) {
                let lhs = bs.bb(i, i, i, i) - bs.bb(i, i, j, j);
                let rhs = 2.0 * bs.bb(i, j, i, j);
                iso = iso.max((lhs - rhs).abs() / rhs.abs());
            }
        }
    }
    out.push(identity("<Bii^,Bii> - <Bii^,Bjj> = 2<Bij^,Bij>", iso, tol.isotropy, true));
    out
}

/// Smallest C with |∂^β A_j| + |∂^β B_ij| ≤ C M^{1−ε} on the grid, for one β.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayBound {
    /// None for β = 0, Some(axis) for ∂_{ξ_axis}.
    pub derivative: Option<usize>,
    pub c_beta: f64,
    /// Largest ratio beyond the inscribed ball |ξ − u| > half-width (the
    /// corner regions) vs. inside it.
    pub outer_max: f64,
    pub inner_max: f64,
    /// The ratio does not grow into the corner regions.
    pub bounded: bool,
}

/// Checks |∂^β A_j| + |∂^β B_ij| ≤ C_β M^{1−ε} for |β| ≤ 1, summing over
/// all j and i ≤ j.
///
/// On a finite grid any maximum is finite, so "bounded" means the supremum
/// is attained inside the inscribed ball: the corners reach out to √3 times
/// its radius, far enough for a ratio that grows like a Gaussian to dominate
/// there. Derivatives are taken as ∂F = M ∂(F/M) + F ∂log M, differencing
/// the slowly varying F/M; plain differences of a Gaussian tail on a coarse
/// grid are off by factors of e^{h|ξ̂|}.
pub fn decay_check(bs: &BurnettSet, eps: f64) -> Vec<DecayBound> {
    let grid = bs.a[0].grid().clone();
    let p = bs.params;
    let m: Vec<f64> = (0..grid.len()).map(|a| p.eval(grid.node(a))).collect();
    let fields: Vec<&VelocityField> = bs.a.iter().chain(bs.b.iter()).collect();
    let radius2 = grid.half_width() * grid.half_width();
    let outer: Vec<bool> = (0..grid.len())
        .map(|a| {
            let x = grid.node(a);
            (0..3).map(|k| (x[k] - p.u[k]) * (x[k] - p.u[k])).sum::<f64>() > radius2
        })
        .collect();
    let mut out = Vec::new();
    for deriv in [None, Some(0), Some(1), Some(2)] {
        let mut total = alloc::vec![0.0; grid.len()];
        for f in &fields {
            let vals = match deriv {
                None => f.values().to_vec(),
                Some(ax) => {
                    let ratio: Vec<f64> = f.values().iter().zip(&m).map(|(a, b)| a / b).collect();
                    let d = grid.derivative(&ratio, ax);
                    (0..grid.len()).map(|a| m[a] * d[a] - f.values()[a] * (grid.node(a)[ax] - p.u[ax]) / p.rtheta()).collect()
                }
            };
            total.iter_mut().zip(&vals).for_each(|(t, v)| *t += v.abs());
        }
        let (mut omax, mut imax) = (0.0_f64, 0.0_f64);
        for a in 0..grid.len() {
            let r = total[a] / libm::pow(m[a], 1.0 - eps);
            if outer[a] {
                omax = omax.max(r);
            } else {
                imax = imax.max(r);
            }
        }
        out.push(DecayBound {
            derivative: deriv,
            c_beta: omax.max(imax),
            outer_max: omax,
            inner_max: imax,
            bounded: omax.is_finite() && omax <= imax,
        });
    }
    out
}

/// A(ξ̂), B(ξ̂) for one tabulated temperature, stored as ratios to the
/// standard normal density so that they can be interpolated smoothly.
#[derive(Debug, Clone)]
pub struct TransportEntry {
    pub theta: f64,
    pub mu: f64,
    pub kappa: f64,
    /// A₁/μ̂, B₁₁/μ̂, B₁₂/μ̂, B₁₃/μ̂ on the ξ̂ lattice.
    ratios: [Vec<f64>; 4],
    pub iterations: usize,
}

impl TransportEntry {
    /// Rebuilds an entry from stored parts (e.g. an operator cache).
    pub fn from_parts(theta: f64, mu: f64, kappa: f64, ratios: [Vec<f64>; 4], iterations: usize) -> Self {
        Self { theta, mu, kappa, ratios, iterations }
    }

    pub fn ratios(&self) -> &[Vec<f64>; 4] {
        &self.ratios
    }
}

/// Burnett functions on a θ-grid, solved at u = 0, v = 1 on thermally scaled
/// grids (one and the same lattice in ξ̂ = ξ/√(Rθ)).
#[derive(Debug, Clone)]
pub struct BurnettTable {
    hat_grid: Arc<VelocityGrid>,
    entries: Vec<TransportEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableSettings {
    pub hat_half_width: f64,
    pub n: usize,
    pub inversion: InversionOptions,
    pub operator: OperatorSettings,
}

impl Default for TableSettings {
    fn default() -> Self {
        Self { hat_half_width: 7.0, n: 16, inversion: InversionOptions::default(), operator: OperatorSettings::default() }
    }
}

/// The default temperature grid {1.0, 1.25, …, 3.0}.
pub fn default_thetas() -> Vec<f64> {
    (0..9).map(|k| 1.0 + 0.25 * k as f64).collect()
}

fn std_normal(x: [f64; 3]) -> f64 {
    libm::exp(-0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2])) / libm::pow(2.0 * core::f64::consts::PI, 1.5)
}

impl BurnettTable {
    /// Solves A₁, B₁₁, B₁₂ per temperature; B₁₃ is B₁₂ with ξ₂ ↔ ξ₃, an exact
    /// symmetry of the cubic lattice.
    pub fn build(thetas: &[f64], settings: TableSettings) -> Result<Self> {
        if thetas.is_empty() {
            return Err(Error::Precondition("empty temperature grid".into()));
        }
        let hat_grid = Arc::new(VelocityGrid::new(settings.hat_half_width, settings.n)?);
        let mut entries = Vec::with_capacity(thetas.len());
        for &theta in thetas {
            let params = MaxwellianParams::new(1.0, [0.0; 3], theta)?;
            let grid = Arc::new(VelocityGrid::thermal(settings.hat_half_width, settings.n, theta)?);
            let op = DiscreteLandauOperator::new(grid.clone(), params, settings.operator)?;
            let (ha, hb) = hat_fields(&params, &grid);
            let (a1, i1, _) = invert_times_m(&op, &ha[0], settings.inversion)?;
            let (b11, i2, _) = invert_times_m(&op, &hb[0], settings.inversion)?;
            let (b12, i3, _) = invert_times_m(&op, &hb[3], settings.inversion)?;
            let mu = -R_GAS * theta * hb[3].inner(&b12);
            let kappa = -R_GAS * R_GAS * theta * ha[0].inner(&a1);
            if !(mu > 0.0 && kappa > 0.0) {
                return Err(Error::Discretization(format!("θ = {theta}: μ = {mu}, κ = {kappa}")));
            }
            let ratio = |f: &VelocityField| -> Vec<f64> { (0..grid.len()).map(|a| f.values()[a] / std_normal(hat_grid.node(a))).collect() };
            let r12 = ratio(&b12);
            let n = settings.n;
            let r13 = (0..grid.len())
                .map(|a| {
                    let (i, j, k) = hat_grid.triple(a);
                    r12[(i * n + k) * n + j]
                })
                .collect();
            entries.push(TransportEntry { theta, mu, kappa, ratios: [ratio(&a1), ratio(&b11), r12, r13], iterations: i1.max(i2).max(i3) });
        }
        Ok(Self { hat_grid, entries })
    }

    /// Reassembles a table from stored entries on the ξ̂ lattice (half-width, n).
    pub fn from_parts(hat_half_width: f64, n: usize, entries: Vec<TransportEntry>) -> Result<Self> {
        let hat_grid = Arc::new(VelocityGrid::new(hat_half_width, n)?);
        if entries.is_empty() || entries.iter().any(|e| e.ratios.iter().any(|r| r.len() != hat_grid.len())) {
            return Err(Error::Shape("table entries do not match the ξ̂ lattice".into()));
        }
        Ok(Self { hat_grid, entries })
    }

    pub fn entries(&self) -> &[TransportEntry] {
        &self.entries
    }

    pub fn hat_grid(&self) -> &Arc<VelocityGrid> {
        &self.hat_grid
    }

    fn nearest(&self, theta: f64) -> &TransportEntry {
        self.entries.iter().min_by(|a, b| (a.theta - theta).abs().total_cmp(&(b.theta - theta).abs())).unwrap_or(&self.entries[0])
    }

    /// (A₁, B₁₁, B₁₂, B₁₃) at ξ̂, from the entry nearest to θ; zero outside the lattice.
    pub fn eval(&self, theta: f64, xh: [f64; 3]) -> [f64; 4] {
        let e = self.nearest(theta);
        let g = &self.hat_grid;
        let n = g.n();
        let (l, h) = (g.half_width(), g.spacing());
        if xh.iter().any(|c| c.abs() > l) {
            return [0.0; 4];
        }
        // Four-point Lagrange stencil per axis.
        let stencil = |x: f64| -> (usize, [f64; 4]) {
            let s = (x + l) / h;
            let i0 = (libm::floor(s) as isize - 1).clamp(0, n as isize - 4) as usize;
            let t = s - i0 as f64;
            let w = [
                -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0,
                t * (t - 2.0) * (t - 3.0) / 2.0,
                -t * (t - 1.0) * (t - 3.0) / 2.0,
                t * (t - 1.0) * (t - 2.0) / 6.0,
            ];
            (i0, w)
        };
        let (si, wi) = stencil(xh[0]);
        let (sj, wj) = stencil(xh[1]);
        let (sk, wk) = stencil(xh[2]);
        let base = std_normal(xh);
        core::array::from_fn(|q| {
            let r = &e.ratios[q];
            let mut s = 0.0;
            for a in 0..4 {
                for b in 0..4 {
                    for c in 0..4 {
                        s += wi[a] * wj[b] * wk[c] * r[((si + a) * n + sj + b) * n + sk + c];
                    }
                }
            }
            s * base
        })
    }

    /// Transport coefficients at θ by log-linear interpolation between entries.
    pub fn mu_kappa(&self, theta: f64) -> (f64, f64) {
        let es = &self.entries;
        if es.len() == 1 {
            let s = libm::pow(theta / es[0].theta, 2.5);
            return (es[0].mu * s, es[0].kappa * s);
        }
        let k = es.iter().position(|e| e.theta >= theta).unwrap_or(es.len() - 1).clamp(1, es.len() - 1);
        let (a, b) = (&es[k - 1], &es[k]);
        let t = (libm::log(theta) - libm::log(a.theta)) / (libm::log(b.theta) - libm::log(a.theta));
        let lerp = |x: f64, y: f64| libm::exp(libm::log(x) + t * (libm::log(y) - libm::log(x)));
        (lerp(a.mu, b.mu), lerp(a.kappa, b.kappa))
    }
}

/// Chapman–Enskog G = (1/v)[√R θ_x/√θ A₁(ξ̂) + Σ_j u_jx B_1j(ξ̂)] at one cell.
pub fn chapman_enskog_g(
    table: &BurnettTable,
    grid: &Arc<VelocityGrid>,
    params: &MaxwellianParams,
    theta_x: f64,
    u_x: [f64; 3],
) -> VelocityField {
    let ca = libm::sqrt(R_GAS) * theta_x / libm::sqrt(params.theta) / params.v;
    let cb = u_x.map(|d| d / params.v);
    VelocityField::from_fn(grid.clone(), |x| {
        if ca == 0.0 && cb.iter().all(|c| *c == 0.0) {
            return 0.0;
        }
        let [a1, b11, b12, b13] = table.eval(params.theta, params.hat(x));
        ca * a1 + cb[0] * b11 + cb[1] * b12 + cb[2] * b13
    })
}

/// Ḡ = (1/v)(√R θ̄_x/√θ) A₁(ξ̂) + (1/v) ū_1x B₁₁(ξ̂) per cell, with (v, u, θ)
/// the actual local state and θ̄_x, ū_1x the wave gradients, followed by the
/// local P1 so that P0Ḡ = 0 holds exactly on the evaluation grid. The
/// returned `raw_macro_fraction` records how far the interpolated field was
/// from microscopic before that projection.
#[derive(Debug, Clone)]
pub struct GbarField {
    pub cells: Vec<VelocityField>,
    pub raw_macro_fraction: f64,
}

pub fn reconstruct_gbar(
    states: &[MaxwellianParams],
    theta_bar_x: &[f64],
    u1_bar_x: &[f64],
    table: &BurnettTable,
    grid: &Arc<VelocityGrid>,
) -> Result<GbarField> {
    if states.len() != theta_bar_x.len() || states.len() != u1_bar_x.len() {
        return Err(Error::Shape("state and wave-gradient arrays differ in length".into()));
    }
    let mut cells = Vec::with_capacity(states.len());
    let mut worst = 0.0_f64;
    for (k, p) in states.iter().enumerate() {
        let raw = chapman_enskog_g(table, grid, p, theta_bar_x[k], [u1_bar_x[k], 0.0, 0.0]);
        if raw.max_abs() == 0.0 {
            cells.push(raw);
            continue;
        }
        let m = crate::velocity_space::build_maxwellian(p, grid)?;
        let chi = ChiBasis::unchecked(p, &m)?;
        let mnorm = libm::sqrt(crate::sum::pairwise_by(m.values().len(), &|a| {
            grid.weights()[a] * raw.values()[a] * raw.values()[a] / m.values()[a]
        }));
        worst = worst.max(chi.macro_size(&raw) / mnorm);
        cells.push(chi.p1(&raw)?);
    }
    Ok(GbarField { cells, raw_macro_fraction: worst })
}

/// Θ₁ = G_t − (u₁/v)G_x + (1/v)P₁(ξ₁G_x) − Q(G,G) at the middle of three
/// equally spaced time levels, on interior cells of a uniform x-grid.
///
/// `g_levels[s][x]` is G at time level s and cell x; `states[x]` is the fluid
/// state at the middle level. Boundary cells get Θ₁ = −Q(G,G) plus the
/// one-sided terms dropped, i.e. they are returned as zero fields.
pub fn evaluate_theta1(
    g_levels: &[Vec<VelocityField>],
    states: &[MaxwellianParams],
    dt: f64,
    dx: f64,
    op: &DiscreteLandauOperator,
) -> Result<Vec<VelocityField>> {
    if g_levels.len() < 3 {
        return Err(Error::Precondition(format!("need 3 time levels, got {}", g_levels.len())));
    }
    let nx = states.len();
    if g_levels.iter().take(3).any(|l| l.len() != nx) {
        return Err(Error::Shape("time levels and state series differ in cell count".into()));
    }
    let grid = op.grid().clone();
    let (gm, g0, gp) = (&g_levels[0], &g_levels[1], &g_levels[2]);
    let mut out = Vec::with_capacity(nx);
    for x in 0..nx {
        if x == 0 || x + 1 == nx {
            out.push(VelocityField::zeros(grid.clone()));
            continue;
        }
        let p = &states[x];
        let gt = gp[x].axpy(-1.0, &gm[x]).scaled(0.5 / dt);
        let gx = g0[x + 1].axpy(-1.0, &g0[x - 1]).scaled(0.5 / dx);
        let xi1_gx = VelocityField::from_fn(grid.clone(), |xi| xi[0]).mul(&gx);
        let m = crate::velocity_space::build_maxwellian(p, &grid)?;
        let chi = ChiBasis::unchecked(p, &m)?;
        let p1 = chi.p1(&xi1_gx)?;
        let q = op.apply_q(&g0[x], &g0[x])?;
        let theta1 = gt.axpy(-p.u[0] / p.v, &gx).axpy(1.0 / p.v, &p1).axpy(-1.0, &q);
        out.push(theta1);
    }
    Ok(out)
}

/// μ(θ), κ(θ) as exp(c₀ + c₁ ln θ + c₂ ln²θ). A pure power law has c₂ = 0;
/// fitting the table gives a smooth law with derivatives of every order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transport {
    pub mu: [f64; 3],
    pub kappa: [f64; 3],
}

/// How κ (and μ) enter the fluid model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KappaMode {
    /// μ₀θ^{5/2}, κ₀θ^{5/2} calibrated at one temperature.
    PowerLaw,
    /// Quadratic fit of ln μ, ln κ against ln θ over the table.
    Tabulated,
}

/// Value and first two θ-derivatives of exp(P(ln θ)).
fn exp_poly(c: &[f64; 3], theta: f64) -> [f64; 3] {
    let l = libm::log(theta);
    let f = libm::exp(c[0] + c[1] * l + c[2] * l * l);
    let p1 = c[1] + 2.0 * c[2] * l;
    let p2 = 2.0 * c[2];
    [f, f * p1 / theta, f * (p1 * p1 + p2 - p1) / (theta * theta)]
}

impl Transport {
    pub fn power_law(mu0: f64, kappa0: f64) -> Result<Self> {
        if !(mu0 > 0.0 && kappa0 > 0.0) {
            return Err(Error::Domain(format!("power-law prefactors must be positive: μ₀ = {mu0}, κ₀ = {kappa0}")));
        }
        Ok(Self { mu: [libm::log(mu0), 2.5, 0.0], kappa: [libm::log(kappa0), 2.5, 0.0] })
    }

    /// Power law through (θ, μ, κ) measured at one temperature.
    pub fn calibrated(theta: f64, mu: f64, kappa: f64) -> Result<Self> {
        let s = libm::pow(theta, 2.5);
        Self::power_law(mu / s, kappa / s)
    }

    /// Power law calibrated on one Burnett set.
    pub fn from_burnett_set(bs: &BurnettSet) -> Result<Self> {
        let (mu, kappa) = transport_coefficients(bs)?;
        Self::calibrated(bs.params.theta, mu, kappa)
    }

    /// Least-squares quadratic in ln θ through the table entries.
    pub fn fit_table(table: &BurnettTable) -> Result<Self> {
        let es = table.entries();
        if es.len() < 3 {
            return Err(Error::Precondition("a tabulated law needs at least three temperatures".into()));
        }
        let xs: Vec<f64> = es.iter().map(|e| libm::log(e.theta)).collect();
        let fit = |ys: Vec<f64>| quadratic_fit(&xs, &ys);
        Ok(Self { mu: fit(es.iter().map(|e| libm::log(e.mu)).collect())?, kappa: fit(es.iter().map(|e| libm::log(e.kappa)).collect())? })
    }

    pub fn with_kappa_scaled(mut self, s: f64) -> Self {
        self.kappa[0] += libm::log(s);
        self
    }

    pub fn mu(&self, theta: f64) -> f64 {
        exp_poly(&self.mu, theta)[0]
    }

    pub fn kappa(&self, theta: f64) -> f64 {
        exp_poly(&self.kappa, theta)[0]
    }

    /// μ, μ', μ''.
    pub fn mu_derivs(&self, theta: f64) -> [f64; 3] {
        exp_poly(&self.mu, theta)
    }

    /// κ, κ', κ''.
    pub fn kappa_derivs(&self, theta: f64) -> [f64; 3] {
        exp_poly(&self.kappa, theta)
    }

    /// a(θ) = 9κ(θ)p₊/(10θ) and its first two derivatives.
    pub fn diffusivity(&self, theta: f64, p_plus: f64) -> [f64; 3] {
        let [k, k1, k2] = self.kappa_derivs(theta);
        let c = 0.9 * p_plus;
        let t = theta;
        [c * k / t, c * (k1 / t - k / (t * t)), c * (k2 / t - 2.0 * k1 / (t * t) + 2.0 * k / (t * t * t))]
    }
}

fn quadratic_fit(xs: &[f64], ys: &[f64]) -> Result<[f64; 3]> {
    // Normal equations, solved by Cramer's rule; 3×3 is well within range.
    let mut m = [[0.0; 3]; 3];
    let mut r = [0.0; 3];
    for (&x, &y) in xs.iter().zip(ys) {
        let p = [1.0, x, x * x];
        for i in 0..3 {
            r[i] += p[i] * y;
            for j in 0..3 {
                m[i][j] += p[i] * p[j];
            }
        }
    }
    let det = |a: &[[f64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let d = det(&m);
    if d.abs() < 1e-14 {
        return Err(Error::Degenerate("temperatures too close for a quadratic fit".into()));
    }
    let mut c = [0.0; 3];
    for (k, ck) in c.iter_mut().enumerate() {
        let mut mk = m;
        for i in 0..3 {
            mk[i][k] = r[i];
        }
        *ck = det(&mk) / d;
    }
    Ok(c)
}
