//! Lagrangian compressible Navier–Stokes with Chapman–Enskog transport, the
//! hydrodynamic proxy for stability of the contact wave: explicit RK4 on
//! (v, u, E = θ + |u|²/2) with conservative central differences.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::chapman_enskog::Transport;
use crate::contact_wave::ContactWaveProfile;
use crate::energy_diagnostics::LocalizerPair;
use crate::{Error, Result, R_GAS};

/// Uniform Lagrangian grid: nodes x_i = −X + iΔx, i = 0..=cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    pub half_width: f64,
    pub cells: usize,
}

impl SpatialGrid {
    pub fn new(half_width: f64, cells: usize) -> Result<Self> {
        if !(half_width > 0.0) || cells < 4 {
            return Err(Error::Precondition(format!("grid needs X > 0 and at least 4 cells, got X = {half_width}, {cells} cells")));
        }
        Ok(Self { half_width, cells })
    }

    /// X = 200, 4000 cells.
    pub fn default_run() -> Self {
        Self { half_width: 200.0, cells: 4000 }
    }

    pub fn nodes(&self) -> usize {
        self.cells + 1
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.cells as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.half_width + self.dx() * i as f64
    }
}

/// Fluid fields on the grid at time t; the end nodes carry the far fields.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroState {
    pub grid: SpatialGrid,
    pub t: f64,
    pub v: Vec<f64>,
    pub u: [Vec<f64>; 3],
    pub theta: Vec<f64>,
}

impl MacroState {
    pub fn constant(grid: SpatialGrid, v: f64, u: [f64; 3], theta: f64) -> Self {
        let n = grid.nodes();
        Self { grid, t: 0.0, v: vec![v; n], u: [vec![u[0]; n], vec![u[1]; n], vec![u[2]; n]], theta: vec![theta; n] }
    }

    /// The contact wave at time t sampled on the grid.
    pub fn from_profile(grid: SpatialGrid, profile: &ContactWaveProfile, t: f64) -> Self {
        let n = grid.nodes();
        let mut s = Self::constant(grid, 1.0, [0.0; 3], 1.0);
        s.t = t;
        for i in 0..n {
            let [v, u1, th] = profile.state(t, grid.x(i));
            s.v[i] = v;
            s.u[0][i] = u1;
            s.theta[i] = th;
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.grid.nodes();
        if self.v.len() != n || self.theta.len() != n || self.u.iter().any(|c| c.len() != n) {
            return Err(Error::Shape(format!("fields do not match the {n}-node grid")));
        }
        check_positive(self.t, &self.v, &self.theta)
    }

    pub fn pressure(&self, i: usize) -> f64 {
        R_GAS * self.theta[i] / self.v[i]
    }

    /// Trapezoidal ∫ of a nodal quantity.
    pub fn integrate<F: Fn(usize) -> f64>(&self, f: F) -> f64 {
        trapezoid(self.grid.nodes(), self.grid.dx(), f)
    }
}

pub(crate) fn trapezoid<F: Fn(usize) -> f64>(n: usize, dx: f64, f: F) -> f64 {
    let g = |i: usize| if i == 0 || i + 1 == n { 0.5 * f(i) } else { f(i) };
    crate::sum::pairwise_by(n, &g) * dx
}

fn check_positive(t: f64, v: &[f64], theta: &[f64]) -> Result<()> {
    for (i, (&vi, &ti)) in v.iter().zip(theta).enumerate() {
        if !(vi > 0.0 && ti > 0.0) || !vi.is_finite() || !ti.is_finite() {
            return Err(Error::BlowUp { t, cell: i, detail: format!("v = {vi}, θ = {ti}") });
        }
    }
    Ok(())
}

/// μ(θ), κ(θ) with a fast path for θ^{5/2} laws.
#[derive(Debug, Clone, Copy)]
struct Coefficients {
    transport: Transport,
    power: Option<(f64, f64)>,
}

impl Coefficients {
    fn new(transport: Transport) -> Self {
        let pure = |c: &[f64; 3]| c[1] == 2.5 && c[2] == 0.0;
        let power = (pure(&transport.mu) && pure(&transport.kappa)).then(|| (libm::exp(transport.mu[0]), libm::exp(transport.kappa[0])));
        Self { transport, power }
    }

    #[inline]
    fn eval(&self, theta: f64) -> (f64, f64) {
        match self.power {
            Some((m, k)) => {
                let s = theta * theta * libm::sqrt(theta);
                (m * s, k * s)
            }
            None => (self.transport.mu(theta), self.transport.kappa(theta)),
        }
    }
}

/// Largest admissible step 0.4Δx² min v / max(4μ/3, κ), extrema over the grid.
pub fn stable_dt(state: &MacroState, transport: &Transport) -> f64 {
    let c = Coefficients::new(*transport);
    let mut coef: f64 = 0.0;
    let mut v_min = f64::INFINITY;
    for i in 0..state.grid.nodes() {
        let (mu, ka) = c.eval(state.theta[i]);
        coef = coef.max((4.0 * mu / 3.0).max(ka));
        v_min = v_min.min(state.v[i]);
    }
    let dx = state.grid.dx();
    0.4 * dx * dx * v_min / coef
}

/// A source added to the rates of (v, u₁, u₂, u₃, E), e.g. for manufactured solutions.
pub type Source = Box<dyn Fn(f64, f64) -> [f64; 5] + Send + Sync>;

/// Explicit RK4 stepper with reusable work arrays. u and θ are pinned at the
/// end nodes (Dirichlet far fields); v there evolves by the mass equation.
pub struct Integrator {
    grid: SpatialGrid,
    coeffs: Coefficients,
    source: Option<Source>,
    t: f64,
    y: [Vec<f64>; 5],
    stage: [Vec<f64>; 5],
    k: [Vec<f64>; 5],
    acc: [Vec<f64>; 5],
    theta: Vec<f64>,
    p: Vec<f64>,
    m: Vec<f64>,
    kh: Vec<f64>,
    faces: [Vec<f64>; 4],
    /// max max(4μ/3, κ) and min v at the last right-hand side evaluation.
    coef_max: f64,
    v_min: f64,
}

impl Integrator {
    pub fn new(state: &MacroState, transport: Transport) -> Result<Self> {
        state.validate()?;
        let n = state.grid.nodes();
        let e: Vec<f64> = (0..n)
            .map(|i| state.theta[i] + 0.5 * (state.u[0][i] * state.u[0][i] + state.u[1][i] * state.u[1][i] + state.u[2][i] * state.u[2][i]))
            .collect();
        let zeros = || vec![0.0; n];
        let fields = || [zeros(), zeros(), zeros(), zeros(), zeros()];
        Ok(Self {
            grid: state.grid,
            coeffs: Coefficients::new(transport),
            source: None,
            t: state.t,
            y: [state.v.clone(), state.u[0].clone(), state.u[1].clone(), state.u[2].clone(), e],
            stage: fields(),
            k: fields(),
            acc: fields(),
            theta: zeros(),
            p: zeros(),
            m: zeros(),
            kh: zeros(),
            faces: [zeros(), zeros(), zeros(), zeros()],
            coef_max: 0.0,
            v_min: 0.0,
        })
    }

    pub fn with_source(mut self, source: Source) -> Self {
        self.source = Some(source);
        self
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> MacroState {
        let n = self.grid.nodes();
        let [v, u1, u2, u3, e] = &self.y;
        let theta = (0..n).map(|i| e[i] - 0.5 * (u1[i] * u1[i] + u2[i] * u2[i] + u3[i] * u3[i])).collect();
        MacroState { grid: self.grid, t: self.t, v: v.clone(), u: [u1.clone(), u2.clone(), u3.clone()], theta }
    }

    /// Step bound for the current fields.
    pub fn stable_dt(&mut self) -> f64 {
        let y = core::mem::take(&mut self.y);
        let mut scratch = core::mem::take(&mut self.k);
        self.rhs(self.t, &y, &mut scratch);
        self.y = y;
        self.k = scratch;
        let dx = self.grid.dx();
        0.4 * dx * dx * self.v_min / self.coef_max
    }

    fn rhs(&mut self, t: f64, y: &[Vec<f64>; 5], out: &mut [Vec<f64>; 5]) {
        let n = self.grid.nodes();
        let dx = self.grid.dx();
        let (inv2, inv_sq) = (0.5 / dx, 1.0 / (dx * dx));
        let [v, u1, u2, u3, e] = y;
        let (v, u1, u2, u3, e) = (&v[..n], &u1[..n], &u2[..n], &u3[..n], &e[..n]);
        let mut coef: f64 = 0.0;
        let mut v_min = f64::INFINITY;
        {
            let (th, p, m, kh) = (&mut self.theta[..n], &mut self.p[..n], &mut self.m[..n], &mut self.kh[..n]);
            for i in 0..n {
                let t_i = e[i] - 0.5 * (u1[i] * u1[i] + u2[i] * u2[i] + u3[i] * u3[i]);
                let (mu, ka) = self.coeffs.eval(t_i);
                let iv = 1.0 / v[i];
                th[i] = t_i;
                p[i] = R_GAS * t_i * iv;
                m[i] = mu * iv;
                kh[i] = ka * iv;
                coef = coef.max((4.0 / 3.0 * mu).max(ka));
                v_min = v_min.min(v[i]);
            }
        }
        self.coef_max = coef;
        self.v_min = v_min;
        // Diffusive fluxes at the faces i+1/2, scaled by Δx, stored at index i.
        {
            let (th, m, kh) = (&self.theta[..n], &self.m[..n], &self.kh[..n]);
            let [f1, f2, f3, fe] = &mut self.faces;
            let (f1, f2, f3, fe) = (&mut f1[..n], &mut f2[..n], &mut f3[..n], &mut fe[..n]);
            for i in 0..n - 1 {
                let mf = 0.5 * (m[i] + m[i + 1]);
                let kf = 0.5 * (kh[i] + kh[i + 1]);
                let g1 = mf * (u1[i + 1] - u1[i]);
                let g2 = mf * (u2[i + 1] - u2[i]);
                let g3 = mf * (u3[i + 1] - u3[i]);
                f1[i] = 4.0 / 3.0 * g1;
                f2[i] = g2;
                f3[i] = g3;
                let work = 0.5 * (4.0 / 3.0 * (u1[i] + u1[i + 1]) * g1 + (u2[i] + u2[i + 1]) * g2 + (u3[i] + u3[i + 1]) * g3);
                fe[i] = kf * (th[i + 1] - th[i]) + work;
            }
        }
        let p = &self.p[..n];
        let [f1, f2, f3, fe] = &self.faces;
        let (f1, f2, f3, fe) = (&f1[..n], &f2[..n], &f3[..n], &fe[..n]);
        let [o0, o1, o2, o3, o4] = out;
        let (o0, o1, o2, o3, o4) = (&mut o0[..n], &mut o1[..n], &mut o2[..n], &mut o3[..n], &mut o4[..n]);
        for o in [&mut *o1, &mut *o2, &mut *o3, &mut *o4] {
            o[0] = 0.0;
            o[n - 1] = 0.0;
        }
        // v has zero characteristic speed and takes no boundary value: the end
        // nodes follow v_t = u₁ₓ one-sidedly, which makes the trapezoidal mass
        // telescope exactly. Pinning v there instead opens a growing one-cell
        // jump as soon as an acoustic pulse reaches the end.
        o0[0] = (u1[1] - u1[0]) / dx;
        o0[n - 1] = (u1[n - 1] - u1[n - 2]) / dx;
        for i in 1..n - 1 {
            o0[i] = (u1[i + 1] - u1[i - 1]) * inv2;
            o1[i] = -(p[i + 1] - p[i - 1]) * inv2 + (f1[i] - f1[i - 1]) * inv_sq;
            o2[i] = (f2[i] - f2[i - 1]) * inv_sq;
            o3[i] = (f3[i] - f3[i - 1]) * inv_sq;
            o4[i] = -(p[i + 1] * u1[i + 1] - p[i - 1] * u1[i - 1]) * inv2 + (fe[i] - fe[i - 1]) * inv_sq;
        }
        if let Some(src) = &self.source {
            for i in 1..n - 1 {
                let s = src(t, self.grid.x(i));
                for (f, sv) in out.iter_mut().zip(s) {
                    f[i] += sv;
                }
            }
            for i in [0, n - 1] {
                out[0][i] += src(t, self.grid.x(i))[0];
            }
        }
    }

    /// One classical RK4 step. Errors if dt exceeds the parabolic bound at the
    /// first stage or if v or θ lose positivity.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        let n = self.grid.nodes();
        let y = core::mem::take(&mut self.y);
        let mut k = core::mem::take(&mut self.k);
        let mut stage = core::mem::take(&mut self.stage);
        let mut acc = core::mem::take(&mut self.acc);
        self.rhs(self.t, &y, &mut k);
        let dx = self.grid.dx();
        let bound = 0.4 * dx * dx * self.v_min / self.coef_max;
        if dt > bound * (1.0 + 1e-12) {
            self.y = y;
            self.k = k;
            self.acc = acc;
            self.stage = stage;
            return Err(Error::Cfl { dt, bound });
        }
        // Accumulator form of classical RK4: one slope buffer, fused updates.
        let half = 0.5 * dt;
        for f in 0..5 {
            for (((st, ac), yv), kv) in stage[f].iter_mut().zip(acc[f].iter_mut()).zip(&y[f]).zip(&k[f]) {
                *ac = *kv;
                *st = yv + half * kv;
            }
        }
        for c in [half, dt] {
            self.rhs(self.t + half, &stage, &mut k);
            for f in 0..5 {
                for (((st, ac), yv), kv) in stage[f].iter_mut().zip(acc[f].iter_mut()).zip(&y[f]).zip(&k[f]) {
                    *ac += 2.0 * kv;
                    *st = yv + c * kv;
                }
            }
        }
        self.rhs(self.t + dt, &stage, &mut k);
        let mut y = y;
        let c = dt / 6.0;
        for f in 0..5 {
            for ((yv, ac), kv) in y[f].iter_mut().zip(&acc[f]).zip(&k[f]) {
                *yv += c * (ac + kv);
            }
        }
        self.t += dt;
        self.y = y;
        self.k = k;
        self.acc = acc;
        self.stage = stage;
        let [v, u1, u2, u3, e] = &self.y;
        for i in 0..n {
            let th = e[i] - 0.5 * (u1[i] * u1[i] + u2[i] * u2[i] + u3[i] * u3[i]);
            if !(v[i] > 0.0 && th > 0.0 && v[i].is_finite() && th.is_finite()) {
                return Err(Error::BlowUp { t: self.t, cell: i, detail: format!("v = {}, θ = {th}", v[i]) });
            }
        }
        Ok(())
    }
}

/// Single RK4 step returning a new state.
pub fn step(state: &MacroState, dt: f64, transport: &Transport) -> Result<MacroState> {
    let mut it = Integrator::new(state, *transport)?;
    it.step(dt)?;
    Ok(it.state())
}

/// a·exp(−((x − c)/w)²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
}

impl Gaussian {
    pub fn eval(&self, x: f64) -> f64 {
        let s = (x - self.center) / self.width;
        self.amplitude * libm::exp(-s * s)
    }
}

/// Sums of Gaussians added to [v, u₁, u₂, u₃, θ].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PerturbationSpec {
    pub fields: [Vec<Gaussian>; 5],
}

impl PerturbationSpec {
    /// One bump of the given amplitude in v, u₁ and θ, half of it in u₂.
    pub fn default_with_amplitude(a: f64) -> Self {
        let g = |amplitude, center| vec![Gaussian { amplitude, center, width: 3.0 }];
        Self { fields: [g(a, -5.0), g(a, 0.0), g(0.5 * a, 5.0), Vec::new(), g(a, 5.0)] }
    }

    pub fn eval(&self, x: f64) -> [f64; 5] {
        core::array::from_fn(|f| self.fields[f].iter().map(|g| g.eval(x)).sum())
    }

    /// Largest |a| over all bumps, the size entering the smallness gate.
    pub fn size(&self) -> f64 {
        self.fields.iter().flatten().map(|g| g.amplitude.abs()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for g in out.fields.iter_mut().flatten() {
            g.amplitude *= s;
        }
        out
    }

    pub fn apply(&self, state: &mut MacroState) {
        for i in 0..state.grid.nodes() {
            let d = self.eval(state.grid.x(i));
            state.v[i] += d[0];
            state.u[0][i] += d[1];
            state.u[1][i] += d[2];
            state.u[2][i] += d[3];
            state.theta[i] += d[4];
        }
    }
}

/// [ṽ, ũ, θ̃] = state − wave at the nodes, with central first and second
/// x-differences (set to zero at the two end nodes).
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationState {
    pub t: f64,
    pub grid: SpatialGrid,
    /// ṽ, ũ₁, ũ₂, ũ₃, θ̃.
    pub fields: [Vec<f64>; 5],
    pub dx: [Vec<f64>; 5],
    pub dxx: [Vec<f64>; 5],
}

impl PerturbationState {
    pub fn new(state: &MacroState, profile: &ContactWaveProfile) -> Self {
        let n = state.grid.nodes();
        let mut fields: [Vec<f64>; 5] = core::array::from_fn(|_| vec![0.0; n]);
        for i in 0..n {
            let [v, u1, th] = profile.state(state.t, state.grid.x(i));
            fields[0][i] = state.v[i] - v;
            fields[1][i] = state.u[0][i] - u1;
            fields[2][i] = state.u[1][i];
            fields[3][i] = state.u[2][i];
            fields[4][i] = state.theta[i] - th;
        }
        let h = state.grid.dx();
        let dx = core::array::from_fn(|f| central_first(&fields[f], h));
        let dxx = core::array::from_fn(|f| central_second(&fields[f], h));
        Self { t: state.t, grid: state.grid, fields, dx, dxx }
    }

    /// max over nodes and components of |[ṽ, ũ, θ̃]|.
    pub fn sup(&self) -> f64 {
        self.fields.iter().flat_map(|f| f.iter()).fold(0.0, |a, b| a.max(b.abs()))
    }
}

pub(crate) fn central_first(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    (0..n).map(|i| if i == 0 || i + 1 == n { 0.0 } else { (f[i + 1] - f[i - 1]) / (2.0 * h) }).collect()
}

pub(crate) fn central_second(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    (0..n).map(|i| if i == 0 || i + 1 == n { 0.0 } else { (f[i + 1] - 2.0 * f[i] + f[i - 1]) / (h * h) }).collect()
}

/// Φ(s) = s − ln s − 1, evaluated as e − ln(1+e) around s = 1 + e.
pub fn phi(s: f64) -> f64 {
    let e = s - 1.0;
    e - libm::log1p(e)
}

/// ∫(⅔θ̄Φ(v/v̄) + |ũ|²/2 + θ̄Φ(θ/θ̄))dx.
pub fn relative_entropy(state: &MacroState, profile: &ContactWaveProfile) -> f64 {
    state.integrate(|i| {
        let [v, u1, th] = profile.state(state.t, state.grid.x(i));
        let du = [state.u[0][i] - u1, state.u[1][i], state.u[2][i]];
        2.0 / 3.0 * th * phi(state.v[i] / v) + 0.5 * (du[0] * du[0] + du[1] * du[1] + du[2] * du[2]) + th * phi(state.theta[i] / th)
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityConfig {
    pub grid: SpatialGrid,
    pub t_end: f64,
    /// Snapshot spacing; each interval uses the largest admissible step dividing it.
    pub snap_every: f64,
    /// Far-field closeness gate around (1, 0, 3/2).
    pub eta0: f64,
    /// Largest admissible perturbation amplitude.
    pub perturbation_gate: f64,
    /// Stop with an error when θ leaves (1, 3).
    pub monitor_bounds: bool,
    pub lambda: f64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            grid: SpatialGrid::default_run(),
            t_end: 500.0,
            snap_every: 1.0,
            eta0: 0.2,
            perturbation_gate: 0.05,
            monitor_bounds: true,
            lambda: 0.25,
        }
    }
}

/// Fluid-level series recorded at every snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityRecord {
    pub t: f64,
    /// sup_x |[ṽ, ũ, θ̃]|.
    pub sup: f64,
    pub relative_entropy: f64,
    /// ∫(ṽ² + θ̃²)ω² dx.
    pub localized: f64,
    /// Total mass ∫v and energy ∫E over the grid.
    pub mass: f64,
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct StabilityRun {
    pub config: StabilityConfig,
    /// Largest step used.
    pub dt: f64,
    pub steps: usize,
    pub snapshots: Vec<MacroState>,
    pub records: Vec<StabilityRecord>,
}

/// Evolves the wave plus the perturbation to t_end, keeping a snapshot every
/// `snap_every`.
pub fn run_stability_experiment(
    profile: &ContactWaveProfile,
    perturbation: &PerturbationSpec,
    config: StabilityConfig,
) -> Result<StabilityRun> {
    profile.far().check_closeness(config.eta0)?;
    if perturbation.size() > config.perturbation_gate {
        return Err(Error::Precondition(format!(
            "perturbation amplitude {} exceeds the gate {}",
            perturbation.size(),
            config.perturbation_gate
        )));
    }
    if !(config.t_end > 0.0 && config.snap_every > 0.0) {
        return Err(Error::Precondition("t_end and snap_every must be positive".into()));
    }
    let transport = *profile.transport();
    let mut state = MacroState::from_profile(config.grid, profile, 0.0);
    perturbation.apply(&mut state);
    let localizer = LocalizerPair::new(config.lambda)?;
    let mut it = Integrator::new(&state, transport)?;
    let snaps = libm::round(config.t_end / config.snap_every) as usize;
    let mut run =
        StabilityRun { config, dt: 0.0, steps: 0, snapshots: Vec::with_capacity(snaps + 1), records: Vec::with_capacity(snaps + 1) };
    let record = |s: &MacroState| -> StabilityRecord {
        let pert = PerturbationState::new(s, profile);
        let localized = s.integrate(|i| {
            let w = localizer.omega(s.t, s.grid.x(i));
            (pert.fields[0][i] * pert.fields[0][i] + pert.fields[4][i] * pert.fields[4][i]) * w * w
        });
        StabilityRecord {
            t: s.t,
            sup: pert.sup(),
            relative_entropy: relative_entropy(s, profile),
            localized,
            mass: s.integrate(|i| s.v[i]),
            energy: s.integrate(|i| s.theta[i] + 0.5 * (s.u[0][i] * s.u[0][i] + s.u[1][i] * s.u[1][i] + s.u[2][i] * s.u[2][i])),
        }
    };
    run.records.push(record(&state));
    run.snapshots.push(state);
    for k in 1..=snaps {
        // Largest step dividing the interval within 98% of the current bound;
        // the margin absorbs the slow drift of the bound during the interval.
        let per_snap = libm::ceil(config.snap_every / (0.98 * it.stable_dt())).max(1.0) as usize;
        let dt = config.snap_every / per_snap as f64;
        run.dt = run.dt.max(dt);
        for _ in 0..per_snap {
            it.step(dt)?;
            run.steps += 1;
        }
        let mut s = it.state();
        // Snap the clock to the nominal time so that snapshot times are exact.
        s.t = k as f64 * config.snap_every;
        if config.monitor_bounds {
            if let Some((i, th)) = s.theta.iter().enumerate().find(|(_, t)| !(**t > 1.0 && **t < 3.0)) {
                return Err(Error::BlowUp { t: s.t, cell: i, detail: format!("θ = {th} left (1, 3)") });
            }
        }
        run.records.push(record(&s));
        run.snapshots.push(s);
    }
    Ok(run)
}

/// L² norms over the interior of the residuals of the perturbation system
/// (with the kinetic fluxes dropped), and min Q₁.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationResidual {
    pub mass: f64,
    pub momentum: [f64; 3],
    pub energy: f64,
    pub q1_min: f64,
}

/// Q₁ = (4/3)(μ(θ)/v)u₁ₓ² + (μ(θ)/v)(u₂ₓ² + u₃ₓ²) at the nodes.
pub fn q1_field(state: &MacroState, transport: &Transport) -> Vec<f64> {
    let h = state.grid.dx();
    let ux: [Vec<f64>; 3] = core::array::from_fn(|k| central_first(&state.u[k], h));
    (0..state.grid.nodes())
        .map(|i| {
            let m = transport.mu(state.theta[i]) / state.v[i];
            m * (4.0 / 3.0 * ux[0][i] * ux[0][i] + ux[1][i] * ux[1][i] + ux[2][i] * ux[2][i])
        })
        .collect()
}

/// Audits the evolved fields against the perturbation form of the equations
/// at every interior snapshot (centred in time), returning the worst norms.
pub fn perturbation_system_residual(snapshots: &[MacroState], profile: &ContactWaveProfile) -> Result<PerturbationResidual> {
    if snapshots.len() < 3 {
        return Err(Error::Precondition(format!("need at least 3 snapshots, got {}", snapshots.len())));
    }
    let tr = *profile.transport();
    let p_plus = profile.p_plus();
    let mut out = PerturbationResidual { mass: 0.0, momentum: [0.0; 3], energy: 0.0, q1_min: f64::INFINITY };
    for w in snapshots.windows(3) {
        let (a, s, b) = (&w[0], &w[1], &w[2]);
        let dt2 = b.t - a.t;
        if !(dt2 > 0.0) || ((s.t - a.t) - (b.t - s.t)).abs() > 1e-9 * dt2 {
            return Err(Error::Precondition("snapshots must be equally spaced in time".into()));
        }
        let (pa, ps, pb) = (PerturbationState::new(a, profile), PerturbationState::new(s, profile), PerturbationState::new(b, profile));
        let n = s.grid.nodes();
        let h = s.grid.dx();
        let q1 = q1_field(s, &tr);
        // Nodal fluxes; their central differences give the divergence terms.
        let mut visc = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let mut heat = vec![0.0; n];
        let mut pres = vec![0.0; n];
        let ux: [Vec<f64>; 3] = core::array::from_fn(|k| central_first(&s.u[k], h));
        let thx = central_first(&s.theta, h);
        for i in 0..n {
            let jet = profile.jet(s.t, s.grid.x(i));
            let m = tr.mu(s.theta[i]) / s.v[i];
            visc[0][i] = 4.0 / 3.0 * m * ux[0][i];
            visc[1][i] = m * ps.dx[2][i];
            visc[2][i] = m * ps.dx[3][i];
            heat[i] = tr.kappa(s.theta[i]) / s.v[i] * thx[i] - tr.kappa(jet.theta.val) / jet.v.val * jet.theta.x;
            pres[i] = s.pressure(i) - p_plus;
        }
        let dvisc: [Vec<f64>; 3] = core::array::from_fn(|k| central_first(&visc[k], h));
        let dheat = central_first(&heat, h);
        let dpres = central_first(&pres, h);
        let mut acc = [0.0; 5];
        let interior = 2..n.saturating_sub(2);
        for i in interior {
            let jet = profile.jet(s.t, s.grid.x(i));
            let ft = |f: usize| (pb.fields[f][i] - pa.fields[f][i]) / dt2;
            let r = [
                ft(0) - ps.dx[1][i],
                ft(1) + dpres[i] - dvisc[0][i] + jet.u1.t,
                ft(2) - dvisc[1][i],
                ft(3) - dvisc[2][i],
                ft(4) + s.pressure(i) * ux[0][i] - p_plus * jet.u1.x - dheat[i] - q1[i],
            ];
            for (a, v) in acc.iter_mut().zip(r) {
                *a += v * v * h;
            }
            out.q1_min = out.q1_min.min(q1[i]);
        }
        let norms = acc.map(libm::sqrt);
        out.mass = out.mass.max(norms[0]);
        for k in 0..3 {
            out.momentum[k] = out.momentum[k].max(norms[1 + k]);
        }
        out.energy = out.energy.max(norms[4]);
    }
    Ok(out)
}
