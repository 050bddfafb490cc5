use std::ops::{Add, Div, Mul, Sub};

use landau_core::chapman_enskog::Transport;
use landau_core::contact_wave::*;
use landau_core::fluid_solver::*;
use landau_core::{Error, R_GAS};

const MU0: f64 = 0.8062;
const KAPPA0: f64 = 1.7747;

fn transport() -> Transport {
    Transport::power_law(MU0, KAPPA0).unwrap()
}

fn profile_with(theta_minus: f64, theta_plus: f64) -> ContactWaveProfile {
    let far = FarFieldData::from_temperatures(theta_minus, theta_plus, 1.0, 0.0).unwrap();
    solve_selfsimilar(far, transport(), ProfileSettings::default()).unwrap()
}

fn run_to(state: &MacroState, law: Transport, t_end: f64, dt_hint: f64) -> MacroState {
    let mut it = Integrator::new(state, law).unwrap();
    let steps = ((t_end - state.t) / dt_hint).ceil() as usize;
    let dt = (t_end - state.t) / steps as f64;
    for _ in 0..steps {
        it.step(dt).unwrap();
    }
    it.state()
}

fn l2_diff(a: &MacroState, f: impl Fn(usize) -> [f64; 5]) -> f64 {
    a.integrate(|i| {
        let e = f(i);
        let d = [a.v[i] - e[0], a.u[0][i] - e[1], a.u[1][i] - e[2], a.u[2][i] - e[3], a.theta[i] - e[4]];
        d.iter().map(|x| x * x).sum()
    })
    .sqrt()
}

#[test]
fn constant_state_is_an_equilibrium() {
    let grid = SpatialGrid::new(10.0, 200).unwrap();
    let s0 = MacroState::constant(grid, 1.0, [0.0; 3], 1.5);
    let dt = 0.9 * stable_dt(&s0, &transport());
    let s = run_to(&s0, transport(), 200.0 * dt, dt);
    let worst = (0..grid.nodes())
        .map(|i| (s.v[i] - 1.0).abs().max((s.theta[i] - 1.5).abs()).max(s.u.iter().map(|c| c[i].abs()).fold(0.0, f64::max)))
        .fold(0.0, f64::max);
    assert!(worst < 1e-13, "{worst}");
}

#[test]
fn step_bound_and_positivity_are_enforced() {
    let grid = SpatialGrid::new(10.0, 200).unwrap();
    let s0 = MacroState::constant(grid, 1.0, [0.0; 3], 1.5);
    let bound = stable_dt(&s0, &transport());
    let dx = grid.dx();
    let expect = 0.4 * dx * dx / (KAPPA0 * 1.5f64.powf(2.5));
    assert!((bound - expect).abs() < 1e-14 * expect);
    assert!(matches!(step(&s0, 1.5 * bound, &transport()), Err(Error::Cfl { .. })));
    let mut bad = s0.clone();
    bad.theta[17] = -0.1;
    assert!(matches!(Integrator::new(&bad, transport()), Err(Error::BlowUp { cell: 17, .. })));
    assert!(SpatialGrid::new(10.0, 2).is_err());
}

#[test]
fn mass_and_total_energy_are_conserved() {
    // Wide enough that the wave is exactly constant at the pinned nodes.
    let p = profile_with(1.55, 1.45);
    let grid = SpatialGrid::new(80.0, 800).unwrap();
    let mut s0 = MacroState::from_profile(grid, &p, 0.0);
    PerturbationSpec::default_with_amplitude(0.02).apply(&mut s0);
    let mass = |s: &MacroState| s.integrate(|i| s.v[i]);
    let energy = |s: &MacroState| s.integrate(|i| s.theta[i] + 0.5 * (0..3).map(|k| s.u[k][i] * s.u[k][i]).sum::<f64>());
    let momentum = |s: &MacroState| s.integrate(|i| s.u[1][i]);
    let dt = 0.9 * stable_dt(&s0, &transport());
    let s = run_to(&s0, transport(), 5.0, dt);
    assert!((mass(&s) - mass(&s0)).abs() < 1e-12 * mass(&s0), "{}", mass(&s) - mass(&s0));
    assert!((energy(&s) - energy(&s0)).abs() < 1e-12 * energy(&s0), "{}", energy(&s) - energy(&s0));
    assert!((momentum(&s) - momentum(&s0)).abs() < 1e-13);
}

fn wave_drift(p: &ContactWaveProfile, t_end: f64) -> f64 {
    let grid = SpatialGrid::new(60.0, 1200).unwrap();
    let s0 = MacroState::from_profile(grid, p, 0.0);
    let dt = 0.9 * stable_dt(&s0, p.transport());
    let s = run_to(&s0, *p.transport(), t_end, dt);
    l2_diff(&s, |i| {
        let [v, u, th] = p.state(t_end, grid.x(i));
        [v, u, 0.0, 0.0, th]
    })
}

#[test]
fn contact_wave_data_drifts_only_through_the_remainder() {
    // The profile solves the mass and energy lines exactly and the momentum
    // line up to a remainder that is linear in δ.
    let strong = wave_drift(&profile_with(1.55, 1.45), 100.0);
    let weak = wave_drift(&profile_with(1.525, 1.475), 100.0);
    assert!(strong < 0.01, "{strong}");
    let ratio = strong / weak;
    assert!((ratio - 2.0).abs() < 0.1, "ratio {ratio}");
}

#[test]
fn phi_is_a_convex_quadratic_well() {
    assert_eq!(phi(1.0), 0.0);
    let h = 1e-4;
    assert!(((phi(1.0 + h) - phi(1.0 - h)) / (2.0 * h)).abs() < 1e-8);
    let second = (phi(1.0 + h) - 2.0 * phi(1.0) + phi(1.0 - h)) / (h * h);
    assert!((second - 1.0).abs() < 1e-6, "{second}");
    for k in -100..=100 {
        let e = 1e-3 * k as f64;
        let s = 1.0 + e;
        let direct = s - s.ln() - 1.0;
        assert!((phi(s) - direct).abs() <= 1e-15 + 1e-12 * direct);
        assert!((phi(s) - 0.5 * e * e).abs() <= 0.37 * e.abs().powi(3));
        assert!(phi(s) >= 0.0);
    }
}

#[test]
fn relative_entropy_is_quadratic_in_amplitude() {
    let p = profile_with(1.55, 1.45);
    let grid = SpatialGrid::new(60.0, 1200).unwrap();
    let at = |a: f64| {
        let mut s = MacroState::from_profile(grid, &p, 0.0);
        PerturbationSpec::default_with_amplitude(a).apply(&mut s);
        relative_entropy(&s, &p)
    };
    let (full, half) = (at(0.02), at(0.01));
    assert!(full > 0.0);
    assert!((full / half / 4.0 - 1.0).abs() < 0.05, "{}", full / half);
    assert!(relative_entropy(&MacroState::from_profile(grid, &p, 3.0), &p).abs() < 1e-28);
}

#[test]
fn perturbation_state_reconstructs_the_fields_exactly() {
    let p = profile_with(1.55, 1.45);
    let grid = SpatialGrid::new(30.0, 300).unwrap();
    let mut s = MacroState::from_profile(grid, &p, 2.0);
    PerturbationSpec::default_with_amplitude(0.02).apply(&mut s);
    let pert = PerturbationState::new(&s, &p);
    for i in 0..grid.nodes() {
        let [v, u, th] = p.state(2.0, grid.x(i));
        assert_eq!(pert.fields[0][i], s.v[i] - v);
        assert_eq!(pert.fields[1][i], s.u[0][i] - u);
        assert_eq!(pert.fields[4][i], s.theta[i] - th);
    }
    assert!((pert.sup() - 0.02).abs() < 1e-3);
}

#[test]
fn stability_run_gates_and_zero_perturbation_floor() {
    let p = profile_with(1.55, 1.45);
    let small = StabilityConfig { grid: SpatialGrid::new(60.0, 600).unwrap(), t_end: 4.0, snap_every: 1.0, ..StabilityConfig::default() };
    let too_big = PerturbationSpec::default_with_amplitude(0.5);
    assert!(matches!(run_stability_experiment(&p, &too_big, small), Err(Error::Precondition(_))));
    let strong = profile_with(2.5, 1.0);
    let spec = PerturbationSpec::default_with_amplitude(0.01);
    assert!(matches!(run_stability_experiment(&strong, &spec, small), Err(Error::Precondition(_))));

    let run = run_stability_experiment(&p, &PerturbationSpec::default(), small).unwrap();
    assert_eq!(run.snapshots.len(), 5);
    assert_eq!(run.records.len(), 5);
    assert!(run.records[0].sup < 1e-15);
    let floor = run.records.iter().map(|r| r.sup).fold(0.0, f64::max);
    assert!(floor < 1e-3, "{floor}");
    for (k, r) in run.records.iter().enumerate() {
        assert_eq!(r.t, k as f64);
        assert!(r.relative_entropy >= 0.0 && r.localized >= 0.0);
    }
}

#[test]
fn perturbation_system_audit() {
    let p = profile_with(1.55, 1.45);
    let spec = PerturbationSpec::default_with_amplitude(0.02);
    let audit = |cells: usize, snap: f64| {
        let cfg =
            StabilityConfig { grid: SpatialGrid::new(40.0, cells).unwrap(), t_end: 1.0, snap_every: snap, ..StabilityConfig::default() };
        let run = run_stability_experiment(&p, &spec, cfg).unwrap();
        assert!(perturbation_system_residual(&run.snapshots[..2], &p).is_err());
        perturbation_system_residual(&run.snapshots, &p).unwrap()
    };
    let coarse = audit(200, 0.02);
    let mid = audit(400, 0.01);
    let fine = audit(800, 0.005);
    for r in [&coarse, &mid, &fine] {
        assert!(r.q1_min >= 0.0);
    }
    // Mass line: the same centred difference on both sides, so only the time
    // difference of the snapshots remains.
    assert!(fine.mass < 1e-4, "{}", fine.mass);
    let rate = |a: f64, b: f64| (a / b).log2();
    for (name, c, m, f) in [
        ("mass", coarse.mass, mid.mass, fine.mass),
        ("momentum", coarse.momentum[0], mid.momentum[0], fine.momentum[0]),
        ("transverse", coarse.momentum[1], mid.momentum[1], fine.momentum[1]),
        ("energy", coarse.energy, mid.energy, fine.energy),
    ] {
        let (r1, r2) = (rate(c, m), rate(m, f));
        assert!(r1 > 1.8 && r2 > 1.8, "{name}: {c:e} {m:e} {f:e} rates {r1} {r2}");
    }
}

// Second-order x-jets (f, f', f'') for manufactured solutions.
#[derive(Clone, Copy, Debug)]
struct J(f64, f64, f64);

impl Add for J {
    type Output = J;
    fn add(self, o: J) -> J {
        J(self.0 + o.0, self.1 + o.1, self.2 + o.2)
    }
}
impl Sub for J {
    type Output = J;
    fn sub(self, o: J) -> J {
        J(self.0 - o.0, self.1 - o.1, self.2 - o.2)
    }
}
impl Mul for J {
    type Output = J;
    fn mul(self, o: J) -> J {
        J(self.0 * o.0, self.1 * o.0 + self.0 * o.1, self.2 * o.0 + 2.0 * self.1 * o.1 + self.0 * o.2)
    }
}
impl Div for J {
    type Output = J;
    fn div(self, o: J) -> J {
        let inv = J(1.0 / o.0, -o.1 / (o.0 * o.0), 2.0 * o.1 * o.1 / o.0.powi(3) - o.2 / (o.0 * o.0));
        self * inv
    }
}
impl J {
    fn scale(self, s: f64) -> J {
        J(self.0 * s, self.1 * s, self.2 * s)
    }
    // f(g) for f with derivatives (f, f', f'') at g.
    fn compose(self, f: [f64; 3]) -> J {
        J(f[0], f[1] * self.1, f[2] * self.1 * self.1 + f[1] * self.2)
    }
}

const MX: f64 = std::f64::consts::PI;

// Manufactured fields: each is base + amp·sin(m k (x+X))·T(t), with the
// time factor and its derivative.
struct Mode {
    base: f64,
    amp: f64,
    m: f64,
    time: fn(f64) -> (f64, f64),
}

impl Mode {
    fn k(&self) -> f64 {
        self.m * std::f64::consts::PI / (2.0 * MX)
    }
    fn jet(&self, t: f64, x: f64) -> J {
        let (tf, _) = (self.time)(t);
        let k = self.k();
        let a = k * (x + MX);
        J(self.base + self.amp * a.sin() * tf, self.amp * k * a.cos() * tf, -self.amp * k * k * a.sin() * tf)
    }
    // Third x-derivative and time derivative.
    fn dxxx(&self, t: f64, x: f64) -> f64 {
        let k = self.k();
        -self.amp * k.powi(3) * (k * (x + MX)).cos() * (self.time)(t).0
    }
    fn dt(&self, t: f64, x: f64) -> f64 {
        self.amp * (self.k() * (x + MX)).sin() * (self.time)(t).1
    }
}

fn modes() -> [Mode; 5] {
    [
        Mode { base: 1.0, amp: 0.1, m: 2.0, time: |t| (t.cos(), -t.sin()) },
        Mode { base: 0.0, amp: 0.1, m: 2.0, time: |t| (1.0 + t.sin(), t.cos()) },
        Mode { base: 0.0, amp: 0.05, m: 4.0, time: |t| ((-t).exp(), -(-t).exp()) },
        Mode { base: 0.0, amp: 0.05, m: 2.0, time: |t| ((2.0 * t).cos(), -2.0 * (2.0 * t).sin()) },
        Mode { base: 1.5, amp: 0.1, m: 4.0, time: |t| ((0.5 * t).cos(), -0.5 * (0.5 * t).sin()) },
    ]
}

fn mms_law() -> Transport {
    Transport::power_law(0.05, 0.08).unwrap()
}

fn exact_state(grid: SpatialGrid, t: f64) -> MacroState {
    let m = modes();
    let mut s = MacroState::constant(grid, 1.0, [0.0; 3], 1.5);
    s.t = t;
    for i in 0..grid.nodes() {
        let x = grid.x(i);
        s.v[i] = m[0].jet(t, x).0;
        for k in 0..3 {
            s.u[k][i] = m[1 + k].jet(t, x).0;
        }
        s.theta[i] = m[4].jet(t, x).0;
    }
    s
}

fn mms_source(t: f64, x: f64) -> [f64; 5] {
    let law = mms_law();
    let m = modes();
    let v = m[0].jet(t, x);
    let u: Vec<J> = (1..4).map(|k| m[k].jet(t, x)).collect();
    let th = m[4].jet(t, x);
    let mu = th.compose(law.mu_derivs(th.0));
    let ka = th.compose(law.kappa_derivs(th.0));
    let p = th.scale(R_GAS) / v;
    let mv = mu / v;
    let kv = ka / v;
    // (c f_x)_x from the jets of c and of f, with f_xxx supplied.
    let flux_x = |c: J, f: J, fxxx: f64| (c * J(f.1, f.2, fxxx)).1;
    let u_xxx: Vec<f64> = (1..4).map(|k| m[k].dxxx(t, x)).collect();
    let th_xxx = m[4].dxxx(t, x);
    let vt = m[0].dt(t, x);
    let ut: Vec<f64> = (1..4).map(|k| m[k].dt(t, x)).collect();
    let tht = m[4].dt(t, x);
    let et = tht + u.iter().zip(&ut).map(|(a, b)| a.0 * b).sum::<f64>();
    // Work flux (4/3)(μ/v)u₁u₁ₓ + (μ/v)(u₂u₂ₓ + u₃u₃ₓ) as a jet.
    let half_sq = |w: J| (w * w).scale(0.5);
    let work = mv * (half_sq(u[0]).scale(4.0 / 3.0) + half_sq(u[1]) + half_sq(u[2]));
    let work_x = {
        // d/dx of mv * d/dx(q) needs q''' for each squared component.
        let q3 = |w: J, wxxx: f64| 3.0 * w.1 * w.2 + w.0 * wxxx;
        let qs = [half_sq(u[0]).scale(4.0 / 3.0), half_sq(u[1]), half_sq(u[2])];
        let q3s = [4.0 / 3.0 * q3(u[0], u_xxx[0]), q3(u[1], u_xxx[1]), q3(u[2], u_xxx[2])];
        let q = qs[0] + qs[1] + qs[2];
        let _ = work;
        flux_x(mv, q, q3s.iter().sum())
    };
    [
        vt - u[0].1,
        ut[0] + p.1 - 4.0 / 3.0 * flux_x(mv, u[0], u_xxx[0]),
        ut[1] - flux_x(mv, u[1], u_xxx[1]),
        ut[2] - flux_x(mv, u[2], u_xxx[2]),
        et + (p * u[0]).1 - flux_x(kv, th, th_xxx) - work_x,
    ]
}

fn mms_error(cells: usize, dt: f64, t_end: f64) -> f64 {
    let grid = SpatialGrid::new(MX, cells).unwrap();
    let s0 = exact_state(grid, 0.0);
    let mut it = Integrator::new(&s0, mms_law()).unwrap().with_source(Box::new(mms_source));
    let steps = (t_end / dt).round() as usize;
    for _ in 0..steps {
        it.step(dt).unwrap();
    }
    let s = it.state();
    let ex = exact_state(grid, s.t);
    l2_diff(&s, |i| [ex.v[i], ex.u[0][i], ex.u[1][i], ex.u[2][i], ex.theta[i]])
}

#[test]
fn manufactured_solution_second_order_in_space() {
    // dt ∝ Δx² keeps the O(dt⁴) time error far below the spatial one.
    let errs: Vec<f64> = [16, 32, 64]
        .iter()
        .map(|&n| {
            let dx = 2.0 * MX / n as f64;
            mms_error(n, 0.5 * dx * dx, 0.5)
        })
        .collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 2.0).abs() < 0.2, "{errs:?} order {order}");
    }
}

#[test]
fn manufactured_solution_fourth_order_in_time() {
    // Semi-discrete reference on the same grid isolates the time error.
    let cells = 16;
    let grid = SpatialGrid::new(MX, cells).unwrap();
    let bound = stable_dt(&exact_state(grid, 0.0), &mms_law());
    let run = |dt: f64| {
        let s0 = exact_state(grid, 0.0);
        let mut it = Integrator::new(&s0, mms_law()).unwrap().with_source(Box::new(mms_source));
        let steps = (1.0 / dt).round() as usize;
        for _ in 0..steps {
            it.step(1.0 / steps as f64).unwrap();
        }
        it.state()
    };
    let base = 1.0 / (1.0 / bound).ceil();
    let reference = run(base / 16.0);
    let err = |dt: f64| {
        let s = run(dt);
        l2_diff(&s, |i| [reference.v[i], reference.u[0][i], reference.u[1][i], reference.u[2][i], reference.theta[i]])
    };
    let (e1, e2) = (err(base), err(base / 2.0));
    let order = (e1 / e2).log2();
    assert!((order - 4.0).abs() < 0.3, "{e1:e} {e2:e} order {order}");
}
