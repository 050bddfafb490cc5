use landau_core::chapman_enskog::Transport;
use landau_core::contact_wave::*;
use landau_core::{Error, R_GAS};

// Power law calibrated on the thermal N = 16 grid at θ = 3/2.
const MU0: f64 = 0.8062;
const KAPPA0: f64 = 1.7747;

fn transport() -> Transport {
    Transport::power_law(MU0, KAPPA0).unwrap()
}

fn default_profile() -> ContactWaveProfile {
    solve_selfsimilar(FarFieldData::default_run(), transport(), ProfileSettings::default()).unwrap()
}

#[test]
fn far_field_invariants_are_enforced() {
    let far = FarFieldData::default_run();
    assert!((far.p_plus() - 1.0).abs() < 1e-15 && (far.p_minus() - far.p_plus()).abs() < 1e-15);
    assert!((far.delta() - 0.1).abs() < 1e-12);
    assert!(far.check_closeness(0.1).is_ok());
    assert!(matches!(far.check_closeness(0.01), Err(Error::Precondition(_))));
    let unequal_pressure = FarFieldData::new(1.0, [0.0; 3], 1.5, 1.0, [0.0; 3], 1.6);
    assert!(matches!(unequal_pressure, Err(Error::Domain(_))));
    let unequal_velocity = FarFieldData::new(1.0, [0.1, 0.0, 0.0], 1.5, 1.0, [0.0; 3], 1.5);
    assert!(matches!(unequal_velocity, Err(Error::Domain(_))));
    assert!(matches!(FarFieldData::from_temperatures(-1.0, 1.5, 1.0, 0.0), Err(Error::Domain(_))));
}

#[test]
fn equal_temperatures_give_the_constant_wave() {
    let far = FarFieldData::from_temperatures(1.5, 1.5, 1.0, 0.2).unwrap();
    let p = solve_selfsimilar(far, transport(), ProfileSettings::default()).unwrap();
    for &(t, x) in &[(0.0, -3.0), (2.0, 0.0), (50.0, 11.0)] {
        let j = p.jet(t, x);
        assert!((j.theta.val - 1.5).abs() < 1e-14);
        assert!((j.u1.val - 0.2).abs() < 1e-14);
        assert!((j.v.val - R_GAS * 1.5).abs() < 1e-14);
        assert!(j.theta.x.abs() + j.theta.t.abs() + j.u1.x.abs() < 1e-14);
    }
    let res = residuals_r(&p, 3.0, &[-5.0, 0.0, 5.0]);
    assert!(res.r1.iter().chain(&res.r2).all(|r| r.abs() < 1e-14));
}

#[test]
fn constant_diffusivity_matches_the_error_function() {
    // κ ∝ θ makes a(θ) = 9κp₊/(10θ) constant and the ODE linear.
    let law = Transport { mu: [MU0.ln(), 2.5, 0.0], kappa: [1.0f64.ln(), 1.0, 0.0] };
    for &delta in &[0.1, 0.01] {
        let far = FarFieldData::from_temperatures(1.5 - delta / 2.0, 1.5 + delta / 2.0, 1.0, 0.0).unwrap();
        let p = solve_selfsimilar(far, law, ProfileSettings::default()).unwrap();
        let a = law.diffusivity(1.5, 1.0)[0];
        assert!((law.diffusivity(1.2, 1.0)[0] - a).abs() < 1e-14);
        let mut worst = 0.0f64;
        for i in 0..=80 {
            let z = -8.0 + 0.2 * i as f64;
            let exact = far.theta_minus + 0.5 * delta * (1.0 + libm::erf(z / (2.0 * a.sqrt())));
            worst = worst.max((p.theta_derivs(z)[0] - exact).abs());
        }
        assert!(worst < 1e-6 * delta, "δ = {delta}: {worst}");
        assert!((p.theta_derivs(0.0)[0] - 1.5).abs() < 1e-6 * delta);
    }
}

#[test]
fn default_profile_is_converged_monotone_and_pinned() {
    let p = default_profile();
    assert!(p.residual() <= 1e-8, "{}", p.residual());
    let s: Vec<[f64; 4]> = p.samples().collect();
    // Strictly decreasing wherever Θ is resolved away from θ±; in the tails
    // the increments are below round-off.
    let resolved = |r: &[f64; 4]| (r[1] - 1.55).abs() > 1e-12 && (r[1] - 1.45).abs() > 1e-12;
    assert!(s.windows(2).all(|w| w[1][1] <= w[0][1] + 1e-15));
    assert!(s.windows(2).filter(|w| resolved(&w[0]) && resolved(&w[1])).all(|w| w[1][1] < w[0][1]));
    assert!(s.iter().all(|r| r[2] <= 1e-13));
    assert!(s.iter().filter(|r| resolved(r)).all(|r| r[2] < 0.0));
    assert!((s[0][1] - 1.55).abs() < 1e-12 && (s[s.len() - 1][1] - 1.45).abs() < 1e-12);
}

#[test]
fn pressure_is_constant_and_transverse_velocity_vanishes() {
    let p = default_profile();
    for i in 0..50 {
        let (t, x) = (0.37 * i as f64, -12.0 + 0.5 * i as f64);
        let [v, _, th] = p.state(t, x);
        assert!((2.0 * th / (3.0 * v) - p.p_plus()).abs() < 1e-14);
    }
}

#[test]
fn swapping_the_far_fields_mirrors_the_profile() {
    let far = FarFieldData::default_run();
    let a = default_profile();
    let b = solve_selfsimilar(far.swapped(), transport(), ProfileSettings::default()).unwrap();
    for i in 0..=60 {
        let z = -15.0 + 0.5 * i as f64 + 0.013;
        let (da, db) = (a.theta_derivs(z), b.theta_derivs(-z));
        assert!((da[0] - db[0]).abs() < 1e-12);
        assert!((da[1] + db[1]).abs() < 1e-10);
        assert!((da[2] - db[2]).abs() < 1e-9);
    }
}

#[test]
fn discrete_solution_converges_at_second_order() {
    let far = FarFieldData::default_run();
    let solve = |nodes| {
        let settings = ProfileSettings { nodes, ..ProfileSettings::default() };
        solve_selfsimilar(far, transport(), settings).unwrap()
    };
    let reference = solve(32001);
    let err = |n: usize| {
        let p = solve(n);
        p.samples().map(|r| (r[1] - reference.theta_derivs(r[0])[0]).abs()).fold(0.0, f64::max)
    };
    let (e1, e2) = (err(401), err(801));
    let order = (e1 / e2).log2();
    assert!((order - 2.0).abs() < 0.2, "errors {e1:.3e} {e2:.3e}, order {order}");
    // The ODE residual of the interpolant between nodes, likewise.
    let cont = |n: usize| {
        let p = solve(n);
        (0..20000).map(|i| p.ode_residual(-20.0 + 40.0 * (i as f64 + 0.37) / 20000.0).abs()).fold(0.0, f64::max)
    };
    let (r1, r2) = (cont(401), cont(801));
    assert!(((r1 / r2).log2() - 2.0).abs() < 0.2, "residuals {r1:.3e} {r2:.3e}");
}

#[test]
fn large_strength_uses_continuation() {
    let far = FarFieldData::from_temperatures(1.0, 2.2, 1.0, 0.0).unwrap();
    let p = solve_selfsimilar(far, transport(), ProfileSettings::default()).unwrap();
    assert!(p.residual() <= 1e-8);
    let s: Vec<[f64; 4]> = p.samples().collect();
    assert!(s.windows(2).all(|w| w[1][1] >= w[0][1] - 1e-15));
    assert!(s.iter().filter(|r| r[1] > 1.0 + 1e-12 && r[1] < 2.2 - 1e-12).all(|r| r[2] > 0.0));
}

#[test]
fn solver_failures_are_reported() {
    let far = FarFieldData::default_run();
    let tight = ProfileSettings { max_iterations: 1, tol: 1e-14, ..ProfileSettings::default() };
    match solve_selfsimilar(far, transport(), tight) {
        Err(Error::Convergence { hint, .. }) => assert!(hint.contains("δ")),
        other => panic!("expected non-convergence, got {other:?}"),
    }
    let broken = Transport { mu: [0.0, 2.5, 0.0], kappa: [f64::NAN, 2.5, 0.0] };
    assert!(matches!(solve_selfsimilar(far, broken, ProfileSettings::default()), Err(Error::Domain(_))));
    assert!(Transport::power_law(0.3, -1.0).is_err());
}

#[test]
fn jets_match_finite_differences() {
    let p = default_profile();
    let (t, x) = (3.0, 1.7);
    let e = 1e-4;
    let j = p.jet(t, x);
    let f = |t: f64, x: f64| p.state(t, x);
    for (k, jet) in [j.v, j.u1, j.theta].into_iter().enumerate() {
        let dt = (f(t + e, x)[k] - f(t - e, x)[k]) / (2.0 * e);
        let dx = (f(t, x + e)[k] - f(t, x - e)[k]) / (2.0 * e);
        let dxx = (f(t, x + e)[k] - 2.0 * f(t, x)[k] + f(t, x - e)[k]) / (e * e);
        let dtt = (f(t + e, x)[k] - 2.0 * f(t, x)[k] + f(t - e, x)[k]) / (e * e);
        let dtx = (f(t + e, x + e)[k] - f(t + e, x - e)[k] - f(t - e, x + e)[k] + f(t - e, x - e)[k]) / (4.0 * e * e);
        let scale = jet.x.abs().max(1e-3);
        assert!((jet.t - dt).abs() < 1e-7 * scale.max(1.0), "{k} t");
        assert!((jet.x - dx).abs() < 1e-7 * scale.max(1.0), "{k} x");
        assert!((jet.xx - dxx).abs() < 1e-5, "{k} xx {} {}", jet.xx, dxx);
        assert!((jet.tt - dtt).abs() < 1e-5, "{k} tt");
        assert!((jet.tx - dtx).abs() < 1e-5, "{k} tx");
    }
}

#[test]
fn envelope_side_depends_on_zeta_only() {
    let p = default_profile();
    for &z in &[-4.0, -0.3, 0.7, 5.5] {
        let base = p.envelope_lhs(0.0, z);
        for &t in &[1.0, 10.0, 1000.0] {
            let v = p.envelope_lhs(t, z * (1.0 + t).sqrt());
            assert!((v - base).abs() < 1e-12 * base.max(1e-300), "ζ = {z}, t = {t}");
        }
    }
}

#[test]
fn envelope_fit_is_gaussian_and_rescaling_invariant() {
    let p = default_profile();
    let xs: Vec<f64> = (0..=400).map(|i| -40.0 + 0.2 * i as f64).collect();
    let r = verify_envelope(&p, &[0.0, 1.0, 10.0], &xs).unwrap();
    assert!(r.c1 > 0.0 && r.c > 0.0 && r.worst_ratio <= 1.0 + 1e-12);
    // The diffusive Gaussian rate is 1/(4a); the fit cannot exceed it.
    let a_min = p.diffusivity(1.45)[0];
    assert!(r.c1 < 1.0 / (4.0 * a_min), "c₁ = {}", r.c1);
    // The same ζ-rays at a later time give the same fit.
    let scaled: Vec<f64> = xs.iter().map(|x| x * 101f64.sqrt()).collect();
    let s = verify_envelope(&p, &[100.0], &scaled).unwrap();
    let r0 = verify_envelope(&p, &[0.0], &xs).unwrap();
    assert!((s.c1 - r0.c1).abs() < 1e-9 * r0.c1 && (s.c - r0.c).abs() < 1e-9 * r0.c);
}

#[test]
fn decay_rates_follow_the_profile_scaling() {
    let p = default_profile();
    for (q, qty) in [(Lq::Two, DecayQuantity::SpaceVTheta), (Lq::Two, DecayQuantity::SpaceU), (Lq::Two, DecayQuantity::TimeVTheta)] {
        let f = verify_decay_rates(&p, qty, 1, q, (1.0, 1e4), 9).unwrap();
        assert!((f.fitted - f.predicted).abs() < 0.05, "{qty:?}: {} vs {}", f.fitted, f.predicted);
    }
    assert!((DecayQuantity::SpaceVTheta.predicted(1, Lq::Two) + 0.25).abs() < 1e-15);
    assert!((DecayQuantity::SpaceU.predicted(1, Lq::Two) + 0.75).abs() < 1e-15);
    assert!((DecayQuantity::TimeVTheta.predicted(1, Lq::Two) + 0.75).abs() < 1e-15);
    for q in [Lq::One, Lq::Inf] {
        for k in 1..=2 {
            for qty in [DecayQuantity::SpaceVTheta, DecayQuantity::SpaceU, DecayQuantity::TimeVTheta, DecayQuantity::TimeU] {
                let f = verify_decay_rates(&p, qty, k, q, (1.0, 1e4), 7).unwrap();
                assert!((f.fitted - f.predicted).abs() < 0.05, "{qty:?} k={k} {q:?}: {} vs {}", f.fitted, f.predicted);
            }
        }
    }
    assert!(matches!(verify_decay_rates(&p, DecayQuantity::SpaceU, 1, Lq::Two, (1.0, 10.0), 5), Err(Error::Precondition(_))));
}

#[test]
fn profile_satisfies_mass_and_energy_lines() {
    let p = default_profile();
    let xs: Vec<f64> = (0..=200).map(|i| -30.0 + 0.3 * i as f64).collect();
    for &t in &[0.0, 5.0, 200.0] {
        let r = residuals_r(&p, t, &xs);
        let m = r.mass.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let e = r.energy.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        // Both equal multiples of the interpolant's ODE residual (≈ 2e-8 at 8001 nodes).
        assert!(m < 5e-8 && e < 5e-8, "t = {t}: mass {m:.2e}, energy {e:.2e}");
    }
}

#[test]
fn remainder_decays_in_time_and_scales_with_strength() {
    let l2 = |p: &ContactWaveProfile, t: f64| {
        let half = 20.0 * (1.0 + t).sqrt();
        let n = 2001;
        let dx = 2.0 * half / (n - 1) as f64;
        let xs: Vec<f64> = (0..n).map(|i| -half + dx * i as f64).collect();
        (residuals_r(p, t, &xs).r1.iter().map(|r| r * r).sum::<f64>() * dx).sqrt()
    };
    let p = default_profile();
    let norms: Vec<f64> = [0.0, 10.0, 100.0, 1000.0].iter().map(|&t| l2(&p, t)).collect();
    assert!(norms.windows(2).all(|w| w[1] < w[0]), "{norms:?}");
    let far = FarFieldData::from_temperatures(1.525, 1.475, 1.0, 0.0).unwrap();
    let half = solve_selfsimilar(far, transport(), ProfileSettings::default()).unwrap();
    let ratio = l2(&half, 10.0) / l2(&p, 10.0);
    assert!((ratio - 0.5).abs() < 0.02, "{ratio}");
}

#[test]
fn riemann_reference_and_vanishing_conductivity() {
    let far = FarFieldData::default_run();
    let step = contact_discontinuity_reference(far).unwrap();
    assert_eq!(step.state(-1.0), [far.v_minus, 0.0, far.theta_minus]);
    assert_eq!(step.state(2.0), [far.v_plus, 0.0, far.theta_plus]);
    let p = default_profile();
    let q = solve_selfsimilar(far, transport().with_kappa_scaled(0.25), ProfileSettings::default()).unwrap();
    let (d, dq) = (distance_to_discontinuity(&p, &step, 5.0, Lq::One, 40000), distance_to_discontinuity(&q, &step, 5.0, Lq::One, 40000));
    assert!((dq / d - 0.5).abs() < 0.01, "{}", dq / d);
    let (d1, d2) = (distance_to_discontinuity(&p, &step, 0.0, Lq::One, 40000), distance_to_discontinuity(&p, &step, 3.0, Lq::One, 40000));
    assert!((d2 / d1 - 2.0).abs() < 0.01);
    let tiny = solve_selfsimilar(far, transport().with_kappa_scaled(1e-4), ProfileSettings::default()).unwrap();
    for &x in &[-2.0, -0.5, 0.5, 2.0] {
        assert!((tiny.state(1.0, x)[0] - step.state(x)[0]).abs() < (p.state(1.0, x)[0] - step.state(x)[0]).abs());
    }
}
