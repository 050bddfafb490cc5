use std::sync::{Arc, OnceLock};

use landau_core::chapman_enskog::*;
use landau_core::collision_operator::{invert_l_m, DiscreteLandauOperator, InversionOptions, OperatorSettings};
use landau_core::velocity_space::*;
use landau_core::{Error, R_GAS};

fn reference_set() -> &'static BurnettSet {
    static SET: OnceLock<BurnettSet> = OnceLock::new();
    SET.get_or_init(|| {
        let p = MaxwellianParams::new(1.0, [0.0; 3], 1.5).unwrap();
        let g = Arc::new(VelocityGrid::thermal(7.0, 16, 1.5).unwrap());
        let op = DiscreteLandauOperator::new(g, p, OperatorSettings::default()).unwrap();
        build_burnett_set(&op, InversionOptions::default()).unwrap()
    })
}

fn table() -> &'static BurnettTable {
    static TABLE: OnceLock<BurnettTable> = OnceLock::new();
    TABLE.get_or_init(|| BurnettTable::build(&[1.0, 1.5, 2.0, 2.5], TableSettings::default()).unwrap())
}

#[test]
fn burnett_functions_are_microscopic() {
    let bs = reference_set();
    let m = build_maxwellian(bs.params(), bs.a(0).grid()).unwrap();
    let chi = ChiBasis::new(bs.params(), &m, GRAM_TOL).unwrap();
    for j in 0..3 {
        assert!(chi.macro_size(bs.a(j)) < 1e-9 * bs.a(j).norm());
        for k in 0..3 {
            assert!(chi.macro_size(bs.b(j, k)) < 1e-9 * bs.b(j, k).norm());
        }
    }
    assert!(bs.rhs_macro_fraction < 1e-6);
}

#[test]
fn burnett_identities_hold() {
    let report = burnett_identities(reference_set(), IdentityTolerances::default());
    assert_eq!(report.len(), 8);
    for b in &report {
        assert!(b.holds, "{b:?}");
    }
    // Cross terms vanish by lattice symmetry, far below the 1e-4 tolerance.
    for k in [1, 2, 6] {
        assert!(report[k].deviation < 1e-10, "{:?}", report[k]);
    }
}

#[test]
fn fifth_identity_sign_and_half_relation() {
    let bs = reference_set();
    for (i, j) in [(0, 1), (1, 2), (2, 0)] {
        let cross = bs.bb(i, i, j, j);
        let diag = bs.bb(i, i, i, i);
        assert!(cross > 0.0 && diag < 0.0);
        assert!((cross + 0.5 * diag).abs() < 1e-8 * diag.abs());
    }
}

#[test]
fn isotropy_defect_shrinks_under_refinement() {
    let dev = |bs11: f64, bs1122: f64, b1212: f64| ((bs11 - bs1122) - 2.0 * b1212).abs() / (2.0 * b1212).abs();
    let bs = reference_set();
    let fine = dev(bs.bb(0, 0, 0, 0), bs.bb(0, 0, 1, 1), bs.bb(0, 1, 0, 1));

    let p = MaxwellianParams::new(1.0, [0.0; 3], 1.5).unwrap();
    let g = Arc::new(VelocityGrid::thermal(7.0, 12, 1.5).unwrap());
    let op = DiscreteLandauOperator::new(g.clone(), p, OperatorSettings { gram_tol: None, ..Default::default() }).unwrap();
    let solve = |i: usize, j: usize| {
        let hat = VelocityField::from_fn(g.clone(), |x| hat_b(i, j, p.hat(x)));
        let rhs = op.chi().p1(&hat.mul(op.background())).unwrap();
        (hat, invert_l_m(&op, &rhs, InversionOptions::default()).unwrap().solution)
    };
    let (h11, b11) = solve(0, 0);
    let (h12, b12) = solve(0, 1);
    let h22 = VelocityField::from_fn(g.clone(), |x| hat_b(1, 1, p.hat(x)));
    let coarse = dev(h11.inner(&b11), h22.inner(&b11), h12.inner(&b12));
    assert!(fine < coarse, "N=16: {fine}, N=12: {coarse}");
}

#[test]
fn transport_coefficients_are_positive_and_index_independent() {
    let bs = reference_set();
    let (mu, kappa) = transport_coefficients(bs).unwrap();
    assert!(mu > 0.0 && kappa > 0.0);
    let theta = bs.params().theta;
    let mu13 = -R_GAS * theta * bs.bb(0, 2, 0, 2);
    let mu23 = -R_GAS * theta * bs.bb(1, 2, 1, 2);
    assert!((mu13 - mu).abs() < 1e-2 * mu && (mu23 - mu).abs() < 1e-2 * mu);
    let kappa3 = -R_GAS * R_GAS * theta * bs.aa(2, 2);
    assert!((kappa3 - kappa).abs() < 1e-2 * kappa);
}

#[test]
fn transport_coefficients_do_not_depend_on_bulk_velocity_or_volume() {
    let (mu0, k0) = transport_coefficients(reference_set()).unwrap();
    let p = MaxwellianParams::new(0.8, [0.1, 0.0, 0.0], 1.5).unwrap();
    let g = Arc::new(VelocityGrid::thermal(7.0, 16, 1.5).unwrap());
    let op = DiscreteLandauOperator::new(g.clone(), p, OperatorSettings::default()).unwrap();
    let solve = |hat: VelocityField| {
        let rhs = op.chi().p1(&hat.mul(op.background())).unwrap();
        let x = invert_l_m(&op, &rhs, InversionOptions::default()).unwrap().solution;
        hat.inner(&x)
    };
    let mu = -R_GAS * 1.5 * solve(VelocityField::from_fn(g.clone(), |x| hat_b(0, 1, p.hat(x))));
    let kappa = -R_GAS * R_GAS * 1.5 * solve(VelocityField::from_fn(g.clone(), |x| hat_a(0, p.hat(x))));
    assert!((mu - mu0).abs() < 1e-2 * mu0, "{mu} vs {mu0}");
    assert!((kappa - k0).abs() < 1e-2 * k0, "{kappa} vs {k0}");
}

#[test]
fn transport_coefficients_scale_as_theta_to_five_halves() {
    let t = table();
    let thetas: Vec<f64> = t.entries().iter().map(|e| e.theta).collect();
    let mus: Vec<f64> = t.entries().iter().map(|e| e.mu).collect();
    let kappas: Vec<f64> = t.entries().iter().map(|e| e.kappa).collect();
    assert!(mus.iter().chain(&kappas).all(|v| *v > 0.0));
    let fm = landau_core::fit::log_log(&thetas, &mus).unwrap().slope;
    let fk = landau_core::fit::log_log(&thetas, &kappas).unwrap().slope;
    assert!((fm - 2.5).abs() < 0.1, "{fm}");
    assert!((fk - 2.5).abs() < 0.1, "{fk}");
    // Interpolation reproduces the nodes.
    let (m, k) = t.mu_kappa(2.0);
    assert!((m - mus[2]).abs() < 1e-12 * m && (k - kappas[2]).abs() < 1e-12 * k);
}

#[test]
fn viscosity_exponent_on_a_fixed_grid() {
    // One lattice for every θ, so the discretisation error varies with θ.
    let g = Arc::new(VelocityGrid::new(7.5, 17).unwrap());
    let thetas = [1.0, 1.5, 2.0, 2.5];
    let mus: Vec<f64> = thetas
        .iter()
        .map(|&th| {
            let p = MaxwellianParams::new(1.0, [0.0; 3], th).unwrap();
            let op = DiscreteLandauOperator::new(g.clone(), p, OperatorSettings { gram_tol: None, ..Default::default() }).unwrap();
            let hat = VelocityField::from_fn(g.clone(), |x| hat_b(0, 1, p.hat(x)));
            let rhs = op.chi().p1(&hat.mul(op.background())).unwrap();
            -R_GAS * th * hat.inner(&invert_l_m(&op, &rhs, InversionOptions::default()).unwrap().solution)
        })
        .collect();
    let slope = landau_core::fit::log_log(&thetas, &mus).unwrap().slope;
    assert!((slope - 2.5).abs() < 0.1, "{slope}");
}

#[test]
fn table_entry_matches_the_full_set() {
    let bs = reference_set();
    let t = table();
    let g = bs.a(0).grid();
    let p = *bs.params();
    let scale = bs.a(0).max_abs();
    for a in (0..g.len()).step_by(37) {
        let x = g.node(a);
        let [a1, b11, b12, b13] = t.eval(1.5, p.hat(x));
        assert!((a1 - bs.a(0).values()[a]).abs() < 1e-6 * scale);
        assert!((b11 - bs.b(0, 0).values()[a]).abs() < 1e-6 * scale);
        assert!((b12 - bs.b(0, 1).values()[a]).abs() < 1e-6 * scale);
        assert!((b13 - bs.b(0, 2).values()[a]).abs() < 1e-6 * scale);
    }
}

#[test]
fn decay_bound_holds_for_positive_eps_and_fails_for_negative() {
    let good = decay_check(reference_set(), 0.1);
    assert_eq!(good.len(), 4);
    for d in &good {
        assert!(d.c_beta.is_finite() && d.bounded, "{d:?}");
    }
    let bad = decay_check(reference_set(), -0.5);
    assert!(bad.iter().all(|d| !d.bounded));
}

fn norm_grid() -> Arc<VelocityGrid> {
    Arc::new(VelocityGrid::new(8.0, 20).unwrap())
}

#[test]
fn gbar_vanishes_for_flat_wave_and_is_linear_and_microscopic() {
    let t = table();
    let g = norm_grid();
    let states = vec![MaxwellianParams::new(1.0, [0.0; 3], 1.5).unwrap(), MaxwellianParams::new(1.1, [0.05, 0.0, 0.0], 1.7).unwrap()];
    let zero = reconstruct_gbar(&states, &[0.0, 0.0], &[0.0, 0.0], t, &g).unwrap();
    assert!(zero.cells.iter().all(|c| c.max_abs() == 0.0));

    let a = reconstruct_gbar(&states, &[0.3, -0.2], &[0.0, 0.0], t, &g).unwrap();
    let b = reconstruct_gbar(&states, &[0.0, 0.0], &[0.1, 0.4], t, &g).unwrap();
    let ab = reconstruct_gbar(&states, &[0.6, -0.4], &[-0.1, -0.4], t, &g).unwrap();
    for k in 0..2 {
        let want = a.cells[k].scaled(2.0).axpy(-1.0, &b.cells[k]);
        assert!(ab.cells[k].axpy(-1.0, &want).max_abs() < 1e-12 * want.max_abs());
        let m = build_maxwellian(&states[k], &g).unwrap();
        let chi = ChiBasis::unchecked(&states[k], &m).unwrap();
        assert!(chi.macro_size(&ab.cells[k]) < 1e-12 * ab.cells[k].max_abs() / m.max_abs().sqrt());
    }
    // Interpolation error from the ξ̂ lattice; measured 1.7% here.
    assert!(ab.raw_macro_fraction < 5e-2, "{}", ab.raw_macro_fraction);
    assert!(matches!(reconstruct_gbar(&states, &[0.0], &[0.0, 0.0], t, &g), Err(Error::Shape(_))));
}

#[test]
fn theta1_trivial_cases() {
    let g = Arc::new(VelocityGrid::new(6.0, 10).unwrap());
    let op =
        DiscreteLandauOperator::new(g.clone(), MaxwellianParams::reference(), OperatorSettings { gram_tol: None, ..Default::default() })
            .unwrap();
    let states = vec![MaxwellianParams::reference(); 4];
    let zeros = vec![vec![VelocityField::zeros(g.clone()); 4]; 3];
    let out = evaluate_theta1(&zeros, &states, 0.1, 0.5, &op).unwrap();
    assert!(out.iter().all(|f| f.max_abs() == 0.0));

    let mu = build_maxwellian(&MaxwellianParams::reference(), &g).unwrap();
    let gfield = VelocityField::from_fn(g.clone(), |x| 0.1 * x[0] * x[1]).mul(&mu);
    let constant = vec![vec![gfield.clone(); 4]; 3];
    let out = evaluate_theta1(&constant, &states, 0.1, 0.5, &op).unwrap();
    let q = op.apply_q(&gfield, &gfield).unwrap();
    for cell in &out[1..3] {
        assert!(cell.axpy(1.0, &q).max_abs() < 1e-14 * q.max_abs().max(1e-300));
    }
    assert!(matches!(evaluate_theta1(&constant[..2], &states, 0.1, 0.5, &op), Err(Error::Precondition(_))));
}
