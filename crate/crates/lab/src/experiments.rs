use std::path::PathBuf;
use std::sync::Arc;

use landau_core::chapman_enskog::{build_burnett_set, burnett_identities, decay_check, BurnettTable, IdentityTolerances};
use landau_core::collision_operator::{estimate_coercivity, m_inverse_norm, DiscreteLandauOperator};
use landau_core::contact_wave::{solve_selfsimilar, verify_decay_rates, verify_envelope, ContactWaveProfile, DecayQuantity, Lq};
use landau_core::energy_diagnostics::{
    energy_report, fit_wave_q3, g_sup_check, localized_inequality_suite, LocalizerPair, MicroBasis, MicroProxy,
};
use landau_core::fit::log_log;
use landau_core::fluid_solver::{run_stability_experiment, PerturbationState, StabilityRun};
use landau_core::velocity_space::{MaxwellianParams, SigmaField, VelocityField, VelocityGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cache::{Cache, TableSource};
use crate::io::{num, RunDir, Table};
use crate::manifest::RunManifest;
use crate::{Experiment, InModule, LabError, RunConfig};

/// Envelope-fit sample times and the ζ-ray sample points at t = 0.
const ENVELOPE_TIMES: [f64; 4] = [0.0, 1.0, 10.0, 100.0];
const DECAY_RANGE: (f64, f64) = (1.0, 1e4);
/// At most this many x-points per written snapshot.
const SNAPSHOT_POINTS: usize = 801;
/// At most this many written snapshots (besides t = 0).
const SNAPSHOT_COUNT: usize = 10;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub threads: usize,
    pub cache: Cache,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayFitSummary {
    pub quantity: String,
    pub k: usize,
    pub q: String,
    pub fitted: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContactWaveSummary {
    pub delta: f64,
    pub p_plus: f64,
    pub residual: f64,
    pub iterations: usize,
    pub envelope_c: f64,
    pub envelope_c1: f64,
    pub envelope_worst_ratio: f64,
    pub decay_fits: Vec<DecayFitSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LandauOpSummary {
    pub n: usize,
    pub theta: f64,
    pub operator_scale: f64,
    /// Worst |∫ψQ(F,F)| / Σ|ψQ(F,F)| over samples and invariants.
    pub conservation_worst: f64,
    /// Worst ‖L_M χ_k‖ / (scale ‖χ_k‖).
    pub kernel_worst: f64,
    pub c2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BurnettSummary {
    pub table: String,
    pub mu_exponent: f64,
    pub kappa_exponent: f64,
    pub theta_ref: f64,
    pub mu_ref: f64,
    pub kappa_ref: f64,
    pub identities_holding: usize,
    pub identities: usize,
    pub decay_constants: Vec<f64>,
    pub decay_bounded: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvolveSummary {
    pub t_end: f64,
    pub dt: f64,
    pub steps: usize,
    pub snapshots: usize,
    pub sup_initial: f64,
    pub sup_final: f64,
    pub relative_entropy_initial: f64,
    pub relative_entropy_final: f64,
    pub mass_drift: f64,
    pub energy_drift: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsSummary {
    pub lambda: f64,
    pub micro_proxy: bool,
    pub e_initial: f64,
    pub e_final: f64,
    pub d_integral: f64,
    pub q_final: f64,
    pub q_positive_non_increasing: bool,
    pub q3_tail_fraction: f64,
    pub wave_q3_exponent: f64,
    pub g_sup_deviation: f64,
    pub localized_min_margin: f64,
    pub residual_mass: f64,
    pub residual_energy: f64,
    pub q1_min: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Summary {
    pub experiment: String,
    pub config_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contact_wave: Option<ContactWaveSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub landau_op: Option<LandauOpSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burnett: Option<BurnettSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evolve: Option<EvolveSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<DiagnosticsSummary>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub summary: Summary,
    pub manifest: RunManifest,
}

/// Validates, runs the selected pipeline into `config.output_dir`, and writes
/// `config.toml`, `summary.json` and `manifest.json` next to the artifacts.
pub fn run(config: &RunConfig, opts: &RunOptions) -> Result<RunOutcome, LabError> {
    config.validate()?;
    let hash = config.hash();
    let mut dir = RunDir::create(&config.output_dir)?;
    let mut man = RunManifest::new(config.experiment.name(), &hash, opts.threads, &opts.cache.describe());
    dir.write_bytes("config.toml", config.to_toml().as_bytes())?;
    let mut summary = Summary { experiment: config.experiment.name().into(), config_hash: hash, ..Default::default() };
    let mut ctx = Ctx { cfg: config, cache: &opts.cache, dir: &mut dir, man: &mut man, summary: &mut summary };
    let outcome = (|| -> Result<(), LabError> {
        match config.experiment {
            Experiment::ContactWave => {
                ctx.profile()?;
            }
            Experiment::LandauOp => ctx.landau_op()?,
            Experiment::Burnett => {
                ctx.burnett()?;
            }
            Experiment::Evolve => {
                let (p, _) = ctx.profile()?;
                ctx.evolve(&p)?;
            }
            Experiment::Diagnostics | Experiment::FullStability => {
                let full = config.experiment == Experiment::FullStability;
                let (p, c1) = ctx.profile()?;
                let table = if full { ctx.burnett()? } else { ctx.table()?.0 };
                let run = ctx.evolve(&p)?;
                ctx.diagnostics(&p, &run, c1, &table)?;
            }
        }
        Ok(())
    })();
    // A failed invariant still leaves the summary and manifest behind.
    let failure = match outcome {
        Ok(()) => None,
        Err(e @ (LabError::Solver { .. } | LabError::Io { .. })) => return Err(e),
        Err(e) => Some(e),
    };
    dir.write_json("summary.json", &summary)?;
    man.files = dir.files().to_vec();
    let manifest_text = serde_json::to_string_pretty(&man).expect("manifest serialises") + "\n";
    let path = dir.root().join("manifest.json");
    std::fs::write(&path, manifest_text).map_err(|e| LabError::io(&path, e))?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(RunOutcome { dir: dir.root().to_path_buf(), summary, manifest: man })
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    cache: &'a Cache,
    dir: &'a mut RunDir,
    man: &'a mut RunManifest,
    summary: &'a mut Summary,
}

fn q_name(q: Lq) -> &'static str {
    match q {
        Lq::One => "1",
        Lq::Two => "2",
        Lq::Inf => "inf",
    }
}

fn quantity_name(q: DecayQuantity) -> &'static str {
    match q {
        DecayQuantity::SpaceVTheta => "dx^k [v, theta]",
        DecayQuantity::SpaceU => "dx^k u1",
        DecayQuantity::TimeVTheta => "dt^k [v, theta]",
        DecayQuantity::TimeU => "dt^k u1",
    }
}

impl Ctx<'_> {
    /// Wave profile, envelope and decay fits; returns the profile and c₁.
    fn profile(&mut self) -> Result<(ContactWaveProfile, f64), LabError> {
        let cfg = self.cfg;
        let far = cfg.far()?;
        let law = cfg.transport_law()?;
        let profile =
            self.man.timed("contact-wave profile", || solve_selfsimilar(far, law, cfg.profile_settings())).in_module("contact_wave")?;
        let mut t = Table::new(&["zeta", "Theta", "dTheta", "d2Theta"]);
        for s in profile.samples() {
            t.push_nums(&s);
        }
        self.dir.write_csv("profile.csv", &t)?;

        let mut w = Table::new(&["t", "x", "v", "u1", "theta"]);
        for tt in [1.0_f64, 10.0, 100.0] {
            let half = profile.z() * (1.0 + tt).sqrt();
            for i in 0..=400 {
                let x = -half + 2.0 * half * i as f64 / 400.0;
                let [v, u1, th] = profile.state(tt, x);
                w.push_nums(&[tt, x, v, u1, th]);
            }
        }
        self.dir.write_csv("wave_states.csv", &w)?;

        let xs: Vec<f64> = (-400..=400).map(|i| i as f64 * 0.25).collect();
        let env = self.man.timed("envelope fit", || verify_envelope(&profile, &ENVELOPE_TIMES, &xs)).in_module("contact_wave")?;
        let mut fits = Vec::new();
        if far.delta() > 0.0 {
            self.man.timed("decay fits", || -> Result<(), LabError> {
                for qty in [DecayQuantity::SpaceVTheta, DecayQuantity::SpaceU] {
                    for q in [Lq::One, Lq::Two] {
                        let f = verify_decay_rates(&profile, qty, 1, q, DECAY_RANGE, 9).in_module("contact_wave")?;
                        fits.push(DecayFitSummary {
                            quantity: quantity_name(qty).into(),
                            k: 1,
                            q: q_name(q).into(),
                            fitted: f.fitted,
                            predicted: f.predicted,
                        });
                    }
                }
                Ok(())
            })?;
        }
        let mut d = Table::new(&["quantity", "k", "q", "fitted", "predicted"]);
        for f in &fits {
            d.push(vec![f.quantity.clone(), f.k.to_string(), f.q.clone(), num(f.fitted), num(f.predicted)]);
        }
        self.dir.write_csv("decay_fits.csv", &d)?;
        self.summary.contact_wave = Some(ContactWaveSummary {
            delta: far.delta(),
            p_plus: far.p_plus(),
            residual: profile.residual(),
            iterations: profile.iterations(),
            envelope_c: env.c,
            envelope_c1: env.c1,
            envelope_worst_ratio: env.worst_ratio,
            decay_fits: fits,
        });
        Ok((profile, env.c1))
    }

    fn table(&mut self) -> Result<(BurnettTable, TableSource), LabError> {
        let cfg = self.cfg;
        let cache = self.cache;
        self.man.timed("burnett table", || cache.burnett_table(&cfg.velocity.thetas, cfg.table_settings()))
    }

    fn reference_operator(&mut self) -> Result<DiscreteLandauOperator, LabError> {
        let v = &self.cfg.velocity;
        let params = MaxwellianParams::new(1.0, [0.0; 3], v.theta_ref).in_module("velocity_space")?;
        let grid = Arc::new(VelocityGrid::thermal(v.hat_half_width, v.n, v.theta_ref).in_module("velocity_space")?);
        let settings = self.cfg.operator_settings();
        self.man.timed("operator assembly", || DiscreteLandauOperator::new(grid, params, settings)).in_module("collision_operator")
    }

    fn burnett(&mut self) -> Result<BurnettTable, LabError> {
        let (table, prov) = self.table()?;
        let mut t = Table::new(&["theta", "mu", "kappa", "iterations"]);
        for e in table.entries() {
            t.push(vec![num(e.theta), num(e.mu), num(e.kappa), e.iterations.to_string()]);
        }
        self.dir.write_csv("transport.csv", &t)?;
        let thetas: Vec<f64> = table.entries().iter().map(|e| e.theta).collect();
        let (mu_exp, kappa_exp) = if thetas.len() >= 2 {
            let mus: Vec<f64> = table.entries().iter().map(|e| e.mu).collect();
            let kappas: Vec<f64> = table.entries().iter().map(|e| e.kappa).collect();
            (log_log(&thetas, &mus).in_module("chapman_enskog")?.slope, log_log(&thetas, &kappas).in_module("chapman_enskog")?.slope)
        } else {
            (f64::NAN, f64::NAN)
        };

        let op = self.reference_operator()?;
        let inv = self.cfg.inversion();
        let bs = self.man.timed("burnett set", || build_burnett_set(&op, inv)).in_module("chapman_enskog")?;
        let (mu_ref, kappa_ref) = landau_core::chapman_enskog::transport_coefficients(&bs).in_module("chapman_enskog")?;
        let checks = burnett_identities(&bs, IdentityTolerances::default());
        let mut l = Table::new(&["statement", "deviation", "tolerance", "holds"]);
        for b in &checks {
            l.push(vec![b.name.clone(), num(b.deviation), num(b.tolerance), b.holds.to_string()]);
        }
        self.dir.write_csv("burnett_identities.csv", &l)?;
        let decay = decay_check(&bs, 0.1);
        let mut d = Table::new(&["derivative", "c_beta", "inner_max", "outer_max", "bounded"]);
        for b in &decay {
            let name = b.derivative.map_or("none".to_string(), |a| format!("xi{}", a + 1));
            d.push(vec![name, num(b.c_beta), num(b.inner_max), num(b.outer_max), b.bounded.to_string()]);
        }
        self.dir.write_csv("burnett_decay.csv", &d)?;
        let holding = checks.iter().filter(|b| b.holds).count();
        let bounded = decay.iter().all(|b| b.bounded && b.c_beta.is_finite());
        self.summary.burnett = Some(BurnettSummary {
            table: if prov == TableSource::Cached { "cached".into() } else { "built".into() },
            mu_exponent: mu_exp,
            kappa_exponent: kappa_exp,
            theta_ref: self.cfg.velocity.theta_ref,
            mu_ref,
            kappa_ref,
            identities_holding: holding,
            identities: checks.len(),
            decay_constants: decay.iter().map(|b| b.c_beta).collect(),
            decay_bounded: bounded,
        });
        if holding != checks.len() {
            let failed: Vec<&str> = checks.iter().filter(|b| !b.holds).map(|b| b.name.as_str()).collect();
            return Err(LabError::Invariant(format!("Burnett identities fail: {}", failed.join("; "))));
        }
        if !bounded {
            return Err(LabError::Invariant("Burnett inversions are not Gaussian-bounded".into()));
        }
        Ok(table)
    }

    fn landau_op(&mut self) -> Result<(), LabError> {
        let op = self.reference_operator()?;
        let lo = &self.cfg.landau_op;
        let seed = self.cfg.seed;
        let grid = op.grid().clone();
        let params = *op.params();
        let scale = self.man.timed("norm estimate", || op.norm_estimate(30));

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cons = Table::new(&["sample", "invariant", "integral", "scale", "ratio"]);
        let mut worst: f64 = 0.0;
        let psi: [fn([f64; 3]) -> f64; 5] = [|_| 1.0, |x| x[0], |x| x[1], |x| x[2], |x| 0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2])];
        self.man.timed("conservation", || -> Result<(), LabError> {
            for s in 0..lo.conservation_samples {
                let f = random_distribution(&grid, &params, &mut rng);
                let q = op.apply_q(&f, &f).in_module("collision_operator")?;
                for (k, p) in psi.iter().enumerate() {
                    let terms: Vec<f64> = (0..grid.len()).map(|a| grid.weights()[a] * p(grid.node(a)) * q.values()[a]).collect();
                    let integral = landau_core::sum::pairwise(&terms);
                    let abs = terms.iter().map(|t| t.abs()).sum::<f64>();
                    let ratio = integral.abs() / abs;
                    worst = worst.max(ratio);
                    cons.push(vec![s.to_string(), k.to_string(), num(integral), num(abs), num(ratio)]);
                }
            }
            Ok(())
        })?;
        self.dir.write_csv("conservation.csv", &cons)?;

        let mut kern = Table::new(&["k", "ratio"]);
        let mut kernel_worst: f64 = 0.0;
        for k in 0..5 {
            let chi = op.chi().chi(k);
            let l = op.apply_l_m(&chi).in_module("collision_operator")?;
            let r = m_inverse_norm(&op, &l) / (scale * m_inverse_norm(&op, &chi));
            kernel_worst = kernel_worst.max(r);
            kern.push(vec![k.to_string(), num(r)]);
        }
        self.dir.write_csv("kernel.csv", &kern)?;

        let sigma = SigmaField::new(&grid);
        let est = self
            .man
            .timed("coercivity", || estimate_coercivity(&op, &sigma, lo.coercivity_samples, lo.coercivity_degree, seed))
            .in_module("collision_operator")?;
        let mut c = Table::new(&["sample", "quotient"]);
        for (i, q) in est.quotients.iter().enumerate() {
            c.push(vec![i.to_string(), num(*q)]);
        }
        self.dir.write_csv("coercivity.csv", &c)?;
        self.summary.landau_op = Some(LandauOpSummary {
            n: grid.n(),
            theta: params.theta,
            operator_scale: scale,
            conservation_worst: worst,
            kernel_worst,
            c2: est.c2,
        });
        if worst > 1e-12 {
            return Err(LabError::Invariant(format!("collision invariants not conserved: worst ratio {worst:.3e}")));
        }
        if kernel_worst > 1e-6 {
            return Err(LabError::Invariant(format!("χ basis not in the kernel: worst ratio {kernel_worst:.3e}")));
        }
        if !(est.c2 > 0.0) {
            return Err(LabError::Invariant(format!("coercivity constant {} is not positive", est.c2)));
        }
        Ok(())
    }

    fn evolve(&mut self, profile: &ContactWaveProfile) -> Result<StabilityRun, LabError> {
        let cfg = self.cfg.stability_config()?;
        let spec = self.cfg.perturbation.spec();
        let run = self.man.timed("fluid run", || run_stability_experiment(profile, &spec, cfg)).in_module("fluid_solver")?;
        let mut r = Table::new(&["t", "sup", "relative_entropy", "localized", "mass", "energy"]);
        for rec in &run.records {
            r.push_nums(&[rec.t, rec.sup, rec.relative_entropy, rec.localized, rec.mass, rec.energy]);
        }
        self.dir.write_csv("records.csv", &r)?;

        let n = run.snapshots.len();
        let every = n.div_ceil(SNAPSHOT_COUNT).max(1);
        let nodes = cfg.grid.nodes();
        let stride = nodes.div_ceil(SNAPSHOT_POINTS).max(1);
        let mut s = Table::new(&["t", "x", "v", "u1", "u2", "u3", "theta", "v_pert", "u1_pert", "u2_pert", "u3_pert", "theta_pert"]);
        for (k, snap) in run.snapshots.iter().enumerate() {
            if k % every != 0 && k + 1 != n {
                continue;
            }
            let pert = PerturbationState::new(snap, profile);
            for i in (0..nodes).step_by(stride) {
                s.push_nums(&[
                    snap.t,
                    cfg.grid.x(i),
                    snap.v[i],
                    snap.u[0][i],
                    snap.u[1][i],
                    snap.u[2][i],
                    snap.theta[i],
                    pert.fields[0][i],
                    pert.fields[1][i],
                    pert.fields[2][i],
                    pert.fields[3][i],
                    pert.fields[4][i],
                ]);
            }
        }
        self.dir.write_csv("snapshots.csv", &s)?;
        let (first, last) = (&run.records[0], &run.records[run.records.len() - 1]);
        self.summary.evolve = Some(EvolveSummary {
            t_end: cfg.t_end,
            dt: run.dt,
            steps: run.steps,
            snapshots: n,
            sup_initial: first.sup,
            sup_final: last.sup,
            relative_entropy_initial: first.relative_entropy,
            relative_entropy_final: last.relative_entropy,
            mass_drift: (last.mass - first.mass).abs() / first.mass.abs(),
            energy_drift: (last.energy - first.energy).abs() / first.energy.abs(),
        });
        Ok(run)
    }

    fn diagnostics(&mut self, profile: &ContactWaveProfile, run: &StabilityRun, c1: f64, table: &BurnettTable) -> Result<(), LabError> {
        let cfg = self.cfg;
        let loc = match cfg.localizer.lambda {
            Some(l) => LocalizerPair::new(l),
            None => LocalizerPair::from_envelope(c1, cfg.localizer.cap),
        }
        .in_module("energy_diagnostics")?;
        let v = &cfg.velocity;
        let grid = Arc::new(VelocityGrid::new(v.basis_half_width, v.basis_n).in_module("velocity_space")?);
        let basis = MicroBasis::chapman_enskog(table, &grid, v.theta_ref).in_module("energy_diagnostics")?;
        let weights = cfg.weight_params()?;
        let report = self
            .man
            .timed("energy report", || {
                energy_report(run, profile, weights, loc, Some(MicroProxy { basis: &basis, theta_ref: v.theta_ref }))
            })
            .in_module("energy_diagnostics")?;
        let mut e = Table::new(&[
            "t",
            "E_macro",
            "E_micro",
            "D_macro",
            "D_micro",
            "F",
            "q3_wave",
            "q3_perturbation",
            "q",
            "localized",
            "localized_running",
            "sup",
        ]);
        for s in &report.samples {
            e.push_nums(&[
                s.t,
                s.edf.e_macro,
                s.edf.e_micro,
                s.edf.d_macro,
                s.edf.d_micro,
                s.edf.f,
                s.q3.wave,
                s.q3.perturbation,
                s.q,
                s.localized,
                s.localized_running,
                s.sup,
            ]);
        }
        self.dir.write_csv("energy.csv", &e)?;

        let suite = self
            .man
            .timed("localized inequality suite", || localized_inequality_suite(run, profile, &loc))
            .in_module("energy_diagnostics")?;
        let mut l = Table::new(&["case", "lhs", "rhs", "margin", "initial_term", "gradient_term", "pairing_term"]);
        for (name, r) in &suite {
            l.push(vec![name.clone(), num(r.lhs), num(r.rhs), num(r.margin), num(r.terms[0]), num(r.terms[1]), num(r.terms[2])]);
        }
        self.dir.write_csv("localized_inequality.csv", &l)?;
        let times: Vec<f64> = [0.0, 0.5, 1.0].iter().map(|f| f * cfg.evolve.t_end).collect();
        let g_dev = g_sup_check(&loc, &times);
        let wave_fit = self.man.timed("wave q3 fit", || fit_wave_q3(profile, DECAY_RANGE, 25, 4001));
        let wave_exp = match (cfg.far()?.delta() > 0.0, wave_fit) {
            (true, f) => f.in_module("energy_diagnostics")?.slope,
            (false, _) => f64::NAN,
        };
        let s = &report.samples;
        let q_ok = s.iter().all(|x| x.q > 0.0) && s.windows(2).all(|w| w[1].q <= w[0].q);
        let min_margin = suite.iter().map(|(_, r)| r.margin).fold(f64::INFINITY, f64::min);
        self.summary.diagnostics = Some(DiagnosticsSummary {
            lambda: loc.lambda(),
            micro_proxy: true,
            e_initial: s[0].edf.e(),
            e_final: s[s.len() - 1].edf.e(),
            d_integral: report.d_integral,
            q_final: s[s.len() - 1].q,
            q_positive_non_increasing: q_ok,
            q3_tail_fraction: report.q3_tail_fraction(),
            wave_q3_exponent: wave_exp,
            g_sup_deviation: g_dev,
            localized_min_margin: min_margin,
            residual_mass: report.residual.mass,
            residual_energy: report.residual.energy,
            q1_min: report.residual.q1_min,
        });
        if !q_ok {
            return Err(LabError::Invariant("q(t) is not positive and non-increasing".into()));
        }
        if min_margin < 0.0 {
            let bad: Vec<&str> = suite.iter().filter(|(_, r)| r.margin < 0.0).map(|(n, _)| n.as_str()).collect();
            return Err(LabError::Invariant(format!("localized inequality fails for {}", bad.join(", "))));
        }
        Ok(())
    }
}

/// A positive, smooth, non-Maxwellian distribution in thermal units: a
/// shifted Gaussian times 1.5 + 0.3·(random quadratic).
pub fn random_distribution(grid: &Arc<VelocityGrid>, params: &MaxwellianParams, rng: &mut ChaCha8Rng) -> VelocityField {
    let c: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
    let centre = [rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)];
    let width = rng.random_range(0.8..1.3);
    let params = *params;
    VelocityField::from_fn(grid.clone(), move |x| {
        let h = params.hat(x);
        let y = [h[0] - centre[0], h[1] - centre[1], h[2] - centre[2]];
        let p = c[0]
            + c[1] * y[0]
            + c[2] * y[1]
            + c[3] * y[2]
            + c[4] * y[0] * y[1]
            + c[5] * y[2] * y[2]
            + c[6] * y[0] * y[0]
            + c[7] * y[1] * y[2]
            + c[8] * y[0] * y[2]
            + c[9] * y[1] * y[1];
        (1.5 + 0.3 * p) * (-(y[0] * y[0] + y[1] * y[1] + y[2] * y[2]) / (2.0 * width * width)).exp()
    })
}
