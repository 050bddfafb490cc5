use std::path::{Path, PathBuf};

use landau_core::chapman_enskog::{default_thetas, TableSettings, Transport};
use landau_core::collision_operator::{InversionOptions, OperatorSettings};
use landau_core::contact_wave::{FarFieldData, ProfileSettings};
use landau_core::fluid_solver::{Gaussian, PerturbationSpec, SpatialGrid, StabilityConfig};
use landau_core::velocity_space::{VelocityGrid, WeightParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    ContactWave,
    Evolve,
    LandauOp,
    Burnett,
    Diagnostics,
    FullStability,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::ContactWave,
        Experiment::Evolve,
        Experiment::LandauOp,
        Experiment::Burnett,
        Experiment::Diagnostics,
        Experiment::FullStability,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::ContactWave => "contact-wave",
            Experiment::Evolve => "evolve",
            Experiment::LandauOp => "landau-op",
            Experiment::Burnett => "burnett",
            Experiment::Diagnostics => "diagnostics",
            Experiment::FullStability => "full-stability",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FarField {
    pub theta_minus: f64,
    pub theta_plus: f64,
    pub p_plus: f64,
    pub u1: f64,
}

impl Default for FarField {
    fn default() -> Self {
        Self { theta_minus: 1.55, theta_plus: 1.45, p_plus: 1.0, u1: 0.0 }
    }
}

/// μ = μ₀θ^{5/2}, κ = κ₀θ^{5/2}; the defaults are the Burnett values of the
/// default table (N = 16) at θ = 3/2, divided by (3/2)^{5/2}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransportLaw {
    pub mu0: f64,
    pub kappa0: f64,
}

impl Default for TransportLaw {
    fn default() -> Self {
        Self { mu0: 0.8062, kappa0: 1.7747 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VelocitySection {
    /// Half-width in thermal units ξ/√(Rθ).
    pub hat_half_width: f64,
    pub n: usize,
    /// Temperatures of the Burnett table.
    pub thetas: Vec<f64>,
    /// Temperature of the frozen micro basis and the single-θ operator runs.
    pub theta_ref: f64,
    /// Lattice of the micro basis used by the energy functionals.
    pub basis_half_width: f64,
    pub basis_n: usize,
}

impl Default for VelocitySection {
    fn default() -> Self {
        Self { hat_half_width: 7.0, n: 16, thetas: default_thetas(), theta_ref: 1.5, basis_half_width: 7.0, basis_n: 12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpatialSection {
    pub half_width: f64,
    pub cells: usize,
}

impl Default for SpatialSection {
    fn default() -> Self {
        let g = SpatialGrid::default_run();
        Self { half_width: g.half_width, cells: g.cells }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileSection {
    pub z: f64,
    pub nodes: usize,
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for ProfileSection {
    fn default() -> Self {
        let p = ProfileSettings::default();
        Self { z: p.z, nodes: p.nodes, tol: p.tol, max_iterations: p.max_iterations }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub minres_tol: f64,
    pub minres_max_iter: usize,
    pub micro_tol: f64,
    pub gram_tol: f64,
    pub reg_radius_factor: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let i = InversionOptions::default();
        let o = OperatorSettings::default();
        Self {
            minres_tol: i.tol,
            minres_max_iter: i.max_iter,
            micro_tol: i.micro_tol,
            gram_tol: o.gram_tol.unwrap_or(1e-6),
            reg_radius_factor: o.reg_radius_factor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightSection {
    pub l: f64,
    pub q1: f64,
    pub q2: f64,
}

impl Default for WeightSection {
    fn default() -> Self {
        let w = WeightParams::default_params();
        Self { l: w.l, q1: w.q1, q2: w.q2 }
    }
}

/// λ = min(cap, c₁/4) from the fitted envelope unless `lambda` is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LocalizerSection {
    pub lambda: Option<f64>,
    pub cap: f64,
}

impl Default for LocalizerSection {
    fn default() -> Self {
        Self { lambda: None, cap: 0.25 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
}

/// Either the standard bump set scaled by `amplitude`, or explicit bumps per
/// field (all five lists empty means "use the standard set").
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbationSection {
    pub amplitude: f64,
    pub v: Vec<Bump>,
    pub u1: Vec<Bump>,
    pub u2: Vec<Bump>,
    pub u3: Vec<Bump>,
    pub theta: Vec<Bump>,
}

impl PerturbationSection {
    fn standard(amplitude: f64) -> Self {
        Self { amplitude, ..Default::default() }
    }

    pub fn spec(&self) -> PerturbationSpec {
        let lists = [&self.v, &self.u1, &self.u2, &self.u3, &self.theta];
        if lists.iter().all(|l| l.is_empty()) {
            return PerturbationSpec::default_with_amplitude(self.amplitude);
        }
        PerturbationSpec {
            fields: lists.map(|l| l.iter().map(|b| Gaussian { amplitude: b.amplitude, center: b.center, width: b.width }).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveSection {
    pub t_end: f64,
    pub snap_every: f64,
    pub eta0: f64,
    pub perturbation_gate: f64,
}

impl Default for EvolveSection {
    fn default() -> Self {
        let s = StabilityConfig::default();
        Self { t_end: s.t_end, snap_every: s.snap_every, eta0: s.eta0, perturbation_gate: s.perturbation_gate }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LandauOpSection {
    /// Random distributions for the conservation check.
    pub conservation_samples: usize,
    pub coercivity_samples: usize,
    pub coercivity_degree: usize,
}

impl Default for LandauOpSection {
    fn default() -> Self {
        Self { conservation_samples: 20, coercivity_samples: 10, coercivity_degree: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub far_field: FarField,
    pub transport: TransportLaw,
    pub velocity: VelocitySection,
    pub spatial: SpatialSection,
    pub profile: ProfileSection,
    pub solver: SolverSection,
    pub weights: WeightSection,
    pub localizer: LocalizerSection,
    pub perturbation: PerturbationSection,
    pub evolve: EvolveSection,
    pub landau_op: LandauOpSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::FullStability,
            seed: 7,
            output_dir: PathBuf::from("runs"),
            far_field: FarField::default(),
            transport: TransportLaw::default(),
            velocity: VelocitySection::default(),
            spatial: SpatialSection::default(),
            profile: ProfileSection::default(),
            solver: SolverSection::default(),
            weights: WeightSection::default(),
            localizer: LocalizerSection::default(),
            perturbation: PerturbationSection::standard(0.02),
            evolve: EvolveSection::default(),
            landau_op: LandauOpSection::default(),
        }
    }
}

impl RunConfig {
    pub fn default_for(experiment: Experiment) -> Self {
        Self { experiment, output_dir: PathBuf::from("runs").join(experiment.name()), ..Self::default() }
    }

    pub fn parse(text: &str) -> Result<Self, LabError> {
        toml::from_str(text).map_err(|e| LabError::Config(format!("parse error: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            LabError::Config(m) => LabError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Canonical TOML: field order fixed by the struct, so identical
    /// configurations hash identically whatever the source formatting.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("RunConfig always serialises")
    }

    /// SHA-256 of the canonical text with the output directory blanked, so
    /// relocating a run does not change its identity.
    pub fn hash(&self) -> String {
        let canonical = Self { output_dir: PathBuf::new(), ..self.clone() };
        format!("{:x}", Sha256::digest(canonical.to_toml().as_bytes()))
    }

    pub fn far(&self) -> Result<FarFieldData, LabError> {
        let f = &self.far_field;
        FarFieldData::from_temperatures(f.theta_minus, f.theta_plus, f.p_plus, f.u1).map_err(|e| invalid("far_field", e))
    }

    pub fn transport_law(&self) -> Result<Transport, LabError> {
        Transport::power_law(self.transport.mu0, self.transport.kappa0).map_err(|e| invalid("transport", e))
    }

    pub fn profile_settings(&self) -> ProfileSettings {
        let p = &self.profile;
        ProfileSettings { z: p.z, tol: p.tol, nodes: p.nodes, max_iterations: p.max_iterations }
    }

    pub fn inversion(&self) -> InversionOptions {
        let s = &self.solver;
        InversionOptions { tol: s.minres_tol, max_iter: s.minres_max_iter, micro_tol: s.micro_tol }
    }

    pub fn operator_settings(&self) -> OperatorSettings {
        OperatorSettings { reg_radius_factor: self.solver.reg_radius_factor, gram_tol: Some(self.solver.gram_tol) }
    }

    pub fn table_settings(&self) -> TableSettings {
        TableSettings {
            hat_half_width: self.velocity.hat_half_width,
            n: self.velocity.n,
            inversion: self.inversion(),
            operator: self.operator_settings(),
        }
    }

    pub fn spatial_grid(&self) -> Result<SpatialGrid, LabError> {
        SpatialGrid::new(self.spatial.half_width, self.spatial.cells).map_err(|e| invalid("spatial", e))
    }

    pub fn weight_params(&self) -> Result<WeightParams, LabError> {
        let w = &self.weights;
        WeightParams::new(w.l, w.q1, w.q2).map_err(|e| invalid("weights", e))
    }

    pub fn stability_config(&self) -> Result<StabilityConfig, LabError> {
        let e = &self.evolve;
        Ok(StabilityConfig {
            grid: self.spatial_grid()?,
            t_end: e.t_end,
            snap_every: e.snap_every,
            eta0: e.eta0,
            perturbation_gate: e.perturbation_gate,
            monitor_bounds: true,
            lambda: self.localizer.cap,
        })
    }

    /// Every module-level precondition that can be checked without running anything.
    pub fn validate(&self) -> Result<(), LabError> {
        let far = self.far()?;
        self.transport_law()?;
        let p = &self.profile;
        if !(p.z > 0.0 && p.tol > 0.0 && p.nodes >= 5 && p.max_iterations > 0) {
            return Err(LabError::Invalid("profile: need z > 0, tol > 0, nodes ≥ 5, max_iterations > 0".into()));
        }
        let v = &self.velocity;
        VelocityGrid::new(v.hat_half_width, v.n).map_err(|e| invalid("velocity", e))?;
        VelocityGrid::new(v.basis_half_width, v.basis_n).map_err(|e| invalid("velocity.basis", e))?;
        if v.thetas.is_empty() || v.thetas.iter().any(|t| !(*t > 0.0)) || v.thetas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LabError::Invalid("velocity.thetas: need a non-empty increasing list of positive temperatures".into()));
        }
        if !(v.theta_ref > 0.0) {
            return Err(LabError::Invalid("velocity.theta_ref must be positive".into()));
        }
        let s = &self.solver;
        if !(s.minres_tol > 0.0 && s.minres_max_iter > 0 && s.micro_tol > 0.0 && s.gram_tol > 0.0 && s.reg_radius_factor >= 0.0) {
            return Err(LabError::Invalid("solver: tolerances and iteration limits must be positive".into()));
        }
        self.weight_params()?;
        let l = &self.localizer;
        if let Some(lam) = l.lambda {
            if !(lam > 0.0) {
                return Err(LabError::Invalid(format!("localizer.lambda = {lam} must be positive")));
            }
        }
        if !(l.cap > 0.0) {
            return Err(LabError::Invalid("localizer.cap must be positive".into()));
        }
        let cfg = self.stability_config()?;
        if !(cfg.t_end > 0.0 && cfg.snap_every > 0.0 && cfg.snap_every <= cfg.t_end) {
            return Err(LabError::Invalid("evolve: need 0 < snap_every ≤ t_end".into()));
        }
        let evolves = matches!(self.experiment, Experiment::Evolve | Experiment::Diagnostics | Experiment::FullStability);
        if evolves {
            far.check_closeness(cfg.eta0).map_err(|e| invalid("far_field", e))?;
            let size = self.perturbation.spec().size();
            if !(size <= cfg.perturbation_gate) {
                return Err(LabError::Invalid(format!("perturbation: size {size} exceeds the gate {}", cfg.perturbation_gate)));
            }
            let b = [&self.perturbation.v, &self.perturbation.u1, &self.perturbation.u2, &self.perturbation.u3, &self.perturbation.theta];
            if b.iter().flat_map(|l| l.iter()).any(|g| !(g.width > 0.0)) {
                return Err(LabError::Invalid("perturbation: bump widths must be positive".into()));
            }
        }
        let lo = &self.landau_op;
        if lo.conservation_samples == 0 || lo.coercivity_samples == 0 {
            return Err(LabError::Invalid("landau_op: sample counts must be positive".into()));
        }
        Ok(())
    }
}

fn invalid(section: &str, e: landau_core::Error) -> LabError {
    LabError::Invalid(format!("{section}: {e}"))
}
