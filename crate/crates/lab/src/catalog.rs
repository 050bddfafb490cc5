use crate::Experiment;

pub struct CatalogEntry {
    pub experiment: Experiment,
    pub summary: &'static str,
    /// The mathematical objects and statements the experiment exercises.
    pub exercises: &'static str,
}

pub const CATALOG: [CatalogEntry; 6] = [
    CatalogEntry {
        experiment: Experiment::ContactWave,
        summary: "self-similar viscous contact wave, envelope fit and decay-rate fits",
        exercises: "nonlinear diffusion equation for the wave temperature, Gaussian envelope bound, wave profile, L^q decay rates, wave remainders",
    },
    CatalogEntry {
        experiment: Experiment::Evolve,
        summary: "Lagrangian Navier-Stokes run of a perturbed contact wave",
        exercises: "compressible Navier-Stokes system in Lagrangian mass coordinates, perturbation variables, relative entropy",
    },
    CatalogEntry {
        experiment: Experiment::LandauOp,
        summary: "discrete Coulomb Landau operator: conservation, null space, coercivity",
        exercises: "collision invariants of Q, five-dimensional kernel of the linearised operator, sigma-norm coercivity",
    },
    CatalogEntry {
        experiment: Experiment::Burnett,
        summary: "Burnett inversions, transport coefficients and their identities",
        exercises: "Burnett functions and their inversions, Burnett inner-product identities, viscosity and heat conductivity, Gaussian decay of the inversions",
    },
    CatalogEntry {
        experiment: Experiment::Diagnostics,
        summary: "energy, dissipation and weight functionals along a fluid run",
        exercises: "time-velocity weight and q(t), dissipation rate q3, functionals E, D and F, localized heat-kernel inequality",
    },
    CatalogEntry {
        experiment: Experiment::FullStability,
        summary: "contact wave, Burnett table, fluid run and every diagnostic in one pipeline",
        exercises: "stability of the viscous contact wave under small perturbations, with the Chapman-Enskog micro part as the kinetic proxy",
    },
];

/// The text printed by `list`.
pub fn render() -> String {
    let mut out = String::new();
    for e in &CATALOG {
        out.push_str(&format!("{:<15} {}\n{:<15} exercises: {}\n", e.experiment.name(), e.summary, "", e.exercises));
    }
    out
}
