use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use landau_lab::cache::Cache;
use landau_lab::experiments::{run, RunOptions, Summary};
use landau_lab::{catalog, Experiment, LabError, RunConfig};

#[derive(Parser)]
#[command(name = "landau-lab", version, about = "Landau / viscous contact wave numerical laboratory")]
struct Cli {
    /// TOML run configuration; defaults are used for anything it omits.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config's `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads available to the modules (the numerical core is sequential).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Rebuild cached operators instead of reading them.
    #[arg(long, global = true)]
    no_cache: bool,
    /// Cache root for operator tables.
    #[arg(long, global = true, default_value = ".landau-cache")]
    cache_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Self-similar contact wave, envelope and decay fits.
    ContactWave,
    /// Fluid run of a perturbed contact wave.
    Evolve {
        /// Final time.
        #[arg(long = "T")]
        t_end: Option<f64>,
        #[arg(long)]
        snap_every: Option<f64>,
        /// Amplitude of the standard perturbation.
        #[arg(long)]
        perturb: Option<f64>,
    },
    /// Conservation, null space and coercivity of the discrete Landau operator.
    LandauOp,
    /// Burnett table, transport coefficients and their identities.
    Burnett,
    /// Energy functionals and the localized inequality along a fluid run.
    Diagnostics {
        /// Print a human-readable report to stdout.
        #[arg(long)]
        report: bool,
    },
    /// Every stage in one run.
    FullStability,
    /// Lists the experiments.
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: Cli) -> Result<(), LabError> {
    let (experiment, report) = match &cli.command {
        Command::List => {
            print!("{}", catalog::render());
            return Ok(());
        }
        Command::ContactWave => (Experiment::ContactWave, false),
        Command::Evolve { .. } => (Experiment::Evolve, false),
        Command::LandauOp => (Experiment::LandauOp, false),
        Command::Burnett => (Experiment::Burnett, false),
        Command::Diagnostics { report } => (Experiment::Diagnostics, *report),
        Command::FullStability => (Experiment::FullStability, false),
    };
    if cli.threads == 0 {
        return Err(LabError::Invalid("--threads must be at least 1".into()));
    }
    let mut config = match &cli.config {
        Some(path) => RunConfig { experiment, ..RunConfig::load(path)? },
        None => RunConfig::default_for(experiment),
    };
    if let Command::Evolve { t_end, snap_every, perturb } = cli.command {
        if let Some(t) = t_end {
            config.evolve.t_end = t;
        }
        if let Some(s) = snap_every {
            config.evolve.snap_every = s;
        }
        if let Some(a) = perturb {
            config.perturbation.amplitude = a;
        }
    }
    if let Some(out) = cli.out {
        config.output_dir = out;
    }
    let cache = if cli.no_cache { Cache::disabled() } else { Cache::new(&cli.cache_dir) };
    let outcome = run(&config, &RunOptions { threads: cli.threads, cache })?;
    println!("{} -> {} ({:.1} s)", experiment.name(), outcome.dir.display(), outcome.manifest.total_seconds());
    if report {
        print_report(&outcome.summary);
    }
    Ok(())
}

fn print_report(s: &Summary) {
    if let Some(e) = &s.evolve {
        println!("fluid run:   T = {}, dt = {:.3e}, {} steps", e.t_end, e.dt, e.steps);
        println!("             sup|perturbation| {:.4e} -> {:.4e}", e.sup_initial, e.sup_final);
        println!("             relative entropy  {:.4e} -> {:.4e}", e.relative_entropy_initial, e.relative_entropy_final);
    }
    if let Some(d) = &s.diagnostics {
        println!("functionals: lambda = {:.4e}", d.lambda);
        println!("             E {:.4e} -> {:.4e}, int D dt = {:.4e}", d.e_initial, d.e_final, d.d_integral);
        println!(
            "             q(T) = {:.4e}, q3 tail fraction = {:.3e}, wave q3 exponent = {:.3}",
            d.q_final, d.q3_tail_fraction, d.wave_q3_exponent
        );
        println!(
            "             localized inequality min margin = {:.4e}, sup g deviation = {:.2e}",
            d.localized_min_margin, d.g_sup_deviation
        );
    }
}
