//! `entcert` — simulate, estimate, and certify entanglement dimensionality
//! from randomized measurements.
//!
//! Each pipeline stage is its own subcommand (`gen-state`, `simulate`,
//! `estimate`, `boundary`, `certify`, …) so datasets can be produced,
//! inspected, and re-analyzed independently; `run` chains everything from a
//! single config file. All commands are deterministic given their seeds.
//!
//! Parallelism: worker threads default to the `ENTCERT_THREADS` environment
//! variable (or all cores); `--threads` overrides both.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use entcert_core::boundary::{boundary_curve, certification_curves, certify_point};
use entcert_core::io::{
    read_config, read_json, read_state, read_tomo_counts, write_curve_csv, write_dataset,
    write_json, write_state, ExperimentConfig, SCHEMA_VERSION,
};
use entcert_core::matrix::matrix_to_json;
use entcert_core::pipeline::{
    curve_filename, default_kappa4, measure_dataset, prepare_state, run_pipeline,
};
use entcert_core::qudit::max_entangled_state;
use entcert_core::randmeas::{
    calibrate_observable, estimate_moments_calibrated, MomentEstimate, Observable,
};
use entcert_core::sampling::{dephased_state, sample_haar, SeededStream};
use entcert_core::tomography::{mub_bases, reconstruct, FitConfig};
use entcert_core::witness::{
    dft_certify, dft_correlator, scrambling_comparison, RandomizedSide,
};
use entcert_core::{DensityMatrix, Error, Result};

#[derive(Parser)]
#[command(
    name = "entcert",
    version,
    about = "Simulate and certify entanglement dimensionality from randomized measurements"
)]
struct Cli {
    /// Print failures as one-line machine-readable JSON on stderr.
    #[arg(long, global = true)]
    error_json: bool,

    /// Worker threads (overrides ENTCERT_THREADS; default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a canonical bipartite state to a JSON file.
    GenState(GenStateArgs),
    /// Sample Haar-random unitaries to a JSON file.
    SampleUnitaries(SampleUnitariesArgs),
    /// Prepare the configured state and simulate its measurement dataset.
    Simulate(SimulateArgs),
    /// Estimate moments (with standard errors) from a dataset file.
    Estimate(EstimateArgs),
    /// Tabulate certification boundary curves as CSV.
    Boundary(BoundaryArgs),
    /// Classify a moment estimate against the boundary curves.
    Certify(CertifyArgs),
    /// Reconstruct a density matrix from two-party MUB counts.
    Tomo(TomoArgs),
    /// Evaluate the two-basis witness on a state.
    WitnessDft(WitnessArgs),
    /// Compare the witness against randomized certification under phase
    /// scrambling.
    NoiseSweep(NoiseSweepArgs),
    /// Measure moment-calibration factors for an observable.
    Calibrate(CalibrateArgs),
    /// Run the full pipeline from a config file.
    Run(RunArgs),
}

#[derive(Args)]
struct GenStateArgs {
    /// Local dimension of each party.
    #[arg(long)]
    d: usize,
    /// Phase-averaged state with this phase half-width instead of the
    /// maximally entangled default.
    #[arg(long)]
    dephased: Option<f64>,
    /// Ensemble size for the phase average.
    #[arg(long, default_value_t = 400)]
    ensemble: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output state JSON path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SampleUnitariesArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output JSON path.
    #[arg(long)]
    out: PathBuf,
}

/// Config-file overrides shared by `simulate` and `run`.
#[derive(Args)]
struct ConfigOverrides {
    /// Master seed (overrides the config's).
    #[arg(long)]
    seed: Option<u64>,
    /// Use exact correlators regardless of the config's n_events.
    #[arg(long)]
    exact: bool,
    /// Events per setting (overrides the config).
    #[arg(long, conflicts_with = "exact")]
    events: Option<u64>,
    /// Certification error-bar scale (overrides the config).
    #[arg(long)]
    k_sigma: Option<f64>,
}

impl ConfigOverrides {
    fn apply(&self, config: &mut ExperimentConfig) {
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if self.exact {
            config.n_events = None;
        }
        if let Some(events) = self.events {
            config.n_events = Some(events);
        }
        if let Some(k) = self.k_sigma {
            config.k_sigma = k;
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// Experiment config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for state.json and dataset.json.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    overrides: ConfigOverrides,
}

#[derive(Args)]
struct EstimateArgs {
    /// Dataset JSON to ingest.
    #[arg(long)]
    dataset: PathBuf,
    /// Fourth-moment calibration override (default: built-in constant).
    #[arg(long)]
    kappa4: Option<f64>,
    /// Output moments JSON path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BoundaryArgs {
    #[arg(long)]
    d: usize,
    /// Single Schmidt number (default: all of 1..d-1).
    #[arg(long)]
    r: Option<usize>,
    #[arg(long, default_value_t = 512)]
    grid: usize,
    /// Output directory for boundary_r{r}.csv files.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CertifyArgs {
    /// Moments JSON produced by `estimate`.
    #[arg(long)]
    moments: PathBuf,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 2.0)]
    k_sigma: f64,
    #[arg(long, default_value_t = 512)]
    grid: usize,
    /// Optional report JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TomoArgs {
    /// Tomography counts JSON.
    #[arg(long)]
    counts: PathBuf,
    /// Weigh all settings equally instead of by their event totals.
    #[arg(long)]
    unweighted: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    starts: usize,
    /// Output path for the reconstructed state JSON.
    #[arg(long)]
    out: PathBuf,
    /// Optional fit-diagnostics JSON path.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct WitnessArgs {
    /// State JSON to evaluate (default: the maximally entangled state).
    #[arg(long)]
    state: Option<PathBuf>,
    /// Local dimension (required with the default state).
    #[arg(long)]
    d: Option<usize>,
    /// Optional result JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct NoiseSweepArgs {
    #[arg(long)]
    d: usize,
    /// State JSON (default: the maximally entangled state).
    #[arg(long)]
    state: Option<PathBuf>,
    #[arg(long, default_value_t = 6)]
    trials: usize,
    /// Phase range lower edge.
    #[arg(long, default_value_t = 0.0)]
    phi_lo: f64,
    /// Phase range upper edge (default: full range 2π).
    #[arg(long, default_value_t = std::f64::consts::TAU)]
    phi_hi: f64,
    /// Settings per trial for the randomized side.
    #[arg(long, default_value_t = 800)]
    settings: usize,
    #[arg(long, default_value_t = 2.0)]
    k_sigma: f64,
    #[arg(long, default_value_t = 512)]
    grid: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output report JSON path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    d: usize,
    /// Explicit observable eigenvalues (default: equally spaced).
    #[arg(long, num_args = 2.., value_delimiter = ',')]
    lambda: Option<Vec<f64>>,
    /// Haar settings per reference state.
    #[arg(long, default_value_t = 20000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optional result JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for all artifacts.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    overrides: ConfigOverrides,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads(cli.threads);
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            if cli.error_json {
                let stage = match &err {
                    Error::Stage { stage, .. } => Some(*stage),
                    _ => None,
                };
                let payload = serde_json::json!({
                    "error": err.to_string(),
                    "stage": stage,
                });
                eprintln!("{payload}");
            } else {
                eprintln!("error: {err}");
            }
            ExitCode::FAILURE
        }
    }
}

fn init_threads(cli_threads: Option<usize>) {
    let n = cli_threads.or_else(|| {
        std::env::var("ENTCERT_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = n {
        if n >= 1 {
            // Errors only if a global pool already exists, which means a
            // thread count is already in effect.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn dispatch(command: &Command) -> Result<()> {
    match command {
        Command::GenState(args) => gen_state(args),
        Command::SampleUnitaries(args) => sample_unitaries(args),
        Command::Simulate(args) => simulate(args),
        Command::Estimate(args) => estimate(args),
        Command::Boundary(args) => boundary(args),
        Command::Certify(args) => certify(args),
        Command::Tomo(args) => tomo(args),
        Command::WitnessDft(args) => witness_dft(args),
        Command::NoiseSweep(args) => noise_sweep(args),
        Command::Calibrate(args) => calibrate(args),
        Command::Run(args) => run(args),
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(())
}

fn gen_state(args: &GenStateArgs) -> Result<()> {
    let rho = match args.dephased {
        Some(phimax) => dephased_state(
            args.d,
            phimax,
            args.ensemble,
            &SeededStream::new(args.seed, 0),
        )?,
        None => max_entangled_state(args.d)?,
    };
    ensure_parent(&args.out)?;
    write_state(&rho, &args.out)?;
    println!(
        "wrote {} ({}×{}, purity {:.6})",
        args.out.display(),
        rho.dim_a(),
        rho.dim_b(),
        rho.purity()
    );
    Ok(())
}

fn sample_unitaries(args: &SampleUnitariesArgs) -> Result<()> {
    if args.count == 0 {
        return Err(Error::Domain("--count must be at least 1".into()));
    }
    let unitaries = (0..args.count)
        .map(|i| {
            sample_haar(args.d, &SeededStream::new(args.seed, i as u64))
                .map(|u| matrix_to_json(u.matrix()))
        })
        .collect::<Result<Vec<_>>>()?;
    let payload = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "d": args.d,
        "seed": args.seed,
        "unitaries": unitaries,
    });
    ensure_parent(&args.out)?;
    write_json(&args.out, &payload)?;
    println!("wrote {} ({} unitaries at d={})", args.out.display(), args.count, args.d);
    Ok(())
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let mut config = read_config(&args.config)?;
    args.overrides.apply(&mut config);
    config.validate()?;
    std::fs::create_dir_all(&args.out)?;
    let rho = prepare_state(&config).map_err(|e| e.in_stage("state"))?;
    let state_path = args.out.join("state.json");
    write_state(&rho, &state_path)?;
    let dataset = measure_dataset(&config, &rho).map_err(|e| e.in_stage("measure"))?;
    let dataset_path = args.out.join("dataset.json");
    write_dataset(&dataset, &dataset_path)?;
    println!(
        "wrote {} and {} ({} settings, {})",
        state_path.display(),
        dataset_path.display(),
        dataset.records.len(),
        match config.n_events {
            Some(n) => format!("{n} events each"),
            None => "exact correlators".into(),
        }
    );
    Ok(())
}

fn estimate(args: &EstimateArgs) -> Result<()> {
    let dataset = entcert_core::io::ingest(&args.dataset)?;
    let xs = dataset.correlators()?;
    let kappa4 = args.kappa4.unwrap_or_else(|| default_kappa4(dataset.d));
    let est = estimate_moments_calibrated(&xs, dataset.d, kappa4)?;
    ensure_parent(&args.out)?;
    write_json(&args.out, &est)?;
    println!(
        "S2 = {:.4} ± {:.4}, S4 = {:.4} ± {:.4} (N = {}, kappa4 = {:.4})",
        est.s2, est.sigma_s2, est.s4, est.sigma_s4, est.n_tot, est.kappa4
    );
    Ok(())
}

fn boundary(args: &BoundaryArgs) -> Result<()> {
    std::fs::create_dir_all(&args.out)?;
    let rs: Vec<usize> = match args.r {
        Some(r) => vec![r],
        None => (1..args.d).collect(),
    };
    for r in rs {
        let curve = boundary_curve(r, args.d, args.grid)?;
        let path = args.out.join(curve_filename(r));
        write_curve_csv(&curve, &path)?;
        println!("wrote {} ({} points)", path.display(), curve.points().len());
    }
    Ok(())
}

fn certify(args: &CertifyArgs) -> Result<()> {
    let est: MomentEstimate = read_json(&args.moments)?;
    let curves = certification_curves(args.d, args.grid)?;
    let report = certify_point(&est, args.d, &curves, args.k_sigma)?;
    if let Some(out) = &args.out {
        ensure_parent(out)?;
        write_json(out, &report)?;
    }
    println!(
        "certified Schmidt number: {} (cleared curves: {:?}, k_sigma = {})",
        report.certified_r, report.cleared_curves, report.k_sigma
    );
    Ok(())
}

fn tomo(args: &TomoArgs) -> Result<()> {
    let data = read_tomo_counts(&args.counts)?;
    let d = data.d();
    let mubs = mub_bases(d)?;
    let cfg = FitConfig {
        n_starts: args.starts,
        ..FitConfig::default()
    };
    let (rho, fit) = reconstruct(
        &data,
        &mubs,
        !args.unweighted,
        &cfg,
        &SeededStream::new(args.seed, 0),
    )?;
    ensure_parent(&args.out)?;
    write_state(&rho, &args.out)?;
    if let Some(report_path) = &args.report {
        ensure_parent(report_path)?;
        write_json(report_path, &fit)?;
    }
    println!(
        "wrote {} (chi2 = {:.3e}, converged = {}, best start {}/{})",
        args.out.display(),
        fit.chi2,
        fit.converged,
        fit.best_start,
        fit.n_starts
    );
    Ok(())
}

fn load_state_or_mes(state: &Option<PathBuf>, d: Option<usize>) -> Result<DensityMatrix> {
    match state {
        Some(path) => read_state(path),
        None => {
            let d = d.ok_or_else(|| {
                Error::Validation("--d is required when no --state file is given".into())
            })?;
            max_entangled_state(d)
        }
    }
}

fn witness_dft(args: &WitnessArgs) -> Result<()> {
    let rho = load_state_or_mes(&args.state, args.d)?;
    let d = rho.dim_a();
    let value = dft_correlator(&rho)?;
    let certified = dft_certify(value, d)?;
    if let Some(out) = &args.out {
        ensure_parent(out)?;
        write_json(
            out,
            &serde_json::json!({
                "schema_version": SCHEMA_VERSION,
                "d": d,
                "witness_value": value,
                "certified_r": certified,
            }),
        )?;
    }
    println!("witness value = {value:.5}, certified Schmidt number >= {certified}");
    Ok(())
}

fn noise_sweep(args: &NoiseSweepArgs) -> Result<()> {
    let rho = load_state_or_mes(&args.state, Some(args.d))?;
    if rho.dim_a() != args.d {
        return Err(Error::Shape(format!(
            "state is {}×{} but --d is {}",
            rho.dim_a(),
            rho.dim_b(),
            args.d
        )));
    }
    let side = RandomizedSide {
        observable: Observable::default_linear(args.d)?,
        n_settings: args.settings,
        k_sigma: args.k_sigma,
        kappa4: default_kappa4(args.d),
        curves: certification_curves(args.d, args.grid)?,
    };
    let report = scrambling_comparison(
        &rho,
        args.trials,
        (args.phi_lo, args.phi_hi),
        &SeededStream::new(args.seed, 0),
        &side,
    )?;
    ensure_parent(&args.out)?;
    write_json(&args.out, &report)?;
    println!(
        "baseline: witness {:.4} -> {}; randomized certification per trial:",
        report.baseline_dft_value, report.baseline_dft_certified
    );
    for (i, trial) in report.trials.iter().enumerate() {
        println!(
            "  trial {}: witness {:.4} -> {}, randomized -> {}",
            i + 1,
            trial.dft_value,
            trial.dft_certified,
            trial.randomized.certified_r
        );
    }
    Ok(())
}

fn calibrate(args: &CalibrateArgs) -> Result<()> {
    let obs = match &args.lambda {
        Some(lambda) => Observable::new(lambda.clone())?,
        None => Observable::default_linear(args.d)?,
    };
    if obs.d() != args.d {
        return Err(Error::InvalidObservable(format!(
            "eigenvalue list has {} entries but --d is {}",
            obs.d(),
            args.d
        )));
    }
    let (kappa2, kappa4) =
        calibrate_observable(&obs, args.d, args.samples, &SeededStream::new(args.seed, 0))?;
    if let Some(out) = &args.out {
        ensure_parent(out)?;
        write_json(
            out,
            &serde_json::json!({
                "schema_version": SCHEMA_VERSION,
                "d": args.d,
                "n_samples": args.samples,
                "kappa2": kappa2,
                "kappa4": kappa4,
            }),
        )?;
    }
    println!("kappa2 = {kappa2:.6}, kappa4 = {kappa4:.6}");
    Ok(())
}

fn run(args: &RunArgs) -> Result<()> {
    let mut config = read_config(&args.config)?;
    args.overrides.apply(&mut config);
    let out = run_pipeline(&config, &args.out)?;
    println!(
        "certified Schmidt number: {} (S2 = {:.4} ± {:.4}, S4 = {:.4} ± {:.4}, kappa4 = {:.4})",
        out.report.certified_r,
        out.estimate.s2,
        out.estimate.sigma_s2,
        out.estimate.s4,
        out.estimate.sigma_s4,
        out.kappa4
    );
    for file in &out.files {
        println!("  wrote {}", file.display());
    }
    Ok(())
}
