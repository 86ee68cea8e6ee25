//! `bellchaos` command-line driver.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bellchaos::bell_operator::{build_bell_operator, quantum_violation};
use bellchaos::classical_bound::{
    composition_count, minimize_classical, verify_polynomial_equivalence,
    verify_polynomial_equivalence_exhaustive, ClassicalMode,
};
use bellchaos::experiments::{
    poisson_region_volume, random_measurement_scan, scan_csv, scan_irreps, VolumeConfig,
};
use bellchaos::optimizer::{optimize_measurements, OptimizationConfig};
use bellchaos::spectral_stats::{analyze_operator, histogram_csv, spacing_histogram, SpectralConfig};
use bellchaos::su3_irreps::IrrepLabel;
use bellchaos::su3_measurements::MeasurementParams;
use bellchaos::table;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "bellchaos", version, about = "Qutrit Bell operators in SU(3) irreps and their level statistics")]
struct Cli {
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    workers: Option<u32>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Minimize the Bell value over deterministic local strategies.
    VerifyClassical(VerifyClassicalArgs),
    /// Optimize measurement settings for one irrep.
    Optimize(OptimizeArgs),
    /// Optimize and analyse every irrep of n parties.
    Scan(ScanArgs),
    /// Brody parameters for Haar-random settings.
    RandomScan(RandomScanArgs),
    /// Size of the Poissonian region around the optimal settings.
    Volume(VolumeArgs),
    /// Spacing histogram and Brody fit for given settings.
    Spectrum(SpectrumArgs),
    /// Export a Bell operator as sparse triplets.
    BuildBell(BuildBellArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Mode {
    Exhaustive,
    Stochastic,
}

#[derive(Args, Debug)]
struct VerifyClassicalArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long, value_enum, default_value = "exhaustive")]
    mode: Mode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random starting grids in stochastic mode.
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    /// Random grids for the equivalence check when exhaustive checking is too large.
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct IrrepArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long)]
    p: u32,
    #[arg(long)]
    q: u32,
}

impl IrrepArgs {
    fn label(&self) -> IrrepLabel {
        IrrepLabel::new(self.p, self.q)
    }

    fn n(&self) -> usize {
        self.n as usize
    }
}

#[derive(Args, Debug, Clone)]
struct OptArgs {
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "max-iter", default_value_t = 500)]
    max_iter: usize,
}

impl OptArgs {
    fn config(&self) -> OptimizationConfig {
        OptimizationConfig {
            restarts: self.restarts,
            max_iterations: self.max_iter,
            seed: self.seed,
            ..OptimizationConfig::default()
        }
    }
}

#[derive(Args, Debug)]
struct OptimizeArgs {
    #[command(flatten)]
    irrep: IrrepArgs,
    #[command(flatten)]
    opt: OptArgs,
    /// JSON report; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the best settings alone, for `spectrum --settings`.
    #[arg(long)]
    settings_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[command(flatten)]
    opt: OptArgs,
    /// Scan table as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Full JSON report; printed to stdout when absent.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RandomScanArgs {
    #[command(flatten)]
    irrep: IrrepArgs,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Brody-parameter histogram as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VolumeArgs {
    #[command(flatten)]
    irrep: IrrepArgs,
    #[arg(long, default_value_t = 100)]
    directions: usize,
    #[arg(long, default_value_t = 10_000)]
    mc: usize,
    #[arg(long, default_value_t = 0.01)]
    step_size: f64,
    #[arg(long, default_value_t = 0.1)]
    threshold: f64,
    #[arg(long, default_value_t = 10_000)]
    step_cap: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optimal settings; optimized here when absent.
    #[arg(long)]
    settings: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    #[arg(long = "max-iter", default_value_t = 500)]
    max_iter: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[command(flatten)]
    irrep: IrrepArgs,
    /// Settings JSON, or an `optimize` report.
    #[arg(long)]
    settings: PathBuf,
    #[arg(long, default_value_t = 30)]
    bins: usize,
    #[arg(long, default_value_t = 10)]
    degree: usize,
    /// Histogram CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BuildBellArgs {
    #[command(flatten)]
    irrep: IrrepArgs,
    #[arg(long)]
    settings: PathBuf,
    /// Sparse triplets `row,col,re,im`.
    #[arg(long)]
    out: PathBuf,
    /// Metadata JSON; printed to stdout when absent.
    #[arg(long)]
    meta: Option<PathBuf>,
}

type CliResult<T> = Result<T, Box<dyn std::error::Error>>;

/// Pretty JSON with keys in sorted order.
fn render(command: &str, parameters: Value, result: impl Serialize) -> CliResult<String> {
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "parameters": parameters,
        "result": serde_json::to_value(result)?,
    });
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

fn emit(text: &str, path: Option<&Path>) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn load_settings(path: &Path) -> CliResult<MeasurementParams> {
    let text = fs::read_to_string(path)?;
    let value: Value = serde_json::from_str(&text)?;
    let inner = value
        .get("result")
        .and_then(|r| r.get("best_settings"))
        .cloned()
        .unwrap_or(value);
    let params: MeasurementParams = serde_json::from_value(inner)?;
    params.validate()?;
    Ok(params)
}

fn verify_classical(a: &VerifyClassicalArgs) -> CliResult<bool> {
    let mode = match a.mode {
        Mode::Exhaustive => ClassicalMode::Exhaustive,
        Mode::Stochastic => ClassicalMode::Stochastic {
            samples: a.samples,
            seed: a.seed,
        },
    };
    let report = minimize_classical(a.n, mode)?;
    let equivalence = if composition_count(a.n) <= 100_000 {
        verify_polynomial_equivalence_exhaustive(a.n)
    } else {
        verify_polynomial_equivalence(a.n, a.trials, a.seed)
    };
    let ok = report.minimum == 0 && equivalence.is_ok();
    let result = json!({
        "n": report.n,
        "mode": report.mode,
        "minimum": report.minimum,
        "argmin": report.argmin.c,
        "states_visited": report.states_visited,
        "equivalence": match &equivalence {
            Ok(r) => json!({"holds": true, "checked": r.checked, "exhaustive": r.exhaustive}),
            Err(e) => json!({"holds": false, "error": e.to_string()}),
        },
        "bound_confirmed": ok,
    });
    let params = json!({"n": a.n, "mode": a.mode, "seed": a.seed, "samples": a.samples, "trials": a.trials});
    emit(&render("verify-classical", params, result)?, a.out.as_deref())?;
    Ok(ok)
}

fn optimize(a: &OptimizeArgs) -> CliResult<()> {
    let config = a.opt.config();
    let res = optimize_measurements(a.irrep.label(), a.irrep.n(), &config)?;
    let params = json!({"n": a.irrep.n, "p": a.irrep.p, "q": a.irrep.q, "config": config});
    emit(&render("optimize", params, &res)?, a.out.as_deref())?;
    if let Some(path) = &a.settings_out {
        fs::write(path, res.best_settings.to_json()? + "\n")?;
    }
    Ok(())
}

fn scan(a: &ScanArgs) -> CliResult<()> {
    let config = a.opt.config();
    let spectral = SpectralConfig::default();
    let rows = scan_irreps(a.n as usize, &config, &spectral)?;
    if let Some(path) = &a.out {
        fs::write(path, scan_csv(&rows)?)?;
    }
    let params = json!({"n": a.n, "config": config, "spectral": spectral});
    emit(&render("scan", params, &rows)?, a.json.as_deref())
}

fn random_scan(a: &RandomScanArgs) -> CliResult<()> {
    let spectral = SpectralConfig::default();
    let report = random_measurement_scan(a.irrep.n(), a.irrep.label(), a.samples, a.seed, &spectral)?;
    if let Some(path) = &a.out {
        fs::write(path, table::to_csv(&report.histogram)?)?;
    }
    let params = json!({"n": a.irrep.n, "p": a.irrep.p, "q": a.irrep.q, "samples": a.samples, "seed": a.seed, "spectral": spectral});
    emit(&render("random-scan", params, &report)?, a.json.as_deref())
}

fn volume(a: &VolumeArgs) -> CliResult<()> {
    let spectral = SpectralConfig::default();
    let opt = OptimizationConfig {
        restarts: a.restarts,
        max_iterations: a.max_iter,
        seed: a.seed,
        ..OptimizationConfig::default()
    };
    let (optimal, optimal_value) = match &a.settings {
        Some(path) => {
            let params = load_settings(path)?;
            let value = quantum_violation(&build_bell_operator(&params, a.irrep.label(), a.irrep.n())?)?;
            (params, value)
        }
        None => {
            let res = optimize_measurements(a.irrep.label(), a.irrep.n(), &opt)?;
            (res.best_settings, res.best_value)
        }
    };
    let config = VolumeConfig {
        directions: a.directions,
        mc_samples: a.mc,
        step_size: a.step_size,
        transition_threshold: a.threshold,
        step_cap: a.step_cap,
        seed: a.seed,
    };
    let report = poisson_region_volume(a.irrep.n(), a.irrep.label(), &optimal, &config, &spectral)?;
    let params = json!({
        "n": a.irrep.n, "p": a.irrep.p, "q": a.irrep.q,
        "volume": config,
        "optimizer": if a.settings.is_some() { Value::Null } else { serde_json::to_value(opt)? },
        "spectral": spectral,
    });
    let result = json!({"report": report, "optimal_settings": optimal, "optimal_value": optimal_value});
    emit(&render("volume", params, result)?, a.out.as_deref())
}

fn spectrum(a: &SpectrumArgs) -> CliResult<()> {
    let spectral = SpectralConfig {
        poly_degree: a.degree,
        histogram_bins: a.bins,
        ..SpectralConfig::default()
    };
    let settings = load_settings(&a.settings)?;
    let op = build_bell_operator(&settings, a.irrep.label(), a.irrep.n())?;
    let report = analyze_operator(&op, &spectral)?;
    let bins = spacing_histogram(&report.spacings, report.brody_omega, spectral.histogram_bins);
    if let Some(path) = &a.out {
        fs::write(path, histogram_csv(&bins)?)?;
    }
    let params = json!({"n": a.irrep.n, "p": a.irrep.p, "q": a.irrep.q, "settings": settings, "spectral": spectral});
    let result = json!({"levels": op.dim(), "report": report, "histogram": bins});
    emit(&render("spectrum", params, result)?, a.json.as_deref())
}

#[derive(Serialize)]
struct Triplet {
    row: usize,
    col: usize,
    re: f64,
    im: f64,
}

fn build_bell(a: &BuildBellArgs) -> CliResult<()> {
    let settings = load_settings(&a.settings)?;
    let op = build_bell_operator(&settings, a.irrep.label(), a.irrep.n())?;
    let triplets: Vec<Triplet> = op
        .matrix
        .triplets()
        .map(|(row, col, v)| Triplet { row, col, re: v.re, im: v.im })
        .collect();
    fs::write(&a.out, table::to_csv(&triplets)?)?;
    let params = json!({"n": a.irrep.n, "p": a.irrep.p, "q": a.irrep.q, "settings": settings});
    let result = json!({"metadata": op.metadata(), "nnz": op.matrix.nnz(), "hermiticity_defect": op.hermiticity_defect()});
    emit(&render("build-bell", params, result)?, a.meta.as_deref())
}

fn run(cli: &Cli) -> CliResult<bool> {
    match &cli.command {
        Command::VerifyClassical(a) => verify_classical(a),
        Command::Optimize(a) => optimize(a).map(|_| true),
        Command::Scan(a) => scan(a).map(|_| true),
        Command::RandomScan(a) => random_scan(a).map(|_| true),
        Command::Volume(a) => volume(a).map(|_| true),
        Command::Spectrum(a) => spectrum(a).map(|_| true),
        Command::BuildBell(a) => build_bell(a).map(|_| true),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(w) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w as usize).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
