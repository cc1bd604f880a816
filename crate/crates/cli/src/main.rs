mod verify;

use std::fs;
use std::fs::File;
use std::io::{BufWriter, Write as _};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context as _;
use clap::{Args, Parser, Subcommand, ValueEnum};
use onspin::sampler::{run_chain, write_records_csv, ChainOutput, InitKind, SamplerConfig};
use onspin::stats::{EmpiricalSummary, SummaryExport};
use onspin::theory::{self, ModelParams};
use rayon::prelude::*;
use serde::Serialize;

use verify::{Level, Suite};

#[derive(Parser)]
#[command(
    name = "onspin",
    version,
    about = "Mean-field O(N) spin models: theory tables, Glauber sampling, verification suites"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate r*, free energy, magnetization and (N=2) variance over a beta grid
    TheoryCurve(TheoryCurveArgs),
    /// Tabulate the large-deviation rate function over an r grid at fixed beta
    TheoryRate(TheoryRateArgs),
    /// Tabulate the critical limit density p_N(t)
    TheoryCriticalDensity(CriticalDensityArgs),
    /// Run Glauber chains and write JSON summaries (optionally per-sweep CSV)
    Sample(SampleArgs),
    /// Run a verification suite and write its report as a JSON array
    Verify(VerifyArgs),
}

#[derive(Args)]
struct TheoryCurveArgs {
    #[arg(long)]
    spin_dim: u32,
    #[arg(long)]
    beta_min: f64,
    #[arg(long)]
    beta_max: f64,
    /// Number of grid points (inclusive endpoints)
    #[arg(long)]
    steps: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TheoryRateArgs {
    #[arg(long)]
    spin_dim: u32,
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    r_max: f64,
    /// Number of grid points (inclusive endpoints)
    #[arg(long)]
    steps: usize,
    /// Subtract the minimum so the curve's least value is zero
    #[arg(long)]
    normalized: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CriticalDensityArgs {
    #[arg(long)]
    spin_dim: u32,
    #[arg(long)]
    t_max: f64,
    /// Number of grid points (inclusive endpoints)
    #[arg(long)]
    steps: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum RecordMode {
    /// JSON summary only
    Summary,
    /// JSON summary plus one per-sweep CSV per chain
    Full,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    spin_dim: u32,
    #[arg(long)]
    sites: usize,
    #[arg(long)]
    beta: f64,
    /// Post-burn-in sweeps per chain
    #[arg(long)]
    sweeps: u64,
    #[arg(long, default_value_t = 200)]
    burn_in: u64,
    #[arg(long, default_value_t = 1)]
    thin: u64,
    #[arg(long, default_value_t = 1)]
    chains: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = RecordMode::Summary)]
    record: RecordMode,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    #[arg(long, value_enum, default_value_t = Level::Quick)]
    level: Level,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn main() {
    let cli = Cli::parse();
    init_thread_pool();
    let code = match run(cli) {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            1
        }
    };
    std::process::exit(code);
}

/// ONSPIN_THREADS caps the rayon pool used for chain-level parallelism.
fn init_thread_pool() {
    if let Ok(raw) = std::env::var("ONSPIN_THREADS") {
        match raw.parse::<usize>() {
            Ok(k) if k >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
            }
            _ => eprintln!("warning: ignoring unparseable ONSPIN_THREADS={raw:?}"),
        }
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::TheoryCurve(a) => cmd_theory_curve(&a),
        Command::TheoryRate(a) => cmd_theory_rate(&a),
        Command::TheoryCriticalDensity(a) => cmd_theory_critical_density(&a),
        Command::Sample(a) => cmd_sample(&a),
        Command::Verify(a) => cmd_verify(&a),
    }
}

// ---------------------------------------------------------------------
// Manifest plumbing
// ---------------------------------------------------------------------

#[derive(Serialize)]
struct RunManifest<'a> {
    subcommand: &'a str,
    params: serde_json::Value,
    seed: Option<u64>,
    version: &'a str,
    wall_time_s: f64,
    outputs: &'a [String],
    /// false when a runtime failure left only partial outputs behind
    complete: bool,
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out
        .file_name()
        .map(|s| s.to_os_string())
        .unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn write_manifest(
    anchor: &Path,
    subcommand: &str,
    params: serde_json::Value,
    seed: Option<u64>,
    start: Instant,
    outputs: &[String],
    complete: bool,
) -> anyhow::Result<()> {
    let manifest = RunManifest {
        subcommand,
        params,
        seed,
        version: env!("CARGO_PKG_VERSION"),
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs,
        complete,
    };
    let path = manifest_path(anchor);
    let body = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, body + "\n")
        .with_context(|| format!("writing manifest {}", path.display()))?;
    Ok(())
}

// ---------------------------------------------------------------------
// Theory tables
// ---------------------------------------------------------------------

/// Full round-trip precision: 17 significant digits, locale-free.
fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn check_grid(lo: f64, hi: f64, steps: usize, what: &str) -> Result<(), CliError> {
    if !lo.is_finite() || !hi.is_finite() || hi <= lo {
        return Err(usage(format!(
            "{what} range [{lo}, {hi}] is empty or not finite"
        )));
    }
    if steps < 2 {
        return Err(usage(format!(
            "--steps must be >= 2 grid points, got {steps}"
        )));
    }
    Ok(())
}

fn grid_point(lo: f64, hi: f64, steps: usize, i: usize) -> f64 {
    if i + 1 == steps {
        hi
    } else {
        lo + (hi - lo) * i as f64 / (steps - 1) as f64
    }
}

fn cmd_theory_curve(a: &TheoryCurveArgs) -> Result<i32, CliError> {
    let start = Instant::now();
    if a.spin_dim < 1 {
        return Err(usage("--spin-dim must be >= 1"));
    }
    if a.beta_min < 0.0 {
        return Err(usage(format!("--beta-min must be >= 0, got {}", a.beta_min)));
    }
    check_grid(a.beta_min, a.beta_max, a.steps, "beta")?;
    let mut body = String::from("beta,r_star,free_energy,magnetization,variance_v\n");
    for i in 0..a.steps {
        let beta = grid_point(a.beta_min, a.beta_max, a.steps, i);
        let p = theory::theory_point(a.spin_dim, beta)
            .context("theory curve evaluation")
            .map_err(CliError::Runtime)?;
        let var = p.variance_v.map(fmt).unwrap_or_default();
        body.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt(p.beta),
            fmt(p.r_star),
            fmt(p.free_energy),
            fmt(p.magnetization),
            var
        ));
    }
    fs::write(&a.out, body)
        .with_context(|| format!("writing {}", a.out.display()))
        .map_err(CliError::Runtime)?;
    let outputs = vec![a.out.display().to_string()];
    write_manifest(
        &a.out,
        "theory-curve",
        serde_json::json!({
            "spin_dim": a.spin_dim,
            "beta_min": a.beta_min,
            "beta_max": a.beta_max,
            "steps": a.steps,
            "out": a.out.display().to_string(),
        }),
        None,
        start,
        &outputs,
        true,
    )?;
    println!("wrote {} ({} rows)", a.out.display(), a.steps);
    Ok(0)
}

fn cmd_theory_rate(a: &TheoryRateArgs) -> Result<i32, CliError> {
    let start = Instant::now();
    if a.spin_dim < 1 {
        return Err(usage("--spin-dim must be >= 1"));
    }
    if !a.beta.is_finite() || a.beta < 0.0 {
        return Err(usage(format!("--beta must be finite and >= 0, got {}", a.beta)));
    }
    if !(a.r_max > 0.0) {
        return Err(usage(format!("--r-max must be > 0, got {}", a.r_max)));
    }
    check_grid(0.0, a.r_max, a.steps, "r")?;
    let mut body = String::from("r,phi\n");
    for i in 0..a.steps {
        let r = grid_point(0.0, a.r_max, a.steps, i);
        let phi = if a.normalized {
            theory::normalized_rate(a.spin_dim, a.beta, r)
        } else {
            theory::rate_function(a.spin_dim, a.beta, r)
        }
        .context("rate function evaluation")
        .map_err(CliError::Runtime)?;
        body.push_str(&format!("{},{}\n", fmt(r), fmt(phi)));
    }
    fs::write(&a.out, body)
        .with_context(|| format!("writing {}", a.out.display()))
        .map_err(CliError::Runtime)?;
    let outputs = vec![a.out.display().to_string()];
    write_manifest(
        &a.out,
        "theory-rate",
        serde_json::json!({
            "spin_dim": a.spin_dim,
            "beta": a.beta,
            "r_max": a.r_max,
            "steps": a.steps,
            "normalized": a.normalized,
            "out": a.out.display().to_string(),
        }),
        None,
        start,
        &outputs,
        true,
    )?;
    println!("wrote {} ({} rows)", a.out.display(), a.steps);
    Ok(0)
}

fn cmd_theory_critical_density(a: &CriticalDensityArgs) -> Result<i32, CliError> {
    let start = Instant::now();
    if a.spin_dim < 1 {
        return Err(usage("--spin-dim must be >= 1"));
    }
    if !(a.t_max > 0.0) {
        return Err(usage(format!("--t-max must be > 0, got {}", a.t_max)));
    }
    check_grid(0.0, a.t_max, a.steps, "t")?;
    let mut body = String::from("t,p\n");
    for i in 0..a.steps {
        let t = grid_point(0.0, a.t_max, a.steps, i);
        let p = theory::critical_density(a.spin_dim, t)
            .context("critical density evaluation")
            .map_err(CliError::Runtime)?;
        body.push_str(&format!("{},{}\n", fmt(t), fmt(p)));
    }
    fs::write(&a.out, body)
        .with_context(|| format!("writing {}", a.out.display()))
        .map_err(CliError::Runtime)?;
    let outputs = vec![a.out.display().to_string()];
    write_manifest(
        &a.out,
        "theory-critical-density",
        serde_json::json!({
            "spin_dim": a.spin_dim,
            "t_max": a.t_max,
            "steps": a.steps,
            "out": a.out.display().to_string(),
        }),
        None,
        start,
        &outputs,
        true,
    )?;
    println!("wrote {} ({} rows)", a.out.display(), a.steps);
    Ok(0)
}

// ---------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------

#[derive(Serialize)]
struct ChainEntry {
    chain_id: u64,
    summary: SummaryExport,
}

#[derive(Serialize)]
struct SampleReport {
    spin_dim: u32,
    sites: usize,
    beta: f64,
    sweeps: u64,
    burn_in: u64,
    thin: u64,
    chains: u64,
    seed: u64,
    /// Scalars tracked per recorded sweep, in row order.
    columns: Vec<String>,
    per_chain: Vec<ChainEntry>,
    merged: Option<SummaryExport>,
    failed_chains: Vec<u64>,
}

/// Rows tracked per record: the N components of the total spin, the
/// magnetization |S|/n, and the energy per site.
fn chain_summary(out: &ChainOutput) -> onspin::Result<EmpiricalSummary> {
    let dim_n = out.params.spin_dim() as usize;
    let sites = out.params.sites() as f64;
    let mut summary = EmpiricalSummary::new(dim_n + 2)?;
    let mut row = vec![0.0; dim_n + 2];
    for rec in &out.records {
        row[..dim_n].copy_from_slice(&rec.total_spin);
        let norm = rec.total_spin.iter().map(|s| s * s).sum::<f64>().sqrt();
        row[dim_n] = norm / sites;
        row[dim_n + 1] = rec.energy;
        summary.push_row(out.config.chain_id, &row)?;
    }
    Ok(summary)
}

fn chain_csv_path(out: &Path, chain_id: u64) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "chain".into());
    out.with_file_name(format!("{stem}.chain{chain_id}.csv"))
}

fn cmd_sample(a: &SampleArgs) -> Result<i32, CliError> {
    let start = Instant::now();
    let params =
        ModelParams::new(a.spin_dim, a.sites, a.beta).map_err(|e| usage(e.to_string()))?;
    if a.chains < 1 {
        return Err(usage("--chains must be >= 1"));
    }
    if a.thin < 1 {
        return Err(usage("--thin must be >= 1"));
    }
    if a.sweeps / a.thin.max(1) < 10 {
        return Err(usage(format!(
            "need at least 10 recorded sweeps per chain, got sweeps={} thin={}",
            a.sweeps, a.thin
        )));
    }
    let base = SamplerConfig {
        sweeps: a.sweeps,
        burn_in_sweeps: a.burn_in,
        thin: a.thin,
        seed: a.seed,
        chain_id: 0,
        init: InitKind::Uniform,
    };
    let ids: Vec<u64> = (0..a.chains).collect();
    let results: Vec<(u64, onspin::Result<ChainOutput>)> = ids
        .par_iter()
        .map(|&k| {
            let config = SamplerConfig {
                chain_id: k,
                ..base
            };
            (k, run_chain(&params, &config))
        })
        .collect();

    let mut outputs = vec![a.out.display().to_string()];
    let mut per_chain = Vec::new();
    let mut failed_chains = Vec::new();
    let mut merged: Option<EmpiricalSummary> = None;
    let hist_component = a.spin_dim as usize; // the magnetization column
    for (k, result) in &results {
        match result {
            Ok(out) => {
                let summary = chain_summary(out)
                    .context("summarizing chain records")
                    .map_err(CliError::Runtime)?;
                let export = summary
                    .export(hist_component, None, None, None)
                    .context("exporting chain summary")
                    .map_err(CliError::Runtime)?;
                per_chain.push(ChainEntry {
                    chain_id: *k,
                    summary: export,
                });
                merged = Some(match merged.take() {
                    None => summary,
                    Some(acc) => acc
                        .merge(summary)
                        .context("merging chain summaries")
                        .map_err(CliError::Runtime)?,
                });
                if a.record == RecordMode::Full {
                    let path = chain_csv_path(&a.out, *k);
                    let file = File::create(&path)
                        .with_context(|| format!("creating {}", path.display()))
                        .map_err(CliError::Runtime)?;
                    let mut writer = BufWriter::new(file);
                    write_records_csv(out, &mut writer)
                        .and_then(|()| writer.flush())
                        .with_context(|| format!("writing {}", path.display()))
                        .map_err(CliError::Runtime)?;
                    outputs.push(path.display().to_string());
                }
            }
            Err(e) => {
                eprintln!("chain {k} failed: {e}");
                failed_chains.push(*k);
            }
        }
    }

    let merged_export = match &merged {
        Some(s) => Some(
            s.export(hist_component, None, None, None)
                .context("exporting merged summary")
                .map_err(CliError::Runtime)?,
        ),
        None => None,
    };
    let complete = failed_chains.is_empty();
    let report = SampleReport {
        spin_dim: a.spin_dim,
        sites: a.sites,
        beta: a.beta,
        sweeps: a.sweeps,
        burn_in: a.burn_in,
        thin: a.thin,
        chains: a.chains,
        seed: a.seed,
        columns: (1..=a.spin_dim)
            .map(|j| format!("s_{j}"))
            .chain(["magnetization".into(), "energy".into()])
            .collect(),
        per_chain,
        merged: merged_export,
        failed_chains,
    };
    let body = serde_json::to_string_pretty(&report)
        .context("serializing sample report")
        .map_err(CliError::Runtime)?;
    fs::write(&a.out, body + "\n")
        .with_context(|| format!("writing {}", a.out.display()))
        .map_err(CliError::Runtime)?;
    write_manifest(
        &a.out,
        "sample",
        serde_json::json!({
            "spin_dim": a.spin_dim,
            "sites": a.sites,
            "beta": a.beta,
            "sweeps": a.sweeps,
            "burn_in": a.burn_in,
            "thin": a.thin,
            "chains": a.chains,
            "seed": a.seed,
            "record": match a.record { RecordMode::Summary => "summary", RecordMode::Full => "full" },
            "out": a.out.display().to_string(),
        }),
        Some(a.seed),
        start,
        &outputs,
        complete,
    )?;
    if complete {
        println!(
            "wrote {} ({} chains, {} records/chain)",
            a.out.display(),
            a.chains,
            a.sweeps / a.thin
        );
        Ok(0)
    } else {
        eprintln!("error: some chains failed; partial outputs flagged in manifest");
        Ok(1)
    }
}

// ---------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------

fn cmd_verify(a: &VerifyArgs) -> Result<i32, CliError> {
    let start = Instant::now();
    let reports = verify::run_suite(a.suite, a.level, a.seed).map_err(CliError::Runtime)?;
    let body = serde_json::to_string_pretty(&reports)
        .context("serializing verification reports")
        .map_err(CliError::Runtime)?;
    fs::write(&a.out, body + "\n")
        .with_context(|| format!("writing {}", a.out.display()))
        .map_err(CliError::Runtime)?;
    let outputs = vec![a.out.display().to_string()];
    write_manifest(
        &a.out,
        "verify",
        serde_json::json!({
            "suite": a.suite.name(),
            "level": a.level.name(),
            "seed": a.seed,
            "out": a.out.display().to_string(),
        }),
        Some(a.seed),
        start,
        &outputs,
        true,
    )?;
    let mut failures = 0usize;
    for r in &reports {
        if r.pass() {
            println!("[ ok ] {}", r.name);
        } else {
            failures += 1;
            println!(
                "[FAIL] {}: oracle={:.12e} fast={:.12e} tolerance={:.3e}",
                r.name, r.oracle_value, r.fast_value, r.tolerance
            );
        }
    }
    println!(
        "suite {} level {}: {}/{} checks passed ({:.1} s)",
        a.suite.name(),
        a.level.name(),
        reports.len() - failures,
        reports.len(),
        start.elapsed().as_secs_f64()
    );
    Ok(if failures == 0 { 0 } else { 1 })
}
