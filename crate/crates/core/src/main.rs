use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use ulgrant::config::RunConfig;
use ulgrant::metrics::{resource_metrics_in, summarize, DEFAULT_DEADLINE_MS};
use ulgrant::sweep::{emit, run_sweep_in, sig6};
use ulgrant::{simulate, Error, Result, TbsTable};

/// LTE uplink persistent grant simulator.
///
/// Without `--sweep`, runs one configuration and prints its statistics.
/// With `--sweep`, runs the period x alpha grid and writes CSV and SVG files
/// to `--out`. The TBS table can be replaced through ULGRANT_TBS_TABLE.
#[derive(Debug, Parser)]
#[command(name = "ulgrant", version)]
struct Cli {
    /// Flat `key = value` configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Grant period in ms.
    #[arg(long)]
    period: Option<u32>,
    /// Provisioning factor (>= 1).
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    mcs: Option<u8>,
    /// Cell bandwidth in PRBs.
    #[arg(long)]
    prbs: Option<u32>,
    #[arg(long)]
    duration_ms: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run the parameter grid instead of a single configuration.
    #[arg(long)]
    sweep: bool,
    /// Telemetry profile file (`type_id period_ms payload_bytes phase_ms`).
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Per-message trace file for single runs.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Sweep worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// Extra `key=value` overrides, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn build_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v)?;
    }
    let overrides: [(&str, Option<String>); 10] = [
        ("period", cli.period.map(|v| v.to_string())),
        ("alpha", cli.alpha.map(|v| v.to_string())),
        ("mcs", cli.mcs.map(|v| v.to_string())),
        ("prbs", cli.prbs.map(|v| v.to_string())),
        ("duration_ms", cli.duration_ms.map(|v| v.to_string())),
        ("seed", cli.seed.map(|v| v.to_string())),
        ("out", cli.out.as_ref().map(|p| p.display().to_string())),
        (
            "profile",
            cli.profile.as_ref().map(|p| p.display().to_string()),
        ),
        ("trace", cli.trace.as_ref().map(|p| p.display().to_string())),
        ("jobs", cli.jobs.map(|v| v.to_string())),
    ];
    for (k, v) in overrides {
        if let Some(v) = v {
            cfg.set(k, &v)?;
        }
    }
    if cli.sweep {
        cfg.sweep = true;
    }
    Ok(cfg)
}

fn table() -> Result<TbsTable> {
    match std::env::var_os(ulgrant::tbs::TBS_TABLE_ENV) {
        Some(_) => TbsTable::from_env(),
        None => Ok(TbsTable::standard().clone()),
    }
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = build_config(cli)?;
    let table = table()?;
    if cfg.sweep {
        let spec = cfg.sweep_spec()?;
        let result = run_sweep_in(&spec, &table)?;
        for path in emit(&result, &cfg.out)? {
            println!("wrote {}", path.display());
        }
        if !result.skipped.is_empty() {
            println!(
                "skipped {} grid points, see skipped.csv",
                result.skipped.len()
            );
        }
        return Ok(());
    }

    let sim = cfg.resolve()?;
    let out = simulate(&sim, &table)?;
    let stats = summarize(&out.records, DEFAULT_DEADLINE_MS)?;
    let res = resource_metrics_in::<f64>(&table, &sim.flow, &sim.cell)?;
    println!(
        "period_ms={} alpha={}",
        sim.flow.period_subframes, sim.flow.provisioning_factor
    );
    println!(
        "count={} mean_ms={} std_ms={} p999_ms={} exceed50={} min_ms={} max_ms={}",
        stats.count,
        sig6(stats.mean_ms),
        sig6(stats.std_ms),
        sig6(stats.p999_ms),
        sig6(stats.exceed_freq),
        sig6(stats.min_ms),
        sig6(stats.max_ms)
    );
    println!(
        "prbs_per_grant={} alloc_bps={} overalloc={} users={}",
        res.prbs_per_grant,
        sig6(res.allocated_bps),
        sig6(res.overalloc_ratio),
        res.users_supported
    );
    if let Some(path) = &sim.trace_path {
        println!("trace written to {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\\', "\\\\").replace('"', "\\\"");
            eprintln!("error kind={} msg=\"{msg}\"", e.kind());
            ExitCode::FAILURE
        }
    }
}
