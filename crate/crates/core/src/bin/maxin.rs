use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use maxin_core::harness::report::{
    aggregate, read_trace_file, write_curve, write_summary, write_summary_file, write_trace_file,
};
use maxin_core::harness::sim::simulate_with_workers;
use maxin_core::harness::sweep::{best_overall, best_per_replicate, sweep_with_workers};
use maxin_core::harness::{load_config, RunConfig, SweepGrid};
use maxin_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "maxin",
    version,
    about = "Online Elo / mElo evaluation with dueling-bandit scheduling"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a win-probability matrix and write it as CSV.
    Gen(GenArgs),
    /// Simulate one configuration.
    Run(ConfigArgs),
    /// Simulate every point of a parameter grid.
    Sweep(SweepArgs),
    /// Aggregate trace CSVs into mean/std curves.
    Report(ReportArgs),
}

/// Flags mirroring config keys; they override values read from `--config`.
#[derive(Args, Default)]
struct ConfigArgs {
    /// Flat key=value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long = "T")]
    horizon: Option<String>,
    #[arg(long)]
    tau: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    eta0: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    replicates: Option<String>,
    #[arg(long)]
    matrix: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    workers: Option<String>,
    /// Any other key, as key=value; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn overrides(&self) -> Result<Vec<(String, String)>> {
        let flags = [
            ("algo", &self.algo),
            ("n", &self.n),
            ("T", &self.horizon),
            ("tau", &self.tau),
            ("gamma", &self.gamma),
            ("alpha", &self.alpha),
            ("eta0", &self.eta0),
            ("k", &self.k),
            ("delta", &self.delta),
            ("seed", &self.seed),
            ("replicates", &self.replicates),
            ("matrix", &self.matrix),
            ("out", &self.out),
            ("workers", &self.workers),
        ];
        let mut pairs: Vec<(String, String)> = flags
            .iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect();
        for s in &self.set {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects key=value, got `{s}`")))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(pairs)
    }

    fn load(&self) -> Result<RunConfig> {
        load_config(self.config.as_deref(), &self.overrides()?)
    }
}

#[derive(Args)]
struct GenArgs {
    /// elo, noisy_elo, triangular, cyclic or cyclic_dominant.
    #[arg(long, default_value = "elo")]
    env: String,
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    rating_scale: f64,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0.8)]
    dominant_p: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    base: ConfigArgs,
    /// Grid axis as key=v1,v2,...; repeatable, first axis varies slowest.
    #[arg(long = "grid", value_name = "KEY=V1,V2,...")]
    grid: Vec<String>,
}

#[derive(Args)]
struct ReportArgs {
    /// Trace CSV files of equal length.
    #[arg(required = true)]
    traces: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn indexed_path(base: &Path, i: usize, count: usize) -> PathBuf {
    if count == 1 {
        return base.to_path_buf();
    }
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
    let name = match base.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}_{i}.{ext}"),
        None => format!("{stem}_{i}"),
    };
    base.with_file_name(name)
}

fn gen(args: &GenArgs) -> Result<()> {
    let pairs = [
        ("env", args.env.clone()),
        ("n", args.n.to_string()),
        ("rating_scale", args.rating_scale.to_string()),
        ("noise", args.noise.to_string()),
        ("dominant_p", args.dominant_p.to_string()),
        ("seed", args.seed.to_string()),
        ("T", usize::MAX.to_string()),
    ];
    let cfg = maxin_core::harness::config::config_from_pairs(&pairs)?;
    let m = cfg.build_env(args.seed)?;
    m.write_csv(&args.out)?;
    println!(
        "{}",
        json!({ "env": m.name(), "n": m.n(), "out": args.out.display().to_string() })
    );
    Ok(())
}

fn run(args: &ConfigArgs) -> Result<()> {
    let cfg = args.load()?;
    let (traces, summary) = simulate_with_workers(&cfg)?;
    if let Some(out) = &cfg.out {
        for (i, tr) in traces.iter().enumerate() {
            write_trace_file(tr, &indexed_path(out, i, traces.len()))?;
        }
    }
    match &cfg.summary_out {
        Some(p) => write_summary_file(&summary, p)?,
        None => write_summary(&summary, std::io::stdout().lock())?,
    }
    Ok(())
}

fn run_sweep(args: &SweepArgs) -> Result<()> {
    let template = args.base.load()?;
    let mut grid = SweepGrid::new();
    for spec in &args.grid {
        grid.axes.push(SweepGrid::parse_axis(spec)?);
    }
    let points = sweep_with_workers(&template, &grid, template.workers)?;
    let doc = json!({
        "points": points,
        "best_per_replicate": best_per_replicate(&points),
        "best_overall": best_overall(&points),
    });
    let text = serde_json::to_string_pretty(&doc)? + "\n";
    match &template.summary_out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn report(args: &ReportArgs) -> Result<()> {
    let traces = args
        .traces
        .iter()
        .map(|p| read_trace_file(p))
        .collect::<Result<Vec<_>>>()?;
    let curve = aggregate(&traces)?;
    match &args.out {
        Some(p) => write_curve(&curve, std::fs::File::create(p)?),
        None => write_curve(&curve, std::io::stdout().lock()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Command::Gen(a) => gen(a),
        Command::Run(a) => run(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.code(), "message": e.to_string() }));
            ExitCode::FAILURE
        }
    }
}
