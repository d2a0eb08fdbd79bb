//! Command-line front end: one subcommand per experiment family.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info, warn};
use ratiorep::error::Error;
use ratiorep::experiments::{
    aggregate, default_axes, emit_plotdata, load_records, run_sweep, run_verify, ExperimentConfig, RunRecord, Scenario,
};

const EXIT_FAILED_RUN: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "ratiorep", version, about = "Density-ratio representation learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Nonlinear ICA by time-contrastive pairs (scenario ica_pcl).
    IcaRun(ConfigArgs),
    /// Correlation against the complementary dimension D_u.
    DimSweep(ConfigArgs),
    /// Correlation against the outlier ratio for several methods.
    RobustnessSweep(ConfigArgs),
    /// Ratio and mutual-information recovery on a Gaussian pair.
    GaussianRatio(ConfigArgs),
    /// Informative versus nuisance coordinates.
    Nuisance(ConfigArgs),
    /// Linear-probe accuracy of learned encoders.
    Downstream(ConfigArgs),
    /// Gradient, limit, oracle, influence, robustness and rank checks.
    Verify {
        #[command(flatten)]
        config: ConfigArgs,
        /// Perturb analytic gradients so the gradient checks must fail.
        #[arg(long)]
        inject_bug: bool,
    },
    /// Rebuild CSV plot data from a saved records.json.
    PlotData {
        /// Records written by an earlier run (default: <output-dir>/records.json).
        #[arg(long)]
        records: Option<PathBuf>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Metric to aggregate (default depends on the scenario).
        #[arg(long)]
        metric: Option<String>,
        /// Parameter on the x-axis (default depends on the scenario).
        #[arg(long)]
        x: Option<String>,
    },
}

/// Every field of the experiment configuration. A flag overrides the config
/// file, which overrides the defaults.
#[derive(Args, Default)]
struct ConfigArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    method: Option<String>,
    /// Comma-separated methods for sweeps.
    #[arg(long, value_delimiter = ',')]
    methods: Vec<String>,
    #[arg(long)]
    d_x: Option<usize>,
    #[arg(long)]
    d_u: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    d_u_grid: Vec<usize>,
    /// Mixing depth L.
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    t_test: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    epsilons: Vec<f64>,
    #[arg(long)]
    contamination_model: Option<u8>,
    /// Piecewise-constant schedule as `epoch:gamma,epoch:gamma,...`.
    #[arg(long, value_parser = parse_schedule)]
    gamma_schedule: Option<Vec<(usize, f64)>>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    l2: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    whiten_gamma: Option<f64>,
    #[arg(long)]
    source_rho: Option<f64>,
    #[arg(long)]
    d_s: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// D_x=10, T=100000, T_te=50000, 1600 epochs.
    #[arg(long)]
    paper_scale: bool,
}

fn parse_schedule(s: &str) -> Result<Vec<(usize, f64)>, String> {
    s.split(',')
        .map(|item| {
            let (e, g) = item.split_once(':').ok_or_else(|| format!("expected epoch:gamma, got `{item}`"))?;
            let e = e.trim().parse().map_err(|_| format!("bad epoch `{e}`"))?;
            let g = g.trim().parse().map_err(|_| format!("bad gamma `{g}`"))?;
            Ok((e, g))
        })
        .collect()
}

macro_rules! set {
    ($cfg:ident, $args:ident, $($field:ident),*) => {
        $(if let Some(v) = $args.$field.clone() { $cfg.$field = v; })*
    };
}

macro_rules! set_list {
    ($cfg:ident, $args:ident, $($field:ident),*) => {
        $(if !$args.$field.is_empty() { $cfg.$field = $args.$field.clone(); })*
    };
}

impl ConfigArgs {
    fn build(&self, scenario: Scenario) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path).map_err(|e| match e {
                Error::Io(io) => Error::Config(format!("config: cannot read {}: {io}", path.display())),
                other => other,
            })?,
            None => ExperimentConfig::default(),
        };
        let keep_robustness = scenario == Scenario::IcaPcl && cfg.scenario == Scenario::IcaRobustness.name();
        if !keep_robustness {
            cfg.scenario = scenario.name().into();
        }
        if self.paper_scale || cfg.paper_scale {
            cfg.apply_paper_scale();
        }
        cfg.apply_env()?;
        set!(cfg, self, method, d_x, d_u, layers, t, t_test, epsilon, contamination_model, gamma_schedule, epochs);
        set!(cfg, self, batch_size, learning_rate, l2, output_dir, source_rho, d_s, threads);
        set_list!(cfg, self, methods, d_u_grid, epsilons, seeds);
        if let Some(g) = self.whiten_gamma {
            cfg.whiten_gamma = Some(g);
        }
        match scenario {
            Scenario::IcaRobustness => {
                if cfg.methods.is_empty() {
                    cfg.methods = ["lr", "gamma", "dv"].map(String::from).to_vec();
                }
                if cfg.epsilons.is_empty() {
                    cfg.epsilons = vec![0.0, 0.1, 0.2, 0.3];
                }
            }
            Scenario::IcaDimsweep if cfg.d_u_grid.is_empty() => cfg.d_u_grid = vec![2, 5, 10],
            _ => {}
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn save_config(cfg: &ExperimentConfig) -> Result<(), Error> {
    std::fs::create_dir_all(&cfg.output_dir)?;
    std::fs::write(cfg.output_dir.join("config.toml"), cfg.to_toml_string()?)?;
    Ok(())
}

fn summarize(records: &[RunRecord], scenario: Scenario) {
    let (metric, x) = default_axes(scenario);
    println!("{:<24} {:>10} {:>3} {:>10} {:>10}", "series", x, "n", "mean", "std");
    for row in aggregate(records, metric, x) {
        println!("{:<24} {:>10} {:>3} {:>10.4} {:>10.4}", row.series, row.x, row.n, row.mean, row.std);
    }
    for r in records.iter().filter(|r| r.failed()) {
        let f = r.failure.as_ref().expect("failed run has a failure");
        warn!("{} seed {} failed at epoch {}: {}", r.method, r.seed, f.epoch, f.message);
    }
}

fn run_experiments(args: &ConfigArgs, scenario: Scenario) -> Result<u8, Error> {
    let cfg = args.build(scenario)?;
    save_config(&cfg)?;
    let records = run_sweep(&cfg)?;
    let (metric, x) = default_axes(cfg.scenario()?);
    let files = emit_plotdata(&records, &cfg.output_dir, metric, x)?;
    summarize(&records, cfg.scenario()?);
    info!("wrote {} and {}", files.runs.display(), files.aggregate.display());
    Ok(if records.iter().any(RunRecord::failed) { EXIT_FAILED_RUN } else { 0 })
}

fn verify(args: &ConfigArgs, inject_bug: bool) -> Result<u8, Error> {
    let cfg = args.build(Scenario::VerifyTheory)?;
    let report = run_verify(&cfg, inject_bug)?;
    print!("{}", report.table());
    std::fs::create_dir_all(&cfg.output_dir)?;
    let path = cfg.output_dir.join("verify.json");
    std::fs::write(&path, serde_json::to_string_pretty(&report)?)?;
    let failed = report.failures().count();
    println!("{} of {} checks passed in {:.1} s", report.checks.len() - failed, report.checks.len(), report.wall_time_s);
    Ok(if failed == 0 { 0 } else { EXIT_FAILED_RUN })
}

fn plot_data(records: Option<PathBuf>, output_dir: Option<PathBuf>, metric: Option<String>, x: Option<String>) -> Result<u8, Error> {
    let mut base = ExperimentConfig::default();
    base.apply_env()?;
    let dir = output_dir.unwrap_or(base.output_dir);
    let path = records.unwrap_or_else(|| dir.join("records.json"));
    let recs = load_records(&path)?;
    let scenario: Scenario = recs.first().ok_or_else(|| Error::Config("records: file holds no runs".into()))?.scenario.parse()?;
    let (m, xa) = default_axes(scenario);
    let files = emit_plotdata(&recs, &dir, metric.as_deref().unwrap_or(m), x.as_deref().unwrap_or(xa))?;
    println!("{}\n{}", files.runs.display(), files.aggregate.display());
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::IcaRun(a) => run_experiments(a, Scenario::IcaPcl),
        Command::DimSweep(a) => run_experiments(a, Scenario::IcaDimsweep),
        Command::RobustnessSweep(a) => run_experiments(a, Scenario::IcaRobustness),
        Command::GaussianRatio(a) => run_experiments(a, Scenario::GaussianRatio),
        Command::Nuisance(a) => run_experiments(a, Scenario::Nuisance),
        Command::Downstream(a) => run_experiments(a, Scenario::Downstream),
        Command::Verify { config, inject_bug } => verify(config, *inject_bug),
        Command::PlotData { records, output_dir, metric, x } => plot_data(records.clone(), output_dir.clone(), metric.clone(), x.clone()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e @ Error::Config(_)) => {
            error!("{e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            error!("{e}");
            ExitCode::from(EXIT_FAILED_RUN)
        }
    }
}
