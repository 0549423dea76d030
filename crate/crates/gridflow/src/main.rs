use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use gridflow::compare::compare;
use gridflow::output::{write_trace_csv, RunSummary};
use gridflow::read_scenario;
use gridflow_core::engine::{self, Scenario};
use gridflow_core::grid::GridMatrices;
use log::{debug, info};

#[derive(Parser)]
#[command(name = "gridflow", version, about = "Distributed DC optimal power flow simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write trace.csv and summary.json.
    Run {
        #[command(flatten)]
        opts: RunOpts,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Write every N-th step to trace.csv.
        #[arg(long, default_value_t = 1)]
        csv_downsample: usize,
    },
    /// Run a scenario and compare its end state with a centralized dispatch.
    Compare {
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Check a scenario and its case without simulating.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
}

#[derive(Args)]
struct RunOpts {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Simulated time, s.
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    disable_constraint: bool,
    #[arg(long)]
    disable_penalty: bool,
    /// Meter reading standard deviation, p.u.
    #[arg(long)]
    meter_noise: Option<f64>,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl RunOpts {
    fn load(&self) -> Result<Scenario, Failure> {
        let mut sc = read_scenario(&self.scenario).map_err(|e| Failure::Config(e.to_string()))?;
        let cfg = &mut sc.config;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(d) = self.duration {
            cfg.duration_s = d;
        }
        if self.disable_constraint {
            cfg.constraint.enabled = false;
        }
        if self.disable_penalty {
            cfg.constraint.penalty_enabled = false;
        }
        if let Some(s) = self.meter_noise {
            cfg.dse.meter_sigma = s;
        }
        cfg.validate(&sc.case).map_err(|e| Failure::Config(e.to_string()))?;
        Ok(sc)
    }
}

fn simulate(sc: Scenario) -> Result<(Scenario, engine::Trace, f64), Failure> {
    let copy = sc.clone();
    info!("simulating {} steps", sc.config.steps());
    let start = Instant::now();
    let trace = engine::run(sc).map_err(|e| Failure::Config(e.to_string()))?;
    let wall = start.elapsed().as_secs_f64();
    debug!("finished in {wall:.3} s");
    Ok((copy, trace, wall))
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(v).map_err(|e| Failure::Runtime(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn run(opts: &RunOpts, out: &Path, downsample: usize) -> Result<(), Failure> {
    let (sc, trace, wall) = simulate(opts.load()?)?;
    let runtime = |e: &dyn std::fmt::Display| Failure::Runtime(format!("{}: {e}", out.display()));
    fs::create_dir_all(out).map_err(|e| runtime(&e))?;
    let file = File::create(out.join("trace.csv")).map_err(|e| runtime(&e))?;
    write_trace_csv(&trace, sc.case.n_generators(), sc.case.n_lines(), downsample, BufWriter::new(file))
        .map_err(|e| runtime(&e))?;
    let limits: Vec<f64> = sc.case.lines().iter().map(|l| l.limit).collect();
    let summary = RunSummary::from_trace(&trace, &limits, sc.config.plant.f0, wall);
    let text = serde_json::to_string_pretty(&summary).map_err(|e| runtime(&e))?;
    fs::write(out.join("summary.json"), &text).map_err(|e| runtime(&e))?;
    println!("{text}");
    Ok(())
}

fn compare_cmd(opts: &RunOpts) -> Result<(), Failure> {
    let (sc, trace, _) = simulate(opts.load()?)?;
    let report = compare(&sc.case, &trace).map_err(|e| Failure::Runtime(e.to_string()))?;
    print_json(&report)
}

fn validate(path: &Path) -> Result<(), Failure> {
    let sc = read_scenario(path).map_err(|e| Failure::Config(e.to_string()))?;
    GridMatrices::build(&sc.case).map_err(|e| Failure::Config(e.to_string()))?;
    print_json(&serde_json::json!({
        "scenario": path.display().to_string(),
        "buses": sc.case.n_buses(),
        "lines": sc.case.n_lines(),
        "generators": sc.case.n_generators(),
        "loads": sc.case.loads().len(),
        "steps": sc.config.steps(),
        "valid": true,
    }))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GRIDFLOW_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { opts, out, csv_downsample } => run(opts, out, *csv_downsample),
        Command::Compare { opts } => compare_cmd(opts),
        Command::Validate { scenario } => validate(scenario),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
