//! Command-line front end: centralized solves, single distributed runs and
//! Monte-Carlo experiments.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dopf::algos::{preset, run_distributed_with_reference, AlgorithmKind, AlgorithmParams, PresetSource, TestSystem};
use dopf::harness::{emit_report, ExperimentConfig, ExperimentReport};
use dopf::{decompose, read_case, solve_centralized, ChannelModel, HarnessError, QpStatus, RegionAssignment};

#[derive(Parser)]
#[command(name = "dopf", version, about = "Distributed DC optimal power flow under nonideal communication")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the centralized DC-OPF of a case.
    Solve {
        #[arg(long)]
        case: PathBuf,
        /// Write the solution as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a contiguous bus-number partition of a case.
    Partition {
        #[arg(long)]
        case: PathBuf,
        #[arg(long)]
        regions: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// One distributed run.
    Run(RunArgs),
    /// A Monte-Carlo sweep described by a TOML config.
    Experiment {
        config: PathBuf,
        /// Override the runs per grid point.
        #[arg(long)]
        runs: Option<usize>,
        /// Override the base seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ChannelKind {
    Ideal,
    Gaussian,
    BadData,
    Loss,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    case: PathBuf,
    #[arg(long)]
    partition: PathBuf,
    #[arg(long, value_parser = parse_kind)]
    algorithm: AlgorithmKind,
    /// Published test system whose preset to use.
    #[arg(long, value_parser = parse_system)]
    system: Option<TestSystem>,
    #[arg(long, value_parser = parse_source, default_value = "table")]
    preset: PresetSource,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long, value_enum, default_value = "ideal")]
    channel: ChannelKind,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    /// Bad-data magnitude in radians.
    #[arg(long, default_value_t = 2.0)]
    r: f64,
    #[arg(long, default_value_t = 0.0)]
    p_bad: f64,
    #[arg(long)]
    per_message: bool,
    #[arg(long, default_value_t = 0.0)]
    lambda_f: f64,
    #[arg(long, default_value_t = 0.1)]
    lambda_r: f64,
    #[arg(long)]
    symmetric: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the full run record (with trace) as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_kind(s: &str) -> Result<AlgorithmKind, String> {
    s.parse().map_err(|e: dopf::ContractError| e.to_string())
}

fn parse_system(s: &str) -> Result<TestSystem, String> {
    s.parse().map_err(|e: dopf::ContractError| e.to_string())
}

fn parse_source(s: &str) -> Result<PresetSource, String> {
    s.parse().map_err(|e: dopf::ContractError| e.to_string())
}

impl RunArgs {
    fn params(&self) -> Result<AlgorithmParams, HarnessError> {
        let mut p = match (self.alpha, self.system) {
            (Some(a), _) => AlgorithmParams::for_kind(self.algorithm, a),
            (None, Some(sys)) => preset(self.algorithm, sys, self.preset),
            (None, None) => return Err(HarnessError::Config("give --alpha or --system".into())),
        };
        if let Some(v) = self.beta {
            p.beta = v;
        }
        if let Some(v) = self.gamma {
            p.gamma = v;
        }
        if let Some(v) = self.tolerance {
            p.tolerance = v;
        }
        if let Some(v) = self.max_iterations {
            p.max_iterations = v;
        }
        p.validate()?;
        Ok(p)
    }

    fn channel(&self) -> ChannelModel {
        match self.channel {
            ChannelKind::Ideal => ChannelModel::Ideal,
            ChannelKind::Gaussian => ChannelModel::Gaussian { sigma: self.sigma },
            ChannelKind::BadData => ChannelModel::BadData {
                r: self.r,
                p_bad: self.p_bad,
                per_message: self.per_message,
            },
            ChannelKind::Loss => ChannelModel::IntermittentLoss {
                lambda_f: self.lambda_f,
                lambda_r: self.lambda_r,
                symmetric: self.symmetric,
            },
        }
    }
}

fn write(path: &Path, text: &str) -> Result<(), HarnessError> {
    std::fs::write(path, text).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn solve(case: &Path, out: Option<&Path>) -> Result<(), HarnessError> {
    let case = read_case(case)?;
    let t = Instant::now();
    let sol = solve_centralized(&case)?;
    println!("case        {}", case.name);
    println!("status      {:?}", sol.status);
    if sol.status != QpStatus::Optimal {
        return Err(HarnessError::Oracle(format!("{:?}", sol.status)));
    }
    println!("objective   {:.6}", sol.objective);
    println!("time        {:.3} s", t.elapsed().as_secs_f64());
    if let Some(path) = out {
        write(path, &serde_json::to_string_pretty(&sol).expect("finite solution"))?;
    }
    Ok(())
}

fn run(args: &RunArgs) -> Result<(), HarnessError> {
    let params = args.params()?;
    let channel = args.channel();
    let case = read_case(&args.case)?;
    let model = decompose(&case, &RegionAssignment::read(&args.partition)?)?;
    let central = solve_centralized(&case)?;
    if central.status != QpStatus::Optimal {
        return Err(HarnessError::Oracle(format!("{:?}", central.status)));
    }
    let t = Instant::now();
    let rec = run_distributed_with_reference(&model, &params, &channel, args.seed, central.objective)?;
    println!("algorithm   {} (alpha={}, beta={}, gamma={})", params.kind, params.alpha, params.beta, params.gamma);
    println!("channel     {}", channel.label());
    println!("status      {:?}", rec.status);
    println!("iterations  {}", rec.iterations);
    println!("mismatch    {:.3e} (perceived {:.3e})", rec.final_mismatch, rec.final_perceived_mismatch);
    println!("objective   {:.6} (centralized {:.6})", rec.objective, rec.central_objective);
    println!("gap         {:.3e}", rec.relative_gap);
    println!("time        {:.3} s", t.elapsed().as_secs_f64());
    if let Some(path) = &args.out {
        write(path, &serde_json::to_string_pretty(&rec).expect("finite record"))?;
    }
    Ok(())
}

fn print_report(r: &ExperimentReport) {
    println!("{} on {} ({} regions, {} runs per point)", r.name, r.case, r.regions, r.runs_per_point);
    println!(
        "{:>3}  {:<5} {:>10}  {:<36} {:>9} {:>10} {:>10} {:>8}",
        "pt", "alg", "alpha", "channel", "mu", "sigma", "success%", "avg it"
    );
    for p in &r.points {
        let it = if p.not_converged { "NC".to_string() } else { format!("{:.1}", p.avg_iterations) };
        println!(
            "{:>3}  {:<5} {:>10.3e}  {:<36} {:>9.2e} {:>10.2e} {:>10.1} {:>8}",
            p.index,
            p.algorithm.kind.to_string(),
            p.algorithm.alpha,
            p.channel.label(),
            p.perceived_mismatch.mean,
            p.perceived_mismatch.std,
            p.success_rate,
            it
        );
    }
}

fn experiment(
    path: &Path,
    runs: Option<usize>,
    seed: Option<u64>,
    json: Option<PathBuf>,
    csv: Option<PathBuf>,
) -> Result<(), HarnessError> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(r) = runs {
        cfg.runs = r;
    }
    if let Some(s) = seed {
        cfg.base_seed = s;
    }
    if json.is_some() {
        cfg.output.json = json;
    }
    if csv.is_some() {
        cfg.output.csv = csv;
    }
    let t = Instant::now();
    let report = dopf::run_experiment(&cfg)?;
    print_report(&report);
    eprintln!("wall time {:.1} s", t.elapsed().as_secs_f64());
    emit_report(&report, &cfg.output)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve { case, out } => solve(&case, out.as_deref()),
        Command::Partition { case, regions, out } => read_case(&case)
            .map_err(HarnessError::from)
            .and_then(|c| write(&out, &RegionAssignment::contiguous(&c, regions).to_text())),
        Command::Run(args) => run(&args),
        Command::Experiment { config, runs, seed, json, csv } => experiment(&config, runs, seed, json, csv),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
