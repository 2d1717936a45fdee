//! Monte-Carlo experiments over algorithms and channel models.
//!
//! Every (algorithm, channel) pair of a config is a grid point; each point
//! is run `runs` times with seeds derived from the base seed, the point's
//! content and the run index.

mod config;
mod report;

pub use config::{AlgorithmSpec, ExperimentConfig, OutputPaths};
pub use report::{
    is_success, relative_gap, success_rate, ExperimentReport, GapDistribution, Moments, PointReport, RunSummary,
    StatusCounts, SUCCESS_GAP, SUCCESS_ITERATIONS,
};

use rayon::prelude::*;

use crate::algos::{run_distributed_with_reference, AlgorithmParams};
use crate::case::read_case;
use crate::comms::{hash_words, mix64, ChannelModel};
use crate::error::HarnessError;
use crate::opf::solve_centralized;
use crate::partition::{decompose, PartitionedModel, RegionAssignment};
use crate::qp::QpStatus;

/// Seed of run `run` at the grid point `(params, channel)`. Depends on the
/// point's content, not its position, so editing a sweep leaves the other
/// points' runs unchanged.
pub fn run_seed(base_seed: u64, params: &AlgorithmParams, channel: &ChannelModel, run: usize) -> u64 {
    let text = serde_json::to_string(&(params, channel)).expect("plain data");
    let content = text
        .as_bytes()
        .chunks(8)
        .fold(0u64, |h, c| {
            let mut w = [0u8; 8];
            w[..c.len()].copy_from_slice(c);
            mix64(h ^ u64::from_le_bytes(w))
        });
    hash_words(&[base_seed, content, run as u64])
}

/// Run every grid point of a prepared model.
pub fn run_grid(
    model: &PartitionedModel,
    central_objective: f64,
    points: &[(AlgorithmParams, ChannelModel)],
    runs: usize,
    base_seed: u64,
) -> Result<Vec<PointReport>, HarnessError> {
    let jobs: Vec<(usize, usize)> = (0..points.len()).flat_map(|g| (0..runs).map(move |r| (g, r))).collect();
    let done: Vec<Result<RunSummary, HarnessError>> = jobs
        .par_iter()
        .map(|&(g, r)| {
            let (params, channel) = &points[g];
            let seed = run_seed(base_seed, params, channel, r);
            let rec = run_distributed_with_reference(model, params, channel, seed, central_objective)?;
            Ok(RunSummary::from_record(r, &rec))
        })
        .collect();
    let mut done = done.into_iter();
    points
        .iter()
        .enumerate()
        .map(|(g, (params, channel))| {
            let summaries = done.by_ref().take(runs).collect::<Result<Vec<_>, _>>()?;
            Ok(PointReport::from_runs(g, *params, *channel, summaries))
        })
        .collect()
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    let params = config.resolve()?;
    let case = read_case(&config.case)?;
    let assign = RegionAssignment::read(&config.partition)?;
    let model = decompose(&case, &assign)?;
    let central = solve_centralized(&case)?;
    if central.status != QpStatus::Optimal {
        return Err(HarnessError::Oracle(format!("{}: {:?}", case.name, central.status)));
    }
    relative_gap(central.objective, central.objective)?;
    let points: Vec<(AlgorithmParams, ChannelModel)> = params
        .iter()
        .flat_map(|p| config.channels.iter().map(move |c| (*p, *c)))
        .collect();
    let reports = run_grid(&model, central.objective, &points, config.runs, config.base_seed)?;
    Ok(ExperimentReport {
        name: config.name.clone(),
        case: case.name.clone(),
        regions: model.regions.len(),
        central_objective: central.objective,
        runs_per_point: config.runs,
        base_seed: config.base_seed,
        points: reports,
    })
}

/// Write the report to whichever outputs the config names.
pub fn emit_report(report: &ExperimentReport, outputs: &OutputPaths) -> Result<(), HarnessError> {
    if let Some(p) = &outputs.json {
        report.write_json(p)?;
    }
    if let Some(p) = &outputs.csv {
        report.write_csv(p)?;
    }
    Ok(())
}
