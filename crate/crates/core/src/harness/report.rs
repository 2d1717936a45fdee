use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algos::{AlgorithmParams, RunRecord, RunStatus};
use crate::comms::ChannelModel;
use crate::error::{ContractError, HarnessError};

/// A run succeeds when it converges within this many iterations...
pub const SUCCESS_ITERATIONS: usize = 1000;
/// ...with a relative gap below this.
pub const SUCCESS_GAP: f64 = 0.01;

/// `|dist - central| / |central|`.
pub fn relative_gap(dist_cost: f64, central_cost: f64) -> Result<f64, ContractError> {
    if central_cost == 0.0 {
        return Err(ContractError::Invalid(format!(
            "relative gap undefined for a zero centralized cost (difference {})",
            dist_cost - central_cost
        )));
    }
    Ok((dist_cost - central_cost).abs() / central_cost.abs())
}

pub fn is_success(status: RunStatus, iterations: usize, gap: f64) -> bool {
    status == RunStatus::Converged && iterations <= SUCCESS_ITERATIONS && gap < SUCCESS_GAP
}

/// Percentage of successful runs.
pub fn success_rate(records: &[RunRecord]) -> Result<f64, ContractError> {
    if records.is_empty() {
        return Err(ContractError::Invalid("success rate of no runs".into()));
    }
    let ok = records
        .iter()
        .filter(|r| is_success(r.status, r.iterations, r.relative_gap))
        .count();
    Ok(100.0 * ok as f64 / records.len() as f64)
}

/// The per-run part of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run: usize,
    pub seed: u64,
    pub status: RunStatus,
    pub iterations: usize,
    pub objective: f64,
    pub relative_gap: f64,
    pub final_mismatch: f64,
    pub final_perceived_mismatch: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_beta: Option<f64>,
    pub degenerate_costs: bool,
}

impl RunSummary {
    pub fn from_record(run: usize, r: &RunRecord) -> Self {
        RunSummary {
            run,
            seed: r.seed,
            status: r.status,
            iterations: r.iterations,
            objective: r.objective,
            relative_gap: r.relative_gap,
            final_mismatch: r.final_mismatch,
            final_perceived_mismatch: r.final_perceived_mismatch,
            final_beta: r.final_beta,
            degenerate_costs: r.degenerate_costs,
        }
    }

    pub fn success(&self) -> bool {
        is_success(self.status, self.iterations, self.relative_gap)
    }
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub std: f64,
}

impl Moments {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let std = if xs.len() > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Moments { mean, std }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapDistribution {
    pub min: f64,
    pub median: f64,
    pub mean: f64,
    pub max: f64,
}

impl GapDistribution {
    pub fn of(xs: &[f64]) -> Self {
        let mut v = xs.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
        GapDistribution {
            min: v[0],
            median,
            mean: v.iter().sum::<f64>() / n as f64,
            max: v[n - 1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StatusCounts {
    pub converged: usize,
    pub iteration_limit: usize,
    pub subproblem_failure: usize,
    pub penalty_limit: usize,
}

/// Aggregates of one (algorithm, channel) grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub index: usize,
    pub algorithm: AlgorithmParams,
    pub channel: ChannelModel,
    /// Final true mismatch over runs.
    pub mismatch: Moments,
    /// Final mismatch as the regions see it.
    pub perceived_mismatch: Moments,
    /// Percent.
    pub success_rate: f64,
    /// Mean iterations of the successful runs, or the iteration cap when
    /// none succeeded.
    pub avg_iterations: f64,
    pub not_converged: bool,
    pub relative_gap: GapDistribution,
    pub statuses: StatusCounts,
    pub runs: Vec<RunSummary>,
}

impl PointReport {
    pub fn from_runs(index: usize, algorithm: AlgorithmParams, channel: ChannelModel, runs: Vec<RunSummary>) -> Self {
        assert!(!runs.is_empty(), "a grid point needs at least one run");
        let col = |f: fn(&RunSummary) -> f64| runs.iter().map(f).collect::<Vec<_>>();
        let good: Vec<f64> = runs.iter().filter(|r| r.success()).map(|r| r.iterations as f64).collect();
        let mut statuses = StatusCounts::default();
        for r in &runs {
            *match r.status {
                RunStatus::Converged => &mut statuses.converged,
                RunStatus::IterationLimit => &mut statuses.iteration_limit,
                RunStatus::SubproblemFailure => &mut statuses.subproblem_failure,
                RunStatus::PenaltyLimit => &mut statuses.penalty_limit,
            } += 1;
        }
        PointReport {
            index,
            algorithm,
            channel,
            mismatch: Moments::of(&col(|r| r.final_mismatch)),
            perceived_mismatch: Moments::of(&col(|r| r.final_perceived_mismatch)),
            success_rate: 100.0 * good.len() as f64 / runs.len() as f64,
            avg_iterations: if good.is_empty() {
                SUCCESS_ITERATIONS as f64
            } else {
                good.iter().sum::<f64>() / good.len() as f64
            },
            not_converged: good.is_empty(),
            relative_gap: GapDistribution::of(&col(|r| r.relative_gap)),
            statuses,
            runs,
        }
    }

    /// Short name used in CSV output.
    pub fn label(&self) -> String {
        format!("{}/{}", self.algorithm.kind, self.channel.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub case: String,
    pub regions: usize,
    pub central_objective: f64,
    pub runs_per_point: usize,
    pub base_seed: u64,
    pub points: Vec<PointReport>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports hold finite numbers")
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Config(format!("report JSON: {e}")))
    }

    /// One row per grid point and statistic.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["point", "algorithm", "alpha", "beta", "gamma", "channel", "statistic", "value"])
            .expect("in-memory write");
        for p in &self.points {
            let a = &p.algorithm;
            let rows: [(&str, String); 14] = [
                ("mismatch_mean", num(p.mismatch.mean)),
                ("mismatch_std", num(p.mismatch.std)),
                ("perceived_mismatch_mean", num(p.perceived_mismatch.mean)),
                ("perceived_mismatch_std", num(p.perceived_mismatch.std)),
                ("success_rate", num(p.success_rate)),
                ("avg_iterations", num(p.avg_iterations)),
                ("gap_min", num(p.relative_gap.min)),
                ("gap_median", num(p.relative_gap.median)),
                ("gap_mean", num(p.relative_gap.mean)),
                ("gap_max", num(p.relative_gap.max)),
                ("converged", p.statuses.converged.to_string()),
                ("iteration_limit", p.statuses.iteration_limit.to_string()),
                ("subproblem_failure", p.statuses.subproblem_failure.to_string()),
                ("penalty_limit", p.statuses.penalty_limit.to_string()),
            ];
            for (stat, value) in rows {
                w.write_record([
                    p.index.to_string(),
                    a.kind.to_string(),
                    num(a.alpha),
                    num(a.beta),
                    num(a.gamma),
                    p.channel.label(),
                    stat.to_string(),
                    value,
                ])
                .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<(), HarnessError> {
        write(path.as_ref(), &self.to_json())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), HarnessError> {
        write(path.as_ref(), &self.to_csv())
    }
}

/// 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write(path: &Path, text: &str) -> Result<(), HarnessError> {
    let io = |source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, text).map_err(io)
}
