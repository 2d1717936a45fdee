//! Elementwise update rules and local subproblem assembly.

use nalgebra::DVector;

use crate::error::ContractError;
use crate::qp::{QpProblem, QpSolution, QpSolver, DEFAULT_TOL};

/// Quadratic weight and linear coefficient added to one shared angle of a
/// local problem.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Penalty {
    pub weight: f64,
    pub linear: f64,
}

impl Penalty {
    fn add(self, other: Penalty) -> Penalty {
        Penalty {
            weight: self.weight + other.weight,
            linear: self.linear + other.linear,
        }
    }
}

/// `lambda (tc - t) + alpha/2 (tc - t)^2` as a function of `t`.
pub fn admm_penalty(theta_c: f64, lambda: f64, alpha: f64) -> Penalty {
    Penalty {
        weight: alpha,
        linear: -lambda - alpha * theta_c,
    }
}

/// `lambda (tc - t) + beta^2 (tc - t)^2` as a function of `t`.
pub fn atc_penalty(theta_c: f64, lambda: f64, beta: f64) -> Penalty {
    let w = 2.0 * beta * beta;
    Penalty {
        weight: w,
        linear: -lambda - w * theta_c,
    }
}

/// `beta/2 (t - tm)^2 + gamma t (tm - tn) + lambda t` for one coupling
/// partner; `tm` is the region's own previous value.
pub fn app_penalty(own_prev: f64, neighbor: f64, lambda: f64, beta: f64, gamma: f64) -> Penalty {
    Penalty {
        weight: beta,
        linear: -beta * own_prev + gamma * (own_prev - neighbor) + lambda,
    }
}

/// Sum the APP penalties of every partner of one shared angle.
pub fn app_penalty_sum(own_prev: f64, partners: &[(f64, f64)], beta: f64, gamma: f64) -> Penalty {
    partners
        .iter()
        .map(|&(n, l)| app_penalty(own_prev, n, l, beta, gamma))
        .fold(Penalty::default(), Penalty::add)
}

/// Solve a local problem: `base` plus `penalties[k]` on variable `locals[k]`.
/// `work` holds a copy of `base` whose diagonal and linear entries at
/// `locals` are overwritten.
pub fn solve_local(
    base: &QpProblem,
    work: &mut QpProblem,
    locals: &[usize],
    penalties: &[Penalty],
    solver: &mut QpSolver,
    warm: Option<&QpSolution>,
) -> Result<QpSolution, ContractError> {
    if locals.len() != penalties.len() {
        return Err(ContractError::Dimension("one penalty per shared angle".into()));
    }
    for (&l, pen) in locals.iter().zip(penalties) {
        work.h[(l, l)] = base.h[(l, l)] + pen.weight;
        work.g[l] = base.g[l] + pen.linear;
    }
    solver.solve(work, DEFAULT_TOL, warm)
}

/// Closed-form minimizer of the ADMM coordinator quadratic for one bus:
/// `mean(copies) - sum(lambda) / (alpha |M|)`.
pub fn admm_coordinator(copies: &[f64], multipliers: &[f64], alpha: f64) -> f64 {
    let m = copies.len() as f64;
    copies.iter().sum::<f64>() / m - multipliers.iter().sum::<f64>() / (alpha * m)
}

/// Closed-form minimizer of the ATC coordinator quadratic for one bus:
/// `mean(copies) - sum(lambda) / (2 beta^2 |M|)`.
pub fn atc_coordinator(copies: &[f64], multipliers: &[f64], beta: f64) -> Result<f64, ContractError> {
    if beta == 0.0 {
        return Err(ContractError::Invalid("beta must be non-zero".into()));
    }
    let m = copies.len() as f64;
    Ok(copies.iter().sum::<f64>() / m - multipliers.iter().sum::<f64>() / (2.0 * beta * beta * m))
}

/// `lambda + alpha (tc - tm)`.
pub fn admm_multiplier_update(lambda: f64, theta_c: f64, theta_m: f64, alpha: f64) -> f64 {
    lambda + alpha * (theta_c - theta_m)
}

/// `(lambda + 2 beta^2 (tc - tm), alpha beta)`.
pub fn atc_multiplier_and_beta_update(lambda: f64, theta_c: f64, theta_m: f64, beta: f64, alpha: f64) -> (f64, f64) {
    (lambda + 2.0 * beta * beta * (theta_c - theta_m), alpha * beta)
}

/// `lambda + alpha (tm - tn)`.
pub fn app_multiplier_update(lambda: f64, theta_m: f64, theta_n: f64, alpha: f64) -> f64 {
    lambda + alpha * (theta_m - theta_n)
}

/// Shared-angle values of a local solution.
pub fn shared_values(x: &DVector<f64>, locals: &[usize]) -> Vec<f64> {
    locals.iter().map(|&l| x[l]).collect()
}
