//! Centralized DC optimal power flow.
//!
//! Variables are ordered as all bus angles (in case bus order) followed by
//! all generator outputs (in case generator order).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::case::{validate_case, NetworkCase};
use crate::error::ContractError;
use crate::qp::{QpProblem, QpSolution, QpSolver, QpStatus, DEFAULT_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpfSolution {
    /// Bus angles in radians, case bus order.
    pub theta: Vec<f64>,
    /// Generator outputs in p.u., case generator order.
    pub p: Vec<f64>,
    /// Total generation cost in $/h, including constant terms.
    pub objective: f64,
    pub status: QpStatus,
}

/// Write bus-balance rows `sum p - sum B (theta_i - theta_j) = d` into `a`.
///
/// `bus_row[k]` is the row of bus `k` (or `None` when that bus has no row),
/// `theta_col[k]` its angle column and `gen_col[g]` the output column of
/// generator `g`.
pub(crate) fn stamp_balance(
    case: &NetworkCase,
    branches: &[usize],
    bus_row: &[Option<usize>],
    theta_col: &[Option<usize>],
    gens: &[(usize, usize)],
    a: &mut DMatrix<f64>,
) {
    let idx = case.bus_index_map();
    for &(g, col) in gens {
        if let Some(r) = bus_row[idx[&case.generators[g].bus]] {
            a[(r, col)] += 1.0;
        }
    }
    for &k in branches {
        let br = &case.branches[k];
        let (f, t) = (idx[&br.from], idx[&br.to]);
        let (cf, ct) = (theta_col[f].expect("angle column"), theta_col[t].expect("angle column"));
        if let Some(r) = bus_row[f] {
            a[(r, cf)] -= br.susceptance;
            a[(r, ct)] += br.susceptance;
        }
        if let Some(r) = bus_row[t] {
            a[(r, ct)] -= br.susceptance;
            a[(r, cf)] += br.susceptance;
        }
    }
}

/// Two-sided flow rows for the limited branches among `branches`.
pub(crate) fn flow_rows(
    case: &NetworkCase,
    branches: &[usize],
    theta_col: &[Option<usize>],
    n: usize,
) -> (DMatrix<f64>, DVector<f64>, DVector<f64>) {
    let idx = case.bus_index_map();
    let limited: Vec<usize> = branches.iter().copied().filter(|&k| case.branches[k].is_limited()).collect();
    let mut a = DMatrix::zeros(limited.len(), n);
    let mut lo = DVector::zeros(limited.len());
    let mut hi = DVector::zeros(limited.len());
    for (r, &k) in limited.iter().enumerate() {
        let br = &case.branches[k];
        let cf = theta_col[idx[&br.from]].expect("angle column");
        let ct = theta_col[idx[&br.to]].expect("angle column");
        a[(r, cf)] += br.susceptance;
        a[(r, ct)] -= br.susceptance;
        lo[r] = -br.flow_limit;
        hi[r] = br.flow_limit;
    }
    (a, lo, hi)
}

fn require_valid(case: &NetworkCase) -> Result<(), ContractError> {
    let report = validate_case(case);
    match report.findings.first() {
        Some(f) => Err(ContractError::Invalid(format!("invalid case: {f}"))),
        None => Ok(()),
    }
}

/// Build the DC-OPF quadratic program. Constant cost terms are not part of
/// the QP objective; [`objective_cost`] adds them back.
pub fn build_dc_opf(case: &NetworkCase) -> Result<QpProblem, ContractError> {
    require_valid(case)?;
    let nb = case.buses.len();
    let ng = case.generators.len();
    let n = nb + ng;
    let mut p = QpProblem::new(n);
    for (g, gen) in case.generators.iter().enumerate() {
        p.h[(nb + g, nb + g)] = 2.0 * gen.cost.c2;
        p.g[nb + g] = gen.cost.c1;
        p.lb[nb + g] = gen.p_min;
        p.ub[nb + g] = gen.p_max;
    }
    let branches: Vec<usize> = case.in_service_branches().map(|(k, _)| k).collect();
    let rows: Vec<Option<usize>> = (0..nb).map(Some).collect();
    let cols: Vec<Option<usize>> = (0..nb).map(Some).collect();
    let gens: Vec<(usize, usize)> = (0..ng).map(|g| (g, nb + g)).collect();
    p.a_eq = DMatrix::zeros(nb, n);
    stamp_balance(case, &branches, &rows, &cols, &gens, &mut p.a_eq);
    p.b_eq = DVector::from_iterator(nb, case.buses.iter().map(|b| b.demand));
    (p.a_in, p.lb_in, p.ub_in) = flow_rows(case, &branches, &cols, n);
    let r = case.ref_bus().expect("validated");
    p.lb[r] = 0.0;
    p.ub[r] = 0.0;
    Ok(p)
}

/// Solve the centralized DC-OPF.
pub fn solve_centralized(case: &NetworkCase) -> Result<OpfSolution, ContractError> {
    solve_centralized_from(case, None).map(|(s, _)| s)
}

/// Solve the centralized DC-OPF, optionally warm-started from a previous QP
/// solution of the same case. Returns the QP solution for reuse.
pub fn solve_centralized_from(
    case: &NetworkCase,
    warm: Option<&QpSolution>,
) -> Result<(OpfSolution, QpSolution), ContractError> {
    let qp = build_dc_opf(case)?;
    let sol = QpSolver::new().solve(&qp, DEFAULT_TOL, warm)?;
    let nb = case.buses.len();
    let p: Vec<f64> = sol.x.rows(nb, case.generators.len()).iter().copied().collect();
    let objective = objective_cost(case, &p)?;
    Ok((
        OpfSolution {
            theta: sol.x.rows(0, nb).iter().copied().collect(),
            p,
            objective,
            status: sol.status,
        },
        sol,
    ))
}

/// Flow `B (theta_from - theta_to)` on every branch; zero when out of service.
pub fn line_flows(case: &NetworkCase, theta: &[f64]) -> Result<Vec<f64>, ContractError> {
    if theta.len() != case.buses.len() {
        return Err(ContractError::Dimension(format!(
            "{} angles for {} buses",
            theta.len(),
            case.buses.len()
        )));
    }
    let idx = case.bus_index_map();
    Ok(case
        .branches
        .iter()
        .map(|br| {
            if br.in_service {
                br.susceptance * (theta[idx[&br.from]] - theta[idx[&br.to]])
            } else {
                0.0
            }
        })
        .collect())
}

/// Total generation cost `sum c2 p^2 + c1 p + c0`.
pub fn objective_cost(case: &NetworkCase, p: &[f64]) -> Result<f64, ContractError> {
    if p.len() != case.generators.len() {
        return Err(ContractError::Dimension(format!(
            "{} outputs for {} generators",
            p.len(),
            case.generators.len()
        )));
    }
    Ok(case.generators.iter().zip(p).map(|(g, &pg)| g.cost.eval(pg)).sum())
}

/// Largest absolute bus-balance residual `|sum p - d - sum flow_out|`.
pub fn balance_residual(case: &NetworkCase, theta: &[f64], p: &[f64]) -> Result<f64, ContractError> {
    let flows = line_flows(case, theta)?;
    if p.len() != case.generators.len() {
        return Err(ContractError::Dimension("generator outputs".into()));
    }
    let idx = case.bus_index_map();
    let mut net: Vec<f64> = case.buses.iter().map(|b| -b.demand).collect();
    for (g, &pg) in case.generators.iter().zip(p) {
        net[idx[&g.bus]] += pg;
    }
    for (br, f) in case.branches.iter().zip(&flows) {
        net[idx[&br.from]] -= f;
        net[idx[&br.to]] += f;
    }
    Ok(net.iter().fold(0.0, |m, v| m.max(v.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::{fixtures::TWO_BUS, parse_case, read_case};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn two_bus() -> NetworkCase {
        parse_case(TWO_BUS).unwrap()
    }

    fn case14() -> NetworkCase {
        read_case(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/cases/case14.m")).unwrap()
    }

    #[test]
    fn two_bus_structure() {
        let p = build_dc_opf(&two_bus()).unwrap();
        assert_eq!(p.n(), 3);
        assert_eq!(p.a_eq.nrows(), 2);
        assert_eq!(p.a_in.nrows(), 1);
        // angle of the reference bus pinned by its bounds
        assert_eq!((p.lb[0], p.ub[0]), (0.0, 0.0));
        assert!(p.lb[1].is_infinite());
    }

    #[test]
    fn case14_structure() {
        let c = case14();
        let p = build_dc_opf(&c).unwrap();
        assert_eq!(p.n(), 14 + 5);
        assert_eq!(p.a_eq.nrows(), 14);
        // case14 has no ratings, so no flow row is generated
        assert_eq!(c.branches.len(), 20);
        assert_eq!(p.a_in.nrows(), 0);
        let mut limited = c.clone();
        for br in &mut limited.branches {
            br.flow_limit = 10.0;
        }
        assert_eq!(build_dc_opf(&limited).unwrap().a_in.nrows(), 20);
    }

    #[test]
    fn two_bus_solution() {
        let s = solve_centralized(&two_bus()).unwrap();
        assert_eq!(s.status, QpStatus::Optimal);
        assert_relative_eq!(s.p[0], 1.0, epsilon = 1e-9);
        assert_eq!(s.theta[0], 0.0);
        assert_relative_eq!(s.theta[1], -0.1, epsilon = 1e-9);
        assert_relative_eq!(s.objective, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn two_bus_congested_is_infeasible() {
        let mut c = two_bus();
        c.branches[0].flow_limit = 0.5;
        assert_eq!(solve_centralized(&c).unwrap().status, QpStatus::Infeasible);
    }

    #[test]
    fn zero_demand_dispatches_nothing() {
        let mut c = case14();
        for b in &mut c.buses {
            b.demand = 0.0;
        }
        for g in &mut c.generators {
            g.p_min = 0.0;
            g.cost.c0 = 0.0;
            g.cost.c1 = g.cost.c1.max(1.0);
        }
        let s = solve_centralized(&c).unwrap();
        assert_eq!(s.status, QpStatus::Optimal);
        assert!(s.p.iter().all(|v| v.abs() < 1e-9));
        assert!(s.theta.iter().all(|v| v.abs() < 1e-9));
        assert!(s.objective.abs() < 1e-7);
    }

    #[test]
    fn invalid_case_rejected() {
        let mut c = two_bus();
        c.buses[0].is_ref = false;
        assert!(build_dc_opf(&c).is_err());
    }

    #[test]
    fn flows_follow_the_angle_difference() {
        let c = two_bus();
        assert_eq!(line_flows(&c, &[0.0, 0.0]).unwrap(), vec![0.0]);
        assert_relative_eq!(line_flows(&c, &[0.1, 0.0]).unwrap()[0], 1.0, epsilon = 1e-12);
        assert!(line_flows(&c, &[0.0]).is_err());
    }

    #[test]
    fn cost_arithmetic() {
        let mut c = two_bus();
        c.generators[0].cost = crate::case::CostCurve { c2: 1.0, c1: 2.0, c0: 3.0 };
        assert_eq!(objective_cost(&c, &[2.0]).unwrap(), 11.0);
        c.generators[0].cost.c0 = 0.0;
        assert_eq!(objective_cost(&c, &[0.0]).unwrap(), 0.0);
        assert!(objective_cost(&c, &[]).is_err());
    }

    #[test]
    fn case14_optimum_balances_and_is_within_limits() {
        let c = case14();
        let s = solve_centralized(&c).unwrap();
        assert_eq!(s.status, QpStatus::Optimal);
        assert!(balance_residual(&c, &s.theta, &s.p).unwrap() <= 1e-6);
        for (g, &pg) in c.generators.iter().zip(&s.p) {
            assert!(pg >= g.p_min - 1e-6 && pg <= g.p_max + 1e-6);
        }
        let total: f64 = s.p.iter().sum();
        assert_relative_eq!(total, c.total_demand(), epsilon = 1e-6);
    }

    #[test]
    fn warm_start_same_objective() {
        let c = case14();
        let (cold, qp) = solve_centralized_from(&c, None).unwrap();
        let (warm, _) = solve_centralized_from(&c, Some(&qp)).unwrap();
        assert_relative_eq!(cold.objective, warm.objective, max_relative = 1e-8);
    }

    #[test]
    fn qp_objective_plus_constants_matches_cost() {
        let c = case14();
        let qp = build_dc_opf(&c).unwrap();
        let (s, raw) = solve_centralized_from(&c, None).unwrap();
        let c0: f64 = c.generators.iter().map(|g| g.cost.c0).sum();
        assert_relative_eq!(raw.objective(&qp) + c0, s.objective, max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn demand_scaling_scales_dispatch(t in 0.05f64..=1.0) {
            let base = two_bus();
            let mut scaled = base.clone();
            scaled.buses[1].demand *= t;
            let a = solve_centralized(&base).unwrap();
            let b = solve_centralized(&scaled).unwrap();
            prop_assert!((b.p[0] - t * a.p[0]).abs() < 1e-9);
        }

        #[test]
        fn solved_angles_balance_random_injections(seed in prop::collection::vec(-0.3f64..0.3, 14)) {
            // balance holds whenever theta solves the network equations
            let mut c = case14();
            let mut s = solve_centralized(&c).unwrap();
            for (b, v) in c.buses.iter_mut().zip(&seed) {
                b.demand += v;
            }
            let extra: f64 = seed.iter().sum();
            let slack = c.generators.iter().position(|g| g.bus == c.buses[c.ref_bus().unwrap()].id).unwrap();
            s.p[slack] += extra;
            let n = c.buses.len();
            let r = c.ref_bus().unwrap();
            let qp = build_dc_opf(&c).unwrap();
            // solve for angles with p fixed
            let mut inj = DVector::zeros(n);
            for (b, bus) in c.buses.iter().enumerate() {
                inj[b] = bus.demand;
            }
            for (g, &pg) in s.p.iter().enumerate() {
                for b in 0..n {
                    inj[b] -= qp.a_eq[(b, n + g)] * pg;
                }
            }
            let keep: Vec<usize> = (0..n).filter(|&b| b != r).collect();
            let bred = DMatrix::from_fn(n - 1, n - 1, |i, j| qp.a_eq[(keep[i], keep[j])]);
            let rhs = DVector::from_fn(n - 1, |i, _| inj[keep[i]]);
            let sol = bred.lu().solve(&rhs).unwrap();
            let mut theta = vec![0.0; n];
            for (i, &b) in keep.iter().enumerate() {
                theta[b] = sol[i];
            }
            prop_assert!(balance_residual(&c, &theta, &s.p).unwrap() < 1e-9);
        }
    }
}
