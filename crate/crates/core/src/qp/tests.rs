use super::*;
use approx::assert_abs_diff_eq;
use nalgebra::{dmatrix, dvector};
use proptest::prelude::*;

fn scalar_lower_bound() -> QpProblem {
    // min x^2 s.t. x >= 1
    let mut p = QpProblem::new(1);
    p.h = dmatrix![2.0];
    p.lb = dvector![1.0];
    p
}

#[test]
fn lower_bound_active_with_dual_two() {
    let p = scalar_lower_bound();
    let s = solve_qp(&p, DEFAULT_TOL).unwrap();
    assert_eq!(s.status, QpStatus::Optimal);
    assert_abs_diff_eq!(s.x[0], 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(s.z_bound[0], 2.0, epsilon = 1e-12);
    assert!(s.kkt_residual <= DEFAULT_TOL);
}

#[test]
fn equality_constrained_pair() {
    // min (x-3)^2 + (y+1)^2 s.t. x + y = 0
    let mut p = QpProblem::new(2);
    p.h = dmatrix![2.0, 0.0; 0.0, 2.0];
    p.g = dvector![-6.0, 2.0];
    p.a_eq = dmatrix![1.0, 1.0];
    p.b_eq = dvector![0.0];
    let s = solve_qp(&p, DEFAULT_TOL).unwrap();
    assert_eq!(s.status, QpStatus::Optimal);
    assert_abs_diff_eq!(s.x[0], 2.0, epsilon = 1e-10);
    assert_abs_diff_eq!(s.x[1], -2.0, epsilon = 1e-10);
    // 2(x-3) = y_eq
    assert_abs_diff_eq!(s.y_eq[0], -2.0, epsilon = 1e-10);
}

#[test]
fn contradictory_equality_and_bounds_is_infeasible() {
    let mut p = QpProblem::new(1);
    p.h = dmatrix![1.0];
    p.lb = dvector![0.0];
    p.ub = dvector![1.0];
    p.a_eq = dmatrix![1.0];
    p.b_eq = dvector![2.0];
    let s = solve_qp(&p, DEFAULT_TOL).unwrap();
    assert_eq!(s.status, QpStatus::Infeasible);
    let r = kkt_residuals(&p, &s).unwrap();
    assert!(r.feasibility > DEFAULT_TOL);
}

#[test]
fn inconsistent_equalities_are_infeasible() {
    let mut p = QpProblem::new(2);
    p.h = DMatrix::identity(2, 2);
    p.a_eq = dmatrix![1.0, 1.0; 2.0, 2.0];
    p.b_eq = dvector![1.0, 3.0];
    assert_eq!(solve_qp(&p, DEFAULT_TOL).unwrap().status, QpStatus::Infeasible);
}

fn analytic(x: f64, z: f64) -> QpSolution {
    QpSolution {
        x: dvector![x],
        y_eq: DVector::zeros(0),
        z_in: DVector::zeros(0),
        z_bound: dvector![z],
        status: QpStatus::Optimal,
        kkt_residual: 0.0,
        iterations: 0,
        active: vec![],
    }
}

#[test]
fn residuals_of_exact_solution_vanish() {
    let r = kkt_residuals(&scalar_lower_bound(), &analytic(1.0, 2.0)).unwrap();
    assert!(r.stationarity <= 1e-12);
    assert!(r.feasibility <= 1e-12);
    assert!(r.complementarity <= 1e-12);
}

#[test]
fn perturbed_solution_has_stationarity_residual() {
    let p = scalar_lower_bound();
    let s = analytic(1.001, 2.0);
    let r = kkt_residuals(&p, &s).unwrap();
    assert_abs_diff_eq!(r.stationarity, 2e-3, epsilon = 1e-12);
    // idempotent
    assert_eq!(kkt_residuals(&p, &s).unwrap(), r);
}

#[test]
fn residual_dimension_mismatch() {
    let s = analytic(1.0, 2.0);
    let p = QpProblem::new(2);
    assert!(matches!(kkt_residuals(&p, &s), Err(ContractError::Dimension(_))));
}

#[test]
fn contract_violations() {
    let mut p = QpProblem::new(2);
    p.h = dmatrix![1.0, 0.0; 0.0, -1.0];
    assert!(matches!(solve_qp(&p, DEFAULT_TOL), Err(ContractError::Invalid(_))));
    let mut p = QpProblem::new(2);
    p.g = dvector![1.0];
    assert!(matches!(solve_qp(&p, DEFAULT_TOL), Err(ContractError::Dimension(_))));
    assert!(solve_qp(&scalar_lower_bound(), 0.0).is_err());
}

#[test]
fn two_sided_rows_and_psd_hessian() {
    // linear cost on x, quadratic on y: min x + y^2 s.t. 1 <= x + y <= 3, x in [0, 5]
    let mut p = QpProblem::new(2);
    p.h = dmatrix![0.0, 0.0; 0.0, 2.0];
    p.g = dvector![1.0, 0.0];
    p.a_in = dmatrix![1.0, 1.0];
    p.lb_in = dvector![1.0];
    p.ub_in = dvector![3.0];
    p.lb = dvector![0.0, f64::NEG_INFINITY];
    p.ub = dvector![5.0, f64::INFINITY];
    let s = solve_qp(&p, DEFAULT_TOL).unwrap();
    assert_eq!(s.status, QpStatus::Optimal, "{s:?}");
    // optimum: y = 1/2, x = 1/2 with the row at its lower side
    assert_abs_diff_eq!(s.x[0], 0.5, epsilon = 1e-7);
    assert_abs_diff_eq!(s.x[1], 0.5, epsilon = 1e-7);
    assert_abs_diff_eq!(s.z_in[0], 1.0, epsilon = 1e-7);
}

#[test]
fn upper_side_multiplier_is_nonpositive() {
    // min (x-2)^2 s.t. x <= 1
    let mut p = QpProblem::new(1);
    p.h = dmatrix![2.0];
    p.g = dvector![-4.0];
    p.ub = dvector![1.0];
    let s = solve_qp(&p, DEFAULT_TOL).unwrap();
    assert_abs_diff_eq!(s.x[0], 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(s.z_bound[0], -2.0, epsilon = 1e-12);
    assert_eq!(s.active, vec![ActiveSide::Bound(0, true)]);
}

#[test]
fn fixed_variables_and_degenerate_rows() {
    // x0 fixed by bounds, x1 by an equal-sided row, duplicate equality row
    let mut p = QpProblem::new(3);
    p.h = DMatrix::identity(3, 3);
    p.g = dvector![1.0, 1.0, 1.0];
    p.lb = dvector![2.0, f64::NEG_INFINITY, f64::NEG_INFINITY];
    p.ub = dvector![2.0, f64::INFINITY, f64::INFINITY];
    p.a_in = dmatrix![0.0, 1.0, 0.0];
    p.lb_in = dvector![-1.0];
    p.ub_in = dvector![-1.0];
    p.a_eq = dmatrix![1.0, 0.0, 1.0; 2.0, 0.0, 2.0];
    p.b_eq = dvector![3.0, 6.0];
    let s = solve_qp(&p, DEFAULT_TOL).unwrap();
    assert_eq!(s.status, QpStatus::Optimal, "{s:?}");
    assert_abs_diff_eq!(s.x[0], 2.0, epsilon = 1e-10);
    assert_abs_diff_eq!(s.x[1], -1.0, epsilon = 1e-10);
    assert_abs_diff_eq!(s.x[2], 1.0, epsilon = 1e-10);
}

fn random_box_problem(n: usize, seed: &[f64]) -> QpProblem {
    let mut it = seed.iter().copied().cycle();
    let m = DMatrix::from_fn(n, n, |_, _| it.next().unwrap());
    let mut p = QpProblem::new(n);
    p.h = m.transpose() * &m + DMatrix::identity(n, n) * 0.5;
    p.g = DVector::from_fn(n, |_, _| 3.0 * it.next().unwrap());
    p.lb = DVector::from_fn(n, |_, _| -0.5 - it.next().unwrap().abs());
    p.ub = DVector::from_fn(n, |_, _| 0.5 + it.next().unwrap().abs());
    p
}

/// Enumerate every lower/upper/free pattern; the best feasible face
/// minimizer is the global minimizer of a strictly convex box QP.
fn enumerate_box(p: &QpProblem) -> DVector<f64> {
    let n = p.n();
    let mut best: Option<(f64, DVector<f64>)> = None;
    for code in 0..3usize.pow(n as u32) {
        let mut pattern = vec![0u8; n];
        let mut c = code;
        for v in pattern.iter_mut() {
            *v = (c % 3) as u8;
            c /= 3;
        }
        let mut x = DVector::zeros(n);
        let free: Vec<usize> = (0..n).filter(|&i| pattern[i] == 0).collect();
        for i in 0..n {
            match pattern[i] {
                1 => x[i] = p.lb[i],
                2 => x[i] = p.ub[i],
                _ => {}
            }
        }
        if !free.is_empty() {
            let hff = DMatrix::from_fn(free.len(), free.len(), |a, b| p.h[(free[a], free[b])]);
            let rhs = DVector::from_fn(free.len(), |a, _| {
                -p.g[free[a]] - (0..n).filter(|j| pattern[*j] != 0).map(|j| p.h[(free[a], j)] * x[j]).sum::<f64>()
            });
            let xf = hff.lu().solve(&rhs).unwrap();
            for (a, &i) in free.iter().enumerate() {
                x[i] = xf[a];
            }
        }
        if (0..n).all(|i| x[i] >= p.lb[i] - 1e-12 && x[i] <= p.ub[i] + 1e-12) {
            let f = p.objective(&x);
            if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
                best = Some((f, x));
            }
        }
    }
    best.unwrap().1
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn equality_only_matches_direct_kkt_solve(
        n in 1usize..=8,
        m_frac in 0.0f64..1.0,
        vals in prop::collection::vec(-2.0f64..2.0, 200),
    ) {
        let m = ((n as f64) * m_frac) as usize;
        let mut it = vals.iter().copied().cycle();
        let r = DMatrix::from_fn(n, n, |_, _| it.next().unwrap());
        let mut p = QpProblem::new(n);
        p.h = r.transpose() * &r + DMatrix::identity(n, n) * 0.1;
        p.g = DVector::from_fn(n, |_, _| it.next().unwrap());
        p.a_eq = DMatrix::from_fn(m, n, |_, _| it.next().unwrap());
        p.b_eq = DVector::from_fn(m, |_, _| it.next().unwrap());
        // skip nearly rank-deficient constraint sets
        if m > 0 {
            let sv = p.a_eq.clone().svd(false, false).singular_values;
            prop_assume!(sv.min() > 1e-3 * sv.max().max(1.0));
        }
        let mut kkt = DMatrix::zeros(n + m, n + m);
        kkt.view_mut((0, 0), (n, n)).copy_from(&p.h);
        kkt.view_mut((0, n), (n, m)).copy_from(&p.a_eq.transpose());
        kkt.view_mut((n, 0), (m, n)).copy_from(&p.a_eq);
        let mut rhs = DVector::zeros(n + m);
        rhs.rows_mut(0, n).copy_from(&(-&p.g));
        rhs.rows_mut(n, m).copy_from(&p.b_eq);
        let direct = kkt.lu().solve(&rhs).unwrap();
        let s = solve_qp(&p, DEFAULT_TOL).unwrap();
        prop_assert_eq!(s.status, QpStatus::Optimal);
        let err = (&s.x - direct.rows(0, n)).amax();
        prop_assert!(err <= 1e-6, "err {}", err);
    }

    #[test]
    fn box_qp_matches_enumeration(n in 1usize..=6, vals in prop::collection::vec(-1.5f64..1.5, 80)) {
        let p = random_box_problem(n, &vals);
        let brute = enumerate_box(&p);
        let s = solve_qp(&p, DEFAULT_TOL).unwrap();
        prop_assert_eq!(s.status, QpStatus::Optimal);
        prop_assert!((&s.x - &brute).amax() <= 1e-6, "{} vs {}", s.x, brute);
    }

    #[test]
    fn warm_start_reaches_same_point(n in 2usize..=6, vals in prop::collection::vec(-1.5f64..1.5, 80), shift in -1.0f64..1.0) {
        let p = random_box_problem(n, &vals);
        let mut solver = QpSolver::new();
        let first = solver.solve(&p, DEFAULT_TOL, None).unwrap();
        let mut q = p.clone();
        q.g[0] += shift;
        let cold = solve_qp(&q, DEFAULT_TOL).unwrap();
        let warm = solver.solve(&q, DEFAULT_TOL, Some(&first)).unwrap();
        prop_assert_eq!(warm.status, QpStatus::Optimal);
        prop_assert!((&warm.x - &cold.x).amax() <= 1e-9);
    }
}

#[test]
fn identical_inputs_give_bit_identical_outputs() {
    let vals: Vec<f64> = (0..80).map(|i| ((i * 37 % 23) as f64 - 11.0) / 7.0).collect();
    let p = random_box_problem(6, &vals);
    let a = solve_qp(&p, DEFAULT_TOL).unwrap();
    let b = solve_qp(&p, DEFAULT_TOL).unwrap();
    assert_eq!(a, b);
    let mut solver = QpSolver::new();
    let c = solver.solve(&p, DEFAULT_TOL, None).unwrap();
    let d = solver.solve(&p, DEFAULT_TOL, None).unwrap();
    assert_eq!(a.x, c.x);
    assert_eq!(c, d);
}
