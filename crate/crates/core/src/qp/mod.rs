//! Dense convex quadratic programming.
//!
//! ```text
//!     minimize     1/2 x' H x + g' x
//!     subject to   A_eq x = b_eq
//!                  lb_in <= A_in x <= ub_in
//!                  lb <= x <= ub
//! ```
//!
//! Equality rows (including fixed variables and rows with `lb_in == ub_in`)
//! are eliminated through an orthonormal null-space basis obtained from an
//! SVD. The remaining inequality-constrained problem is solved with the
//! Goldfarb–Idnani dual active-set method. When the reduced Hessian is only
//! positive semidefinite, a proximal-point outer loop is used instead.
//!
//! Multiplier sign convention: `H x + g = A_eq' y + A_in' z_in + z_x`, with
//! `z >= 0` on an active lower side and `z <= 0` on an active upper side.

mod dual_active_set;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::ContractError;
use dual_active_set::{Constraints, GiOutcome};

/// Default solver tolerance.
pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub h: DMatrix<f64>,
    pub g: DVector<f64>,
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
    pub a_in: DMatrix<f64>,
    pub lb_in: DVector<f64>,
    pub ub_in: DVector<f64>,
    pub lb: DVector<f64>,
    pub ub: DVector<f64>,
}

impl QpProblem {
    /// An unconstrained problem with zero objective in `n` variables.
    pub fn new(n: usize) -> Self {
        QpProblem {
            h: DMatrix::zeros(n, n),
            g: DVector::zeros(n),
            a_eq: DMatrix::zeros(0, n),
            b_eq: DVector::zeros(0),
            a_in: DMatrix::zeros(0, n),
            lb_in: DVector::zeros(0),
            ub_in: DVector::zeros(0),
            lb: DVector::from_element(n, f64::NEG_INFINITY),
            ub: DVector::from_element(n, f64::INFINITY),
        }
    }

    pub fn n(&self) -> usize {
        self.g.len()
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.h * x)) + self.g.dot(x)
    }

    /// Check dimensions, symmetry and numerical positive semidefiniteness.
    pub fn check(&self) -> Result<(), ContractError> {
        let n = self.n();
        let dim = |what: &str| Err(ContractError::Dimension(what.to_string()));
        if self.h.shape() != (n, n) {
            return dim("H must be n x n");
        }
        if self.a_eq.ncols() != n || self.a_eq.nrows() != self.b_eq.len() {
            return dim("A_eq / b_eq");
        }
        if self.a_in.ncols() != n
            || self.a_in.nrows() != self.lb_in.len()
            || self.a_in.nrows() != self.ub_in.len()
        {
            return dim("A_in / lb_in / ub_in");
        }
        if self.lb.len() != n || self.ub.len() != n {
            return dim("variable bounds");
        }
        let finite = |m: &DMatrix<f64>| m.iter().all(|v| v.is_finite());
        if !finite(&self.h) || !finite(&self.a_eq) || !finite(&self.a_in) {
            return Err(ContractError::Invalid("non-finite matrix entry".into()));
        }
        if self.g.iter().chain(self.b_eq.iter()).any(|v| !v.is_finite()) {
            return Err(ContractError::Invalid("non-finite vector entry".into()));
        }
        let scale = self.h.amax().max(1.0);
        for i in 0..n {
            for j in 0..i {
                if (self.h[(i, j)] - self.h[(j, i)]).abs() > 1e-12 * scale {
                    return Err(ContractError::Invalid("H is not symmetric".into()));
                }
            }
        }
        for (lo, hi) in self.lb.iter().zip(self.ub.iter()).chain(self.lb_in.iter().zip(self.ub_in.iter())) {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(ContractError::Invalid("lower bound exceeds upper bound".into()));
            }
        }
        if n > 0 && !is_diagonal(&self.h) {
            let eig = self.h.clone().symmetric_eigen();
            if eig.eigenvalues.min() < -1e-10 * scale {
                return Err(ContractError::Invalid("H is not positive semidefinite".into()));
            }
        } else if self.h.diagonal().iter().any(|&d| d < -1e-10 * scale) {
            return Err(ContractError::Invalid("H is not positive semidefinite".into()));
        }
        Ok(())
    }
}

fn is_diagonal(h: &DMatrix<f64>) -> bool {
    let n = h.nrows();
    (0..n).all(|j| (0..n).all(|i| i == j || h[(i, j)] == 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QpStatus {
    Optimal,
    Infeasible,
    IterationLimit,
    /// The method finished but the KKT conditions do not hold to tolerance.
    NumericalFailure,
}

/// Identifies one side of a constraint for warm starting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActiveSide {
    /// Row of `A_in`; `true` for the upper side.
    Row(usize, bool),
    /// Variable bound; `true` for the upper side.
    Bound(usize, bool),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// Multipliers of `A_eq`.
    pub y_eq: DVector<f64>,
    /// Signed multipliers of `A_in` rows.
    pub z_in: DVector<f64>,
    /// Signed multipliers of the variable bounds.
    pub z_bound: DVector<f64>,
    pub status: QpStatus,
    /// Scale-relative KKT error (see [`KktResiduals::relative`]).
    pub kkt_residual: f64,
    pub iterations: usize,
    pub active: Vec<ActiveSide>,
}

impl QpSolution {
    pub fn objective(&self, p: &QpProblem) -> f64 {
        p.objective(&self.x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub feasibility: f64,
    pub complementarity: f64,
    stat_scale: f64,
    feas_scale: f64,
}

impl KktResiduals {
    /// Largest residual after dividing by the magnitude of the terms it is
    /// formed from (never by less than 1).
    pub fn relative(&self) -> f64 {
        (self.stationarity / self.stat_scale)
            .max(self.feasibility / self.feas_scale)
            .max(self.complementarity / self.stat_scale)
    }
}

fn side_residual(z: f64, act: f64, lo: f64, hi: f64) -> (f64, f64) {
    // (feasibility violation, complementarity)
    let viol = (lo - act).max(act - hi).max(0.0);
    let comp = if z > 0.0 {
        if lo.is_finite() {
            z * (act - lo).abs()
        } else {
            z
        }
    } else if z < 0.0 {
        if hi.is_finite() {
            -z * (hi - act).abs()
        } else {
            -z
        }
    } else {
        0.0
    };
    (viol, comp)
}

/// Evaluate stationarity, primal feasibility and complementarity (each an
/// infinity norm) of `s` for `p`, directly from the problem data.
pub fn kkt_residuals(p: &QpProblem, s: &QpSolution) -> Result<KktResiduals, ContractError> {
    let n = p.n();
    if s.x.len() != n
        || s.y_eq.len() != p.b_eq.len()
        || s.z_in.len() != p.lb_in.len()
        || s.z_bound.len() != n
    {
        return Err(ContractError::Dimension("solution does not match problem".into()));
    }
    let hx = &p.h * &s.x;
    let eq_term = p.a_eq.transpose() * &s.y_eq;
    let in_term = p.a_in.transpose() * &s.z_in;
    let grad = &hx + &p.g;
    let stat = &grad - &eq_term - &in_term - &s.z_bound;
    let stationarity = stat.amax();
    let stat_scale = [hx.amax(), p.g.amax(), eq_term.amax(), in_term.amax(), s.z_bound.amax(), 1.0]
        .into_iter()
        .fold(0.0, f64::max);

    let mut feasibility: f64 = 0.0;
    let mut complementarity: f64 = 0.0;
    let mut feas_scale: f64 = 1.0;
    let ax = &p.a_eq * &s.x;
    for i in 0..p.b_eq.len() {
        feasibility = feasibility.max((ax[i] - p.b_eq[i]).abs());
        feas_scale = feas_scale.max(p.b_eq[i].abs());
    }
    let ax = &p.a_in * &s.x;
    for i in 0..p.lb_in.len() {
        let (v, c) = side_residual(s.z_in[i], ax[i], p.lb_in[i], p.ub_in[i]);
        feasibility = feasibility.max(v);
        complementarity = complementarity.max(c);
        feas_scale = feas_scale.max(ax[i].abs());
    }
    for j in 0..n {
        let (v, c) = side_residual(s.z_bound[j], s.x[j], p.lb[j], p.ub[j]);
        feasibility = feasibility.max(v);
        complementarity = complementarity.max(c);
        feas_scale = feas_scale.max(s.x[j].abs());
    }
    Ok(KktResiduals {
        stationarity,
        feasibility,
        complementarity,
        stat_scale,
        feas_scale,
    })
}

/// Solve `p` from a cold start.
pub fn solve_qp(p: &QpProblem, tol: f64) -> Result<QpSolution, ContractError> {
    QpSolver::new().solve(p, tol, None)
}

#[derive(Debug, Clone, Copy)]
enum Source {
    Eq(usize),
    Row(usize),
    Bound(usize),
}

/// One side of an inequality written as `c' y >= d` in reduced coordinates.
#[derive(Debug, Clone)]
struct OneSided {
    source: Source,
    upper: bool,
    /// `||A_row Z||`; converts the unit-row multiplier back to the row.
    norm: f64,
}

/// Equality elimination shared by all problems with the same constraint data.
#[derive(Debug, Clone)]
struct Reduction {
    /// Constraint data this reduction was built from.
    key: ConstraintKey,
    /// `n x k` orthonormal null-space basis of the equality rows.
    z: DMatrix<f64>,
    /// Particular solution of the equality rows.
    xp: DVector<f64>,
    /// Pseudo-inverse pieces of the equality matrix: `E = U S V'`.
    u_r: DMatrix<f64>,
    s_r: DVector<f64>,
    v_r: DMatrix<f64>,
    /// Origin of each equality row.
    eq_origin: Vec<Source>,
    n_eq: usize,
    rows: Vec<f64>,
    rhs: Vec<f64>,
    sides: Vec<OneSided>,
    infeasible: bool,
}

#[derive(Debug, Clone, PartialEq)]
struct ConstraintKey {
    a_eq: DMatrix<f64>,
    b_eq: DVector<f64>,
    a_in: DMatrix<f64>,
    lb_in: DVector<f64>,
    ub_in: DVector<f64>,
    lb: DVector<f64>,
    ub: DVector<f64>,
}

impl ConstraintKey {
    fn matches(&self, p: &QpProblem) -> bool {
        self.a_eq == p.a_eq
            && self.b_eq == p.b_eq
            && self.a_in == p.a_in
            && self.lb_in == p.lb_in
            && self.ub_in == p.ub_in
            && self.lb == p.lb
            && self.ub == p.ub
    }
}

const FEAS_TOL: f64 = 1e-9;

#[derive(Default)]
struct ReducedRows {
    rows: Vec<f64>,
    rhs: Vec<f64>,
    sides: Vec<OneSided>,
    infeasible: bool,
}

impl ReducedRows {
    /// Add the finite sides of `lo <= a'x <= hi` as unit rows `c' y >= d`.
    fn push(&mut self, z: &DMatrix<f64>, a: &DVector<f64>, ax_p: f64, (lo, hi): (f64, f64), source: Source) {
        let az = z.transpose() * a;
        let norm = az.norm();
        let tiny = 1e-11 * a.amax().max(1.0);
        for (upper, bound) in [(false, lo), (true, hi)] {
            if !bound.is_finite() {
                continue;
            }
            let sign = if upper { -1.0 } else { 1.0 };
            let d = sign * (bound - ax_p);
            if norm <= tiny {
                // constant in the null space: feasible or not, never active
                if d > FEAS_TOL * (1.0 + bound.abs()) {
                    self.infeasible = true;
                }
                continue;
            }
            self.rows.extend(az.iter().map(|v| sign * v / norm));
            self.rhs.push(d / norm);
            self.sides.push(OneSided { source, upper, norm });
        }
    }
}

impl Reduction {
    fn build(p: &QpProblem) -> Reduction {
        let n = p.n();
        // Collect equality rows.
        let mut eq_rows: Vec<Vec<f64>> = Vec::new();
        let mut eq_rhs = Vec::new();
        let mut eq_origin = Vec::new();
        for i in 0..p.a_eq.nrows() {
            eq_rows.push(p.a_eq.row(i).iter().copied().collect());
            eq_rhs.push(p.b_eq[i]);
            eq_origin.push(Source::Eq(i));
        }
        for i in 0..p.a_in.nrows() {
            if p.lb_in[i] == p.ub_in[i] {
                eq_rows.push(p.a_in.row(i).iter().copied().collect());
                eq_rhs.push(p.lb_in[i]);
                eq_origin.push(Source::Row(i));
            }
        }
        for j in 0..n {
            if p.lb[j] == p.ub[j] {
                let mut r = vec![0.0; n];
                r[j] = 1.0;
                eq_rows.push(r);
                eq_rhs.push(p.lb[j]);
                eq_origin.push(Source::Bound(j));
            }
        }
        let m_e = eq_rows.len();
        let rows_pad = m_e.max(n);
        let mut e = DMatrix::<f64>::zeros(rows_pad, n);
        for (i, r) in eq_rows.iter().enumerate() {
            for j in 0..n {
                e[(i, j)] = r[j];
            }
        }
        let e_rhs = DVector::from_vec(eq_rhs);

        let (z, u_r, s_r, v_r) = if m_e == 0 || n == 0 {
            (
                DMatrix::identity(n, n),
                DMatrix::zeros(m_e, 0),
                DVector::zeros(0),
                DMatrix::zeros(n, 0),
            )
        } else {
            let svd = e.clone().svd(true, true);
            let u = svd.u.expect("requested U");
            let vt = svd.v_t.expect("requested V'");
            let sv = &svd.singular_values;
            let smax = sv.max();
            let thresh = smax * (rows_pad as f64) * f64::EPSILON * 10.0;
            let mut range: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] > thresh).collect();
            range.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]).then(a.cmp(&b)));
            let null: Vec<usize> = (0..vt.nrows()).filter(|i| !range.contains(i)).collect();
            let mut z = DMatrix::zeros(n, null.len());
            for (c, &i) in null.iter().enumerate() {
                for j in 0..n {
                    z[(j, c)] = vt[(i, j)];
                }
            }
            let r = range.len();
            let mut u_r = DMatrix::zeros(m_e, r);
            let mut v_r = DMatrix::zeros(n, r);
            let mut s_r = DVector::zeros(r);
            for (c, &i) in range.iter().enumerate() {
                s_r[c] = sv[i];
                for row in 0..m_e {
                    u_r[(row, c)] = u[(row, i)];
                }
                for j in 0..n {
                    v_r[(j, c)] = vt[(i, j)];
                }
            }
            (z, u_r, s_r, v_r)
        };
        // x_p = V S^-1 U' e
        let mut xp = DVector::zeros(n);
        if s_r.len() > 0 {
            let mut coef = u_r.transpose() * &e_rhs;
            for (c, s) in coef.iter_mut().zip(s_r.iter()) {
                *c /= s;
            }
            xp = &v_r * coef;
        }
        let mut infeasible = false;
        if m_e > 0 {
            let e_real = e.rows(0, m_e);
            let res = (&e_real * &xp - &e_rhs).amax();
            let scale = 1.0 + e_rhs.amax() + e_real.amax() * xp.amax();
            if res > FEAS_TOL * scale {
                infeasible = true;
            }
        }

        // One-sided inequalities in reduced coordinates.
        let k = z.ncols();
        let mut ineq = ReducedRows::default();
        for i in 0..p.a_in.nrows() {
            if p.lb_in[i] == p.ub_in[i] {
                continue;
            }
            let a: DVector<f64> = p.a_in.row(i).transpose();
            let ax_p = a.dot(&xp);
            ineq.push(&z, &a, ax_p, (p.lb_in[i], p.ub_in[i]), Source::Row(i));
        }
        for j in 0..n {
            if p.lb[j] == p.ub[j] {
                continue;
            }
            let mut a = DVector::zeros(n);
            a[j] = 1.0;
            ineq.push(&z, &a, xp[j], (p.lb[j], p.ub[j]), Source::Bound(j));
        }
        infeasible |= ineq.infeasible;
        let ReducedRows { rows, rhs, sides, .. } = ineq;
        debug_assert_eq!(rows.len(), rhs.len() * k);

        Reduction {
            key: ConstraintKey {
                a_eq: p.a_eq.clone(),
                b_eq: p.b_eq.clone(),
                a_in: p.a_in.clone(),
                lb_in: p.lb_in.clone(),
                ub_in: p.ub_in.clone(),
                lb: p.lb.clone(),
                ub: p.ub.clone(),
            },
            z,
            xp,
            u_r,
            s_r,
            v_r,
            eq_origin,
            n_eq: p.a_eq.nrows(),
            rows,
            rhs,
            sides,
            infeasible,
        }
    }
}

/// Reduced Hessian and its factorization, cached while `H` is unchanged.
#[derive(Debug, Clone)]
struct Curvature {
    h: DMatrix<f64>,
    /// Cholesky factor of `g` (plus `rho I` when `rho > 0`).
    l: DMatrix<f64>,
    rho: f64,
}

impl Curvature {
    fn build(h: &DMatrix<f64>, z: &DMatrix<f64>) -> Curvature {
        let hz = h * z;
        let mut g = z.transpose() * hz;
        let k = g.nrows();
        for i in 0..k {
            for j in 0..i {
                let v = 0.5 * (g[(i, j)] + g[(j, i)]);
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        let gmax = (0..k).map(|i| g[(i, i)].abs()).fold(0.0, f64::max);
        if let Some(ch) = g.clone().cholesky() {
            let l = ch.l();
            let dmin = (0..k).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
            if k == 0 || dmin > 1e-13 * gmax.max(f64::MIN_POSITIVE) {
                return Curvature { h: h.clone(), l, rho: 0.0 };
            }
        }
        let rho = 1e-7 * gmax.max(1.0);
        let mut gr = g.clone();
        for i in 0..k {
            gr[(i, i)] += rho;
        }
        let l = gr.cholesky().map(|c| c.l()).unwrap_or_else(|| DMatrix::identity(k, k) * rho.sqrt());
        Curvature { h: h.clone(), l, rho }
    }
}

/// QP solver that caches the equality elimination and reduced Hessian
/// between calls with matching data. Results do not depend on the cache.
#[derive(Debug, Clone, Default)]
pub struct QpSolver {
    reduction: Option<Reduction>,
    curvature: Option<Curvature>,
}

const MAX_PROX_ITERS: usize = 200;

impl QpSolver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Solve `p`; `warm` (a previous solution of a problem with the same
    /// constraints) seeds the active set.
    pub fn solve(
        &mut self,
        p: &QpProblem,
        tol: f64,
        warm: Option<&QpSolution>,
    ) -> Result<QpSolution, ContractError> {
        if !(tol > 0.0) {
            return Err(ContractError::Invalid(format!("tolerance must be positive, got {tol}")));
        }
        p.check()?;
        let n = p.n();
        if !self.reduction.as_ref().is_some_and(|r| r.key.matches(p)) {
            self.reduction = Some(Reduction::build(p));
            self.curvature = None;
        }
        let red = self.reduction.as_ref().expect("built above");
        if !self.curvature.as_ref().is_some_and(|c| c.h == p.h) {
            self.curvature = Some(Curvature::build(&p.h, &red.z));
        }
        let curv = self.curvature.as_ref().expect("built above");

        if red.infeasible {
            return Ok(infeasible_solution(p, red.xp.clone()));
        }
        let k = red.z.ncols();
        // linear term in reduced coordinates: Z'(H x_p + g)
        let lin = red.z.transpose() * (&p.h * &red.xp + &p.g);
        let cons = Constraints {
            rows: &red.rows,
            rhs: &red.rhs,
            k,
        };
        let warm_idx: Vec<usize> = warm
            .map(|w| {
                w.active
                    .iter()
                    .filter_map(|a| {
                        red.sides.iter().position(|s| match (s.source, a) {
                            (Source::Row(i), ActiveSide::Row(j, up)) => i == *j && s.upper == *up,
                            (Source::Bound(i), ActiveSide::Bound(j, up)) => i == *j && s.upper == *up,
                            _ => false,
                        })
                    })
                    .collect()
            })
            .unwrap_or_default();
        let max_iter = 20 * (red.rhs.len() + k) + 100;
        let viol_tol = 1e-11;

        let mut total_iters = 0;
        let (y, active, outcome) = if curv.rho == 0.0 {
            let res = dual_active_set::solve(&curv.l, &lin, &cons, &warm_idx, viol_tol, max_iter);
            total_iters += res.iterations;
            (res.y, res.active, res.outcome)
        } else {
            // proximal point: min f(y) + rho/2 |y - y_c|^2, re-centred until fixed
            let mut center = DVector::zeros(k);
            let mut warm_set = warm_idx.clone();
            let mut last = None;
            for it in 0..MAX_PROX_ITERS {
                let shifted = &lin - &center * curv.rho;
                let res = dual_active_set::solve(&curv.l, &shifted, &cons, &warm_set, viol_tol, max_iter);
                total_iters += res.iterations;
                if res.outcome != GiOutcome::Optimal {
                    last = Some((res.y, res.active, res.outcome));
                    break;
                }
                let step = (&res.y - &center).amax();
                let done = step <= 1e-13 * (1.0 + res.y.amax()) || it + 1 == MAX_PROX_ITERS;
                warm_set = res.active.iter().map(|a| a.0).collect();
                center = res.y.clone();
                if done {
                    let outcome = if step <= 1e-13 * (1.0 + res.y.amax()) {
                        GiOutcome::Optimal
                    } else {
                        GiOutcome::IterationLimit
                    };
                    last = Some((res.y, res.active, outcome));
                    break;
                }
                // exit early once the unregularized KKT conditions hold
                let x = &red.xp + &red.z * &res.y;
                let sol = assemble(p, red, x, &res.active, QpStatus::Optimal, 0);
                if let Ok(r) = kkt_residuals(p, &sol) {
                    if r.relative() <= tol * 1e-2 {
                        last = Some((res.y, res.active, GiOutcome::Optimal));
                        break;
                    }
                }
            }
            last.expect("at least one proximal iteration")
        };

        let mut x = if k > 0 { &red.xp + &red.z * &y } else { red.xp.clone() };
        for j in 0..n {
            if p.lb[j] == p.ub[j] {
                x[j] = p.lb[j];
            }
        }
        let status = match outcome {
            GiOutcome::Optimal => QpStatus::Optimal,
            GiOutcome::Infeasible => QpStatus::Infeasible,
            GiOutcome::IterationLimit => QpStatus::IterationLimit,
        };
        if status == QpStatus::Infeasible {
            let mut s = infeasible_solution(p, x);
            s.iterations = total_iters;
            return Ok(s);
        }
        let mut sol = assemble(p, red, x, &active, status, total_iters);
        let res = kkt_residuals(p, &sol)?;
        sol.kkt_residual = res.relative();
        if sol.status == QpStatus::Optimal && !(sol.kkt_residual <= tol) {
            sol.status = QpStatus::NumericalFailure;
        }
        debug_assert_eq!(sol.x.len(), n);
        Ok(sol)
    }
}

fn infeasible_solution(p: &QpProblem, x: DVector<f64>) -> QpSolution {
    let mut s = QpSolution {
        x,
        y_eq: DVector::zeros(p.b_eq.len()),
        z_in: DVector::zeros(p.lb_in.len()),
        z_bound: DVector::zeros(p.n()),
        status: QpStatus::Infeasible,
        kkt_residual: f64::INFINITY,
        iterations: 0,
        active: Vec::new(),
    };
    if let Ok(r) = kkt_residuals(p, &s) {
        s.kkt_residual = r.feasibility.max(f64::MIN_POSITIVE);
    }
    s
}

/// Map reduced-space multipliers back to the original constraints and
/// recover the equality multipliers by least squares.
fn assemble(
    p: &QpProblem,
    red: &Reduction,
    x: DVector<f64>,
    active: &[(usize, f64)],
    status: QpStatus,
    iterations: usize,
) -> QpSolution {
    let n = p.n();
    let mut z_in = DVector::zeros(p.lb_in.len());
    let mut z_bound = DVector::zeros(n);
    let mut sides = Vec::with_capacity(active.len());
    for &(idx, u) in active {
        let s = &red.sides[idx];
        let val = if s.upper { -u / s.norm } else { u / s.norm };
        match s.source {
            Source::Row(i) => {
                z_in[i] += val;
                sides.push(ActiveSide::Row(i, s.upper));
            }
            Source::Bound(j) => {
                z_bound[j] += val;
                sides.push(ActiveSide::Bound(j, s.upper));
            }
            Source::Eq(_) => unreachable!("equality rows are eliminated"),
        }
    }
    // E' w = H x + g - A_in' z_in - z_bound
    let r = &p.h * &x + &p.g - p.a_in.transpose() * &z_in - &z_bound;
    let mut y_eq = DVector::zeros(p.b_eq.len());
    if red.s_r.len() > 0 {
        let mut coef = red.v_r.transpose() * &r;
        for (c, s) in coef.iter_mut().zip(red.s_r.iter()) {
            *c /= s;
        }
        let w = &red.u_r * coef;
        for (row, origin) in red.eq_origin.iter().enumerate() {
            match *origin {
                Source::Eq(i) => y_eq[i] = w[row],
                Source::Row(i) => z_in[i] += w[row],
                Source::Bound(j) => z_bound[j] += w[row],
            }
        }
    }
    debug_assert!(red.n_eq == p.b_eq.len());
    QpSolution {
        x,
        y_eq,
        z_in,
        z_bound,
        status,
        kkt_residual: 0.0,
        iterations,
        active: sides,
    }
}

#[cfg(test)]
mod tests;
