//! Goldfarb–Idnani dual active-set method for strictly convex QPs
//!
//! ```text
//!     minimize   1/2 y' G y + a' y
//!     subject to c_j' y >= d_j      j = 0..m
//! ```
//!
//! `G` is supplied through its Cholesky factor. The factorization `J = L^-T Q`
//! and the upper-triangular `R` are updated with Givens rotations as
//! constraints enter and leave the active set.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum GiOutcome {
    Optimal,
    Infeasible,
    IterationLimit,
}

pub(crate) struct GiResult {
    pub y: DVector<f64>,
    /// `(constraint index, multiplier >= 0)` for the final active set.
    pub active: Vec<(usize, f64)>,
    pub outcome: GiOutcome,
    pub iterations: usize,
}

pub(crate) struct Constraints<'a> {
    /// Row-major `m x k`, rows of unit norm.
    pub rows: &'a [f64],
    pub rhs: &'a [f64],
    pub k: usize,
}

impl Constraints<'_> {
    fn m(&self) -> usize {
        self.rhs.len()
    }

    fn row(&self, j: usize) -> &[f64] {
        &self.rows[j * self.k..(j + 1) * self.k]
    }

    fn slack(&self, j: usize, y: &[f64]) -> f64 {
        dot(self.row(j), y) - self.rhs[j]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct State {
    k: usize,
    /// column-major k x k
    j: Vec<f64>,
    /// column-major k x k, upper triangular in the leading iq x iq block
    r: Vec<f64>,
    r_norm: f64,
    active: Vec<usize>,
    u: Vec<f64>,
    y: Vec<f64>,
}

impl State {
    fn new(l: &DMatrix<f64>, a: &DVector<f64>) -> Self {
        let k = a.len();
        // J = L^-T, so that J J' = G^-1.
        let mut linv = DMatrix::<f64>::identity(k, k);
        l.solve_lower_triangular_mut(&mut linv);
        let jm = linv.transpose();
        let mut ginv_a = a.clone();
        // y0 = -G^-1 a = -J J' a
        let ja = jm.transpose() * &ginv_a;
        ginv_a = &jm * ja;
        State {
            k,
            j: jm.as_slice().to_vec(),
            r: vec![0.0; k * k],
            r_norm: 1.0,
            active: Vec::new(),
            u: Vec::new(),
            y: ginv_a.iter().map(|v| -v).collect(),
        }
    }

    fn jat(&self, row: usize, col: usize) -> f64 {
        self.j[col * self.k + row]
    }

    fn rat(&self, row: usize, col: usize) -> f64 {
        self.r[col * self.k + row]
    }

    /// d = J' n
    fn compute_d(&self, n: &[f64], d: &mut [f64]) {
        let k = self.k;
        for (i, di) in d.iter_mut().enumerate() {
            *di = dot(&self.j[i * k..(i + 1) * k], n);
        }
    }

    /// z = J[:, iq..] d[iq..]
    fn update_z(&self, d: &[f64], z: &mut [f64]) {
        let k = self.k;
        let iq = self.active.len();
        z.iter_mut().for_each(|v| *v = 0.0);
        for i in iq..k {
            let col = &self.j[i * k..(i + 1) * k];
            for (zr, c) in z.iter_mut().zip(col) {
                *zr += c * d[i];
            }
        }
    }

    /// r = R^-1 d[..iq]
    fn update_r(&self, d: &[f64], r: &mut [f64]) {
        let iq = self.active.len();
        for i in (0..iq).rev() {
            let mut sum = 0.0;
            for jj in i + 1..iq {
                sum += self.rat(i, jj) * r[jj];
            }
            r[i] = (d[i] - sum) / self.rat(i, i);
        }
    }

    fn add(&mut self, d: &mut [f64]) -> bool {
        let k = self.k;
        let iq = self.active.len();
        for jj in (iq + 1..k).rev() {
            let (mut cc, mut ss) = (d[jj - 1], d[jj]);
            let h = cc.hypot(ss);
            if h == 0.0 {
                continue;
            }
            d[jj] = 0.0;
            ss /= h;
            cc /= h;
            if cc < 0.0 {
                cc = -cc;
                ss = -ss;
                d[jj - 1] = -h;
            } else {
                d[jj - 1] = h;
            }
            let xny = ss / (1.0 + cc);
            for row in 0..k {
                let t1 = self.jat(row, jj - 1);
                let t2 = self.jat(row, jj);
                let new1 = t1 * cc + t2 * ss;
                self.j[(jj - 1) * k + row] = new1;
                self.j[jj * k + row] = xny * (t1 + new1) - t2;
            }
        }
        for row in 0..=iq {
            self.r[iq * k + row] = d[row];
        }
        let diag = d[iq].abs();
        if diag <= f64::EPSILON * 1e2 * self.r_norm {
            return false;
        }
        self.r_norm = self.r_norm.max(diag);
        true
    }

    /// Remove active constraint at position `pos`, restoring R to upper
    /// triangular form.
    fn drop_at(&mut self, pos: usize) {
        let k = self.k;
        let iq = self.active.len();
        self.active.remove(pos);
        self.u.remove(pos);
        for c in pos..iq - 1 {
            for row in 0..k {
                self.r[c * k + row] = self.r[(c + 1) * k + row];
            }
        }
        for row in 0..k {
            self.r[(iq - 1) * k + row] = 0.0;
        }
        let iq = iq - 1;
        for jj in pos..iq {
            let (mut cc, mut ss) = (self.rat(jj, jj), self.rat(jj + 1, jj));
            let h = cc.hypot(ss);
            if h == 0.0 {
                continue;
            }
            cc /= h;
            ss /= h;
            self.r[jj * k + jj + 1] = 0.0;
            if cc < 0.0 {
                self.r[jj * k + jj] = -h;
                cc = -cc;
                ss = -ss;
            } else {
                self.r[jj * k + jj] = h;
            }
            let xny = ss / (1.0 + cc);
            for col in jj + 1..iq {
                let t1 = self.rat(jj, col);
                let t2 = self.rat(jj + 1, col);
                let new1 = t1 * cc + t2 * ss;
                self.r[col * k + jj] = new1;
                self.r[col * k + jj + 1] = xny * (t1 + new1) - t2;
            }
            for row in 0..k {
                let t1 = self.jat(row, jj);
                let t2 = self.jat(row, jj + 1);
                let new1 = t1 * cc + t2 * ss;
                self.j[jj * k + row] = new1;
                self.j[(jj + 1) * k + row] = xny * (new1 + t1) - t2;
            }
        }
    }
}

/// Solve with the dual active-set method. `warm` lists constraints believed
/// active at the optimum; they are activated first and the guess is discarded
/// if it is not dual feasible.
pub(crate) fn solve(
    l: &DMatrix<f64>,
    a: &DVector<f64>,
    cons: &Constraints<'_>,
    warm: &[usize],
    viol_tol: f64,
    max_iter: usize,
) -> GiResult {
    if !warm.is_empty() {
        if let Some(st) = warm_state(l, a, cons, warm) {
            return run(st, cons, viol_tol, max_iter);
        }
    }
    run(State::new(l, a), cons, viol_tol, max_iter)
}

fn warm_state(
    l: &DMatrix<f64>,
    a: &DVector<f64>,
    cons: &Constraints<'_>,
    warm: &[usize],
) -> Option<State> {
    let k = cons.k;
    let mut st = State::new(l, a);
    let (mut d, mut z, mut r) = (vec![0.0; k], vec![0.0; k], vec![0.0; k]);
    for &c in warm {
        if c >= cons.m() || st.active.contains(&c) || st.active.len() >= k {
            return None;
        }
        let np = cons.row(c);
        st.compute_d(np, &mut d);
        st.update_z(&d, &mut z);
        st.update_r(&d, &mut r);
        let zn = dot(&z, np);
        let dd = dot(&d, &d);
        if !(zn > 1e-24 * dd) {
            return None;
        }
        let t = -cons.slack(c, &st.y) / zn;
        for (yi, zi) in st.y.iter_mut().zip(&z) {
            *yi += t * zi;
        }
        let iq = st.active.len();
        for i in 0..iq {
            st.u[i] -= t * r[i];
        }
        if !st.add(&mut d) {
            return None;
        }
        st.active.push(c);
        st.u.push(t);
    }
    if st.u.iter().any(|&u| u < 0.0) {
        return None;
    }
    Some(st)
}

fn run(mut st: State, cons: &Constraints<'_>, viol_tol: f64, max_iter: usize) -> GiResult {
    let k = st.k;
    let m = cons.m();
    let (mut d, mut z, mut r) = (vec![0.0; k], vec![0.0; k], vec![0.0; k]);
    let mut excluded = vec![false; m];
    let mut iterations = 0;
    let finish = |st: State, outcome, iterations| GiResult {
        y: DVector::from_vec(st.y),
        active: st.active.iter().copied().zip(st.u.iter().copied()).collect(),
        outcome,
        iterations,
    };
    loop {
        iterations += 1;
        if iterations > max_iter {
            return finish(st, GiOutcome::IterationLimit, iterations);
        }
        // most violated inactive constraint
        let mut worst = None;
        let mut worst_s = 0.0;
        for j in 0..m {
            if excluded[j] || st.active.contains(&j) {
                continue;
            }
            let s = cons.slack(j, &st.y);
            if s < -viol_tol * (1.0 + cons.rhs[j].abs()) && s < worst_s {
                worst_s = s;
                worst = Some(j);
            }
        }
        let Some(p) = worst else {
            return finish(st, GiOutcome::Optimal, iterations);
        };
        let np = cons.row(p).to_vec();
        let mut u_p = 0.0;
        let mut s_p = worst_s;
        let saved = (st.j.clone(), st.r.clone(), st.r_norm, st.active.clone(), st.u.clone(), st.y.clone());
        loop {
            iterations += 1;
            if iterations > max_iter {
                return finish(st, GiOutcome::IterationLimit, iterations);
            }
            st.compute_d(&np, &mut d);
            st.update_z(&d, &mut z);
            st.update_r(&d, &mut r);
            let iq = st.active.len();
            // partial step: largest dual step keeping active multipliers >= 0
            let mut t1 = f64::INFINITY;
            let mut drop_pos = None;
            for i in 0..iq {
                if r[i] > 0.0 {
                    let t = st.u[i] / r[i];
                    if t < t1 {
                        t1 = t;
                        drop_pos = Some(i);
                    }
                }
            }
            let zn = dot(&z, &np);
            let dd = dot(&d, &d);
            let t2 = if zn > 1e-24 * dd { -s_p / zn } else { f64::INFINITY };
            let t = t1.min(t2);
            if !t.is_finite() {
                return finish(st, GiOutcome::Infeasible, iterations);
            }
            if !t2.is_finite() {
                // dual step only
                for i in 0..iq {
                    st.u[i] -= t * r[i];
                }
                u_p += t;
                st.drop_at(drop_pos.expect("finite t1 has a blocking constraint"));
                continue;
            }
            for (yi, zi) in st.y.iter_mut().zip(&z) {
                *yi += t * zi;
            }
            for i in 0..iq {
                st.u[i] -= t * r[i];
            }
            u_p += t;
            if t2 <= t1 {
                if st.add(&mut d) {
                    st.active.push(p);
                    st.u.push(u_p);
                } else {
                    // numerically dependent: restore and never try p again
                    excluded[p] = true;
                    st.j = saved.0;
                    st.r = saved.1;
                    st.r_norm = saved.2;
                    st.active = saved.3;
                    st.u = saved.4;
                    st.y = saved.5;
                }
                break;
            }
            st.drop_at(drop_pos.expect("partial step has a blocking constraint"));
            s_p = cons.slack(p, &st.y);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chol(g: &DMatrix<f64>) -> DMatrix<f64> {
        g.clone().cholesky().unwrap().l()
    }

    #[test]
    fn unconstrained_minimum() {
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]);
        let a = DVector::from_vec(vec![-2.0, -4.0]);
        let cons = Constraints { rows: &[], rhs: &[], k: 2 };
        let res = solve(&chol(&g), &a, &cons, &[], 1e-12, 100);
        assert_eq!(res.outcome, GiOutcome::Optimal);
        assert!((res.y[0] - 1.0).abs() < 1e-14 && (res.y[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn single_active_constraint() {
        // min 1/2 (y0^2 + y1^2) + y0  s.t. (y0 + 2 y1)/sqrt5 >= 1/sqrt5
        let s5 = 5f64.sqrt();
        let g = DMatrix::identity(2, 2);
        let a = DVector::from_vec(vec![1.0, 0.0]);
        let rows = [1.0 / s5, 2.0 / s5];
        let rhs = [1.0 / s5];
        let cons = Constraints { rows: &rows, rhs: &rhs, k: 2 };
        let res = solve(&chol(&g), &a, &cons, &[], 1e-12, 100);
        assert_eq!(res.outcome, GiOutcome::Optimal);
        assert!((res.y[0] + 0.6).abs() < 1e-12);
        assert!((res.y[1] - 0.8).abs() < 1e-12);
        // warm start from the known active set reaches the same point
        let warm = solve(&chol(&g), &a, &cons, &[0], 1e-12, 100);
        assert!((warm.y[0] + 0.6).abs() < 1e-12);
        assert_eq!(warm.active.len(), 1);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let g = DMatrix::identity(1, 1);
        let a = DVector::from_vec(vec![0.0]);
        let rows = [1.0, -1.0];
        let rhs = [2.0, -1.0]; // y >= 2 and y <= 1
        let cons = Constraints { rows: &rows, rhs: &rhs, k: 1 };
        let res = solve(&chol(&g), &a, &cons, &[], 1e-12, 100);
        assert_eq!(res.outcome, GiOutcome::Infeasible);
    }
}
