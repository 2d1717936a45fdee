use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::params::{AlgorithmKind, AlgorithmParams};
use super::steps::{
    admm_coordinator, admm_multiplier_update, admm_penalty, app_multiplier_update, app_penalty_sum,
    atc_coordinator, atc_multiplier_and_beta_update, atc_penalty, solve_local, Penalty,
};
use crate::comms::{transmit_message, ChannelModel, LinkState};
use crate::error::ContractError;
use crate::opf::solve_centralized;
use crate::partition::{assemble_global, consistency_mismatch, PartitionedModel, RegionSolution};
use crate::qp::{QpProblem, QpSolution, QpSolver, QpStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    IterationLimit,
    SubproblemFailure,
    /// ATC stopped because its penalty grew past the configured limit.
    PenaltyLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// Mismatch of the true (pre-channel) shared values.
    pub mismatch: f64,
    /// Mismatch as seen by the regions from received values.
    pub perceived_mismatch: f64,
    /// Generation cost of each region, penalties excluded.
    pub region_objectives: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: AlgorithmParams,
    pub channel: ChannelModel,
    pub seed: u64,
    pub status: RunStatus,
    pub iterations: usize,
    pub trace: Vec<IterationRecord>,
    /// Assembled generation cost of the final iterate.
    pub objective: f64,
    pub central_objective: f64,
    pub relative_gap: f64,
    pub final_mismatch: f64,
    pub final_perceived_mismatch: f64,
    /// Final ATC penalty weight.
    pub final_beta: Option<f64>,
    /// Some local problem has a generator with a linear cost, so its
    /// optimum need not be unique.
    pub degenerate_costs: bool,
}

impl RunRecord {
    pub fn converged(&self) -> bool {
        self.status == RunStatus::Converged
    }

    /// Converged within the cap with relative gap below `gap_limit`.
    pub fn success(&self, gap_limit: f64) -> bool {
        self.converged() && self.relative_gap < gap_limit
    }
}

/// One region's copy of one shared angle and the regions it exchanges with.
#[derive(Debug, Clone)]
struct Slot {
    local: usize,
    /// `(link index into this region, position in that link's payload)` for
    /// every other region holding a copy.
    peers: Vec<(usize, usize)>,
    /// Subset of `peers` forming (owner, other) pairs with this copy.
    pairs: Vec<usize>,
}

struct RegionState {
    base: QpProblem,
    work: QpProblem,
    solver: QpSolver,
    last: Option<QpSolution>,
    x: DVector<f64>,
    slots: Vec<Slot>,
    locals: Vec<usize>,
    theta_c: Vec<f64>,
    /// ADMM/ATC: one multiplier per slot.
    lambda: Vec<f64>,
    /// APP: one multiplier per slot and pair.
    pair_lambda: Vec<Vec<f64>>,
    /// Own shared values of the previous iteration (APP).
    own_prev: Vec<f64>,
    /// Received angle and multiplier per slot and peer.
    recv_theta: Vec<Vec<f64>>,
    recv_lambda: Vec<Vec<f64>>,
    n_angles: usize,
}

impl RegionState {
    fn penalties(&self, params: &AlgorithmParams, beta: f64) -> Vec<Penalty> {
        self.slots
            .iter()
            .enumerate()
            .map(|(s, slot)| match params.kind {
                AlgorithmKind::Admm => admm_penalty(self.theta_c[s], self.lambda[s], params.alpha),
                AlgorithmKind::Atc => atc_penalty(self.theta_c[s], self.lambda[s], beta),
                AlgorithmKind::App => {
                    let partners: Vec<(f64, f64)> = slot
                        .pairs
                        .iter()
                        .enumerate()
                        .map(|(j, &pk)| (self.recv_theta[s][pk], self.pair_lambda[s][j]))
                        .collect();
                    app_penalty_sum(self.own_prev[s], &partners, params.beta, params.gamma)
                }
            })
            .collect()
    }

    fn solve(&mut self, params: &AlgorithmParams, beta: f64) -> Result<QpStatus, ContractError> {
        let pens = self.penalties(params, beta);
        let sol = solve_local(&self.base, &mut self.work, &self.locals, &pens, &mut self.solver, self.last.as_ref())?;
        let status = sol.status;
        if status == QpStatus::Optimal {
            self.x.copy_from(&sol.x);
            self.last = Some(sol);
        }
        Ok(status)
    }

    fn shared(&self) -> Vec<f64> {
        self.locals.iter().map(|&l| self.x[l]).collect()
    }
}

/// Run with the centralized optimum computed on the spot.
pub fn run_distributed(
    model: &PartitionedModel,
    params: &AlgorithmParams,
    channel: &ChannelModel,
    seed: u64,
) -> Result<RunRecord, ContractError> {
    let central = solve_centralized(&model.case)?;
    if central.status != QpStatus::Optimal {
        return Err(ContractError::Invalid(format!("centralized problem is {:?}", central.status)));
    }
    run_distributed_with_reference(model, params, channel, seed, central.objective)
}

/// Run one distributed solve. `central_objective` is the reference cost for
/// the relative gap.
pub fn run_distributed_with_reference(
    model: &PartitionedModel,
    params: &AlgorithmParams,
    channel: &ChannelModel,
    seed: u64,
    central_objective: f64,
) -> Result<RunRecord, ContractError> {
    params.validate()?;
    channel.validate()?;
    if central_objective == 0.0 {
        return Err(ContractError::Invalid("centralized cost is zero".into()));
    }
    let nr = model.regions.len();
    let links = model.links();
    let commons: Vec<Vec<usize>> = links.iter().map(|&(a, b)| model.common(a, b)).collect();
    let symmetric = matches!(channel, ChannelModel::IntermittentLoss { symmetric: true, .. });
    let uses_aux = params.kind != AlgorithmKind::App;

    let mut link_states: Vec<LinkState> = links
        .iter()
        .enumerate()
        .map(|(k, &(a, b))| {
            let n = commons[k].len();
            let aux = if uses_aux { vec![params.multiplier_init; n] } else { vec![] };
            let mut l = LinkState::new(a, b, k as u64, seed, vec![0.0; n], aux);
            if symmetric {
                l.loss_id = links.iter().position(|&p| p == (a.min(b), a.max(b))).expect("both directions exist") as u64;
            }
            l
        })
        .collect();

    let mut states: Vec<RegionState> = model
        .regions
        .iter()
        .enumerate()
        .map(|(m, r)| {
            let base = r.local_problem();
            let mut x = DVector::zeros(base.n());
            for (g, gen) in r.fragment.generators.iter().enumerate() {
                x[r.n_angles() + g] = 0.5 * (gen.p_min + gen.p_max);
            }
            let slots: Vec<Slot> = r
                .shared
                .iter()
                .map(|ls| {
                    let cv = &model.consensus[ls.consensus];
                    let owner = cv.owner().0;
                    let mut peers = Vec::new();
                    let mut pairs = Vec::new();
                    for &(q, _) in &cv.copies {
                        if q == m {
                            continue;
                        }
                        let k = links.iter().position(|&p| p == (q, m)).expect("link exists");
                        let pos = commons[k].binary_search(&ls.consensus).expect("common variable");
                        if m == owner || q == owner {
                            pairs.push(peers.len());
                        }
                        peers.push((k, pos));
                    }
                    Slot { local: ls.local, peers, pairs }
                })
                .collect();
            let ns = slots.len();
            RegionState {
                work: base.clone(),
                base,
                solver: QpSolver::new(),
                last: None,
                x,
                locals: slots.iter().map(|s| s.local).collect(),
                theta_c: vec![0.0; ns],
                lambda: vec![params.multiplier_init; ns],
                pair_lambda: slots.iter().map(|s| vec![params.multiplier_init; s.pairs.len()]).collect(),
                own_prev: vec![0.0; ns],
                recv_theta: slots.iter().map(|s| vec![0.0; s.peers.len()]).collect(),
                recv_lambda: slots.iter().map(|s| vec![params.multiplier_init; s.peers.len()]).collect(),
                n_angles: r.n_angles(),
                slots,
            }
        })
        .collect();

    let degenerate_costs = model
        .regions
        .iter()
        .any(|r| r.fragment.generators.iter().any(|g| g.cost.c2 == 0.0));
    let region_cost = |m: usize, x: &DVector<f64>| -> f64 {
        let r = &model.regions[m];
        r.fragment
            .generators
            .iter()
            .enumerate()
            .map(|(g, gen)| gen.cost.eval(x[r.n_angles() + g]))
            .sum()
    };

    let mut beta = params.beta;
    let mut trace = Vec::new();
    let mut status = RunStatus::IterationLimit;
    for k in 0..params.max_iterations {
        // local solves
        let solved: Vec<Result<QpStatus, ContractError>> =
            states.par_iter_mut().map(|st| st.solve(params, beta)).collect();
        let mut failed = false;
        for s in solved {
            failed |= s? != QpStatus::Optimal;
        }
        if failed {
            status = RunStatus::SubproblemFailure;
            break;
        }

        // exchange
        let shared: Vec<Vec<f64>> = states.iter().map(|st| st.shared()).collect();
        let mut delivered = Vec::with_capacity(links.len());
        for (li, link) in link_states.iter_mut().enumerate() {
            let a = link.from;
            let slot_of = |c: usize| model.regions[a].shared.iter().position(|ls| ls.consensus == c).expect("shared");
            let idx: Vec<usize> = commons[li].iter().map(|&c| slot_of(c)).collect();
            let values: Vec<f64> = idx.iter().map(|&s| shared[a][s]).collect();
            let aux: Vec<f64> = if uses_aux { idx.iter().map(|&s| states[a].lambda[s]).collect() } else { vec![] };
            delivered.push(transmit_message(link, &values, &aux, channel, k as u64)?);
        }
        for st in states.iter_mut() {
            for (s, slot) in st.slots.iter().enumerate() {
                for (j, &(li, pos)) in slot.peers.iter().enumerate() {
                    st.recv_theta[s][j] = delivered[li].0[pos];
                    if uses_aux {
                        st.recv_lambda[s][j] = delivered[li].1[pos];
                    }
                }
            }
        }

        // coordinator and multiplier updates
        for (m, st) in states.iter_mut().enumerate() {
            let own = &shared[m];
            for s in 0..st.slots.len() {
                match params.kind {
                    AlgorithmKind::Admm | AlgorithmKind::Atc => {
                        let mut copies = vec![own[s]];
                        copies.extend_from_slice(&st.recv_theta[s]);
                        let mut lams = vec![st.lambda[s]];
                        lams.extend_from_slice(&st.recv_lambda[s]);
                        if params.kind == AlgorithmKind::Admm {
                            st.theta_c[s] = admm_coordinator(&copies, &lams, params.alpha);
                            st.lambda[s] = admm_multiplier_update(st.lambda[s], st.theta_c[s], own[s], params.alpha);
                        } else {
                            st.theta_c[s] = atc_coordinator(&copies, &lams, beta)?;
                            st.lambda[s] =
                                atc_multiplier_and_beta_update(st.lambda[s], st.theta_c[s], own[s], beta, params.alpha).0;
                        }
                    }
                    AlgorithmKind::App => {
                        for (j, &pk) in st.slots[s].pairs.iter().enumerate() {
                            st.pair_lambda[s][j] =
                                app_multiplier_update(st.pair_lambda[s][j], own[s], st.recv_theta[s][pk], params.alpha);
                        }
                        st.own_prev[s] = own[s];
                    }
                }
            }
        }
        if params.kind == AlgorithmKind::Atc {
            beta *= params.alpha;
        }

        // bookkeeping
        let angles: Vec<Vec<f64>> = states.iter().map(|st| st.x.rows(0, st.n_angles).iter().copied().collect()).collect();
        let mismatch = consistency_mismatch(model, &angles)?;
        let mut perceived = 0.0;
        for (m, st) in states.iter().enumerate() {
            for (s, slot) in st.slots.iter().enumerate() {
                for &pk in &slot.pairs {
                    let d = shared[m][s] - st.recv_theta[s][pk];
                    perceived += d * d;
                }
            }
        }
        trace.push(IterationRecord {
            mismatch,
            perceived_mismatch: (perceived / 2.0).sqrt(),
            region_objectives: (0..nr).map(|m| region_cost(m, &states[m].x)).collect(),
        });
        if mismatch <= params.tolerance {
            status = RunStatus::Converged;
            break;
        }
        if params.kind == AlgorithmKind::Atc && beta > params.beta_limit {
            status = RunStatus::PenaltyLimit;
            break;
        }
    }

    let solutions: Vec<RegionSolution> = states
        .iter()
        .zip(&model.regions)
        .map(|(st, r)| RegionSolution {
            theta: st.x.rows(0, st.n_angles).iter().copied().collect(),
            p: st.x.rows(st.n_angles, r.generators.len()).iter().copied().collect(),
            status: QpStatus::Optimal,
        })
        .collect();
    let global = assemble_global(model, &solutions)?;
    let angles: Vec<Vec<f64>> = solutions.iter().map(|s| s.theta.clone()).collect();
    let final_mismatch = consistency_mismatch(model, &angles)?;
    let final_perceived_mismatch = trace.last().map_or(final_mismatch, |t| t.perceived_mismatch);
    Ok(RunRecord {
        algorithm: *params,
        channel: *channel,
        seed,
        status,
        iterations: trace.len(),
        trace,
        objective: global.objective,
        central_objective,
        relative_gap: (global.objective - central_objective).abs() / central_objective.abs(),
        final_mismatch,
        final_perceived_mismatch,
        final_beta: (params.kind == AlgorithmKind::Atc).then_some(beta),
        degenerate_costs,
    })
}
