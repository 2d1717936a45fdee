//! Regional decomposition by tie-line duplication.
//!
//! Every tie line places copies of both of its endpoint angles in both
//! adjacent regions. A region owns its own buses (with their demand and
//! generators) and holds angle-only phantom copies of the far ends of its
//! tie lines. Consensus requires every copy of a bus angle to agree with the
//! owner's copy.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::case::{BusId, NetworkCase};
use crate::error::{ContractError, PartitionError};
use crate::opf::{flow_rows, objective_cost, stamp_balance, OpfSolution};
use crate::qp::{QpProblem, QpStatus};

pub type RegionId = u32;

/// Total map from bus id to region id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionAssignment {
    map: BTreeMap<BusId, RegionId>,
}

impl RegionAssignment {
    pub fn new(map: BTreeMap<BusId, RegionId>) -> Self {
        RegionAssignment { map }
    }

    /// Split the sorted bus ids into `k` contiguous blocks of near-equal size.
    pub fn contiguous(case: &NetworkCase, k: u32) -> Self {
        let mut ids: Vec<BusId> = case.buses.iter().map(|b| b.id).collect();
        ids.sort_unstable();
        let n = ids.len();
        let map = ids
            .iter()
            .enumerate()
            .map(|(i, &id)| (id, 1 + ((i * k as usize) / n.max(1)) as RegionId))
            .collect();
        RegionAssignment { map }
    }

    pub fn region_of(&self, bus: BusId) -> Option<RegionId> {
        self.map.get(&bus).copied()
    }

    /// Distinct region ids in increasing order.
    pub fn regions(&self) -> Vec<RegionId> {
        self.map.values().copied().collect::<BTreeSet<_>>().into_iter().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (BusId, RegionId)> + '_ {
        self.map.iter().map(|(&b, &r)| (b, r))
    }

    /// Parse `bus region` pairs, one per line; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, PartitionError> {
        let mut map = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |message: String| PartitionError::Syntax { line: k + 1, message };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(syntax(format!("expected `bus region`, found {} fields", fields.len())));
            }
            let bus: BusId = fields[0]
                .parse()
                .map_err(|_| syntax(format!("invalid bus id `{}`", fields[0])))?;
            let region: RegionId = fields[1]
                .parse()
                .map_err(|_| syntax(format!("invalid region id `{}`", fields[1])))?;
            if map.insert(bus, region).is_some() {
                return Err(PartitionError::Duplicate(bus));
            }
        }
        Ok(RegionAssignment { map })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, PartitionError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| PartitionError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# bus region\n");
        for (b, r) in &self.map {
            let _ = writeln!(s, "{b} {r}");
        }
        s
    }

    /// Check totality against `case`, the region count and that every
    /// region has at least one tie line.
    pub fn validate(&self, case: &NetworkCase) -> Result<(), PartitionError> {
        let ids: BTreeSet<BusId> = case.buses.iter().map(|b| b.id).collect();
        if let Some(&b) = self.map.keys().find(|b| !ids.contains(b)) {
            return Err(PartitionError::UnknownBus(b));
        }
        if let Some(&b) = ids.iter().find(|b| !self.map.contains_key(b)) {
            return Err(PartitionError::Unassigned(b));
        }
        let regions = self.regions();
        if regions.len() < 2 {
            return Err(PartitionError::TooFewRegions(regions.len()));
        }
        let mut tied = BTreeSet::new();
        for (_, br) in case.in_service_branches() {
            let (a, b) = (self.map[&br.from], self.map[&br.to]);
            if a != b {
                tied.insert(a);
                tied.insert(b);
            }
        }
        if let Some(&r) = regions.iter().find(|r| !tied.contains(r)) {
            return Err(PartitionError::IsolatedRegion(r));
        }
        Ok(())
    }
}

/// One endpoint of one tie line, seen from both adjacent regions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharedVariable {
    /// Global branch index of the tie line.
    pub tie_line: usize,
    pub bus: BusId,
    /// Region index (into [`PartitionedModel::regions`]) owning `bus`.
    pub owner: usize,
    pub owner_local: usize,
    /// The other region adjacent to the tie line.
    pub other: usize,
    pub other_local: usize,
}

/// All copies of one bus angle that must agree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusVar {
    pub bus: BusId,
    /// `(region index, local angle index)`; the owner's copy comes first.
    pub copies: Vec<(usize, usize)>,
}

impl ConsensusVar {
    pub fn owner(&self) -> (usize, usize) {
        self.copies[0]
    }
}

/// A region's shared angle: which consensus variable it copies and where
/// the copy sits in the region's angle vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalShared {
    pub consensus: usize,
    pub local: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub id: RegionId,
    /// Owned buses first, then phantom buses (zero demand); generators at
    /// owned buses; in-service internal lines followed by tie lines.
    pub fragment: NetworkCase,
    pub n_owned: usize,
    /// Global generator index of each fragment generator.
    pub generators: Vec<usize>,
    /// Global branch index of each fragment branch.
    pub branches: Vec<usize>,
    pub n_tie_lines: usize,
    /// Whether this region pins the reference angle.
    pub has_ref: bool,
    /// Shared angles in increasing consensus order.
    pub shared: Vec<LocalShared>,
}

impl Region {
    pub fn n_angles(&self) -> usize {
        self.fragment.buses.len()
    }

    pub fn n_vars(&self) -> usize {
        self.n_angles() + self.fragment.generators.len()
    }

    pub fn tie_lines(&self) -> &[usize] {
        &self.branches[self.branches.len() - self.n_tie_lines..]
    }

    /// Local DC-OPF restricted to the region: balance rows for owned buses,
    /// flow rows for every limited internal and tie line, local generator
    /// bounds, and the reference pin when present. Variables are the
    /// fragment angles followed by the local generator outputs.
    pub fn local_problem(&self) -> QpProblem {
        let f = &self.fragment;
        let na = self.n_angles();
        let ng = f.generators.len();
        let n = na + ng;
        let mut p = QpProblem::new(n);
        for (g, gen) in f.generators.iter().enumerate() {
            p.h[(na + g, na + g)] = 2.0 * gen.cost.c2;
            p.g[na + g] = gen.cost.c1;
            p.lb[na + g] = gen.p_min;
            p.ub[na + g] = gen.p_max;
        }
        let all: Vec<usize> = (0..f.branches.len()).collect();
        let rows: Vec<Option<usize>> = (0..na).map(|b| (b < self.n_owned).then_some(b)).collect();
        let cols: Vec<Option<usize>> = (0..na).map(Some).collect();
        let gens: Vec<(usize, usize)> = (0..ng).map(|g| (g, na + g)).collect();
        p.a_eq = DMatrix::zeros(self.n_owned, n);
        stamp_balance(f, &all, &rows, &cols, &gens, &mut p.a_eq);
        p.b_eq = DVector::from_iterator(self.n_owned, f.buses[..self.n_owned].iter().map(|b| b.demand));
        (p.a_in, p.lb_in, p.ub_in) = flow_rows(f, &all, &cols, n);
        if let Some(r) = f.ref_bus() {
            p.lb[r] = 0.0;
            p.ub[r] = 0.0;
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionedModel {
    pub case: NetworkCase,
    pub regions: Vec<Region>,
    /// One entry per (tie line, endpoint).
    pub registry: Vec<SharedVariable>,
    /// Deduplicated shared angles, sorted by bus position in the case.
    pub consensus: Vec<ConsensusVar>,
    /// Index of the region holding the reference pin.
    pub reference_region: usize,
}

/// Primal result of one region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSolution {
    /// Angles in fragment bus order.
    pub theta: Vec<f64>,
    /// Outputs in fragment generator order.
    pub p: Vec<f64>,
    pub status: QpStatus,
}

/// Split `case` into regions according to `assign`.
pub fn decompose(case: &NetworkCase, assign: &RegionAssignment) -> Result<PartitionedModel, PartitionError> {
    assign.validate(case)?;
    let region_ids = assign.regions();
    let ridx: HashMap<RegionId, usize> = region_ids.iter().enumerate().map(|(k, &r)| (r, k)).collect();
    let bus_pos = case.bus_index_map();
    let region_of = |bus: BusId| ridx[&assign.region_of(bus).expect("validated")];

    let mut owned: Vec<Vec<usize>> = vec![Vec::new(); region_ids.len()];
    for (k, b) in case.buses.iter().enumerate() {
        owned[region_of(b.id)].push(k);
    }
    let mut internal: Vec<Vec<usize>> = vec![Vec::new(); region_ids.len()];
    let mut ties: Vec<Vec<usize>> = vec![Vec::new(); region_ids.len()];
    for (k, br) in case.in_service_branches() {
        let (a, b) = (region_of(br.from), region_of(br.to));
        if a == b {
            internal[a].push(k);
        } else {
            ties[a].push(k);
            ties[b].push(k);
        }
    }

    let mut regions = Vec::with_capacity(region_ids.len());
    let mut local_of: Vec<HashMap<BusId, usize>> = Vec::new();
    for (m, &id) in region_ids.iter().enumerate() {
        let mut buses: Vec<_> = owned[m].iter().map(|&k| case.buses[k].clone()).collect();
        let n_owned = buses.len();
        let mut phantoms = BTreeSet::new();
        for &k in &ties[m] {
            let br = &case.branches[k];
            for bus in [br.from, br.to] {
                if region_of(bus) != m {
                    phantoms.insert(bus_pos[&bus]);
                }
            }
        }
        for &k in &phantoms {
            let mut b = case.buses[k].clone();
            b.demand = 0.0;
            b.is_ref = false;
            buses.push(b);
        }
        let local: HashMap<BusId, usize> = buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
        let generators: Vec<usize> = (0..case.generators.len())
            .filter(|&g| region_of(case.generators[g].bus) == m)
            .collect();
        let branches: Vec<usize> = internal[m].iter().chain(&ties[m]).copied().collect();
        let has_ref = buses[..n_owned].iter().any(|b| b.is_ref);
        let fragment = NetworkCase {
            name: format!("{}-region-{id}", case.name),
            base_mva: case.base_mva,
            buses,
            generators: generators.iter().map(|&g| case.generators[g].clone()).collect(),
            branches: branches.iter().map(|&k| case.branches[k].clone()).collect(),
        };
        regions.push(Region {
            id,
            fragment,
            n_owned,
            generators,
            branches,
            n_tie_lines: ties[m].len(),
            has_ref,
            shared: Vec::new(),
        });
        local_of.push(local);
    }

    // registry: both endpoints of every tie line, in branch order
    let mut registry = Vec::new();
    let mut copies: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for (k, br) in case.in_service_branches() {
        let (a, b) = (region_of(br.from), region_of(br.to));
        if a == b {
            continue;
        }
        for bus in [br.from, br.to] {
            let owner = region_of(bus);
            let other = if owner == a { b } else { a };
            registry.push(SharedVariable {
                tie_line: k,
                bus,
                owner,
                owner_local: local_of[owner][&bus],
                other,
                other_local: local_of[other][&bus],
            });
            copies.entry(bus_pos[&bus]).or_default().insert(other);
        }
    }
    let mut consensus = Vec::with_capacity(copies.len());
    for (pos, others) in copies {
        let bus = case.buses[pos].id;
        let owner = region_of(bus);
        let mut list = vec![(owner, local_of[owner][&bus])];
        list.extend(others.iter().map(|&m| (m, local_of[m][&bus])));
        let c = consensus.len();
        for &(m, local) in &list {
            regions[m].shared.push(LocalShared { consensus: c, local });
        }
        consensus.push(ConsensusVar { bus, copies: list });
    }
    let reference_region = regions.iter().position(|r| r.has_ref).expect("validated case has a reference bus");

    Ok(PartitionedModel {
        case: case.clone(),
        regions,
        registry,
        consensus,
        reference_region,
    })
}

impl PartitionedModel {
    /// Ordered region pairs `(from, to)` that share at least one angle.
    pub fn links(&self) -> Vec<(usize, usize)> {
        let mut set = BTreeSet::new();
        for c in &self.consensus {
            for &(a, _) in &c.copies {
                for &(b, _) in &c.copies {
                    if a != b {
                        set.insert((a, b));
                    }
                }
            }
        }
        set.into_iter().collect()
    }

    /// Consensus variables region `a` and region `b` both hold, in
    /// increasing order. This fixes the payload layout of a message.
    pub fn common(&self, a: usize, b: usize) -> Vec<usize> {
        self.consensus
            .iter()
            .enumerate()
            .filter(|(_, c)| c.copies.iter().any(|x| x.0 == a) && c.copies.iter().any(|x| x.0 == b))
            .map(|(k, _)| k)
            .collect()
    }

    /// Number of (owner copy, other copy) pairs over which mismatch is
    /// measured.
    pub fn n_pairs(&self) -> usize {
        self.consensus.iter().map(|c| c.copies.len() - 1).sum()
    }

    fn check_angles(&self, region_angles: &[Vec<f64>]) -> Result<(), ContractError> {
        if region_angles.len() != self.regions.len() {
            return Err(ContractError::Dimension(format!(
                "{} angle vectors for {} regions",
                region_angles.len(),
                self.regions.len()
            )));
        }
        for (r, v) in self.regions.iter().zip(region_angles) {
            if v.len() != r.n_angles() {
                return Err(ContractError::Dimension(format!(
                    "region {} expects {} angles, got {}",
                    r.id,
                    r.n_angles(),
                    v.len()
                )));
            }
        }
        Ok(())
    }
}

/// l2 norm of `owner copy - other copy` over every shared bus and every
/// non-owning region that holds a copy of it.
pub fn consistency_mismatch(model: &PartitionedModel, region_angles: &[Vec<f64>]) -> Result<f64, ContractError> {
    model.check_angles(region_angles)?;
    let mut sum = 0.0;
    for c in &model.consensus {
        let (om, ol) = c.owner();
        let own = region_angles[om][ol];
        for &(m, l) in &c.copies[1..] {
            let d = own - region_angles[m][l];
            sum += d * d;
        }
    }
    Ok(sum.sqrt())
}

/// Global solution from regional ones: each bus angle from its owner, each
/// generator output from its region. The objective excludes penalty terms.
pub fn assemble_global(model: &PartitionedModel, solutions: &[RegionSolution]) -> Result<OpfSolution, ContractError> {
    if solutions.len() != model.regions.len() {
        return Err(ContractError::Invalid(format!(
            "{} region solutions for {} regions",
            solutions.len(),
            model.regions.len()
        )));
    }
    let case = &model.case;
    let bus_pos = case.bus_index_map();
    let mut theta = vec![0.0; case.buses.len()];
    let mut p = vec![0.0; case.generators.len()];
    let mut status = QpStatus::Optimal;
    for (r, s) in model.regions.iter().zip(solutions) {
        if s.theta.len() != r.n_angles() || s.p.len() != r.generators.len() {
            return Err(ContractError::Dimension(format!("solution of region {}", r.id)));
        }
        for (b, &t) in r.fragment.buses[..r.n_owned].iter().zip(&s.theta) {
            theta[bus_pos[&b.id]] = t;
        }
        for (&g, &pg) in r.generators.iter().zip(&s.p) {
            p[g] = pg;
        }
        if s.status != QpStatus::Optimal {
            status = s.status;
        }
    }
    let objective = objective_cost(case, &p)?;
    Ok(OpfSolution {
        theta,
        p,
        objective,
        status,
    })
}
