//! Network data model and MATPOWER case ingestion.
//!
//! All power quantities are stored in per-unit on the case MVA base; angles are
//! radians. Generator costs are quadratic polynomials in per-unit output.

mod parse;
mod validate;
mod write;

pub use parse::{parse_case, read_case};
pub use validate::{validate_case, Finding, ValidationReport};
pub use write::write_case;

use serde::{Deserialize, Serialize};

/// Bus identifier as it appears in the source case.
pub type BusId = u32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: BusId,
    /// Active demand, p.u.
    pub demand: f64,
    pub is_ref: bool,
}

/// `c2 p^2 + c1 p + c0` in $/h with `p` in p.u.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct CostCurve {
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

impl CostCurve {
    pub fn eval(&self, p: f64) -> f64 {
        (self.c2 * p + self.c1) * p + self.c0
    }

    pub fn marginal(&self, p: f64) -> f64 {
        2.0 * self.c2 * p + self.c1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub bus: BusId,
    pub p_min: f64,
    pub p_max: f64,
    pub cost: CostCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub from: BusId,
    pub to: BusId,
    /// Series susceptance `1/x`, p.u.
    pub susceptance: f64,
    /// Flow limit in p.u.; `f64::INFINITY` when the source rating is 0.
    pub flow_limit: f64,
    pub in_service: bool,
}

impl Branch {
    pub fn is_limited(&self) -> bool {
        self.flow_limit.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkCase {
    pub name: String,
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub generators: Vec<Generator>,
    pub branches: Vec<Branch>,
}

impl NetworkCase {
    /// Position of a bus id in `buses`.
    pub fn bus_index(&self, id: BusId) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    /// Lookup table from bus id to position; panics are impossible for ids
    /// that passed validation.
    pub fn bus_index_map(&self) -> std::collections::HashMap<BusId, usize> {
        self.buses.iter().enumerate().map(|(k, b)| (b.id, k)).collect()
    }

    pub fn ref_bus(&self) -> Option<usize> {
        self.buses.iter().position(|b| b.is_ref)
    }

    pub fn total_demand(&self) -> f64 {
        self.buses.iter().map(|b| b.demand).sum()
    }

    pub fn in_service_branches(&self) -> impl Iterator<Item = (usize, &Branch)> {
        self.branches.iter().enumerate().filter(|(_, br)| br.in_service)
    }
}
