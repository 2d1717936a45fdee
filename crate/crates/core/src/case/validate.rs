use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{BusId, NetworkCase};

/// One violated invariant of a [`NetworkCase`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Finding {
    NoReferenceBus,
    MultipleReferenceBuses(Vec<BusId>),
    DuplicateBus(BusId),
    NonPositiveBase(f64),
    DanglingGenerator { generator: usize, bus: BusId },
    DanglingBranch { branch: usize, bus: BusId },
    InvertedGeneratorLimits { generator: usize },
    NonConvexCost { generator: usize },
    NonPositiveFlowLimit { branch: usize },
    ZeroSusceptance { branch: usize },
    NonFinite { what: String },
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::NoReferenceBus => write!(f, "no reference bus"),
            Finding::MultipleReferenceBuses(ids) => {
                write!(f, "multiple reference buses: {ids:?}")
            }
            Finding::DuplicateBus(id) => write!(f, "duplicate bus id {id}"),
            Finding::NonPositiveBase(b) => write!(f, "non-positive MVA base {b}"),
            Finding::DanglingGenerator { generator, bus } => {
                write!(f, "generator {generator} references unknown bus {bus}")
            }
            Finding::DanglingBranch { branch, bus } => {
                write!(f, "branch {branch} references unknown bus {bus}")
            }
            Finding::InvertedGeneratorLimits { generator } => {
                write!(f, "generator {generator} has p_min > p_max")
            }
            Finding::NonConvexCost { generator } => {
                write!(f, "generator {generator} has a negative quadratic cost coefficient")
            }
            Finding::NonPositiveFlowLimit { branch } => {
                write!(f, "in-service branch {branch} has a non-positive flow limit")
            }
            Finding::ZeroSusceptance { branch } => write!(f, "branch {branch} has zero susceptance"),
            Finding::NonFinite { what } => write!(f, "non-finite value in {what}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }
}

/// Check every structural invariant of `case`. Indices in findings are
/// zero-based positions in the case vectors.
pub fn validate_case(case: &NetworkCase) -> ValidationReport {
    let mut findings = Vec::new();
    if !(case.base_mva > 0.0) || !case.base_mva.is_finite() {
        findings.push(Finding::NonPositiveBase(case.base_mva));
    }

    let mut ids = HashSet::new();
    for b in &case.buses {
        if !ids.insert(b.id) {
            findings.push(Finding::DuplicateBus(b.id));
        }
        if !b.demand.is_finite() {
            findings.push(Finding::NonFinite {
                what: format!("demand of bus {}", b.id),
            });
        }
    }
    let refs: Vec<BusId> = case.buses.iter().filter(|b| b.is_ref).map(|b| b.id).collect();
    match refs.len() {
        0 => findings.push(Finding::NoReferenceBus),
        1 => {}
        _ => findings.push(Finding::MultipleReferenceBuses(refs)),
    }

    for (k, g) in case.generators.iter().enumerate() {
        if !ids.contains(&g.bus) {
            findings.push(Finding::DanglingGenerator {
                generator: k,
                bus: g.bus,
            });
        }
        if g.p_min.is_nan() || g.p_max.is_nan() {
            findings.push(Finding::NonFinite {
                what: format!("limits of generator {k}"),
            });
        } else if g.p_min > g.p_max {
            findings.push(Finding::InvertedGeneratorLimits { generator: k });
        }
        let c = &g.cost;
        if !(c.c2.is_finite() && c.c1.is_finite() && c.c0.is_finite()) {
            findings.push(Finding::NonFinite {
                what: format!("cost of generator {k}"),
            });
        } else if c.c2 < 0.0 {
            findings.push(Finding::NonConvexCost { generator: k });
        }
    }

    for (k, br) in case.branches.iter().enumerate() {
        for bus in [br.from, br.to] {
            if !ids.contains(&bus) {
                findings.push(Finding::DanglingBranch { branch: k, bus });
            }
        }
        if br.susceptance == 0.0 {
            findings.push(Finding::ZeroSusceptance { branch: k });
        } else if !br.susceptance.is_finite() {
            findings.push(Finding::NonFinite {
                what: format!("susceptance of branch {k}"),
            });
        }
        if br.in_service && !(br.flow_limit > 0.0) {
            findings.push(Finding::NonPositiveFlowLimit { branch: k });
        }
    }
    ValidationReport { findings }
}
