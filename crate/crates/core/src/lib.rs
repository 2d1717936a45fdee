//! Distributed DC optimal power flow under nonideal communication.
//!
//! Networks are read from MATPOWER case files ([`case`]), split into regions
//! ([`partition`]) and solved either centrally ([`opf`]) or by one of three
//! distributed augmented-Lagrangian schemes ([`algos`]) whose inter-region
//! messages pass through fault-injecting channels ([`comms`]). [`harness`]
//! runs Monte-Carlo sweeps and writes reports.

pub mod algos;
pub mod case;
pub mod comms;
pub mod error;
pub mod harness;
pub mod opf;
pub mod partition;
pub mod qp;

pub use case::{parse_case, read_case, validate_case, write_case, Branch, Bus, BusId, CostCurve, Generator, NetworkCase};
pub use error::{CaseError, ContractError, HarnessError, PartitionError};
pub use qp::{kkt_residuals, solve_qp, QpProblem, QpSolution, QpSolver, QpStatus};
pub use opf::{build_dc_opf, line_flows, objective_cost, solve_centralized, OpfSolution};
pub use partition::{assemble_global, consistency_mismatch, decompose, PartitionedModel, RegionAssignment};
pub use comms::{transmit, ChannelModel, LinkState};
pub use algos::{run_distributed, AlgorithmKind, AlgorithmParams, RunRecord, RunStatus};
pub use harness::{run_experiment, ExperimentConfig, ExperimentReport};
