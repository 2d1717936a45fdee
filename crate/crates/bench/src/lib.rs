//! Fixtures shared by the benchmarks.

use std::path::PathBuf;

use dopf::{decompose, read_case, solve_centralized, NetworkCase, PartitionedModel, RegionAssignment};

pub fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

pub fn case(name: &str) -> NetworkCase {
    read_case(data(&format!("cases/{name}.m"))).expect("bundled case")
}

/// Case, its default partition and the centralized objective.
pub fn partitioned(name: &str) -> (PartitionedModel, f64) {
    let c = case(name);
    let assign = RegionAssignment::read(data(&format!("partitions/{name}.txt"))).expect("bundled partition");
    let central = solve_centralized(&c).expect("solvable").objective;
    (decompose(&c, &assign).expect("valid partition"), central)
}
