use thiserror::Error;

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{section}{}: {message}", row.map(|r| format!(" row {r}")).unwrap_or_default())]
    Semantic {
        section: &'static str,
        row: Option<usize>,
        message: String,
    },
    #[error("invalid case: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Violated preconditions of library operations (dimension mismatches,
/// invalid parameters, malformed partitions).
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ContractError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum PartitionError {
    #[error("partition file line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("partition references unknown bus {0}")]
    UnknownBus(u32),
    #[error("bus {0} has no region assignment")]
    Unassigned(u32),
    #[error("bus {0} is assigned twice")]
    Duplicate(u32),
    #[error("at least two regions are required, found {0}")]
    TooFewRegions(usize),
    #[error("region {0} has no tie line to any other region")]
    IsolatedRegion(u32),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Contract(#[from] ContractError),
    #[error("centralized problem is not solvable: {0}")]
    Oracle(String),
    #[error("config: {0}")]
    Config(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
