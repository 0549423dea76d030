use alloc::string::String;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumericsError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("basis Gram matrix is numerically singular; re-orthonormalize the basis")]
    SingularGram,
}

/// A network description that violates one of the case invariants.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CaseError {
    #[error("base MVA must be positive, got {0}")]
    NonPositiveBase(f64),
    #[error("case has no buses")]
    NoBuses,
    #[error("bus {0} is listed more than once")]
    DuplicateBus(u32),
    #[error("{what} refers to unknown bus {bus}")]
    UnknownBus { what: String, bus: u32 },
    #[error("line {line} ({from}-{to}) has non-positive reactance {x}")]
    NonPositiveReactance { line: usize, from: u32, to: u32, x: f64 },
    #[error("line {line} ({from}-{to}) has non-positive flow limit {limit}")]
    NonPositiveLimit { line: usize, from: u32, to: u32, limit: f64 },
    #[error("line {line} does not exist (case has {count} lines)")]
    UnknownLine { line: usize, count: usize },
    #[error("line {line} connects bus {bus} to itself")]
    SelfLoop { line: usize, bus: u32 },
    #[error("generator at bus {bus}: pmin {pmin} exceeds pmax {pmax}")]
    GeneratorLimits { bus: u32, pmin: f64, pmax: f64 },
    #[error("generator at bus {bus}: quadratic cost coefficient must be positive, got {gamma}")]
    NonPositiveGamma { bus: u32, gamma: f64 },
    #[error("generator at bus {bus}: lag time constant must be positive, got {lag}")]
    NonPositiveLag { bus: u32, lag: f64 },
    #[error("bus {0} hosts more than one generator")]
    DuplicateGenerator(u32),
    #[error("case has no generators")]
    NoGenerators,
    #[error("load at bus {bus}: {reason}")]
    BadSchedule { bus: u32, reason: String },
    #[error("{graph} graph is disconnected: bus {bus} is unreachable")]
    Disconnected { graph: &'static str, bus: u32 },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("reduced susceptance matrix has rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EstimationError {
    #[error("observation normal matrix is singular; the network is unobservable")]
    Unobservable,
    #[error("measurement covariance must be positive and finite")]
    BadCovariance,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("demand {demand} MW outside generation range [{min}, {max}] MW")]
    InfeasibleDemand { demand: f64, min: f64, max: f64 },
    #[error("brute-force search supports at most 3 generators, case has {0}")]
    TooManyGenerators(usize),
    #[error("grid step must be positive, got {0}")]
    BadStep(f64),
    #[error("no grid point satisfies balance, generator limits and line limits")]
    EmptyFeasibleSet,
    #[error("expected {expected} load values, got {found}")]
    LoadCount { expected: usize, found: usize },
}

/// Inconsistent simulation configuration, reported before the first step.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("{0} must be finite and non-negative")]
    Negative(&'static str),
    #[error("AR window must hold at least 3 samples, got {0}")]
    ArWindow(usize),
    #[error("drop probability must lie in [0, 1], got {0}")]
    DropProbability(f64),
    #[error("attachment list has {found} entries for {expected} generators")]
    AttachmentCount { expected: usize, found: usize },
    #[error("generator {generator} attached to unknown meter bus {bus}")]
    UnknownMeter { generator: usize, bus: u32 },
    #[error("initial load is outside generation range: {0}")]
    Initialization(OracleError),
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
}
