//! Error types shared across the simulator.

use thiserror::Error;

/// Errors raised by the propagation and link-budget functions.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum RadioError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("distance {d2d_m} m outside the pathloss model range [{min_m}, {max_m}] m")]
    OutOfRange { d2d_m: f64, min_m: f64, max_m: f64 },
    #[error("cell {0} is off")]
    CellOff(u32),
    #[error("point ({x}, {y}) lies outside the terrain raster")]
    OutsideTerrain { x: f64, y: f64 },
    #[error("empty bounding box")]
    EmptyBbox,
}

/// Errors raised by the network model.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("cell {0} is not switchable")]
    NonSwitchable(u32),
    #[error("unknown cell {0}")]
    UnknownCell(u32),
    #[error("energy must be positive, got {0} J")]
    NonPositiveEnergy(f64),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Radio(#[from] RadioError),
}

/// Errors raised by the RIC message bus.
#[derive(Debug, Error)]
pub enum BusError {
    #[error("subscriber `{0}` is already subscribed")]
    DuplicateSubscriber(String),
    #[error("report period must be at least 1 hour")]
    InvalidPeriod,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Errors raised by the DQN components.
#[derive(Debug, Error)]
pub enum DqnError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("non-finite loss {loss} at update {update}")]
    NonFiniteLoss { loss: f64, update: u64 },
    #[error("empty batch")]
    EmptyBatch,
    #[error("missing report for cell {0}")]
    MissingCell(u32),
    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Errors raised by the experiment harness.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Bus(#[from] BusError),
    #[error(transparent)]
    Dqn(#[from] DqnError),
    #[error("{0}")]
    Invalid(String),
    #[error("replay mismatch: {0}")]
    ReplayMismatch(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
