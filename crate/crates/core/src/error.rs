use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("coefficient group mismatch: {0} vs {1}")]
    GroupMismatch(String, String),
    #[error("invalid coefficient group: {0}")]
    InvalidGroup(String),
    #[error("degenerate polytope: {0}")]
    Degenerate(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("point is not interior: {0}")]
    NotInterior(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("cell limit exceeded: {count} cells requested, limit {limit}")]
    CellLimit { count: usize, limit: usize },
    #[error("invalid cell reference: {0}")]
    InvalidCell(String),
    #[error("map is not cellular: {0}")]
    NotCellular(String),
    #[error("level {0} passes through a vertex value; perturb the level")]
    DegenerateLevel(f64),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("integrand out of range: {0}")]
    IntegrandRange(String),
    #[error("orientation conflict on cell {cell}: {detail}")]
    OrientationConflict { cell: usize, detail: String },
    #[error("center selection failed after {0} draws")]
    CenterSelection(usize),
    #[error("arithmetic overflow")]
    Overflow,
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
