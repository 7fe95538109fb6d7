use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("invalid line: {0}")]
    InvalidLine(String),
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("invalid period [{start}, {end})")]
    InvalidPeriod { start: i64, end: i64 },
    #[error("invalid moving point: {0}")]
    InvalidMovingPoint(String),
    #[error("invalid rectangle")]
    InvalidRect,
    #[error("incompatible operands: {0} and {1}")]
    IncompatibleOperands(&'static str, &'static str),
    #[error("cannot build an index from an empty entry list")]
    EmptyInput,
    #[error("fanout must be at least 4, got {0}")]
    InvalidFanout(usize),
    #[error("k must be at least 1")]
    InvalidK,
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}
