use std::io;

use thiserror::Error;

/// Errors produced anywhere in the compression toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed file: {0}")]
    MalformedFile(String),
    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: u64, limit: u64 },
    #[error("non-finite coordinate at vertex {vertex}")]
    NonFiniteCoordinate { vertex: usize },
    #[error("non-finite value at position {index}")]
    NonFiniteValue { index: usize },
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("i/o failure: {0}")]
    Io(#[from] io::Error),

    #[error("mesh has no cells")]
    DegenerateMesh,
    #[error("no nonzero samples remain after filtering")]
    EmptyAfterFiltering,
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),

    #[error("multilinear back-interpolation is not available in seed mode")]
    SeedModeUnsupported,
    #[error("multilinear back-interpolation needs mesh vertex coordinates")]
    MissingGeometry,
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("unknown codec id {0}")]
    UnknownCodec(u8),
    #[error("unknown lossless backend id {0}")]
    UnknownBackend(u8),
    #[error("codec id {0} is reserved or already registered")]
    CodecIdUnavailable(u8),
    #[error("corrupt payload: {0}")]
    CorruptPayload(String),
    #[error("external codec {id} violated the bound: max error {max_error:e} > {tau_abs:e}")]
    ExternalCodecViolation { id: u8, max_error: f64, tau_abs: f64 },
    #[error("external codec subprocess failed: {0}")]
    SubprocessFailure(String),

    #[error("error budget inadmissible: {0}")]
    BudgetInadmissible(String),
    #[error("archive was built against mapping {expected:016x}, got {actual:016x}")]
    MappingMismatch { expected: u64, actual: u64 },

    #[error("reference vector has zero norm")]
    ZeroNormReference,
    #[error("runs are not comparable: {0}")]
    MismatchedRuns(String),
    #[error("report serialization failed: {0}")]
    Report(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
