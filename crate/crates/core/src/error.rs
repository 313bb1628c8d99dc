//! Shared error type for the analytics pipeline.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum Error {
    /// A device cannot encounter itself; both sides of a beacon carry the
    /// same pseudonym.
    #[error("self beacon: both users are {0}")]
    SelfBeacon(String),

    /// The chunk container itself could not be decoded. Individual bad
    /// records inside a decodable container are dropped, not fatal.
    #[error("undecodable chunk container: {0}")]
    ChunkFormat(String),

    /// An operation that requires at least one input point got none.
    #[error("empty input")]
    EmptyInput,

    /// A query parameter is outside its valid range.
    #[error("invalid query: {0}")]
    InvalidQuery(String),

    /// The ground-truth oracle only covers noise-free, drop-free scenarios.
    #[error("oracle requires a noise-free, drop-free scenario")]
    OracleValidity,

    /// Configuration violates an invariant.
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}
