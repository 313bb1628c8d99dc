//! Batch analytics over Bluetooth-beacon/GPS event streams.
//!
//! The pipeline turns raw beacon exchanges into four derivative products:
//!
//! 1. [`encounter`] — pairwise proximity encounters detected per hourly
//!    window from a two-condition rule (distance threshold plus minimum
//!    sustained contact), tagged with the mean GPS location of the pair.
//! 2. [`crowding`] — DBSCAN clusters of encounter locations scored as
//!    crowding hotspots (unique encounters per 10 m²), with an exact
//!    grid-partitioned parallel variant.
//! 3. [`tracing`] — an encounter graph answering exposure queries for
//!    reported positive users over a bounded lookback window.
//! 4. [`notify`] — per-user daily summaries (deduplicated counts, deltas,
//!    new partners, crowding visits) and population aggregates.
//!
//! [`ingest`] reads and validates record chunks, [`sim`] generates
//! synthetic scenarios with known ground truth, and [`reference`] holds
//! independent brute-force implementations used by the validation suite.

pub mod crowding;
pub mod encounter;
pub mod error;
pub mod geo;
pub mod ingest;
pub mod notify;
pub mod reference;
pub mod sim;
pub mod tracing;
pub mod types;

pub use error::Error;
pub use types::{BeaconRecord, EngineConfig, GeoPoint, Timestamp, UserId};
