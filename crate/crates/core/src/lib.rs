//! On-line fuzzy relational identification.
//!
//! The library is organised bottom-up:
//!
//! - [`algebra`]: fuzzy set operations and max-min relational calculus,
//! - [`partition`]: triangular partitions with adaptive gravity centers and
//!   expanding universes,
//! - [`smoothing`]: order-n exponential smoothing of scalars and relations,
//! - [`identifier`]: the predict/learn loop that builds the relational model,
//! - [`plant`]: a permanent-magnet motor drive used as a data source,
//! - [`harness`]: experiment specs, CSV traces, metrics and scenario runs.

pub mod algebra;
pub mod error;
pub mod harness;
pub mod identifier;
pub mod partition;
pub mod plant;
pub mod smoothing;

pub use algebra::{GradeVector, RelationalMatrix, Rule, TNorm};
pub use error::{Error, Result};
pub use identifier::{Identifier, IdentifierConfig, Prediction, Snapshot, Step};
pub use partition::FuzzyPartition;
pub use smoothing::Smoother;
