//! Engine for guided story creation based on Propp's narrative functions.
//!
//! - [`catalog`] and [`grammar`]: the function cards and the canonical-order rule.
//! - [`session`]: the step-by-step creation state machine producing a [`story::Story`].
//! - [`store`]: the file-backed story library.
//! - [`pdf`]: story export to PDF.
//! - [`gateway`]: local-first resource cache with network fallback.
//! - [`metrics`]: SUS, completion-rate and time-efficiency calculations.
//! - [`batch`]: data-parallel entry points over many inputs.

pub mod batch;
pub mod catalog;
pub mod clock;
pub mod gateway;
pub mod grammar;
pub mod metrics;
pub mod pdf;
pub mod session;
pub mod store;
pub mod story;

pub use catalog::{load_catalog, Catalog, Character, FunctionCard, InitialSituation};
pub use grammar::{validate_sequence, SequenceCheck};
pub use session::{new_session, Phase, SessionConfig, StorySession};
pub use store::{open_store, LibraryRecord, StoreHandle};
pub use story::{Story, StoryFragment};
