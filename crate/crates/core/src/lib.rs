//! Bottom-up consonant closed testing.
//!
//! Builds step-down multiple testing procedures with strong family-wise error
//! control whose local tests are optimized for a chosen power objective,
//! calibrated level by level with Monte Carlo conformal quantiles. Classical
//! competitors (Bonferroni, Holm, Hommel, Gou's hybrid), a last-step improver
//! for symmetric monotone suites, a simulation harness and exact small-K
//! integration for piecewise-constant alternatives are included.

pub mod decision;
pub mod distributions;
pub mod error;
pub mod evaluation;

pub mod objectives;

pub mod procedure;
pub mod procedures_bu;
pub mod procedures_classical;

pub mod rng;
pub mod thresholds;

pub use decision::{DecisionVector, SortedPValues};
pub use error::{Error, Result};
pub use objectives::{ExchangeableKind, ObjectiveSpec};
pub use thresholds::ThresholdTable;
