//! Conservative estimators of nonlocal and local false discovery rates
//! that work with as few as one or two p-values.
//!
//! * [`distkit`]: binomial, normal, chi-squared and t distributions.
//! * [`confdist`]: binomial confidence distributions and their inverses.
//! * [`nfdr`]: NFDR estimators (MLE, corrected median, posterior mean).
//! * [`lfdr`]: rank-doubling LFDR estimates, monotonicity, BH control.
//! * [`simkit`]: mixture simulation study and exact small-N coverage.
//! * [`ingest`]: abundance / p-value files and the t-test pipeline.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod confdist;
pub mod distkit;
pub mod error;
pub mod ingest;
pub mod lfdr;
pub mod nfdr;
pub mod numfmt;
pub mod quad;
pub mod seeds;
pub mod simkit;

pub use confdist::{ConfidenceDistribution, IntervalSide, ProbabilityInterval};
pub use distkit::{BinomialParams, Chi2MixtureParams};
pub use error::{Error, Result};
pub use lfdr::{Estimator, LfdrOptions, LfdrResult, PValueEntry, PValueSet};
pub use nfdr::{CapPlacement, EstimatorKind, MeanMethod, MeanOptions, NfdrEstimate};
pub use simkit::{MetricsRow, SimulationConfig};
