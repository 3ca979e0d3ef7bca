//! Forecast-evaluation laboratory for sequential binary and multiclass prediction.
//!
//! The crate evaluates a transcript — a paired sequence of probabilistic
//! predictions and realized outcomes — against the whole family of bounded
//! proper scoring rules at once. Alongside the classical per-rule regret and
//! L1/L2 calibration errors it computes:
//!
//! - V-regret and V-calibration: regret against V-shaped scoring rules
//!   (univariate form `-|p - v|`), which generate the bounded binary rules;
//! - U-calibration (maximum agent regret): the exact supremum of base-rate
//!   regret over all bounded proper scoring rules, solved as a linear program
//!   over scoring-rule value tables with a witness rule extracted from the
//!   optimum;
//! - agent regret and agent swap regret for finite-action agents, connected to
//!   scoring rules through the best-response duality.
//!
//! Two online forecasters are included: a randomized binary forecaster whose
//! prediction law makes every threshold agent replicate Hedge, and a
//! follow-the-perturbed-leader forecaster for multiclass outcomes. The
//! `fixtures` module regenerates, deterministically, every worked example the
//! metrics are validated against, and `oracle` holds independent brute-force
//! implementations used to certify the fast paths.
//!
//! The `ucal` binary exposes batch simulation, metric evaluation, LP solving
//! and fixture generation; see the repository README for the command map.

pub mod agents;
pub mod error;
pub mod fixtures;
pub mod forecasters;
pub mod io;
pub mod metrics;
pub mod oracle;
pub mod rng;
pub mod scoring;
pub mod simplex;
pub mod ucal_lp;

pub use error::{Error, Result};
pub use metrics::{RegretReport, Transcript};
