//! Numerical laboratory for the Bellman function of the Hardy-operator
//! extremal problem
//!
//! ```text
//!   sup { ∫_0^1 ((1/t) ∫_0^t g)^p dt : g non-increasing, ∫g = f, ∫g^p = F }
//! ```
//!
//! and for the dyadic-tree construction that ties it to the dyadic maximal
//! operator.
//!
//! * [`bellman`]: `H_p`, its inverse `ω_p` and `B_p(f, F) = F ω_p(f^p/F)^p`.
//! * [`monotone`]: non-increasing step functions, Hardy averages, the
//!   functional `Φ_p`, the eigen-defect and rearrangements.
//! * [`extremal`]: the power-law extremal `g₀` and near-extremal sequences.
//! * [`optimizer`]: projected gradient ascent over the feasible set.
//! * [`dyadic`]: tree maximal operators and the `φ_a` rearrangement family.
//! * [`report`], [`config`], [`commands`], [`verify`]: experiment driver.

pub mod bellman;
pub mod commands;
pub mod config;
pub mod dyadic;
pub mod error;
pub mod extremal;
pub mod monotone;
pub mod optimizer;
pub mod quad;
pub mod report;
pub mod sampling;
pub mod stats;
pub mod verify;

pub use bellman::{bellman_value, hp_eval, omega_p, MomentPair, OmegaValue, PParams};
pub use error::{Error, Result};
pub use extremal::{ExtremalSequenceSpec, PowerLawFunction, SequenceKind};
pub use monotone::{CumulativeProfile, DefectValue, StepFunction};
pub use config::ExperimentConfig;
pub use dyadic::{AlphaTree, DyadicTree, LeafFunction, PhiA, Sandwich};
pub use optimizer::{AscentConfig, AscentOutcome, AscentTrace};
pub use report::RunReport;
