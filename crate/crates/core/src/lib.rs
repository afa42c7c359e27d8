//! Assembly of fixed-form ability tests against an information target.
//!
//! Items follow the three-parameter logistic model. A test's information curve
//! can meet a target absolutely (`||I - J|| < epsilon`), relatively
//! (`||lambda I - J|| < epsilon` with `lambda < 1` chosen from the curve
//! areas), or exceed it (`I > J` everywhere). The crate provides:
//!
//! * [`irt`] and [`target`]: item, test and target curves on an ability grid;
//! * [`fit`]: the distance, area and deficiency measures and the three fit
//!   predicates;
//! * [`bank_io`]: seeded synthetic banks and the bank CSV format;
//! * [`sampler`]: random-sampling estimates of the fraction of tests in each
//!   class, and sweeps over test length;
//! * [`counts`]: binomial totals, count extrapolation and an exact
//!   enumeration oracle for small banks;
//! * [`anneal`]: a Metropolis search for target-exceeding tests.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anneal;
pub mod bank_io;
pub mod counts;
pub mod error;
pub mod fit;
pub mod irt;
pub mod rng;
pub mod sampler;
pub mod target;

pub use anneal::{anneal, AnnealConfig, AnnealResult};
pub use bank_io::{generate_bank, load_bank, save_bank, BankGenSpec};
pub use counts::{binom_total, enumerate_exact, extrapolate_counts, CountCurve, ExactCounts};
pub use error::{Error, Result};
pub use fit::{FitReport, TargetFit};
pub use irt::{AbilityGrid, BankCurves, Curve, ItemBank, ItemParams, TestForm};
pub use sampler::{
    estimate_mu, estimate_mu_relative, sweep, EstimateResult, FitMode, SamplingPlan, SweepConfig, SweepRow,
};
pub use target::TargetSpec;
