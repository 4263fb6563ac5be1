//! Outcome agreement between matched cohorts, and the repeated-trial
//! experiment that compares matchers.
//!
//! Two metrics are computed per trial over matched case-control pairs:
//! readmission accuracy (share of pairs with equal readmission status) and
//! the absolute difference of the groups' mortality incidence rates, in
//! deaths per person-day.

mod experiment;
mod metrics;
mod report;

use chrono::NaiveDate;
use thiserror::Error;

use crate::matching::Method;

pub use experiment::{
    match_trial, run_experiment, run_paired_experiment, sample_trial_cohort, AbortedIteration, ExperimentConfig,
    ExperimentReport, TrialCohort, TrialOutcome,
};
pub use metrics::{
    incidence_rate, incidence_summary, ir_error, readmission_accuracy, sign_test, IncidenceSummary, MetricSummary,
    SignTest,
};
pub use report::{write_summary_csv, write_text_report, write_trials_csv, SUMMARY_HEADER, TRIAL_HEADER};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvaluationError {
    #[error("paired lists differ in length ({cases} cases, {controls} controls)")]
    LengthMismatch { cases: usize, controls: usize },
    #[error("no records")]
    Empty,
    #[error("record {index}: discharge {discharge} is after the censor date {censor}")]
    DischargeAfterCensor {
        index: usize,
        discharge: NaiveDate,
        censor: NaiveDate,
    },
    #[error("record {index}: death precedes discharge")]
    DeathBeforeDischarge { index: usize },
    #[error("total person-time is zero; the incidence rate is undefined")]
    ZeroPersonTime,
    #[error("{0} needs an embedding model")]
    MissingModel(Method),
    #[error("internal error: {0}")]
    Internal(String),
}
