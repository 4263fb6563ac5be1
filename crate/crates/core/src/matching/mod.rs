//! Case-control matchers over diagnosis code sequences.
//!
//! Every matcher first restricts the control pool to the case's *validation
//! group* (same gender, same age bin) and then picks one control:
//!
//! * [`Method::Wvm`] – sequential prefix matching with embedding fallback
//!   ([`match_wvm`]).
//! * [`Method::Pcm`] – random control sharing the primary (first) code.
//! * [`Method::Hdm`] – smallest position-wise Hamming distance.
//! * [`Method::Csm`] – smallest cosine distance between summed code vectors.

mod baselines;
mod greedy;
mod prefix;
mod wvm;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::codes::CodeId;
use crate::data::Admission;
use crate::embedding::EmbeddingError;

pub use baselines::{hamming_distance, match_csm, match_hdm, match_pcm};
pub use greedy::{match_case, match_cohort, write_match_results, CohortMatch, SkippedCase, MATCH_HEADER};
pub use prefix::{prefix_match_levels, PrefixMatchIndex};
pub use wvm::match_wvm;

/// Ages at or above this are pooled into one top bin.
pub const AGE_TOP_CODE: u32 = 85;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Wvm,
    Pcm,
    Hdm,
    Csm,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Wvm, Method::Pcm, Method::Hdm, Method::Csm];

    pub fn label(self) -> &'static str {
        match self {
            Method::Wvm => "WVM",
            Method::Pcm => "PCM",
            Method::Hdm => "HDM",
            Method::Csm => "CSM",
        }
    }

    pub fn needs_embedding(self) -> bool {
        matches!(self, Method::Wvm | Method::Csm)
    }

    /// Parses a comma-separated method list such as `WVM,PCM`.
    pub fn parse_list(s: &str) -> Result<Vec<Method>, String> {
        let mut out = Vec::new();
        for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let m = tok.parse::<Method>()?;
            if !out.contains(&m) {
                out.push(m);
            }
        }
        if out.is_empty() {
            return Err("no methods given".to_string());
        }
        Ok(out)
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown method {s:?}; valid methods are WVM, PCM, HDM, CSM"))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// How a control was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// A control with the case's full code sequence as prefix existed.
    ExactFull,
    /// Deepest shared prefix, then closest next code in embedding space.
    PartialEmbedding,
    /// No control shares the first code; closest first code in embedding space.
    FirstCodeEmbedding,
    PrimaryCode,
    Hamming,
    CodeSum,
}

impl Scenario {
    pub fn label(self) -> &'static str {
        match self {
            Scenario::ExactFull => "exact_full",
            Scenario::PartialEmbedding => "partial_embedding",
            Scenario::FirstCodeEmbedding => "first_code_embedding",
            Scenario::PrimaryCode => "primary_code",
            Scenario::Hamming => "hamming",
            Scenario::CodeSum => "code_sum",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub case_id: String,
    pub control_id: String,
    pub method: Method,
    pub scenario: Scenario,
    /// Cosine distance behind the choice; `None` unless an embedding
    /// comparison decided it.
    pub distance: Option<f64>,
    /// Length of the common code prefix of case and control.
    pub matched_prefix_len: usize,
    /// Set when the partial-prefix step found no candidate with a next code
    /// and fell back to a uniform draw.
    pub random_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatcherConfig {
    pub method: Method,
    pub age_bin_width_years: u32,
    /// When false, a control matched to one case is unavailable to later cases.
    pub with_replacement: bool,
}

impl Default for MatcherConfig {
    fn default() -> Self {
        MatcherConfig {
            method: Method::Wvm,
            age_bin_width_years: 5,
            with_replacement: false,
        }
    }
}

impl MatcherConfig {
    pub fn age_bin(&self, age_years: u32) -> u32 {
        age_years.min(AGE_TOP_CODE) / self.age_bin_width_years.max(1)
    }
}

#[derive(Debug, Error)]
pub enum MatchError {
    #[error("case {case_id}: no control of the same gender and age group")]
    EmptyValidationGroup { case_id: String },
    #[error("case {case_id}: no {method} candidate")]
    NoCandidate { case_id: String, method: Method },
    #[error("case {case_id} has no codes")]
    EmptyCase { case_id: String },
    #[error("{0} needs an embedding model")]
    MissingModel(Method),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

impl MatchError {
    /// True for errors meaning "no acceptable control", as opposed to bad input.
    pub fn is_no_match(&self) -> bool {
        matches!(
            self,
            MatchError::EmptyValidationGroup { .. } | MatchError::NoCandidate { .. }
        )
    }
}

/// Controls sharing the case's gender and age bin, in pool order.
pub fn validation_group<'a>(case: &Admission, controls: &[&'a Admission], cfg: &MatcherConfig) -> Vec<&'a Admission> {
    let bin = cfg.age_bin(case.age_years);
    controls
        .iter()
        .copied()
        .filter(|c| c.gender == case.gender && cfg.age_bin(c.age_years) == bin)
        .collect()
}

pub(crate) fn common_prefix_len(a: &[CodeId], b: &[CodeId]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

/// Index of the smallest `(distance, admission_id)` among scored candidates.
pub(crate) fn argmin_by_distance<'a>(
    scored: impl IntoIterator<Item = (&'a Admission, f64)>,
) -> Option<(&'a Admission, f64)> {
    scored
        .into_iter()
        .min_by(|(a, da), (b, db)| da.total_cmp(db).then_with(|| a.admission_id.cmp(&b.admission_id)))
}
