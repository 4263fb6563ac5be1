use std::io::Write;

use rand::Rng;

use super::{match_csm, match_hdm, match_pcm, match_wvm, MatchError, MatchResult, MatcherConfig, Method};
use crate::data::Admission;
use crate::embedding::EmbeddingModel;

pub const MATCH_HEADER: [&str; 6] = [
    "case_id",
    "control_id",
    "method",
    "scenario",
    "matched_prefix_len",
    "distance",
];

/// A case left unmatched, with the reason.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedCase {
    pub case_id: String,
    pub reason: String,
    /// False when the skip came from bad input (e.g. a code missing from the
    /// embedding) rather than an absence of acceptable controls.
    pub no_match: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CohortMatch {
    pub results: Vec<MatchResult>,
    pub skipped: Vec<SkippedCase>,
}

/// Matches one case with the method named in `cfg`.
pub fn match_case<R: Rng + ?Sized>(
    case: &Admission,
    controls: &[&Admission],
    model: Option<&EmbeddingModel>,
    cfg: &MatcherConfig,
    rng: &mut R,
) -> Result<MatchResult, MatchError> {
    let need_model = || model.ok_or(MatchError::MissingModel(cfg.method));
    match cfg.method {
        Method::Wvm => match_wvm(case, controls, need_model()?, cfg, rng),
        Method::Pcm => match_pcm(case, controls, cfg, rng),
        Method::Hdm => match_hdm(case, controls, cfg, rng),
        Method::Csm => match_csm(case, controls, need_model()?, cfg, rng),
    }
}

/// Greedy 1:1 matching of `cases` in order. Without replacement each chosen
/// control leaves the pool before the next case is matched. Per-case
/// failures land in [`CohortMatch::skipped`]; the cohort never aborts.
///
/// Cases and controls are expected to belong to disjoint patients.
pub fn match_cohort<R: Rng + ?Sized>(
    cases: &[Admission],
    controls: &[Admission],
    model: Option<&EmbeddingModel>,
    cfg: &MatcherConfig,
    rng: &mut R,
) -> CohortMatch {
    let mut pool: Vec<&Admission> = controls.iter().collect();
    let mut out = CohortMatch::default();
    for case in cases {
        match match_case(case, &pool, model, cfg, rng) {
            Ok(result) => {
                if !cfg.with_replacement {
                    if let Some(pos) = pool.iter().position(|c| c.admission_id == result.control_id) {
                        pool.remove(pos);
                    }
                }
                out.results.push(result);
            }
            Err(err) => out.skipped.push(SkippedCase {
                case_id: case.admission_id.clone(),
                no_match: err.is_no_match(),
                reason: err.to_string(),
            }),
        }
    }
    out
}

/// Writes `case_id,control_id,method,scenario,matched_prefix_len,distance`
/// rows; `distance` is empty when no embedding comparison was made.
pub fn write_match_results<W: Write>(sink: W, results: &[MatchResult]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink);
    w.write_record(MATCH_HEADER)?;
    for r in results {
        w.write_record([
            r.case_id.as_str(),
            r.control_id.as_str(),
            r.method.label(),
            r.scenario.label(),
            &r.matched_prefix_len.to_string(),
            &r.distance.map(|d| d.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::fixtures::admission;
    use crate::matching::Scenario;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model() -> EmbeddingModel {
        EmbeddingModel::from_vectors(2, [("A", vec![1.0, 0.0]), ("B", vec![0.8, 0.3]), ("C", vec![0.0, 1.0])]).unwrap()
    }

    #[test]
    fn pool_depletes_without_replacement() {
        let cases = [admission("k1", &["A", "B"]), admission("k2", &["A", "B"])];
        let controls = [admission("perfect", &["A", "B"]), admission("near", &["A", "C"])];
        let m = model();
        let cfg = MatcherConfig::default();
        let out = match_cohort(&cases, &controls, Some(&m), &cfg, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(out.results[0].control_id, "perfect");
        assert_eq!(out.results[0].scenario, Scenario::ExactFull);
        assert_eq!(out.results[1].control_id, "near");
        assert_eq!(out.results[1].scenario, Scenario::PartialEmbedding);
    }

    #[test]
    fn with_replacement_reuses_controls() {
        let cases = [admission("k1", &["A", "B"]), admission("k2", &["A", "B"])];
        let controls = [admission("perfect", &["A", "B"]), admission("near", &["A", "C"])];
        let m = model();
        let cfg = MatcherConfig {
            with_replacement: true,
            ..Default::default()
        };
        let out = match_cohort(&cases, &controls, Some(&m), &cfg, &mut ChaCha8Rng::seed_from_u64(1));
        assert!(out.results.iter().all(|r| r.control_id == "perfect"));
    }

    #[test]
    fn failures_are_skipped_not_fatal() {
        let cases = [admission("k1", &["C"]), admission("k2", &["A"])];
        let controls = [admission("a", &["A"])];
        let cfg = MatcherConfig {
            method: Method::Pcm,
            ..Default::default()
        };
        let out = match_cohort(&cases, &controls, None, &cfg, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(out.results.len(), 1);
        assert_eq!(out.skipped.len(), 1);
        assert_eq!(out.skipped[0].case_id, "k1");
        assert!(out.skipped[0].no_match);
    }

    #[test]
    fn embedding_methods_require_a_model() {
        let cfg = MatcherConfig {
            method: Method::Csm,
            ..Default::default()
        };
        let case = admission("k", &["A"]);
        let control = admission("c", &["A"]);
        let err = match_case(&case, &[&control], None, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap_err();
        assert!(matches!(err, MatchError::MissingModel(Method::Csm)));
    }

    #[test]
    fn match_file_leaves_distance_blank_for_exact_matches() {
        let results = vec![
            MatchResult {
                case_id: "k1".into(),
                control_id: "c1".into(),
                method: Method::Wvm,
                scenario: Scenario::ExactFull,
                distance: None,
                matched_prefix_len: 2,
                random_fallback: false,
            },
            MatchResult {
                case_id: "k2".into(),
                control_id: "c2".into(),
                method: Method::Wvm,
                scenario: Scenario::FirstCodeEmbedding,
                distance: Some(0.25),
                matched_prefix_len: 0,
                random_fallback: false,
            },
        ];
        let mut buf = Vec::new();
        write_match_results(&mut buf, &results).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "case_id,control_id,method,scenario,matched_prefix_len,distance\n\
             k1,c1,WVM,exact_full,2,\n\
             k2,c2,WVM,first_code_embedding,0,0.25\n"
        );
    }
}
