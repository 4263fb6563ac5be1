use rand::Rng;

use super::{
    argmin_by_distance, common_prefix_len, validation_group, MatchError, MatchResult, MatcherConfig, Method, Scenario,
};
use crate::data::Admission;
use crate::embedding::{cosine_distance, EmbeddingError, EmbeddingModel};

/// Position-wise mismatch count; the shorter sequence is treated as padded
/// with a sentinel, so every extra position of the longer one is a mismatch.
pub fn hamming_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mismatched = a.iter().zip(b).filter(|(x, y)| x != y).count();
    mismatched + a.len().abs_diff(b.len())
}

fn non_empty_group<'a>(
    case: &Admission,
    controls: &[&'a Admission],
    cfg: &MatcherConfig,
) -> Result<Vec<&'a Admission>, MatchError> {
    let group = validation_group(case, controls, cfg);
    if group.is_empty() {
        Err(MatchError::EmptyValidationGroup {
            case_id: case.admission_id.clone(),
        })
    } else {
        Ok(group)
    }
}

fn result(
    case: &Admission,
    control: &Admission,
    method: Method,
    scenario: Scenario,
    distance: Option<f64>,
) -> MatchResult {
    MatchResult {
        case_id: case.admission_id.clone(),
        control_id: control.admission_id.clone(),
        method,
        scenario,
        distance,
        matched_prefix_len: common_prefix_len(&case.codes, &control.codes),
        random_fallback: false,
    }
}

/// Primary-code matching: a uniform draw among validation-group controls
/// whose first code equals the case's.
pub fn match_pcm<R: Rng + ?Sized>(
    case: &Admission,
    controls: &[&Admission],
    cfg: &MatcherConfig,
    rng: &mut R,
) -> Result<MatchResult, MatchError> {
    let first = case.first_code().ok_or_else(|| MatchError::EmptyCase {
        case_id: case.admission_id.clone(),
    })?;
    let group = non_empty_group(case, controls, cfg)?;
    let candidates: Vec<&Admission> = group.into_iter().filter(|c| c.first_code() == Some(first)).collect();
    if candidates.is_empty() {
        return Err(MatchError::NoCandidate {
            case_id: case.admission_id.clone(),
            method: Method::Pcm,
        });
    }
    let pick = candidates[rng.random_range(0..candidates.len())];
    Ok(result(case, pick, Method::Pcm, Scenario::PrimaryCode, None))
}

/// Hamming-distance matching: the validation-group control with the fewest
/// position-wise code mismatches; ties go to the smallest `admission_id`.
pub fn match_hdm<R: Rng + ?Sized>(
    case: &Admission,
    controls: &[&Admission],
    cfg: &MatcherConfig,
    _rng: &mut R,
) -> Result<MatchResult, MatchError> {
    let group = non_empty_group(case, controls, cfg)?;
    let pick = group
        .into_iter()
        .min_by(|a, b| {
            hamming_distance(&case.codes, &a.codes)
                .cmp(&hamming_distance(&case.codes, &b.codes))
                .then_with(|| a.admission_id.cmp(&b.admission_id))
        })
        .expect("group is non-empty");
    Ok(result(case, pick, Method::Hdm, Scenario::Hamming, None))
}

fn summed_vector(codes: &[crate::codes::CodeId], model: &EmbeddingModel) -> Result<Vec<f64>, EmbeddingError> {
    let mut sum = vec![0.0; model.dim()];
    for code in codes {
        for (s, x) in sum.iter_mut().zip(model.require(code)?) {
            *s += x;
        }
    }
    Ok(sum)
}

/// Code-sum matching: compares the sums of all code vectors of case and
/// control by cosine distance. Controls whose sum is the zero vector are
/// skipped.
pub fn match_csm<R: Rng + ?Sized>(
    case: &Admission,
    controls: &[&Admission],
    model: &EmbeddingModel,
    cfg: &MatcherConfig,
    _rng: &mut R,
) -> Result<MatchResult, MatchError> {
    let group = non_empty_group(case, controls, cfg)?;
    let case_sum = summed_vector(&case.codes, model)?;
    let no_candidate = || MatchError::NoCandidate {
        case_id: case.admission_id.clone(),
        method: Method::Csm,
    };
    if case_sum.iter().all(|&x| x == 0.0) {
        return Err(no_candidate());
    }
    let mut scored = Vec::with_capacity(group.len());
    for control in group {
        let sum = summed_vector(&control.codes, model)?;
        match cosine_distance(&case_sum, &sum) {
            Ok(d) => scored.push((control, d)),
            Err(EmbeddingError::ZeroVector) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    let (pick, d) = argmin_by_distance(scored).ok_or_else(no_candidate)?;
    Ok(result(case, pick, Method::Csm, Scenario::CodeSum, Some(d)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::fixtures::admission;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pool(rows: &[(&str, &[&str])]) -> Vec<Admission> {
        rows.iter().map(|(id, c)| admission(id, c)).collect()
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    #[test]
    fn hamming_counts_padding_as_mismatch() {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        assert_eq!(hamming_distance(&s(&["A", "B"]), &s(&["A", "B"])), 0);
        assert_eq!(hamming_distance(&s(&["A", "B"]), &s(&["A", "C"])), 1);
        assert_eq!(hamming_distance(&s(&["A", "B"]), &s(&["X", "Y"])), 2);
        assert_eq!(hamming_distance(&s(&["A", "B", "C"]), &s(&["A", "B"])), 1);
        assert_eq!(hamming_distance::<String>(&[], &s(&["A"])), 1);
    }

    #[test]
    fn pcm_requires_shared_primary_code() {
        let case = admission("case", &["C50", "I10"]);
        let controls = pool(&[("x", &["I10", "C50"]), ("y", &["C50"])]);
        let refs: Vec<&Admission> = controls.iter().collect();
        let r = match_pcm(&case, &refs, &MatcherConfig::default(), &mut rng()).unwrap();
        assert_eq!(r.control_id, "y");
        assert_eq!(r.scenario, Scenario::PrimaryCode);

        let err = match_pcm(&case, &refs[..1], &MatcherConfig::default(), &mut rng()).unwrap_err();
        assert!(matches!(
            err,
            MatchError::NoCandidate {
                method: Method::Pcm,
                ..
            }
        ));
    }

    // Frequency oracle: three eligible controls, 10^4 seeded draws, Pearson
    // chi-square with 2 degrees of freedom below the 0.999 quantile (13.82).
    #[test]
    fn pcm_draws_uniformly() {
        let case = admission("case", &["C50"]);
        let controls = pool(&[
            ("a", &["C50"]),
            ("b", &["C50", "I10"]),
            ("c", &["C50"]),
            ("d", &["I10"]),
        ]);
        let refs: Vec<&Admission> = controls.iter().collect();
        let mut r = rng();
        let mut counts = std::collections::BTreeMap::new();
        let n = 10_000;
        for _ in 0..n {
            let m = match_pcm(&case, &refs, &MatcherConfig::default(), &mut r).unwrap();
            *counts.entry(m.control_id).or_insert(0u32) += 1;
        }
        assert_eq!(counts.len(), 3);
        let e = n as f64 / 3.0;
        let chi2: f64 = counts.values().map(|&o| (o as f64 - e).powi(2) / e).sum();
        assert!(chi2 < 13.82, "chi2 = {chi2}");
    }

    #[test]
    fn hdm_prefers_fewest_mismatches_then_smallest_id() {
        let case = admission("case", &["A", "B"]);
        let controls = pool(&[("z", &["X", "Y"]), ("m", &["A", "C"]), ("b", &["A", "D"])]);
        let refs: Vec<&Admission> = controls.iter().collect();
        let r = match_hdm(&case, &refs, &MatcherConfig::default(), &mut rng()).unwrap();
        assert_eq!(r.control_id, "b");
        assert_eq!(r.distance, None);
    }

    fn toy_model() -> EmbeddingModel {
        EmbeddingModel::from_vectors(
            2,
            [
                ("A", vec![1.0, 0.0]),
                ("B", vec![0.0, 1.0]),
                ("C", vec![1.0, 1.0]),
                ("D", vec![-1.0, 0.0]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn csm_ignores_code_order() {
        let case = admission("case", &["A", "B", "C"]);
        let controls = pool(&[("x", &["A", "A"]), ("y", &["C", "B", "A"]), ("z", &["B"])]);
        let refs: Vec<&Admission> = controls.iter().collect();
        let m = toy_model();
        let r = match_csm(&case, &refs, &m, &MatcherConfig::default(), &mut rng()).unwrap();
        assert_eq!(r.control_id, "y");
        assert!(r.distance.unwrap().abs() < 1e-15);

        let permuted = admission("case", &["C", "A", "B"]);
        for c in &refs {
            let one = [*c];
            let a = match_csm(&case, &one, &m, &MatcherConfig::default(), &mut rng()).unwrap();
            let b = match_csm(&permuted, &one, &m, &MatcherConfig::default(), &mut rng()).unwrap();
            assert_eq!(a.distance, b.distance);
        }
    }

    // Brute force: evaluate every control's summed-vector distance by hand.
    #[test]
    fn csm_agrees_with_exhaustive_evaluation() {
        let m = toy_model();
        let case = admission("case", &["A", "C"]);
        let controls = pool(&[("p", &["B", "B"]), ("q", &["A", "B", "D"]), ("r", &["C", "A", "B"])]);
        let refs: Vec<&Admission> = controls.iter().collect();
        let sum = |codes: &[crate::codes::CodeId]| {
            codes.iter().fold([0.0, 0.0], |acc, c| {
                let v = m.vector(c).unwrap();
                [acc[0] + v[0], acc[1] + v[1]]
            })
        };
        let cs = sum(&case.codes);
        let mut best = ("", f64::INFINITY);
        for c in &controls {
            let s = sum(&c.codes);
            let cos = (cs[0] * s[0] + cs[1] * s[1]) / (cs[0].hypot(cs[1]) * s[0].hypot(s[1]));
            if 1.0 - cos < best.1 {
                best = (&c.admission_id, 1.0 - cos);
            }
        }
        let r = match_csm(&case, &refs, &m, &MatcherConfig::default(), &mut rng()).unwrap();
        assert_eq!(r.control_id, best.0);
    }

    #[test]
    fn csm_excludes_zero_sum_controls() {
        let m = toy_model();
        let case = admission("case", &["A"]);
        let controls = pool(&[("zero", &["A", "D"]), ("far", &["B"])]);
        let refs: Vec<&Admission> = controls.iter().collect();
        let r = match_csm(&case, &refs, &m, &MatcherConfig::default(), &mut rng()).unwrap();
        assert_eq!(r.control_id, "far");
        let err = match_csm(&case, &refs[..1], &m, &MatcherConfig::default(), &mut rng()).unwrap_err();
        assert!(err.is_no_match());
    }
}
