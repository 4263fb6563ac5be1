use rand::Rng;

use super::{
    argmin_by_distance, common_prefix_len, prefix_match_levels, validation_group, MatchError, MatchResult,
    MatcherConfig, Method, Scenario,
};
use crate::data::Admission;
use crate::embedding::EmbeddingModel;

/// Sequential matching of one case.
///
/// 1. Restrict the pool to the case's validation group.
/// 2. Index the group by shared code prefix ([`prefix_match_levels`]).
/// 3. Choose:
///    * some control matches the whole sequence: a uniform draw from those;
///    * the deepest shared prefix has length `k >= 1`: among controls at that
///      depth that have a `(k+1)`-th code, the one whose `(k+1)`-th code is
///      closest to the case's in embedding space;
///    * not even the first code is shared: the control whose first code is
///      closest to the case's first code.
///
/// Distance ties go to the smallest `admission_id`. Only codes that take
/// part in a distance computation need to be in `model`.
pub fn match_wvm<R: Rng + ?Sized>(
    case: &Admission,
    controls: &[&Admission],
    model: &EmbeddingModel,
    cfg: &MatcherConfig,
    rng: &mut R,
) -> Result<MatchResult, MatchError> {
    if case.codes.is_empty() {
        return Err(MatchError::EmptyCase {
            case_id: case.admission_id.clone(),
        });
    }
    let group = validation_group(case, controls, cfg);
    if group.is_empty() {
        return Err(MatchError::EmptyValidationGroup {
            case_id: case.admission_id.clone(),
        });
    }
    let index = prefix_match_levels(case, &group);
    let result = |control: &Admission, scenario, distance, random_fallback| MatchResult {
        case_id: case.admission_id.clone(),
        control_id: control.admission_id.clone(),
        method: Method::Wvm,
        scenario,
        distance,
        matched_prefix_len: common_prefix_len(&case.codes, &control.codes),
        random_fallback,
    };

    let full = index.full_set();
    if !full.is_empty() {
        let pick = group[full[rng.random_range(0..full.len())]];
        return Ok(result(pick, Scenario::ExactFull, None, false));
    }

    let depth = index.depth();
    if depth >= 1 {
        // The case has a code at `depth` because its full sequence was not matched.
        let target = model.require(&case.codes[depth])?;
        let level = index.level(depth);
        let mut scored = Vec::with_capacity(level.len());
        for &i in level {
            if let Some(code) = group[i].codes.get(depth) {
                let d = crate::embedding::cosine_distance(target, model.require(code)?)?;
                scored.push((group[i], d));
            }
        }
        return Ok(match argmin_by_distance(scored) {
            Some((pick, d)) => result(pick, Scenario::PartialEmbedding, Some(d), false),
            None => {
                let pick = group[level[rng.random_range(0..level.len())]];
                result(pick, Scenario::PartialEmbedding, None, true)
            }
        });
    }

    let target = model.require(&case.codes[0])?;
    let mut scored = Vec::with_capacity(group.len());
    for control in &group {
        let first = &control.codes[0];
        let d = crate::embedding::cosine_distance(target, model.require(first)?)?;
        scored.push((*control, d));
    }
    let (pick, d) = argmin_by_distance(scored).expect("validation group is non-empty");
    Ok(result(pick, Scenario::FirstCodeEmbedding, Some(d), false))
}
