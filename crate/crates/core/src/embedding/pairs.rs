use crate::codes::CodeId;
use crate::data::Admission;

/// A (center, context) observation for skip-gram training.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TrainingPair {
    pub center: CodeId,
    pub context: CodeId,
}

/// Position pairs `(p, q)` with `q != p` and `|p - q| <= window` inside a
/// sequence of length `len`, ordered by `p` then `q`.
pub(crate) fn window_positions(len: usize, window: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..len).flat_map(move |p| {
        let lo = p.saturating_sub(window);
        let hi = (p + window).min(len.saturating_sub(1));
        (lo..=hi).filter(move |&q| q != p).map(move |q| (p, q))
    })
}

/// Number of pairs [`build_training_pairs`] emits for one sequence.
pub fn window_pair_count(len: usize, window: usize) -> usize {
    (0..len)
        .map(|p| {
            let lo = p.saturating_sub(window);
            let hi = (p + window).min(len - 1);
            hi - lo
        })
        .sum()
}

/// Every (center, context) pair within `window` positions of each other in
/// the same admission. Pairs never span two admissions.
pub fn build_training_pairs(admissions: &[Admission], window: usize) -> Vec<TrainingPair> {
    admissions
        .iter()
        .flat_map(|a| {
            window_positions(a.codes.len(), window).map(move |(p, q)| TrainingPair {
                center: a.codes[p].clone(),
                context: a.codes[q].clone(),
            })
        })
        .collect()
}
