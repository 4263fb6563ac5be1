use crate::data::Admission;

/// Controls grouped by how many leading codes they share with a case.
///
/// `levels[t]` holds indices (into the validation group the index was built
/// from) of controls whose first `t` codes equal the case's first `t` codes;
/// `levels[0]` is the whole group and `levels[n]`, with `n` the case's code
/// count, the controls matching the full sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixMatchIndex {
    levels: Vec<Vec<usize>>,
    depth: usize,
}

impl PrefixMatchIndex {
    pub fn levels(&self) -> &[Vec<usize>] {
        &self.levels
    }

    pub fn level(&self, t: usize) -> &[usize] {
        &self.levels[t]
    }

    /// Largest `t` with a non-empty level.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn case_len(&self) -> usize {
        self.levels.len() - 1
    }

    /// Controls matching every code of the case (possibly none).
    pub fn full_set(&self) -> &[usize] {
        &self.levels[self.case_len()]
    }

    /// Controls at the deepest partially matched level, when no control
    /// matches the full sequence and at least the first code matched.
    pub fn matched(&self) -> &[usize] {
        if self.full_set().is_empty() && self.depth >= 1 {
            &self.levels[self.depth]
        } else {
            &[]
        }
    }
}

/// Builds the prefix levels by successive refinement: `levels[t]` keeps the
/// members of `levels[t-1]` whose `t`-th code equals the case's.
pub fn prefix_match_levels(case: &Admission, group: &[&Admission]) -> PrefixMatchIndex {
    let n = case.codes.len();
    let mut levels = Vec::with_capacity(n + 1);
    levels.push((0..group.len()).collect::<Vec<_>>());
    for t in 1..=n {
        let want = &case.codes[t - 1];
        let next: Vec<usize> = levels[t - 1]
            .iter()
            .copied()
            .filter(|&i| group[i].codes.get(t - 1) == Some(want))
            .collect();
        levels.push(next);
    }
    let depth = levels.iter().rposition(|l| !l.is_empty()).unwrap_or(0);
    PrefixMatchIndex { levels, depth }
}
