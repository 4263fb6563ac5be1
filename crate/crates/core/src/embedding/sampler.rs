use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use super::EmbeddingError;

/// Draws vocabulary indices from the smoothed unigram distribution
/// `count^exponent / Σ count^exponent`.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    dist: WeightedIndex<f64>,
    probabilities: Vec<f64>,
}

impl NegativeSampler {
    pub fn new(counts: &[u64], exponent: f64) -> Result<Self, EmbeddingError> {
        let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(exponent)).collect();
        let total: f64 = weights.iter().sum();
        let dist = WeightedIndex::new(&weights)
            .map_err(|e| EmbeddingError::InvalidConfig(format!("negative sampler: {e}")))?;
        Ok(NegativeSampler {
            probabilities: weights.iter().map(|w| w / total).collect(),
            dist,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.dist.sample(rng)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn smoothing_flattens_the_distribution() {
        let s = NegativeSampler::new(&[16, 1], 0.75).unwrap();
        let p = s.probabilities();
        assert!((p[0] - 8.0 / 9.0).abs() < 1e-12);
        assert!((p[1] - 1.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn empty_or_all_zero_counts_are_rejected() {
        assert!(NegativeSampler::new(&[], 0.75).is_err());
        assert!(NegativeSampler::new(&[0, 0], 0.75).is_err());
    }

    // Pearson chi-square against the smoothed unigram at 10^6 draws. With 7
    // degrees of freedom the 0.999 quantile is 24.32.
    #[test]
    fn draws_follow_smoothed_unigram() {
        let counts = [1000, 500, 250, 120, 60, 30, 10, 1];
        let s = NegativeSampler::new(&counts, 0.75).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 1_000_000;
        let mut seen = [0u64; 8];
        for _ in 0..n {
            seen[s.sample(&mut rng)] += 1;
        }
        let chi2: f64 = seen
            .iter()
            .zip(s.probabilities())
            .map(|(&o, &p)| {
                let e = p * n as f64;
                (o as f64 - e).powi(2) / e
            })
            .sum();
        assert!(chi2 < 24.32, "chi2 = {chi2}");
    }
}
