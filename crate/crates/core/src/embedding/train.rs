use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::pairs::{window_pair_count, window_positions};
use super::sampler::NegativeSampler;
use super::sgns::{log_sigmoid, sigmoid};
use super::{EmbeddingError, EmbeddingModel};
use crate::codes::CodeId;
use crate::data::Admission;

/// Redraws allowed when a negative sample hits the positive context code.
const NEGATIVE_REDRAWS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub dim: usize,
    /// Context reaches this many positions either side of the center code.
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub initial_learning_rate: f64,
    /// Floor of the linear learning-rate decay.
    pub min_learning_rate: f64,
    pub unigram_exponent: f64,
    pub seed: u64,
    /// 1 trains deterministically; more workers share weights without locks
    /// and results then depend on thread scheduling.
    pub workers: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            dim: 100,
            window: 5,
            negatives: 5,
            epochs: 5,
            initial_learning_rate: 0.025,
            min_learning_rate: 1e-4,
            unigram_exponent: 0.75,
            seed: 0,
            workers: 1,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), EmbeddingError> {
        let fail = |m: &str| Err(EmbeddingError::InvalidConfig(m.to_string()));
        if self.dim == 0 {
            return fail("dim must be positive");
        }
        if self.window == 0 {
            return fail("window must be positive");
        }
        if self.negatives == 0 {
            return fail("negatives must be positive");
        }
        if !(self.initial_learning_rate > 0.0 && self.min_learning_rate > 0.0) {
            return fail("learning rates must be positive");
        }
        if self.min_learning_rate > self.initial_learning_rate {
            return fail("min_learning_rate exceeds initial_learning_rate");
        }
        if !(self.unigram_exponent.is_finite() && self.unigram_exponent >= 0.0) {
            return fail("unigram exponent must be finite and non-negative");
        }
        if self.workers == 0 {
            return fail("workers must be at least 1");
        }
        Ok(())
    }

    fn learning_rate(&self, progress: f64) -> f64 {
        let lr = self.initial_learning_rate
            - (self.initial_learning_rate - self.min_learning_rate) * progress.clamp(0.0, 1.0);
        lr.max(self.min_learning_rate)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingStats {
    pub vocab_size: usize,
    /// Training pairs per epoch.
    pub pair_count: u64,
    /// Mean per-pair loss of each epoch.
    pub epoch_losses: Vec<f64>,
}

impl TrainingStats {
    pub fn final_loss(&self) -> Option<f64> {
        self.epoch_losses.last().copied()
    }
}

pub fn train_skipgram(admissions: &[Admission], cfg: &TrainingConfig) -> Result<EmbeddingModel, EmbeddingError> {
    train_skipgram_with_stats(admissions, cfg).map(|(m, _)| m)
}

/// Vocabulary sorted by descending frequency, ties by code.
fn build_vocab(admissions: &[Admission]) -> (Vec<CodeId>, Vec<u64>) {
    let mut counts: HashMap<&CodeId, u64> = HashMap::new();
    for c in admissions.iter().flat_map(|a| &a.codes) {
        *counts.entry(c).or_default() += 1;
    }
    let mut entries: Vec<(&CodeId, u64)> = counts.into_iter().collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    entries.into_iter().map(|(c, n)| (c.clone(), n)).unzip()
}

/// f64 weights shared between training workers. Updates are plain
/// load/store pairs, so concurrent workers may overwrite each other's
/// updates; with a single worker training is exactly sequential SGD.
struct SharedWeights {
    dim: usize,
    input: Vec<AtomicU64>,
    output: Vec<AtomicU64>,
}

impl SharedWeights {
    fn new(dim: usize, input: &[f64], output: &[f64]) -> Self {
        let wrap = |v: &[f64]| v.iter().map(|x| AtomicU64::new(x.to_bits())).collect();
        SharedWeights {
            dim,
            input: wrap(input),
            output: wrap(output),
        }
    }

    fn load(cells: &[AtomicU64], row: usize, dim: usize, buf: &mut [f64]) {
        for (b, cell) in buf.iter_mut().zip(&cells[row * dim..(row + 1) * dim]) {
            *b = f64::from_bits(cell.load(Ordering::Relaxed));
        }
    }

    /// `row += scale * delta`
    fn add(cells: &[AtomicU64], row: usize, dim: usize, scale: f64, delta: &[f64]) {
        for (cell, d) in cells[row * dim..(row + 1) * dim].iter().zip(delta) {
            let x = f64::from_bits(cell.load(Ordering::Relaxed));
            cell.store((x + scale * d).to_bits(), Ordering::Relaxed);
        }
    }

    fn into_vecs(self) -> (Vec<f64>, Vec<f64>) {
        let unwrap = |v: Vec<AtomicU64>| v.into_iter().map(|c| f64::from_bits(c.into_inner())).collect();
        (unwrap(self.input), unwrap(self.output))
    }

    /// One SGD step on the negative-sampling loss for `center` with the
    /// positive `context` and the given negatives. Returns the loss before
    /// the update.
    fn step(&self, center: usize, context: usize, negatives: &[usize], lr: f64, scratch: &mut Scratch) -> f64 {
        let dim = self.dim;
        Self::load(&self.input, center, dim, &mut scratch.center);
        scratch.center_grad.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        let targets = std::iter::once((context, true)).chain(negatives.iter().map(|&n| (n, false)));
        for (target, positive) in targets {
            Self::load(&self.output, target, dim, &mut scratch.target);
            let s: f64 = scratch.center.iter().zip(&scratch.target).map(|(a, b)| a * b).sum();
            // Derivative of the loss term with respect to s.
            let coeff = if positive {
                loss -= log_sigmoid(s);
                sigmoid(s) - 1.0
            } else {
                loss -= log_sigmoid(-s);
                sigmoid(s)
            };
            for (g, u) in scratch.center_grad.iter_mut().zip(&scratch.target) {
                *g += coeff * u;
            }
            Self::add(&self.output, target, dim, -lr * coeff, &scratch.center);
        }
        Self::add(&self.input, center, dim, -lr, &scratch.center_grad);
        loss
    }
}

struct Scratch {
    center: Vec<f64>,
    target: Vec<f64>,
    center_grad: Vec<f64>,
}

impl Scratch {
    fn new(dim: usize) -> Self {
        Scratch {
            center: vec![0.0; dim],
            target: vec![0.0; dim],
            center_grad: vec![0.0; dim],
        }
    }
}

struct Job<'a> {
    weights: &'a SharedWeights,
    sampler: &'a NegativeSampler,
    cfg: &'a TrainingConfig,
    total_steps: u64,
    progress: &'a AtomicU64,
}

impl Job<'_> {
    /// Runs every epoch over `shard`; returns per-epoch loss sums.
    fn run(&self, shard: &[Vec<usize>], mut rng: ChaCha8Rng) -> Vec<f64> {
        let mut scratch = Scratch::new(self.cfg.dim);
        let mut negatives = vec![0usize; self.cfg.negatives];
        let mut epoch_losses = Vec::with_capacity(self.cfg.epochs);
        for _ in 0..self.cfg.epochs {
            let mut loss = 0.0;
            for sentence in shard {
                let n_pairs = window_pair_count(sentence.len(), self.cfg.window) as u64;
                if n_pairs == 0 {
                    continue;
                }
                let done = self.progress.fetch_add(n_pairs, Ordering::Relaxed);
                let lr = self.cfg.learning_rate(done as f64 / self.total_steps as f64);
                for (p, q) in window_positions(sentence.len(), self.cfg.window) {
                    let context = sentence[q];
                    for slot in negatives.iter_mut() {
                        let mut draw = self.sampler.sample(&mut rng);
                        for _ in 0..NEGATIVE_REDRAWS {
                            if draw != context {
                                break;
                            }
                            draw = self.sampler.sample(&mut rng);
                        }
                        *slot = draw;
                    }
                    loss += self.weights.step(sentence[p], context, &negatives, lr, &mut scratch);
                }
            }
            epoch_losses.push(loss);
        }
        epoch_losses
    }
}

/// Trains skip-gram vectors over the admissions' code sequences.
pub fn train_skipgram_with_stats(
    admissions: &[Admission],
    cfg: &TrainingConfig,
) -> Result<(EmbeddingModel, TrainingStats), EmbeddingError> {
    cfg.validate()?;
    let (vocab, counts) = build_vocab(admissions);
    if vocab.is_empty() {
        return Err(EmbeddingError::EmptyCorpus);
    }
    let index: HashMap<&CodeId, usize> = vocab.iter().enumerate().map(|(i, c)| (c, i)).collect();
    let corpus: Vec<Vec<usize>> = admissions
        .iter()
        .map(|a| a.codes.iter().map(|c| index[c]).collect())
        .collect();
    let pair_count: u64 = corpus
        .iter()
        .map(|s| window_pair_count(s.len(), cfg.window) as u64)
        .sum();

    let dim = cfg.dim;
    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let bound = 0.5 / dim as f64;
    let input: Vec<f64> = (0..vocab.len() * dim)
        .map(|_| init_rng.random_range(-bound..bound))
        .collect();
    let output = vec![0.0; vocab.len() * dim];

    let sampler = NegativeSampler::new(&counts, cfg.unigram_exponent)?;
    let weights = SharedWeights::new(dim, &input, &output);
    let progress = AtomicU64::new(0);
    let job = Job {
        weights: &weights,
        sampler: &sampler,
        cfg,
        total_steps: (pair_count * cfg.epochs as u64).max(1),
        progress: &progress,
    };
    let worker_rng = |w: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(w as u64 + 1);
        rng
    };

    let loss_sums: Vec<f64> = if cfg.workers == 1 {
        job.run(&corpus, worker_rng(0))
    } else {
        let chunk = corpus.len().div_ceil(cfg.workers).max(1);
        let per_worker: Vec<Vec<f64>> = std::thread::scope(|scope| {
            let handles: Vec<_> = corpus
                .chunks(chunk)
                .enumerate()
                .map(|(w, shard)| {
                    let job = &job;
                    let rng = worker_rng(w);
                    scope.spawn(move || job.run(shard, rng))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("training worker panicked"))
                .collect()
        });
        (0..cfg.epochs).map(|e| per_worker.iter().map(|l| l[e]).sum()).collect()
    };

    let (input, output) = weights.into_vecs();
    let stats = TrainingStats {
        vocab_size: vocab.len(),
        pair_count,
        epoch_losses: loss_sums
            .iter()
            .map(|l| if pair_count == 0 { 0.0 } else { l / pair_count as f64 })
            .collect(),
    };
    log::info!(
        "trained {} codes over {} pairs/epoch; final mean loss {:.4}",
        stats.vocab_size,
        stats.pair_count,
        stats.final_loss().unwrap_or(f64::NAN)
    );
    Ok((EmbeddingModel::from_parts(dim, vocab, counts, input, output)?, stats))
}
