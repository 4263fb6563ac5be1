//! Skip-gram code embeddings trained with negative sampling, and the
//! cosine-distance primitive the matchers are built on.
//!
//! Context for a code is the other codes recorded in the same admission,
//! within a symmetric positional window. The trained *input* vectors are the
//! canonical representation of a code; output vectors are kept alongside so
//! training can be resumed from a saved model.

mod io;
mod pairs;
mod sampler;
mod sgns;
mod train;

use std::collections::HashMap;

use thiserror::Error;

use crate::codes::CodeId;

pub use io::{load_model, output_path, save_model};
pub use pairs::{build_training_pairs, window_pair_count, TrainingPair};
pub use sampler::NegativeSampler;
pub use sgns::{sgns_loss_and_gradient, SgnsGradient};
pub use train::{train_skipgram, train_skipgram_with_stats, TrainingConfig, TrainingStats};

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("vector lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("non-finite vector entry")]
    NonFinite,
    #[error("cosine distance is undefined for a zero vector")]
    ZeroVector,
    #[error("training corpus has no codes")]
    EmptyCorpus,
    #[error("code {0} is not in the embedding vocabulary")]
    UnknownCode(CodeId),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("{path}: line {line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// `1 - cos(a, b)`, in `[0, 2]`.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> Result<f64, EmbeddingError> {
    if a.len() != b.len() {
        return Err(EmbeddingError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let (mut dot, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        aa += x * x;
        bb += y * y;
    }
    if !(dot.is_finite() && aa.is_finite() && bb.is_finite()) {
        return Err(EmbeddingError::NonFinite);
    }
    if aa == 0.0 || bb == 0.0 {
        return Err(EmbeddingError::ZeroVector);
    }
    Ok((1.0 - dot / (aa.sqrt() * bb.sqrt())).clamp(0.0, 2.0))
}

/// Dense vectors for a fixed code vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    dim: usize,
    vocab: Vec<CodeId>,
    counts: Vec<u64>,
    index: HashMap<CodeId, usize>,
    input: Vec<f64>,
    output: Vec<f64>,
}

impl EmbeddingModel {
    /// Assembles a model from row-major `vocab.len() x dim` matrices.
    pub fn from_parts(
        dim: usize,
        vocab: Vec<CodeId>,
        counts: Vec<u64>,
        input: Vec<f64>,
        output: Vec<f64>,
    ) -> Result<Self, EmbeddingError> {
        if dim == 0 {
            return Err(EmbeddingError::InvalidConfig("dim must be positive".into()));
        }
        let expected = vocab.len() * dim;
        for (len, want) in [
            (input.len(), expected),
            (output.len(), expected),
            (counts.len(), vocab.len()),
        ] {
            if len != want {
                return Err(EmbeddingError::LengthMismatch { left: len, right: want });
            }
        }
        if input.iter().chain(&output).any(|x| !x.is_finite()) {
            return Err(EmbeddingError::NonFinite);
        }
        let mut index = HashMap::with_capacity(vocab.len());
        for (i, code) in vocab.iter().enumerate() {
            if index.insert(code.clone(), i).is_some() {
                return Err(EmbeddingError::InvalidConfig(format!("duplicate code {code}")));
            }
        }
        Ok(EmbeddingModel {
            dim,
            vocab,
            counts,
            index,
            input,
            output,
        })
    }

    /// A model from explicit input vectors (output vectors zeroed). Handy for
    /// hand-built toy embeddings.
    pub fn from_vectors<I, S>(dim: usize, vectors: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: AsRef<str>,
    {
        let mut vocab = Vec::new();
        let mut input = Vec::new();
        for (code, v) in vectors {
            if v.len() != dim {
                return Err(EmbeddingError::LengthMismatch {
                    left: v.len(),
                    right: dim,
                });
            }
            let code = CodeId::new(code.as_ref()).map_err(|e| EmbeddingError::InvalidConfig(e.to_string()))?;
            vocab.push(code);
            input.extend(v);
        }
        let n = vocab.len();
        Self::from_parts(dim, vocab, vec![0; n], input, vec![0.0; n * dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn vocab(&self) -> &[CodeId] {
        &self.vocab
    }

    /// Corpus frequency of each vocabulary entry (zero for loaded models).
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn contains(&self, code: &CodeId) -> bool {
        self.index.contains_key(code)
    }

    pub fn index_of(&self, code: &CodeId) -> Option<usize> {
        self.index.get(code).copied()
    }

    pub fn vector(&self, code: &CodeId) -> Option<&[f64]> {
        self.index_of(code).map(|i| self.input_row(i))
    }

    /// Like [`vector`](Self::vector) but an error for unknown codes.
    pub fn require(&self, code: &CodeId) -> Result<&[f64], EmbeddingError> {
        self.vector(code)
            .ok_or_else(|| EmbeddingError::UnknownCode(code.clone()))
    }

    pub fn output_vector(&self, code: &CodeId) -> Option<&[f64]> {
        self.index_of(code).map(|i| self.output_row(i))
    }

    pub fn input_row(&self, i: usize) -> &[f64] {
        &self.input[i * self.dim..(i + 1) * self.dim]
    }

    pub fn output_row(&self, i: usize) -> &[f64] {
        &self.output[i * self.dim..(i + 1) * self.dim]
    }

    pub fn input_matrix(&self) -> &[f64] {
        &self.input
    }

    pub fn output_matrix(&self) -> &[f64] {
        &self.output
    }

    /// Cosine distance between the vectors of two codes.
    pub fn distance(&self, a: &CodeId, b: &CodeId) -> Result<f64, EmbeddingError> {
        cosine_distance(self.require(a)?, self.require(b)?)
    }

    /// Copy with every stored vector multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.input.iter_mut().for_each(|x| *x *= factor);
        out.output.iter_mut().for_each(|x| *x *= factor);
        out
    }

    /// The `k` nearest vocabulary codes to `code`, nearest first; codes with
    /// zero vectors are skipped.
    pub fn nearest(&self, code: &CodeId, k: usize) -> Result<Vec<(CodeId, f64)>, EmbeddingError> {
        let query = self.require(code)?;
        let mut scored: Vec<(CodeId, f64)> = self
            .vocab
            .iter()
            .enumerate()
            .filter(|(_, c)| *c != code)
            .filter_map(|(i, c)| cosine_distance(query, self.input_row(i)).ok().map(|d| (c.clone(), d)))
            .collect();
        scored.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        scored.truncate(k);
        Ok(scored)
    }
}
