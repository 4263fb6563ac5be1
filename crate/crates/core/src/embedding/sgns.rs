use super::EmbeddingError;

/// Loss value and its gradient with respect to every input vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsGradient {
    pub loss: f64,
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln σ(x)` without overflow for large `|x|`.
pub(crate) fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Negative-sampling objective for one observation:
///
/// `loss = -ln σ(u·v) - Σ_k ln σ(-u_k·v)`
///
/// where `v` is the center (input) vector, `u` the context (output) vector
/// and `u_k` the output vectors of the sampled negatives.
pub fn sgns_loss_and_gradient(
    center: &[f64],
    context: &[f64],
    negatives: &[&[f64]],
) -> Result<SgnsGradient, EmbeddingError> {
    let dim = center.len();
    for v in std::iter::once(context).chain(negatives.iter().copied()) {
        if v.len() != dim {
            return Err(EmbeddingError::LengthMismatch {
                left: dim,
                right: v.len(),
            });
        }
    }
    let all_finite = std::iter::once(center)
        .chain(std::iter::once(context))
        .chain(negatives.iter().copied())
        .all(|v| v.iter().all(|x| x.is_finite()));
    if !all_finite {
        return Err(EmbeddingError::NonFinite);
    }

    let pos = dot(context, center);
    let mut loss = -log_sigmoid(pos);
    // d/dx[-ln σ(x)] = σ(x) - 1
    let pos_coeff = sigmoid(pos) - 1.0;
    let mut d_center: Vec<f64> = context.iter().map(|u| pos_coeff * u).collect();
    let d_context: Vec<f64> = center.iter().map(|v| pos_coeff * v).collect();

    let mut d_negatives = Vec::with_capacity(negatives.len());
    for neg in negatives {
        let s = dot(neg, center);
        loss -= log_sigmoid(-s);
        // d/dx[-ln σ(-x)] = σ(x)
        let coeff = sigmoid(s);
        for (g, u) in d_center.iter_mut().zip(neg.iter()) {
            *g += coeff * u;
        }
        d_negatives.push(center.iter().map(|v| coeff * v).collect());
    }

    Ok(SgnsGradient {
        loss,
        center: d_center,
        context: d_context,
        negatives: d_negatives,
    })
}
