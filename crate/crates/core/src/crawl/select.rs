use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use super::{CrawlConfig, CrawlError, SelectionMode};
use crate::graph::NodeId;

/// Selection probabilities for a frontier with scores `x`.
///
/// Each score is clamped to at least `epsilon`, mapped to
/// `f_i = (x_i / x_min) * p + (x_max / x_i) * (1 - p)` and the `f_i` are
/// pushed through a softmax.
pub fn selection_scores(scores: &[f64], p: f64, epsilon: f64) -> Result<Vec<f64>, CrawlError> {
    if scores.is_empty() {
        return Err(CrawlError::EmptyFrontier);
    }
    let x: Vec<f64> = scores
        .iter()
        .map(|&s| if s.is_nan() { epsilon } else { s.max(epsilon) })
        .collect();
    let x_min = x.iter().copied().fold(f64::INFINITY, f64::min);
    let x_max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let f: Vec<f64> = x.iter().map(|&xi| (xi / x_min) * p + (x_max / xi) * (1.0 - p)).collect();
    let f_max = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = f.iter().map(|&fi| (fi - f_max).exp()).collect();
    let z: f64 = e.iter().sum();
    Ok(e.into_iter().map(|ei| ei / z).collect())
}

/// Picks the next node from `(id, score)` pairs.
///
/// `ArgmaxP` returns the most probable node, breaking ties by the smallest
/// id. `Sample` draws from the distribution with candidates taken in id
/// order, so a seeded `rng` gives a reproducible choice.
pub fn select_node<R: Rng + ?Sized>(
    frontier: &[(NodeId, f64)],
    config: &CrawlConfig,
    rng: &mut R,
) -> Result<NodeId, CrawlError> {
    let mut sorted: Vec<&(NodeId, f64)> = frontier.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    let scores: Vec<f64> = sorted.iter().map(|(_, s)| *s).collect();
    let probs = selection_scores(&scores, config.p, config.epsilon)?;
    let index = match config.selection_mode {
        SelectionMode::ArgmaxP => {
            let mut best = 0;
            for (i, &pi) in probs.iter().enumerate() {
                if pi > probs[best] {
                    best = i;
                }
            }
            best
        }
        SelectionMode::Sample => WeightedIndex::new(&probs)
            .map_err(|e| CrawlError::InvalidConfig(format!("selection weights: {e}")))?
            .sample(rng),
    };
    Ok(sorted[index].0.clone())
}
