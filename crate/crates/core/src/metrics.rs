//! Ranking quality of prefix scores.

use crate::error::{Error, Result};
use crate::rnn::{prefix_scores, ModelParams};
use crate::strategies::LabeledBatch;

/// Probability that a random positive outranks a random negative, ties
/// counting one half, computed from mid-rank sums.
pub fn auc(positive: &[f64], negative: &[f64]) -> Result<f64> {
    if positive.is_empty() {
        return Err(Error::EmptyClass("positive"));
    }
    if negative.is_empty() {
        return Err(Error::EmptyClass("negative"));
    }
    if positive.iter().chain(negative).any(|s| s.is_nan()) {
        return Err(Error::Domain("NaN score".into()));
    }
    let mut all: Vec<(f64, bool)> =
        positive.iter().map(|&s| (s, true)).chain(negative.iter().map(|&s| (s, false))).collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("no NaN"));

    // doubled rank sums keep everything in integers: a tie group occupying
    // positions i..i+g (0-based) has doubled mid-rank 2i + g + 1
    let mut doubled_rank_sum: u128 = 0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        let g = (j - i) as u128;
        let positives_in_group = all[i..j].iter().filter(|e| e.1).count() as u128;
        doubled_rank_sum += positives_in_group * (2 * i as u128 + g + 1);
        i = j;
    }
    let p = positive.len() as u128;
    let n = negative.len() as u128;
    let doubled_u = doubled_rank_sum - p * (p + 1);
    Ok(doubled_u as f64 / (2 * p * n) as f64)
}

/// Mean-mode scores `o_t|_{x_t}` for every sequence and step, with labels.
#[derive(Clone, Debug, PartialEq)]
pub struct PrefixScores {
    pub scores: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
}

impl PrefixScores {
    pub fn from_model(params: &ModelParams, batch: &LabeledBatch) -> Result<Self> {
        let scores = batch.sequences.iter().map(|s| prefix_scores(params, None, s)).collect::<Result<Vec<_>>>()?;
        Ok(Self { scores, labels: batch.labels.clone() })
    }

    pub fn length(&self) -> usize {
        self.scores.first().map_or(0, Vec::len)
    }

    /// AUC of the step-`t` scores (0-based `t`) against the full-sequence labels.
    pub fn auc_at(&self, t: usize) -> Result<f64> {
        let (mut pos, mut neg) = (Vec::new(), Vec::new());
        for (row, &y) in self.scores.iter().zip(&self.labels) {
            let s = *row.get(t).ok_or_else(|| Error::Shape("ragged prefix scores".into()))?;
            if y {
                pos.push(s);
            } else {
                neg.push(s);
            }
        }
        auc(&pos, &neg)
    }

    pub fn auc_per_step(&self) -> Result<Vec<f64>> {
        (0..self.length()).map(|t| self.auc_at(t)).collect()
    }

    /// Unweighted mean of the per-step AUCs.
    pub fn average_auc(&self) -> Result<f64> {
        let per_step = self.auc_per_step()?;
        if per_step.is_empty() {
            return Err(Error::Shape("no steps to score".into()));
        }
        Ok(per_step.iter().sum::<f64>() / per_step.len() as f64)
    }
}

pub fn average_prefix_auc(params: &ModelParams, validation: &LabeledBatch) -> Result<f64> {
    PrefixScores::from_model(params, validation)?.average_auc()
}
