//! The recurrent validity model.
//!
//! A single-layer LSTM reads `SOS, x_1, ..., x_{T-1}` and emits at step `t` a
//! sigmoid probability for every character; entry `x_t` estimates the chance
//! that the prefix `x_{1:t}` completes to a valid sequence. Dropout masks on
//! the recurrent state and on the output projection input are sampled once
//! per sequence and double as posterior draws over the weights.

mod cell;
pub mod checkpoint;
mod optim;
mod params;
mod rollout;

use rand::Rng;

pub use cell::{
    accumulate_gradient, backward, forward, loss, prefix_scores, sigmoid, step_loss, Scales, State, StepOutput,
    Stepper, Workspace, LOG_CLAMP,
};
pub use checkpoint::{load_checkpoint, load_checkpoint_for, save_checkpoint, Checkpoint};
pub use optim::{Optimizer, OptimizerKind, DEFAULT_LEARNING_RATE};
pub use params::{DropoutMask, Layout, ModelParams, DEFAULT_DROPOUT, DEFAULT_HIDDEN};
pub use rollout::{LstmRollout, PosteriorModel, Rollout};

use crate::alphabet::Sequence;
use crate::error::Result;

/// Every labeled sequence seen so far, in arrival order.
#[derive(Clone, Debug, Default)]
pub struct TrainingBuffer {
    items: Vec<(Sequence, bool)>,
}

impl TrainingBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn extend<I: IntoIterator<Item = (Sequence, bool)>>(&mut self, items: I) {
        self.items.extend(items);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[(Sequence, bool)] {
        &self.items
    }

    pub fn positives(&self) -> usize {
        self.items.iter().filter(|(_, y)| *y).count()
    }
}

/// Parameters plus optimizer, updated one minibatch at a time.
pub struct Trainer {
    pub params: ModelParams,
    pub optimizer: Optimizer,
    workspace: Workspace,
    grad: Vec<f64>,
}

impl Trainer {
    pub fn new(params: ModelParams, optimizer: Optimizer) -> Self {
        let workspace = Workspace::new(params.hidden());
        let grad = vec![0.0; params.len()];
        Self { params, optimizer, workspace, grad }
    }

    /// One optimizer step on the batch-mean loss; each sequence gets its own
    /// dropout mask drawn from `rng`. Returns the mean per-sequence loss.
    pub fn train_batch<R: Rng + ?Sized>(&mut self, sequences: &[Sequence], labels: &[bool], rng: &mut R) -> Result<f64> {
        assert_eq!(sequences.len(), labels.len(), "sequence and label counts differ");
        if sequences.is_empty() {
            return Ok(0.0);
        }
        self.grad.fill(0.0);
        let mut total = 0.0;
        for (seq, &label) in sequences.iter().zip(labels) {
            let mask = DropoutMask::for_params(rng, &self.params);
            total += accumulate_gradient(&self.params, Some(&mask), seq, label, &mut self.workspace, &mut self.grad)?;
        }
        let scale = 1.0 / sequences.len() as f64;
        for g in &mut self.grad {
            *g *= scale;
        }
        self.optimizer.apply_update(&mut self.params.data, &self.grad)?;
        Ok(total * scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn random_params<R: Rng>(r: &mut R, c: usize, h: usize, scale: f64) -> ModelParams {
        let n = Layout::new(c, h).len;
        let data = (0..n).map(|_| r.gen_range(-scale..scale)).collect();
        ModelParams::from_data(c, h, 0.3, data).unwrap()
    }

    #[test]
    fn zero_params_output_one_half() {
        let p = ModelParams::zeros(5, 7, 0.2).unwrap();
        let seq = Sequence::new(vec![0, 3, 4, 1]);
        for out in forward(&p, None, &seq).unwrap() {
            assert!(out.0.iter().all(|&v| v == 0.5));
        }
        let mut r = rng::stream(0, 0);
        let mask = DropoutMask::for_params(&mut r, &p);
        for out in forward(&p, Some(&mask), &seq).unwrap() {
            assert!(out.0.iter().all(|&v| v == 0.5));
        }
    }

    #[test]
    fn forward_is_deterministic() {
        let mut r = rng::stream(1, 0);
        let p = random_params(&mut r, 4, 6, 0.8);
        let mask = DropoutMask::for_params(&mut r, &p);
        let seq = Sequence::new(vec![1, 2, 3, 0, 1]);
        assert_eq!(forward(&p, Some(&mask), &seq).unwrap(), forward(&p, Some(&mask), &seq).unwrap());
    }

    #[test]
    fn outputs_depend_only_on_earlier_symbols() {
        let mut r = rng::stream(2, 0);
        let p = random_params(&mut r, 4, 6, 1.0);
        let mask = DropoutMask::for_params(&mut r, &p);
        let a = Sequence::new(vec![1, 2, 3, 0, 1]);
        let b = Sequence::new(vec![1, 2, 0, 3, 3]);
        let fa = forward(&p, Some(&mask), &a).unwrap();
        let fb = forward(&p, Some(&mask), &b).unwrap();
        // shared prefix "1 2": steps 1..=3 see identical inputs
        assert_eq!(fa[..3], fb[..3]);
        assert_ne!(fa[3], fb[3]);
    }

    #[test]
    fn prefix_scores_select_forward_entries() {
        let mut r = rng::stream(3, 0);
        let p = random_params(&mut r, 4, 5, 1.0);
        let seq = Sequence::new(vec![3, 1, 0, 2]);
        let outs = forward(&p, None, &seq).unwrap();
        let scores = prefix_scores(&p, None, &seq).unwrap();
        for (t, s) in scores.iter().enumerate() {
            assert!((outs[t].0[seq.symbols()[t] as usize] - s).abs() < 1e-15);
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let p = ModelParams::zeros(3, 4, 0.2).unwrap();
        assert!(forward(&p, None, &Sequence::new(vec![0, 5])).is_err());
        let mask = DropoutMask::ones(7);
        assert!(forward(&p, Some(&mask), &Sequence::new(vec![0, 1])).is_err());
    }

    #[test]
    fn loss_closed_forms() {
        assert!((step_loss(0.5, true) * 2.0 - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
        let zero_params = ModelParams::zeros(3, 4, 0.2).unwrap();
        let l = loss(&zero_params, None, &Sequence::new(vec![0, 1]), true).unwrap();
        assert!((l - 1.3862943611198906).abs() < 1e-12);
        let l = step_loss(0.9, false) + step_loss(0.2, false);
        assert!((l - 2.5257286443082556).abs() < 1e-12);
        assert!(step_loss(1.0, true) < 1e-6);
        assert!(step_loss(0.0, true).is_finite());
    }

    #[test]
    fn masked_output_units_get_zero_gradient() {
        let mut r = rng::stream(4, 0);
        let p = random_params(&mut r, 4, 6, 0.7);
        let mut mask = DropoutMask::ones(6);
        mask.output[2] = 0.0;
        mask.hidden[4] = 0.0;
        let seq = Sequence::new(vec![0, 1, 2, 3, 1]);
        let (_, grad) = backward(&p, Some(&mask), &seq, true).unwrap();
        let l = p.layout();
        for k in 0..4 {
            assert_eq!(grad[l.w_out.start + k * 6 + 2], 0.0);
        }
        // the dropped recurrent unit feeds no gate
        for row in 0..24 {
            assert_eq!(grad[l.w_rec.start + row * 6 + 4], 0.0);
        }
    }

    #[test]
    fn descent_step_reduces_loss() {
        let mut r = rng::stream(5, 0);
        let p = random_params(&mut r, 4, 8, 0.5);
        let mask = DropoutMask::for_params(&mut r, &p);
        let seq = Sequence::new(vec![2, 0, 1, 3, 3]);
        let (l0, grad) = backward(&p, Some(&mask), &seq, false).unwrap();
        let mut q = p.clone();
        for (w, g) in q.data_mut().iter_mut().zip(&grad) {
            *w -= 1e-3 * g;
        }
        let l1 = loss(&q, Some(&mask), &seq, false).unwrap();
        assert!(l1 < l0, "{l1} >= {l0}");
    }

    #[test]
    fn backward_loss_matches_forward_loss() {
        let mut r = rng::stream(6, 0);
        let p = random_params(&mut r, 4, 8, 0.5);
        let seq = Sequence::new(vec![2, 0, 1, 3, 3]);
        let (l, _) = backward(&p, None, &seq, true).unwrap();
        assert!((l - loss(&p, None, &seq, true).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn training_is_reproducible() {
        let run = || {
            let mut r = rng::stream(7, 0);
            let p = ModelParams::init(4, 8, 0.2, &mut r).unwrap();
            let mut trainer = Trainer::new(p, Optimizer::adam(1e-2, Layout::new(4, 8).len));
            let seqs: Vec<Sequence> = (0..16).map(|_| rng::uniform_sequence(&mut r, 4, 5)).collect();
            let labels: Vec<bool> = seqs.iter().map(|s| s.symbols()[0] < 2).collect();
            for _ in 0..5 {
                trainer.train_batch(&seqs, &labels, &mut r).unwrap();
            }
            trainer.params
        };
        assert_eq!(run().data(), run().data());
    }

    #[test]
    fn rollout_matches_forward() {
        let mut r = rng::stream(8, 0);
        let p = random_params(&mut r, 4, 6, 1.0);
        let seq = Sequence::new(vec![1, 3, 0, 2]);
        let expected = forward(&p, None, &seq).unwrap();
        let mut roll = p.mean();
        let mut out = vec![0.0; 4];
        let mut prev = None;
        for (t, &x) in seq.symbols().iter().enumerate() {
            roll.step(prev, &mut out);
            assert_eq!(out, expected[t].0);
            prev = Some(x);
        }
        roll.reset();
        roll.step(None, &mut out);
        assert_eq!(out, expected[0].0);
    }

    #[test]
    fn buffer_is_append_only() {
        let mut b = TrainingBuffer::new();
        b.extend(vec![(Sequence::new(vec![0]), true), (Sequence::new(vec![1]), false)]);
        b.extend(vec![(Sequence::new(vec![2]), true)]);
        assert_eq!(b.len(), 3);
        assert_eq!(b.positives(), 2);
        assert_eq!(b.items()[1].0, Sequence::new(vec![1]));
    }
}
