//! Information-gain scoring and greedy active minibatch construction.
//!
//! For each candidate next character the gain is the mutual information
//! between the model's Bernoulli label and its weights, estimated from `K`
//! posterior draws: `H(mean_k q_k) - mean_k H(q_k)`. Sequences are grown one
//! character at a time, always appending the character with the largest
//! estimated gain. With the small `K` used in practice the estimate is noisy,
//! and that noise is what diversifies a minibatch.

use rand::Rng;

use crate::alphabet::{Alphabet, Sequence};
use crate::error::{Error, Result};
use crate::rng;
use crate::rnn::{PosteriorModel, Rollout};

pub const DEFAULT_POSTERIOR_SAMPLES: usize = 2;
pub const DEFAULT_WARMSTART: usize = 5_000;

/// Gains within this distance of the maximum count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

const ACTIVE_STREAM: u64 = 0x4143_5449_5645;
const WARMSTART_STREAM: u64 = 0x5741_524D;

/// `-q ln q - (1-q) ln(1-q)` in nats, with `0 ln 0 = 0`.
pub fn binary_entropy(q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!("probability {q} outside [0, 1]")));
    }
    Ok(entropy_unchecked(q))
}

fn entropy_unchecked(q: f64) -> f64 {
    let term = |p: f64| if p > 0.0 { -p * p.ln() } else { 0.0 };
    term(q) + term(1.0 - q)
}

/// Plug-in estimate of the information gain from posterior samples of one
/// Bernoulli probability. Samples are clamped into `[0, 1]`; an empty slice
/// carries no information.
pub fn info_gain(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let k = samples.len() as f64;
    let clamp = |q: f64| q.clamp(0.0, 1.0);
    let mean = samples.iter().copied().map(clamp).sum::<f64>() / k;
    let mean_entropy = samples.iter().map(|&q| entropy_unchecked(clamp(q))).sum::<f64>() / k;
    entropy_unchecked(mean.clamp(0.0, 1.0)) - mean_entropy
}

/// Per-step gains for every candidate character, and the character chosen.
#[derive(Clone, Debug, PartialEq)]
pub struct InfoGainTrace {
    pub gains: Vec<Vec<f64>>,
    pub chosen: Vec<u8>,
}

impl InfoGainTrace {
    /// Gain of the chosen character at each step.
    pub fn chosen_gains(&self) -> Vec<f64> {
        self.gains.iter().zip(&self.chosen).map(|(g, &c)| g[c as usize]).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AcquisitionBatch {
    pub sequences: Vec<Sequence>,
    pub traces: Vec<InfoGainTrace>,
    pub posterior_samples: usize,
}

/// Uniform choice among the indices whose value is within tolerance of the maximum.
pub fn argmax_with_ties<R: Rng + ?Sized>(values: &[f64], rng: &mut R) -> usize {
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> = (0..values.len()).filter(|&i| values[i] >= best - TIE_TOLERANCE).collect();
    ties[rng.gen_range(0..ties.len())]
}

/// Greedily builds one sequence of `length` characters from `draws`, each a
/// posterior sample held fixed for the whole sequence.
fn grow_sequence<D: Rollout, R: Rng + ?Sized>(draws: &mut [D], length: usize, rng: &mut R) -> (Sequence, InfoGainTrace) {
    let c = draws.first().map_or(0, |d| d.alphabet_size());
    let k = draws.len();
    let mut outputs = vec![vec![0.0; c]; k];
    let mut samples = vec![0.0; k];
    let mut seq = Sequence::default();
    let mut trace = InfoGainTrace { gains: Vec::with_capacity(length), chosen: Vec::with_capacity(length) };
    let mut prev = None;
    for _ in 0..length {
        for (draw, out) in draws.iter_mut().zip(&mut outputs) {
            draw.step(prev, out);
        }
        let gains: Vec<f64> = (0..c)
            .map(|ch| {
                for (s, out) in samples.iter_mut().zip(&outputs) {
                    *s = out[ch];
                }
                info_gain(&samples)
            })
            .collect();
        let choice = argmax_with_ties(&gains, rng) as u8;
        seq.push(choice);
        trace.gains.push(gains);
        trace.chosen.push(choice);
        prev = Some(choice);
    }
    (seq, trace)
}

/// `N` sequences grown greedily by estimated information gain, each under
/// its own `K` posterior draws.
pub fn build_active_minibatch<M: PosteriorModel>(
    model: &M,
    n: usize,
    posterior_samples: usize,
    length: usize,
    seed: u64,
) -> AcquisitionBatch {
    let mut sequences = Vec::with_capacity(n);
    let mut traces = Vec::with_capacity(n);
    for i in 0..n {
        let mut r = rng::stream(seed, rng::sublabel(ACTIVE_STREAM, i as u64));
        let mut draws: Vec<M::Draw<'_>> = (0..posterior_samples).map(|_| model.draw(&mut r)).collect();
        let (seq, trace) = if draws.is_empty() {
            // no draws: every gain is zero and every choice is a tie
            let c = model.alphabet_size();
            let mut seq = Sequence::default();
            let mut trace = InfoGainTrace { gains: Vec::new(), chosen: Vec::new() };
            for _ in 0..length {
                let ch = r.gen_range(0..c) as u8;
                seq.push(ch);
                trace.gains.push(vec![0.0; c]);
                trace.chosen.push(ch);
            }
            (seq, trace)
        } else {
            grow_sequence(&mut draws, length, &mut r)
        };
        sequences.push(seq);
        traces.push(trace);
    }
    AcquisitionBatch { sequences, traces, posterior_samples }
}

/// `n` i.i.d. uniform sequences, used before active acquisition starts.
pub fn build_warmstart_minibatch(n: usize, length: usize, alphabet: &Alphabet, seed: u64) -> Vec<Sequence> {
    let mut r = rng::stream(seed, WARMSTART_STREAM);
    (0..n).map(|_| rng::uniform_sequence(&mut r, alphabet.size(), length)).collect()
}


#[cfg(test)]
mod tests {
    use super::stub::TablePosterior;
    use super::*;
    use proptest::prelude::{prop_assert, prop_assert_eq, proptest};

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn entropy_values() {
        assert!((binary_entropy(0.5).unwrap() - LN2).abs() < 1e-15);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        // -0.2 ln 0.2 - 0.8 ln 0.8
        assert!((binary_entropy(0.2).unwrap() - 0.500_402_423_538_188_4).abs() < 1e-12);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.5).is_err());
        assert!(binary_entropy(f64::NAN).is_err());
    }

    #[test]
    fn gain_values() {
        assert_eq!(info_gain(&[0.5, 0.5]), 0.0);
        assert!((info_gain(&[0.0, 1.0]) - LN2).abs() < 1e-12);
        let expected = LN2 - (-0.1f64 * 0.1f64.ln() - 0.9 * 0.9f64.ln());
        assert!((info_gain(&[0.1, 0.9]) - expected).abs() < 1e-15);
        assert!((info_gain(&[0.1, 0.9]) - 0.3681).abs() < 1e-4);
        assert_eq!(info_gain(&[0.3]), 0.0);
        assert_eq!(info_gain(&[]), 0.0);
    }

    proptest! {
        #[test]
        fn gain_is_nonnegative(samples in proptest::collection::vec(0.0f64..=1.0, 1..16)) {
            prop_assert!(info_gain(&samples) >= -1e-12);
        }

        #[test]
        fn gain_is_exchangeable(samples in proptest::collection::vec(0.0f64..=1.0, 2..10), rot in 0usize..10) {
            let mut rotated = samples.clone();
            rotated.rotate_left(rot % samples.len());
            let mut reversed = samples.clone();
            reversed.reverse();
            prop_assert!((info_gain(&samples) - info_gain(&rotated)).abs() < 1e-12);
            prop_assert!((info_gain(&samples) - info_gain(&reversed)).abs() < 1e-12);
        }

        #[test]
        fn selection_is_unit_invariant(rows in proptest::collection::vec(proptest::collection::vec(0.0f64..=1.0, 2), 5)) {
            let nats: Vec<f64> = rows.iter().map(|r| info_gain(r)).collect();
            let bits: Vec<f64> = nats.iter().map(|g| g / LN2).collect();
            let arg = |v: &[f64]| v.iter().enumerate().fold(0, |b, (i, &x)| if x > v[b] { i } else { b });
            prop_assert_eq!(arg(&nats), arg(&bits));
        }
    }

    #[test]
    fn small_k_is_noisy_large_k_is_tight() {
        // posterior over q: 0.2 or 0.8 with equal weight; population gain
        let population = LN2 - binary_entropy(0.2).unwrap();
        let mut r = rng::stream(11, 0);
        let mut estimate = |k: usize| -> f64 {
            let s: Vec<f64> = (0..k).map(|_| if r.gen_bool(0.5) { 0.2 } else { 0.8 }).collect();
            info_gain(&s)
        };
        let tight: Vec<f64> = (0..50).map(|_| estimate(1000)).collect();
        let noisy: Vec<f64> = (0..50).map(|_| estimate(2)).collect();
        let spread = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
        };
        assert!(tight.iter().all(|g| (g - population).abs() < 0.01));
        assert!(spread(&noisy) > 10.0 * spread(&tight));
    }

    #[test]
    fn chooses_the_disagreeing_character() {
        // character 0 samples {0.1, 0.9}, character 1 samples {0.5, 0.5}
        let model = TablePosterior { table: vec![vec![0.1, 0.5], vec![0.9, 0.5]], random: false };
        let batch = build_active_minibatch(&model, 4, 2, 6, 3);
        for (seq, trace) in batch.sequences.iter().zip(&batch.traces) {
            assert!(seq.symbols().iter().all(|&c| c == 0));
            for g in &trace.gains {
                assert!((g[0] - 0.3681).abs() < 1e-4);
                assert_eq!(g[1], 0.0);
            }
        }
    }

    #[test]
    fn single_sample_degenerates_to_uniform_ties() {
        let model = TablePosterior { table: vec![vec![0.1, 0.5, 0.7], vec![0.9, 0.5, 0.2]], random: true };
        let batch = build_active_minibatch(&model, 200, 1, 5, 9);
        let mut counts = [0usize; 3];
        for trace in &batch.traces {
            assert!(trace.gains.iter().flatten().all(|&g| g == 0.0));
            for &c in &trace.chosen {
                counts[c as usize] += 1;
            }
        }
        // 1000 draws over 3 ties; each count within 5 sigma of 333
        assert!(counts.iter().all(|&n| (n as f64 - 333.3).abs() < 75.0), "{counts:?}");
    }

    #[test]
    fn two_sample_noise_explores_equal_gain_characters() {
        // both characters have population gain identical by symmetry
        let model = TablePosterior {
            table: vec![vec![0.2, 0.8], vec![0.8, 0.2], vec![0.5, 0.5], vec![0.3, 0.7]],
            random: true,
        };
        let batch = build_active_minibatch(&model, 64, 2, 8, 5);
        let mut seen = [false; 2];
        for seq in &batch.sequences {
            for &c in seq.symbols() {
                seen[c as usize] = true;
            }
        }
        assert_eq!(seen, [true, true]);
    }

    #[test]
    fn active_batch_is_reproducible_and_well_formed() {
        let mut r = rng::stream(1, 1);
        let params = crate::rnn::ModelParams::init(5, 6, 0.3, &mut r).unwrap();
        let a = build_active_minibatch(&params, 8, 2, 7, 42);
        let b = build_active_minibatch(&params, 8, 2, 7, 42);
        assert_eq!(a, b);
        assert!(a.sequences.iter().all(|s| s.len() == 7 && s.fits(5)));
        assert_eq!(a.posterior_samples, 2);
        for t in &a.traces {
            for (gains, &c) in t.gains.iter().zip(&t.chosen) {
                let best = gains.iter().copied().fold(f64::MIN, f64::max);
                assert!(gains[c as usize] >= best - 1e-12);
                assert!(gains.iter().all(|&g| g >= -1e-12));
            }
        }
        let zero = crate::rnn::ModelParams::zeros(5, 6, 0.3).unwrap();
        let z = build_active_minibatch(&zero, 3, 2, 4, 1);
        assert!(z.sequences.iter().all(|s| s.len() == 4));
    }

    #[test]
    fn warmstart_is_uniform_and_seeded() {
        let a = Alphabet::new("0123").unwrap();
        let batch = build_warmstart_minibatch(100_000, 3, &a, 7);
        assert_eq!(batch, build_warmstart_minibatch(100_000, 3, &a, 7));
        assert!(build_warmstart_minibatch(0, 3, &a, 7).is_empty());
        let (p, n) = (0.25f64, 100_000.0f64);
        let sigma = (n * p * (1.0 - p)).sqrt();
        for pos in 0..3 {
            let mut counts = [0usize; 4];
            for s in &batch {
                counts[s.symbols()[pos] as usize] += 1;
            }
            for &c in &counts {
                assert!((c as f64 - n * p).abs() < 4.0 * sigma, "{counts:?}");
            }
        }
    }
}
