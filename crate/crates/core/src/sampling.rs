//! Boltzmann sampling of sequences from a trained model.

use std::collections::HashSet;

use rand::Rng;

use crate::alphabet::{Alphabet, Sequence};
use crate::error::{Error, Result};
use crate::expr::Validator;
use crate::rng;
use crate::rnn::{ModelParams, PosteriorModel, Rollout};

const SAMPLE_STREAM: u64 = 0x424F_4C54;

/// What the Boltzmann energies are built from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Weighting {
    /// `p(k) ∝ exp(o_t|_k / θ)`.
    #[default]
    Probability,
    /// `p(k) ∝ exp(logit(o_t|_k) / θ)`.
    Logit,
}

impl Weighting {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "probability" | "prob" => Ok(Weighting::Probability),
            "logit" => Ok(Weighting::Logit),
            other => Err(Error::Config(format!("unknown weighting {other:?}"))),
        }
    }
}

/// Next-character distribution at temperature `theta`.
pub fn boltzmann_distribution(outputs: &[f64], theta: f64, weighting: Weighting) -> Vec<f64> {
    let energy = |o: f64| match weighting {
        Weighting::Probability => o,
        Weighting::Logit => {
            let o = o.clamp(1e-12, 1.0 - 1e-12);
            (o / (1.0 - o)).ln()
        }
    };
    let scaled: Vec<f64> = outputs.iter().map(|&o| energy(o) / theta).collect();
    let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scaled.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

fn draw_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Rolls `model` forward for `length` steps, sampling each character from the
/// Boltzmann distribution over the current outputs.
pub fn sample_from<M: Rollout, R: Rng + ?Sized>(
    model: &mut M,
    theta: f64,
    length: usize,
    weighting: Weighting,
    rng: &mut R,
) -> Result<Sequence> {
    if !(theta > 0.0) {
        return Err(Error::Domain(format!("temperature {theta} must be positive")));
    }
    model.reset();
    let mut out = vec![0.0; model.alphabet_size()];
    let mut seq = Sequence::default();
    let mut prev = None;
    for _ in 0..length {
        model.step(prev, &mut out);
        let k = draw_index(&boltzmann_distribution(&out, theta, weighting), rng) as u8;
        seq.push(k);
        prev = Some(k);
    }
    Ok(seq)
}

/// One mean-mode sample.
pub fn boltzmann_sample(params: &ModelParams, theta: f64, length: usize, seed: u64) -> Result<Sequence> {
    let mut r = rng::stream(seed, SAMPLE_STREAM);
    sample_from(&mut params.mean(), theta, length, Weighting::Probability, &mut r)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleReport {
    pub sequences: Vec<Sequence>,
    pub temperature: f64,
    pub valid_fraction: f64,
    pub unique_fraction: f64,
}

impl SampleReport {
    pub fn summary_line(&self) -> String {
        format!(
            "theta={} samples={} valid_fraction={:.4} unique_fraction={:.4}",
            self.temperature,
            self.sequences.len(),
            self.valid_fraction,
            self.unique_fraction
        )
    }
}

pub fn sample_report_from<M: PosteriorModel>(
    model: &M,
    alphabet: &Alphabet,
    theta: f64,
    count: usize,
    length: usize,
    weighting: Weighting,
    seed: u64,
) -> Result<SampleReport> {
    if count == 0 {
        return Err(Error::Domain("sample count must be positive".into()));
    }
    let mut r = rng::stream(seed, SAMPLE_STREAM);
    let mut rollout = model.mean();
    let sequences =
        (0..count).map(|_| sample_from(&mut rollout, theta, length, weighting, &mut r)).collect::<Result<Vec<_>>>()?;
    let v = Validator::default();
    let valid = sequences.iter().filter(|s| v.check(s, alphabet).valid).count();
    let unique = sequences.iter().collect::<HashSet<_>>().len();
    Ok(SampleReport {
        temperature: theta,
        valid_fraction: valid as f64 / count as f64,
        unique_fraction: unique as f64 / count as f64,
        sequences,
    })
}

pub fn sample_report(
    params: &ModelParams,
    alphabet: &Alphabet,
    theta: f64,
    count: usize,
    length: usize,
    seed: u64,
) -> Result<SampleReport> {
    sample_report_from(params, alphabet, theta, count, length, Weighting::Probability, seed)
}

/// Default temperature grid for sweeps.
pub const THETA_GRID: [f64; 10] = [0.005, 0.01, 0.02, 0.03, 0.05, 0.075, 0.1, 0.2, 0.5, 1.0];

pub fn temperature_sweep(
    params: &ModelParams,
    alphabet: &Alphabet,
    grid: &[f64],
    count: usize,
    length: usize,
    seed: u64,
) -> Result<Vec<SampleReport>> {
    grid.iter().map(|&theta| sample_report(params, alphabet, theta, count, length, seed)).collect()
}

/// Highest valid fraction among reports whose unique fraction is at least
/// `min_unique`; ties go to the more diverse report.
pub fn best_report(reports: &[SampleReport], min_unique: f64) -> Option<&SampleReport> {
    reports.iter().filter(|r| r.unique_fraction >= min_unique).max_by(|a, b| {
        a.valid_fraction
            .partial_cmp(&b.valid_fraction)
            .unwrap()
            .then(a.unique_fraction.partial_cmp(&b.unique_fraction).unwrap())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acquisition::stub::TablePosterior;

    fn constant(row: Vec<f64>) -> TablePosterior {
        TablePosterior { table: vec![row], random: false }
    }

    #[test]
    fn closed_form_distribution() {
        let p = boltzmann_distribution(&[0.2, 0.8], 1.0, Weighting::Probability);
        assert!((p[0] - 1.0 / (1.0 + 0.6f64.exp())).abs() < 1e-15);
        assert!((p[0] - 0.3543).abs() < 1e-4);
        let cold = boltzmann_distribution(&[0.2, 0.8], 1e-3, Weighting::Probability);
        assert!(cold[1] > 1.0 - 1e-12);
        let hot = boltzmann_distribution(&[0.2, 0.8], 1e6, Weighting::Probability);
        assert!((hot[0] - 0.5).abs() < 1e-6);
        let logit = boltzmann_distribution(&[0.5, 0.5, 0.9], 1.0, Weighting::Logit);
        assert!((logit[2] / logit[0] - 9.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_nonpositive_temperature() {
        let mut m = constant(vec![0.5, 0.5]).mean();
        let mut r = rng::stream(0, 0);
        assert!(sample_from(&mut m, 0.0, 3, Weighting::Probability, &mut r).is_err());
        assert!(sample_from(&mut m, f64::NAN, 3, Weighting::Probability, &mut r).is_err());
    }

    #[test]
    fn empirical_frequencies_match_closed_form() {
        let model = constant(vec![0.2, 0.8, 0.5]);
        let expected = boltzmann_distribution(&[0.2, 0.8, 0.5], 0.5, Weighting::Probability);
        let mut r = rng::stream(3, 0);
        let mut rollout = model.mean();
        let n = 100_000.0;
        let mut counts = [0.0; 3];
        for _ in 0..100_000 {
            let s = sample_from(&mut rollout, 0.5, 1, Weighting::Probability, &mut r).unwrap();
            counts[s.symbols()[0] as usize] += 1.0;
        }
        for k in 0..3 {
            let sigma = (n * expected[k] * (1.0 - expected[k])).sqrt();
            assert!((counts[k] - n * expected[k]).abs() < 4.0 * sigma, "{counts:?} vs {expected:?}");
        }
    }

    #[test]
    fn diversity_grows_with_temperature() {
        let model = constant(vec![0.1, 0.9, 0.6, 0.3]);
        let a = Alphabet::new("0123").unwrap();
        let mut last = 0.0;
        for theta in [0.01, 0.03, 0.1, 0.3, 1.0, 3.0] {
            let rep = sample_report_from(&model, &a, theta, 2000, 6, Weighting::Probability, 5).unwrap();
            assert!(rep.unique_fraction >= last, "theta {theta}: {} < {last}", rep.unique_fraction);
            last = rep.unique_fraction;
        }
    }

    #[test]
    fn hot_sampling_matches_uniform_rate() {
        let a = Alphabet::new("1+").unwrap();
        let model = constant(vec![0.3, 0.7]);
        let rep = sample_report_from(&model, &a, 1e6, 20_000, 3, Weighting::Probability, 1).unwrap();
        assert!((rep.valid_fraction - 0.5).abs() < 0.02);
        assert!(sample_report_from(&model, &a, 1.0, 0, 3, Weighting::Probability, 1).is_err());
    }

    #[test]
    fn best_report_respects_diversity_floor() {
        let mk = |v, u| SampleReport { sequences: vec![], temperature: 1.0, valid_fraction: v, unique_fraction: u };
        let reps = vec![mk(1.0, 0.01), mk(0.9, 0.6), mk(0.9, 0.8), mk(0.2, 1.0)];
        let best = best_report(&reps, 0.5).unwrap();
        assert_eq!((best.valid_fraction, best.unique_fraction), (0.9, 0.8));
        assert!(best_report(&reps, 1.1).is_none());
    }

    #[test]
    fn model_sampling_is_seeded() {
        let mut r = rng::stream(2, 0);
        let p = ModelParams::init(4, 5, 0.2, &mut r).unwrap();
        assert_eq!(boltzmann_sample(&p, 0.1, 6, 7).unwrap(), boltzmann_sample(&p, 0.1, 6, 7).unwrap());
        assert_eq!(boltzmann_sample(&p, 0.1, 6, 7).unwrap().len(), 6);
    }
}
