//! Exact prefix-validity probabilities by exhaustive enumeration.

use num_rational::Ratio;

use crate::alphabet::{Alphabet, Sequence};
use crate::error::{Error, Result};
use crate::expr::Validator;
use crate::rng;

pub const DEFAULT_ENUMERATION_BUDGET: u64 = 10_000_000;

#[derive(Clone, Debug)]
pub struct OracleQuery<'a> {
    pub prefix: Sequence,
    pub total_length: usize,
    pub alphabet: &'a Alphabet,
}

/// `valid / total` completions of a prefix, unreduced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrefixProbability {
    pub valid: u64,
    pub total: u64,
}

impl PrefixProbability {
    pub fn ratio(&self) -> Ratio<u64> {
        Ratio::new(self.valid, self.total)
    }

    pub fn to_f64(&self) -> f64 {
        self.valid as f64 / self.total as f64
    }
}

#[derive(Clone, Debug)]
pub struct PrefixOracle {
    validator: Validator,
    budget: u64,
}

impl Default for PrefixOracle {
    fn default() -> Self {
        Self { validator: Validator::default(), budget: DEFAULT_ENUMERATION_BUDGET }
    }
}

impl PrefixOracle {
    pub fn new(validator: Validator, budget: u64) -> Self {
        Self { validator, budget }
    }

    pub fn prefix_validity_probability(&self, q: &OracleQuery<'_>) -> Result<PrefixProbability> {
        let c = q.alphabet.size();
        if q.prefix.len() > q.total_length {
            return Err(Error::Domain(format!(
                "prefix length {} exceeds total length {}",
                q.prefix.len(),
                q.total_length
            )));
        }
        if !q.prefix.fits(c) {
            return Err(Error::Alphabet("prefix symbol outside alphabet".into()));
        }
        let free = q.total_length - q.prefix.len();
        let total = (c as u64)
            .checked_pow(free as u32)
            .filter(|&n| n <= self.budget)
            .ok_or_else(|| {
                Error::BudgetExceeded(format!("{c}^{free} completions exceed enumeration budget {}", self.budget))
            })?;

        let chars = q.alphabet.chars();
        let mut text: Vec<char> = q.prefix.symbols().iter().map(|&s| chars[s as usize]).collect();
        text.extend(std::iter::repeat_n(chars[0], free));
        let mut digits = vec![0usize; free];
        let mut buf = String::with_capacity(q.total_length * 4);
        let mut valid = 0u64;
        let offset = q.prefix.len();
        loop {
            buf.clear();
            buf.extend(text.iter());
            if self.validator.is_valid_str(&buf) {
                valid += 1;
            }
            // odometer over the free positions, last position fastest
            let mut i = free;
            loop {
                if i == 0 {
                    return Ok(PrefixProbability { valid, total });
                }
                i -= 1;
                digits[i] += 1;
                if digits[i] < c {
                    text[offset + i] = chars[digits[i]];
                    break;
                }
                digits[i] = 0;
                text[offset + i] = chars[0];
            }
        }
    }

    /// Probabilities for every prefix `x_{1:t}`, `t = 1..=T`, of a full sequence.
    pub fn prefix_profile(&self, seq: &Sequence, alphabet: &Alphabet) -> Result<Vec<PrefixProbability>> {
        (1..=seq.len())
            .map(|t| {
                self.prefix_validity_probability(&OracleQuery {
                    prefix: seq.prefix(t),
                    total_length: seq.len(),
                    alphabet,
                })
            })
            .collect()
    }
}

pub fn prefix_validity_probability(q: &OracleQuery<'_>) -> Result<PrefixProbability> {
    PrefixOracle::default().prefix_validity_probability(q)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateEstimate {
    pub rate: f64,
    pub std_error: f64,
    pub positives: u64,
    pub samples: u64,
}

const RATE_STREAM: u64 = 0x5241_5445;

/// Monte-Carlo estimate of the valid fraction of uniformly random sequences.
pub fn estimate_positive_rate(alphabet: &Alphabet, length: usize, samples: u64, seed: u64) -> Result<RateEstimate> {
    if samples == 0 {
        return Err(Error::Domain("sample count must be positive".into()));
    }
    let validator = Validator::default();
    let mut rng = rng::stream(seed, RATE_STREAM);
    let mut positives = 0u64;
    for _ in 0..samples {
        let seq = rng::uniform_sequence(&mut rng, alphabet.size(), length);
        if validator.check(&seq, alphabet).valid {
            positives += 1;
        }
    }
    let rate = positives as f64 / samples as f64;
    let std_error = (rate * (1.0 - rate) / samples as f64).sqrt();
    Ok(RateEstimate { rate, std_error, positives, samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent brute force: materialize every string, validate each.
    fn brute_force(chars: &str, prefix: &str, length: usize) -> (u64, u64) {
        let alphabet: Vec<char> = chars.chars().collect();
        let mut strings = vec![prefix.to_string()];
        for _ in prefix.chars().count()..length {
            strings = strings
                .iter()
                .flat_map(|s| alphabet.iter().map(move |c| format!("{s}{c}")))
                .collect();
        }
        let valid = strings.iter().filter(|s| crate::expr::is_valid_str(s).valid).count();
        (valid as u64, strings.len() as u64)
    }

    fn query<'a>(alphabet: &'a Alphabet, prefix: &str, t: usize) -> OracleQuery<'a> {
        OracleQuery { prefix: alphabet.encode(prefix).unwrap(), total_length: t, alphabet }
    }

    #[test]
    fn one_plus_alphabet() {
        let a = Alphabet::new("1+").unwrap();
        let p = prefix_validity_probability(&query(&a, "", 3)).unwrap();
        assert_eq!(p, PrefixProbability { valid: 4, total: 8 });
        assert_eq!(brute_force("1+", "", 3), (4, 8));
    }

    #[test]
    fn zero_one_slash_alphabet() {
        let a = Alphabet::new("01/").unwrap();
        assert_eq!(prefix_validity_probability(&query(&a, "", 3)).unwrap().ratio(), Ratio::new(6, 27));
        assert_eq!(prefix_validity_probability(&query(&a, "1/", 3)).unwrap().ratio(), Ratio::new(1, 3));
        assert_eq!(prefix_validity_probability(&query(&a, "0", 3)).unwrap().ratio(), Ratio::new(1, 9));
        assert_eq!(brute_force("01/", "", 3), (6, 27));
        assert_eq!(brute_force("01/", "1/", 3), (1, 3));
        assert_eq!(brute_force("01/", "0", 3), (1, 9));
    }

    #[test]
    fn matches_brute_force_on_default_alphabet_subset() {
        let a = Alphabet::new("12+*(").unwrap();
        for prefix in ["", "(", "1*", "(2"] {
            let p = prefix_validity_probability(&query(&a, prefix, 5)).unwrap();
            assert_eq!((p.valid, p.total), brute_force("12+*(", prefix, 5), "{prefix}");
        }
    }

    #[test]
    fn full_length_prefix_is_the_label() {
        let a = Alphabet::new("01/").unwrap();
        assert_eq!(prefix_validity_probability(&query(&a, "1/1", 3)).unwrap().ratio(), Ratio::new(1, 1));
        assert_eq!(prefix_validity_probability(&query(&a, "1/0", 3)).unwrap().ratio(), Ratio::new(0, 1));
    }

    #[test]
    fn budget_and_domain_errors() {
        let a = Alphabet::default();
        let oracle = PrefixOracle::new(Validator::default(), 1000);
        assert!(matches!(oracle.prefix_validity_probability(&query(&a, "", 3)), Err(Error::BudgetExceeded(_))));
        assert!(oracle.prefix_validity_probability(&query(&a, "1", 3)).is_ok());
        assert!(matches!(prefix_validity_probability(&query(&a, "1234", 3)), Err(Error::Domain(_))));
    }

    #[test]
    fn rate_estimate_rejects_zero_samples() {
        assert!(estimate_positive_rate(&Alphabet::default(), 5, 0, 1).is_err());
    }

    #[test]
    fn rate_estimate_on_tiny_alphabet() {
        let a = Alphabet::new("1+").unwrap();
        let est = estimate_positive_rate(&a, 3, 20_000, 3).unwrap();
        assert!((est.rate - 0.5).abs() < 3.0 * est.std_error, "{est:?}");
    }
}
