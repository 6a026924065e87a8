//! Training-data regimes behind one batch contract, and the balanced
//! validation set every regime is scored on.

use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use crate::acquisition::{build_active_minibatch, build_warmstart_minibatch};
use crate::alphabet::{Alphabet, Sequence};
use crate::error::{Error, Result};
use crate::expr::Validator;
use crate::rng;
use crate::rnn::ModelParams;

pub const DEFAULT_MIN_POSITIVE_FRACTION: f64 = 0.02;
pub const DEFAULT_CALL_BUDGET: u64 = 1_000_000;
pub const DEFAULT_VALIDATION_SIZE: usize = 2_000;
pub const DEFAULT_BATCH_SIZE: usize = 64;

const UNIFORM_STREAM: u64 = 0x554E_4946;
const VALIDATION_STREAM: u64 = 0x5641_4C49_44;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Provenance {
    Vanilla,
    Balanced,
    Active,
    Warmstart,
    Validation,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Vanilla => "vanilla",
            Provenance::Balanced => "balanced",
            Provenance::Active => "active",
            Provenance::Warmstart => "warmstart",
            Provenance::Validation => "validation",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The three training regimes compared by the harness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    Vanilla,
    Balanced,
    Active,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Vanilla, Strategy::Balanced, Strategy::Active];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Vanilla => "vanilla",
            Strategy::Balanced => "balanced",
            Strategy::Active => "active",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vanilla" => Ok(Strategy::Vanilla),
            "balanced" => Ok(Strategy::Balanced),
            "active" => Ok(Strategy::Active),
            other => Err(Error::Config(format!("unknown strategy {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GenerationCost {
    pub seconds: f64,
    pub validator_calls: u64,
}

/// Sequences with their validator labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledBatch {
    pub sequences: Vec<Sequence>,
    pub labels: Vec<bool>,
    pub provenance: Provenance,
    pub cost: GenerationCost,
}

impl LabeledBatch {
    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&y| y).count()
    }

    pub fn positive_fraction(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.positives() as f64 / self.len() as f64
        }
    }

    /// Re-validates every sequence; true when all stored labels still agree.
    pub fn labels_consistent(&self, alphabet: &Alphabet) -> bool {
        let v = Validator::default();
        self.sequences.iter().zip(&self.labels).all(|(s, &y)| v.check(s, alphabet).valid == y)
    }
}

fn label_all(sequences: Vec<Sequence>, alphabet: &Alphabet, provenance: Provenance, started: Instant) -> LabeledBatch {
    let v = Validator::default();
    let labels: Vec<bool> = sequences.iter().map(|s| v.check(s, alphabet).valid).collect();
    let calls = sequences.len() as u64;
    LabeledBatch {
        sequences,
        labels,
        provenance,
        cost: GenerationCost { seconds: started.elapsed().as_secs_f64(), validator_calls: calls },
    }
}

/// `n` i.i.d. uniform sequences.
pub fn vanilla_batch(n: usize, length: usize, alphabet: &Alphabet, seed: u64) -> LabeledBatch {
    let started = Instant::now();
    let mut r = rng::stream(seed, UNIFORM_STREAM);
    let seqs = (0..n).map(|_| rng::uniform_sequence(&mut r, alphabet.size(), length)).collect();
    label_all(seqs, alphabet, Provenance::Vanilla, started)
}

pub fn warmstart_batch(n: usize, length: usize, alphabet: &Alphabet, seed: u64) -> LabeledBatch {
    let started = Instant::now();
    label_all(build_warmstart_minibatch(n, length, alphabet, seed), alphabet, Provenance::Warmstart, started)
}

/// Uniform sampling that rejects surplus negatives until at least
/// `ceil(min_pos_frac * n)` of the `n` accepted sequences are valid.
pub fn balanced_batch(
    n: usize,
    length: usize,
    alphabet: &Alphabet,
    min_pos_frac: f64,
    seed: u64,
    call_budget: u64,
) -> Result<LabeledBatch> {
    if !(0.0..1.0).contains(&min_pos_frac) {
        return Err(Error::Domain(format!("minimum positive fraction {min_pos_frac} outside [0, 1)")));
    }
    let started = Instant::now();
    let quota = (min_pos_frac * n as f64).ceil() as usize;
    let negative_slots = n - quota.min(n);
    let v = Validator::default();
    let mut r = rng::stream(seed, UNIFORM_STREAM);
    let (mut sequences, mut labels) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut negatives = 0;
    let mut calls = 0u64;
    while sequences.len() < n {
        if calls >= call_budget {
            return Err(Error::BudgetExceeded(format!(
                "balanced batch found {} of {quota} positives within {call_budget} validator calls",
                sequences.len() - negatives
            )));
        }
        let seq = rng::uniform_sequence(&mut r, alphabet.size(), length);
        calls += 1;
        let valid = v.check(&seq, alphabet).valid;
        if !valid {
            if negatives >= negative_slots {
                continue;
            }
            negatives += 1;
        }
        sequences.push(seq);
        labels.push(valid);
    }
    Ok(LabeledBatch {
        sequences,
        labels,
        provenance: Provenance::Balanced,
        cost: GenerationCost { seconds: started.elapsed().as_secs_f64(), validator_calls: calls },
    })
}

/// Sequences grown by information-gain acquisition, then labeled.
pub fn active_batch(
    params: &ModelParams,
    n: usize,
    posterior_samples: usize,
    length: usize,
    alphabet: &Alphabet,
    seed: u64,
) -> Result<LabeledBatch> {
    if params.alphabet_size() != alphabet.size() {
        return Err(Error::Shape(format!(
            "model alphabet size {} != alphabet size {}",
            params.alphabet_size(),
            alphabet.size()
        )));
    }
    let started = Instant::now();
    let batch = build_active_minibatch(params, n, posterior_samples, length, seed);
    Ok(label_all(batch.sequences, alphabet, Provenance::Active, started))
}

/// Exactly `size/2` valid and `size/2` invalid uniform sequences, each class
/// filled by rejection.
pub fn build_validation_set(
    size: usize,
    length: usize,
    alphabet: &Alphabet,
    seed: u64,
    call_budget: u64,
) -> Result<LabeledBatch> {
    if !size.is_multiple_of(2) {
        return Err(Error::Domain(format!("validation size {size} must be even")));
    }
    let started = Instant::now();
    let half = size / 2;
    let v = Validator::default();
    let mut r = rng::stream(seed, VALIDATION_STREAM);
    let (mut sequences, mut labels) = (Vec::with_capacity(size), Vec::with_capacity(size));
    let (mut pos, mut neg, mut calls) = (0, 0, 0u64);
    while pos < half || neg < half {
        if calls >= call_budget {
            return Err(Error::BudgetExceeded(format!(
                "validation set has {pos}/{half} positives after {call_budget} validator calls"
            )));
        }
        let seq = rng::uniform_sequence(&mut r, alphabet.size(), length);
        calls += 1;
        let valid = v.check(&seq, alphabet).valid;
        let slot = if valid { &mut pos } else { &mut neg };
        if *slot < half {
            *slot += 1;
            sequences.push(seq);
            labels.push(valid);
        }
    }
    Ok(LabeledBatch {
        sequences,
        labels,
        provenance: Provenance::Validation,
        cost: GenerationCost { seconds: started.elapsed().as_secs_f64(), validator_calls: calls },
    })
}

/// Cache file name keyed by alphabet digest, length, size and seed.
pub fn validation_file_name(alphabet: &Alphabet, length: usize, size: usize, seed: u64) -> String {
    format!("validation-{}-T{length}-n{size}-s{seed}.tsv", alphabet.fingerprint())
}

/// One line per record: sequence, tab, label bit.
pub fn write_labeled(path: &Path, batch: &LabeledBatch, alphabet: &Alphabet) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        for (seq, &y) in batch.sequences.iter().zip(&batch.labels) {
            writeln!(w, "{}\t{}", alphabet.decode(seq), y as u8)?;
        }
        w.flush()?;
    }
    fs::rename(tmp, path)?;
    Ok(())
}

pub fn read_labeled(path: &Path, alphabet: &Alphabet, provenance: Provenance) -> Result<LabeledBatch> {
    let bad = |reason: String| Error::Format { path: path.display().to_string(), reason };
    let reader = BufReader::new(fs::File::open(path)?);
    let (mut sequences, mut labels) = (Vec::new(), Vec::new());
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let (text, bit) = line.rsplit_once('\t').ok_or_else(|| bad(format!("line {}: missing tab", i + 1)))?;
        let label = match bit {
            "1" => true,
            "0" => false,
            other => return Err(bad(format!("line {}: label {other:?} is not 0/1", i + 1))),
        };
        sequences.push(alphabet.encode(text).map_err(|e| bad(format!("line {}: {e}", i + 1)))?);
        labels.push(label);
    }
    Ok(LabeledBatch { sequences, labels, provenance, cost: GenerationCost::default() })
}

/// Reads the cached validation set under `dir`, building and caching it first
/// if absent. Returns the set and the path it lives at.
pub fn load_or_build_validation_set(
    dir: &Path,
    size: usize,
    length: usize,
    alphabet: &Alphabet,
    seed: u64,
    call_budget: u64,
) -> Result<(LabeledBatch, PathBuf)> {
    fs::create_dir_all(dir)?;
    let path = dir.join(validation_file_name(alphabet, length, size, seed));
    if path.exists() {
        let set = read_labeled(&path, alphabet, Provenance::Validation)?;
        if set.len() == size && set.sequences.iter().all(|s| s.len() == length) {
            return Ok((set, path));
        }
    }
    let set = build_validation_set(size, length, alphabet, seed, call_budget)?;
    write_labeled(&path, &set, alphabet)?;
    Ok((set, path))
}
