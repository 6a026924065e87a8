//! Differential checking of the native validator against an external
//! reference that speaks a line protocol: one sequence per input line, one
//! verdict (`1` or `0`) per output line.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::process::{Command, Stdio};
use std::thread;

use crate::alphabet::Alphabet;
use crate::error::{Error, Result};
use crate::expr::{tokenize, Category, Token, Validator};
use crate::rng;

const CORPUS_STREAM: u64 = 0x4352_4F53;

/// Known reasons the two validators may legitimately disagree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Deviation {
    /// `()` is rejected natively but is an empty tuple to the reference.
    EmptyTuple,
    /// Multi-digit literals starting with `0` (including `00`) are rejected
    /// natively.
    LeadingZero,
    /// A native digit, exponent, step or float-range cap fired.
    ResourceCap,
    /// Shift operators with extreme or negative counts.
    ShiftEdge,
    Unexplained,
}

impl Deviation {
    pub const ALL: [Deviation; 5] =
        [Deviation::EmptyTuple, Deviation::LeadingZero, Deviation::ResourceCap, Deviation::ShiftEdge, Deviation::Unexplained];

    pub fn as_str(self) -> &'static str {
        match self {
            Deviation::EmptyTuple => "empty-tuple",
            Deviation::LeadingZero => "leading-zero",
            Deviation::ResourceCap => "resource-cap",
            Deviation::ShiftEdge => "shift-edge",
            Deviation::Unexplained => "unexplained",
        }
    }
}

impl fmt::Display for Deviation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrossCheckRecord {
    pub sequence: String,
    pub native: bool,
    pub reference: bool,
    pub deviation: Option<Deviation>,
}

impl CrossCheckRecord {
    pub fn agree(&self) -> bool {
        self.native == self.reference
    }
}

/// True when the raw text holds a multi-digit literal with a leading zero.
fn has_leading_zero_literal(text: &str) -> bool {
    let bytes = text.as_bytes();
    bytes.iter().enumerate().any(|(i, &b)| {
        b == b'0' && (i == 0 || !bytes[i - 1].is_ascii_digit()) && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)
    })
}

/// Assigns a disagreement to the first matching documented class.
pub fn classify(text: &str, validator: &Validator) -> Deviation {
    let outcome = validator.check_str(text);
    if outcome.category == Category::ResourceCap || outcome.float_range_exceeded {
        return Deviation::ResourceCap;
    }
    if text.contains("()") {
        return Deviation::EmptyTuple;
    }
    if has_leading_zero_literal(text) {
        return Deviation::LeadingZero;
    }
    let shifts = tokenize(text).map(|ts| ts.iter().any(|t| matches!(t, Token::Shl | Token::Shr)));
    if shifts.unwrap_or_else(|_| text.contains("<<") || text.contains(">>")) {
        return Deviation::ShiftEdge;
    }
    Deviation::Unexplained
}

pub fn compare(corpus: &[String], reference: &[bool]) -> Result<Vec<CrossCheckRecord>> {
    if corpus.len() != reference.len() {
        return Err(Error::Shape(format!(
            "reference returned {} verdicts for {} sequences",
            reference.len(),
            corpus.len()
        )));
    }
    let v = Validator::default();
    Ok(corpus
        .iter()
        .zip(reference)
        .map(|(text, &reference)| {
            let native = v.check_str(text).valid;
            let deviation = (native != reference).then(|| classify(text, &v));
            CrossCheckRecord { sequence: text.clone(), native, reference, deviation }
        })
        .collect())
}

/// Uniform corpus of `size` sequences.
pub fn uniform_corpus(alphabet: &Alphabet, length: usize, size: usize, seed: u64) -> Vec<String> {
    let mut r = rng::stream(seed, CORPUS_STREAM);
    (0..size).map(|_| alphabet.decode(&rng::uniform_sequence(&mut r, alphabet.size(), length))).collect()
}

/// Every string of length `length` over the alphabet, in odometer order.
pub fn exhaustive_corpus(alphabet: &Alphabet, length: usize) -> Vec<String> {
    let c = alphabet.size();
    let total = c.pow(length as u32);
    (0..total)
        .map(|mut i| {
            let mut s = vec!['\0'; length];
            for slot in s.iter_mut().rev() {
                *slot = alphabet.chars()[i % c];
                i /= c;
            }
            s.into_iter().collect()
        })
        .collect()
}

/// Runs `program args...`, feeding the corpus on stdin and parsing one verdict
/// per stdout line. A non-zero exit or malformed output is an error carrying
/// the reference's own stderr.
pub fn run_reference(program: &str, args: &[String], corpus: &[String]) -> Result<Vec<bool>> {
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| Error::Incompatible(format!("cannot start reference {program:?}: {e}")))?;
    let mut stdin = child.stdin.take().expect("piped stdin");
    let input: String = corpus.iter().map(|l| format!("{l}\n")).collect();
    let writer = thread::spawn(move || -> std::io::Result<()> {
        stdin.write_all(input.as_bytes())?;
        Ok(())
    });
    let stdout = child.stdout.take().expect("piped stdout");
    let mut verdicts = Vec::with_capacity(corpus.len());
    let mut bad_line = None;
    for line in BufReader::new(stdout).lines() {
        let line = line?;
        match line.split_whitespace().next() {
            Some("1") => verdicts.push(true),
            Some("0") => verdicts.push(false),
            _ if bad_line.is_none() => bad_line = Some(line),
            _ => {}
        }
    }
    let output = child.wait_with_output()?;
    // a reference that exits early closes its stdin; that shows up as a
    // broken pipe here and is reported through the exit status instead
    let _ = writer.join();
    if !output.status.success() {
        return Err(Error::Incompatible(format!(
            "reference exited with {}: {}",
            output.status,
            String::from_utf8_lossy(&output.stderr).trim_end()
        )));
    }
    if let Some(line) = bad_line {
        return Err(Error::Incompatible(format!("reference printed {line:?}, expected 1 or 0")));
    }
    Ok(verdicts)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgreementReport {
    pub total: usize,
    pub agreements: usize,
    pub by_class: BTreeMap<Deviation, usize>,
    pub examples: BTreeMap<Deviation, Vec<String>>,
}

impl AgreementReport {
    pub const EXAMPLES_PER_CLASS: usize = 5;

    pub fn from_records(records: &[CrossCheckRecord]) -> Self {
        let mut by_class = BTreeMap::new();
        let mut examples: BTreeMap<Deviation, Vec<String>> = BTreeMap::new();
        for r in records {
            if let Some(d) = r.deviation {
                *by_class.entry(d).or_insert(0) += 1;
                let list = examples.entry(d).or_default();
                if list.len() < Self::EXAMPLES_PER_CLASS {
                    list.push(r.sequence.clone());
                }
            }
        }
        Self { total: records.len(), agreements: records.iter().filter(|r| r.agree()).count(), by_class, examples }
    }

    /// Agreement rate; an empty corpus counts as full agreement.
    pub fn agreement_rate(&self) -> f64 {
        if self.total == 0 {
            1.0
        } else {
            self.agreements as f64 / self.total as f64
        }
    }

    pub fn unexplained(&self) -> usize {
        self.by_class.get(&Deviation::Unexplained).copied().unwrap_or(0)
    }

    pub fn to_text(&self, reference: &str) -> String {
        let mut out = String::new();
        out.push_str(&format!("reference: {reference}\n"));
        out.push_str(&format!("sequences: {}\n", self.total));
        out.push_str(&format!("agreements: {}\n", self.agreements));
        out.push_str(&format!("agreement_rate: {:.6}\n", self.agreement_rate()));
        for d in Deviation::ALL {
            out.push_str(&format!("class {}: {}\n", d, self.by_class.get(&d).copied().unwrap_or(0)));
        }
        for (d, list) in &self.examples {
            for s in list {
                out.push_str(&format!("example {d}: {s}\n"));
            }
        }
        out
    }
}
