//! The expression validator: tokenizer, recursive-descent parser and an exact
//! evaluator over arbitrary-precision integers and rationals.
//!
//! A string is valid when it tokenizes, parses as a single expression, and
//! evaluates without a run-time error or a resource-cap breach.

mod eval;
mod parser;
mod token;

use std::fmt;
use std::sync::OnceLock;

pub use eval::{EvalError, EvalStats, Evaluator, ResourceCaps, Value};
pub use parser::{parse, BinOp, CmpOp, Expr, UnaryOp, MAX_DEPTH};
pub use token::{tokenize, Token};

use crate::alphabet::{Alphabet, Sequence};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(position: usize, message: impl Into<String>) -> Self {
        Self { position, message: message.into() }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at {}: {}", self.position, self.message)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Category {
    Ok,
    ParseError,
    RuntimeError,
    ResourceCap,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Ok => "ok",
            Category::ParseError => "parse_error",
            Category::RuntimeError => "runtime_error",
            Category::ResourceCap => "resource_cap",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidityOutcome {
    pub valid: bool,
    pub category: Category,
    pub detail: String,
    /// Evaluation touched values outside the binary64 range.
    pub float_range_exceeded: bool,
}

impl ValidityOutcome {
    fn failed(category: Category, detail: String, float_range_exceeded: bool) -> Self {
        Self { valid: false, category, detail, float_range_exceeded }
    }
}

#[derive(Clone, Debug)]
pub struct Validator {
    evaluator: Evaluator,
}

impl Default for Validator {
    fn default() -> Self {
        Self::new(ResourceCaps::default())
    }
}

impl Validator {
    pub fn new(caps: ResourceCaps) -> Self {
        Self { evaluator: Evaluator::new(caps) }
    }

    pub fn caps(&self) -> ResourceCaps {
        self.evaluator.caps()
    }

    pub fn check_str(&self, text: &str) -> ValidityOutcome {
        let tokens = match tokenize(text) {
            Ok(t) => t,
            Err(e) => return ValidityOutcome::failed(Category::ParseError, e.to_string(), false),
        };
        let tree = match parse(&tokens) {
            Ok(t) => t,
            Err(e) => return ValidityOutcome::failed(Category::ParseError, e.to_string(), false),
        };
        if tree.node_count() as u64 > self.caps().max_steps {
            return ValidityOutcome::failed(Category::ResourceCap, "step budget exhausted".into(), false);
        }
        let (result, stats) = self.evaluator.evaluate(&tree);
        match result {
            Ok(_) => ValidityOutcome {
                valid: true,
                category: Category::Ok,
                detail: String::new(),
                float_range_exceeded: stats.float_range_exceeded,
            },
            Err(EvalError::Runtime(m)) => {
                ValidityOutcome::failed(Category::RuntimeError, m, stats.float_range_exceeded)
            }
            Err(EvalError::ResourceCap(m)) => {
                ValidityOutcome::failed(Category::ResourceCap, m, stats.float_range_exceeded)
            }
        }
    }

    pub fn check(&self, seq: &Sequence, alphabet: &Alphabet) -> ValidityOutcome {
        self.check_str(&alphabet.decode(seq))
    }

    pub fn is_valid_str(&self, text: &str) -> bool {
        self.check_str(text).valid
    }
}

fn shared() -> &'static Validator {
    static VALIDATOR: OnceLock<Validator> = OnceLock::new();
    VALIDATOR.get_or_init(Validator::default)
}

/// Validates `seq` with the default resource caps.
pub fn is_valid(seq: &Sequence, alphabet: &Alphabet) -> ValidityOutcome {
    shared().check(seq, alphabet)
}

pub fn is_valid_str(text: &str) -> ValidityOutcome {
    shared().check_str(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat(text: &str) -> Category {
        is_valid_str(text).category
    }

    #[test]
    fn outcome_examples() {
        assert!(is_valid_str("1+1").valid);
        assert_eq!(cat("1//(1-1)"), Category::RuntimeError);
        assert_eq!(cat("011"), Category::ParseError);
        assert_eq!(cat("(1+2"), Category::ParseError);
        assert_eq!(cat("1/0"), Category::RuntimeError);
        assert_eq!(cat("9**9**9"), Category::ResourceCap);
        assert_eq!(cat("1=2"), Category::ParseError);
        assert_eq!(cat("()"), Category::ParseError);
        assert_eq!(cat("1<>2"), Category::ParseError);
    }

    #[test]
    fn valid_iff_ok() {
        for text in ["1", "", "1+", "1/0", "2**99999", "-(-(1))", "1<2>0"] {
            let o = is_valid_str(text);
            assert_eq!(o.valid, o.category == Category::Ok, "{text}");
        }
    }

    #[test]
    fn pathological_inputs_terminate() {
        for text in ["9**9**9**9**9**9**9**9", "((((9**9)**9)**9)**9)", "2<<2<<2<<2<<2<<99999", "99**99**99//1"] {
            assert!(!is_valid_str(text).valid, "{text}");
        }
        assert!(is_valid_str("2**10**3").valid);
    }

    #[test]
    fn alphabet_sequences() {
        let a = Alphabet::default();
        let seq = a.encode("(1<2)*3").unwrap();
        assert!(is_valid(&seq, &a).valid);
    }
}
