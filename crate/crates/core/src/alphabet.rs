//! Character inventories and fixed-length symbol sequences.

use std::collections::HashMap;
use std::fmt;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// The twenty-character arithmetic alphabet used by the default problem.
pub const DEFAULT_CHARS: &str = "0123456789-*+/=<>()!";

/// An ordered set of distinct characters. Symbol `k` is the `k`-th character.
#[derive(Clone, PartialEq, Eq)]
pub struct Alphabet {
    chars: Vec<char>,
    index: HashMap<char, u8>,
}

impl Alphabet {
    pub fn new(chars: &str) -> Result<Self> {
        let chars: Vec<char> = chars.chars().collect();
        if chars.is_empty() {
            return Err(Error::Alphabet("alphabet must contain at least one character".into()));
        }
        if chars.len() > u8::MAX as usize {
            return Err(Error::Alphabet(format!("alphabet too large: {} characters", chars.len())));
        }
        let mut index = HashMap::with_capacity(chars.len());
        for (i, &c) in chars.iter().enumerate() {
            if index.insert(c, i as u8).is_some() {
                return Err(Error::Alphabet(format!("duplicate character {c:?}")));
            }
        }
        Ok(Self { chars, index })
    }

    pub fn size(&self) -> usize {
        self.chars.len()
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn char_at(&self, symbol: u8) -> char {
        self.chars[symbol as usize]
    }

    pub fn index_of(&self, c: char) -> Option<u8> {
        self.index.get(&c).copied()
    }

    pub fn as_string(&self) -> String {
        self.chars.iter().collect()
    }

    pub fn encode(&self, text: &str) -> Result<Sequence> {
        text.chars()
            .map(|c| {
                self.index_of(c)
                    .ok_or_else(|| Error::Alphabet(format!("character {c:?} not in alphabet {:?}", self.as_string())))
            })
            .collect::<Result<Vec<u8>>>()
            .map(Sequence)
    }

    pub fn decode(&self, seq: &Sequence) -> String {
        seq.0.iter().map(|&s| self.char_at(s)).collect()
    }

    /// Short hex digest of the character inventory, used in cache file names.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.as_string().as_bytes());
        digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
    }
}

impl Default for Alphabet {
    fn default() -> Self {
        Self::new(DEFAULT_CHARS).expect("default alphabet is well formed")
    }
}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Alphabet({:?})", self.as_string())
    }
}

/// A string of alphabet symbols (zero-based indices).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sequence(pub Vec<u8>);

impl Sequence {
    pub fn new(symbols: Vec<u8>) -> Self {
        Self(symbols)
    }

    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn prefix(&self, t: usize) -> Sequence {
        Sequence(self.0[..t].to_vec())
    }

    pub fn push(&mut self, symbol: u8) {
        self.0.push(symbol);
    }

    /// True when every symbol indexes into an alphabet of `size` characters.
    pub fn fits(&self, size: usize) -> bool {
        self.0.iter().all(|&s| (s as usize) < size)
    }
}
