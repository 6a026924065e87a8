//! Flat little-endian checkpoint format.
//!
//! ```text
//! magic      8 bytes  "SEQVALID"
//! version    u32      1
//! C          u32      alphabet size
//! H          u32      hidden width
//! dropout    f64
//! alphabet   u32 byte length, then UTF-8 characters
//! tensors    f64 x n  embed (C+1)x4H, w_rec 4HxH, b_gate 4H, w_out CxH, b_out C; row-major
//! optimizer  u8 kind (0 sgd, 1 adam), f64 lr, f64 beta1, f64 beta2, f64 eps, u64 steps
//! moments    f64 x n  first then second moment (adam only)
//! ```

use std::fs;
use std::path::Path;

use super::optim::{Optimizer, OptimizerKind};
use super::params::{Layout, ModelParams};
use crate::alphabet::Alphabet;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"SEQVALID";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub alphabet: Alphabet,
    pub params: ModelParams,
    pub optimizer: Optimizer,
}

pub fn encode(alphabet: &Alphabet, params: &ModelParams, optimizer: &Optimizer) -> Result<Vec<u8>> {
    if alphabet.size() != params.alphabet_size() {
        return Err(Error::Shape(format!(
            "alphabet has {} characters but model expects {}",
            alphabet.size(),
            params.alphabet_size()
        )));
    }
    let mut out = Vec::with_capacity(64 + 8 * params.len() * 3);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(params.alphabet_size() as u32).to_le_bytes());
    out.extend_from_slice(&(params.hidden() as u32).to_le_bytes());
    out.extend_from_slice(&params.dropout().to_le_bytes());
    let chars = alphabet.as_string();
    out.extend_from_slice(&(chars.len() as u32).to_le_bytes());
    out.extend_from_slice(chars.as_bytes());
    for w in params.data() {
        out.extend_from_slice(&w.to_le_bytes());
    }
    let (kind, beta1, beta2, eps) = match optimizer.kind {
        OptimizerKind::Sgd => (0u8, 0.0, 0.0, 0.0),
        OptimizerKind::Adam { beta1, beta2, eps } => (1u8, beta1, beta2, eps),
    };
    out.push(kind);
    for v in [optimizer.learning_rate, beta1, beta2, eps] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&optimizer.steps.to_le_bytes());
    for v in optimizer.first_moment.iter().chain(&optimizer.second_moment) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.at < n {
            return Err(Error::CorruptCheckpoint(format!("truncated while reading {what}")));
        }
        let s = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        let raw = self.take(n * 8, what)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader { bytes, at: 0 };
    if r.take(8, "magic")? != MAGIC {
        return Err(Error::CorruptCheckpoint("bad magic".into()));
    }
    let version = r.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(Error::CorruptCheckpoint(format!("unsupported format version {version}")));
    }
    let c = r.u32("alphabet size")? as usize;
    let h = r.u32("hidden width")? as usize;
    let dropout = r.f64("dropout")?;
    let n_chars = r.u32("alphabet length")? as usize;
    let chars = std::str::from_utf8(r.take(n_chars, "alphabet")?)
        .map_err(|_| Error::CorruptCheckpoint("alphabet is not UTF-8".into()))?;
    let alphabet = Alphabet::new(chars).map_err(|e| Error::CorruptCheckpoint(e.to_string()))?;
    if alphabet.size() != c {
        return Err(Error::Shape(format!("header declares C={c} but alphabet has {} characters", alphabet.size())));
    }
    if c == 0 || h == 0 || c > 255 || h > 1 << 16 {
        return Err(Error::CorruptCheckpoint(format!("implausible shape C={c}, H={h}")));
    }
    let n = Layout::new(c, h).len;
    let data = r.f64s(n, "tensors")?;
    let params = ModelParams::from_data(c, h, dropout, data).map_err(|e| Error::CorruptCheckpoint(e.to_string()))?;
    let kind = match r.take(1, "optimizer kind")?[0] {
        0 => OptimizerKind::Sgd,
        1 => OptimizerKind::Adam { beta1: 0.0, beta2: 0.0, eps: 0.0 },
        k => return Err(Error::CorruptCheckpoint(format!("unknown optimizer kind {k}"))),
    };
    let lr = r.f64("learning rate")?;
    let (beta1, beta2, eps) = (r.f64("beta1")?, r.f64("beta2")?, r.f64("eps")?);
    let steps = r.u64("optimizer steps")?;
    let kind = match kind {
        OptimizerKind::Sgd => OptimizerKind::Sgd,
        OptimizerKind::Adam { .. } => OptimizerKind::Adam { beta1, beta2, eps },
    };
    let mut optimizer = Optimizer::new(kind, lr, n);
    optimizer.steps = steps;
    if let OptimizerKind::Adam { .. } = kind {
        optimizer.first_moment = r.f64s(n, "first moment")?;
        optimizer.second_moment = r.f64s(n, "second moment")?;
    }
    if r.at != bytes.len() {
        return Err(Error::CorruptCheckpoint(format!("{} trailing bytes", bytes.len() - r.at)));
    }
    Ok(Checkpoint { alphabet, params, optimizer })
}

pub fn save_checkpoint(path: &Path, alphabet: &Alphabet, params: &ModelParams, optimizer: &Optimizer) -> Result<()> {
    let bytes = encode(alphabet, params, optimizer)?;
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    decode(&fs::read(path)?)
}

/// Loads a checkpoint and insists that it was trained on `alphabet`.
pub fn load_checkpoint_for(path: &Path, alphabet: &Alphabet) -> Result<Checkpoint> {
    let ckpt = load_checkpoint(path)?;
    if ckpt.params.alphabet_size() != alphabet.size() {
        return Err(Error::Shape(format!(
            "checkpoint alphabet size {} != expected {}",
            ckpt.params.alphabet_size(),
            alphabet.size()
        )));
    }
    if ckpt.alphabet != *alphabet {
        return Err(Error::Shape(format!(
            "checkpoint alphabet {:?} != expected {:?}",
            ckpt.alphabet.as_string(),
            alphabet.as_string()
        )));
    }
    Ok(ckpt)
}
