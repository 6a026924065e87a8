use std::ops::Range;

use rand::Rng;

use crate::error::{Error, Result};

pub const DEFAULT_HIDDEN: usize = 100;
pub const DEFAULT_DROPOUT: f64 = 0.2;

/// Gate blocks within a `4H` pre-activation vector.
pub const GATE_INPUT: usize = 0;
pub const GATE_FORGET: usize = 1;
pub const GATE_OUTPUT: usize = 2;
pub const GATE_CELL: usize = 3;

/// Offsets of each tensor inside the flat parameter vector. The order is the
/// checkpoint order: `embed`, `w_rec`, `b_gate`, `w_out`, `b_out`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    pub alphabet_size: usize,
    pub hidden: usize,
    /// `(C+1) x 4H`: row `k` holds the gate pre-activation contributed by input symbol `k`
    /// (row `C` is the start-of-sequence symbol).
    pub embed: Range<usize>,
    /// `4H x H`, applied to the (masked) previous hidden state.
    pub w_rec: Range<usize>,
    pub b_gate: Range<usize>,
    /// `C x H`, applied to the (masked) current hidden state.
    pub w_out: Range<usize>,
    pub b_out: Range<usize>,
    pub len: usize,
}

impl Layout {
    pub fn new(alphabet_size: usize, hidden: usize) -> Self {
        let (c, h) = (alphabet_size, hidden);
        let mut at = 0;
        let mut take = |n: usize| {
            let r = at..at + n;
            at += n;
            r
        };
        let embed = take((c + 1) * 4 * h);
        let w_rec = take(4 * h * h);
        let b_gate = take(4 * h);
        let w_out = take(c * h);
        let b_out = take(c);
        Self { alphabet_size: c, hidden: h, embed, w_rec, b_gate, w_out, b_out, len: at }
    }

    pub fn tensors(&self) -> [(&'static str, Range<usize>); 5] {
        [
            ("embed", self.embed.clone()),
            ("w_rec", self.w_rec.clone()),
            ("b_gate", self.b_gate.clone()),
            ("w_out", self.w_out.clone()),
            ("b_out", self.b_out.clone()),
        ]
    }
}

/// Weights of the single-layer LSTM validity model, stored flat.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    layout: Layout,
    dropout: f64,
    pub(crate) data: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(alphabet_size: usize, hidden: usize, dropout: f64) -> Result<Self> {
        if alphabet_size == 0 || hidden == 0 {
            return Err(Error::Shape("alphabet size and hidden width must be positive".into()));
        }
        if !(0.0..1.0).contains(&dropout) {
            return Err(Error::Domain(format!("dropout rate {dropout} outside [0, 1)")));
        }
        let layout = Layout::new(alphabet_size, hidden);
        let data = vec![0.0; layout.len];
        Ok(Self { layout, dropout, data })
    }

    /// Uniform weights in `[-1/sqrt(H), 1/sqrt(H)]`, zero biases except the
    /// forget gate at `+1`.
    pub fn init<R: Rng + ?Sized>(alphabet_size: usize, hidden: usize, dropout: f64, rng: &mut R) -> Result<Self> {
        let mut p = Self::zeros(alphabet_size, hidden, dropout)?;
        let bound = 1.0 / (hidden as f64).sqrt();
        let l = p.layout.clone();
        for range in [l.embed.clone(), l.w_rec.clone(), l.w_out.clone()] {
            for w in &mut p.data[range] {
                *w = rng.gen_range(-bound..=bound);
            }
        }
        let forget = l.b_gate.start + GATE_FORGET * hidden;
        p.data[forget..forget + hidden].fill(1.0);
        Ok(p)
    }

    pub fn from_data(alphabet_size: usize, hidden: usize, dropout: f64, data: Vec<f64>) -> Result<Self> {
        let mut p = Self::zeros(alphabet_size, hidden, dropout)?;
        if data.len() != p.layout.len {
            return Err(Error::Shape(format!("expected {} parameters, got {}", p.layout.len, data.len())));
        }
        p.data = data;
        Ok(p)
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn alphabet_size(&self) -> usize {
        self.layout.alphabet_size
    }

    pub fn hidden(&self) -> usize {
        self.layout.hidden
    }

    pub fn dropout(&self) -> f64 {
        self.dropout
    }

    pub fn keep_prob(&self) -> f64 {
        1.0 - self.dropout
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|w| w.is_finite())
    }

    pub(crate) fn embed_row(&self, symbol: usize) -> &[f64] {
        let width = 4 * self.hidden();
        let start = self.layout.embed.start + symbol * width;
        &self.data[start..start + width]
    }

    pub(crate) fn w_rec(&self) -> &[f64] {
        &self.data[self.layout.w_rec.clone()]
    }

    pub(crate) fn b_gate(&self) -> &[f64] {
        &self.data[self.layout.b_gate.clone()]
    }

    pub(crate) fn w_out(&self) -> &[f64] {
        &self.data[self.layout.w_out.clone()]
    }

    pub(crate) fn b_out(&self) -> &[f64] {
        &self.data[self.layout.b_out.clone()]
    }
}

/// One posterior draw: binary masks on the recurrent hidden state and on the
/// input of the output projection, held fixed for a whole sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct DropoutMask {
    pub hidden: Vec<f64>,
    pub output: Vec<f64>,
}

impl DropoutMask {
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, hidden: usize, dropout: f64) -> Self {
        let mut draw = || (0..hidden).map(|_| if rng.gen::<f64>() < dropout { 0.0 } else { 1.0 }).collect();
        let hidden_mask = draw();
        let output = draw();
        Self { hidden: hidden_mask, output }
    }

    pub fn ones(hidden: usize) -> Self {
        Self { hidden: vec![1.0; hidden], output: vec![1.0; hidden] }
    }

    pub fn for_params<R: Rng + ?Sized>(rng: &mut R, params: &ModelParams) -> Self {
        Self::sample(rng, params.hidden(), params.dropout())
    }
}
