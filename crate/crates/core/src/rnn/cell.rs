use super::params::{DropoutMask, ModelParams, GATE_CELL, GATE_FORGET, GATE_INPUT, GATE_OUTPUT};
use crate::alphabet::Sequence;
use crate::error::{Error, Result};

/// Probabilities clamped to `[LOG_CLAMP, 1 - LOG_CLAMP]` inside the loss.
pub const LOG_CLAMP: f64 = 1e-7;

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Per-unit multipliers realizing a dropout mask, or the keep probability in
/// mean mode.
#[derive(Clone, Debug)]
pub struct Scales {
    pub rec: Vec<f64>,
    pub out: Vec<f64>,
}

impl Scales {
    pub fn new(params: &ModelParams, mask: Option<&DropoutMask>) -> Result<Self> {
        let h = params.hidden();
        match mask {
            Some(m) => {
                if m.hidden.len() != h || m.output.len() != h {
                    return Err(Error::Shape(format!(
                        "mask widths ({}, {}) do not match hidden width {h}",
                        m.hidden.len(),
                        m.output.len()
                    )));
                }
                Ok(Self { rec: m.hidden.clone(), out: m.output.clone() })
            }
            None => {
                let keep = params.keep_prob();
                Ok(Self { rec: vec![keep; h], out: vec![keep; h] })
            }
        }
    }
}

/// Recurrent state `(h, c)`.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl State {
    pub fn zeros(hidden: usize) -> Self {
        Self { h: vec![0.0; hidden], c: vec![0.0; hidden] }
    }
}

/// A parameter snapshot paired with one mask (or mean mode), stepped one
/// symbol at a time.
pub struct Stepper<'a> {
    params: &'a ModelParams,
    scales: Scales,
    masked_h: Vec<f64>,
    pre: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(params: &'a ModelParams, mask: Option<&DropoutMask>) -> Result<Self> {
        let h = params.hidden();
        Ok(Self { params, scales: Scales::new(params, mask)?, masked_h: vec![0.0; h], pre: vec![0.0; 4 * h] })
    }

    pub fn params(&self) -> &ModelParams {
        self.params
    }

    /// Index of the start-of-sequence input.
    pub fn start_symbol(&self) -> usize {
        self.params.alphabet_size()
    }

    /// Consumes `input`, advances `state`, and writes `o_t` for every character into `out`.
    pub fn step(&mut self, state: &mut State, input: usize, out: &mut [f64]) {
        advance(self.params, &self.scales, state, input, &mut self.masked_h, &mut self.pre);
        let h = self.params.hidden();
        let w_out = self.params.w_out();
        let b_out = self.params.b_out();
        for (k, o) in out.iter_mut().enumerate() {
            let row = &w_out[k * h..(k + 1) * h];
            let z: f64 = row.iter().zip(&state.h).zip(&self.scales.out).map(|((w, x), s)| w * x * s).sum();
            *o = sigmoid(z + b_out[k]);
        }
    }
}

/// One LSTM transition. Leaves gate activations in `pre` as `[i, f, o, g]`.
fn advance(params: &ModelParams, scales: &Scales, state: &mut State, input: usize, masked_h: &mut [f64], pre: &mut [f64]) {
    let h = params.hidden();
    for ((m, x), s) in masked_h.iter_mut().zip(&state.h).zip(&scales.rec) {
        *m = x * s;
    }
    let w_rec = params.w_rec();
    let embed = params.embed_row(input);
    let bias = params.b_gate();
    for r in 0..4 * h {
        pre[r] = embed[r] + bias[r] + dot(&w_rec[r * h..(r + 1) * h], masked_h);
    }
    for j in 0..h {
        let i = sigmoid(pre[GATE_INPUT * h + j]);
        let f = sigmoid(pre[GATE_FORGET * h + j]);
        let o = sigmoid(pre[GATE_OUTPUT * h + j]);
        let g = pre[GATE_CELL * h + j].tanh();
        pre[GATE_INPUT * h + j] = i;
        pre[GATE_FORGET * h + j] = f;
        pre[GATE_OUTPUT * h + j] = o;
        pre[GATE_CELL * h + j] = g;
        let c = f * state.c[j] + i * g;
        state.c[j] = c;
        state.h[j] = o * c.tanh();
    }
}

/// `o_t` over the alphabet at one step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutput(pub Vec<f64>);

fn check_sequence(params: &ModelParams, seq: &Sequence) -> Result<()> {
    if !seq.fits(params.alphabet_size()) {
        return Err(Error::Shape(format!("sequence uses symbols outside an alphabet of size {}", params.alphabet_size())));
    }
    Ok(())
}

/// Outputs `o_1..o_T`; step `t` sees only `x_1..x_{t-1}` (step 1 sees the start symbol).
pub fn forward(params: &ModelParams, mask: Option<&DropoutMask>, seq: &Sequence) -> Result<Vec<StepOutput>> {
    check_sequence(params, seq)?;
    let mut stepper = Stepper::new(params, mask)?;
    let mut state = State::zeros(params.hidden());
    let mut input = stepper.start_symbol();
    let mut outputs = Vec::with_capacity(seq.len());
    for &x in seq.symbols() {
        let mut out = vec![0.0; params.alphabet_size()];
        stepper.step(&mut state, input, &mut out);
        outputs.push(StepOutput(out));
        input = x as usize;
    }
    Ok(outputs)
}

/// `o_t|_{x_t}` for `t = 1..T`: the model's score for every prefix of `seq`.
pub fn prefix_scores(params: &ModelParams, mask: Option<&DropoutMask>, seq: &Sequence) -> Result<Vec<f64>> {
    check_sequence(params, seq)?;
    let scales = Scales::new(params, mask)?;
    let h = params.hidden();
    let mut state = State::zeros(h);
    let mut masked = vec![0.0; h];
    let mut pre = vec![0.0; 4 * h];
    let mut input = params.alphabet_size();
    let mut scores = Vec::with_capacity(seq.len());
    for &x in seq.symbols() {
        advance(params, &scales, &mut state, input, &mut masked, &mut pre);
        scores.push(sigmoid(selected_logit(params, &scales, &state.h, x as usize)));
        input = x as usize;
    }
    Ok(scores)
}

fn selected_logit(params: &ModelParams, scales: &Scales, h_t: &[f64], k: usize) -> f64 {
    let h = params.hidden();
    let row = &params.w_out()[k * h..(k + 1) * h];
    params.b_out()[k] + row.iter().zip(h_t).zip(&scales.out).map(|((w, x), s)| w * x * s).sum::<f64>()
}

/// Bernoulli cross-entropy of one step with the clamp applied.
pub fn step_loss(prob: f64, label: bool) -> f64 {
    let p = prob.clamp(LOG_CLAMP, 1.0 - LOG_CLAMP);
    if label {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Negative log-likelihood of the full-sequence label applied at every step.
pub fn loss(params: &ModelParams, mask: Option<&DropoutMask>, seq: &Sequence, label: bool) -> Result<f64> {
    Ok(prefix_scores(params, mask, seq)?.into_iter().map(|p| step_loss(p, label)).sum())
}

/// Reusable buffers for backpropagation through time.
pub struct Workspace {
    hidden: usize,
    len: usize,
    masked_prev: Vec<f64>,
    gates: Vec<f64>,
    c_prev: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
    h_out: Vec<f64>,
    dz: Vec<f64>,
    dh: Vec<f64>,
    dc: Vec<f64>,
    da: Vec<f64>,
    dmasked: Vec<f64>,
    pre: Vec<f64>,
}

impl Workspace {
    pub fn new(hidden: usize) -> Self {
        Self {
            hidden,
            len: 0,
            masked_prev: Vec::new(),
            gates: Vec::new(),
            c_prev: Vec::new(),
            c: Vec::new(),
            tanh_c: Vec::new(),
            h_out: Vec::new(),
            dz: Vec::new(),
            dh: vec![0.0; hidden],
            dc: vec![0.0; hidden],
            da: vec![0.0; 4 * hidden],
            dmasked: vec![0.0; hidden],
            pre: vec![0.0; 4 * hidden],
        }
    }

    fn reserve(&mut self, steps: usize) {
        let h = self.hidden;
        self.len = steps;
        for (buf, width) in [
            (&mut self.masked_prev, h),
            (&mut self.gates, 4 * h),
            (&mut self.c_prev, h),
            (&mut self.c, h),
            (&mut self.tanh_c, h),
            (&mut self.h_out, h),
        ] {
            buf.resize(steps * width, 0.0);
        }
        self.dz.resize(steps, 0.0);
    }
}

/// Adds the gradient of [`loss`] to `grad` and returns the loss.
///
/// The logit gradient is `o - label`, the exact derivative of the unclamped
/// loss; the two agree wherever the clamp is inactive.
pub fn accumulate_gradient(
    params: &ModelParams,
    mask: Option<&DropoutMask>,
    seq: &Sequence,
    label: bool,
    ws: &mut Workspace,
    grad: &mut [f64],
) -> Result<f64> {
    check_sequence(params, seq)?;
    if grad.len() != params.len() {
        return Err(Error::Shape(format!("gradient buffer {} != parameter count {}", grad.len(), params.len())));
    }
    if ws.hidden != params.hidden() {
        *ws = Workspace::new(params.hidden());
    }
    let scales = Scales::new(params, mask)?;
    let h = params.hidden();
    let c_size = params.alphabet_size();
    let steps = seq.len();
    let symbols = seq.symbols();
    let target = if label { 1.0 } else { 0.0 };
    ws.reserve(steps);

    let mut state = State::zeros(h);
    let mut loss = 0.0;
    for t in 0..steps {
        let input = if t == 0 { c_size } else { symbols[t - 1] as usize };
        ws.c_prev[t * h..(t + 1) * h].copy_from_slice(&state.c);
        let mut masked = std::mem::take(&mut ws.dmasked);
        advance(params, &scales, &mut state, input, &mut masked, &mut ws.pre);
        ws.masked_prev[t * h..(t + 1) * h].copy_from_slice(&masked);
        ws.dmasked = masked;
        ws.gates[t * 4 * h..(t + 1) * 4 * h].copy_from_slice(&ws.pre);
        ws.c[t * h..(t + 1) * h].copy_from_slice(&state.c);
        for j in 0..h {
            ws.tanh_c[t * h + j] = state.c[j].tanh();
            ws.h_out[t * h + j] = state.h[j] * scales.out[j];
        }
        let k = symbols[t] as usize;
        let z = params.b_out()[k] + dot(&params.w_out()[k * h..(k + 1) * h], &ws.h_out[t * h..(t + 1) * h]);
        let p = sigmoid(z);
        loss += step_loss(p, label);
        ws.dz[t] = p - target;
    }

    let layout = params.layout().clone();
    let w_rec = params.w_rec();
    let w_out = params.w_out();
    ws.dh.fill(0.0);
    ws.dc.fill(0.0);
    for t in (0..steps).rev() {
        let k = symbols[t] as usize;
        let dz = ws.dz[t];
        let h_out = &ws.h_out[t * h..(t + 1) * h];
        let out_row = layout.w_out.start + k * h;
        axpy(dz, h_out, &mut grad[out_row..out_row + h]);
        grad[layout.b_out.start + k] += dz;
        // dh accumulates the recurrent contribution carried from step t+1
        for j in 0..h {
            ws.dh[j] += dz * w_out[k * h + j] * scales.out[j];
        }
        let gates = &ws.gates[t * 4 * h..(t + 1) * 4 * h];
        for j in 0..h {
            let i = gates[GATE_INPUT * h + j];
            let f = gates[GATE_FORGET * h + j];
            let o = gates[GATE_OUTPUT * h + j];
            let g = gates[GATE_CELL * h + j];
            let tc = ws.tanh_c[t * h + j];
            let dh = ws.dh[j];
            let d_o = dh * tc;
            let dc = ws.dc[j] + dh * o * (1.0 - tc * tc);
            let di = dc * g;
            let dg = dc * i;
            let df = dc * ws.c_prev[t * h + j];
            ws.dc[j] = dc * f;
            ws.da[GATE_INPUT * h + j] = di * i * (1.0 - i);
            ws.da[GATE_FORGET * h + j] = df * f * (1.0 - f);
            ws.da[GATE_OUTPUT * h + j] = d_o * o * (1.0 - o);
            ws.da[GATE_CELL * h + j] = dg * (1.0 - g * g);
        }
        let input = if t == 0 { c_size } else { symbols[t - 1] as usize };
        let embed_row = layout.embed.start + input * 4 * h;
        axpy(1.0, &ws.da, &mut grad[embed_row..embed_row + 4 * h]);
        axpy(1.0, &ws.da, &mut grad[layout.b_gate.clone()]);
        let masked_prev = &ws.masked_prev[t * h..(t + 1) * h];
        ws.dmasked.fill(0.0);
        let grad_rec = &mut grad[layout.w_rec.clone()];
        for r in 0..4 * h {
            let a = ws.da[r];
            if a != 0.0 {
                axpy(a, masked_prev, &mut grad_rec[r * h..(r + 1) * h]);
                axpy(a, &w_rec[r * h..(r + 1) * h], &mut ws.dmasked);
            }
        }
        for j in 0..h {
            ws.dh[j] = ws.dmasked[j] * scales.rec[j];
        }
    }
    Ok(loss)
}

/// Loss and a freshly allocated gradient for one labeled sequence.
pub fn backward(params: &ModelParams, mask: Option<&DropoutMask>, seq: &Sequence, label: bool) -> Result<(f64, Vec<f64>)> {
    let mut grad = vec![0.0; params.len()];
    let mut ws = Workspace::new(params.hidden());
    let loss = accumulate_gradient(params, mask, seq, label, &mut ws, &mut grad)?;
    Ok((loss, grad))
}
