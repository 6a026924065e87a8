use rand::Rng;

use super::cell::{State, Stepper};
use super::params::{DropoutMask, ModelParams};

/// A model rolled out one symbol at a time, holding its own recurrent state.
pub trait Rollout {
    fn alphabet_size(&self) -> usize;

    /// Returns to the empty prefix.
    fn reset(&mut self);

    /// Feeds the previous symbol (`None` at the first step) and writes `o_t`
    /// for every candidate character into `out`.
    fn step(&mut self, prev: Option<u8>, out: &mut [f64]);
}

/// Source of posterior draws (for acquisition) and of a single mean-mode
/// predictor (for evaluation and sampling).
pub trait PosteriorModel {
    type Draw<'a>: Rollout
    where
        Self: 'a;

    fn alphabet_size(&self) -> usize;

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Draw<'_>;

    fn mean(&self) -> Self::Draw<'_>;
}

/// [`ModelParams`] under one fixed mask, or in mean mode.
pub struct LstmRollout<'a> {
    stepper: Stepper<'a>,
    state: State,
}

impl<'a> LstmRollout<'a> {
    pub fn new(params: &'a ModelParams, mask: Option<&DropoutMask>) -> Self {
        let stepper = Stepper::new(params, mask).expect("mask shaped for these params");
        Self { stepper, state: State::zeros(params.hidden()) }
    }
}

impl Rollout for LstmRollout<'_> {
    fn alphabet_size(&self) -> usize {
        self.stepper.params().alphabet_size()
    }

    fn reset(&mut self) {
        self.state = State::zeros(self.stepper.params().hidden());
    }

    fn step(&mut self, prev: Option<u8>, out: &mut [f64]) {
        let input = prev.map_or(self.stepper.start_symbol(), |s| s as usize);
        self.stepper.step(&mut self.state, input, out);
    }
}

impl PosteriorModel for ModelParams {
    type Draw<'a> = LstmRollout<'a>;

    fn alphabet_size(&self) -> usize {
        ModelParams::alphabet_size(self)
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> LstmRollout<'_> {
        let mask = DropoutMask::for_params(rng, self);
        LstmRollout::new(self, Some(&mask))
    }

    fn mean(&self) -> LstmRollout<'_> {
        LstmRollout::new(self, None)
    }
}
