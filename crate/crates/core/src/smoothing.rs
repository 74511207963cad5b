//! Order-n exponential smoothing, for scalars and entrywise for relational
//! matrices.
//!
//! Stage 1 follows the samples, stage `m` follows stage `m - 1`, each with
//! `s <- s + gamma·(input - s)`. All stages start at the first sample, so a
//! constant input passes through unchanged from the start.

use crate::algebra::RelationalMatrix;
use crate::error::{Error, Result};

/// One convex blending step, kept inside the envelope of its two operands.
fn blend(state: f64, input: f64, gamma: f64) -> f64 {
    if gamma == 1.0 || state == input {
        return input;
    }
    (state + gamma * (input - state)).clamp(state.min(input), state.max(input))
}

/// Values that can be exponentially smoothed.
pub trait Smoothable: Clone {
    /// Moves `self` a fraction `gamma` toward `input`.
    fn blend_toward(&mut self, input: &Self, gamma: f64) -> Result<()>;
}

impl Smoothable for f64 {
    fn blend_toward(&mut self, input: &Self, gamma: f64) -> Result<()> {
        *self = blend(*self, *input, gamma);
        Ok(())
    }
}

impl Smoothable for RelationalMatrix {
    fn blend_toward(&mut self, input: &Self, gamma: f64) -> Result<()> {
        self.check_same_shape(input)?;
        for (s, &x) in self.entries_mut().iter_mut().zip(input.entries()) {
            *s = blend(*s, x, gamma);
        }
        Ok(())
    }
}

/// Cascade of `order` first-order exponential smoothers with rate `gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct Smoother<T> {
    gamma: f64,
    order: usize,
    stages: Option<Vec<T>>,
}

impl<T: Smoothable> Smoother<T> {
    pub fn new(gamma: f64, order: usize) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::config(format!(
                "filter rate gamma must be in (0, 1], got {gamma}"
            )));
        }
        if order == 0 {
            return Err(Error::config("filter order must be >= 1"));
        }
        Ok(Self {
            gamma,
            order,
            stages: None,
        })
    }

    /// Starts a smoother whose every stage already holds `value`.
    pub fn primed(gamma: f64, order: usize, value: T) -> Result<Self> {
        let mut s = Self::new(gamma, order)?;
        s.stages = Some(vec![value; order]);
        Ok(s)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn is_primed(&self) -> bool {
        self.stages.is_some()
    }

    /// The last-stage output, if any sample has been seen.
    pub fn output(&self) -> Option<&T> {
        self.stages.as_ref().and_then(|s| s.last())
    }

    /// Feeds one sample and returns the last-stage output. On a shape error
    /// the state is left untouched.
    pub fn smooth(&mut self, sample: &T) -> Result<T> {
        let gamma = self.gamma;
        let stages = match &mut self.stages {
            None => {
                let stages = self.stages.insert(vec![sample.clone(); self.order]);
                return Ok(stages[stages.len() - 1].clone());
            }
            Some(stages) => stages,
        };
        let mut next = stages.clone();
        next[0].blend_toward(sample, gamma)?;
        for m in 1..next.len() {
            let (prev, rest) = next.split_at_mut(m);
            rest[0].blend_toward(&prev[m - 1], gamma)?;
        }
        *stages = next;
        Ok(stages[stages.len() - 1].clone())
    }
}

/// Closed-form convolution of a first-order smoother started at `series[0]`:
/// `(1-γ)^(t+1)·y(0) + Σ_{i=0..=t} γ(1-γ)^(t-i)·y(i)`.
pub fn convolution_reference(series: &[f64], gamma: f64, t: usize) -> Result<f64> {
    if t >= series.len() {
        return Err(Error::Dimension {
            expected: series.len(),
            found: t,
        });
    }
    let keep = 1.0 - gamma;
    let head = keep.powi(t as i32 + 1) * series[0];
    let tail: f64 = series[..=t]
        .iter()
        .enumerate()
        .map(|(i, y)| gamma * keep.powi((t - i) as i32) * y)
        .sum();
    Ok(head + tail)
}
