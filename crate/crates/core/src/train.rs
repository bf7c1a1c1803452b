//! Optimizer settings, objective traces and the softmax helpers shared by
//! the linear and the neural models.

use std::fmt;

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probabilities are clamped to this before taking logs.
pub const PROB_FLOOR: f64 = 1e-300;

/// Maximum number of step halvings tried before a block update is skipped.
pub const MAX_HALVINGS: usize = 60;

/// Settings of the block-alternating optimizers.
///
/// Step sizes apply to the sample-averaged gradient, so `learning_rate`
/// does not depend on the training set size. A step that raises the
/// objective is retried with half the step size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub max_sweeps: usize,
    /// Gradient steps per block visit (linear models only; the neural
    /// models take one step per visit).
    pub inner_steps: usize,
    pub learning_rate: f64,
    /// Weight of `(l2 / 2) Σ ‖W‖²` in the objective.
    pub l2: f64,
    /// Training stops once a sweep lowers the objective by a smaller
    /// relative amount.
    pub rel_tol: f64,
    pub seed: u64,
    /// Initial weights of a `p × K` factor are uniform in
    /// `±init_scale / √p`.
    pub init_scale: f64,
    /// Append a constant slice along the last mode (bias channel).
    pub augment_ones: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_sweeps: 200,
            inner_steps: 10,
            learning_rate: 1.0,
            l2: 0.0,
            rel_tol: 1e-6,
            seed: 0,
            init_scale: 0.1,
            augment_ones: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.into()));
        if self.max_sweeps == 0 {
            return bad("max_sweeps must be positive");
        }
        if self.inner_steps == 0 {
            return bad("inner_steps must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be a positive number");
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return bad("l2 must be nonnegative");
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return bad("rel_tol must lie in (0, 1)");
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return bad("init_scale must be positive");
        }
        Ok(())
    }
}

/// Which parameter block an objective value was recorded after.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Block {
    /// Factor matrix of a mode (zero-based).
    Factor(usize),
    /// One hidden unit's factor column in one mode.
    Hidden { mode: usize, unit: usize },
    /// Hidden-to-output weights.
    Output,
    /// A dense weight matrix updated as a whole.
    Dense,
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Block::Factor(l) => write!(f, "W{}", l + 1),
            Block::Hidden { mode, unit } => write!(f, "w{}.{}", mode + 1, unit + 1),
            Block::Output => f.write_str("V"),
            Block::Dense => f.write_str("W"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub sweep: usize,
    pub block: Block,
    pub objective: f64,
}

/// Objective values recorded during training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub initial: f64,
    pub points: Vec<TracePoint>,
    pub sweeps: usize,
    pub converged: bool,
}

impl TrainTrace {
    pub(crate) fn new(initial: f64) -> Self {
        Self {
            initial,
            points: Vec::new(),
            sweeps: 0,
            converged: false,
        }
    }

    pub(crate) fn record(&mut self, sweep: usize, block: Block, objective: f64) -> Result<()> {
        if !objective.is_finite() {
            return Err(Error::NonFinite {
                sweep: sweep + 1,
                block: block.to_string(),
                value: objective,
            });
        }
        self.points.push(TracePoint {
            sweep,
            block,
            objective,
        });
        Ok(())
    }

    /// Initial objective followed by every recorded value.
    pub fn objectives(&self) -> Vec<f64> {
        std::iter::once(self.initial)
            .chain(self.points.iter().map(|p| p.objective))
            .collect()
    }

    pub fn final_objective(&self) -> f64 {
        self.points.last().map_or(self.initial, |p| p.objective)
    }

    /// Largest increase between consecutive recorded objectives (0 for a
    /// non-increasing trace).
    pub fn max_increase(&self) -> f64 {
        self.objectives()
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// `sweep,block,objective` lines with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sweep,block,objective\n");
        out.push_str(&format!("0,init,{:e}\n", self.initial));
        for p in &self.points {
            out.push_str(&format!("{},{},{:e}\n", p.sweep + 1, p.block, p.objective));
        }
        out
    }
}

/// Softmax with max subtraction.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// `-log p_label` with the probability clamped away from zero.
pub(crate) fn neg_log_prob(probs: &[f64], label: usize) -> f64 {
    -probs[label].max(PROB_FLOOR).ln()
}

/// A `rows × cols` matrix of uniform draws in `±scale`, filled column by
/// column.
pub(crate) fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Array2<f64> {
    let mut m = Array2::zeros((rows, cols));
    for k in 0..cols {
        for r in 0..rows {
            m[[r, k]] = rng.random_range(-scale..scale);
        }
    }
    m
}

/// Relative objective decrease over one sweep.
pub(crate) fn relative_decrease(previous: f64, current: f64) -> f64 {
    if previous == 0.0 {
        0.0
    } else {
        (previous - current) / previous.abs()
    }
}
