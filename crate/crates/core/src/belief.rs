//! The observer's estimate of the observed agent's world belief.
//!
//! Each cell carries a probability distribution over the K block types.
//! Observed cells are integrated at probability 1 (one-hot overwrite); every
//! tick the whole grid then decays toward uniform by `b -> (b + eps) / (1 + K eps)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gridworld::{Facing, Observation, Pose};

/// Forgetfulness hyperparameter for the decay rule. Default 0.01.
pub const DEFAULT_FORGETFULNESS: f64 = 0.01;

#[derive(Debug, Error, PartialEq)]
pub enum BeliefError {
    #[error("dimension mismatch: belief is {bw}x{bh}, observation is {ow}x{oh}")]
    DimensionMismatch { bw: usize, bh: usize, ow: usize, oh: usize },
}

/// X by Y grid of distributions over K block types, plus the auxiliary
/// channels fed to the networks: mirrored agent pose, mission timer and the
/// last beep heard.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefState {
    pub width: usize,
    pub height: usize,
    pub k: usize,
    /// Index `(y * width + x) * k + block`.
    probs: Vec<f64>,
    pub pose: Pose,
    pub tick: u32,
    pub mission_ticks: u32,
    pub beep: u8,
}

/// Uniform belief over every cell; timer and beep start at zero.
pub fn init_belief(width: usize, height: usize, k: usize, mission_ticks: u32) -> BeliefState {
    assert!(width > 0 && height > 0 && k > 0);
    BeliefState {
        width,
        height,
        k,
        probs: vec![1.0 / k as f64; width * height * k],
        pose: Pose::new(0, 0, Facing::North),
        tick: 0,
        mission_ticks,
        beep: 0,
    }
}

impl BeliefState {
    pub fn cell(&self, x: usize, y: usize) -> &[f64] {
        let base = (y * self.width + x) * self.k;
        &self.probs[base..base + self.k]
    }

    fn cell_mut(&mut self, x: usize, y: usize) -> &mut [f64] {
        let base = (y * self.width + x) * self.k;
        &mut self.probs[base..base + self.k]
    }

    /// Most probable block type index at a cell; ties break to the lowest index.
    pub fn argmax(&self, x: usize, y: usize) -> usize {
        let cell = self.cell(x, y);
        let mut best = 0;
        for (i, p) in cell.iter().enumerate() {
            if *p > cell[best] {
                best = i;
            }
        }
        best
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Normalized mission timer in [0, 1].
    pub fn timer(&self) -> f64 {
        if self.mission_ticks == 0 {
            0.0
        } else {
            (self.tick as f64 / self.mission_ticks as f64).min(1.0)
        }
    }
}

/// Overwrite every visible cell with the one-hot of the observed block type;
/// unseen cells are untouched. Pose, timer and beep channels refresh.
pub fn integrate(belief: &BeliefState, obs: &Observation) -> Result<BeliefState, BeliefError> {
    if obs.width != belief.width || obs.height != belief.height {
        return Err(BeliefError::DimensionMismatch {
            bw: belief.width,
            bh: belief.height,
            ow: obs.width,
            oh: obs.height,
        });
    }
    let mut next = belief.clone();
    for y in 0..next.height {
        for x in 0..next.width {
            if let Some(block) = obs.cell(x, y).seen() {
                let cell = next.cell_mut(x, y);
                cell.fill(0.0);
                cell[block.index()] = 1.0;
            }
        }
    }
    next.pose = obs.pose;
    next.tick = obs.tick;
    next.beep = obs.beep;
    Ok(next)
}

/// Decay every entry by `b -> (b + eps) / (1 + K eps)`. The uniform
/// distribution is the unique fixed point for eps > 0, and each application
/// contracts the distance to uniform by `1 / (1 + K eps)`.
pub fn decay(belief: &BeliefState, eps: f64) -> BeliefState {
    assert!(eps >= 0.0, "forgetfulness must be non-negative");
    let mut next = belief.clone();
    let denom = 1.0 + belief.k as f64 * eps;
    for p in &mut next.probs {
        *p = (*p + eps) / denom;
    }
    next
}

/// One belief-model tick: integrate the observation, then decay.
pub fn update(belief: &BeliefState, obs: &Observation, eps: f64) -> Result<BeliefState, BeliefError> {
    Ok(decay(&integrate(belief, obs)?, eps))
}
