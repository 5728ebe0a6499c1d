//! Counterfactual run directions: rotate a player's velocity, rebuild the
//! graph and re-predict.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::detector::LabeledFrame;
use crate::error::{Error, Result};
use crate::gnn::{predict, ModelParams};
use crate::graph::{frame_to_graph, GraphOptions};
use crate::math;
use crate::tracking::{Frame, PitchSpec};

pub const DEFAULT_STEP: f64 = 15.0;
pub const MAX_ROTATION: f64 = 180.0;

/// Rotate one player's velocity by `degrees` (counter-clockwise). Speed and
/// every other entity are unchanged.
pub fn rotate_velocity(frame: &Frame, player_id: &str, degrees: f64) -> Result<Frame> {
    if !degrees.is_finite() {
        return Err(Error::NonFinite("rotation"));
    }
    let mut out = frame.clone();
    let p = out
        .players
        .iter_mut()
        .find(|p| p.player_id == player_id)
        .ok_or_else(|| Error::UnknownPlayer(player_id.to_string()))?;
    p.velocity = p.velocity.rotated_deg(degrees);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Rotation {
    pub player_id: String,
    pub degrees: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepEntry {
    pub degrees: f64,
    pub probability: f64,
    pub delta_percentage_points: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WhatIfResult {
    pub base_probability: f64,
    pub new_probability: f64,
    pub delta_percentage_points: f64,
    /// Empty for a joint query without a sweep.
    pub sweep: Vec<SweepEntry>,
    /// Highest-probability sweep entry; the earliest angle wins ties.
    pub best: Option<SweepEntry>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Leverage {
    pub player_id: String,
    pub best_degrees: f64,
    pub best_delta_percentage_points: f64,
}

fn delta_pp(base: f64, new: f64) -> f64 {
    100.0 * (new - base)
}

/// A trained model together with the graph settings it was trained with.
#[derive(Debug, Clone, Copy)]
pub struct FrameModel<'a> {
    pub params: &'a ModelParams,
    pub pitch: PitchSpec,
    pub options: GraphOptions,
}

impl FrameModel<'_> {
    pub fn predict_frame(&self, frame: &LabeledFrame) -> Result<f64> {
        predict(self.params, &frame_to_graph(frame, &self.pitch, self.options))
    }

    fn predict_with(&self, frame: &LabeledFrame, moved: Frame) -> Result<f64> {
        let f = LabeledFrame {
            frame: moved,
            ..frame.clone()
        };
        self.predict_frame(&f)
    }
}

/// Angles `0, step, 2·step, …` below 360.
pub fn sweep_angles(step: f64) -> Result<Vec<f64>> {
    let n = 360.0 / step;
    if !(step > 0.0 && step <= 360.0) || n != math::round(n) {
        return Err(Error::InvalidConfig(alloc::format!("rotation step {step} must divide 360")));
    }
    Ok((0..n as usize).map(|k| k as f64 * step).collect())
}

/// Predict at every rotation `k·step` of one player's velocity.
pub fn sweep_rotations(model: &FrameModel<'_>, frame: &LabeledFrame, player_id: &str, step: f64) -> Result<WhatIfResult> {
    let angles = sweep_angles(step)?;
    if frame.frame.player(player_id).is_none() {
        return Err(Error::UnknownPlayer(player_id.to_string()));
    }
    let base = model.predict_frame(frame)?;
    let mut sweep = Vec::with_capacity(angles.len());
    for degrees in angles {
        let probability = model.predict_with(frame, rotate_velocity(&frame.frame, player_id, degrees)?)?;
        sweep.push(SweepEntry {
            degrees,
            probability,
            delta_percentage_points: delta_pp(base, probability),
        });
    }
    let best = sweep
        .iter()
        .copied()
        .reduce(|a, b| if b.probability > a.probability { b } else { a });
    let new = best.map_or(base, |b| b.probability);
    Ok(WhatIfResult {
        base_probability: base,
        new_probability: new,
        delta_percentage_points: delta_pp(base, new),
        sweep,
        best,
    })
}

/// Apply all rotations at once and predict once.
pub fn joint_whatif(model: &FrameModel<'_>, frame: &LabeledFrame, rotations: &[Rotation]) -> Result<WhatIfResult> {
    let mut seen = BTreeSet::new();
    for r in rotations {
        if !seen.insert(r.player_id.as_str()) {
            return Err(Error::DuplicatePlayer(r.player_id.clone()));
        }
        if !(r.degrees.abs() <= MAX_ROTATION) {
            return Err(Error::InvalidConfig(alloc::format!(
                "rotation {} for `{}` outside [-180, 180]",
                r.degrees, r.player_id
            )));
        }
    }
    let base = model.predict_frame(frame)?;
    let mut moved = frame.frame.clone();
    for r in rotations {
        moved = rotate_velocity(&moved, &r.player_id, r.degrees)?;
    }
    let new = if rotations.is_empty() {
        base
    } else {
        model.predict_with(frame, moved)?
    };
    Ok(WhatIfResult {
        base_probability: base,
        new_probability: new,
        delta_percentage_points: delta_pp(base, new),
        sweep: Vec::new(),
        best: None,
    })
}

/// Sweep every player and order them by their best achievable delta,
/// largest first; ties go to the lexicographically smaller player id.
pub fn rank_players_by_leverage(model: &FrameModel<'_>, frame: &LabeledFrame, step: f64) -> Result<Vec<Leverage>> {
    let mut out = Vec::with_capacity(frame.frame.players.len());
    for p in &frame.frame.players {
        let r = sweep_rotations(model, frame, &p.player_id, step)?;
        let best = r.best.expect("sweep has at least one angle");
        out.push(Leverage {
            player_id: p.player_id.clone(),
            best_degrees: best.degrees,
            best_delta_percentage_points: best.delta_percentage_points,
        });
    }
    out.sort_by(|a, b| {
        b.best_delta_percentage_points
            .total_cmp(&a.best_delta_percentage_points)
            .then_with(|| a.player_id.cmp(&b.player_id))
    });
    Ok(out)
}
