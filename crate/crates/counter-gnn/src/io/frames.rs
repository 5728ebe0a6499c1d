//! Labeled-frame JSON Lines, as written by `detect`: one oriented frame per
//! line with its counterattack label.

use std::path::Path;

use counter_gnn_core::detector::LabeledFrame;
use counter_gnn_core::tracking::{Gender, PitchSpec};
use serde::{Deserialize, Serialize};

use super::tracking::FrameLine;
use super::{read_lines, parse_line, write_jsonl};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledFrameLine {
    #[serde(default)]
    pub match_id: String,
    #[serde(default)]
    pub sequence_id: u32,
    #[serde(default)]
    pub label: u8,
    pub gender: Gender,
    pub frame: FrameLine,
}

impl LabeledFrameLine {
    pub fn from_labeled(f: &LabeledFrame) -> Self {
        LabeledFrameLine {
            match_id: f.match_id.clone(),
            sequence_id: f.sequence_id,
            label: f.label,
            gender: f.gender,
            frame: FrameLine::from_frame(&f.frame),
        }
    }

    /// Normalize and validate a single frame. Missing velocities are zero,
    /// since one frame has no predecessor to difference against.
    pub fn to_labeled(&self, pitch: &PitchSpec) -> counter_gnn_core::Result<LabeledFrame> {
        if self.label > 1 {
            return Err(counter_gnn_core::Error::InvalidFrame(format!(
                "label must be 0 or 1, got {}",
                self.label
            )));
        }
        let mut frame = self.frame.to_frame();
        frame.normalize();
        frame.validate(pitch)?;
        Ok(LabeledFrame {
            frame,
            label: self.label,
            match_id: self.match_id.clone(),
            sequence_id: self.sequence_id,
            gender: self.gender,
        })
    }
}

pub fn load_labeled_frames(path: &Path, pitch: &PitchSpec) -> Result<Vec<LabeledFrame>> {
    read_lines(path)?
        .into_iter()
        .map(|(n, text)| {
            let line: LabeledFrameLine = parse_line(path, n, &text)?;
            line.to_labeled(pitch).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: n,
                field: Some("frame".into()),
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn save_labeled_frames(path: &Path, frames: &[LabeledFrame]) -> Result<()> {
    let lines: Vec<LabeledFrameLine> = frames.iter().map(LabeledFrameLine::from_labeled).collect();
    write_jsonl(path, &lines)
}
