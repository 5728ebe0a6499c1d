//! Tracking JSON Lines: one frame per line.
//!
//! ```json
//! {"frame_id":0,"timestamp":0.0,"period":1,
//!  "ball":{"x":52.5,"y":34.0,"vx":0.0,"vy":0.0},
//!  "players":[{"id":"h7","team":"home","x":40.0,"y":30.0,"vx":1.5,"vy":0.0,"extrapolated":false}]}
//! ```
//!
//! Velocities are optional; any entity missing one gets the backward
//! difference over the file. Positions are snapped to the coordinate grid and
//! speeds clamped on load, so writing and re-reading is lossless.

use std::path::Path;

use counter_gnn_core::tracking::{
    derive_velocities, BallState, Frame, PitchSpec, PlayerState, Team, Vec2, FRAME_DT,
};
use serde::{Deserialize, Serialize};

use super::{parse_line, read_lines, write_jsonl};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallLine {
    pub x: f64,
    pub y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerLine {
    pub id: String,
    pub team: Team,
    pub x: f64,
    pub y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vy: Option<f64>,
    #[serde(default)]
    pub extrapolated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameLine {
    pub frame_id: u64,
    pub timestamp: f64,
    pub period: u8,
    pub ball: BallLine,
    pub players: Vec<PlayerLine>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attacking_team: Option<Team>,
}

fn velocity(vx: Option<f64>, vy: Option<f64>) -> Option<Vec2> {
    Some(Vec2::new(vx?, vy?))
}

impl FrameLine {
    /// Whether every entity carries both velocity components.
    pub fn has_velocities(&self) -> bool {
        velocity(self.ball.vx, self.ball.vy).is_some()
            && self.players.iter().all(|p| velocity(p.vx, p.vy).is_some())
    }

    /// Missing velocities become zero.
    pub fn to_frame(&self) -> Frame {
        Frame {
            frame_id: self.frame_id,
            timestamp: self.timestamp,
            period: self.period,
            players: self
                .players
                .iter()
                .map(|p| PlayerState {
                    player_id: p.id.clone(),
                    team: p.team,
                    position: Vec2::new(p.x, p.y),
                    velocity: velocity(p.vx, p.vy).unwrap_or(Vec2::ZERO),
                    extrapolated: p.extrapolated,
                })
                .collect(),
            ball: BallState {
                position: Vec2::new(self.ball.x, self.ball.y),
                velocity: velocity(self.ball.vx, self.ball.vy).unwrap_or(Vec2::ZERO),
            },
            attacking_team: self.attacking_team,
        }
    }

    pub fn from_frame(frame: &Frame) -> Self {
        FrameLine {
            frame_id: frame.frame_id,
            timestamp: frame.timestamp,
            period: frame.period,
            ball: BallLine {
                x: frame.ball.position.x,
                y: frame.ball.position.y,
                vx: Some(frame.ball.velocity.x),
                vy: Some(frame.ball.velocity.y),
            },
            players: frame
                .players
                .iter()
                .map(|p| PlayerLine {
                    id: p.player_id.clone(),
                    team: p.team,
                    x: p.position.x,
                    y: p.position.y,
                    vx: Some(p.velocity.x),
                    vy: Some(p.velocity.y),
                    extrapolated: p.extrapolated,
                })
                .collect(),
            attacking_team: frame.attacking_team,
        }
    }
}

/// Convert parsed lines into validated, normalized frames sorted by id.
/// `lines` pairs each record with its source line number for error reports.
pub fn frames_from_lines(path: &Path, mut lines: Vec<(usize, FrameLine)>, pitch: &PitchSpec) -> Result<Vec<Frame>> {
    pitch.validate()?;
    lines.sort_by_key(|(_, l)| l.frame_id);
    if let Some(w) = lines.windows(2).find(|w| w[0].1.frame_id == w[1].1.frame_id) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: w[1].0,
            field: Some("frame_id".into()),
            message: format!("duplicate frame_id {}", w[1].1.frame_id),
        });
    }
    let mut frames: Vec<Frame> = lines.iter().map(|(_, l)| l.to_frame()).collect();
    for f in &mut frames {
        f.normalize();
    }
    if !lines.iter().all(|(_, l)| l.has_velocities()) {
        let derived = derive_velocities(&frames, FRAME_DT)?;
        for ((frame, derived), (_, line)) in frames.iter_mut().zip(&derived).zip(&lines) {
            if velocity(line.ball.vx, line.ball.vy).is_none() {
                frame.ball.velocity = derived.ball.velocity;
            }
            for ((p, d), pl) in frame.players.iter_mut().zip(&derived.players).zip(&line.players) {
                if velocity(pl.vx, pl.vy).is_none() {
                    p.velocity = d.velocity;
                }
            }
        }
    }
    for (frame, (line, _)) in frames.iter().zip(&lines) {
        frame.validate(pitch).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: *line,
            field: None,
            message: e.to_string(),
        })?;
    }
    Ok(frames)
}

pub fn load_tracking(path: &Path, pitch: &PitchSpec) -> Result<Vec<Frame>> {
    let lines = read_lines(path)?
        .into_iter()
        .map(|(n, text)| Ok((n, parse_line::<FrameLine>(path, n, &text)?)))
        .collect::<Result<Vec<_>>>()?;
    frames_from_lines(path, lines, pitch)
}

pub fn save_tracking(path: &Path, frames: &[Frame]) -> Result<()> {
    let lines: Vec<FrameLine> = frames.iter().map(FrameLine::from_frame).collect();
    write_jsonl(path, &lines)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    #[test]
    fn empty_file_is_empty() {
        let f = write(&[]);
        assert!(load_tracking(f.path(), &PitchSpec::default()).unwrap().is_empty());
    }

    #[test]
    fn center_player() {
        let f = write(&[
            r#"{"frame_id":0,"timestamp":0.0,"period":1,"ball":{"x":52.5,"y":34.0,"vx":0,"vy":0},"players":[{"id":"a","team":"home","x":52.5,"y":34.0,"vx":0,"vy":0,"extrapolated":false}]}"#,
        ]);
        let frames = load_tracking(f.path(), &PitchSpec::default()).unwrap();
        assert_eq!(frames.len(), 1);
        assert_eq!(frames[0].players[0].position, Vec2::new(52.5, 34.0));
    }

    #[test]
    fn far_player_names_position_and_line() {
        let f = write(&[
            r#"{"frame_id":0,"timestamp":0.0,"period":1,"ball":{"x":1,"y":1},"players":[{"id":"a","team":"home","x":1.0,"y":1.0}]}"#,
            r#"{"frame_id":1,"timestamp":0.1,"period":1,"ball":{"x":1,"y":1},"players":[{"id":"a","team":"home","x":1e9,"y":1.0}]}"#,
        ]);
        match load_tracking(f.path(), &PitchSpec::default()) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("position"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_fields_report_path() {
        let f = write(&[r#"{"frame_id":0,"timestamp":0.0,"period":1,"ball":{"x":1,"y":1},"players":[{"id":"a","x":1.0,"y":1.0}]}"#]);
        match load_tracking(f.path(), &PitchSpec::default()) {
            Err(Error::Parse { line, field, .. }) => {
                assert_eq!(line, 1);
                assert_eq!(field.as_deref(), Some("players[0]"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn absent_velocities_are_derived_and_frames_sorted() {
        let f = write(&[
            r#"{"frame_id":1,"timestamp":0.1,"period":1,"ball":{"x":2,"y":1},"players":[{"id":"a","team":"home","x":11.0,"y":10.0}]}"#,
            r#"{"frame_id":0,"timestamp":0.0,"period":1,"ball":{"x":1,"y":1},"players":[{"id":"a","team":"home","x":10.0,"y":10.0,"vx":0.5,"vy":0.0}]}"#,
        ]);
        let frames = load_tracking(f.path(), &PitchSpec::default()).unwrap();
        assert_eq!(frames[0].frame_id, 0);
        // provided velocity kept
        assert_eq!(frames[0].players[0].velocity, Vec2::new(0.5, 0.0));
        assert!((frames[1].players[0].velocity.x - 10.0).abs() < 1e-9);
        assert!((frames[1].ball.velocity.x - 10.0).abs() < 1e-9);
    }

    #[test]
    fn duplicate_frame_ids_rejected() {
        let l = r#"{"frame_id":3,"timestamp":0.3,"period":1,"ball":{"x":1,"y":1},"players":[{"id":"a","team":"home","x":1.0,"y":1.0}]}"#;
        let f = write(&[l, l]);
        assert!(matches!(
            load_tracking(f.path(), &PitchSpec::default()),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
