//! Rule-based counterattack detection over synchronized event streams, and
//! propagation of each sequence's outcome onto its tracking frames.
//!
//! A candidate opens on a regain (interception, tackle or recovery) by a team
//! that was not already in possession, located inside the regain zone of its
//! own attacking orientation. It runs over that team's consecutive events and
//! closes on the first of: an opponent event other than a foul, an
//! out-of-play event, a shot, ball control inside the attacked penalty area
//! (a carry located in the box or a successful reception in the box), or
//! `max_duration` elapsing. It is kept when the ball advances at least
//! `min_forward_progress` toward goal within `progress_window`, using no more
//! than `max_completed_passes` completed passes to get there.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::format;

use crate::error::{Error, Result};
use crate::tracking::{
    attacks_positive_x, EventKind, EventRecord, Frame, Gender, Outcome, SyncedMatch, Team,
};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct DetectorConfig {
    /// Regain must happen at or before this fraction of the pitch length,
    /// measured in the regaining team's attacking direction.
    pub regain_zone_max_x: f64,
    pub max_completed_passes: u32,
    /// Seconds.
    pub max_duration: f64,
    /// Meters.
    pub min_forward_progress: f64,
    /// Seconds.
    pub progress_window: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            regain_zone_max_x: 0.6,
            max_completed_passes: 4,
            max_duration: 15.0,
            min_forward_progress: 25.0,
            progress_window: 10.0,
        }
    }
}

impl DetectorConfig {
    /// Loose thresholds, used to check recall against generated sequences.
    pub fn permissive() -> Self {
        DetectorConfig {
            regain_zone_max_x: 1.0,
            max_completed_passes: 20,
            max_duration: 60.0,
            min_forward_progress: 5.0,
            progress_window: 60.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.regain_zone_max_x > 0.0
            && self.regain_zone_max_x <= 1.0
            && self.max_completed_passes > 0
            && self.max_duration > 0.0
            && self.min_forward_progress > 0.0
            && self.progress_window > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("detector thresholds out of range: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum SequenceLabel {
    Success,
    Failure,
}

impl SequenceLabel {
    pub fn as_u8(self) -> u8 {
        match self {
            SequenceLabel::Success => 1,
            SequenceLabel::Failure => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CounterattackSequence {
    pub match_id: String,
    /// Index of the sequence within its match.
    pub sequence_id: u32,
    pub team: Team,
    pub period: u8,
    pub start_event_id: u64,
    pub end_event_id: u64,
    pub start_ts: f64,
    pub end_ts: f64,
    pub label: SequenceLabel,
    pub frame_ids: Vec<u64>,
}

/// A frame inside a counterattack, oriented so the attacking team plays
/// toward `x = length`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFrame {
    pub frame: Frame,
    pub label: u8,
    pub match_id: String,
    pub sequence_id: u32,
    pub gender: Gender,
}

struct Candidate {
    end_idx: usize,
    ended_by_opponent: bool,
    label: SequenceLabel,
    kept: bool,
}

/// Detect counterattack sequences in one match.
pub fn detect_counterattacks(
    matched: &SyncedMatch,
    config: &DetectorConfig,
) -> Result<Vec<CounterattackSequence>> {
    config.validate()?;
    let events = &matched.events;
    let pitch = &matched.pitch;
    let mut out = Vec::new();
    let mut possessor: Option<Team> = None;
    let mut i = 0;
    while i < events.len() {
        let start = &events[i].event;
        let period = matched.event_period(&events[i]);
        let toward = attacks_positive_x(start.team, period);
        let start_x = pitch.orient(start.location, toward).x;
        if start.kind.is_regain()
            && possessor != Some(start.team)
            && start_x <= config.regain_zone_max_x * pitch.length
        {
            let cand = extend(matched, i, config);
            let end = &events[cand.end_idx].event;
            let frame_ids = frames_in_span(&matched.frames, start.timestamp, end.timestamp);
            if cand.kept && !frame_ids.is_empty() {
                out.push(CounterattackSequence {
                    match_id: matched.match_id.clone(),
                    sequence_id: out.len() as u32,
                    team: start.team,
                    period,
                    start_event_id: start.event_id,
                    end_event_id: end.event_id,
                    start_ts: start.timestamp,
                    end_ts: end.timestamp,
                    label: cand.label,
                    frame_ids,
                });
                possessor = Some(start.team);
                if cand.ended_by_opponent {
                    // the closing opponent event may itself open a new sequence
                    i = cand.end_idx;
                } else {
                    possessor = next_possessor(possessor, end);
                    i = cand.end_idx + 1;
                }
                continue;
            }
        }
        possessor = next_possessor(possessor, start);
        i += 1;
    }
    Ok(out)
}

fn next_possessor(current: Option<Team>, event: &EventRecord) -> Option<Team> {
    match event.kind {
        EventKind::OutOfPlay => None,
        EventKind::Foul => current,
        _ => Some(event.team),
    }
}

fn extend(matched: &SyncedMatch, start_idx: usize, config: &DetectorConfig) -> Candidate {
    let events = &matched.events;
    let pitch = &matched.pitch;
    let start = &events[start_idx];
    let team = start.event.team;
    let toward = attacks_positive_x(team, matched.event_period(start));
    let start_x = pitch.orient(start.event.location, toward).x;
    let start_ts = start.event.timestamp;
    let penalty_area = pitch.attacked_penalty_area();

    let mut end_idx = start_idx;
    let mut ended_by_opponent = false;
    let mut label = SequenceLabel::Failure;
    let mut passes = 0u32;
    let mut passes_at_progress: Option<u32> = None;

    for (j, synced) in events.iter().enumerate().skip(start_idx + 1) {
        let e = &synced.event;
        if e.timestamp - start_ts > config.max_duration {
            break;
        }
        end_idx = j;
        if e.kind == EventKind::OutOfPlay {
            break;
        }
        if e.team != team {
            if e.kind == EventKind::Foul {
                continue;
            }
            ended_by_opponent = true;
            break;
        }
        let loc = pitch.orient(e.location, toward);
        if passes_at_progress.is_none()
            && e.timestamp - start_ts <= config.progress_window
            && loc.x - start_x >= config.min_forward_progress
        {
            passes_at_progress = Some(passes);
        }
        if e.kind == EventKind::Pass && e.outcome == Outcome::Success {
            passes += 1;
        }
        if e.kind == EventKind::Shot {
            break;
        }
        let controls_ball = e.kind == EventKind::Carry
            || (e.kind == EventKind::Reception && e.outcome == Outcome::Success);
        if controls_ball && penalty_area.contains(loc) {
            label = SequenceLabel::Success;
            break;
        }
    }

    let end_ts = events[end_idx].event.timestamp;
    let kept = end_ts > start_ts
        && passes_at_progress.is_some_and(|p| p <= config.max_completed_passes);
    Candidate {
        end_idx,
        ended_by_opponent,
        label,
        kept,
    }
}

fn frames_in_span(frames: &[Frame], start_ts: f64, end_ts: f64) -> Vec<u64> {
    let lo = frames.partition_point(|f| f.timestamp < start_ts);
    frames[lo..]
        .iter()
        .take_while(|f| f.timestamp <= end_ts)
        .map(|f| f.frame_id)
        .collect()
}

/// Emit every frame inside a sequence span, labeled with the sequence outcome
/// and oriented so the counterattacking team attacks toward `x = length`.
pub fn label_frames(matched: &SyncedMatch, sequences: &[CounterattackSequence]) -> Vec<LabeledFrame> {
    let mut out = Vec::new();
    for seq in sequences {
        for id in &seq.frame_ids {
            let Some(frame) = matched.frame(*id) else {
                continue;
            };
            if frame.timestamp < seq.start_ts || frame.timestamp > seq.end_ts {
                continue;
            }
            let mut f = if attacks_positive_x(seq.team, frame.period) {
                frame.clone()
            } else {
                frame.mirrored(&matched.pitch)
            };
            f.attacking_team = Some(seq.team);
            out.push(LabeledFrame {
                frame: f,
                label: seq.label.as_u8(),
                match_id: seq.match_id.clone(),
                sequence_id: seq.sequence_id,
                gender: matched.gender,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CounterattackSummary {
    pub n_sequences: usize,
    pub n_success: usize,
    pub success_rate: f64,
    pub n_shots: usize,
    pub n_shots_in_sequences: usize,
    /// Share of all shots taken by a counterattacking team inside its sequence.
    pub shot_share: f64,
}

pub fn summary_stats(sequences: &[CounterattackSequence], shots: &[EventRecord]) -> CounterattackSummary {
    let n_sequences = sequences.len();
    let n_success = sequences
        .iter()
        .filter(|s| s.label == SequenceLabel::Success)
        .count();
    let shots: Vec<&EventRecord> = shots.iter().filter(|e| e.kind == EventKind::Shot).collect();
    let n_shots_in_sequences = shots
        .iter()
        .filter(|shot| {
            sequences.iter().any(|s| {
                s.team == shot.team && shot.timestamp >= s.start_ts && shot.timestamp <= s.end_ts
            })
        })
        .count();
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    CounterattackSummary {
        n_sequences,
        n_success,
        success_rate: ratio(n_success, n_sequences),
        n_shots: shots.len(),
        n_shots_in_sequences,
        shot_share: ratio(n_shots_in_sequences, shots.len()),
    }
}
