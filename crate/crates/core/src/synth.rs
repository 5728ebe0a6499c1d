//! Synthetic matches with known counterattack outcomes.
//!
//! Every generated sequence follows the same event skeleton regardless of its
//! outcome: a regain deep in the attacking team's half, zero to two
//! intermediate pass/reception pairs, a reception just outside the box, then a
//! final action at a location inside the box. The final action alone decides
//! the label (successful reception or carry versus failed reception or
//! first-time shot), so ball trajectories carry no information about the
//! outcome. The learnable signal is injected only into player kinematics of
//! in-sequence frames (by default only success-labeled ones), scaled by
//! `signal_strength`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::detector::SequenceLabel;
use crate::error::{Error, Result};
use crate::tracking::{
    attacks_positive_x, synchronize, BallState, EventKind, EventRecord, Frame, Gender, Outcome,
    PitchSpec, PlayerState, SyncedMatch, Team, Vec2,
};

/// Per-component weights of the injected signal.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SignalProfile {
    /// Multiplies the boost (m/s) added to attackers' velocity toward goal.
    pub attacker_vx: f64,
    /// Multiplies the lateral displacement (m) of defenders away from the ball.
    pub defender_displacement: f64,
}

impl Default for SignalProfile {
    fn default() -> Self {
        SignalProfile {
            attacker_vx: 1.0,
            defender_displacement: 1.0,
        }
    }
}

impl SignalProfile {
    pub const NONE: SignalProfile = SignalProfile {
        attacker_vx: 0.0,
        defender_displacement: 0.0,
    };

    pub fn attacker_vx_only() -> Self {
        SignalProfile {
            attacker_vx: 1.0,
            defender_displacement: 0.0,
        }
    }
}

/// Attacker velocity boost toward goal at full signal (m/s).
const VX_BOOST: f64 = 3.0;
/// Defender lateral displacement at full signal (m).
const DEFENDER_SHIFT: f64 = 8.0;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SynthConfig {
    pub match_id: String,
    pub gender: Gender,
    pub n_sequences: usize,
    /// Minimum tracking frames sampled inside each sequence span; long spans
    /// get more so every event stays within the sync tolerance.
    pub frames_per_sequence: usize,
    pub success_rate: f64,
    pub signal_strength: f64,
    /// Signal applied to frames of successful sequences.
    pub signal: SignalProfile,
    /// Signal applied to frames of failed sequences; none by default.
    pub failure_signal: SignalProfile,
    /// Probability of a shot in open play between sequences.
    pub gap_shot_rate: f64,
    /// Probability that an outfield player is missing from a frame.
    pub missing_player_rate: f64,
    pub pitch: PitchSpec,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            match_id: String::from("synthetic"),
            gender: Gender::Women,
            n_sequences: 40,
            frames_per_sequence: 5,
            success_rate: 0.5,
            signal_strength: 1.0,
            signal: SignalProfile::default(),
            failure_signal: SignalProfile::NONE,
            gap_shot_rate: 0.3,
            missing_player_rate: 0.0,
            pitch: PitchSpec::default(),
        }
    }
}

impl SynthConfig {
    /// Gender-dependent signal: a faster attacking run marks success in
    /// women's matches and failure in men's, so a model that cannot tell the
    /// two apart sees contradictory labels.
    pub fn with_gender_shift(mut self) -> Self {
        let (success, failure) = match self.gender {
            Gender::Women => (SignalProfile::attacker_vx_only(), SignalProfile::NONE),
            Gender::Men => (SignalProfile::NONE, SignalProfile::attacker_vx_only()),
        };
        self.signal = success;
        self.failure_signal = failure;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.pitch.validate()?;
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.success_rate)
            || !unit(self.signal_strength)
            || !unit(self.gap_shot_rate)
            || !unit(self.missing_player_rate)
        {
            return Err(Error::InvalidConfig(String::from(
                "success_rate, signal_strength, gap_shot_rate and missing_player_rate must lie in [0, 1]",
            )));
        }
        if self.frames_per_sequence == 0 {
            return Err(Error::InvalidConfig(String::from(
                "frames_per_sequence must be at least 1",
            )));
        }
        let finite = |p: &SignalProfile| p.attacker_vx.is_finite() && p.defender_displacement.is_finite();
        if !finite(&self.signal) || !finite(&self.failure_signal) {
            return Err(Error::InvalidConfig(String::from("signal profile must be finite")));
        }
        Ok(())
    }
}

/// Ground truth recorded while generating a sequence.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OracleSequence {
    pub team: Team,
    pub period: u8,
    pub start_event_id: u64,
    pub end_event_id: u64,
    pub start_ts: f64,
    pub end_ts: f64,
    pub label: SequenceLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticMatch {
    pub matched: SyncedMatch,
    pub oracle: Vec<OracleSequence>,
    pub n_shots: usize,
    pub n_shots_in_sequences: usize,
}

#[derive(Clone, Copy, PartialEq)]
enum Finish {
    Reception,
    Carry,
    FailedReception,
    Shot,
}

struct Generator<'a> {
    config: &'a SynthConfig,
    rng: ChaCha8Rng,
    frames: Vec<Frame>,
    events: Vec<EventRecord>,
    next_event_id: u64,
}

const HALF_TIME_TICK: u64 = 27_000;

fn ts(tick: u64) -> f64 {
    tick as f64 / 10.0
}

/// Generate one synthetic match. Deterministic for a fixed `seed`.
pub fn generate_synthetic_match(config: &SynthConfig, seed: u64) -> Result<SyntheticMatch> {
    config.validate()?;
    let mut g = Generator {
        config,
        rng: ChaCha8Rng::seed_from_u64(seed),
        frames: Vec::new(),
        events: Vec::new(),
        next_event_id: 1,
    };
    let mut oracle = Vec::with_capacity(config.n_sequences);
    let mut n_shots = 0;
    let mut n_shots_in_sequences = 0;
    let mut tick: u64 = 20;
    for k in 0..config.n_sequences {
        let period = if k < config.n_sequences.div_ceil(2) { 1 } else { 2 };
        if period == 2 && tick < HALF_TIME_TICK {
            tick = HALF_TIME_TICK + 20;
        }
        let (seq, end_tick, shot_inside) = g.sequence(tick, period);
        n_shots += shot_inside as usize;
        n_shots_in_sequences += shot_inside as usize;
        oracle.push(seq);
        tick = end_tick + g.rng.random_range(10..30);
        if g.rng.random_bool(config.gap_shot_rate) {
            g.gap_event(tick, period, EventKind::Shot);
            n_shots += 1;
            tick += g.rng.random_range(5..15);
        }
        g.gap_event(tick, period, EventKind::OutOfPlay);
        tick += g.rng.random_range(20..50);
    }
    let matched = synchronize(
        config.match_id.clone(),
        g.frames,
        g.events,
        config.gender,
        config.pitch,
    )?;
    Ok(SyntheticMatch {
        matched,
        oracle,
        n_shots,
        n_shots_in_sequences,
    })
}

impl Generator<'_> {
    fn event(&mut self, tick: u64, team: Team, kind: EventKind, loc: Vec2, outcome: Outcome, toward: bool) -> u64 {
        let id = self.next_event_id;
        self.next_event_id += 1;
        let pitch = &self.config.pitch;
        self.events.push(EventRecord {
            event_id: id,
            timestamp: ts(tick),
            team,
            player_id: format!("{}_{}", team.as_str(), self.rng.random_range(2..=11)),
            kind,
            location: pitch.orient(loc, toward).quantized(),
            outcome,
        });
        id
    }

    fn gap_event(&mut self, tick: u64, period: u8, kind: EventKind) {
        let team = if self.rng.random_bool(0.5) { Team::Home } else { Team::Away };
        let pitch = self.config.pitch;
        let loc = Vec2::new(
            self.rng.random_range(5.0..pitch.length - 5.0),
            self.rng.random_range(0.0..pitch.width),
        );
        self.event(tick, team, kind, loc, Outcome::Neutral, true);
        let frame = self.frame(tick, period, team, loc, Vec2::ZERO, None);
        self.frames.push(frame);
    }

    /// Returns the oracle record, the final tick and whether a shot was taken.
    fn sequence(&mut self, t0: u64, period: u8) -> (OracleSequence, u64, bool) {
        let pitch = self.config.pitch;
        let team = if self.rng.random_bool(0.5) { Team::Home } else { Team::Away };
        let toward = attacks_positive_x(team, period);
        let success = self.rng.random_bool(self.config.success_rate);
        let structured_a = self.rng.random_bool(0.5);
        let finish = match (success, structured_a) {
            (true, true) => Finish::Reception,
            (true, false) => Finish::Carry,
            (false, true) => Finish::FailedReception,
            (false, false) => Finish::Shot,
        };

        let start = Vec2::new(
            self.rng.random_range(15.0..45.0),
            self.rng.random_range(10.0..pitch.width - 10.0),
        );
        let setup = Vec2::new(
            self.rng.random_range(76.0..86.0),
            self.rng.random_range(12.0..pitch.width - 12.0),
        );
        let box_ = pitch.attacked_penalty_area();
        let target = Vec2::new(
            self.rng.random_range(box_.min.x + 2.5..box_.max.x - 4.0),
            self.rng.random_range(box_.min.y + 8.0..box_.max.y - 8.0),
        );
        let n_mid = self.rng.random_range(0..=2usize);
        let mut waypoints = Vec::with_capacity(n_mid + 1);
        for m in 1..=n_mid {
            let frac = m as f64 / (n_mid + 1) as f64;
            waypoints.push(Vec2::new(
                start.x + (setup.x - start.x) * frac,
                self.rng.random_range(8.0..pitch.width - 8.0),
            ));
        }
        waypoints.push(setup);

        // (tick, location) knots of the ball path, in attacking orientation
        let mut path: Vec<(u64, Vec2)> = Vec::new();
        let mut tick = t0;
        let start_id = self.event(tick, team, EventKind::Recovery, start, Outcome::Neutral, toward);
        path.push((tick, start));
        let mut prev = start;
        for w in waypoints {
            tick += self.step();
            self.event(tick, team, EventKind::Pass, prev, Outcome::Success, toward);
            path.push((tick, prev));
            tick += self.step();
            self.event(tick, team, EventKind::Reception, w, Outcome::Success, toward);
            path.push((tick, w));
            prev = w;
        }
        let mut shot = false;
        tick += self.step();
        let end_id = match finish {
            Finish::Reception | Finish::FailedReception => {
                self.event(tick, team, EventKind::Pass, prev, Outcome::Success, toward);
                path.push((tick, prev));
                tick += self.step();
                let outcome = if finish == Finish::Reception {
                    Outcome::Success
                } else {
                    Outcome::Failure
                };
                let id = self.event(tick, team, EventKind::Reception, target, outcome, toward);
                path.push((tick, target));
                if finish == Finish::FailedReception {
                    tick += 1;
                    let id = self.event(
                        tick,
                        team.opponent(),
                        EventKind::Clearance,
                        target,
                        Outcome::Neutral,
                        toward,
                    );
                    path.push((tick, target));
                    id
                } else {
                    id
                }
            }
            Finish::Carry => {
                let id = self.event(tick, team, EventKind::Carry, target, Outcome::Neutral, toward);
                path.push((tick, target));
                id
            }
            Finish::Shot => {
                shot = true;
                let id = self.event(tick, team, EventKind::Shot, target, Outcome::Failure, toward);
                path.push((tick, target));
                id
            }
        };
        let end_tick = tick;

        // lead-in frame outside the span, then frames sampled inside it
        let lead = t0 - 5;
        let frame = self.frame(lead, period, team, start, Vec2::ZERO, None);
        self.frames.push(frame);
        // keep every event within the sync tolerance of some frame
        let n_frames = self.config.frames_per_sequence.max(((end_tick - t0) / 15 + 1) as usize + 1);
        for t in sample_ticks(t0, end_tick, n_frames) {
            let (ball, ball_v) = interpolate(&path, t);
            let frame = self.frame(t, period, team, ball, ball_v, Some(success));
            self.frames.push(frame);
        }

        let label = if success {
            SequenceLabel::Success
        } else {
            SequenceLabel::Failure
        };
        (
            OracleSequence {
                team,
                period,
                start_event_id: start_id,
                end_event_id: end_id,
                start_ts: ts(t0),
                end_ts: ts(end_tick),
                label,
            },
            end_tick,
            shot,
        )
    }

    fn step(&mut self) -> u64 {
        self.rng.random_range(8..=14)
    }

    /// Build a frame around `ball` (attacking orientation of `team`).
    /// `signal` is `Some(label)` for frames inside a sequence.
    fn frame(&mut self, tick: u64, period: u8, team: Team, ball: Vec2, ball_v: Vec2, signal: Option<bool>) -> Frame {
        let c = self.config;
        let pitch = c.pitch;
        let toward = attacks_positive_x(team, period);
        let profile = match signal {
            Some(true) => c.signal,
            Some(false) => c.failure_signal,
            None => SignalProfile::NONE,
        };
        let boost = c.signal_strength;
        let noise = |mean: f64, sd: f64| Normal::new(mean, sd).expect("finite normal");
        let mut players = Vec::with_capacity(22);
        for side in [team, team.opponent()] {
            let attacking = side == team;
            for k in 1..=11u32 {
                let keeper = k == 1;
                if !keeper && self.rng.random_bool(c.missing_player_rate) {
                    continue;
                }
                let lane = pitch.width * (k as f64 - 1.5) / 10.0;
                let (mut pos, vel) = if keeper {
                    let x = if attacking {
                        self.rng.random_range(3.0..12.0)
                    } else {
                        self.rng.random_range(pitch.length - 10.0..pitch.length - 2.0)
                    };
                    let pos = Vec2::new(x, pitch.width / 2.0 + self.rng.random_range(-6.0..6.0));
                    let vel = Vec2::new(
                        noise(0.5, 0.5).sample(&mut self.rng),
                        noise(0.0, 0.5).sample(&mut self.rng),
                    );
                    (pos, vel)
                } else if attacking {
                    let pos = Vec2::new(
                        ball.x + self.rng.random_range(-25.0..8.0),
                        lane + noise(0.0, 4.0).sample(&mut self.rng),
                    );
                    // the full boost moves the forward component from -1.5 to
                    // +1.5 m/s on average, which leaves the speed distribution
                    // unchanged
                    let vel = Vec2::new(
                        noise(-VX_BOOST / 2.0, 1.5).sample(&mut self.rng) + boost * profile.attacker_vx * VX_BOOST,
                        noise(0.0, 5.0).sample(&mut self.rng),
                    );
                    (pos, vel)
                } else {
                    let mut pos = Vec2::new(
                        ball.x + self.rng.random_range(-5.0..25.0),
                        lane + noise(0.0, 4.0).sample(&mut self.rng),
                    );
                    let away = if pos.y >= ball.y { 1.0 } else { -1.0 };
                    pos.y += away * boost * profile.defender_displacement * DEFENDER_SHIFT;
                    let vel = Vec2::new(
                        noise(2.5, 1.5).sample(&mut self.rng),
                        noise(0.0, 1.5).sample(&mut self.rng),
                    );
                    (pos, vel)
                };
                pos.x = pos.x.clamp(1.0, pitch.length - 1.0);
                pos.y = pos.y.clamp(1.0, pitch.width - 1.0);
                let extrapolated = self.rng.random_bool(0.1);
                players.push(PlayerState {
                    player_id: format!("{}_{k}", side.as_str()),
                    team: side,
                    position: pitch.orient(pos, toward),
                    velocity: if toward { vel } else { vel.scale(-1.0) },
                    extrapolated,
                });
            }
        }
        let ball_v = Vec2::new(
            ball_v.x + self.rng.random_range(-0.5..0.5),
            ball_v.y + self.rng.random_range(-0.5..0.5),
        );
        let mut frame = Frame {
            frame_id: tick,
            timestamp: ts(tick),
            period,
            players,
            ball: BallState {
                position: pitch.orient(ball, toward),
                velocity: if toward { ball_v } else { ball_v.scale(-1.0) },
            },
            attacking_team: signal.map(|_| team),
        };
        frame.normalize();
        frame
    }
}

/// `n` ticks spread evenly over `[start, end]`, both ends included.
fn sample_ticks(start: u64, end: u64, n: usize) -> Vec<u64> {
    let span = end - start;
    if n == 1 {
        return alloc::vec![start + span / 2];
    }
    let mut ticks: Vec<u64> = (0..n)
        .map(|i| start + (i as u64 * span + (n as u64 - 1) / 2) / (n as u64 - 1))
        .collect();
    ticks.dedup();
    ticks
}

/// Position and velocity (m/s) along a piecewise-linear ball path.
fn interpolate(path: &[(u64, Vec2)], tick: u64) -> (Vec2, Vec2) {
    for w in path.windows(2) {
        let (t0, p0) = w[0];
        let (t1, p1) = w[1];
        if tick >= t0 && tick <= t1 && t1 > t0 {
            let f = (tick - t0) as f64 / (t1 - t0) as f64;
            let pos = Vec2::new(p0.x + (p1.x - p0.x) * f, p0.y + (p1.y - p0.y) * f);
            let vel = p1.sub(p0).scale(10.0 / (t1 - t0) as f64);
            return (pos, vel);
        }
    }
    let last = path.last().map(|p| p.1).unwrap_or(Vec2::ZERO);
    (last, Vec2::ZERO)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::{detect_counterattacks, label_frames, summary_stats, DetectorConfig};
    use crate::tracking::validate_frames;

    fn small(seed: u64) -> SyntheticMatch {
        let config = SynthConfig {
            n_sequences: 30,
            ..SynthConfig::default()
        };
        generate_synthetic_match(&config, seed).unwrap()
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(small(7), small(7));
        assert_ne!(small(7).matched.frames, small(8).matched.frames);
    }

    #[test]
    fn frames_are_valid_and_every_event_is_synced() {
        let m = small(3);
        validate_frames(&m.matched.frames, &m.matched.pitch).unwrap();
        assert_eq!(m.matched.dropped_events, 0);
    }

    #[test]
    fn default_detector_recovers_every_oracle_sequence() {
        let m = small(11);
        let seqs = detect_counterattacks(&m.matched, &DetectorConfig::default()).unwrap();
        assert_eq!(seqs.len(), m.oracle.len());
        for (s, o) in seqs.iter().zip(&m.oracle) {
            assert_eq!((s.start_event_id, s.end_event_id), (o.start_event_id, o.end_event_id));
            assert_eq!(s.label, o.label);
            assert_eq!(s.team, o.team);
        }
        let frames = label_frames(&m.matched, &seqs);
        // every in-span frame is labeled, none of the lead-in or gap frames
        let in_span = m
            .matched
            .frames
            .iter()
            .filter(|f| m.oracle.iter().any(|o| f.timestamp >= o.start_ts && f.timestamp <= o.end_ts))
            .count();
        assert_eq!(frames.len(), in_span);
        assert!(frames.len() >= 30 * 5);
    }

    #[test]
    fn summary_matches_oracle_bookkeeping() {
        let m = small(5);
        let seqs = detect_counterattacks(&m.matched, &DetectorConfig::default()).unwrap();
        let events: Vec<EventRecord> = m.matched.events.iter().map(|e| e.event.clone()).collect();
        let s = summary_stats(&seqs, &events);
        let successes = m.oracle.iter().filter(|o| o.label == SequenceLabel::Success).count();
        assert_eq!(s.n_sequences, m.oracle.len());
        assert_eq!(s.n_success, successes);
        assert_eq!(s.n_shots, m.n_shots);
        assert_eq!(s.n_shots_in_sequences, m.n_shots_in_sequences);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let config = SynthConfig {
            signal_strength: 1.5,
            ..SynthConfig::default()
        };
        assert!(generate_synthetic_match(&config, 0).is_err());
    }

    #[test]
    fn zero_sequences_is_empty() {
        let config = SynthConfig {
            n_sequences: 0,
            ..SynthConfig::default()
        };
        let m = generate_synthetic_match(&config, 0).unwrap();
        assert!(m.matched.frames.is_empty() && m.matched.events.is_empty() && m.oracle.is_empty());
    }

    #[test]
    fn tick_sampling_includes_both_ends() {
        assert_eq!(sample_ticks(10, 20, 3), alloc::vec![10, 15, 20]);
        assert_eq!(sample_ticks(10, 12, 5), alloc::vec![10, 11, 12]);
        assert_eq!(sample_ticks(10, 20, 1), alloc::vec![15]);
    }
}
