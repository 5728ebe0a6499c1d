//! Tracking and event domain types, velocity derivation and
//! tracking/event synchronization.
//!
//! Coordinates are meters with the origin at a pitch corner. The home team
//! attacks toward `x = length` in period 1 and toward `x = 0` in period 2.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::math;

/// Player speed bound applied after ingestion (m/s).
pub const MAX_PLAYER_SPEED: f64 = 13.0;
/// Ball speed bound applied after ingestion (m/s).
pub const MAX_BALL_SPEED: f64 = 40.0;
/// Players may stand this far outside the touchlines.
pub const POSITION_MARGIN: f64 = 5.0;
/// Tracking sample spacing at 10 Hz.
pub const FRAME_DT: f64 = 0.1;
/// Events farther than this from every frame are dropped by [`synchronize`].
pub const SYNC_TOLERANCE: f64 = 1.0;
/// Positions are snapped to multiples of this (2^-20 m) so that reflecting a
/// frame across the pitch is exact in floating point.
pub const COORD_QUANTUM: f64 = 1.0 / 1_048_576.0;
pub const MAX_PLAYERS: usize = 22;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn norm(self) -> f64 {
        math::hypot(self.x, self.y)
    }

    pub fn sub(self, other: Vec2) -> Vec2 {
        Vec2::new(self.x - other.x, self.y - other.y)
    }

    pub fn scale(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Snap both components to the [`COORD_QUANTUM`] grid.
    pub fn quantized(self) -> Vec2 {
        let q = |v: f64| math::round(v / COORD_QUANTUM) * COORD_QUANTUM;
        Vec2::new(q(self.x), q(self.y))
    }

    /// Counter-clockwise rotation by `degrees`.
    pub fn rotated_deg(self, degrees: f64) -> Vec2 {
        let (s, c) = math::sin_cos_deg(degrees);
        Vec2::new(self.x * c - self.y * s, self.x * s + self.y * c)
    }

    /// Rescale so the norm does not exceed `max`. Idempotent: the result's
    /// norm is at most `max` even after rounding.
    pub fn clamp_norm(self, max: f64) -> Vec2 {
        let n = self.norm();
        if n <= max {
            return self;
        }
        let mut v = self.scale(max / n);
        while v.norm() > max {
            v = v.scale(1.0 - f64::EPSILON);
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Team {
    Home,
    Away,
}

impl Team {
    pub fn opponent(self) -> Team {
        match self {
            Team::Home => Team::Away,
            Team::Away => Team::Home,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Team::Home => "home",
            Team::Away => "away",
        }
    }

    pub fn parse(s: &str) -> Option<Team> {
        match s {
            "home" => Some(Team::Home),
            "away" => Some(Team::Away),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Gender {
    Women,
    Men,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Women => "women",
            Gender::Men => "men",
        }
    }

    pub fn parse(s: &str) -> Option<Gender> {
        match s {
            "women" => Some(Gender::Women),
            "men" => Some(Gender::Men),
            _ => None,
        }
    }
}

/// Whether `team` attacks toward `x = length` during `period`.
pub fn attacks_positive_x(team: Team, period: u8) -> bool {
    matches!((team, period), (Team::Home, 1) | (Team::Away, 2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: Vec2,
    pub max: Vec2,
}

impl Rect {
    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct PitchSpec {
    pub length: f64,
    pub width: f64,
    pub penalty_area_depth: f64,
    pub penalty_area_width: f64,
}

impl Default for PitchSpec {
    fn default() -> Self {
        PitchSpec {
            length: 105.0,
            width: 68.0,
            penalty_area_depth: 16.5,
            penalty_area_width: 40.32,
        }
    }
}

impl PitchSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = self.length > 0.0
            && self.width > 0.0
            && self.penalty_area_depth > 0.0
            && self.penalty_area_width > 0.0
            && self.penalty_area_depth <= self.length / 2.0
            && self.penalty_area_width <= self.width;
        if ok && self.length.is_finite() && self.width.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "pitch {}x{} with penalty area {}x{} is not valid",
                self.length, self.width, self.penalty_area_depth, self.penalty_area_width
            )))
        }
    }

    pub fn diagonal(&self) -> f64 {
        math::hypot(self.length, self.width)
    }

    /// Goal the home team defends in period 1.
    pub fn goal_center_home(&self) -> Vec2 {
        Vec2::new(0.0, self.width / 2.0)
    }

    /// Goal the away team defends in period 1.
    pub fn goal_center_away(&self) -> Vec2 {
        Vec2::new(self.length, self.width / 2.0)
    }

    /// Penalty area in front of the goal `side` defends in period 1.
    pub fn penalty_area(&self, side: Team) -> Rect {
        let half = self.penalty_area_width / 2.0;
        let (x0, x1) = match side {
            Team::Home => (0.0, self.penalty_area_depth),
            Team::Away => (self.length - self.penalty_area_depth, self.length),
        };
        Rect {
            min: Vec2::new(x0, self.width / 2.0 - half),
            max: Vec2::new(x1, self.width / 2.0 + half),
        }
    }

    /// The box being attacked once a frame is oriented toward `x = length`.
    pub fn attacked_penalty_area(&self) -> Rect {
        self.penalty_area(Team::Away)
    }

    fn in_bounds(&self, p: Vec2) -> bool {
        p.is_finite()
            && p.x >= -POSITION_MARGIN
            && p.x <= self.length + POSITION_MARGIN
            && p.y >= -POSITION_MARGIN
            && p.y <= self.width + POSITION_MARGIN
    }

    /// Express `p` in the orientation where the attacking side plays toward
    /// `x = length`.
    pub fn orient(&self, p: Vec2, toward_positive_x: bool) -> Vec2 {
        if toward_positive_x {
            p
        } else {
            Vec2::new(self.length - p.x, self.width - p.y)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlayerState {
    pub player_id: String,
    pub team: Team,
    pub position: Vec2,
    pub velocity: Vec2,
    pub extrapolated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BallState {
    pub position: Vec2,
    pub velocity: Vec2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub frame_id: u64,
    pub timestamp: f64,
    pub period: u8,
    pub players: Vec<PlayerState>,
    pub ball: BallState,
    pub attacking_team: Option<Team>,
}

impl Frame {
    pub fn player(&self, player_id: &str) -> Option<&PlayerState> {
        self.players.iter().find(|p| p.player_id == player_id)
    }

    /// Check the structural invariants of a single frame.
    pub fn validate(&self, pitch: &PitchSpec) -> Result<()> {
        if !self.timestamp.is_finite() {
            return Err(Error::InvalidFrame(format!(
                "frame {}: timestamp is not finite",
                self.frame_id
            )));
        }
        if self.period != 1 && self.period != 2 {
            return Err(Error::InvalidFrame(format!(
                "frame {}: period must be 1 or 2, got {}",
                self.frame_id, self.period
            )));
        }
        if self.players.is_empty() || self.players.len() > MAX_PLAYERS {
            return Err(Error::InvalidFrame(format!(
                "frame {}: players count {} outside 1..={MAX_PLAYERS}",
                self.frame_id,
                self.players.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for p in &self.players {
            if !seen.insert(p.player_id.as_str()) {
                return Err(Error::InvalidFrame(format!(
                    "frame {}: duplicate player id `{}`",
                    self.frame_id, p.player_id
                )));
            }
            if !pitch.in_bounds(p.position) {
                return Err(Error::InvalidFrame(format!(
                    "frame {}: players.position of `{}` = ({}, {}) outside pitch bounds plus {POSITION_MARGIN} m margin",
                    self.frame_id, p.player_id, p.position.x, p.position.y
                )));
            }
            if !p.velocity.is_finite() {
                return Err(Error::InvalidFrame(format!(
                    "frame {}: players.velocity of `{}` is not finite",
                    self.frame_id, p.player_id
                )));
            }
        }
        if !self.ball.position.is_finite() || !self.ball.velocity.is_finite() {
            return Err(Error::InvalidFrame(format!(
                "frame {}: ball state is not finite",
                self.frame_id
            )));
        }
        Ok(())
    }

    /// Snap positions to the coordinate grid and clamp speeds to their bounds.
    pub fn normalize(&mut self) {
        for p in &mut self.players {
            p.position = p.position.quantized();
            p.velocity = p.velocity.clamp_norm(MAX_PLAYER_SPEED);
        }
        self.ball.position = self.ball.position.quantized();
        self.ball.velocity = self.ball.velocity.clamp_norm(MAX_BALL_SPEED);
    }

    /// Reflect through the pitch center: `x -> length - x`, `y -> width - y`,
    /// velocities negated. Applying it twice restores the frame exactly for
    /// grid-aligned coordinates.
    pub fn mirrored(&self, pitch: &PitchSpec) -> Frame {
        let flip = |p: Vec2| Vec2::new(pitch.length - p.x, pitch.width - p.y);
        let neg = |v: Vec2| Vec2::new(-v.x, -v.y);
        Frame {
            players: self
                .players
                .iter()
                .map(|p| PlayerState {
                    position: flip(p.position),
                    velocity: neg(p.velocity),
                    ..p.clone()
                })
                .collect(),
            ball: BallState {
                position: flip(self.ball.position),
                velocity: neg(self.ball.velocity),
            },
            ..self.clone()
        }
    }
}

/// Validate every frame and require strictly increasing frame ids.
pub fn validate_frames(frames: &[Frame], pitch: &PitchSpec) -> Result<()> {
    for f in frames {
        f.validate(pitch)?;
    }
    if let Some(w) = frames.windows(2).find(|w| w[1].frame_id <= w[0].frame_id) {
        return Err(Error::InvalidFrame(format!(
            "frame_id {} does not follow {} in increasing order",
            w[1].frame_id, w[0].frame_id
        )));
    }
    Ok(())
}

/// Backward-difference velocities at spacing `dt`.
///
/// Frame 0 takes frame 1's velocities; an entity missing from the previous
/// frame gets zero velocity. Speeds are clamped to the player and ball bounds.
pub fn derive_velocities(frames: &[Frame], dt: f64) -> Result<Vec<Frame>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")));
    }
    let mut out: Vec<Frame> = frames.to_vec();
    for k in 1..frames.len() {
        let prev = &frames[k - 1];
        let cur = &mut out[k];
        for p in &mut cur.players {
            p.velocity = match prev.player(&p.player_id) {
                Some(q) => p.position.sub(q.position).scale(1.0 / dt),
                None => Vec2::ZERO,
            }
            .clamp_norm(MAX_PLAYER_SPEED);
        }
        cur.ball.velocity = cur
            .ball
            .position
            .sub(prev.ball.position)
            .scale(1.0 / dt)
            .clamp_norm(MAX_BALL_SPEED);
    }
    match out.len() {
        0 => {}
        1 => {
            for p in &mut out[0].players {
                p.velocity = Vec2::ZERO;
            }
            out[0].ball.velocity = Vec2::ZERO;
        }
        _ => {
            let (first, rest) = out.split_at_mut(1);
            let next = &rest[0];
            for p in &mut first[0].players {
                p.velocity = next
                    .player(&p.player_id)
                    .map(|q| q.velocity)
                    .unwrap_or(Vec2::ZERO);
            }
            first[0].ball.velocity = next.ball.velocity;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum EventKind {
    Pass,
    Reception,
    Carry,
    Interception,
    Tackle,
    Recovery,
    Clearance,
    Shot,
    Foul,
    OutOfPlay,
    Other,
}

impl EventKind {
    pub const ALL: [EventKind; 11] = [
        EventKind::Pass,
        EventKind::Reception,
        EventKind::Carry,
        EventKind::Interception,
        EventKind::Tackle,
        EventKind::Recovery,
        EventKind::Clearance,
        EventKind::Shot,
        EventKind::Foul,
        EventKind::OutOfPlay,
        EventKind::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Pass => "pass",
            EventKind::Reception => "reception",
            EventKind::Carry => "carry",
            EventKind::Interception => "interception",
            EventKind::Tackle => "tackle",
            EventKind::Recovery => "recovery",
            EventKind::Clearance => "clearance",
            EventKind::Shot => "shot",
            EventKind::Foul => "foul",
            EventKind::OutOfPlay => "out_of_play",
            EventKind::Other => "other",
        }
    }

    /// `None` for vocabulary this crate does not know.
    pub fn parse(s: &str) -> Option<EventKind> {
        EventKind::ALL.into_iter().find(|k| k.as_str() == s)
    }

    /// Kinds that can open a counterattack.
    pub fn is_regain(self) -> bool {
        matches!(
            self,
            EventKind::Interception | EventKind::Tackle | EventKind::Recovery
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Outcome {
    Success,
    Failure,
    Neutral,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Success => "success",
            Outcome::Failure => "failure",
            Outcome::Neutral => "neutral",
        }
    }

    pub fn parse(s: &str) -> Option<Outcome> {
        match s {
            "success" => Some(Outcome::Success),
            "failure" => Some(Outcome::Failure),
            "neutral" => Some(Outcome::Neutral),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub event_id: u64,
    pub timestamp: f64,
    pub team: Team,
    pub player_id: String,
    pub kind: EventKind,
    pub location: Vec2,
    pub outcome: Outcome,
}

/// Order events by `(timestamp, event_id)`.
pub fn sort_events(events: &mut [EventRecord]) {
    events.sort_by(|a, b| {
        a.timestamp
            .total_cmp(&b.timestamp)
            .then(a.event_id.cmp(&b.event_id))
    });
}

/// An event annotated with the nearest tracking frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncedEvent {
    pub event: EventRecord,
    pub frame_id: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyncedMatch {
    pub match_id: String,
    pub gender: Gender,
    pub frames: Vec<Frame>,
    pub events: Vec<SyncedEvent>,
    pub pitch: PitchSpec,
    /// Events dropped for lying farther than [`SYNC_TOLERANCE`] from any frame.
    pub dropped_events: usize,
}

impl SyncedMatch {
    pub fn frame(&self, frame_id: u64) -> Option<&Frame> {
        self.frames
            .binary_search_by(|f| f.frame_id.cmp(&frame_id))
            .ok()
            .map(|i| &self.frames[i])
    }

    /// Period of the frame an event was matched to.
    pub fn event_period(&self, event: &SyncedEvent) -> u8 {
        self.frame(event.frame_id).map(|f| f.period).unwrap_or(1)
    }
}

/// Attach each event to the nearest frame by timestamp (the earlier frame wins
/// ties) and drop events farther than [`SYNC_TOLERANCE`] from every frame.
pub fn synchronize(
    match_id: impl Into<String>,
    frames: Vec<Frame>,
    events: Vec<EventRecord>,
    gender: Gender,
    pitch: PitchSpec,
) -> Result<SyncedMatch> {
    if frames.is_empty() && !events.is_empty() {
        return Err(Error::NoFrames);
    }
    let mut synced = Vec::with_capacity(events.len());
    let mut dropped = 0;
    for event in events {
        let t = event.timestamp;
        // first frame with timestamp >= t
        let idx = frames.partition_point(|f| f.timestamp < t);
        let mut best: Option<(f64, usize)> = None;
        for i in [idx.checked_sub(1), Some(idx)].into_iter().flatten() {
            if let Some(f) = frames.get(i) {
                let d = (f.timestamp - t).abs();
                let better = match best {
                    None => true,
                    Some((bd, bi)) => match d.total_cmp(&bd) {
                        Ordering::Less => true,
                        Ordering::Equal => i < bi,
                        Ordering::Greater => false,
                    },
                };
                if better {
                    best = Some((d, i));
                }
            }
        }
        match best {
            Some((d, i)) if d <= SYNC_TOLERANCE => synced.push(SyncedEvent {
                event,
                frame_id: frames[i].frame_id,
            }),
            _ => dropped += 1,
        }
    }
    Ok(SyncedMatch {
        match_id: match_id.into(),
        gender,
        frames,
        events: synced,
        pitch,
        dropped_events: dropped,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    pub(crate) fn player(id: &str, team: Team, x: f64, y: f64, vx: f64, vy: f64) -> PlayerState {
        PlayerState {
            player_id: id.to_string(),
            team,
            position: Vec2::new(x, y),
            velocity: Vec2::new(vx, vy),
            extrapolated: false,
        }
    }

    pub(crate) fn frame(id: u64, players: Vec<PlayerState>) -> Frame {
        Frame {
            frame_id: id,
            timestamp: id as f64 / 10.0,
            period: 1,
            players,
            ball: BallState::default(),
            attacking_team: None,
        }
    }

    fn event(id: u64, t: f64) -> EventRecord {
        EventRecord {
            event_id: id,
            timestamp: t,
            team: Team::Home,
            player_id: "h1".to_string(),
            kind: EventKind::Pass,
            location: Vec2::new(50.0, 30.0),
            outcome: Outcome::Success,
        }
    }

    #[test]
    fn stationary_player_has_zero_velocity() {
        let frames = vec![
            frame(0, vec![player("a", Team::Home, 10.0, 10.0, 0.0, 0.0)]),
            frame(1, vec![player("a", Team::Home, 10.0, 10.0, 0.0, 0.0)]),
        ];
        let out = derive_velocities(&frames, 0.1).unwrap();
        assert_eq!(out[1].players[0].velocity, Vec2::ZERO);
        assert_eq!(out[0].players[0].velocity, Vec2::ZERO);
    }

    #[test]
    fn one_meter_step_is_ten_meters_per_second() {
        let frames = vec![
            frame(0, vec![player("a", Team::Home, 10.0, 10.0, 0.0, 0.0)]),
            frame(1, vec![player("a", Team::Home, 11.0, 10.0, 0.0, 0.0)]),
        ];
        let out = derive_velocities(&frames, 0.1).unwrap();
        assert!((out[1].players[0].velocity.x - 10.0).abs() < 1e-12);
        assert_eq!(out[1].players[0].velocity.y, 0.0);
        // frame 0 copies frame 1
        assert_eq!(out[0].players[0].velocity, out[1].players[0].velocity);
    }

    #[test]
    fn single_frame_velocities_are_zero() {
        let mut f = frame(0, vec![player("a", Team::Home, 10.0, 10.0, 4.0, 1.0)]);
        f.ball.velocity = Vec2::new(3.0, 3.0);
        let out = derive_velocities(&[f], 0.1).unwrap();
        assert_eq!(out[0].players[0].velocity, Vec2::ZERO);
        assert_eq!(out[0].ball.velocity, Vec2::ZERO);
    }

    #[test]
    fn missing_predecessor_gives_zero_and_fast_motion_is_clamped() {
        let frames = vec![
            frame(0, vec![player("a", Team::Home, 10.0, 10.0, 0.0, 0.0)]),
            frame(
                1,
                vec![
                    player("a", Team::Home, 15.0, 10.0, 0.0, 0.0),
                    player("b", Team::Away, 40.0, 10.0, 0.0, 0.0),
                ],
            ),
        ];
        let out = derive_velocities(&frames, 0.1).unwrap();
        assert!((out[1].players[0].velocity.norm() - MAX_PLAYER_SPEED).abs() < 1e-12);
        assert_eq!(out[1].players[1].velocity, Vec2::ZERO);
        assert!(derive_velocities(&frames, 0.0).is_err());
    }

    #[test]
    fn sync_tie_goes_to_earlier_frame() {
        let mut a = frame(495, vec![player("a", Team::Home, 1.0, 1.0, 0.0, 0.0)]);
        a.timestamp = 4.95;
        let mut b = frame(505, vec![player("a", Team::Home, 1.0, 1.0, 0.0, 0.0)]);
        b.timestamp = 5.05;
        let m = synchronize(
            "m",
            vec![a, b],
            vec![event(1, 5.0)],
            Gender::Men,
            PitchSpec::default(),
        )
        .unwrap();
        assert_eq!(m.events[0].frame_id, 495);
    }

    #[test]
    fn far_events_are_dropped() {
        let m = synchronize(
            "m",
            vec![frame(1000, vec![player("a", Team::Home, 1.0, 1.0, 0.0, 0.0)])],
            vec![event(1, 900.0)],
            Gender::Men,
            PitchSpec::default(),
        )
        .unwrap();
        assert!(m.events.is_empty());
        assert_eq!(m.dropped_events, 1);
    }

    #[test]
    fn sync_without_events_or_frames() {
        let m = synchronize(
            "m",
            vec![frame(1, vec![player("a", Team::Home, 1.0, 1.0, 0.0, 0.0)])],
            vec![],
            Gender::Women,
            PitchSpec::default(),
        )
        .unwrap();
        assert!(m.events.is_empty());
        assert_eq!(
            synchronize("m", vec![], vec![event(1, 1.0)], Gender::Men, PitchSpec::default()),
            Err(Error::NoFrames)
        );
    }

    #[test]
    fn validation_rejects_far_positions_and_duplicates() {
        let pitch = PitchSpec::default();
        let f = frame(0, vec![player("a", Team::Home, 1e9, 1.0, 0.0, 0.0)]);
        let err = f.validate(&pitch).unwrap_err();
        assert!(matches!(err, Error::InvalidFrame(ref m) if m.contains("position")));
        let f = frame(
            0,
            vec![
                player("a", Team::Home, 1.0, 1.0, 0.0, 0.0),
                player("a", Team::Away, 2.0, 1.0, 0.0, 0.0),
            ],
        );
        assert!(f.validate(&pitch).is_err());
        let f = frame(0, vec![]);
        assert!(f.validate(&pitch).is_err());
    }

    #[test]
    fn orientation_by_team_and_period() {
        assert!(attacks_positive_x(Team::Home, 1));
        assert!(!attacks_positive_x(Team::Home, 2));
        assert!(!attacks_positive_x(Team::Away, 1));
        assert!(attacks_positive_x(Team::Away, 2));
        let pitch = PitchSpec::default();
        let box_ = pitch.attacked_penalty_area();
        assert!(box_.contains(Vec2::new(100.0, 34.0)));
        assert!(!box_.contains(Vec2::new(80.0, 34.0)));
        assert_eq!(pitch.orient(Vec2::new(10.0, 10.0), false), Vec2::new(95.0, 58.0));
    }

    #[test]
    fn unknown_event_kind_is_none() {
        assert_eq!(EventKind::parse("dribble"), None);
        assert_eq!(EventKind::parse("out_of_play"), Some(EventKind::OutOfPlay));
    }
}
