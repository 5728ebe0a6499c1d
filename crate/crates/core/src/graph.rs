//! Frame-to-graph conversion.
//!
//! Every player is a node, followed by one ball node (always the last index).
//! Teammates are connected to each other and every player is connected to the
//! ball, with directed edges in both directions and no self-loops.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::detector::LabeledFrame;
use crate::error::{Error, Result};
use crate::math::{self, PI};
use crate::tracking::{Gender, PitchSpec, Vec2, MAX_PLAYER_SPEED};

/// Canonical node feature order. Stable: importance and serialized datasets
/// address features by index.
pub const NODE_FEATURE_NAMES: [&str; 11] = [
    "x_norm",
    "y_norm",
    "vx_norm",
    "vy_norm",
    "speed_norm",
    "dir_norm",
    "dist_goal_norm",
    "angle_goal_norm",
    "dist_ball_norm",
    "angle_ball_norm",
    "attacking_flag",
];
pub const GENDER_FEATURE_NAME: &str = "gender_flag";
/// Features `0..CONTINUOUS_FEATURES` are continuous; the flag follows.
pub const CONTINUOUS_FEATURES: usize = 10;
pub const ATTACKING_FLAG: usize = 10;
pub const EDGE_FEATURES: usize = 3;
pub const FEATURE_VERSION: u32 = 1;
/// Below this speed (m/s) the direction feature is 0.
pub const MIN_DIRECTION_SPEED: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct GraphOptions {
    /// Append a node feature that is 1 for women's frames and 0 for men's.
    pub gender_aware: bool,
}

impl GraphOptions {
    pub fn node_width(&self) -> usize {
        NODE_FEATURE_NAMES.len() + usize::from(self.gender_aware)
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names: Vec<String> = NODE_FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
        if self.gender_aware {
            names.push(GENDER_FEATURE_NAME.to_string());
        }
        names
    }
}

/// Row-major node feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeMatrix {
    width: usize,
    data: Vec<f64>,
}

impl NodeMatrix {
    pub fn new(width: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || data.len() % width != 0 {
            return Err(Error::ShapeMismatch {
                what: "node matrix",
                expected: width,
                found: data.len(),
            });
        }
        Ok(NodeMatrix { width, data })
    }

    pub fn from_rows(width: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * width);
        for r in rows {
            if r.len() != width {
                return Err(Error::ShapeMismatch {
                    what: "node matrix row",
                    expected: width,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        NodeMatrix::new(width, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.width
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.width..(i + 1) * self.width]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.width)
    }
}

/// Directed edge: `node` receives a message from `neighbor`. Features describe
/// the geometry from `node` toward `neighbor`: `[sin θ, cos θ, dist_norm]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub node: usize,
    pub neighbor: usize,
    pub features: [f64; EDGE_FEATURES],
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphSample {
    pub nodes: NodeMatrix,
    pub edges: Vec<Edge>,
    pub label: u8,
    pub frame_id: u64,
    pub match_id: String,
    pub sequence_id: u32,
    pub gender: Gender,
}

impl GraphSample {
    pub fn n_nodes(&self) -> usize {
        self.nodes.rows()
    }

    pub fn ball_index(&self) -> usize {
        self.n_nodes() - 1
    }

    /// Key grouping all frames of one counterattack.
    pub fn sequence_key(&self) -> (&str, u32) {
        (self.match_id.as_str(), self.sequence_id)
    }

    /// Check width, edge endpoints, symmetry and absence of self-loops.
    pub fn validate(&self, width: usize) -> Result<()> {
        if self.nodes.width() != width {
            return Err(Error::WidthMismatch {
                expected: width,
                found: self.nodes.width(),
            });
        }
        let n = self.n_nodes();
        if n == 0 {
            return Err(Error::Empty("graph has no nodes"));
        }
        let mut pairs = BTreeSet::new();
        for e in &self.edges {
            if e.node >= n || e.neighbor >= n || e.node == e.neighbor {
                return Err(Error::ShapeMismatch {
                    what: "edge endpoint",
                    expected: n,
                    found: e.node.max(e.neighbor),
                });
            }
            pairs.insert((e.node, e.neighbor));
        }
        if pairs.iter().any(|&(a, b)| !pairs.contains(&(b, a))) {
            return Err(Error::InvalidFrame("adjacency is not symmetric".to_string()));
        }
        Ok(())
    }
}

fn fold_angle(dy: f64, dx: f64) -> f64 {
    math::clamp01(math::atan2(dy, dx).abs() / PI)
}

fn kinematics(row: &mut Vec<f64>, pos: Vec2, vel: Vec2, pitch: &PitchSpec) {
    let speed = vel.norm();
    let dir = if speed < MIN_DIRECTION_SPEED {
        0.0
    } else {
        let d = math::rem_euclid(math::atan2(vel.y, vel.x), 2.0 * PI) / (2.0 * PI);
        if d >= 1.0 {
            0.0
        } else {
            d
        }
    };
    row.push(math::clamp01(pos.x / pitch.length));
    row.push(math::clamp01(pos.y / pitch.width));
    row.push(math::clamp01((vel.x / MAX_PLAYER_SPEED + 1.0) / 2.0));
    row.push(math::clamp01((vel.y / MAX_PLAYER_SPEED + 1.0) / 2.0));
    row.push(math::clamp01(speed / MAX_PLAYER_SPEED));
    row.push(dir);
}

/// Node features for every player (frame order) followed by the ball.
///
/// The frame must already be oriented toward `x = length`.
pub fn compute_node_features(frame: &LabeledFrame, pitch: &PitchSpec, options: GraphOptions) -> NodeMatrix {
    let f = &frame.frame;
    let width = options.node_width();
    let diag = pitch.diagonal();
    let goal = Vec2::new(pitch.length, pitch.width / 2.0);
    let ball = f.ball.position;
    let gender_flag = match frame.gender {
        Gender::Women => 1.0,
        Gender::Men => 0.0,
    };
    let mut data = Vec::with_capacity((f.players.len() + 1) * width);
    let mut row = Vec::with_capacity(width);
    for p in &f.players {
        row.clear();
        kinematics(&mut row, p.position, p.velocity, pitch);
        let to_goal = goal.sub(p.position);
        let to_ball = ball.sub(p.position);
        row.push(math::clamp01(to_goal.norm() / diag));
        row.push(fold_angle(to_goal.y, to_goal.x));
        row.push(math::clamp01(to_ball.norm() / diag));
        row.push(fold_angle(to_ball.y, to_ball.x));
        row.push(if Some(p.team) == f.attacking_team { 1.0 } else { 0.0 });
        if options.gender_aware {
            row.push(gender_flag);
        }
        data.extend_from_slice(&row);
    }
    row.clear();
    kinematics(&mut row, ball, f.ball.velocity, pitch);
    let to_goal = goal.sub(ball);
    row.push(math::clamp01(to_goal.norm() / diag));
    row.push(fold_angle(to_goal.y, to_goal.x));
    row.extend_from_slice(&[0.0, 0.0, 0.0]);
    if options.gender_aware {
        row.push(gender_flag);
    }
    data.extend_from_slice(&row);
    NodeMatrix { width, data }
}

fn edge_features(from: Vec2, to: Vec2, diag: f64) -> [f64; EDGE_FEATURES] {
    let d = to.sub(from);
    let dist = d.norm();
    if dist == 0.0 {
        return [0.0, 1.0, 0.0];
    }
    let theta = math::atan2(d.y, d.x);
    [libm::sin(theta), libm::cos(theta), math::clamp01(dist / diag)]
}

/// Directed edges between teammates and between every player and the ball.
pub fn compute_edges(frame: &LabeledFrame, pitch: &PitchSpec) -> Vec<Edge> {
    let players = &frame.frame.players;
    let ball = players.len();
    let diag = pitch.diagonal();
    let position = |i: usize| {
        if i == ball {
            frame.frame.ball.position
        } else {
            players[i].position
        }
    };
    let mut edges = Vec::new();
    for i in 0..=ball {
        for j in 0..=ball {
            if i == j {
                continue;
            }
            let connected = i == ball || j == ball || players[i].team == players[j].team;
            if connected {
                edges.push(Edge {
                    node: i,
                    neighbor: j,
                    features: edge_features(position(i), position(j), diag),
                });
            }
        }
    }
    edges
}

pub fn frame_to_graph(frame: &LabeledFrame, pitch: &PitchSpec, options: GraphOptions) -> GraphSample {
    GraphSample {
        nodes: compute_node_features(frame, pitch, options),
        edges: compute_edges(frame, pitch),
        label: frame.label,
        frame_id: frame.frame.frame_id,
        match_id: frame.match_id.clone(),
        sequence_id: frame.sequence_id,
        gender: frame.gender,
    }
}

/// Expected directed edge count for team sizes `a` and `b` plus the ball.
pub fn expected_edge_count(a: usize, b: usize) -> usize {
    a * a.saturating_sub(1) + b * b.saturating_sub(1) + 2 * (a + b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GenderMix {
    pub women: usize,
    pub men: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphDataset {
    pub samples: Vec<GraphSample>,
    pub feature_names: Vec<String>,
    pub feature_version: u32,
    pub source: String,
    pub gender_mix: GenderMix,
}

impl GraphDataset {
    pub fn new(samples: Vec<GraphSample>, feature_names: Vec<String>, source: impl Into<String>) -> Result<Self> {
        let width = feature_names.len();
        for s in &samples {
            if s.nodes.width() != width {
                return Err(Error::WidthMismatch {
                    expected: width,
                    found: s.nodes.width(),
                });
            }
        }
        let gender_mix = mix_of(&samples);
        Ok(GraphDataset {
            samples,
            feature_names,
            feature_version: FEATURE_VERSION,
            source: source.into(),
            gender_mix,
        })
    }

    pub fn from_frames(frames: &[LabeledFrame], pitch: &PitchSpec, options: GraphOptions, source: impl Into<String>) -> Self {
        let samples = frames.iter().map(|f| frame_to_graph(f, pitch, options)).collect::<Vec<_>>();
        let gender_mix = mix_of(&samples);
        GraphDataset {
            samples,
            feature_names: options.feature_names(),
            feature_version: FEATURE_VERSION,
            source: source.into(),
            gender_mix,
        }
    }

    pub fn node_width(&self) -> usize {
        self.feature_names.len()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.samples.iter().map(|s| s.label).collect()
    }

    fn with_samples(&self, samples: Vec<GraphSample>) -> GraphDataset {
        GraphDataset {
            gender_mix: mix_of(&samples),
            samples,
            feature_names: self.feature_names.clone(),
            feature_version: self.feature_version,
            source: self.source.clone(),
        }
    }
}

fn mix_of(samples: &[GraphSample]) -> GenderMix {
    let women = samples.iter().filter(|s| s.gender == Gender::Women).count();
    GenderMix {
        women,
        men: samples.len() - women,
    }
}

pub fn filter_gender(dataset: &GraphDataset, gender: Gender) -> GraphDataset {
    dataset.with_samples(
        dataset
            .samples
            .iter()
            .filter(|s| s.gender == gender)
            .cloned()
            .collect(),
    )
}

/// Split by counterattack so every frame of a sequence lands on one side.
///
/// `train_fraction` of each class's sequences go to training (stratified),
/// then the majority class of the training side is downsampled, by whole
/// sequences, to an exact 50/50 sequence balance. Downsampled sequences are
/// discarded rather than moved to the test side.
pub fn split_balanced(dataset: &GraphDataset, train_fraction: f64, seed: u64) -> Result<(GraphDataset, GraphDataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidConfig(alloc::format!(
            "train_fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    // sequence key -> label, in first-seen order via BTreeMap on (key)
    let mut seq_label: BTreeMap<(&str, u32), u8> = BTreeMap::new();
    for s in &dataset.samples {
        seq_label.entry(s.sequence_key()).or_insert(s.label);
    }
    let mut by_class: [Vec<(&str, u32)>; 2] = [Vec::new(), Vec::new()];
    for (key, label) in &seq_label {
        by_class[usize::from(*label != 0)].push(*key);
    }
    if by_class[0].is_empty() || by_class[1].is_empty() {
        let present = u8::from(by_class[0].is_empty());
        return Err(Error::SingleClass { present });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_keys: [Vec<(&str, u32)>; 2] = [Vec::new(), Vec::new()];
    let mut test_keys = BTreeSet::new();
    for (class, keys) in by_class.iter_mut().enumerate() {
        keys.shuffle(&mut rng);
        let n_train = (math::round(keys.len() as f64 * train_fraction) as usize).clamp(1, keys.len());
        train_keys[class] = keys[..n_train].to_vec();
        test_keys.extend(keys[n_train..].iter().copied());
    }
    let keep = train_keys[0].len().min(train_keys[1].len());
    let train_set: BTreeSet<(&str, u32)> = train_keys
        .iter()
        .flat_map(|keys| keys[..keep].iter().copied())
        .collect();
    let pick = |set: &BTreeSet<(&str, u32)>| {
        dataset
            .samples
            .iter()
            .filter(|s| set.contains(&s.sequence_key()))
            .cloned()
            .collect::<Vec<_>>()
    };
    Ok((dataset.with_samples(pick(&train_set)), dataset.with_samples(pick(&test_keys))))
}
