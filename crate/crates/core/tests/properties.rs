use counter_gnn_core::detector::{detect_counterattacks, label_frames, DetectorConfig, LabeledFrame};
use counter_gnn_core::eval::{ece, log_loss, roc_auc};
use counter_gnn_core::gnn::{predict, ModelDims, ModelParams};
use counter_gnn_core::graph::{
    expected_edge_count, frame_to_graph, split_balanced, Edge, GraphDataset, GraphOptions, GraphSample,
    NodeMatrix, ATTACKING_FLAG, CONTINUOUS_FEATURES,
};
use counter_gnn_core::importance::{permute_feature, Role};
use counter_gnn_core::synth::{generate_synthetic_match, SynthConfig};
use counter_gnn_core::tracking::{
    derive_velocities, synchronize, BallState, EventKind, EventRecord, Frame, Gender, Outcome, PitchSpec,
    PlayerState, Team, Vec2, COORD_QUANTUM, MAX_BALL_SPEED, MAX_PLAYER_SPEED,
};
use counter_gnn_core::whatif::rotate_velocity;
use proptest::prelude::*;

fn grid(max: f64) -> impl Strategy<Value = f64> {
    let steps = (max / COORD_QUANTUM) as i64;
    (0..=steps).prop_map(|k| k as f64 * COORD_QUANTUM)
}

fn vel(max: f64) -> impl Strategy<Value = Vec2> {
    (-max..max, -max..max).prop_map(|(x, y)| Vec2::new(x, y))
}

fn frame_strategy() -> impl Strategy<Value = Frame> {
    let player = (any::<bool>(), grid(105.0), grid(68.0), vel(20.0), any::<bool>());
    (prop::collection::vec(player, 1..=22), grid(105.0), grid(68.0), vel(50.0), 1u8..=2).prop_map(
        |(ps, bx, by, bv, period)| Frame {
            frame_id: 0,
            timestamp: 0.0,
            period,
            players: ps
                .into_iter()
                .enumerate()
                .map(|(i, (home, x, y, v, ext))| PlayerState {
                    player_id: format!("p{i}"),
                    team: if home { Team::Home } else { Team::Away },
                    position: Vec2::new(x, y),
                    velocity: v,
                    extrapolated: ext,
                })
                .collect(),
            ball: BallState {
                position: Vec2::new(bx, by),
                velocity: bv,
            },
            attacking_team: Some(Team::Home),
        },
    )
}

fn labeled(frame: Frame, gender: Gender) -> LabeledFrame {
    LabeledFrame {
        frame,
        label: 1,
        match_id: "m".into(),
        sequence_id: 0,
        gender,
    }
}

/// Reorder nodes by `perm` (new index k holds old node perm[k]) and remap edges.
fn permute_nodes(g: &GraphSample, perm: &[usize]) -> GraphSample {
    let mut inverse = vec![0; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inverse[old] = new;
    }
    let rows: Vec<Vec<f64>> = perm.iter().map(|&old| g.nodes.row(old).to_vec()).collect();
    GraphSample {
        nodes: NodeMatrix::from_rows(g.nodes.width(), &rows).unwrap(),
        edges: g
            .edges
            .iter()
            .map(|e| Edge {
                node: inverse[e.node],
                neighbor: inverse[e.neighbor],
                ..*e
            })
            .collect(),
        ..g.clone()
    }
}

fn brute_auc(preds: &[f64], labels: &[u8]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &pi) in preds.iter().enumerate() {
        for (j, &pj) in preds.iter().enumerate() {
            if labels[i] == 1 && labels[j] == 0 {
                den += 1.0;
                num += if pi > pj {
                    1.0
                } else if pi == pj {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    num / den
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mirroring_twice_is_identity(frame in frame_strategy()) {
        let pitch = PitchSpec::default();
        prop_assert_eq!(frame.mirrored(&pitch).mirrored(&pitch), frame);
    }

    #[test]
    fn derived_velocities_respect_speed_bounds(frames in prop::collection::vec(frame_strategy(), 1..6), dt in 0.01f64..1.0) {
        let frames: Vec<Frame> = frames
            .into_iter()
            .enumerate()
            .map(|(k, f)| Frame { frame_id: k as u64, timestamp: k as f64 * dt, ..f })
            .collect();
        for f in derive_velocities(&frames, dt).unwrap() {
            prop_assert!(f.ball.velocity.norm() <= MAX_BALL_SPEED);
            for p in &f.players {
                prop_assert!(p.velocity.norm() <= MAX_PLAYER_SPEED);
            }
        }
    }

    #[test]
    fn normalize_is_idempotent(frame in frame_strategy()) {
        let mut once = frame;
        once.normalize();
        let mut twice = once.clone();
        twice.normalize();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn sync_points_at_existing_frames(
        stamps in prop::collection::btree_set(0u32..2000, 1..30),
        events in prop::collection::vec(-50.0f64..250.0, 0..30),
    ) {
        let frames: Vec<Frame> = stamps
            .iter()
            .map(|&t| Frame {
                frame_id: u64::from(t),
                timestamp: f64::from(t) / 10.0,
                period: 1,
                players: vec![],
                ball: BallState::default(),
                attacking_team: None,
            })
            .collect();
        let evs: Vec<EventRecord> = events
            .iter()
            .enumerate()
            .map(|(k, &t)| EventRecord {
                event_id: k as u64,
                timestamp: t,
                team: Team::Home,
                player_id: "x".into(),
                kind: EventKind::Pass,
                location: Vec2::ZERO,
                outcome: Outcome::Neutral,
            })
            .collect();
        let m = synchronize("m", frames.clone(), evs, Gender::Men, PitchSpec::default()).unwrap();
        prop_assert_eq!(m.events.len() + m.dropped_events, events.len());
        for e in &m.events {
            let f = m.frame(e.frame_id);
            prop_assert!(f.is_some());
            prop_assert!((f.unwrap().timestamp - e.event.timestamp).abs() <= 1.0);
        }
    }

    #[test]
    fn rotation_preserves_speed_and_position(frame in frame_strategy(), deg in -720.0f64..720.0) {
        let mut frame = frame;
        frame.normalize();
        let id = frame.players[0].player_id.clone();
        let r = rotate_velocity(&frame, &id, deg).unwrap();
        let (a, b) = (&frame.players[0], &r.players[0]);
        prop_assert!((a.velocity.norm() - b.velocity.norm()).abs() <= 1e-12);
        prop_assert_eq!(a.position, b.position);
        prop_assert_eq!(&frame.players[1..], &r.players[1..]);
        prop_assert_eq!(rotate_velocity(&frame, &id, 360.0).unwrap(), frame.clone());
    }

    #[test]
    fn graph_features_are_bounded_and_edges_complete(frame in frame_strategy(), women in any::<bool>()) {
        let pitch = PitchSpec::default();
        let gender = if women { Gender::Women } else { Gender::Men };
        let options = GraphOptions { gender_aware: true };
        let mut frame = frame;
        frame.normalize();
        let g = frame_to_graph(&labeled(frame.clone(), gender), &pitch, options);
        prop_assert_eq!(g.n_nodes(), frame.players.len() + 1);
        prop_assert!(g.nodes.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
        let home = frame.players.iter().filter(|p| p.team == Team::Home).count();
        prop_assert_eq!(g.edges.len(), expected_edge_count(home, frame.players.len() - home));
        prop_assert!(g.validate(options.node_width()).is_ok());
        let ball = g.nodes.row(g.ball_index());
        prop_assert_eq!(ball[ATTACKING_FLAG], 0.0);
        prop_assert_eq!(ball[options.node_width() - 1], if women { 1.0 } else { 0.0 });
    }

    #[test]
    fn prediction_ignores_node_order(frame in frame_strategy(), seed in any::<u64>(), perm_seed in any::<u64>()) {
        let p = ModelParams::init(ModelDims::new(11, 16), seed).unwrap();
        let g = frame_to_graph(&labeled(frame, Gender::Men), &PitchSpec::default(), GraphOptions::default());
        let mut perm: Vec<usize> = (0..g.n_nodes()).collect();
        let mut s = perm_seed;
        for i in (1..perm.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let a = predict(&p, &g).unwrap();
        let b = predict(&p, &permute_nodes(&g, &perm)).unwrap();
        prop_assert!((a - b).abs() < 1e-12, "{} vs {}", a, b);
    }

    #[test]
    fn auc_matches_pairwise_definition(
        data in prop::collection::vec((0u8..20, any::<bool>()), 2..60)
    ) {
        // coarse scores so ties are common
        let preds: Vec<f64> = data.iter().map(|(s, _)| f64::from(*s) / 20.0).collect();
        let labels: Vec<u8> = data.iter().map(|(_, y)| u8::from(*y)).collect();
        let both = labels.contains(&0) && labels.contains(&1);
        match roc_auc(&preds, &labels) {
            Ok(auc) => {
                prop_assert!(both);
                prop_assert!((auc - brute_auc(&preds, &labels)).abs() < 1e-12);
            }
            Err(_) => prop_assert!(!both),
        }
    }

    #[test]
    fn single_bin_ece_is_mean_gap(data in prop::collection::vec((0.0f64..=1.0, any::<bool>()), 1..80)) {
        let preds: Vec<f64> = data.iter().map(|d| d.0).collect();
        let labels: Vec<u8> = data.iter().map(|d| u8::from(d.1)).collect();
        let n = preds.len() as f64;
        let gap = (labels.iter().map(|&y| f64::from(y)).sum::<f64>() / n - preds.iter().sum::<f64>() / n).abs();
        prop_assert!((ece(&preds, &labels, 1).unwrap() - gap).abs() < 1e-12);
        let e10 = ece(&preds, &labels, 10).unwrap();
        prop_assert!((0.0..=1.0).contains(&e10));
        prop_assert!(log_loss(&preds, &labels).unwrap() >= 0.0);
    }

    #[test]
    fn permuting_a_feature_keeps_its_multiset(frame in frame_strategy(), feature in 0usize..CONTINUOUS_FEATURES, seed in any::<u64>(), attacking in any::<bool>()) {
        let g = frame_to_graph(&labeled(frame, Gender::Men), &PitchSpec::default(), GraphOptions::default());
        let set = vec![g.clone(), g];
        let role = if attacking { Role::Attacking } else { Role::Defending };
        let out = permute_feature(&set, feature, role, seed).unwrap();
        let collect = |s: &[GraphSample]| {
            let mut v: Vec<u64> = s.iter().flat_map(|g| g.nodes.iter_rows().map(|r| r[feature].to_bits()).collect::<Vec<_>>()).collect();
            v.sort_unstable();
            v
        };
        prop_assert_eq!(collect(&set), collect(&out));
        for (a, b) in set.iter().zip(&out) {
            prop_assert_eq!(&a.edges, &b.edges);
            // the ball and the other role keep their values
            prop_assert_eq!(a.nodes.row(a.ball_index()), b.nodes.row(b.ball_index()));
            for (ra, rb) in a.nodes.iter_rows().zip(b.nodes.iter_rows()) {
                let selected = (ra[ATTACKING_FLAG] == 1.0) == attacking;
                for k in 0..ra.len() {
                    if k != feature || !selected {
                        prop_assert_eq!(ra[k].to_bits(), rb[k].to_bits());
                    }
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn detected_sequences_are_disjoint_and_split_by_sequence(seed in any::<u64>(), permissive in any::<bool>()) {
        let config = SynthConfig { n_sequences: 30, ..SynthConfig::default() };
        let m = generate_synthetic_match(&config, seed).unwrap();
        let det = if permissive { DetectorConfig::permissive() } else { DetectorConfig::default() };
        let seqs = detect_counterattacks(&m.matched, &det).unwrap();
        for w in seqs.windows(2) {
            prop_assert!(w[0].end_ts < w[1].start_ts, "{:?} overlaps {:?}", w[0], w[1]);
        }
        let frames = label_frames(&m.matched, &seqs);
        // every labeled frame is oriented toward +x for its attacking team
        let ds = GraphDataset::from_frames(&frames, &config.pitch, GraphOptions::default(), "p");
        let labels = ds.labels();
        if labels.contains(&0) && labels.contains(&1) {
            let (train, test) = split_balanced(&ds, 0.7, seed).unwrap();
            let keys = |d: &GraphDataset| d.samples.iter().map(|s| s.sequence_id).collect::<std::collections::BTreeSet<_>>();
            prop_assert!(keys(&train).is_disjoint(&keys(&test)));
            let train_seqs = |label: u8| train.samples.iter().filter(|s| s.label == label).map(|s| s.sequence_id).collect::<std::collections::BTreeSet<_>>().len();
            prop_assert_eq!(train_seqs(0), train_seqs(1));
        }
    }
}

#[test]
fn different_seeds_give_different_matches() {
    let config = SynthConfig {
        n_sequences: 5,
        ..SynthConfig::default()
    };
    for s in 0..10u64 {
        let a = generate_synthetic_match(&config, 2 * s).unwrap();
        let b = generate_synthetic_match(&config, 2 * s + 1).unwrap();
        assert_ne!(a.matched.frames, b.matched.frames, "seeds {} and {}", 2 * s, 2 * s + 1);
        assert_eq!(a, generate_synthetic_match(&config, 2 * s).unwrap());
    }
}
