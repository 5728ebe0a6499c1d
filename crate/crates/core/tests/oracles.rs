//! Independent checks of the synthetic generator and the metrics, computed
//! without the graph model.

use counter_gnn_core::detector::{detect_counterattacks, label_frames, DetectorConfig, LabeledFrame};
use counter_gnn_core::eval::{ece, log_loss, naive_baseline, roc_auc};
use counter_gnn_core::synth::{generate_synthetic_match, SynthConfig};

fn frames(signal_strength: f64, seed: u64) -> Vec<LabeledFrame> {
    let mut out = Vec::new();
    for m in 0..10 {
        let config = SynthConfig {
            match_id: format!("m{m}"),
            n_sequences: 40,
            signal_strength,
            ..SynthConfig::default()
        };
        let sm = generate_synthetic_match(&config, seed * 1000 + m).unwrap();
        let seqs = detect_counterattacks(&sm.matched, &DetectorConfig::default()).unwrap();
        out.extend(label_frames(&sm.matched, &seqs));
    }
    out
}

/// Mean x-velocity of the attacking team (frames are oriented toward +x).
fn mean_attacker_vx(f: &LabeledFrame) -> f64 {
    let team = f.frame.attacking_team.expect("labeled frames carry the attacking team");
    let vx: Vec<f64> = f
        .frame
        .players
        .iter()
        .filter(|p| p.team == team)
        .map(|p| p.velocity.x)
        .collect();
    vx.iter().sum::<f64>() / vx.len() as f64
}

/// One-feature logistic regression fitted by Newton's method.
fn fit_logistic(x: &[f64], y: &[u8]) -> (f64, f64) {
    let (mut a, mut b) = (0.0, 0.0);
    for _ in 0..50 {
        let (mut ga, mut gb, mut haa, mut hab, mut hbb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&xi, &yi) in x.iter().zip(y) {
            let p = 1.0 / (1.0 + (-(a + b * xi)).exp());
            let r = p - f64::from(yi);
            let w = (p * (1.0 - p)).max(1e-12);
            ga += r;
            gb += r * xi;
            haa += w;
            hab += w * xi;
            hbb += w * xi * xi;
        }
        // small ridge keeps the step finite on separable data
        let (haa, hbb) = (haa + 1e-6, hbb + 1e-6);
        let det = haa * hbb - hab * hab;
        a -= (hbb * ga - hab * gb) / det;
        b -= (haa * gb - hab * ga) / det;
    }
    (a, b)
}

fn probe_auc(signal_strength: f64, seed: u64) -> f64 {
    let data = frames(signal_strength, seed);
    let (train, test): (Vec<_>, Vec<_>) = data.iter().partition(|f| f.sequence_id % 10 < 7);
    let x: Vec<f64> = train.iter().map(|f| mean_attacker_vx(f)).collect();
    let y: Vec<u8> = train.iter().map(|f| f.label).collect();
    let (a, b) = fit_logistic(&x, &y);
    let preds: Vec<f64> = test
        .iter()
        .map(|f| 1.0 / (1.0 + (-(a + b * mean_attacker_vx(f))).exp()))
        .collect();
    let labels: Vec<u8> = test.iter().map(|f| f.label).collect();
    roc_auc(&preds, &labels).unwrap()
}

#[test]
fn logistic_probe_finds_the_injected_signal() {
    let auc = probe_auc(1.0, 3);
    assert!(auc >= 0.9, "probe AUC {auc}");
}

#[test]
fn logistic_probe_finds_nothing_without_signal() {
    for seed in 0..3 {
        let auc = probe_auc(0.0, seed);
        assert!((0.4..=0.6).contains(&auc), "seed {seed}: probe AUC {auc}");
    }
}

#[test]
#[allow(clippy::approx_constant)]
fn metric_examples() {
    // constant one-half predictor
    let labels = [0, 1, 1, 0, 1];
    let naive = naive_baseline(&labels, 10).unwrap();
    assert!((naive.log_loss - std::f64::consts::LN_2).abs() < 1e-15);
    assert_eq!(naive.roc_auc, 0.5);
    assert!((log_loss(&[0.5; 5], &labels).unwrap() - 0.6931).abs() < 1e-4);
    // two predictions, each 0.15 away from its label, in different bins
    let e = ece(&[0.15, 0.85], &[0, 1], 10).unwrap();
    assert!((e - 0.15).abs() < 1e-12, "{e}");
}
