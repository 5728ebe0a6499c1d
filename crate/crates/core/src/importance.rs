//! Permutation feature importance per node role.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval::roc_auc;
use crate::gnn::{predict_all, ModelParams};
use crate::graph::{GraphSample, ATTACKING_FLAG, CONTINUOUS_FEATURES, NODE_FEATURE_NAMES};
use crate::math;

pub const DEFAULT_REPEATS: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Role {
    Attacking,
    Defending,
}

impl Role {
    pub const ALL: [Role; 2] = [Role::Attacking, Role::Defending];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Attacking => "attacking",
            Role::Defending => "defending",
        }
    }

    fn selects(self, row: &[f64]) -> bool {
        (row[ATTACKING_FLAG] == 1.0) == (self == Role::Attacking)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ImportanceRow {
    pub feature: String,
    pub feature_index: usize,
    pub role: Role,
    pub mean_delta_auc: f64,
    /// Population standard deviation over repeats.
    pub std_delta_auc: f64,
    pub n_repeats: usize,
    pub base_auc: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ImportanceReport {
    /// Sorted by `mean_delta_auc`, largest first.
    pub rows: Vec<ImportanceRow>,
    pub base_auc: f64,
    pub n_repeats: usize,
    pub seed: u64,
}

impl ImportanceReport {
    pub fn row(&self, feature: &str, role: Role) -> Option<&ImportanceRow> {
        self.rows.iter().find(|r| r.feature == feature && r.role == role)
    }
}

fn check_feature(test: &[GraphSample], feature: usize) -> Result<()> {
    if feature >= CONTINUOUS_FEATURES {
        return Err(Error::FeatureIndex {
            index: feature,
            limit: CONTINUOUS_FEATURES,
        });
    }
    if let Some(s) = test.iter().find(|s| s.nodes.width() <= ATTACKING_FLAG) {
        return Err(Error::WidthMismatch {
            expected: ATTACKING_FLAG + 1,
            found: s.nodes.width(),
        });
    }
    Ok(())
}

/// Rows `(graph, node)` that belong to `role`; the ball node is never included.
fn selected(test: &[GraphSample], role: Role) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (g, s) in test.iter().enumerate() {
        for n in 0..s.ball_index() {
            if role.selects(s.nodes.row(n)) {
                out.push((g, n));
            }
        }
    }
    out
}

fn permute_with<F>(test: &[GraphSample], feature: usize, role: Role, shuffle: F) -> Result<Vec<GraphSample>>
where
    F: FnOnce(&mut [f64]),
{
    check_feature(test, feature)?;
    let cells = selected(test, role);
    let mut values: Vec<f64> = cells.iter().map(|&(g, n)| test[g].nodes.row(n)[feature]).collect();
    shuffle(&mut values);
    let mut out = test.to_vec();
    for (&(g, n), v) in cells.iter().zip(values) {
        out[g].nodes.row_mut(n)[feature] = v;
    }
    Ok(out)
}

/// Shuffle one feature's values globally across every node of `role` in every
/// graph. Structure, edges and all other features are untouched.
pub fn permute_feature(test: &[GraphSample], feature: usize, role: Role, seed: u64) -> Result<Vec<GraphSample>> {
    permute_with(test, feature, role, |v| v.shuffle(&mut ChaCha8Rng::seed_from_u64(seed)))
}

/// AUC drop after shuffling each continuous feature, per role.
pub fn permutation_importance(params: &ModelParams, test: &[GraphSample], n_repeats: usize, seed: u64) -> Result<ImportanceReport> {
    permutation_importance_with(params, test, n_repeats, seed, |values, seed| {
        values.shuffle(&mut ChaCha8Rng::seed_from_u64(seed))
    })
}

/// [`permutation_importance`] with a caller-supplied shuffle, which receives
/// the selected values and the derived per-repeat seed.
pub fn permutation_importance_with<F>(params: &ModelParams, test: &[GraphSample], n_repeats: usize, seed: u64, shuffle: F) -> Result<ImportanceReport>
where
    F: Fn(&mut [f64], u64) + Sync,
{
    if n_repeats == 0 {
        return Err(Error::InvalidConfig("n_repeats must be at least 1".into()));
    }
    let labels: Vec<u8> = test.iter().map(|s| s.label).collect();
    let base_auc = roc_auc(&predict_all(params, test)?, &labels)?;

    let mut jobs = Vec::with_capacity(CONTINUOUS_FEATURES * 2 * n_repeats);
    for feature in 0..CONTINUOUS_FEATURES {
        for (r, role) in Role::ALL.into_iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((feature * 2 + r) as u64);
            for _ in 0..n_repeats {
                jobs.push((feature, role, rng.next_u64()));
            }
        }
    }
    let run = |&(feature, role, s): &(usize, Role, u64)| -> Result<f64> {
        let permuted = permute_with(test, feature, role, |v| shuffle(v, s))?;
        Ok(base_auc - roc_auc(&predict_all(params, &permuted)?, &labels)?)
    };
    #[cfg(feature = "parallel")]
    let deltas: Vec<f64> = {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let deltas: Vec<f64> = jobs.iter().map(run).collect::<Result<_>>()?;

    let mut rows: Vec<ImportanceRow> = deltas
        .chunks_exact(n_repeats)
        .zip(jobs.chunks_exact(n_repeats))
        .map(|(d, job)| {
            let n = d.len() as f64;
            let mean = d.iter().sum::<f64>() / n;
            let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
            ImportanceRow {
                feature: NODE_FEATURE_NAMES[job[0].0].to_string(),
                feature_index: job[0].0,
                role: job[0].1,
                mean_delta_auc: mean,
                std_delta_auc: math::sqrt(var),
                n_repeats,
                base_auc,
            }
        })
        .collect();
    // stable: ties keep feature order
    rows.sort_by(|a, b| b.mean_delta_auc.total_cmp(&a.mean_delta_auc));
    Ok(ImportanceReport {
        rows,
        base_auc,
        n_repeats,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnn::ModelDims;
    use crate::graph::{frame_to_graph, GraphOptions};
    use crate::synth::{generate_synthetic_match, SynthConfig};
    use crate::detector::{detect_counterattacks, label_frames, DetectorConfig};

    fn test_set() -> Vec<GraphSample> {
        let config = SynthConfig {
            n_sequences: 12,
            ..SynthConfig::default()
        };
        let m = generate_synthetic_match(&config, 2).unwrap();
        let seqs = detect_counterattacks(&m.matched, &DetectorConfig::default()).unwrap();
        label_frames(&m.matched, &seqs)
            .iter()
            .map(|f| frame_to_graph(f, &config.pitch, GraphOptions::default()))
            .collect()
    }

    fn column(set: &[GraphSample], feature: usize, role: Role) -> Vec<f64> {
        let mut v: Vec<f64> = selected(set, role)
            .into_iter()
            .map(|(g, n)| set[g].nodes.row(n)[feature])
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn permutation_preserves_multiset_and_structure() {
        let set = test_set();
        let out = permute_feature(&set, 2, Role::Attacking, 5).unwrap();
        assert_eq!(column(&set, 2, Role::Attacking), column(&out, 2, Role::Attacking));
        assert_ne!(out, set);
        for (a, b) in set.iter().zip(&out) {
            assert_eq!(a.edges, b.edges);
            for n in 0..a.n_nodes() {
                for c in 0..a.nodes.width() {
                    let touched = c == 2 && n != a.ball_index() && Role::Attacking.selects(a.nodes.row(n));
                    if !touched {
                        assert_eq!(a.nodes.row(n)[c], b.nodes.row(n)[c]);
                    }
                }
            }
        }
        assert_eq!(out, permute_feature(&set, 2, Role::Attacking, 5).unwrap());
    }

    #[test]
    fn constant_feature_is_unchanged() {
        let mut set = test_set();
        for s in &mut set {
            for n in 0..s.n_nodes() {
                s.nodes.row_mut(n)[4] = 0.25;
            }
        }
        assert_eq!(permute_feature(&set, 4, Role::Defending, 1).unwrap(), set);
    }

    #[test]
    fn flag_and_out_of_range_rejected() {
        let set = test_set();
        assert!(matches!(
            permute_feature(&set, ATTACKING_FLAG, Role::Attacking, 1),
            Err(Error::FeatureIndex { .. })
        ));
    }

    #[test]
    fn identity_hook_gives_zero_deltas() {
        let set = test_set();
        let params = ModelParams::init(ModelDims::new(11, 8), 3).unwrap();
        let r = permutation_importance_with(&params, &set, 1, 0, |_, _| {}).unwrap();
        assert_eq!(r.rows.len(), 20);
        assert!(r.rows.iter().all(|row| row.mean_delta_auc == 0.0 && row.std_delta_auc == 0.0));
        let a = permutation_importance(&params, &set, 2, 4).unwrap();
        assert_eq!(a, permutation_importance(&params, &set, 2, 4).unwrap());
        assert!(a.rows.windows(2).all(|w| w[0].mean_delta_auc >= w[1].mean_delta_auc));
    }

    #[test]
    fn constant_predictor_has_zero_importance() {
        let set = test_set();
        let mut params = ModelParams::init(ModelDims::new(11, 8), 3).unwrap();
        params.head_weights_mut().fill(0.0);
        let r = permutation_importance(&params, &set, 3, 1).unwrap();
        assert_eq!(r.base_auc, 0.5);
        assert!(r.rows.iter().all(|row| row.mean_delta_auc == 0.0));
    }
}
