//! Log-loss, ROC-AUC, expected calibration error and calibration curves.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gnn::{self, ModelParams};
use crate::graph::GraphSample;

pub const DEFAULT_BINS: usize = 10;
pub const NAIVE_PROBABILITY: f64 = 0.5;

/// One equal-width confidence bin. `lo` is exclusive except for the first
/// bin, which also holds predictions of exactly 0.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CalibrationBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// `None` for empty bins.
    pub mean_confidence: Option<f64>,
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricsReport {
    pub log_loss: f64,
    pub roc_auc: f64,
    pub ece: f64,
    pub n_samples: usize,
    pub calibration: Vec<CalibrationBin>,
}

fn check(preds: &[f64], labels: &[u8]) -> Result<()> {
    if preds.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: preds.len(),
            right: labels.len(),
        });
    }
    if preds.is_empty() {
        return Err(Error::Empty("predictions"));
    }
    if preds.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite("predictions"));
    }
    Ok(())
}

/// Mean binary cross-entropy, predictions clamped to `[1e-7, 1 - 1e-7]`.
pub fn log_loss(preds: &[f64], labels: &[u8]) -> Result<f64> {
    check(preds, labels)?;
    let total: f64 = preds.iter().zip(labels).map(|(&p, &y)| gnn::loss(p, y)).sum();
    Ok(total / preds.len() as f64)
}

/// Area under the ROC curve via midranks (ties earn half credit).
pub fn roc_auc(preds: &[f64], labels: &[u8]) -> Result<f64> {
    check(preds, labels)?;
    let n_pos = labels.iter().filter(|&&y| y != 0).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass {
            present: u8::from(n_pos > 0),
        });
    }
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| preds[a].total_cmp(&preds[b]));
    // sum of 1-based ranks of the positives, ties sharing their mean rank
    let mut pos_rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && preds[order[end]] == preds[order[start]] {
            end += 1;
        }
        let mid_rank = (start + 1 + end) as f64 / 2.0;
        let positives = order[start..end].iter().filter(|&&i| labels[i] != 0).count();
        pos_rank_sum += mid_rank * positives as f64;
        start = end;
    }
    let np = n_pos as f64;
    Ok((pos_rank_sum - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

fn bin_index(p: f64, n_bins: usize) -> usize {
    let n = n_bins as f64;
    let mut b = ((libm::ceil(p * n) as isize) - 1).clamp(0, n_bins as isize - 1) as usize;
    // correct rounding at bin edges so membership follows (lo, hi] exactly
    while b > 0 && p <= b as f64 / n {
        b -= 1;
    }
    while b + 1 < n_bins && p > (b + 1) as f64 / n {
        b += 1;
    }
    b
}

/// Per-bin calibration records over `n_bins` equal-width bins on `[0, 1]`.
pub fn calibration_curve(preds: &[f64], labels: &[u8], n_bins: usize) -> Result<Vec<CalibrationBin>> {
    check(preds, labels)?;
    if n_bins == 0 {
        return Err(Error::InvalidConfig("n_bins must be at least 1".into()));
    }
    let mut count = vec![0usize; n_bins];
    let mut conf = vec![0.0; n_bins];
    let mut pos = vec![0usize; n_bins];
    for (&p, &y) in preds.iter().zip(labels) {
        let p = p.clamp(0.0, 1.0);
        let b = bin_index(p, n_bins);
        count[b] += 1;
        conf[b] += p;
        pos[b] += usize::from(y != 0);
    }
    Ok((0..n_bins)
        .map(|b| {
            let c = count[b];
            let mean = |v: f64| (c > 0).then(|| v / c as f64);
            CalibrationBin {
                lo: b as f64 / n_bins as f64,
                hi: (b + 1) as f64 / n_bins as f64,
                count: c,
                mean_confidence: mean(conf[b]),
                accuracy: mean(pos[b] as f64),
            }
        })
        .collect())
}

fn ece_of(bins: &[CalibrationBin], n: usize) -> f64 {
    bins.iter()
        .filter_map(|b| Some(b.count as f64 * (b.accuracy? - b.mean_confidence?).abs()))
        .sum::<f64>()
        / n as f64
}

/// Count-weighted mean of `|accuracy - confidence|` over equal-width bins.
pub fn ece(preds: &[f64], labels: &[u8], n_bins: usize) -> Result<f64> {
    let bins = calibration_curve(preds, labels, n_bins)?;
    Ok(ece_of(&bins, preds.len()))
}

pub fn metrics(preds: &[f64], labels: &[u8], n_bins: usize) -> Result<MetricsReport> {
    let calibration = calibration_curve(preds, labels, n_bins)?;
    Ok(MetricsReport {
        log_loss: log_loss(preds, labels)?,
        roc_auc: roc_auc(preds, labels)?,
        ece: ece_of(&calibration, preds.len()),
        n_samples: preds.len(),
        calibration,
    })
}

/// Predict every sample and score the predictions.
pub fn evaluate(params: &ModelParams, test: &[GraphSample], n_bins: usize) -> Result<MetricsReport> {
    let preds = gnn::predict_all(params, test)?;
    let labels: Vec<u8> = test.iter().map(|s| s.label).collect();
    metrics(&preds, &labels, n_bins)
}

/// The constant one-half predictor on the same labels.
pub fn naive_baseline(labels: &[u8], n_bins: usize) -> Result<MetricsReport> {
    metrics(&vec![NAIVE_PROBABILITY; labels.len()], labels, n_bins)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_loss_examples() {
        assert!((log_loss(&[0.5; 4], &[0, 1, 1, 0]).unwrap() - 0.6931).abs() < 1e-4);
        assert!(log_loss(&[1.0, 0.0], &[1, 0]).unwrap() < 1e-6);
        let want = (-libm::log(0.9) - libm::log(0.8)) / 2.0;
        assert!((log_loss(&[0.9, 0.2], &[1, 0]).unwrap() - want).abs() < 1e-15);
        assert!((want - 0.1643).abs() < 1e-4);
        assert!(matches!(log_loss(&[0.5], &[1, 0]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn auc_examples() {
        assert_eq!(roc_auc(&[0.3; 6], &[0, 1, 0, 1, 1, 0]).unwrap(), 0.5);
        assert_eq!(roc_auc(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(roc_auc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap(), 0.75);
        assert!(matches!(roc_auc(&[0.1, 0.2], &[1, 1]), Err(Error::SingleClass { present: 1 })));
    }

    #[test]
    fn ece_examples() {
        let labels = [1, 1, 1, 1, 1, 1, 1, 0, 0, 0];
        assert!(ece(&[0.7; 10], &labels, 10).unwrap() < 1e-12);
        assert!((ece(&[1.0; 4], &[1, 0, 1, 0], 10).unwrap() - 0.5).abs() < 1e-15);
        assert!((ece(&[0.15, 0.85], &[0, 1], 10).unwrap() - 0.15).abs() < 1e-12);
    }

    #[test]
    fn bins_are_right_closed() {
        assert_eq!(bin_index(0.0, 10), 0);
        assert_eq!(bin_index(0.1, 10), 0);
        assert_eq!(bin_index(0.100_000_1, 10), 1);
        assert_eq!(bin_index(0.3, 10), 2);
        assert_eq!(bin_index(0.7, 10), 6);
        assert_eq!(bin_index(1.0, 10), 9);
        assert_eq!(bin_index(0.42, 1), 0);
    }

    #[test]
    fn calibration_records() {
        let bins = calibration_curve(&[0.05, 0.95, 0.96], &[0, 1, 0], 10).unwrap();
        assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), 3);
        assert_eq!(bins[4].count, 0);
        assert_eq!(bins[4].accuracy, None);
        assert_eq!(bins[9].accuracy, Some(0.5));
        let single = calibration_curve(&[0.2, 0.6], &[1, 0], 1).unwrap();
        assert_eq!(single[0].accuracy, Some(0.5));
        assert!((single[0].mean_confidence.unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn naive_row() {
        let r = naive_baseline(&[0, 1, 1, 0, 1, 0], 10).unwrap();
        assert!((r.log_loss - 0.693).abs() < 1e-3);
        assert_eq!(r.roc_auc, 0.5);
        assert_eq!(r.ece, 0.0);
    }
}
