//! Classification metrics: confusion counts, accuracy/precision/recall, and
//! the ROC curve with trapezoidal AUC.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Confusion counts plus derived rates. `precision`/`recall` are `None` when
/// their denominator is zero rather than silently reported as 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub auc: Option<f64>,
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
}

/// One ROC operating point; `threshold` is the score cut that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub threshold: f64,
}

/// Threshold-ordered ROC curve from (0,0) to (1,1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

/// Hard 0/1 predictions: 1 iff `score >= threshold`.
pub fn classify(scores: &[f64], threshold: f64) -> Vec<u8> {
    scores.iter().map(|&s| u8::from(s >= threshold)).collect()
}

/// Confusion counts and accuracy/precision/recall (AUC left unset).
pub fn confusion_and_rates(predictions: &[u8], labels: &[u8]) -> Result<MetricsReport> {
    if predictions.len() != labels.len() {
        return Err(Error::InvalidShape(format!(
            "{} predictions but {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (mut tp, mut fp, mut tn, mut fal_n) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &y) in predictions.iter().zip(labels) {
        if y > 1 {
            return Err(Error::InvalidLabel(y));
        }
        match (p, y) {
            (1, 1) => tp += 1,
            (1, 0) => fp += 1,
            (0, 0) => tn += 1,
            _ => fal_n += 1,
        }
    }
    let total = predictions.len() as f64;
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            None
        } else {
            Some(num as f64 / den as f64)
        }
    };
    Ok(MetricsReport {
        accuracy: (tp + tn) as f64 / total,
        precision: ratio(tp, tp + fp),
        recall: ratio(tp, tp + fal_n),
        auc: None,
        true_positives: tp,
        false_positives: fp,
        true_negatives: tn,
        false_negatives: fal_n,
    })
}

/// ROC curve over all distinct score thresholds plus trapezoidal AUC. Tied
/// scores collapse into a single operating point, which makes the trapezoid
/// equal to the Mann-Whitney statistic with ties credited 0.5.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<(RocCurve, f64)> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidShape(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y > 1) {
        return Err(Error::InvalidLabel(bad));
    }
    let positives = labels.iter().filter(|&&y| y == 1).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());

    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let score = scores[order[i]];
        // Consume the whole tie group before emitting a point.
        while i < order.len() && scores[order[i]] == score {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / negatives as f64,
            tpr: tp as f64 / positives as f64,
            threshold: score,
        });
    }

    let mut auc = 0.0;
    for pair in points.windows(2) {
        auc += (pair[1].fpr - pair[0].fpr) * (pair[1].tpr + pair[0].tpr) / 2.0;
    }
    Ok((RocCurve { points }, auc))
}
