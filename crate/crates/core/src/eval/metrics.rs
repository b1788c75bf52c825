//! Classification metrics.
//!
//! Conventions: classes without support are left out of macro recall; a
//! class that is never predicted has precision 0; AUC-PR is average
//! precision with equal scores processed as one block.

use crate::{Error, Result};

/// `m[true][predicted]` counts.
pub fn confusion_matrix(predictions: &[u32], labels: &[u32], num_classes: usize) -> Result<Vec<Vec<u64>>> {
    check_inputs(predictions, labels)?;
    let mut m = vec![vec![0u64; num_classes]; num_classes];
    for (&p, &l) in predictions.iter().zip(labels) {
        if p as usize >= num_classes || l as usize >= num_classes {
            return Err(Error::Data(format!(
                "class index out of range [0, {num_classes}): predicted {p}, true {l}"
            )));
        }
        m[l as usize][p as usize] += 1;
    }
    Ok(m)
}

fn check_inputs(predictions: &[u32], labels: &[u32]) -> Result<()> {
    if predictions.len() != labels.len() {
        return Err(Error::shape(
            "metrics",
            format!("{} predictions for {} labels", predictions.len(), labels.len()),
        ));
    }
    if labels.is_empty() {
        return Err(Error::Data("metrics over an empty set".into()));
    }
    Ok(())
}

/// Recall per class; `None` for classes with no support.
pub fn per_class_recall(confusion: &[Vec<u64>]) -> Vec<Option<f64>> {
    confusion
        .iter()
        .enumerate()
        .map(|(c, row)| {
            let support: u64 = row.iter().sum();
            (support > 0).then(|| row[c] as f64 / support as f64)
        })
        .collect()
}

/// Precision per class; 0 for classes never predicted.
pub fn per_class_precision(confusion: &[Vec<u64>]) -> Vec<f64> {
    (0..confusion.len())
        .map(|c| {
            let predicted: u64 = confusion.iter().map(|row| row[c]).sum();
            if predicted == 0 {
                0.0
            } else {
                confusion[c][c] as f64 / predicted as f64
            }
        })
        .collect()
}

pub fn macro_recall_from(confusion: &[Vec<u64>]) -> f64 {
    let r: Vec<f64> = per_class_recall(confusion).into_iter().flatten().collect();
    r.iter().sum::<f64>() / r.len() as f64
}

pub fn macro_precision_from(confusion: &[Vec<u64>]) -> f64 {
    let p = per_class_precision(confusion);
    p.iter().sum::<f64>() / p.len() as f64
}

pub fn macro_recall(predictions: &[u32], labels: &[u32], num_classes: usize) -> Result<f64> {
    Ok(macro_recall_from(&confusion_matrix(predictions, labels, num_classes)?))
}

pub fn macro_precision(predictions: &[u32], labels: &[u32], num_classes: usize) -> Result<f64> {
    Ok(macro_precision_from(&confusion_matrix(
        predictions,
        labels,
        num_classes,
    )?))
}

/// Average precision of `scores` against binary `positives`:
/// `Σ_t (R_t − R_{t−1}) · P_t` over distinct score thresholds, descending.
pub fn auc_pr(scores: &[f64], positives: &[bool]) -> Result<f64> {
    if scores.len() != positives.len() {
        return Err(Error::shape(
            "auc_pr",
            format!("{} scores for {} labels", scores.len(), positives.len()),
        ));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("auc_pr"));
    }
    let total_pos = positives.iter().filter(|&&p| p).count();
    if total_pos == 0 || total_pos == positives.len() {
        return Err(Error::Data(
            "AUC-PR needs at least one positive and one negative".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut seen, mut area) = (0usize, 0usize, 0.0f64);
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        let prev_tp = tp;
        while k < order.len() && scores[order[k]] == s {
            tp += usize::from(positives[order[k]]);
            seen += 1;
            k += 1;
        }
        if tp > prev_tp {
            let recall_gain = (tp - prev_tp) as f64 / total_pos as f64;
            area += recall_gain * (tp as f64 / seen as f64);
        }
    }
    Ok(area)
}

/// Mean one-vs-rest AUC-PR over classes that have both positives and
/// negatives among `labels`; `None` when no class qualifies.
pub fn macro_auc_pr(class_scores: &[Vec<f64>], labels: &[u32], num_classes: usize) -> Result<Option<f64>> {
    if class_scores.len() != labels.len() {
        return Err(Error::shape(
            "macro_auc_pr",
            format!("{} score rows for {} labels", class_scores.len(), labels.len()),
        ));
    }
    let per = per_class_auc_pr(class_scores, labels, num_classes)?;
    let vals: Vec<f64> = per.into_iter().flatten().collect();
    Ok((!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64))
}

pub fn per_class_auc_pr(class_scores: &[Vec<f64>], labels: &[u32], num_classes: usize) -> Result<Vec<Option<f64>>> {
    if class_scores.iter().any(|r| r.len() != num_classes) {
        return Err(Error::shape(
            "per_class_auc_pr",
            "score rows must have one entry per class",
        ));
    }
    (0..num_classes)
        .map(|c| {
            let pos: Vec<bool> = labels.iter().map(|&l| l as usize == c).collect();
            let np = pos.iter().filter(|&&p| p).count();
            if np == 0 || np == pos.len() {
                return Ok(None);
            }
            let s: Vec<f64> = class_scores.iter().map(|r| r[c]).collect();
            auc_pr(&s, &pos).map(Some)
        })
        .collect()
}

/// Label 0 against the rest, scored by `P(L = 0)`; `None` if either side is empty.
pub fn binary_auc_pr(class_scores: &[Vec<f64>], labels: &[u32]) -> Result<Option<f64>> {
    if class_scores.len() != labels.len() {
        return Err(Error::shape(
            "binary_auc_pr",
            format!("{} score rows for {} labels", class_scores.len(), labels.len()),
        ));
    }
    let pos: Vec<bool> = labels.iter().map(|&l| l == 0).collect();
    let np = pos.iter().filter(|&&p| p).count();
    if np == 0 || np == pos.len() {
        return Ok(None);
    }
    let s: Vec<f64> = class_scores.iter().map(|r| r[0]).collect();
    auc_pr(&s, &pos).map(Some)
}
