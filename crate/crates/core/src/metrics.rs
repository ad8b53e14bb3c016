//! Segmentation scoring: Dice coefficient, pixel-level true/false positive
//! rates, and greedy one-to-one matching of predicted cells against ground
//! truth.
//!
//! Matching pairs cells by descending Dice with a 0.5 admission floor, so
//! only acceptably segmented cells enter the statistics; the rule and the
//! population-standard-deviation convention are recorded in the report to
//! keep the numbers interpretable.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::raster::BinaryMask;

/// Dice coefficient `2|A.B| / (|A| + |B|)`; two empty masks score 1.
pub fn dice(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    if a.dimensions() != b.dimensions() {
        return Err(Error::InvalidInput("dice: masks differ in size".into()));
    }
    let mut inter = 0usize;
    let mut total = 0usize;
    for (&x, &y) in a.as_slice().iter().zip(b.as_slice()) {
        inter += (x && y) as usize;
        total += x as usize + y as usize;
    }
    if total == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / total as f64)
}

/// Pixel-level `(tpr, fpr)` of a prediction against ground truth.
///
/// With empty ground truth the true-positive rate is 1 for an empty
/// prediction and 0 otherwise; a false-positive rate without any negative
/// pixels is reported as 0.
pub fn pixel_rates(pred: &BinaryMask, gt: &BinaryMask) -> Result<(f64, f64)> {
    if pred.dimensions() != gt.dimensions() {
        return Err(Error::InvalidInput("pixel rates: masks differ in size".into()));
    }
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut gt_area = 0usize;
    for (&p, &g) in pred.as_slice().iter().zip(gt.as_slice()) {
        tp += (p && g) as usize;
        fp += (p && !g) as usize;
        gt_area += g as usize;
    }
    let total = pred.as_slice().len();
    let tpr = if gt_area == 0 {
        if pred.is_empty() {
            1.0
        } else {
            0.0
        }
    } else {
        tp as f64 / gt_area as f64
    };
    let negatives = total - gt_area;
    let fpr = if negatives == 0 { 0.0 } else { fp as f64 / negatives as f64 };
    Ok((tpr, fpr))
}

/// One matched prediction/ground-truth pair with its scores.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MatchedPair {
    pub pred: usize,
    pub gt: usize,
    pub dice: f64,
    pub tpr: f64,
    pub fpr: f64,
}

/// Aggregate evaluation of one prediction set against one ground-truth set.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub matched: Vec<MatchedPair>,
    pub dc_mean: Option<f64>,
    pub dc_std: Option<f64>,
    pub tpr_mean: Option<f64>,
    pub tpr_std: Option<f64>,
    pub fpr_mean: Option<f64>,
    pub fpr_std: Option<f64>,
    pub unmatched_pred: usize,
    pub unmatched_gt: usize,
    /// Human-readable description of the matching rule.
    pub matching: &'static str,
    /// Which standard deviation the `*_std` fields carry.
    pub std_kind: &'static str,
}

const MATCHING_RULE: &str = "greedy one-to-one by descending Dice, pairs below 0.5 unmatched";

fn mean_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (Some(mean), Some(var.sqrt()))
}

/// Match predictions to ground truth greedily by descending pairwise Dice
/// (ties resolved toward the lowest index pair) and score the matched pairs.
pub fn match_and_score(pred: &[BinaryMask], gt: &[BinaryMask]) -> Result<EvalReport> {
    if let Some(dims) = pred.first().or_else(|| gt.first()).map(|m| m.dimensions()) {
        if pred.iter().chain(gt).any(|m| m.dimensions() != dims) {
            return Err(Error::InvalidInput("match: masks differ in size".into()));
        }
    }

    let mut pairs = Vec::with_capacity(pred.len() * gt.len());
    for (i, p) in pred.iter().enumerate() {
        for (j, g) in gt.iter().enumerate() {
            let d = dice(p, g)?;
            if d >= 0.5 {
                pairs.push((i, j, d));
            }
        }
    }
    // Descending Dice, then lowest pred index, then lowest gt index.
    pairs.sort_by(|a, b| {
        b.2.partial_cmp(&a.2)
            .unwrap()
            .then(a.0.cmp(&b.0))
            .then(a.1.cmp(&b.1))
    });

    let mut pred_used = vec![false; pred.len()];
    let mut gt_used = vec![false; gt.len()];
    let mut matched = Vec::new();
    for (i, j, d) in pairs {
        if pred_used[i] || gt_used[j] {
            continue;
        }
        pred_used[i] = true;
        gt_used[j] = true;
        let (tpr, fpr) = pixel_rates(&pred[i], &gt[j])?;
        matched.push(MatchedPair { pred: i, gt: j, dice: d, tpr, fpr });
    }

    let dices: Vec<f64> = matched.iter().map(|m| m.dice).collect();
    let tprs: Vec<f64> = matched.iter().map(|m| m.tpr).collect();
    let fprs: Vec<f64> = matched.iter().map(|m| m.fpr).collect();
    let (dc_mean, dc_std) = mean_std(&dices);
    let (tpr_mean, tpr_std) = mean_std(&tprs);
    let (fpr_mean, fpr_std) = mean_std(&fprs);

    Ok(EvalReport {
        unmatched_pred: pred.len() - matched.len(),
        unmatched_gt: gt.len() - matched.len(),
        matched,
        dc_mean,
        dc_std,
        tpr_mean,
        tpr_std,
        fpr_mean,
        fpr_std,
        matching: MATCHING_RULE,
        std_kind: "population",
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disc(cx: f64, cy: f64, r: f64) -> BinaryMask {
        BinaryMask::from_fn(48, 48, |x, y| {
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            dx * dx + dy * dy <= r * r
        })
    }

    #[test]
    fn dice_identity_disjoint_and_nested() {
        let a = disc(20.0, 20.0, 8.0);
        assert_eq!(dice(&a, &a).unwrap(), 1.0);

        let b = disc(40.0, 40.0, 4.0);
        assert_eq!(dice(&a, &b).unwrap(), 0.0);

        // Nested rectangles with exact areas 50 and 100.
        let small = BinaryMask::from_fn(48, 48, |x, y| x < 10 && y < 5);
        let big = BinaryMask::from_fn(48, 48, |x, y| x < 10 && y < 10);
        let d = dice(&small, &big).unwrap();
        assert!((d - 2.0 / 3.0).abs() < 1e-12);

        let empty = BinaryMask::new(48, 48);
        assert_eq!(dice(&empty, &empty).unwrap(), 1.0);
        let other = BinaryMask::new(40, 48);
        assert!(dice(&a, &other).is_err());
    }

    #[test]
    fn pixel_rates_cover_the_edge_conventions() {
        let gt = disc(24.0, 24.0, 9.0);
        assert_eq!(pixel_rates(&gt, &gt).unwrap(), (1.0, 0.0));

        let complement = BinaryMask::from_fn(48, 48, |x, y| !gt.get(x, y));
        assert_eq!(pixel_rates(&complement, &gt).unwrap(), (0.0, 1.0));

        let empty = BinaryMask::new(48, 48);
        assert_eq!(pixel_rates(&empty, &gt).unwrap(), (0.0, 0.0));
        assert_eq!(pixel_rates(&empty, &empty).unwrap(), (1.0, 0.0));
        assert_eq!(pixel_rates(&gt, &empty).unwrap().0, 0.0);
    }

    #[test]
    fn matching_identical_lists_is_perfect() {
        let cells = vec![disc(15.0, 15.0, 7.0), disc(34.0, 30.0, 9.0)];
        let report = match_and_score(&cells, &cells).unwrap();
        assert_eq!(report.matched.len(), 2);
        assert_eq!(report.dc_mean, Some(1.0));
        assert_eq!(report.fpr_mean, Some(0.0));
        assert_eq!(report.unmatched_pred, 0);
        assert_eq!(report.unmatched_gt, 0);
    }

    #[test]
    fn empty_prediction_list_reports_absent_statistics() {
        let gt = vec![disc(15.0, 15.0, 7.0), disc(34.0, 30.0, 9.0)];
        let report = match_and_score(&[], &gt).unwrap();
        assert!(report.matched.is_empty());
        assert_eq!(report.dc_mean, None);
        assert_eq!(report.unmatched_gt, 2);
        assert_eq!(report.unmatched_pred, 0);
    }

    #[test]
    fn greedy_matches_the_diagonal_of_a_dominant_matrix() {
        // Cross-Dice approximately [[0.9, 0.1], [0.2, 0.8]]: greedy must take
        // (0,0) then (1,1), which an exhaustive assignment scan confirms to
        // be optimal.
        let gt0 = disc(14.0, 14.0, 8.0);
        let gt1 = disc(34.0, 34.0, 8.0);
        let pred0 = disc(15.0, 14.0, 8.0);
        let pred1 = disc(33.0, 35.0, 8.5);
        let pred = vec![pred0, pred1];
        let gt = vec![gt0, gt1];

        let report = match_and_score(&pred, &gt).unwrap();
        let pairs: Vec<(usize, usize)> = report.matched.iter().map(|m| (m.pred, m.gt)).collect();
        assert_eq!(pairs, vec![(0, 0), (1, 1)]);

        // Exhaustive oracle over the two possible one-to-one assignments.
        let d = |a: &BinaryMask, b: &BinaryMask| dice(a, b).unwrap();
        let straight = d(&pred[0], &gt[0]) + d(&pred[1], &gt[1]);
        let crossed = d(&pred[0], &gt[1]) + d(&pred[1], &gt[0]);
        assert!(straight > crossed);
        let mean = report.dc_mean.unwrap();
        assert!((mean - straight / 2.0).abs() < 1e-12);
    }

    #[test]
    fn matched_tp_sums_equal_union_tp_for_disjoint_gt() {
        let gt = vec![disc(12.0, 12.0, 7.0), disc(34.0, 34.0, 8.0)];
        let pred = vec![disc(13.0, 12.0, 7.0), disc(33.0, 35.0, 8.0)];
        let union_gt = gt[0].or(&gt[1]);
        let union_pred = pred[0].or(&pred[1]);

        let mut per_cell_tp = 0usize;
        for (p, g) in pred.iter().zip(&gt) {
            per_cell_tp += p.and(g).area();
        }
        assert_eq!(per_cell_tp, union_pred.and(&union_gt).area());
    }
}
