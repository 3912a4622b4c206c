//! Reconstruction fidelity: match predicted regions to ground truth and
//! score recovery, overlap, placement and transcription.

mod assign;
mod measures;
mod report;
mod run;
pub mod synth;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schema::{Layout, RegionKind};

pub use assign::max_weight_assignment;
pub use measures::{center_offset, cer_wer, edit_distance, iou};
pub use report::{aggregate, AggregateReport, Cell, MeanStd, ReportRow, COLUMN_NAMES, ROW_NAMES};
pub use run::{evaluate_run, KindCounts, PerKind, RunCounts, RunMetrics, StageTimings};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("image dimensions differ: ground truth {gt:?}, prediction {pred:?}")]
    DimensionMismatch { gt: (u32, u32), pred: (u32, u32) },
    #[error("ground-truth text is empty")]
    EmptyGroundTruth,
    #[error("no runs to aggregate")]
    NoRuns,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub kind: RegionKind,
    pub gt_id: String,
    pub pred_id: String,
    pub iou: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    /// In ground-truth layout order.
    pub pairs: Vec<MatchedPair>,
    pub false_positives: Vec<String>,
    pub false_negatives: Vec<String>,
}

impl Matching {
    pub fn total_iou(&self) -> f64 {
        self.pairs.iter().map(|p| p.iou).sum()
    }
}

/// One-to-one matching per region kind that maximizes total IoU.
///
/// Only pairs with IoU strictly above `min_iou` may match (use 0 for any
/// positive overlap). Unmatched predictions are false positives and
/// unmatched ground-truth regions false negatives.
pub fn match_regions(gt: &Layout, pred: &Layout, min_iou: f64) -> Result<Matching, EvalError> {
    if gt.image != pred.image {
        return Err(EvalError::DimensionMismatch {
            gt: (gt.image.width, gt.image.height),
            pred: (pred.image.width, pred.image.height),
        });
    }

    let mut matching = Matching::default();
    let mut gt_match: Vec<Option<(usize, f64)>> = vec![None; gt.regions.len()];
    let mut pred_matched = vec![false; pred.regions.len()];

    for kind in RegionKind::ALL {
        let g: Vec<usize> = (0..gt.regions.len()).filter(|&i| gt.regions[i].kind == kind).collect();
        let p: Vec<usize> = (0..pred.regions.len()).filter(|&j| pred.regions[j].kind == kind).collect();
        let weights: Vec<Vec<f64>> = g
            .iter()
            .map(|&i| {
                p.iter()
                    .map(|&j| {
                        let v = iou(&gt.regions[i].bbox, &pred.regions[j].bbox);
                        if v > min_iou {
                            v
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        for (gi, assigned) in max_weight_assignment(&weights).into_iter().enumerate() {
            if let Some(pj) = assigned {
                let w = weights[gi][pj];
                if w > 0.0 {
                    gt_match[g[gi]] = Some((p[pj], w));
                    pred_matched[p[pj]] = true;
                }
            }
        }
    }

    for (i, m) in gt_match.iter().enumerate() {
        let region = &gt.regions[i];
        match m {
            Some((j, w)) => matching.pairs.push(MatchedPair {
                kind: region.kind,
                gt_id: region.id.clone(),
                pred_id: pred.regions[*j].id.clone(),
                iou: *w,
            }),
            None => matching.false_negatives.push(region.id.clone()),
        }
    }
    matching.false_positives = pred
        .regions
        .iter()
        .zip(&pred_matched)
        .filter(|(_, m)| !**m)
        .map(|(r, _)| r.id.clone())
        .collect();
    Ok(matching)
}
