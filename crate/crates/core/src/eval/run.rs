use serde::{Deserialize, Serialize};

use super::measures::{center_offset, cer_wer, edit_distance};
use super::{match_regions, EvalError, Matching};
use crate::schema::{normalize_text, Layout, RegionKind};

/// A value per region kind plus the all-kinds value. `None` where the run
/// has nothing of that kind to measure.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PerKind<T> {
    pub text: Option<T>,
    pub image: Option<T>,
    pub overall: Option<T>,
}

impl<T: Copy> PerKind<T> {
    pub fn get(&self, kind: Option<RegionKind>) -> Option<T> {
        match kind {
            Some(RegionKind::Text) => self.text,
            Some(RegionKind::Image) => self.image,
            None => self.overall,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindCounts {
    pub text: usize,
    pub image: usize,
    pub overall: usize,
}

impl KindCounts {
    fn bump(&mut self, kind: RegionKind) {
        match kind {
            RegionKind::Text => self.text += 1,
            RegionKind::Image => self.image += 1,
        }
        self.overall += 1;
    }

    pub fn get(&self, kind: Option<RegionKind>) -> usize {
        match kind {
            Some(RegionKind::Text) => self.text,
            Some(RegionKind::Image) => self.image,
            None => self.overall,
        }
    }
}

/// Raw counts behind the rates, kept so fractions can be pooled across runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunCounts {
    pub gt: KindCounts,
    pub pred: KindCounts,
    pub matched: KindCounts,
    pub iou_ge_50: KindCounts,
    pub iou_ge_75: KindCounts,
    pub false_positives: usize,
    pub false_negatives: usize,
}

/// Wall-clock seconds per pipeline stage, when known.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub vlm_extraction_s: Option<f64>,
    pub slides_api_s: Option<f64>,
    pub local_processing_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub run_id: String,
    pub element_recovery: PerKind<f64>,
    pub char_recovery: Option<f64>,
    pub iou_mean: PerKind<f64>,
    pub iou_median: PerKind<f64>,
    pub center_offset_mean_px: PerKind<f64>,
    pub center_offset_norm: PerKind<f64>,
    pub cer_mean: Option<f64>,
    pub wer_mean: Option<f64>,
    pub frac_iou_50: PerKind<f64>,
    pub frac_iou_75: PerKind<f64>,
    pub counts: RunCounts,
    pub timings: StageTimings,
    pub matching: Matching,
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len().is_multiple_of(2) { (v[mid - 1] + v[mid]) / 2.0 } else { v[mid] })
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Score one prediction against its ground truth.
///
/// Overlap, placement and transcription statistics are over matched pairs
/// only; recovery rates are over all ground-truth regions.
pub fn evaluate_run(
    run_id: &str,
    gt: &Layout,
    pred: &Layout,
    timings: StageTimings,
    min_iou: f64,
) -> Result<RunMetrics, EvalError> {
    let matching = match_regions(gt, pred, min_iou)?;
    let mut counts = RunCounts {
        false_positives: matching.false_positives.len(),
        false_negatives: matching.false_negatives.len(),
        ..RunCounts::default()
    };
    for r in &gt.regions {
        counts.gt.bump(r.kind);
    }
    for r in &pred.regions {
        counts.pred.bump(r.kind);
    }

    let kinds: [Option<RegionKind>; 3] = [Some(RegionKind::Text), Some(RegionKind::Image), None];
    let mut ious: [Vec<f64>; 3] = Default::default();
    let mut offsets: [Vec<f64>; 3] = Default::default();
    let mut offsets_norm: [Vec<f64>; 3] = Default::default();
    let mut cers = Vec::new();
    let mut wers = Vec::new();
    let mut recovered_chars = 0usize;

    for pair in &matching.pairs {
        let g = gt.region(&pair.gt_id).expect("matched gt id exists");
        let p = pred.region(&pair.pred_id).expect("matched pred id exists");
        counts.matched.bump(pair.kind);
        if pair.iou >= 0.5 {
            counts.iou_ge_50.bump(pair.kind);
        }
        if pair.iou >= 0.75 {
            counts.iou_ge_75.bump(pair.kind);
        }
        let (px, norm) = center_offset(&g.bbox, &p.bbox, gt.image.width, gt.image.height);
        for (slot, kind) in kinds.iter().enumerate() {
            if kind.is_none_or(|k| k == pair.kind) {
                ious[slot].push(pair.iou);
                offsets[slot].push(px);
                offsets_norm[slot].push(norm);
            }
        }

        if pair.kind == RegionKind::Text {
            let gt_text = normalize_text(g.text.as_deref().unwrap_or_default());
            let pred_text = normalize_text(p.text.as_deref().unwrap_or_default());
            let (cer, wer) = cer_wer(&gt_text, &pred_text)?;
            cers.push(cer);
            wers.push(wer);
            let gt_chars: Vec<char> = gt_text.chars().collect();
            let pred_chars: Vec<char> = pred_text.chars().collect();
            recovered_chars += gt_chars.len().saturating_sub(edit_distance(&gt_chars, &pred_chars));
        }
    }

    let total_gt_chars: usize = gt
        .regions
        .iter()
        .filter(|r| r.kind == RegionKind::Text)
        .map(|r| normalize_text(r.text.as_deref().unwrap_or_default()).chars().count())
        .sum();

    let per_kind = |f: &dyn Fn(usize, Option<RegionKind>) -> Option<f64>| PerKind {
        text: f(0, kinds[0]),
        image: f(1, kinds[1]),
        overall: f(2, kinds[2]),
    };

    Ok(RunMetrics {
        run_id: run_id.to_owned(),
        element_recovery: per_kind(&|_, k| ratio(counts.matched.get(k), counts.gt.get(k))),
        char_recovery: ratio(recovered_chars, total_gt_chars),
        iou_mean: per_kind(&|i, _| mean(&ious[i])),
        iou_median: per_kind(&|i, _| median(&ious[i])),
        center_offset_mean_px: per_kind(&|i, _| mean(&offsets[i])),
        center_offset_norm: per_kind(&|i, _| mean(&offsets_norm[i])),
        cer_mean: mean(&cers),
        wer_mean: mean(&wers),
        frac_iou_50: per_kind(&|_, k| ratio(counts.iou_ge_50.get(k), counts.matched.get(k))),
        frac_iou_75: per_kind(&|_, k| ratio(counts.iou_ge_75.get(k), counts.matched.get(k))),
        counts,
        timings,
        matching,
    })
}
