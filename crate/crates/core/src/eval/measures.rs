use super::EvalError;
use crate::schema::{normalize_text, PixelBox};

/// Intersection over union of two boxes; 0 when they do not overlap.
pub fn iou(a: &PixelBox, b: &PixelBox) -> f64 {
    let iw = (a.right().min(b.right()) - a.x.max(b.x)).max(0.0);
    let ih = (a.bottom().min(b.bottom()) - a.y.max(b.y)).max(0.0);
    let inter = iw * ih;
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Distance between box centers, in pixels and as a fraction of the image diagonal.
pub fn center_offset(a: &PixelBox, b: &PixelBox, image_width: u32, image_height: u32) -> (f64, f64) {
    let (ax, ay) = a.center();
    let (bx, by) = b.center();
    let px = (ax - bx).hypot(ay - by);
    let diag = (image_width as f64).hypot(image_height as f64);
    (px, if diag > 0.0 { px / diag } else { 0.0 })
}

/// Levenshtein distance over arbitrary token sequences.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ta) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, tb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ta != tb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Character and word error rates of `pred` against `gt`, both normalized first.
pub fn cer_wer(gt: &str, pred: &str) -> Result<(f64, f64), EvalError> {
    let gt = normalize_text(gt);
    let pred = normalize_text(pred);
    if gt.is_empty() {
        return Err(EvalError::EmptyGroundTruth);
    }
    let gt_chars: Vec<char> = gt.chars().collect();
    let pred_chars: Vec<char> = pred.chars().collect();
    let gt_words: Vec<&str> = gt.split_whitespace().collect();
    let pred_words: Vec<&str> = pred.split_whitespace().collect();
    let cer = edit_distance(&gt_chars, &pred_chars) as f64 / gt_chars.len() as f64;
    let wer = edit_distance(&gt_words, &pred_words) as f64 / gt_words.len() as f64;
    Ok((cer, wer))
}
