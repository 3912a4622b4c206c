//! Optional repair for over-segmented text: stacked fragments of one block
//! are joined back into a single region.

use crate::schema::{Layout, PixelBox, Region, RegionKind, StyleHints};

/// Font sizes within this relative difference count as the same style.
const FONT_SIZE_TOLERANCE: f64 = 0.2;

fn agree<T: PartialEq>(a: &Option<T>, b: &Option<T>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => a == b,
        _ => true,
    }
}

fn compatible(a: Option<&StyleHints>, b: Option<&StyleHints>) -> bool {
    let (Some(a), Some(b)) = (a, b) else { return true };
    let sizes = match (a.font_size_pt, b.font_size_pt) {
        (Some(x), Some(y)) => (x - y).abs() <= FONT_SIZE_TOLERANCE * x.max(y),
        _ => true,
    };
    sizes && agree(&a.font_family, &b.font_family) && agree(&a.bold, &b.bold)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len().is_multiple_of(2) {
        (v[mid - 1] + v[mid]) / 2.0
    } else {
        v[mid]
    }
}

fn union(a: &PixelBox, b: &PixelBox) -> PixelBox {
    let x = a.x.min(b.x);
    let y = a.y.min(b.y);
    PixelBox::new(x, y, a.right().max(b.right()) - x, a.bottom().max(b.bottom()) - y)
}

/// `upper` sits directly above `lower` as part of the same block.
fn stacks(upper: &Region, lower: &Region, tolerance: f64) -> bool {
    let gap = lower.bbox.y - upper.bbox.bottom();
    (upper.bbox.x - lower.bbox.x).abs() <= tolerance
        && gap >= -tolerance
        && gap < tolerance
        && lower.bbox.y > upper.bbox.y
        && compatible(upper.style.as_ref(), lower.style.as_ref())
}

/// Merge text regions whose left edges align within half the median text
/// height and whose vertical gap is under half that height.
///
/// The merged region takes the union box, joins texts with a newline in top
/// to bottom order, and keeps the upper region's id and style and the
/// smaller order. Repeats until nothing changes. Image regions are untouched.
pub fn merge_adjacent_text(layout: &Layout) -> Layout {
    let heights: Vec<f64> = layout.regions.iter().filter(|r| r.kind == RegionKind::Text).map(|r| r.bbox.h).collect();
    if heights.len() < 2 {
        return layout.clone();
    }
    let tolerance = 0.5 * median(heights);

    let mut regions = layout.regions.clone();
    loop {
        let mut found = None;
        'search: for i in 0..regions.len() {
            for j in 0..regions.len() {
                if i != j
                    && regions[i].kind == RegionKind::Text
                    && regions[j].kind == RegionKind::Text
                    && stacks(&regions[i], &regions[j], tolerance)
                {
                    found = Some((i, j));
                    break 'search;
                }
            }
        }
        let Some((upper, lower)) = found else { break };
        let lower_region = regions.remove(lower);
        let upper = if lower < upper { upper - 1 } else { upper };
        let target = &mut regions[upper];
        target.bbox = union(&target.bbox, &lower_region.bbox);
        let text = format!(
            "{}\n{}",
            target.text.as_deref().unwrap_or_default(),
            lower_region.text.as_deref().unwrap_or_default()
        );
        target.text = Some(text);
        target.order = match (target.order, lower_region.order) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
    }
    Layout { image: layout.image, regions }
}
