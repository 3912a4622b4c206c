use std::cmp::Ordering;
use std::collections::HashSet;

use tracing::warn;

use super::text::normalize_text;
use super::{Layout, PixelBox, RegionKind};

/// Regions narrower or shorter than this after clamping are dropped.
pub const MIN_REGION_SIZE_PX: f64 = 1.0;
/// Regions whose tops differ by less than this share a row in fallback ordering.
pub const ROW_BAND_PX: f64 = 10.0;

/// Repair a parsed layout: normalize text, clamp boxes to the image, drop
/// degenerate regions, and fix up reading order. Never fails.
pub fn postprocess_layout(layout: Layout) -> Layout {
    let (width, height) = (layout.image.width as f64, layout.image.height as f64);
    let mut regions = Vec::with_capacity(layout.regions.len());

    for mut region in layout.regions {
        if let Some(text) = region.text.take() {
            let normalized = normalize_text(&text);
            region.text = (!normalized.is_empty()).then_some(normalized);
        }
        if region.kind == RegionKind::Text && region.text.is_none() {
            warn!(region = %region.id, "dropping text region with empty text");
            continue;
        }

        region.bbox = clamp_box(region.bbox, width, height);
        if !(region.bbox.w >= MIN_REGION_SIZE_PX && region.bbox.h >= MIN_REGION_SIZE_PX) {
            warn!(region = %region.id, w = region.bbox.w, h = region.bbox.h, "dropping region below minimum size");
            continue;
        }
        regions.push(region);
    }

    let mut seen = HashSet::new();
    let needs_fallback = regions
        .iter()
        .any(|r| r.order.is_none_or(|o| !seen.insert(o)));

    if needs_fallback {
        let boxes: Vec<PixelBox> = regions.iter().map(|r| r.bbox).collect();
        let ranks = reading_order(&boxes, |i| regions[i].id.as_str());
        for (rank, &idx) in ranks.iter().enumerate() {
            regions[idx].order = Some(rank as i64 + 1);
        }
    }
    regions.sort_by_key(|r| r.order);

    Layout {
        image: layout.image,
        regions,
    }
}

fn clamp_box(b: PixelBox, width: f64, height: f64) -> PixelBox {
    let x = b.x.max(0.0);
    let y = b.y.max(0.0);
    PixelBox::new(x, y, b.w.min(width - x), b.h.min(height - y))
}

/// Indices of `boxes` in top-to-bottom, left-to-right order.
///
/// Boxes are swept by `y`; a new row starts once a top edge is at least
/// [`ROW_BAND_PX`] below the first top edge of the current row.
fn reading_order<'a>(boxes: &[PixelBox], tie: impl Fn(usize) -> &'a str) -> Vec<usize> {
    let mut by_y: Vec<usize> = (0..boxes.len()).collect();
    by_y.sort_by(|&a, &b| {
        cmp_f64(boxes[a].y, boxes[b].y)
            .then(cmp_f64(boxes[a].x, boxes[b].x))
            .then_with(|| tie(a).cmp(tie(b)))
    });

    let mut row_of = vec![0usize; boxes.len()];
    let mut row = 0;
    let mut row_top = f64::NEG_INFINITY;
    for &i in &by_y {
        if boxes[i].y - row_top >= ROW_BAND_PX {
            if row_top.is_finite() {
                row += 1;
            }
            row_top = boxes[i].y;
        }
        row_of[i] = row;
    }

    by_y.sort_by(|&a, &b| {
        row_of[a]
            .cmp(&row_of[b])
            .then(cmp_f64(boxes[a].x, boxes[b].x))
            .then(cmp_f64(boxes[a].y, boxes[b].y))
            .then_with(|| tie(a).cmp(tie(b)))
    });
    by_y
}

fn cmp_f64(a: f64, b: f64) -> Ordering {
    a.partial_cmp(&b).unwrap_or(Ordering::Equal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{parse_layout, Region};
    use crate::testdata::LISTING_LAYOUT;
    use proptest::prelude::*;

    #[test]
    fn clamps_negative_origin() {
        let layout = Layout::new(100, 100, vec![Region::image("a", 1, PixelBox::new(-5.0, 10.0, 50.0, 20.0))]);
        let out = postprocess_layout(layout);
        assert_eq!(out.regions[0].bbox, PixelBox::new(0.0, 10.0, 50.0, 20.0));
    }

    #[test]
    fn clamps_right_and_bottom() {
        let layout = Layout::new(100, 100, vec![Region::image("a", 1, PixelBox::new(80.0, 90.0, 50.0, 20.0))]);
        let out = postprocess_layout(layout);
        assert_eq!(out.regions[0].bbox, PixelBox::new(80.0, 90.0, 20.0, 10.0));
    }

    #[test]
    fn clean_layout_is_fixed_point() {
        let layout = parse_layout(LISTING_LAYOUT).unwrap();
        assert_eq!(postprocess_layout(layout.clone()), layout);
    }

    #[test]
    fn duplicate_orders_fall_back_to_reading_order() {
        let layout = Layout::new(
            1000,
            1000,
            vec![
                Region::image("low", 1, PixelBox::new(0.0, 200.0, 10.0, 10.0)),
                Region::image("high", 1, PixelBox::new(0.0, 10.0, 10.0, 10.0)),
            ],
        );
        let out = postprocess_layout(layout);
        assert_eq!(out.region("low").unwrap().order, Some(2));
        assert_eq!(out.region("high").unwrap().order, Some(1));
        assert_eq!(out.regions[0].id, "high");
    }

    #[test]
    fn row_band_orders_left_to_right() {
        let mut regions = vec![
            Region::image("right", 1, PixelBox::new(500.0, 4.0, 10.0, 10.0)),
            Region::image("left", 2, PixelBox::new(10.0, 12.0, 10.0, 10.0)),
            Region::image("below", 3, PixelBox::new(0.0, 30.0, 10.0, 10.0)),
        ];
        regions[2].order = None;
        let out = postprocess_layout(Layout::new(1000, 1000, regions));
        let ids: Vec<_> = out.regions.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["left", "right", "below"]);
    }

    #[test]
    fn drops_sub_pixel_and_outside_regions() {
        let layout = Layout::new(
            100,
            100,
            vec![
                Region::image("thin", 1, PixelBox::new(0.0, 0.0, 0.5, 10.0)),
                Region::image("outside", 2, PixelBox::new(120.0, 0.0, 10.0, 10.0)),
                Region::image("edge", 3, PixelBox::new(99.5, 0.0, 10.0, 10.0)),
                Region::image("ok", 4, PixelBox::new(10.0, 10.0, 10.0, 10.0)),
            ],
        );
        let out = postprocess_layout(layout);
        let ids: Vec<_> = out.regions.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["ok"]);
    }

    #[test]
    fn normalizes_text() {
        let layout = Layout::new(
            100,
            100,
            vec![
                Region::text("t", 1, PixelBox::new(0.0, 0.0, 10.0, 10.0), "  two   words\n next "),
                Region::text("blank", 2, PixelBox::new(0.0, 20.0, 10.0, 10.0), " \t "),
            ],
        );
        let out = postprocess_layout(layout);
        assert_eq!(out.regions.len(), 1);
        assert_eq!(out.regions[0].text.as_deref(), Some("two words\nnext"));
    }

    fn arb_layout() -> impl Strategy<Value = Layout> {
        let region = (
            0usize..2,
            proptest::option::of(0i64..5),
            -50.0f64..250.0,
            -50.0f64..250.0,
            0.1f64..150.0,
            0.1f64..150.0,
            "[ a-z\n]{0,12}",
        );
        (1u32..300, 1u32..300, proptest::collection::vec(region, 0..10)).prop_map(|(w, h, regions)| {
            let regions = regions
                .into_iter()
                .enumerate()
                .map(|(i, (kind, order, x, y, bw, bh, text))| {
                    let bbox = PixelBox::new(x, y, bw, bh);
                    let mut r = if kind == 0 {
                        Region::text(format!("r{i}"), 0, bbox, text)
                    } else {
                        Region::image(format!("r{i}"), 0, bbox)
                    };
                    r.order = order;
                    r
                })
                .collect();
            Layout::new(w, h, regions)
        })
    }

    proptest! {
        #[test]
        fn idempotent(layout in arb_layout()) {
            let once = postprocess_layout(layout);
            prop_assert_eq!(postprocess_layout(once.clone()), once);
        }

        #[test]
        fn surviving_regions_are_contained(layout in arb_layout()) {
            let (w, h) = (layout.image.width as f64, layout.image.height as f64);
            let out = postprocess_layout(layout);
            for r in &out.regions {
                let b = r.bbox;
                prop_assert!(b.x >= 0.0 && b.y >= 0.0);
                prop_assert!(b.right() <= w && b.bottom() <= h);
                prop_assert!(b.w >= 1.0 && b.h >= 1.0);
            }
        }

        #[test]
        fn orders_are_distinct_and_sorted(layout in arb_layout()) {
            let out = postprocess_layout(layout);
            let orders: Vec<i64> = out.regions.iter().map(|r| r.order.unwrap()).collect();
            for pair in orders.windows(2) {
                prop_assert!(pair[0] < pair[1]);
            }
        }

        #[test]
        fn deterministic(layout in arb_layout()) {
            prop_assert_eq!(postprocess_layout(layout.clone()), postprocess_layout(layout));
        }
    }
}
