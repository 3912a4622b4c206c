//! Pixel-to-point mapping and typography calibration.
//!
//! An image of `W_I x H_I` pixels is fitted into a `W_S x H_S` point page
//! with a uniform scale `s = min(W_S/W_I, H_S/H_I)` and centered on the
//! non-binding axis. A pixel box `(x, y, w, h)` lands at
//! `(dx + s*x, dy + s*y, s*w, s*h)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schema::PixelBox;

/// Fonts at or above this size are left unchanged by [`calibrate_font`].
pub const FONT_CALIBRATION_PIVOT_PT: f64 = 14.0;
/// Fraction of the gap below the pivot that [`calibrate_font`] adds back.
pub const FONT_CALIBRATION_SLOPE: f64 = 0.294;

pub const DEFAULT_MARGIN_PT: f64 = 6.0;
pub const DEFAULT_GAP_PT: f64 = 4.0;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },
}

fn positive(what: &'static str, value: f64) -> Result<f64, GeometryError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(GeometryError::NonPositive { what, value })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlidePageSize {
    pub width_pt: f64,
    pub height_pt: f64,
}

impl SlidePageSize {
    pub fn new(width_pt: f64, height_pt: f64) -> Result<Self, GeometryError> {
        Ok(Self {
            width_pt: positive("page width", width_pt)?,
            height_pt: positive("page height", height_pt)?,
        })
    }

    pub fn full_rect(&self) -> PointRect {
        PointRect::new(0.0, 0.0, self.width_pt, self.height_pt)
    }
}

impl Default for SlidePageSize {
    /// 16:9 page, 10 x 5.625 inches.
    fn default() -> Self {
        Self {
            width_pt: 720.0,
            height_pt: 405.0,
        }
    }
}

/// Uniform scale plus centering offsets from image pixels to page points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitTransform {
    pub scale: f64,
    pub dx: f64,
    pub dy: f64,
}

impl FitTransform {
    pub const IDENTITY: FitTransform = FitTransform {
        scale: 1.0,
        dx: 0.0,
        dy: 0.0,
    };

    pub fn map_box(&self, b: &PixelBox) -> PointRect {
        bbox_px_to_pt(b, self)
    }

    /// Inverse of [`FitTransform::map_box`].
    pub fn unmap_rect(&self, r: &PointRect) -> PixelBox {
        PixelBox::new(
            (r.x - self.dx) / self.scale,
            (r.y - self.dy) / self.scale,
            r.w / self.scale,
            r.h / self.scale,
        )
    }
}

/// Rectangle in page points, top-left origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointRect {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl PointRect {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    /// Length of the open-interval overlap of the two vertical spans.
    pub fn vertical_overlap(&self, other: &PointRect) -> f64 {
        self.bottom().min(other.bottom()) - self.y.max(other.y)
    }
}

pub fn compute_fit(image_width: f64, image_height: f64, page: SlidePageSize) -> Result<FitTransform, GeometryError> {
    let iw = positive("image width", image_width)?;
    let ih = positive("image height", image_height)?;
    let pw = positive("page width", page.width_pt)?;
    let ph = positive("page height", page.height_pt)?;

    let sx = pw / iw;
    let sy = ph / ih;
    // The binding axis gets an offset of exactly zero.
    Ok(if sx <= sy {
        FitTransform {
            scale: sx,
            dx: 0.0,
            dy: (ph - sx * ih) / 2.0,
        }
    } else {
        FitTransform {
            scale: sy,
            dx: (pw - sy * iw) / 2.0,
            dy: 0.0,
        }
    })
}

pub fn bbox_px_to_pt(b: &PixelBox, fit: &FitTransform) -> PointRect {
    PointRect::new(
        fit.dx + fit.scale * b.x,
        fit.dy + fit.scale * b.y,
        fit.scale * b.w,
        fit.scale * b.h,
    )
}

/// Font size in points after mapping a model-estimated size through the fit scale.
pub fn base_font_pt(f_vlm: f64, fit: &FitTransform) -> Result<f64, GeometryError> {
    Ok(positive("font size", f_vlm)? * fit.scale)
}

/// Piecewise-linear boost for small text: `f + max(0, (14 - f) * 0.294)`.
pub fn calibrate_font(f: f64) -> f64 {
    f + ((FONT_CALIBRATION_PIVOT_PT - f) * FONT_CALIBRATION_SLOPE).max(0.0)
}

/// Widen a text box to absorb a font-size increase without colliding.
///
/// The left edge never moves. The right edge grows to `w * ratio`, capped by
/// the page edge minus `margin` and by every region that starts strictly to
/// the right and shares a positive-length vertical span, minus `gap`. The
/// result is never narrower than the input.
pub fn expand_width(
    rect: &PointRect,
    ratio: f64,
    neighbors: &[PointRect],
    page: &SlidePageSize,
    margin: f64,
    gap: f64,
) -> f64 {
    let desired = rect.w * ratio;
    let mut right = rect.x + desired;
    right = right.min(page.width_pt - margin);
    for n in neighbors {
        if n.x > rect.x && rect.vertical_overlap(n) > 0.0 {
            right = right.min(n.x - gap);
        }
    }
    rect.w.max(right - rect.x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn page() -> SlidePageSize {
        SlidePageSize::default()
    }

    #[test]
    fn fit_exact_ratio() {
        let fit = compute_fit(1600.0, 900.0, page()).unwrap();
        assert_eq!(fit, FitTransform { scale: 0.45, dx: 0.0, dy: 0.0 });
    }

    #[test]
    fn fit_identity() {
        let fit = compute_fit(100.0, 100.0, SlidePageSize::new(100.0, 100.0).unwrap()).unwrap();
        assert_eq!(fit, FitTransform::IDENTITY);
    }

    #[test]
    fn fit_letterbox() {
        let fit = compute_fit(1000.0, 500.0, page()).unwrap();
        assert_eq!(fit.scale, 0.72);
        assert_eq!(fit.dx, 0.0);
        assert!((fit.dy - 22.5).abs() < 1e-12);
    }

    #[test]
    fn fit_pillarbox() {
        let fit = compute_fit(900.0, 900.0, page()).unwrap();
        assert_eq!(fit.scale, 0.45);
        assert_eq!(fit.dy, 0.0);
        assert!((fit.dx - (720.0 - 405.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn fit_rejects_bad_dims() {
        assert!(compute_fit(0.0, 10.0, page()).is_err());
        assert!(compute_fit(10.0, -1.0, page()).is_err());
        assert!(SlidePageSize::new(720.0, 0.0).is_err());
    }

    #[test]
    fn maps_boxes() {
        let fit = compute_fit(1600.0, 900.0, page()).unwrap();
        assert_eq!(fit.map_box(&PixelBox::new(0.0, 0.0, 1600.0, 900.0)), PointRect::new(0.0, 0.0, 720.0, 405.0));
        let r = fit.map_box(&PixelBox::new(35.0, 45.0, 1500.0, 60.0));
        for (got, want) in [(r.x, 15.75), (r.y, 20.25), (r.w, 675.0), (r.h, 27.0)] {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
        let id = FitTransform::IDENTITY.map_box(&PixelBox::new(0.0, 0.0, 33.0, 44.0));
        assert_eq!(id, PointRect::new(0.0, 0.0, 33.0, 44.0));
    }

    #[test]
    fn base_font() {
        let fit = FitTransform { scale: 0.45, dx: 0.0, dy: 0.0 };
        assert!((base_font_pt(42.0, &fit).unwrap() - 18.9).abs() < 1e-12);
        assert_eq!(base_font_pt(10.0, &FitTransform::IDENTITY).unwrap(), 10.0);
        assert!((base_font_pt(5.5 / 0.45, &fit).unwrap() - 5.5).abs() < 1e-12);
        assert!(base_font_pt(0.0, &fit).is_err());
        assert!(base_font_pt(-3.0, &fit).is_err());
    }

    #[test]
    fn calibration_anchors() {
        assert!((calibrate_font(5.5) - 8.0).abs() < 0.01);
        assert_eq!(calibrate_font(14.0), 14.0);
        assert_eq!(calibrate_font(18.9), 18.9);
        assert!((calibrate_font(10.0) - 11.176).abs() < 1e-12);
    }

    #[test]
    fn expand_identity_ratio() {
        let rect = PointRect::new(100.0, 50.0, 100.0, 20.0);
        assert_eq!(expand_width(&rect, 1.0, &[], &page(), 6.0, 4.0), 100.0);
    }

    #[test]
    fn expand_capped_by_neighbor() {
        let rect = PointRect::new(100.0, 50.0, 100.0, 20.0);
        let neighbor = PointRect::new(230.0, 55.0, 50.0, 30.0);
        let w = expand_width(&rect, 1.45, &[neighbor], &page(), 6.0, 4.0);
        assert!((w - 126.0).abs() < 1e-9);
    }

    #[test]
    fn expand_capped_by_page() {
        let rect = PointRect::new(600.0, 50.0, 100.0, 20.0);
        let w = expand_width(&rect, 1.5, &[], &page(), 6.0, 4.0);
        assert!((w - 114.0).abs() < 1e-9);
    }

    #[test]
    fn touching_or_leftward_neighbors_ignored() {
        let rect = PointRect::new(100.0, 50.0, 100.0, 20.0);
        let touching = PointRect::new(230.0, 70.0, 50.0, 30.0);
        let left = PointRect::new(20.0, 50.0, 50.0, 20.0);
        let same_x = PointRect::new(100.0, 50.0, 50.0, 20.0);
        let w = expand_width(&rect, 1.45, &[touching, left, same_x], &page(), 6.0, 4.0);
        assert!((w - 145.0).abs() < 1e-9);
    }

    #[test]
    fn never_shrinks_under_tight_neighbor() {
        let rect = PointRect::new(100.0, 50.0, 100.0, 20.0);
        let overlapping = PointRect::new(150.0, 50.0, 50.0, 20.0);
        assert_eq!(expand_width(&rect, 2.0, &[overlapping], &page(), 6.0, 4.0), 100.0);
    }

    proptest! {
        #[test]
        fn calibration_monotone(a in 0.01f64..100.0, b in 0.01f64..100.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(calibrate_font(lo) <= calibrate_font(hi));
            prop_assert!(calibrate_font(a) >= a);
        }

        #[test]
        fn aspect_preserved(x in 0.0f64..1000.0, y in 0.0f64..1000.0, w in 0.5f64..1000.0, h in 0.5f64..1000.0,
                            iw in 1.0f64..4000.0, ih in 1.0f64..4000.0) {
            let fit = compute_fit(iw, ih, page()).unwrap();
            let r = fit.map_box(&PixelBox::new(x, y, w, h));
            prop_assert!(((r.w / r.h) / (w / h) - 1.0).abs() < 1e-9);
            let back = fit.unmap_rect(&r);
            for (got, want) in [(back.x, x), (back.y, y), (back.w, w), (back.h, h)] {
                prop_assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0));
            }
        }

        #[test]
        fn containment_preserved(iw in 1u32..4000, ih in 1u32..4000, fx in 0.0f64..1.0, fy in 0.0f64..1.0,
                                 fw in 0.0f64..1.0, fh in 0.0f64..1.0) {
            let (iw, ih) = (iw as f64, ih as f64);
            let x = fx * iw;
            let y = fy * ih;
            let b = PixelBox::new(x, y, (iw - x) * fw, (ih - y) * fh);
            let p = page();
            let r = compute_fit(iw, ih, p).unwrap().map_box(&b);
            let eps = 1e-9;
            prop_assert!(r.x >= -eps && r.y >= -eps);
            prop_assert!(r.right() <= p.width_pt + eps && r.bottom() <= p.height_pt + eps);
        }
    }
}
