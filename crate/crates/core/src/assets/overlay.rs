use image::{Rgba, RgbaImage};

use super::font::{glyph_cells, GLYPH_H, GLYPH_W};
use crate::schema::{Layout, PixelBox, RegionKind};

pub const TEXT_OUTLINE: Rgba<u8> = Rgba([220, 38, 38, 255]);
pub const IMAGE_OUTLINE: Rgba<u8> = Rgba([37, 99, 235, 255]);
const LABEL_INK: Rgba<u8> = Rgba([255, 255, 255, 255]);

const OUTLINE_PX: u32 = 2;
const LABEL_SCALE: u32 = 2;
const LABEL_PAD: u32 = 2;

fn outline_color(kind: RegionKind) -> Rgba<u8> {
    match kind {
        RegionKind::Text => TEXT_OUTLINE,
        RegionKind::Image => IMAGE_OUTLINE,
    }
}

/// Copy of `img` with every region outlined (red for text, blue for image)
/// and tagged with its id in the box's top-left corner.
///
/// Labels are drawn first so outlines are never painted over.
pub fn render_overlay(img: &RgbaImage, layout: &Layout) -> RgbaImage {
    let mut out = img.clone();
    let spans: Vec<_> = layout
        .regions
        .iter()
        .filter_map(|r| pixel_span(&r.bbox, out.width(), out.height()).map(|s| (r, s)))
        .collect();

    for (region, (x0, y0, _, _)) in &spans {
        draw_label(&mut out, x0 + OUTLINE_PX, y0 + OUTLINE_PX, &region.id, outline_color(region.kind));
    }
    for (region, span) in &spans {
        draw_outline(&mut out, *span, outline_color(region.kind));
    }
    out
}

/// Inclusive pixel extents of `b`, clipped to the image.
fn pixel_span(b: &PixelBox, width: u32, height: u32) -> Option<(u32, u32, u32, u32)> {
    if width == 0 || height == 0 {
        return None;
    }
    let x0 = b.x.floor().max(0.0);
    let y0 = b.y.floor().max(0.0);
    let x1 = ((b.x + b.w).ceil() - 1.0).min(width as f64 - 1.0);
    let y1 = ((b.y + b.h).ceil() - 1.0).min(height as f64 - 1.0);
    (x1 >= x0 && y1 >= y0).then_some((x0 as u32, y0 as u32, x1 as u32, y1 as u32))
}

fn draw_outline(img: &mut RgbaImage, (x0, y0, x1, y1): (u32, u32, u32, u32), color: Rgba<u8>) {
    for t in 0..OUTLINE_PX {
        let (top, bottom) = (y0 + t, y1.saturating_sub(t));
        let (left, right) = (x0 + t, x1.saturating_sub(t));
        if top > bottom || left > right {
            break;
        }
        for x in left..=right {
            img.put_pixel(x, top, color);
            img.put_pixel(x, bottom, color);
        }
        for y in top..=bottom {
            img.put_pixel(left, y, color);
            img.put_pixel(right, y, color);
        }
    }
}

fn draw_label(img: &mut RgbaImage, x: u32, y: u32, text: &str, background: Rgba<u8>) {
    let advance = (GLYPH_W + 1) * LABEL_SCALE;
    let chars = text.chars().count() as u32;
    let tag_w = chars * advance + LABEL_PAD * 2;
    let tag_h = GLYPH_H * LABEL_SCALE + LABEL_PAD * 2;
    fill(img, x, y, tag_w, tag_h, background);

    for (i, c) in text.chars().enumerate() {
        let gx = x + LABEL_PAD + i as u32 * advance;
        for (col, row) in glyph_cells(c) {
            fill(
                img,
                gx + col * LABEL_SCALE,
                y + LABEL_PAD + row * LABEL_SCALE,
                LABEL_SCALE,
                LABEL_SCALE,
                LABEL_INK,
            );
        }
    }
}

fn fill(img: &mut RgbaImage, x: u32, y: u32, w: u32, h: u32, color: Rgba<u8>) {
    let x_end = x.saturating_add(w).min(img.width());
    let y_end = y.saturating_add(h).min(img.height());
    for yy in y..y_end {
        for xx in x..x_end {
            img.put_pixel(xx, yy, color);
        }
    }
}
