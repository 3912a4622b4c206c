//! Seeded ground-truth layouts and synthetic predictions derived from them.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::schema::{Layout, PixelBox, Region, RegionKind, StyleHints};

pub const TEMPLATE_WIDTH: u32 = 1600;
pub const TEMPLATE_HEIGHT: u32 = 900;

const MARGIN: f64 = 60.0;
const GAP: f64 = 40.0;

const WORDS: &[&str] = &[
    "growth", "market", "users", "revenue", "cloud", "data", "insight", "trend", "mobile", "design", "impact",
    "survey", "energy", "health", "retail", "network", "annual", "share", "global", "local", "speed", "quality",
];

fn phrase(rng: &mut ChaCha8Rng, words: usize) -> String {
    (0..words).map(|_| *WORDS.choose(rng).expect("word list is non-empty")).collect::<Vec<_>>().join(" ")
}

fn style(size: f64, bold: bool) -> StyleHints {
    StyleHints { font_family: Some("Arial".to_owned()), font_size_pt: Some(size), bold: Some(bold) }
}

/// A title over a grid of panels, each an image with a caption below it.
///
/// Boxes are whole pixels, lie inside the image and never overlap.
pub fn generate_template_layout(seed: u64) -> Layout {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = TEMPLATE_WIDTH as f64;
    let h = TEMPLATE_HEIGHT as f64;
    let mut regions = Vec::new();
    let mut order = 1;

    let title_h = rng.gen_range(50..=80) as f64;
    let title_words = rng.gen_range(2..=6);
    regions.push(
        Region::text("title", order, PixelBox::new(MARGIN, MARGIN, w - 2.0 * MARGIN, title_h), phrase(&mut rng, title_words))
            .with_style(style(36.0, true)),
    );
    order += 1;

    let cols = rng.gen_range(2..=4usize);
    let rows = rng.gen_range(1..=2usize);
    let top = MARGIN + title_h + GAP;
    let cell_w = ((w - 2.0 * MARGIN - GAP * (cols as f64 - 1.0)) / cols as f64).floor();
    let cell_h = ((h - top - MARGIN - GAP * (rows as f64 - 1.0)) / rows as f64).floor();
    let caption_h = 40.0;
    let image_h = cell_h - caption_h - 10.0;

    for r in 0..rows {
        for c in 0..cols {
            let x = MARGIN + c as f64 * (cell_w + GAP);
            let y = top + r as f64 * (cell_h + GAP);
            let n = r * cols + c + 1;
            regions.push(Region::image(format!("panel_{n}_image"), order, PixelBox::new(x, y, cell_w, image_h)));
            order += 1;
            let words = rng.gen_range(1..=4);
            regions.push(
                Region::text(
                    format!("panel_{n}_caption"),
                    order,
                    PixelBox::new(x, y + image_h + 10.0, cell_w, caption_h),
                    phrase(&mut rng, words),
                )
                .with_style(style(18.0, false)),
            );
            order += 1;
        }
    }

    Layout::new(TEMPLATE_WIDTH, TEMPLATE_HEIGHT, regions)
}

/// How to degrade a ground-truth layout into a synthetic prediction.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Perturbation {
    /// Uniform translation applied to every box.
    pub shift_x: f64,
    pub shift_y: f64,
    /// Each box edge moves by up to this many pixels.
    pub jitter_px: f64,
    /// Probability that a character in a text region is replaced.
    pub typo_rate: f64,
    /// Probability that a region is omitted.
    pub drop_rate: f64,
    pub seed: u64,
}

impl Perturbation {
    pub fn shift(dx: f64, dy: f64) -> Self {
        Self { shift_x: dx, shift_y: dy, ..Self::default() }
    }
}

/// Apply `p` to `gt`. Boxes are not clamped, so a pure shift keeps every
/// box size and moves every center by exactly the shift.
pub fn perturb(gt: &Layout, p: &Perturbation) -> Layout {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut regions = Vec::with_capacity(gt.regions.len());
    for region in &gt.regions {
        if p.drop_rate > 0.0 && rng.gen_bool(p.drop_rate.min(1.0)) {
            continue;
        }
        let mut out = region.clone();
        let mut b = region.bbox.translated(p.shift_x, p.shift_y);
        if p.jitter_px > 0.0 {
            let j = p.jitter_px;
            let (dx0, dy0) = (rng.gen_range(-j..=j), rng.gen_range(-j..=j));
            let (dx1, dy1) = (rng.gen_range(-j..=j), rng.gen_range(-j..=j));
            b = PixelBox::new(b.x + dx0, b.y + dy0, (b.w - dx0 + dx1).max(1.0), (b.h - dy0 + dy1).max(1.0));
        }
        out.bbox = b;
        if region.kind == RegionKind::Text && p.typo_rate > 0.0 {
            if let Some(text) = &region.text {
                let typed: String = text
                    .chars()
                    .map(|ch| {
                        if !ch.is_whitespace() && rng.gen_bool(p.typo_rate.min(1.0)) {
                            let sub = rng.gen_range(b'a'..=b'z') as char;
                            if sub == ch {
                                'x'
                            } else {
                                sub
                            }
                        } else {
                            ch
                        }
                    })
                    .collect();
                out.text = Some(typed);
            }
        }
        regions.push(out);
    }
    Layout { image: gt.image, regions }
}
