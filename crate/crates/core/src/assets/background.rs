use image::{Rgba, RgbaImage};
use serde::{Deserialize, Serialize};

use super::crop::crop_bounds;
use super::AssetError;
use crate::geometry::{FitTransform, SlidePageSize};
use crate::schema::PixelBox;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackgroundMode {
    /// Fill with the patch's mean color.
    Solid,
    /// Repeat the patch from the origin.
    Tile,
}

/// Region of the source image that shows clean background.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackgroundSample {
    #[serde(rename = "bbox_px")]
    pub bbox: PixelBox,
    pub mode: BackgroundMode,
}

/// Pixel size of a background that covers the whole page at the image's
/// own resolution, so tiles keep their source scale.
pub fn background_canvas_size(page: &SlidePageSize, fit: &FitTransform) -> (u32, u32) {
    let w = (page.width_pt / fit.scale).round().max(1.0) as u32;
    let h = (page.height_pt / fit.scale).round().max(1.0) as u32;
    (w, h)
}

pub fn synthesize_background(
    img: &RgbaImage,
    sample: &BackgroundSample,
    out_width: u32,
    out_height: u32,
) -> Result<RgbaImage, AssetError> {
    if out_width == 0 || out_height == 0 {
        return Err(AssetError::EmptyOutput(out_width, out_height));
    }
    let bounds = crop_bounds(&sample.bbox, img.width(), img.height(), 0).map_err(|_| AssetError::DegeneratePatch)?;
    let patch = image::imageops::crop_imm(img, bounds.x0, bounds.y0, bounds.width(), bounds.height()).to_image();

    Ok(match sample.mode {
        BackgroundMode::Solid => RgbaImage::from_pixel(out_width, out_height, mean_color(&patch)),
        BackgroundMode::Tile => {
            let (pw, ph) = patch.dimensions();
            RgbaImage::from_fn(out_width, out_height, |x, y| *patch.get_pixel(x % pw, y % ph))
        }
    })
}

/// Per-channel arithmetic mean in 8-bit sRGB, rounded half up.
fn mean_color(patch: &RgbaImage) -> Rgba<u8> {
    let n = patch.width() as u64 * patch.height() as u64;
    let mut sums = [0u64; 4];
    for px in patch.pixels() {
        for (s, &c) in sums.iter_mut().zip(px.0.iter()) {
            *s += c as u64;
        }
    }
    Rgba(sums.map(|s| ((s + n / 2) / n) as u8))
}
