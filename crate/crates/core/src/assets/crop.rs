use image::{imageops, RgbaImage};

use super::{encode_png, AssetError};
use crate::schema::PixelBox;

/// Extra pixels kept past the right and bottom edges of an image region.
pub const DEFAULT_PAD_PX: u32 = 10;

/// Half-open pixel rectangle `[x0, x1) x [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CropBounds {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl CropBounds {
    pub fn width(&self) -> u32 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> u32 {
        self.y1 - self.y0
    }
}

/// Crop rectangle for `b`: top-left kept, right/bottom padded by `pad` and
/// clamped to the image. Fractional edges round outward.
pub fn crop_bounds(b: &PixelBox, width: u32, height: u32, pad: u32) -> Result<CropBounds, AssetError> {
    let (w, h) = (width as f64, height as f64);
    let x0 = b.x.floor().clamp(0.0, w) as u32;
    let y0 = b.y.floor().clamp(0.0, h) as u32;
    let x1 = (b.x + b.w + pad as f64).min(w).ceil().max(0.0) as u32;
    let y1 = (b.y + b.h + pad as f64).min(h).ceil().max(0.0) as u32;
    if x1 <= x0 || y1 <= y0 {
        return Err(AssetError::DegenerateCrop { x0, y0, x1, y1 });
    }
    Ok(CropBounds { x0, y0, x1, y1 })
}

pub fn crop_image(img: &RgbaImage, b: &PixelBox, pad: u32) -> Result<RgbaImage, AssetError> {
    let c = crop_bounds(b, img.width(), img.height(), pad)?;
    Ok(imageops::crop_imm(img, c.x0, c.y0, c.width(), c.height()).to_image())
}

/// Padded crop of `b`, PNG-encoded.
pub fn crop_region(img: &RgbaImage, b: &PixelBox, pad: u32) -> Result<Vec<u8>, AssetError> {
    encode_png(&crop_image(img, b, pad)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient(w: u32, h: u32) -> RgbaImage {
        RgbaImage::from_fn(w, h, |x, y| image::Rgba([(x % 256) as u8, (y % 256) as u8, ((x + y) % 256) as u8, 255]))
    }

    #[test]
    fn pads_right_and_bottom() {
        let c = crop_bounds(&PixelBox::new(32.0, 140.0, 469.0, 351.0), 1600, 900, 10).unwrap();
        assert_eq!(c, CropBounds { x0: 32, y0: 140, x1: 511, y1: 501 });
    }

    #[test]
    fn whole_image_saturates() {
        let c = crop_bounds(&PixelBox::new(0.0, 0.0, 1600.0, 900.0), 1600, 900, 10).unwrap();
        assert_eq!(c, CropBounds { x0: 0, y0: 0, x1: 1600, y1: 900 });
    }

    #[test]
    fn clamps_padding() {
        let c = crop_bounds(&PixelBox::new(100.0, 100.0, 50.0, 50.0), 155, 155, 10).unwrap();
        assert_eq!(c, CropBounds { x0: 100, y0: 100, x1: 155, y1: 155 });
    }

    #[test]
    fn fractional_edges_round_outward() {
        let c = crop_bounds(&PixelBox::new(1.5, 2.5, 3.2, 4.1), 100, 100, 0).unwrap();
        assert_eq!(c, CropBounds { x0: 1, y0: 2, x1: 5, y1: 7 });
    }

    #[test]
    fn degenerate_is_error() {
        assert!(crop_bounds(&PixelBox::new(200.0, 0.0, 5.0, 5.0), 100, 100, 10).is_err());
    }

    #[test]
    fn crop_pixels_match_source() {
        let img = gradient(155, 155);
        let out = crop_image(&img, &PixelBox::new(100.0, 100.0, 50.0, 50.0), 10).unwrap();
        assert_eq!(out.dimensions(), (55, 55));
        assert_eq!(out.get_pixel(0, 0), img.get_pixel(100, 100));
        assert_eq!(out.get_pixel(54, 54), img.get_pixel(154, 154));
    }

    #[test]
    fn png_is_lossless() {
        let img = gradient(40, 30);
        let bytes = crop_region(&img, &PixelBox::new(5.0, 5.0, 20.0, 10.0), 10).unwrap();
        let back = super::super::decode_image(&bytes).unwrap();
        assert_eq!(back, crop_image(&img, &PixelBox::new(5.0, 5.0, 20.0, 10.0), 10).unwrap());
    }
}
