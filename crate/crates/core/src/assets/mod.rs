//! Raster assets: padded crops, content-addressed storage and upload,
//! synthesized backgrounds, and debug overlays.

mod background;
mod crop;
mod font;
mod overlay;
mod store;

use std::io::Cursor;
use std::path::PathBuf;

use image::{ImageFormat, RgbaImage};
use thiserror::Error;

pub use background::{background_canvas_size, synthesize_background, BackgroundMode, BackgroundSample};
pub use crop::{crop_bounds, crop_image, crop_region, CropBounds, DEFAULT_PAD_PX};
pub use overlay::{render_overlay, IMAGE_OUTLINE, TEXT_OUTLINE};
pub use store::{content_name, AssetRef, AssetStore, HttpUploader, LocalDirUploader, UploadError, Uploader};

#[derive(Debug, Error)]
pub enum AssetError {
    #[error("degenerate crop {x0},{y0} to {x1},{y1}")]
    DegenerateCrop { x0: u32, y0: u32, x1: u32, y1: u32 },
    #[error("background sample box has zero area")]
    DegeneratePatch,
    #[error("output size must be positive, got {0}x{1}")]
    EmptyOutput(u32, u32),
    #[error("cannot content-address an empty byte sequence")]
    EmptyInput,
    #[error("image codec error: {0}")]
    Image(#[from] image::ImageError),
    #[error("asset store I/O at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("upload of {name} failed: {source}")]
    Upload {
        name: String,
        #[source]
        source: UploadError,
    },
    #[error("uploader returned non-https URL {0:?}")]
    InsecureUrl(String),
}

/// Lossless PNG encoding.
pub fn encode_png(img: &RgbaImage) -> Result<Vec<u8>, AssetError> {
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png)?;
    Ok(buf.into_inner())
}

pub fn decode_image(bytes: &[u8]) -> Result<RgbaImage, AssetError> {
    Ok(image::load_from_memory(bytes)?.to_rgba8())
}
