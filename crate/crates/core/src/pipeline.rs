//! Stages three to five in one call: crop and upload assets, fit the image
//! to the page, and build the request batch.

use std::collections::BTreeMap;

use image::RgbaImage;
use thiserror::Error;

use crate::assets::{
    background_canvas_size, crop_region, encode_png, synthesize_background, AssetError, AssetStore, BackgroundSample,
    Uploader,
};
use crate::geometry::{compute_fit, FitTransform, GeometryError};
use crate::schema::{Layout, RegionKind};
use crate::slides::{build_requests_for_infographic, BuildError, BuildOptions, RequestBatch};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("layout describes a {layout_w}x{layout_h} image but the image is {image_w}x{image_h}")]
    DimensionMismatch { layout_w: u32, layout_h: u32, image_w: u32, image_h: u32 },
    #[error(transparent)]
    Asset(#[from] AssetError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Build(#[from] BuildError),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PreparedAssets {
    /// Region id to public URL.
    pub urls: BTreeMap<String, String>,
    pub background_url: Option<String>,
}

/// Crop every image region (and the synthesized background, if a sample is
/// given), store each under its content name and make sure it has a URL.
#[allow(clippy::too_many_arguments)]
pub fn prepare_assets(
    img: &RgbaImage,
    layout: &Layout,
    background: Option<&BackgroundSample>,
    fit: &FitTransform,
    options: &BuildOptions,
    pad_px: u32,
    store: &mut AssetStore,
    uploader: &dyn Uploader,
) -> Result<PreparedAssets, AssetError> {
    let mut prepared = PreparedAssets::default();
    for region in layout.regions.iter().filter(|r| r.kind == RegionKind::Image) {
        let png = crop_region(img, &region.bbox, pad_px)?;
        let asset = store.store_and_upload(&png, uploader)?;
        prepared.urls.insert(region.id.clone(), asset.url.expect("uploaded asset has a URL"));
    }
    if let Some(sample) = background {
        let (w, h) = background_canvas_size(&options.page_size, fit);
        let png = encode_png(&synthesize_background(img, sample, w, h)?)?;
        prepared.background_url = store.store_and_upload(&png, uploader)?.url;
    }
    Ok(prepared)
}

/// Full local build for one image: assets, fit and batch. No service calls
/// beyond whatever `uploader` does.
#[allow(clippy::too_many_arguments)]
pub fn build_slide(
    img: &RgbaImage,
    layout: &Layout,
    background: Option<&BackgroundSample>,
    presentation_id: &str,
    options: &BuildOptions,
    pad_px: u32,
    store: &mut AssetStore,
    uploader: &dyn Uploader,
) -> Result<RequestBatch, PipelineError> {
    if (layout.image.width, layout.image.height) != img.dimensions() {
        return Err(PipelineError::DimensionMismatch {
            layout_w: layout.image.width,
            layout_h: layout.image.height,
            image_w: img.width(),
            image_h: img.height(),
        });
    }
    let fit = compute_fit(img.width() as f64, img.height() as f64, options.page_size)?;
    let assets = prepare_assets(img, layout, background, &fit, options, pad_px, store, uploader)?;
    Ok(build_requests_for_infographic(
        layout,
        &fit,
        &assets.urls,
        assets.background_url.as_deref(),
        presentation_id,
        options,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets::{BackgroundMode, LocalDirUploader};
    use crate::schema::{parse_layout, PixelBox};
    use crate::slides::RequestKind;
    use crate::testdata::LISTING_LAYOUT;
    use image::Rgba;

    fn setup() -> (tempfile::TempDir, AssetStore, LocalDirUploader, RgbaImage, Layout) {
        let dir = tempfile::tempdir().unwrap();
        let store = AssetStore::open(dir.path()).unwrap();
        let uploader = LocalDirUploader::new(dir.path().join("public"), "https://assets.test/i2s");
        let img = RgbaImage::from_fn(1600, 900, |x, y| Rgba([(x % 256) as u8, (y % 256) as u8, 90, 255]));
        let layout = parse_layout(LISTING_LAYOUT).unwrap();
        (dir, store, uploader, img, layout)
    }

    #[test]
    fn listing_builds_five_requests() {
        let (_dir, mut store, uploader, img, layout) = setup();
        let batch = build_slide(&img, &layout, None, "deck", &BuildOptions::default(), 10, &mut store, &uploader).unwrap();
        assert_eq!(batch.requests.len(), 5);
    }

    #[test]
    fn background_goes_second() {
        let (_dir, mut store, uploader, img, layout) = setup();
        let sample = BackgroundSample { bbox: PixelBox::new(0.0, 880.0, 40.0, 20.0), mode: BackgroundMode::Solid };
        let batch =
            build_slide(&img, &layout, Some(&sample), "deck", &BuildOptions::default(), 10, &mut store, &uploader).unwrap();
        assert_eq!(batch.requests.len(), 6);
        assert_eq!(batch.requests[1].kind(), RequestKind::CreateImage);
        assert!(batch.requests[1].object_id().as_str().starts_with("BG_"));
    }

    #[test]
    fn dimension_mismatch() {
        let (_dir, mut store, uploader, _img, layout) = setup();
        let small = RgbaImage::new(800, 450);
        let err = build_slide(&small, &layout, None, "deck", &BuildOptions::default(), 10, &mut store, &uploader);
        assert!(matches!(err, Err(PipelineError::DimensionMismatch { .. })));
    }
}
