use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use super::{object_id_for, ObjectId, RequestBatch, SlideRequest, TextStyle};
use crate::geometry::{
    base_font_pt, calibrate_font, expand_width, FitTransform, GeometryError, PointRect, SlidePageSize, DEFAULT_GAP_PT,
    DEFAULT_MARGIN_PT,
};
use crate::schema::{Layout, RegionKind};

pub const DEFAULT_FONT_FAMILY: &str = "Arial";
/// Pre-scale size used when a text region has no size hint.
pub const DEFAULT_FONT_SIZE_PT: f64 = 12.0;

#[derive(Debug, Error, PartialEq)]
pub enum BuildError {
    #[error("image region `{0}` has no uploaded asset URL")]
    MissingUrl(String),
    #[error("object id {0} is produced by more than one element")]
    DuplicateObjectId(String),
    #[error("invalid page id {0:?}")]
    InvalidPageId(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildOptions {
    pub page_id: String,
    pub page_size: SlidePageSize,
    pub expand_widths: bool,
    pub margin_pt: f64,
    pub gap_pt: f64,
    pub default_font_family: String,
    pub default_font_size_pt: f64,
    /// Snap emitted font sizes to this step (e.g. 0.5). `None` keeps the
    /// calibrated size, rounded to two decimals on serialization.
    pub font_size_step: Option<f64>,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            page_id: "I2S_SLIDE".to_owned(),
            page_size: SlidePageSize::default(),
            expand_widths: false,
            margin_pt: DEFAULT_MARGIN_PT,
            gap_pt: DEFAULT_GAP_PT,
            default_font_family: DEFAULT_FONT_FAMILY.to_owned(),
            default_font_size_pt: DEFAULT_FONT_SIZE_PT,
            font_size_step: None,
        }
    }
}

/// Build the request batch for one infographic slide.
///
/// Order: the slide, then the background image (if any) covering the whole
/// page, then each region in layout order. A text region becomes a text
/// box, its text, and its style; an image region becomes one image.
pub fn build_requests_for_infographic(
    layout: &Layout,
    fit: &FitTransform,
    asset_urls: &BTreeMap<String, String>,
    background_url: Option<&str>,
    presentation_id: &str,
    options: &BuildOptions,
) -> Result<RequestBatch, BuildError> {
    let page_id = ObjectId::new(options.page_id.clone()).ok_or_else(|| BuildError::InvalidPageId(options.page_id.clone()))?;
    let mut requests = vec![SlideRequest::CreateSlide {
        object_id: page_id.clone(),
    }];

    if let Some(url) = background_url {
        requests.push(SlideRequest::CreateImage {
            object_id: ObjectId::background(&page_id),
            page_id: page_id.clone(),
            geometry: options.page_size.full_rect(),
            url: url.to_owned(),
        });
    }

    let rects: Vec<PointRect> = layout.regions.iter().map(|r| fit.map_box(&r.bbox)).collect();

    for (i, region) in layout.regions.iter().enumerate() {
        let object_id = object_id_for(region);
        let mut geometry = rects[i];
        match region.kind {
            RegionKind::Text => {
                let style = region.style.clone().unwrap_or_default();
                let hinted = style.font_size_pt.unwrap_or(options.default_font_size_pt);
                let base = base_font_pt(hinted, fit)?;
                let calibrated = calibrate_font(base);

                if options.expand_widths {
                    let neighbors: Vec<PointRect> = rects
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, r)| *r)
                        .collect();
                    geometry.w = expand_width(
                        &geometry,
                        calibrated / base,
                        &neighbors,
                        &options.page_size,
                        options.margin_pt,
                        options.gap_pt,
                    );
                }

                let font_size_pt = match options.font_size_step {
                    Some(step) if step > 0.0 => (calibrated / step).round() * step,
                    _ => calibrated,
                };
                requests.push(SlideRequest::CreateTextBox {
                    object_id: object_id.clone(),
                    page_id: page_id.clone(),
                    geometry,
                });
                requests.push(SlideRequest::InsertText {
                    object_id: object_id.clone(),
                    text: region.text.clone().unwrap_or_default(),
                });
                requests.push(SlideRequest::UpdateTextStyle {
                    object_id,
                    style: TextStyle {
                        font_family: style.font_family.unwrap_or_else(|| options.default_font_family.clone()),
                        font_size_pt,
                        bold: style.bold.unwrap_or(false),
                    },
                });
            }
            RegionKind::Image => {
                let url = asset_urls
                    .get(&region.id)
                    .ok_or_else(|| BuildError::MissingUrl(region.id.clone()))?;
                requests.push(SlideRequest::CreateImage {
                    object_id,
                    page_id: page_id.clone(),
                    geometry,
                    url: url.clone(),
                });
            }
        }
    }

    let mut seen = HashSet::new();
    for req in requests.iter().filter(|r| r.creates()) {
        if !seen.insert(req.object_id().as_str()) {
            return Err(BuildError::DuplicateObjectId(req.object_id().to_string()));
        }
    }

    Ok(RequestBatch {
        presentation_id: presentation_id.to_owned(),
        page_id,
        requests,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::compute_fit;
    use crate::schema::{parse_layout, PixelBox, Region, StyleHints};
    use crate::slides::RequestKind;
    use crate::testdata::LISTING_LAYOUT;

    fn listing() -> (Layout, FitTransform, BTreeMap<String, String>) {
        let layout = parse_layout(LISTING_LAYOUT).unwrap();
        let fit = compute_fit(1600.0, 900.0, SlidePageSize::default()).unwrap();
        let urls = BTreeMap::from([("image_social_proof".to_owned(), "https://assets.test/a.png".to_owned())]);
        (layout, fit, urls)
    }

    fn kinds(batch: &RequestBatch) -> Vec<RequestKind> {
        batch.requests.iter().map(SlideRequest::kind).collect()
    }

    #[test]
    fn reference_layout_batch() {
        let (layout, fit, urls) = listing();
        let batch = build_requests_for_infographic(&layout, &fit, &urls, None, "pres", &BuildOptions::default()).unwrap();
        assert_eq!(
            kinds(&batch),
            [
                RequestKind::CreateSlide,
                RequestKind::CreateTextBox,
                RequestKind::InsertText,
                RequestKind::UpdateTextStyle,
                RequestKind::CreateImage
            ]
        );
        let g = batch.requests[1].geometry().unwrap();
        for (got, want) in [(g.x, 15.75), (g.y, 20.25), (g.w, 675.0), (g.h, 27.0)] {
            assert!((got - want).abs() < 1e-9);
        }
        let SlideRequest::UpdateTextStyle { style, .. } = &batch.requests[3] else {
            panic!("expected style request");
        };
        assert!((style.font_size_pt - 18.9).abs() < 1e-12);
        assert!(style.bold);
        assert_eq!(style.font_family, "Arial");
        assert_eq!(batch.requests[4].object_id().as_str(), "IMG_image_social_proof");
    }

    #[test]
    fn empty_layout_is_one_request() {
        let batch = build_requests_for_infographic(
            &Layout::new(100, 100, vec![]),
            &FitTransform::IDENTITY,
            &BTreeMap::new(),
            None,
            "pres",
            &BuildOptions::default(),
        )
        .unwrap();
        assert_eq!(kinds(&batch), [RequestKind::CreateSlide]);
    }

    #[test]
    fn background_is_second_and_full_page() {
        let (layout, fit, urls) = listing();
        let batch =
            build_requests_for_infographic(&layout, &fit, &urls, Some("https://assets.test/bg.png"), "p", &BuildOptions::default())
                .unwrap();
        assert_eq!(batch.requests.len(), 6);
        assert_eq!(batch.requests[1].kind(), RequestKind::CreateImage);
        assert_eq!(batch.requests[1].object_id().as_str(), "BG_I2S_SLIDE");
        assert_eq!(batch.requests[1].geometry(), Some(&PointRect::new(0.0, 0.0, 720.0, 405.0)));
    }

    #[test]
    fn missing_url_is_error() {
        let (layout, fit, _) = listing();
        let err = build_requests_for_infographic(&layout, &fit, &BTreeMap::new(), None, "p", &BuildOptions::default())
            .unwrap_err();
        assert_eq!(err, BuildError::MissingUrl("image_social_proof".into()));
    }

    #[test]
    fn defaults_apply_without_style() {
        let layout = Layout::new(100, 100, vec![Region::text("t", 1, PixelBox::new(0.0, 0.0, 50.0, 10.0), "hi")]);
        let batch = build_requests_for_infographic(&layout, &FitTransform::IDENTITY, &BTreeMap::new(), None, "p", &BuildOptions::default())
            .unwrap();
        let SlideRequest::UpdateTextStyle { style, .. } = &batch.requests[3] else {
            panic!();
        };
        assert_eq!(style.font_family, "Arial");
        assert!(!style.bold);
        assert!((style.font_size_pt - calibrate_font(12.0)).abs() < 1e-12);
    }

    #[test]
    fn font_step_snaps() {
        let (layout, fit, urls) = listing();
        let options = BuildOptions {
            font_size_step: Some(0.5),
            ..BuildOptions::default()
        };
        let batch = build_requests_for_infographic(&layout, &fit, &urls, None, "p", &options).unwrap();
        let SlideRequest::UpdateTextStyle { style, .. } = &batch.requests[3] else {
            panic!();
        };
        assert_eq!(style.font_size_pt, 19.0);
    }

    #[test]
    fn width_expansion_respects_neighbor() {
        let small = StyleHints {
            font_size_pt: Some(10.0),
            ..StyleHints::default()
        };
        let layout = Layout::new(
            720,
            405,
            vec![
                Region::text("label", 1, PixelBox::new(100.0, 50.0, 100.0, 20.0), "label").with_style(small),
                Region::image("icon", 2, PixelBox::new(230.0, 55.0, 50.0, 30.0)),
            ],
        );
        let urls = BTreeMap::from([("icon".to_owned(), "https://a.test/i.png".to_owned())]);
        let options = BuildOptions {
            expand_widths: true,
            ..BuildOptions::default()
        };
        let batch = build_requests_for_infographic(&layout, &FitTransform::IDENTITY, &urls, None, "p", &options).unwrap();
        // ratio = 11.176 / 10 -> desired 111.76, under the 226 cap.
        assert!((batch.requests[1].geometry().unwrap().w - 111.76).abs() < 1e-9);

        let no_expand = build_requests_for_infographic(&layout, &FitTransform::IDENTITY, &urls, None, "p", &BuildOptions::default())
            .unwrap();
        assert_eq!(no_expand.requests[1].geometry().unwrap().w, 100.0);
    }

    #[test]
    fn sanitized_collision_is_error() {
        let layout = Layout::new(
            100,
            100,
            vec![
                Region::text("a b", 1, PixelBox::new(0.0, 0.0, 5.0, 5.0), "x"),
                Region::text("a_b", 2, PixelBox::new(10.0, 0.0, 5.0, 5.0), "y"),
            ],
        );
        let err = build_requests_for_infographic(&layout, &FitTransform::IDENTITY, &BTreeMap::new(), None, "p", &BuildOptions::default())
            .unwrap_err();
        assert_eq!(err, BuildError::DuplicateObjectId("TXT_a_b".into()));
    }

    #[test]
    fn invalid_page_id() {
        let options = BuildOptions {
            page_id: "bad".into(),
            ..BuildOptions::default()
        };
        let err = build_requests_for_infographic(&Layout::new(1, 1, vec![]), &FitTransform::IDENTITY, &BTreeMap::new(), None, "p", &options)
            .unwrap_err();
        assert!(matches!(err, BuildError::InvalidPageId(_)));
    }
}
