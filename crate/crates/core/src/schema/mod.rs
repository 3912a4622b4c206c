//! Region file types: the typed layout an extraction backend produces.
//!
//! The JSON wire format is the top-level `image_px` / `regions` document.
//! [`parse_layout`] is strict and reports every violation it finds;
//! [`postprocess_layout`] is repairing and never fails.

mod feedback;
mod parse;
mod postprocess;
mod text;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use feedback::error_feedback;
pub use parse::{parse_layout, parse_layout_value};
pub use postprocess::{postprocess_layout, MIN_REGION_SIZE_PX, ROW_BAND_PX};
pub use text::normalize_text;

/// Axis-aligned box in image pixel space, top-left origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl PixelBox {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn area(&self) -> f64 {
        self.w.max(0.0) * self.h.max(0.0)
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self::new(self.x + dx, self.y + dy, self.w, self.h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionKind {
    Text,
    Image,
}

impl RegionKind {
    pub const ALL: [RegionKind; 2] = [RegionKind::Text, RegionKind::Image];

    pub fn as_str(&self) -> &'static str {
        match self {
            RegionKind::Text => "text",
            RegionKind::Image => "image",
        }
    }
}

impl fmt::Display for RegionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Optional typography hints. Absent fields fall back to builder defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StyleHints {
    pub font_family: Option<String>,
    pub font_size_pt: Option<f64>,
    pub bold: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub id: String,
    /// Reading-order hint. `None` only for layouts built in code; parsed
    /// layouts always carry one.
    pub order: Option<i64>,
    #[serde(rename = "type")]
    pub kind: RegionKind,
    #[serde(rename = "bbox_px")]
    pub bbox: PixelBox,
    pub text: Option<String>,
    pub style: Option<StyleHints>,
    #[serde(default)]
    pub crop_from_infographic: bool,
    pub confidence: Option<f64>,
    pub notes: Option<String>,
}

impl Region {
    pub fn text(id: impl Into<String>, order: i64, bbox: PixelBox, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            order: Some(order),
            kind: RegionKind::Text,
            bbox,
            text: Some(text.into()),
            style: None,
            crop_from_infographic: false,
            confidence: None,
            notes: None,
        }
    }

    pub fn image(id: impl Into<String>, order: i64, bbox: PixelBox) -> Self {
        Self {
            id: id.into(),
            order: Some(order),
            kind: RegionKind::Image,
            bbox,
            text: None,
            style: None,
            crop_from_infographic: true,
            confidence: None,
            notes: None,
        }
    }

    pub fn with_style(mut self, style: StyleHints) -> Self {
        self.style = Some(style);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageSize {
    pub width: u32,
    pub height: u32,
}

/// A validated region file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    #[serde(rename = "image_px")]
    pub image: ImageSize,
    pub regions: Vec<Region>,
}

impl Layout {
    pub fn new(width: u32, height: u32, regions: Vec<Region>) -> Self {
        Self {
            image: ImageSize { width, height },
            regions,
        }
    }

    pub fn image_width(&self) -> u32 {
        self.image.width
    }

    pub fn image_height(&self) -> u32 {
        self.image.height
    }

    pub fn region(&self, id: &str) -> Option<&Region> {
        self.regions.iter().find(|r| r.id == id)
    }

    pub fn count(&self, kind: RegionKind) -> usize {
        self.regions.iter().filter(|r| r.kind == kind).count()
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("layout serializes")
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("layout serializes")
    }
}

/// One schema violation found while parsing a region file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationError {
    pub region_id: Option<String>,
    pub field: String,
    pub message: String,
}

impl ValidationError {
    pub fn new(region_id: Option<&str>, field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            region_id: region_id.map(str::to_owned),
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.region_id {
            Some(id) => write!(f, "region `{}`: field `{}`: {}", id, self.field, self.message),
            None => write!(f, "field `{}`: {}", self.field, self.message),
        }
    }
}

impl std::error::Error for ValidationError {}
