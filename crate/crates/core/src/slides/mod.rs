//! Slide construction requests.
//!
//! A [`RequestBatch`] is an ordered list of requests in the shape of a
//! presentation service `batchUpdate` body. Building is pure and
//! deterministic; [`execute_batch`] sends it to a [`PresentationService`].

mod build;
mod execute;
mod ids;

use serde_json::{json, Value};

use crate::geometry::PointRect;

pub use build::{build_requests_for_infographic, BuildError, BuildOptions, DEFAULT_FONT_FAMILY, DEFAULT_FONT_SIZE_PT};
pub use execute::{
    execute_batch, ExecuteError, ExecuteOptions, ExecutionReport, FileSinkService, GoogleSlidesService,
    MockPresentationService, PresentationService, ServiceError, SLIDES_TOKEN_ENV,
};
pub use ids::{object_id_for, ObjectId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RequestKind {
    CreateSlide,
    CreateTextBox,
    InsertText,
    UpdateTextStyle,
    CreateImage,
    DeleteObject,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextStyle {
    pub font_family: String,
    pub font_size_pt: f64,
    pub bold: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SlideRequest {
    CreateSlide {
        object_id: ObjectId,
    },
    CreateTextBox {
        object_id: ObjectId,
        page_id: ObjectId,
        geometry: PointRect,
    },
    InsertText {
        object_id: ObjectId,
        text: String,
    },
    UpdateTextStyle {
        object_id: ObjectId,
        style: TextStyle,
    },
    CreateImage {
        object_id: ObjectId,
        page_id: ObjectId,
        geometry: PointRect,
        url: String,
    },
    /// Only issued by the executor when replacing existing objects.
    DeleteObject {
        object_id: ObjectId,
    },
}

impl SlideRequest {
    pub fn kind(&self) -> RequestKind {
        match self {
            SlideRequest::CreateSlide { .. } => RequestKind::CreateSlide,
            SlideRequest::CreateTextBox { .. } => RequestKind::CreateTextBox,
            SlideRequest::InsertText { .. } => RequestKind::InsertText,
            SlideRequest::UpdateTextStyle { .. } => RequestKind::UpdateTextStyle,
            SlideRequest::CreateImage { .. } => RequestKind::CreateImage,
            SlideRequest::DeleteObject { .. } => RequestKind::DeleteObject,
        }
    }

    pub fn object_id(&self) -> &ObjectId {
        match self {
            SlideRequest::CreateSlide { object_id }
            | SlideRequest::CreateTextBox { object_id, .. }
            | SlideRequest::InsertText { object_id, .. }
            | SlideRequest::UpdateTextStyle { object_id, .. }
            | SlideRequest::CreateImage { object_id, .. }
            | SlideRequest::DeleteObject { object_id } => object_id,
        }
    }

    pub fn geometry(&self) -> Option<&PointRect> {
        match self {
            SlideRequest::CreateTextBox { geometry, .. } | SlideRequest::CreateImage { geometry, .. } => Some(geometry),
            _ => None,
        }
    }

    /// Whether this request brings a new object into existence.
    pub fn creates(&self) -> bool {
        matches!(
            self.kind(),
            RequestKind::CreateSlide | RequestKind::CreateTextBox | RequestKind::CreateImage
        )
    }

    /// The request as a `batchUpdate` entry. Lengths are in points rounded
    /// to two decimals.
    pub fn to_json(&self) -> Value {
        match self {
            SlideRequest::CreateSlide { object_id } => json!({
                "createSlide": {
                    "objectId": object_id.as_str(),
                    "slideLayoutReference": { "predefinedLayout": "BLANK" }
                }
            }),
            SlideRequest::CreateTextBox { object_id, page_id, geometry } => json!({
                "createShape": {
                    "objectId": object_id.as_str(),
                    "shapeType": "TEXT_BOX",
                    "elementProperties": element_properties(page_id, geometry)
                }
            }),
            SlideRequest::InsertText { object_id, text } => json!({
                "insertText": {
                    "objectId": object_id.as_str(),
                    "insertionIndex": 0,
                    "text": text
                }
            }),
            SlideRequest::UpdateTextStyle { object_id, style } => json!({
                "updateTextStyle": {
                    "objectId": object_id.as_str(),
                    "textRange": { "type": "ALL" },
                    "style": {
                        "fontFamily": style.font_family,
                        "fontSize": { "magnitude": round_pt(style.font_size_pt), "unit": "PT" },
                        "bold": style.bold
                    },
                    "fields": "fontFamily,fontSize,bold"
                }
            }),
            SlideRequest::CreateImage { object_id, page_id, geometry, url } => json!({
                "createImage": {
                    "objectId": object_id.as_str(),
                    "url": url,
                    "elementProperties": element_properties(page_id, geometry)
                }
            }),
            SlideRequest::DeleteObject { object_id } => json!({
                "deleteObject": { "objectId": object_id.as_str() }
            }),
        }
    }
}

fn element_properties(page_id: &ObjectId, g: &PointRect) -> Value {
    json!({
        "pageObjectId": page_id.as_str(),
        "size": {
            "width": { "magnitude": round_pt(g.w), "unit": "PT" },
            "height": { "magnitude": round_pt(g.h), "unit": "PT" }
        },
        "transform": {
            "scaleX": 1.0,
            "scaleY": 1.0,
            "shearX": 0.0,
            "shearY": 0.0,
            "translateX": round_pt(g.x),
            "translateY": round_pt(g.y),
            "unit": "PT"
        }
    })
}

/// Two-decimal rounding; never yields negative zero.
pub fn round_pt(v: f64) -> f64 {
    let r = (v * 100.0).round() / 100.0;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RequestBatch {
    pub presentation_id: String,
    pub page_id: ObjectId,
    pub requests: Vec<SlideRequest>,
}

impl RequestBatch {
    pub fn to_json(&self) -> Value {
        json!({ "requests": self.requests.iter().map(SlideRequest::to_json).collect::<Vec<_>>() })
    }

    /// Pretty-printed `batchUpdate` body with a trailing newline.
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("batch serializes");
        s.push('\n');
        s
    }

    /// Ids of the objects this batch creates, in request order.
    pub fn created_ids(&self) -> Vec<ObjectId> {
        self.requests
            .iter()
            .filter(|r| r.creates())
            .map(|r| r.object_id().clone())
            .collect()
    }
}
