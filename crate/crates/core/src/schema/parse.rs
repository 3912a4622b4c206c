use std::collections::HashSet;

use serde_json::{Map, Value};
use tracing::warn;

use super::{ImageSize, Layout, PixelBox, Region, RegionKind, StyleHints, ValidationError};
use super::text::normalize_text;

const TOP_LEVEL_KEYS: &[&str] = &["image_px", "regions"];
/// Keys other stages read from the same document; accepted without a warning.
const AUXILIARY_KEYS: &[&str] = &["background_sample"];
const REGION_KEYS: &[&str] = &[
    "id",
    "order",
    "type",
    "bbox_px",
    "text",
    "style",
    "crop_from_infographic",
    "confidence",
    "notes",
];
const STYLE_KEYS: &[&str] = &["font_family", "font_size_pt", "bold"];

/// Parse and strictly validate a region file.
///
/// On failure every detected violation is returned, in document order.
pub fn parse_layout(json_text: &str) -> Result<Layout, Vec<ValidationError>> {
    let value: Value = serde_json::from_str(json_text).map_err(|e| {
        vec![ValidationError::new(
            None,
            "json",
            format!("response is not valid JSON ({e}); output a single JSON object only"),
        )]
    })?;
    parse_layout_value(&value)
}

pub fn parse_layout_value(value: &Value) -> Result<Layout, Vec<ValidationError>> {
    let mut errors = Vec::new();
    let Some(root) = value.as_object() else {
        return Err(vec![ValidationError::new(
            None,
            "json",
            "top level must be a JSON object with `image_px` and `regions`",
        )]);
    };
    warn_unknown(root, TOP_LEVEL_KEYS, AUXILIARY_KEYS, None);

    let image = parse_image_px(root.get("image_px"), &mut errors);
    let regions = match root.get("regions") {
        Some(Value::Array(items)) => items
            .iter()
            .enumerate()
            .filter_map(|(i, item)| parse_region(i, item, &mut errors))
            .collect::<Vec<_>>(),
        Some(_) => {
            errors.push(ValidationError::new(None, "regions", "must be an array of region objects"));
            Vec::new()
        }
        None => {
            errors.push(ValidationError::new(None, "regions", "required field is missing"));
            Vec::new()
        }
    };

    let mut seen = HashSet::new();
    for region in &regions {
        if !seen.insert(region.id.as_str()) {
            errors.push(ValidationError::new(
                Some(&region.id),
                "id",
                "must be unique within the layout; duplicate id",
            ));
        }
    }

    match image {
        Some(image) if errors.is_empty() => Ok(Layout { image, regions }),
        _ => Err(errors),
    }
}

fn warn_unknown(obj: &Map<String, Value>, known: &[&str], quiet: &[&str], region: Option<&str>) {
    for key in obj.keys() {
        if !known.contains(&key.as_str()) && !quiet.contains(&key.as_str()) {
            warn!(region = region.unwrap_or("<root>"), key = %key, "ignoring unknown field");
        }
    }
}

fn parse_image_px(value: Option<&Value>, errors: &mut Vec<ValidationError>) -> Option<ImageSize> {
    let Some(value) = value else {
        errors.push(ValidationError::new(None, "image_px", "required field is missing"));
        return None;
    };
    let Some(obj) = value.as_object() else {
        errors.push(ValidationError::new(None, "image_px", "must be an object with integer `width` and `height`"));
        return None;
    };
    let width = positive_dimension(obj.get("width"), "image_px.width", errors);
    let height = positive_dimension(obj.get("height"), "image_px.height", errors);
    Some(ImageSize { width: width?, height: height? })
}

fn positive_dimension(value: Option<&Value>, field: &str, errors: &mut Vec<ValidationError>) -> Option<u32> {
    match value.and_then(as_integer) {
        Some(v) if v > 0 && v <= u32::MAX as i64 => Some(v as u32),
        Some(_) => {
            errors.push(ValidationError::new(None, field, "must be a positive integer pixel count"));
            None
        }
        None if value.is_none() => {
            errors.push(ValidationError::new(None, field, "required field is missing"));
            None
        }
        None => {
            errors.push(ValidationError::new(None, field, "must be a positive integer pixel count"));
            None
        }
    }
}

/// Integers, or floats with no fractional part.
fn as_integer(value: &Value) -> Option<i64> {
    if let Some(i) = value.as_i64() {
        return Some(i);
    }
    let f = value.as_f64()?;
    (f.fract() == 0.0 && f.abs() < 9.0e15).then_some(f as i64)
}

fn parse_region(
    index: usize,
    value: &Value,
    errors: &mut Vec<ValidationError>,
) -> Option<Region> {
    let before = errors.len();
    let Some(obj) = value.as_object() else {
        errors.push(ValidationError::new(None, format!("regions[{index}]"), "must be a region object"));
        return None;
    };

    let id = match obj.get("id") {
        Some(Value::String(s)) if !s.trim().is_empty() => Some(s.clone()),
        Some(Value::String(_)) => {
            errors.push(ValidationError::new(None, format!("regions[{index}].id"), "must be a non-empty string"));
            None
        }
        Some(_) => {
            errors.push(ValidationError::new(None, format!("regions[{index}].id"), "must be a string"));
            None
        }
        None => {
            errors.push(ValidationError::new(None, format!("regions[{index}].id"), "required field is missing"));
            None
        }
    };
    let label = id.clone().unwrap_or_else(|| format!("regions[{index}]"));
    let rid = Some(label.as_str());
    warn_unknown(obj, REGION_KEYS, &[], rid);

    let order = match obj.get("order") {
        None | Some(Value::Null) => {
            errors.push(ValidationError::new(rid, "order", "required field is missing; give an integer reading order"));
            None
        }
        Some(v) => match as_integer(v) {
            Some(o) => Some(o),
            None => {
                errors.push(ValidationError::new(rid, "order", "must be an integer"));
                None
            }
        },
    };

    let kind = match obj.get("type") {
        Some(Value::String(s)) if s == "text" => Some(RegionKind::Text),
        Some(Value::String(s)) if s == "image" => Some(RegionKind::Image),
        Some(Value::String(s)) => {
            errors.push(ValidationError::new(rid, "type", format!("unknown type {s:?}; must be one of \"text\", \"image\"")));
            None
        }
        Some(_) => {
            errors.push(ValidationError::new(rid, "type", "must be one of \"text\", \"image\""));
            None
        }
        None => {
            errors.push(ValidationError::new(rid, "type", "required field is missing"));
            None
        }
    };

    let bbox = parse_bbox(obj.get("bbox_px"), rid, errors);

    let text = match obj.get("text") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => {
            errors.push(ValidationError::new(rid, "text", "must be a string or null"));
            None
        }
    };
    match (kind, &text) {
        (Some(RegionKind::Text), None) => {
            if !matches!(obj.get("text"), Some(v) if !v.is_null() && !v.is_string()) {
                errors.push(ValidationError::new(rid, "text", "required for text regions; must be a non-empty string"));
            }
        }
        (Some(RegionKind::Text), Some(t)) if normalize_text(t).is_empty() => {
            errors.push(ValidationError::new(rid, "text", "must be non-empty after whitespace normalization"));
        }
        (Some(RegionKind::Image), Some(_)) => {
            errors.push(ValidationError::new(rid, "text", "must be null for image regions"));
        }
        _ => {}
    }

    let style = parse_style(obj.get("style"), rid, errors);

    let crop_from_infographic = match obj.get("crop_from_infographic") {
        None | Some(Value::Null) => false,
        Some(Value::Bool(b)) => *b,
        Some(_) => {
            errors.push(ValidationError::new(rid, "crop_from_infographic", "must be a boolean"));
            false
        }
    };

    let confidence = match obj.get("confidence") {
        None | Some(Value::Null) => None,
        Some(v) => match v.as_f64() {
            Some(c) if (0.0..=1.0).contains(&c) => Some(c),
            _ => {
                errors.push(ValidationError::new(rid, "confidence", "must be a number in [0, 1]"));
                None
            }
        },
    };

    let notes = match obj.get("notes") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => {
            errors.push(ValidationError::new(rid, "notes", "must be a string or null"));
            None
        }
    };

    if errors.len() > before {
        return None;
    }
    Some(Region {
        id: id?,
        order,
        kind: kind?,
        bbox: bbox?,
        text,
        style,
        crop_from_infographic,
        confidence,
        notes,
    })
}

fn parse_bbox(
    value: Option<&Value>,
    rid: Option<&str>,
    errors: &mut Vec<ValidationError>,
) -> Option<PixelBox> {
    let Some(value) = value else {
        errors.push(ValidationError::new(rid, "bbox_px", "required field is missing"));
        return None;
    };
    let Some(obj) = value.as_object() else {
        errors.push(ValidationError::new(rid, "bbox_px", "must be an object with numeric x, y, w, h"));
        return None;
    };
    let mut coord = |name: &str| -> Option<f64> {
        match obj.get(name).and_then(Value::as_f64) {
            Some(v) if v.is_finite() => Some(v),
            _ => {
                errors.push(ValidationError::new(rid, format!("bbox_px.{name}"), "required number is missing or not a number"));
                None
            }
        }
    };
    let (x, y, w, h) = (coord("x"), coord("y"), coord("w"), coord("h"));
    let (x, y, w, h) = (x?, y?, w?, h?);
    let mut ok = true;
    if w <= 0.0 {
        errors.push(ValidationError::new(rid, "bbox_px.w", "must be greater than 0"));
        ok = false;
    }
    if h <= 0.0 {
        errors.push(ValidationError::new(rid, "bbox_px.h", "must be greater than 0"));
        ok = false;
    }
    ok.then_some(PixelBox::new(x, y, w, h))
}

fn parse_style(value: Option<&Value>, rid: Option<&str>, errors: &mut Vec<ValidationError>) -> Option<StyleHints> {
    let obj = match value {
        None | Some(Value::Null) => return None,
        Some(Value::Object(obj)) => obj,
        Some(_) => {
            errors.push(ValidationError::new(rid, "style", "must be an object or null"));
            return None;
        }
    };
    warn_unknown(obj, STYLE_KEYS, &[], rid);
    let font_family = match obj.get("font_family") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) if !s.trim().is_empty() => Some(s.trim().to_owned()),
        Some(_) => {
            errors.push(ValidationError::new(rid, "style.font_family", "must be a non-empty string or null"));
            None
        }
    };
    let font_size_pt = match obj.get("font_size_pt") {
        None | Some(Value::Null) => None,
        Some(v) => match v.as_f64() {
            Some(s) if s > 0.0 && s.is_finite() => Some(s),
            _ => {
                errors.push(ValidationError::new(rid, "style.font_size_pt", "must be a number greater than 0"));
                None
            }
        },
    };
    let bold = match obj.get("bold") {
        None | Some(Value::Null) => None,
        Some(Value::Bool(b)) => Some(*b),
        Some(_) => {
            errors.push(ValidationError::new(rid, "style.bold", "must be a boolean or null"));
            None
        }
    };
    Some(StyleHints { font_family, font_size_pt, bold })
}
