use std::fmt::Write;

use super::ValidationError;

/// Render validation errors as a correction note to append to a retry prompt.
pub fn error_feedback(errors: &[ValidationError]) -> String {
    let mut out = String::from(
        "Your previous response did not satisfy the region schema. Fix every problem below and \
         reply again with the complete JSON object only (no Markdown, no commentary).\n\nProblems:\n",
    );
    for (i, err) in errors.iter().enumerate() {
        let location = match &err.region_id {
            Some(id) => format!("region \"{id}\", field `{}`", err.field),
            None => format!("field `{}`", err.field),
        };
        let _ = writeln!(out, "{}. {location}: {} (expected: {})", i + 1, err.message, expected_rule(&err.field));
    }
    out.push_str(
        "\nExpected schema: {\"image_px\": {\"width\": int, \"height\": int}, \"regions\": [{\"id\": str, \
         \"order\": int, \"type\": \"text\"|\"image\", \"bbox_px\": {\"x\": num, \"y\": num, \"w\": num, \"h\": num}, \
         \"text\": str|null, \"style\": {\"font_family\": str, \"font_size_pt\": num, \"bold\": bool}|null, \
         \"crop_from_infographic\": bool, \"confidence\": num|null, \"notes\": str|null}]}\n",
    );
    out
}

fn expected_rule(field: &str) -> &'static str {
    let leaf = field.rsplit(['.', ']']).next().unwrap_or(field);
    match leaf {
        "json" => "a single well-formed JSON object",
        "image_px" | "width" | "height" => "`image_px` holds the exact image width and height as positive integers",
        "regions" => "`regions` is an array of region objects",
        "id" => "`id` is a non-empty string, unique across regions",
        "order" => "`order` is an integer reading-order position",
        "type" => "`type` is \"text\" or \"image\"",
        "bbox_px" | "x" | "y" | "w" | "h" => "`bbox_px` is {x, y, w, h} in pixels with w > 0 and h > 0, inside the image",
        "text" => "`text` is the visible text, non-empty after whitespace normalization, for text regions; null for image regions",
        "style" | "font_family" | "font_size_pt" | "bold" => {
            "`style` is null or {font_family: string, font_size_pt: number > 0, bold: boolean}"
        }
        "crop_from_infographic" => "`crop_from_infographic` is a boolean",
        "confidence" => "`confidence` is a number in [0, 1] or null",
        "notes" => "`notes` is a string or null",
        _ => "see the schema below",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn items(text: &str) -> Vec<&str> {
        text.lines()
            .filter(|l| l.split_once(". ").is_some_and(|(n, _)| n.parse::<usize>().is_ok()))
            .collect()
    }

    #[test]
    fn names_region_field_and_rule() {
        let err = ValidationError::new(Some("title"), "text", "must be non-empty after whitespace normalization");
        let text = error_feedback(&[err]);
        assert!(text.contains("title"));
        assert!(text.contains("`text`"));
        assert!(text.contains("non-empty after whitespace normalization"));
        assert_eq!(items(&text).len(), 1);
    }

    #[test]
    fn enumerates_in_input_order() {
        let errors = vec![
            ValidationError::new(Some("a"), "type", "unknown type"),
            ValidationError::new(Some("b"), "bbox_px.w", "must be greater than 0"),
            ValidationError::new(Some("c"), "order", "required field is missing"),
        ];
        let text = error_feedback(&errors);
        let lines = items(&text);
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("1. region \"a\""));
        assert!(lines[1].starts_with("2. region \"b\""));
        assert!(lines[2].starts_with("3. region \"c\""));
        assert!(lines[1].contains("w > 0"));
    }

    #[test]
    fn indexed_fields_resolve_rule() {
        assert!(expected_rule("regions[3].id").contains("unique"));
        assert!(expected_rule("image_px.width").contains("width"));
    }
}
