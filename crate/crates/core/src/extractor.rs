//! Layout extraction from a vision-language backend: strict-JSON prompting,
//! validation with corrective retries, and an on-disk artifact cache.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use base64::Engine as _;
use serde_json::{json, Value};
use thiserror::Error;
use tracing::{info, warn};

use crate::assets::{decode_image, encode_png, render_overlay, AssetError, BackgroundSample};
use crate::digest::sha256_hex;
use crate::fsutil::write_atomic;
use crate::schema::{error_feedback, parse_layout_value, postprocess_layout, Layout, ValidationError};

pub const BACKEND_URL_ENV: &str = "I2S_BACKEND_URL";
pub const BACKEND_API_KEY_ENV: &str = "I2S_BACKEND_API_KEY";
pub const MODEL_ID_ENV: &str = "I2S_MODEL_ID";
pub const DEFAULT_MAX_RETRIES: u32 = 2;

/// The instruction sent with every image.
pub fn build_prompt(width: u32, height: u32, want_background: bool) -> String {
    let mut p = format!(
        "You are given an infographic image that is exactly {width} pixels wide and {height} pixels tall.\n\
         Describe its layout as a region file.\n\n\
         Rules:\n\
         - Output JSON only: a single JSON object, with no Markdown, no code fences and no commentary.\n\
         - Set \"image_px\" to {{\"width\": {width}, \"height\": {height}}}.\n\
         - Every region's \"bbox_px\" {{x, y, w, h}} is in pixels and lies within the image: \
         0 <= x, 0 <= y, x + w <= {width}, y + h <= {height}, with w > 0 and h > 0.\n\
         - Give each region a stable, descriptive \"id\" that is unique in the file.\n\
         - Set \"order\" to the region's position in natural reading order, starting at 1.\n\
         - \"type\" is \"text\" for text blocks and \"image\" for pictures, icons, charts and logos.\n\
         - For text regions, \"text\" is the exact visible text. Transcribe only what is visible; \
         avoid inferring or fabricating text that is not visible. For image regions, \"text\" is null.\n\
         - \"style\" gives font_family, font_size_pt and bold for text regions when they can be estimated, \
         otherwise null.\n\
         - \"crop_from_infographic\" is true for image regions that should be cropped from the source.\n\
         - \"confidence\" is a number from 0 to 1 or null; \"notes\" may hold tags or remarks, or null.\n\n\
         Schema: {{\"image_px\": {{\"width\": int, \"height\": int}}, \"regions\": [{{\"id\": str, \"order\": int, \
         \"type\": \"text\"|\"image\", \"bbox_px\": {{\"x\": num, \"y\": num, \"w\": num, \"h\": num}}, \
         \"text\": str|null, \"style\": {{\"font_family\": str, \"font_size_pt\": num, \"bold\": bool}}|null, \
         \"crop_from_infographic\": bool, \"confidence\": num|null, \"notes\": str|null}}]}}\n"
    );
    if want_background {
        p.push_str(
            "\nAlso include a top-level \"background_sample\" object {\"bbox_px\": {x, y, w, h}, \"mode\": \"solid\"|\"tile\"} \
             marking an area that shows only clean background with no text or images. Use \"solid\" when the \
             background is a flat color and \"tile\" when it is a repeating texture or pattern.\n",
        );
    }
    p
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("backend transport error: {0}")]
    Transport(String),
    #[error("backend returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("backend response was truncated before completion")]
    Truncated,
    #[error("unexpected backend response: {0}")]
    Malformed(String),
    #[error("fixture backend: {0}")]
    Fixture(String),
}

/// A vision-language model: image plus prompt in, text out.
pub trait Backend {
    fn complete(&self, image_png: &[u8], prompt: &str, model_id: &str) -> Result<String, BackendError>;
}

/// Replays numbered reply files (`1.json`, `2.json`, ...) in order; the last
/// one repeats once the others are used up.
pub struct FixtureBackend {
    replies: Vec<String>,
    calls: AtomicUsize,
    prompts: Mutex<Vec<String>>,
}

impl FixtureBackend {
    pub fn new(replies: Vec<String>) -> Self {
        Self { replies, calls: AtomicUsize::new(0), prompts: Mutex::new(Vec::new()) }
    }

    pub fn from_dir(dir: &Path) -> Result<Self, BackendError> {
        let entries = fs::read_dir(dir).map_err(|e| BackendError::Fixture(format!("{}: {e}", dir.display())))?;
        let mut numbered = Vec::new();
        for entry in entries {
            let path = entry.map_err(|e| BackendError::Fixture(e.to_string()))?.path();
            let n = path.file_stem().and_then(|s| s.to_str()).and_then(|s| s.parse::<u32>().ok());
            if let (Some(n), true) = (n, path.is_file()) {
                numbered.push((n, path));
            }
        }
        numbered.sort();
        if numbered.is_empty() {
            return Err(BackendError::Fixture(format!("no numbered reply files in {}", dir.display())));
        }
        let replies = numbered
            .into_iter()
            .map(|(_, p)| fs::read_to_string(&p).map_err(|e| BackendError::Fixture(format!("{}: {e}", p.display()))))
            .collect::<Result<_, _>>()?;
        Ok(Self::new(replies))
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    /// Prompts received so far.
    pub fn prompts(&self) -> Vec<String> {
        self.prompts.lock().expect("prompt log poisoned").clone()
    }
}

impl Backend for FixtureBackend {
    fn complete(&self, _image_png: &[u8], prompt: &str, _model_id: &str) -> Result<String, BackendError> {
        let n = self.calls.fetch_add(1, Ordering::SeqCst);
        self.prompts.lock().expect("prompt log poisoned").push(prompt.to_owned());
        self.replies
            .get(n)
            .or(self.replies.last())
            .cloned()
            .ok_or_else(|| BackendError::Fixture("no replies".to_owned()))
    }
}

/// OpenAI-compatible chat-completions endpoint with an inline image.
pub struct HttpBackend {
    url: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(url: impl Into<String>, api_key: Option<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(600)))
            .build()
            .into();
        Self { url: url.into(), api_key, agent }
    }

    /// Endpoint from `I2S_BACKEND_URL`, key from `I2S_BACKEND_API_KEY`.
    pub fn from_env() -> Option<Self> {
        let url = std::env::var(BACKEND_URL_ENV).ok().filter(|u| !u.is_empty())?;
        Some(Self::new(url, std::env::var(BACKEND_API_KEY_ENV).ok().filter(|k| !k.is_empty())))
    }
}

impl Backend for HttpBackend {
    fn complete(&self, image_png: &[u8], prompt: &str, model_id: &str) -> Result<String, BackendError> {
        let data_url = format!("data:image/png;base64,{}", base64::engine::general_purpose::STANDARD.encode(image_png));
        let body = json!({
            "model": model_id,
            "temperature": 0,
            "messages": [{
                "role": "user",
                "content": [
                    { "type": "text", "text": prompt },
                    { "type": "image_url", "image_url": { "url": data_url } },
                ],
            }],
        });
        let mut req = self.agent.post(&self.url).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send(serde_json::to_vec(&body).expect("request body serializes"))
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .with_config()
            .limit(64 * 1024 * 1024)
            .read_to_string()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        if status >= 400 {
            return Err(BackendError::Status { status, body: text });
        }
        let v: Value = serde_json::from_str(&text).map_err(|e| BackendError::Malformed(e.to_string()))?;
        let choice = &v["choices"][0];
        if choice["finish_reason"].as_str() == Some("length") {
            return Err(BackendError::Truncated);
        }
        choice["message"]["content"]
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| BackendError::Malformed("no choices[0].message.content".to_owned()))
    }
}

/// Drop a Markdown code fence wrapped around the reply, if any.
pub fn strip_code_fences(reply: &str) -> &str {
    let t = reply.trim();
    let Some(rest) = t.strip_prefix("```") else { return t };
    let body = match rest.find('\n') {
        Some(i) => &rest[i + 1..],
        None => rest,
    };
    body.trim_end().strip_suffix("```").unwrap_or(body).trim()
}

#[derive(Debug, Clone)]
pub struct ExtractRequest {
    /// PNG bytes of the source image.
    pub image_png: Vec<u8>,
    pub width: u32,
    pub height: u32,
    pub model_id: String,
    pub max_retries: u32,
    pub want_background: bool,
}

impl ExtractRequest {
    /// Reads the dimensions from the image itself.
    pub fn new(image_png: Vec<u8>, model_id: impl Into<String>) -> Result<Self, AssetError> {
        let img = decode_image(&image_png)?;
        Ok(Self {
            width: img.width(),
            height: img.height(),
            image_png,
            model_id: model_id.into(),
            max_retries: DEFAULT_MAX_RETRIES,
            want_background: false,
        })
    }

    pub fn prompt(&self) -> String {
        build_prompt(self.width, self.height, self.want_background)
    }
}

#[derive(Debug, Clone)]
pub struct ExtractionResult {
    pub raw_json: String,
    pub layout: Layout,
    pub background: Option<BackgroundSample>,
    /// Backend calls made; 0 when served from cache.
    pub attempts: u32,
    pub elapsed: Duration,
    pub from_cache: bool,
}

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("no valid layout after {attempts} attempts; last errors: {}", summarize(.errors))]
    RetriesExhausted { attempts: u32, errors: Vec<ValidationError> },
    #[error(transparent)]
    Asset(#[from] AssetError),
    #[error("extraction cache at {path}: {source}")]
    Cache {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn summarize(errors: &[ValidationError]) -> String {
    errors.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Per-image, per-model artifacts: `<cache>/extract/<digest>/<model>/`.
#[derive(Debug, Clone)]
pub struct ExtractCache {
    root: PathBuf,
}

pub const RAW_FILE: &str = "raw.json";
pub const VALIDATED_FILE: &str = "validated.json";
pub const OVERLAY_FILE: &str = "overlay.png";

impl ExtractCache {
    pub fn new(cache_dir: &Path) -> Self {
        Self { root: cache_dir.join("extract") }
    }

    pub fn entry_dir(&self, image_png: &[u8], model_id: &str) -> PathBuf {
        let model: String = model_id
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
            .collect();
        self.root.join(sha256_hex(image_png)).join(model)
    }

    fn load(&self, req: &ExtractRequest) -> Option<(String, Layout, Option<BackgroundSample>)> {
        let dir = self.entry_dir(&req.image_png, &req.model_id);
        let raw = fs::read_to_string(dir.join(RAW_FILE)).ok()?;
        let validated: Value = serde_json::from_str(&fs::read_to_string(dir.join(VALIDATED_FILE)).ok()?).ok()?;
        if !dir.join(OVERLAY_FILE).is_file() {
            return None;
        }
        let background = validated.get("background_sample").and_then(|b| serde_json::from_value(b.clone()).ok());
        if req.want_background && background.is_none() {
            return None;
        }
        let layout = parse_layout_value(&validated).ok()?;
        Some((raw, layout, background))
    }

    fn store(
        &self,
        req: &ExtractRequest,
        raw: &str,
        layout: &Layout,
        background: Option<&BackgroundSample>,
        overlay_png: &[u8],
    ) -> Result<(), ExtractError> {
        let dir = self.entry_dir(&req.image_png, &req.model_id);
        let mut validated = layout.to_json_value();
        if let Some(bg) = background {
            validated["background_sample"] = serde_json::to_value(bg).expect("background serializes");
        }
        let pretty = serde_json::to_string_pretty(&validated).expect("layout serializes") + "\n";
        for (name, bytes) in [(RAW_FILE, raw.as_bytes()), (VALIDATED_FILE, pretty.as_bytes()), (OVERLAY_FILE, overlay_png)] {
            let path = dir.join(name);
            write_atomic(&path, bytes).map_err(|source| ExtractError::Cache { path, source })?;
        }
        Ok(())
    }
}

/// Parse and validate one reply. Extra checks beyond the schema: the
/// declared image size must match the real one.
fn validate_reply(reply: &str, width: u32, height: u32) -> Result<(Layout, Option<Value>), Vec<ValidationError>> {
    let value: Value = serde_json::from_str(strip_code_fences(reply))
        .map_err(|e| vec![ValidationError::new(None, "json", format!("not valid JSON: {e}"))])?;
    let layout = parse_layout_value(&value)?;
    let mut errors = Vec::new();
    if layout.image.width != width {
        errors.push(ValidationError::new(
            None,
            "image_px.width",
            format!("is {} but the image is {width} pixels wide", layout.image.width),
        ));
    }
    if layout.image.height != height {
        errors.push(ValidationError::new(
            None,
            "image_px.height",
            format!("is {} but the image is {height} pixels tall", layout.image.height),
        ));
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    Ok((layout, value.get("background_sample").cloned()))
}

/// Ask the backend for a layout, retrying with error feedback until the
/// reply validates or `max_retries` extra attempts are used.
///
/// With a cache, a previous result for the same image and model is returned
/// without calling the backend, and a fresh result is written back.
pub fn extract_layout_from_image(
    req: &ExtractRequest,
    backend: &dyn Backend,
    cache: Option<&ExtractCache>,
) -> Result<ExtractionResult, ExtractError> {
    let start = Instant::now();
    if let Some((raw_json, layout, background)) = cache.and_then(|c| c.load(req)) {
        info!(model = %req.model_id, "extraction cache hit");
        return Ok(ExtractionResult { raw_json, layout, background, attempts: 0, elapsed: start.elapsed(), from_cache: true });
    }

    let base_prompt = req.prompt();
    let mut prompt = base_prompt.clone();
    let mut attempts = 0;
    loop {
        attempts += 1;
        let reply = backend.complete(&req.image_png, &prompt, &req.model_id)?;
        match validate_reply(&reply, req.width, req.height) {
            Ok((layout, bg_value)) => {
                let layout = postprocess_layout(layout);
                let background = match bg_value {
                    Some(v) if req.want_background => match serde_json::from_value::<BackgroundSample>(v) {
                        Ok(bg) => Some(bg),
                        Err(e) => {
                            warn!("ignoring unusable background_sample: {e}");
                            None
                        }
                    },
                    None if req.want_background => {
                        warn!("background_sample requested but missing; continuing without background");
                        None
                    }
                    _ => None,
                };
                let raw_json = strip_code_fences(&reply).to_owned();
                if let Some(cache) = cache {
                    let img = decode_image(&req.image_png)?;
                    let overlay = encode_png(&render_overlay(&img, &layout))?;
                    cache.store(req, &raw_json, &layout, background.as_ref(), &overlay)?;
                }
                return Ok(ExtractionResult {
                    raw_json,
                    layout,
                    background,
                    attempts,
                    elapsed: start.elapsed(),
                    from_cache: false,
                });
            }
            Err(errors) => {
                warn!(attempt = attempts, problems = errors.len(), "backend reply failed validation");
                if attempts > req.max_retries {
                    return Err(ExtractError::RetriesExhausted { attempts, errors });
                }
                prompt = format!("{base_prompt}\n{}", error_feedback(&errors));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testdata::LISTING_LAYOUT;
    use image::{Rgba, RgbaImage};

    fn png(w: u32, h: u32) -> Vec<u8> {
        encode_png(&RgbaImage::from_pixel(w, h, Rgba([250, 250, 250, 255]))).unwrap()
    }

    fn request() -> ExtractRequest {
        ExtractRequest::new(png(1600, 900), "test-model").unwrap()
    }

    #[test]
    fn prompt_contents() {
        let p = build_prompt(1600, 900, false);
        assert!(p.contains("1600") && p.contains("900"));
        assert!(p.contains("JSON only"));
        assert!(p.contains("fabricating text"));
        assert!(!p.contains("background_sample"));
        let bg = build_prompt(1600, 900, true);
        for word in ["background_sample", "solid", "tile"] {
            assert!(bg.contains(word));
        }
        assert!(build_prompt(1, 1, false).contains("exactly 1 pixels wide and 1 pixels tall"));
    }

    #[test]
    fn fences_stripped() {
        assert_eq!(strip_code_fences("```json\n{\"a\":1}\n```"), "{\"a\":1}");
        assert_eq!(strip_code_fences("```\n{}\n```\n"), "{}");
        assert_eq!(strip_code_fences("  {}  "), "{}");
    }

    #[test]
    fn first_try_success() {
        let backend = FixtureBackend::new(vec![LISTING_LAYOUT.to_owned()]);
        let r = extract_layout_from_image(&request(), &backend, None).unwrap();
        assert_eq!(r.attempts, 1);
        assert_eq!(r.layout.regions.len(), 2);
        assert_eq!(backend.calls(), 1);
    }

    #[test]
    fn retry_appends_feedback() {
        let backend = FixtureBackend::new(vec!["{not json".to_owned(), format!("```json\n{LISTING_LAYOUT}\n```")]);
        let r = extract_layout_from_image(&request(), &backend, None).unwrap();
        assert_eq!(r.attempts, 2);
        let prompts = backend.prompts();
        assert!(!prompts[0].contains("did not satisfy"));
        assert!(prompts[1].starts_with(&prompts[0]));
        assert!(prompts[1].contains("field `json`"));
    }

    #[test]
    fn retries_exhaust() {
        let backend = FixtureBackend::new(vec!["garbage".to_owned()]);
        let mut req = request();
        req.max_retries = 1;
        match extract_layout_from_image(&req, &backend, None) {
            Err(ExtractError::RetriesExhausted { attempts, .. }) => assert_eq!(attempts, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(backend.calls(), 2);
    }

    #[test]
    fn wrong_dimensions_rejected() {
        let backend = FixtureBackend::new(vec![LISTING_LAYOUT.to_owned()]);
        let mut req = ExtractRequest::new(png(800, 450), "m").unwrap();
        req.max_retries = 0;
        match extract_layout_from_image(&req, &backend, None) {
            Err(ExtractError::RetriesExhausted { errors, .. }) => {
                assert!(errors.iter().any(|e| e.field == "image_px.width"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cache_writes_three_artifacts_and_short_circuits() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ExtractCache::new(dir.path());
        let req = request();
        let backend = FixtureBackend::new(vec![LISTING_LAYOUT.to_owned()]);
        let first = extract_layout_from_image(&req, &backend, Some(&cache)).unwrap();
        let entry = cache.entry_dir(&req.image_png, &req.model_id);
        let mut names: Vec<_> = fs::read_dir(&entry).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        assert_eq!(names, [OVERLAY_FILE, RAW_FILE, VALIDATED_FILE]);

        let second = extract_layout_from_image(&req, &backend, Some(&cache)).unwrap();
        assert_eq!(backend.calls(), 1);
        assert!(second.from_cache);
        assert_eq!(second.layout, first.layout);
        assert_eq!(second.raw_json, first.raw_json);
    }

    #[test]
    fn background_sample_parsed_when_requested() {
        let mut v: Value = serde_json::from_str(LISTING_LAYOUT).unwrap();
        v["background_sample"] = json!({ "bbox_px": { "x": 0, "y": 850, "w": 100, "h": 50 }, "mode": "tile" });
        let backend = FixtureBackend::new(vec![v.to_string()]);
        let mut req = request();
        req.want_background = true;
        let r = extract_layout_from_image(&req, &backend, None).unwrap();
        assert_eq!(r.background.unwrap().mode, crate::assets::BackgroundMode::Tile);

        let plain = FixtureBackend::new(vec![LISTING_LAYOUT.to_owned()]);
        assert!(extract_layout_from_image(&req, &plain, None).unwrap().background.is_none());
    }

    #[test]
    fn fixture_dir_ordering() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("10.json"), "ten").unwrap();
        fs::write(dir.path().join("2.json"), "two").unwrap();
        fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        let b = FixtureBackend::from_dir(dir.path()).unwrap();
        let got: Vec<_> = (0..3).map(|_| b.complete(&[], "", "").unwrap()).collect();
        assert_eq!(got, ["two", "ten", "ten"]);
    }
}
