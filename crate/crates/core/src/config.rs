//! Pipeline settings: a flat JSON file, then command-line flags, then
//! environment variables, each overriding the one before.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assets::DEFAULT_PAD_PX;
use crate::extractor::{BACKEND_URL_ENV, DEFAULT_MAX_RETRIES, MODEL_ID_ENV};
use crate::geometry::{SlidePageSize, DEFAULT_GAP_PT, DEFAULT_MARGIN_PT};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid {field}: {message}")]
    Invalid { field: &'static str, message: String },
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, message: message.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub cache_dir: PathBuf,
    /// `WxH` in points.
    pub page_size: String,
    pub synthesize_background: bool,
    pub expand_widths: bool,
    pub merge_adjacent_text: bool,
    pub pad_px: u32,
    pub margin_pt: f64,
    pub gap_pt: f64,
    pub backend_url: Option<String>,
    pub model_id: String,
    pub max_retries: u32,
    /// Replay backend replies from this directory instead of calling a model.
    pub fixture_dir: Option<PathBuf>,
    /// HTTPS endpoint that accepts `PUT <endpoint>/<name>`; when unset, assets
    /// are copied into the cache and addressed under `local_asset_base_url`.
    pub upload_endpoint: Option<String>,
    pub upload_public_base: Option<String>,
    pub local_asset_base_url: String,
    pub match_iou_threshold: f64,
    pub presentation_id: Option<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            cache_dir: PathBuf::from(".i2s-cache"),
            page_size: "720x405".to_owned(),
            synthesize_background: false,
            expand_widths: false,
            merge_adjacent_text: false,
            pad_px: DEFAULT_PAD_PX,
            margin_pt: DEFAULT_MARGIN_PT,
            gap_pt: DEFAULT_GAP_PT,
            backend_url: None,
            model_id: "default".to_owned(),
            max_retries: DEFAULT_MAX_RETRIES,
            fixture_dir: None,
            upload_endpoint: None,
            upload_public_base: None,
            local_asset_base_url: "https://localhost:8443/assets".to_owned(),
            match_iou_threshold: 0.0,
            presentation_id: None,
        }
    }
}

/// Values given on the command line; `None` leaves the lower layer alone.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigOverrides {
    pub cache_dir: Option<PathBuf>,
    pub page_size: Option<String>,
    pub synthesize_background: Option<bool>,
    pub expand_widths: Option<bool>,
    pub merge_adjacent_text: Option<bool>,
    pub pad_px: Option<u32>,
    pub backend_url: Option<String>,
    pub model_id: Option<String>,
    pub fixture_dir: Option<PathBuf>,
    pub presentation_id: Option<String>,
}

pub fn parse_page_size(s: &str) -> Result<SlidePageSize, ConfigError> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| invalid("page_size", format!("{s:?} is not WxH")))?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|_| invalid("page_size", format!("{s:?} is not WxH")));
    SlidePageSize::new(parse(w)?, parse(h)?).map_err(|e| invalid("page_size", e.to_string()))
}

impl PipelineConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
        serde_json::from_str(&text).map_err(|source| ConfigError::Parse { path: path.to_owned(), source })
    }

    /// File (or defaults), then `flags`, then `env`; validated.
    pub fn resolve(
        file: Option<&Path>,
        flags: &ConfigOverrides,
        env: impl Fn(&str) -> Option<String>,
    ) -> Result<Self, ConfigError> {
        let mut cfg = match file {
            Some(path) => Self::from_file(path)?,
            None => Self::default(),
        };
        cfg.apply(flags);
        if let Some(url) = env(BACKEND_URL_ENV).filter(|v| !v.is_empty()) {
            cfg.backend_url = Some(url);
        }
        if let Some(model) = env(MODEL_ID_ENV).filter(|v| !v.is_empty()) {
            cfg.model_id = model;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &ConfigOverrides) {
        fn set<T: Clone>(dst: &mut T, src: &Option<T>) {
            if let Some(v) = src {
                *dst = v.clone();
            }
        }
        set(&mut self.cache_dir, &o.cache_dir);
        set(&mut self.page_size, &o.page_size);
        set(&mut self.synthesize_background, &o.synthesize_background);
        set(&mut self.expand_widths, &o.expand_widths);
        set(&mut self.merge_adjacent_text, &o.merge_adjacent_text);
        set(&mut self.pad_px, &o.pad_px);
        set(&mut self.model_id, &o.model_id);
        if o.backend_url.is_some() {
            self.backend_url.clone_from(&o.backend_url);
        }
        if o.fixture_dir.is_some() {
            self.fixture_dir.clone_from(&o.fixture_dir);
        }
        if o.presentation_id.is_some() {
            self.presentation_id.clone_from(&o.presentation_id);
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        parse_page_size(&self.page_size)?;
        for (field, v) in [("margin_pt", self.margin_pt), ("gap_pt", self.gap_pt)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(field, format!("{v} must be a finite number >= 0")));
            }
        }
        if !(0.0..1.0).contains(&self.match_iou_threshold) {
            return Err(invalid("match_iou_threshold", format!("{} is outside [0, 1)", self.match_iou_threshold)));
        }
        if self.model_id.trim().is_empty() {
            return Err(invalid("model_id", "must not be empty"));
        }
        if !self.local_asset_base_url.starts_with("https://") {
            return Err(invalid("local_asset_base_url", "must be an https URL"));
        }
        Ok(())
    }

    pub fn page(&self) -> SlidePageSize {
        parse_page_size(&self.page_size).expect("validated page size")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_env(_: &str) -> Option<String> {
        None
    }

    #[test]
    fn defaults() {
        let c = PipelineConfig::resolve(None, &ConfigOverrides::default(), no_env).unwrap();
        assert_eq!(c, PipelineConfig::default());
        assert_eq!(c.page(), SlidePageSize::default());
        assert_eq!((c.pad_px, c.margin_pt, c.gap_pt, c.max_retries), (10, 6.0, 4.0, 2));
        assert!(!c.synthesize_background && !c.expand_widths && !c.merge_adjacent_text);
    }

    #[test]
    fn precedence_file_flags_env() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        fs::write(&path, r#"{"model_id": "from-file", "pad_px": 3, "page_size": "960x540"}"#).unwrap();

        let file_only = PipelineConfig::resolve(Some(&path), &ConfigOverrides::default(), no_env).unwrap();
        assert_eq!((file_only.model_id.as_str(), file_only.pad_px), ("from-file", 3));
        assert_eq!(file_only.page(), SlidePageSize::new(960.0, 540.0).unwrap());

        let flags = ConfigOverrides { model_id: Some("from-flag".into()), pad_px: Some(7), ..Default::default() };
        let with_flags = PipelineConfig::resolve(Some(&path), &flags, no_env).unwrap();
        assert_eq!((with_flags.model_id.as_str(), with_flags.pad_px), ("from-flag", 7));

        let env = |k: &str| (k == MODEL_ID_ENV).then(|| "from-env".to_owned());
        let with_env = PipelineConfig::resolve(Some(&path), &flags, env).unwrap();
        assert_eq!((with_env.model_id.as_str(), with_env.pad_px), ("from-env", 7));
    }

    #[test]
    fn rejects_bad_values() {
        let bad_page = ConfigOverrides { page_size: Some("720by405".into()), ..Default::default() };
        assert!(PipelineConfig::resolve(None, &bad_page, no_env).is_err());
        let zero_page = ConfigOverrides { page_size: Some("0x405".into()), ..Default::default() };
        assert!(PipelineConfig::resolve(None, &zero_page, no_env).is_err());
        let c = PipelineConfig { match_iou_threshold: 1.0, ..PipelineConfig::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        fs::write(&path, r#"{"pad": 3}"#).unwrap();
        assert!(matches!(PipelineConfig::from_file(&path), Err(ConfigError::Parse { .. })));
    }
}
