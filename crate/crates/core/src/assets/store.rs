//! Content-addressed asset store.
//!
//! Assets live at `<cache_dir>/assets/<content_name>`; the URL each name was
//! uploaded to is recorded in `<cache_dir>/assets/manifest.json`. A name with
//! a recorded URL is never uploaded again, across runs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::{debug, warn};

use super::AssetError;
use crate::fsutil::write_atomic;
use crate::sha256_hex;

const NAME_STEM_HEX: usize = 32;
const MANIFEST: &str = "manifest.json";

/// Stable file name for `bytes`: the first 32 hex chars of their SHA-256 plus `.png`.
pub fn content_name(bytes: &[u8]) -> Result<String, AssetError> {
    if bytes.is_empty() {
        return Err(AssetError::EmptyInput);
    }
    let digest = sha256_hex(bytes);
    Ok(format!("{}.png", &digest[..NAME_STEM_HEX]))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssetRef {
    pub content_name: String,
    pub url: Option<String>,
    pub byte_length: usize,
}

#[derive(Debug, Error)]
pub enum UploadError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("server rejected upload with status {0}")]
    Status(u16),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
}

/// Publishes bytes under a content name and returns the public URL.
pub trait Uploader {
    fn upload(&self, content_name: &str, bytes: &[u8]) -> Result<String, UploadError>;
}

/// Copies assets into a directory served by a static file server at `base_url`.
#[derive(Debug, Clone)]
pub struct LocalDirUploader {
    dir: PathBuf,
    base_url: String,
}

impl LocalDirUploader {
    pub fn new(dir: impl Into<PathBuf>, base_url: impl Into<String>) -> Self {
        Self {
            dir: dir.into(),
            base_url: base_url.into().trim_end_matches('/').to_owned(),
        }
    }
}

impl Uploader for LocalDirUploader {
    fn upload(&self, content_name: &str, bytes: &[u8]) -> Result<String, UploadError> {
        let path = self.dir.join(content_name);
        if !path.exists() {
            write_atomic(&path, bytes)?;
        }
        Ok(format!("{}/{}", self.base_url, content_name))
    }
}

/// `PUT <endpoint>/<content_name>` with the PNG body.
///
/// The public URL is taken from a `{"url": ...}` response body when present,
/// otherwise `<public_base>/<content_name>` (defaulting to the endpoint).
#[derive(Debug, Clone)]
pub struct HttpUploader {
    endpoint: String,
    public_base: Option<String>,
    bearer_token: Option<String>,
}

impl HttpUploader {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into().trim_end_matches('/').to_owned(),
            public_base: None,
            bearer_token: None,
        }
    }

    pub fn with_public_base(mut self, base: impl Into<String>) -> Self {
        self.public_base = Some(base.into().trim_end_matches('/').to_owned());
        self
    }

    pub fn with_bearer_token(mut self, token: impl Into<String>) -> Self {
        self.bearer_token = Some(token.into());
        self
    }
}

impl Uploader for HttpUploader {
    fn upload(&self, content_name: &str, bytes: &[u8]) -> Result<String, UploadError> {
        let mut req = ureq::put(&format!("{}/{}", self.endpoint, content_name)).header("Content-Type", "image/png");
        if let Some(token) = &self.bearer_token {
            req = req.header("Authorization", &format!("Bearer {token}"));
        }
        let mut resp = req.send(bytes).map_err(|e| match e {
            ureq::Error::StatusCode(code) => UploadError::Status(code),
            other => UploadError::Transport(other.to_string()),
        })?;
        let body = resp.body_mut().read_to_string().unwrap_or_default();
        let from_body = serde_json::from_str::<serde_json::Value>(&body)
            .ok()
            .and_then(|v| v.get("url").and_then(|u| u.as_str()).map(str::to_owned));
        Ok(from_body.unwrap_or_else(|| {
            let base = self.public_base.as_deref().unwrap_or(&self.endpoint);
            format!("{base}/{content_name}")
        }))
    }
}

pub struct AssetStore {
    dir: PathBuf,
    manifest: BTreeMap<String, String>,
}

impl AssetStore {
    /// Open (creating if needed) the store under `<cache_dir>/assets`.
    pub fn open(cache_dir: &Path) -> Result<Self, AssetError> {
        let dir = cache_dir.join("assets");
        fs::create_dir_all(&dir).map_err(|source| AssetError::Io { path: dir.clone(), source })?;
        let manifest_path = dir.join(MANIFEST);
        let manifest = match fs::read_to_string(&manifest_path) {
            Ok(text) => serde_json::from_str(&text).unwrap_or_else(|e| {
                warn!(path = %manifest_path.display(), error = %e, "ignoring unreadable asset manifest");
                BTreeMap::new()
            }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => BTreeMap::new(),
            Err(source) => return Err(AssetError::Io { path: manifest_path, source }),
        };
        Ok(Self { dir, manifest })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, content_name: &str) -> PathBuf {
        self.dir.join(content_name)
    }

    pub fn url_for(&self, content_name: &str) -> Option<&str> {
        self.manifest.get(content_name).map(String::as_str)
    }

    /// Write `bytes` to the store if absent. No upload.
    pub fn store(&self, bytes: &[u8]) -> Result<AssetRef, AssetError> {
        let name = content_name(bytes)?;
        let path = self.path_for(&name);
        if !path.exists() {
            write_atomic(&path, bytes).map_err(|source| AssetError::Io { path: path.clone(), source })?;
        }
        Ok(AssetRef {
            url: self.manifest.get(&name).cloned(),
            content_name: name,
            byte_length: bytes.len(),
        })
    }

    /// Store `bytes` and make sure they have a public URL, uploading only
    /// when this content name has never been uploaded before.
    pub fn store_and_upload(&mut self, bytes: &[u8], uploader: &dyn Uploader) -> Result<AssetRef, AssetError> {
        let mut asset = self.store(bytes)?;
        if asset.url.is_some() {
            debug!(name = %asset.content_name, "asset already uploaded");
            return Ok(asset);
        }
        let url = uploader
            .upload(&asset.content_name, bytes)
            .map_err(|source| AssetError::Upload { name: asset.content_name.clone(), source })?;
        if !url.starts_with("https://") {
            return Err(AssetError::InsecureUrl(url));
        }
        self.manifest.insert(asset.content_name.clone(), url.clone());
        self.save_manifest()?;
        asset.url = Some(url);
        Ok(asset)
    }

    fn save_manifest(&self) -> Result<(), AssetError> {
        let path = self.dir.join(MANIFEST);
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        write_atomic(&path, text.as_bytes()).map_err(|source| AssetError::Io { path, source })
    }
}
