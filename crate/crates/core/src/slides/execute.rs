use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde_json::Value;
use thiserror::Error;

use super::{ObjectId, RequestBatch, SlideRequest};
use crate::fsutil::write_atomic;

/// Bearer token for the live presentation service.
pub const SLIDES_TOKEN_ENV: &str = "I2S_SLIDES_TOKEN";
const SLIDES_API_BASE: &str = "https://slides.googleapis.com/v1";

#[derive(Debug, Error, PartialEq)]
pub enum ServiceError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("request #{index} rejected: {reason}")]
    Rejected { index: usize, reason: String },
    #[error("service error: {0}")]
    Other(String),
}

/// Something that applies a request batch to a presentation.
pub trait PresentationService {
    /// Object ids already present in the presentation.
    fn existing_object_ids(&self, presentation_id: &str) -> Result<BTreeSet<String>, ServiceError>;

    /// Apply every request, or none. Returns the created object ids.
    fn batch_update(&self, batch: &RequestBatch) -> Result<Vec<ObjectId>, ServiceError>;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExecuteOptions {
    /// Delete objects whose ids the batch is about to create, in the same batch.
    pub replace_existing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionReport {
    pub elapsed: Duration,
    pub object_ids: Vec<ObjectId>,
    pub deleted: Vec<ObjectId>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ExecuteError {
    #[error("request #{index} ({object_id}) rejected: {reason}")]
    Rejected {
        index: usize,
        object_id: String,
        reason: String,
    },
    #[error(transparent)]
    Service(ServiceError),
}

pub fn execute_batch(
    batch: &RequestBatch,
    service: &dyn PresentationService,
    options: ExecuteOptions,
) -> Result<ExecutionReport, ExecuteError> {
    let start = Instant::now();

    let mut deleted = Vec::new();
    let prepared;
    let to_send = if options.replace_existing {
        let existing = service
            .existing_object_ids(&batch.presentation_id)
            .map_err(ExecuteError::Service)?;
        let mut elements: Vec<ObjectId> = Vec::new();
        let mut page_exists = false;
        for id in batch.created_ids() {
            if existing.contains(id.as_str()) {
                if id == batch.page_id {
                    page_exists = true;
                } else {
                    elements.push(id);
                }
            }
        }
        // Elements before their page.
        deleted = elements;
        if page_exists {
            deleted.push(batch.page_id.clone());
        }
        let mut requests: Vec<SlideRequest> = deleted
            .iter()
            .map(|id| SlideRequest::DeleteObject { object_id: id.clone() })
            .collect();
        requests.extend(batch.requests.iter().cloned());
        prepared = RequestBatch {
            presentation_id: batch.presentation_id.clone(),
            page_id: batch.page_id.clone(),
            requests,
        };
        &prepared
    } else {
        batch
    };

    let offset = to_send.requests.len() - batch.requests.len();
    let object_ids = service.batch_update(to_send).map_err(|e| match e {
        ServiceError::Rejected { index, reason } => {
            let object_id = to_send
                .requests
                .get(index)
                .map(|r| r.object_id().to_string())
                .unwrap_or_default();
            ExecuteError::Rejected {
                index: index.saturating_sub(offset),
                object_id,
                reason,
            }
        }
        other => ExecuteError::Service(other),
    })?;

    Ok(ExecutionReport {
        elapsed: start.elapsed(),
        object_ids,
        deleted,
    })
}

/// In-memory presentation that remembers created ids across calls.
#[derive(Debug, Default)]
pub struct MockPresentationService {
    objects: Mutex<BTreeSet<String>>,
    reject_index: Option<usize>,
    calls: Mutex<usize>,
}

impl MockPresentationService {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fail every batch at request `index`.
    pub fn rejecting(index: usize) -> Self {
        Self {
            reject_index: Some(index),
            ..Self::default()
        }
    }

    pub fn objects(&self) -> BTreeSet<String> {
        self.objects.lock().unwrap().clone()
    }

    pub fn calls(&self) -> usize {
        *self.calls.lock().unwrap()
    }
}

impl PresentationService for MockPresentationService {
    fn existing_object_ids(&self, _presentation_id: &str) -> Result<BTreeSet<String>, ServiceError> {
        Ok(self.objects())
    }

    fn batch_update(&self, batch: &RequestBatch) -> Result<Vec<ObjectId>, ServiceError> {
        *self.calls.lock().unwrap() += 1;
        let mut objects = self.objects.lock().unwrap();
        let mut next = objects.clone();
        let mut created = Vec::new();
        for (index, req) in batch.requests.iter().enumerate() {
            if self.reject_index == Some(index) {
                return Err(ServiceError::Rejected {
                    index,
                    reason: "scripted rejection".into(),
                });
            }
            let id = req.object_id().as_str();
            if req.creates() {
                if !next.insert(id.to_owned()) {
                    return Err(ServiceError::Rejected {
                        index,
                        reason: format!("object id {id} already exists"),
                    });
                }
                created.push(req.object_id().clone());
            } else if matches!(req, SlideRequest::DeleteObject { .. }) {
                if !next.remove(id) {
                    return Err(ServiceError::Rejected {
                        index,
                        reason: format!("object id {id} does not exist"),
                    });
                }
            } else if !next.contains(id) {
                return Err(ServiceError::Rejected {
                    index,
                    reason: format!("object id {id} does not exist"),
                });
            }
        }
        *objects = next;
        Ok(created)
    }
}

/// Writes the serialized batch to a file instead of calling a service.
#[derive(Debug, Clone)]
pub struct FileSinkService {
    path: PathBuf,
}

impl FileSinkService {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into() }
    }

    pub fn path(&self) -> &std::path::Path {
        &self.path
    }
}

impl PresentationService for FileSinkService {
    fn existing_object_ids(&self, _presentation_id: &str) -> Result<BTreeSet<String>, ServiceError> {
        Ok(BTreeSet::new())
    }

    fn batch_update(&self, batch: &RequestBatch) -> Result<Vec<ObjectId>, ServiceError> {
        write_atomic(&self.path, batch.to_json_string().as_bytes())
            .map_err(|e| ServiceError::Other(format!("writing {}: {e}", self.path.display())))?;
        Ok(batch.created_ids())
    }
}

/// HTTPS client for the hosted presentation API.
pub struct GoogleSlidesService {
    base_url: String,
    token: String,
    agent: ureq::Agent,
}

impl GoogleSlidesService {
    pub fn new(token: impl Into<String>) -> Self {
        Self::with_base_url(SLIDES_API_BASE, token)
    }

    pub fn with_base_url(base_url: impl Into<String>, token: impl Into<String>) -> Self {
        let agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
        Self {
            base_url: base_url.into().trim_end_matches('/').to_owned(),
            token: token.into(),
            agent,
        }
    }

    /// Token from `I2S_SLIDES_TOKEN`.
    pub fn from_env() -> Option<Self> {
        std::env::var(SLIDES_TOKEN_ENV).ok().filter(|t| !t.is_empty()).map(Self::new)
    }

    fn auth(&self) -> String {
        format!("Bearer {}", self.token)
    }
}

impl PresentationService for GoogleSlidesService {
    fn existing_object_ids(&self, presentation_id: &str) -> Result<BTreeSet<String>, ServiceError> {
        let url = format!(
            "{}/presentations/{presentation_id}?fields=slides(objectId,pageElements(objectId))",
            self.base_url
        );
        let mut resp = self
            .agent
            .get(&url)
            .header("Authorization", &self.auth())
            .call()
            .map_err(|e| ServiceError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| ServiceError::Transport(e.to_string()))?;
        if status >= 400 {
            return Err(ServiceError::Other(format!("HTTP {status}: {body}")));
        }
        let value: Value = serde_json::from_str(&body).map_err(|e| ServiceError::Other(e.to_string()))?;
        let mut ids = BTreeSet::new();
        for slide in value["slides"].as_array().into_iter().flatten() {
            if let Some(id) = slide["objectId"].as_str() {
                ids.insert(id.to_owned());
            }
            for el in slide["pageElements"].as_array().into_iter().flatten() {
                if let Some(id) = el["objectId"].as_str() {
                    ids.insert(id.to_owned());
                }
            }
        }
        Ok(ids)
    }

    fn batch_update(&self, batch: &RequestBatch) -> Result<Vec<ObjectId>, ServiceError> {
        let url = format!("{}/presentations/{}:batchUpdate", self.base_url, batch.presentation_id);
        let body = batch.to_json_string();
        let mut resp = self
            .agent
            .post(&url)
            .header("Authorization", &self.auth())
            .header("Content-Type", "application/json")
            .send(body.as_bytes())
            .map_err(|e| ServiceError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| ServiceError::Transport(e.to_string()))?;
        if status >= 400 {
            let message = serde_json::from_str::<Value>(&text)
                .ok()
                .and_then(|v| v["error"]["message"].as_str().map(str::to_owned))
                .unwrap_or(text);
            return Err(match rejected_index(&message) {
                Some(index) => ServiceError::Rejected { index, reason: message },
                None => ServiceError::Other(format!("HTTP {status}: {message}")),
            });
        }
        Ok(batch.created_ids())
    }
}

/// Pull `N` out of a message mentioning `requests[N]`.
fn rejected_index(message: &str) -> Option<usize> {
    let start = message.find("requests[")? + "requests[".len();
    let digits: String = message[start..].chars().take_while(char::is_ascii_digit).collect();
    digits.parse().ok()
}
