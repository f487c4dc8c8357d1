//! Generic HTTP backend: one multipart POST per step.

use std::time::Duration;

use reqwest::blocking::{multipart, Client};

use super::{Backend, BackendError, BackendRequest, Prompt};

/// Environment variable holding the bearer token.
pub const API_KEY_ENV: &str = "EESCHEMATIC_API_KEY";

#[derive(Debug, Clone)]
pub struct HttpBackend {
    client: Client,
    url: String,
    model: String,
    key: String,
}

impl HttpBackend {
    /// Reads the API key from the environment.
    pub fn new(url: &str, model: &str, timeout: Duration) -> Result<Self, BackendError> {
        let key = std::env::var(API_KEY_ENV)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or(BackendError::MissingKey)?;
        Self::with_key(url, model, timeout, &key)
    }

    pub fn with_key(url: &str, model: &str, timeout: Duration, key: &str) -> Result<Self, BackendError> {
        let client = Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(HttpBackend {
            client,
            url: url.to_string(),
            model: model.to_string(),
            key: key.to_string(),
        })
    }
}

/// Accept either a bare text body or a JSON object carrying `text` or
/// `content`.
fn reply_text(body: String) -> String {
    if let Ok(serde_json::Value::Object(map)) = serde_json::from_str::<serde_json::Value>(&body) {
        for key in ["text", "content"] {
            if let Some(serde_json::Value::String(s)) = map.get(key) {
                return s.clone();
            }
        }
    }
    body
}

impl Backend for HttpBackend {
    fn name(&self) -> &str {
        "http"
    }

    fn complete(&mut self, req: &BackendRequest, prompt: &Prompt) -> Result<String, BackendError> {
        let mut form = multipart::Form::new()
            .text("model", self.model.clone())
            .text("phase", req.phase.dir_name().to_string())
            .text("step", req.step.as_str().to_string())
            .text("prompt", prompt.text.clone());
        for a in &prompt.attachments {
            let part = multipart::Part::text(a.content.clone())
                .file_name(a.name.clone())
                .mime_str(a.mime)
                .map_err(|e| BackendError::Transport(e.to_string()))?;
            form = form.part(a.name.clone(), part);
        }
        let resp = self
            .client
            .post(&self.url)
            .bearer_auth(&self.key)
            .multipart(form)
            .send()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = resp.status();
        let body = resp.text().map_err(|e| BackendError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(BackendError::Status {
                status: status.as_u16(),
                body: body.chars().take(500).collect(),
            });
        }
        Ok(reply_text(body))
    }
}
