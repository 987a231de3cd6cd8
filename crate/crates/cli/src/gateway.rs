//! HTTP client for the generation service: `GET /health` and
//! `POST /generate`.

use std::time::Duration;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("cannot reach gateway at {url}: {message}")]
    Unreachable { url: String, message: String },
    #[error("gateway returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed gateway response: {0}")]
    Protocol(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub prompt: String,
    pub n: u32,
    pub temperature: f64,
    pub top_p: f64,
    pub max_new_tokens: u32,
    pub stop_sequences: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
struct CompletionText {
    text: String,
}

#[derive(Debug, Deserialize)]
struct GenerateResponse {
    completions: Vec<CompletionText>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    #[serde(default)]
    pub model: Option<String>,
}

pub struct GatewayClient {
    base: String,
    agent: ureq::Agent,
}

impl GatewayClient {
    pub fn new(base_url: &str, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        GatewayClient { base: base_url.trim_end_matches('/').to_owned(), agent }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    fn unreachable(&self, err: ureq::Error) -> GatewayError {
        GatewayError::Unreachable { url: self.base.clone(), message: err.to_string() }
    }

    fn read_body<T: for<'de> Deserialize<'de>>(
        &self,
        mut response: ureq::http::Response<ureq::Body>,
    ) -> Result<T, GatewayError> {
        let status = response.status().as_u16();
        let body = response.body_mut().read_to_string().map_err(|e| self.unreachable(e))?;
        if !(200..300).contains(&status) {
            return Err(GatewayError::Status { status, body });
        }
        serde_json::from_str(&body).map_err(|e| GatewayError::Protocol(format!("{e}: {body}")))
    }

    pub fn health(&self) -> Result<Health, GatewayError> {
        let response = self.agent.get(&self.url("/health")).call().map_err(|e| self.unreachable(e))?;
        let health: Health = self.read_body(response)?;
        if health.status != "ok" {
            return Err(GatewayError::Protocol(format!("health status is {:?}", health.status)));
        }
        Ok(health)
    }

    /// Returns exactly `request.n` texts.
    pub fn generate(&self, request: &GenerateRequest) -> Result<Vec<String>, GatewayError> {
        let response = self
            .agent
            .post(&self.url("/generate"))
            .send_json(request)
            .map_err(|e| self.unreachable(e))?;
        let parsed: GenerateResponse = self.read_body(response)?;
        if parsed.completions.len() != request.n as usize {
            return Err(GatewayError::Protocol(format!(
                "asked for {} completions, got {}",
                request.n,
                parsed.completions.len()
            )));
        }
        Ok(parsed.completions.into_iter().map(|c| c.text).collect())
    }
}
