//! Async client for the rosarch HTTP service.

use std::time::Duration;

use reqwest::StatusCode;
use rosarch_core::api::{self, *};
use rosarch_core::eval::EvaluationReport;
use rosarch_core::extract::NodeInventory;
use rosarch_core::launch::LaunchDependencyDescription;
use rosarch_core::pipeline::{PipelineReport, RecoveryJobConfig, SynthesisOutput};
use rosarch_core::ErrorClass;
use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("cannot reach {url}: {source}")]
    Transport {
        url: String,
        #[source]
        source: reqwest::Error,
    },
    /// The service answered with an error body.
    #[error("{}", body.message)]
    Api { status: StatusCode, body: ErrorBody },
    #[error("unexpected response from {url} ({status}): {message}")]
    Protocol {
        url: String,
        status: StatusCode,
        message: String,
    },
}

impl ClientError {
    /// Error class as reported by the service; transport and protocol
    /// failures count as input errors.
    pub fn class(&self) -> ErrorClass {
        match self {
            ClientError::Api { body, .. } => body.class,
            _ => ErrorClass::Input,
        }
    }
}

pub type Result<T> = std::result::Result<T, ClientError>;

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    /// `base` is e.g. `http://127.0.0.1:8080`. System proxies are ignored so
    /// that loopback services stay reachable.
    pub fn new(base: impl Into<String>) -> Self {
        let http = reqwest::Client::builder()
            .no_proxy()
            .connect_timeout(Duration::from_secs(10))
            .build()
            .expect("static client configuration");
        Client {
            base: base.into().trim_end_matches('/').to_string(),
            http,
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    async fn decode<T: DeserializeOwned>(url: String, response: reqwest::Response) -> Result<T> {
        let status = response.status();
        let bytes = response
            .bytes()
            .await
            .map_err(|source| ClientError::Transport { url: url.clone(), source })?;
        if status.is_success() {
            return serde_json::from_slice(&bytes).map_err(|e| ClientError::Protocol {
                url,
                status,
                message: e.to_string(),
            });
        }
        match serde_json::from_slice::<ErrorBody>(&bytes) {
            Ok(body) => Err(ClientError::Api { status, body }),
            Err(_) => Err(ClientError::Protocol {
                url,
                status,
                message: String::from_utf8_lossy(&bytes).into_owned(),
            }),
        }
    }

    async fn post<B: Serialize, T: DeserializeOwned>(&self, route: &str, body: &B) -> Result<T> {
        let url = format!("{}{route}", self.base);
        let response = self
            .http
            .post(&url)
            .json(body)
            .send()
            .await
            .map_err(|source| ClientError::Transport { url: url.clone(), source })?;
        Self::decode(url, response).await
    }

    pub async fn health(&self) -> Result<Health> {
        let url = format!("{}{}", self.base, api::HEALTH);
        let response = self
            .http
            .get(&url)
            .send()
            .await
            .map_err(|source| ClientError::Transport { url: url.clone(), source })?;
        Self::decode(url, response).await
    }

    pub async fn extract(&self, req: &ExtractRequest) -> Result<StageResponse<NodeInventory>> {
        self.post(api::EXTRACT, req).await
    }

    pub async fn launch_graph(&self, req: &LaunchGraphRequest) -> Result<StageResponse<LaunchDependencyDescription>> {
        self.post(api::LAUNCH_GRAPH, req).await
    }

    pub async fn synthesize(&self, req: &SynthesizeRequest) -> Result<StageResponse<SynthesisOutput>> {
        self.post(api::SYNTHESIZE, req).await
    }

    pub async fn evaluate(&self, req: &EvaluateRequest) -> Result<StageResponse<EvaluationReport>> {
        self.post(api::EVALUATE, req).await
    }

    pub async fn pipeline(&self, config: &RecoveryJobConfig) -> Result<PipelineReport> {
        self.post(api::PIPELINE, config).await
    }

    pub async fn resolve_name(&self, req: &ResolveNameRequest) -> Result<StageResponse<ResolveNameResponse>> {
        self.post(api::RESOLVE_NAME, req).await
    }

    pub async fn prompt(&self, req: &PromptRequest) -> Result<StageResponse<PromptResponse>> {
        self.post(api::PROMPT, req).await
    }
}
