//! Request and response bodies of the HTTP service, shared with its client.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::diag::Diagnostic;
use crate::error::{Error, ErrorClass};
use crate::model::Remapping;

pub const HEALTH: &str = "/health";
pub const EXTRACT: &str = "/v1/extract";
pub const LAUNCH_GRAPH: &str = "/v1/launch-graph";
pub const SYNTHESIZE: &str = "/v1/synthesize";
pub const EVALUATE: &str = "/v1/evaluate";
pub const PIPELINE: &str = "/v1/pipeline";
pub const RESOLVE_NAME: &str = "/v1/resolve-name";
pub const PROMPT: &str = "/v1/prompt";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractRequest {
    pub repo: PathBuf,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LaunchGraphRequest {
    pub repo: PathBuf,
    pub out: PathBuf,
    #[serde(default)]
    pub roots: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthesizeRequest {
    pub out: PathBuf,
    #[serde(default)]
    pub dump_relations: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateRequest {
    pub recovered: PathBuf,
    pub reference: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolveNameRequest {
    pub name: String,
    #[serde(default = "global")]
    pub namespace: String,
    pub node_name: String,
    #[serde(default)]
    pub remappings: Vec<Remapping>,
}

fn global() -> String {
    "/".into()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolveNameResponse {
    /// Before remapping.
    pub resolved: String,
    /// After remapping.
    pub remapped: String,
}

/// Renders a prompt from the two artifacts found in `out`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRequest {
    pub template: String,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptResponse {
    pub prompt: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageResponse<T> {
    pub result: T,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub class: ErrorClass,
    pub message: String,
    #[serde(default)]
    pub diagnostics: Vec<Diagnostic>,
}

impl ErrorBody {
    pub fn from_error(e: &Error, diagnostics: Vec<Diagnostic>) -> Self {
        ErrorBody {
            class: e.class(),
            message: e.to_string(),
            diagnostics,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
}
