//! Prompt contracts and the optional text-generation client.
//!
//! A prompt is seven fields (role, goal, backstory, examples, input, task,
//! expected output) joined by fixed sentences. Generated text may only fill
//! `description` fields; proposed structure is checked against the
//! deterministic model and never adopted.

use std::fmt::Write;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::diag::Diagnostics;
use crate::error::{Error, Result};
use crate::eval::{model_elements, parse_plantuml_model};
use crate::extract::{emit_node_inventory, NodeInventory};
use crate::launch::{emit_launch_dependency_json, LaunchDependencyDescription};
use crate::model::ArchitectureModel;

pub const ENDPOINT_ENV: &str = "ARCH_RECOVERY_LLM_ENDPOINT";
pub const TIMEOUT_ENV: &str = "ARCH_RECOVERY_LLM_TIMEOUT_MS";
pub const DEFAULT_TIMEOUT_MS: u64 = 30_000;
pub const DEFAULT_RETRIES: u32 = 2;

pub const CONSTRUCTOR_TEMPLATE: &str = "system_architecture_constructor";
pub const NODE_DESCRIPTION_TEMPLATE: &str = "node_description";
pub const TEMPLATES: [&str; 2] = [CONSTRUCTOR_TEMPLATE, NODE_DESCRIPTION_TEMPLATE];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptContract {
    pub role: String,
    pub goal: String,
    pub backstory: String,
    pub examples: String,
    pub input: String,
    pub task: String,
    pub expected_output: String,
}

struct Template {
    role: &'static str,
    goal: &'static str,
    backstory: &'static str,
    examples: &'static str,
    task: &'static str,
    expected_output: &'static str,
}

const CONSTRUCTOR: Template = Template {
    role: "System architecture constructor for ROS 2 software",
    goal: "Compose the atomic ROS nodes of a repository into the composed component diagram its launch files describe.",
    backstory: "You work from two artifacts produced by static analysis. \
The first lists every atomic ROS node with its ports. The second records which launch file starts which node \
instance, in which namespace, and which launch files include each other.",
    examples: "A launch file lf1 that starts n1 and n3 and includes lf2 becomes one composed classifier whose parts are \
n1, n3 and a part typed by the composed classifier of lf2. A node started under namespace /backup whose source \
publishes `~status` contributes the topic /backup/<node name>/status.",
    task: "Create one ComposedRosNodeClassifier per launch file entry. Type each node instance by the atomic classifier \
with the matching execution. Type each included launch file by its own composed classifier. Connect ports whose \
resolved names and kinds agree with one CommunicationRelation.",
    expected_output: "PlantUML between @startuml and @enduml. Composed classifiers are `component \"name\" as crc_N \
<<ComposedRosNodeClassifier>> { ... }`. Parts are `component \"node\\nns: /x\\nexec: e\\ntype: T\" as nN <<RosNodePart>>`. \
Relations are `interface \"/name : pkg/msg/T\" as rN <<Topic>>` with edges `nA --> rN : pub` and `rN --> nB : sub`.",
};

const NODE_DESCRIPTION: Template = Template {
    role: "Technical writer for ROS 2 node documentation",
    goal: "Describe what one atomic ROS node does, based only on its recorded ports and launch context.",
    backstory: "The node inventory and launch description below were extracted from source without running it. \
Names and types in them are exact.",
    examples: "A node publishing /cmd_vel : geometry_msgs/msg/Twist and subscribing to /scan : sensor_msgs/msg/LaserScan \
might be described as: Reads laser scans and publishes velocity commands.",
    task: "Write a description for the classifier named in the request. Mention its inputs and outputs. Do not invent \
ports, topics or services.",
    expected_output: "One or two plain sentences, no markup.",
};

fn template(name: &str) -> Result<&'static Template> {
    match name {
        CONSTRUCTOR_TEMPLATE => Ok(&CONSTRUCTOR),
        NODE_DESCRIPTION_TEMPLATE => Ok(&NODE_DESCRIPTION),
        _ => Err(Error::UnknownTemplate {
            name: name.to_string(),
            available: TEMPLATES.to_vec(),
        }),
    }
}

/// Fills a template with both artifacts, embedded verbatim.
pub fn build_contract(
    template_name: &str,
    inventory: &NodeInventory,
    ldd: &LaunchDependencyDescription,
) -> Result<PromptContract> {
    let t = template(template_name)?;
    let inventory_json = emit_node_inventory(inventory)?;
    let ldd_json = emit_launch_dependency_json(ldd)?;
    let mut input = String::new();
    if inventory.list_packages.is_empty() {
        input.push_str("Warning: the node inventory is empty; no atomic ROS nodes were found.\n\n");
    }
    write!(
        input,
        "List of atomic ROS nodes (atomic_ros_nodes.json):\n```json\n{inventory_json}```\n\n\
Launch file dependency description (launch_dependencies.json):\n```json\n{ldd_json}```\n"
    )
    .unwrap();
    Ok(PromptContract {
        role: t.role.into(),
        goal: t.goal.into(),
        backstory: t.backstory.into(),
        examples: t.examples.into(),
        input,
        task: t.task.into(),
        expected_output: t.expected_output.into(),
    })
}

impl PromptContract {
    /// Fields in order, each introduced by a fixed sentence.
    pub fn render(&self) -> String {
        format!(
            "You are acting as: {}.\n\nYour goal: {}\n\nBackground: {}\n\nFor example: {}\n\n\
You are given the following input.\n{}\nYour task: {}\n\nAnswer in this form: {}\n",
            self.role, self.goal, self.backstory, self.examples, self.input, self.task, self.expected_output
        )
    }

    pub fn is_complete(&self) -> bool {
        [
            &self.role,
            &self.goal,
            &self.backstory,
            &self.examples,
            &self.input,
            &self.task,
            &self.expected_output,
        ]
        .iter()
        .all(|f| !f.trim().is_empty())
    }
}

pub fn render_prompt(template_name: &str, inventory: &NodeInventory, ldd: &LaunchDependencyDescription) -> Result<String> {
    Ok(build_contract(template_name, inventory, ldd)?.render())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LlmConfig {
    /// `None` disables the client; every call returns its fallback.
    pub endpoint: Option<String>,
    pub timeout: Duration,
    pub retries: u32,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            endpoint: None,
            timeout: Duration::from_millis(DEFAULT_TIMEOUT_MS),
            retries: DEFAULT_RETRIES,
        }
    }
}

impl LlmConfig {
    pub fn disabled() -> Self {
        Self::default()
    }

    pub fn from_env() -> Self {
        Self::from_values(
            std::env::var(ENDPOINT_ENV).ok().as_deref(),
            std::env::var(TIMEOUT_ENV).ok().as_deref(),
        )
    }

    pub fn from_values(endpoint: Option<&str>, timeout_ms: Option<&str>) -> Self {
        let timeout = timeout_ms
            .and_then(|v| v.trim().parse::<u64>().ok())
            .unwrap_or(DEFAULT_TIMEOUT_MS);
        LlmConfig {
            endpoint: endpoint.map(str::trim).filter(|e| !e.is_empty()).map(String::from),
            timeout: Duration::from_millis(timeout),
            retries: DEFAULT_RETRIES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generation {
    pub text: String,
    pub fallback_used: bool,
}

#[derive(Serialize)]
struct CompletionRequest<'a> {
    prompt: &'a str,
}

#[derive(Deserialize)]
struct CompletionResponse {
    completion: String,
}

/// Sends `{"prompt"}` and expects `{"completion"}`. Network failures are
/// retried; after the last attempt, or on a malformed reply, `fallback` is
/// returned and a diagnostic recorded.
pub async fn generate_text(prompt: &str, fallback: &str, config: &LlmConfig, diags: &mut Diagnostics) -> Generation {
    let fallback_gen = || Generation {
        text: fallback.to_string(),
        fallback_used: true,
    };
    let Some(endpoint) = &config.endpoint else {
        return fallback_gen();
    };
    if prompt.trim().is_empty() {
        diags.warn("llm_fallback", None, "empty prompt; using fallback text");
        return fallback_gen();
    }
    let client = match reqwest::Client::builder().no_proxy().timeout(config.timeout).build() {
        Ok(c) => c,
        Err(e) => {
            diags.warn("llm_fallback", None, format!("cannot build HTTP client: {e}"));
            return fallback_gen();
        }
    };
    let mut last_error = String::new();
    for attempt in 0..=config.retries {
        if attempt > 0 {
            tokio::time::sleep(Duration::from_millis(50 * u64::from(attempt))).await;
        }
        let response = client.post(endpoint).json(&CompletionRequest { prompt }).send().await;
        let response = match response.and_then(|r| r.error_for_status()) {
            Ok(r) => r,
            Err(e) => {
                last_error = e.to_string();
                continue;
            }
        };
        return match response.json::<CompletionResponse>().await {
            Ok(body) if !body.completion.trim().is_empty() => Generation {
                text: body.completion.trim().to_string(),
                fallback_used: false,
            },
            Ok(_) => {
                diags.warn("llm_fallback", None, "endpoint returned an empty completion; using fallback text");
                fallback_gen()
            }
            Err(e) => {
                diags.warn("llm_fallback", None, format!("malformed completion response: {e}; using fallback text"));
                fallback_gen()
            }
        };
    }
    diags.warn(
        "llm_fallback",
        None,
        format!("{} attempt(s) failed, last error: {last_error}; using fallback text", config.retries + 1),
    );
    fallback_gen()
}

/// Replaces classifier descriptions with generated text, one request at a
/// time. The existing description is the fallback. Nothing else changes.
pub async fn enrich_descriptions(
    inventory: &mut NodeInventory,
    ldd: &LaunchDependencyDescription,
    config: &LlmConfig,
    diags: &mut Diagnostics,
) -> Result<usize> {
    if config.endpoint.is_none() {
        return Ok(0);
    }
    let contract = build_contract(NODE_DESCRIPTION_TEMPLATE, inventory, ldd)?;
    let mut generated = 0;
    for c in inventory.classifiers_mut() {
        let mut request = contract.clone();
        write!(request.task, " Describe classifier {} ({}).", c.id, c.class_name).unwrap();
        let g = generate_text(&request.render(), &c.description, config, diags).await;
        if !g.fallback_used {
            c.description = g.text;
            generated += 1;
        }
    }
    Ok(generated)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProposalReview {
    pub consistent: bool,
    /// Elements the proposal adds, then elements it drops, as `kind key`.
    pub differences: Vec<String>,
}

/// Compares a proposed PlantUML model with the deterministic one. The
/// proposal is only reported on.
pub fn review_proposal(proposal: &str, model: &ArchitectureModel) -> Result<ProposalReview> {
    let mut scratch = Diagnostics::new();
    let proposed = parse_plantuml_model(proposal, None, &mut scratch)?;
    let expected = model_elements(model);
    let mut differences = Vec::new();
    let added = proposed.elements();
    let mut remaining = expected.clone();
    for e in &added {
        if !remaining.remove(e) {
            differences.push(format!("+ {} {}", e.kind, e.key.join(" | ")));
        }
    }
    for e in remaining.elements() {
        differences.push(format!("- {} {}", e.kind, e.key.join(" | ")));
    }
    Ok(ProposalReview {
        consistent: differences.is_empty(),
        differences,
    })
}
