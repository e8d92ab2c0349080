//! Stage runners. Each stage reads its inputs from disk (or the previous
//! stage), writes its artifacts under the output directory, and nothing
//! else. [`run_pipeline`] chains them and records a digest manifest.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diag::Diagnostics;
use crate::error::{Error, ErrorClass, Result};
use crate::eval::{evaluate, load_model, EvaluationReport};
use crate::extract::{build_inventory, emit_node_inventory, parse_node_inventory, NodeInventory, NODE_INVENTORY_FILE};
use crate::json::to_artifact_string;
use crate::launch::{
    annotate_with_inventory, build_launch_dependency_description, emit_launch_dependency_json,
    link_instances_to_classifiers, parse_launch_dependency_json, select_roots, LaunchDependencyDescription,
    PackageIndex, LAUNCH_DESCRIPTION_FILE,
};
use crate::llm::{enrich_descriptions, render_prompt, LlmConfig};
use crate::model::{ArchitectureModel, CommunicationRelation};
use crate::names::{bind_instances, derive_communication_relations};
use crate::synth::{build_composed_model, emit_acd, emit_ccd, ACD_DIR, CCD_DIR, CCD_FILE};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RELATIONS_FILE: &str = "relations.json";
pub const EVALUATION_FILE: &str = "evaluation.json";
pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Extract,
    LaunchGraph,
    Link,
    Resolve,
    Synthesize,
    Evaluate,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Extract => "extract",
            Stage::LaunchGraph => "launch-graph",
            Stage::Link => "link",
            Stage::Resolve => "resolve",
            Stage::Synthesize => "synthesize",
            Stage::Evaluate => "evaluate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryJobConfig {
    pub repo_root: PathBuf,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub roots: Vec<PathBuf>,
    #[serde(default)]
    pub llm_enabled: bool,
    #[serde(default)]
    pub diagnostics_path: Option<PathBuf>,
    #[serde(default)]
    pub fail_under: Option<f64>,
    #[serde(default)]
    pub dump_relations: bool,
    /// Reference models to score the recovered ones against.
    #[serde(default)]
    pub reference: Option<PathBuf>,
}

impl RecoveryJobConfig {
    pub fn new(repo_root: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        RecoveryJobConfig {
            repo_root: repo_root.into(),
            out_dir: out_dir.into(),
            roots: Vec::new(),
            llm_enabled: false,
            diagnostics_path: None,
            fail_under: None,
            dump_relations: false,
            reference: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
    BelowThreshold,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub status: RunStatus,
    pub stages_completed: Vec<Stage>,
    pub failed_stage: Option<Stage>,
    pub error: Option<String>,
    pub artifacts: Vec<ArtifactRecord>,
}

impl RunManifest {
    /// One digest over every artifact record.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for a in &self.artifacts {
            h.update(a.path.as_bytes());
            h.update([0]);
            h.update(a.sha256.as_bytes());
            h.update([0]);
        }
        hex::encode(h.finalize())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub manifest: RunManifest,
    pub diagnostics: Diagnostics,
    pub evaluation: Option<EvaluationReport>,
    pub descriptions_generated: usize,
    pub error_class: Option<ErrorClass>,
}

impl PipelineReport {
    /// 0 success, 1 input error, 2 analysis error, 3 below threshold.
    pub fn exit_code(&self) -> i32 {
        match (self.error_class, &self.manifest.status) {
            (Some(ErrorClass::Input), _) => 1,
            (Some(ErrorClass::Analysis), _) => 2,
            (None, RunStatus::BelowThreshold) => 3,
            _ => 0,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, contents.replace("\r\n", "\n")).map_err(|e| Error::io(path, e))
}

fn read_artifact(out: &Path, name: &str, producer: &'static str) -> Result<String> {
    let path = out.join(name);
    if !path.is_file() {
        return Err(Error::MissingArtifact { path, producer });
    }
    std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))
}

/// Repository must be a readable directory and the output must not lie
/// inside it.
pub fn check_paths(repo: &Path, out: &Path) -> Result<PathBuf> {
    let repo = repo
        .canonicalize()
        .map_err(|e| Error::Input(format!("repository {}: {e}", repo.display())))?;
    if !repo.is_dir() {
        return Err(Error::Input(format!("repository {} is not a directory", repo.display())));
    }
    let absolute = if out.is_absolute() {
        out.to_path_buf()
    } else {
        std::env::current_dir().map_err(|e| Error::io(".", e))?.join(out)
    };
    // Canonicalize the deepest existing ancestor; the rest may not exist yet.
    let mut existing = absolute.as_path();
    let mut rest = Vec::new();
    while !existing.exists() {
        match (existing.parent(), existing.file_name()) {
            (Some(p), Some(name)) => {
                rest.push(name.to_os_string());
                existing = p;
            }
            _ => break,
        }
    }
    let mut resolved = existing.canonicalize().unwrap_or_else(|_| existing.to_path_buf());
    resolved.extend(rest.iter().rev());
    if resolved.starts_with(&repo) {
        return Err(Error::Input(format!(
            "output directory {} lies inside the analyzed repository",
            out.display()
        )));
    }
    Ok(repo)
}

/// Writes `atomic_ros_nodes.json`.
pub fn run_extract(repo: &Path, out: &Path, diags: &mut Diagnostics) -> Result<NodeInventory> {
    let repo = check_paths(repo, out)?;
    let (_, inventory) = build_inventory(&repo, diags)?;
    write_file(&out.join(NODE_INVENTORY_FILE), &emit_node_inventory(&inventory)?)?;
    Ok(inventory)
}

/// Writes `launch_dependencies.json`. Class names are filled in when the
/// node inventory is already present in `out`.
pub fn run_launch_graph(
    repo: &Path,
    out: &Path,
    roots: &[PathBuf],
    diags: &mut Diagnostics,
) -> Result<LaunchDependencyDescription> {
    let repo = check_paths(repo, out)?;
    let packages = crate::extract::scan_packages(&repo, &mut Diagnostics::new())?;
    let index = PackageIndex::new(&repo, &packages);
    let roots = select_roots(&repo, &index, roots, diags)?;
    let mut ldd = build_launch_dependency_description(&repo, &index, &roots, diags)?;
    let inventory_path = out.join(NODE_INVENTORY_FILE);
    if inventory_path.is_file() {
        let text = std::fs::read_to_string(&inventory_path).map_err(|e| Error::io(&inventory_path, e))?;
        let inventory = parse_node_inventory(&text, &inventory_path)?;
        let links = link_instances_to_classifiers(&ldd, &inventory, &mut Diagnostics::new());
        annotate_with_inventory(&mut ldd, &inventory, &links);
    }
    write_file(&out.join(LAUNCH_DESCRIPTION_FILE), &emit_launch_dependency_json(&ldd)?)?;
    Ok(ldd)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisOutput {
    pub model: ArchitectureModel,
    pub relations: Vec<CommunicationRelation>,
    /// Written files, relative to the output directory.
    pub files: Vec<String>,
}

/// Links, resolves and synthesizes from the two artifacts in `out`; writes
/// `acd/<id>.puml` per classifier and `ccd/system.puml`.
pub fn run_synthesize(out: &Path, dump_relations: bool, diags: &mut Diagnostics) -> Result<SynthesisOutput> {
    let inventory_text = read_artifact(out, NODE_INVENTORY_FILE, Stage::Extract.as_str())?;
    let ldd_text = read_artifact(out, LAUNCH_DESCRIPTION_FILE, Stage::LaunchGraph.as_str())?;
    let inventory = parse_node_inventory(&inventory_text, &out.join(NODE_INVENTORY_FILE))?;
    let ldd = parse_launch_dependency_json(&ldd_text, &out.join(LAUNCH_DESCRIPTION_FILE))?;

    let links = link_instances_to_classifiers(&ldd, &inventory, diags);
    let relations = derive_communication_relations(&bind_instances(&ldd, &inventory, &links), diags);
    let model = build_composed_model(&ldd, &inventory, &links, &relations, diags)?;

    let acd_dir = out.join(ACD_DIR);
    if acd_dir.is_dir() {
        for entry in std::fs::read_dir(&acd_dir).map_err(|e| Error::io(&acd_dir, e))? {
            let path = entry.map_err(|e| Error::io(&acd_dir, e))?.path();
            if path.extension().is_some_and(|x| x == "puml") {
                std::fs::remove_file(&path).map_err(|e| Error::io(&path, e))?;
            }
        }
    }
    let mut files = Vec::new();
    for c in &model.atomic_classifiers {
        let rel = format!("{ACD_DIR}/{}.puml", c.id);
        write_file(&out.join(&rel), &emit_acd(c))?;
        files.push(rel);
    }
    let rel = format!("{CCD_DIR}/{CCD_FILE}");
    write_file(&out.join(&rel), &emit_ccd(&model)?)?;
    files.push(rel);
    let relations_path = out.join(RELATIONS_FILE);
    if dump_relations {
        write_file(&relations_path, &to_artifact_string(&relations))?;
        files.push(RELATIONS_FILE.to_string());
    } else if relations_path.is_file() {
        std::fs::remove_file(&relations_path).map_err(|e| Error::io(&relations_path, e))?;
    }
    Ok(SynthesisOutput { model, relations, files })
}

pub fn run_evaluate(recovered: &Path, reference: &Path, diags: &mut Diagnostics) -> Result<EvaluationReport> {
    let rec = load_model(recovered, diags)?;
    let refr = load_model(reference, diags)?;
    Ok(evaluate(&rec, &refr))
}

/// Renders `template` over the two artifacts in `out`.
pub fn run_prompt(out: &Path, template: &str) -> Result<String> {
    let inventory_text = read_artifact(out, NODE_INVENTORY_FILE, Stage::Extract.as_str())?;
    let ldd_text = read_artifact(out, LAUNCH_DESCRIPTION_FILE, Stage::LaunchGraph.as_str())?;
    let inventory = parse_node_inventory(&inventory_text, &out.join(NODE_INVENTORY_FILE))?;
    let ldd = parse_launch_dependency_json(&ldd_text, &out.join(LAUNCH_DESCRIPTION_FILE))?;
    render_prompt(template, &inventory, &ldd)
}

/// Digest records for every artifact the pipeline owns in `out`.
pub fn collect_artifacts(out: &Path) -> Result<Vec<ArtifactRecord>> {
    let mut records = Vec::new();
    for entry in walkdir::WalkDir::new(out).sort_by_file_name() {
        let entry = entry.map_err(|e| Error::Input(format!("{}: {e}", out.display())))?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry
            .path()
            .strip_prefix(out)
            .expect("walk stays under out")
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect::<Vec<_>>()
            .join("/");
        let owned = rel == NODE_INVENTORY_FILE
            || rel == LAUNCH_DESCRIPTION_FILE
            || rel == RELATIONS_FILE
            || rel == EVALUATION_FILE
            || (rel.ends_with(".puml") && (rel.starts_with("acd/") || rel.starts_with("ccd/")));
        if !owned {
            continue;
        }
        let bytes = std::fs::read(entry.path()).map_err(|e| Error::io(entry.path(), e))?;
        records.push(ArtifactRecord {
            sha256: sha256_hex(&bytes),
            bytes: bytes.len() as u64,
            path: rel,
        });
    }
    records.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(records)
}

/// Runs extract, launch-graph, link, resolve and synthesize in order, then
/// evaluates when a reference is configured. A nonexistent repository is
/// an error with no artifacts; any later failure still writes the
/// manifest, naming the stage that failed.
pub async fn run_pipeline(config: &RecoveryJobConfig, llm: &LlmConfig) -> Result<PipelineReport> {
    check_paths(&config.repo_root, &config.out_dir)?;
    let out = config.out_dir.as_path();
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;

    let mut diags = Diagnostics::new();
    let mut completed = Vec::new();
    let mut evaluation = None;
    let mut descriptions_generated = 0;
    let llm = if config.llm_enabled { llm.clone() } else { LlmConfig::disabled() };

    let result: std::result::Result<(), (Stage, Error)> = async {
        let mut inventory =
            run_extract(&config.repo_root, out, &mut diags).map_err(|e| (Stage::Extract, e))?;
        completed.push(Stage::Extract);
        let ldd = run_launch_graph(&config.repo_root, out, &config.roots, &mut diags)
            .map_err(|e| (Stage::LaunchGraph, e))?;
        completed.push(Stage::LaunchGraph);

        descriptions_generated = enrich_descriptions(&mut inventory, &ldd, &llm, &mut diags)
            .await
            .map_err(|e| (Stage::Extract, e))?;
        if descriptions_generated > 0 {
            let text = emit_node_inventory(&inventory).map_err(|e| (Stage::Extract, e))?;
            write_file(&out.join(NODE_INVENTORY_FILE), &text).map_err(|e| (Stage::Extract, e))?;
        }

        run_synthesize(out, config.dump_relations, &mut diags).map_err(|e| (Stage::Synthesize, e))?;
        completed.extend([Stage::Link, Stage::Resolve, Stage::Synthesize]);

        if let Some(reference) = &config.reference {
            let report = run_evaluate(out, reference, &mut diags).map_err(|e| (Stage::Evaluate, e))?;
            write_file(&out.join(EVALUATION_FILE), &to_artifact_string(&report))
                .map_err(|e| (Stage::Evaluate, e))?;
            evaluation = Some(report);
            completed.push(Stage::Evaluate);
        }
        Ok(())
    }
    .await;

    let (status, failed_stage, error_class, error) = match result {
        Ok(()) => {
            let below = match (&evaluation, config.fail_under) {
                (Some(r), Some(t)) => !r.below(t).is_empty(),
                _ => false,
            };
            let status = if below { RunStatus::BelowThreshold } else { RunStatus::Ok };
            (status, None, None, None)
        }
        Err((stage, e)) => (RunStatus::Failed, Some(stage), Some(e.class()), Some(e.to_string())),
    };
    if let Some(e) = &error {
        diags.error("stage_failed", None, e.clone());
    }

    let manifest = RunManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        status,
        stages_completed: completed,
        failed_stage,
        error,
        artifacts: collect_artifacts(out)?,
    };
    write_file(&out.join(MANIFEST_FILE), &to_artifact_string(&manifest))?;
    if let Some(path) = &config.diagnostics_path {
        write_diagnostics(path, &diags)?;
    }
    Ok(PipelineReport {
        manifest,
        diagnostics: diags,
        evaluation,
        descriptions_generated,
        error_class,
    })
}

/// One JSON object per line.
pub fn write_diagnostics(path: &Path, diags: &Diagnostics) -> Result<()> {
    let mut buf = Vec::new();
    diags.write_json_lines(&mut buf).map_err(|e| Error::io(path, e))?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_inside_repo_is_rejected() {
        let repo = tempfile::tempdir().unwrap();
        let err = check_paths(repo.path(), &repo.path().join("out/deeper")).unwrap_err();
        assert_eq!(err.class(), ErrorClass::Input);
        let out = tempfile::tempdir().unwrap();
        assert!(check_paths(repo.path(), &out.path().join("o")).is_ok());
    }

    #[test]
    fn synthesize_without_launch_graph_names_it() {
        let out = tempfile::tempdir().unwrap();
        std::fs::write(out.path().join(NODE_INVENTORY_FILE), "{\"list_packages\": []}").unwrap();
        let err = run_synthesize(out.path(), false, &mut Diagnostics::new()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(LAUNCH_DESCRIPTION_FILE) && msg.contains("launch-graph"), "{msg}");
    }

    #[tokio::test]
    async fn missing_repo_writes_nothing() {
        let out = tempfile::tempdir().unwrap();
        let target = out.path().join("o");
        let config = RecoveryJobConfig::new("/definitely/not/here", &target);
        let err = run_pipeline(&config, &LlmConfig::disabled()).await.unwrap_err();
        assert_eq!(err.class(), ErrorClass::Input);
        assert!(!target.exists());
    }
}
