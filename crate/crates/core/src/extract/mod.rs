//! Node extraction: packages, atomic node classifiers, ports and execution
//! identities, serialized as the List of Atomic ROS Nodes.
//!
//! Extraction is static pattern matching over syntax trees; repository code
//! is never executed.

mod build;
mod cpp;
mod python;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::diag::Diagnostics;
use crate::error::{Error, Result};
use crate::json::to_artifact_string;
use crate::model::{
    classifier_id, validate_atomic, AtomicRosNodeClassifier, CommunicationPort, CompileType, PortKind, Violation,
};

pub(crate) use build::{parse_package_xml, setup_cfg_entry_points, setup_py_entry_points};
pub(crate) use python::is_launch_script;

pub const NODE_INVENTORY_FILE: &str = "atomic_ros_nodes.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuildType {
    PythonPackage,
    CppPackage,
    Mixed,
}

impl BuildType {
    pub fn has_python(self) -> bool {
        matches!(self, BuildType::PythonPackage | BuildType::Mixed)
    }

    pub fn has_cpp(self) -> bool {
        matches!(self, BuildType::CppPackage | BuildType::Mixed)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackageDescriptor {
    pub package_name: String,
    /// Repository-relative, `/`-separated; empty for a package at the root.
    pub root_path: String,
    pub manifest_path: String,
    pub build_type: BuildType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackageEntry {
    pub package_name: String,
    pub list_atomic_ros_node_classifiers: Vec<AtomicRosNodeClassifier>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeInventory {
    pub list_packages: Vec<PackageEntry>,
}

impl NodeInventory {
    pub fn classifiers(&self) -> impl Iterator<Item = &AtomicRosNodeClassifier> {
        self.list_packages
            .iter()
            .flat_map(|p| &p.list_atomic_ros_node_classifiers)
    }

    pub fn classifiers_mut(&mut self) -> impl Iterator<Item = &mut AtomicRosNodeClassifier> {
        self.list_packages
            .iter_mut()
            .flat_map(|p| &mut p.list_atomic_ros_node_classifiers)
    }

    /// Classifiers paired with their owning package name.
    pub fn with_packages(&self) -> impl Iterator<Item = (&str, &AtomicRosNodeClassifier)> {
        self.list_packages.iter().flat_map(|p| {
            p.list_atomic_ros_node_classifiers
                .iter()
                .map(move |c| (p.package_name.as_str(), c))
        })
    }
}

/// A port as found in source, before conversion to the model type.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct RawPort {
    pub kind: PortKind,
    pub interface_type: String,
    pub declared_name: String,
    pub callback_name: Option<String>,
    pub unresolved: bool,
}

impl From<RawPort> for CommunicationPort {
    fn from(p: RawPort) -> Self {
        CommunicationPort {
            kind: p.kind,
            interface_type: p.interface_type,
            declared_name: p.declared_name,
            callback_name: p.callback_name,
            unresolved: p.unresolved,
        }
    }
}

const IGNORE_MARKERS: [&str; 3] = ["COLCON_IGNORE", "AMENT_IGNORE", "CATKIN_IGNORE"];

fn skip_dir(path: &Path) -> bool {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
    (name.starts_with('.') && name.len() > 1)
        || name == "__pycache__"
        || IGNORE_MARKERS.iter().any(|m| path.join(m).exists())
}

pub(crate) fn rel_path(repo: &Path, path: &Path) -> String {
    path.strip_prefix(repo)
        .unwrap_or(path)
        .components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

pub(crate) fn join_rel(root: &str, rest: &str) -> String {
    if root.is_empty() {
        rest.to_string()
    } else {
        format!("{root}/{rest}")
    }
}

/// Files under `repo`, sorted, with ignored and hidden directories pruned.
pub(crate) fn repo_files(repo: &Path) -> Vec<PathBuf> {
    WalkDir::new(repo)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| !(e.file_type().is_dir() && e.depth() > 0 && skip_dir(e.path())))
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_file())
        .map(|e| e.into_path())
        .collect()
}

/// One descriptor per directory holding a `package.xml`, sorted by name.
pub fn scan_packages(repo: &Path, diags: &mut Diagnostics) -> Result<Vec<PackageDescriptor>> {
    let meta = fs::metadata(repo).map_err(|e| Error::io(repo, e))?;
    if !meta.is_dir() {
        return Err(Error::Input(format!("{} is not a directory", repo.display())));
    }
    fs::read_dir(repo).map_err(|e| Error::io(repo, e))?;

    let mut found = Vec::new();
    for path in repo_files(repo) {
        if path.file_name().and_then(|n| n.to_str()) != Some("package.xml") {
            continue;
        }
        let manifest_path = rel_path(repo, &path);
        let src = match fs::read_to_string(&path) {
            Ok(s) => s,
            Err(e) => {
                diags.warn("unreadable_manifest", Some(&manifest_path), e.to_string());
                continue;
            }
        };
        let manifest = match parse_package_xml(&src) {
            Ok(m) => m,
            Err(e) => {
                diags.warn(
                    "malformed_manifest",
                    Some(&manifest_path),
                    format!("{e}; package skipped"),
                );
                continue;
            }
        };
        let dir = path.parent().unwrap_or(repo);
        let has_py = dir.join("setup.py").exists() || dir.join("setup.cfg").exists();
        let has_cmake = dir.join("CMakeLists.txt").exists();
        let build_type = match (has_py, has_cmake, manifest.build_type.as_deref()) {
            (true, true, _) => BuildType::Mixed,
            (true, false, _) => BuildType::PythonPackage,
            (false, true, _) => BuildType::CppPackage,
            (false, false, Some("ament_python")) => BuildType::PythonPackage,
            (false, false, _) => BuildType::CppPackage,
        };
        found.push(PackageDescriptor {
            package_name: manifest.name,
            root_path: rel_path(repo, dir),
            manifest_path,
            build_type,
        });
    }

    found.sort_by(|a, b| a.package_name.cmp(&b.package_name).then(a.root_path.cmp(&b.root_path)));
    let mut out: Vec<PackageDescriptor> = Vec::new();
    for pkg in found {
        if let Some(first) = out.iter().find(|p| p.package_name == pkg.package_name) {
            diags.warn(
                "duplicate_package",
                Some(&pkg.manifest_path),
                format!(
                    "package `{}` already declared by {}; skipped",
                    pkg.package_name, first.manifest_path
                ),
            );
            continue;
        }
        out.push(pkg);
    }
    Ok(out)
}

/// Files that belong to `package`: under its root, outside nested packages.
fn package_files(repo: &Path, package: &PackageDescriptor) -> Vec<(String, PathBuf)> {
    let root = repo.join(&package.root_path);
    WalkDir::new(&root)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| {
            !(e.file_type().is_dir()
                && e.depth() > 0
                && (skip_dir(e.path()) || e.path().join("package.xml").exists()))
        })
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_file())
        .map(|e| {
            let local = rel_path(&root, e.path());
            (local, e.into_path())
        })
        .collect()
}

fn is_test_path(local: &str) -> bool {
    local
        .split('/')
        .any(|seg| matches!(seg, "test" | "tests" | "testing"))
}

/// Execution identities per class, from entry points or build targets.
pub fn resolve_executables(
    repo: &Path,
    package: &PackageDescriptor,
    diags: &mut Diagnostics,
) -> BTreeMap<String, Vec<String>> {
    let analysis = analyze_package(repo, package, diags);
    analysis
        .nodes
        .into_iter()
        .filter(|n| !n.executions.is_empty())
        .map(|n| (n.class_name, n.executions.into_iter().collect()))
        .collect()
}

/// Atomic classifiers of one package, numbered from `arc_1`; the inventory
/// renumbers them globally.
pub fn extract_atomic_nodes(
    repo: &Path,
    package: &PackageDescriptor,
    diags: &mut Diagnostics,
) -> Vec<AtomicRosNodeClassifier> {
    let analysis = analyze_package(repo, package, diags);
    let mut out = Vec::new();
    for node in analysis.nodes {
        let mut executions = node.executions.iter();
        let execution = executions.next().cloned();
        let rest: Vec<&String> = executions.collect();
        let file = node.source_file_paths.first().cloned();
        if execution.is_none() {
            diags.warn(
                "no_execution",
                file.as_deref(),
                format!("{}: not reachable from any entry point or build target", node.class_name),
            );
        } else if !rest.is_empty() {
            diags.warn(
                "multiple_executions",
                file.as_deref(),
                format!(
                    "{}: executed by {}; recording `{}`",
                    node.class_name,
                    node.executions.iter().cloned().collect::<Vec<_>>().join(", "),
                    execution.as_deref().unwrap_or_default()
                ),
            );
        }
        let ports: Vec<CommunicationPort> = node.ports.into_iter().map(CommunicationPort::from).collect();
        out.push(AtomicRosNodeClassifier {
            id: String::new(),
            description: describe(&node.class_name, node.node_name.as_deref(), &ports),
            class_name: node.class_name,
            node_name: node.node_name,
            header_file_paths: node.header_file_paths,
            source_file_paths: node.source_file_paths,
            compile_type: node.compile_type,
            execution,
            ports,
        });
    }
    out.sort_by(|a, b| {
        a.source_file_paths
            .first()
            .cmp(&b.source_file_paths.first())
            .then(a.class_name.cmp(&b.class_name))
    });
    for (i, c) in out.iter_mut().enumerate() {
        c.id = classifier_id("arc", i + 1);
    }
    out
}

/// Deterministic description from class name and port summary.
pub fn describe(class_name: &str, node_name: Option<&str>, ports: &[CommunicationPort]) -> String {
    let mut counts: BTreeMap<PortKind, usize> = BTreeMap::new();
    for p in ports {
        *counts.entry(p.kind).or_default() += 1;
    }
    let who = match node_name {
        Some(n) => format!("{class_name} (node `{n}`)"),
        None => class_name.to_string(),
    };
    if counts.is_empty() {
        return format!("{who} declares no communication ports.");
    }
    let parts: Vec<String> = counts
        .iter()
        .map(|(kind, n)| {
            let label = kind.as_str().replace('_', " ");
            if *n == 1 {
                format!("1 {label}")
            } else {
                format!("{n} {label}s")
            }
        })
        .collect();
    format!("{who} declares {}.", parts.join(", "))
}

struct NodeDraft {
    class_name: String,
    node_name: Option<String>,
    header_file_paths: Vec<String>,
    source_file_paths: Vec<String>,
    compile_type: CompileType,
    executions: BTreeSet<String>,
    ports: Vec<RawPort>,
}

struct PackageAnalysis {
    nodes: Vec<NodeDraft>,
}

fn analyze_package(repo: &Path, package: &PackageDescriptor, diags: &mut Diagnostics) -> PackageAnalysis {
    let files = package_files(repo, package);
    let mut nodes = Vec::new();
    if package.build_type.has_python() {
        nodes.extend(analyze_python(package, &files, diags));
    }
    if package.build_type.has_cpp() {
        nodes.extend(analyze_cpp(package, &files, diags));
    }
    PackageAnalysis { nodes }
}

fn read(path: &Path, rel: &str, diags: &mut Diagnostics) -> Option<String> {
    match fs::read_to_string(path) {
        Ok(s) => Some(s),
        Err(e) => {
            diags.warn("unreadable_source", Some(rel), format!("{e}; file skipped"));
            None
        }
    }
}

fn analyze_python(
    package: &PackageDescriptor,
    files: &[(String, PathBuf)],
    diags: &mut Diagnostics,
) -> Vec<NodeDraft> {
    // Entry points first.
    let mut entry_points = Vec::new();
    for (local, path) in files {
        let rel = join_rel(&package.root_path, local);
        match local.as_str() {
            "setup.py" => {
                let Some(src) = read(path, &rel, diags) else { continue };
                match setup_py_entry_points(&src) {
                    Ok(eps) => entry_points.extend(eps),
                    Err(e) => diags.warn("unparseable_build_file", Some(&rel), format!("{e}; no entry points read")),
                }
            }
            "setup.cfg" => {
                if let Some(src) = read(path, &rel, diags) {
                    entry_points.extend(setup_cfg_entry_points(&src));
                }
            }
            _ => {}
        }
    }
    entry_points.sort();
    entry_points.dedup();

    // module dotted name -> (repo-relative path, analysis)
    let mut modules: BTreeMap<String, (String, python::PyModule)> = BTreeMap::new();
    for (local, path) in files {
        if !local.ends_with(".py") || local == "setup.py" || is_test_path(local) {
            continue;
        }
        let rel = join_rel(&package.root_path, local);
        let Some(src) = read(path, &rel, diags) else { continue };
        if is_launch_script(local, &src) {
            continue;
        }
        let Some(module) = python::analyze_module(&rel, src, diags) else { continue };
        let dotted = module_name(local);
        modules.insert(dotted, (rel, module));
    }

    let mut executions: HashMap<(String, String), BTreeSet<String>> = HashMap::new();
    for ep in &entry_points {
        let Some(module_key) = find_module(&modules, &ep.module) else {
            diags.warn(
                "unresolved_entry_point",
                Some(&package.manifest_path),
                format!("entry point `{}` names module `{}` which was not found", ep.name, ep.module),
            );
            continue;
        };
        for (module, class) in trace_entry(&modules, &module_key, &ep.function) {
            executions.entry((module, class)).or_default().insert(ep.name.clone());
        }
    }

    let mut out = Vec::new();
    for (key, (rel, module)) in &modules {
        for node in &module.nodes {
            out.push(NodeDraft {
                class_name: node.class_name.clone(),
                node_name: node.node_name.clone(),
                header_file_paths: Vec::new(),
                source_file_paths: vec![rel.clone()],
                compile_type: CompileType::Python,
                executions: executions
                    .get(&(key.clone(), node.class_name.clone()))
                    .cloned()
                    .unwrap_or_default(),
                ports: node.ports.clone(),
            });
        }
    }
    out
}

/// `pkg/sub/mod.py` -> `pkg.sub.mod`; `src/` prefixes and `__init__` dropped.
fn module_name(local: &str) -> String {
    let trimmed = local.strip_suffix(".py").unwrap_or(local);
    let trimmed = trimmed.strip_prefix("src/").unwrap_or(trimmed);
    let trimmed = trimmed.strip_suffix("/__init__").unwrap_or(trimmed);
    trimmed.replace('/', ".")
}

fn find_module(modules: &BTreeMap<String, (String, python::PyModule)>, dotted: &str) -> Option<String> {
    if modules.contains_key(dotted) {
        return Some(dotted.to_string());
    }
    // Modules living below an extra directory level.
    modules
        .keys()
        .find(|k| k.ends_with(&format!(".{dotted}")))
        .cloned()
}

/// Node classes an entry function reaches: classes it constructs in its own
/// module or imports, nodes it builds directly, and the same for helper
/// functions it calls (bounded depth).
fn trace_entry(
    modules: &BTreeMap<String, (String, python::PyModule)>,
    module_key: &str,
    function: &str,
) -> BTreeSet<(String, String)> {
    let mut found = BTreeSet::new();
    let mut visited = BTreeSet::new();
    let mut stack = vec![(module_key.to_string(), function.to_string(), 0usize)];
    while let Some((module_key, function, depth)) = stack.pop() {
        if depth > 4 || !visited.insert((module_key.clone(), function.clone())) {
            continue;
        }
        let Some((_, module)) = modules.get(&module_key) else { continue };
        for node in &module.nodes {
            if node.entry_function.as_deref() == Some(function.as_str()) {
                found.insert((module_key.clone(), node.class_name.clone()));
            }
        }
        let Some(callees) = module.function_calls.get(&function) else { continue };
        for callee in callees {
            let head = callee.split('.').next().unwrap_or(callee);
            let last = callee.rsplit('.').next().unwrap_or(callee);
            if callee == last && module.nodes.iter().any(|n| n.class_name == *callee && n.entry_function.is_none()) {
                found.insert((module_key.clone(), callee.clone()));
                continue;
            }
            if callee == last && module.function_calls.contains_key(callee) {
                stack.push((module_key.clone(), callee.clone(), depth + 1));
                continue;
            }
            // Imported: `from pkg.mod import Cls` or `import pkg.mod as m; m.Cls()`.
            let origin = match module.imports.get(head) {
                Some(full) if callee == head => full.clone(),
                Some(full) => format!("{full}{}", &callee[head.len()..]),
                None => continue,
            };
            if let Some((target_module, name)) = origin.rsplit_once('.') {
                if let Some(target_key) = find_module(modules, target_module) {
                    let (_, target) = &modules[&target_key];
                    if target.nodes.iter().any(|n| n.class_name == name && n.entry_function.is_none()) {
                        found.insert((target_key.clone(), name.to_string()));
                    } else if target.function_calls.contains_key(name) {
                        stack.push((target_key, name.to_string(), depth + 1));
                    }
                }
            }
        }
    }
    found
}

fn analyze_cpp(package: &PackageDescriptor, files: &[(String, PathBuf)], diags: &mut Diagnostics) -> Vec<NodeDraft> {
    let mut sources = Vec::new();
    let mut targets = build::CmakeTargets::default();
    for (local, path) in files {
        let rel = join_rel(&package.root_path, local);
        if local == "CMakeLists.txt" {
            let Some(src) = read(path, &rel, diags) else { continue };
            match build::parse_cmake(&src) {
                Ok(commands) => targets = build::cmake_targets(&commands, &package.package_name),
                Err(e) => diags.warn(
                    "unparseable_build_file",
                    Some(&rel),
                    format!("{e}; no build targets read"),
                ),
            }
            continue;
        }
        if !cpp::is_cpp_source(local) || is_test_path(local) {
            continue;
        }
        if let Some(src) = read(path, &rel, diags) {
            sources.push((rel, src));
        }
    }

    let nodes = cpp::analyze_package(sources, diags);

    // Build-target sources, repo-relative.
    let mut exe_sources: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    for (target, srcs) in &targets.executables {
        exe_sources
            .entry(target.as_str())
            .or_default()
            .extend(srcs.iter().map(|s| join_rel(&package.root_path, s)));
    }
    let mut by_file: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for (target, srcs) in &exe_sources {
        for s in srcs {
            by_file.entry(s.as_str()).or_default().insert(target);
        }
    }
    for (file, targets) in &by_file {
        if targets.len() > 1 {
            diags.info(
                "shared_source",
                Some(file),
                format!(
                    "source is part of several executables: {}",
                    targets.iter().copied().collect::<Vec<_>>().join(", ")
                ),
            );
        }
    }

    let mut out = Vec::new();
    for node in nodes {
        let mut executions = BTreeSet::new();
        for (target, srcs) in &exe_sources {
            let evidence = node
                .implemented_in
                .iter()
                .chain(&node.constructed_in)
                .chain(node.defined_in.iter().filter(|f| !cpp::is_header(f)));
            if evidence.into_iter().any(|f| srcs.contains(f)) {
                executions.insert(target.to_string());
            }
        }
        for (plugin, exe) in &targets.components {
            let matches = plugin.trim_start_matches("::") == node.qualified_name
                || plugin.rsplit("::").next() == Some(node.class_name.as_str());
            if matches {
                executions.insert(exe.clone().unwrap_or_else(|| plugin.clone()));
            }
        }

        let all: BTreeSet<&String> = node.defined_in.iter().chain(&node.implemented_in).collect();
        let header_file_paths: Vec<String> = all.iter().filter(|f| cpp::is_header(f)).map(|f| f.to_string()).collect();
        let mut source_file_paths: Vec<String> =
            all.iter().filter(|f| !cpp::is_header(f)).map(|f| f.to_string()).collect();
        if source_file_paths.is_empty() {
            source_file_paths = node
                .constructed_in
                .iter()
                .filter(|f| !cpp::is_header(f))
                .cloned()
                .collect();
        }
        if source_file_paths.is_empty() {
            source_file_paths = header_file_paths.clone();
        }
        out.push(NodeDraft {
            class_name: node.class_name,
            node_name: node.node_name,
            header_file_paths,
            source_file_paths,
            compile_type: CompileType::Cpp,
            executions,
            ports: node.ports,
        });
    }
    out
}

/// Scans `repo` and assembles the inventory with globally numbered ids.
pub fn build_inventory(repo: &Path, diags: &mut Diagnostics) -> Result<(Vec<PackageDescriptor>, NodeInventory)> {
    let packages = scan_packages(repo, diags)?;
    let mut inventory = NodeInventory::default();
    let mut ordinal = 0;
    for package in &packages {
        let mut classifiers = extract_atomic_nodes(repo, package, diags);
        for c in &mut classifiers {
            ordinal += 1;
            c.id = classifier_id("arc", ordinal);
        }
        inventory.list_packages.push(PackageEntry {
            package_name: package.package_name.clone(),
            list_atomic_ros_node_classifiers: classifiers,
        });
    }
    Ok((packages, inventory))
}

pub fn validate_inventory(inventory: &NodeInventory) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut names = BTreeSet::new();
    for p in &inventory.list_packages {
        if !names.insert(p.package_name.as_str()) {
            out.push(Violation {
                element: format!("package {}", p.package_name),
                message: "package_name is not unique".into(),
            });
        }
    }
    for (i, c) in inventory.classifiers().enumerate() {
        let expected = classifier_id("arc", i + 1);
        if c.id != expected {
            out.push(Violation {
                element: format!("classifier {}", c.id),
                message: format!("expected id `{expected}` in inventory order"),
            });
        }
        validate_atomic(c, &mut out);
    }
    out
}

pub fn emit_node_inventory(inventory: &NodeInventory) -> Result<String> {
    let violations = validate_inventory(inventory);
    if !violations.is_empty() {
        return Err(Error::InvariantViolation {
            artifact: NODE_INVENTORY_FILE,
            violations: violations.iter().map(ToString::to_string).collect(),
        });
    }
    Ok(to_artifact_string(inventory))
}

pub fn parse_node_inventory(src: &str, path: &Path) -> Result<NodeInventory> {
    serde_json::from_str(src).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}
