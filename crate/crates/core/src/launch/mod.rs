//! Launch analysis: static interpretation of launch files into the Launch
//! File Dependency Description, and linking of node instances to atomic
//! classifiers.

mod action;
mod frontend;
mod python;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};

use action::{Action, Env, IncludeDecl, NodeDecl, Text};

use crate::diag::Diagnostics;
use crate::error::{Error, Result};
use crate::extract::{
    is_launch_script, join_rel, rel_path, repo_files, setup_cfg_entry_points, setup_py_entry_points, BuildType,
    NodeInventory, PackageDescriptor,
};
use crate::json::to_artifact_string;
use crate::model::{find_cycle, id_ordinal, instance_id, CompileType, Remapping, Violation};

pub const LAUNCH_DESCRIPTION_FILE: &str = "launch_dependencies.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaunchFormat {
    Script,
    Xml,
    Yaml,
}

impl LaunchFormat {
    /// Format from the file name, for files that look like launch files.
    pub fn infer(path: &Path) -> Option<Self> {
        let name = path.file_name()?.to_str()?;
        if name.ends_with(".py") {
            Some(LaunchFormat::Script)
        } else if name.ends_with(".xml") {
            Some(LaunchFormat::Xml)
        } else if name.ends_with(".yaml") || name.ends_with(".yml") {
            Some(LaunchFormat::Yaml)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LaunchFileEntry {
    pub id: String,
    /// Launch file name.
    #[serde(rename = "type")]
    pub file_type: String,
    pub nodes: Vec<String>,
    pub included_launch_files: Vec<String>,
    /// Group scope pushed inside this file -> ids declared in it.
    pub namespace: BTreeMap<String, Vec<String>>,
    /// Namespace in effect where this file was instantiated.
    pub effective_namespace: String,
    pub path: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unresolved_includes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeInstanceEntry {
    pub id: String,
    pub node_kind: Option<CompileType>,
    pub exec_name: String,
    pub class_name: Option<String>,
    /// Runtime name given in the launch file, if any.
    pub node_name: Option<String>,
    /// Effective namespace, `/` for the global scope.
    pub namespace: String,
    pub remappings: Vec<Remapping>,
    pub package: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LaunchDependencyDescription {
    pub list_launch_file: Vec<LaunchFileEntry>,
    pub list_atom_node_instances: Vec<NodeInstanceEntry>,
    pub roots: Vec<String>,
}

impl LaunchDependencyDescription {
    pub fn entry(&self, id: &str) -> Option<&LaunchFileEntry> {
        self.list_launch_file.iter().find(|e| e.id == id)
    }

    pub fn instance(&self, id: &str) -> Option<&NodeInstanceEntry> {
        self.list_atom_node_instances.iter().find(|n| n.id == id)
    }
}

/// Package lookup used while interpreting launch files.
#[derive(Debug, Clone, Default)]
pub struct PackageIndex {
    roots: BTreeMap<String, PathBuf>,
    build_types: BTreeMap<String, BuildType>,
    python_executables: BTreeMap<String, BTreeSet<String>>,
    rel_roots: BTreeMap<String, String>,
}

impl PackageIndex {
    pub fn new(repo: &Path, packages: &[PackageDescriptor]) -> Self {
        let mut index = PackageIndex::default();
        for p in packages {
            let root = repo.join(&p.root_path);
            let mut execs = BTreeSet::new();
            if p.build_type.has_python() {
                if let Ok(src) = fs::read_to_string(root.join("setup.py")) {
                    execs.extend(setup_py_entry_points(&src).unwrap_or_default().into_iter().map(|e| e.name));
                }
                if let Ok(src) = fs::read_to_string(root.join("setup.cfg")) {
                    execs.extend(setup_cfg_entry_points(&src).into_iter().map(|e| e.name));
                }
            }
            index.roots.insert(p.package_name.clone(), root);
            index.rel_roots.insert(p.package_name.clone(), p.root_path.clone());
            index.build_types.insert(p.package_name.clone(), p.build_type);
            index.python_executables.insert(p.package_name.clone(), execs);
        }
        index
    }

    fn node_kind(&self, package: Option<&str>, exec: &str) -> Option<CompileType> {
        let package = package?;
        match self.build_types.get(package)? {
            BuildType::PythonPackage => Some(CompileType::Python),
            BuildType::CppPackage => Some(CompileType::Cpp),
            BuildType::Mixed => Some(
                if self.python_executables.get(package).is_some_and(|e| e.contains(exec)) {
                    CompileType::Python
                } else {
                    CompileType::Cpp
                },
            ),
        }
    }
}

fn is_ignored_dir(rel: &str) -> bool {
    rel.split('/').any(|seg| matches!(seg, "test" | "tests"))
}

/// Launch files of the repository, repo-relative and sorted.
pub fn discover_launch_files(repo: &Path) -> Vec<String> {
    let mut out = Vec::new();
    for path in repo_files(repo) {
        let rel = rel_path(repo, &path);
        if is_ignored_dir(&rel) {
            continue;
        }
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        let in_launch_dir = rel.split('/').rev().skip(1).any(|seg| seg == "launch");
        let named = [".launch.py", ".launch.xml", ".launch.yaml", ".launch.yml"]
            .iter()
            .any(|s| name.ends_with(s));
        let Some(format) = LaunchFormat::infer(&path) else { continue };
        if !(named || in_launch_dir) {
            continue;
        }
        let Ok(src) = fs::read_to_string(&path) else { continue };
        let looks_like_launch = match format {
            LaunchFormat::Script => is_launch_script(&rel, &src) && src.contains("generate_launch_description"),
            LaunchFormat::Xml => src.contains("<launch"),
            LaunchFormat::Yaml => src.lines().any(|l| l.trim_end() == "launch:"),
        };
        if looks_like_launch {
            out.push(rel);
        }
    }
    out
}

/// Parses one launch file into actions.
pub(crate) fn parse_launch_file(
    rel: &str,
    src: &str,
    format: LaunchFormat,
    diags: &mut Diagnostics,
) -> Option<Vec<Action>> {
    match format {
        LaunchFormat::Script => python::parse_python_launch(rel, src.to_string(), diags),
        LaunchFormat::Xml => frontend::parse_xml_launch(rel, src, diags),
        LaunchFormat::Yaml => frontend::parse_yaml_launch(rel, src, diags),
    }
}

/// `/a/b` joined onto `base`; absolute `ns` replaces it.
pub fn join_namespace(base: &str, ns: &str) -> String {
    let joined = if ns.starts_with('/') {
        ns.to_string()
    } else {
        format!("{base}/{ns}")
    };
    normalize_namespace(&joined)
}

/// `main`, `/main/`, `//main` -> `/main`; empty -> `/`.
pub fn normalize_namespace(ns: &str) -> String {
    let segments: Vec<&str> = ns.split('/').filter(|s| !s.is_empty()).collect();
    format!("/{}", segments.join("/"))
}

#[derive(Clone)]
struct Scope {
    args: BTreeMap<String, String>,
    namespace: String,
    /// Group scope key local to the current file.
    local: Option<String>,
    remaps: Vec<Remapping>,
}

struct Builder<'a> {
    repo: &'a Path,
    index: &'a PackageIndex,
    cache: BTreeMap<String, Option<Vec<Action>>>,
    ldd: LaunchDependencyDescription,
    stack: Vec<String>,
    /// Only record direct includes; do not descend.
    shallow: bool,
    direct_includes: Vec<String>,
}

impl<'a> Builder<'a> {
    fn new(repo: &'a Path, index: &'a PackageIndex, shallow: bool) -> Self {
        Self {
            repo,
            index,
            cache: BTreeMap::new(),
            ldd: LaunchDependencyDescription::default(),
            stack: Vec::new(),
            shallow,
            direct_includes: Vec::new(),
        }
    }

    fn actions(&mut self, rel: &str, diags: &mut Diagnostics) -> Option<Vec<Action>> {
        if let Some(cached) = self.cache.get(rel) {
            return cached.clone();
        }
        let path = self.repo.join(rel);
        let parsed = match (fs::read_to_string(&path), LaunchFormat::infer(&path)) {
            (Ok(src), Some(format)) => parse_launch_file(rel, &src, format, diags),
            (Ok(_), None) => {
                diags.warn("unparseable_launch", Some(rel), "unknown launch file format");
                None
            }
            (Err(e), _) => {
                diags.warn("unreadable_launch", Some(rel), e.to_string());
                None
            }
        };
        self.cache.insert(rel.to_string(), parsed.clone());
        parsed
    }

    fn instantiate(&mut self, rel: &str, scope: Scope, diags: &mut Diagnostics) -> Result<String> {
        if let Some(pos) = self.stack.iter().position(|s| s == rel) {
            let mut cycle: Vec<String> = self.stack[pos..].to_vec();
            cycle.push(rel.to_string());
            return Err(Error::IncludeCycle { cycle });
        }
        let id = instance_id("lf", self.ldd.list_launch_file.len() + 1);
        let file_type = rel.rsplit('/').next().unwrap_or(rel).to_string();
        self.ldd.list_launch_file.push(LaunchFileEntry {
            id: id.clone(),
            file_type,
            nodes: Vec::new(),
            included_launch_files: Vec::new(),
            namespace: BTreeMap::new(),
            effective_namespace: scope.namespace.clone(),
            path: rel.to_string(),
            unresolved_includes: Vec::new(),
        });
        let entry = self.ldd.list_launch_file.len() - 1;
        self.stack.push(rel.to_string());
        let actions = self.actions(rel, diags).unwrap_or_default();
        let mut scope = Scope { local: None, ..scope };
        let this_dir = self.repo.join(rel).parent().map(Path::to_path_buf).unwrap_or_default();
        self.run(&actions, &mut scope, entry, rel, &this_dir, diags)?;
        self.stack.pop();
        Ok(id)
    }

    fn run(
        &mut self,
        actions: &[Action],
        scope: &mut Scope,
        entry: usize,
        rel: &str,
        this_dir: &Path,
        diags: &mut Diagnostics,
    ) -> Result<()> {
        for action in actions {
            match action {
                Action::DeclareArgument { name, default } => {
                    if !scope.args.contains_key(name) {
                        if let Some(d) = default {
                            if let Ok(v) = d.resolve(&self.env(scope, this_dir)) {
                                scope.args.insert(name.clone(), v);
                            }
                        }
                    }
                }
                Action::SetArgument { name, value } => match value.resolve(&self.env(scope, this_dir)) {
                    Ok(v) => {
                        scope.args.insert(name.clone(), v);
                    }
                    Err(e) => diags.warn("unresolved_substitution", Some(rel), format!("argument `{name}`: {e}")),
                },
                Action::Node(decl) => self.node(decl, scope, entry, rel, this_dir, diags),
                Action::Include(decl) => self.include(decl, scope, entry, rel, this_dir, diags)?,
                Action::Group {
                    namespace,
                    scoped,
                    actions,
                } => {
                    if *scoped {
                        let mut inner = scope.clone();
                        if let Some(ns) = namespace {
                            self.push_namespace(ns, &mut inner, rel, this_dir, diags);
                        }
                        self.run(actions, &mut inner, entry, rel, this_dir, diags)?;
                    } else {
                        if let Some(ns) = namespace {
                            self.push_namespace(ns, scope, rel, this_dir, diags);
                        }
                        self.run(actions, scope, entry, rel, this_dir, diags)?;
                    }
                }
                Action::PushNamespace(ns) => self.push_namespace(ns, scope, rel, this_dir, diags),
                Action::SetRemap(from, to) => {
                    let env = self.env(scope, this_dir);
                    match (from.resolve(&env), to.resolve(&env)) {
                        (Ok(f), Ok(t)) => scope.remaps.push(Remapping::new(f, t)),
                        (Err(e), _) | (_, Err(e)) => {
                            diags.warn("unresolved_substitution", Some(rel), format!("SetRemap skipped: {e}"))
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn env<'s>(&'s self, scope: &'s Scope, this_dir: &'s Path) -> Env<'s> {
        Env {
            args: &scope.args,
            this_dir,
            package_roots: &self.index.roots,
        }
    }

    fn push_namespace(&self, ns: &Text, scope: &mut Scope, rel: &str, this_dir: &Path, diags: &mut Diagnostics) {
        let value = match ns.resolve(&self.env(scope, this_dir)) {
            Ok(v) => v,
            Err(e) => {
                diags.warn(
                    "unresolved_substitution",
                    Some(rel),
                    format!("namespace `{}`: {e}; not pushed", ns.describe()),
                );
                return;
            }
        };
        if value.trim_matches('/').is_empty() && !value.starts_with('/') {
            return;
        }
        scope.namespace = join_namespace(&scope.namespace, &value);
        let trimmed = value.trim_end_matches('/');
        scope.local = Some(match (&scope.local, trimmed.starts_with('/')) {
            (_, true) => normalize_namespace(trimmed),
            (Some(outer), false) if !outer.is_empty() => {
                format!("{outer}/{}", trimmed.trim_start_matches('/'))
            }
            _ => trimmed.to_string(),
        });
    }

    #[allow(clippy::too_many_arguments)]
    fn resolve_or_describe(
        &self,
        text: Option<&Text>,
        scope: &Scope,
        this_dir: &Path,
        what: &str,
        line: usize,
        rel: &str,
        diags: &mut Diagnostics,
    ) -> Option<String> {
        let text = text?;
        match text.resolve(&self.env(scope, this_dir)) {
            Ok(v) => Some(v),
            Err(e) => {
                diags.warn(
                    "unresolved_substitution",
                    Some(rel),
                    format!("{what} at line {line}: {e}"),
                );
                Some(text.describe())
            }
        }
    }

    fn node(
        &mut self,
        decl: &NodeDecl,
        scope: &Scope,
        entry: usize,
        rel: &str,
        this_dir: &Path,
        diags: &mut Diagnostics,
    ) {
        let line = decl.line;
        let package = self.resolve_or_describe(decl.package.as_ref(), scope, this_dir, "package", line, rel, diags);
        let exec_name = self
            .resolve_or_describe(decl.executable.as_ref(), scope, this_dir, "executable", line, rel, diags)
            .unwrap_or_else(|| {
                diags.warn("unresolved_element", Some(rel), format!("node at line {line} has no executable"));
                "?".to_string()
            });
        let node_name = self.resolve_or_describe(decl.name.as_ref(), scope, this_dir, "node name", line, rel, diags);
        let namespace = match self.resolve_or_describe(decl.namespace.as_ref(), scope, this_dir, "namespace", line, rel, diags) {
            Some(ns) => join_namespace(&scope.namespace, &ns),
            None => scope.namespace.clone(),
        };
        let env = self.env(scope, this_dir);
        let mut remappings = Vec::new();
        for (from, to) in &decl.remappings {
            match (from.resolve(&env), to.resolve(&env)) {
                (Ok(f), Ok(t)) => remappings.push(Remapping::new(f, t)),
                (Err(e), _) | (_, Err(e)) => {
                    diags.warn("unresolved_substitution", Some(rel), format!("remapping at line {line} skipped: {e}"))
                }
            }
        }
        // Node-level rules take precedence over inherited SetRemap rules.
        remappings.extend(scope.remaps.iter().cloned());

        let id = instance_id("n", self.ldd.list_atom_node_instances.len() + 1);
        self.ldd.list_atom_node_instances.push(NodeInstanceEntry {
            id: id.clone(),
            node_kind: self.index.node_kind(package.as_deref(), &exec_name),
            exec_name,
            class_name: None,
            node_name,
            namespace,
            remappings,
            package,
        });
        let e = &mut self.ldd.list_launch_file[entry];
        e.nodes.push(id.clone());
        if let Some(key) = &scope.local {
            e.namespace.entry(key.clone()).or_default().push(id);
        }
    }

    fn include(
        &mut self,
        decl: &IncludeDecl,
        scope: &Scope,
        entry: usize,
        rel: &str,
        this_dir: &Path,
        diags: &mut Diagnostics,
    ) -> Result<()> {
        let env = self.env(scope, this_dir);
        let target = match decl.path.resolve(&env) {
            Ok(p) => self.locate(&p, this_dir),
            Err(e) => {
                diags.warn(
                    "unresolved_include",
                    Some(rel),
                    format!("include at line {}: {e}", decl.line),
                );
                Err(decl.path.describe())
            }
        };
        let target = match target {
            Ok(t) => t,
            Err(shown) => {
                diags.warn(
                    "missing_include",
                    Some(rel),
                    format!("included file `{shown}` (line {}) not found; recorded as unresolved", decl.line),
                );
                self.ldd.list_launch_file[entry].unresolved_includes.push(shown);
                return Ok(());
            }
        };

        if self.shallow {
            self.direct_includes.push(target);
            return Ok(());
        }

        let mut child = scope.clone();
        for (name, value) in &decl.arguments {
            match value.resolve(&env) {
                Ok(v) => {
                    child.args.insert(name.clone(), v);
                }
                Err(e) => diags.warn(
                    "unresolved_substitution",
                    Some(rel),
                    format!("launch argument `{name}` at line {}: {e}", decl.line),
                ),
            }
        }
        let local = scope.local.clone();
        let id = self.instantiate(&target, child, diags)?;
        let e = &mut self.ldd.list_launch_file[entry];
        e.included_launch_files.push(id.clone());
        if let Some(key) = local {
            e.namespace.entry(key).or_default().push(id);
        }
        Ok(())
    }

    /// Maps an evaluated include path to a repo-relative launch file.
    /// `Err` carries the path as shown in diagnostics.
    fn locate(&self, path: &str, this_dir: &Path) -> std::result::Result<String, String> {
        let candidate = if Path::new(path).is_absolute() {
            PathBuf::from(path)
        } else {
            this_dir.join(path)
        };
        let candidate = lexical_normalize(&candidate);
        let shown = match candidate.strip_prefix(self.repo) {
            Ok(r) => rel_path(Path::new(""), r),
            Err(_) => path.to_string(),
        };
        if candidate.is_file() && candidate.starts_with(self.repo) {
            return Ok(rel_path(self.repo, &candidate));
        }
        // Installed share layouts rarely mirror the source tree; fall back
        // to a unique file of the same name inside the owning package.
        let owner = self
            .index
            .roots
            .iter()
            .filter(|(_, root)| candidate.starts_with(root))
            .max_by_key(|(_, root)| root.components().count());
        if let (Some((pkg, _)), Some(name)) = (owner, candidate.file_name()) {
            let root_rel = &self.index.rel_roots[pkg];
            let matches: Vec<String> = repo_files(&self.index.roots[pkg])
                .into_iter()
                .filter(|p| p.file_name() == Some(name))
                .map(|p| rel_path(self.repo, &p))
                .filter(|p| p.starts_with(root_rel.as_str()) || root_rel.is_empty())
                .collect();
            if let [only] = matches.as_slice() {
                return Ok(only.clone());
            }
        }
        Err(shown)
    }
}

fn lexical_normalize(path: &Path) -> PathBuf {
    let mut out = PathBuf::new();
    for c in path.components() {
        match c {
            Component::ParentDir => {
                out.pop();
            }
            Component::CurDir => {}
            other => out.push(other.as_os_str()),
        }
    }
    out
}

fn root_scope() -> Scope {
    Scope {
        args: BTreeMap::new(),
        namespace: "/".into(),
        local: None,
        remaps: Vec::new(),
    }
}

/// Root launch files: the given ones, or every launch file no other launch
/// file includes. Include cycles in the static include graph are fatal.
pub fn select_roots(
    repo: &Path,
    index: &PackageIndex,
    explicit: &[PathBuf],
    diags: &mut Diagnostics,
) -> Result<Vec<String>> {
    if !explicit.is_empty() {
        let mut out = Vec::new();
        for root in explicit {
            let abs = if root.is_absolute() { root.clone() } else { repo.join(root) };
            let abs = lexical_normalize(&abs);
            if !abs.is_file() {
                return Err(Error::Input(format!("root launch file {} does not exist", root.display())));
            }
            let canonical_repo = lexical_normalize(repo);
            if !abs.starts_with(&canonical_repo) {
                return Err(Error::Input(format!(
                    "root launch file {} is outside the repository",
                    root.display()
                )));
            }
            out.push(rel_path(&canonical_repo, &abs));
        }
        return Ok(out);
    }

    let files = discover_launch_files(repo);
    let mut graph: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut scratch = Diagnostics::new();
    for file in &files {
        let mut probe = Builder::new(repo, index, true);
        probe.instantiate(file, root_scope(), &mut scratch)?;
        graph.insert(file.clone(), probe.direct_includes);
    }
    let borrowed: BTreeMap<&str, Vec<&str>> = graph
        .iter()
        .map(|(k, v)| (k.as_str(), v.iter().map(String::as_str).collect()))
        .collect();
    if let Some(cycle) = find_cycle(&borrowed) {
        return Err(Error::IncludeCycle { cycle });
    }
    let included: BTreeSet<&str> = graph.values().flatten().map(String::as_str).collect();
    let roots: Vec<String> = files.iter().filter(|f| !included.contains(f.as_str())).cloned().collect();
    if roots.is_empty() && !files.is_empty() {
        diags.warn("no_root", None, "every launch file is included by another");
    }
    Ok(roots)
}

/// Transitively interprets the roots, assigning `lf`/`n` ids depth-first in
/// declaration order.
pub fn build_launch_dependency_description(
    repo: &Path,
    index: &PackageIndex,
    roots: &[String],
    diags: &mut Diagnostics,
) -> Result<LaunchDependencyDescription> {
    let mut builder = Builder::new(repo, index, false);
    let mut root_ids = Vec::new();
    for root in roots {
        root_ids.push(builder.instantiate(root, root_scope(), diags)?);
    }
    let mut ldd = builder.ldd;
    ldd.roots = root_ids;

    let mut seen: BTreeMap<(String, String), String> = BTreeMap::new();
    for n in &ldd.list_atom_node_instances {
        let Some(name) = &n.node_name else { continue };
        if let Some(first) = seen.insert((name.clone(), n.namespace.clone()), n.id.clone()) {
            diags.error(
                "duplicate_node_name",
                None,
                format!("{} and {} share node name `{name}` in namespace `{}`", first, n.id, n.namespace),
            );
        }
    }
    Ok(ldd)
}

pub fn validate_launch_description(ldd: &LaunchDependencyDescription) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut v = |element: String, message: String| out.push(Violation { element, message });
    let entry_ids: BTreeSet<&str> = ldd.list_launch_file.iter().map(|e| e.id.as_str()).collect();
    let node_ids: BTreeSet<&str> = ldd.list_atom_node_instances.iter().map(|n| n.id.as_str()).collect();
    if entry_ids.len() != ldd.list_launch_file.len() {
        v("list_launch_file".into(), "launch file ids are not unique".into());
    }
    if node_ids.len() != ldd.list_atom_node_instances.len() {
        v("list_atom_node_instances".into(), "node instance ids are not unique".into());
    }
    let mut node_refs: BTreeMap<&str, usize> = BTreeMap::new();
    let mut include_refs: BTreeSet<&str> = BTreeSet::new();
    for e in &ldd.list_launch_file {
        let element = format!("launch file {}", e.id);
        for n in &e.nodes {
            *node_refs.entry(n).or_default() += 1;
            if !node_ids.contains(n.as_str()) {
                v(element.clone(), format!("node `{n}` is not described"));
            }
        }
        for i in &e.included_launch_files {
            include_refs.insert(i);
            if !entry_ids.contains(i.as_str()) {
                v(element.clone(), format!("included launch file `{i}` is not described"));
            }
        }
        for (scope, ids) in &e.namespace {
            for id in ids {
                if !e.nodes.contains(id) && !e.included_launch_files.contains(id) {
                    v(element.clone(), format!("`{id}` in scope `{scope}` is not declared by this file"));
                }
            }
        }
    }
    for n in &ldd.list_atom_node_instances {
        if node_refs.get(n.id.as_str()).copied().unwrap_or(0) != 1 {
            v(format!("node {}", n.id), "must be referenced by exactly one launch file".into());
        }
        if !n.namespace.starts_with('/') {
            v(format!("node {}", n.id), format!("namespace `{}` is not absolute", n.namespace));
        }
    }
    let expected_roots: Vec<&str> = ldd
        .list_launch_file
        .iter()
        .map(|e| e.id.as_str())
        .filter(|id| !include_refs.contains(id))
        .collect();
    let roots: Vec<&str> = ldd.roots.iter().map(String::as_str).collect();
    if roots != expected_roots {
        v("roots".into(), format!("expected roots {expected_roots:?}, found {roots:?}"));
    }
    let graph: BTreeMap<&str, Vec<&str>> = ldd
        .list_launch_file
        .iter()
        .map(|e| (e.id.as_str(), e.included_launch_files.iter().map(String::as_str).collect()))
        .collect();
    if let Some(cycle) = find_cycle(&graph) {
        v("include graph".into(), format!("cycle {}", cycle.join(" -> ")));
    }
    out
}

pub fn emit_launch_dependency_json(ldd: &LaunchDependencyDescription) -> Result<String> {
    let violations = validate_launch_description(ldd);
    if !violations.is_empty() {
        return Err(Error::InvariantViolation {
            artifact: LAUNCH_DESCRIPTION_FILE,
            violations: violations.iter().map(ToString::to_string).collect(),
        });
    }
    Ok(to_artifact_string(ldd))
}

pub fn parse_launch_dependency_json(src: &str, path: &Path) -> Result<LaunchDependencyDescription> {
    serde_json::from_str(src).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Result of linking one node instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "classifier")]
pub enum Link {
    Matched(String),
    Unmatched,
}

/// Matches instances to classifiers, first by execution identity (same
/// package preferred), then by class name.
pub fn link_instances_to_classifiers(
    ldd: &LaunchDependencyDescription,
    inventory: &NodeInventory,
    diags: &mut Diagnostics,
) -> BTreeMap<String, Link> {
    let classifiers: Vec<(&str, &crate::model::AtomicRosNodeClassifier)> = inventory.with_packages().collect();
    let mut out = BTreeMap::new();
    for n in &ldd.list_atom_node_instances {
        let short_exec = n.exec_name.rsplit("::").next().unwrap_or(&n.exec_name);
        let by_exec: Vec<_> = classifiers
            .iter()
            .filter(|(_, c)| c.execution.as_deref() == Some(n.exec_name.as_str()))
            .collect();
        let same_package: Vec<_> = by_exec
            .iter()
            .filter(|(p, _)| Some(*p) == n.package.as_deref())
            .copied()
            .collect();
        let mut candidates: Vec<_> = if !same_package.is_empty() { same_package } else { by_exec };
        if candidates.is_empty() {
            let class = n.class_name.as_deref().unwrap_or(short_exec);
            let by_class: Vec<_> = classifiers.iter().filter(|(_, c)| c.class_name == class).collect();
            let same_package: Vec<_> = by_class
                .iter()
                .filter(|(p, _)| Some(*p) == n.package.as_deref())
                .copied()
                .collect();
            candidates = if !same_package.is_empty() { same_package } else { by_class };
        }
        candidates.sort_by_key(|(_, c)| id_ordinal(&c.id));
        let link = match candidates.as_slice() {
            [] => {
                diags.warn(
                    "unmatched_instance",
                    None,
                    format!(
                        "{}: no classifier for executable `{}`{}",
                        n.id,
                        n.exec_name,
                        n.package.as_deref().map(|p| format!(" of package `{p}`")).unwrap_or_default()
                    ),
                );
                Link::Unmatched
            }
            [(_, only)] => Link::Matched(only.id.clone()),
            [(_, first), rest @ ..] => {
                diags.warn(
                    "ambiguous_match",
                    None,
                    format!(
                        "{}: `{}` matches {} and {}; using {}",
                        n.id,
                        n.exec_name,
                        first.id,
                        rest.iter().map(|(_, c)| c.id.as_str()).collect::<Vec<_>>().join(", "),
                        first.id
                    ),
                );
                Link::Matched(first.id.clone())
            }
        };
        out.insert(n.id.clone(), link);
    }
    out
}

/// Fills `class_name` (and `node_kind` where unknown) from linked
/// classifiers.
pub fn annotate_with_inventory(
    ldd: &mut LaunchDependencyDescription,
    inventory: &NodeInventory,
    links: &BTreeMap<String, Link>,
) {
    for n in &mut ldd.list_atom_node_instances {
        if let Some(Link::Matched(id)) = links.get(&n.id) {
            if let Some(c) = inventory.classifiers().find(|c| &c.id == id) {
                n.class_name = Some(c.class_name.clone());
                n.node_kind = Some(c.compile_type);
            }
        }
    }
}

/// Package-relative form of a launch path, for display.
pub fn display_path(index: &PackageIndex, rel: &str) -> String {
    for (pkg, root) in &index.rel_roots {
        if !root.is_empty() {
            if let Some(rest) = rel.strip_prefix(&format!("{root}/")) {
                return join_rel(pkg, rest);
            }
        }
    }
    rel.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn namespace_joining() {
        assert_eq!(join_namespace("/", "main"), "/main");
        assert_eq!(join_namespace("/main", "sub/"), "/main/sub");
        assert_eq!(join_namespace("/main", "/abs"), "/abs");
        assert_eq!(normalize_namespace(""), "/");
        assert_eq!(normalize_namespace("//a//b/"), "/a/b");
    }

    #[test]
    fn empty_description_round_trips() {
        let ldd = LaunchDependencyDescription::default();
        let json = emit_launch_dependency_json(&ldd).unwrap();
        assert!(json.contains("\"list_launch_file\": []"));
        let back = parse_launch_dependency_json(&json, Path::new("x")).unwrap();
        assert_eq!(emit_launch_dependency_json(&back).unwrap(), json);
    }
}
