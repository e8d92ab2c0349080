//! Blueprint vocabulary shared by every stage.
//!
//! Design-phase elements ([`AtomicRosNodeClassifier`], [`CommunicationPort`])
//! are kept apart from integration-phase elements ([`RosNodePart`],
//! [`ComposedRosNodeClassifier`], [`CommunicationRelation`]). All types are
//! plain values; nothing here mutates after construction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PortKind {
    Publisher,
    Subscriber,
    ServiceServer,
    ServiceClient,
}

impl PortKind {
    pub const ALL: [PortKind; 4] = [
        PortKind::Publisher,
        PortKind::Subscriber,
        PortKind::ServiceServer,
        PortKind::ServiceClient,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PortKind::Publisher => "publisher",
            PortKind::Subscriber => "subscriber",
            PortKind::ServiceServer => "service_server",
            PortKind::ServiceClient => "service_client",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        PortKind::ALL.into_iter().find(|k| k.as_str() == s)
    }

    pub fn is_service(self) -> bool {
        matches!(self, PortKind::ServiceServer | PortKind::ServiceClient)
    }

    /// Publishers and service servers produce; subscribers and clients consume.
    pub fn is_producer(self) -> bool {
        matches!(self, PortKind::Publisher | PortKind::ServiceServer)
    }

    pub fn requires_callback(self) -> bool {
        matches!(self, PortKind::Subscriber | PortKind::ServiceServer)
    }

    pub fn relation_kind(self) -> RelationKind {
        if self.is_service() {
            RelationKind::Service
        } else {
            RelationKind::Topic
        }
    }
}

impl fmt::Display for PortKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A typed communication interface declared by a node class.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CommunicationPort {
    pub kind: PortKind,
    /// `<pkg>/msg/<Type>` or `<pkg>/srv/<Type>`.
    pub interface_type: String,
    /// Topic or service name as written; the expression text when the name
    /// could not be resolved statically.
    pub declared_name: String,
    pub callback_name: Option<String>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub unresolved: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

impl CommunicationPort {
    fn key(&self) -> (PortKind, &str, &str, Option<&str>) {
        (
            self.kind,
            &self.interface_type,
            &self.declared_name,
            self.callback_name.as_deref(),
        )
    }
}

// Equality is structural over (kind, interface_type, declared_name, callback_name).
impl PartialEq for CommunicationPort {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for CommunicationPort {}

impl PartialOrd for CommunicationPort {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CommunicationPort {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key().cmp(&other.key())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompileType {
    Python,
    Cpp,
}

impl CompileType {
    pub fn as_str(self) -> &'static str {
        match self {
            CompileType::Python => "python",
            CompileType::Cpp => "cpp",
        }
    }
}

/// Source-level node definition with its typed ports. Field order is the
/// serialized key order of the node inventory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomicRosNodeClassifier {
    pub id: String,
    pub class_name: String,
    pub node_name: Option<String>,
    pub header_file_paths: Vec<String>,
    pub source_file_paths: Vec<String>,
    pub description: String,
    pub compile_type: CompileType,
    pub execution: Option<String>,
    pub ports: Vec<CommunicationPort>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Remapping {
    pub from: String,
    pub to: String,
}

impl Remapping {
    pub fn new(from: impl Into<String>, to: impl Into<String>) -> Self {
        Self {
            from: from.into(),
            to: to.into(),
        }
    }
}

/// Launch-time instance typed by an atomic or composed classifier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RosNodePart {
    pub instance_id: String,
    pub classifier_ref: String,
    pub node_name: String,
    pub namespace: String,
    pub remappings: Vec<Remapping>,
    pub executable: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    Topic,
    Service,
}

impl RelationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RelationKind::Topic => "topic",
            RelationKind::Service => "service",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommunicationRelation {
    pub kind: RelationKind,
    pub resolved_name: String,
    pub interface_type: String,
    /// Publishers or service servers.
    pub producer_instance_ids: Vec<String>,
    /// Subscribers or service clients.
    pub consumer_instance_ids: Vec<String>,
}

/// Subsystem induced by a launch file's composition scope.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComposedRosNodeClassifier {
    pub id: String,
    pub name: String,
    pub parts: Vec<RosNodePart>,
    pub relations: Vec<CommunicationRelation>,
}

/// Stands in for an instance that could not be linked to any atomic
/// classifier; rendered with its own stereotype.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaceholderClassifier {
    pub id: String,
    pub exec_name: String,
    pub class_name: Option<String>,
}

impl PlaceholderClassifier {
    pub fn display_name(&self) -> String {
        format!("?{}", self.exec_name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchitectureModel {
    pub atomic_classifiers: Vec<AtomicRosNodeClassifier>,
    pub composed_classifiers: Vec<ComposedRosNodeClassifier>,
    #[serde(default)]
    pub placeholder_classifiers: Vec<PlaceholderClassifier>,
    pub root_composed_id: String,
}

/// What a [`RosNodePart::classifier_ref`] points at.
#[derive(Debug, Clone, Copy)]
pub enum ClassifierRef<'a> {
    Atomic(&'a AtomicRosNodeClassifier),
    Composed(&'a ComposedRosNodeClassifier),
    Placeholder(&'a PlaceholderClassifier),
}

impl ClassifierRef<'_> {
    pub fn display_name(&self) -> String {
        match self {
            ClassifierRef::Atomic(c) => c.class_name.clone(),
            ClassifierRef::Composed(c) => c.name.clone(),
            ClassifierRef::Placeholder(c) => c.display_name(),
        }
    }
}

impl ArchitectureModel {
    pub fn root(&self) -> Option<&ComposedRosNodeClassifier> {
        self.composed(&self.root_composed_id)
    }

    pub fn composed(&self, id: &str) -> Option<&ComposedRosNodeClassifier> {
        self.composed_classifiers.iter().find(|c| c.id == id)
    }

    /// Resolves a classifier id; `None` when it is dangling or ambiguous.
    pub fn resolve(&self, id: &str) -> Option<ClassifierRef<'_>> {
        let mut found = self
            .atomic_classifiers
            .iter()
            .filter(|c| c.id == id)
            .map(ClassifierRef::Atomic)
            .chain(
                self.composed_classifiers
                    .iter()
                    .filter(|c| c.id == id)
                    .map(ClassifierRef::Composed),
            )
            .chain(
                self.placeholder_classifiers
                    .iter()
                    .filter(|c| c.id == id)
                    .map(ClassifierRef::Placeholder),
            );
        let first = found.next()?;
        found.next().is_none().then_some(first)
    }
}

/// Which textual form an identifier takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdForm {
    /// `arc_1`
    Classifier,
    /// `lf1`, `n1`
    Instance,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IdError {
    #[error("id prefix must be non-empty and alphabetic, got `{0}`")]
    InvalidPrefix(String),
    #[error("id ordinal must be positive")]
    ZeroOrdinal,
}

pub fn canonical_id(prefix: &str, ordinal: usize, form: IdForm) -> Result<String, IdError> {
    if prefix.is_empty() || !prefix.chars().all(|c| c.is_ascii_alphabetic()) {
        return Err(IdError::InvalidPrefix(prefix.to_string()));
    }
    if ordinal == 0 {
        return Err(IdError::ZeroOrdinal);
    }
    Ok(match form {
        IdForm::Classifier => format!("{prefix}_{ordinal}"),
        IdForm::Instance => format!("{prefix}{ordinal}"),
    })
}

pub(crate) fn classifier_id(prefix: &str, ordinal: usize) -> String {
    canonical_id(prefix, ordinal, IdForm::Classifier).expect("static prefix")
}

pub(crate) fn instance_id(prefix: &str, ordinal: usize) -> String {
    canonical_id(prefix, ordinal, IdForm::Instance).expect("static prefix")
}

/// Numeric ordinal of an id produced by [`canonical_id`], for ordering
/// (`arc_2` sorts before `arc_10`).
pub fn id_ordinal(id: &str) -> Option<usize> {
    let digits = id.trim_start_matches(|c: char| !c.is_ascii_digit());
    digits.parse().ok()
}

/// `<pkg>/(msg|srv)/<Type>`.
pub fn is_interface_type(s: &str) -> bool {
    let segments: Vec<&str> = s.split('/').collect();
    let ident =
        |seg: &str| !seg.is_empty() && seg.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    segments.len() == 3
        && ident(segments[0])
        && matches!(segments[1], "msg" | "srv")
        && ident(segments[2])
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    /// Offending element, e.g. `part n3 of crc_1`.
    pub element: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.element, self.message)
    }
}

fn violation(out: &mut Vec<Violation>, element: impl Into<String>, message: impl Into<String>) {
    out.push(Violation {
        element: element.into(),
        message: message.into(),
    });
}

pub fn validate_port(port: &CommunicationPort, owner: &str, out: &mut Vec<Violation>) {
    let element = format!("{} port `{}` of {}", port.kind, port.declared_name, owner);
    if !is_interface_type(&port.interface_type) {
        violation(
            out,
            &element,
            format!(
                "interface_type `{}` does not match <pkg>/(msg|srv)/<Type>",
                port.interface_type
            ),
        );
    } else {
        let middle = port.interface_type.split('/').nth(1);
        let expected = if port.kind.is_service() { "srv" } else { "msg" };
        if middle != Some(expected) {
            violation(
                out,
                &element,
                format!(
                    "interface_type `{}` must be a {expected} type",
                    port.interface_type
                ),
            );
        }
    }
    if port.declared_name.is_empty() {
        violation(out, &element, "declared_name is empty");
    }
    match (port.kind.requires_callback(), &port.callback_name) {
        (true, None) => violation(out, &element, "callback_name is required for this port kind"),
        (false, Some(_)) => violation(out, &element, "callback_name must be absent for this port kind"),
        _ => {}
    }
}

pub fn validate_atomic(classifier: &AtomicRosNodeClassifier, out: &mut Vec<Violation>) {
    let element = format!("classifier {}", classifier.id);
    if classifier.class_name.is_empty() {
        violation(out, &element, "class_name is empty");
    }
    if classifier.source_file_paths.is_empty() {
        violation(out, &element, "source_file_paths is empty");
    }
    if classifier.compile_type == CompileType::Python && !classifier.header_file_paths.is_empty() {
        violation(out, &element, "python classifiers carry no header files");
    }
    if classifier.node_name.as_deref() == Some("") {
        violation(out, &element, "node_name must be null rather than empty");
    }
    for port in &classifier.ports {
        validate_port(port, &classifier.id, out);
    }
}

/// Checks every type invariant of the model; an empty list means the model
/// is well formed.
pub fn validate_model(model: &ArchitectureModel) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut seen = BTreeSet::new();
    let all_ids = model
        .atomic_classifiers
        .iter()
        .map(|c| c.id.as_str())
        .chain(model.composed_classifiers.iter().map(|c| c.id.as_str()))
        .chain(model.placeholder_classifiers.iter().map(|c| c.id.as_str()));
    for id in all_ids {
        if !seen.insert(id) {
            violation(&mut out, format!("classifier {id}"), "id is not unique");
        }
    }

    for classifier in &model.atomic_classifiers {
        validate_atomic(classifier, &mut out);
    }

    if model.root().is_none() {
        violation(
            &mut out,
            format!("root {}", model.root_composed_id),
            "root_composed_id does not name a composed classifier",
        );
    }

    for composed in &model.composed_classifiers {
        let owner = &composed.id;
        let mut part_ids = BTreeSet::new();
        for part in &composed.parts {
            let element = format!("part {} of {owner}", part.instance_id);
            if !part_ids.insert(part.instance_id.as_str()) {
                violation(&mut out, &element, "instance_id is not unique within the classifier");
            }
            if model.resolve(&part.classifier_ref).is_none() {
                violation(
                    &mut out,
                    &element,
                    format!(
                        "classifier_ref `{}` does not resolve to exactly one classifier",
                        part.classifier_ref
                    ),
                );
            }
            if !part.namespace.is_empty() && !part.namespace.starts_with('/') {
                violation(
                    &mut out,
                    &element,
                    format!("namespace `{}` must be empty or start with `/`", part.namespace),
                );
            }
        }

        let reachable = subtree_instance_ids(model, composed);
        for relation in &composed.relations {
            let element = format!("relation {} of {owner}", relation.resolved_name);
            if !relation.resolved_name.starts_with('/') || relation.resolved_name.contains('~') {
                violation(&mut out, &element, "resolved_name must be absolute and contain no `~`");
            }
            for id in relation
                .producer_instance_ids
                .iter()
                .chain(&relation.consumer_instance_ids)
            {
                if !reachable.contains(id.as_str()) {
                    violation(
                        &mut out,
                        &element,
                        format!("endpoint `{id}` is not a part within {owner}"),
                    );
                }
            }
        }
    }

    if let Some(cycle) = composition_cycle(model) {
        violation(
            &mut out,
            format!("classifier {}", cycle[0]),
            format!("composition cycle: {}", cycle.join(" -> ")),
        );
    }

    out
}

/// Instance ids of every part inside `composed`, including nested composed
/// classifiers.
fn subtree_instance_ids<'a>(
    model: &'a ArchitectureModel,
    composed: &'a ComposedRosNodeClassifier,
) -> BTreeSet<&'a str> {
    let mut ids = BTreeSet::new();
    let mut stack = vec![composed];
    let mut visited = BTreeSet::new();
    while let Some(current) = stack.pop() {
        if !visited.insert(current.id.as_str()) {
            continue;
        }
        for part in &current.parts {
            ids.insert(part.instance_id.as_str());
            if let Some(ClassifierRef::Composed(child)) = model.resolve(&part.classifier_ref) {
                stack.push(child);
            }
        }
    }
    ids
}

fn composition_cycle(model: &ArchitectureModel) -> Option<Vec<String>> {
    let edges: BTreeMap<&str, Vec<&str>> = model
        .composed_classifiers
        .iter()
        .map(|c| {
            let children = c
                .parts
                .iter()
                .filter(|p| model.composed(&p.classifier_ref).is_some())
                .map(|p| p.classifier_ref.as_str())
                .collect();
            (c.id.as_str(), children)
        })
        .collect();
    find_cycle(&edges)
}

/// First cycle found by depth-first search over a directed graph, as the
/// node path with the entry node repeated at the end.
pub(crate) fn find_cycle(edges: &BTreeMap<&str, Vec<&str>>) -> Option<Vec<String>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    fn visit<'a>(
        node: &'a str,
        edges: &BTreeMap<&'a str, Vec<&'a str>>,
        marks: &mut BTreeMap<&'a str, Mark>,
        path: &mut Vec<&'a str>,
    ) -> Option<Vec<String>> {
        marks.insert(node, Mark::Active);
        path.push(node);
        for &next in edges.get(node).map(Vec::as_slice).unwrap_or_default() {
            match marks.get(next) {
                Some(Mark::Active) => {
                    let start = path.iter().position(|&p| p == next).expect("active on path");
                    let mut cycle: Vec<String> = path[start..].iter().map(|s| s.to_string()).collect();
                    cycle.push(next.to_string());
                    return Some(cycle);
                }
                Some(Mark::Done) => {}
                None => {
                    if let Some(cycle) = visit(next, edges, marks, path) {
                        return Some(cycle);
                    }
                }
            }
        }
        path.pop();
        marks.insert(node, Mark::Done);
        None
    }

    let mut marks = BTreeMap::new();
    for &node in edges.keys() {
        if !marks.contains_key(node) {
            if let Some(cycle) = visit(node, edges, &mut marks, &mut Vec::new()) {
                return Some(cycle);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atomic(id: &str, class_name: &str) -> AtomicRosNodeClassifier {
        AtomicRosNodeClassifier {
            id: id.into(),
            class_name: class_name.into(),
            node_name: Some("example_node".into()),
            header_file_paths: vec![],
            source_file_paths: vec!["pkg/pkg/example.py".into()],
            description: String::new(),
            compile_type: CompileType::Python,
            execution: Some("example".into()),
            ports: vec![CommunicationPort {
                kind: PortKind::Publisher,
                interface_type: "std_msgs/msg/String".into(),
                declared_name: "chatter".into(),
                callback_name: None,
                unresolved: false,
            }],
        }
    }

    fn part(id: &str, classifier: &str) -> RosNodePart {
        RosNodePart {
            instance_id: id.into(),
            classifier_ref: classifier.into(),
            node_name: id.into(),
            namespace: "/".into(),
            remappings: vec![],
            executable: "example".into(),
        }
    }

    fn two_part_model() -> ArchitectureModel {
        ArchitectureModel {
            atomic_classifiers: vec![atomic("arc_1", "ExampleNode"), atomic("arc_2", "OtherNode")],
            composed_classifiers: vec![ComposedRosNodeClassifier {
                id: "crc_1".into(),
                name: "bringup".into(),
                parts: vec![part("n1", "arc_1"), part("n2", "arc_2")],
                relations: vec![CommunicationRelation {
                    kind: RelationKind::Topic,
                    resolved_name: "/chatter".into(),
                    interface_type: "std_msgs/msg/String".into(),
                    producer_instance_ids: vec!["n1".into()],
                    consumer_instance_ids: vec!["n2".into()],
                }],
            }],
            placeholder_classifiers: vec![],
            root_composed_id: "crc_1".into(),
        }
    }

    #[test]
    fn canonical_ids_follow_the_two_forms() {
        assert_eq!(canonical_id("arc", 1, IdForm::Classifier).unwrap(), "arc_1");
        assert_eq!(canonical_id("lf", 2, IdForm::Instance).unwrap(), "lf2");
        assert_eq!(canonical_id("n", 3, IdForm::Instance).unwrap(), "n3");
        assert_eq!(
            canonical_id("a1", 1, IdForm::Instance),
            Err(IdError::InvalidPrefix("a1".into()))
        );
        assert_eq!(canonical_id("", 1, IdForm::Instance), Err(IdError::InvalidPrefix(String::new())));
        assert_eq!(canonical_id("n", 0, IdForm::Instance), Err(IdError::ZeroOrdinal));
        assert_eq!(id_ordinal("arc_12"), Some(12));
        assert_eq!(id_ordinal("lf3"), Some(3));
    }

    #[test]
    fn interface_type_pattern() {
        assert!(is_interface_type("sensor_msgs/msg/Image"));
        assert!(is_interface_type("std_srvs/srv/Trigger"));
        assert!(!is_interface_type("sensor_msgs/Image"));
        assert!(!is_interface_type("sensor_msgs/action/Image"));
        assert!(!is_interface_type("/msg/Image"));
        assert!(!is_interface_type(""));
    }

    #[test]
    fn well_formed_two_part_model_has_no_violations() {
        assert_eq!(validate_model(&two_part_model()), vec![]);
    }

    #[test]
    fn dangling_classifier_ref_names_the_part() {
        let mut model = two_part_model();
        model.composed_classifiers[0].parts[1].classifier_ref = "arc_9".into();
        let violations = validate_model(&model);
        assert_eq!(violations.len(), 1, "{violations:?}");
        assert!(violations[0].element.contains("n2"));
        assert!(violations[0].message.contains("arc_9"));
    }

    #[test]
    fn self_containment_is_a_cycle() {
        let mut model = two_part_model();
        model.composed_classifiers[0].parts.push(part("lf1", "crc_1"));
        let violations = validate_model(&model);
        assert_eq!(violations.len(), 1, "{violations:?}");
        assert!(violations[0].message.contains("cycle"));
    }

    #[test]
    fn port_and_relation_invariants() {
        let mut model = two_part_model();
        model.atomic_classifiers[0].ports[0].callback_name = Some("cb".into());
        model.atomic_classifiers[1].ports[0].interface_type = "std_msgs/String".into();
        model.composed_classifiers[0].relations[0].resolved_name = "~chatter".into();
        model.composed_classifiers[0].relations[0]
            .consumer_instance_ids
            .push("n7".into());
        model.composed_classifiers[0].parts[0].namespace = "main".into();
        let violations = validate_model(&model);
        assert_eq!(violations.len(), 5, "{violations:#?}");
    }

    #[test]
    fn validation_is_pure() {
        let mut model = two_part_model();
        model.composed_classifiers[0].parts[1].classifier_ref = "missing".into();
        assert_eq!(validate_model(&model), validate_model(&model));
    }

    #[test]
    fn port_equality_is_structural() {
        let a = atomic("arc_1", "A").ports[0].clone();
        let mut b = a.clone();
        assert_eq!(a, b);
        b.declared_name = "other".into();
        assert_ne!(a, b);
    }

    #[test]
    fn valid_model_round_trips_through_json() {
        let model = two_part_model();
        let json = serde_json::to_string(&model).unwrap();
        let back: ArchitectureModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, model);
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }

    #[test]
    fn find_cycle_reports_path() {
        let mut edges = BTreeMap::new();
        edges.insert("a", vec!["b"]);
        edges.insert("b", vec!["a"]);
        assert_eq!(find_cycle(&edges).unwrap(), vec!["a", "b", "a"]);
        edges.insert("b", vec![]);
        assert_eq!(find_cycle(&edges), None);
    }
}
