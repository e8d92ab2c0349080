//! Reads the PlantUML dialect written by [`crate::synth`] into canonical
//! element sets, and computes the same sets straight from a model.

use std::collections::BTreeMap;

use super::{ElementKind, ElementSets};
use crate::diag::Diagnostics;
use crate::error::{Error, Result};
use crate::launch::normalize_namespace;
use crate::model::{ArchitectureModel, AtomicRosNodeClassifier, ClassifierRef, ComposedRosNodeClassifier, PortKind};
use crate::synth::plantuml::part_fqn;

#[derive(Debug, PartialEq)]
enum Token {
    Word(String),
    Quoted(String),
    Stereo(String),
    Open,
}

fn tokenize(line: &str) -> Option<Vec<Token>> {
    let mut out = Vec::new();
    let mut rest = line.trim();
    while !rest.is_empty() {
        if let Some(r) = rest.strip_prefix('"') {
            let end = r.find('"')?;
            out.push(Token::Quoted(r[..end].to_string()));
            rest = &r[end + 1..];
        } else if let Some(r) = rest.strip_prefix("<<") {
            let end = r.find(">>")?;
            out.push(Token::Stereo(r[..end].trim().to_string()));
            rest = &r[end + 2..];
        } else if let Some(r) = rest.strip_prefix('{') {
            out.push(Token::Open);
            rest = r;
        } else {
            let end = rest
                .find(|c: char| c.is_whitespace() || c == '"' || c == '{' || c == '<')
                .unwrap_or(rest.len());
            let end = if end == 0 { rest.len() } else { end };
            out.push(Token::Word(rest[..end].to_string()));
            rest = &rest[end..];
        }
        rest = rest.trim_start();
    }
    Some(out)
}

#[derive(Debug)]
enum Frame {
    Atomic(String),
    Composed,
    Other,
}

#[derive(Debug, Default)]
struct Label {
    name: String,
    fields: Vec<(String, String)>,
}

impl Label {
    fn parse(raw: &str) -> Self {
        let mut lines = raw.split("\\n");
        let name = lines.next().unwrap_or_default().trim().to_string();
        let fields = lines
            .filter_map(|l| l.split_once(':'))
            .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
            .collect();
        Label { name, fields }
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// `name : type [-> callback]`
fn port_label(label: &str) -> Option<(String, String, Option<String>)> {
    let (head, callback) = match label.rsplit_once(" -> ") {
        Some((h, cb)) if h.contains(" : ") && !cb.contains(' ') => (h, Some(cb.trim().to_string())),
        _ => (label, None),
    };
    let (name, ty) = head.rsplit_once(" : ")?;
    Some((name.trim().to_string(), ty.trim().to_string(), callback))
}

pub(crate) fn port_kind(stereotype: &str) -> Option<PortKind> {
    match stereotype.to_ascii_lowercase().as_str() {
        "publisher" => Some(PortKind::Publisher),
        "subscriber" => Some(PortKind::Subscriber),
        "serviceserver" => Some(PortKind::ServiceServer),
        "serviceclient" => Some(PortKind::ServiceClient),
        _ => None,
    }
}

fn add_port(
    sets: &mut ElementSets,
    class: &str,
    kind: PortKind,
    name: &str,
    ty: &str,
    callback: Option<&str>,
) {
    let k = kind.as_str();
    if kind.is_service() {
        sets.add(ElementKind::ServiceType, [class, k, name, ty]);
        if let Some(cb) = callback {
            sets.add(ElementKind::ServiceFunctionName, [class, name, cb]);
        }
    } else {
        sets.add(ElementKind::MessageType, [class, k, name, ty]);
        if let Some(cb) = callback {
            sets.add(ElementKind::CallbackFunctionName, [class, name, cb]);
        }
    }
}

fn add_atomic(sets: &mut ElementSets, class: &str) {
    sets.add(ElementKind::ArcName, [class]);
    sets.add(ElementKind::ArcStereotype, [class, "atomicrosnodeclassifier"]);
}

fn add_part(sets: &mut ElementSets, fqn: &str, ns: &str, classifier: &str) {
    sets.add(ElementKind::NodePartName, [fqn]);
    sets.add(ElementKind::NodePartNamespace, [fqn, ns]);
    sets.add(ElementKind::NodePartClassifierRef, [fqn, classifier]);
}

fn relation_key(kind: &str, name: &str, ty: &str, mut producers: Vec<String>, mut consumers: Vec<String>) -> [String; 5] {
    producers.sort();
    consumers.sort();
    [
        kind.to_ascii_lowercase(),
        name.to_string(),
        ty.to_string(),
        producers.join(","),
        consumers.join(","),
    ]
}

struct PendingRelation {
    alias: String,
    kind: String,
    name: String,
    ty: String,
}

/// Parses one PlantUML document. Unrecognized lines become diagnostics;
/// unbalanced blocks are fatal.
pub fn parse_plantuml_model(text: &str, file: Option<&str>, diags: &mut Diagnostics) -> Result<ElementSets> {
    let mut sets = ElementSets::default();
    let mut stack: Vec<(Frame, usize)> = Vec::new();
    let mut fqns: BTreeMap<String, String> = BTreeMap::new();
    let mut interfaces: Vec<PendingRelation> = Vec::new();
    let mut edges: Vec<(String, String, usize)> = Vec::new();
    let text = text.replace("\r\n", "\n");

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty()
            || line.starts_with('\'')
            || line.starts_with('@')
            || line.starts_with("skinparam")
            || line.starts_with("title")
            || line.starts_with("hide")
            || line == "left to right direction"
        {
            continue;
        }
        if line == "}" {
            if stack.pop().is_none() {
                return Err(Error::PlantUml {
                    line: line_no,
                    message: "`}` without an open block".into(),
                });
            }
            continue;
        }
        let unrecognized = |diags: &mut Diagnostics| {
            diags.warn("unrecognized_line", file, format!("line {line_no}: `{line}`"));
        };
        let Some(tokens) = tokenize(line) else {
            unrecognized(diags);
            continue;
        };
        let opens = tokens.last() == Some(&Token::Open);
        let stereos: Vec<String> = tokens
            .iter()
            .filter_map(|t| match t {
                Token::Stereo(s) => Some(s.to_ascii_lowercase()),
                _ => None,
            })
            .collect();
        let has = |s: &str| stereos.iter().any(|x| x == &s.to_ascii_lowercase());

        match tokens.as_slice() {
            [Token::Word(w), Token::Quoted(label), Token::Word(as_kw), Token::Word(alias), ..]
                if w == "component" && as_kw == "as" =>
            {
                let label = Label::parse(label);
                let frame = if has("AtomicRosNodeClassifier") {
                    add_atomic(&mut sets, &label.name);
                    Frame::Atomic(label.name.clone())
                } else if has("ComposedRosNodeClassifier") {
                    sets.add(ElementKind::ComposedClassifierName, [label.name.as_str()]);
                    let nested = matches!(stack.last(), Some((Frame::Composed, _)));
                    if let (true, Some(ns)) = (nested, label.get("ns")) {
                        let ns = normalize_namespace(ns);
                        let fqn = part_fqn(&ns, &label.name);
                        add_part(&mut sets, &fqn, &ns, &label.name);
                        fqns.insert(alias.clone(), fqn);
                    }
                    Frame::Composed
                } else if has("RosNodePart") {
                    let ns = normalize_namespace(label.get("ns").unwrap_or("/"));
                    let fqn = part_fqn(&ns, &label.name);
                    add_part(&mut sets, &fqn, &ns, label.get("type").unwrap_or_default());
                    for (k, v) in &label.fields {
                        if k == "remap" {
                            if let Some((from, to)) = v.split_once(" -> ") {
                                sets.add(ElementKind::Remapping, [fqn.as_str(), from.trim(), to.trim()]);
                            }
                        }
                    }
                    fqns.insert(alias.clone(), fqn);
                    Frame::Other
                } else {
                    unrecognized(diags);
                    Frame::Other
                };
                if opens {
                    stack.push((frame, line_no));
                }
            }
            [Token::Word(w), Token::Quoted(label), Token::Stereo(st), ..] if w == "portin" || w == "portout" => {
                let class = match stack.last() {
                    Some((Frame::Atomic(c), _)) => c.clone(),
                    _ => {
                        diags.warn("unrecognized_line", file, format!("line {line_no}: port outside a classifier"));
                        continue;
                    }
                };
                match (port_kind(st), port_label(label)) {
                    (Some(kind), Some((name, ty, cb))) => {
                        add_port(&mut sets, &class, kind, &name, &ty, cb.as_deref())
                    }
                    _ => unrecognized(diags),
                }
            }
            [Token::Word(w), Token::Quoted(label), Token::Word(as_kw), Token::Word(alias), Token::Stereo(st), ..]
                if w == "interface" && as_kw == "as" =>
            {
                match label.rsplit_once(" : ") {
                    Some((name, ty)) => interfaces.push(PendingRelation {
                        alias: alias.clone(),
                        kind: st.clone(),
                        name: name.trim().to_string(),
                        ty: ty.trim().to_string(),
                    }),
                    None => unrecognized(diags),
                }
            }
            [Token::Word(a), Token::Word(arrow), Token::Word(b), ..] if arrow == "-->" => {
                edges.push((a.clone(), b.clone(), line_no));
            }
            _ => unrecognized(diags),
        }
        if opens && !matches!(tokens.first(), Some(Token::Word(w)) if w == "component") {
            stack.push((Frame::Other, line_no));
        }
    }
    if let Some((_, opened)) = stack.last() {
        return Err(Error::PlantUml {
            line: *opened,
            message: "block is never closed".into(),
        });
    }

    let fqn_of = |alias: &str, line: usize, diags: &mut Diagnostics| match fqns.get(alias) {
        Some(f) => f.clone(),
        None => {
            diags.warn("unknown_alias", file, format!("line {line}: `{alias}` names no part"));
            alias.to_string()
        }
    };
    for rel in &interfaces {
        let mut producers = Vec::new();
        let mut consumers = Vec::new();
        for (a, b, line) in &edges {
            if b == &rel.alias {
                producers.push(fqn_of(a, *line, diags));
            } else if a == &rel.alias {
                consumers.push(fqn_of(b, *line, diags));
            }
        }
        sets.add(
            ElementKind::CommunicationRelation,
            relation_key(&rel.kind, &rel.name, &rel.ty, producers, consumers),
        );
    }
    Ok(sets)
}

/// ACD elements of one classifier, as the parser would read them.
pub fn atomic_elements(classifier: &AtomicRosNodeClassifier, sets: &mut ElementSets) {
    let class = classifier.class_name.replace('"', "'");
    add_atomic(sets, &class);
    for port in &classifier.ports {
        add_port(
            sets,
            &class,
            port.kind,
            &port.declared_name.replace('"', "'"),
            &port.interface_type,
            port.callback_name.as_deref(),
        );
    }
}

/// Canonical elements of a whole model: every atomic classifier plus the
/// composition reachable from the root.
pub fn model_elements(model: &ArchitectureModel) -> ElementSets {
    let mut sets = ElementSets::default();
    for c in &model.atomic_classifiers {
        atomic_elements(c, &mut sets);
    }
    let Some(root) = model.root() else { return sets };

    let mut fqns: BTreeMap<&str, String> = BTreeMap::new();
    let mut relations = Vec::new();
    let mut stack: Vec<&ComposedRosNodeClassifier> = vec![root];
    while let Some(c) = stack.pop() {
        sets.add(ElementKind::ComposedClassifierName, [c.name.replace('"', "'").as_str()]);
        for part in &c.parts {
            let ns = normalize_namespace(&part.namespace);
            match model.resolve(&part.classifier_ref) {
                Some(ClassifierRef::Composed(child)) => {
                    let name = child.name.replace('"', "'");
                    let fqn = part_fqn(&ns, &name);
                    add_part(&mut sets, &fqn, &ns, &name);
                    stack.push(child);
                }
                target => {
                    let fqn = part_fqn(&ns, &part.node_name.replace('"', "'"));
                    let type_name = target.map(|t| t.display_name().replace('"', "'")).unwrap_or_default();
                    add_part(&mut sets, &fqn, &ns, &type_name);
                    for r in &part.remappings {
                        let (from, to) = (r.from.replace('"', "'"), r.to.replace('"', "'"));
                        sets.add(ElementKind::Remapping, [fqn.as_str(), from.trim(), to.trim()]);
                    }
                    fqns.insert(&part.instance_id, fqn);
                }
            }
        }
        relations.extend(&c.relations);
    }
    for rel in relations {
        let lookup = |ids: &[String]| -> Vec<String> {
            ids.iter()
                .map(|id| fqns.get(id.as_str()).cloned().unwrap_or_else(|| id.clone()))
                .collect()
        };
        let stereo = match rel.kind {
            crate::model::RelationKind::Topic => "Topic",
            crate::model::RelationKind::Service => "Service",
        };
        sets.add(
            ElementKind::CommunicationRelation,
            relation_key(
                stereo,
                &rel.resolved_name,
                &rel.interface_type,
                lookup(&rel.producer_instance_ids),
                lookup(&rel.consumer_instance_ids),
            ),
        );
    }
    sets
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens() {
        let t = tokenize(r#"component "a\nns: /x" as n1 <<RosNodePart>> {"#).unwrap();
        assert_eq!(t.len(), 6);
        assert_eq!(t[5], Token::Open);
        assert!(tokenize(r#"component "open"#).is_none());
    }

    #[test]
    fn port_labels() {
        assert_eq!(
            port_label("chatter : std_msgs/msg/String -> on_msg"),
            Some(("chatter".into(), "std_msgs/msg/String".into(), Some("on_msg".into())))
        );
        assert_eq!(
            port_label("a : pkg/srv/T"),
            Some(("a".into(), "pkg/srv/T".into(), None))
        );
        assert_eq!(port_label("nonsense"), None);
    }

    #[test]
    fn unbalanced_blocks_are_fatal_with_line() {
        let mut d = Diagnostics::new();
        let err = parse_plantuml_model("@startuml\n}\n", None, &mut d).unwrap_err();
        assert!(matches!(err, Error::PlantUml { line: 2, .. }));
        let err = parse_plantuml_model(
            "@startuml\ncomponent \"A\" as arc_1 <<AtomicRosNodeClassifier>> {\n@enduml\n",
            None,
            &mut d,
        )
        .unwrap_err();
        assert!(matches!(err, Error::PlantUml { line: 2, .. }));
    }

    #[test]
    fn unknown_lines_are_reported_not_dropped() {
        let mut d = Diagnostics::new();
        let sets = parse_plantuml_model("@startuml\nnote left: hello\n@enduml\n", Some("x.puml"), &mut d).unwrap();
        assert!(sets.is_empty());
        assert!(d.has_code("unrecognized_line"));
    }

    #[test]
    fn reordering_lines_keeps_sets() {
        let a = "@startuml\ncomponent \"m\" as crc_1 <<ComposedRosNodeClassifier>> {\n  component \"a\\nns: /\\nexec: a\\ntype: A\" as n1 <<RosNodePart>>\n  component \"b\\nns: /\\nexec: b\\ntype: B\" as n2 <<RosNodePart>>\n  interface \"/t : std_msgs/msg/String\" as r1 <<Topic>>\n  n1 --> r1 : pub\n  r1 --> n2 : sub\n}\n@enduml\n";
        let b = "@startuml\ncomponent \"m\" as crc_1 <<ComposedRosNodeClassifier>> {\n  r1 --> n2 : sub\n  n1 --> r1 : pub\n  interface \"/t : std_msgs/msg/String\" as r1 <<Topic>>\n  component \"b\\nns: /\\nexec: b\\ntype: B\" as n2 <<RosNodePart>>\n  component \"a\\nns: /\\nexec: a\\ntype: A\" as n1 <<RosNodePart>>\n}\n@enduml\n";
        let mut d = Diagnostics::new();
        let sa = parse_plantuml_model(a, None, &mut d).unwrap();
        let sb = parse_plantuml_model(b, None, &mut d).unwrap();
        assert_eq!(sa, sb);
        assert!(d.is_empty(), "{d:?}");
        assert_eq!(sa.count(ElementKind::CommunicationRelation), 1);
    }
}
