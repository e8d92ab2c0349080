//! PlantUML emission in the dialect read back by [`crate::eval`].

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::error::{Error, Result};
use crate::launch::join_namespace;
use crate::model::{
    validate_model, ArchitectureModel, AtomicRosNodeClassifier, ClassifierRef, CommunicationPort,
    ComposedRosNodeClassifier, PortKind, RelationKind,
};

pub const ACD_DIR: &str = "acd";
pub const CCD_DIR: &str = "ccd";
pub const CCD_FILE: &str = "system.puml";

pub(crate) const ATOMIC: &str = "AtomicRosNodeClassifier";
pub(crate) const COMPOSED: &str = "ComposedRosNodeClassifier";
pub(crate) const PART: &str = "RosNodePart";
pub(crate) const UNRESOLVED: &str = "UnresolvedRosNodeClassifier";

pub(crate) fn port_stereotype(kind: PortKind) -> &'static str {
    match kind {
        PortKind::Publisher => "Publisher",
        PortKind::Subscriber => "Subscriber",
        PortKind::ServiceServer => "ServiceServer",
        PortKind::ServiceClient => "ServiceClient",
    }
}

fn quote(s: &str) -> String {
    s.replace('"', "'")
}

fn port_line(port: &CommunicationPort) -> String {
    // Inbound ports carry a callback.
    let direction = if port.kind.requires_callback() { "portin" } else { "portout" };
    let mut label = format!("{} : {}", port.declared_name, port.interface_type);
    if let Some(cb) = &port.callback_name {
        write!(label, " -> {cb}").unwrap();
    }
    format!("{direction} \"{}\" <<{}>>", quote(&label), port_stereotype(port.kind))
}

/// One component block per classifier, one port line per port.
pub fn emit_acd(classifier: &AtomicRosNodeClassifier) -> String {
    let mut out = String::from("@startuml\n");
    writeln!(
        out,
        "component \"{}\" as {} <<{ATOMIC}>> {{",
        quote(&classifier.class_name),
        classifier.id
    )
    .unwrap();
    for port in &classifier.ports {
        writeln!(out, "  {}", port_line(port)).unwrap();
    }
    out.push_str("}\n@enduml\n");
    out
}

/// Nested component blocks mirroring composition, with one interface and
/// its edges per relation.
pub fn emit_ccd(model: &ArchitectureModel) -> Result<String> {
    let violations = validate_model(model);
    if !violations.is_empty() {
        return Err(Error::InvariantViolation {
            artifact: "architecture model",
            violations: violations.iter().map(ToString::to_string).collect(),
        });
    }
    let root = model.root().expect("validated model has a root");

    // Relation aliases are numbered over the whole model in a fixed walk.
    let mut aliases = BTreeMap::new();
    let mut walk = vec![root];
    let mut order = Vec::new();
    while let Some(c) = walk.pop() {
        order.push(c);
        for part in c.parts.iter().rev() {
            if let Some(child) = model.composed(&part.classifier_ref) {
                walk.push(child);
            }
        }
    }
    for c in &order {
        for (i, _) in c.relations.iter().enumerate() {
            let n = aliases.len() + 1;
            aliases.insert((c.id.as_str(), i), format!("r{n}"));
        }
    }

    let mut out = String::from("@startuml\n");
    emit_composed(model, root, None, &aliases, 0, &mut out);
    out.push_str("@enduml\n");
    Ok(out)
}

fn emit_composed(
    model: &ArchitectureModel,
    c: &ComposedRosNodeClassifier,
    as_part: Option<&str>,
    aliases: &BTreeMap<(&str, usize), String>,
    depth: usize,
    out: &mut String,
) {
    let pad = "  ".repeat(depth);
    let mut label = quote(&c.name);
    if let Some(ns) = as_part {
        write!(label, "\\nns: {ns}").unwrap();
    }
    writeln!(out, "{pad}component \"{label}\" as {} <<{COMPOSED}>> {{", c.id).unwrap();
    let inner = "  ".repeat(depth + 1);
    for part in &c.parts {
        match model.resolve(&part.classifier_ref) {
            Some(ClassifierRef::Composed(child)) => {
                emit_composed(model, child, Some(&part.namespace), aliases, depth + 1, out)
            }
            target => {
                let mut label = format!(
                    "{}\\nns: {}\\nexec: {}",
                    quote(&part.node_name),
                    part.namespace,
                    quote(&part.executable)
                );
                let mut stereo = format!("<<{PART}>>");
                if let Some(t) = target {
                    write!(label, "\\ntype: {}", quote(&t.display_name())).unwrap();
                    if matches!(t, ClassifierRef::Placeholder(_)) {
                        write!(stereo, " <<{UNRESOLVED}>>").unwrap();
                    }
                }
                for r in &part.remappings {
                    write!(label, "\\nremap: {} -> {}", quote(&r.from), quote(&r.to)).unwrap();
                }
                writeln!(out, "{inner}component \"{label}\" as {} {stereo}", part.instance_id).unwrap();
            }
        }
    }
    for (i, rel) in c.relations.iter().enumerate() {
        let alias = &aliases[&(c.id.as_str(), i)];
        let (stereo, produce, consume) = match rel.kind {
            RelationKind::Topic => ("Topic", "pub", "sub"),
            RelationKind::Service => ("Service", "srv", "cli"),
        };
        writeln!(
            out,
            "{inner}interface \"{} : {}\" as {alias} <<{stereo}>>",
            rel.resolved_name, rel.interface_type
        )
        .unwrap();
        for p in &rel.producer_instance_ids {
            writeln!(out, "{inner}{p} --> {alias} : {produce}").unwrap();
        }
        for q in &rel.consumer_instance_ids {
            writeln!(out, "{inner}{alias} --> {q} : {consume}").unwrap();
        }
    }
    writeln!(out, "{pad}}}").unwrap();
}

/// Fully qualified runtime name of a part.
pub(crate) fn part_fqn(namespace: &str, node_name: &str) -> String {
    join_namespace(namespace, node_name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CompileType;

    #[test]
    fn acd_block_has_one_line_per_port() {
        let c = AtomicRosNodeClassifier {
            id: "arc_1".into(),
            class_name: "ExampleNode".into(),
            node_name: Some("example_node".into()),
            header_file_paths: vec![],
            source_file_paths: vec!["example/example/node.py".into()],
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
        };
        assert_eq!(
            emit_acd(&c),
            "@startuml\ncomponent \"ExampleNode\" as arc_1 <<AtomicRosNodeClassifier>> {\n  portout \"chatter : std_msgs/msg/String\" <<Publisher>>\n}\n@enduml\n"
        );
        let empty = AtomicRosNodeClassifier { ports: vec![], ..c };
        assert!(emit_acd(&empty).contains("{\n}\n"));
    }
}
