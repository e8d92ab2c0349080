//! Name resolution and system-level communication relations.
//!
//! Names follow the ROS 2 rules: `/abs` is kept, `rel` is prefixed by the
//! instance namespace, `~priv` by namespace and node name. Remapping rules
//! are resolved in the instance scope and applied once, first match wins.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::diag::Diagnostics;
use crate::extract::NodeInventory;
use crate::launch::{normalize_namespace, LaunchDependencyDescription, Link};
use crate::model::{CommunicationPort, CommunicationRelation, RelationKind, Remapping};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedName {
    pub raw: String,
    pub base_namespace: String,
    pub node_name: String,
    pub absolute: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NameError {
    #[error("name is empty")]
    Empty,
    #[error("`{raw}` contains illegal character {found:?}")]
    IllegalCharacter { raw: String, found: char },
    #[error("`{raw}` contains an empty segment")]
    EmptySegment { raw: String },
    #[error("`{raw}`: `~` is only allowed as the first character")]
    MisplacedTilde { raw: String },
    #[error("`{raw}`: segment `{segment}` starts with a digit")]
    LeadingDigit { raw: String, segment: String },
    #[error("invalid namespace `{0}`")]
    Namespace(String),
    #[error("invalid node name `{0}`")]
    NodeName(String),
}

fn check_segments(raw: &str, body: &str, allow_empty: bool) -> Result<(), NameError> {
    if body.is_empty() {
        return if allow_empty {
            Ok(())
        } else {
            Err(NameError::EmptySegment { raw: raw.into() })
        };
    }
    for segment in body.split('/') {
        if segment.is_empty() {
            return Err(NameError::EmptySegment { raw: raw.into() });
        }
        if segment.starts_with(|c: char| c.is_ascii_digit()) {
            return Err(NameError::LeadingDigit {
                raw: raw.into(),
                segment: segment.into(),
            });
        }
    }
    Ok(())
}

fn check_characters(raw: &str) -> Result<(), NameError> {
    if let Some(found) = raw
        .chars()
        .find(|c| !(c.is_ascii_alphanumeric() || matches!(c, '_' | '/' | '~')))
    {
        return Err(NameError::IllegalCharacter { raw: raw.into(), found });
    }
    if raw.contains("//") {
        return Err(NameError::EmptySegment { raw: raw.into() });
    }
    if raw[1..].contains('~') {
        return Err(NameError::MisplacedTilde { raw: raw.into() });
    }
    Ok(())
}

fn namespace_segments(namespace: &str) -> Result<Vec<&str>, NameError> {
    let segments: Vec<&str> = namespace.split('/').filter(|s| !s.is_empty()).collect();
    let valid = segments.iter().all(|s| {
        !s.starts_with(|c: char| c.is_ascii_digit()) && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
    });
    if valid {
        Ok(segments)
    } else {
        Err(NameError::Namespace(namespace.into()))
    }
}

/// Resolves `raw` in the scope of a node named `node_name` in `namespace`.
/// The namespace may be given with or without a leading slash.
pub fn resolve_name(raw: &str, namespace: &str, node_name: &str) -> Result<ResolvedName, NameError> {
    if raw.is_empty() {
        return Err(NameError::Empty);
    }
    check_characters(raw)?;
    let ns = namespace_segments(namespace)?;
    let node_ok = !node_name.is_empty()
        && !node_name.starts_with(|c: char| c.is_ascii_digit())
        && node_name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');

    let mut segments: Vec<&str> = Vec::new();
    if let Some(abs) = raw.strip_prefix('/') {
        check_segments(raw, abs, false)?;
        segments.extend(abs.split('/'));
    } else if let Some(private) = raw.strip_prefix('~') {
        if !node_ok {
            return Err(NameError::NodeName(node_name.into()));
        }
        let rest = private.strip_prefix('/').unwrap_or(private);
        check_segments(raw, rest, true)?;
        segments.extend(&ns);
        segments.push(node_name);
        segments.extend(rest.split('/').filter(|s| !s.is_empty()));
    } else {
        check_segments(raw, raw, false)?;
        segments.extend(&ns);
        segments.extend(raw.split('/'));
    }
    Ok(ResolvedName {
        raw: raw.to_string(),
        base_namespace: format!("/{}", ns.join("/")),
        node_name: node_name.to_string(),
        absolute: format!("/{}", segments.join("/")),
    })
}

/// Rules prefixed `__` (`__node`, `__ns`) rename the node itself.
fn is_special_rule(rule: &Remapping) -> bool {
    rule.from.starts_with("__")
}

/// Applies the first rule whose resolved `from` equals the resolved name.
/// Malformed rules are reported and skipped.
pub fn apply_remappings(
    resolved: &ResolvedName,
    remappings: &[Remapping],
    context: &str,
    diags: &mut Diagnostics,
) -> ResolvedName {
    let ns = &resolved.base_namespace;
    let node = &resolved.node_name;
    for rule in remappings.iter().filter(|r| !is_special_rule(r)) {
        let from = match resolve_name(&rule.from, ns, node) {
            Ok(f) => f,
            Err(e) => {
                diags.warn("malformed_remap", None, format!("{context}: rule `{}` skipped: {e}", rule.from));
                continue;
            }
        };
        let to = match resolve_name(&rule.to, ns, node) {
            Ok(t) => t,
            Err(e) => {
                diags.warn("malformed_remap", None, format!("{context}: rule `{}` skipped: {e}", rule.to));
                continue;
            }
        };
        if from.absolute == resolved.absolute {
            return ResolvedName {
                absolute: to.absolute,
                ..resolved.clone()
            };
        }
    }
    resolved.clone()
}

/// A node instance with everything needed to resolve its port names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceBinding {
    pub instance_id: String,
    pub namespace: String,
    pub node_name: String,
    pub remappings: Vec<Remapping>,
    pub ports: Vec<CommunicationPort>,
}

/// Runtime node name: the launch file's, else the source's, else the
/// executable. A `__node` rule overrides all of them; `__ns` likewise
/// overrides the namespace.
pub fn effective_identity(
    launch_name: Option<&str>,
    source_name: Option<&str>,
    exec_name: &str,
    namespace: &str,
    remappings: &[Remapping],
) -> (String, String) {
    let mut node = launch_name
        .or(source_name)
        .unwrap_or_else(|| exec_name.rsplit("::").next().unwrap_or(exec_name))
        .to_string();
    let mut ns = normalize_namespace(namespace);
    for rule in remappings {
        match rule.from.as_str() {
            "__node" | "__name" => node = rule.to.clone(),
            "__ns" => ns = crate::launch::join_namespace(&ns, &rule.to),
            _ => {}
        }
    }
    (ns, node)
}

/// Pairs every linked instance with its classifier's ports. Unmatched
/// instances are left out.
pub fn bind_instances(
    ldd: &LaunchDependencyDescription,
    inventory: &NodeInventory,
    links: &BTreeMap<String, Link>,
) -> Vec<InstanceBinding> {
    let mut out = Vec::new();
    for n in &ldd.list_atom_node_instances {
        let Some(Link::Matched(id)) = links.get(&n.id) else { continue };
        let Some(classifier) = inventory.classifiers().find(|c| &c.id == id) else { continue };
        let (namespace, node_name) = effective_identity(
            n.node_name.as_deref(),
            classifier.node_name.as_deref(),
            &n.exec_name,
            &n.namespace,
            &n.remappings,
        );
        out.push(InstanceBinding {
            instance_id: n.id.clone(),
            namespace,
            node_name,
            remappings: n.remappings.clone(),
            ports: classifier.ports.clone(),
        });
    }
    out
}

/// Resolves every port of every instance and groups equal names into
/// relations, sorted by (kind, resolved name).
pub fn derive_communication_relations(
    instances: &[InstanceBinding],
    diags: &mut Diagnostics,
) -> Vec<CommunicationRelation> {
    #[derive(Default)]
    struct Group {
        producers: BTreeSet<String>,
        consumers: BTreeSet<String>,
        types: BTreeMap<String, usize>,
    }
    let mut groups: BTreeMap<(RelationKind, String), Group> = BTreeMap::new();

    for inst in instances {
        for port in &inst.ports {
            let context = format!("{} ({} `{}`)", inst.instance_id, port.kind, port.declared_name);
            if port.unresolved {
                diags.warn(
                    "unresolved_port",
                    None,
                    format!("{context}: name is not static; left out of relations"),
                );
                continue;
            }
            let resolved = match resolve_name(&port.declared_name, &inst.namespace, &inst.node_name) {
                Ok(r) => apply_remappings(&r, &inst.remappings, &inst.instance_id, diags),
                Err(e) => {
                    diags.warn("invalid_name", None, format!("{context}: {e}"));
                    continue;
                }
            };
            let group = groups
                .entry((port.kind.relation_kind(), resolved.absolute))
                .or_default();
            *group.types.entry(port.interface_type.clone()).or_default() += 1;
            if port.kind.is_producer() {
                group.producers.insert(inst.instance_id.clone());
            } else {
                group.consumers.insert(inst.instance_id.clone());
            }
        }
    }

    groups
        .into_iter()
        .map(|((kind, name), group)| {
            // Most frequent type wins; ties go to the smallest name.
            let (interface_type, _) = group
                .types
                .iter()
                .fold(None::<(&String, usize)>, |best, (t, n)| match best {
                    Some((_, m)) if m >= *n => best,
                    _ => Some((t, *n)),
                })
                .expect("group has at least one port");
            if group.types.len() > 1 {
                diags.warn(
                    "type_conflict",
                    None,
                    format!(
                        "{} `{name}` carries several types ({}); using `{interface_type}`",
                        kind.as_str(),
                        group.types.keys().cloned().collect::<Vec<_>>().join(", ")
                    ),
                );
            }
            CommunicationRelation {
                kind,
                interface_type: interface_type.clone(),
                resolved_name: name,
                producer_instance_ids: sort_ids(group.producers),
                consumer_instance_ids: sort_ids(group.consumers),
            }
        })
        .collect()
}

fn sort_ids(ids: BTreeSet<String>) -> Vec<String> {
    let mut v: Vec<String> = ids.into_iter().collect();
    v.sort_by_key(|id| (crate::model::id_ordinal(id), id.clone()));
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PortKind;

    fn abs(raw: &str, ns: &str, node: &str) -> String {
        resolve_name(raw, ns, node).unwrap().absolute
    }

    #[test]
    fn three_forms() {
        assert_eq!(abs("/global_topic", "main", "Tom"), "/global_topic");
        assert_eq!(abs("chatter", "main", "Tom"), "/main/chatter");
        assert_eq!(abs("~status", "backup", "Tom"), "/backup/Tom/status");
        assert_eq!(abs("~/status", "/backup", "Tom"), "/backup/Tom/status");
        assert_eq!(abs("chatter", "", "n"), "/chatter");
        assert_eq!(abs("chatter", "/", "n"), "/chatter");
    }

    #[test]
    fn illegal_names() {
        assert!(matches!(resolve_name("a b", "/", "n"), Err(NameError::IllegalCharacter { .. })));
        assert!(matches!(resolve_name("a//b", "/", "n"), Err(NameError::EmptySegment { .. })));
        assert!(matches!(resolve_name("a/~b", "/", "n"), Err(NameError::MisplacedTilde { .. })));
        assert!(matches!(resolve_name("", "/", "n"), Err(NameError::Empty)));
        assert!(resolve_name("a/", "/", "n").is_err());
        assert!(resolve_name("/", "/", "n").is_err());
    }

    #[test]
    fn remapping_first_match_single_pass() {
        let r = resolve_name("chatter", "main", "Tom").unwrap();
        let mut d = Diagnostics::new();
        let rules = vec![
            Remapping::new("chatter", "chatter_alt"),
            Remapping::new("/main/chatter", "other"),
            Remapping::new("chatter_alt", "third"),
        ];
        assert_eq!(apply_remappings(&r, &rules, "n1", &mut d).absolute, "/main/chatter_alt");
        assert_eq!(apply_remappings(&r, &[], "n1", &mut d), r);
        let bad = vec![Remapping::new("a b", "c"), Remapping::new("chatter", "/x")];
        assert_eq!(apply_remappings(&r, &bad, "n1", &mut d).absolute, "/x");
        assert!(d.has_code("malformed_remap"));
    }

    fn port(kind: PortKind, name: &str, ty: &str) -> CommunicationPort {
        CommunicationPort {
            kind,
            interface_type: ty.into(),
            declared_name: name.into(),
            callback_name: kind.requires_callback().then(|| "cb".to_string()),
            unresolved: false,
        }
    }

    #[test]
    fn relations_split_by_namespace_and_keep_dangling_ends() {
        let status = port(PortKind::Publisher, "status", "std_msgs/msg/String");
        let insts = vec![
            InstanceBinding {
                instance_id: "n2".into(),
                namespace: "/main".into(),
                node_name: "Tom".into(),
                remappings: vec![],
                ports: vec![status.clone()],
            },
            InstanceBinding {
                instance_id: "n3".into(),
                namespace: "/backup".into(),
                node_name: "Tom".into(),
                remappings: vec![],
                ports: vec![status],
            },
        ];
        let mut d = Diagnostics::new();
        let rels = derive_communication_relations(&insts, &mut d);
        let names: Vec<_> = rels.iter().map(|r| r.resolved_name.as_str()).collect();
        assert_eq!(names, vec!["/backup/status", "/main/status"]);
        assert!(rels.iter().all(|r| r.consumer_instance_ids.is_empty()));
    }

    #[test]
    fn type_conflicts_are_reported_not_split() {
        let insts = vec![
            InstanceBinding {
                instance_id: "n1".into(),
                namespace: "/".into(),
                node_name: "a".into(),
                remappings: vec![],
                ports: vec![port(PortKind::Publisher, "x", "std_msgs/msg/String")],
            },
            InstanceBinding {
                instance_id: "n2".into(),
                namespace: "/".into(),
                node_name: "b".into(),
                remappings: vec![],
                ports: vec![port(PortKind::Subscriber, "/x", "std_msgs/msg/Int32")],
            },
        ];
        let mut d = Diagnostics::new();
        let rels = derive_communication_relations(&insts, &mut d);
        assert_eq!(rels.len(), 1);
        assert_eq!(rels[0].interface_type, "std_msgs/msg/Int32");
        assert!(d.has_code("type_conflict"));
    }

    #[test]
    fn special_rules_rename_the_node() {
        let rules = vec![Remapping::new("__node", "renamed"), Remapping::new("__ns", "/robot")];
        let (ns, node) = effective_identity(Some("a"), None, "exe", "/", &rules);
        assert_eq!((ns.as_str(), node.as_str()), ("/robot", "renamed"));
        let (_, node) = effective_identity(None, Some("src_name"), "exe", "/", &[]);
        assert_eq!(node, "src_name");
        let (_, node) = effective_identity(None, None, "pkg::Plugin", "/", &[]);
        assert_eq!(node, "Plugin");
    }
}
