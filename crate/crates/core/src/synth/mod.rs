//! Assembles the composed model from the two intermediate artifacts and
//! renders it as PlantUML.

pub(crate) mod plantuml;

use std::collections::BTreeMap;

use crate::diag::Diagnostics;
use crate::error::{Error, Result};
use crate::extract::NodeInventory;
use crate::launch::{join_namespace, LaunchDependencyDescription, Link};
use crate::model::{
    id_ordinal, validate_model, ArchitectureModel, CommunicationRelation, ComposedRosNodeClassifier,
    PlaceholderClassifier, RosNodePart,
};
use crate::names::effective_identity;

pub use plantuml::{emit_acd, emit_ccd, ACD_DIR, CCD_DIR, CCD_FILE};

/// Id of the classifier added above several roots.
pub const SYSTEM_ROOT_ID: &str = "crc_0";
pub const SYSTEM_ROOT_NAME: &str = "system";

/// `main.launch.py` -> `main`.
pub fn launch_stem(file_name: &str) -> &str {
    for suffix in [".launch.py", ".launch.xml", ".launch.yaml", ".launch.yml", ".py", ".xml", ".yaml", ".yml"] {
        if let Some(stem) = file_name.strip_suffix(suffix) {
            if !stem.is_empty() {
                return stem;
            }
        }
    }
    file_name
}

fn composed_id(launch_id: &str) -> String {
    format!("crc_{}", id_ordinal(launch_id).unwrap_or(0))
}

/// Builds one composed classifier per launch file entry. Relations attach
/// to the lowest classifier whose subtree holds all their endpoints.
pub fn build_composed_model(
    ldd: &LaunchDependencyDescription,
    inventory: &NodeInventory,
    links: &BTreeMap<String, Link>,
    relations: &[CommunicationRelation],
    diags: &mut Diagnostics,
) -> Result<ArchitectureModel> {
    if ldd.list_launch_file.is_empty() || ldd.roots.is_empty() {
        return Err(Error::NoRoot);
    }

    let mut placeholders: Vec<PlaceholderClassifier> = Vec::new();
    let mut composed: Vec<ComposedRosNodeClassifier> = Vec::new();
    // instance id -> owning composed id; composed id -> enclosing composed id
    let mut owner: BTreeMap<String, String> = BTreeMap::new();
    let mut parent: BTreeMap<String, String> = BTreeMap::new();

    for entry in &ldd.list_launch_file {
        let id = composed_id(&entry.id);
        let mut parts = Vec::new();
        for node_id in &entry.nodes {
            let Some(n) = ldd.instance(node_id) else { continue };
            let classifier = match links.get(node_id) {
                Some(Link::Matched(cid)) => inventory.classifiers().find(|c| &c.id == cid),
                _ => None,
            };
            let classifier_ref = match classifier {
                Some(c) => c.id.clone(),
                None => {
                    let existing = placeholders
                        .iter()
                        .find(|p| p.exec_name == n.exec_name && p.class_name == n.class_name);
                    match existing {
                        Some(p) => p.id.clone(),
                        None => {
                            let p = PlaceholderClassifier {
                                id: format!("ph_{}", placeholders.len() + 1),
                                exec_name: n.exec_name.clone(),
                                class_name: n.class_name.clone(),
                            };
                            diags.warn(
                                "placeholder_part",
                                None,
                                format!("{node_id}: typed by placeholder {} for `{}`", p.id, n.exec_name),
                            );
                            let id = p.id.clone();
                            placeholders.push(p);
                            id
                        }
                    }
                }
            };
            let (namespace, node_name) = effective_identity(
                n.node_name.as_deref(),
                classifier.and_then(|c| c.node_name.as_deref()),
                &n.exec_name,
                &n.namespace,
                &n.remappings,
            );
            owner.insert(node_id.clone(), id.clone());
            parts.push(RosNodePart {
                instance_id: node_id.clone(),
                classifier_ref,
                node_name,
                namespace,
                remappings: n.remappings.clone(),
                executable: n.exec_name.clone(),
            });
        }
        for child_id in &entry.included_launch_files {
            let Some(child) = ldd.entry(child_id) else { continue };
            let child_crc = composed_id(child_id);
            parent.insert(child_crc.clone(), id.clone());
            parts.push(RosNodePart {
                instance_id: child_id.clone(),
                classifier_ref: child_crc,
                node_name: launch_stem(&child.file_type).to_string(),
                namespace: child.effective_namespace.clone(),
                remappings: Vec::new(),
                executable: child.file_type.clone(),
            });
        }
        composed.push(ComposedRosNodeClassifier {
            id,
            name: launch_stem(&entry.file_type).to_string(),
            parts,
            relations: Vec::new(),
        });
    }

    let root_composed_id = if let [only] = ldd.roots.as_slice() {
        composed_id(only)
    } else {
        let parts = ldd
            .roots
            .iter()
            .filter_map(|r| ldd.entry(r))
            .map(|e| {
                parent.insert(composed_id(&e.id), SYSTEM_ROOT_ID.to_string());
                RosNodePart {
                    instance_id: e.id.clone(),
                    classifier_ref: composed_id(&e.id),
                    node_name: launch_stem(&e.file_type).to_string(),
                    namespace: join_namespace("/", &e.effective_namespace),
                    remappings: Vec::new(),
                    executable: e.file_type.clone(),
                }
            })
            .collect();
        composed.insert(
            0,
            ComposedRosNodeClassifier {
                id: SYSTEM_ROOT_ID.to_string(),
                name: SYSTEM_ROOT_NAME.to_string(),
                parts,
                relations: Vec::new(),
            },
        );
        SYSTEM_ROOT_ID.to_string()
    };

    let chain = |crc: &str| -> Vec<String> {
        let mut out = vec![crc.to_string()];
        while let Some(p) = parent.get(out.last().unwrap()) {
            out.push(p.clone());
        }
        out.reverse();
        out
    };

    for relation in relations {
        let chains: Vec<Vec<String>> = relation
            .producer_instance_ids
            .iter()
            .chain(&relation.consumer_instance_ids)
            .filter_map(|id| owner.get(id))
            .map(|crc| chain(crc))
            .collect();
        let Some(first) = chains.first() else {
            diags.warn(
                "orphan_relation",
                None,
                format!("{} `{}` has no endpoint in the model", relation.kind.as_str(), relation.resolved_name),
            );
            continue;
        };
        let depth = (0..first.len())
            .take_while(|&i| chains.iter().all(|c| c.get(i) == first.get(i)))
            .count();
        let Some(target) = depth.checked_sub(1).map(|d| first[d].clone()) else {
            diags.warn(
                "orphan_relation",
                None,
                format!("{} `{}` spans unrelated roots", relation.kind.as_str(), relation.resolved_name),
            );
            continue;
        };
        if let Some(c) = composed.iter_mut().find(|c| c.id == target) {
            c.relations.push(relation.clone());
        }
    }

    let model = ArchitectureModel {
        atomic_classifiers: inventory.classifiers().cloned().collect(),
        composed_classifiers: composed,
        placeholder_classifiers: placeholders,
        root_composed_id,
    };
    let violations = validate_model(&model);
    if !violations.is_empty() {
        return Err(Error::InvariantViolation {
            artifact: "architecture model",
            violations: violations.iter().map(ToString::to_string).collect(),
        });
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::launch::{LaunchFileEntry, NodeInstanceEntry};
    use crate::model::RelationKind;

    fn entry(id: &str, file: &str, nodes: &[&str], includes: &[&str], ns: &str) -> LaunchFileEntry {
        LaunchFileEntry {
            id: id.into(),
            file_type: file.into(),
            nodes: nodes.iter().map(|s| s.to_string()).collect(),
            included_launch_files: includes.iter().map(|s| s.to_string()).collect(),
            namespace: BTreeMap::new(),
            effective_namespace: ns.into(),
            path: file.into(),
            unresolved_includes: vec![],
        }
    }

    fn instance(id: &str, exec: &str, name: &str, ns: &str) -> NodeInstanceEntry {
        NodeInstanceEntry {
            id: id.into(),
            node_kind: None,
            exec_name: exec.into(),
            class_name: None,
            node_name: Some(name.into()),
            namespace: ns.into(),
            remappings: vec![],
            package: None,
        }
    }

    fn nested() -> LaunchDependencyDescription {
        LaunchDependencyDescription {
            list_launch_file: vec![
                entry("lf1", "main.launch.py", &["n1", "n3"], &["lf2"], "/"),
                entry("lf2", "sub.launch.py", &["n2"], &[], "/main"),
            ],
            list_atom_node_instances: vec![
                instance("n1", "example", "example_node", "/"),
                instance("n2", "exmaple_2_exec", "Tom", "/main"),
                instance("n3", "exmaple_2_exec", "Tom", "/backup"),
            ],
            roots: vec!["lf1".into()],
        }
    }

    #[test]
    fn nested_launch_files_nest_classifiers() {
        let ldd = nested();
        let rel = CommunicationRelation {
            kind: RelationKind::Topic,
            resolved_name: "/chatter".into(),
            interface_type: "std_msgs/msg/String".into(),
            producer_instance_ids: vec!["n1".into()],
            consumer_instance_ids: vec!["n2".into()],
        };
        let local = CommunicationRelation {
            resolved_name: "/main/status".into(),
            producer_instance_ids: vec!["n2".into()],
            consumer_instance_ids: vec![],
            ..rel.clone()
        };
        let mut diags = Diagnostics::new();
        let model = build_composed_model(
            &ldd,
            &NodeInventory::default(),
            &BTreeMap::new(),
            &[rel, local],
            &mut diags,
        )
        .unwrap();
        assert_eq!(model.root_composed_id, "crc_1");
        let root = model.root().unwrap();
        let ids: Vec<_> = root.parts.iter().map(|p| p.instance_id.as_str()).collect();
        assert_eq!(ids, vec!["n1", "n3", "lf2"]);
        assert_eq!(root.parts[2].classifier_ref, "crc_2");
        assert_eq!(root.parts[2].namespace, "/main");
        assert_eq!(root.relations.len(), 1);
        assert_eq!(model.composed("crc_2").unwrap().relations[0].resolved_name, "/main/status");
        // n2 and n3 share one placeholder; n1 has its own
        assert_eq!(model.placeholder_classifiers.len(), 2);
        assert!(diags.has_code("placeholder_part"));
    }

    #[test]
    fn several_roots_get_a_system_classifier() {
        let mut ldd = nested();
        ldd.list_launch_file[0].included_launch_files.clear();
        ldd.roots = vec!["lf1".into(), "lf2".into()];
        let model = build_composed_model(
            &ldd,
            &NodeInventory::default(),
            &BTreeMap::new(),
            &[],
            &mut Diagnostics::new(),
        )
        .unwrap();
        assert_eq!(model.root_composed_id, SYSTEM_ROOT_ID);
        assert_eq!(model.root().unwrap().parts.len(), 2);
    }

    #[test]
    fn empty_description_has_no_root() {
        let err = build_composed_model(
            &LaunchDependencyDescription::default(),
            &NodeInventory::default(),
            &BTreeMap::new(),
            &[],
            &mut Diagnostics::new(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NoRoot));
    }

    #[test]
    fn stems() {
        assert_eq!(launch_stem("main.launch.py"), "main");
        assert_eq!(launch_stem("robot.xml"), "robot");
        assert_eq!(launch_stem("odd"), "odd");
    }
}
