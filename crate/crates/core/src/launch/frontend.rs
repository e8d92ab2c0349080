//! XML and YAML launch files. Both are read into one element tree and
//! interpreted by the same tag rules.

use std::collections::BTreeMap;

use serde_yaml::Value;

use super::action::{parse_substitutions, Action, IncludeDecl, NodeDecl, Text};
use crate::diag::Diagnostics;

#[derive(Debug, Clone, Default)]
struct Element {
    tag: String,
    attrs: BTreeMap<String, String>,
    children: Vec<Element>,
    line: usize,
}

impl Element {
    fn attr(&self, names: &[&str]) -> Option<Text> {
        names
            .iter()
            .find_map(|n| self.attrs.get(*n))
            .map(|v| parse_substitutions(v))
    }

    fn raw(&self, name: &str) -> Option<&str> {
        self.attrs.get(name).map(String::as_str)
    }
}

pub(crate) fn parse_xml_launch(rel_path: &str, src: &str, diags: &mut Diagnostics) -> Option<Vec<Action>> {
    let doc = match roxmltree::Document::parse(src) {
        Ok(doc) => doc,
        Err(e) => {
            diags.warn("unparseable_launch", Some(rel_path), format!("{e}; launch file skipped"));
            return None;
        }
    };
    let root = doc.root_element();
    if root.tag_name().name() != "launch" {
        diags.warn(
            "unparseable_launch",
            Some(rel_path),
            format!("root element is <{}>, expected <launch>", root.tag_name().name()),
        );
        return None;
    }
    let tree = xml_element(&doc, root);
    Some(interpret_children(&tree, rel_path, diags))
}

fn xml_element(doc: &roxmltree::Document<'_>, node: roxmltree::Node<'_, '_>) -> Element {
    Element {
        tag: node.tag_name().name().to_string(),
        attrs: node
            .attributes()
            .map(|a| (a.name().to_string(), a.value().to_string()))
            .collect(),
        children: node
            .children()
            .filter(|c| c.is_element())
            .map(|c| xml_element(doc, c))
            .collect(),
        line: doc.text_pos_at(node.range().start).row as usize,
    }
}

pub(crate) fn parse_yaml_launch(rel_path: &str, src: &str, diags: &mut Diagnostics) -> Option<Vec<Action>> {
    let value: Value = match serde_yaml::from_str(src) {
        Ok(v) => v,
        Err(e) => {
            diags.warn("unparseable_launch", Some(rel_path), format!("{e}; launch file skipped"));
            return None;
        }
    };
    let Some(items) = value.get("launch") else {
        diags.warn("unparseable_launch", Some(rel_path), "missing top-level `launch` key");
        return None;
    };
    let root = Element {
        tag: "launch".into(),
        children: yaml_items(items),
        ..Element::default()
    };
    Some(interpret_children(&root, rel_path, diags))
}

/// A YAML action list: each item is a single-key mapping `tag: {...}`.
fn yaml_items(value: &Value) -> Vec<Element> {
    let Some(seq) = value.as_sequence() else { return Vec::new() };
    seq.iter()
        .filter_map(Value::as_mapping)
        .flat_map(|m| m.iter())
        .filter_map(|(k, v)| k.as_str().map(|tag| yaml_element(tag, v)))
        .collect()
}

fn yaml_element(tag: &str, value: &Value) -> Element {
    let mut el = Element {
        tag: tag.to_string(),
        ..Element::default()
    };
    let Some(map) = value.as_mapping() else { return el };
    for (k, v) in map {
        let Some(key) = k.as_str() else { continue };
        match v {
            Value::Sequence(_) if key == "children" => el.children.extend(yaml_items(v)),
            Value::Sequence(items) => {
                // `remap: [{from, to}]`, `arg: [{name, value}]`
                for item in items {
                    el.children.push(yaml_element(key, item));
                }
            }
            Value::String(s) => {
                el.attrs.insert(key.to_string(), s.clone());
            }
            Value::Bool(b) => {
                el.attrs.insert(key.to_string(), b.to_string());
            }
            Value::Number(n) => {
                el.attrs.insert(key.to_string(), n.to_string());
            }
            _ => {}
        }
    }
    el
}

fn interpret_children(parent: &Element, rel_path: &str, diags: &mut Diagnostics) -> Vec<Action> {
    parent
        .children
        .iter()
        .flat_map(|c| interpret(c, rel_path, diags))
        .collect()
}

fn interpret(el: &Element, rel_path: &str, diags: &mut Diagnostics) -> Vec<Action> {
    let rel = Some(rel_path);
    if el.raw("if").is_some() || el.raw("unless").is_some() {
        diags.warn(
            "conditional",
            rel,
            format!("<{}> at line {} is conditional; included unconditionally", el.tag, el.line),
        );
    }
    match el.tag.as_str() {
        "node" | "lifecycle_node" => vec![Action::Node(node_decl(el, &["exec", "type", "executable"]))],
        "include" => {
            let Some(path) = el.attr(&["file"]) else {
                diags.warn("unresolved_element", rel, format!("<include> at line {} has no file", el.line));
                return Vec::new();
            };
            let arguments = el
                .children
                .iter()
                .filter(|c| c.tag == "arg")
                .filter_map(|c| Some((c.raw("name")?.to_string(), c.attr(&["value", "default"])?)))
                .collect();
            vec![Action::Include(IncludeDecl {
                path,
                arguments,
                line: el.line,
            })]
        }
        "group" => vec![Action::Group {
            namespace: el.attr(&["namespace", "ns"]),
            scoped: el.raw("scoped") != Some("false"),
            actions: interpret_children(el, rel_path, diags),
        }],
        "push-ros-namespace" | "push_ros_namespace" => match el.attr(&["namespace", "ns"]) {
            Some(ns) => vec![Action::PushNamespace(ns)],
            None => Vec::new(),
        },
        "set_remap" | "set-remap" => match (el.attr(&["from"]), el.attr(&["to"])) {
            (Some(f), Some(t)) => vec![Action::SetRemap(f, t)],
            _ => {
                diags.warn("malformed_remap", rel, format!("<{}> at line {} needs from and to", el.tag, el.line));
                Vec::new()
            }
        },
        "arg" => {
            let Some(name) = el.raw("name") else { return Vec::new() };
            if let Some(value) = el.attr(&["value"]) {
                vec![Action::SetArgument {
                    name: name.to_string(),
                    value,
                }]
            } else {
                vec![Action::DeclareArgument {
                    name: name.to_string(),
                    default: el.attr(&["default"]),
                }]
            }
        }
        "let" => match (el.raw("name"), el.attr(&["value"])) {
            (Some(name), Some(value)) => vec![Action::SetArgument {
                name: name.to_string(),
                value,
            }],
            _ => Vec::new(),
        },
        "node_container" | "composable_node_container" => {
            let nodes = el
                .children
                .iter()
                .filter(|c| c.tag == "composable_node")
                .map(|c| Action::Node(node_decl(c, &["plugin"])))
                .collect();
            vec![Action::Group {
                namespace: el.attr(&["namespace"]),
                scoped: true,
                actions: nodes,
            }]
        }
        "param" | "set_parameter" | "set_env" | "unset_env" | "log" | "executable" | "let_env" => Vec::new(),
        other => {
            diags.warn(
                "unresolved_element",
                rel,
                format!("<{other}> at line {} is not interpreted", el.line),
            );
            Vec::new()
        }
    }
}

fn node_decl(el: &Element, exec_attrs: &[&str]) -> NodeDecl {
    NodeDecl {
        package: el.attr(&["pkg", "package"]),
        executable: el.attr(exec_attrs),
        name: el.attr(&["name"]),
        namespace: el.attr(&["namespace", "ns"]),
        remappings: el
            .children
            .iter()
            .filter(|c| c.tag == "remap")
            .filter_map(|c| Some((c.attr(&["from"])?, c.attr(&["to"])?)))
            .collect(),
        line: el.line,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::launch::action::Part;

    #[test]
    fn xml_nodes_groups_and_includes() {
        let src = r#"<launch>
  <arg name="robot" default="alice"/>
  <node pkg="demo" exec="talker" name="talker" namespace="$(var robot)">
    <remap from="chatter" to="chatter_alt"/>
  </node>
  <group>
    <push-ros-namespace namespace="main"/>
    <include file="$(find-pkg-share demo)/launch/sub.launch.xml">
      <arg name="x" value="1"/>
    </include>
  </group>
  <node pkg="demo" exec="listener" if="$(var use_listener)"/>
</launch>"#;
        let mut diags = Diagnostics::new();
        let actions = parse_xml_launch("demo/launch/a.launch.xml", src, &mut diags).unwrap();
        assert_eq!(actions.len(), 4);
        let Action::Node(talker) = &actions[1] else { panic!() };
        assert_eq!(talker.remappings.len(), 1);
        assert_eq!(
            talker.namespace.as_ref().unwrap().0,
            vec![Part::Arg { name: "robot".into(), default: None }]
        );
        let Action::Group { actions: inner, scoped, .. } = &actions[2] else { panic!() };
        assert!(*scoped);
        assert!(matches!(inner[0], Action::PushNamespace(_)));
        let Action::Include(inc) = &inner[1] else { panic!() };
        assert_eq!(inc.arguments[0].0, "x");
        assert!(diags.has_code("conditional"));
    }

    #[test]
    fn yaml_mirrors_xml() {
        let src = r#"
launch:
- arg:
    name: robot
    default: alice
- group:
    scoped: true
    children:
    - push-ros-namespace:
        namespace: backup
    - node:
        pkg: demo
        exec: talker
        name: Tom
        remap:
        - from: a
          to: b
"#;
        let mut diags = Diagnostics::new();
        let actions = parse_yaml_launch("x.launch.yaml", src, &mut diags).unwrap();
        assert_eq!(actions.len(), 2);
        let Action::Group { actions: inner, .. } = &actions[1] else { panic!() };
        let Action::Node(node) = &inner[1] else { panic!() };
        assert_eq!(node.name, Some(Text::lit("Tom")));
        assert_eq!(node.remappings, vec![(Text::lit("a"), Text::lit("b"))]);
        assert!(diags.is_empty());
    }

    #[test]
    fn malformed_xml_is_a_diagnostic() {
        let mut diags = Diagnostics::new();
        assert!(parse_xml_launch("x.xml", "<launch><node>", &mut diags).is_none());
        assert!(diags.has_code("unparseable_launch"));
    }
}
