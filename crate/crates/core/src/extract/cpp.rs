//! rclcpp node detection: classes deriving from `rclcpp::Node`, their
//! out-of-line member definitions, and the ports created in either.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use tree_sitter::Node;

use super::RawPort;
use crate::diag::Diagnostics;
use crate::model::PortKind;
use crate::syntax::cpp::{string_constants, string_literal, strip_spaces, type_aliases, CppFile};
use crate::syntax::{descendants, line, named_children, squash, text};

#[derive(Debug, Clone, Default)]
pub(crate) struct CppNode {
    pub class_name: String,
    /// Namespace-qualified name, e.g. `demo::Talker`.
    pub qualified_name: String,
    pub node_name: Option<String>,
    pub defined_in: BTreeSet<String>,
    pub implemented_in: BTreeSet<String>,
    /// Files with a `main` that constructs the class.
    pub constructed_in: BTreeSet<String>,
    pub ports: Vec<RawPort>,
}

pub(crate) fn is_header(path: &str) -> bool {
    [".hpp", ".h", ".hh", ".hxx"].iter().any(|e| path.ends_with(e))
}

pub(crate) fn is_cpp_source(path: &str) -> bool {
    is_header(path) || [".cpp", ".cc", ".cxx"].iter().any(|e| path.ends_with(e))
}

const PORT_FACTORIES: [(&str, PortKind); 4] = [
    ("create_publisher", PortKind::Publisher),
    ("create_subscription", PortKind::Subscriber),
    ("create_service", PortKind::ServiceServer),
    ("create_client", PortKind::ServiceClient),
];

struct Parsed {
    rel_path: String,
    file: CppFile,
    constants: HashMap<String, String>,
    aliases: HashMap<String, String>,
}

/// Analyzes all C++ files of one package; files are `(repo-relative path,
/// contents)` in a fixed order.
pub(crate) fn analyze_package(files: Vec<(String, String)>, diags: &mut Diagnostics) -> Vec<CppNode> {
    let mut parsed = Vec::new();
    for (rel_path, src) in files {
        match CppFile::parse(src) {
            Some(file) => {
                if file.root().has_error() {
                    // Macro-heavy code often trips the grammar; keep going.
                    diags.info(
                        "partial_parse",
                        Some(&rel_path),
                        "C++ syntax not fully recognized; extraction may be partial",
                    );
                }
                let constants = string_constants(file.root(), &file.src);
                let aliases = type_aliases(file.root(), &file.src);
                parsed.push(Parsed {
                    rel_path,
                    file,
                    constants,
                    aliases,
                });
            }
            None => diags.warn("unparseable_source", Some(&rel_path), "parser failure; file skipped"),
        }
    }
    // Aliases declared in headers are visible to every file of the package.
    let mut shared: HashMap<String, String> = HashMap::new();
    for p in parsed.iter().filter(|p| is_header(&p.rel_path)) {
        for (k, v) in &p.aliases {
            shared.entry(k.clone()).or_insert_with(|| v.clone());
        }
    }
    for p in &mut parsed {
        for (k, v) in &shared {
            p.aliases.entry(k.clone()).or_insert_with(|| v.clone());
        }
    }

    // Pass 1: class definitions.
    let mut nodes: BTreeMap<String, CppNode> = BTreeMap::new();
    for p in &parsed {
        for class in descendants(p.file.root())
            .into_iter()
            .filter(|n| matches!(n.kind(), "class_specifier" | "struct_specifier"))
        {
            let src = p.file.src.as_str();
            let (Some(name), Some(body)) = (class.child_by_field_name("name"), class.child_by_field_name("body"))
            else {
                continue;
            };
            if !derives_from_node(class, src, &p.aliases) {
                continue;
            }
            let class_name = text(name, src).to_string();
            let qualified_name = qualify(class, src, &class_name);
            let entry = nodes.entry(class_name.clone()).or_insert_with(|| CppNode {
                class_name: class_name.clone(),
                qualified_name,
                ..CppNode::default()
            });
            entry.defined_in.insert(p.rel_path.clone());
            scan_body(p, body, entry, diags);
        }
    }

    // Pass 2: out-of-line members and construction sites.
    for p in &parsed {
        let src = p.file.src.as_str();
        for def in descendants(p.file.root())
            .into_iter()
            .filter(|n| n.kind() == "function_definition")
        {
            let Some(declarator) = def.child_by_field_name("declarator") else { continue };
            let Some(function_name) = function_name(declarator, src) else { continue };
            if let Some((owner, _member)) = function_name.rsplit_once("::") {
                let owner = owner.rsplit("::").next().unwrap_or(owner);
                if let Some(entry) = nodes.get_mut(owner) {
                    entry.implemented_in.insert(p.rel_path.clone());
                    scan_body(p, def, entry, diags);
                }
            } else if function_name == "main" {
                let body_text = text(def, src);
                for entry in nodes.values_mut() {
                    if constructs(body_text, &entry.class_name) {
                        entry.constructed_in.insert(p.rel_path.clone());
                    }
                }
            }
        }
    }

    nodes.into_values().collect()
}

fn derives_from_node(class: Node<'_>, src: &str, aliases: &HashMap<String, String>) -> bool {
    named_children(class)
        .into_iter()
        .filter(|c| c.kind() == "base_class_clause")
        .flat_map(named_children)
        .filter(|b| matches!(b.kind(), "type_identifier" | "qualified_identifier"))
        .any(|b| {
            let base = strip_spaces(text(b, src));
            let base = aliases.get(&base).cloned().unwrap_or(base);
            base == "rclcpp::Node" || base == "::rclcpp::Node"
        })
}

/// Prefixes enclosing `namespace` blocks.
fn qualify(class: Node<'_>, src: &str, name: &str) -> String {
    let mut segments = vec![name.to_string()];
    let mut current = class.parent();
    while let Some(node) = current {
        if node.kind() == "namespace_definition" {
            if let Some(n) = node.child_by_field_name("name") {
                segments.push(text(n, src).to_string());
            }
        }
        current = node.parent();
    }
    segments.reverse();
    segments.join("::")
}

fn function_name(declarator: Node<'_>, src: &str) -> Option<String> {
    match declarator.kind() {
        "function_declarator" => declarator
            .child_by_field_name("declarator")
            .map(|d| strip_spaces(text(d, src))),
        "pointer_declarator" | "reference_declarator" => named_children(declarator)
            .into_iter()
            .find_map(|c| function_name(c, src)),
        _ => None,
    }
}

fn constructs(body: &str, class_name: &str) -> bool {
    let compact = strip_spaces(body);
    [
        format!("make_shared<{class_name}>"),
        format!("make_unique<{class_name}>"),
        format!("new{class_name}("),
    ]
    .iter()
    .any(|pattern| {
        compact.match_indices(pattern.as_str()).any(|(i, _)| {
            // Whole-word match on the class name.
            let before = compact[..i].chars().last();
            !matches!(before, Some(c) if c.is_ascii_alphanumeric() || c == '_')
                || pattern.starts_with("make_")
        })
    }) || compact.contains(&format!("::{class_name}>"))
}

fn scan_body(p: &Parsed, scope: Node<'_>, entry: &mut CppNode, diags: &mut Diagnostics) {
    let src = p.file.src.as_str();
    for node in descendants(scope) {
        match node.kind() {
            "field_initializer" => {
                let target = named_children(node)
                    .into_iter()
                    .find(|c| matches!(c.kind(), "field_identifier" | "qualified_identifier" | "identifier"));
                let Some(target) = target else { continue };
                let target = strip_spaces(text(target, src));
                if target != "Node" && target != "rclcpp::Node" {
                    continue;
                }
                let args = named_children(node)
                    .into_iter()
                    .find(|c| matches!(c.kind(), "argument_list" | "initializer_list"));
                if let Some(first) = args.and_then(|a| named_children(a).into_iter().next()) {
                    match literal_or_constant(p, first) {
                        Some(name) => entry.node_name = Some(name),
                        None => diags.warn(
                            "unresolved_node_name",
                            Some(&p.rel_path),
                            format!(
                                "{}: node name `{}` is not a literal (line {})",
                                entry.class_name,
                                squash(text(first, src)),
                                line(first)
                            ),
                        ),
                    }
                }
            }
            "call_expression" => {
                if let Some(port) = port_from_call(p, node, &entry.class_name, diags) {
                    entry.ports.push(port);
                }
            }
            _ => {}
        }
    }
}

fn literal_or_constant(p: &Parsed, node: Node<'_>) -> Option<String> {
    let src = p.file.src.as_str();
    if let Some(s) = string_literal(node, src) {
        return Some(s);
    }
    match node.kind() {
        "identifier" | "qualified_identifier" => {
            let name = strip_spaces(text(node, src));
            let short = name.rsplit("::").next().unwrap_or(&name);
            p.constants.get(short).cloned()
        }
        // std::string("x")
        "call_expression" => node
            .child_by_field_name("arguments")
            .and_then(|a| named_children(a).into_iter().next())
            .and_then(|inner| literal_or_constant(p, inner)),
        _ => None,
    }
}

fn port_from_call(p: &Parsed, call: Node<'_>, owner: &str, diags: &mut Diagnostics) -> Option<RawPort> {
    let src = p.file.src.as_str();
    let function = call.child_by_field_name("function")?;
    let template = match function.kind() {
        "template_function" => function,
        "field_expression" => function.child_by_field_name("field").filter(|f| f.kind() == "template_method")?,
        "qualified_identifier" => function.child_by_field_name("name").filter(|n| n.kind() == "template_function")?,
        _ => return None,
    };
    let method = text(template.child_by_field_name("name")?, src);
    let kind = PORT_FACTORIES.iter().find(|(n, _)| *n == method).map(|(_, k)| *k)?;
    let at = format!("{owner} line {}", line(call));
    let rel = Some(p.rel_path.as_str());

    let type_arg = template
        .child_by_field_name("arguments")
        .and_then(|a| named_children(a).into_iter().next())
        .map(|t| strip_spaces(text(t, src)));
    let Some(type_arg) = type_arg else {
        diags.warn("unresolved_type", rel, format!("{at}: missing template argument"));
        return None;
    };
    let Some(interface_type) = interface_type(&type_arg, &p.aliases) else {
        diags.warn(
            "unresolved_type",
            rel,
            format!("{at}: cannot resolve interface type `{type_arg}`; port skipped"),
        );
        return None;
    };
    if interface_type.split('/').nth(1) != Some(if kind.is_service() { "srv" } else { "msg" }) {
        diags.warn("unresolved_type", rel, format!("{at}: `{interface_type}` does not fit a {kind}; port skipped"));
        return None;
    }

    let args: Vec<Node<'_>> = call
        .child_by_field_name("arguments")
        .map(named_children)
        .unwrap_or_default()
        .into_iter()
        .filter(|a| a.kind() != "comment")
        .collect();
    let (declared_name, unresolved) = match args.first() {
        Some(first) => match literal_or_constant(p, *first) {
            Some(name) => (name, false),
            None => {
                let expr = squash(text(*first, src));
                diags.warn("unresolved_name", rel, format!("{at}: {kind} name `{expr}` is not a literal"));
                (expr, true)
            }
        },
        None => {
            diags.warn("unresolved_name", rel, format!("{at}: {kind} without a name"));
            ("?".to_string(), true)
        }
    };

    let callback_name = if kind.requires_callback() {
        // Subscriptions take (topic, qos, callback); services (name, callback).
        let position = if kind == PortKind::Subscriber { 2 } else { 1 };
        Some(match args.get(position) {
            Some(arg) => callback_identifier(*arg, src),
            None => {
                diags.warn("unresolved_callback", rel, format!("{at}: callback missing"));
                "?".to_string()
            }
        })
    } else {
        None
    };

    Some(RawPort {
        kind,
        interface_type,
        declared_name,
        callback_name,
        unresolved,
    })
}

/// `std_msgs::msg::String` (after alias expansion) -> `std_msgs/msg/String`.
fn interface_type(type_arg: &str, aliases: &HashMap<String, String>) -> Option<String> {
    let mut ty = type_arg.trim_start_matches("::").to_string();
    for _ in 0..4 {
        let head = ty.split("::").next().unwrap_or(&ty).to_string();
        match aliases.get(&head) {
            Some(full) if *full != ty => {
                ty = match ty.strip_prefix(&head) {
                    Some(rest) => format!("{full}{rest}"),
                    None => full.clone(),
                };
            }
            _ => break,
        }
    }
    let segments: Vec<&str> = ty.split("::").collect();
    match segments.as_slice() {
        [pkg, kind @ ("msg" | "srv"), name] => Some(format!("{pkg}/{kind}/{name}")),
        _ => None,
    }
}

fn callback_identifier(arg: Node<'_>, src: &str) -> String {
    if arg.kind() == "lambda_expression" {
        return "<lambda>".to_string();
    }
    // std::bind(&Class::method, this, _1)
    if let Some(pointer) = descendants(arg).into_iter().find(|n| n.kind() == "pointer_expression") {
        if let Some(target) = pointer.child_by_field_name("argument") {
            let name = strip_spaces(text(target, src));
            return name.rsplit("::").next().unwrap_or(&name).to_string();
        }
    }
    if descendants(arg).iter().any(|n| n.kind() == "lambda_expression") {
        return "<lambda>".to_string();
    }
    let name = strip_spaces(text(arg, src));
    name.rsplit("::").next().unwrap_or(&name).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = r#"
#pragma once
#include <rclcpp/rclcpp.hpp>
#include <sensor_msgs/msg/image.hpp>
namespace demo {
using Image = sensor_msgs::msg::Image;
class Talker : public rclcpp::Node {
public:
  explicit Talker(const rclcpp::NodeOptions & options);
private:
  void on_image(const Image::SharedPtr msg);
  rclcpp::Subscription<Image>::SharedPtr sub_;
};
}
"#;

    const SOURCE: &str = r#"
#include "demo/talker.hpp"
namespace demo {
static const std::string kStatus = "status";
Talker::Talker(const rclcpp::NodeOptions & options) : Node("talker", options) {
  pub_ = this->create_publisher<std_msgs::msg::String>(kStatus, 10);
  sub_ = create_subscription<Image>("camera/rgb", rclcpp::SensorDataQoS(),
      std::bind(&Talker::on_image, this, std::placeholders::_1));
  srv_ = create_service<std_srvs::srv::Trigger>("reset",
      [this](const std::shared_ptr<std_srvs::srv::Trigger::Request>, std::shared_ptr<std_srvs::srv::Trigger::Response>) {});
  cli_ = create_client<std_srvs::srv::SetBool>(prefix_ + "/enable");
}
void Talker::on_image(const Image::SharedPtr msg) {}
}
"#;

    const MAIN: &str = r#"
#include "demo/talker.hpp"
int main(int argc, char ** argv) {
  rclcpp::init(argc, argv);
  rclcpp::spin(std::make_shared<demo::Talker>(rclcpp::NodeOptions()));
}
"#;

    #[test]
    fn header_source_and_main_are_attributed() {
        let mut diags = Diagnostics::new();
        let nodes = analyze_package(
            vec![
                ("demo/include/demo/talker.hpp".into(), HEADER.into()),
                ("demo/src/main.cpp".into(), MAIN.into()),
                ("demo/src/talker.cpp".into(), SOURCE.into()),
            ],
            &mut diags,
        );
        assert_eq!(nodes.len(), 1);
        let node = &nodes[0];
        assert_eq!(node.class_name, "Talker");
        assert_eq!(node.qualified_name, "demo::Talker");
        assert_eq!(node.node_name.as_deref(), Some("talker"));
        assert!(node.defined_in.contains("demo/include/demo/talker.hpp"));
        assert!(node.implemented_in.contains("demo/src/talker.cpp"));
        assert!(node.constructed_in.contains("demo/src/main.cpp"));

        let ports = &node.ports;
        assert_eq!(ports.len(), 4, "{ports:#?}");
        assert_eq!(ports[0].interface_type, "std_msgs/msg/String");
        assert_eq!(ports[1].interface_type, "sensor_msgs/msg/Image");
        assert_eq!(ports[1].callback_name.as_deref(), Some("on_image"));
        assert_eq!(ports[0].declared_name, "status");
        assert_eq!(ports[2].kind, PortKind::ServiceServer);
        assert_eq!(ports[2].callback_name.as_deref(), Some("<lambda>"));
        assert!(ports[3].unresolved);
        assert_eq!(ports[3].declared_name, "prefix_ + \"/enable\"");
    }

    #[test]
    fn alias_in_same_file_and_bound_callback() {
        let mut diags = Diagnostics::new();
        let src = r#"
using Image = sensor_msgs::msg::Image;
class Cam : public rclcpp::Node {
 public:
  Cam() : Node("cam") {
    sub_ = this->create_subscription<Image>("camera/rgb", 10, std::bind(&Cam::on_image, this, std::placeholders::_1));
  }
  void on_image(Image::SharedPtr) {}
};
"#;
        let nodes = analyze_package(vec![("p/src/cam.cpp".into(), src.into())], &mut diags);
        let port = &nodes[0].ports[0];
        assert_eq!(port.interface_type, "sensor_msgs/msg/Image");
        assert_eq!(port.declared_name, "camera/rgb");
        assert_eq!(port.callback_name.as_deref(), Some("on_image"));
    }

    #[test]
    fn non_node_classes_ignored() {
        let mut diags = Diagnostics::new();
        let nodes = analyze_package(
            vec![("p/src/a.cpp".into(), "class Helper : public Base { void f(); };".into())],
            &mut diags,
        );
        assert!(nodes.is_empty());
    }
}
