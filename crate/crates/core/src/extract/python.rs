//! rclpy node detection.
//!
//! A node is either a class deriving from `rclpy.node.Node` or a top-level
//! function that constructs a node directly (`rclpy.create_node(...)`).
//! Ports are the `create_publisher` / `create_subscription` /
//! `create_service` / `create_client` calls inside the class or function.

use std::collections::{BTreeSet, HashMap};

use tree_sitter::Node;

use super::RawPort;
use crate::diag::Diagnostics;
use crate::model::PortKind;
use crate::syntax::python::{imports, Bindings, Evaluator, PyCall, PyFile, PyValue};
use crate::syntax::{descendants, named_children, text};

#[derive(Debug, Clone)]
pub(crate) struct PyNode {
    pub class_name: String,
    pub node_name: Option<String>,
    pub ports: Vec<RawPort>,
    /// Set for nodes constructed directly inside a function.
    pub entry_function: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct PyModule {
    pub nodes: Vec<PyNode>,
    /// Top-level function -> names it calls (constructors included).
    pub function_calls: HashMap<String, BTreeSet<String>>,
    /// Local name -> dotted import origin.
    pub imports: HashMap<String, String>,
}

const PORT_FACTORIES: [(&str, PortKind); 4] = [
    ("create_publisher", PortKind::Publisher),
    ("create_subscription", PortKind::Subscriber),
    ("create_service", PortKind::ServiceServer),
    ("create_client", PortKind::ServiceClient),
];

pub(crate) fn analyze_module(rel_path: &str, src: String, diags: &mut Diagnostics) -> Option<PyModule> {
    let file = match PyFile::parse(src) {
        Some(file) => file,
        None => {
            diags.warn("unparseable_source", Some(rel_path), "parser failure; file skipped");
            return None;
        }
    };
    if let Some(l) = file.first_error_line() {
        diags.warn(
            "unparseable_source",
            Some(rel_path),
            format!("syntax error near line {l}; file skipped"),
        );
        return None;
    }
    let src = file.src.as_str();
    let root = file.root();
    let import_table = imports(root, src);
    let bindings = Bindings::collect(root, src);
    let eval = Evaluator::new(src, &bindings);
    let ctx = Ctx {
        rel_path,
        src,
        imports: &import_table,
        eval: &eval,
    };

    let mut module = PyModule::default();
    for stmt in named_children(root) {
        let def = unwrap_decorated(stmt);
        match def.kind() {
            "class_definition" if ctx.is_node_class(def) => {
                module.nodes.push(ctx.node_class(def, diags));
            }
            "function_definition" => {
                let Some(name) = def.child_by_field_name("name").map(|n| text(n, src).to_string())
                else {
                    continue;
                };
                let calls = ctx.calls_in(def);
                // Bare names passed as arguments, e.g. `run(MyNode)`, are
                // followed like calls.
                let passed = descendants(def)
                    .into_iter()
                    .filter(|n| n.kind() == "identifier" && n.parent().is_some_and(|p| p.kind() == "argument_list"))
                    .map(|n| text(n, src).to_string());
                module.function_calls.insert(
                    name.clone(),
                    calls.iter().map(|c| c.callee.clone()).chain(passed).collect(),
                );
                if let Some(node) = ctx.entry_function_node(&name, &calls, diags) {
                    module.nodes.push(node);
                }
            }
            _ => {}
        }
    }
    module.imports = import_table;
    Some(module)
}

fn unwrap_decorated(node: Node<'_>) -> Node<'_> {
    if node.kind() == "decorated_definition" {
        node.child_by_field_name("definition").unwrap_or(node)
    } else {
        node
    }
}

struct Ctx<'a, 't> {
    rel_path: &'a str,
    src: &'a str,
    imports: &'a HashMap<String, String>,
    eval: &'a Evaluator<'a, 't>,
}

impl<'t> Ctx<'_, 't> {
    fn origin<'s>(&'s self, name: &'s str) -> &'s str {
        // `rclpy.node.Node`, or a local alias of it.
        let (head, tail) = match name.split_once('.') {
            Some((h, t)) => (h, Some(t)),
            None => (name, None),
        };
        match (self.imports.get(head), tail) {
            (Some(full), None) => full,
            _ => name,
        }
    }

    fn resolves_to_rclpy_node(&self, name: &str) -> bool {
        let origin = self.origin(name);
        if origin == "rclpy.node.Node" || name == "rclpy.node.Node" {
            return true;
        }
        // Bare `Node` with a star import from rclpy.node.
        name == "Node" && !self.imports.contains_key("Node") && self.src.contains("from rclpy.node import *")
    }

    fn is_node_class(&self, class: Node<'t>) -> bool {
        class
            .child_by_field_name("superclasses")
            .map(|supers| {
                named_children(supers)
                    .into_iter()
                    .filter(|s| matches!(s.kind(), "identifier" | "attribute"))
                    .any(|s| self.resolves_to_rclpy_node(text(s, self.src)))
            })
            .unwrap_or(false)
    }

    fn calls_in(&self, node: Node<'t>) -> Vec<PyCall> {
        descendants(node)
            .into_iter()
            .filter(|n| n.kind() == "call")
            .filter_map(|n| self.eval.call(n))
            .collect()
    }

    fn node_class(&self, class: Node<'t>, diags: &mut Diagnostics) -> PyNode {
        let class_name = class
            .child_by_field_name("name")
            .map(|n| text(n, self.src).to_string())
            .unwrap_or_default();
        let calls = self.calls_in(class);

        let mut node_name = None;
        for call in &calls {
            let init_arg = match call.callee.as_str() {
                "__init__" if is_super_call(call) => call.arg(0, "node_name"),
                callee if callee.ends_with(".__init__") && self.resolves_to_rclpy_node(callee.trim_end_matches(".__init__")) => {
                    call.arg(1, "node_name")
                }
                _ => continue,
            };
            match init_arg {
                Some(PyValue::Str(s)) => node_name = Some(s.clone()),
                Some(other) => diags.warn(
                    "unresolved_node_name",
                    Some(self.rel_path),
                    format!(
                        "{class_name}: node name `{}` is not a literal (line {})",
                        other.describe(),
                        call.line
                    ),
                ),
                None => {}
            }
            break;
        }

        PyNode {
            ports: self.ports(&class_name, &calls, diags),
            class_name,
            node_name,
            entry_function: None,
        }
    }

    fn entry_function_node(&self, function: &str, calls: &[PyCall], diags: &mut Diagnostics) -> Option<PyNode> {
        let construct = calls.iter().find(|c| {
            let origin = self.origin(&c.callee);
            origin == "rclpy.create_node"
                || c.callee == "rclpy.create_node"
                || self.resolves_to_rclpy_node(&c.callee)
        })?;
        let node_name = match construct.arg(0, "node_name") {
            Some(PyValue::Str(s)) => Some(s.clone()),
            other => {
                diags.warn(
                    "unresolved_node_name",
                    Some(self.rel_path),
                    format!(
                        "{function}: node name `{}` is not a literal (line {})",
                        other.map(PyValue::describe).unwrap_or_default(),
                        construct.line
                    ),
                );
                None
            }
        };
        let stem = module_stem(self.rel_path);
        let class_name = format!("{stem}.{function}");
        Some(PyNode {
            ports: self.ports(&class_name, calls, diags),
            class_name,
            node_name,
            entry_function: Some(function.to_string()),
        })
    }

    fn ports(&self, owner: &str, calls: &[PyCall], diags: &mut Diagnostics) -> Vec<RawPort> {
        let mut ports = Vec::new();
        for call in calls {
            let Some(kind) = PORT_FACTORIES
                .iter()
                .find(|(name, _)| *name == call.name())
                .map(|(_, k)| *k)
            else {
                continue;
            };
            let (type_kw, name_kw) = if kind.is_service() {
                ("srv_type", "srv_name")
            } else {
                ("msg_type", "topic")
            };
            let at = format!("{owner} line {}", call.line);

            let Some(type_value) = call.arg(0, type_kw) else {
                diags.warn("unresolved_type", Some(self.rel_path), format!("{at}: missing interface type"));
                continue;
            };
            let Some(interface_type) = self.interface_type(type_value) else {
                diags.warn(
                    "unresolved_type",
                    Some(self.rel_path),
                    format!("{at}: cannot resolve interface type `{}`; port skipped", type_value.describe()),
                );
                continue;
            };
            if interface_type.split('/').nth(1) != Some(if kind.is_service() { "srv" } else { "msg" }) {
                diags.warn(
                    "unresolved_type",
                    Some(self.rel_path),
                    format!("{at}: `{interface_type}` does not fit a {kind}; port skipped"),
                );
                continue;
            }

            let (declared_name, unresolved) = match call.arg(1, name_kw) {
                Some(PyValue::Str(s)) => (s.clone(), false),
                Some(other) => {
                    diags.warn(
                        "unresolved_name",
                        Some(self.rel_path),
                        format!("{at}: {kind} name `{}` is not a literal", other.describe()),
                    );
                    (other.describe(), true)
                }
                None => {
                    diags.warn("unresolved_name", Some(self.rel_path), format!("{at}: {kind} without a name"));
                    ("?".to_string(), true)
                }
            };

            let callback_name = if kind.requires_callback() {
                let value = call.arg(2, "callback");
                Some(value.map(callback_identifier).unwrap_or_else(|| {
                    diags.warn("unresolved_callback", Some(self.rel_path), format!("{at}: callback missing"));
                    "?".to_string()
                }))
            } else {
                None
            };

            ports.push(RawPort {
                kind,
                interface_type,
                declared_name,
                callback_name,
                unresolved,
            });
        }
        ports
    }

    /// `Image` / `sensor_msgs.msg.Image` / `msg.Image` -> `sensor_msgs/msg/Image`.
    fn interface_type(&self, value: &PyValue) -> Option<String> {
        let name = match value {
            PyValue::Ref(s) => s.as_str(),
            _ => return None,
        };
        let dotted = match self.imports.get(name) {
            Some(full) => full.clone(),
            None => {
                // Longest imported prefix of the dotted name.
                let segments: Vec<&str> = name.split('.').collect();
                (1..segments.len())
                    .rev()
                    .find_map(|n| {
                        let prefix = segments[..n].join(".");
                        self.imports
                            .get(&prefix)
                            .map(|full| format!("{full}.{}", segments[n..].join(".")))
                    })
                    .unwrap_or_else(|| name.to_string())
            }
        };
        let segments: Vec<&str> = dotted.split('.').collect();
        match segments.as_slice() {
            [pkg, kind @ ("msg" | "srv"), ty] => Some(format!("{pkg}/{kind}/{ty}")),
            // `from pkg.msg._image import Image`
            [pkg, kind @ ("msg" | "srv"), _, ty] => Some(format!("{pkg}/{kind}/{ty}")),
            _ => None,
        }
    }
}

fn is_super_call(call: &PyCall) -> bool {
    matches!(&call.receiver, Some(PyValue::Call(c)) if c.callee == "super")
}

/// Registered handler identity: `self.on_image` -> `on_image`.
fn callback_identifier(value: &PyValue) -> String {
    match value {
        PyValue::Ref(s) => s.rsplit('.').next().unwrap_or(s).to_string(),
        PyValue::Call(call) if call.name() == "partial" => call
            .args
            .first()
            .map(callback_identifier)
            .unwrap_or_else(|| call.text.clone()),
        PyValue::Unknown(s) if s.starts_with("lambda") => "<lambda>".to_string(),
        other => other.describe(),
    }
}

fn module_stem(rel_path: &str) -> &str {
    let file = rel_path.rsplit('/').next().unwrap_or(rel_path);
    file.strip_suffix(".py").unwrap_or(file)
}

/// Whether a Python file is a launch description rather than node code.
pub(crate) fn is_launch_script(rel_path: &str, src: &str) -> bool {
    rel_path.ends_with(".launch.py")
        || rel_path.split('/').any(|seg| seg == "launch")
        || src.contains("def generate_launch_description")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn analyze(src: &str) -> (PyModule, Diagnostics) {
        let mut diags = Diagnostics::new();
        let module = analyze_module("pkg/pkg/example.py", src.to_string(), &mut diags).unwrap();
        (module, diags)
    }

    #[test]
    fn subscriber_port_from_class_body() {
        let (module, _) = analyze(
            r#"
import rclpy
from rclpy.node import Node
from sensor_msgs.msg import Image

class Camera(Node):
    def __init__(self):
        super().__init__('camera_listener')
        self.sub = self.create_subscription(Image, "camera/rgb", self.on_image, 10)

    def on_image(self, msg):
        pass
"#,
        );
        assert_eq!(module.nodes.len(), 1);
        let node = &module.nodes[0];
        assert_eq!(node.class_name, "Camera");
        assert_eq!(node.node_name.as_deref(), Some("camera_listener"));
        assert_eq!(
            node.ports,
            vec![RawPort {
                kind: PortKind::Subscriber,
                interface_type: "sensor_msgs/msg/Image".into(),
                declared_name: "camera/rgb".into(),
                callback_name: Some("on_image".into()),
                unresolved: false,
            }]
        );
    }

    #[test]
    fn keyword_arguments_constants_and_qualified_types() {
        let (module, diags) = analyze(
            r#"
import rclpy.node
import std_msgs.msg
from std_srvs.srv import Trigger as Trig
from example_interfaces import srv
STATUS = 'status'

class Worker(rclpy.node.Node):
    def __init__(self):
        super().__init__(node_name='worker')
        self.pub = self.create_publisher(std_msgs.msg.String, STATUS, 10)
        self.srv = self.create_service(srv_type=Trig, srv_name='reset', callback=self.handle_reset)
        self.cli = self.create_client(srv.AddTwoInts, 'add')
        self.sub = self.create_subscription(std_msgs.msg.Bool, 'flag', lambda m: None, 10)
"#,
        );
        assert!(diags.is_empty(), "{diags:?}");
        let ports = &module.nodes[0].ports;
        assert_eq!(ports.len(), 4);
        assert_eq!(ports[0].interface_type, "std_msgs/msg/String");
        assert_eq!(ports[0].declared_name, "status");
        assert_eq!(ports[1].kind, PortKind::ServiceServer);
        assert_eq!(ports[1].interface_type, "std_srvs/srv/Trigger");
        assert_eq!(ports[1].callback_name.as_deref(), Some("handle_reset"));
        assert_eq!(ports[2].interface_type, "example_interfaces/srv/AddTwoInts");
        assert_eq!(ports[2].callback_name, None);
        assert_eq!(ports[3].callback_name.as_deref(), Some("<lambda>"));
    }

    #[test]
    fn dynamic_topic_is_marked_unresolved() {
        let (module, diags) = analyze(
            r#"
from rclpy.node import Node
from std_msgs.msg import String

class Dyn(Node):
    def __init__(self, prefix):
        super().__init__('dyn')
        self.pub = self.create_publisher(String, prefix + '/out', 10)
        self.pub2 = self.create_publisher(String, f'{prefix}/other', 10)
"#,
        );
        let ports = &module.nodes[0].ports;
        assert_eq!(ports.len(), 2);
        assert!(ports.iter().all(|p| p.unresolved));
        assert_eq!(diags.with_code("unresolved_name").count(), 2);
    }

    #[test]
    fn inert_class_and_non_node_classes() {
        let (module, _) = analyze(
            r#"
from rclpy.node import Node
class Inert(Node):
    def __init__(self):
        super().__init__('inert')
class Helper:
    def create_publisher(self, a, b, c):
        pass
"#,
        );
        assert_eq!(module.nodes.len(), 1);
        assert!(module.nodes[0].ports.is_empty());
    }

    #[test]
    fn direct_construction_in_entry_function() {
        let (module, _) = analyze(
            r#"
import rclpy
from std_msgs.msg import String

def main():
    rclpy.init()
    node = rclpy.create_node('minimal')
    pub = node.create_publisher(String, 'topic', 10)
    rclpy.spin(node)
"#,
        );
        assert_eq!(module.nodes.len(), 1);
        let node = &module.nodes[0];
        assert_eq!(node.class_name, "example.main");
        assert_eq!(node.entry_function.as_deref(), Some("main"));
        assert_eq!(node.ports[0].declared_name, "topic");
    }

    #[test]
    fn unknown_type_skips_port_with_diagnostic() {
        let (module, diags) = analyze(
            r#"
from rclpy.node import Node
class A(Node):
    def __init__(self):
        super().__init__('a')
        self.create_publisher(Mystery, 'x', 10)
"#,
        );
        assert!(module.nodes[0].ports.is_empty());
        assert!(diags.has_code("unresolved_type"));
    }

    #[test]
    fn syntax_error_skips_file() {
        let mut diags = Diagnostics::new();
        assert!(analyze_module("x.py", "class A(:\n".into(), &mut diags).is_none());
        assert!(diags.has_code("unparseable_source"));
    }
}
