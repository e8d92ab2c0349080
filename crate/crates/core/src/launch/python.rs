//! Python launch files, interpreted statically from
//! `generate_launch_description()`.
//!
//! Supported: `LaunchDescription([...])`, the `ld.add_action(...)` pattern,
//! `OpaqueFunction` bodies returning action lists, and the usual
//! substitutions. Loops and other dynamic constructs are reported, not run.

use std::collections::HashMap;

use tree_sitter::Node;

use super::action::{Action, IncludeDecl, NodeDecl, Part, Text};
use crate::diag::Diagnostics;
use crate::syntax::python::{Bindings, Evaluator, PyCall, PyFile, PyValue};
use crate::syntax::{descendants, line, named_children, text};

const IGNORED: [&str; 14] = [
    "LogInfo",
    "SetEnvironmentVariable",
    "AppendEnvironmentVariable",
    "UnsetEnvironmentVariable",
    "SetParameter",
    "SetParametersFromFile",
    "SetUseSimTime",
    "Shutdown",
    "EmitEvent",
    "UnsetLaunchConfiguration",
    "ExecuteProcess",
    "RegisterEventHandler",
    "SetROSLogDir",
    "ResetLaunchConfigurations",
];

pub(crate) fn parse_python_launch(rel_path: &str, src: String, diags: &mut Diagnostics) -> Option<Vec<Action>> {
    let file = PyFile::parse(src)?;
    if let Some(l) = file.first_error_line() {
        diags.warn(
            "unparseable_launch",
            Some(rel_path),
            format!("syntax error near line {l}; launch file skipped"),
        );
        return None;
    }
    let src = file.src.as_str();
    let root = file.root();
    let bindings = Bindings::collect(root, src);
    let eval = Evaluator::new(src, &bindings);
    let mut functions = HashMap::new();
    for stmt in named_children(root) {
        let def = if stmt.kind() == "decorated_definition" {
            stmt.child_by_field_name("definition").unwrap_or(stmt)
        } else {
            stmt
        };
        if def.kind() == "function_definition" {
            if let Some(name) = def.child_by_field_name("name") {
                functions.insert(text(name, src).to_string(), def);
            }
        }
    }
    let interp = Interp {
        rel_path,
        src,
        bindings: &bindings,
        eval: &eval,
        functions,
    };
    let Some(entry) = interp.functions.get("generate_launch_description").copied() else {
        diags.warn(
            "unparseable_launch",
            Some(rel_path),
            "no generate_launch_description(); launch file skipped",
        );
        return None;
    };
    Some(interp.function_actions(entry, 0, diags))
}

struct Interp<'a, 't> {
    rel_path: &'a str,
    src: &'a str,
    bindings: &'a Bindings<'t>,
    eval: &'a Evaluator<'a, 't>,
    functions: HashMap<String, Node<'t>>,
}

/// Where an `add_action` call sits relative to control flow.
enum Placement {
    Plain,
    Conditional,
    Loop,
}

impl<'t> Interp<'_, 't> {
    fn rel(&self) -> Option<&str> {
        Some(self.rel_path)
    }

    /// Actions returned by a launch-description function: the returned
    /// collection plus anything appended to it in the body.
    fn function_actions(&self, def: Node<'t>, depth: usize, diags: &mut Diagnostics) -> Vec<Action> {
        if depth > 4 {
            return Vec::new();
        }
        let Some(body) = def.child_by_field_name("body") else { return Vec::new() };
        let Some(ret) = own_nodes(body)
            .into_iter()
            .rfind(|n| n.kind() == "return_statement")
        else {
            diags.warn("unresolved_element", self.rel(), format!("function at line {} returns nothing", line(def)));
            return Vec::new();
        };
        let Some(value) = named_children(ret).into_iter().next() else { return Vec::new() };

        let mut actions = Vec::new();
        let collector = (value.kind() == "identifier").then(|| text(value, self.src).to_string());
        match &collector {
            Some(name) => {
                if let Some(init) = self.bindings.last_before(name, value.start_byte()) {
                    let v = self.eval.eval(init);
                    actions.extend(self.actions(&v, init.end_byte(), depth, diags));
                }
            }
            None => {
                let v = self.eval.eval(value);
                actions.extend(self.actions(&v, value.start_byte(), depth, diags));
            }
        }

        if let Some(name) = collector {
            for call_node in own_nodes(body).into_iter().filter(|n| n.kind() == "call") {
                let Some(function) = call_node.child_by_field_name("function") else { continue };
                let callee = text(function, self.src);
                let Some(method) = callee.strip_prefix(&format!("{name}.")) else { continue };
                if !matches!(method, "add_action" | "add_entity" | "append" | "extend") {
                    continue;
                }
                let Some(call) = self.eval.call(call_node) else { continue };
                let Some(arg) = call.args.first() else { continue };
                match placement(call_node, body) {
                    Placement::Loop => {
                        diags.warn(
                            "unresolved_element",
                            self.rel(),
                            format!("`{}` inside a loop at line {} is not expanded", call.text, call.line),
                        );
                        continue;
                    }
                    Placement::Conditional => diags.warn(
                        "conditional",
                        self.rel(),
                        format!("`{}` at line {} is guarded by a condition; included", call.text, call.line),
                    ),
                    Placement::Plain => {}
                }
                actions.extend(self.actions(arg, call_node.start_byte(), depth, diags));
            }
        }
        actions
    }

    fn lookup(&self, name: &str, offset: usize) -> Option<PyValue> {
        self.bindings
            .last_before(name, offset)
            .map(|n| self.eval.eval(n))
            .filter(|v| !matches!(v, PyValue::Ref(r) if r == name))
    }

    fn actions(&self, value: &PyValue, offset: usize, depth: usize, diags: &mut Diagnostics) -> Vec<Action> {
        match value {
            PyValue::List(items) | PyValue::Tuple(items) => items
                .iter()
                .flat_map(|v| self.actions(v, offset, depth, diags))
                .collect(),
            PyValue::Concat(parts) => parts
                .iter()
                .flat_map(|v| self.actions(v, offset, depth, diags))
                .collect(),
            PyValue::Ref(name) => match self.lookup(name, offset) {
                Some(v) => self.actions(&v, offset, depth, diags),
                None => {
                    diags.warn(
                        "unresolved_element",
                        self.rel(),
                        format!("`{name}` cannot be resolved to launch actions"),
                    );
                    Vec::new()
                }
            },
            PyValue::Call(call) => self.call_actions(call, offset, depth, diags),
            other => {
                diags.warn(
                    "unresolved_element",
                    self.rel(),
                    format!("`{}` is not a launch action", other.describe()),
                );
                Vec::new()
            }
        }
    }

    fn call_actions(&self, call: &PyCall, offset: usize, depth: usize, diags: &mut Diagnostics) -> Vec<Action> {
        let name = call.name();
        if call.kwarg("condition").is_some() {
            diags.warn(
                "conditional",
                self.rel(),
                format!("{name} at line {} has a condition; included unconditionally", call.line),
            );
        }
        match name {
            "LaunchDescription" => call
                .arg(0, "initial_entities")
                .map(|v| self.actions(v, offset, depth, diags))
                .unwrap_or_default(),
            "Node" | "LifecycleNode" => vec![Action::Node(self.node_decl(call, &["executable", "node_executable"], offset))],
            "IncludeLaunchDescription" => self.include(call, offset, diags).into_iter().collect(),
            "GroupAction" => {
                let scoped = !matches!(call.kwarg("scoped"), Some(PyValue::Bool(false)));
                let actions = call
                    .arg(0, "actions")
                    .map(|v| self.actions(v, offset, depth, diags))
                    .unwrap_or_default();
                vec![Action::Group {
                    namespace: None,
                    scoped,
                    actions,
                }]
            }
            "PushRosNamespace" | "PushROSNamespace" => match call.arg(0, "namespace") {
                Some(v) => vec![Action::PushNamespace(self.text(v, offset))],
                None => Vec::new(),
            },
            "SetRemap" => match (call.arg(0, "src"), call.arg(1, "dst")) {
                (Some(f), Some(t)) => vec![Action::SetRemap(self.text(f, offset), self.text(t, offset))],
                _ => {
                    diags.warn("malformed_remap", self.rel(), format!("SetRemap at line {} needs src and dst", call.line));
                    Vec::new()
                }
            },
            "DeclareLaunchArgument" => match call.arg(0, "name") {
                Some(PyValue::Str(arg)) => vec![Action::DeclareArgument {
                    name: arg.clone(),
                    default: call.kwarg("default_value").map(|v| self.text(v, offset)),
                }],
                _ => Vec::new(),
            },
            "SetLaunchConfiguration" => match (call.arg(0, "name"), call.arg(1, "value")) {
                (Some(PyValue::Str(arg)), Some(v)) => vec![Action::SetArgument {
                    name: arg.clone(),
                    value: self.text(v, offset),
                }],
                _ => Vec::new(),
            },
            "TimerAction" => vec![Action::Group {
                namespace: None,
                scoped: false,
                actions: call
                    .kwarg("actions")
                    .map(|v| self.actions(v, offset, depth, diags))
                    .unwrap_or_default(),
            }],
            "ComposableNodeContainer" | "LoadComposableNodes" => {
                let nodes = match call.kwarg("composable_node_descriptions") {
                    Some(list) => list
                        .items()
                        .unwrap_or_default()
                        .iter()
                        .filter_map(|v| match v {
                            PyValue::Call(c) if c.name() == "ComposableNode" => {
                                Some(Action::Node(self.node_decl(c, &["plugin"], offset)))
                            }
                            _ => None,
                        })
                        .collect(),
                    None => Vec::new(),
                };
                vec![Action::Group {
                    namespace: call.kwarg("namespace").map(|v| self.text(v, offset)),
                    scoped: true,
                    actions: nodes,
                }]
            }
            "OpaqueFunction" => {
                let target = match call.arg(0, "function") {
                    Some(PyValue::Ref(f)) => self.functions.get(f.as_str()).copied(),
                    _ => None,
                };
                match target {
                    Some(def) => self.function_actions(def, depth + 1, diags),
                    None => {
                        diags.warn(
                            "unresolved_element",
                            self.rel(),
                            format!("OpaqueFunction at line {} has no resolvable function", call.line),
                        );
                        Vec::new()
                    }
                }
            }
            n if IGNORED.contains(&n) => Vec::new(),
            _ => {
                // A helper call in this file returning actions.
                if let Some(def) = self.functions.get(call.callee.as_str()) {
                    return self.function_actions(*def, depth + 1, diags);
                }
                diags.warn(
                    "unresolved_element",
                    self.rel(),
                    format!("`{}` at line {} is not interpreted", call.text, call.line),
                );
                Vec::new()
            }
        }
    }

    fn node_decl(&self, call: &PyCall, exec_kws: &[&str], offset: usize) -> NodeDecl {
        let kw = |names: &[&str]| names.iter().find_map(|n| call.kwarg(n)).map(|v| self.text(v, offset));
        let remappings = call
            .kwarg("remappings")
            .map(|v| self.resolved(v, offset))
            .and_then(|v| v.items().map(<[PyValue]>::to_vec))
            .unwrap_or_default()
            .iter()
            .filter_map(|pair| match pair.items() {
                Some([from, to]) => Some((self.text(from, offset), self.text(to, offset))),
                _ => None,
            })
            .collect();
        NodeDecl {
            package: kw(&["package"]),
            executable: kw(exec_kws),
            name: kw(&["name", "node_name"]),
            namespace: kw(&["namespace", "node_namespace"]),
            remappings,
            line: call.line,
        }
    }

    fn resolved(&self, value: &PyValue, offset: usize) -> PyValue {
        match value {
            PyValue::Ref(name) => self.lookup(name, offset).unwrap_or_else(|| value.clone()),
            other => other.clone(),
        }
    }

    fn include(&self, call: &PyCall, offset: usize, diags: &mut Diagnostics) -> Option<Action> {
        let source = self.resolved(call.arg(0, "launch_description_source")?, offset);
        let path = match &source {
            PyValue::Call(src) if src.name().ends_with("LaunchDescriptionSource") => {
                src.arg(0, "launch_file_path").map(|v| self.text(v, offset))
            }
            other => Some(self.text(other, offset)),
        };
        let Some(path) = path else {
            diags.warn("unresolved_element", self.rel(), format!("include at line {} has no path", call.line));
            return None;
        };
        let mut arguments = Vec::new();
        if let Some(args) = call.kwarg("launch_arguments") {
            let args = self.resolved(args, offset);
            let pairs: Vec<(PyValue, PyValue)> = match &args {
                PyValue::Call(items) if items.name() == "items" => match &items.receiver {
                    Some(PyValue::Dict(pairs)) => pairs.clone(),
                    _ => Vec::new(),
                },
                PyValue::Dict(pairs) => pairs.clone(),
                PyValue::List(items) => items
                    .iter()
                    .filter_map(|i| match i.items() {
                        Some([k, v]) => Some((k.clone(), v.clone())),
                        _ => None,
                    })
                    .collect(),
                _ => {
                    diags.warn(
                        "unresolved_element",
                        self.rel(),
                        format!("launch_arguments `{}` at line {} not evaluated", args.describe(), call.line),
                    );
                    Vec::new()
                }
            };
            for (k, v) in pairs {
                if let PyValue::Str(k) = k {
                    arguments.push((k, self.text(&v, offset)));
                }
            }
        }
        Some(Action::Include(IncludeDecl {
            path,
            arguments,
            line: call.line,
        }))
    }

    fn text(&self, value: &PyValue, offset: usize) -> Text {
        match value {
            PyValue::Str(s) => Text::lit(s.clone()),
            PyValue::Int(i) => Text::lit(i.to_string()),
            PyValue::Bool(b) => Text::lit(b.to_string()),
            PyValue::List(items) | PyValue::Tuple(items) | PyValue::Concat(items) => {
                Text::concat(items.iter().map(|v| self.text(v, offset)))
            }
            PyValue::Ref(name) if name == "__file__" => Text::unknown("__file__"),
            PyValue::Ref(name) => match self.lookup(name, offset) {
                Some(v) => self.text(&v, offset),
                None => Text::unknown(name.clone()),
            },
            PyValue::Call(call) => self.call_text(call, offset),
            other => Text::unknown(other.describe()),
        }
    }

    fn call_text(&self, call: &PyCall, offset: usize) -> Text {
        match call.name() {
            "LaunchConfiguration" => match call.arg(0, "variable_name") {
                Some(PyValue::Str(name)) => Text(vec![Part::Arg {
                    name: name.clone(),
                    default: call.kwarg("default").map(|d| self.text(d, offset)),
                }]),
                _ => Text::unknown(call.text.clone()),
            },
            "get_package_share_directory" | "FindPackageShare" | "get_package_prefix" | "FindPackagePrefix" => {
                match call.arg(0, "package") {
                    Some(PyValue::Str(pkg)) => Text(vec![Part::PackageShare(pkg.clone())]),
                    _ => Text::unknown(call.text.clone()),
                }
            }
            "join" if call.callee.ends_with("path.join") => {
                Text::join_path(call.args.iter().map(|a| self.text(a, offset)))
            }
            "PathJoinSubstitution" => match call.args.first() {
                Some(PyValue::List(items)) => Text::join_path(items.iter().map(|a| self.text(a, offset))),
                _ => Text::unknown(call.text.clone()),
            },
            "ThisLaunchFileDir" => Text(vec![Part::ThisDir]),
            "dirname" if call.text.contains("__file__") => Text(vec![Part::ThisDir]),
            "TextSubstitution" => match call.kwarg("text") {
                Some(v) => self.text(v, offset),
                None => Text::unknown(call.text.clone()),
            },
            "str" => match call.args.first() {
                Some(v) => self.text(v, offset),
                None => Text::unknown(call.text.clone()),
            },
            _ => Text::unknown(call.text.clone()),
        }
    }
}

/// Descendants of `body` that are not inside a nested function or class.
fn own_nodes(body: Node<'_>) -> Vec<Node<'_>> {
    descendants(body)
        .into_iter()
        .filter(|n| {
            let mut p = n.parent();
            while let Some(node) = p {
                if node.id() == body.id() {
                    return true;
                }
                if matches!(node.kind(), "function_definition" | "class_definition" | "lambda") {
                    return false;
                }
                p = node.parent();
            }
            true
        })
        .collect()
}

fn placement(node: Node<'_>, body: Node<'_>) -> Placement {
    let mut p = node.parent();
    let mut conditional = false;
    while let Some(n) = p {
        if n.id() == body.id() {
            break;
        }
        match n.kind() {
            "for_statement" | "while_statement" | "list_comprehension" => return Placement::Loop,
            "if_statement" | "try_statement" | "conditional_expression" => conditional = true,
            _ => {}
        }
        p = n.parent();
    }
    if conditional {
        Placement::Conditional
    } else {
        Placement::Plain
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(src: &str) -> (Vec<Action>, Diagnostics) {
        let mut diags = Diagnostics::new();
        let actions = parse_python_launch("pkg/launch/a.launch.py", src.to_string(), &mut diags).unwrap();
        (actions, diags)
    }

    #[test]
    fn list_form_with_group_and_include() {
        let (actions, diags) = parse(
            r#"
import os
from ament_index_python.packages import get_package_share_directory
from launch import LaunchDescription
from launch.actions import GroupAction, IncludeLaunchDescription
from launch.launch_description_sources import PythonLaunchDescriptionSource
from launch_ros.actions import Node, PushRosNamespace

def generate_launch_description():
    share = get_package_share_directory('demo')
    return LaunchDescription([
        Node(package='demo', executable='example', name='example_node'),
        GroupAction([
            PushRosNamespace('main'),
            IncludeLaunchDescription(
                PythonLaunchDescriptionSource(os.path.join(share, 'launch', 'sub.launch.py')),
                launch_arguments={'robot': 'alice'}.items()),
        ]),
        Node(package='demo', executable='exec2', name='Tom', namespace='backup',
             remappings=[('chatter', '/shared/chatter')]),
    ])
"#,
        );
        assert!(diags.is_empty(), "{diags:?}");
        assert_eq!(actions.len(), 3);
        let Action::Group { actions: inner, .. } = &actions[1] else { panic!() };
        assert_eq!(inner[0], Action::PushNamespace(Text::lit("main")));
        let Action::Include(inc) = &inner[1] else { panic!() };
        assert_eq!(
            inc.path.0,
            vec![
                Part::PackageShare("demo".into()),
                Part::Lit("/".into()),
                Part::Lit("launch".into()),
                Part::Lit("/".into()),
                Part::Lit("sub.launch.py".into()),
            ]
        );
        assert_eq!(inc.arguments, vec![("robot".to_string(), Text::lit("alice"))]);
        let Action::Node(tom) = &actions[2] else { panic!() };
        assert_eq!(tom.remappings, vec![(Text::lit("chatter"), Text::lit("/shared/chatter"))]);
    }

    #[test]
    fn add_action_pattern_with_rebinding() {
        let (actions, diags) = parse(
            r#"
from launch import LaunchDescription
from launch_ros.actions import Node

def generate_launch_description():
    ld = LaunchDescription()
    node = Node(package='a', executable='one')
    ld.add_action(node)
    node = Node(package='a', executable='two')
    ld.add_action(node)
    for i in range(3):
        ld.add_action(Node(package='a', executable='loop'))
    return ld
"#,
        );
        let execs: Vec<_> = actions
            .iter()
            .map(|a| match a {
                Action::Node(n) => n.executable.clone().unwrap().describe(),
                _ => String::new(),
            })
            .collect();
        assert_eq!(execs, vec!["one", "two"]);
        assert!(diags.has_code("unresolved_element"));
    }

    #[test]
    fn conditions_and_launch_configurations() {
        let (actions, diags) = parse(
            r#"
from launch import LaunchDescription
from launch.actions import DeclareLaunchArgument
from launch.conditions import IfCondition
from launch.substitutions import LaunchConfiguration
from launch_ros.actions import Node

def generate_launch_description():
    ns = LaunchConfiguration('ns')
    return LaunchDescription([
        DeclareLaunchArgument('ns', default_value='main'),
        Node(package='a', executable='b', namespace=ns, condition=IfCondition(LaunchConfiguration('on'))),
    ])
"#,
        );
        assert!(diags.has_code("conditional"));
        let Action::Node(node) = &actions[1] else { panic!() };
        assert_eq!(
            node.namespace.as_ref().unwrap().0,
            vec![Part::Arg { name: "ns".into(), default: None }]
        );
    }

    #[test]
    fn opaque_function_body() {
        let (actions, _) = parse(
            r#"
from launch import LaunchDescription
from launch.actions import OpaqueFunction
from launch_ros.actions import Node

def launch_setup(context, *args, **kwargs):
    nodes = [Node(package='a', executable='x')]
    nodes.append(Node(package='a', executable='y'))
    return nodes

def generate_launch_description():
    return LaunchDescription([OpaqueFunction(function=launch_setup)])
"#,
        );
        assert_eq!(actions.len(), 2);
    }
}
