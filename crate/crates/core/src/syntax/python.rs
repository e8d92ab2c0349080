//! Static evaluation of the literal subset of Python.
//!
//! Expressions are folded into [`PyValue`] trees: literals, containers and
//! calls survive; anything else is kept as opaque text. Names are folded
//! through same-file simple assignments only when the name is bound exactly
//! once in the file.

use std::collections::HashMap;

use tree_sitter::{Node, Parser, Tree};

use super::{line, named_children, squash, text};

pub(crate) struct PyFile {
    pub src: String,
    pub tree: Tree,
}

impl PyFile {
    pub fn parse(src: String) -> Option<Self> {
        let mut parser = Parser::new();
        parser
            .set_language(&tree_sitter_python::LANGUAGE.into())
            .expect("bundled grammar");
        let tree = parser.parse(&src, None)?;
        Some(Self { src, tree })
    }

    pub fn root(&self) -> Node<'_> {
        self.tree.root_node()
    }

    /// Line of the first syntax error, if any.
    pub fn first_error_line(&self) -> Option<usize> {
        if !self.root().has_error() {
            return None;
        }
        super::descendants(self.root())
            .into_iter()
            .find(|n| n.is_error() || n.is_missing())
            .map(line)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum PyValue {
    Str(String),
    Int(i64),
    Bool(bool),
    None,
    List(Vec<PyValue>),
    Tuple(Vec<PyValue>),
    Dict(Vec<(PyValue, PyValue)>),
    Call(Box<PyCall>),
    /// `a + b` where the operands do not fold to one string or list.
    Concat(Vec<PyValue>),
    /// A name or attribute chain not bound to a foldable value.
    Ref(String),
    /// Any other expression, as source text.
    Unknown(String),
}

impl PyValue {
    pub fn as_str(&self) -> Option<&str> {
        match self {
            PyValue::Str(s) => Some(s),
            _ => None,
        }
    }

    #[cfg(test)]
    pub fn as_call(&self) -> Option<&PyCall> {
        match self {
            PyValue::Call(c) => Some(c),
            _ => None,
        }
    }

    pub fn items(&self) -> Option<&[PyValue]> {
        match self {
            PyValue::List(items) | PyValue::Tuple(items) => Some(items),
            _ => None,
        }
    }

    /// Source-like rendering used in diagnostics and unresolved names.
    pub fn describe(&self) -> String {
        match self {
            PyValue::Str(s) => format!("'{s}'"),
            PyValue::Int(i) => i.to_string(),
            PyValue::Bool(b) => if *b { "True" } else { "False" }.to_string(),
            PyValue::None => "None".to_string(),
            PyValue::List(items) => format!(
                "[{}]",
                items.iter().map(PyValue::describe).collect::<Vec<_>>().join(", ")
            ),
            PyValue::Tuple(items) => format!(
                "({})",
                items.iter().map(PyValue::describe).collect::<Vec<_>>().join(", ")
            ),
            PyValue::Dict(_) => "{...}".to_string(),
            PyValue::Call(call) => call.text.clone(),
            PyValue::Concat(parts) => parts.iter().map(PyValue::describe).collect::<Vec<_>>().join(" + "),
            PyValue::Ref(s) | PyValue::Unknown(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PyCall {
    /// Dotted callee text (`launch_ros.actions.Node`, `self.create_publisher`)
    /// or just the method name when the receiver is not a plain name.
    pub callee: String,
    /// Receiver value for method calls on non-name expressions (`{..}.items()`).
    pub receiver: Option<PyValue>,
    pub args: Vec<PyValue>,
    pub kwargs: Vec<(String, PyValue)>,
    pub line: usize,
    pub text: String,
}

impl PyCall {
    /// Last segment of the callee.
    pub fn name(&self) -> &str {
        self.callee.rsplit('.').next().unwrap_or(&self.callee)
    }

    pub fn kwarg(&self, name: &str) -> Option<&PyValue> {
        self.kwargs.iter().find(|(k, _)| k == name).map(|(_, v)| v)
    }

    /// Keyword argument `name`, else positional argument `position`.
    pub fn arg(&self, position: usize, name: &str) -> Option<&PyValue> {
        self.kwarg(name).or_else(|| self.args.get(position))
    }
}

/// Every simple assignment target in a file, keyed by its source text
/// (`TOPIC`, `self.topic_name`).
pub(crate) struct Bindings<'t> {
    map: HashMap<String, Vec<Node<'t>>>,
}

impl<'t> Bindings<'t> {
    pub fn collect(root: Node<'t>, src: &str) -> Self {
        let mut map: HashMap<String, Vec<Node<'t>>> = HashMap::new();
        for node in super::descendants(root) {
            if node.kind() != "assignment" {
                continue;
            }
            let (Some(left), Some(right)) =
                (node.child_by_field_name("left"), node.child_by_field_name("right"))
            else {
                continue;
            };
            if matches!(left.kind(), "identifier" | "attribute") {
                map.entry(text(left, src).to_string()).or_default().push(right);
            }
        }
        Self { map }
    }

    /// The value of the last assignment to `name` that ends before `offset`.
    pub fn last_before(&self, name: &str, offset: usize) -> Option<Node<'t>> {
        self.map
            .get(name)?
            .iter()
            .filter(|v| v.end_byte() <= offset)
            .max_by_key(|v| v.end_byte())
            .copied()
    }

    /// The single value bound to `name`, if it is bound exactly once.
    pub fn unique(&self, name: &str) -> Option<Node<'t>> {
        match self.map.get(name).map(Vec::as_slice) {
            Some([only]) => Some(*only),
            _ => None,
        }
    }
}

pub(crate) struct Evaluator<'a, 't> {
    pub src: &'a str,
    pub bindings: &'a Bindings<'t>,
}

const MAX_DEPTH: usize = 32;

impl<'a, 't> Evaluator<'a, 't> {
    pub fn new(src: &'a str, bindings: &'a Bindings<'t>) -> Self {
        Self { src, bindings }
    }

    pub fn eval(&self, node: Node<'t>) -> PyValue {
        self.eval_at(node, 0)
    }

    fn eval_at(&self, node: Node<'t>, depth: usize) -> PyValue {
        if depth > MAX_DEPTH {
            return PyValue::Unknown(squash(text(node, self.src)));
        }
        let src = self.src;
        match node.kind() {
            "string" => string_value(node, src)
                .map(PyValue::Str)
                .unwrap_or_else(|| PyValue::Unknown(squash(text(node, src)))),
            "concatenated_string" => {
                let mut out = String::new();
                for part in named_children(node) {
                    match string_value(part, src) {
                        Some(s) => out.push_str(&s),
                        None => return PyValue::Unknown(squash(text(node, src))),
                    }
                }
                PyValue::Str(out)
            }
            "integer" => text(node, src)
                .replace('_', "")
                .parse()
                .map(PyValue::Int)
                .unwrap_or_else(|_| PyValue::Unknown(text(node, src).to_string())),
            "true" => PyValue::Bool(true),
            "false" => PyValue::Bool(false),
            "none" => PyValue::None,
            "parenthesized_expression" => match named_children(node).first() {
                Some(inner) => self.eval_at(*inner, depth + 1),
                None => PyValue::Unknown(text(node, src).to_string()),
            },
            "list" => PyValue::List(self.eval_items(node, depth)),
            "tuple" => PyValue::Tuple(self.eval_items(node, depth)),
            "dictionary" => {
                let mut pairs = Vec::new();
                for child in named_children(node) {
                    if child.kind() == "pair" {
                        if let (Some(k), Some(v)) =
                            (child.child_by_field_name("key"), child.child_by_field_name("value"))
                        {
                            pairs.push((self.eval_at(k, depth + 1), self.eval_at(v, depth + 1)));
                        }
                    } else {
                        return PyValue::Unknown(squash(text(node, src)));
                    }
                }
                PyValue::Dict(pairs)
            }
            "identifier" | "attribute" => {
                let name = text(node, src);
                match self.bindings.unique(name) {
                    Some(value) if value.id() != node.id() => self.eval_at(value, depth + 1),
                    _ => PyValue::Ref(name.to_string()),
                }
            }
            "binary_operator" => {
                let op = node.child_by_field_name("operator").map(|o| text(o, src));
                if let (Some("+"), Some(l), Some(r)) = (
                    op,
                    node.child_by_field_name("left"),
                    node.child_by_field_name("right"),
                ) {
                    match (self.eval_at(l, depth + 1), self.eval_at(r, depth + 1)) {
                        (PyValue::Str(a), PyValue::Str(b)) => return PyValue::Str(a + &b),
                        (PyValue::List(mut a), PyValue::List(b)) => {
                            a.extend(b);
                            return PyValue::List(a);
                        }
                        (a, b) => {
                            let mut parts = Vec::new();
                            for v in [a, b] {
                                match v {
                                    PyValue::Concat(inner) => parts.extend(inner),
                                    other => parts.push(other),
                                }
                            }
                            return PyValue::Concat(parts);
                        }
                    }
                }
                PyValue::Unknown(squash(text(node, src)))
            }
            "call" => self.eval_call(node, depth),
            _ => PyValue::Unknown(squash(text(node, src))),
        }
    }

    fn eval_items(&self, node: Node<'t>, depth: usize) -> Vec<PyValue> {
        named_children(node)
            .into_iter()
            .filter(|c| c.kind() != "comment")
            .map(|c| self.eval_at(c, depth + 1))
            .collect()
    }

    pub fn call(&self, node: Node<'t>) -> Option<PyCall> {
        match self.eval_call(node, 0) {
            PyValue::Call(call) => Some(*call),
            _ => None,
        }
    }

    fn eval_call(&self, node: Node<'t>, depth: usize) -> PyValue {
        let src = self.src;
        let Some(function) = node.child_by_field_name("function") else {
            return PyValue::Unknown(squash(text(node, src)));
        };
        let (callee, receiver) = match function.kind() {
            "identifier" => (text(function, src).to_string(), None),
            "attribute" => {
                let object = function.child_by_field_name("object");
                let attr = function
                    .child_by_field_name("attribute")
                    .map(|a| text(a, src))
                    .unwrap_or_default();
                match object {
                    Some(obj) if is_dotted_name(obj) => (text(function, src).to_string(), None),
                    Some(obj) => (attr.to_string(), Some(self.eval_at(obj, depth + 1))),
                    None => (attr.to_string(), None),
                }
            }
            _ => (squash(text(function, src)), None),
        };
        let mut args = Vec::new();
        let mut kwargs = Vec::new();
        if let Some(arguments) = node.child_by_field_name("arguments") {
            for arg in named_children(arguments) {
                match arg.kind() {
                    "keyword_argument" => {
                        if let (Some(k), Some(v)) =
                            (arg.child_by_field_name("name"), arg.child_by_field_name("value"))
                        {
                            kwargs.push((text(k, src).to_string(), self.eval_at(v, depth + 1)));
                        }
                    }
                    "comment" => {}
                    _ => args.push(self.eval_at(arg, depth + 1)),
                }
            }
        }
        PyValue::Call(Box::new(PyCall {
            callee,
            receiver,
            args,
            kwargs,
            line: line(node),
            text: squash(text(node, src)),
        }))
    }
}

fn is_dotted_name(node: Node<'_>) -> bool {
    match node.kind() {
        "identifier" => true,
        "attribute" => node.child_by_field_name("object").is_some_and(is_dotted_name),
        _ => false,
    }
}

/// Literal value of a plain (non-interpolated) string node.
fn string_value(node: Node<'_>, src: &str) -> Option<String> {
    if node.kind() != "string" {
        return None;
    }
    let mut out = String::new();
    for child in named_children(node) {
        match child.kind() {
            "string_start" | "string_end" => {}
            "string_content" => out.push_str(text(child, src)),
            _ => return None,
        }
    }
    Some(out)
}

/// Maps names introduced by `from a.b import C [as D]` and `import a.b [as c]`
/// to their fully dotted origin.
pub(crate) fn imports(root: Node<'_>, src: &str) -> HashMap<String, String> {
    let mut out = HashMap::new();
    for node in super::descendants(root) {
        match node.kind() {
            "import_from_statement" => {
                let Some(module) = node.child_by_field_name("module_name") else {
                    continue;
                };
                let module = text(module, src);
                let mut cursor = node.walk();
                for name in node.children_by_field_name("name", &mut cursor) {
                    match name.kind() {
                        "dotted_name" => {
                            let n = text(name, src);
                            out.insert(n.to_string(), format!("{module}.{n}"));
                        }
                        "aliased_import" => {
                            if let (Some(n), Some(alias)) =
                                (name.child_by_field_name("name"), name.child_by_field_name("alias"))
                            {
                                out.insert(
                                    text(alias, src).to_string(),
                                    format!("{module}.{}", text(n, src)),
                                );
                            }
                        }
                        _ => {}
                    }
                }
            }
            "import_statement" => {
                let mut cursor = node.walk();
                for name in node.children_by_field_name("name", &mut cursor) {
                    match name.kind() {
                        "dotted_name" => {
                            let n = text(name, src);
                            out.insert(n.to_string(), n.to_string());
                        }
                        "aliased_import" => {
                            if let (Some(n), Some(alias)) =
                                (name.child_by_field_name("name"), name.child_by_field_name("alias"))
                            {
                                out.insert(text(alias, src).to_string(), text(n, src).to_string());
                            }
                        }
                        _ => {}
                    }
                }
            }
            _ => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval_last_expr(src: &str) -> PyValue {
        let file = PyFile::parse(src.to_string()).unwrap();
        let bindings = Bindings::collect(file.root(), &file.src);
        let eval = Evaluator::new(&file.src, &bindings);
        let root = file.root();
        let last = named_children(root).pop().unwrap();
        let expr = named_children(last).pop().unwrap();
        eval.eval(expr)
    }

    #[test]
    fn folds_single_assignments() {
        assert_eq!(
            eval_last_expr("TOPIC = 'a/b'\nTOPIC\n"),
            PyValue::Str("a/b".into())
        );
        assert_eq!(
            eval_last_expr("T = 'a'\nT = 'b'\nT\n"),
            PyValue::Ref("T".into())
        );
        assert_eq!(
            eval_last_expr("A = 'x'\nB = A + '/y'\nB\n"),
            PyValue::Str("x/y".into())
        );
    }

    #[test]
    fn f_strings_are_opaque() {
        assert!(matches!(eval_last_expr("f'cam/{x}'\n"), PyValue::Unknown(_)));
    }

    #[test]
    fn calls_keep_positional_and_keyword_arguments() {
        let v = eval_last_expr("Node(package='p', executable='e', remappings=[('a', 'b')])\n");
        let call = v.as_call().unwrap();
        assert_eq!(call.name(), "Node");
        assert_eq!(call.kwarg("package"), Some(&PyValue::Str("p".into())));
        assert_eq!(
            call.kwarg("remappings").unwrap().items().unwrap()[0],
            PyValue::Tuple(vec![PyValue::Str("a".into()), PyValue::Str("b".into())])
        );
    }

    #[test]
    fn method_call_on_literal_keeps_receiver() {
        let v = eval_last_expr("{'ns': 'main'}.items()\n");
        let call = v.as_call().unwrap();
        assert_eq!(call.name(), "items");
        assert!(matches!(call.receiver, Some(PyValue::Dict(_))));
    }

    #[test]
    fn import_table() {
        let file = PyFile::parse(
            "from sensor_msgs.msg import Image as Img, CameraInfo\nimport std_msgs.msg\nimport geometry_msgs.msg as gm\n"
                .into(),
        )
        .unwrap();
        let table = imports(file.root(), &file.src);
        assert_eq!(table["Img"], "sensor_msgs.msg.Image");
        assert_eq!(table["CameraInfo"], "sensor_msgs.msg.CameraInfo");
        assert_eq!(table["std_msgs.msg"], "std_msgs.msg");
        assert_eq!(table["gm"], "geometry_msgs.msg");
    }
}
