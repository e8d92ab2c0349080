use std::collections::HashMap;

use tree_sitter::{Node, Parser, Tree};

use super::{descendants, named_children, text};

pub(crate) struct CppFile {
    pub src: String,
    pub tree: Tree,
}

impl CppFile {
    pub fn parse(src: String) -> Option<Self> {
        let mut parser = Parser::new();
        parser
            .set_language(&tree_sitter_cpp::LANGUAGE.into())
            .expect("bundled grammar");
        let tree = parser.parse(&src, None)?;
        Some(Self { src, tree })
    }

    pub fn root(&self) -> Node<'_> {
        self.tree.root_node()
    }
}

/// Value of a string literal node (`"a"`, `"a" "b"`, `R"(a)"`).
pub(crate) fn string_literal(node: Node<'_>, src: &str) -> Option<String> {
    match node.kind() {
        "string_literal" => {
            let mut out = String::new();
            for child in named_children(node) {
                match child.kind() {
                    "string_content" => out.push_str(text(child, src)),
                    "escape_sequence" => out.push_str(text(child, src)),
                    _ => return None,
                }
            }
            Some(out)
        }
        "concatenated_string" => {
            let mut out = String::new();
            for child in named_children(node) {
                out.push_str(&string_literal(child, src)?);
            }
            Some(out)
        }
        "raw_string_literal" => named_children(node)
            .into_iter()
            .find(|c| c.kind() == "raw_string_content")
            .map(|c| text(c, src).to_string()),
        _ => None,
    }
}

/// Same-file string constants: `const std::string kTopic = "x";`,
/// `constexpr char kTopic[] = "x";`, `#define TOPIC "x"`. A name bound more
/// than once is dropped.
pub(crate) fn string_constants(root: Node<'_>, src: &str) -> HashMap<String, String> {
    let mut seen: HashMap<String, Vec<String>> = HashMap::new();
    for node in descendants(root) {
        match node.kind() {
            "init_declarator" => {
                let (Some(decl), Some(value)) =
                    (node.child_by_field_name("declarator"), node.child_by_field_name("value"))
                else {
                    continue;
                };
                let Some(literal) = string_literal(value, src).or_else(|| {
                    // `std::string kName{"x"}` / `("x")`
                    named_children(value)
                        .first()
                        .and_then(|inner| string_literal(*inner, src))
                }) else {
                    continue;
                };
                if let Some(name) = declarator_name(decl, src) {
                    seen.entry(name).or_default().push(literal);
                }
            }
            "preproc_def" => {
                if let (Some(name), Some(value)) =
                    (node.child_by_field_name("name"), node.child_by_field_name("value"))
                {
                    let v = text(value, src).trim();
                    if v.len() >= 2 && v.starts_with('"') && v.ends_with('"') {
                        seen.entry(text(name, src).to_string())
                            .or_default()
                            .push(v[1..v.len() - 1].to_string());
                    }
                }
            }
            _ => {}
        }
    }
    seen.into_iter()
        .filter_map(|(k, mut v)| (v.len() == 1).then(|| (k, v.remove(0))))
        .collect()
}

fn declarator_name(node: Node<'_>, src: &str) -> Option<String> {
    match node.kind() {
        "identifier" | "field_identifier" => Some(text(node, src).to_string()),
        "array_declarator" | "pointer_declarator" | "reference_declarator" => node
            .child_by_field_name("declarator")
            .or_else(|| named_children(node).into_iter().next())
            .and_then(|d| declarator_name(d, src)),
        _ => None,
    }
}

/// `using Alias = a::b::C;` and `using a::b::C;` in the file.
pub(crate) fn type_aliases(root: Node<'_>, src: &str) -> HashMap<String, String> {
    let mut out = HashMap::new();
    for node in descendants(root) {
        match node.kind() {
            "alias_declaration" => {
                if let (Some(name), Some(ty)) =
                    (node.child_by_field_name("name"), node.child_by_field_name("type"))
                {
                    out.insert(text(name, src).to_string(), strip_spaces(text(ty, src)));
                }
            }
            "using_declaration" => {
                let qualified = named_children(node)
                    .into_iter()
                    .find(|c| c.kind() == "qualified_identifier");
                if let Some(q) = qualified {
                    let full = strip_spaces(text(q, src));
                    if let Some(last) = full.rsplit("::").next() {
                        out.insert(last.to_string(), full.clone());
                    }
                }
            }
            _ => {}
        }
    }
    out
}

pub(crate) fn strip_spaces(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_and_aliases() {
        let file = CppFile::parse(
            r#"
#define STATUS_TOPIC "status"
using Image = sensor_msgs::msg::Image;
using std_msgs::msg::String;
static const std::string kCamera = "camera/rgb";
constexpr char kDepth[] = "camera/depth";
const std::string kDup = "a";
void f() { const std::string kDup = "b"; }
"#
            .into(),
        )
        .unwrap();
        let consts = string_constants(file.root(), &file.src);
        assert_eq!(consts["STATUS_TOPIC"], "status");
        assert_eq!(consts["kCamera"], "camera/rgb");
        assert_eq!(consts["kDepth"], "camera/depth");
        assert!(!consts.contains_key("kDup"));
        let aliases = type_aliases(file.root(), &file.src);
        assert_eq!(aliases["Image"], "sensor_msgs::msg::Image");
        assert_eq!(aliases["String"], "std_msgs::msg::String");
    }
}
