//! Format-independent launch actions produced by the three front ends.

use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Part {
    Lit(String),
    /// `LaunchConfiguration('x', default=..)` / `$(var x)`.
    Arg { name: String, default: Option<Text> },
    /// Share directory of a package; resolved to its source root.
    PackageShare(String),
    /// Directory of the launch file being interpreted.
    ThisDir,
    /// Anything that cannot be evaluated statically, as source text.
    Unknown(String),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct Text(pub Vec<Part>);

impl Text {
    pub fn lit(s: impl Into<String>) -> Self {
        Text(vec![Part::Lit(s.into())])
    }

    pub fn unknown(s: impl Into<String>) -> Self {
        Text(vec![Part::Unknown(s.into())])
    }

    pub fn concat(parts: impl IntoIterator<Item = Text>) -> Self {
        Text(parts.into_iter().flat_map(|t| t.0).collect())
    }

    /// Path join: segments separated by `/`, an absolute literal segment
    /// restarting the path.
    pub fn join_path(parts: impl IntoIterator<Item = Text>) -> Self {
        let mut out: Vec<Part> = Vec::new();
        for part in parts {
            let absolute = match part.0.first() {
                Some(Part::Lit(s)) => s.starts_with('/'),
                Some(Part::PackageShare(_) | Part::ThisDir) => true,
                _ => false,
            };
            if absolute {
                out.clear();
            } else if !out.is_empty() {
                out.push(Part::Lit("/".into()));
            }
            out.extend(part.0);
        }
        Text(out)
    }

    /// Source-like rendering for diagnostics.
    pub fn describe(&self) -> String {
        self.0
            .iter()
            .map(|p| match p {
                Part::Lit(s) => s.clone(),
                Part::Arg { name, .. } => format!("$(var {name})"),
                Part::PackageShare(pkg) => format!("$(find-pkg-share {pkg})"),
                Part::ThisDir => "$(dirname)".to_string(),
                Part::Unknown(s) => format!("<{s}>"),
            })
            .collect()
    }

    /// Evaluates against launch arguments; `Err` carries the first part that
    /// could not be evaluated.
    pub fn resolve(&self, env: &Env<'_>) -> Result<String, String> {
        let mut out = String::new();
        for part in &self.0 {
            match part {
                Part::Lit(s) => out.push_str(s),
                Part::Arg { name, default } => match env.args.get(name) {
                    Some(v) => out.push_str(v),
                    None => match default {
                        Some(d) => out.push_str(&d.resolve(env)?),
                        None => return Err(format!("launch argument `{name}` has no value")),
                    },
                },
                Part::PackageShare(pkg) => match env.package_root(pkg) {
                    Some(root) => out.push_str(&root),
                    None => return Err(format!("package `{pkg}` is not part of the repository")),
                },
                Part::ThisDir => out.push_str(&env.this_dir.to_string_lossy()),
                Part::Unknown(s) => return Err(format!("`{s}` cannot be evaluated statically")),
            }
        }
        Ok(out)
    }
}

pub(crate) struct Env<'a> {
    pub args: &'a BTreeMap<String, String>,
    pub this_dir: &'a Path,
    pub package_roots: &'a BTreeMap<String, std::path::PathBuf>,
}

impl Env<'_> {
    fn package_root(&self, pkg: &str) -> Option<String> {
        self.package_roots
            .get(pkg)
            .map(|p| p.to_string_lossy().into_owned())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct NodeDecl {
    pub package: Option<Text>,
    pub executable: Option<Text>,
    pub name: Option<Text>,
    pub namespace: Option<Text>,
    pub remappings: Vec<(Text, Text)>,
    pub line: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct IncludeDecl {
    pub path: Text,
    pub arguments: Vec<(String, Text)>,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Action {
    Node(NodeDecl),
    Include(IncludeDecl),
    Group {
        namespace: Option<Text>,
        scoped: bool,
        actions: Vec<Action>,
    },
    PushNamespace(Text),
    SetRemap(Text, Text),
    DeclareArgument { name: String, default: Option<Text> },
    SetArgument { name: String, value: Text },
}

/// Splits `$(...)` substitutions in XML/YAML attribute values.
pub(crate) fn parse_substitutions(s: &str) -> Text {
    let mut parts = Vec::new();
    let mut rest = s;
    while let Some(start) = rest.find("$(") {
        if start > 0 {
            parts.push(Part::Lit(rest[..start].to_string()));
        }
        let after = &rest[start + 2..];
        // Matching close paren, allowing nested substitutions.
        let mut depth = 1;
        let mut end = None;
        for (i, c) in after.char_indices() {
            match c {
                '(' => depth += 1,
                ')' => {
                    depth -= 1;
                    if depth == 0 {
                        end = Some(i);
                        break;
                    }
                }
                _ => {}
            }
        }
        let Some(end) = end else {
            parts.push(Part::Unknown(rest[start..].to_string()));
            rest = "";
            break;
        };
        let body = after[..end].trim();
        let (command, arg) = body.split_once(char::is_whitespace).unwrap_or((body, ""));
        let arg = arg.trim();
        parts.push(match command {
            "var" | "arg" | "launch-configuration" => Part::Arg {
                name: arg.to_string(),
                default: None,
            },
            "find-pkg-share" | "find" if !arg.contains("$(") => Part::PackageShare(arg.to_string()),
            "dirname" => Part::ThisDir,
            _ => Part::Unknown(format!("$({body})")),
        });
        rest = &after[end + 1..];
    }
    if !rest.is_empty() {
        parts.push(Part::Lit(rest.to_string()));
    }
    Text(parts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitutions_split_into_parts() {
        let t = parse_substitutions("$(find-pkg-share demo)/launch/$(var file).launch.xml");
        assert_eq!(
            t.0,
            vec![
                Part::PackageShare("demo".into()),
                Part::Lit("/launch/".into()),
                Part::Arg { name: "file".into(), default: None },
                Part::Lit(".launch.xml".into()),
            ]
        );
        assert_eq!(parse_substitutions("plain").0, vec![Part::Lit("plain".into())]);
        assert!(matches!(parse_substitutions("$(env HOME)").0[0], Part::Unknown(_)));
    }

    #[test]
    fn resolution_uses_arguments_then_defaults() {
        let mut args = BTreeMap::new();
        args.insert("ns".to_string(), "main".to_string());
        let roots = BTreeMap::new();
        let env = Env {
            args: &args,
            this_dir: Path::new("/x"),
            package_roots: &roots,
        };
        let t = Text(vec![Part::Arg { name: "ns".into(), default: None }]);
        assert_eq!(t.resolve(&env).unwrap(), "main");
        let t = Text(vec![Part::Arg {
            name: "other".into(),
            default: Some(Text::lit("d")),
        }]);
        assert_eq!(t.resolve(&env).unwrap(), "d");
        assert!(Text::unknown("f()").resolve(&env).is_err());
        let joined = Text::join_path([Text(vec![Part::ThisDir]), Text::lit("sub.launch.py")]);
        assert_eq!(joined.resolve(&env).unwrap(), "/x/sub.launch.py");
    }
}
