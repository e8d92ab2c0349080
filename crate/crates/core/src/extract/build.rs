//! Package manifests and build descriptions: `package.xml`, `setup.py`,
//! `setup.cfg` and `CMakeLists.txt`.

use std::collections::BTreeMap;

use crate::syntax::python::{Bindings, Evaluator, PyFile, PyValue};
use crate::syntax::{descendants, text};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Manifest {
    pub name: String,
    pub build_type: Option<String>,
}

pub(crate) fn parse_package_xml(src: &str) -> Result<Manifest, String> {
    let doc = roxmltree::Document::parse(src).map_err(|e| e.to_string())?;
    let root = doc.root_element();
    if root.tag_name().name() != "package" {
        return Err(format!("root element is <{}>, expected <package>", root.tag_name().name()));
    }
    let name = root
        .children()
        .find(|n| n.has_tag_name("name"))
        .and_then(|n| n.text())
        .map(str::trim)
        .filter(|n| !n.is_empty())
        .ok_or_else(|| "missing <name>".to_string())?;
    let build_type = root
        .children()
        .find(|n| n.has_tag_name("export"))
        .and_then(|e| e.children().find(|n| n.has_tag_name("build_type")))
        .and_then(|n| n.text())
        .map(|t| t.trim().to_string());
    Ok(Manifest {
        name: name.to_string(),
        build_type,
    })
}

/// A `console_scripts` declaration, `name = module.path:function`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct EntryPoint {
    pub name: String,
    pub module: String,
    pub function: String,
}

pub(crate) fn parse_entry_point(s: &str) -> Option<EntryPoint> {
    let (name, target) = s.split_once('=')?;
    let (module, function) = target.split_once(':')?;
    let (name, module, function) = (name.trim(), module.trim(), function.trim());
    let valid = |t: &str, extra: &[char]| {
        !t.is_empty() && t.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || extra.contains(&c))
    };
    (valid(name, &['-', '.']) && valid(module, &['.']) && valid(function, &[])).then(|| EntryPoint {
        name: name.to_string(),
        module: module.to_string(),
        function: function.to_string(),
    })
}

/// Entry points declared in `setup.py`. Reads the `console_scripts` list of
/// the `entry_points` argument; falls back to any string literal shaped like
/// an entry point when the argument cannot be folded.
pub(crate) fn setup_py_entry_points(src: &str) -> Result<Vec<EntryPoint>, String> {
    let file = PyFile::parse(src.to_string()).ok_or("parser failure")?;
    if let Some(line) = file.first_error_line() {
        return Err(format!("syntax error near line {line}"));
    }
    let bindings = Bindings::collect(file.root(), &file.src);
    let eval = Evaluator::new(&file.src, &bindings);

    let mut from_setup = None;
    for node in descendants(file.root()) {
        if node.kind() != "call" {
            continue;
        }
        let Some(call) = eval.call(node) else { continue };
        if call.name() != "setup" {
            continue;
        }
        if let Some(PyValue::Dict(pairs)) = call.kwarg("entry_points") {
            let scripts = pairs
                .iter()
                .find(|(k, _)| k.as_str() == Some("console_scripts"))
                .and_then(|(_, v)| v.items());
            if let Some(items) = scripts {
                from_setup = Some(
                    items
                        .iter()
                        .filter_map(|v| v.as_str().and_then(parse_entry_point))
                        .collect::<Vec<_>>(),
                );
            }
        }
    }
    let mut entries = match from_setup {
        Some(entries) => entries,
        None => descendants(file.root())
            .into_iter()
            .filter(|n| n.kind() == "string_content")
            .filter_map(|n| parse_entry_point(text(n, &file.src)))
            .collect(),
    };
    entries.sort();
    entries.dedup();
    Ok(entries)
}

pub(crate) fn setup_cfg_entry_points(src: &str) -> Vec<EntryPoint> {
    let mut section = String::new();
    let mut in_scripts = false;
    let mut out = Vec::new();
    for raw in src.lines() {
        let line = raw.split('#').next().unwrap_or("");
        let trimmed = line.trim();
        if trimmed.starts_with('[') && trimmed.ends_with(']') {
            section = trimmed[1..trimmed.len() - 1].trim().to_string();
            in_scripts = false;
            continue;
        }
        if section != "options.entry_points" || trimmed.is_empty() {
            continue;
        }
        let indented = line.starts_with(' ') || line.starts_with('\t');
        if !indented {
            let (key, rest) = trimmed.split_once('=').unwrap_or((trimmed, ""));
            in_scripts = key.trim() == "console_scripts";
            if in_scripts && !rest.trim().is_empty() {
                out.extend(parse_entry_point(rest.trim()));
            }
        } else if in_scripts {
            out.extend(parse_entry_point(trimmed));
        }
    }
    out.sort();
    out.dedup();
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct CmakeCommand {
    pub name: String,
    pub args: Vec<String>,
    pub line: usize,
}

/// Splits a CMake listfile into commands. Handles comments, quoted and
/// bracketed arguments and nested parentheses; no evaluation.
pub(crate) fn parse_cmake(src: &str) -> Result<Vec<CmakeCommand>, String> {
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    let mut line = 1;
    let mut out = Vec::new();
    let bump = |c: char, line: &mut usize| {
        if c == '\n' {
            *line += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_whitespace() {
            bump(c, &mut line);
            i += 1;
            continue;
        }
        if !(c.is_ascii_alphanumeric() || c == '_') {
            return Err(format!("unexpected `{c}` at line {line}"));
        }
        let start_line = line;
        let start = i;
        while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
            i += 1;
        }
        let name: String = chars[start..i].iter().collect::<String>().to_ascii_lowercase();
        while i < chars.len() && chars[i].is_whitespace() {
            bump(chars[i], &mut line);
            i += 1;
        }
        if i >= chars.len() || chars[i] != '(' {
            return Err(format!("expected `(` after `{name}` at line {line}"));
        }
        i += 1;
        let mut depth = 1;
        let mut args = Vec::new();
        let mut current = String::new();
        let flush = |current: &mut String, args: &mut Vec<String>| {
            if !current.is_empty() {
                args.push(std::mem::take(current));
            }
        };
        while i < chars.len() && depth > 0 {
            let c = chars[i];
            match c {
                '"' => {
                    i += 1;
                    let mut quoted = String::new();
                    while i < chars.len() && chars[i] != '"' {
                        if chars[i] == '\\' && i + 1 < chars.len() {
                            i += 1;
                        }
                        bump(chars[i], &mut line);
                        quoted.push(chars[i]);
                        i += 1;
                    }
                    if i >= chars.len() {
                        return Err(format!("unterminated string in `{name}`"));
                    }
                    flush(&mut current, &mut args);
                    args.push(quoted);
                    i += 1;
                    continue;
                }
                '#' if current.is_empty() => {
                    while i < chars.len() && chars[i] != '\n' {
                        i += 1;
                    }
                    continue;
                }
                '(' => {
                    depth += 1;
                    current.push(c);
                }
                ')' => {
                    depth -= 1;
                    if depth > 0 {
                        current.push(c);
                    }
                }
                c if c.is_whitespace() => {
                    bump(c, &mut line);
                    flush(&mut current, &mut args);
                }
                c => current.push(c),
            }
            i += 1;
        }
        if depth > 0 {
            return Err(format!("unbalanced parentheses in `{name}` starting at line {start_line}"));
        }
        flush(&mut current, &mut args);
        out.push(CmakeCommand {
            name,
            args,
            line: start_line,
        });
    }
    Ok(out)
}

/// Executable and component declarations recovered from a CMake listfile.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct CmakeTargets {
    /// Executable target -> source paths relative to the package root.
    pub executables: BTreeMap<String, Vec<String>>,
    /// Registered component plugin class (`pkg::Class`) -> executable name,
    /// when `EXECUTABLE` was given.
    pub components: BTreeMap<String, Option<String>>,
    /// Scripts installed with `install(PROGRAMS ...)`.
    pub programs: Vec<String>,
}

const SOURCE_EXTENSIONS: [&str; 7] = [".cpp", ".cc", ".cxx", ".c", ".hpp", ".h", ".hh"];

pub(crate) fn cmake_targets(commands: &[CmakeCommand], package_name: &str) -> CmakeTargets {
    let mut vars: BTreeMap<String, Vec<String>> = BTreeMap::new();
    vars.insert("PROJECT_NAME".into(), vec![package_name.to_string()]);
    let mut targets = CmakeTargets::default();

    let expand = |arg: &str, vars: &BTreeMap<String, Vec<String>>| -> Vec<String> {
        if let Some(name) = arg.strip_prefix("${").and_then(|a| a.strip_suffix('}')) {
            if let Some(values) = vars.get(name) {
                return values.clone();
            }
        }
        let mut s = arg.to_string();
        for (k, v) in vars {
            s = s.replace(&format!("${{{k}}}"), &v.join(";"));
        }
        vec![s]
    };

    for cmd in commands {
        let args: Vec<String> = cmd.args.iter().flat_map(|a| expand(a, &vars)).collect();
        match cmd.name.as_str() {
            "project" => {
                if let Some(name) = args.first() {
                    vars.insert("PROJECT_NAME".into(), vec![name.clone()]);
                }
            }
            "set" => {
                if let Some((name, values)) = args.split_first() {
                    let values = values
                        .iter()
                        .take_while(|v| !matches!(v.as_str(), "CACHE" | "PARENT_SCOPE"))
                        .cloned()
                        .collect();
                    vars.insert(name.clone(), values);
                }
            }
            "add_executable" | "ament_auto_add_executable" => {
                if let Some((target, rest)) = args.split_first() {
                    if rest.iter().any(|a| a == "IMPORTED" || a == "ALIAS") {
                        continue;
                    }
                    let sources = rest
                        .iter()
                        .filter(|a| SOURCE_EXTENSIONS.iter().any(|ext| a.ends_with(ext)))
                        .map(|a| normalize_rel(a))
                        .collect();
                    targets.executables.insert(target.clone(), sources);
                }
            }
            "rclcpp_components_register_node" => {
                let plugin = keyword_value(&args, "PLUGIN");
                let executable = keyword_value(&args, "EXECUTABLE");
                if let Some(plugin) = plugin {
                    targets.components.insert(plugin, executable);
                }
            }
            "rclcpp_components_register_nodes" => {
                for plugin in args.iter().skip(1) {
                    targets.components.entry(plugin.clone()).or_insert(None);
                }
            }
            "install" if args.first().map(String::as_str) == Some("PROGRAMS") => {
                for program in args.iter().skip(1) {
                    if program == "DESTINATION" {
                        break;
                    }
                    targets.programs.push(normalize_rel(program));
                }
            }
            _ => {}
        }
    }
    targets
}

fn keyword_value(args: &[String], keyword: &str) -> Option<String> {
    args.iter()
        .position(|a| a == keyword)
        .and_then(|i| args.get(i + 1))
        .cloned()
}

fn normalize_rel(path: &str) -> String {
    let path = path
        .trim_start_matches("${CMAKE_CURRENT_SOURCE_DIR}/")
        .trim_start_matches("./");
    path.replace('\\', "/")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn package_xml() {
        let m = parse_package_xml(
            r#"<?xml version="1.0"?><package format="3"><name> demo </name>
               <export><build_type>ament_python</build_type></export></package>"#,
        )
        .unwrap();
        assert_eq!(m.name, "demo");
        assert_eq!(m.build_type.as_deref(), Some("ament_python"));
        assert!(parse_package_xml("<package><version>1</version></package>").is_err());
        assert!(parse_package_xml("<package><name>x</name>").is_err());
    }

    #[test]
    fn entry_points_from_setup_py() {
        let src = r#"
from setuptools import setup
package_name = 'pkg'
setup(
    name=package_name,
    entry_points={
        'console_scripts': [
            'example = pkg.example:main',
            'other = ' + package_name + '.other:run',
        ],
    },
)
"#;
        let eps = setup_py_entry_points(src).unwrap();
        assert_eq!(
            eps,
            vec![
                EntryPoint { name: "example".into(), module: "pkg.example".into(), function: "main".into() },
                EntryPoint { name: "other".into(), module: "pkg.other".into(), function: "run".into() },
            ]
        );
        assert!(setup_py_entry_points("setup(entry_points={'console_scripts': [").is_err());
        assert_eq!(setup_py_entry_points("from setuptools import setup\nsetup(name='x')\n").unwrap(), vec![]);
    }

    #[test]
    fn entry_points_from_setup_cfg() {
        let src = "[metadata]\nname = x\n[options.entry_points]\nconsole_scripts =\n    talker = pkg.talker:main\n    listener = pkg.listener:main\n";
        let eps = setup_cfg_entry_points(src);
        assert_eq!(eps.len(), 2);
        assert_eq!(eps[1].name, "talker");
    }

    #[test]
    fn cmake_executables_and_components() {
        let src = r#"
cmake_minimum_required(VERSION 3.8)
project(demo_cpp)
set(COMMON_SRC src/common.cpp) # shared
add_executable(talker src/talker.cpp ${COMMON_SRC})
add_executable(listener src/listener.cpp ${COMMON_SRC})
add_library(comp SHARED src/comp.cpp)
rclcpp_components_register_node(comp PLUGIN "demo_cpp::Comp" EXECUTABLE comp_node)
install(PROGRAMS scripts/helper.py DESTINATION lib/${PROJECT_NAME})
install(TARGETS talker listener DESTINATION lib/${PROJECT_NAME})
"#;
        let commands = parse_cmake(src).unwrap();
        let targets = cmake_targets(&commands, "demo_cpp");
        assert_eq!(targets.executables["talker"], vec!["src/talker.cpp", "src/common.cpp"]);
        assert_eq!(targets.executables["listener"], vec!["src/listener.cpp", "src/common.cpp"]);
        assert_eq!(targets.components["demo_cpp::Comp"].as_deref(), Some("comp_node"));
        assert_eq!(targets.programs, vec!["scripts/helper.py"]);
        assert!(parse_cmake("add_executable(x src/x.cpp").is_err());
    }
}
