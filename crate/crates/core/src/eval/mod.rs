//! Scores a recovered model against a reference model. Both sides are
//! parsed into multisets of canonical elements and compared per kind.

mod parse;

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diag::Diagnostics;
use crate::error::{Error, Result};

pub use parse::{atomic_elements, model_elements, parse_plantuml_model};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// The vacuous-case rule, stated once and copied into every report.
pub const ZERO_DIVISION_RULE: &str =
    "a 0/0 ratio is 1.0 when both element sets are empty and 0.0 otherwise";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Acd,
    Ccd,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::Acd => "ACD",
            Level::Ccd => "CCD",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    ArcName,
    ArcStereotype,
    MessageType,
    CallbackFunctionName,
    ServiceType,
    ServiceFunctionName,
    ComposedClassifierName,
    NodePartName,
    NodePartClassifierRef,
    NodePartNamespace,
    CommunicationRelation,
    Remapping,
}

impl ElementKind {
    pub const ALL: [ElementKind; 12] = [
        ElementKind::ArcName,
        ElementKind::ArcStereotype,
        ElementKind::MessageType,
        ElementKind::CallbackFunctionName,
        ElementKind::ServiceType,
        ElementKind::ServiceFunctionName,
        ElementKind::ComposedClassifierName,
        ElementKind::NodePartName,
        ElementKind::NodePartClassifierRef,
        ElementKind::NodePartNamespace,
        ElementKind::CommunicationRelation,
        ElementKind::Remapping,
    ];

    pub fn level(self) -> Level {
        if self < ElementKind::ComposedClassifierName {
            Level::Acd
        } else {
            Level::Ccd
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ElementKind::ArcName => "arc_name",
            ElementKind::ArcStereotype => "arc_stereotype",
            ElementKind::MessageType => "message_type",
            ElementKind::CallbackFunctionName => "callback_function_name",
            ElementKind::ServiceType => "service_type",
            ElementKind::ServiceFunctionName => "service_function_name",
            ElementKind::ComposedClassifierName => "composed_classifier_name",
            ElementKind::NodePartName => "node_part_name",
            ElementKind::NodePartClassifierRef => "node_part_classifier_ref",
            ElementKind::NodePartNamespace => "node_part_namespace",
            ElementKind::CommunicationRelation => "communication_relation",
            ElementKind::Remapping => "remapping",
        }
    }

    pub fn of_level(level: Level) -> impl Iterator<Item = ElementKind> {
        ElementKind::ALL.into_iter().filter(move |k| k.level() == level)
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CanonicalElement {
    pub kind: ElementKind,
    pub key: Vec<String>,
}

/// Multiset of canonical elements, grouped by kind.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ElementSets {
    bags: BTreeMap<ElementKind, BTreeMap<Vec<String>, usize>>,
}

impl ElementSets {
    pub fn add<S: AsRef<str>>(&mut self, kind: ElementKind, key: impl IntoIterator<Item = S>) {
        let key = key.into_iter().map(|s| s.as_ref().to_string()).collect();
        *self.bags.entry(kind).or_default().entry(key).or_default() += 1;
    }

    pub fn insert(&mut self, element: CanonicalElement) {
        self.add(element.kind, element.key);
    }

    pub fn merge(&mut self, other: ElementSets) {
        for (kind, bag) in other.bags {
            let mine = self.bags.entry(kind).or_default();
            for (key, n) in bag {
                *mine.entry(key).or_default() += n;
            }
        }
    }

    /// Removes one occurrence; false when absent.
    pub fn remove(&mut self, element: &CanonicalElement) -> bool {
        let Some(bag) = self.bags.get_mut(&element.kind) else { return false };
        let Some(n) = bag.get_mut(&element.key) else { return false };
        *n -= 1;
        if *n == 0 {
            bag.remove(&element.key);
            if bag.is_empty() {
                self.bags.remove(&element.kind);
            }
        }
        true
    }

    pub fn count(&self, kind: ElementKind) -> usize {
        self.bags.get(&kind).map_or(0, |b| b.values().sum())
    }

    pub fn is_empty(&self) -> bool {
        self.bags.is_empty()
    }

    /// Every element with multiplicity, in canonical order.
    pub fn elements(&self) -> Vec<CanonicalElement> {
        self.bags
            .iter()
            .flat_map(|(kind, bag)| {
                bag.iter().flat_map(move |(key, n)| {
                    std::iter::repeat_n(
                        CanonicalElement {
                            kind: *kind,
                            key: key.clone(),
                        },
                        *n,
                    )
                })
            })
            .collect()
    }

    fn bag(&self, kind: ElementKind) -> Option<&BTreeMap<Vec<String>, usize>> {
        self.bags.get(&kind)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Counts {
    pub fn is_vacuous(&self) -> bool {
        self.tp == 0 && self.fp == 0 && self.fn_ == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Per-kind counts over every kind either side contains. Shared elements
/// are true positives; multiplicities count.
pub fn compare_models(recovered: &ElementSets, reference: &ElementSets) -> BTreeMap<ElementKind, Counts> {
    let mut out = BTreeMap::new();
    for kind in ElementKind::ALL {
        let (rec, refr) = (recovered.bag(kind), reference.bag(kind));
        if rec.is_none() && refr.is_none() {
            continue;
        }
        let empty = BTreeMap::new();
        let (rec, refr) = (rec.unwrap_or(&empty), refr.unwrap_or(&empty));
        let tp: usize = rec
            .iter()
            .map(|(k, n)| (*n).min(refr.get(k).copied().unwrap_or(0)))
            .sum();
        let total_rec: usize = rec.values().sum();
        let total_ref: usize = refr.values().sum();
        out.insert(
            kind,
            Counts {
                tp,
                fp: total_rec - tp,
                fn_: total_ref - tp,
            },
        );
    }
    out
}

fn ratio(num: usize, den: usize, vacuous: bool) -> f64 {
    if den == 0 {
        if vacuous {
            1.0
        } else {
            0.0
        }
    } else {
        num as f64 / den as f64
    }
}

pub fn compute_metrics(c: Counts) -> Metrics {
    let vacuous = c.is_vacuous();
    let precision = ratio(c.tp, c.tp + c.fp, vacuous);
    let recall = ratio(c.tp, c.tp + c.fn_, vacuous);
    let f1 = if vacuous {
        1.0
    } else if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Metrics { precision, recall, f1 }
}

/// Unweighted mean over the given per-kind metrics; `None` when empty.
pub fn macro_average<'a>(metrics: impl IntoIterator<Item = &'a Metrics>) -> Option<Metrics> {
    let all: Vec<&Metrics> = metrics.into_iter().collect();
    if all.is_empty() {
        return None;
    }
    let n = all.len() as f64;
    Some(Metrics {
        precision: all.iter().map(|m| m.precision).sum::<f64>() / n,
        recall: all.iter().map(|m| m.recall).sum::<f64>() / n,
        f1: all.iter().map(|m| m.f1).sum::<f64>() / n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindReport {
    pub kind: ElementKind,
    pub level: Level,
    #[serde(flatten)]
    pub counts: Counts,
    #[serde(flatten)]
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: Level,
    pub kinds_averaged: usize,
    #[serde(flatten)]
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub schema_version: u32,
    pub zero_division: String,
    pub per_element: Vec<KindReport>,
    #[serde(rename = "macro")]
    pub macro_average: Vec<LevelReport>,
    pub notices: Vec<String>,
}

impl EvaluationReport {
    pub fn kind(&self, kind: ElementKind) -> Option<&KindReport> {
        self.per_element.iter().find(|k| k.kind == kind)
    }

    pub fn level(&self, level: Level) -> Option<&LevelReport> {
        self.macro_average.iter().find(|l| l.level == level)
    }

    /// Levels whose macro F1 falls below `threshold`.
    pub fn below(&self, threshold: f64) -> Vec<Level> {
        self.macro_average
            .iter()
            .filter(|l| l.metrics.f1 < threshold)
            .map(|l| l.level)
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{:<28} {:>4} {:>4} {:>4} {:>9} {:>9} {:>9}", "element", "tp", "fp", "fn", "precision", "recall", "f1").unwrap();
        for k in &self.per_element {
            writeln!(
                out,
                "{:<28} {:>4} {:>4} {:>4} {:>9.4} {:>9.4} {:>9.4}",
                format!("{}/{}", k.level.as_str(), k.kind),
                k.counts.tp,
                k.counts.fp,
                k.counts.fn_,
                k.metrics.precision,
                k.metrics.recall,
                k.metrics.f1
            )
            .unwrap();
        }
        for l in &self.macro_average {
            writeln!(
                out,
                "{:<28} {:>4} {:>4} {:>4} {:>9.4} {:>9.4} {:>9.4}",
                format!("{} average ({} kinds)", l.level.as_str(), l.kinds_averaged),
                "",
                "",
                "",
                l.metrics.precision,
                l.metrics.recall,
                l.metrics.f1
            )
            .unwrap();
        }
        for n in &self.notices {
            writeln!(out, "note: {n}").unwrap();
        }
        writeln!(out, "note: {}", self.zero_division).unwrap();
        out
    }
}

/// Compares two element sets and averages per level. Kinds absent from
/// both sides are listed as vacuous but left out of the averages.
pub fn evaluate(recovered: &ElementSets, reference: &ElementSets) -> EvaluationReport {
    let counts = compare_models(recovered, reference);
    let per_element: Vec<KindReport> = counts
        .iter()
        .map(|(kind, c)| KindReport {
            kind: *kind,
            level: kind.level(),
            counts: *c,
            metrics: compute_metrics(*c),
        })
        .collect();
    let mut notices = Vec::new();
    let mut levels = Vec::new();
    for level in [Level::Acd, Level::Ccd] {
        let vacuous: Vec<&str> = ElementKind::of_level(level)
            .filter(|k| !counts.contains_key(k))
            .map(ElementKind::as_str)
            .collect();
        let present: Vec<&Metrics> = per_element
            .iter()
            .filter(|k| k.level == level)
            .map(|k| &k.metrics)
            .collect();
        match macro_average(present.iter().copied()) {
            Some(m) => {
                levels.push(LevelReport {
                    level,
                    kinds_averaged: present.len(),
                    metrics: m,
                });
                if !vacuous.is_empty() {
                    notices.push(format!(
                        "{}: no elements of kind {} on either side; excluded from the average",
                        level.as_str(),
                        vacuous.join(", ")
                    ));
                }
            }
            None => notices.push(format!("{}: no elements on either side; level omitted", level.as_str())),
        }
    }
    EvaluationReport {
        schema_version: REPORT_SCHEMA_VERSION,
        zero_division: ZERO_DIVISION_RULE.to_string(),
        per_element,
        macro_average: levels,
        notices,
    }
}

/// Parses a `.puml` file, or every `.puml` file under a directory in path
/// order, into one element set.
pub fn load_model(path: &Path, diags: &mut Diagnostics) -> Result<ElementSets> {
    let meta = std::fs::metadata(path).map_err(|e| Error::io(path, e))?;
    let files: Vec<std::path::PathBuf> = if meta.is_dir() {
        let mut files: Vec<_> = walkdir::WalkDir::new(path)
            .sort_by_file_name()
            .into_iter()
            .filter_map(|e| e.ok())
            .filter(|e| e.file_type().is_file() && e.path().extension().is_some_and(|x| x == "puml"))
            .map(|e| e.into_path())
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(Error::Input(format!("{}: no .puml files found", path.display())));
        }
        files
    } else {
        vec![path.to_path_buf()]
    };
    let mut sets = ElementSets::default();
    for file in files {
        let text = std::fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
        let label = file.to_string_lossy().into_owned();
        sets.merge(parse_plantuml_model(&text, Some(&label), diags)?);
    }
    Ok(sets)
}
