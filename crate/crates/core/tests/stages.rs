use std::fs;
use std::path::{Path, PathBuf};

use rosarch_core::eval::ElementKind;
use rosarch_core::llm::{LlmConfig, CONSTRUCTOR_TEMPLATE};
use rosarch_core::pipeline::*;
use rosarch_core::{Diagnostics, Error, ErrorClass};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn write(root: &Path, rel: &str, text: &str) {
    let path = root.join(rel);
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    fs::write(path, text).unwrap();
}

/// One Python package with a talker, launched twice from XML.
fn xml_repo() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write(
        root,
        "talk/package.xml",
        r#"<package format="3"><name>talk</name><export><build_type>ament_python</build_type></export></package>"#,
    );
    write(
        root,
        "talk/setup.py",
        "from setuptools import setup\nsetup(name='talk', entry_points={'console_scripts': ['talker = talk.talker:main']})\n",
    );
    write(
        root,
        "talk/talk/talker.py",
        r#"from rclpy.node import Node
from std_msgs.msg import String


class Talker(Node):
    def __init__(self):
        super().__init__('talker')
        self.pub = self.create_publisher(String, 'chatter', 10)
        self.sub = self.create_subscription(String, 'echo', self.on_echo, 10)

    def on_echo(self, msg):
        pass


def main():
    Talker()
"#,
    );
    write(
        root,
        "talk/launch/pair.launch.xml",
        r#"<launch>
  <group>
    <push-ros-namespace namespace="left"/>
    <node pkg="talk" exec="talker" name="a">
      <remap from="chatter" to="/shared"/>
    </node>
  </group>
  <node pkg="talk" exec="talker" name="b">
    <remap from="echo" to="/shared"/>
  </node>
</launch>
"#,
    );
    dir
}

#[tokio::test]
async fn staged_calls_match_the_pipeline() {
    let repo = fixture("nested/repo");
    let (staged, piped) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut d = Diagnostics::new();
    run_extract(&repo, staged.path(), &mut d).unwrap();
    run_launch_graph(&repo, staged.path(), &[], &mut d).unwrap();
    run_synthesize(staged.path(), false, &mut d).unwrap();

    let report = run_pipeline(&RecoveryJobConfig::new(&repo, piped.path()), &LlmConfig::disabled())
        .await
        .unwrap();
    assert_eq!(report.manifest.status, RunStatus::Ok);
    assert_eq!(collect_artifacts(staged.path()).unwrap(), report.manifest.artifacts);
    assert_eq!(report.exit_code(), 0);
}

#[tokio::test]
async fn xml_remaps_join_two_instances() {
    let repo = xml_repo();
    let out = tempfile::tempdir().unwrap();
    let mut config = RecoveryJobConfig::new(repo.path(), out.path());
    config.dump_relations = true;
    let report = run_pipeline(&config, &LlmConfig::disabled()).await.unwrap();
    assert_eq!(report.manifest.status, RunStatus::Ok, "{:?}", report.manifest.error);

    let relations: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.path().join(RELATIONS_FILE)).unwrap()).unwrap();
    let shared = relations
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["resolved_name"] == "/shared")
        .expect("remapped relation");
    assert_eq!(shared["producer_instance_ids"], serde_json::json!(["n1"]));
    assert_eq!(shared["consumer_instance_ids"], serde_json::json!(["n2"]));
    let names: Vec<_> = relations.as_array().unwrap().iter().map(|r| r["resolved_name"].clone()).collect();
    assert!(names.contains(&"/chatter".into()), "{names:?}");
    assert!(names.contains(&"/left/echo".into()), "{names:?}");

    let ccd = fs::read_to_string(out.path().join("ccd/system.puml")).unwrap();
    assert!(ccd.contains("remap: chatter -> /shared"), "{ccd}");
}

#[tokio::test]
async fn failing_stage_still_writes_a_manifest() {
    let repo = tempfile::tempdir().unwrap();
    write(
        repo.path(),
        "loop/package.xml",
        r#"<package format="3"><name>loop</name><export><build_type>ament_cmake</build_type></export></package>"#,
    );
    write(
        repo.path(),
        "loop/launch/a.launch.xml",
        r#"<launch><include file="$(find-pkg-share loop)/launch/b.launch.xml"/></launch>"#,
    );
    write(
        repo.path(),
        "loop/launch/b.launch.xml",
        r#"<launch><include file="$(find-pkg-share loop)/launch/a.launch.xml"/></launch>"#,
    );
    let out = tempfile::tempdir().unwrap();
    let report = run_pipeline(&RecoveryJobConfig::new(repo.path(), out.path()), &LlmConfig::disabled())
        .await
        .unwrap();
    assert_eq!(report.manifest.status, RunStatus::Failed);
    assert_eq!(report.manifest.failed_stage, Some(Stage::LaunchGraph));
    assert_eq!(report.manifest.stages_completed, vec![Stage::Extract]);
    assert_eq!(report.exit_code(), 2);
    assert!(report.manifest.error.as_deref().unwrap().contains("cycle"));
    let on_disk: RunManifest =
        serde_json::from_str(&fs::read_to_string(out.path().join(MANIFEST_FILE)).unwrap()).unwrap();
    assert_eq!(on_disk, report.manifest);
}

#[test]
fn stale_outputs_are_replaced() {
    let repo = fixture("nested/repo");
    let out = tempfile::tempdir().unwrap();
    let mut d = Diagnostics::new();
    run_extract(&repo, out.path(), &mut d).unwrap();
    run_launch_graph(&repo, out.path(), &[], &mut d).unwrap();
    write(out.path(), "acd/arc_99.puml", "@startuml\n@enduml\n");
    run_synthesize(out.path(), true, &mut d).unwrap();
    assert!(!out.path().join("acd/arc_99.puml").exists());
    assert!(out.path().join(RELATIONS_FILE).exists());
    run_synthesize(out.path(), false, &mut d).unwrap();
    assert!(!out.path().join(RELATIONS_FILE).exists());
}

#[tokio::test]
async fn threshold_and_evaluation_file() {
    let repo = fixture("brickbybrick/repo");
    let out = tempfile::tempdir().unwrap();
    let mut config = RecoveryJobConfig::new(&repo, out.path());
    config.reference = Some(fixture("brickbybrick/reference"));
    config.fail_under = Some(0.99);
    let report = run_pipeline(&config, &LlmConfig::disabled()).await.unwrap();
    assert_eq!(report.manifest.status, RunStatus::Ok);
    assert!(report.manifest.artifacts.iter().any(|a| a.path == EVALUATION_FILE));
    let eval = report.evaluation.as_ref().unwrap();
    assert_eq!(eval.kind(ElementKind::CommunicationRelation).unwrap().counts.tp, 20);

    let strict = tempfile::tempdir().unwrap();
    config.out_dir = strict.path().to_path_buf();
    config.reference = Some(fixture("nested/reference"));
    let report = run_pipeline(&config, &LlmConfig::disabled()).await.unwrap();
    assert_eq!(report.manifest.status, RunStatus::BelowThreshold);
    assert_eq!(report.exit_code(), 3);
}

#[test]
fn prompt_embeds_both_artifacts() {
    let repo = fixture("nested/repo");
    let out = tempfile::tempdir().unwrap();
    let mut d = Diagnostics::new();
    run_extract(&repo, out.path(), &mut d).unwrap();
    run_launch_graph(&repo, out.path(), &[], &mut d).unwrap();
    let prompt = run_prompt(out.path(), CONSTRUCTOR_TEMPLATE).unwrap();
    let inventory = fs::read_to_string(out.path().join("atomic_ros_nodes.json")).unwrap();
    let ldd = fs::read_to_string(out.path().join("launch_dependencies.json")).unwrap();
    assert!(prompt.contains(inventory.trim_end()));
    assert!(prompt.contains(ldd.trim_end()));

    let err = run_prompt(out.path(), "no_such_template").unwrap_err();
    assert!(matches!(err, Error::UnknownTemplate { .. }));
    assert_eq!(err.class(), ErrorClass::Input);
}

#[test]
fn malformed_reference_is_an_analysis_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.puml", "@startuml\ncomponent \"A\" as a <<AtomicRosNodeClassifier>> {\n@enduml\n");
    let err = run_evaluate(&fixture("nested/reference"), &dir.path().join("bad.puml"), &mut Diagnostics::new())
        .unwrap_err();
    assert_eq!(err.class(), ErrorClass::Analysis);
    assert!(err.to_string().contains("line"), "{err}");
}

#[test]
fn diagnostics_are_json_lines() {
    let out = tempfile::tempdir().unwrap();
    let mut d = Diagnostics::new();
    d.warn("demo", Some("a.py"), "first");
    d.info("demo", None, "second");
    let path = out.path().join("nested/diag.jsonl");
    write_diagnostics(&path, &d).unwrap();
    let text = fs::read_to_string(path).unwrap();
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["severity"], "warning");
    assert_eq!(lines[1]["file"], serde_json::Value::Null);
}
