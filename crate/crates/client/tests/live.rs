use std::path::{Path, PathBuf};

use rosarch_client::{Client, ClientError};
use rosarch_core::api::*;
use rosarch_core::pipeline::{RecoveryJobConfig, RunStatus};
use rosarch_core::ErrorClass;
use rosarch_server::AppState;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

async fn client() -> Client {
    let (addr, _) = rosarch_server::spawn(([127, 0, 0, 1], 0).into(), AppState::default())
        .await
        .unwrap();
    Client::new(format!("http://{addr}/"))
}

#[tokio::test]
async fn base_url_drops_trailing_slash() {
    let c = Client::new("http://localhost:1/");
    assert_eq!(c.base_url(), "http://localhost:1");
}

#[tokio::test]
async fn stage_by_stage_round_trip() {
    let c = client().await;
    assert_eq!(c.health().await.unwrap().status, "ok");
    let out = tempfile::tempdir().unwrap();
    let repo = fixture("brickbybrick/repo");

    let inv = c
        .extract(&ExtractRequest {
            repo: repo.clone(),
            out: out.path().into(),
        })
        .await
        .unwrap();
    assert_eq!(inv.result.classifiers().count(), 10);

    let ldd = c
        .launch_graph(&LaunchGraphRequest {
            repo,
            out: out.path().into(),
            roots: vec!["bbb_bringup/launch/bringup.launch.py".into()],
        })
        .await
        .unwrap();
    assert_eq!(ldd.result.list_atom_node_instances.len(), 10);

    let synth = c
        .synthesize(&SynthesizeRequest {
            out: out.path().into(),
            dump_relations: true,
        })
        .await
        .unwrap();
    assert_eq!(synth.result.relations.len(), 20);
    assert!(synth.result.files.contains(&"relations.json".to_string()));

    let eval = c
        .evaluate(&EvaluateRequest {
            recovered: out.path().into(),
            reference: fixture("brickbybrick/reference"),
        })
        .await
        .unwrap();
    assert!(eval.result.below(1.0).is_empty());
}

#[tokio::test]
async fn pipeline_and_names() {
    let c = client().await;
    let out = tempfile::tempdir().unwrap();
    let report = c
        .pipeline(&RecoveryJobConfig::new(fixture("nested/repo"), out.path()))
        .await
        .unwrap();
    assert_eq!(report.manifest.status, RunStatus::Ok);

    let r = c
        .resolve_name(&ResolveNameRequest {
            name: "reset".into(),
            namespace: "/main".into(),
            node_name: "Tom".into(),
            remappings: vec![],
        })
        .await
        .unwrap();
    assert_eq!(r.result.resolved, "/main/reset");
    assert_eq!(r.result.remapped, "/main/reset");

    let p = c
        .prompt(&PromptRequest {
            template: "system_architecture_constructor".into(),
            out: out.path().into(),
        })
        .await
        .unwrap();
    assert!(p.result.prompt.contains("list_atom_node_instances"));
}

#[tokio::test]
async fn service_errors_keep_their_class() {
    let c = client().await;
    let out = tempfile::tempdir().unwrap();
    let err = c
        .prompt(&PromptRequest {
            template: "nope".into(),
            out: out.path().into(),
        })
        .await
        .unwrap_err();
    assert_eq!(err.class(), ErrorClass::Input);
    assert!(matches!(err, ClientError::Api { status, .. } if status == 400));

    let bad = out.path().join("bad.puml");
    std::fs::write(&bad, "component \"A\" as a <<AtomicRosNodeClassifier>> {\n").unwrap();
    let err = c
        .evaluate(&EvaluateRequest {
            recovered: bad.clone(),
            reference: bad,
        })
        .await
        .unwrap_err();
    assert_eq!(err.class(), ErrorClass::Analysis);
}

#[tokio::test]
async fn unreachable_service_is_a_transport_error() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    let err = Client::new(format!("http://{addr}")).health().await.unwrap_err();
    assert!(matches!(err, ClientError::Transport { .. }), "{err}");
    assert_eq!(err.class(), ErrorClass::Input);
}
