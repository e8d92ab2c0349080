//! `rosarch`: command-line client of the recovery service.
//!
//! Without `--server` an in-process service is started on a loopback port
//! and every command goes through it.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rosarch_client::{Client, ClientError};
use rosarch_core::api::*;
use rosarch_core::model::Remapping;
use rosarch_core::pipeline::{PipelineReport, RecoveryJobConfig, RunStatus};
use rosarch_core::{Diagnostic, ErrorClass};
use rosarch_server::AppState;

#[derive(Parser, Debug)]
#[command(name = "rosarch", version, about = "Recover architecture models from ROS 2 repositories")]
struct Cli {
    /// Base URL of a running service; omit to start one in-process.
    #[arg(long, global = true, env = "ROSARCH_SERVER")]
    server: Option<String>,

    /// Write diagnostics here as JSON lines.
    #[arg(long, global = true)]
    diagnostics: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args, Debug)]
struct RepoOut {
    #[arg(long)]
    repo: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every stage and write a manifest.
    Run {
        #[command(flatten)]
        paths: RepoOut,
        /// Root launch file, relative to the repository; repeatable.
        #[arg(long = "root")]
        roots: Vec<PathBuf>,
        /// Never contact the language model.
        #[arg(long)]
        no_llm: bool,
        #[arg(long)]
        dump_relations: bool,
        /// Reference models to score against.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Exit with 3 when a level's macro F1 falls below this.
        #[arg(long)]
        fail_under: Option<f64>,
    },
    /// Write the node inventory.
    Extract {
        #[command(flatten)]
        paths: RepoOut,
    },
    /// Write the launch dependency description.
    LaunchGraph {
        #[command(flatten)]
        paths: RepoOut,
        #[arg(long = "root")]
        roots: Vec<PathBuf>,
    },
    /// Write the PlantUML diagrams from the two artifacts in `--out`.
    Synthesize {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        dump_relations: bool,
    },
    /// Score recovered diagrams against reference diagrams.
    Evaluate {
        #[arg(long)]
        recovered: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        fail_under: Option<f64>,
    },
    /// Print a prompt rendered over the artifacts in `--out`.
    Prompt {
        #[arg(long)]
        template: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Resolve a topic or service name as seen by one node.
    ResolveName {
        name: String,
        #[arg(long, default_value = "/")]
        namespace: String,
        #[arg(long)]
        node: String,
        /// `from:=to`; repeatable.
        #[arg(long = "remap", value_parser = parse_remap)]
        remaps: Vec<Remapping>,
    },
    /// Serve the HTTP API until interrupted.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
    },
}

fn parse_remap(s: &str) -> Result<Remapping, String> {
    match s.split_once(":=") {
        Some((from, to)) if !from.is_empty() && !to.is_empty() => Ok(Remapping::new(from, to)),
        _ => Err(format!("expected `from:=to`, got `{s}`")),
    }
}

fn absolute(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}

fn class_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Input => 1,
        ErrorClass::Analysis => 2,
    }
}

struct Output {
    format: Format,
    diagnostics: Option<PathBuf>,
}

impl Output {
    fn print<T: serde::Serialize>(&self, value: &T, text: impl FnOnce() -> String) {
        match self.format {
            Format::Json => println!("{}", serde_json::to_string_pretty(value).expect("serializable")),
            Format::Text => print!("{}", text()),
        }
    }

    fn diagnostics(&self, diags: &[Diagnostic]) -> Result<(), u8> {
        if self.format == Format::Text {
            for d in diags {
                eprintln!("{d}");
            }
        }
        let Some(path) = &self.diagnostics else { return Ok(()) };
        let mut buf = String::new();
        for d in diags {
            buf.push_str(&serde_json::to_string(d).expect("serializable"));
            buf.push('\n');
        }
        std::fs::write(path, buf).map_err(|e| {
            eprintln!("error: {}: {e}", path.display());
            1
        })
    }

    fn stage<T: serde::Serialize>(&self, response: StageResponse<T>, text: impl FnOnce(&T) -> String) -> Result<(), u8> {
        self.diagnostics(&response.diagnostics)?;
        self.print(&response, || text(&response.result));
        Ok(())
    }
}

fn report_error(out: &Output, e: &ClientError) -> u8 {
    if let ClientError::Api { body, .. } = e {
        let _ = out.diagnostics(&body.diagnostics);
    }
    eprintln!("error: {e}");
    class_code(e.class())
}

fn run_text(report: &PipelineReport) -> String {
    let m = &report.manifest;
    let mut s = String::new();
    let status = match m.status {
        RunStatus::Ok => "ok",
        RunStatus::Failed => "failed",
        RunStatus::BelowThreshold => "below threshold",
    };
    s.push_str(&format!("status: {status}\n"));
    if let (Some(stage), Some(err)) = (&m.failed_stage, &m.error) {
        s.push_str(&format!("failed stage: {}: {err}\n", stage.as_str()));
    }
    for a in &m.artifacts {
        s.push_str(&format!("{}  {}\n", &a.sha256[..12], a.path));
    }
    s.push_str(&format!("manifest digest: {}\n", m.digest()));
    if report.descriptions_generated > 0 {
        s.push_str(&format!("descriptions generated: {}\n", report.descriptions_generated));
    }
    if let Some(eval) = &report.evaluation {
        s.push('\n');
        s.push_str(&eval.to_text());
    }
    s
}

async fn execute(command: Command, client: &Client, out: &Output) -> Result<(), u8> {
    let err = |e: ClientError| report_error(out, &e);
    match command {
        Command::Run {
            paths,
            roots,
            no_llm,
            dump_relations,
            reference,
            fail_under,
        } => {
            let mut config = RecoveryJobConfig::new(absolute(&paths.repo), absolute(&paths.out));
            config.roots = roots;
            config.llm_enabled = !no_llm;
            config.dump_relations = dump_relations;
            config.reference = reference.as_deref().map(absolute);
            config.fail_under = fail_under;
            let report = client.pipeline(&config).await.map_err(err)?;
            out.diagnostics(report.diagnostics.iter().cloned().collect::<Vec<_>>().as_slice())?;
            out.print(&report, || run_text(&report));
            match report.exit_code() {
                0 => Ok(()),
                code => Err(code as u8),
            }
        }
        Command::Extract { paths } => {
            let req = ExtractRequest {
                repo: absolute(&paths.repo),
                out: absolute(&paths.out),
            };
            let resp = client.extract(&req).await.map_err(err)?;
            out.stage(resp, |inv| {
                let n = inv.classifiers().count();
                format!("{n} atomic node classifier(s) in {} package(s)\n", inv.list_packages.len())
            })
        }
        Command::LaunchGraph { paths, roots } => {
            let req = LaunchGraphRequest {
                repo: absolute(&paths.repo),
                out: absolute(&paths.out),
                roots,
            };
            let resp = client.launch_graph(&req).await.map_err(err)?;
            out.stage(resp, |ldd| {
                format!(
                    "{} launch file(s), {} node instance(s), roots: {}\n",
                    ldd.list_launch_file.len(),
                    ldd.list_atom_node_instances.len(),
                    ldd.roots.join(", ")
                )
            })
        }
        Command::Synthesize { out: dir, dump_relations } => {
            let req = SynthesizeRequest {
                out: absolute(&dir),
                dump_relations,
            };
            let resp = client.synthesize(&req).await.map_err(err)?;
            out.stage(resp, |s| {
                let mut text: String = s.files.iter().map(|f| format!("{f}\n")).collect();
                text.push_str(&format!("{} communication relation(s)\n", s.relations.len()));
                text
            })
        }
        Command::Evaluate {
            recovered,
            reference,
            fail_under,
        } => {
            let req = EvaluateRequest {
                recovered: absolute(&recovered),
                reference: absolute(&reference),
            };
            let resp = client.evaluate(&req).await.map_err(err)?;
            let below = fail_under.map(|t| resp.result.below(t)).unwrap_or_default();
            out.stage(resp, |r| r.to_text())?;
            if below.is_empty() {
                Ok(())
            } else {
                Err(3)
            }
        }
        Command::Prompt { template, out: dir } => {
            let req = PromptRequest {
                template,
                out: absolute(&dir),
            };
            let resp = client.prompt(&req).await.map_err(err)?;
            out.stage(resp, |p| format!("{}\n", p.prompt.trim_end()))
        }
        Command::ResolveName {
            name,
            namespace,
            node,
            remaps,
        } => {
            let req = ResolveNameRequest {
                name,
                namespace,
                node_name: node,
                remappings: remaps,
            };
            let resp = client.resolve_name(&req).await.map_err(err)?;
            out.stage(resp, |r| {
                if r.resolved == r.remapped {
                    format!("{}\n", r.resolved)
                } else {
                    format!("{} -> {}\n", r.resolved, r.remapped)
                }
            })
        }
        Command::Serve { .. } => unreachable!("handled before a client exists"),
    }
}

#[tokio::main]
async fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors are input errors; --help and --version are not errors.
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();

    if let Command::Serve { bind } = cli.command {
        let listener = match tokio::net::TcpListener::bind(bind).await {
            Ok(l) => l,
            Err(e) => {
                eprintln!("error: cannot bind {bind}: {e}");
                return ExitCode::from(1);
            }
        };
        eprintln!("listening on http://{}", listener.local_addr().map(|a| a.to_string()).unwrap_or_default());
        return match rosarch_server::serve(listener, AppState::from_env()).await {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        };
    }

    let (client, _local) = match &cli.server {
        Some(url) => (Client::new(url.clone()), None),
        None => match rosarch_server::spawn(([127, 0, 0, 1], 0).into(), AppState::from_env()).await {
            Ok((addr, handle)) => (Client::new(format!("http://{addr}")), Some(handle)),
            Err(e) => {
                eprintln!("error: cannot start the local service: {e}");
                return ExitCode::from(2);
            }
        },
    };
    let out = Output {
        format: cli.format,
        diagnostics: cli.diagnostics.map(|p| absolute(&p)),
    };
    match execute(cli.command, &client, &out).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => ExitCode::from(code),
    }
}
