//! Staged architecture recovery for ROS 2 repositories.
//!
//! The pipeline runs in four deterministic stages:
//!
//! 1. [`extract`] scans packages and writes the List of Atomic ROS Nodes
//!    (`atomic_ros_nodes.json`).
//! 2. [`launch`] statically interprets launch files and writes the Launch
//!    File Dependency Description (`launch_dependencies.json`).
//! 3. [`names`] resolves namespaces and remappings into system-level
//!    communication relations, and [`synth`] assembles the composed model
//!    and emits PlantUML at the atomic (ACD) and composed (CCD) levels.
//! 4. [`eval`] scores recovered PlantUML models against reference models.
//!
//! [`llm`] holds the prompt-contract machinery and the optional
//! text-generation client; nothing structural depends on it.

pub mod api;
pub mod diag;
pub mod error;
pub mod eval;
pub mod extract;
pub mod launch;
pub mod llm;
pub mod model;
pub mod names;
pub mod pipeline;
pub mod synth;

mod json;
mod syntax;

pub use diag::{Diagnostic, Diagnostics, Severity};
pub use error::{Error, ErrorClass, Result};
