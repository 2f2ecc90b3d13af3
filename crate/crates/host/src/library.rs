//! Loading a task library directory.
//!
//! The directory holds task documents and a `manifest.toml` that lists
//! the groups in order with their task files:
//!
//! ```toml
//! [[group]]
//! name = "qualification"
//! tasks = ["Q1.task", "Q2.task"]
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use circuitlab_core::task::{
    validate_task, DesignConstraints, Group, Library, Task, TaskGroup, TaskReport,
};

use crate::format::{parse_task, ParseError};

pub const MANIFEST: &str = "manifest.toml";

#[derive(Debug, thiserror::Error)]
pub enum LibraryError {
    #[error("missing manifest {}", .0.display())]
    MissingManifest(PathBuf),
    #[error("manifest {}: {message}", path.display())]
    Manifest { path: PathBuf, message: String },
    #[error("task file {} does not exist", .0.display())]
    MissingFile(PathBuf),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Parse { path: PathBuf, source: ParseError },
    #[error("{}: listed under {expected} but declares group {found}", path.display())]
    GroupMismatch {
        path: PathBuf,
        expected: Group,
        found: Group,
    },
    #[error("{}: validation failed\n{report}", path.display())]
    Invalid {
        path: PathBuf,
        report: Box<TaskReport>,
    },
    #[error("task id {0} appears twice")]
    DuplicateTask(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    #[serde(default)]
    group: Vec<ManifestGroup>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestGroup {
    name: String,
    tasks: Vec<String>,
}

pub fn read_task(path: &Path) -> Result<Task, LibraryError> {
    if !path.exists() {
        return Err(LibraryError::MissingFile(path.to_path_buf()));
    }
    let bytes = fs::read(path).map_err(|source| LibraryError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_task(&bytes).map_err(|source| LibraryError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

/// Groups and task file paths listed in `root/manifest.toml`, in order.
pub fn read_manifest(root: &Path) -> Result<Vec<(Group, Vec<PathBuf>)>, LibraryError> {
    let manifest_path = root.join(MANIFEST);
    if !manifest_path.is_file() {
        return Err(LibraryError::MissingManifest(manifest_path));
    }
    let text = fs::read_to_string(&manifest_path).map_err(|source| LibraryError::Io {
        path: manifest_path.clone(),
        source,
    })?;
    let manifest: Manifest = toml::from_str(&text).map_err(|e| LibraryError::Manifest {
        path: manifest_path.clone(),
        message: e.to_string(),
    })?;
    let mut out: Vec<(Group, Vec<PathBuf>)> = Vec::new();
    for g in manifest.group {
        let group: Group = g.name.parse().map_err(|e| LibraryError::Manifest {
            path: manifest_path.clone(),
            message: format!("{e}"),
        })?;
        if out.iter().any(|(seen, _)| *seen == group) {
            return Err(LibraryError::Manifest {
                path: manifest_path.clone(),
                message: format!("group {group} listed twice"),
            });
        }
        out.push((group, g.tasks.iter().map(|f| root.join(f)).collect()));
    }
    Ok(out)
}

/// Loads and validates every task listed in `root/manifest.toml`. The
/// first failure aborts loading.
pub fn load_library(root: &Path, constraints: &DesignConstraints) -> Result<Library, LibraryError> {
    let mut library = Library::default();
    let mut ids = std::collections::HashSet::new();
    for (group, paths) in read_manifest(root)? {
        let mut tasks = Vec::with_capacity(paths.len());
        for path in paths {
            let task = read_task(&path)?;
            if task.group != group {
                return Err(LibraryError::GroupMismatch {
                    path,
                    expected: group,
                    found: task.group,
                });
            }
            let report = validate_task(&task, constraints);
            if !report.is_valid() {
                return Err(LibraryError::Invalid {
                    path,
                    report: Box::new(report),
                });
            }
            if !ids.insert(task.id.clone()) {
                return Err(LibraryError::DuplicateTask(task.id));
            }
            tasks.push(task);
        }
        library.groups.push(TaskGroup { group, tasks });
    }
    Ok(library)
}
