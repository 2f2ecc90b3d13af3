//! Study configuration file.
//!
//! ```toml
//! [study.main]
//! library = "library"
//! tutorial = "tutorial/tutorial.toml"
//! zvt = ["zvt/example-1.zvt", "zvt/test-1.zvt"]
//!
//! [study.main.config]
//! global_time_limit = 4500
//! ```
//!
//! Relative paths are resolved against the directory of the file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use circuitlab_core::engine::{ConfigError, ContentError, StudyConfig, StudyContent};
use circuitlab_core::task::DesignConstraints;
use circuitlab_core::tutorial::{lint, TutorialIssue};

use crate::format::{parse_zvt, ParseError};
use crate::library::{load_library, LibraryError};
use crate::tutorial::{load_tutorial, TutorialError};

#[derive(Debug, thiserror::Error)]
pub enum StudyError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Syntax { path: PathBuf, message: String },
    #[error("study {study}: {source}")]
    Config { study: String, source: ConfigError },
    #[error("study {study}: {source}")]
    Library { study: String, source: LibraryError },
    #[error("study {study}: {source}")]
    Tutorial {
        study: String,
        source: TutorialError,
    },
    #[error("study {study}: tutorial content: {}", issues.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    TutorialContent {
        study: String,
        issues: Vec<TutorialIssue>,
    },
    #[error("study {study}: {}: {source}", path.display())]
    Zvt {
        study: String,
        path: PathBuf,
        source: ParseError,
    },
    #[error("study {study}: {source}")]
    Content { study: String, source: ContentError },
    #[error("study {study}: the psychometric test is enabled but no matrices are listed")]
    NoZvt { study: String },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StudiesFile {
    #[serde(default)]
    study: BTreeMap<String, StudyDef>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StudyDef {
    library: PathBuf,
    tutorial: PathBuf,
    #[serde(default)]
    zvt: Vec<PathBuf>,
    #[serde(default)]
    config: StudyConfig,
    #[serde(default)]
    constraints: DesignConstraints,
}

/// A study ready to host sessions.
#[derive(Debug, Clone)]
pub struct Study {
    pub id: String,
    pub config: StudyConfig,
    pub content: Arc<StudyContent>,
}

pub fn load_studies(path: &Path) -> Result<BTreeMap<String, Study>, StudyError> {
    let text = fs::read_to_string(path).map_err(|source| StudyError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file: StudiesFile = toml::from_str(&text).map_err(|e| StudyError::Syntax {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    file.study
        .into_iter()
        .map(|(id, def)| {
            let study = build(&id, def, base)?;
            Ok((id, study))
        })
        .collect()
}

fn build(id: &str, def: StudyDef, base: &Path) -> Result<Study, StudyError> {
    let study = || id.to_string();
    def.config.validate().map_err(|source| StudyError::Config {
        study: study(),
        source,
    })?;
    let library = load_library(&base.join(&def.library), &def.constraints).map_err(|source| {
        StudyError::Library {
            study: study(),
            source,
        }
    })?;
    let tutorial =
        load_tutorial(&base.join(&def.tutorial)).map_err(|source| StudyError::Tutorial {
            study: study(),
            source,
        })?;
    let issues = lint(&tutorial);
    if !issues.is_empty() {
        return Err(StudyError::TutorialContent {
            study: study(),
            issues,
        });
    }
    let mut matrices = Vec::with_capacity(def.zvt.len());
    for rel in &def.zvt {
        let path = base.join(rel);
        let text = fs::read_to_string(&path).map_err(|source| StudyError::Io {
            path: path.clone(),
            source,
        })?;
        let m = parse_zvt(&text).map_err(|source| StudyError::Zvt {
            study: study(),
            path: path.clone(),
            source,
        })?;
        matrices.push(m);
    }
    if def.config.zvt_enabled && matrices.is_empty() {
        return Err(StudyError::NoZvt { study: study() });
    }
    let content =
        StudyContent::new(&library, tutorial, matrices).map_err(|source| StudyError::Content {
            study: study(),
            source,
        })?;
    Ok(Study {
        id: id.to_string(),
        config: def.config,
        content: Arc::new(content),
    })
}
