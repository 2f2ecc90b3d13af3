//! Tutorial definition files.
//!
//! A TOML document with one `[[page]]` table per page. Training circuits
//! are embedded as `ELEMENTS`/`WIRES` text in the same notation as task
//! documents.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use circuitlab_core::tutorial::{Topic, Tutorial, TutorialPage};

use crate::format::{parse_netlist, ParseError};

#[derive(Debug, thiserror::Error)]
pub enum TutorialError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Syntax { path: PathBuf, message: String },
    #[error("{}: page {page}: unknown topic '{topic}'", path.display())]
    Topic {
        path: PathBuf,
        page: String,
        topic: String,
    },
    #[error("{}: page {page}: circuit {source}", path.display())]
    Circuit {
        path: PathBuf,
        page: String,
        source: ParseError,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct File {
    page: Vec<PageDef>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PageDef {
    id: String,
    topic: String,
    title: String,
    body: String,
    circuit: Option<String>,
}

pub fn parse_tutorial(text: &str, path: &Path) -> Result<Tutorial, TutorialError> {
    let file: File = toml::from_str(text).map_err(|e| TutorialError::Syntax {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let pages = file
        .page
        .into_iter()
        .map(|p| {
            let topic: Topic = p.topic.parse().map_err(|_| TutorialError::Topic {
                path: path.to_path_buf(),
                page: p.id.clone(),
                topic: p.topic.clone(),
            })?;
            let circuit = p
                .circuit
                .as_deref()
                .map(parse_netlist)
                .transpose()
                .map_err(|source| TutorialError::Circuit {
                    path: path.to_path_buf(),
                    page: p.id.clone(),
                    source,
                })?;
            Ok(TutorialPage {
                id: p.id,
                topic,
                title: p.title,
                body: p.body.trim().to_string(),
                circuit,
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(Tutorial { pages })
}

pub fn load_tutorial(path: &Path) -> Result<Tutorial, TutorialError> {
    let text = fs::read_to_string(path).map_err(|source| TutorialError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_tutorial(&text, path)
}
