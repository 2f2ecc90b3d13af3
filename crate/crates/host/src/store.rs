//! Append-only session logs: one newline-delimited JSON file per session
//! under `<root>/sessions/<pseudonym>.ndjson`.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use circuitlab_core::{EventRecord, Pseudonym};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: line {line} is not a valid record: {message}", path.display())]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> Result<Store, StoreError> {
        let store = Store { root: root.into() };
        let dir = store.sessions_dir();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn sessions_dir(&self) -> PathBuf {
        self.root.join("sessions")
    }

    pub fn log_path(&self, pseudonym: Pseudonym) -> PathBuf {
        self.sessions_dir().join(format!("{pseudonym}.ndjson"))
    }

    /// Creates the log of a new session; fails if it already exists.
    pub fn create_log(&self, pseudonym: Pseudonym) -> Result<SessionLog, StoreError> {
        let path = self.log_path(pseudonym);
        let file = OpenOptions::new()
            .append(true)
            .create_new(true)
            .open(&path)
            .map_err(io_err(&path))?;
        Ok(SessionLog { path, file })
    }

    pub fn open_log(&self, pseudonym: Pseudonym) -> Result<SessionLog, StoreError> {
        let path = self.log_path(pseudonym);
        let file = OpenOptions::new()
            .append(true)
            .open(&path)
            .map_err(io_err(&path))?;
        Ok(SessionLog { path, file })
    }

    /// Paths of all session logs, sorted.
    pub fn log_files(&self) -> Result<Vec<PathBuf>, StoreError> {
        list_logs(&self.sessions_dir())
    }
}

/// `.ndjson` files in `dir`, sorted by name.
pub fn list_logs(dir: &Path) -> Result<Vec<PathBuf>, StoreError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if path.extension().is_some_and(|e| e == "ndjson") {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

#[derive(Debug)]
pub struct SessionLog {
    path: PathBuf,
    file: File,
}

impl SessionLog {
    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Writes one record as a single line with one write call.
    pub fn append(&mut self, record: &EventRecord) -> Result<(), StoreError> {
        let mut line = serde_json::to_vec(record).expect("records always serialize");
        line.push(b'\n');
        self.file.write_all(&line).map_err(io_err(&self.path))?;
        self.file.flush().map_err(io_err(&self.path))
    }
}

#[derive(Debug)]
pub struct LoadedLog {
    pub records: Vec<EventRecord>,
    /// Bytes removed from the end of the file because the final line was
    /// incomplete or unreadable.
    pub truncated: Option<u64>,
}

fn parse_lines(path: &Path, bytes: &[u8]) -> Result<(Vec<EventRecord>, usize), StoreError> {
    let mut records = Vec::new();
    let mut offset = 0;
    let mut line_no = 0;
    while offset < bytes.len() {
        line_no += 1;
        let rest = &bytes[offset..];
        let (line, next, complete) = match rest.iter().position(|&b| b == b'\n') {
            Some(i) => (&rest[..i], offset + i + 1, true),
            None => (rest, bytes.len(), false),
        };
        match serde_json::from_slice::<EventRecord>(line) {
            Ok(r) if complete => records.push(r),
            Ok(_) => return Ok((records, offset)),
            Err(e) => {
                let only_blank_after = bytes[next..].iter().all(u8::is_ascii_whitespace);
                if only_blank_after {
                    return Ok((records, offset));
                }
                return Err(StoreError::Corrupt {
                    path: path.to_path_buf(),
                    line: line_no,
                    message: e.to_string(),
                });
            }
        }
        offset = next;
    }
    Ok((records, offset))
}

/// Reads a log without modifying it. A damaged final line is ignored.
pub fn read_log(path: &Path) -> Result<LoadedLog, StoreError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let (records, valid) = parse_lines(path, &bytes)?;
    let dropped = (bytes.len() - valid) as u64;
    Ok(LoadedLog {
        records,
        truncated: (dropped > 0).then_some(dropped),
    })
}

/// Reads a log and cuts a damaged final line off the file.
pub fn repair_log(path: &Path) -> Result<LoadedLog, StoreError> {
    let loaded = read_log(path)?;
    if let Some(dropped) = loaded.truncated {
        let len = fs::metadata(path).map_err(io_err(path))?.len();
        let file = OpenOptions::new()
            .write(true)
            .open(path)
            .map_err(io_err(path))?;
        file.set_len(len - dropped).map_err(io_err(path))?;
        tracing::warn!(
            path = %path.display(),
            bytes = dropped,
            "truncated damaged tail of session log"
        );
    }
    Ok(loaded)
}
