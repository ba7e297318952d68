//! Project files: one JSON document holding every section plus the journal,
//! guarded by a SHA-256 checksum.
//!
//! ```text
//! {"checksum": "sha256:…", "format_version": 2, "project": {…sections…, "journal": […]}}
//! ```
//!
//! Keys are written in sorted order and the checksum covers the compact
//! serialization of `project`, so identical projects produce identical bytes.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::project::{DecisionRecord, Project, ProjectError, ProjectState};

pub const FORMAT_VERSION: u64 = 2;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{location}: {message}")]
    Malformed { location: String, message: String },
    #[error("checksum mismatch: file says {expected}, content hashes to {found}")]
    Checksum { expected: String, found: String },
    #[error("project file is truncated or incomplete")]
    Truncated,
    #[error("format version {0} is newer than this tool understands ({FORMAT_VERSION})")]
    UnsupportedVersion(u64),
    #[error("journal replay disagrees with the stored {section} section")]
    Inconsistent { section: String },
    #[error(transparent)]
    Project(#[from] ProjectError),
}

/// Renders a deserialization path as a JSON pointer such as `/criteria/0/id`.
pub fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for segment in path.iter() {
        out.push('/');
        match segment {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    out
}

fn checksum_of(project: &Value) -> String {
    let compact = serde_json::to_vec(project).expect("values serialize");
    format!("sha256:{}", hex::encode(Sha256::digest(compact)))
}

/// The exact bytes `save` writes.
pub fn to_bytes(project: &Project) -> Vec<u8> {
    // a Value re-orders object keys alphabetically
    let mut project_value = serde_json::to_value(project.state()).expect("project serializes");
    project_value["journal"] = serde_json::to_value(project.journal()).expect("journal serializes");
    let file = serde_json::json!({
        "checksum": checksum_of(&project_value),
        "format_version": FORMAT_VERSION,
        "project": project_value,
    });
    let mut bytes = serde_json::to_vec_pretty(&file).expect("values serialize");
    bytes.push(b'\n');
    bytes
}

/// Parses and verifies a project file. Version 1 files (no checksum) are
/// migrated in memory.
pub fn from_bytes(bytes: &[u8]) -> Result<Project, StoreError> {
    let file: Value = serde_json::from_slice(bytes).map_err(|e| {
        if e.is_eof() {
            StoreError::Truncated
        } else {
            StoreError::Malformed {
                location: format!("line {} column {}", e.line(), e.column()),
                message: e.to_string(),
            }
        }
    })?;
    let Value::Object(mut file) = file else {
        return Err(StoreError::Malformed {
            location: "/".into(),
            message: "a project file is a JSON object".into(),
        });
    };
    let version = match file.get("format_version") {
        None => 1,
        Some(v) => v.as_u64().ok_or_else(|| StoreError::Malformed {
            location: "/format_version".into(),
            message: "expected a positive integer".into(),
        })?,
    };
    if version > FORMAT_VERSION {
        return Err(StoreError::UnsupportedVersion(version));
    }
    let project_value = file.remove("project").ok_or_else(|| StoreError::Malformed {
        location: "/project".into(),
        message: "missing project section".into(),
    })?;
    if version >= 2 {
        let expected = file
            .get("checksum")
            .and_then(Value::as_str)
            .ok_or(StoreError::Malformed {
                location: "/checksum".into(),
                message: "missing checksum".into(),
            })?
            .to_owned();
        let found = checksum_of(&project_value);
        if expected != found {
            return Err(StoreError::Checksum { expected, found });
        }
    }
    let mut sections = project_value.clone();
    let journal = match sections.as_object_mut() {
        Some(obj) => obj.remove("journal").unwrap_or(Value::Array(Vec::new())),
        None => {
            return Err(StoreError::Malformed {
                location: "/project".into(),
                message: "expected an object".into(),
            })
        }
    };
    let journal: Vec<DecisionRecord> = deserialize_at(journal, "/project/journal")?;
    let state: ProjectState = deserialize_at(sections, "/project")?;
    let replayed = Project::replay(&journal)?;
    if replayed.state() != &state {
        let ours = serde_json::to_value(replayed.state()).expect("state serializes");
        let section = match (&ours, &project_value) {
            (Value::Object(a), Value::Object(b)) => a
                .iter()
                .find(|(k, v)| b.get(*k) != Some(*v))
                .map(|(k, _)| k.clone()),
            _ => None,
        }
        .unwrap_or_else(|| "project".into());
        return Err(StoreError::Inconsistent { section });
    }
    Ok(replayed)
}

fn deserialize_at<T: for<'de> Deserialize<'de>>(value: Value, prefix: &str) -> Result<T, StoreError> {
    serde_path_to_error::deserialize(value).map_err(|e| StoreError::Malformed {
        location: format!("{prefix}{}", json_pointer(e.path())),
        message: e.inner().to_string(),
    })
}

pub fn load(path: impl AsRef<Path>) -> Result<Project, StoreError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| StoreError::Io {
        path: path.display().to_string(),
        source,
    })?;
    from_bytes(&bytes)
}

fn lock_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".lock");
    path.with_file_name(name)
}

fn io_error(p: &Path) -> impl FnOnce(std::io::Error) -> StoreError {
    let p = p.display().to_string();
    move |source| StoreError::Io { path: p, source }
}

/// An exclusive lock on `<path>.lock`, held until dropped. Writers queue on
/// it instead of interleaving.
pub struct ProjectLock {
    file: File,
    path: PathBuf,
}

impl ProjectLock {
    pub fn acquire(path: impl AsRef<Path>) -> Result<ProjectLock, StoreError> {
        let path = path.as_ref().to_path_buf();
        let lock_file = lock_path(&path);
        let file = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&lock_file)
            .map_err(io_error(&lock_file))?;
        file.lock().map_err(io_error(&lock_file))?;
        Ok(ProjectLock { file, path })
    }

    /// Loads the project, or an empty one when the file does not exist yet.
    pub fn load_or_new(&self) -> Result<Project, StoreError> {
        if self.path.exists() {
            load(&self.path)
        } else {
            Ok(Project::new())
        }
    }

    /// Writes through a temporary file and a rename.
    pub fn write(&self, project: &Project) -> Result<(), StoreError> {
        let path = &self.path;
        let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
        tmp_name.push(".tmp");
        let tmp = path.with_file_name(tmp_name);
        let mut f = File::create(&tmp).map_err(io_error(&tmp))?;
        f.write_all(&to_bytes(project)).map_err(io_error(&tmp))?;
        f.sync_all().map_err(io_error(&tmp))?;
        std::fs::rename(&tmp, path).map_err(io_error(path))
    }
}

impl Drop for ProjectLock {
    fn drop(&mut self) {
        let _ = self.file.unlock();
    }
}

/// Locks, writes and unlocks.
pub fn save(project: &Project, path: impl AsRef<Path>) -> Result<(), StoreError> {
    ProjectLock::acquire(path)?.write(project)
}
