//! Versioned JSON documents shared by checkpoints and sample archives.
//!
//! Every document is a JSON object whose `format` and `version` fields are
//! checked before the rest is decoded, so a file from another tool or an
//! older release fails with a specific error instead of a field mismatch.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} is not a valid {expected} document: {message}")]
    Format {
        path: PathBuf,
        expected: String,
        message: String,
    },
    #[error("{path} has version {found}, this build reads version {expected}")]
    Version {
        path: PathBuf,
        found: String,
        expected: String,
    },
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ArtifactError> {
    let io = |source| ArtifactError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io)?;
    }
    let text = serde_json::to_string(value).map_err(|e| ArtifactError::Format {
        path: path.to_path_buf(),
        expected: "serializable".into(),
        message: e.to_string(),
    })?;
    fs::write(path, text).map_err(io)
}

pub(crate) fn read_versioned<T: DeserializeOwned>(path: &Path, format: &str, version: &str) -> Result<T, ArtifactError> {
    let text = fs::read_to_string(path).map_err(|source| ArtifactError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_versioned(&text, format, version).map_err(|e| match e {
        ParseFailure::Format(message) => ArtifactError::Format {
            path: path.to_path_buf(),
            expected: format.into(),
            message,
        },
        ParseFailure::Version(found) => ArtifactError::Version {
            path: path.to_path_buf(),
            found,
            expected: version.into(),
        },
    })
}

enum ParseFailure {
    Format(String),
    Version(String),
}

fn parse_versioned<T: DeserializeOwned>(text: &str, format: &str, version: &str) -> Result<T, ParseFailure> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ParseFailure::Format(e.to_string()))?;
    let header = |key: &str| value.get(key).and_then(|v| v.as_str()).map(str::to_owned);
    match header("format") {
        Some(f) if f == format => {}
        Some(f) => return Err(ParseFailure::Format(format!("format field is {f:?}"))),
        None => return Err(ParseFailure::Format("missing format field".into())),
    }
    match header("version") {
        Some(v) if v == version => {}
        Some(v) => return Err(ParseFailure::Version(v)),
        None => return Err(ParseFailure::Format("missing version field".into())),
    }
    serde_json::from_value(value).map_err(|e| ParseFailure::Format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Serialize, Deserialize, PartialEq)]
    struct Doc {
        format: String,
        version: String,
        x: f64,
    }

    fn doc(version: &str) -> Doc {
        Doc {
            format: "demo".into(),
            version: version.into(),
            x: 0.1 + 0.2,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/doc.json");
        write_json(&path, &doc("1")).unwrap();
        let back: Doc = read_versioned(&path, "demo", "1").unwrap();
        assert_eq!(back, doc("1"));
    }

    #[test]
    fn header_errors_are_specific() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("doc.json");
        write_json(&path, &doc("2")).unwrap();
        assert!(matches!(read_versioned::<Doc>(&path, "demo", "1"), Err(ArtifactError::Version { .. })));
        assert!(matches!(read_versioned::<Doc>(&path, "other", "2"), Err(ArtifactError::Format { .. })));
        fs::write(&path, "{\"format\": \"de").unwrap();
        assert!(matches!(read_versioned::<Doc>(&path, "demo", "1"), Err(ArtifactError::Format { .. })));
        assert!(matches!(
            read_versioned::<Doc>(&dir.path().join("missing.json"), "demo", "1"),
            Err(ArtifactError::Io { .. })
        ));
    }
}
