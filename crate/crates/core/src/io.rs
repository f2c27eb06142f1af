//! Scene documents: a versioned, strict JSON rendering of [`Scene`].

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::model::{validate_scene, Scene, Violation};

pub const SCENE_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDocument {
    pub version: u32,
    pub scene: Scene,
}

/// Every violation of a parsed but invalid scene.
#[derive(Clone, Debug, PartialEq)]
pub struct Violations(pub Vec<Violation>);

impl fmt::Display for Violations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str("; ")?;
            }
            write!(f, "scene.{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SceneError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("schema error at `{path}` (line {line}, column {column}): {message}")]
    Schema {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported scene document version {found} (expected {SCENE_SCHEMA_VERSION})")]
    Version { found: u32 },
    #[error("invalid scene: {0}")]
    Invalid(Violations),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Parses and validates a scene document.
pub fn parse_scene(text: &str) -> Result<Scene, SceneError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let doc: SceneDocument = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let (line, column) = (inner.line(), inner.column());
        if inner.is_syntax() || inner.is_eof() {
            SceneError::Syntax {
                line,
                column,
                message: inner.to_string(),
            }
        } else {
            SceneError::Schema {
                path,
                line,
                column,
                message: inner.to_string(),
            }
        }
    })?;
    de.end().map_err(|e| SceneError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if doc.version != SCENE_SCHEMA_VERSION {
        return Err(SceneError::Version { found: doc.version });
    }
    let violations = validate_scene(&doc.scene);
    if !violations.is_empty() {
        return Err(SceneError::Invalid(Violations(violations)));
    }
    Ok(doc.scene)
}

/// Pretty-printed document; floats round-trip exactly.
pub fn render_scene(scene: &Scene) -> String {
    #[derive(Serialize)]
    struct Doc<'a> {
        version: u32,
        scene: &'a Scene,
    }
    let mut s = serde_json::to_string_pretty(&Doc {
        version: SCENE_SCHEMA_VERSION,
        scene,
    })
    .expect("scenes always serialize");
    s.push('\n');
    s
}

pub fn load_scene(path: &Path) -> Result<Scene, SceneError> {
    let text = fs::read_to_string(path).map_err(|source| SceneError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_scene(&text)
}

pub fn save_scene(path: &Path, scene: &Scene) -> Result<(), SceneError> {
    fs::write(path, render_scene(scene)).map_err(|source| SceneError::Io {
        path: path.to_owned(),
        source,
    })
}
