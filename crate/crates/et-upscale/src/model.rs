//! Model and feature-schema JSON files.
//!
//! A model file wraps the ensemble with a format tag and version. Trees are
//! flat node arrays (node 0 is the root, children referenced by index), so
//! deep leaf-wise trees do not hit JSON nesting limits. Floats use
//! shortest round-trip decimals and reload bit-exactly.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use et_upscale_core::features::FeatureSchema;
use et_upscale_core::gbdt::{Ensemble, Node};
use serde::{Deserialize, Serialize};

use crate::ingest::write_file;

pub const MODEL_FORMAT: &str = "et-upscale-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: malformed model: {message}")]
    Malformed { path: PathBuf, message: String },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    version: u32,
    ensemble: Ensemble,
}

fn malformed(path: &Path, message: impl Into<String>) -> ModelError {
    ModelError::Malformed { path: path.into(), message: message.into() }
}

pub fn model_to_json(model: &Ensemble) -> String {
    let file = ModelFile { format: MODEL_FORMAT.into(), version: MODEL_VERSION, ensemble: model.clone() };
    serde_json::to_string_pretty(&file).expect("model serializes")
}

/// Structural checks: node references in range and acyclic, features
/// inside the schema, finite leaf values.
pub fn check_model(model: &Ensemble) -> Result<(), String> {
    model.schema.validate().map_err(|e| e.to_string())?;
    model.config.validate().map_err(|e| e.to_string())?;
    if !model.base_score.is_finite() {
        return Err("base score must be finite".into());
    }
    let p = model.schema.len();
    for (t, tree) in model.trees.iter().enumerate() {
        let n = tree.nodes.len();
        if n == 0 {
            return Err(format!("tree {t} has no nodes"));
        }
        let mut parents = vec![0u32; n];
        for (i, node) in tree.nodes.iter().enumerate() {
            match *node {
                Node::Leaf { value } if !value.is_finite() => return Err(format!("tree {t} node {i}: non-finite leaf")),
                Node::Leaf { .. } => {}
                Node::Split { feature, threshold, left, right, .. } => {
                    if feature as usize >= p {
                        return Err(format!("tree {t} node {i}: feature {feature} outside schema of {p}"));
                    }
                    if threshold.is_nan() {
                        return Err(format!("tree {t} node {i}: NaN threshold"));
                    }
                    for c in [left, right] {
                        // children must come after their parent, which rules out cycles
                        if c as usize >= n || c as usize <= i {
                            return Err(format!("tree {t} node {i}: bad child {c}"));
                        }
                        parents[c as usize] += 1;
                    }
                }
            }
        }
        if parents[0] != 0 || parents[1..].iter().any(|&c| c != 1) {
            return Err(format!("tree {t}: nodes are not a single tree"));
        }
    }
    Ok(())
}

pub fn model_from_json(text: &str) -> Result<Ensemble, String> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
    if file.format != MODEL_FORMAT {
        return Err(format!("unknown format {:?}", file.format));
    }
    if file.version != MODEL_VERSION {
        return Err(format!("unsupported version {} (expected {MODEL_VERSION})", file.version));
    }
    check_model(&file.ensemble)?;
    Ok(file.ensemble)
}

pub fn save_model(model: &Ensemble, path: &Path) -> Result<(), ModelError> {
    write_file(path, model_to_json(model).as_bytes()).map_err(|e| ModelError::Io { path: path.into(), source: e })
}

pub fn load_model(path: &Path) -> Result<Ensemble, ModelError> {
    let text = fs::read_to_string(path).map_err(|e| ModelError::Io { path: path.into(), source: e })?;
    model_from_json(&text).map_err(|m| malformed(path, m))
}

/// `model.json` → `model.schema.json`.
pub fn schema_sidecar_path(model_path: &Path) -> PathBuf {
    model_path.with_extension("schema.json")
}

pub fn save_schema(schema: &FeatureSchema, path: &Path) -> Result<(), ModelError> {
    let text = serde_json::to_string_pretty(schema).expect("schema serializes");
    write_file(path, text.as_bytes()).map_err(|e| ModelError::Io { path: path.into(), source: e })
}

pub fn load_schema(path: &Path) -> Result<FeatureSchema, ModelError> {
    let text = fs::read_to_string(path).map_err(|e| ModelError::Io { path: path.into(), source: e })?;
    let schema: FeatureSchema = serde_json::from_str(&text).map_err(|e| malformed(path, e.to_string()))?;
    schema.validate().map_err(|e| malformed(path, e.to_string()))?;
    Ok(schema)
}
