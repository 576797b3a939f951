//! Trained transliteration models and their JSON file format.
//!
//! ```json
//! {"direction":"cyr2lat","format_version":1,
//!  "root":{"e":{...},"f":2,"s":"ц","t":{"counts":{"s":3},"leaf":"s"}},
//!  "table_fingerprint":"9f2c...","window":{"x":2,"y":3}}
//! ```
//!
//! Split nodes carry `f` (feature index), `s` (symbol, PAD as `∅-PAD`),
//! `t` (subtree for an equal feature) and `e` (subtree otherwise). Leaves
//! carry `leaf` (prediction) and `counts`. Object keys are written sorted,
//! so identical models serialize to identical bytes.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Deserialize;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::dtree::{DecisionTree, TreeError, TreeNode};
use crate::featurizer::{Symbol, WindowSpec};
use crate::scripts::Direction;

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model format version {found} is not supported (this build reads version {supported})")]
    VersionMismatch { found: u64, supported: u64 },
    #[error("corrupt model file: {0}")]
    Corrupt(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn corrupt(msg: impl Into<String>) -> ModelError {
    ModelError::Corrupt(msg.into())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslitModel {
    pub tree: DecisionTree,
    pub window: WindowSpec,
    pub direction: Direction,
    pub table_fingerprint: String,
    pub format_version: u64,
}

impl TranslitModel {
    pub fn new(tree: DecisionTree, window: WindowSpec, direction: Direction, table_fingerprint: String) -> Self {
        TranslitModel { tree, window, direction, table_fingerprint, format_version: FORMAT_VERSION }
    }

    pub fn predict(&self, features: &[Symbol]) -> Result<&str, TreeError> {
        self.tree.predict(features)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "format_version": self.format_version,
            "direction": self.direction.as_str(),
            "window": { "x": self.window.x, "y": self.window.y },
            "table_fingerprint": self.table_fingerprint,
            "root": node_to_json(&self.tree.root),
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec(&self.to_json()).expect("model JSON");
        out.push(b'\n');
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<TranslitModel, ModelError> {
        let mut de = serde_json::Deserializer::from_slice(bytes);
        de.disable_recursion_limit();
        let value = Value::deserialize(&mut de).map_err(|e| corrupt(e.to_string()))?;
        de.end().map_err(|e| corrupt(e.to_string()))?;
        Self::from_json(&value)
    }

    pub fn from_json(value: &Value) -> Result<TranslitModel, ModelError> {
        let obj = value.as_object().ok_or_else(|| corrupt("top level is not an object"))?;
        let version =
            obj.get("format_version").and_then(Value::as_u64).ok_or_else(|| corrupt("missing format_version"))?;
        if version != FORMAT_VERSION {
            return Err(ModelError::VersionMismatch { found: version, supported: FORMAT_VERSION });
        }
        let direction = obj
            .get("direction")
            .and_then(Value::as_str)
            .ok_or_else(|| corrupt("missing direction"))?
            .parse::<Direction>()
            .map_err(corrupt)?;
        let window = obj.get("window").ok_or_else(|| corrupt("missing window"))?;
        let coord = |k: &str| {
            window
                .get(k)
                .and_then(Value::as_u64)
                .map(|v| v as usize)
                .ok_or_else(|| corrupt(format!("missing window.{k}")))
        };
        let window = WindowSpec::new(coord("x")?, coord("y")?).map_err(|e| corrupt(e.to_string()))?;
        let table_fingerprint = obj
            .get("table_fingerprint")
            .and_then(Value::as_str)
            .ok_or_else(|| corrupt("missing table_fingerprint"))?
            .to_string();
        let root = node_from_json(obj.get("root").ok_or_else(|| corrupt("missing root"))?)?;
        if root.max_feature().is_some_and(|f| f >= window.width()) {
            return Err(corrupt("split feature index exceeds window width"));
        }
        Ok(TranslitModel {
            tree: DecisionTree { root, width: window.width() },
            window,
            direction,
            table_fingerprint,
            format_version: version,
        })
    }

    /// Writes through a temporary file in the target directory, then renames.
    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        write_atomic(path, &self.to_bytes())
            .map_err(|source| ModelError::Io { path: path.display().to_string(), source })
    }

    pub fn load(path: &Path) -> Result<TranslitModel, ModelError> {
        let bytes =
            std::fs::read(path).map_err(|source| ModelError::Io { path: path.display().to_string(), source })?;
        Self::from_bytes(&bytes)
    }
}

/// Replaces `path` with `bytes` via temp file + rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn node_to_json(node: &TreeNode) -> Value {
    match node {
        TreeNode::Leaf { counts, prediction } => {
            let counts: Map<String, Value> = counts.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
            json!({ "leaf": prediction, "counts": counts })
        }
        TreeNode::Split { feature, symbol, equal, otherwise } => json!({
            "f": feature,
            "s": symbol.encode(),
            "t": node_to_json(equal),
            "e": node_to_json(otherwise),
        }),
    }
}

fn node_from_json(value: &Value) -> Result<TreeNode, ModelError> {
    let obj = value.as_object().ok_or_else(|| corrupt("node is not an object"))?;
    if let Some(leaf) = obj.get("leaf") {
        let prediction = leaf.as_str().ok_or_else(|| corrupt("leaf label is not a string"))?.to_string();
        let counts = obj
            .get("counts")
            .and_then(Value::as_object)
            .ok_or_else(|| corrupt("leaf without counts"))?
            .iter()
            .map(|(k, v)| v.as_u64().map(|n| (k.clone(), n as usize)).ok_or_else(|| corrupt("count is not an integer")))
            .collect::<Result<BTreeMap<_, _>, _>>()?;
        return Ok(TreeNode::Leaf { counts, prediction });
    }
    let feature = obj.get("f").and_then(Value::as_u64).ok_or_else(|| corrupt("split without f"))? as usize;
    let symbol = obj
        .get("s")
        .and_then(Value::as_str)
        .and_then(Symbol::decode)
        .ok_or_else(|| corrupt("split without a valid symbol"))?;
    let equal = node_from_json(obj.get("t").ok_or_else(|| corrupt("split without t"))?)?;
    let otherwise = node_from_json(obj.get("e").ok_or_else(|| corrupt("split without e"))?)?;
    Ok(TreeNode::Split { feature, symbol, equal: Box::new(equal), otherwise: Box::new(otherwise) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featurizer::Sample;

    fn toy_model() -> TranslitModel {
        let samples: Vec<Sample> = [("∅а", "a"), ("аб", "b"), ("бв", ""), ("вг", "g")]
            .iter()
            .map(|(f, l)| Sample {
                features: f.chars().map(|c| if c == '∅' { Symbol::Pad } else { Symbol::Char(c) }).collect(),
                label: l.to_string(),
            })
            .collect();
        let tree = DecisionTree::fit(&samples).unwrap();
        TranslitModel::new(tree, WindowSpec::new(1, 0).unwrap(), Direction::CyrToLat, "abc".into())
    }

    #[test]
    fn round_trip() {
        let m = toy_model();
        let bytes = m.to_bytes();
        let back = TranslitModel::from_bytes(&bytes).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_bytes(), bytes);
        assert!(String::from_utf8(bytes).unwrap().contains("∅-PAD"));
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let bytes = toy_model().to_bytes();
        let err = TranslitModel::from_bytes(&bytes[..bytes.len() / 2]).unwrap_err();
        assert!(matches!(err, ModelError::Corrupt(_)), "{err}");
    }

    #[test]
    fn future_version_is_rejected() {
        let mut v = toy_model().to_json();
        v["format_version"] = json!(FORMAT_VERSION + 1);
        let err = TranslitModel::from_bytes(v.to_string().as_bytes()).unwrap_err();
        assert!(matches!(err, ModelError::VersionMismatch { found: 2, supported: 1 }), "{err}");
    }

    #[test]
    fn structural_damage_is_corrupt() {
        let mut v = toy_model().to_json();
        v["root"] = json!({"f": 0, "s": "ab", "t": {}, "e": {}});
        assert!(matches!(TranslitModel::from_json(&v), Err(ModelError::Corrupt(_))));
        let mut v = toy_model().to_json();
        v["root"] = json!({"f": 9, "s": "a", "t": {"leaf": "", "counts": {}}, "e": {"leaf": "", "counts": {}}});
        assert!(matches!(TranslitModel::from_json(&v), Err(ModelError::Corrupt(_))));
        let mut v = toy_model().to_json();
        v["direction"] = json!("lat2greek");
        assert!(matches!(TranslitModel::from_json(&v), Err(ModelError::Corrupt(_))));
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let m = toy_model();
        m.save(&path).unwrap();
        assert_eq!(TranslitModel::load(&path).unwrap(), m);
        assert!(matches!(TranslitModel::load(&dir.path().join("nope.json")), Err(ModelError::Io { .. })));
    }
}
