//! Experiment configuration documents.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    BandwidthLimit,
    DuncanRate,
    SamplingConvergence,
    FeedbackMi,
    SnrMonotonicity,
    Region,
    RegionLimit,
    MacCoding,
    IcCoding,
    BcCoding,
    TypicalityStability,
}

impl Kind {
    pub const ALL: [Kind; 11] = [
        Kind::BandwidthLimit,
        Kind::DuncanRate,
        Kind::SamplingConvergence,
        Kind::FeedbackMi,
        Kind::SnrMonotonicity,
        Kind::Region,
        Kind::RegionLimit,
        Kind::MacCoding,
        Kind::IcCoding,
        Kind::BcCoding,
        Kind::TypicalityStability,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::BandwidthLimit => "bandwidth-limit",
            Kind::DuncanRate => "duncan-rate",
            Kind::SamplingConvergence => "sampling-convergence",
            Kind::FeedbackMi => "feedback-mi",
            Kind::SnrMonotonicity => "snr-monotonicity",
            Kind::Region => "region",
            Kind::RegionLimit => "region-limit",
            Kind::MacCoding => "mac-coding",
            Kind::IcCoding => "ic-coding",
            Kind::BcCoding => "bc-coding",
            Kind::TypicalityStability => "typicality-stability",
        }
    }

    pub fn parse(s: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A parsed configuration. `params` stays untyped here; each kind
/// deserializes its own parameter struct.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub kind: Kind,
    pub id: String,
    pub seed: u64,
    pub params: Value,
    /// Directory of the config file, for resolving relative paths inside
    /// `params`.
    pub base_dir: PathBuf,
}

const TOP_LEVEL_FIELDS: [&str; 5] = ["schema_version", "kind", "id", "seed", "params"];

impl ExperimentConfig {
    /// Parses a document, collecting every top-level problem.
    pub fn from_value(doc: &Value, default_id: &str, base_dir: &Path) -> Result<Self, CliError> {
        let mut problems = Vec::new();
        let Some(obj) = doc.as_object() else {
            return Err(CliError::Validation(vec!["config: must be a JSON object".into()]));
        };
        for key in obj.keys() {
            if !TOP_LEVEL_FIELDS.contains(&key.as_str()) {
                problems.push(format!("{key}: unknown field"));
            }
        }
        let schema_version = match obj.get("schema_version").and_then(Value::as_u64) {
            Some(v) if v == SCHEMA_VERSION as u64 => v as u32,
            Some(v) => {
                problems.push(format!("schema_version: unsupported version {v}, expected {SCHEMA_VERSION}"));
                0
            }
            None => {
                problems.push("schema_version: required integer".into());
                0
            }
        };
        let kind = match obj.get("kind").and_then(Value::as_str) {
            Some(s) => Kind::parse(s).or_else(|| {
                problems.push(format!("kind: unknown experiment kind `{s}`"));
                None
            }),
            None => {
                problems.push("kind: required string".into());
                None
            }
        };
        let seed = match obj.get("seed") {
            None => 0,
            Some(v) => v.as_u64().unwrap_or_else(|| {
                problems.push("seed: must be a nonnegative integer".into());
                0
            }),
        };
        let id = match obj.get("id") {
            None => default_id.to_string(),
            Some(v) => match v.as_str() {
                Some(s) if valid_id(s) => s.to_string(),
                _ => {
                    problems.push("id: must be a nonempty string of letters, digits, '-' or '_'".into());
                    String::new()
                }
            },
        };
        let params = obj.get("params").cloned().unwrap_or(Value::Object(Default::default()));
        if !params.is_object() {
            problems.push("params: must be a JSON object".into());
        }
        match (problems.is_empty(), kind) {
            (true, Some(kind)) => Ok(Self { schema_version, kind, id, seed, params, base_dir: base_dir.to_path_buf() }),
            _ => Err(CliError::Validation(problems)),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let doc: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(vec![format!("config: not valid JSON ({e})")]))?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("experiment");
        let id = if valid_id(stem) { stem } else { "experiment" };
        Self::from_value(&doc, id, path.parent().unwrap_or(Path::new(".")))
    }

    /// Typed parameters for this kind.
    pub fn params<T: DeserializeOwned>(&self) -> Result<T, Vec<String>> {
        serde_json::from_value(self.params.clone()).map_err(|e| vec![format!("params: {e}")])
    }

    pub fn resolve(&self, relative: &str) -> PathBuf {
        self.base_dir.join(relative)
    }
}

fn valid_id(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

/// Field-level checks shared by the kinds. Each pushes at most one message.
pub(crate) struct Problems(pub Vec<String>);

impl Problems {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    pub fn push(&mut self, field: &str, reason: impl fmt::Display) {
        self.0.push(format!("params.{field}: {reason}"));
    }

    pub fn positive(&mut self, field: &str, v: f64) {
        if !(v > 0.0) || !v.is_finite() {
            self.push(field, format!("must be finite and > 0, got {v}"));
        }
    }

    pub fn nonneg(&mut self, field: &str, v: f64) {
        if !(v >= 0.0) || !v.is_finite() {
            self.push(field, format!("must be finite and >= 0, got {v}"));
        }
    }

    pub fn positive_all(&mut self, field: &str, vs: &[f64]) {
        if vs.is_empty() {
            self.push(field, "must not be empty");
        }
        for (i, &v) in vs.iter().enumerate() {
            self.positive(&format!("{field}[{i}]"), v);
        }
    }

    pub fn nonneg_all(&mut self, field: &str, vs: &[f64]) {
        if vs.is_empty() {
            self.push(field, "must not be empty");
        }
        for (i, &v) in vs.iter().enumerate() {
            self.nonneg(&format!("{field}[{i}]"), v);
        }
    }

    pub fn extend_core(&mut self, prefix: &str, problems: Vec<String>) {
        self.0.extend(problems.into_iter().map(|p| format!("params.{prefix}{p}")));
    }

    /// Like `extend_core`, tagging each problem with where it arose.
    pub fn extend_core_at(&mut self, prefix: &str, problems: Vec<String>, context: &str) {
        self.0.extend(problems.into_iter().map(|p| format!("params.{prefix}{p} ({context})")));
    }

    pub fn finish(self) -> Result<(), Vec<String>> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(self.0)
        }
    }
}
