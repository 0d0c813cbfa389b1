//! Suites: lists of config files run in order into one output directory.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, SCHEMA_VERSION};
use crate::output::{write_atomic, write_record};
use crate::record::ResultRecord;
use crate::{exit, kinds, CliError};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteEntry {
    /// Acceptance criterion the entry belongs to, if any.
    #[serde(default)]
    pub criterion: Option<u32>,
    /// Config path relative to the suite file.
    pub config: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    pub schema_version: u32,
    pub experiments: Vec<SuiteEntry>,
}

pub struct EntryOutcome {
    pub criterion: Option<u32>,
    pub config: PathBuf,
    pub result: Result<ResultRecord, CliError>,
}

impl EntryOutcome {
    pub fn status(&self) -> &'static str {
        match &self.result {
            Ok(r) if r.passed() => "pass",
            Ok(_) => "fail",
            Err(CliError::Numerical(_)) => "numerical-error",
            Err(_) => "validation-error",
        }
    }
}

pub struct SuiteReport {
    pub entries: Vec<EntryOutcome>,
}

impl SuiteReport {
    /// Validation beats numerical beats tolerance failures.
    pub fn exit_code(&self) -> u8 {
        let statuses: Vec<&str> = self.entries.iter().map(EntryOutcome::status).collect();
        if statuses.contains(&"validation-error") {
            exit::VALIDATION
        } else if statuses.contains(&"numerical-error") {
            exit::NUMERICAL
        } else if statuses.contains(&"fail") {
            exit::TOLERANCE
        } else {
            exit::SUCCESS
        }
    }

    pub fn records(&self) -> impl Iterator<Item = &ResultRecord> {
        self.entries.iter().filter_map(|e| e.result.as_ref().ok())
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from("criterion,id,kind,status,failed\n");
        for e in &self.entries {
            let crit = e.criterion.map(|c| c.to_string()).unwrap_or_default();
            let (id, kind, failed) = match &e.result {
                Ok(r) => {
                    let f: Vec<&str> = r.verdicts.iter().filter(|v| !v.passed).map(|v| v.name.as_str()).collect();
                    (r.id.clone(), r.kind.to_string(), f.join(";"))
                }
                Err(_) => (e.config.display().to_string(), String::new(), String::new()),
            };
            s.push_str(&format!("{crit},{id},{kind},{},{failed}\n", e.status()));
        }
        s
    }
}

pub fn load_suite(path: &Path) -> Result<Suite, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let suite: Suite = serde_json::from_str(&text).map_err(|e| CliError::Validation(vec![format!("suite: {e}")]))?;
    if suite.schema_version != SCHEMA_VERSION {
        return Err(CliError::Validation(vec![format!(
            "suite.schema_version: unsupported version {}, expected {SCHEMA_VERSION}",
            suite.schema_version
        )]));
    }
    Ok(suite)
}

/// Runs every entry, writing each record and `summary.csv` into `out_dir`.
/// Entry failures are reported, not propagated; only problems with the
/// suite itself or the output directory are errors.
pub fn run_suite(path: &Path, out_dir: &Path, bits: bool) -> Result<SuiteReport, CliError> {
    let suite = load_suite(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let configs: Vec<(Option<u32>, PathBuf, Result<ExperimentConfig, CliError>)> = suite
        .experiments
        .iter()
        .map(|e| {
            let p = base.join(&e.config);
            let c = ExperimentConfig::load(&p);
            (e.criterion, p, c)
        })
        .collect();
    let mut ids = BTreeSet::new();
    for (_, p, c) in &configs {
        if let Ok(c) = c {
            if !ids.insert(c.id.clone()) {
                return Err(CliError::Validation(vec![format!(
                    "suite: duplicate experiment id `{}` ({})",
                    c.id,
                    p.display()
                )]));
            }
        }
    }
    let mut entries = Vec::new();
    for (criterion, p, c) in configs {
        let result = c.and_then(|c| kinds::run(&c)).map(|r| if bits { r.into_bits() } else { r });
        if let Ok(r) = &result {
            write_record(r, out_dir)?;
            eprintln!("{} {:.2}s {}", r.id, r.wall_clock_seconds, if r.passed() { "pass" } else { "FAIL" });
        }
        entries.push(EntryOutcome { criterion, config: p, result });
    }
    let report = SuiteReport { entries };
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    write_atomic(&out_dir.join("summary.csv"), &report.summary_csv())?;
    Ok(report)
}
