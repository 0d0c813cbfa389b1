//! Experiment results and their unit handling.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::Kind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Unit {
    Nats,
    NatsPerSecond,
    Bits,
    BitsPerSecond,
    /// Powers, times, counts, fractions and other non-information values.
    None,
}

impl Unit {
    fn to_bits(self) -> (Unit, f64) {
        match self {
            Unit::Nats => (Unit::Bits, 1.0 / LN_2),
            Unit::NatsPerSecond => (Unit::BitsPerSecond, 1.0 / LN_2),
            u => (u, 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub value: f64,
    pub unit: Unit,
}

/// A declared check and its outcome. `tolerance` is the bound the value
/// was compared against, when the check has one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub unit: Unit,
}

/// Plot-ready rows, one value per column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[(&str, Unit)]) -> Self {
        Self {
            columns: columns.iter().map(|(n, u)| Column { name: n.to_string(), unit: *u }).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c.name == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// CSV with a header row and a trailing `units` column naming the
    /// information unit of the file.
    pub fn to_csv(&self, units: &str) -> String {
        let mut out = String::new();
        let names: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        out.push_str(&names.join(","));
        out.push_str(",units\n");
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format_number(*v)).collect();
            out.push_str(&cells.join(","));
            out.push(',');
            out.push_str(units);
            out.push('\n');
        }
        out
    }
}

/// Shortest round-trip decimal form; `.` separator, no locale.
pub fn format_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:?}")
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub id: String,
    pub kind: Kind,
    pub schema_version: u32,
    pub seed: u64,
    /// `"nats"` or `"bits"`.
    pub units: String,
    pub params: Value,
    pub metrics: BTreeMap<String, Metric>,
    pub verdicts: Vec<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<Table>,
    /// Extra JSON artifact (a region document), written next to the record.
    #[serde(skip)]
    pub artifact: Option<String>,
    /// Not serialized: outputs must be byte-identical across runs.
    #[serde(skip)]
    pub wall_clock_seconds: f64,
}

impl ResultRecord {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).map(|m| m.value)
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    /// Re-expresses every information quantity in bits. Verdicts are
    /// decided before conversion and keep their nat values.
    pub fn into_bits(mut self) -> Self {
        if self.units == "bits" {
            return self;
        }
        for m in self.metrics.values_mut() {
            let (u, f) = m.unit.to_bits();
            m.unit = u;
            m.value *= f;
        }
        if let Some(t) = &mut self.table {
            for (i, c) in t.columns.iter_mut().enumerate() {
                let (u, f) = c.unit.to_bits();
                c.unit = u;
                if f != 1.0 {
                    for r in &mut t.rows {
                        r[i] *= f;
                    }
                }
            }
        }
        self.units = "bits".into();
        self
    }
}

/// Collects metrics and verdicts while a kind runs.
#[derive(Debug, Default)]
pub struct Recorder {
    pub metrics: BTreeMap<String, Metric>,
    pub verdicts: Vec<Verdict>,
    pub table: Option<Table>,
    pub artifact: Option<String>,
}

impl Recorder {
    pub fn metric(&mut self, name: impl Into<String>, value: f64, unit: Unit) {
        self.metrics.insert(name.into(), Metric { value, unit });
    }

    /// Passes when `value <= tolerance`.
    pub fn at_most(&mut self, name: &str, value: f64, tolerance: f64, detail: impl Into<String>) {
        self.verdicts.push(Verdict {
            name: name.into(),
            passed: value <= tolerance,
            value,
            tolerance: Some(tolerance),
            detail: detail.into(),
        });
    }

    /// Passes when `value >= threshold`.
    pub fn at_least(&mut self, name: &str, value: f64, threshold: f64, detail: impl Into<String>) {
        self.verdicts.push(Verdict {
            name: name.into(),
            passed: value >= threshold,
            value,
            tolerance: Some(threshold),
            detail: detail.into(),
        });
    }

    pub fn holds(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.verdicts.push(Verdict {
            name: name.into(),
            passed,
            value: f64::from(u8::from(passed)),
            tolerance: None,
            detail: detail.into(),
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&[("W", Unit::None), ("capacity", Unit::NatsPerSecond)]);
        t.push(vec![1.0, 0.5]);
        t.push(vec![10.0, 1e-7]);
        assert_eq!(t.to_csv("nats"), "W,capacity,units\n1.0,0.5,nats\n10.0,1e-7,nats\n");
    }

    #[test]
    fn bits_conversion_touches_information_only() {
        let mut r = Recorder::default();
        r.metric("mi", LN_2, Unit::Nats);
        r.metric("power", 2.0, Unit::None);
        let mut t = Table::new(&[("T", Unit::None), ("rate", Unit::NatsPerSecond)]);
        t.push(vec![4.0, 2.0 * LN_2]);
        let rec = ResultRecord {
            id: "x".into(),
            kind: Kind::DuncanRate,
            schema_version: 1,
            seed: 0,
            units: "nats".into(),
            params: Value::Null,
            metrics: r.metrics,
            verdicts: vec![],
            table: Some(t),
            artifact: None,
            wall_clock_seconds: 0.0,
        }
        .into_bits();
        assert!((rec.metric("mi").unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(rec.metric("power"), Some(2.0));
        let t = rec.table.unwrap();
        assert_eq!(t.rows[0][0], 4.0);
        assert!((t.rows[0][1] - 2.0).abs() < 1e-15);
        assert_eq!(t.columns[1].unit, Unit::BitsPerSecond);
    }
}
