use ctgauss_core::mi::{
    duncan_mi, feedback_linear_mi, finite_bandwidth_capacity, mi_derivative_snr, mi_over_snr_monotonicity,
    sampled_mi_dyadic_sequence, MONOTONICITY_SLACK,
};
use ctgauss_core::{OuParams, SamplingGrid};
use serde::Deserialize;

use super::{core_err, Outcome};
use crate::config::Problems;
use crate::record::{Recorder, Table, Unit};

fn max_drop(values: &[f64]) -> f64 {
    values.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max)
}

fn max_rise(values: &[f64]) -> f64 {
    values.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandwidthLimit {
    pub powers: Vec<f64>,
    pub bandwidths: Vec<f64>,
}

impl BandwidthLimit {
    pub(crate) fn validate(&self) -> Problems {
        let mut p = Problems::new();
        p.positive_all("powers", &self.powers);
        p.positive_all("bandwidths", &self.bandwidths);
        if self.bandwidths.windows(2).any(|w| w[1] <= w[0]) {
            p.push("bandwidths", "must be strictly increasing");
        }
        p
    }

    pub fn run(&self) -> Outcome {
        let mut r = Recorder::default();
        let mut t = Table::new(&[
            ("P", Unit::None),
            ("W", Unit::None),
            ("capacity", Unit::NatsPerSecond),
            ("limit", Unit::NatsPerSecond),
            ("gap", Unit::NatsPerSecond),
            ("gap_bound", Unit::NatsPerSecond),
        ]);
        for &p in &self.powers {
            let mut caps = Vec::new();
            let mut sandwich = true;
            for &w in &self.bandwidths {
                let c = finite_bandwidth_capacity(p, w).map_err(core_err)?;
                let bound = p * p / (8.0 * w);
                sandwich &= c <= p / 2.0 && c >= p / 2.0 - bound;
                t.push(vec![p, w, c, p / 2.0, p / 2.0 - c, bound]);
                caps.push(c);
            }
            let last_w = *self.bandwidths.last().unwrap();
            let last = *caps.last().unwrap();
            r.metric(format!("capacity[P={p}]"), last, Unit::NatsPerSecond);
            r.holds(
                &format!("increasing[P={p}]"),
                caps.windows(2).all(|w| w[1] > w[0]),
                "capacity strictly increasing in W",
            );
            r.holds(&format!("sandwich[P={p}]"), sandwich, "P/2 - P²/(8W) <= C <= P/2 at every W");
            r.at_most(
                &format!("final_gap[P={p}]"),
                p / 2.0 - last,
                p * p / (8.0 * last_w),
                "gap to P/2 at the largest W",
            );
        }
        r.table = Some(t);
        Ok(r)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DuncanCase {
    pub rate: f64,
    pub power: f64,
    pub snr: f64,
    pub horizon: f64,
    #[serde(default)]
    pub target_rate: Option<f64>,
    #[serde(default)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DuncanRate {
    pub cases: Vec<DuncanCase>,
}

impl DuncanRate {
    pub(crate) fn validate(&self) -> Problems {
        let mut p = Problems::new();
        if self.cases.is_empty() {
            p.push("cases", "must not be empty");
        }
        for (i, c) in self.cases.iter().enumerate() {
            p.positive(&format!("cases[{i}].rate"), c.rate);
            p.nonneg(&format!("cases[{i}].power"), c.power);
            p.nonneg(&format!("cases[{i}].snr"), c.snr);
            p.positive(&format!("cases[{i}].horizon"), c.horizon);
            if c.target_rate.is_some() != c.tolerance.is_some() {
                p.push(&format!("cases[{i}]"), "target_rate and tolerance go together");
            }
            if let Some(t) = c.tolerance {
                p.nonneg(&format!("cases[{i}].tolerance"), t);
            }
        }
        p
    }

    pub fn run(&self) -> Outcome {
        let mut r = Recorder::default();
        let mut t = Table::new(&[
            ("a", Unit::None),
            ("P", Unit::None),
            ("snr", Unit::None),
            ("T", Unit::None),
            ("mi", Unit::Nats),
            ("rate", Unit::NatsPerSecond),
            ("stationary_rate", Unit::NatsPerSecond),
        ]);
        for (i, c) in self.cases.iter().enumerate() {
            let params = OuParams::new(c.rate, c.power).map_err(core_err)?;
            let est = duncan_mi(&params, c.snr, c.horizon).map_err(core_err)?;
            let stationary = 0.5 * ((c.rate * c.rate + 2.0 * c.rate * c.power * c.snr).sqrt() - c.rate);
            t.push(vec![c.rate, c.power, c.snr, c.horizon, est.value, est.rate(), stationary]);
            r.metric(format!("rate[{i}]"), est.rate(), Unit::NatsPerSecond);
            if let (Some(target), Some(tol)) = (c.target_rate, c.tolerance) {
                r.at_most(
                    &format!("target[{i}]"),
                    (est.rate() - target).abs(),
                    tol,
                    format!("|I/T - {target}| at a={}", c.rate),
                );
            }
        }
        r.table = Some(t);
        Ok(r)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConvergence {
    pub rate: f64,
    pub power: f64,
    pub snr: f64,
    pub horizon: f64,
    pub levels: Vec<u32>,
    /// Relative gap to the Duncan value allowed at the last level.
    pub tolerance: f64,
}

impl SamplingConvergence {
    pub(crate) fn validate(&self) -> Problems {
        let mut p = Problems::new();
        p.positive("rate", self.rate);
        p.nonneg("power", self.power);
        p.nonneg("snr", self.snr);
        p.positive("horizon", self.horizon);
        p.nonneg("tolerance", self.tolerance);
        if self.levels.is_empty() || self.levels.windows(2).any(|w| w[1] <= w[0]) {
            p.push("levels", "must be nonempty and strictly increasing");
        }
        if self.levels.iter().any(|&k| k > 12) {
            p.push("levels", "dense log-dets are limited to level 12");
        }
        p
    }

    pub fn run(&self) -> Outcome {
        let mut r = Recorder::default();
        let params = OuParams::new(self.rate, self.power).map_err(core_err)?;
        let seq = sampled_mi_dyadic_sequence(&params, self.snr, self.horizon, self.levels.iter().copied())
            .map_err(core_err)?;
        let d = duncan_mi(&params, self.snr, self.horizon).map_err(core_err)?.value;
        let mut t = Table::new(&[
            ("k", Unit::None),
            ("points", Unit::None),
            ("sampled_mi", Unit::Nats),
            ("duncan_mi", Unit::Nats),
            ("relative_gap", Unit::None),
        ]);
        for (k, e) in self.levels.iter().zip(&seq) {
            t.push(vec![*k as f64, e.grid_points as f64, e.value, d, (d - e.value) / d]);
        }
        let values: Vec<f64> = seq.iter().map(|e| e.value).collect();
        let last = *values.last().unwrap();
        r.metric("duncan_mi", d, Unit::Nats);
        r.metric("sampled_mi", last, Unit::Nats);
        r.at_most("nondecreasing", max_drop(&values), 1e-9, "largest decrease between levels");
        r.at_most(
            "final_relative_gap",
            (d - last).abs() / d,
            self.tolerance,
            "relative gap to Duncan at the last level",
        );
        r.table = Some(t);
        Ok(r)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackMi {
    pub power: f64,
    pub var0: f64,
    pub horizon: f64,
    pub levels: Vec<u32>,
    pub tolerance: f64,
}

impl FeedbackMi {
    pub(crate) fn validate(&self) -> Problems {
        let mut p = Problems::new();
        p.positive("power", self.power);
        p.positive("var0", self.var0);
        p.positive("horizon", self.horizon);
        p.nonneg("tolerance", self.tolerance);
        if self.levels.is_empty() || self.levels.windows(2).any(|w| w[1] <= w[0]) {
            p.push("levels", "must be nonempty and strictly increasing");
        }
        if self.levels.iter().any(|&k| k > 24) {
            p.push("levels", "must be <= 24");
        }
        p
    }

    pub fn run(&self) -> Outcome {
        let mut r = Recorder::default();
        let target = self.power * self.horizon / 2.0;
        let mut t = Table::new(&[("k", Unit::None), ("mi", Unit::Nats), ("limit", Unit::Nats)]);
        let mut values = Vec::new();
        for &k in &self.levels {
            let g = SamplingGrid::dyadic(self.horizon, k).map_err(core_err)?;
            let v = feedback_linear_mi(self.power, self.var0, self.horizon, Some(&g)).map_err(core_err)?.value;
            t.push(vec![k as f64, v, target]);
            values.push(v);
        }
        let last = *values.last().unwrap();
        r.metric("mi", last, Unit::Nats);
        r.metric("limit", target, Unit::Nats);
        r.at_most("nondecreasing", max_drop(&values), 1e-12, "largest decrease between levels");
        r.at_most("final_relative_gap", (last - target).abs() / target, self.tolerance, "relative gap to PT/2");
        r.table = Some(t);
        Ok(r)
    }
}

fn default_step() -> f64 {
    1e-4
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnrMonotonicity {
    pub rate: f64,
    pub power: f64,
    pub horizon: f64,
    pub snrs: Vec<f64>,
    #[serde(default)]
    pub derivative_snrs: Vec<f64>,
    /// Central-difference step as a fraction of snr.
    #[serde(default = "default_step")]
    pub step_fraction: f64,
    #[serde(default)]
    pub derivative_tolerance: Option<f64>,
}

impl SnrMonotonicity {
    pub(crate) fn validate(&self) -> Problems {
        let mut p = Problems::new();
        p.positive("rate", self.rate);
        p.nonneg("power", self.power);
        p.positive("horizon", self.horizon);
        p.positive_all("snrs", &self.snrs);
        if self.snrs.windows(2).any(|w| w[1] <= w[0]) {
            p.push("snrs", "must be strictly increasing");
        }
        for (i, &s) in self.derivative_snrs.iter().enumerate() {
            p.positive(&format!("derivative_snrs[{i}]"), s);
        }
        if !(self.step_fraction > 0.0 && self.step_fraction < 0.5) {
            p.push("step_fraction", "must lie in (0, 0.5)");
        }
        if self.derivative_snrs.is_empty() != self.derivative_tolerance.is_none() {
            p.push("derivative_tolerance", "required exactly when derivative_snrs is given");
        }
        p
    }

    pub fn run(&self) -> Outcome {
        let mut r = Recorder::default();
        let params = OuParams::new(self.rate, self.power).map_err(core_err)?;
        let m = mi_over_snr_monotonicity(&params, &self.snrs, self.horizon).map_err(core_err)?;
        let mut t = Table::new(&[("snr", Unit::None), ("mi", Unit::Nats), ("mi_over_snr", Unit::Nats)]);
        for &(s, i, q) in &m.table {
            t.push(vec![s, i, q]);
        }
        let ratios: Vec<f64> = m.table.iter().map(|row| row.2).collect();
        r.at_most("nonincreasing", max_rise(&ratios), MONOTONICITY_SLACK, "largest increase of I/snr");
        if let Some(tol) = self.derivative_tolerance {
            let mut worst: f64 = 0.0;
            for (i, &s) in self.derivative_snrs.iter().enumerate() {
                let h = self.step_fraction * s;
                let up = duncan_mi(&params, s + h, self.horizon).map_err(core_err)?.value;
                let down = duncan_mi(&params, s - h, self.horizon).map_err(core_err)?.value;
                let fd = (up - down) / (2.0 * h);
                let d = mi_derivative_snr(&params, s, self.horizon).map_err(core_err)?;
                r.metric(format!("derivative[{i}]"), d, Unit::Nats);
                worst = worst.max((d - fd).abs() / fd.abs());
            }
            r.at_most("derivative", worst, tol, "relative gap of dI/dsnr to central differences");
        }
        r.table = Some(t);
        Ok(r)
    }
}
