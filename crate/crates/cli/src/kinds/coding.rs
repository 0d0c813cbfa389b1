use std::sync::Arc;

use ctgauss_core::coding::{
    bc_composite_power, bc_power_sharing_rates, bc_time_sharing_user_mi, ic_treat_as_noise_experiment,
    ic_treat_as_noise_rates, mac_error_experiment, typicality_fraction, ErrorStats, IcExperimentConfig,
    MacExperimentConfig, DEFAULT_CODEBOOK_GUARD,
};
use ctgauss_core::mi::{duncan_mi, two_user_mi, OuInput};
use ctgauss_core::{OuParams, RngSeed, SamplingGrid};
use serde::Deserialize;

use super::{core_err, Outcome};
use crate::config::Problems;
use crate::record::{Recorder, Table, Unit};

fn unit_gains() -> [f64; 2] {
    [1.0, 1.0]
}

fn guard() -> u64 {
    DEFAULT_CODEBOOK_GUARD
}

fn dyadic(horizon: f64, level: u32) -> Result<Arc<SamplingGrid>, crate::CliError> {
    Ok(Arc::new(SamplingGrid::dyadic(horizon, level).map_err(core_err)?))
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn stats_columns() -> Table {
    Table::new(&[
        ("T", Unit::None),
        ("rate1", Unit::NatsPerSecond),
        ("rate2", Unit::NatsPerSecond),
        ("trials", Unit::None),
        ("errors", Unit::None),
        ("violations", Unit::None),
        ("bound_value", Unit::None),
        ("seed", Unit::None),
        ("error_rate", Unit::None),
        ("true_pair_atypical", Unit::None),
        ("wrong_first", Unit::None),
        ("wrong_second", Unit::None),
        ("wrong_both", Unit::None),
        ("epsilon", Unit::NatsPerSecond),
    ])
}

fn stats_row(t: f64, rates: [f64; 2], s: &ErrorStats, seed: u64) -> Vec<f64> {
    vec![
        t,
        rates[0],
        rates[1],
        s.trials as f64,
        s.errors as f64,
        s.power_violations as f64,
        s.union_bound,
        seed as f64,
        s.error_rate(),
        s.true_pair_atypical as f64,
        s.classes.wrong_first as f64,
        s.classes.wrong_second as f64,
        s.classes.wrong_both as f64,
        s.epsilon,
    ]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverCapacity {
    pub rates: [f64; 2],
    pub horizon: f64,
    #[serde(default = "guard")]
    pub max_codebook: u64,
    pub min_error_rate: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MacTrials {
    pub ou_rate: f64,
    pub codeword_powers: [f64; 2],
    pub power_budgets: [f64; 2],
    #[serde(default = "unit_gains")]
    pub gains: [f64; 2],
    pub rates: [f64; 2],
    pub horizons: Vec<f64>,
    pub level: u32,
    pub trials: usize,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default = "guard")]
    pub max_codebook: u64,
    #[serde(default)]
    pub over_capacity: Option<OverCapacity>,
}

impl MacTrials {
    fn at(&self, horizon: f64, rates: [f64; 2], max_codebook: u64) -> MacExperimentConfig {
        MacExperimentConfig {
            ou_rate: self.ou_rate,
            codeword_powers: self.codeword_powers,
            power_budgets: self.power_budgets,
            gains: self.gains,
            rates,
            horizon,
            level: self.level,
            trials: self.trials,
            epsilon: self.epsilon,
            max_codebook,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MacExactMi {
    pub ou_rate: f64,
    pub powers: [f64; 2],
    #[serde(default = "unit_gains")]
    pub gains: [f64; 2],
    pub horizon: f64,
    pub level: u32,
    pub joint_tolerance: f64,
    pub conditional_tolerance: f64,
    pub single_tolerance: f64,
    pub chain_tolerance: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MacCoding {
    #[serde(default)]
    pub trials: Option<MacTrials>,
    #[serde(default)]
    pub exact_mi: Option<MacExactMi>,
}

impl MacCoding {
    pub(crate) fn validate(&self) -> Problems {
        let mut p = Problems::new();
        if self.trials.is_none() && self.exact_mi.is_none() {
            p.push("trials", "at least one of `trials` and `exact_mi` is required");
        }
        if let Some(m) = &self.trials {
            if m.horizons.is_empty() {
                p.push("trials.horizons", "must not be empty");
            }
            for (i, &t) in m.horizons.iter().enumerate() {
                let problems = m.at(t, m.rates, m.max_codebook).validate();
                p.extend_core_at("trials.", problems, &format!("at horizons[{i}] = {t}"));
            }
            if let Some(o) = &m.over_capacity {
                p.extend_core("trials.over_capacity.", m.at(o.horizon, o.rates, o.max_codebook).validate());
                if !(0.0..=1.0).contains(&o.min_error_rate) {
                    p.push("trials.over_capacity.min_error_rate", "must lie in [0, 1]");
                }
            }
        }
        if let Some(e) = &self.exact_mi {
            p.positive("exact_mi.ou_rate", e.ou_rate);
            p.nonneg_all("exact_mi.powers", &e.powers);
            p.positive("exact_mi.horizon", e.horizon);
            if e.level > 24 {
                p.push("exact_mi.level", "must be <= 24");
            }
            for (f, v) in [
                ("joint_tolerance", e.joint_tolerance),
                ("conditional_tolerance", e.conditional_tolerance),
                ("single_tolerance", e.single_tolerance),
                ("chain_tolerance", e.chain_tolerance),
            ] {
                p.nonneg(&format!("exact_mi.{f}"), v);
            }
        }
        p
    }

    pub fn run(&self, seed: u64) -> Outcome {
        let mut r = Recorder::default();
        if let Some(m) = &self.trials {
            let mut t = stats_columns();
            let mut rates = Vec::new();
            let mut consistent = true;
            let mut below_bound = true;
            for &h in &m.horizons {
                let s = mac_error_experiment(&m.at(h, m.rates, m.max_codebook), seed).map_err(core_err)?;
                consistent &= s.is_consistent();
                below_bound &= s.error_rate() < s.union_bound;
                t.push(stats_row(h, m.rates, &s, seed));
                r.metric(format!("error_rate[T={h}]"), s.error_rate(), Unit::None);
                r.metric(format!("union_bound[T={h}]"), s.union_bound, Unit::None);
                rates.push(s.error_rate());
            }
            r.holds("decreasing", strictly_decreasing(&rates), "error rate strictly decreasing in T");
            r.holds("below_union_bound", below_bound, "error rate below the union-bound estimate at every T");
            if let Some(o) = &m.over_capacity {
                let s = mac_error_experiment(&m.at(o.horizon, o.rates, o.max_codebook), seed).map_err(core_err)?;
                consistent &= s.is_consistent();
                t.push(stats_row(o.horizon, o.rates, &s, seed));
                r.metric("over_capacity_error_rate", s.error_rate(), Unit::None);
                r.at_least("over_capacity", s.error_rate(), o.min_error_rate, "error rate above the capacity region");
            }
            r.holds("tallies", consistent, "error classes sum to the error count");
            r.table = Some(t);
        }
        if let Some(e) = &self.exact_mi {
            let g = dyadic(e.horizon, e.level)?;
            let p1 = OuParams::new(e.ou_rate, e.powers[0]).map_err(core_err)?;
            let p2 = OuParams::new(e.ou_rate, e.powers[1]).map_err(core_err)?;
            let m = two_user_mi(OuInput::new(p1, e.gains[0]), OuInput::new(p2, e.gains[1]), &g).map_err(core_err)?;
            let q = [e.gains[0].powi(2) * e.powers[0] / 2.0, e.gains[1].powi(2) * e.powers[1] / 2.0];
            let t = e.horizon;
            for (name, v) in [
                ("joint_rate", m.joint / t),
                ("first_given_second_rate", m.first_given_second / t),
                ("second_given_first_rate", m.second_given_first / t),
                ("first_rate", m.first / t),
                ("second_rate", m.second / t),
            ] {
                r.metric(name, v, Unit::NatsPerSecond);
            }
            r.metric("chain_rule_gap", m.chain_rule_gap(), Unit::Nats);
            r.at_most("joint", (m.joint / t - q[0] - q[1]).abs(), e.joint_tolerance, "|I(X1,X2;Y)/T - (P1+P2)/2|");
            let cond = (m.first_given_second / t - q[0]).abs().max((m.second_given_first / t - q[1]).abs());
            r.at_most("conditional", cond, e.conditional_tolerance, "max_i |I(Xi;Y|Xj)/T - Pi/2|");
            let single = (m.first / t - q[0]).abs().max((m.second / t - q[1]).abs());
            r.at_most("single", single, e.single_tolerance, "max_i |I(Xi;Y)/T - Pi/2|");
            r.at_most("chain_rule", m.chain_rule_gap(), e.chain_tolerance, "chain-rule identity");
        }
        Ok(r)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IcTrials {
    pub codeword_powers: [f64; 2],
    pub power_budgets: [f64; 2],
    pub rates: [f64; 2],
    pub horizons: Vec<f64>,
    pub level: u32,
    pub trials: usize,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default = "guard")]
    pub max_codebook: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IcCoding {
    pub ou_rate: f64,
    pub powers: [f64; 2],
    /// `gains[i][j]`: gain from sender `j` at receiver `i`.
    pub gains: [[f64; 2]; 2],
    pub horizon: f64,
    pub level: u32,
    /// Relative gap to `a_ii² P_i / 2` allowed for the exact rates.
    pub rate_tolerance: f64,
    #[serde(default)]
    pub trials: Option<IcTrials>,
}

impl IcCoding {
    fn experiment(&self, t: &IcTrials, horizon: f64) -> IcExperimentConfig {
        IcExperimentConfig {
            ou_rate: self.ou_rate,
            codeword_powers: t.codeword_powers,
            power_budgets: t.power_budgets,
            gains: self.gains,
            rates: t.rates,
            horizon,
            level: t.level,
            trials: t.trials,
            epsilon: t.epsilon,
            max_codebook: t.max_codebook,
        }
    }

    pub(crate) fn validate(&self) -> Problems {
        let mut p = Problems::new();
        p.positive("ou_rate", self.ou_rate);
        p.nonneg_all("powers", &self.powers);
        for (i, row) in self.gains.iter().enumerate() {
            for (j, g) in row.iter().enumerate() {
                if !g.is_finite() {
                    p.push(&format!("gains[{i}][{j}]"), "must be finite");
                }
            }
        }
        p.positive("horizon", self.horizon);
        if self.level > 24 {
            p.push("level", "must be <= 24");
        }
        p.nonneg("rate_tolerance", self.rate_tolerance);
        if let Some(t) = &self.trials {
            if t.horizons.is_empty() {
                p.push("trials.horizons", "must not be empty");
            }
            for (i, &h) in t.horizons.iter().enumerate() {
                p.extend_core_at("trials.", self.experiment(t, h).validate(), &format!("at horizons[{i}] = {h}"));
            }
        }
        p
    }

    pub fn run(&self, seed: u64) -> Outcome {
        let mut r = Recorder::default();
        let g = dyadic(self.horizon, self.level)?;
        let rates = ic_treat_as_noise_rates(self.gains, self.powers, self.ou_rate, &g).map_err(core_err)?;
        for i in 0..2 {
            let target = self.gains[i][i].powi(2) * self.powers[i] / 2.0;
            let rate = rates[i].rate();
            r.metric(format!("rate[{i}]"), rate, Unit::NatsPerSecond);
            r.metric(format!("target[{i}]"), target, Unit::NatsPerSecond);
            r.at_most(
                &format!("treat_as_noise[{i}]"),
                (rate - target).abs() / target,
                self.rate_tolerance,
                "relative gap of the exact treat-as-noise rate to a_ii² P_i / 2",
            );
        }
        if let Some(t) = &self.trials {
            let mut table = stats_columns();
            let mut per_user: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
            for &h in &t.horizons {
                let stats = ic_treat_as_noise_experiment(&self.experiment(t, h), seed).map_err(core_err)?;
                for (u, s) in stats.iter().enumerate() {
                    let mut row_rates = [0.0; 2];
                    row_rates[u] = t.rates[u];
                    table.push(stats_row(h, row_rates, s, seed));
                    per_user[u].push(s.error_rate());
                }
            }
            for (u, v) in per_user.iter().enumerate() {
                r.holds(&format!("decreasing[{u}]"), strictly_decreasing(v), "error rate strictly decreasing in T");
            }
            r.table = Some(table);
        }
        Ok(r)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Composite {
    pub lambda: f64,
    pub draws: usize,
    /// Allowed deviation in standard errors.
    pub z: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSharing {
    pub lambda: f64,
    pub tolerance: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcCoding {
    pub ou_rate: f64,
    pub snrs: [f64; 2],
    pub power: f64,
    /// Variance reduction `ε` of the codewords: they use `P - ε`.
    pub power_margin: f64,
    pub horizon: f64,
    pub level: u32,
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub composite: Option<Composite>,
    #[serde(default)]
    pub time_sharing: Option<TimeSharing>,
}

impl BcCoding {
    pub(crate) fn validate(&self) -> Problems {
        let mut p = Problems::new();
        p.positive("ou_rate", self.ou_rate);
        p.positive_all("snrs", &self.snrs);
        p.positive("power", self.power);
        p.nonneg("power_margin", self.power_margin);
        if self.power_margin >= self.power {
            p.push("power_margin", "must be below power");
        }
        p.positive("horizon", self.horizon);
        if self.level > 14 {
            p.push("level", "must be <= 14");
        }
        if self.lambdas.iter().any(|l| !(0.0..=1.0).contains(l)) || self.lambdas.windows(2).any(|w| w[1] <= w[0]) {
            p.push("lambdas", "must be increasing values in [0, 1]");
        }
        if let Some(c) = &self.composite {
            if !(0.0..=1.0).contains(&c.lambda) {
                p.push("composite.lambda", "must lie in [0, 1]");
            }
            if c.draws < 2 || c.draws > ctgauss_core::coding::MAX_TRIALS {
                p.push("composite.draws", format!("must lie in 2..={}", ctgauss_core::coding::MAX_TRIALS));
            }
            p.positive("composite.z", c.z);
        }
        if let Some(t) = &self.time_sharing {
            if !(t.lambda > 0.0 && t.lambda < 1.0) {
                p.push("time_sharing.lambda", "must lie in (0, 1)");
            }
            p.nonneg("time_sharing.tolerance", t.tolerance);
        }
        p
    }

    pub fn run(&self, seed: u64) -> Outcome {
        let mut r = Recorder::default();
        let g = dyadic(self.horizon, self.level)?;
        let reduced = self.power - self.power_margin;
        let params = OuParams::new(self.ou_rate, reduced).map_err(core_err)?;
        let mut t = Table::new(&[
            ("lambda", Unit::None),
            ("rate1", Unit::NatsPerSecond),
            ("rate2", Unit::NatsPerSecond),
            ("boundary1", Unit::NatsPerSecond),
            ("boundary2", Unit::NatsPerSecond),
        ]);
        let mut pairs = Vec::new();
        for &l in &self.lambdas {
            let rates = bc_power_sharing_rates(l, self.snrs, &params, &g).map_err(core_err)?;
            let boundary = [self.snrs[0] * l * reduced / 2.0, self.snrs[1] * (1.0 - l) * reduced / 2.0];
            t.push(vec![l, rates[0], rates[1], boundary[0], boundary[1]]);
            r.metric(format!("rate1[lambda={l}]"), rates[0], Unit::NatsPerSecond);
            r.metric(format!("rate2[lambda={l}]"), rates[1], Unit::NatsPerSecond);
            pairs.push(rates);
        }
        let trend = pairs.windows(2).all(|w| w[1][0] >= w[0][0] && w[1][1] <= w[0][1]);
        r.holds("power_sharing_trend", trend, "user 1 rate rises and user 2 rate falls as lambda grows");
        if let Some(c) = &self.composite {
            let s =
                bc_composite_power(c.lambda, [params, params], &g, c.draws, RngSeed::master(seed)).map_err(core_err)?;
            r.metric("composite_power", s.mean, Unit::None);
            r.metric("composite_power_se", s.standard_error, Unit::None);
            r.metric("composite_power_expected", s.expected, Unit::None);
            r.at_most(
                "composite_power",
                (s.mean - s.expected).abs() / s.standard_error,
                c.z,
                "standard errors between mean composite power and lambda·P1 + (1-lambda)·P2",
            );
        }
        if let Some(ts) = &self.time_sharing {
            let mut worst: f64 = 0.0;
            for u in 0..2 {
                let m = bc_time_sharing_user_mi(ts.lambda, self.snrs[u], &params, &g, u).map_err(core_err)?;
                r.metric(format!("time_shared_mi[{u}]"), m.time_shared, Unit::Nats);
                r.metric(format!("independent_blocks_mi[{u}]"), m.independent_blocks, Unit::Nats);
                r.metric(format!("standalone_mi[{u}]"), m.standalone, Unit::Nats);
                r.metric(format!("full_horizon_mi[{u}]"), m.full_horizon, Unit::Nats);
                worst = worst
                    .max((m.time_shared - 0.5 * m.independent_blocks).abs())
                    .max((m.time_shared - m.standalone).abs());
            }
            r.at_most("time_sharing_halving", worst, ts.tolerance, "per-user MI against half of the two-block MI");
        }
        r.table = Some(t);
        Ok(r)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityRun {
    pub horizon: f64,
    pub level: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypicalityStability {
    pub rate: f64,
    pub power: f64,
    pub snr: f64,
    pub epsilon: f64,
    pub trials: usize,
    pub runs: Vec<StabilityRun>,
    #[serde(default)]
    pub threshold: Option<f64>,
}

impl TypicalityStability {
    pub(crate) fn validate(&self) -> Problems {
        let mut p = Problems::new();
        p.positive("rate", self.rate);
        p.nonneg("power", self.power);
        p.nonneg("snr", self.snr);
        p.nonneg("epsilon", self.epsilon);
        if self.trials == 0 || self.trials > ctgauss_core::coding::MAX_TRIALS {
            p.push("trials", format!("must lie in 1..={}", ctgauss_core::coding::MAX_TRIALS));
        }
        if self.runs.is_empty() {
            p.push("runs", "must not be empty");
        }
        for (i, run) in self.runs.iter().enumerate() {
            p.positive(&format!("runs[{i}].horizon"), run.horizon);
            if run.level > 12 {
                p.push(&format!("runs[{i}].level"), "dense log-densities are limited to level 12");
            }
        }
        if let Some(t) = self.threshold {
            if !(0.0..=1.0).contains(&t) {
                p.push("threshold", "must lie in [0, 1]");
            }
        }
        p
    }

    pub fn run(&self, seed: u64) -> Outcome {
        let mut r = Recorder::default();
        let params = OuParams::new(self.rate, self.power).map_err(core_err)?;
        let mut t = Table::new(&[
            ("T", Unit::None),
            ("k", Unit::None),
            ("fraction", Unit::None),
            ("typical", Unit::None),
            ("trials", Unit::None),
            ("sampled_mi", Unit::Nats),
            ("duncan_mi", Unit::Nats),
        ]);
        let mut fractions = Vec::new();
        for run in &self.runs {
            let g = dyadic(run.horizon, run.level)?;
            let f = typicality_fraction(&params, self.snr, &g, self.epsilon, self.trials, RngSeed::master(seed))
                .map_err(core_err)?;
            let d = duncan_mi(&params, self.snr, run.horizon).map_err(core_err)?.value;
            t.push(vec![run.horizon, run.level as f64, f.fraction, f.typical as f64, f.trials as f64, f.mi, d]);
            r.metric(format!("fraction[T={}]", run.horizon), f.fraction, Unit::None);
            fractions.push(f.fraction);
        }
        r.holds(
            "increasing",
            fractions.windows(2).all(|w| w[1] > w[0]),
            "typical fraction strictly increasing along the runs",
        );
        if let Some(th) = self.threshold {
            r.at_least("final_fraction", *fractions.last().unwrap(), th, "typical fraction of the last run");
        }
        r.table = Some(t);
        Ok(r)
    }
}
