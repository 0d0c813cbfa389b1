//! Seeded Monte Carlo experiments for the MAC, IC and BC coding schemes.
//!
//! Trial `t` of a run with master seed `m` draws everything from the child
//! stream `t` of `m`: codebook `u` from its child `u + 1`, the noise seen by
//! receiver `u` from child `u + 10`. Tallies are integers, so the parallel
//! reduction is order independent.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::SamplingGrid;
use crate::linalg::CovarianceMatrix;
use crate::mi::{
    ou_increment_covariance, output_log_det, sampled_mi_from_increment_cov, sampled_mi_gaussian, MiEstimate, MiMethod,
    OuInput,
};
use crate::paths::{average_power, sample_brownian, sample_ou, sample_ou_integrated, OuParams, Path};
use crate::seed::RngSeed;

use super::codebook::{codebook_size, Codebook, DEFAULT_CODEBOOK_GUARD};
use super::typicality::{
    first_mac_error, integrated_increments, MacErrorEvent, MacModel, SingleUserModel, TypicalityTest,
};

/// Upper limit on Monte Carlo trials per run.
pub const MAX_TRIALS: usize = 100_000;

/// Default typicality slack as a fraction of the reference MI rate.
const DEFAULT_EPSILON_FRACTION: f64 = 0.05;

const NOISE_STREAM: u64 = 10;

fn default_guard() -> u64 {
    DEFAULT_CODEBOOK_GUARD
}

fn unit_gains() -> [f64; 2] {
    [1.0, 1.0]
}

/// First error event of each failed trial, in detection order.
///
/// For single-user receivers an impostor codeword is tallied as
/// `wrong_first`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorClasses {
    /// The sent codeword violates its power budget.
    pub power: usize,
    /// The sent pair is not jointly typical.
    pub true_pair_atypical: usize,
    /// A pair `(i, 1)`, `i != 1`, is typical.
    pub wrong_first: usize,
    /// A pair `(1, j)`, `j != 1`, is typical.
    pub wrong_second: usize,
    /// A pair `(i, j)` with both indices wrong is typical.
    pub wrong_both: usize,
}

impl ErrorClasses {
    pub fn total(&self) -> usize {
        self.power + self.true_pair_atypical + self.wrong_first + self.wrong_second + self.wrong_both
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub trials: usize,
    pub errors: usize,
    /// Trials whose sent codeword violates the power budget.
    pub power_violations: usize,
    /// Trials (all of them, violating or not) whose sent pair is atypical.
    pub true_pair_atypical: usize,
    pub classes: ErrorClasses,
    pub epsilon: f64,
    /// Reference mutual informations of the typicality test, nats.
    pub reference_mi: Vec<f64>,
    /// `P̂(π) + P̂(E11ᶜ) + Σ e^{(rates + ε)T - I}` over the impostor classes.
    pub union_bound: f64,
}

impl ErrorStats {
    pub fn error_rate(&self) -> f64 {
        self.errors as f64 / self.trials as f64
    }

    /// Tallies agree with the totals.
    pub fn is_consistent(&self) -> bool {
        self.errors <= self.trials
            && self.classes.total() == self.errors
            && self.classes.power == self.power_violations
            && self.true_pair_atypical <= self.trials
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct TrialOutcome {
    violation: bool,
    true_typical: bool,
    event: Option<usize>,
}

fn tally(outcomes: &[TrialOutcome]) -> (ErrorClasses, usize, usize) {
    let mut c = ErrorClasses::default();
    let mut atypical = 0;
    for o in outcomes {
        if !o.true_typical {
            atypical += 1;
        }
        if o.violation {
            c.power += 1;
            continue;
        }
        match o.event {
            Some(0) => c.true_pair_atypical += 1,
            Some(1) => c.wrong_first += 1,
            Some(2) => c.wrong_second += 1,
            Some(3) => c.wrong_both += 1,
            _ => {}
        }
    }
    (c, atypical, outcomes.len())
}

fn check_positive(problems: &mut Vec<String>, name: &str, v: f64) {
    if !(v > 0.0) || !v.is_finite() {
        problems.push(format!("{name}: must be finite and > 0, got {v}"));
    }
}

fn check_nonneg(problems: &mut Vec<String>, name: &str, v: f64) {
    if !(v >= 0.0) || !v.is_finite() {
        problems.push(format!("{name}: must be finite and >= 0, got {v}"));
    }
}

fn check_common(
    problems: &mut Vec<String>,
    ou_rate: f64,
    horizon: f64,
    level: u32,
    trials: usize,
    epsilon: Option<f64>,
) {
    check_positive(problems, "ou_rate", ou_rate);
    check_positive(problems, "horizon", horizon);
    if level == 0 || level > 16 {
        problems.push(format!("level: must lie in 1..=16, got {level}"));
    }
    if trials == 0 || trials > MAX_TRIALS {
        problems.push(format!("trials: must lie in 1..={MAX_TRIALS}, got {trials}"));
    }
    if let Some(e) = epsilon {
        check_nonneg(problems, "epsilon", e);
    }
}

fn check_book(problems: &mut Vec<String>, name: &str, rate: f64, horizon: f64, guard: u64) {
    check_nonneg(problems, name, rate);
    if rate >= 0.0 && horizon > 0.0 {
        match codebook_size(rate, horizon) {
            Ok(n) if n > guard => problems
                .push(format!("{name}: codebook size ceil(e^(R*T)) = {n} exceeds the guard max_codebook = {guard}")),
            Ok(_) => {}
            Err(e) => problems.push(format!("{name}: {e}")),
        }
    }
}

fn into_result(problems: Vec<String>) -> Result<()> {
    if problems.is_empty() {
        Ok(())
    } else {
        Err(invalid("config", problems.join("; ")))
    }
}

/// Two-user MAC random-coding experiment, `Y = ∫X1 + ∫X2 + B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MacExperimentConfig {
    /// OU mean-reversion rate `a` of both codebooks.
    pub ou_rate: f64,
    /// Codeword variances (the reduced powers `P_i - ε`).
    pub codeword_powers: [f64; 2],
    /// Average-power budgets `P_i` checked on the sent codewords.
    pub power_budgets: [f64; 2],
    #[serde(default = "unit_gains")]
    pub gains: [f64; 2],
    /// Message rates, nats/s.
    pub rates: [f64; 2],
    pub horizon: f64,
    /// Dyadic level of the sampling grid.
    pub level: u32,
    pub trials: usize,
    /// Typicality slack, nats/s; default 5% of the joint MI rate.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default = "default_guard")]
    pub max_codebook: u64,
}

impl MacExperimentConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut p = Vec::new();
        check_common(&mut p, self.ou_rate, self.horizon, self.level, self.trials, self.epsilon);
        for i in 0..2 {
            check_nonneg(&mut p, &format!("codeword_powers[{i}]"), self.codeword_powers[i]);
            check_nonneg(&mut p, &format!("power_budgets[{i}]"), self.power_budgets[i]);
            if !self.gains[i].is_finite() {
                p.push(format!("gains[{i}]: must be finite"));
            }
            check_book(&mut p, &format!("rates[{i}]"), self.rates[i], self.horizon, self.max_codebook);
        }
        p
    }
}

/// Runs the MAC experiment, sending entry `(0, 0)` in every trial.
pub fn mac_error_experiment(config: &MacExperimentConfig, master_seed: u64) -> Result<ErrorStats> {
    into_result(config.validate())?;
    let grid = Arc::new(SamplingGrid::dyadic(config.horizon, config.level)?);
    let t = config.horizon;
    let params = [
        OuParams::new(config.ou_rate, config.codeword_powers[0])?,
        OuParams::new(config.ou_rate, config.codeword_powers[1])?,
    ];
    let model = MacModel::new(params, config.gains, &grid)?;
    let mi = model.mutual_informations();
    let epsilon = config.epsilon.unwrap_or(DEFAULT_EPSILON_FRACTION * mi[0] / t);
    let test = TypicalityTest::new(epsilon, t, mi)?;
    let root = RngSeed::master(master_seed);
    let outcomes: Vec<TrialOutcome> = (0..config.trials)
        .into_par_iter()
        .map(|trial| -> Result<TrialOutcome> {
            let s = root.child(trial as u64);
            let b1 = Codebook::generate(params[0], config.rates[0], &grid, s.child(1), config.max_codebook)?;
            let b2 = Codebook::generate(params[1], config.rates[1], &grid, s.child(2), config.max_codebook)?;
            let (c1, c2) = (b1.codeword(0), b2.codeword(0));
            let violation = average_power(&c1.signal) > config.power_budgets[0]
                || average_power(&c2.signal) > config.power_budgets[1];
            let y = sample_brownian(&grid, s.child(NOISE_STREAM))
                .add_scaled(&c1.integral, config.gains[0])?
                .add_scaled(&c2.integral, config.gains[1])?
                .increments();
            let (s1, s2) = (c1.integral.increments(), c2.integral.increments());
            let (true_typical, event) = if violation {
                // only the E11ᶜ estimate is needed; skip the impostor scan
                let one1 = Codebook::generate(params[0], 0.0, &grid, s.child(1), 1)?;
                let one2 = Codebook::generate(params[1], 0.0, &grid, s.child(2), 1)?;
                first_mac_error(&one1, &one2, (&s1, &s2), &y, &model, &test)
            } else {
                first_mac_error(&b1, &b2, (&s1, &s2), &y, &model, &test)
            };
            Ok(TrialOutcome {
                violation,
                true_typical,
                event: event.map(|e| match e {
                    MacErrorEvent::TruePairAtypical => 0,
                    MacErrorEvent::WrongFirst => 1,
                    MacErrorEvent::WrongSecond => 2,
                    MacErrorEvent::WrongBoth => 3,
                }),
            })
        })
        .collect::<Result<_>>()?;
    let (classes, atypical, trials) = tally(&outcomes);
    let n = trials as f64;
    let [r1, r2] = config.rates;
    let union_bound = classes.power as f64 / n
        + atypical as f64 / n
        + ((r1 + epsilon) * t - mi[1]).exp()
        + ((r2 + epsilon) * t - mi[2]).exp()
        + ((r1 + r2 + epsilon) * t - mi[0]).exp();
    Ok(ErrorStats {
        trials,
        errors: classes.total(),
        power_violations: classes.power,
        true_pair_atypical: atypical,
        classes,
        epsilon,
        reference_mi: mi.to_vec(),
        union_bound,
    })
}

/// One receiver decoding one codebook, optionally with an OU interferer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointToPointConfig {
    pub ou_rate: f64,
    pub codeword_power: f64,
    pub power_budget: f64,
    pub gain: f64,
    pub rate: f64,
    pub horizon: f64,
    pub level: u32,
    pub trials: usize,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default = "default_guard")]
    pub max_codebook: u64,
    /// User label `u` selecting the codebook and noise streams.
    #[serde(default)]
    pub user: usize,
}

impl PointToPointConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut p = Vec::new();
        check_common(&mut p, self.ou_rate, self.horizon, self.level, self.trials, self.epsilon);
        check_nonneg(&mut p, "codeword_power", self.codeword_power);
        check_nonneg(&mut p, "power_budget", self.power_budget);
        if !self.gain.is_finite() {
            p.push("gain: must be finite".into());
        }
        check_book(&mut p, "rate", self.rate, self.horizon, self.max_codebook);
        p
    }
}

struct Interferer {
    params: OuParams,
    rate: f64,
    gain: f64,
    user: usize,
}

fn single_user_run(
    cfg: &PointToPointConfig,
    interferer: Option<Interferer>,
    grid: &Arc<SamplingGrid>,
    master_seed: u64,
) -> Result<ErrorStats> {
    let t = cfg.horizon;
    let params = OuParams::new(cfg.ou_rate, cfg.codeword_power)?;
    let interference: Vec<(OuParams, f64)> = interferer.iter().map(|i| (i.params, i.gain)).collect();
    let model = SingleUserModel::new(params, cfg.gain, &interference, grid)?;
    let mi = model.mutual_information();
    let epsilon = cfg.epsilon.unwrap_or(DEFAULT_EPSILON_FRACTION * mi / t);
    let test = TypicalityTest::new(epsilon, t, [mi; 3])?;
    let root = RngSeed::master(master_seed);
    let u = cfg.user as u64;
    let outcomes: Vec<TrialOutcome> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| -> Result<TrialOutcome> {
            let s = root.child(trial as u64);
            let book = Codebook::generate(params, cfg.rate, grid, s.child(u + 1), cfg.max_codebook)?;
            let sent = book.codeword(0);
            let violation = average_power(&sent.signal) > cfg.power_budget;
            let mut signal = sent.integral.scaled(cfg.gain);
            if let Some(i) = &interferer {
                let other = Codebook::generate(i.params, i.rate, grid, s.child(i.user as u64 + 1), cfg.max_codebook)?;
                signal = signal.add_scaled(&other.codeword(0).integral, i.gain)?;
            }
            let y = signal.add_scaled(&sample_brownian(grid, s.child(NOISE_STREAM + u)), 1.0)?.increments();
            let marginal = model.log_marginal(&y);
            let typical = |x: &[f64]| test.accepts(0, model.log_phi_with(x, &y, marginal));
            let true_typical = typical(&sent.integral.increments());
            let event = if !true_typical {
                Some(0)
            } else if !violation && (1..book.len()).any(|k| typical(&integrated_increments(&book, k))) {
                Some(1)
            } else {
                None
            };
            Ok(TrialOutcome { violation, true_typical, event })
        })
        .collect::<Result<_>>()?;
    let (classes, atypical, trials) = tally(&outcomes);
    let n = trials as f64;
    let union_bound = classes.power as f64 / n + atypical as f64 / n + ((cfg.rate + epsilon) * t - mi).exp();
    Ok(ErrorStats {
        trials,
        errors: classes.total(),
        power_violations: classes.power,
        true_pair_atypical: atypical,
        classes,
        epsilon,
        reference_mi: vec![mi],
        union_bound,
    })
}

/// Point-to-point random coding over `Y = g ∫X + B`.
pub fn point_to_point_experiment(config: &PointToPointConfig, master_seed: u64) -> Result<ErrorStats> {
    into_result(config.validate())?;
    let grid = Arc::new(SamplingGrid::dyadic(config.horizon, config.level)?);
    single_user_run(config, None, &grid, master_seed)
}

/// Two-user interference channel, each receiver treating the other
/// transmitter as Gaussian noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IcExperimentConfig {
    pub ou_rate: f64,
    pub codeword_powers: [f64; 2],
    pub power_budgets: [f64; 2],
    /// `gains[i][j]`: gain from sender `j` at receiver `i`.
    pub gains: [[f64; 2]; 2],
    pub rates: [f64; 2],
    pub horizon: f64,
    pub level: u32,
    pub trials: usize,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default = "default_guard")]
    pub max_codebook: u64,
}

impl IcExperimentConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut p = Vec::new();
        check_common(&mut p, self.ou_rate, self.horizon, self.level, self.trials, self.epsilon);
        for i in 0..2 {
            check_nonneg(&mut p, &format!("codeword_powers[{i}]"), self.codeword_powers[i]);
            check_nonneg(&mut p, &format!("power_budgets[{i}]"), self.power_budgets[i]);
            check_book(&mut p, &format!("rates[{i}]"), self.rates[i], self.horizon, self.max_codebook);
            for j in 0..2 {
                if !self.gains[i][j].is_finite() {
                    p.push(format!("gains[{i}][{j}]: must be finite"));
                }
            }
        }
        p
    }

    /// The single-receiver view of receiver `i`.
    pub fn receiver(&self, i: usize) -> PointToPointConfig {
        PointToPointConfig {
            ou_rate: self.ou_rate,
            codeword_power: self.codeword_powers[i],
            power_budget: self.power_budgets[i],
            gain: self.gains[i][i],
            rate: self.rates[i],
            horizon: self.horizon,
            level: self.level,
            trials: self.trials,
            epsilon: self.epsilon,
            max_codebook: self.max_codebook,
            user: i,
        }
    }
}

pub fn ic_treat_as_noise_experiment(config: &IcExperimentConfig, master_seed: u64) -> Result<[ErrorStats; 2]> {
    into_result(config.validate())?;
    let grid = Arc::new(SamplingGrid::dyadic(config.horizon, config.level)?);
    let run = |i: usize| {
        let j = 1 - i;
        let interferer = Interferer {
            params: OuParams::new(config.ou_rate, config.codeword_powers[j])?,
            rate: config.rates[j],
            gain: config.gains[i][j],
            user: j,
        };
        single_user_run(&config.receiver(i), Some(interferer), &grid, master_seed)
    };
    Ok([run(0)?, run(1)?])
}

/// Exact treat-as-noise MI at each receiver of an OU-input IC.
pub fn ic_treat_as_noise_rates(
    gains: [[f64; 2]; 2],
    powers: [f64; 2],
    ou_rate: f64,
    grid: &Arc<SamplingGrid>,
) -> Result<[MiEstimate; 2]> {
    let p = [OuParams::new(ou_rate, powers[0])?, OuParams::new(ou_rate, powers[1])?];
    let mi = |i: usize| -> Result<MiEstimate> {
        let j = 1 - i;
        let noise = output_log_det(&[OuInput::new(p[j], gains[i][j])], grid)?;
        let out = output_log_det(&[OuInput::new(p[i], gains[i][i]), OuInput::new(p[j], gains[i][j])], grid)?;
        Ok(MiEstimate {
            value: 0.5 * (out - noise),
            method: MiMethod::Logdet,
            grid_points: grid.len(),
            horizon: grid.horizon(),
        })
    };
    Ok([mi(0)?, mi(1)?])
}

/// A broadcast input and the two received outputs `Y_i = √snr_i ∫X + B_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BcTransmission {
    pub input: Path,
    pub integral: Path,
    pub outputs: [Path; 2],
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(invalid("lambda", format!("must lie in [0, 1], got {lambda}")));
    }
    Ok(())
}

fn check_snrs(snrs: [f64; 2]) -> Result<()> {
    for s in snrs {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(invalid("snrs", format!("must be finite and >= 0, got {s}")));
        }
    }
    Ok(())
}

fn broadcast(input: Path, integral: Path, snrs: [f64; 2], seed: RngSeed) -> Result<BcTransmission> {
    let grid = integral.shared_grid().clone();
    let out =
        |i: usize| sample_brownian(&grid, seed.child(NOISE_STREAM + i as u64)).add_scaled(&integral, snrs[i].sqrt());
    let outputs = [out(0)?, out(1)?];
    Ok(BcTransmission { input, integral, outputs })
}

fn books_share_grid(books: [&Codebook; 2]) -> Result<()> {
    if books[0].grid() != books[1].grid() {
        return Err(Error::InvalidGrid("codebooks live on different grids".into()));
    }
    Ok(())
}

/// Power sharing: `X = √λ X1 + √(1-λ) X2` with `X_u` codeword `messages[u]`
/// of book `u`.
pub fn bc_power_sharing_transmit(
    lambda: f64,
    snrs: [f64; 2],
    books: [&Codebook; 2],
    messages: [usize; 2],
    seed: RngSeed,
) -> Result<BcTransmission> {
    check_lambda(lambda)?;
    check_snrs(snrs)?;
    books_share_grid(books)?;
    let (c1, c2) = (books[0].codeword(messages[0]), books[1].codeword(messages[1]));
    let (w1, w2) = (lambda.sqrt(), (1.0 - lambda).sqrt());
    let input = c1.signal.scaled(w1).add_scaled(&c2.signal, w2)?;
    let integral = c1.integral.scaled(w1).add_scaled(&c2.integral, w2)?;
    broadcast(input, integral, snrs, seed)
}

/// Time sharing: `X = X1` on `[0, λT]` and `X2` on `(λT, T]`; `λ = 0`
/// sends `X2` throughout. `λT` must be a grid point.
pub fn bc_time_sharing_transmit(
    lambda: f64,
    snrs: [f64; 2],
    books: [&Codebook; 2],
    messages: [usize; 2],
    seed: RngSeed,
) -> Result<BcTransmission> {
    check_lambda(lambda)?;
    check_snrs(snrs)?;
    books_share_grid(books)?;
    let grid = books[0].grid().clone();
    let (c1, c2) = (books[0].codeword(messages[0]), books[1].codeword(messages[1]));
    let (x1, x2) = (c1.signal.values(), c2.signal.values());
    let (i1, i2) = (c1.integral.values(), c2.integral.values());
    let (input, integral) = if lambda == 0.0 {
        (c2.signal.clone(), c2.integral.clone())
    } else {
        let m = switch_index(&grid, lambda)?;
        let input: Vec<f64> = (0..grid.len()).map(|i| if i <= m { x1[i] } else { x2[i] }).collect();
        let integral: Vec<f64> =
            (0..grid.len()).map(|i| if i <= m { i1[i] } else { i1[m] + (i2[i] - i2[m]) }).collect();
        (Path::new(grid.clone(), input)?, Path::new(grid.clone(), integral)?)
    };
    broadcast(input, integral, snrs, seed)
}

fn switch_index(grid: &SamplingGrid, lambda: f64) -> Result<usize> {
    let target = lambda * grid.horizon();
    grid.times()
        .iter()
        .position(|&t| (t - target).abs() <= 1e-12 * grid.horizon())
        .ok_or_else(|| invalid("lambda", format!("lambda*T = {target} is not a grid point")))
}

/// Exact per-user MI rates (nats/s) under power sharing with the other
/// user's component treated as noise; `params` carries the reduced power.
pub fn bc_power_sharing_rates(
    lambda: f64,
    snrs: [f64; 2],
    params: &OuParams,
    grid: &Arc<SamplingGrid>,
) -> Result<[f64; 2]> {
    check_lambda(lambda)?;
    check_snrs(snrs)?;
    let share = [lambda, 1.0 - lambda];
    let rate = |u: usize| -> Result<f64> {
        let own = OuInput::new(*params, (snrs[u] * share[u]).sqrt());
        let other = OuInput::new(*params, (snrs[u] * share[1 - u]).sqrt());
        let noise = output_log_det(&[other], grid)?;
        let out = output_log_det(&[own, other], grid)?;
        Ok(0.5 * (out - noise) / grid.horizon())
    };
    Ok([rate(0)?, rate(1)?])
}

/// Per-user MI under time sharing, in nats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSharingMi {
    /// `I(X_u; Y)` on the full grid, the other user's block acting as noise.
    pub time_shared: f64,
    /// The same user alone on its own block.
    pub standalone: f64,
    /// Input made of independent copies on both blocks, over the full grid.
    pub independent_blocks: f64,
    /// One stationary path over the whole horizon.
    pub full_horizon: f64,
}

fn block_covariance(full: &CovarianceMatrix, range: std::ops::Range<usize>) -> CovarianceMatrix {
    let n = full.dim();
    let m = DMatrix::from_fn(n, n, |i, j| if range.contains(&i) && range.contains(&j) { full.get(i, j) } else { 0.0 });
    CovarianceMatrix::from_symmetric_unchecked(m)
}

/// `I(signal; signal + noise + B)` on the grid. Both log-dets are taken
/// after whitening by the interval lengths, so they stay O(1) and the
/// difference does not cancel.
fn dense_mi(signal: &CovarianceMatrix, noise: &CovarianceMatrix, snr: f64, grid: &SamplingGrid) -> Result<f64> {
    let out = sampled_mi_from_increment_cov(&noise.add_scaled(signal, 1.0), snr, grid)?;
    let base = sampled_mi_from_increment_cov(noise, snr, grid)?;
    Ok(out - base)
}

/// Exact MI of user `user` (0 or 1) when the horizon is split at `λT`.
pub fn bc_time_sharing_user_mi(
    lambda: f64,
    snr: f64,
    params: &OuParams,
    grid: &Arc<SamplingGrid>,
    user: usize,
) -> Result<TimeSharingMi> {
    check_lambda(lambda)?;
    if user > 1 {
        return Err(invalid("user", "must be 0 or 1"));
    }
    if lambda == 0.0 || lambda == 1.0 {
        return Err(invalid("lambda", "both blocks must be nonempty"));
    }
    let m = switch_index(grid, lambda)?;
    let n = grid.intervals();
    let full = ou_increment_covariance(params, grid);
    let blocks = [block_covariance(&full, 0..m), block_covariance(&full, m..n)];
    let (own, other) = (&blocks[user], &blocks[1 - user]);
    let time_shared = dense_mi(own, other, snr, grid)?;
    let both = own.add_scaled(other, 1.0);
    let independent_blocks = dense_mi(&both, &CovarianceMatrix::zeros(n), snr, grid)?;
    let times = grid.times();
    let sub: Vec<f64> =
        if user == 0 { times[..=m].to_vec() } else { times[m..].iter().map(|t| t - times[m]).collect() };
    let standalone = sampled_mi_gaussian(params, snr, &SamplingGrid::from_times(sub)?)?.value;
    let full_horizon = sampled_mi_gaussian(params, snr, grid)?.value;
    Ok(TimeSharingMi { time_shared, standalone, independent_blocks, full_horizon })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositePower {
    pub mean: f64,
    pub standard_error: f64,
    /// `λP_1 + (1-λ)P_2`.
    pub expected: f64,
    pub draws: usize,
}

/// Average power of `√λ X1 + √(1-λ) X2` over seeded independent draws.
pub fn bc_composite_power(
    lambda: f64,
    params: [OuParams; 2],
    grid: &Arc<SamplingGrid>,
    draws: usize,
    seed: RngSeed,
) -> Result<CompositePower> {
    check_lambda(lambda)?;
    if !(2..=MAX_TRIALS).contains(&draws) {
        return Err(invalid("draws", format!("must lie in 2..={MAX_TRIALS}")));
    }
    let (w1, w2) = (lambda.sqrt(), (1.0 - lambda).sqrt());
    let powers: Vec<f64> = (0..draws)
        .into_par_iter()
        .map(|d| -> Result<f64> {
            let s = seed.child(d as u64);
            let x = sample_ou(&params[0], grid, s.child(1))
                .scaled(w1)
                .add_scaled(&sample_ou(&params[1], grid, s.child(2)), w2)?;
            Ok(average_power(&x))
        })
        .collect::<Result<_>>()?;
    let n = draws as f64;
    let mean = powers.iter().sum::<f64>() / n;
    let var = powers.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / (n - 1.0);
    Ok(CompositePower {
        mean,
        standard_error: (var / n).sqrt(),
        expected: lambda * params[0].power + (1.0 - lambda) * params[1].power,
        draws,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypicalityFraction {
    pub fraction: f64,
    pub typical: usize,
    pub trials: usize,
    /// Exact sampled `I(X;Y)`, nats.
    pub mi: f64,
    pub epsilon: f64,
    pub horizon: f64,
}

/// Fraction of joint draws of (OU input, output) with
/// `|log φ - I_T| / T <= ε`.
pub fn typicality_fraction(
    params: &OuParams,
    snr: f64,
    grid: &Arc<SamplingGrid>,
    epsilon: f64,
    trials: usize,
    seed: RngSeed,
) -> Result<TypicalityFraction> {
    if !(snr >= 0.0) || !snr.is_finite() {
        return Err(invalid("snr", format!("must be finite and >= 0, got {snr}")));
    }
    if !(epsilon >= 0.0) {
        return Err(invalid("epsilon", format!("must be >= 0, got {epsilon}")));
    }
    if trials == 0 || trials > MAX_TRIALS {
        return Err(invalid("trials", format!("must lie in 1..={MAX_TRIALS}")));
    }
    let g = snr.sqrt();
    let model = SingleUserModel::new(*params, g, &[], grid)?;
    let mi = model.mutual_information();
    let t = grid.horizon();
    let hits: usize = (0..trials)
        .into_par_iter()
        .map(|k| -> Result<usize> {
            let s = seed.child(k as u64);
            let x = sample_ou_integrated(params, grid, s.child(1)).integral;
            let y = sample_brownian(grid, s.child(2)).add_scaled(&x, g)?;
            let l = model.log_phi(&x, &y)?;
            Ok(usize::from((l - mi).abs() / t <= epsilon))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    Ok(TypicalityFraction { fraction: hits as f64 / trials as f64, typical: hits, trials, mi, epsilon, horizon: t })
}
