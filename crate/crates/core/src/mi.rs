//! Mutual information of continuous-time Gaussian channels, in nats.
//!
//! Three independent routes are provided and cross-checked in tests:
//!
//! * **Duncan**: `I_T = (snr/2) ∫_0^T Σ(t) dt`, `Σ` the causal MMSE from the
//!   Riccati ODE ([`duncan_mi`]).
//! * **Log-det**: exact MI between the sampled integrated input and the
//!   sampled output, `½[ln det(snr·Σ_X̃ + Σ_B) - ln det Σ_B]`, from the
//!   closed-form OU double integral ([`sampled_mi_gaussian`]).
//! * **Innovations**: the same log-determinant accumulated as `Σ ln S_i`
//!   over Kalman innovation variances in `O(n)` ([`sampled_mi_innovations`]),
//!   used for the very fine grids that large mean-reversion rates need.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::filter::{innovations_log_det, riccati_solve, smoothed_variance_profile};
use crate::grid::SamplingGrid;
use crate::linalg::CovarianceMatrix;
use crate::paths::{exp_gap2, OuParams};

/// Intervals of the uniform grid used by [`duncan_mi`]; RK4 substeps are
/// added inside each interval as stiffness requires.
pub const DUNCAN_GRID_INTERVALS: usize = 1024;

/// Intervals of the uniform grid used to integrate smoothing errors.
pub const SMOOTHER_GRID_INTERVALS: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MiMethod {
    Duncan,
    Logdet,
    FeedbackLogdet,
    ClosedForm,
}

/// A mutual-information value with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiEstimate {
    pub value: f64,
    pub method: MiMethod,
    pub grid_points: usize,
    pub horizon: f64,
}

impl MiEstimate {
    pub fn rate(&self) -> f64 {
        self.value / self.horizon
    }
}

fn check_power(p: f64) -> Result<()> {
    if !(p >= 0.0) || !p.is_finite() {
        return Err(invalid("power", format!("must be nonnegative and finite, got {p}")));
    }
    Ok(())
}

fn check_snr(snr: f64) -> Result<()> {
    if !(snr >= 0.0) || !snr.is_finite() {
        return Err(invalid("snr", format!("must be nonnegative and finite, got {snr}")));
    }
    Ok(())
}

fn check_horizon(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(invalid("horizon", format!("must be positive and finite, got {t}")));
    }
    Ok(())
}

/// `W ln(1 + P/(2W))` nats/s: capacity of the white channel band-limited to `W` Hz.
pub fn finite_bandwidth_capacity(power: f64, bandwidth: f64) -> Result<f64> {
    check_power(power)?;
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(invalid("bandwidth", format!("must be positive, got {bandwidth}")));
    }
    Ok(bandwidth * (power / (2.0 * bandwidth)).ln_1p())
}

/// `P/2` nats/s.
pub fn infinite_bandwidth_capacity(power: f64) -> Result<f64> {
    check_power(power)?;
    Ok(power / 2.0)
}

/// Duncan's formula on an explicit grid: `(snr/2) ∫ Σ dt` with `Σ(0) = P`.
pub fn duncan_mi_on_grid(params: &OuParams, snr: f64, grid: &Arc<SamplingGrid>) -> Result<MiEstimate> {
    let sol = riccati_solve(params, snr, grid, params.power)?;
    Ok(MiEstimate {
        value: 0.5 * snr * sol.total_integral(),
        method: MiMethod::Duncan,
        grid_points: grid.len(),
        horizon: grid.horizon(),
    })
}

/// `I(X; Y_0^T)` for `dY = sqrt(snr)·X dt + dB` with stationary OU input.
pub fn duncan_mi(params: &OuParams, snr: f64, horizon: f64) -> Result<MiEstimate> {
    check_snr(snr)?;
    check_horizon(horizon)?;
    let grid = Arc::new(SamplingGrid::uniform(horizon, DUNCAN_GRID_INTERVALS)?);
    duncan_mi_on_grid(params, snr, &grid)
}

/// `Cov(X̃(t_i), X̃(t_j))` over the positive grid times, `X̃(t) = ∫_0^t X ds`.
///
/// For `s <= t` the double integral of `P e^{-a|u-v|}` over `[0,s]×[0,t]` is
/// `(P/a²)[2(as - 1 + e^{-as}) + (1 - e^{-as})(1 - e^{-a(t-s)})]`.
pub fn ou_integrated_covariance(params: &OuParams, grid: &SamplingGrid) -> CovarianceMatrix {
    let a = params.rate;
    let scale = params.power / (a * a);
    let t = &grid.times()[1..];
    let n = t.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let (s, u) = (t[i], t[j]);
            let v = scale * (2.0 * exp_gap2(a * s) + (-(a * s)).exp_m1() * (-(a * (u - s))).exp_m1());
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    CovarianceMatrix::from_symmetric_unchecked(m)
}

/// Covariance of the interval integrals `∫_{t_{i-1}}^{t_i} X ds`.
pub fn ou_increment_covariance(params: &OuParams, grid: &SamplingGrid) -> CovarianceMatrix {
    let a = params.rate;
    let scale = params.power / (a * a);
    let times = grid.times();
    let n = grid.intervals();
    let lift: Vec<f64> = grid.steps().map(|d| -(-(a * d)).exp_m1()).collect();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = 2.0 * scale * exp_gap2(a * (times[i + 1] - times[i]));
        for j in (i + 1)..n {
            let gap = times[j] - times[i + 1];
            let v = scale * lift[i] * lift[j] * (-(a * gap)).exp();
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    CovarianceMatrix::from_symmetric_unchecked(m)
}

/// `½ ln det(I + snr·D^{-1/2} C D^{-1/2})` with `C` the covariance of the
/// input increments and `D = diag(Δ_i)` the Brownian increment variances.
///
/// This is the log-det ratio `½[ln det(snr·Σ_X̃ + Σ_B) - ln det Σ_B]` after
/// the unimodular change to increment coordinates; the whitened matrix has
/// all eigenvalues `>= 1`.
pub fn sampled_mi_from_increment_cov(increment_cov: &CovarianceMatrix, snr: f64, grid: &SamplingGrid) -> Result<f64> {
    let n = grid.intervals();
    if increment_cov.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: increment_cov.dim() });
    }
    let inv_sd: Vec<f64> = grid.steps().map(|d| 1.0 / d.sqrt()).collect();
    let c = increment_cov.matrix();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            m[(i, j)] = snr * c[(i, j)] * inv_sd[i] * inv_sd[j];
        }
        m[(j, j)] += 1.0;
    }
    let f = CovarianceMatrix::from_symmetric_unchecked(m).factor("whitened output covariance")?;
    Ok((0.5 * f.log_det()).max(0.0))
}

/// Exact `I(X̃_Δ; Y_Δ)` of the sampled channel `Y = sqrt(snr)·X̃ + B`.
pub fn sampled_mi_gaussian(params: &OuParams, snr: f64, grid: &SamplingGrid) -> Result<MiEstimate> {
    check_snr(snr)?;
    let value = if params.power == 0.0 || snr == 0.0 {
        0.0
    } else {
        let cov = ou_increment_covariance(params, grid);
        sampled_mi_from_increment_cov(&cov, snr, grid)?
    };
    Ok(MiEstimate { value, method: MiMethod::Logdet, grid_points: grid.len(), horizon: grid.horizon() })
}

/// Sampled MI over dyadic levels `levels`, evaluated in parallel.
pub fn sampled_mi_dyadic_sequence(
    params: &OuParams,
    snr: f64,
    horizon: f64,
    levels: impl IntoIterator<Item = u32>,
) -> Result<Vec<MiEstimate>> {
    let levels: Vec<u32> = levels.into_iter().collect();
    levels
        .par_iter()
        .map(|&k| {
            let g = SamplingGrid::dyadic(horizon, k)?;
            sampled_mi_gaussian(params, snr, &g)
        })
        .collect()
}

/// Degenerate "constant level" input `X(t) ≡ Z ~ N(0, P)` (the `a → 0`
/// limit), evaluated through the same log-det machinery. The exact value is
/// `½ ln(1 + snr·P·T)` on every grid.
pub fn constant_level_mi(power: f64, snr: f64, grid: &SamplingGrid) -> Result<MiEstimate> {
    check_power(power)?;
    check_snr(snr)?;
    let d: Vec<f64> = grid.steps().collect();
    let n = d.len();
    let m = DMatrix::from_fn(n, n, |i, j| power * d[i] * d[j]);
    let value = sampled_mi_from_increment_cov(&CovarianceMatrix::from_symmetric_unchecked(m), snr, grid)?;
    Ok(MiEstimate { value, method: MiMethod::Logdet, grid_points: grid.len(), horizon: grid.horizon() })
}

/// One input of a linear output `Y = Σ_k gain_k·X̃_k + B` with independent
/// stationary OU inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuInput {
    pub params: OuParams,
    pub gain: f64,
}

impl OuInput {
    pub fn new(params: OuParams, gain: f64) -> Self {
        Self { params, gain }
    }
}

/// `ln det` of the whitened output covariance `D^{-1/2} Cov(ΔY) D^{-1/2}`
/// for `Y = Σ_k gain_k·X̃_k + B`, `D = diag(Δ_i)`. This is `ln det Cov(Y_Δ)`
/// minus the noise-only value `Σ ln Δ_i`, so MI terms are half differences.
///
/// Inputs sharing a mean-reversion rate are merged into one OU input of
/// power `Σ gain_k² P_k` and handled by the innovations recursion in `O(n)`;
/// mixed rates fall back to the dense route.
pub fn output_log_det(inputs: &[OuInput], grid: &Arc<SamplingGrid>) -> Result<f64> {
    let active: Vec<&OuInput> = inputs.iter().filter(|i| i.gain != 0.0 && i.params.power != 0.0).collect();
    if active.is_empty() {
        return Ok(0.0);
    }
    let rate = active[0].params.rate;
    if active.iter().all(|i| i.params.rate == rate) {
        let power: f64 = active.iter().map(|i| i.gain * i.gain * i.params.power).sum();
        let merged = OuParams::new(rate, power)?;
        return innovations_log_det(&merged, 1.0, grid);
    }
    let n = grid.intervals();
    let mut total = CovarianceMatrix::zeros(n);
    for i in &active {
        total = total.add_scaled(&ou_increment_covariance(&i.params, grid), i.gain * i.gain);
    }
    Ok(2.0 * sampled_mi_from_increment_cov(&total, 1.0, grid)?)
}

/// Exact sampled MI through the Kalman innovations: `½ Σ ln(S_i / Δ_i)`.
pub fn sampled_mi_innovations(params: &OuParams, snr: f64, grid: &Arc<SamplingGrid>) -> Result<MiEstimate> {
    check_snr(snr)?;
    let out = output_log_det(&[OuInput::new(*params, snr.sqrt())], grid)?;
    Ok(MiEstimate {
        value: (0.5 * out).max(0.0),
        method: MiMethod::Logdet,
        grid_points: grid.len(),
        horizon: grid.horizon(),
    })
}

/// The exact sampled information quantities of the two-user channel
/// `Y = g_1 X̃_1 + g_2 X̃_2 + B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoUserMi {
    /// `I(X_1, X_2; Y)`
    pub joint: f64,
    /// `I(X_1; Y | X_2)`
    pub first_given_second: f64,
    /// `I(X_2; Y | X_1)`
    pub second_given_first: f64,
    /// `I(X_1; Y)`
    pub first: f64,
    /// `I(X_2; Y)`
    pub second: f64,
    pub horizon: f64,
}

impl TwoUserMi {
    /// Largest violation of `I(X1,X2;Y) = I(X1;Y) + I(X2;Y|X1) = I(X2;Y) + I(X1;Y|X2)`.
    pub fn chain_rule_gap(&self) -> f64 {
        let a = (self.joint - self.first - self.second_given_first).abs();
        let b = (self.joint - self.second - self.first_given_second).abs();
        a.max(b)
    }
}

/// All five sampled MI terms of a two-user Gaussian MAC output.
pub fn two_user_mi(first: OuInput, second: OuInput, grid: &Arc<SamplingGrid>) -> Result<TwoUserMi> {
    let noise = output_log_det(&[], grid)?;
    let both = output_log_det(&[first, second], grid)?;
    let only1 = output_log_det(&[first], grid)?;
    let only2 = output_log_det(&[second], grid)?;
    Ok(TwoUserMi {
        joint: 0.5 * (both - noise),
        first_given_second: 0.5 * (only1 - noise),
        second_given_first: 0.5 * (only2 - noise),
        first: 0.5 * (both - only2),
        second: 0.5 * (both - only1),
        horizon: grid.horizon(),
    })
}

/// Linear feedback scheme for a Gaussian message `θ ~ N(0, var0)`:
/// `X(t) = γ(t)(θ - E[θ | Y_0^t])` with `γ(t)² = P / var(θ | Y_0^t)`, so the
/// input power is exactly `P` and `var(θ | Y_0^t) = var0·e^{-Pt}`.
///
/// Under this scheme `Y` is itself a standard Brownian motion (it is the
/// innovation process) and `Cov(θ, Y(t)) = ∫_0^t sqrt(P·var0) e^{-Ps/2} ds`,
/// so `var(θ | Y_Δ) = var0 - Σ_i (Δc_i)² / Δ_i` exactly. A horizon of zero
/// (only the sample at 0) carries no information.
pub fn feedback_linear_mi(power: f64, var0: f64, horizon: f64, grid: Option<&SamplingGrid>) -> Result<MiEstimate> {
    if !(power > 0.0) || !power.is_finite() {
        return Err(invalid("power", format!("must be positive, got {power}")));
    }
    if !(var0 > 0.0) || !var0.is_finite() {
        return Err(invalid("var0", format!("must be positive, got {var0}")));
    }
    if horizon == 0.0 {
        return Ok(MiEstimate { value: 0.0, method: MiMethod::FeedbackLogdet, grid_points: 1, horizon: 0.0 });
    }
    check_horizon(horizon)?;
    let grid = grid.ok_or_else(|| invalid("grid", "required for a positive horizon"))?;
    if grid.horizon() != horizon {
        return Err(invalid("grid", format!("horizon {} does not match {horizon}", grid.horizon())));
    }
    // c(t) = 2 sqrt(var0/P) (1 - e^{-Pt/2})
    let amp = 2.0 * (var0 / power).sqrt();
    let c = |t: f64| -amp * (-(0.5 * power * t)).exp_m1();
    let explained: f64 = grid
        .times()
        .windows(2)
        .map(|w| {
            let dc = c(w[1]) - c(w[0]);
            dc * dc / (w[1] - w[0])
        })
        .sum();
    let residual = var0 - explained;
    Ok(MiEstimate {
        value: 0.5 * (var0 / residual).ln(),
        method: MiMethod::FeedbackLogdet,
        grid_points: grid.len(),
        horizon,
    })
}

/// `dI_T/dsnr = ½ ∫_0^T E[(X - E[X | Y_0^T])²] dt` (non-causal MMSE), by
/// Simpson's rule on a uniform grid.
pub fn mi_derivative_snr(params: &OuParams, snr: f64, horizon: f64) -> Result<f64> {
    check_snr(snr)?;
    check_horizon(horizon)?;
    if params.power == 0.0 {
        return Ok(0.0);
    }
    let grid = Arc::new(SamplingGrid::uniform(horizon, SMOOTHER_GRID_INTERVALS)?);
    let profile = smoothed_variance_profile(params, snr, &grid)?;
    let h = horizon / SMOOTHER_GRID_INTERVALS as f64;
    let n = profile.len() - 1;
    let mut sum = profile[0] + profile[n];
    for (i, v) in profile.iter().enumerate().take(n).skip(1) {
        sum += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    Ok(0.5 * sum * h / 3.0)
}

/// Table of `I_T(snr)/snr` with its monotonicity verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrMonotonicity {
    /// `(snr, I_T(snr), I_T(snr)/snr)` rows.
    pub table: Vec<(f64, f64, f64)>,
    pub nonincreasing: bool,
}

/// Slack allowed when comparing consecutive `I/snr` values.
pub const MONOTONICITY_SLACK: f64 = 1e-9;

pub fn mi_over_snr_monotonicity(params: &OuParams, snrs: &[f64], horizon: f64) -> Result<SnrMonotonicity> {
    if snrs.is_empty() {
        return Err(invalid("snr_list", "must not be empty"));
    }
    if snrs.iter().any(|&s| !(s > 0.0)) || snrs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("snr_list", "must be positive and strictly increasing"));
    }
    let table = snrs
        .par_iter()
        .map(|&s| duncan_mi(params, s, horizon).map(|m| (s, m.value, m.value / s)))
        .collect::<Result<Vec<_>>>()?;
    let nonincreasing = table.windows(2).all(|w| w[1].2 <= w[0].2 + MONOTONICITY_SLACK);
    Ok(SnrMonotonicity { table, nonincreasing })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: f64, pw: f64) -> OuParams {
        OuParams::new(a, pw).unwrap()
    }

    #[test]
    fn bandwidth_formulas() {
        assert_eq!(finite_bandwidth_capacity(0.0, 3.0).unwrap(), 0.0);
        assert!((finite_bandwidth_capacity(2.0, 1.0).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((finite_bandwidth_capacity(1.0, 1e6).unwrap() - 0.5).abs() < 2e-7);
        assert_eq!(infinite_bandwidth_capacity(0.0).unwrap(), 0.0);
        assert_eq!(infinite_bandwidth_capacity(2.0).unwrap(), 1.0);
        assert!(finite_bandwidth_capacity(1.0, 0.0).is_err());
        assert!(finite_bandwidth_capacity(-1.0, 1.0).is_err());
    }

    #[test]
    fn bandwidth_gap_shrinks() {
        let ws = [1.0, 10.0, 1e2, 1e3];
        let gaps: Vec<f64> = ws.iter().map(|&w| 1.0 - finite_bandwidth_capacity(2.0, w).unwrap()).collect();
        assert!(gaps.windows(2).all(|g| g[1] < g[0]));
    }

    #[test]
    fn duncan_zero_snr() {
        assert_eq!(duncan_mi(&p(1.0, 1.0), 0.0, 3.0).unwrap().value, 0.0);
    }

    #[test]
    fn integrated_covariance_diagonal() {
        let g = SamplingGrid::dyadic(1.0, 2).unwrap();
        let k = ou_integrated_covariance(&p(1.0, 1.0), &g);
        assert!((k.get(3, 3) - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        let z = ou_integrated_covariance(&p(1.0, 0.0), &g);
        assert!(z.matrix().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn increment_covariance_matches_differenced_integral_covariance() {
        let params = p(1.4, 0.9);
        let g = SamplingGrid::from_times(vec![0.0, 0.1, 0.35, 0.4, 1.2, 2.0]).unwrap();
        let k = ou_integrated_covariance(&params, &g);
        let c = ou_increment_covariance(&params, &g);
        let n = g.intervals();
        let kk = |i: usize, j: usize| if i == 0 || j == 0 { 0.0 } else { k.get(i - 1, j - 1) };
        for i in 1..=n {
            for j in 1..=n {
                let d = kk(i, j) - kk(i - 1, j) - kk(i, j - 1) + kk(i - 1, j - 1);
                assert!((d - c.get(i - 1, j - 1)).abs() < 1e-13, "({i},{j})");
            }
        }
    }

    #[test]
    fn constant_level_oracle() {
        let g = SamplingGrid::dyadic(1.0, 0).unwrap();
        let v = constant_level_mi(1.0, 1.0, &g).unwrap().value;
        assert!((v - 0.5 * 2f64.ln()).abs() < 1e-12);
        let fine = SamplingGrid::dyadic(1.0, 6).unwrap();
        let v = constant_level_mi(1.0, 1.0, &fine).unwrap().value;
        assert!((v - 0.5 * 2f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn zero_power_sampled_mi() {
        for k in 0..6 {
            let g = SamplingGrid::dyadic(1.0, k).unwrap();
            assert_eq!(sampled_mi_gaussian(&p(1.0, 0.0), 1.0, &g).unwrap().value, 0.0);
        }
    }

    #[test]
    fn feedback_edge_cases() {
        assert_eq!(feedback_linear_mi(1.0, 1.0, 0.0, None).unwrap().value, 0.0);
        assert!(feedback_linear_mi(1.0, 1.0, 1.0, None).is_err());
        assert!(feedback_linear_mi(0.0, 1.0, 1.0, None).is_err());
        let g = SamplingGrid::dyadic(2.0, 3).unwrap();
        assert!(feedback_linear_mi(1.0, 1.0, 1.0, Some(&g)).is_err());
    }

    #[test]
    fn derivative_zero_power() {
        assert_eq!(mi_derivative_snr(&p(1.0, 0.0), 1.0, 4.0).unwrap(), 0.0);
    }

    #[test]
    fn monotonicity_input_validation() {
        let params = p(1.0, 1.0);
        assert!(mi_over_snr_monotonicity(&params, &[], 1.0).is_err());
        assert!(mi_over_snr_monotonicity(&params, &[2.0, 1.0], 1.0).is_err());
        assert!(mi_over_snr_monotonicity(&params, &[0.0, 1.0], 1.0).is_err());
        let single = mi_over_snr_monotonicity(&params, &[3.0], 1.0).unwrap();
        assert!(single.nonincreasing);
    }

    #[test]
    fn two_user_chain_rule_on_small_grid() {
        let g = Arc::new(SamplingGrid::dyadic(2.0, 6).unwrap());
        let m = two_user_mi(OuInput::new(p(1.0, 1.0), 1.0), OuInput::new(p(3.0, 2.0), 0.5), &g).unwrap();
        assert!(m.chain_rule_gap() < 1e-9);
        assert!(m.first <= m.first_given_second + 1e-12);
    }
}
