//! Brownian and Ornstein–Uhlenbeck sample paths on a [`SamplingGrid`].
//!
//! OU paths are drawn from the exact Gaussian transition law (no SDE
//! discretization) and start from the stationary law, so the marginal at
//! every grid time is `N(0, P)` whatever the grid.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::SamplingGrid;
use crate::seed::RngSeed;

/// Mean-reversion rate `a` (1/s) and stationary power `P` of an OU input
/// `dX = -aX dt + sqrt(2aP) dB`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuParams {
    pub rate: f64,
    pub power: f64,
}

impl OuParams {
    pub fn new(rate: f64, power: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(invalid("rate", format!("must be positive and finite, got {rate}")));
        }
        if !(power >= 0.0) || !power.is_finite() {
            return Err(invalid("power", format!("must be nonnegative and finite, got {power}")));
        }
        Ok(Self { rate, power })
    }

    /// Stationary autocovariance `P e^{-a|lag|}`.
    pub fn autocovariance(&self, lag: f64) -> f64 {
        self.power * (-self.rate * lag.abs()).exp()
    }

    pub fn with_power(self, power: f64) -> Self {
        Self { power, ..self }
    }
}

/// Power spectral density `2aP / (2π(λ² + a²))` of a stationary OU process.
pub fn ou_psd(params: &OuParams, lambda: f64) -> f64 {
    let a = params.rate;
    2.0 * a * params.power / (2.0 * PI * (lambda * lambda + a * a))
}

/// `x - 1 + e^{-x}`, accurate for small `x`.
pub(crate) fn exp_gap2(x: f64) -> f64 {
    if x < 0.1 {
        // sum_{n>=2} (-x)^n / n!
        let mut term = x * x / 2.0;
        let mut sum: f64 = 0.0;
        let mut n = 2.0;
        while term.abs() > 1e-18 * sum.abs().max(f64::MIN_POSITIVE) {
            sum += term;
            n += 1.0;
            term *= -x / n;
        }
        sum
    } else {
        x + (-x).exp_m1()
    }
}

/// `x - 2(1 - e^{-x}) + (1 - e^{-2x})/2`, accurate for small `x`.
fn exp_gap3(x: f64) -> f64 {
    if x < 0.5 {
        // sum_{n>=3} (-1)^{n+1} (2^{n-1} - 2) x^n / n!
        let mut sum: f64 = 0.0;
        let mut pow_over_fact = x * x * x / 6.0;
        let mut two_pow = 4.0;
        let mut sign = 1.0;
        let mut n = 3.0;
        loop {
            let term = sign * (two_pow - 2.0) * pow_over_fact;
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() {
                break;
            }
            n += 1.0;
            pow_over_fact *= x / n;
            two_pow *= 2.0;
            sign = -sign;
        }
        sum
    } else {
        x + 2.0 * (-x).exp_m1() - 0.5 * (-2.0 * x).exp_m1()
    }
}

/// Exact one-step law of an OU process over an interval of length `step`.
///
/// Given `X(t) = x`, the pair `(X(t+step), ∫_t^{t+step} X ds)` is Gaussian with
/// mean `(decay·x, integral_gain·x)` and covariance
/// `[[state_var, cross_cov], [cross_cov, integral_var]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuStep {
    pub decay: f64,
    pub integral_gain: f64,
    pub state_var: f64,
    pub integral_var: f64,
    pub cross_cov: f64,
}

impl OuStep {
    pub fn new(params: &OuParams, step: f64) -> Self {
        let a = params.rate;
        let p = params.power;
        let x = a * step;
        let one_minus_decay = -(-x).exp_m1();
        Self {
            decay: (-x).exp(),
            integral_gain: one_minus_decay / a,
            state_var: -p * (-2.0 * x).exp_m1(),
            integral_var: 2.0 * p * exp_gap3(x) / (a * a),
            cross_cov: p / a * one_minus_decay * one_minus_decay,
        }
    }

    /// Unconditional variance of the interval integral under the stationary law.
    pub fn stationary_integral_var(params: &OuParams, step: f64) -> f64 {
        let a = params.rate;
        2.0 * params.power * exp_gap2(a * step) / (a * a)
    }
}

/// Values of a process on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    grid: Arc<SamplingGrid>,
    values: Vec<f64>,
}

impl Path {
    pub fn new(grid: Arc<SamplingGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(crate::Error::DimensionMismatch { expected: grid.len(), actual: values.len() });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<SamplingGrid>) -> Self {
        let n = grid.len();
        Self { grid, values: vec![0.0; n] }
    }

    pub fn grid(&self) -> &SamplingGrid {
        &self.grid
    }

    pub fn shared_grid(&self) -> &Arc<SamplingGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `value(t_i) - value(t_{i-1})` for each interval.
    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|v| v * factor).collect() }
    }

    /// Pointwise `self + factor * other`; both paths must share a grid.
    pub fn add_scaled(&self, other: &Path, factor: f64) -> Result<Self> {
        if self.grid.times() != other.grid.times() {
            return Err(crate::Error::InvalidGrid("paths live on different grids".into()));
        }
        Ok(Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + factor * b).collect(),
        })
    }
}

/// Standard Brownian motion sampled on the grid, `B(0) = 0`.
pub fn sample_brownian(grid: &Arc<SamplingGrid>, seed: RngSeed) -> Path {
    let mut rng = seed.rng();
    let mut values = Vec::with_capacity(grid.len());
    let mut b = 0.0;
    values.push(b);
    for dt in grid.steps() {
        let z: f64 = rng.sample(StandardNormal);
        b += dt.sqrt() * z;
        values.push(b);
    }
    Path { grid: grid.clone(), values }
}

/// Stationary OU path via the exact transition
/// `X(t_i) = e^{-aΔ} X(t_{i-1}) + N(0, P(1 - e^{-2aΔ}))`.
pub fn sample_ou(params: &OuParams, grid: &Arc<SamplingGrid>, seed: RngSeed) -> Path {
    let mut rng = seed.rng();
    let mut values = Vec::with_capacity(grid.len());
    let z: f64 = rng.sample(StandardNormal);
    let mut x = params.power.sqrt() * z;
    values.push(x);
    for dt in grid.steps() {
        let step = OuStep::new(params, dt);
        let z: f64 = rng.sample(StandardNormal);
        x = step.decay * x + step.state_var.sqrt() * z;
        values.push(x);
    }
    Path { grid: grid.clone(), values }
}

/// An OU path together with its exact running integral `∫_0^t X ds`.
#[derive(Debug, Clone, PartialEq)]
pub struct OuSample {
    pub signal: Path,
    pub integral: Path,
}

/// Draws `(X(t_i), ∫_0^{t_i} X ds)` jointly from the exact Gaussian law, so
/// the integrated path carries no quadrature error.
pub fn sample_ou_integrated(params: &OuParams, grid: &Arc<SamplingGrid>, seed: RngSeed) -> OuSample {
    let mut rng = seed.rng();
    let n = grid.len();
    let mut xs = Vec::with_capacity(n);
    let mut ints = Vec::with_capacity(n);
    let z: f64 = rng.sample(StandardNormal);
    let mut x = params.power.sqrt() * z;
    let mut acc = 0.0;
    xs.push(x);
    ints.push(acc);
    for dt in grid.steps() {
        let step = OuStep::new(params, dt);
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let sd_state = step.state_var.sqrt();
        let (load, resid) = if sd_state > 0.0 {
            let load = step.cross_cov / sd_state;
            (load, (step.integral_var - load * load).max(0.0).sqrt())
        } else {
            (0.0, step.integral_var.max(0.0).sqrt())
        };
        acc += step.integral_gain * x + load * z1 + resid * z2;
        x = step.decay * x + sd_state * z1;
        xs.push(x);
        ints.push(acc);
    }
    OuSample { signal: Path { grid: grid.clone(), values: xs }, integral: Path { grid: grid.clone(), values: ints } }
}

/// `(1/T) ∫_0^T X² ds` by the trapezoid rule on the path's grid.
pub fn average_power(path: &Path) -> f64 {
    let v = &path.values;
    let energy: f64 = path.grid.steps().zip(v.windows(2)).map(|(dt, w)| 0.5 * dt * (w[0] * w[0] + w[1] * w[1])).sum();
    energy / path.grid.horizon()
}

/// Cumulative trapezoid integral, zero at `t_0`.
pub fn integrate_path(path: &Path) -> Path {
    let mut values = Vec::with_capacity(path.values.len());
    let mut acc = 0.0;
    values.push(acc);
    for (dt, w) in path.grid.steps().zip(path.values.windows(2)) {
        acc += 0.5 * dt * (w[0] + w[1]);
        values.push(acc);
    }
    Path { grid: path.grid.clone(), values }
}
