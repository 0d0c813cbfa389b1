//! Observation-time grids on `[0, T]`.
//!
//! Dyadic grids are the canonical increasingly refined family: the times of
//! level `k` are `T * i / 2^k`, and because `i / 2^k` is exact in binary the
//! level-`k` times reappear bit-for-bit at every finer level.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered set of observation times `0 = t_0 < t_1 < ... < t_n = T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingGrid {
    horizon: f64,
    times: Vec<f64>,
}

impl SamplingGrid {
    /// Builds a grid from explicit times, checking the ordering invariants.
    pub fn from_times(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidGrid(format!("need at least two times, got {}", times.len())));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidGrid(format!("first time must be 0, got {}", times[0])));
        }
        if let Some(w) = times.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid(format!("times not strictly increasing at {} -> {}", w[0], w[1])));
        }
        let horizon = *times.last().unwrap();
        if !horizon.is_finite() {
            return Err(Error::InvalidGrid("non-finite horizon".into()));
        }
        Ok(Self { horizon, times })
    }

    /// Grid with `2^level` equal intervals on `[0, horizon]`.
    pub fn dyadic(horizon: f64, level: u32) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidGrid(format!("horizon must be positive and finite, got {horizon}")));
        }
        if level > 30 {
            return Err(Error::InvalidGrid(format!("dyadic level {level} too large")));
        }
        let n = 1u64 << level;
        let scale = n as f64;
        let mut times: Vec<f64> = (0..=n).map(|i| horizon * (i as f64 / scale)).collect();
        times[n as usize] = horizon;
        Ok(Self { horizon, times })
    }

    /// Uniform grid with `intervals` equal steps (not necessarily dyadic).
    pub fn uniform(horizon: f64, intervals: usize) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidGrid(format!("horizon must be positive and finite, got {horizon}")));
        }
        if intervals == 0 {
            return Err(Error::InvalidGrid("need at least one interval".into()));
        }
        let scale = intervals as f64;
        let mut times: Vec<f64> = (0..=intervals).map(|i| horizon * (i as f64 / scale)).collect();
        times[intervals] = horizon;
        Ok(Self { horizon, times })
    }

    /// Inserts the midpoint of every interval.
    pub fn refine(&self) -> Self {
        let mut times = Vec::with_capacity(2 * self.times.len() - 1);
        for w in self.times.windows(2) {
            times.push(w[0]);
            times.push(0.5 * (w[0] + w[1]));
        }
        times.push(self.horizon);
        Self { horizon: self.horizon, times }
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Number of grid points (intervals + 1).
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn intervals(&self) -> usize {
        self.times.len() - 1
    }

    /// Interval lengths `t_i - t_{i-1}`.
    pub fn steps(&self) -> impl Iterator<Item = f64> + '_ {
        self.times.windows(2).map(|w| w[1] - w[0])
    }

    pub fn max_step(&self) -> f64 {
        self.steps().fold(0.0, f64::max)
    }

    /// True when every time of `other` also appears in `self`.
    pub fn contains_all(&self, other: &SamplingGrid) -> bool {
        let mut it = self.times.iter().peekable();
        'outer: for &t in &other.times {
            while let Some(&&s) = it.peek() {
                if s == t {
                    it.next();
                    continue 'outer;
                }
                if s > t {
                    return false;
                }
                it.next();
            }
            return false;
        }
        true
    }

    /// The sub-grid of times `<= until` (with `until` itself appended if needed).
    pub fn truncate(&self, until: f64) -> Result<Self> {
        let mut times: Vec<f64> = self.times.iter().copied().filter(|&t| t < until).collect();
        times.push(until);
        Self::from_times(times)
    }

    /// Checks that the grid resolves a process with mean-reversion rate `rate`
    /// with at least `points` samples per time constant `1/rate`.
    pub fn check_resolution(&self, rate: f64, points: f64) -> Result<()> {
        let per = 1.0 / (rate * self.max_step());
        if per + 1e-12 < points {
            return Err(Error::GridTooCoarse { points_per_time_constant: per, required: points });
        }
        Ok(())
    }
}
