use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::grid::SamplingGrid;
use crate::paths::{average_power, sample_ou_integrated, OuParams, OuSample};
use crate::seed::RngSeed;

/// Largest codebook accepted unless a caller raises the guard.
pub const DEFAULT_CODEBOOK_GUARD: u64 = 1 << 14;

/// `⌈e^{RT}⌉`, with a relative slack of 1e-12 so that `RT = ln k` gives `k`.
pub fn codebook_size(rate: f64, horizon: f64) -> Result<u64> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(invalid("rate", format!("must be finite and >= 0, got {rate}")));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(invalid("horizon", format!("must be finite and > 0, got {horizon}")));
    }
    let n = (rate * horizon).exp();
    if n >= u64::MAX as f64 {
        return Err(invalid("rate", format!("codebook size e^(R*T) = e^{} does not fit in 64 bits", rate * horizon)));
    }
    Ok(((n * (1.0 - 1e-12)).ceil() as u64).max(1))
}

#[derive(Debug, Clone, PartialEq)]
enum Members {
    All(u64),
    Subset(Vec<u64>),
}

/// A seeded random codebook of OU paths on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    params: OuParams,
    rate: f64,
    grid: Arc<SamplingGrid>,
    seed: RngSeed,
    members: Members,
}

impl Codebook {
    /// `⌈e^{RT}⌉` independent stationary OU codewords, `T` the grid horizon.
    pub fn generate(params: OuParams, rate: f64, grid: &Arc<SamplingGrid>, seed: RngSeed, guard: u64) -> Result<Self> {
        let size = codebook_size(rate, grid.horizon())?;
        if size > guard {
            return Err(Error::CodebookTooLarge { size, max: guard });
        }
        Ok(Self { params, rate, grid: grid.clone(), seed, members: Members::All(size) })
    }

    pub fn params(&self) -> &OuParams {
        &self.params
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn horizon(&self) -> f64 {
        self.grid.horizon()
    }

    pub fn grid(&self) -> &Arc<SamplingGrid> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        match &self.members {
            Members::All(n) => *n as usize,
            Members::Subset(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Message index (position in the original book) of entry `k`.
    pub fn message(&self, k: usize) -> u64 {
        match &self.members {
            Members::All(_) => k as u64,
            Members::Subset(v) => v[k],
        }
    }

    /// Entry `k`: the signal and its exact running integral.
    pub fn codeword(&self, k: usize) -> OuSample {
        assert!(k < self.len(), "codeword {k} out of range");
        sample_ou_integrated(&self.params, &self.grid, self.seed.child(self.message(k)))
    }

    pub fn codewords(&self) -> impl Iterator<Item = OuSample> + '_ {
        (0..self.len()).map(|k| self.codeword(k))
    }
}

/// Drops every codeword whose average power exceeds `budget`, then, when
/// per-entry error estimates are given, keeps the better half (rounded up;
/// ties broken by position).
pub fn expurgate(book: &Codebook, budget: f64, error_estimates: Option<&[f64]>) -> Result<Codebook> {
    if book.is_empty() {
        return Err(Error::EmptyCodebook(0));
    }
    if let Some(e) = error_estimates {
        if e.len() != book.len() {
            return Err(Error::DimensionMismatch { expected: book.len(), actual: e.len() });
        }
    }
    let mut keep: Vec<usize> = (0..book.len()).filter(|&k| average_power(&book.codeword(k).signal) <= budget).collect();
    if keep.is_empty() {
        return Err(Error::EmptyCodebook(book.len()));
    }
    if let Some(e) = error_estimates {
        keep.sort_by(|&a, &b| e[a].total_cmp(&e[b]).then(a.cmp(&b)));
        keep.truncate(keep.len().div_ceil(2));
        keep.sort_unstable();
    }
    if keep.len() == book.len() {
        return Ok(book.clone());
    }
    Ok(Codebook { members: Members::Subset(keep.into_iter().map(|k| book.message(k)).collect()), ..book.clone() })
}
