//! Log Radon–Nikodym derivatives on sampled paths and the joint-typicality
//! decoder.
//!
//! Everything is evaluated on the increments of the integrated inputs
//! `X̃_Δ` and of the output `Y_Δ`, where the law is exactly Gaussian:
//! `Y_Δ | x = g·x̃_Δ + N(0, D)` with `D = diag(Δ_i)`.

use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::grid::SamplingGrid;
use crate::linalg::{CholeskyFactor, CovarianceMatrix};
use crate::mi::ou_increment_covariance;
use crate::paths::{OuParams, Path};

use super::codebook::Codebook;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

fn same_grid(grid: &SamplingGrid, path: &Path) -> Result<()> {
    if path.grid() != grid {
        return Err(Error::InvalidGrid("path is not on the model grid".into()));
    }
    Ok(())
}

/// `log N(y; mean, D)` for diagonal `D`.
pub(crate) struct DiagonalNoise {
    steps: Vec<f64>,
    constant: f64,
}

impl DiagonalNoise {
    fn new(grid: &SamplingGrid) -> Self {
        let steps: Vec<f64> = grid.steps().collect();
        let constant = -0.5 * steps.iter().map(|d| LN_2PI + d.ln()).sum::<f64>();
        Self { steps, constant }
    }

    /// `log N(y; Σ_k g_k m_k, D)`.
    fn log_density(&self, y: &[f64], means: &[(f64, &[f64])]) -> f64 {
        let mut q = 0.0;
        for i in 0..y.len() {
            let mut r = y[i];
            for (g, m) in means {
                r -= g * m[i];
            }
            q += r * r / self.steps[i];
        }
        self.constant - 0.5 * q
    }
}

fn gaussian_log_density(f: &CholeskyFactor, log_det: f64, y: &[f64], gain: f64, mean: Option<&[f64]>) -> f64 {
    let q = match mean {
        Some(m) => {
            let r: Vec<f64> = y.iter().zip(m).map(|(y, m)| y - gain * m).collect();
            f.quad_form(&r)
        }
        None => f.quad_form(y),
    };
    -0.5 * (q + log_det + y.len() as f64 * LN_2PI)
}

struct Factored {
    factor: CholeskyFactor,
    log_det: f64,
}

impl Factored {
    fn new(cov: CovarianceMatrix, context: &'static str) -> Result<Self> {
        let factor = cov.factor(context)?;
        let log_det = factor.log_det();
        Ok(Self { factor, log_det })
    }

    fn log_density(&self, y: &[f64], gain: f64, mean: Option<&[f64]>) -> f64 {
        gaussian_log_density(&self.factor, self.log_det, y, gain, mean)
    }
}

/// Exact law of two independent OU inputs through
/// `Y = g_1 X̃_1 + g_2 X̃_2 + B` on a grid.
pub struct MacModel {
    grid: Arc<SamplingGrid>,
    gains: [f64; 2],
    noise: DiagonalNoise,
    output: Factored,
    given_second: Factored,
    given_first: Factored,
    mi: [f64; 3],
}

impl MacModel {
    pub fn new(inputs: [OuParams; 2], gains: [f64; 2], grid: &Arc<SamplingGrid>) -> Result<Self> {
        for g in gains {
            if !g.is_finite() {
                return Err(invalid("gains", "must be finite"));
            }
        }
        let steps: Vec<f64> = grid.steps().collect();
        let c1 = ou_increment_covariance(&inputs[0], grid);
        let c2 = ou_increment_covariance(&inputs[1], grid);
        let zero = CovarianceMatrix::zeros(steps.len());
        let s1 = zero.add_scaled(&c1, gains[0] * gains[0]);
        let s2 = zero.add_scaled(&c2, gains[1] * gains[1]);
        let output = Factored::new(s1.add_scaled(&s2, 1.0).plus_diagonal(&steps), "output law")?;
        // Y | x2 carries the first input as noise and vice versa
        let given_second = Factored::new(s1.plus_diagonal(&steps), "output given second input")?;
        let given_first = Factored::new(s2.plus_diagonal(&steps), "output given first input")?;
        let noise_ld: f64 = steps.iter().map(|d| d.ln()).sum();
        let mi = [
            0.5 * (output.log_det - noise_ld),
            0.5 * (given_second.log_det - noise_ld),
            0.5 * (given_first.log_det - noise_ld),
        ];
        Ok(Self { grid: grid.clone(), gains, noise: DiagonalNoise::new(grid), output, given_second, given_first, mi })
    }

    pub fn grid(&self) -> &Arc<SamplingGrid> {
        &self.grid
    }

    pub fn gains(&self) -> [f64; 2] {
        self.gains
    }

    /// Exact sampled `[I(X1,X2;Y), I(X1;Y|X2), I(X2;Y|X1)]` in nats; these
    /// are the means of the three log-derivatives.
    pub fn mutual_informations(&self) -> [f64; 3] {
        self.mi
    }

    /// Precomputed terms for one received vector.
    fn prepare<'a>(&'a self, y: &'a [f64]) -> Received<'a> {
        Received { model: self, y, log_marginal: self.output.log_density(y, 1.0, None) }
    }
}

struct Received<'a> {
    model: &'a MacModel,
    y: &'a [f64],
    log_marginal: f64,
}

impl Received<'_> {
    fn conditional(&self, x1: &[f64], x2: &[f64]) -> f64 {
        let g = self.model.gains;
        self.model.noise.log_density(self.y, &[(g[0], x1), (g[1], x2)])
    }

    /// `log p(y | x2)`.
    fn given_second(&self, x2: &[f64]) -> f64 {
        self.model.given_second.log_density(self.y, self.model.gains[1], Some(x2))
    }

    /// `log p(y | x1)`.
    fn given_first(&self, x1: &[f64]) -> f64 {
        self.model.given_first.log_density(self.y, self.model.gains[0], Some(x1))
    }
}

/// `(log φ1, log φ2, log φ3)`: the log-densities of the joint law of
/// `(X1, X2, Y)` against `μ_{X1X2}×μ_Y`, `μ_{X1}×μ_{X2Y}` and
/// `μ_{X2}×μ_{X1Y}`. `x1`, `x2` are the integrated inputs `∫X`.
pub fn log_rn_derivatives(x1: &Path, x2: &Path, y: &Path, model: &MacModel) -> Result<[f64; 3]> {
    for p in [x1, x2, y] {
        same_grid(&model.grid, p)?;
    }
    let (x1, x2, y) = (x1.increments(), x2.increments(), y.increments());
    let r = model.prepare(&y);
    let c = r.conditional(&x1, &x2);
    Ok([c - r.log_marginal, c - r.given_second(&x2), c - r.given_first(&x1)])
}

/// Joint-typicality set `|log φ_k - I_k| <= εT` for all `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypicalityTest {
    pub epsilon: f64,
    pub horizon: f64,
    pub mi: [f64; 3],
}

impl TypicalityTest {
    pub fn new(epsilon: f64, horizon: f64, mi: [f64; 3]) -> Result<Self> {
        if !(epsilon >= 0.0) || epsilon.is_nan() {
            return Err(invalid("epsilon", format!("must be >= 0, got {epsilon}")));
        }
        if !(horizon > 0.0) {
            return Err(invalid("horizon", format!("must be > 0, got {horizon}")));
        }
        if mi.iter().any(|v| !(*v >= 0.0)) {
            return Err(invalid("mi", "reference values must be >= 0"));
        }
        Ok(Self { epsilon, horizon, mi })
    }

    fn slack(&self) -> f64 {
        self.epsilon * self.horizon
    }

    pub fn accepts(&self, k: usize, log_phi: f64) -> bool {
        (log_phi - self.mi[k]).abs() <= self.slack()
    }

    pub fn accepts_all(&self, log_phi: [f64; 3]) -> bool {
        (0..3).all(|k| self.accepts(k, log_phi[k]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeOutcome {
    /// The unique typical pair, as entry positions in the two books.
    Decoded(usize, usize),
    NoneTypical,
    /// At least two typical pairs; the scan stops at the second one.
    Multiple,
}

pub(crate) fn integrated_increments(book: &Codebook, k: usize) -> Vec<f64> {
    book.codeword(k).integral.increments()
}

/// Scans all pairs for the unique jointly typical one.
pub fn typicality_decode(
    book1: &Codebook,
    book2: &Codebook,
    y: &Path,
    model: &MacModel,
    test: &TypicalityTest,
) -> Result<DecodeOutcome> {
    same_grid(&model.grid, y)?;
    for b in [book1, book2] {
        if **b.grid() != *model.grid {
            return Err(Error::InvalidGrid("codebook is not on the model grid".into()));
        }
    }
    let y = y.increments();
    let r = model.prepare(&y);
    let second: Vec<(Vec<f64>, f64)> = (0..book2.len())
        .map(|j| {
            let x = integrated_increments(book2, j);
            let l = r.given_second(&x);
            (x, l)
        })
        .collect();
    let mut found = None;
    for i in 0..book1.len() {
        let x1 = integrated_increments(book1, i);
        let mut given_first = None;
        for (j, (x2, l2)) in second.iter().enumerate() {
            let c = r.conditional(&x1, x2);
            if !test.accepts(0, c - r.log_marginal) || !test.accepts(1, c - l2) {
                continue;
            }
            let l3 = *given_first.get_or_insert_with(|| r.given_first(&x1));
            if test.accepts(2, c - l3) {
                if found.is_some() {
                    return Ok(DecodeOutcome::Multiple);
                }
                found = Some((i, j));
            }
        }
    }
    Ok(match found {
        Some((i, j)) => DecodeOutcome::Decoded(i, j),
        None => DecodeOutcome::NoneTypical,
    })
}

/// First error event found when entry `(0, 0)` was sent, scanning in the
/// order: true pair atypical, wrong first only, wrong second only, both
/// wrong. `None` means `(0, 0)` is the unique typical pair.
pub(crate) fn first_mac_error(
    book1: &Codebook,
    book2: &Codebook,
    sent: (&[f64], &[f64]),
    y: &[f64],
    model: &MacModel,
    test: &TypicalityTest,
) -> (bool, Option<MacErrorEvent>) {
    let r = model.prepare(y);
    let (s1, s2) = sent;
    let typical = |c: f64, l2: f64, l3: &mut dyn FnMut() -> f64| {
        test.accepts(0, c - r.log_marginal) && test.accepts(1, c - l2) && test.accepts(2, c - l3())
    };
    let l2_sent = r.given_second(s2);
    let l3_sent = r.given_first(s1);
    let true_typical = typical(r.conditional(s1, s2), l2_sent, &mut || l3_sent);
    if !true_typical {
        return (false, Some(MacErrorEvent::TruePairAtypical));
    }
    for i in 1..book1.len() {
        let x1 = integrated_increments(book1, i);
        if typical(r.conditional(&x1, s2), l2_sent, &mut || r.given_first(&x1)) {
            return (true, Some(MacErrorEvent::WrongFirst));
        }
    }
    let second: Vec<(Vec<f64>, f64)> = (1..book2.len())
        .map(|j| {
            let x = integrated_increments(book2, j);
            let l = r.given_second(&x);
            (x, l)
        })
        .collect();
    for (x2, l2) in &second {
        if typical(r.conditional(s1, x2), *l2, &mut || l3_sent) {
            return (true, Some(MacErrorEvent::WrongSecond));
        }
    }
    for i in 1..book1.len() {
        let x1 = integrated_increments(book1, i);
        let mut l3 = None;
        for (x2, l2) in &second {
            if typical(r.conditional(&x1, x2), *l2, &mut || *l3.get_or_insert_with(|| r.given_first(&x1))) {
                return (true, Some(MacErrorEvent::WrongBoth));
            }
        }
    }
    (true, None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum MacErrorEvent {
    TruePairAtypical,
    WrongFirst,
    WrongSecond,
    WrongBoth,
}

/// One input observed through `Y = g X̃ + Σ_k h_k Z̃_k + B`, the `Z_k`
/// independent OU interference folded into the Gaussian noise.
pub struct SingleUserModel {
    grid: Arc<SamplingGrid>,
    gain: f64,
    noise: Factored,
    output: Factored,
    mi: f64,
}

impl SingleUserModel {
    pub fn new(input: OuParams, gain: f64, interference: &[(OuParams, f64)], grid: &Arc<SamplingGrid>) -> Result<Self> {
        let steps: Vec<f64> = grid.steps().collect();
        let mut noise = CovarianceMatrix::zeros(steps.len());
        for (p, h) in interference {
            noise = noise.add_scaled(&ou_increment_covariance(p, grid), h * h);
        }
        let noise = noise.plus_diagonal(&steps);
        let output = noise.add_scaled(&ou_increment_covariance(&input, grid), gain * gain);
        let noise = Factored::new(noise, "interference-plus-noise law")?;
        let output = Factored::new(output, "output law")?;
        let mi = 0.5 * (output.log_det - noise.log_det);
        Ok(Self { grid: grid.clone(), gain, noise, output, mi })
    }

    pub fn grid(&self) -> &Arc<SamplingGrid> {
        &self.grid
    }

    /// Exact sampled `I(X;Y)` in nats.
    pub fn mutual_information(&self) -> f64 {
        self.mi
    }

    pub(crate) fn log_marginal(&self, y: &[f64]) -> f64 {
        self.output.log_density(y, 1.0, None)
    }

    /// `log p(y|x) - log p(y)` from increment vectors and a cached marginal.
    pub(crate) fn log_phi_with(&self, x: &[f64], y: &[f64], log_marginal: f64) -> f64 {
        self.noise.log_density(y, self.gain, Some(x)) - log_marginal
    }

    /// `log dμ_{XY}/d(μ_X×μ_Y)` at integrated input `x` and output `y`.
    pub fn log_phi(&self, x: &Path, y: &Path) -> Result<f64> {
        same_grid(&self.grid, x)?;
        same_grid(&self.grid, y)?;
        let y = y.increments();
        Ok(self.log_phi_with(&x.increments(), &y, self.log_marginal(&y)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mi::{two_user_mi, OuInput};
    use crate::paths::{sample_brownian, sample_ou_integrated};
    use crate::seed::RngSeed;

    fn grid(t: f64, k: u32) -> Arc<SamplingGrid> {
        Arc::new(SamplingGrid::dyadic(t, k).unwrap())
    }

    fn channel(x1: &Path, x2: &Path, g: [f64; 2], seed: RngSeed) -> Path {
        let b = sample_brownian(x1.shared_grid(), seed);
        b.add_scaled(x1, g[0]).unwrap().add_scaled(x2, g[1]).unwrap()
    }

    #[test]
    fn zero_power_gives_zero_log_derivatives() {
        let g = grid(2.0, 5);
        let p = OuParams::new(1.0, 0.0).unwrap();
        let m = MacModel::new([p, p], [1.0, 1.0], &g).unwrap();
        let x1 = sample_ou_integrated(&p, &g, RngSeed::new(1, 1)).integral;
        let x2 = sample_ou_integrated(&p, &g, RngSeed::new(1, 2)).integral;
        let y = channel(&x1, &x2, [1.0, 1.0], RngSeed::new(1, 3));
        let l = log_rn_derivatives(&x1, &x2, &y, &m).unwrap();
        for v in l {
            assert!(v.abs() < 1e-12, "{l:?}");
        }
        assert_eq!(m.mutual_informations(), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn model_mi_matches_engine() {
        let g = grid(4.0, 7);
        let p1 = OuParams::new(1.0, 1.8).unwrap();
        let p2 = OuParams::new(2.0, 1.0).unwrap();
        let m = MacModel::new([p1, p2], [1.0, 0.7], &g).unwrap();
        let e = two_user_mi(OuInput::new(p1, 1.0), OuInput::new(p2, 0.7), &g).unwrap();
        let mi = m.mutual_informations();
        assert!((mi[0] - e.joint).abs() < 1e-9);
        assert!((mi[1] - e.first_given_second).abs() < 1e-9);
        assert!((mi[2] - e.second_given_first).abs() < 1e-9);
    }

    #[test]
    fn grid_mismatch_rejected() {
        let g = grid(2.0, 5);
        let p = OuParams::new(1.0, 1.0).unwrap();
        let m = MacModel::new([p, p], [1.0, 1.0], &g).unwrap();
        let x = sample_ou_integrated(&p, &grid(2.0, 4), RngSeed::master(1)).integral;
        assert!(log_rn_derivatives(&x, &x, &x, &m).is_err());
    }

    #[test]
    fn decode_trivial_cases() {
        let g = grid(2.0, 5);
        let p = OuParams::new(1.0, 1.0).unwrap();
        let m = MacModel::new([p, p], [1.0, 1.0], &g).unwrap();
        let b1 = Codebook::generate(p, 0.0, &g, RngSeed::new(2, 1), 16).unwrap();
        let b2 = Codebook::generate(p, 0.0, &g, RngSeed::new(2, 2), 16).unwrap();
        let y = channel(&b1.codeword(0).integral, &b2.codeword(0).integral, [1.0, 1.0], RngSeed::new(2, 3));
        let loose = TypicalityTest::new(1e6, 2.0, m.mutual_informations()).unwrap();
        assert_eq!(typicality_decode(&b1, &b2, &y, &m, &loose).unwrap(), DecodeOutcome::Decoded(0, 0));
        let exact = TypicalityTest::new(0.0, 2.0, m.mutual_informations()).unwrap();
        assert_eq!(typicality_decode(&b1, &b2, &y, &m, &exact).unwrap(), DecodeOutcome::NoneTypical);
        let b3 = Codebook::generate(p, 1.0, &g, RngSeed::new(2, 4), 16).unwrap();
        assert_eq!(typicality_decode(&b3, &b2, &y, &m, &loose).unwrap(), DecodeOutcome::Multiple);
    }

    #[test]
    fn single_user_mi_without_interference_matches_dense() {
        let g = grid(4.0, 7);
        let p = OuParams::new(1.0, 1.0).unwrap();
        let s = SingleUserModel::new(p, 2.0, &[], &g).unwrap();
        let e = crate::mi::sampled_mi_gaussian(&p, 4.0, &g).unwrap();
        assert!((s.mutual_information() - e.value).abs() < 1e-9);
    }

    #[test]
    fn typicality_test_validation() {
        assert!(TypicalityTest::new(-1.0, 1.0, [0.0; 3]).is_err());
        assert!(TypicalityTest::new(0.1, 0.0, [0.0; 3]).is_err());
        assert!(TypicalityTest::new(0.1, 1.0, [-1.0, 0.0, 0.0]).is_err());
    }
}
