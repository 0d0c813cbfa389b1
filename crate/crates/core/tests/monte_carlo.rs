//! Seeded Monte Carlo checks of path laws, filter error variances and the
//! log Radon–Nikodym machinery. Every check is deterministic given its
//! seeds; tolerances are in standard errors.

use std::sync::Arc;

use ctgauss_core::coding::{log_rn_derivatives, MacModel, TypicalityTest};
use ctgauss_core::filter::{kalman_causal, kalman_smoother};
use ctgauss_core::mi::ou_increment_covariance;
use ctgauss_core::paths::{average_power, sample_brownian, sample_ou, sample_ou_integrated, Path};
use ctgauss_core::{OuParams, RngSeed, SamplingGrid};

struct Moments {
    n: f64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn of(xs: impl IntoIterator<Item = f64>) -> Self {
        let mut m = Moments { n: 0.0, sum: 0.0, sum_sq: 0.0 };
        for x in xs {
            m.n += 1.0;
            m.sum += x;
            m.sum_sq += x * x;
        }
        m
    }

    fn mean(&self) -> f64 {
        self.sum / self.n
    }

    fn var(&self) -> f64 {
        (self.sum_sq - self.sum * self.sum / self.n) / (self.n - 1.0)
    }

    fn se(&self) -> f64 {
        (self.var() / self.n).sqrt()
    }
}

fn grid(t: f64, k: u32) -> Arc<SamplingGrid> {
    Arc::new(SamplingGrid::dyadic(t, k).unwrap())
}

/// Sample variance agrees with `target` within `z` standard errors of a
/// Gaussian variance estimate.
fn variance_close(sample: &[f64], target: f64, z: f64) -> bool {
    let m = Moments::of(sample.iter().copied());
    let se = target * (2.0 / (m.n - 1.0)).sqrt();
    (m.var() - target).abs() <= z * se
}

#[test]
fn brownian_variance_is_time() {
    let g = grid(1.0, 3);
    let paths: Vec<Path> = (0..4000).map(|i| sample_brownian(&g, RngSeed::new(11, i))).collect();
    for (i, &t) in g.times().iter().enumerate().skip(1) {
        let xs: Vec<f64> = paths.iter().map(|p| p.values()[i]).collect();
        assert!(variance_close(&xs, t, 3.0), "t={t}");
        assert!(Moments::of(xs).mean().abs() <= 3.0 * t.sqrt() / 4000f64.sqrt());
    }
}

#[test]
fn ou_is_stationary_with_exponential_covariance() {
    let p = OuParams::new(2.0, 1.5).unwrap();
    let g = grid(2.0, 4);
    let n = 5000;
    let paths: Vec<Path> = (0..n).map(|i| sample_ou(&p, &g, RngSeed::new(12, i))).collect();
    for (i, &t) in g.times().iter().enumerate().step_by(4) {
        let xs: Vec<f64> = paths.iter().map(|q| q.values()[i]).collect();
        assert!(variance_close(&xs, 1.5, 3.0), "t={t}");
        // product of jointly Gaussian pair: Var(X0·Xt) = P² + C²
        let c = p.autocovariance(t);
        let prods = Moments::of(paths.iter().map(|q| q.values()[0] * q.values()[i]));
        let se = ((1.5f64 * 1.5 + c * c) / n as f64).sqrt();
        assert!((prods.mean() - c).abs() <= 3.0 * se, "t={t}");
    }
}

#[test]
fn ou_marginals_agree_across_refinement() {
    let p = OuParams::new(1.0, 1.0).unwrap();
    let coarse = grid(1.0, 2);
    let fine = grid(1.0, 6);
    let n = 4000;
    let a: Vec<Path> = (0..n).map(|i| sample_ou(&p, &coarse, RngSeed::new(13, i))).collect();
    let b: Vec<Path> = (0..n).map(|i| sample_ou(&p, &fine, RngSeed::new(14, i))).collect();
    for (i, &t) in coarse.times().iter().enumerate() {
        let j = fine.times().iter().position(|&s| s == t).unwrap();
        let ma = Moments::of(a.iter().map(|q| q.values()[i]));
        let mb = Moments::of(b.iter().map(|q| q.values()[j]));
        assert!((ma.mean() - mb.mean()).abs() <= 3.0 * (ma.se().powi(2) + mb.se().powi(2)).sqrt(), "t={t}");
        let se = (2.0 / (n as f64 - 1.0)).sqrt() * 2f64.sqrt();
        assert!((ma.var() - mb.var()).abs() <= 3.0 * se, "t={t}");
    }
}

#[test]
fn integrated_increments_match_closed_form_covariance() {
    let p = OuParams::new(1.5, 2.0).unwrap();
    let g = grid(2.0, 3);
    let cov = ou_increment_covariance(&p, &g);
    let n = 6000;
    let incs: Vec<Vec<f64>> =
        (0..n).map(|i| sample_ou_integrated(&p, &g, RngSeed::new(15, i)).integral.increments()).collect();
    let d = g.intervals();
    for i in 0..d {
        for j in i..d {
            let m = Moments::of(incs.iter().map(|v| v[i] * v[j]));
            let c = cov.get(i, j);
            let se = ((cov.get(i, i) * cov.get(j, j) + c * c) / n as f64).sqrt();
            assert!((m.mean() - c).abs() <= 3.0 * se, "({i},{j}) {} vs {c}", m.mean());
        }
    }
}

/// Observation `Y = sqrt(snr)·∫X + B` together with the signal.
fn observe(p: &OuParams, snr: f64, g: &Arc<SamplingGrid>, seed: RngSeed) -> (Path, Path) {
    let s = sample_ou_integrated(p, g, seed.child(0));
    let y = sample_brownian(g, seed.child(1)).add_scaled(&s.integral, snr.sqrt()).unwrap();
    (s.signal, y)
}

#[test]
fn filter_and_smoother_mse_match_predicted_variances() {
    let p = OuParams::new(1.0, 1.0).unwrap();
    let g = grid(2.0, 5);
    let n = 10_000;
    let checkpoints = [0, 8, 16, 24, 32];
    let mut causal = vec![Vec::with_capacity(n); checkpoints.len()];
    let mut smooth = vec![Vec::with_capacity(n); checkpoints.len()];
    let mut predicted = None;
    for t in 0..n {
        let (x, y) = observe(&p, 1.0, &g, RngSeed::new(16, t as u64));
        let f = kalman_smoother(&p, 1.0, &y).unwrap();
        let sm = f.smoothed_mean.as_ref().unwrap();
        for (c, &i) in checkpoints.iter().enumerate() {
            causal[c].push((x.values()[i] - f.causal_mean[i]).powi(2));
            smooth[c].push((x.values()[i] - sm[i]).powi(2));
        }
        predicted.get_or_insert((f.causal_var.clone(), f.smoothed_var.clone().unwrap()));
    }
    let (cv, sv) = predicted.unwrap();
    for (c, &i) in checkpoints.iter().enumerate() {
        let mc = Moments::of(causal[c].iter().copied());
        let ms = Moments::of(smooth[c].iter().copied());
        assert!((mc.mean() - cv[i]).abs() <= 3.0 * mc.se(), "causal i={i}: {} vs {}", mc.mean(), cv[i]);
        assert!((ms.mean() - sv[i]).abs() <= 3.0 * ms.se(), "smoothed i={i}: {} vs {}", ms.mean(), sv[i]);
        // no super-efficiency
        assert!(mc.mean() >= cv[i] - 3.0 * mc.se());
    }
    let causal_only = kalman_causal(&p, 1.0, &observe(&p, 1.0, &g, RngSeed::new(16, 0)).1).unwrap();
    assert_eq!(causal_only.causal_var, cv);
}

#[test]
fn excess_power_fraction_shrinks_with_horizon() {
    let p = OuParams::new(1.0, 1.0).unwrap();
    let fractions: Vec<f64> = [2.0, 8.0, 32.0]
        .iter()
        .map(|&t| {
            let g = Arc::new(SamplingGrid::uniform(t, (16.0 * t) as usize).unwrap());
            let over = (0..2000).filter(|&i| average_power(&sample_ou(&p, &g, RngSeed::new(17, i))) > 1.3).count();
            over as f64 / 2000.0
        })
        .collect();
    assert!(fractions[0] > fractions[1] && fractions[1] > fractions[2], "{fractions:?}");
}

struct Draw {
    x1: Path,
    x2: Path,
    y: Path,
}

fn mac_draw(p: [OuParams; 2], g: &Arc<SamplingGrid>, seed: RngSeed) -> Draw {
    let x1 = sample_ou_integrated(&p[0], g, seed.child(0)).integral;
    let x2 = sample_ou_integrated(&p[1], g, seed.child(1)).integral;
    let y = sample_brownian(g, seed.child(2)).add_scaled(&x1, 1.0).unwrap().add_scaled(&x2, 1.0).unwrap();
    Draw { x1, x2, y }
}

fn mac_setup() -> ([OuParams; 2], Arc<SamplingGrid>, MacModel) {
    let p = [OuParams::new(1.0, 1.0).unwrap(), OuParams::new(1.0, 0.5).unwrap()];
    let g = grid(2.0, 4);
    let model = MacModel::new(p, [1.0, 1.0], &g).unwrap();
    (p, g, model)
}

#[test]
fn log_rn_derivative_averages_to_mutual_information() {
    let (p, g, model) = mac_setup();
    let mi = model.mutual_informations();
    let logs: Vec<[f64; 3]> = (0..10_000)
        .map(|t| {
            let d = mac_draw(p, &g, RngSeed::new(18, t));
            log_rn_derivatives(&d.x1, &d.x2, &d.y, &model).unwrap()
        })
        .collect();
    for k in 0..3 {
        let m = Moments::of(logs.iter().map(|l| l[k]));
        assert!((m.mean() - mi[k]).abs() <= 3.0 * m.se(), "k={k}: {} vs {}", m.mean(), mi[k]);
    }
}

#[test]
fn reciprocal_density_has_mean_at_most_one() {
    let (p, g, model) = mac_setup();
    let m = Moments::of((0..10_000).map(|t| {
        let d = mac_draw(p, &g, RngSeed::new(19, t));
        (-log_rn_derivatives(&d.x1, &d.x2, &d.y, &model).unwrap()[1]).exp()
    }));
    assert!(m.mean() <= 1.0 + 3.0 * m.se(), "{} ± {}", m.mean(), m.se());
}

#[test]
fn impostor_typicality_obeys_change_of_measure_bound() {
    let (p, g, model) = mac_setup();
    let mi = model.mutual_informations();
    let t = g.horizon();
    let eps = 0.5;
    let test = TypicalityTest::new(eps, t, mi).unwrap();
    let n = 20_000;
    let hits = (0..n)
        .filter(|&i| {
            let seed = RngSeed::new(20, i);
            let d = mac_draw(p, &g, seed);
            let impostor = sample_ou_integrated(&p[0], &g, seed.child(3)).integral;
            test.accepts_all(log_rn_derivatives(&impostor, &d.x2, &d.y, &model).unwrap())
        })
        .count();
    let rate = hits as f64 / n as f64;
    let bound = (-mi[1] + eps * t).exp();
    let se = (rate * (1.0 - rate) / n as f64).sqrt();
    assert!(rate <= bound + 3.0 * se, "{rate} vs {bound}");
}
