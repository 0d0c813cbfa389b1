//! Region constructors for the multiple-access, interference and broadcast
//! channels, their finite-bandwidth bounds and repeated versions.

use serde::{Deserialize, Serialize};

use super::{Halfspace, RateRegion};
use crate::error::{invalid, Result};

/// Default number of superposition splits `α` in the broadcast sweep.
pub const BC_ALPHA_POINTS: usize = 1025;

/// `W ln(1 + c / W)`, accurate for large `W`.
fn band_limited(c: f64, w: f64) -> f64 {
    w * (c / w).ln_1p()
}

fn check_nonneg(name: &'static str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(invalid(name, "must not be empty"));
    }
    for x in v {
        if !(*x >= 0.0) || !x.is_finite() {
            return Err(invalid(name, format!("entries must be finite and >= 0, got {x}")));
        }
    }
    Ok(())
}

fn check_bandwidth(w: f64) -> Result<()> {
    if !(w > 0.0) || !w.is_finite() {
        return Err(invalid("bandwidth", format!("must be finite and > 0, got {w}")));
    }
    Ok(())
}

fn check_gains(gains: &[Vec<f64>], m: usize) -> Result<()> {
    if gains.len() != m || gains.iter().any(|row| row.len() != m) {
        return Err(invalid("gains", format!("must be a {m}x{m} matrix")));
    }
    if gains.iter().flatten().any(|g| !g.is_finite()) {
        return Err(invalid("gains", "entries must be finite"));
    }
    Ok(())
}

fn boxed(bounds: &[f64]) -> Result<RateRegion> {
    let m = bounds.len();
    RateRegion::new(m, bounds.iter().enumerate().map(|(i, &b)| Halfspace::axis(m, i, b)).collect())
}

/// `{R_i <= P_i / 2}`.
pub fn mac_region(powers: &[f64]) -> Result<RateRegion> {
    check_nonneg("powers", powers)?;
    let b: Vec<f64> = powers.iter().map(|p| p / 2.0).collect();
    Ok(boxed(&b)?.with_meta("kind", "mac"))
}

/// `{R_i <= a_ii^2 P_i / 2}`; cross gains are validated but never read.
pub fn ic_region(gains: &[Vec<f64>], powers: &[f64]) -> Result<RateRegion> {
    check_nonneg("powers", powers)?;
    check_gains(gains, powers.len())?;
    let b: Vec<f64> = powers.iter().enumerate().map(|(i, p)| gains[i][i] * gains[i][i] * p / 2.0).collect();
    Ok(boxed(&b)?.with_meta("kind", "ic"))
}

/// `{sum_i R_i / snr_i <= P / 2}`.
pub fn bc_region(snrs: &[f64], power: f64) -> Result<RateRegion> {
    check_nonneg("snrs", snrs)?;
    if snrs.contains(&0.0) {
        return Err(invalid("snrs", "every snr must be > 0"));
    }
    check_nonneg("power", &[power])?;
    let coeffs: Vec<f64> = snrs.iter().map(|s| 1.0 / s).collect();
    Ok(RateRegion::new(snrs.len(), vec![Halfspace::new(coeffs, power / 2.0)])?.with_meta("kind", "bc"))
}

/// Rates per block of length `t0`: every rhs times `t0`.
pub fn repeated_region(base: &RateRegion, t0: f64) -> Result<RateRegion> {
    if !(t0 > 0.0) || !t0.is_finite() {
        return Err(invalid("T0", format!("must be finite and > 0, got {t0}")));
    }
    Ok(base.scaled(t0).with_meta("block_length", format!("{t0}")))
}

/// Band-limited MAC: outer box and inner box cut by the sum-rate constraint.
pub fn mac_finite_w_bounds(powers: &[f64], w: f64) -> Result<(RateRegion, RateRegion)> {
    check_nonneg("powers", powers)?;
    check_bandwidth(w)?;
    let m = powers.len();
    let b: Vec<f64> = powers.iter().map(|p| band_limited(p / 2.0, w)).collect();
    let outer = boxed(&b)?;
    let total: f64 = powers.iter().sum();
    let mut hs = outer.halfspaces().to_vec();
    hs.push(Halfspace::new(vec![1.0; m], band_limited(total / 2.0, w)));
    let inner = RateRegion::new(m, hs)?;
    let tag = |r: RateRegion, side: &str| {
        r.with_meta("kind", "mac").with_meta("bound", side).with_meta("bandwidth", format!("{w}"))
    };
    Ok((tag(inner, "inner"), tag(outer, "outer")))
}

/// Band-limited IC: outer drops interference, inner treats it as noise.
pub fn ic_finite_w_bounds(gains: &[Vec<f64>], powers: &[f64], w: f64) -> Result<(RateRegion, RateRegion)> {
    check_nonneg("powers", powers)?;
    check_gains(gains, powers.len())?;
    check_bandwidth(w)?;
    let m = powers.len();
    let signal = |i: usize| gains[i][i] * gains[i][i] * powers[i];
    let outer: Vec<f64> = (0..m).map(|i| band_limited(signal(i) / 2.0, w)).collect();
    let inner: Vec<f64> = (0..m)
        .map(|i| {
            let interference: f64 = (0..m).filter(|&j| j != i).map(|j| gains[i][j] * gains[i][j] * powers[j]).sum();
            // W ln(1 + S / (2W + I))
            w * (signal(i) / (2.0 * w + interference)).ln_1p()
        })
        .collect();
    let tag = |r: RateRegion, side: &str| {
        r.with_meta("kind", "ic").with_meta("bound", side).with_meta("bandwidth", format!("{w}"))
    };
    Ok((tag(boxed(&inner)?, "inner"), tag(boxed(&outer)?, "outer")))
}

/// Superposition rate pair for split `alpha` (share of power on the
/// stronger user), returned in the caller's user order. Two users only.
pub fn bc_superposition_point(snrs: &[f64], power: f64, w: f64, alpha: f64) -> Result<[f64; 2]> {
    let (strong, weak, swapped) = order_two(snrs)?;
    check_nonneg("power", &[power])?;
    check_bandwidth(w)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(invalid("alpha", format!("must lie in [0, 1], got {alpha}")));
    }
    let r1 = w * (alpha * strong * power / (2.0 * w)).ln_1p();
    let r2 = w * ((1.0 - alpha) * weak * power / (alpha * strong * power + 2.0 * w)).ln_1p();
    Ok(if swapped { [r2, r1] } else { [r1, r2] })
}

fn order_two(snrs: &[f64]) -> Result<(f64, f64, bool)> {
    if snrs.len() != 2 {
        return Err(invalid("snrs", "the band-limited broadcast bound is defined for two users"));
    }
    check_nonneg("snrs", snrs)?;
    if snrs.contains(&0.0) {
        return Err(invalid("snrs", "every snr must be > 0"));
    }
    Ok(if snrs[0] >= snrs[1] { (snrs[0], snrs[1], false) } else { (snrs[1], snrs[0], true) })
}

/// Band-limited BC superposition region on the default `α` grid.
pub fn bc_finite_w_bounds(snrs: &[f64], power: f64, w: f64) -> Result<RateRegion> {
    bc_finite_w_bounds_with(snrs, power, w, BC_ALPHA_POINTS)
}

/// Convex hull of the sampled superposition points, as half-spaces.
pub fn bc_finite_w_bounds_with(snrs: &[f64], power: f64, w: f64, alpha_points: usize) -> Result<RateRegion> {
    let (_, _, swapped) = order_two(snrs)?;
    if alpha_points < 2 {
        return Err(invalid("alpha_points", "need at least 2"));
    }
    let ordered = if swapped { [snrs[1], snrs[0]] } else { [snrs[0], snrs[1]] };
    let mut pts: Vec<[f64; 2]> = vec![[0.0, 0.0]];
    for i in 0..alpha_points {
        let alpha = i as f64 / (alpha_points - 1) as f64;
        pts.push(bc_superposition_point(&ordered, power, w, alpha)?);
    }
    let hull = upper_right_hull(pts);
    let mut hs = Vec::new();
    for pair in hull.windows(2) {
        let (p, q) = (pair[0], pair[1]);
        // hull runs from the R1 axis towards the R2 axis
        let normal = [q[1] - p[1], p[0] - q[0]];
        let (nx, ny) = (normal[0].max(0.0), normal[1].max(0.0));
        let n = nx + ny;
        if n <= 0.0 {
            continue;
        }
        let (nx, ny) = (nx / n, ny / n);
        let rhs = (nx * p[0] + ny * p[1]).max(nx * q[0] + ny * q[1]);
        hs.push(if swapped { Halfspace::new(vec![ny, nx], rhs) } else { Halfspace::new(vec![nx, ny], rhs) });
    }
    let r1max = hull.first().map_or(0.0, |p| p[0]);
    let r2max = hull.last().map_or(0.0, |p| p[1]);
    let (e0, e1) = if swapped { (r2max, r1max) } else { (r1max, r2max) };
    hs.push(Halfspace::axis(2, 0, e0));
    hs.push(Halfspace::axis(2, 1, e1));
    Ok(RateRegion::new(2, hs)?
        .with_meta("kind", "bc")
        .with_meta("bound", "superposition")
        .with_meta("convexified", "true")
        .with_meta("alpha_points", format!("{alpha_points}"))
        .with_meta("bandwidth", format!("{w}")))
}

/// Upper-right boundary of the convex hull, from the point with the largest
/// first coordinate to the one with the largest second coordinate.
fn upper_right_hull(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|a, b| b[0].total_cmp(&a[0]).then(b[1].total_cmp(&a[1])));
    let mut hull: Vec<[f64; 2]> = Vec::new();
    for p in pts {
        // skip points dominated in the second coordinate by the current top
        if hull.last().is_some_and(|h| p[1] <= h[1]) {
            continue;
        }
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
            // counter-clockwise chain: drop b unless a-b-p turns left
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Mac,
    Ic,
    Bc,
}

/// Channel description accepted by the CLI and fixtures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub kind: ChannelKind,
    #[serde(default)]
    pub powers: Vec<f64>,
    #[serde(default)]
    pub gains: Vec<Vec<f64>>,
    #[serde(default)]
    pub snrs: Vec<f64>,
    #[serde(default)]
    pub power: Option<f64>,
    #[serde(default)]
    pub block_length: Option<f64>,
}

impl ChannelSpec {
    fn bc_power(&self) -> Result<f64> {
        self.power.ok_or_else(|| invalid("power", "required for a broadcast channel"))
    }

    fn repeat(&self, r: RateRegion) -> Result<RateRegion> {
        match self.block_length {
            Some(t0) => repeated_region(&r, t0),
            None => Ok(r),
        }
    }

    /// Infinite-bandwidth region, repeated when a block length is set.
    pub fn region(&self) -> Result<RateRegion> {
        let r = match self.kind {
            ChannelKind::Mac => mac_region(&self.powers)?,
            ChannelKind::Ic => ic_region(&self.gains, &self.powers)?,
            ChannelKind::Bc => bc_region(&self.snrs, self.bc_power()?)?,
        };
        self.repeat(r)
    }

    /// Band-limited `(inner, outer)`; the broadcast bound is returned twice.
    pub fn finite_w_bounds(&self, w: f64) -> Result<(RateRegion, RateRegion)> {
        let (i, o) = match self.kind {
            ChannelKind::Mac => mac_finite_w_bounds(&self.powers, w)?,
            ChannelKind::Ic => ic_finite_w_bounds(&self.gains, &self.powers, w)?,
            ChannelKind::Bc => {
                let r = bc_finite_w_bounds(&self.snrs, self.bc_power()?, w)?;
                (r.clone(), r)
            }
        };
        Ok((self.repeat(i)?, self.repeat(o)?))
    }
}
