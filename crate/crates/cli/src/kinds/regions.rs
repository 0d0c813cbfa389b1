use ctgauss_core::regions::{hausdorff_distance, max_axis_gap, ChannelKind, ChannelSpec, RateRegion};
use serde::Deserialize;

use super::{core_err, Outcome};
use crate::config::{ExperimentConfig, Problems};
use crate::record::{Recorder, Table, Unit};
use crate::CliError;

/// Distances below this count as the same region.
const SAME_REGION: f64 = 1e-12;

fn check_channel(p: &mut Problems, c: &ChannelSpec) {
    // full validation happens in the region constructors; this catches the
    // shape errors that would otherwise surface one at a time
    let users = match c.kind {
        ChannelKind::Mac | ChannelKind::Ic => {
            for (i, &v) in c.powers.iter().enumerate() {
                p.nonneg(&format!("channel.powers[{i}]"), v);
            }
            c.powers.len()
        }
        ChannelKind::Bc => {
            for (i, &v) in c.snrs.iter().enumerate() {
                p.positive(&format!("channel.snrs[{i}]"), v);
            }
            match c.power {
                Some(v) => p.nonneg("channel.power", v),
                None => p.push("channel.power", "required for a broadcast channel"),
            }
            c.snrs.len()
        }
    };
    if users == 0 {
        p.push("channel", "needs at least one user");
    }
    if c.kind == ChannelKind::Ic && (c.gains.len() != users || c.gains.iter().any(|r| r.len() != users)) {
        p.push("channel.gains", format!("must be a {users}x{users} matrix"));
    }
    if let Some(t0) = c.block_length {
        p.positive("channel.block_length", t0);
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Membership {
    pub point: Vec<f64>,
    pub inside: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub channel: ChannelSpec,
    /// Fixture path, relative to the config file.
    #[serde(default)]
    pub golden: Option<String>,
    /// IC only: offset added to every cross gain for the invariance check.
    #[serde(default)]
    pub cross_gain_perturbation: Option<f64>,
    #[serde(default)]
    pub points: Vec<Membership>,
}

impl Region {
    pub(crate) fn validate(&self) -> Problems {
        let mut p = Problems::new();
        check_channel(&mut p, &self.channel);
        if self.cross_gain_perturbation.is_some() && self.channel.kind != ChannelKind::Ic {
            p.push("cross_gain_perturbation", "only applies to an interference channel");
        }
        if let Some(d) = self.cross_gain_perturbation {
            if !d.is_finite() {
                p.push("cross_gain_perturbation", "must be finite");
            }
        }
        p
    }

    pub fn run(&self, cfg: &ExperimentConfig) -> Outcome {
        let mut r = Recorder::default();
        let region = self.channel.region().map_err(core_err)?;
        r.metric("dimension", region.dimension() as f64, Unit::None);
        r.metric("vertices", region.vertices().len() as f64, Unit::None);
        r.metric("scale", region.scale(), Unit::NatsPerSecond);
        if let Some(g) = &self.golden {
            let path = cfg.resolve(g);
            let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            let golden =
                RateRegion::from_json(&text).map_err(|e| CliError::Validation(vec![format!("params.golden: {e}")]))?;
            let d = if golden.dimension() == region.dimension() {
                hausdorff_distance(&region, &golden).map_err(core_err)?
            } else {
                f64::INFINITY
            };
            let same = d <= SAME_REGION
                && region.is_subset_of(&golden).map_err(core_err)?
                && golden.is_subset_of(&region).map_err(core_err)?;
            r.metric("golden_distance", d, Unit::NatsPerSecond);
            r.holds("golden", same, format!("equal to fixture {g}"));
        }
        if let Some(delta) = self.cross_gain_perturbation {
            let mut other = self.channel.clone();
            for (i, row) in other.gains.iter_mut().enumerate() {
                for (j, g) in row.iter_mut().enumerate() {
                    if i != j {
                        *g += delta;
                    }
                }
            }
            let perturbed = other.region().map_err(core_err)?;
            r.holds(
                "cross_gain_invariance",
                perturbed.to_json() == region.to_json(),
                "identical document after perturbing off-diagonal gains",
            );
        }
        for (i, m) in self.points.iter().enumerate() {
            let inside = region.contains(&m.point).map_err(core_err)?;
            r.holds(
                &format!("membership[{i}]"),
                inside == m.inside,
                format!("{:?} expected {}", m.point, if m.inside { "inside" } else { "outside" }),
            );
        }
        r.artifact = Some(region.to_json());
        Ok(r)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisGap {
    pub bandwidth: f64,
    pub expected: f64,
    pub tolerance: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionLimit {
    pub channel: ChannelSpec,
    pub bandwidths: Vec<f64>,
    /// Final Hausdorff distance allowed, as a fraction of the limit
    /// region's scale.
    pub scale_fraction: f64,
    #[serde(default)]
    pub axis_gap: Option<AxisGap>,
}

impl RegionLimit {
    pub(crate) fn validate(&self) -> Problems {
        let mut p = Problems::new();
        check_channel(&mut p, &self.channel);
        p.positive_all("bandwidths", &self.bandwidths);
        if self.bandwidths.windows(2).any(|w| w[1] <= w[0]) {
            p.push("bandwidths", "must be strictly increasing");
        }
        p.nonneg("scale_fraction", self.scale_fraction);
        if let Some(a) = &self.axis_gap {
            p.positive("axis_gap.bandwidth", a.bandwidth);
            p.nonneg("axis_gap.tolerance", a.tolerance);
        }
        if self.channel.kind == ChannelKind::Bc && self.channel.snrs.len() != 2 {
            p.push("channel.snrs", "band-limited broadcast bounds need exactly two users");
        }
        p
    }

    pub fn run(&self) -> Outcome {
        let mut r = Recorder::default();
        let limit = self.channel.region().map_err(core_err)?;
        let mut t = Table::new(&[
            ("W", Unit::None),
            ("hausdorff_inner", Unit::NatsPerSecond),
            ("hausdorff_outer", Unit::NatsPerSecond),
            ("inner_in_outer", Unit::None),
            ("outer_in_limit", Unit::None),
        ]);
        let (mut nested, mut bounded) = (true, true);
        let (mut din, mut dout) = (Vec::new(), Vec::new());
        for &w in &self.bandwidths {
            let (inner, outer) = self.channel.finite_w_bounds(w).map_err(core_err)?;
            let a = inner.is_subset_of(&outer).map_err(core_err)?;
            let b = outer.is_subset_of(&limit).map_err(core_err)?;
            let hi = hausdorff_distance(&inner, &limit).map_err(core_err)?;
            let ho = hausdorff_distance(&outer, &limit).map_err(core_err)?;
            nested &= a;
            bounded &= b;
            din.push(hi);
            dout.push(ho);
            t.push(vec![w, hi, ho, f64::from(u8::from(a)), f64::from(u8::from(b))]);
        }
        let scale = limit.scale();
        let last = din.last().unwrap().max(*dout.last().unwrap());
        r.metric("scale", scale, Unit::NatsPerSecond);
        r.metric("final_hausdorff", last, Unit::NatsPerSecond);
        r.holds("nested", nested, "inner within outer at every W");
        r.holds("below_limit", bounded, "outer within the infinite-bandwidth region at every W");
        let rise = din.windows(2).chain(dout.windows(2)).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        r.at_most("nonincreasing", rise, SAME_REGION, "largest increase of the Hausdorff distance along W");
        r.at_most(
            "final_distance",
            last,
            self.scale_fraction * scale,
            "distance at the largest W against scale_fraction·scale",
        );
        if let Some(a) = &self.axis_gap {
            let (_, outer) = self.channel.finite_w_bounds(a.bandwidth).map_err(core_err)?;
            let gap = max_axis_gap(&outer, &limit).map_err(core_err)?;
            r.metric("axis_gap", gap, Unit::NatsPerSecond);
            r.at_most(
                "axis_gap",
                (gap - a.expected).abs(),
                a.tolerance,
                format!("axis gap at W={} against {}", a.bandwidth, a.expected),
            );
        }
        r.table = Some(t);
        Ok(r)
    }
}
