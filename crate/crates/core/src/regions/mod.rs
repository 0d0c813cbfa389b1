//! Capacity regions as bounded polytopes in the nonnegative orthant.
//!
//! A [`RateRegion`] is `{R >= 0 : c_k · R <= rhs_k}` with every `c_k >= 0`.
//! Serialized as `{dimension, halfspaces: [{coeffs, rhs}], meta}`.

mod channels;
mod geometry;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub use channels::{
    bc_finite_w_bounds, bc_finite_w_bounds_with, bc_region, bc_superposition_point, ic_finite_w_bounds, ic_region,
    mac_finite_w_bounds, mac_region, repeated_region, ChannelKind, ChannelSpec, BC_ALPHA_POINTS,
};
pub use geometry::{hausdorff_distance, max_axis_gap, HAUSDORFF_DIRECTIONS_PER_QUADRANT};

/// Absolute slack (nats/s) for membership tests; boundary points are inside.
pub const CONTAINMENT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

impl Halfspace {
    pub fn new(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self { coeffs, rhs }
    }

    /// `R_axis <= rhs` in dimension `dim`.
    pub fn axis(dim: usize, axis: usize, rhs: f64) -> Self {
        let mut coeffs = vec![0.0; dim];
        coeffs[axis] = 1.0;
        Self { coeffs, rhs }
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        self.coeffs.iter().zip(point).map(|(c, x)| c * x).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRegion {
    dimension: usize,
    halfspaces: Vec<Halfspace>,
    #[serde(default)]
    meta: BTreeMap<String, String>,
}

impl RateRegion {
    pub fn new(dimension: usize, halfspaces: Vec<Halfspace>) -> Result<Self> {
        if dimension == 0 {
            return Err(invalid("dimension", "must be at least 1"));
        }
        for (k, h) in halfspaces.iter().enumerate() {
            if h.coeffs.len() != dimension {
                return Err(Error::DimensionMismatch { expected: dimension, actual: h.coeffs.len() });
            }
            if h.coeffs.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
                return Err(invalid("coeffs", format!("half-space {k} has a negative or non-finite coefficient")));
            }
            if !h.coeffs.iter().any(|c| *c > 0.0) {
                return Err(invalid("coeffs", format!("half-space {k} has no positive coefficient")));
            }
            if !(h.rhs >= 0.0) || !h.rhs.is_finite() {
                return Err(invalid("rhs", format!("half-space {k} has rhs {}", h.rhs)));
            }
        }
        for axis in 0..dimension {
            if !halfspaces.iter().any(|h| h.coeffs[axis] > 0.0) {
                return Err(Error::UnboundedRegion(axis));
            }
        }
        Ok(Self { dimension, halfspaces, meta: BTreeMap::new() })
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<String>) -> Self {
        self.meta.insert(key.to_string(), value.into());
        self
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    pub fn meta(&self) -> &BTreeMap<String, String> {
        &self.meta
    }

    /// Membership with [`CONTAINMENT_TOLERANCE`].
    pub fn contains(&self, point: &[f64]) -> Result<bool> {
        if point.len() != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, actual: point.len() });
        }
        Ok(point.iter().all(|&x| x >= -CONTAINMENT_TOLERANCE)
            && self.halfspaces.iter().all(|h| h.eval(point) <= h.rhs + CONTAINMENT_TOLERANCE))
    }

    /// Every rhs multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dimension: self.dimension,
            halfspaces: self.halfspaces.iter().map(|h| Halfspace::new(h.coeffs.clone(), h.rhs * factor)).collect(),
            meta: self.meta.clone(),
        }
    }

    /// Largest value of `R_axis` over the region.
    pub fn axis_extent(&self, axis: usize) -> f64 {
        self.halfspaces
            .iter()
            .filter(|h| h.coeffs[axis] > 0.0)
            .map(|h| h.rhs / h.coeffs[axis])
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest axis extent: the natural length scale of the region.
    pub fn scale(&self) -> f64 {
        (0..self.dimension).map(|i| self.axis_extent(i)).fold(0.0, f64::max)
    }

    /// Vertices of the polytope.
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        geometry::vertices(self)
    }

    /// `max_{R in region} u · R`.
    pub fn support(&self, direction: &[f64]) -> f64 {
        geometry::support(&self.vertices(), direction)
    }

    /// True when every vertex of `self` lies in `other`.
    pub fn is_subset_of(&self, other: &RateRegion) -> Result<bool> {
        for v in self.vertices() {
            if !other.contains(&v)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("region serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RateRegion =
            serde_json::from_str(text).map_err(|e| invalid("region", format!("malformed JSON: {e}")))?;
        let meta = raw.meta;
        let mut r = RateRegion::new(raw.dimension, raw.halfspaces)?;
        r.meta = meta;
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn boxr(c: &[f64]) -> RateRegion {
        let d = c.len();
        RateRegion::new(d, c.iter().enumerate().map(|(i, &v)| Halfspace::axis(d, i, v)).collect()).unwrap()
    }

    #[test]
    fn validation() {
        assert!(matches!(RateRegion::new(2, vec![Halfspace::axis(2, 0, 1.0)]), Err(Error::UnboundedRegion(1))));
        assert!(RateRegion::new(2, vec![Halfspace::new(vec![-1.0, 1.0], 1.0)]).is_err());
        assert!(RateRegion::new(2, vec![Halfspace::new(vec![0.0, 0.0], 1.0)]).is_err());
        assert!(RateRegion::new(2, vec![Halfspace::new(vec![1.0, 1.0], -1.0)]).is_err());
        assert!(RateRegion::new(2, vec![Halfspace::new(vec![1.0], 1.0)]).is_err());
    }

    #[test]
    fn origin_always_inside() {
        let r = boxr(&[0.0, 3.0]);
        assert!(r.contains(&[0.0, 0.0]).unwrap());
        assert!(r.contains(&[0.0, 3.0]).unwrap());
        assert!(!r.contains(&[1e-6, 0.0]).unwrap());
        assert!(r.contains(&[1.0]).is_err());
    }

    #[test]
    fn json_round_trip_preserves_region() {
        let r = boxr(&[1.0, 2.0]).with_meta("kind", "mac");
        let back = RateRegion::from_json(&r.to_json()).unwrap();
        assert_eq!(r, back);
        assert!(RateRegion::from_json("{\"dimension\":2,\"halfspaces\":[]}").is_err());
    }

    #[test]
    fn subset_by_vertices() {
        assert!(boxr(&[1.0, 1.0]).is_subset_of(&boxr(&[1.0, 2.0])).unwrap());
        assert!(!boxr(&[1.0, 2.0]).is_subset_of(&boxr(&[1.0, 1.0])).unwrap());
    }
}
