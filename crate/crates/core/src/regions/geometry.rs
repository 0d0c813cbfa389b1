//! Vertex enumeration, support functions and Hausdorff distances.
//!
//! Distances use the Chebyshev (max-coordinate) metric. For convex bodies
//! `d_H(A, B) = max_{|u|_1 = 1} |h_A(u) - h_B(u)|` with `h` the support
//! function, so the distance reduces to a scan over L1-unit directions.

use nalgebra::{DMatrix, DVector};

use super::RateRegion;
use crate::error::{Error, Result};

/// Directions per quadrant on the L1 circle in 2-D (edge normals are added).
pub const HAUSDORFF_DIRECTIONS_PER_QUADRANT: usize = 64;
/// Simplex lattice resolution per orthant in 3 or more dimensions.
const LATTICE_RESOLUTION: usize = 16;

const VERTEX_EPS: f64 = 1e-12;

pub(super) fn vertices(region: &RateRegion) -> Vec<Vec<f64>> {
    if region.dimension() == 1 {
        return vec![vec![0.0], vec![region.axis_extent(0)]];
    }
    if region.dimension() == 2 {
        polygon(region)
    } else {
        enumerate(region)
    }
}

/// Counter-clockwise polygon by clipping the bounding box.
fn polygon(region: &RateRegion) -> Vec<Vec<f64>> {
    let (x, y) = (region.axis_extent(0), region.axis_extent(1));
    let mut poly = vec![[0.0, 0.0], [x, 0.0], [x, y], [0.0, y]];
    for h in region.halfspaces() {
        let (c, r) = ([h.coeffs[0], h.coeffs[1]], h.rhs);
        let f = |p: &[f64; 2]| c[0] * p[0] + c[1] * p[1] - r;
        let mut out = Vec::with_capacity(poly.len() + 1);
        for i in 0..poly.len() {
            let p = poly[i];
            let q = poly[(i + 1) % poly.len()];
            let (fp, fq) = (f(&p), f(&q));
            if fp <= 0.0 {
                out.push(p);
            }
            if (fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0) {
                let t = fp / (fp - fq);
                out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
            }
        }
        poly = out;
        if poly.is_empty() {
            break;
        }
    }
    let scale = x.max(y).max(1.0);
    let mut dedup: Vec<[f64; 2]> = Vec::with_capacity(poly.len());
    for p in poly {
        let near = |q: &[f64; 2]| (p[0] - q[0]).abs().max((p[1] - q[1]).abs()) <= VERTEX_EPS * scale;
        if !dedup.last().is_some_and(near) {
            dedup.push(p);
        }
    }
    while dedup.len() > 1 && {
        let (a, b) = (dedup[0], dedup[dedup.len() - 1]);
        (a[0] - b[0]).abs().max((a[1] - b[1]).abs()) <= VERTEX_EPS * scale
    } {
        dedup.pop();
    }
    if dedup.is_empty() {
        dedup.push([0.0, 0.0]);
    }
    dedup.into_iter().map(|p| p.to_vec()).collect()
}

/// Brute-force vertex enumeration: every `m`-subset of the constraints
/// (half-spaces plus nonnegativity) whose intersection point is feasible.
fn enumerate(region: &RateRegion) -> Vec<Vec<f64>> {
    let m = region.dimension();
    let mut rows: Vec<(Vec<f64>, f64)> = region.halfspaces().iter().map(|h| (h.coeffs.clone(), h.rhs)).collect();
    for i in 0..m {
        let mut c = vec![0.0; m];
        c[i] = -1.0;
        rows.push((c, 0.0));
    }
    let scale = region.scale().max(1.0);
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut idx: Vec<usize> = (0..m).collect();
    loop {
        let a = DMatrix::from_fn(m, m, |i, j| rows[idx[i]].0[j]);
        let b = DVector::from_fn(m, |i, _| rows[idx[i]].1);
        if let Some(x) = a.lu().solve(&b) {
            let feasible = x.iter().all(|v| v.is_finite())
                && rows
                    .iter()
                    .all(|(c, r)| c.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>() <= r + 1e-10 * scale);
            if feasible {
                let p: Vec<f64> = x.iter().map(|v| if v.abs() < VERTEX_EPS * scale { 0.0 } else { *v }).collect();
                let dup = out.iter().any(|q| q.iter().zip(&p).all(|(a, b)| (a - b).abs() <= 1e-10 * scale));
                if !dup {
                    out.push(p);
                }
            }
        }
        // next combination
        let n = rows.len();
        let mut k = m;
        while k > 0 && idx[k - 1] == n - m + k - 1 {
            k -= 1;
        }
        if k == 0 {
            break;
        }
        idx[k - 1] += 1;
        for j in k..m {
            idx[j] = idx[j - 1] + 1;
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    out
}

pub(super) fn support(vertices: &[Vec<f64>], u: &[f64]) -> f64 {
    vertices.iter().map(|v| v.iter().zip(u).map(|(a, b)| a * b).sum::<f64>()).fold(f64::NEG_INFINITY, f64::max)
}

fn l1_normalize(mut u: Vec<f64>) -> Option<Vec<f64>> {
    let n: f64 = u.iter().map(|x| x.abs()).sum();
    if n <= 0.0 || !n.is_finite() {
        return None;
    }
    u.iter_mut().for_each(|x| *x /= n);
    Some(u)
}

fn directions_2d(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = HAUSDORFF_DIRECTIONS_PER_QUADRANT;
    let mut dirs = Vec::with_capacity(4 * n + 2 * (a.len() + b.len()));
    for (sx, sy) in [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)] {
        for i in 0..n {
            let s = i as f64 / n as f64;
            dirs.push(vec![sx * (1.0 - s), sy * s]);
        }
    }
    // the support gap is piecewise linear between edge normals, so adding
    // them makes the 2-D scan exact
    for poly in [a, b] {
        for i in 0..poly.len() {
            let p = &poly[i];
            let q = &poly[(i + 1) % poly.len()];
            let normal = vec![q[1] - p[1], p[0] - q[0]];
            if let Some(u) = l1_normalize(normal) {
                dirs.push(u.iter().map(|x| -x).collect());
                dirs.push(u);
            }
        }
    }
    dirs
}

fn directions_nd(m: usize, regions: [&RateRegion; 2]) -> Vec<Vec<f64>> {
    let n = LATTICE_RESOLUTION;
    let mut lattice = Vec::new();
    let mut comp = vec![0usize; m];
    fn rec(pos: usize, left: usize, comp: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if pos + 1 == comp.len() {
            comp[pos] = left;
            out.push(comp.clone());
            return;
        }
        for k in 0..=left {
            comp[pos] = k;
            rec(pos + 1, left - k, comp, out);
        }
    }
    rec(0, n, &mut comp, &mut lattice);
    let mut dirs = Vec::new();
    for signs in 0..(1usize << m) {
        for c in &lattice {
            dirs.push(
                c.iter()
                    .enumerate()
                    .map(|(i, &k)| {
                        let s = if signs >> i & 1 == 1 { -1.0 } else { 1.0 };
                        s * k as f64 / n as f64
                    })
                    .collect(),
            );
        }
    }
    for r in regions {
        for h in r.halfspaces() {
            if let Some(u) = l1_normalize(h.coeffs.clone()) {
                dirs.push(u);
            }
        }
    }
    dirs
}

/// Symmetric Hausdorff distance in the Chebyshev metric.
///
/// In 2-D the direction scan is 64 per quadrant plus every edge normal of
/// both polygons, which is exact. In higher dimensions the scan is a simplex
/// lattice of resolution 16 in each orthant plus the facet normals; it is
/// exact for boxes and simplices and a lower bound otherwise.
pub fn hausdorff_distance(a: &RateRegion, b: &RateRegion) -> Result<f64> {
    if a.dimension() != b.dimension() {
        return Err(Error::DimensionMismatch { expected: a.dimension(), actual: b.dimension() });
    }
    let m = a.dimension();
    for r in [a, b] {
        for i in 0..m {
            if !r.axis_extent(i).is_finite() {
                return Err(Error::UnboundedRegion(i));
            }
        }
    }
    let (va, vb) = (a.vertices(), b.vertices());
    let dirs = match m {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => directions_2d(&va, &vb),
        _ => directions_nd(m, [a, b]),
    };
    Ok(dirs.iter().map(|u| (support(&va, u) - support(&vb, u)).abs()).fold(0.0, f64::max))
}

/// Largest difference of per-axis extents.
pub fn max_axis_gap(a: &RateRegion, b: &RateRegion) -> Result<f64> {
    if a.dimension() != b.dimension() {
        return Err(Error::DimensionMismatch { expected: a.dimension(), actual: b.dimension() });
    }
    Ok((0..a.dimension()).map(|i| (a.axis_extent(i) - b.axis_extent(i)).abs()).fold(0.0, f64::max))
}
