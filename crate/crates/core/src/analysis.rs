//! Interface extraction and geometric metrics: marching-squares contours,
//! Hausdorff distance, layer thickness along contour normals, and
//! convergence-rate fits over an epsilon sweep.

use std::collections::HashMap;

use crate::interp::bilinear;
use crate::numerics::ScalarField;
use crate::{Error, Result};

/// Ordered vertex chain; closed chains do not repeat the first vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub vertices: Vec<(f64, f64)>,
    pub closed: bool,
}

impl Polyline {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Total arc length (including the closing segment when closed).
    pub fn length(&self) -> f64 {
        let mut s = 0.0;
        for w in self.vertices.windows(2) {
            s += dist(w[0], w[1]);
        }
        if self.closed && self.vertices.len() > 2 {
            s += dist(*self.vertices.last().unwrap(), self.vertices[0]);
        }
        s
    }

    fn segments(&self) -> Vec<((f64, f64), (f64, f64))> {
        let mut out = Vec::new();
        for w in self.vertices.windows(2) {
            out.push((w[0], w[1]));
        }
        if self.closed && self.vertices.len() > 2 {
            out.push((*self.vertices.last().unwrap(), self.vertices[0]));
        }
        out
    }

    /// Resample with point spacing at most `spacing`, keeping all original
    /// vertices.
    pub fn refine(&self, spacing: f64) -> Vec<(f64, f64)> {
        let mut pts = Vec::new();
        for (a, b) in self.segments() {
            let d = dist(a, b);
            let n = (d / spacing).ceil().max(1.0) as usize;
            for k in 0..n {
                let t = k as f64 / n as f64;
                pts.push((a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)));
            }
        }
        if !self.closed {
            if let Some(&last) = self.vertices.last() {
                pts.push(last);
            }
        }
        pts
    }
}

#[inline]
fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Distance from a point to a segment.
pub fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (ex, ey) = (b.0 - a.0, b.1 - a.1);
    let len2 = ex * ex + ey * ey;
    if len2 == 0.0 {
        return dist(p, a);
    }
    let t = (((p.0 - a.0) * ex + (p.1 - a.1) * ey) / len2).clamp(0.0, 1.0);
    dist(p, (a.0 + t * ex, a.1 + t * ey))
}

/// Marching-squares level-set extraction with linear edge interpolation.
///
/// Saddle cells are disambiguated by comparing the cell average against the
/// level. Chains are stitched deterministically: open chains first, then
/// loops, both started from the smallest crossed-edge index. A field that
/// never crosses the level yields an empty list.
pub fn extract_interface(u: &ScalarField, level: f64) -> Vec<Polyline> {
    let g = u.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let inside = |i: usize, j: usize| u.at(i, j) > level;

    // edge ids: horizontal (node i,j -> i+1,j) even, vertical odd
    let hedge = |i: usize, j: usize| -> u64 { 2 * (j * nx + i) as u64 };
    let vedge = |i: usize, j: usize| -> u64 { 2 * (j * nx + i) as u64 + 1 };

    let mut crossing: HashMap<u64, (f64, f64)> = HashMap::new();
    let mut adjacency: HashMap<u64, Vec<u64>> = HashMap::new();
    let segment_of = |a: u64, b: u64, adjacency: &mut HashMap<u64, Vec<u64>>| {
        adjacency.entry(a).or_default().push(b);
        adjacency.entry(b).or_default().push(a);
    };

    let cross_point = |id: u64, p0: (f64, f64), v0: f64, p1: (f64, f64), v1: f64,
                           crossing: &mut HashMap<u64, (f64, f64)>| {
        crossing.entry(id).or_insert_with(|| {
            let t = (level - v0) / (v1 - v0);
            (p0.0 + t * (p1.0 - p0.0), p0.1 + t * (p1.1 - p0.1))
        });
    };

    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let c00 = inside(i, j);
            let c10 = inside(i + 1, j);
            let c11 = inside(i + 1, j + 1);
            let c01 = inside(i, j + 1);
            let n_in = [c00, c10, c11, c01].iter().filter(|&&b| b).count();
            if n_in == 0 || n_in == 4 {
                continue;
            }
            let v00 = u.at(i, j);
            let v10 = u.at(i + 1, j);
            let v11 = u.at(i + 1, j + 1);
            let v01 = u.at(i, j + 1);
            let p00 = (g.x(i), g.y(j));
            let p10 = (g.x(i + 1), g.y(j));
            let p11 = (g.x(i + 1), g.y(j + 1));
            let p01 = (g.x(i), g.y(j + 1));

            let b = hedge(i, j); // bottom
            let t = hedge(i, j + 1); // top
            let l = vedge(i, j); // left
            let r = vedge(i + 1, j); // right

            if c00 != c10 {
                cross_point(b, p00, v00, p10, v10, &mut crossing);
            }
            if c01 != c11 {
                cross_point(t, p01, v01, p11, v11, &mut crossing);
            }
            if c00 != c01 {
                cross_point(l, p00, v00, p01, v01, &mut crossing);
            }
            if c10 != c11 {
                cross_point(r, p10, v10, p11, v11, &mut crossing);
            }

            match n_in {
                1 | 3 => {
                    // single corner separated: connect its two adjacent edges
                    let corner_inside = n_in == 1;
                    if c00 == corner_inside && c10 != corner_inside && c01 != corner_inside {
                        segment_of(l, b, &mut adjacency);
                    } else if c10 == corner_inside && c00 != corner_inside && c11 != corner_inside {
                        segment_of(b, r, &mut adjacency);
                    } else if c11 == corner_inside && c10 != corner_inside && c01 != corner_inside {
                        segment_of(r, t, &mut adjacency);
                    } else {
                        segment_of(t, l, &mut adjacency);
                    }
                }
                2 => {
                    if c00 == c10 {
                        // horizontal split
                        segment_of(l, r, &mut adjacency);
                    } else if c00 == c01 {
                        // vertical split
                        segment_of(b, t, &mut adjacency);
                    } else {
                        // saddle: diagonal corners share a state
                        let avg = 0.25 * (v00 + v10 + v11 + v01);
                        let center_inside = avg > level;
                        // pair the edges around whichever diagonal corners
                        // are cut off from the center
                        if c00 == center_inside {
                            // c10/c01 are the isolated pair
                            segment_of(b, r, &mut adjacency);
                            segment_of(t, l, &mut adjacency);
                        } else {
                            // c00/c11 are the isolated pair
                            segment_of(l, b, &mut adjacency);
                            segment_of(r, t, &mut adjacency);
                        }
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    // stitch: open chains (degree-1 endpoints) first, then loops
    let mut ids: Vec<u64> = adjacency.keys().copied().collect();
    ids.sort_unstable();
    let mut visited: HashMap<u64, bool> = ids.iter().map(|&id| (id, false)).collect();
    let mut polylines = Vec::new();

    let walk = |start: u64, visited: &mut HashMap<u64, bool>| -> (Vec<u64>, bool) {
        let mut chain = vec![start];
        visited.insert(start, true);
        let mut current = start;
        loop {
            let mut next = None;
            let mut nbrs = adjacency[&current].clone();
            nbrs.sort_unstable();
            for n in nbrs {
                if !visited[&n] {
                    next = Some(n);
                    break;
                }
            }
            match next {
                Some(n) => {
                    visited.insert(n, true);
                    chain.push(n);
                    current = n;
                }
                None => {
                    let closed = adjacency[&current].contains(&start) && chain.len() > 2;
                    return (chain, closed);
                }
            }
        }
    };

    for &id in &ids {
        if !visited[&id] && adjacency[&id].len() == 1 {
            let (chain, closed) = walk(id, &mut visited);
            polylines.push(chain_to_polyline(&chain, closed, &crossing));
        }
    }
    for &id in &ids {
        if !visited[&id] {
            let (chain, closed) = walk(id, &mut visited);
            polylines.push(chain_to_polyline(&chain, closed, &crossing));
        }
    }
    polylines.retain(|p| if p.closed { p.len() >= 3 } else { p.len() >= 2 });
    polylines
}

fn chain_to_polyline(chain: &[u64], closed: bool, crossing: &HashMap<u64, (f64, f64)>) -> Polyline {
    let mut vertices: Vec<(f64, f64)> = Vec::with_capacity(chain.len());
    for id in chain {
        let p = crossing[id];
        if vertices.last() != Some(&p) {
            vertices.push(p);
        }
    }
    if closed && vertices.len() > 1 && vertices.first() == vertices.last() {
        vertices.pop();
    }
    Polyline { vertices, closed }
}

/// Symmetric Hausdorff distance between two polylines.
///
/// Each side is resampled to spacing at most `max_spacing` and measured
/// against the exact segments of the other side, so the returned value is
/// exact up to O(max_spacing^2 * curvature).
pub fn hausdorff(a: &Polyline, b: &Polyline, max_spacing: f64) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyPolyline);
    }
    Ok(directed_hausdorff(a, b, max_spacing).max(directed_hausdorff(b, a, max_spacing)))
}

fn directed_hausdorff(a: &Polyline, b: &Polyline, max_spacing: f64) -> f64 {
    let samples = a.refine(max_spacing);
    let segs = b.segments();
    let mut worst: f64 = 0.0;
    if segs.is_empty() {
        let q = b.vertices[0];
        for p in samples {
            worst = worst.max(dist(p, q));
        }
        return worst;
    }
    for p in samples {
        let mut best = f64::INFINITY;
        for &(s0, s1) in &segs {
            best = best.min(point_segment_distance(p, s0, s1));
            if best == 0.0 {
                break;
            }
        }
        worst = worst.max(best);
    }
    worst
}

/// Maximum layer thickness: along normals of the mid-level (1/2) contour,
/// the distance between the crossings of `1 - eta` and `eta`.
///
/// Sample lines whose crossings cannot be bracketed are skipped; if every
/// line is skipped the field has no resolvable layer.
pub fn layer_thickness(u: &ScalarField, eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta < 0.25) {
        return Err(Error::InvalidParam(format!("eta must lie in (0, 1/4), got {eta}")));
    }
    let g = u.grid();
    let h = g.hx().min(g.hy());
    let contours = extract_interface(u, 0.5);
    if contours.is_empty() {
        return Err(Error::NoLayer);
    }
    let reach = 0.35 * g.lx().min(g.ly());
    let step = 0.25 * h;
    let mut best: Option<f64> = None;
    for contour in &contours {
        let pts = contour.refine(2.0 * h);
        let n = pts.len();
        if n < 3 {
            continue;
        }
        for k in 0..n {
            let prev = pts[(k + n - 1) % n];
            let next = pts[(k + 1) % n];
            let (tx, ty) = (next.0 - prev.0, next.1 - prev.1);
            let norm = tx.hypot(ty);
            if norm == 0.0 {
                continue;
            }
            let nrm = (-ty / norm, tx / norm);
            let p = pts[k];
            let sample = |s: f64| {
                let x = p.0 + s * nrm.0;
                let y = p.1 + s * nrm.1;
                if x < 0.0 || y < 0.0 || x > g.lx() || y > g.ly() {
                    None
                } else {
                    Some(bilinear(u, x, y))
                }
            };
            let hi = find_crossing(&sample, 1.0 - eta, reach, step);
            let lo = find_crossing(&sample, eta, reach, step);
            if let (Some(s_hi), Some(s_lo)) = (hi, lo) {
                let t = (s_hi - s_lo).abs();
                best = Some(best.map_or(t, |b: f64| b.max(t)));
            }
        }
    }
    best.ok_or(Error::NoLayer)
}

/// Find the signed offset along the line where the sampled value crosses
/// `target`, searching both directions and refining by bisection.
fn find_crossing(
    sample: &impl Fn(f64) -> Option<f64>,
    target: f64,
    reach: f64,
    step: f64,
) -> Option<f64> {
    let v0 = sample(0.0)?;
    let mut best: Option<f64> = None;
    for dir in [1.0, -1.0] {
        let mut s_prev = 0.0;
        let mut v_prev = v0;
        let mut s = step * dir;
        while s.abs() <= reach {
            let Some(v) = sample(s) else { break };
            if (v_prev - target) * (v - target) <= 0.0 && v_prev != v {
                // bisect within [s_prev, s]
                let (mut a, mut b) = (s_prev, s);
                let (mut va, _) = (v_prev, v);
                for _ in 0..60 {
                    let m = 0.5 * (a + b);
                    let vm = sample(m).unwrap_or(va);
                    if (va - target) * (vm - target) <= 0.0 {
                        b = m;
                    } else {
                        a = m;
                        va = vm;
                    }
                }
                let root = 0.5 * (a + b);
                if best.map_or(true, |cur: f64| root.abs() < cur.abs()) {
                    best = Some(root);
                }
                break;
            }
            s_prev = s;
            v_prev = v;
            s += step * dir;
        }
    }
    best
}

/// Least-squares power-law fit of metric against epsilon in log-log space.
#[derive(Debug, Clone)]
pub struct ConvergenceFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    pub samples: Vec<(f64, f64)>,
}

pub fn fit_rate(samples: &[(f64, f64)]) -> Result<ConvergenceFit> {
    if samples.len() < 3 {
        return Err(Error::InvalidParam(format!(
            "rate fit needs at least 3 samples, got {}",
            samples.len()
        )));
    }
    for &(eps, metric) in samples {
        if !(eps > 0.0) {
            return Err(Error::InvalidParam(format!("nonpositive eps {eps} in rate fit")));
        }
        if !(metric > 0.0) {
            return Err(Error::NonpositiveMetric { metric });
        }
    }
    for (i, &(ei, _)) in samples.iter().enumerate() {
        for &(ej, _) in samples.iter().skip(i + 1) {
            if ei == ej {
                return Err(Error::InvalidParam(format!("duplicate eps {ei} in rate fit")));
            }
        }
    }
    let n = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(ConvergenceFit {
        slope,
        intercept,
        residual,
        samples: samples.to_vec(),
    })
}

/// Outcome of the post-generation profile check at a single time.
#[derive(Debug, Clone)]
pub struct GenerationReport {
    pub min_u: f64,
    pub max_u: f64,
    /// min of u over the region where u0 >= 1/2 + m0 eps, minus (1 - eta)
    pub upper_region_margin: f64,
    /// eta minus max of u over the region where u0 <= 1/2 - m0 eps
    pub lower_region_margin: f64,
    pub upper_region_nodes: usize,
    pub lower_region_nodes: usize,
    pub eta: f64,
}

impl GenerationReport {
    pub fn passed(&self) -> bool {
        self.min_u >= -self.eta
            && self.max_u <= 1.0 + self.eta
            && self.upper_region_margin >= 0.0
            && self.lower_region_margin >= 0.0
    }
}

/// Check the generation dichotomy: at the generation time the field must be
/// globally inside [-eta, 1 + eta], at least 1 - eta where the initial datum
/// exceeded 1/2 + m0 eps, and at most eta where it was below 1/2 - m0 eps.
pub fn generation_check(
    u: &ScalarField,
    u0: &ScalarField,
    m0: f64,
    eps: f64,
    eta: f64,
) -> Result<GenerationReport> {
    u.same_grid(u0)?;
    let offset = m0 * eps;
    let mut min_u = f64::INFINITY;
    let mut max_u = f64::NEG_INFINITY;
    let mut hi_min = f64::INFINITY;
    let mut lo_max = f64::NEG_INFINITY;
    let mut hi_count = 0usize;
    let mut lo_count = 0usize;
    for (uv, u0v) in u.values().iter().zip(u0.values()) {
        min_u = min_u.min(*uv);
        max_u = max_u.max(*uv);
        if *u0v >= 0.5 + offset {
            hi_min = hi_min.min(*uv);
            hi_count += 1;
        }
        if *u0v <= 0.5 - offset {
            lo_max = lo_max.max(*uv);
            lo_count += 1;
        }
    }
    Ok(GenerationReport {
        min_u,
        max_u,
        upper_region_margin: if hi_count > 0 { hi_min - (1.0 - eta) } else { f64::INFINITY },
        lower_region_margin: if lo_count > 0 { eta - lo_max } else { f64::INFINITY },
        upper_region_nodes: hi_count,
        lower_region_nodes: lo_count,
        eta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetics::{u0, u0_inv};
    use crate::numerics::Grid;

    fn circle_field(n: usize, r: f64) -> ScalarField {
        let g = Grid::new(n, n, 1.0, 1.0).unwrap();
        ScalarField::from_fn(&g, move |x, y| (x - 0.5).hypot(y - 0.5) - r)
    }

    #[test]
    fn constant_field_has_no_contour() {
        let g = Grid::new(16, 16, 1.0, 1.0).unwrap();
        let f = ScalarField::constant(&g, 0.2);
        assert!(extract_interface(&f, 0.5).is_empty());
    }

    #[test]
    fn circle_contour_recovers_radius() {
        let f = circle_field(129, 0.3);
        let contours = extract_interface(&f, 0.0);
        assert_eq!(contours.len(), 1);
        let c = &contours[0];
        assert!(c.closed);
        assert!(c.len() > 100);
        let h: f64 = 1.0 / 128.0;
        for &(x, y) in &c.vertices {
            let r = (x - 0.5).hypot(y - 0.5);
            assert!((r - 0.3).abs() < h * h / 0.3 * 2.0, "vertex radius {r}");
        }
    }

    #[test]
    fn profile_mid_level_recovers_circle() {
        let g = Grid::new(129, 129, 1.0, 1.0).unwrap();
        let eps = 0.04;
        let f = ScalarField::from_fn(&g, |x, y| u0(((x - 0.5).hypot(y - 0.5) - 0.3) / eps));
        let contours = extract_interface(&f, 0.5);
        assert_eq!(contours.len(), 1);
        for &(x, y) in &contours[0].vertices {
            let r = (x - 0.5).hypot(y - 0.5);
            assert!((r - 0.3).abs() < 2e-4, "vertex radius {r}");
        }
    }

    #[test]
    fn saddle_cells_resolved_without_crossing_chains() {
        // a four-fold symmetric field with saddle points between blobs
        let g = Grid::new(65, 65, 1.0, 1.0).unwrap();
        let f = ScalarField::from_fn(&g, |x, y| {
            (2.0 * std::f64::consts::PI * x).sin() * (2.0 * std::f64::consts::PI * y).sin()
        });
        let contours = extract_interface(&f, 0.1);
        assert!(!contours.is_empty());
        for c in &contours {
            assert!(c.closed || c.len() >= 2);
            for w in c.vertices.windows(2) {
                assert!(w[0] != w[1], "repeated consecutive vertex");
            }
        }
    }

    #[test]
    fn extraction_is_deterministic() {
        let f = circle_field(65, 0.27);
        let a = extract_interface(&f, 0.0);
        let b = extract_interface(&f, 0.0);
        assert_eq!(a, b);
    }

    #[test]
    fn hausdorff_identical_is_zero() {
        let f = circle_field(65, 0.3);
        let c = extract_interface(&f, 0.0).remove(0);
        // refined sample points sit on their own segments up to rounding
        assert!(hausdorff(&c, &c, 0.01).unwrap() <= 1e-12);
    }

    #[test]
    fn hausdorff_concentric_circles() {
        let a = extract_interface(&circle_field(129, 0.30), 0.0).remove(0);
        let b = extract_interface(&circle_field(129, 0.22), 0.0).remove(0);
        let d = hausdorff(&a, &b, 1.0 / 512.0).unwrap();
        assert!((d - 0.08).abs() < 5e-4, "distance {d}");
    }

    #[test]
    fn hausdorff_offset_circles_brute_force() {
        // circles radius r with centers offset by s <= r: Hausdorff = s
        let g = Grid::new(129, 129, 1.0, 1.0).unwrap();
        let r = 0.25;
        let s = 0.1;
        let a = extract_interface(
            &ScalarField::from_fn(&g, |x, y| (x - 0.45).hypot(y - 0.5) - r),
            0.0,
        )
        .remove(0);
        let b = extract_interface(
            &ScalarField::from_fn(&g, |x, y| (x - 0.55).hypot(y - 0.5) - r),
            0.0,
        )
        .remove(0);
        let d = hausdorff(&a, &b, 1.0 / 512.0).unwrap();
        assert!((d - s).abs() < 1e-3, "distance {d} vs offset {s}");

        // brute force over dense point samples confirms
        let pa = a.refine(1e-3);
        let pb = b.refine(1e-3);
        let mut brute: f64 = 0.0;
        for &p in &pa {
            let mut best = f64::INFINITY;
            for &q in &pb {
                best = best.min(dist(p, q));
            }
            brute = brute.max(best);
        }
        for &q in &pb {
            let mut best = f64::INFINITY;
            for &p in &pa {
                best = best.min(dist(p, q));
            }
            brute = brute.max(best);
        }
        assert!((d - brute).abs() < 2e-3, "{d} vs brute {brute}");
    }

    #[test]
    fn hausdorff_triangle_inequality_on_samples() {
        let a = extract_interface(&circle_field(65, 0.30), 0.0).remove(0);
        let b = extract_interface(&circle_field(65, 0.25), 0.0).remove(0);
        let c = extract_interface(&circle_field(65, 0.18), 0.0).remove(0);
        let sp = 1.0 / 256.0;
        let dab = hausdorff(&a, &b, sp).unwrap();
        let dbc = hausdorff(&b, &c, sp).unwrap();
        let dac = hausdorff(&a, &c, sp).unwrap();
        assert!(dac <= dab + dbc + 1e-9);
        assert!((hausdorff(&b, &a, sp).unwrap() - dab).abs() < 1e-12);
    }

    #[test]
    fn hausdorff_rejects_empty() {
        let e = Polyline {
            vertices: vec![],
            closed: false,
        };
        let f = circle_field(65, 0.3);
        let c = extract_interface(&f, 0.0).remove(0);
        assert!(hausdorff(&e, &c, 0.01).is_err());
    }

    #[test]
    fn layer_thickness_of_exact_profile() {
        let g = Grid::new(257, 257, 1.0, 1.0).unwrap();
        let eps = 0.02;
        let f = ScalarField::from_fn(&g, |x, y| u0(((x - 0.5).hypot(y - 0.5) - 0.3) / eps));
        let eta = 0.1;
        let t = layer_thickness(&f, eta).unwrap();
        let expected = 2.0 * eps * u0_inv(eta).unwrap();
        assert!(
            (t - expected).abs() / expected < 0.05,
            "thickness {t} vs {expected}"
        );
    }

    #[test]
    fn layer_thickness_scales_linearly_in_eps() {
        let g = Grid::new(257, 257, 1.0, 1.0).unwrap();
        let eta = 0.1;
        let t: Vec<f64> = [0.04, 0.02]
            .iter()
            .map(|&eps| {
                let f =
                    ScalarField::from_fn(&g, |x, y| u0(((x - 0.5).hypot(y - 0.5) - 0.3) / eps));
                layer_thickness(&f, eta).unwrap()
            })
            .collect();
        let ratio = t[0] / t[1];
        assert!((ratio - 2.0).abs() < 0.3, "ratio {ratio}");
    }

    #[test]
    fn layer_thickness_of_step_is_subcell() {
        let g = Grid::new(129, 129, 1.0, 1.0).unwrap();
        let f = ScalarField::from_fn(&g, |x, y| {
            if (x - 0.5).hypot(y - 0.5) < 0.3 {
                1.0
            } else {
                0.0
            }
        });
        let t = layer_thickness(&f, 0.1).unwrap();
        assert!(t <= 1.5 * g.hx(), "step thickness {t}");
    }

    #[test]
    fn fit_rate_recovers_exact_power_laws() {
        let fit = fit_rate(&[(0.04, 0.12), (0.02, 0.06), (0.01, 0.03)]).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-12);
        assert!((fit.intercept - 3.0f64.ln()).abs() < 1e-12);
        assert!(fit.residual < 1e-12);

        let sq = fit_rate(&[(0.04, 0.0016), (0.02, 0.0004), (0.01, 0.0001)]).unwrap();
        assert!((sq.slope - 2.0).abs() < 1e-12);
    }

    #[test]
    fn fit_rate_scaling_invariance() {
        let base = [(0.04, 0.11), (0.02, 0.052), (0.01, 0.027)];
        let scaled: Vec<(f64, f64)> = base.iter().map(|&(e, m)| (e, 7.0 * m)).collect();
        let f0 = fit_rate(&base).unwrap();
        let f1 = fit_rate(&scaled).unwrap();
        assert!((f0.slope - f1.slope).abs() < 1e-12);
        assert!((f1.intercept - f0.intercept - 7.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn fit_rate_rejects_bad_input() {
        assert!(fit_rate(&[(0.04, 1.0), (0.02, 0.5)]).is_err());
        assert!(matches!(
            fit_rate(&[(0.04, 1.0), (0.02, 0.5), (0.01, -0.2)]),
            Err(Error::NonpositiveMetric { .. })
        ));
        assert!(fit_rate(&[(0.04, 1.0), (0.04, 0.5), (0.01, 0.2)]).is_err());
    }

    #[test]
    fn generation_check_on_exact_step() {
        let g = Grid::new(65, 65, 1.0, 1.0).unwrap();
        let u0f = ScalarField::from_fn(&g, |x, y| {
            0.5 + 0.4 * ((0.3 - (x - 0.5).hypot(y - 0.5)) / 0.1).tanh()
        });
        let step = u0f.map(|v| if v > 0.5 { 1.0 } else { 0.0 });
        let r = generation_check(&step, &u0f, 5.0, 0.02, 0.1).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.upper_region_nodes > 0 && r.lower_region_nodes > 0);
        assert!((r.upper_region_margin - 0.1).abs() < 1e-12);
        assert!((r.lower_region_margin - 0.1).abs() < 1e-12);
    }

    #[test]
    fn round_trip_contour_of_polyline_distance() {
        // extract a contour, rebuild the distance to it, re-extract: the
        // zero set must not move by more than a cell
        let f = circle_field(97, 0.3);
        let c = extract_interface(&f, 0.0).remove(0);
        let g = f.grid().clone();
        let segs: Vec<_> = {
            let mut s = Vec::new();
            let v = &c.vertices;
            for w in v.windows(2) {
                s.push((w[0], w[1]));
            }
            s.push((*v.last().unwrap(), v[0]));
            s
        };
        let d = ScalarField::from_fn(&g, |x, y| {
            let mut best = f64::INFINITY;
            for &(a, b) in &segs {
                best = best.min(point_segment_distance((x, y), a, b));
            }
            best * ((x - 0.5).hypot(y - 0.5) - 0.3).signum()
        });
        let c2 = extract_interface(&d, 0.0).remove(0);
        let err = hausdorff(&c, &c2, g.hx() / 4.0).unwrap();
        assert!(err <= g.hx(), "round-trip displacement {err}");
    }
}
