use std::f64::consts::TAU;

use super::star::golden_min;
use super::{dist, dot, norm, segment_distance, Point, StarBoundary};
use crate::error::{Error, Result};

pub const DEFAULT_CAP_RESOLUTION: usize = 2048;

/// The line `{x · e = λ}` with unit normal `e` pointing into the cap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfplaneSweepFrame {
    direction: Point,
    lambda: f64,
}

impl HalfplaneSweepFrame {
    pub fn new(direction: Point, lambda: f64) -> Result<Self> {
        if (norm(direction) - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidGeometry(format!(
                "sweep direction must be a unit vector, |e| = {}",
                norm(direction)
            )));
        }
        Ok(HalfplaneSweepFrame { direction, lambda })
    }

    pub fn from_angle(phi: f64, lambda: f64) -> Self {
        let (s, c) = phi.sin_cos();
        HalfplaneSweepFrame { direction: [c, s], lambda }
    }

    pub fn direction(&self) -> Point {
        self.direction
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        HalfplaneSweepFrame { lambda, ..*self }
    }

    pub fn height(&self, p: Point) -> f64 {
        dot(p, self.direction)
    }

    /// Coordinate along the line.
    pub fn along(&self, p: Point) -> f64 {
        -p[0] * self.direction[1] + p[1] * self.direction[0]
    }
}

/// `x − 2((x·e) − λ)e`.
pub fn reflect_point(x: Point, frame: &HalfplaneSweepFrame) -> Point {
    let e = frame.direction;
    let s = 2.0 * (dot(x, e) - frame.lambda);
    [x[0] - s * e[0], x[1] - s * e[1]]
}

/// Dense uniform-θ samples of a boundary curve, reused across many sweep positions.
#[derive(Clone, Debug)]
pub struct BoundaryTable {
    curve: StarBoundary,
    thetas: Vec<f64>,
    points: Vec<Point>,
}

impl BoundaryTable {
    pub fn new(curve: &StarBoundary, resolution: usize) -> Self {
        let n = resolution.max(16);
        let thetas: Vec<f64> = (0..n).map(|j| TAU * j as f64 / n as f64).collect();
        let points = thetas.iter().map(|&t| curve.point(t)).collect();
        BoundaryTable { curve: curve.clone(), thetas, points }
    }

    pub fn curve(&self) -> &StarBoundary {
        &self.curve
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    fn step(&self) -> f64 {
        TAU / self.thetas.len() as f64
    }

    /// Support value `max_θ P(θ)·e` and its maximizing parameter.
    pub fn support(&self, e: Point) -> (f64, f64) {
        let (j, _) = self
            .points
            .iter()
            .enumerate()
            .map(|(j, p)| (j, dot(*p, e)))
            .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        let h = self.step();
        let th = golden_min(|t| -dot(self.curve.point(t), e), self.thetas[j] - h, self.thetas[j] + h, 1e-11);
        let v = dot(self.curve.point(th), e);
        if v >= dot(self.points[j], e) {
            (v, th)
        } else {
            (dot(self.points[j], e), self.thetas[j])
        }
    }
}

/// One connected piece of the outer boundary lying strictly above the line, reflected.
#[derive(Clone, Debug)]
pub struct CapArc {
    /// Parameter interval on the original curve (`start < end`, unwrapped).
    pub theta_start: f64,
    pub theta_end: f64,
    /// Reflected polyline, from `theta_start` to `theta_end`.
    pub points: Vec<Point>,
    /// Curve parameters of `points`.
    pub thetas: Vec<f64>,
}

/// Reflection `Ω_λ` of the part of Ω above the sweep line.
#[derive(Clone, Debug)]
pub struct ReflectedCap {
    frame: HalfplaneSweepFrame,
    outer: StarBoundary,
    arcs: Vec<CapArc>,
    chords: Vec<[Point; 2]>,
    crossings: Vec<f64>,
}

pub fn reflected_cap(outer: &StarBoundary, frame: &HalfplaneSweepFrame) -> ReflectedCap {
    reflected_cap_with(outer, frame, DEFAULT_CAP_RESOLUTION)
}

pub fn reflected_cap_with(outer: &StarBoundary, frame: &HalfplaneSweepFrame, resolution: usize) -> ReflectedCap {
    ReflectedCap::from_table(&BoundaryTable::new(outer, resolution), frame)
}

impl ReflectedCap {
    pub fn from_table(table: &BoundaryTable, frame: &HalfplaneSweepFrame) -> Self {
        let curve = &table.curve;
        let e = frame.direction;
        let lambda = frame.lambda;
        let g = |t: f64| dot(curve.point(t), e) - lambda;

        let (top, top_theta) = table.support(e);
        let mut empty = ReflectedCap {
            frame: *frame,
            outer: curve.clone(),
            arcs: Vec::new(),
            chords: Vec::new(),
            crossings: Vec::new(),
        };
        if top <= lambda {
            return empty;
        }

        // Samples plus the exact support point so thin caps are never missed.
        let mut samples: Vec<(f64, f64)> = table
            .thetas
            .iter()
            .zip(&table.points)
            .map(|(&t, p)| (t, dot(*p, e) - lambda))
            .collect();
        let top_theta = top_theta.rem_euclid(TAU);
        samples.push((top_theta, top - lambda));
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));

        let n = samples.len();
        if samples.iter().all(|s| s.1 > 0.0) {
            let h = table.step();
            let thetas: Vec<f64> = (0..=table.len()).map(|j| j as f64 * h).collect();
            let points = thetas.iter().map(|&t| reflect_point(curve.point(t), frame)).collect();
            empty.arcs.push(CapArc { theta_start: 0.0, theta_end: TAU, points, thetas });
            return empty;
        }

        // Bracketed sign changes on the cyclic sample sequence.
        let mut ups = Vec::new();
        let mut downs = Vec::new();
        for i in 0..n {
            let (t0, g0) = samples[i];
            let (mut t1, g1) = samples[(i + 1) % n];
            if i + 1 == n {
                t1 += TAU;
            }
            if (g0 > 0.0) != (g1 > 0.0) {
                let root = bisect(&g, t0, t1, g0 > 0.0);
                if g1 > 0.0 {
                    ups.push(root);
                } else {
                    downs.push(root);
                }
            }
        }
        let step = table.step();
        for &up in &ups {
            let down = downs
                .iter()
                .map(|&d| if d <= up { d + TAU } else { d })
                .fold(f64::INFINITY, f64::min);
            let span = down - up;
            let mut segs = ((span / step).ceil() as usize).max(2);
            segs += segs % 2;
            let thetas: Vec<f64> = (0..=segs).map(|k| up + span * k as f64 / segs as f64).collect();
            let points = thetas.iter().map(|&t| reflect_point(curve.point(t), frame)).collect();
            empty.arcs.push(CapArc { theta_start: up, theta_end: down, points, thetas });
        }

        let mut cross: Vec<Point> = ups.iter().chain(&downs).map(|&t| curve.point(t)).collect();
        cross.sort_by(|a, b| frame.along(*a).total_cmp(&frame.along(*b)));
        empty.chords = cross.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
        empty.crossings = ups.into_iter().chain(downs).collect();
        empty
    }

    pub fn frame(&self) -> &HalfplaneSweepFrame {
        &self.frame
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn arcs(&self) -> &[CapArc] {
        &self.arcs
    }

    /// Segments of the sweep line inside Ω̄.
    pub fn chords(&self) -> &[[Point; 2]] {
        &self.chords
    }

    /// Curve parameters where the outer boundary meets the sweep line.
    pub fn crossings(&self) -> &[f64] {
        &self.crossings
    }

    pub fn contains(&self, p: Point) -> bool {
        !self.is_empty()
            && self.frame.height(p) < self.frame.lambda
            && self.outer.contains(reflect_point(p, &self.frame))
    }

    /// Unsigned distance to the polygonal boundary and the closest point on it.
    pub fn boundary_distance(&self, p: Point) -> (f64, Point) {
        let mut best = (f64::INFINITY, p);
        for arc in &self.arcs {
            for w in arc.points.windows(2) {
                let d = segment_distance(p, w[0], w[1]);
                if d.0 < best.0 {
                    best = d;
                }
            }
        }
        for c in &self.chords {
            let d = segment_distance(p, c[0], c[1]);
            if d.0 < best.0 {
                best = d;
            }
        }
        best
    }

    /// Signed distance to the cap region, negative inside.
    pub fn signed_distance(&self, p: Point) -> f64 {
        if self.is_empty() {
            return f64::INFINITY;
        }
        let (d, _) = self.boundary_distance(p);
        if self.contains(p) {
            -d
        } else {
            d
        }
    }

    /// All polygon vertices (reflected arcs, then chord endpoints).
    pub fn polygon_points(&self) -> impl Iterator<Item = Point> + '_ {
        self.arcs.iter().flat_map(|a| a.points.iter().copied())
    }

    fn bounding_box(&self) -> [Point; 2] {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in self.polygon_points() {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        [lo, hi]
    }
}

fn bisect(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, positive_at_a: bool) -> f64 {
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        if (g(m) > 0.0) == positive_at_a {
            a = m;
        } else {
            b = m;
        }
        if b - a < 1e-15 {
            break;
        }
    }
    0.5 * (a + b)
}

/// Minimum distance between `cl(Ω_λ)` and the core closure (negative on overlap),
/// with the nearest point on the cap side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapReport {
    pub gap: f64,
    pub witness: Point,
    pub core: usize,
}

/// Core curve with a cached bounding radius for cheap distance lower bounds.
#[derive(Clone, Debug)]
pub(crate) struct BoundedCore {
    pub curve: StarBoundary,
    pub rmax: f64,
    pub samples: Vec<Point>,
}

impl BoundedCore {
    pub fn new(curve: &StarBoundary) -> Self {
        const N: usize = 256;
        BoundedCore {
            curve: curve.clone(),
            rmax: curve.max_radius() * (1.0 + 1e-9),
            samples: (0..N).map(|j| curve.point(TAU * j as f64 / N as f64)).collect(),
        }
    }
}

pub fn signed_gap(cap: &ReflectedCap, cores: &[StarBoundary]) -> Option<GapReport> {
    let bounded: Vec<_> = cores.iter().map(BoundedCore::new).collect();
    signed_gap_bounded(cap, &bounded)
}

fn offer(best: &mut Option<GapReport>, gap: f64, witness: Point, core: usize) {
    if best.is_none_or(|b| gap < b.gap) {
        *best = Some(GapReport { gap, witness, core });
    }
}

pub(crate) fn signed_gap_bounded(cap: &ReflectedCap, cores: &[BoundedCore]) -> Option<GapReport> {
    signed_gap_screened(cap, cores, f64::INFINITY)
}

/// Cheap lower bound on the distance from the cap boundary to a disk
/// enclosing the core, with the sample attaining it.
fn gap_lower_bound(cap: &ReflectedCap, c: Point, rmax: f64) -> (f64, Point) {
    let mut best = (f64::INFINITY, [f64::NAN; 2]);
    for arc in &cap.arcs {
        let mut spacing: f64 = 0.0;
        for w in arc.points.windows(2) {
            spacing = spacing.max(dist(w[0], w[1]));
        }
        for p in &arc.points {
            let d = dist(*p, c) - rmax - spacing;
            if d < best.0 {
                best = (d, *p);
            }
        }
    }
    for ch in &cap.chords {
        let (d, q) = segment_distance(c, ch[0], ch[1]);
        if d - rmax < best.0 {
            best = (d - rmax, q);
        }
    }
    best
}

/// Like [`signed_gap_bounded`], but a core whose lower bound exceeds
/// `cutoff` reports that bound instead of the exact gap.
pub(crate) fn signed_gap_screened(cap: &ReflectedCap, cores: &[BoundedCore], cutoff: f64) -> Option<GapReport> {
    if cap.is_empty() {
        return None;
    }
    let frame = cap.frame;
    let outer = &cap.outer;
    let mut best: Option<GapReport> = None;
    let [lo, hi] = cap.bounding_box();

    for (ci, core) in cores.iter().enumerate() {
        let c = core.curve.center();
        if cutoff.is_finite() {
            let (lb, w) = gap_lower_bound(cap, c, core.rmax);
            // A positive bound means the enclosing disk lies wholly inside or
            // outside the cap; the center decides which.
            if lb > cutoff && !cap.contains(c) {
                offer(&mut best, lb, w, ci);
                continue;
            }
        }
        let lower = |p: Point| dist(p, c) - core.rmax;

        // Reflected arcs: best sample, then refinement in the curve parameter.
        let mut cand: Option<(f64, usize, usize)> = None;
        for (ai, arc) in cap.arcs.iter().enumerate() {
            for (k, p) in arc.points.iter().enumerate() {
                if cand.is_some_and(|b| lower(*p) >= b.0) {
                    continue;
                }
                let d = core.curve.signed_distance(*p);
                if cand.is_none_or(|b| d < b.0) {
                    cand = Some((d, ai, k));
                }
            }
        }
        if let Some((d0, ai, k)) = cand {
            let arc = &cap.arcs[ai];
            let a = arc.thetas[k.saturating_sub(1)];
            let b = arc.thetas[(k + 1).min(arc.thetas.len() - 1)];
            let f = |t: f64| core.curve.signed_distance(reflect_point(outer.point(t), &frame));
            let t = golden_min(f, a, b, 1e-12);
            let d = f(t);
            if d < d0 {
                offer(&mut best, d, reflect_point(outer.point(t), &frame), ci);
            } else {
                offer(&mut best, d0, arc.points[k], ci);
            }
        }

        // Chords on the sweep line.
        for ch in &cap.chords {
            let (lb, _) = segment_distance(c, ch[0], ch[1]);
            if best.is_some_and(|b| lb - core.rmax >= b.gap) {
                continue;
            }
            let at = |s: f64| [ch[0][0] + s * (ch[1][0] - ch[0][0]), ch[0][1] + s * (ch[1][1] - ch[0][1])];
            const M: usize = 64;
            let (mut sb, mut db) = (0.0, f64::INFINITY);
            for j in 0..=M {
                let s = j as f64 / M as f64;
                let d = core.curve.signed_distance(at(s));
                if d < db {
                    db = d;
                    sb = s;
                }
            }
            let h = 1.0 / M as f64;
            let s = golden_min(|s| core.curve.signed_distance(at(s)), (sb - h).max(0.0), (sb + h).min(1.0), 1e-12);
            let d = core.curve.signed_distance(at(s));
            if d < db {
                offer(&mut best, d, at(s), ci);
            } else {
                offer(&mut best, db, at(sb), ci);
            }
        }

        // Core points swallowed by the cap.
        let overlaps_box = c[0] + core.rmax >= lo[0]
            && c[0] - core.rmax <= hi[0]
            && c[1] + core.rmax >= lo[1]
            && c[1] - core.rmax <= hi[1];
        if overlaps_box {
            for q in &core.samples {
                if cap.contains(*q) {
                    let (d, w) = cap.boundary_distance(*q);
                    offer(&mut best, -d, w, ci);
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rotate_point;

    fn unit() -> StarBoundary {
        StarBoundary::circle([0.0, 0.0], 1.0).unwrap()
    }

    #[test]
    fn reflection_examples() {
        let f = HalfplaneSweepFrame::new([1.0, 0.0], 2.0).unwrap();
        assert_eq!(reflect_point([3.0, 1.0], &f), [1.0, 1.0]);
        assert_eq!(reflect_point([2.0, -5.0], &f), [2.0, -5.0]);
        assert!(HalfplaneSweepFrame::new([1.0, 0.1], 0.0).is_err());
    }

    #[test]
    fn cap_of_unit_disk() {
        let f = HalfplaneSweepFrame::new([1.0, 0.0], 0.5).unwrap();
        let cap = reflected_cap(&unit(), &f);
        assert_eq!(cap.arcs().len(), 1);
        let leftmost = cap.polygon_points().fold([f64::INFINITY, 0.0], |a, p| if p[0] < a[0] { p } else { a });
        assert!(dist(leftmost, [0.0, 0.0]) < 1e-12);
        assert_eq!(cap.chords().len(), 1);
        assert!(cap.contains([0.2, 0.0]));
        assert!(!cap.contains([-0.1, 0.0]));

        let tangent = reflected_cap(&unit(), &f.with_lambda(1.0));
        assert!(tangent.is_empty());

        let cap = reflected_cap(&unit(), &f.with_lambda(0.75));
        let leftmost = cap.polygon_points().fold([f64::INFINITY, 0.0], |a, p| if p[0] < a[0] { p } else { a });
        assert!(dist(leftmost, [0.5, 0.0]) < 1e-12);
    }

    #[test]
    fn gap_for_concentric_disks() {
        let core = StarBoundary::circle([0.0, 0.0], 0.5).unwrap();
        for (lambda, expected) in [(0.8, 0.1), (0.75, 0.0), (0.9, 0.3)] {
            let f = HalfplaneSweepFrame::new([1.0, 0.0], lambda).unwrap();
            let cap = reflected_cap(&unit(), &f);
            let g = signed_gap(&cap, std::slice::from_ref(&core)).unwrap();
            assert!((g.gap - expected).abs() < 1e-10, "λ={lambda}: {} vs {expected}", g.gap);
            assert!(dist(g.witness, [2.0 * lambda - 1.0, 0.0]) < 1e-5);
        }
        // overlap is negative
        let f = HalfplaneSweepFrame::new([1.0, 0.0], 0.6).unwrap();
        let g = signed_gap(&reflected_cap(&unit(), &f), std::slice::from_ref(&core)).unwrap();
        assert!(g.gap < -0.1);
    }

    #[test]
    fn gap_is_rigid_motion_invariant() {
        let outer = StarBoundary::new([0.0, 0.0], 1.0, vec![0.05, 0.1], vec![0.0, 0.03]).unwrap();
        let core = StarBoundary::new([0.1, -0.05], 0.3, vec![0.02], vec![0.01]).unwrap();
        let f = HalfplaneSweepFrame::from_angle(0.3, 0.75);
        let g0 = signed_gap(&reflected_cap(&outer, &f), std::slice::from_ref(&core)).unwrap();
        for phi in [0.4, 1.7, -2.5] {
            let pivot = [0.3, -0.2];
            let o = outer.rotated(phi, pivot);
            let c = core.rotated(phi, pivot);
            let e = rotate_point(f.direction(), phi, [0.0, 0.0]);
            let lam = f.lambda() + dot(rotate_point([0.0, 0.0], phi, pivot), e);
            let fr = HalfplaneSweepFrame::from_angle(0.3 + phi, lam);
            let g = signed_gap(&reflected_cap(&o, &fr), std::slice::from_ref(&c)).unwrap();
            assert!((g.gap - g0.gap).abs() < 1e-9, "{} vs {}", g.gap, g0.gap);
        }
    }
}
