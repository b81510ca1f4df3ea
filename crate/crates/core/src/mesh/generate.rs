use std::f64::consts::TAU;

use spade::{ConstrainedDelaunayTriangulation, HasPosition, Point2, Triangulation};

use super::{Curve, CurveRef, Mesh, Region};
use crate::error::{Error, Result};
use crate::geometry::{cross, segment_distance, sub, Point, StarBoundary, TwoPhaseConfig};

/// Lattice points closer than this multiple of `h` to a curve are dropped.
const CLEARANCE: f64 = 0.55;
const SMOOTHING_PASSES: usize = 6;
/// Edges longer than this multiple of `h` get a midpoint inserted.
const SPLIT_FACTOR: f64 = 1.3;
const SPLIT_PASSES: usize = 4;
pub const MIN_ANGLE_DEG: f64 = 20.0;
pub const MAX_EDGE_FACTOR: f64 = 1.5;

#[derive(Clone, Copy, Debug)]
struct Vertex {
    p: Point2<f64>,
    id: usize,
}

impl HasPosition for Vertex {
    type Scalar = f64;

    fn position(&self) -> Point2<f64> {
        self.p
    }
}

/// Interface-fitted triangulation of `config` with element size `target_h`.
///
/// Curves are split at equal arc length (node count a multiple of four,
/// first node at parameter 0), the interior is seeded with a triangular
/// lattice anchored at the outer center, the union is triangulated by
/// constrained Delaunay and relaxed by a few rounds of Laplacian smoothing.
pub fn generate_mesh(config: &TwoPhaseConfig, target_h: f64, order: usize) -> Result<Mesh> {
    if !(target_h.is_finite() && target_h > 0.0) {
        return Err(Error::Meshing(format!("target_h must be positive, got {target_h}")));
    }
    if order != 1 && order != 2 {
        return Err(Error::Meshing(format!("element order must be 1 or 2, got {order}")));
    }
    let curves: Vec<(Curve, &StarBoundary)> = std::iter::once((Curve::Outer, config.outer()))
        .chain(config.cores().iter().enumerate().map(|(i, c)| (Curve::Core(i), c)))
        .collect();
    for (c, curve) in &curves {
        let radius = 1.0 / curve.max_curvature().max(1e-300);
        if target_h > radius {
            return Err(Error::Meshing(format!(
                "target_h {target_h} exceeds the smallest radius of curvature {radius:.4} of {c:?}"
            )));
        }
    }

    let mut vertices: Vec<Point> = Vec::new();
    let mut vertex_curve: Vec<Option<CurveRef>> = Vec::new();
    let mut loops: Vec<Vec<usize>> = Vec::new();
    for (c, curve) in &curves {
        let thetas = equal_arc_parameters(curve, target_h);
        let start = vertices.len();
        for &t in &thetas {
            vertices.push(curve.point(t));
            vertex_curve.push(Some(CurveRef { curve: *c, theta: t }));
        }
        loops.push((start..vertices.len()).collect());
    }
    let n_fixed = vertices.len();

    let grid = SegmentGrid::new(&vertices, &loops, target_h);
    let outer = config.outer();
    let (cx, cy) = (outer.center()[0], outer.center()[1]);
    let rmax = outer.max_radius();
    let dy = target_h * 3f64.sqrt() / 2.0;
    let nj = (rmax / dy).ceil() as i64 + 1;
    let ni = (rmax / target_h).ceil() as i64 + 2;
    for j in -nj..=nj {
        let shift = 0.5 * (j.rem_euclid(2) as f64);
        for i in -ni..=ni {
            let p = [cx + target_h * (i as f64 + shift), cy + dy * j as f64];
            if outer.radial_margin(p) <= 0.0 {
                continue;
            }
            if grid.distance(p, CLEARANCE * target_h) <= CLEARANCE * target_h {
                continue;
            }
            vertices.push(p);
            vertex_curve.push(None);
        }
    }

    let outer_poly: Vec<Point> = loops[0].iter().map(|&i| vertices[i]).collect();
    let core_polys: Vec<Vec<Point>> = loops[1..].iter().map(|l| l.iter().map(|&i| vertices[i]).collect()).collect();
    let constraints: Vec<[usize; 2]> = loops
        .iter()
        .flat_map(|l| (0..l.len()).map(move |k| [l[k], l[(k + 1) % l.len()]]))
        .collect();

    let mut tris = triangulate(&vertices, &constraints, &outer_poly)?;
    for _ in 0..SPLIT_PASSES {
        if !split_long_edges(&mut vertices, &mut vertex_curve, &tris, SPLIT_FACTOR * target_h) {
            break;
        }
        tris = triangulate(&vertices, &constraints, &outer_poly)?;
    }
    for _ in 0..SMOOTHING_PASSES {
        smooth(&mut vertices, &tris, n_fixed);
        tris = triangulate(&vertices, &constraints, &outer_poly)?;
    }

    let regions: Vec<Region> = tris
        .iter()
        .map(|t| {
            let c = centroid(&vertices, t);
            core_polys
                .iter()
                .position(|poly| point_in_polygon(c, poly))
                .map_or(Region::Shell, Region::Core)
        })
        .collect();
    let mesh = Mesh::assemble(config.clone(), target_h, order, vertices, vertex_curve, tris, regions)?;
    let min_angle = mesh.min_angle_deg();
    let max_edge = mesh.max_edge_length();
    if min_angle < MIN_ANGLE_DEG {
        return Err(Error::Meshing(format!("minimum angle {min_angle:.2}° below {MIN_ANGLE_DEG}°")));
    }
    if max_edge > MAX_EDGE_FACTOR * target_h {
        return Err(Error::Meshing(format!(
            "longest edge {max_edge:.4} exceeds {MAX_EDGE_FACTOR}·h = {:.4}",
            MAX_EDGE_FACTOR * target_h
        )));
    }
    Ok(mesh)
}

/// Insert the midpoint of every edge longer than `limit`; false if none.
fn split_long_edges(vertices: &mut Vec<Point>, vertex_curve: &mut Vec<Option<CurveRef>>, tris: &[[usize; 3]], limit: f64) -> bool {
    let mut long = std::collections::BTreeSet::new();
    for t in tris {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if crate::geometry::dist(vertices[a], vertices[b]) > limit {
                long.insert((a.min(b), a.max(b)));
            }
        }
    }
    for &(a, b) in &long {
        let (p, q) = (vertices[a], vertices[b]);
        vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
        vertex_curve.push(None);
    }
    !long.is_empty()
}

/// Parameters at equal arc length, count rounded up to a multiple of four,
/// starting at `θ = 0`.
pub(crate) fn equal_arc_parameters(curve: &StarBoundary, h: f64) -> Vec<f64> {
    let fine = 4096.max(64 * curve.order());
    let dt = TAU / fine as f64;
    // cumulative arc length by Simpson on each fine interval
    let mut cum = Vec::with_capacity(fine + 1);
    cum.push(0.0);
    for j in 0..fine {
        let a = j as f64 * dt;
        let seg = dt / 6.0 * (curve.speed(a) + 4.0 * curve.speed(a + 0.5 * dt) + curve.speed(a + dt));
        cum.push(cum[j] + seg);
    }
    let length = cum[fine];
    let n = (((length / h).ceil() as usize).div_ceil(4) * 4).max(8);
    let mut out = Vec::with_capacity(n);
    let mut j = 0;
    for k in 0..n {
        let s = length * k as f64 / n as f64;
        while j + 1 < fine && cum[j + 1] < s {
            j += 1;
        }
        let mut t = j as f64 * dt + dt * (s - cum[j]) / (cum[j + 1] - cum[j]);
        // Newton on the local Simpson arc length
        for _ in 0..3 {
            let a = j as f64 * dt;
            let m = 0.5 * (a + t);
            let arc = cum[j] + (t - a) / 6.0 * (curve.speed(a) + 4.0 * curve.speed(m) + curve.speed(t));
            t -= (arc - s) / curve.speed(t);
        }
        out.push(if k == 0 { 0.0 } else { t });
    }
    out
}

fn triangulate(vertices: &[Point], constraints: &[[usize; 2]], outer: &[Point]) -> Result<Vec<[usize; 3]>> {
    let verts: Vec<Vertex> = vertices
        .iter()
        .enumerate()
        .map(|(id, p)| Vertex { p: Point2::new(p[0], p[1]), id })
        .collect();
    let mut conflict = None;
    let cdt = ConstrainedDelaunayTriangulation::<Vertex>::try_bulk_load_cdt(verts, constraints.to_vec(), |e| {
        conflict.get_or_insert(e);
    })
    .map_err(|e| Error::Meshing(format!("triangulation failed: {e:?}")))?;
    if let Some(e) = conflict {
        return Err(Error::Meshing(format!("constraint edges cross near {e:?}")));
    }
    if cdt.num_vertices() != vertices.len() {
        return Err(Error::Meshing("duplicate mesh vertices".into()));
    }
    let mut tris: Vec<[usize; 3]> = cdt
        .inner_faces()
        .map(|f| f.vertices().map(|v| v.data().id))
        .filter(|t| point_in_polygon(centroid(vertices, t), outer))
        .map(|mut t| {
            // canonical rotation: smallest id first, counter-clockwise
            if cross(sub(vertices[t[1]], vertices[t[0]]), sub(vertices[t[2]], vertices[t[0]])) < 0.0 {
                t.swap(1, 2);
            }
            let k = (0..3).min_by_key(|&k| t[k]).unwrap_or(0);
            [t[k], t[(k + 1) % 3], t[(k + 2) % 3]]
        })
        .collect();
    tris.sort_unstable();
    Ok(tris)
}

/// Gauss–Seidel Laplacian smoothing of the free vertices; a move is kept
/// only if every incident triangle stays positively oriented and its worst
/// angle does not get worse.
fn smooth(vertices: &mut [Point], tris: &[[usize; 3]], n_fixed: usize) {
    let n = vertices.len();
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (e, t) in tris.iter().enumerate() {
        for k in 0..3 {
            incident[t[k]].push(e);
            for m in 1..3 {
                let w = t[(k + m) % 3];
                if !neighbors[t[k]].contains(&w) {
                    neighbors[t[k]].push(w);
                }
            }
        }
    }
    for v in n_fixed..n {
        if neighbors[v].is_empty() {
            continue;
        }
        let k = neighbors[v].len() as f64;
        let target = neighbors[v]
            .iter()
            .fold([0.0, 0.0], |a, &w| [a[0] + vertices[w][0] / k, a[1] + vertices[w][1] / k]);
        let before = incident[v].iter().map(|&e| worst_angle(vertices, &tris[e])).fold(f64::INFINITY, f64::min);
        let old = vertices[v];
        vertices[v] = target;
        let ok = incident[v].iter().all(|&e| {
            let t = &tris[e];
            cross(sub(vertices[t[1]], vertices[t[0]]), sub(vertices[t[2]], vertices[t[0]])) > 0.0
        });
        let after = incident[v].iter().map(|&e| worst_angle(vertices, &tris[e])).fold(f64::INFINITY, f64::min);
        if !ok || after < before {
            vertices[v] = old;
        }
    }
}

fn worst_angle(v: &[Point], t: &[usize; 3]) -> f64 {
    (0..3)
        .map(|k| {
            let a = v[t[k]];
            let u = sub(v[t[(k + 1) % 3]], a);
            let w = sub(v[t[(k + 2) % 3]], a);
            cross(u, w).atan2(u[0] * w[0] + u[1] * w[1])
        })
        .fold(f64::INFINITY, f64::min)
}

fn centroid(v: &[Point], t: &[usize; 3]) -> Point {
    [(v[t[0]][0] + v[t[1]][0] + v[t[2]][0]) / 3.0, (v[t[0]][1] + v[t[1]][1] + v[t[2]][1]) / 3.0]
}

pub(crate) fn point_in_polygon(p: Point, poly: &[Point]) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Bucketed polyline segments for clearance queries.
struct SegmentGrid {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<(Point, Point)>>,
}

impl SegmentGrid {
    fn new(vertices: &[Point], loops: &[Vec<usize>], h: f64) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let cell = h;
        let nx = (((hi[0] - lo[0]) / cell).ceil() as usize).max(1) + 1;
        let ny = (((hi[1] - lo[1]) / cell).ceil() as usize).max(1) + 1;
        let mut g = SegmentGrid { origin: lo, cell, nx, ny, buckets: vec![Vec::new(); nx * ny] };
        for l in loops {
            for k in 0..l.len() {
                let (a, b) = (vertices[l[k]], vertices[l[(k + 1) % l.len()]]);
                let (i0, j0) = g.cell_of([a[0].min(b[0]), a[1].min(b[1])]);
                let (i1, j1) = g.cell_of([a[0].max(b[0]), a[1].max(b[1])]);
                for j in j0..=j1 {
                    for i in i0..=i1 {
                        g.buckets[j * nx + i].push((a, b));
                    }
                }
            }
        }
        g
    }

    fn cell_of(&self, p: Point) -> (usize, usize) {
        let i = ((p[0] - self.origin[0]) / self.cell).floor().clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = ((p[1] - self.origin[1]) / self.cell).floor().clamp(0.0, (self.ny - 1) as f64) as usize;
        (i, j)
    }

    /// Distance to the nearest segment, exact when below `reach`.
    fn distance(&self, p: Point, reach: f64) -> f64 {
        let r = (reach / self.cell).ceil() as usize + 1;
        let (ci, cj) = self.cell_of(p);
        let mut best = f64::INFINITY;
        for j in cj.saturating_sub(r)..=(cj + r).min(self.ny - 1) {
            for i in ci.saturating_sub(r)..=(ci + r).min(self.nx - 1) {
                for &(a, b) in &self.buckets[j * self.nx + i] {
                    best = best.min(segment_distance(p, a, b).0);
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arc_parameters_on_circle_are_uniform() {
        let c = StarBoundary::circle([0.0, 0.0], 1.0).unwrap();
        let t = equal_arc_parameters(&c, 0.1);
        assert_eq!(t.len() % 4, 0);
        for (k, th) in t.iter().enumerate() {
            assert!((th - TAU * k as f64 / t.len() as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn polygon_membership() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert!(point_in_polygon([0.5, 0.5], &sq));
        assert!(!point_in_polygon([1.5, 0.5], &sq));
    }
}
