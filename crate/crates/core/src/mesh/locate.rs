use super::element::{eval, shape};
use super::Mesh;
use crate::geometry::Point;

/// Element containing a point and its reference coordinates `(ξ, η)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Location {
    pub element: usize,
    pub xi: f64,
    pub eta: f64,
    /// False when the point lies slightly outside the discrete domain and
    /// the coordinates were extrapolated from the nearest element.
    pub inside: bool,
}

/// Uniform bucket grid over element bounding boxes.
#[derive(Clone, Debug)]
pub(crate) struct Locator {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

const INSIDE_TOL: f64 = 1e-10;
/// Largest barycentric violation accepted for extrapolated lookups.
const EXTRAPOLATE_TOL: f64 = 0.05;

impl Locator {
    pub(crate) fn build(nodes: &[Point], elements: &[usize], npe: usize, h: f64) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in nodes {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let cell = (1.5 * h).max(1e-12);
        let nx = (((hi[0] - lo[0]) / cell).ceil() as usize).max(1);
        let ny = (((hi[1] - lo[1]) / cell).ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        let loc = Locator { origin: lo, cell, nx, ny, buckets: Vec::new() };
        for (e, el) in elements.chunks(npe).enumerate() {
            let (mut a, mut b) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for &i in el {
                for k in 0..2 {
                    a[k] = a[k].min(nodes[i][k]);
                    b[k] = b[k].max(nodes[i][k]);
                }
            }
            let pad = 1e-9 * cell;
            let (i0, j0) = loc.cell_of([a[0] - pad, a[1] - pad]);
            let (i1, j1) = loc.cell_of([b[0] + pad, b[1] + pad]);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(e);
                }
            }
        }
        Locator { buckets, ..loc }
    }

    fn cell_of(&self, p: Point) -> (usize, usize) {
        let i = ((p[0] - self.origin[0]) / self.cell).floor().clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = ((p[1] - self.origin[1]) / self.cell).floor().clamp(0.0, (self.ny - 1) as f64) as usize;
        (i, j)
    }

    pub(crate) fn locate(&self, mesh: &Mesh, p: Point) -> Option<Location> {
        let (ci, cj) = self.cell_of(p);
        let mut best: Option<(f64, Location)> = None;
        for ring in 0..2usize {
            let (i0, i1) = (ci.saturating_sub(ring), (ci + ring).min(self.nx - 1));
            let (j0, j1) = (cj.saturating_sub(ring), (cj + ring).min(self.ny - 1));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    if ring > 0 && i > i0 && i < i1 && j > j0 && j < j1 {
                        continue;
                    }
                    for &e in &self.buckets[j * self.nx + i] {
                        let coords = mesh.element_coords(e);
                        let (xi, eta) = inverse_map(&coords, p);
                        let viol = (-xi).max(-eta).max(xi + eta - 1.0).max(0.0);
                        if viol <= INSIDE_TOL {
                            return Some(Location { element: e, xi, eta, inside: true });
                        }
                        if best.as_ref().is_none_or(|b| viol < b.0) {
                            best = Some((viol, Location { element: e, xi, eta, inside: false }));
                        }
                    }
                }
            }
            if best.as_ref().is_some_and(|b| b.0 <= EXTRAPOLATE_TOL) {
                break;
            }
        }
        best.filter(|b| b.0 <= EXTRAPOLATE_TOL).map(|b| b.1)
    }
}

/// Newton inversion of the isoparametric map, started from the affine guess.
pub(crate) fn inverse_map(coords: &[Point], p: Point) -> (f64, f64) {
    let (a, b, c) = (coords[0], coords[1], coords[2]);
    let j = [[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let d = [p[0] - a[0], p[1] - a[1]];
    let mut xi = (j[1][1] * d[0] - j[0][1] * d[1]) / det;
    let mut eta = (-j[1][0] * d[0] + j[0][0] * d[1]) / det;
    if coords.len() == 3 {
        return (xi, eta);
    }
    for _ in 0..20 {
        let (_, g) = shape(2, xi, eta);
        let e = eval(coords, xi, eta);
        let mut jm = [[0.0; 2]; 2];
        for (i, q) in coords.iter().enumerate() {
            jm[0][0] += q[0] * g[i][0];
            jm[0][1] += q[0] * g[i][1];
            jm[1][0] += q[1] * g[i][0];
            jm[1][1] += q[1] * g[i][1];
        }
        let r = [p[0] - e.x[0], p[1] - e.x[1]];
        let det = jm[0][0] * jm[1][1] - jm[0][1] * jm[1][0];
        if det.abs() < 1e-300 {
            break;
        }
        let dxi = (jm[1][1] * r[0] - jm[0][1] * r[1]) / det;
        let deta = (-jm[1][0] * r[0] + jm[0][0] * r[1]) / det;
        xi += dxi;
        eta += deta;
        if dxi.abs() + deta.abs() < 1e-15 {
            break;
        }
    }
    (xi, eta)
}
