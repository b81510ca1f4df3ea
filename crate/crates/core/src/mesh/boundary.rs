use std::sync::Arc;

use super::element::{line_rule, line_shape};
use crate::error::Result;
use crate::geometry::{norm, Point, StarBoundary};
use crate::linalg::{csc_from_entries, matvec, Csc, Factorized};

/// The outer boundary as an ordered closed loop of FEM nodes
/// (vertices and, for quadratic meshes, edge midnodes), counter-clockwise,
/// starting at the vertex with the smallest curve parameter.
#[derive(Clone, Debug)]
pub struct BoundaryLoop {
    curve: StarBoundary,
    order: usize,
    nodes: Vec<usize>,
    points: Vec<Point>,
    thetas: Vec<f64>,
    /// Local node indices per edge, `order + 1` per edge: start, (mid,) end.
    edges: Vec<usize>,
    mass: Csc,
    mass_factor: Arc<Factorized>,
    weights: Vec<f64>,
    length: f64,
}

/// One boundary quadrature point.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryQuadPoint {
    pub edge: usize,
    pub s: f64,
    pub x: Point,
    /// Quadrature weight times the arc-length element.
    pub weight: f64,
    /// Outward unit normal of the isoparametric edge.
    pub normal: Point,
}

impl BoundaryLoop {
    pub(crate) fn new(curve: StarBoundary, order: usize, nodes: Vec<usize>, points: Vec<Point>, thetas: Vec<f64>) -> Result<Self> {
        let n = nodes.len();
        let stride = order;
        let n_edges = n / stride;
        let mut edges = Vec::with_capacity(n_edges * (order + 1));
        for e in 0..n_edges {
            for k in 0..=order {
                edges.push((e * stride + k) % n);
            }
        }
        let mut entries = Vec::new();
        for q in edge_quadrature(&points, &edges, order) {
            let (l, _) = line_shape(order, q.s);
            let loc = &edges[q.edge * (order + 1)..(q.edge + 1) * (order + 1)];
            for (a, &ia) in loc.iter().enumerate() {
                for (b, &ib) in loc.iter().enumerate() {
                    entries.push((ia, ib, q.weight * l[a] * l[b]));
                }
            }
        }
        let mass = csc_from_entries(n, n, &entries)?;
        let mass_factor = Arc::new(Factorized::cholesky(mass.clone())?);
        let weights = matvec(&mass, &vec![1.0; n]);
        let length = weights.iter().sum();
        Ok(BoundaryLoop { curve, order, nodes, points, thetas, edges, mass, mass_factor, weights, length })
    }

    pub fn curve(&self) -> &StarBoundary {
        &self.curve
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Global mesh node ids in loop order.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Curve parameters of the loop nodes, in `[0, 2π)`.
    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len() / (self.order + 1)
    }

    pub fn edge_nodes(&self, e: usize) -> &[usize] {
        &self.edges[e * (self.order + 1)..(e + 1) * (self.order + 1)]
    }

    pub fn mass(&self) -> &Csc {
        &self.mass
    }

    /// `M·1`: the integral of each nodal basis function over the loop.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Perimeter of the discrete boundary.
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn integrate(&self, v: &[f64]) -> f64 {
        self.weights.iter().zip(v).map(|(w, x)| w * x).sum()
    }

    /// Boundary-mass inner product `aᵀ M b`.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        matvec(&self.mass, b).iter().zip(a).map(|(x, y)| x * y).sum()
    }

    pub fn mean(&self, v: &[f64]) -> f64 {
        self.integrate(v) / self.length
    }

    pub fn mass_apply(&self, v: &[f64]) -> Vec<f64> {
        matvec(&self.mass, v)
    }

    pub fn solve_mass(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.mass_factor.solve(rhs)
    }

    /// Gauss points on every edge of the isoparametric boundary.
    pub fn quadrature(&self) -> Vec<BoundaryQuadPoint> {
        edge_quadrature(&self.points, &self.edges, self.order)
    }

    /// Position and tangent `dx/ds` of edge `e` at local coordinate `s`.
    pub fn edge_geometry(&self, e: usize, s: f64) -> (Point, Point) {
        edge_geometry(&self.points, self.edge_nodes(e), self.order, s)
    }

    /// Curve parameter along edge `e` at local coordinate `s`, continuous
    /// across the `2π` seam.
    pub fn edge_theta(&self, e: usize, s: f64) -> f64 {
        let loc = self.edge_nodes(e);
        let a = self.thetas[loc[0]];
        let b = self.thetas[*loc.last().unwrap_or(&loc[0])];
        a + s * crate::geometry::wrap_angle(b - a)
    }

    /// Interpolate nodal values on edge `e` at `s`.
    pub fn interpolate(&self, values: &[f64], e: usize, s: f64) -> f64 {
        let (l, _) = line_shape(self.order, s);
        self.edge_nodes(e).iter().enumerate().map(|(k, &i)| l[k] * values[i]).sum()
    }

    /// `∮ Π_k f_k ds` with each factor interpolated at the Gauss points.
    pub fn integrate_product(&self, factors: &[&[f64]]) -> f64 {
        self.quadrature()
            .iter()
            .map(|q| q.weight * factors.iter().map(|f| self.interpolate(f, q.edge, q.s)).product::<f64>())
            .sum()
    }

    /// Analytic outward normals of the curve at the loop nodes.
    pub fn analytic_normals(&self) -> Vec<Point> {
        self.thetas.iter().map(|&t| self.curve.normal(t)).collect()
    }

    /// Analytic curvature at the loop nodes.
    pub fn curvatures(&self) -> Vec<f64> {
        self.thetas.iter().map(|&t| self.curve.curvature(t)).collect()
    }
}

fn edge_geometry(points: &[Point], loc: &[usize], order: usize, s: f64) -> (Point, Point) {
    let (l, dl) = line_shape(order, s);
    let mut x = [0.0; 2];
    let mut t = [0.0; 2];
    for (k, &i) in loc.iter().enumerate() {
        let p = points[i];
        x = [x[0] + l[k] * p[0], x[1] + l[k] * p[1]];
        t = [t[0] + dl[k] * p[0], t[1] + dl[k] * p[1]];
    }
    (x, t)
}

fn edge_quadrature(points: &[Point], edges: &[usize], order: usize) -> Vec<BoundaryQuadPoint> {
    let n_edges = edges.len() / (order + 1);
    let mut out = Vec::with_capacity(n_edges * 5);
    for e in 0..n_edges {
        let loc = &edges[e * (order + 1)..(e + 1) * (order + 1)];
        for &(s, w) in line_rule() {
            let (x, t) = edge_geometry(points, loc, order, s);
            let speed = norm(t);
            out.push(BoundaryQuadPoint { edge: e, s, x, weight: w * speed, normal: [t[1] / speed, -t[0] / speed] });
        }
    }
    out
}
