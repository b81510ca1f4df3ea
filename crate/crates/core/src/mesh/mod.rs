//! Interface-fitted triangulations of the core/shell pair with optional
//! quadratic isoparametric elements.

mod boundary;
pub(crate) mod element;
mod generate;
mod locate;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

pub use boundary::{BoundaryLoop, BoundaryQuadPoint};
pub use generate::{generate_mesh, MAX_EDGE_FACTOR, MIN_ANGLE_DEG};
pub use locate::Location;

use crate::error::{Error, Result};
use crate::geometry::{cross, dist, fmt17, norm, sub, wrap_angle, Point, StarBoundary, TwoPhaseConfig};
use element::{nodes_per_element, triangle_rule, REFERENCE_NODES};
use locate::Locator;

/// Boundary vertices must sit on the analytic curve within this fraction of `r0`.
pub const ON_CURVE_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    Shell,
    /// Core component index.
    Core(usize),
}

impl Region {
    pub fn is_core(self) -> bool {
        matches!(self, Region::Core(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Curve {
    Outer,
    Core(usize),
}

/// A node lying on one of the analytic curves, with its curve parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveRef {
    pub curve: Curve,
    pub theta: f64,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    config: TwoPhaseConfig,
    target_h: f64,
    order: usize,
    nodes: Vec<Point>,
    n_vertices: usize,
    node_curve: Vec<Option<CurveRef>>,
    triangles: Vec<[usize; 3]>,
    elements: Vec<usize>,
    regions: Vec<Region>,
    edge_mid: BTreeMap<(usize, usize), usize>,
    boundary_edges: Vec<[usize; 2]>,
    interface_edges: Vec<[usize; 2]>,
    interface_core: Vec<usize>,
    boundary: Arc<BoundaryLoop>,
    locator: Locator,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * cross(sub(b, a), sub(c, a))
}

fn curve_of<'a>(config: &'a TwoPhaseConfig, c: Curve) -> &'a StarBoundary {
    match c {
        Curve::Outer => config.outer(),
        Curve::Core(i) => &config.cores()[i],
    }
}

/// Parameter midway between two curve parameters, along the short arc.
fn mid_theta(a: f64, b: f64) -> f64 {
    (a + 0.5 * wrap_angle(b - a)).rem_euclid(std::f64::consts::TAU)
}

impl Mesh {
    /// Build a mesh from vertices and triangles; computes edges, midnodes,
    /// the boundary loop and validates conformity and orientation.
    pub(crate) fn assemble(
        config: TwoPhaseConfig,
        target_h: f64,
        order: usize,
        vertices: Vec<Point>,
        vertex_curve: Vec<Option<CurveRef>>,
        mut triangles: Vec<[usize; 3]>,
        regions: Vec<Region>,
    ) -> Result<Self> {
        if order != 1 && order != 2 {
            return Err(Error::Meshing(format!("element order must be 1 or 2, got {order}")));
        }
        for t in triangles.iter_mut() {
            let a = signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
            if a.abs() < 1e-14 * target_h * target_h {
                return Err(Error::Meshing(format!("degenerate triangle {t:?}")));
            }
            if a < 0.0 {
                t.swap(1, 2);
            }
        }
        let mut edge_tris: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (e, t) in triangles.iter().enumerate() {
            for k in 0..3 {
                edge_tris.entry(key(t[k], t[(k + 1) % 3])).or_default().push(e);
            }
        }
        let mut boundary_edges = Vec::new();
        let mut interface_edges = Vec::new();
        let mut interface_core = Vec::new();
        for (&(a, b), tris) in &edge_tris {
            match tris.len() {
                1 => {
                    let t = triangles[tris[0]];
                    let k = (0..3).find(|&k| key(t[k], t[(k + 1) % 3]) == (a, b)).unwrap_or(0);
                    boundary_edges.push([t[k], t[(k + 1) % 3]]);
                }
                2 => {
                    let (r0, r1) = (regions[tris[0]], regions[tris[1]]);
                    if r0 != r1 {
                        let (ct, core) = match (r0, r1) {
                            (Region::Core(c), _) => (tris[0], c),
                            (_, Region::Core(c)) => (tris[1], c),
                            _ => unreachable!(),
                        };
                        let t = triangles[ct];
                        let k = (0..3).find(|&k| key(t[k], t[(k + 1) % 3]) == (a, b)).unwrap_or(0);
                        interface_edges.push([t[k], t[(k + 1) % 3]]);
                        interface_core.push(core);
                    }
                }
                n => return Err(Error::Meshing(format!("edge ({a}, {b}) shared by {n} triangles"))),
            }
        }
        for e in &boundary_edges {
            for &v in e {
                if !matches!(vertex_curve[v], Some(CurveRef { curve: Curve::Outer, .. })) {
                    return Err(Error::Meshing(format!("boundary edge vertex {v} is not on the outer curve")));
                }
            }
        }
        for (e, &c) in interface_edges.iter().zip(&interface_core) {
            for &v in e {
                if !matches!(vertex_curve[v], Some(CurveRef { curve: Curve::Core(i), .. }) if i == c) {
                    return Err(Error::Meshing(format!("interface edge vertex {v} is not on core {c}")));
                }
            }
        }

        let n_vertices = vertices.len();
        let mut nodes = vertices;
        let mut node_curve = vertex_curve;
        let mut edge_mid = BTreeMap::new();
        if order == 2 {
            let boundary_set: std::collections::BTreeSet<_> = boundary_edges.iter().map(|e| key(e[0], e[1])).collect();
            let interface_set: std::collections::BTreeSet<_> =
                interface_edges.iter().map(|e| key(e[0], e[1])).collect();
            for &(a, b) in edge_tris.keys() {
                let curved = if boundary_set.contains(&(a, b)) || interface_set.contains(&(a, b)) {
                    match (node_curve[a], node_curve[b]) {
                        (Some(ca), Some(cb)) if ca.curve == cb.curve => Some(CurveRef {
                            curve: ca.curve,
                            theta: mid_theta(ca.theta, cb.theta),
                        }),
                        _ => None,
                    }
                } else {
                    None
                };
                let p = match curved {
                    Some(c) => curve_of(&config, c.curve).point(c.theta),
                    None => [0.5 * (nodes[a][0] + nodes[b][0]), 0.5 * (nodes[a][1] + nodes[b][1])],
                };
                edge_mid.insert((a, b), nodes.len());
                nodes.push(p);
                node_curve.push(curved);
            }
        }
        let mut elements = Vec::with_capacity(triangles.len() * nodes_per_element(order));
        for t in &triangles {
            elements.extend_from_slice(t);
            if order == 2 {
                for k in 0..3 {
                    elements.push(edge_mid[&key(t[k], t[(k + 1) % 3])]);
                }
            }
        }
        let boundary_edges = order_loop(boundary_edges, &node_curve)?;
        let boundary = Arc::new(Self::build_boundary(&config, order, &nodes, &node_curve, &boundary_edges, &edge_mid)?);
        let locator = Locator::build(&nodes, &elements, nodes_per_element(order), target_h);
        let mesh = Mesh {
            config,
            target_h,
            order,
            nodes,
            n_vertices,
            node_curve,
            triangles,
            elements,
            regions,
            edge_mid,
            boundary_edges,
            interface_edges,
            interface_core,
            boundary,
            locator,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    fn build_boundary(
        config: &TwoPhaseConfig,
        order: usize,
        nodes: &[Point],
        node_curve: &[Option<CurveRef>],
        boundary_edges: &[[usize; 2]],
        edge_mid: &BTreeMap<(usize, usize), usize>,
    ) -> Result<BoundaryLoop> {
        let mut ids = Vec::with_capacity(boundary_edges.len() * order);
        for e in boundary_edges {
            ids.push(e[0]);
            if order == 2 {
                ids.push(edge_mid[&key(e[0], e[1])]);
            }
        }
        let points = ids.iter().map(|&i| nodes[i]).collect();
        let thetas = ids.iter().map(|&i| node_curve[i].map(|c| c.theta).unwrap_or(0.0)).collect();
        BoundaryLoop::new(config.outer().clone(), order, ids, points, thetas)
    }

    fn validate(&self) -> Result<()> {
        let tol = ON_CURVE_TOLERANCE * self.config.outer().r0();
        for (i, c) in self.node_curve.iter().enumerate() {
            if let Some(c) = c {
                let p = curve_of(&self.config, c.curve).point(c.theta);
                if dist(p, self.nodes[i]) > tol {
                    return Err(Error::Meshing(format!("node {i} is off its curve by {:e}", dist(p, self.nodes[i]))));
                }
            }
        }
        if self.order == 2 {
            for e in 0..self.n_elements() {
                let c = self.element_coords(e);
                for &(xi, eta, _) in triangle_rule().iter() {
                    if element::eval(&c, xi, eta).det <= 0.0 {
                        return Err(Error::Meshing(format!("element {e} has a non-positive Jacobian")));
                    }
                }
                for r in REFERENCE_NODES {
                    if element::eval(&c, r[0], r[1]).det <= 0.0 {
                        return Err(Error::Meshing(format!("element {e} has a non-positive Jacobian")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn config(&self) -> &TwoPhaseConfig {
        &self.config
    }

    pub fn target_h(&self) -> f64 {
        self.target_h
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn vertices(&self) -> &[Point] {
        &self.nodes[..self.n_vertices]
    }

    pub fn node_curve(&self, i: usize) -> Option<CurveRef> {
        self.node_curve[i]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn n_elements(&self) -> usize {
        self.triangles.len()
    }

    pub fn nodes_per_element(&self) -> usize {
        nodes_per_element(self.order)
    }

    pub fn element_nodes(&self, e: usize) -> &[usize] {
        let n = self.nodes_per_element();
        &self.elements[e * n..(e + 1) * n]
    }

    pub fn element_coords(&self, e: usize) -> Vec<Point> {
        self.element_nodes(e).iter().map(|&i| self.nodes[i]).collect()
    }

    pub fn region(&self, e: usize) -> Region {
        self.regions[e]
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    /// Outer boundary edges as vertex pairs, counter-clockwise, in loop order.
    pub fn boundary_edges(&self) -> &[[usize; 2]] {
        &self.boundary_edges
    }

    /// Interface edges as vertex pairs oriented counter-clockwise around their core.
    pub fn interface_edges(&self) -> &[[usize; 2]] {
        &self.interface_edges
    }

    pub fn interface_core(&self, i: usize) -> usize {
        self.interface_core[i]
    }

    pub fn edge_midnode(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_mid.get(&key(a, b)).copied()
    }

    pub fn boundary(&self) -> &Arc<BoundaryLoop> {
        &self.boundary
    }

    /// Whether node `i` lies on the outer boundary.
    pub fn is_boundary_node(&self, i: usize) -> bool {
        matches!(self.node_curve[i], Some(CurveRef { curve: Curve::Outer, .. }))
    }

    /// Nodes on the interface of core `c`.
    pub fn interface_nodes(&self, c: usize) -> Vec<usize> {
        (0..self.n_nodes())
            .filter(|&i| matches!(self.node_curve[i], Some(CurveRef { curve: Curve::Core(k), .. }) if k == c))
            .collect()
    }

    /// Nodes strictly inside core `c` (not on its interface).
    pub fn core_interior_nodes(&self, c: usize) -> Vec<usize> {
        let mut inside = vec![false; self.n_nodes()];
        for e in 0..self.n_elements() {
            if self.regions[e] == Region::Core(c) {
                for &i in self.element_nodes(e) {
                    inside[i] = self.node_curve[i].is_none();
                }
            }
        }
        (0..self.n_nodes()).filter(|&i| inside[i]).collect()
    }

    /// Area of the isoparametric mesh.
    pub fn area(&self) -> f64 {
        self.area_where(|_| true)
    }

    pub fn core_area(&self) -> f64 {
        self.area_where(Region::is_core)
    }

    fn area_where(&self, pred: impl Fn(Region) -> bool) -> f64 {
        (0..self.n_elements())
            .filter(|&e| pred(self.regions[e]))
            .map(|e| {
                let c = self.element_coords(e);
                triangle_rule().iter().map(|&(x, y, w)| w * element::eval(&c, x, y).det).sum::<f64>()
            })
            .sum()
    }

    /// Sum of straight-sided triangle areas; optionally only core triangles.
    pub fn polygon_area(&self, core_only: bool) -> f64 {
        self.triangles
            .iter()
            .zip(&self.regions)
            .filter(|(_, r)| !core_only || r.is_core())
            .map(|(t, _)| signed_area(self.nodes[t[0]], self.nodes[t[1]], self.nodes[t[2]]))
            .sum()
    }

    /// Smallest interior angle of the straight triangles, in degrees.
    pub fn min_angle_deg(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                (0..3)
                    .map(|k| {
                        let a = self.nodes[t[k]];
                        let u = sub(self.nodes[t[(k + 1) % 3]], a);
                        let v = sub(self.nodes[t[(k + 2) % 3]], a);
                        cross(u, v).abs().atan2(u[0] * v[0] + u[1] * v[1]).to_degrees()
                    })
                    .fold(180.0, f64::min)
            })
            .fold(180.0, f64::min)
    }

    pub fn max_edge_length(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| (t[k], t[(k + 1) % 3])))
            .map(|(a, b)| dist(self.nodes[a], self.nodes[b]))
            .fold(0.0, f64::max)
    }

    /// `V − E + F` of the vertex triangulation.
    pub fn euler_characteristic(&self) -> i64 {
        let mut edges = std::collections::BTreeSet::new();
        for t in &self.triangles {
            for k in 0..3 {
                edges.insert(key(t[k], t[(k + 1) % 3]));
            }
        }
        self.n_vertices as i64 - edges.len() as i64 + self.triangles.len() as i64
    }

    /// Find the element containing `p` and its reference coordinates.
    pub fn locate(&self, p: Point) -> Option<Location> {
        self.locator.locate(self, p)
    }

    /// Split every triangle into four; new outer-boundary and interface
    /// vertices are placed on the analytic curves.
    pub fn refine_uniform(&self) -> Result<Mesh> {
        let nv = self.n_vertices;
        let mut vertices = self.nodes[..nv].to_vec();
        let mut vertex_curve = self.node_curve[..nv].to_vec();
        let boundary_set: std::collections::BTreeSet<_> =
            self.boundary_edges.iter().chain(&self.interface_edges).map(|e| key(e[0], e[1])).collect();
        let mut mids: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<Point>, vertex_curve: &mut Vec<Option<CurveRef>>| {
            let k = key(a, b);
            if let Some(&m) = mids.get(&k) {
                return m;
            }
            let curved = if boundary_set.contains(&k) {
                match (vertex_curve[a], vertex_curve[b]) {
                    (Some(ca), Some(cb)) if ca.curve == cb.curve => {
                        Some(CurveRef { curve: ca.curve, theta: mid_theta(ca.theta, cb.theta) })
                    }
                    _ => None,
                }
            } else {
                None
            };
            let p = match curved {
                Some(c) => curve_of(&self.config, c.curve).point(c.theta),
                None => [0.5 * (vertices[a][0] + vertices[b][0]), 0.5 * (vertices[a][1] + vertices[b][1])],
            };
            vertices.push(p);
            vertex_curve.push(curved);
            mids.insert(k, vertices.len() - 1);
            vertices.len() - 1
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        let mut regions = Vec::with_capacity(4 * self.triangles.len());
        for (t, &r) in self.triangles.iter().zip(&self.regions) {
            let [a, b, c] = *t;
            let ab = mid(a, b, &mut vertices, &mut vertex_curve);
            let bc = mid(b, c, &mut vertices, &mut vertex_curve);
            let ca = mid(c, a, &mut vertices, &mut vertex_curve);
            triangles.extend_from_slice(&[[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
            regions.extend_from_slice(&[r; 4]);
        }
        Mesh::assemble(self.config.clone(), 0.5 * self.target_h, self.order, vertices, vertex_curve, triangles, regions)
    }

    /// Plain-text export with `$vertices`, `$triangles(tag)`,
    /// `$boundary_edges` (with outward normals), `$interface_edges` and,
    /// for quadratic meshes, `$midnodes`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "$vertices {}", self.n_vertices);
        for p in self.vertices() {
            let _ = writeln!(s, "{} {}", fmt17(p[0]), fmt17(p[1]));
        }
        let _ = writeln!(s, "$triangles(tag) {}", self.triangles.len());
        for (t, r) in self.triangles.iter().zip(&self.regions) {
            let tag = match r {
                Region::Shell => "shell".to_string(),
                Region::Core(c) => format!("core{c}"),
            };
            let _ = writeln!(s, "{} {} {} {tag}", t[0], t[1], t[2]);
        }
        let _ = writeln!(s, "$boundary_edges {}", self.boundary_edges.len());
        for e in &self.boundary_edges {
            let d = sub(self.nodes[e[1]], self.nodes[e[0]]);
            let l = norm(d);
            let _ = writeln!(s, "{} {} {} {}", e[0], e[1], fmt17(d[1] / l), fmt17(-d[0] / l));
        }
        let _ = writeln!(s, "$interface_edges {}", self.interface_edges.len());
        for (e, c) in self.interface_edges.iter().zip(&self.interface_core) {
            let _ = writeln!(s, "{} {} core{c}", e[0], e[1]);
        }
        if self.order == 2 {
            let _ = writeln!(s, "$midnodes {}", self.edge_mid.len());
            for (&(a, b), &m) in &self.edge_mid {
                let _ = writeln!(s, "{a} {b} {} {}", fmt17(self.nodes[m][0]), fmt17(self.nodes[m][1]));
            }
        }
        s
    }
}

/// Chain boundary edges into a single counter-clockwise loop starting at the
/// vertex with the smallest curve parameter.
fn order_loop(edges: Vec<[usize; 2]>, node_curve: &[Option<CurveRef>]) -> Result<Vec<[usize; 2]>> {
    if edges.is_empty() {
        return Err(Error::Meshing("mesh has no boundary".into()));
    }
    let next: BTreeMap<usize, [usize; 2]> = edges.iter().map(|e| (e[0], *e)).collect();
    if next.len() != edges.len() {
        return Err(Error::Meshing("boundary is not a simple loop".into()));
    }
    let theta = |v: usize| node_curve[v].map(|c| c.theta.rem_euclid(std::f64::consts::TAU)).unwrap_or(f64::INFINITY);
    let start = edges
        .iter()
        .map(|e| e[0])
        .min_by(|&a, &b| theta(a).total_cmp(&theta(b)).then(a.cmp(&b)))
        .unwrap_or(edges[0][0]);
    let mut out = Vec::with_capacity(edges.len());
    let mut v = start;
    loop {
        let e = *next.get(&v).ok_or_else(|| Error::Meshing("boundary loop is open".into()))?;
        out.push(e);
        v = e[1];
        if v == start {
            break;
        }
        if out.len() > edges.len() {
            return Err(Error::Meshing("boundary loop does not close".into()));
        }
    }
    if out.len() != edges.len() {
        return Err(Error::Meshing("boundary has more than one loop".into()));
    }
    Ok(out)
}

/// Unit normals at the outer boundary loop nodes. Vertex normals average the
/// normals of the two incident (isoparametric) edges at the vertex with equal
/// angle weights; midnode normals are the edge normal there.
pub fn boundary_normals(mesh: &Mesh) -> Vec<Point> {
    let b = mesh.boundary();
    let order = b.order();
    let ne = b.n_edges();
    let unit = |t: Point| {
        let l = norm(t);
        [t[1] / l, -t[0] / l]
    };
    let mut out = vec![[0.0; 2]; b.len()];
    for e in 0..ne {
        let prev = (e + ne - 1) % ne;
        let n1 = unit(b.edge_geometry(prev, 1.0).1);
        let n2 = unit(b.edge_geometry(e, 0.0).1);
        let s = [n1[0] + n2[0], n1[1] + n2[1]];
        let l = norm(s);
        out[b.edge_nodes(e)[0]] = [s[0] / l, s[1] / l];
        if order == 2 {
            out[b.edge_nodes(e)[1]] = unit(b.edge_geometry(e, 0.5).1);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mid_theta_wraps() {
        let m = mid_theta(6.2, 0.1);
        let expect = (6.2 + 0.5 * (0.1 + std::f64::consts::TAU - 6.2)) % std::f64::consts::TAU;
        assert!((m - expect).abs() < 1e-14);
    }
}
