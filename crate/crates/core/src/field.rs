//! Scalar finite-element fields and boundary fields.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{fmt17, Point};
use crate::mesh::element::eval;
use crate::mesh::{BoundaryLoop, Mesh};

/// Tolerance on the boundary-mass-weighted mean of zero-average fields.
pub const ZERO_AVERAGE_TOLERANCE: f64 = 1e-10;

/// Nodal values on every FEM node of a mesh.
#[derive(Clone, Debug)]
pub struct FemField {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
}

impl FemField {
    pub fn new(mesh: Arc<Mesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_nodes() {
            return Err(Error::Solver(format!(
                "field has {} values for {} nodes",
                values.len(),
                mesh.n_nodes()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Solver(format!("non-finite value at node {i}")));
        }
        Ok(FemField { mesh, values })
    }

    pub fn zeros(mesh: Arc<Mesh>) -> Self {
        let n = mesh.n_nodes();
        FemField { mesh, values: vec![0.0; n] }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn order(&self) -> usize {
        self.mesh.order()
    }

    /// Nodewise `a·self + b·other` on the same mesh.
    pub fn combine(&self, a: f64, other: &FemField, b: f64) -> Result<FemField> {
        if !Arc::ptr_eq(&self.mesh, &other.mesh) {
            return Err(Error::Solver("fields live on different meshes".into()));
        }
        let v = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        FemField::new(self.mesh.clone(), v)
    }

    /// Value at an arbitrary point by element interpolation.
    pub fn eval(&self, p: Point) -> Option<f64> {
        let loc = self.mesh.locate(p)?;
        Some(self.eval_at(loc.element, loc.xi, loc.eta))
    }

    pub fn eval_at(&self, e: usize, xi: f64, eta: f64) -> f64 {
        let ev = eval(&self.mesh.element_coords(e), xi, eta);
        self.mesh.element_nodes(e).iter().enumerate().map(|(k, &i)| ev.n[k] * self.values[i]).sum()
    }

    /// Gradient inside element `e` at reference point `(ξ, η)`.
    pub fn gradient_at(&self, e: usize, xi: f64, eta: f64) -> Point {
        let ev = eval(&self.mesh.element_coords(e), xi, eta);
        self.mesh.element_nodes(e).iter().enumerate().fold([0.0, 0.0], |g, (k, &i)| {
            [g[0] + ev.grad[k][0] * self.values[i], g[1] + ev.grad[k][1] * self.values[i]]
        })
    }

    /// Restriction to the outer boundary loop.
    pub fn boundary_trace(&self) -> BoundaryField {
        let b = self.mesh.boundary().clone();
        let v = b.nodes().iter().map(|&i| self.values[i]).collect();
        BoundaryField::new(b, v)
    }

    /// `node_id,x,y,value` with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("node_id,x,y,value\n");
        for (i, (p, v)) in self.mesh.nodes().iter().zip(&self.values).enumerate() {
            let _ = writeln!(s, "{i},{},{},{}", fmt17(p[0]), fmt17(p[1]), fmt17(*v));
        }
        s
    }
}

/// Values on the outer boundary loop nodes.
#[derive(Clone, Debug)]
pub struct BoundaryField {
    boundary: Arc<BoundaryLoop>,
    values: Vec<f64>,
    zero_average: bool,
}

impl BoundaryField {
    pub fn new(boundary: Arc<BoundaryLoop>, values: Vec<f64>) -> Self {
        assert_eq!(boundary.len(), values.len(), "boundary field length mismatch");
        BoundaryField { boundary, values, zero_average: false }
    }

    /// Sample `f(θ, x)` at every loop node.
    pub fn from_fn(boundary: Arc<BoundaryLoop>, f: impl Fn(f64, Point) -> f64) -> Self {
        let v = boundary.thetas().iter().zip(boundary.points()).map(|(&t, &p)| f(t, p)).collect();
        BoundaryField::new(boundary, v)
    }

    pub fn constant(boundary: Arc<BoundaryLoop>, c: f64) -> Self {
        let n = boundary.len();
        BoundaryField::new(boundary, vec![c; n])
    }

    pub fn boundary(&self) -> &Arc<BoundaryLoop> {
        &self.boundary
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_zero_average(&self) -> bool {
        self.zero_average
    }

    /// Flag as zero-average after checking the weighted mean.
    pub fn with_zero_average(mut self) -> Result<Self> {
        let m = self.mean();
        let scale = self.norm_inf().max(1.0);
        if m.abs() > ZERO_AVERAGE_TOLERANCE * scale {
            return Err(Error::Compatibility { mean: m });
        }
        self.zero_average = true;
        Ok(self)
    }

    pub(crate) fn set_zero_average(mut self) -> Self {
        self.zero_average = true;
        self
    }

    /// Boundary-mass-weighted mean.
    pub fn mean(&self) -> f64 {
        self.boundary.mean(&self.values)
    }

    pub fn integral(&self) -> f64 {
        self.boundary.integrate(&self.values)
    }

    /// Boundary-mass inner product.
    pub fn inner(&self, other: &BoundaryField) -> f64 {
        self.boundary.inner(&self.values, &other.values)
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).max(0.0).sqrt()
    }

    pub fn l1_norm(&self) -> f64 {
        let abs: Vec<f64> = self.values.iter().map(|v| v.abs()).collect();
        self.boundary.integrate(&abs)
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest deviation from the weighted mean.
    pub fn max_deviation(&self) -> f64 {
        let m = self.mean();
        self.values.iter().fold(0.0, |a, v| a.max((v - m).abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> BoundaryField {
        BoundaryField::new(self.boundary.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, s: f64) -> BoundaryField {
        BoundaryField { values: self.values.iter().map(|v| v * s).collect(), ..self.clone() }
    }

    /// `node_id,x,y,value` rows for the loop nodes (global node ids).
    pub fn to_csv(&self) -> String {
        let mut s = String::from("node_id,x,y,value\n");
        for ((&i, p), v) in self.boundary.nodes().iter().zip(self.boundary.points()).zip(&self.values) {
            let _ = writeln!(s, "{i},{},{},{}", fmt17(p[0]), fmt17(p[1]), fmt17(*v));
        }
        s
    }
}
