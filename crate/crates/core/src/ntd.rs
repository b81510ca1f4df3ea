//! Dense Neumann-to-Dirichlet operator on zero-average boundary data, its
//! spectrum, and the second-derivative test along its eigenfields.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::{normal_second_derivative, NeumannSolver};
use crate::field::BoundaryField;
use crate::geometry::fmt17;
use crate::mesh::{BoundaryLoop, Mesh};
use crate::shape::{shape_hessian, TorsionState};

/// Relative asymmetry tolerated silently before symmetrization.
pub const ASYMMETRY_WARN: f64 = 1e-8;
/// Relative asymmetry above which assembly is rejected.
pub const ASYMMETRY_FAIL: f64 = 1e-6;

/// Galerkin matrix `A_ij = ⟨φ_i, Λφ_j⟩` of the Neumann-to-Dirichlet map.
pub struct NtdOperator {
    boundary: Arc<BoundaryLoop>,
    sigma_c: f64,
    /// Nodal trace of `Λ` applied to nodal data: `trace = trace_map · ξ`.
    trace_map: DMatrix<f64>,
    matrix: DMatrix<f64>,
    asymmetry: f64,
}

impl std::fmt::Debug for NtdOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NtdOperator").field("n", &self.dim()).field("asymmetry", &self.asymmetry).finish()
    }
}

fn mass_dense(b: &BoundaryLoop) -> DMatrix<f64> {
    let n = b.len();
    let mut m = DMatrix::zeros(n, n);
    let sym = b.mass().symbolic();
    let (cp, ri) = (sym.col_ptr(), sym.row_idx());
    for j in 0..n {
        for p in cp[j]..cp[j + 1] {
            m[(ri[p], j)] += b.mass().val()[p];
        }
    }
    m
}

fn inf_norm(a: &DMatrix<f64>) -> f64 {
    a.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// One Neumann solve per boundary node; columns in node order.
pub fn assemble_ntd(mesh: &Arc<Mesh>, sigma_c: f64) -> Result<NtdOperator> {
    let b = mesh.boundary().clone();
    let n = b.len();
    let solver = NeumannSolver::new(mesh, sigma_c)?;
    let mass = mass_dense(&b);
    let loads: Vec<Vec<f64>> = (0..n).map(|j| mass.column(j).iter().copied().collect()).collect();
    let fields = solver.solve_loads(&loads)?;
    let mut trace_map = DMatrix::zeros(n, n);
    for (j, v) in fields.iter().enumerate() {
        for (i, &node) in b.nodes().iter().enumerate() {
            trace_map[(i, j)] = v[node];
        }
    }
    let raw = &mass * &trace_map;
    let asymmetry = inf_norm(&(&raw - raw.transpose())) / inf_norm(&raw).max(f64::MIN_POSITIVE);
    if asymmetry > ASYMMETRY_FAIL {
        return Err(Error::Asymmetric { asymmetry });
    }
    let matrix = (&raw + raw.transpose()) * 0.5;
    Ok(NtdOperator { boundary: b, sigma_c, trace_map, matrix, asymmetry })
}

impl NtdOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn boundary(&self) -> &Arc<BoundaryLoop> {
        &self.boundary
    }

    pub fn sigma_c(&self) -> f64 {
        self.sigma_c
    }

    /// Relative asymmetry `‖A − Aᵀ‖∞/‖A‖∞` before symmetrization.
    pub fn asymmetry(&self) -> f64 {
        self.asymmetry
    }

    pub fn is_nearly_symmetric(&self) -> bool {
        self.asymmetry < ASYMMETRY_WARN
    }

    /// Symmetrized Galerkin matrix.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Boundary trace of the zero-average Neumann solution with data `ξ`.
    pub fn apply(&self, xi: &BoundaryField) -> BoundaryField {
        let v = &self.trace_map * DVector::from_column_slice(xi.values());
        BoundaryField::new(self.boundary.clone(), v.iter().copied().collect())
    }

    /// `⟨Λξ, ξ⟩`.
    pub fn quadratic_form(&self, xi: &BoundaryField) -> f64 {
        let x = DVector::from_column_slice(xi.values());
        x.dot(&(&self.matrix * &x))
    }
}

#[derive(Clone, Debug)]
pub struct NtdSpectrum {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// Boundary-mass orthonormal, zero-average.
    pub eigenfields: Vec<BoundaryField>,
    pub sigma_c: f64,
}

impl NtdSpectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `k,lambda` rows, `k` starting at 1.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,lambda\n");
        for (k, l) in self.eigenvalues.iter().enumerate() {
            let _ = writeln!(s, "{},{}", k + 1, fmt17(*l));
        }
        s
    }
}

/// Largest `k_max` eigenpairs of `A x = λ M x` on the zero-average space.
pub fn ntd_spectrum(op: &NtdOperator, k_max: usize) -> Result<NtdSpectrum> {
    let n = op.dim();
    if k_max == 0 || k_max > n / 8 {
        return Err(Error::Precondition(format!(
            "k_max must lie in 1..={} (boundary nodes / 8), got {k_max}",
            n / 8
        )));
    }
    let mass = mass_dense(&op.boundary);
    let chol = mass.clone().cholesky().ok_or_else(|| Error::Eigen("boundary mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv_a = l.solve_lower_triangular(&op.matrix).ok_or_else(|| Error::Eigen("triangular solve failed".into()))?;
    let c = l
        .solve_lower_triangular(&linv_a.transpose())
        .ok_or_else(|| Error::Eigen("triangular solve failed".into()))?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::try_new(c, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Eigen("symmetric eigensolver did not converge".into()))?;
    let lt = l.transpose();
    let weights = DVector::from_column_slice(op.boundary.weights());
    let mut pairs: Vec<(f64, DVector<f64>)> = (0..n)
        .map(|i| {
            let q = eig.eigenvectors.column(i).into_owned();
            let x = lt.solve_upper_triangular(&q).unwrap_or(q);
            (eig.eigenvalues[i], x)
        })
        .collect();
    // The constants span the kernel; drop the eigenvector most aligned with them.
    let constant = pairs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.dot(&weights).abs().total_cmp(&b.1 .1.dot(&weights).abs()))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::Eigen("empty spectrum".into()))?;
    pairs.remove(constant);
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    pairs.truncate(k_max);
    let mut eigenvalues = Vec::with_capacity(k_max);
    let mut eigenfields = Vec::with_capacity(k_max);
    for (lam, mut x) in pairs {
        let scale = x.amax();
        if let Some(first) = x.iter().find(|v| v.abs() > 1e-8 * scale) {
            if *first < 0.0 {
                x.neg_mut();
            }
        }
        let f = BoundaryField::new(op.boundary.clone(), x.iter().copied().collect());
        eigenvalues.push(lam);
        eigenfields.push(crate::shape::project_zero_average(&f));
    }
    Ok(NtdSpectrum { eigenvalues, eigenfields, sigma_c: op.sigma_c })
}

#[derive(Clone, Debug, Serialize)]
pub struct Theorem1Row {
    pub k: usize,
    pub lambda: f64,
    #[serde(rename = "d2T")]
    pub d2t: f64,
    /// `−2c²/λ_k + 2c·min ∂²_nn u`.
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Theorem1Report {
    pub rows: Vec<Theorem1Row>,
    pub c_hat: f64,
    pub min_d2n: f64,
    /// Smallest `k` with negative second derivative.
    pub k_neg: Option<usize>,
}

impl Theorem1Report {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,lambda,d2T,bound\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{}", r.k, fmt17(r.lambda), fmt17(r.d2t), fmt17(r.bound));
        }
        s
    }
}

/// Second derivative along `hn = ξ_k` for `k = 1..=k_max` against the
/// eigenvalue bound.
pub fn theorem1_experiment(state: &TorsionState, k_max: usize, overdetermined_tol: f64) -> Result<Theorem1Report> {
    let mesh = state.mesh();
    let op = assemble_ntd(mesh, state.sigma_c())?;
    let spectrum = ntd_spectrum(&op, k_max)?;
    let d2n = normal_second_derivative(&state.u, state.sigma_c())?;
    let min_d2n = d2n.values().iter().copied().fold(f64::INFINITY, f64::min);
    let c = state.c_hat;
    let rows = spectrum
        .eigenvalues
        .iter()
        .zip(&spectrum.eigenfields)
        .enumerate()
        .map(|(i, (&lambda, xi))| {
            let d2t = shape_hessian(state, xi, overdetermined_tol)?;
            Ok(Theorem1Row { k: i + 1, lambda, d2t, bound: -2.0 * c * c / lambda + 2.0 * c * min_d2n })
        })
        .collect::<Result<Vec<_>>>()?;
    let k_neg = rows.iter().find(|r| r.d2t < 0.0).map(|r| r.k);
    Ok(Theorem1Report { rows, c_hat: c, min_d2n, k_neg })
}
