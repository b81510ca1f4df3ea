//! Galerkin solvers for the two-phase torsion, Dirichlet and zero-average
//! Neumann problems, with variational boundary flux recovery.

use std::collections::BTreeMap;
use std::sync::Arc;

use faer::sparse::linalg::solvers::SymbolicLlt;

use crate::error::{Error, Result};
use crate::field::{BoundaryField, FemField, ZERO_AVERAGE_TOLERANCE};
use crate::geometry::{norm, Point};
use crate::linalg::{csc_from_entries, matvec, submatrix, Csc, Factorized};
use crate::mesh::element::{eval, line_rule, line_shape, triangle_rule};
use crate::mesh::{Mesh, Region};

/// Traces above this magnitude make the curvature identity inapplicable.
pub const TRACE_TOLERANCE: f64 = 1e-8;

fn sigma_of(region: Region, sigma_c: f64) -> f64 {
    if region.is_core() {
        sigma_c
    } else {
        1.0
    }
}

/// Element stiffness `∫ σ ∇φ_a·∇φ_b`, mass `∫ φ_a φ_b` and load `∫ φ_a`.
struct ElementMatrices {
    k: [[f64; 6]; 6],
    m: [[f64; 6]; 6],
    f: [f64; 6],
}

fn element_matrices(coords: &[Point], sigma: f64) -> ElementMatrices {
    let n = coords.len();
    let mut out = ElementMatrices { k: [[0.0; 6]; 6], m: [[0.0; 6]; 6], f: [0.0; 6] };
    for &(xi, eta, w) in triangle_rule().iter() {
        let e = eval(coords, xi, eta);
        let wd = w * e.det;
        for a in 0..n {
            out.f[a] += wd * e.n[a];
            for b in 0..n {
                out.k[a][b] += wd * sigma * (e.grad[a][0] * e.grad[b][0] + e.grad[a][1] * e.grad[b][1]);
                out.m[a][b] += wd * e.n[a] * e.n[b];
            }
        }
    }
    out
}

/// Global stiffness matrix over all nodes (no boundary conditions).
pub fn stiffness_matrix(mesh: &Mesh, sigma_c: f64) -> Result<Csc> {
    let mut entries = Vec::with_capacity(mesh.n_elements() * 36);
    for e in 0..mesh.n_elements() {
        let em = element_matrices(&mesh.element_coords(e), sigma_of(mesh.region(e), sigma_c));
        let loc = mesh.element_nodes(e);
        for (a, &i) in loc.iter().enumerate() {
            for (b, &j) in loc.iter().enumerate() {
                entries.push((i, j, em.k[a][b]));
            }
        }
    }
    csc_from_entries(mesh.n_nodes(), mesh.n_nodes(), &entries)
}

/// Consistent mass matrix over all nodes.
pub fn mass_matrix(mesh: &Mesh) -> Result<Csc> {
    let mut entries = Vec::with_capacity(mesh.n_elements() * 36);
    for e in 0..mesh.n_elements() {
        let em = element_matrices(&mesh.element_coords(e), 1.0);
        let loc = mesh.element_nodes(e);
        for (a, &i) in loc.iter().enumerate() {
            for (b, &j) in loc.iter().enumerate() {
                entries.push((i, j, em.m[a][b]));
            }
        }
    }
    csc_from_entries(mesh.n_nodes(), mesh.n_nodes(), &entries)
}

/// Load vector `∫ φ_i` for the unit source.
pub fn load_vector(mesh: &Mesh) -> Vec<f64> {
    let mut f = vec![0.0; mesh.n_nodes()];
    for e in 0..mesh.n_elements() {
        let em = element_matrices(&mesh.element_coords(e), 1.0);
        for (a, &i) in mesh.element_nodes(e).iter().enumerate() {
            f[i] += em.f[a];
        }
    }
    f
}

/// Factorized stiffness on the interior nodes; Dirichlet values are imposed
/// exactly on every outer-boundary node.
pub struct DirichletSolver {
    mesh: Arc<Mesh>,
    sigma_c: f64,
    stiffness: Csc,
    free: Vec<usize>,
    symbolic: SymbolicLlt<usize>,
    factor: Factorized,
}

impl DirichletSolver {
    pub fn new(mesh: &Arc<Mesh>, sigma_c: f64) -> Result<Self> {
        Self::build(mesh, sigma_c, None)
    }

    /// Reuse the symbolic factorization of another solver on the same mesh.
    pub fn with_symbolic_of(other: &DirichletSolver, sigma_c: f64) -> Result<Self> {
        Self::build(&other.mesh, sigma_c, Some(&other.symbolic))
    }

    fn build(mesh: &Arc<Mesh>, sigma_c: f64, symbolic: Option<&SymbolicLlt<usize>>) -> Result<Self> {
        if !(sigma_c.is_finite() && sigma_c > 0.0) {
            return Err(Error::Solver(format!("sigma_c must be positive, got {sigma_c}")));
        }
        let stiffness = stiffness_matrix(mesh, sigma_c)?;
        let n = mesh.n_nodes();
        let free: Vec<usize> = (0..n).filter(|&i| !mesh.is_boundary_node(i)).collect();
        let mut map = vec![None; n];
        for (k, &i) in free.iter().enumerate() {
            map[i] = Some(k);
        }
        let kff = submatrix(&stiffness, &map, free.len(), &map, free.len())?;
        let symbolic = match symbolic {
            Some(s) => s.clone(),
            None => Factorized::symbolic_cholesky(&kff)?,
        };
        let factor = Factorized::cholesky_with(kff, &symbolic)?;
        Ok(DirichletSolver { mesh: mesh.clone(), sigma_c, stiffness, free, symbolic, factor })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn sigma_c(&self) -> f64 {
        self.sigma_c
    }

    pub fn stiffness(&self) -> &Csc {
        &self.stiffness
    }

    /// Solve `∫σ∇u·∇φ = ⟨rhs, φ⟩` for interior test functions with
    /// `u = g` on the boundary loop nodes (`g = None` means zero).
    pub fn solve(&self, rhs: &[f64], g: Option<&[f64]>) -> Result<FemField> {
        let n = self.mesh.n_nodes();
        let mut full = vec![0.0; n];
        if let Some(g) = g {
            for (&i, &v) in self.mesh.boundary().nodes().iter().zip(g) {
                full[i] = v;
            }
        }
        let lifted = matvec(&self.stiffness, &full);
        let b: Vec<f64> = self.free.iter().map(|&i| rhs[i] - lifted[i]).collect();
        let x = self.factor.solve(&b)?;
        for (&i, v) in self.free.iter().zip(x) {
            full[i] = v;
        }
        FemField::new(self.mesh.clone(), full)
    }
}

/// Torsion problem `−div(σ∇u) = 1`, `u = 0` on the outer boundary.
pub fn solve_torsion(mesh: &Arc<Mesh>, sigma_c: f64) -> Result<FemField> {
    DirichletSolver::new(mesh, sigma_c)?.solve(&load_vector(mesh), None)
}

/// Two-phase harmonic extension of boundary data `g`.
pub fn solve_dirichlet(mesh: &Arc<Mesh>, sigma_c: f64, g: &BoundaryField) -> Result<FemField> {
    check_same_boundary(mesh, g)?;
    DirichletSolver::new(mesh, sigma_c)?.solve(&vec![0.0; mesh.n_nodes()], Some(g.values()))
}

fn check_same_boundary(mesh: &Mesh, f: &BoundaryField) -> Result<()> {
    if Arc::ptr_eq(mesh.boundary(), f.boundary()) || f.boundary().nodes() == mesh.boundary().nodes() {
        Ok(())
    } else {
        Err(Error::Solver("boundary field belongs to a different mesh".into()))
    }
}

/// Factorized bordered system `[K m; mᵀ 0]` for the Neumann problem with
/// zero boundary average, `m` the boundary weights `∫_{∂Ω} φ_i`.
pub struct NeumannSolver {
    mesh: Arc<Mesh>,
    sigma_c: f64,
    factor: Factorized,
}

impl NeumannSolver {
    pub fn new(mesh: &Arc<Mesh>, sigma_c: f64) -> Result<Self> {
        let k = stiffness_matrix(mesh, sigma_c)?;
        let n = mesh.n_nodes();
        let sym = k.symbolic();
        let (cp, ri) = (sym.col_ptr(), sym.row_idx());
        let mut entries = Vec::with_capacity(k.val().len() + 2 * mesh.boundary().len());
        for j in 0..n {
            for p in cp[j]..cp[j + 1] {
                entries.push((ri[p], j, k.val()[p]));
            }
        }
        for (&i, &w) in mesh.boundary().nodes().iter().zip(mesh.boundary().weights()) {
            entries.push((i, n, w));
            entries.push((n, i, w));
        }
        let factor = Factorized::lu(csc_from_entries(n + 1, n + 1, &entries)?)?;
        Ok(NeumannSolver { mesh: mesh.clone(), sigma_c, factor })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn sigma_c(&self) -> f64 {
        self.sigma_c
    }

    /// Solve for several boundary load vectors `(∫ ξ φ_i)_i` given on the
    /// loop nodes; returns full nodal values (multiplier dropped).
    pub fn solve_loads(&self, loads: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let n = self.mesh.n_nodes();
        let rhs: Vec<Vec<f64>> = loads
            .iter()
            .map(|l| {
                let mut b = vec![0.0; n + 1];
                for (&i, &v) in self.mesh.boundary().nodes().iter().zip(l) {
                    b[i] += v;
                }
                b
            })
            .collect();
        let mut out = self.factor.solve_many(&rhs)?;
        for x in out.iter_mut() {
            x.truncate(n);
        }
        Ok(out)
    }

    pub fn solve(&self, xi: &BoundaryField) -> Result<FemField> {
        check_same_boundary(&self.mesh, xi)?;
        let mean = xi.mean();
        if mean.abs() > ZERO_AVERAGE_TOLERANCE * xi.norm_inf().max(1.0) {
            return Err(Error::Compatibility { mean });
        }
        let load = self.mesh.boundary().mass_apply(xi.values());
        let mut v = self.solve_loads(&[load])?;
        FemField::new(self.mesh.clone(), v.pop().unwrap_or_default())
    }
}

/// Neumann problem `−div(σ∇v) = 0`, `σ∂_n v = ξ`, normalized by `∫_{∂Ω} v = 0`.
pub fn solve_neumann_zero_avg(mesh: &Arc<Mesh>, sigma_c: f64, xi: &BoundaryField) -> Result<FemField> {
    NeumannSolver::new(mesh, sigma_c)?.solve(xi)
}

/// Variational flux: the boundary function `g` with
/// `∫_{∂Ω} g φ = ∫ σ∇u·∇φ − ∫ f φ` for every boundary test function.
pub fn boundary_flux(field: &FemField, sigma_c: f64, rhs_is_one: bool) -> Result<BoundaryField> {
    let mesh = field.mesh();
    let b = mesh.boundary();
    let mut local = vec![usize::MAX; mesh.n_nodes()];
    for (k, &i) in b.nodes().iter().enumerate() {
        local[i] = k;
    }
    let mut r = vec![0.0; b.len()];
    let u = field.values();
    for e in 0..mesh.n_elements() {
        let loc = mesh.element_nodes(e);
        if loc.iter().all(|&i| local[i] == usize::MAX) {
            continue;
        }
        let em = element_matrices(&mesh.element_coords(e), sigma_of(mesh.region(e), sigma_c));
        for (a, &i) in loc.iter().enumerate() {
            if local[i] == usize::MAX {
                continue;
            }
            let mut v: f64 = loc.iter().enumerate().map(|(c, &j)| em.k[a][c] * u[j]).sum();
            if rhs_is_one {
                v -= em.f[a];
            }
            r[local[i]] += v;
        }
    }
    Ok(BoundaryField::new(b.clone(), b.solve_mass(&r)?))
}

/// Both expressions of the torsional rigidity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rigidity {
    /// `∫ u`.
    pub integral: f64,
    /// `∫ σ|∇u|²`.
    pub energy: f64,
}

impl Rigidity {
    pub fn value(&self) -> f64 {
        self.integral
    }

    pub fn relative_gap(&self) -> f64 {
        (self.integral - self.energy).abs() / self.integral.abs().max(f64::MIN_POSITIVE)
    }
}

pub fn torsional_rigidity(u: &FemField, sigma_c: f64) -> Rigidity {
    let mesh = u.mesh();
    let (mut integral, mut energy) = (0.0, 0.0);
    for e in 0..mesh.n_elements() {
        let coords = mesh.element_coords(e);
        let loc = mesh.element_nodes(e);
        let sigma = sigma_of(mesh.region(e), sigma_c);
        for &(xi, eta, w) in triangle_rule().iter() {
            let ev = eval(&coords, xi, eta);
            let (mut val, mut g) = (0.0, [0.0; 2]);
            for (k, &i) in loc.iter().enumerate() {
                val += ev.n[k] * u.values()[i];
                g[0] += ev.grad[k][0] * u.values()[i];
                g[1] += ev.grad[k][1] * u.values()[i];
            }
            integral += w * ev.det * val;
            energy += w * ev.det * sigma * (g[0] * g[0] + g[1] * g[1]);
        }
    }
    Rigidity { integral, energy }
}

/// `∫ |∇v|²` over the elements of `region` (all elements when `None`).
pub fn gradient_energy(v: &FemField, region: Option<Region>) -> f64 {
    let mesh = v.mesh();
    let mut total = 0.0;
    for e in 0..mesh.n_elements() {
        if region.is_some_and(|r| r != mesh.region(e)) {
            continue;
        }
        let coords = mesh.element_coords(e);
        let loc = mesh.element_nodes(e);
        for &(xi, eta, w) in triangle_rule().iter() {
            let ev = eval(&coords, xi, eta);
            let mut g = [0.0; 2];
            for (k, &i) in loc.iter().enumerate() {
                g[0] += ev.grad[k][0] * v.values()[i];
                g[1] += ev.grad[k][1] * v.values()[i];
            }
            total += w * ev.det * (g[0] * g[0] + g[1] * g[1]);
        }
    }
    total
}

/// Reference coordinates of local edge `k` (from local vertex `k` to `k+1`) at parameter `s`.
fn edge_point(k: usize, s: f64) -> (f64, f64) {
    match k {
        0 => (s, 0.0),
        1 => (1.0 - s, s),
        _ => (0.0, 1.0 - s),
    }
}

/// Jump `σ_c ∂_ν u|core − ∂_ν u|shell` of the normal flux across the
/// interface, from one-sided gradient traces L²-projected onto the interface
/// finite-element space; returns the largest nodal magnitude.
pub fn interface_flux_jump(u: &FemField, sigma_c: f64) -> Result<f64> {
    let mesh = u.mesh();
    let order = mesh.order();
    let mut owner: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
    for (e, t) in mesh.triangles().iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            owner.entry((a.min(b), a.max(b))).or_default().push((e, k));
        }
    }
    let mut worst: f64 = 0.0;
    let n_cores = mesh.config().cores().len();
    for c in 0..n_cores {
        let edges: Vec<[usize; 2]> = mesh
            .interface_edges()
            .iter()
            .enumerate()
            .filter(|(i, _)| mesh.interface_core(*i) == c)
            .map(|(_, e)| *e)
            .collect();
        if edges.is_empty() {
            continue;
        }
        let mut local: BTreeMap<usize, usize> = BTreeMap::new();
        let mut edge_nodes = Vec::with_capacity(edges.len());
        for e in &edges {
            let mut ids = vec![e[0]];
            if order == 2 {
                ids.push(mesh.edge_midnode(e[0], e[1]).ok_or_else(|| Error::Solver("missing midnode".into()))?);
            }
            ids.push(e[1]);
            for &i in &ids {
                let next = local.len();
                local.entry(i).or_insert(next);
            }
            edge_nodes.push(ids);
        }
        let n = local.len();
        let mut mass = Vec::new();
        let mut rhs = vec![0.0; n];
        for (e, ids) in edges.iter().zip(&edge_nodes) {
            let sides = &owner[&(e[0].min(e[1]), e[0].max(e[1]))];
            let mut core_side = None;
            let mut shell_side = None;
            for &(t, k) in sides {
                let forward = mesh.triangles()[t][k] == e[0];
                if mesh.region(t).is_core() {
                    core_side = Some((t, k, forward));
                } else {
                    shell_side = Some((t, k, forward));
                }
            }
            let (Some(cs), Some(ss)) = (core_side, shell_side) else {
                return Err(Error::Solver("interface edge without two sides".into()));
            };
            for &(s, w) in line_rule() {
                let (l, dl) = line_shape(order, s);
                let mut tan = [0.0; 2];
                for (m, &i) in ids.iter().enumerate() {
                    tan[0] += dl[m] * mesh.nodes()[i][0];
                    tan[1] += dl[m] * mesh.nodes()[i][1];
                }
                let speed = norm(tan);
                let nu = [tan[1] / speed, -tan[0] / speed];
                let flux = |(t, k, fwd): (usize, usize, bool)| {
                    let (xi, eta) = edge_point(k, if fwd { s } else { 1.0 - s });
                    let g = u.gradient_at(t, xi, eta);
                    g[0] * nu[0] + g[1] * nu[1]
                };
                let jump = sigma_c * flux(cs) - flux(ss);
                for (a, &ia) in ids.iter().enumerate() {
                    rhs[local[&ia]] += w * speed * l[a] * jump;
                    for (b, &ib) in ids.iter().enumerate() {
                        mass.push((local[&ia], local[&ib], w * speed * l[a] * l[b]));
                    }
                }
            }
        }
        let m = Factorized::cholesky(csc_from_entries(n, n, &mass)?)?;
        let proj = m.solve(&rhs)?;
        worst = proj.iter().fold(worst, |a, v| a.max(v.abs()));
    }
    Ok(worst)
}

/// `∂²_{nn} u = −1 − κ ∂_n u` on the outer boundary, with `κ` the analytic
/// curvature and `∂_n u` the recovered flux. Requires `u = 0` on the boundary.
pub fn normal_second_derivative(u: &FemField, sigma_c: f64) -> Result<BoundaryField> {
    let trace = u.boundary_trace().norm_inf();
    if trace > TRACE_TOLERANCE {
        return Err(Error::NonzeroTrace { max_trace: trace });
    }
    let flux = boundary_flux(u, sigma_c, true)?;
    let kappa = flux.boundary().curvatures();
    let v = flux.values().iter().zip(&kappa).map(|(g, k)| -1.0 - k * g).collect();
    Ok(BoundaryField::new(flux.boundary().clone(), v))
}
