//! Torsion solves for two core conductivities on one mesh, the locking
//! field `v = αu_α − βu_β` and the one-phase reduction built from it.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::{boundary_flux, gradient_energy, load_vector, stiffness_matrix, DirichletSolver};
use crate::field::{BoundaryField, FemField};
use crate::geometry::{fmt17, TwoPhaseConfig};
use crate::linalg::matvec;
use crate::mesh::element::{eval, triangle_rule};
use crate::mesh::{generate_mesh, Mesh, Region};

/// Smallest accepted `|α − β|`.
pub const MIN_SEPARATION: f64 = 1e-6;
/// The reduction needs `E_core < LOCK_THRESHOLD · ∫_D |∇u_α|²`.
pub const LOCK_THRESHOLD: f64 = 1e-4;

#[derive(Clone, Debug)]
pub struct DualSolvePair {
    pub alpha: f64,
    pub beta: f64,
    pub u_alpha: FemField,
    pub u_beta: FemField,
}

pub fn dual_solve(mesh: &Arc<Mesh>, alpha: f64, beta: f64) -> Result<DualSolvePair> {
    if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
        return Err(Error::Precondition(format!("conductivities must be positive, got {alpha} and {beta}")));
    }
    if (alpha - beta).abs() < MIN_SEPARATION {
        return Err(Error::Precondition(format!("conductivities {alpha} and {beta} are not distinct")));
    }
    let rhs = load_vector(mesh);
    let solver_a = DirichletSolver::new(mesh, alpha)?;
    let (u_alpha, u_beta) = rayon::join(
        || solver_a.solve(&rhs, None),
        || DirichletSolver::with_symbolic_of(&solver_a, beta)?.solve(&rhs, None),
    );
    Ok(DualSolvePair { alpha, beta, u_alpha: u_alpha?, u_beta: u_beta? })
}

impl DualSolvePair {
    pub fn mesh(&self) -> &Arc<Mesh> {
        self.u_alpha.mesh()
    }

    pub fn fluxes(&self) -> Result<(BoundaryField, BoundaryField)> {
        Ok((boundary_flux(&self.u_alpha, self.alpha, true)?, boundary_flux(&self.u_beta, self.beta, true)?))
    }
}

/// Behaviour of `v` on one core component.
#[derive(Clone, Debug, Serialize)]
pub struct CoreLock {
    pub core: usize,
    /// Area mean of `v` over the component.
    pub mean: f64,
    /// Area standard deviation of `v` over the component.
    pub std: f64,
    pub area: f64,
    /// Largest `|v − (α−β)u_α|` over interface nodes.
    pub trace_mismatch: f64,
}

#[derive(Clone, Debug)]
pub struct LockingField {
    pub v: FemField,
    /// `∫_D |∇v|²` summed over all cores.
    pub e_core: f64,
    pub components: Vec<CoreLock>,
}

fn region_moments(v: &FemField, region: Region) -> (f64, f64, f64) {
    let mesh = v.mesh();
    let (mut area, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for e in 0..mesh.n_elements() {
        if mesh.region(e) != region {
            continue;
        }
        let coords = mesh.element_coords(e);
        for &(xi, eta, w) in triangle_rule().iter() {
            let det = eval(&coords, xi, eta).det;
            let x = v.eval_at(e, xi, eta);
            area += w * det;
            s1 += w * det * x;
            s2 += w * det * x * x;
        }
    }
    let mean = s1 / area;
    (area, mean, (s2 / area - mean * mean).max(0.0).sqrt())
}

pub fn locking_field(pair: &DualSolvePair) -> Result<LockingField> {
    let v = pair.u_alpha.combine(pair.alpha, &pair.u_beta, -pair.beta)?;
    let mesh = pair.mesh();
    let n_cores = mesh.config().cores().len();
    let mut e_core = 0.0;
    let mut components = Vec::with_capacity(n_cores);
    for c in 0..n_cores {
        e_core += gradient_energy(&v, Some(Region::Core(c)));
        let (area, mean, std) = region_moments(&v, Region::Core(c));
        let jump = pair.alpha - pair.beta;
        let trace_mismatch = mesh
            .interface_nodes(c)
            .iter()
            .map(|&i| (v.values()[i] - jump * pair.u_alpha.values()[i]).abs())
            .fold(0.0, f64::max);
        components.push(CoreLock { core: c, mean, std, area, trace_mismatch });
    }
    Ok(LockingField { v, e_core, components })
}

#[derive(Clone, Debug)]
pub struct Reduction {
    pub w: FemField,
    /// Discrete one-phase residual, see [`one_phase_residual`].
    pub residual: f64,
    pub flux: BoundaryField,
    pub flux_deviation: f64,
}

/// `w = u_α + (α−1)·E_D(u_α − v/(α−β))`, the adjustment carried by
/// core-interior nodes only.
pub fn serrin_reduction(pair: &DualSolvePair) -> Result<Reduction> {
    let lock = locking_field(pair)?;
    let mesh = pair.mesh();
    let n_cores = mesh.config().cores().len();
    let reference: f64 = (0..n_cores).map(|c| gradient_energy(&pair.u_alpha, Some(Region::Core(c)))).sum();
    let threshold = LOCK_THRESHOLD * reference;
    if !(lock.e_core < threshold) {
        return Err(Error::ReductionInvalid { energy: lock.e_core, threshold });
    }
    let (a, b) = (pair.alpha, pair.beta);
    let ua = pair.u_alpha.values();
    let mut w = ua.to_vec();
    for c in 0..n_cores {
        for i in mesh.core_interior_nodes(c) {
            w[i] += (a - 1.0) * (ua[i] - lock.v.values()[i] / (a - b));
        }
    }
    let w = FemField::new(mesh.clone(), w)?;
    let residual = one_phase_residual(&w)?;
    let flux = boundary_flux(&w, 1.0, true)?;
    let flux_deviation = flux.max_deviation();
    Ok(Reduction { w, residual, flux, flux_deviation })
}

/// `max_i |∫∇w·∇φ_i − φ_i| / ∫|φ_i|` over interior nodes: each test
/// function gives a local weighted average of `−Δw − 1`.
pub fn one_phase_residual(w: &FemField) -> Result<f64> {
    let mesh = w.mesh();
    let n = mesh.n_nodes();
    let kw = matvec(&stiffness_matrix(mesh, 1.0)?, w.values());
    let f = load_vector(mesh);
    let mut abs_phi = vec![0.0; n];
    for e in 0..mesh.n_elements() {
        let coords = mesh.element_coords(e);
        let loc = mesh.element_nodes(e);
        for &(xi, eta, wq) in triangle_rule().iter() {
            let ev = eval(&coords, xi, eta);
            for (k, &i) in loc.iter().enumerate() {
                abs_phi[i] += wq * ev.det * ev.n[k].abs();
            }
        }
    }
    Ok((0..n)
        .filter(|&i| !mesh.is_boundary_node(i))
        .map(|i| ((kw[i] - f[i]) / abs_phi[i]).abs())
        .fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TwoSigmaScore {
    pub alpha_flux: f64,
    pub beta_flux: f64,
    pub e_core: f64,
    pub total: f64,
}

/// Flux deviations of `u_α` and `u_β` plus the core energy of `v`.
pub fn two_sigma_score(pair: &DualSolvePair) -> Result<TwoSigmaScore> {
    let (fa, fb) = pair.fluxes()?;
    let e_core = locking_field(pair)?.e_core;
    let (alpha_flux, beta_flux) = (fa.max_deviation(), fb.max_deviation());
    Ok(TwoSigmaScore { alpha_flux, beta_flux, e_core, total: alpha_flux + beta_flux + e_core })
}

pub fn two_sigma_deviation(config: &TwoPhaseConfig, alpha: f64, beta: f64, h: f64, order: usize) -> Result<TwoSigmaScore> {
    let mesh = Arc::new(generate_mesh(config, h, order)?);
    two_sigma_score(&dual_solve(&mesh, alpha, beta)?)
}

/// `offset,score_alpha_flux,score_beta_flux,E_core,total` rows.
pub fn scores_to_csv(rows: &[(f64, TwoSigmaScore)]) -> String {
    let mut s = String::from("offset,score_alpha_flux,score_beta_flux,E_core,total\n");
    for (offset, r) in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            fmt17(*offset),
            fmt17(r.alpha_flux),
            fmt17(r.beta_flux),
            fmt17(r.e_core),
            fmt17(r.total)
        );
    }
    s
}
