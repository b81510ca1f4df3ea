//! Shape calculus for the rigidity functional under volume-preserving
//! perturbations of the outer boundary (the core stays fixed).

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::{boundary_flux, load_vector, normal_second_derivative, torsional_rigidity, DirichletSolver, Rigidity};
use crate::field::{BoundaryField, FemField};
use crate::geometry::{deform_boundary, deform_boundary_fn, dist, DeformOptions, Point, StarBoundary, TwoPhaseConfig};
use crate::mesh::{generate_mesh, BoundaryLoop, Mesh};

/// Base configurations must have flux deviation below this fraction of `|c̄|`.
pub const DEFAULT_OVERDETERMINED_TOL: f64 = 1e-2;

/// Subtract the boundary-mass-weighted mean.
pub fn project_zero_average(xi: &BoundaryField) -> BoundaryField {
    let m = xi.mean();
    xi.map(|v| v - m).set_zero_average()
}

/// Projected Fourier mode `cos kθ` (or `sin kθ`) in the curve parameter.
pub fn fourier_mode(boundary: &Arc<BoundaryLoop>, mode: FourierMode) -> BoundaryField {
    project_zero_average(&BoundaryField::from_fn(boundary.clone(), |th, _| mode.eval(th)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct FourierMode {
    pub k: u32,
    pub sine: bool,
}

impl FourierMode {
    pub fn cos(k: u32) -> Self {
        FourierMode { k, sine: false }
    }

    pub fn sin(k: u32) -> Self {
        FourierMode { k, sine: true }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let a = self.k as f64 * theta;
        if self.sine {
            a.sin()
        } else {
            a.cos()
        }
    }

    /// Both modes of every order in `1..=k_max`.
    pub fn up_to(k_max: u32) -> Vec<FourierMode> {
        (1..=k_max).flat_map(|k| [FourierMode::cos(k), FourierMode::sin(k)]).collect()
    }
}

impl std::fmt::Display for FourierMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}{}", if self.sine { "sin" } else { "cos" }, self.k)
    }
}

impl std::str::FromStr for FourierMode {
    type Err = Error;

    /// `cos3`, `sin2`, ...
    fn from_str(s: &str) -> Result<Self> {
        let (sine, rest) = if let Some(r) = s.strip_prefix("cos") {
            (false, r)
        } else if let Some(r) = s.strip_prefix("sin") {
            (true, r)
        } else {
            return Err(Error::Parse(format!("mode `{s}` must look like cos3 or sin2")));
        };
        match rest.parse::<u32>() {
            Ok(k) if k >= 1 => Ok(FourierMode { k, sine }),
            _ => Err(Error::Parse(format!("mode `{s}` needs an order of at least 1"))),
        }
    }
}

/// Torsion solution with its recovered flux, kept together with the
/// factorized operator so shape-derivative solves can reuse it.
pub struct TorsionState {
    pub u: FemField,
    pub flux: BoundaryField,
    /// Mean flux `c̄`.
    pub c_hat: f64,
    pub rigidity: Rigidity,
    solver: DirichletSolver,
}

impl TorsionState {
    /// Solve with the conductivity of the mesh's configuration.
    pub fn solve(mesh: &Arc<Mesh>) -> Result<Self> {
        Self::solve_with(mesh, mesh.config().sigma_c())
    }

    pub fn solve_with(mesh: &Arc<Mesh>, sigma_c: f64) -> Result<Self> {
        let solver = DirichletSolver::new(mesh, sigma_c)?;
        let u = solver.solve(&load_vector(mesh), None)?;
        let flux = boundary_flux(&u, sigma_c, true)?;
        let c_hat = flux.mean();
        let rigidity = torsional_rigidity(&u, sigma_c);
        Ok(TorsionState { u, flux, c_hat, rigidity, solver })
    }

    pub fn for_config(config: &TwoPhaseConfig, h: f64, order: usize) -> Result<Self> {
        Self::solve(&Arc::new(generate_mesh(config, h, order)?))
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        self.u.mesh()
    }

    pub fn sigma_c(&self) -> f64 {
        self.solver.sigma_c()
    }

    pub fn boundary(&self) -> &Arc<BoundaryLoop> {
        self.mesh().boundary()
    }

    /// `max |∂_n u − c̄|` on the boundary nodes.
    pub fn flux_deviation(&self) -> f64 {
        self.flux.max_deviation()
    }

    fn check_critical(&self, tol: f64) -> Result<()> {
        let dev = self.flux_deviation();
        let limit = tol * self.c_hat.abs();
        if dev > limit {
            return Err(Error::BaseNotCritical { deviation: dev, tolerance: limit });
        }
        Ok(())
    }

    /// Dirichlet problem for `u′`: harmonic in the two-phase sense with
    /// `u′ = −c̄·hn` on the boundary.
    pub fn shape_derivative_field(&self, hn: &BoundaryField) -> Result<FemField> {
        let g: Vec<f64> = hn.values().iter().map(|v| -self.c_hat * v).collect();
        self.solver.solve(&vec![0.0; self.mesh().n_nodes()], Some(&g))
    }
}

fn check_zero_average(hn: &BoundaryField) -> Result<()> {
    if hn.is_zero_average() {
        return Ok(());
    }
    hn.clone().with_zero_average().map(|_| ())
}

/// `∮ (∂_n u)² hn` with the recovered flux.
pub fn first_shape_derivative(state: &TorsionState, hn: &BoundaryField) -> Result<f64> {
    check_zero_average(hn)?;
    let g = state.flux.values();
    Ok(state.boundary().integrate_product(&[g, g, hn.values()]))
}

/// Standalone form of [`TorsionState::shape_derivative_field`].
pub fn solve_shape_derivative(mesh: &Arc<Mesh>, sigma_c: f64, hn: &BoundaryField, c_hat: f64) -> Result<FemField> {
    check_zero_average(hn)?;
    let solver = DirichletSolver::new(mesh, sigma_c)?;
    let g: Vec<f64> = hn.values().iter().map(|v| -c_hat * v).collect();
    solver.solve(&vec![0.0; mesh.n_nodes()], Some(&g))
}

/// `2c̄ ∮ ∂_n u′ hn + 2c̄ ∮ ∂²_nn u hn²`, valid at overdetermined solutions.
pub fn second_shape_derivative(state: &TorsionState, u_prime: &FemField, hn: &BoundaryField, overdetermined_tol: f64) -> Result<f64> {
    check_zero_average(hn)?;
    state.check_critical(overdetermined_tol)?;
    let dn_up = boundary_flux(u_prime, state.sigma_c(), false)?;
    let d2n = normal_second_derivative(&state.u, state.sigma_c())?;
    let b = state.boundary();
    let h = hn.values();
    let c = state.c_hat;
    Ok(2.0 * c * b.integrate_product(&[dn_up.values(), h]) + 2.0 * c * b.integrate_product(&[d2n.values(), h, h]))
}

/// Solve for `u′` and evaluate the second derivative in one call.
pub fn shape_hessian(state: &TorsionState, hn: &BoundaryField, overdetermined_tol: f64) -> Result<f64> {
    state.check_critical(overdetermined_tol)?;
    let up = state.shape_derivative_field(hn)?;
    second_shape_derivative(state, &up, hn, overdetermined_tol)
}

/// A normal velocity on the outer boundary of a base configuration.
#[derive(Clone, Debug)]
pub struct PerturbationPath {
    pub base: TwoPhaseConfig,
    pub hn: BoundaryField,
    pub renormalize: bool,
}

impl PerturbationPath {
    pub fn new(base: TwoPhaseConfig, hn: BoundaryField, renormalize: bool) -> Result<Self> {
        check_zero_average(&hn)?;
        Ok(PerturbationPath { base, hn, renormalize })
    }

    /// Configuration with the outer boundary moved by `t·hn`.
    pub fn config_at(&self, t: f64) -> Result<TwoPhaseConfig> {
        let opts = DeformOptions { renormalize: self.renormalize, ..DeformOptions::default() };
        let outer = deform_boundary(self.base.outer(), &self.hn, t, opts)?;
        self.base.with_outer(outer)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DerivativeReport {
    /// Rigidity at `t = 0`.
    pub t0: f64,
    pub dt: f64,
    pub d2t: f64,
    /// `(t, T(t))` samples, including `t = 0`.
    pub samples: Vec<(f64, f64)>,
    /// Largest residual of the polynomial fit.
    pub fit_residual: f64,
}

/// Rigidity along `path` for each `t` (deform, remesh, solve), then a
/// least-squares polynomial fit for the first two derivatives at zero.
pub fn finite_difference_probe(path: &PerturbationPath, t_grid: &[f64], h: f64, order: usize) -> Result<DerivativeReport> {
    let mut ts: Vec<f64> = t_grid.iter().copied().filter(|t| *t != 0.0).collect();
    ts.push(0.0);
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    if ts.len() < 3 {
        return Err(Error::Precondition("finite-difference probe needs at least two nonzero t values".into()));
    }
    let values: Vec<f64> = ts
        .par_iter()
        .map(|&t| {
            let cfg = path.config_at(t)?;
            Ok(TorsionState::for_config(&cfg, h, order)?.rigidity.value())
        })
        .collect::<Result<_>>()?;
    let t0 = values[ts.iter().position(|t| *t == 0.0).unwrap_or(0)];
    let deg = (ts.len() - 1).min(4);
    let scale = ts.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let a = DMatrix::from_fn(ts.len(), deg + 1, |i, j| (ts[i] / scale).powi(j as i32));
    let y = DVector::from_iterator(ts.len(), values.iter().map(|v| v - t0));
    let coef = a
        .clone()
        .svd(true, true)
        .solve(&y, 1e-14)
        .map_err(|e| Error::Solver(format!("polynomial fit failed: {e}")))?;
    let fit_residual = (&a * &coef - &y).amax();
    Ok(DerivativeReport {
        t0,
        dt: coef[1] / scale,
        d2t: 2.0 * coef[2] / (scale * scale),
        samples: ts.into_iter().zip(values).collect(),
        fit_residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Evidence {
    MaximizerEvidence,
    MinimizerEvidence,
    SaddleEvidence,
    /// Every value fell inside the tie band.
    Inconclusive,
}

impl std::fmt::Display for Evidence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Evidence::MaximizerEvidence => "maximizer-evidence",
            Evidence::MinimizerEvidence => "minimizer-evidence",
            Evidence::SaddleEvidence => "saddle-evidence",
            Evidence::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub evidence: Evidence,
    pub values: Vec<(FourierMode, f64)>,
    /// Modes whose `|d²T| < tol·T0`.
    pub ties: Vec<FourierMode>,
    pub min: f64,
    pub max: f64,
}

/// Sign pattern of the second derivative over projected Fourier modes.
pub fn classify_critical_shape(state: &TorsionState, modes: &[FourierMode], tol: f64, overdetermined_tol: f64) -> Result<Classification> {
    state.check_critical(overdetermined_tol)?;
    let values: Vec<(FourierMode, f64)> = modes
        .par_iter()
        .map(|&m| {
            let hn = fourier_mode(state.boundary(), m);
            Ok((m, shape_hessian(state, &hn, overdetermined_tol)?))
        })
        .collect::<Result<_>>()?;
    let band = tol * state.rigidity.value();
    let ties: Vec<FourierMode> = values.iter().filter(|(_, v)| v.abs() < band).map(|(m, _)| *m).collect();
    let pos = values.iter().any(|(_, v)| *v >= band);
    let neg = values.iter().any(|(_, v)| *v <= -band);
    let evidence = match (pos, neg) {
        (true, true) => Evidence::SaddleEvidence,
        (false, true) => Evidence::MaximizerEvidence,
        (true, false) => Evidence::MinimizerEvidence,
        (false, false) => Evidence::Inconclusive,
    };
    let min = values.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let max = values.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(Classification { evidence, values, ties, min, max })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerOptions {
    pub steps: usize,
    /// Initial step length multiplying the smoothed gradient.
    pub step_size: f64,
    /// Stop once `max |g − mean g| < tol`.
    pub tol: f64,
    pub h: f64,
    pub order: usize,
    /// Halvings tried before giving up on a step.
    pub max_halvings: usize,
    /// Fourier order of the smoothed ascent direction and of the refit.
    pub fourier_order: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions { steps: 40, step_size: 10.0, tol: 5e-4, h: 0.05, order: 2, max_halvings: 8, fourier_order: 16 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TrajectoryStep {
    pub step: usize,
    pub area: f64,
    pub rigidity: f64,
    pub flux_deviation: f64,
    /// `max |g − mean g|` with `g = (∂_n u)²`.
    pub gradient_norm: f64,
    /// Step length that produced this configuration (0 at the start).
    pub step_size: f64,
    pub center: Point,
    pub r0: f64,
    pub cos_coeffs: Vec<f64>,
    pub sin_coeffs: Vec<f64>,
    #[serde(skip)]
    pub config: TwoPhaseConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Converged,
    StepsExhausted,
    LineSearchFailed,
    MeshFailure,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
    pub stop: StopReason,
    /// Error that aborted the run, if any.
    pub error: Option<String>,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectoryStep {
        self.steps.last().expect("trajectory has a starting point")
    }

    pub fn to_jsonl(&self) -> String {
        let mut s = String::new();
        for st in &self.steps {
            let _ = writeln!(s, "{}", crate::report::to_json_line(st));
        }
        s
    }
}

fn record(step: usize, step_size: f64, cfg: &TwoPhaseConfig, st: &TorsionState, grad: f64) -> TrajectoryStep {
    let o = cfg.outer();
    TrajectoryStep {
        step,
        area: o.area(),
        rigidity: st.rigidity.value(),
        flux_deviation: st.flux_deviation(),
        gradient_norm: grad,
        step_size,
        center: o.center(),
        r0: o.r0(),
        cos_coeffs: o.cos_coeffs().to_vec(),
        sin_coeffs: o.sin_coeffs().to_vec(),
        config: cfg.clone(),
    }
}

/// Ascent direction: Fourier coefficients (in the curve parameter) of the
/// projected gradient, damped by `1/(1+k²)`, mean mode dropped.
fn smoothed_direction(g: &BoundaryField, order: usize) -> (Vec<f64>, Vec<f64>) {
    let b = g.boundary();
    let curve = b.curve();
    let (mut a, mut s) = (vec![0.0; order + 1], vec![0.0; order + 1]);
    for q in b.quadrature() {
        let th = b.edge_theta(q.edge, q.s);
        let v = b.interpolate(g.values(), q.edge, q.s);
        let dtheta = q.weight / curve.speed(th);
        for k in 1..=order {
            let kt = k as f64 * th;
            a[k] += v * kt.cos() * dtheta / PI;
            s[k] += v * kt.sin() * dtheta / PI;
        }
    }
    for k in 1..=order {
        let w = 1.0 / (1.0 + (k * k) as f64);
        a[k] *= w;
        s[k] *= w;
    }
    (a, s)
}

/// Volume-constrained gradient ascent of the rigidity with remeshing at
/// every step and a halving line search.
pub fn optimize_rigidity(config: &TwoPhaseConfig, opts: &OptimizerOptions) -> Result<Trajectory> {
    let mut cfg = config.clone();
    let mut state = TorsionState::for_config(&cfg, opts.h, opts.order)?;
    let gradient = |st: &TorsionState| project_zero_average(&st.flux.map(|v| v * v));
    let mut g = gradient(&state);
    let mut steps = vec![record(0, 0.0, &cfg, &state, g.norm_inf())];
    let deform = DeformOptions { order: opts.fourier_order, renormalize: true };
    for it in 1..=opts.steps {
        if g.norm_inf() < opts.tol {
            return Ok(Trajectory { steps, stop: StopReason::Converged, error: None });
        }
        let (a, s) = smoothed_direction(&g, opts.fourier_order);
        let dir = |th: f64| (1..a.len()).map(|k| a[k] * (k as f64 * th).cos() + s[k] * (k as f64 * th).sin()).sum::<f64>();
        let mut t = opts.step_size;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial = deform_boundary_fn(cfg.outer(), dir, t, deform).and_then(|o| cfg.with_outer(o));
            let trial = match trial {
                Ok(c) => c,
                Err(_) => {
                    t *= 0.5;
                    continue;
                }
            };
            match TorsionState::for_config(&trial, opts.h, opts.order) {
                Ok(st) if st.rigidity.value() > state.rigidity.value() => {
                    accepted = Some((trial, st));
                    break;
                }
                Ok(_) => t *= 0.5,
                Err(e @ Error::Meshing(_)) => {
                    return Ok(Trajectory { steps, stop: StopReason::MeshFailure, error: Some(e.to_string()) })
                }
                Err(e) => return Err(e),
            }
        }
        let Some((next, st)) = accepted else {
            return Ok(Trajectory { steps, stop: StopReason::LineSearchFailed, error: None });
        };
        cfg = next;
        state = st;
        g = gradient(&state);
        steps.push(record(it, t, &cfg, &state, g.norm_inf()));
    }
    let stop = if g.norm_inf() < opts.tol { StopReason::Converged } else { StopReason::StepsExhausted };
    Ok(Trajectory { steps, stop, error: None })
}

/// Largest distance between `curve` and the circle of equal area centered at `center`.
pub fn hausdorff_to_circle(curve: &StarBoundary, center: Point) -> f64 {
    let radius = (curve.area() / PI).sqrt();
    let n = 4096;
    (0..n)
        .map(|j| (dist(curve.point(std::f64::consts::TAU * j as f64 / n as f64), center) - radius).abs())
        .fold(0.0, f64::max)
}
