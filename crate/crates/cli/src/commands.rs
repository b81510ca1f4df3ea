use std::sync::Arc;

use serde_json::{json, Value};
use twophase::acceptance::{self, CRITERIA};
use twophase::geometry::fmt17;
use twophase::ntd::{assemble_ntd, ntd_spectrum, theorem1_experiment};
use twophase::shape::{
    classify_critical_shape, finite_difference_probe, first_shape_derivative, fourier_mode, hausdorff_to_circle,
    optimize_rigidity, shape_hessian, FourierMode, OptimizerOptions, PerturbationPath, TorsionState,
    DEFAULT_OVERDETERMINED_TOL,
};
use twophase::sweep::{tentacle_scan, SweepOptions, TerminalCase};
use twophase::twosigma::{dual_solve, locking_field, scores_to_csv, serrin_reduction, two_sigma_score};
use twophase::{generate_mesh, Error, Mesh, TwoPhaseConfig};

use crate::config::{ConfigError, RawConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Solve,
    Rigidity,
    Derivative,
    Classify,
    Optimize,
    Ntd,
    Theorem1,
    Sweep,
    Twosigma,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Rigidity => "rigidity",
            Command::Derivative => "derivative",
            Command::Classify => "classify",
            Command::Optimize => "optimize",
            Command::Ntd => "ntd",
            Command::Theorem1 => "theorem1",
            Command::Sweep => "sweep",
            Command::Twosigma => "twosigma",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
    Acceptance(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Acceptance(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Numerical(m) | Failure::Acceptance(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(m) => Failure::Config(m),
            other => Failure::Numerical(other.to_string()),
        }
    }
}

pub struct Artifacts {
    pub summary: String,
    pub csv: Option<String>,
    pub json: Option<Value>,
    /// Reported after the artifacts are written.
    pub failure: Option<Failure>,
}

type Out = Result<Artifacts, Failure>;

fn mesh_of(cfg: &RawConfig, geometry: &TwoPhaseConfig) -> Result<Arc<Mesh>, Failure> {
    let h = cfg.f64_or("mesh", "h", 0.05)?;
    let order = cfg.usize_or("mesh", "order", 2)?;
    Ok(Arc::new(generate_mesh(geometry, h, order)?))
}

fn modes(cfg: &RawConfig, default: Vec<FourierMode>) -> Result<Vec<FourierMode>, Failure> {
    match cfg.words("experiment", "modes") {
        Some(words) => Ok(words.iter().map(|w| w.parse()).collect::<twophase::Result<Vec<_>>>()?),
        None => Ok(default),
    }
}

fn opt17(v: Option<f64>) -> String {
    v.map_or(String::new(), fmt17)
}

pub fn execute(cmd: Command, cfg: &RawConfig, report: &mut dyn FnMut(&str)) -> Out {
    if cmd == Command::Verify {
        return verify(cfg, report);
    }
    let geometry = cfg.geometry()?;
    match cmd {
        Command::Solve => solve(cfg, &geometry),
        Command::Rigidity => rigidity(cfg, &geometry),
        Command::Derivative => derivative(cfg, &geometry),
        Command::Classify => classify(cfg, &geometry),
        Command::Optimize => optimize(cfg, &geometry),
        Command::Ntd => ntd(cfg, &geometry),
        Command::Theorem1 => theorem1(cfg, &geometry),
        Command::Sweep => sweep(cfg, &geometry),
        Command::Twosigma => twosigma(cfg, &geometry),
        Command::Verify => unreachable!("handled above"),
    }
}

fn solve(cfg: &RawConfig, geometry: &TwoPhaseConfig) -> Out {
    let mesh = mesh_of(cfg, geometry)?;
    let st = TorsionState::solve(&mesh)?;
    let summary = format!(
        "solve: c = {:.8}, flux deviation {:.3e}, T = {:.10}, {} nodes",
        st.c_hat,
        st.flux_deviation(),
        st.rigidity.value(),
        mesh.n_nodes()
    );
    let json = json!({
        "c_hat": st.c_hat,
        "flux_deviation": st.flux_deviation(),
        "rigidity": st.rigidity.value(),
        "rigidity_gap": st.rigidity.relative_gap(),
        "nodes": mesh.n_nodes(),
        "elements": mesh.n_elements(),
        "flux": st.flux.values(),
    });
    Ok(Artifacts { summary, csv: Some(st.u.to_csv()), json: Some(json), failure: None })
}

fn rigidity(cfg: &RawConfig, geometry: &TwoPhaseConfig) -> Out {
    let mesh = mesh_of(cfg, geometry)?;
    let st = TorsionState::solve(&mesh)?;
    let r = st.rigidity;
    let summary = format!("rigidity: T = {:.12}, energy gap {:.3e}", r.value(), r.relative_gap());
    let json = json!({ "integral": r.integral, "energy": r.energy, "value": r.value(), "relative_gap": r.relative_gap() });
    Ok(Artifacts { summary, csv: None, json: Some(json), failure: None })
}

fn derivative(cfg: &RawConfig, geometry: &TwoPhaseConfig) -> Out {
    let mesh = mesh_of(cfg, geometry)?;
    let h = cfg.f64_or("mesh", "h", 0.05)?;
    let order = cfg.usize_or("mesh", "order", 2)?;
    let t_grid = cfg.f64_list_or("experiment", "t_grid", &[-0.02, -0.01, 0.01, 0.02])?;
    let renormalize = cfg.bool_or("experiment", "renormalize", true)?;
    let tol = cfg.f64_or("experiment", "overdetermined_tol", DEFAULT_OVERDETERMINED_TOL)?;
    let st = TorsionState::solve(&mesh)?;
    let mut csv = String::from("mode,dT,dT_fd,d2T,d2T_fd\n");
    let mut rows = Vec::new();
    for m in modes(cfg, vec![FourierMode::cos(1), FourierMode::cos(2), FourierMode::cos(3)])? {
        let hn = fourier_mode(st.boundary(), m);
        let first = first_shape_derivative(&st, &hn)?;
        let second = match shape_hessian(&st, &hn, tol) {
            Ok(v) => Some(v),
            Err(Error::BaseNotCritical { .. }) => None,
            Err(e) => return Err(e.into()),
        };
        let fd = if t_grid.is_empty() {
            None
        } else {
            let path = PerturbationPath::new(geometry.clone(), hn, renormalize)?;
            Some(finite_difference_probe(&path, &t_grid, h, order)?)
        };
        csv.push_str(&format!(
            "{m},{},{},{},{}\n",
            fmt17(first),
            opt17(fd.as_ref().map(|f| f.dt)),
            opt17(second),
            opt17(fd.as_ref().map(|f| f.d2t))
        ));
        rows.push(json!({ "mode": m.to_string(), "dT": first, "d2T": second, "fd": fd }));
    }
    let summary = format!("derivative: {} modes, base flux deviation {:.3e}", rows.len(), st.flux_deviation());
    Ok(Artifacts { summary, csv: Some(csv), json: Some(json!({ "modes": rows })), failure: None })
}

fn classify(cfg: &RawConfig, geometry: &TwoPhaseConfig) -> Out {
    let mesh = mesh_of(cfg, geometry)?;
    let st = TorsionState::solve(&mesh)?;
    let tie = cfg.f64_or("experiment", "tie_tol", 1e-8)?;
    let tol = cfg.f64_or("experiment", "overdetermined_tol", DEFAULT_OVERDETERMINED_TOL)?;
    let c = classify_critical_shape(&st, &modes(cfg, FourierMode::up_to(8))?, tie, tol)?;
    let mut csv = String::from("mode,d2T\n");
    for (m, v) in &c.values {
        csv.push_str(&format!("{m},{}\n", fmt17(*v)));
    }
    let summary = format!("classify: {} over {} modes, d2T in [{:.4e}, {:.4e}]", c.evidence, c.values.len(), c.min, c.max);
    let json = serde_json::to_value(&c).map_err(|e| Failure::Numerical(e.to_string()))?;
    Ok(Artifacts { summary, csv: Some(csv), json: Some(json), failure: None })
}

fn optimize(cfg: &RawConfig, geometry: &TwoPhaseConfig) -> Out {
    let d = OptimizerOptions::default();
    let opts = OptimizerOptions {
        steps: cfg.usize_or("experiment", "steps", d.steps)?,
        step_size: cfg.f64_or("experiment", "step_size", d.step_size)?,
        tol: cfg.f64_or("experiment", "tol", d.tol)?,
        h: cfg.f64_or("mesh", "h", d.h)?,
        order: cfg.usize_or("mesh", "order", d.order)?,
        max_halvings: cfg.usize_or("experiment", "max_halvings", d.max_halvings)?,
        fourier_order: cfg.usize_or("experiment", "fourier_order", d.fourier_order)?,
    };
    let traj = optimize_rigidity(geometry, &opts)?;
    let mut csv = String::from("step,area,rigidity,flux_deviation,gradient_norm,step_size\n");
    for s in &traj.steps {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s.step,
            fmt17(s.area),
            fmt17(s.rigidity),
            fmt17(s.flux_deviation),
            fmt17(s.gradient_norm),
            fmt17(s.step_size)
        ));
    }
    let (first, last) = (&traj.steps[0], traj.last());
    let hausdorff = hausdorff_to_circle(last.config.outer(), last.config.cores()[0].center());
    let summary = format!(
        "optimize: {:?} after {} steps, flux deviation {:.3e} -> {:.3e}, T {:.8} -> {:.8}, Hausdorff to core-centered circle {:.3e}",
        traj.stop,
        traj.steps.len() - 1,
        first.flux_deviation,
        last.flux_deviation,
        first.rigidity,
        last.rigidity,
        hausdorff
    );
    let json = json!({ "stop": traj.stop, "error": traj.error, "hausdorff": hausdorff, "steps": traj.steps });
    Ok(Artifacts { summary, csv: Some(csv), json: Some(json), failure: None })
}

fn ntd(cfg: &RawConfig, geometry: &TwoPhaseConfig) -> Out {
    let mesh = mesh_of(cfg, geometry)?;
    let op = assemble_ntd(&mesh, geometry.sigma_c())?;
    let spectrum = ntd_spectrum(&op, cfg.usize_or("experiment", "k_max", 12)?)?;
    let summary = format!(
        "ntd: {} eigenvalues, largest {:.10}, asymmetry {:.2e}",
        spectrum.len(),
        spectrum.eigenvalues[0],
        op.asymmetry()
    );
    let json = json!({ "sigma_c": spectrum.sigma_c, "dim": op.dim(), "asymmetry": op.asymmetry(), "eigenvalues": spectrum.eigenvalues });
    Ok(Artifacts { summary, csv: Some(spectrum.to_csv()), json: Some(json), failure: None })
}

fn theorem1(cfg: &RawConfig, geometry: &TwoPhaseConfig) -> Out {
    let mesh = mesh_of(cfg, geometry)?;
    let st = TorsionState::solve(&mesh)?;
    let tol = cfg.f64_or("experiment", "overdetermined_tol", DEFAULT_OVERDETERMINED_TOL)?;
    let rep = theorem1_experiment(&st, cfg.usize_or("experiment", "k_max", 12)?, tol)?;
    let above = rep.rows.iter().filter(|r| r.d2t > r.bound).count();
    let summary = format!(
        "theorem1: {} modes, first negative k = {}, {} rows above the bound",
        rep.rows.len(),
        rep.k_neg.map_or("none".to_string(), |k| k.to_string()),
        above
    );
    let json = serde_json::to_value(&rep).map_err(|e| Failure::Numerical(e.to_string()))?;
    Ok(Artifacts { summary, csv: Some(rep.to_csv()), json: Some(json), failure: None })
}

fn sweep(cfg: &RawConfig, geometry: &TwoPhaseConfig) -> Out {
    let d = SweepOptions::default();
    let dlambda = match cfg.f64_or("experiment", "dlambda", 0.0)? {
        v if v > 0.0 => Some(v),
        _ => None,
    };
    let opts = SweepOptions {
        dlambda,
        tol_touch: cfg.f64_or("experiment", "tol_touch", d.tol_touch)?,
        tol_angle: cfg.f64_or("experiment", "tol_angle", d.tol_angle)?,
        plane_band: cfg.f64_or("experiment", "plane_band", d.plane_band)?,
        resolution: cfg.usize_or("experiment", "resolution", d.resolution)?,
    };
    let n = cfg.usize_or("experiment", "directions", 64)?;
    let v = tentacle_scan(geometry, n, &opts)?;
    let mut csv = String::from("direction_x,direction_y,terminal_case,first_contact_lambda,terminal_lambda,witness_x,witness_y\n");
    for r in &v.reports {
        let case = match r.terminal_case {
            TerminalCase::CoreTouch => "core-touch",
            TerminalCase::BoundaryTouch => "boundary-touch",
            TerminalCase::OrthogonalCut => "orthogonal-cut",
        };
        csv.push_str(&format!(
            "{},{},{case},{},{},{},{}\n",
            fmt17(r.direction[0]),
            fmt17(r.direction[1]),
            fmt17(r.first_contact_lambda),
            fmt17(r.terminal_lambda),
            fmt17(r.witness[0]),
            fmt17(r.witness[1])
        ));
    }
    let summary = if v.has_tentacle {
        format!("sweep: tentacle found, {} of {n} directions offending", v.offending.len())
    } else {
        format!("sweep: no tentacle over {n} directions")
    };
    let json = serde_json::to_value(&v).map_err(|e| Failure::Numerical(e.to_string()))?;
    Ok(Artifacts { summary, csv: Some(csv), json: Some(json), failure: None })
}

fn twosigma(cfg: &RawConfig, geometry: &TwoPhaseConfig) -> Out {
    let alpha = cfg.f64_or("experiment", "alpha", 2.0)?;
    let beta = cfg.f64_or("experiment", "beta", 3.0)?;
    let offsets = cfg.f64_list_or("experiment", "offsets", &[0.0])?;
    let mut rows = Vec::new();
    let mut details = Vec::new();
    for &off in &offsets {
        let cores = geometry.cores().iter().map(|c| c.translated([off, 0.0])).collect();
        let shifted = TwoPhaseConfig::new(geometry.outer().clone(), cores, geometry.sigma_c())?;
        let mesh = mesh_of(cfg, &shifted)?;
        let pair = dual_solve(&mesh, alpha, beta)?;
        let score = two_sigma_score(&pair)?;
        let lock = locking_field(&pair)?;
        let reduction = match serrin_reduction(&pair) {
            Ok(r) => json!({ "residual": r.residual, "flux_deviation": r.flux_deviation, "flux_mean": r.flux.mean() }),
            Err(e @ Error::ReductionInvalid { .. }) => json!({ "invalid": e.to_string() }),
            Err(e) => return Err(e.into()),
        };
        let (fa, fb) = pair.fluxes()?;
        details.push(json!({
            "offset": off,
            "score": score,
            "flux_mean_alpha": fa.mean(),
            "flux_mean_beta": fb.mean(),
            "cores": lock.components,
            "reduction": reduction,
        }));
        rows.push((off, score));
    }
    let summary = format!(
        "twosigma: α = {alpha}, β = {beta}, scores {}",
        rows.iter().map(|(o, s)| format!("{o}: {:.3e}", s.total)).collect::<Vec<_>>().join(", ")
    );
    Ok(Artifacts { summary, csv: Some(scores_to_csv(&rows)), json: Some(json!({ "alpha": alpha, "beta": beta, "runs": details })), failure: None })
}

fn verify(cfg: &RawConfig, report: &mut dyn FnMut(&str)) -> Out {
    let ids: Vec<u8> = match cfg.words("experiment", "criteria") {
        Some(words) => words
            .iter()
            .map(|w| match w.parse::<u8>() {
                Ok(id) if CRITERIA.contains(&id) => Ok(id),
                _ => Err(Failure::Config(format!("[experiment] criteria: `{w}` is not a criterion number 1-10"))),
            })
            .collect::<Result<_, _>>()?,
        None => CRITERIA.to_vec(),
    };
    let outcomes = acceptance::run(&ids, |o| report(&o.to_string()));
    let failed: Vec<u8> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    let records: Vec<Value> = outcomes
        .iter()
        .map(|o| json!({ "id": o.id, "name": o.name, "passed": o.passed, "detail": o.detail, "budget_s": o.budget.as_secs() }))
        .collect();
    Ok(Artifacts {
        summary: format!("verify: {} of {} criteria passed", outcomes.len() - failed.len(), outcomes.len()),
        csv: None,
        json: Some(json!({ "criteria": records })),
        failure: (!failed.is_empty()).then(|| Failure::Acceptance(format!("criteria {failed:?} failed"))),
    })
}
