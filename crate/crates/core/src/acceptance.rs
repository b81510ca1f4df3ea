//! The ten end-to-end acceptance checks, shared by the `verify` command and
//! the `acceptance` integration test.

use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::error::Result;
use crate::fem::solve_torsion;
use crate::geometry::{StarBoundary, TwoPhaseConfig};
use crate::mesh::generate_mesh;
use crate::ntd::theorem1_experiment;
use crate::radial::{AnnulusCandidate, RadialTwoPhase};
use crate::shape::{
    first_shape_derivative, fourier_mode, hausdorff_to_circle, optimize_rigidity, shape_hessian, finite_difference_probe,
    FourierMode, OptimizerOptions, PerturbationPath, TorsionState, Trajectory, DEFAULT_OVERDETERMINED_TOL,
};
use crate::sweep::{dumbbell_fixture, reflected_difference, tentacle_scan, SweepOptions};
use crate::twosigma::{dual_solve, locking_field, serrin_reduction, two_sigma_deviation};

pub const CRITERIA: [u8; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];

#[derive(Clone, Debug)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] criterion {:>2} {}: {} ({:.2} s, budget {} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs()
        )
    }
}

fn name(id: u8) -> &'static str {
    match id {
        1 => "radial solve accuracy",
        2 => "overdetermined constancy",
        3 => "shape-derivative consistency",
        4 => "criticality signature",
        5 => "NtD eigen-perturbation bound",
        6 => "annulus impossibility",
        7 => "tentacle scan",
        8 => "moving-plane positivity",
        9 => "two-conductivity discrimination",
        10 => "optimizer sanity",
        _ => "unknown",
    }
}

fn budget(id: u8) -> Duration {
    Duration::from_secs(match id {
        1 => 30,
        2 => 10,
        3 | 4 => 300,
        5 => 600,
        6 => 1,
        7 | 9 => 60,
        8 => 30,
        _ => 900,
    })
}

/// Runs the check, timing it and folding the time budget into the verdict.
fn timed(id: u8, extra: Duration, check: impl FnOnce() -> Result<(bool, String)>) -> Outcome {
    let start = Instant::now();
    let result = check();
    let elapsed = start.elapsed() + extra;
    let budget = budget(id);
    let (ok, detail) = match result {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    let passed = ok && elapsed <= budget;
    let detail = if ok && !passed { format!("{detail}; over time budget") } else { detail };
    Outcome { id, name: name(id), passed, detail, elapsed, budget }
}

const H: f64 = 0.05;
const ORDER: usize = 2;

fn off_center(center: [f64; 2], rho: f64, sigma_c: f64) -> Result<TwoPhaseConfig> {
    TwoPhaseConfig::new(StarBoundary::circle([0.0, 0.0], 1.0)?, vec![StarBoundary::circle(center, rho)?], sigma_c)
}

fn criterion1() -> Result<(bool, String)> {
    let hs = [H, H / 2.0, H / 4.0];
    let mut ok = true;
    let mut parts = Vec::new();
    for sigma in [0.5, 2.0, 10.0] {
        let exact = RadialTwoPhase::planar(0.5, 1.0, sigma)?;
        let cfg = TwoPhaseConfig::concentric(0.5, 1.0, sigma)?;
        let mut errs = Vec::new();
        for &h in &hs {
            let mesh = Arc::new(generate_mesh(&cfg, h, ORDER)?);
            let u = solve_torsion(&mesh, sigma)?;
            let mut err: f64 = 0.0;
            for (p, v) in mesh.nodes().iter().zip(u.values()) {
                let r = p[0].hypot(p[1]).min(1.0);
                err = err.max((v - exact.value(r)?).abs());
            }
            errs.push(err);
        }
        let slope = (errs[0] / errs[2]).ln() / (hs[0] / hs[2]).ln();
        ok &= errs[0] < 1e-3 && slope >= 1.9;
        parts.push(format!("σ={sigma}: err {:.2e}, slope {slope:.2}", errs[0]));
    }
    Ok((ok, parts.join("; ")))
}

fn criterion2() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for sigma in [0.5, 2.0, 10.0] {
        let st = TorsionState::for_config(&TwoPhaseConfig::concentric(0.5, 1.0, sigma)?, H, ORDER)?;
        worst = worst.max(st.flux.values().iter().fold(0.0, |m, f| m.max((f + 0.5).abs())));
    }
    Ok((worst < 1e-3, format!("max |∂_n u + 1/2| = {worst:.2e} over σ ∈ {{0.5, 2, 10}}")))
}

const FD_GRID: [f64; 4] = [-0.02, -0.01, 0.01, 0.02];

fn criterion3() -> Result<(bool, String)> {
    let modes = [FourierMode::cos(1), FourierMode::cos(2), FourierMode::cos(3)];
    let base = off_center([0.2, 0.0], 0.5, 2.0)?;
    let st = TorsionState::for_config(&base, H, ORDER)?;
    let mut first: f64 = 0.0;
    for m in modes {
        let hn = fourier_mode(st.boundary(), m);
        let exact = first_shape_derivative(&st, &hn)?;
        let fd = finite_difference_probe(&PerturbationPath::new(base.clone(), hn, true)?, &FD_GRID, H, ORDER)?;
        first = first.max((exact - fd.dt).abs() / fd.dt.abs());
    }
    let base = TwoPhaseConfig::concentric(0.5, 1.0, 2.0)?;
    let st = TorsionState::for_config(&base, H, ORDER)?;
    let mut second: f64 = 0.0;
    for m in [FourierMode::cos(2), FourierMode::cos(3), FourierMode::sin(4)] {
        let hn = fourier_mode(st.boundary(), m);
        let exact = shape_hessian(&st, &hn, DEFAULT_OVERDETERMINED_TOL)?;
        let fd = finite_difference_probe(&PerturbationPath::new(base.clone(), hn, true)?, &FD_GRID, H, ORDER)?;
        second = second.max((exact - fd.d2t).abs() / fd.d2t.abs());
    }
    Ok((
        first < 1e-2 && second < 5e-2,
        format!("first-derivative rel. error {first:.2e}, second-derivative rel. error {second:.2e}"),
    ))
}

fn hessian_values(sigma: f64) -> Result<Vec<f64>> {
    let st = TorsionState::for_config(&TwoPhaseConfig::concentric(0.5, 1.0, sigma)?, H, ORDER)?;
    FourierMode::up_to(8)
        .into_iter()
        .map(|m| shape_hessian(&st, &fourier_mode(st.boundary(), m), DEFAULT_OVERDETERMINED_TOL))
        .collect()
}

fn criterion4() -> Result<(bool, String)> {
    let above = hessian_values(2.0)?;
    let below = hessian_values(0.5)?;
    let max_above = above.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (npos, nneg) = (below.iter().filter(|v| **v > 0.0).count(), below.iter().filter(|v| **v < 0.0).count());
    Ok((
        max_above < 0.0 && npos > 0 && nneg > 0,
        format!("σ=2: max d²T {max_above:.3e}; σ=0.5: {npos} positive, {nneg} negative"),
    ))
}

fn criterion5() -> Result<(bool, String)> {
    let st = TorsionState::for_config(&TwoPhaseConfig::concentric(0.5, 1.0, 2.0)?, H, ORDER)?;
    let rep = theorem1_experiment(&st, 12, DEFAULT_OVERDETERMINED_TOL)?;
    let target = 11.0 / 13.0;
    let pair_err = rep.rows[..2].iter().fold(0.0f64, |m, r| m.max((r.lambda - target).abs()));
    let all_negative = rep.rows.iter().all(|r| r.d2t < 0.0);
    let slack = rep.rows.iter().map(|r| r.d2t - r.bound).fold(f64::NEG_INFINITY, f64::max);
    let limit = -2.0 * st.c_hat * st.c_hat;
    let last = &rep.rows[11];
    let product = last.d2t * last.lambda;
    let ok = pair_err < 1e-3 && all_negative && slack <= 1e-2 && (product - limit).abs() <= 0.2 * limit.abs();
    Ok((
        ok,
        format!(
            "|λ₁,₂ − 11/13| ≤ {pair_err:.2e}, all d²T < 0: {all_negative}, max(d²T − bound) {slack:.3e}, d²T·λ at k=12 {product:.4} vs {limit:.4}"
        ),
    ))
}

/// Fluxes `(|U′(R₁)|, |U′(R₂)|)` of `U″ + U′/r = −1`, `U(R₁) = U(R₂) = 0`,
/// by RK4 shooting; independent of the closed form.
fn annulus_shooting(r1: f64, r2: f64) -> (f64, f64) {
    let rhs = |r: f64, y: [f64; 2], forced: f64| [y[1], -forced - y[1] / r];
    let integrate = |y0: [f64; 2], forced: f64| -> [f64; 2] {
        let n = 4000;
        let dr = (r2 - r1) / n as f64;
        let mut y = y0;
        for i in 0..n {
            let r = r1 + i as f64 * dr;
            let k1 = rhs(r, y, forced);
            let k2 = rhs(r + dr / 2.0, [y[0] + dr / 2.0 * k1[0], y[1] + dr / 2.0 * k1[1]], forced);
            let k3 = rhs(r + dr / 2.0, [y[0] + dr / 2.0 * k2[0], y[1] + dr / 2.0 * k2[1]], forced);
            let k4 = rhs(r + dr, [y[0] + dr * k3[0], y[1] + dr * k3[1]], forced);
            for j in 0..2 {
                y[j] += dr / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
        }
        y
    };
    let p = integrate([0.0, 0.0], 1.0);
    let h = integrate([0.0, 1.0], 0.0);
    let s = -p[0] / h[0];
    (s.abs(), (p[1] + s * h[1]).abs())
}

fn criterion6() -> Result<(bool, String)> {
    let mut min_mismatch = f64::INFINITY;
    let mut oracle_gap: f64 = 0.0;
    for r1 in [0.25, 0.5, 1.0, 2.0] {
        for ratio in [1.2, 1.5, 2.0, 3.0, 5.0] {
            let f = AnnulusCandidate::new(r1, r1 * ratio, 2)?.fluxes();
            let (inner, outer) = annulus_shooting(r1, r1 * ratio);
            min_mismatch = min_mismatch.min(f.mismatch);
            oracle_gap = oracle_gap.max((f.inner - inner).abs()).max((f.outer - outer).abs());
        }
    }
    let at12 = AnnulusCandidate::new(1.0, 2.0, 2)?.fluxes().mismatch;
    Ok((
        min_mismatch > 0.0 && oracle_gap < 1e-6 && (at12 - 0.123032).abs() < 1e-4,
        format!("min mismatch {min_mismatch:.3e} over 20 annuli, oracle gap {oracle_gap:.1e}, mismatch(1,2) {at12:.6}"),
    ))
}

fn criterion7(terminal: &TwoPhaseConfig) -> Result<(bool, String)> {
    let opts = SweepOptions::default();
    let concentric = tentacle_scan(&TwoPhaseConfig::concentric(0.5, 1.0, 2.0)?, 64, &opts)?;
    let optimized = tentacle_scan(terminal, 64, &opts)?;
    let dumbbell = tentacle_scan(&dumbbell_fixture(), 64, &opts)?;
    let near_waist = dumbbell.offending.iter().any(|e| e[1].abs() >= 10f64.to_radians().cos());
    Ok((
        !concentric.has_tentacle && !optimized.has_tentacle && dumbbell.has_tentacle && near_waist,
        format!(
            "concentric: {}, optimizer terminal: {}, dumbbell: {} ({} offending, waist-normal hit: {near_waist})",
            concentric.has_tentacle,
            optimized.has_tentacle,
            dumbbell.has_tentacle,
            dumbbell.offending.len()
        ),
    ))
}

fn criterion8() -> Result<(bool, String)> {
    let cfg = TwoPhaseConfig::concentric(0.5, 1.0, 2.0)?;
    let mesh = Arc::new(generate_mesh(&cfg, H, ORDER)?);
    let u = solve_torsion(&mesh, 2.0)?;
    let samples = [([1.0, 0.0], 0.8), ([0.0, 1.0], 0.9), ([0.6, 0.8], 0.85), ([-1.0, 0.0], 0.77), ([0.0, -1.0], 0.95)];
    let mut worst = f64::INFINITY;
    for (e, lambda) in samples {
        worst = worst.min(reflected_difference(&u, &cfg, e, lambda, 0.02)?.min);
    }
    Ok((worst >= -1e-6, format!("min w_λ over 5 caps {worst:.3e}")))
}

fn criterion9() -> Result<(bool, String)> {
    let cfg = TwoPhaseConfig::concentric(0.5, 1.0, 2.0)?;
    let centered = two_sigma_deviation(&cfg, 2.0, 3.0, H, ORDER)?.total;
    let shifted = two_sigma_deviation(&off_center([0.2, 0.0], 0.5, 2.0)?, 2.0, 3.0, H, ORDER)?.total;
    let mesh = Arc::new(generate_mesh(&cfg, H, ORDER)?);
    let pair = dual_solve(&mesh, 2.0, 3.0)?;
    let lock = locking_field(&pair)?;
    let mut core_nodes = mesh.core_interior_nodes(0);
    core_nodes.extend(mesh.interface_nodes(0));
    let v_err = core_nodes.iter().map(|&i| (lock.v.values()[i] + 0.1875).abs()).fold(0.0, f64::max);
    let red = serrin_reduction(&pair)?;
    let w_err = mesh
        .nodes()
        .iter()
        .zip(red.w.values())
        .map(|(p, w)| (w - (1.0 - p[0] * p[0] - p[1] * p[1]) / 4.0).abs())
        .fold(0.0, f64::max);
    Ok((
        centered < 1e-2 && shifted >= 10.0 * centered && v_err < 1e-3 && w_err < 1e-3,
        format!(
            "score concentric {centered:.3e}, offset 0.2 {shifted:.3e} ({:.0}×), |v + 0.1875| ≤ {v_err:.1e}, |w − (1−r²)/4| ≤ {w_err:.1e}",
            shifted / centered
        ),
    ))
}

/// Starting configuration of the optimizer check.
pub fn optimizer_start() -> Result<TwoPhaseConfig> {
    off_center([0.15, 0.0], 0.4, 2.0)
}

fn criterion10(traj: &Trajectory) -> Result<(bool, String)> {
    let first = &traj.steps[0];
    let last = traj.last();
    let reduction = first.flux_deviation / last.flux_deviation;
    let area_drift = traj.steps.windows(2).map(|w| ((w[1].area - w[0].area) / w[0].area).abs()).fold(0.0, f64::max);
    let monotone = traj.steps.windows(2).all(|w| w[1].rigidity >= w[0].rigidity);
    let core = last.config.cores()[0].center();
    let hausdorff = hausdorff_to_circle(last.config.outer(), core);
    Ok((
        reduction >= 10.0 && area_drift <= 1e-8 && monotone && hausdorff < 1e-2,
        format!(
            "{} steps ({:?}), flux deviation {:.2e} → {:.2e} ({reduction:.1}×), max area drift {area_drift:.1e}, T nondecreasing: {monotone}, Hausdorff {hausdorff:.2e}",
            traj.steps.len() - 1,
            traj.stop,
            first.flux_deviation,
            last.flux_deviation
        ),
    ))
}

/// Runs the selected criteria in order. Criteria 7 and 10 share one
/// optimizer run, whose time is charged to 10.
pub fn run(ids: &[u8], mut report: impl FnMut(&Outcome)) -> Vec<Outcome> {
    let mut out = Vec::new();
    let mut optimizer: Option<(Result<Trajectory>, Duration)> = None;
    let trajectory = |cache: &mut Option<(Result<Trajectory>, Duration)>| {
        if cache.is_none() {
            let start = Instant::now();
            let traj = optimizer_start().and_then(|c| optimize_rigidity(&c, &OptimizerOptions::default()));
            *cache = Some((traj, start.elapsed()));
        }
        let (traj, took) = cache.as_ref().expect("optimizer run cached");
        (traj.as_ref().map_err(|e| crate::Error::Precondition(format!("optimizer run failed: {e}"))).cloned(), *took)
    };
    for &id in ids {
        let o = match id {
            1 => timed(1, Duration::ZERO, criterion1),
            2 => timed(2, Duration::ZERO, criterion2),
            3 => timed(3, Duration::ZERO, criterion3),
            4 => timed(4, Duration::ZERO, criterion4),
            5 => timed(5, Duration::ZERO, criterion5),
            6 => timed(6, Duration::ZERO, criterion6),
            7 => {
                let (traj, _) = trajectory(&mut optimizer);
                timed(7, Duration::ZERO, || criterion7(&traj?.last().config))
            }
            8 => timed(8, Duration::ZERO, criterion8),
            9 => timed(9, Duration::ZERO, criterion9),
            10 => {
                let (traj, took) = trajectory(&mut optimizer);
                timed(10, took, || criterion10(&traj?))
            }
            other => Outcome {
                id: other,
                name: name(other),
                passed: false,
                detail: "no such criterion".into(),
                elapsed: Duration::ZERO,
                budget: Duration::ZERO,
            },
        };
        report(&o);
        out.push(o);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shooting_matches_closed_form_on_one_annulus() {
        let (inner, outer) = annulus_shooting(1.0, 2.0);
        let f = AnnulusCandidate::new(1.0, 2.0, 2).unwrap().fluxes();
        assert!((inner - f.inner).abs() < 1e-9 && (outer - f.outer).abs() < 1e-9);
    }

    #[test]
    fn unknown_criterion_fails() {
        let out = run(&[42], |_| {});
        assert!(!out[0].passed);
    }
}
