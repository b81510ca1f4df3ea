//! Moving-plane sweeps: reflect the part of the domain beyond a line and
//! stop at the first contact with the core, with the outer boundary, or at
//! an orthogonal crossing.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::FemField;
use crate::geometry::reflect::{signed_gap_screened, BoundedCore};
use crate::geometry::{
    dot, golden_min, reflect_point, BoundaryTable, HalfplaneSweepFrame, Point, ReflectedCap, StarBoundary, TwoPhaseConfig,
    DEFAULT_CAP_RESOLUTION,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum TerminalCase {
    CoreTouch,
    BoundaryTouch,
    OrthogonalCut,
}

impl TerminalCase {
    pub fn is_tentacle(self) -> bool {
        self != TerminalCase::CoreTouch
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepOptions {
    /// Step in `λ`; `None` means `max(|λ₀|, r0)/2000`.
    pub dlambda: Option<f64>,
    /// Contact tolerance as a fraction of `r0`.
    pub tol_touch: f64,
    /// Allowed deviation (radians) from a right angle between line and boundary.
    pub tol_angle: f64,
    /// Reflected points closer than this fraction of `r0` to the line are
    /// ignored by the boundary-contact test.
    pub plane_band: f64,
    pub resolution: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { dlambda: None, tol_touch: 1e-6, tol_angle: 1e-3, plane_band: 1e-3, resolution: DEFAULT_CAP_RESOLUTION }
    }
}

/// Values of the three stopping criteria at one line position.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Margins {
    /// Signed distance between the reflected cap and the cores.
    pub core_gap: f64,
    /// Smallest radial margin of reflected boundary points inside Ω.
    pub boundary_margin: f64,
    /// Smallest `n·e` at the points where the line crosses ∂Ω.
    pub orthogonality: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub direction: Point,
    pub first_contact_lambda: f64,
    pub terminal_lambda: f64,
    pub terminal_case: TerminalCase,
    pub witness: Point,
    pub margins: Margins,
    /// Other cases that fired within the bisection tolerance.
    pub ties: Vec<TerminalCase>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TentacleVerdict {
    pub has_tentacle: bool,
    pub reports: Vec<SweepReport>,
    pub offending: Vec<Point>,
}

/// `max_{∂Ω} x·e`.
pub fn first_contact(outer: &StarBoundary, e: Point) -> f64 {
    BoundaryTable::new(outer, DEFAULT_CAP_RESOLUTION).support(e).0
}

const BISECTION_TOL: f64 = 1e-8;
const SCREEN: f64 = 1e-2;

struct Sweeper<'a> {
    table: BoundaryTable,
    cores: Vec<BoundedCore>,
    outer: &'a StarBoundary,
    e: Point,
    frame: HalfplaneSweepFrame,
    opts: SweepOptions,
    r0: f64,
}

struct Probe {
    margins: Margins,
    core_witness: Point,
    boundary_witness: Point,
    orth_witness: Point,
}

impl Sweeper<'_> {
    /// Criterion values at `lambda`. With `exact = false` a core gap above
    /// `SCREEN·r0` may be replaced by a lower bound.
    fn probe(&self, lambda: f64, exact: bool) -> Probe {
        let frame = self.frame.with_lambda(lambda);
        let cap = ReflectedCap::from_table(&self.table, &frame);
        let cutoff = if exact { f64::INFINITY } else { SCREEN * self.r0 };
        let (core_gap, core_witness) = match signed_gap_screened(&cap, &self.cores, cutoff) {
            Some(g) => (g.gap, g.witness),
            None => (f64::INFINITY, [f64::NAN; 2]),
        };
        let band = self.opts.plane_band * self.r0;
        let margin = |t: f64| {
            let p = self.outer.point(t);
            if dot(p, self.e) - lambda < band {
                f64::INFINITY
            } else {
                self.outer.radial_margin(reflect_point(p, &frame))
            }
        };
        let mut boundary_margin = f64::INFINITY;
        let mut boundary_witness = [f64::NAN; 2];
        for arc in cap.arcs() {
            let mut best: Option<(f64, usize)> = None;
            for (k, &t) in arc.thetas.iter().enumerate() {
                let m = margin(t);
                if m.is_finite() && best.is_none_or(|b| m < b.0) {
                    best = Some((m, k));
                }
            }
            if let Some((m0, k)) = best {
                let a = arc.thetas[k.saturating_sub(1)];
                let b = arc.thetas[(k + 1).min(arc.thetas.len() - 1)];
                let t = golden_min(margin, a, b, 1e-12);
                let (m, t) = if margin(t) < m0 { (margin(t), t) } else { (m0, arc.thetas[k]) };
                if m < boundary_margin {
                    boundary_margin = m;
                    boundary_witness = reflect_point(self.outer.point(t), &frame);
                }
            }
        }
        let mut orthogonality = f64::INFINITY;
        let mut orth_witness = [f64::NAN; 2];
        for &t in cap.crossings() {
            let c = dot(self.outer.normal(t), self.e);
            if c < orthogonality {
                orthogonality = c;
                orth_witness = self.outer.point(t);
            }
        }
        Probe {
            margins: Margins { core_gap, boundary_margin, orthogonality },
            core_witness,
            boundary_witness,
            orth_witness,
        }
    }

    /// Criterion values shifted so that `≤ 0` means "fired".
    fn criteria(&self, m: &Margins) -> [f64; 3] {
        let touch = self.opts.tol_touch * self.r0;
        [m.core_gap - touch, m.boundary_margin - touch, m.orthogonality - self.opts.tol_angle.sin()]
    }
}

const CASES: [TerminalCase; 3] = [TerminalCase::CoreTouch, TerminalCase::BoundaryTouch, TerminalCase::OrthogonalCut];

/// Sweep the line `x·e = λ` down from first contact.
pub fn sweep(config: &TwoPhaseConfig, e: Point, opts: &SweepOptions) -> Result<SweepReport> {
    let frame = HalfplaneSweepFrame::new(e, 0.0)?;
    if !(opts.tol_touch > 0.0 && opts.tol_angle > 0.0) {
        return Err(Error::Precondition("sweep tolerances must be positive".into()));
    }
    let outer = config.outer();
    let table = BoundaryTable::new(outer, opts.resolution);
    let lambda0 = table.support(e).0;
    let lowest = -table.support([-e[0], -e[1]]).0;
    let r0 = outer.r0();
    let dl = opts.dlambda.unwrap_or(lambda0.abs().max(r0) / 2000.0);
    if !(dl > 0.0) {
        return Err(Error::Precondition(format!("dlambda must be positive, got {dl}")));
    }
    let sw = Sweeper { table, cores: config.cores().iter().map(BoundedCore::new).collect(), outer, e, frame, opts: *opts, r0 };

    let mut prev = lambda0;
    let mut k = 1usize;
    loop {
        let lambda = lambda0 - k as f64 * dl;
        if lambda < lowest {
            return Err(Error::SweepDegenerate(format!(
                "direction ({:.6}, {:.6}): no stopping criterion fired between λ₀ = {lambda0:.6} and the far side {lowest:.6}",
                e[0], e[1]
            )));
        }
        let p = sw.probe(lambda, false);
        let f = sw.criteria(&p.margins);
        if f.iter().any(|v| *v <= 0.0) {
            // Bisect each fired criterion independently.
            let mut events: Vec<(f64, TerminalCase)> = Vec::new();
            for (i, case) in CASES.iter().enumerate() {
                if f[i] > 0.0 {
                    continue;
                }
                let (mut lo, mut hi) = (lambda, prev);
                while hi - lo > BISECTION_TOL {
                    let mid = 0.5 * (lo + hi);
                    if sw.criteria(&sw.probe(mid, false).margins)[i] <= 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                events.push((lo, *case));
            }
            let top = events.iter().map(|e| e.0).fold(f64::NEG_INFINITY, f64::max);
            let mut tied: Vec<TerminalCase> =
                events.iter().filter(|e| top - e.0 <= 2.0 * BISECTION_TOL).map(|e| e.1).collect();
            tied.sort();
            let case = tied[0];
            let terminal_lambda = events.iter().filter(|e| e.1 == case).map(|e| e.0).fold(f64::NEG_INFINITY, f64::max);
            let at = sw.probe(terminal_lambda, true);
            let witness = match case {
                TerminalCase::CoreTouch => at.core_witness,
                TerminalCase::BoundaryTouch => at.boundary_witness,
                TerminalCase::OrthogonalCut => at.orth_witness,
            };
            return Ok(SweepReport {
                direction: e,
                first_contact_lambda: lambda0,
                terminal_lambda,
                terminal_case: case,
                witness,
                margins: at.margins,
                ties: tied.into_iter().skip(1).collect(),
            });
        }
        prev = lambda;
        k += 1;
    }
}

/// Sweeps over `n` equally spaced directions, starting at `(1, 0)`.
pub fn tentacle_scan(config: &TwoPhaseConfig, n_directions: usize, opts: &SweepOptions) -> Result<TentacleVerdict> {
    if n_directions < 8 {
        return Err(Error::Precondition(format!("need at least 8 directions, got {n_directions}")));
    }
    let reports: Vec<SweepReport> = (0..n_directions)
        .into_par_iter()
        .map(|i| {
            let phi = TAU * i as f64 / n_directions as f64;
            sweep(config, [phi.cos(), phi.sin()], opts)
        })
        .collect::<Result<_>>()?;
    let offending: Vec<Point> = reports.iter().filter(|r| r.terminal_case.is_tentacle()).map(|r| r.direction).collect();
    Ok(TentacleVerdict { has_tentacle: !offending.is_empty(), reports, offending })
}

/// Vertically elongated two-lobe outer boundary
/// `r(θ) = 0.75 − 0.6 cos 2θ + 0.15 cos 4θ` (waist half-width 0.3 on the
/// x-axis, lobes reaching y = ±1.5) around a centered core of radius 0.1.
/// The sweep along `(0, ±1)` crosses a lobe equator orthogonally before
/// the reflected cap reaches the core.
pub fn dumbbell_fixture() -> TwoPhaseConfig {
    let outer = StarBoundary::new([0.0, 0.0], 0.75, vec![0.0, -0.6, 0.0, 0.15], vec![]).expect("valid dumbbell");
    let core = StarBoundary::circle([0.0, 0.0], 0.1).expect("valid core");
    TwoPhaseConfig::new(outer, vec![core], 2.0).expect("dumbbell core fits")
}

#[derive(Clone, Debug, Serialize)]
pub struct ReflectedDifference {
    /// Smallest `u(x) − u(x_λ)` over interior samples of the reflected cap.
    pub min: f64,
    pub argmin: Point,
    /// Largest `|u(x) − u(x_λ)|` over samples on the line.
    pub plane_max: f64,
    pub samples: Vec<(Point, f64)>,
}

/// `w_λ(x) = u(x) − u(x_λ)` on a grid of spacing `spacing` inside the
/// reflected cap; requires the cap to stay clear of the cores.
pub fn reflected_difference(u: &FemField, config: &TwoPhaseConfig, e: Point, lambda: f64, spacing: f64) -> Result<ReflectedDifference> {
    let frame = HalfplaneSweepFrame::new(e, lambda)?;
    let cap = crate::geometry::reflected_cap(config.outer(), &frame);
    let gap = crate::geometry::signed_gap(&cap, config.cores()).map_or(f64::INFINITY, |g| g.gap);
    if !(gap > 0.0) {
        return Err(Error::Precondition(format!("reflected cap meets the core (gap {gap:.3e})")));
    }
    sample_difference(u, &cap, spacing)
}

/// Same as [`reflected_difference`] without the core-clearance check, for
/// reflections about symmetry axes.
pub fn reflected_difference_unchecked(u: &FemField, config: &TwoPhaseConfig, e: Point, lambda: f64, spacing: f64) -> Result<ReflectedDifference> {
    let frame = HalfplaneSweepFrame::new(e, lambda)?;
    sample_difference(u, &crate::geometry::reflected_cap(config.outer(), &frame), spacing)
}

fn sample_difference(u: &FemField, cap: &ReflectedCap, spacing: f64) -> Result<ReflectedDifference> {
    if !(spacing > 0.0) {
        return Err(Error::Precondition(format!("sampling spacing must be positive, got {spacing}")));
    }
    if cap.is_empty() {
        return Err(Error::Precondition("the line does not cut the domain".into()));
    }
    let frame = *cap.frame();
    let w = |p: Point| -> Result<f64> {
        let a = u.eval(p).ok_or_else(|| Error::Precondition(format!("sample ({}, {}) outside the mesh", p[0], p[1])))?;
        let b = u
            .eval(reflect_point(p, &frame))
            .ok_or_else(|| Error::Precondition(format!("reflection of ({}, {}) outside the mesh", p[0], p[1])))?;
        Ok(a - b)
    };
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in cap.polygon_points() {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let mut samples = Vec::new();
    let (mut min, mut argmin) = (f64::INFINITY, [f64::NAN; 2]);
    let nx = ((hi[0] - lo[0]) / spacing).ceil() as usize;
    let ny = ((hi[1] - lo[1]) / spacing).ceil() as usize;
    for j in 0..=ny {
        for i in 0..=nx {
            let p = [lo[0] + i as f64 * spacing, lo[1] + j as f64 * spacing];
            if cap.signed_distance(p) >= 0.0 {
                continue;
            }
            let v = w(p)?;
            if v < min {
                min = v;
                argmin = p;
            }
            samples.push((p, v));
        }
    }
    let mut plane_max: f64 = 0.0;
    for c in cap.chords() {
        let len = crate::geometry::dist(c[0], c[1]);
        let m = ((len / spacing).ceil() as usize).max(1);
        for s in 1..m {
            let t = s as f64 / m as f64;
            let p = [c[0][0] + t * (c[1][0] - c[0][0]), c[0][1] + t * (c[1][1] - c[0][1])];
            plane_max = plane_max.max(w(p)?.abs());
        }
    }
    Ok(ReflectedDifference { min, argmin, plane_max, samples })
}
