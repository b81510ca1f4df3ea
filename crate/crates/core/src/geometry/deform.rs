use std::f64::consts::TAU;

use super::{add, dist, norm, scale, sub, Point, StarBoundary};
use crate::error::{Error, Result};
use crate::field::BoundaryField;

/// Default Fourier truncation order of refitted boundaries.
pub const DEFAULT_FIT_ORDER: usize = 16;
/// Samples per boundary edge used by the least-squares refit.
const SAMPLES_PER_EDGE: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeformOptions {
    /// Truncation order of the refit (raised to the input order if lower).
    pub order: usize,
    /// Rescale radially so the enclosed area is unchanged.
    pub renormalize: bool,
}

impl Default for DeformOptions {
    fn default() -> Self {
        DeformOptions { order: DEFAULT_FIT_ORDER, renormalize: false }
    }
}

impl DeformOptions {
    pub fn renormalized() -> Self {
        DeformOptions { renormalize: true, ..Self::default() }
    }
}

/// Move every boundary point by `t·hn·n` and refit a Fourier boundary.
///
/// `hn` must live on a boundary loop discretizing `b`; it is interpolated
/// along the loop edges at four points per edge.
pub fn deform_boundary(b: &StarBoundary, hn: &BoundaryField, t: f64, opts: DeformOptions) -> Result<StarBoundary> {
    let lp = hn.boundary();
    let tol = 1e-8 * b.r0();
    for (&th, &p) in lp.thetas().iter().zip(lp.points()) {
        if dist(b.point(th), p) > tol {
            return Err(Error::InvalidDeformation("normal velocity is not defined on this boundary".into()));
        }
    }
    if t == 0.0 || hn.values().iter().all(|&v| v == 0.0) {
        return Ok(b.clone());
    }
    let mut samples = Vec::with_capacity(lp.n_edges() * SAMPLES_PER_EDGE);
    for e in 0..lp.n_edges() {
        for k in 0..SAMPLES_PER_EDGE {
            let s = k as f64 / SAMPLES_PER_EDGE as f64;
            let th = lp.edge_theta(e, s);
            let v = lp.interpolate(hn.values(), e, s);
            samples.push(add(b.point(th), scale(b.normal(th), t * v)));
        }
    }
    refit(b, &samples, opts)
}

/// Same as [`deform_boundary`] with the normal velocity given as a function
/// of the curve parameter.
pub fn deform_boundary_fn(b: &StarBoundary, hn: impl Fn(f64) -> f64, t: f64, opts: DeformOptions) -> Result<StarBoundary> {
    if t == 0.0 {
        return Ok(b.clone());
    }
    let order = opts.order.max(b.order());
    let n = 8 * (2 * order + 1);
    let samples: Vec<Point> = (0..n)
        .map(|j| {
            let th = TAU * j as f64 / n as f64;
            add(b.point(th), scale(b.normal(th), t * hn(th)))
        })
        .collect();
    refit(b, &samples, opts)
}

/// Polar least-squares refit of a counter-clockwise point loop around the
/// center of `b`, with optional area renormalization to `area(b)`.
fn refit(b: &StarBoundary, points: &[Point], opts: DeformOptions) -> Result<StarBoundary> {
    let c = b.center();
    let mut polar = Vec::with_capacity(points.len());
    let mut prev: Option<f64> = None;
    let mut unwrapped = 0.0;
    for p in points {
        let d = sub(*p, c);
        let r = norm(d);
        if !(r > 0.0) {
            return Err(Error::InvalidDeformation("deformed boundary passes through the center".into()));
        }
        let phi = d[1].atan2(d[0]);
        if let Some(q) = prev {
            let step = super::wrap_angle(phi - q);
            if step <= 0.0 {
                return Err(Error::InvalidDeformation("deformed boundary is not star-shaped (self-intersection)".into()));
            }
            unwrapped += step;
        }
        prev = Some(phi);
        polar.push((phi, r));
    }
    if let (Some(first), Some(last)) = (polar.first(), prev) {
        let close = super::wrap_angle(first.0 - last);
        if close <= 0.0 || (unwrapped + close - TAU).abs() > 1e-6 {
            return Err(Error::InvalidDeformation("deformed boundary does not wind once around its center".into()));
        }
    }
    let order = opts.order.max(b.order());
    let fitted = StarBoundary::fit(c, &polar, order).map_err(|e| Error::InvalidDeformation(e.to_string()))?;
    if !opts.renormalize {
        return Ok(fitted);
    }
    let factor = (b.area() / fitted.area()).sqrt();
    fitted.scaled(factor).map_err(|e| Error::InvalidDeformation(e.to_string()))
}
