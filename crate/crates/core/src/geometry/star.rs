use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use super::{add, dist, norm, sub, Point};
use crate::error::{Error, Result};

/// Minimum number of samples used to certify `r(θ) > 0`.
const POSITIVITY_SAMPLES: usize = 1024;

/// Closed star-shaped curve `r(θ) = r0 + Σ_k (a_k cos kθ + b_k sin kθ)` around `center`.
///
/// `cos[k - 1]` and `sin[k - 1]` hold the amplitudes of mode `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct StarBoundary {
    center: Point,
    r0: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl StarBoundary {
    pub fn new(center: Point, r0: f64, cos: Vec<f64>, sin: Vec<f64>) -> Result<Self> {
        if !(r0.is_finite() && r0 > 0.0) {
            return Err(Error::InvalidGeometry(format!("r0 must be positive, got {r0}")));
        }
        if !center.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidGeometry("center is not finite".into()));
        }
        if let Some(bad) = cos.iter().chain(&sin).find(|v| !v.is_finite()) {
            return Err(Error::InvalidGeometry(format!("non-finite Fourier coefficient {bad}")));
        }
        let mut b = StarBoundary { center, r0, cos, sin };
        b.trim();
        b.check_positive()?;
        Ok(b)
    }

    pub fn circle(center: Point, radius: f64) -> Result<Self> {
        Self::new(center, radius, Vec::new(), Vec::new())
    }

    fn trim(&mut self) {
        let n = self.cos.len().max(self.sin.len());
        self.cos.resize(n, 0.0);
        self.sin.resize(n, 0.0);
        while self.cos.last() == Some(&0.0) && self.sin.last() == Some(&0.0) {
            self.cos.pop();
            self.sin.pop();
        }
    }

    fn check_positive(&self) -> Result<()> {
        let n = POSITIVITY_SAMPLES.max(64 * self.order());
        for j in 0..n {
            let th = TAU * j as f64 / n as f64;
            let r = self.radius(th);
            if !(r > 0.0) {
                return Err(Error::InvalidGeometry(format!(
                    "radius {r:e} is not positive at θ = {th:.6}"
                )));
            }
        }
        Ok(())
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn cos_coeffs(&self) -> &[f64] {
        &self.cos
    }

    pub fn sin_coeffs(&self) -> &[f64] {
        &self.sin
    }

    /// Highest Fourier mode present.
    pub fn order(&self) -> usize {
        self.cos.len()
    }

    pub fn is_circle(&self) -> bool {
        self.cos.is_empty()
    }

    pub fn radius(&self, theta: f64) -> f64 {
        self.radius_derivs(theta).0
    }

    /// `(r, dr/dθ, d²r/dθ²)` at `theta`.
    pub fn radius_derivs(&self, theta: f64) -> (f64, f64, f64) {
        let (s1, c1) = theta.sin_cos();
        let (mut sk, mut ck) = (s1, c1);
        let (mut r, mut dr, mut ddr) = (self.r0, 0.0, 0.0);
        for (k, (&a, &b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let kf = (k + 1) as f64;
            r += a * ck + b * sk;
            dr += kf * (b * ck - a * sk);
            ddr -= kf * kf * (a * ck + b * sk);
            let next_c = ck * c1 - sk * s1;
            sk = sk * c1 + ck * s1;
            ck = next_c;
        }
        (r, dr, ddr)
    }

    pub fn point(&self, theta: f64) -> Point {
        let r = self.radius(theta);
        let (s, c) = theta.sin_cos();
        [self.center[0] + r * c, self.center[1] + r * s]
    }

    /// dP/dθ (not normalized).
    pub fn tangent(&self, theta: f64) -> Point {
        let (r, dr, _) = self.radius_derivs(theta);
        let (s, c) = theta.sin_cos();
        [dr * c - r * s, dr * s + r * c]
    }

    /// Outward unit normal.
    pub fn normal(&self, theta: f64) -> Point {
        let t = self.tangent(theta);
        let l = norm(t);
        [t[1] / l, -t[0] / l]
    }

    /// Signed curvature, positive for convex arcs.
    pub fn curvature(&self, theta: f64) -> f64 {
        let (r, dr, ddr) = self.radius_derivs(theta);
        (r * r + 2.0 * dr * dr - r * ddr) / (r * r + dr * dr).powf(1.5)
    }

    /// Speed |dP/dθ|.
    pub fn speed(&self, theta: f64) -> f64 {
        let (r, dr, _) = self.radius_derivs(theta);
        (r * r + dr * dr).sqrt()
    }

    /// Polar angle of `p` around the center, in (-π, π].
    pub fn angle_of(&self, p: Point) -> f64 {
        (p[1] - self.center[1]).atan2(p[0] - self.center[0])
    }

    /// Enclosed area `½∮ r² dθ` by the trapezoidal rule, which is exact for
    /// trigonometric polynomials of degree below the node count.
    pub fn area(&self) -> f64 {
        let n = 4 * self.order() + 16;
        let h = TAU / n as f64;
        0.5 * h * (0..n).map(|j| self.radius(j as f64 * h).powi(2)).sum::<f64>()
    }

    pub fn perimeter(&self) -> f64 {
        let n = 2048.max(64 * self.order());
        let h = TAU / n as f64;
        h * (0..n).map(|j| self.speed(j as f64 * h)).sum::<f64>()
    }

    pub fn min_radius(&self) -> f64 {
        self.sample_radii().fold(f64::INFINITY, f64::min)
    }

    pub fn max_radius(&self) -> f64 {
        self.sample_radii().fold(0.0, f64::max)
    }

    fn sample_radii(&self) -> impl Iterator<Item = f64> + '_ {
        let n = POSITIVITY_SAMPLES.max(64 * self.order());
        (0..n).map(move |j| self.radius(TAU * j as f64 / n as f64))
    }

    /// Largest |κ| on a dense sample.
    pub fn max_curvature(&self) -> f64 {
        let n = POSITIVITY_SAMPLES.max(64 * self.order());
        (0..n)
            .map(|j| self.curvature(TAU * j as f64 / n as f64).abs())
            .fold(0.0, f64::max)
    }

    pub fn contains(&self, p: Point) -> bool {
        let d = sub(p, self.center);
        norm(d) < self.radius(d[1].atan2(d[0]))
    }

    /// Radial margin `r(θ_p) − |p − c|`; same sign and zero set as the signed distance.
    pub fn radial_margin(&self, p: Point) -> f64 {
        let d = sub(p, self.center);
        self.radius(d[1].atan2(d[0])) - norm(d)
    }

    /// Closest curve parameter to `p` and the distance to it.
    pub fn closest(&self, p: Point) -> (f64, f64) {
        let n = 64.max(16 * self.order());
        let h = TAU / n as f64;
        let (mut best, mut best_d) = (0.0, f64::INFINITY);
        for j in 0..n {
            let th = j as f64 * h;
            let d = dist(self.point(th), p);
            if d < best_d {
                best_d = d;
                best = th;
            }
        }
        let th = golden_min(|t| dist(self.point(t), p), best - h, best + h, 1e-13);
        let d = dist(self.point(th), p);
        if d < best_d {
            (th, d)
        } else {
            (best, best_d)
        }
    }

    /// Signed distance, negative inside.
    pub fn signed_distance(&self, p: Point) -> f64 {
        let (_, d) = self.closest(p);
        if self.contains(p) {
            -d
        } else {
            d
        }
    }

    pub fn translated(&self, v: Point) -> Self {
        StarBoundary { center: add(self.center, v), ..self.clone() }
    }

    /// Rigid rotation by `phi` about `pivot`.
    pub fn rotated(&self, phi: f64, pivot: Point) -> Self {
        let (s, c) = phi.sin_cos();
        let d = sub(self.center, pivot);
        let center = [pivot[0] + c * d[0] - s * d[1], pivot[1] + s * d[0] + c * d[1]];
        let mut cos = Vec::with_capacity(self.order());
        let mut sin = Vec::with_capacity(self.order());
        for (k, (&a, &b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let (sk, ck) = ((k + 1) as f64 * phi).sin_cos();
            cos.push(a * ck - b * sk);
            sin.push(a * sk + b * ck);
        }
        StarBoundary { center, r0: self.r0, cos, sin }
    }

    /// Uniform radial scaling about the center.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.center,
            self.r0 * factor,
            self.cos.iter().map(|a| a * factor).collect(),
            self.sin.iter().map(|b| b * factor).collect(),
        )
    }

    /// Least-squares fit of a truncated Fourier radius to polar samples `(θ, r)`.
    pub fn fit(center: Point, samples: &[(f64, f64)], order: usize) -> Result<Self> {
        let ncoef = 2 * order + 1;
        if samples.len() < ncoef {
            return Err(Error::InvalidGeometry(format!(
                "{} samples cannot determine {ncoef} coefficients",
                samples.len()
            )));
        }
        let a = DMatrix::from_fn(samples.len(), ncoef, |i, j| {
            let th = samples[i].0;
            match j {
                0 => 1.0,
                j if j % 2 == 1 => (((j + 1) / 2) as f64 * th).cos(),
                j => ((j / 2) as f64 * th).sin(),
            }
        });
        let b = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.1));
        let x = a
            .svd(true, true)
            .solve(&b, 1e-14)
            .map_err(|e| Error::InvalidGeometry(format!("Fourier fit failed: {e}")))?;
        let cos = (0..order).map(|k| x[2 * k + 1]).collect();
        let sin = (0..order).map(|k| x[2 * k + 2]).collect();
        Self::new(center, x[0], cos, sin)
    }

    /// Fit a radius function given as a closure, sampled at `4(2K+1)` uniform angles.
    pub fn fit_fn(center: Point, order: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let n = 4 * (2 * order + 1);
        let samples: Vec<_> = (0..n)
            .map(|j| {
                let th = TAU * j as f64 / n as f64;
                (th, f(th))
            })
            .collect();
        Self::fit(center, &samples, order)
    }

    /// `center`, `r0`, `cos`, `sin` lines, decimals at 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "center = {}, {}", fmt17(self.center[0]), fmt17(self.center[1]));
        let _ = writeln!(out, "r0 = {}", fmt17(self.r0));
        let _ = writeln!(out, "cos = {}", join17(&self.cos));
        let _ = writeln!(out, "sin = {}", join17(&self.sin));
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut center = None;
        let mut r0 = None;
        let mut cos = Vec::new();
        let mut sin = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "center" => {
                    let v = parse_list(value)?;
                    if v.len() != 2 {
                        return Err(Error::Parse(format!("center needs 2 values, got {}", v.len())));
                    }
                    center = Some([v[0], v[1]]);
                }
                "r0" => r0 = Some(parse_f64(value)?),
                "cos" => cos = parse_list(value)?,
                "sin" => sin = parse_list(value)?,
                other => return Err(Error::Parse(format!("unknown key `{other}`"))),
            }
        }
        Self::new(
            center.unwrap_or([0.0, 0.0]),
            r0.ok_or_else(|| Error::Parse("missing key `r0`".into()))?,
            cos,
            sin,
        )
    }
}

pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn join17(v: &[f64]) -> String {
    v.iter().map(|x| fmt17(*x)).collect::<Vec<_>>().join(", ")
}

pub(crate) fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("invalid number `{}`", s.trim())))
}

pub(crate) fn parse_list(s: &str) -> Result<Vec<f64>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(parse_f64).collect()
}

/// Golden-section minimization on `[a, b]`.
pub fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Wrap an angle difference into (-π, π].
pub fn wrap_angle(d: f64) -> f64 {
    let mut x = d % TAU;
    if x > PI {
        x -= TAU;
    } else if x <= -PI {
        x += TAU;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ellipse_like() -> StarBoundary {
        StarBoundary::new([0.0, 0.0], 1.0, vec![0.0, 0.1], vec![]).unwrap()
    }

    #[test]
    fn areas() {
        let unit = StarBoundary::circle([0.0, 0.0], 1.0).unwrap();
        assert!((unit.area() - PI).abs() < 1e-14);
        let two = StarBoundary::circle([3.0, -1.0], 2.0).unwrap();
        assert!((two.area() - 4.0 * PI).abs() < 1e-13);
        // ½∫(1 + 0.1 cos 2θ)² dθ = π(1 + 0.01/2)
        assert!((ellipse_like().area() / (PI * 1.005) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn area_matches_parseval() {
        let b = StarBoundary::new([0.3, 0.1], 1.2, vec![0.05, -0.1, 0.02], vec![0.01, 0.0, 0.07]).unwrap();
        let parseval = PI * 1.2f64.powi(2)
            + 0.5 * PI * b.cos.iter().chain(&b.sin).map(|a| a * a).sum::<f64>();
        assert!((b.area() / parseval - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_negative_radius() {
        assert!(StarBoundary::new([0.0, 0.0], 1.0, vec![1.2], vec![]).is_err());
        assert!(StarBoundary::new([0.0, 0.0], -1.0, vec![], vec![]).is_err());
        assert!(StarBoundary::new([0.0, 0.0], 1.0, vec![f64::NAN], vec![]).is_err());
    }

    #[test]
    fn circle_curvature_and_normal() {
        let b = StarBoundary::circle([0.0, 0.0], 2.0).unwrap();
        assert!((b.curvature(0.3) - 0.5).abs() < 1e-14);
        let n = b.normal(PI / 2.0);
        assert!(n[0].abs() < 1e-14 && (n[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn signed_distance_of_circle() {
        let b = StarBoundary::circle([1.0, 0.0], 0.5).unwrap();
        assert!((b.signed_distance([1.0, 0.0]) + 0.5).abs() < 1e-12);
        assert!((b.signed_distance([2.0, 0.0]) - 0.5).abs() < 1e-12);
        assert!((b.signed_distance([1.0, 1.5]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn text_round_trip_is_exact() {
        let b = StarBoundary::new([0.1, 1.0 / 3.0], PI, vec![0.1, 1e-17], vec![2.0f64.sqrt() / 100.0]).unwrap();
        let back = StarBoundary::from_text(&b.to_text()).unwrap();
        assert_eq!(b, back);
    }

    #[test]
    fn rotation_of_coefficients() {
        let b = StarBoundary::new([0.2, 0.0], 1.0, vec![0.1, 0.05], vec![0.0, 0.02]).unwrap();
        let phi = 0.7;
        let r = b.rotated(phi, [0.0, 0.0]);
        for j in 0..16 {
            let th = j as f64 * 0.4;
            let p = b.point(th);
            let (s, c) = phi.sin_cos();
            let q = [c * p[0] - s * p[1], s * p[0] + c * p[1]];
            let q2 = r.point(th + phi);
            assert!(dist(q, q2) < 1e-13);
        }
    }

    #[test]
    fn fit_recovers_coefficients() {
        let b = StarBoundary::new([0.0, 0.0], 1.0, vec![0.1, -0.05, 0.0, 0.01], vec![0.02]).unwrap();
        let f = StarBoundary::fit_fn([0.0, 0.0], 6, |th| b.radius(th)).unwrap();
        for j in 0..50 {
            let th = j as f64 * 0.13;
            assert!((f.radius(th) - b.radius(th)).abs() < 1e-13);
        }
    }
}
