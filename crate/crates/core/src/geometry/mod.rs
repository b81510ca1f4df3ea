//! Exact and sampled representations of the core/outer pair, reflections
//! across sweep lines and normal deformation of the outer boundary.

mod deform;
pub(crate) mod reflect;
mod star;

pub use deform::{deform_boundary, deform_boundary_fn, DeformOptions, DEFAULT_FIT_ORDER};
pub use reflect::{
    reflect_point, reflected_cap, reflected_cap_with, signed_gap, BoundaryTable, GapReport,
    HalfplaneSweepFrame, ReflectedCap, DEFAULT_CAP_RESOLUTION,
};
pub use star::{fmt17, golden_min, wrap_angle, StarBoundary};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[inline]
pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn scale(a: Point, s: f64) -> Point {
    [a[0] * s, a[1] * s]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

/// Distance from `p` to the segment `[a, b]` and the closest point.
pub fn segment_distance(p: Point, a: Point, b: Point) -> (f64, Point) {
    let ab = sub(b, a);
    let l2 = dot(ab, ab);
    let t = if l2 > 0.0 { (dot(sub(p, a), ab) / l2).clamp(0.0, 1.0) } else { 0.0 };
    let q = add(a, scale(ab, t));
    (dist(p, q), q)
}

/// Rotate `p` by `phi` about `pivot`.
pub fn rotate_point(p: Point, phi: f64, pivot: Point) -> Point {
    let (s, c) = phi.sin_cos();
    let d = sub(p, pivot);
    [pivot[0] + c * d[0] - s * d[1], pivot[1] + s * d[0] + c * d[1]]
}

/// Default minimum core-to-boundary gap as a fraction of the outer `r0`.
pub const DEFAULT_GAP_FRACTION: f64 = 0.05;

/// Outer domain, its core components and the core conductivity.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoPhaseConfig {
    outer: StarBoundary,
    cores: Vec<StarBoundary>,
    sigma_c: f64,
}

impl TwoPhaseConfig {
    pub fn new(outer: StarBoundary, cores: Vec<StarBoundary>, sigma_c: f64) -> Result<Self> {
        let gap = DEFAULT_GAP_FRACTION * outer.r0();
        Self::with_gap_min(outer, cores, sigma_c, gap)
    }

    pub fn with_gap_min(
        outer: StarBoundary,
        cores: Vec<StarBoundary>,
        sigma_c: f64,
        gap_min: f64,
    ) -> Result<Self> {
        if !(sigma_c.is_finite() && sigma_c > 0.0) {
            return Err(Error::InvalidGeometry(format!("sigma_c must be positive, got {sigma_c}")));
        }
        if (sigma_c - 1.0).abs() < 1e-9 {
            return Err(Error::InvalidGeometry("sigma_c must differ from 1".into()));
        }
        Self::build(outer, cores, sigma_c, gap_min)
    }

    /// Same geometry with `sigma_c` unrestricted (σ_c = 1 allowed); used for
    /// one-phase reference runs and the two-conductivity experiments.
    pub fn with_conductivity(&self, sigma_c: f64) -> Result<Self> {
        if !(sigma_c.is_finite() && sigma_c > 0.0) {
            return Err(Error::InvalidGeometry(format!("sigma_c must be positive, got {sigma_c}")));
        }
        Ok(TwoPhaseConfig { sigma_c, ..self.clone() })
    }

    /// One-phase domain (σ ≡ 1) with the given cores kept as tags only.
    pub fn one_phase(outer: StarBoundary, cores: Vec<StarBoundary>) -> Result<Self> {
        let gap = DEFAULT_GAP_FRACTION * outer.r0();
        Self::build(outer, cores, 1.0, gap)
    }

    fn build(outer: StarBoundary, cores: Vec<StarBoundary>, sigma_c: f64, gap_min: f64) -> Result<Self> {
        if cores.is_empty() {
            return Err(Error::InvalidGeometry("at least one core component is required".into()));
        }
        const SAMPLES: usize = 512;
        for (i, core) in cores.iter().enumerate() {
            let inner_gap = (0..SAMPLES)
                .map(|j| {
                    let p = core.point(std::f64::consts::TAU * j as f64 / SAMPLES as f64);
                    -outer.signed_distance(p)
                })
                .fold(f64::INFINITY, f64::min);
            if inner_gap < gap_min {
                return Err(Error::InvalidGeometry(format!(
                    "core {i} is within {inner_gap:.3e} of the outer boundary (gap_min {gap_min:.3e})"
                )));
            }
        }
        for i in 0..cores.len() {
            for j in i + 1..cores.len() {
                let sep = (0..SAMPLES)
                    .map(|s| {
                        let p = cores[i].point(std::f64::consts::TAU * s as f64 / SAMPLES as f64);
                        cores[j].signed_distance(p)
                    })
                    .fold(f64::INFINITY, f64::min);
                if sep <= 0.0 || cores[i].contains(cores[j].center()) || cores[j].contains(cores[i].center()) {
                    return Err(Error::InvalidGeometry(format!("cores {i} and {j} overlap")));
                }
            }
        }
        Ok(TwoPhaseConfig { outer, cores, sigma_c })
    }

    /// Concentric disks of radii `rho < big_r` centered at the origin.
    pub fn concentric(rho: f64, big_r: f64, sigma_c: f64) -> Result<Self> {
        let outer = StarBoundary::circle([0.0, 0.0], big_r)?;
        let core = StarBoundary::circle([0.0, 0.0], rho)?;
        TwoPhaseConfig::one_phase(outer, vec![core])?.with_conductivity(sigma_c)
    }

    pub fn outer(&self) -> &StarBoundary {
        &self.outer
    }

    pub fn cores(&self) -> &[StarBoundary] {
        &self.cores
    }

    pub fn sigma_c(&self) -> f64 {
        self.sigma_c
    }

    /// Conductivity at `p`.
    pub fn sigma_at(&self, p: Point) -> f64 {
        if self.cores.iter().any(|c| c.contains(p)) {
            self.sigma_c
        } else {
            1.0
        }
    }

    pub fn core_area(&self) -> f64 {
        self.cores.iter().map(StarBoundary::area).sum()
    }

    pub fn with_outer(&self, outer: StarBoundary) -> Result<Self> {
        let gap = DEFAULT_GAP_FRACTION * outer.r0();
        Self::build(outer, self.cores.clone(), self.sigma_c, gap)
    }

    pub fn rotated(&self, phi: f64, pivot: Point) -> Self {
        TwoPhaseConfig {
            outer: self.outer.rotated(phi, pivot),
            cores: self.cores.iter().map(|c| c.rotated(phi, pivot)).collect(),
            sigma_c: self.sigma_c,
        }
    }

    pub fn translated(&self, v: Point) -> Self {
        TwoPhaseConfig {
            outer: self.outer.translated(v),
            cores: self.cores.iter().map(|c| c.translated(v)).collect(),
            sigma_c: self.sigma_c,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let outer = StarBoundary::circle([0.0, 0.0], 1.0).unwrap();
        let core = StarBoundary::circle([0.0, 0.0], 0.5).unwrap();
        assert!(TwoPhaseConfig::new(outer.clone(), vec![core.clone()], 2.0).is_ok());
        assert!(TwoPhaseConfig::new(outer.clone(), vec![core.clone()], 1.0).is_err());
        assert!(TwoPhaseConfig::new(outer.clone(), vec![core.clone()], -2.0).is_err());
        assert!(TwoPhaseConfig::new(outer.clone(), vec![], 2.0).is_err());
        // too close to the boundary: gap 0.02 < 0.05
        let near = StarBoundary::circle([0.48, 0.0], 0.5).unwrap();
        assert!(TwoPhaseConfig::new(outer.clone(), vec![near], 2.0).is_err());
        let a = StarBoundary::circle([0.3, 0.0], 0.2).unwrap();
        let b = StarBoundary::circle([-0.05, 0.0], 0.2).unwrap();
        assert!(TwoPhaseConfig::new(outer.clone(), vec![a.clone(), b], 2.0).is_err());
        let c = StarBoundary::circle([-0.3, 0.0], 0.2).unwrap();
        assert!(TwoPhaseConfig::new(outer, vec![a, c], 2.0).is_ok());
    }

    #[test]
    fn sigma_lookup() {
        let cfg = TwoPhaseConfig::concentric(0.5, 1.0, 3.0).unwrap();
        assert_eq!(cfg.sigma_at([0.1, 0.1]), 3.0);
        assert_eq!(cfg.sigma_at([0.7, 0.0]), 1.0);
    }
}
