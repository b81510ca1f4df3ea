//! Closed-form radial solutions: concentric two-phase balls, annuli and the
//! harmonic modes of the disk Neumann-to-Dirichlet map.

use crate::error::{Error, Result};

/// Concentric balls `B_ρ ⊂ B_R` in dimension `n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialTwoPhase {
    pub rho: f64,
    pub big_r: f64,
    pub sigma_c: f64,
    pub n: u32,
}

impl RadialTwoPhase {
    pub fn new(rho: f64, big_r: f64, sigma_c: f64, n: u32) -> Result<Self> {
        if !(rho > 0.0 && rho < big_r && big_r.is_finite()) {
            return Err(Error::InvalidGeometry(format!("need 0 < rho < R, got rho={rho}, R={big_r}")));
        }
        if !(sigma_c > 0.0 && sigma_c.is_finite()) {
            return Err(Error::InvalidGeometry(format!("sigma_c must be positive, got {sigma_c}")));
        }
        if n < 2 {
            return Err(Error::InvalidGeometry(format!("dimension must be at least 2, got {n}")));
        }
        Ok(RadialTwoPhase { rho, big_r, sigma_c, n })
    }

    pub fn planar(rho: f64, big_r: f64, sigma_c: f64) -> Result<Self> {
        Self::new(rho, big_r, sigma_c, 2)
    }

    fn nf(&self) -> f64 {
        self.n as f64
    }

    /// Torsion function at radius `r`; integrates `σ(r)U′(r) = −r/N` inward from `U(R) = 0`.
    pub fn value(&self, r: f64) -> Result<f64> {
        if !(0.0..=self.big_r).contains(&r) {
            return Err(Error::Precondition(format!("radius {r} outside [0, {}]", self.big_r)));
        }
        let n2 = 2.0 * self.nf();
        Ok(if r >= self.rho {
            (self.big_r * self.big_r - r * r) / n2
        } else {
            (self.big_r * self.big_r - self.rho * self.rho) / n2 + (self.rho * self.rho - r * r) / (n2 * self.sigma_c)
        })
    }

    /// `U′(r)`, taken from the core side at `r = ρ`.
    pub fn derivative(&self, r: f64) -> f64 {
        let s = if r <= self.rho { self.sigma_c } else { 1.0 };
        -r / (self.nf() * s)
    }

    /// Constant boundary flux `∂_n u = −R/N`.
    pub fn flux(&self) -> f64 {
        -self.big_r / self.nf()
    }

    /// Torsional rigidity `∫ u` for `N = 2`.
    pub fn rigidity(&self) -> f64 {
        assert_eq!(self.n, 2, "rigidity is only provided in the plane");
        let (r, p, s) = (self.big_r, self.rho, self.sigma_c);
        // ∫ u = ∫ σ|∇u|² = 2π ∫ r³/(4σ(r)) dr
        std::f64::consts::PI / 8.0 * ((r.powi(4) - p.powi(4)) + p.powi(4) / s)
    }
}

pub fn radial_torsion_value(cfg: &RadialTwoPhase, r: f64) -> Result<f64> {
    cfg.value(r)
}

pub fn radial_flux(cfg: &RadialTwoPhase) -> f64 {
    cfg.flux()
}

/// Annulus `{R₁ < |x| < R₂}` in dimension `n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnnulusCandidate {
    pub r1: f64,
    pub r2: f64,
    pub n: u32,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnnulusFluxes {
    /// `|∂_n u|` on `|x| = R₁`.
    pub inner: f64,
    /// `|∂_n u|` on `|x| = R₂`.
    pub outer: f64,
    pub mismatch: f64,
}

impl AnnulusCandidate {
    pub fn new(r1: f64, r2: f64, n: u32) -> Result<Self> {
        if !(r1 > 0.0 && r1 < r2 && r2.is_finite()) {
            return Err(Error::InvalidGeometry(format!("need 0 < R1 < R2, got R1={r1}, R2={r2}")));
        }
        if n < 2 {
            return Err(Error::InvalidGeometry(format!("dimension must be at least 2, got {n}")));
        }
        Ok(AnnulusCandidate { r1, r2, n })
    }

    /// Coefficient `A` of the homogeneous part: `U = −r²/(2N) + A·ln r + B`
    /// for `N = 2`, `U = −r²/(2N) + A·r^{2−N} + B` otherwise.
    pub fn coefficient(&self) -> f64 {
        let nf = self.n as f64;
        let quad = (self.r2 * self.r2 - self.r1 * self.r1) / (2.0 * nf);
        if self.n == 2 {
            quad / ((self.r2 - self.r1) / self.r1).ln_1p()
        } else {
            quad / (self.r2.powf(2.0 - nf) - self.r1.powf(2.0 - nf))
        }
    }

    fn homogeneous(&self, r: f64) -> f64 {
        if self.n == 2 {
            r.ln()
        } else {
            r.powf(2.0 - self.n as f64)
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        let nf = self.n as f64;
        let a = self.coefficient();
        let b = self.r1 * self.r1 / (2.0 * nf) - a * self.homogeneous(self.r1);
        -r * r / (2.0 * nf) + a * self.homogeneous(r) + b
    }

    pub fn derivative(&self, r: f64) -> f64 {
        let nf = self.n as f64;
        let a = self.coefficient();
        let dh = if self.n == 2 { 1.0 / r } else { (2.0 - nf) * r.powf(1.0 - nf) };
        -r / nf + a * dh
    }

    pub fn fluxes(&self) -> AnnulusFluxes {
        // Outward normal is −e_r on the inner circle.
        let inner = self.derivative(self.r1).abs();
        let outer = self.derivative(self.r2).abs();
        AnnulusFluxes { inner, outer, mismatch: (inner - outer).abs() }
    }
}

pub fn annulus_flux_mismatch(cand: &AnnulusCandidate) -> AnnulusFluxes {
    cand.fluxes()
}

/// Eigenvalue of the disk Neumann-to-Dirichlet map on `cos kθ`, `sin kθ`
/// for a concentric core of radius `ρ` in the unit disk.
pub fn disk_ntd_eigenvalue(k: u32, rho: f64, sigma_c: f64) -> f64 {
    let mu = (sigma_c - 1.0) / (sigma_c + 1.0);
    let q = mu * rho.powi(2 * k as i32);
    (1.0 - q) / (k as f64 * (1.0 + q))
}
