//! Medium configuration: sphere radius, background/inclusion parameters,
//! frequency, and the derived wave numbers.

use crate::specfun::{self, SpecfunError};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MediumError {
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("frequency must be positive, got {0}")]
    NonPositiveFrequency(f64),
    #[error("inclusion parameters need nonnegative imaginary parts: eps_c={0}, mu_c={1}")]
    NegativeLoss(Complex64, Complex64),
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
}

/// Square root branch for wave numbers: principal value, flipped if needed so
/// that Im k >= 0 (decaying waves in lossy media; for real nonnegative
/// products this is the ordinary positive root).
pub fn wave_number(eps: Complex64, mu: Complex64, omega: f64) -> Complex64 {
    let mut s = (eps * mu).sqrt();
    if s.im < 0.0 {
        s = -s;
    }
    omega * s
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MediumConfig {
    pub radius: f64,
    pub eps_m: Complex64,
    pub mu_m: Complex64,
    pub eps_c: Complex64,
    pub mu_c: Complex64,
    pub omega: f64,
    pub k_m: Complex64,
    pub k_c: Complex64,
}

impl MediumConfig {
    pub fn new(
        radius: f64,
        eps_m: Complex64,
        mu_m: Complex64,
        eps_c: Complex64,
        mu_c: Complex64,
        omega: f64,
    ) -> Result<Self, MediumError> {
        if radius <= 0.0 {
            return Err(MediumError::NonPositiveRadius(radius));
        }
        if omega <= 0.0 {
            return Err(MediumError::NonPositiveFrequency(omega));
        }
        if eps_c.im < 0.0 || mu_c.im < 0.0 {
            return Err(MediumError::NegativeLoss(eps_c, mu_c));
        }
        Ok(Self {
            radius,
            eps_m,
            mu_m,
            eps_c,
            mu_c,
            omega,
            k_m: wave_number(eps_m, mu_m, omega),
            k_c: wave_number(eps_c, mu_c, omega),
        })
    }

    /// Unit background, common in the paper's examples.
    pub fn vacuum_background(
        radius: f64,
        eps_c: Complex64,
        mu_c: Complex64,
        omega: f64,
    ) -> Result<Self, MediumError> {
        Self::new(
            radius,
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            eps_c,
            mu_c,
            omega,
        )
    }

    /// Admissibility condition `j_m(kR) != j_{m+2}(kR)` for m <= n_max at both
    /// wave numbers, with a relative margin (absolute margins are meaningless
    /// once j_m underflows at high order).
    pub fn admissibility_margin(&self, n_max: u32) -> Result<f64, MediumError> {
        let mut margin = f64::INFINITY;
        for &k in &[self.k_m, self.k_c] {
            let t = specfun::radial_table(n_max + 2, k * self.radius)?;
            for m in 0..=(n_max as usize) {
                let a = t.j[m];
                let b = t.j[m + 2];
                let scale = a.norm().max(b.norm());
                if scale == 0.0 {
                    return Ok(0.0);
                }
                margin = margin.min((a - b).norm() / scale);
            }
        }
        Ok(margin)
    }

    pub fn is_admissible(&self, n_max: u32) -> bool {
        self.admissibility_margin(n_max)
            .map(|m| m > 1e-12)
            .unwrap_or(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wave_number_branch_has_nonnegative_imaginary_part() {
        // the section-4 inclusion: eps_c mu_c in the second quadrant
        let k = wave_number(Complex64::new(-1.04018, 4e-5), Complex64::new(1.0, 0.0), 5.0);
        assert!(k.im > 0.0);
        assert!((k.im - 5.0 * 1.04018f64.sqrt()).abs() < 1e-4);
        // plain dielectric: positive real root
        let k2 = wave_number(Complex64::new(4.0, 0.0), Complex64::new(1.0, 0.0), 2.0);
        assert!((k2.re - 4.0).abs() < 1e-14 && k2.im == 0.0);
    }

    #[test]
    fn paper_configs_are_admissible() {
        let sec4 = MediumConfig::vacuum_background(
            1.0,
            Complex64::new(-1.04018, 4e-5),
            Complex64::new(1.0, 0.0),
            5.0,
        )
        .unwrap();
        assert!(sec4.is_admissible(80));
        let sec5 = MediumConfig::vacuum_background(
            1.0,
            Complex64::new(-6.55806, 1e-6),
            Complex64::new(1.0, 0.0),
            5.0,
        )
        .unwrap();
        assert!(sec5.is_admissible(80));
    }

    #[test]
    fn loss_sign_is_rejected() {
        assert!(MediumConfig::vacuum_background(
            1.0,
            Complex64::new(2.0, -0.1),
            Complex64::new(1.0, 0.0),
            1.0
        )
        .is_err());
    }
}
