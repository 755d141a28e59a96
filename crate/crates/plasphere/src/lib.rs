//! Spectral machinery for time-harmonic electromagnetic scattering from a
//! spherical plasmonic inclusion, beyond the quasi-static regime.
//!
//! The scattering problem is reformulated as a boundary integral system
//! `(I + K) Phi = F` on the sphere. Within spherical geometry the operator
//! block-diagonalizes over vector spherical harmonics into 2x2 mode matrices
//! per degree, whose eigenvalues `tau` control everything observable:
//! near-zero eigenvalues excited by the source produce surface plasmon
//! resonance, uniformly large ones produce invisibility cloaking.
//!
//! Module map:
//! - [`specfun`]: complex-argument spherical Bessel/Hankel functions.
//! - [`harmonics`]: spherical harmonics, tangential bases, sphere quadrature,
//!   projection of tangential fields.
//! - [`spectrum`]: the closed-form eigensystem (lambda, chi, pi/sigma, m/l,
//!   mode matrices, tau exact and asymptotic).
//! - [`scattering`]: incident fields, the spectral solve, and off-surface
//!   layer-potential field evaluation.
//! - [`design`]: Drude dispersion maps, resonance/cloaking regime checks,
//!   parameter scans.
//! - [`oracle`]: independent quadrature-and-jump verification of the closed
//!   forms (used by tests and the `verify` command, never by the solve path).
//! - [`io`]: CSV/JSON export of spectra, scans, field grids and verify
//!   reports.

pub mod complex3;
pub mod design;
pub mod harmonics;
pub mod io;
pub mod medium;
pub mod oracle;
pub mod scattering;
pub mod specfun;
pub mod spectrum;

pub use medium::MediumConfig;
pub use num_complex::Complex64;

/// Numerical knobs shared across the solve and evaluation paths.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    /// Truncation degree for spectral solves.
    pub n_max: u32,
    /// Polar quadrature order for trace projection (azimuthal count is twice
    /// this). Defaults to `n_max + 8`.
    pub quad_order: Option<usize>,
    /// Off-surface evaluation guard, as a fraction of the radius.
    pub delta_min: f64,
    /// Operational threshold for the paper's ">> 1" conditions.
    pub theta_big: f64,
    /// Operational threshold for the paper's "<< 1" conditions.
    pub theta_small: f64,
    /// Relative per-degree source-norm floor below which solve_densities
    /// drops a degree (projection noise control).
    pub source_floor: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            n_max: 60,
            quad_order: None,
            delta_min: 0.02,
            theta_big: 10.0,
            theta_small: 1e-2,
            source_floor: 1e-12,
        }
    }
}

impl Numerics {
    pub fn projection_order(&self) -> usize {
        self.quad_order.unwrap_or(self.n_max as usize + 8)
    }
}
