//! Incident fields, their boundary traces and eigenbasis coefficients, the
//! spectral solve for the densities (psi, phi), and evaluation of the
//! scattered/interior/total fields by off-surface quadrature of the layer
//! potentials.

use crate::complex3::{real_norm, real_scale, real_sub, CVec3, Real3, CZERO3};
use crate::harmonics::{
    self, coeff_index, coeff_len, HarmonicIndex, SphereQuadrature, TangentialCoeffs,
};
use crate::medium::MediumConfig;
use crate::spectrum::{EigenPair, SpectrumRecord};
use crate::Numerics;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScatteringError {
    #[error("vortex field singular point: |x| = {0:.3e}")]
    SingularPoint(f64),
    #[error("spectral multipole sources define a trace, not a physical field")]
    TraceOnlySource,
    #[error("evaluation point inside the excluded band: |r - R|/R = {0:.3e} < {1:.3e}")]
    TooCloseToSurface(f64, f64),
    #[error("defective eigenpair at degree {0} carries source energy; solve refused")]
    DefectiveMode(u32),
    #[error("near-singular mode (|tau| = {tau_abs:.3e} < 1e-14) at degree {degree} channel {channel}; resonant division refused")]
    NearSingularMode {
        degree: u32,
        channel: usize,
        tau_abs: f64,
    },
    #[error(transparent)]
    Harmonics(#[from] harmonics::HarmonicsError),
    #[error(transparent)]
    Spectrum(#[from] crate::spectrum::SpectrumError),
}

// ---------------------------------------------------------------------------
// Incident fields
// ---------------------------------------------------------------------------

/// Supported incident excitations. The spectral multipole is a trace-space
/// diagnostic source: its boundary trace is amp * Xi_{channel, n, m}; no
/// physical incident field realizes an arbitrary eigen-trace, so it has no
/// point evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum IncidentField {
    PlaneWave {
        /// Complex amplitude vector; must be orthogonal to the direction.
        amplitude: [Complex64; 3],
        direction: Real3,
    },
    SpectralMultipole {
        channel: usize,
        n: u32,
        m: i32,
        amplitude: Complex64,
    },
    /// The closed-form vortex beam (a regular TE multipole of degree 1):
    /// E = (amp / (omega r)) j_1(k_m r) (y, -x, 0).
    ClosedFormVortex { amplitude: f64 },
}

impl IncidentField {
    pub fn plane_wave(amplitude: [Complex64; 3], direction: Real3) -> Self {
        let a = CVec3::new(amplitude[0], amplitude[1], amplitude[2]);
        let d = real_norm(direction);
        assert!(d > 0.0, "zero direction");
        let dir = real_scale(direction, 1.0 / d);
        assert!(
            a.dot_real(dir).norm() < 1e-12 * a.norm(),
            "plane-wave amplitude must be transverse"
        );
        Self::PlaneWave {
            amplitude,
            direction: dir,
        }
    }

    /// The resonance-section plane wave: amplitude 4 (1, -1, 0)
    /// against the direction (1, 1, 0)/sqrt(2).
    pub fn paper_plane_wave() -> Self {
        Self::plane_wave(
            [
                Complex64::new(4.0, 0.0),
                Complex64::new(-4.0, 0.0),
                Complex64::new(0.0, 0.0),
            ],
            [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2, 0.0],
        )
    }

    /// The cloaking-section vortex with its printed 100 amplitude.
    pub fn paper_vortex() -> Self {
        Self::ClosedFormVortex { amplitude: 100.0 }
    }
}

/// E and H of the incident field at a point.
pub fn incident_eval(
    field: &IncidentField,
    x: Real3,
    cfg: &MediumConfig,
) -> Result<(CVec3, CVec3), ScatteringError> {
    match field {
        IncidentField::PlaneWave {
            amplitude,
            direction,
        } => {
            let a = CVec3::new(amplitude[0], amplitude[1], amplitude[2]);
            let phase = (Complex64::new(0.0, 1.0)
                * cfg.k_m
                * (direction[0] * x[0] + direction[1] * x[1] + direction[2] * x[2]))
                .exp();
            let e = a.scale(phase);
            let h = CVec3::from_real(*direction)
                .cross(a)
                .scale(phase * cfg.k_m / (cfg.omega * cfg.mu_m));
            Ok((e, h))
        }
        IncidentField::SpectralMultipole { .. } => Err(ScatteringError::TraceOnlySource),
        IncidentField::ClosedFormVortex { amplitude } => vortex_eval(*amplitude, x, cfg),
    }
}

fn vortex_eval(amp: f64, x: Real3, cfg: &MediumConfig) -> Result<(CVec3, CVec3), ScatteringError> {
    let r = real_norm(x);
    let k = cfg.k_m;
    let prefac = cfg.k_m / (Complex64::new(0.0, 1.0) * cfg.omega * cfg.mu_m);
    let a_m = -(amp / cfg.omega) * (4.0 * std::f64::consts::PI / 3.0).sqrt();
    if r < 1e-10 {
        // removable limit: the tangential prefactor vanishes; H tends to the
        // constant N-wave value (2/3) sqrt(3/4pi) z_hat
        let h = CVec3::new(
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            prefac * a_m * (2.0 / 3.0) * (3.0 / (4.0 * std::f64::consts::PI)).sqrt(),
        );
        return Ok((CZERO3, h));
    }
    let z = k * r;
    // series forms below |z| = 1e-2 dodge the sin/cos cancellation in j_1
    let (j0, j1) = if z.norm() < 1e-2 {
        let z2 = z * z;
        (
            1.0 - z2 / 6.0 + z2 * z2 / 120.0,
            z / 3.0 - z * z2 / 30.0 + z * z2 * z2 / 840.0,
        )
    } else {
        (z.sin() / z, z.sin() / (z * z) - z.cos() / z)
    };
    let pref = amp / (cfg.omega * r) * j1;
    let e = CVec3::new(pref * x[1], -pref * x[0], Complex64::new(0.0, 0.0));
    // H = (k / (i omega mu)) * A_M * N_{1,0}(k; x)
    let ct = x[2] / r;
    let st2 = (1.0 - ct * ct).max(0.0);
    let st = st2.sqrt();
    let phi = x[1].atan2(x[0]);
    let rhat = [x[0] / r, x[1] / r, x[2] / r];
    let theta_hat = [ct * phi.cos(), ct * phi.sin(), -st];
    let y10 = (3.0 / (4.0 * std::f64::consts::PI)).sqrt() * ct;
    let grad_y10 = -(3.0 / (4.0 * std::f64::consts::PI)).sqrt() * st;
    let dz = j0 - j1 / z; // (z j_1)'(z)/z
    let n_wave = CVec3::from_real(rhat)
        .scale(2.0 * (j1 / z) * y10)
        .add(CVec3::from_real(theta_hat).scale(dz * grad_y10));
    let h = n_wave.scale(prefac * a_m);
    Ok((e, h))
}

// ---------------------------------------------------------------------------
// Trace coefficients and the spectral solve
// ---------------------------------------------------------------------------

/// Coefficients f_{i,n,m} of the incident trace in the eigenbasis, flat over
/// (n, m) with four channels each, plus the projection residual.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SourceCoefficients {
    pub n_max: u32,
    /// Indexed by [harmonics::coeff_index(n, m)][channel-1].
    pub f: Vec<[Complex64; 4]>,
    /// Relative L2 residual of the trace reconstruction.
    pub residual: f64,
    pub truncation_warning: bool,
}

impl SourceCoefficients {
    pub fn get(&self, channel: usize, n: u32, m: i32) -> Complex64 {
        self.f[coeff_index(n, m)][channel - 1]
    }

    /// Per-degree L2 norm of the coefficients (for noise truncation).
    pub fn degree_norm(&self, n: u32) -> f64 {
        let mut acc = 0.0;
        for m in -(n as i32)..=(n as i32) {
            for ch in 0..4 {
                acc += self.f[coeff_index(n, m)][ch].norm_sqr();
            }
        }
        acc.sqrt()
    }
}

/// Eigen data needed by the solve and synthesis, per degree.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenTable {
    pub n_max: u32,
    /// Channels [1, 2, 3, 4] per degree (index n-1).
    pub pairs: Vec<[EigenPair; 4]>,
    pub defective: Vec<[bool; 2]>,
}

impl EigenTable {
    pub fn from_records(records: &[SpectrumRecord]) -> Self {
        Self {
            n_max: records.len() as u32,
            pairs: records.iter().map(|r| r.taus.pairs).collect(),
            defective: records.iter().map(|r| r.taus.defective).collect(),
        }
    }
}

/// Sample the trace rows F = (nu x E^i, i omega nu x H^i) at the quadrature
/// nodes of the projection grid.
fn trace_rows(
    field: &IncidentField,
    cfg: &MediumConfig,
    quad: &SphereQuadrature,
    eigen: &EigenTable,
) -> Result<(Vec<CVec3>, Vec<CVec3>), ScatteringError> {
    match field {
        IncidentField::SpectralMultipole {
            channel,
            n,
            m,
            amplitude,
        } => {
            assert!((1..=4).contains(channel), "channel must be 1..=4");
            let idx = HarmonicIndex::new(*n, *m)?;
            let pair = eigen.pairs[(*n - 1) as usize][*channel - 1];
            // channels 1/2: psi along cross, phi along grad; 3/4 swapped
            let mut psi = TangentialCoeffs::zero(eigen.n_max);
            let mut phi = TangentialCoeffs::zero(eigen.n_max);
            let ci = coeff_index(idx.n, idx.m);
            if *channel <= 2 {
                psi.c_cross[ci] = *amplitude * pair.v_psi;
                phi.c_grad[ci] = *amplitude * pair.v_phi;
            } else {
                psi.c_grad[ci] = *amplitude * pair.v_psi;
                phi.c_cross[ci] = *amplitude * pair.v_phi;
            }
            Ok((
                harmonics::synthesize_tangential(&psi, quad),
                harmonics::synthesize_tangential(&phi, quad),
            ))
        }
        _ => {
            let iw = Complex64::new(0.0, cfg.omega);
            let mut row1 = Vec::with_capacity(quad.len());
            let mut row2 = Vec::with_capacity(quad.len());
            for node in &quad.nodes {
                let x = real_scale(*node, cfg.radius);
                let (e, h) = incident_eval(field, x, cfg)?;
                row1.push(CVec3::from_real(*node).cross(e));
                row2.push(CVec3::from_real(*node).cross(h).scale(iw));
            }
            Ok((row1, row2))
        }
    }
}

/// Project the incident trace onto the eigenbasis: per (n, m), channels 1/2
/// solve the 2x2 system on (row1 cross, row2 grad) and channels 3/4 the
/// swapped one.
pub fn incident_trace_coeffs(
    field: &IncidentField,
    cfg: &MediumConfig,
    eigen: &EigenTable,
    numerics: &Numerics,
) -> Result<SourceCoefficients, ScatteringError> {
    let n_max = eigen.n_max;
    let quad = SphereQuadrature::new(numerics.projection_order(), cfg.radius);
    let (row1, row2) = trace_rows(field, cfg, &quad, eigen)?;
    let p1 = harmonics::project_tangential(&row1, &quad, n_max)?;
    let p2 = harmonics::project_tangential(&row2, &quad, n_max)?;

    let mut f = vec![[Complex64::new(0.0, 0.0); 4]; coeff_len(n_max)];
    for n in 1..=n_max {
        let pairs = &eigen.pairs[(n - 1) as usize];
        let defective = eigen.defective[(n - 1) as usize];
        for m in -(n as i32)..=(n as i32) {
            let ci = coeff_index(n, m);
            // channels 1/2
            let rhs12 = (p1.coeffs.c_cross[ci], p2.coeffs.c_grad[ci]);
            f[ci][0] = Complex64::new(0.0, 0.0);
            f[ci][1] = Complex64::new(0.0, 0.0);
            let sol = solve_pair(&pairs[0], &pairs[1], rhs12);
            match sol {
                Some((f1, f2)) => {
                    f[ci][0] = f1;
                    f[ci][1] = f2;
                }
                None => {
                    if rhs_significant(rhs12, &p1, &p2) {
                        if defective[0] {
                            return Err(ScatteringError::DefectiveMode(n));
                        }
                        return Err(ScatteringError::DefectiveMode(n));
                    }
                }
            }
            // channels 3/4
            let rhs34 = (p1.coeffs.c_grad[ci], p2.coeffs.c_cross[ci]);
            let sol = solve_pair(&pairs[2], &pairs[3], rhs34);
            match sol {
                Some((f3, f4)) => {
                    f[ci][2] = f3;
                    f[ci][3] = f4;
                }
                None => {
                    if rhs_significant(rhs34, &p1, &p2) {
                        return Err(ScatteringError::DefectiveMode(n));
                    }
                }
            }
        }
    }
    let norm1: f64 = row_norm(&p1);
    let norm2: f64 = row_norm(&p2);
    let residual = if norm1 + norm2 > 0.0 {
        ((p1.residual * p1.residual * norm1 + p2.residual * p2.residual * norm2)
            / (norm1 + norm2))
            .sqrt()
    } else {
        0.0
    };
    Ok(SourceCoefficients {
        n_max,
        f,
        residual,
        truncation_warning: residual > 1e-6,
    })
}

fn row_norm(p: &harmonics::ProjectionOutcome) -> f64 {
    p.coeffs
        .c_grad
        .iter()
        .chain(p.coeffs.c_cross.iter())
        .map(|c| c.norm_sqr())
        .sum()
}

fn rhs_significant(
    rhs: (Complex64, Complex64),
    p1: &harmonics::ProjectionOutcome,
    p2: &harmonics::ProjectionOutcome,
) -> bool {
    let scale = (row_norm(p1) + row_norm(p2)).sqrt();
    (rhs.0.norm_sqr() + rhs.1.norm_sqr()).sqrt() > 1e-11 * scale.max(1e-300)
}

/// Solve [v1 v2] (f1, f2)^T = rhs for eigenvector columns; None when the
/// columns are (numerically) parallel.
fn solve_pair(
    a: &EigenPair,
    b: &EigenPair,
    rhs: (Complex64, Complex64),
) -> Option<(Complex64, Complex64)> {
    let det = a.v_psi * b.v_phi - a.v_phi * b.v_psi;
    // eigenvectors are max-normalized, so the determinant is an honest
    // measure of independence
    if det.norm() < 1e-12 {
        return None;
    }
    let f1 = (rhs.0 * b.v_phi - rhs.1 * b.v_psi) / det;
    let f2 = (rhs.1 * a.v_psi - rhs.0 * a.v_phi) / det;
    Some((f1, f2))
}

/// The density solution Phi = sum (f/tau) Xi, with diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensitySolution {
    pub n_max: u32,
    /// d = f/tau per [coeff_index][channel-1].
    pub d: Vec<[Complex64; 4]>,
    pub eigen: EigenTable,
    /// Smallest |tau| that was actually divided by.
    pub min_tau_used: f64,
    /// Largest amplification |1/tau| over the used modes.
    pub max_amplification: f64,
    /// Degrees dropped by the relative source-norm floor.
    pub dropped_degrees: Vec<u32>,
}

/// Coefficient-wise division by the eigenvalues, with the spectral noise
/// floor: degrees whose source norm is below `source_floor` times the peak
/// are dropped (reported), so projection noise never meets the h_n growth.
pub fn solve_densities(
    src: &SourceCoefficients,
    eigen: &EigenTable,
    numerics: &Numerics,
) -> Result<DensitySolution, ScatteringError> {
    assert_eq!(src.n_max, eigen.n_max);
    let n_max = src.n_max;
    let peak = (1..=n_max)
        .map(|n| src.degree_norm(n))
        .fold(0.0f64, f64::max);
    let floor = numerics.source_floor * peak;
    let mut d = vec![[Complex64::new(0.0, 0.0); 4]; coeff_len(n_max)];
    let mut dropped = Vec::new();
    let mut min_tau = f64::INFINITY;
    let mut max_amp = 0.0f64;
    for n in 1..=n_max {
        if src.degree_norm(n) < floor {
            dropped.push(n);
            continue;
        }
        let pairs = &eigen.pairs[(n - 1) as usize];
        for m in -(n as i32)..=(n as i32) {
            let ci = coeff_index(n, m);
            for ch in 0..4 {
                let fv = src.f[ci][ch];
                // the floor applies per coefficient too: projection noise in
                // an otherwise-excited degree must not reach the division
                if fv.norm() <= floor {
                    continue;
                }
                let tau = pairs[ch].tau;
                if tau.norm() < 1e-14 {
                    return Err(ScatteringError::NearSingularMode {
                        degree: n,
                        channel: ch + 1,
                        tau_abs: tau.norm(),
                    });
                }
                d[ci][ch] = fv / tau;
                min_tau = min_tau.min(tau.norm());
                max_amp = max_amp.max(1.0 / tau.norm());
            }
        }
    }
    Ok(DensitySolution {
        n_max,
        d,
        eigen: eigen.clone(),
        min_tau_used: min_tau,
        max_amplification: max_amp,
        dropped_degrees: dropped,
    })
}

impl DensitySolution {
    /// Pack the density into (psi, phi) tangential coefficient sets:
    /// psi = sum_ch12 d v_psi (cross) + sum_ch34 d v_psi (grad), phi swapped.
    pub fn to_tangential(&self) -> (TangentialCoeffs, TangentialCoeffs) {
        let mut psi = TangentialCoeffs::zero(self.n_max);
        let mut phi = TangentialCoeffs::zero(self.n_max);
        for n in 1..=self.n_max {
            let pairs = &self.eigen.pairs[(n - 1) as usize];
            for m in -(n as i32)..=(n as i32) {
                let ci = coeff_index(n, m);
                for ch in 0..2 {
                    let dv = self.d[ci][ch];
                    psi.c_cross[ci] += dv * pairs[ch].v_psi;
                    phi.c_grad[ci] += dv * pairs[ch].v_phi;
                }
                for ch in 2..4 {
                    let dv = self.d[ci][ch];
                    psi.c_grad[ci] += dv * pairs[ch].v_psi;
                    phi.c_cross[ci] += dv * pairs[ch].v_phi;
                }
            }
        }
        (psi, phi)
    }

    pub fn is_zero(&self) -> bool {
        self.d
            .iter()
            .all(|row| row.iter().all(|c| c.norm_sqr() == 0.0))
    }

    /// Largest degree carrying a nonzero coefficient (drives quadrature
    /// sizing for field evaluation).
    pub fn effective_n_max(&self) -> u32 {
        for n in (1..=self.n_max).rev() {
            for m in -(n as i32)..=(n as i32) {
                if self.d[coeff_index(n, m)].iter().any(|c| c.norm_sqr() > 0.0) {
                    return n;
                }
            }
        }
        0
    }
}

// ---------------------------------------------------------------------------
// Layer-potential field evaluation
// ---------------------------------------------------------------------------

/// Quadrature order for evaluation at relative distance `dist` from the
/// surface, for densities with harmonic content up to n_eff.
pub fn eval_order(dist_rel: f64, n_eff: u32) -> usize {
    let geometric = (18.4 / (2.0 * (1.0 + dist_rel.max(1e-6)).ln())).ceil() as usize;
    (geometric + n_eff as usize / 2 + 8).clamp(n_eff as usize + 8, 700)
}

/// Node-sampled densities ready for kernel summation at one quadrature order.
pub struct LayerEvaluator {
    quad: SphereQuadrature,
    psi: Vec<CVec3>,
    phi: Vec<CVec3>,
    k: Complex64,
    mu: Complex64,
    omega: f64,
}

impl LayerEvaluator {
    pub fn new(
        density: &DensitySolution,
        cfg: &MediumConfig,
        interior: bool,
        order: usize,
    ) -> Self {
        let (psi_c, phi_c) = density.to_tangential();
        let quad = SphereQuadrature::new(order, cfg.radius);
        let psi = harmonics::synthesize_tangential(&psi_c, &quad);
        let phi = harmonics::synthesize_tangential(&phi_c, &quad);
        let (k, mu) = if interior {
            (cfg.k_c, cfg.mu_c)
        } else {
            (cfg.k_m, cfg.mu_m)
        };
        Self {
            quad,
            psi,
            phi,
            k,
            mu,
            omega: cfg.omega,
        }
    }

    /// E and H of the layer representation at one off-surface point:
    /// E = mu curl A[psi] + curlcurl A[phi],
    /// H = (1/(i omega)) (grad div + k^2) A[psi] + (k^2/(i omega mu)) curl A[phi].
    pub fn eval(&self, x: Real3) -> (CVec3, CVec3) {
        let k = self.k;
        let ik = Complex64::new(0.0, 1.0) * k;
        let k2 = k * k;
        let mut a_psi = CZERO3;
        let mut a_phi = CZERO3;
        let mut c_psi = CZERO3;
        let mut c_phi = CZERO3;
        let mut d_psi = CZERO3;
        let mut d_phi = CZERO3;
        let radius = self.quad.radius;
        for (i, node) in self.quad.nodes.iter().enumerate() {
            let w = self.quad.weights[i];
            let y = real_scale(*node, radius);
            let u = real_sub(x, y);
            let rho2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
            let rho = rho2.sqrt();
            let g = -(ik * rho).exp() / (4.0 * std::f64::consts::PI * rho) * w;
            let q = ik - 1.0 / rho;
            let g1 = g * q / rho; // grad G = g1 * u (weight included)
            let h2 = (g * q * q + g / rho2 - g1) / rho2; // Hessian uu-coefficient
            let psi = self.psi[i];
            let phi = self.phi[i];
            let uc = CVec3::from_real(u);
            a_psi = a_psi.add(psi.scale(g));
            a_phi = a_phi.add(phi.scale(g));
            c_psi = c_psi.add(uc.cross(psi).scale(g1));
            c_phi = c_phi.add(uc.cross(phi).scale(g1));
            d_psi = d_psi.add(psi.scale(g1)).add(uc.scale(h2 * uc.dot(psi)));
            d_phi = d_phi.add(phi.scale(g1)).add(uc.scale(h2 * uc.dot(phi)));
        }
        let e = c_psi.scale(self.mu).add(a_phi.scale(k2)).add(d_phi);
        let i_omega = Complex64::new(0.0, self.omega);
        let h = a_psi
            .scale(k2)
            .add(d_psi)
            .scale(1.0 / i_omega)
            .add(c_phi.scale(k2 / (i_omega * self.mu)));
        (e, h)
    }
}

/// A finished solve: config, numerics, and densities, with cached evaluators
/// per (region, quadrature order).
pub struct SolvedProblem {
    pub cfg: MediumConfig,
    pub numerics: Numerics,
    pub density: DensitySolution,
    cache: Mutex<BTreeMap<(bool, usize), Arc<LayerEvaluator>>>,
}

impl SolvedProblem {
    pub fn new(cfg: MediumConfig, numerics: Numerics, density: DensitySolution) -> Self {
        Self {
            cfg,
            numerics,
            density,
            cache: Mutex::new(BTreeMap::new()),
        }
    }

    /// Solve the full problem for an incident field.
    pub fn solve(
        field: &IncidentField,
        cfg: &MediumConfig,
        numerics: &Numerics,
    ) -> Result<Self, ScatteringError> {
        let records = crate::spectrum::spectrum_table(cfg, numerics.n_max)?;
        let eigen = EigenTable::from_records(&records);
        let src = incident_trace_coeffs(field, cfg, &eigen, numerics)?;
        let density = solve_densities(&src, &eigen, numerics)?;
        Ok(Self::new(*cfg, numerics.clone(), density))
    }

    fn evaluator(&self, interior: bool, order: usize) -> Arc<LayerEvaluator> {
        let mut cache = self.cache.lock().unwrap();
        cache
            .entry((interior, order))
            .or_insert_with(|| {
                Arc::new(LayerEvaluator::new(
                    &self.density,
                    &self.cfg,
                    interior,
                    order,
                ))
            })
            .clone()
    }

    /// Layer-potential part of the field at one off-surface point (the
    /// scattered field outside, the total field inside).
    pub fn layer_field(&self, x: Real3) -> Result<(CVec3, CVec3), ScatteringError> {
        let r = real_norm(x);
        let dist = (r - self.cfg.radius).abs() / self.cfg.radius;
        if dist < self.numerics.delta_min {
            return Err(ScatteringError::TooCloseToSurface(
                dist,
                self.numerics.delta_min,
            ));
        }
        let interior = r < self.cfg.radius;
        let order = eval_order(dist, self.density.effective_n_max());
        Ok(self.evaluator(interior, order).eval(x))
    }

    /// As `layer_field` but with a caller-chosen quadrature order (used by
    /// the convergence-knee tests).
    pub fn layer_field_with_order(
        &self,
        x: Real3,
        order: usize,
    ) -> Result<(CVec3, CVec3), ScatteringError> {
        let r = real_norm(x);
        let interior = r < self.cfg.radius;
        Ok(self.evaluator(interior, order).eval(x))
    }
}

// ---------------------------------------------------------------------------
// Field grids
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Interior,
    Exterior,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldSample {
    pub point: Real3,
    pub region: Region,
    pub e: CVec3,
    pub h: CVec3,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldGridMeta {
    pub n_max: u32,
    pub effective_n_max: u32,
    pub excluded_points: usize,
    pub dropped_degrees: Vec<u32>,
    pub min_tau_used: f64,
    pub max_amplification: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldGrid {
    pub samples: Vec<FieldSample>,
    /// Points dropped because they fell in the excluded near-surface band.
    pub excluded: Vec<Real3>,
    pub meta: FieldGridMeta,
}

/// Total-field values on a grid: E = E^i + E^s outside, the interior layer
/// field inside; excluded-band points are dropped and reported. For
/// trace-only sources the exterior field is the layer field alone.
pub fn full_solution_grid(
    field: &IncidentField,
    cfg: &MediumConfig,
    points: &[Real3],
    numerics: &Numerics,
) -> Result<FieldGrid, ScatteringError> {
    let solved = SolvedProblem::solve(field, cfg, numerics)?;
    let trace_only = matches!(field, IncidentField::SpectralMultipole { .. });

    // partition: excluded band, then distance buckets (factor-2 decades)
    let mut excluded = Vec::new();
    let mut buckets: BTreeMap<(bool, usize), Vec<usize>> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        let r = real_norm(*p);
        let dist = (r - cfg.radius).abs() / cfg.radius;
        if dist < numerics.delta_min {
            excluded.push(*p);
            continue;
        }
        let interior = r < cfg.radius;
        let mut bucket_dist = numerics.delta_min;
        while bucket_dist * 2.0 <= dist {
            bucket_dist *= 2.0;
        }
        let order = eval_order(bucket_dist, solved.density.effective_n_max());
        buckets.entry((interior, order)).or_default().push(i);
    }

    let mut samples: Vec<Option<FieldSample>> = vec![None; points.len()];
    for ((interior, order), idxs) in buckets {
        let eval = solved.evaluator(interior, order);
        let chunk: Vec<(usize, FieldSample)> = idxs
            .par_iter()
            .map(|&i| {
                let p = points[i];
                let (mut e, mut h) = eval.eval(p);
                if !interior && !trace_only {
                    let (ei, hi) = incident_eval(field, p, cfg).expect("physical incident");
                    e = e.add(ei);
                    h = h.add(hi);
                }
                (
                    i,
                    FieldSample {
                        point: p,
                        region: if interior {
                            Region::Interior
                        } else {
                            Region::Exterior
                        },
                        e,
                        h,
                    },
                )
            })
            .collect();
        for (i, s) in chunk {
            samples[i] = Some(s);
        }
    }
    Ok(FieldGrid {
        samples: samples.into_iter().flatten().collect(),
        meta: FieldGridMeta {
            n_max: numerics.n_max,
            effective_n_max: solved.density.effective_n_max(),
            excluded_points: excluded.len(),
            dropped_degrees: solved.density.dropped_degrees.clone(),
            min_tau_used: solved.density.min_tau_used,
            max_amplification: solved.density.max_amplification,
        },
        excluded,
    })
}

// ---------------------------------------------------------------------------
// Transmission and radiation residuals
// ---------------------------------------------------------------------------

fn check_directions() -> Vec<Real3> {
    SphereQuadrature::new(4, 1.0).nodes
}

/// Tangential-trace mismatch across the surface, Richardson-extrapolated from
/// both sides over offsets in [max(delta_min, delta/2.5), delta]. Returns the
/// relative mismatch of nu x E and nu x H.
pub fn transmission_residual(
    field: &IncidentField,
    cfg: &MediumConfig,
    numerics: &Numerics,
    delta: f64,
) -> Result<(f64, f64), ScatteringError> {
    assert!(delta >= numerics.delta_min, "delta below the off-surface guard");
    let solved = SolvedProblem::solve(field, cfg, numerics)?;
    let trace_only = matches!(field, IncidentField::SpectralMultipole { .. });
    let lo = (delta / 2.5).max(numerics.delta_min);
    let n_off = 5;
    let offsets: Vec<f64> = (0..n_off)
        .map(|i| lo + (delta - lo) * i as f64 / (n_off - 1) as f64)
        .collect();
    let dirs = check_directions();
    let n_eff = solved.density.effective_n_max();

    // samples[side][offset][dir] -> (nu x E, nu x H)
    let mut traces = vec![vec![vec![(CZERO3, CZERO3); dirs.len()]; offsets.len()]; 2];
    for (oi, &off) in offsets.iter().enumerate() {
        for (side, sign) in [(0usize, 1.0f64), (1usize, -1.0f64)] {
            let r = cfg.radius * (1.0 + sign * off);
            let interior = side == 1;
            let order = eval_order(off, n_eff);
            let eval = solved.evaluator(interior, order);
            let row: Vec<(CVec3, CVec3)> = dirs
                .par_iter()
                .map(|d| {
                    let x = real_scale(*d, r);
                    let (mut e, mut h) = eval.eval(x);
                    if !interior && !trace_only {
                        let (ei, hi) = incident_eval(field, x, cfg).expect("physical incident");
                        e = e.add(ei);
                        h = h.add(hi);
                    }
                    let nu = CVec3::from_real(*d);
                    (nu.cross(e), nu.cross(h))
                })
                .collect();
            traces[side][oi] = row;
        }
    }

    let extrap = |side: usize, di: usize, pick: fn(&(CVec3, CVec3)) -> CVec3| -> CVec3 {
        let comp = |get: fn(&CVec3) -> Complex64| {
            let vals: Vec<Complex64> = (0..offsets.len())
                .map(|oi| get(&pick(&traces[side][oi][di])))
                .collect();
            crate::oracle::neville_to_zero(&offsets, &vals).0
        };
        CVec3::new(comp(|v| v.x), comp(|v| v.y), comp(|v| v.z))
    };

    let mut worst_e = 0.0f64;
    let mut worst_h = 0.0f64;
    let mut scale_e = 0.0f64;
    let mut scale_h = 0.0f64;
    for di in 0..dirs.len() {
        let e_out = extrap(0, di, |t| t.0);
        let e_in = extrap(1, di, |t| t.0);
        let h_out = extrap(0, di, |t| t.1);
        let h_in = extrap(1, di, |t| t.1);
        worst_e = worst_e.max(e_out.sub(e_in).norm());
        worst_h = worst_h.max(h_out.sub(h_in).norm());
        scale_e = scale_e.max(e_out.add(e_in).norm() / 2.0);
        scale_h = scale_h.max(h_out.add(h_in).norm() / 2.0);
    }
    Ok((worst_e / scale_e.max(1e-300), worst_h / scale_h.max(1e-300)))
}

/// Silver-Mueller residual of the scattered field: per radius, the maximum
/// over directions of |x| * |sqrt(mu_m) H_s x x_hat - sqrt(eps_m) E_s|.
pub fn radiation_residual(solved: &SolvedProblem, radii: &[f64]) -> Vec<f64> {
    let dirs = check_directions();
    let sqrt_mu = solved.cfg.mu_m.sqrt();
    let sqrt_eps = solved.cfg.eps_m.sqrt();
    radii
        .iter()
        .map(|&r| {
            let order = eval_order((r - solved.cfg.radius) / solved.cfg.radius,
                solved.density.effective_n_max());
            let eval = solved.evaluator(false, order);
            dirs.par_iter()
                .map(|d| {
                    let x = real_scale(*d, r);
                    let (e, h) = eval.eval(x);
                    let sm = h.scale(sqrt_mu).cross_real(*d).sub(e.scale(sqrt_eps));
                    r * sm.norm()
                })
                .reduce(|| 0.0, f64::max)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::spectrum_table;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sec5_config() -> MediumConfig {
        MediumConfig::vacuum_background(1.0, c(-6.55806, 1e-6), c(1.0, 0.0), 5.0).unwrap()
    }

    fn numerics(n_max: u32) -> Numerics {
        Numerics {
            n_max,
            ..Numerics::default()
        }
    }

    #[test]
    fn paper_plane_wave_at_origin() {
        let cfg = MediumConfig::vacuum_background(1.0, c(2.0, 0.0), c(1.0, 0.0), 5.0).unwrap();
        let (e, _) = incident_eval(&IncidentField::paper_plane_wave(), [0.0; 3], &cfg).unwrap();
        assert!((e.x - c(4.0, 0.0)).norm() < 1e-14);
        assert!((e.y + c(4.0, 0.0)).norm() < 1e-14);
        assert!(e.z.norm() < 1e-14);
    }

    #[test]
    fn plane_wave_is_divergence_free_and_maxwell_consistent() {
        let cfg = MediumConfig::vacuum_background(1.0, c(2.0, 0.0), c(1.0, 0.0), 3.0).unwrap();
        let f = IncidentField::paper_plane_wave();
        let h_fd = 1e-5;
        let x0 = [0.3, -0.2, 0.7];
        let at = |x: Real3| incident_eval(&f, x, &cfg).unwrap();
        // divergence by central differences
        let mut div = Complex64::new(0.0, 0.0);
        for axis in 0..3 {
            let mut xp = x0;
            let mut xm = x0;
            xp[axis] += h_fd;
            xm[axis] -= h_fd;
            let comp = |v: (CVec3, CVec3)| match axis {
                0 => v.0.x,
                1 => v.0.y,
                _ => v.0.z,
            };
            div += (comp(at(xp)) - comp(at(xm))) / (2.0 * h_fd);
        }
        assert!(div.norm() < 1e-6);
        // curl E = i omega mu H
        let curl = fd_curl(&at, x0, h_fd);
        let (_, h0) = at(x0);
        let expect = h0.scale(Complex64::new(0.0, cfg.omega) * cfg.mu_m);
        assert!(curl.sub(expect).norm() < 1e-6 * expect.norm());
    }

    fn fd_curl(f: &dyn Fn(Real3) -> (CVec3, CVec3), x: Real3, h: f64) -> CVec3 {
        let d = |axis: usize| {
            let mut xp = x;
            let mut xm = x;
            xp[axis] += h;
            xm[axis] -= h;
            f(xp).0.sub(f(xm).0).scale(Complex64::new(1.0 / (2.0 * h), 0.0))
        };
        let dx = d(0);
        let dy = d(1);
        let dz = d(2);
        CVec3::new(dy.z - dz.y, dz.x - dx.z, dx.y - dy.x)
    }

    #[test]
    fn vortex_value_and_maxwell_consistency() {
        let cfg = MediumConfig::vacuum_background(1.0, c(2.0, 0.0), c(1.0, 0.0), 5.0).unwrap();
        let f = IncidentField::paper_vortex();
        // at (1,0,0): E = (0, -(100/5)(sin 5 / 25 - cos 5 / 5), 0)
        let (e, _) = incident_eval(&f, [1.0, 0.0, 0.0], &cfg).unwrap();
        let expect = -(100.0 / 5.0) * ((5.0f64).sin() / 25.0 - (5.0f64).cos() / 5.0);
        assert!(e.x.norm() < 1e-14);
        assert!((e.y - c(expect, 0.0)).norm() < 1e-13);
        // Maxwell consistency at a generic point
        let at = |x: Real3| incident_eval(&f, x, &cfg).unwrap();
        let x0 = [0.4, 0.25, -0.55];
        let curl = fd_curl(&at, x0, 1e-5);
        let (_, h0) = at(x0);
        let expect_h = h0.scale(Complex64::new(0.0, cfg.omega) * cfg.mu_m);
        assert!(
            curl.sub(expect_h).norm() < 1e-6 * expect_h.norm().max(1e-6),
            "curl {curl:?} vs {expect_h:?}"
        );
    }

    #[test]
    fn vortex_origin_is_removable() {
        let cfg = MediumConfig::vacuum_background(1.0, c(2.0, 0.0), c(1.0, 0.0), 5.0).unwrap();
        let (e, h) = incident_eval(&IncidentField::paper_vortex(), [0.0; 3], &cfg).unwrap();
        assert_eq!(e.norm(), 0.0);
        // limit of H along a path to 0 matches the stored limit
        let (_, h_near) =
            incident_eval(&IncidentField::paper_vortex(), [1e-6, -2e-6, 1.4e-6], &cfg).unwrap();
        assert!(h.sub(h_near).norm() < 1e-9 * h.norm());
    }

    #[test]
    fn multipole_trace_gives_one_hot_coefficients() {
        let cfg = sec5_config();
        let num = numerics(6);
        let table = spectrum_table(&cfg, 6).unwrap();
        let eigen = EigenTable::from_records(&table);
        let f = IncidentField::SpectralMultipole {
            channel: 3,
            n: 1,
            m: 0,
            amplitude: c(1.0, 0.0),
        };
        let src = incident_trace_coeffs(&f, &cfg, &eigen, &num).unwrap();
        let hit = src.get(3, 1, 0);
        assert!((hit - c(1.0, 0.0)).norm() < 1e-9, "hit = {hit}");
        for n in 1..=6u32 {
            for m in -(n as i32)..=(n as i32) {
                for ch in 1..=4usize {
                    if (ch, n, m) == (3, 1, 0) {
                        continue;
                    }
                    let v = src.get(ch, n, m);
                    assert!(v.norm() < 1e-9, "leak at ch{ch} ({n},{m}): {v}");
                }
            }
        }
        assert!(src.residual < 1e-8);
    }

    #[test]
    fn eigenfunction_round_trip_all_channels() {
        let cfg = MediumConfig::vacuum_background(1.0, c(-2.5, 0.01), c(1.2, 0.0), 3.0).unwrap();
        let num = numerics(10);
        let eigen = EigenTable::from_records(&spectrum_table(&cfg, 10).unwrap());
        for ch in 1..=4usize {
            for n in [1u32, 4, 10] {
                let f = IncidentField::SpectralMultipole {
                    channel: ch,
                    n,
                    m: (n as i32).min(2) - 1,
                    amplitude: c(0.7, -0.3),
                };
                let src = incident_trace_coeffs(&f, &cfg, &eigen, &num).unwrap();
                let hit = src.get(ch, n, (n as i32).min(2) - 1);
                assert!(
                    (hit - c(0.7, -0.3)).norm() < 1e-9,
                    "ch{ch} n={n}: {hit}"
                );
            }
        }
    }

    #[test]
    fn sec5_vortex_excites_only_degree_one_te_channels() {
        let cfg = sec5_config();
        let num = numerics(8);
        let eigen = EigenTable::from_records(&spectrum_table(&cfg, 8).unwrap());
        let src =
            incident_trace_coeffs(&IncidentField::paper_vortex(), &cfg, &eigen, &num).unwrap();
        let f3 = src.get(3, 1, 0);
        let f4 = src.get(4, 1, 0);
        assert!(f3.norm() > 1.0, "f3 = {f3}");
        // near-perfect alignment with the large eigenvalue's eigenfunction
        assert!(f4.norm() < 1e-5 * f3.norm(), "f4/f3 = {}", f4.norm() / f3.norm());
        // channels 1/2 empty, all other degrees empty
        for n in 1..=8u32 {
            for m in -(n as i32)..=(n as i32) {
                let a = src.get(1, n, m).norm() + src.get(2, n, m).norm();
                assert!(a < 1e-8 * f3.norm(), "A-channel energy at ({n},{m})");
                if n > 1 {
                    let b = src.get(3, n, m).norm() + src.get(4, n, m).norm();
                    assert!(b < 1e-8 * f3.norm(), "degree {n} energy {b:.2e}");
                }
            }
        }
        assert!(src.residual < 1e-8, "residual {}", src.residual);
    }

    #[test]
    fn solve_densities_divides_by_tau() {
        let cfg = sec5_config();
        let num = numerics(4);
        let eigen = EigenTable::from_records(&spectrum_table(&cfg, 4).unwrap());
        let f = IncidentField::SpectralMultipole {
            channel: 3,
            n: 1,
            m: 0,
            amplitude: c(1.0, 0.0),
        };
        let src = incident_trace_coeffs(&f, &cfg, &eigen, &num).unwrap();
        let sol = solve_densities(&src, &eigen, &num).unwrap();
        let d = sol.d[coeff_index(1, 0)][2];
        let tau31 = eigen.pairs[0][2].tau;
        assert!((d - c(1.0, 0.0) / tau31).norm() < 1e-9 / tau31.norm());
        // |1/tau_3,1| << 1 at the cloaking point
        assert!(d.norm() < 0.02);
        assert!((sol.min_tau_used - 76.6465).abs() < 1e-3);
    }

    #[test]
    fn zero_source_gives_zero_solution() {
        let cfg = sec5_config();
        let num = numerics(3);
        let eigen = EigenTable::from_records(&spectrum_table(&cfg, 3).unwrap());
        let src = SourceCoefficients {
            n_max: 3,
            f: vec![[Complex64::new(0.0, 0.0); 4]; coeff_len(3)],
            residual: 0.0,
            truncation_warning: false,
        };
        let sol = solve_densities(&src, &eigen, &num).unwrap();
        assert!(sol.is_zero());
        let solved = SolvedProblem::new(cfg, num, sol);
        let (e, h) = solved.layer_field([0.0, 0.0, 2.0]).unwrap();
        assert_eq!(e.norm(), 0.0);
        assert_eq!(h.norm(), 0.0);
    }

    #[test]
    fn single_mode_layer_field_matches_addition_theorem() {
        // channel 3 density at (1,0): psi = v_psi G, phi = v_phi T; the
        // closed forms give E in terms of M/N waves with h_n radial factors
        let cfg = sec5_config();
        let num = numerics(2);
        let eigen = EigenTable::from_records(&spectrum_table(&cfg, 2).unwrap());
        let mut d = vec![[Complex64::new(0.0, 0.0); 4]; coeff_len(2)];
        d[coeff_index(1, 0)][2] = c(1.0, 0.0);
        let sol = DensitySolution {
            n_max: 2,
            d,
            eigen: eigen.clone(),
            min_tau_used: 1.0,
            max_amplification: 1.0,
            dropped_degrees: vec![],
        };
        let solved = SolvedProblem::new(cfg, num, sol);
        let r = 3.0;
        let dir = [0.6, 0.64, 0.48];
        let x = real_scale(dir, r);
        let (e, _) = solved.layer_field(x).unwrap();

        // closed form: E = mu cG k M(h) * v_psi + cT k^2 M(h) * v_phi
        // (both pieces are M-wave patterns for this density)
        let k = cfg.k_m;
        let radius = cfg.radius;
        let tr = crate::specfun::radial_table(3, k * radius).unwrap();
        let tx = crate::specfun::radial_table(3, k * r).unwrap();
        let minus_ik_r2 = -Complex64::new(0.0, 1.0) * k * radius * radius;
        let c_t = minus_ik_r2 * tr.j[1];
        let c_g = minus_ik_r2 * (2.0 * tr.j[0] - 1.0 * tr.j[2]) / 3.0;
        let pair = eigen.pairs[0][2];
        let t_pattern = harmonics::eval_tangential_basis(
            HarmonicIndex::new(1, 0).unwrap(),
            dir,
            radius,
        )
        .unwrap()
        .grad_cross_nu;
        let m_wave = t_pattern.scale(tx.h1[1] * radius / radius); // h_1(kr) T(x)/R scaling folded in
        let expect = m_wave.scale(cfg.mu_m * c_g * k * pair.v_psi + c_t * k * k * pair.v_phi);
        assert!(
            e.sub(expect).norm() < 1e-6 * expect.norm(),
            "layer {e:?} vs closed {expect:?}"
        );
    }

    #[test]
    fn identical_media_scattered_field_vanishes() {
        let cfg = MediumConfig::vacuum_background(1.0, c(1.0, 0.0), c(1.0, 0.0), 5.0).unwrap();
        let num = numerics(8);
        let solved =
            SolvedProblem::solve(&IncidentField::paper_vortex(), &cfg, &num).unwrap();
        let pts = [[2.0, 0.0, 0.3], [0.0, -1.5, 0.2], [1.2, 1.2, -0.8]];
        let (ei, _) = incident_eval(&IncidentField::paper_vortex(), pts[0], &cfg).unwrap();
        for p in pts {
            let (e, _) = solved.layer_field(p).unwrap();
            assert!(e.norm() < 1e-8 * ei.norm().max(1.0), "|Es| = {}", e.norm());
        }
    }

    #[test]
    fn excluded_band_is_rejected_pointwise_and_dropped_in_grids() {
        let cfg = sec5_config();
        let num = numerics(3);
        let eigen = EigenTable::from_records(&spectrum_table(&cfg, 3).unwrap());
        let src = incident_trace_coeffs(
            &IncidentField::SpectralMultipole {
                channel: 3,
                n: 1,
                m: 0,
                amplitude: c(1.0, 0.0),
            },
            &cfg,
            &eigen,
            &num,
        )
        .unwrap();
        let sol = solve_densities(&src, &eigen, &num).unwrap();
        let solved = SolvedProblem::new(cfg, num.clone(), sol);
        assert!(matches!(
            solved.layer_field([1.01, 0.0, 0.0]),
            Err(ScatteringError::TooCloseToSurface(..))
        ));
        let grid = full_solution_grid(
            &IncidentField::SpectralMultipole {
                channel: 3,
                n: 1,
                m: 0,
                amplitude: c(1.0, 0.0),
            },
            &cfg,
            &[[1.01, 0.0, 0.0], [2.0, 0.0, 0.0], [0.3, 0.0, 0.0]],
            &num,
        )
        .unwrap();
        assert_eq!(grid.meta.excluded_points, 1);
        assert_eq!(grid.samples.len(), 2);
        assert_eq!(grid.samples[0].region, Region::Exterior);
        assert_eq!(grid.samples[1].region, Region::Interior);
    }

    #[test]
    fn linearity_in_the_incident_field() {
        let cfg = sec5_config();
        let num = numerics(6);
        let f1 = IncidentField::paper_vortex();
        let f2 = IncidentField::ClosedFormVortex { amplitude: 35.0 };
        let s1 = SolvedProblem::solve(&f1, &cfg, &num).unwrap();
        let s2 = SolvedProblem::solve(&f2, &cfg, &num).unwrap();
        let x = [1.8, -0.7, 0.4];
        let (e1, _) = s1.layer_field(x).unwrap();
        let (e2, _) = s2.layer_field(x).unwrap();
        assert!(
            e1.scale(c(0.35, 0.0)).sub(e2).norm() < 1e-10 * e1.norm(),
            "homogeneity violated"
        );
    }

    #[test]
    fn quadrature_convergence_knee() {
        let cfg = sec5_config();
        let num = numerics(6);
        let solved = SolvedProblem::solve(&IncidentField::paper_vortex(), &cfg, &num).unwrap();
        let x = [1.5, 0.4, -0.2];
        let orders = [12usize, 16, 24, 32, 48, 64];
        let vals: Vec<CVec3> = orders
            .iter()
            .map(|&o| solved.layer_field_with_order(x, o).unwrap().0)
            .collect();
        // find the knee: first order where doubling changes < 1e-8
        let mut knee = None;
        for i in 0..vals.len() - 1 {
            if vals[i + 1].sub(vals[i]).norm() < 1e-8 {
                knee = Some(orders[i]);
                break;
            }
        }
        assert!(knee.is_some(), "no convergence knee found");
        let last = vals[vals.len() - 1];
        let prev = vals[vals.len() - 2];
        assert!(last.sub(prev).norm() < 1e-9);
    }

    #[test]
    fn radiation_residual_decays_for_outgoing_multipole() {
        let cfg = sec5_config();
        let num = numerics(2);
        let eigen = EigenTable::from_records(&spectrum_table(&cfg, 2).unwrap());
        let mut d = vec![[Complex64::new(0.0, 0.0); 4]; coeff_len(2)];
        d[coeff_index(1, 0)][2] = c(1.0, 0.0);
        let sol = DensitySolution {
            n_max: 2,
            d,
            eigen,
            min_tau_used: 1.0,
            max_amplification: 1.0,
            dropped_degrees: vec![],
        };
        let solved = SolvedProblem::new(cfg, num, sol);
        let res = radiation_residual(&solved, &[10.0, 20.0, 40.0]);
        assert!(res[0] > res[1] && res[1] > res[2], "{res:?}");
        // the Silver-Mueller combination annihilates the two leading orders
        // of an exact multipole far field, so |x| SM decays like 1/r^2 here
        // (ratio 4 per radius doubling); generic fields only guarantee 1/r.
        let exponent = (res[0] / res[1]).log2();
        assert!(exponent >= 1.0, "decay exponent {exponent}");
        assert!((exponent - 2.0).abs() < 0.2, "decay exponent {exponent}");
        // zero density -> all zeros
        let zero = DensitySolution {
            n_max: 2,
            d: vec![[Complex64::new(0.0, 0.0); 4]; coeff_len(2)],
            eigen: solved.density.eigen.clone(),
            min_tau_used: f64::INFINITY,
            max_amplification: 0.0,
            dropped_degrees: vec![],
        };
        let solved0 = SolvedProblem::new(solved.cfg, solved.numerics.clone(), zero);
        assert!(radiation_residual(&solved0, &[10.0, 20.0])
            .iter()
            .all(|&v| v == 0.0));
    }
}
