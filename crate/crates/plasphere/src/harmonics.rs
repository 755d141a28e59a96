//! Scalar and vector spherical harmonics, sphere quadrature, and projection
//! of tangential fields onto the basis (grad_S Y, grad_S Y x nu).
//!
//! Convention: orthonormal complex harmonics with the Condon-Shortley phase,
//! `int_S Y conj(Y') ds = delta`. The tangential basis returned by
//! [`eval_tangential_basis`] carries the 1/R metric scaling, so its L2 norm
//! on the radius-R sphere is n(n+1) independently of R.

use crate::complex3::{pairwise_sum, CVec3, Real3, CZERO3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum HarmonicsError {
    #[error("invalid harmonic index: degree {n}, order {m}")]
    DegenerateIndex { n: u32, m: i32 },
    #[error("field is not tangential: max radial component {0:.3e} of scale {1:.3e}")]
    NotTangential(f64, f64),
}

/// Degree/order pair with |m| <= n.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HarmonicIndex {
    pub n: u32,
    pub m: i32,
}

impl HarmonicIndex {
    pub fn new(n: u32, m: i32) -> Result<Self, HarmonicsError> {
        if m.unsigned_abs() > n {
            return Err(HarmonicsError::DegenerateIndex { n, m });
        }
        Ok(Self { n, m })
    }
}

// ---------------------------------------------------------------------------
// Gauss-Legendre nodes
// ---------------------------------------------------------------------------

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1], by Newton
/// iteration on P_n with the asymptotic initial guess.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // P_n(t) and P_n'(t) by upward recurrence
            let (mut p0, mut p1) = (1.0f64, t);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
            let dt = p1 / dp;
            t -= dt;
            if dt.abs() < 1e-15 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0f64, t);
        for k in 2..=n {
            let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
        x[i] = -t; // ascending order
        w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
    // reverse to ascending in x
    x.reverse();
    w.reverse();
    (x, w)
}

// ---------------------------------------------------------------------------
// Sphere quadrature
// ---------------------------------------------------------------------------

/// Gauss-Legendre in cos(theta) x uniform trapezoid in phi. Exact for
/// products of harmonics up to the declared degree; weights sum to 4 pi R^2.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    pub radius: f64,
    pub n_theta: usize,
    pub n_phi: usize,
    /// cos(theta), sin(theta), GL weight (times R^2) per ring.
    pub rings: Vec<(f64, f64, f64)>,
    pub phis: Vec<f64>,
    /// Flat unit-vector nodes, ring-major: index = ring * n_phi + j.
    pub nodes: Vec<Real3>,
    /// Flat weights matching `nodes`; sum = 4 pi R^2.
    pub weights: Vec<f64>,
}

impl SphereQuadrature {
    pub fn new(n_theta: usize, radius: f64) -> Self {
        let (xs, ws) = gauss_legendre(n_theta);
        let n_phi = 2 * n_theta;
        let phis: Vec<f64> = (0..n_phi)
            .map(|j| 2.0 * std::f64::consts::PI * j as f64 / n_phi as f64)
            .collect();
        let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
        let mut rings = Vec::with_capacity(n_theta);
        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for i in 0..n_theta {
            let ct = xs[i];
            let st = (1.0 - ct * ct).sqrt();
            rings.push((ct, st, ws[i] * radius * radius));
            for &phi in &phis {
                nodes.push([st * phi.cos(), st * phi.sin(), ct]);
                weights.push(ws[i] * radius * radius * dphi);
            }
        }
        Self {
            radius,
            n_theta,
            n_phi,
            rings,
            phis,
            nodes,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Points scaled to the sphere radius (optionally offset radially).
    pub fn points_at_radius(&self, r: f64) -> Vec<Real3> {
        self.nodes.iter().map(|n| [n[0] * r, n[1] * r, n[2] * r]).collect()
    }
}

// ---------------------------------------------------------------------------
// Normalized associated Legendre tables
// ---------------------------------------------------------------------------

/// Packed index for (n, m >= 0) tables: entries for degree n start at
/// n(n+1)/2.
#[inline]
fn pidx(n: usize, m: usize) -> usize {
    n * (n + 1) / 2 + m
}

/// Fully normalized associated Legendre values and theta-derivatives at one
/// (cos theta, sin theta): Y_n^m = P[n,m] e^{i m phi} for m >= 0.
#[derive(Debug, Clone)]
pub struct LegendreTable {
    pub n_max: usize,
    pub p: Vec<f64>,
    pub dp: Vec<f64>,
}

pub fn legendre_table(n_max: usize, ct: f64, st: f64) -> LegendreTable {
    let len = (n_max + 1) * (n_max + 2) / 2;
    let mut p = vec![0.0; len];
    let mut dp = vec![0.0; len];
    p[pidx(0, 0)] = (1.0 / (4.0 * std::f64::consts::PI)).sqrt();
    for m in 1..=n_max {
        p[pidx(m, m)] = -((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * st * p[pidx(m - 1, m - 1)];
    }
    for m in 0..n_max {
        p[pidx(m + 1, m)] = ((2 * m + 3) as f64).sqrt() * ct * p[pidx(m, m)];
    }
    for m in 0..=n_max {
        for n in (m + 2)..=n_max {
            let nf = n as f64;
            let mf = m as f64;
            let a = ((4.0 * nf * nf - 1.0) / (nf * nf - mf * mf)).sqrt();
            let b = (((nf - 1.0) * (nf - 1.0) - mf * mf) / (4.0 * (nf - 1.0) * (nf - 1.0) - 1.0))
                .sqrt();
            p[pidx(n, m)] = a * (ct * p[pidx(n - 1, m)] - b * p[pidx(n - 2, m)]);
        }
    }
    // dP/dtheta = (n ct P[n,m] - sqrt((2n+1)/(2n-1) (n^2-m^2)) P[n-1,m]) / st
    let st_safe = st.max(1e-14);
    for n in 0..=n_max {
        for m in 0..=n {
            let nf = n as f64;
            let mf = m as f64;
            let mut t = nf * ct * p[pidx(n, m)];
            if n >= 1 && n - 1 >= m {
                t -= ((2.0 * nf + 1.0) / (2.0 * nf - 1.0) * (nf * nf - mf * mf)).sqrt()
                    * p[pidx(n - 1, m)];
            }
            dp[pidx(n, m)] = t / st_safe;
        }
    }
    LegendreTable { n_max, p, dp }
}

impl LegendreTable {
    #[inline]
    pub fn p(&self, n: usize, m: usize) -> f64 {
        self.p[pidx(n, m)]
    }

    #[inline]
    pub fn dp(&self, n: usize, m: usize) -> f64 {
        self.dp[pidx(n, m)]
    }
}

// ---------------------------------------------------------------------------
// Point evaluation
// ---------------------------------------------------------------------------

fn spherical_frame(point: Real3) -> (f64, f64, f64, Real3, Real3) {
    let r = (point[0] * point[0] + point[1] * point[1] + point[2] * point[2]).sqrt();
    let ct = point[2] / r;
    let st2 = (1.0 - ct * ct).max(0.0);
    let st = st2.sqrt();
    let phi = point[1].atan2(point[0]);
    let theta_hat = [ct * phi.cos(), ct * phi.sin(), -st];
    let phi_hat = [-phi.sin(), phi.cos(), 0.0];
    (ct, st, phi, theta_hat, phi_hat)
}

/// Orthonormal Y_n^m at a point (only the direction matters).
pub fn eval_y(idx: HarmonicIndex, point: Real3) -> Complex64 {
    let (ct, st, phi, _, _) = spherical_frame(point);
    let t = legendre_table(idx.n as usize, ct, st);
    let ma = idx.m.unsigned_abs() as usize;
    let e = Complex64::from_polar(1.0, ma as f64 * phi);
    let v = t.p(idx.n as usize, ma) * e;
    if idx.m >= 0 {
        v
    } else {
        let s = if ma % 2 == 0 { 1.0 } else { -1.0 };
        s * v.conj()
    }
}

/// The (theta, phi) scalar coefficients of grad_S Y against (theta_hat,
/// phi_hat), before the e^{i m phi} factor; uniform in the sign of m.
#[inline]
fn grad_coeffs(t: &LegendreTable, n: usize, m: i32, st: f64) -> (f64, Complex64) {
    let ma = m.unsigned_abs() as usize;
    let cs = if m < 0 && ma % 2 == 1 { -1.0 } else { 1.0 };
    let s_theta = cs * t.dp(n, ma);
    let s_phi = Complex64::new(0.0, cs * m as f64 * t.p(n, ma) / st.max(1e-14));
    (s_theta, s_phi)
}

/// Tangential basis pair at a point of the radius-R sphere.
#[derive(Debug, Clone, Copy)]
pub struct TangentialBasisSample {
    pub index: HarmonicIndex,
    pub point: Real3,
    /// (1/R) grad_S Y at the point.
    pub grad: CVec3,
    /// grad x nu.
    pub grad_cross_nu: CVec3,
}

/// Surface gradient of Y_n^m (with the 1/R scaling for the radius-R sphere)
/// and its cross product with the outward normal.
pub fn eval_tangential_basis(
    idx: HarmonicIndex,
    point: Real3,
    radius: f64,
) -> Result<TangentialBasisSample, HarmonicsError> {
    if idx.n == 0 || idx.m.unsigned_abs() > idx.n {
        return Err(HarmonicsError::DegenerateIndex { n: idx.n, m: idx.m });
    }
    let (ct, st, phi, theta_hat, phi_hat) = spherical_frame(point);
    let t = legendre_table(idx.n as usize, ct, st);
    let (s_theta, s_phi) = grad_coeffs(&t, idx.n as usize, idx.m, st);
    let e = Complex64::from_polar(1.0, idx.m as f64 * phi) / radius;
    let grad = CVec3::from_real(theta_hat)
        .scale(s_theta * e)
        .add(CVec3::from_real(phi_hat).scale(s_phi * e));
    // theta_hat x nu = -phi_hat, phi_hat x nu = theta_hat
    let grad_cross_nu = CVec3::from_real(theta_hat)
        .scale(s_phi * e)
        .sub(CVec3::from_real(phi_hat).scale(s_theta * e));
    Ok(TangentialBasisSample {
        index: idx,
        point,
        grad,
        grad_cross_nu,
    })
}

/// The vectorial spherical harmonics (I_n, T_n, N_n) at a point of the unit
/// sphere: I_n = grad_S Y_{n+1} + (n+1) Y_{n+1} nu, T_n = grad_S Y_n x nu,
/// N_n = -grad_S Y_{n-1} + n Y_{n-1} nu.
pub fn eval_vector_harmonics(
    idx: HarmonicIndex,
    point: Real3,
) -> Result<(CVec3, CVec3, CVec3), HarmonicsError> {
    let n = idx.n;
    let m = idx.m;
    if n < 1 {
        return Err(HarmonicsError::DegenerateIndex { n, m });
    }
    let nu = CVec3::from_real(point);

    let i_vec = {
        let up = HarmonicIndex::new(n + 1, m)?;
        let b = eval_tangential_basis(up, point, 1.0)?;
        b.grad.add(nu.scale(Complex64::new((n + 1) as f64, 0.0) * eval_y(up, point)))
    };
    let t_vec = eval_tangential_basis(HarmonicIndex::new(n, m)?, point, 1.0)?.grad_cross_nu;
    let n_vec = if m.unsigned_abs() > n - 1 {
        return Err(HarmonicsError::DegenerateIndex { n, m });
    } else if n == 1 {
        // grad_S of the constant Y_0 vanishes
        nu.scale(Complex64::new(n as f64, 0.0) * eval_y(HarmonicIndex::new(0, 0)?, point))
    } else {
        let dn = HarmonicIndex::new(n - 1, m)?;
        let b = eval_tangential_basis(dn, point, 1.0)?;
        nu.scale(Complex64::new(n as f64, 0.0) * eval_y(dn, point))
            .sub(b.grad)
    };
    Ok((i_vec, t_vec, n_vec))
}

// ---------------------------------------------------------------------------
// Projection and synthesis on the structured grid
// ---------------------------------------------------------------------------

/// Flat index over (n, m) with 1 <= n <= n_max, |m| <= n: degree n starts at
/// n^2 - 1.
#[inline]
pub fn coeff_index(n: u32, m: i32) -> usize {
    (n * n) as usize - 1 + (m + n as i32) as usize
}

pub fn coeff_len(n_max: u32) -> usize {
    (n_max * (n_max + 2)) as usize
}

/// Inverse of [`coeff_index`].
pub fn coeff_nm(i: usize, n_max: u32) -> (u32, i32) {
    debug_assert!(i < coeff_len(n_max));
    let mut n = 1u32;
    while ((n + 1) * (n + 1)) as usize - 1 <= i {
        n += 1;
    }
    let m = (i + 1 - (n * n) as usize) as i32 - n as i32;
    (n, m)
}

/// Coefficients of a tangential field in the (grad, grad x nu) basis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TangentialCoeffs {
    pub n_max: u32,
    pub c_grad: Vec<Complex64>,
    pub c_cross: Vec<Complex64>,
}

impl TangentialCoeffs {
    pub fn zero(n_max: u32) -> Self {
        let len = coeff_len(n_max);
        Self {
            n_max,
            c_grad: vec![Complex64::new(0.0, 0.0); len],
            c_cross: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    pub fn grad(&self, n: u32, m: i32) -> Complex64 {
        self.c_grad[coeff_index(n, m)]
    }

    pub fn cross(&self, n: u32, m: i32) -> Complex64 {
        self.c_cross[coeff_index(n, m)]
    }
}

/// Projection result: coefficients plus the relative L2 reconstruction error
/// of the truncated series and a warning flag when it exceeds 1e-6.
#[derive(Debug, Clone)]
pub struct ProjectionOutcome {
    pub coeffs: TangentialCoeffs,
    pub residual: f64,
    pub truncation_warning: bool,
}

/// Ring-major DFT of the theta/phi components of a field sampled on the
/// structured grid: out[(ring, m)] = dphi * sum_j comp(ring, j) e^{-i m phi_j}.
fn ring_transform(
    quad: &SphereQuadrature,
    field: &[CVec3],
    n_max: u32,
) -> (Vec<Complex64>, Vec<Complex64>) {
    use rayon::prelude::*;
    let mwidth = 2 * n_max as usize + 1;
    let dphi = 2.0 * std::f64::consts::PI / quad.n_phi as f64;
    let out: Vec<(Vec<Complex64>, Vec<Complex64>)> = (0..quad.n_theta)
        .into_par_iter()
        .map(|i| {
            let (ct, st, _) = quad.rings[i];
            let mut a_theta = vec![Complex64::new(0.0, 0.0); mwidth];
            let mut a_phi = vec![Complex64::new(0.0, 0.0); mwidth];
            for (j, &phi) in quad.phis.iter().enumerate() {
                let f = field[i * quad.n_phi + j];
                let theta_hat = [ct * phi.cos(), ct * phi.sin(), -st];
                let phi_hat = [-phi.sin(), phi.cos(), 0.0];
                let ft = f.dot_real(theta_hat);
                let fp = f.dot_real(phi_hat);
                for (mi, am) in (-(n_max as i32)..=n_max as i32).enumerate() {
                    let e = Complex64::from_polar(1.0, -(am as f64) * phi);
                    a_theta[mi] += ft * e;
                    a_phi[mi] += fp * e;
                }
            }
            for v in a_theta.iter_mut().chain(a_phi.iter_mut()) {
                *v *= dphi;
            }
            (a_theta, a_phi)
        })
        .collect();
    let mut a_theta = vec![Complex64::new(0.0, 0.0); quad.n_theta * mwidth];
    let mut a_phi = vec![Complex64::new(0.0, 0.0); quad.n_theta * mwidth];
    for (i, (at, ap)) in out.into_iter().enumerate() {
        a_theta[i * mwidth..(i + 1) * mwidth].copy_from_slice(&at);
        a_phi[i * mwidth..(i + 1) * mwidth].copy_from_slice(&ap);
    }
    (a_theta, a_phi)
}

/// Project a tangential field (sampled at the quadrature nodes) onto the
/// basis (grad_S Y / R, grad_S Y x nu / R) up to degree n_max.
pub fn project_tangential(
    field: &[CVec3],
    quad: &SphereQuadrature,
    n_max: u32,
) -> Result<ProjectionOutcome, HarmonicsError> {
    assert_eq!(field.len(), quad.len(), "field must be sampled at the nodes");
    // tangency check, relative to the field scale
    let scale = field.iter().map(|f| f.norm()).fold(0.0f64, f64::max);
    let mut worst = 0.0f64;
    for (f, node) in field.iter().zip(&quad.nodes) {
        worst = worst.max(f.dot_real(*node).norm());
    }
    if scale > 0.0 && worst > 1e-8 * scale {
        return Err(HarmonicsError::NotTangential(worst, scale));
    }

    let (a_theta, a_phi) = ring_transform(quad, field, n_max);
    let mwidth = 2 * n_max as usize + 1;
    let tables: Vec<LegendreTable> = quad
        .rings
        .iter()
        .map(|&(ct, st, _)| legendre_table(n_max as usize, ct, st))
        .collect();

    let mut coeffs = TangentialCoeffs::zero(n_max);
    let r = quad.radius;
    let mut buf_g = vec![Complex64::new(0.0, 0.0); quad.n_theta];
    let mut buf_c = vec![Complex64::new(0.0, 0.0); quad.n_theta];
    for n in 1..=n_max {
        for m in -(n as i32)..=(n as i32) {
            let mi = (m + n_max as i32) as usize;
            for i in 0..quad.n_theta {
                let (_, st, w) = quad.rings[i];
                let (s_theta, s_phi) = grad_coeffs(&tables[i], n as usize, m, st);
                let at = a_theta[i * mwidth + mi];
                let ap = a_phi[i * mwidth + mi];
                // <f, grad> and <f, cross> ring contributions (conjugated basis)
                buf_g[i] = w * (s_theta * at + s_phi.conj() * ap) / r;
                buf_c[i] = w * (s_phi.conj() * at - s_theta * ap) / r;
            }
            let nn = (n * (n + 1)) as f64;
            let ci = coeff_index(n, m);
            coeffs.c_grad[ci] = pairwise_sum(&mut buf_g) / nn;
            coeffs.c_cross[ci] = pairwise_sum(&mut buf_c) / nn;
        }
    }

    // reconstruction residual (relative L2)
    let recon = synthesize_tangential(&coeffs, quad);
    let mut err2 = 0.0;
    let mut norm2 = 0.0;
    for ((f, rec), w) in field.iter().zip(&recon).zip(&quad.weights) {
        err2 += w * f.sub(*rec).norm_sq();
        norm2 += w * f.norm_sq();
    }
    let residual = if norm2 > 0.0 { (err2 / norm2).sqrt() } else { 0.0 };
    Ok(ProjectionOutcome {
        coeffs,
        residual,
        truncation_warning: residual > 1e-6,
    })
}

/// Evaluate the tangential field with the given coefficients at the nodes of
/// a (possibly different) quadrature grid.
pub fn synthesize_tangential(coeffs: &TangentialCoeffs, quad: &SphereQuadrature) -> Vec<CVec3> {
    use rayon::prelude::*;
    let n_max = coeffs.n_max;
    let mwidth = 2 * n_max as usize + 1;
    let r = quad.radius;
    let rows: Vec<Vec<CVec3>> = (0..quad.n_theta)
        .into_par_iter()
        .map(|i| {
            let (ct, st, _) = quad.rings[i];
            let t = legendre_table(n_max as usize, ct, st);
            // accumulate theta/phi spectral components per m
            let mut g_theta = vec![Complex64::new(0.0, 0.0); mwidth];
            let mut g_phi = vec![Complex64::new(0.0, 0.0); mwidth];
            for n in 1..=n_max {
                for m in -(n as i32)..=(n as i32) {
                    let mi = (m + n_max as i32) as usize;
                    let ci = coeff_index(n, m);
                    let cg = coeffs.c_grad[ci];
                    let cc = coeffs.c_cross[ci];
                    if cg.norm_sqr() == 0.0 && cc.norm_sqr() == 0.0 {
                        continue;
                    }
                    let (s_theta, s_phi) = grad_coeffs(&t, n as usize, m, st);
                    g_theta[mi] += (cg * s_theta + cc * s_phi) / r;
                    g_phi[mi] += (cg * s_phi - cc * s_theta) / r;
                }
            }
            quad.phis
                .iter()
                .map(|&phi| {
                    let theta_hat = [ct * phi.cos(), ct * phi.sin(), -st];
                    let phi_hat = [-phi.sin(), phi.cos(), 0.0];
                    let mut vt = Complex64::new(0.0, 0.0);
                    let mut vp = Complex64::new(0.0, 0.0);
                    for (mi, am) in (-(n_max as i32)..=n_max as i32).enumerate() {
                        let e = Complex64::from_polar(1.0, am as f64 * phi);
                        vt += g_theta[mi] * e;
                        vp += g_phi[mi] * e;
                    }
                    CVec3::from_real(theta_hat)
                        .scale(vt)
                        .add(CVec3::from_real(phi_hat).scale(vp))
                })
                .collect()
        })
        .collect();
    let mut out = Vec::with_capacity(quad.len());
    for row in rows {
        out.extend(row);
    }
    out
}

/// Sampled tangential vector of a single basis function at all nodes
/// (used to synthesize eigenfunction traces).
pub fn basis_at_nodes(
    idx: HarmonicIndex,
    quad: &SphereQuadrature,
) -> (Vec<CVec3>, Vec<CVec3>) {
    let mut coeffs = TangentialCoeffs::zero(idx.n);
    coeffs.c_grad[coeff_index(idx.n, idx.m)] = Complex64::new(1.0, 0.0);
    let grad = synthesize_tangential(&coeffs, quad);
    coeffs.c_grad[coeff_index(idx.n, idx.m)] = Complex64::new(0.0, 0.0);
    coeffs.c_cross[coeff_index(idx.n, idx.m)] = Complex64::new(1.0, 0.0);
    let cross = synthesize_tangential(&coeffs, quad);
    (grad, cross)
}

/// nu x field at the quadrature nodes.
pub fn nu_cross(field: &[CVec3], quad: &SphereQuadrature) -> Vec<CVec3> {
    field
        .iter()
        .zip(&quad.nodes)
        .map(|(f, nu)| CVec3::from_real(*nu).cross(*f))
        .collect()
}

#[allow(unused)]
pub(crate) fn zero_field(quad: &SphereQuadrature) -> Vec<CVec3> {
    vec![CZERO3; quad.len()]
}
