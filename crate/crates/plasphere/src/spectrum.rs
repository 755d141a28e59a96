//! The closed-form eigensystem of the boundary-integral operator on the
//! sphere: lambda/chi per degree, the pi/sigma coefficient systems, the
//! M- and L-operator eigenvalues m1/m2/l1/l2, the per-degree 2x2 mode
//! matrices of `I + K`, their eigenvalues tau with eigenvector ratios alpha,
//! and the large-degree asymptotic eigenvalues.
//!
//! Labels are canonical: within the A-pair |tau1| <= |tau2| (the resonant
//! small eigenvalue first), within the B-pair |tau3| >= |tau4| (the cloaking
//! large eigenvalue first). The same rule orders the asymptotic values.

use crate::complex3::pairwise_sum;
use crate::medium::MediumConfig;
use crate::specfun::{self, RadialTable, SpecfunError};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
    #[error("the two closed forms of lambda disagree at n={n}: |d|={discrepancy:.3e} (admissibility or special-function failure)")]
    AdmissibilityViolation { n: u32, discrepancy: f64 },
    #[error("degenerate eigenpair at n={n}: |tau_a - tau_b| = {gap:.3e}")]
    DegenerateEigenpair { n: u32, gap: f64 },
}

/// lambda_{n,k,R} and chi_{n,k,R}; lambda from both closed forms with a
/// cross-check (the Wronskian forces them equal).
pub fn lambda_chi(n: u32, k: Complex64, radius: f64) -> Result<(Complex64, Complex64), SpectrumError> {
    let t = specfun::radial_table(n, k * radius)?;
    lambda_chi_from_table(n, k, radius, &t)
}

fn lambda_chi_from_table(
    n: u32,
    k: Complex64,
    radius: f64,
    t: &RadialTable,
) -> Result<(Complex64, Complex64), SpectrumError> {
    let i = Complex64::new(0.0, 1.0);
    let kr2 = k * k * radius * radius;
    let p = t.pair(n);
    let form1 = 0.5 - i * kr2 * p.j_prime * p.h1;
    let form2 = -0.5 - i * kr2 * p.j * p.h1_prime;
    let disc = (form1 - form2).norm() / form1.norm().max(1.0);
    if disc > 1e-8 {
        return Err(SpectrumError::AdmissibilityViolation { n, discrepancy: disc });
    }
    let chi = -i * k * radius * radius * p.h1 * p.j;
    Ok((form1, chi))
}

/// The eight pi/sigma coefficients at degree n (uses degrees n-1 and n+1).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PiSigma {
    pub pi: [Complex64; 4],
    pub sigma: [Complex64; 4],
}

pub fn pi_sigma(n: u32, k: Complex64, radius: f64) -> Result<PiSigma, SpectrumError> {
    assert!(n >= 1, "pi/sigma need degree >= 1");
    let t = specfun::radial_table(n + 1, k * radius)?;
    pi_sigma_from_table(n, k, radius, &t)
}

fn pi_sigma_from_table(
    n: u32,
    k: Complex64,
    radius: f64,
    t: &RadialTable,
) -> Result<PiSigma, SpectrumError> {
    let (lm, cm) = lambda_chi_from_table(n - 1, k, radius, t)?;
    let (lp, cp) = lambda_chi_from_table(n + 1, k, radius, t)?;
    let nf = n as f64;
    let w = 2.0 * nf + 1.0;
    Ok(PiSigma {
        pi: [
            ((nf + 1.0) * lm + nf * lp) / w,
            nf * (nf + 1.0) / w * (lm - lp),
            (lm - lp) / w,
            ((nf + 1.0) * lp + nf * lm) / w,
        ],
        sigma: [
            ((nf + 1.0) * cm + nf * cp) / w,
            nf * (nf + 1.0) / w * (cm - cp),
            (cm - cp) / w,
            ((nf + 1.0) * cp + nf * cm) / w,
        ],
    })
}

/// Eigenvalue coefficients of the M and L operators at one (n, k, R):
/// M[grad x nu] = m1 grad x nu, M[grad] = m2 grad,
/// L[grad x nu] = l1 grad, L[grad] = l2 grad x nu.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MlCoeffs {
    pub m1: Complex64,
    pub m2: Complex64,
    pub l1: Complex64,
    pub l2: Complex64,
}

pub fn m_l_coeffs(n: u32, k: Complex64, radius: f64) -> Result<MlCoeffs, SpectrumError> {
    assert!(n >= 1);
    let t = specfun::radial_table(n + 1, k * radius)?;
    m_l_from_table(n, k, radius, &t)
}

fn m_l_from_table(
    n: u32,
    k: Complex64,
    radius: f64,
    t: &RadialTable,
) -> Result<MlCoeffs, SpectrumError> {
    let ps = pi_sigma_from_table(n, k, radius, t)?;
    let (lam, chi) = lambda_chi_from_table(n, k, radius, t)?;
    let nn = (n * (n + 1)) as f64;
    Ok(MlCoeffs {
        m1: ps.pi[0] + (ps.sigma[0] - nn * ps.sigma[2]) / radius,
        m2: lam + chi / radius,
        l1: k * k * chi,
        l2: nn / (radius * radius) * chi - k * k * ps.sigma[0],
    })
}

/// 2x2 restrictions of `I + K` to the invariant subspaces at degree n.
/// `a` acts on (psi along grad x nu, phi along grad); `b` on the swapped
/// structure. Row-major [[a11, a12], [a21, a22]].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ModeMatrix {
    pub degree: u32,
    pub a: [[Complex64; 2]; 2],
    pub b: [[Complex64; 2]; 2],
}

pub fn mode_matrices(cfg: &MediumConfig, n: u32) -> Result<ModeMatrix, SpectrumError> {
    let tc = specfun::radial_table(n + 1, cfg.k_c * cfg.radius)?;
    let tm = specfun::radial_table(n + 1, cfg.k_m * cfg.radius)?;
    mode_matrices_from_tables(cfg, n, &tc, &tm)
}

fn mode_matrices_from_tables(
    cfg: &MediumConfig,
    n: u32,
    tc: &RadialTable,
    tm: &RadialTable,
) -> Result<ModeMatrix, SpectrumError> {
    let c = m_l_from_table(n, cfg.k_c, cfg.radius, tc)?;
    let m = m_l_from_table(n, cfg.k_m, cfg.radius, tm)?;
    let (mu_c, mu_m) = (cfg.mu_c, cfg.mu_m);
    let (kc2, km2) = (cfg.k_c * cfg.k_c, cfg.k_m * cfg.k_m);
    let id_psi = (mu_c + mu_m) / 2.0;
    let id_phi = kc2 / (2.0 * mu_c) + km2 / (2.0 * mu_m);
    let a = [
        [id_psi + mu_c * c.m1 - mu_m * m.m1, c.l2 - m.l2],
        [c.l1 - m.l1, id_phi + kc2 / mu_c * c.m2 - km2 / mu_m * m.m2],
    ];
    let b = [
        [id_psi + mu_c * c.m2 - mu_m * m.m2, c.l1 - m.l1],
        [c.l2 - m.l2, id_phi + kc2 / mu_c * c.m1 - km2 / mu_m * m.m1],
    ];
    Ok(ModeMatrix { degree: n, a, b })
}

impl ModeMatrix {
    pub fn det_a(&self) -> Complex64 {
        self.a[0][0] * self.a[1][1] - self.a[0][1] * self.a[1][0]
    }

    pub fn trace_a(&self) -> Complex64 {
        self.a[0][0] + self.a[1][1]
    }

    pub fn det_b(&self) -> Complex64 {
        self.b[0][0] * self.b[1][1] - self.b[0][1] * self.b[1][0]
    }

    pub fn trace_b(&self) -> Complex64 {
        self.b[0][0] + self.b[1][1]
    }
}

/// One eigenpair of a 2x2 block: eigenvalue plus the (psi, phi) eigenvector
/// components normalized so the largest has modulus 1. alpha = v_psi / v_phi
/// (the paper's eigenvector ratio; infinite for pure-psi modes).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EigenPair {
    pub tau: Complex64,
    pub v_psi: Complex64,
    pub v_phi: Complex64,
}

impl EigenPair {
    pub fn alpha(&self) -> Complex64 {
        self.v_psi / self.v_phi
    }
}

fn eig2(m: &[[Complex64; 2]; 2]) -> (EigenPair, EigenPair) {
    let (a, b, c, d) = (m[0][0], m[0][1], m[1][0], m[1][1]);
    let tr = a + d;
    let det = a * d - b * c;
    let disc = ((a - d) * (a - d) + 4.0 * b * c).sqrt();
    // take the root farther from cancellation first, recover the other from det
    let t_big = if (tr + disc).norm() >= (tr - disc).norm() {
        (tr + disc) / 2.0
    } else {
        (tr - disc) / 2.0
    };
    let t_small = if t_big.norm() > 0.0 { det / t_big } else { tr - t_big };
    (eig_vector(m, t_small), eig_vector(m, t_big))
}

fn eig_vector(m: &[[Complex64; 2]; 2], tau: Complex64) -> EigenPair {
    let (a, b, c, d) = (m[0][0], m[0][1], m[1][0], m[1][1]);
    // candidate null vectors of (M - tau I): rows give (b, tau - a), (tau - d, c)
    let cand1 = (b, tau - a);
    let cand2 = (tau - d, c);
    let n1 = cand1.0.norm_sqr() + cand1.1.norm_sqr();
    let n2 = cand2.0.norm_sqr() + cand2.1.norm_sqr();
    let scale = tau.norm().max(a.norm()).max(d.norm()).max(1.0);
    let (mut v_psi, mut v_phi) = if n1 >= n2 { cand1 } else { cand2 };
    if n1.max(n2).sqrt() < 1e-14 * scale {
        // diagonal block: axis eigenvectors
        if (tau - a).norm() <= (tau - d).norm() {
            v_psi = Complex64::new(1.0, 0.0);
            v_phi = Complex64::new(0.0, 0.0);
        } else {
            v_psi = Complex64::new(0.0, 0.0);
            v_phi = Complex64::new(1.0, 0.0);
        }
    }
    let nv = v_psi.norm().max(v_phi.norm());
    EigenPair {
        tau,
        v_psi: v_psi / nv,
        v_phi: v_phi / nv,
    }
}

/// The four eigenpairs at degree n under the canonical labels, plus the
/// paper's closed-form cross-check data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TauSet {
    pub degree: u32,
    /// Channels 1..4: [A-small, A-big, B-big, B-small].
    pub pairs: [EigenPair; 4],
    /// Discriminants beta_1 (A) and beta_2 (B), in the corrected form
    /// (2 mu_c mu_m)^2 ((X11-X22)^2 + 4 X12 X21).
    pub beta: [Complex64; 2],
    /// Max relative gap between the closed-form tau route (via alpha from the
    /// quadratic formula) and the mode-matrix eigenvalues.
    pub closed_form_discrepancy: f64,
    /// True when a pair is numerically defective (equal eigenvalues).
    pub defective: [bool; 2],
}

impl TauSet {
    pub fn tau(&self, channel: usize) -> Complex64 {
        self.pairs[channel - 1].tau
    }

    pub fn alpha(&self, channel: usize) -> Complex64 {
        self.pairs[channel - 1].alpha()
    }
}

/// Closed-form tau via the paper's alpha route (quadratic formula on the
/// block), used as a cross-check of the eigen route.
fn closed_form_taus(m: &[[Complex64; 2]; 2]) -> Option<(Complex64, Complex64)> {
    let (a, b, c, d) = (m[0][0], m[0][1], m[1][0], m[1][1]);
    if c.norm() < 1e-300 {
        return None;
    }
    let disc = ((a - d) * (a - d) + 4.0 * b * c).sqrt();
    let alpha_plus = ((a - d) + disc) / (2.0 * c);
    let alpha_minus = ((a - d) - disc) / (2.0 * c);
    Some((d + alpha_plus * c, d + alpha_minus * c))
}

pub fn tau_exact(cfg: &MediumConfig, n: u32) -> Result<TauSet, SpectrumError> {
    let mm = mode_matrices(cfg, n)?;
    tau_from_mode_matrix(cfg, &mm)
}

fn tau_from_mode_matrix(cfg: &MediumConfig, mm: &ModeMatrix) -> Result<TauSet, SpectrumError> {
    let n = mm.degree;
    let (a_small, a_big) = eig2(&mm.a);
    let (b_small, b_big) = eig2(&mm.b);

    let mu2 = 2.0 * cfg.mu_c * cfg.mu_m;
    let beta_of = |m: &[[Complex64; 2]; 2]| {
        let diff = m[0][0] - m[1][1];
        mu2 * mu2 * (diff * diff + 4.0 * m[0][1] * m[1][0])
    };
    let beta = [beta_of(&mm.a), beta_of(&mm.b)];

    let mut discrepancy = 0.0f64;
    for (m, (lo, hi)) in [(&mm.a, (&a_small, &a_big)), (&mm.b, (&b_small, &b_big))] {
        if let Some((t1, t2)) = closed_form_taus(m) {
            // match closed-form roots to eigen roots by proximity
            let (c_lo, c_hi) = if t1.norm() <= t2.norm() { (t1, t2) } else { (t2, t1) };
            let scale = hi.tau.norm().max(1e-30);
            discrepancy = discrepancy
                .max((c_lo - lo.tau).norm() / scale)
                .max((c_hi - hi.tau).norm() / scale);
        }
    }

    let defect = |x: &EigenPair, y: &EigenPair| {
        (x.tau - y.tau).norm() < 1e-12 * x.tau.norm().max(y.tau.norm()).max(1e-30)
    };
    Ok(TauSet {
        degree: n,
        pairs: [a_small, a_big, b_big, b_small],
        beta,
        closed_form_discrepancy: discrepancy,
        defective: [defect(&a_small, &a_big), defect(&b_small, &b_big)],
    })
}

/// The large-degree asymptotic eigenvalues, canonical channel order
/// [A-small, A-big, B-big, B-small]. Uses the (eps_c mu_c - eps_m mu_m)^2
/// discriminant in all four formulas.
pub fn tau_asymptotic(cfg: &MediumConfig, n: u32) -> [Complex64; 4] {
    let nf = n as f64;
    let w2 = cfg.omega * cfg.omega;
    let (eps_m, mu_m, eps_c, mu_c) = (cfg.eps_m, cfg.mu_m, cfg.eps_c, cfg.mu_c);
    let contrast = eps_c * mu_c - eps_m * mu_m;
    let disc_term = 4.0 * contrast * contrast * (4.0 * nf * nf + 4.0 * nf + 3.0) * w2 * w2
        * cfg.radius
        * cfg.radius
        / (4.0 * nf * nf + 4.0 * nf - 3.0);
    let denom = 2.0 * (2.0 * nf + 1.0);
    let pair = |mu_hi: Complex64, mu_lo: Complex64, eps_hi: Complex64, eps_lo: Complex64| {
        let s = (nf + 1.0) * mu_hi + nf * mu_lo + ((nf + 1.0) * eps_hi + nf * eps_lo) * w2;
        let d = (nf + 1.0) * mu_hi + nf * mu_lo - ((nf + 1.0) * eps_hi + nf * eps_lo) * w2;
        let root = (d * d - disc_term).sqrt();
        let lo = (s - root) / denom;
        let hi = (s + root) / denom;
        if lo.norm() <= hi.norm() {
            (lo, hi)
        } else {
            (hi, lo)
        }
    };
    let (a_small, a_big) = pair(mu_c, mu_m, eps_m, eps_c);
    let (b_small, b_big) = pair(mu_m, mu_c, eps_c, eps_m);
    [a_small, a_big, b_big, b_small]
}

/// Everything the spectrum knows about one degree, for export and reuse.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumRecord {
    pub degree: u32,
    pub lambda_m: Complex64,
    pub chi_m: Complex64,
    pub lambda_c: Complex64,
    pub chi_c: Complex64,
    pub pi_sigma_m: PiSigma,
    pub pi_sigma_c: PiSigma,
    pub ml_m: MlCoeffs,
    pub ml_c: MlCoeffs,
    pub mode: ModeMatrix,
    pub taus: TauSet,
    pub tau_asym: [Complex64; 4],
    pub flag_admissible: bool,
    pub flag_defective: bool,
}

/// Per-degree spectral data for n = 1..=n_max. Deterministic ordering; the
/// radial tables are computed once per wave number.
pub fn spectrum_table(cfg: &MediumConfig, n_max: u32) -> Result<Vec<SpectrumRecord>, SpectrumError> {
    let tc = specfun::radial_table(n_max + 1, cfg.k_c * cfg.radius)?;
    let tm = specfun::radial_table(n_max + 1, cfg.k_m * cfg.radius)?;
    let rel_margin = |t: &RadialTable, n: usize| {
        let lo = if n >= 1 { n - 1 } else { 0 };
        let mut worst = f64::INFINITY;
        for m in lo..=(n + 1).min(t.j.len() - 3) {
            let a = t.j[m];
            let b = t.j[m + 2];
            let s = a.norm().max(b.norm());
            if s > 0.0 {
                worst = worst.min((a - b).norm() / s);
            } else {
                worst = 0.0;
            }
        }
        worst
    };
    // extend tables by one order for the margin check at n_max + 1
    let tc_ext = specfun::radial_table(n_max + 3, cfg.k_c * cfg.radius)?;
    let tm_ext = specfun::radial_table(n_max + 3, cfg.k_m * cfg.radius)?;
    (1..=n_max)
        .map(|n| {
            let ml_c = m_l_from_table(n, cfg.k_c, cfg.radius, &tc)?;
            let ml_m = m_l_from_table(n, cfg.k_m, cfg.radius, &tm)?;
            let (lambda_c, chi_c) = lambda_chi_from_table(n, cfg.k_c, cfg.radius, &tc)?;
            let (lambda_m, chi_m) = lambda_chi_from_table(n, cfg.k_m, cfg.radius, &tm)?;
            let mode = mode_matrices_from_tables(cfg, n, &tc, &tm)?;
            let taus = tau_from_mode_matrix(cfg, &mode)?;
            let margin = rel_margin(&tc_ext, n as usize).min(rel_margin(&tm_ext, n as usize));
            Ok(SpectrumRecord {
                degree: n,
                lambda_m,
                chi_m,
                lambda_c,
                chi_c,
                pi_sigma_m: pi_sigma_from_table(n, cfg.k_m, cfg.radius, &tm)?,
                pi_sigma_c: pi_sigma_from_table(n, cfg.k_c, cfg.radius, &tc)?,
                ml_m,
                ml_c,
                mode,
                tau_asym: tau_asymptotic(cfg, n),
                flag_admissible: margin > 1e-12,
                flag_defective: taus.defective[0] || taus.defective[1],
                taus,
            })
        })
        .collect()
}

/// Deterministic invariant helper: recompute and compare bitwise.
pub fn table_is_reproducible(cfg: &MediumConfig, n_max: u32) -> bool {
    let a = spectrum_table(cfg, n_max).unwrap();
    let b = spectrum_table(cfg, n_max).unwrap();
    a.iter().zip(&b).all(|(x, y)| {
        x.taus.pairs[0].tau == y.taus.pairs[0].tau
            && x.taus.pairs[3].tau == y.taus.pairs[3].tau
            && x.lambda_c == y.lambda_c
    })
}

/// Residual of an eigenpair against its block, relative to the matrix scale.
pub fn eigen_residual(m: &[[Complex64; 2]; 2], p: &EigenPair) -> f64 {
    let r1 = m[0][0] * p.v_psi + m[0][1] * p.v_phi - p.tau * p.v_psi;
    let r2 = m[1][0] * p.v_psi + m[1][1] * p.v_phi - p.tau * p.v_phi;
    let scale = [m[0][0], m[0][1], m[1][0], m[1][1]]
        .iter()
        .map(|c| c.norm())
        .fold(p.tau.norm(), f64::max);
    ((r1.norm_sqr() + r2.norm_sqr()).sqrt()) / scale.max(1e-300)
}

/// Median of |tau_1,n| over a table (diagnostics for the resonance tests).
pub fn median_abs_tau1(table: &[SpectrumRecord]) -> f64 {
    let mut v: Vec<f64> = table.iter().map(|r| r.taus.pairs[0].tau.norm()).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v[v.len() / 2]
}

#[allow(unused)]
fn unused_pairwise_guard(values: &mut [Complex64]) -> Complex64 {
    pairwise_sum(values)
}
