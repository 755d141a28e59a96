//! Spherical Bessel and Hankel functions of complex argument.
//!
//! `j_n` comes from Miller's downward recurrence (upward is unstable for
//! n > |z|), normalized against the closed forms at order 0 or 1.
//! `h_n^(1)` grows with order, so plain upward recurrence from
//! `h_0(z) = -i e^{iz}/z` is stable. Derivatives use
//! `f_n' = f_{n-1} - (n+1) f_n / z`.

use num_complex::Complex64;
use thiserror::Error;

/// Hard cap on the order; the recurrences stay well inside f64 range below
/// this for |z| >= Z_MIN.
pub const N_MAX: u32 = 256;

/// Singularity guard: h_n diverges as z -> 0.
pub const Z_MIN: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum SpecfunError {
    #[error("argument too close to the h_n singularity at 0: |z| = {0:.3e} < {Z_MIN:.0e}")]
    DegenerateArgument(f64),
    #[error("order {0} exceeds the supported maximum {N_MAX}")]
    OrderOverflow(u32),
}

/// j, j', h1, h1' at a single order and argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialPair {
    pub order: u32,
    pub argument: Complex64,
    pub j: Complex64,
    pub j_prime: Complex64,
    pub h1: Complex64,
    pub h1_prime: Complex64,
}

impl RadialPair {
    /// Wronskian combination; equals i/z^2 exactly.
    pub fn wronskian(&self) -> Complex64 {
        self.j * self.h1_prime - self.j_prime * self.h1
    }
}

/// All orders 0..=n_max at a fixed argument. The spectral formulas consume
/// whole tables, so this is the workhorse entry point.
#[derive(Debug, Clone)]
pub struct RadialTable {
    pub argument: Complex64,
    pub j: Vec<Complex64>,
    pub j_prime: Vec<Complex64>,
    pub h1: Vec<Complex64>,
    pub h1_prime: Vec<Complex64>,
}

impl RadialTable {
    pub fn n_max(&self) -> u32 {
        (self.j.len() - 1) as u32
    }

    pub fn pair(&self, n: u32) -> RadialPair {
        let i = n as usize;
        RadialPair {
            order: n,
            argument: self.argument,
            j: self.j[i],
            j_prime: self.j_prime[i],
            h1: self.h1[i],
            h1_prime: self.h1_prime[i],
        }
    }
}

fn check_args(n: u32, z: Complex64) -> Result<(), SpecfunError> {
    if n > N_MAX {
        return Err(SpecfunError::OrderOverflow(n));
    }
    if z.norm() < Z_MIN {
        return Err(SpecfunError::DegenerateArgument(z.norm()));
    }
    Ok(())
}

/// Compute j, j', h1, h1' for all orders 0..=n_max at z.
pub fn radial_table(n_max: u32, z: Complex64) -> Result<RadialTable, SpecfunError> {
    check_args(n_max, z)?;
    let nn = n_max as usize;
    let zinv = Complex64::new(1.0, 0.0) / z;

    // Downward recurrence for j, started well above the requested order.
    let start = nn + 32 + z.norm().ceil() as usize;
    let mut f_hi = Complex64::new(0.0, 0.0);
    let mut f_lo = Complex64::new(1e-280, 0.0);
    let mut raw = vec![Complex64::new(0.0, 0.0); nn + 2];
    for k in (0..=start).rev() {
        let f = (2 * k + 3) as f64 * zinv * f_lo - f_hi;
        f_hi = f_lo;
        f_lo = f;
        if k <= nn + 1 {
            raw[k] = f;
        }
        // keep the unnormalized sequence inside f64 range
        if f_lo.norm_sqr() > 1e250 {
            f_lo *= 1e-250;
            f_hi *= 1e-250;
            for v in raw.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let j0 = z.sin() * zinv;
    let j1 = z.sin() * zinv * zinv - z.cos() * zinv;
    // bring the raw sequence to O(1) first: dividing by a complex with
    // denormal norm_sqr would produce inf/NaN
    let pre = 1.0 / raw[0].norm().max(raw[1].norm());
    for v in raw.iter_mut() {
        *v *= pre;
    }
    // normalize against whichever closed form is better conditioned
    let scale = if raw[0].norm() >= raw[1].norm() {
        j0 / raw[0]
    } else {
        j1 / raw[1]
    };
    let j: Vec<Complex64> = raw[..=nn].iter().map(|&v| v * scale).collect();

    // Upward recurrence for h1 from the order-0/1 closed forms.
    let i = Complex64::new(0.0, 1.0);
    let eiz = (i * z).exp();
    let mut h1 = vec![Complex64::new(0.0, 0.0); nn + 1];
    h1[0] = -i * eiz * zinv;
    if nn >= 1 {
        h1[1] = -eiz * (zinv + i * zinv * zinv);
        for k in 1..nn {
            h1[k + 1] = (2 * k + 1) as f64 * zinv * h1[k] - h1[k - 1];
        }
    }

    // Derivatives: f_0' = -f_1 (closed form at 0), f_n' = f_{n-1} - (n+1) f_n / z.
    let mut j_prime = vec![Complex64::new(0.0, 0.0); nn + 1];
    let mut h1_prime = vec![Complex64::new(0.0, 0.0); nn + 1];
    j_prime[0] = -j1;
    h1_prime[0] = eiz * (zinv + i * zinv * zinv);
    for n in 1..=nn {
        let np1 = (n + 1) as f64;
        j_prime[n] = j[n - 1] - np1 * zinv * j[n];
        h1_prime[n] = h1[n - 1] - np1 * zinv * h1[n];
    }

    Ok(RadialTable {
        argument: z,
        j,
        j_prime,
        h1,
        h1_prime,
    })
}

/// j, j', h1, h1' at a single (n, z).
pub fn radial_pair(n: u32, z: Complex64) -> Result<RadialPair, SpecfunError> {
    Ok(radial_table(n, z)?.pair(n))
}

/// ln[(2n+1)!!] = ln(1 * 3 * ... * (2n+1)); kept in log space so the
/// asymptotic forms survive n well past 150.
pub fn ln_double_factorial_odd(n: u32) -> f64 {
    (0..=n).map(|k| ((2 * k + 1) as f64).ln()).sum()
}

/// Leading-order large-n forms: j_n(z) ~ z^n / (2n+1)!!,
/// h_n(z) ~ (2n-1)!! / (i z^{n+1}), derivatives by differentiating the
/// leading monomial.
pub fn radial_pair_asymptotic(n: u32, z: Complex64) -> Result<RadialPair, SpecfunError> {
    check_args(n, z)?;
    if n == 0 {
        return Err(SpecfunError::OrderOverflow(0));
    }
    let nf = n as f64;
    let lnz = z.ln();
    let j = (nf * lnz - ln_double_factorial_odd(n)).exp();
    let j_prime = j * nf / z;
    let minus_i = Complex64::new(0.0, -1.0);
    let h1 = minus_i * (ln_double_factorial_odd(n - 1) - (nf + 1.0) * lnz).exp();
    let h1_prime = -h1 * (nf + 1.0) / z;
    Ok(RadialPair {
        order: n,
        argument: z,
        j,
        j_prime,
        h1,
        h1_prime,
    })
}
