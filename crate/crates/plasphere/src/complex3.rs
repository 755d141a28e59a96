//! Small fixed-size vector helpers for complex 3-vectors and real points.

use num_complex::Complex64;

pub type Real3 = [f64; 3];

/// Complex 3-vector with the handful of operations the layer potentials need.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CVec3 {
    pub x: Complex64,
    pub y: Complex64,
    pub z: Complex64,
}

pub const CZERO3: CVec3 = CVec3 {
    x: Complex64::new(0.0, 0.0),
    y: Complex64::new(0.0, 0.0),
    z: Complex64::new(0.0, 0.0),
};

impl CVec3 {
    pub fn new(x: Complex64, y: Complex64, z: Complex64) -> Self {
        Self { x, y, z }
    }

    pub fn from_real(v: Real3) -> Self {
        Self {
            x: Complex64::new(v[0], 0.0),
            y: Complex64::new(v[1], 0.0),
            z: Complex64::new(v[2], 0.0),
        }
    }

    pub fn scale(self, s: Complex64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }

    pub fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }

    /// Bilinear dot product (no conjugation).
    pub fn dot(self, o: Self) -> Complex64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    /// Hermitian inner product `<self, o> = sum self_i conj(o_i)`.
    pub fn dot_conj(self, o: Self) -> Complex64 {
        self.x * o.x.conj() + self.y * o.y.conj() + self.z * o.z.conj()
    }

    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    /// Cross product with a real vector on the right.
    pub fn cross_real(self, o: Real3) -> Self {
        self.cross(Self::from_real(o))
    }

    pub fn norm_sq(self) -> f64 {
        self.x.norm_sqr() + self.y.norm_sqr() + self.z.norm_sqr()
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Component along a real unit vector.
    pub fn dot_real(self, o: Real3) -> Complex64 {
        self.x * o[0] + self.y * o[1] + self.z * o[2]
    }
}

pub fn real_cross(a: Real3, b: Real3) -> Real3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn real_dot(a: Real3, b: Real3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn real_norm(a: Real3) -> f64 {
    real_dot(a, a).sqrt()
}

pub fn real_scale(a: Real3, s: f64) -> Real3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn real_sub(a: Real3, b: Real3) -> Real3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Cross of a real vector with a complex one.
pub fn real_cross_c(a: Real3, b: CVec3) -> CVec3 {
    CVec3::from_real(a).cross(b)
}

/// Pairwise (tree) summation of complex values; deterministic for a fixed
/// input order and much better conditioned than naive accumulation.
pub fn pairwise_sum(values: &mut [Complex64]) -> Complex64 {
    let mut len = values.len();
    if len == 0 {
        return Complex64::new(0.0, 0.0);
    }
    while len > 1 {
        let half = len / 2;
        for i in 0..half {
            values[i] = values[2 * i] + values[2 * i + 1];
        }
        if len % 2 == 1 {
            values[half] = values[len - 1];
            len = half + 1;
        } else {
            len = half;
        }
    }
    values[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_matches_hand_computation() {
        let a = CVec3::from_real([1.0, 0.0, 0.0]);
        let b = CVec3::from_real([0.0, 1.0, 0.0]);
        let c = a.cross(b);
        assert_eq!(c.z, Complex64::new(1.0, 0.0));
        assert_eq!(c.x.norm(), 0.0);
    }

    #[test]
    fn pairwise_sum_matches_naive_on_smooth_data() {
        let mut v: Vec<Complex64> = (0..1001)
            .map(|i| Complex64::new(1.0 / (1.0 + i as f64), (i as f64).sin()))
            .collect();
        let naive: Complex64 = v.iter().sum();
        let tree = pairwise_sum(&mut v);
        assert!((naive - tree).norm() < 1e-12 * naive.norm());
    }

    #[test]
    fn triple_product_with_repeated_complex_vector_vanishes() {
        let a = CVec3::new(
            Complex64::new(1.0, 2.0),
            Complex64::new(-0.5, 0.3),
            Complex64::new(0.0, 1.0),
        );
        let nu = [0.3, -0.4, 0.866];
        let t = a.cross_real(nu);
        assert!(a.dot(t).norm() < 1e-15);
    }
}
