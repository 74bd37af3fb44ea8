//! Small linear-algebra toolkit: 2x2 complex matrices, pivoted tridiagonal
//! solves, and banded Hermitian inertia counts.

mod band;
mod tridiag;

pub use band::BandMatrix;
pub use tridiag::{hermitian_tridiag_negatives, TriLu};

use nalgebra::Matrix2;
use num_complex::Complex64;

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real_mat2(a: f64, b: f64, c: f64, d: f64) -> Mat2 {
    Mat2::new(C64::from(a), C64::from(b), C64::from(c), C64::from(d))
}

pub fn sigma1() -> Mat2 {
    real_mat2(0.0, 1.0, 1.0, 0.0)
}

pub fn sigma3() -> Mat2 {
    real_mat2(1.0, 0.0, 0.0, -1.0)
}

/// `i * sigma_2 = [[0, 1], [-1, 0]]`.
pub fn i_sigma2() -> Mat2 {
    real_mat2(0.0, 1.0, -1.0, 0.0)
}

/// `P_+^* P_+`, the projection on the upper component.
pub fn upper_projection() -> Mat2 {
    real_mat2(1.0, 0.0, 0.0, 0.0)
}

/// Spectral norm (largest singular value) of a 2x2 matrix, in closed form.
pub fn op_norm(m: &Mat2) -> f64 {
    let fro2: f64 = m.iter().map(|z| z.norm_sqr()).sum();
    let det = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).norm();
    let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
    ((fro2 + disc) / 2.0).sqrt()
}

pub fn max_abs_entry(m: &Mat2) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Sign function with `sgn(0) = 0`.
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Serde adapter writing a 2x2 matrix as row-major nested arrays of
/// `[re, im]` pairs.
pub mod mat2_serde {
    use super::{Mat2, C64};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn to_rows(m: &Mat2) -> [[C64; 2]; 2] {
        [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
    }

    pub fn serialize<S: Serializer>(m: &Mat2, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Mat2, D::Error> {
        let r = <[[C64; 2]; 2]>::deserialize(d)?;
        Ok(Mat2::new(r[0][0], r[0][1], r[1][0], r[1][1]))
    }
}
