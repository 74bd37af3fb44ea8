//! Free Dirac resolvent kernel, its split into the rank-one threshold part
//! and the regular part `S_z`, and the limiting kernel `M1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{i_sigma2, sgn, upper_projection, Mat2, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sheet {
    Physical,
    Second,
}

/// Which edge of the gap `(-m, m)` an eigenvalue emerges from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    PlusM,
    MinusM,
}

impl std::str::FromStr for Threshold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus_m" | "+m" => Ok(Threshold::PlusM),
            "minus_m" | "-m" => Ok(Threshold::MinusM),
            _ => Err(Error::InvalidParameter(format!("unknown threshold `{s}`"))),
        }
    }
}

/// A spectral parameter `z` together with `kappa = sqrt(m^2 - z^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaZ {
    pub z: C64,
    pub kappa: C64,
    pub sheet: Sheet,
    pub m: f64,
    /// Set when `z = ±m`, where `kappa = 0`.
    pub threshold: bool,
}

impl KappaZ {
    /// Build from `kappa`, reconstructing `z` near `+m` by the
    /// subtraction-free formula `m - kappa^2 / (m + sqrt(m^2 - kappa^2))`.
    /// The sheet follows the sign of `Re kappa`.
    pub fn from_kappa(kappa: C64, m: f64) -> Self {
        let z = z_of_kappa(kappa, m);
        let sheet = if kappa.re >= 0.0 { Sheet::Physical } else { Sheet::Second };
        Self { z, kappa, sheet, m, threshold: kappa == C64::new(0.0, 0.0) }
    }

    /// `(z - m) / kappa`, evaluated as `-kappa / (z + m)`.
    pub fn zm_over_kappa(&self) -> C64 {
        -self.kappa / (self.z + self.m)
    }
}

/// `z = m - kappa^2 / (m + sqrt(m^2 - kappa^2))`, the root of
/// `kappa^2 + z^2 = m^2` near `+m`.
pub fn z_of_kappa(kappa: C64, m: f64) -> C64 {
    let k2 = kappa * kappa;
    m - k2 / (m + (m * m - k2).sqrt())
}

/// Physical-sheet `kappa(z) = sqrt(m^2 - z^2)` with `Re kappa >= 0`; on the
/// cut (`Re kappa = 0`) the branch with `Im kappa >= 0` is taken.
pub fn kappa_of_z(z: C64, m: f64) -> KappaZ {
    let mut kappa = (m * m - z * z).sqrt();
    if kappa.re == 0.0 && kappa.im < 0.0 {
        kappa = -kappa;
    }
    let threshold = kappa == C64::new(0.0, 0.0);
    KappaZ { z, kappa, sheet: Sheet::Physical, m, threshold }
}

/// A kernel matrix evaluated at `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    #[serde(with = "crate::linalg::mat2_serde")]
    pub matrix: Mat2,
    pub at: (f64, f64),
}

/// `R_z(x, y) = (e^{-kappa|x-y|}/2) [[(z+m)/kappa, -sgn], [sgn, (z-m)/kappa]]`
/// with `sgn = sgn(x - y)`: the Green's function of `D_m - z`.
pub fn resolvent_kernel(x: f64, y: f64, kz: &KappaZ) -> Result<KernelValue> {
    if kz.threshold || kz.kappa == C64::new(0.0, 0.0) {
        return Err(Error::Threshold);
    }
    let r = (x - y).abs();
    let s = C64::from(sgn(x - y));
    let e = (-kz.kappa * r).exp() * 0.5;
    let matrix = Mat2::new(
        e * (kz.z + kz.m) / kz.kappa,
        -e * s,
        e * s,
        e * kz.zm_over_kappa(),
    );
    Ok(KernelValue { matrix, at: (x, y) })
}

/// `(e^{-kappa r} - 1) / kappa`, by series for small `|kappa r|`.
pub fn expm1_over_kappa(kappa: C64, r: f64) -> C64 {
    let t = kappa * r;
    if t.norm() < 1e-4 {
        // -r (1 - t/2 + t^2/6 - t^3/24)
        C64::from(-r) * (1.0 - t / 2.0 + t * t / 6.0 - t * t * t / 24.0)
    } else {
        ((-t).exp() - 1.0) / kappa
    }
}

/// Regular part `S_z` as a function of `d = x - y`.
pub fn regular_kernel_matrix(d: f64, kz: &KappaZ) -> Mat2 {
    let r = d.abs();
    let e = (-kz.kappa * r).exp();
    let first = expm1_over_kappa(kz.kappa, r) * kz.m;
    let diag = e * kz.zm_over_kappa() * 0.5;
    let off = e * (sgn(d) * 0.5);
    Mat2::new(first + diag, -off, off, diag)
}

/// `S_z(x, y) = (e^{-kappa r} - 1)(m/kappa) P+ + e^{-kappa r}(-(sgn/2) iσ2 + ((z-m)/2kappa) 1)`.
/// Finite at `kappa = 0`, where it equals `M1`.
pub fn regular_kernel_s(x: f64, y: f64, kz: &KappaZ) -> KernelValue {
    KernelValue { matrix: regular_kernel_matrix(x - y, kz), at: (x, y) }
}

/// `M1(x, y) = [[-m|x-y|, -sgn/2], [sgn/2, 0]]`.
pub fn limit_kernel_m1(x: f64, y: f64, m: f64) -> KernelValue {
    let s = sgn(x - y);
    let matrix = upper_projection() * C64::from(-m * (x - y).abs()) + i_sigma2() * C64::from(-s / 2.0);
    KernelValue { matrix, at: (x, y) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, op_norm, real_mat2};
    use proptest::prelude::*;

    #[test]
    fn kappa_examples() {
        let k = kappa_of_z(c(0.0, 0.0), 1.0);
        assert_eq!(k.kappa, c(1.0, 0.0));
        let k = kappa_of_z(c(1.0, 0.0), 1.0);
        assert!(k.threshold && k.kappa == c(0.0, 0.0));
        let k = kappa_of_z(c(0.99, 0.0), 1.0);
        assert!((k.kappa.re - 0.0199f64.sqrt()).abs() < 1e-15);
        assert!((k.kappa.re - 0.14106736).abs() < 1e-8);
        let k = kappa_of_z(c(2.0, 0.0), 1.0);
        assert!(k.kappa.re == 0.0 && k.kappa.im > 0.0);
    }

    #[test]
    fn resolvent_examples() {
        let kz = kappa_of_z(c(0.0, 0.0), 1.0);
        let r = resolvent_kernel(0.2, 0.2, &kz).unwrap().matrix;
        assert!((r - real_mat2(0.5, 0.0, 0.0, -0.5)).norm() < 1e-15);
        let kz = kappa_of_z(c(0.0, 0.5), 1.0);
        let a = resolvent_kernel(0.3, -0.2, &kz).unwrap().matrix;
        let b = resolvent_kernel(-0.2, 0.3, &kz).unwrap().matrix;
        assert_eq!(a[(0, 0)], b[(0, 0)]);
        assert_eq!(a[(1, 1)], b[(1, 1)]);
        assert_eq!(a[(0, 1)], -b[(0, 1)]);
        assert_eq!(a[(1, 0)], -b[(1, 0)]);
        let kz = kappa_of_z(c(0.8, 0.0), 1.0);
        assert!((kz.kappa - c(0.6, 0.0)).norm() < 1e-15);
        let r = resolvent_kernel(1.0, 0.0, &kz).unwrap().matrix;
        assert!((r[(0, 0)].re - 1.5 * (-0.6f64).exp()).abs() < 1e-14);
        assert!(matches!(resolvent_kernel(0.0, 1.0, &kappa_of_z(c(1.0, 0.0), 1.0)), Err(Error::Threshold)));
    }

    /// `R_z` solves `(D_m - z) R = δ`: away from the diagonal each column is
    /// annihilated by `D_m - z`, and across it `R21` jumps by +1, `R12` by -1.
    #[test]
    fn resolvent_is_greens_function() {
        let m = 1.3;
        let kz = kappa_of_z(c(0.4, 0.2), m);
        let y = 0.1;
        let col = |x: f64| resolvent_kernel(x, y, &kz).unwrap().matrix;
        for x in [-1.2, 0.7, 2.5] {
            let h = 1e-5;
            let d = (col(x + h) - col(x - h)) / C64::from(2.0 * h);
            let r = col(x);
            // D_m = [[m, d/dx], [-d/dx, -m]] acting on each column.
            for j in 0..2 {
                let top = r[(0, j)] * m + d[(1, j)] - kz.z * r[(0, j)];
                let bot = -d[(0, j)] - r[(1, j)] * m - kz.z * r[(1, j)];
                assert!(top.norm() < 1e-8 && bot.norm() < 1e-8, "x={x} j={j}");
            }
        }
        let (above, below) = (col(y + 1e-12), col(y - 1e-12));
        assert!((above[(1, 0)] - below[(1, 0)] - 1.0).norm() < 1e-9);
        assert!((above[(0, 1)] - below[(0, 1)] + 1.0).norm() < 1e-9);
    }

    #[test]
    fn regular_kernel_examples() {
        let kz = kappa_of_z(c(0.5, 0.0), 1.0);
        let s = regular_kernel_s(0.4, 0.4, &kz).matrix;
        let expect = Mat2::identity() * (kz.zm_over_kappa() * 0.5);
        assert!((s - expect).norm() < 1e-15);
        let s = regular_kernel_s(3.0, -3.0, &kz).matrix;
        assert!(op_norm(&s) <= 2.0 * (6.0 + 1.0));
        let tiny = KappaZ::from_kappa(c(1e-9, 0.0), 1.0);
        let s = regular_kernel_s(1.0, 0.0, &tiny).matrix;
        assert!((s - real_mat2(-1.0, -0.5, 0.5, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn m1_examples() {
        assert_eq!(limit_kernel_m1(0.3, 0.3, 1.0).matrix, Mat2::zeros());
        assert_eq!(limit_kernel_m1(1.0, 0.0, 1.0).matrix, real_mat2(-1.0, -0.5, 0.5, 0.0));
        assert_eq!(limit_kernel_m1(0.0, 2.0, 2.0).matrix, real_mat2(-4.0, 0.5, -0.5, 0.0));
    }

    #[test]
    fn series_branch_is_continuous() {
        let k = c(0.3, 0.1);
        for r in [1e-4 / 0.316 * 0.999, 1e-4 / 0.316 * 1.001] {
            let direct = ((-k * r).exp() - 1.0) / k;
            assert!((expm1_over_kappa(k, r) - direct).norm() < 1e-12 * r.max(1e-300) + 1e-16);
        }
    }

    fn arb_z() -> impl Strategy<Value = (f64, f64, C64)> {
        (-5.0..5.0f64, -5.0..5.0f64, 0.05..1.8f64, -0.8..0.8f64)
            .prop_map(|(x, y, re, im)| (x, y, c(re, im)))
    }

    proptest! {
        #[test]
        fn split_identity((x, y, z) in arb_z()) {
            let m = 1.0;
            let kz = kappa_of_z(z, m);
            prop_assume!(kz.kappa.norm() > 1e-3);
            let r = resolvent_kernel(x, y, &kz).unwrap().matrix;
            let s = regular_kernel_s(x, y, &kz).matrix;
            let split = upper_projection() * (m / kz.kappa) + s;
            prop_assert!((r - split).norm() <= 1e-10 * (1.0 + r.norm()));
        }

        #[test]
        fn kappa_map_invariants((_x, _y, z) in arb_z()) {
            let m = 1.0;
            let kz = kappa_of_z(z, m);
            prop_assert!((kz.kappa * kz.kappa + z * z - m * m).norm() <= 1e-12 * (1.0 + z.norm_sqr()));
            prop_assert!(kz.kappa.re >= 0.0);
            if z.im != 0.0 {
                prop_assert!(kz.kappa.re > 0.0);
            }
            let back = KappaZ::from_kappa(kz.kappa, m).z;
            prop_assert!((back - z).norm() <= 1e-12 * (1.0 + z.norm()));
        }

        #[test]
        fn regular_part_approaches_m1(x in -4.0..4.0f64, y in -4.0..4.0f64, re in 0.01..0.3f64, im in -0.2..0.2f64) {
            let m = 1.0;
            let mut ratios = vec![];
            for scale in [1.0, 0.5, 0.25] {
                let kz = KappaZ::from_kappa(c(re, im) * scale, m);
                let diff = regular_kernel_s(x, y, &kz).matrix - limit_kernel_m1(x, y, m).matrix;
                let bound = kz.kappa.norm() * (1.0 + (x - y).powi(2));
                ratios.push(op_norm(&diff) / bound);
            }
            prop_assert!(ratios.iter().all(|r| *r <= 3.0));
            prop_assert!(ratios[2] <= 2.0 * ratios[0] + 1e-12);
        }
    }
}
