use super::*;
use crate::linalg::c;
use crate::potentials::{make_builtin, Family};
use crate::resolvent::kappa_of_z;

fn well() -> PotentialSpec {
    make_builtin(Family::SquareWell, &[1.0, 0.0, 1.0]).unwrap()
}

/// Even bound state of `D_1 - eps * amp * diag(1, 0) 1_{|x| <= 1/2}` from the
/// matching condition `k tan(k/2) = kappa`, `k^2 = (1+z)(z + eps*amp - 1)`,
/// solved by complex Newton from `z0`.
fn square_well_oracle(eps_amp: C64, z0: C64) -> C64 {
    let f = |z: C64| {
        let k = ((1.0 + z) * (z + eps_amp - 1.0)).sqrt();
        let kappa = (1.0 - z * z).sqrt();
        k * (k / 2.0).tan() - kappa
    };
    let mut z = z0;
    for _ in 0..100 {
        let h = 1e-7;
        let d = (f(z + h) - f(z - h)) / (2.0 * h);
        let step = f(z) / d;
        z -= step;
        if step.norm() < 1e-16 {
            break;
        }
    }
    z
}

fn quad(width: f64) -> QuadSpec {
    QuadSpec { panel_width: width, ..QuadSpec::default() }
}

#[test]
fn zero_potential_gives_trivial_system() {
    let sys = assemble(&factorize(&PotentialSpec::zero()), &kappa_of_z(c(0.5, 0.0), 1.0), &QuadSpec::default()).unwrap();
    assert!(sys.m_mat.iter().all(|v| *v == C64::new(0.0, 0.0)));
    assert!(sys.a_vec.iter().chain(sys.b_vec.iter()).all(|v| *v == C64::new(0.0, 0.0)));
    let g = characteristic_g(&sys, 0.1).unwrap();
    assert_eq!(g, -sys.kz.kappa);
}

#[test]
fn rank_one_mode_is_closed_form() {
    let kz = KappaZ::from_kappa(c(0.2, 0.0), 1.0);
    let sys = assemble(&factorize(&well()), &kz, &QuadSpec::default()).unwrap().rank_one();
    let g = characteristic_g(&sys, 0.1).unwrap();
    assert!((g - c(0.1 - 0.2, 0.0)).norm() < 1e-14);
}

#[test]
fn nystrom_converges_under_refinement() {
    let kz = kappa_of_z(c(0.5, 0.0), 1.0);
    let v = factorize(&well());
    let coarse = assemble(&v, &kz, &quad(0.5)).unwrap().resolvent_form(0.3).unwrap();
    let fine = assemble(&v, &kz, &quad(0.25)).unwrap().resolvent_form(0.3).unwrap();
    assert!((coarse - fine).norm() < 1e-8, "{coarse} vs {fine}");
    assert!(fine.im.abs() <= 1e-10);
}

#[test]
fn hilbert_schmidt_norm_is_controlled_by_weighted_l1() {
    let v = make_builtin(Family::Gaussian, &[1.0, 0.5, 1.0]).unwrap();
    let norms = crate::moments::moment_norms(&v, 1e-8).unwrap();
    let weighted = norms[0].unwrap() / 2.0 + 2.0 * (norms[1].unwrap() - norms[0].unwrap() / 2.0) + (norms[2].unwrap() - norms[0].unwrap() / 2.0);
    for z in [c(0.5, 0.0), c(0.9, 0.1), c(0.0, 0.0)] {
        let sys = assemble(&factorize(&v), &kappa_of_z(z, 1.0), &QuadSpec::default()).unwrap();
        assert!(sys.hilbert_schmidt_norm() <= 2.0 * weighted, "{} vs {weighted}", sys.hilbert_schmidt_norm());
    }
}

#[test]
fn near_root_residual_is_small() {
    let kz = KappaZ::from_kappa(c(0.0966667, 0.0), 1.0);
    let sys = assemble(&factorize(&well()), &kz, &QuadSpec::default()).unwrap();
    assert!(characteristic_g(&sys, 0.1).unwrap().norm() <= 1e-3);
}

#[test]
fn square_well_bound_state_matches_transfer_matrix() {
    let root = find_bound_state(&well(), 1.0, 0.1, Threshold::PlusM, &BsOptions::default()).unwrap().unwrap();
    assert!((root.z.re - 0.9953341).abs() <= 2e-5);
    let exact = square_well_oracle(c(0.1, 0.0), c(0.995, 0.0));
    assert!((root.z - exact).norm() < 1e-10, "{} vs {exact}", root.z);
    assert!(root.residual <= 1e-10 * root.kappa.norm().max(1.0));
    assert!(root.kappa.im.abs() <= 1e-8);
    assert_eq!(root.sheet, Sheet::Physical);
    assert!((root.kappa0.re - (0.1 - 0.01 / 3.0)).abs() < 1e-9);
}

#[test]
fn non_hermitian_well_has_complex_eigenvalue() {
    let v = make_builtin(Family::CustomMatrix, &[1., 1., 0., 0., 0., 0., 0., 0., 1.0]).unwrap();
    let root = find_bound_state(&v, 1.0, 0.05, Threshold::PlusM, &BsOptions::default()).unwrap().unwrap();
    assert!(root.z.im < 0.0);
    assert!(root.residual <= 1e-10);
    let exact = square_well_oracle(c(0.05, 0.05), root.z);
    let exact_from_guess = square_well_oracle(c(0.05, 0.05), c(1.0, -0.0025));
    assert!((exact - exact_from_guess).norm() < 1e-12);
    assert!((root.z - exact).norm() < 1e-10, "{} vs {exact}", root.z);
}

#[test]
fn minus_threshold_uses_mirror() {
    let v = make_builtin(Family::SquareWell, &[0.0, -1.0, 1.0]).unwrap();
    let root = find_bound_state(&v, 1.0, 0.1, Threshold::MinusM, &BsOptions::default()).unwrap().unwrap();
    let exact = square_well_oracle(c(0.1, 0.0), c(0.995, 0.0));
    assert!((root.z + exact).norm() < 1e-10);
    assert!(find_bound_state(&v, 1.0, 0.1, Threshold::PlusM, &BsOptions::default()).unwrap().is_none());
}

#[test]
fn no_bound_state_without_attraction() {
    let opts = BsOptions::default();
    assert!(find_bound_state(&PotentialSpec::zero(), 1.0, 0.1, Threshold::PlusM, &opts).unwrap().is_none());
    assert!(find_bound_state(&well().negated(), 1.0, 0.1, Threshold::PlusM, &opts).unwrap().is_none());
}

#[test]
fn winding_counts() {
    let q = QuadSpec::default();
    assert_eq!(count_zeros_halfdisc(&well(), 1.0, 0.1, 1.0, 1e-3, &q).unwrap(), 1);
    assert_eq!(count_zeros_halfdisc(&PotentialSpec::zero(), 1.0, 0.1, 1.0, 1e-3, &q).unwrap(), 0);
    assert_eq!(count_zeros_halfdisc(&well().negated(), 1.0, 0.1, 1.0, 1e-3, &q).unwrap(), 0);
}

#[test]
fn winding_bisection_finds_the_root() {
    let g = CharacteristicFn::new(&well(), 1.0, 0.1, &QuadSpec::default()).unwrap();
    let out = winding_bisection(&|k| g.eval(k), 1.0, 0.1, &BsOptions::default()).unwrap().unwrap();
    let exact = square_well_oracle(c(0.1, 0.0), c(0.995, 0.0));
    assert!((KappaZ::from_kappa(out.kappa, 1.0).z - exact).norm() < 1e-10);
}

/// Second-sheet root for `V11 = -exp(-x^2)` by shooting: start from the
/// mode `e^{kappa x}` at `-X`, integrate the Dirac system with RK4, and
/// require the mode `e^{-kappa x}` at `+X`; the real root is bracketed and
/// bisected.
fn gaussian_resonance_oracle(eps: f64, lo: f64, hi: f64) -> f64 {
    let m = 1.0;
    let mismatch = |kappa: f64| {
        let z = m - kappa * kappa / (m + (m * m - kappa * kappa).sqrt());
        let rhs = |x: f64, y: [f64; 2]| {
            let v11 = -(-x * x).exp();
            [-(m + z) * y[1], -(m - eps * v11 - z) * y[0]]
        };
        let (x0, x1, n) = (-7.0, 7.0, 20000);
        let h = (x1 - x0) / n as f64;
        let mut y = [1.0, -kappa / (m + z)];
        for i in 0..n {
            let x = x0 + i as f64 * h;
            let k1 = rhs(x, y);
            let k2 = rhs(x + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
            let k3 = rhs(x + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
            let k4 = rhs(x + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
            for j in 0..2 {
                y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
        }
        y[1] - kappa / (m + z) * y[0]
    };
    let (mut a, mut b) = (lo, hi);
    let fa = mismatch(a);
    for _ in 0..60 {
        let mid = 0.5 * (a + b);
        if mismatch(mid).signum() == fa.signum() {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

#[test]
fn gaussian_resonance_matches_shooting() {
    let v = make_builtin(Family::Gaussian, &[-1.0, 0.0, 1.0]).unwrap();
    let u = -std::f64::consts::PI.sqrt();
    let f = -(2.0 * std::f64::consts::PI).sqrt();
    let mut constants = vec![];
    for eps in [0.1, 0.05] {
        let root = find_resonance(&v, 1.0, eps, Threshold::PlusM, &BsOptions::default()).unwrap().unwrap();
        assert_eq!(root.sheet, Sheet::Second);
        assert!(root.kappa.re < 0.0 && root.kappa.im.abs() < 1e-10);
        assert!(root.residual <= 1e-10);
        let k0 = eps * u + eps * eps * f;
        assert!((root.kappa0.re - k0).abs() < 1e-9);
        let exact = gaussian_resonance_oracle(eps, 2.0 * k0, 0.5 * k0);
        assert!((root.kappa.re - exact).abs() < 1e-8, "{} vs {exact}", root.kappa);
        constants.push((root.kappa.re - k0).abs() / eps.powi(3));
    }
    // The third-order constant is about 7.5 at eps = 0.1 and 6.3 at 0.05.
    assert!(constants[0] < 10.0 && constants[1] < 10.0);
    assert!(constants[0] / constants[1] < 2.0 && constants[1] / constants[0] < 2.0);
}

#[test]
fn resonance_preconditions() {
    let opts = BsOptions::default();
    assert!(find_resonance(&PotentialSpec::zero(), 1.0, 0.1, Threshold::PlusM, &opts).unwrap().is_none());
    let attractive = make_builtin(Family::Gaussian, &[1.0, 0.0, 1.0]).unwrap();
    assert!(find_resonance(&attractive, 1.0, 0.1, Threshold::PlusM, &opts).unwrap().is_none());
    let coulomb = make_builtin(Family::CoulombTail, &[]).unwrap();
    assert!(matches!(find_resonance(&coulomb, 1.0, 0.1, Threshold::PlusM, &opts), Err(Error::Hypothesis(_))));
}

#[test]
fn resonance_mirrors_bound_state_at_leading_order() {
    let v = make_builtin(Family::Gaussian, &[1.0, 0.0, 1.0]).unwrap();
    let eps = 0.05;
    let opts = BsOptions::default();
    let bound = find_bound_state(&v, 1.0, eps, Threshold::PlusM, &opts).unwrap().unwrap();
    let res = find_resonance(&v.negated(), 1.0, eps, Threshold::PlusM, &opts).unwrap().unwrap();
    assert!((bound.kappa + res.kappa).norm() <= 2.0 * eps * eps * 2.6);
}

#[test]
fn explicit_radius_too_small_is_reported() {
    let v = make_builtin(Family::Gaussian, &[1.0, 0.0, 1.0]).unwrap();
    let q = QuadSpec { trunc_radius: Some(2.0), ..QuadSpec::default() };
    let err = NystromGeometry::new(&factorize(&v), 1.0, &q).unwrap_err();
    assert!(matches!(err, Error::Truncation { .. }));
}
