//! Property tests for cross-module invariants.

use gapspectra::birman_schwinger::mirror_potential;
use gapspectra::grid::{dirac_eigen_in_gap, GridSpec};
use gapspectra::linalg::C64;
use gapspectra::minmax::SubspaceForms;
use gapspectra::moments::{compute_f_parts, compute_u, Sign};
use gapspectra::potentials::{make_builtin, Family, PotentialSpec};
use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 12, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn free_grid_has_no_gap_eigenvalues(l in 5.0f64..100.0, n in 50usize..3000, m in 0.3f64..3.0) {
        let zs = dirac_eigen_in_gap(&PotentialSpec::zero(), m, 0.0, &GridSpec::new(l, n), (-m + 1e-3, m - 1e-3)).unwrap();
        prop_assert!(zs.is_empty());
    }

    #[test]
    fn mirror_negates_the_grid_spectrum(a in 0.5f64..3.0, b in -1.0f64..2.0, w in 0.5f64..2.0) {
        let v = make_builtin(Family::Gaussian, &[a, b, w]).unwrap();
        let g = GridSpec::new(12.0, 1200);
        let win = (-0.999, 0.999);
        let p = dirac_eigen_in_gap(&v, 1.0, 0.4, &g, win).unwrap();
        let q = dirac_eigen_in_gap(&mirror_potential(&v), 1.0, 0.4, &g, win).unwrap();
        prop_assert_eq!(p.len(), q.len());
        for (x, y) in p.iter().zip(q.iter().rev()) {
            prop_assert!((x.z + y.z).norm() <= 1e-8);
        }
    }

    #[test]
    fn hermitian_potentials_have_hermitian_u(re in -1.0f64..1.0, im in -1.0f64..1.0, d1 in -2.0f64..2.0, d2 in -2.0f64..2.0) {
        let v = make_builtin(Family::CustomMatrix, &[d1, 0.0, re, im, re, -im, d2, 0.0, 1.0]).unwrap();
        prop_assert!(v.is_hermitian());
        let u = compute_u(&v, 1e-10).unwrap();
        prop_assert!((u - u.adjoint()).norm() <= 1e-12);
        let back = v.sigma1_conjugate().sigma1_conjugate();
        for x in [-0.3, 0.0, 0.2] {
            prop_assert_eq!(back.eval(x), v.eval(x));
        }
    }

    #[test]
    fn diagonal_potentials_have_no_sign_part(a in -2.0f64..2.0, b in -2.0f64..2.0, w in 0.3f64..2.0, s in 0.0f64..3.0) {
        let v = make_builtin(Family::TwoBump, &[a, b, w, s.max(w)]).unwrap();
        for sign in [Sign::Plus, Sign::Minus] {
            let (sgn, _) = compute_f_parts(&v, 1.0, sign, 1e-10).unwrap();
            prop_assert!(sgn.iter().all(|z| z.norm() <= 1e-10));
        }
    }

    #[test]
    fn minmax_levels_respect_the_gap(a in 0.1f64..2.0, b in -1.0f64..1.0, eps in 0.05f64..0.4) {
        let v = make_builtin(Family::Gaussian, &[a, b, 1.0]).unwrap();
        prop_assume!(eps * a.max(b.abs()) < 0.9);
        let f = SubspaceForms::new(&v, 1.0, eps, &GridSpec::new(20.0, 800)).unwrap();
        let r = f.solve().unwrap();
        prop_assert!(r.gamma0 < r.gamma1);
        prop_assert!(r.gamma0 <= -1.0 + f.perturbation_norm);
        prop_assert!(r.gamma1 >= 1.0 - f.perturbation_norm);
        let g0 = r.gamma0;
        let mus: Vec<f64> = (0..6).map(|k| g0 + 1e-3 + (1.0 - g0 - 1e-3) * k as f64 / 5.0).map(|l| f.mu(l)).collect();
        prop_assert!(mus.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn gram_blocks_are_positive(a in -1.0f64..1.0, re in -0.5f64..0.5, im in -0.5f64..0.5) {
        let v = make_builtin(Family::CustomMatrix, &[a, 0.0, re, im, re, -im, 0.3, 0.0, 1.0]).unwrap();
        let f = SubspaceForms::new(&v, 1.0, 0.2, &GridSpec::new(4.0, 40)).unwrap();
        let id = gapspectra::linalg::BandMatrix::from_diagonal(&[C64::from(1.0); 40]);
        prop_assert_eq!(f.g_p.axpy(C64::from(-1.0), &id).hermitian_negatives(), 0);
        prop_assert_eq!(f.g_m.axpy(C64::from(-1.0), &id).hermitian_negatives(), 0);
        prop_assert!(f.q_pm.n() == 40);
    }
}
