//! Closed-form eigenvalue predictions, each carried as a finite sum of
//! `coefficient * eps^power * |log eps|^log_power` terms plus a symbolic
//! error order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::moments::MomentSet;
use crate::resolvent::Threshold;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderTerm {
    pub power: f64,
    pub coefficient: C64,
    #[serde(default)]
    pub log_power: u32,
}

impl OrderTerm {
    pub fn new(power: f64, coefficient: impl Into<C64>) -> Self {
        Self { power, coefficient: coefficient.into(), log_power: 0 }
    }

    pub fn with_log(power: f64, coefficient: impl Into<C64>, log_power: u32) -> Self {
        Self { power, coefficient: coefficient.into(), log_power }
    }

    pub fn eval(&self, eps: f64) -> C64 {
        let p = if self.power == 0.0 { 1.0 } else { eps.powf(self.power) };
        let l = if self.log_power == 0 { 1.0 } else { (-eps.ln()).powi(self.log_power as i32) };
        self.coefficient * (p * l)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorOrder {
    /// `O(eps^(1+nu))` inside the square.
    InsideSquare,
    /// `o(eps^2)`.
    LittleEps2,
    /// `O(eps^4)`.
    BigEps4,
    /// `o(eps^2 log^2 eps)`.
    LittleEps2Log2,
    /// `O(sqrt(eps) |lambdaS|) + O(eps^3)`.
    SqrtEpsLambdaPlusEps3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    SchrodingerShortRange,
    SchrodingerLongRange,
    DiracLongRange,
    Comparison,
    DiracSecondOrder,
    DiracKappaForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub value: C64,
    pub eps: f64,
    pub order_terms: Vec<OrderTerm>,
    pub error_order: ErrorOrder,
    pub source: Source,
    /// Error band with its constant left out: `sqrt(eps)|lambdaS| + eps^3`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<f64>,
}

impl Prediction {
    fn from_terms(eps: f64, order_terms: Vec<OrderTerm>, error_order: ErrorOrder, source: Source) -> Self {
        let value = order_terms.iter().map(|t| t.eval(eps)).sum();
        Self { value, eps, order_terms, error_order, source, band: None }
    }

    /// Sum of the order terms at `eps`.
    pub fn evaluate(&self, eps: f64) -> C64 {
        self.order_terms.iter().map(|t| t.eval(eps)).sum()
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("eps must be nonnegative, got {eps}")));
    }
    Ok(())
}

fn check_log_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("long-range predictions need eps in (0, 1), got {eps}")));
    }
    Ok(())
}

fn check_mass(m: f64) -> Result<()> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::InvalidParameter(format!("mass must be positive, got {m}")));
    }
    Ok(())
}

/// `-(1/2m)(m eps U + [terms = 2] (m^2 eps^2 / 4) cross)^2`.
pub fn predict_schrodinger_short(u: C64, cross: C64, m: f64, eps: f64, terms: u8) -> Result<Prediction> {
    check_mass(m)?;
    check_eps(eps)?;
    let mut order_terms = vec![OrderTerm::new(2.0, -u * u * (m / 2.0))];
    match terms {
        1 => {}
        2 => {
            order_terms.push(OrderTerm::new(3.0, -u * cross * (m * m / 4.0)));
            order_terms.push(OrderTerm::new(4.0, -cross * cross * (m * m * m / 32.0)));
        }
        _ => return Err(Error::InvalidParameter(format!("terms must be 1 or 2, got {terms}"))),
    }
    let order = if terms == 1 { ErrorOrder::InsideSquare } else { ErrorOrder::LittleEps2 };
    Ok(Prediction::from_terms(eps, order_terms, order, Source::SchrodingerShortRange))
}

/// `-2 m eps^2 log^2 eps`.
pub fn predict_schrodinger_long(m: f64, eps: f64) -> Result<Prediction> {
    check_mass(m)?;
    check_log_eps(eps)?;
    let terms = vec![OrderTerm::with_log(2.0, -2.0 * m, 2)];
    Ok(Prediction::from_terms(eps, terms, ErrorOrder::LittleEps2Log2, Source::SchrodingerLongRange))
}

/// `m - 2 m eps^2 log^2 eps`.
pub fn predict_dirac_long(m: f64, eps: f64) -> Result<Prediction> {
    check_mass(m)?;
    check_log_eps(eps)?;
    let terms = vec![OrderTerm::new(0.0, m), OrderTerm::with_log(2.0, -2.0 * m, 2)];
    Ok(Prediction::from_terms(eps, terms, ErrorOrder::LittleEps2Log2, Source::DiracLongRange))
}

fn threshold_entries(moments: &MomentSet, threshold: Threshold) -> Result<(C64, C64)> {
    let (u, f, attractive) = match threshold {
        Threshold::PlusM => {
            let u = moments.u[(0, 0)];
            (u, moments.f_plus[(0, 0)], u.re > 0.0)
        }
        Threshold::MinusM => {
            let u = moments.u[(1, 1)];
            (u, moments.f_minus[(1, 1)], u.re < 0.0)
        }
    };
    if !attractive {
        return Err(Error::Hypothesis(format!(
            "no bound state emerges from {threshold:?}: the threshold moment {u} has the repulsive sign"
        )));
    }
    Ok((u, f))
}

/// Three-term expansion as printed:
/// `m - (m/2)U11^2 eps^2 + m U11 F+11 eps^3` at `+m` and
/// `-m + (m/2)U22^2 eps^2 - m U22 F-22 eps^3` at `-m`.
pub fn predict_dirac_second_order(moments: &MomentSet, m: f64, eps: f64, threshold: Threshold) -> Result<Prediction> {
    check_mass(m)?;
    check_eps(eps)?;
    let (u, f) = threshold_entries(moments, threshold)?;
    let s = match threshold {
        Threshold::PlusM => 1.0,
        Threshold::MinusM => -1.0,
    };
    let terms = vec![OrderTerm::new(0.0, s * m), OrderTerm::new(2.0, -u * u * (s * m / 2.0)), OrderTerm::new(3.0, u * f * (s * m))];
    Ok(Prediction::from_terms(eps, terms, ErrorOrder::BigEps4, Source::DiracSecondOrder))
}

/// `z = ±(m - kappa0^2 / 2m)` with `kappa0 = ±(eps m U + eps^2 m F)` taken
/// from the threshold entries; its `eps^3` coefficient is `-m U F` at `+m`.
pub fn predict_dirac_kappa_form(moments: &MomentSet, m: f64, eps: f64, threshold: Threshold) -> Result<Prediction> {
    check_mass(m)?;
    check_eps(eps)?;
    let (u, f) = threshold_entries(moments, threshold)?;
    let s = match threshold {
        Threshold::PlusM => 1.0,
        Threshold::MinusM => -1.0,
    };
    let terms = vec![
        OrderTerm::new(0.0, s * m),
        OrderTerm::new(2.0, -u * u * (s * m / 2.0)),
        OrderTerm::new(3.0, -u * f * (s * m)),
        OrderTerm::new(4.0, -f * f * (s * m / 2.0)),
    ];
    Ok(Prediction::from_terms(eps, terms, ErrorOrder::BigEps4, Source::DiracKappaForm))
}

/// `m + lambdaS` with band `C (sqrt(eps)|lambdaS| + eps^3)`.
pub fn predict_comparison(lambda_s: f64, m: f64, eps: f64) -> Result<Prediction> {
    check_mass(m)?;
    check_eps(eps)?;
    if lambda_s > 0.0 {
        return Err(Error::InvalidParameter(format!("the Schrodinger eigenvalue must be nonpositive, got {lambda_s}")));
    }
    let terms = vec![OrderTerm::new(0.0, m + lambda_s)];
    let mut p = Prediction::from_terms(eps, terms, ErrorOrder::SqrtEpsLambdaPlusEps3, Source::Comparison);
    p.band = Some(eps.sqrt() * lambda_s.abs() + eps.powi(3));
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat2;
    use proptest::prelude::*;

    fn moments(u: [f64; 2], fp11: f64, fm22: f64) -> MomentSet {
        let mut f_plus = Mat2::zeros();
        f_plus[(0, 0)] = C64::from(fp11);
        let mut f_minus = Mat2::zeros();
        f_minus[(1, 1)] = C64::from(fm22);
        MomentSet {
            m: 1.0,
            u: Mat2::new(C64::from(u[0]), C64::from(0.0), C64::from(0.0), C64::from(u[1])),
            f_plus,
            f_minus,
            m1_moment: Mat2::zeros(),
            moment_norms: [None; 3],
            sch_cross: C64::from(0.0),
            certificate: 0.0,
        }
    }

    fn close(a: C64, b: f64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn schrodinger_short_examples() {
        let one = predict_schrodinger_short(C64::from(1.0), C64::from(1.0 / 3.0), 1.0, 0.1, 1).unwrap();
        assert!(close(one.value, -0.005, 1e-15));
        let two = predict_schrodinger_short(C64::from(1.0), C64::from(1.0 / 3.0), 1.0, 0.1, 2).unwrap();
        let direct = -0.5 * (0.1 + 0.25 * 0.01 / 3.0f64).powi(2);
        assert!(close(two.value, direct, 1e-15));
        assert!(close(two.value, -0.0050834, 1e-6));
        assert_eq!(predict_schrodinger_short(C64::from(1.0), C64::from(1.0), 1.0, 0.0, 2).unwrap().value, C64::from(0.0));
        assert!(predict_schrodinger_short(C64::from(1.0), C64::from(1.0), 1.0, 0.1, 3).is_err());
    }

    #[test]
    fn long_range_examples() {
        let l = |eps: f64| -2.0 * eps * eps * eps.ln().powi(2);
        assert!(close(predict_schrodinger_long(1.0, 0.01).unwrap().value, l(0.01), 1e-16));
        assert!(close(predict_schrodinger_long(1.0, 0.01).unwrap().value, -4.2415e-3, 1e-7));
        assert!(close(predict_schrodinger_long(1.0, 0.1).unwrap().value, l(0.1), 1e-16));
        assert!(predict_schrodinger_long(1.0, 1.0 - 1e-12).unwrap().value.norm() < 1e-20);
        assert!(predict_schrodinger_long(1.0, 1.0).is_err());
        assert!(close(predict_dirac_long(1.0, 0.01).unwrap().value, 1.0 + l(0.01), 1e-15));
        assert!(close(predict_dirac_long(2.0, 0.01).unwrap().value, 2.0 + 2.0 * l(0.01), 1e-15));
        assert!(close(predict_dirac_long(1.0, 1e-200).unwrap().value, 1.0, 1e-15));
    }

    #[test]
    fn second_order_examples() {
        let ms = moments([1.0, 0.0], -1.0 / 3.0, 0.0);
        let p = predict_dirac_second_order(&ms, 1.0, 0.1, Threshold::PlusM).unwrap();
        assert!(close(p.value, 1.0 - 0.005 - 0.001 / 3.0, 1e-15));
        assert!(close(p.value, 0.99466667, 1e-8));
        assert_eq!(predict_dirac_second_order(&ms, 1.0, 0.0, Threshold::PlusM).unwrap().value, C64::from(1.0));
        let k = predict_dirac_kappa_form(&ms, 1.0, 0.1, Threshold::PlusM).unwrap();
        let kappa0 = 0.1 - 0.01 / 3.0;
        assert!(close(k.value, 1.0 - kappa0 * kappa0 / 2.0, 1e-15));
        assert!(predict_dirac_second_order(&ms, 1.0, 0.1, Threshold::MinusM).is_err());
        assert!(predict_dirac_second_order(&moments([-1.0, 0.0], 0.0, 0.0), 1.0, 0.1, Threshold::PlusM).is_err());
    }

    #[test]
    fn mirrored_moments_negate_the_prediction() {
        let plus = moments([1.3, 0.0], -0.4, 0.0);
        let minus = moments([0.0, -1.3], 0.0, 0.4);
        for eps in [0.2, 0.05] {
            for f in [predict_dirac_second_order, predict_dirac_kappa_form] {
                let a = f(&plus, 1.0, eps, Threshold::PlusM).unwrap().value;
                let b = f(&minus, 1.0, eps, Threshold::MinusM).unwrap().value;
                assert!((a + b).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn comparison_examples() {
        let p = predict_comparison(0.0, 1.0, 0.1).unwrap();
        assert!(close(p.value, 1.0, 0.0));
        assert!((p.band.unwrap() - 1e-3).abs() < 1e-18);
        let p = predict_comparison(-0.005, 1.0, 0.1).unwrap();
        assert!(close(p.value, 0.995, 1e-16));
        assert!((p.band.unwrap() - (0.1f64.sqrt() * 0.005 + 0.001)).abs() < 1e-16);
        assert!(predict_comparison(0.1, 1.0, 0.1).is_err());
        let band = |eps: f64| predict_comparison(-eps * eps / 2.0, 1.0, eps).unwrap().band.unwrap();
        assert!(band(0.05) < band(0.1) && band(0.025) < band(0.05));
    }

    proptest! {
        #[test]
        fn value_is_the_sum_of_terms(u in 0.01f64..3.0, f in -2.0f64..2.0, cross in -1.0f64..1.0, m in 0.2f64..3.0, eps in 1e-4f64..0.9) {
            let ms = moments([u, -u], f, -f);
            let preds = [
                predict_schrodinger_short(C64::from(u), C64::from(cross), m, eps, 2).unwrap(),
                predict_schrodinger_long(m, eps).unwrap(),
                predict_dirac_long(m, eps).unwrap(),
                predict_dirac_second_order(&ms, m, eps, Threshold::PlusM).unwrap(),
                predict_dirac_kappa_form(&ms, m, eps, Threshold::MinusM).unwrap(),
                predict_comparison(-u * eps * eps, m, eps).unwrap(),
            ];
            for p in &preds {
                prop_assert!((p.value - p.evaluate(eps)).norm() <= 1e-14 * (1.0 + p.value.norm()));
            }
        }

        #[test]
        fn leading_order_matches_schrodinger(u in 0.01f64..3.0, m in 0.2f64..3.0, eps in 1e-4f64..0.5) {
            let ms = moments([u, 0.0], 0.0, 0.0);
            let dirac = predict_dirac_second_order(&ms, m, eps, Threshold::PlusM).unwrap().value - m;
            let sch = predict_schrodinger_short(C64::from(u), C64::from(0.0), m, eps, 1).unwrap().value;
            prop_assert!((dirac - sch).norm() <= 1e-15 * (1.0 + sch.norm()));
        }
    }
}
