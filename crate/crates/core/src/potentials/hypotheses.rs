use serde::{Deserialize, Serialize};

use super::{Decay, PotentialSpec};
use crate::linalg::op_norm;

/// Result statements whose hypotheses can be checked by sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    /// Dirac long-range leading term.
    ThmLongRange,
    /// Dirac versus Schrodinger comparison.
    PropComparison,
    /// Two-term short-range Dirac expansion.
    ThmSecondOrder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub passed: bool,
    /// Sample point where the check failed.
    pub witness: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub theorem: Theorem,
    pub checks: Vec<HypothesisCheck>,
}

impl HypothesisReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Symmetric geometric sample grid reaching `10 * scale`.
fn geometric_samples(scale: f64) -> Vec<f64> {
    let n = 200;
    let mut xs = vec![0.0];
    for i in 0..=n {
        let t = -3.0 + 4.0 * i as f64 / n as f64;
        let x = scale * 10f64.powf(t);
        xs.push(x);
        xs.push(-x);
    }
    xs
}

fn pass(name: &str, detail: impl Into<String>) -> HypothesisCheck {
    HypothesisCheck { name: name.into(), passed: true, witness: None, detail: detail.into() }
}

fn fail(name: &str, witness: Option<f64>, detail: impl Into<String>) -> HypothesisCheck {
    HypothesisCheck { name: name.into(), passed: false, witness, detail: detail.into() }
}

/// Checks that `weight(x) * f(x)` stays bounded: the sampled value in the
/// outer decade may not exceed twice the maximum over the inner samples.
/// Returns the worst outer point on failure, and the fitted constant.
fn weighted_bounded(xs: &[f64], scale: f64, f: impl Fn(f64) -> f64) -> (Option<f64>, f64) {
    let inner = xs.iter().filter(|x| x.abs() <= scale).map(|&x| f(x)).fold(0.0, f64::max);
    let mut worst = None;
    let mut worst_val = 0.0;
    let mut overall: f64 = inner;
    for &x in xs.iter().filter(|x| x.abs() > scale) {
        let v = f(x);
        overall = overall.max(v);
        if v > 2.0 * inner + 1e-12 && v > worst_val {
            worst_val = v;
            worst = Some(x);
        }
    }
    (worst, overall)
}

fn check_hermitian(v: &PotentialSpec, xs: &[f64]) -> HypothesisCheck {
    let bad = xs.iter().copied().find(|&x| {
        let m = v.eval(x);
        op_norm(&(m - m.adjoint())) > 1e-14 * (1.0 + op_norm(&m))
    });
    match bad {
        None => pass("hermitian", "V(x) = V(x)* at all samples"),
        Some(x) => fail("hermitian", Some(x), "V(x) differs from its adjoint"),
    }
}

fn check_bounded(v: &PotentialSpec) -> HypothesisCheck {
    if v.sup_norm().is_finite() {
        pass("bounded", format!("sup |V| = {}", v.sup_norm()))
    } else {
        fail("bounded", None, "V is unbounded")
    }
}

fn check_decay_bound(v: &PotentialSpec, xs: &[f64]) -> HypothesisCheck {
    let reach = match v.decay() {
        Decay::Compact { radius } => radius,
        _ => v.scale(),
    };
    let bad = xs
        .iter()
        .copied()
        .filter(|x| x.abs() > reach)
        .find(|&x| op_norm(&v.eval(x)) > v.decay().bound(x) * (1.0 + 1e-12));
    match bad {
        None => pass("decay_bound", format!("declared decay {:?} holds", v.decay())),
        Some(x) => fail("decay_bound", Some(x), format!("|V| exceeds the declared {:?}", v.decay())),
    }
}

/// Samples the hypotheses of the chosen result. Failures are reported, not
/// raised.
pub fn check_hypotheses(v: &PotentialSpec, theorem: Theorem) -> HypothesisReport {
    let scale = v.scale().max(1e-3);
    let xs = geometric_samples(scale);
    let mut checks = Vec::new();
    match theorem {
        Theorem::ThmSecondOrder => {
            checks.push(check_decay_bound(v, &xs));
            let outer = *xs.iter().max_by(|a, b| a.total_cmp(b)).unwrap();
            checks.push(match v.finite_moments() {
                Some(k) if k >= 2 => pass("second_moment", format!("moments up to order {k} declared finite")),
                Some(k) => fail("second_moment", Some(outer), format!("only moments up to order {k} are finite")),
                None => fail("second_moment", Some(outer), "∫(1+|x|^2)|V| diverges"),
            });
        }
        Theorem::ThmLongRange => {
            let nu = 0.5;
            checks.push(check_hermitian(v, &xs));
            checks.push(check_bounded(v));
            let (bad, c1) = weighted_bounded(&xs, scale, |x| v.entry(0, 0, x).norm() * (1.0 + x.abs()));
            checks.push(match bad {
                None => pass("v11_coulomb_bound", format!("C1 ≈ {c1:.3e}")),
                Some(x) => fail("v11_coulomb_bound", Some(x), "(1+|x|)|V11| grows"),
            });
            let (bad, c2) = weighted_bounded(&xs, scale, |x| {
                (v.entry(0, 0, x) - 1.0 / (1.0 + x.abs())).norm() * (1.0 + x.abs()).powf(1.0 + nu)
            });
            checks.push(match bad {
                None => pass("v11_coulomb_tail", format!("C2 ≈ {c2:.3e} with nu = {nu}")),
                Some(x) => fail("v11_coulomb_tail", Some(x), format!("V11 - 1/(1+|x|) decays slower than |x|^-{}", 1.0 + nu)),
            });
            let (bad, c3) = weighted_bounded(&xs, scale, |x| v.entry(0, 1, x).re.powi(2) * (1.0 + x.abs()));
            checks.push(match bad {
                None => pass("re_v12_bound", format!("C3 ≈ {c3:.3e}")),
                Some(x) => fail("re_v12_bound", Some(x), "(Re V12)^2 (1+|x|) grows"),
            });
        }
        Theorem::PropComparison => {
            checks.push(check_hermitian(v, &xs));
            checks.push(check_bounded(v));
            let bad = xs.iter().copied().find(|&x| {
                let re12 = v.entry(0, 1, x).re;
                re12 != 0.0 && v.entry(0, 0, x).re <= 0.0
            });
            checks.push(match bad {
                None => pass("re_v12_dominated", "(Re V12)^2 vanishes wherever V11 <= 0"),
                Some(x) => fail("re_v12_dominated", Some(x), "Re V12 nonzero where V11 <= 0"),
            });
            let positive_somewhere = xs.iter().any(|&x| v.entry(0, 0, x).re > 0.0);
            checks.push(if positive_somewhere {
                pass("v11_attractive", "V11 > 0 somewhere")
            } else {
                fail("v11_attractive", None, "V11 <= 0 everywhere sampled")
            });
        }
    }
    HypothesisReport { theorem, checks }
}
