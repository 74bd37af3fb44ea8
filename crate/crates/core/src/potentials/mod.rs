//! Matrix potentials on the line, built-in families, and the pointwise
//! polar factorization `V = B* A`.

mod families;
mod hypotheses;
mod tabulated;

pub use families::{make_builtin, Family, FamilyRegistry, PotentialFamily};
pub use hypotheses::{check_hypotheses, HypothesisCheck, HypothesisReport, Theorem};
pub use tabulated::load_tabulated;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::linalg::{op_norm, sigma1, Mat2, C64};

/// Declared decay of `|V(x)|` at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Decay {
    /// `V = 0` outside `[-radius, radius]`.
    Compact { radius: f64 },
    /// `|V(x)| <= constant * (1 + |x|)^(-exponent)`.
    Polynomial { exponent: f64, constant: f64 },
    /// `|V(x)| <= constant * exp(-rate * |x|)`.
    Exponential { rate: f64, constant: f64 },
}

impl Decay {
    /// Pointwise bound on `|V(x)|` implied by the declaration.
    pub fn bound(&self, x: f64) -> f64 {
        match *self {
            Decay::Compact { radius } => {
                if x.abs() > radius {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            Decay::Polynomial { exponent, constant } => constant * (1.0 + x.abs()).powf(-exponent),
            Decay::Exponential { rate, constant } => constant * (-rate * x.abs()).exp(),
        }
    }

    pub fn exponential_rate(&self) -> Option<f64> {
        match *self {
            Decay::Compact { .. } => Some(f64::INFINITY),
            Decay::Exponential { rate, .. } => Some(rate),
            Decay::Polynomial { .. } => None,
        }
    }
}

type EvalFn = dyn Fn(f64) -> Mat2 + Send + Sync;

/// A 2x2 complex matrix-valued potential with decay metadata.
#[derive(Clone)]
pub struct PotentialSpec {
    name: String,
    eval: Arc<EvalFn>,
    hermitian: bool,
    decay: Decay,
    finite_moments: Option<u32>,
    breakpoints: Vec<f64>,
    scale: f64,
    sup_norm: f64,
}

impl fmt::Debug for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PotentialSpec")
            .field("name", &self.name)
            .field("hermitian", &self.hermitian)
            .field("decay", &self.decay)
            .field("finite_moments", &self.finite_moments)
            .field("breakpoints", &self.breakpoints)
            .field("scale", &self.scale)
            .field("sup_norm", &self.sup_norm)
            .finish()
    }
}

impl PotentialSpec {
    /// Wrap an evaluation map. `breakpoints` lists the points where `V` or
    /// its derivative jumps; `scale` is a characteristic length.
    pub fn new<F>(
        name: impl Into<String>,
        eval: F,
        hermitian: bool,
        decay: Decay,
        finite_moments: Option<u32>,
        breakpoints: Vec<f64>,
        scale: f64,
    ) -> Self
    where
        F: Fn(f64) -> Mat2 + Send + Sync + 'static,
    {
        let mut breakpoints = breakpoints;
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        let mut spec = Self {
            name: name.into(),
            eval: Arc::new(eval),
            hermitian,
            decay,
            finite_moments,
            breakpoints,
            scale,
            sup_norm: 0.0,
        };
        spec.sup_norm = spec.sampled_sup_norm();
        spec
    }

    pub fn zero() -> Self {
        Self::new("zero", |_| Mat2::zeros(), true, Decay::Compact { radius: 0.0 }, Some(2), vec![], 1.0)
    }

    pub fn eval(&self, x: f64) -> Mat2 {
        (self.eval)(x)
    }

    pub fn entry(&self, i: usize, j: usize, x: f64) -> C64 {
        self.eval(x)[(i, j)]
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn decay(&self) -> Decay {
        self.decay
    }

    pub fn finite_moments(&self) -> Option<u32> {
        self.finite_moments
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `sup_x |V(x)|` in operator norm.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn is_zero(&self) -> bool {
        self.sup_norm == 0.0
    }

    /// Radius beyond which the potential vanishes, if it has compact support.
    pub fn support_radius(&self) -> Option<f64> {
        match self.decay {
            Decay::Compact { radius } => Some(radius),
            _ => None,
        }
    }

    pub(crate) fn with_sup_norm(mut self, sup_norm: f64) -> Self {
        self.sup_norm = sup_norm;
        self
    }

    fn sample_points(&self) -> Vec<f64> {
        let reach = match self.decay {
            Decay::Compact { radius } => radius,
            _ => 10.0 * self.scale,
        };
        let n = 4000;
        let mut xs: Vec<f64> =
            (0..=n).map(|i| -reach + 2.0 * reach * i as f64 / n as f64).collect();
        for &b in &self.breakpoints {
            let d = 1e-9 * (1.0 + b.abs());
            xs.extend([b - d, b, b + d]);
        }
        xs
    }

    fn sampled_sup_norm(&self) -> f64 {
        self.sample_points().into_iter().map(|x| op_norm(&self.eval(x))).fold(0.0, f64::max)
    }

    /// Largest sampled deviation `|V(x) - V(x)*|`.
    pub fn hermitian_defect(&self) -> f64 {
        self.sample_points()
            .into_iter()
            .map(|x| {
                let v = self.eval(x);
                op_norm(&(v - v.adjoint()))
            })
            .fold(0.0, f64::max)
    }

    /// `sigma_1 V sigma_1`: swaps the diagonal entries and the off-diagonal
    /// entries (without conjugation).
    pub fn sigma1_conjugate(&self) -> Self {
        let f = self.eval.clone();
        let s = sigma1();
        let mut out = self.derived(format!("sigma1({})", self.name), move |x| s * f(x) * s);
        out.sup_norm = self.sup_norm;
        out
    }

    /// `c * V`.
    pub fn scaled(&self, c: C64) -> Self {
        let f = self.eval.clone();
        let mut out = self.derived(format!("({c})*{}", self.name), move |x| f(x) * c);
        out.hermitian = self.hermitian && c.im == 0.0;
        out.sup_norm = self.sup_norm * c.norm();
        out.decay = scale_decay(self.decay, c.norm());
        out
    }

    pub fn negated(&self) -> Self {
        self.scaled(C64::new(-1.0, 0.0))
    }

    /// Pointwise sum of two potentials.
    pub fn sum(&self, other: &PotentialSpec) -> Self {
        let (f, g) = (self.eval.clone(), other.eval.clone());
        let decay = match (self.decay, other.decay) {
            (Decay::Compact { radius: a }, Decay::Compact { radius: b }) => {
                Decay::Compact { radius: a.max(b) }
            }
            (a, b) => weaker_decay(a, b),
        };
        let finite_moments = match (self.finite_moments, other.finite_moments) {
            (Some(a), Some(b)) => Some(a.min(b)),
            _ => None,
        };
        let breakpoints = self.breakpoints.iter().chain(&other.breakpoints).copied().collect();
        Self::new(
            format!("{}+{}", self.name, other.name),
            move |x| f(x) + g(x),
            self.hermitian && other.hermitian,
            decay,
            finite_moments,
            breakpoints,
            self.scale.max(other.scale),
        )
    }

    fn derived<F>(&self, name: String, eval: F) -> Self
    where
        F: Fn(f64) -> Mat2 + Send + Sync + 'static,
    {
        Self {
            name,
            eval: Arc::new(eval),
            hermitian: self.hermitian,
            decay: self.decay,
            finite_moments: self.finite_moments,
            breakpoints: self.breakpoints.clone(),
            scale: self.scale,
            sup_norm: self.sup_norm,
        }
    }
}

fn scale_decay(d: Decay, c: f64) -> Decay {
    match d {
        Decay::Compact { .. } => d,
        Decay::Polynomial { exponent, constant } => Decay::Polynomial { exponent, constant: constant * c },
        Decay::Exponential { rate, constant } => Decay::Exponential { rate, constant: constant * c },
    }
}

fn weaker_decay(a: Decay, b: Decay) -> Decay {
    use Decay::*;
    match (a, b) {
        (Compact { .. }, other) | (other, Compact { .. }) => other,
        (Polynomial { exponent: p, constant: c }, Polynomial { exponent: q, constant: d }) => {
            Polynomial { exponent: p.min(q), constant: c + d }
        }
        (Polynomial { exponent, constant }, Exponential { rate, constant: d })
        | (Exponential { rate, constant: d }, Polynomial { exponent, constant }) => {
            // e^{-a t} <= (p / (a e))^p (1+t)^{-p} e^{a}
            let k = (exponent / (rate * std::f64::consts::E)).powf(exponent) * rate.exp();
            Polynomial { exponent, constant: constant + d * k }
        }
        (Exponential { rate: a, constant: c }, Exponential { rate: b, constant: d }) => {
            Exponential { rate: a.min(b), constant: c + d }
        }
    }
}

/// Pointwise factors `A = |V|^{1/2}` and `B* = U_V |V|^{1/2}` of a matrix,
/// from its singular value decomposition `V = W S X*`:
/// `A = X S^{1/2} X*`, `B* = W S^{1/2} X*`.
pub fn polar_factors(v: &Mat2) -> (Mat2, Mat2) {
    let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return (Mat2::zeros(), Mat2::zeros());
    }
    let svd = v.svd(true, true);
    let (w, xt) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let s_max = svd.singular_values.max();
    let root = Mat2::from_diagonal(&svd.singular_values.map(|s| {
        if s <= 1e-15 * s_max {
            C64::new(0.0, 0.0)
        } else {
            C64::new(s.sqrt(), 0.0)
        }
    }));
    let a = xt.adjoint() * root * xt;
    let bstar = w * root * xt;
    (a, bstar)
}

/// A potential together with its pointwise polar factorization.
#[derive(Debug, Clone)]
pub struct FactorizedPotential {
    pub potential: PotentialSpec,
}

impl FactorizedPotential {
    /// `(A(x), B*(x))`.
    pub fn factors(&self, x: f64) -> (Mat2, Mat2) {
        polar_factors(&self.potential.eval(x))
    }

    pub fn a(&self, x: f64) -> Mat2 {
        self.factors(x).0
    }

    pub fn bstar(&self, x: f64) -> Mat2 {
        self.factors(x).1
    }
}

pub fn factorize(v: &PotentialSpec) -> FactorizedPotential {
    FactorizedPotential { potential: v.clone() }
}
