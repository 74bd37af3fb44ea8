use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Decay, PotentialSpec};
use crate::error::{Error, Result};
use crate::linalg::{c, op_norm, Mat2, C64};

/// Names of the built-in potential families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    SquareWell,
    Gaussian,
    CoulombTail,
    TwoBump,
    CustomMatrix,
}

impl Family {
    pub const ALL: [Family; 5] =
        [Family::SquareWell, Family::Gaussian, Family::CoulombTail, Family::TwoBump, Family::CustomMatrix];

    pub fn as_str(&self) -> &'static str {
        match self {
            Family::SquareWell => "square_well",
            Family::Gaussian => "gaussian",
            Family::CoulombTail => "coulomb_tail",
            Family::TwoBump => "two_bump",
            Family::CustomMatrix => "custom_matrix",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown potential family `{s}`")))
    }
}

/// A constructor for a parametrized family of potentials.
pub trait PotentialFamily: Send + Sync {
    fn name(&self) -> &'static str;

    /// One-line description of the parameter list.
    fn params_help(&self) -> &'static str;

    fn build(&self, params: &[f64]) -> Result<PotentialSpec>;
}

/// Name-keyed registry of potential families.
pub struct FamilyRegistry {
    families: BTreeMap<&'static str, Box<dyn PotentialFamily>>,
}

impl Default for FamilyRegistry {
    fn default() -> Self {
        let mut reg = Self { families: BTreeMap::new() };
        reg.register(Box::new(SquareWell));
        reg.register(Box::new(Gaussian));
        reg.register(Box::new(CoulombTail));
        reg.register(Box::new(TwoBump));
        reg.register(Box::new(CustomMatrix));
        reg
    }
}

impl FamilyRegistry {
    pub fn register(&mut self, family: Box<dyn PotentialFamily>) {
        self.families.insert(family.name(), family);
    }

    pub fn get(&self, name: &str) -> Result<&dyn PotentialFamily> {
        self.families
            .get(name)
            .map(|f| f.as_ref())
            .ok_or_else(|| Error::InvalidParameter(format!("unknown potential family `{name}`")))
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.families.keys().copied()
    }

    pub fn build(&self, name: &str, params: &[f64]) -> Result<PotentialSpec> {
        self.get(name)?.build(params)
    }
}

/// Build a potential from the default registry.
pub fn make_builtin(family: Family, params: &[f64]) -> Result<PotentialSpec> {
    FamilyRegistry::default().build(family.as_str(), params)
}

fn expect_len(name: &str, params: &[f64], allowed: &[usize]) -> Result<()> {
    if !allowed.contains(&params.len()) {
        return Err(Error::InvalidParameter(format!(
            "{name} takes {allowed:?} parameters, got {}",
            params.len()
        )));
    }
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidParameter(format!("{name}: parameters must be finite")));
    }
    Ok(())
}

fn positive(name: &str, what: &str, v: f64) -> Result<f64> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!("{name}: {what} must be positive, got {v}")))
    }
}

fn diag(a: f64, b: f64) -> Mat2 {
    Mat2::new(c(a, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(b, 0.0))
}

fn indicator(x: f64, center: f64, half: f64) -> bool {
    (x - center).abs() <= half
}

/// `diag(a, b)` on `[-w/2, w/2]`. Params: `[a, b, w]`.
struct SquareWell;

impl PotentialFamily for SquareWell {
    fn name(&self) -> &'static str {
        "square_well"
    }

    fn params_help(&self) -> &'static str {
        "[v11, v22, width]: diag(v11, v22) on [-width/2, width/2]"
    }

    fn build(&self, p: &[f64]) -> Result<PotentialSpec> {
        expect_len(self.name(), p, &[3])?;
        let half = positive(self.name(), "width", p[2])? / 2.0;
        let m = diag(p[0], p[1]);
        let spec = PotentialSpec::new(
            format!("square_well({}, {}, {})", p[0], p[1], p[2]),
            move |x| if indicator(x, 0.0, half) { m } else { Mat2::zeros() },
            true,
            Decay::Compact { radius: half },
            Some(2),
            vec![-half, half],
            half,
        );
        Ok(spec.with_sup_norm(p[0].abs().max(p[1].abs())))
    }
}

/// `diag(a, b) exp(-(x/w)^2)`. Params: `[a, b, w]`.
struct Gaussian;

impl PotentialFamily for Gaussian {
    fn name(&self) -> &'static str {
        "gaussian"
    }

    fn params_help(&self) -> &'static str {
        "[v11, v22, width]: diag(v11, v22) * exp(-(x/width)^2)"
    }

    fn build(&self, p: &[f64]) -> Result<PotentialSpec> {
        expect_len(self.name(), p, &[3])?;
        let w = positive(self.name(), "width", p[2])?;
        let m = diag(p[0], p[1]);
        let amp = p[0].abs().max(p[1].abs());
        // exp(-t^2) <= exp(4 - 4t) since (t - 2)^2 >= 0.
        let decay = Decay::Exponential { rate: 4.0 / w, constant: amp * 4f64.exp() };
        let spec = PotentialSpec::new(
            format!("gaussian({}, {}, {})", p[0], p[1], p[2]),
            move |x| m * C64::from((-(x / w).powi(2)).exp()),
            true,
            decay,
            Some(2),
            vec![],
            w,
        );
        Ok(spec.with_sup_norm(amp))
    }
}

/// `V11 = 1/(1+|x|)`, optionally times the cutoff `exp(-(|x|/R)^4)`.
/// Params: `[]` or `[R]`.
struct CoulombTail;

impl PotentialFamily for CoulombTail {
    fn name(&self) -> &'static str {
        "coulomb_tail"
    }

    fn params_help(&self) -> &'static str {
        "[] or [R]: V11 = 1/(1+|x|), optionally times exp(-(|x|/R)^4)"
    }

    fn build(&self, p: &[f64]) -> Result<PotentialSpec> {
        expect_len(self.name(), p, &[0, 1])?;
        let spec = match p.first() {
            None => PotentialSpec::new(
                "coulomb_tail",
                |x: f64| diag(1.0 / (1.0 + x.abs()), 0.0),
                true,
                Decay::Polynomial { exponent: 1.0, constant: 1.0 },
                None,
                vec![0.0],
                1.0,
            ),
            Some(&r) => {
                let r = positive(self.name(), "cutoff radius", r)?;
                // t^4 >= t - 1 for t >= 0, so the cutoff is below e * exp(-|x|/R).
                PotentialSpec::new(
                    format!("coulomb_tail(R={r})"),
                    move |x: f64| diag((-(x.abs() / r).powi(4)).exp() / (1.0 + x.abs()), 0.0),
                    true,
                    Decay::Exponential { rate: 1.0 / r, constant: std::f64::consts::E },
                    Some(2),
                    vec![0.0],
                    r,
                )
            }
        };
        Ok(spec.with_sup_norm(1.0))
    }
}

/// `V11 = a 1_{|x + s/2| <= w/2} + b 1_{|x - s/2| <= w/2}`.
/// Params: `[a, b, w, s]`.
struct TwoBump;

impl PotentialFamily for TwoBump {
    fn name(&self) -> &'static str {
        "two_bump"
    }

    fn params_help(&self) -> &'static str {
        "[a, b, width, separation]: V11 = a on the left bump + b on the right bump"
    }

    fn build(&self, p: &[f64]) -> Result<PotentialSpec> {
        expect_len(self.name(), p, &[4])?;
        let half = positive(self.name(), "width", p[2])? / 2.0;
        let s = positive(self.name(), "separation", p[3])? / 2.0;
        let (a, b) = (p[0], p[1]);
        let spec = PotentialSpec::new(
            format!("two_bump({a}, {b}, {}, {})", p[2], p[3]),
            move |x| {
                let mut v = 0.0;
                if indicator(x, -s, half) {
                    v += a;
                }
                if indicator(x, s, half) {
                    v += b;
                }
                diag(v, 0.0)
            },
            true,
            Decay::Compact { radius: s + half },
            Some(2),
            vec![-s - half, -s + half, s - half, s + half],
            s + half,
        );
        let overlap = if half >= s { (a + b).abs() } else { 0.0 };
        Ok(spec.with_sup_norm(a.abs().max(b.abs()).max(overlap)))
    }
}

/// A constant complex matrix on `[c - w/2, c + w/2]`.
/// Params: `[re11, im11, re12, im12, re21, im21, re22, im22, w]` plus an
/// optional center `c` (default 0).
struct CustomMatrix;

impl PotentialFamily for CustomMatrix {
    fn name(&self) -> &'static str {
        "custom_matrix"
    }

    fn params_help(&self) -> &'static str {
        "[re11, im11, re12, im12, re21, im21, re22, im22, width(, center)]: constant matrix on a box"
    }

    fn build(&self, p: &[f64]) -> Result<PotentialSpec> {
        expect_len(self.name(), p, &[9, 10])?;
        let half = positive(self.name(), "width", p[8])? / 2.0;
        let center = p.get(9).copied().unwrap_or(0.0);
        let m = Mat2::new(c(p[0], p[1]), c(p[2], p[3]), c(p[4], p[5]), c(p[6], p[7]));
        let hermitian = (m - m.adjoint()).norm() == 0.0;
        let spec = PotentialSpec::new(
            format!("custom_matrix({p:?})"),
            move |x| if indicator(x, center, half) { m } else { Mat2::zeros() },
            hermitian,
            Decay::Compact { radius: center.abs() + half },
            Some(2),
            vec![center - half, center + half],
            center.abs() + half,
        );
        Ok(spec.with_sup_norm(op_norm(&m)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::real_mat2;

    #[test]
    fn builtin_examples() {
        let sw = make_builtin(Family::SquareWell, &[1.0, 0.0, 1.0]).unwrap();
        assert_eq!(sw.eval(0.0), real_mat2(1.0, 0.0, 0.0, 0.0));
        assert_eq!(sw.eval(0.75), Mat2::zeros());
        assert_eq!(sw.support_radius(), Some(0.5));
        let ct = make_builtin(Family::CoulombTail, &[]).unwrap();
        assert_eq!(ct.eval(3.0), real_mat2(0.25, 0.0, 0.0, 0.0));
        assert_eq!(ct.finite_moments(), None);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(matches!(make_builtin(Family::SquareWell, &[1.0, 0.0, -1.0]), Err(Error::InvalidParameter(_))));
        assert!(make_builtin(Family::Gaussian, &[1.0, 0.0, 0.0]).is_err());
        assert!(make_builtin(Family::CoulombTail, &[-2.0]).is_err());
        assert!(make_builtin(Family::TwoBump, &[1.0]).is_err());
        assert!(make_builtin(Family::CustomMatrix, &[f64::NAN; 9]).is_err());
        assert!("bogus".parse::<Family>().is_err());
        assert_eq!("two_bump".parse::<Family>().unwrap(), Family::TwoBump);
    }

    #[test]
    fn registry_lists_every_family() {
        let reg = FamilyRegistry::default();
        let names: Vec<_> = reg.names().collect();
        for f in Family::ALL {
            assert!(names.contains(&f.as_str()));
        }
    }

    #[test]
    fn declared_decay_holds_beyond_scale() {
        let cases = [
            make_builtin(Family::Gaussian, &[1.0, -0.5, 1.3]).unwrap(),
            make_builtin(Family::CoulombTail, &[]).unwrap(),
            make_builtin(Family::CoulombTail, &[5.0]).unwrap(),
            make_builtin(Family::TwoBump, &[1.0, 2.0, 0.5, 3.0]).unwrap(),
        ];
        for v in &cases {
            for i in 0..400 {
                let x = v.scale() * (1.0 + i as f64 * 0.1);
                for x in [x, -x] {
                    assert!(op_norm(&v.eval(x)) <= v.decay().bound(x) * (1.0 + 1e-12), "{}", v.name());
                }
            }
        }
    }
}
