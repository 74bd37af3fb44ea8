//! Moment matrices `U = ∫V`, `F^(±)`, the Schrodinger cross moment, and
//! weighted norms, by composite Gauss-Legendre quadrature.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{i_sigma2, op_norm, sgn, sigma3, upper_projection, Mat2, C64};
use crate::potentials::{Decay, PotentialSpec};
use crate::quadrature::{gauss_legendre, graded_edges, tail_bound, truncation_radius, Rule};

/// Which threshold's `Υ_± = m(σ3 ± 1)` enters `F`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

pub const DEFAULT_TOL: f64 = 1e-10;

const ORDER: usize = 16;
const MAX_REFINEMENTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub m: f64,
    #[serde(with = "crate::linalg::mat2_serde")]
    pub u: Mat2,
    #[serde(with = "crate::linalg::mat2_serde")]
    pub f_plus: Mat2,
    #[serde(with = "crate::linalg::mat2_serde")]
    pub f_minus: Mat2,
    /// `∬ V(x) M1(x, y) V(y)` with the limiting Birman-Schwinger kernel
    /// `M1 = -(sgn/2) iσ2 - m|x-y| P+`; its (1,1) entry is the second-order
    /// coefficient of the root `kappa`.
    #[serde(with = "crate::linalg::mat2_serde")]
    pub m1_moment: Mat2,
    /// `∫(1+|x|^k)|V|` for `k = 0, 1, 2`; `None` when the moment diverges.
    pub moment_norms: [Option<f64>; 3],
    /// `∬ V11(x)|x-y|V11(y)`.
    pub sch_cross: C64,
    /// Largest entry change observed when the quadrature was refined.
    pub certificate: f64,
}

/// `Υ_±` as the fixed matrix `m(σ3 ± 1)`.
pub fn upsilon(m: f64, sign: Sign) -> Mat2 {
    let id = Mat2::identity();
    match sign {
        Sign::Plus => (sigma3() + id) * C64::from(m),
        Sign::Minus => (sigma3() - id) * C64::from(m),
    }
}

fn require_moment(v: &PotentialSpec, k: u32) -> Result<()> {
    match v.finite_moments() {
        Some(j) if j >= k => Ok(()),
        _ => Err(Error::NotIntegrable(format!(
            "{}: moment of order {k} is not declared finite",
            v.name()
        ))),
    }
}

struct Panels {
    edges: Vec<f64>,
    rule: Rule,
    values: Vec<Mat2>,
}

impl Panels {
    fn new(v: &PotentialSpec, r: f64, w: f64) -> Self {
        let edges = graded_edges(v, r, w);
        let (t, tw) = gauss_legendre(ORDER);
        let mut rule = Rule::default();
        for p in edges.windows(2) {
            let (c, h) = ((p[0] + p[1]) / 2.0, (p[1] - p[0]) / 2.0);
            rule.nodes.extend(t.iter().map(|s| c + h * s));
            rule.weights.extend(tw.iter().map(|s| s * h));
        }
        let values = rule.nodes.iter().map(|&x| v.eval(x)).collect();
        Self { edges, rule, values }
    }

    fn n_panels(&self) -> usize {
        self.edges.len() - 1
    }
}

fn radius_for(v: &PotentialSpec, k: u32, tol: f64) -> Result<f64> {
    let r = truncation_radius(&v.decay(), k, tol)?;
    Ok(r.max(v.scale()))
}

fn refine<T, F>(mut eval: F, diff: impl Fn(&T, &T) -> f64, tol: f64) -> Result<(T, f64)>
where
    F: FnMut(f64) -> T,
{
    let mut w = 0.5;
    let mut prev = eval(w);
    for _ in 0..MAX_REFINEMENTS {
        w /= 2.0;
        let next = eval(w);
        let d = diff(&prev, &next);
        if d <= tol {
            return Ok((next, d));
        }
        prev = next;
    }
    Err(Error::Convergence(format!("moment quadrature did not settle to {tol:e}")))
}

fn entry_diff(a: &Mat2, b: &Mat2) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `∫ V` with entrywise error at most `tol`.
pub fn compute_u(v: &PotentialSpec, tol: f64) -> Result<Mat2> {
    Ok(compute_u_certified(v, tol)?.0)
}

fn compute_u_certified(v: &PotentialSpec, tol: f64) -> Result<(Mat2, f64)> {
    require_moment(v, 0)?;
    if v.is_zero() {
        return Ok((Mat2::zeros(), 0.0));
    }
    let r = radius_for(v, 0, tol / 10.0)?;
    refine(
        |w| {
            let p = Panels::new(v, r, w);
            p.values.iter().zip(&p.rule.weights).fold(Mat2::zeros(), |acc, (m, &wt)| acc + m * C64::from(wt))
        },
        entry_diff,
        tol / 2.0,
    )
}

/// `∫ (1 + |x|^k) |V|` for `k = 0, 1, 2`, using the operator norm of `V(x)`.
pub fn moment_norms(v: &PotentialSpec, tol: f64) -> Result<[Option<f64>; 3]> {
    let mut out = [None; 3];
    if v.is_zero() {
        return Ok([Some(0.0); 3]);
    }
    for k in 0..3u32 {
        if require_moment(v, k).is_err() {
            continue;
        }
        let r = radius_for(v, k, tol / 10.0)?;
        let (val, _) = refine(
            |w| {
                let p = Panels::new(v, r, w);
                p.rule
                    .nodes
                    .iter()
                    .zip(&p.rule.weights)
                    .zip(&p.values)
                    .map(|((&x, &wt), m)| wt * (1.0 + x.abs().powi(k as i32)) * op_norm(m))
                    .sum::<f64>()
            },
            |a, b| (a - b).abs() / (1.0 + b.abs()),
            tol,
        )?;
        out[k as usize] = Some(val);
    }
    Ok(out)
}

/// `(∬ V(x) sgn(x-y) S V(y), ∬ V(x) |x-y| A V(y))` for fixed matrices
/// `S`, `A`, with the square split along `x = y`.
fn bilinear(v: &PotentialSpec, s: Mat2, a: Mat2, r: f64, w: f64) -> (Mat2, Mat2) {
    let p = Panels::new(v, r, w);
    let n = ORDER;
    let np = p.n_panels();
    let (t, tw) = gauss_legendre(n);
    let rows: Vec<(Mat2, Mat2)> = (0..np)
        .into_par_iter()
        .map(|pi| {
            let mut acc_s = Mat2::zeros();
            let mut acc_a = Mat2::zeros();
            for i in pi * n..(pi + 1) * n {
                let (xi, wi, vi) = (p.rule.nodes[i], p.rule.weights[i], p.values[i]);
                let mut inner_s = Mat2::zeros();
                let mut inner_a = Mat2::zeros();
                for pj in (0..np).filter(|&pj| pj != pi) {
                    let sign = if pj < pi { 1.0 } else { -1.0 };
                    for j in pj * n..(pj + 1) * n {
                        let wv = p.values[j] * C64::from(p.rule.weights[j]);
                        inner_s += wv * C64::from(sign);
                        inner_a += wv * C64::from((xi - p.rule.nodes[j]).abs());
                    }
                }
                acc_s += vi * s * inner_s * C64::from(wi);
                acc_a += vi * a * inner_a * C64::from(wi);
            }
            // Diagonal panel: two triangles mapped from the unit square,
            // x = lo + h u, y = lo + h u v (and x, y swapped).
            let (lo, h) = (p.edges[pi], p.edges[pi + 1] - p.edges[pi]);
            for (ku, &u) in t.iter().enumerate() {
                let u = 0.5 * (u + 1.0);
                for (kv, &vv) in t.iter().enumerate() {
                    let vv = 0.5 * (vv + 1.0);
                    let jac = 0.25 * tw[ku] * tw[kv] * h * h * u;
                    let (x, y) = (lo + h * u, lo + h * u * vv);
                    let (vx, vy) = (v.eval(x), v.eval(y));
                    let d = C64::from((x - y).abs() * jac);
                    let sj = C64::from(sgn(x - y) * jac);
                    // (x, y) and the mirrored pair (y, x).
                    acc_s += vx * s * vy * sj - vy * s * vx * sj;
                    acc_a += (vx * a * vy + vy * a * vx) * d;
                }
            }
            (acc_s, acc_a)
        })
        .collect();
    rows.into_iter().fold((Mat2::zeros(), Mat2::zeros()), |(s0, a0), (s1, a1)| (s0 + s1, a0 + a1))
}

fn bilinear_certified(v: &PotentialSpec, s: Mat2, a: Mat2, m: f64, tol: f64) -> Result<((Mat2, Mat2), f64)> {
    require_moment(v, 1)?;
    if v.is_zero() {
        return Ok(((Mat2::zeros(), Mat2::zeros()), 0.0));
    }
    // |x - y| <= |x| + |y| bounds the cut-off part by (tail_1 M0 + tail_0 M1) terms.
    let m0 = tail_bound(&v.decay(), 0, 0.0).min(v.sup_norm() * 2.0 * v.scale().max(1.0) * 1e3);
    let budget = tol / (10.0 * (1.0 + m) * (1.0 + m0));
    let r = radius_for(v, 1, budget)?;
    refine(
        |w| bilinear(v, s, a, r, w),
        |x, y| entry_diff(&x.0, &y.0).max(entry_diff(&x.1, &y.1)),
        tol / 2.0,
    )
}

/// Sign-kernel and distance-kernel parts of `F^(±)`, summing to `F^(±)`.
pub fn compute_f_parts(v: &PotentialSpec, m: f64, sign: Sign, tol: f64) -> Result<(Mat2, Mat2)> {
    let a = upsilon(m, sign) * C64::from(-0.5);
    Ok(bilinear_certified(v, i_sigma2(), a, m, tol)?.0)
}

/// `F^(±) = ∬ V(x)(sgn(x-y) iσ2 - ½|x-y| Υ_±)V(y)`.
pub fn compute_f(v: &PotentialSpec, m: f64, sign: Sign, tol: f64) -> Result<Mat2> {
    let (s, a) = compute_f_parts(v, m, sign, tol)?;
    Ok(s + a)
}

/// `∬ V(x) M1(x, y) V(y)`.
pub fn compute_m1_moment(v: &PotentialSpec, m: f64, tol: f64) -> Result<Mat2> {
    let s = i_sigma2() * C64::from(-0.5);
    let a = upper_projection() * C64::from(-m);
    let (s, a) = bilinear_certified(v, s, a, m, tol)?.0;
    Ok(s + a)
}

/// `∬ v(x)|x-y|v(y)` for the entry `(i, j)` of `V` (default `V11`).
pub fn compute_sch_cross_entry(v: &PotentialSpec, (i, j): (usize, usize), tol: f64) -> Result<C64> {
    let src = v.clone();
    let scalar = PotentialSpec::new(
        format!("{}[{i}{j}]", v.name()),
        move |x| {
            let mut m = Mat2::zeros();
            m[(0, 0)] = src.entry(i, j, x);
            m
        },
        true,
        v.decay(),
        v.finite_moments(),
        v.breakpoints().to_vec(),
        v.scale(),
    );
    let (_, a) = bilinear_certified(&scalar, Mat2::zeros(), upper_projection(), 0.0, tol)?.0;
    Ok(a[(0, 0)])
}

pub fn compute_sch_cross(v: &PotentialSpec, tol: f64) -> Result<C64> {
    compute_sch_cross_entry(v, (0, 0), tol)
}

/// Every moment at once.
pub fn compute_moments(v: &PotentialSpec, m: f64, tol: f64) -> Result<MomentSet> {
    if !(m > 0.0) {
        return Err(Error::InvalidParameter(format!("mass must be positive, got {m}")));
    }
    let (u, cu) = compute_u_certified(v, tol)?;
    let ((sp, ap), c1) = bilinear_certified(v, i_sigma2(), upsilon(m, Sign::Plus) * C64::from(-0.5), m, tol)?;
    let ((sm, am), c2) = bilinear_certified(v, i_sigma2(), upsilon(m, Sign::Minus) * C64::from(-0.5), m, tol)?;
    let m1_moment = compute_m1_moment(v, m, tol)?;
    Ok(MomentSet {
        m,
        u,
        f_plus: sp + ap,
        f_minus: sm + am,
        m1_moment,
        moment_norms: moment_norms(v, tol)?,
        sch_cross: compute_sch_cross(v, tol)?,
        certificate: cu.max(c1).max(c2),
    })
}

/// Decay helper used by callers that need the truncation radius for a
/// given moment order.
pub fn moment_radius(decay: &Decay, k: u32, tol: f64) -> Result<f64> {
    truncation_radius(decay, k, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, real_mat2};
    use crate::potentials::{make_builtin, Family};

    fn well() -> PotentialSpec {
        make_builtin(Family::SquareWell, &[1.0, 0.0, 1.0]).unwrap()
    }

    /// Brute-force midpoint tensor quadrature on [lo, hi]^2.
    fn brute_force(v: &PotentialSpec, kernel: impl Fn(f64, f64) -> Mat2, lo: f64, hi: f64, n: usize) -> Mat2 {
        let h = (hi - lo) / n as f64;
        let pts: Vec<f64> = (0..n).map(|i| lo + (i as f64 + 0.5) * h).collect();
        let vals: Vec<Mat2> = pts.iter().map(|&x| v.eval(x)).collect();
        let mut acc = Mat2::zeros();
        for (i, &x) in pts.iter().enumerate() {
            for (j, &y) in pts.iter().enumerate() {
                acc += vals[i] * kernel(x, y) * vals[j];
            }
        }
        acc * C64::from(h * h)
    }

    #[test]
    fn u_examples() {
        assert_eq!(compute_u(&PotentialSpec::zero(), 1e-10).unwrap(), Mat2::zeros());
        let u = compute_u(&well(), 1e-10).unwrap();
        assert!((u - real_mat2(1.0, 0.0, 0.0, 0.0)).norm() < 1e-12);
        let g = make_builtin(Family::Gaussian, &[1.0, 0.0, 1.0]).unwrap();
        let u = compute_u(&g, 1e-10).unwrap();
        assert!((u[(0, 0)].re - std::f64::consts::PI.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn f_examples() {
        assert_eq!(compute_f(&PotentialSpec::zero(), 1.0, Sign::Plus, 1e-10).unwrap(), Mat2::zeros());
        let f = compute_f(&well(), 1.0, Sign::Plus, 1e-10).unwrap();
        assert!((f[(0, 0)].re + 1.0 / 3.0).abs() < 1e-10, "{f}");
        let a = make_builtin(Family::CustomMatrix, &[1., 0., 0., 0., 0., 0., 0., 0., 1.0, 0.5]).unwrap();
        let b = make_builtin(Family::CustomMatrix, &[0., 0., 0., 0., 1., 0., 0., 0., 1.0, 1.5]).unwrap();
        let v = a.sum(&b);
        let f = compute_f(&v, 1.0, Sign::Plus, 1e-10).unwrap();
        assert!((f[(0, 0)] - c(-4.0 / 3.0, 0.0)).norm() < 1e-10, "{f}");
        let ups = upsilon(1.0, Sign::Plus);
        let oracle = brute_force(
            &v,
            |x, y| i_sigma2() * C64::from(sgn(x - y)) - ups * C64::from(0.5 * (x - y).abs()),
            0.0,
            2.0,
            800,
        );
        assert!((f - oracle).norm() < 1e-4, "{f} vs {oracle}");
    }

    #[test]
    fn m1_moment_matches_kernel_oracle() {
        let a = make_builtin(Family::CustomMatrix, &[1., 0., 0.3, 0.2, 0.3, -0.2, 0.5, 0., 1.0, 0.2]).unwrap();
        let k = compute_m1_moment(&a, 2.0, 1e-10).unwrap();
        let oracle = brute_force(
            &a,
            |x, y| {
                let s = sgn(x - y);
                real_mat2(-2.0 * (x - y).abs(), -s / 2.0, s / 2.0, 0.0)
            },
            -0.3,
            0.7,
            800,
        );
        assert!((k - oracle).norm() < 1e-5, "{k} vs {oracle}");
    }

    #[test]
    fn sch_cross_examples() {
        assert_eq!(compute_sch_cross(&PotentialSpec::zero(), 1e-10).unwrap(), c(0.0, 0.0));
        let x = compute_sch_cross(&well(), 1e-10).unwrap();
        assert!((x.re - 1.0 / 3.0).abs() < 1e-10);
        let g = make_builtin(Family::Gaussian, &[1.0, 0.0, 1.0]).unwrap();
        let x = compute_sch_cross(&g, 1e-10).unwrap();
        // ∬ exp(-x^2 - y^2)|x - y| = sqrt(2 pi): x - y ~ N(0, 1) scaled by pi.
        assert!((x.re - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-9, "{x}");
    }

    #[test]
    fn moment_set_for_well() {
        let ms = compute_moments(&well(), 1.0, 1e-10).unwrap();
        assert!((ms.moment_norms[0].unwrap() - 2.0).abs() < 1e-10);
        assert!((ms.moment_norms[1].unwrap() - 1.25).abs() < 1e-10);
        assert!((ms.moment_norms[2].unwrap() - (1.0 + 1.0 / 12.0)).abs() < 1e-10);
        assert!((ms.f_minus[(1, 1)]).norm() < 1e-12);
        assert!((ms.m1_moment[(0, 0)].re + 1.0 / 3.0).abs() < 1e-10);
        assert!(ms.certificate <= 1e-10);
    }

    #[test]
    fn coulomb_tail_is_rejected() {
        let ct = make_builtin(Family::CoulombTail, &[]).unwrap();
        assert!(matches!(compute_u(&ct, 1e-8), Err(Error::NotIntegrable(_))));
        assert!(matches!(compute_f(&ct, 1.0, Sign::Plus, 1e-8), Err(Error::NotIntegrable(_))));
        assert_eq!(moment_norms(&ct, 1e-8).unwrap(), [None, None, None]);
        let cut = make_builtin(Family::CoulombTail, &[4.0]).unwrap();
        assert!(compute_u(&cut, 1e-8).unwrap()[(0, 0)].re > 1.0);
    }
}
