//! Gauss-Legendre rules, composite panels aligned to breakpoints, and
//! truncation radii derived from declared decay.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::{Decay, PotentialSpec};

/// Nodes and weights of the `n`-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// A one-dimensional quadrature rule.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<T, F>(&self, f: F) -> T
    where
        T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default,
        F: Fn(f64) -> T,
    {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(T::default(), |acc, (&x, &w)| acc + f(x) * w)
    }

    /// Gauss-Legendre rule mapped to [a, b].
    pub fn on_interval(a: f64, b: f64, order: usize) -> Rule {
        let (x, w) = gauss_legendre(order);
        let (c, h) = ((a + b) / 2.0, (b - a) / 2.0);
        Rule {
            nodes: x.iter().map(|t| c + h * t).collect(),
            weights: w.iter().map(|v| v * h).collect(),
        }
    }
}

/// Composite rule on [a, b]: panels break at every breakpoint inside the
/// interval and are further split so no panel is wider than `max_width`.
/// Panel boundaries are returned alongside the rule.
pub fn composite(
    a: f64,
    b: f64,
    breakpoints: &[f64],
    max_width: f64,
    order: usize,
) -> (Rule, Vec<f64>) {
    let edges = panel_edges(a, b, breakpoints, max_width);
    let (x, w) = gauss_legendre(order);
    let mut rule = Rule::default();
    for p in edges.windows(2) {
        let (c, h) = ((p[0] + p[1]) / 2.0, (p[1] - p[0]) / 2.0);
        rule.nodes.extend(x.iter().map(|t| c + h * t));
        rule.weights.extend(w.iter().map(|v| v * h));
    }
    (rule, edges)
}

pub fn panel_edges(a: f64, b: f64, breakpoints: &[f64], max_width: f64) -> Vec<f64> {
    assert!(b > a && max_width > 0.0);
    let mut cuts: Vec<f64> = std::iter::once(a)
        .chain(breakpoints.iter().copied().filter(|&t| t > a && t < b))
        .chain(std::iter::once(b))
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|p, q| (*p - *q).abs() <= 1e-14 * (1.0 + q.abs()));
    let mut edges = vec![cuts[0]];
    for seg in cuts.windows(2) {
        let k = ((seg[1] - seg[0]) / max_width).ceil().max(1.0) as usize;
        for j in 1..=k {
            edges.push(seg[0] + (seg[1] - seg[0]) * j as f64 / k as f64);
        }
    }
    edges
}

/// Panel edges on `[-r, r]` for a potential: uniform panels of width at
/// most `w` over the core (breakpoints and characteristic scale), then
/// geometrically graded panels beyond it.
pub fn graded_edges(v: &PotentialSpec, r: f64, w: f64) -> Vec<f64> {
    let core = v
        .breakpoints()
        .iter()
        .fold(v.scale(), |acc, b| acc.max(b.abs()))
        .min(r)
        .max(w / 2.0);
    let mut right = vec![];
    let mut x = core;
    while x < r * (1.0 - 1e-14) {
        let step = w.max(0.25 * x).min(r - x);
        x += step;
        right.push(x);
    }
    let mut edges: Vec<f64> = right.iter().rev().map(|x| -x).collect();
    edges.extend(panel_edges(-core, core, v.breakpoints(), w));
    edges.extend(right);
    edges.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    edges
}

/// Quadrature parameters shared by the moment and Nystrom routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadSpec {
    /// Gauss-Legendre points per panel.
    pub order: usize,
    /// Largest allowed panel width.
    pub panel_width: f64,
    /// Explicit truncation radius; derived from the decay metadata when absent.
    pub trunc_radius: Option<f64>,
    /// Tail budget used when the radius is derived.
    pub tail_tol: f64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self { order: 16, panel_width: 0.5, trunc_radius: None, tail_tol: 1e-12 }
    }
}

/// Upper bound on `∫_{|x|>r} |x|^k |V(x)| dx` from the declared decay.
pub fn tail_bound(decay: &Decay, k: u32, r: f64) -> f64 {
    let k = k as f64;
    match *decay {
        Decay::Compact { radius } => {
            if r >= radius {
                0.0
            } else {
                f64::INFINITY
            }
        }
        Decay::Polynomial { exponent, constant } => {
            // |V| <= C (1+|x|)^{-p}, and |x|^k <= (1+|x|)^k.
            let q = exponent - k - 1.0;
            if q <= 0.0 {
                f64::INFINITY
            } else {
                2.0 * constant * (1.0 + r).powf(-q) / q
            }
        }
        Decay::Exponential { rate, constant } => {
            2.0 * constant * (-rate * r).exp() * (r + k / rate).powf(k) / rate
        }
    }
}

/// Smallest radius whose `k`-th moment tail is below `tol`.
pub fn truncation_radius(decay: &Decay, k: u32, tol: f64) -> Result<f64> {
    match *decay {
        Decay::Compact { radius } => Ok(radius),
        _ => {
            if tail_bound(decay, k, 0.0).is_infinite() {
                return Err(Error::NotIntegrable(format!(
                    "moment of order {k} diverges for decay {decay:?}"
                )));
            }
            let mut hi = 1.0;
            while tail_bound(decay, k, hi) > tol {
                hi *= 2.0;
                if hi > 1e12 {
                    return Err(Error::Truncation { radius: hi, tail: tail_bound(decay, k, hi), tol });
                }
            }
            let mut lo = 0.0;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if tail_bound(decay, k, mid) > tol {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(hi)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1, 2, 5, 16, 33] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for p in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} p={p}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn composite_respects_breakpoints() {
        let (rule, edges) = composite(-2.0, 2.0, &[-0.5, 0.5, 7.0], 0.3, 8);
        assert!(edges.iter().any(|e| (e + 0.5).abs() < 1e-15));
        assert!(edges.windows(2).all(|p| p[1] - p[0] <= 0.3 + 1e-12));
        let box_integral = rule.integrate(|x| if x.abs() <= 0.5 { 1.0 } else { 0.0 });
        assert!((box_integral - 1.0).abs() < 1e-14);
        let gauss = rule.integrate(|x: f64| (-x * x).exp());
        assert!((gauss - 1.7641627815248).abs() < 1e-12);
    }

    #[test]
    fn truncation_radius_meets_budget() {
        let d = Decay::Exponential { rate: 2.0, constant: 3.0 };
        let r = truncation_radius(&d, 2, 1e-12).unwrap();
        assert!(tail_bound(&d, 2, r) <= 1e-12);
        assert!(tail_bound(&d, 2, 0.9 * r) > 1e-12);
        let p = Decay::Polynomial { exponent: 1.0, constant: 1.0 };
        assert!(truncation_radius(&p, 0, 1e-6).is_err());
        assert_eq!(truncation_radius(&Decay::Compact { radius: 0.5 }, 2, 1e-15).unwrap(), 0.5);
    }
}
