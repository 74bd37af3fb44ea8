//! Min-max levels of `D_m - eps V` over the decomposition
//! `l+(h) = (h, alpha D+^T h)`, `l-(g) = (-alpha D+ g, g)`, `alpha = 1/(2m)`,
//! on the staggered grid used by [`crate::grid`].
//!
//! The two families are orthogonal and together span the grid space, so the
//! forms are a congruence of the grid operator and `gamma1` reproduces its
//! first eigenvalue above `gamma0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::linalg::{op_norm, BandMatrix, C64};
use crate::potentials::PotentialSpec;

const LAMBDA_STEPS: usize = 60;
const SECANT_STEPS: usize = 5;
const LEVEL_STEPS: usize = 100;
const BRACKET_OFFSET: f64 = 1e-6;

/// Gram and energy blocks of the two subspace families.
#[derive(Debug, Clone)]
pub struct SubspaceForms {
    pub m: f64,
    pub alpha: f64,
    pub q_pp: BandMatrix,
    pub q_mm: BandMatrix,
    pub q_pm: BandMatrix,
    pub g_p: BandMatrix,
    pub g_m: BandMatrix,
    /// Sampled `eps * sup |V|`.
    pub perturbation_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuSample {
    pub lambda: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinmaxResult {
    pub gamma0: f64,
    pub gamma1: f64,
    pub mu_trace: Vec<MuSample>,
    /// `mu(m) > 0`: no eigenvalue below the threshold at this resolution.
    pub at_threshold: bool,
}

fn real_diag(v: impl Iterator<Item = f64>) -> BandMatrix {
    BandMatrix::from_diagonal(&v.map(C64::from).collect::<Vec<_>>())
}

impl SubspaceForms {
    pub fn new(v: &PotentialSpec, m: f64, eps: f64, grid: &GridSpec) -> Result<Self> {
        grid.validate()?;
        if !(m > 0.0) || !(eps >= 0.0) {
            return Err(Error::InvalidParameter(format!("need m > 0 and eps >= 0, got m = {m}, eps = {eps}")));
        }
        if !v.is_hermitian() {
            return Err(Error::NonHermitian(format!("min-max levels need a self-adjoint operator; {} is not", v.name())));
        }
        let x = grid.nodes();
        let n = x.len();
        let h = grid.h();
        let samples: Vec<_> = x.iter().map(|&xi| v.eval(xi) * C64::from(eps)).collect();
        let perturbation_norm = samples.iter().map(op_norm).fold(0.0, f64::max);
        if perturbation_norm >= m {
            return Err(Error::GapCondition(format!(
                "eps * |V|_inf = {perturbation_norm} must stay below m = {m} for gamma0 < gamma1"
            )));
        }
        let alpha = 1.0 / (2.0 * m);
        let a = C64::from(alpha);
        let dp = BandMatrix::from_diagonals(n, &[(0, vec![C64::from(-1.0 / h); n]), (1, vec![C64::from(1.0 / h); n - 1])]);
        let dpt = dp.adjoint();
        let h11 = real_diag(samples.iter().map(|s| m - s[(0, 0)].re));
        let h22 = real_diag(samples.iter().map(|s| -m - s[(1, 1)].re));
        let h12 = dp.axpy(C64::from(-1.0), &BandMatrix::from_diagonal(&samples.iter().map(|s| s[(0, 1)]).collect::<Vec<_>>()));
        let h21 = h12.adjoint();

        let q_pp = h11
            .add(&h12.mul(&dpt).scale(a))
            .add(&dp.mul(&h21).scale(a))
            .add(&dp.mul(&h22).mul(&dpt).scale(a * a));
        let q_mm = dpt
            .mul(&h11)
            .mul(&dp)
            .scale(a * a)
            .axpy(-a, &dpt.mul(&h12))
            .axpy(-a, &h21.mul(&dp))
            .add(&h22);
        let q_pm = h11
            .mul(&dp)
            .scale(-a)
            .add(&h12)
            .axpy(-a * a, &dp.mul(&h21).mul(&dp))
            .axpy(a, &dp.mul(&h22));
        let id = real_diag(std::iter::repeat_n(1.0, n));
        let g_p = id.axpy(a * a, &dp.mul(&dpt));
        let g_m = id.axpy(a * a, &dpt.mul(&dp));
        Ok(Self { m, alpha, q_pp, q_mm, q_pm, g_p, g_m, perturbation_norm })
    }

    pub fn len(&self) -> usize {
        self.g_p.n()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of generalized eigenvalues of `(Q--, G-)` above `t`.
    fn count_minus_above(&self, t: f64) -> usize {
        self.len() - self.q_mm.axpy(C64::from(-t), &self.g_m).hermitian_negatives()
    }

    /// Largest generalized eigenvalue of `(Q--, G-)`.
    pub fn gamma0(&self) -> f64 {
        let mut hi = -self.m + self.perturbation_norm + 1e-12;
        while self.count_minus_above(hi) > 0 {
            hi += hi.abs().max(1.0);
        }
        let mut lo = -self.m - self.perturbation_norm - 1.0;
        while self.count_minus_above(lo) == 0 {
            lo -= lo.abs().max(1.0);
        }
        bisect(lo, hi, LEVEL_STEPS, |t| self.count_minus_above(t) > 0)
    }

    /// The interleaved `2N` matrix with rows `(g_0, h_0, g_1, h_1, ...)`:
    /// `[[Q++ - (lambda + s) G+, Q+-], [Q-+, Q-- - lambda G-]]`.
    fn pencil(&self, lambda: f64, s: f64) -> BandMatrix {
        let plus = self.q_pp.axpy(C64::from(-(lambda + s)), &self.g_p);
        let minus = self.q_mm.axpy(C64::from(-lambda), &self.g_m);
        let cross = &self.q_pm;
        let mp = cross.adjoint();
        let bw = [&plus, &minus, cross, &mp].iter().map(|b| b.lower_bandwidth().max(b.upper_bandwidth())).max().unwrap();
        let n = self.len();
        let mut out = BandMatrix::zeros(2 * n, 2 * bw + 1, 2 * bw + 1);
        for (blk, ro, co) in [(&minus, 0, 0), (&plus, 1, 1), (&mp, 0, 1), (cross, 1, 0)] {
            for i in 0..n {
                for j in i.saturating_sub(bw)..(i + bw + 1).min(n) {
                    let val = blk.get(i, j);
                    if val != C64::new(0.0, 0.0) {
                        out.set(2 * i + ro, 2 * j + co, val);
                    }
                }
            }
        }
        out
    }

    /// Number of eigenvalues of the Schur complement `S(lambda)` below `s`
    /// in the `G+` metric; requires `lambda > gamma0`.
    pub fn schur_count_below(&self, lambda: f64, s: f64) -> usize {
        self.pencil(lambda, s).hermitian_negatives().saturating_sub(self.len())
    }

    /// Smallest eigenvalue `mu(lambda)` of `S(lambda)` in the `G+` metric.
    pub fn mu(&self, lambda: f64) -> f64 {
        let below = |s: f64| self.schur_count_below(lambda, s) > 0;
        let mut lo = -self.m;
        while below(lo) {
            lo -= lo.abs().max(self.m);
        }
        let mut hi = self.m;
        while !below(hi) {
            hi += hi.abs().max(self.m);
        }
        bisect(lo, hi, LEVEL_STEPS, |s| !below(s))
    }

    /// First level above `gamma0`: the root of `mu`.
    pub fn solve(&self) -> Result<MinmaxResult> {
        let gamma0 = self.gamma0();
        let m = self.m;
        let lo = gamma0 + BRACKET_OFFSET;
        if lo >= m {
            return Err(Error::GapCondition(format!("gamma0 = {gamma0} leaves no room below m = {m}")));
        }
        let mut mu_trace = vec![];
        if self.schur_count_below(m, 0.0) == 0 {
            mu_trace.push(MuSample { lambda: m, mu: self.mu(m) });
            return Ok(MinmaxResult { gamma0, gamma1: m, mu_trace, at_threshold: true });
        }
        let (mut a, mut b) = (lo, m);
        for _ in 0..LAMBDA_STEPS {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if self.schur_count_below(mid, 0.0) == 0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        let (mut l0, mut l1) = (a, b);
        let (mut f0, mut f1) = (self.mu(l0), self.mu(l1));
        mu_trace.push(MuSample { lambda: l0, mu: f0 });
        mu_trace.push(MuSample { lambda: l1, mu: f1 });
        let mut best = if f0.abs() <= f1.abs() { l0 } else { l1 };
        for _ in 0..SECANT_STEPS {
            if f1 == f0 {
                break;
            }
            let next = l1 - f1 * (l1 - l0) / (f1 - f0);
            if !(next >= a && next <= b) || next == l1 {
                break;
            }
            let fnext = self.mu(next);
            mu_trace.push(MuSample { lambda: next, mu: fnext });
            best = next;
            (l0, f0, l1, f1) = (l1, f1, next, fnext);
        }
        Ok(MinmaxResult { gamma0, gamma1: best, mu_trace, at_threshold: false })
    }
}

/// Bisection for the switch point of a predicate that is true on `lo` and
/// false on `hi`.
fn bisect(mut lo: f64, mut hi: f64, steps: usize, pred: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn gamma0(v: &PotentialSpec, m: f64, eps: f64, grid: &GridSpec) -> Result<f64> {
    Ok(SubspaceForms::new(v, m, eps, grid)?.gamma0())
}

pub fn gamma1(v: &PotentialSpec, m: f64, eps: f64, grid: &GridSpec) -> Result<f64> {
    Ok(SubspaceForms::new(v, m, eps, grid)?.solve()?.gamma1)
}

pub fn solve_minmax(v: &PotentialSpec, m: f64, eps: f64, grid: &GridSpec) -> Result<MinmaxResult> {
    SubspaceForms::new(v, m, eps, grid)?.solve()
}
