//! Finite-difference oracle: the staggered discretization of `D_m - eps V`
//! on a truncated interval, and the Schrodinger operator
//! `-(1/2m) d^2/dx^2 - eps v`.
//!
//! Nodes are cell centers `x_i = -L + (i + 1/2) h`. The `(1,2)` block uses
//! the forward difference `D+` and the `(2,1)` block its transpose, which is
//! minus the backward difference, so the matrix is Hermitian for Hermitian
//! `V` and its free spectrum has a clean gap.

use serde::{Deserialize, Serialize};

use crate::birman_schwinger::contour::{rectangle, winding_number_log};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_tridiag_negatives, op_norm, TriLu, C64};
use crate::potentials::PotentialSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    PairForwardBackward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Half-length of the interval `[-L, L]`.
    #[serde(rename = "L")]
    pub l: f64,
    /// Number of nodes.
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub boundary: Boundary,
}

impl GridSpec {
    pub fn new(l: f64, n: usize) -> Self {
        Self { l, n, scheme: Scheme::default(), boundary: Boundary::default() }
    }

    /// Grid with spacing (close to) `h`.
    pub fn with_spacing(l: f64, h: f64) -> Self {
        Self::new(l, (2.0 * l / h).round() as usize)
    }

    pub fn h(&self) -> f64 {
        2.0 * self.l / self.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.h();
        (0..self.n).map(|i| -self.l + (i as f64 + 0.5) * h).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l > 0.0 && self.l.is_finite()) || self.n < 16 {
            return Err(Error::InvalidParameter(format!(
                "grid needs L > 0 and N >= 16, got L = {}, N = {}",
                self.l, self.n
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapEigenvalue {
    pub z: C64,
    /// Distance from `z` to the nearer threshold.
    pub in_gap_margin: f64,
    /// Fraction of the eigenvector's mass in the outer 10% of the domain.
    pub eigenvector_norm_tail: f64,
    /// `eigenvector_norm_tail <= 1e-6`; otherwise `L` should be enlarged.
    pub accepted: bool,
}

/// How `dirac_eigen_in_gap` extracts eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GridMethod {
    /// Sturm bisection for Hermitian `V`, the contour method otherwise.
    #[default]
    Auto,
    Sturm,
    Contour,
    /// Dense complex Schur decomposition; small grids only.
    Dense,
}

pub const TAIL_THRESHOLD: f64 = 1e-6;
pub const DENSE_MAX_N: usize = 600;

/// The discretized operator `H = [[D1, C], [E, D2]]` with
/// `D1 = m - eps V11`, `C = D+ - eps V12`, `E = D+^T - eps V21`,
/// `D2 = -m - eps V22`, all potential entries sampled at the nodes.
#[derive(Debug, Clone)]
pub struct DiracGrid {
    pub x: Vec<f64>,
    pub h: f64,
    pub m: f64,
    d1: Vec<C64>,
    d2: Vec<C64>,
    /// Diagonal of `C`; its superdiagonal is the constant `1/h`.
    c0: Vec<C64>,
    /// Diagonal of `E`; its subdiagonal is the constant `1/h`.
    e0: Vec<C64>,
    hermitian: bool,
}

impl DiracGrid {
    pub fn new(v: &PotentialSpec, m: f64, eps: f64, grid: &GridSpec) -> Result<Self> {
        grid.validate()?;
        if !(m > 0.0) || !(eps >= 0.0) {
            return Err(Error::InvalidParameter(format!("need m > 0 and eps >= 0, got m = {m}, eps = {eps}")));
        }
        let x = grid.nodes();
        let h = grid.h();
        let n = x.len();
        let (mut d1, mut d2, mut c0, mut e0) =
            (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        let mut hermitian = true;
        for &xi in &x {
            let vi = v.eval(xi) * C64::from(eps);
            hermitian &= vi[(0, 0)].im == 0.0 && vi[(1, 1)].im == 0.0 && vi[(0, 1)] == vi[(1, 0)].conj();
            d1.push(m - vi[(0, 0)]);
            d2.push(-m - vi[(1, 1)]);
            c0.push(-1.0 / h - vi[(0, 1)]);
            e0.push(-1.0 / h - vi[(1, 0)]);
        }
        Ok(Self { x, h, m, d1, d2, c0, e0, hermitian })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Exact Hermitian symmetry of the assembled matrix.
    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// The full `2N x 2N` matrix, ordered `(u_0..u_{N-1}, v_0..v_{N-1})`.
    pub fn to_dense(&self) -> nalgebra::DMatrix<C64> {
        let n = self.len();
        let s = C64::from(1.0 / self.h);
        let mut a = nalgebra::DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            a[(i, i)] = self.d1[i];
            a[(n + i, n + i)] = self.d2[i];
            a[(i, n + i)] = self.c0[i];
            a[(n + i, i)] = self.e0[i];
            if i + 1 < n {
                a[(i, n + i + 1)] = s;
                a[(n + i + 1, i)] = s;
            }
        }
        a
    }

    /// Tridiagonal Schur complement after eliminating `v` (`by_v`) or `u`,
    /// as `(sub, diag, sup)`, together with the eliminated diagonal.
    fn schur(&self, sigma: C64, by_v: bool) -> (Vec<C64>, Vec<C64>, Vec<C64>, Vec<C64>) {
        let n = self.len();
        let s = C64::from(1.0 / self.h);
        let mut sub = vec![C64::new(0.0, 0.0); n - 1];
        let mut sup = vec![C64::new(0.0, 0.0); n - 1];
        if by_v {
            // T = D1 - C D2^{-1} E
            let elim: Vec<C64> = self.d2.iter().map(|d| d - sigma).collect();
            let inv: Vec<C64> = elim.iter().map(|d| 1.0 / d).collect();
            let mut diag: Vec<C64> = (0..n).map(|i| self.d1[i] - sigma - self.c0[i] * inv[i] * self.e0[i]).collect();
            for i in 0..n - 1 {
                diag[i] -= s * inv[i + 1] * s;
                sup[i] = -s * inv[i + 1] * self.e0[i + 1];
                sub[i] = -self.c0[i + 1] * inv[i + 1] * s;
            }
            (sub, diag, sup, elim)
        } else {
            // T' = D2 - E D1^{-1} C
            let elim: Vec<C64> = self.d1.iter().map(|d| d - sigma).collect();
            let inv: Vec<C64> = elim.iter().map(|d| 1.0 / d).collect();
            let mut diag: Vec<C64> = (0..n).map(|j| self.d2[j] - sigma - self.e0[j] * inv[j] * self.c0[j]).collect();
            for j in 0..n - 1 {
                diag[j + 1] -= s * inv[j] * s;
                sup[j] = -self.e0[j] * inv[j] * s;
                sub[j] = -s * inv[j] * self.c0[j];
            }
            (sub, diag, sup, elim)
        }
    }

    /// Number of eigenvalues below `sigma` (Hermitian matrices only).
    pub fn count_below(&self, sigma: f64) -> usize {
        debug_assert!(self.hermitian);
        let by_v = sigma >= 0.0;
        let (_, diag, sup, elim) = self.schur(C64::from(sigma), by_v);
        let d: Vec<f64> = diag.iter().map(|z| z.re).collect();
        let off: Vec<f64> = sup.iter().map(|z| z.norm_sqr()).collect();
        elim.iter().filter(|e| e.re < 0.0).count() + hermitian_tridiag_negatives(&d, &off)
    }

    /// `log det(H - sigma)` on some branch.
    pub fn log_det(&self, sigma: C64) -> C64 {
        let by_v = sigma.re >= 0.0;
        let (sub, diag, sup, elim) = self.schur(sigma, by_v);
        let lu = TriLu::new(&sub, &diag, &sup);
        elim.iter().map(|e| e.ln()).sum::<C64>() + lu.log_det()
    }

    /// Solve `(H - sigma) [u; v] = [f; g]` by block elimination.
    pub fn solve(&self, sigma: C64, f: &[C64], g: &[C64]) -> (Vec<C64>, Vec<C64>) {
        let n = self.len();
        let s = C64::from(1.0 / self.h);
        let by_v = sigma.re >= 0.0;
        let (sub, diag, sup, elim) = self.schur(sigma, by_v);
        let lu = TriLu::new(&sub, &diag, &sup);
        if by_v {
            // u = T^{-1} (f - C D2^{-1} g), v = D2^{-1} (g - E u)
            let w: Vec<C64> = (0..n).map(|i| g[i] / elim[i]).collect();
            let mut u: Vec<C64> = (0..n)
                .map(|i| f[i] - self.c0[i] * w[i] - if i + 1 < n { s * w[i + 1] } else { C64::new(0.0, 0.0) })
                .collect();
            lu.solve_in_place(&mut u);
            let v = (0..n)
                .map(|i| {
                    let eu = self.e0[i] * u[i] + if i > 0 { s * u[i - 1] } else { C64::new(0.0, 0.0) };
                    (g[i] - eu) / elim[i]
                })
                .collect();
            (u, v)
        } else {
            // v = T'^{-1} (g - E D1^{-1} f), u = D1^{-1} (f - C v)
            let w: Vec<C64> = (0..n).map(|i| f[i] / elim[i]).collect();
            let mut v: Vec<C64> = (0..n)
                .map(|j| g[j] - self.e0[j] * w[j] - if j > 0 { s * w[j - 1] } else { C64::new(0.0, 0.0) })
                .collect();
            lu.solve_in_place(&mut v);
            let u = (0..n)
                .map(|i| {
                    let cv = self.c0[i] * v[i] + if i + 1 < n { s * v[i + 1] } else { C64::new(0.0, 0.0) };
                    (f[i] - cv) / elim[i]
                })
                .collect();
            (u, v)
        }
    }

    /// Inverse iteration from `sigma`; with `update`, the shift follows the
    /// eigenvalue estimate. Returns the eigenvalue estimate and the vector.
    pub fn inverse_iteration(&self, sigma: C64, update: bool, iters: usize) -> (C64, Vec<C64>, Vec<C64>) {
        let n = self.len();
        let mut u: Vec<C64> = (0..n).map(|i| C64::new(1.0 + 0.01 * (i % 5) as f64, 0.0)).collect();
        let mut v = u.clone();
        let mut shift = sigma;
        let mut lambda = sigma;
        for _ in 0..iters {
            let norm = u.iter().chain(&v).map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            u.iter_mut().chain(v.iter_mut()).for_each(|z| *z /= norm);
            let (nu, nv) = self.solve(shift, &u, &v);
            // For x normalized and y = (H - shift)^{-1} x, lambda ≈ shift + 1/<x, y>.
            let dot: C64 = u.iter().zip(&nu).chain(v.iter().zip(&nv)).map(|(a, b)| a.conj() * b).sum();
            if dot.norm() == 0.0 || !dot.is_finite() {
                break;
            }
            let next = shift + 1.0 / dot;
            let moved = (next - lambda).norm();
            lambda = next;
            u = nu;
            v = nv;
            if update {
                shift = lambda;
            }
            if moved <= 1e-15 * (1.0 + lambda.norm()) {
                break;
            }
        }
        let norm = u.iter().chain(&v).map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        u.iter_mut().chain(v.iter_mut()).for_each(|z| *z /= norm);
        (lambda, u, v)
    }

    /// Fraction of `|u|^2 + |v|^2` with `|x| > 0.9 L`.
    pub fn tail_mass(&self, u: &[C64], v: &[C64]) -> f64 {
        let l = self.x.last().map_or(0.0, |x| x + self.h / 2.0);
        let total: f64 = u.iter().chain(v).map(|z| z.norm_sqr()).sum();
        let tail: f64 = self
            .x
            .iter()
            .enumerate()
            .filter(|(_, x)| x.abs() > 0.9 * l)
            .map(|(i, _)| u[i].norm_sqr() + v[i].norm_sqr())
            .sum();
        if total > 0.0 {
            tail / total
        } else {
            0.0
        }
    }

    fn gap_eigenvalue(&self, z: C64) -> GapEigenvalue {
        let tiny = 1e-12 * (1.0 + z.norm());
        let (_, u, v) = self.inverse_iteration(z + C64::new(tiny, tiny), false, 3);
        let tail = self.tail_mass(&u, &v);
        GapEigenvalue {
            z,
            in_gap_margin: (z - self.m).norm().min((z + self.m).norm()),
            eigenvector_norm_tail: tail,
            accepted: tail <= TAIL_THRESHOLD,
        }
    }

    /// Eigenvalues of a Hermitian grid operator in `[a, b)` by Sturm bisection.
    pub fn sturm_eigenvalues(&self, a: f64, b: f64) -> Result<Vec<f64>> {
        if !self.hermitian {
            return Err(Error::NonHermitian("Sturm counting needs a Hermitian grid operator".into()));
        }
        let (ca, cb) = (self.count_below(a), self.count_below(b));
        let mut out = Vec::with_capacity(cb - ca);
        for k in ca..cb {
            let (mut lo, mut hi) = (a, b);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if self.count_below(mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        Ok(out)
    }

    /// Eigenvalues inside `[a, b] x [-eta, eta]` by the argument principle
    /// on `det(H - sigma) / det(H0 - sigma)`, `H0` the free operator, and
    /// rectangle halving until a box of size `box_tol` holds one eigenvalue,
    /// then shift-updated inverse iteration.
    pub fn contour_eigenvalues(&self, a: f64, b: f64, eta: f64, box_tol: f64) -> Result<Vec<C64>> {
        let free = self.free();
        let logratio = |s: C64| Ok(self.log_det(s) - free.log_det(s));
        let count = |re0: f64, re1: f64, im0: f64, im1: f64| winding_number_log(&rectangle(re0, re1, im0, im1), logratio);
        let total = count(a, b, -eta, eta)?;
        let mut found = vec![];
        let mut stack = vec![(a, b, -eta, eta, total)];
        while let Some((re0, re1, im0, im1, c)) = stack.pop() {
            if c <= 0 {
                continue;
            }
            if c == 1 && (re1 - re0).max(im1 - im0) <= box_tol {
                let center = C64::new((re0 + re1) / 2.0, (im0 + im1) / 2.0);
                let (lambda, _, _) = self.inverse_iteration(center, true, 60);
                let pad = 0.5 * box_tol;
                let inside = lambda.re >= re0 - pad && lambda.re <= re1 + pad && lambda.im >= im0 - pad && lambda.im <= im1 + pad;
                if inside {
                    found.push(lambda);
                    continue;
                }
            }
            if (re1 - re0).max(im1 - im0) <= 1e-12 {
                return Err(Error::Convergence(format!("eigenvalue cluster of size {c} near {re0} + {im0}i")));
            }
            let wide = re1 - re0 >= im1 - im0;
            let mut frac: f64 = 0.5;
            loop {
                let res = if wide {
                    let mid = re0 + frac * (re1 - re0);
                    count(re0, mid, im0, im1).map(|k| ((re0, mid, im0, im1, k), (mid, re1, im0, im1, c - k)))
                } else {
                    let mid = im0 + frac * (im1 - im0);
                    count(re0, re1, im0, mid).map(|k| ((re0, re1, im0, mid, k), (re0, re1, mid, im1, c - k)))
                };
                match res {
                    Ok((left, right)) => {
                        stack.push(left);
                        stack.push(right);
                        break;
                    }
                    Err(Error::Contour { .. }) if frac < 0.7 => frac += 0.0613,
                    Err(e) => return Err(e),
                }
            }
        }
        found.sort_by(|p, q| p.re.total_cmp(&q.re));
        Ok(found)
    }

    fn free(&self) -> DiracGrid {
        let n = self.len();
        DiracGrid {
            x: self.x.clone(),
            h: self.h,
            m: self.m,
            d1: vec![C64::from(self.m); n],
            d2: vec![C64::from(-self.m); n],
            c0: vec![C64::from(-1.0 / self.h); n],
            e0: vec![C64::from(-1.0 / self.h); n],
            hermitian: true,
        }
    }
}

fn check_window(m: f64, window: (f64, f64)) -> Result<()> {
    let (a, b) = window;
    if !(a < b && a > -m && b < m) {
        return Err(Error::InvalidParameter(format!("window ({a}, {b}) must lie inside the gap (-{m}, {m})")));
    }
    Ok(())
}

/// Eigenvalues of the discretized `D_m - eps V` with real part in `window`.
pub fn dirac_eigen_in_gap(
    v: &PotentialSpec,
    m: f64,
    eps: f64,
    grid: &GridSpec,
    window: (f64, f64),
) -> Result<Vec<GapEigenvalue>> {
    dirac_eigen_in_gap_with(v, m, eps, grid, window, GridMethod::Auto)
}

pub fn dirac_eigen_in_gap_with(
    v: &PotentialSpec,
    m: f64,
    eps: f64,
    grid: &GridSpec,
    window: (f64, f64),
    method: GridMethod,
) -> Result<Vec<GapEigenvalue>> {
    check_window(m, window)?;
    let op = DiracGrid::new(v, m, eps, grid)?;
    let method = match method {
        GridMethod::Auto if op.is_hermitian() => GridMethod::Sturm,
        GridMethod::Auto => GridMethod::Contour,
        other => other,
    };
    let zs: Vec<C64> = match method {
        GridMethod::Sturm => op.sturm_eigenvalues(window.0, window.1)?.into_iter().map(C64::from).collect(),
        GridMethod::Contour => {
            let anti = sampled_antihermitian_norm(v, grid);
            let eta = eps * anti + 1e-3 * (window.1 - window.0);
            op.contour_eigenvalues(window.0, window.1, eta, 1e-3 * m)?
        }
        GridMethod::Dense => {
            if op.len() > DENSE_MAX_N {
                return Err(Error::InvalidParameter(format!(
                    "dense eigensolve is capped at N = {DENSE_MAX_N}, got {}",
                    op.len()
                )));
            }
            let eig = op
                .to_dense()
                .schur()
                .eigenvalues()
                .ok_or_else(|| Error::Convergence("complex Schur decomposition failed".into()))?;
            let mut zs: Vec<C64> = eig.iter().copied().filter(|z| z.re >= window.0 && z.re < window.1).collect();
            zs.sort_by(|p, q| p.re.total_cmp(&q.re));
            zs
        }
        GridMethod::Auto => unreachable!(),
    };
    Ok(zs.into_iter().map(|z| op.gap_eigenvalue(z)).collect())
}

fn sampled_antihermitian_norm(v: &PotentialSpec, grid: &GridSpec) -> f64 {
    grid.nodes()
        .iter()
        .map(|&x| {
            let m = v.eval(x);
            op_norm(&(m - m.adjoint())) / 2.0
        })
        .fold(0.0, f64::max)
}

/// Ground state of `-(1/2m) d^2/dx^2 - eps v` by central differences with
/// Dirichlet ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchrodingerEigen {
    pub lambda: f64,
    pub eigenvector_norm_tail: f64,
    pub accepted: bool,
}

/// Lowest eigenvalue, or `None` when it is nonnegative.
pub fn schrodinger_ground_state<F>(v: F, m: f64, eps: f64, grid: &GridSpec) -> Result<Option<SchrodingerEigen>>
where
    F: Fn(f64) -> f64,
{
    grid.validate()?;
    if !(m > 0.0) {
        return Err(Error::InvalidParameter(format!("mass must be positive, got {m}")));
    }
    let x = grid.nodes();
    let h = grid.h();
    let n = x.len();
    let kin = 1.0 / (m * h * h);
    let off = -0.5 * kin;
    let pot: Vec<f64> = x.iter().map(|&xi| eps * v(xi)).collect();
    if pot.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidParameter("potential must be bounded on the grid".into()));
    }
    let off_sq = vec![off * off; n - 1];
    let count = |s: f64| {
        let d: Vec<f64> = pot.iter().map(|p| kin - p - s).collect();
        hermitian_tridiag_negatives(&d, &off_sq)
    };
    if count(0.0) == 0 {
        return Ok(None);
    }
    let mut lo = -pot.iter().fold(0.0f64, |a, &p| a.max(p)) - 1e-12;
    while count(lo) > 0 {
        lo = 2.0 * lo - 1.0;
    }
    let mut hi = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count(mid) > 0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    // Inverse iteration for the tail diagnostic.
    let shift = lambda - 1e-12 * (1.0 + lambda.abs());
    let diag: Vec<C64> = pot.iter().map(|p| C64::from(kin - p - shift)).collect();
    let offc = vec![C64::from(off); n - 1];
    let lu = TriLu::new(&offc, &diag, &offc);
    let mut y = vec![C64::from(1.0); n];
    for _ in 0..3 {
        lu.solve_in_place(&mut y);
        let norm = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        y.iter_mut().for_each(|z| *z /= norm);
    }
    let total: f64 = y.iter().map(|z| z.norm_sqr()).sum();
    let tail: f64 = x.iter().zip(&y).filter(|(xi, _)| xi.abs() > 0.9 * grid.l).map(|(_, z)| z.norm_sqr()).sum();
    let tail = tail / total;
    Ok(Some(SchrodingerEigen { lambda, eigenvector_norm_tail: tail, accepted: tail <= TAIL_THRESHOLD }))
}

/// Observed convergence order from values at spacings `h`, `h/2`, `h/4`.
pub fn richardson_order(z_h: C64, z_h2: C64, z_h4: C64) -> f64 {
    ((z_h - z_h2).norm() / (z_h2 - z_h4).norm()).log2()
}
