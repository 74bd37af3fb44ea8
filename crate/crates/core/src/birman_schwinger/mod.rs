//! Nystrom discretization of the Birman-Schwinger operator, the scalar
//! characteristic function `g_eps(kappa)`, and its zeros.

pub mod contour;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{op_norm, Mat2, C64};
use crate::moments::{compute_f, compute_u, Sign};
use crate::potentials::{factorize, polar_factors, Decay, FactorizedPotential, PotentialSpec};
use crate::quadrature::{gauss_legendre, graded_edges, tail_bound, truncation_radius, QuadSpec};
use crate::resolvent::{regular_kernel_matrix, KappaZ, Sheet, Threshold};

use contour::{indented_half_disc, rectangle, winding_number};

/// Solver controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BsOptions {
    pub quad: QuadSpec,
    /// Accept a root when `|g| <= residual_tol * max(1, |kappa|)`.
    pub residual_tol: f64,
    pub max_newton: usize,
    /// Count zeros in the half-disc after Newton converges.
    pub verify_winding: bool,
    /// Contour indent from the imaginary `kappa` axis, in units of `m`.
    pub indent: f64,
    pub moment_tol: f64,
}

impl Default for BsOptions {
    fn default() -> Self {
        Self {
            quad: QuadSpec::default(),
            residual_tol: 1e-10,
            max_newton: 50,
            verify_winding: false,
            indent: 1e-3,
            moment_tol: 1e-10,
        }
    }
}

/// `kappa`-independent part of the Nystrom discretization: nodes, weights,
/// factor values, and the product-integration data for each row's own
/// panel.
#[derive(Debug, Clone)]
pub struct NystromGeometry {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    a: Vec<Mat2>,
    bstar: Vec<Mat2>,
    order: usize,
    /// Per row: sub-nodes `t_s` of the split own panel.
    sub_nodes: Vec<Vec<f64>>,
    /// Per row: `B*(t_s)`.
    sub_bstar: Vec<Vec<Mat2>>,
    /// Per row: `w_s L_j(t_s)`, row-major over `(s, j)`.
    sub_coef: Vec<Vec<f64>>,
    m: f64,
}

/// Nystrom system at one spectral parameter.
#[derive(Debug, Clone)]
pub struct NystromSystem {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `2N x 2N` matrix with blocks `√w_i A(x_i) S_z(x_i, x_j) B*(x_j) √w_j`
    /// (own-panel blocks by product integration).
    pub m_mat: DMatrix<C64>,
    pub a_vec: DVector<C64>,
    pub b_vec: DVector<C64>,
    pub kz: KappaZ,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaRoot {
    pub kappa: C64,
    pub z: C64,
    pub residual: f64,
    pub sheet: Sheet,
    pub newton_iters: usize,
    pub winding_checked: bool,
    /// `eps m U11 + eps^2 m F+11`, the Newton starting point.
    pub kappa0: C64,
    pub threshold: Threshold,
}

fn barycentric_weights(x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|j| 1.0 / (0..x.len()).filter(|&k| k != j).map(|k| x[j] - x[k]).product::<f64>())
        .collect()
}

fn lagrange_values(x: &[f64], bw: &[f64], t: f64) -> Vec<f64> {
    if let Some(j) = x.iter().position(|&xj| xj == t) {
        let mut out = vec![0.0; x.len()];
        out[j] = 1.0;
        return out;
    }
    let terms: Vec<f64> = x.iter().zip(bw).map(|(&xj, &w)| w / (t - xj)).collect();
    let sum: f64 = terms.iter().sum();
    terms.iter().map(|v| v / sum).collect()
}

/// Truncation radius for the Nystrom domain.
pub fn nystrom_radius(v: &PotentialSpec, quad: &QuadSpec) -> Result<f64> {
    let decay = v.decay();
    match quad.trunc_radius {
        Some(r) => {
            let tail = tail_bound(&decay, 2, r);
            if tail > quad.tail_tol {
                return Err(Error::Truncation { radius: r, tail, tol: quad.tail_tol });
            }
            Ok(r)
        }
        None => match decay {
            Decay::Compact { radius } => Ok(radius),
            _ => Ok(truncation_radius(&decay, 2, quad.tail_tol)?.max(v.scale())),
        },
    }
}

impl NystromGeometry {
    pub fn new(v: &FactorizedPotential, m: f64, quad: &QuadSpec) -> Result<Self> {
        if !(m > 0.0) {
            return Err(Error::InvalidParameter(format!("mass must be positive, got {m}")));
        }
        if quad.order < 2 || !(quad.panel_width > 0.0) {
            return Err(Error::InvalidParameter("quadrature needs order >= 2 and panel_width > 0".into()));
        }
        let pot = &v.potential;
        let r = nystrom_radius(pot, quad)?;
        let n = quad.order;
        let (t, tw) = gauss_legendre(n);
        let all_edges = if r > 0.0 { graded_edges(pot, r, quad.panel_width) } else { vec![] };
        // Panels on which V is negligible at every node contribute nothing.
        let floor = 1e-16 * pot.sup_norm();
        let mut edges = vec![];
        let mut nodes = vec![];
        let mut weights = vec![];
        for p in all_edges.windows(2) {
            let (c, h) = ((p[0] + p[1]) / 2.0, (p[1] - p[0]) / 2.0);
            let xs: Vec<f64> = t.iter().map(|s| c + h * s).collect();
            if xs.iter().all(|&x| op_norm(&pot.eval(x)) <= floor) {
                continue;
            }
            edges.push((p[0], p[1]));
            nodes.extend(xs);
            weights.extend(tw.iter().map(|s| s * h));
        }
        let factors: Vec<(Mat2, Mat2)> = nodes.par_iter().map(|&x| v.factors(x)).collect();
        let (a, bstar): (Vec<Mat2>, Vec<Mat2>) = factors.into_iter().unzip();
        let per_row: Vec<(Vec<f64>, Vec<Mat2>, Vec<f64>)> = (0..nodes.len())
            .into_par_iter()
            .map(|i| {
                let p = i / n;
                let (lo, hi) = edges[p];
                let panel = &nodes[p * n..(p + 1) * n];
                let bw = barycentric_weights(panel);
                let xi = nodes[i];
                let mut sub = Vec::with_capacity(2 * n);
                let mut coef = Vec::with_capacity(2 * n * n);
                for (a0, b0) in [(lo, xi), (xi, hi)] {
                    let (c, h) = ((a0 + b0) / 2.0, (b0 - a0) / 2.0);
                    for (s, ws) in t.iter().zip(&tw) {
                        let ts = c + h * s;
                        sub.push(ts);
                        coef.extend(lagrange_values(panel, &bw, ts).into_iter().map(|l| l * ws * h));
                    }
                }
                let sb = sub.iter().map(|&ts| polar_factors(&pot.eval(ts)).1).collect();
                (sub, sb, coef)
            })
            .collect();
        let mut sub_nodes = Vec::with_capacity(per_row.len());
        let mut sub_bstar = Vec::with_capacity(per_row.len());
        let mut sub_coef = Vec::with_capacity(per_row.len());
        for (a0, b0, c0) in per_row {
            sub_nodes.push(a0);
            sub_bstar.push(b0);
            sub_coef.push(c0);
        }
        Ok(Self { nodes, weights, a, bstar, order: n, sub_nodes, sub_bstar, sub_coef, m })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.m
    }

    /// `a = A P+^*` and `b = B P+^*` at the nodes, times `√w`.
    fn vectors(&self) -> (DVector<C64>, DVector<C64>) {
        let n = self.len();
        let mut a = DVector::zeros(2 * n);
        let mut b = DVector::zeros(2 * n);
        for i in 0..n {
            let sw = self.weights[i].sqrt();
            a[2 * i] = self.a[i][(0, 0)] * sw;
            a[2 * i + 1] = self.a[i][(1, 0)] * sw;
            b[2 * i] = self.bstar[i][(0, 0)].conj() * sw;
            b[2 * i + 1] = self.bstar[i][(0, 1)].conj() * sw;
        }
        (a, b)
    }

    pub fn assemble(&self, kz: &KappaZ) -> NystromSystem {
        let n = self.len();
        let q = self.order;
        let rows: Vec<Vec<Mat2>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut row = vec![Mat2::zeros(); n];
                let ai = self.a[i];
                if ai == Mat2::zeros() {
                    return row;
                }
                let swi = self.weights[i].sqrt();
                let p = i / q;
                for j in (0..n).filter(|&j| j / q != p) {
                    if self.bstar[j] == Mat2::zeros() {
                        continue;
                    }
                    let s = regular_kernel_matrix(self.nodes[i] - self.nodes[j], kz);
                    row[j] = ai * s * self.bstar[j] * C64::from(swi * self.weights[j].sqrt());
                }
                let coef = &self.sub_coef[i];
                let mut acc = vec![Mat2::zeros(); q];
                for (s, (&ts, bs)) in self.sub_nodes[i].iter().zip(&self.sub_bstar[i]).enumerate() {
                    let t = regular_kernel_matrix(self.nodes[i] - ts, kz) * bs;
                    for (jj, acc_j) in acc.iter_mut().enumerate() {
                        *acc_j += t * C64::from(coef[s * q + jj]);
                    }
                }
                for (jj, acc_j) in acc.into_iter().enumerate() {
                    let j = p * q + jj;
                    row[j] = ai * acc_j * C64::from(swi / self.weights[j].sqrt());
                }
                row
            })
            .collect();
        let mut m_mat = DMatrix::zeros(2 * n, 2 * n);
        for (i, row) in rows.iter().enumerate() {
            for (j, blk) in row.iter().enumerate() {
                for r in 0..2 {
                    for c in 0..2 {
                        m_mat[(2 * i + r, 2 * j + c)] = blk[(r, c)];
                    }
                }
            }
        }
        let (a_vec, b_vec) = self.vectors();
        NystromSystem { nodes: self.nodes.clone(), weights: self.weights.clone(), m_mat, a_vec, b_vec, kz: *kz }
    }
}

/// Assemble the Nystrom system of a factorized potential at `kz`.
pub fn assemble(v: &FactorizedPotential, kz: &KappaZ, quad: &QuadSpec) -> Result<NystromSystem> {
    Ok(NystromGeometry::new(v, kz.m, quad)?.assemble(kz))
}

impl NystromSystem {
    /// The same system with the regular part dropped (`M = 0`).
    pub fn rank_one(&self) -> Self {
        let mut out = self.clone();
        out.m_mat.fill(C64::new(0.0, 0.0));
        out
    }

    pub fn hilbert_schmidt_norm(&self) -> f64 {
        self.m_mat.norm()
    }

    /// Power-iteration estimate of `‖M‖` (5 iterations on `M* M`).
    pub fn norm_estimate(&self) -> f64 {
        let n = self.m_mat.nrows();
        if n == 0 {
            return 0.0;
        }
        let mut x = DVector::from_fn(n, |i, _| C64::new(1.0 + (i % 7) as f64 * 0.1, 0.0));
        let mut est = 0.0;
        for _ in 0..5 {
            let nx = x.norm();
            if nx == 0.0 {
                return 0.0;
            }
            x /= C64::from(nx);
            let y = &self.m_mat * &x;
            est = y.norm();
            x = self.m_mat.adjoint() * y;
        }
        est
    }

    /// `<b, (1 - eps M)^{-1} a>`.
    pub fn resolvent_form(&self, eps: f64) -> Result<C64> {
        let n = self.m_mat.nrows();
        if n == 0 {
            return Ok(C64::new(0.0, 0.0));
        }
        let op = DMatrix::<C64>::identity(n, n) - &self.m_mat * C64::from(eps);
        if eps * self.norm_estimate() >= 1.0 {
            let smin = op.clone().svd(false, false).singular_values.min();
            if smin < 1e-12 {
                return Err(Error::Singular { kappa: self.kz.kappa });
            }
        }
        let lu = op.lu();
        let phi = lu.solve(&self.a_vec).ok_or(Error::Singular { kappa: self.kz.kappa })?;
        if phi.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular { kappa: self.kz.kappa });
        }
        Ok(self.b_vec.dotc(&phi))
    }
}

/// `g_eps(kappa) = eps m <b, (1 - eps M)^{-1} a> - kappa`.
pub fn characteristic_g(system: &NystromSystem, eps: f64) -> Result<C64> {
    Ok(system.resolvent_form(eps)? * (eps * system.kz.m) - system.kz.kappa)
}

/// `g_eps` as a function of `kappa` over a fixed discretization.
pub struct CharacteristicFn {
    pub geometry: NystromGeometry,
    pub eps: f64,
}

impl CharacteristicFn {
    pub fn new(v: &PotentialSpec, m: f64, eps: f64, quad: &QuadSpec) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
        }
        Ok(Self { geometry: NystromGeometry::new(&factorize(v), m, quad)?, eps })
    }

    pub fn eval(&self, kappa: C64) -> Result<C64> {
        let kz = KappaZ::from_kappa(kappa, self.geometry.mass());
        characteristic_g(&self.geometry.assemble(&kz), self.eps)
    }
}

/// `W = -σ1 V σ1`, for which `D_m - eps W` is `-σ1 (D_m - eps V) σ1`.
pub fn mirror_potential(v: &PotentialSpec) -> PotentialSpec {
    v.sigma1_conjugate().negated()
}

fn oriented(v: &PotentialSpec, threshold: Threshold) -> PotentialSpec {
    match threshold {
        Threshold::PlusM => v.clone(),
        Threshold::MinusM => mirror_potential(v),
    }
}

fn leading_guess(v: &PotentialSpec, m: f64, eps: f64, tol: f64) -> Result<(C64, C64, C64)> {
    let u11 = compute_u(v, tol)?[(0, 0)];
    let f11 = compute_f(v, m, Sign::Plus, tol)?[(0, 0)];
    Ok((u11, f11, u11 * (eps * m) + f11 * (eps * eps * m)))
}

struct NewtonOutcome {
    kappa: C64,
    iters: usize,
    residual: f64,
}

fn newton<F>(g: &F, kappa0: C64, eps: f64, opts: &BsOptions, sheet: Sheet) -> Result<NewtonOutcome>
where
    F: Fn(C64) -> Result<C64>,
{
    let mut kappa = kappa0;
    let mut gk = g(kappa)?;
    for it in 1..=opts.max_newton {
        let h = 1e-6 * kappa.norm().max(eps);
        let d = (g(kappa + h)? - g(kappa - h)?) / (2.0 * h);
        if d == C64::new(0.0, 0.0) || !d.is_finite() {
            break;
        }
        let step = gk / d;
        kappa -= step;
        let wrong_sheet = match sheet {
            Sheet::Physical => kappa.re <= 0.0,
            Sheet::Second => kappa.re >= 0.0,
        };
        if wrong_sheet || !kappa.is_finite() {
            break;
        }
        gk = g(kappa)?;
        let target = opts.residual_tol * kappa.norm().max(1.0);
        if gk.norm() <= target && step.norm() <= 1e-12 * kappa.norm().max(eps) {
            return Ok(NewtonOutcome { kappa, iters: it, residual: gk.norm() });
        }
        if gk.norm() <= 1e-3 * target {
            return Ok(NewtonOutcome { kappa, iters: it, residual: gk.norm() });
        }
    }
    let target = opts.residual_tol * kappa.norm().max(1.0);
    if gk.norm() <= target && kappa.is_finite() {
        return Ok(NewtonOutcome { kappa, iters: opts.max_newton, residual: gk.norm() });
    }
    Err(Error::Convergence(format!("Newton on g_eps stalled at kappa = {kappa}, |g| = {:e}", gk.norm())))
}

/// Locate the zero inside the box by repeated halving of the box with the
/// argument principle, then polish with Newton.
fn winding_bisection<F>(g: &F, m: f64, eps: f64, opts: &BsOptions) -> Result<Option<NewtonOutcome>>
where
    F: Fn(C64) -> Result<C64>,
{
    let delta = opts.indent * m;
    let total = winding_number(&indented_half_disc(m, delta), g)?;
    if total <= 0 {
        return Ok(None);
    }
    let (mut re0, mut re1, mut im0, mut im1) = (delta, m, -m, m);
    let count = |re0: f64, re1: f64, im0: f64, im1: f64| winding_number(&rectangle(re0, re1, im0, im1), g);
    let mut inside = count(re0, re1, im0, im1)?;
    if inside <= 0 {
        return Err(Error::Convergence("zero lies outside the search box".into()));
    }
    let stop = 1e-3 * eps.min(m);
    while (re1 - re0).max(im1 - im0) > stop {
        // Split the longer side, nudging off-center so the cut avoids the zero.
        let wide = re1 - re0 >= im1 - im0;
        let mut frac = 0.5;
        loop {
            let res = if wide {
                let mid = re0 + frac * (re1 - re0);
                count(re0, mid, im0, im1).map(|c| (c, mid))
            } else {
                let mid = im0 + frac * (im1 - im0);
                count(re0, re1, im0, mid).map(|c| (c, mid))
            };
            match res {
                Ok((c, mid)) => {
                    if c > 0 {
                        if wide {
                            re1 = mid
                        } else {
                            im1 = mid
                        }
                        inside = c;
                    } else {
                        if wide {
                            re0 = mid
                        } else {
                            im0 = mid
                        }
                    }
                    break;
                }
                Err(Error::Contour { .. }) if frac < 0.6 => frac += 0.0371,
                Err(e) => return Err(e),
            }
        }
    }
    let _ = inside;
    let center = C64::new((re0 + re1) / 2.0, (im0 + im1) / 2.0);
    newton(g, center, eps, opts, Sheet::Physical).map(Some)
}

/// Number of zeros of `g_eps` inside the half-disc of the given radius,
/// indented by `indent` from the imaginary axis.
pub fn count_zeros_halfdisc(
    v: &PotentialSpec,
    m: f64,
    eps: f64,
    radius: f64,
    indent: f64,
    quad: &QuadSpec,
) -> Result<i64> {
    if !(radius > indent && indent > 0.0) {
        return Err(Error::InvalidParameter("need radius > indent > 0".into()));
    }
    if v.is_zero() {
        return Ok(0);
    }
    let g = CharacteristicFn::new(v, m, eps, quad)?;
    winding_number(&indented_half_disc(radius, indent), |k| g.eval(k))
}

/// Bound state emerging from the chosen threshold, or `None` when the
/// existence condition on `U` fails or no zero lies in the half-disc.
pub fn find_bound_state(
    v: &PotentialSpec,
    m: f64,
    eps: f64,
    threshold: Threshold,
    opts: &BsOptions,
) -> Result<Option<KappaRoot>> {
    if !(m > 0.0 && eps > 0.0) {
        return Err(Error::InvalidParameter(format!("need m > 0 and eps > 0, got m = {m}, eps = {eps}")));
    }
    let w = oriented(v, threshold);
    if w.is_zero() {
        return Ok(None);
    }
    let (u11, f11, kappa0) = leading_guess(&w, m, eps, opts.moment_tol)?;
    let attractive = u11.re > opts.moment_tol || (u11.re.abs() <= opts.moment_tol && f11.re > 0.0);
    if !attractive {
        return Ok(None);
    }
    let g = CharacteristicFn::new(&w, m, eps, &opts.quad)?;
    let geval = |k: C64| g.eval(k);
    let mut winding_checked = false;
    let start = if kappa0.re > 0.0 { kappa0 } else { C64::new(eps * m * u11.norm().max(1e-3), 0.0) };
    let outcome = match newton(&geval, start, eps, opts, Sheet::Physical) {
        Ok(o) => o,
        Err(Error::Convergence(_)) => {
            winding_checked = true;
            match winding_bisection(&geval, m, eps, opts)? {
                Some(o) => o,
                None => return Ok(None),
            }
        }
        Err(e) => return Err(e),
    };
    if opts.verify_winding && !winding_checked {
        let n = winding_number(&indented_half_disc(m, opts.indent * m), geval)?;
        if n != 1 {
            return Err(Error::Convergence(format!("half-disc holds {n} zeros, expected exactly one")));
        }
        winding_checked = true;
    }
    let kz = KappaZ::from_kappa(outcome.kappa, m);
    let z = match threshold {
        Threshold::PlusM => kz.z,
        Threshold::MinusM => -kz.z,
    };
    Ok(Some(KappaRoot {
        kappa: outcome.kappa,
        z,
        residual: outcome.residual,
        sheet: Sheet::Physical,
        newton_iters: outcome.iters,
        winding_checked,
        kappa0,
        threshold,
    }))
}

/// Second-sheet zero of the continued `g_eps`, for exponentially decaying
/// potentials with `Re U11 < 0` (after orienting to the threshold).
pub fn find_resonance(
    v: &PotentialSpec,
    m: f64,
    eps: f64,
    threshold: Threshold,
    opts: &BsOptions,
) -> Result<Option<KappaRoot>> {
    if !(m > 0.0 && eps > 0.0) {
        return Err(Error::InvalidParameter(format!("need m > 0 and eps > 0, got m = {m}, eps = {eps}")));
    }
    let rate = v.decay().exponential_rate().ok_or_else(|| {
        Error::Hypothesis("resonances need exponentially decaying potentials".into())
    })?;
    let w = oriented(v, threshold);
    if w.is_zero() {
        return Ok(None);
    }
    let (u11, _, kappa0) = leading_guess(&w, m, eps, opts.moment_tol)?;
    if u11.re >= -opts.moment_tol {
        return Ok(None);
    }
    if kappa0.re.abs() >= rate / 2.0 {
        return Err(Error::Hypothesis(format!(
            "|Re kappa0| = {} is not below half the decay rate {rate}",
            kappa0.re.abs()
        )));
    }
    let g = CharacteristicFn::new(&w, m, eps, &opts.quad)?;
    let outcome = newton(&|k| g.eval(k), kappa0, eps, opts, Sheet::Second)?;
    let kz = KappaZ::from_kappa(outcome.kappa, m);
    let z = match threshold {
        Threshold::PlusM => kz.z,
        Threshold::MinusM => -kz.z,
    };
    Ok(Some(KappaRoot {
        kappa: outcome.kappa,
        z,
        residual: outcome.residual,
        sheet: Sheet::Second,
        newton_iters: outcome.iters,
        winding_checked: false,
        kappa0,
        threshold,
    }))
}

#[cfg(test)]
mod tests;
