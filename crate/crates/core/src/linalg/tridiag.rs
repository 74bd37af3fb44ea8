use super::C64;

/// LU factorization of a complex tridiagonal matrix with partial pivoting
/// (the `gttrf`/`gttrs` scheme). The upper factor gains a second
/// superdiagonal when rows are interchanged.
#[derive(Debug, Clone)]
pub struct TriLu {
    dl: Vec<C64>,
    d: Vec<C64>,
    du: Vec<C64>,
    du2: Vec<C64>,
    swapped: Vec<bool>,
}

impl TriLu {
    /// Factor the matrix with subdiagonal `sub` (len n-1), diagonal `diag`
    /// (len n) and superdiagonal `sup` (len n-1).
    pub fn new(sub: &[C64], diag: &[C64], sup: &[C64]) -> Self {
        let n = diag.len();
        assert!(n >= 1 && sub.len() + 1 == n && sup.len() + 1 == n);
        let mut dl = sub.to_vec();
        let mut d = diag.to_vec();
        let mut du = sup.to_vec();
        let mut du2 = vec![C64::new(0.0, 0.0); n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].norm() >= dl[i].norm() {
                if d[i] != C64::new(0.0, 0.0) {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        Self { dl, d, du, du2, swapped }
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// True when a pivot vanished exactly.
    pub fn is_singular(&self) -> bool {
        self.d.iter().any(|p| *p == C64::new(0.0, 0.0))
    }

    pub fn solve_in_place(&self, b: &mut [C64]) {
        let n = self.d.len();
        assert_eq!(b.len(), n);
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }

    /// `ln det` as a complex number whose imaginary part is the phase modulo 2*pi.
    pub fn log_det(&self) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for p in &self.d {
            acc += p.ln();
        }
        let swaps = self.swapped.iter().filter(|s| **s).count();
        if swaps % 2 == 1 {
            acc += C64::new(0.0, std::f64::consts::PI);
        }
        acc
    }
}

/// Number of negative eigenvalues of a Hermitian tridiagonal matrix given by
/// its real diagonal and the squared moduli of its off-diagonal entries
/// (Sturm count through the LDL^H pivots).
pub fn hermitian_tridiag_negatives(diag: &[f64], off_sq: &[f64]) -> usize {
    let n = diag.len();
    assert!(off_sq.len() + 1 == n || n == 0);
    let scale = diag.iter().map(|d| d.abs()).fold(0.0, f64::max).max(1e-300);
    let tiny = scale * f64::EPSILON * f64::EPSILON;
    let mut count = 0;
    let mut p = 0.0;
    for i in 0..n {
        p = if i == 0 { diag[0] } else { diag[i] - off_sq[i - 1] / p };
        if p == 0.0 {
            p = tiny;
        }
        if p < 0.0 {
            count += 1;
        }
    }
    count
}
