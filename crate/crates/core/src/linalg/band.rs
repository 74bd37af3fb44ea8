use super::C64;

/// Square complex band matrix with `kl` sub- and `ku` superdiagonals,
/// stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<C64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self { n, kl, ku, data: vec![C64::new(0.0, 0.0); n * (kl + ku + 1)] }
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), 0, 0);
        m.data.copy_from_slice(diag);
        m
    }

    /// Build from a list of (offset, values) diagonals; offset `k` places
    /// `values[i]` at `(i, i + k)` for `k >= 0` and at `(i - k, i)` for `k < 0`.
    pub fn from_diagonals(n: usize, diagonals: &[(isize, Vec<C64>)]) -> Self {
        let kl = diagonals.iter().map(|(k, _)| (-k).max(0) as usize).max().unwrap_or(0);
        let ku = diagonals.iter().map(|(k, _)| (*k).max(0) as usize).max().unwrap_or(0);
        let mut m = Self::zeros(n, kl, ku);
        for (k, vals) in diagonals {
            let len = n - k.unsigned_abs();
            assert_eq!(vals.len(), len, "diagonal {k} has wrong length");
            for (t, v) in vals.iter().enumerate() {
                let (i, j) = if *k >= 0 { (t, t + *k as usize) } else { (t + k.unsigned_abs(), t) };
                m.set(i, j, *v);
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        if self.in_band(i, j) {
            self.data[i * (self.kl + self.ku + 1) + (j + self.kl - i)]
        } else {
            C64::new(0.0, 0.0)
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        assert!(self.in_band(i, j), "({i}, {j}) outside band");
        let w = self.kl + self.ku + 1;
        self.data[i * w + (j + self.kl - i)] = v;
    }

    fn cols(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.kl)..(i + self.ku + 1).min(self.n)
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.n);
        (0..self.n).map(|i| self.cols(i).map(|j| self.get(i, j) * x[j]).sum()).collect()
    }

    pub fn mul(&self, other: &BandMatrix) -> BandMatrix {
        assert_eq!(self.n, other.n);
        let mut out = BandMatrix::zeros(self.n, self.kl + other.kl, self.ku + other.ku);
        for i in 0..self.n {
            for k in self.cols(i) {
                let a = self.get(i, k);
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in other.cols(k) {
                    let idx = i * (out.kl + out.ku + 1) + (j + out.kl - i);
                    out.data[idx] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn add(&self, other: &BandMatrix) -> BandMatrix {
        self.axpy(C64::new(1.0, 0.0), other)
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: C64, other: &BandMatrix) -> BandMatrix {
        assert_eq!(self.n, other.n);
        let mut out = BandMatrix::zeros(self.n, self.kl.max(other.kl), self.ku.max(other.ku));
        for i in 0..self.n {
            for j in self.cols(i) {
                let v = out.get(i, j) + self.get(i, j);
                out.set(i, j, v);
            }
            for j in other.cols(i) {
                let v = out.get(i, j) + alpha * other.get(i, j);
                out.set(i, j, v);
            }
        }
        out
    }

    pub fn scale(&self, alpha: C64) -> BandMatrix {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    pub fn adjoint(&self) -> BandMatrix {
        let mut out = BandMatrix::zeros(self.n, self.ku, self.kl);
        for i in 0..self.n {
            for j in self.cols(i) {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    /// Largest entrywise deviation from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in self.cols(i) {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Number of negative eigenvalues of a Hermitian band matrix, from the
    /// pivots of an unpivoted band LDL^H factorization (Sylvester's law of
    /// inertia). Exactly vanishing pivots are nudged to a tiny positive value.
    pub fn hermitian_negatives(&self) -> usize {
        let b = self.kl.max(self.ku);
        let n = self.n;
        let scale = (0..n).map(|i| self.get(i, i).norm()).fold(0.0, f64::max).max(1e-300);
        let tiny = scale * f64::EPSILON * f64::EPSILON;
        // l[i * b + t] holds L[i, i - 1 - t]
        let mut l = vec![C64::new(0.0, 0.0); n * b.max(1)];
        let mut d = vec![0.0f64; n];
        let mut negatives = 0;
        for i in 0..n {
            let j0 = i.saturating_sub(b);
            for j in j0..i {
                let mut acc = self.get(i, j);
                let k0 = i.saturating_sub(b).max(j.saturating_sub(b));
                for k in k0..j {
                    acc -= l[i * b + (i - 1 - k)] * d[k] * l[j * b + (j - 1 - k)].conj();
                }
                l[i * b + (i - 1 - j)] = acc / d[j];
            }
            let mut di = self.get(i, i).re;
            for k in j0..i {
                di -= l[i * b + (i - 1 - k)].norm_sqr() * d[k];
            }
            if di == 0.0 {
                di = tiny;
            }
            if di < 0.0 {
                negatives += 1;
            }
            d[i] = di;
        }
        negatives
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<C64> {
        nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }
}
