//! Banded matrices: symmetric storage with LDLᵀ and Sylvester inertia, a
//! pivoted LU for general band matrices, and a generalized symmetric
//! eigensolver built from inertia bisection plus inverse iteration.

use crate::error::{HenonError, Result};

/// Symmetric band matrix, lower triangle stored row by row.
#[derive(Debug, Clone)]
pub struct SymBanded {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl SymBanded {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self { n, bw, data: vec![0.0; n * (bw + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i >= j && i - j <= self.bw);
        i * (self.bw + 1) + (i - j)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// Adds `v` to entry `(i, j)` (and implicitly to `(j, i)`).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let j0 = i.saturating_sub(self.bw);
            for j in j0..=i {
                let a = self.data[self.idx(i, j)];
                y[i] += a * x[j];
                if i != j {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    pub fn dot(&self, x: &[f64], y: &[f64]) -> f64 {
        self.matvec(x).iter().zip(y).map(|(a, b)| a * b).sum()
    }

    /// `self - sigma * other`, both with the same shape.
    pub fn shifted(&self, sigma: f64, other: &SymBanded) -> SymBanded {
        assert_eq!(self.n, other.n);
        let bw = self.bw.max(other.bw);
        let mut out = SymBanded::zeros(self.n, bw);
        for i in 0..self.n {
            for j in i.saturating_sub(bw)..=i {
                let v = self.get(i, j) - sigma * other.get(i, j);
                let k = out.idx(i, j);
                out.data[k] = v;
            }
        }
        out
    }

    /// LDLᵀ factorization without pivoting.
    pub fn ldlt(&self) -> Ldlt {
        let (n, bw) = (self.n, self.bw);
        let mut l = self.data.clone();
        let mut d = vec![0.0; n];
        let at = |i: usize, j: usize| i * (bw + 1) + (i - j);
        for j in 0..n {
            let k0 = j.saturating_sub(bw);
            let mut dj = l[at(j, j)];
            for k in k0..j {
                let ljk = l[at(j, k)];
                dj -= ljk * ljk * d[k];
            }
            if dj == 0.0 {
                dj = f64::EPSILON * (1.0 + self.data[at(j, j)].abs());
            }
            d[j] = dj;
            let i_end = (j + bw).min(n - 1);
            for i in (j + 1)..=i_end {
                let mut s = l[at(i, j)];
                let k_lo = i.saturating_sub(bw).max(k0);
                for k in k_lo..j {
                    s -= l[at(i, k)] * l[at(j, k)] * d[k];
                }
                l[at(i, j)] = s / dj;
            }
        }
        Ldlt { n, bw, l, d }
    }
}

#[derive(Debug, Clone)]
pub struct Ldlt {
    n: usize,
    bw: usize,
    l: Vec<f64>,
    d: Vec<f64>,
}

impl Ldlt {
    /// Number of negative pivots, equal to the number of negative
    /// eigenvalues by Sylvester's law of inertia.
    pub fn negatives(&self) -> usize {
        self.d.iter().filter(|&&x| x < 0.0).count()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw) = (self.n, self.bw);
        let at = |i: usize, j: usize| i * (bw + 1) + (i - j);
        let mut x = b.to_vec();
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.l[at(i, k)] * x[k];
            }
            x[i] = s;
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..=(i + bw).min(n - 1) {
                s -= self.l[at(k, i)] * x[k];
            }
            x[i] = s;
        }
        x
    }
}

/// General band matrix with `kl` sub- and `ku` super-diagonals, stored with
/// `kl` extra super-diagonals of room for pivoting fill-in.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if j + self.kl < i || j > i + self.ku + self.kl {
            None
        } else {
            Some(i * self.width + (j + self.kl - i))
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(j + self.kl >= i && j <= i + self.ku, "entry ({i}, {j}) outside band");
        let k = self.slot(i, j).unwrap();
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.ku {
            return 0.0;
        }
        self.data[self.slot(i, j).unwrap()]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let j0 = i.saturating_sub(self.kl);
                let j1 = (i + self.ku).min(self.n - 1);
                (j0..=j1).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// LU with partial pivoting.
    pub fn lu(mut self) -> Result<BandLu> {
        let (n, kl, ku, w) = (self.n, self.kl, self.ku, self.width);
        let mut piv = vec![0usize; n];
        let mut scale = 0.0f64;
        for v in &self.data {
            scale = scale.max(v.abs());
        }
        for k in 0..n {
            let i_end = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[k * w + kl].abs();
            for i in (k + 1)..=i_end {
                let v = self.data[i * w + (k + kl - i)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            piv[k] = p;
            if best == 0.0 || best <= 1e-300 * scale.max(1e-300) {
                return Err(HenonError::SingularMatrix(k));
            }
            let j_end = (k + ku + kl).min(n - 1);
            if p != k {
                for j in k..=j_end {
                    let a = k * w + (j + kl - k);
                    let b = p * w + (j + kl - p);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[k * w + kl];
            for i in (k + 1)..=i_end {
                let ik = i * w + (k + kl - i);
                let m = self.data[ik] / pivot;
                self.data[ik] = m;
                if m != 0.0 {
                    for j in (k + 1)..=j_end {
                        let kj = self.data[k * w + (j + kl - k)];
                        self.data[i * w + (j + kl - i)] -= m * kj;
                    }
                }
            }
        }
        Ok(BandLu { m: self, piv })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu {
    m: BandMatrix,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let BandMatrix { n, kl, ku, width: w, ref data } = self.m;
        let mut x = b.to_vec();
        // The multipliers of step k were applied after the row swap of step
        // k, so replay swaps and eliminations in order.
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                x.swap(k, p);
            }
            let i_end = (k + kl).min(n - 1);
            for i in (k + 1)..=i_end {
                x[i] -= data[i * w + (k + kl - i)] * x[k];
            }
        }
        for i in (0..n).rev() {
            let j_end = (i + ku + kl).min(n - 1);
            let mut s = x[i];
            for j in (i + 1)..=j_end {
                s -= data[i * w + (j + kl - i)] * x[j];
            }
            x[i] = s / data[i * w + kl];
        }
        x
    }
}

/// Pencil `(A, B)` with `A` symmetric and `B` symmetric positive definite.
#[derive(Debug, Clone)]
pub struct Pencil {
    pub a: SymBanded,
    pub b: SymBanded,
}

#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub value: f64,
    /// `B`-normalized: `vᵀ B v = 1`.
    pub vector: Vec<f64>,
    /// `|A v - λ B v| / |A v|` in the Euclidean norm.
    pub residual: f64,
}

impl Pencil {
    pub fn new(a: SymBanded, b: SymBanded) -> Self {
        assert_eq!(a.dim(), b.dim());
        Self { a, b }
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// Number of eigenvalues strictly below `sigma`.
    pub fn count_below(&self, sigma: f64) -> usize {
        self.a.shifted(sigma, &self.b).ldlt().negatives()
    }

    /// The `index`-th eigenvalue (0-based, ascending) and its eigenvector.
    pub fn eigenpair(&self, index: usize) -> Result<Eigenpair> {
        if index >= self.dim() {
            return Err(HenonError::InvalidArgument(format!(
                "eigenvalue index {index} out of range for dimension {}",
                self.dim()
            )));
        }
        let (lo, hi) = self.bracket(index)?;
        let value = self.bisect(index, lo, hi);
        self.polish(value)
    }

    fn bracket(&self, index: usize) -> Result<(f64, f64)> {
        let mut lo = -1.0;
        let mut step = 1.0;
        let mut guard = 0;
        while self.count_below(lo) > index {
            lo -= step;
            step *= 2.0;
            guard += 1;
            if guard > 200 {
                return Err(HenonError::Discretization("cannot bracket eigenvalue from below".into()));
            }
        }
        let mut hi = lo.max(0.0) + 1.0;
        step = hi - lo;
        guard = 0;
        while self.count_below(hi) <= index {
            lo = hi;
            hi += step;
            step *= 2.0;
            guard += 1;
            if guard > 200 {
                return Err(HenonError::Discretization("cannot bracket eigenvalue from above".into()));
            }
        }
        Ok((lo, hi))
    }

    fn bisect(&self, index: usize, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > index {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs()) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    fn polish(&self, value: f64) -> Result<Eigenpair> {
        let n = self.dim();
        let shift = value + 1e-10 * value.abs().max(1e-12);
        let fact = self.a.shifted(shift, &self.b).ldlt();
        // deterministic start vector with no special symmetry
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.37 * ((i as f64) * 0.61).sin()).collect();
        for _ in 0..4 {
            let bv = self.b.matvec(&v);
            v = fact.solve(&bv);
            let norm = self.b.dot(&v, &v).sqrt();
            if !norm.is_finite() || norm == 0.0 {
                return Err(HenonError::Discretization("inverse iteration broke down".into()));
            }
            v.iter_mut().for_each(|x| *x /= norm);
        }
        let av = self.a.matvec(&v);
        let bv = self.b.matvec(&v);
        let rq: f64 = av.iter().zip(&v).map(|(a, b)| a * b).sum();
        let res: f64 = av.iter().zip(&bv).map(|(a, b)| (a - rq * b).powi(2)).sum::<f64>().sqrt();
        let an: f64 = av.iter().map(|a| a * a).sum::<f64>().sqrt();
        Ok(Eigenpair { value: rq, vector: v, residual: res / an.max(f64::MIN_POSITIVE) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> SymBanded {
        let mut a = SymBanded::zeros(n, 1);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
        }
        a
    }

    fn identity(n: usize) -> SymBanded {
        let mut b = SymBanded::zeros(n, 0);
        for i in 0..n {
            b.add(i, i, 1.0);
        }
        b
    }

    #[test]
    fn tridiagonal_eigenvalues_match_closed_form() {
        let n = 50;
        let pencil = Pencil::new(laplacian(n), identity(n));
        for k in 0..4 {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            let pair = pencil.eigenpair(k).unwrap();
            assert!((pair.value - exact).abs() < 1e-13, "k={k}");
            assert!(pair.residual < 1e-10);
        }
    }

    #[test]
    fn inertia_counts() {
        let n = 30;
        let pencil = Pencil::new(laplacian(n), identity(n));
        let exact: Vec<f64> = (1..=n)
            .map(|k| 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / (n + 1) as f64).cos())
            .collect();
        for &s in &[0.05, 0.5, 1.0, 2.5, 3.9] {
            let expected = exact.iter().filter(|&&l| l < s).count();
            assert_eq!(pencil.count_below(s), expected);
        }
    }

    #[test]
    fn band_lu_solves_nonsymmetric_system() {
        let n = 40;
        let mut m = BandMatrix::zeros(n, 2, 1);
        for i in 0..n {
            m.add(i, i, 0.1 + (i as f64 * 0.3).sin());
            if i + 1 < n {
                m.add(i, i + 1, 1.3);
            }
            if i >= 1 {
                m.add(i, i - 1, -0.7);
            }
            if i >= 2 {
                m.add(i, i - 2, 2.1);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
        let b = m.matvec(&x);
        let sol = m.clone().lu().unwrap().solve(&b);
        for (a, b) in sol.iter().zip(&x) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn ldlt_solve_matches() {
        let n = 25;
        let a = laplacian(n);
        let x: Vec<f64> = (0..n).map(|i| i as f64 * 0.1).collect();
        let b = a.matvec(&x);
        let y = a.ldlt().solve(&b);
        for (p, q) in y.iter().zip(&x) {
            assert!((p - q).abs() < 1e-11);
        }
    }
}
