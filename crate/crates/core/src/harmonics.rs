//! Zonal spherical harmonics on `S^{N-1}` as functions of `x = cos θ`, and
//! the Gauss quadrature for their weight `(1 - x²)^{(N-3)/2}`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{HenonError, Result};

/// `∫_{-1}^{1} (1 - x²)^{(N-3)/2} dx`.
pub fn weight_mass(n: usize) -> f64 {
    // I(m) = I(m - 1) 2m/(2m + 1), I(0) = 2, I(1/2) = π/2
    let twice_m = n - 3;
    let (mut acc, mut tm) = if twice_m % 2 == 0 { (2.0, 0) } else { (std::f64::consts::FRAC_PI_2, 1) };
    while tm < twice_m {
        tm += 2;
        acc *= tm as f64 / (tm as f64 + 1.0);
    }
    acc
}

/// Off-diagonal `b_j` (`j ≥ 1`) of the orthonormal three-term recurrence
/// `x Y_j = b_{j+1} Y_{j+1} + b_j Y_{j-1}`.
fn recurrence(n: usize, j: usize) -> f64 {
    let lam = (n as f64 - 2.0) / 2.0;
    let j = j as f64;
    (j * (j + 2.0 * lam - 1.0) / (4.0 * (j + lam) * (j + lam - 1.0))).sqrt()
}

/// Degrees `0..=k_max` of the orthonormal zonal harmonics sampled at the
/// nodes of an `m`-point Gauss rule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZonalBasis {
    pub n: usize,
    pub k_max: usize,
    /// Nodes in `(-1, 1)`, increasing and mirror-symmetric.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `values[q][k] = Y_k(x_q)`.
    pub values: Vec<Vec<f64>>,
    /// `derivs[q][k] = Y_k'(x_q)`.
    pub derivs: Vec<Vec<f64>>,
}

impl ZonalBasis {
    pub fn new(n: usize, k_max: usize, points: usize) -> Result<Self> {
        if n < 3 {
            return Err(HenonError::InvalidDimension(n));
        }
        if points <= k_max {
            return Err(HenonError::InvalidArgument(format!(
                "{points} angular points cannot resolve degree {k_max}"
            )));
        }
        let (nodes, weights) = gauss_rule(n, points);
        let mut values = Vec::with_capacity(points);
        let mut derivs = Vec::with_capacity(points);
        for &x in &nodes {
            let (v, d) = eval_all(n, k_max, x);
            values.push(v);
            derivs.push(d);
        }
        Ok(Self { n, k_max, nodes, weights, values, derivs })
    }

    pub fn points(&self) -> usize {
        self.nodes.len()
    }
}

/// `Y_0..=Y_{k_max}` and their derivatives at `x`.
pub fn eval_all(n: usize, k_max: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; k_max + 1];
    let mut d = vec![0.0; k_max + 1];
    v[0] = 1.0 / weight_mass(n).sqrt();
    for k in 0..k_max {
        let b1 = recurrence(n, k + 1);
        let (vm, dm, bk) = if k == 0 { (0.0, 0.0, 0.0) } else { (v[k - 1], d[k - 1], recurrence(n, k)) };
        v[k + 1] = (x * v[k] - bk * vm) / b1;
        d[k + 1] = (v[k] + x * d[k] - bk * dm) / b1;
    }
    (v, d)
}

/// Golub-Welsch for the weight `(1 - x²)^{(N-3)/2}`.
fn gauss_rule(n: usize, points: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jac = DMatrix::<f64>::zeros(points, points);
    for j in 1..points {
        let b = recurrence(n, j);
        jac[(j, j - 1)] = b;
        jac[(j - 1, j)] = b;
    }
    let eig = SymmetricEigen::new(jac);
    let mass = weight_mass(n);
    let mut pairs: Vec<(f64, f64)> = (0..points)
        .map(|i| (eig.eigenvalues[i], mass * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    // exact mirror symmetry, so odd modes of even data cancel pairwise
    let mut nodes = vec![0.0; points];
    let mut weights = vec![0.0; points];
    for i in 0..points {
        let j = points - 1 - i;
        nodes[i] = 0.5 * (pairs[i].0 - pairs[j].0);
        weights[i] = 0.5 * (pairs[i].1 + pairs[j].1);
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn legendre(k: usize, x: f64) -> f64 {
        let (mut p0, mut p1) = (1.0, x);
        if k == 0 {
            return 1.0;
        }
        for j in 1..k {
            let p2 = ((2 * j + 1) as f64 * x * p1 - j as f64 * p0) / (j + 1) as f64;
            p0 = p1;
            p1 = p2;
        }
        p1
    }

    #[test]
    fn three_dimensions_are_normalized_legendre() {
        for &x in &[-0.9, -0.2, 0.0, 0.35, 0.99] {
            let (v, _) = eval_all(3, 6, x);
            for k in 0..=6 {
                let want = ((2 * k + 1) as f64 / 2.0).sqrt() * legendre(k, x);
                assert!((v[k] - want).abs() < 1e-13, "k={k} x={x}");
            }
        }
    }

    #[test]
    fn weight_mass_values() {
        assert_eq!(weight_mass(3), 2.0);
        assert!((weight_mass(4) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!((weight_mass(5) - 4.0 / 3.0).abs() < 1e-15);
        assert!((weight_mass(6) - 3.0 * std::f64::consts::PI / 8.0).abs() < 1e-15);
    }

    #[test]
    fn orthonormal_under_quadrature() {
        for n in 3..7 {
            let b = ZonalBasis::new(n, 6, 12).unwrap();
            for i in 0..=6 {
                for j in 0..=6 {
                    let s: f64 = (0..b.points()).map(|q| b.weights[q] * b.values[q][i] * b.values[q][j]).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((s - want).abs() < 1e-12, "n={n} i={i} j={j} s={s}");
                }
            }
        }
    }

    #[test]
    fn gegenbauer_equation() {
        // (1 - x²)Y'' - (N-1) x Y' + k(k+N-2) Y = 0, Y'' by differencing Y'
        for n in 3..6 {
            for &x in &[-0.7, 0.1, 0.6] {
                let h = 1e-5;
                let (v, d) = eval_all(n, 5, x);
                let (_, dp) = eval_all(n, 5, x + h);
                let (_, dm) = eval_all(n, 5, x - h);
                for k in 0..=5 {
                    let d2 = (dp[k] - dm[k]) / (2.0 * h);
                    let mu = (k * (k + n - 2)) as f64;
                    let res = (1.0 - x * x) * d2 - (n as f64 - 1.0) * x * d[k] + mu * v[k];
                    assert!(res.abs() < 1e-6 * (1.0 + mu), "n={n} k={k} res={res}");
                }
            }
        }
    }

    #[test]
    fn rejects_underresolved_rule() {
        assert!(ZonalBasis::new(3, 8, 8).is_err());
        assert!(ZonalBasis::new(2, 1, 4).is_err());
    }
}
