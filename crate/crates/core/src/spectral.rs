//! Mode-by-mode spectrum of the linearized operator at the radial solution.
//!
//! Expanding in spherical harmonics of degree `k` reduces
//! `-Δψ = Λ p|x|^α u^{p-1} ψ` on the ball to the Sturm-Liouville problems
//!
//! ```text
//! -(r^{N-1} ψ')' + μ_k r^{N-3} ψ = Λ p r^{N-1+α} u^{p-1} ψ,   ψ(1) = 0,
//! ```
//!
//! with `ψ'(0) = 0` for `k = 0` and `ψ(0) = 0` otherwise. Each one is
//! discretized by cubic finite elements into a symmetric banded pencil.
//! Eigenvalue counts below a threshold come from the inertia of the shifted
//! stiffness matrix; [`prufer_count`] recomputes them by Prüfer-angle
//! shooting on the continuous problem.

use serde::{Deserialize, Serialize};

use crate::banded::{Pencil, SymBanded};
use crate::error::{HenonError, Result};
use crate::fem::{CubicSpace, OriginBc};
use crate::mesh::Mesh;
use crate::ode::Dopri5;
use crate::params::HenonParams;
use crate::radial::{RadialProfile, SERIES_START};

/// `|Λ_{1,1} - 1|` below this flags a degenerate solution.
pub const DEGENERACY_TOL: f64 = 1e-8;
/// Eigenpair residual accepted without refinement.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-8;

/// Eigenvalue `k(k + N - 2)` of the Laplace-Beltrami operator on `S^{N-1}`.
pub fn angular_eigenvalue(k: usize, n: usize) -> f64 {
    (k * (k + n - 2)) as f64
}

fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

/// Dimension of the space of degree-`k` spherical harmonics in `R^N`.
pub fn multiplicity(k: usize, n: usize) -> u64 {
    match k {
        0 => 1,
        1 => n as u64,
        _ => binomial(k + n - 1, n - 1) - binomial(k + n - 3, n - 1),
    }
}

/// Where the weight of the pencil comes from; kept so the problem can be
/// re-discretized and independently re-solved by shooting.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub enum WeightSource {
    /// `p r^{N-1+α} u_p^{p-1}` for the radial solution with first zero `r0`.
    Profile { params: HenonParams, first_zero: f64, amplitude: f64, ivp_tol: f64 },
    /// `r^{N-1+α}` on the ball of the given radius.
    Power { n: usize, alpha: f64, radius: f64 },
}

impl WeightSource {
    fn dim(&self) -> usize {
        match self {
            WeightSource::Profile { params, .. } => params.n,
            WeightSource::Power { n, .. } => *n,
        }
    }

    fn radius(&self) -> f64 {
        match self {
            WeightSource::Profile { .. } => 1.0,
            WeightSource::Power { radius, .. } => *radius,
        }
    }

    /// Weight at sorted radii, including the `r^{N-1+α}` factor.
    fn weight(&self, radii: &[f64]) -> Result<Vec<f64>> {
        match *self {
            WeightSource::Profile { params, first_zero, amplitude, ivp_tol } => {
                let shape = crate::radial::RadialProfile::sample_params(&params, first_zero, radii, ivp_tol)?;
                let (n, a, p) = (params.dim(), params.alpha, params.p);
                Ok(radii
                    .iter()
                    .zip(&shape.u)
                    .map(|(&r, &u)| p * amplitude * r.powf(n - 1.0 + a) * u.max(0.0).powf(p - 1.0))
                    .collect())
            }
            WeightSource::Power { n, alpha, .. } => {
                Ok(radii.iter().map(|&r| r.powf(n as f64 - 1.0 + alpha)).collect())
            }
        }
    }
}

/// One angular mode of the linearized problem, discretized.
#[derive(Debug, Clone)]
pub struct ModeProblem {
    pub k: usize,
    pub mu_k: f64,
    pub bc_origin: OriginBc,
    pub source: WeightSource,
    space: CubicSpace,
    pencil: Pencil,
}

impl ModeProblem {
    /// Mode `k` at the radial solution, on the profile's own mesh.
    pub fn new(profile: &RadialProfile, k: usize) -> Result<Self> {
        Self::from_source(profile_source(profile), profile.mesh.clone(), k)
    }

    pub fn from_source(source: WeightSource, mesh: Mesh, k: usize) -> Result<Self> {
        let weights = source.weight(&crate::fem::quadrature(&mesh).0)?;
        Self::with_weights(source, mesh, k, weights)
    }

    fn with_weights(source: WeightSource, mesh: Mesh, k: usize, weights: Vec<f64>) -> Result<Self> {
        let n = source.dim();
        if (mesh.radius() - source.radius()).abs() > 1e-12 * source.radius() {
            return Err(HenonError::InvalidArgument("mesh radius does not match the problem".into()));
        }
        let bc_origin = if k == 0 { OriginBc::Natural } else { OriginBc::Dirichlet };
        let space = CubicSpace::new(mesh, bc_origin);
        let mu_k = angular_eigenvalue(k, n);
        let qr = space.quad_points();
        let flux: Vec<f64> = qr.iter().map(|&r| r.powi(n as i32 - 1)).collect();
        let potential: Vec<f64> = qr.iter().map(|&r| mu_k * r.powi(n as i32 - 3)).collect();
        let zero = vec![0.0; qr.len()];
        let a = space.assemble(&flux, &potential);
        let b = space.assemble(&zero, &weights);
        Ok(Self { k, mu_k, bc_origin, source, space, pencil: Pencil::new(a, b) })
    }

    pub fn space(&self) -> &CubicSpace {
        &self.space
    }

    pub fn stiffness(&self) -> &SymBanded {
        &self.pencil.a
    }

    pub fn weight_matrix(&self) -> &SymBanded {
        &self.pencil.b
    }

    /// Number of discrete eigenvalues strictly below `threshold`.
    pub fn count_below(&self, threshold: f64) -> usize {
        self.pencil.count_below(threshold)
    }

    fn refined(&self) -> Result<Self> {
        Self::from_source(self.source, self.space.mesh().refined(), self.k)
    }
}

pub fn profile_source(profile: &RadialProfile) -> WeightSource {
    WeightSource::Profile {
        params: profile.params,
        first_zero: profile.first_zero,
        amplitude: profile.amplitude,
        ivp_tol: profile.ivp_tol,
    }
}

/// All modes `0..=k_max` of one profile, sharing the sampled weight.
pub fn mode_problems(profile: &RadialProfile, k_max: usize) -> Result<Vec<ModeProblem>> {
    let source = profile_source(profile);
    let weights = source.weight(&crate::fem::quadrature(&profile.mesh).0)?;
    (0..=k_max)
        .map(|k| ModeProblem::with_weights(source, profile.mesh.clone(), k, weights.clone()))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeSpectrum {
    pub p: f64,
    pub k: usize,
    pub mu_k: f64,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Radii of the full dof vector (boundary dofs included).
    pub radii: Vec<f64>,
    /// Eigenfunctions on `radii`, normalized by `p∫ r^{N-1+α} u^{p-1} ψ² = 1`.
    pub eigenfunctions: Vec<Vec<f64>>,
    /// Interior sign changes of each eigenfunction.
    pub zero_counts: Vec<usize>,
}

impl ModeSpectrum {
    /// Values of eigenfunction `i` on the vertices of the mesh.
    pub fn on_mesh(&self, i: usize) -> Vec<f64> {
        self.eigenfunctions[i].iter().step_by(3).copied().collect()
    }
}

fn sign_changes(v: &[f64]) -> usize {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut last = 0.0f64;
    let mut count = 0;
    for &x in v {
        if x.abs() <= 1e-12 * scale {
            continue;
        }
        if last != 0.0 && x.signum() != last.signum() {
            count += 1;
        }
        last = x;
    }
    count
}

/// The lowest `num_eigs` eigenpairs of the mode problem.
pub fn solve_mode_spectrum(problem: &ModeProblem, num_eigs: usize) -> Result<ModeSpectrum> {
    if num_eigs == 0 {
        return Err(HenonError::InvalidArgument("num_eigs must be at least 1".into()));
    }
    match try_spectrum(problem, num_eigs) {
        Ok(s) => Ok(s),
        Err(HenonError::Discretization(_)) => try_spectrum(&problem.refined()?, num_eigs),
        Err(e) => Err(e),
    }
}

fn try_spectrum(problem: &ModeProblem, num_eigs: usize) -> Result<ModeSpectrum> {
    let p = match problem.source {
        WeightSource::Profile { params, .. } => params.p,
        WeightSource::Power { .. } => 1.0,
    };
    let mut eigenvalues = Vec::with_capacity(num_eigs);
    let mut residuals = Vec::with_capacity(num_eigs);
    let mut eigenfunctions = Vec::with_capacity(num_eigs);
    let mut zero_counts = Vec::with_capacity(num_eigs);
    for i in 0..num_eigs {
        let pair = problem.pencil.eigenpair(i)?;
        if pair.residual > EIGEN_RESIDUAL_TOL {
            return Err(HenonError::Discretization(format!(
                "eigenpair {i} of mode {} has residual {:.3e}",
                problem.k, pair.residual
            )));
        }
        let mut full = problem.space.expand(&pair.vector);
        // sign convention: positive just inside r = 1
        let last = full.len() - 2;
        if full[last] < 0.0 {
            full.iter_mut().for_each(|x| *x = -*x);
        }
        let zeros = sign_changes(&full[1..full.len() - 1]);
        if zeros != i {
            return Err(HenonError::Discretization(format!(
                "eigenfunction {i} of mode {} has {zeros} interior zeros",
                problem.k
            )));
        }
        eigenvalues.push(pair.value);
        residuals.push(pair.residual);
        eigenfunctions.push(full);
        zero_counts.push(zeros);
    }
    Ok(ModeSpectrum {
        p,
        k: problem.k,
        mu_k: problem.mu_k,
        eigenvalues,
        residuals,
        radii: problem.space.dof_radii(),
        eigenfunctions,
        zero_counts,
    })
}

/// Number of eigenvalues of the continuous mode problem strictly below
/// `threshold`, from the Prüfer angle of the solution regular at the origin.
///
/// With `S ψ = ρ sin θ`, `r^{N-1} ψ' = ρ cos θ` and `S = r^{N-2}`, the angle
/// obeys, in `t = ln r`,
/// `θ' = cos²θ + (N-2) sinθ cosθ + (Λ W r^{3-N} - μ) sin²θ`,
/// which is regular at `r = 0`; the regular solution starts at the fixed
/// point `tan θ = 1/k` (`θ = π/2` for `k = 0`). The count is `⌊θ(R)/π⌋`.
pub fn prufer_count(problem: &ModeProblem, threshold: f64) -> Result<usize> {
    prufer_angle(&problem.source, problem.k, threshold).map(|theta| (theta / std::f64::consts::PI).floor() as usize)
}

/// Final Prüfer angle at `r = R` for spectral parameter `lambda`.
pub fn prufer_angle(source: &WeightSource, k: usize, lambda: f64) -> Result<f64> {
    let n = source.dim();
    let nf = n as f64;
    let mu = angular_eigenvalue(k, n);
    let theta0 = if k == 0 { std::f64::consts::FRAC_PI_2 } else { (1.0 / k as f64).atan() };
    let mut ode = Dopri5::new(1e-11);
    ode.h_init = 1e-3;
    match *source {
        WeightSource::Profile { params, first_zero, .. } => {
            let (a, p) = (params.alpha, params.p);
            let f = move |t: f64, y: &[f64; 3]| {
                let rho = first_zero * t.exp();
                let (s, c) = y[2].sin_cos();
                let pot = lambda * p * rho.powf(2.0 + a) * y[0].max(0.0).powf(p - 1.0);
                [
                    rho * y[1],
                    -(nf - 1.0) * y[1] - rho.powf(1.0 + a) * y[0].abs().powf(p - 1.0) * y[0],
                    c * c + (nf - 2.0) * s * c + (pot - mu) * s * s,
                ]
            };
            let rho0 = SERIES_START;
            let start = [
                1.0 - rho0.powf(2.0 + a) / ((2.0 + a) * (nf + a)),
                -rho0.powf(1.0 + a) / (nf + a),
                theta0,
            ];
            let t0 = (rho0 / first_zero).ln();
            let y = ode.integrate(&f, t0, start, 0.0)?;
            Ok(y[2])
        }
        WeightSource::Power { alpha, radius, .. } => {
            let f = move |t: f64, y: &[f64; 1]| {
                let r = t.exp();
                let (s, c) = y[0].sin_cos();
                [c * c + (nf - 2.0) * s * c + (lambda * r.powf(2.0 + alpha) - mu) * s * s]
            };
            let t0 = (1e-8 * radius).ln();
            let y = ode.integrate(&f, t0, [theta0], radius.ln())?;
            Ok(y[0])
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MorseReport {
    pub p: f64,
    pub lambda_11: f64,
    pub morse_index: u64,
    /// 1 if `Λ_{1,1} ≥ 1`, `N + 1` otherwise.
    pub morse_index_shortcut: u64,
    pub degenerate: bool,
    /// `#{i : Λ_{i,k} < 1}` for `k = 0..=k_max`.
    pub counts: Vec<usize>,
    /// `Λ_{1,k}` for `k = 0..=k_max`.
    pub first_eigenvalues: Vec<f64>,
}

/// Morse index as the multiplicity-weighted number of eigenvalues below 1,
/// truncated at `k_max` once `Λ_{1,k_max} > 1` certifies the tail.
pub fn morse_index(profile: &RadialProfile, k_max: usize) -> Result<MorseReport> {
    if k_max < 2 {
        return Err(HenonError::InvalidArgument("k_max must be at least 2".into()));
    }
    let n = profile.params.n;
    let modes = mode_problems(profile, k_max)?;
    let mut counts = Vec::with_capacity(k_max + 1);
    let mut first = Vec::with_capacity(k_max + 1);
    let mut morse = 0u64;
    for (k, mode) in modes.iter().enumerate() {
        let c = mode.count_below(1.0);
        morse += multiplicity(k, n) * c as u64;
        counts.push(c);
        first.push(mode.pencil.eigenpair(0)?.value);
    }
    let tail = first[k_max];
    if !(tail > 1.0) {
        return Err(HenonError::TruncationUncertified { k: k_max, value: tail });
    }
    let lambda_11 = first[1];
    Ok(MorseReport {
        p: profile.params.p,
        lambda_11,
        morse_index: morse,
        morse_index_shortcut: if lambda_11 >= 1.0 { 1 } else { n as u64 + 1 },
        degenerate: (lambda_11 - 1.0).abs() < DEGENERACY_TOL,
        counts,
        first_eigenvalues: first,
    })
}

/// `Λ_{1,1}` alone, the quantity whose crossings of 1 are the degeneracy points.
pub fn lambda_11(profile: &RadialProfile) -> Result<f64> {
    Ok(ModeProblem::new(profile, 1)?.pencil.eigenpair(0)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::{solve_radial, RadialOptions};

    fn profile(p: f64, points: usize) -> RadialProfile {
        let prm = HenonParams::new(3, 1.0, p).unwrap();
        solve_radial(&prm, &RadialOptions::with_mesh(Mesh::cosine(points).unwrap())).unwrap()
    }

    #[test]
    fn angular_values() {
        assert_eq!(angular_eigenvalue(0, 7), 0.0);
        assert_eq!(angular_eigenvalue(1, 3), 2.0);
        assert_eq!(angular_eigenvalue(2, 3), 6.0);
        for n in 3..8 {
            assert_eq!(angular_eigenvalue(1, n), (n - 1) as f64);
            for k in 0..6 {
                assert!(angular_eigenvalue(k + 1, n) > angular_eigenvalue(k, n));
            }
        }
    }

    /// Degree-k harmonic polynomials on R^3 counted by brute force: the
    /// kernel of the Laplacian from degree-k to degree-(k-2) monomials.
    fn harmonic_dimension_r3(k: usize) -> usize {
        let monos = |d: usize| -> Vec<(usize, usize, usize)> {
            let mut v = Vec::new();
            for a in 0..=d {
                for b in 0..=(d - a) {
                    v.push((a, b, d - a - b));
                }
            }
            v
        };
        let src = monos(k);
        if k < 2 {
            return src.len();
        }
        let dst = monos(k - 2);
        let mut m = nalgebra::DMatrix::<f64>::zeros(dst.len(), src.len());
        for (j, &(a, b, c)) in src.iter().enumerate() {
            for (da, db, dc, coef) in [
                (2usize, 0usize, 0usize, a * a.saturating_sub(1)),
                (0, 2, 0, b * b.saturating_sub(1)),
                (0, 0, 2, c * c.saturating_sub(1)),
            ] {
                if coef == 0 {
                    continue;
                }
                let target = (a - da, b - db, c - dc);
                let i = dst.iter().position(|&m| m == target).unwrap();
                m[(i, j)] += coef as f64;
            }
        }
        let rank = m.svd(false, false).singular_values.iter().filter(|&&s| s > 1e-9).count();
        src.len() - rank
    }

    #[test]
    fn multiplicities() {
        assert_eq!(multiplicity(0, 5), 1);
        assert_eq!(multiplicity(1, 3), 3);
        assert_eq!(multiplicity(2, 3), 5);
        for k in 0..7 {
            assert_eq!(multiplicity(k, 3) as usize, harmonic_dimension_r3(k), "k={k}");
        }
        // N = 4: (k+1)^2
        for k in 0..6 {
            assert_eq!(multiplicity(k, 4), ((k + 1) * (k + 1)) as u64);
        }
    }

    #[test]
    fn radial_mode_has_exact_eigenvalue() {
        let prof = profile(2.0, 401);
        let mode = ModeProblem::new(&prof, 0).unwrap();
        let spec = solve_mode_spectrum(&mode, 3).unwrap();
        assert!((spec.eigenvalues[0] * 2.0 - 1.0).abs() < 1e-6, "{}", spec.eigenvalues[0]);
        assert!(spec.eigenvalues[1] > 1.0);
        assert_eq!(spec.zero_counts, vec![0, 1, 2]);
    }

    #[test]
    fn prufer_counts_match_known_spectrum() {
        let prof = profile(3.0, 401);
        let m0 = ModeProblem::new(&prof, 0).unwrap();
        assert_eq!(prufer_count(&m0, 1.0 / 3.0 + 1e-3).unwrap(), 1);
        assert_eq!(prufer_count(&m0, 1.0 / 3.0 - 1e-3).unwrap(), 0);
        let m2 = ModeProblem::new(&prof, 2).unwrap();
        assert_eq!(prufer_count(&m2, 1.0).unwrap(), 0);
    }

    #[test]
    fn morse_index_needs_kmax_two() {
        let prof = profile(2.0, 201);
        assert!(morse_index(&prof, 1).is_err());
    }

    #[test]
    fn sign_change_counter() {
        assert_eq!(sign_changes(&[1.0, 2.0, -1.0, 0.0, -2.0, 3.0]), 2);
        assert_eq!(sign_changes(&[0.0, 1.0, 1.0]), 0);
    }
}
