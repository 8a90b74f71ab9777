//! Sweeps over `p`, degeneracy points of the radial solution and the
//! second-variation inequality for radial test functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HenonError, Result};
use crate::params::HenonParams;
use crate::radial::{solve_radial, RadialOptions, RadialProfile};
use crate::spectral::{morse_index, solve_mode_spectrum, ModeProblem, ModeSpectrum};

pub const DEFAULT_GRID: usize = 101;
pub const DEFAULT_MARGIN: f64 = 1e-2;
pub const DEFAULT_REFINE_TOL: f64 = 1e-8;
pub const DEFAULT_K_MAX: usize = 2;

/// Grid of `points` exponents in `(1 + margin, p_α - margin)`, log-spaced in
/// the distance to `p_α` so it clusters where the solution stiffens.
pub fn default_grid(n: usize, alpha: f64, points: usize, margin: f64) -> Result<Vec<f64>> {
    let p_alpha = crate::params::critical_exponent(n, alpha)?;
    if points < 2 {
        return Err(HenonError::InvalidArgument("grid needs at least two points".into()));
    }
    let d_max = p_alpha - 1.0 - margin;
    let d_min = margin;
    if !(d_max > d_min) {
        return Err(HenonError::InvalidArgument("margin too large for this p range".into()));
    }
    let (l0, l1) = (d_max.ln(), d_min.ln());
    let m = (points - 1) as f64;
    Ok((0..points).map(|i| p_alpha - (l0 + (l1 - l0) * i as f64 / m).exp()).collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanRow {
    pub p: f64,
    pub lambda_11: f64,
    pub morse_index: u64,
    pub morse_index_shortcut: u64,
    pub sup_norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanResult {
    pub n: usize,
    pub alpha: f64,
    pub k_max: usize,
    pub rows: Vec<ScanRow>,
    /// Exponents whose row failed, with the error message.
    pub failures: Vec<(f64, String)>,
}

/// Profile and Morse report at one exponent.
pub fn scan_point(n: usize, alpha: f64, p: f64, k_max: usize, opts: &RadialOptions) -> Result<ScanRow> {
    let params = HenonParams::subcritical(n, alpha, p)?;
    let profile = solve_radial(&params, opts)?;
    let report = morse_index(&profile, k_max)?;
    Ok(ScanRow {
        p,
        lambda_11: report.lambda_11,
        morse_index: report.morse_index,
        morse_index_shortcut: report.morse_index_shortcut,
        sup_norm: profile.sup_norm(),
    })
}

/// One row per grid exponent; failing rows are recorded and skipped.
pub fn scan(n: usize, alpha: f64, grid: &[f64], k_max: usize, opts: &RadialOptions) -> Result<ScanResult> {
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(HenonError::InvalidArgument("scan grid must be strictly increasing".into()));
    }
    let outcomes: Vec<(f64, Result<ScanRow>)> =
        grid.par_iter().map(|&p| (p, scan_point(n, alpha, p, k_max, opts))).collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (p, out) in outcomes {
        match out {
            Ok(row) => rows.push(row),
            Err(e) => failures.push((p, e.to_string())),
        }
    }
    Ok(ScanResult { n, alpha, k_max, rows, failures })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DegeneracyPoint {
    pub n: usize,
    pub alpha: f64,
    pub p_bar: f64,
    pub bracket: (f64, f64),
    pub lambda_11_at_root: f64,
    /// The Morse index differs across the bracket.
    pub changing: bool,
    pub morse_below: u64,
    pub morse_above: u64,
    /// `ψ_{1,1}` at `p_bar`, weighted-normalized and positive.
    pub kernel: ModeSpectrum,
}

/// Exponents where `|Λ_{1,1} - 1|` has a grid-local minimum below
/// `sqrt(tol)` without a sign change: possible tangential degeneracies.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Degeneracies {
    pub points: Vec<DegeneracyPoint>,
    pub possible_tangencies: Vec<f64>,
}

impl Degeneracies {
    pub fn changing_count(&self) -> usize {
        self.points.iter().filter(|d| d.changing).count()
    }
}

fn lambda_11_at(n: usize, alpha: f64, p: f64, opts: &RadialOptions) -> Result<f64> {
    let params = HenonParams::subcritical(n, alpha, p)?;
    let profile = solve_radial(&params, opts)?;
    crate::spectral::lambda_11(&profile)
}

/// Bisection on the sign of `Λ_{1,1}(p) - 1` down to `|Λ_{1,1} - 1| < tol`,
/// then one secant step kept only if it improves the residual.
pub fn refine_root(n: usize, alpha: f64, bracket: (f64, f64), tol: f64, opts: &RadialOptions) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = bracket;
    let mut f_lo = lambda_11_at(n, alpha, lo, opts)? - 1.0;
    let mut f_hi = lambda_11_at(n, alpha, hi, opts)? - 1.0;
    if f_lo.signum() == f_hi.signum() {
        return Err(HenonError::InvalidArgument(format!("no sign change on [{lo}, {hi}]")));
    }
    let (mut best_p, mut best_f) = if f_lo.abs() < f_hi.abs() { (lo, f_lo) } else { (hi, f_hi) };
    for _ in 0..200 {
        if best_f.abs() < tol || hi - lo < 1e-15 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = lambda_11_at(n, alpha, mid, opts)? - 1.0;
        if f_mid.abs() < best_f.abs() {
            best_p = mid;
            best_f = f_mid;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    // secant polish
    if f_hi != f_lo {
        let cand = hi - f_hi * (hi - lo) / (f_hi - f_lo);
        if cand > lo && cand < hi {
            let f_c = lambda_11_at(n, alpha, cand, opts)? - 1.0;
            if f_c.abs() < best_f.abs() {
                best_p = cand;
                best_f = f_c;
            }
        }
    }
    Ok((best_p, best_f + 1.0))
}

/// All sign changes of `Λ_{1,1} - 1` between consecutive rows, refined.
/// For `α ∈ (0, 1]` an even number of changing points triggers one grid
/// refinement around every row before failing with a parity violation.
pub fn find_degeneracy_points(scan: &ScanResult, tol: f64, opts: &RadialOptions) -> Result<Degeneracies> {
    if scan.rows.len() < 2 {
        return Err(HenonError::InvalidArgument("scan needs at least two rows".into()));
    }
    let found = locate(scan, tol, opts)?;
    if scan.alpha <= 1.0 && found.changing_count() % 2 == 0 {
        let mut grid: Vec<f64> = Vec::with_capacity(2 * scan.rows.len());
        for w in scan.rows.windows(2) {
            grid.push(w[0].p);
            grid.push(0.5 * (w[0].p + w[1].p));
        }
        grid.push(scan.rows.last().unwrap().p);
        let finer = self::scan(scan.n, scan.alpha, &grid, scan.k_max, opts)?;
        let again = locate(&finer, tol, opts)?;
        if again.changing_count() % 2 == 0 {
            return Err(HenonError::ParityViolation(again.changing_count()));
        }
        return Ok(again);
    }
    Ok(found)
}

fn locate(scan: &ScanResult, tol: f64, opts: &RadialOptions) -> Result<Degeneracies> {
    let rows = &scan.rows;
    let brackets: Vec<(usize, usize)> = (0..rows.len() - 1)
        .filter(|&i| (rows[i].lambda_11 - 1.0).signum() != (rows[i + 1].lambda_11 - 1.0).signum())
        .map(|i| (i, i + 1))
        .collect();
    let points = brackets
        .par_iter()
        .map(|&(i, j)| -> Result<DegeneracyPoint> {
            let (a, b) = (&rows[i], &rows[j]);
            let (p_bar, lam) = refine_root(scan.n, scan.alpha, (a.p, b.p), tol, opts)?;
            let params = HenonParams::subcritical(scan.n, scan.alpha, p_bar)?;
            let profile = solve_radial(&params, opts)?;
            let kernel = solve_mode_spectrum(&ModeProblem::new(&profile, 1)?, 1)?;
            Ok(DegeneracyPoint {
                n: scan.n,
                alpha: scan.alpha,
                p_bar,
                bracket: (a.p, b.p),
                lambda_11_at_root: lam,
                changing: a.morse_index != b.morse_index,
                morse_below: a.morse_index,
                morse_above: b.morse_index,
                kernel,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let dist: Vec<f64> = rows.iter().map(|r| (r.lambda_11 - 1.0).abs()).collect();
    let mut possible_tangencies = Vec::new();
    for i in 1..rows.len().saturating_sub(1) {
        let no_change = (rows[i - 1].lambda_11 - 1.0).signum() == (rows[i].lambda_11 - 1.0).signum()
            && (rows[i].lambda_11 - 1.0).signum() == (rows[i + 1].lambda_11 - 1.0).signum();
        if no_change && dist[i] < dist[i - 1] && dist[i] < dist[i + 1] && dist[i] < tol.sqrt() {
            possible_tangencies.push(rows[i].p);
        }
    }
    Ok(Degeneracies { points, possible_tangencies })
}

/// Terms of the second-variation functional for a radial test function.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuadForm {
    /// `∫ r^{N-1} v'² - p∫ r^{N-1+α} u^{p-1} v² + (p-1)(∫ r^{N-1+α} u^p v)² / ∫ r^{N-1+α} u^{p+1}`.
    pub value: f64,
    /// `∫ r^{N-1} v'² + p∫ r^{N-1+α} u^{p-1} v²`, the size the value is judged against.
    pub scale: f64,
}

/// Evaluates the second-variation functional at the radial solution for the
/// test function `v(r)` (returning `(v, v')`), which must vanish at `r = 1`.
pub fn quadform_r4<F>(profile: &RadialProfile, v: F) -> Result<QuadForm>
where
    F: Fn(f64) -> (f64, f64),
{
    let (qr, qw) = crate::fem::quadrature(&profile.mesh);
    let s = profile.sample(&qr)?;
    let n = profile.params.dim();
    let (a, p) = (profile.params.alpha, profile.params.p);
    let (mut grad, mut mass, mut lin, mut norm) = (0.0, 0.0, 0.0, 0.0);
    for (i, (&r, &w)) in qr.iter().zip(&qw).enumerate() {
        let (val, der) = v(r);
        if !val.is_finite() || !der.is_finite() {
            return Err(HenonError::InvalidArgument(format!("test function not finite at r = {r}")));
        }
        let u = s.u[i].max(0.0);
        let rw = r.powf(n - 1.0 + a);
        grad += w * r.powf(n - 1.0) * der * der;
        mass += w * rw * u.powf(p - 1.0) * val * val;
        lin += w * rw * u.powf(p) * val;
        norm += w * rw * u.powf(p + 1.0);
    }
    // normalized shape: u = ‖u‖ ū, every u-term carries ‖u‖^{p-1} = amplitude
    let amp = profile.amplitude;
    let value = grad - p * amp * mass + (p - 1.0) * amp * lin * lin / norm;
    Ok(QuadForm { value, scale: grad + p * amp * mass })
}

/// The functional at `v = u_p` itself (its cubic interpolant on the profile
/// mesh), where it vanishes exactly.
pub fn quadform_equality_case(profile: &RadialProfile) -> Result<QuadForm> {
    let space = crate::fem::CubicSpace::new(profile.mesh.clone(), crate::fem::OriginBc::Natural);
    let s = profile.sample(&space.free_radii())?;
    quadform_r4(profile, |r| space.eval(&s.u, r))
}

/// A random smooth radial function `Σ c_j cos((j - 1/2)π r)`, which has
/// `v'(0) = 0` and `v(1) = 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CosineSeries {
    pub coefficients: Vec<f64>,
}

impl CosineSeries {
    pub fn eval(&self, r: f64) -> (f64, f64) {
        let mut v = 0.0;
        let mut d = 0.0;
        for (j, c) in self.coefficients.iter().enumerate() {
            let k = (j as f64 + 0.5) * std::f64::consts::PI;
            v += c * (k * r).cos();
            d -= c * k * (k * r).sin();
        }
        (v, d)
    }
}

/// `count` test functions from a ChaCha8 stream seeded with `seed`: between
/// 1 and 8 modes, coefficient `j` uniform in `[-1, 1] / (j + 1)`.
pub fn random_test_functions(seed: u64, count: usize) -> Vec<CosineSeries> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let modes = rng.random_range(1..=8usize);
            let coefficients = (0..modes).map(|j| rng.random_range(-1.0..1.0) / (j as f64 + 1.0)).collect();
            CosineSeries { coefficients }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Mesh;

    fn opts() -> RadialOptions {
        RadialOptions::with_mesh(Mesh::cosine(401).unwrap())
    }

    #[test]
    fn grid_is_sorted_and_inside() {
        let g = default_grid(3, 1.0, 101, 1e-2).unwrap();
        assert_eq!(g.len(), 101);
        assert!((g[0] - 1.01).abs() < 1e-12);
        assert!((g[100] - 6.99).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        // denser towards p_alpha
        assert!(g[100] - g[99] < g[1] - g[0]);
    }

    #[test]
    fn equality_case_vanishes() {
        let params = HenonParams::new(3, 1.0, 2.0).unwrap();
        let prof = solve_radial(&params, &opts()).unwrap();
        let q = quadform_equality_case(&prof).unwrap();
        assert!(q.value.abs() < 1e-8 * q.scale, "{:?}", q);
    }

    #[test]
    fn random_family_is_reproducible() {
        let a = random_test_functions(7, 5);
        let b = random_test_functions(7, 5);
        assert_eq!(a[3].coefficients, b[3].coefficients);
        for f in &a {
            assert!(f.eval(1.0).0.abs() < 1e-12);
            assert!(f.eval(0.0).1.abs() < 1e-12);
        }
    }

    #[test]
    fn scan_records_failures() {
        let res = scan(3, 1.0, &[2.0, 7.5], 2, &opts()).unwrap();
        assert_eq!(res.rows.len(), 1);
        assert_eq!(res.failures.len(), 1);
        assert!(scan(3, 1.0, &[3.0, 2.0], 2, &opts()).is_err());
    }
}
