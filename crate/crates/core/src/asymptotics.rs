//! Behaviour of the radial solution at both ends of the exponent range:
//! `p → 1` (eigenvalue limit) and `p → p_α` (blow-up, limit profile).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HenonError, Result};
use crate::mesh::Mesh;
use crate::params::{critical_exponent, HenonParams};
use crate::radial::{solve_radial, RadialOptions, RadialProfile};
use crate::spectral::{morse_index, solve_mode_spectrum, ModeProblem, WeightSource};

pub const DEFAULT_WINDOW: f64 = 5.0;
pub const BOUND_TOL: f64 = 1e-8;
pub const PULLBACK_SAMPLES: usize = 100;
pub const PULLBACK_SEED: u64 = 0x5eed;

pub fn default_p_to_1() -> Vec<f64> {
    vec![1.5, 1.1, 1.01, 1.001]
}

/// `{p_α - 1, p_α - 0.5, p_α - 0.1, p_α - 0.02}`.
pub fn default_p_to_critical(n: usize, alpha: f64) -> Result<Vec<f64>> {
    let pa = critical_exponent(n, alpha)?;
    Ok([1.0, 0.5, 0.1, 0.02].iter().map(|d| pa - d).collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightedEigenpair {
    pub n: usize,
    pub alpha: f64,
    pub radius: f64,
    pub k: usize,
    pub lambda: f64,
    /// Mesh vertices of `[0, R]`.
    pub radii: Vec<f64>,
    /// Eigenfunction on `radii`, scaled so its maximum is 1.
    pub phi: Vec<f64>,
    /// The same eigenvalue from Prüfer shooting.
    pub lambda_prufer: f64,
}

/// First eigenpair of `-(r^{N-1}φ')' + μ_k r^{N-3} φ = λ r^{N-1+α} φ` on `[0, R]`.
pub fn weighted_eigen(n: usize, alpha: f64, radius: f64, k: usize, points: usize) -> Result<WeightedEigenpair> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(HenonError::InvalidArgument(format!("radius must be positive, got {radius}")));
    }
    critical_exponent(n, alpha)?;
    let source = WeightSource::Power { n, alpha, radius };
    let problem = ModeProblem::from_source(source, Mesh::cosine_on(points, radius)?, k)?;
    let spec = solve_mode_spectrum(&problem, 1)?;
    let mut phi = spec.on_mesh(0);
    let top = phi.iter().fold(0.0f64, |m, v| m.max(*v));
    phi.iter_mut().for_each(|v| *v /= top);
    let lambda = spec.eigenvalues[0];
    let lambda_prufer = prufer_eigenvalue(&source, k, lambda)?;
    Ok(WeightedEigenpair {
        n,
        alpha,
        radius,
        k,
        lambda,
        radii: problem.space().mesh().nodes().to_vec(),
        phi,
        lambda_prufer,
    })
}

/// `k = 0` case of [`weighted_eigen`]; `λ_1` on the unit ball when `R = 1`.
pub fn weighted_first_eigen(n: usize, alpha: f64, radius: f64) -> Result<WeightedEigenpair> {
    weighted_eigen(n, alpha, radius, 0, crate::radial::DEFAULT_MESH_POINTS)
}

/// Root of `θ(R; λ) = π` bracketed around `guess`.
fn prufer_eigenvalue(source: &WeightSource, k: usize, guess: f64) -> Result<f64> {
    let pi = std::f64::consts::PI;
    let f = |l: f64| crate::spectral::prufer_angle(source, k, l).map(|t| t - pi);
    let (mut lo, mut hi) = (0.9 * guess, 1.1 * guess);
    let (mut f_lo, f_hi) = (f(lo)?, f(hi)?);
    if f_lo > 0.0 || f_hi < 0.0 {
        return Err(HenonError::NoConvergence { iterations: 0, residual: f_lo.min(-f_hi) });
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-14 * mid {
            break;
        }
        let fm = f(mid)?;
        if fm.signum() == f_lo.signum() {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingRow {
    pub radius: f64,
    pub lambda: f64,
    /// `λ_R R^{2+α}`.
    pub scaled: f64,
    /// Same, with `λ_R` from Prüfer shooting on `[0, R]`.
    pub scaled_prufer: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingLaw {
    pub rows: Vec<ScalingRow>,
    /// Largest relative spread of `scaled`. The Galerkin mesh on `[0, R]` is
    /// the unit mesh stretched by `R`, so this is zero up to roundoff.
    pub spread: f64,
    /// Largest relative spread of `scaled_prufer`, which integrates each
    /// radius independently and is the meaningful check.
    pub spread_prufer: f64,
}

fn rel_spread(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let lo = v.clone().fold(f64::INFINITY, f64::min);
    let hi = v.fold(f64::NEG_INFINITY, f64::max);
    (hi - lo) / lo
}

/// `λ_R R^{2+α}` for each radius.
pub fn scaling_law(n: usize, alpha: f64, radii: &[f64]) -> Result<ScalingLaw> {
    let rows: Vec<ScalingRow> = radii
        .par_iter()
        .map(|&r| {
            weighted_first_eigen(n, alpha, r).map(|e| {
                let f = r.powf(2.0 + alpha);
                ScalingRow { radius: r, lambda: e.lambda, scaled: e.lambda * f, scaled_prufer: e.lambda_prufer * f }
            })
        })
        .collect::<Result<_>>()?;
    Ok(ScalingLaw {
        spread: rel_spread(rows.iter().map(|r| r.scaled)),
        spread_prufer: rel_spread(rows.iter().map(|r| r.scaled_prufer)),
        rows,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct POneRow {
    pub p: f64,
    /// `‖u_p‖∞^{p-1}`.
    pub sup_pow: f64,
    /// `|‖u_p‖∞^{p-1} - λ_1| / λ_1`.
    pub deviation: f64,
    /// `max |u_p/‖u_p‖∞ - φ_1|` over the mesh.
    pub profile_distance: f64,
    pub morse_index: u64,
    pub lambda_11: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct POneReport {
    pub n: usize,
    pub alpha: f64,
    pub lambda_1: f64,
    pub lambda_1_prufer: f64,
    pub rows: Vec<POneRow>,
    /// Linear extrapolation in `p - 1` of the last two `sup_pow` values.
    pub extrapolated: f64,
    pub extrapolation_error: f64,
    pub deviations_decrease: bool,
    pub distances_decrease: bool,
    /// First eigenvalue of mode 1 of the weighted problem over `λ_1`: the
    /// expected limit of `Λ_{1,1}(p)`.
    pub limit_ratio_11: f64,
}

impl POneReport {
    pub fn non_convergent(&self) -> bool {
        !self.deviations_decrease
    }
}

pub fn verify_p_to_1(n: usize, alpha: f64, p_list: &[f64], opts: &RadialOptions) -> Result<POneReport> {
    if p_list.len() < 2 {
        return Err(HenonError::InvalidArgument("need at least two exponents".into()));
    }
    let eig = weighted_first_eigen(n, alpha, 1.0)?;
    let lambda_1 = eig.lambda;
    let mode1 = weighted_eigen(n, alpha, 1.0, 1, crate::radial::DEFAULT_MESH_POINTS)?;
    let phi_space = {
        let problem = ModeProblem::from_source(WeightSource::Power { n, alpha, radius: 1.0 }, Mesh::cosine(eig.radii.len())?, 0)?;
        let spec = solve_mode_spectrum(&problem, 1)?;
        let top = spec.eigenfunctions[0].iter().fold(0.0f64, |m, v| m.max(*v));
        let full: Vec<f64> = spec.eigenfunctions[0].iter().map(|v| v / top).collect();
        (problem, full)
    };
    let rows: Vec<POneRow> = p_list
        .par_iter()
        .map(|&p| -> Result<POneRow> {
            let params = HenonParams::subcritical(n, alpha, p)?;
            let profile = solve_radial(&params, opts)?;
            let space = phi_space.0.space();
            let dist = profile
                .mesh
                .nodes()
                .iter()
                .zip(&profile.shape)
                .map(|(&r, &s)| (s - space.eval_full(&phi_space.1, r).0).abs())
                .fold(0.0f64, f64::max);
            let morse = morse_index(&profile, 2)?;
            Ok(POneRow {
                p,
                sup_pow: profile.amplitude,
                deviation: (profile.amplitude - lambda_1).abs() / lambda_1,
                profile_distance: dist,
                morse_index: morse.morse_index,
                lambda_11: morse.lambda_11,
            })
        })
        .collect::<Result<_>>()?;
    let m = rows.len();
    let (a, b) = (&rows[m - 2], &rows[m - 1]);
    let (ea, eb) = (a.p - 1.0, b.p - 1.0);
    let extrapolated = (b.sup_pow * ea - a.sup_pow * eb) / (ea - eb);
    Ok(POneReport {
        n,
        alpha,
        lambda_1,
        lambda_1_prufer: eig.lambda_prufer,
        extrapolated,
        extrapolation_error: (extrapolated - lambda_1).abs() / lambda_1,
        deviations_decrease: rows.windows(2).all(|w| w[1].deviation < w[0].deviation),
        distances_decrease: rows.windows(2).all(|w| w[1].profile_distance < w[0].profile_distance),
        limit_ratio_11: mode1.lambda / lambda_1,
        rows,
    })
}

/// `U(x) = (1 + C_α |x|^{2+α})^{-(N-2)/(2+α)}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LimitProfile {
    pub n: usize,
    pub alpha: f64,
    pub c_alpha: f64,
}

impl LimitProfile {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        critical_exponent(n, alpha)?;
        let nf = n as f64;
        Ok(Self { n, alpha, c_alpha: 1.0 / ((nf + alpha) * (nf - 2.0)) })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let e = (self.n as f64 - 2.0) / (2.0 + self.alpha);
        (1.0 + self.c_alpha * x.abs().powf(2.0 + self.alpha)).powf(-e)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RescaledProfile {
    pub p: f64,
    /// `μ_p = ‖u_p‖∞^{(p-1)/(2+α)}`, the length of the rescaled interval.
    pub mu_p: f64,
    /// `x_i = μ_p r_i`.
    pub x: Vec<f64>,
    /// `ũ(x) = u(x/μ_p)/‖u_p‖∞`.
    pub u_tilde: Vec<f64>,
    pub limit: Vec<f64>,
    /// `max(ũ - U)` over the mesh; at most [`BOUND_TOL`] when the bound holds.
    pub bound_excess: f64,
    pub bound_holds: bool,
    pub window: f64,
    /// `max |ũ - U|` on `[0, min(window, μ_p)]`.
    pub window_distance: f64,
}

pub fn rescale_profile(profile: &RadialProfile, window: f64) -> Result<RescaledProfile> {
    let prm = &profile.params;
    let lim = LimitProfile::new(prm.n, prm.alpha)?;
    let mu_p = profile.first_zero;
    let x: Vec<f64> = profile.mesh.nodes().iter().map(|r| r * mu_p).collect();
    let limit: Vec<f64> = x.iter().map(|&x| lim.eval(x)).collect();
    let bound_excess = profile.shape.iter().zip(&limit).map(|(u, l)| u - l).fold(f64::NEG_INFINITY, f64::max);
    let top = window.min(mu_p);
    let samples = 4001;
    let xs: Vec<f64> = (0..samples).map(|i| top * i as f64 / (samples - 1) as f64).collect();
    let radii: Vec<f64> = xs.iter().map(|x| (x / mu_p).min(1.0)).collect();
    let s = profile.sample(&radii)?;
    let window_distance = xs.iter().zip(&s.u).map(|(&x, u)| (u - lim.eval(x)).abs()).fold(0.0f64, f64::max);
    Ok(RescaledProfile {
        p: prm.p,
        mu_p,
        x,
        u_tilde: profile.shape.clone(),
        limit,
        bound_excess,
        bound_holds: bound_excess <= BOUND_TOL,
        window,
        window_distance,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmdenFowler {
    pub kappa: f64,
    /// `t_i = (N-2)^{2(N-2)/(2+α)} x_i^{-(N-2)}` for the nonzero rescaled radii.
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    /// `(1 + 1/((κ-1)t^{κ-2}))^{-1/(κ-2)}` at each `t_i`.
    pub bound: Vec<f64>,
    pub bound_holds: bool,
    /// Largest relative gap between the bound pulled back to `x` and `U(x)`.
    pub pullback_error: f64,
    /// `1 - y` at the largest `t`.
    pub tail_gap: f64,
}

impl EmdenFowler {
    fn t_of_x(n: usize, alpha: f64, x: f64) -> f64 {
        let m = n as f64 - 2.0;
        m.powf(2.0 * m / (2.0 + alpha)) * x.powf(-m)
    }

    fn bound_at(kappa: f64, t: f64) -> f64 {
        (1.0 + 1.0 / ((kappa - 1.0) * t.powf(kappa - 2.0))).powf(-1.0 / (kappa - 2.0))
    }
}

pub fn emden_fowler(rescaled: &RescaledProfile, params: &HenonParams) -> Result<EmdenFowler> {
    let (n, alpha, kappa) = (params.n, params.alpha, params.kappa);
    let lim = LimitProfile::new(n, alpha)?;
    let (mut t, mut y, mut bound) = (Vec::new(), Vec::new(), Vec::new());
    for (&x, &u) in rescaled.x.iter().zip(&rescaled.u_tilde) {
        if x <= 0.0 {
            continue;
        }
        let ti = EmdenFowler::t_of_x(n, alpha, x);
        t.push(ti);
        y.push(u);
        bound.push(EmdenFowler::bound_at(kappa, ti));
    }
    let bound_holds = y.iter().zip(&bound).all(|(y, b)| *y <= b + BOUND_TOL);
    let mut rng = ChaCha8Rng::seed_from_u64(PULLBACK_SEED);
    let pullback_error = (0..PULLBACK_SAMPLES)
        .map(|_| {
            let x: f64 = rng.random_range(1e-3..rescaled.mu_p.max(1.0));
            let u = lim.eval(x);
            (EmdenFowler::bound_at(kappa, EmdenFowler::t_of_x(n, alpha, x)) - u).abs() / u
        })
        .fold(0.0f64, f64::max);
    let tail_gap = t
        .iter()
        .zip(&y)
        .fold((0.0f64, 0.0f64), |acc, (&ti, &yi)| if ti > acc.0 { (ti, 1.0 - yi) } else { acc })
        .1;
    Ok(EmdenFowler { kappa, t, y, bound, bound_holds, pullback_error, tail_gap })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlowupRow {
    pub p: f64,
    pub sup_norm: f64,
    pub log_sup_norm: f64,
    pub first_zero: f64,
    /// `|ln‖u‖∞ - (2+α)/(p-1) ln R_0|`.
    pub identity_error: f64,
    pub window_distance: f64,
    pub bound_holds: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlowupReport {
    pub n: usize,
    pub alpha: f64,
    pub rows: Vec<BlowupRow>,
    /// Sup norm strictly increasing over the last three rows.
    pub tail_increasing: bool,
    pub distances_decrease: bool,
}

pub fn blowup_table(n: usize, alpha: f64, p_list: &[f64], opts: &RadialOptions) -> Result<BlowupReport> {
    if p_list.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(HenonError::InvalidArgument("exponents must increase".into()));
    }
    let rows: Vec<BlowupRow> = p_list
        .par_iter()
        .map(|&p| -> Result<BlowupRow> {
            let params = HenonParams::subcritical(n, alpha, p)?;
            let profile = solve_radial(&params, opts)?;
            let resc = rescale_profile(&profile, DEFAULT_WINDOW)?;
            let predicted = (2.0 + alpha) / (p - 1.0) * profile.first_zero.ln();
            Ok(BlowupRow {
                p,
                sup_norm: profile.sup_norm(),
                log_sup_norm: profile.log_sup_norm,
                first_zero: profile.first_zero,
                identity_error: (profile.log_sup_norm - predicted).abs(),
                window_distance: resc.window_distance,
                bound_holds: resc.bound_holds,
            })
        })
        .collect::<Result<_>>()?;
    let tail = &rows[rows.len().saturating_sub(3)..];
    Ok(BlowupReport {
        n,
        alpha,
        tail_increasing: tail.windows(2).all(|w| w[1].log_sup_norm > w[0].log_sup_norm),
        distances_decrease: rows.windows(2).all(|w| w[1].window_distance < w[0].window_distance),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn limit_profile_constants() {
        let u = LimitProfile::new(3, 1.0).unwrap();
        assert!((u.c_alpha - 0.25).abs() < 1e-15);
        assert_eq!(u.eval(0.0), 1.0);
        // U solves -ΔU = |x|^α U^{p_α}: check by central differences
        let pa = 7.0;
        for &x in &[0.3, 1.0, 2.5] {
            let h = 1e-4;
            let (um, u0, up) = (u.eval(x - h), u.eval(x), u.eval(x + h));
            let lap = (up - 2.0 * u0 + um) / (h * h) + 2.0 / x * (up - um) / (2.0 * h);
            assert!((lap + x * u0.powf(pa)).abs() < 1e-6, "x = {x}");
        }
    }

    #[test]
    fn weighted_eigen_matches_shooting() {
        let e = weighted_eigen(3, 1.0, 1.0, 0, 401).unwrap();
        assert!((e.lambda - e.lambda_prufer).abs() < 1e-8 * e.lambda);
        assert!(e.phi.iter().take(e.phi.len() - 1).all(|v| *v > 0.0));
    }

    #[test]
    fn pullback_identity_for_several_dimensions() {
        for (n, a) in [(3, 1.0), (4, 0.5), (5, 0.25)] {
            let prm = HenonParams::new(n, a, 1.5).unwrap();
            let lim = LimitProfile::new(n, a).unwrap();
            for &x in &[0.01, 0.7, 3.0, 40.0] {
                let b = EmdenFowler::bound_at(prm.kappa, EmdenFowler::t_of_x(n, a, x));
                assert!((b - lim.eval(x)).abs() < 1e-13, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn rejects_bad_radius() {
        assert!(weighted_first_eigen(3, 1.0, 0.0).is_err());
        assert!(weighted_first_eigen(3, 1.0, -1.0).is_err());
    }

    #[test]
    fn scaling_law_independent_radii() {
        let law = scaling_law(3, 1.0, &[0.5, 1.0, 2.0, 4.0]).unwrap();
        assert!(law.spread < 1e-10, "{}", law.spread);
        assert!(law.spread_prufer < 1e-6, "{}", law.spread_prufer);
        eprintln!("prufer spread {:.3e}", law.spread_prufer);
    }
}
