//! Positive radial solution of `-Δu = |x|^α u^p` in the unit ball.
//!
//! The boundary value problem is reduced to a single initial value problem
//! through the scaling symmetry of the equation: if `v` solves
//! `v'' + (N-1)/ρ v' + ρ^α v^p = 0`, `v(0) = 1`, `v'(0) = 0` and first
//! vanishes at `ρ = R₀`, then `u(r) = a v(R₀ r)` with `a = R₀^{(2+α)/(p-1)}`
//! solves the Dirichlet problem and `‖u‖∞ = a`.
//!
//! Because `a` overflows for `p` close to 1, profiles store the normalized
//! shape `u / ‖u‖∞` together with `ln ‖u‖∞` and `‖u‖∞^{p-1} = R₀^{2+α}`,
//! which is all the linearized problems need.

use serde::{Deserialize, Serialize};

use crate::error::{HenonError, Result};
use crate::fem;
use crate::mesh::Mesh;
use crate::ode::{Dopri5, EventOutcome};
use crate::params::HenonParams;

/// Radius where the series start hands over to the integrator.
pub const SERIES_START: f64 = 1e-6;
pub const DEFAULT_IVP_TOL: f64 = 1e-12;
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-8;
pub const DEFAULT_MESH_POINTS: usize = 2001;
pub const DEFAULT_HORIZON: f64 = 1e9;

/// Normalized IVP state `[v, v', D]`, where
/// `D(ρ) = (N+α)∫₀^ρ s^{N-1+α} v^p ds - ρ^{N+α} v^p` tracks `1 - g` without
/// cancellation (`D' = -p ρ^{N+α} v^{p-1} v'`).
type State = [f64; 3];

fn rhs(params: &HenonParams) -> impl Fn(f64, &State) -> State {
    let n = params.dim();
    let (alpha, p) = (params.alpha, params.p);
    move |rho: f64, y: &State| {
        let v = y[0];
        let pow = v.abs().powf(p - 1.0);
        let source = rho.powf(alpha) * pow * v;
        [y[1], -(n - 1.0) / rho * y[1] - source, -p * rho.powf(n + alpha) * pow * y[1]]
    }
}

/// Two-term expansion at the origin, forced by one integration of the equation.
fn series(params: &HenonParams, rho: f64) -> State {
    let n = params.dim();
    let (a, p) = (params.alpha, params.p);
    [
        1.0 - rho.powf(2.0 + a) / ((2.0 + a) * (n + a)),
        -rho.powf(1.0 + a) / (n + a),
        p * rho.powf(n + 2.0 + 2.0 * a) / ((n + a) * (n + 2.0 + 2.0 * a)),
    ]
}

fn integrator(tol: f64) -> Dopri5 {
    let mut ode = Dopri5::new(tol);
    // relative control on every component: v' and D are tiny near the origin
    ode.atol = 1e-300;
    ode.h_init = SERIES_START * 1e-2;
    ode
}

/// The solution of the normalized IVP on its accepted step points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalizedProfile {
    pub params: HenonParams,
    pub mesh: Vec<f64>,
    pub v: Vec<f64>,
    pub v_prime: Vec<f64>,
    /// First zero `R₀`; absent when the horizon was reached first.
    pub first_zero: Option<f64>,
}

/// Integrates `v'' + (N-1)/ρ v' + ρ^α v^p = 0`, `v(0) = 1`, up to its first
/// zero or `r_max`.
pub fn integrate_normalized(params: &HenonParams, r_max: f64, tol: f64) -> Result<NormalizedProfile> {
    if !(r_max > SERIES_START) {
        return Err(HenonError::InvalidArgument(format!("r_max = {r_max} must exceed {SERIES_START}")));
    }
    if !(tol > 0.0) {
        return Err(HenonError::InvalidArgument(format!("tol = {tol} must be positive")));
    }
    let f = rhs(params);
    let y0 = series(params, SERIES_START);
    let mut mesh = vec![SERIES_START];
    let mut v = vec![y0[0]];
    let mut vp = vec![y0[1]];
    // tangential touch within tolerance counts as a zero
    let touch = tol.sqrt() * 1e-3;
    let outcome = integrator(tol).until_event(
        &f,
        SERIES_START,
        y0,
        r_max,
        |_, y| y[0],
        |t, y| {
            mesh.push(t);
            v.push(y[0]);
            vp.push(y[1]);
            y[0] <= touch && y[1] >= 0.0
        },
    )?;
    let first_zero = match outcome {
        EventOutcome::Event { t, y } => {
            mesh.push(t);
            v.push(0.0);
            vp.push(y[1]);
            Some(t)
        }
        EventOutcome::Horizon { t, y } => {
            if y[0] <= touch && y[1] >= 0.0 {
                Some(t)
            } else {
                None
            }
        }
    };
    Ok(NormalizedProfile { params: *params, mesh, v, v_prime: vp, first_zero })
}

/// Knobs for [`solve_radial`].
#[derive(Debug, Clone)]
pub struct RadialOptions {
    pub mesh: Mesh,
    pub ivp_tol: f64,
    pub residual_tol: f64,
    pub horizon: f64,
}

impl Default for RadialOptions {
    fn default() -> Self {
        Self {
            mesh: Mesh::cosine(DEFAULT_MESH_POINTS).expect("default mesh"),
            ivp_tol: DEFAULT_IVP_TOL,
            residual_tol: DEFAULT_RESIDUAL_TOL,
            horizon: DEFAULT_HORIZON,
        }
    }
}

impl RadialOptions {
    pub fn with_mesh(mesh: Mesh) -> Self {
        Self { mesh, ..Self::default() }
    }
}

/// `w = -u'`, `z = r u' + 2u/(p-1)` (both divided by `‖u‖∞`) and the
/// barrier `g = r^{1+α} u^p / ((N+α) w)`, with `1 - g` kept separately.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DerivedFunctions {
    pub w: Vec<f64>,
    pub z: Vec<f64>,
    pub g: Vec<f64>,
    pub one_minus_g: Vec<f64>,
}

/// Values of the normalized shape at arbitrary radii.
#[derive(Debug, Clone)]
pub struct Samples {
    pub u: Vec<f64>,
    pub u_prime: Vec<f64>,
    pub one_minus_g: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialProfile {
    pub params: HenonParams,
    pub mesh: Mesh,
    /// First zero of the normalized IVP, equal to `‖u‖∞^{(p-1)/(2+α)}`.
    pub first_zero: f64,
    /// `ln ‖u‖∞`.
    pub log_sup_norm: f64,
    /// `‖u‖∞^{p-1} = R₀^{2+α}`.
    pub amplitude: f64,
    /// `u / ‖u‖∞` on the mesh.
    pub shape: Vec<f64>,
    /// `u' / ‖u‖∞` on the mesh.
    pub shape_prime: Vec<f64>,
    /// Largest cell-averaged defect of `(r^{N-1}u')' + r^{N-1+α}u^p`,
    /// relative to `‖u‖∞^p`.
    pub residual: f64,
    pub ivp_tol: f64,
    pub derived: Option<DerivedFunctions>,
}

impl RadialProfile {
    pub fn sup_norm(&self) -> f64 {
        self.log_sup_norm.exp()
    }

    pub fn u(&self) -> Vec<f64> {
        let s = self.sup_norm();
        self.shape.iter().map(|v| v * s).collect()
    }

    pub fn u_prime(&self) -> Vec<f64> {
        let s = self.sup_norm();
        self.shape_prime.iter().map(|v| v * s).collect()
    }

    /// Normalized shape, derivative and `1 - g` at sorted radii in `[0, 1]`,
    /// re-integrating the normalized IVP.
    pub fn sample(&self, radii: &[f64]) -> Result<Samples> {
        sample_shape(&self.params, self.first_zero, radii, self.ivp_tol)
    }

    /// [`RadialProfile::sample`] without a profile at hand.
    pub fn sample_params(params: &HenonParams, first_zero: f64, radii: &[f64], tol: f64) -> Result<Samples> {
        sample_shape(params, first_zero, radii, tol)
    }

    /// The weight `p ‖u‖^{p-1} ū^{p-1}` (without the `r^{N-1+α}` factor)
    /// evaluated at sorted radii.
    pub fn potential(&self, radii: &[f64]) -> Result<Vec<f64>> {
        let s = self.sample(radii)?;
        let p = self.params.p;
        Ok(s.u.iter().map(|v| p * self.amplitude * v.max(0.0).powf(p - 1.0)).collect())
    }
}

fn sample_shape(params: &HenonParams, r0: f64, radii: &[f64], tol: f64) -> Result<Samples> {
    if radii.windows(2).any(|w| w[1] < w[0]) {
        return Err(HenonError::InvalidArgument("sample radii must be sorted".into()));
    }
    let n = params.dim();
    let a = params.alpha;
    let mut u = Vec::with_capacity(radii.len());
    let mut du = Vec::with_capacity(radii.len());
    let mut omg = Vec::with_capacity(radii.len());
    let split = radii.partition_point(|&r| r0 * r < SERIES_START);
    for &r in &radii[..split] {
        let rho = r0 * r;
        let y = series(params, rho);
        u.push(y[0]);
        du.push(r0 * y[1]);
        omg.push(if rho == 0.0 {
            0.0
        } else {
            y[2] / ((n + a) * rho.powf(n - 1.0) * (-y[1]))
        });
    }
    let rest = &radii[split..];
    if !rest.is_empty() {
        let f = rhs(params);
        let ts: Vec<f64> = rest.iter().map(|&r| (r0 * r).min(r0)).collect();
        let ys = integrator(tol).outputs(&f, SERIES_START, series(params, SERIES_START), &ts)?;
        for (&r, y) in rest.iter().zip(&ys) {
            let rho = r0 * r.min(1.0);
            let at_edge = r >= 1.0;
            u.push(if at_edge { 0.0 } else { y[0] });
            du.push(r0 * y[1]);
            omg.push(if at_edge { 1.0 } else { y[2] / ((n + a) * rho.powf(n - 1.0) * (-y[1])) });
        }
    }
    Ok(Samples { u, u_prime: du, one_minus_g: omg })
}

/// The positive radial solution on the unit ball, with derived functions.
pub fn solve_radial(params: &HenonParams, opts: &RadialOptions) -> Result<RadialProfile> {
    if !params.is_subcritical() {
        return Err(HenonError::InvalidExponent { p: params.p, p_alpha: params.p_alpha });
    }
    if (opts.mesh.radius() - 1.0).abs() > 1e-15 {
        return Err(HenonError::InvalidArgument("profile mesh must span [0, 1]".into()));
    }
    let norm = integrate_normalized(params, opts.horizon, opts.ivp_tol)?;
    let r0 = norm.first_zero.ok_or(HenonError::NoZeroFound(opts.horizon))?;
    let (p, a) = (params.p, params.alpha);
    let log_sup_norm = (2.0 + a) / (p - 1.0) * r0.ln();
    let amplitude = r0.powf(2.0 + a);

    // nodes interleaved with the cell quadrature points, for the residual
    let nodes = opts.mesh.nodes();
    let (qr, qw) = fem::quadrature(&opts.mesh);
    let mut radii = Vec::with_capacity(nodes.len() + qr.len());
    for e in 0..opts.mesh.cells() {
        radii.push(nodes[e]);
        radii.extend_from_slice(&qr[e * fem::NQ..(e + 1) * fem::NQ]);
    }
    radii.push(1.0);
    let s = sample_shape(params, r0, &radii, opts.ivp_tol)?;
    let stride = fem::NQ + 1;
    let node_idx = |e: usize| e * stride;

    let n = params.dim();
    let mut residual = 0.0f64;
    for e in 0..opts.mesh.cells() {
        let (i0, i1) = (node_idx(e), node_idx(e + 1));
        let (ra, rb) = (nodes[e], nodes[e + 1]);
        let flux = rb.powf(n - 1.0) * s.u_prime[i1] - ra.powf(n - 1.0) * s.u_prime[i0];
        let mut src = 0.0;
        for q in 0..fem::NQ {
            let k = e * fem::NQ + q;
            let uq = s.u[i0 + 1 + q].max(0.0);
            src += qw[k] * qr[k].powf(n - 1.0 + a) * uq.powf(p);
        }
        let defect = (flux + amplitude * src) / (rb - ra);
        residual = residual.max(defect.abs() / amplitude);
    }
    if residual > opts.residual_tol {
        return Err(HenonError::ResidualTooLarge { residual, tol: opts.residual_tol });
    }
    let pick = |v: &[f64]| (0..nodes.len()).map(|i| v[node_idx(i)]).collect::<Vec<f64>>();
    let profile = RadialProfile {
        params: *params,
        mesh: opts.mesh.clone(),
        first_zero: r0,
        log_sup_norm,
        amplitude,
        shape: pick(&s.u),
        shape_prime: pick(&s.u_prime),
        residual,
        ivp_tol: opts.ivp_tol,
        derived: None,
    };
    let omg = pick(&s.one_minus_g);
    with_barrier(profile, omg)
}

fn with_barrier(profile: RadialProfile, one_minus_g: Vec<f64>) -> Result<RadialProfile> {
    let mut profile = derived_functions(profile)?;
    if let Some(d) = profile.derived.as_mut() {
        // where g is close to 1 the cancellation-free form of 1 - g is the
        // accurate one; elsewhere the direct quotient is
        for (i, omg) in one_minus_g.into_iter().enumerate() {
            if d.g[i] >= 0.5 {
                d.one_minus_g[i] = omg;
                d.g[i] = 1.0 - omg;
            }
        }
        d.g[0] = 1.0;
        d.one_minus_g[0] = 0.0;
    }
    Ok(profile)
}

/// Populates `w`, `z` and `g` from the shape. `g(0)` is set to its limit 1.
pub fn derived_functions(mut profile: RadialProfile) -> Result<RadialProfile> {
    let r = profile.mesh.nodes();
    let p = profile.params.p;
    let na = profile.params.dim() + profile.params.alpha;
    let w: Vec<f64> = profile.shape_prime.iter().map(|d| -d).collect();
    if let Some(i) = (1..r.len()).find(|&i| !(w[i] > 0.0)) {
        return Err(HenonError::DegenerateProfile(r[i]));
    }
    let z = r
        .iter()
        .zip(profile.shape.iter().zip(&profile.shape_prime))
        .map(|(&ri, (&u, &du))| ri * du + 2.0 / (p - 1.0) * u)
        .collect();
    let g: Vec<f64> = r
        .iter()
        .enumerate()
        .map(|(i, &ri)| {
            if i == 0 {
                1.0
            } else {
                profile.amplitude * ri.powf(1.0 + profile.params.alpha) * profile.shape[i].max(0.0).powf(p)
                    / (na * w[i])
            }
        })
        .collect();
    let one_minus_g = g.iter().map(|x| 1.0 - x).collect();
    profile.derived = Some(DerivedFunctions { w, z, g, one_minus_g });
    Ok(profile)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n3a1(p: f64) -> HenonParams {
        HenonParams::new(3, 1.0, p).unwrap()
    }

    #[test]
    fn series_slope_at_origin() {
        let prm = n3a1(2.0);
        let prof = integrate_normalized(&prm, 10.0, 1e-12).unwrap();
        let (r, vp) = (prof.mesh[1], prof.v_prime[1]);
        assert!((vp / (r * r) + 0.25).abs() < 1e-4);
    }

    #[test]
    fn supercritical_has_no_zero() {
        for &p in &[7.0, 7.5, 9.0] {
            let prof = integrate_normalized(&n3a1(p), 1e3, 1e-10).unwrap();
            assert!(prof.first_zero.is_none(), "p = {p}");
            assert!(prof.v.iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn normalized_profile_is_decreasing() {
        let prof = integrate_normalized(&n3a1(3.0), 100.0, 1e-10).unwrap();
        assert!(prof.first_zero.is_some());
        assert!(prof.v_prime.iter().skip(1).all(|&d| d < 0.0));
        assert!(prof.v[..prof.v.len() - 1].iter().all(|&v| v > 0.0));
    }

    #[test]
    fn solve_rejects_bad_exponents() {
        let opts = RadialOptions::with_mesh(Mesh::cosine(51).unwrap());
        assert!(matches!(solve_radial(&n3a1(7.0), &opts), Err(HenonError::InvalidExponent { .. })));
        assert!(HenonParams::new(3, 1.0, 0.9).is_err());
    }

    #[test]
    fn profile_invariants() {
        let opts = RadialOptions::with_mesh(Mesh::cosine(401).unwrap());
        for &p in &[1.5, 2.0, 4.0, 6.5] {
            let prof = solve_radial(&n3a1(p), &opts).unwrap();
            assert!(prof.residual <= DEFAULT_RESIDUAL_TOL, "p={p} residual {}", prof.residual);
            let n = prof.shape.len();
            assert_eq!(prof.shape[0], 1.0f64.min(prof.shape[0]));
            assert!((prof.shape[0] - 1.0).abs() < 1e-12);
            assert_eq!(prof.shape[n - 1], 0.0);
            assert!(prof.shape[..n - 1].iter().all(|&u| u > 0.0));
            assert!(prof.shape_prime[1..].iter().all(|&d| d < 0.0));
            let d = prof.derived.as_ref().unwrap();
            assert!(d.z[0] > 0.0 && d.z[n - 1] < 0.0);
            assert!((d.z[0] - 2.0 / (p - 1.0)).abs() < 1e-12);
            assert_eq!(d.g[n - 1], 0.0);
            for i in 1..n - 1 {
                assert!(d.one_minus_g[i] > 0.0 && d.g[i] > 0.0, "p={p} i={i}");
            }
        }
    }
}
