//! Axisymmetric solutions `u(r, θ)` and the nonradial branch that leaves the
//! radial curve at a Morse-index-changing exponent.
//!
//! The state is expanded as `u = Σ_k c_k(r) Y_k(cos θ)` over zonal harmonics
//! `k = 0..=K`, each `c_k` a cubic finite element function with `c_k(1) = 0`
//! (and `c_k(0) = 0` for `k ≥ 1`). The weak form
//!
//! ```text
//! ∫ r^{N-1} c_k' φ' + μ_k r^{N-3} c_k φ  -  ∫∫ r^{N-1+α} |u|^{p-1} u Y_k φ  = 0
//! ```
//!
//! is evaluated with Gauss quadrature in both `r` and `x = cos θ`, so the
//! Jacobian is symmetric and a radial state has exactly zero odd modes.
//! Unknowns are ordered radial-major, `(i, k) ↦ i (K+1) + k`, giving a band
//! matrix of half-width `4(K+1) - 1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::banded::{BandLu, BandMatrix, Pencil, SymBanded};
use crate::error::{HenonError, Result};
use crate::fem::{CubicSpace, OriginBc, NQ};
use crate::harmonics::{eval_all, ZonalBasis};
use crate::mesh::Mesh;
use crate::params::HenonParams;
use crate::radial::{solve_radial, RadialOptions, RadialProfile};
use crate::scan::DegeneracyPoint;
use crate::spectral::angular_eigenvalue;

pub const DEFAULT_RADIAL_POINTS: usize = 401;
pub const DEFAULT_MODES: usize = 8;
pub const DEFAULT_NEWTON_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_NEWTON: usize = 12;
/// Branch-switch amplitude relative to the sup norm of the radial solution.
pub const DEFAULT_EPSILON: f64 = 1e-2;
/// Asymmetry (relative to the radial norm) below which a branch point
/// counts as radial.
pub const RADIAL_THRESHOLD: f64 = 1e-6;

/// Discretization of the axisymmetric class on the unit ball.
#[derive(Debug, Clone)]
pub struct AxisymGrid {
    pub n: usize,
    pub alpha: f64,
    pub k_max: usize,
    space: CubicSpace,
    basis: ZonalBasis,
    /// Free radial dofs per mode.
    dofs: usize,
    mu: Vec<f64>,
    flux: Vec<f64>,
    pot: Vec<f64>,
    src: Vec<f64>,
    /// `∫ r^{N-1} φ_i φ_j`.
    mass: SymBanded,
    /// `∫_{supp φ_i} r^{N-1} dr`, the weights of the residual norm.
    support: Vec<f64>,
    /// Divides every residual norm.
    residual_scale: f64,
}

impl AxisymGrid {
    pub fn new(n: usize, alpha: f64, mesh: Mesh, k_max: usize, angular_points: usize) -> Result<Self> {
        crate::params::critical_exponent(n, alpha)?;
        if (mesh.radius() - 1.0).abs() > 1e-14 {
            return Err(HenonError::InvalidArgument("the axisymmetric grid lives on the unit ball".into()));
        }
        if k_max < 2 {
            return Err(HenonError::InvalidArgument("need at least the modes k = 0, 1, 2".into()));
        }
        let basis = ZonalBasis::new(n, k_max, angular_points)?;
        let space = CubicSpace::new(mesh, OriginBc::Natural);
        let nf = n as f64;
        let qr = space.quad_points().to_vec();
        let flux: Vec<f64> = qr.iter().map(|r| r.powf(nf - 1.0)).collect();
        let pot: Vec<f64> = qr.iter().map(|r| r.powf(nf - 3.0)).collect();
        let src: Vec<f64> = qr.iter().map(|r| r.powf(nf - 1.0 + alpha)).collect();
        let mass = space.assemble(&vec![0.0; qr.len()], &flux);
        let nodes = space.mesh().nodes();
        let mut support = vec![0.0; space.full_dofs()];
        for e in 0..space.mesh().cells() {
            let (a, b) = (nodes[e], nodes[e + 1]);
            let cell = (b.powf(nf) - a.powf(nf)) / nf;
            for j in 0..4 {
                support[3 * e + j] += cell;
            }
        }
        let mu = (0..=k_max).map(|k| angular_eigenvalue(k, n)).collect();
        let dofs = space.dofs();
        Ok(Self { n, alpha, k_max, space, basis, dofs, mu, flux, pot, src, mass, support, residual_scale: 1.0 })
    }

    /// `points` graded radial nodes, `k_max` modes, `2 k_max + 2` angular nodes.
    pub fn with_defaults(n: usize, alpha: f64, points: usize, k_max: usize) -> Result<Self> {
        Self::new(n, alpha, Mesh::cosine(points)?, k_max, 2 * k_max + 2)
    }

    /// Residual norms are divided by `scale` (default 1).
    pub fn with_residual_scale(mut self, scale: f64) -> Self {
        self.residual_scale = scale;
        self
    }

    pub fn residual_scale(&self) -> f64 {
        self.residual_scale
    }

    pub fn modes(&self) -> usize {
        self.k_max + 1
    }

    pub fn len(&self) -> usize {
        self.dofs * self.modes()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, k: usize) -> usize {
        i * self.modes() + k
    }

    fn constrained(i: usize, k: usize) -> bool {
        i == 0 && k > 0
    }

    pub fn radial_nodes(&self) -> &[f64] {
        self.space.mesh().nodes()
    }

    /// Polar angles of the output grid: both poles and the quadrature nodes.
    pub fn polar_angles(&self) -> Vec<f64> {
        let mut out = vec![0.0];
        out.extend(self.basis.nodes.iter().rev().map(|x| x.acos()));
        out.push(std::f64::consts::PI);
        out
    }

    pub fn angular_nodes(&self) -> &[f64] {
        &self.basis.nodes
    }

    pub fn angular_weights(&self) -> &[f64] {
        &self.basis.weights
    }

    /// Radii of the free radial dofs.
    pub fn dof_radii(&self) -> Vec<f64> {
        self.space.free_radii()
    }

    /// Coefficients of mode `k`.
    pub fn mode(&self, coeffs: &[f64], k: usize) -> Vec<f64> {
        (0..self.dofs).map(|i| coeffs[self.index(i, k)]).collect()
    }

    pub fn set_mode(&self, coeffs: &mut [f64], k: usize, values: &[f64]) {
        for i in 0..self.dofs {
            coeffs[self.index(i, k)] = if Self::constrained(i, k) { 0.0 } else { values[i] };
        }
    }

    /// `∫ r^{N-1} a_k b_k` summed over modes.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        (0..self.modes()).map(|k| self.mass.dot(&self.mode(a, k), &self.mode(b, k))).sum()
    }

    /// `M x`, mode by mode.
    pub fn mass_apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        for k in 0..self.modes() {
            let y = self.mass.matvec(&self.mode(x, k));
            for i in 0..self.dofs {
                out[self.index(i, k)] = y[i];
            }
        }
        out
    }

    /// `∫ r^{N-1} c_1²` to the half power.
    pub fn asymmetry(&self, coeffs: &[f64]) -> f64 {
        let c1 = self.mode(coeffs, 1);
        self.mass.dot(&c1, &c1).max(0.0).sqrt()
    }

    /// A radial solution as the mode-0 coefficient `√|S| u(r)` (`|S|` the
    /// angular weight mass), sampled at the free dofs.
    pub fn embed_radial(&self, profile: &RadialProfile) -> Result<Vec<f64>> {
        if profile.params.n != self.n || profile.params.alpha != self.alpha {
            return Err(HenonError::InvalidArgument("profile parameters do not match the grid".into()));
        }
        let s = profile.sample(&self.dof_radii())?;
        let scale = profile.sup_norm() / self.basis.values[0][0];
        let mut coeffs = vec![0.0; self.len()];
        let c0: Vec<f64> = s.u.iter().map(|v| v * scale).collect();
        self.set_mode(&mut coeffs, 0, &c0);
        Ok(coeffs)
    }

    /// Values on `radial_nodes() × polar_angles()`, row-major in `r`.
    pub fn values(&self, coeffs: &[f64]) -> Vec<Vec<f64>> {
        let ys: Vec<Vec<f64>> = self.polar_angles().iter().map(|t| eval_all(self.n, self.k_max, t.cos()).0).collect();
        let nodes = self.radial_nodes();
        (0..nodes.len())
            .map(|v| {
                let full = 3 * v;
                ys.iter()
                    .map(|y| {
                        if full >= self.dofs {
                            return 0.0;
                        }
                        (0..self.modes()).map(|k| coeffs[self.index(full, k)] * y[k]).sum()
                    })
                    .collect()
            })
            .collect()
    }

    /// Sup of `|u|` plus sup of `|∇u|` over mesh vertices × polar angles.
    pub fn c1_norm(&self, coeffs: &[f64]) -> f64 {
        let angles = self.polar_angles();
        let ys: Vec<(Vec<f64>, Vec<f64>)> = angles.iter().map(|t| eval_all(self.n, self.k_max, t.cos())).collect();
        let full: Vec<Vec<f64>> = (0..self.modes()).map(|k| self.space.expand(&self.mode(coeffs, k))).collect();
        let (mut su, mut sg) = (0.0f64, 0.0f64);
        for &r in self.radial_nodes() {
            let cd: Vec<(f64, f64)> = full.iter().map(|f| self.space.eval_full(f, r)).collect();
            for (t, (y, dy)) in angles.iter().zip(&ys) {
                let (mut u, mut ur, mut ux) = (0.0, 0.0, 0.0);
                for k in 0..self.modes() {
                    u += cd[k].0 * y[k];
                    ur += cd[k].1 * y[k];
                    ux += cd[k].0 * dy[k];
                }
                let ut = if r > 0.0 { -t.sin() * ux / r } else { 0.0 };
                su = su.max(u.abs());
                sg = sg.max((ur * ur + ut * ut).sqrt());
            }
        }
        su + sg
    }

    fn weighted_norm(&self, v: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dofs {
            for k in 0..self.modes() {
                if !Self::constrained(i, k) {
                    s += v[self.index(i, k)].powi(2) / self.support[i];
                }
            }
        }
        s.sqrt()
    }

    /// Residual, source term and (optionally) Jacobian and `∂R/∂p`, using
    /// the first `nm` modes only.
    fn assemble(&self, p: f64, coeffs: &[f64], nm: usize, jacobian: bool) -> Assembly {
        let dofs = self.dofs;
        let mesh = self.space.mesh().nodes();
        let cells = self.space.mesh().cells();
        let qw = self.space.quad_weights();
        let b = &self.basis;
        let nloc = 4 * nm;
        let locals: Vec<Local> = (0..cells)
            .into_par_iter()
            .map(|e| {
                let h = mesh[e + 1] - mesh[e];
                let mut res = vec![0.0; nloc];
                let mut srcv = vec![0.0; nloc];
                let mut dp = vec![0.0; nloc];
                let mut jac = if jacobian { vec![0.0; nloc * nloc] } else { Vec::new() };
                let mut c = vec![0.0; nm];
                let mut cd = vec![0.0; nm];
                let mut fk = vec![0.0; nm];
                let mut dk = vec![0.0; nm];
                let mut g = vec![0.0; nm * nm];
                for q in 0..NQ {
                    let idx = e * NQ + q;
                    let (bv, bd) = self.space.reference_basis(q);
                    for k in 0..nm {
                        let (mut v, mut d) = (0.0, 0.0);
                        for a in 0..4 {
                            let i = 3 * e + a;
                            if i < dofs {
                                let x = coeffs[i * nm + k];
                                v += x * bv[a];
                                d += x * bd[a];
                            }
                        }
                        c[k] = v;
                        cd[k] = d / h;
                    }
                    fk.iter_mut().for_each(|x| *x = 0.0);
                    dk.iter_mut().for_each(|x| *x = 0.0);
                    g.iter_mut().for_each(|x| *x = 0.0);
                    // mirror pairs x_m, -x_m: Y_k(-x) = (-1)^k Y_k(x), so odd
                    // modes of an even field cancel exactly
                    let mpts = b.points();
                    for m in 0..mpts.div_ceil(2) {
                        let mirrored = mpts - 1 - m != m;
                        let y = &b.values[m];
                        let (mut even, mut odd) = (0.0, 0.0);
                        for k in 0..nm {
                            if k % 2 == 0 {
                                even += c[k] * y[k];
                            } else {
                                odd += c[k] * y[k];
                            }
                        }
                        let w = b.weights[m];
                        let pt = |u: f64| {
                            let au = u.abs();
                            let pw = if au > 0.0 { au.powf(p - 1.0) } else { 0.0 };
                            let f = pw * u;
                            (f, if au > 0.0 { f * au.ln() } else { 0.0 }, p * pw)
                        };
                        let (fa, da, ja) = pt(even + odd);
                        let (fb, db, jb) = if mirrored { pt(even - odd) } else { (0.0, 0.0, 0.0) };
                        let (fe, fo) = (w * (fa + fb), w * (fa - fb));
                        let (de, dof) = (w * (da + db), w * (da - db));
                        let (je, jo) = (w * (ja + jb), w * (ja - jb));
                        for k in 0..nm {
                            let odd_k = k % 2 == 1;
                            fk[k] += if odd_k { fo } else { fe } * y[k];
                            dk[k] += if odd_k { dof } else { de } * y[k];
                        }
                        if jacobian {
                            for k in 0..nm {
                                for j in 0..=k {
                                    let wj = if (k + j) % 2 == 1 { jo } else { je };
                                    g[k * nm + j] += wj * y[k] * y[j];
                                }
                            }
                        }
                    }
                    let wq = qw[idx];
                    let (fl, po, sr) = (self.flux[idx] * wq, self.pot[idx] * wq, self.src[idx] * wq);
                    for a in 0..4 {
                        for k in 0..nm {
                            let s = sr * fk[k] * bv[a];
                            res[a * nm + k] += fl * cd[k] * bd[a] / h + self.mu[k] * po * c[k] * bv[a] - s;
                            srcv[a * nm + k] += s;
                            dp[a * nm + k] -= sr * dk[k] * bv[a];
                        }
                    }
                    if jacobian {
                        for k in 0..nm {
                            for j in 0..k {
                                g[j * nm + k] = g[k * nm + j];
                            }
                        }
                        for a in 0..4 {
                            for bb in 0..4 {
                                let stiff = fl * bd[a] * bd[bb] / (h * h);
                                let vv = bv[a] * bv[bb];
                                for k in 0..nm {
                                    let row = (a * nm + k) * nloc;
                                    jac[row + bb * nm + k] += stiff + self.mu[k] * po * vv;
                                    for j in 0..nm {
                                        jac[row + bb * nm + j] -= sr * g[k * nm + j] * vv;
                                    }
                                }
                            }
                        }
                    }
                }
                Local { res, src: srcv, dp, jac }
            })
            .collect();
        let size = dofs * nm;
        let mut residual = vec![0.0; size];
        let mut source = vec![0.0; size];
        let mut dr_dp = vec![0.0; size];
        let bw = 4 * nm - 1;
        let mut mat = if jacobian { Some(BandMatrix::zeros(size, bw, bw)) } else { None };
        let gidx = |i: usize, k: usize| i * nm + k;
        for (e, loc) in locals.iter().enumerate() {
            for a in 0..4 {
                let i = 3 * e + a;
                if i >= dofs {
                    continue;
                }
                for k in 0..nm {
                    if Self::constrained(i, k) {
                        continue;
                    }
                    let r = gidx(i, k);
                    residual[r] += loc.res[a * nm + k];
                    source[r] += loc.src[a * nm + k];
                    dr_dp[r] += loc.dp[a * nm + k];
                    if let Some(m) = mat.as_mut() {
                        for bb in 0..4 {
                            let l = 3 * e + bb;
                            if l >= dofs {
                                continue;
                            }
                            for j in 0..nm {
                                if !Self::constrained(l, j) {
                                    m.add(r, gidx(l, j), loc.jac[(a * nm + k) * nloc + bb * nm + j]);
                                }
                            }
                        }
                    }
                }
            }
        }
        for k in 1..nm {
            let r = gidx(0, k);
            residual[r] = coeffs[k];
            if let Some(m) = mat.as_mut() {
                m.add(r, r, 1.0);
            }
        }
        Assembly { residual, source, dr_dp, jacobian: mat }
    }

    /// The residual of the discrete equations at `(p, coeffs)`.
    pub fn residual(&self, p: f64, coeffs: &[f64]) -> Residual {
        let a = self.assemble(p, coeffs, self.modes(), false);
        let norm = self.weighted_norm(&a.residual) / self.residual_scale;
        let source_norm = self.weighted_norm(&a.source);
        Residual { field: a.residual, norm, source_norm }
    }

    /// Symmetric Jacobian of the residual in band storage.
    pub fn jacobian(&self, p: f64, coeffs: &[f64]) -> BandMatrix {
        self.assemble(p, coeffs, self.modes(), true).jacobian.expect("assembled")
    }

    /// `J v`.
    pub fn linearized_apply(&self, p: f64, coeffs: &[f64], v: &[f64]) -> Vec<f64> {
        self.jacobian(p, coeffs).matvec(v)
    }

    /// The lower triangle of a band matrix as a symmetric one.
    pub fn symmetric_part(mat: &BandMatrix, bw: usize) -> SymBanded {
        let n = mat.dim();
        let mut s = SymBanded::zeros(n, bw);
        for i in 0..n {
            for j in i.saturating_sub(bw)..=i {
                let v = mat.get(i, j);
                if v != 0.0 {
                    s.add(i, j, v);
                }
            }
        }
        s
    }

    pub fn bandwidth(&self) -> usize {
        4 * self.modes() - 1
    }

    /// Block-diagonal mass matrix in the global ordering (identity on the
    /// constrained origin dofs).
    pub fn global_mass(&self) -> SymBanded {
        let nm = self.modes();
        let mut m = SymBanded::zeros(self.len(), self.bandwidth());
        for i in 0..self.dofs {
            for l in i.saturating_sub(3)..=i {
                let v = self.mass.get(i, l);
                for k in 0..nm {
                    if Self::constrained(i, k) || Self::constrained(l, k) {
                        continue;
                    }
                    m.add(self.index(i, k), self.index(l, k), v);
                }
            }
        }
        for k in 1..nm {
            m.add(self.index(0, k), self.index(0, k), 1.0);
        }
        m
    }

    /// The mode-`k` diagonal block of the Jacobian and the radial mass matrix.
    pub fn sector_pencil(&self, p: f64, coeffs: &[f64], k: usize) -> Result<Pencil> {
        if k > self.k_max {
            return Err(HenonError::InvalidArgument(format!("mode {k} above k_max = {}", self.k_max)));
        }
        let jac = self.jacobian(p, coeffs);
        let mut a = SymBanded::zeros(self.dofs, 3);
        let mut b = SymBanded::zeros(self.dofs, 3);
        for i in 0..self.dofs {
            for l in i.saturating_sub(3)..=i {
                a.add(i, l, jac.get(self.index(i, k), self.index(l, k)));
                let mv = if k > 0 && (i == 0 || l == 0) { if i == l { 1.0 } else { 0.0 } } else { self.mass.get(i, l) };
                b.add(i, l, mv);
            }
        }
        Ok(Pencil::new(a, b))
    }

    /// Newton on the radial mode alone (the radial problem is nondegenerate,
    /// so this works at any exponent, including degeneracy points). `tol`
    /// bounds the residual relative to the nonlinear term.
    pub fn polish_radial(&self, p: f64, coeffs: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
        let mut c0: Vec<f64> = self.mode(coeffs, 0);
        let mut last = f64::INFINITY;
        for it in 0..=max_iter {
            let a = self.assemble(p, &c0, 1, true);
            let norm = weighted_norm_single(&a.residual, &self.support)
                / weighted_norm_single(&a.source, &self.support).max(f64::MIN_POSITIVE);
            if norm < tol || (it > 0 && norm >= last && norm < 1e3 * tol) {
                let mut out = vec![0.0; self.len()];
                self.set_mode(&mut out, 0, &c0);
                return Ok(out);
            }
            if it == max_iter {
                return Err(HenonError::NoConvergence { iterations: it, residual: norm });
            }
            last = norm;
            let lu = a.jacobian.expect("assembled").lu()?;
            let d = lu.solve(&a.residual);
            c0.iter_mut().zip(&d).for_each(|(x, y)| *x -= y);
        }
        unreachable!()
    }

    /// Evaluates a state: residual, positivity, asymmetry, norms.
    pub fn state(&self, p: f64, coeffs: Vec<f64>) -> AxisymState {
        let residual_norm = self.residual(p, &coeffs).norm;
        let vals = self.values(&coeffs);
        let interior = &vals[..vals.len() - 1];
        let min_interior = interior.iter().flatten().fold(f64::INFINITY, |m, v| m.min(*v));
        let sup_norm = vals.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        AxisymState {
            p,
            asymmetry: self.asymmetry(&coeffs),
            residual_norm,
            positive: min_interior > 0.0,
            min_interior,
            sup_norm,
            coeffs,
        }
    }
}

fn weighted_norm_single(v: &[f64], support: &[f64]) -> f64 {
    v.iter().zip(support).map(|(x, s)| x * x / s).sum::<f64>().sqrt()
}

struct Local {
    res: Vec<f64>,
    src: Vec<f64>,
    dp: Vec<f64>,
    jac: Vec<f64>,
}

struct Assembly {
    residual: Vec<f64>,
    source: Vec<f64>,
    dr_dp: Vec<f64>,
    jacobian: Option<BandMatrix>,
}

#[derive(Debug, Clone)]
pub struct Residual {
    pub field: Vec<f64>,
    /// Weighted discrete L² norm divided by the grid's residual scale.
    pub norm: f64,
    /// The same norm of the nonlinear term, unscaled.
    pub source_norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AxisymState {
    pub p: f64,
    /// Global coefficient vector.
    pub coeffs: Vec<f64>,
    pub residual_norm: f64,
    /// `(∫ r^{N-1} c_1²)^{1/2}`: zero exactly for radial states.
    pub asymmetry: f64,
    pub positive: bool,
    /// Smallest value over interior vertices × polar angles.
    pub min_interior: f64,
    pub sup_norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NewtonLog {
    pub residuals: Vec<f64>,
}

impl NewtonLog {
    /// Smallest `log(r_{k+1}) / log(r_k)` over steps still far from
    /// roundoff; about 2 for quadratic convergence.
    pub fn convergence_order(&self) -> Option<f64> {
        let r = &self.residuals;
        (1..r.len().saturating_sub(1))
            .filter(|&i| r[i] < 1e-1 && r[i + 1] > 1e-13 && r[i] < r[i - 1])
            .map(|i| r[i + 1].ln() / r[i].ln())
            .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.min(x))))
    }
}

/// Plain Newton at fixed `p`.
pub fn newton_solve(grid: &AxisymGrid, p: f64, guess: &[f64], tol: f64, max_iter: usize) -> Result<(AxisymState, NewtonLog)> {
    if guess.len() != grid.len() || guess.iter().any(|x| !x.is_finite()) {
        return Err(HenonError::InvalidArgument("guess must be finite and match the grid".into()));
    }
    let mut c = guess.to_vec();
    let mut log = NewtonLog { residuals: Vec::new() };
    for it in 0..=max_iter {
        let a = grid.assemble(p, &c, grid.modes(), true);
        let norm = grid.weighted_norm(&a.residual) / grid.residual_scale;
        log.residuals.push(norm);
        if norm < tol {
            return Ok((grid.state(p, c), log));
        }
        if it == max_iter || !norm.is_finite() {
            return Err(HenonError::NoConvergence { iterations: it, residual: norm });
        }
        let lu = a.jacobian.expect("assembled").lu()?;
        let d = lu.solve(&a.residual);
        c.iter_mut().zip(&d).for_each(|(x, y)| *x -= y);
    }
    unreachable!()
}

/// Solves `[J b; gᵀ gp] [x; y] = [f; h]` by block elimination with two
/// rounds of iterative refinement.
fn bordered_solve(jac: &BandMatrix, lu: &BandLu, b: &[f64], g: &[f64], gp: f64, f: &[f64], h: f64) -> (Vec<f64>, f64) {
    let x2 = lu.solve(b);
    let denom = gp - dot(g, &x2);
    let solve = |f: &[f64], h: f64| {
        let x1 = lu.solve(f);
        let y = (h - dot(g, &x1)) / denom;
        let x: Vec<f64> = x1.iter().zip(&x2).map(|(a, c)| a - y * c).collect();
        (x, y)
    };
    let (mut x, mut y) = solve(f, h);
    for _ in 0..2 {
        let jx = jac.matvec(&x);
        let rf: Vec<f64> = f.iter().zip(&jx).zip(b).map(|((f, j), b)| f - j - b * y).collect();
        let rh = h - dot(g, &x) - gp * y;
        let (dx, dy) = solve(&rf, rh);
        x.iter_mut().zip(&dx).for_each(|(a, d)| *a += d);
        y += dy;
    }
    (x, y)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `ψ_{1,1}(r) Y_1(cos θ)` on the grid, normalized in `∫ r^{N-1} c²`.
pub fn kernel_direction(dp: &DegeneracyPoint, grid: &AxisymGrid) -> Result<Vec<f64>> {
    let ker = &dp.kernel;
    if ker.k != 1 || ker.eigenfunctions.is_empty() {
        return Err(HenonError::InvalidArgument("degeneracy point carries no mode-1 kernel".into()));
    }
    let nodes: Vec<f64> = ker.radii.iter().step_by(3).copied().collect();
    let mesh = Mesh::from_nodes(nodes)?;
    if mesh.cells() * 3 + 1 != ker.radii.len() {
        return Err(HenonError::Discretization("kernel radii are not a cubic dof layout".into()));
    }
    let space = CubicSpace::new(mesh, OriginBc::Dirichlet);
    let psi = &ker.eigenfunctions[0];
    let vals: Vec<f64> = grid.dof_radii().iter().map(|&r| space.eval_full(psi, r).0).collect();
    let mut coeffs = vec![0.0; grid.len()];
    grid.set_mode(&mut coeffs, 1, &vals);
    let norm = grid.inner(&coeffs, &coeffs).sqrt();
    if !(norm > 0.0) {
        return Err(HenonError::Discretization("kernel interpolates to zero".into()));
    }
    coeffs.iter_mut().for_each(|x| *x /= norm);
    Ok(coeffs)
}

/// The radial solution at `p`, embedded and Newton-polished on the grid.
pub fn radial_state(grid: &AxisymGrid, p: f64, opts: &RadialOptions) -> Result<(RadialProfile, Vec<f64>)> {
    let params = HenonParams::subcritical(grid.n, grid.alpha, p)?;
    let profile = solve_radial(&params, opts)?;
    let c = grid.embed_radial(&profile)?;
    let c = grid.polish_radial(p, &c, 1e-13, 20)?;
    Ok((profile, c))
}

/// The `count` eigenvalues of `(J, M)` closest to zero at the state
/// `(p, c)`, ordered by magnitude. At a simple degeneracy point the first is
/// near zero and the second is not.
pub fn kernel_spectrum(grid: &AxisymGrid, p: f64, coeffs: &[f64], count: usize) -> Result<Vec<f64>> {
    let jac = grid.jacobian(p, coeffs);
    let mut a = AxisymGrid::symmetric_part(&jac, grid.bandwidth());
    // the pinned origin dofs contribute eigenvalue 1; move them out of sight
    for k in 1..grid.modes() {
        a.add(grid.index(0, k), grid.index(0, k), 1e12);
    }
    let pencil = Pencil::new(a, grid.global_mass());
    let i0 = pencil.count_below(0.0);
    let lo = i0.saturating_sub(count);
    let hi = (i0 + count).min(pencil.dim());
    let mut vals = (lo..hi).map(|i| pencil.eigenpair(i).map(|e| e.value)).collect::<Result<Vec<_>>>()?;
    vals.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    vals.truncate(count);
    Ok(vals)
}

/// Exponent in `bracket` where the smallest eigenvalue of the mode-1 block
/// of the Jacobian at the radial solution changes sign, by bisection on its
/// inertia.
pub fn sector_zero_crossing(grid: &AxisymGrid, bracket: (f64, f64), tol: f64, opts: &RadialOptions) -> Result<f64> {
    let negatives = |p: f64| -> Result<usize> {
        let (_, c) = radial_state(grid, p, opts)?;
        Ok(grid.sector_pencil(p, &c, 1)?.a.ldlt().negatives())
    };
    let (mut lo, mut hi) = bracket;
    let n_lo = negatives(lo)?;
    let n_hi = negatives(hi)?;
    if n_lo == n_hi {
        return Err(HenonError::InvalidArgument(format!("no sector crossing on [{lo}, {hi}]")));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if negatives(mid)? == n_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ContinuationOptions {
    /// Branch-switch amplitude relative to `‖u_{p̄}‖∞`.
    pub epsilon: f64,
    /// Initial, smallest and largest arclength steps in the scaled metric.
    pub step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub max_steps: usize,
    pub max_folds: usize,
    pub newton_tol: f64,
    pub max_newton: usize,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            step: 0.05,
            min_step: 1e-4,
            max_step: 0.25,
            max_steps: 200,
            max_folds: 4,
            newton_tol: DEFAULT_NEWTON_TOL,
            max_newton: DEFAULT_MAX_NEWTON,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    StepLimit,
    FoldCountLimit,
    ResidualFailure,
    ReturnedToRadial,
    PositivityLoss,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchPoint {
    /// Arclength from the radial solution at `p̄` in the scaled metric.
    pub arclength: f64,
    pub p: f64,
    pub asymmetry: f64,
    pub sup_norm: f64,
    pub c1_norm: f64,
    pub residual: f64,
    pub positive: bool,
    pub min_interior: f64,
    pub newton_iterations: usize,
    /// `|⟨τ, X - X_pred⟩|` after the corrector.
    pub arclength_defect: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Branch {
    pub n: usize,
    pub alpha: f64,
    pub p_bar: f64,
    /// Absolute branch-switch amplitude actually used.
    pub epsilon: f64,
    /// `‖u_{p̄}‖` in the grid's L² norm; scales the state part of the metric.
    pub radial_norm: f64,
    pub points: Vec<BranchPoint>,
    #[serde(skip)]
    pub states: Vec<AxisymState>,
    pub termination: Termination,
    pub folds: usize,
    /// `(q, Λ_{1,1}(q))` if the branch came back to the radial curve.
    pub returned_at: Option<(f64, f64)>,
}

struct Metric {
    scale2: f64,
}

impl Metric {
    fn dot(&self, grid: &AxisymGrid, a: (&[f64], f64), b: (&[f64], f64)) -> f64 {
        grid.inner(a.0, b.0) / self.scale2 + a.1 * b.1
    }

    /// Border row for `⟨t, ·⟩`.
    fn row(&self, grid: &AxisymGrid, t: (&[f64], f64)) -> (Vec<f64>, f64) {
        let mut g = grid.mass_apply(t.0);
        g.iter_mut().for_each(|x| *x /= self.scale2);
        (g, t.1)
    }
}

struct Corrected {
    c: Vec<f64>,
    p: f64,
    iterations: usize,
}

/// Newton on `R(c, p) = 0`, `gᵀc + gp p = h`.
fn bordered_newton(
    grid: &AxisymGrid,
    mut c: Vec<f64>,
    mut p: f64,
    g: &[f64],
    gp: f64,
    h: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Corrected> {
    let mut last = f64::INFINITY;
    for it in 0..=max_iter {
        if !(p > 1.0) {
            return Err(HenonError::NoConvergence { iterations: it, residual: f64::NAN });
        }
        let a = grid.assemble(p, &c, grid.modes(), true);
        let norm = grid.weighted_norm(&a.residual) / grid.residual_scale;
        let cons = dot(g, &c) + gp * p - h;
        if norm < tol && cons.abs() < 1e-12 * (1.0 + h.abs()) {
            return Ok(Corrected { c, p, iterations: it });
        }
        if it == max_iter || !norm.is_finite() || (it > 2 && norm > last) {
            return Err(HenonError::NoConvergence { iterations: it, residual: norm });
        }
        last = norm;
        let jac = a.jacobian.expect("assembled");
        let lu = jac.clone().lu()?;
        let (dx, dy) = bordered_solve(&jac, &lu, &a.dr_dp, g, gp, &a.residual, cons);
        c.iter_mut().zip(&dx).for_each(|(x, d)| *x -= d);
        p -= dy;
    }
    unreachable!()
}

/// Switches onto the nonradial branch at `origin` and follows it by
/// pseudo-arclength continuation.
pub fn continue_branch(grid: &AxisymGrid, origin: &DegeneracyPoint, opts: &ContinuationOptions, radial: &RadialOptions) -> Result<Branch> {
    if !origin.changing {
        return Err(HenonError::BranchSwitch("origin is not a Morse-index-changing point".into()));
    }
    if origin.n != grid.n || origin.alpha != grid.alpha {
        return Err(HenonError::InvalidArgument("degeneracy point does not match the grid".into()));
    }
    let p_bar = origin.p_bar;
    let params = HenonParams::subcritical(grid.n, grid.alpha, p_bar)?;
    let profile = solve_radial(&params, radial)?;
    let c_rad0 = grid.embed_radial(&profile)?;
    // residuals are measured against the nonlinear term of u_{p̄}
    let probe = grid.residual(p_bar, &c_rad0);
    let grid = grid.clone().with_residual_scale(probe.source_norm);
    let c_rad = grid.polish_radial(p_bar, &c_rad0, 1e-13, 20)?;
    let psi = kernel_direction(origin, &grid)?;
    let radial_norm = grid.inner(&c_rad, &c_rad).sqrt();
    let metric = Metric { scale2: radial_norm * radial_norm };
    let g_switch = grid.mass_apply(&psi);

    let mut eps = opts.epsilon * profile.sup_norm();
    let mut first = None;
    for _ in 0..3 {
        let guess: Vec<f64> = c_rad.iter().zip(&psi).map(|(u, k)| u + eps * k).collect();
        match bordered_newton(&grid, guess, p_bar, &g_switch, 0.0, eps, opts.newton_tol, opts.max_newton) {
            Ok(sol) => {
                let st = grid.state(sol.p, sol.c.clone());
                if st.positive && st.asymmetry > 0.0 {
                    first = Some((sol, st));
                    break;
                }
            }
            Err(e) => log::debug!("branch switch at eps = {eps:.3e} failed: {e}"),
        }
        eps *= 0.5;
    }
    let (sol, st) = first.ok_or_else(|| HenonError::BranchSwitch(format!("Newton failed for three amplitudes down to {eps:.3e}")))?;
    let dc: Vec<f64> = sol.c.iter().zip(&c_rad).map(|(a, b)| a - b).collect();
    let mut s = metric.dot(&grid, (&dc, sol.p - p_bar), (&dc, sol.p - p_bar)).sqrt();
    let mut points = vec![BranchPoint {
        arclength: s,
        p: sol.p,
        asymmetry: st.asymmetry,
        sup_norm: st.sup_norm,
        c1_norm: grid.c1_norm(&sol.c),
        residual: st.residual_norm,
        positive: st.positive,
        min_interior: st.min_interior,
        newton_iterations: sol.iterations,
        arclength_defect: 0.0,
    }];
    let mut states = vec![st];

    // initial tangent oriented away from the radial curve
    let mut x = (sol.c, sol.p);
    let mut tangent = {
        let a = grid.assemble(x.1, &x.0, grid.modes(), true);
        let jac = a.jacobian.expect("assembled");
        let lu = jac.clone().lu()?;
        let (tc, tp) = bordered_solve(&jac, &lu, &a.dr_dp, &g_switch, 0.0, &vec![0.0; grid.len()], 1.0);
        normalize(&grid, &metric, tc, tp)
    };
    let mut h = opts.step;
    let mut folds = 0;
    let mut termination = Termination::StepLimit;
    let mut returned_at = None;
    while points.len() < opts.max_steps {
        let pred_c: Vec<f64> = x.0.iter().zip(&tangent.0).map(|(a, t)| a + h * t).collect();
        let pred_p = x.1 + h * tangent.1;
        let (g, gp) = metric.row(&grid, (&tangent.0, tangent.1));
        let target = dot(&g, &pred_c) + gp * pred_p;
        let corrected = bordered_newton(&grid, pred_c.clone(), pred_p, &g, gp, target, opts.newton_tol, opts.max_newton)
            .and_then(|sol| {
                let st = grid.state(sol.p, sol.c.clone());
                if st.positive {
                    Ok((sol, st))
                } else {
                    Err(HenonError::BranchSwitch("corrector left the positive cone".into()))
                }
            });
        let (sol, st) = match corrected {
            Ok(v) => v,
            Err(e) => {
                h *= 0.5;
                log::debug!("step rejected ({e}); h = {h:.3e}");
                if h < opts.min_step {
                    termination = if matches!(e, HenonError::BranchSwitch(_)) {
                        Termination::PositivityLoss
                    } else {
                        Termination::ResidualFailure
                    };
                    break;
                }
                continue;
            }
        };
        let defect = (dot(&g, &sol.c) + gp * sol.p - target).abs();
        // new tangent, oriented along the old one
        let a = grid.assemble(sol.p, &sol.c, grid.modes(), true);
        let jac = a.jacobian.expect("assembled");
        let lu = jac.clone().lu()?;
        let (tc, tp) = bordered_solve(&jac, &lu, &a.dr_dp, &g, gp, &vec![0.0; grid.len()], 1.0);
        let new_tangent = normalize(&grid, &metric, tc, tp);
        if new_tangent.1.signum() != tangent.1.signum() && tangent.1 != 0.0 {
            folds += 1;
        }
        let dc: Vec<f64> = sol.c.iter().zip(&x.0).map(|(a, b)| a - b).collect();
        s += metric.dot(&grid, (&dc, sol.p - x.1), (&dc, sol.p - x.1)).sqrt();
        points.push(BranchPoint {
            arclength: s,
            p: sol.p,
            asymmetry: st.asymmetry,
            sup_norm: st.sup_norm,
            c1_norm: grid.c1_norm(&sol.c),
            residual: st.residual_norm,
            positive: st.positive,
            min_interior: st.min_interior,
            newton_iterations: sol.iterations,
            arclength_defect: defect,
        });
        let asym = st.asymmetry;
        let p_now = sol.p;
        states.push(st);
        x = (sol.c, sol.p);
        tangent = new_tangent;
        if asym < RADIAL_THRESHOLD * radial_norm {
            let l11 = solve_radial(&params.with_p(p_now)?, radial).and_then(|pr| crate::spectral::lambda_11(&pr));
            returned_at = Some((p_now, l11.unwrap_or(f64::NAN)));
            termination = Termination::ReturnedToRadial;
            break;
        }
        if folds >= opts.max_folds {
            termination = Termination::FoldCountLimit;
            break;
        }
        if sol.iterations <= 3 {
            h = (1.5 * h).min(opts.max_step);
        }
    }
    Ok(Branch {
        n: grid.n,
        alpha: grid.alpha,
        p_bar,
        epsilon: eps,
        radial_norm,
        points,
        states,
        termination,
        folds,
        returned_at,
    })
}

fn normalize(grid: &AxisymGrid, metric: &Metric, mut c: Vec<f64>, mut p: f64) -> (Vec<f64>, f64) {
    let n = metric.dot(grid, (&c, p), (&c, p)).sqrt();
    c.iter_mut().for_each(|x| *x /= n);
    p /= n;
    (c, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> AxisymGrid {
        AxisymGrid::with_defaults(3, 1.0, 81, 4).unwrap()
    }

    #[test]
    fn zero_state_has_zero_residual() {
        let g = grid();
        let r = g.residual(2.0, &vec![0.0; g.len()]);
        assert_eq!(r.norm, 0.0);
    }

    #[test]
    fn jacobian_is_symmetric_and_matches_differences() {
        let g = grid();
        let mut c: Vec<f64> = (0..g.len()).map(|i| ((i as f64) * 0.37).sin()).collect();
        for k in 1..g.modes() {
            c[g.index(0, k)] = 0.0;
        }
        let last = g.dof_radii().len();
        assert_eq!(last, g.len() / g.modes());
        let p = 2.5;
        let j = g.jacobian(p, &c);
        let bw = g.bandwidth();
        let mut asym = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..g.len() {
            for l in i.saturating_sub(bw)..=i {
                asym = asym.max((j.get(i, l) - j.get(l, i)).abs());
                scale = scale.max(j.get(i, l).abs());
            }
        }
        assert!(asym <= 1e-13 * scale, "{asym} vs {scale}");
        let v: Vec<f64> = (0..g.len()).map(|i| ((i as f64) * 1.3).cos()).collect();
        let mut v = v;
        for k in 1..g.modes() {
            v[g.index(0, k)] = 0.0;
        }
        let h = 1e-6;
        let cp: Vec<f64> = c.iter().zip(&v).map(|(a, b)| a + h * b).collect();
        let cm: Vec<f64> = c.iter().zip(&v).map(|(a, b)| a - h * b).collect();
        let rp = g.residual(p, &cp).field;
        let rm = g.residual(p, &cm).field;
        let jv = j.matvec(&v);
        let err = rp.iter().zip(&rm).zip(&jv).map(|((a, b), j)| ((a - b) / (2.0 * h) - j).abs()).fold(0.0, f64::max);
        let jn = jv.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(err < 1e-6 * jn, "{err} vs {jn}");
    }

    #[test]
    fn radial_guess_stays_radial() {
        let g = grid();
        let prm = HenonParams::new(3, 1.0, 3.0).unwrap();
        let prof = solve_radial(&prm, &RadialOptions::default()).unwrap();
        let c = g.embed_radial(&prof).unwrap();
        let scale = g.residual(3.0, &c).source_norm;
        let g = g.with_residual_scale(scale);
        let (st, _) = newton_solve(&g, 3.0, &c, 1e-12, 10).unwrap();
        assert!(st.asymmetry == 0.0, "{}", st.asymmetry);
        for k in 1..g.modes() {
            let ck = g.mode(&st.coeffs, k);
            let m = ck.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            assert!(m < 1e-12 * st.sup_norm, "k = {k}: {m}");
        }
    }

    #[test]
    fn noise_converges_to_zero() {
        let g = grid();
        let c: Vec<f64> = (0..g.len()).map(|i| if i < g.modes() && i > 0 { 0.0 } else { 1e-6 * ((i as f64) * 2.1).sin() }).collect();
        let (st, _) = newton_solve(&g, 2.0, &c, 1e-14, 20).unwrap();
        assert!(st.coeffs.iter().all(|x| x.abs() < 1e-14));
    }
}
