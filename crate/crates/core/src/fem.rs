//! Cubic Lagrange finite elements on a radial mesh.
//!
//! Each cell carries four nodes (Gauss-Lobatto placement); a 6-point
//! Gauss-Legendre rule per cell is used for all integrals. Global dofs are
//! numbered `3e, 3e+1, 3e+2, 3e+3` on cell `e`, so assembled matrices have
//! half-bandwidth 3.

use crate::banded::SymBanded;
use crate::mesh::Mesh;

pub const NQ: usize = 6;
const GAUSS_X: [f64; NQ] = [
    -0.932_469_514_203_152_1,
    -0.661_209_386_466_264_5,
    -0.238_619_186_083_196_9,
    0.238_619_186_083_196_9,
    0.661_209_386_466_264_5,
    0.932_469_514_203_152_1,
];
const GAUSS_W: [f64; NQ] = [
    0.171_324_492_379_170_3,
    0.360_761_573_048_138_6,
    0.467_913_934_572_691_0,
    0.467_913_934_572_691_0,
    0.360_761_573_048_138_6,
    0.171_324_492_379_170_3,
];

/// Reference nodes on `[0, 1]`.
fn local_nodes() -> [f64; 4] {
    let s = 1.0 / 5.0f64.sqrt();
    [0.0, 0.5 * (1.0 - s), 0.5 * (1.0 + s), 1.0]
}

fn lagrange(x: f64) -> ([f64; 4], [f64; 4]) {
    let nodes = local_nodes();
    let mut val = [0.0; 4];
    let mut der = [0.0; 4];
    for a in 0..4 {
        let mut denom = 1.0;
        for b in 0..4 {
            if b != a {
                denom *= nodes[a] - nodes[b];
            }
        }
        let mut prod = 1.0;
        for b in 0..4 {
            if b != a {
                prod *= x - nodes[b];
            }
        }
        val[a] = prod / denom;
        let mut d = 0.0;
        for c in 0..4 {
            if c == a {
                continue;
            }
            let mut t = 1.0;
            for b in 0..4 {
                if b != a && b != c {
                    t *= x - nodes[b];
                }
            }
            d += t;
        }
        der[a] = d / denom;
    }
    (val, der)
}

/// Boundary treatment at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OriginBc {
    /// Natural condition (ψ′(0) = 0 through the vanishing flux weight).
    Natural,
    /// ψ(0) = 0 imposed on the dof.
    Dirichlet,
}

/// The discrete space on `[0, R]` with a Dirichlet condition at `r = R`.
#[derive(Debug, Clone)]
pub struct CubicSpace {
    mesh: Mesh,
    origin: OriginBc,
    ref_val: [[f64; 4]; NQ],
    ref_der: [[f64; 4]; NQ],
    quad_r: Vec<f64>,
    quad_w: Vec<f64>,
}

impl CubicSpace {
    pub fn new(mesh: Mesh, origin: OriginBc) -> Self {
        let mut ref_val = [[0.0; 4]; NQ];
        let mut ref_der = [[0.0; 4]; NQ];
        for q in 0..NQ {
            let (v, d) = lagrange(0.5 * (GAUSS_X[q] + 1.0));
            ref_val[q] = v;
            ref_der[q] = d;
        }
        let (quad_r, quad_w) = quadrature(&mesh);
        Self { mesh, origin, ref_val, ref_der, quad_r, quad_w }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn origin_bc(&self) -> OriginBc {
        self.origin
    }

    /// Values and reference-coordinate derivatives of the four local basis
    /// functions at quadrature node `q` of a cell (divide derivatives by `h`).
    pub fn reference_basis(&self, q: usize) -> (&[f64; 4], &[f64; 4]) {
        (&self.ref_val[q], &self.ref_der[q])
    }

    /// All quadrature abscissae, cell by cell.
    pub fn quad_points(&self) -> &[f64] {
        &self.quad_r
    }

    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_w
    }

    /// Number of dofs before boundary conditions.
    pub fn full_dofs(&self) -> usize {
        3 * self.mesh.cells() + 1
    }

    fn first_free(&self) -> usize {
        match self.origin {
            OriginBc::Natural => 0,
            OriginBc::Dirichlet => 1,
        }
    }

    /// Number of free dofs.
    pub fn dofs(&self) -> usize {
        self.full_dofs() - 1 - self.first_free()
    }

    /// Radius of every full dof.
    pub fn dof_radii(&self) -> Vec<f64> {
        let nodes = local_nodes();
        let m = self.mesh.nodes();
        let mut out = Vec::with_capacity(self.full_dofs());
        for e in 0..self.mesh.cells() {
            let (a, b) = (m[e], m[e + 1]);
            for &x in nodes.iter().take(3) {
                out.push(a + (b - a) * x);
            }
        }
        out.push(self.mesh.radius());
        out
    }

    /// Radii of the free dofs.
    pub fn free_radii(&self) -> Vec<f64> {
        let all = self.dof_radii();
        all[self.first_free()..all.len() - 1].to_vec()
    }

    #[inline]
    fn free_index(&self, full: usize) -> Option<usize> {
        let f = self.first_free();
        if full < f || full + 1 >= self.full_dofs() {
            None
        } else {
            Some(full - f)
        }
    }

    /// Assembles `∫ P φ_a' φ_b' + Q φ_a φ_b` with coefficient values given at
    /// the quadrature points.
    pub fn assemble(&self, flux: &[f64], potential: &[f64]) -> SymBanded {
        assert_eq!(flux.len(), self.quad_r.len());
        assert_eq!(potential.len(), self.quad_r.len());
        let mut mat = SymBanded::zeros(self.dofs(), 3);
        let m = self.mesh.nodes();
        for e in 0..self.mesh.cells() {
            let h = m[e + 1] - m[e];
            let mut local = [[0.0; 4]; 4];
            for q in 0..NQ {
                let k = e * NQ + q;
                let w = self.quad_w[k];
                let pf = flux[k] * w / (h * h);
                let qf = potential[k] * w;
                let (v, d) = (&self.ref_val[q], &self.ref_der[q]);
                for a in 0..4 {
                    for b in 0..=a {
                        local[a][b] += pf * d[a] * d[b] + qf * v[a] * v[b];
                    }
                }
            }
            for a in 0..4 {
                let Some(ia) = self.free_index(3 * e + a) else { continue };
                for b in 0..=a {
                    let Some(ib) = self.free_index(3 * e + b) else { continue };
                    mat.add(ia, ib, local[a][b]);
                }
            }
        }
        mat
    }

    /// Load vector `∫ f φ_a` for `f` given at quadrature points.
    pub fn load(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dofs()];
        for e in 0..self.mesh.cells() {
            for q in 0..NQ {
                let k = e * NQ + q;
                let fw = f[k] * self.quad_w[k];
                for a in 0..4 {
                    if let Some(ia) = self.free_index(3 * e + a) {
                        out[ia] += fw * self.ref_val[q][a];
                    }
                }
            }
        }
        out
    }

    /// Embeds free-dof coefficients into the full dof vector (boundary dofs zero).
    pub fn expand(&self, free: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.full_dofs()];
        let f = self.first_free();
        full[f..f + free.len()].copy_from_slice(free);
        full
    }

    /// Values and radial derivatives of a discrete function at the
    /// quadrature points.
    pub fn at_quad(&self, free: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let full = self.expand(free);
        let m = self.mesh.nodes();
        let mut val = Vec::with_capacity(self.quad_r.len());
        let mut der = Vec::with_capacity(self.quad_r.len());
        for e in 0..self.mesh.cells() {
            let h = m[e + 1] - m[e];
            for q in 0..NQ {
                let (mut v, mut d) = (0.0, 0.0);
                for a in 0..4 {
                    v += full[3 * e + a] * self.ref_val[q][a];
                    d += full[3 * e + a] * self.ref_der[q][a];
                }
                val.push(v);
                der.push(d / h);
            }
        }
        (val, der)
    }

    /// Evaluates a discrete function (free-dof coefficients) at radius `r`.
    pub fn eval(&self, free: &[f64], r: f64) -> (f64, f64) {
        let full = self.expand(free);
        self.eval_full(&full, r)
    }

    pub fn eval_full(&self, full: &[f64], r: f64) -> (f64, f64) {
        let m = self.mesh.nodes();
        let r = r.clamp(0.0, self.mesh.radius());
        let e = match m.binary_search_by(|x| x.partial_cmp(&r).unwrap()) {
            Ok(i) => i.min(self.mesh.cells() - 1),
            Err(i) => i - 1,
        };
        let h = m[e + 1] - m[e];
        let (v, d) = lagrange((r - m[e]) / h);
        let mut val = 0.0;
        let mut der = 0.0;
        for a in 0..4 {
            val += full[3 * e + a] * v[a];
            der += full[3 * e + a] * d[a];
        }
        (val, der / h)
    }

    /// Integral of a function given at quadrature points.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.quad_w).map(|(a, w)| a * w).sum()
    }
}

/// Gauss-Legendre abscissae and weights over every cell of `mesh`.
pub fn quadrature(mesh: &Mesh) -> (Vec<f64>, Vec<f64>) {
    let m = mesh.nodes();
    let mut r = Vec::with_capacity(mesh.cells() * NQ);
    let mut w = Vec::with_capacity(mesh.cells() * NQ);
    for e in 0..mesh.cells() {
        let (a, b) = (m[e], m[e + 1]);
        let h = b - a;
        for q in 0..NQ {
            r.push(a + 0.5 * h * (GAUSS_X[q] + 1.0));
            w.push(0.5 * h * GAUSS_W[q]);
        }
    }
    (r, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::banded::Pencil;

    #[test]
    fn quadrature_is_exact_for_high_degree() {
        let mesh = Mesh::cosine(7).unwrap();
        let (r, w) = quadrature(&mesh);
        let s: f64 = r.iter().zip(&w).map(|(x, w)| w * x.powi(11)).sum();
        assert!((s - 1.0 / 12.0).abs() < 1e-14);
    }

    #[test]
    fn interpolation_reproduces_cubics() {
        let mesh = Mesh::cosine(5).unwrap();
        let space = CubicSpace::new(mesh, OriginBc::Natural);
        let f = |r: f64| (1.0 - r) * (2.0 + r * r);
        let vals: Vec<f64> = space.free_radii().iter().map(|&r| f(r)).collect();
        for &r in &[0.0, 0.13, 0.5, 0.77, 0.999] {
            let (v, d) = space.eval(&vals, r);
            assert!((v - f(r)).abs() < 1e-13);
            let df = -(2.0 + r * r) + (1.0 - r) * 2.0 * r;
            assert!((d - df).abs() < 1e-12);
        }
    }

    /// -(r^2 ψ')' = Λ r^2 ψ on the unit ball of R^3 has Λ_j = (jπ)^2.
    #[test]
    fn radial_dirichlet_laplacian_eigenvalues() {
        let space = CubicSpace::new(Mesh::uniform_on(41, 1.0).unwrap(), OriginBc::Natural);
        let r2: Vec<f64> = space.quad_points().iter().map(|r| r * r).collect();
        let zero = vec![0.0; r2.len()];
        let a = space.assemble(&r2, &zero);
        let b = space.assemble(&zero, &r2);
        let pencil = Pencil::new(a, b);
        for j in 1..=3 {
            let exact = (j as f64 * std::f64::consts::PI).powi(2);
            let got = pencil.eigenpair(j - 1).unwrap().value;
            assert!((got - exact).abs() / exact < 1e-8, "j={j}: {got} vs {exact}");
        }
    }
}
