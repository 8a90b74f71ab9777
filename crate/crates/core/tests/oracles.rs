//! Cross-checks against oracles that share no code with the library:
//! fixed-step RK4 shooting, a power-series eigenvalue, and a dense
//! finite-difference eigensolver.

use henon::asymptotics::weighted_first_eigen;
use henon::params::HenonParams;
use henon::radial::{solve_radial, RadialOptions};
use henon::spectral::{lambda_11, solve_mode_spectrum, ModeProblem};
use nalgebra::{DMatrix, SymmetricEigen};

/// `v'' + (N-1)/ρ v' + ρ^α v^p = 0`, `v(0) = 1`, classical RK4 with step
/// `h`; returns the first zero and the solution on a uniform `ρ` grid.
fn rk4_shoot(n: f64, alpha: f64, p: f64, h: f64) -> (f64, Vec<(f64, f64)>) {
    let f = |r: f64, y: [f64; 2]| -> [f64; 2] {
        let v = y[0].max(0.0);
        [y[1], -(n - 1.0) / r * y[1] - r.powf(alpha) * v.powf(p)]
    };
    // start off the singular point with two series terms
    let r0 = h;
    let c = 1.0 / ((2.0 + alpha) * (n + alpha));
    let mut y = [1.0 - c * r0.powf(2.0 + alpha), -(2.0 + alpha) * c * r0.powf(1.0 + alpha)];
    let mut r = r0;
    let mut path = vec![(0.0, 1.0), (r, y[0])];
    loop {
        let k1 = f(r, y);
        let k2 = f(r + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
        let k3 = f(r + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
        let k4 = f(r + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        let next = [
            y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
        if next[0] <= 0.0 {
            // bisection on the cubic Hermite interpolant over the last step
            let hermite = |t: f64| {
                let s = t / h;
                let h00 = 2.0 * s.powi(3) - 3.0 * s * s + 1.0;
                let h10 = s.powi(3) - 2.0 * s * s + s;
                let h01 = -2.0 * s.powi(3) + 3.0 * s * s;
                let h11 = s.powi(3) - s * s;
                h00 * y[0] + h10 * h * y[1] + h01 * next[0] + h11 * h * next[1]
            };
            let (mut lo, mut hi) = (0.0, h);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if hermite(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let t = 0.5 * (lo + hi);
            return (r + t, path);
        }
        y = next;
        r += h;
        path.push((r, y[0]));
    }
}

#[test]
fn radial_solution_matches_rk4_shooting() {
    for &(n, alpha, p) in &[(3usize, 1.0, 2.0), (3, 1.0, 5.0), (4, 0.5, 2.5), (5, 2.0, 3.0)] {
        let params = HenonParams::subcritical(n, alpha, p).unwrap();
        let prof = solve_radial(&params, &RadialOptions::default()).unwrap();
        let (zero, path) = rk4_shoot(n as f64, alpha, p, 2e-4);
        assert!((prof.first_zero - zero).abs() < 1e-8 * zero, "N={n} α={alpha} p={p}: {} vs {zero}", prof.first_zero);
        let amp = zero.powf(2.0 + alpha);
        assert!((prof.amplitude - amp).abs() < 1e-7 * amp);
        // profile shape at r = ρ / R_0
        let radii: Vec<f64> = path.iter().step_by(500).map(|(rho, _)| rho / zero).filter(|r| *r <= 1.0).collect();
        let s = prof.sample(&radii).unwrap();
        for ((r, u), (_, v)) in radii.iter().zip(&s.u).zip(path.iter().step_by(500)) {
            assert!((u - v).abs() < 1e-8, "r = {r}: {u} vs {v}");
        }
    }
}

/// For N = 3, α = 1 the substitution `ψ = rφ` turns the weighted problem
/// `-(r²φ')' = λ r³ φ` into `-ψ'' = λ r ψ`, `ψ(0) = ψ(1) = 0`, whose
/// solution with `ψ'(0) = 1` is an entire power series in `r`.
fn airy_series_at_one(lambda: f64) -> f64 {
    // c_{m+3} (m+3)(m+2) = -λ c_m, c_1 = 1
    let mut c = vec![0.0, 1.0, 0.0];
    let mut sum = 1.0;
    for m in 0..200 {
        let next = -lambda * c[m] / ((m + 3) as f64 * (m + 2) as f64);
        c.push(next);
        sum += next;
        if m % 3 == 1 && m > 20 && next.abs() < 1e-20 {
            break;
        }
    }
    sum
}

#[test]
fn first_weighted_eigenvalue_matches_series() {
    let (mut lo, mut hi) = (10.0, 30.0);
    assert!(airy_series_at_one(lo) > 0.0 && airy_series_at_one(hi) < 0.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if airy_series_at_one(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let exact = 0.5 * (lo + hi);
    let e = weighted_first_eigen(3, 1.0, 1.0).unwrap();
    assert!((e.lambda - exact).abs() < 1e-9 * exact, "{} vs {exact}", e.lambda);
    assert!((e.lambda_prufer - exact).abs() < 1e-8 * exact);
}

/// `Λ_{1,1}` for N = 3 from second-order differences on a uniform grid,
/// with `φ = rψ`: `-φ'' + 2φ/r² = Λ p r^α u^{p-1} φ`, Richardson-extrapolated.
fn fd_lambda_11(alpha: f64, p: f64, m: usize) -> f64 {
    let (zero, _) = rk4_shoot(3.0, alpha, p, 1e-4);
    // u on the grid r_i = i/m via a second RK4 run with step R_0/(m·s)
    let sub = 4;
    let (_, path) = rk4_shoot(3.0, alpha, p, zero / (m * sub) as f64);
    let amp = zero.powf(2.0 + alpha);
    let h = 1.0 / m as f64;
    let dim = m - 1;
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    let mut w = vec![0.0; dim];
    for i in 0..dim {
        let r = (i + 1) as f64 * h;
        a[(i, i)] = 2.0 / (h * h) + 2.0 / (r * r);
        if i > 0 {
            a[(i, i - 1)] = -1.0 / (h * h);
            a[(i - 1, i)] = -1.0 / (h * h);
        }
        let v = path[(i + 1) * sub].1.max(0.0);
        w[i] = p * amp * r.powf(alpha) * v.powf(p - 1.0);
    }
    // symmetric form W^{-1/2} A W^{-1/2}
    for i in 0..dim {
        for j in 0..dim {
            a[(i, j)] /= (w[i] * w[j]).sqrt();
        }
    }
    let eig = SymmetricEigen::new(a);
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

#[test]
fn lambda_11_matches_finite_differences() {
    for &p in &[1.5, 3.0, 6.0] {
        let coarse = fd_lambda_11(1.0, p, 400);
        let fine = fd_lambda_11(1.0, p, 800);
        let extrapolated = (4.0 * fine - coarse) / 3.0;
        let params = HenonParams::subcritical(3, 1.0, p).unwrap();
        let prof = solve_radial(&params, &RadialOptions::default()).unwrap();
        let l = lambda_11(&prof).unwrap();
        assert!((l - extrapolated).abs() < 1e-5 * l, "p = {p}: {l} vs {extrapolated} (fd {coarse}, {fine})");
    }
}

#[test]
fn radial_eigenvalue_is_one_over_p_in_other_dimensions() {
    for &(n, alpha) in &[(4usize, 0.5), (5, 1.0), (6, 0.25)] {
        let pa = henon::params::critical_exponent(n, alpha).unwrap();
        for frac in [0.2, 0.6, 0.95] {
            let p = 1.0 + frac * (pa - 1.0);
            let params = HenonParams::subcritical(n, alpha, p).unwrap();
            let prof = solve_radial(&params, &RadialOptions::default()).unwrap();
            let spec = solve_mode_spectrum(&ModeProblem::new(&prof, 0).unwrap(), 1).unwrap();
            assert!((spec.eigenvalues[0] * p - 1.0).abs() < 1e-8, "N={n} α={alpha} p={p}: {}", spec.eigenvalues[0]);
        }
    }
}
