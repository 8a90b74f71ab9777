//! Structural properties of the radial solution and the mode spectra.

use henon::mesh::Mesh;
use henon::params::HenonParams;
use henon::radial::{solve_radial, RadialOptions};
use henon::spectral::{solve_mode_spectrum, ModeProblem};

fn profile(p: f64) -> henon::radial::RadialProfile {
    solve_radial(&HenonParams::subcritical(3, 1.0, p).unwrap(), &RadialOptions::default()).unwrap()
}

#[test]
fn horizon_does_not_change_the_profile() {
    let params = HenonParams::subcritical(3, 1.0, 4.0).unwrap();
    let a = solve_radial(&params, &RadialOptions::default()).unwrap();
    let b = solve_radial(&params, &RadialOptions { horizon: 50.0, ..RadialOptions::default() }).unwrap();
    let tol = RadialOptions::default().ivp_tol;
    assert!((a.first_zero - b.first_zero).abs() <= 10.0 * tol * a.first_zero);
    for (u, v) in a.shape.iter().zip(&b.shape) {
        assert!((u - v).abs() <= 10.0 * tol);
    }
}

#[test]
fn sup_norm_is_mesh_independent() {
    // ‖u‖∞ comes from the first zero of the IVP, not from the output mesh,
    // so nested meshes agree to roundoff rather than to O(h²)
    let params = HenonParams::subcritical(3, 1.0, 3.0).unwrap();
    let norms: Vec<f64> = [251, 501, 1001]
        .iter()
        .map(|&n| solve_radial(&params, &RadialOptions::with_mesh(Mesh::cosine(n).unwrap())).unwrap().sup_norm())
        .collect();
    for w in norms.windows(2) {
        assert!((w[0] - w[1]).abs() < 1e-12 * w[0], "{norms:?}");
    }
}

#[test]
fn derived_function_signs() {
    for p in [1.5, 3.0, 6.5] {
        let prof = profile(p);
        let d = prof.derived.as_ref().unwrap();
        let m = d.w.len();
        assert!(d.w[1..].iter().all(|w| *w > 0.0), "w = -u' > 0 on (0, 1]");
        let changes = d.z[1..m].windows(2).filter(|w| w[0] * w[1] < 0.0).count();
        assert!(changes >= 1, "z changes sign at p = {p}");
        assert!(d.z[1] > 0.0 && d.z[m - 1] < 0.0);
    }
}

#[test]
fn oscillation_theorem() {
    let prof = profile(2.5);
    for k in 0..4 {
        let spec = solve_mode_spectrum(&ModeProblem::new(&prof, k).unwrap(), 4).unwrap();
        assert_eq!(spec.zero_counts, vec![0, 1, 2, 3], "k = {k}");
        assert!(spec.eigenvalues.windows(2).all(|w| w[1] > w[0]));
    }
}
