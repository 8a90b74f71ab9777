//! Newton and continuation on the axisymmetric discretization.

use henon::continuation::{
    continue_branch, newton_solve, radial_state, AxisymGrid, ContinuationOptions, Termination, DEFAULT_NEWTON_TOL,
};
use henon::radial::RadialOptions;
use henon::scan::{find_degeneracy_points, scan};

#[test]
fn newton_converges_quadratically_from_perturbed_radial_state() {
    let opts = RadialOptions::default();
    let grid = AxisymGrid::with_defaults(3, 1.0, 201, 4).unwrap();
    let (_, c) = radial_state(&grid, 3.0, &opts).unwrap();
    let scale = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    // smooth perturbation in modes 0 and 2; mode 1 stays zero
    let mut guess = c.clone();
    let radii = grid.dof_radii();
    let bump: Vec<f64> = radii.iter().map(|r| 0.02 * scale * (1.0 - r * r) * r * r).collect();
    let base = grid.mode(&c, 0);
    grid.set_mode(&mut guess, 0, &base.iter().zip(&bump).map(|(a, b)| a + b).collect::<Vec<_>>());
    grid.set_mode(&mut guess, 2, &bump);
    let source = grid.residual(3.0, &c).source_norm;
    let grid = grid.with_residual_scale(source);
    let (state, log) = newton_solve(&grid, 3.0, &guess, DEFAULT_NEWTON_TOL, 12).unwrap();
    assert!(state.residual_norm < DEFAULT_NEWTON_TOL);
    let order = log.convergence_order().expect("enough iterations to estimate the order");
    assert!(order > 1.7, "order {order}, residuals {:?}", log.residuals);
    // converged back to the radial solution
    let diff: f64 = state.coeffs.iter().zip(&c).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-6 * scale, "{diff}");
}

#[test]
fn short_branch_on_coarse_grid() {
    let opts = RadialOptions::default();
    let res = scan(3, 1.0, &[2.0, 2.1], 2, &opts).unwrap();
    let d = find_degeneracy_points(&res, 1e-8, &opts).unwrap();
    let grid = AxisymGrid::with_defaults(3, 1.0, 201, 6).unwrap();
    let co = ContinuationOptions { max_steps: 6, ..ContinuationOptions::default() };
    let branch = continue_branch(&grid, &d.points[0], &co, &opts).unwrap();
    assert_eq!(branch.termination, Termination::StepLimit);
    assert_eq!(branch.points.len(), 6);
    assert_eq!(branch.states.len(), branch.points.len());
    for pt in &branch.points {
        assert!(pt.residual < 1e-8 && pt.positive && pt.asymmetry > 0.0, "{pt:?}");
    }
    // arclength increases and the branch leaves p̄ on one side
    assert!(branch.points.windows(2).all(|w| w[1].arclength > w[0].arclength));
    let side = (branch.points[0].p - branch.p_bar).signum();
    assert!(branch.points.iter().all(|pt| (pt.p - branch.p_bar).signum() == side));
}

#[test]
fn embedded_radial_solution_is_a_discrete_solution_up_to_sampling_noise() {
    let opts = RadialOptions::default();
    let grid = AxisymGrid::with_defaults(3, 1.0, 401, 2).unwrap();
    for p in [2.0, 5.0] {
        let prof = henon::radial::solve_radial(&henon::params::HenonParams::subcritical(3, 1.0, p).unwrap(), &opts).unwrap();
        let c = grid.embed_radial(&prof).unwrap();
        let r = grid.residual(p, &c);
        // the weighted residual norm amplifies the ~1e-12 sampling noise near
        // the clustered mesh ends; it stays at the 1e-6 level on this mesh
        assert!(r.norm / r.source_norm < 1e-5, "{}", r.norm / r.source_norm);
        let polished = grid.clone().with_residual_scale(r.source_norm).polish_radial(p, &c, 1e-13, 20).unwrap();
        let diff = c.iter().zip(&polished).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-10 * prof.sup_norm(), "p = {p}: {diff}");
    }
}
