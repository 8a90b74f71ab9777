//! Follows the nonradial branch that bifurcates at the degeneracy point.
//!
//!     cargo run --release --example branch_continuation

use henon::continuation::{continue_branch, AxisymGrid, ContinuationOptions};
use henon::radial::RadialOptions;
use henon::scan::{find_degeneracy_points, scan};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let opts = RadialOptions::default();
    let res = scan(3, 1.0, &[2.0, 2.1], 2, &opts)?;
    let deg = find_degeneracy_points(&res, 1e-8, &opts)?;
    let origin = &deg.points[0];
    println!("p̄ = {:.10}", origin.p_bar);
    let grid = AxisymGrid::with_defaults(3, 1.0, 401, 8)?;
    let co = ContinuationOptions { max_steps: 20, ..Default::default() };
    let branch = continue_branch(&grid, origin, &co, &opts)?;
    println!("{:>9} {:>10} {:>12} {:>10} {:>10}", "s", "p", "asymmetry", "sup", "residual");
    for pt in &branch.points {
        println!("{:9.4} {:10.6} {:12.4e} {:10.4} {:10.2e}", pt.arclength, pt.p, pt.asymmetry, pt.sup_norm, pt.residual);
    }
    println!("stopped: {:?}", branch.termination);
    Ok(())
}
