//! Radial solution of -Δu = |x| u^2 in the unit ball of R^3.
//!
//!     cargo run --release --example radial_profile

use henon::params::HenonParams;
use henon::radial::{solve_radial, RadialOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = HenonParams::subcritical(3, 1.0, 2.0)?;
    let profile = solve_radial(&params, &RadialOptions::default())?;
    println!("p = {}, p_alpha = {}", params.p, params.p_alpha);
    println!("‖u‖∞ = {:.10}", profile.sup_norm());
    println!("first zero of the normalized solution R_0 = {:.10}", profile.first_zero);
    println!("flux residual = {:.2e}", profile.residual);
    let radii = [0.0, 0.25, 0.5, 0.75, 1.0];
    let s = profile.sample(&radii)?;
    println!("{:>6} {:>14} {:>14} {:>14}", "r", "u", "u'", "1 - g");
    for (i, r) in radii.iter().enumerate() {
        let scale = profile.sup_norm();
        println!("{r:>6.2} {:>14.8} {:>14.8} {:>14.6e}", scale * s.u[i], scale * s.u_prime[i], s.one_minus_g[i]);
    }
    Ok(())
}
