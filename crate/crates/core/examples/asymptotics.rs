//! Limits of the radial solution as p -> 1 and p -> p_α.
//!
//!     cargo run --release --example asymptotics

use henon::asymptotics::{blowup_table, default_p_to_1, default_p_to_critical, scaling_law, verify_p_to_1};
use henon::radial::RadialOptions;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let opts = RadialOptions::default();
    let law = scaling_law(3, 1.0, &[0.5, 1.0, 2.0, 4.0])?;
    for r in &law.rows {
        println!("R = {:4}: λ_R = {:14.8}, λ_R R^3 = {:.12}", r.radius, r.lambda, r.scaled_prufer);
    }
    let one = verify_p_to_1(3, 1.0, &default_p_to_1(), &opts)?;
    println!("\nλ_1 = {:.10}", one.lambda_1);
    for r in &one.rows {
        println!("p = {:6}: ‖u‖^(p-1) = {:.8}, relative deviation {:.3e}", r.p, r.sup_pow, r.deviation);
    }
    println!("extrapolated to p = 1: {:.8} (error {:.1e})", one.extrapolated, one.extrapolation_error);
    let blow = blowup_table(3, 1.0, &default_p_to_critical(3, 1.0)?, &opts)?;
    println!();
    for r in &blow.rows {
        println!(
            "p = {:5}: ‖u‖∞ = {:12.4}, sup |ũ - U| on [0,5] = {:.3e}, ũ ≤ U: {}",
            r.p, r.sup_norm, r.window_distance, r.bound_holds
        );
    }
    Ok(())
}
