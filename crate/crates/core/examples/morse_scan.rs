//! Morse index along (1, p_α) and the exponent where it jumps.
//!
//!     cargo run --release --example morse_scan

use henon::radial::RadialOptions;
use henon::scan::{default_grid, find_degeneracy_points, scan, DEFAULT_REFINE_TOL};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let opts = RadialOptions::default();
    let grid = default_grid(3, 1.0, 41, 1e-2)?;
    let res = scan(3, 1.0, &grid, 2, &opts)?;
    for row in &res.rows {
        println!("p = {:8.5}  Λ_11 = {:10.6}  Morse index {}", row.p, row.lambda_11, row.morse_index);
    }
    let deg = find_degeneracy_points(&res, DEFAULT_REFINE_TOL, &opts)?;
    for d in &deg.points {
        println!("degeneracy at p̄ = {:.10}: {} -> {}", d.p_bar, d.morse_below, d.morse_above);
    }
    Ok(())
}
