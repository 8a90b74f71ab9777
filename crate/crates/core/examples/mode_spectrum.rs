//! Eigenvalues Λ_{i,k} of the linearization around u_p, per spherical
//! harmonic degree k, and the resulting Morse index.
//!
//!     cargo run --release --example mode_spectrum -- 3.0

use henon::params::HenonParams;
use henon::radial::{solve_radial, RadialOptions};
use henon::spectral::{morse_index, multiplicity, solve_mode_spectrum, ModeProblem};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(3.0);
    let params = HenonParams::subcritical(3, 1.0, p)?;
    let profile = solve_radial(&params, &RadialOptions::default())?;
    for k in 0..=3 {
        let spec = solve_mode_spectrum(&ModeProblem::new(&profile, k)?, 3)?;
        let vals: Vec<String> = spec.eigenvalues.iter().map(|v| format!("{v:.8}")).collect();
        println!("k = {k} (multiplicity {}): {}", multiplicity(k, 3), vals.join("  "));
    }
    println!("1/p = {:.8}", 1.0 / p);
    let m = morse_index(&profile, 2)?;
    println!("Morse index {} (Λ_11 = {:.8})", m.morse_index, m.lambda_11);
    Ok(())
}
