//! The full acceptance suite for N = 3, α = 1, printed as PASS/FAIL lines.
//!
//!     cargo run --release --example reproduce

use henon::acceptance::{Suite, SuiteConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut suite = Suite::new(SuiteConfig::default())?;
    let checks = suite.run(|c| println!("{}", c.line()));
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} of {} checks passed", checks.len() - failed, checks.len());
    Ok(())
}
