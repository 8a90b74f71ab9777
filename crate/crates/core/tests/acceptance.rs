//! Acceptance suite for the default instance N = 3, α = 1: one PASS/FAIL
//! line per criterion, nonzero exit status if any fails.

use henon::acceptance::{Suite, SuiteConfig};

fn main() {
    let _ = env_logger::builder().is_test(true).try_init();
    let mut suite = Suite::new(SuiteConfig::default()).expect("default instance");
    let checks = suite.run(|c| println!("{}  ({:.1} s)", c.line(), c.seconds));
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
