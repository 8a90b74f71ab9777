//! Invariants over random subcritical instances.

use henon::params::HenonParams;
use henon::radial::{solve_radial, RadialOptions};
use henon::spectral::{morse_index, solve_mode_spectrum, ModeProblem};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn radial_profile_invariants(n in 3usize..7, alpha in 0.1f64..1.0, frac in 0.02f64..0.98) {
        let pa = henon::params::critical_exponent(n, alpha).unwrap();
        let p = 1.0 + frac * (pa - 1.0);
        let params = HenonParams::subcritical(n, alpha, p).unwrap();
        let prof = solve_radial(&params, &RadialOptions::default()).unwrap();
        // positive, decreasing, zero at r = 1, max 1 at the origin
        prop_assert_eq!(prof.shape[0], 1.0);
        // (non-strict near the origin, where 1 - c r^{2+α} rounds to 1)
        prop_assert!(prof.shape.windows(2).all(|w| w[1] < w[0] || (w[1] == w[0] && w[0] == 1.0)));
        prop_assert!(prof.shape.last().unwrap().abs() < 1e-12);
        // ‖u‖^{p-1} = R_0^{2+α}
        let lhs = (p - 1.0) * prof.log_sup_norm;
        prop_assert!((lhs - (2.0 + alpha) * prof.first_zero.ln()).abs() < 1e-10 * lhs.abs().max(1.0));
        // Λ_{1,0} = 1/p
        let spec = solve_mode_spectrum(&ModeProblem::new(&prof, 0).unwrap(), 1).unwrap();
        prop_assert!((spec.eigenvalues[0] * p - 1.0).abs() < 1e-8);
        // the Morse index takes one of the two values and agrees with the shortcut
        let m = morse_index(&prof, 2).unwrap();
        prop_assert!(m.morse_index == 1 || m.morse_index == n as u64 + 1);
        prop_assert_eq!(m.morse_index, m.morse_index_shortcut);
    }
}
