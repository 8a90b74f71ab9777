//! Values recorded after the first full computation, guarding against
//! silent drift in the numerics.

use henon::radial::RadialOptions;
use henon::scan::{find_degeneracy_points, scan};

/// Degeneracy point of N = 3, α = 1 from the 101- and 201-point scans.
const P_BAR_3_1: f64 = 2.0486077774;

#[test]
fn degeneracy_point_baseline() {
    let opts = RadialOptions::default();
    let res = scan(3, 1.0, &[1.9, 2.0, 2.1, 2.2], 2, &opts).unwrap();
    let d = find_degeneracy_points(&res, 1e-10, &opts).unwrap();
    assert_eq!(d.changing_count(), 1);
    let pt = &d.points[0];
    assert_eq!((pt.morse_below, pt.morse_above), (1, 4));
    assert!((pt.p_bar - P_BAR_3_1).abs() < 1e-9, "{}", pt.p_bar);
    assert!((pt.lambda_11_at_root - 1.0).abs() < 1e-10);
}

#[test]
fn other_instance_has_one_changing_point() {
    // N = 4, α = 1/2: p_α = 4.5
    let opts = RadialOptions::default();
    let grid = henon::scan::default_grid(4, 0.5, 21, 1e-2).unwrap();
    let res = scan(4, 0.5, &grid, 2, &opts).unwrap();
    assert!(res.failures.is_empty());
    assert_eq!(res.rows.first().unwrap().morse_index, 1);
    assert_eq!(res.rows.last().unwrap().morse_index, 5);
    let d = find_degeneracy_points(&res, 1e-8, &opts).unwrap();
    assert_eq!(d.changing_count() % 2, 1);
}
