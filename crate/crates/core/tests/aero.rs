use proptest::prelude::*;
use tailsitter::aero::*;
use tailsitter::Error;

const MASS: f64 = 4.5;
const RHO: f64 = 1.225;

/// Minimum of `P = W·V·(a/cl + b·cl)` over unconstrained `cl` sits at
/// `cl = √(3·cd0·π·e·AR)`.
fn min_power_oracle(a: &AirframeAero, mass: f64, rho: f64) -> f64 {
    let cl = (3.0 * a.cd0() * std::f64::consts::PI * a.oswald * a.aspect_ratio).sqrt();
    (2.0 * mass * 9.81 / (rho * a.wing_area * cl)).sqrt()
}

#[test]
fn induced_drag_at_cl_half() {
    let a = AirframeAero::default();
    let cd = a.drag_coefficient(0.5).unwrap();
    assert!((cd - a.cd0() - 0.0208).abs() < 5e-5, "{}", cd - a.cd0());
    assert!(matches!(a.drag_coefficient(1.5), Err(Error::BeyondStallClamp { .. })));
}

#[test]
fn minimum_power_speed_matches_closed_form() {
    let a = AirframeAero::default();
    let v = a.min_power_speed(MASS, RHO, 40.0, 1e-6).unwrap();
    let oracle = min_power_oracle(&a, MASS, RHO).max(a.stall_speed(MASS, RHO));
    assert!((v - oracle).abs() < 0.1, "{v} vs {oracle}");
}

#[test]
fn cruise_power_is_plausible() {
    let p = AirframeAero::default().required_power(21.5, MASS, RHO).unwrap();
    assert!((70.0..=280.0).contains(&p), "{p}");
}

#[test]
fn below_stall_is_an_error() {
    let a = AirframeAero::default();
    let vs = a.stall_speed(MASS, RHO);
    assert!(matches!(a.level_flight(0.9 * vs, MASS, RHO), Err(Error::BelowStallSpeed { .. })));
    assert!(a.level_flight(1.01 * vs, MASS, RHO).is_ok());
}

#[test]
fn power_curve_skips_stalled_points() {
    let a = AirframeAero::default();
    let pts = power_curve(&a, &[5.0, 12.0, 20.0], MASS, RHO).unwrap();
    assert_eq!(pts.len(), 2);
    assert!(power_curve_csv(&pts).starts_with("V,cl,cd,P\n"));
}

#[test]
fn invalid_airframe_rejected() {
    let a = AirframeAero { wing_area: 0.0, ..AirframeAero::default() };
    assert!(a.validate().is_err());
}

proptest! {
    #[test]
    fn min_power_speed_scales_with_root_mass(s in 1.2f64..4.0) {
        let a = AirframeAero::default();
        let v1 = a.min_power_speed(MASS, RHO, 80.0, 1e-8).unwrap();
        let v2 = a.min_power_speed(MASS * s, RHO, 80.0, 1e-8).unwrap();
        prop_assert!((v2 / v1 - s.sqrt()).abs() < 1e-4);
    }

    #[test]
    fn power_rises_past_the_minimum(dv1 in 0.5f64..10.0, dv2 in 0.5f64..10.0) {
        let a = AirframeAero::default();
        let vmp = a.min_power_speed(MASS, RHO, 60.0, 1e-8).unwrap();
        let p1 = a.required_power(vmp + dv1, MASS, RHO).unwrap();
        let p2 = a.required_power(vmp + dv1 + dv2, MASS, RHO).unwrap();
        prop_assert!(p2 > p1);
    }
}
