use proptest::prelude::*;
use tailsitter::energy::*;

fn mission() -> MissionProfile {
    build_mission_profile(23.0, 12.0, 1.0).unwrap()
}

#[test]
fn reference_mission_profile() {
    let m = mission();
    assert_eq!(m.segments.len(), 7);
    assert!((m.duration() - 65.0 * 60.0).abs() < 1e-9);
    assert!((m.charge_ah() - 13.18).abs() < 0.01);
    assert!(build_mission_profile(-1.0, 12.0, 1.0).is_err());
}

#[test]
fn zero_load_keeps_full_charge() {
    let p = build_mission_profile(0.0, 0.0, 0.0).unwrap();
    let b = BatteryModel::lipo_reference();
    let r = simulate_discharge(&b, &p, 1.0).unwrap();
    assert!(r.completed());
    assert_eq!(r.final_soc, 1.0);
    assert!(r.samples.iter().all(|s| (s.volts - 6.0 * b.ocv(1.0)).abs() < 1e-12));
}

#[test]
fn lipo_completes_li_ion_fails_on_final_landing() {
    let lipo = simulate_discharge(&BatteryModel::lipo_reference(), &mission(), 1.0).unwrap();
    assert!(lipo.completed());
    assert!(lipo.final_soc > 0.0);
    let li = simulate_discharge(&BatteryModel::li_ion_reference(), &mission(), 1.0).unwrap();
    let f = li.failure.expect("li-ion pack should sag below cutoff");
    assert_eq!(f.segment, 6);
    assert_eq!(f.label, "landing");
    assert!(f.t > 64.0 * 60.0 - 1e-9 && f.t <= 65.0 * 60.0);
}

#[test]
fn li_ion_stores_more_energy_at_low_rate() {
    let ratio = BatteryModel::li_ion_reference().slow_discharge_energy()
        / BatteryModel::lipo_reference().slow_discharge_energy();
    assert!((ratio - 1.22).abs() <= 0.05 * 1.22, "{ratio}");
}

#[test]
fn energy_is_conserved() {
    for b in [BatteryModel::lipo_reference(), BatteryModel::li_ion_reference()] {
        let r = simulate_discharge(&b, &mission(), 1.0).unwrap();
        assert!(r.energy.relative_error() < 1e-3);
    }
}

#[test]
fn soc_never_increases() {
    let r = simulate_discharge(&BatteryModel::lipo_reference(), &mission(), 0.5).unwrap();
    assert!(r.samples.windows(2).all(|w| w[1].soc <= w[0].soc));
    assert!(r.to_csv().starts_with("t,soc,volts,amps,watts\n"));
}

#[test]
fn invalid_battery_rejected() {
    let mut b = BatteryModel::lipo_reference();
    b.ocv_curve = vec![(0.0, 3.0), (0.5, 2.9), (1.0, 4.2)];
    assert!(b.validate().is_err());
    let mut b = BatteryModel::lipo_reference();
    b.capacity = 0.0;
    assert!(simulate_discharge(&b, &mission(), 1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn higher_resistance_lowers_terminal_voltage(soc in 0.0f64..1.0, amps in 0.1f64..50.0, dr in 0.001f64..0.05) {
        let a = BatteryModel::lipo_reference();
        let b = BatteryModel { internal_resistance: a.internal_resistance + dr, ..a.clone() };
        prop_assert!(b.terminal_voltage(soc, amps) < a.terminal_voltage(soc, amps));
    }

    #[test]
    fn completion_is_monotone_in_capacity(c in 10.0f64..30.0, extra in 0.1f64..10.0) {
        let small = BatteryModel { capacity: c, ..BatteryModel::li_ion_reference() };
        let big = BatteryModel { capacity: c + extra, ..small.clone() };
        let rs = simulate_discharge(&small, &mission(), 2.0).unwrap();
        let rb = simulate_discharge(&big, &mission(), 2.0).unwrap();
        prop_assert!(!rs.completed() || rb.completed());
        prop_assert!(rb.min_voltage() >= rs.min_voltage() - 1e-12);
    }
}
