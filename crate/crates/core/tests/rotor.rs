use proptest::prelude::*;
use tailsitter::rotor::*;
use tailsitter::Error;

fn params(radius: f64, spring: f64) -> RotorParams {
    let blade_mass = 0.06;
    RotorParams {
        radius,
        blade_mass,
        flap_inertia: blade_mass * radius * radius / 3.0,
        hinge_spring: spring,
        ..RotorParams::default()
    }
}

#[test]
fn lock_number_reference_value() {
    // ρ·clα·c·R⁴/I with I = mR²/3: 1.225·5.7·0.05·0.0625/0.005
    let g = lock_number(&RotorParams::default()).unwrap();
    assert!((g - 1.225 * 5.7 * 0.05 * 0.0625 / 0.005).abs() < 1e-12);
}

#[test]
fn long_horizon_matches_steady_state() {
    let cases = [
        (0.5, 0.0, 1500.0, 5.0),
        (0.5, 2.0, 1500.0, 8.0),
        (0.5, 25.0, 1200.0, -6.0),
        (0.4, 60.0, 1800.0, 12.0),
        (0.6, 0.0, 900.0, 3.0),
    ];
    for (radius, spring, rpm, coll_deg) in cases {
        let p = RotorParams {
            rpm_nominal: rpm,
            ..params(radius, spring)
        };
        let omega = p.omega_nominal();
        let theta = f64::to_radians(coll_deg);
        let expected = steady_flap_angle(&p, omega, theta).unwrap();
        let cmd = CyclicCommand::new(0.0, 0.0, theta);
        let dt = 0.05 / omega;
        let steps = (5.0 / dt) as usize;
        let traj = integrate_flap(FlapState::at_rest(omega).unwrap(), &p, &cmd, dt, steps).unwrap();
        let last = traj.last().unwrap().state;
        assert!(
            (last.beta - expected).abs() < 1e-6,
            "R={radius} K={spring}: {} vs {expected}",
            last.beta
        );
    }
}

#[test]
fn steady_state_oracle_is_independent() {
    // β_ss = (γ/8)ω²θ/(ω²+K/I), evaluated from raw parameters
    let p = params(0.5, 25.0);
    let omega = 157.0;
    let gamma = p.air_density * p.lift_slope * p.mean_chord * p.radius.powi(4) / p.flap_inertia;
    let expected = gamma / 8.0 * omega * omega * 0.1 / (omega * omega + 25.0 / p.flap_inertia);
    assert!((steady_flap_angle(&p, omega, 0.1).unwrap() - expected).abs() < 1e-15);
}

#[test]
fn resolution_guard() {
    let p = RotorParams::default();
    let omega = p.omega_nominal();
    let s = FlapState::at_rest(omega).unwrap();
    let r = integrate_flap(s, &p, &CyclicCommand::default(), 0.2 / omega, 10);
    assert!(matches!(r, Err(Error::StepTooLarge { .. })));
    assert!(integrate_flap(s, &p, &CyclicCommand::default(), 0.19 / omega, 10).is_ok());
}

#[test]
fn zero_rotor_speed_rejected() {
    let s = FlapState::at_rest(0.0).unwrap();
    assert!(flap_acceleration(&s, &RotorParams::default(), 0.1).is_err());
    assert!(FlapState::new(0.0, 0.0, 0.0, -1.0).is_err());
}

#[test]
fn collective_clamped_to_forty_degrees() {
    let c = CyclicCommand::new(0.0, 0.0, f64::to_radians(60.0)).saturated(1.0);
    assert!((c.collective - f64::to_radians(40.0)).abs() < 1e-15);
    let c = CyclicCommand::new(0.0, 0.0, f64::to_radians(-55.0)).saturated(1.0);
    assert!((c.collective + f64::to_radians(40.0)).abs() < 1e-15);
    let p = RotorParams::default();
    let s = FlapState::at_rest(p.omega_nominal()).unwrap();
    let traj = integrate_flap(s, &p, &CyclicCommand::new(0.0, 0.0, 1.2), 1e-4, 3).unwrap();
    assert!(traj.iter().all(|x| (x.theta - COLLECTIVE_LIMIT).abs() < 1e-15));
}

#[test]
fn cyclic_command_saturates_at_limit() {
    let c = CyclicCommand::new(2.0, -3.0, 0.1).saturated(1.0);
    assert_eq!((c.delta_p, c.delta_q, c.collective), (1.0, -1.0, 0.1));
}

#[test]
fn feathering_follows_cyclic_phase() {
    let cmd = CyclicCommand::new(0.2, 0.1, 0.05);
    for psi in [0.0, 0.7, 2.0, 4.5] {
        let expected = 0.05 + 0.2 * f64::sin(psi) + 0.1 * f64::cos(psi);
        assert!((feathering_angle(&cmd, psi) - expected).abs() < 1e-15);
    }
}

#[test]
fn trajectory_csv_has_header_and_rows() {
    let p = RotorParams::default();
    let s = FlapState::at_rest(p.omega_nominal()).unwrap();
    let traj = integrate_flap(s, &p, &CyclicCommand::new(0.0, 0.01, 0.0), 1e-4, 5).unwrap();
    let csv = flap_trajectory_csv(&traj);
    assert!(csv.starts_with("t,psi,beta,beta_dot,theta\n"));
    assert_eq!(csv.lines().count(), 7);
}

proptest! {
    #[test]
    fn lock_number_scales_with_fourth_power(radius in 0.2f64..1.5, s in 0.3f64..3.0) {
        let mut a = params(radius, 2.0);
        a.flap_inertia = 0.004;
        let mut b = a;
        b.radius = radius * s;
        let ratio = lock_number(&b).unwrap() / lock_number(&a).unwrap();
        prop_assert!((ratio / s.powi(4) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn natural_frequency_at_least_rotor_speed(omega in 1.0f64..300.0, spring in 0.0f64..100.0) {
        let p = params(0.5, spring);
        let nu = p.flap_natural_frequency(omega);
        prop_assert!(nu >= omega);
        prop_assert_eq!(nu == omega, spring == 0.0);
    }

    #[test]
    fn homogeneous_flap_energy_never_grows(
        beta in -0.3f64..0.3,
        beta_dot in -20.0f64..20.0,
        psi in 0.0f64..std::f64::consts::TAU,
        spring in 0.0f64..50.0,
        rpm in 600.0f64..2000.0,
    ) {
        let p = RotorParams { rpm_nominal: rpm, ..params(0.5, spring) };
        let omega = p.omega_nominal();
        let s = FlapState::new(beta, beta_dot, psi, omega).unwrap();
        let traj = integrate_flap(s, &p, &CyclicCommand::default(), 0.1 / omega, 400).unwrap();
        for w in traj.windows(2) {
            let e0 = w[0].state.energy(&p);
            let e1 = w[1].state.energy(&p);
            prop_assert!(e1 <= e0 + 1e-9, "{e1} > {e0}");
        }
    }

    #[test]
    fn azimuth_advances_uniformly(rpm in 300.0f64..2000.0, steps in 1usize..200) {
        let p = RotorParams { rpm_nominal: rpm, ..RotorParams::default() };
        let omega = p.omega_nominal();
        let dt = 0.05 / omega;
        let traj = integrate_flap(FlapState::at_rest(omega).unwrap(), &p, &CyclicCommand::default(), dt, steps).unwrap();
        let psi = traj.last().unwrap().state.psi;
        prop_assert!((psi - wrap_azimuth(omega * dt * steps as f64)).abs() < 1e-9);
    }
}
