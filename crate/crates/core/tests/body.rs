use std::f64::consts::FRAC_PI_2;

use nalgebra::Vector3;
use tailsitter::body::*;
use tailsitter::rotor::{CyclicCommand, RotorParams};
use tailsitter::Error;

fn model(ixx: f64, iyy: f64) -> CoupledModel {
    CoupledModel::new(
        RotorParams::default(),
        BodyParams {
            ixx,
            iyy,
            ..BodyParams::default()
        },
    )
}

#[test]
fn zero_amplitude_gives_zero_rates() {
    let m = model(0.05, 0.25);
    let mut d = Doublet::new(Axis::Pitch, 0.0, 0.5);
    d.settle = 0.2;
    let trace = doublet_response(&m, &d).unwrap();
    assert!(trace.samples.iter().all(|s| s.p == 0.0 && s.q == 0.0 && s.r == 0.0));
}

#[test]
fn rotating_the_frame_by_ninety_degrees_mirrors_the_response() {
    // Relabelling x' = y, y' = -x maps Ixx<->Iyy, p' = q, q' = -p, shifts the
    // blade azimuth by +90° and turns a pitch cyclic A into a roll cyclic A.
    let (a, b) = (0.07, 0.21);
    let psi0 = 0.3;
    let mut pitch = Doublet::new(Axis::Pitch, 0.01, 0.6);
    pitch.settle = 0.2;
    pitch.initial_azimuth = psi0;
    let mut roll = pitch;
    roll.axis = Axis::Roll;
    roll.initial_azimuth = psi0 + FRAC_PI_2;
    let t1 = doublet_response(&model(a, b), &pitch).unwrap();
    let t2 = doublet_response(&model(b, a), &roll).unwrap();
    let scale = t1.peak_abs_q();
    for (s1, s2) in t1.samples.iter().zip(&t2.samples) {
        assert!((s2.p - s1.q).abs() < 1e-9 * scale, "t={} {} vs {}", s1.t, s2.p, s1.q);
        assert!((s2.q + s1.p).abs() < 1e-9 * scale, "t={} {} vs {}", s1.t, s2.q, -s1.p);
    }
}

#[test]
fn asymmetric_body_couples_into_roll() {
    let mut d = Doublet::new(Axis::Pitch, 0.01, 2.0);
    d.settle = 1.0;
    let asym = doublet_response(&model(0.05, 0.25), &d).unwrap();
    let sym = doublet_response(&model(0.25, 0.25), &d).unwrap();
    assert!(asym.peak_abs_p() > 0.0);
    assert!(asym.peak_abs_p() >= 2.0 * sym.peak_abs_p());
}

#[test]
fn torque_free_body_conserves_kinetic_energy() {
    let mut m = model(0.05, 0.25);
    m.rotor.hinge_spring = 0.0;
    m.body.rotor_offset_z = 0.0;
    let dt = 2.5e-4;
    let mut s = m.initial_state(0.0);
    s.rates = Vector3::new(0.4, -0.3, 0.2);
    let e0 = m.body.kinetic_energy(&s.rates);
    let cmd = CyclicCommand::new(0.02, -0.01, 0.05);
    for _ in 0..(10.0 / dt) as usize {
        s = m.step(&s, &cmd, dt).unwrap();
    }
    let e1 = m.body.kinetic_energy(&s.rates);
    assert!(((e1 - e0) / e0).abs() < 1e-6, "{e0} -> {e1}");
    assert!((s.attitude.quaternion().norm() - 1.0).abs() < 1e-9);
}

#[test]
fn attitude_stays_unit_and_run_is_bitwise_deterministic() {
    let m = model(0.05, 0.25);
    let mut d = Doublet::new(Axis::Roll, 0.02, 1.0);
    d.settle = 0.5;
    let (t1, s1) = run_doublet(&m, &d).unwrap();
    let (t2, s2) = run_doublet(&m, &d).unwrap();
    assert_eq!(t1, t2);
    assert_eq!(s1, s2);
    assert!((s1.attitude.quaternion().norm() - 1.0).abs() < 1e-9);
}

#[test]
fn richardson_order_of_coupled_integrator() {
    let m = model(0.05, 0.25);
    let run = |dt: f64| {
        let mut d = Doublet::new(Axis::Pitch, 0.01, 2.0);
        d.dt = dt;
        run_doublet(&m, &d).unwrap().1.to_vec()
    };
    let (a, b, c) = (run(1e-3), run(5e-4), run(2.5e-4));
    let diff = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
    let order = (diff(&a, &b) / diff(&b, &c)).log2();
    assert!(order >= 3.5, "observed order {order}");
}

#[test]
fn coarse_step_rejected() {
    let m = model(0.05, 0.25);
    let mut d = Doublet::new(Axis::Pitch, 0.01, 0.1);
    d.dt = 0.002;
    assert!(matches!(doublet_response(&m, &d), Err(Error::StepTooLarge { .. })));
}

#[test]
fn invalid_body_rejected() {
    let m = model(0.0, 0.25);
    let d = Doublet::new(Axis::Pitch, 0.01, 0.1);
    assert!(doublet_response(&m, &d).is_err());
}

#[test]
fn rate_trace_csv() {
    let m = model(0.05, 0.25);
    let d = Doublet::new(Axis::Pitch, 0.01, 0.01);
    let csv = doublet_response(&m, &d).unwrap().to_csv();
    assert!(csv.starts_with("t,p,q,r,delta_p,delta_q\n"));
}
