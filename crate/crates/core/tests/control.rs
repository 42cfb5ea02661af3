use proptest::prelude::*;
use tailsitter::control::*;
use tailsitter::Error;

fn identity_model() -> RateModel {
    let zero = AxisCoefficients {
        offset: 0.0,
        delta_x: 0.0,
        delta_y: 0.0,
        p: 0.0,
        q: 0.0,
    };
    RateModel {
        roll: AxisCoefficients { delta_x: 1.0, ..zero },
        pitch: AxisCoefficients { delta_y: 1.0, ..zero },
        k_c: 0.0,
        k_p: 1.0,
        k_q: 1.0,
    }
}

fn g_inv_times(m: &RateModel, v: [f64; 2]) -> (f64, f64) {
    // closed-form inverse written out independently of the library
    let (a, b, c, d) = (m.roll.delta_x, m.roll.delta_y, m.pitch.delta_x, m.pitch.delta_y);
    let det = a * d - b * c;
    ((d * v[0] - b * v[1]) / det, (-c * v[0] + a * v[1]) / det)
}

#[test]
fn zero_inputs_zero_output() {
    assert_eq!(rate_control(0.0, 0.0, 0.0, 0.0, &RateModel::identified()).unwrap(), (0.0, 0.0));
}

#[test]
fn decoupled_proportional_with_identity_effectiveness() {
    let m = identity_model();
    assert_eq!(rate_control(0.3, -0.7, 5.0, -2.0, &m).unwrap(), (0.3, -0.7));
}

#[test]
fn reference_compensation_of_roll_rate() {
    let m = RateModel::identified();
    let (dx, dy) = rate_control(0.0, 0.0, 1.0, 0.0, &m).unwrap();
    let (ex, ey) = g_inv_times(&m, [0.0, -0.5 * 7.4479]);
    assert!((dx - ex).abs() < 1e-9 * ex.abs().max(1.0));
    assert!((dy - ey).abs() < 1e-9 * ey.abs().max(1.0));
    // the commanded increment cancels half the predicted q̇ from p = 1
    let (pd, qd) = m.accelerations(dx, dy, 0.0, 0.0, false);
    assert!(pd.abs() < 1e-9);
    assert!((qd + 0.5 * 7.4479).abs() < 1e-9);
}

#[test]
fn singular_effectiveness_is_an_error() {
    let mut m = RateModel::identified();
    m.pitch.delta_x = 2.0 * m.roll.delta_x;
    m.pitch.delta_y = 2.0 * m.roll.delta_y;
    assert!(matches!(rate_control(1.0, 1.0, 0.0, 0.0, &m), Err(Error::SingularMatrix { .. })));
}

#[test]
fn reference_effectiveness_matrix() {
    let g = RateModel::identified().effectiveness();
    assert_eq!(g, [[0.0032, 0.0011], [-0.0044, 0.0073]]);
}

fn cross_rms(k_c: f64) -> f64 {
    ClosedLoopExperiment::new(RateModel::identified().with_blend(k_c))
        .run()
        .unwrap()
        .cross_axis_rms()
}

#[test]
fn more_compensation_means_less_cross_coupling() {
    let (r0, r5, r1) = (cross_rms(0.0), cross_rms(0.5), cross_rms(1.0));
    assert!(r5 < r0 && r1 < r5, "{r0} {r5} {r1}");
}

#[test]
fn additive_compensation_amplifies_cross_coupling() {
    // Feeding the predicted coupling forward with a plus sign is equivalent
    // to compensating with negated cross coefficients.
    let mut flipped = RateModel::identified();
    flipped.roll.q = -flipped.roll.q;
    flipped.pitch.p = -flipped.pitch.p;
    let mut e = ClosedLoopExperiment::new(flipped);
    e.plant = RateModel::identified();
    let plus = e.run().unwrap().cross_axis_rms();
    assert!(plus > cross_rms(0.0));
}

#[test]
fn actuator_lag_and_roll_axis_run() {
    let mut e = ClosedLoopExperiment::new(RateModel::identified());
    e.actuator_lag = 0.02;
    e.axis = tailsitter::body::Axis::Roll;
    let t = e.run().unwrap();
    assert!(t.cross_axis_rms() > 0.0);
    assert!(t.to_csv().starts_with("t,p_cmd,q_cmd,p,q,delta_x,delta_y\n"));
}

#[test]
fn closed_loop_rejects_bad_settings() {
    let mut e = ClosedLoopExperiment::new(RateModel::identified());
    e.rate_hz = 20.0;
    assert!(matches!(e.run(), Err(Error::UnstableFilter { .. })));
    let mut e = ClosedLoopExperiment::new(RateModel::identified());
    e.duration = 0.0;
    assert!(e.run().is_err());
}

proptest! {
    #[test]
    fn mixing_sums_to_zero_and_round_trips(dp in -1.0f64..1.0, dq in -1.0f64..1.0) {
        let m = mix_servos(dp, dq);
        prop_assert!((m.s1 + m.s2 + m.s3).abs() < 1e-12);
        let u = unmix_servos(m.s1, m.s2, m.s3);
        prop_assert!((u.delta_p - dp).abs() < 1e-12);
        prop_assert!((u.delta_q - dq).abs() < 1e-12);
        prop_assert!(u.residual < 1e-12);
    }

    #[test]
    fn mixing_is_linear(
        a in -3.0f64..3.0, b in -3.0f64..3.0,
        p1 in -1.0f64..1.0, q1 in -1.0f64..1.0,
        p2 in -1.0f64..1.0, q2 in -1.0f64..1.0,
    ) {
        let lhs = mix_servos(a * p1 + b * p2, a * q1 + b * q2);
        let (m1, m2) = (mix_servos(p1, q1), mix_servos(p2, q2));
        prop_assert!((lhs.s1 - (a * m1.s1 + b * m2.s1)).abs() < 1e-12);
        prop_assert!((lhs.s2 - (a * m1.s2 + b * m2.s2)).abs() < 1e-12);
        prop_assert!((lhs.s3 - (a * m1.s3 + b * m2.s3)).abs() < 1e-12);
    }

    #[test]
    fn unmix_residual_measures_distance_to_image(s1 in -2.0f64..2.0, s2 in -2.0f64..2.0, s3 in -2.0f64..2.0) {
        // the image is the plane s1 + s2 + s3 = 0 with unit normal (1,1,1)/√3
        let u = unmix_servos(s1, s2, s3);
        let dist = (s1 + s2 + s3).abs() / 3f64.sqrt();
        prop_assert!((u.residual - dist).abs() < 1e-12);
        // remixing gives the orthogonal projection onto the plane
        let m = mix_servos(u.delta_p, u.delta_q);
        let mean = (s1 + s2 + s3) / 3.0;
        prop_assert!((m.s1 - (s1 - mean)).abs() < 1e-12);
        prop_assert!((m.s2 - (s2 - mean)).abs() < 1e-12);
        prop_assert!((m.s3 - (s3 - mean)).abs() < 1e-12);
    }

    #[test]
    fn zero_blend_is_scaled_inverse(pe in -5.0f64..5.0, qe in -5.0f64..5.0, p in -3.0f64..3.0, q in -3.0f64..3.0) {
        let m = RateModel { k_p: 4.0, k_q: 7.0, ..RateModel::identified().with_blend(0.0) };
        let (dx, dy) = rate_control(pe, qe, p, q, &m).unwrap();
        let (ex, ey) = g_inv_times(&m, [4.0 * pe, 7.0 * qe]);
        prop_assert!((dx - ex).abs() <= 1e-9 * ex.abs().max(1.0));
        prop_assert!((dy - ey).abs() <= 1e-9 * ey.abs().max(1.0));
    }

    #[test]
    fn linkage_is_monotone(a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let l = CollectiveLinkage::new(vec![(0.0, -40.0), (0.3, -20.0), (0.55, 2.0), (1.0, 40.0)]).unwrap();
        prop_assume!(a < b);
        prop_assert!(l.pitch_deg(a).unwrap() < l.pitch_deg(b).unwrap());
    }
}
