//! Servo mixing, the collective linkage map and the decoupling rate
//! controller built on the identified linear rate model.
//!
//! Throughout, the cyclic commands `(δx, δy)` of the rate model are the same
//! quantities as the roll and pitch cyclic `(δp, δq)` used by the mixer.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt::Write as _;

use crate::ode::Rk4;
use crate::sysid::SecondOrderLowPass;
use crate::{Error, Result};

/// Smallest accepted `|det G|`.
pub const DET_GUARD: f64 = 1e-12;
/// Default controller rate, Hz.
pub const CONTROL_RATE_HZ: f64 = 512.0;
/// Default rate-feedback filter cutoff, rad/s.
pub const FEEDBACK_CUTOFF: f64 = 25.0;

/// Commands for the three swashplate servos.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServoCommands {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

pub fn mix_servos(delta_p: f64, delta_q: f64) -> ServoCommands {
    ServoCommands {
        s1: FRAC_1_SQRT_2 * delta_p - 0.5 * delta_q,
        s2: -FRAC_1_SQRT_2 * delta_p - 0.5 * delta_q,
        s3: delta_q,
    }
}

/// Least-squares inverse of [`mix_servos`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unmixed {
    pub delta_p: f64,
    pub delta_q: f64,
    /// Distance of the servo triple from the mixing image. Zero when the
    /// triple was produced by the mixer.
    pub residual: f64,
}

impl Unmixed {
    pub fn is_consistent(&self, tol: f64) -> bool {
        self.residual <= tol
    }
}

/// The mixing image is the plane `s1 + s2 + s3 = 0` and its columns are
/// orthogonal, so the least-squares inverse is a pair of projections.
pub fn unmix_servos(s1: f64, s2: f64, s3: f64) -> Unmixed {
    Unmixed {
        delta_p: FRAC_1_SQRT_2 * (s1 - s2),
        delta_q: (s3 - 0.5 * (s1 + s2)) / 1.5,
        residual: (s1 + s2 + s3).abs() / 3f64.sqrt(),
    }
}

/// Monotone piecewise-linear map from normalised servo command to collective
/// pitch. The default is a linear placeholder spanning ±40° over `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectiveLinkage {
    /// `(command, pitch in degrees)` knots, strictly increasing in both.
    knots: Vec<(f64, f64)>,
}

impl Default for CollectiveLinkage {
    fn default() -> Self {
        Self {
            knots: vec![(0.0, -40.0), (1.0, 40.0)],
        }
    }
}

impl CollectiveLinkage {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidParams("linkage table needs at least 2 knots".into()));
        }
        if knots.iter().any(|(c, d)| !c.is_finite() || !d.is_finite()) {
            return Err(Error::InvalidParams("linkage table has non-finite entries".into()));
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0 || w[1].1 <= w[0].1) {
            return Err(Error::InvalidParams(
                "linkage table must be strictly increasing in command and pitch".into(),
            ));
        }
        Ok(Self { knots })
    }

    pub fn command_range(&self) -> (f64, f64) {
        (self.knots[0].0, self.knots[self.knots.len() - 1].0)
    }

    /// Collective pitch in degrees for a servo command.
    pub fn pitch_deg(&self, cmd: f64) -> Result<f64> {
        let (min, max) = self.command_range();
        if !(cmd >= min && cmd <= max) {
            return Err(Error::OutOfRange {
                what: "collective servo command",
                value: cmd,
                min,
                max,
            });
        }
        let i = self
            .knots
            .windows(2)
            .position(|w| cmd <= w[1].0)
            .unwrap_or(self.knots.len() - 2);
        let ((c0, d0), (c1, d1)) = (self.knots[i], self.knots[i + 1]);
        Ok(d0 + (d1 - d0) * (cmd - c0) / (c1 - c0))
    }

    /// Collective pitch in radians.
    pub fn pitch(&self, cmd: f64) -> Result<f64> {
        self.pitch_deg(cmd).map(f64::to_radians)
    }
}

/// Coefficients of one axis of the rate model,
/// `ω̇ = offset + delta_x·δx + delta_y·δy + p·p + q·q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisCoefficients {
    pub offset: f64,
    pub delta_x: f64,
    pub delta_y: f64,
    pub p: f64,
    pub q: f64,
}

impl AxisCoefficients {
    pub fn eval(&self, delta_x: f64, delta_y: f64, p: f64, q: f64, with_offset: bool) -> f64 {
        let base = if with_offset { self.offset } else { 0.0 };
        base + self.delta_x * delta_x + self.delta_y * delta_y + self.p * p + self.q * q
    }
}

/// Identified linear rate model plus the controller gains that act on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateModel {
    /// Roll acceleration `ṗ`.
    pub roll: AxisCoefficients,
    /// Pitch acceleration `q̇`.
    pub pitch: AxisCoefficients,
    /// Blend factor of the cross-coupling compensation.
    pub k_c: f64,
    /// Proportional roll-rate gain, 1/s.
    pub k_p: f64,
    /// Proportional pitch-rate gain, 1/s.
    pub k_q: f64,
}

impl Default for RateModel {
    fn default() -> Self {
        Self::identified()
    }
}

impl RateModel {
    /// The coefficients identified on the flight vehicle, with `K_c = 0.5`
    /// and feedback gains of 10 1/s.
    pub fn identified() -> Self {
        Self {
            roll: AxisCoefficients {
                offset: -2.4661,
                delta_x: 0.0032,
                delta_y: 0.0011,
                p: -0.5703,
                q: -3.4308,
            },
            pitch: AxisCoefficients {
                offset: -2.8847,
                delta_x: -0.0044,
                delta_y: 0.0073,
                p: 7.4479,
                q: -3.4487,
            },
            k_c: 0.5,
            k_p: 10.0,
            k_q: 10.0,
        }
    }

    pub fn with_blend(mut self, k_c: f64) -> Self {
        self.k_c = k_c;
        self
    }

    /// Control effectiveness `G = [[C_δx_ṗ, C_δy_ṗ], [C_δx_q̇, C_δy_q̇]]`.
    pub fn effectiveness(&self) -> [[f64; 2]; 2] {
        [
            [self.roll.delta_x, self.roll.delta_y],
            [self.pitch.delta_x, self.pitch.delta_y],
        ]
    }

    pub fn effectiveness_inverse(&self) -> Result<[[f64; 2]; 2]> {
        let [[a, b], [c, d]] = self.effectiveness();
        let det = a * d - b * c;
        if !(det.abs() > DET_GUARD) {
            return Err(Error::SingularMatrix { det });
        }
        Ok([[d / det, -b / det], [-c / det, a / det]])
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.roll.offset,
            self.roll.delta_x,
            self.roll.delta_y,
            self.roll.p,
            self.roll.q,
            self.pitch.offset,
            self.pitch.delta_x,
            self.pitch.delta_y,
            self.pitch.p,
            self.pitch.q,
            self.k_p,
            self.k_q,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("rate model has non-finite entries".into()));
        }
        if !(0.0..=1.0).contains(&self.k_c) {
            return Err(Error::OutOfRange {
                what: "K_c",
                value: self.k_c,
                min: 0.0,
                max: 1.0,
            });
        }
        self.effectiveness_inverse().map(|_| ())
    }

    /// Angular accelerations `(ṗ, q̇)` predicted by the model.
    pub fn accelerations(&self, delta_x: f64, delta_y: f64, p: f64, q: f64, with_offset: bool) -> (f64, f64) {
        (
            self.roll.eval(delta_x, delta_y, p, q, with_offset),
            self.pitch.eval(delta_x, delta_y, p, q, with_offset),
        )
    }

    /// Cyclic command producing the desired accelerations `(ṗ, q̇)` at the
    /// given rates, `δ = G⁻¹(a − C_O − C_p·p − C_q·q)`.
    pub fn invert(&self, p_dot: f64, q_dot: f64, p: f64, q: f64, with_offset: bool) -> Result<(f64, f64)> {
        let g = self.effectiveness_inverse()?;
        let (free_p, free_q) = self.accelerations(0.0, 0.0, p, q, with_offset);
        let (vx, vy) = (p_dot - free_p, q_dot - free_q);
        Ok((g[0][0] * vx + g[0][1] * vy, g[1][0] * vx + g[1][1] * vy))
    }
}

/// Decoupling rate law. Proportional rate errors are combined with a
/// fraction `K_c` of the cancellation of the cross-coupling accelerations
/// the model predicts (`C_q_ṗ·q` on roll, `C_p_q̇·p` on pitch) and mapped
/// through `G⁻¹`.
pub fn rate_control(p_err: f64, q_err: f64, p: f64, q: f64, model: &RateModel) -> Result<(f64, f64)> {
    let g = model.effectiveness_inverse()?;
    let v1 = model.k_p * p_err - model.k_c * model.roll.q * q;
    let v2 = model.k_q * q_err - model.k_c * model.pitch.p * p;
    Ok((g[0][0] * v1 + g[0][1] * v2, g[1][0] * v1 + g[1][1] * v2))
}

/// Rate controller with low-pass filtered rate feedback.
#[derive(Debug, Clone)]
pub struct RateController {
    pub model: RateModel,
    filter_p: SecondOrderLowPass,
    filter_q: SecondOrderLowPass,
}

impl RateController {
    pub fn new(model: RateModel, rate_hz: f64, feedback_cutoff: f64) -> Result<Self> {
        model.validate()?;
        if !(rate_hz > 0.0) {
            return Err(Error::InvalidParams(format!("controller rate must be > 0, got {rate_hz}")));
        }
        let dt = 1.0 / rate_hz;
        Ok(Self {
            model,
            filter_p: SecondOrderLowPass::new(feedback_cutoff, dt)?,
            filter_q: SecondOrderLowPass::new(feedback_cutoff, dt)?,
        })
    }

    /// One controller tick: filters the measured rates and returns `(δx, δy)`.
    pub fn update(&mut self, p_cmd: f64, q_cmd: f64, p_meas: f64, q_meas: f64) -> Result<(f64, f64)> {
        let p = self.filter_p.step(p_meas);
        let q = self.filter_q.step(q_meas);
        rate_control(p_cmd - p, q_cmd - q, p, q, &self.model)
    }
}

/// Closed-loop doublet experiment on the linear rate model. The plant is the
/// model itself around trim (no offset term); the commands reach it through
/// an optional first-order actuator lag.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopExperiment {
    /// Model used as the plant.
    pub plant: RateModel,
    /// Model, gains and blend factor used by the controller.
    pub controller: RateModel,
    pub axis: crate::body::Axis,
    /// Doublet rate-command amplitude, rad/s.
    pub amplitude: f64,
    /// Doublet length, s.
    pub duration: f64,
    /// Time after the doublet, s.
    pub settle: f64,
    pub rate_hz: f64,
    pub feedback_cutoff: f64,
    /// Actuator time constant, s. Zero means ideal actuators.
    pub actuator_lag: f64,
}

impl ClosedLoopExperiment {
    pub fn new(controller: RateModel) -> Self {
        Self {
            plant: RateModel::identified(),
            controller,
            axis: crate::body::Axis::Pitch,
            amplitude: 1.0,
            duration: 2.0,
            settle: 2.0,
            rate_hz: CONTROL_RATE_HZ,
            feedback_cutoff: FEEDBACK_CUTOFF,
            actuator_lag: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.plant.effectiveness_inverse()?;
        self.controller.validate()?;
        for (what, v) in [
            ("duration", self.duration),
            ("rate_hz", self.rate_hz),
            ("feedback_cutoff", self.feedback_cutoff),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParams(format!("{what} must be > 0, got {v}")));
            }
        }
        if !(self.settle >= 0.0) || !(self.actuator_lag >= 0.0) || !self.amplitude.is_finite() {
            return Err(Error::InvalidParams(
                "settle and actuator_lag must be >= 0 and amplitude finite".into(),
            ));
        }
        Ok(())
    }

    pub fn run(&self) -> Result<ClosedLoopTrace> {
        self.validate()?;
        let dt = 1.0 / self.rate_hz;
        let half = (0.5 * self.duration * self.rate_hz).round() as usize;
        let total = 2 * half + (self.settle * self.rate_hz).round() as usize;
        let mut ctl = RateController::new(self.controller, self.rate_hz, self.feedback_cutoff)?;
        let plant = self.plant;
        let lag = self.actuator_lag;
        // [p, q, actuator_x, actuator_y]
        let mut y = [0.0; 4];
        let mut rk = Rk4::new(4);
        let mut samples = Vec::with_capacity(total + 1);
        for k in 0..=total {
            let c = if k < half {
                self.amplitude
            } else if k < 2 * half {
                -self.amplitude
            } else {
                0.0
            };
            let (p_cmd, q_cmd) = match self.axis {
                crate::body::Axis::Roll => (c, 0.0),
                crate::body::Axis::Pitch => (0.0, c),
            };
            let (dx, dy) = ctl.update(p_cmd, q_cmd, y[0], y[1])?;
            let t = k as f64 * dt;
            samples.push(ClosedLoopSample {
                t,
                p_cmd,
                q_cmd,
                p: y[0],
                q: y[1],
                delta_x: dx,
                delta_y: dy,
            });
            if k == total {
                break;
            }
            rk.step(
                |_, s, ds| {
                    let (ax, ay) = if lag > 0.0 { (s[2], s[3]) } else { (dx, dy) };
                    let (pd, qd) = plant.accelerations(ax, ay, s[0], s[1], false);
                    ds[0] = pd;
                    ds[1] = qd;
                    if lag > 0.0 {
                        ds[2] = (dx - s[2]) / lag;
                        ds[3] = (dy - s[3]) / lag;
                    } else {
                        ds[2] = 0.0;
                        ds[3] = 0.0;
                    }
                },
                t,
                &mut y,
                dt,
            );
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteState { t: t + dt });
            }
        }
        Ok(ClosedLoopTrace {
            axis: self.axis,
            samples,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedLoopSample {
    pub t: f64,
    pub p_cmd: f64,
    pub q_cmd: f64,
    pub p: f64,
    pub q: f64,
    pub delta_x: f64,
    pub delta_y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopTrace {
    pub axis: crate::body::Axis,
    pub samples: Vec<ClosedLoopSample>,
}

impl ClosedLoopTrace {
    /// RMS of the rate on the axis that was not commanded.
    pub fn cross_axis_rms(&self) -> f64 {
        let axis = self.axis;
        crate::body::rms(self.samples.iter().map(|s| match axis {
            crate::body::Axis::Pitch => s.p,
            crate::body::Axis::Roll => s.q,
        }))
    }

    /// RMS tracking error on the commanded axis.
    pub fn tracking_rms(&self) -> f64 {
        let axis = self.axis;
        crate::body::rms(self.samples.iter().map(|s| match axis {
            crate::body::Axis::Pitch => s.q_cmd - s.q,
            crate::body::Axis::Roll => s.p_cmd - s.p,
        }))
    }

    /// CSV with header `t,p_cmd,q_cmd,p,q,delta_x,delta_y`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,p_cmd,q_cmd,p,q,delta_x,delta_y\n");
        for r in &self.samples {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.t, r.p_cmd, r.q_cmd, r.p, r.q, r.delta_x, r.delta_y
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixing_spot_values() {
        let m = mix_servos(1.0, 0.0);
        let r = 2f64.sqrt() / 2.0;
        assert!((m.s1 - r).abs() < 1e-5 && (m.s2 + r).abs() < 1e-5 && m.s3 == 0.0);
        let m = mix_servos(0.0, 1.0);
        assert_eq!((m.s1, m.s2, m.s3), (-0.5, -0.5, 1.0));
        assert_eq!(mix_servos(0.0, 0.0), ServoCommands { s1: 0.0, s2: 0.0, s3: 0.0 });
    }

    #[test]
    fn unmix_flags_points_off_the_plane() {
        let u = unmix_servos(1.0, 1.0, 0.0);
        assert!((u.residual - 2.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!(!u.is_consistent(1e-9));
        assert!(unmix_servos(0.0, 0.0, 1.0).residual > 0.0);
        assert!(unmix_servos(-0.5, -0.5, 1.0).is_consistent(1e-15));
    }

    #[test]
    fn linkage_default_and_errors() {
        let l = CollectiveLinkage::default();
        assert_eq!(l.pitch_deg(0.5).unwrap(), 0.0);
        assert_eq!(l.pitch_deg(0.0).unwrap(), -40.0);
        assert_eq!(l.pitch_deg(1.0).unwrap(), 40.0);
        assert!(matches!(l.pitch_deg(1.01), Err(Error::OutOfRange { .. })));
        assert!(l.pitch_deg(f64::NAN).is_err());
        assert!(CollectiveLinkage::new(vec![(0.0, 0.0), (0.5, -1.0)]).is_err());
        assert!(CollectiveLinkage::new(vec![(0.0, 0.0)]).is_err());
    }

    #[test]
    fn linkage_table_interpolates() {
        let l = CollectiveLinkage::new(vec![(0.0, -40.0), (0.5, -5.0), (1.0, 40.0)]).unwrap();
        assert!((l.pitch_deg(0.25).unwrap() + 22.5).abs() < 1e-12);
        assert!((l.pitch_deg(0.75).unwrap() - 17.5).abs() < 1e-12);
    }

    #[test]
    fn singular_effectiveness_rejected() {
        let mut m = RateModel::identified();
        m.pitch.delta_x = m.roll.delta_x;
        m.pitch.delta_y = m.roll.delta_y;
        assert!(matches!(rate_control(0.0, 0.0, 0.0, 0.0, &m), Err(Error::SingularMatrix { .. })));
        assert!(RateModel::identified().with_blend(1.5).validate().is_err());
    }

    #[test]
    fn invert_roundtrip() {
        let m = RateModel::identified();
        let (dx, dy) = m.invert(0.3, -1.2, 0.4, -0.1, true).unwrap();
        let (pd, qd) = m.accelerations(dx, dy, 0.4, -0.1, true);
        assert!((pd - 0.3).abs() < 1e-9 && (qd + 1.2).abs() < 1e-9);
    }

    #[test]
    fn closed_loop_tracks_and_is_deterministic() {
        let exp = ClosedLoopExperiment::new(RateModel::identified());
        let a = exp.run().unwrap();
        let b = exp.run().unwrap();
        assert_eq!(a, b);
        let peak_q = a.samples.iter().map(|s| s.q.abs()).fold(0.0, f64::max);
        assert!(peak_q > 0.5 && peak_q < 1.5, "{peak_q}");
        assert!(a.samples.last().unwrap().q.abs() < 1e-2);
    }
}
