//! Rotor and fuselage coupled through the flap hinge.
//!
//! The body frame has x along the roll axis, y along the pitch axis and z
//! along the rotor shaft (thrust direction). The rotor spins about −z; blade
//! `i` points along `r̂ = (−sin ψᵢ, −cos ψᵢ, 0)` so that positive pitch cyclic
//! produces a positive pitch moment and positive roll cyclic a positive roll
//! moment once the blades have responded.
//!
//! Each blade follows the flap equation extended with the hub motion seen in
//! the rotating frame (aerodynamic damping of the shaft rate, gyroscopic and
//! inertial terms). The hub moment on the fuselage is the hinge spring moment
//! plus the moment of the blade lift vector acting at the rotor offset above
//! the centre of gravity; both are proportional to the blade flap angle
//! relative to the shaft. The swash-plate is fixed to the shaft, so the
//! cyclic command follows body rotation without lag unless an actuator time
//! constant is configured.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use nalgebra::{Quaternion, UnitQuaternion, Vector3};

use crate::ode::Rk4;
use crate::rotor::{
    check_resolution, feathering_angle, flap_accel_raw, lock_number, wrap_azimuth, CyclicCommand,
    FlapState, RotorParams,
};
use crate::{Error, Result};

const RATES: usize = 0;
const QUAT: usize = 3;
const BLADES: usize = 7;

/// Fuselage mass properties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyParams {
    /// Roll inertia, kg·m².
    pub ixx: f64,
    /// Pitch inertia, kg·m².
    pub iyy: f64,
    /// Yaw (shaft-axis) inertia, kg·m².
    pub izz: f64,
    /// Total vehicle mass, kg.
    pub mass_total: f64,
    /// Rotor hub height above the centre of gravity, m.
    pub rotor_offset_z: f64,
}

impl Default for BodyParams {
    /// 4.5 kg vehicle with most of its mass spread along the wing span, which
    /// makes the inertia about the pitch axis several times the roll inertia.
    fn default() -> Self {
        Self {
            ixx: 0.05,
            iyy: 0.25,
            izz: 0.27,
            mass_total: 4.5,
            rotor_offset_z: 0.15,
        }
    }
}

impl BodyParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("ixx", self.ixx),
            ("iyy", self.iyy),
            ("izz", self.izz),
            ("mass_total", self.mass_total),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParams(format!("body {name} must be > 0, got {v}")));
            }
        }
        if !self.rotor_offset_z.is_finite() {
            return Err(Error::InvalidParams("body rotor_offset_z is not finite".into()));
        }
        Ok(())
    }

    fn inertia(&self) -> Vector3<f64> {
        Vector3::new(self.ixx, self.iyy, self.izz)
    }

    /// Rotational kinetic energy `½ωᵀIω`.
    pub fn kinetic_energy(&self, rates: &Vector3<f64>) -> f64 {
        0.5 * rates.component_mul(&self.inertia()).dot(rates)
    }
}

/// Rotor, fuselage and the couplings between them.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledModel {
    pub rotor: RotorParams,
    pub body: BodyParams,
    /// Number of blades, equally spaced in azimuth.
    pub blade_count: usize,
    /// Rotor thrust, N. Defaults to hover trim (`m·g`).
    pub thrust: f64,
    /// First-order swash-plate actuator time constant, s. Zero means the
    /// blades see the command instantly.
    pub actuator_lag: f64,
    /// Cyclic saturation, rad.
    pub command_limit: f64,
}

impl CoupledModel {
    pub fn new(rotor: RotorParams, body: BodyParams) -> Self {
        Self {
            thrust: body.mass_total * crate::GRAVITY,
            rotor,
            body,
            blade_count: 2,
            actuator_lag: 0.0,
            command_limit: crate::rotor::COMMAND_LIMIT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.rotor.validate()?;
        self.body.validate()?;
        if self.blade_count < 2 {
            return Err(Error::InvalidParams(format!(
                "blade_count must be >= 2, got {}",
                self.blade_count
            )));
        }
        if !self.thrust.is_finite() {
            return Err(Error::InvalidParams("thrust is not finite".into()));
        }
        if !(self.actuator_lag >= 0.0) || !self.actuator_lag.is_finite() {
            return Err(Error::InvalidParams(format!(
                "actuator_lag must be >= 0, got {}",
                self.actuator_lag
            )));
        }
        if !(self.command_limit > 0.0) {
            return Err(Error::InvalidParams("command_limit must be > 0".into()));
        }
        Ok(())
    }

    /// Hub moment per radian of blade flap: hinge spring plus the lift of one
    /// blade acting at the rotor offset.
    pub fn hub_stiffness(&self) -> f64 {
        self.rotor.hinge_spring + self.thrust / self.blade_count as f64 * self.body.rotor_offset_z
    }

    /// Azimuth of blade `i` given the azimuth of blade 0.
    pub fn blade_azimuth(&self, psi0: f64, i: usize) -> f64 {
        psi0 + TAU * i as f64 / self.blade_count as f64
    }

    fn state_len(&self) -> usize {
        BLADES + 2 * self.blade_count + 2
    }

    /// Initial state: body at rest and level, blades unflapped, blade 0 at
    /// azimuth `psi0`, rotor at its nominal speed.
    pub fn initial_state(&self, psi0: f64) -> CoupledState {
        let omega = self.rotor.omega_nominal();
        CoupledState {
            t: 0.0,
            rates: Vector3::zeros(),
            attitude: UnitQuaternion::identity(),
            blades: (0..self.blade_count)
                .map(|i| FlapState {
                    beta: 0.0,
                    beta_dot: 0.0,
                    psi: wrap_azimuth(self.blade_azimuth(psi0, i)),
                    omega,
                })
                .collect(),
            omega,
            actuator: [0.0, 0.0],
        }
    }

    /// Advances the coupled state by `dt` with the swash-plate command held.
    pub fn step(&self, state: &CoupledState, cmd: &CyclicCommand, dt: f64) -> Result<CoupledState> {
        let mut rk = Rk4::new(self.state_len());
        self.step_with(&mut rk, state, cmd, dt)
    }

    pub(crate) fn step_with(
        &self,
        rk: &mut Rk4,
        state: &CoupledState,
        cmd: &CyclicCommand,
        dt: f64,
    ) -> Result<CoupledState> {
        check_resolution(dt, state.omega)?;
        if state.blades.len() != self.blade_count {
            return Err(Error::InvalidState(format!(
                "state has {} blades, model has {}",
                state.blades.len(),
                self.blade_count
            )));
        }
        let gamma = lock_number(&self.rotor)?;
        let spring = self.rotor.spring_ratio();
        let hub_k = self.hub_stiffness();
        let inertia = self.body.inertia();
        let omega = state.omega;
        let nb = self.blade_count;
        let act = BLADES + 2 * nb;
        let cmd = cmd.saturated(self.command_limit);
        let lag = self.actuator_lag;

        let mut y = state.pack(nb);
        if lag == 0.0 {
            y[act] = cmd.delta_p;
            y[act + 1] = cmd.delta_q;
        }
        let psi_ref = state.blades[0].psi;

        let deriv = |tau: f64, y: &[f64], dy: &mut [f64]| {
            let w = Vector3::new(y[RATES], y[RATES + 1], y[RATES + 2]);
            let psi_now = psi_ref + omega * tau;
            let (dp_act, dq_act) = (y[act], y[act + 1]);

            // hub moment from flapped blades
            let mut moment = Vector3::zeros();
            for i in 0..nb {
                let psi = self.blade_azimuth(psi_now, i);
                let (s, c) = psi.sin_cos();
                let beta = y[BLADES + 2 * i];
                moment.x -= hub_k * beta * c;
                moment.y += hub_k * beta * s;
            }
            let iw = w.component_mul(&inertia);
            let wdot = (moment - w.cross(&iw)).component_div(&inertia);
            dy[RATES] = wdot.x;
            dy[RATES + 1] = wdot.y;
            dy[RATES + 2] = wdot.z;

            let q = Quaternion::new(y[QUAT], y[QUAT + 1], y[QUAT + 2], y[QUAT + 3]);
            let qd = q * Quaternion::new(0.0, w.x, w.y, w.z) * 0.5;
            dy[QUAT] = qd.w;
            dy[QUAT + 1] = qd.i;
            dy[QUAT + 2] = qd.j;
            dy[QUAT + 3] = qd.k;

            let blade_cmd = CyclicCommand::new(dp_act, dq_act, cmd.collective);
            for i in 0..nb {
                let psi = self.blade_azimuth(psi_now, i);
                let (s, c) = psi.sin_cos();
                // r̂ = (−s, −c), t̂ = (c, −s)
                let h_r = -w.x * s - w.y * c;
                let h_t = w.x * c - w.y * s;
                let hdot_t = wdot.x * c - wdot.y * s;
                let beta = y[BLADES + 2 * i];
                let beta_dot = y[BLADES + 2 * i + 1];
                let theta = feathering_angle(&blade_cmd, psi);
                dy[BLADES + 2 * i] = beta_dot;
                dy[BLADES + 2 * i + 1] =
                    flap_accel_raw(gamma, spring, omega, beta, beta_dot, theta)
                        + gamma / 8.0 * omega * h_t
                        + hdot_t
                        + 2.0 * omega * h_r;
            }

            if lag > 0.0 {
                dy[act] = (cmd.delta_p - dp_act) / lag;
                dy[act + 1] = (cmd.delta_q - dq_act) / lag;
            } else {
                dy[act] = 0.0;
                dy[act + 1] = 0.0;
            }
        };

        rk.step(deriv, 0.0, &mut y, dt);

        let t = state.t + dt;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { t });
        }
        Ok(CoupledState::unpack(&y, nb, t, wrap_azimuth(psi_ref + omega * dt), omega, self))
    }
}

/// Full state of the coupled rotor-body system.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledState {
    /// Simulation time, s.
    pub t: f64,
    /// Body rates (p, q, r), rad/s.
    pub rates: Vector3<f64>,
    /// Body-to-world attitude.
    pub attitude: UnitQuaternion<f64>,
    /// Flap state per blade; blade 0 carries the reference azimuth.
    pub blades: Vec<FlapState>,
    /// Rotor speed, rad/s.
    pub omega: f64,
    /// Cyclic seen by the blades after the actuator (δp, δq), rad.
    pub actuator: [f64; 2],
}

impl CoupledState {
    fn pack(&self, nb: usize) -> Vec<f64> {
        let mut y = vec![0.0; BLADES + 2 * nb + 2];
        y[RATES..RATES + 3].copy_from_slice(self.rates.as_slice());
        let q = self.attitude.quaternion();
        y[QUAT] = q.w;
        y[QUAT + 1] = q.i;
        y[QUAT + 2] = q.j;
        y[QUAT + 3] = q.k;
        for (i, b) in self.blades.iter().enumerate() {
            y[BLADES + 2 * i] = b.beta;
            y[BLADES + 2 * i + 1] = b.beta_dot;
        }
        y[BLADES + 2 * nb] = self.actuator[0];
        y[BLADES + 2 * nb + 1] = self.actuator[1];
        y
    }

    fn unpack(y: &[f64], nb: usize, t: f64, psi0: f64, omega: f64, model: &CoupledModel) -> Self {
        let q = Quaternion::new(y[QUAT], y[QUAT + 1], y[QUAT + 2], y[QUAT + 3]);
        Self {
            t,
            rates: Vector3::new(y[RATES], y[RATES + 1], y[RATES + 2]),
            attitude: UnitQuaternion::from_quaternion(q),
            blades: (0..nb)
                .map(|i| FlapState {
                    beta: y[BLADES + 2 * i],
                    beta_dot: y[BLADES + 2 * i + 1],
                    psi: wrap_azimuth(model.blade_azimuth(psi0, i)),
                    omega,
                })
                .collect(),
            omega,
            actuator: [y[BLADES + 2 * nb], y[BLADES + 2 * nb + 1]],
        }
    }

    /// State as a flat vector (rates, quaternion, flap states, actuator),
    /// used for convergence studies.
    pub fn to_vec(&self) -> Vec<f64> {
        self.pack(self.blades.len())
    }
}

/// Single-step wrapper around [`CoupledModel::step`].
pub fn step_coupled(
    state: &CoupledState,
    body: &BodyParams,
    rotor: &RotorParams,
    cmd: &CyclicCommand,
    dt: f64,
) -> Result<CoupledState> {
    CoupledModel::new(*rotor, *body).step(state, cmd, dt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Roll,
    Pitch,
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "roll" | "p" => Ok(Axis::Roll),
            "pitch" | "q" => Ok(Axis::Pitch),
            other => Err(Error::config(format!("unknown axis '{other}' (expected roll|pitch)"))),
        }
    }
}

/// Cyclic doublet: `+amplitude` for the first half of `duration`, then
/// `-amplitude`, then zero for `settle` seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Doublet {
    pub axis: Axis,
    /// Cyclic amplitude, rad.
    pub amplitude: f64,
    /// Doublet length, s.
    pub duration: f64,
    /// Quiet time after the doublet, s.
    pub settle: f64,
    /// Integration step, s.
    pub dt: f64,
    /// Blade 0 azimuth at t = 0, rad.
    pub initial_azimuth: f64,
    /// Collective held during the run, rad.
    pub collective: f64,
}

impl Doublet {
    pub fn new(axis: Axis, amplitude: f64, duration: f64) -> Self {
        Self {
            axis,
            amplitude,
            duration,
            settle: 0.0,
            dt: 2.5e-4,
            initial_azimuth: 0.0,
            collective: 0.0,
        }
    }

    fn steps(&self) -> Result<(usize, usize, usize)> {
        if !(self.duration > 0.0) || !(self.settle >= 0.0) {
            return Err(Error::InvalidParams("doublet duration must be > 0, settle >= 0".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidParams(format!("dt must be > 0, got {}", self.dt)));
        }
        let half = (0.5 * self.duration / self.dt).round() as usize;
        let settle = (self.settle / self.dt).round() as usize;
        Ok((half, 2 * half, 2 * half + settle))
    }

    /// Command at integration step `k`.
    pub fn command_at(&self, k: usize, half: usize) -> CyclicCommand {
        let a = if k < half {
            self.amplitude
        } else if k < 2 * half {
            -self.amplitude
        } else {
            0.0
        };
        match self.axis {
            Axis::Pitch => CyclicCommand::new(0.0, a, self.collective),
            Axis::Roll => CyclicCommand::new(a, 0.0, self.collective),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSample {
    pub t: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub delta_p: f64,
    pub delta_q: f64,
}

/// Body-rate time series with the commanded cyclic.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RateTrace {
    pub samples: Vec<RateSample>,
}

impl RateTrace {
    pub fn peak_abs_p(&self) -> f64 {
        self.samples.iter().map(|s| s.p.abs()).fold(0.0, f64::max)
    }

    pub fn peak_abs_q(&self) -> f64 {
        self.samples.iter().map(|s| s.q.abs()).fold(0.0, f64::max)
    }

    pub fn rms_p(&self) -> f64 {
        rms(self.samples.iter().map(|s| s.p))
    }

    pub fn rms_q(&self) -> f64 {
        rms(self.samples.iter().map(|s| s.q))
    }

    /// CSV with header `t,p,q,r,delta_p,delta_q`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,p,q,r,delta_p,delta_q\n");
        for x in &self.samples {
            let _ = writeln!(s, "{},{},{},{},{},{}", x.t, x.p, x.q, x.r, x.delta_p, x.delta_q);
        }
        s
    }
}

pub(crate) fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values {
        sum += v * v;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

/// Runs a cyclic doublet on the free body and returns the rate trace, one
/// sample per integration step including t = 0.
pub fn doublet_response(model: &CoupledModel, doublet: &Doublet) -> Result<RateTrace> {
    Ok(run_doublet(model, doublet)?.0)
}

/// Like [`doublet_response`] but also returns the final coupled state.
pub fn run_doublet(model: &CoupledModel, doublet: &Doublet) -> Result<(RateTrace, CoupledState)> {
    model.validate()?;
    let (half, _, total) = doublet.steps()?;
    let mut state = model.initial_state(doublet.initial_azimuth);
    check_resolution(doublet.dt, state.omega)?;
    let mut rk = Rk4::new(model.state_len());
    let mut samples = Vec::with_capacity(total + 1);
    let sample = |k: usize, s: &CoupledState| {
        let c = doublet.command_at(k, half);
        RateSample {
            t: k as f64 * doublet.dt,
            p: s.rates.x,
            q: s.rates.y,
            r: s.rates.z,
            delta_p: c.delta_p,
            delta_q: c.delta_q,
        }
    };
    samples.push(sample(0, &state));
    for k in 0..total {
        let cmd = doublet.command_at(k, half);
        state = model.step_with(&mut rk, &state, &cmd, doublet.dt)?;
        state.t = (k + 1) as f64 * doublet.dt;
        samples.push(sample(k + 1, &state));
    }
    Ok((RateTrace { samples }, state))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> CoupledModel {
        CoupledModel::new(RotorParams::default(), BodyParams::default())
    }

    #[test]
    fn zero_command_only_advances_azimuth() {
        let m = model();
        let s0 = m.initial_state(0.3);
        let s1 = m.step(&s0, &CyclicCommand::default(), 1e-3).unwrap();
        assert_eq!(s1.rates, s0.rates);
        assert_eq!(s1.attitude, s0.attitude);
        for (a, b) in s0.blades.iter().zip(&s1.blades) {
            assert_eq!(a.beta, b.beta);
            assert_eq!(a.beta_dot, b.beta_dot);
        }
        let adv = wrap_azimuth(s1.blades[0].psi - s0.blades[0].psi);
        assert!((adv - s0.omega * 1e-3).abs() < 1e-12);
    }

    #[test]
    fn step_guard() {
        let m = model();
        let s0 = m.initial_state(0.0);
        let r = m.step(&s0, &CyclicCommand::default(), 0.01);
        assert!(matches!(r, Err(Error::StepTooLarge { .. })));
    }

    #[test]
    fn blade_spacing() {
        let mut m = model();
        m.blade_count = 3;
        let s = m.initial_state(0.0);
        assert!((s.blades[1].psi - TAU / 3.0).abs() < 1e-12);
        assert!((s.blades[2].psi - 2.0 * TAU / 3.0).abs() < 1e-12);
    }

    #[test]
    fn blowup_is_reported() {
        let mut m = model();
        m.body.ixx = 1e-12;
        m.body.iyy = 1e-12;
        let d = Doublet {
            dt: 1e-3,
            ..Doublet::new(Axis::Pitch, 0.5, 1.0)
        };
        match doublet_response(&m, &d) {
            Err(Error::NonFiniteState { .. }) => {}
            other => panic!("expected non-finite failure, got {other:?}"),
        }
    }

    #[test]
    fn pitch_cyclic_pitches_and_roll_cyclic_rolls() {
        let m = model();
        let d = Doublet {
            dt: 5e-4,
            ..Doublet::new(Axis::Pitch, 0.01, 0.2)
        };
        let tr = doublet_response(&m, &d).unwrap();
        // first half of the doublet: positive pitch rate builds up
        let mid = tr.samples[tr.samples.len() / 2].q;
        assert!(mid > 0.0, "{mid}");
        let d = Doublet {
            axis: Axis::Roll,
            ..d
        };
        let tr = doublet_response(&m, &d).unwrap();
        let mid = tr.samples[tr.samples.len() / 2].p;
        assert!(mid > 0.0, "{mid}");
    }

    #[test]
    fn trace_csv_header() {
        let t = RateTrace {
            samples: vec![RateSample {
                t: 0.0,
                p: 1.0,
                q: 2.0,
                r: 3.0,
                delta_p: 0.5,
                delta_q: -0.5,
            }],
        };
        assert_eq!(t.to_csv(), "t,p,q,r,delta_p,delta_q\n0,1,2,3,0.5,-0.5\n");
    }
}
