//! Isolated rigid-rotor flapping dynamics.
//!
//! A blade is modelled as a rigid rod on a spring-restrained flap hinge at the
//! shaft. In the rotating frame its flap angle obeys
//!
//! ```text
//! β̈ + (γ/8)·ω·β̇ + (ω² + K/I)·β = (γ/8)·ω²·θ
//! ```
//!
//! with `γ = ρ·c_lα·c·R⁴ / I` the Lock number and `θ` the feathering angle set
//! by the swash-plate, `θ = θ₀ + δp·sin ψ + δq·cos ψ`.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use crate::ode::Rk4;
use crate::{Error, Result};

/// Largest rotor advance per integration step, rad.
pub const MAX_AZIMUTH_STEP: f64 = 0.2;

/// Physical collective range of the rotor head, rad (±40°).
pub const COLLECTIVE_LIMIT: f64 = 40.0 * PI / 180.0;

/// Default cyclic saturation, rad.
pub const COMMAND_LIMIT: f64 = 1.0;

/// Physical description of one rotor blade and its hinge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotorParams {
    /// Rotor radius, m.
    pub radius: f64,
    /// Blade mass, kg.
    pub blade_mass: f64,
    /// Blade inertia about the flap hinge, kg·m².
    pub flap_inertia: f64,
    /// Flap hinge spring stiffness, N·m/rad.
    pub hinge_spring: f64,
    /// Section lift-curve slope, 1/rad.
    pub lift_slope: f64,
    /// Mean blade chord, m.
    pub mean_chord: f64,
    /// Air density, kg/m³.
    pub air_density: f64,
    /// Nominal rotor speed, rev/min.
    pub rpm_nominal: f64,
}

impl Default for RotorParams {
    /// A 1 m two-blade rotor with 60 g blades treated as uniform rods
    /// (`I = m·R²/3`). The hinge stiffness is not published for the real
    /// vehicle; 2 N·m/rad is a placeholder for a soft hinge, which keeps the
    /// flap frequency within 1% of 1/rev at 1500 rpm.
    fn default() -> Self {
        let radius = 0.5;
        let blade_mass = 0.06;
        Self {
            radius,
            blade_mass,
            flap_inertia: blade_mass * radius * radius / 3.0,
            hinge_spring: 2.0,
            lift_slope: 5.7,
            mean_chord: 0.05,
            air_density: crate::RHO_SEA_LEVEL,
            rpm_nominal: 1500.0,
        }
    }
}

impl RotorParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("radius", self.radius),
            ("blade_mass", self.blade_mass),
            ("flap_inertia", self.flap_inertia),
            ("hinge_spring", self.hinge_spring),
            ("lift_slope", self.lift_slope),
            ("mean_chord", self.mean_chord),
            ("air_density", self.air_density),
            ("rpm_nominal", self.rpm_nominal),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("rotor {name} is not finite")));
            }
        }
        let positive = [
            ("radius", self.radius),
            ("flap_inertia", self.flap_inertia),
            ("air_density", self.air_density),
        ];
        for (name, v) in positive {
            if v <= 0.0 {
                return Err(Error::InvalidParams(format!("rotor {name} must be > 0, got {v}")));
            }
        }
        let non_negative = [
            ("blade_mass", self.blade_mass),
            ("hinge_spring", self.hinge_spring),
            ("lift_slope", self.lift_slope),
            ("mean_chord", self.mean_chord),
            ("rpm_nominal", self.rpm_nominal),
        ];
        for (name, v) in non_negative {
            if v < 0.0 {
                return Err(Error::InvalidParams(format!("rotor {name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Nominal rotor speed in rad/s.
    pub fn omega_nominal(&self) -> f64 {
        self.rpm_nominal * TAU / 60.0
    }

    /// Hinge stiffness per unit flap inertia, K/I in rad²/s².
    pub fn spring_ratio(&self) -> f64 {
        self.hinge_spring / self.flap_inertia
    }

    /// Undamped flap natural frequency √(ω² + K/I), rad/s.
    pub fn flap_natural_frequency(&self, omega: f64) -> f64 {
        (omega * omega + self.spring_ratio()).sqrt()
    }
}

/// Lock number `γ = ρ·c_lα·c·R⁴ / I`.
pub fn lock_number(params: &RotorParams) -> Result<f64> {
    params.validate()?;
    Ok(params.air_density * params.lift_slope * params.mean_chord * params.radius.powi(4)
        / params.flap_inertia)
}

/// Wraps an azimuth into `[0, 2π)`.
pub fn wrap_azimuth(psi: f64) -> f64 {
    let w = psi.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Flap state of a single blade.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlapState {
    /// Flap angle, rad.
    pub beta: f64,
    /// Flap rate, rad/s.
    pub beta_dot: f64,
    /// Blade azimuth, rad, in `[0, 2π)`.
    pub psi: f64,
    /// Rotor speed, rad/s.
    pub omega: f64,
}

impl FlapState {
    pub fn new(beta: f64, beta_dot: f64, psi: f64, omega: f64) -> Result<Self> {
        if !(omega >= 0.0) || !omega.is_finite() {
            return Err(Error::InvalidState(format!("rotor speed must be >= 0, got {omega}")));
        }
        if !beta.is_finite() || !beta_dot.is_finite() || !psi.is_finite() {
            return Err(Error::InvalidState("flap state is not finite".into()));
        }
        Ok(Self {
            beta,
            beta_dot,
            psi: wrap_azimuth(psi),
            omega,
        })
    }

    /// Zero flap at azimuth zero.
    pub fn at_rest(omega: f64) -> Result<Self> {
        Self::new(0.0, 0.0, 0.0, omega)
    }

    /// Flap energy per unit inertia, `½β̇² + ½(ω² + K/I)β²`.
    pub fn energy(&self, params: &RotorParams) -> f64 {
        let nu2 = self.omega * self.omega + params.spring_ratio();
        0.5 * self.beta_dot * self.beta_dot + 0.5 * nu2 * self.beta * self.beta
    }
}

/// Swash-plate command: cyclic roll/pitch and collective.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CyclicCommand {
    /// Roll cyclic amplitude (multiplies sin ψ), rad of blade pitch.
    pub delta_p: f64,
    /// Pitch cyclic amplitude (multiplies cos ψ), rad of blade pitch.
    pub delta_q: f64,
    /// Collective pitch, rad.
    pub collective: f64,
}

impl CyclicCommand {
    pub fn new(delta_p: f64, delta_q: f64, collective: f64) -> Self {
        Self {
            delta_p,
            delta_q,
            collective,
        }
    }

    /// Clamps the cyclic terms to `±limit` and the collective to the
    /// mechanical range of the head.
    pub fn saturated(self, limit: f64) -> Self {
        let limit = limit.abs();
        Self {
            delta_p: self.delta_p.clamp(-limit, limit),
            delta_q: self.delta_q.clamp(-limit, limit),
            collective: self.collective.clamp(-COLLECTIVE_LIMIT, COLLECTIVE_LIMIT),
        }
    }
}

/// Blade feathering angle at azimuth `psi`.
pub fn feathering_angle(cmd: &CyclicCommand, psi: f64) -> f64 {
    let (s, c) = psi.sin_cos();
    cmd.collective + cmd.delta_p * s + cmd.delta_q * c
}

/// Flap acceleration of an isolated blade.
pub fn flap_acceleration(state: &FlapState, params: &RotorParams, theta: f64) -> Result<f64> {
    if !(state.omega > 0.0) {
        return Err(Error::InvalidState(format!(
            "flap acceleration needs omega > 0, got {}",
            state.omega
        )));
    }
    let gamma = lock_number(params)?;
    Ok(flap_accel_raw(
        gamma,
        params.spring_ratio(),
        state.omega,
        state.beta,
        state.beta_dot,
        theta,
    ))
}

/// Right-hand side of the flap equation with precomputed coefficients.
#[inline]
pub(crate) fn flap_accel_raw(
    gamma: f64,
    spring_ratio: f64,
    omega: f64,
    beta: f64,
    beta_dot: f64,
    theta: f64,
) -> f64 {
    let g8 = gamma / 8.0;
    g8 * omega * omega * theta - g8 * omega * beta_dot - (omega * omega + spring_ratio) * beta
}

/// Steady flap angle under constant feathering `theta`.
pub fn steady_flap_angle(params: &RotorParams, omega: f64, theta: f64) -> Result<f64> {
    let gamma = lock_number(params)?;
    Ok(gamma / 8.0 * omega * omega * theta / (omega * omega + params.spring_ratio()))
}

pub(crate) fn check_resolution(dt: f64, omega: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParams(format!("time step must be > 0, got {dt}")));
    }
    let ratio = dt * omega.abs();
    if ratio >= MAX_AZIMUTH_STEP {
        return Err(Error::StepTooLarge {
            ratio,
            limit: MAX_AZIMUTH_STEP,
        });
    }
    Ok(())
}

/// One sample of a flap trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlapSample {
    pub t: f64,
    pub state: FlapState,
    /// Feathering angle applied at this instant, rad.
    pub theta: f64,
}

/// Integrates a single blade with RK4 for `steps` steps of `dt`, holding the
/// swash-plate command (saturated at [`COMMAND_LIMIT`]) and rotor speed
/// constant. Returns `steps + 1` samples including the initial one.
pub fn integrate_flap(
    state: FlapState,
    params: &RotorParams,
    cmd: &CyclicCommand,
    dt: f64,
    steps: usize,
) -> Result<Vec<FlapSample>> {
    let gamma = lock_number(params)?;
    if !(state.omega > 0.0) {
        return Err(Error::InvalidState(format!(
            "flap integration needs omega > 0, got {}",
            state.omega
        )));
    }
    check_resolution(dt, state.omega)?;

    let cmd = &cmd.saturated(COMMAND_LIMIT);
    let omega = state.omega;
    let spring = params.spring_ratio();
    let psi0 = state.psi;
    let mut y = [state.beta, state.beta_dot];
    let mut rk = Rk4::new(2);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(FlapSample {
        t: 0.0,
        state,
        theta: feathering_angle(cmd, psi0),
    });

    for i in 0..steps {
        let t = i as f64 * dt;
        rk.step(
            |t, y, dy| {
                let theta = feathering_angle(cmd, psi0 + omega * t);
                dy[0] = y[1];
                dy[1] = flap_accel_raw(gamma, spring, omega, y[0], y[1], theta);
            },
            t,
            &mut y,
            dt,
        );
        let t_next = (i + 1) as f64 * dt;
        if !y[0].is_finite() || !y[1].is_finite() {
            return Err(Error::NonFiniteState { t: t_next });
        }
        let psi = wrap_azimuth(psi0 + omega * t_next);
        out.push(FlapSample {
            t: t_next,
            state: FlapState {
                beta: y[0],
                beta_dot: y[1],
                psi,
                omega,
            },
            theta: feathering_angle(cmd, psi),
        });
    }
    Ok(out)
}

/// CSV export with header `t,psi,beta,beta_dot,theta` (SI units).
pub fn flap_trajectory_csv(samples: &[FlapSample]) -> String {
    let mut s = String::from("t,psi,beta,beta_dot,theta\n");
    for x in samples {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            x.t, x.state.psi, x.state.beta, x.state.beta_dot, x.theta
        );
    }
    s
}
