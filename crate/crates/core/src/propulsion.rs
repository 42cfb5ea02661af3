//! Blade-element/momentum model of the two-bladed twisted propeller in
//! purely axial flow.
//!
//! Each annulus balances blade-element thrust and torque against the
//! momentum flux through it, solving for the induced axial velocity and the
//! swirl velocity by relaxed fixed-point iteration. Coefficients use the
//! propeller convention `C_T = T/(ρn²D⁴)`, `C_P = P/(ρn³D⁵)` with `n` in
//! rev/s and `D` the tip diameter.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::{Error, Result};

/// Reference blade stations `(x cm, chord cm, pitch deg)`.
pub const REFERENCE_STATIONS: [(f64, f64, f64); 8] = [
    (11.0, 4.0, 25.0),
    (14.0, 5.7, 23.2),
    (20.0, 5.7, 18.7),
    (30.0, 5.5, 11.8),
    (40.0, 4.6, 5.5),
    (45.0, 3.9, 2.6),
    (50.0, 2.8, 0.2),
    (50.7, 1.0, 0.0),
];

#[derive(Debug, Clone, PartialEq)]
pub struct BladeGeometry {
    /// `(radial position cm, chord cm, built-in pitch deg)`.
    stations: Vec<(f64, f64, f64)>,
}

impl Default for BladeGeometry {
    fn default() -> Self {
        Self {
            stations: REFERENCE_STATIONS.to_vec(),
        }
    }
}

impl BladeGeometry {
    pub fn new(stations: Vec<(f64, f64, f64)>) -> Result<Self> {
        if stations.len() < 2 {
            return Err(Error::InvalidParams("blade needs at least 2 stations".into()));
        }
        if stations.iter().any(|&(x, c, t)| !x.is_finite() || !c.is_finite() || !t.is_finite()) {
            return Err(Error::InvalidParams("blade stations must be finite".into()));
        }
        if stations[0].0 <= 0.0 {
            return Err(Error::InvalidParams("first station must be at x > 0".into()));
        }
        if stations.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidParams("station positions must be strictly increasing".into()));
        }
        if stations.iter().any(|s| s.1 < 0.0) {
            return Err(Error::InvalidParams("chords must be >= 0".into()));
        }
        Ok(Self { stations })
    }

    pub fn stations(&self) -> &[(f64, f64, f64)] {
        &self.stations
    }

    pub fn root_cm(&self) -> f64 {
        self.stations[0].0
    }

    pub fn tip_cm(&self) -> f64 {
        self.stations[self.stations.len() - 1].0
    }

    /// Tip diameter, m.
    pub fn diameter(&self) -> f64 {
        2.0 * self.tip_cm() / 100.0
    }

    /// Chord (cm) and built-in pitch (deg) at radial position `x` (cm).
    pub fn at(&self, x: f64) -> Result<(f64, f64)> {
        let (min, max) = (self.root_cm(), self.tip_cm());
        if !(x >= min && x <= max) {
            return Err(Error::OutOfSpan { x, min, max });
        }
        let i = self
            .stations
            .windows(2)
            .position(|w| x <= w[1].0)
            .unwrap_or(self.stations.len() - 2);
        let (x0, c0, t0) = self.stations[i];
        let (x1, c1, t1) = self.stations[i + 1];
        let s = (x - x0) / (x1 - x0);
        Ok((c0 + s * (c1 - c0), t0 + s * (t1 - t0)))
    }
}

/// Section polar: linear lift with a zero-lift offset and a quadratic drag
/// polar, blended into flat-plate coefficients past the stall angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Airfoil {
    /// 1/rad.
    pub lift_slope: f64,
    /// rad.
    pub alpha_zero: f64,
    /// Angle beyond which the flat-plate blend starts, rad.
    pub stall_angle: f64,
    /// Width of the blend band, rad.
    pub blend_width: f64,
    pub cd0: f64,
    pub cd2: f64,
}

impl Default for Airfoil {
    fn default() -> Self {
        Self {
            lift_slope: 5.7,
            alpha_zero: (-3f64).to_radians(),
            stall_angle: 12f64.to_radians(),
            blend_width: 2f64.to_radians(),
            cd0: 0.012,
            cd2: 0.02,
        }
    }
}

impl Airfoil {
    /// `(c_l, c_d)` at angle of attack `alpha` (rad).
    pub fn coefficients(&self, alpha: f64) -> (f64, f64) {
        let cl_lin = self.lift_slope * (alpha - self.alpha_zero);
        let cd_lin = self.cd0 + self.cd2 * cl_lin * cl_lin;
        let excess = alpha.abs() - self.stall_angle;
        if excess <= 0.0 {
            return (cl_lin, cd_lin);
        }
        let s = (excess / self.blend_width).min(1.0);
        let w = s * s * (3.0 - 2.0 * s);
        let cl_fp = 2.0 * alpha.sin() * alpha.cos();
        let cd_fp = (2.0 * alpha.sin().powi(2)).max(self.cd0);
        ((1.0 - w) * cl_lin + w * cl_fp, (1.0 - w) * cd_lin + w * cd_fp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub rpm: f64,
    /// Collective added to the built-in twist, deg.
    pub tip_pitch_offset: f64,
    /// Axial inflow speed, m/s.
    pub airspeed: f64,
}

impl OperatingPoint {
    pub fn new(rpm: f64, tip_pitch_offset: f64, airspeed: f64) -> Self {
        Self {
            rpm,
            tip_pitch_offset,
            airspeed,
        }
    }

    pub fn hover_design() -> Self {
        Self::new(1500.0, 10.0, 0.0)
    }

    pub fn cruise_design() -> Self {
        Self::new(910.0, 30.0, 21.5)
    }
}

/// Numerical settings of the blade-element solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BemSettings {
    pub blades: usize,
    pub annuli: usize,
    pub relaxation: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub tip_loss: bool,
}

impl Default for BemSettings {
    fn default() -> Self {
        Self {
            blades: 2,
            annuli: 40,
            relaxation: 0.3,
            tolerance: 1e-6,
            max_iterations: 5000,
            tip_loss: true,
        }
    }
}

/// Complete propeller description used by the solver.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Propeller {
    pub geometry: BladeGeometry,
    pub airfoil: Airfoil,
    pub settings: BemSettings,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Performance {
    /// N.
    pub thrust: f64,
    /// Shaft power, W.
    pub power: f64,
    /// Shaft torque, N·m.
    pub torque: f64,
    /// Figure of merit at zero airspeed, `TV/P` otherwise. Zero when either
    /// is undefined.
    pub efficiency: f64,
    pub ct: f64,
    pub cp: f64,
}

impl Propeller {
    pub fn validate(&self) -> Result<()> {
        let s = &self.settings;
        if s.blades == 0 || s.annuli == 0 || s.max_iterations == 0 {
            return Err(Error::InvalidParams("blades, annuli and max_iterations must be > 0".into()));
        }
        if !(s.relaxation > 0.0 && s.relaxation <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "relaxation must be in (0, 1], got {}",
                s.relaxation
            )));
        }
        if !(s.tolerance > 0.0) {
            return Err(Error::InvalidParams("tolerance must be > 0".into()));
        }
        let a = &self.airfoil;
        if ![a.lift_slope, a.alpha_zero, a.stall_angle, a.blend_width, a.cd0, a.cd2]
            .iter()
            .all(|v| v.is_finite())
            || a.blend_width <= 0.0
            || a.stall_angle <= 0.0
        {
            return Err(Error::InvalidParams("airfoil parameters invalid".into()));
        }
        Ok(())
    }

    /// Thrust, power and efficiency at an operating point.
    pub fn performance(&self, op: &OperatingPoint, rho: f64) -> Result<Performance> {
        self.validate()?;
        if !(op.rpm >= 0.0) || !op.rpm.is_finite() {
            return Err(Error::InvalidParams(format!("rpm must be >= 0, got {}", op.rpm)));
        }
        if !op.airspeed.is_finite() || op.airspeed < 0.0 || !op.tip_pitch_offset.is_finite() {
            return Err(Error::InvalidParams("airspeed must be >= 0 and pitch finite".into()));
        }
        if !(rho > 0.0) {
            return Err(Error::InvalidParams(format!("air density must be > 0, got {rho}")));
        }
        if op.rpm == 0.0 {
            return Ok(Performance {
                thrust: 0.0,
                power: 0.0,
                torque: 0.0,
                efficiency: 0.0,
                ct: 0.0,
                cp: 0.0,
            });
        }
        let omega = op.rpm * PI / 30.0;
        let set = &self.settings;
        let b = set.blades as f64;
        let r_root = self.geometry.root_cm() / 100.0;
        let r_tip = self.geometry.tip_cm() / 100.0;
        let dr = (r_tip - r_root) / set.annuli as f64;
        let v = op.airspeed;

        let (mut thrust, mut torque) = (0.0, 0.0);
        for i in 0..set.annuli {
            let r = r_root + (i as f64 + 0.5) * dr;
            let (chord_cm, twist) = self.geometry.at(r * 100.0)?;
            let chord = chord_cm / 100.0;
            let theta = (twist + op.tip_pitch_offset).to_radians();

            // (dT/dr, dQ/dr, F, phi) for given induced velocities
            let element = |vi: f64, ui: f64| {
                let va = v + vi;
                let vt = omega * r - ui;
                let phi = va.atan2(vt);
                let (cl, cd) = self.airfoil.coefficients(theta - phi);
                let q = 0.5 * rho * (va * va + vt * vt) * chord * b;
                let dt = q * (cl * phi.cos() - cd * phi.sin());
                let dq = q * (cl * phi.sin() + cd * phi.cos()) * r;
                let f = if set.tip_loss {
                    prandtl(set.blades, r, r_tip, phi)
                } else {
                    1.0
                };
                (dt, dq, f)
            };

            let (mut vi, mut ui) = (0.0, 0.0);
            let mut converged = false;
            for _ in 0..set.max_iterations {
                let (dt, dq, f) = element(vi, ui);
                let x = dt / (4.0 * PI * r * rho * f);
                let disc = 0.25 * v * v + x;
                let vi_new = -0.5 * v + disc.max(0.0).sqrt();
                let mass = 4.0 * PI * r * r * rho * f * (v + vi_new).max(1e-9);
                let ui_new = (dq / mass).clamp(0.0, 0.5 * omega * r);
                let dv = vi_new - vi;
                let du = ui_new - ui;
                vi += set.relaxation * dv;
                ui += set.relaxation * du;
                if !vi.is_finite() || !ui.is_finite() {
                    return Err(Error::IterationDivergence { annulus: i });
                }
                if dv.abs() + du.abs() < set.tolerance {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::IterationDivergence { annulus: i });
            }
            let (dt, dq, _) = element(vi, ui);
            thrust += dt * dr;
            torque += dq * dr;
        }

        let power = torque * omega;
        let n = op.rpm / 60.0;
        let d = self.geometry.diameter();
        let efficiency = if power > 0.0 && thrust > 0.0 {
            if v > 0.0 {
                thrust * v / power
            } else {
                let area = PI * (d / 2.0).powi(2);
                thrust.powf(1.5) / (2.0 * rho * area).sqrt() / power
            }
        } else {
            0.0
        };
        Ok(Performance {
            thrust,
            power,
            torque,
            efficiency,
            ct: thrust / (rho * n * n * d.powi(4)),
            cp: power / (rho * n.powi(3) * d.powi(5)),
        })
    }
}

/// Prandtl tip-loss factor.
fn prandtl(blades: usize, r: f64, r_tip: f64, phi: f64) -> f64 {
    let s = phi.sin().abs().max(1e-6);
    let f = blades as f64 * (r_tip - r) / (2.0 * r * s);
    ((2.0 / PI) * (-f).exp().min(1.0).acos()).max(1e-4)
}

/// One row of a performance sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub op: OperatingPoint,
    pub perf: Performance,
}

/// Evaluates the full grid `rpm × pitch × airspeed`, in that nesting order.
pub fn sweep(
    prop: &Propeller,
    rpms: &[f64],
    pitches: &[f64],
    speeds: &[f64],
    rho: f64,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(rpms.len() * pitches.len() * speeds.len());
    for &rpm in rpms {
        for &pitch in pitches {
            for &v in speeds {
                let op = OperatingPoint::new(rpm, pitch, v);
                rows.push(SweepRow {
                    op,
                    perf: prop.performance(&op, rho)?,
                });
            }
        }
    }
    Ok(rows)
}

/// CSV with header `rpm,pitch,V,T,P,eta,CT,CP`.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("rpm,pitch,V,T,P,eta,CT,CP\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.op.rpm,
            r.op.tip_pitch_offset,
            r.op.airspeed,
            r.perf.thrust,
            r.perf.power,
            r.perf.efficiency,
            r.perf.ct,
            r.perf.cp
        );
    }
    s
}
