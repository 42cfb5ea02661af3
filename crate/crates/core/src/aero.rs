//! Fixed-wing drag polar and required aerodynamic power in level flight.
//!
//! The biplane is treated as one equivalent wing of the total area. The
//! polar is `c_d = c_d0,clean + c_d0,protrusions + c_l²/(π·AR·e)`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::{Error, GRAVITY, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AirframeAero {
    /// Total wing area, m².
    pub wing_area: f64,
    pub aspect_ratio: f64,
    pub oswald: f64,
    pub cd0_clean: f64,
    /// Parasitic increment from fuselage, gear and other protrusions.
    pub cd0_protrusions: f64,
    /// Largest `|c_l|` the polar accepts.
    pub cl_max: f64,
}

impl Default for AirframeAero {
    fn default() -> Self {
        Self {
            wing_area: 0.496,
            aspect_ratio: 1.54 * 1.54 / 0.496,
            oswald: 0.8,
            cd0_clean: 0.015,
            cd0_protrusions: 0.012,
            cl_max: 1.2,
        }
    }
}

impl AirframeAero {
    pub fn aspect_ratio_from_span(span: f64, wing_area: f64) -> f64 {
        span * span / wing_area
    }

    pub fn validate(&self) -> Result<()> {
        for (what, v) in [
            ("wing_area", self.wing_area),
            ("aspect_ratio", self.aspect_ratio),
            ("oswald", self.oswald),
            ("cd0_clean", self.cd0_clean),
            ("cd0_protrusions", self.cd0_protrusions),
            ("cl_max", self.cl_max),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParams(format!("{what} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn cd0(&self) -> f64 {
        self.cd0_clean + self.cd0_protrusions
    }

    pub fn induced_factor(&self) -> f64 {
        1.0 / (PI * self.aspect_ratio * self.oswald)
    }

    pub fn drag_coefficient(&self, cl: f64) -> Result<f64> {
        if !(cl.abs() <= self.cl_max) {
            return Err(Error::BeyondStallClamp {
                cl,
                clamp: self.cl_max,
            });
        }
        Ok(self.cd0() + cl * cl * self.induced_factor())
    }

    /// Level-flight speed at `c_l = cl_max`.
    pub fn stall_speed(&self, mass: f64, rho: f64) -> f64 {
        (2.0 * mass * GRAVITY / (rho * self.wing_area * self.cl_max)).sqrt()
    }

    /// Level-flight operating point at airspeed `v`.
    pub fn level_flight(&self, v: f64, mass: f64, rho: f64) -> Result<PowerPoint> {
        self.validate()?;
        if !(mass > 0.0) || !(rho > 0.0) {
            return Err(Error::InvalidParams("mass and air density must be > 0".into()));
        }
        let v_stall = self.stall_speed(mass, rho);
        if !(v > v_stall) {
            return Err(Error::BelowStallSpeed { v, v_stall });
        }
        let qs = 0.5 * rho * v * v * self.wing_area;
        let cl = mass * GRAVITY / qs;
        let cd = self.drag_coefficient(cl)?;
        Ok(PowerPoint {
            v,
            cl,
            cd,
            power: qs * cd * v,
        })
    }

    /// Aerodynamic power required for level flight, W.
    pub fn required_power(&self, v: f64, mass: f64, rho: f64) -> Result<f64> {
        self.level_flight(v, mass, rho).map(|p| p.power)
    }

    /// Minimum-power airspeed by golden-section search between the stall
    /// speed and `v_max`, to within `tol` m/s.
    pub fn min_power_speed(&self, mass: f64, rho: f64, v_max: f64, tol: f64) -> Result<f64> {
        self.validate()?;
        let lo = self.stall_speed(mass, rho) * (1.0 + 1e-9);
        if !(v_max > lo) || !(tol > 0.0) {
            return Err(Error::InvalidParams(format!(
                "search interval [{lo}, {v_max}] empty or tolerance invalid"
            )));
        }
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (lo, v_max);
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let mut fc = self.required_power(c, mass, rho)?;
        let mut fd = self.required_power(d, mass, rho)?;
        while b - a > tol {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = self.required_power(c, mass, rho)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = self.required_power(d, mass, rho)?;
            }
        }
        Ok(0.5 * (a + b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPoint {
    pub v: f64,
    pub cl: f64,
    pub cd: f64,
    pub power: f64,
}

/// Required-power curve over the given airspeeds; speeds at or below stall
/// are skipped.
pub fn power_curve(aero: &AirframeAero, speeds: &[f64], mass: f64, rho: f64) -> Result<Vec<PowerPoint>> {
    let mut out = Vec::with_capacity(speeds.len());
    for &v in speeds {
        match aero.level_flight(v, mass, rho) {
            Ok(p) => out.push(p),
            Err(Error::BelowStallSpeed { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// CSV with header `V,cl,cd,P`.
pub fn power_curve_csv(points: &[PowerPoint]) -> String {
    let mut s = String::from("V,cl,cd,P\n");
    for p in points {
        let _ = writeln!(s, "{},{},{},{}", p.v, p.cl, p.cd, p.power);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polar_spot_values() {
        let a = AirframeAero::default();
        assert_eq!(a.drag_coefficient(0.0).unwrap(), a.cd0_clean + 0.012);
        let induced = a.drag_coefficient(0.5).unwrap() - a.cd0();
        assert!((induced - 0.25 / (PI * 4.7815 * 0.8)).abs() < 1e-5);
        assert!((induced - 0.0208).abs() < 1e-4);
        assert!(matches!(a.drag_coefficient(1.3), Err(Error::BeyondStallClamp { .. })));
    }

    #[test]
    fn below_stall_rejected() {
        let a = AirframeAero::default();
        let vs = a.stall_speed(4.5, 1.225);
        assert!(matches!(a.required_power(vs * 0.9, 4.5, 1.225), Err(Error::BelowStallSpeed { .. })));
    }

    #[test]
    fn curve_skips_stalled_speeds() {
        let a = AirframeAero::default();
        let pts = power_curve(&a, &[1.0, 12.0, 20.0], 4.5, 1.225).unwrap();
        assert_eq!(pts.len(), 2);
        assert!(power_curve_csv(&pts).starts_with("V,cl,cd,P\n"));
    }
}
