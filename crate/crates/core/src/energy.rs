//! Mission load profiles and a zeroth-order Thevenin battery model
//! (open-circuit voltage plus series resistance).

use std::fmt::Write as _;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub label: String,
    /// s.
    pub duration: f64,
    /// A.
    pub current: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionProfile {
    pub segments: Vec<Segment>,
}

impl MissionProfile {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        for s in &segments {
            if !(s.duration > 0.0) || !s.duration.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "segment '{}' duration must be > 0",
                    s.label
                )));
            }
            if !(s.current >= 0.0) || !s.current.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "segment '{}' current must be >= 0",
                    s.label
                )));
            }
        }
        Ok(Self { segments })
    }

    /// Total duration, s.
    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Charge drawn over the profile, Ah.
    pub fn charge_ah(&self) -> f64 {
        self.segments.iter().map(|s| s.current * s.duration).sum::<f64>() / 3600.0
    }
}

/// Out-and-back mission: hover take-off, cruise, hover landing, ground wait,
/// then the same flight back.
pub fn build_mission_profile(hover_current: f64, cruise_current: f64, wait_current: f64) -> Result<MissionProfile> {
    let seg = |label: &str, minutes: f64, current: f64| Segment {
        label: label.to_string(),
        duration: minutes * 60.0,
        current,
    };
    MissionProfile::new(vec![
        seg("takeoff", 1.0, hover_current),
        seg("cruise", 29.0, cruise_current),
        seg("landing", 1.0, hover_current),
        seg("wait", 3.0, wait_current),
        seg("takeoff", 1.0, hover_current),
        seg("cruise", 29.0, cruise_current),
        seg("landing", 1.0, hover_current),
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatteryModel {
    pub name: String,
    pub cells_series: u32,
    /// Ah.
    pub capacity: f64,
    /// `(state of charge, open-circuit volts per cell)`, strictly increasing
    /// in both.
    pub ocv_curve: Vec<(f64, f64)>,
    /// Ω per series cell group.
    pub internal_resistance: f64,
    /// Volts per cell under load.
    pub cutoff_voltage: f64,
}

impl BatteryModel {
    /// Lithium-polymer pack, 6S, 16.2 Ah. Curve and resistance are
    /// placeholders calibrated to complete the reference mission.
    pub fn lipo_reference() -> Self {
        Self {
            name: "lipo".into(),
            cells_series: 6,
            capacity: 16.2,
            ocv_curve: vec![
                (0.0, 3.00),
                (0.05, 3.45),
                (0.1, 3.60),
                (0.2, 3.70),
                (0.3, 3.74),
                (0.4, 3.78),
                (0.6, 3.87),
                (0.8, 4.00),
                (0.9, 4.08),
                (1.0, 4.20),
            ],
            internal_resistance: 0.004,
            cutoff_voltage: 3.0,
        }
    }

    /// Lithium-ion pack, 6S, 20.3 Ah. Curve and resistance are placeholders
    /// calibrated so the pack sags below cutoff on the final landing.
    pub fn li_ion_reference() -> Self {
        Self {
            name: "li-ion".into(),
            cells_series: 6,
            capacity: 20.3,
            ocv_curve: vec![
                (0.0, 2.90),
                (0.05, 3.20),
                (0.1, 3.35),
                (0.2, 3.50),
                (0.3, 3.58),
                (0.4, 3.65),
                (0.6, 3.80),
                (0.8, 3.98),
                (0.9, 4.07),
                (1.0, 4.18),
            ],
            internal_resistance: 0.032,
            cutoff_voltage: 3.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells_series == 0 {
            return Err(Error::InvalidParams("cells_series must be > 0".into()));
        }
        if !(self.capacity > 0.0) || !self.capacity.is_finite() {
            return Err(Error::InvalidParams(format!("capacity must be > 0, got {}", self.capacity)));
        }
        if !(self.internal_resistance >= 0.0) || !self.internal_resistance.is_finite() {
            return Err(Error::InvalidParams("internal_resistance must be >= 0".into()));
        }
        if !self.cutoff_voltage.is_finite() {
            return Err(Error::InvalidParams("cutoff_voltage must be finite".into()));
        }
        let c = &self.ocv_curve;
        if c.len() < 2 || c.iter().any(|(s, v)| !s.is_finite() || !v.is_finite()) {
            return Err(Error::InvalidParams("ocv curve needs at least 2 finite points".into()));
        }
        if c.windows(2).any(|w| w[1].0 <= w[0].0 || w[1].1 <= w[0].1) {
            return Err(Error::InvalidParams(
                "ocv curve must be strictly increasing in state of charge and voltage".into(),
            ));
        }
        Ok(())
    }

    /// Open-circuit volts per cell, held constant beyond the table ends.
    pub fn ocv(&self, soc: f64) -> f64 {
        let c = &self.ocv_curve;
        if soc <= c[0].0 {
            return c[0].1;
        }
        if soc >= c[c.len() - 1].0 {
            return c[c.len() - 1].1;
        }
        let i = c.windows(2).position(|w| soc <= w[1].0).unwrap_or(c.len() - 2);
        let ((s0, v0), (s1, v1)) = (c[i], c[i + 1]);
        v0 + (v1 - v0) * (soc - s0) / (s1 - s0)
    }

    /// Pack terminal voltage at a state of charge and load current.
    pub fn terminal_voltage(&self, soc: f64, current: f64) -> f64 {
        self.cells_series as f64 * (self.ocv(soc) - current * self.internal_resistance)
    }

    /// Energy delivered in a vanishingly slow full discharge, Wh.
    pub fn slow_discharge_energy(&self) -> f64 {
        let c = &self.ocv_curve;
        let area: f64 = c
            .windows(2)
            .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
            .sum();
        let full = area + c[0].1 * c[0].0.max(0.0);
        self.cells_series as f64 * self.capacity * full
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DischargeSample {
    pub t: f64,
    pub soc: f64,
    pub volts: f64,
    pub amps: f64,
    pub watts: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DischargeFailure {
    pub t: f64,
    pub segment: usize,
    pub label: String,
    pub volts: f64,
}

/// Energy integrals over the run, J.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyBalance {
    /// `∫ V_terminal·I dt`.
    pub delivered: f64,
    /// `∫ I²R dt` over the whole pack.
    pub resistive_loss: f64,
    /// `∫ OCV·I dt` over the whole pack.
    pub chemical: f64,
}

impl EnergyBalance {
    /// `|delivered + loss − chemical| / chemical`; zero with no load.
    pub fn relative_error(&self) -> f64 {
        if self.chemical == 0.0 {
            return (self.delivered + self.resistive_loss).abs();
        }
        ((self.delivered + self.resistive_loss - self.chemical) / self.chemical).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DischargeResult {
    pub samples: Vec<DischargeSample>,
    pub failure: Option<DischargeFailure>,
    pub energy: EnergyBalance,
    pub final_soc: f64,
}

impl DischargeResult {
    pub fn completed(&self) -> bool {
        self.failure.is_none()
    }

    pub fn min_voltage(&self) -> f64 {
        self.samples.iter().map(|s| s.volts).fold(f64::INFINITY, f64::min)
    }

    /// CSV with header `t,soc,volts,amps,watts`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,soc,volts,amps,watts\n");
        for r in &self.samples {
            let _ = writeln!(s, "{},{},{},{},{}", r.t, r.soc, r.volts, r.amps, r.watts);
        }
        s
    }
}

/// Discharges the battery through the profile with a fixed step. Within a
/// step the current is that of the segment; a segment's last step is
/// shortened to end on the boundary. A sample is recorded at the start of
/// every step and at the end of the profile. The run always covers the whole
/// profile; the first sample below cutoff is reported as the failure.
pub fn simulate_discharge(battery: &BatteryModel, profile: &MissionProfile, dt: f64) -> Result<DischargeResult> {
    battery.validate()?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParams(format!("dt must be > 0, got {dt}")));
    }
    let cells = battery.cells_series as f64;
    let cutoff = cells * battery.cutoff_voltage;
    let capacity_as = battery.capacity * 3600.0;
    let mut samples = Vec::new();
    let mut failure: Option<DischargeFailure> = None;
    let mut energy = EnergyBalance::default();
    let mut soc = 1.0;
    let mut t_seg = 0.0;

    let mut record = |t: f64, soc: f64, amps: f64, seg: usize, failure: &mut Option<DischargeFailure>| {
        let volts = battery.terminal_voltage(soc, amps);
        samples.push(DischargeSample {
            t,
            soc,
            volts,
            amps,
            watts: volts * amps,
        });
        if failure.is_none() && volts < cutoff {
            *failure = Some(DischargeFailure {
                t,
                segment: seg,
                label: profile.segments[seg].label.clone(),
                volts,
            });
        }
    };

    for (i, seg) in profile.segments.iter().enumerate() {
        let steps = (seg.duration / dt).ceil().max(1.0) as usize;
        for k in 0..steps {
            let start = k as f64 * dt;
            let h = (seg.duration - start).min(dt);
            let amps = seg.current;
            record(t_seg + start, soc, amps, i, &mut failure);
            let soc_next = soc - amps * h / capacity_as;
            let ocv0 = cells * battery.ocv(soc);
            let ocv1 = cells * battery.ocv(soc_next);
            let chem = 0.5 * (ocv0 + ocv1) * amps * h;
            let loss = cells * amps * amps * battery.internal_resistance * h;
            energy.chemical += chem;
            energy.resistive_loss += loss;
            energy.delivered += 0.5
                * (battery.terminal_voltage(soc, amps) + battery.terminal_voltage(soc_next, amps))
                * amps
                * h;
            soc = soc_next;
        }
        t_seg += seg.duration;
        if i + 1 == profile.segments.len() {
            record(t_seg, soc, seg.current, i, &mut failure);
        }
    }
    Ok(DischargeResult {
        samples,
        failure,
        energy,
        final_soc: soc,
    })
}
