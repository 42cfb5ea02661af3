//! Scenario files: parsing, execution and output writing.
//!
//! A scenario is a config file with a `[scenario]` section naming its `kind`
//! plus the sections that kind reads. Everything is parsed and validated,
//! then computed in memory, and only then written to
//! `<output root>/<name>/`, so a failing scenario leaves no files behind.
//! Angles in scenario files are degrees (keys end in `_deg`); rates that are
//! angular are deg/s.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::aero::{power_curve, power_curve_csv, AirframeAero};
use crate::body::{doublet_response, Axis, BodyParams, CoupledModel, Doublet};
use crate::config::{parse_config, Config, Reader};
use crate::control::{AxisCoefficients, ClosedLoopExperiment, RateModel};
use crate::energy::{build_mission_profile, simulate_discharge, BatteryModel, MissionProfile};
use crate::log::{ingest_log, read_table, write_log_csv, LogFrame};
use crate::propulsion::{sweep, sweep_csv, Airfoil, BemSettings, BladeGeometry, Propeller};
use crate::rotor::{flap_trajectory_csv, integrate_flap, lock_number, steady_flap_angle, CyclicCommand, FlapState, RotorParams};
use crate::sysid::{fit_planar_power, fit_pole_drag, synthetic_rate_log, RateRegression, SyntheticLogSpec, FIT_CUTOFF};
use crate::{Error, Result, RHO_SEA_LEVEL};

/// Environment variable holding the output root directory.
pub const OUTPUT_ROOT_ENV: &str = "TAILSITTER_OUT";
const DEFAULT_OUTPUT_ROOT: &str = "out";

pub const KINDS: [&str; 9] = [
    "doublet",
    "closed_loop",
    "flap_only",
    "bem_sweep",
    "power_curve",
    "mission_energy",
    "fit_rates",
    "fit_planar",
    "fit_drag",
];

#[derive(Debug, Clone, PartialEq)]
pub enum RateSource {
    File(PathBuf),
    Synthetic { spec: SyntheticLogSpec },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Kind {
    Doublet {
        model: CoupledModel,
        doublet: Doublet,
    },
    ClosedLoop {
        experiment: ClosedLoopExperiment,
        baseline_k_c: f64,
    },
    FlapOnly {
        rotor: RotorParams,
        initial: FlapState,
        command: CyclicCommand,
        dt: f64,
        steps: usize,
    },
    BemSweep {
        propeller: Propeller,
        rpms: Vec<f64>,
        pitches: Vec<f64>,
        speeds: Vec<f64>,
        rho: f64,
    },
    PowerCurve {
        aero: AirframeAero,
        mass: f64,
        rho: f64,
        speeds: Vec<f64>,
    },
    MissionEnergy {
        profile: MissionProfile,
        batteries: Vec<BatteryModel>,
        dt: f64,
    },
    FitRates {
        source: RateSource,
        model: RateModel,
        cutoff: f64,
        noise: f64,
    },
    FitPlanar {
        input: PathBuf,
    },
    FitDrag {
        input: PathBuf,
        rho: f64,
    },
}

impl Kind {
    pub fn name(&self) -> &'static str {
        match self {
            Kind::Doublet { .. } => "doublet",
            Kind::ClosedLoop { .. } => "closed_loop",
            Kind::FlapOnly { .. } => "flap_only",
            Kind::BemSweep { .. } => "bem_sweep",
            Kind::PowerCurve { .. } => "power_curve",
            Kind::MissionEnergy { .. } => "mission_energy",
            Kind::FitRates { .. } => "fit_rates",
            Kind::FitPlanar { .. } => "fit_planar",
            Kind::FitDrag { .. } => "fit_drag",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub kind: Kind,
}

fn cfg_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Config {
        line,
        msg: msg.into(),
    }
}

/// Maps parameter validation failures onto config errors.
fn as_config<T>(r: Result<T>, section: &str) -> Result<T> {
    r.map_err(|e| match e {
        Error::InvalidParams(m) => cfg_err(0, format!("[{section}] {m}")),
        Error::OutOfRange { what, value, min, max } => {
            cfg_err(0, format!("[{section}] {what} = {value} outside [{min}, {max}]"))
        }
        Error::SingularMatrix { det } => {
            cfg_err(0, format!("[{section}] control effectiveness is singular (det {det:e})"))
        }
        Error::StepTooLarge { ratio, limit } => {
            cfg_err(0, format!("[{section}] step too large: dt·Ω = {ratio} exceeds {limit}"))
        }
        other => other,
    })
}

fn positive(r: &Reader, key: &str, v: f64) -> Result<f64> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(cfg_err(r.line(), format!("[{}] '{key}' must be > 0, got {v}", r.name())))
    }
}

fn parse_axis(r: &mut Reader, default: Axis) -> Result<Axis> {
    match r.string("axis") {
        None => Ok(default),
        Some(s) => s
            .parse()
            .map_err(|_| cfg_err(r.line(), format!("[{}] axis must be roll or pitch, got '{s}'", r.name()))),
    }
}

fn parse_rotor(c: &mut Config) -> Result<RotorParams> {
    let mut r = c.take_or_empty("rotor");
    let d = RotorParams::default();
    let radius = r.f64_or("radius", d.radius)?;
    let blade_mass = r.f64_or("blade_mass", d.blade_mass)?;
    let rotor = RotorParams {
        radius,
        blade_mass,
        flap_inertia: r.f64_or("flap_inertia", blade_mass * radius * radius / 3.0)?,
        hinge_spring: r.f64_or("hinge_spring", d.hinge_spring)?,
        lift_slope: r.f64_or("lift_slope", d.lift_slope)?,
        mean_chord: r.f64_or("chord", d.mean_chord)?,
        air_density: r.f64_or("air_density", d.air_density)?,
        rpm_nominal: r.f64_or("rpm", d.rpm_nominal)?,
    };
    r.finish()?;
    as_config(rotor.validate(), "rotor")?;
    Ok(rotor)
}

fn parse_body(c: &mut Config) -> Result<BodyParams> {
    let mut r = c.take_or_empty("body");
    let d = BodyParams::default();
    let body = BodyParams {
        ixx: r.f64_or("ixx", d.ixx)?,
        iyy: r.f64_or("iyy", d.iyy)?,
        izz: r.f64_or("izz", d.izz)?,
        mass_total: r.f64_or("mass", d.mass_total)?,
        rotor_offset_z: r.f64_or("rotor_offset", d.rotor_offset_z)?,
    };
    r.finish()?;
    as_config(body.validate(), "body")?;
    Ok(body)
}

fn parse_coupled(c: &mut Config) -> Result<CoupledModel> {
    let rotor = parse_rotor(c)?;
    let body = parse_body(c)?;
    let mut m = CoupledModel::new(rotor, body);
    let mut r = c.take_or_empty("coupling");
    m.blade_count = r.usize_or("blades", m.blade_count)?;
    m.thrust = r.f64_or("thrust", m.thrust)?;
    m.actuator_lag = r.f64_or("actuator_lag", m.actuator_lag)?;
    m.command_limit = r.angle_or("command_limit_deg", m.command_limit)?;
    r.finish()?;
    as_config(m.validate(), "coupling")?;
    Ok(m)
}

fn parse_axis_coefficients(r: &mut Reader, key: &str, default: AxisCoefficients) -> Result<AxisCoefficients> {
    match r.list(key)? {
        None => Ok(default),
        Some(v) if v.len() == 5 => Ok(AxisCoefficients {
            offset: v[0],
            delta_x: v[1],
            delta_y: v[2],
            p: v[3],
            q: v[4],
        }),
        Some(v) => Err(cfg_err(
            r.line(),
            format!("[rate_model] '{key}' needs 5 values (offset, dx, dy, p, q), got {}", v.len()),
        )),
    }
}

fn parse_rate_model(c: &mut Config) -> Result<RateModel> {
    let mut r = c.take_or_empty("rate_model");
    let d = RateModel::identified();
    let m = RateModel {
        roll: parse_axis_coefficients(&mut r, "roll", d.roll)?,
        pitch: parse_axis_coefficients(&mut r, "pitch", d.pitch)?,
        k_c: r.f64_or("k_c", d.k_c)?,
        k_p: r.f64_or("k_p", d.k_p)?,
        k_q: r.f64_or("k_q", d.k_q)?,
    };
    r.finish()?;
    as_config(m.validate(), "rate_model")?;
    Ok(m)
}

fn parse_doublet(c: &mut Config) -> Result<Kind> {
    let model = parse_coupled(c)?;
    let mut r = c.require("doublet")?;
    let axis = parse_axis(&mut r, Axis::Pitch)?;
    let amplitude = r
        .f64("amplitude_deg")?
        .map(f64::to_radians)
        .ok_or_else(|| cfg_err(r.line(), "[doublet] missing required key 'amplitude_deg'"))?;
    let duration = r.require_f64("duration")?;
    let duration = positive(&r, "duration", duration)?;
    let mut doublet = Doublet::new(axis, amplitude, duration);
    doublet.settle = r.f64_or("settle", 0.0)?;
    doublet.dt = r.f64_or("dt", doublet.dt)?;
    positive(&r, "dt", doublet.dt)?;
    doublet.initial_azimuth = r.angle_or("initial_azimuth_deg", 0.0)?;
    doublet.collective = r.angle_or("collective_deg", 0.0)?;
    r.finish()?;
    as_config(
        crate::rotor::check_resolution(doublet.dt, model.rotor.omega_nominal()),
        "doublet",
    )?;
    Ok(Kind::Doublet { model, doublet })
}

fn parse_closed_loop(c: &mut Config) -> Result<Kind> {
    let model = parse_rate_model(c)?;
    let mut r = c.take_or_empty("closed_loop");
    let mut e = ClosedLoopExperiment::new(model);
    e.plant = model;
    e.axis = parse_axis(&mut r, Axis::Pitch)?;
    e.amplitude = r.angle_or("amplitude_deg", e.amplitude)?;
    e.duration = r.f64_or("duration", e.duration)?;
    e.settle = r.f64_or("settle", e.settle)?;
    e.rate_hz = r.f64_or("rate_hz", e.rate_hz)?;
    e.feedback_cutoff = r.f64_or("feedback_cutoff", e.feedback_cutoff)?;
    e.actuator_lag = r.f64_or("actuator_lag", e.actuator_lag)?;
    let baseline_k_c = r.f64_or("baseline_k_c", 0.0)?;
    r.finish()?;
    as_config(e.validate(), "closed_loop")?;
    as_config(model.with_blend(baseline_k_c).validate(), "closed_loop")?;
    as_config(
        crate::sysid::SecondOrderLowPass::new(e.feedback_cutoff, 1.0 / e.rate_hz).map(|_| ()),
        "closed_loop",
    )
    .map_err(|err| match err {
        Error::UnstableFilter { product } => cfg_err(
            0,
            format!("[closed_loop] feedback_cutoff/rate_hz = {product} must be < 1"),
        ),
        other => other,
    })?;
    Ok(Kind::ClosedLoop {
        experiment: e,
        baseline_k_c,
    })
}

fn parse_flap(c: &mut Config) -> Result<Kind> {
    let rotor = parse_rotor(c)?;
    let mut r = c.take_or_empty("flap");
    let rpm = r.f64_or("rpm", rotor.rpm_nominal)?;
    let omega = positive(&r, "rpm", rpm)? * std::f64::consts::PI / 30.0;
    let initial = as_config(
        FlapState::new(
            r.angle_or("beta_deg", 0.0)?,
            r.angle_or("beta_dot_deg", 0.0)?,
            r.angle_or("psi_deg", 0.0)?,
            omega,
        ),
        "flap",
    )?;
    let command = CyclicCommand::new(
        r.angle_or("delta_p_deg", 0.0)?,
        r.angle_or("delta_q_deg", 0.0)?,
        r.angle_or("collective_deg", 0.0)?,
    );
    let dt = r.f64_or("dt", 2.5e-4)?;
    positive(&r, "dt", dt)?;
    let duration = r.f64_or("duration", 1.0)?;
    positive(&r, "duration", duration)?;
    r.finish()?;
    as_config(crate::rotor::check_resolution(dt, omega), "flap")?;
    Ok(Kind::FlapOnly {
        rotor,
        initial,
        command,
        dt,
        steps: (duration / dt).round().max(1.0) as usize,
    })
}

fn parse_propeller(c: &mut Config) -> Result<Propeller> {
    let mut r = c.take_or_empty("propeller");
    let geometry = match r.tuples("stations", 3)? {
        None => BladeGeometry::default(),
        Some(t) => as_config(
            BladeGeometry::new(t.into_iter().map(|v| (v[0], v[1], v[2])).collect()),
            "propeller",
        )?,
    };
    let da = Airfoil::default();
    let airfoil = Airfoil {
        lift_slope: r.f64_or("lift_slope", da.lift_slope)?,
        alpha_zero: r.angle_or("alpha_zero_deg", da.alpha_zero)?,
        stall_angle: r.angle_or("stall_deg", da.stall_angle)?,
        blend_width: r.angle_or("blend_deg", da.blend_width)?,
        cd0: r.f64_or("cd0", da.cd0)?,
        cd2: r.f64_or("cd2", da.cd2)?,
    };
    let ds = BemSettings::default();
    let settings = BemSettings {
        blades: r.usize_or("blades", ds.blades)?,
        annuli: r.usize_or("annuli", ds.annuli)?,
        relaxation: r.f64_or("relaxation", ds.relaxation)?,
        tolerance: r.f64_or("tolerance", ds.tolerance)?,
        max_iterations: r.usize_or("max_iterations", ds.max_iterations)?,
        tip_loss: r.bool_or("tip_loss", ds.tip_loss)?,
    };
    r.finish()?;
    let p = Propeller {
        geometry,
        airfoil,
        settings,
    };
    as_config(p.validate(), "propeller")?;
    Ok(p)
}

fn nonempty(r: &Reader, key: &str, v: Option<Vec<f64>>, default: Vec<f64>) -> Result<Vec<f64>> {
    let v = v.unwrap_or(default);
    if v.is_empty() {
        return Err(cfg_err(r.line(), format!("[{}] '{key}' must not be empty", r.name())));
    }
    Ok(v)
}

fn parse_bem(c: &mut Config) -> Result<Kind> {
    let propeller = parse_propeller(c)?;
    let mut r = c.take_or_empty("sweep");
    let rpms = r.list("rpm")?;
    let rpms = nonempty(&r, "rpm", rpms, vec![500.0, 910.0, 1140.0, 1500.0])?;
    let pitches = r.list("pitch_deg")?;
    let pitches = nonempty(&r, "pitch_deg", pitches, vec![10.0, 23.0, 30.0, 50.0])?;
    let speeds = r.list("airspeed")?;
    let speeds = nonempty(&r, "airspeed", speeds, vec![0.0])?;
    let rho = r.f64_or("rho", RHO_SEA_LEVEL)?;
    positive(&r, "rho", rho)?;
    if rpms.iter().any(|&v| v < 0.0) || speeds.iter().any(|&v| v < 0.0) {
        return Err(cfg_err(r.line(), "[sweep] rpm and airspeed must be >= 0"));
    }
    r.finish()?;
    Ok(Kind::BemSweep {
        propeller,
        rpms,
        pitches,
        speeds,
        rho,
    })
}

fn parse_power(c: &mut Config) -> Result<Kind> {
    let mut r = c.take_or_empty("airframe");
    let d = AirframeAero::default();
    let wing_area = r.f64_or("wing_area", d.wing_area)?;
    let aspect_ratio = match (r.f64("span")?, r.f64("aspect_ratio")?) {
        (Some(_), Some(_)) => {
            return Err(cfg_err(r.line(), "[airframe] give either span or aspect_ratio, not both"))
        }
        (Some(span), None) => AirframeAero::aspect_ratio_from_span(span, wing_area),
        (None, Some(ar)) => ar,
        (None, None) => d.aspect_ratio,
    };
    let aero = AirframeAero {
        wing_area,
        aspect_ratio,
        oswald: r.f64_or("oswald", d.oswald)?,
        cd0_clean: r.f64_or("cd0_clean", d.cd0_clean)?,
        cd0_protrusions: r.f64_or("cd0_protrusions", d.cd0_protrusions)?,
        cl_max: r.f64_or("cl_max", d.cl_max)?,
    };
    r.finish()?;
    as_config(aero.validate(), "airframe")?;
    let mut r = c.take_or_empty("power_curve");
    let mass = r.f64_or("mass", 4.5)?;
    positive(&r, "mass", mass)?;
    let rho = r.f64_or("rho", RHO_SEA_LEVEL)?;
    positive(&r, "rho", rho)?;
    let v_min = r.f64_or("v_min", 5.0)?;
    let v_max = r.f64_or("v_max", 35.0)?;
    let v_step = r.f64_or("v_step", 0.5)?;
    positive(&r, "v_step", v_step)?;
    if !(v_max >= v_min) || v_min < 0.0 {
        return Err(cfg_err(r.line(), "[power_curve] need 0 <= v_min <= v_max"));
    }
    r.finish()?;
    let n = ((v_max - v_min) / v_step + 1e-9).floor() as usize;
    let speeds = (0..=n).map(|k| v_min + k as f64 * v_step).collect();
    Ok(Kind::PowerCurve {
        aero,
        mass,
        rho,
        speeds,
    })
}

fn parse_battery(mut r: Reader) -> Result<BatteryModel> {
    let label = r.name().trim_start_matches("battery.").to_string();
    let mut b = match r.string("preset").as_deref() {
        None | Some("lipo") => BatteryModel::lipo_reference(),
        Some("li_ion") => BatteryModel::li_ion_reference(),
        Some(other) => {
            return Err(cfg_err(
                r.line(),
                format!("[{}] unknown preset '{other}' (lipo, li_ion)", r.name()),
            ))
        }
    };
    b.name = label;
    b.cells_series = u32::try_from(r.u64_or("cells", b.cells_series as u64)?)
        .map_err(|_| cfg_err(r.line(), "cells too large"))?;
    b.capacity = r.f64_or("capacity_ah", b.capacity)?;
    b.internal_resistance = r.f64_or("resistance", b.internal_resistance)?;
    b.cutoff_voltage = r.f64_or("cutoff", b.cutoff_voltage)?;
    if let Some(t) = r.tuples("ocv", 2)? {
        b.ocv_curve = t.into_iter().map(|v| (v[0], v[1])).collect();
    }
    let name = r.name().to_string();
    r.finish()?;
    as_config(b.validate(), &name)?;
    Ok(b)
}

fn parse_mission(c: &mut Config) -> Result<Kind> {
    let mut r = c.take_or_empty("mission");
    let hover = r.f64_or("hover_current", 23.0)?;
    let cruise = r.f64_or("cruise_current", 12.0)?;
    let wait = r.f64_or("wait_current", 1.0)?;
    let dt = r.f64_or("dt", 1.0)?;
    positive(&r, "dt", dt)?;
    r.finish()?;
    let profile = as_config(build_mission_profile(hover, cruise, wait), "mission")?;
    let sections = c.take_prefixed("battery.");
    let batteries = if sections.is_empty() {
        vec![BatteryModel::lipo_reference(), BatteryModel::li_ion_reference()]
    } else {
        sections.into_iter().map(parse_battery).collect::<Result<Vec<_>>>()?
    };
    Ok(Kind::MissionEnergy {
        profile,
        batteries,
        dt,
    })
}

fn input_path(r: &mut Reader, base: &Path) -> Result<PathBuf> {
    let p = r.require_string("input")?;
    let p = PathBuf::from(p);
    Ok(if p.is_absolute() { p } else { base.join(p) })
}

fn parse_fit_rates(c: &mut Config, base: &Path, seed: u64) -> Result<Kind> {
    let model = parse_rate_model(c)?;
    let mut r = c.take_or_empty("fit");
    let input = r.string("input");
    let cutoff = r.f64_or("cutoff", FIT_CUTOFF)?;
    positive(&r, "cutoff", cutoff)?;
    let noise = r.f64_or("noise", 0.0)?;
    if noise < 0.0 {
        return Err(cfg_err(r.line(), "[fit] noise must be >= 0"));
    }
    r.finish()?;
    let source = match input {
        Some(p) => {
            if c.section("synthetic").is_some() {
                return Err(cfg_err(
                    c.section("synthetic").map_or(0, |s| s.line),
                    "[synthetic] conflicts with [fit] input",
                ));
            }
            let p = PathBuf::from(p);
            RateSource::File(if p.is_absolute() { p } else { base.join(p) })
        }
        None => {
            let mut r = c.take_or_empty("synthetic");
            let d = SyntheticLogSpec::default();
            let spec = SyntheticLogSpec {
                duration: r.f64_or("duration", d.duration)?,
                rate_hz: r.f64_or("rate_hz", d.rate_hz)?,
                rpm: r.f64_or("rpm", d.rpm)?,
                lead_in: r.f64_or("lead_in", d.lead_in)?,
                seed,
            };
            positive(&r, "duration", spec.duration)?;
            positive(&r, "rate_hz", spec.rate_hz)?;
            if spec.lead_in < 0.0 {
                return Err(cfg_err(r.line(), "[synthetic] lead_in must be >= 0"));
            }
            if cutoff / spec.rate_hz >= 1.0 {
                return Err(cfg_err(r.line(), "[synthetic] rate_hz too low for the fit cutoff"));
            }
            r.finish()?;
            RateSource::Synthetic { spec }
        }
    };
    Ok(Kind::FitRates {
        source,
        model,
        cutoff,
        noise,
    })
}

fn parse_fit_planar(c: &mut Config, base: &Path) -> Result<Kind> {
    let mut r = c.require("fit")?;
    let input = input_path(&mut r, base)?;
    r.finish()?;
    Ok(Kind::FitPlanar { input })
}

fn parse_fit_drag(c: &mut Config, base: &Path) -> Result<Kind> {
    let mut r = c.require("fit")?;
    let input = input_path(&mut r, base)?;
    let rho = r.f64_or("rho", RHO_SEA_LEVEL)?;
    positive(&r, "rho", rho)?;
    r.finish()?;
    Ok(Kind::FitDrag { input, rho })
}

impl Scenario {
    /// Parses scenario text. Relative input paths resolve against `base`;
    /// `default_name` is used when `[scenario]` has no `name`. When
    /// `forced_kind` is given the file may omit `kind`, but must not name a
    /// different one.
    pub fn from_config_text(
        text: &str,
        base: &Path,
        default_name: &str,
        forced_kind: Option<&str>,
    ) -> Result<Self> {
        let mut c = parse_config(text)?;
        let mut head = match forced_kind {
            Some(_) => c.take_or_empty("scenario"),
            None => c.require("scenario")?,
        };
        let kind = match (head.string("kind"), forced_kind) {
            (Some(k), Some(f)) if k != f => {
                return Err(cfg_err(head.line(), format!("scenario kind '{k}' cannot be used as '{f}'")))
            }
            (Some(k), _) => k,
            (None, Some(f)) => f.to_string(),
            (None, None) => return Err(cfg_err(head.line(), "[scenario] missing required key 'kind'")),
        };
        let name = head.string("name").unwrap_or_else(|| default_name.to_string());
        if name.is_empty()
            || !name
                .chars()
                .all(|ch| ch.is_ascii_alphanumeric() || matches!(ch, '_' | '-' | '.'))
            || name.starts_with('.')
        {
            return Err(cfg_err(head.line(), format!("invalid scenario name '{name}'")));
        }
        let seed = head.u64_or("seed", 0)?;
        head.finish()?;
        let kind = match kind.as_str() {
            "doublet" => parse_doublet(&mut c)?,
            "closed_loop" => parse_closed_loop(&mut c)?,
            "flap_only" => parse_flap(&mut c)?,
            "bem_sweep" => parse_bem(&mut c)?,
            "power_curve" => parse_power(&mut c)?,
            "mission_energy" => parse_mission(&mut c)?,
            "fit_rates" => parse_fit_rates(&mut c, base, seed)?,
            "fit_planar" => parse_fit_planar(&mut c, base)?,
            "fit_drag" => parse_fit_drag(&mut c, base)?,
            other => {
                return Err(cfg_err(
                    0,
                    format!("unknown scenario kind '{other}' (one of {})", KINDS.join(", ")),
                ))
            }
        };
        c.finish()?;
        Ok(Self { name, seed, kind })
    }

    /// Reads and parses a scenario file. Unreadable files are config errors.
    pub fn load(path: impl AsRef<Path>, forced_kind: Option<&str>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| cfg_err(0, format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("scenario");
        Self::from_config_text(&text, base, stem, forced_kind)
    }
}

/// Computed artifacts of a scenario, not yet written.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Outputs {
    /// `(file name, contents)`.
    pub files: Vec<(String, String)>,
    /// Ordered `key = value` summary entries.
    pub summary: Vec<(String, String)>,
}

impl Outputs {
    fn put(&mut self, key: impl Into<String>, value: impl ToString) {
        self.summary.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.summary
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn summary_text(&self, scenario: &Scenario) -> String {
        let mut s = format!("[summary]\nscenario = {}\nkind = {}\n", scenario.name, scenario.kind.name());
        for (k, v) in &self.summary {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

fn run_rate_fit(source: &RateSource, model: &RateModel, cutoff: f64, noise: f64, seed: u64, out: &mut Outputs) -> Result<()> {
    let log: Vec<LogFrame> = match source {
        RateSource::File(p) => ingest_log(p)?,
        RateSource::Synthetic { spec } => {
            let log = synthetic_rate_log(model, spec)?;
            out.files.push(("log.csv".into(), write_log_csv(&log)));
            log
        }
    };
    let mut reg = RateRegression::from_log(&log, cutoff)?;
    if noise > 0.0 {
        reg.add_acceleration_noise(noise, seed);
    }
    let fit = reg.solve()?;
    out.files.push(("fit.csv".into(), fit.to_csv()));
    out.put("samples", fit.samples);
    for (axis, c, rms) in [
        ("p", &fit.model.roll, fit.residual_rms_p),
        ("q", &fit.model.pitch, fit.residual_rms_q),
    ] {
        out.put(format!("f_{axis}.C_O"), c.offset);
        out.put(format!("f_{axis}.C_dx"), c.delta_x);
        out.put(format!("f_{axis}.C_dy"), c.delta_y);
        out.put(format!("f_{axis}.C_p"), c.p);
        out.put(format!("f_{axis}.C_q"), c.q);
        out.put(format!("f_{axis}.residual_rms"), rms);
    }
    Ok(())
}

/// Executes a scenario in memory.
pub fn run_scenario(s: &Scenario) -> Result<Outputs> {
    let mut out = Outputs::default();
    match &s.kind {
        Kind::Doublet { model, doublet } => {
            let trace = doublet_response(model, doublet)?;
            out.files.push(("trace.csv".into(), trace.to_csv()));
            out.put("samples", trace.samples.len());
            out.put("peak_abs_p", trace.peak_abs_p());
            out.put("peak_abs_q", trace.peak_abs_q());
            out.put("rms_p", trace.rms_p());
            out.put("rms_q", trace.rms_q());
        }
        Kind::ClosedLoop {
            experiment,
            baseline_k_c,
        } => {
            let trace = experiment.run()?;
            let mut base = experiment.clone();
            base.controller = experiment.controller.with_blend(*baseline_k_c);
            let baseline = base.run()?;
            out.files.push(("trace.csv".into(), trace.to_csv()));
            out.files.push(("baseline_trace.csv".into(), baseline.to_csv()));
            let (c, b) = (trace.cross_axis_rms(), baseline.cross_axis_rms());
            out.put("k_c", experiment.controller.k_c);
            out.put("baseline_k_c", baseline_k_c);
            out.put("cross_axis_rms", c);
            out.put("baseline_cross_axis_rms", b);
            out.put("cross_axis_fraction", c / b);
            out.put("cross_axis_reduction", b / c);
            out.put("tracking_rms", trace.tracking_rms());
        }
        Kind::FlapOnly {
            rotor,
            initial,
            command,
            dt,
            steps,
        } => {
            let samples = integrate_flap(*initial, rotor, command, *dt, *steps)?;
            out.files.push(("flap.csv".into(), flap_trajectory_csv(&samples)));
            let last = samples[samples.len() - 1].state;
            out.put("lock_number", lock_number(rotor)?);
            out.put(
                "steady_beta_collective_deg",
                steady_flap_angle(rotor, initial.omega, command.collective)?.to_degrees(),
            );
            out.put("final_beta_deg", last.beta.to_degrees());
            out.put("final_beta_dot_deg", last.beta_dot.to_degrees());
            out.put("steps", steps);
        }
        Kind::BemSweep {
            propeller,
            rpms,
            pitches,
            speeds,
            rho,
        } => {
            let rows = sweep(propeller, rpms, pitches, speeds, *rho)?;
            out.files.push(("bem.csv".into(), sweep_csv(&rows)));
            out.put("points", rows.len());
            let best = rows
                .iter()
                .max_by(|a, b| a.perf.thrust.total_cmp(&b.perf.thrust))
                .map(|r| r.perf.thrust)
                .unwrap_or(0.0);
            out.put("max_thrust", best);
        }
        Kind::PowerCurve {
            aero,
            mass,
            rho,
            speeds,
        } => {
            let pts = power_curve(aero, speeds, *mass, *rho)?;
            out.files.push(("power.csv".into(), power_curve_csv(&pts)));
            let v_stall = aero.stall_speed(*mass, *rho);
            let v_mp = aero.min_power_speed(*mass, *rho, (4.0 * v_stall).max(50.0), 1e-4)?;
            out.put("stall_speed", v_stall);
            out.put("min_power_speed", v_mp);
            out.put("min_power", aero.required_power(v_mp, *mass, *rho)?);
            out.put("points", pts.len());
        }
        Kind::MissionEnergy {
            profile,
            batteries,
            dt,
        } => {
            out.put("charge_ah", profile.charge_ah());
            out.put("duration_min", profile.duration() / 60.0);
            out.put("segments", profile.segments.len());
            for b in batteries {
                let r = simulate_discharge(b, profile, *dt)?;
                out.files.push((format!("discharge_{}.csv", b.name), r.to_csv()));
                let key = |k: &str| format!("{}.{k}", b.name);
                out.put(key("completed"), r.completed());
                if let Some(f) = &r.failure {
                    out.put(key("failure_t"), f.t);
                    out.put(key("failure_segment"), f.segment);
                    out.put(key("failure_label"), &f.label);
                }
                out.put(key("min_volts"), r.min_voltage());
                out.put(key("final_soc"), r.final_soc);
                out.put(key("slow_discharge_wh"), b.slow_discharge_energy());
                out.put(key("energy_balance_error"), r.energy.relative_error());
            }
        }
        Kind::FitRates {
            source,
            model,
            cutoff,
            noise,
        } => run_rate_fit(source, model, *cutoff, *noise, s.seed, &mut out)?,
        Kind::FitPlanar { input } => {
            let rows = read_table(input, &["pitch", "throttle", "power"])?;
            let samples: Vec<(f64, f64, f64)> = rows.iter().map(|r| (r[0], r[1], r[2])).collect();
            let fit = fit_planar_power(&samples)?;
            out.files.push((
                "fit.csv".into(),
                format!(
                    "a0,a_pitch,a_throttle,residual_rms\n{},{},{},{}\n",
                    fit.a0, fit.a_pitch, fit.a_throttle, fit.residual_rms
                ),
            ));
            out.put("samples", samples.len());
            out.put("a0", fit.a0);
            out.put("a_pitch", fit.a_pitch);
            out.put("a_throttle", fit.a_throttle);
            out.put("residual_rms", fit.residual_rms);
        }
        Kind::FitDrag { input, rho } => {
            let rows = read_table(input, &["V", "D"])?;
            let samples: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
            let fit = fit_pole_drag(&samples, *rho)?;
            let mut csv = String::from("V,D,D_fit\n");
            for &(v, d) in samples.iter().filter(|(v, _)| *v > 0.0) {
                let _ = writeln!(csv, "{v},{d},{}", fit.drag(v));
            }
            out.files.push(("fit.csv".into(), csv));
            out.put("samples", fit.samples);
            out.put("k", fit.k);
            out.put("rho", fit.rho);
            out.put("residual_rms", fit.residual_rms);
        }
    }
    Ok(out)
}

/// Output root from the environment, defaulting to `out`.
pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT))
}

/// Writes the artifacts and `summary.txt` into `<root>/<name>/`.
pub fn write_outputs(root: &Path, scenario: &Scenario, out: &Outputs) -> Result<PathBuf> {
    let dir = root.join(&scenario.name);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    for (name, contents) in &out.files {
        let p = dir.join(name);
        std::fs::write(&p, contents).map_err(|e| Error::io(&p, e))?;
    }
    let p = dir.join("summary.txt");
    std::fs::write(&p, out.summary_text(scenario)).map_err(|e| Error::io(&p, e))?;
    Ok(dir)
}
