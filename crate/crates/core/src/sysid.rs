//! Identification pipeline: low-pass filtering, numerical differentiation and
//! the least-squares fits for the linear rate model, the planar power map and
//! the pole drag.
//!
//! The rate model regresses angular accelerations on
//! `[1, δx, δy, p, q]` separately per axis. Every channel is passed through
//! the same causal critically damped second-order low-pass before the
//! accelerations are taken by central differences, so filtering happens
//! first and the linear relation between the channels is preserved.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::control::{AxisCoefficients, RateModel};
use crate::linalg::{least_squares, Method};
use crate::log::LogFrame;
use crate::{Error, Result};

/// Cutoff used when fitting the rate model, rad/s.
pub const FIT_CUTOFF: f64 = 15.0;

/// Largest tolerated deviation of a sample interval from the mean interval,
/// relative.
const SAMPLING_JITTER: f64 = 0.05;

/// Critically damped second-order low-pass `ωc²/(s + ωc)²`, discretised with
/// the pre-warped bilinear transform so the pole frequency is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderLowPass {
    b: [f64; 3],
    a: [f64; 2],
    x: [f64; 2],
    y: [f64; 2],
    primed: bool,
}

impl SecondOrderLowPass {
    pub fn new(cutoff: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParams(format!("filter dt must be > 0, got {dt}")));
        }
        if !(cutoff > 0.0) || !cutoff.is_finite() {
            return Err(Error::InvalidParams(format!("filter cutoff must be > 0, got {cutoff}")));
        }
        let product = cutoff * dt;
        if product >= 1.0 {
            return Err(Error::UnstableFilter { product });
        }
        let k = cutoff / (0.5 * cutoff * dt).tan();
        let a = k + cutoff;
        let b = cutoff - k;
        let g = cutoff * cutoff / (a * a);
        Ok(Self {
            b: [g, 2.0 * g, g],
            a: [2.0 * b / a, b * b / (a * a)],
            x: [0.0; 2],
            y: [0.0; 2],
            primed: false,
        })
    }

    /// Sets the internal state to the steady state for a constant input.
    pub fn reset_to(&mut self, value: f64) {
        self.x = [value; 2];
        self.y = [value; 2];
        self.primed = true;
    }

    /// Filters one sample. The first sample primes the state at steady state.
    pub fn step(&mut self, input: f64) -> f64 {
        if !self.primed {
            self.reset_to(input);
        }
        let out = self.b[0] * input + self.b[1] * self.x[0] + self.b[2] * self.x[1]
            - self.a[0] * self.y[0]
            - self.a[1] * self.y[1];
        self.x = [input, self.x[0]];
        self.y = [out, self.y[0]];
        out
    }
}

/// Filters a uniformly sampled series, starting at steady state on the first
/// sample.
pub fn filter_second_order(signal: &[f64], cutoff: f64, dt: f64) -> Result<Vec<f64>> {
    let mut f = SecondOrderLowPass::new(cutoff, dt)?;
    Ok(signal.iter().map(|&x| f.step(x)).collect())
}

/// Central differences on non-uniform abscissae; one-sided at the ends.
fn differentiate(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = y.len();
    (0..n)
        .map(|k| {
            let (lo, hi) = if k == 0 {
                (0, 1)
            } else if k == n - 1 {
                (n - 2, n - 1)
            } else {
                (k - 1, k + 1)
            };
            (y[hi] - y[lo]) / (t[hi] - t[lo])
        })
        .collect()
}

fn mean_interval(t: &[f64]) -> Result<f64> {
    let n = t.len();
    let dt = (t[n - 1] - t[0]) / (n - 1) as f64;
    for w in t.windows(2) {
        let d = w[1] - w[0];
        if !(d > 0.0) || (d - dt).abs() > SAMPLING_JITTER * dt {
            return Err(Error::DegenerateSamples(format!(
                "log is not uniformly sampled: interval {d} vs mean {dt}"
            )));
        }
    }
    Ok(dt)
}

/// Filtered channels and angular accelerations derived from a log.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedRates {
    pub t: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub delta_x: Vec<f64>,
    pub delta_y: Vec<f64>,
    pub p_dot: Vec<f64>,
    pub q_dot: Vec<f64>,
}

/// Filters rates and commands at `cutoff` and differentiates the filtered
/// rates by central differences.
pub fn derive_rates(log: &[LogFrame], cutoff: f64) -> Result<DerivedRates> {
    if log.len() < 3 {
        return Err(Error::TooFewFrames {
            got: log.len(),
            need: 3,
        });
    }
    let t: Vec<f64> = log.iter().map(|f| f.t).collect();
    let dt = mean_interval(&t)?;
    let channel = |get: fn(&LogFrame) -> f64| -> Result<Vec<f64>> {
        let raw: Vec<f64> = log.iter().map(get).collect();
        filter_second_order(&raw, cutoff, dt)
    };
    let p = channel(|f| f.p)?;
    let q = channel(|f| f.q)?;
    let delta_x = channel(|f| f.delta_x)?;
    let delta_y = channel(|f| f.delta_y)?;
    let p_dot = differentiate(&t, &p);
    let q_dot = differentiate(&t, &q);
    Ok(DerivedRates {
        t,
        p,
        q,
        delta_x,
        delta_y,
        p_dot,
        q_dot,
    })
}

/// Regression data for the two rate-model axes. Only interior samples (where
/// the central difference applies) are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRegression {
    /// Rows of `[1, δx, δy, p, q]`.
    pub regressors: Vec<[f64; 5]>,
    pub p_dot: Vec<f64>,
    pub q_dot: Vec<f64>,
}

impl RateRegression {
    pub fn from_derived(d: &DerivedRates) -> Self {
        let n = d.t.len();
        let idx = 1..n.saturating_sub(1);
        Self {
            regressors: idx
                .clone()
                .map(|k| [1.0, d.delta_x[k], d.delta_y[k], d.p[k], d.q[k]])
                .collect(),
            p_dot: d.p_dot[idx.clone()].to_vec(),
            q_dot: d.q_dot[idx].to_vec(),
        }
    }

    pub fn from_log(log: &[LogFrame], cutoff: f64) -> Result<Self> {
        Ok(Self::from_derived(&derive_rates(log, cutoff)?))
    }

    /// Adds zero-mean Gaussian noise to the accelerations with a standard
    /// deviation of `level` times each axis' RMS acceleration.
    pub fn add_acceleration_noise(&mut self, level: f64, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for series in [&mut self.p_dot, &mut self.q_dot] {
            let rms = crate::body::rms(series.iter().copied());
            if let Ok(normal) = Normal::new(0.0, level * rms) {
                for v in series.iter_mut() {
                    *v += normal.sample(&mut rng);
                }
            }
        }
    }

    pub fn solve(&self) -> Result<RateFit> {
        let rows: Vec<Vec<f64>> = self.regressors.iter().map(|r| r.to_vec()).collect();
        let fp = least_squares(&rows, &self.p_dot)?;
        let fq = least_squares(&rows, &self.q_dot)?;
        let axis = |c: &[f64]| AxisCoefficients {
            offset: c[0],
            delta_x: c[1],
            delta_y: c[2],
            p: c[3],
            q: c[4],
        };
        Ok(RateFit {
            model: RateModel {
                roll: axis(&fp.coef),
                pitch: axis(&fq.coef),
                ..RateModel::identified()
            },
            residual_rms_p: fp.residual_rms,
            residual_rms_q: fq.residual_rms,
            samples: rows.len(),
            gram_condition: fp.gram_condition,
            pivoted_qr: fp.method == Method::PivotedQr,
            residuals_p: fp.residuals,
            residuals_q: fq.residuals,
        })
    }
}

/// Outcome of a rate-model fit. Gains and blend factor are carried over from
/// the reference model; only the ten plant coefficients are identified.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub model: RateModel,
    pub residual_rms_p: f64,
    pub residual_rms_q: f64,
    pub samples: usize,
    /// Condition number of the column-equilibrated normal matrix.
    pub gram_condition: f64,
    /// Whether the ill-conditioned fallback solver was used.
    pub pivoted_qr: bool,
    pub residuals_p: Vec<f64>,
    pub residuals_q: Vec<f64>,
}

impl RateFit {
    pub fn report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "rate model fit ({} samples, condition {:.3e}{})",
            self.samples,
            self.gram_condition,
            if self.pivoted_qr { ", pivoted QR" } else { "" }
        );
        let _ = writeln!(s, "{:<12}{:>14}{:>14}", "coefficient", "f_p", "f_q");
        let (r, p) = (&self.model.roll, &self.model.pitch);
        for (name, a, b) in [
            ("C_O", r.offset, p.offset),
            ("C_dx", r.delta_x, p.delta_x),
            ("C_dy", r.delta_y, p.delta_y),
            ("C_p", r.p, p.p),
            ("C_q", r.q, p.q),
        ] {
            let _ = writeln!(s, "{name:<12}{a:>14.6}{b:>14.6}");
        }
        let _ = writeln!(
            s,
            "{:<12}{:>14.6e}{:>14.6e}",
            "resid_rms", self.residual_rms_p, self.residual_rms_q
        );
        s
    }

    /// CSV with header `axis,offset,dx,dy,p,q,residual_rms`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("axis,offset,dx,dy,p,q,residual_rms\n");
        for (name, c, r) in [
            ("p", &self.model.roll, self.residual_rms_p),
            ("q", &self.model.pitch, self.residual_rms_q),
        ] {
            let _ = writeln!(
                s,
                "{name},{},{},{},{},{},{r}",
                c.offset, c.delta_x, c.delta_y, c.p, c.q
            );
        }
        s
    }
}

/// Fits the ten rate-model coefficients from a log.
pub fn fit_rate_model(log: &[LogFrame], cutoff: f64) -> Result<RateFit> {
    RateRegression::from_log(log, cutoff)?.solve()
}

/// Parameters of a synthetic identification log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticLogSpec {
    /// Log length, s.
    pub duration: f64,
    /// Sample rate, Hz.
    pub rate_hz: f64,
    /// Rotor speed written into the rpm channel.
    pub rpm: f64,
    /// Quiet lead-in before the excitation ramps up, s.
    pub lead_in: f64,
    pub seed: u64,
}

impl Default for SyntheticLogSpec {
    fn default() -> Self {
        Self {
            duration: 60.0,
            rate_hz: 100.0,
            rpm: 1650.0,
            lead_in: 0.5,
            seed: 1,
        }
    }
}

/// Builds a log whose samples satisfy the rate model exactly under the
/// central-difference derivative used by [`derive_rates`].
///
/// The body rates follow smooth multisine trajectories with seeded phases;
/// the cyclic commands are then obtained by inverting the model at every
/// sample, `δ = G⁻¹(a − C_O − C_p·p − C_q·q)`, with `a` the central
/// difference of the rates. The log starts at rest in trim for `lead_in`
/// seconds, which makes the steady-state filter initialisation exact.
pub fn synthetic_rate_log(model: &RateModel, spec: &SyntheticLogSpec) -> Result<Vec<LogFrame>> {
    let ginv = model.effectiveness_inverse()?;
    if !(spec.rate_hz > 0.0) || !(spec.duration > 0.0) || !(spec.lead_in >= 0.0) {
        return Err(Error::InvalidParams("synthetic log needs rate_hz, duration > 0".into()));
    }
    let dt = 1.0 / spec.rate_hz;
    let n = (spec.duration * spec.rate_hz).round() as usize;
    if n < 3 {
        return Err(Error::TooFewFrames { got: n, need: 3 });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let phase = rand_distr::Uniform::new(0.0, TAU).expect("valid range");
    // (amplitude rad/s, frequency rad/s)
    let p_tones = [(0.30, 0.7), (0.20, 1.9), (0.15, 3.1), (0.10, 4.3), (0.05, 6.1)];
    let q_tones = [(0.25, 1.1), (0.20, 2.5), (0.15, 3.7), (0.10, 5.3), (0.05, 7.3)];
    let p_phase: Vec<f64> = p_tones.iter().map(|_| phase.sample(&mut rng)).collect();
    let q_phase: Vec<f64> = q_tones.iter().map(|_| phase.sample(&mut rng)).collect();
    let ramp = 2.0;
    let window = |t: f64| {
        let x = ((t - spec.lead_in) / ramp).clamp(0.0, 1.0);
        x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
    };
    let multisine = |tones: &[(f64, f64)], phases: &[f64], t: f64| {
        let tt = t - spec.lead_in;
        tones
            .iter()
            .zip(phases)
            .map(|(&(a, w), ph)| a * ((w * tt + ph).sin() - ph.sin()))
            .sum::<f64>()
    };

    let t: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();
    let shaped = |tones: &[(f64, f64)], phases: &[f64], t: f64| match window(t) {
        0.0 => 0.0,
        w => w * multisine(tones, phases, t),
    };
    let p: Vec<f64> = t.iter().map(|&t| shaped(&p_tones, &p_phase, t)).collect();
    let q: Vec<f64> = t.iter().map(|&t| shaped(&q_tones, &q_phase, t)).collect();

    let (r, pc) = (&model.roll, &model.pitch);
    let mut frames = Vec::with_capacity(n);
    for k in 0..n {
        let (pd, qd) = if k == 0 {
            (0.0, 0.0)
        } else {
            let h = t[k + 1] - t[k - 1];
            ((p[k + 1] - p[k - 1]) / h, (q[k + 1] - q[k - 1]) / h)
        };
        let vx = pd - r.offset - r.p * p[k] - r.q * q[k];
        let vy = qd - pc.offset - pc.p * p[k] - pc.q * q[k];
        frames.push(LogFrame {
            t: t[k],
            p: p[k],
            q: q[k],
            delta_x: ginv[0][0] * vx + ginv[0][1] * vy,
            delta_y: ginv[1][0] * vx + ginv[1][1] * vy,
            rpm: Some(spec.rpm),
            ..LogFrame::default()
        });
    }
    Ok(frames)
}

/// Least-squares plane `P = a0 + a_pitch·pitch + a_throttle·throttle`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarFit {
    pub a0: f64,
    pub a_pitch: f64,
    pub a_throttle: f64,
    /// RMS of the power residuals, W.
    pub residual_rms: f64,
}

impl PlanarFit {
    pub fn predict(&self, pitch: f64, throttle: f64) -> f64 {
        self.a0 + self.a_pitch * pitch + self.a_throttle * throttle
    }

    /// Throttle that keeps the predicted power at `power` for the given
    /// pitch, i.e. a point on the iso-power line. `None` if the plane does
    /// not depend on throttle.
    pub fn iso_power_throttle(&self, power: f64, pitch: f64) -> Option<f64> {
        (self.a_throttle != 0.0)
            .then(|| (power - self.a0 - self.a_pitch * pitch) / self.a_throttle)
    }

    /// Pitch/throttle exchange rate along an iso-power line.
    pub fn exchange_rate(&self) -> Option<f64> {
        (self.a_throttle != 0.0).then(|| -self.a_pitch / self.a_throttle)
    }
}

/// Fits the planar power map to `(pitch, throttle, power)` samples.
pub fn fit_planar_power(samples: &[(f64, f64, f64)]) -> Result<PlanarFit> {
    if samples.len() < 3 {
        return Err(Error::DegenerateSamples(format!(
            "need at least 3 samples, got {}",
            samples.len()
        )));
    }
    let rows: Vec<Vec<f64>> = samples.iter().map(|&(p, t, _)| vec![1.0, p, t]).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.2).collect();
    let ls = least_squares(&rows, &y).map_err(|e| match e {
        Error::RankDeficient(m) => Error::DegenerateSamples(format!("collinear samples ({m})")),
        other => other,
    })?;
    Ok(PlanarFit {
        a0: ls.coef[0],
        a_pitch: ls.coef[1],
        a_throttle: ls.coef[2],
        residual_rms: ls.residual_rms,
    })
}

/// Drag area fit `D = (ρ/2)·V²·k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleDragFit {
    /// Drag area, m².
    pub k: f64,
    pub rho: f64,
    pub residual_rms: f64,
    pub samples: usize,
}

impl PoleDragFit {
    pub fn drag(&self, v: f64) -> f64 {
        pole_drag(v, self.rho, self.k)
    }
}

pub fn pole_drag(v: f64, rho: f64, k: f64) -> f64 {
    0.5 * rho * v * v * k
}

/// Scalar least squares for the pole drag area. Samples with `V <= 0` or
/// non-finite values are skipped.
pub fn fit_pole_drag(samples: &[(f64, f64)], rho: f64) -> Result<PoleDragFit> {
    if !(rho > 0.0) {
        return Err(Error::InvalidParams(format!("air density must be > 0, got {rho}")));
    }
    let valid: Vec<(f64, f64)> = samples
        .iter()
        .copied()
        .filter(|&(v, d)| v > 0.0 && v.is_finite() && d.is_finite())
        .collect();
    if valid.is_empty() {
        return Err(Error::NoValidSamples);
    }
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(v, d) in &valid {
        let x = 0.5 * rho * v * v;
        sxy += x * d;
        sxx += x * x;
    }
    let k = sxy / sxx;
    let rss: f64 = valid.iter().map(|&(v, d)| (d - pole_drag(v, rho, k)).powi(2)).sum();
    Ok(PoleDragFit {
        k,
        rho,
        residual_rms: (rss / valid.len() as f64).sqrt(),
        samples: valid.len(),
    })
}
