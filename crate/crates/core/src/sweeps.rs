//! One-parameter studies over the simulator.
//!
//! Every sweep holds all parameters at `base` except the one on its axis.
//! Points are independent and run in parallel; rows come back in input order
//! and do not depend on the schedule.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{beat_frequency, EnvelopeSeries};
use crate::error::{invalid, Error, Result};
use crate::integrator::{monodromy, run_to_steady_state, IntegratorConfig, SettleConfig, Simulator, SteadyStatus};
use crate::oracle;
use crate::system::{MathieuSystem, ResonatorParams};

/// Transients are integrated until they have decayed by this factor.
pub const RATIO_TRANSIENT_DECAY: f64 = 1e6;
/// Minimum analysis window of a ratio-sweep point, in drive periods.
pub const RATIO_MIN_WINDOW: usize = 1000;
/// Beat cycles covered by a ratio-sweep analysis window.
pub const RATIO_BEAT_CYCLES: f64 = 10.0;
/// Relative bracket width at which [`required_delta_curve`] stops.
pub const REQUIRED_DELTA_RTOL: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepAxis {
    /// Offset of the drive phase from the base value, degrees.
    DrivePhase,
    /// Offset of the pump phase from the base value, degrees.
    PumpPhase,
    /// Relative drive detuning `eps`: `wA = w0 (1 + eps)`, `wp = 2 wA`.
    ActuationDetune,
    /// Pump-to-drive frequency ratio `r`: `wp = r wA`, `wA = w0`.
    FrequencyRatio,
    /// Modulation depth.
    Delta,
    /// Quality factor; each point solves for the delta reaching `target_gain`.
    QRequirement,
}

impl SweepAxis {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepAxis::DrivePhase => "drive_phase_deg",
            SweepAxis::PumpPhase => "pump_phase_deg",
            SweepAxis::ActuationDetune => "detune",
            SweepAxis::FrequencyRatio => "ratio",
            SweepAxis::Delta => "delta",
            SweepAxis::QRequirement => "q_factor",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: MathieuSystem,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    /// Only used by [`SweepAxis::QRequirement`].
    pub target_gain: Option<f64>,
    pub integrator: IntegratorConfig,
    pub settle: SettleConfig,
}

impl SweepSpec {
    pub fn new(base: MathieuSystem, axis: SweepAxis, values: Vec<f64>) -> Self {
        Self {
            base,
            axis,
            values,
            target_gain: None,
            integrator: IntegratorConfig::default(),
            settle: SettleConfig::default(),
        }
    }

    pub fn with_target_gain(mut self, target_gain: f64) -> Self {
        self.target_gain = Some(target_gain);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        self.integrator.validate()?;
        self.settle.validate()?;
        if self.values.is_empty() {
            return Err(invalid("sweep values must not be empty"));
        }
        if !self.values.iter().all(|v| v.is_finite()) {
            return Err(invalid("sweep values must be finite"));
        }
        if !self.values.windows(2).all(|w| w[1] > w[0]) {
            return Err(invalid("sweep values must be strictly increasing"));
        }
        if self.axis == SweepAxis::QRequirement {
            match self.target_gain {
                Some(g) if g > 1.0 && g.is_finite() => {}
                other => return Err(invalid(format!("target gain must be > 1, got {other:?}"))),
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RowStatus {
    Settled,
    Unstable,
    MaxPeriodsReached,
    BracketFailure,
    Failed,
}

impl RowStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RowStatus::Settled => "Settled",
            RowStatus::Unstable => "Unstable",
            RowStatus::MaxPeriodsReached => "MaxPeriodsReached",
            RowStatus::BracketFailure => "BracketFailure",
            RowStatus::Failed => "Failed",
        }
    }
}

impl From<SteadyStatus> for RowStatus {
    fn from(s: SteadyStatus) -> Self {
        match s {
            SteadyStatus::Settled => RowStatus::Settled,
            SteadyStatus::Unstable => RowStatus::Unstable,
            SteadyStatus::MaxPeriodsReached => RowStatus::MaxPeriodsReached,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis_value: f64,
    /// Pumped over unpumped amplitude. For unsettled rows this is the ratio
    /// of the last envelopes; NaN when nothing was measured.
    pub gain: f64,
    pub amplitude: f64,
    pub status: RowStatus,
    pub periods_used: u64,
    /// Cycles per drive period; ratio sweeps only.
    pub beat_frequency: Option<f64>,
    pub modulation_depth: Option<f64>,
    pub oracle_gain: Option<f64>,
    /// Simulated delta reaching the target gain; Q sweeps only.
    pub required_delta: Option<f64>,
    pub oracle_delta: Option<f64>,
    pub message: Option<String>,
}

impl SweepRow {
    fn empty(axis_value: f64) -> Self {
        Self {
            axis_value,
            gain: f64::NAN,
            amplitude: f64::NAN,
            status: RowStatus::Failed,
            periods_used: 0,
            beat_frequency: None,
            modulation_depth: None,
            oracle_gain: None,
            required_delta: None,
            oracle_delta: None,
            message: None,
        }
    }

    fn failed(axis_value: f64, err: &Error) -> Self {
        Self {
            message: Some(err.to_string()),
            ..Self::empty(axis_value)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn axis_values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.axis_value).collect()
    }

    pub fn gains(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.gain).collect()
    }
}

/// Runs the sweep selected by `spec.axis`.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    match spec.axis {
        SweepAxis::DrivePhase | SweepAxis::PumpPhase => sweep_phase(spec),
        SweepAxis::ActuationDetune => sweep_detune(spec),
        SweepAxis::FrequencyRatio => sweep_ratio(spec),
        SweepAxis::Delta => sweep_delta(spec),
        SweepAxis::QRequirement => {
            spec.validate()?;
            required_delta_curve(
                &spec.base,
                &spec.values,
                spec.target_gain.unwrap_or(10.0),
                &spec.integrator,
                &spec.settle,
            )
        }
    }
}

fn check_axis(spec: &SweepSpec, allowed: &[SweepAxis]) -> Result<()> {
    spec.validate()?;
    if !allowed.contains(&spec.axis) {
        return Err(invalid(format!("axis {:?} not valid for this sweep", spec.axis)));
    }
    if !(spec.base.drive.accel_amplitude > 0.0) {
        return Err(invalid("sweeps need a non-zero drive amplitude"));
    }
    Ok(())
}

fn unpumped_amplitude(base: &MathieuSystem, cfg: &IntegratorConfig, settle: &SettleConfig) -> Result<f64> {
    let r = run_to_steady_state(&base.with_delta(0.0), cfg, settle)?;
    if r.status != SteadyStatus::Settled {
        return Err(invalid(format!(
            "unpumped reference did not settle ({})",
            r.status.as_str()
        )));
    }
    Ok(r.amplitude)
}

fn settled_row(axis_value: f64, sys: &MathieuSystem, spec: &SweepSpec, reference: f64) -> SweepRow {
    match run_to_steady_state(sys, &spec.integrator, &spec.settle) {
        Ok(r) => SweepRow {
            gain: r.amplitude / reference,
            amplitude: r.amplitude,
            status: r.status.into(),
            periods_used: r.periods_used,
            ..SweepRow::empty(axis_value)
        },
        Err(e) => SweepRow::failed(axis_value, &e),
    }
}

fn oracle_gain_at(sys: &MathieuSystem) -> Option<f64> {
    let theta = oracle::quadrature_angle(sys.drive.phase_phi, sys.pump.phase_psi);
    oracle::analytic_gain(sys.resonator.q_factor, sys.pump.delta, theta).ok()
}

/// Gain against a drive-phase or pump-phase offset (degrees) from the base.
pub fn sweep_phase(spec: &SweepSpec) -> Result<SweepResult> {
    check_axis(spec, &[SweepAxis::DrivePhase, SweepAxis::PumpPhase])?;
    let reference = unpumped_amplitude(&spec.base, &spec.integrator, &spec.settle)?;
    let b = spec.base;
    let rows = spec
        .values
        .par_iter()
        .map(|&deg| {
            let off = deg.to_radians();
            let sys = match spec.axis {
                SweepAxis::DrivePhase => b.with_phases(b.drive.phase_phi + off, b.pump.phase_psi),
                _ => b.with_phases(b.drive.phase_phi, b.pump.phase_psi + off),
            };
            let mut row = settled_row(deg, &sys, spec, reference);
            row.oracle_gain = oracle_gain_at(&sys);
            row
        })
        .collect();
    Ok(SweepResult { axis: spec.axis, rows })
}

/// Gain against relative drive detuning, with the pump locked at twice the
/// drive. Each point is referenced to the unpumped response at its own drive
/// frequency.
pub fn sweep_detune(spec: &SweepSpec) -> Result<SweepResult> {
    check_axis(spec, &[SweepAxis::ActuationDetune])?;
    let w0 = spec.base.resonator.omega0;
    let rows = spec
        .values
        .par_iter()
        .map(|&eps| {
            let mut sys = spec.base;
            sys.drive.omega_a = w0 * (1.0 + eps);
            sys.pump.omega_p = 2.0 * sys.drive.omega_a;
            if let Err(e) = sys.validate() {
                return SweepRow::failed(eps, &e);
            }
            let (pumped, reference) = rayon::join(
                || run_to_steady_state(&sys, &spec.integrator, &spec.settle),
                || run_to_steady_state(&sys.with_delta(0.0), &spec.integrator, &spec.settle),
            );
            match (pumped, reference) {
                (Ok(p), Ok(r)) => SweepRow {
                    gain: p.amplitude / r.amplitude,
                    amplitude: p.amplitude,
                    status: match (p.status, r.status) {
                        (SteadyStatus::Settled, SteadyStatus::Settled) => RowStatus::Settled,
                        (SteadyStatus::Settled, s) => s.into(),
                        (s, _) => s.into(),
                    },
                    periods_used: p.periods_used,
                    ..SweepRow::empty(eps)
                },
                (Err(e), _) | (_, Err(e)) => SweepRow::failed(eps, &e),
            }
        })
        .collect();
    Ok(SweepResult { axis: spec.axis, rows })
}

/// Gain against the pump-to-drive frequency ratio.
///
/// Off `r = 2` the response beats at `|r - 2|` cycles per drive period and
/// never settles, so each point integrates for a Floquet-derived transient
/// time, then records the envelope over a window spanning several beats. The
/// gain is the time-averaged envelope over the unpumped amplitude; the beat
/// frequency and depth are reported separately.
pub fn sweep_ratio(spec: &SweepSpec) -> Result<SweepResult> {
    check_axis(spec, &[SweepAxis::FrequencyRatio])?;
    if let Some(&r) = spec.values.iter().find(|&&r| !(r > 0.0)) {
        return Err(invalid(format!("frequency ratio must be > 0, got {r}")));
    }
    let reference = unpumped_amplitude(&spec.base, &spec.integrator, &spec.settle)?;
    let rows = spec
        .values
        .par_iter()
        .map(|&r| match ratio_point(spec, r, reference) {
            Ok(row) => row,
            Err(e) => SweepRow::failed(r, &e),
        })
        .collect();
    Ok(SweepResult { axis: spec.axis, rows })
}

fn ratio_point(spec: &SweepSpec, r: f64, reference: f64) -> Result<SweepRow> {
    let mut sys = spec.base;
    sys.drive.omega_a = sys.resonator.omega0;
    sys.pump.omega_p = r * sys.drive.omega_a;
    sys.validate()?;
    let drive_period = sys.drive.period();

    let floquet = monodromy(&sys.resonator, &sys.pump)?;
    if floquet.max_abs >= 1.0 {
        return Ok(SweepRow {
            status: RowStatus::Unstable,
            message: Some(format!("Floquet multiplier {:.9}", floquet.max_abs)),
            ..SweepRow::empty(r)
        });
    }
    let decay = -floquet.growth_rate();
    let transient = (RATIO_TRANSIENT_DECAY.ln() / decay / drive_period).ceil() as usize;
    let detuning = (r - 2.0).abs();
    let window = if detuning > 0.0 {
        ((RATIO_BEAT_CYCLES / detuning).ceil() as usize).max(RATIO_MIN_WINDOW)
    } else {
        RATIO_MIN_WINDOW
    };
    let budget = spec.integrator.max_periods;
    let total = transient.saturating_add(window);
    let (transient, status) = if total > budget {
        (budget.saturating_sub(window), RowStatus::MaxPeriodsReached)
    } else {
        (transient, RowStatus::Settled)
    };

    let mut sim = Simulator::new(&sys, &spec.integrator)?;
    for _ in 0..transient {
        sim.advance_period()?;
    }
    let t0 = sim.time();
    let mut iq = Vec::with_capacity(window);
    for _ in 0..window {
        let p = sim.advance_period()?;
        iq.push((p.i, p.q));
    }
    let env = EnvelopeSeries::from_period_iq(&iq, sys.drive.omega_a, 1, t0)?;
    let mean = env.mean_amplitude();
    let (beat, message) = match beat_frequency(&env) {
        Ok(b) => (b, None),
        Err(Error::NotPeriodic { autocorrelation }) => (
            None,
            Some(format!("envelope not periodic (autocorrelation {autocorrelation:.3})")),
        ),
        Err(e) => return Err(e),
    };
    Ok(SweepRow {
        gain: mean / reference,
        amplitude: mean,
        status,
        periods_used: sim.periods_completed(),
        beat_frequency: beat,
        modulation_depth: Some(env.modulation_depth()),
        message,
        ..SweepRow::empty(r)
    })
}

/// Gain against modulation depth, with the averaging prediction alongside.
pub fn sweep_delta(spec: &SweepSpec) -> Result<SweepResult> {
    check_axis(spec, &[SweepAxis::Delta])?;
    let reference = unpumped_amplitude(&spec.base, &spec.integrator, &spec.settle)?;
    let rows = spec
        .values
        .par_iter()
        .map(|&delta| {
            let sys = spec.base.with_delta(delta);
            if let Err(e) = sys.validate() {
                return SweepRow::failed(delta, &e);
            }
            let mut row = settled_row(delta, &sys, spec, reference);
            row.oracle_gain = oracle_gain_at(&sys);
            row
        })
        .collect();
    Ok(SweepResult { axis: spec.axis, rows })
}

/// For each quality factor, the modulation depth at which the simulated gain
/// equals `target_gain`.
///
/// Bisection over `[0, 2/Q)` (capped below 1), starting from the averaging
/// prediction as the first midpoint and stopping at
/// [`REQUIRED_DELTA_RTOL`] relative bracket width. Evaluations that are
/// unstable or fail to settle count as too high.
pub fn required_delta_curve(
    base: &MathieuSystem,
    q_values: &[f64],
    target_gain: f64,
    cfg: &IntegratorConfig,
    settle: &SettleConfig,
) -> Result<SweepResult> {
    let spec = SweepSpec {
        base: *base,
        axis: SweepAxis::QRequirement,
        values: q_values.to_vec(),
        target_gain: Some(target_gain),
        integrator: *cfg,
        settle: *settle,
    };
    spec.validate()?;
    if !(base.drive.accel_amplitude > 0.0) {
        return Err(invalid("sweeps need a non-zero drive amplitude"));
    }
    let rows = q_values
        .par_iter()
        .map(|&q| match required_delta_point(&spec, q, target_gain) {
            Ok(row) => row,
            Err(e) => SweepRow::failed(q, &e),
        })
        .collect();
    Ok(SweepResult {
        axis: SweepAxis::QRequirement,
        rows,
    })
}

fn required_delta_point(spec: &SweepSpec, q: f64, target: f64) -> Result<SweepRow> {
    let mut sys = spec.base;
    sys.resonator = ResonatorParams::new(q, sys.resonator.omega0)?;
    let reference = unpumped_amplitude(&sys, &spec.integrator, &spec.settle)?;
    let oracle_delta = oracle::required_delta(q, target)?;

    let eval = |delta: f64| run_to_steady_state(&sys.with_delta(delta), &spec.integrator, &spec.settle);
    let mut lo = 0.0;
    let mut hi = (2.0 / q).min(1.0 - f64::EPSILON);
    let mut mid = if oracle_delta > lo && oracle_delta < hi {
        oracle_delta
    } else {
        0.5 * (lo + hi)
    };
    let mut last = None;
    while hi - lo > REQUIRED_DELTA_RTOL * mid {
        let r = eval(mid)?;
        let too_high = r.status != SteadyStatus::Settled || r.amplitude / reference >= target;
        if too_high {
            hi = mid;
        } else {
            lo = mid;
        }
        last = Some((mid, r));
        mid = 0.5 * (lo + hi);
    }
    // Report the gain at the returned delta.
    let delta = mid;
    let r = match last {
        Some((d, r)) if d == delta => r,
        _ => eval(delta)?,
    };
    let settled = r.status == SteadyStatus::Settled;
    Ok(SweepRow {
        gain: r.amplitude / reference,
        amplitude: r.amplitude,
        status: if settled {
            RowStatus::Settled
        } else {
            RowStatus::BracketFailure
        },
        periods_used: r.periods_used,
        oracle_gain: Some(target),
        required_delta: Some(delta),
        oracle_delta: Some(oracle_delta),
        message: (!settled).then(|| format!("final point {}", r.status.as_str())),
        ..SweepRow::empty(q)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureCalibration {
    /// Offset of the quadrature map `theta = psi/2 - phi + theta0`.
    pub theta0: f64,
    /// Drive phase of maximum gain at the calibration pump phase.
    pub phase_phi_max: f64,
    pub gain_max: f64,
    pub gain_min: f64,
}

/// Locates the amplified quadrature from a drive-phase sweep.
///
/// For a linear system the squared amplitude is exactly
/// `c0 + c1 cos(2 phi) + c2 sin(2 phi)`, so a least-squares fit over
/// `points` evenly spaced phases in `[0, pi)` recovers the extremes without
/// a fine grid.
pub fn calibrate_quadrature(
    base: &MathieuSystem,
    points: usize,
    cfg: &IntegratorConfig,
    settle: &SettleConfig,
) -> Result<QuadratureCalibration> {
    if points < 3 {
        return Err(invalid("calibration needs at least 3 phases"));
    }
    if base.duffing.beta != 0.0 {
        return Err(invalid("calibration needs a linear system"));
    }
    let reference = unpumped_amplitude(base, cfg, settle)?;
    let phis: Vec<f64> = (0..points).map(|k| PI * k as f64 / points as f64).collect();
    let amps = phis
        .par_iter()
        .map(|&phi| {
            let r = run_to_steady_state(&base.with_phases(phi, base.pump.phase_psi), cfg, settle)?;
            if r.status != SteadyStatus::Settled {
                return Err(invalid(format!("calibration point phi = {phi} did not settle")));
            }
            Ok(r.amplitude)
        })
        .collect::<Result<Vec<f64>>>()?;

    // Evenly spaced over a full period of 2 phi: the basis is orthogonal.
    let n = points as f64;
    let (mut c0, mut c1, mut c2) = (0.0, 0.0, 0.0);
    for (&phi, &a) in phis.iter().zip(&amps) {
        let g2 = (a / reference).powi(2);
        c0 += g2 / n;
        c1 += 2.0 * g2 * (2.0 * phi).cos() / n;
        c2 += 2.0 * g2 * (2.0 * phi).sin() / n;
    }
    let c = c1.hypot(c2);
    let phase_phi_max = 0.5 * c2.atan2(c1);
    let theta0 = (FRAC_PI_2 + phase_phi_max - 0.5 * base.pump.phase_psi).rem_euclid(PI);
    Ok(QuadratureCalibration {
        theta0,
        phase_phi_max,
        gain_max: (c0 + c).sqrt(),
        gain_min: (c0 - c).max(0.0).sqrt(),
    })
}
