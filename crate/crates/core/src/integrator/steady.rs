//! Integrate-until-settled protocol used by every gain measurement.
//!
//! The trajectory is demodulated one drive period at a time. Envelope samples
//! are taken at the end of each non-overlapping window of `window_periods`
//! periods (the magnitude of the window-averaged I/Q vector), and the run stops
//! on the first of:
//!
//! * **Settled**: the last window-to-window change is below `settle_tol`
//!   relative, and so is the remaining change projected from the geometric
//!   decay of successive changes. The projection keeps slow exponential
//!   approaches from being mistaken for a steady state.
//! * **Unstable**: `|z|` passes the overflow guard, or the envelope grew over
//!   [`INSTABILITY_WINDOWS`] consecutive windows with a log growth rate above
//!   `1e-3 * omega0 / 2pi` that is not decelerating (exponential growth).
//! * **MaxPeriodsReached**: the period budget ran out.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{IntegratorConfig, PeriodIq, Simulator};
use crate::error::{invalid, Error, Result};
use crate::system::MathieuSystem;

/// Consecutive growing windows required before declaring instability.
pub const INSTABILITY_WINDOWS: usize = 5;

/// Log-growth rate threshold in units of `omega0 / 2pi`.
const GROWTH_RATE_THRESHOLD: f64 = 1e-3;

/// A window-to-window drop in growth rate larger than this fraction of
/// `threshold * window_time` counts as deceleration.
const RATE_SLACK: f64 = 0.2;

/// Relative window-to-window change treated as round-off.
const NOISE_FLOOR: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SettleConfig {
    pub settle_tol: f64,
    pub window_periods: usize,
}

impl Default for SettleConfig {
    fn default() -> Self {
        Self {
            settle_tol: 1e-4,
            window_periods: 50,
        }
    }
}

impl SettleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.settle_tol > 0.0) {
            return Err(invalid(format!("settle_tol must be > 0, got {}", self.settle_tol)));
        }
        if self.window_periods < 10 {
            return Err(invalid(format!(
                "window_periods must be >= 10, got {}",
                self.window_periods
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SteadyStatus {
    Settled,
    Unstable,
    MaxPeriodsReached,
}

impl SteadyStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SteadyStatus::Settled => "Settled",
            SteadyStatus::Unstable => "Unstable",
            SteadyStatus::MaxPeriodsReached => "MaxPeriodsReached",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateResult {
    /// Last window envelope amplitude.
    pub amplitude: f64,
    pub periods_used: u64,
    pub status: SteadyStatus,
    /// Largest single-period envelope amplitude seen during the run.
    pub transient_peak: f64,
    /// Window-averaged in-phase component at the end of the run.
    pub i_comp: f64,
    /// Window-averaged quadrature component at the end of the run.
    pub q_comp: f64,
    /// Per-period I/Q samples of the whole run, one per drive period.
    #[serde(skip)]
    pub per_period: Vec<(f64, f64)>,
}

impl SteadyStateResult {
    pub fn phase(&self) -> f64 {
        self.q_comp.atan2(self.i_comp)
    }
}

struct Tracker {
    window: usize,
    envelopes: Vec<f64>,
}

impl Tracker {
    fn settled(&self, tol: f64) -> bool {
        let e = &self.envelopes;
        let k = e.len();
        if k < 3 {
            return false;
        }
        let (e0, e1, e2) = (e[k - 3], e[k - 2], e[k - 1]);
        if e2 == 0.0 {
            return e1 == 0.0 && e0 == 0.0;
        }
        let d0 = e1 - e0;
        let d1 = e2 - e1;
        let r1 = d1.abs() / e2;
        if r1 < NOISE_FLOOR {
            return true;
        }
        if r1 >= tol {
            return false;
        }
        if d0 * d1 > 0.0 {
            if d1.abs() >= d0.abs() {
                return false;
            }
            let ratio = d1 / d0;
            let projected = d1.abs() * ratio / (1.0 - ratio);
            projected / e2 < tol
        } else {
            // Ringing envelope: require both recent changes to be small.
            e1 > 0.0 && d0.abs() / e1 < tol
        }
    }

    fn unstable(&self, threshold: f64, window_time: f64) -> bool {
        let e = &self.envelopes;
        let k = e.len();
        if k < INSTABILITY_WINDOWS + 1 {
            return false;
        }
        let tail = &e[k - INSTABILITY_WINDOWS - 1..];
        if !tail.iter().all(|&v| v > 0.0) {
            return false;
        }
        let rates: Vec<f64> = tail.windows(2).map(|w| (w[1] / w[0]).ln() / window_time).collect();
        let keep = 1.0 - RATE_SLACK * threshold * window_time;
        rates.iter().all(|&r| r > threshold) && rates.windows(2).all(|w| w[1] >= keep * w[0])
    }
}

/// Integrates `system` from `cfg.initial_state` until the envelope at the drive
/// frequency settles, diverges, or the period budget is exhausted.
pub fn run_to_steady_state(
    system: &MathieuSystem,
    cfg: &IntegratorConfig,
    settle: &SettleConfig,
) -> Result<SteadyStateResult> {
    settle.validate()?;
    let mut sim = Simulator::new(system, cfg)?;
    let mut tracker = Tracker {
        window: settle.window_periods,
        envelopes: Vec::new(),
    };
    let threshold = GROWTH_RATE_THRESHOLD * system.resonator.omega0 / (2.0 * PI);
    let window_time = settle.window_periods as f64 * system.drive.period();

    let mut per_period: Vec<(f64, f64)> = Vec::new();
    let mut peak = 0.0f64;
    let mut acc = PeriodIq::default();
    let mut last = PeriodIq::default();
    let finish = |status, per_period: Vec<(f64, f64)>, peak, last: PeriodIq, periods| SteadyStateResult {
        amplitude: last.amplitude(),
        periods_used: periods,
        status,
        transient_peak: peak,
        i_comp: last.i,
        q_comp: last.q,
        per_period,
    };

    loop {
        let iq = match sim.advance_period() {
            Ok(iq) => iq,
            Err(Error::UnboundedGrowth { .. }) => {
                let n = sim.periods_completed();
                return Ok(finish(SteadyStatus::Unstable, per_period, peak, last, n));
            }
            Err(e) => return Err(e),
        };
        peak = peak.max(iq.amplitude());
        per_period.push((iq.i, iq.q));
        acc.i += iq.i;
        acc.q += iq.q;

        let n = sim.periods_completed();
        if n % tracker.window as u64 == 0 {
            let w = tracker.window as f64;
            last = PeriodIq {
                i: acc.i / w,
                q: acc.q / w,
            };
            acc = PeriodIq::default();
            tracker.envelopes.push(last.amplitude());
            if tracker.settled(settle.settle_tol) {
                return Ok(finish(SteadyStatus::Settled, per_period, peak, last, n));
            }
            if tracker.unstable(threshold, window_time) {
                return Ok(finish(SteadyStatus::Unstable, per_period, peak, last, n));
            }
        }
        if n >= cfg.max_periods as u64 {
            if n % tracker.window as u64 != 0 {
                // Partial trailing window.
                let w = (n % tracker.window as u64) as f64;
                last = PeriodIq {
                    i: acc.i / w,
                    q: acc.q / w,
                };
            }
            return Ok(finish(SteadyStatus::MaxPeriodsReached, per_period, peak, last, n));
        }
    }
}
