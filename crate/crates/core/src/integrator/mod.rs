//! Fixed-step time integration of [`MathieuSystem`] trajectories.
//!
//! The step is always an integer fraction of the drive period so that lock-in
//! demodulation windows are exact integer-period sums.

mod floquet;
mod steady;

pub use floquet::{critical_delta, monodromy, MonodromyResult, CRITICAL_DELTA_BRACKET, CRITICAL_DELTA_TOL};
pub use steady::{run_to_steady_state, SettleConfig, SteadyStateResult, SteadyStatus, INSTABILITY_WINDOWS};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::system::{MathieuSystem, State};

/// Trajectories with `|z|` above this are declared unbounded.
pub const OVERFLOW_GUARD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub steps_per_drive_period: usize,
    pub max_periods: usize,
    pub initial_state: State,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            steps_per_drive_period: 128,
            max_periods: 1_000_000,
            initial_state: [0.0, 0.0],
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps_per_drive_period < 16 {
            return Err(invalid(format!(
                "steps_per_drive_period must be >= 16, got {}",
                self.steps_per_drive_period
            )));
        }
        if self.max_periods < 1 {
            return Err(invalid("max_periods must be >= 1"));
        }
        if !self.initial_state.iter().all(|v| v.is_finite()) {
            return Err(invalid("initial_state must be finite"));
        }
        Ok(())
    }

    pub fn with_steps(mut self, steps_per_drive_period: usize) -> Self {
        self.steps_per_drive_period = steps_per_drive_period;
        self
    }

    pub fn with_initial_state(mut self, initial_state: State) -> Self {
        self.initial_state = initial_state;
        self
    }
}

/// A sampled displacement trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub t: Vec<f64>,
    pub z: Vec<f64>,
    /// Samples per drive period.
    pub sample_rate: usize,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Builds a series by sampling `f` at `sample_rate` points per period of
    /// `omega_a` for `periods` periods, starting at `t = 0`.
    pub fn from_fn(omega_a: f64, sample_rate: usize, periods: usize, f: impl Fn(f64) -> f64) -> Self {
        let h = 2.0 * std::f64::consts::PI / (omega_a * sample_rate as f64);
        let n = sample_rate * periods;
        let t: Vec<f64> = (0..n).map(|k| k as f64 * h).collect();
        let z = t.iter().map(|&t| f(t)).collect();
        Self { t, z, sample_rate }
    }
}

/// One classical fourth-order Runge-Kutta step.
#[inline]
pub fn rk4_step(system: &MathieuSystem, t: f64, y: State, h: f64) -> State {
    let k1 = system.rhs(t, y);
    let half = 0.5 * h;
    let k2 = system.rhs(t + half, [y[0] + half * k1[0], y[1] + half * k1[1]]);
    let k3 = system.rhs(t + half, [y[0] + half * k2[0], y[1] + half * k2[1]]);
    let k4 = system.rhs(t + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
    let s = h / 6.0;
    [
        y[0] + s * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + s * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// In-phase and quadrature content of one drive period, relative to
/// `cos(omega_a t)` and `-sin(omega_a t)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PeriodIq {
    pub i: f64,
    pub q: f64,
}

impl PeriodIq {
    pub fn amplitude(&self) -> f64 {
        self.i.hypot(self.q)
    }
}

/// Streaming RK4 integrator that advances one drive period at a time and
/// demodulates each period on the fly.
///
/// Time is computed as `step_index * h` rather than accumulated.
#[derive(Debug, Clone)]
pub struct Simulator {
    system: MathieuSystem,
    steps_per_period: usize,
    h: f64,
    step: u64,
    state: State,
    cos_table: Vec<f64>,
    sin_table: Vec<f64>,
}

impl Simulator {
    pub fn new(system: &MathieuSystem, cfg: &IntegratorConfig) -> Result<Self> {
        system.validate()?;
        cfg.validate()?;
        let n = cfg.steps_per_drive_period;
        let h = system.drive.period() / n as f64;
        let (sin_table, cos_table) = (0..n)
            .map(|k| (2.0 * std::f64::consts::PI * k as f64 / n as f64).sin_cos())
            .unzip();
        Ok(Self {
            system: *system,
            steps_per_period: n,
            h,
            step: 0,
            state: cfg.initial_state,
            cos_table,
            sin_table,
        })
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.h
    }

    pub fn state(&self) -> State {
        self.state
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }

    pub fn periods_completed(&self) -> u64 {
        self.step / self.steps_per_period as u64
    }

    #[inline]
    pub fn step(&mut self) {
        let t = self.time();
        self.state = rk4_step(&self.system, t, self.state, self.h);
        self.step += 1;
    }

    /// Integrates one drive period and returns its I/Q content, computed from
    /// the samples at the start of each step. Must be called on a period
    /// boundary. Errors once `|z|` passes [`OVERFLOW_GUARD`].
    pub fn advance_period(&mut self) -> Result<PeriodIq> {
        debug_assert_eq!(self.step % self.steps_per_period as u64, 0);
        let (mut si, mut sq) = (0.0, 0.0);
        for k in 0..self.steps_per_period {
            let z = self.state[0];
            si += z * self.cos_table[k];
            sq -= z * self.sin_table[k];
            self.step();
        }
        if !(self.state[0].abs() <= OVERFLOW_GUARD) {
            return Err(Error::UnboundedGrowth {
                t: self.time(),
                guard: OVERFLOW_GUARD,
                partial: Box::new(TimeSeries {
                    t: vec![self.time()],
                    z: vec![self.state[0]],
                    sample_rate: self.steps_per_period,
                }),
            });
        }
        let scale = 2.0 / self.steps_per_period as f64;
        Ok(PeriodIq {
            i: scale * si,
            q: scale * sq,
        })
    }
}

/// Integrates from `t = 0` to `t_end`, recording every step (including the
/// initial state).
pub fn integrate(system: &MathieuSystem, cfg: &IntegratorConfig, t_end: f64) -> Result<TimeSeries> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(invalid(format!("t_end must be > 0, got {t_end}")));
    }
    let mut sim = Simulator::new(system, cfg)?;
    let n_steps = (t_end / sim.h - 1e-9).ceil().max(1.0) as usize;
    let mut t = Vec::with_capacity(n_steps + 1);
    let mut z = Vec::with_capacity(n_steps + 1);
    t.push(0.0);
    z.push(sim.state[0]);
    for _ in 0..n_steps {
        sim.step();
        let zi = sim.state[0];
        t.push(sim.time());
        z.push(zi);
        if !(zi.abs() <= OVERFLOW_GUARD) {
            return Err(Error::UnboundedGrowth {
                t: sim.time(),
                guard: OVERFLOW_GUARD,
                partial: Box::new(TimeSeries {
                    t,
                    z,
                    sample_rate: cfg.steps_per_drive_period,
                }),
            });
        }
    }
    Ok(TimeSeries {
        t,
        z,
        sample_rate: cfg.steps_per_drive_period,
    })
}
