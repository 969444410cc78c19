//! Floquet analysis of the unforced, linear part of the system.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::rk4_step;
use crate::error::{invalid, Error, Result};
use crate::system::{DriveSpec, DuffingSpec, MathieuSystem, PumpSpec, ResonatorParams};

/// Delta bracket searched by [`critical_delta`].
pub const CRITICAL_DELTA_BRACKET: (f64, f64) = (0.0, 0.5);
/// Absolute tolerance on the critical modulation depth.
pub const CRITICAL_DELTA_TOL: f64 = 1e-6;

const MIN_STEPS_PER_PUMP_PERIOD: usize = 1024;
const MIN_STEPS_PER_NATURAL_PERIOD: f64 = 512.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonodromyResult {
    /// State-transition matrix over one pump period; column `j` is the image
    /// of the `j`-th unit initial condition.
    pub matrix: [[f64; 2]; 2],
    pub multipliers: [Complex64; 2],
    pub max_abs: f64,
    pub pump_period: f64,
}

impl MonodromyResult {
    pub fn determinant(&self) -> f64 {
        let m = &self.matrix;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// Largest Floquet exponent, `ln(max |multiplier|) / T_p`.
    pub fn growth_rate(&self) -> f64 {
        self.max_abs.ln() / self.pump_period
    }
}

fn eigenvalues_2x2(m: &[[f64; 2]; 2]) -> [Complex64; 2] {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = 0.25 * tr * tr - det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        // Avoid cancellation in the smaller root.
        let big = 0.5 * tr + s.copysign(tr);
        let small = if big != 0.0 {
            det / big
        } else {
            0.5 * tr - s.copysign(tr)
        };
        [Complex64::new(big, 0.0), Complex64::new(small, 0.0)]
    } else {
        let im = (-disc).sqrt();
        [Complex64::new(0.5 * tr, im), Complex64::new(0.5 * tr, -im)]
    }
}

/// Monodromy matrix of `z'' + (w0/Q) z' + w0^2 (1 + delta cos(wp t + psi)) z = 0`
/// over one pump period `T_p = 2pi/wp`.
pub fn monodromy(resonator: &ResonatorParams, pump: &PumpSpec) -> Result<MonodromyResult> {
    resonator.validate()?;
    pump.validate()?;
    let tp = pump.period();
    let natural_periods = resonator.omega0 * tp / (2.0 * PI);
    let n = ((MIN_STEPS_PER_NATURAL_PERIOD * natural_periods).ceil() as usize).max(MIN_STEPS_PER_PUMP_PERIOD);
    let h = tp / n as f64;
    let system = MathieuSystem {
        resonator: *resonator,
        drive: DriveSpec {
            accel_amplitude: 0.0,
            omega_a: pump.omega_p / 2.0,
            phase_phi: 0.0,
        },
        pump: *pump,
        duffing: DuffingSpec::linear(),
    };
    let mut columns = [[0.0; 2]; 2];
    for (j, col) in columns.iter_mut().enumerate() {
        let mut y = [0.0; 2];
        y[j] = 1.0;
        for k in 0..n {
            y = rk4_step(&system, k as f64 * h, y, h);
        }
        *col = y;
    }
    let matrix = [[columns[0][0], columns[1][0]], [columns[0][1], columns[1][1]]];
    let multipliers = eigenvalues_2x2(&matrix);
    let max_abs = multipliers[0].norm().max(multipliers[1].norm());
    Ok(MonodromyResult {
        matrix,
        multipliers,
        max_abs,
        pump_period: tp,
    })
}

/// Smallest modulation depth at which the unforced system becomes unstable
/// (`max |multiplier| = 1`), by bisection over [`CRITICAL_DELTA_BRACKET`].
pub fn critical_delta(resonator: &ResonatorParams, omega_p: f64) -> Result<f64> {
    if !(omega_p > 0.0 && omega_p.is_finite()) {
        return Err(invalid(format!("omega_p must be > 0, got {omega_p}")));
    }
    let excess =
        |delta: f64| -> Result<f64> { Ok(monodromy(resonator, &PumpSpec::new(delta, omega_p, 0.0)?)?.max_abs - 1.0) };
    let (mut lo, mut hi) = CRITICAL_DELTA_BRACKET;
    if excess(lo)? >= 0.0 || excess(hi)? < 0.0 {
        return Err(Error::NoThresholdFound { lo, hi });
    }
    while hi - lo > CRITICAL_DELTA_TOL {
        let mid = 0.5 * (lo + hi);
        if excess(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
