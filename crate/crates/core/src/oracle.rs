//! Small-signal closed forms from first-order averaging of the pumped
//! resonator at `wA = w0`, `wp = 2 wA`.
//!
//! Writing `z = Re(A e^{it})` and averaging over the fast phase, the steady
//! slow-flow amplitude obeys `i(1/Q) A + (delta/2) e^{i psi} conj(A) = a e^{i phi}`.
//! The operator has singular values `1/Q -+ delta/2`, so with
//! `g = delta Q / 2` the response to a unit drive is amplified by `1/(1-g)`
//! along one quadrature and attenuated by `1/(1+g)` along the other:
//!
//! ```text
//! G(theta) = sqrt( cos^2(theta)/(1+g)^2 + sin^2(theta)/(1-g)^2 )
//! ```
//!
//! These are oracles for the simulator, not substitutes for it.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Offset of the quadrature-angle map `theta = psi/2 - phi + THETA0`.
///
/// Frozen from a fine drive-phase sweep at `Q = 1000`, `delta = 0.0018`
/// (maximum gain at `phi = -45 deg` with `psi = 0`); see
/// [`crate::sweeps::calibrate_quadrature`].
pub const THETA0: f64 = FRAC_PI_4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragedPrediction {
    pub gain_max: f64,
    pub gain_min: f64,
    pub pump_margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MaxGain {
    Gain(f64),
    AboveThreshold,
}

impl MaxGain {
    pub fn value(&self) -> Option<f64> {
        match self {
            MaxGain::Gain(g) => Some(*g),
            MaxGain::AboveThreshold => None,
        }
    }
}

fn check_q_delta(q_factor: f64, delta: f64) -> Result<()> {
    if !(q_factor > 0.0 && q_factor.is_finite()) {
        return Err(invalid(format!("q_factor must be > 0, got {q_factor}")));
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(invalid(format!("delta must be >= 0, got {delta}")));
    }
    Ok(())
}

/// `delta Q / 2`, the distance to the parametric threshold (1 at threshold).
pub fn pump_margin(q_factor: f64, delta: f64) -> f64 {
    0.5 * delta * q_factor
}

pub fn predict(q_factor: f64, delta: f64) -> Result<AveragedPrediction> {
    check_q_delta(q_factor, delta)?;
    let g = pump_margin(q_factor, delta);
    if g >= 1.0 {
        return Err(Error::AboveThreshold { pump_margin: g });
    }
    Ok(AveragedPrediction {
        gain_max: 1.0 / (1.0 - g),
        gain_min: 1.0 / (1.0 + g),
        pump_margin: g,
    })
}

/// Averaged gain at response-quadrature angle `theta` (maximal at `pi/2`).
pub fn analytic_gain(q_factor: f64, delta: f64, theta: f64) -> Result<f64> {
    let p = predict(q_factor, delta)?;
    let (s, c) = theta.sin_cos();
    Ok((c * c * p.gain_min * p.gain_min + s * s * p.gain_max * p.gain_max).sqrt())
}

/// Quadrature angle of a drive phase `phi` and pump phase `psi` (radians).
pub fn quadrature_angle(phase_phi: f64, phase_psi: f64) -> f64 {
    0.5 * phase_psi - phase_phi + THETA0
}

/// Drive phase that puts the response on the amplified quadrature for a
/// given pump phase.
pub fn amplified_drive_phase(phase_psi: f64) -> f64 {
    0.5 * phase_psi + THETA0 - FRAC_PI_2
}

/// Modulation depth giving a maximum gain of `target_gain`:
/// `delta = (2/Q)(1 - 1/G)`.
pub fn required_delta(q_factor: f64, target_gain: f64) -> Result<f64> {
    if !(q_factor > 0.0 && q_factor.is_finite()) {
        return Err(invalid(format!("q_factor must be > 0, got {q_factor}")));
    }
    if !(target_gain >= 1.0 && target_gain.is_finite()) {
        return Err(invalid(format!("target gain must be >= 1, got {target_gain}")));
    }
    Ok(2.0 / q_factor * (1.0 - 1.0 / target_gain))
}

pub fn max_gain(q_factor: f64, delta: f64) -> Result<MaxGain> {
    check_q_delta(q_factor, delta)?;
    let g = pump_margin(q_factor, delta);
    Ok(if g < 1.0 {
        MaxGain::Gain(1.0 / (1.0 - g))
    } else {
        MaxGain::AboveThreshold
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn gain_of_ten_scenario() {
        assert_relative_eq!(
            analytic_gain(1000.0, 0.0018, FRAC_PI_2).unwrap(),
            10.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            analytic_gain(1000.0, 0.0018, 0.0).unwrap(),
            1.0 / 1.9,
            max_relative = 1e-12
        );
        assert_eq!(analytic_gain(1000.0, 0.0, 0.3).unwrap(), 1.0);
    }

    #[test]
    fn required_delta_anchors() {
        assert_relative_eq!(required_delta(1000.0, 10.0).unwrap(), 0.0018, max_relative = 1e-12);
        assert_relative_eq!(required_delta(10.0, 10.0).unwrap(), 0.18, max_relative = 1e-12);
        assert_eq!(required_delta(10.0, 1.0).unwrap(), 0.0);
        assert!(required_delta(10.0, 0.5).is_err());
        assert!(required_delta(0.0, 2.0).is_err());
    }

    #[test]
    fn max_gain_cases() {
        assert_relative_eq!(
            max_gain(5000.0, 0.0003).unwrap().value().unwrap(),
            4.0,
            max_relative = 1e-12
        );
        let g = max_gain(900.0, 0.00115).unwrap().value().unwrap();
        assert_relative_eq!(g, 1.0 / (1.0 - 0.5175), max_relative = 1e-12);
        assert!((g - 2.07).abs() < 0.005);
        assert_eq!(max_gain(1000.0, 0.002).unwrap(), MaxGain::AboveThreshold);
        assert!(matches!(predict(1000.0, 0.002), Err(Error::AboveThreshold { .. })));
        assert!(analytic_gain(100.0, 0.03, 0.0).is_err());
    }

    #[test]
    fn default_phases_map_to_amplified_quadrature() {
        let phi = amplified_drive_phase(0.0);
        assert_relative_eq!(phi, -PI / 4.0, epsilon = 1e-15);
        assert_relative_eq!(quadrature_angle(phi, 0.0), FRAC_PI_2, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn extremes_over_theta(q in 1.0f64..1e4, frac in 0.0f64..0.99, theta in -10.0f64..10.0) {
            let delta = 2.0 * frac / q;
            let p = predict(q, delta).unwrap();
            let g = analytic_gain(q, delta, theta).unwrap();
            prop_assert!(g <= p.gain_max * (1.0 + 1e-12));
            prop_assert!(g >= p.gain_min * (1.0 - 1e-12));
            prop_assert_eq!(analytic_gain(q, delta, FRAC_PI_2).unwrap(), max_gain(q, delta).unwrap().value().unwrap());
            prop_assert!((analytic_gain(q, delta, 0.0).unwrap() - p.gain_min).abs() <= 1e-15 * p.gain_min);
            prop_assert!(p.gain_max >= 1.0 && p.gain_min <= 1.0 && p.gain_min > 0.0);
        }

        #[test]
        fn pi_periodic_in_theta(q in 1.0f64..1e4, frac in 0.0f64..0.99, theta in -10.0f64..10.0) {
            let delta = 2.0 * frac / q;
            let a = analytic_gain(q, delta, theta).unwrap();
            let b = analytic_gain(q, delta, theta + PI).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a);
        }

        #[test]
        fn required_delta_inverts_max_gain(q in 1.0f64..1e4, frac in 0.0f64..0.999) {
            let delta = 2.0 * frac / q;
            let g = max_gain(q, delta).unwrap().value().unwrap();
            prop_assert!((required_delta(q, g).unwrap() - delta).abs() <= 1e-12);
        }
    }
}
