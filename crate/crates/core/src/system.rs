//! The driven, parametrically pumped resonator.
//!
//! ```text
//! z'' + (w0/Q) z' + w0^2 (1 + delta cos(wp t + psi)) z + beta z^3 = a cos(wA t + phi)
//! ```
//!
//! With `psi = 0` and `beta = 0` this is the classic damped, forced Mathieu
//! equation. Most of the crate works in the normalized frame (`w0 = 1`, unit
//! static deflection); [`normalize`] maps dimensional inputs into it.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Quality factor used to stand in for an undamped resonator.
pub const Q_INFINITE: f64 = 1e12;

/// State vector `(z, dz/dt)`.
pub type State = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonatorParams {
    pub q_factor: f64,
    /// Natural angular frequency, rad/s.
    pub omega0: f64,
}

impl ResonatorParams {
    pub fn new(q_factor: f64, omega0: f64) -> Result<Self> {
        let r = Self { q_factor, omega0 };
        r.validate()?;
        Ok(r)
    }

    /// Normalized resonator (`omega0 = 1`).
    pub fn normalized(q_factor: f64) -> Result<Self> {
        Self::new(q_factor, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q_factor > 0.0 && self.q_factor.is_finite()) {
            return Err(invalid(format!("q_factor must be > 0, got {}", self.q_factor)));
        }
        if !(self.omega0 > 0.0 && self.omega0.is_finite()) {
            return Err(invalid(format!("omega0 must be > 0, got {}", self.omega0)));
        }
        Ok(())
    }

    /// Linear damping coefficient `omega0 / Q`.
    pub fn damping(&self) -> f64 {
        self.omega0 / self.q_factor
    }
}

/// External actuation `a cos(omega_a t + phase_phi)`; `a` is the force per unit mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveSpec {
    pub accel_amplitude: f64,
    pub omega_a: f64,
    /// Radians.
    pub phase_phi: f64,
}

impl DriveSpec {
    pub fn new(accel_amplitude: f64, omega_a: f64, phase_phi: f64) -> Result<Self> {
        let d = Self {
            accel_amplitude,
            omega_a,
            phase_phi,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.accel_amplitude >= 0.0 && self.accel_amplitude.is_finite()) {
            return Err(invalid(format!(
                "accel_amplitude must be >= 0, got {}",
                self.accel_amplitude
            )));
        }
        if !(self.omega_a > 0.0 && self.omega_a.is_finite()) {
            return Err(invalid(format!("omega_a must be > 0, got {}", self.omega_a)));
        }
        if !self.phase_phi.is_finite() {
            return Err(invalid("phase_phi must be finite"));
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega_a
    }
}

/// Stiffness modulation `delta cos(omega_p t + phase_psi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpSpec {
    pub delta: f64,
    pub omega_p: f64,
    /// Radians. Zero reproduces the unphased pump.
    pub phase_psi: f64,
}

impl PumpSpec {
    pub fn new(delta: f64, omega_p: f64, phase_psi: f64) -> Result<Self> {
        let p = Self {
            delta,
            omega_p,
            phase_psi,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn off(omega_p: f64) -> Self {
        Self {
            delta: 0.0,
            omega_p,
            phase_psi: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        // delta < 1 keeps the instantaneous stiffness positive.
        if !(self.delta >= 0.0 && self.delta < 1.0) {
            return Err(invalid(format!("delta must be in [0, 1), got {}", self.delta)));
        }
        if !(self.omega_p > 0.0 && self.omega_p.is_finite()) {
            return Err(invalid(format!("omega_p must be > 0, got {}", self.omega_p)));
        }
        if !self.phase_psi.is_finite() {
            return Err(invalid("phase_psi must be finite"));
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega_p
    }
}

/// Hardening cubic stiffness `beta z^3`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DuffingSpec {
    pub beta: f64,
}

impl DuffingSpec {
    pub fn new(beta: f64) -> Result<Self> {
        let d = Self { beta };
        d.validate()?;
        Ok(d)
    }

    pub fn linear() -> Self {
        Self { beta: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(invalid(format!("beta must be >= 0, got {}", self.beta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MathieuSystem {
    pub resonator: ResonatorParams,
    pub drive: DriveSpec,
    pub pump: PumpSpec,
    pub duffing: DuffingSpec,
}

impl MathieuSystem {
    pub fn new(resonator: ResonatorParams, drive: DriveSpec, pump: PumpSpec, duffing: DuffingSpec) -> Result<Self> {
        let s = Self {
            resonator,
            drive,
            pump,
            duffing,
        };
        s.validate()?;
        Ok(s)
    }

    /// Normalized system driven on resonance with the pump at twice the drive
    /// frequency, both phases zero and no cubic term.
    pub fn resonant(q_factor: f64, delta: f64, accel_amplitude: f64) -> Result<Self> {
        Self::new(
            ResonatorParams::normalized(q_factor)?,
            DriveSpec::new(accel_amplitude, 1.0, 0.0)?,
            PumpSpec::new(delta, 2.0, 0.0)?,
            DuffingSpec::linear(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.resonator.validate()?;
        self.drive.validate()?;
        self.pump.validate()?;
        self.duffing.validate()
    }

    /// Time derivative of `(z, dz/dt)`.
    #[inline]
    pub fn rhs(&self, t: f64, state: State) -> State {
        let [z, zdot] = state;
        let w0 = self.resonator.omega0;
        let stiffness = w0 * w0 * (1.0 + self.pump.delta * (self.pump.omega_p * t + self.pump.phase_psi).cos());
        let force = self.drive.accel_amplitude * (self.drive.omega_a * t + self.drive.phase_phi).cos();
        let zddot = -self.resonator.damping() * zdot - stiffness * z - self.duffing.beta * z * z * z + force;
        [zdot, zddot]
    }

    /// Static deflection under the drive amplitude, `a / omega0^2`.
    pub fn static_deflection(&self) -> f64 {
        self.drive.accel_amplitude / (self.resonator.omega0 * self.resonator.omega0)
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.pump.delta = delta;
        self
    }

    pub fn with_accel(mut self, accel_amplitude: f64) -> Self {
        self.drive.accel_amplitude = accel_amplitude;
        self
    }

    pub fn with_phases(mut self, phase_phi: f64, phase_psi: f64) -> Self {
        self.drive.phase_phi = phase_phi;
        self.pump.phase_psi = phase_psi;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.duffing.beta = beta;
        self
    }
}

/// Physical force amplitude and mass behind the normalized drive `F0/m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionalDrive {
    /// Newtons.
    pub force_amplitude: f64,
    /// Kilograms.
    pub mass: f64,
}

impl DimensionalDrive {
    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(invalid(format!("mass must be > 0, got {}", self.mass)));
        }
        if !(self.force_amplitude > 0.0 && self.force_amplitude.is_finite()) {
            return Err(invalid(format!(
                "force_amplitude must be > 0 to define a displacement scale, got {}",
                self.force_amplitude
            )));
        }
        Ok(())
    }

    pub fn accel_amplitude(&self) -> f64 {
        self.force_amplitude / self.mass
    }
}

/// Units of the normalized frame expressed in SI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameScale {
    /// Seconds per normalized time unit, `1/omega0`.
    pub time_unit: f64,
    /// Metres per normalized displacement unit, `F0/(m omega0^2)`.
    pub length_unit: f64,
}

impl FrameScale {
    pub fn new(resonator: &ResonatorParams, drive: &DimensionalDrive) -> Result<Self> {
        resonator.validate()?;
        drive.validate()?;
        let w0 = resonator.omega0;
        Ok(Self {
            time_unit: 1.0 / w0,
            length_unit: drive.accel_amplitude() / (w0 * w0),
        })
    }

    pub fn to_normalized_time(&self, t: f64) -> f64 {
        t / self.time_unit
    }

    pub fn to_dimensional_length(&self, z: f64) -> f64 {
        z * self.length_unit
    }
}

/// Maps a dimensional system onto the normalized frame: time in units of
/// `1/omega0`, displacement in units of the static deflection `F0/(m omega0^2)`.
///
/// Frequencies are divided by `omega0`, so `Q`, `delta` and the frequency
/// ratios are unchanged. `drive.accel_amplitude` is ignored; the force comes
/// from `drive_dim`. `duffing.beta` is taken in 1/(m^2 s^2).
pub fn normalize(
    resonator_dimensional: &ResonatorParams,
    drive_dim: &DimensionalDrive,
    drive: &DriveSpec,
    pump: &PumpSpec,
    duffing: &DuffingSpec,
) -> Result<MathieuSystem> {
    let scale = FrameScale::new(resonator_dimensional, drive_dim)?;
    drive.validate()?;
    pump.validate()?;
    duffing.validate()?;
    let w0 = resonator_dimensional.omega0;
    MathieuSystem::new(
        ResonatorParams::new(resonator_dimensional.q_factor, 1.0)?,
        DriveSpec::new(1.0, drive.omega_a / w0, drive.phase_phi)?,
        PumpSpec::new(pump.delta, pump.omega_p / w0, pump.phase_psi)?,
        DuffingSpec::new(duffing.beta * scale.length_unit * scale.length_unit / (w0 * w0))?,
    )
}

/// Spring-mass resonance `f0 = sqrt(k/m) / 2pi`, in Hz.
pub fn natural_frequency(stiffness: f64, mass: f64) -> Result<f64> {
    if !(stiffness > 0.0 && stiffness.is_finite()) {
        return Err(invalid(format!("stiffness must be > 0, got {stiffness}")));
    }
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(invalid(format!("mass must be > 0, got {mass}")));
    }
    Ok((stiffness / mass).sqrt() / (2.0 * PI))
}
