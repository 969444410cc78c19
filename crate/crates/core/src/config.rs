//! JSON run configuration. Every section is optional and falls back to the
//! defaults below; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::beam::{AxialLoadCase, BeamSpec, BoundaryCondition, CombDriveSpec, DEFAULT_ELEMENTS, EPSILON0};
use crate::error::{invalid, Result};
use crate::integrator::{IntegratorConfig, SettleConfig};
use crate::sweeps::SweepAxis;
use crate::system::{DriveSpec, DuffingSpec, MathieuSystem, PumpSpec, ResonatorParams};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSection,
    pub integrator: IntegratorConfig,
    pub settle: SettleConfig,
    pub simulate: SimulateSection,
    pub sweep: SweepSection,
    pub beam: BeamSection,
    pub comb: CombSection,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.system.to_system()?;
        self.integrator.validate()?;
        self.settle.validate()?;
        self.beam.spec()?;
        self.beam.load().validate()?;
        self.comb.spec()?;
        if self.beam.n_elements < crate::beam::fem::MIN_ELEMENTS {
            return Err(invalid("beam.n_elements must be >= 4"));
        }
        if let Some(v) = &self.sweep.values {
            if v.is_empty() {
                return Err(invalid("sweep.values must not be empty"));
            }
        }
        if self.sweep.points < 1 {
            return Err(invalid("sweep.points must be >= 1"));
        }
        Ok(())
    }
}

/// Normalized-frame system parameters. Phases in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub q_factor: f64,
    pub omega0: f64,
    pub accel_amplitude: f64,
    pub omega_a: f64,
    pub phase_phi_deg: f64,
    pub delta: f64,
    pub omega_p: f64,
    pub phase_psi_deg: f64,
    pub beta: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self {
            q_factor: 1000.0,
            omega0: 1.0,
            accel_amplitude: 1.0,
            omega_a: 1.0,
            phase_phi_deg: -45.0,
            delta: 0.0018,
            omega_p: 2.0,
            phase_psi_deg: 0.0,
            beta: 0.0,
        }
    }
}

impl SystemSection {
    pub fn to_system(&self) -> Result<MathieuSystem> {
        MathieuSystem::new(
            ResonatorParams::new(self.q_factor, self.omega0)?,
            DriveSpec::new(self.accel_amplitude, self.omega_a, self.phase_phi_deg.to_radians())?,
            PumpSpec::new(self.delta, self.omega_p, self.phase_psi_deg.to_radians())?,
            DuffingSpec::new(self.beta)?,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    /// Drive periods of raw trajectory written by `simulate`.
    pub record_periods: usize,
    /// Envelope averaging window, in drive periods.
    pub envelope_window: usize,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            record_periods: 200,
            envelope_window: 1,
        }
    }
}

/// Sweep points: `values` if given, otherwise `points` evenly spaced values
/// over `[start, stop]`, otherwise an axis-specific default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub values: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub points: usize,
    pub target_gain: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            values: None,
            start: None,
            stop: None,
            points: 20,
            target_gain: 10.0,
        }
    }
}

impl SweepSection {
    pub fn values_for(&self, axis: SweepAxis, system: &SystemSection) -> Result<Vec<f64>> {
        if let Some(v) = &self.values {
            return Ok(v.clone());
        }
        let q = system.q_factor;
        let (start, stop, n) = match axis {
            SweepAxis::DrivePhase | SweepAxis::PumpPhase => (0.0, 350.0, 36),
            SweepAxis::ActuationDetune => (-10.0 / q, 10.0 / q, 21),
            SweepAxis::FrequencyRatio => (1.998, 2.002, 9),
            SweepAxis::Delta => (0.0, 0.95 * 2.0 / q, self.points),
            SweepAxis::QRequirement => {
                return Ok(vec![10.0, 30.0, 100.0, 300.0, 1000.0]);
            }
        };
        let start = self.start.unwrap_or(start);
        let stop = self.stop.unwrap_or(stop);
        let n = if self.start.is_some() || self.stop.is_some() {
            self.points
        } else {
            n
        };
        linspace(start, stop, n)
    }
}

pub fn linspace(start: f64, stop: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(invalid("linspace needs at least one point"));
    }
    if n == 1 {
        return Ok(vec![start]);
    }
    let last = (n - 1) as f64;
    Ok((0..n)
        .map(|k| {
            let s = k as f64 / last;
            start * (1.0 - s) + stop * s
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamSection {
    pub length: f64,
    pub width: f64,
    pub thickness: f64,
    pub youngs_modulus: f64,
    pub density: f64,
    pub n_elements: usize,
    pub boundary: BoundaryCondition,
    /// Axial load for `beam modal` and `beam delta-k`, newtons, tension positive.
    pub p_static: f64,
    pub p_var: f64,
    /// Target modulation depth reported alongside `design` results.
    pub reference_delta: Option<f64>,
}

impl Default for BeamSection {
    fn default() -> Self {
        Self {
            length: 200e-6,
            width: 5e-6,
            thickness: 10e-6,
            youngs_modulus: crate::beam::SILICON_YOUNGS_MODULUS,
            density: crate::beam::SILICON_DENSITY,
            n_elements: DEFAULT_ELEMENTS,
            boundary: BoundaryCondition::ClampedClamped,
            p_static: 0.0,
            p_var: 0.0,
            reference_delta: None,
        }
    }
}

impl BeamSection {
    pub fn spec(&self) -> Result<BeamSpec> {
        BeamSpec::new(
            self.length,
            self.width,
            self.thickness,
            self.youngs_modulus,
            self.density,
        )
    }

    pub fn load(&self) -> AxialLoadCase {
        AxialLoadCase {
            p_static: self.p_static,
            p_var: self.p_var,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CombSection {
    pub n: u32,
    pub finger_thickness: f64,
    pub gap: f64,
    pub voltage: f64,
    pub epsilon0: f64,
}

impl Default for CombSection {
    fn default() -> Self {
        Self {
            n: 70,
            finger_thickness: 20e-6,
            gap: 1e-6,
            voltage: 40.0,
            epsilon0: EPSILON0,
        }
    }
}

impl CombSection {
    pub fn spec(&self) -> Result<CombDriveSpec> {
        let c = CombDriveSpec {
            n: self.n,
            finger_thickness: self.finger_thickness,
            gap: self.gap,
            voltage: self.voltage,
            epsilon0: self.epsilon0,
        };
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Directory for data files; results go to stdout when unset.
    pub dir: Option<PathBuf>,
    pub format: OutputFormat,
}
