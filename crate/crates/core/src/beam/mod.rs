//! Axially loaded beam resonator: modal analysis with stress stiffening,
//! electrostatic comb-drive force, and the reduction of a loaded beam to a
//! pumped single-mode oscillator.

pub mod eigen;
pub mod fem;

use std::f64::consts::PI;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::integrator::critical_delta;
use crate::oracle::{self, MaxGain};
use crate::system::{normalize, DimensionalDrive, DriveSpec, DuffingSpec, MathieuSystem, PumpSpec, ResonatorParams};

pub use eigen::{smallest_eigenpairs, EigenPair};
pub use fem::{assemble, midpoint_stiffness, BeamMatrices};

pub const EPSILON0: f64 = 8.854187817e-12;
pub const SILICON_YOUNGS_MODULUS: f64 = 169e9;
pub const SILICON_DENSITY: f64 = 2330.0;
pub const DEFAULT_ELEMENTS: usize = 64;
/// Minimum load accepted, as a fraction of the (compressive) buckling load.
pub const BUCKLING_GUARD: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSpec {
    pub length: f64,
    /// In-plane width; the beam flexes across this dimension.
    pub width: f64,
    /// Out-of-plane thickness.
    pub thickness: f64,
    #[serde(default = "default_e")]
    pub youngs_modulus: f64,
    #[serde(default = "default_rho")]
    pub density: f64,
}

fn default_e() -> f64 {
    SILICON_YOUNGS_MODULUS
}

fn default_rho() -> f64 {
    SILICON_DENSITY
}

impl BeamSpec {
    pub fn new(length: f64, width: f64, thickness: f64, youngs_modulus: f64, density: f64) -> Result<Self> {
        let b = Self {
            length,
            width,
            thickness,
            youngs_modulus,
            density,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn silicon(length: f64, width: f64, thickness: f64) -> Result<Self> {
        Self::new(length, width, thickness, SILICON_YOUNGS_MODULUS, SILICON_DENSITY)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("length", self.length),
            ("width", self.width),
            ("thickness", self.thickness),
            ("youngs_modulus", self.youngs_modulus),
            ("density", self.density),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("beam {name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        self.width * self.thickness
    }

    /// `t w^3 / 12`.
    pub fn second_moment(&self) -> f64 {
        self.thickness * self.width.powi(3) / 12.0
    }

    pub fn flexural_rigidity(&self) -> f64 {
        self.youngs_modulus * self.second_moment()
    }

    pub fn with_length(mut self, length: f64) -> Self {
        self.length = length;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryCondition {
    /// Both ends fixed in displacement and rotation. Axial load is still
    /// transmitted, as when the far end slides freely along the beam axis.
    ClampedClamped,
    /// Far end fixed in rotation but free to translate transversely.
    ClampedGuided,
}

impl BoundaryCondition {
    pub const ALL: [BoundaryCondition; 2] = [BoundaryCondition::ClampedClamped, BoundaryCondition::ClampedGuided];

    pub fn as_str(&self) -> &'static str {
        match self {
            BoundaryCondition::ClampedClamped => "clamped-clamped",
            BoundaryCondition::ClampedGuided => "clamped-guided",
        }
    }
}

/// Axial forces in newtons, tension positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxialLoadCase {
    pub p_static: f64,
    /// Amplitude of the component at the pump frequency.
    pub p_var: f64,
}

impl AxialLoadCase {
    pub fn validate(&self) -> Result<()> {
        if !self.p_static.is_finite() || !(self.p_var >= 0.0 && self.p_var.is_finite()) {
            return Err(invalid(format!(
                "load needs finite p_static and p_var >= 0, got ({}, {})",
                self.p_static, self.p_var
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CombDriveSpec {
    pub n: u32,
    pub finger_thickness: f64,
    pub gap: f64,
    pub voltage: f64,
    #[serde(default = "default_epsilon0")]
    pub epsilon0: f64,
}

fn default_epsilon0() -> f64 {
    EPSILON0
}

impl CombDriveSpec {
    pub fn new(n: u32, finger_thickness: f64, gap: f64, voltage: f64) -> Result<Self> {
        let c = Self {
            n,
            finger_thickness,
            gap,
            voltage,
            epsilon0: EPSILON0,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(invalid("comb needs at least one finger"));
        }
        if !(self.finger_thickness > 0.0 && self.gap > 0.0) {
            return Err(invalid("finger thickness and gap must be > 0"));
        }
        if !(self.voltage >= 0.0 && self.voltage.is_finite()) {
            return Err(invalid(format!("voltage must be >= 0, got {}", self.voltage)));
        }
        if !(self.epsilon0 > 0.0) {
            return Err(invalid("epsilon0 must be > 0"));
        }
        Ok(())
    }

    pub fn with_voltage(mut self, voltage: f64) -> Self {
        self.voltage = voltage;
        self
    }
}

/// `F = n (t/g) eps0 V^2 / 2`, in newtons.
pub fn comb_force(comb: &CombDriveSpec) -> Result<f64> {
    comb.validate()?;
    Ok(0.5 * comb.n as f64 * (comb.finger_thickness / comb.gap) * comb.epsilon0 * comb.voltage * comb.voltage)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalResult {
    /// Hz.
    pub f0: f64,
    /// Nodal transverse displacements, scaled to a peak of +1.
    pub mode_shape: Vec<f64>,
    /// Kilograms, referred to the peak displacement.
    pub modal_mass: f64,
    /// N/m, referred to the peak displacement.
    pub modal_stiffness: f64,
}

/// Fundamental bending mode under axial load `axial_load`.
pub fn modal(beam: &BeamSpec, n_elements: usize, bc: BoundaryCondition, axial_load: f64) -> Result<ModalResult> {
    let mats = assemble(beam, n_elements, bc)?;
    Ok(fundamental(beam, &mats, bc, axial_load)?.0)
}

/// Modal result plus the reduced-dof mode vector scaled to unit peak.
fn fundamental(
    beam: &BeamSpec,
    mats: &BeamMatrices,
    bc: BoundaryCondition,
    axial_load: f64,
) -> Result<(ModalResult, DVector<f64>)> {
    if !axial_load.is_finite() {
        return Err(invalid("axial load must be finite"));
    }
    let k = mats.loaded_stiffness(axial_load);
    let Some(pairs) = smallest_eigenpairs(&k, &mats.mass, 1)? else {
        return Err(Error::BeyondBuckling {
            load: axial_load,
            critical: -buckling_load(beam, mats.n_elements, bc)?,
        });
    };
    let pair = &pairs[0];
    let full = mats.expand(&pair.vector);
    let w: Vec<f64> = full.iter().step_by(2).copied().collect();
    let peak = w
        .iter()
        .copied()
        .fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
    if peak == 0.0 {
        return Err(invalid("mode has no transverse displacement"));
    }
    let phi: DVector<f64> = &pair.vector / peak;
    let result = ModalResult {
        f0: pair.value.sqrt() / (2.0 * PI),
        mode_shape: w.iter().map(|v| v / peak).collect(),
        modal_mass: (&mats.mass * &phi).dot(&phi),
        modal_stiffness: (&k * &phi).dot(&phi),
    };
    Ok((result, phi))
}

/// Smallest compressive load magnitude at which `K - P K_g` loses
/// definiteness.
pub fn buckling_load(beam: &BeamSpec, n_elements: usize, bc: BoundaryCondition) -> Result<f64> {
    let mats = assemble(beam, n_elements, bc)?;
    let pairs = smallest_eigenpairs(&mats.stiffness, &mats.geometric, 1)?
        .ok_or_else(|| invalid("unloaded stiffness is not positive definite"))?;
    Ok(pairs[0].value)
}

/// Relative stiffness modulation of a load case, by two routes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StiffnessModulation {
    /// `(k(P+) - k(P-)) / (2 k(Ps))` with `k` the stiffness of the
    /// fundamental mode at `p_static`.
    pub delta: f64,
    /// `(f(P+) - f(P-)) / f(Ps)`, i.e. twice the relative frequency swing.
    pub delta_from_frequency: f64,
    pub f0: f64,
    pub modal_stiffness: f64,
    pub buckling_load: f64,
}

/// Stiffness modulation produced by `load`.
///
/// The stiffness route holds the mode shape fixed at the `p_static` mode, as
/// the single-mode reduction does. Re-solving the mode at each load would
/// fold the load dependence of the peak-referred modal mass into `k`.
pub fn delta_k_over_k(
    beam: &BeamSpec,
    n_elements: usize,
    bc: BoundaryCondition,
    load: &AxialLoadCase,
) -> Result<StiffnessModulation> {
    load.validate()?;
    let mats = assemble(beam, n_elements, bc)?;
    let p_cr = buckling_load(beam, n_elements, bc)?;
    let p_min = load.p_static - load.p_var;
    if p_min <= -BUCKLING_GUARD * p_cr {
        return Err(Error::BeyondBuckling {
            load: p_min,
            critical: -p_cr,
        });
    }
    let (mid, phi) = fundamental(beam, &mats, bc, load.p_static)?;
    let lo = fundamental(beam, &mats, bc, p_min)?.0;
    let hi = fundamental(beam, &mats, bc, load.p_static + load.p_var)?.0;
    let k_of = |p: f64| (mats.loaded_stiffness(p) * &phi).dot(&phi);
    Ok(StiffnessModulation {
        delta: (k_of(load.p_static + load.p_var) - k_of(p_min)) / (2.0 * mid.modal_stiffness),
        delta_from_frequency: (hi.f0 - lo.f0) / mid.f0,
        f0: mid.f0,
        modal_stiffness: mid.modal_stiffness,
        buckling_load: p_cr,
    })
}

/// A beam load case reduced to its fundamental mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedModel {
    pub modal: ModalResult,
    pub modulation: StiffnessModulation,
    /// Dimensional resonator (`omega0` in rad/s).
    pub resonator: ResonatorParams,
    /// Normalized system: unit natural frequency and unit static deflection,
    /// pump at twice resonance, drive on the amplified quadrature.
    pub system: MathieuSystem,
    /// Metres per normalized displacement unit.
    pub length_unit: f64,
    pub projection: String,
}

/// Projects the loaded beam onto its fundamental mode at `p_static`.
///
/// `accel_amplitude` is the drive force over modal mass (m/s^2) and
/// `duffing.beta` is in 1/(m^2 s^2).
pub fn reduce_to_mathieu(
    beam: &BeamSpec,
    n_elements: usize,
    bc: BoundaryCondition,
    load: &AxialLoadCase,
    q_factor: f64,
    accel_amplitude: f64,
    duffing: &DuffingSpec,
) -> Result<ReducedModel> {
    let modulation = delta_k_over_k(beam, n_elements, bc, load)?;
    let modal = modal(beam, n_elements, bc, load.p_static)?;
    let w0 = 2.0 * PI * modal.f0;
    let resonator = ResonatorParams::new(q_factor, w0)?;
    let drive_dim = DimensionalDrive {
        force_amplitude: accel_amplitude * modal.modal_mass,
        mass: modal.modal_mass,
    };
    let phi = oracle::amplified_drive_phase(0.0);
    let system = normalize(
        &resonator,
        &drive_dim,
        &DriveSpec::new(accel_amplitude, w0, phi)?,
        &PumpSpec::new(modulation.delta, 2.0 * w0, 0.0)?,
        duffing,
    )?;
    Ok(ReducedModel {
        length_unit: accel_amplitude / (w0 * w0),
        modal,
        modulation,
        resonator,
        system,
        projection: format!(
            "single mode: fundamental {} bending mode at p_static, {} elements",
            bc.as_str(),
            n_elements
        ),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignEntry {
    pub boundary: BoundaryCondition,
    pub f0: f64,
    pub buckling_load: f64,
    pub delta: f64,
    pub delta_from_frequency: f64,
    pub delta_crit: f64,
    pub max_gain: MaxGain,
    /// `delta / reference_delta`, when a reference is given.
    pub reference_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub force: f64,
    pub q_factor: f64,
    pub reference_delta: Option<f64>,
    pub entries: Vec<DesignEntry>,
}

impl DesignReport {
    pub fn entry(&self, bc: BoundaryCondition) -> Option<&DesignEntry> {
        self.entries.iter().find(|e| e.boundary == bc)
    }

    /// Fixed-width table for terminals.
    pub fn to_table(&self) -> String {
        let mut s = format!("comb force  {:.9e} N\nQ           {:.9e}\n", self.force, self.q_factor);
        if let Some(r) = self.reference_delta {
            s.push_str(&format!("reference   {r:.9e}\n"));
        }
        s.push_str(&format!(
            "{:<16} {:>16} {:>16} {:>16} {:>16} {:>16} {:>12}\n",
            "boundary", "f0_hz", "p_cr_n", "delta", "delta_crit", "max_gain", "vs_ref"
        ));
        for e in &self.entries {
            let gain = match e.max_gain {
                MaxGain::Gain(g) => format!("{g:.9e}"),
                MaxGain::AboveThreshold => "above".to_string(),
            };
            let ratio = e.reference_ratio.map_or("-".to_string(), |r| format!("{r:.4}"));
            s.push_str(&format!(
                "{:<16} {:>16.9e} {:>16.9e} {:>16.9e} {:>16.9e} {:>16} {:>12}\n",
                e.boundary.as_str(),
                e.f0,
                e.buckling_load,
                e.delta,
                e.delta_crit,
                gain,
                ratio
            ));
        }
        s
    }
}

/// Comb force applied as both the static and the varying axial load, the
/// resulting modulation depth for each boundary condition, and the gain the
/// averaging prediction gives for it.
pub fn design_report(
    beam: &BeamSpec,
    comb: &CombDriveSpec,
    q_factor: f64,
    n_elements: usize,
    reference_delta: Option<f64>,
) -> Result<DesignReport> {
    let force = comb_force(comb)?;
    let resonator = ResonatorParams::normalized(q_factor)?;
    let delta_crit = critical_delta(&resonator, 2.0)?;
    let load = AxialLoadCase {
        p_static: force,
        p_var: force,
    };
    let entries = BoundaryCondition::ALL
        .iter()
        .map(|&bc| {
            let m = delta_k_over_k(beam, n_elements, bc, &load)?;
            Ok(DesignEntry {
                boundary: bc,
                f0: m.f0,
                buckling_load: m.buckling_load,
                delta: m.delta,
                delta_from_frequency: m.delta_from_frequency,
                delta_crit,
                max_gain: oracle::max_gain(q_factor, m.delta)?,
                reference_ratio: reference_delta.map(|r| m.delta / r),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DesignReport {
        force,
        q_factor,
        reference_delta,
        entries,
    })
}
