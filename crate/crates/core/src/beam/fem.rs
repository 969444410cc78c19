//! Euler-Bernoulli beam elements with two nodes and Hermite shape functions.
//!
//! Each node carries a transverse displacement `w` and a rotation `theta`.
//! The geometric stiffness is per newton of axial load (tension positive),
//! so the loaded stiffness is `K + P * K_g`.

use nalgebra::{DMatrix, DVector};

use super::{BeamSpec, BoundaryCondition};
use crate::error::{invalid, Result};

pub const MIN_ELEMENTS: usize = 4;

/// Assembled matrices with the constrained degrees of freedom removed.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamMatrices {
    pub mass: DMatrix<f64>,
    pub stiffness: DMatrix<f64>,
    pub geometric: DMatrix<f64>,
    /// Global index (`2 * node + {0: w, 1: theta}`) of each retained dof.
    pub free_dofs: Vec<usize>,
    pub n_elements: usize,
}

impl BeamMatrices {
    pub fn n_nodes(&self) -> usize {
        self.n_elements + 1
    }

    /// `K + P * K_g`.
    pub fn loaded_stiffness(&self, axial_load: f64) -> DMatrix<f64> {
        &self.stiffness + &self.geometric * axial_load
    }

    /// Scatters a reduced vector back onto all `2 * n_nodes` dofs.
    pub fn expand(&self, reduced: &DVector<f64>) -> DVector<f64> {
        let mut full = DVector::zeros(2 * self.n_nodes());
        for (k, &g) in self.free_dofs.iter().enumerate() {
            full[g] = reduced[k];
        }
        full
    }

    /// Position of a global dof in the reduced system, if it is free.
    pub fn reduced_index(&self, global: usize) -> Option<usize> {
        self.free_dofs.iter().position(|&g| g == global)
    }
}

fn element_mass(rho_a: f64, l: f64) -> [[f64; 4]; 4] {
    let c = rho_a * l / 420.0;
    let l2 = l * l;
    [
        [156.0 * c, 22.0 * l * c, 54.0 * c, -13.0 * l * c],
        [22.0 * l * c, 4.0 * l2 * c, 13.0 * l * c, -3.0 * l2 * c],
        [54.0 * c, 13.0 * l * c, 156.0 * c, -22.0 * l * c],
        [-13.0 * l * c, -3.0 * l2 * c, -22.0 * l * c, 4.0 * l2 * c],
    ]
}

fn element_stiffness(ei: f64, l: f64) -> [[f64; 4]; 4] {
    let c = ei / (l * l * l);
    let l2 = l * l;
    [
        [12.0 * c, 6.0 * l * c, -12.0 * c, 6.0 * l * c],
        [6.0 * l * c, 4.0 * l2 * c, -6.0 * l * c, 2.0 * l2 * c],
        [-12.0 * c, -6.0 * l * c, 12.0 * c, -6.0 * l * c],
        [6.0 * l * c, 2.0 * l2 * c, -6.0 * l * c, 4.0 * l2 * c],
    ]
}

fn element_geometric(l: f64) -> [[f64; 4]; 4] {
    let c = 1.0 / (30.0 * l);
    let l2 = l * l;
    [
        [36.0 * c, 3.0 * l * c, -36.0 * c, 3.0 * l * c],
        [3.0 * l * c, 4.0 * l2 * c, -3.0 * l * c, -l2 * c],
        [-36.0 * c, -3.0 * l * c, 36.0 * c, -3.0 * l * c],
        [3.0 * l * c, -l2 * c, -3.0 * l * c, 4.0 * l2 * c],
    ]
}

fn constrained_dofs(bc: BoundaryCondition, n_nodes: usize) -> Vec<usize> {
    let last = n_nodes - 1;
    match bc {
        BoundaryCondition::ClampedClamped => vec![0, 1, 2 * last, 2 * last + 1],
        BoundaryCondition::ClampedGuided => vec![0, 1, 2 * last + 1],
    }
}

/// Assembles mass, bending stiffness and unit geometric stiffness for a
/// uniform beam of `n_elements` equal elements.
pub fn assemble(beam: &BeamSpec, n_elements: usize, bc: BoundaryCondition) -> Result<BeamMatrices> {
    beam.validate()?;
    if n_elements < MIN_ELEMENTS {
        return Err(invalid(format!(
            "n_elements must be >= {MIN_ELEMENTS}, got {n_elements}"
        )));
    }
    let n_nodes = n_elements + 1;
    let ndof = 2 * n_nodes;
    let l = beam.length / n_elements as f64;
    let me = element_mass(beam.density * beam.area(), l);
    let ke = element_stiffness(beam.flexural_rigidity(), l);
    let ge = element_geometric(l);

    let mut m = DMatrix::zeros(ndof, ndof);
    let mut k = DMatrix::zeros(ndof, ndof);
    let mut g = DMatrix::zeros(ndof, ndof);
    for e in 0..n_elements {
        let base = 2 * e;
        for r in 0..4 {
            for c in 0..4 {
                m[(base + r, base + c)] += me[r][c];
                k[(base + r, base + c)] += ke[r][c];
                g[(base + r, base + c)] += ge[r][c];
            }
        }
    }

    let fixed = constrained_dofs(bc, n_nodes);
    let free_dofs: Vec<usize> = (0..ndof).filter(|d| !fixed.contains(d)).collect();
    let reduce = |a: &DMatrix<f64>| a.select_rows(free_dofs.iter()).select_columns(free_dofs.iter());
    Ok(BeamMatrices {
        mass: reduce(&m),
        stiffness: reduce(&k),
        geometric: reduce(&g),
        free_dofs,
        n_elements,
    })
}

/// Static transverse stiffness at mid-span under axial load `axial_load`:
/// the inverse of the midpoint deflection under a unit midpoint force.
pub fn midpoint_stiffness(beam: &BeamSpec, n_elements: usize, bc: BoundaryCondition, axial_load: f64) -> Result<f64> {
    if !n_elements.is_multiple_of(2) {
        return Err(invalid("midpoint stiffness needs an even number of elements"));
    }
    let mats = assemble(beam, n_elements, bc)?;
    let mid = mats
        .reduced_index(n_elements)
        .ok_or_else(|| invalid("midpoint displacement is constrained"))?;
    let chol = mats
        .loaded_stiffness(axial_load)
        .cholesky()
        .ok_or_else(|| invalid("loaded stiffness is not positive definite"))?;
    let mut f = DVector::zeros(mats.free_dofs.len());
    f[mid] = 1.0;
    let u = chol.solve(&f);
    Ok(1.0 / u[mid])
}
