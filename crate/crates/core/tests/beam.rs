use std::f64::consts::PI;

use approx::assert_relative_eq;
use nalgebra::{DMatrix, SymmetricEigen};
use paramq::analysis::gain;
use paramq::beam::{
    assemble, buckling_load, comb_force, delta_k_over_k, design_report, midpoint_stiffness, modal, reduce_to_mathieu,
    smallest_eigenpairs, AxialLoadCase, BeamSpec, BoundaryCondition, CombDriveSpec, DEFAULT_ELEMENTS,
};
use paramq::integrator::{IntegratorConfig, SettleConfig, SteadyStatus};
use paramq::oracle::{self, MaxGain};
use paramq::system::DuffingSpec;
use paramq::Error;

const CC: BoundaryCondition = BoundaryCondition::ClampedClamped;
const CG: BoundaryCondition = BoundaryCondition::ClampedGuided;
const N: usize = DEFAULT_ELEMENTS;

fn beam() -> BeamSpec {
    BeamSpec::silicon(200e-6, 5e-6, 10e-6).unwrap()
}

fn comb() -> CombDriveSpec {
    CombDriveSpec::new(70, 20e-6, 1e-6, 40.0).unwrap()
}

fn load(p_static: f64, p_var: f64) -> AxialLoadCase {
    AxialLoadCase { p_static, p_var }
}

fn delta(b: &BeamSpec, bc: BoundaryCondition, l: AxialLoadCase) -> f64 {
    delta_k_over_k(b, N, bc, &l).unwrap().delta
}

#[test]
fn clamped_clamped_frequency_matches_euler_bernoulli() {
    let b = beam();
    let lambda = 4.730040744862704;
    let f =
        lambda * lambda / (2.0 * PI * b.length * b.length) * (b.flexural_rigidity() / (b.density * b.area())).sqrt();
    assert_relative_eq!(modal(&b, N, CC, 0.0).unwrap().f0, f, max_relative = 1e-4);
}

#[test]
fn clamped_guided_frequency_matches_euler_bernoulli() {
    // Fundamental root of tan(x) + tanh(x) = 0.
    let lambda = 2.365020372431352;
    let b = beam();
    let f =
        lambda * lambda / (2.0 * PI * b.length * b.length) * (b.flexural_rigidity() / (b.density * b.area())).sqrt();
    assert_relative_eq!(modal(&b, N, CG, 0.0).unwrap().f0, f, max_relative = 1e-4);
}

#[test]
fn buckling_loads() {
    let b = beam();
    let ei = b.flexural_rigidity();
    let l2 = b.length * b.length;
    assert_relative_eq!(
        buckling_load(&b, N, CC).unwrap(),
        4.0 * PI * PI * ei / l2,
        max_relative = 1e-5
    );
    assert_relative_eq!(
        buckling_load(&b, N, CG).unwrap(),
        PI * PI * ei / l2,
        max_relative = 1e-5
    );
}

#[test]
fn midpoint_stiffness_matches_closed_form() {
    let b = beam();
    let ei = b.flexural_rigidity();
    let l3 = b.length.powi(3);
    assert_relative_eq!(
        midpoint_stiffness(&b, N, CC, 0.0).unwrap(),
        192.0 * ei / l3,
        max_relative = 1e-9
    );
    assert!(midpoint_stiffness(&b, N, CC, 1e-3).unwrap() > midpoint_stiffness(&b, N, CC, 0.0).unwrap());
    assert!(midpoint_stiffness(&b, 7, CC, 0.0).is_err());
}

#[test]
fn inverse_iteration_agrees_with_dense_solver() {
    let mats = assemble(&beam(), 16, CC).unwrap();
    let k = mats.loaded_stiffness(1e-3);
    let l = mats.mass.clone().cholesky().unwrap().l();
    let l_inv = l.try_inverse().unwrap();
    let c: DMatrix<f64> = &l_inv * &k * l_inv.transpose();
    let mut dense: Vec<f64> = SymmetricEigen::new(c).eigenvalues.iter().copied().collect();
    dense.sort_by(f64::total_cmp);
    let ours = smallest_eigenpairs(&k, &mats.mass, 3).unwrap().unwrap();
    for (pair, reference) in ours.iter().zip(&dense) {
        assert_relative_eq!(pair.value, *reference, max_relative = 1e-9);
        let residual = &k * &pair.vector - &mats.mass * &pair.vector * pair.value;
        assert!(residual.norm() <= 1e-8 * (&k * &pair.vector).norm());
    }
}

#[test]
fn eigenpairs_none_past_buckling() {
    let b = beam();
    let mats = assemble(&b, 16, CC).unwrap();
    let k = mats.loaded_stiffness(-1.5 * buckling_load(&b, 16, CC).unwrap());
    assert!(smallest_eigenpairs(&k, &mats.mass, 1).unwrap().is_none());
}

#[test]
fn mesh_refinement_converges() {
    let b = beam();
    for bc in BoundaryCondition::ALL {
        let f64e = modal(&b, 64, bc, 1e-4).unwrap().f0;
        let f128 = modal(&b, 128, bc, 1e-4).unwrap().f0;
        assert_relative_eq!(f64e, f128, max_relative = 5e-4);
        let l = load(1e-5, 1e-5);
        let d64 = delta_k_over_k(&b, 64, bc, &l).unwrap().delta;
        let d128 = delta_k_over_k(&b, 128, bc, &l).unwrap().delta;
        assert_relative_eq!(d64, d128, max_relative = 5e-4);
    }
}

#[test]
fn mode_shape_is_symmetric_with_unit_peak() {
    let m = modal(&beam(), N, CC, 0.0).unwrap();
    let w = &m.mode_shape;
    assert_eq!(w.len(), N + 1);
    assert_relative_eq!(w[N / 2], 1.0, epsilon = 1e-12);
    assert_eq!(w[0], 0.0);
    for k in 0..=N {
        assert_relative_eq!(w[k], w[N - k], epsilon = 1e-9);
    }
    let w0 = 2.0 * PI * m.f0;
    assert_relative_eq!(m.modal_stiffness, m.modal_mass * w0 * w0, max_relative = 1e-9);
}

#[test]
fn tension_stiffens_and_compression_softens() {
    let b = beam();
    let f0 = modal(&b, N, CC, 0.0).unwrap().f0;
    assert!(modal(&b, N, CC, 1e-3).unwrap().f0 > f0);
    assert!(modal(&b, N, CC, -1e-3).unwrap().f0 < f0);
}

#[test]
fn modulation_routes_agree() {
    for l in [load(2.47e-3, 1e-3), load(1e-5, 1e-5), load(-5e-3, 2e-3)] {
        let m = delta_k_over_k(&beam(), N, CC, &l).unwrap();
        assert_relative_eq!(m.delta_from_frequency, m.delta, max_relative = 1e-2);
    }
}

#[test]
fn large_load_gives_percent_level_modulation() {
    let d = delta(&beam(), CC, load(2.47e-3, 1e-3));
    assert!((0.025..=0.1).contains(&d), "delta {d}");
}

#[test]
fn modulation_scales_with_length_squared_over_rigidity() {
    let b = beam();
    let l = load(1e-6, 1e-6);
    let d = delta(&b, CC, l);
    let stiff = BeamSpec::new(b.length, b.width, b.thickness, 2.0 * b.youngs_modulus, b.density).unwrap();
    assert_relative_eq!(delta(&stiff, CC, l), 0.5 * d, max_relative = 1e-3);
    let wide = BeamSpec::silicon(b.length, 2.0 * b.width, b.thickness).unwrap();
    assert_relative_eq!(delta(&wide, CC, l), d / 8.0, max_relative = 1e-3);
    assert_relative_eq!(delta(&b.with_length(400e-6), CC, l), 4.0 * d, max_relative = 1e-3);
}

#[test]
fn modulation_is_linear_in_small_loads() {
    let b = beam();
    let d1 = delta(&b, CC, load(0.0, 1e-6));
    let d2 = delta(&b, CC, load(0.0, 2e-6));
    assert_relative_eq!(d2, 2.0 * d1, max_relative = 1e-6);
    assert_eq!(delta(&b, CC, load(0.0, 0.0)), 0.0);
}

#[test]
fn load_past_buckling_is_rejected() {
    let b = beam();
    let p_cr = buckling_load(&b, N, CC).unwrap();
    let err = delta_k_over_k(&b, N, CC, &load(-0.95 * p_cr, 0.0)).unwrap_err();
    assert!(matches!(err, Error::BeyondBuckling { .. }));
    let err = modal(&b, N, CC, -1.5 * p_cr).unwrap_err();
    assert!(matches!(err, Error::BeyondBuckling { .. }));
    assert!(delta_k_over_k(&b, N, CC, &load(0.0, -1.0)).is_err());
}

#[test]
fn comb_force_example() {
    assert_relative_eq!(comb_force(&comb()).unwrap(), 9.9167e-6, max_relative = 1e-4);
    assert_relative_eq!(
        comb_force(&comb().with_voltage(80.0)).unwrap(),
        4.0 * comb_force(&comb()).unwrap(),
        max_relative = 1e-12
    );
    assert_eq!(comb_force(&comb().with_voltage(0.0)).unwrap(), 0.0);
    assert!(CombDriveSpec::new(0, 20e-6, 1e-6, 40.0).is_err());
    assert!(CombDriveSpec::new(70, 20e-6, 0.0, 40.0).is_err());
}

#[test]
fn design_report_examples() {
    let r = design_report(&beam(), &comb(), 1000.0, N, Some(3e-4)).unwrap();
    assert_eq!(r.entries.len(), 2);
    let cc = r.entry(CC).unwrap();
    let cg = r.entry(CG).unwrap();
    assert!(cg.delta > 3.0 * cc.delta);
    assert_relative_eq!(cc.delta_crit, 2.0e-3, max_relative = 1e-3);
    let expected = oracle::max_gain(1000.0, cc.delta).unwrap();
    assert_eq!(cc.max_gain, expected);
    assert!(matches!(cc.max_gain, MaxGain::Gain(g) if g > 1.0 && g < 2.0));
    assert_relative_eq!(cc.reference_ratio.unwrap(), cc.delta / 3e-4, max_relative = 1e-12);
    let table = r.to_table();
    assert!(table.contains("clamped-clamped") && table.contains("clamped-guided"));
}

#[test]
fn zero_voltage_gives_no_gain() {
    let r = design_report(&beam(), &comb().with_voltage(0.0), 1000.0, N, None).unwrap();
    for e in &r.entries {
        assert_eq!(e.delta, 0.0);
        assert_eq!(e.max_gain, MaxGain::Gain(1.0));
        assert!(e.reference_ratio.is_none());
    }
}

#[test]
fn reduced_model_simulates_to_the_predicted_gain() {
    let reduced = reduce_to_mathieu(&beam(), N, CC, &load(1e-4, 1e-4), 100.0, 1.0, &DuffingSpec::linear()).unwrap();
    let sys = reduced.system;
    assert_eq!(sys.resonator.omega0, 1.0);
    assert_eq!(sys.pump.omega_p, 2.0);
    assert_eq!(sys.pump.delta, reduced.modulation.delta);
    assert_relative_eq!(
        reduced.resonator.omega0,
        2.0 * PI * reduced.modal.f0,
        max_relative = 1e-12
    );
    let g = gain(&sys, &IntegratorConfig::default(), &SettleConfig::default()).unwrap();
    assert_eq!(g.status, SteadyStatus::Settled);
    let expected = oracle::max_gain(100.0, sys.pump.delta).unwrap().value().unwrap();
    assert_relative_eq!(g.gain, expected, max_relative = 2e-2);
}
