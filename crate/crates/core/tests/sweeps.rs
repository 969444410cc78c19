use std::f64::consts::FRAC_PI_4;

use approx::assert_relative_eq;
use paramq::integrator::{IntegratorConfig, SettleConfig};
use paramq::oracle::{self, amplified_drive_phase};
use paramq::sweeps::{calibrate_quadrature, required_delta_curve, run_sweep, RowStatus, SweepAxis, SweepSpec};
use paramq::system::MathieuSystem;

fn amplified(q: f64, delta: f64) -> MathieuSystem {
    MathieuSystem::resonant(q, delta, 1.0)
        .unwrap()
        .with_phases(amplified_drive_phase(0.0), 0.0)
}

fn cfg() -> IntegratorConfig {
    IntegratorConfig::default()
}

fn settle() -> SettleConfig {
    SettleConfig::default()
}

#[test]
fn one_row_per_value_in_order() {
    let base = amplified(100.0, 0.01);
    for (axis, values) in [
        (SweepAxis::DrivePhase, vec![0.0, 45.0, 90.0]),
        (SweepAxis::PumpPhase, vec![0.0, 90.0, 180.0, 270.0]),
        (SweepAxis::ActuationDetune, vec![-0.01, 0.0, 0.01]),
        (SweepAxis::Delta, vec![0.0, 0.005, 0.01, 0.015]),
    ] {
        let r = run_sweep(&SweepSpec::new(base, axis, values.clone())).unwrap();
        assert_eq!(r.axis, axis);
        assert_eq!(r.axis_values(), values);
        assert!(r.rows.iter().all(|row| row.status == RowStatus::Settled), "{axis:?}");
    }
}

#[test]
fn invalid_specs_are_rejected() {
    let base = amplified(100.0, 0.01);
    assert!(run_sweep(&SweepSpec::new(base, SweepAxis::Delta, vec![])).is_err());
    assert!(run_sweep(&SweepSpec::new(base, SweepAxis::Delta, vec![0.01, 0.005])).is_err());
    assert!(run_sweep(&SweepSpec::new(base, SweepAxis::Delta, vec![0.0, f64::NAN])).is_err());
    assert!(run_sweep(&SweepSpec::new(base, SweepAxis::QRequirement, vec![10.0])).is_err());
    let low_target = SweepSpec::new(base, SweepAxis::QRequirement, vec![10.0]).with_target_gain(0.5);
    assert!(run_sweep(&low_target).is_err());
}

#[test]
fn rows_do_not_depend_on_the_other_points() {
    let base = amplified(100.0, 0.012);
    for (axis, full) in [
        (SweepAxis::Delta, vec![0.004, 0.008, 0.012, 0.016]),
        (SweepAxis::ActuationDetune, vec![-0.02, 0.0, 0.02]),
        (SweepAxis::PumpPhase, vec![0.0, 60.0, 120.0]),
        (SweepAxis::FrequencyRatio, vec![2.0, 2.01, 2.02]),
    ] {
        let all = run_sweep(&SweepSpec::new(base, axis, full.clone())).unwrap();
        let subset = vec![full[0], full[full.len() - 1]];
        let part = run_sweep(&SweepSpec::new(base, axis, subset)).unwrap();
        assert_eq!(part.rows[0], all.rows[0], "{axis:?}");
        assert_eq!(part.rows[1], all.rows[full.len() - 1], "{axis:?}");
    }
}

#[test]
fn delta_sweep_examples_at_q1000() {
    let r = run_sweep(&SweepSpec::new(
        amplified(1000.0, 0.0),
        SweepAxis::Delta,
        vec![0.001, 0.0019],
    ))
    .unwrap();
    let g = r.gains();
    assert!(g[0] < 2.0 + 1e-2, "gain at 0.001: {}", g[0]);
    assert!(g[1] > 15.0, "gain at 0.0019: {}", g[1]);
    for row in &r.rows {
        assert_relative_eq!(row.gain, row.oracle_gain.unwrap(), max_relative = 2e-2);
    }
}

#[test]
fn delta_above_threshold_is_unstable() {
    let r = run_sweep(&SweepSpec::new(
        amplified(100.0, 0.0),
        SweepAxis::Delta,
        vec![0.01, 0.03],
    ))
    .unwrap();
    assert_eq!(r.rows[0].status, RowStatus::Settled);
    assert_eq!(r.rows[1].status, RowStatus::Unstable);
}

#[test]
fn required_delta_falls_as_q_rises() {
    let qs = [10.0, 30.0, 100.0, 300.0];
    let r = required_delta_curve(&amplified(10.0, 0.0), &qs, 5.0, &cfg(), &settle()).unwrap();
    let d: Vec<f64> = r.rows.iter().map(|row| row.required_delta.unwrap()).collect();
    assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
    for (row, q) in r.rows.iter().zip(qs) {
        assert_eq!(row.status, RowStatus::Settled);
        assert_relative_eq!(row.oracle_delta.unwrap(), oracle::required_delta(q, 5.0).unwrap());
        assert_relative_eq!(
            row.required_delta.unwrap(),
            row.oracle_delta.unwrap(),
            max_relative = 0.05
        );
        assert_relative_eq!(row.gain, 5.0, max_relative = 0.02);
    }
}

#[test]
fn calibrated_quadrature_offset() {
    let c = calibrate_quadrature(&amplified(200.0, 0.007), 8, &cfg(), &settle()).unwrap();
    assert!((c.theta0 - FRAC_PI_4).abs() < 1f64.to_radians(), "theta0 {}", c.theta0);
    let g = 0.7;
    assert_relative_eq!(c.gain_max, 1.0 / (1.0 - g), max_relative = 2e-2);
    assert_relative_eq!(c.gain_min, 1.0 / (1.0 + g), max_relative = 2e-2);
}

#[test]
fn calibration_rejects_nonlinear_or_sparse_inputs() {
    let base = amplified(100.0, 0.01);
    assert!(calibrate_quadrature(&base, 2, &cfg(), &settle()).is_err());
    assert!(calibrate_quadrature(&base.with_beta(1e-3), 8, &cfg(), &settle()).is_err());
}

#[test]
fn phase_sweep_tracks_the_oracle() {
    let values: Vec<f64> = (0..12).map(|k| 15.0 * k as f64).collect();
    let r = run_sweep(&SweepSpec::new(amplified(100.0, 0.012), SweepAxis::DrivePhase, values)).unwrap();
    for row in &r.rows {
        assert_relative_eq!(row.gain, row.oracle_gain.unwrap(), max_relative = 2e-2);
    }
    let g = r.gains();
    assert!(g[0] > g[6], "max at offset 0, min at 90 degrees");
}
