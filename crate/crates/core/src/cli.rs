//! Command-line front end.
//!
//! Results go to `--out DIR` (written atomically, with a `manifest.json`
//! describing the run) or to stdout when no output directory is configured.
//! Exit codes: 0 success, 1 computation or I/O error, 2 usage error.

use std::f64::consts::PI;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::analysis::EnvelopeSeries;
use crate::beam;
use crate::config::{OutputFormat, RunConfig};
use crate::error::{Error, Result};
use crate::integrator::{critical_delta, integrate, monodromy, run_to_steady_state, TimeSeries};
use crate::oracle;
use crate::report::{self, num};
use crate::sweeps::{run_sweep, SweepAxis, SweepResult, SweepSpec};
use crate::system::{PumpSpec, ResonatorParams};

#[derive(Debug, Clone, Parser)]
#[command(name = "paramq", version, about = "Parametric amplification of MEMS resonators")]
pub struct Cli {
    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Output format (overrides `output.format`).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
            Format::Svg => OutputFormat::Svg,
        }
    }
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Integrate the configured system to steady state.
    Simulate,
    /// One-parameter gain studies.
    Sweep {
        #[command(subcommand)]
        kind: SweepKind,
    },
    /// Closed-form averaging predictions.
    Oracle {
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        /// Response-quadrature angle for a single gain evaluation.
        #[arg(long, allow_hyphen_values = true)]
        theta_deg: Option<f64>,
    },
    /// Parametric threshold from the monodromy matrix.
    Floquet {
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        omega_p: Option<f64>,
    },
    /// Beam finite-element analyses.
    Beam {
        #[command(subcommand)]
        kind: BeamKind,
    },
    /// Electrostatic comb-drive force.
    CombForce {
        #[arg(long)]
        voltage: Option<f64>,
    },
    /// Comb force to modulation depth to predicted gain, for both boundary
    /// conditions.
    Design {
        #[arg(long)]
        q: Option<f64>,
    },
}

#[derive(Debug, Clone, Subcommand)]
pub enum SweepKind {
    /// Drive-phase offset sweep (pump-phase with `--pump`), degrees.
    Phase {
        #[arg(long)]
        pump: bool,
    },
    /// Drive frequency detuning from resonance, normalized units.
    Detune,
    /// Pump-to-drive frequency ratio, with beat detection.
    Ratio,
    /// Modulation depth delta.
    Delta,
    /// Required modulation depth against Q.
    QCurve {
        #[arg(long)]
        target_gain: Option<f64>,
    },
}

#[derive(Debug, Clone, Subcommand)]
pub enum BeamKind {
    /// Fundamental frequency, modal mass and stiffness, mode shape.
    Modal,
    /// Critical compressive axial load.
    Buckling,
    /// Stiffness modulation depth of the configured load case.
    DeltaK,
}

impl Command {
    pub fn name(&self) -> String {
        match self {
            Command::Simulate => "simulate".into(),
            Command::Sweep { kind } => format!(
                "sweep {}",
                match kind {
                    SweepKind::Phase { pump: false } => "phase",
                    SweepKind::Phase { pump: true } => "phase --pump",
                    SweepKind::Detune => "detune",
                    SweepKind::Ratio => "ratio",
                    SweepKind::Delta => "delta",
                    SweepKind::QCurve { .. } => "q-curve",
                }
            ),
            Command::Oracle { .. } => "oracle".into(),
            Command::Floquet { .. } => "floquet".into(),
            Command::Beam { kind } => format!(
                "beam {}",
                match kind {
                    BeamKind::Modal => "modal",
                    BeamKind::Buckling => "buckling",
                    BeamKind::DeltaK => "delta-k",
                }
            ),
            Command::CombForce { .. } => "comb-force".into(),
            Command::Design { .. } => "design".into(),
        }
    }
}

pub fn parse_command<I, T>(args: I) -> std::result::Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Cli::try_parse_from(args)
}

/// Parses and executes, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match parse_command(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

struct Artifact {
    name: String,
    contents: String,
}

fn artifact(name: impl Into<String>, contents: impl Into<String>) -> Artifact {
    Artifact {
        name: name.into(),
        contents: contents.into(),
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    program: &'static str,
    version: &'static str,
    command: String,
    format: OutputFormat,
    files: Vec<String>,
    config: &'a RunConfig,
}

pub fn execute(cli: &Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(f) = cli.format {
        cfg.output.format = f.into();
    }
    if let Some(o) = &cli.out {
        cfg.output.dir = Some(o.clone());
    }
    let format = cfg.output.format;
    let artifacts = match &cli.command {
        Command::Simulate => simulate(&cfg, format)?,
        Command::Sweep { kind } => sweep(&cfg, kind, format)?,
        Command::Oracle { q, delta, theta_deg } => oracle_cmd(&cfg, *q, *delta, *theta_deg, format)?,
        Command::Floquet { q, omega_p } => floquet(&cfg, *q, *omega_p, format)?,
        Command::Beam { kind } => beam_cmd(&cfg, kind, format)?,
        Command::CombForce { voltage } => comb_force(&cfg, *voltage, format)?,
        Command::Design { q } => design(&cfg, *q, format)?,
    };

    match &cfg.output.dir {
        Some(dir) => {
            let mut echo = cfg.clone();
            echo.output.dir = None;
            let mut files = Vec::with_capacity(artifacts.len());
            for a in &artifacts {
                report::write_atomic(dir, &a.name, &a.contents)?;
                files.push(a.name.clone());
            }
            let manifest = Manifest {
                program: env!("CARGO_PKG_NAME"),
                version: env!("CARGO_PKG_VERSION"),
                command: cli.command.name(),
                format,
                files,
                config: &echo,
            };
            report::write_atomic(dir, "manifest.json", &report::json(&manifest)?)?;
        }
        None => {
            for a in &artifacts {
                if artifacts.len() > 1 {
                    println!("# {}", a.name);
                }
                print!("{}", a.contents);
            }
        }
    }
    Ok(())
}

fn key_values(pairs: Vec<(&str, String)>, format: OutputFormat, stem: &str, title: &str) -> Result<Vec<Artifact>> {
    Ok(match format {
        OutputFormat::Csv => vec![artifact(format!("{stem}.csv"), report::key_value_csv(&pairs))],
        OutputFormat::Json => {
            let map: serde_json::Map<String, serde_json::Value> = pairs
                .iter()
                .map(|(k, v)| {
                    let value = v.parse::<f64>().ok().map_or_else(|| json!(v), |x| json!(x));
                    (k.to_string(), value)
                })
                .collect();
            vec![artifact(format!("{stem}.json"), report::json(&map)?)]
        }
        OutputFormat::Svg => {
            let lines: Vec<String> = pairs.iter().map(|(k, v)| format!("{k:<28} {v}")).collect();
            vec![artifact(format!("{stem}.svg"), report::svg_text(title, &lines))]
        }
    })
}

fn simulate(cfg: &RunConfig, format: OutputFormat) -> Result<Vec<Artifact>> {
    let sys = cfg.system.to_system()?;
    let result = run_to_steady_state(&sys, &cfg.integrator, &cfg.settle)?;
    let env = EnvelopeSeries::from_period_iq(
        &result.per_period,
        sys.drive.omega_a,
        cfg.simulate.envelope_window.min(result.per_period.len()).max(1),
        0.0,
    )?;
    let record = cfg.simulate.record_periods;
    let series = if record > 0 {
        match integrate(&sys, &cfg.integrator, record as f64 * sys.drive.period()) {
            Ok(ts) => ts,
            Err(Error::UnboundedGrowth { partial, .. }) => *partial,
            Err(e) => return Err(e),
        }
    } else {
        TimeSeries {
            t: vec![],
            z: vec![],
            sample_rate: cfg.integrator.steps_per_drive_period,
        }
    };
    let summary = vec![
        ("status", result.status.as_str().to_string()),
        ("amplitude", num(result.amplitude)),
        ("periods_used", result.periods_used.to_string()),
        ("transient_peak", num(result.transient_peak)),
        ("i", num(result.i_comp)),
        ("q", num(result.q_comp)),
        ("phase_rad", num(result.phase())),
    ];
    Ok(match format {
        OutputFormat::Csv => {
            let mut a = key_values(summary, format, "simulate_summary", "")?;
            a.push(artifact("envelope.csv", report::envelope_csv(&env)));
            a.push(artifact("timeseries.csv", report::timeseries_csv(&series)));
            a
        }
        OutputFormat::Json => vec![artifact(
            "simulate.json",
            report::json(&json!({
                "summary": {
                    "status": result.status.as_str(),
                    "amplitude": result.amplitude,
                    "periods_used": result.periods_used,
                    "transient_peak": result.transient_peak,
                    "i": result.i_comp,
                    "q": result.q_comp,
                },
                "envelope": env,
                "timeseries": series,
            }))?,
        )],
        OutputFormat::Svg => {
            let periods: Vec<f64> = env.t.iter().map(|t| t / sys.drive.period()).collect();
            vec![
                artifact(
                    "envelope.svg",
                    report::svg_plot(
                        "Envelope",
                        "drive periods",
                        "amplitude",
                        &periods,
                        &env.amplitude,
                        false,
                    )?,
                ),
                artifact(
                    "timeseries.svg",
                    report::svg_plot("Displacement", "t", "z", &series.t, &series.z, false)?,
                ),
            ]
        }
    })
}

fn sweep(cfg: &RunConfig, kind: &SweepKind, format: OutputFormat) -> Result<Vec<Artifact>> {
    let axis = match kind {
        SweepKind::Phase { pump: false } => SweepAxis::DrivePhase,
        SweepKind::Phase { pump: true } => SweepAxis::PumpPhase,
        SweepKind::Detune => SweepAxis::ActuationDetune,
        SweepKind::Ratio => SweepAxis::FrequencyRatio,
        SweepKind::Delta => SweepAxis::Delta,
        SweepKind::QCurve { .. } => SweepAxis::QRequirement,
    };
    let target = match kind {
        SweepKind::QCurve { target_gain: Some(g) } => *g,
        _ => cfg.sweep.target_gain,
    };
    let spec = SweepSpec {
        base: cfg.system.to_system()?,
        axis,
        values: cfg.sweep.values_for(axis, &cfg.system)?,
        target_gain: (axis == SweepAxis::QRequirement).then_some(target),
        integrator: cfg.integrator,
        settle: cfg.settle,
    };
    let result = run_sweep(&spec)?;
    let stem = format!("sweep_{}", axis_stem(axis));
    Ok(match format {
        OutputFormat::Csv => vec![artifact(format!("{stem}.csv"), report::sweep_csv(&result))],
        OutputFormat::Json => vec![artifact(format!("{stem}.json"), report::json(&result)?)],
        OutputFormat::Svg => vec![artifact(format!("{stem}.svg"), sweep_svg(&result)?)],
    })
}

fn axis_stem(axis: SweepAxis) -> &'static str {
    match axis {
        SweepAxis::DrivePhase => "drive_phase",
        SweepAxis::PumpPhase => "pump_phase",
        SweepAxis::ActuationDetune => "detune",
        SweepAxis::FrequencyRatio => "ratio",
        SweepAxis::Delta => "delta",
        SweepAxis::QRequirement => "q_curve",
    }
}

fn sweep_svg(result: &SweepResult) -> Result<String> {
    let x = result.axis_values();
    if result.axis == SweepAxis::QRequirement {
        let y: Vec<f64> = result
            .rows
            .iter()
            .map(|r| r.required_delta.unwrap_or(f64::NAN))
            .collect();
        return report::svg_plot("Required modulation depth", "Q", "delta", &x, &y, true);
    }
    let log_y = result.axis == SweepAxis::Delta;
    report::svg_plot(
        &format!("Gain vs {}", result.axis.as_str()),
        result.axis.as_str(),
        "gain",
        &x,
        &result.gains(),
        log_y,
    )
}

fn oracle_cmd(
    cfg: &RunConfig,
    q: Option<f64>,
    delta: Option<f64>,
    theta_deg: Option<f64>,
    format: OutputFormat,
) -> Result<Vec<Artifact>> {
    let q = q.unwrap_or(cfg.system.q_factor);
    let delta = delta.unwrap_or(cfg.system.delta);
    let p = oracle::predict(q, delta)?;
    let mut pairs = vec![
        ("q_factor", num(q)),
        ("delta", num(delta)),
        ("pump_margin", num(p.pump_margin)),
        ("gain_max", num(p.gain_max)),
        ("gain_min", num(p.gain_min)),
        (
            "required_delta_for_target",
            num(oracle::required_delta(q, cfg.sweep.target_gain)?),
        ),
        ("target_gain", num(cfg.sweep.target_gain)),
    ];
    if let Some(th) = theta_deg {
        pairs.push(("theta_deg", num(th)));
        pairs.push(("gain_at_theta", num(oracle::analytic_gain(q, delta, th.to_radians())?)));
    }
    key_values(pairs, format, "oracle", "Averaging prediction")
}

fn floquet(cfg: &RunConfig, q: Option<f64>, omega_p: Option<f64>, format: OutputFormat) -> Result<Vec<Artifact>> {
    let q = q.unwrap_or(cfg.system.q_factor);
    let omega_p = omega_p.unwrap_or(cfg.system.omega_p);
    let res = ResonatorParams::new(q, cfg.system.omega0)?;
    let dc = critical_delta(&res, omega_p)?;
    let m = monodromy(&res, &PumpSpec::new(cfg.system.delta, omega_p, 0.0)?)?;
    let pairs = vec![
        ("q_factor", num(q)),
        ("omega_p", num(omega_p)),
        ("delta_crit", num(dc)),
        ("delta_crit_q_over_2", num(0.5 * dc * q)),
        ("delta", num(cfg.system.delta)),
        ("max_multiplier", num(m.max_abs)),
        ("determinant", num(m.determinant())),
        ("liouville_determinant", num((-res.omega0 * m.pump_period / q).exp())),
    ];
    key_values(pairs, format, "floquet", "Floquet analysis")
}

fn beam_cmd(cfg: &RunConfig, kind: &BeamKind, format: OutputFormat) -> Result<Vec<Artifact>> {
    let b = cfg.beam.spec()?;
    let n = cfg.beam.n_elements;
    let bc = cfg.beam.boundary;
    let common = vec![("boundary", bc.as_str().to_string()), ("n_elements", n.to_string())];
    match kind {
        BeamKind::Modal => {
            let p = cfg.beam.p_static;
            let m = beam::modal(&b, n, bc, p)?;
            let mut pairs = common;
            pairs.extend([
                ("axial_load", num(p)),
                ("f0", num(m.f0)),
                ("modal_mass", num(m.modal_mass)),
                ("modal_stiffness", num(m.modal_stiffness)),
            ]);
            let x: Vec<f64> = (0..m.mode_shape.len())
                .map(|k| b.length * k as f64 / (m.mode_shape.len() - 1) as f64)
                .collect();
            match format {
                OutputFormat::Csv => {
                    let mut a = key_values(pairs, format, "modal", "")?;
                    let mut s = String::from("x,w\n");
                    for (xi, wi) in x.iter().zip(&m.mode_shape) {
                        s.push_str(&format!("{},{}\n", num(*xi), num(*wi)));
                    }
                    a.push(artifact("mode_shape.csv", s));
                    Ok(a)
                }
                OutputFormat::Json => Ok(vec![artifact(
                    "modal.json",
                    report::json(&json!({
                        "boundary": bc,
                        "n_elements": n,
                        "axial_load": p,
                        "modal": m,
                    }))?,
                )]),
                OutputFormat::Svg => Ok(vec![artifact(
                    "mode_shape.svg",
                    report::svg_plot("Fundamental mode", "x (m)", "w", &x, &m.mode_shape, false)?,
                )]),
            }
        }
        BeamKind::Buckling => {
            let p = beam::buckling_load(&b, n, bc)?;
            let euler = 4.0 * PI * PI * b.flexural_rigidity() / (b.length * b.length);
            let mut pairs = common;
            pairs.extend([("buckling_load", num(p)), ("euler_clamped_clamped", num(euler))]);
            key_values(pairs, format, "buckling", "Buckling load")
        }
        BeamKind::DeltaK => {
            let m = beam::delta_k_over_k(&b, n, bc, &cfg.beam.load())?;
            let mut pairs = common;
            pairs.extend([
                ("p_static", num(cfg.beam.p_static)),
                ("p_var", num(cfg.beam.p_var)),
                ("delta", num(m.delta)),
                ("delta_from_frequency", num(m.delta_from_frequency)),
                ("f0", num(m.f0)),
                ("modal_stiffness", num(m.modal_stiffness)),
                ("buckling_load", num(m.buckling_load)),
            ]);
            key_values(pairs, format, "delta_k", "Stiffness modulation")
        }
    }
}

fn comb_force(cfg: &RunConfig, voltage: Option<f64>, format: OutputFormat) -> Result<Vec<Artifact>> {
    let mut comb = cfg.comb.spec()?;
    if let Some(v) = voltage {
        comb = comb.with_voltage(v);
    }
    let f = beam::comb_force(&comb)?;
    let pairs = vec![
        ("n", comb.n.to_string()),
        ("finger_thickness", num(comb.finger_thickness)),
        ("gap", num(comb.gap)),
        ("voltage", num(comb.voltage)),
        ("force", num(f)),
    ];
    key_values(pairs, format, "comb_force", "Comb-drive force")
}

fn design(cfg: &RunConfig, q: Option<f64>, format: OutputFormat) -> Result<Vec<Artifact>> {
    let q = q.unwrap_or(cfg.system.q_factor);
    let r = beam::design_report(
        &cfg.beam.spec()?,
        &cfg.comb.spec()?,
        q,
        cfg.beam.n_elements,
        cfg.beam.reference_delta,
    )?;
    let table = r.to_table();
    let mut out = match format {
        OutputFormat::Csv => {
            let mut s = String::from(
                "boundary,f0,buckling_load,delta,delta_from_frequency,delta_crit,max_gain,reference_ratio\n",
            );
            for e in &r.entries {
                let gain = e.max_gain.value().map(num).unwrap_or_else(|| "AboveThreshold".into());
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    e.boundary.as_str(),
                    num(e.f0),
                    num(e.buckling_load),
                    num(e.delta),
                    num(e.delta_from_frequency),
                    num(e.delta_crit),
                    gain,
                    e.reference_ratio.map(num).unwrap_or_default()
                ));
            }
            vec![artifact("design.csv", s)]
        }
        OutputFormat::Json => vec![artifact("design.json", report::json(&r)?)],
        OutputFormat::Svg => {
            let lines: Vec<String> = table.lines().map(str::to_string).collect();
            vec![artifact("design.svg", report::svg_text("Design report", &lines))]
        }
    };
    out.push(artifact("design.txt", table));
    Ok(out)
}
