//! Envelope extraction and the measurements built on it: gain, beat
//! frequency and exponential growth rate.

use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::integrator::{run_to_steady_state, IntegratorConfig, SettleConfig, SteadyStatus, TimeSeries};
use crate::system::MathieuSystem;

/// Envelopes whose peak-to-peak modulation is below this fraction of the mean
/// are treated as flat.
pub const BEAT_DEPTH_THRESHOLD: f64 = 0.01;
/// Minimum autocorrelation at the detected beat period.
pub const BEAT_AUTOCORRELATION_MIN: f64 = 0.5;

/// Lock-in output: one sample per drive period, each averaged over a sliding
/// window of whole drive periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSeries {
    /// Window-centre times.
    pub t: Vec<f64>,
    pub i_comp: Vec<f64>,
    pub q_comp: Vec<f64>,
    pub amplitude: Vec<f64>,
    /// Reference (drive) angular frequency.
    pub omega_a: f64,
}

impl EnvelopeSeries {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Builds a sliding-window envelope from per-period I/Q samples, where
    /// period `k` starts at `t0 + k * T_A`.
    pub fn from_period_iq(per_period: &[(f64, f64)], omega_a: f64, window_periods: usize, t0: f64) -> Result<Self> {
        if window_periods == 0 {
            return Err(invalid("window_periods must be >= 1"));
        }
        if per_period.len() < window_periods {
            return Err(Error::InsufficientData(format!(
                "{} periods available, window needs {}",
                per_period.len(),
                window_periods
            )));
        }
        let period = 2.0 * PI / omega_a;
        let n = per_period.len() - window_periods + 1;
        let w = window_periods as f64;
        let mut out = Self {
            t: Vec::with_capacity(n),
            i_comp: Vec::with_capacity(n),
            q_comp: Vec::with_capacity(n),
            amplitude: Vec::with_capacity(n),
            omega_a,
        };
        // Fresh sums per window: no running-sum drift, so the output does not
        // depend on where the series was cut.
        for k in 0..n {
            let (si, sq) = per_period[k..k + window_periods]
                .iter()
                .fold((0.0, 0.0), |(a, b), &(i, q)| (a + i, b + q));
            let (i, q) = (si / w, sq / w);
            out.t.push(t0 + (k as f64 + 0.5 * w) * period);
            out.i_comp.push(i);
            out.q_comp.push(q);
            out.amplitude.push(i.hypot(q));
        }
        Ok(out)
    }

    pub fn mean_amplitude(&self) -> f64 {
        if self.amplitude.is_empty() {
            return 0.0;
        }
        self.amplitude.iter().sum::<f64>() / self.amplitude.len() as f64
    }

    /// Peak-to-peak modulation over twice the mean.
    pub fn modulation_depth(&self) -> f64 {
        let mean = self.mean_amplitude();
        if mean <= 0.0 {
            return 0.0;
        }
        let (lo, hi) = self
            .amplitude
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| {
                (lo.min(a), hi.max(a))
            });
        (hi - lo) / (2.0 * mean)
    }
}

fn per_period_iq(series: &TimeSeries, omega_a: f64) -> Result<Vec<(f64, f64)>> {
    let n = series.sample_rate;
    if n < 2 {
        return Err(invalid("series needs at least 2 samples per period"));
    }
    if series.t.len() != series.z.len() {
        return Err(invalid("t and z lengths differ"));
    }
    if series.t.len() >= 2 {
        let h = series.t[1] - series.t[0];
        let expected = 2.0 * PI / (omega_a * n as f64);
        if ((h - expected) / expected).abs() > 1e-6 {
            return Err(invalid(format!(
                "sample spacing {h} does not give {n} samples per period of omega_a = {omega_a}"
            )));
        }
    }
    let scale = 2.0 / n as f64;
    Ok(series
        .t
        .chunks_exact(n)
        .zip(series.z.chunks_exact(n))
        .map(|(tc, zc)| {
            let (si, sq) = tc.iter().zip(zc).fold((0.0, 0.0), |(a, b), (&t, &z)| {
                let (s, c) = (omega_a * t).sin_cos();
                (a + z * c, b - z * s)
            });
            (scale * si, scale * sq)
        })
        .collect())
}

/// Quadrature demodulation at `omega_a`: `I = 2 <z cos(wA t)>`,
/// `Q = 2 <z (-sin(wA t))>` over sliding windows of `window_periods` periods,
/// advanced one period at a time.
pub fn demodulate(series: &TimeSeries, omega_a: f64, window_periods: usize) -> Result<EnvelopeSeries> {
    if !(omega_a > 0.0) {
        return Err(invalid("omega_a must be > 0"));
    }
    let per_period = per_period_iq(series, omega_a)?;
    let t0 = series.t.first().copied().unwrap_or(0.0);
    EnvelopeSeries::from_period_iq(&per_period, omega_a, window_periods, t0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainResult {
    pub gain: f64,
    pub pumped_amp: f64,
    pub unpumped_amp: f64,
    pub status: SteadyStatus,
    pub transient_peak: f64,
    pub periods_used: u64,
}

/// Settled amplitude with the pump on, divided by the settled amplitude of
/// the same system with `delta = 0`.
///
/// If either run does not settle, its status is reported (Unstable takes
/// precedence) and the gain is the ratio of the last envelope values.
pub fn gain(system: &MathieuSystem, cfg: &IntegratorConfig, settle: &SettleConfig) -> Result<GainResult> {
    if !(system.drive.accel_amplitude > 0.0) {
        return Err(invalid("gain needs a non-zero drive amplitude"));
    }
    let unpumped_sys = system.with_delta(0.0);
    let (pumped, unpumped) = rayon::join(
        || run_to_steady_state(system, cfg, settle),
        || run_to_steady_state(&unpumped_sys, cfg, settle),
    );
    let (pumped, unpumped) = (pumped?, unpumped?);
    let status = match (pumped.status, unpumped.status) {
        (SteadyStatus::Unstable, _) | (_, SteadyStatus::Unstable) => SteadyStatus::Unstable,
        (SteadyStatus::Settled, SteadyStatus::Settled) => SteadyStatus::Settled,
        _ => SteadyStatus::MaxPeriodsReached,
    };
    Ok(GainResult {
        gain: pumped.amplitude / unpumped.amplitude,
        pumped_amp: pumped.amplitude,
        unpumped_amp: unpumped.amplitude,
        status,
        transient_peak: pumped.transient_peak,
        periods_used: pumped.periods_used,
    })
}

/// Dominant modulation frequency of the envelope amplitude, in cycles per
/// drive period. `Ok(None)` for a flat envelope.
pub fn beat_frequency(envelope: &EnvelopeSeries) -> Result<Option<f64>> {
    let a = &envelope.amplitude;
    let n = a.len();
    if n < 16 {
        return Err(Error::InsufficientData(format!("{n} envelope samples; need >= 16")));
    }
    if envelope.modulation_depth() < BEAT_DEPTH_THRESHOLD {
        return Ok(None);
    }
    let dt = (envelope.t[n - 1] - envelope.t[0]) / (n - 1) as f64;
    let drive_period = 2.0 * PI / envelope.omega_a;

    let mean = envelope.mean_amplitude();
    let x: Vec<f64> = a.iter().map(|v| v - mean).collect();
    let mut buf: Vec<Complex<f64>> = x
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let w = 0.5 - 0.5 * (2.0 * PI * k as f64 / n as f64).cos();
            Complex::new(v * w, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mag: Vec<f64> = buf[..n / 2 + 1].iter().map(|c| c.norm()).collect();
    let (k, _) = mag
        .iter()
        .enumerate()
        .skip(1)
        .take(n / 2 - 1)
        .fold(
            (1, f64::NEG_INFINITY),
            |best, (k, &m)| if m > best.1 { (k, m) } else { best },
        );

    // Parabolic interpolation on log magnitude (exact for a Gaussian peak,
    // close for the Hann main lobe).
    let offset = if k + 1 < mag.len() && mag[k - 1] > 0.0 && mag[k + 1] > 0.0 {
        let (l, c, r) = (mag[k - 1].ln(), mag[k].ln(), mag[k + 1].ln());
        let denom = l - 2.0 * c + r;
        if denom < 0.0 {
            0.5 * (l - r) / denom
        } else {
            0.0
        }
    } else {
        0.0
    };
    let cycles_per_sample = (k as f64 + offset) / n as f64;

    let lag = (1.0 / cycles_per_sample).round() as usize;
    if lag == 0 || lag > n / 2 {
        return Err(Error::NotPeriodic { autocorrelation: 0.0 });
    }
    let ac = autocorrelation(&x, lag);
    if ac <= BEAT_AUTOCORRELATION_MIN {
        return Err(Error::NotPeriodic { autocorrelation: ac });
    }
    Ok(Some(cycles_per_sample * drive_period / dt))
}

fn autocorrelation(x: &[f64], lag: usize) -> f64 {
    let a = &x[..x.len() - lag];
    let b = &x[lag..];
    let num: f64 = a.iter().zip(b).map(|(p, q)| p * q).sum();
    let den = (a.iter().map(|p| p * p).sum::<f64>() * b.iter().map(|q| q * q).sum::<f64>()).sqrt();
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Least-squares slope of `ln(envelope)` against time over the final half of
/// the series, using one-period demodulation windows. Units: 1/time.
pub fn growth_rate(series: &TimeSeries, omega_a: f64) -> Result<f64> {
    let env = demodulate(series, omega_a, 1)?;
    if env.len() < 100 {
        return Err(Error::InsufficientData(format!(
            "{} drive periods; growth_rate needs >= 100",
            env.len()
        )));
    }
    let start = env.len() / 2;
    let t = &env.t[start..];
    let amp = &env.amplitude[start..];
    if amp.iter().any(|&a| !(a > 0.0)) {
        return Err(Error::DegenerateFit("envelope touches zero".into()));
    }
    let y: Vec<f64> = amp.iter().map(|a| a.ln()).collect();
    let m = t.len() as f64;
    let tm = t.iter().sum::<f64>() / m;
    let ym = y.iter().sum::<f64>() / m;
    let (sxy, sxx) = t.iter().zip(&y).fold((0.0, 0.0), |(sxy, sxx), (&ti, &yi)| {
        (sxy + (ti - tm) * (yi - ym), sxx + (ti - tm) * (ti - tm))
    });
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(amp: f64, phase: f64, periods: usize) -> TimeSeries {
        TimeSeries::from_fn(1.0, 64, periods, |t| amp * (t + phase).cos())
    }

    #[test]
    fn pure_tone_has_constant_envelope() {
        let env = demodulate(&tone(3.0, 0.0, 40), 1.0, 10).unwrap();
        assert_eq!(env.len(), 31);
        for k in 0..env.len() {
            assert!((env.amplitude[k] - 3.0).abs() < 1e-6);
            assert!(env.q_comp[k].abs() < 1e-6);
        }
    }

    #[test]
    fn phase_is_recovered() {
        let env = demodulate(&tone(1.5, 0.7, 20), 1.0, 5).unwrap();
        // z = A cos(t + p) = A cos p cos t + A sin p (-sin t).
        assert!((env.q_comp[0].atan2(env.i_comp[0]) - 0.7).abs() < 1e-9);
    }

    #[test]
    fn zero_signal() {
        let s = TimeSeries::from_fn(1.0, 32, 20, |_| 0.0);
        let env = demodulate(&s, 1.0, 4).unwrap();
        assert!(env.amplitude.iter().all(|&a| a == 0.0));
        assert_eq!(beat_frequency(&EnvelopeSeries { ..env.clone() }).unwrap_or(None), None);
    }

    #[test]
    fn too_short_for_window() {
        assert!(matches!(
            demodulate(&tone(1.0, 0.0, 5), 1.0, 10),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn mismatched_sampling_is_rejected() {
        assert!(demodulate(&tone(1.0, 0.0, 20), 1.1, 2).is_err());
    }

    #[test]
    fn synthetic_beat() {
        let n = 10_000;
        let omega = 1.0;
        let period = 2.0 * PI / omega;
        let t: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) * period).collect();
        let amp: Vec<f64> = t
            .iter()
            .map(|&t| 1.0 + 0.2 * (2.0 * PI * 0.003 * t / period).cos())
            .collect();
        let env = EnvelopeSeries {
            i_comp: amp.clone(),
            q_comp: vec![0.0; n],
            amplitude: amp,
            t,
            omega_a: omega,
        };
        let f = beat_frequency(&env).unwrap().unwrap();
        assert!((f / 0.003 - 1.0).abs() < 0.02, "{f}");
    }

    #[test]
    fn white_noise_is_not_periodic() {
        // Deterministic pseudo-random sequence (LCG) with a large mean.
        let mut s: u64 = 12345;
        let amp: Vec<f64> = (0..4096)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                1.0 + 0.3 * ((s >> 11) as f64 / (1u64 << 53) as f64 - 0.5)
            })
            .collect();
        let n = amp.len();
        let env = EnvelopeSeries {
            t: (0..n).map(|k| k as f64 * 2.0 * PI).collect(),
            i_comp: amp.clone(),
            q_comp: vec![0.0; n],
            amplitude: amp,
            omega_a: 1.0,
        };
        assert!(matches!(beat_frequency(&env), Err(Error::NotPeriodic { .. })));
    }

    #[test]
    fn growth_rate_of_constructed_exponential() {
        let s = TimeSeries::from_fn(1.0, 64, 400, |t| (0.01 * t).exp() * t.cos());
        let r = growth_rate(&s, 1.0).unwrap();
        assert!((r / 0.01 - 1.0).abs() < 0.01, "{r}");
    }

    #[test]
    fn growth_rate_needs_data_and_signal() {
        let s = TimeSeries::from_fn(1.0, 64, 50, |t| t.cos());
        assert!(matches!(growth_rate(&s, 1.0), Err(Error::InsufficientData(_))));
        let s = TimeSeries::from_fn(1.0, 64, 200, |_| 0.0);
        assert!(matches!(growth_rate(&s, 1.0), Err(Error::DegenerateFit(_))));
    }

    #[test]
    fn gain_requires_drive() {
        let sys = MathieuSystem::resonant(100.0, 0.01, 0.0).unwrap();
        assert!(gain(&sys, &IntegratorConfig::default(), &SettleConfig::default()).is_err());
    }

    #[test]
    fn gain_without_pump_is_exactly_one() {
        let sys = MathieuSystem::resonant(50.0, 0.0, 1.0).unwrap();
        let g = gain(&sys, &IntegratorConfig::default(), &SettleConfig::default()).unwrap();
        assert_eq!(g.gain, 1.0);
        assert_eq!(g.status, SteadyStatus::Settled);
    }
}
