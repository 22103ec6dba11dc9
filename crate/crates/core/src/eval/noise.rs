use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::scenario::{ConstellationScenario, Priority};

/// Estimation error between the attacker's nominal world and the true one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Standard deviation of each unit size, as a fraction of its nominal size.
    pub size_std_ratio: f64,
    /// Standard deviation of each satellite's downlink rate, as a fraction.
    pub rate_std_ratio: f64,
    /// Queued-unit count shifts uniformly within `±jitter`.
    pub initial_queue_jitter_units: u32,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            size_std_ratio: 0.1,
            rate_std_ratio: 0.1,
            initial_queue_jitter_units: 10,
        }
    }
}

impl NoiseModel {
    pub fn none() -> Self {
        NoiseModel {
            size_std_ratio: 0.0,
            rate_std_ratio: 0.0,
            initial_queue_jitter_units: 0,
        }
    }

    /// Size and rate ratios set to `ratio`, jitter scaled so that 0.1 gives
    /// ten units.
    pub fn with_ratio(ratio: f64) -> Self {
        NoiseModel {
            size_std_ratio: ratio,
            rate_std_ratio: ratio,
            initial_queue_jitter_units: (ratio * 100.0).round() as u32,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, r) in [
            ("size_std_ratio", self.size_std_ratio),
            ("rate_std_ratio", self.rate_std_ratio),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return Err(format!("{name} {r} outside [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.size_std_ratio == 0.0 && self.rate_std_ratio == 0.0 && self.initial_queue_jitter_units == 0
    }
}

/// Gaussian around `nominal` truncated below at 10% of nominal, sampled by
/// inverting the truncated CDF so one uniform draw maps to one value.
pub fn sample_truncated<R: Rng + ?Sized>(rng: &mut R, nominal: f64, std_ratio: f64) -> f64 {
    let u: f64 = rng.random();
    if std_ratio == 0.0 {
        return nominal;
    }
    let standard = Normal::standard();
    let lower = standard.cdf(-0.9 / std_ratio);
    let p = (lower + u * (1.0 - lower)).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
    let x = nominal * (1.0 + std_ratio * standard.inverse_cdf(p));
    x.max(0.1 * nominal)
}

fn resample_u64<R: Rng + ?Sized>(rng: &mut R, nominal: u64, std_ratio: f64) -> u64 {
    (sample_truncated(rng, nominal as f64, std_ratio).round() as u64).max(1)
}

/// The true world behind a nominal scenario: every low-priority unit size
/// and downlink rate resampled, queued-unit counts jittered. Queued units
/// share one resampled size per satellite.
///
/// Draws are standardised and scaled by the ratios, so one seed yields the
/// same relative error pattern at every noise level.
pub fn perturb<R: Rng + ?Sized>(
    scenario: &ConstellationScenario,
    noise: &NoiseModel,
    rng: &mut R,
) -> ConstellationScenario {
    let mut out = scenario.clone();
    for sat in out.satellites.iter_mut().filter(|s| s.priority == Priority::Low) {
        sat.downlink_rate_bps = resample_u64(rng, sat.downlink_rate_bps, noise.rate_std_ratio);
    }
    for trace in out.trace.satellites.values_mut() {
        let u: f64 = rng.random();
        let shift = ((2.0 * u - 1.0) * noise.initial_queue_jitter_units as f64).round() as i64;
        trace.initial_queue.count = (trace.initial_queue.count as i64 + shift).max(0) as u32;
        trace.initial_queue.size_bytes = resample_u64(rng, trace.initial_queue.size_bytes, noise.size_std_ratio);
        for unit in &mut trace.units {
            unit.size_bytes = resample_u64(rng, unit.size_bytes, noise.size_std_ratio);
        }
    }
    out
}
