//! Uniformly sampled scalar signals and probe generators.

use crate::{Error, Result};

/// A uniformly sampled scalar time series.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    values: Vec<f64>,
    ts: f64,
}

impl SampledSignal {
    /// Builds a signal, checking that all samples are finite and `ts > 0`.
    pub fn new(values: Vec<f64>, ts: f64) -> Result<Self> {
        if !(ts > 0.0) || !ts.is_finite() {
            return Err(Error::domain(format!(
                "sampling period must be > 0, got {ts}"
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::numeric(format!("non-finite sample {v}")));
        }
        Ok(Self { values, ts })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn ts(&self) -> f64 {
        self.ts
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Checks that `self` and `other` share the sampling period to 1e-12
    /// relative tolerance.
    pub fn same_ts(&self, other: &SampledSignal) -> Result<()> {
        check_ts_match(self.ts, other.ts)
    }

    /// Root-mean-square of the samples.
    pub fn rms(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64).sqrt()
    }
}

pub(crate) fn check_ts_match(left: f64, right: f64) -> Result<()> {
    let scale = left.abs().max(right.abs());
    if (left - right).abs() > 1e-12 * scale {
        return Err(Error::TsMismatch { left, right });
    }
    Ok(())
}

/// All-ones step of length `n`.
pub fn step_signal(n: usize, ts: f64) -> Result<SampledSignal> {
    if n == 0 {
        return Err(Error::domain("signal length must be >= 1"));
    }
    SampledSignal::new(vec![1.0; n], ts)
}

/// Multisine probe `sum_i sin(omega_i * ts * t)` for `t = 0..n-1`.
pub fn sine_probe(omegas: &[f64], n: usize, ts: f64) -> Result<SampledSignal> {
    if omegas.is_empty() {
        return Err(Error::domain("frequency list must not be empty"));
    }
    if n == 0 {
        return Err(Error::domain("signal length must be >= 1"));
    }
    let values = (0..n)
        .map(|t| omegas.iter().map(|w| (w * ts * t as f64).sin()).sum())
        .collect();
    SampledSignal::new(values, ts)
}

/// `count` frequencies linearly spanning `[lo, hi]` (endpoints included).
pub fn linspace_frequencies(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

/// Samples of the unit-amplitude filtered step `1 - exp(-t/tau)`, the
/// response of `1/(tau*s + 1)` to a unit step from rest.
pub fn filtered_step(tau: f64, n: usize, ts: f64) -> Result<SampledSignal> {
    if !(tau > 0.0) {
        return Err(Error::domain(format!(
            "filter time constant must be > 0, got {tau}"
        )));
    }
    if n == 0 {
        return Err(Error::domain("signal length must be >= 1"));
    }
    let values = (0..n)
        .map(|t| 1.0 - (-(t as f64) * ts / tau).exp())
        .collect();
    SampledSignal::new(values, ts)
}
