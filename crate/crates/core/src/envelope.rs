//! Complex baseband envelopes.
//!
//! A narrowband record x(t) = X(t) cos(Ω_c t) + Y(t) sin(Ω_c t) is stored as
//! the uniformly sampled complex envelope z = X + iY around the center
//! frequency, exactly what an I/Q-mode analyzer acquires. Frequency-domain
//! helpers evaluate transfer functions per FFT bin at the physical frequency
//! Ω_c + δ, where δ is the baseband offset of the bin.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Physical unit of the envelope samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    /// Intensity fluctuations, photons/s.
    PhotonsPerSecond,
    /// Displacement, m.
    Meters,
    /// Optical phase, rad.
    Radians,
}

impl Unit {
    pub fn as_str(&self) -> &'static str {
        match self {
            Unit::PhotonsPerSecond => "photons_per_second",
            Unit::Meters => "meters",
            Unit::Radians => "radians",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "photons_per_second" => Ok(Unit::PhotonsPerSecond),
            "meters" => Ok(Unit::Meters),
            "radians" => Ok(Unit::Radians),
            other => Err(Error::Format(format!("unknown unit tag {other:?}"))),
        }
    }
}

/// Uniformly sampled complex baseband time series at a center frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexEnvelope {
    /// Quadrature samples X + iY.
    pub samples: Vec<Complex64>,
    /// Sample rate, Hz.
    pub sample_rate: f64,
    /// Carrier frequency the record is demodulated around, Hz.
    pub center_freq: f64,
    pub unit: Unit,
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place inverse FFT, unnormalized (callers divide by n).
pub(crate) fn inverse_fft(buf: &mut [Complex64]) {
    if buf.is_empty() {
        return;
    }
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()).process(buf));
}

/// Baseband offset frequency of FFT bin `k` out of `n` at rate `fs`,
/// in [-fs/2, fs/2).
pub(crate) fn bin_offset(k: usize, n: usize, fs: f64) -> f64 {
    let k = k as f64;
    let n = n as f64;
    if k < n / 2.0 {
        k * fs / n
    } else {
        (k - n) * fs / n
    }
}

impl ComplexEnvelope {
    pub fn zeros(n: usize, sample_rate: f64, center_freq: f64, unit: Unit) -> Self {
        Self {
            samples: vec![Complex64::new(0.0, 0.0); n],
            sample_rate,
            center_freq,
            unit,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 / self.sample_rate
    }

    pub fn mean(&self) -> Complex64 {
        if self.is_empty() {
            return Complex64::new(0.0, 0.0);
        }
        self.samples.iter().sum::<Complex64>() / self.len() as f64
    }

    /// Temporal average of |z|², the raw power of the fluctuations.
    pub fn mean_power(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.len() as f64
    }

    /// Multiply every sample by a complex constant, in place.
    pub fn scale(&mut self, factor: Complex64) {
        for z in &mut self.samples {
            *z *= factor;
        }
    }

    /// Sample-wise sum. Both envelopes must share grid and unit.
    pub fn add(&self, other: &ComplexEnvelope) -> Result<ComplexEnvelope> {
        self.check_same_grid(other)?;
        if self.unit != other.unit {
            return Err(Error::DegenerateData(format!(
                "cannot add {} to {}",
                other.unit.as_str(),
                self.unit.as_str()
            )));
        }
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a + b)
            .collect();
        Ok(ComplexEnvelope { samples, ..self.clone() })
    }

    pub fn check_same_grid(&self, other: &ComplexEnvelope) -> Result<()> {
        if self.len() != other.len()
            || self.sample_rate != other.sample_rate
            || self.center_freq != other.center_freq
        {
            return Err(Error::DegenerateData(format!(
                "envelope grids differ: {} samples @ {} Hz around {} Hz vs {} @ {} around {}",
                self.len(),
                self.sample_rate,
                self.center_freq,
                other.len(),
                other.sample_rate,
                other.center_freq
            )));
        }
        Ok(())
    }

    /// Apply a frequency-domain transfer function per FFT bin. The closure
    /// receives the baseband offset δ of each bin; callers evaluate physical
    /// responses at center_freq + δ. Returns a new envelope tagged `unit`.
    pub fn apply_transfer(&self, unit: Unit, transfer: impl Fn(f64) -> Complex64) -> ComplexEnvelope {
        let n = self.len();
        if n == 0 {
            return ComplexEnvelope { unit, ..self.clone() };
        }
        let mut spectrum = self.samples.clone();
        PLANNER.with(|p| {
            let mut planner = p.borrow_mut();
            planner.plan_fft_forward(n).process(&mut spectrum);
            for (k, bin) in spectrum.iter_mut().enumerate() {
                *bin *= transfer(bin_offset(k, n, self.sample_rate));
            }
            planner.plan_fft_inverse(n).process(&mut spectrum);
        });
        let norm = 1.0 / n as f64;
        for z in &mut spectrum {
            *z *= norm;
        }
        ComplexEnvelope {
            samples: spectrum,
            sample_rate: self.sample_rate,
            center_freq: self.center_freq,
            unit,
        }
    }

    /// Brick-wall low-pass in baseband: keeps bins with offset in
    /// [-bandwidth/2, bandwidth/2), zeroes the rest. The half-open interval
    /// makes the kept bin count exactly bandwidth × duration when they divide.
    pub fn band_limit(&self, bandwidth: f64) -> ComplexEnvelope {
        let half = bandwidth / 2.0;
        self.apply_transfer(self.unit, |offset| {
            if offset >= -half && offset < half {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// One-sided periodogram power in the bins with baseband offset selected
    /// by `select`, as a fraction of total sample count. Used by tests to
    /// check spectral confinement.
    pub fn band_power(&self, select: impl Fn(f64) -> bool) -> f64 {
        let n = self.len();
        if n == 0 {
            return 0.0;
        }
        let mut spectrum = self.samples.clone();
        PLANNER.with(|p| {
            p.borrow_mut().plan_fft_forward(n).process(&mut spectrum);
        });
        spectrum
            .iter()
            .enumerate()
            .filter(|(k, _)| select(bin_offset(*k, n, self.sample_rate)))
            .map(|(_, z)| z.norm_sqr())
            .sum::<f64>()
            / (n as f64 * n as f64)
    }
}
