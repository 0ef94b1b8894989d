//! Seeded synthesis of band-limited complex Gaussian envelopes.
//!
//! Synthesis happens in the frequency domain: every FFT bin inside the
//! requested band receives an independent circular complex Gaussian whose
//! variance realizes the target power spectral density, bins outside the band
//! stay exactly zero, and one inverse transform yields the time series. This
//! gives exact in-band PSD control, no filter transients, and bit-identical
//! output for identical (spec, seed).
//!
//! PSD convention: `target_psd` is the one-sided physical PSD of the
//! underlying narrowband process, and the envelope satisfies
//! ⟨|z|²⟩ = target_psd × bandwidth, i.e. each quadrature is flat at
//! `target_psd` over its half-band. Hence a displacement envelope built from
//! a PSD in m²/Hz has an in-band mean square equal to the physical variance.
//!
//! Every generator draws from a counter-based ChaCha stream: run seeds select
//! the stream key, and the drive, thermal, and detection-floor channels of a
//! run use distinct stream numbers of the same key, so sweeps parallelize
//! without any stream overlap.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::envelope::{bin_offset, ComplexEnvelope, Unit};
use crate::physics::{radiation_displacement_transfer, susceptibility, ExperimentParams, BOLTZMANN};
use crate::{Error, Result};

/// ChaCha stream numbers for the independent noise channels of one run.
pub(crate) const DRIVE_STREAM: u64 = 0;
pub(crate) const THERMAL_STREAM: u64 = 1;
pub(crate) const SHOT_STREAM: u64 = 2;

/// Recipe for one band-limited Gaussian envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Full two-sided envelope bandwidth, Hz; bins with baseband offset in
    /// [-bandwidth/2, bandwidth/2) are populated.
    pub bandwidth: f64,
    /// Flat in-band PSD, unit²/Hz.
    pub target_psd: f64,
    pub seed: u64,
    /// Record length, s.
    pub duration: f64,
    /// Envelope sample rate, Hz.
    pub sample_rate: f64,
}

impl NoiseSpec {
    pub fn sample_count(&self) -> usize {
        (self.sample_rate * self.duration).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !self.bandwidth.is_finite() || self.bandwidth < 0.0 {
            return Err(Error::InvalidSpec(format!("bandwidth must be >= 0, got {}", self.bandwidth)));
        }
        if !self.target_psd.is_finite() || self.target_psd < 0.0 {
            return Err(Error::InvalidSpec(format!("target_psd must be >= 0, got {}", self.target_psd)));
        }
        if !(self.sample_rate > 0.0) || !(self.duration > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "sample_rate {} and duration {} must be > 0",
                self.sample_rate, self.duration
            )));
        }
        if self.bandwidth > self.sample_rate {
            return Err(Error::InvalidSpec(format!(
                "bandwidth {} exceeds sample rate {}",
                self.bandwidth, self.sample_rate
            )));
        }
        if self.sample_count() == 0 {
            return Err(Error::InvalidSpec(
                "sample_rate * duration rounds to zero samples".into(),
            ));
        }
        Ok(())
    }
}

fn channel_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Frequency-domain synthesis with an arbitrary in-band PSD profile.
/// `psd` receives the baseband offset of each in-band bin.
pub(crate) fn gen_with_profile(
    spec: &NoiseSpec,
    center_freq: f64,
    unit: Unit,
    stream: u64,
    psd: impl Fn(f64) -> f64,
) -> Result<ComplexEnvelope> {
    spec.validate()?;
    let n = spec.sample_count();
    let fs = spec.sample_rate;
    let half = spec.bandwidth / 2.0;
    let mut rng = channel_rng(spec.seed, stream);

    let mut spectrum = vec![Complex64::new(0.0, 0.0); n];
    for (k, bin) in spectrum.iter_mut().enumerate() {
        let offset = bin_offset(k, n, fs);
        if offset >= -half && offset < half {
            // bin variance psd * fs * n realizes the PSD after the 1/n inverse
            let sigma = (psd(offset) * fs * n as f64 / 2.0).sqrt();
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *bin = Complex64::new(sigma * re, sigma * im);
        }
    }

    crate::envelope::inverse_fft(&mut spectrum);
    let norm = 1.0 / n as f64;
    for z in &mut spectrum {
        *z *= norm;
    }
    Ok(ComplexEnvelope {
        samples: spectrum,
        sample_rate: fs,
        center_freq,
        unit,
    })
}

/// Flat band-limited complex Gaussian envelope per the module conventions.
/// Identical specs produce bit-identical envelopes.
pub fn gen_band_limited_gaussian(
    spec: &NoiseSpec,
    center_freq: f64,
    unit: Unit,
) -> Result<ComplexEnvelope> {
    gen_with_profile(spec, center_freq, unit, DRIVE_STREAM, |_| spec.target_psd)
}

/// One-sided thermal displacement PSD of the mirror mode at `freq` (Hz),
/// in m²/Hz: S(f) = 4 k_B T Im χ(2πf) / (2πf). The per-Hz normalization is
/// such that the integral over (0, ∞) in f equals the equipartition variance
/// k_B T / (M Ω_M²).
pub fn thermal_psd(params: &ExperimentParams, freq: f64) -> Result<f64> {
    if !(freq > 0.0) {
        return Err(Error::InvalidParams(format!(
            "thermal PSD requires freq > 0, got {freq}"
        )));
    }
    let omega = 2.0 * std::f64::consts::PI * freq;
    let chi = susceptibility(&params.oscillator, freq);
    Ok(4.0 * BOLTZMANN * params.temperature * chi.im / omega)
}

fn drive_spec(params: &ExperimentParams) -> Result<NoiseSpec> {
    let s_t = thermal_psd(params, params.center_freq)?;
    let h = radiation_displacement_transfer(params, params.center_freq).norm_sqr();
    Ok(NoiseSpec {
        bandwidth: params.drive_bandwidth,
        target_psd: params.drive_ratio * s_t / h,
        seed: params.seed,
        duration: params.run_duration,
        sample_rate: params.sample_rate,
    })
}

/// Incident signal-intensity drive envelope (photons/s), with PSD calibrated
/// so that the radiation-pressure displacement it induces at the center
/// frequency is `drive_ratio` times the thermal displacement PSD there.
pub fn gen_drive_envelope(params: &ExperimentParams) -> Result<ComplexEnvelope> {
    params.validate()?;
    let spec = drive_spec(params)?;
    gen_with_profile(&spec, params.center_freq, Unit::PhotonsPerSecond, DRIVE_STREAM, |_| {
        spec.target_psd
    })
}

/// Thermal displacement envelope of the mirror (m). Far from the mechanical
/// resonance the band is flat at the center-frequency PSD; within
/// 10 analysis bandwidths of the resonance the exact susceptibility profile
/// colors the band instead.
pub fn gen_thermal_envelope(params: &ExperimentParams) -> Result<ComplexEnvelope> {
    params.validate()?;
    let s_center = thermal_psd(params, params.center_freq)?;
    let spec = NoiseSpec {
        bandwidth: params.drive_bandwidth,
        target_psd: s_center,
        seed: params.seed,
        duration: params.run_duration,
        sample_rate: params.sample_rate,
    };
    let near_resonance = (params.center_freq - params.oscillator.resonance_freq).abs()
        < 10.0 * params.analysis_bandwidth;
    if near_resonance && params.temperature > 0.0 {
        gen_with_profile(&spec, params.center_freq, Unit::Meters, THERMAL_STREAM, |offset| {
            thermal_psd(params, params.center_freq + offset)
                .expect("validated params keep the band at positive frequencies")
        })
    } else {
        gen_with_profile(&spec, params.center_freq, Unit::Meters, THERMAL_STREAM, |_| s_center)
    }
}

/// Displacement-equivalent detection floor of the meter readout (m), flat at
/// the configured amplitude spectral density. Additive to the meter channel
/// only.
pub fn gen_shot_floor(params: &ExperimentParams) -> Result<ComplexEnvelope> {
    params.validate()?;
    let floor = params.beams.shot_noise_floor;
    let spec = NoiseSpec {
        bandwidth: params.drive_bandwidth,
        target_psd: floor * floor,
        seed: params.seed,
        duration: params.run_duration,
        sample_rate: params.sample_rate,
    };
    gen_with_profile(&spec, params.center_freq, Unit::Meters, SHOT_STREAM, |_| floor * floor)
}
