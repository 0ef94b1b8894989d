//! Correlation statistics over pairs of complex envelopes: the squared
//! cross-correlation coefficient, conditional fluctuations and dispersion,
//! phase-space histograms, and running estimates over N-run ensembles with a
//! 1/√N uncertainty band.
//!
//! All temporal averages are raw moments (the envelopes are fluctuation
//! records, zero-mean by construction): C = |⟨s m*⟩|² / (⟨|s|²⟩⟨|m|²⟩), the
//! conditional residual is s − (⟨s m*⟩/⟨|m|²⟩) m, and its relative dispersion
//! is √(1−C). C is invariant under rotation and rescaling of either channel.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::envelope::ComplexEnvelope;
use crate::sim::RunRecord;
use crate::{Error, Result};

/// Raw second moments of one envelope pair.
#[derive(Debug, Clone, Copy)]
struct Moments {
    /// Σ s·m* over samples.
    cross: Complex64,
    /// Σ |s|².
    signal: f64,
    /// Σ |m|².
    meter: f64,
    n: usize,
}

fn accumulate(signal: &ComplexEnvelope, meter: &ComplexEnvelope) -> Result<Moments> {
    signal.check_same_grid(meter)?;
    if signal.len() < 2 {
        return Err(Error::DegenerateData(format!(
            "need at least 2 samples, got {}",
            signal.len()
        )));
    }
    let mut cross = Complex64::new(0.0, 0.0);
    let mut ss = 0.0;
    let mut mm = 0.0;
    for (s, m) in signal.samples.iter().zip(&meter.samples) {
        cross += s * m.conj();
        ss += s.norm_sqr();
        mm += m.norm_sqr();
    }
    Ok(Moments { cross, signal: ss, meter: mm, n: signal.len() })
}

fn coefficient_from(m: &Moments) -> Result<f64> {
    if m.signal <= 0.0 || m.meter <= 0.0 {
        return Err(Error::DegenerateData(
            "correlation undefined for a zero-variance channel".into(),
        ));
    }
    Ok((m.cross.norm_sqr() / (m.signal * m.meter)).min(1.0))
}

/// Correlation estimate between two channels of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    /// Squared correlation coefficient, in [0, 1].
    pub coefficient: f64,
    /// ⟨|s|²⟩, signal channel units².
    pub signal_variance: f64,
    /// ⟨|m|²⟩, meter channel units².
    pub meter_variance: f64,
    /// ⟨s m*⟩.
    pub cross_moment: Complex64,
    pub n_samples: usize,
    /// Conditional over raw signal dispersion, √(1−C).
    pub conditional_dispersion_ratio: f64,
}

/// Squared cross-correlation coefficient from temporal averages over all
/// samples. Errors when either channel has zero variance or the records do
/// not share a grid.
pub fn correlation_coefficient(
    signal: &ComplexEnvelope,
    meter: &ComplexEnvelope,
) -> Result<CorrelationReport> {
    let m = accumulate(signal, meter)?;
    let c = coefficient_from(&m)?;
    let n = m.n as f64;
    let signal_variance = m.signal / n;
    let meter_variance = m.meter / n;
    // conditional variance by the regression identity
    // var_s = var_cond + |cross|²/var_m
    let cross_moment = m.cross / n;
    let cond_var = (signal_variance - cross_moment.norm_sqr() / meter_variance).max(0.0);
    Ok(CorrelationReport {
        coefficient: c,
        signal_variance,
        meter_variance,
        cross_moment,
        n_samples: m.n,
        conditional_dispersion_ratio: (cond_var / signal_variance).sqrt(),
    })
}

/// Residual of the signal after optimal linear prediction from the meter:
/// s − (⟨s m*⟩/⟨|m|²⟩) m. Its variance over the signal variance is 1 − C.
pub fn conditional_fluctuations(
    signal: &ComplexEnvelope,
    meter: &ComplexEnvelope,
) -> Result<ComplexEnvelope> {
    let m = accumulate(signal, meter)?;
    if m.meter <= 0.0 {
        return Err(Error::DegenerateData(
            "conditional fluctuations undefined for a zero-variance meter".into(),
        ));
    }
    let gain = m.cross / m.meter;
    let samples = signal
        .samples
        .iter()
        .zip(&meter.samples)
        .map(|(s, mt)| s - gain * mt)
        .collect();
    Ok(ComplexEnvelope { samples, ..signal.clone() })
}

/// How runs are combined into one running correlation estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AccumulationMode {
    /// Pool cross moments and variances across runs, then form the
    /// coefficient. Asymptotically unbiased; the default.
    Moments,
    /// Average the per-run coefficients. Biased upward by roughly the
    /// reciprocal number of independent samples per run; kept for
    /// comparison.
    PerRun,
}

impl std::str::FromStr for AccumulationMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "moments" => Ok(AccumulationMode::Moments),
            "per-run" | "per_run" => Ok(AccumulationMode::PerRun),
            other => Err(format!("unknown mode {other:?}, expected moments|per-run")),
        }
    }
}

/// Running correlation estimate vs. the number of averaged runs, with the
/// 1/√N uncertainty band and the model asymptote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTrace {
    pub mode: AccumulationMode,
    /// Model value the estimate converges to, drive_ratio/(1+drive_ratio).
    pub asymptote: f64,
    /// Empirical single-run estimator spread u₁, measured over the first
    /// min(20, N) runs and frozen.
    pub single_run_spread: f64,
    /// estimates[i] uses the first i+1 runs.
    pub estimates: Vec<f64>,
    /// half_widths[i] = u₁/√(i+1) exactly.
    pub half_widths: Vec<f64>,
}

/// Running correlation estimate from the first N records, for every N up to
/// the sweep length. Per-run moments are computed between the acquired
/// signal and meter channels.
pub fn sweep_correlation(records: &[RunRecord], mode: AccumulationMode) -> Result<SweepTrace> {
    if records.is_empty() {
        return Err(Error::DegenerateData("sweep needs at least one record".into()));
    }
    let moments: Vec<Moments> = records
        .iter()
        .map(|r| accumulate(&r.signal_out, &r.meter_out))
        .collect::<Result<_>>()?;
    let per_run: Vec<f64> = moments.iter().map(coefficient_from).collect::<Result<_>>()?;

    let estimates = match mode {
        AccumulationMode::Moments => {
            let mut cross = Complex64::new(0.0, 0.0);
            let mut ss = 0.0;
            let mut mm = 0.0;
            moments
                .iter()
                .map(|m| {
                    cross += m.cross;
                    ss += m.signal;
                    mm += m.meter;
                    (cross.norm_sqr() / (ss * mm)).min(1.0)
                })
                .collect()
        }
        AccumulationMode::PerRun => {
            let mut acc = 0.0;
            per_run
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    acc += c;
                    acc / (i + 1) as f64
                })
                .collect()
        }
    };

    // empirical single-run spread from the early runs, then frozen so the
    // band is u1/sqrt(N) for every N
    let head = &per_run[..per_run.len().min(20)];
    let spread = if head.len() < 2 {
        0.0
    } else {
        let mean = head.iter().sum::<f64>() / head.len() as f64;
        let var = head.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (head.len() - 1) as f64;
        var.sqrt()
    };
    let half_widths = (1..=per_run.len())
        .map(|n| spread / (n as f64).sqrt())
        .collect();

    let ratio = records[0].params.drive_ratio;
    Ok(SweepTrace {
        mode,
        asymptote: ratio / (1.0 + ratio),
        single_run_spread: spread,
        estimates,
        half_widths,
    })
}

/// Square bin grid centered on the origin of the (X, Y) plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramGrid {
    /// Bins per axis.
    pub bins: usize,
    /// Grid spans [-half_span, half_span] on both axes.
    pub half_span: f64,
}

impl HistogramGrid {
    pub const DEFAULT_BINS: usize = 64;

    /// Grid spanning ±4 per-axis standard deviations of the reference
    /// channel, the shared-axes convention for comparing raw and conditional
    /// distributions. Falls back to a unit span for an all-zero channel.
    pub fn covering(reference: &ComplexEnvelope, bins: usize) -> Self {
        let axis_std = (reference.mean_power() / 2.0).sqrt();
        let half_span = if axis_std > 0.0 { 4.0 * axis_std } else { 1.0 };
        Self { bins, half_span }
    }

    pub fn bin_width(&self) -> f64 {
        2.0 * self.half_span / self.bins as f64
    }

    pub fn center(&self, index: usize) -> f64 {
        (index as f64 + 0.5) * self.bin_width() - self.half_span
    }

    fn index(&self, value: f64) -> usize {
        let raw = ((value + self.half_span) / self.bin_width()).floor();
        (raw.max(0.0) as usize).min(self.bins - 1)
    }
}

/// Probability-normalized 2-D histogram of the (X, Y) samples of an envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceHistogram {
    pub grid: HistogramGrid,
    /// Row-major probabilities, index = x_bin * bins + y_bin; sums to 1.
    pub probability: Vec<f64>,
    pub n_samples: usize,
}

impl PhaseSpaceHistogram {
    pub fn peak(&self) -> f64 {
        self.probability.iter().cloned().fold(0.0, f64::max)
    }
}

/// Histogram the quadrature samples on the given grid. Samples beyond the
/// span are clamped into the edge bins so the total probability is exactly 1.
pub fn histogram(envelope: &ComplexEnvelope, grid: HistogramGrid) -> Result<PhaseSpaceHistogram> {
    if envelope.is_empty() {
        return Err(Error::DegenerateData("cannot histogram an empty envelope".into()));
    }
    if grid.bins == 0 || !(grid.half_span > 0.0) {
        return Err(Error::DegenerateData(format!(
            "invalid histogram grid: {} bins, half span {}",
            grid.bins, grid.half_span
        )));
    }
    let mut counts = vec![0u64; grid.bins * grid.bins];
    for z in &envelope.samples {
        counts[grid.index(z.re) * grid.bins + grid.index(z.im)] += 1;
    }
    let total = envelope.len() as f64;
    Ok(PhaseSpaceHistogram {
        grid,
        probability: counts.into_iter().map(|c| c as f64 / total).collect(),
        n_samples: envelope.len(),
    })
}
