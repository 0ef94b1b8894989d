//! File formats: envelope CSVs with JSON sidecars, directory-per-run records
//! with a versioned manifest, and JSON documents for correlation reports and
//! sweep traces. Floats are written in shortest round-trip form, so reading a
//! file back reproduces the exact sample values and re-running a producer
//! reproduces byte-identical files.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::envelope::{ComplexEnvelope, Unit};
use crate::estimators::{AccumulationMode, CorrelationReport, PhaseSpaceHistogram, SweepTrace};
use crate::noise::NoiseSpec;
use crate::physics::ExperimentParams;
use crate::sim::{Calibration, RunRecord};
use crate::{Error, Result};

/// Version tag of every manifest and document this module writes.
pub const SCHEMA_VERSION: u32 = 1;

/// File names inside a run directory.
pub const SIGNAL_OUT_CSV: &str = "signal_out.csv";
pub const METER_OUT_CSV: &str = "meter_out.csv";
pub const METER_DISPLACEMENT_CSV: &str = "meter_displacement.csv";
pub const MANIFEST_JSON: &str = "manifest.json";

/// Write one envelope as CSV with the header
/// `t_seconds,X,Y,unit,center_freq_hz,sample_rate_hz`.
pub fn write_envelope_csv(path: &Path, env: &ComplexEnvelope) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t_seconds", "X", "Y", "unit", "center_freq_hz", "sample_rate_hz"])?;
    for (i, z) in env.samples.iter().enumerate() {
        let t = i as f64 / env.sample_rate;
        w.write_record([
            fmt_f64(t),
            fmt_f64(z.re),
            fmt_f64(z.im),
            env.unit.as_str().to_string(),
            fmt_f64(env.center_freq),
            fmt_f64(env.sample_rate),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Read an envelope written by [`write_envelope_csv`]. Sample values round
/// trip exactly.
pub fn read_envelope_csv(path: &Path) -> Result<ComplexEnvelope> {
    let mut r = csv::Reader::from_path(path)?;
    let mut samples = Vec::new();
    let mut meta: Option<(Unit, f64, f64)> = None;
    for record in r.records() {
        let record = record?;
        if record.len() != 6 {
            return Err(Error::Format(format!(
                "{}: expected 6 columns, got {}",
                path.display(),
                record.len()
            )));
        }
        let x = parse_f64(&record[1], path)?;
        let y = parse_f64(&record[2], path)?;
        samples.push(Complex64::new(x, y));
        if meta.is_none() {
            meta = Some((
                Unit::parse(&record[3])?,
                parse_f64(&record[4], path)?,
                parse_f64(&record[5], path)?,
            ));
        }
    }
    let (unit, center_freq, sample_rate) = meta.ok_or_else(|| {
        Error::Format(format!("{}: envelope file has no samples", path.display()))
    })?;
    Ok(ComplexEnvelope { samples, sample_rate, center_freq, unit })
}

/// Synthesis metadata accompanying a standalone envelope CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSidecar {
    pub schema_version: u32,
    pub spec: NoiseSpec,
    pub seed: u64,
    pub unit: Unit,
    pub center_freq: f64,
}

/// Write an envelope CSV plus its `.json` sidecar carrying the noise spec
/// and seed.
pub fn write_envelope_with_sidecar(
    csv_path: &Path,
    env: &ComplexEnvelope,
    spec: &NoiseSpec,
) -> Result<()> {
    write_envelope_csv(csv_path, env)?;
    let sidecar = EnvelopeSidecar {
        schema_version: SCHEMA_VERSION,
        spec: *spec,
        seed: spec.seed,
        unit: env.unit,
        center_freq: env.center_freq,
    };
    write_json(&csv_path.with_extension("json"), &sidecar)
}

/// Versioned metadata of one run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub seed: u64,
    /// Digest of the producing configuration, hex.
    pub config_digest: String,
    pub params: ExperimentParams,
    pub calibration: Calibration,
    /// Acquisition filter shape applied to both channels.
    pub filter: String,
    /// Producer information sufficient to re-run the command, if the record
    /// was written by the CLI.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<serde_json::Value>,
}

/// Write a record as a directory: three envelope CSVs plus `manifest.json`.
pub fn write_run_dir(
    dir: &Path,
    record: &RunRecord,
    config_digest: &str,
    command: Option<serde_json::Value>,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_envelope_csv(&dir.join(SIGNAL_OUT_CSV), &record.signal_out)?;
    write_envelope_csv(&dir.join(METER_OUT_CSV), &record.meter_out)?;
    write_envelope_csv(&dir.join(METER_DISPLACEMENT_CSV), &record.meter_displacement)?;
    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        seed: record.seed,
        config_digest: config_digest.to_string(),
        params: record.params,
        calibration: record.calibration,
        filter: "brick_wall".to_string(),
        command,
    };
    write_json(&dir.join(MANIFEST_JSON), &manifest)
}

/// Read a run directory back into a record and its manifest.
pub fn read_run_dir(dir: &Path) -> Result<(RunRecord, RunManifest)> {
    let manifest: RunManifest = read_json(&dir.join(MANIFEST_JSON))?;
    let record = RunRecord {
        signal_out: read_envelope_csv(&dir.join(SIGNAL_OUT_CSV))?,
        meter_out: read_envelope_csv(&dir.join(METER_OUT_CSV))?,
        meter_displacement: read_envelope_csv(&dir.join(METER_DISPLACEMENT_CSV))?,
        seed: manifest.seed,
        params: manifest.params,
        calibration: manifest.calibration,
    };
    Ok((record, manifest))
}

/// Peak probabilities of the raw and conditional phase-space histograms on a
/// shared grid; their ratio tracks the inverse conditional variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramPeaks {
    pub raw_peak: f64,
    pub conditional_peak: f64,
    pub peak_density_ratio: f64,
}

/// Correlation analysis of one run as written by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub seed: u64,
    pub config_digest: String,
    pub report: CorrelationReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub histogram_peaks: Option<HistogramPeaks>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<serde_json::Value>,
}

/// Sweep analysis: both accumulation modes, the requested one marked primary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepDocument {
    pub schema_version: u32,
    pub base_seed: u64,
    pub n_runs: usize,
    pub config_digest: String,
    pub primary_mode: AccumulationMode,
    pub moments: SweepTrace,
    pub per_run: SweepTrace,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<serde_json::Value>,
}

/// Histogram CSV: a `# seed=.. config_digest=..` provenance line, then
/// `bin_x_center,bin_y_center,probability` rows.
pub fn write_histogram_csv(
    path: &Path,
    hist: &PhaseSpaceHistogram,
    seed: u64,
    config_digest: &str,
) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("# seed={seed} config_digest={config_digest}\n"));
    out.push_str("bin_x_center,bin_y_center,probability\n");
    let bins = hist.grid.bins;
    for ix in 0..bins {
        for iy in 0..bins {
            out.push_str(&format!(
                "{},{},{}\n",
                fmt_f64(hist.grid.center(ix)),
                fmt_f64(hist.grid.center(iy)),
                fmt_f64(hist.probability[ix * bins + iy])
            ));
        }
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut file = fs::File::create(path)?;
    let text = serde_json::to_string_pretty(value)?;
    file.write_all(text.as_bytes())?;
    file.write_all(b"\n")?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

fn fmt_f64(v: f64) -> String {
    // shortest representation that parses back to the same bits
    format!("{v}")
}

fn parse_f64(s: &str, path: &Path) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|e| Error::Format(format!("{}: bad float {s:?}: {e}", path.display())))
}
