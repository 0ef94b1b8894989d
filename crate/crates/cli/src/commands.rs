//! The four subcommands: noise budget, single acquisition, correlation
//! analysis of a stored run, and N-run sweeps.

use std::path::{Path, PathBuf};

use optocorr::estimators::{
    correlation_coefficient, conditional_fluctuations, histogram, sweep_correlation,
    AccumulationMode, HistogramGrid,
};
use optocorr::io::{
    self, HistogramPeaks, ReportDocument, SweepDocument, SCHEMA_VERSION,
};
use optocorr::noise::thermal_psd;
use optocorr::physics::{rad_thermal_ratio, radiation_displacement_transfer};
use optocorr::sim::{calibrate_meter, run_experiment, run_sweep};
use serde::Serialize;

use crate::config::{CommandInfo, RunConfig};
use crate::CliError;

fn command_info(
    subcommand: &str,
    config: &RunConfig,
    runs: Option<usize>,
    mode: Option<AccumulationMode>,
) -> serde_json::Value {
    serde_json::to_value(CommandInfo {
        subcommand: subcommand.to_string(),
        config: config.clone(),
        runs,
        mode,
    })
    .expect("command info serializes")
}

fn db_ratio(num: f64, den: f64) -> Option<f64> {
    if num > 0.0 && den > 0.0 {
        Some(10.0 * (num / den).log10())
    } else {
        None
    }
}

#[derive(Debug, Serialize)]
struct RatioDocument {
    schema_version: u32,
    seed: u64,
    config_digest: String,
    /// Predicted quantum radiation-pressure to thermal spectra ratio.
    rad_thermal_ratio: f64,
    thermal_psd_m2_per_hz: f64,
    drive_displacement_psd_m2_per_hz: f64,
    drive_envelope_psd_per_hz: f64,
    signal_photon_flux_per_s: f64,
    shot_floor_psd_m2_per_hz: f64,
    drive_to_thermal_db: Option<f64>,
    shot_to_thermal_db: Option<f64>,
    command: serde_json::Value,
}

/// Print the scaling-law ratio and the noise budget at the center frequency;
/// write the same numbers as `ratio.json` under the output root.
pub fn cmd_ratio(config: &RunConfig, out_root: &Path) -> Result<(), CliError> {
    let params = config.to_params()?;
    let ratio = rad_thermal_ratio(&params);
    let s_thermal = thermal_psd(&params, params.center_freq)?;
    let s_drive_disp = params.drive_ratio * s_thermal;
    let h = radiation_displacement_transfer(&params, params.center_freq).norm_sqr();
    let s_drive_env = if h > 0.0 { s_drive_disp / h } else { 0.0 };
    let floor = params.beams.shot_noise_floor;
    let s_shot = floor * floor;

    let doc = RatioDocument {
        schema_version: SCHEMA_VERSION,
        seed: params.seed,
        config_digest: config.digest(),
        rad_thermal_ratio: ratio,
        thermal_psd_m2_per_hz: s_thermal,
        drive_displacement_psd_m2_per_hz: s_drive_disp,
        drive_envelope_psd_per_hz: s_drive_env,
        signal_photon_flux_per_s: params.beams.signal_photon_flux(params.cavity.wavelength),
        shot_floor_psd_m2_per_hz: s_shot,
        drive_to_thermal_db: db_ratio(s_drive_disp, s_thermal),
        shot_to_thermal_db: db_ratio(s_shot, s_thermal),
        command: command_info("ratio", config, None, None),
    };

    println!("rad_thermal_ratio = {}", doc.rad_thermal_ratio);
    println!("thermal_psd_m2_per_hz = {:e}", doc.thermal_psd_m2_per_hz);
    println!("drive_displacement_psd_m2_per_hz = {:e}", doc.drive_displacement_psd_m2_per_hz);
    println!("drive_envelope_psd_per_hz = {:e}", doc.drive_envelope_psd_per_hz);
    println!("signal_photon_flux_per_s = {:e}", doc.signal_photon_flux_per_s);
    println!("shot_floor_psd_m2_per_hz = {:e}", doc.shot_floor_psd_m2_per_hz);
    match doc.drive_to_thermal_db {
        Some(db) => println!("drive_to_thermal_db = {db:.2}"),
        None => println!("drive_to_thermal_db = undefined"),
    }
    match doc.shot_to_thermal_db {
        Some(db) => println!("shot_to_thermal_db = {db:.2}"),
        None => println!("shot_to_thermal_db = undefined"),
    }

    std::fs::create_dir_all(out_root).map_err(optocorr::Error::from)?;
    io::write_json(&out_root.join("ratio.json"), &doc)?;
    Ok(())
}

/// Run one seeded acquisition, calibrate it, and write the run directory.
/// Returns the directory path.
pub fn cmd_simulate(config: &RunConfig, seed: u64, out_root: &Path) -> Result<PathBuf, CliError> {
    let mut config = config.clone();
    config.seed = seed;
    let params = config.to_params()?;
    let record = calibrate_meter(run_experiment(&params, seed)?);

    let dir = out_root.join(format!("run-{seed}"));
    io::write_run_dir(
        &dir,
        &record,
        &config.digest(),
        Some(command_info("simulate", &config, None, None)),
    )?;

    match correlation_coefficient(&record.signal_out, &record.meter_out) {
        Ok(report) => println!("C = {}", report.coefficient),
        Err(_) => println!("C undefined (degenerate channels)"),
    }
    println!("run_dir = {}", dir.display());
    Ok(dir)
}

/// Correlation report plus raw and conditional phase-space histograms for a
/// stored run; artifacts are written next to the run data.
pub fn cmd_correlate(run_dir: &Path) -> Result<(), CliError> {
    let (record, manifest) = io::read_run_dir(run_dir)?;
    let report = correlation_coefficient(&record.signal_out, &record.meter_out)?;
    let conditional = conditional_fluctuations(&record.signal_out, &record.meter_out)?;

    let grid = HistogramGrid::covering(&record.signal_out, HistogramGrid::DEFAULT_BINS);
    let raw = histogram(&record.signal_out, grid)?;
    let cond = histogram(&conditional, grid)?;
    let peaks = HistogramPeaks {
        raw_peak: raw.peak(),
        conditional_peak: cond.peak(),
        peak_density_ratio: cond.peak() / raw.peak(),
    };

    let doc = ReportDocument {
        schema_version: SCHEMA_VERSION,
        seed: manifest.seed,
        config_digest: manifest.config_digest.clone(),
        report,
        histogram_peaks: Some(peaks),
        command: manifest.command.clone(),
    };
    io::write_json(&run_dir.join("report.json"), &doc)?;
    io::write_histogram_csv(&run_dir.join("histogram_raw.csv"), &raw, manifest.seed, &manifest.config_digest)?;
    io::write_histogram_csv(
        &run_dir.join("histogram_conditional.csv"),
        &cond,
        manifest.seed,
        &manifest.config_digest,
    )?;

    println!("C = {}", report.coefficient);
    println!("conditional_dispersion_ratio = {}", report.conditional_dispersion_ratio);
    println!("histogram_peak_density_ratio = {}", peaks.peak_density_ratio);
    println!("report = {}", run_dir.join("report.json").display());
    Ok(())
}

/// N independent runs from consecutive seeds; running correlation estimates
/// in both accumulation modes land in `sweep.json`. Returns the output dir.
pub fn cmd_sweep(
    config: &RunConfig,
    base_seed: u64,
    n_runs: usize,
    primary_mode: AccumulationMode,
    out_root: &Path,
) -> Result<PathBuf, CliError> {
    if n_runs == 0 {
        return Err(CliError::Config("--runs must be at least 1".into()));
    }
    let mut config = config.clone();
    config.seed = base_seed;
    let params = config.to_params()?;
    let records: Vec<_> = run_sweep(&params, n_runs, base_seed)?
        .into_iter()
        .map(calibrate_meter)
        .collect();

    let moments = sweep_correlation(&records, AccumulationMode::Moments)?;
    let per_run = sweep_correlation(&records, AccumulationMode::PerRun)?;
    let primary = match primary_mode {
        AccumulationMode::Moments => &moments,
        AccumulationMode::PerRun => &per_run,
    };
    println!("n_runs = {n_runs}");
    println!("final_estimate = {}", primary.estimates.last().unwrap());
    println!("asymptote = {}", primary.asymptote);
    println!("final_half_width = {}", primary.half_widths.last().unwrap());

    let doc = SweepDocument {
        schema_version: SCHEMA_VERSION,
        base_seed,
        n_runs,
        config_digest: config.digest(),
        primary_mode,
        moments,
        per_run,
        command: Some(command_info("sweep", &config, Some(n_runs), Some(primary_mode))),
    };
    let dir = out_root.join(format!("sweep-{base_seed}-{n_runs}"));
    std::fs::create_dir_all(&dir).map_err(optocorr::Error::from)?;
    io::write_json(&dir.join("sweep.json"), &doc)?;
    println!("sweep = {}", dir.join("sweep.json").display());
    Ok(dir)
}
