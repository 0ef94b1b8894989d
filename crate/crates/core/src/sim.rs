//! One full acquisition run: noise synthesis, transfer-function composition,
//! dual-channel brick-wall acquisition, and phase-space calibration.
//!
//! The mirror motion is the sum of the thermal displacement and the
//! radiation-pressure displacement driven by the incident intensity noise;
//! the reflected signal intensity and meter phase follow from the cavity
//! input-output relations, each evaluated per FFT bin at the physical
//! frequency of the bin. Both channels are then band-limited to the analysis
//! bandwidth, emulating the analyzers' acquisition filters.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::envelope::{ComplexEnvelope, Unit};
use crate::noise::{gen_drive_envelope, gen_shot_floor, gen_thermal_envelope};
use crate::physics::{
    intensity_reflection, phase_transfer, radiation_displacement_transfer, susceptibility,
    ExperimentParams,
};
use crate::Result;

/// Unit-modulus rotations applied to the channels by [`calibrate_meter`].
/// Identity until a record is calibrated; repeated calibrations accumulate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub meter_rotation: Complex64,
    pub signal_rotation: Complex64,
}

impl Default for Calibration {
    fn default() -> Self {
        Self {
            meter_rotation: Complex64::new(1.0, 0.0),
            signal_rotation: Complex64::new(1.0, 0.0),
        }
    }
}

/// One acquisition run: the two acquired channels, the displacement-calibrated
/// meter record, and everything needed to reproduce them.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    /// Reflected signal-beam intensity fluctuations, photons/s.
    pub signal_out: ComplexEnvelope,
    /// Reflected meter-beam phase fluctuations, rad.
    pub meter_out: ComplexEnvelope,
    /// Meter channel divided by the center-frequency phase response, m.
    pub meter_displacement: ComplexEnvelope,
    pub seed: u64,
    pub params: ExperimentParams,
    pub calibration: Calibration,
}

/// Run one seeded experiment. Pure in (params, seed): identical inputs give
/// bit-identical records.
pub fn run_experiment(params: &ExperimentParams, seed: u64) -> Result<RunRecord> {
    params.validate()?;
    let params = params.with_seed(seed);
    let fc = params.center_freq;

    let drive = gen_drive_envelope(&params)?;
    let thermal = gen_thermal_envelope(&params)?;
    let shot = gen_shot_floor(&params)?;

    // radiation-pressure displacement, per bin at the physical frequency
    let rad = drive.apply_transfer(Unit::Meters, |offset| {
        radiation_displacement_transfer(&params, fc + offset)
    });
    let motion = thermal.add(&rad)?;

    let signal_out = drive
        .apply_transfer(Unit::PhotonsPerSecond, |offset| {
            intensity_reflection(&params.cavity, fc + offset)
        })
        .band_limit(params.analysis_bandwidth);

    // detection floor enters as displacement-equivalent noise on the meter only
    let meter_out = motion
        .add(&shot)?
        .apply_transfer(Unit::Radians, |offset| {
            phase_transfer(&params.cavity, fc + offset)
        })
        .band_limit(params.analysis_bandwidth);

    let mut meter_displacement = meter_out.clone();
    meter_displacement.unit = Unit::Meters;
    meter_displacement.scale(1.0 / phase_transfer(&params.cavity, fc));

    Ok(RunRecord {
        signal_out,
        meter_out,
        meter_displacement,
        seed,
        params,
        calibration: Calibration::default(),
    })
}

/// Rotate the record in phase space so a noiseless run would leave the signal
/// and displacement-calibrated meter trajectories as positive real multiples
/// of the incident drive: the meter channels lose the global phase of the
/// cavity response times the mechanical response, the signal channel the
/// reflection phase. The applied rotations accumulate in `calibration`.
pub fn calibrate_meter(mut record: RunRecord) -> RunRecord {
    let params = &record.params;
    let fc = params.center_freq;

    let meter_phase = phase_transfer(&params.cavity, fc) * susceptibility(&params.oscillator, fc);
    let meter_rot = (meter_phase / meter_phase.norm()).conj();
    let refl = intensity_reflection(&params.cavity, fc);
    let signal_rot = (refl / refl.norm()).conj();

    record.meter_out.scale(meter_rot);
    record.meter_displacement.scale(meter_rot);
    record.signal_out.scale(signal_rot);
    record.calibration.meter_rotation *= meter_rot;
    record.calibration.signal_rotation *= signal_rot;
    record
}

/// Run `n_runs` independent experiments with seeds base_seed, base_seed+1, …
/// in seed order.
pub fn run_sweep(params: &ExperimentParams, n_runs: usize, base_seed: u64) -> Result<Vec<RunRecord>> {
    (0..n_runs)
        .map(|i| run_experiment(params, base_seed.wrapping_add(i as u64)))
        .collect()
}
