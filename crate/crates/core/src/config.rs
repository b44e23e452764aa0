//! Every tunable of the pipeline, loadable from a flat `key = value` file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::beat::DetectorParams;
use crate::cardio::PlausibilityParams;
use crate::error::{Error, Result};
use crate::hrv::BreathingParams;

/// Which PPG wavelength feeds beat detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    #[default]
    Green,
    Ir,
}

impl std::str::FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "green" => Ok(Channel::Green),
            "ir" => Ok(Channel::Ir),
            other => Err(Error::Config(format!(
                "unknown channel '{other}', expected green or ir"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Nominal sampling rate of raw recordings.
    pub fs_hz: f64,
    pub channel: Channel,

    pub gravity_window_s: f64,
    pub motion_window_s: f64,
    pub motion_threshold_g2: f64,

    pub refractory_s: f64,
    pub floor_frac: f64,
    pub floor_history: usize,
    pub smooth_taps: usize,
    pub seed_block_s: f64,
    pub reseed_gap_s: f64,

    /// Length of one feature record.
    pub epoch_s: f64,

    pub rr_min_ms: f64,
    pub rr_max_ms: f64,
    pub jump_frac: f64,
    pub jump_history: usize,
    pub hr_beats: usize,
    /// Interpolated runs longer than this are low-confidence.
    pub low_confidence_s: f64,

    pub resample_hz: f64,
    pub hrv_band_low_hz: f64,
    pub hrv_band_high_hz: f64,
    pub nlms_mu: f64,
    pub nlms_eps: f64,
    pub spectrum_period_s: f64,
    pub grid_step_hz: f64,
    pub resp_band_low_hz: f64,
    pub resp_band_high_hz: f64,
    pub peak_halfwidth_hz: f64,
    pub initial_rate_min: f64,
    pub warmup_s: f64,
    pub min_duration_s: f64,

    pub dtw_band_min: usize,
    pub dtw_band_frac: f64,
    /// Reference gaps longer than this are excluded from evaluation.
    pub ref_gap_s: f64,
}

impl Default for Config {
    fn default() -> Self {
        let det = DetectorParams::default();
        let pl = PlausibilityParams::default();
        let br = BreathingParams::default();
        Self {
            fs_hz: 25.0,
            channel: Channel::Green,
            gravity_window_s: crate::motion::DEFAULT_GRAVITY_WINDOW_S,
            motion_window_s: crate::motion::DEFAULT_WINDOW_S,
            motion_threshold_g2: crate::motion::DEFAULT_THRESHOLD_G2,
            refractory_s: det.refractory_s,
            floor_frac: det.floor_frac,
            floor_history: det.floor_history,
            smooth_taps: det.smooth_taps,
            seed_block_s: det.seed_block_s,
            reseed_gap_s: det.reseed_gap_s,
            epoch_s: 60.0,
            rr_min_ms: pl.min_ms,
            rr_max_ms: pl.max_ms,
            jump_frac: pl.jump_frac,
            jump_history: pl.history,
            hr_beats: 10,
            low_confidence_s: 10.0,
            resample_hz: br.resample_hz,
            hrv_band_low_hz: br.hrv_band.0,
            hrv_band_high_hz: br.hrv_band.1,
            nlms_mu: br.mu,
            nlms_eps: br.eps,
            spectrum_period_s: br.update_period_s,
            grid_step_hz: br.grid_step_hz,
            resp_band_low_hz: br.resp_band.0,
            resp_band_high_hz: br.resp_band.1,
            peak_halfwidth_hz: br.peak_halfwidth_hz,
            initial_rate_min: br.initial_rate_min,
            warmup_s: br.warmup_s,
            min_duration_s: br.min_duration_s,
            dtw_band_min: 10,
            dtw_band_frac: 0.05,
            ref_gap_s: 2.0,
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.into()));
        if !(self.fs_hz > 0.0) {
            return bad("fs_hz must be positive");
        }
        if !(self.motion_window_s > 0.0 && self.epoch_s >= self.motion_window_s) {
            return bad("motion_window_s must be positive and no longer than epoch_s");
        }
        let per_epoch = self.epoch_s / self.motion_window_s;
        if (per_epoch - per_epoch.round()).abs() > 1e-9 {
            return bad("epoch_s must be a whole number of motion windows");
        }
        if self.epoch_s > 65.0 {
            return bad("epoch_s must fit millisecond offsets in 16 bits (<= 65 s)");
        }
        if self.hr_beats == 0 || self.jump_history == 0 {
            return bad("hr_beats and jump_history must be positive");
        }
        if !(self.rr_min_ms > 0.0 && self.rr_max_ms > self.rr_min_ms) {
            return bad("rr bounds must satisfy 0 < rr_min_ms < rr_max_ms");
        }
        self.detector()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn detector(&self) -> DetectorParams {
        DetectorParams {
            refractory_s: self.refractory_s,
            floor_frac: self.floor_frac,
            floor_history: self.floor_history,
            smooth_taps: self.smooth_taps,
            seed_block_s: self.seed_block_s,
            reseed_gap_s: self.reseed_gap_s,
        }
    }

    pub fn plausibility(&self) -> PlausibilityParams {
        PlausibilityParams {
            min_ms: self.rr_min_ms,
            max_ms: self.rr_max_ms,
            jump_frac: self.jump_frac,
            history: self.jump_history,
        }
    }

    pub fn breathing(&self) -> BreathingParams {
        BreathingParams {
            resample_hz: self.resample_hz,
            hrv_band: (self.hrv_band_low_hz, self.hrv_band_high_hz),
            mu: self.nlms_mu,
            eps: self.nlms_eps,
            update_period_s: self.spectrum_period_s,
            grid_step_hz: self.grid_step_hz,
            resp_band: (self.resp_band_low_hz, self.resp_band_high_hz),
            peak_halfwidth_hz: self.peak_halfwidth_hz,
            initial_rate_min: self.initial_rate_min,
            warmup_s: self.warmup_s,
            min_duration_s: self.min_duration_s,
        }
    }

    /// Sakoe-Chiba band half-width for series of length `len`.
    pub fn dtw_band(&self, len: usize) -> usize {
        self.dtw_band_min
            .max((self.dtw_band_frac * len as f64).ceil() as usize)
    }
}
