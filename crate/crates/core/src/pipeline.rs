//! The two processing stages. The device stage turns raw PPG and
//! acceleration into compact features; the server stage turns features into
//! heart and breathing rates. The only state shared between them is the
//! encoded [`FeatureStream`].

use crate::beat::{beats_to_intervals, detect_beats};
use crate::cardio::{block_quality, correct_intervals, flag_intervals, heart_rate};
use crate::codec::{FeatureRecord, FeatureStream};
use crate::config::{Channel, Config};
use crate::error::{Error, Result};
use crate::hrv::{breathing_pipeline, BreathingEstimate};
use crate::motion::{
    accel_norm, motion_mask, motion_power, remove_gravity, MotionMask, MotionWindow, WindowPowers,
};
use crate::series::{BbiSeries, TimedSeries, UniformSeries};

/// One raw wrist recording sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub t0: f64,
    pub fs: f64,
    pub ppg_green: Vec<f64>,
    pub ppg_ir: Vec<f64>,
    pub acc: [Vec<f64>; 3],
}

impl Recording {
    pub fn len(&self) -> usize {
        self.ppg_green.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ppg_green.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.fs
    }

    pub fn ppg(&self, channel: Channel) -> Result<UniformSeries> {
        let v = match channel {
            Channel::Green => &self.ppg_green,
            Channel::Ir => &self.ppg_ir,
        };
        UniformSeries::new(v.clone(), self.fs, self.t0)
    }

    fn axis(&self, k: usize) -> Result<UniformSeries> {
        UniformSeries::new(self.acc[k].clone(), self.fs, self.t0)
    }
}

/// Motion window powers of a recording.
pub fn motion_features(rec: &Recording, cfg: &Config) -> Result<WindowPowers> {
    let norm = accel_norm(&rec.axis(0)?, &rec.axis(1)?, &rec.axis(2)?)?;
    motion_power(
        &remove_gravity(&norm, cfg.gravity_window_s)?,
        cfg.motion_window_s,
    )
}

/// Wearable-side processing: motion powers, beat detection and intervals,
/// packed into one record per epoch. Beat times are quantized to whole
/// milliseconds from the recording start.
pub fn device_stage(rec: &Recording, cfg: &Config) -> Result<FeatureStream> {
    cfg.validate()?;
    if rec.is_empty() {
        return Err(Error::insufficient("empty recording"));
    }
    let powers = motion_features(rec, cfg)?;
    let mask = motion_mask(&powers, cfg.motion_threshold_g2)?;
    let beats = detect_beats(&rec.ppg(cfg.channel)?, &mask, &cfg.detector())?;

    let ms: Vec<i64> = beats
        .times()
        .iter()
        .map(|t| ((t - rec.t0) * 1000.0).round().max(0.0) as i64)
        .collect();
    let epoch_ms = (cfg.epoch_s * 1000.0).round() as i64;
    let per_epoch = (cfg.epoch_s / powers.window_s).round() as usize;
    let n_epochs = (rec.duration_s() / cfg.epoch_s).ceil().max(1.0) as usize;

    let mut records: Vec<FeatureRecord> = (0..n_epochs)
        .map(|e| FeatureRecord {
            epoch_start: rec.t0 + e as f64 * cfg.epoch_s,
            bbis: Vec::new(),
            motion_power: powers
                .powers
                .iter()
                .skip(e * per_epoch)
                .take(per_epoch)
                .map(|&p| p as f32)
                .collect(),
        })
        .collect();
    for w in ms.windows(2) {
        let e = (w[0] / epoch_ms) as usize;
        let offset = (w[0] - e as i64 * epoch_ms) as u16;
        let interval = (w[1] - w[0]).clamp(1, u16::MAX as i64) as u16;
        records[e.min(n_epochs - 1)].bbis.push((offset, interval));
    }
    Ok(FeatureStream {
        motion_window_s: powers.window_s as f32,
        records,
    })
}

/// Beat intervals carried by a feature stream.
pub fn stream_intervals(stream: &FeatureStream) -> Result<BbiSeries> {
    let (onsets, intervals): (Vec<f64>, Vec<f64>) = stream
        .records
        .iter()
        .flat_map(|r| {
            r.bbis
                .iter()
                .map(move |&(off, iv)| (r.epoch_start + off as f64 / 1000.0, iv as f64))
        })
        .unzip();
    BbiSeries::from_intervals(onsets, intervals).map_err(|e| Error::Decode {
        offset: 0,
        reason: e.to_string(),
    })
}

/// Motion mask rebuilt from the per-window powers of a feature stream.
pub fn stream_mask(stream: &FeatureStream, threshold_g2: f64) -> Result<MotionMask> {
    let window_s = stream.motion_window_s as f64;
    let mut windows = Vec::new();
    for r in &stream.records {
        for (k, &p) in r.motion_power.iter().enumerate() {
            let start = r.epoch_start + k as f64 * window_s;
            windows.push(MotionWindow {
                start,
                end: start + window_s,
                power: p as f64,
                corrupted: p as f64 > threshold_g2,
            });
        }
    }
    Ok(MotionMask { windows })
}

/// Everything the server stage produces for one night.
#[derive(Debug, Clone, PartialEq)]
pub struct ServerOutput {
    pub corrected: BbiSeries,
    pub heart_rate: TimedSeries,
    /// Fraction of valid intervals in each heart-rate block.
    pub hr_quality: Vec<f64>,
    pub breathing: BreathingEstimate,
    pub low_confidence: Vec<(f64, f64)>,
}

/// Server-side processing: plausibility and motion flags, interval
/// correction, heart rate and breathing rate.
pub fn server_stage(stream: &FeatureStream, cfg: &Config) -> Result<ServerOutput> {
    cfg.validate()?;
    let bbi = stream_intervals(stream)?;
    let mask = stream_mask(stream, cfg.motion_threshold_g2)?;
    let flagged = flag_intervals(&bbi, &mask, &cfg.plausibility());
    let corrected = correct_intervals(&flagged)?;
    let hr = heart_rate(&corrected, cfg.hr_beats)?;
    let hr_quality = block_quality(&corrected, cfg.hr_beats);
    let breathing = breathing_pipeline(&corrected, &cfg.breathing())?;
    let low_confidence = corrected.low_confidence_segments(cfg.low_confidence_s);
    Ok(ServerOutput {
        corrected,
        heart_rate: hr,
        hr_quality,
        breathing,
        low_confidence,
    })
}

/// Both stages in process, with no encoding in between.
pub fn run_pipeline(rec: &Recording, cfg: &Config) -> Result<ServerOutput> {
    server_stage(&device_stage(rec, cfg)?, cfg)
}

/// Interval series straight from the detector, before quantization, for
/// evaluating beat timing without the feature format.
pub fn detect_intervals(rec: &Recording, cfg: &Config) -> Result<BbiSeries> {
    let mask = motion_mask(&motion_features(rec, cfg)?, cfg.motion_threshold_g2)?;
    beats_to_intervals(&detect_beats(
        &rec.ppg(cfg.channel)?,
        &mask,
        &cfg.detector(),
    )?)
}
