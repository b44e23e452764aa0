//! Motion indicator from 3-axis acceleration.
//!
//! The acceleration norm is high-pass filtered by subtracting a centered
//! moving average, then its power is averaged over non-overlapping windows.
//! Windows whose power exceeds a threshold mark PPG segments as corrupted.

use crate::error::{Error, Result};
use crate::series::UniformSeries;

pub const DEFAULT_GRAVITY_WINDOW_S: f64 = 2.0;
pub const DEFAULT_WINDOW_S: f64 = 1.0;
pub const DEFAULT_THRESHOLD_G2: f64 = 0.01;

/// Pointwise Euclidean norm of three acceleration axes, in g.
pub fn accel_norm(
    x: &UniformSeries,
    y: &UniformSeries,
    z: &UniformSeries,
) -> Result<UniformSeries> {
    if x.len() != y.len() || x.len() != z.len() {
        return Err(Error::invalid_series("acceleration axes differ in length"));
    }
    if x.fs() != y.fs() || x.fs() != z.fs() {
        return Err(Error::invalid_series(
            "acceleration axes differ in sampling rate",
        ));
    }
    let values = x
        .values()
        .iter()
        .zip(y.values())
        .zip(z.values())
        .map(|((a, b), c)| (a * a + b * b + c * c).sqrt())
        .collect();
    Ok(x.with_values(values))
}

/// Subtract a centered moving average spanning `window_s` seconds. Near the
/// edges the average is taken over the samples that exist.
pub fn remove_gravity(norm: &UniformSeries, window_s: f64) -> Result<UniformSeries> {
    let half = (window_s * norm.fs() / 2.0).round() as usize;
    if half == 0 {
        return Err(Error::InvalidParam(format!(
            "gravity window {window_s} s is under one sample"
        )));
    }
    norm.require_len(2 * half + 1, "gravity removal")?;
    let v = norm.values();
    let n = v.len();
    // Direct summation per output keeps a constant input at exactly zero.
    let out = (0..n)
        .map(|k| {
            let lo = k.saturating_sub(half);
            let hi = (k + half).min(n - 1);
            let win = &v[lo..=hi];
            v[k] - win.iter().sum::<f64>() / win.len() as f64
        })
        .collect();
    Ok(norm.with_values(out))
}

/// Mean power of consecutive non-overlapping windows.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowPowers {
    pub t0: f64,
    pub window_s: f64,
    pub powers: Vec<f64>,
}

/// Mean of squared samples over each full window of `window_s` seconds.
/// A partial window at the tail is dropped.
pub fn motion_power(hp: &UniformSeries, window_s: f64) -> Result<WindowPowers> {
    if hp.is_empty() {
        return Err(Error::insufficient("motion power of an empty series"));
    }
    let n = (window_s * hp.fs()).round() as usize;
    if n == 0 {
        return Err(Error::InvalidParam(format!(
            "motion window {window_s} s is under one sample"
        )));
    }
    let powers = hp
        .values()
        .chunks_exact(n)
        .map(|w| w.iter().map(|x| x * x).sum::<f64>() / n as f64)
        .collect();
    Ok(WindowPowers {
        t0: hp.t0(),
        window_s: n as f64 / hp.fs(),
        powers,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionWindow {
    pub start: f64,
    pub end: f64,
    pub power: f64,
    pub corrupted: bool,
}

/// Per-window motion power and corruption flag.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MotionMask {
    pub windows: Vec<MotionWindow>,
}

impl MotionMask {
    /// Mask with no windows: nothing is corrupted.
    pub fn empty() -> Self {
        Self::default()
    }

    /// Corrupted windows merged into `(start, end)` segments.
    pub fn segments(&self) -> Vec<(f64, f64)> {
        let mut segs: Vec<(f64, f64)> = Vec::new();
        for w in self.windows.iter().filter(|w| w.corrupted) {
            match segs.last_mut() {
                Some(last) if (w.start - last.1).abs() < 1e-9 => last.1 = w.end,
                _ => segs.push((w.start, w.end)),
            }
        }
        segs
    }

    pub fn is_corrupted_at(&self, t: f64) -> bool {
        // Windows are sorted and contiguous.
        let k = self.windows.partition_point(|w| w.end <= t);
        self.windows
            .get(k)
            .is_some_and(|w| w.corrupted && t >= w.start)
    }

    /// Whether `[start, end)` overlaps any corrupted window.
    pub fn overlaps_corrupted(&self, start: f64, end: f64) -> bool {
        let k = self.windows.partition_point(|w| w.end <= start);
        self.windows[k..]
            .iter()
            .take_while(|w| w.start < end)
            .any(|w| w.corrupted)
    }
}

/// Threshold window powers into a mask; `corrupted` is `power > threshold`.
pub fn motion_mask(powers: &WindowPowers, threshold_g2: f64) -> Result<MotionMask> {
    if !(threshold_g2 >= 0.0) {
        return Err(Error::InvalidParam(format!(
            "motion threshold {threshold_g2} must be >= 0"
        )));
    }
    let windows = powers
        .powers
        .iter()
        .enumerate()
        .map(|(k, &power)| {
            let start = powers.t0 + k as f64 * powers.window_s;
            MotionWindow {
                start,
                end: start + powers.window_s,
                power,
                corrupted: power > threshold_g2,
            }
        })
        .collect();
    Ok(MotionMask { windows })
}
