//! Time-series containers shared by every processing stage.

use crate::error::{Error, Result};

/// A uniformly sampled signal. Sample `k` sits at `t0 + k / fs`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformSeries {
    values: Vec<f64>,
    fs: f64,
    t0: f64,
}

impl UniformSeries {
    pub fn new(values: Vec<f64>, fs: f64, t0: f64) -> Result<Self> {
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::invalid_series(format!(
                "sampling rate must be positive, got {fs}"
            )));
        }
        if !t0.is_finite() {
            return Err(Error::invalid_series("start time must be finite"));
        }
        Ok(Self { values, fs, t0 })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 / self.fs
    }

    /// Time just past the last sample, `t0 + len / fs`.
    pub fn end_time(&self) -> f64 {
        self.time(self.values.len())
    }

    /// Same time base, new values.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        Self {
            values,
            fs: self.fs,
            t0: self.t0,
        }
    }

    pub(crate) fn require_len(&self, min: usize, what: &str) -> Result<()> {
        if self.values.len() < min {
            return Err(Error::insufficient(format!(
                "{what} needs at least {min} samples, got {}",
                self.values.len()
            )));
        }
        Ok(())
    }
}

/// Beat timestamps in seconds, strictly increasing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BeatSeries {
    times: Vec<f64>,
}

impl BeatSeries {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if let Some(k) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::invalid_series(format!(
                "beat times not strictly increasing at index {}",
                k + 1
            )));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid_series("non-finite beat time"));
        }
        Ok(Self { times })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Quality state of a single beat-to-beat interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quality {
    Valid,
    /// Outside physiological bounds or an abrupt jump from the recent median.
    Implausible,
    /// Overlaps a window flagged by the motion detector.
    Motion,
    /// Value replaced by linear interpolation.
    Interpolated,
}

impl Quality {
    pub fn as_str(self) -> &'static str {
        match self {
            Quality::Valid => "valid",
            Quality::Implausible => "implausible",
            Quality::Motion => "motion",
            Quality::Interpolated => "interpolated",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "valid" => Quality::Valid,
            "implausible" => Quality::Implausible,
            "motion" => Quality::Motion,
            "interpolated" => Quality::Interpolated,
            _ => return None,
        })
    }
}

/// Beat-to-beat intervals. Entry `k` starts at `onset_times[k]` (seconds)
/// and lasts `intervals_ms[k]` milliseconds.
#[derive(Debug, Clone, PartialEq)]
pub struct BbiSeries {
    pub onset_times: Vec<f64>,
    pub intervals_ms: Vec<f64>,
    pub flags: Vec<Quality>,
}

impl BbiSeries {
    pub fn new(onset_times: Vec<f64>, intervals_ms: Vec<f64>, flags: Vec<Quality>) -> Result<Self> {
        if onset_times.len() != intervals_ms.len() || flags.len() != intervals_ms.len() {
            return Err(Error::invalid_series(
                "onsets, intervals and flags differ in length",
            ));
        }
        if let Some(k) = intervals_ms
            .iter()
            .position(|x| !(x.is_finite() && *x > 0.0))
        {
            return Err(Error::invalid_series(format!(
                "interval {k} is not a positive number"
            )));
        }
        if let Some(k) = onset_times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::invalid_series(format!(
                "onsets not increasing at index {}",
                k + 1
            )));
        }
        Ok(Self {
            onset_times,
            intervals_ms,
            flags,
        })
    }

    /// All-valid series from onsets and interval values.
    pub fn from_intervals(onset_times: Vec<f64>, intervals_ms: Vec<f64>) -> Result<Self> {
        let flags = vec![Quality::Valid; intervals_ms.len()];
        Self::new(onset_times, intervals_ms, flags)
    }

    pub fn len(&self) -> usize {
        self.intervals_ms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals_ms.is_empty()
    }

    /// End time of interval `k` in seconds.
    pub fn end_time(&self, k: usize) -> f64 {
        self.onset_times[k] + self.intervals_ms[k] / 1000.0
    }

    pub fn count(&self, quality: Quality) -> usize {
        self.flags.iter().filter(|&&f| f == quality).count()
    }

    /// Time spans of consecutive interpolated entries lasting longer than
    /// `max_span_s`. Estimates inside them carry low confidence.
    pub fn low_confidence_segments(&self, max_span_s: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut k = 0;
        while k < self.len() {
            if self.flags[k] != Quality::Interpolated {
                k += 1;
                continue;
            }
            let start = k;
            while k < self.len() && self.flags[k] == Quality::Interpolated {
                k += 1;
            }
            let (t_start, t_end) = (self.onset_times[start], self.end_time(k - 1));
            if t_end - t_start > max_span_s {
                out.push((t_start, t_end));
            }
        }
        out
    }

    /// Restrict to entries whose onset lies in `[t_start, t_end]`.
    pub fn slice_time(&self, t_start: f64, t_end: f64) -> BbiSeries {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&k| self.onset_times[k] >= t_start && self.onset_times[k] <= t_end)
            .collect();
        BbiSeries {
            onset_times: keep.iter().map(|&k| self.onset_times[k]).collect(),
            intervals_ms: keep.iter().map(|&k| self.intervals_ms[k]).collect(),
            flags: keep.iter().map(|&k| self.flags[k]).collect(),
        }
    }
}

/// Values at arbitrary, strictly increasing times (heart-rate windows,
/// breathing-rate estimates, references).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimedSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl TimedSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::invalid_series("times and values differ in length"));
        }
        if let Some(k) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::invalid_series(format!(
                "times not increasing at index {}",
                k + 1
            )));
        }
        Ok(Self { times, values })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }
}

/// Piecewise-linear interpolation of `(time, value)` points at the times
/// `ts`, which must lie within the span of the points. `points` is assumed
/// validated (at least two, strictly increasing).
pub(crate) fn interpolate_at(points: &[(f64, f64)], ts: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut j = 0;
    ts.map(|t| {
        while j + 2 < points.len() && points[j + 1].0 <= t {
            j += 1;
        }
        let (ta, va) = points[j];
        let (tb, vb) = points[j + 1];
        if t <= ta {
            va
        } else if t >= tb {
            vb
        } else {
            va + (t - ta) / (tb - ta) * (vb - va)
        }
    })
    .collect()
}

fn check_points(points: &[(f64, f64)]) -> Result<()> {
    if points.len() < 2 {
        return Err(Error::insufficient(format!(
            "resampling needs at least 2 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
        return Err(Error::invalid_series("non-finite resampling point"));
    }
    if let Some(k) = points.windows(2).position(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::invalid_series(format!(
            "resampling times not strictly increasing at index {}",
            k + 1
        )));
    }
    Ok(())
}

/// Resample non-uniform `(time, value)` points onto a uniform grid of rate
/// `fs` covering `[t_start, t_end]` by linear interpolation.
pub fn resample_linear(
    points: &[(f64, f64)],
    fs: f64,
    t_start: f64,
    t_end: f64,
) -> Result<UniformSeries> {
    check_points(points)?;
    if !(fs.is_finite() && fs > 0.0) {
        return Err(Error::invalid_series(format!(
            "sampling rate must be positive, got {fs}"
        )));
    }
    let (first, last) = (points[0].0, points[points.len() - 1].0);
    if t_start < first || t_end > last || t_end < t_start {
        return Err(Error::invalid_series(format!(
            "resampling span [{t_start}, {t_end}] not inside data span [{first}, {last}]"
        )));
    }
    // A tiny slack keeps the end point when (t_end - t_start) * fs is integral.
    let n = ((t_end - t_start) * fs + 1e-9).floor() as usize + 1;
    let values = interpolate_at(points, (0..n).map(|k| t_start + k as f64 / fs));
    UniformSeries::new(values, fs, t_start)
}
