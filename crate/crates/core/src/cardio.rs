//! Interval cleaning and heart rate.

use crate::error::{Error, Result};
use crate::motion::MotionMask;
use crate::series::{BbiSeries, Quality, TimedSeries};

#[derive(Debug, Clone, PartialEq)]
pub struct PlausibilityParams {
    pub min_ms: f64,
    pub max_ms: f64,
    /// Largest allowed relative deviation from the running median.
    pub jump_frac: f64,
    /// Number of recent in-bounds intervals in the running median.
    pub history: usize,
}

impl Default for PlausibilityParams {
    fn default() -> Self {
        Self {
            min_ms: 300.0,
            max_ms: 1500.0,
            jump_frac: 0.3,
            history: 9,
        }
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Flag intervals overlapping motion as [`Quality::Motion`] and intervals
/// outside the physiological bounds, or jumping away from the running median
/// of recent intervals, as [`Quality::Implausible`].
///
/// The running median is fed every in-bounds, motion-free interval, including
/// those rejected by the jump rule, so it follows genuine rate changes and
/// recovers from a bad start.
pub fn flag_intervals(
    bbi: &BbiSeries,
    mask: &MotionMask,
    params: &PlausibilityParams,
) -> BbiSeries {
    let mut recent: Vec<f64> = Vec::with_capacity(params.history + 1);
    let flags = (0..bbi.len())
        .map(|k| {
            let x = bbi.intervals_ms[k];
            if mask.overlaps_corrupted(bbi.onset_times[k], bbi.end_time(k)) {
                return Quality::Motion;
            }
            if !(params.min_ms..=params.max_ms).contains(&x) {
                return Quality::Implausible;
            }
            let jumped = !recent.is_empty() && {
                let m = median(&recent);
                (x - m).abs() > params.jump_frac * m
            };
            recent.push(x);
            if recent.len() > params.history {
                recent.remove(0);
            }
            if jumped {
                Quality::Implausible
            } else {
                Quality::Valid
            }
        })
        .collect();
    BbiSeries {
        flags,
        ..bbi.clone()
    }
}

/// Replace every non-valid interval by linear interpolation, in onset time,
/// between the nearest valid intervals on either side. Leading and trailing
/// non-valid intervals are trimmed.
pub fn correct_intervals(flagged: &BbiSeries) -> Result<BbiSeries> {
    let valid: Vec<usize> = (0..flagged.len())
        .filter(|&k| flagged.flags[k] == Quality::Valid)
        .collect();
    if valid.len() < 2 {
        return Err(Error::insufficient(format!(
            "interval correction needs 2 valid intervals, got {}",
            valid.len()
        )));
    }
    let (first, last) = (valid[0], valid[valid.len() - 1]);
    let mut out = BbiSeries {
        onset_times: flagged.onset_times[first..=last].to_vec(),
        intervals_ms: flagged.intervals_ms[first..=last].to_vec(),
        flags: flagged.flags[first..=last].to_vec(),
    };
    let mut prev = 0;
    for k in 0..out.len() {
        if out.flags[k] == Quality::Valid {
            prev = k;
            continue;
        }
        let next = (k + 1..out.len())
            .find(|&j| out.flags[j] == Quality::Valid)
            .expect("last is valid");
        let (ta, tb) = (out.onset_times[prev], out.onset_times[next]);
        let (va, vb) = (out.intervals_ms[prev], out.intervals_ms[next]);
        out.intervals_ms[k] = va + (out.onset_times[k] - ta) / (tb - ta) * (vb - va);
        out.flags[k] = Quality::Interpolated;
    }
    Ok(out)
}

/// Heart rate over consecutive, non-overlapping blocks of `n` intervals:
/// the mean of the inverse intervals, in beats per minute, timestamped at the
/// centre of the block.
pub fn heart_rate(corrected: &BbiSeries, n: usize) -> Result<TimedSeries> {
    if n == 0 {
        return Err(Error::InvalidParam(
            "heart-rate block must hold at least one interval".into(),
        ));
    }
    if corrected.len() < n {
        return Err(Error::insufficient(format!(
            "heart rate needs {n} intervals, got {}",
            corrected.len()
        )));
    }
    let blocks = corrected.len() / n;
    let mut times = Vec::with_capacity(blocks);
    let mut values = Vec::with_capacity(blocks);
    for b in 0..blocks {
        let (lo, hi) = (b * n, b * n + n - 1);
        times.push(0.5 * (corrected.onset_times[lo] + corrected.end_time(hi)));
        values.push(mean_rate_bpm(&corrected.intervals_ms[lo..=hi]));
    }
    TimedSeries::new(times, values)
}

/// Mean of the inverse intervals (ms) in beats per minute.
pub fn mean_rate_bpm(intervals_ms: &[f64]) -> f64 {
    60_000.0 / intervals_ms.len() as f64 * intervals_ms.iter().map(|x| 1.0 / x).sum::<f64>()
}

/// Fraction of valid (not interpolated) intervals in each heart-rate block.
pub fn block_quality(corrected: &BbiSeries, n: usize) -> Vec<f64> {
    corrected
        .flags
        .chunks_exact(n.max(1))
        .map(|c| c.iter().filter(|&&f| f == Quality::Valid).count() as f64 / c.len() as f64)
        .collect()
}
