//! Beat detection on the PPG first derivative.
//!
//! Beats are the maxima of the (lightly smoothed) first difference of the
//! PPG. A candidate must clear an amplitude floor relative to recent beats,
//! and two beats closer than the refractory period are resolved in favour
//! of the stronger one. Each beat is then refined to sub-sample resolution
//! with a parabola through the maximum and its two neighbours.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::motion::MotionMask;
use crate::series::{BbiSeries, BeatSeries, UniformSeries};

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorParams {
    /// Minimum spacing between two beats, in seconds.
    pub refractory_s: f64,
    /// A candidate must exceed this fraction of the median recent beat amplitude.
    pub floor_frac: f64,
    /// Number of recent beat amplitudes in the running median.
    pub floor_history: usize,
    /// Taps of the binomial smoother applied to the derivative; 1 disables it.
    pub smooth_taps: usize,
    /// Length of each block used to seed the amplitude floor.
    pub seed_block_s: f64,
    /// A gap without beats longer than this re-seeds the amplitude floor.
    pub reseed_gap_s: f64,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            refractory_s: 0.3,
            floor_frac: 0.3,
            floor_history: 8,
            smooth_taps: 7,
            seed_block_s: 1.5,
            reseed_gap_s: 2.0,
        }
    }
}

impl DetectorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.refractory_s > 0.0) {
            return Err(Error::InvalidParam(
                "refractory period must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.floor_frac) {
            return Err(Error::InvalidParam(
                "amplitude floor fraction must be in [0, 1)".into(),
            ));
        }
        if self.floor_history == 0 || self.smooth_taps == 0 || self.smooth_taps.is_multiple_of(2) {
            return Err(Error::InvalidParam(
                "floor history must be positive and smoother taps odd".into(),
            ));
        }
        if !(self.seed_block_s > 0.0 && self.reseed_gap_s > self.refractory_s) {
            return Err(Error::InvalidParam("invalid floor seeding spans".into()));
        }
        Ok(())
    }
}

/// Forward difference scaled to units per second. The result is one sample
/// shorter and its time base is shifted by half a sample.
pub fn derivative(ppg: &UniformSeries) -> Result<UniformSeries> {
    ppg.require_len(2, "derivative")?;
    let fs = ppg.fs();
    let values = ppg
        .values()
        .windows(2)
        .map(|w| (w[1] - w[0]) * fs)
        .collect();
    UniformSeries::new(values, fs, ppg.t0() + 0.5 / fs)
}

/// Symmetric binomial smoothing; the kernel is renormalised at the edges.
pub fn smooth_binomial(series: &UniformSeries, taps: usize) -> UniformSeries {
    if taps <= 1 {
        return series.clone();
    }
    let mut kernel = vec![1.0f64];
    for _ in 1..taps {
        let mut next = vec![0.0; kernel.len() + 1];
        for (i, c) in kernel.iter().enumerate() {
            next[i] += c;
            next[i + 1] += c;
        }
        kernel = next;
    }
    let half = taps / 2;
    let v = series.values();
    let n = v.len();
    let out = (0..n)
        .map(|k| {
            let (mut acc, mut norm) = (0.0, 0.0);
            for (j, w) in kernel.iter().enumerate() {
                if let Some(idx) = (k + j).checked_sub(half).filter(|&i| i < n) {
                    acc += w * v[idx];
                    norm += w;
                }
            }
            acc / norm
        })
        .collect();
    series.with_values(out)
}

/// Sub-sample offset of the vertex of the parabola through three samples
/// around a maximum, clamped to half a sample.
pub fn parabolic_offset(y_prev: f64, y_mid: f64, y_next: f64) -> f64 {
    let denom = y_prev - 2.0 * y_mid + y_next;
    if denom == 0.0 {
        return 0.0;
    }
    (0.5 * (y_prev - y_next) / denom).clamp(-0.5, 0.5)
}

/// Time of the parabolic vertex around sample `k`.
pub fn refine_peak_parabolic(series: &UniformSeries, k: usize) -> Result<f64> {
    let v = series.values();
    if k == 0 || k + 1 >= v.len() {
        return Err(Error::BoundaryIndex {
            index: k,
            len: v.len(),
        });
    }
    let delta = parabolic_offset(v[k - 1], v[k], v[k + 1]);
    Ok(series.t0() + (k as f64 + delta) / series.fs())
}

struct Candidate {
    index: usize,
    time: f64,
    amp: f64,
}

fn median(values: impl Iterator<Item = f64>) -> Option<f64> {
    let mut v: Vec<f64> = values.collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}

/// Local maxima: strictly above the left neighbour, not below the right one.
fn local_maxima(v: &[f64]) -> impl Iterator<Item = usize> + '_ {
    (1..v.len().saturating_sub(1)).filter(move |&k| v[k] > v[k - 1] && v[k] >= v[k + 1])
}

/// Largest candidate amplitude in each of `floor_history` consecutive blocks
/// starting at candidate `from`; blocks without candidates are skipped.
fn seed_amplitudes(cands: &[Candidate], from: usize, params: &DetectorParams) -> Vec<f64> {
    let Some(first) = cands.get(from) else {
        return Vec::new();
    };
    let t_start = first.time;
    let mut maxima = vec![f64::NEG_INFINITY; params.floor_history];
    for c in &cands[from..] {
        let block = ((c.time - t_start) / params.seed_block_s) as usize;
        if block >= maxima.len() {
            break;
        }
        maxima[block] = maxima[block].max(c.amp);
    }
    maxima.retain(|m| m.is_finite());
    maxima
}

fn select_beats(cands: &[Candidate], params: &DetectorParams, mask: &MotionMask) -> Vec<usize> {
    let mut accepted: Vec<usize> = Vec::new();
    let mut history: VecDeque<f64> = seed_amplitudes(cands, 0, params).into();
    // Whether the amplitude of the last accepted beat entered the history.
    let mut last_in_history = false;

    for (ci, c) in cands.iter().enumerate() {
        if let Some(&last) = accepted.last() {
            if c.time - cands[last].time > params.reseed_gap_s {
                history = seed_amplitudes(cands, ci, params).into();
                last_in_history = false;
            }
        }
        let floor = median(history.iter().copied()).map_or(0.0, |m| params.floor_frac * m);
        if !(c.amp > floor) {
            continue;
        }
        let clean = !mask.is_corrupted_at(c.time);
        match accepted.last() {
            Some(&last) if c.time - cands[last].time < params.refractory_s => {
                // Conflict: the stronger candidate wins, ties keep the earlier.
                if c.amp > cands[last].amp {
                    *accepted.last_mut().expect("non-empty") = ci;
                    if last_in_history {
                        history.pop_back();
                    }
                    last_in_history = clean;
                    if clean {
                        history.push_back(c.amp);
                    }
                }
            }
            _ => {
                accepted.push(ci);
                last_in_history = clean;
                if clean {
                    history.push_back(c.amp);
                }
            }
        }
        while history.len() > params.floor_history {
            history.pop_front();
        }
    }
    accepted
}

/// Indices of accepted derivative maxima, at least `refractory_s` apart.
pub fn detect_maxima(deriv: &UniformSeries, params: &DetectorParams) -> Result<Vec<usize>> {
    params.validate()?;
    let v = deriv.values();
    let cands: Vec<Candidate> = local_maxima(v)
        .map(|k| Candidate {
            index: k,
            time: deriv.time(k),
            amp: v[k],
        })
        .collect();
    let picked = select_beats(&cands, params, &MotionMask::empty());
    Ok(picked.into_iter().map(|ci| cands[ci].index).collect())
}

/// Beat times from a single PPG channel. Beats inside corrupted motion
/// windows are still reported; they do not update the amplitude floor.
pub fn detect_beats(
    ppg: &UniformSeries,
    mask: &MotionMask,
    params: &DetectorParams,
) -> Result<BeatSeries> {
    params.validate()?;
    ppg.require_len((2.0 * ppg.fs()).ceil() as usize, "beat detection")?;
    let deriv = smooth_binomial(&derivative(ppg)?, params.smooth_taps);
    let v = deriv.values();
    // Refractory spacing is enforced on refined times so it holds for the
    // reported beats, not just the sample grid.
    let cands = local_maxima(v)
        .map(|k| {
            Ok(Candidate {
                index: k,
                time: refine_peak_parabolic(&deriv, k)?,
                amp: v[k],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let picked = select_beats(&cands, params, mask);
    BeatSeries::new(picked.into_iter().map(|ci| cands[ci].time).collect())
}

/// Intervals between consecutive beats, all flagged valid.
pub fn beats_to_intervals(beats: &BeatSeries) -> Result<BbiSeries> {
    let t = beats.times();
    if t.len() < 2 {
        return Err(Error::insufficient(format!(
            "need at least 2 beats, got {}",
            t.len()
        )));
    }
    let intervals = t.windows(2).map(|w| (w[1] - w[0]) * 1000.0).collect();
    BbiSeries::from_intervals(t[..t.len() - 1].to_vec(), intervals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn series(v: Vec<f64>, fs: f64) -> UniformSeries {
        UniformSeries::new(v, fs, 0.0).unwrap()
    }

    #[test]
    fn derivative_basics() {
        let d = derivative(&series(vec![3.0; 10], 25.0)).unwrap();
        assert_eq!(d.len(), 9);
        assert!(d.values().iter().all(|&x| x == 0.0));
        assert!((d.t0() - 0.02).abs() < 1e-15);

        let ramp: Vec<f64> = (0..50).map(|k| 2.0 * k as f64 / 25.0).collect();
        let d = derivative(&series(ramp, 25.0)).unwrap();
        assert!(d.values().iter().all(|x| (x - 2.0).abs() < 1e-12));

        assert!(matches!(
            derivative(&series(vec![1.0], 25.0)),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn derivative_of_sine() {
        let v: Vec<f64> = (0..250)
            .map(|k| (2.0 * PI * k as f64 / 25.0).sin())
            .collect();
        let d = derivative(&series(v, 25.0)).unwrap();
        let max = d.values().iter().cloned().fold(f64::MIN, f64::max);
        assert!((max / (2.0 * PI) - 1.0).abs() < 0.02, "max {max}");
    }

    #[test]
    fn parabolic_offsets() {
        assert_eq!(parabolic_offset(1.0, 3.0, 1.0), 0.0);
        assert!((parabolic_offset(0.0, 3.0, 2.0) - 0.25).abs() < 1e-15);
        assert!((parabolic_offset(2.0, 3.0, 0.0) + 0.25).abs() < 1e-15);
        assert_eq!(parabolic_offset(2.0, 2.0, 2.0), 0.0);
        // Cross-check against the vertex of the fitted parabola y = a x^2 + b x + c
        // through x = -1, 0, 1.
        let (ym, y0, yp) = (0.0, 3.0, 2.0);
        let a = (ym + yp) / 2.0 - y0;
        let b = (yp - ym) / 2.0;
        assert!((-b / (2.0 * a) - parabolic_offset(ym, y0, yp)).abs() < 1e-15);
    }

    #[test]
    fn refine_rejects_boundary() {
        let s = series(vec![0.0, 3.0, 2.0], 25.0);
        assert!(matches!(
            refine_peak_parabolic(&s, 0),
            Err(Error::BoundaryIndex { .. })
        ));
        assert!(matches!(
            refine_peak_parabolic(&s, 2),
            Err(Error::BoundaryIndex { .. })
        ));
        let t = refine_peak_parabolic(&s, 1).unwrap();
        assert!((t - 1.25 / 25.0).abs() < 1e-15);
    }

    fn triangle(len: usize, apex: usize, width: usize, height: f64) -> Vec<f64> {
        (0..len)
            .map(|k| {
                let d = (k as f64 - apex as f64).abs();
                (height * (1.0 - d / width as f64)).max(0.0)
            })
            .collect()
    }

    #[test]
    fn single_triangle_pulse() {
        let d = series(triangle(100, 40, 4, 1.0), 25.0);
        assert_eq!(
            detect_maxima(&d, &DetectorParams::default()).unwrap(),
            vec![40]
        );
    }

    #[test]
    fn pulses_inside_refractory_collapse() {
        // 0.2 s apart at 25 Hz = 5 samples.
        let mut v = triangle(100, 40, 2, 1.0);
        for (x, y) in v.iter_mut().zip(triangle(100, 45, 2, 1.0)) {
            *x += y;
        }
        let picked = detect_maxima(&series(v, 25.0), &DetectorParams::default()).unwrap();
        assert_eq!(picked, vec![40]);
    }

    #[test]
    fn stronger_candidate_wins_conflict() {
        let mut v = triangle(100, 40, 2, 1.0);
        for (x, y) in v.iter_mut().zip(triangle(100, 45, 2, 2.0)) {
            *x += y;
        }
        let picked = detect_maxima(&series(v, 25.0), &DetectorParams::default()).unwrap();
        assert_eq!(picked, vec![45]);
    }

    #[test]
    fn flat_ppg_has_no_beats() {
        let b = detect_beats(
            &series(vec![0.0; 500], 25.0),
            &MotionMask::empty(),
            &DetectorParams::default(),
        )
        .unwrap();
        assert!(b.is_empty());
    }

    #[test]
    fn intervals_from_beats() {
        let b = BeatSeries::new(vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(
            beats_to_intervals(&b).unwrap().intervals_ms,
            vec![1000.0; 3]
        );
        let b = BeatSeries::new(vec![0.0, 0.8, 2.0]).unwrap();
        let bbi = beats_to_intervals(&b).unwrap();
        assert!((bbi.intervals_ms[0] - 800.0).abs() < 1e-9);
        assert!((bbi.intervals_ms[1] - 1200.0).abs() < 1e-9);
        assert_eq!(bbi.onset_times, vec![0.0, 0.8]);
        assert!(matches!(
            beats_to_intervals(&BeatSeries::new(vec![1.0]).unwrap()),
            Err(Error::InsufficientData(_))
        ));
    }

    proptest! {
        #[test]
        fn interval_sum_telescopes(gaps in prop::collection::vec(0.3f64..2.0, 1..200), t0 in 0.0f64..1e4) {
            let mut t = t0;
            let mut times = vec![t];
            for g in gaps {
                t += g;
                times.push(t);
            }
            let bbi = beats_to_intervals(&BeatSeries::new(times.clone()).unwrap()).unwrap();
            let total: f64 = bbi.intervals_ms.iter().sum();
            let want = (times[times.len() - 1] - times[0]) * 1000.0;
            prop_assert!((total - want).abs() < 1e-6);
        }

        #[test]
        fn refractory_holds_on_noise(v in prop::collection::vec(-1.0f64..1.0, 60..600)) {
            let s = series(v, 25.0);
            let beats = detect_beats(&s, &MotionMask::empty(), &DetectorParams::default()).unwrap();
            for w in beats.times().windows(2) {
                prop_assert!(w[1] - w[0] >= 0.3);
            }
            let idx = detect_maxima(&s, &DetectorParams::default()).unwrap();
            for w in idx.windows(2) {
                prop_assert!((w[1] - w[0]) as f64 / 25.0 >= 0.3);
            }
        }
    }
}
