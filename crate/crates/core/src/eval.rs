//! Evaluation against reference recordings: DTW alignment of interval
//! series, MAE/MAPE for RR, HR and BR, and quantile summaries across nights.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::beat::beats_to_intervals;
use crate::cardio::mean_rate_bpm;
use crate::config::Config;
use crate::error::{Error, Result};
use crate::series::{interpolate_at, BbiSeries, BeatSeries, TimedSeries};

/// Optimal warping path and its accumulated cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    /// `(test index, ref index)` from `(0, 0)` to `(n - 1, m - 1)`.
    pub path: Vec<(usize, usize)>,
    pub cost: f64,
}

const DIAG: u8 = 0;
const UP: u8 = 1; // from (i - 1, j)
const LEFT: u8 = 2; // from (i, j - 1)

/// Dynamic time warping with cost `|test[i] - ref[j]|`, steps (1,0), (0,1),
/// (1,1) and a Sakoe-Chiba band `|i - j| <= band`. The band is widened to
/// the length difference so the end cell is always reachable.
pub fn dtw_align(test: &[f64], reference: &[f64], band: usize) -> Result<Alignment> {
    let (n, m) = (test.len(), reference.len());
    if n == 0 || m == 0 {
        return Err(Error::insufficient("dtw needs two non-empty sequences"));
    }
    if band == 0 {
        return Err(Error::InvalidParam("dtw band must be at least 1".into()));
    }
    let w = band.max(n.abs_diff(m));
    let width = 2 * w + 1;
    let col = |i: usize, j: usize| j + w - i; // band column of (i, j)

    let mut prev = vec![f64::INFINITY; width];
    let mut cur = vec![f64::INFINITY; width];
    let mut dirs = vec![DIAG; n * width];
    for i in 0..n {
        cur.fill(f64::INFINITY);
        let lo = i.saturating_sub(w);
        let hi = (i + w).min(m - 1);
        for (j, r) in reference.iter().enumerate().take(hi + 1).skip(lo) {
            let c = col(i, j);
            let d = (test[i] - r).abs();
            if i == 0 && j == 0 {
                cur[c] = d;
                continue;
            }
            // Ties prefer the diagonal, then the test-advancing step.
            let mut best = f64::INFINITY;
            let mut dir = DIAG;
            if i > 0 && j > 0 {
                best = prev[c];
            }
            if i > 0 && c + 1 < width && prev[c + 1] < best {
                best = prev[c + 1];
                dir = UP;
            }
            if j > 0 && c > 0 && cur[c - 1] < best {
                best = cur[c - 1];
                dir = LEFT;
            }
            cur[c] = best + d;
            dirs[i * width + c] = dir;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let cost = prev[col(n - 1, m - 1)];

    let mut path = Vec::with_capacity(n + m);
    let (mut i, mut j) = (n - 1, m - 1);
    path.push((i, j));
    while (i, j) != (0, 0) {
        match dirs[i * width + col(i, j)] {
            DIAG => {
                i -= 1;
                j -= 1;
            }
            UP => i -= 1,
            _ => j -= 1,
        }
        path.push((i, j));
    }
    path.reverse();
    Ok(Alignment { path, cost })
}

pub fn mae(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b)?;
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}

/// Mean absolute percentage error of `a` against reference `b`.
pub fn mape(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b)?;
    if let Some(k) = b.iter().position(|&y| y == 0.0) {
        return Err(Error::ZeroReference(k));
    }
    Ok(100.0
        * a.iter()
            .zip(b)
            .map(|(x, y)| ((x - y) / y).abs())
            .sum::<f64>()
        / a.len() as f64)
}

fn check_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::insufficient("error metric of empty sequences"));
    }
    Ok(())
}

/// Reference segments unusable for evaluation: intervals outside
/// `[min_ms, max_ms]` and gaps between beats longer than `max_gap_s`.
pub fn auto_exclusions(
    reference: &BbiSeries,
    min_ms: f64,
    max_ms: f64,
    max_gap_s: f64,
) -> Vec<(f64, f64)> {
    let mut segs: Vec<(f64, f64)> = Vec::new();
    for k in 0..reference.len() {
        let iv = reference.intervals_ms[k];
        if iv < min_ms || iv > max_ms || iv > max_gap_s * 1000.0 {
            let (s, e) = (reference.onset_times[k], reference.end_time(k));
            match segs.last_mut() {
                Some(last) if s <= last.1 => last.1 = last.1.max(e),
                _ => segs.push((s, e)),
            }
        }
    }
    segs
}

/// Sort and merge possibly overlapping segments.
pub fn merge_segments(mut segs: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    segs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(segs.len());
    for (s, e) in segs {
        match out.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => out.push((s, e)),
        }
    }
    out
}

fn excluded(segs: &[(f64, f64)], t: f64) -> bool {
    let k = segs.partition_point(|s| s.1 < t);
    segs.get(k).is_some_and(|s| s.0 <= t)
}

/// Interval pairs surviving alignment and exclusion.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AlignedIntervals {
    pub test_onsets: Vec<f64>,
    pub test_ms: Vec<f64>,
    pub ref_onsets: Vec<f64>,
    pub ref_ms: Vec<f64>,
}

impl AlignedIntervals {
    pub fn len(&self) -> usize {
        self.ref_ms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ref_ms.is_empty()
    }
}

/// Trim both series to their common span, align the interval values with
/// DTW and drop pairs whose test or reference onset is inside `exclusions`
/// (sorted, non-overlapping).
pub fn align_intervals(
    test: &BbiSeries,
    reference: &BbiSeries,
    exclusions: &[(f64, f64)],
    band: impl Fn(usize) -> usize,
) -> Result<AlignedIntervals> {
    if test.is_empty() || reference.is_empty() {
        return Err(Error::insufficient("interval evaluation needs both series"));
    }
    let lo = test.onset_times[0].max(reference.onset_times[0]);
    let hi = test
        .end_time(test.len() - 1)
        .min(reference.end_time(reference.len() - 1));
    let (t, r) = (test.slice_time(lo, hi), reference.slice_time(lo, hi));
    if t.is_empty() || r.is_empty() {
        return Err(Error::insufficient(
            "test and reference intervals do not overlap",
        ));
    }
    let aln = dtw_align(&t.intervals_ms, &r.intervals_ms, band(t.len().max(r.len())))?;
    let mut out = AlignedIntervals::default();
    for (i, j) in aln.path {
        if excluded(exclusions, t.onset_times[i]) || excluded(exclusions, r.onset_times[j]) {
            continue;
        }
        out.test_onsets.push(t.onset_times[i]);
        out.test_ms.push(t.intervals_ms[i]);
        out.ref_onsets.push(r.onset_times[j]);
        out.ref_ms.push(r.intervals_ms[j]);
    }
    if out.is_empty() {
        return Err(Error::insufficient(
            "no aligned intervals survive exclusion",
        ));
    }
    Ok(out)
}

/// `(mae_ms, mape_pct)` over the aligned intervals.
pub fn evaluate_rr(aligned: &AlignedIntervals) -> Result<(f64, f64)> {
    Ok((
        mae(&aligned.test_ms, &aligned.ref_ms)?,
        mape(&aligned.test_ms, &aligned.ref_ms)?,
    ))
}

/// Heart rate over non-overlapping blocks of `n` aligned intervals, as
/// `(block centre time, bpm)`. Aligned onsets may repeat, so times are
/// non-decreasing rather than strictly increasing.
pub fn hr_reference(onsets: &[f64], intervals_ms: &[f64], n: usize) -> Result<Vec<(f64, f64)>> {
    if n == 0 {
        return Err(Error::InvalidParam(
            "heart-rate block must hold at least one interval".into(),
        ));
    }
    if onsets.len() != intervals_ms.len() {
        return Err(Error::InvalidInput(
            "onsets and intervals differ in length".into(),
        ));
    }
    if intervals_ms.len() < n {
        return Err(Error::insufficient(format!(
            "heart rate needs {n} intervals, got {}",
            intervals_ms.len()
        )));
    }
    Ok(intervals_ms
        .chunks_exact(n)
        .zip(onsets.chunks_exact(n))
        .map(|(iv, on)| {
            (
                0.5 * (on[0] + on[n - 1] + iv[n - 1] / 1000.0),
                mean_rate_bpm(iv),
            )
        })
        .collect())
}

/// `(mae_bpm, mape_pct)` between block heart rates of the aligned test and
/// reference intervals.
pub fn evaluate_hr(aligned: &AlignedIntervals, n: usize) -> Result<(f64, f64)> {
    let test: Vec<f64> = hr_reference(&aligned.test_onsets, &aligned.test_ms, n)?
        .into_iter()
        .map(|p| p.1)
        .collect();
    let reference: Vec<f64> = hr_reference(&aligned.ref_onsets, &aligned.ref_ms, n)?
        .into_iter()
        .map(|p| p.1)
        .collect();
    Ok((mae(&test, &reference)?, mape(&test, &reference)?))
}

/// Interpolate the estimate at the reference times inside its span, then
/// `(mae, mape_pct)`.
pub fn evaluate_br(est: &TimedSeries, reference: &TimedSeries) -> Result<(f64, f64)> {
    if est.is_empty() {
        return Err(Error::insufficient("empty breathing-rate estimate"));
    }
    let (lo, hi) = (est.times[0], est.times[est.len() - 1]);
    let (times, ref_vals): (Vec<f64>, Vec<f64>) = reference
        .points()
        .filter(|&(t, _)| t >= lo && t <= hi)
        .unzip();
    if times.is_empty() {
        return Err(Error::insufficient("estimate and reference do not overlap"));
    }
    let points: Vec<(f64, f64)> = est.points().collect();
    let interp = if points.len() == 1 {
        vec![points[0].1; times.len()]
    } else {
        interpolate_at(&points, times.into_iter())
    };
    Ok((mae(&interp, &ref_vals)?, mape(&interp, &ref_vals)?))
}

/// All six metrics of one night. Reference intervals are built from the
/// reference beats; exclusions combine implausible reference segments with
/// long interpolated runs in the test series.
pub fn evaluate_night(
    name: &str,
    test: &BbiSeries,
    br_est: &TimedSeries,
    ref_beats: &BeatSeries,
    ref_resp: &TimedSeries,
    cfg: &Config,
) -> Result<RecordingMetrics> {
    let reference = beats_to_intervals(ref_beats)?;
    let mut excl = auto_exclusions(&reference, cfg.rr_min_ms, cfg.rr_max_ms, cfg.ref_gap_s);
    excl.extend(test.low_confidence_segments(cfg.low_confidence_s));
    let excl = merge_segments(excl);
    let aligned = align_intervals(test, &reference, &excl, |n| cfg.dtw_band(n))?;
    let (rr_mae_ms, rr_mape_pct) = evaluate_rr(&aligned)?;
    let (hr_mae_bpm, hr_mape_pct) = evaluate_hr(&aligned, cfg.hr_beats)?;
    let (br_mae_min, br_mape_pct) = evaluate_br(br_est, ref_resp)?;
    Ok(RecordingMetrics {
        name: name.to_string(),
        rr_mae_ms,
        rr_mape_pct,
        hr_mae_bpm,
        hr_mape_pct,
        br_mae_min,
        br_mape_pct,
    })
}

/// Table-style statistics of one metric across recordings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
    pub mean: f64,
}

/// Quantile by linear interpolation between order statistics (inclusive
/// method, `h = (n - 1) p`). `sorted` must be ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    match sorted.get(lo + 1) {
        Some(&next) => sorted[lo] + (h - lo as f64) * (next - sorted[lo]),
        None => sorted[lo],
    }
}

pub fn summarize(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::insufficient("summary of no values"));
    }
    if let Some(&v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput(v));
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(Summary {
        min: s[0],
        q25: quantile_sorted(&s, 0.25),
        median: quantile_sorted(&s, 0.5),
        q75: quantile_sorted(&s, 0.75),
        max: s[s.len() - 1],
        mean: s.iter().sum::<f64>() / s.len() as f64,
    })
}

/// Metrics of one recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordingMetrics {
    pub name: String,
    pub rr_mae_ms: f64,
    pub rr_mape_pct: f64,
    pub hr_mae_bpm: f64,
    pub hr_mape_pct: f64,
    pub br_mae_min: f64,
    pub br_mape_pct: f64,
}

impl RecordingMetrics {
    fn values(&self) -> [f64; 6] {
        [
            self.rr_mae_ms,
            self.rr_mape_pct,
            self.hr_mae_bpm,
            self.hr_mape_pct,
            self.br_mae_min,
            self.br_mape_pct,
        ]
    }
}

/// Row labels of the summary table, in order.
pub const METRIC_LABELS: [&str; 6] = [
    "RR MAE [ms]",
    "RR MAPE [%]",
    "HR MAE [min^-1]",
    "HR MAPE [%]",
    "BR MAE [min^-1]",
    "BR MAPE [%]",
];
const METRIC_KEYS: [&str; 6] = [
    "rr_mae_ms",
    "rr_mape_pct",
    "hr_mae_bpm",
    "hr_mape_pct",
    "br_mae_min",
    "br_mape_pct",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub metric: String,
    #[serde(flatten)]
    pub stats: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub recordings: Vec<RecordingMetrics>,
    pub summary: Vec<MetricSummary>,
}

impl EvalReport {
    pub fn new(recordings: Vec<RecordingMetrics>) -> Result<Self> {
        let summary = (0..METRIC_KEYS.len())
            .map(|k| {
                let vals: Vec<f64> = recordings.iter().map(|r| r.values()[k]).collect();
                Ok(MetricSummary {
                    metric: METRIC_KEYS[k].to_string(),
                    stats: summarize(&vals)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            recordings,
            summary,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned text table: one row per metric, columns Min, Q25, Median,
    /// Q75, Max, Mean.
    pub fn to_table(&self) -> String {
        let mut out = format!("{:<16}", "");
        for h in ["Min", "Q25", "Median", "Q75", "Max", "Mean"] {
            let _ = write!(out, " {h:>9}");
        }
        out.push('\n');
        for (label, row) in METRIC_LABELS.iter().zip(&self.summary) {
            let s = row.stats;
            let _ = write!(out, "{label:<16}");
            for v in [s.min, s.q25, s.median, s.q75, s.max, s.mean] {
                let _ = write!(out, " {v:>9.2}");
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exhaustive minimum over every admissible path.
    fn brute_force(a: &[f64], b: &[f64], w: usize) -> f64 {
        fn go(a: &[f64], b: &[f64], w: usize, i: usize, j: usize) -> f64 {
            let d = (a[i] - b[j]).abs();
            if (i, j) == (a.len() - 1, b.len() - 1) {
                return d;
            }
            let mut best = f64::INFINITY;
            for (di, dj) in [(1, 0), (0, 1), (1, 1)] {
                let (ni, nj) = (i + di, j + dj);
                if ni < a.len() && nj < b.len() && ni.abs_diff(nj) <= w {
                    best = best.min(go(a, b, w, ni, nj));
                }
            }
            d + best
        }
        go(a, b, w.max(a.len().abs_diff(b.len())), 0, 0)
    }

    fn path_cost(a: &[f64], b: &[f64], path: &[(usize, usize)]) -> f64 {
        path.iter().map(|&(i, j)| (a[i] - b[j]).abs()).sum()
    }

    #[test]
    fn dtw_identical_is_diagonal() {
        let a = [800.0, 820.0, 790.0, 805.0, 900.0];
        let aln = dtw_align(&a, &a, 2).unwrap();
        assert_eq!(aln.cost, 0.0);
        assert_eq!(aln.path, (0..5).map(|k| (k, k)).collect::<Vec<_>>());
    }

    #[test]
    fn dtw_one_deletion() {
        let r = [800.0, 850.0, 900.0, 950.0, 1000.0, 1050.0, 1100.0, 1150.0];
        let mut t = r.to_vec();
        t.remove(4);
        let aln = dtw_align(&t, &r, 10).unwrap();
        assert_eq!(aln.cost, brute_force(&t, &r, 10));
        let off_diag = aln
            .path
            .windows(2)
            .filter(|w| w[1].0 - w[0].0 != 1 || w[1].1 - w[0].1 != 1)
            .count();
        assert_eq!(off_diag, 1);
    }

    #[test]
    fn dtw_errors() {
        assert!(matches!(
            dtw_align(&[], &[1.0], 1),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            dtw_align(&[1.0], &[1.0], 0),
            Err(Error::InvalidParam(_))
        ));
    }

    #[test]
    fn metric_examples() {
        assert_eq!(mae(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(mape(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert!((mae(&[1.0, 2.0, 3.0], &[2.0, 2.0, 5.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((mape(&[110.0], &[100.0]).unwrap() - 10.0).abs() < 1e-12);
        assert!(matches!(
            mae(&[1.0], &[1.0, 2.0]),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            mape(&[1.0, 1.0], &[1.0, 0.0]),
            Err(Error::ZeroReference(1))
        ));
    }

    #[test]
    fn summarize_examples() {
        let s = summarize(&[5.0]).unwrap();
        assert_eq!([s.min, s.q25, s.median, s.q75, s.max, s.mean], [5.0; 6]);
        let s = summarize(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(
            [s.min, s.q25, s.median, s.q75, s.max, s.mean],
            [1.0, 2.0, 3.0, 4.0, 5.0, 3.0]
        );
        let s = summarize(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!((s.q25, s.median, s.q75), (1.75, 2.5, 3.25));
        assert!(matches!(summarize(&[]), Err(Error::InsufficientData(_))));
    }

    fn bbi(onsets: &[f64], ivs: &[f64]) -> BbiSeries {
        BbiSeries::from_intervals(onsets.to_vec(), ivs.to_vec()).unwrap()
    }

    fn regular(n: usize, iv: f64) -> BbiSeries {
        let ivs: Vec<f64> = (0..n).map(|k| iv + 30.0 * (k as f64 * 0.7).sin()).collect();
        let mut t = vec![0.0];
        for v in &ivs[..n - 1] {
            t.push(t.last().unwrap() + v / 1000.0);
        }
        bbi(&t, &ivs)
    }

    #[test]
    fn rr_identity_and_offset() {
        let r = regular(200, 900.0);
        let a = align_intervals(&r, &r, &[], |_| 10).unwrap();
        assert_eq!(evaluate_rr(&a).unwrap(), (0.0, 0.0));
        let flat = bbi(&r.onset_times, &vec![900.0; 200]);
        let flat_up = bbi(&flat.onset_times, &vec![920.0; 200]);
        let a = align_intervals(&flat_up, &flat, &[], |_| 10).unwrap();
        assert!((evaluate_rr(&a).unwrap().0 - 20.0).abs() < 1e-12);
        // With varying intervals DTW may pair a shifted value with a closer one.
        let shifted = bbi(
            &r.onset_times,
            &r.intervals_ms.iter().map(|v| v + 20.0).collect::<Vec<_>>(),
        );
        let a = align_intervals(&shifted, &r, &[], |_| 10).unwrap();
        assert!(evaluate_rr(&a).unwrap().0 <= 20.0 + 1e-9);
    }

    #[test]
    fn rr_exclusions_drop_pairs() {
        let r = regular(100, 900.0);
        let mut t = r.clone();
        t.intervals_ms[50] += 500.0;
        let excl = [(r.onset_times[50] - 0.01, r.onset_times[50] + 0.01)];
        let a = align_intervals(&t, &r, &excl, |_| 10).unwrap();
        assert_eq!(evaluate_rr(&a).unwrap().0, 0.0);
        assert!(a.len() < 100);
        let all = [(-1.0, 1e6)];
        assert!(matches!(
            align_intervals(&t, &r, &all, |_| 10),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn exclusions_from_reference() {
        let r = bbi(
            &[0.0, 1.0, 2.0, 5.0, 5.8],
            &[1000.0, 1000.0, 3000.0, 800.0, 200.0],
        );
        assert_eq!(
            auto_exclusions(&r, 300.0, 1500.0, 2.0),
            vec![(2.0, 5.0), (5.8, 6.0)]
        );
        assert_eq!(
            merge_segments(vec![(3.0, 4.0), (0.0, 1.0), (0.5, 2.0)]),
            vec![(0.0, 2.0), (3.0, 4.0)]
        );
    }

    #[test]
    fn hr_reference_examples() {
        let onsets: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let hr = hr_reference(&onsets, &[1000.0; 10], 10).unwrap();
        assert_eq!(hr.len(), 1);
        assert!((hr[0].1 - 60.0).abs() < 1e-9);
        assert!((hr[0].0 - 5.0).abs() < 1e-12);
        assert!(matches!(
            hr_reference(&onsets[..5], &[1000.0; 5], 10),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn br_examples() {
        let t: Vec<f64> = (0..100).map(|k| k as f64).collect();
        let r = TimedSeries::new(t.clone(), vec![15.0; 100]).unwrap();
        assert_eq!(evaluate_br(&r, &r).unwrap(), (0.0, 0.0));
        let e = TimedSeries::new(t, vec![16.0; 100]).unwrap();
        let (m, p) = evaluate_br(&e, &r).unwrap();
        assert!((m - 1.0).abs() < 1e-12);
        assert!((p - 100.0 / 15.0).abs() < 1e-12);
        let late = TimedSeries::new(vec![200.0, 201.0], vec![15.0, 15.0]).unwrap();
        assert!(matches!(
            evaluate_br(&late, &r),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn report_layout() {
        let rec = |name: &str, v: f64| RecordingMetrics {
            name: name.into(),
            rr_mae_ms: v,
            rr_mape_pct: v,
            hr_mae_bpm: v,
            hr_mape_pct: v,
            br_mae_min: v,
            br_mape_pct: v,
        };
        let report = EvalReport::new(vec![rec("a", 1.0), rec("b", 3.0)]).unwrap();
        let table = report.to_table();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 7);
        assert_eq!(
            lines[0].split_whitespace().collect::<Vec<_>>(),
            ["Min", "Q25", "Median", "Q75", "Max", "Mean"]
        );
        for (line, label) in lines[1..].iter().zip(METRIC_LABELS) {
            assert!(line.starts_with(label));
            assert_eq!(line[label.len()..].split_whitespace().count(), 6);
        }
        let back: EvalReport = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(back, report);
        assert!(matches!(
            EvalReport::new(vec![]),
            Err(Error::InsufficientData(_))
        ));
    }

    proptest! {
        #[test]
        fn dtw_matches_brute_force(
            a in prop::collection::vec(0.0f64..10.0, 1..8),
            b in prop::collection::vec(0.0f64..10.0, 1..8),
            w in 1usize..4,
        ) {
            let aln = dtw_align(&a, &b, w).unwrap();
            prop_assert!((aln.cost - brute_force(&a, &b, w)).abs() < 1e-9);
            prop_assert!((aln.cost - path_cost(&a, &b, &aln.path)).abs() < 1e-9);
            prop_assert_eq!(aln.path[0], (0, 0));
            prop_assert_eq!(*aln.path.last().unwrap(), (a.len() - 1, b.len() - 1));
        }

        #[test]
        fn dtw_symmetric(
            a in prop::collection::vec(0.0f64..10.0, 1..12),
            b in prop::collection::vec(0.0f64..10.0, 1..12),
        ) {
            let w = a.len().abs_diff(b.len()).max(1);
            let ab = dtw_align(&a, &b, w).unwrap().cost;
            let ba = dtw_align(&b, &a, w).unwrap().cost;
            prop_assert!((ab - ba).abs() < 1e-9);
        }

        #[test]
        fn mae_detects_translation(a in prop::collection::vec(-1e3f64..1e3, 1..50), c in -100.0f64..100.0) {
            let shifted: Vec<f64> = a.iter().map(|x| x + c).collect();
            prop_assert!((mae(&shifted, &a).unwrap() - c.abs()).abs() < 1e-9);
        }

        #[test]
        fn summary_ordered_and_permutation_invariant(mut v in prop::collection::vec(0.0f64..100.0, 1..40)) {
            let s = summarize(&v).unwrap();
            prop_assert!(s.min <= s.q25 && s.q25 <= s.median && s.median <= s.q75 && s.q75 <= s.max);
            v.reverse();
            prop_assert_eq!(summarize(&v).unwrap(), s);
        }
    }
}
