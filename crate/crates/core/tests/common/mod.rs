#![allow(dead_code)]

use ppgsleep::series::UniformSeries;
use ppgsleep::BbiSeries;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Interval series straight from beat times, all valid.
pub fn bbi_from_beats(t: &[f64]) -> BbiSeries {
    BbiSeries::from_intervals(
        t[..t.len() - 1].to_vec(),
        t.windows(2).map(|w| (w[1] - w[0]) * 1000.0).collect(),
    )
    .unwrap()
}

/// Frequency of the largest periodogram bin above DC, after removing the mean.
pub fn periodogram_peak(x: &[f64], fs: f64, f_lo: f64, f_hi: f64) -> f64 {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let mut buf: Vec<Complex<f64>> = x.iter().map(|v| Complex::new(v - mean, 0.0)).collect();
    FftPlanner::new()
        .plan_fft_forward(buf.len())
        .process(&mut buf);
    let df = fs / buf.len() as f64;
    (1..buf.len() / 2)
        .filter(|&k| (f_lo..=f_hi).contains(&(k as f64 * df)))
        .max_by(|&a, &b| buf[a].norm_sqr().total_cmp(&buf[b].norm_sqr()))
        .map(|k| k as f64 * df)
        .unwrap()
}

/// Distance from each truth time to the nearest detected time.
pub fn nearest_errors(detected: &[f64], truth: &[f64]) -> Vec<f64> {
    truth
        .iter()
        .map(|&t| {
            let k = detected.partition_point(|&d| d < t);
            let after = detected.get(k).map_or(f64::INFINITY, |d| d - t);
            let before = if k > 0 {
                t - detected[k - 1]
            } else {
                f64::INFINITY
            };
            after.min(before)
        })
        .collect()
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

pub fn rms(v: &[f64]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

pub fn sine(f: f64, fs: f64, n: usize) -> UniformSeries {
    UniformSeries::new(
        (0..n)
            .map(|k| (2.0 * std::f64::consts::PI * f * k as f64 / fs).sin())
            .collect(),
        fs,
        0.0,
    )
    .unwrap()
}
