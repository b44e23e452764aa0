//! Breathing rate from heart-rate variability.
//!
//! Corrected intervals are resampled to a uniform rate, band-passed to the
//! autonomic band, and fed sample by sample to a 20th-order autoregressive
//! predictor adapted with NLMS. Once per second the predictor's spectrum is
//! searched for the respiratory peak, and the breathing rate moves towards
//! the peak frequency by a gain equal to the peak's share of the band power.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::series::{resample_linear, BbiSeries, TimedSeries, UniformSeries};

/// Autoregressive model order.
pub const AR_ORDER: usize = 20;

/// Corner of the high-pass section relative to the lower band edge.
const HP_CORNER_RATIO: f64 = 0.625;
/// Corner of the low-pass section relative to the upper band edge, on the
/// pre-warped (tangent) frequency axis.
const LP_CORNER_RATIO: f64 = 1.6;

/// Second-order IIR section, transposed direct form II.
#[derive(Debug, Clone, Copy)]
struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
}

impl Biquad {
    /// Butterworth (Q = 1/sqrt 2) sections with pre-warped corner `fc`.
    fn butterworth(fc: f64, fs: f64, highpass: bool) -> Self {
        let w0 = 2.0 * PI * fc / fs;
        let (sin, cos) = w0.sin_cos();
        let alpha = sin / 2.0f64.sqrt();
        let a0 = 1.0 + alpha;
        let b = if highpass {
            [(1.0 + cos) / 2.0, -(1.0 + cos), (1.0 + cos) / 2.0]
        } else {
            [(1.0 - cos) / 2.0, 1.0 - cos, (1.0 - cos) / 2.0]
        };
        Self {
            b: [b[0] / a0, b[1] / a0, b[2] / a0],
            a: [-2.0 * cos / a0, (1.0 - alpha) / a0],
        }
    }

    fn run(&self, x: &mut [f64]) {
        let (mut s1, mut s2) = (0.0, 0.0);
        for v in x.iter_mut() {
            let y = self.b[0] * *v + s1;
            s1 = self.b[1] * *v - self.a[0] * y + s2;
            s2 = self.b[2] * *v - self.a[1] * y;
            *v = y;
        }
    }
}

/// Fourth-order band-pass (2nd-order high-pass and low-pass Butterworth
/// sections) applied forward and backward for zero phase. Corners sit
/// outside the requested band so the band edges lose under 1.5 dB after the
/// double pass.
#[derive(Debug, Clone)]
pub struct HrvBandpass {
    sections: [Biquad; 2],
    pad: usize,
}

impl HrvBandpass {
    pub fn new(fs: f64, low_hz: f64, high_hz: f64) -> Result<Self> {
        let nyquist = fs / 2.0;
        if !(low_hz > 0.0 && high_hz > low_hz && high_hz < nyquist) {
            return Err(Error::invalid_series(format!(
                "band [{low_hz}, {high_hz}] Hz does not fit under Nyquist {nyquist} Hz"
            )));
        }
        let hp = HP_CORNER_RATIO * low_hz;
        let warped = LP_CORNER_RATIO * (PI * high_hz / fs).tan();
        let lp = (warped.atan() * fs / PI).min(0.95 * nyquist);
        let pad = (3.0 * fs / hp).ceil() as usize;
        Ok(Self {
            sections: [
                Biquad::butterworth(hp, fs, true),
                Biquad::butterworth(lp, fs, false),
            ],
            pad,
        })
    }

    fn pass(&self, x: &mut [f64]) {
        for s in &self.sections {
            s.run(x);
        }
    }

    pub fn apply(&self, series: &UniformSeries) -> Result<UniformSeries> {
        let min_len = (60.0 * series.fs()).round() as usize;
        series.require_len(min_len, "HRV band-pass")?;
        let v = series.values();
        let n = v.len();
        let pad = self.pad.min(n - 1);
        // Odd reflection about each end point.
        let mut x = Vec::with_capacity(n + 2 * pad);
        x.extend((1..=pad).rev().map(|k| 2.0 * v[0] - v[k]));
        x.extend_from_slice(v);
        x.extend((1..=pad).map(|k| 2.0 * v[n - 1] - v[n - 1 - k]));
        self.pass(&mut x);
        x.reverse();
        self.pass(&mut x);
        x.reverse();
        Ok(series.with_values(x[pad..pad + n].to_vec()))
    }
}

/// Band-pass `series` to `[low_hz, high_hz]` with zero phase.
pub fn bandpass_hrv(series: &UniformSeries, low_hz: f64, high_hz: f64) -> Result<UniformSeries> {
    HrvBandpass::new(series.fs(), low_hz, high_hz)?.apply(series)
}

/// Adaptive AR predictor state.
#[derive(Debug, Clone, PartialEq)]
pub struct ArState {
    coeffs: [f64; AR_ORDER],
    /// Most recent samples, newest first.
    history: [f64; AR_ORDER],
    filled: usize,
    pub mu: f64,
    pub eps: f64,
}

impl ArState {
    pub fn new(mu: f64, eps: f64) -> Result<Self> {
        if !(mu > 0.0 && mu < 2.0) || !(eps >= 0.0) {
            return Err(Error::InvalidParam(format!(
                "NLMS needs 0 < mu < 2 and eps >= 0, got {mu}, {eps}"
            )));
        }
        Ok(Self {
            coeffs: [0.0; AR_ORDER],
            history: [0.0; AR_ORDER],
            filled: 0,
            mu,
            eps,
        })
    }

    pub fn coeffs(&self) -> &[f64; AR_ORDER] {
        &self.coeffs
    }

    /// Whether the history holds `AR_ORDER` samples and updates are active.
    pub fn is_warm(&self) -> bool {
        self.filled == AR_ORDER
    }

    /// Predict `x` from the history, adapt the coefficients once warm, and
    /// push `x` into the history. Returns the prediction error.
    pub fn step(&mut self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::NonFiniteInput(x));
        }
        let h = &self.history;
        let prediction: f64 = self.coeffs.iter().zip(h).map(|(a, h)| a * h).sum();
        let err = x - prediction;
        if self.is_warm() {
            let energy: f64 = h.iter().map(|v| v * v).sum();
            let g = self.mu * err / (self.eps + energy);
            for (a, h) in self.coeffs.iter_mut().zip(h) {
                *a += g * h;
            }
        }
        self.history.copy_within(0..AR_ORDER - 1, 1);
        self.history[0] = x;
        self.filled = (self.filled + 1).min(AR_ORDER);
        Ok(err)
    }
}

/// Uniform frequency grid `start + i * step`, `i < len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl FrequencyGrid {
    /// Grid from `start` to `end` inclusive.
    pub fn span(start: f64, end: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && end >= start) {
            return Err(Error::InvalidGrid(format!(
                "bad grid [{start}, {end}] step {step}"
            )));
        }
        Ok(Self {
            start,
            step,
            len: ((end - start) / step + 1e-9).floor() as usize + 1,
        })
    }

    pub fn freq(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.freq(self.len - 1)
    }
}

/// Evaluates AR power spectra on a fixed grid with precomputed phasors.
#[derive(Debug, Clone)]
pub struct ArSpectrum {
    grid: FrequencyGrid,
    // cos and sin of 2 pi f k / fs, row-major by grid point then lag.
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl ArSpectrum {
    pub fn new(grid: FrequencyGrid, fs: f64) -> Result<Self> {
        if grid.len == 0 || grid.start < 0.0 || grid.end() > fs / 2.0 + 1e-12 {
            return Err(Error::InvalidGrid(format!(
                "grid [{}, {}] Hz outside [0, {}] Hz",
                grid.start,
                grid.end(),
                fs / 2.0
            )));
        }
        let mut cos = Vec::with_capacity(grid.len * AR_ORDER);
        let mut sin = Vec::with_capacity(grid.len * AR_ORDER);
        for i in 0..grid.len {
            let w = 2.0 * PI * grid.freq(i) / fs;
            for k in 1..=AR_ORDER {
                let (s, c) = (w * k as f64).sin_cos();
                cos.push(c);
                sin.push(s);
            }
        }
        Ok(Self { grid, cos, sin })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    /// `1 / |1 - sum_k a_k e^{-i 2 pi f k / fs}|^2` at every grid point.
    pub fn psd(&self, coeffs: &[f64; AR_ORDER]) -> Result<Vec<f64>> {
        (0..self.grid.len)
            .map(|i| {
                let row = i * AR_ORDER;
                let (mut re, mut im) = (1.0, 0.0);
                for (k, a) in coeffs.iter().enumerate() {
                    re -= a * self.cos[row + k];
                    im += a * self.sin[row + k];
                }
                let p = 1.0 / (re * re + im * im);
                if p.is_finite() {
                    Ok(p)
                } else {
                    Err(Error::NonFiniteSpectrum {
                        freq_hz: self.grid.freq(i),
                    })
                }
            })
            .collect()
    }
}

/// AR power spectral density on `grid`, innovation variance omitted.
pub fn ar_spectrum(coeffs: &[f64; AR_ORDER], grid: FrequencyGrid, fs: f64) -> Result<Vec<f64>> {
    ArSpectrum::new(grid, fs)?.psd(coeffs)
}

/// Respiratory peak of a spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RespiratoryPeak {
    pub f_peak: f64,
    /// Power in a window around the peak.
    pub p_peak: f64,
    /// Power over the whole respiratory band.
    pub p_band: f64,
}

impl RespiratoryPeak {
    /// Share of band power held by the peak, in (0, 1].
    pub fn gain(&self) -> f64 {
        (self.p_peak / self.p_band).clamp(0.0, 1.0)
    }
}

/// Integral of the piecewise-linear interpolant of `psd` over `[a, b]`.
fn integrate(psd: &[f64], grid: &FrequencyGrid, a: f64, b: f64) -> f64 {
    let at = |f: f64| {
        let x = ((f - grid.start) / grid.step).clamp(0.0, (grid.len - 1) as f64);
        let i = (x.floor() as usize).min(grid.len - 2);
        let w = x - i as f64;
        psd[i] * (1.0 - w) + psd[i + 1] * w
    };
    let mut total = 0.0;
    let mut lo = a;
    while lo < b {
        // Next grid knot strictly after `lo`.
        let knot = grid.freq((((lo - grid.start) / grid.step + 1e-9).floor() as usize) + 1);
        let hi = knot.min(b);
        total += 0.5 * (at(lo) + at(hi)) * (hi - lo);
        lo = hi;
    }
    total
}

/// Locate the largest spectral peak within `band`, refine it with a parabola
/// through its neighbours, and measure the power within `halfwidth` Hz of it
/// (window shifted to stay inside the band) against the whole band. Ties go
/// to the lower frequency.
pub fn track_respiratory_peak(
    psd: &[f64],
    grid: &FrequencyGrid,
    band: (f64, f64),
    halfwidth: f64,
) -> Result<RespiratoryPeak> {
    let (lo, hi) = band;
    if psd.len() != grid.len || grid.len < 2 {
        return Err(Error::InvalidGrid(
            "spectrum does not match its grid".into(),
        ));
    }
    if grid.start > lo + 1e-12 || grid.end() < hi - 1e-12 || !(hi > lo) {
        return Err(Error::InvalidGrid(format!(
            "grid does not cover band [{lo}, {hi}] Hz"
        )));
    }
    let mut best: Option<usize> = None;
    for i in 0..grid.len {
        let f = grid.freq(i);
        if f < lo - 1e-9 || f > hi + 1e-9 {
            continue;
        }
        if best.is_none_or(|b| psd[i] > psd[b]) {
            best = Some(i);
        }
    }
    let k = best.ok_or_else(|| Error::InvalidGrid("no grid point inside the band".into()))?;
    let delta = if k > 0 && k + 1 < grid.len {
        crate::beat::parabolic_offset(psd[k - 1], psd[k], psd[k + 1])
    } else {
        0.0
    };
    let f_peak = (grid.freq(k) + delta * grid.step).clamp(lo, hi);

    let width = (2.0 * halfwidth).min(hi - lo);
    let w_lo = (f_peak - halfwidth).clamp(lo, hi - width);
    let p_peak = integrate(psd, grid, w_lo, w_lo + width);
    let p_band = integrate(psd, grid, lo, hi);
    Ok(RespiratoryPeak {
        f_peak,
        p_peak,
        p_band,
    })
}

/// Running breathing-rate estimate, breaths per minute.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BreathingState {
    pub rate_min: f64,
    /// Respiratory band in Hz; the rate is kept within it.
    pub band: (f64, f64),
}

impl BreathingState {
    pub fn new(rate_min: f64, band: (f64, f64)) -> Self {
        Self {
            rate_min: rate_min.clamp(60.0 * band.0, 60.0 * band.1),
            band,
        }
    }
}

/// How the breathing estimate responds to a new respiratory peak.
pub trait RateTracker {
    fn update(&self, state: BreathingState, f_peak: f64, gain: f64) -> Result<BreathingState>;
}

/// Move the rate towards the peak frequency by the gain, then clamp to the band.
#[derive(Debug, Clone, Copy, Default)]
pub struct GainTracker;

impl RateTracker for GainTracker {
    fn update(&self, state: BreathingState, f_peak: f64, gain: f64) -> Result<BreathingState> {
        update_breathing_rate(state, f_peak, gain)
    }
}

pub fn update_breathing_rate(
    state: BreathingState,
    f_peak: f64,
    gain: f64,
) -> Result<BreathingState> {
    if !(0.0..=1.0).contains(&gain) {
        return Err(Error::InvalidGain(gain));
    }
    let (lo, hi) = state.band;
    if !(f_peak >= lo && f_peak <= hi) {
        return Err(Error::InvalidParam(format!(
            "peak {f_peak} Hz outside band [{lo}, {hi}] Hz"
        )));
    }
    let rate = state.rate_min + gain * (60.0 * f_peak - state.rate_min);
    Ok(BreathingState {
        rate_min: rate.clamp(60.0 * lo, 60.0 * hi),
        ..state
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BreathingParams {
    pub resample_hz: f64,
    /// HRV band-pass edges, Hz.
    pub hrv_band: (f64, f64),
    pub mu: f64,
    pub eps: f64,
    /// Seconds between spectrum evaluations.
    pub update_period_s: f64,
    pub grid_step_hz: f64,
    pub resp_band: (f64, f64),
    pub peak_halfwidth_hz: f64,
    pub initial_rate_min: f64,
    /// No estimates are emitted before this much signal has been seen.
    pub warmup_s: f64,
    pub min_duration_s: f64,
}

impl Default for BreathingParams {
    fn default() -> Self {
        Self {
            resample_hz: 2.0,
            hrv_band: (0.04, 0.5),
            mu: 0.05,
            eps: 1e-8,
            update_period_s: 1.0,
            grid_step_hz: 0.002,
            resp_band: (0.1, 0.5),
            peak_halfwidth_hz: 0.02,
            initial_rate_min: 15.0,
            warmup_s: 60.0,
            min_duration_s: 300.0,
        }
    }
}

/// Breathing-rate trajectory with the gain used at each update.
#[derive(Debug, Clone, PartialEq)]
pub struct BreathingEstimate {
    pub rate: TimedSeries,
    pub gain: Vec<f64>,
}

/// Uniform, band-passed interval series ready for AR tracking.
pub fn prepare_hrv(corrected: &BbiSeries, params: &BreathingParams) -> Result<UniformSeries> {
    if corrected.len() < 2 {
        return Err(Error::insufficient("breathing estimation needs intervals"));
    }
    let t_first = corrected.onset_times[0];
    let t_last = corrected.onset_times[corrected.len() - 1];
    if corrected.end_time(corrected.len() - 1) - t_first < params.min_duration_s {
        return Err(Error::insufficient(format!(
            "breathing estimation needs {} s of intervals",
            params.min_duration_s
        )));
    }
    let points: Vec<(f64, f64)> = corrected
        .onset_times
        .iter()
        .copied()
        .zip(corrected.intervals_ms.iter().copied())
        .collect();
    let uniform = resample_linear(&points, params.resample_hz, t_first, t_last)?;
    bandpass_hrv(&uniform, params.hrv_band.0, params.hrv_band.1)
}

/// Run the adaptive AR tracker over an already band-passed series.
pub fn track_breathing(
    filtered: &UniformSeries,
    params: &BreathingParams,
    tracker: &impl RateTracker,
) -> Result<BreathingEstimate> {
    let fs = filtered.fs();
    let grid = FrequencyGrid::span(0.0, fs / 2.0, params.grid_step_hz)?;
    let spectrum = ArSpectrum::new(grid, fs)?;
    let every = (params.update_period_s * fs).round().max(1.0) as usize;
    let mut ar = ArState::new(params.mu, params.eps)?;
    let mut state = BreathingState::new(params.initial_rate_min, params.resp_band);

    let (mut times, mut rates, mut gains) = (Vec::new(), Vec::new(), Vec::new());
    for (k, &x) in filtered.values().iter().enumerate() {
        ar.step(x)?;
        if k % every != 0 || !ar.is_warm() {
            continue;
        }
        let psd = spectrum.psd(ar.coeffs())?;
        let peak = track_respiratory_peak(&psd, &grid, params.resp_band, params.peak_halfwidth_hz)?;
        state = tracker.update(state, peak.f_peak, peak.gain())?;
        let t = filtered.time(k);
        if t - filtered.t0() >= params.warmup_s {
            times.push(t);
            rates.push(state.rate_min);
            gains.push(peak.gain());
        }
    }
    Ok(BreathingEstimate {
        rate: TimedSeries::new(times, rates)?,
        gain: gains,
    })
}

/// Breathing rate, one estimate per update period after the warm-up.
pub fn breathing_pipeline(
    corrected: &BbiSeries,
    params: &BreathingParams,
) -> Result<BreathingEstimate> {
    let filtered = prepare_hrv(corrected, params)?;
    track_breathing(&filtered, params, &GainTracker)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn sine(f: f64, amp: f64, fs: f64, n: usize) -> UniformSeries {
        UniformSeries::new(
            (0..n)
                .map(|k| amp * (2.0 * PI * f * k as f64 / fs).sin())
                .collect(),
            fs,
            0.0,
        )
        .unwrap()
    }

    fn rms(v: &[f64]) -> f64 {
        (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
    }

    #[test]
    fn bandpass_rejects_dc() {
        let s = UniformSeries::new(vec![950.0; 1200], 2.0, 0.0).unwrap();
        let out = bandpass_hrv(&s, 0.04, 0.5).unwrap();
        assert!(out.values()[240..960].iter().all(|x| x.abs() < 9.5));
    }

    #[test]
    fn bandpass_keeps_respiratory_band() {
        let s = sine(0.25, 1.0, 2.0, 2400);
        let out = bandpass_hrv(&s, 0.04, 0.5).unwrap();
        let ratio = rms(&out.values()[600..1800]) / rms(&s.values()[600..1800]);
        assert!((ratio - 1.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn bandpass_attenuates_above_band() {
        let s = sine(0.9, 1.0, 2.0, 2400);
        let out = bandpass_hrv(&s, 0.04, 0.5).unwrap();
        let ratio = rms(&out.values()[600..1800]) / rms(&s.values()[600..1800]);
        assert!(20.0 * ratio.log10() < -20.0);
    }

    #[test]
    fn bandpass_errors() {
        let s = UniformSeries::new(vec![0.0; 200], 1.0, 0.0).unwrap();
        assert!(matches!(
            bandpass_hrv(&s, 0.04, 0.5),
            Err(Error::InvalidSeries(_))
        ));
        let s = UniformSeries::new(vec![0.0; 100], 2.0, 0.0).unwrap();
        assert!(matches!(
            bandpass_hrv(&s, 0.04, 0.5),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn nlms_zero_input_is_inert() {
        let mut ar = ArState::new(0.05, 1e-8).unwrap();
        for _ in 0..100 {
            assert_eq!(ar.step(0.0).unwrap(), 0.0);
        }
        assert!(ar.coeffs().iter().all(|&a| a == 0.0));
        assert!(matches!(ar.step(f64::NAN), Err(Error::NonFiniteInput(_))));
    }

    #[test]
    fn nlms_learns_ar1() {
        // With 20 taps the slow eigenmodes of a strongly coloured AR(1) input
        // need tens of thousands of steps at mu = 0.05.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noise = Normal::new(0.0, 0.1).unwrap();
        let mut ar = ArState::new(0.05, 1e-8).unwrap();
        let mut x = 0.0;
        for n in 0..40_000 {
            if n == 2000 {
                assert!(ar.coeffs()[0] > 0.5);
            }
            x = 0.9 * x + noise.sample(&mut rng);
            ar.step(x).unwrap();
        }
        let a1 = ar.coeffs()[0];
        assert!((a1 - 0.9).abs() < 0.05, "a1 = {a1}");
    }

    #[test]
    fn nlms_update_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut ar = ArState::new(0.05, 1e-8).unwrap();
        for _ in 0..500 {
            let before = *ar.coeffs();
            let h = ar.history;
            let warm = ar.is_warm();
            let e = ar.step(noise.sample(&mut rng)).unwrap();
            let dnorm = before
                .iter()
                .zip(ar.coeffs())
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            let hnorm = h.iter().map(|v| v * v).sum::<f64>().sqrt();
            if warm {
                assert!(dnorm <= 0.05 * e.abs() / hnorm * (1.0 + 1e-12));
            } else {
                assert_eq!(dnorm, 0.0);
            }
        }
    }

    #[test]
    fn flat_and_ar1_spectra() {
        let grid = FrequencyGrid::span(0.0, 1.0, 0.002).unwrap();
        assert_eq!(grid.len, 501);
        let flat = ar_spectrum(&[0.0; AR_ORDER], grid, 2.0).unwrap();
        assert!(flat.iter().all(|&p| p == 1.0));

        let mut a = [0.0; AR_ORDER];
        a[0] = 0.9;
        let p = ar_spectrum(&a, grid, 2.0).unwrap();
        assert!((p[0] - 100.0).abs() < 1e-9);
        assert!(p.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn grid_outside_nyquist() {
        let grid = FrequencyGrid::span(0.0, 1.5, 0.01).unwrap();
        assert!(matches!(
            ar_spectrum(&[0.0; AR_ORDER], grid, 2.0),
            Err(Error::InvalidGrid(_))
        ));
    }

    #[test]
    fn flat_spectrum_gain() {
        let grid = FrequencyGrid::span(0.0, 1.0, 0.002).unwrap();
        let psd = vec![1.0; grid.len];
        let peak = track_respiratory_peak(&psd, &grid, (0.1, 0.5), 0.02).unwrap();
        assert!((peak.gain() - 0.1).abs() < 1e-9);
        assert!((peak.f_peak - 0.1).abs() < 1e-12);
    }

    #[test]
    fn lorentzian_peak() {
        let grid = FrequencyGrid::span(0.0, 1.0, 0.002).unwrap();
        let psd: Vec<f64> = (0..grid.len)
            .map(|i| {
                let f = grid.freq(i);
                1e-3 + 1.0 / (1.0 + ((f - 0.2503) / 0.003).powi(2))
            })
            .collect();
        let peak = track_respiratory_peak(&psd, &grid, (0.1, 0.5), 0.02).unwrap();
        assert!((peak.f_peak - 0.2503).abs() < 5e-4, "{}", peak.f_peak);
        assert!(peak.gain() > 0.8);
        assert!(peak.p_peak <= peak.p_band);
    }

    #[test]
    fn equal_peaks_pick_lower() {
        let grid = FrequencyGrid::span(0.0, 1.0, 0.002).unwrap();
        let mut psd = vec![1.0; grid.len];
        psd[100] = 5.0; // 0.2 Hz
        psd[200] = 5.0; // 0.4 Hz
        let peak = track_respiratory_peak(&psd, &grid, (0.1, 0.5), 0.02).unwrap();
        assert!((peak.f_peak - 0.2).abs() < 0.002);
    }

    #[test]
    fn band_outside_grid() {
        let grid = FrequencyGrid::span(0.2, 1.0, 0.002).unwrap();
        let psd = vec![1.0; grid.len];
        assert!(matches!(
            track_respiratory_peak(&psd, &grid, (0.1, 0.5), 0.02),
            Err(Error::InvalidGrid(_))
        ));
    }

    #[test]
    fn rate_update_rule() {
        let s = BreathingState::new(12.0, (0.1, 0.5));
        assert_eq!(update_breathing_rate(s, 0.3, 0.0).unwrap().rate_min, 12.0);
        assert!((update_breathing_rate(s, 0.3, 1.0).unwrap().rate_min - 18.0).abs() < 1e-12);
        assert!((update_breathing_rate(s, 0.3, 0.5).unwrap().rate_min - 15.0).abs() < 1e-12);
        assert!(matches!(
            update_breathing_rate(s, 0.3, 1.5),
            Err(Error::InvalidGain(_))
        ));
        assert!(matches!(
            update_breathing_rate(s, 0.3, -0.1),
            Err(Error::InvalidGain(_))
        ));
    }

    proptest::proptest! {
        #[test]
        fn rate_stays_in_band(rate in -100.0f64..100.0, f in 0.1f64..0.5, g in 0.0f64..1.0) {
            let s = BreathingState { rate_min: rate, band: (0.1, 0.5) };
            let r = update_breathing_rate(s, f, g).unwrap().rate_min;
            proptest::prop_assert!((6.0..=30.0).contains(&r));
        }
    }
}
