//! Synthetic ground truth: beat trains with respiratory sinus arrhythmia,
//! PPG waveforms built from those beats, and wrist acceleration with
//! motion bursts. All generators are deterministic in their seed.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::pipeline::Recording;
use crate::series::{BeatSeries, TimedSeries, UniformSeries};

/// Respiratory frequency schedule: `(start time s, frequency Hz)` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct RsaSchedule {
    steps: Vec<(f64, f64)>,
}

impl RsaSchedule {
    pub fn constant(freq_hz: f64) -> Self {
        Self {
            steps: vec![(0.0, freq_hz)],
        }
    }

    /// Piecewise-constant schedule. The first step must start at 0 and step
    /// times must increase.
    pub fn stepped(steps: Vec<(f64, f64)>) -> Result<Self> {
        if steps.first().map(|s| s.0) != Some(0.0) {
            return Err(Error::InvalidParam(
                "respiration schedule must start at t = 0".into(),
            ));
        }
        if steps.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidParam(
                "respiration steps must be increasing in time".into(),
            ));
        }
        Ok(Self { steps })
    }

    pub fn freq_at(&self, t: f64) -> f64 {
        self.steps
            .iter()
            .rev()
            .find(|s| s.0 <= t)
            .unwrap_or(&self.steps[0])
            .1
    }

    pub fn steps(&self) -> &[(f64, f64)] {
        &self.steps
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeatParams {
    /// Mean heart rate, beats per minute.
    pub hr_base: f64,
    pub rsa: RsaSchedule,
    /// Relative depth of the heart-rate modulation.
    pub rsa_depth: f64,
    pub duration_s: f64,
    /// Standard deviation of Gaussian jitter added to each beat time.
    pub jitter_s: f64,
}

impl BeatParams {
    pub fn new(hr_base: f64, rsa_freq: f64, rsa_depth: f64, duration_s: f64) -> Self {
        Self {
            hr_base,
            rsa: RsaSchedule::constant(rsa_freq),
            rsa_depth,
            duration_s,
            jitter_s: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParam(what.into()));
        if !(40.0..=120.0).contains(&self.hr_base) {
            return bad("hr_base must be in [40, 120] bpm");
        }
        if self.rsa.steps.iter().any(|s| !(0.1..=0.5).contains(&s.1)) {
            return bad("respiration frequency must be in [0.1, 0.5] Hz");
        }
        if !(0.0..=0.2).contains(&self.rsa_depth) {
            return bad("rsa_depth must be in [0, 0.2]");
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return bad("duration must be positive");
        }
        if !(self.jitter_s >= 0.0 && self.jitter_s < 0.05) {
            return bad("jitter must be in [0, 0.05) s");
        }
        Ok(())
    }
}

/// Generated beat train plus its ground truth.
#[derive(Debug, Clone)]
pub struct SynthBeats {
    /// Beat times including jitter.
    pub beats: BeatSeries,
    /// Jitter-free beat times.
    pub true_beats: Vec<f64>,
    /// True intervals (ms), timestamped at their onset.
    pub true_bbi: TimedSeries,
    /// True breathing rate (breaths/min) at 1 s resolution.
    pub true_br: TimedSeries,
}

/// Cumulative beat phase, in beats, of rate `hr (1 + depth sin(theta(t)))`,
/// where `theta' = 2 pi f(t)` and `theta(0) = 0`. Piecewise closed form.
struct BeatPhase {
    hr_hz: f64,
    depth: f64,
    // (segment start, theta at segment start, angular freq, phase at start)
    segments: Vec<(f64, f64, f64, f64)>,
}

impl BeatPhase {
    fn new(p: &BeatParams) -> Self {
        let hr_hz = p.hr_base / 60.0;
        let mut segments = Vec::with_capacity(p.rsa.steps.len());
        let (mut theta, mut phase) = (0.0f64, 0.0f64);
        for (i, &(start, f)) in p.rsa.steps.iter().enumerate() {
            let omega = 2.0 * PI * f;
            segments.push((start, theta, omega, phase));
            if let Some(&(next, _)) = p.rsa.steps.get(i + 1) {
                let dt = next - start;
                phase +=
                    hr_hz * (dt + p.rsa_depth * (theta.cos() - (theta + omega * dt).cos()) / omega);
                theta += omega * dt;
            }
        }
        Self {
            hr_hz,
            depth: p.rsa_depth,
            segments,
        }
    }

    fn segment(&self, t: f64) -> &(f64, f64, f64, f64) {
        self.segments
            .iter()
            .rev()
            .find(|s| s.0 <= t)
            .unwrap_or(&self.segments[0])
    }

    fn phase(&self, t: f64) -> f64 {
        let &(start, theta, omega, phase) = self.segment(t);
        let dt = t - start;
        phase + self.hr_hz * (dt + self.depth * (theta.cos() - (theta + omega * dt).cos()) / omega)
    }

    fn rate(&self, t: f64) -> f64 {
        let &(start, theta, omega, _) = self.segment(t);
        self.hr_hz * (1.0 + self.depth * (theta + omega * (t - start)).sin())
    }

    /// Time at which the phase reaches `target`, starting from `guess`.
    fn solve(&self, target: f64, mut t: f64) -> f64 {
        for _ in 0..50 {
            let err = self.phase(t) - target;
            if err == 0.0 {
                break;
            }
            let step = err / self.rate(t);
            t -= step;
            if step.abs() < 1e-13 {
                break;
            }
        }
        t
    }
}

/// Beat train whose instantaneous rate is `hr_base (1 + depth sin(2 pi f t))`.
/// A beat is emitted each time the integrated rate crosses a whole number,
/// starting with a beat at `t = 0`.
pub fn gen_beat_times(params: &BeatParams, seed: u64) -> Result<SynthBeats> {
    params.validate()?;
    let phase = BeatPhase::new(params);
    let total = phase.phase(params.duration_s);
    let n_beats = total.floor() as usize + 1;

    let mut true_beats = Vec::with_capacity(n_beats);
    let mut t = 0.0;
    for k in 0..n_beats {
        if k > 0 {
            t = phase.solve(k as f64, t + 1.0 / phase.rate(t));
        }
        true_beats.push(t);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let beats = if params.jitter_s > 0.0 {
        let normal = Normal::new(0.0, params.jitter_s).expect("valid jitter");
        true_beats
            .iter()
            .map(|&b| b + normal.sample(&mut rng))
            .collect()
    } else {
        true_beats.clone()
    };

    let true_bbi = TimedSeries::new(
        true_beats[..true_beats.len().saturating_sub(1)].to_vec(),
        true_beats
            .windows(2)
            .map(|w| (w[1] - w[0]) * 1000.0)
            .collect(),
    )?;
    let secs = params.duration_s.floor() as usize;
    let true_br = TimedSeries::new(
        (0..=secs).map(|s| s as f64).collect(),
        (0..=secs)
            .map(|s| 60.0 * params.rsa.freq_at(s as f64))
            .collect(),
    )?;
    Ok(SynthBeats {
        beats: BeatSeries::new(beats)?,
        true_beats,
        true_bbi,
        true_br,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpgParams {
    pub fs: f64,
    pub duration_s: f64,
    /// Peak height of one pulse.
    pub amplitude: f64,
    pub noise_std: f64,
    /// Amplitude of the 0.05 Hz baseline drift.
    pub drift_amp: f64,
}

impl PpgParams {
    pub fn new(duration_s: f64) -> Self {
        Self {
            fs: 25.0,
            duration_s,
            amplitude: 1.0,
            noise_std: 0.0,
            drift_amp: 0.0,
        }
    }
}

/// Rise time of the pulse template; the steepest point sits at its middle.
pub const PULSE_RISE_S: f64 = 0.15;
/// Decay time of the pulse template after its peak.
pub const PULSE_DECAY_S: f64 = 0.4;

/// Unit pulse shape relative to the beat time: raised-cosine rise centred on
/// the beat, raised-cosine decay after the peak.
pub fn pulse_template(dt: f64) -> f64 {
    let half_rise = PULSE_RISE_S / 2.0;
    if dt <= -half_rise || dt >= half_rise + PULSE_DECAY_S {
        0.0
    } else if dt < half_rise {
        0.5 * (1.0 - (PI * (dt + half_rise) / PULSE_RISE_S).cos())
    } else {
        0.5 * (1.0 + (PI * (dt - half_rise) / PULSE_DECAY_S).cos())
    }
}

/// PPG waveform: one pulse per beat, baseline drift and white noise.
pub fn gen_ppg(beats: &BeatSeries, params: &PpgParams, seed: u64) -> Result<UniformSeries> {
    if !(params.fs >= 25.0) {
        return Err(Error::InvalidParam(
            "PPG rate must be at least 25 Hz".into(),
        ));
    }
    let fs = params.fs;
    let n = (params.duration_s * fs).round() as usize;
    let mut v: Vec<f64> = (0..n)
        .map(|k| params.drift_amp * (2.0 * PI * 0.05 * k as f64 / fs).sin())
        .collect();
    let half_rise = PULSE_RISE_S / 2.0;
    for &b in beats.times() {
        let lo = ((b - half_rise) * fs).ceil().max(0.0) as usize;
        let hi = (((b + half_rise + PULSE_DECAY_S) * fs).floor().max(0.0) as usize).min(n);
        for (k, x) in v.iter_mut().enumerate().take(hi).skip(lo) {
            *x += params.amplitude * pulse_template(k as f64 / fs - b);
        }
    }
    if params.noise_std > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5050_4721);
        let normal = Normal::new(0.0, params.noise_std).expect("valid noise");
        for x in &mut v {
            *x += normal.sample(&mut rng);
        }
    }
    UniformSeries::new(v, fs, 0.0)
}

/// Motion burst: `(start s, end s, RMS amplitude per axis g)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Burst {
    pub start: f64,
    pub end: f64,
    pub amp: f64,
}

/// Three acceleration axes: 1 g gravity on z, white noise on every axis, and
/// band-limited (1-4 Hz) random motion of RMS amplitude `amp` on every axis
/// during each burst.
pub fn gen_accel(
    duration_s: f64,
    fs: f64,
    bursts: &[Burst],
    noise_std: f64,
    seed: u64,
) -> Result<[UniformSeries; 3]> {
    let mut sorted = bursts.to_vec();
    sorted.sort_by(|a, b| a.start.total_cmp(&b.start));
    for b in &sorted {
        if !(b.start >= 0.0 && b.end > b.start && b.end <= duration_s && b.amp >= 0.0) {
            return Err(Error::InvalidParam(format!(
                "burst {b:?} outside the recording"
            )));
        }
    }
    if sorted.windows(2).any(|w| w[1].start < w[0].end) {
        return Err(Error::InvalidParam("motion bursts overlap".into()));
    }
    let n = (duration_s * fs).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xACCE_1000);
    let mut axes = [vec![0.0; n], vec![0.0; n], vec![1.0; n]];

    for b in &sorted {
        for axis in axes.iter_mut() {
            // Three tones in 1-4 Hz with random phases, scaled to RMS `amp`.
            let tones: Vec<(f64, f64)> = (0..3)
                .map(|_| (rng.random_range(1.0..4.0), rng.random_range(0.0..2.0 * PI)))
                .collect();
            let lo = (b.start * fs).ceil() as usize;
            let hi = ((b.end * fs).ceil() as usize).min(n);
            for (k, x) in axis.iter_mut().enumerate().take(hi).skip(lo) {
                let t = k as f64 / fs;
                let s: f64 = tones
                    .iter()
                    .map(|(f, ph)| (2.0 * PI * f * t + ph).sin())
                    .sum();
                *x += b.amp * s / 1.5f64.sqrt();
            }
        }
    }
    if noise_std > 0.0 {
        let normal = Normal::new(0.0, noise_std).expect("valid noise");
        for axis in axes.iter_mut() {
            for x in axis.iter_mut() {
                *x += normal.sample(&mut rng);
            }
        }
    }
    let [x, y, z] = axes;
    Ok([
        UniformSeries::new(x, fs, 0.0)?,
        UniformSeries::new(y, fs, 0.0)?,
        UniformSeries::new(z, fs, 0.0)?,
    ])
}

/// Everything needed to synthesize one recorded night.
#[derive(Debug, Clone, PartialEq)]
pub struct NightSpec {
    pub beats: BeatParams,
    pub ppg: PpgParams,
    pub bursts: Vec<Burst>,
    pub accel_noise: f64,
}

impl NightSpec {
    /// Clean night: no noise, no motion, constant respiration.
    pub fn clean(hr_base: f64, br_min: f64, duration_s: f64) -> Self {
        Self {
            beats: BeatParams::new(hr_base, br_min / 60.0, 0.05, duration_s),
            ppg: PpgParams::new(duration_s),
            bursts: Vec::new(),
            accel_noise: 0.0,
        }
    }
}

/// A synthetic recording and its references.
#[derive(Debug, Clone)]
pub struct SynthNight {
    pub recording: Recording,
    pub truth: SynthBeats,
}

/// Green PPG from the (jittered) beats, a weaker IR channel with
/// independent noise, and acceleration with the requested bursts.
pub fn gen_night(spec: &NightSpec, seed: u64) -> Result<SynthNight> {
    let truth = gen_beat_times(&spec.beats, seed)?;
    let green = gen_ppg(&truth.beats, &spec.ppg, seed)?;
    let ir_params = PpgParams {
        amplitude: 0.6 * spec.ppg.amplitude,
        ..spec.ppg.clone()
    };
    let ir = gen_ppg(&truth.beats, &ir_params, seed.wrapping_add(1))?;
    let [x, y, z] = gen_accel(
        spec.ppg.duration_s,
        spec.ppg.fs,
        &spec.bursts,
        spec.accel_noise,
        seed,
    )?;
    let recording = Recording {
        t0: 0.0,
        fs: spec.ppg.fs,
        ppg_green: green.into_values(),
        ppg_ir: ir.into_values(),
        acc: [x.into_values(), y.into_values(), z.into_values()],
    };
    Ok(SynthNight { recording, truth })
}
