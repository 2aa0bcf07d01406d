//! Fixed-rate mono audio signals and the I/O around them.
//!
//! [`Waveform`] is the universal currency of the crate: the corpus builders
//! produce it, the generator emits it, and the transcription oracle consumes
//! it. Samples are `f32` in `[-1, 1]` at a fixed sample rate.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};

use ndarray::Array2;
use rustfft::num_complex::Complex32;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Mono audio signal with amplitudes in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f32>,
    sample_rate: u32,
}

impl Waveform {
    /// Validates the signal invariants: non-empty, finite, bounded by 1.
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::audio("sample rate must be positive"));
        }
        if samples.is_empty() {
            return Err(Error::audio("waveform must contain at least one sample"));
        }
        for (i, &s) in samples.iter().enumerate() {
            if !s.is_finite() {
                return Err(Error::audio(format!("non-finite sample at index {i}")));
            }
            if s.abs() > 1.0 {
                return Err(Error::audio(format!(
                    "sample {s} at index {i} outside [-1, 1]"
                )));
            }
        }
        Ok(Waveform {
            samples,
            sample_rate,
        })
    }

    /// Constructor for samples that are bounded by construction
    /// (tanh outputs, zero padding of an existing waveform).
    pub(crate) fn from_bounded(samples: Vec<f32>, sample_rate: u32) -> Self {
        debug_assert!(!samples.is_empty());
        debug_assert!(samples.iter().all(|s| s.is_finite() && s.abs() <= 1.0));
        Waveform {
            samples,
            sample_rate,
        }
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn peak(&self) -> f32 {
        self.samples.iter().fold(0.0f32, |m, s| m.max(s.abs()))
    }

    pub fn into_samples(self) -> Vec<f32> {
        self.samples
    }

    /// Scales so the peak amplitude is at most `target` (no-op for silence).
    pub fn peak_normalized(mut self, target: f32) -> Self {
        let peak = self.peak();
        if peak > 0.0 {
            let gain = target / peak;
            for s in &mut self.samples {
                *s = (*s * gain).clamp(-1.0, 1.0);
            }
        }
        self
    }

    /// Linear-interpolation resample to `target_rate`, preserving duration.
    pub fn resampled(&self, target_rate: u32) -> Result<Self> {
        if target_rate == 0 {
            return Err(Error::audio("target sample rate must be positive"));
        }
        if target_rate == self.sample_rate {
            return Ok(self.clone());
        }
        let ratio = self.sample_rate as f64 / target_rate as f64;
        let out_len = ((self.samples.len() as f64) / ratio).round().max(1.0) as usize;
        let mut out = Vec::with_capacity(out_len);
        for i in 0..out_len {
            let pos = i as f64 * ratio;
            let i0 = pos.floor() as usize;
            let frac = (pos - i0 as f64) as f32;
            let s0 = self.samples[i0.min(self.samples.len() - 1)];
            let s1 = self.samples[(i0 + 1).min(self.samples.len() - 1)];
            out.push((s0 + (s1 - s0) * frac).clamp(-1.0, 1.0));
        }
        Ok(Waveform::from_bounded(out, target_rate))
    }
}

/// Writes 16-bit PCM mono WAV. Encoding is fixed so identical waveforms
/// produce byte-identical files.
pub fn write_wav(path: &Path, w: &Waveform) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: w.sample_rate(),
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec)?;
    for &s in w.samples() {
        writer.write_sample((s * 32767.0).round().clamp(-32768.0, 32767.0) as i16)?;
    }
    writer.finalize()?;
    Ok(())
}

/// Reads a mono 16-bit or float WAV file. Multi-channel input is rejected.
pub fn read_wav(path: &Path) -> Result<Waveform> {
    let mut reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::audio(format!(
            "{} has {} channels, expected mono",
            path.display(),
            spec.channels
        )));
    }
    let samples: Vec<f32> = match spec.sample_format {
        hound::SampleFormat::Int => {
            let scale = 1.0 / (1i64 << (spec.bits_per_sample - 1)) as f32;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| (v as f32 * scale).clamp(-1.0, 1.0)))
                .collect::<std::result::Result<_, _>>()?
        }
        hound::SampleFormat::Float => reader
            .samples::<f32>()
            .map(|s| s.map(|v| v.clamp(-1.0, 1.0)))
            .collect::<std::result::Result<_, _>>()?,
    };
    Waveform::new(samples, spec.sample_rate)
}

fn fft_for(len: usize) -> Arc<dyn Fft<f32>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<dyn Fft<f32>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("fft cache poisoned");
    map.entry(len)
        .or_insert_with(|| FftPlanner::new().plan_fft_forward(len))
        .clone()
}

/// Short-time log-magnitude spectrogram.
///
/// Hann-windowed frames of `frame_len` samples every `hop` samples; the
/// result is `(frame_len / 2 + 1)` frequency bins by `n_frames` columns of
/// dB magnitudes (floored at -80 dB relative to 1.0).
pub fn log_spectrogram(samples: &[f32], frame_len: usize, hop: usize) -> Array2<f32> {
    assert!(frame_len > 0 && hop > 0, "frame and hop must be positive");
    let n_bins = frame_len / 2 + 1;
    if samples.len() < frame_len {
        return Array2::zeros((n_bins, 0));
    }
    let n_frames = (samples.len() - frame_len) / hop + 1;
    let fft = fft_for(frame_len);
    let window: Vec<f32> = (0..frame_len)
        .map(|i| {
            let x = std::f32::consts::TAU * i as f32 / frame_len as f32;
            0.5 * (1.0 - x.cos())
        })
        .collect();

    let mut spec = Array2::zeros((n_bins, n_frames));
    let mut buf = vec![Complex32::default(); frame_len];
    for t in 0..n_frames {
        let start = t * hop;
        for (i, b) in buf.iter_mut().enumerate() {
            *b = Complex32::new(samples[start + i] * window[i], 0.0);
        }
        fft.process(&mut buf);
        for (k, b) in buf.iter().take(n_bins).enumerate() {
            let mag = b.norm() / frame_len as f32;
            spec[(k, t)] = 20.0 * mag.max(1e-4).log10();
        }
    }
    spec
}
