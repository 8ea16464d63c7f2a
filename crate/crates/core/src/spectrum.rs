//! STFT magnitude analysis and the dB (log-power) transform the loss is defined on.

use std::f64::consts::{LN_10, PI};

use ndarray::{Array2, Zip};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::audio_io::AudioClip;
use crate::error::{Error, Result};

/// Offset added to magnitudes before taking the logarithm.
pub const LOG_EPSILON: f64 = 1e-8;
/// Default lower clamp of the log-power transform.
pub const DEFAULT_FLOOR_DB: f64 = -80.0;

const DB_PER_NEPER: f64 = 20.0 / LN_10;

/// STFT analysis parameters. The FFT size always equals the window length.
#[derive(Debug, Clone, PartialEq)]
pub struct StftConfig {
    window_length: usize,
    hop_length: usize,
    window: Vec<f64>,
}

impl StftConfig {
    /// Periodic Hann window of `window_length` samples advanced by `hop_length`.
    pub fn new(window_length: usize, hop_length: usize) -> Result<Self> {
        if window_length < 2 {
            return Err(Error::InvalidStftConfig(format!(
                "window length {window_length} must be at least 2"
            )));
        }
        if hop_length == 0 || hop_length > window_length {
            return Err(Error::InvalidStftConfig(format!(
                "hop length {hop_length} must lie in 1..={window_length}"
            )));
        }
        let n = window_length as f64;
        let window = (0..window_length)
            .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n).cos())
            .collect();
        Ok(Self {
            window_length,
            hop_length,
            window,
        })
    }

    pub fn window_length(&self) -> usize {
        self.window_length
    }

    pub fn hop_length(&self) -> usize {
        self.hop_length
    }

    pub fn fft_size(&self) -> usize {
        self.window_length
    }

    pub fn window(&self) -> &[f64] {
        &self.window
    }

    /// One-sided bin count, `fft_size / 2 + 1`.
    pub fn num_bins(&self) -> usize {
        self.fft_size() / 2 + 1
    }

    /// Frames produced from `len` samples without center padding.
    pub fn num_frames(&self, len: usize) -> usize {
        if len < self.window_length {
            0
        } else {
            (len - self.window_length) / self.hop_length + 1
        }
    }
}

impl Default for StftConfig {
    /// 512-sample periodic Hann, hop 256 (32 ms / 16 ms at 16 kHz).
    fn default() -> Self {
        Self::new(512, 256).expect("default stft config is valid")
    }
}

/// Shared read access to an F x T spectral matrix.
pub trait SpectralMatrix {
    fn values(&self) -> &Array2<f64>;

    /// (bins, frames)
    fn shape(&self) -> (usize, usize) {
        self.values().dim()
    }
}

/// Linear STFT magnitudes, bins along axis 0 and frames along axis 1.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnitudeSpectrum {
    values: Array2<f64>,
    sample_rate: u32,
    fft_size: usize,
}

impl MagnitudeSpectrum {
    pub fn new(values: Array2<f64>, sample_rate: u32, fft_size: usize) -> Result<Self> {
        if values.nrows() != fft_size / 2 + 1 {
            return Err(Error::InvalidSpectrum(format!(
                "{} bins but fft size {} implies {}",
                values.nrows(),
                fft_size,
                fft_size / 2 + 1
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidSpectrum(
                "magnitudes must be finite and non-negative".into(),
            ));
        }
        Ok(Self {
            values,
            sample_rate,
            fft_size,
        })
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn freq_bin_hz(&self) -> f64 {
        f64::from(self.sample_rate) / self.fft_size as f64
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }
}

impl SpectralMatrix for MagnitudeSpectrum {
    fn values(&self) -> &Array2<f64> {
        &self.values
    }
}

/// Magnitudes in dB, clamped from below at `floor_db`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogPowerSpectrum {
    values: Array2<f64>,
    floor_db: f64,
}

impl LogPowerSpectrum {
    /// Wrap precomputed dB values; every entry must be finite and at or above the floor.
    pub fn new(values: Array2<f64>, floor_db: f64) -> Result<Self> {
        if !floor_db.is_finite() {
            return Err(Error::InvalidSpectrum("floor must be finite".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < floor_db) {
            return Err(Error::InvalidSpectrum(format!(
                "log-power values must be finite and >= {floor_db} dB"
            )));
        }
        Ok(Self { values, floor_db })
    }

    pub fn floor_db(&self) -> f64 {
        self.floor_db
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }
}

impl SpectralMatrix for LogPowerSpectrum {
    fn values(&self) -> &Array2<f64> {
        &self.values
    }
}

/// Partial derivatives of a scalar loss with respect to a spectral matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    values: Array2<f64>,
}

impl GradientField {
    pub fn new(values: Array2<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(bins: usize, frames: usize) -> Self {
        Self {
            values: Array2::zeros((bins, frames)),
        }
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array2<f64> {
        &mut self.values
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.dim()
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }
}

pub(crate) fn check_shapes(left: (usize, usize), right: (usize, usize)) -> Result<()> {
    if left != right {
        return Err(Error::ShapeMismatch { left, right });
    }
    Ok(())
}

/// One-sided STFT magnitudes. Frame `t` covers samples `[t*hop, t*hop + window)`.
pub fn stft_magnitude(clip: &AudioClip, cfg: &StftConfig) -> Result<MagnitudeSpectrum> {
    let n = cfg.fft_size();
    if clip.len() < n {
        return Err(Error::ClipTooShort {
            len: clip.len(),
            window: n,
        });
    }
    let frames = cfg.num_frames(clip.len());
    let bins = cfg.num_bins();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let mut buffer = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut values = Array2::zeros((bins, frames));
    let samples = clip.samples();
    for t in 0..frames {
        let frame = &samples[t * cfg.hop_length()..t * cfg.hop_length() + n];
        for ((slot, &x), &w) in buffer.iter_mut().zip(frame).zip(cfg.window()) {
            *slot = Complex64::new(x * w, 0.0);
        }
        fft.process_with_scratch(&mut buffer, &mut scratch);
        for (f, c) in buffer.iter().take(bins).enumerate() {
            values[[f, t]] = c.norm();
        }
    }
    MagnitudeSpectrum::new(values, clip.sample_rate(), n)
}

/// `max(20 log10(|M| + eps), floor_db)` elementwise.
pub fn to_log_power(mag: &MagnitudeSpectrum, floor_db: f64) -> LogPowerSpectrum {
    assert!(floor_db.is_finite(), "floor_db must be finite");
    let values = mag
        .values()
        .mapv(|m| (20.0 * (m + LOG_EPSILON).log10()).max(floor_db));
    LogPowerSpectrum { values, floor_db }
}

/// Pull a gradient with respect to log-power back to linear magnitudes.
///
/// Entries whose dB value is clamped at the floor receive zero gradient.
pub fn log_power_gradient_chain(
    mag: &MagnitudeSpectrum,
    grad_logpower: &GradientField,
    floor_db: f64,
) -> Result<GradientField> {
    check_shapes(mag.shape(), grad_logpower.shape())?;
    let mut out = Array2::zeros(mag.shape());
    Zip::from(&mut out)
        .and(mag.values())
        .and(grad_logpower.values())
        .for_each(|o, &m, &g| {
            let shifted = m + LOG_EPSILON;
            if 20.0 * shifted.log10() > floor_db {
                *o = g * DB_PER_NEPER / shifted;
            }
        });
    Ok(GradientField::new(out))
}
