//! Weighted sub-band loss, its gradient, and the baseline objectives.
//!
//! The main objective is
//!
//! ```text
//! L = sum_i w[i] * mean_{f in band i, t} (P(f,t) - P_hat(f,t))^2
//! ```
//!
//! over log-power spectra `P` (target) and `P_hat` (estimate). Sums run
//! band-major, then frame, then bin, so results are bit-reproducible.
//!
//! [`LossEngine`] bundles a [`LossConfig`] with the partition and weights it
//! implies and covers the ablation axes: error domain (log-power or linear
//! magnitude), and weighting (equal-loudness, uniform, or per-bin without
//! bands).

use std::ops::Range;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::audio_io::AudioClip;
use crate::error::{Error, Result};
use crate::melbands::{build_partition, BandPartition, PartitionConfig};
use crate::spectrum::{
    check_shapes, log_power_gradient_chain, stft_magnitude, to_log_power, GradientField,
    MagnitudeSpectrum, SpectralMatrix, StftConfig, DEFAULT_FLOOR_DB,
};
use crate::weights::{compute_weights, per_bin_weights, LoudnessContour, WeightVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossDomain {
    LogPower,
    /// Band errors on linear magnitudes, weights unchanged.
    LinearMagnitude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    EqualLoudness,
    Uniform,
    /// Interpolated contour weight on every bin, no sub-bands.
    PerBin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub domain: LossDomain,
    pub weighting: Weighting,
    /// Required for banded weightings, must be `None` for [`Weighting::PerBin`].
    pub partition: Option<PartitionConfig>,
    pub floor_db: f64,
}

impl LossConfig {
    /// Log-power, equal-loudness weights over 25 half-overlapping Mel bands.
    pub fn for_stft(sample_rate: u32, fft_size: usize) -> Self {
        Self {
            domain: LossDomain::LogPower,
            weighting: Weighting::EqualLoudness,
            partition: Some(PartitionConfig::for_stft(sample_rate, fft_size)),
            floor_db: DEFAULT_FLOOR_DB,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.floor_db.is_finite() {
            return Err(Error::InvalidLossConfig("floor_db must be finite".into()));
        }
        match (self.weighting, &self.partition) {
            (Weighting::PerBin, Some(_)) => Err(Error::InvalidLossConfig(
                "per-bin weighting does not use a band partition".into(),
            )),
            (Weighting::EqualLoudness | Weighting::Uniform, None) => Err(
                Error::InvalidLossConfig("banded weighting needs a partition".into()),
            ),
            (_, Some(p)) => p.validate(),
            (_, None) => Ok(()),
        }
    }
}

impl Default for LossConfig {
    fn default() -> Self {
        Self::for_stft(crate::PIPELINE_SAMPLE_RATE, 512)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandLoss {
    #[serde(rename = "i")]
    pub index: usize,
    pub loss: f64,
    pub weight: f64,
    pub center_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossReport {
    pub total: f64,
    pub bands: Vec<BandLoss>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<LossConfig>,
}

fn check_pair<S: SpectralMatrix>(est: &S, reference: &S) -> Result<(usize, usize)> {
    check_shapes(est.shape(), reference.shape())?;
    Ok(est.shape())
}

fn check_bins(shape: (usize, usize), partition: &BandPartition) -> Result<()> {
    if shape.0 != partition.num_bins() {
        return Err(Error::ShapeMismatch {
            left: shape,
            right: (partition.num_bins(), shape.1),
        });
    }
    Ok(())
}

/// Sum of squared differences over `bins` x all frames, frame-major.
fn band_sum_sq(est: &Array2<f64>, reference: &Array2<f64>, bins: Range<usize>) -> f64 {
    let mut acc = 0.0;
    for t in 0..est.ncols() {
        for f in bins.clone() {
            let d = reference[[f, t]] - est[[f, t]];
            acc += d * d;
        }
    }
    acc
}

/// Mean squared difference over one band and all frames.
pub fn subband_loss<S: SpectralMatrix>(est: &S, reference: &S, band: Range<usize>) -> Result<f64> {
    let (bins, frames) = check_pair(est, reference)?;
    if band.is_empty() || frames == 0 {
        return Err(Error::EmptyBand);
    }
    if band.end > bins {
        return Err(Error::BinOutOfRange {
            bin: band.end - 1,
            bins,
        });
    }
    let count = (band.len() * frames) as f64;
    Ok(band_sum_sq(est.values(), reference.values(), band) / count)
}

fn check_weights(partition: &BandPartition, weights: &WeightVector) -> Result<()> {
    if weights.len() != partition.num_bands() {
        return Err(Error::WeightCountMismatch {
            expected: partition.num_bands(),
            found: weights.len(),
        });
    }
    Ok(())
}

/// Weighted sum of per-band mean squared errors.
pub fn loud_loss<S: SpectralMatrix>(
    est: &S,
    reference: &S,
    partition: &BandPartition,
    weights: &WeightVector,
) -> Result<LossReport> {
    let shape = check_pair(est, reference)?;
    check_bins(shape, partition)?;
    check_weights(partition, weights)?;
    let mut total = 0.0;
    let mut bands = Vec::with_capacity(partition.num_bands());
    for (index, (band, &weight)) in partition.bands().iter().zip(weights.values()).enumerate() {
        let loss = subband_loss(est, reference, band.bins())?;
        total += weight * loss;
        bands.push(BandLoss {
            index,
            loss,
            weight,
            center_hz: band.center_hz,
        });
    }
    Ok(LossReport {
        total,
        bands,
        config: None,
    })
}

/// Gradient of [`loud_loss`] with respect to `est`.
///
/// Bins shared by two bands receive both contributions.
pub fn loud_loss_gradient<S: SpectralMatrix>(
    est: &S,
    reference: &S,
    partition: &BandPartition,
    weights: &WeightVector,
) -> Result<GradientField> {
    let (bins, frames) = check_pair(est, reference)?;
    check_bins((bins, frames), partition)?;
    check_weights(partition, weights)?;
    if frames == 0 {
        return Err(Error::EmptyBand);
    }
    let (e, r) = (est.values(), reference.values());
    let mut grad = GradientField::zeros(bins, frames);
    let g = grad.values_mut();
    for (band, &w) in partition.bands().iter().zip(weights.values()) {
        let scale = 2.0 * w / (band.width() * frames) as f64;
        for t in 0..frames {
            for f in band.bins() {
                g[[f, t]] += scale * (e[[f, t]] - r[[f, t]]);
            }
        }
    }
    Ok(grad)
}

fn check_bin_weights(bins: usize, weights: &[f64]) -> Result<()> {
    if weights.len() != bins {
        return Err(Error::WeightCountMismatch {
            expected: bins,
            found: weights.len(),
        });
    }
    Ok(())
}

/// `sum_{f,t} v[f] (P - P_hat)^2 / (F T)`.
pub fn per_bin_loss<S: SpectralMatrix>(est: &S, reference: &S, weights: &[f64]) -> Result<f64> {
    let (bins, frames) = check_pair(est, reference)?;
    check_bin_weights(bins, weights)?;
    if bins * frames == 0 {
        return Err(Error::EmptyBand);
    }
    let (e, r) = (est.values(), reference.values());
    let mut acc = 0.0;
    for t in 0..frames {
        for (f, &v) in weights.iter().enumerate() {
            let d = r[[f, t]] - e[[f, t]];
            acc += v * d * d;
        }
    }
    Ok(acc / (bins * frames) as f64)
}

pub fn per_bin_loss_gradient<S: SpectralMatrix>(
    est: &S,
    reference: &S,
    weights: &[f64],
) -> Result<GradientField> {
    let (bins, frames) = check_pair(est, reference)?;
    check_bin_weights(bins, weights)?;
    let scale = 2.0 / (bins * frames) as f64;
    let (e, r) = (est.values(), reference.values());
    let mut grad = GradientField::zeros(bins, frames);
    let g = grad.values_mut();
    for t in 0..frames {
        for (f, &v) in weights.iter().enumerate() {
            g[[f, t]] = scale * v * (e[[f, t]] - r[[f, t]]);
        }
    }
    Ok(grad)
}

fn global_mse(est: &Array2<f64>, reference: &Array2<f64>) -> Result<f64> {
    check_shapes(est.dim(), reference.dim())?;
    if est.is_empty() {
        return Err(Error::EmptyBand);
    }
    Ok(band_sum_sq(est, reference, 0..est.nrows()) / est.len() as f64)
}

/// Mean over all entries of the squared difference.
pub fn mse_loss<S: SpectralMatrix>(est: &S, reference: &S) -> Result<f64> {
    global_mse(est.values(), reference.values())
}

/// Gradient of [`mse_loss`] with respect to `est`.
pub fn mse_loss_gradient<S: SpectralMatrix>(est: &S, reference: &S) -> Result<GradientField> {
    let (bins, frames) = check_pair(est, reference)?;
    let scale = 2.0 / (bins * frames) as f64;
    Ok(GradientField::new(
        (est.values() - reference.values()).mapv(|d| scale * d),
    ))
}

/// MSE between magnitudes raised to `alpha`.
pub fn compressed_loss(
    est: &MagnitudeSpectrum,
    reference: &MagnitudeSpectrum,
    alpha: f64,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    check_pair(est, reference)?;
    global_mse(
        &est.values().mapv(|m| m.powf(alpha)),
        &reference.values().mapv(|m| m.powf(alpha)),
    )
}

#[derive(Debug, Clone)]
enum Scheme {
    Banded {
        partition: BandPartition,
        weights: WeightVector,
    },
    PerBin {
        weights: Vec<f64>,
    },
}

/// A configured loss over magnitude spectra of one STFT geometry.
#[derive(Debug, Clone)]
pub struct LossEngine {
    config: LossConfig,
    sample_rate: u32,
    fft_size: usize,
    scheme: Scheme,
}

impl LossEngine {
    pub fn new(config: LossConfig, sample_rate: u32, fft_size: usize) -> Result<Self> {
        Self::with_contour(config, sample_rate, fft_size, &LoudnessContour::forty_phon())
    }

    pub fn with_contour(
        config: LossConfig,
        sample_rate: u32,
        fft_size: usize,
        contour: &LoudnessContour,
    ) -> Result<Self> {
        config.validate()?;
        let scheme = match &config.partition {
            Some(pcfg) => {
                if pcfg.sample_rate != sample_rate || pcfg.fft_size != fft_size {
                    return Err(Error::InvalidLossConfig(format!(
                        "partition built for {} Hz / {} points, engine uses {} Hz / {} points",
                        pcfg.sample_rate, pcfg.fft_size, sample_rate, fft_size
                    )));
                }
                let partition = build_partition(pcfg)?;
                let weights = match config.weighting {
                    Weighting::Uniform => WeightVector::uniform(partition.num_bands()),
                    _ => compute_weights(contour, &partition),
                };
                Scheme::Banded { partition, weights }
            }
            None => Scheme::PerBin {
                weights: per_bin_weights(contour, fft_size / 2 + 1, sample_rate, fft_size),
            },
        };
        Ok(Self {
            config,
            sample_rate,
            fft_size,
            scheme,
        })
    }

    pub fn config(&self) -> &LossConfig {
        &self.config
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn num_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn partition(&self) -> Option<&BandPartition> {
        match &self.scheme {
            Scheme::Banded { partition, .. } => Some(partition),
            Scheme::PerBin { .. } => None,
        }
    }

    pub fn band_weights(&self) -> Option<&WeightVector> {
        match &self.scheme {
            Scheme::Banded { weights, .. } => Some(weights),
            Scheme::PerBin { .. } => None,
        }
    }

    pub fn bin_weights(&self) -> Option<&[f64]> {
        match &self.scheme {
            Scheme::PerBin { weights } => Some(weights),
            Scheme::Banded { .. } => None,
        }
    }

    /// Per-bin coefficients `c[f]` such that the loss equals
    /// `sum_f c[f] * sum_t (P(f,t) - P_hat(f,t))^2` for `frames` frames.
    pub fn bin_coefficients(&self, frames: usize) -> Vec<f64> {
        match &self.scheme {
            Scheme::Banded { partition, weights } => {
                let mut c = vec![0.0; self.num_bins()];
                for (band, &w) in partition.bands().iter().zip(weights.values()) {
                    for f in band.bins() {
                        c[f] += w / (band.width() * frames) as f64;
                    }
                }
                c
            }
            Scheme::PerBin { weights } => {
                let n = (self.num_bins() * frames) as f64;
                weights.iter().map(|v| v / n).collect()
            }
        }
    }

    fn check_geometry(&self, spec: &MagnitudeSpectrum) -> Result<()> {
        if spec.shape().0 != self.num_bins() {
            return Err(Error::ShapeMismatch {
                left: spec.shape(),
                right: (self.num_bins(), spec.shape().1),
            });
        }
        Ok(())
    }

    fn report_on<S: SpectralMatrix>(&self, est: &S, reference: &S) -> Result<LossReport> {
        let mut report = match &self.scheme {
            Scheme::Banded { partition, weights } => loud_loss(est, reference, partition, weights)?,
            Scheme::PerBin { weights } => LossReport {
                total: per_bin_loss(est, reference, weights)?,
                bands: Vec::new(),
                config: None,
            },
        };
        report.config = Some(self.config.clone());
        Ok(report)
    }

    fn gradient_on<S: SpectralMatrix>(&self, est: &S, reference: &S) -> Result<GradientField> {
        match &self.scheme {
            Scheme::Banded { partition, weights } => {
                loud_loss_gradient(est, reference, partition, weights)
            }
            Scheme::PerBin { weights } => per_bin_loss_gradient(est, reference, weights),
        }
    }

    /// Loss between an estimated and a target magnitude spectrogram.
    pub fn loss(&self, est: &MagnitudeSpectrum, reference: &MagnitudeSpectrum) -> Result<LossReport> {
        self.check_geometry(est)?;
        check_pair(est, reference)?;
        match self.config.domain {
            LossDomain::LogPower => {
                let floor = self.config.floor_db;
                self.report_on(&to_log_power(est, floor), &to_log_power(reference, floor))
            }
            LossDomain::LinearMagnitude => self.report_on(est, reference),
        }
    }

    /// Gradient of [`LossEngine::loss`] with respect to the estimated magnitudes.
    pub fn gradient(
        &self,
        est: &MagnitudeSpectrum,
        reference: &MagnitudeSpectrum,
    ) -> Result<GradientField> {
        self.check_geometry(est)?;
        check_pair(est, reference)?;
        match self.config.domain {
            LossDomain::LogPower => {
                let floor = self.config.floor_db;
                let upstream =
                    self.gradient_on(&to_log_power(est, floor), &to_log_power(reference, floor))?;
                log_power_gradient_chain(est, &upstream, floor)
            }
            LossDomain::LinearMagnitude => self.gradient_on(est, reference),
        }
    }

    /// STFT both clips and score them.
    pub fn evaluate(
        &self,
        est_clip: &AudioClip,
        ref_clip: &AudioClip,
        stft: &StftConfig,
    ) -> Result<LossReport> {
        check_clip_pair(est_clip, ref_clip)?;
        if stft.fft_size() != self.fft_size || est_clip.sample_rate() != self.sample_rate {
            return Err(Error::InvalidLossConfig(format!(
                "engine expects {} Hz / {} points, got {} Hz / {} points",
                self.sample_rate,
                self.fft_size,
                est_clip.sample_rate(),
                stft.fft_size()
            )));
        }
        let est = stft_magnitude(est_clip, stft)?;
        let reference = stft_magnitude(ref_clip, stft)?;
        self.loss(&est, &reference)
    }
}

pub(crate) fn check_clip_pair(est: &AudioClip, reference: &AudioClip) -> Result<()> {
    if est.len() != reference.len() {
        return Err(Error::LengthMismatch {
            est: est.len(),
            reference: reference.len(),
        });
    }
    if est.sample_rate() != reference.sample_rate() {
        return Err(Error::RateMismatch {
            est: est.sample_rate(),
            reference: reference.sample_rate(),
        });
    }
    Ok(())
}

/// End-to-end score of two clips: STFT, optional dB transform, bands, weights, loss.
pub fn evaluate(
    est_clip: &AudioClip,
    ref_clip: &AudioClip,
    cfg: &LossConfig,
    stft: &StftConfig,
) -> Result<LossReport> {
    check_clip_pair(est_clip, ref_clip)?;
    let engine = LossEngine::new(cfg.clone(), est_clip.sample_rate(), stft.fft_size())?;
    engine.evaluate(est_clip, ref_clip, stft)
}
