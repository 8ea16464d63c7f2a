//! Perceptually weighted spectral loss for speech enhancement.
//!
//! The loss compares an enhanced magnitude spectrogram against a clean
//! target in the log-power (dB) domain. The spectrum is split into
//! Mel-spaced sub-bands with 50% overlap, a mean squared error is taken in
//! each band, and the band errors are summed with weights derived from the
//! 40-phon equal-loudness contour, so bands where hearing is most sensitive
//! dominate the objective.
//!
//! Pipeline:
//!
//! ```text
//! AudioClip --stft_magnitude--> MagnitudeSpectrum --to_log_power--> LogPowerSpectrum
//!                                                                        |
//!   BandPartition (melbands) + WeightVector (weights) --> loud_loss -> LossReport
//! ```
//!
//! Every stage has an analytic gradient so the loss can drive a
//! magnitude-domain model; see [`trainer_demo`] for a small gain-learning
//! example.

pub mod audio_io;
pub mod cli;
pub mod error;
pub mod loss_engine;
pub mod melbands;
pub mod metrics;
pub mod spectrum;
pub mod trainer_demo;
pub mod weights;

pub use audio_io::{load_wav, save_wav, AudioClip, PIPELINE_SAMPLE_RATE};
pub use error::{Error, Result};
pub use loss_engine::{
    compressed_loss, evaluate, loud_loss, loud_loss_gradient, mse_loss, subband_loss, BandLoss,
    LossConfig, LossDomain, LossEngine, LossReport, Weighting,
};
pub use melbands::{
    build_partition, hz_to_mel, mel_to_hz, Band, BandOverlap, BandPartition, BandScale,
    PartitionConfig,
};
pub use metrics::{si_snr, snr, Decibels, MetricReport};
pub use spectrum::{
    log_power_gradient_chain, stft_magnitude, to_log_power, GradientField, LogPowerSpectrum,
    MagnitudeSpectrum, SpectralMatrix, StftConfig, DEFAULT_FLOOR_DB, LOG_EPSILON,
};
pub use weights::{compute_weights, per_bin_weights, LoudnessContour, WeightVector};
