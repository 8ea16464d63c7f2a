//! Gain-learning demonstration of where an objective spends model capacity.
//!
//! The model is one non-negative gain per frequency bin applied to a noisy
//! magnitude spectrogram. It cannot remove noise that varies across frames,
//! so every objective settles on a compromise; comparing the per-band
//! log-power residuals after training under the weighted sub-band loss and
//! under plain magnitude MSE shows which bands each objective favours.

use std::f64::consts::LN_10;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::loss_engine::{mse_loss, mse_loss_gradient, LossConfig, LossDomain, LossEngine};
use crate::spectrum::{MagnitudeSpectrum, SpectralMatrix, LOG_EPSILON};

const SAMPLE_RATE: u32 = 16_000;
const FFT_SIZE: usize = 512;

/// Per-bin multiplicative gain shared across frames.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainModel {
    pub gains: Vec<f64>,
}

impl GainModel {
    pub fn ones(bins: usize) -> Self {
        Self {
            gains: vec![1.0; bins],
        }
    }

    /// `gains[f] * noisy[f, t]`.
    pub fn apply(&self, noisy: &MagnitudeSpectrum) -> Result<MagnitudeSpectrum> {
        let (bins, frames) = noisy.shape();
        if self.gains.len() != bins {
            return Err(Error::ShapeMismatch {
                left: (self.gains.len(), frames),
                right: (bins, frames),
            });
        }
        let values = Array2::from_shape_fn((bins, frames), |(f, t)| {
            self.gains[f] * noisy.values()[[f, t]]
        });
        MagnitudeSpectrum::new(values, noisy.sample_rate(), noisy.fft_size())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPair {
    pub noisy: MagnitudeSpectrum,
    pub clean: MagnitudeSpectrum,
}

impl SpectralPair {
    /// Noise-free pair: `noisy == clean`.
    pub fn clean_only(clean: MagnitudeSpectrum) -> Self {
        Self {
            noisy: clean.clone(),
            clean,
        }
    }
}

/// Deterministic speech-like magnitude spectra plus flat additive noise.
///
/// Each frame is a harmonic comb at a random pitch in 90..260 Hz under a
/// spectral tilt of roughly -6 dB per octave above 500 Hz. Noise magnitudes
/// are uniform around a level that does not depend on frequency.
pub fn synth_dataset(seed: u64, n_frames: usize) -> Result<SpectralPair> {
    if n_frames == 0 {
        return Err(Error::InvalidHyperparameter("n_frames must be >= 1".into()));
    }
    let bins = FFT_SIZE / 2 + 1;
    let bin_hz = f64::from(SAMPLE_RATE) / FFT_SIZE as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut clean = Array2::zeros((bins, n_frames));
    let mut noise = Array2::zeros((bins, n_frames));
    for t in 0..n_frames {
        let pitch = rng.random_range(90.0..260.0);
        let level = rng.random_range(0.5..1.5);
        for f in 0..bins {
            let hz = f as f64 * bin_hz;
            let tilt = 1.0 / (1.0 + hz / 500.0);
            let offset = hz / pitch - (hz / pitch).round();
            let dist = offset.abs() * pitch;
            let comb = 0.3 + 0.7 * (-0.5 * (dist / 30.0).powi(2)).exp();
            clean[[f, t]] = level * tilt * comb;
            noise[[f, t]] = 0.02 * rng.random_range(0.5..1.5);
        }
    }
    let noisy = &clean + &noise;
    Ok(SpectralPair {
        noisy: MagnitudeSpectrum::new(noisy, SAMPLE_RATE, FFT_SIZE)?,
        clean: MagnitudeSpectrum::new(clean, SAMPLE_RATE, FFT_SIZE)?,
    })
}

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Objective {
    /// A configured sub-band loss (any weighting or domain).
    Loud(LossEngine),
    /// Global mean squared error on linear magnitudes.
    Mse,
}

impl Objective {
    pub fn loud_default() -> Self {
        Objective::Loud(
            LossEngine::new(LossConfig::for_stft(SAMPLE_RATE, FFT_SIZE), SAMPLE_RATE, FFT_SIZE)
                .expect("default loss config is valid"),
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            Objective::Loud(_) => "loud",
            Objective::Mse => "mse",
        }
    }
}

pub fn objective_loss(model: &GainModel, data: &SpectralPair, objective: &Objective) -> Result<f64> {
    let est = model.apply(&data.noisy)?;
    match objective {
        Objective::Loud(engine) => Ok(engine.loss(&est, &data.clean)?.total),
        Objective::Mse => mse_loss(&est, &data.clean),
    }
}

/// `dL/dgain[f] = sum_t dL/dM_hat[f, t] * noisy[f, t]`.
pub fn gain_gradient(model: &GainModel, data: &SpectralPair, objective: &Objective) -> Result<Vec<f64>> {
    let est = model.apply(&data.noisy)?;
    let grad = match objective {
        Objective::Loud(engine) => engine.gradient(&est, &data.clean)?,
        Objective::Mse => mse_loss_gradient(&est, &data.clean)?,
    };
    let noisy = data.noisy.values();
    Ok(grad
        .values()
        .outer_iter()
        .zip(noisy.outer_iter())
        .map(|(g, n)| g.iter().zip(n.iter()).map(|(a, b)| a * b).sum())
        .collect())
}

/// Largest per-bin second-derivative bound of the objective at `model`.
///
/// The loss is separable across bins, so its Hessian in the gains is
/// diagonal; a step size of `1 / bound` is locally safe.
pub fn curvature_bound(model: &GainModel, data: &SpectralPair, objective: &Objective) -> Result<f64> {
    let (bins, frames) = data.noisy.shape();
    let noisy = data.noisy.values();
    let clean = data.clean.values();
    let (coeffs, log_domain, floor) = match objective {
        Objective::Loud(engine) => (
            engine.bin_coefficients(frames),
            engine.config().domain == LossDomain::LogPower,
            engine.config().floor_db,
        ),
        Objective::Mse => (vec![1.0 / (bins * frames) as f64; bins], false, 0.0),
    };
    let a = 20.0 / LN_10;
    let mut bound: f64 = 0.0;
    for f in 0..bins {
        let g = model.gains.get(f).copied().ok_or(Error::ShapeMismatch {
            left: (model.gains.len(), frames),
            right: (bins, frames),
        })?;
        let mut h = 0.0;
        for t in 0..frames {
            let n = noisy[[f, t]];
            if log_domain {
                let m = g * n + LOG_EPSILON;
                let est_db = (20.0 * m.log10()).max(floor);
                let ref_db = (20.0 * (clean[[f, t]] + LOG_EPSILON).log10()).max(floor);
                h += 2.0 * a * a * n * n / (m * m) * (1.0 + (est_db - ref_db).abs() / a);
            } else {
                h += 2.0 * n * n;
            }
        }
        bound = bound.max(coeffs[f] * h);
    }
    Ok(bound)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainRun {
    pub objective: String,
    /// Loss before training followed by the loss after each step.
    pub loss_curve: Vec<f64>,
    pub final_gains: GainModel,
    /// Log-power band MSE of the final estimate on the default partition.
    pub per_band_residuals: Vec<f64>,
}

/// Projected gradient descent on the gains: `g <- max(0, g - lr * dL/dg)`.
pub fn train(
    model: GainModel,
    data: &SpectralPair,
    objective: &Objective,
    steps: usize,
    lr: f64,
) -> Result<TrainRun> {
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::InvalidHyperparameter(format!("lr must be positive, got {lr}")));
    }
    if steps == 0 {
        return Err(Error::InvalidHyperparameter("steps must be >= 1".into()));
    }
    let mut model = model;
    let mut loss_curve = Vec::with_capacity(steps + 1);
    loss_curve.push(objective_loss(&model, data, objective)?);
    for step in 1..=steps {
        let grad = gain_gradient(&model, data, objective)?;
        for (g, d) in model.gains.iter_mut().zip(&grad) {
            *g = (*g - lr * d).max(0.0);
        }
        let loss = objective_loss(&model, data, objective)?;
        if !loss.is_finite() {
            return Err(Error::DivergenceDetected { step });
        }
        loss_curve.push(loss);
    }
    let per_band_residuals = band_residuals(&model, data)?;
    Ok(TrainRun {
        objective: objective.name().to_string(),
        loss_curve,
        final_gains: model,
        per_band_residuals,
    })
}

fn residual_engine(data: &SpectralPair) -> Result<LossEngine> {
    let (rate, fft) = (data.noisy.sample_rate(), data.noisy.fft_size());
    LossEngine::new(LossConfig::for_stft(rate, fft), rate, fft)
}

/// Final log-power band MSE of the model's estimate against the clean target.
pub fn band_residuals(model: &GainModel, data: &SpectralPair) -> Result<Vec<f64>> {
    let engine = residual_engine(data)?;
    let est = model.apply(&data.noisy)?;
    Ok(engine
        .loss(&est, &data.clean)?
        .bands
        .iter()
        .map(|b| b.loss)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareConfig {
    pub n_frames: usize,
    pub steps: usize,
    pub lr_loud: f64,
    pub lr_mse: f64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            n_frames: 32,
            steps: 300,
            lr_loud: 2e-3,
            lr_mse: 50.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub seed: u64,
    pub config: CompareConfig,
    pub band_weights: Vec<f64>,
    pub band_centers_hz: Vec<f64>,
    /// Index of the largest band weight (first on ties).
    pub max_weight_band: usize,
    pub loud: TrainRun,
    pub mse: TrainRun,
    /// Loud-loss residual over MSE residual in the maximum-weight band.
    pub residual_ratio: f64,
}

impl Comparison {
    /// CSV with one row per band: band,center_hz,weight,loud_residual,mse_residual.
    pub fn residual_csv(&self) -> String {
        let mut out = String::from("band,center_hz,weight,loud_residual,mse_residual\n");
        for i in 0..self.band_weights.len() {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.9e},{:.9e}\n",
                i,
                self.band_centers_hz[i],
                self.band_weights[i],
                self.loud.per_band_residuals[i],
                self.mse.per_band_residuals[i]
            ));
        }
        out
    }
}

/// Train identical unit-gain models under the default weighted loss and magnitude MSE.
pub fn compare_objectives(seed: u64, cfg: &CompareConfig) -> Result<Comparison> {
    let data = synth_dataset(seed, cfg.n_frames)?;
    compare_on(seed, &data, cfg)
}

pub fn compare_on(seed: u64, data: &SpectralPair, cfg: &CompareConfig) -> Result<Comparison> {
    let engine = residual_engine(data)?;
    let bins = data.noisy.shape().0;
    let loud = train(
        GainModel::ones(bins),
        data,
        &Objective::Loud(engine.clone()),
        cfg.steps,
        cfg.lr_loud,
    )?;
    let mse = train(GainModel::ones(bins), data, &Objective::Mse, cfg.steps, cfg.lr_mse)?;
    let band_weights = engine
        .band_weights()
        .map(|w| w.values().to_vec())
        .unwrap_or_default();
    let band_centers_hz = engine
        .partition()
        .map(|p| p.centers_hz())
        .unwrap_or_default();
    let max_weight_band = band_weights
        .iter()
        .enumerate()
        .fold(0, |best, (i, &w)| if w > band_weights[best] { i } else { best });
    let residual_ratio =
        loud.per_band_residuals[max_weight_band] / mse.per_band_residuals[max_weight_band];
    Ok(Comparison {
        seed,
        config: cfg.clone(),
        band_weights,
        band_centers_hz,
        max_weight_band,
        loud,
        mse,
        residual_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_is_deterministic_and_tilted() {
        let a = synth_dataset(7, 8).unwrap();
        let b = synth_dataset(7, 8).unwrap();
        assert_eq!(a, b);
        let c = synth_dataset(8, 8).unwrap();
        assert_ne!(a.clean, c.clean);
        for t in 0..8 {
            assert!(a.clean.values()[[10, t]] > a.clean.values()[[200, t]]);
        }
        assert!(matches!(synth_dataset(1, 0), Err(Error::InvalidHyperparameter(_))));
    }

    #[test]
    fn noiseless_pair_is_a_fixed_point() {
        let data = SpectralPair::clean_only(synth_dataset(3, 4).unwrap().clean);
        for objective in [Objective::loud_default(), Objective::Mse] {
            let run = train(GainModel::ones(257), &data, &objective, 5, 1e-3).unwrap();
            assert!(run.loss_curve.iter().all(|&l| l == 0.0));
            assert!(run.final_gains.gains.iter().all(|&g| g == 1.0));
            assert!(run.per_band_residuals.iter().all(|&r| r == 0.0));
        }
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        let data = synth_dataset(3, 2).unwrap();
        assert!(train(GainModel::ones(257), &data, &Objective::Mse, 0, 1.0).is_err());
        assert!(train(GainModel::ones(257), &data, &Objective::Mse, 1, 0.0).is_err());
        assert!(train(GainModel::ones(3), &data, &Objective::Mse, 1, 1.0).is_err());
    }

    #[test]
    fn projection_keeps_large_steps_finite() {
        let data = synth_dataset(3, 2).unwrap();
        let run = train(GainModel::ones(257), &data, &Objective::Mse, 3, 1e6).unwrap();
        assert!(run.loss_curve.iter().all(|l| l.is_finite()));
    }

    #[test]
    fn curvature_step_descends() {
        for seed in 0..5 {
            let data = synth_dataset(seed, 4).unwrap();
            let model = GainModel::ones(257);
            for objective in [Objective::loud_default(), Objective::Mse] {
                let lr = 1.0 / curvature_bound(&model, &data, &objective).unwrap();
                let run = train(model.clone(), &data, &objective, 1, lr).unwrap();
                assert!(run.loss_curve[1] <= run.loss_curve[0], "seed {seed} {}", objective.name());
            }
        }
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = CompareConfig {
            steps: 20,
            ..CompareConfig::default()
        };
        assert_eq!(compare_objectives(11, &cfg).unwrap(), compare_objectives(11, &cfg).unwrap());
    }
}
