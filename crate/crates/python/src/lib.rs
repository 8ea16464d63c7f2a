//! Python bindings for `loudloss`.
//!
//! Spectra cross the boundary as lists of rows (one row per frequency bin),
//! clips as flat sample lists.

use ndarray::Array2;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde_json::Value;

use loudloss::audio_io::AudioClip;
use loudloss::{
    BandOverlap, BandScale, Decibels, Error, LossConfig, LossDomain, LossEngine, LoudnessContour,
    MagnitudeSpectrum, PartitionConfig, SpectralMatrix, StftConfig, Weighting,
};

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse_enum<T: serde::de::DeserializeOwned>(what: &str, s: &str) -> PyResult<T> {
    serde_json::from_value(Value::String(s.to_string()))
        .map_err(|_| PyValueError::new_err(format!("unknown {what}: {s:?}")))
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Array2<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(PyValueError::new_err("ragged spectrum rows"));
    }
    Array2::from_shape_vec((n, m), rows.into_iter().flatten().collect())
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

fn rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.outer_iter().map(|r| r.to_vec()).collect()
}

fn magnitude(values: Vec<Vec<f64>>, sample_rate: u32, fft_size: usize) -> PyResult<MagnitudeSpectrum> {
    MagnitudeSpectrum::new(matrix(values)?, sample_rate, fft_size).map_err(to_py)
}

fn db(v: Decibels) -> f64 {
    v.as_f64()
}

fn partition_config(k: usize, scale: &str, overlap: &str, sample_rate: u32, fft_size: usize) -> PyResult<PartitionConfig> {
    let mut cfg = PartitionConfig::for_stft(sample_rate, fft_size);
    cfg.num_bands = k;
    cfg.scale = parse_enum::<BandScale>("scale", scale)?;
    cfg.overlap = parse_enum::<BandOverlap>("overlap", overlap)?;
    Ok(cfg)
}

#[pyfunction]
fn hz_to_mel(f: f64) -> PyResult<f64> {
    loudloss::hz_to_mel(f).map_err(to_py)
}

#[pyfunction]
fn mel_to_hz(m: f64) -> PyResult<f64> {
    loudloss::mel_to_hz(m).map_err(to_py)
}

/// SPL (dB) of the 40-phon table row nearest to `f`.
#[pyfunction]
fn spl_lookup(f: f64) -> f64 {
    LoudnessContour::forty_phon().spl_lookup(f)
}

/// Band table as a list of dicts with start, end, center_hz, lower_hz, upper_hz.
#[pyfunction]
#[pyo3(signature = (k=25, scale="mel", overlap="half", sample_rate=16000, fft_size=512))]
fn build_partition<'py>(
    py: Python<'py>,
    k: usize,
    scale: &str,
    overlap: &str,
    sample_rate: u32,
    fft_size: usize,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = partition_config(k, scale, overlap, sample_rate, fft_size)?;
    let partition = loudloss::build_partition(&cfg).map_err(to_py)?;
    partition
        .bands()
        .iter()
        .map(|b| {
            let d = PyDict::new(py);
            d.set_item("start", b.start)?;
            d.set_item("end", b.end)?;
            d.set_item("center_hz", b.center_hz)?;
            d.set_item("lower_hz", b.lower_hz)?;
            d.set_item("upper_hz", b.upper_hz)?;
            Ok(d)
        })
        .collect()
}

/// STFT magnitude of a clip, bins x frames.
#[pyfunction]
#[pyo3(signature = (samples, sample_rate=16000, window=512, hop=256))]
fn stft_magnitude(samples: Vec<f64>, sample_rate: u32, window: usize, hop: usize) -> PyResult<Vec<Vec<f64>>> {
    let clip = AudioClip::new(samples, sample_rate).map_err(to_py)?;
    let stft = StftConfig::new(window, hop).map_err(to_py)?;
    let mag = loudloss::stft_magnitude(&clip, &stft).map_err(to_py)?;
    Ok(rows(mag.values()))
}

/// Returns `(samples, sample_rate)`.
#[pyfunction]
fn load_wav(path: &str) -> PyResult<(Vec<f64>, u32)> {
    let clip = loudloss::load_wav(path).map_err(to_py)?;
    let rate = clip.sample_rate();
    Ok((clip.into_samples(), rate))
}

#[pyfunction]
#[pyo3(signature = (path, samples, sample_rate=16000))]
fn save_wav(path: &str, samples: Vec<f64>, sample_rate: u32) -> PyResult<()> {
    let clip = AudioClip::new(samples, sample_rate).map_err(to_py)?;
    loudloss::save_wav(&clip, path).map_err(to_py)
}

fn clip_pair(est: Vec<f64>, reference: Vec<f64>) -> PyResult<(AudioClip, AudioClip)> {
    Ok((
        AudioClip::new(est, 16_000).map_err(to_py)?,
        AudioClip::new(reference, 16_000).map_err(to_py)?,
    ))
}

/// SNR in dB; `inf` for a perfect match.
#[pyfunction]
fn snr(est: Vec<f64>, reference: Vec<f64>) -> PyResult<f64> {
    let (e, r) = clip_pair(est, reference)?;
    loudloss::snr(&e, &r).map(db).map_err(to_py)
}

/// Scale-invariant SNR in dB; `inf` for a perfect match.
#[pyfunction]
fn si_snr(est: Vec<f64>, reference: Vec<f64>) -> PyResult<f64> {
    let (e, r) = clip_pair(est, reference)?;
    loudloss::si_snr(&e, &r).map(db).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (est, reference, fft_size=512))]
fn mse_loss(est: Vec<Vec<f64>>, reference: Vec<Vec<f64>>, fft_size: usize) -> PyResult<f64> {
    let e = magnitude(est, 16_000, fft_size)?;
    let r = magnitude(reference, 16_000, fft_size)?;
    loudloss::mse_loss(&e, &r).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (est, reference, alpha, fft_size=512))]
fn compressed_loss(est: Vec<Vec<f64>>, reference: Vec<Vec<f64>>, alpha: f64, fft_size: usize) -> PyResult<f64> {
    let e = magnitude(est, 16_000, fft_size)?;
    let r = magnitude(reference, 16_000, fft_size)?;
    loudloss::compressed_loss(&e, &r, alpha).map_err(to_py)
}

/// Train per-bin gains under the weighted loss and MSE; returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (seed=42, steps=None, lr_loud=None, lr_mse=None, n_frames=None))]
fn compare_objectives<'py>(
    py: Python<'py>,
    seed: u64,
    steps: Option<usize>,
    lr_loud: Option<f64>,
    lr_mse: Option<f64>,
    n_frames: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut cfg = loudloss::trainer_demo::CompareConfig::default();
    cfg.steps = steps.unwrap_or(cfg.steps);
    cfg.lr_loud = lr_loud.unwrap_or(cfg.lr_loud);
    cfg.lr_mse = lr_mse.unwrap_or(cfg.lr_mse);
    cfg.n_frames = n_frames.unwrap_or(cfg.n_frames);
    let c = py
        .detach(|| loudloss::trainer_demo::compare_objectives(seed, &cfg))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("max_weight_band", c.max_weight_band)?;
    d.set_item("band_weights", c.band_weights)?;
    d.set_item("band_centers_hz", c.band_centers_hz)?;
    d.set_item("residual_ratio", c.residual_ratio)?;
    d.set_item("loud_loss_curve", c.loud.loss_curve)?;
    d.set_item("mse_loss_curve", c.mse.loss_curve)?;
    d.set_item("loud_residuals", c.loud.per_band_residuals)?;
    d.set_item("mse_residuals", c.mse.per_band_residuals)?;
    Ok(d)
}

/// A configured loss for one STFT geometry.
#[pyclass(name = "LossEngine", module = "pyloudloss", frozen)]
struct PyLossEngine {
    inner: LossEngine,
}

#[pymethods]
impl PyLossEngine {
    #[new]
    #[pyo3(signature = (
        weighting="equal-loudness", domain="log-power", k=25, scale="mel", overlap="half",
        floor_db=-80.0, sample_rate=16000, fft_size=512
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        weighting: &str,
        domain: &str,
        k: usize,
        scale: &str,
        overlap: &str,
        floor_db: f64,
        sample_rate: u32,
        fft_size: usize,
    ) -> PyResult<Self> {
        let weighting: Weighting = parse_enum("weighting", weighting)?;
        let partition = match weighting {
            Weighting::PerBin => None,
            _ => Some(partition_config(k, scale, overlap, sample_rate, fft_size)?),
        };
        let config = LossConfig {
            domain: parse_enum::<LossDomain>("domain", domain)?,
            weighting,
            partition,
            floor_db,
        };
        let inner = LossEngine::new(config, sample_rate, fft_size).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Per-band weights (per-bin weights for the per-bin scheme).
    fn weights(&self) -> Vec<f64> {
        match (self.inner.band_weights(), self.inner.bin_weights()) {
            (Some(w), _) => w.values().to_vec(),
            (None, Some(w)) => w.to_vec(),
            (None, None) => Vec::new(),
        }
    }

    /// Returns `(total, band_losses)` for two magnitude spectra.
    fn loss(&self, est: Vec<Vec<f64>>, reference: Vec<Vec<f64>>) -> PyResult<(f64, Vec<f64>)> {
        let (rate, fft) = (self.inner.sample_rate(), self.inner.fft_size());
        let report = self
            .inner
            .loss(&magnitude(est, rate, fft)?, &magnitude(reference, rate, fft)?)
            .map_err(to_py)?;
        Ok((report.total, report.bands.iter().map(|b| b.loss).collect()))
    }

    /// Gradient of the loss with respect to the estimated magnitudes.
    fn gradient(&self, est: Vec<Vec<f64>>, reference: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let (rate, fft) = (self.inner.sample_rate(), self.inner.fft_size());
        let grad = self
            .inner
            .gradient(&magnitude(est, rate, fft)?, &magnitude(reference, rate, fft)?)
            .map_err(to_py)?;
        Ok(rows(grad.values()))
    }

    /// Score two waveforms end to end.
    #[pyo3(signature = (est, reference, hop=256))]
    fn evaluate(&self, est: Vec<f64>, reference: Vec<f64>, hop: usize) -> PyResult<f64> {
        let rate = self.inner.sample_rate();
        let e = AudioClip::new(est, rate).map_err(to_py)?;
        let r = AudioClip::new(reference, rate).map_err(to_py)?;
        let stft = StftConfig::new(self.inner.fft_size(), hop).map_err(to_py)?;
        self.inner.evaluate(&e, &r, &stft).map(|r| r.total).map_err(to_py)
    }
}

#[pymodule]
fn pyloudloss(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyLossEngine>()?;
    m.add_function(wrap_pyfunction!(hz_to_mel, m)?)?;
    m.add_function(wrap_pyfunction!(mel_to_hz, m)?)?;
    m.add_function(wrap_pyfunction!(spl_lookup, m)?)?;
    m.add_function(wrap_pyfunction!(build_partition, m)?)?;
    m.add_function(wrap_pyfunction!(stft_magnitude, m)?)?;
    m.add_function(wrap_pyfunction!(load_wav, m)?)?;
    m.add_function(wrap_pyfunction!(save_wav, m)?)?;
    m.add_function(wrap_pyfunction!(snr, m)?)?;
    m.add_function(wrap_pyfunction!(si_snr, m)?)?;
    m.add_function(wrap_pyfunction!(mse_loss, m)?)?;
    m.add_function(wrap_pyfunction!(compressed_loss, m)?)?;
    m.add_function(wrap_pyfunction!(compare_objectives, m)?)?;
    Ok(())
}
