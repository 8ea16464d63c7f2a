//! Waveform fidelity metrics: SNR and scale-invariant SNR.

use serde::{Serialize, Serializer};

use crate::audio_io::AudioClip;
use crate::error::{Error, Result};
use crate::loss_engine::check_clip_pair;

/// Energy ratios beyond this (240 dB) are below f64 resolution and count as a perfect match.
const PERFECT_RATIO: f64 = 1e24;

/// A metric value in dB, or a perfect (infinite) score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decibels {
    Finite(f64),
    Perfect,
}

impl Decibels {
    pub fn as_f64(self) -> f64 {
        match self {
            Decibels::Finite(v) => v,
            Decibels::Perfect => f64::INFINITY,
        }
    }

    pub fn is_perfect(self) -> bool {
        matches!(self, Decibels::Perfect)
    }

    fn from_energies(signal: f64, noise: f64) -> Self {
        if noise == 0.0 || signal / noise > PERFECT_RATIO {
            Decibels::Perfect
        } else {
            Decibels::Finite(10.0 * (signal / noise).log10())
        }
    }
}

impl Serialize for Decibels {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Decibels::Finite(v) => serializer.serialize_f64(*v),
            Decibels::Perfect => serializer.serialize_str("perfect"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricReport {
    pub snr_db: Decibels,
    pub si_snr_db: Decibels,
}

impl MetricReport {
    pub fn compute(est: &AudioClip, reference: &AudioClip) -> Result<Self> {
        Ok(Self {
            snr_db: snr(est, reference)?,
            si_snr_db: si_snr(est, reference)?,
        })
    }
}

fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// `10 log10(sum ref^2 / sum (ref - est)^2)`.
pub fn snr(est: &AudioClip, reference: &AudioClip) -> Result<Decibels> {
    check_clip_pair(est, reference)?;
    let signal = energy(reference.samples());
    if signal == 0.0 {
        return Err(Error::SilentReference);
    }
    let noise: f64 = reference
        .samples()
        .iter()
        .zip(est.samples())
        .map(|(r, e)| (r - e) * (r - e))
        .sum();
    Ok(Decibels::from_energies(signal, noise))
}

fn zero_mean(x: &[f64]) -> Vec<f64> {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| v - mean).collect()
}

/// Scale-invariant SNR after mean removal.
///
/// The estimate is projected onto the reference; the projection is the
/// target component and the remainder is noise.
pub fn si_snr(est: &AudioClip, reference: &AudioClip) -> Result<Decibels> {
    check_clip_pair(est, reference)?;
    let r = zero_mean(reference.samples());
    let e = zero_mean(est.samples());
    let ref_energy = energy(&r);
    if ref_energy == 0.0 || ref_energy * PERFECT_RATIO < energy(reference.samples()) {
        return Err(Error::SilentReference);
    }
    let dot: f64 = e.iter().zip(&r).map(|(a, b)| a * b).sum();
    let scale = dot / ref_energy;
    let (mut target, mut noise) = (0.0, 0.0);
    for (ev, rv) in e.iter().zip(&r) {
        let s = scale * rv;
        target += s * s;
        noise += (ev - s) * (ev - s);
    }
    if target == 0.0 || target * PERFECT_RATIO < noise {
        return Err(Error::OrthogonalEstimate);
    }
    Ok(Decibels::from_energies(target, noise))
}
