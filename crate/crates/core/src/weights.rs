//! 40-phon equal-loudness contour and the band weights derived from it.
//!
//! A band's weight is `SPL(1000 Hz) / SPL(center)`: bands where the contour
//! dips below its 1 kHz level (the ear is more sensitive there) get weights
//! above one.

use crate::error::{Error, Result};
use crate::melbands::BandPartition;

/// (frequency Hz, SPL dB) along the 40-phon equal-loudness contour.
pub const FORTY_PHON_CONTOUR: [(f64, f64); 29] = [
    (20.0, 99.85),
    (25.0, 93.94),
    (31.5, 88.17),
    (40.0, 82.63),
    (50.0, 77.78),
    (63.0, 73.08),
    (80.0, 68.48),
    (100.0, 64.37),
    (125.0, 60.59),
    (160.0, 56.70),
    (200.0, 53.41),
    (250.0, 50.40),
    (315.0, 47.58),
    (400.0, 44.98),
    (500.0, 43.05),
    (630.0, 41.34),
    (800.0, 40.06),
    (1000.0, 40.01),
    (1250.0, 41.82),
    (1600.0, 42.51),
    (2000.0, 39.23),
    (2500.0, 36.51),
    (3150.0, 35.61),
    (4000.0, 36.65),
    (5000.0, 40.01),
    (6300.0, 45.83),
    (8000.0, 51.80),
    (10000.0, 54.28),
    (12500.0, 51.49),
];

const REFERENCE_HZ: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LoudnessContour {
    entries: Vec<(f64, f64)>,
    reference_spl: f64,
}

impl LoudnessContour {
    pub fn forty_phon() -> Self {
        Self::new(FORTY_PHON_CONTOUR.to_vec()).expect("embedded contour is valid")
    }

    /// Entries must be strictly increasing in frequency, have positive SPL
    /// and include the 1000 Hz reference row.
    pub fn new(entries: Vec<(f64, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidContour("no entries".into()));
        }
        if entries.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidContour(
                "frequencies must be strictly increasing".into(),
            ));
        }
        if entries
            .iter()
            .any(|&(f, spl)| !(f > 0.0 && f.is_finite() && spl > 0.0 && spl.is_finite()))
        {
            return Err(Error::InvalidContour(
                "frequencies and SPL values must be positive and finite".into(),
            ));
        }
        let reference_spl = entries
            .iter()
            .find(|&&(f, _)| f == REFERENCE_HZ)
            .map(|&(_, spl)| spl)
            .ok_or_else(|| Error::InvalidContour("missing 1000 Hz reference row".into()))?;
        Ok(Self {
            entries,
            reference_spl,
        })
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }

    /// SPL at 1000 Hz.
    pub fn reference_spl(&self) -> f64 {
        self.reference_spl
    }

    /// Multiply every SPL value by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.entries
                .iter()
                .map(|&(f, spl)| (f, spl * factor))
                .collect(),
        )
    }

    /// Table row nearest to `f` in linear Hz; ties go to the lower frequency.
    pub fn nearest_entry(&self, f: f64) -> (f64, f64) {
        let mut best = self.entries[0];
        for &entry in &self.entries[1..] {
            if (entry.0 - f).abs() < (best.0 - f).abs() {
                best = entry;
            }
        }
        best
    }

    /// Nearest-neighbour SPL lookup.
    pub fn spl_lookup(&self, f: f64) -> f64 {
        self.nearest_entry(f).1
    }

    /// SPL linearly interpolated over (log10 frequency, dB), clamped at the table ends.
    pub fn interpolated_spl(&self, f: f64) -> f64 {
        let first = self.entries[0];
        let last = self.entries[self.entries.len() - 1];
        if f <= first.0 {
            return first.1;
        }
        if f >= last.0 {
            return last.1;
        }
        let upper = self.entries.partition_point(|&(ef, _)| ef <= f);
        let (f0, s0) = self.entries[upper - 1];
        if f0 == f {
            return s0;
        }
        let (f1, s1) = self.entries[upper];
        let t = (f.log10() - f0.log10()) / (f1.log10() - f0.log10());
        s0 + t * (s1 - s0)
    }
}

impl Default for LoudnessContour {
    fn default() -> Self {
        Self::forty_phon()
    }
}

/// One positive weight per band.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    w: Vec<f64>,
    reference_spl: f64,
}

impl WeightVector {
    pub fn from_values(w: Vec<f64>, reference_spl: f64) -> Self {
        Self { w, reference_spl }
    }

    /// All-ones weights, making the loss a plain sum of band MSEs.
    pub fn uniform(num_bands: usize) -> Self {
        Self {
            w: vec![1.0; num_bands],
            reference_spl: f64::NAN,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn reference_spl(&self) -> f64 {
        self.reference_spl
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            w: self.w.iter().map(|w| w * factor).collect(),
            reference_spl: self.reference_spl,
        }
    }
}

/// `w[i] = SPL(1000) / SPL(center_i)` with nearest-neighbour lookup.
pub fn compute_weights(contour: &LoudnessContour, partition: &BandPartition) -> WeightVector {
    let reference = contour.reference_spl();
    let w = partition
        .bands()
        .iter()
        .map(|b| reference / contour.spl_lookup(b.center_hz))
        .collect();
    WeightVector {
        w,
        reference_spl: reference,
    }
}

/// Per-bin weights `SPL(1000) / SPL_interp(bin frequency)` for `num_bins` bins.
pub fn per_bin_weights(
    contour: &LoudnessContour,
    num_bins: usize,
    sample_rate: u32,
    fft_size: usize,
) -> Vec<f64> {
    let bin_hz = f64::from(sample_rate) / fft_size as f64;
    let reference = contour.reference_spl();
    (0..num_bins)
        .map(|bin| reference / contour.interpolated_spl(bin as f64 * bin_hz))
        .collect()
}
