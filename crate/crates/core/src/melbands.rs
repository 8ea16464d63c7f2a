//! Mel-spaced sub-band partition of STFT bins.
//!
//! `K + 2` boundary frequencies are placed equidistantly on the Mel scale
//! between `f_min` and `f_max` and mapped to bins with
//! `floor(f * fft_size / sample_rate)`. With half overlap, band `i` spans
//! bins `[k[i], k[i + 2])` and is centred at boundary `i + 1`, so every
//! interior bin belongs to exactly two bands.
//!
//! Without overlap the range is re-spaced with `K + 1` boundaries and band
//! `i` spans `[k[i], k[i + 1])`, centred at the Mel (or Hz) midpoint of its
//! edges.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mel value for `f` Hz: `2595 log10(1 + f / 700)`.
pub fn hz_to_mel(f: f64) -> Result<f64> {
    if f < 0.0 || f.is_nan() {
        return Err(Error::NegativeFrequency(f));
    }
    Ok(2595.0 * (1.0 + f / 700.0).log10())
}

/// Inverse of [`hz_to_mel`]: `700 (10^(m / 2595) - 1)`.
pub fn mel_to_hz(m: f64) -> Result<f64> {
    if m < 0.0 || m.is_nan() {
        return Err(Error::NegativeMel(m));
    }
    Ok(700.0 * (10f64.powf(m / 2595.0) - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandScale {
    Mel,
    UniformHz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandOverlap {
    Half,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionConfig {
    pub num_bands: usize,
    pub f_min: f64,
    pub f_max: f64,
    pub sample_rate: u32,
    pub fft_size: usize,
    pub scale: BandScale,
    pub overlap: BandOverlap,
}

impl PartitionConfig {
    /// 25 half-overlapping Mel bands from 0 Hz to Nyquist.
    pub fn for_stft(sample_rate: u32, fft_size: usize) -> Self {
        Self {
            num_bands: 25,
            f_min: 0.0,
            f_max: f64::from(sample_rate) / 2.0,
            sample_rate,
            fft_size,
            scale: BandScale::Mel,
            overlap: BandOverlap::Half,
        }
    }

    pub fn num_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    fn nyquist(&self) -> f64 {
        f64::from(self.sample_rate) / 2.0
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidPartition(msg));
        if self.num_bands == 0 {
            return bad("num_bands must be at least 1".into());
        }
        if self.sample_rate == 0 || self.fft_size < 2 {
            return bad("sample_rate and fft_size must be positive".into());
        }
        if !(self.f_min.is_finite() && self.f_max.is_finite()) {
            return bad("frequency range must be finite".into());
        }
        if !(0.0 <= self.f_min && self.f_min < self.f_max && self.f_max <= self.nyquist()) {
            return bad(format!(
                "need 0 <= f_min < f_max <= {} Hz, got [{}, {}]",
                self.nyquist(),
                self.f_min,
                self.f_max
            ));
        }
        Ok(())
    }
}

impl Default for PartitionConfig {
    fn default() -> Self {
        Self::for_stft(16_000, 512)
    }
}

/// One sub-band: bins `[start, end)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Band {
    pub start: usize,
    pub end: usize,
    pub center_hz: f64,
    pub lower_hz: f64,
    pub upper_hz: f64,
}

impl Band {
    pub fn width(&self) -> usize {
        self.end - self.start
    }

    pub fn bins(&self) -> Range<usize> {
        self.start..self.end
    }

    pub fn contains(&self, bin: usize) -> bool {
        self.start <= bin && bin < self.end
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandPartition {
    config: Option<PartitionConfig>,
    num_bins: usize,
    boundaries_hz: Vec<f64>,
    boundary_bins: Vec<usize>,
    bands: Vec<Band>,
}

impl BandPartition {
    /// Contiguous, non-overlapping bands `[edges[i], edges[i + 1])` given directly in bins.
    pub fn from_bin_edges(sample_rate: u32, fft_size: usize, edges: &[usize]) -> Result<Self> {
        let num_bins = fft_size / 2 + 1;
        if edges.len() < 2 {
            return Err(Error::InvalidPartition("need at least two edges".into()));
        }
        if edges[edges.len() - 1] > num_bins {
            return Err(Error::InvalidPartition(format!(
                "edge {} past the last bin ({num_bins} bins)",
                edges[edges.len() - 1]
            )));
        }
        let bin_hz = f64::from(sample_rate) / fft_size as f64;
        let boundaries_hz: Vec<f64> = edges.iter().map(|&e| e as f64 * bin_hz).collect();
        let bands = edges
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                if w[1] <= w[0] {
                    return Err(Error::DegenerateBand { band: i });
                }
                Ok(Band {
                    start: w[0],
                    end: w[1],
                    center_hz: 0.5 * (boundaries_hz[i] + boundaries_hz[i + 1]),
                    lower_hz: boundaries_hz[i],
                    upper_hz: boundaries_hz[i + 1],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config: None,
            num_bins,
            boundaries_hz,
            boundary_bins: edges.to_vec(),
            bands,
        })
    }

    /// The config this partition was built from; `None` for explicit bin edges.
    pub fn config(&self) -> Option<&PartitionConfig> {
        self.config.as_ref()
    }

    /// `K + 2` boundaries with half overlap, `K + 1` without.
    pub fn boundaries_hz(&self) -> &[f64] {
        &self.boundaries_hz
    }

    pub fn boundary_bins(&self) -> &[usize] {
        &self.boundary_bins
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn num_bands(&self) -> usize {
        self.bands.len()
    }

    pub fn num_bins(&self) -> usize {
        self.num_bins
    }

    pub fn centers_hz(&self) -> Vec<f64> {
        self.bands.iter().map(|b| b.center_hz).collect()
    }

    /// Sorted indices of the bands containing `bin`.
    pub fn bin_membership(&self, bin: usize) -> Result<Vec<usize>> {
        if bin >= self.num_bins() {
            return Err(Error::BinOutOfRange {
                bin,
                bins: self.num_bins(),
            });
        }
        // bands are sorted by start; only neighbours of the first band ending past `bin` can match
        let first = self.bands.partition_point(|b| b.end <= bin);
        Ok(self.bands[first..]
            .iter()
            .take_while(|b| b.start <= bin)
            .enumerate()
            .filter(|(_, b)| b.contains(bin))
            .map(|(j, _)| first + j)
            .collect())
    }
}

fn equispaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let step = (hi - lo) / (count - 1) as f64;
    (0..count)
        .map(|i| {
            if i == count - 1 {
                hi
            } else {
                lo + step * i as f64
            }
        })
        .collect()
}

/// Boundary frequencies and the band-centre frequency of each boundary gap.
fn boundaries(cfg: &PartitionConfig, count: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    match cfg.scale {
        BandScale::Mel => {
            let mels = equispaced(hz_to_mel(cfg.f_min)?, hz_to_mel(cfg.f_max)?, count);
            let mut hz = mels
                .iter()
                .map(|&m| mel_to_hz(m))
                .collect::<Result<Vec<_>>>()?;
            hz[0] = cfg.f_min;
            hz[count - 1] = cfg.f_max;
            let mids = mels
                .windows(2)
                .map(|w| mel_to_hz(0.5 * (w[0] + w[1])))
                .collect::<Result<Vec<_>>>()?;
            Ok((hz, mids))
        }
        BandScale::UniformHz => {
            let hz = equispaced(cfg.f_min, cfg.f_max, count);
            let mids = hz.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
            Ok((hz, mids))
        }
    }
}

pub fn build_partition(cfg: &PartitionConfig) -> Result<BandPartition> {
    cfg.validate()?;
    let k = cfg.num_bands;
    let count = match cfg.overlap {
        BandOverlap::Half => k + 2,
        BandOverlap::None => k + 1,
    };
    let (boundaries_hz, mids) = boundaries(cfg, count)?;
    let bin_hz = f64::from(cfg.sample_rate) / cfg.fft_size as f64;
    let mut boundary_bins: Vec<usize> = boundaries_hz
        .iter()
        .map(|&f| (f / bin_hz).floor() as usize)
        .collect();
    if cfg.f_max == cfg.nyquist() {
        // include the Nyquist bin itself
        boundary_bins[count - 1] = cfg.num_bins();
    }

    let bands = (0..k)
        .map(|i| {
            let (lo, hi, center_hz) = match cfg.overlap {
                BandOverlap::Half => (i, i + 2, boundaries_hz[i + 1]),
                BandOverlap::None => (i, i + 1, mids[i]),
            };
            let band = Band {
                start: boundary_bins[lo],
                end: boundary_bins[hi],
                center_hz,
                lower_hz: boundaries_hz[lo],
                upper_hz: boundaries_hz[hi],
            };
            if band.end <= band.start {
                Err(Error::DegenerateBand { band: i })
            } else {
                Ok(band)
            }
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(BandPartition {
        config: Some(cfg.clone()),
        num_bins: cfg.num_bins(),
        boundaries_hz,
        boundary_bins,
        bands,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn mel_examples() {
        assert_eq!(hz_to_mel(0.0).unwrap(), 0.0);
        assert!((hz_to_mel(700.0).unwrap() - 2595.0 * 2f64.log10()).abs() < 1e-12);
        assert!((hz_to_mel(700.0).unwrap() - 781.17).abs() < 0.01);
        assert!((hz_to_mel(8000.0).unwrap() - 2840.03).abs() < 0.01);
        let anchor = hz_to_mel(1000.0).unwrap();
        assert!((999.9..=1000.1).contains(&anchor));

        assert_eq!(mel_to_hz(0.0).unwrap(), 0.0);
        assert!(rel(mel_to_hz(2595.0).unwrap(), 6300.0) < 1e-12);
        for f in [50.0, 1000.0, 7999.0] {
            assert!(rel(mel_to_hz(hz_to_mel(f).unwrap()).unwrap(), f) < 1e-9);
        }
        assert!(matches!(hz_to_mel(-1.0), Err(Error::NegativeFrequency(_))));
        assert!(matches!(mel_to_hz(-1.0), Err(Error::NegativeMel(_))));
    }

    #[test]
    fn default_partition_low_bands() {
        let p = build_partition(&PartitionConfig::default()).unwrap();
        assert_eq!(p.boundaries_hz().len(), 27);
        assert_eq!(p.num_bands(), 25);
        let spacing = hz_to_mel(8000.0).unwrap() / 26.0;
        assert!((spacing - 109.23).abs() < 0.01);
        assert!((p.boundaries_hz()[1] - 71.24).abs() < 0.01);
        assert!((p.boundaries_hz()[2] - 149.74).abs() < 0.01);
        assert_eq!(&p.boundary_bins()[..3], &[0, 2, 4]);
        assert_eq!(p.boundary_bins()[26], 257);
        assert_eq!(p.bands()[0].bins(), 0..4);
        assert_eq!(p.bands()[0].width(), 4);
        assert_eq!(p.bands()[24].end, 257);
    }

    #[test]
    fn single_band_spans_everything() {
        let cfg = PartitionConfig {
            num_bands: 1,
            ..PartitionConfig::default()
        };
        let p = build_partition(&cfg).unwrap();
        assert_eq!(p.bands()[0].bins(), 0..257);
    }

    #[test]
    fn uniform_spacing() {
        let cfg = PartitionConfig {
            scale: BandScale::UniformHz,
            ..PartitionConfig::default()
        };
        let p = build_partition(&cfg).unwrap();
        for w in p.boundaries_hz().windows(2) {
            assert!((w[1] - w[0] - 8000.0 / 26.0).abs() < 1e-9);
        }
        assert!((8000.0f64 / 26.0 - 307.69).abs() < 0.01);
    }

    #[test]
    fn no_overlap_is_contiguous() {
        let cfg = PartitionConfig {
            overlap: BandOverlap::None,
            ..PartitionConfig::default()
        };
        let p = build_partition(&cfg).unwrap();
        assert_eq!(p.boundaries_hz().len(), 26);
        assert_eq!(p.bands()[0].start, 0);
        assert_eq!(p.bands()[24].end, 257);
        for w in p.bands().windows(2) {
            assert_eq!(w[0].end, w[1].start);
        }
        for b in p.bands() {
            let mid = 0.5 * (hz_to_mel(b.lower_hz).unwrap() + hz_to_mel(b.upper_hz).unwrap());
            assert!((hz_to_mel(b.center_hz).unwrap() - mid).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_and_invalid() {
        let cfg = PartitionConfig {
            num_bands: 200,
            ..PartitionConfig::default()
        };
        assert!(matches!(build_partition(&cfg), Err(Error::DegenerateBand { .. })));
        let cfg = PartitionConfig {
            f_max: 9000.0,
            ..PartitionConfig::default()
        };
        assert!(matches!(build_partition(&cfg), Err(Error::InvalidPartition(_))));
        let cfg = PartitionConfig {
            num_bands: 0,
            ..PartitionConfig::default()
        };
        assert!(matches!(build_partition(&cfg), Err(Error::InvalidPartition(_))));
    }

    #[test]
    fn explicit_edges() {
        let p = BandPartition::from_bin_edges(16, 16, &[0, 3, 6, 9]).unwrap();
        assert_eq!(p.num_bands(), 3);
        assert_eq!(p.bands()[1].bins(), 3..6);
        assert_eq!(p.bands()[1].center_hz, 4.5);
        assert_eq!(p.bin_membership(5).unwrap(), vec![1]);
        assert!(matches!(
            BandPartition::from_bin_edges(16, 16, &[0, 3, 3]),
            Err(Error::DegenerateBand { band: 1 })
        ));
        assert!(BandPartition::from_bin_edges(16, 16, &[0, 10]).is_err());
        assert!(BandPartition::from_bin_edges(16, 16, &[0]).is_err());
    }

    #[test]
    fn membership_examples() {
        let p = build_partition(&PartitionConfig::default()).unwrap();
        let k = p.boundary_bins();
        for bin in k[1]..k[2] {
            assert_eq!(p.bin_membership(bin).unwrap(), vec![0, 1]);
        }
        assert_eq!(p.bin_membership(0).unwrap(), vec![0]);
        assert_eq!(p.bin_membership(256).unwrap(), vec![24]);
        assert!(matches!(p.bin_membership(257), Err(Error::BinOutOfRange { .. })));

        let cfg = PartitionConfig {
            f_min: 500.0,
            ..PartitionConfig::default()
        };
        let p = build_partition(&cfg).unwrap();
        assert!(p.bin_membership(3).unwrap().is_empty());
    }

    proptest! {
        #[test]
        fn mel_monotone_and_inverse(a in 0.0f64..20_000.0, b in 0.0f64..20_000.0) {
            prop_assume!(a != b);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(hz_to_mel(lo).unwrap() < hz_to_mel(hi).unwrap());
            prop_assert!(mel_to_hz(lo / 5.0).unwrap() < mel_to_hz(hi / 5.0).unwrap());
            let back = mel_to_hz(hz_to_mel(hi).unwrap()).unwrap();
            prop_assert!((back - hi).abs() <= 1e-9 * hi);
        }

        #[test]
        fn membership_matches_scan(
            k in 1usize..40,
            f_min in 0.0f64..1000.0,
            uniform in any::<bool>(),
            half in any::<bool>(),
        ) {
            let cfg = PartitionConfig {
                num_bands: k,
                f_min,
                scale: if uniform { BandScale::UniformHz } else { BandScale::Mel },
                overlap: if half { BandOverlap::Half } else { BandOverlap::None },
                ..PartitionConfig::default()
            };
            if let Ok(p) = build_partition(&cfg) {
                let kc = p.boundary_bins();
                for bin in 0..p.num_bins() {
                    let scan: Vec<usize> = (0..p.num_bands())
                        .filter(|&i| p.bands()[i].start <= bin && bin < p.bands()[i].end)
                        .collect();
                    let got = p.bin_membership(bin).unwrap();
                    prop_assert_eq!(&got, &scan);
                    let covered = kc[0] <= bin && bin < kc[kc.len() - 1];
                    prop_assert_eq!(!got.is_empty(), covered);
                    if half && kc[1] <= bin && bin < kc[k] {
                        prop_assert_eq!(got.len(), 2);
                    }
                    if !half {
                        prop_assert!(got.len() <= 1);
                    }
                }
            }
        }
    }
}
