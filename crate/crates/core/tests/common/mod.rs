//! Independent reference implementations used by the integration tests.
//!
//! Everything here is written from the formulas directly with plain loops and
//! shares no code with the library.

#![allow(dead_code)]

use std::f64::consts::PI;

/// The 40-phon equal-loudness table as published, eight columns per row
/// (frequency, SPL pairs).
pub const PUBLISHED_TABLE: &str = r"
20 & 99.85 & 25 & 93.94 & 31.5 & 88.17 & 40 & 82.63 \\
50 & 77.78 & 63 & 73.08 & 80 & 68.48 & 100 & 64.37 \\
125 & 60.59 & 160 & 56.70 & 200 & 53.41 & 250 & 50.40 \\
315 & 47.58 & 400 & 44.98 & 500 & 43.05 & 630 & 41.34 \\
800 & 40.06 & 1000 & 40.01 & 1250 & 41.82 & 1600 & 42.51 \\
2000 & 39.23 & 2500 & 36.51 & 3150 & 35.61 & 4000 & 36.65 \\
5000 & 40.01 & 6300 & 45.83 & 8000 & 51.80 & 10000 & 54.28 \\
12500 & 51.49 & & & & & & \\
";

pub fn parse_table() -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for line in PUBLISHED_TABLE.lines() {
        let cells: Vec<&str> = line
            .trim_end_matches("\\\\")
            .split('&')
            .map(str::trim)
            .filter(|c| !c.is_empty())
            .collect();
        for pair in cells.chunks(2) {
            out.push((pair[0].parse().unwrap(), pair[1].parse().unwrap()));
        }
    }
    out
}

pub fn mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn inv_mel(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

pub struct NaiveBand {
    pub start: usize,
    pub end: usize,
    pub center_hz: f64,
}

/// Default geometry: 16 kHz, 512-point FFT, K Mel bands with 50% overlap.
pub fn naive_bands(k: usize) -> Vec<NaiveBand> {
    let (sr, fft) = (16_000.0, 512.0);
    let top = mel(sr / 2.0);
    let mut hz = Vec::new();
    let mut bins = Vec::new();
    for i in 0..k + 2 {
        let f = if i == k + 1 { sr / 2.0 } else { inv_mel(top * i as f64 / (k + 1) as f64) };
        let mut b = (f * fft / sr).floor() as usize;
        if i == k + 1 {
            b = 257;
        }
        hz.push(f);
        bins.push(b);
    }
    (0..k)
        .map(|i| NaiveBand {
            start: bins[i],
            end: bins[i + 2],
            center_hz: hz[i + 1],
        })
        .collect()
}

pub fn naive_weights(bands: &[NaiveBand]) -> Vec<f64> {
    let table = parse_table();
    let reference = table.iter().find(|(f, _)| *f == 1000.0).unwrap().1;
    bands
        .iter()
        .map(|b| {
            let mut best = table[0];
            for &row in &table {
                if (row.0 - b.center_hz).abs() < (best.0 - b.center_hz).abs() {
                    best = row;
                }
            }
            reference / best.1
        })
        .collect()
}

pub fn log_power(m: f64) -> f64 {
    (20.0 * (m + 1e-8).log10()).max(-80.0)
}

/// Weighted sub-band log-power MSE over bins x frames magnitude matrices.
pub fn naive_loud_loss(est: &[Vec<f64>], reference: &[Vec<f64>], k: usize) -> f64 {
    let bands = naive_bands(k);
    let weights = naive_weights(&bands);
    let frames = est[0].len();
    let mut total = 0.0;
    for (band, w) in bands.iter().zip(&weights) {
        let mut acc = 0.0;
        for f in band.start..band.end {
            for t in 0..frames {
                let d = log_power(est[f][t]) - log_power(reference[f][t]);
                acc += d * d;
            }
        }
        total += w * acc / ((band.end - band.start) * frames) as f64;
    }
    total
}

/// Magnitude STFT by direct DFT: periodic Hann, no padding, bins x frames.
pub fn naive_stft(x: &[f64], window: usize, hop: usize) -> Vec<Vec<f64>> {
    let frames = (x.len() - window) / hop + 1;
    let bins = window / 2 + 1;
    let hann: Vec<f64> = (0..window)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / window as f64).cos())
        .collect();
    let mut out = vec![vec![0.0; frames]; bins];
    for t in 0..frames {
        let seg = &x[t * hop..t * hop + window];
        for (k, row) in out.iter_mut().enumerate() {
            let (mut re, mut im) = (0.0, 0.0);
            for n in 0..window {
                let phase = 2.0 * PI * ((k * n) % window) as f64 / window as f64;
                let v = seg[n] * hann[n];
                re += v * phase.cos();
                im -= v * phase.sin();
            }
            row[t] = (re * re + im * im).sqrt();
        }
    }
    out
}

/// Minimal RIFF/PCM16 mono reader.
pub fn naive_read_wav(bytes: &[u8]) -> Vec<f64> {
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap()) as usize;
        if id == b"data" {
            return bytes[pos + 8..pos + 8 + size]
                .chunks_exact(2)
                .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64 / 32768.0)
                .collect();
        }
        pos += 8 + size + size % 2;
    }
    panic!("no data chunk");
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

pub fn loudloss_cmd() -> std::process::Command {
    std::process::Command::new(env!("CARGO_BIN_EXE_loudloss"))
}

pub const GOLDEN_ANALYZE: &str = include_str!("../golden/analyze_seed42.json");

/// Structural equality with numbers compared to a relative tolerance.
pub fn json_close(a: &serde_json::Value, b: &serde_json::Value, tol: f64, path: &str) -> Result<(), String> {
    use serde_json::Value;
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            if rel_err(x, y) <= tol {
                Ok(())
            } else {
                Err(format!("{path}: {x} vs {y}"))
            }
        }
        (Value::Array(x), Value::Array(y)) if x.len() == y.len() => x
            .iter()
            .zip(y)
            .enumerate()
            .try_for_each(|(i, (p, q))| json_close(p, q, tol, &format!("{path}[{i}]"))),
        (Value::Object(x), Value::Object(y)) if x.len() == y.len() => x.iter().try_for_each(|(k, v)| {
            let w = y.get(k).ok_or_else(|| format!("{path}.{k} missing"))?;
            json_close(v, w, tol, &format!("{path}.{k}"))
        }),
        _ if a == b => Ok(()),
        _ => Err(format!("{path}: {a} vs {b}")),
    }
}

pub struct GoldenOutcome {
    pub byte_stable: bool,
    pub golden_match: Result<(), String>,
    pub total: f64,
    pub oracle_total: f64,
}

/// Write the seed-42 pair, analyze it twice and score it with the naive pipeline.
pub fn run_golden() -> GoldenOutcome {
    let dir = tempfile::tempdir().unwrap();
    let est = dir.path().join("est.wav");
    let reference = dir.path().join("ref.wav");
    let status = loudloss_cmd()
        .args(["synth-pair", "--seed", "42", "--est-out"])
        .arg(&est)
        .arg("--ref-out")
        .arg(&reference)
        .status()
        .unwrap();
    assert!(status.success());
    let analyze = || {
        let out = loudloss_cmd().arg("analyze").arg(&est).arg(&reference).output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };
    let first = analyze();
    let second = analyze();
    let report: serde_json::Value = serde_json::from_slice(&first).unwrap();
    let golden: serde_json::Value = serde_json::from_str(GOLDEN_ANALYZE).unwrap();
    let total = report["loss"]["total"].as_f64().unwrap();

    let est_samples = naive_read_wav(&std::fs::read(&est).unwrap());
    let ref_samples = naive_read_wav(&std::fs::read(&reference).unwrap());
    let oracle_total = naive_loud_loss(
        &naive_stft(&est_samples, 512, 256),
        &naive_stft(&ref_samples, 512, 256),
        25,
    );
    GoldenOutcome {
        byte_stable: first == second,
        golden_match: json_close(&report, &golden, 1e-9, "$"),
        total,
        oracle_total,
    }
}
