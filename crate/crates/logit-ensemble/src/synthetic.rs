//! Deterministic generator for a wine-quality-shaped CSV: 11 chemical
//! features plus an ordinal `quality` column, semicolon-delimited with quoted
//! headers, matching the layout of the public red-wine file.
//!
//! Feature moments and the quality distribution mirror the public dataset.
//! Rows fall into two latent subgroups with overlapping feature clouds, and
//! quality is driven by a latent score whose direction differs between the
//! subgroups: part of the signal is shared, part flips sign with the group.
//! No single linear model can serve both groups at once, while a routed
//! ensemble can, which is the internal-cluster structure the models under
//! test are meant to pick up.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Per feature: (name, mean, std, shared latent weight, group-flipped latent
/// weight, subgroup mean offset in std units).
///
/// The shared weights act identically in both subgroups; the flipped weights
/// enter with opposite sign in subgroup B. The offsets separate the two
/// subgroup clouds enough for a soft router to find them, with substantial
/// overlap left.
const FEATURES: [(&str, f64, f64, f64, f64, f64); 11] = [
    ("fixed acidity", 8.32, 1.74, 0.0, 0.50, 0.0),
    ("volatile acidity", 0.53, 0.18, -0.50, 0.0, 0.0),
    ("citric acid", 0.27, 0.19, 0.0, 0.0, 1.20),
    ("residual sugar", 2.54, 1.41, 0.0, 0.0, -1.20),
    ("chlorides", 0.087, 0.047, 0.0, -0.40, 0.0),
    ("free sulfur dioxide", 15.9, 10.5, 0.0, 0.30, 0.0),
    ("total sulfur dioxide", 46.5, 32.9, -0.20, 0.0, 0.0),
    ("density", 0.9967, 0.0019, -0.30, 0.0, 0.0),
    ("pH", 3.31, 0.15, 0.0, 0.80, 0.0),
    ("sulphates", 0.66, 0.17, 0.30, 0.0, 0.0),
    ("alcohol", 10.42, 1.07, 1.00, 0.0, 0.0),
];

/// Quality levels 3..=8 with the public dataset's proportions (out of 1599).
const QUALITY_COUNTS: [(i64, usize); 6] = [(3, 10), (4, 53), (5, 681), (6, 638), (7, 199), (8, 18)];

/// Std of the latent noise relative to the unit-norm signal directions.
const LATENT_NOISE: f64 = 0.5;

pub struct SyntheticTable {
    pub feature_names: Vec<String>,
    pub features: Vec<Vec<f64>>,
    pub quality: Vec<i64>,
}

/// Generates `rows` samples; the same `(rows, seed)` pair always produces the
/// same table.
pub fn generate(rows: usize, seed: u64) -> Result<SyntheticTable> {
    if rows < QUALITY_COUNTS.len() {
        return Err(Error::Config(format!(
            "need at least {} rows, got {rows}",
            QUALITY_COUNTS.len()
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).unwrap();
    let shared_norm: f64 = FEATURES.iter().map(|f| f.3 * f.3).sum::<f64>().sqrt();
    let flipped_norm: f64 = FEATURES.iter().map(|f| f.4 * f.4).sum::<f64>().sqrt();

    let mut features = Vec::with_capacity(rows);
    let mut latent = Vec::with_capacity(rows);
    for _ in 0..rows {
        let group_sign = if rng.random_range(0..2) == 0 { 1.0 } else { -1.0 };
        let mut row = Vec::with_capacity(FEATURES.len());
        let mut score = 0.0;
        for &(_, mean, std, shared, flipped, offset) in &FEATURES {
            let z: f64 = unit.sample(&mut rng);
            row.push(mean + std * (z + group_sign * offset / 2.0));
            score += (shared / shared_norm + group_sign * flipped / flipped_norm) * z;
        }
        score += LATENT_NOISE * unit.sample(&mut rng);
        features.push(row);
        latent.push(score);
    }

    // Rank the latent scores and hand out quality levels by the target
    // proportions, lowest scores first.
    let mut order: Vec<usize> = (0..rows).collect();
    order.sort_by(|&a, &b| latent[a].partial_cmp(&latent[b]).unwrap());
    let total: usize = QUALITY_COUNTS.iter().map(|c| c.1).sum();
    let mut quality = vec![0i64; rows];
    let mut assigned = 0usize;
    let mut cumulative = 0usize;
    for (level_idx, &(level, count)) in QUALITY_COUNTS.iter().enumerate() {
        cumulative += count;
        let upto = if level_idx + 1 == QUALITY_COUNTS.len() {
            rows
        } else {
            (cumulative * rows + total / 2) / total
        };
        for &idx in &order[assigned..upto.max(assigned)] {
            quality[idx] = level;
        }
        assigned = assigned.max(upto);
    }

    Ok(SyntheticTable {
        feature_names: FEATURES.iter().map(|f| f.0.to_string()).collect(),
        features,
        quality,
    })
}

/// Writes the table in the public file's format: semicolon delimiter, quoted
/// header, `quality` last.
pub fn write_csv(table: &SyntheticTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    let mut header: Vec<String> = table
        .feature_names
        .iter()
        .map(|n| format!("\"{n}\""))
        .collect();
    header.push("\"quality\"".to_string());
    out.push_str(&header.join(";"));
    out.push('\n');
    for (row, q) in table.features.iter().zip(&table.quality) {
        let mut cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        cells.push(q.to_string());
        out.push_str(&cells.join(";"));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}
