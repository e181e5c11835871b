//! Entropy measures and bias-stability analytics.
//!
//! Min-entropy H∞ = −log₂ max(p̂, 1 − p̂) and Shannon entropy are plug-in
//! estimates from the per-sequence proportion of ones p̂. The deviation series
//! tracks D_i = (#ones in the first i bits) − i/2, whose slope exposes drift
//! that a single whole-sequence histogram hides.

use std::io::Write;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitseq::{BitSequence, SampleSet};
use crate::special::{inverse_erfc, MathError};

#[derive(Debug, Error)]
pub enum EntropyError {
    #[error("empty sequence")]
    EmptySequence,
    #[error("sample set is empty")]
    EmptySet,
    #[error("argument outside domain: {0}")]
    DomainError(String),
    #[error(transparent)]
    Math(#[from] MathError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn proportion_of_ones(seq: &BitSequence) -> Result<f64, EntropyError> {
    if seq.is_empty() {
        return Err(EntropyError::EmptySequence);
    }
    Ok(seq.count_ones() as f64 / seq.len() as f64)
}

pub fn min_entropy_of_proportion(p: f64) -> f64 {
    // max(p, 1 − p) = 1 gives −0.0; normalise the sign
    (-p.max(1.0 - p).log2()).max(0.0)
}

pub fn shannon_entropy_of_proportion(p: f64) -> f64 {
    let term = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    term(p) + term(1.0 - p)
}

/// −log₂ of the larger empirical bit frequency, in [0, 1].
pub fn min_entropy(seq: &BitSequence) -> Result<f64, EntropyError> {
    proportion_of_ones(seq).map(min_entropy_of_proportion)
}

/// Empirical Shannon entropy in bits, with 0·log 0 = 0.
pub fn shannon_entropy(seq: &BitSequence) -> Result<f64, EntropyError> {
    proportion_of_ones(seq).map(shannon_entropy_of_proportion)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyPoint {
    pub sample_index: u64,
    pub timestamp: Option<DateTime<Utc>>,
    pub min_entropy: f64,
    pub shannon_entropy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropySeries {
    pub source_id: String,
    pub points: Vec<EntropyPoint>,
}

impl EntropySeries {
    pub fn min_entropies(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.min_entropy).collect()
    }

    /// Columns: sample_index, timestamp (RFC 3339 or empty), min_entropy,
    /// shannon_entropy.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), EntropyError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "sample_index",
            "timestamp",
            "min_entropy",
            "shannon_entropy",
        ])?;
        for p in &self.points {
            w.write_record([
                p.sample_index.to_string(),
                p.timestamp.map(|t| t.to_rfc3339()).unwrap_or_default(),
                p.min_entropy.to_string(),
                p.shannon_entropy.map(|h| h.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// One point per sample, in chronological order.
pub fn entropy_series(set: &SampleSet) -> Result<EntropySeries, EntropyError> {
    if set.is_empty() {
        return Err(EntropyError::EmptySet);
    }
    let points = set
        .samples()
        .iter()
        .map(|s| {
            let p = proportion_of_ones(s)?;
            Ok(EntropyPoint {
                sample_index: s.sample_index(),
                timestamp: s.timestamp(),
                min_entropy: min_entropy_of_proportion(p),
                shannon_entropy: Some(shannon_entropy_of_proportion(p)),
            })
        })
        .collect::<Result<_, EntropyError>>()?;
    Ok(EntropySeries {
        source_id: set.source_id().to_string(),
        points,
    })
}

/// Range of proportions of ones for which an n-bit sequence passes the
/// frequency test at level α: |p̂ − 1/2| ≤ z*/(2√n) with z* = √2·erfc⁻¹(α).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProportionRange {
    pub n: usize,
    pub alpha: f64,
    pub z_star: f64,
    pub halfwidth: f64,
    pub lower: f64,
    pub upper: f64,
}

impl ProportionRange {
    pub fn contains(&self, proportion: f64) -> bool {
        (proportion - 0.5).abs() <= self.halfwidth
    }
}

pub fn proportion_band_for_length(n: usize, alpha: f64) -> Result<ProportionRange, EntropyError> {
    if n == 0 {
        return Err(EntropyError::DomainError("length must be >= 1".into()));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(EntropyError::DomainError(format!(
            "alpha {alpha} not in (0, 1]"
        )));
    }
    let z_star = if alpha == 1.0 {
        0.0
    } else {
        std::f64::consts::SQRT_2 * inverse_erfc(alpha)?
    };
    let halfwidth = z_star / (2.0 * (n as f64).sqrt());
    Ok(ProportionRange {
        n,
        alpha,
        z_star,
        halfwidth,
        lower: 0.5 - halfwidth,
        upper: 0.5 + halfwidth,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationPoint {
    pub bit_index: u64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationSeries {
    pub source_id: String,
    pub stride: usize,
    pub points: Vec<DeviationPoint>,
}

impl DeviationSeries {
    /// Columns: bit_index, deviation.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), EntropyError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["bit_index", "deviation"])?;
        for p in &self.points {
            w.write_record([p.bit_index.to_string(), p.deviation.to_string()])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// D_i = ones(ε_1..ε_i) − i/2, emitted at i = stride, 2·stride, … and at n.
pub fn deviation_series(seq: &BitSequence, stride: usize) -> Result<DeviationSeries, EntropyError> {
    if seq.is_empty() {
        return Err(EntropyError::EmptySequence);
    }
    if stride == 0 {
        return Err(EntropyError::DomainError("stride must be >= 1".into()));
    }
    let n = seq.len();
    let mut points = Vec::with_capacity(n / stride + 1);
    let mut ones = 0u64;
    for (i, b) in seq.iter().enumerate() {
        ones += u64::from(b);
        let index = i + 1;
        if index % stride == 0 || index == n {
            // 2·ones − i is an integer; halving it is exact in f64
            points.push(DeviationPoint {
                bit_index: index as u64,
                deviation: (2.0 * ones as f64 - index as f64) / 2.0,
            });
        }
    }
    Ok(DeviationSeries {
        source_id: seq.source_id().to_string(),
        stride,
        points,
    })
}
