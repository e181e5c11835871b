//! Deterministic generator of noisy-qubit measurement records.
//!
//! Each simulated qubit prepares a state that reads 1 with probability
//! `p1_state`, then passes through an asymmetric readout channel: a 0 is
//! misread as 1 with probability `eps01`, a 1 as 0 with probability `eps10`.
//! Parameters are piecewise constant over calibration epochs, and an optional
//! anomaly window overrides the state preparation for a range of samples.
//!
//! Randomness comes from a ChaCha8 keystream. The key is derived from the
//! master seed, the stream id packs (qubit, sample), and the keystream word
//! position advances with the shot index. Any single sample can therefore be
//! regenerated in isolation, and samples can be produced in parallel.

use chrono::{DateTime, TimeDelta, Utc};
use rand::distr::{Bernoulli, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitseq::{BitSeqError, BitSequence, SampleSet};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid noise model for qubit {qubit_id}: {reason}")]
    InvalidModel { qubit_id: u32, reason: String },
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("sample index {sample_index} not covered by qubit {qubit_id}'s model")]
    IndexOutOfRange { qubit_id: u32, sample_index: u64 },
    #[error(transparent)]
    BitSeq(#[from] BitSeqError),
}

/// Noise parameters in force from `start_sample` until the next epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationEpoch {
    pub start_sample: u64,
    pub p1_state: f64,
    pub eps01: f64,
    pub eps10: f64,
}

impl CalibrationEpoch {
    pub fn effective_bias(&self) -> f64 {
        readout(self.p1_state, self.eps01, self.eps10)
    }
}

fn readout(p1_state: f64, eps01: f64, eps10: f64) -> f64 {
    p1_state * (1.0 - eps10) + (1.0 - p1_state) * eps01
}

/// Replaces `p1_state` for samples `start_sample..=end_sample`; the readout
/// channel of the surrounding epoch still applies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anomaly {
    pub start_sample: u64,
    pub end_sample: u64,
    pub p1_override: f64,
}

impl Anomaly {
    pub fn covers(&self, sample_index: u64) -> bool {
        (self.start_sample..=self.end_sample).contains(&sample_index)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitNoiseModel {
    pub qubit_id: u32,
    pub epochs: Vec<CalibrationEpoch>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anomaly: Option<Anomaly>,
}

impl QubitNoiseModel {
    /// Single epoch with the given parameters.
    pub fn constant(qubit_id: u32, p1_state: f64, eps01: f64, eps10: f64) -> Self {
        QubitNoiseModel {
            qubit_id,
            epochs: vec![CalibrationEpoch {
                start_sample: 0,
                p1_state,
                eps01,
                eps10,
            }],
            anomaly: None,
        }
    }

    /// Noiseless Hadamard measurement.
    pub fn ideal(qubit_id: u32) -> Self {
        QubitNoiseModel::constant(qubit_id, 0.5, 0.0, 0.0)
    }

    pub fn with_anomaly(mut self, anomaly: Anomaly) -> Self {
        self.anomaly = Some(anomaly);
        self
    }

    pub fn source_id(&self) -> String {
        format!("q{}", self.qubit_id)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let invalid = |reason: String| SimError::InvalidModel {
            qubit_id: self.qubit_id,
            reason,
        };
        let first = self
            .epochs
            .first()
            .ok_or_else(|| invalid("no calibration epochs".into()))?;
        if first.start_sample != 0 {
            return Err(invalid(format!(
                "first epoch starts at {}, not 0",
                first.start_sample
            )));
        }
        for pair in self.epochs.windows(2) {
            if pair[1].start_sample <= pair[0].start_sample {
                return Err(invalid("epoch starts must strictly increase".into()));
            }
        }
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(invalid(format!("{name} = {v} outside [0, 1]")))
            }
        };
        for e in &self.epochs {
            unit("p1_state", e.p1_state)?;
            unit("eps01", e.eps01)?;
            unit("eps10", e.eps10)?;
        }
        if let Some(a) = &self.anomaly {
            unit("p1_override", a.p1_override)?;
            if a.end_sample < a.start_sample {
                return Err(invalid("anomaly window ends before it starts".into()));
            }
        }
        Ok(())
    }

    pub fn epoch_at(&self, sample_index: u64) -> Result<&CalibrationEpoch, SimError> {
        self.epochs
            .iter()
            .rev()
            .find(|e| e.start_sample <= sample_index)
            .ok_or(SimError::IndexOutOfRange {
                qubit_id: self.qubit_id,
                sample_index,
            })
    }
}

/// Probability of reading 1 at `sample_index`:
/// p1·(1 − eps10) + (1 − p1)·eps01, with p1 taken from the anomaly window
/// when it covers the sample.
pub fn effective_bias(model: &QubitNoiseModel, sample_index: u64) -> Result<f64, SimError> {
    let epoch = model.epoch_at(sample_index)?;
    let p1 = match &model.anomaly {
        Some(a) if a.covers(sample_index) => a.p1_override,
        _ => epoch.p1_state,
    };
    Ok(readout(p1, epoch.eps01, epoch.eps10))
}

fn stream_id(qubit_id: u32, sample_index: u64) -> u64 {
    (u64::from(qubit_id) << 32) | sample_index
}

/// `shots` Bernoulli draws in shot order. Identical arguments always
/// reproduce the same bits.
pub fn generate_sample(
    model: &QubitNoiseModel,
    sample_index: u64,
    shots: usize,
    master_seed: u64,
) -> Result<BitSequence, SimError> {
    if shots == 0 {
        return Err(SimError::InvalidPlan("shots must be >= 1".into()));
    }
    if sample_index > u64::from(u32::MAX) {
        return Err(SimError::IndexOutOfRange {
            qubit_id: model.qubit_id,
            sample_index,
        });
    }
    let p = effective_bias(model, sample_index)?;
    let coin = Bernoulli::new(p).map_err(|e| SimError::InvalidModel {
        qubit_id: model.qubit_id,
        reason: e.to_string(),
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream_id(model.qubit_id, sample_index));
    rng.set_word_pos(0);
    Ok(
        BitSequence::from_bools((0..shots).map(|_| coin.sample(&mut rng)))
            .with_source_id(model.source_id())
            .with_sample_index(sample_index),
    )
}

fn default_start_time() -> DateTime<Utc> {
    DateTime::parse_from_rfc3339("2019-05-09T11:24:27Z")
        .expect("valid literal")
        .with_timezone(&Utc)
}

/// 579 samples at this spacing span about five days.
pub const DEFAULT_SAMPLE_INTERVAL_SECS: i64 = 746;

fn default_interval() -> i64 {
    DEFAULT_SAMPLE_INTERVAL_SECS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub qubit_models: Vec<QubitNoiseModel>,
    pub samples_per_qubit: u64,
    pub shots_per_sample: usize,
    pub master_seed: u64,
    #[serde(default = "default_start_time")]
    pub start_time: DateTime<Utc>,
    #[serde(default = "default_interval")]
    pub sample_interval_secs: i64,
}

impl ExperimentPlan {
    pub fn new(
        qubit_models: Vec<QubitNoiseModel>,
        samples_per_qubit: u64,
        shots_per_sample: usize,
        master_seed: u64,
    ) -> Self {
        ExperimentPlan {
            description: None,
            qubit_models,
            samples_per_qubit,
            shots_per_sample,
            master_seed,
            start_time: default_start_time(),
            sample_interval_secs: DEFAULT_SAMPLE_INTERVAL_SECS,
        }
    }

    /// Noiseless qubits 0..qubits.
    pub fn unbiased(qubits: u32, samples_per_qubit: u64, shots: usize, master_seed: u64) -> Self {
        let models = (0..qubits).map(QubitNoiseModel::ideal).collect();
        let mut plan = ExperimentPlan::new(models, samples_per_qubit, shots, master_seed);
        plan.description = Some("synthetic: noiseless Hadamard readout on every qubit".into());
        plan
    }

    /// Synthetic readout-asymmetry plan. Across the register, eps10 − eps01
    /// rises from 0 to about 4.6% and the prepared state tilts slightly
    /// towards 0, so the effective bias falls from 0.50 to about 0.47.
    /// Five daily calibration epochs shift the asymmetry by up to ±0.4%.
    /// Error rates stay within 1–6%; magnitudes are plausible, not
    /// device-measured.
    pub fn readout_asymmetry(
        qubits: u32,
        samples_per_qubit: u64,
        shots: usize,
        master_seed: u64,
    ) -> Self {
        const EPOCHS: u64 = 5;
        let round = |x: f64| (x * 1e4).round() / 1e4;
        let span = (qubits.max(2) - 1) as f64;
        let epochs = EPOCHS.min(samples_per_qubit);
        let models = (0..qubits)
            .map(|q| {
                let rank = q as f64 / span;
                let epochs = (0..epochs)
                    .map(|e| {
                        let eps01 = 0.01 + 0.002 * (e % 3) as f64;
                        let jitter = 0.002 * (((q as u64 * 7 + e * 3) % 5) as f64 - 2.0);
                        let asym = (0.046 * rank + jitter).clamp(0.0, 0.06 - eps01);
                        CalibrationEpoch {
                            start_sample: e * samples_per_qubit / epochs,
                            p1_state: round(0.5 - 0.005 * rank),
                            eps01: round(eps01),
                            eps10: round(eps01 + asym),
                        }
                    })
                    .collect();
                QubitNoiseModel {
                    qubit_id: q,
                    epochs,
                    anomaly: None,
                }
            })
            .collect();
        let mut plan = ExperimentPlan::new(models, samples_per_qubit, shots, master_seed);
        plan.description = Some(
            "synthetic: asymmetric readout error (1-6%) with a slight state-preparation tilt, five calibration epochs"
                .into(),
        );
        plan
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.qubit_models.is_empty() {
            return Err(SimError::InvalidPlan("no qubit models".into()));
        }
        if self.samples_per_qubit == 0 {
            return Err(SimError::InvalidPlan(
                "samples_per_qubit must be >= 1".into(),
            ));
        }
        if self.samples_per_qubit > u64::from(u32::MAX) {
            return Err(SimError::InvalidPlan(
                "samples_per_qubit exceeds 2^32 - 1".into(),
            ));
        }
        if self.shots_per_sample == 0 {
            return Err(SimError::InvalidPlan(
                "shots_per_sample must be >= 1".into(),
            ));
        }
        let mut ids: Vec<u32> = self.qubit_models.iter().map(|m| m.qubit_id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(SimError::InvalidPlan("duplicate qubit ids".into()));
        }
        for m in &self.qubit_models {
            m.validate()?;
            if let Some(late) = m
                .epochs
                .iter()
                .find(|e| e.start_sample >= self.samples_per_qubit)
            {
                return Err(SimError::InvalidModel {
                    qubit_id: m.qubit_id,
                    reason: format!(
                        "epoch starting at {} lies beyond the {} planned samples",
                        late.start_sample, self.samples_per_qubit
                    ),
                });
            }
        }
        Ok(())
    }

    pub fn timestamp(&self, sample_index: u64) -> DateTime<Utc> {
        self.start_time + TimeDelta::seconds(self.sample_interval_secs * sample_index as i64)
    }
}

/// One sample set per qubit, in plan order.
pub fn generate_experiment(plan: &ExperimentPlan) -> Result<Vec<SampleSet>, SimError> {
    plan.validate()?;
    plan.qubit_models
        .par_iter()
        .map(|model| {
            let samples = (0..plan.samples_per_qubit)
                .into_par_iter()
                .map(|k| {
                    Ok(
                        generate_sample(model, k, plan.shots_per_sample, plan.master_seed)?
                            .with_timestamp(Some(plan.timestamp(k))),
                    )
                })
                .collect::<Result<Vec<_>, SimError>>()?;
            Ok(SampleSet::new(
                model.source_id(),
                plan.shots_per_sample,
                samples,
            )?)
        })
        .collect()
}
