//! Statistical randomness testing for bit sources.
//!
//! - [`bitseq`]: bit sequences, sample sets and manifest ingestion
//! - [`special`]: erfc, regularized incomplete gamma, normal CDF
//! - [`battery`]: the eight per-sample tests
//! - [`suite`]: pass-proportion bands and p-value uniformity over sample sets
//! - [`entropy`]: min-/Shannon entropy series and proportion drift analytics
//! - [`sim`]: deterministic noisy-qubit sample generator

pub mod battery;
pub mod bitseq;
pub mod entropy;
pub mod sim;
pub mod special;
pub mod suite;

pub use battery::{run_test, TestError, TestId, TestOutcome, TestParams};
pub use bitseq::{BitSeqError, BitSequence, Encoding, Manifest, SampleSet};
pub use sim::{ExperimentPlan, QubitNoiseModel};
pub use special::{MathError, Probability};
