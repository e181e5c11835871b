//! The eight bitstream tests: frequency, block frequency, runs, longest run
//! of ones, spectral (DFT), approximate entropy and forward/backward
//! cumulative sums. Each test is a pure function of the bits and
//! [`TestParams`].

mod approx_entropy;
mod block_frequency;
mod cusum;
mod dft;
mod frequency;
mod longest_run;
mod runs;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitseq::BitSequence;
use crate::special::{MathError, Probability};

pub use approx_entropy::{approx_entropy_test, pattern_phi};
pub use block_frequency::block_frequency_test;
pub use cusum::{cusum_p_value, cusum_test, CusumMode};
pub use dft::{dft_test, DFT_THRESHOLD_FORMULA};
pub use frequency::frequency_test;
pub use longest_run::{longest_run_of_ones, longest_run_test, LongestRunTable};
pub use runs::runs_test;

/// Test identifiers, ordered as the suite reports them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestId {
    Frequency,
    BlockFrequency,
    Runs,
    LongestRun,
    Dft,
    ApproxEntropy,
    CusumForward,
    CusumBackward,
}

impl TestId {
    pub const ALL: [TestId; 8] = [
        TestId::Frequency,
        TestId::BlockFrequency,
        TestId::Runs,
        TestId::LongestRun,
        TestId::Dft,
        TestId::ApproxEntropy,
        TestId::CusumForward,
        TestId::CusumBackward,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TestId::Frequency => "frequency",
            TestId::BlockFrequency => "block_frequency",
            TestId::Runs => "runs",
            TestId::LongestRun => "longest_run",
            TestId::Dft => "dft",
            TestId::ApproxEntropy => "approx_entropy",
            TestId::CusumForward => "cusum_forward",
            TestId::CusumBackward => "cusum_backward",
        }
    }

    /// Smallest sequence length for which the test's reference distribution
    /// is considered meaningful.
    pub fn min_length(self) -> usize {
        match self {
            TestId::Frequency
            | TestId::BlockFrequency
            | TestId::Runs
            | TestId::CusumForward
            | TestId::CusumBackward => 100,
            TestId::LongestRun => 128,
            TestId::Dft => 1000,
            TestId::ApproxEntropy => 65,
        }
    }
}

impl fmt::Display for TestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TestId {
    type Err = TestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TestId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| TestError::InvalidParams(format!("unknown test id {s:?}")))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TestError {
    #[error("{test}: sequence of {actual} bits is shorter than the minimum {min}")]
    SampleTooShort {
        test: TestId,
        min: usize,
        actual: usize,
    },
    #[error("empty sequence")]
    EmptySequence,
    #[error("block size {block_size} exceeds sequence length {n}")]
    BlockTooLarge { block_size: usize, n: usize },
    #[error("pattern length {m} too long for sequence length {n}")]
    PatternTooLong { m: usize, n: usize },
    #[error("maximum partial-sum excursion is zero")]
    DegenerateZ,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Math(#[from] MathError),
}

/// Knobs shared by all tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestParams {
    /// Per-sample significance level.
    pub alpha: f64,
    /// Block length M for the block-frequency test.
    pub block_size: usize,
    /// Pattern length m for approximate entropy.
    pub apen_m: usize,
    /// Reject sequences shorter than each test's minimum length.
    pub enforce_min_length: bool,
}

impl Default for TestParams {
    fn default() -> Self {
        TestParams {
            alpha: 0.01,
            block_size: 128,
            apen_m: 2,
            enforce_min_length: true,
        }
    }
}

impl TestParams {
    /// Defaults with minimum-length enforcement switched off.
    pub fn unenforced() -> Self {
        TestParams {
            enforce_min_length: false,
            ..TestParams::default()
        }
    }

    pub fn validate(&self) -> Result<(), TestError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(TestError::InvalidParams(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.block_size < 2 {
            return Err(TestError::InvalidParams(format!(
                "block size must be >= 2, got {}",
                self.block_size
            )));
        }
        if self.apen_m < 1 {
            return Err(TestError::InvalidParams("apen m must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-test intermediate values, kept for audit trails and reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestDetails {
    Frequency {
        n: usize,
        partial_sum: i64,
    },
    BlockFrequency {
        block_size: usize,
        blocks: usize,
        discarded_bits: usize,
    },
    Runs {
        n: usize,
        proportion_of_ones: f64,
        runs: u64,
        prerequisite_met: bool,
    },
    LongestRun {
        block_size: usize,
        blocks: usize,
        discarded_bits: usize,
        class_counts: Vec<u64>,
    },
    Dft {
        n: usize,
        threshold: f64,
        threshold_formula: String,
        expected_below: f64,
        observed_below: u64,
    },
    ApproxEntropy {
        m: usize,
        phi_m: f64,
        phi_m_plus_1: f64,
    },
    Cusum {
        mode: CusumMode,
        n: usize,
        max_excursion: u64,
    },
}

/// One test applied to one sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub test_id: TestId,
    pub statistic: f64,
    pub p_value: Probability,
    pub alpha: f64,
    pub passed: bool,
    pub details: TestDetails,
}

impl TestOutcome {
    fn new(
        test_id: TestId,
        statistic: f64,
        p_value: f64,
        alpha: f64,
        details: TestDetails,
    ) -> Result<Self, TestError> {
        if !statistic.is_finite() {
            return Err(MathError::NonFiniteInput(statistic).into());
        }
        let p_value = Probability::new(snap_rounding(p_value))?;
        Ok(TestOutcome {
            test_id,
            statistic,
            p_value,
            alpha,
            passed: p_value.value() >= alpha,
            details,
        })
    }
}

/// Sums of CDF differences can land a few ulps outside [0, 1]. Residue within
/// 1e-12 of a bound is snapped to it; anything further out stays out of range
/// and is rejected by `Probability`.
fn snap_rounding(p: f64) -> f64 {
    if (-1e-12..0.0).contains(&p) {
        0.0
    } else if p > 1.0 && p <= 1.0 + 1e-12 {
        1.0
    } else {
        p
    }
}

fn check_length(test: TestId, n: usize, params: &TestParams) -> Result<(), TestError> {
    params.validate()?;
    if n == 0 {
        return Err(TestError::EmptySequence);
    }
    if params.enforce_min_length && n < test.min_length() {
        return Err(TestError::SampleTooShort {
            test,
            min: test.min_length(),
            actual: n,
        });
    }
    Ok(())
}

/// Runs one test by id.
pub fn run_test(
    test: TestId,
    seq: &BitSequence,
    params: &TestParams,
) -> Result<TestOutcome, TestError> {
    match test {
        TestId::Frequency => frequency_test(seq, params),
        TestId::BlockFrequency => block_frequency_test(seq, params),
        TestId::Runs => runs_test(seq, params),
        TestId::LongestRun => longest_run_test(seq, params),
        TestId::Dft => dft_test(seq, params),
        TestId::ApproxEntropy => approx_entropy_test(seq, params),
        TestId::CusumForward => cusum_test(seq, CusumMode::Forward, params),
        TestId::CusumBackward => cusum_test(seq, CusumMode::Backward, params),
    }
}
