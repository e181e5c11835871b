use std::f64::consts::FRAC_1_SQRT_2;

use super::{check_length, TestDetails, TestError, TestId, TestOutcome, TestParams};
use crate::bitseq::BitSequence;
use crate::special::erfc;

/// Monobit test: is the overall proportion of ones plausible for a fair source?
///
/// With X_i = 2ε_i − 1 and S_n = ΣX_i, the statistic is s_obs = |S_n|/√n and
/// the p-value erfc(s_obs/√2).
pub fn frequency_test(seq: &BitSequence, params: &TestParams) -> Result<TestOutcome, TestError> {
    check_length(TestId::Frequency, seq.len(), params)?;
    let n = seq.len();
    let partial_sum = 2 * seq.count_ones() as i64 - n as i64;
    let s_obs = partial_sum.unsigned_abs() as f64 / (n as f64).sqrt();
    let p = erfc(s_obs * FRAC_1_SQRT_2)?;
    TestOutcome::new(
        TestId::Frequency,
        s_obs,
        p,
        params.alpha,
        TestDetails::Frequency { n, partial_sum },
    )
}
