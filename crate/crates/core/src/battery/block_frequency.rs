use super::{check_length, TestDetails, TestError, TestId, TestOutcome, TestParams};
use crate::bitseq::BitSequence;
use crate::special::upper_igamc;

/// Frequency within blocks of `params.block_size` bits.
///
/// χ²_obs = 4M Σ(π_i − 1/2)² over N = ⌊n/M⌋ blocks, p = Q(N/2, χ²_obs/2).
/// Trailing bits that do not fill a block are ignored and reported.
pub fn block_frequency_test(
    seq: &BitSequence,
    params: &TestParams,
) -> Result<TestOutcome, TestError> {
    check_length(TestId::BlockFrequency, seq.len(), params)?;
    let n = seq.len();
    let block_size = params.block_size;
    if block_size > n {
        return Err(TestError::BlockTooLarge { block_size, n });
    }
    let blocks = n / block_size;

    // 4M(π − 1/2)² = (2c − M)²/M, summed in integers to keep the statistic exact.
    let mut sum_sq: u128 = 0;
    let mut bits = seq.iter();
    for _ in 0..blocks {
        let ones = bits.by_ref().take(block_size).filter(|&b| b == 1).count() as i128;
        let dev = 2 * ones - block_size as i128;
        sum_sq += (dev * dev) as u128;
    }
    let chi2 = sum_sq as f64 / block_size as f64;
    let p = upper_igamc(blocks as f64 / 2.0, chi2 / 2.0)?;
    TestOutcome::new(
        TestId::BlockFrequency,
        chi2,
        p,
        params.alpha,
        TestDetails::BlockFrequency {
            block_size,
            blocks,
            discarded_bits: n - blocks * block_size,
        },
    )
}
