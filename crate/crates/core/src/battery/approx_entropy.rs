use std::f64::consts::LN_2;

use super::{check_length, TestDetails, TestError, TestId, TestOutcome, TestParams};
use crate::bitseq::BitSequence;
use crate::special::upper_igamc;

/// Patterns are counted in a dense table of 2^(m+1) slots.
const MAX_PATTERN_LEN: usize = 24;

/// φ_b = Σ (c/n)·ln(c/n) over the counts c of all overlapping b-bit windows
/// of the sequence extended cyclically by its first b − 1 bits. Empty
/// patterns contribute nothing.
pub fn pattern_phi(bits: &[u8], block: usize) -> f64 {
    let n = bits.len();
    if n == 0 || block == 0 {
        return 0.0;
    }
    let mask = (1usize << block) - 1;
    let mut counts = vec![0u32; 1 << block];
    let mut window = 0usize;
    for i in 0..block - 1 {
        window = (window << 1) | usize::from(bits[i % n]);
    }
    for i in 0..n {
        window = ((window << 1) | usize::from(bits[(i + block - 1) % n])) & mask;
        counts[window] += 1;
    }
    let nf = n as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let f = c as f64 / nf;
            f * f.ln()
        })
        .sum()
}

/// Approximate entropy: compares overlapping m-bit and (m+1)-bit pattern
/// frequencies.
///
/// obs = 2n(ln 2 − (φ_m − φ_{m+1})), p = Q(2^(m−1), obs/2).
pub fn approx_entropy_test(
    seq: &BitSequence,
    params: &TestParams,
) -> Result<TestOutcome, TestError> {
    check_length(TestId::ApproxEntropy, seq.len(), params)?;
    let n = seq.len();
    let m = params.apen_m;
    if m + 1 > MAX_PATTERN_LEN || m + 1 > n {
        return Err(TestError::PatternTooLong { m, n });
    }
    if params.enforce_min_length && m + 1 >= n.ilog2() as usize {
        return Err(TestError::PatternTooLong { m, n });
    }
    let bits = seq.to_bits();
    let phi_m = pattern_phi(&bits, m);
    let phi_m_plus_1 = pattern_phi(&bits, m + 1);
    // φ_m − φ_{m+1} never exceeds ln 2 in exact arithmetic; only rounding can
    // push obs a hair below zero.
    let obs = (2.0 * n as f64 * (LN_2 - (phi_m - phi_m_plus_1))).max(0.0);
    let p = upper_igamc(2f64.powi(m as i32 - 1), obs / 2.0)?;
    TestOutcome::new(
        TestId::ApproxEntropy,
        obs,
        p,
        params.alpha,
        TestDetails::ApproxEntropy {
            m,
            phi_m,
            phi_m_plus_1,
        },
    )
}
