use serde::{Deserialize, Serialize};

use super::{check_length, TestDetails, TestError, TestId, TestOutcome, TestParams};
use crate::bitseq::BitSequence;
use crate::special::normal_cdf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CusumMode {
    Forward,
    Backward,
}

/// Random-walk excursion test on the ±1 partial sums.
///
/// z is the largest |S_i| over prefixes (forward) or suffixes (backward).
pub fn cusum_test(
    seq: &BitSequence,
    mode: CusumMode,
    params: &TestParams,
) -> Result<TestOutcome, TestError> {
    if seq.is_empty() {
        return Err(TestError::DegenerateZ);
    }
    let test_id = match mode {
        CusumMode::Forward => TestId::CusumForward,
        CusumMode::Backward => TestId::CusumBackward,
    };
    check_length(test_id, seq.len(), params)?;
    let n = seq.len();
    let step = |b: u8| if b == 1 { 1i64 } else { -1 };
    let mut sum = 0i64;
    let mut z = 0u64;
    let mut visit = |b: u8| {
        sum += step(b);
        z = z.max(sum.unsigned_abs());
    };
    match mode {
        CusumMode::Forward => seq.iter().for_each(&mut visit),
        CusumMode::Backward => (0..n).rev().for_each(|i| visit(seq.bit(i))),
    }
    let p = cusum_p_value(n, z)?;
    TestOutcome::new(
        test_id,
        z as f64,
        p,
        params.alpha,
        TestDetails::Cusum {
            mode,
            n,
            max_excursion: z,
        },
    )
}

/// Φ(hi) − Φ(lo), taken from the upper tail when both points are positive so
/// that differences of values near 1 keep their precision.
fn normal_mass(lo: f64, hi: f64) -> Result<f64, TestError> {
    if lo >= 0.0 {
        Ok(normal_cdf(-lo)? - normal_cdf(-hi)?)
    } else {
        Ok(normal_cdf(hi)? - normal_cdf(lo)?)
    }
}

/// p-value of a maximal excursion z over a walk of n steps:
///
/// 1 − Σ_k [Φ((4k+1)z/√n) − Φ((4k−1)z/√n)] + Σ_k [Φ((4k+3)z/√n) − Φ((4k+1)z/√n)]
///
/// with k from ⌊(−n/z+1)/4⌋ (first sum) or ⌊(−n/z−3)/4⌋ (second sum) up to
/// ⌊(n/z−1)/4⌋. Empty ranges contribute nothing.
///
/// The series is a continuous-limit approximation and exceeds 1 for z = 1 on
/// walks shorter than about 50 steps, where the exact tail is 1; the result
/// is capped there.
pub fn cusum_p_value(n: usize, z: u64) -> Result<f64, TestError> {
    if z == 0 {
        return Err(TestError::DegenerateZ);
    }
    let nf = n as f64;
    let zf = z as f64;
    let scale = zf / nf.sqrt();
    let upper = ((nf / zf - 1.0) / 4.0).floor() as i64;
    let lower_first = ((-nf / zf + 1.0) / 4.0).floor() as i64;
    let lower_second = ((-nf / zf - 3.0) / 4.0).floor() as i64;

    let mut first = 0.0;
    for k in lower_first..=upper {
        let k = k as f64;
        first += normal_mass((4.0 * k - 1.0) * scale, (4.0 * k + 1.0) * scale)?;
    }
    let mut second = 0.0;
    for k in lower_second..=upper {
        let k = k as f64;
        second += normal_mass((4.0 * k + 1.0) * scale, (4.0 * k + 3.0) * scale)?;
    }
    Ok((1.0 - first + second).min(1.0))
}
