use super::{check_length, TestDetails, TestError, TestId, TestOutcome, TestParams};
use crate::bitseq::BitSequence;
use crate::special::erfc;

/// Runs test: total number of runs V_n(obs) = Σ(ε_k ⊕ ε_{k+1}) + 1.
///
/// The test only applies when the proportion of ones π satisfies
/// |π − 1/2| < 2/√n; otherwise the p-value is exactly 0.
pub fn runs_test(seq: &BitSequence, params: &TestParams) -> Result<TestOutcome, TestError> {
    check_length(TestId::Runs, seq.len(), params)?;
    let n = seq.len();
    let nf = n as f64;
    let pi = seq.count_ones() as f64 / nf;

    let mut runs = 1u64;
    let mut bits = seq.iter();
    let mut prev = bits.next().expect("non-empty");
    for b in bits {
        runs += u64::from(b != prev);
        prev = b;
    }

    let spread = pi * (1.0 - pi);
    let prerequisite_met = (pi - 0.5).abs() < 2.0 / nf.sqrt() && spread > 0.0;
    let p = if prerequisite_met {
        let num = (runs as f64 - 2.0 * nf * spread).abs();
        erfc(num / (2.0 * (2.0 * nf).sqrt() * spread))?
    } else {
        0.0
    };
    TestOutcome::new(
        TestId::Runs,
        runs as f64,
        p,
        params.alpha,
        TestDetails::Runs {
            n,
            proportion_of_ones: pi,
            runs,
            prerequisite_met,
        },
    )
}
