use std::cell::RefCell;
use std::f64::consts::FRAC_1_SQRT_2;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{check_length, TestDetails, TestError, TestId, TestOutcome, TestParams};
use crate::bitseq::BitSequence;
use crate::special::erfc;

/// The peak-height threshold in force, recorded in reports.
pub const DFT_THRESHOLD_FORMULA: &str = "T = sqrt(n * ln(1/0.05))";

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Spectral test for periodic features.
///
/// Transforms X = 2ε − 1, takes moduli of the first ⌊n/2⌋ coefficients and
/// counts those below T = √(n·ln 20). Under randomness about 95% should be
/// below; d = (0.95·n/2 − N_obs)/√(n·0.95·0.05/4) and p = erfc(|d|/√2).
pub fn dft_test(seq: &BitSequence, params: &TestParams) -> Result<TestOutcome, TestError> {
    check_length(TestId::Dft, seq.len(), params)?;
    let n = seq.len();
    let mut buf: Vec<Complex<f64>> = seq
        .iter()
        .map(|b| Complex::new(if b == 1 { 1.0 } else { -1.0 }, 0.0))
        .collect();
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n));
    fft.process(&mut buf);

    let nf = n as f64;
    let threshold = (nf * (1.0f64 / 0.05).ln()).sqrt();
    let observed_below = buf[..n / 2].iter().filter(|c| c.norm() < threshold).count() as u64;
    let expected_below = 0.95 * nf / 2.0;
    let d = (expected_below - observed_below as f64) / (nf * 0.95 * 0.05 / 4.0).sqrt();
    let p = erfc(d.abs() * FRAC_1_SQRT_2)?;
    TestOutcome::new(
        TestId::Dft,
        d,
        p,
        params.alpha,
        TestDetails::Dft {
            n,
            threshold,
            threshold_formula: DFT_THRESHOLD_FORMULA.to_string(),
            expected_below,
            observed_below,
        },
    )
}
