use super::{check_length, TestDetails, TestError, TestId, TestOutcome, TestParams};
use crate::bitseq::BitSequence;
use crate::special::upper_igamc;

/// Block layout and reference class probabilities for one block size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LongestRunTable {
    /// Bits per block (M).
    pub block_size: usize,
    /// Blocks examined (N); bits beyond N·M are discarded.
    pub blocks: usize,
    /// Sequences shorter than this cannot use the table.
    pub min_length: usize,
    /// Longest-run length that still falls into class v_0.
    pub lowest_class_max: usize,
    /// π_0..π_K.
    pub probabilities: &'static [f64],
}

pub const TABLE_M8: LongestRunTable = LongestRunTable {
    block_size: 8,
    blocks: 16,
    min_length: 128,
    lowest_class_max: 1,
    probabilities: &[0.2148, 0.3672, 0.2305, 0.1875],
};

pub const TABLE_M128: LongestRunTable = LongestRunTable {
    block_size: 128,
    blocks: 49,
    min_length: 6272,
    lowest_class_max: 4,
    probabilities: &[0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124],
};

pub const TABLE_M10000: LongestRunTable = LongestRunTable {
    block_size: 10_000,
    blocks: 75,
    min_length: 750_000,
    lowest_class_max: 10,
    probabilities: &[0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727],
};

impl LongestRunTable {
    /// Largest table whose minimum length `n` satisfies.
    pub fn for_length(n: usize) -> Option<&'static LongestRunTable> {
        [&TABLE_M10000, &TABLE_M128, &TABLE_M8]
            .into_iter()
            .find(|t| n >= t.min_length)
    }

    /// K, the index of the last class.
    pub fn k(&self) -> usize {
        self.probabilities.len() - 1
    }

    pub fn classify(&self, longest_run: usize) -> usize {
        longest_run
            .max(self.lowest_class_max)
            .saturating_sub(self.lowest_class_max)
            .min(self.k())
    }

    /// χ² = Σ (v_i − Nπ_i)² / (Nπ_i) over the class counts.
    pub fn chi_square(&self, class_counts: &[u64]) -> f64 {
        let n = self.blocks as f64;
        class_counts
            .iter()
            .zip(self.probabilities)
            .map(|(&v, &pi)| {
                let expected = n * pi;
                (v as f64 - expected).powi(2) / expected
            })
            .sum()
    }

    pub fn p_value(&self, chi_square: f64) -> Result<f64, TestError> {
        Ok(upper_igamc(self.k() as f64 / 2.0, chi_square / 2.0)?)
    }
}

fn longest_run_in(bits: impl Iterator<Item = u8>) -> usize {
    let (mut best, mut current) = (0usize, 0usize);
    for b in bits {
        if b == 1 {
            current += 1;
            best = best.max(current);
        } else {
            current = 0;
        }
    }
    best
}

/// Length of the longest maximal run of ones; 0 for empty or all-zero input.
pub fn longest_run_of_ones(block: &BitSequence) -> usize {
    longest_run_in(block.iter())
}

/// Longest run of ones within fixed-size blocks, compared against the
/// reference class distribution for the block size chosen by sequence length.
pub fn longest_run_test(seq: &BitSequence, params: &TestParams) -> Result<TestOutcome, TestError> {
    check_length(TestId::LongestRun, seq.len(), params)?;
    let n = seq.len();
    // No block layout exists below 128 bits even with enforcement off.
    let table = LongestRunTable::for_length(n).ok_or(TestError::SampleTooShort {
        test: TestId::LongestRun,
        min: TABLE_M8.min_length,
        actual: n,
    })?;

    let mut class_counts = vec![0u64; table.k() + 1];
    let mut bits = seq.iter();
    for _ in 0..table.blocks {
        let run = longest_run_in(bits.by_ref().take(table.block_size));
        class_counts[table.classify(run)] += 1;
    }
    let chi2 = table.chi_square(&class_counts);
    let p = table.p_value(chi2)?;
    TestOutcome::new(
        TestId::LongestRun,
        chi2,
        p,
        params.alpha,
        TestDetails::LongestRun {
            block_size: table.block_size,
            blocks: table.blocks,
            discarded_bits: n - table.blocks * table.block_size,
            class_counts,
        },
    )
}
