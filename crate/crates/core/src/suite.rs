//! Batch protocol over a sample set: every selected test on every sample,
//! then per-test pass-proportion banding and p-value uniformity.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::battery::{run_test, TestError, TestId, TestOutcome, TestParams, DFT_THRESHOLD_FORMULA};
use crate::bitseq::SampleSet;
use crate::special::{upper_igamc, MathError, Probability};

/// Uniformity of p-values is judged at this significance level.
pub const UNIFORMITY_ALPHA: f64 = 0.0001;
/// Fewest p-values the ten-bin chi-square check accepts.
pub const MIN_UNIFORMITY_SAMPLES: usize = 55;
pub const UNIFORMITY_BINS: usize = 10;

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("sample set is empty")]
    EmptySet,
    #[error("no tests selected")]
    NoTestsSelected,
    #[error("sample {sample_index}: {source}")]
    Test {
        sample_index: u64,
        #[source]
        source: TestError,
    },
    #[error("uniformity check needs at least {min} p-values, got {actual}")]
    TooFewSamples { min: usize, actual: usize },
    #[error("argument outside domain: {0}")]
    DomainError(String),
    #[error(transparent)]
    Math(#[from] MathError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Acceptable pass proportion (1 − α) ± c·√(α(1 − α)/m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProportionBand {
    pub alpha: f64,
    pub sample_count: usize,
    pub coefficient: f64,
    pub center: f64,
    pub halfwidth: f64,
}

impl ProportionBand {
    /// Pass/fail threshold: a proportion must be strictly above it.
    pub fn lower(&self) -> f64 {
        self.center - self.halfwidth
    }

    /// Upper edge, capped at 1.
    pub fn upper(&self) -> f64 {
        (self.center + self.halfwidth).min(1.0)
    }

    pub fn contains(&self, proportion: f64) -> bool {
        proportion > self.lower() && proportion <= self.upper()
    }
}

pub fn proportion_band(
    alpha: f64,
    sample_count: usize,
    coefficient: f64,
) -> Result<ProportionBand, SuiteError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(SuiteError::DomainError(format!(
            "alpha {alpha} not in (0, 1)"
        )));
    }
    if sample_count == 0 {
        return Err(SuiteError::DomainError("sample count must be >= 1".into()));
    }
    if !(coefficient > 0.0 && coefficient.is_finite()) {
        return Err(SuiteError::DomainError(format!(
            "band coefficient must be > 0, got {coefficient}"
        )));
    }
    Ok(ProportionBand {
        alpha,
        sample_count,
        coefficient,
        center: 1.0 - alpha,
        halfwidth: coefficient * (alpha * (1.0 - alpha) / sample_count as f64).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Uniformity {
    pub bin_counts: [u64; UNIFORMITY_BINS],
    pub chi2: f64,
    pub p_value: Probability,
    pub ok: bool,
}

/// Bins are [k/10, (k+1)/10) for k = 0..9, with 1.0 placed in the last bin.
pub fn bin_p_values(p_values: &[Probability]) -> [u64; UNIFORMITY_BINS] {
    let mut counts = [0u64; UNIFORMITY_BINS];
    for p in p_values {
        let v = p.value();
        // compare against k/10 directly so that e.g. 0.3 lands in bin 3
        let bin = (1..UNIFORMITY_BINS)
            .take_while(|&k| v >= k as f64 / 10.0)
            .count();
        counts[bin] += 1;
    }
    counts
}

/// χ² = Σ (count_i − m/10)² / (m/10) and p = Q(9/2, χ²/2).
pub fn uniformity_from_counts(counts: &[u64; UNIFORMITY_BINS]) -> Result<Uniformity, SuiteError> {
    let total: u64 = counts.iter().sum();
    if (total as usize) < MIN_UNIFORMITY_SAMPLES {
        return Err(SuiteError::TooFewSamples {
            min: MIN_UNIFORMITY_SAMPLES,
            actual: total as usize,
        });
    }
    let expected = total as f64 / UNIFORMITY_BINS as f64;
    let chi2: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let p_value = Probability::new(upper_igamc((UNIFORMITY_BINS - 1) as f64 / 2.0, chi2 / 2.0)?)?;
    Ok(Uniformity {
        bin_counts: *counts,
        chi2,
        p_value,
        ok: p_value.value() >= UNIFORMITY_ALPHA,
    })
}

pub fn uniformity_check(p_values: &[Probability]) -> Result<Uniformity, SuiteError> {
    if p_values.len() < MIN_UNIFORMITY_SAMPLES {
        return Err(SuiteError::TooFewSamples {
            min: MIN_UNIFORMITY_SAMPLES,
            actual: p_values.len(),
        });
    }
    uniformity_from_counts(&bin_p_values(p_values))
}

/// What to run and how to judge it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub params: TestParams,
    pub tests: Vec<TestId>,
    pub band_coefficient: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            params: TestParams::default(),
            tests: TestId::ALL.to_vec(),
            band_coefficient: 3.0,
        }
    }
}

/// Formula variants in force, embedded in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulaVariants {
    pub dft_threshold: String,
    pub approx_entropy_statistic: String,
    pub proportion_band: String,
    pub proportion_membership: String,
    pub uniformity_bins: String,
    pub uniformity_alpha: f64,
}

impl Default for FormulaVariants {
    fn default() -> Self {
        FormulaVariants {
            dft_threshold: DFT_THRESHOLD_FORMULA.to_string(),
            approx_entropy_statistic: "obs = 2n(ln 2 - (phi_m - phi_m+1))".to_string(),
            proportion_band: "(1 - alpha) +/- c * sqrt(alpha(1 - alpha)/m)".to_string(),
            proportion_membership: "lower < proportion <= min(upper, 1)".to_string(),
            uniformity_bins: "[k/10, (k+1)/10) for k = 0..9; p = 1 in the last bin".to_string(),
            uniformity_alpha: UNIFORMITY_ALPHA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleResult {
    pub sample_index: u64,
    pub statistic: f64,
    pub p_value: Probability,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSummary {
    pub test_id: TestId,
    /// One entry per sample, ordered by sample index.
    pub results: Vec<SampleResult>,
    pub pass_count: usize,
    pub pass_proportion: f64,
    pub band: ProportionBand,
    pub proportion_ok: bool,
    /// Absent when fewer than [`MIN_UNIFORMITY_SAMPLES`] samples were tested.
    pub uniformity: Option<Uniformity>,
}

impl TestSummary {
    pub fn p_values(&self) -> Vec<Probability> {
        self.results.iter().map(|r| r.p_value).collect()
    }

    /// True when the uniformity check passed or was not applicable.
    pub fn uniformity_ok(&self) -> bool {
        self.uniformity.as_ref().is_none_or(|u| u.ok)
    }

    pub fn passed(&self) -> bool {
        self.proportion_ok && self.uniformity_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub source_id: String,
    pub sample_count: usize,
    pub config: SuiteConfig,
    pub formulas: FormulaVariants,
    pub per_test: BTreeMap<TestId, TestSummary>,
    pub overall_pass: bool,
}

#[derive(Serialize)]
struct CsvRow {
    test_id: TestId,
    sample_index: u64,
    statistic: f64,
    p_value: f64,
    passed: bool,
}

impl SuiteReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Flat per-(test, sample) rows: test_id, sample_index, statistic,
    /// p_value, passed.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), SuiteError> {
        let mut w = csv::Writer::from_writer(writer);
        for summary in self.per_test.values() {
            for r in &summary.results {
                w.serialize(CsvRow {
                    test_id: summary.test_id,
                    sample_index: r.sample_index,
                    statistic: r.statistic,
                    p_value: r.p_value.value(),
                    passed: r.passed,
                })?;
            }
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

fn summarize(
    test_id: TestId,
    results: Vec<SampleResult>,
    config: &SuiteConfig,
) -> Result<TestSummary, SuiteError> {
    let m = results.len();
    let pass_count = results.iter().filter(|r| r.passed).count();
    let pass_proportion = pass_count as f64 / m as f64;
    let band = proportion_band(config.params.alpha, m, config.band_coefficient)?;
    let uniformity = if m >= MIN_UNIFORMITY_SAMPLES {
        let ps: Vec<Probability> = results.iter().map(|r| r.p_value).collect();
        Some(uniformity_check(&ps)?)
    } else {
        None
    };
    Ok(TestSummary {
        test_id,
        pass_count,
        pass_proportion,
        proportion_ok: band.contains(pass_proportion),
        band,
        uniformity,
        results,
    })
}

/// Runs every selected test on every sample and aggregates per test.
///
/// Samples are evaluated in parallel; aggregation is keyed by sample index,
/// so the report does not depend on evaluation order. If any sample is
/// rejected by a test, the error for the lowest sample index is returned.
pub fn run_suite(set: &SampleSet, config: &SuiteConfig) -> Result<SuiteReport, SuiteError> {
    if set.is_empty() {
        return Err(SuiteError::EmptySet);
    }
    config
        .params
        .validate()
        .map_err(|source| SuiteError::Test {
            sample_index: 0,
            source,
        })?;
    let mut tests = config.tests.clone();
    tests.sort();
    tests.dedup();
    if tests.is_empty() {
        return Err(SuiteError::NoTestsSelected);
    }

    let per_sample: Vec<Result<Vec<TestOutcome>, SuiteError>> = set
        .samples()
        .par_iter()
        .map(|sample| {
            tests
                .iter()
                .map(|&t| run_test(t, sample, &config.params))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|source| SuiteError::Test {
                    sample_index: sample.sample_index(),
                    source,
                })
        })
        .collect();

    let mut columns: Vec<Vec<SampleResult>> = vec![Vec::with_capacity(set.len()); tests.len()];
    for (sample, outcomes) in set.samples().iter().zip(per_sample) {
        for (column, outcome) in columns.iter_mut().zip(outcomes?) {
            column.push(SampleResult {
                sample_index: sample.sample_index(),
                statistic: outcome.statistic,
                p_value: outcome.p_value,
                passed: outcome.passed,
            });
        }
    }
    for column in &mut columns {
        column.sort_by_key(|r| r.sample_index);
    }

    let per_test = tests
        .iter()
        .zip(columns)
        .map(|(&t, results)| Ok((t, summarize(t, results, config)?)))
        .collect::<Result<BTreeMap<_, _>, SuiteError>>()?;
    let overall_pass = per_test.values().all(TestSummary::passed);
    Ok(SuiteReport {
        source_id: set.source_id().to_string(),
        sample_count: set.len(),
        config: SuiteConfig {
            tests,
            ..config.clone()
        },
        formulas: FormulaVariants::default(),
        per_test,
        overall_pass,
    })
}
