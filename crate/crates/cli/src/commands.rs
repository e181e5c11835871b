use std::path::Path;

use anyhow::{Context, Result};
use qrngstat::bitseq::{concat_chronological, load_sample_set, ManifestEntry};
use qrngstat::entropy::{
    deviation_series, entropy_series, proportion_band_for_length, ProportionRange,
};
use qrngstat::sim::{generate_experiment, ExperimentPlan};
use qrngstat::suite::{run_suite, SuiteConfig, SuiteReport};
use qrngstat::{Encoding, Manifest, SampleSet, TestId, TestParams};
use serde::Serialize;

use crate::output::{ensure_dir, file_stem, write_atomic, write_json};
use crate::{EntropyArgs, SimulateArgs, StabilityArgs, TestArgs};

#[derive(Serialize)]
struct Generator {
    name: &'static str,
    version: &'static str,
}

const GENERATOR: Generator = Generator {
    name: "qrngstat",
    version: env!("CARGO_PKG_VERSION"),
};

#[derive(Serialize)]
struct Config<'a, T> {
    command: &'static str,
    #[serde(flatten)]
    args: &'a T,
}

fn load(manifest: &Path) -> Result<SampleSet> {
    let m = Manifest::from_path(manifest)?;
    load_sample_set(&m).with_context(|| format!("loading {}", manifest.display()))
}

#[derive(Serialize)]
struct TestReport<'a> {
    generator: Generator,
    config: Config<'a, TestArgs>,
    suite: SuiteReport,
}

pub fn test(args: &TestArgs) -> Result<bool> {
    let config = SuiteConfig {
        params: TestParams {
            alpha: args.alpha,
            block_size: args.block_size,
            apen_m: args.apen_m,
            enforce_min_length: !args.no_min_length_enforcement,
        },
        tests: args.tests.clone().unwrap_or_else(|| TestId::ALL.to_vec()),
        band_coefficient: args.band_coefficient,
    };
    let set = load(&args.manifest)?;
    let suite = run_suite(&set, &config)?;
    ensure_dir(&args.out)?;
    write_atomic(&args.out.join("results.csv"), |w| Ok(suite.write_csv(w)?))?;
    let passed = suite.overall_pass;
    let report = TestReport {
        generator: GENERATOR,
        config: Config {
            command: "test",
            args,
        },
        suite,
    };
    write_json(&args.out.join("report.json"), &report)?;
    Ok(passed)
}

pub fn entropy(args: &EntropyArgs) -> Result<bool> {
    let set = load(&args.manifest)?;
    let series = entropy_series(&set)?;
    ensure_dir(&args.out)?;
    let path = args
        .out
        .join(format!("entropy_{}.csv", file_stem(set.source_id())));
    write_atomic(&path, |w| Ok(series.write_csv(w)?))?;
    Ok(true)
}

#[derive(Serialize)]
struct BandReport<'a> {
    generator: Generator,
    config: Config<'a, StabilityArgs>,
    /// Derived from inverting the frequency-test p-value at α; not a
    /// device-reported quantity.
    label: &'static str,
    source_id: String,
    samples: usize,
    n: usize,
    ones: usize,
    proportion_of_ones: f64,
    band: ProportionRange,
    inside: bool,
}

/// Pools the samples chronologically, writes D_i every `stride` bits and
/// checks the pooled proportion of ones against the band for that length.
pub fn stability(args: &StabilityArgs) -> Result<bool> {
    let set = load(&args.manifest)?;
    let pooled = concat_chronological(&set)?;
    let series = deviation_series(&pooled, args.stride)?;
    let band = proportion_band_for_length(pooled.len(), args.alpha)?;
    let ones = pooled.count_ones();
    let proportion = ones as f64 / pooled.len() as f64;
    let inside = band.contains(proportion);
    ensure_dir(&args.out)?;
    let path = args
        .out
        .join(format!("deviation_{}.csv", file_stem(set.source_id())));
    write_atomic(&path, |w| Ok(series.write_csv(w)?))?;
    let report = BandReport {
        generator: GENERATOR,
        config: Config { command: "stability", args },
        label: "derived: proportion-of-ones range passing the frequency test at alpha for the pooled length",
        source_id: set.source_id().to_string(),
        samples: set.len(),
        n: pooled.len(),
        ones,
        proportion_of_ones: proportion,
        band,
        inside,
    };
    write_json(&args.out.join("band.json"), &report)?;
    Ok(inside)
}

/// Writes `<out>/<source>/sample_NNNNN.bin` (packed, MSB first) and a
/// manifest per qubit, plus the effective plan as `<out>/plan.json`.
pub fn simulate(args: &SimulateArgs) -> Result<bool> {
    let text = std::fs::read_to_string(&args.plan)
        .with_context(|| format!("reading {}", args.plan.display()))?;
    let mut plan: ExperimentPlan =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", args.plan.display()))?;
    if let Some(seed) = args.seed {
        plan.master_seed = seed;
    }
    let sets = generate_experiment(&plan)?;
    ensure_dir(&args.out)?;
    write_json(&args.out.join("plan.json"), &plan)?;
    for set in &sets {
        let stem = file_stem(set.source_id());
        let dir = args.out.join(&stem);
        ensure_dir(&dir)?;
        let mut entries = Vec::with_capacity(set.len());
        for s in set.samples() {
            let name = format!("sample_{:05}.bin", s.sample_index());
            let bytes = s.encode(Encoding::PackedMsb);
            write_atomic(&dir.join(&name), |w| Ok(w.write_all(&bytes)?))?;
            entries.push(ManifestEntry {
                path: name.into(),
                encoding: Encoding::PackedMsb,
                sample_index: s.sample_index(),
                timestamp: s.timestamp(),
            });
        }
        let manifest = Manifest {
            declared_length: set.declared_length(),
            source_id: set.source_id().to_string(),
            entries,
            base_dir: None,
        };
        write_json(&dir.join("manifest.json"), &manifest)?;
    }
    Ok(true)
}
