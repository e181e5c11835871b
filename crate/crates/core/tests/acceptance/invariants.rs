//! Deterministic sweep over every stated invariant. Each check returns the
//! number of cases examined or a description of the first violation.

use std::collections::HashMap;

use qrngstat::battery::{
    cusum_p_value, cusum_test, frequency_test, pattern_phi, CusumMode, TestDetails,
};
use qrngstat::bitseq::{concat_chronological, parse_bits_with_len};
use qrngstat::entropy::{
    deviation_series, entropy_series, min_entropy, proportion_band_for_length, shannon_entropy,
};
use qrngstat::sim::{
    effective_bias, generate_experiment, generate_sample, Anomaly, CalibrationEpoch,
    ExperimentPlan, QubitNoiseModel,
};
use qrngstat::special::{erfc, lower_igamc, normal_cdf, upper_igamc};
use qrngstat::suite::{bin_p_values, proportion_band, run_suite, uniformity_check, SuiteConfig};
use qrngstat::{
    run_test, BitSequence, Encoding, Probability, SampleSet, TestError, TestId, TestParams,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = fn() -> Result<usize, String>;

pub const CHECKS: &[(&str, Check)] = &[
    ("encoding round-trip", round_trip),
    ("concat boundaries", concat_boundaries),
    ("erfc normal identity", erfc_identity),
    ("incomplete gamma complement", gamma_complement),
    ("p-values in [0, 1] and purity", p_value_fuzz),
    ("runs prerequisite gives p = 0", runs_prerequisite),
    ("cusum backward = forward of reverse", cusum_symmetry),
    ("direct DFT oracle", direct_dft),
    ("brute-force pattern counts", brute_patterns),
    ("Monte-Carlo cusum tail", monte_carlo_cusum),
    ("suite order invariance", suite_order),
    ("band edge and binning", band_and_bins),
    ("uniform-source law", uniform_source),
    ("monotone bias sensitivity", monotone_bias),
    ("min-entropy <= Shannon", entropy_dominance),
    ("entropy permutation invariance", entropy_permutation),
    ("terminal deviation identity", terminal_deviation),
    ("band / frequency-test consistency", band_frequency),
    ("simulator determinism", sim_determinism),
    ("stream independence", stream_independence),
    ("binomial bounds per epoch", epoch_fidelity),
    ("anomaly fidelity", anomaly_fidelity),
];

fn rng(tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0xacce_0000 + tag)
}

fn random_seq(r: &mut ChaCha8Rng, n: usize) -> BitSequence {
    BitSequence::from_bools((0..n).map(|_| r.random::<bool>()))
}

fn fail<T>(msg: String) -> Result<T, String> {
    Err(msg)
}

fn round_trip() -> Result<usize, String> {
    let mut r = rng(1);
    let mut cases = 0;
    for _ in 0..200 {
        let n = r.random_range(1..5000);
        let seq = random_seq(&mut r, n);
        for enc in [Encoding::Ascii01, Encoding::PackedMsb, Encoding::Hex] {
            let back = parse_bits_with_len(&seq.encode(enc), enc, n).map_err(|e| e.to_string())?;
            if back.to_bits() != seq.to_bits() {
                return fail(format!("{enc} n={n}"));
            }
            cases += 1;
        }
    }
    let big = random_seq(&mut r, 1_000_000);
    let back = parse_bits_with_len(
        &big.encode(Encoding::PackedMsb),
        Encoding::PackedMsb,
        big.len(),
    )
    .map_err(|e| e.to_string())?;
    if back != big {
        return fail("packed n=10^6".into());
    }
    Ok(cases + 1)
}

fn concat_boundaries() -> Result<usize, String> {
    let mut r = rng(2);
    let mut cases = 0;
    for _ in 0..50 {
        let (len, count) = (r.random_range(1..400), r.random_range(1..10));
        let samples = (0..count)
            .map(|k| random_seq(&mut r, len).with_sample_index(((count - k) * 7) as u64))
            .collect();
        let set = SampleSet::new("q", len, samples).map_err(|e| e.to_string())?;
        let joined = concat_chronological(&set).map_err(|e| e.to_string())?;
        if joined.len() != len * count {
            return fail(format!("length {} != {}", joined.len(), len * count));
        }
        for (k, s) in set.samples().iter().enumerate() {
            if joined.bit(k * len) != s.bit(0) || joined.bit(k * len + len - 1) != s.bit(len - 1) {
                return fail(format!("boundary {k}"));
            }
            cases += 1;
        }
    }
    Ok(cases)
}

fn erfc_identity() -> Result<usize, String> {
    for k in 0..=1200 {
        let z = -6.0 + k as f64 * 0.01;
        let a = erfc(z).unwrap();
        let b = 2.0 * normal_cdf(-z * std::f64::consts::SQRT_2).unwrap();
        if (a - b).abs() > 1e-12 {
            return fail(format!("z={z}: {a} vs {b}"));
        }
    }
    Ok(1201)
}

fn gamma_complement() -> Result<usize, String> {
    let mut cases = 0;
    for ai in 1..=100 {
        let a = ai as f64 * 0.5;
        for xi in 0..=400 {
            let x = xi as f64 * 0.5;
            let s = lower_igamc(a, x).unwrap() + upper_igamc(a, x).unwrap();
            if (s - 1.0).abs() > 1e-12 {
                return fail(format!("a={a} x={x}: {s}"));
            }
            cases += 1;
        }
    }
    Ok(cases)
}

fn fuzz_corpus() -> Vec<BitSequence> {
    let mut r = rng(3);
    let mut out: Vec<BitSequence> = (0..150)
        .map(|_| {
            let n = r.random_range(1000..4000);
            let bias = r.random_range(0.0..1.0);
            BitSequence::from_bools((0..n).map(|_| r.random_bool(bias)))
        })
        .collect();
    for n in [1000, 1024, 4099] {
        out.push(BitSequence::from_bools((0..n).map(|_| true)));
        out.push(BitSequence::from_bools((0..n).map(|_| false)));
        out.push(BitSequence::from_bools((0..n).map(|i| i % 2 == 1)));
        out.push(BitSequence::from_bools((0..n).map(|i| i % 5 < 2)));
        out.push(BitSequence::from_bools((0..n).map(|i| i >= n / 2)));
    }
    out
}

fn p_value_fuzz() -> Result<usize, String> {
    let params = TestParams::default();
    let mut cases = 0;
    for seq in fuzz_corpus() {
        for id in TestId::ALL {
            match run_test(id, &seq, &params) {
                Ok(out) => {
                    let p = out.p_value.value();
                    if !(0.0..=1.0).contains(&p) {
                        return fail(format!("{id} n={}: p={p}", seq.len()));
                    }
                    if run_test(id, &seq, &params).ok() != Some(out) {
                        return fail(format!("{id}: repeated run differs"));
                    }
                }
                Err(TestError::DegenerateZ) => {}
                Err(e) => return fail(format!("{id}: {e}")),
            }
            cases += 1;
        }
    }
    Ok(cases)
}

fn runs_prerequisite() -> Result<usize, String> {
    let mut r = rng(4);
    let mut cases = 0;
    for _ in 0..200 {
        let n = r.random_range(100..5000);
        let tau = 2.0 / (n as f64).sqrt();
        let ones = (((0.5 + tau) * n as f64).ceil() as usize + r.random_range(0..n / 4)).min(n);
        let mut bits: Vec<bool> = (0..n).map(|i| i < ones).collect();
        bits.shuffle(&mut r);
        let out = run_test(
            TestId::Runs,
            &BitSequence::from_bools(bits),
            &TestParams::default(),
        )
        .map_err(|e| e.to_string())?;
        if out.p_value.value() != 0.0 {
            return fail(format!("n={n} ones={ones}: p={}", out.p_value));
        }
        cases += 1;
    }
    Ok(cases)
}

fn cusum_symmetry() -> Result<usize, String> {
    let params = TestParams::default();
    let mut cases = 0;
    for seq in fuzz_corpus() {
        let b = cusum_test(&seq, CusumMode::Backward, &params);
        let f = cusum_test(&seq.reversed(), CusumMode::Forward, &params);
        match (b, f) {
            (Ok(b), Ok(f)) if b.statistic == f.statistic && b.p_value == f.p_value => {}
            (Err(b), Err(f)) if b == f => {}
            other => return fail(format!("n={}: {other:?}", seq.len())),
        }
        cases += 1;
    }
    Ok(cases)
}

fn direct_moduli(bits: &[u8]) -> Vec<f64> {
    let n = bits.len();
    (0..n / 2)
        .map(|j| {
            let (mut re, mut im) = (0.0f64, 0.0f64);
            for (k, &b) in bits.iter().enumerate() {
                let x = if b == 1 { 1.0 } else { -1.0 };
                let angle = -2.0 * std::f64::consts::PI * ((j * k) % n) as f64 / n as f64;
                re += x * angle.cos();
                im += x * angle.sin();
            }
            re.hypot(im)
        })
        .collect()
}

fn direct_dft() -> Result<usize, String> {
    let mut r = rng(5);
    let mut seqs: Vec<BitSequence> = (0..20)
        .map(|_| {
            let n = r.random_range(1000..1300);
            random_seq(&mut r, n)
        })
        .collect();
    seqs.push(BitSequence::from_ascii(&"10".repeat(512)).unwrap());
    seqs.push(BitSequence::from_ascii(&"1100".repeat(256)).unwrap());
    for seq in &seqs {
        let out = run_test(TestId::Dft, seq, &TestParams::default()).map_err(|e| e.to_string())?;
        let TestDetails::Dft {
            threshold,
            observed_below,
            ..
        } = out.details
        else {
            return fail("wrong details".into());
        };
        let moduli = direct_moduli(&seq.to_bits());
        let direct = moduli.iter().filter(|m| **m < threshold).count() as u64;
        let ambiguous = moduli
            .iter()
            .filter(|m| (**m - threshold).abs() < 1e-6)
            .count() as u64;
        if direct.abs_diff(observed_below) > ambiguous {
            return fail(format!(
                "n={}: fft {observed_below} vs direct {direct}",
                seq.len()
            ));
        }
    }
    Ok(seqs.len())
}

fn brute_patterns() -> Result<usize, String> {
    let mut r = rng(6);
    let mut cases = 0;
    for _ in 0..200 {
        let n = r.random_range(8..400);
        let bits: Vec<u8> = (0..n).map(|_| r.random_range(0..2)).collect();
        for block in 1..=5 {
            let mut counts: HashMap<Vec<u8>, usize> = HashMap::new();
            for i in 0..n {
                let w: Vec<u8> = (0..block).map(|j| bits[(i + j) % n]).collect();
                *counts.entry(w).or_default() += 1;
            }
            let slow: f64 = counts
                .values()
                .map(|&c| c as f64 / n as f64 * (c as f64 / n as f64).ln())
                .sum();
            let fast = pattern_phi(&bits, block);
            if (fast - slow).abs() > 1e-12 {
                return fail(format!("n={n} m={block}: {fast} vs {slow}"));
            }
            cases += 1;
        }
    }
    Ok(cases)
}

fn monte_carlo_cusum() -> Result<usize, String> {
    const WALKS: usize = 1_000_000;
    const N: usize = 100;
    let mut r = rng(7);
    let mut hist = [0u64; N + 1];
    for _ in 0..WALKS {
        let (a, b) = (r.random::<u64>(), r.random::<u64>());
        let (mut s, mut z) = (0i32, 0i32);
        for i in 0..N {
            let bit = if i < 64 { a >> i } else { b >> (i - 64) } & 1;
            s += 2 * bit as i32 - 1;
            z = z.max(s.abs());
        }
        hist[z as usize] += 1;
    }
    let mut at_least = WALKS as u64;
    for z in 1..=N {
        at_least -= hist[z - 1];
        let empirical = at_least as f64 / WALKS as f64;
        let theory = cusum_p_value(N, z as u64).map_err(|e| e.to_string())?;
        let sigma = (theory * (1.0 - theory) / WALKS as f64).sqrt();
        if (empirical - theory).abs() > 5.0 * sigma + 0.01 {
            return fail(format!("z={z}: {empirical} vs {theory}"));
        }
    }
    Ok(WALKS)
}

fn suite_order() -> Result<usize, String> {
    let set = generate_experiment(&ExperimentPlan::unbiased(1, 60, 8192, 8))
        .unwrap()
        .remove(0);
    let config = SuiteConfig::default();
    let reference = run_suite(&set, &config).map_err(|e| e.to_string())?;
    let mut r = rng(8);
    for k in 0..3 {
        let mut samples = set.samples().to_vec();
        samples.shuffle(&mut r);
        let again = SampleSet::new("q0", 8192, samples).unwrap();
        if run_suite(&again, &config)
            .map_err(|e| e.to_string())?
            .to_json()
            != reference.to_json()
        {
            return fail(format!("shuffle {k} changed the report"));
        }
    }
    Ok(3)
}

fn band_and_bins() -> Result<usize, String> {
    let mut cases = 0;
    for m in [1usize, 55, 100, 579, 1000, 99_999] {
        let band = proportion_band(0.01, m, 3.0).unwrap();
        if band.contains(band.lower()) {
            return fail(format!("m={m}: lower edge accepted"));
        }
        cases += 1;
    }
    let mut r = rng(9);
    for _ in 0..200 {
        let len = r.random_range(0..300);
        let mut p: Vec<Probability> = (0..len)
            .map(|_| Probability::new(r.random()).unwrap())
            .collect();
        p.extend([Probability::ZERO, Probability::ONE]);
        let counts = bin_p_values(&p);
        if counts.iter().sum::<u64>() != p.len() as u64 || counts[0] == 0 || counts[9] == 0 {
            return fail(format!("counts {counts:?} for {} values", p.len()));
        }
        cases += 1;
    }
    let spread: Vec<Probability> = (0..55)
        .map(|i| Probability::new(i as f64 / 55.0).unwrap())
        .collect();
    if uniformity_check(&spread[..54]).is_ok() || uniformity_check(&spread).is_err() {
        return fail("54/55 sample floor".into());
    }
    Ok(cases + 2)
}

fn uniform_source() -> Result<usize, String> {
    let set = generate_experiment(&ExperimentPlan::unbiased(1, 1000, 8192, 2024))
        .unwrap()
        .remove(0);
    let report = run_suite(&set, &SuiteConfig::default()).map_err(|e| e.to_string())?;
    for (id, s) in &report.per_test {
        if !s.proportion_ok || !s.uniformity_ok() {
            return fail(format!(
                "{id}: proportion {} uniformity {:?}",
                s.pass_proportion, s.uniformity
            ));
        }
    }
    Ok(1000)
}

fn monotone_bias() -> Result<usize, String> {
    let config = SuiteConfig {
        tests: vec![TestId::Frequency],
        ..SuiteConfig::default()
    };
    let mut last = f64::INFINITY;
    for p1 in [0.50, 0.51, 0.52, 0.55] {
        let plan = ExperimentPlan::new(
            vec![QubitNoiseModel::constant(0, p1, 0.0, 0.0)],
            500,
            8192,
            77,
        );
        let set = generate_experiment(&plan).unwrap().remove(0);
        let prop = run_suite(&set, &config).unwrap().per_test[&TestId::Frequency].pass_proportion;
        if prop > last {
            return fail(format!("p1={p1}: {prop} > {last}"));
        }
        last = prop;
    }
    Ok(4)
}

fn entropy_dominance() -> Result<usize, String> {
    let mut r = rng(10);
    for k in 0..500 {
        let n = r.random_range(1..3000);
        let bias = if k % 10 == 0 { 0.5 } else { r.random() };
        let seq = BitSequence::from_bools((0..n).map(|_| r.random_bool(bias)));
        let (h_min, h) = (min_entropy(&seq).unwrap(), shannon_entropy(&seq).unwrap());
        let ones = seq.count_ones();
        let special = 2 * ones == n || ones == 0 || ones == n;
        if h_min > h || (h_min == h) != special {
            return fail(format!("n={n} ones={ones}: {h_min} vs {h}"));
        }
    }
    Ok(500)
}

fn entropy_permutation() -> Result<usize, String> {
    let mut r = rng(11);
    for _ in 0..200 {
        let n = r.random_range(1..3000);
        let mut bits: Vec<bool> = (0..n).map(|_| r.random_bool(0.4)).collect();
        let a = BitSequence::from_bools(bits.iter().copied());
        bits.shuffle(&mut r);
        let b = BitSequence::from_bools(bits);
        if min_entropy(&a).unwrap() != min_entropy(&b).unwrap()
            || shannon_entropy(&a).unwrap() != shannon_entropy(&b).unwrap()
        {
            return fail(format!("n={n}"));
        }
    }
    Ok(200)
}

fn terminal_deviation() -> Result<usize, String> {
    let mut r = rng(12);
    for _ in 0..300 {
        let n = r.random_range(1..5000);
        let seq = random_seq(&mut r, n);
        let stride = r.random_range(1..1000);
        let last = *deviation_series(&seq, stride)
            .unwrap()
            .points
            .last()
            .unwrap();
        let ones = seq.count_ones() as f64;
        if last.bit_index != n as u64 || 2.0 * last.deviation != 2.0 * ones - n as f64 {
            return fail(format!("n={n}: {last:?}"));
        }
    }
    Ok(300)
}

fn band_frequency() -> Result<usize, String> {
    let params = TestParams::default();
    let mut cases = 0;
    for n in [100usize, 10_000, 4_743_168] {
        let band = proportion_band_for_length(n, params.alpha).unwrap();
        let edge = (band.halfwidth * n as f64).floor() as i64;
        let offsets = (-3..=3)
            .flat_map(|d| [edge + d, -edge - d])
            .chain((0..=12).map(|k| k * edge / 8));
        for off in offsets {
            let ones = (n as i64 / 2 + off).clamp(0, n as i64) as usize;
            let seq = BitSequence::from_bools((0..n).map(|i| i < ones));
            let inside = (ones as f64 / n as f64 - 0.5).abs() < band.halfwidth;
            let p = frequency_test(&seq, &params).unwrap().p_value.value();
            if inside != (p > params.alpha) {
                return fail(format!("n={n} ones={ones}: inside={inside} p={p}"));
            }
            cases += 1;
        }
    }
    Ok(cases)
}

fn sim_determinism() -> Result<usize, String> {
    let plan = ExperimentPlan::readout_asymmetry(4, 40, 2048, 3);
    let (a, b) = (
        generate_experiment(&plan).unwrap(),
        generate_experiment(&plan).unwrap(),
    );
    if a != b {
        return fail("regeneration differs".into());
    }
    let other = generate_experiment(&ExperimentPlan {
        master_seed: 4,
        ..plan
    })
    .unwrap();
    let (mut differ, mut total) = (0, 0);
    for (x, y) in a.iter().zip(&other) {
        for (s, t) in x.samples().iter().zip(y.samples()) {
            differ += s.iter().zip(t.iter()).filter(|(p, q)| p != q).count();
            total += s.len();
        }
    }
    if (differ as f64) < 0.45 * total as f64 {
        return fail(format!("seeds differ in only {differ}/{total} bits"));
    }
    Ok(a.len())
}

fn stream_independence() -> Result<usize, String> {
    let n = 8192;
    let bound = 4.0 / (n as f64).sqrt();
    let signed = |s: BitSequence| -> Vec<f64> { s.iter().map(|b| 2.0 * b as f64 - 1.0).collect() };
    let models: Vec<QubitNoiseModel> = (0..6).map(QubitNoiseModel::ideal).collect();
    let get = |q: usize, s: u64| signed(generate_sample(&models[q], s, n, 31).unwrap());
    let mut cases = 0;
    for q in 0..5 {
        for s in 0..10 {
            let x = get(q, s);
            for y in [get(q, s + 1), get(q + 1, s)] {
                let corr = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / n as f64;
                if corr.abs() > bound {
                    return fail(format!("q{q} s{s}: r={corr}"));
                }
                cases += 1;
            }
        }
    }
    Ok(cases)
}

fn epoch_fidelity() -> Result<usize, String> {
    let epoch = |start, p1, e01, e10| CalibrationEpoch {
        start_sample: start,
        p1_state: p1,
        eps01: e01,
        eps10: e10,
    };
    let model = QubitNoiseModel {
        qubit_id: 4,
        epochs: vec![
            epoch(0, 0.5, 0.02, 0.02),
            epoch(30, 0.5, 0.01, 0.06),
            epoch(60, 0.47, 0.04, 0.01),
        ],
        anomaly: None,
    };
    let set = generate_experiment(&ExperimentPlan::new(vec![model.clone()], 90, 8192, 12))
        .unwrap()
        .remove(0);
    for start in [0usize, 30, 60] {
        let p = effective_bias(&model, start as u64).unwrap();
        let chunk = &set.samples()[start..start + 30];
        let bits: usize = chunk.iter().map(BitSequence::len).sum();
        let ones: usize = chunk.iter().map(BitSequence::count_ones).sum();
        let p_hat = ones as f64 / bits as f64;
        if (p_hat - p).abs() > 3.0 * (p * (1.0 - p) / bits as f64).sqrt() {
            return fail(format!("epoch at {start}: {p_hat} vs {p}"));
        }
    }
    let big = generate_sample(
        &QubitNoiseModel::constant(0, 0.45, 0.0, 0.0),
        0,
        1_000_000,
        5,
    )
    .unwrap();
    let p_hat = big.count_ones() as f64 / 1e6;
    if (p_hat - 0.45).abs() > 3.0 * (0.45f64 * 0.55 / 1e6).sqrt() {
        return fail(format!("10^6 shots at 0.45: {p_hat}"));
    }
    Ok(4)
}

fn anomaly_fidelity() -> Result<usize, String> {
    let mut cases = 0;
    for (k, p1) in [0.40, 0.44, 0.56, 0.62].into_iter().enumerate() {
        let anomaly = Anomaly {
            start_sample: 40,
            end_sample: 49,
            p1_override: p1,
        };
        let model = QubitNoiseModel::constant(k as u32, 0.5, 0.02, 0.02).with_anomaly(anomaly);
        let set = generate_experiment(&ExperimentPlan::new(vec![model], 100, 8192, 40))
            .unwrap()
            .remove(0);
        let series = entropy_series(&set).unwrap();
        let mut rest: Vec<f64> = series
            .points
            .iter()
            .filter(|p| !anomaly.covers(p.sample_index))
            .map(|p| p.min_entropy)
            .collect();
        rest.sort_by(f64::total_cmp);
        let median = (rest[rest.len() / 2 - 1] + rest[rest.len() / 2]) / 2.0;
        for p in series
            .points
            .iter()
            .filter(|p| anomaly.covers(p.sample_index))
        {
            if p.min_entropy >= median {
                return fail(format!(
                    "p1={p1} sample {}: {} >= {median}",
                    p.sample_index, p.min_entropy
                ));
            }
            cases += 1;
        }
    }
    Ok(cases)
}
