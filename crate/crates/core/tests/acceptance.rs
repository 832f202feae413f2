//! Acceptance suite. Runs without the libtest harness so that each criterion
//! prints exactly one PASS/FAIL line; the process fails if any criterion does.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use mbsif::harness::{
    make_split, run_config, run_grid, synthetic_corpus, synthetic_eye_images, synthetic_natural_images,
    write_results, FixedBanks, GridOptions, GridSpec, Protocol, RunConfig, SynthParams,
};
use mbsif::learn::{fast_ica, fit_whitening, fit_whitening_matrix, identity_deviation, orthonormality_error, sample_patches};
use mbsif::{
    encode, filter_responses, full_image_feature, histogram_feature, learn_filterbank, pad_image, BitMask,
    ClassifierSpec, Eye, FeatureKind, FilterBank, FloatImage, Gender, HistogramMode, Matrix, PaddingMode,
    PaddingStrategy,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("oracle equivalence", oracle_equivalence),
        ("padding bands", padding_bands),
        ("boundary artifact", boundary_artifact),
        ("whitening and ICA numerics", whitening_and_ica),
        ("filter provenance", filter_provenance),
        ("synthetic end-to-end", synthetic_end_to_end),
        ("split invariants", split_invariants),
        ("grid determinism", grid_determinism),
        ("feature dimensions", feature_dimensions),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name} ({detail}; {secs:.1}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({detail}; {secs:.1}s)", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:.1?}, limit {limit:?}"))
}

// Independent padding rule, written as the textbook definition of each mode.
fn oracle_index(mode: PaddingMode, i: isize, n: usize) -> Option<usize> {
    let n = n as isize;
    let j = match mode {
        PaddingMode::Zero if i < 0 || i >= n => return None,
        PaddingMode::Zero => i,
        PaddingMode::Replicate => i.max(0).min(n - 1),
        PaddingMode::Wrap => ((i % n) + n) % n,
        PaddingMode::Reflect => {
            if n == 1 {
                return Some(0);
            }
            let mut j = i;
            while j < 0 || j >= n {
                if j < 0 {
                    j = -j;
                }
                if j >= n {
                    j = 2 * (n - 1) - j;
                }
            }
            j
        }
    };
    Some(j as usize)
}

fn oracle_codes(strip: &FloatImage, filters: &[Vec<f64>], l: usize, p: PaddingStrategy) -> Vec<u32> {
    let (w, h) = (strip.width(), strip.height());
    let k = (l / 2) as isize;
    let at = |x: isize, y: isize| -> f64 {
        match (oracle_index(p.angular, x, w), oracle_index(p.radial, y, h)) {
            (Some(sx), Some(sy)) => strip.get(sx, sy),
            _ => 0.0,
        }
    };
    let mut codes = vec![0u32; w * h];
    for y in 0..h {
        for x in 0..w {
            for (bit, f) in filters.iter().enumerate() {
                let mut s = 0.0;
                for v in 0..l {
                    for u in 0..l {
                        s += f[v * l + u] * at(x as isize + u as isize - k, y as isize + v as isize - k);
                    }
                }
                if s > 0.0 {
                    codes[y * w + x] += 1 << bit;
                }
            }
        }
    }
    codes
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let modes = [PaddingMode::Wrap, PaddingMode::Replicate, PaddingMode::Zero, PaddingMode::Reflect];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut combos = BTreeSet::new();
    for case in 0..200 {
        let l = [3, 5, 7][rng.random_range(0..3)];
        let bits = rng.random_range(1..=8);
        let w = rng.random_range(l / 2 + 1..=32);
        let h = rng.random_range(l / 2 + 1..=32);
        let p = PaddingStrategy::new(modes[case % 4], modes[(case / 4) % 4]);
        combos.insert((p.radial.as_str(), p.angular.as_str()));
        let strip = FloatImage::from_fn(w, h, |_, _| rng.random_range(0..256) as f64).unwrap();
        let filters: Vec<Vec<f64>> = (0..bits)
            .map(|_| (0..l * l).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let bank = FilterBank::from_filters(l, &filters).map_err(|e| e.to_string())?;
        let mask = BitMask::filled(w, h, false).unwrap();
        let code = encode(&strip, &mask, &bank, p).map_err(|e| e.to_string())?;
        let expected = oracle_codes(&strip, &filters, l, p);
        ensure(code.codes() == expected.as_slice(), || {
            format!("case {case}: {w}x{h}, l={l}, bits={bits}, {p} differs from the oracle")
        })?;
    }
    within(start, Duration::from_secs(30))?;
    Ok(format!("200 instances exact, {} padding pairs", combos.len()))
}

fn padding_bands() -> Outcome {
    let (w, h, l, k) = (240, 20, 11, 5);
    let strip = FloatImage::from_fn(w, h, |x, y| (y * 1000 + x) as f64).unwrap();
    let value = |x: usize, y: usize| (y * 1000 + x) as f64;
    for (p, top_src, bottom_src) in [
        // Wrapped: top band is the last five rows, bottom band the first five.
        (PaddingStrategy::TRADITIONAL, [15, 16, 17, 18, 19], [0, 1, 2, 3, 4]),
        // Replicated: first and last rows repeated five times.
        (PaddingStrategy::MODIFIED, [0; 5], [19; 5]),
    ] {
        let padded = pad_image(&strip, l, p).map_err(|e| e.to_string())?;
        ensure((padded.width(), padded.height()) == (250, 30), || {
            format!("{p}: padded dims {}x{}", padded.width(), padded.height())
        })?;
        let mut rows: Vec<usize> = top_src.to_vec();
        rows.extend(0..h);
        rows.extend(bottom_src);
        let mut cols: Vec<usize> = (w - k..w).collect();
        cols.extend(0..w);
        cols.extend(0..k);
        for (py, &sy) in rows.iter().enumerate() {
            for (px, &sx) in cols.iter().enumerate() {
                let got = padded.get(px, py);
                ensure(got == value(sx, sy), || format!("{p}: cell ({py}, {px}) is {got}, expected {}", value(sx, sy)))?;
            }
        }
    }
    Ok("5x240 and 5x20 bands match for both presets".into())
}

fn boundary_artifact() -> Outcome {
    let (w, h, l) = (240, 20, 11);
    let k = l / 2;
    let strip = FloatImage::from_fn(w, h, |_, y| if y >= h - 5 { 0.0 } else { 128.0 }).unwrap();
    // Vertical gradient detector with integer weights summing to zero.
    let filter: Vec<f64> = (0..l * l).map(|i| (i / l) as f64 - k as f64).collect();
    let bank = FilterBank::from_filters(l, &[filter]).map_err(|e| e.to_string())?;
    let top_max = |p: PaddingStrategy| -> Result<f64, String> {
        let stack = filter_responses(&strip, &bank, p).map_err(|e| e.to_string())?;
        let r = &stack.responses[0];
        Ok((0..k).flat_map(|y| r.row(y).iter().copied()).fold(0.0, |m: f64, v| m.max(v.abs())))
    };
    let traditional = top_max(PaddingStrategy::TRADITIONAL)?;
    let modified = top_max(PaddingStrategy::MODIFIED)?;
    ensure(modified <= 1e-9, || format!("modified top-row response {modified}"))?;
    ensure(traditional > 1e-9, || format!("traditional top-row response {traditional}"))?;
    Ok(format!("top {k} rows: traditional max |r| = {traditional}, modified = {modified}"))
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

fn whitening_and_ica() -> Outcome {
    let start = Instant::now();
    let (l, bits, m, seed) = (11, 8, 50_000, 5);
    let images = synthetic_eye_images(13, 240, seed).map_err(|e| e.to_string())?;
    let patches = sample_patches::<f64>(&images, l, m, seed).map_err(|e| e.to_string())?;
    let whitening = fit_whitening(&patches, bits).map_err(|e| e.to_string())?;
    let z = whitening.apply(patches.matrix());
    let cov_err = identity_deviation(&z);
    ensure(cov_err <= 1e-6, || format!("whitened covariance off identity by {cov_err:e}"))?;
    let ica = fast_ica(&z, seed).map_err(|e| e.to_string())?;
    let orth_err = orthonormality_error(&ica.unmixing);
    ensure(orth_err <= 1e-6, || format!("unmixing orthonormality error {orth_err:e}"))?;
    within(start, Duration::from_secs(60))?;

    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let n = 10_000;
    let sources: Vec<[f64; 2]> = (0..n)
        .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
        .collect();
    let mixed = Matrix::from_fn(n, 2, |r, c| {
        let [s0, s1] = sources[r];
        if c == 0 {
            2.0 * s0 + 1.0 * s1
        } else {
            0.5 * s0 - 1.5 * s1
        }
    });
    let wt = fit_whitening_matrix(&mixed, 2).map_err(|e| e.to_string())?;
    let zm = wt.apply(&mixed);
    let unmix = fast_ica(&zm, 17).map_err(|e| e.to_string())?.unmixing;
    let recovered: Vec<Vec<f64>> = (0..2)
        .map(|i| (0..n).map(|r| unmix[(i, 0)] * zm[(r, 0)] + unmix[(i, 1)] * zm[(r, 1)]).collect())
        .collect();
    let truth: Vec<Vec<f64>> = (0..2).map(|j| sources.iter().map(|s| s[j]).collect()).collect();
    let mut worst = f64::INFINITY;
    for t in &truth {
        let best = recovered.iter().map(|r| correlation(r, t).abs()).fold(0.0, f64::max);
        worst = worst.min(best);
    }
    ensure(worst > 0.99, || format!("2-source recovery |rho| = {worst:.4}"))?;
    Ok(format!(
        "cov err {cov_err:.1e}, orth err {orth_err:.1e}, 2-source min |rho| {worst:.4}"
    ))
}

fn filter_provenance() -> Outcome {
    let seed = 11;
    let eyes = synthetic_eye_images(13, 240, seed).map_err(|e| e.to_string())?;
    let natural = synthetic_natural_images(13, 240, seed).map_err(|e| e.to_string())?;
    let a: FilterBank = learn_filterbank(&eyes, 11, 8, 50_000, seed).map_err(|e| e.to_string())?;
    let b: FilterBank = learn_filterbank(&natural, 11, 8, 50_000, seed).map_err(|e| e.to_string())?;
    let diff = a.weights().max_abs_diff(b.weights());
    ensure(diff > 0.01, || format!("max abs weight difference {diff}"))?;
    Ok(format!("max abs weight difference {diff:.4}"))
}

fn synthetic_end_to_end() -> Outcome {
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(|e| e.to_string())?;
    let seed = 0;
    let outcome = pool.install(|| -> Outcome {
        let images = synthetic_eye_images(13, 240, seed).map_err(|e| e.to_string())?;
        let bank: FilterBank = learn_filterbank(&images, 11, 8, 50_000, seed).map_err(|e| e.to_string())?;
        let corpus = synthetic_corpus(&SynthParams { subjects: 400, seed, ..Default::default() })
            .map_err(|e| e.to_string())?;
        let protocol = Protocol { seed, ..Default::default() };
        let split = make_split(&corpus.subjects(), protocol.train_fraction, seed).map_err(|e| e.to_string())?;
        let mut lines = Vec::new();
        for eye in [Eye::Left, Eye::Right] {
            let accuracy = |padding| -> Result<f64, String> {
                let config = RunConfig {
                    eye,
                    padding,
                    filter_size: 11,
                    bits: 8,
                    feature: FeatureKind::Histogram,
                    classifier: ClassifierSpec::AdaBoost { rounds: 100 },
                };
                Ok(run_config(&corpus, &split, &config, &bank, &protocol).map_err(|e| e.to_string())?.accuracy)
            };
            let modified = accuracy(PaddingStrategy::MODIFIED)?;
            let traditional = accuracy(PaddingStrategy::TRADITIONAL)?;
            ensure(modified >= 0.9, || format!("{eye}: modified accuracy {modified:.3} < 0.9"))?;
            ensure(modified > traditional, || {
                format!("{eye}: modified {modified:.3} does not beat traditional {traditional:.3}")
            })?;
            lines.push(format!("{eye} modified {modified:.3} vs traditional {traditional:.3}"));
        }
        Ok(lines.join(", "))
    })?;
    within(start, Duration::from_secs(600))?;
    Ok(outcome)
}

fn split_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for draw in 0..1000u64 {
        let males = rng.random_range(10..=150);
        let females = rng.random_range(10..=150);
        let subjects: Vec<(String, Gender)> = (0..males + females)
            .map(|i| (format!("p{i:04}"), if i < males { Gender::Male } else { Gender::Female }))
            .collect();
        let plan = make_split(&subjects, 0.8, draw).map_err(|e| e.to_string())?;
        ensure(plan.train_subjects.is_disjoint(&plan.test_subjects), || format!("draw {draw}: train/test overlap"))?;
        ensure(plan.train_subjects.len() + plan.test_subjects.len() == subjects.len(), || {
            format!("draw {draw}: subjects lost")
        })?;
        let folds: usize = plan.folds.iter().map(BTreeSet::len).sum();
        let union: BTreeSet<&String> = plan.folds.iter().flatten().collect();
        ensure(folds == plan.train_subjects.len() && union.len() == folds, || {
            format!("draw {draw}: folds do not partition training")
        })?;
        for (gender, count) in [(Gender::Male, males), (Gender::Female, females)] {
            let train = subjects
                .iter()
                .filter(|(id, g)| *g == gender && plan.train_subjects.contains(id))
                .count() as f64;
            let target = 0.8 * count as f64;
            ensure((train - target).abs() <= 1.0, || {
                format!("draw {draw}: {gender} train {train} of {count}")
            })?;
        }
    }
    Ok("1000 draws, no violations".into())
}

fn grid_determinism() -> Outcome {
    let corpus = synthetic_corpus(&SynthParams { subjects: 40, seed: 3, ..Default::default() }).map_err(|e| e.to_string())?;
    let images = synthetic_eye_images(4, 240, 3).map_err(|e| e.to_string())?;
    let grid = GridSpec {
        filter_sizes: vec![5, 7],
        bits: vec![5, 6],
        classifiers: vec![ClassifierSpec::AdaBoost { rounds: 10 }, ClassifierSpec::Forest {
            trees: 15,
            features_per_split: None,
            max_depth: None,
        }],
        ..Default::default()
    };
    let mut banks = Vec::new();
    for &size in &grid.filter_sizes {
        for &bits in &grid.bits {
            banks.push(learn_filterbank(&images, size, bits, 5_000, 3).map_err(|e| e.to_string())?);
        }
    }
    let banks = FixedBanks::new(banks);
    let protocol = Protocol { seed: 3, ..Default::default() };
    let split = make_split(&corpus.subjects(), protocol.train_fraction, 3).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut files = Vec::new();
    for (run, jobs) in [(0, 1), (1, 4)] {
        let path = dir.path().join(format!("run{run}.csv"));
        let options = GridOptions { jobs, ..Default::default() };
        let rows = run_grid(&corpus, &split, &grid, &banks, &protocol, Some(&path), &options).map_err(|e| e.to_string())?;
        ensure(rows.iter().all(|r| r.succeeded()), || "a configuration failed".into())?;
        let copy = dir.path().join(format!("copy{run}.csv"));
        write_results(&copy, &rows, &[]).map_err(|e| e.to_string())?;
        files.push((std::fs::read(&path).map_err(|e| e.to_string())?, std::fs::read(&copy).map_err(|e| e.to_string())?));
    }
    ensure(files[0].0 == files[1].0, || "results files differ".into())?;
    ensure(files[0].1 == files[1].1, || "returned rows differ".into())?;
    let rows = grid.configs().len();
    Ok(format!("{rows} configurations, {} identical bytes", files[0].0.len()))
}

fn feature_dimensions() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let strip = FloatImage::from_fn(240, 20, |_, _| rng.random_range(0.0..255.0)).unwrap();
    let mask = BitMask::filled(240, 20, false).unwrap();
    let mut lens = Vec::new();
    for (bits, bins) in [(5, 32), (6, 64), (10, 1024)] {
        let filters: Vec<Vec<f64>> = (0..bits)
            .map(|_| (0..121).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let bank = FilterBank::from_filters(11, &filters).map_err(|e| e.to_string())?;
        let code = encode(&strip, &mask, &bank, PaddingStrategy::MODIFIED).map_err(|e| e.to_string())?;
        let hist = histogram_feature::<f64>(&code, HistogramMode::MaskZeroed).map_err(|e| e.to_string())?;
        ensure(hist.values.len() == bins, || format!("{bits} bits gave {} bins", hist.values.len()))?;
        let full = full_image_feature::<f64>(&code);
        ensure(full.values.len() == 4800, || format!("full-image length {}", full.values.len()))?;
        lens.push(format!("{bits}->{bins}"));
    }
    Ok(format!("histogram bins {}, full image 4800", lens.join(", ")))
}
