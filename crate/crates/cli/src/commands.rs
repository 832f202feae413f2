use std::fs;
use std::path::{Path, PathBuf};

use mbsif::bsif::{full_image_feature, histogram_feature, read_features_csv, save_code_image, write_features_csv};
use mbsif::classify::{load_model, model_from_bytes, save_model};
use mbsif::harness::{
    best_row, cross_validate, load_manifest, make_split, run_config, run_grid, synthetic_corpus, synthetic_eye_images,
    synthetic_natural_images, write_synthetic_corpus, BankSource, FixedBanks, GridOptions, GridSpec, LearnedBanks,
    PreparedCorpus, Protocol, RunConfig, SynthParams,
};
use mbsif::imaging::{load_gray, save_gray_with_comments};
use mbsif::learn::{learn_filterbank, load_filterbank, save_filterbank, CorpusKind, FilterBank};
use mbsif::{
    apply_mask_zero, encode, rubber_sheet, BitMask, Circle, Classifier, Error, FeatureKind, FeatureVector, Gender,
    GrayImage, IrisAnnotation, LabeledDataset, Model, NormalizedIris, Result,
};

use crate::{
    Command, EncodeArgs, EvaluateArgs, FeaturesArgs, GridArgs, InspectArgs, LearnArgs, NormalizeArgs, ProtocolArgs,
    Subset, SynthArgs, SyntheticImages, TrainArgs,
};

const SYNTHETIC_IMAGE_SIZE: usize = 240;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::LearnFilters(a) => learn_filters(a),
        Command::Normalize(a) => normalize(a),
        Command::Encode(a) => encode_strip(a),
        Command::Features(a) => features(a),
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Grid(a) => grid(a),
        Command::SynthCorpus(a) => synth_corpus(a),
        Command::Inspect(a) => inspect(a),
    }
}

/// Provenance lines: tool version and the equivalent command, without
/// output paths, so identical runs get identical headers.
fn provenance(sub: &str, flags: &[(&str, String)]) -> Vec<String> {
    let mut cmd = format!("mbsif {sub}");
    for (flag, value) in flags {
        if value.is_empty() {
            cmd.push_str(&format!(" --{flag}"));
        } else {
            cmd.push_str(&format!(" --{flag} {value}"));
        }
    }
    vec![format!("mbsif {}", env!("CARGO_PKG_VERSION")), format!("command: {cmd}")]
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn protocol_flags(p: &ProtocolArgs) -> Vec<(&'static str, String)> {
    vec![
        ("seed", p.seed.seed.to_string()),
        ("train-fraction", p.train_fraction.to_string()),
        ("histogram-mode", p.histogram_mode.as_str().to_string()),
    ]
}

fn protocol(p: &ProtocolArgs) -> Protocol {
    Protocol {
        seed: p.seed.seed,
        train_fraction: p.train_fraction,
        histogram_mode: p.histogram_mode,
    }
}

/// PGM and PNG files of a directory, in file-name order.
fn load_image_dir(dir: &Path) -> Result<Vec<GrayImage>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .map(|x| matches!(x.to_ascii_lowercase().to_str(), Some("pgm" | "png")))
                .unwrap_or(false)
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::InvalidParameter(format!("no .pgm or .png images in {}", dir.display())));
    }
    paths.iter().map(load_gray).collect()
}

fn synthetic_images(kind: SyntheticImages, count: usize, seed: u64) -> Result<Vec<GrayImage>> {
    match kind {
        SyntheticImages::Eye => synthetic_eye_images(count, SYNTHETIC_IMAGE_SIZE, seed),
        SyntheticImages::Natural => synthetic_natural_images(count, SYNTHETIC_IMAGE_SIZE, seed),
    }
}

fn synthetic_kind(kind: SyntheticImages) -> (CorpusKind, &'static str) {
    match kind {
        SyntheticImages::Eye => (CorpusKind::Eye, "eye"),
        SyntheticImages::Natural => (CorpusKind::Natural, "natural"),
    }
}

fn describe_bank(bank: &FilterBank) -> String {
    let w = bank.weights();
    let norms: Vec<f64> = (0..bank.bits())
        .map(|i| w.row(i).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let min = norms.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = norms.iter().cloned().fold(0.0, f64::max);
    format!(
        "filter bank\nsize: {0}x{0}\nbits: {1}\nsource: {2}\ncorpus: {3}\nseed: {4}\nfilter norms: {min:.6} to {max:.6}",
        bank.size(),
        bank.bits(),
        bank.source,
        bank.corpus,
        bank.seed
    )
}

fn learn_filters(a: LearnArgs) -> Result<()> {
    let seed = a.seed.seed;
    let mut flags = Vec::new();
    let (images, default_kind, source) = match (&a.corpus, a.synthetic) {
        (Some(dir), _) => {
            flags.push(("corpus", path_str(dir)));
            (load_image_dir(dir)?, CorpusKind::Custom, path_str(dir))
        }
        (None, Some(kind)) => {
            let (ck, name) = synthetic_kind(kind);
            flags.push(("synthetic", name.to_string()));
            flags.push(("synthetic-count", a.synthetic_count.to_string()));
            (synthetic_images(kind, a.synthetic_count, seed)?, ck, format!("synthetic {name} images"))
        }
        (None, None) => unreachable!("clap requires a corpus"),
    };
    let kind = a.corpus_kind.unwrap_or(default_kind);
    flags.extend([
        ("corpus-kind", kind.to_string()),
        ("size", a.size.to_string()),
        ("bits", a.bits.to_string()),
        ("patches", a.patches.to_string()),
        ("seed", seed.to_string()),
    ]);
    let header = provenance("learn-filters", &flags);
    let description = format!("{} images from {source}; {}; {}", images.len(), header[0], header[1]);
    let bank: FilterBank = learn_filterbank(&images, a.size, a.bits, a.patches, seed)?;
    let bank = bank.with_source(kind, description);
    save_filterbank(&bank, &a.out)?;
    println!("{}", describe_bank(&bank));
    Ok(())
}

fn load_mask(path: Option<&Path>, width: usize, height: usize) -> Result<BitMask> {
    match path {
        Some(p) => {
            let m = BitMask::from_gray(&load_gray(p)?);
            if !m.same_dims(width, height) {
                return Err(Error::Dimensions(format!(
                    "mask {} is {}x{}, expected {width}x{height}",
                    p.display(),
                    m.width(),
                    m.height()
                )));
            }
            Ok(m)
        }
        None => BitMask::filled(width, height, false),
    }
}

fn normalize(a: NormalizeArgs) -> Result<()> {
    let image = load_gray(&a.image)?;
    let occlusion = load_mask(a.mask.as_deref(), image.width(), image.height())?;
    let (px, py, pr) = a.pupil;
    let (ix, iy, ir) = a.iris;
    let ann = IrisAnnotation::new(Circle::new(px, py, pr)?, Circle::new(ix, iy, ir)?, occlusion)?;
    let iris: NormalizedIris = rubber_sheet(&image, &ann, a.radial, a.angular)?;
    let iris = if a.keep_occluded { iris } else { apply_mask_zero(&iris) };
    let mut flags = vec![("image", path_str(&a.image))];
    if let Some(m) = &a.mask {
        flags.push(("mask", path_str(m)));
    }
    flags.extend([
        ("pupil", format!("{px},{py},{pr}")),
        ("iris", format!("{ix},{iy},{ir}")),
        ("radial", a.radial.to_string()),
        ("angular", a.angular.to_string()),
    ]);
    if a.keep_occluded {
        flags.push(("keep-occluded", String::new()));
    }
    let header = provenance("normalize", &flags);
    save_gray_with_comments(&iris.strip.to_gray(), &a.out, &header)?;
    if let Some(p) = &a.mask_out {
        save_gray_with_comments(&iris.mask.to_gray(), p, &header)?;
    }
    println!(
        "strip {}x{} ({} of {} samples occluded)",
        iris.radial(),
        iris.angular(),
        iris.mask.count_set(),
        iris.radial() * iris.angular()
    );
    Ok(())
}

fn load_strip(input: &Path, mask: Option<&Path>) -> Result<NormalizedIris> {
    let strip = load_gray(input)?.to_float::<f64>();
    let mask = load_mask(mask, strip.width(), strip.height())?;
    NormalizedIris::new(strip, mask)
}

fn encode_strip(a: EncodeArgs) -> Result<()> {
    let bank: FilterBank = load_filterbank(&a.bank)?;
    let iris = load_strip(&a.input, a.mask.as_deref())?;
    let code = encode(&iris.strip, &iris.mask, &bank, a.padding)?;
    if let Some(p) = &a.dump_code {
        let mut flags = vec![("bank", path_str(&a.bank)), ("in", path_str(&a.input))];
        if let Some(m) = &a.mask {
            flags.push(("mask", path_str(m)));
        }
        flags.push(("padding", a.padding.to_string()));
        save_code_image(&code, p, &provenance("encode", &flags))?;
    }
    let distinct = code.codes().iter().collect::<std::collections::BTreeSet<_>>().len();
    println!(
        "code image {}x{}, {} bits, {} distinct codes, padding {}",
        code.height(),
        code.width(),
        code.bits(),
        distinct,
        a.padding
    );
    Ok(())
}

fn feature_of(code: &mbsif::CodeImage, kind: FeatureKind, p: &Protocol) -> Result<FeatureVector> {
    match kind {
        FeatureKind::Histogram => histogram_feature(code, p.histogram_mode),
        FeatureKind::FullImage => Ok(full_image_feature(code)),
    }
}

fn load_corpus(manifest: &Path) -> Result<PreparedCorpus> {
    PreparedCorpus::from_manifest_default(&load_manifest(manifest)?)
}

fn features(a: FeaturesArgs) -> Result<()> {
    let bank: FilterBank = load_filterbank(&a.bank)?;
    let p = protocol(&a.protocol);
    let mut flags = vec![("bank", path_str(&a.bank))];
    let mut out = Vec::new();
    if let Some(input) = &a.input {
        flags.push(("in", path_str(input)));
        if let Some(m) = &a.mask {
            flags.push(("mask", path_str(m)));
        }
        let iris = load_strip(input, a.mask.as_deref())?;
        let code = encode(&iris.strip, &iris.mask, &bank, a.padding)?;
        let id = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        out.push(feature_of(&code, a.feature, &p)?.with_meta(id, mbsif::Eye::Left, Gender::Unknown));
    } else if let Some(manifest) = &a.manifest {
        flags.push(("manifest", path_str(manifest)));
        flags.push(("eye", format!("{:?}", a.eye).to_lowercase()));
        flags.push(("subset", format!("{:?}", a.subset).to_lowercase()));
        let corpus = load_corpus(manifest)?;
        let split = match a.subset {
            Subset::All => None,
            _ => Some(make_split(&corpus.subjects(), p.train_fraction, p.seed)?),
        };
        for eye in a.eye.eyes() {
            for i in corpus.select_per_subject(eye, p.seed) {
                let s = &corpus.samples[i];
                let keep = match (&split, a.subset) {
                    (Some(sp), Subset::Train) => sp.train_subjects.contains(&s.subject_id),
                    (Some(sp), Subset::Test) => sp.test_subjects.contains(&s.subject_id),
                    _ => true,
                };
                if keep {
                    let code = encode(&s.iris.strip, &s.iris.mask, &bank, a.padding)?;
                    out.push(feature_of(&code, a.feature, &p)?.with_meta(s.sample_id.clone(), s.eye, s.gender));
                }
            }
        }
    }
    flags.extend([("padding", a.padding.to_string()), ("feature", a.feature.to_string())]);
    flags.extend(protocol_flags(&a.protocol));
    write_features_csv(&a.out, &out, &provenance("features", &flags))?;
    println!("{} feature vectors of length {}", out.len(), out.first().map_or(0, |f| f.values.len()));
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let vectors: Vec<FeatureVector> = read_features_csv(&a.features)?;
    let data = LabeledDataset::from_features(&vectors)?;
    let model = a.classifier.fit(&data, a.seed.seed)?;
    let header = provenance(
        "train",
        &[
            ("features", path_str(&a.features)),
            ("classifier", a.classifier.to_string()),
            ("seed", a.seed.seed.to_string()),
        ],
    );
    save_model(&model, &header.join("\n"), &a.out)?;
    let correct = (0..data.len())
        .filter(|&i| model.predict(data.row(i)).map(|p| p.label == data.gender(i)).unwrap_or(false))
        .count();
    println!(
        "{} model on {} samples x {} features, training accuracy {:.4}",
        model.kind_name(),
        data.len(),
        data.dim(),
        correct as f64 / data.len() as f64
    );
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    println!("eye,accuracy,male_correct,male_total,female_correct,female_total");
    if let (Some(model_path), Some(features)) = (&a.model, &a.features) {
        let (model, _): (Model, String) = load_model(model_path)?;
        let vectors: Vec<FeatureVector> = read_features_csv(features)?;
        let mut counts = [0usize; 4];
        for v in vectors.iter().filter(|v| v.label != Gender::Unknown) {
            let hit = usize::from(model.predict(&v.values)?.label == v.label);
            let k = if v.label == Gender::Male { 0 } else { 2 };
            counts[k] += hit;
            counts[k + 1] += 1;
        }
        let total = counts[1] + counts[3];
        if total == 0 {
            return Err(Error::InvalidParameter("no labelled feature vectors to evaluate".into()));
        }
        let acc = (counts[0] + counts[2]) as f64 / total as f64;
        println!("all,{acc},{},{},{},{}", counts[0], counts[1], counts[2], counts[3]);
        return Ok(());
    }
    let manifest = a.manifest.as_ref().expect("clap enforces manifest or model");
    let bank: FilterBank = load_filterbank(a.bank.as_ref().expect("clap enforces bank"))?;
    let corpus = load_corpus(manifest)?;
    let p = protocol(&a.protocol);
    let split = make_split(&corpus.subjects(), p.train_fraction, p.seed)?;
    for eye in a.eye.eyes() {
        let config = RunConfig {
            eye,
            padding: a.padding,
            filter_size: bank.size(),
            bits: bank.bits(),
            feature: a.feature,
            classifier: a.classifier,
        };
        let r = run_config(&corpus, &split, &config, &bank, &p)?;
        let c = r.counts;
        println!(
            "{eye},{},{},{},{},{}",
            r.accuracy, c.male_correct, c.male_total, c.female_correct, c.female_total
        );
        if a.cv {
            let cv = cross_validate(&corpus, &split, &config, &bank, &p)?;
            eprintln!("{eye}: 5-fold CV mean {:.4} std {:.4} folds {:?}", cv.mean, cv.std, cv.fold_accuracies);
        }
    }
    Ok(())
}

fn grid(a: GridArgs) -> Result<()> {
    let p = protocol(&a.protocol);
    let mut flags = Vec::new();
    let corpus = match (&a.manifest, a.synthetic_subjects) {
        (Some(m), _) => {
            flags.push(("manifest", path_str(m)));
            load_corpus(m)?
        }
        (None, Some(n)) => {
            flags.push(("synthetic-subjects", n.to_string()));
            synthetic_corpus(&SynthParams {
                subjects: n,
                seed: p.seed,
                ..Default::default()
            })?
        }
        (None, None) => unreachable!("clap requires a corpus"),
    };
    let spec = GridSpec {
        filter_sizes: a.sizes.clone(),
        bits: a.bits.clone(),
        feature_kinds: a.feature.clone(),
        paddings: a.padding.clone(),
        classifiers: a.classifier.clone(),
        eyes: a.eye.eyes(),
    };
    let join = |v: Vec<String>| v.join(",");
    flags.extend([
        ("sizes", join(a.sizes.iter().map(|v| v.to_string()).collect())),
        ("bits", join(a.bits.iter().map(|v| v.to_string()).collect())),
        ("padding", join(a.padding.iter().map(|v| v.to_string()).collect())),
        ("feature", join(a.feature.iter().map(|v| v.to_string()).collect())),
        ("classifier", join(a.classifier.iter().map(|v| v.to_string()).collect())),
        ("eye", format!("{:?}", a.eye).to_lowercase()),
    ]);
    let banks: Box<dyn BankSource> = if !a.banks.is_empty() {
        for b in &a.banks {
            flags.push(("bank", path_str(b)));
        }
        let loaded = a.banks.iter().map(load_filterbank).collect::<Result<Vec<FilterBank>>>()?;
        Box::new(FixedBanks::new(loaded))
    } else {
        let (images, kind, description) = match (&a.bank_corpus, a.bank_synthetic) {
            (Some(dir), _) => {
                flags.push(("bank-corpus", path_str(dir)));
                (load_image_dir(dir)?, CorpusKind::Custom, path_str(dir))
            }
            (None, choice) => {
                let choice = choice.unwrap_or(SyntheticImages::Eye);
                let (ck, name) = synthetic_kind(choice);
                flags.push(("bank-synthetic", name.to_string()));
                (synthetic_images(choice, 13, p.seed)?, ck, format!("13 synthetic {name} images"))
            }
        };
        flags.push(("patches", a.patches.to_string()));
        Box::new(LearnedBanks::new(images, kind, description, p.seed).with_patches(a.patches))
    };
    flags.extend(protocol_flags(&a.protocol));
    let mut comments = provenance("grid", &flags);
    comments.push(format!("corpus: {} ({} samples)", corpus.name, corpus.samples.len()));
    let split = make_split(&corpus.subjects(), p.train_fraction, p.seed)?;
    let options = GridOptions {
        jobs: a.jobs,
        record_time: a.record_time,
        resume: a.resume,
        comments,
    };
    let rows = run_grid(&corpus, &split, &spec, banks.as_ref(), &p, Some(&a.out), &options)?;
    let failed = rows.iter().filter(|r| !r.succeeded()).count();
    println!("{} configurations, {} failed, results in {}", rows.len(), failed, a.out.display());
    for eye in a.eye.eyes() {
        let of_eye: Vec<_> = rows.iter().filter(|r| r.eye == eye.as_str()).cloned().collect();
        if let Some(b) = best_row(&of_eye) {
            println!(
                "best {eye}: {}x{} {} bits, {} padding, {} {} -> {}",
                b.filter_size,
                b.filter_size,
                b.bits,
                b.padding,
                b.feature_kind,
                b.classifier,
                b.accuracy.unwrap_or(f64::NAN)
            );
        }
    }
    if failed == rows.len() && !rows.is_empty() {
        return Err(Error::InvalidParameter("every configuration failed; see warnings".into()));
    }
    Ok(())
}

fn synth_corpus(a: SynthArgs) -> Result<()> {
    let seed = a.seed.seed;
    let header = provenance(
        "synth-corpus",
        &[
            ("subjects", a.subjects.to_string()),
            ("seed", seed.to_string()),
            ("eye-images", a.eye_images.to_string()),
            ("natural-images", a.natural_images.to_string()),
        ],
    );
    let params = SynthParams {
        subjects: a.subjects,
        seed,
        ..Default::default()
    };
    let manifest = write_synthetic_corpus(&a.out, &params, &header)?;
    for (count, kind, dir) in [
        (a.eye_images, SyntheticImages::Eye, "eyes"),
        (a.natural_images, SyntheticImages::Natural, "natural"),
    ] {
        if count == 0 {
            continue;
        }
        let d = a.out.join(dir);
        fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
        for (i, img) in synthetic_images(kind, count, seed)?.iter().enumerate() {
            save_gray_with_comments(img, d.join(format!("{dir}_{i:03}.pgm")), &header)?;
        }
    }
    println!("{} subjects written; manifest {}", a.subjects, manifest.display());
    Ok(())
}

fn inspect(a: InspectArgs) -> Result<()> {
    let bytes = fs::read(&a.path).map_err(|e| Error::io(&a.path, e))?;
    if bytes.starts_with(b"MBSIFB") {
        let bank: FilterBank = FilterBank::from_bytes(&bytes)?;
        println!("{}", describe_bank(&bank));
        if a.weights {
            for i in 0..bank.bits() {
                let row: Vec<String> = bank.filter(i).iter().map(|v| v.to_string()).collect();
                println!("filter {i}: {}", row.join(" "));
            }
        }
    } else if bytes.starts_with(b"MBSIFM") {
        let (model, prov): (Model, String) = model_from_bytes(&bytes)?;
        println!("model\nkind: {}\nfeatures: {}", model.kind_name(), model.dim());
        match &model {
            Model::Boost(b) => println!("rounds: {}\nstumps: {}", b.rounds, b.stumps.len()),
            Model::Forest(f) => println!(
                "trees: {}\nfeatures per split: {}\nseed: {}",
                f.tree_count(),
                f.features_per_split,
                f.seed
            ),
        }
        for line in prov.lines() {
            println!("provenance: {line}");
        }
    } else {
        return Err(Error::Corrupt(format!("{} is neither a filter bank nor a model", a.path.display())));
    }
    Ok(())
}
