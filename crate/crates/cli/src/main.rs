use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mbsif::bsif::HistogramMode;
use mbsif::learn::CorpusKind;
use mbsif::{ClassifierSpec, Eye, FeatureKind, PaddingStrategy};

mod commands;
mod lists;

#[derive(Debug, Parser)]
#[command(name = "mbsif", version, about = "Binary statistical image features for normalized iris strips")]
struct Cli {
    /// More log output on standard error (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Learn a filter bank from a directory of images or a synthetic corpus.
    LearnFilters(LearnArgs),
    /// Unwrap an annotated eye image into a polar strip.
    Normalize(NormalizeArgs),
    /// Encode a strip into a code image.
    Encode(EncodeArgs),
    /// Write feature vectors for a strip or a manifest to CSV.
    Features(FeaturesArgs),
    /// Fit a classifier on a feature CSV.
    Train(TrainArgs),
    /// Score a model on a feature CSV, or run the full protocol on a manifest.
    Evaluate(EvaluateArgs),
    /// Run the filter-size x bits grid and write a results CSV.
    Grid(GridArgs),
    /// Write a synthetic labelled eye-image corpus with manifest.
    SynthCorpus(SynthArgs),
    /// Print filter-bank or model metadata.
    Inspect(InspectArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EyeChoice {
    Left,
    Right,
    Both,
}

impl EyeChoice {
    fn eyes(self) -> Vec<Eye> {
        match self {
            EyeChoice::Left => vec![Eye::Left],
            EyeChoice::Right => vec![Eye::Right],
            EyeChoice::Both => vec![Eye::Left, Eye::Right],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SyntheticImages {
    Eye,
    Natural,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Subset {
    Train,
    Test,
    All,
}

#[derive(Debug, Args)]
struct SeedArg {
    /// RNG seed; falls back to MBSIF_SEED, then 0.
    #[arg(long, env = "MBSIF_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct LearnArgs {
    /// Directory of PGM/PNG training images.
    #[arg(long, required_unless_present = "synthetic", conflicts_with = "synthetic")]
    corpus: Option<PathBuf>,
    /// Generate the training images instead of reading them.
    #[arg(long, value_enum)]
    synthetic: Option<SyntheticImages>,
    /// Number of synthetic images.
    #[arg(long, default_value_t = 13)]
    synthetic_count: usize,
    /// Kind recorded in the bank (default: eye for synthetic eyes, natural for
    /// synthetic natural images, custom otherwise).
    #[arg(long)]
    corpus_kind: Option<CorpusKind>,
    /// Filter size l (odd).
    #[arg(long, default_value_t = 11)]
    size: usize,
    /// Number of filters n.
    #[arg(long, default_value_t = 8)]
    bits: usize,
    #[arg(long, default_value_t = mbsif::learn::DEFAULT_PATCH_COUNT)]
    patches: usize,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct NormalizeArgs {
    #[arg(long)]
    image: PathBuf,
    /// Occlusion mask PGM (>= 128 means occluded).
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Pupil circle as cx,cy,r.
    #[arg(long, value_parser = lists::parse_circle)]
    pupil: (f64, f64, f64),
    /// Iris circle as cx,cy,r.
    #[arg(long, value_parser = lists::parse_circle)]
    iris: (f64, f64, f64),
    #[arg(long, default_value_t = mbsif::normalize::DEFAULT_RADIAL)]
    radial: usize,
    #[arg(long, default_value_t = mbsif::normalize::DEFAULT_ANGULAR)]
    angular: usize,
    /// Keep occluded strip values instead of zeroing them.
    #[arg(long)]
    keep_occluded: bool,
    /// Output strip PGM.
    #[arg(long)]
    out: PathBuf,
    /// Output strip mask PGM.
    #[arg(long)]
    mask_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EncodeArgs {
    #[arg(long)]
    bank: PathBuf,
    /// Strip PGM.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    mask: Option<PathBuf>,
    /// traditional, modified, replicate, or radial/angular modes.
    #[arg(long, default_value = "modified")]
    padding: PaddingStrategy,
    /// Write the code image (8-bit PGM up to 8 bits, else 16-bit).
    #[arg(long)]
    dump_code: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ProtocolArgs {
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long, default_value_t = mbsif::harness::DEFAULT_TRAIN_FRACTION)]
    train_fraction: f64,
    /// zeroed counts every pixel, excluded skips occluded ones.
    #[arg(long, default_value = "zeroed")]
    histogram_mode: HistogramMode,
}

#[derive(Debug, Args)]
struct FeaturesArgs {
    #[arg(long)]
    bank: PathBuf,
    /// Single strip PGM.
    #[arg(long = "in", conflicts_with = "manifest", required_unless_present = "manifest")]
    input: Option<PathBuf>,
    #[arg(long, requires = "input")]
    mask: Option<PathBuf>,
    /// Annotation manifest CSV.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, default_value = "modified")]
    padding: PaddingStrategy,
    #[arg(long, default_value = "histogram")]
    feature: FeatureKind,
    /// Manifest only: one image per subject for this eye.
    #[arg(long, value_enum, default_value = "left")]
    eye: EyeChoice,
    /// Manifest only: which side of the subject-disjoint split to emit.
    #[arg(long, value_enum, default_value = "all")]
    subset: Subset,
    #[command(flatten)]
    protocol: ProtocolArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Feature CSV with gender labels.
    #[arg(long)]
    features: PathBuf,
    /// adaboost[:T], logitboost[:T] or forest[:trees[:features[:depth]]].
    #[arg(long, default_value = "adaboost:100")]
    classifier: ClassifierSpec,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Model file (feature-CSV mode).
    #[arg(long, requires = "features", conflicts_with = "manifest")]
    model: Option<PathBuf>,
    #[arg(long)]
    features: Option<PathBuf>,
    /// Manifest (protocol mode): split, train and test in one go.
    #[arg(long, required_unless_present = "model", requires = "bank")]
    manifest: Option<PathBuf>,
    #[arg(long)]
    bank: Option<PathBuf>,
    #[arg(long, default_value = "modified")]
    padding: PaddingStrategy,
    #[arg(long, default_value = "histogram")]
    feature: FeatureKind,
    #[arg(long, default_value = "adaboost:100")]
    classifier: ClassifierSpec,
    #[arg(long, value_enum, default_value = "both")]
    eye: EyeChoice,
    /// Also report 5-fold cross-validation on the training subjects.
    #[arg(long)]
    cv: bool,
    #[command(flatten)]
    protocol: ProtocolArgs,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Annotation manifest CSV.
    #[arg(long, required_unless_present = "synthetic_subjects", conflicts_with = "synthetic_subjects")]
    manifest: Option<PathBuf>,
    /// Use the built-in synthetic strip corpus with this many subjects.
    #[arg(long)]
    synthetic_subjects: Option<usize>,
    /// Filter sizes, e.g. 5,7,9 or 5-17 (even values are rejected by the bank).
    #[arg(long, default_value = "5,7,9,11,13,15,17", value_parser = lists::parse_ranges)]
    sizes: ::std::vec::Vec<usize>,
    #[arg(long, default_value = "5-12", value_parser = lists::parse_ranges)]
    bits: ::std::vec::Vec<usize>,
    #[arg(long, default_value = "traditional,modified", value_parser = lists::parse_list::<PaddingStrategy>)]
    padding: ::std::vec::Vec<PaddingStrategy>,
    #[arg(long, default_value = "full_image,histogram", value_parser = lists::parse_list::<FeatureKind>)]
    feature: ::std::vec::Vec<FeatureKind>,
    #[arg(long, default_value = "adaboost:100", value_parser = lists::parse_list::<ClassifierSpec>)]
    classifier: ::std::vec::Vec<ClassifierSpec>,
    #[arg(long, value_enum, default_value = "both")]
    eye: EyeChoice,
    /// Pre-built bank files (one per size/bits); otherwise banks are learned.
    #[arg(long = "bank")]
    banks: Vec<PathBuf>,
    /// Directory of images to learn banks from (default: synthetic eyes).
    #[arg(long, conflicts_with = "bank_synthetic")]
    bank_corpus: Option<PathBuf>,
    #[arg(long, value_enum)]
    bank_synthetic: Option<SyntheticImages>,
    #[arg(long, default_value_t = mbsif::learn::DEFAULT_PATCH_COUNT)]
    patches: usize,
    #[command(flatten)]
    protocol: ProtocolArgs,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Keep completed rows from an existing output file.
    #[arg(long)]
    resume: bool,
    /// Fill the seconds column (output then varies between runs).
    #[arg(long)]
    record_time: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 400)]
    subjects: usize,
    #[command(flatten)]
    seed: SeedArg,
    /// Also write this many synthetic eye images to OUT/eyes for learn-filters.
    #[arg(long, default_value_t = 0)]
    eye_images: usize,
    /// Also write this many natural images to OUT/natural.
    #[arg(long, default_value_t = 0)]
    natural_images: usize,
}

#[derive(Debug, Args)]
struct InspectArgs {
    /// Filter bank or model file.
    path: PathBuf,
    /// Also print every filter weight.
    #[arg(long)]
    weights: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
