//! Resumable filter-size x bits grid with a deterministic results CSV.
//!
//! Rows are appended as configurations finish so an interrupted run keeps
//! its progress. On completion the file is rewritten sorted by config key.
//! The `seconds` column stays empty unless timing is requested, which keeps
//! repeated runs byte-identical.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::banks::BankSource;
use super::experiment::{check_bank, encode_samples, train_and_test, with_config, PreparedCorpus, Protocol, RunConfig};
use super::split::SplitPlan;
use crate::bsif::{FeatureKind, PaddingStrategy};
use crate::classify::ClassifierSpec;
use crate::error::{Error, Result};
use crate::normalize::Eye;

pub const DEFAULT_FILTER_SIZES: [usize; 7] = [5, 7, 9, 11, 13, 15, 17];
pub const DEFAULT_BITS: [usize; 8] = [5, 6, 7, 8, 9, 10, 11, 12];

const HEADER: [&str; 13] = [
    "config_hash",
    "padding",
    "filter_size",
    "bits",
    "feature_kind",
    "classifier",
    "eye",
    "accuracy",
    "male_correct",
    "male_total",
    "female_correct",
    "female_total",
    "seconds",
];

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub filter_sizes: Vec<usize>,
    pub bits: Vec<usize>,
    pub feature_kinds: Vec<FeatureKind>,
    pub paddings: Vec<PaddingStrategy>,
    pub classifiers: Vec<ClassifierSpec>,
    pub eyes: Vec<Eye>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            filter_sizes: DEFAULT_FILTER_SIZES.to_vec(),
            bits: DEFAULT_BITS.to_vec(),
            feature_kinds: vec![FeatureKind::FullImage, FeatureKind::Histogram],
            paddings: vec![PaddingStrategy::TRADITIONAL, PaddingStrategy::MODIFIED],
            classifiers: vec![ClassifierSpec::default()],
            eyes: vec![Eye::Left, Eye::Right],
        }
    }
}

impl GridSpec {
    /// Cartesian product, sorted by key, duplicates removed.
    pub fn configs(&self) -> Vec<RunConfig> {
        let mut out = BTreeMap::new();
        for &eye in &self.eyes {
            for &padding in &self.paddings {
                for &filter_size in &self.filter_sizes {
                    for &bits in &self.bits {
                        for &feature in &self.feature_kinds {
                            for &classifier in &self.classifiers {
                                let c = RunConfig {
                                    eye,
                                    padding,
                                    filter_size,
                                    bits,
                                    feature,
                                    classifier,
                                };
                                out.insert(c.key(), c);
                            }
                        }
                    }
                }
            }
        }
        out.into_values().collect()
    }

    /// One-line description for provenance headers.
    pub fn describe(&self) -> String {
        let join = |v: Vec<String>| v.join(",");
        format!(
            "sizes={} bits={} features={} paddings={} classifiers={} eyes={}",
            join(self.filter_sizes.iter().map(|v| v.to_string()).collect()),
            join(self.bits.iter().map(|v| v.to_string()).collect()),
            join(self.feature_kinds.iter().map(|v| v.to_string()).collect()),
            join(self.paddings.iter().map(|v| v.to_string()).collect()),
            join(self.classifiers.iter().map(|v| v.to_string()).collect()),
            join(self.eyes.iter().map(|v| v.to_string()).collect()),
        )
    }
}

/// One results-CSV line. Metric fields are empty when the config failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub config_hash: String,
    pub padding: String,
    pub filter_size: usize,
    pub bits: usize,
    pub feature_kind: String,
    pub classifier: String,
    pub eye: String,
    pub accuracy: Option<f64>,
    pub male_correct: Option<usize>,
    pub male_total: Option<usize>,
    pub female_correct: Option<usize>,
    pub female_total: Option<usize>,
    pub seconds: Option<f64>,
}

impl ResultRow {
    fn empty(config: &RunConfig, hash: String) -> Self {
        Self {
            config_hash: hash,
            padding: config.padding.to_string(),
            filter_size: config.filter_size,
            bits: config.bits,
            feature_kind: config.feature.to_string(),
            classifier: config.classifier.to_string(),
            eye: config.eye.to_string(),
            accuracy: None,
            male_correct: None,
            male_total: None,
            female_correct: None,
            female_total: None,
            seconds: None,
        }
    }

    /// Same format as [`RunConfig::key`].
    pub fn key(&self) -> String {
        format!(
            "{}|{}|{:02}|{:02}|{}|{}",
            self.eye, self.padding, self.filter_size, self.bits, self.feature_kind, self.classifier
        )
    }

    pub fn succeeded(&self) -> bool {
        self.accuracy.is_some()
    }
}

/// Highest accuracy; ties go to fewer bits, then the smaller filter, then key.
pub fn best_row(rows: &[ResultRow]) -> Option<&ResultRow> {
    rows.iter().filter(|r| r.succeeded()).min_by(|a, b| {
        b.accuracy
            .partial_cmp(&a.accuracy)
            .expect("finite accuracy")
            .then(a.bits.cmp(&b.bits))
            .then(a.filter_size.cmp(&b.filter_size))
            .then(a.key().cmp(&b.key()))
    })
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(w)
}

fn write_preamble(out: &mut impl Write, comments: &[String]) -> std::io::Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "{}", HEADER.join(","))
}

/// Writes rows in the order given after `# ` comment lines and the header.
pub fn write_results(path: impl AsRef<Path>, rows: &[ResultRow], comments: &[String]) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_preamble(&mut buf, comments).map_err(|e| Error::io(path, e))?;
    {
        let mut w = csv_writer(&mut buf);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    // Write-then-rename so a crash never leaves a truncated results file.
    let tmp = path.with_extension("csv.tmp");
    fs::write(&tmp, buf).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_results(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(bytes.as_slice());
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[derive(Clone, Debug, Default)]
pub struct GridOptions {
    /// Worker threads; 0 lets rayon choose.
    pub jobs: usize,
    /// Fill the `seconds` column (makes output timing-dependent).
    pub record_time: bool,
    /// Keep successful rows from an existing output file.
    pub resume: bool,
    /// Provenance lines for the CSV header.
    pub comments: Vec<String>,
}

struct Appender {
    file: Option<BufWriter<File>>,
}

impl Appender {
    fn push(&mut self, row: &ResultRow) -> Result<()> {
        if let Some(f) = &mut self.file {
            let mut w = csv_writer(Vec::new());
            w.serialize(row)?;
            let line = w.into_inner().map_err(|e| Error::Corrupt(e.to_string()))?;
            f.write_all(&line).and_then(|_| f.flush()).map_err(|e| Error::io("results", e))?;
        }
        Ok(())
    }
}

/// Runs every pending configuration and returns all rows sorted by key.
///
/// Configurations sharing eye, filter shape and padding are grouped so each
/// strip is encoded once per group; groups run on a pool of `jobs` threads.
/// A failed configuration is logged and recorded with empty metrics.
pub fn run_grid(
    corpus: &PreparedCorpus,
    split: &SplitPlan,
    grid: &GridSpec,
    banks: &dyn BankSource,
    protocol: &Protocol,
    out: Option<&Path>,
    options: &GridOptions,
) -> Result<Vec<ResultRow>> {
    split.check()?;
    let configs = grid.configs();
    let hashes: BTreeMap<String, String> = configs
        .iter()
        .map(|c| (c.key(), c.hash(protocol, &corpus.name)))
        .collect();

    let mut done: BTreeMap<String, ResultRow> = BTreeMap::new();
    if let (Some(path), true) = (out, options.resume) {
        if path.exists() {
            let wanted: BTreeSet<&String> = hashes.values().collect();
            for row in read_results(path)? {
                if row.succeeded() && wanted.contains(&row.config_hash) {
                    done.insert(row.key(), row);
                }
            }
            log::info!("resuming: {} of {} configurations already complete", done.len(), configs.len());
        }
    }

    let appender = Mutex::new(Appender { file: None });
    if let Some(path) = out {
        let kept: Vec<ResultRow> = done.values().cloned().collect();
        write_results(path, &kept, &options.comments)?;
        let f = OpenOptions::new().append(true).open(path).map_err(|e| Error::io(path, e))?;
        appender.lock().unwrap().file = Some(BufWriter::new(f));
    }

    let mut groups: BTreeMap<(String, usize, usize, String), Vec<RunConfig>> = BTreeMap::new();
    for c in configs.iter().filter(|c| !done.contains_key(&c.key())) {
        let g = (c.eye.to_string(), c.filter_size, c.bits, c.padding.to_string());
        groups.entry(g).or_default().push(*c);
    }
    let groups: Vec<Vec<RunConfig>> = groups.into_values().collect();
    let results = Mutex::new(done);

    let work = || {
        groups.par_iter().try_for_each(|group| -> Result<()> {
            for row in run_group(corpus, split, group, banks, protocol, &hashes, options.record_time) {
                appender.lock().unwrap().push(&row)?;
                results.lock().unwrap().insert(row.key(), row);
            }
            Ok(())
        })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.jobs)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(work)?;

    let rows: Vec<ResultRow> = results.into_inner().unwrap().into_values().collect();
    if let Some(path) = out {
        drop(appender);
        write_results(path, &rows, &options.comments)?;
    }
    Ok(rows)
}

fn run_group(
    corpus: &PreparedCorpus,
    split: &SplitPlan,
    group: &[RunConfig],
    banks: &dyn BankSource,
    protocol: &Protocol,
    hashes: &BTreeMap<String, String>,
    record_time: bool,
) -> Vec<ResultRow> {
    let head = group[0];
    let start = Instant::now();
    let encoded = banks.bank(head.filter_size, head.bits).and_then(|bank| {
        check_bank(&bank, &head)?;
        let indices = corpus.select_per_subject(head.eye, protocol.seed);
        let codes = encode_samples(corpus, &indices, &bank, head.padding)?;
        Ok((indices, codes))
    });
    let encode_secs = start.elapsed().as_secs_f64();
    group
        .iter()
        .map(|config| {
            let mut row = ResultRow::empty(config, hashes[&config.key()].clone());
            let t = Instant::now();
            let outcome = encoded.as_ref().map_err(|e| Error::Shared(e.to_string())).and_then(|(indices, codes)| {
                train_and_test(
                    corpus,
                    indices,
                    codes,
                    &split.train_subjects,
                    &split.test_subjects,
                    config.feature,
                    config.classifier,
                    protocol,
                )
            });
            match outcome {
                Ok((counts, _)) => {
                    row.accuracy = Some(counts.accuracy());
                    row.male_correct = Some(counts.male_correct);
                    row.male_total = Some(counts.male_total);
                    row.female_correct = Some(counts.female_correct);
                    row.female_total = Some(counts.female_total);
                    if record_time {
                        row.seconds = Some(encode_secs + t.elapsed().as_secs_f64());
                    }
                }
                Err(e) => log::warn!("{}", with_config(config, e)),
            }
            row
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::banks::FixedBanks;
    use super::super::split::make_split;
    use super::super::synth::{synthetic_corpus, SynthParams};
    use super::*;
    use crate::learn::FilterBank;

    fn bank(size: usize, bits: usize) -> FilterBank {
        let filters: Vec<Vec<f64>> = (0..bits)
            .map(|b| (0..size * size).map(|k| (((k * 7 + b * 13) % 5) as f64) - 2.0).collect())
            .collect();
        FilterBank::from_filters(size, &filters).unwrap()
    }

    fn setup() -> (PreparedCorpus, SplitPlan, GridSpec, FixedBanks) {
        let corpus = synthetic_corpus(&SynthParams {
            subjects: 30,
            seed: 1,
            ..Default::default()
        })
        .unwrap();
        let split = make_split(&corpus.subjects(), 0.8, 3).unwrap();
        let grid = GridSpec {
            filter_sizes: vec![3, 5],
            bits: vec![4, 5],
            feature_kinds: vec![FeatureKind::Histogram, FeatureKind::FullImage],
            paddings: vec![PaddingStrategy::MODIFIED, PaddingStrategy::TRADITIONAL],
            classifiers: vec![ClassifierSpec::AdaBoost { rounds: 5 }],
            eyes: vec![Eye::Left],
        };
        let banks = FixedBanks::new([bank(3, 4), bank(3, 5), bank(5, 4), bank(5, 5)]);
        (corpus, split, grid, banks)
    }

    #[test]
    fn configs_are_sorted_product() {
        let g = GridSpec::default();
        let c = g.configs();
        assert_eq!(c.len(), 7 * 8 * 2 * 2 * 2);
        assert!(c.windows(2).all(|w| w[0].key() < w[1].key()));
    }

    #[test]
    fn grid_rows_resume_and_determinism() {
        let (corpus, split, grid, banks) = setup();
        let dir = tempfile::tempdir().unwrap();
        let p = Protocol::default();
        let opts = GridOptions {
            jobs: 2,
            comments: vec!["test grid".into()],
            ..Default::default()
        };
        let a = dir.path().join("a.csv");
        let rows = run_grid(&corpus, &split, &grid, &banks, &p, Some(&a), &opts).unwrap();
        assert_eq!(rows.len(), 16);
        assert!(rows.iter().all(|r| r.succeeded() && r.seconds.is_none()));
        for r in &rows {
            let (mc, mt, fc, ft) = (r.male_correct.unwrap(), r.male_total.unwrap(), r.female_correct.unwrap(), r.female_total.unwrap());
            assert_eq!(r.accuracy.unwrap(), (mc + fc) as f64 / (mt + ft) as f64);
        }
        assert_eq!(read_results(&a).unwrap(), rows);

        let b = dir.path().join("b.csv");
        run_grid(&corpus, &split, &grid, &banks, &p, Some(&b), &GridOptions { jobs: 1, ..opts.clone() }).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

        // Simulate a kill: keep the preamble and five rows, shuffled.
        let text = fs::read_to_string(&a).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        let partial = [&lines[..2], &[lines[9], lines[3], lines[12], lines[5], lines[17]]].concat().join("\n") + "\n";
        let c = dir.path().join("c.csv");
        fs::write(&c, partial).unwrap();
        let resumed = run_grid(&corpus, &split, &grid, &banks, &p, Some(&c), &GridOptions { resume: true, ..opts }).unwrap();
        assert_eq!(resumed, rows);
        assert_eq!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
    }

    #[test]
    fn failures_are_recorded_and_run_continues() {
        let (corpus, split, mut grid, _) = setup();
        grid.filter_sizes = vec![3, 7];
        let banks = FixedBanks::new([bank(3, 4), bank(3, 5)]);
        let rows = run_grid(&corpus, &split, &grid, &banks, &Protocol::default(), None, &GridOptions::default()).unwrap();
        assert_eq!(rows.len(), 16);
        assert_eq!(rows.iter().filter(|r| r.succeeded()).count(), 8);
        assert!(rows.iter().filter(|r| !r.succeeded()).all(|r| r.filter_size == 7));
    }

    #[test]
    fn best_row_tie_break() {
        let mk = |size, bits, acc| ResultRow {
            accuracy: acc,
            ..ResultRow::empty(
                &RunConfig {
                    eye: Eye::Left,
                    padding: PaddingStrategy::MODIFIED,
                    filter_size: size,
                    bits,
                    feature: FeatureKind::Histogram,
                    classifier: ClassifierSpec::default(),
                },
                String::new(),
            )
        };
        let rows = vec![mk(9, 8, Some(0.9)), mk(7, 8, Some(0.9)), mk(11, 6, Some(0.9)), mk(5, 5, Some(0.8)), mk(3, 3, None)];
        let best = best_row(&rows).unwrap();
        assert_eq!((best.filter_size, best.bits), (11, 6));
        assert!(best_row(&rows[4..]).is_none());
    }
}
