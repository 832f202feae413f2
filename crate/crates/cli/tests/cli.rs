use std::path::Path;
use std::process::{Command, Output};

fn mbsif() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mbsif"));
    cmd.env_remove("MBSIF_SEED");
    cmd
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("spawn mbsif")
}

fn ok(cmd: &mut Command) -> String {
    let out = run(cmd);
    assert!(
        out.status.success(),
        "mbsif failed: {}\n{}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn learn_bank(dir: &Path, name: &str, seed: &str) -> std::path::PathBuf {
    let out = dir.join(name);
    ok(mbsif().args(["learn-filters", "--synthetic", "eye", "--synthetic-count", "3"]).args([
        "--size", "5", "--bits", "6", "--patches", "2000", "--seed", seed, "--out",
    ]).arg(&out));
    out
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(run(mbsif().arg("--help")).status.code(), Some(0));
    assert_eq!(run(mbsif().arg("--version")).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(mbsif().arg("--no-such-flag")).status.code(), Some(1));
    assert_eq!(run(&mut mbsif()).status.code(), Some(1));
    assert_eq!(
        run(mbsif().args(["encode", "--bank", "x", "--in", "y", "--bogus"]))
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn runtime_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(mbsif()
        .args(["inspect"])
        .arg(dir.path().join("missing.bank")));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let junk = dir.path().join("junk.bin");
    std::fs::write(&junk, b"not a bank or model").unwrap();
    assert_eq!(run(mbsif().arg("inspect").arg(&junk)).status.code(), Some(2));
}

#[test]
fn even_filter_size_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(mbsif()
        .args(["learn-filters", "--synthetic", "eye", "--synthetic-count", "2"])
        .args(["--size", "6", "--bits", "4", "--patches", "500", "--out"])
        .arg(dir.path().join("b.bank")));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn learn_encode_dump_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let bank = learn_bank(d, "b.bank", "3");
    let info = ok(mbsif().arg("inspect").arg(&bank));
    assert!(info.contains("filter bank"));
    assert!(info.contains("size: 5x5"));
    assert!(info.contains("bits: 6"));
    assert!(info.contains("source: eye"));

    ok(mbsif().args(["synth-corpus", "--subjects", "2", "--out"]).arg(d.join("c")));
    let strip = d.join("s.pgm");
    let mask = d.join("m.pgm");
    ok(mbsif()
        .arg("normalize")
        .arg("--image")
        .arg(d.join("c/images/s0000_l.pgm"))
        .arg("--mask")
        .arg(d.join("c/masks/s0000_l_mask.pgm"))
        .args(["--pupil", "120,120,40", "--iris", "120,120,100", "--out"])
        .arg(&strip)
        .arg("--mask-out")
        .arg(&mask));

    let code = d.join("code.pgm");
    for padding in ["traditional", "modified"] {
        ok(mbsif()
            .args(["encode", "--padding", padding, "--bank"])
            .arg(&bank)
            .arg("--in")
            .arg(&strip)
            .arg("--mask")
            .arg(&mask)
            .arg("--dump-code")
            .arg(&code));
        let img = mbsif::imaging::read_pgm(&std::fs::read(&code).unwrap()).unwrap();
        assert_eq!((img.width(), img.height()), (240, 20));
        assert!(img.data().iter().all(|&p| p < 64));
    }

    let feats = d.join("f.csv");
    let text = ok(mbsif()
        .args(["features", "--feature", "histogram", "--bank"])
        .arg(&bank)
        .arg("--in")
        .arg(&strip)
        .arg("--out")
        .arg(&feats));
    assert!(text.contains("length 64"));
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let flag = learn_bank(d, "flag.bank", "7");
    let env = d.join("env.bank");
    ok(mbsif()
        .env("MBSIF_SEED", "7")
        .args(["learn-filters", "--synthetic", "eye", "--synthetic-count", "3"])
        .args(["--size", "5", "--bits", "6", "--patches", "2000", "--out"])
        .arg(&env));
    let other = learn_bank(d, "other.bank", "8");
    let a = std::fs::read(&flag).unwrap();
    assert_eq!(a, std::fs::read(&env).unwrap());
    assert_ne!(a, std::fs::read(&other).unwrap());
}

#[test]
fn train_evaluate_and_inspect_model() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let bank = learn_bank(d, "b.bank", "0");
    ok(mbsif().args(["synth-corpus", "--subjects", "20", "--out"]).arg(d.join("c")));
    let manifest = d.join("c/manifest.csv");
    for subset in ["train", "test"] {
        ok(mbsif()
            .args(["features", "--subset", subset, "--bank"])
            .arg(&bank)
            .arg("--manifest")
            .arg(&manifest)
            .arg("--out")
            .arg(d.join(format!("{subset}.csv"))));
    }
    let model = d.join("m.model");
    ok(mbsif()
        .args(["train", "--classifier", "forest:15", "--features"])
        .arg(d.join("train.csv"))
        .arg("--out")
        .arg(&model));
    let report = ok(mbsif()
        .arg("evaluate")
        .arg("--model")
        .arg(&model)
        .arg("--features")
        .arg(d.join("test.csv")));
    assert!(report.starts_with("eye,accuracy,male_correct,male_total,female_correct,female_total"));
    let info = ok(mbsif().arg("inspect").arg(&model));
    assert!(info.contains("kind: forest"));
    assert!(info.contains("trees: 15"), "{info}");
}

#[test]
fn grid_output_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let grid = |out: &Path, jobs: &str| {
        ok(mbsif()
            .args(["grid", "--synthetic-subjects", "24", "--sizes", "5,7", "--bits", "5-6"])
            .args(["--patches", "2000", "--classifier", "adaboost:5", "--seed", "4"])
            .args(["--jobs", jobs, "--out"])
            .arg(out));
    };
    grid(&d.join("a.csv"), "1");
    grid(&d.join("b.csv"), "3");
    let a = std::fs::read(d.join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(d.join("b.csv")).unwrap());
    let text = String::from_utf8(a).unwrap();
    let rows = text.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 1 + 2 * 2 * 2 * 2 * 2);

    // A resumed run over a complete file changes nothing.
    ok(mbsif()
        .args(["grid", "--synthetic-subjects", "24", "--sizes", "5,7", "--bits", "5-6"])
        .args(["--patches", "2000", "--classifier", "adaboost:5", "--seed", "4", "--resume", "--out"])
        .arg(d.join("a.csv")));
    assert_eq!(text.as_bytes(), std::fs::read(d.join("a.csv")).unwrap());
}
