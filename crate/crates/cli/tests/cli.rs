//! End-to-end tests of the `wallprobe` binary: happy paths on a coarse-grid
//! dataset plus the documented exit codes (2 config, 3 divergence, 4 I/O).

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wallprobe"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn wallprobe")
}

fn assert_code(out: &Output, code: i32, ctx: &str) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "{ctx}: stdout={} stderr={}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Shared fixture: a 6-wall coarse-grid dataset and a small trained
/// frequency-input model, generated once per test binary.
struct Fixture {
    _dir: TempDir,
    dataset: PathBuf,
    models: PathBuf,
    model: PathBuf,
    case: PathBuf,
}

fn fixture() -> &'static Fixture {
    static FIX: OnceLock<Fixture> = OnceLock::new();
    FIX.get_or_init(|| {
        let dir = TempDir::new().unwrap();
        let dataset = dir.path().join("dataset");
        let out = run(&[
            "gen-dataset",
            "--out",
            dataset.to_str().unwrap(),
            "--types",
            "homo",
            "--limit",
            "6",
            "--grid-dx",
            "0.05",
        ]);
        assert_code(&out, 0, "gen-dataset fixture");
        let models = dir.path().join("models");
        std::fs::create_dir(&models).unwrap();
        let model = models.join("fcnn-f.wpm");
        let out = run(&[
            "train",
            "--dataset",
            dataset.to_str().unwrap(),
            "--model",
            "fcnn-f",
            "--epochs",
            "5",
            "--seed",
            "1",
            "--out",
            model.to_str().unwrap(),
        ]);
        assert_code(&out, 0, "train fixture");
        let case = dataset.join("homo").join("homo-0001.wpb");
        assert!(case.is_file());
        Fixture {
            _dir: dir,
            dataset,
            models,
            model,
            case,
        }
    })
}

fn gen_dataset(out_dir: &Path) -> Output {
    run(&[
        "gen-dataset",
        "--out",
        out_dir.to_str().unwrap(),
        "--types",
        "homo",
        "--limit",
        "6",
        "--grid-dx",
        "0.05",
    ])
}

#[test]
fn gen_dataset_is_reproducible() {
    let fix = fixture();
    let dir = TempDir::new().unwrap();
    let second = dir.path().join("again");
    assert_code(&gen_dataset(&second), 0, "second gen-dataset");

    let manifest_a = std::fs::read(fix.dataset.join("manifest.csv")).unwrap();
    let manifest_b = std::fs::read(second.join("manifest.csv")).unwrap();
    assert_eq!(manifest_a, manifest_b, "manifests differ across reruns");

    let case_a = std::fs::read(&fix.case).unwrap();
    let case_b = std::fs::read(second.join("homo").join("homo-0001.wpb")).unwrap();
    assert_eq!(case_a, case_b, "case files differ across reruns");
}

#[test]
fn invert_accepts_case_and_text_inputs() {
    let fix = fixture();
    let dir = TempDir::new().unwrap();

    let out_prefix = dir.path().join("from-case");
    let out = run(&[
        "invert",
        "--model",
        fix.model.to_str().unwrap(),
        "--input",
        fix.case.to_str().unwrap(),
        "--out",
        out_prefix.to_str().unwrap(),
    ]);
    assert_code(&out, 0, "invert case");
    assert!(out_prefix.with_extension("csv").is_file());
    assert!(out_prefix.with_extension("pgm").is_file());

    // The same 20 frequency-layout values as a plain text file.
    let text = dir.path().join("input.txt");
    let values: Vec<String> = (0..20).map(|i| format!("{}", 0.01 * i as f64)).collect();
    std::fs::write(&text, values.join("\n")).unwrap();
    let out_prefix = dir.path().join("from-text");
    let out = run(&[
        "invert",
        "--model",
        fix.model.to_str().unwrap(),
        "--input",
        text.to_str().unwrap(),
        "--out",
        out_prefix.to_str().unwrap(),
    ]);
    assert_code(&out, 0, "invert text");
    assert!(out_prefix.with_extension("csv").is_file());
}

#[test]
fn classical_methods_run_on_a_case() {
    let fix = fixture();
    let dir = TempDir::new().unwrap();
    for method in ["bp", "bam"] {
        let prefix = dir.path().join(method);
        let out = run(&[
            "classical",
            "--method",
            method,
            "--input",
            fix.case.to_str().unwrap(),
            "--out",
            prefix.to_str().unwrap(),
        ]);
        assert_code(&out, 0, method);
        assert!(prefix.with_extension("csv").is_file());
        assert!(prefix.with_extension("pgm").is_file());
    }
}

#[test]
fn eval_reports_are_byte_identical_across_reruns() {
    let fix = fixture();
    let dir = TempDir::new().unwrap();
    let report_a = dir.path().join("a.csv");
    let report_b = dir.path().join("b.csv");
    for report in [&report_a, &report_b] {
        let out = run(&[
            "eval",
            "--dataset",
            fix.dataset.to_str().unwrap(),
            "--methods",
            "bp,fcnn-f",
            "--models",
            fix.models.to_str().unwrap(),
            "--report",
            report.to_str().unwrap(),
        ]);
        assert_code(&out, 0, "eval");
    }
    let a = std::fs::read(&report_a).unwrap();
    let b = std::fs::read(&report_b).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "eval reports differ across reruns");
}

#[test]
fn import_vna_inverts_a_measured_csv() {
    let fix = fixture();
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("measured.csv");
    let rows: Vec<String> = (1..=10)
        .map(|r| format!("{r}, {:.3}, {:.3}", 0.1 * r as f64, -0.05 * r as f64))
        .collect();
    std::fs::write(&csv, rows.join("\n")).unwrap();
    let prefix = dir.path().join("vna");
    let out = run(&[
        "import-vna",
        "--csv",
        csv.to_str().unwrap(),
        "--model",
        fix.model.to_str().unwrap(),
        "--out",
        prefix.to_str().unwrap(),
    ]);
    assert_code(&out, 0, "import-vna");
    assert!(prefix.with_extension("pgm").is_file());
}

#[test]
fn config_errors_exit_with_code_2() {
    let fix = fixture();
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().join("x");

    // Unknown wall type.
    let out = run(&[
        "gen-dataset",
        "--out",
        out_path.to_str().unwrap(),
        "--types",
        "brick",
    ]);
    assert_code(&out, 2, "unknown wall type");

    // Unknown model variant.
    let out = run(&[
        "train",
        "--dataset",
        fix.dataset.to_str().unwrap(),
        "--model",
        "resnet",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_code(&out, 2, "unknown variant");

    // Unknown classical method.
    let out = run(&[
        "classical",
        "--method",
        "tikhonov",
        "--input",
        fix.case.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_code(&out, 2, "unknown method");

    // --lambda with a method that does not take it.
    let out = run(&[
        "classical",
        "--method",
        "bp",
        "--lambda",
        "0.1",
        "--input",
        fix.case.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_code(&out, 2, "lambda with bp");

    // Neural method without --models.
    let out = run(&[
        "eval",
        "--dataset",
        fix.dataset.to_str().unwrap(),
        "--methods",
        "fcnn-f",
        "--report",
        out_path.to_str().unwrap(),
    ]);
    assert_code(&out, 2, "eval without models dir");

    // Unknown sweep kind.
    let cfg = dir.path().join("sweep.cfg");
    std::fs::write(&cfg, "dataset=x\n").unwrap();
    let out = run(&[
        "sweep",
        "--kind",
        "jitter",
        "--config",
        cfg.to_str().unwrap(),
        "--report",
        out_path.to_str().unwrap(),
    ]);
    assert_code(&out, 2, "unknown sweep kind");

    // VNA import into a time-domain model is a config error.
    let time_model = dir.path().join("fcnn-t.wpm");
    let out = run(&[
        "train",
        "--dataset",
        fix.dataset.to_str().unwrap(),
        "--model",
        "fcnn-t",
        "--epochs",
        "1",
        "--out",
        time_model.to_str().unwrap(),
    ]);
    assert_code(&out, 0, "train fcnn-t");
    let csv = dir.path().join("m.csv");
    let rows: Vec<String> = (1..=10).map(|r| format!("{r},0.1,0.2")).collect();
    std::fs::write(&csv, rows.join("\n")).unwrap();
    let out = run(&[
        "import-vna",
        "--csv",
        csv.to_str().unwrap(),
        "--model",
        time_model.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_code(&out, 2, "vna into time model");
}

#[test]
fn divergent_training_exits_with_code_3() {
    let fix = fixture();
    let dir = TempDir::new().unwrap();
    let out = run(&[
        "train",
        "--dataset",
        fix.dataset.to_str().unwrap(),
        "--model",
        "fcnn-f",
        "--epochs",
        "30",
        "--lr",
        "1e12",
        "--seed",
        "1",
        "--out",
        dir.path().join("d.wpm").to_str().unwrap(),
    ]);
    assert_code(&out, 3, "divergent training");
}

#[test]
fn io_and_parse_errors_exit_with_code_4() {
    let fix = fixture();
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().join("x");

    // Missing input file.
    let out = run(&[
        "invert",
        "--model",
        fix.model.to_str().unwrap(),
        "--input",
        dir.path().join("nope.wpb").to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_code(&out, 4, "missing input");

    // Truncated model checkpoint.
    let bytes = std::fs::read(&fix.model).unwrap();
    let truncated = dir.path().join("trunc.wpm");
    std::fs::write(&truncated, &bytes[..bytes.len() / 2]).unwrap();
    let out = run(&[
        "invert",
        "--model",
        truncated.to_str().unwrap(),
        "--input",
        fix.case.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_code(&out, 4, "truncated model");

    // Non-numeric text input.
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "0.1, oops, 0.3").unwrap();
    let out = run(&[
        "invert",
        "--model",
        fix.model.to_str().unwrap(),
        "--input",
        bad.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_code(&out, 4, "non-numeric input");

    // Malformed measurement CSV (duplicate receiver row).
    let csv = dir.path().join("dup.csv");
    let mut rows: Vec<String> = (1..=9).map(|r| format!("{r},0.1,0.2")).collect();
    rows.push("3,0.1,0.2".into());
    std::fs::write(&csv, rows.join("\n")).unwrap();
    let out = run(&[
        "import-vna",
        "--csv",
        csv.to_str().unwrap(),
        "--model",
        fix.model.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_code(&out, 4, "duplicate receiver row");

    // Sweep config without key=value structure.
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "just some words\n").unwrap();
    let out = run(&[
        "sweep",
        "--kind",
        "lossy",
        "--config",
        cfg.to_str().unwrap(),
        "--report",
        out_path.to_str().unwrap(),
    ]);
    assert_code(&out, 4, "malformed sweep config");
}
