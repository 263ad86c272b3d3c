//! End-to-end runs of the `histloom` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_histloom");
const TWO_FLAT: &str = "kflat:breaks=0.5;levels=1.5,0.5";

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env("HISTLOOM_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn ok_json(args: &[&str]) -> Value {
    serde_json::from_slice(&ok(args).stdout).expect("stdout is JSON")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn schema_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("schemas")
        .join(format!("{name}.schema.json"))
}

fn assert_schema(name: &str, instance: &Value) {
    let schema: Value =
        serde_json::from_str(&fs::read_to_string(schema_path(name)).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = validator
        .iter_errors(instance)
        .map(|e| e.to_string())
        .collect();
    assert!(errors.is_empty(), "{name}: {errors:#?}\n{instance:#}");
}

fn read_value(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).display().to_string()
}

#[test]
fn every_schema_compiles() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas");
    let mut seen = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let schema: Value =
            serde_json::from_str(&fs::read_to_string(entry.unwrap().path()).unwrap()).unwrap();
        jsonschema::validator_for(&schema).expect("schema compiles");
        seen += 1;
    }
    assert_eq!(seen, 14);
}

#[test]
fn single_pass_learn_writes_valid_report_trace_and_hypothesis() {
    let dir = TempDir::new().unwrap();
    let (h, trace) = (p(&dir, "h.json"), p(&dir, "trace.json"));
    let report = ok_json(&[
        "learn",
        "--target",
        TWO_FLAT,
        "--k",
        "2",
        "--eps",
        "0.2",
        "--assume-well-behaved",
        "--assume-small-opt",
        "--trace",
        &trace,
        "--output",
        &h,
        "--seed",
        "3",
        "--json",
    ]);
    assert_schema("learn-report", &report);
    assert_eq!(report["mode"], "single-pass");
    assert_schema("trace", &read_value(Path::new(&trace)));
    let hyp = read_value(Path::new(&h));
    assert_schema("hypothesis", &hyp);
    assert_schema("density", &hyp);
    assert_eq!(report["hypothesis"], hyp);

    let eval = ok_json(&[
        "eval",
        "--hypothesis",
        &h,
        "--target",
        TWO_FLAT,
        "--ell",
        "1,2,8",
        "--json",
    ]);
    assert_schema("eval-report", &eval);
    assert!(eval["l1"].as_f64().unwrap() < 0.2, "{eval}");
    assert_eq!(eval["pieces_of_target"], 2);
}

#[test]
fn same_seed_gives_identical_stdout() {
    let args = [
        "learn",
        "--target",
        "unimodal:cells=6;mode=0.4;ratio=2",
        "--k",
        "3",
        "--eps",
        "0.25",
        "--assume-well-behaved",
        "--assume-small-opt",
        "--seed",
        "11",
        "--json",
    ];
    let a = ok(&args).stdout;
    let b = ok(&args).stdout;
    assert_eq!(a, b);
    let mut other = args.to_vec();
    other[10] = "12";
    assert_ne!(a, ok(&other).stdout);
}

#[test]
fn agnostic_pool_feeds_select() {
    let dir = TempDir::new().unwrap();
    let pool = p(&dir, "pool.json");
    let chosen = p(&dir, "chosen.json");
    let report = ok_json(&[
        "learn",
        "--target",
        TWO_FLAT,
        "--k",
        "2",
        "--eps",
        "0.3",
        "--assume-well-behaved",
        "--repetitions",
        "1",
        "--pool",
        &pool,
        "--json",
    ]);
    assert_schema("learn-report", &report);
    assert_eq!(report["mode"], "agnostic");
    let pool_value = read_value(Path::new(&pool));
    assert_schema("pool", &pool_value);
    let n = pool_value["hypotheses"].as_array().unwrap().len();

    let select = ok_json(&[
        "select", "--target", TWO_FLAT, "--pool", &pool, "--eps", "0.3", "--output", &chosen,
        "--json",
    ]);
    assert_schema("select-report", &select);
    assert_eq!(select["candidates"].as_u64().unwrap() as usize, n);
    let winner = select["winner"].as_u64().unwrap() as usize;
    assert_eq!(
        read_value(Path::new(&chosen)),
        pool_value["hypotheses"][winner]
    );
}

#[test]
fn atoms_are_split_off_by_default() {
    let report = ok_json(&[
        "learn",
        "--target",
        "atom-mixture:atoms=0.3@0.25;levels=1",
        "--k",
        "1",
        "--eps",
        "0.3",
        "--repetitions",
        "1",
        "--json",
    ]);
    assert_schema("learn-report", &report);
    assert_eq!(report["mode"], "atoms");
    let atoms = report["hypothesis"]["atoms"].as_array().unwrap();
    assert!(
        atoms
            .iter()
            .any(|a| (a["x"].as_f64().unwrap() - 0.25).abs() < 1e-12),
        "{report}"
    );
}

#[test]
fn eval_of_a_file_against_itself_is_zero() {
    let dir = TempDir::new().unwrap();
    let h = p(&dir, "h.json");
    fs::write(
        &h,
        r#"{"breakpoints":[0,0.3,1],"values":[2,0.5714285714285714]}"#,
    )
    .unwrap();
    let eval = ok_json(&[
        "eval",
        "--hypothesis",
        &h,
        "--against",
        &h,
        "--ell",
        "3",
        "--json",
    ]);
    assert_schema("eval-report", &eval);
    assert_eq!(eval["l1"].as_f64().unwrap(), 0.0);
    assert_eq!(eval["a_ell"][0]["value"].as_f64().unwrap(), 0.0);
}

#[test]
fn eval_uniform_against_two_flat_is_half() {
    let dir = TempDir::new().unwrap();
    let h = p(&dir, "u.json");
    fs::write(&h, r#"{"breakpoints":[0,1],"values":[1]}"#).unwrap();
    let eval = ok_json(&[
        "eval",
        "--hypothesis",
        &h,
        "--target",
        TWO_FLAT,
        "--ell",
        "1",
        "--json",
    ]);
    assert!((eval["l1"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((eval["tv"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert!((eval["a_ell"][0]["value"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert_eq!(eval["opt_k_upper"].as_f64().unwrap(), 0.0);
}

#[test]
fn eval_reports_the_certified_bound_of_noisy_targets() {
    let dir = TempDir::new().unwrap();
    let h = p(&dir, "u.json");
    fs::write(&h, r#"{"breakpoints":[0,1],"values":[1]}"#).unwrap();
    let eval = ok_json(&[
        "eval",
        "--hypothesis",
        &h,
        "--target",
        "kflat-noise:breaks=0.5;levels=1.5,0.5;eta=0.05;cells=32",
        "--json",
    ]);
    assert_schema("eval-report", &eval);
    assert!(
        (eval["opt_k_upper"].as_f64().unwrap() - 0.05).abs() < 1e-9,
        "{eval}"
    );
}

#[test]
fn optk_brackets_contain_the_noise_level() {
    let report = ok_json(&[
        "oracle",
        "optk",
        "--density",
        "kflat-noise:breaks=0.5;levels=1.5,0.5;eta=0.05;cells=32",
        "--k",
        "2",
        "--json",
    ]);
    assert_schema("optk-report", &report);
    let (lo, hi) = (
        report["lower"].as_f64().unwrap(),
        report["upper"].as_f64().unwrap(),
    );
    assert!(lo <= hi + 1e-12 && hi <= 0.05 + 1e-9, "{report}");
    assert_eq!(report["breakpoints_of_q"].as_array().unwrap().len(), 1);
}

#[test]
fn adist_against_a_sample_file() {
    let dir = TempDir::new().unwrap();
    let sample = p(&dir, "s.txt");
    ok(&[
        "synth", "--target", TWO_FLAT, "--m", "4000", "--output", &sample,
    ]);
    let exact = ok_json(&[
        "oracle", "adist", "--f", "uniform", "--g", TWO_FLAT, "--ell", "2", "--json",
    ]);
    assert_schema("adist-report", &exact);
    assert!((exact["value"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    let emp = ok_json(&[
        "oracle", "adist", "--f", TWO_FLAT, "--input", &sample, "--ell", "2", "--json",
    ]);
    assert_schema("adist-report", &emp);
    assert_eq!(emp["empirical"], true);
    assert!(emp["value"].as_f64().unwrap() < 0.06, "{emp}");
}

#[test]
fn synth_round_trips_text_and_binary() {
    let dir = TempDir::new().unwrap();
    let (text, bin, meta) = (p(&dir, "s.txt"), p(&dir, "s.bin"), p(&dir, "meta.json"));
    let target = "monotone:cells=8;ratio=3";
    let report = ok_json(&[
        "synth", "--target", target, "--m", "500", "--output", &text, "--meta", &meta, "--seed",
        "5", "--json",
    ]);
    assert_schema("synth-report", &report);
    assert_schema("target-meta", &read_value(Path::new(&meta)));
    ok(&[
        "synth", "--target", target, "--m", "500", "--output", &bin, "--format", "binary",
        "--seed", "5",
    ]);
    let stdout = ok(&["synth", "--target", target, "--m", "500", "--seed", "5"]).stdout;

    let from_text: Vec<f64> = fs::read_to_string(&text)
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    let raw = fs::read(&bin).unwrap();
    assert_eq!(&raw[..4], b"HLS1");
    assert_eq!(u64::from_le_bytes(raw[4..12].try_into().unwrap()), 500);
    let from_bin: Vec<f64> = raw[12..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    assert_eq!(from_text.len(), 500);
    assert_eq!(from_text, from_bin);
    assert_eq!(fs::read(&text).unwrap(), stdout);
}

#[test]
fn learning_from_a_binary_file_matches_the_text_file() {
    let dir = TempDir::new().unwrap();
    let (text, bin) = (p(&dir, "s.txt"), p(&dir, "s.bin"));
    ok(&[
        "synth", "--target", TWO_FLAT, "--m", "30000", "--output", &text,
    ]);
    ok(&[
        "synth", "--target", TWO_FLAT, "--m", "30000", "--output", &bin, "--format", "binary",
    ]);
    let learn = |input: &str| {
        ok(&[
            "learn",
            "--input",
            input,
            "--k",
            "2",
            "--eps",
            "0.3",
            "--assume-well-behaved",
            "--assume-small-opt",
            "--m",
            "2000",
        ])
        .stdout
    };
    assert_eq!(learn(&text), learn(&bin));
}

#[test]
fn too_small_sample_file_is_an_error() {
    let dir = TempDir::new().unwrap();
    let s = p(&dir, "s.txt");
    fs::write(&s, "0.1\n0.2\n0.3\n").unwrap();
    let out = run(&["learn", "--input", &s, "--k", "2", "--eps", "0.1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("insufficient samples"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn malformed_sample_file_names_the_line() {
    let dir = TempDir::new().unwrap();
    let s = p(&dir, "s.txt");
    fs::write(&s, "0.1\nfoo\n0.3\n").unwrap();
    let out = run(&["learn", "--input", &s, "--k", "2", "--eps", "0.1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));

    fs::write(&s, "0.1\n1.5\n").unwrap();
    let out = run(&["learn", "--input", &s, "--k", "2", "--eps", "0.1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
}

#[test]
fn bad_parameters_are_usage_errors() {
    for args in [
        &["learn", "--target", "uniform", "--k", "0", "--eps", "0.1"][..],
        &["learn", "--target", "uniform", "--k", "2", "--eps", "1.5"],
        &["learn", "--k", "2", "--eps", "0.1"],
        &[
            "learn",
            "--target",
            "uniform",
            "--k",
            "2",
            "--eps",
            "0.1",
            "--assume-small-opt",
        ],
        &["bench", "--k", "2", "--eps", "0.2"],
        &[
            "synth", "--target", "uniform", "--m", "5", "--format", "binary",
        ],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn bad_target_spec_is_reported() {
    let out = run(&["synth", "--target", "kflat:levels=1;wat=3", "--m", "5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("wat"), "{}", stderr(&out));
}

#[test]
fn lowerbound_writes_csv_and_json() {
    let dir = TempDir::new().unwrap();
    let csv = p(&dir, "trials.csv");
    let report = ok_json(&[
        "lowerbound",
        "--N",
        "1024",
        "--t",
        "0.25",
        "--m",
        "200",
        "--trials",
        "20",
        "--csv",
        &csv,
        "--json",
    ]);
    assert_schema("lowerbound-report", &report);
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("regime,trial,statistic,says_nonuniform,repeated,draws")
    );
    assert_eq!(lines.count(), 40);
}

#[test]
fn lowerbound_floor_report_is_valid() {
    let report = ok_json(&[
        "lowerbound",
        "--N",
        "1000",
        "--floor",
        "--m",
        "400",
        "--trials",
        "4",
        "--json",
    ]);
    assert_schema("floor-report", &report);
}

#[test]
fn bench_grid_report_is_valid() {
    let dir = TempDir::new().unwrap();
    let csv = p(&dir, "bench.csv");
    let report = ok_json(&[
        "bench",
        "--k",
        "2",
        "--eps",
        "0.3",
        "--m",
        "2000,4000",
        "--reps",
        "1",
        "--csv",
        &csv,
        "--json",
    ]);
    assert_schema("bench-report", &report);
    assert_eq!(report["rows"].as_array().unwrap().len(), 2);
    assert!(report["slope"].is_number());
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 3);
}
