mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use clap::CommandFactory;
use cwi_transfer::cli::Cli;
use serde_json::Value;

use common::{brute_force_macro_f1, fixtures};

fn cwi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cwi"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn align_fixtures(out: &Path) -> Output {
    let f = fixtures();
    cwi(&[
        "align",
        "--embeddings-root",
        s(&f.join("embeddings")),
        "--dictionaries-root",
        s(&f.join("dictionaries")),
        "--output-dir",
        s(out),
    ])
}

#[test]
fn help_documents_every_flag() {
    let root = Cli::command();
    for sub in root.get_subcommands() {
        let name = sub.get_name().to_string();
        let help = stdout(&cwi(&[&name, "--help"]));
        for arg in sub.get_arguments() {
            if let Some(long) = arg.get_long() {
                assert!(help.contains(&format!("--{long}")), "{name} --help lacks --{long}");
                if long != "help" {
                    assert!(arg.get_help().is_some(), "{name} --{long} has no description");
                }
            }
        }
    }
}

#[test]
fn stats_on_fixtures_json() {
    let f = fixtures();
    let out = cwi(&[
        "stats",
        "--json",
        s(&f.join("data/German_Train.tsv")),
        s(&f.join("data/French_Test.tsv")),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let manifest: Value = serde_json::from_str(&fs::read_to_string(f.join("counts.json")).unwrap()).unwrap();
    assert_eq!(v["schema_version"], 1);
    let expect = |name: &str, key: &str| manifest[name][key].as_u64().unwrap();
    assert_eq!(
        v["files"][0]["complex"].as_u64().unwrap(),
        expect("German_Train.tsv", "complex")
    );
    assert_eq!(
        v["total"]["noncomplex"].as_u64().unwrap(),
        expect("German_Train.tsv", "noncomplex") + expect("French_Test.tsv", "noncomplex")
    );
}

#[test]
fn stats_on_empty_file_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("News_Train.tsv");
    fs::write(&p, "").unwrap();
    let out = cwi(&["stats", "--json", s(&p)]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["total"]["complex"], 0);
    assert_eq!(v["total"]["noncomplex"], 0);
}

#[test]
fn parse_error_names_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("Spanish_Dev.tsv");
    let good = fs::read_to_string(fixtures().join("data/Spanish_Dev.tsv")).unwrap();
    let first = good.lines().next().unwrap();
    fs::write(&p, format!("{first}\nbroken\tline\n")).unwrap();
    let out = cwi(&["stats", s(&p)]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("Spanish_Dev.tsv") && err.contains("line 2"), "{err}");
}

#[test]
fn align_is_accurate_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = align_fixtures(out);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let report: Value = serde_json::from_str(&fs::read_to_string(a.join("alignment_report.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    for m in report["maps"].as_array().unwrap() {
        assert!(m["mean_cosine"].as_f64().unwrap() >= 0.999, "{m}");
    }
    for name in ["alignment_report.json", "en.vec", "de.vec", "es.vec", "fr.vec"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn align_without_dictionary_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let dicts = dir.path().join("dicts");
    fs::create_dir(&dicts).unwrap();
    fs::copy(fixtures().join("dictionaries/en-de.txt"), dicts.join("en-de.txt")).unwrap();
    let out = cwi(&[
        "align",
        "--embeddings-root",
        s(&fixtures().join("embeddings")),
        "--dictionaries-root",
        s(&dicts),
        "--languages",
        "DE,ES",
        "--output-dir",
        s(&dir.path().join("out")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("en-es"), "{}", stderr(&out));
}

#[test]
fn missing_data_root_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = cwi(&[
        "experiment",
        "--grid",
        "--model",
        "echo-gold",
        "--data-root",
        s(&dir.path().join("nowhere")),
        "--output-dir",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

fn predictions_oracle(path: &Path) -> f64 {
    let text = fs::read_to_string(path).unwrap();
    let (gold, pred): (Vec<u8>, Vec<u8>) = text
        .lines()
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            (f[9].parse::<u8>().unwrap(), f[11].parse::<u8>().unwrap())
        })
        .unzip();
    brute_force_macro_f1(&gold, &pred)
}

#[test]
fn echo_gold_predictions_equal_gold_and_eval_matches_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixtures().join("data/WikiNews_Test.tsv");
    let out = cwi(&[
        "predict",
        "--input",
        s(&input),
        "--baseline",
        "echo-gold",
        "--output-dir",
        s(dir.path()),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let pred_path = dir.path().join("WikiNews_Test.pred.tsv");
    let original = fs::read_to_string(&input).unwrap();
    let predicted = fs::read_to_string(&pred_path).unwrap();
    assert_eq!(original.lines().count(), predicted.lines().count());
    for (o, p) in original.lines().zip(predicted.lines()) {
        let f: Vec<&str> = p.split('\t').collect();
        assert_eq!(f.len(), 13);
        assert!(p.starts_with(o));
        assert_eq!(f[11], f[9]);
        assert_eq!(f[12].split('.').nth(1).unwrap().len(), 6);
    }

    // A stub with some wrong answers: flip every third prediction.
    let stub = dir.path().join("stub.pred.tsv");
    let flipped: Vec<String> = predicted
        .lines()
        .enumerate()
        .map(|(i, l)| {
            let mut f: Vec<String> = l.split('\t').map(String::from).collect();
            if i % 3 == 0 {
                f[11] = if f[11] == "1" { "0".into() } else { "1".into() };
            }
            f.join("\t")
        })
        .collect();
    fs::write(&stub, flipped.join("\n") + "\n").unwrap();
    let out = cwi(&[
        "eval",
        "--predictions",
        s(&stub),
        "--language",
        "EN",
        "--genre",
        "wikinews",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["schema_version"], 1);
    let oracle = predictions_oracle(&stub);
    assert!((v["macro_f1"].as_f64().unwrap() - oracle).abs() <= 1e-12);
}

fn run_fixture_experiment(aligned: &Path, out: &Path, spec: &Path) -> Output {
    cwi(&[
        "experiment",
        "--spec",
        s(spec),
        "--data-root",
        s(&fixtures().join("data")),
        "--embeddings-root",
        s(aligned),
        "--output-dir",
        s(out),
        "--learning-rate",
        "0.01",
        "--hidden-size",
        "16",
        "--batch-size",
        "8",
    ])
}

#[test]
fn fixture_experiment_is_fast_and_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let aligned = dir.path().join("aligned");
    assert!(align_fixtures(&aligned).status.success());
    let spec = dir.path().join("spec.json");
    fs::write(&spec, r#"{"train_languages": ["ES"], "target": "DE", "seed": 7}"#).unwrap();
    let runs: Vec<PathBuf> = (0..2).map(|i| dir.path().join(format!("run{i}"))).collect();
    for r in &runs {
        let started = Instant::now();
        let out = run_fixture_experiment(&aligned, r, &spec);
        assert!(out.status.success(), "{}", stderr(&out));
        assert!(started.elapsed().as_secs() < 120);
    }
    let grid: Value = serde_json::from_str(&fs::read_to_string(runs[0].join("grid.json")).unwrap()).unwrap();
    assert_eq!(grid["cells"].as_array().unwrap().len(), 1);
    for name in [
        "reports.jsonl",
        "grid.json",
        "grid.txt",
        "checkpoints/ES_DE_shots0_seed7_run0.json",
    ] {
        assert_eq!(
            fs::read(runs[0].join(name)).unwrap(),
            fs::read(runs[1].join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn train_then_predict_and_eval_with_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let aligned = dir.path().join("aligned");
    assert!(align_fixtures(&aligned).status.success());
    let config = dir.path().join("config.json");
    fs::write(
        &config,
        format!(
            r#"{{"data_root": {:?}, "embeddings_root": {:?}, "output_dir": "/nonexistent/ignored",
                "training": {{"learning_rate": 0.01, "epochs": 2, "batch_size": 8, "hidden_size": 8}}}}"#,
            s(&fixtures().join("data")),
            s(&aligned)
        ),
    )
    .unwrap();
    let out_dir = dir.path().join("model");
    let out = cwi(&[
        "train",
        "--config",
        s(&config),
        "--output-dir",
        s(&out_dir),
        "--train-languages",
        "EN,ES",
        "--epochs",
        "3",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let log = fs::read_to_string(out_dir.join("training_log.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 3, "flag overrides the config's epochs");
    let ck = out_dir.join("model.json");
    let input = fixtures().join("data/German_Test.tsv");
    let out = cwi(&[
        "eval",
        "--config",
        s(&config),
        "--input",
        s(&input),
        "--checkpoint",
        s(&ck),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let total: u64 = ["tp", "fp", "fn", "tn"]
        .iter()
        .map(|k| v["counts"][k].as_u64().unwrap())
        .sum();
    assert_eq!(total, 60);

    let pred_out = dir.path().join("pred.tsv");
    let out = cwi(&[
        "predict",
        "--config",
        s(&config),
        "--input",
        s(&input),
        "--checkpoint",
        s(&ck),
        "--output",
        s(&pred_out),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let missing = cwi(&[
        "predict",
        "--config",
        s(&config),
        "--input",
        s(&input),
        "--checkpoint",
        s(&dir.path().join("nope.json")),
        "--output",
        s(&pred_out),
    ]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(stderr(&missing).contains("nope.json"));
}
