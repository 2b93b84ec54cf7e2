mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::bin;

fn rf(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn rf_env(args: &[&str], key: &str, value: &Path) -> Output {
    Command::new(bin()).args(args).env(key, value).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn synth(dir: &Path, n: usize) -> (String, String) {
    let out = rf(&["synth", "--n", &n.to_string(), "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    (dir.join("business.json").to_string_lossy().into_owned(), dir.join("review.json").to_string_lossy().into_owned())
}

#[test]
fn unknown_classifier_is_a_usage_error() {
    let out = rf(&["cv", "--classifier", "svm", "--input", "x.rfrv", "--out", "o"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("logreg, nb, perceptron or linsvc"), "{}", stderr(&out));
    let out = rf(&["curve", "--extractor", "quad", "--input", "x.rfrv", "--out", "o"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("uni_bi_tri"), "{}", stderr(&out));
}

#[test]
fn help_documents_every_flag() {
    let out = rf(&["curve", "--help"]);
    assert_eq!(code(&out), 0);
    let help = stdout(&out);
    for flag in [
        "--business",
        "--reviews",
        "--category",
        "--extractor",
        "--classifier",
        "--grid",
        "--k",
        "--seed",
        "--c ",
        "--alpha",
        "--epochs",
        "--tol",
        "--topics",
        "--jobs",
        "--out",
        "--strict",
        "--stopwords",
        "--paper-faithful",
    ] {
        assert!(help.contains(flag), "missing {flag}");
    }
    assert_eq!(code(&rf(&["--version"])), 0);
}

#[test]
fn missing_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let absent = dir.path().join("absent.rfrv");
    let out = rf(&["cv", "--input", absent.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("absent.rfrv"));
}

#[test]
fn plot_rejects_empty_and_malformed_reports() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("x.svg");
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "extractor,ngram_max,n_features,classifier,fold,split,rmse,accuracy,wall_seconds,seed\n")
        .unwrap();
    let out = rf(&["plot", "--input", empty.to_str().unwrap(), "--out", svg.to_str().unwrap()]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "a,b\n1,2\n").unwrap();
    assert_eq!(code(&rf(&["plot", "--input", bad.to_str().unwrap(), "--out", svg.to_str().unwrap()])), 2);
    assert!(!svg.exists());
}

#[test]
fn single_row_report_plots_as_valid_xml() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("one.csv");
    fs::write(
        &csv,
        "extractor,ngram_max,n_features,classifier,fold,split,rmse,accuracy,wall_seconds,seed\n\
         uni,1,100,nb,0,val,0.9,0.61,,0\n",
    )
    .unwrap();
    let svg = dir.path().join("one.svg");
    let out = rf(&["plot", "--input", csv.to_str().unwrap(), "--metric", "accuracy", "--out", svg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(&svg).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    let count = |tag: &str| doc.descendants().filter(|n| n.has_tag_name(tag)).count();
    assert_eq!(count("circle"), 1);
    assert_eq!(count("polyline"), 0);
    assert!(text.contains("nb val"));
}

#[test]
fn convergence_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let (business, reviews) = synth(dir.path(), 120);
    let out = rf(&[
        "cv",
        "--business",
        &business,
        "--reviews",
        &reviews,
        "--classifier",
        "linsvc",
        "--c",
        "1000",
        "--max-iter",
        "1",
        "--tol",
        "1e-12",
        "--features",
        "50",
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(stderr(&out).contains("fold"), "{}", stderr(&out));
}

#[test]
fn too_many_features_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let (business, reviews) = synth(dir.path(), 60);
    let out = rf(&[
        "cv",
        "--business",
        &business,
        "--reviews",
        &reviews,
        "--features",
        "100000",
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert!(stderr(&out).contains("vocabulary"), "{}", stderr(&out));
}

#[test]
fn strict_mode_rejects_malformed_lines() {
    let dir = tempfile::tempdir().unwrap();
    let (business, reviews) = synth(dir.path(), 50);
    let mut text = fs::read_to_string(&reviews).unwrap();
    text.push_str("{not json\n");
    fs::write(&reviews, text).unwrap();
    let out_dir = dir.path().join("o");
    let o = out_dir.to_str().unwrap();
    let lenient = rf(&["ingest", "--business", &business, "--reviews", &reviews, "--out", o]);
    assert_eq!(code(&lenient), 0, "{}", stderr(&lenient));
    assert!(stdout(&lenient).contains("1 skipped"), "{}", stdout(&lenient));
    let strict = rf(&["ingest", "--business", &business, "--reviews", &reviews, "--strict", "--out", o]);
    assert_eq!(code(&strict), 2);
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn staged_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let (business, reviews) = synth(&data, 400);
    let inputs = snapshot(&data);
    let stage = dir.path().join("stage");
    let s = |name: &str| stage.join(name).to_string_lossy().into_owned();
    let run = |args: &[&str]| {
        let out = rf(args);
        assert_eq!(code(&out), 0, "{args:?}: {}", stderr(&out));
        stdout(&out)
    };

    let summary = run(&["ingest", "--business", &business, "--reviews", &reviews, "--out", &s("")]);
    assert!(summary.starts_with("ingest: "), "{summary}");
    assert!(summary.contains("384 joined"), "{summary}");
    let first = snapshot(&stage);
    run(&["ingest", "--business", &business, "--reviews", &reviews, "--out", &s("")]);
    assert_eq!(first, snapshot(&stage), "ingest is not idempotent");
    let hist = fs::read_to_string(stage.join("histogram.csv")).unwrap();
    assert_eq!(hist.lines().count(), 6);

    run(&["preprocess", "--input", &s("train.rfrv"), "--out", &s("pre")]);
    let tokens = fs::read_to_string(stage.join("pre/tokens.tsv")).unwrap();
    assert!(tokens.starts_with("stars\ttokens\n"));

    run(&[
        "vectorize",
        "--input",
        &s("train.rfrv"),
        "--extractor",
        "uni_bi",
        "--features",
        "200",
        "--dump",
        "--out",
        &s("vec"),
    ]);
    for f in ["vocab.tsv", "matrix.rfsm", "matrix.txt"] {
        assert!(stage.join("vec").join(f).exists(), "{f}");
    }
    let out = rf(&["vectorize", "--input", &s("train.rfrv"), "--extractor", "lsi", "--out", &s("vec")]);
    assert_eq!(code(&out), 1);

    run(&["lsi-profile", "--input", &s("train.rfrv"), "--topics", "20", "--out", &s("lsi")]);
    let profile = fs::read_to_string(stage.join("lsi/profile.csv")).unwrap();
    assert_eq!(profile.lines().count(), 21);
    roxmltree::Document::parse(&fs::read_to_string(stage.join("lsi/profile.svg")).unwrap()).unwrap();

    let cv = run(&[
        "cv",
        "--input",
        &s("train.rfrv"),
        "--extractor",
        "lsi",
        "--topics",
        "15",
        "--classifier",
        "logreg",
        "--out",
        &s("cv"),
    ]);
    assert!(cv.contains("val rmse"), "{cv}");
    let report = fs::read_to_string(stage.join("cv/report.csv")).unwrap();
    assert_eq!(report.lines().count(), 1 + 2 * 3 + 4);
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(stage.join("cv/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["extractor"]["kind"], "lsi");
    assert_eq!(manifest["classifier"]["kind"], "logreg");

    run(&[
        "test-eval",
        "--input",
        &s("train.rfrv"),
        "--test",
        &s("test.rfrv"),
        "--extractor",
        "uni",
        "--features",
        "50",
        "--classifier",
        "nb",
        "--out",
        &s("test"),
    ]);
    let sidecar: serde_json::Value = serde_json::from_slice(&fs::read(stage.join("test/model.json")).unwrap()).unwrap();
    assert_eq!(sidecar["n_features"], 50);
    assert!(sidecar["training_seconds"].is_null());
    let report = fs::read_to_string(stage.join("test/report.csv")).unwrap();
    assert!(report.contains(",full,test,"), "{report}");

    run(&["plot", "--input", &s("test/report.csv"), "--metric", "rmse", "--out", &s("test/rmse.svg")]);
    roxmltree::Document::parse(&fs::read_to_string(stage.join("test/rmse.svg")).unwrap()).unwrap();

    assert_eq!(inputs, snapshot(&data), "inputs were modified");
}

#[test]
fn scratch_directory_is_left_empty() {
    let dir = tempfile::tempdir().unwrap();
    let scratch = dir.path().join("scratch");
    fs::create_dir(&scratch).unwrap();
    let out_dir = dir.path().join("out");
    let out = rf_env(&["synth", "--n", "20", "--out", out_dir.to_str().unwrap()], "RATING_FORGE_TMP", &scratch);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(out_dir.join("review.json").exists());
    assert_eq!(fs::read_dir(&scratch).unwrap().count(), 0);
}

#[test]
fn stopwords_lists_the_default_set() {
    let out = rf(&["stopwords"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let words: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(words.len(), 124);
    assert!(!words.contains(&"not") && words.contains(&"the"));
}

#[test]
fn timings_are_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    let (business, reviews) = synth(dir.path(), 90);
    let base = ["cv", "--business", &business, "--reviews", &reviews, "--features", "30", "--classifier", "perceptron"];
    let plain = dir.path().join("plain");
    let timed = dir.path().join("timed");
    assert_eq!(code(&rf(&[&base[..], &["--out", plain.to_str().unwrap()]].concat())), 0);
    assert_eq!(code(&rf(&[&base[..], &["--timings", "--out", timed.to_str().unwrap()]].concat())), 0);
    let row = |p: &Path| fs::read_to_string(p.join("report.csv")).unwrap().lines().nth(1).unwrap().to_string();
    assert!(row(&plain).contains(",,0"), "{}", row(&plain));
    assert!(!row(&timed).contains(",,0"), "{}", row(&timed));
}
