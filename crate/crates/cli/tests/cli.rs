use std::fs;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

use dmdwatch::video_io::{decode_pnm_at, frame_file_name, read_labels, LabelKind};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dmdwatch"))
}

fn run(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "dmdwatch {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn events(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn read_pgm(path: &Path) -> Vec<f64> {
    decode_pnm_at(&fs::read(path).unwrap(), 0).unwrap().0.pixels
}

#[test]
fn static_video_yields_empty_event_file() {
    let dir = tempfile::tempdir().unwrap();
    let video = dir.path().join("static");
    run(&["synth", "--preset", "static", "--index", "1", "--out", p(&video)]);
    let out = dir.path().join("det");
    let o = run(&["detect", "--input", p(&video), "--threshold", "0.5", "--out", p(&out)]);
    assert!(o.stdout.is_empty());
    assert_eq!(fs::read_to_string(out.join("events.jsonl")).unwrap(), "");
    let manifest: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["detector"]["threshold"], 0.5);
    assert_eq!(manifest["window"]["window_len"], 80);
}

#[test]
fn blob_events_match_labels_and_runs_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let video = dir.path().join("blob");
    run(&["synth", "--preset", "blob", "--index", "0", "--out", p(&video)]);
    let labels = read_labels(&video.join("labels.csv")).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        run(&["detect", "--input", p(&video), "--threshold", "0.7", "--out", p(out)]);
    }
    for file in ["events.jsonl", "manifest.json"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file} differs");
    }
    let ev = events(&a.join("events.jsonl"));
    assert_eq!(ev.len(), labels.len(), "{ev:?}");
    for (e, l) in ev.iter().zip(&labels) {
        let target = match l.kind {
            LabelKind::Entry => l.frame - 80,
            LabelKind::Exit => l.frame,
        };
        let w = e["window"].as_u64().unwrap() as usize;
        assert!(w.abs_diff(target) <= 30, "event {e} vs label {l:?}");
        let t = e["timestamp"].as_f64().unwrap();
        assert!((t - (w + 80) as f64 / 30.0).abs() < 1e-12);
    }
    // the entry is an onset from a static scene
    assert_eq!(ev[0]["statistic"], "inf");
}

#[test]
fn stdin_stream_and_batch_agree_with_directory_input() {
    let dir = tempfile::tempdir().unwrap();
    let (pgm, dmdw) = (dir.path().join("pgm"), dir.path().join("dmdw"));
    run(&["synth", "--preset", "blob", "--index", "1", "--out", p(&pgm)]);
    run(&["synth", "--preset", "blob", "--index", "1", "--format", "dmdw", "--out", p(&dmdw)]);
    let reference = run(&["detect", "--input", p(&pgm), "--threshold", "0.7"]).stdout;
    assert!(!reference.is_empty());
    let file = fs::File::open(dmdw.join("video.dmdw")).unwrap();
    let piped = bin()
        .args(["detect", "--input", "-", "--threshold", "0.7"])
        .stdin(Stdio::from(file))
        .output()
        .unwrap();
    assert!(piped.status.success(), "{}", String::from_utf8_lossy(&piped.stderr));
    // PGM quantizes to 8 bits, DMDW stores the same 8-bit samples
    assert_eq!(piped.stdout, reference);
    let batch = run(&["detect", "--input", p(&pgm), "--threshold", "0.7", "--batch"]).stdout;
    assert_eq!(batch, reference);
}

#[test]
fn separation_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let stat = dir.path().join("static");
    run(&["synth", "--preset", "static", "--index", "0", "--out", p(&stat)]);
    let sep = dir.path().join("sep_static");
    run(&["separate", "--input", p(&stat), "--window", "10", "--out", p(&sep)]);
    for n in [10, 50, 90] {
        let s = read_pgm(&sep.join("S").join(frame_file_name(n)));
        assert!(s.iter().all(|&v| v == 0.0), "frame {n} has foreground");
    }

    let cross = dir.path().join("cross");
    run(&["synth", "--preset", "crossing", "--index", "0", "--out", p(&cross)]);
    let sep = dir.path().join("sep_cross");
    run(&["separate", "--input", p(&cross), "--window", "100", "--canonical-L", "--out", p(&sep)]);
    let modes: Value = serde_json::from_str(&fs::read_to_string(sep.join("modes.json")).unwrap()).unwrap();
    assert_eq!(modes["modes"]["window"], 100);
    let mut foreground = 0;
    for n in 100..=180 {
        let name = frame_file_name(n);
        let x = read_pgm(&cross.join(&name));
        let l = read_pgm(&sep.join("L").join(&name));
        let s = read_pgm(&sep.join("S").join(&name));
        for i in 0..x.len() {
            // both parts are rounded to 8 bits on output
            assert!((l[i] + s[i] - x[i]).abs() <= 1.0 / 255.0 + 1e-12, "pixel {i} of frame {n}");
        }
        foreground += s.iter().filter(|&&v| v > 0.1).count();
    }
    assert!(foreground > 0);
    let manifest: Value = serde_json::from_str(&fs::read_to_string(sep.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["separation"]["use_empirical_l"], false);
}

#[test]
fn separate_from_event_file() {
    let dir = tempfile::tempdir().unwrap();
    let video = dir.path().join("blob");
    run(&["synth", "--preset", "blob", "--index", "0", "--out", p(&video)]);
    let det = dir.path().join("det");
    run(&["detect", "--input", p(&video), "--threshold", "0.7", "--out", p(&det)]);
    let window = events(&det.join("events.jsonl"))[1]["window"].as_u64().unwrap();
    let sep = dir.path().join("sep");
    run(&[
        "separate",
        "--input",
        p(&video),
        "--events",
        p(&det.join("events.jsonl")),
        "--event",
        "1",
        "--out",
        p(&sep),
    ]);
    assert!(sep.join("S").join(frame_file_name(window as usize)).exists());
}

#[test]
fn window_out_of_range_fails() {
    let dir = tempfile::tempdir().unwrap();
    let video = dir.path().join("static");
    run(&["synth", "--preset", "static", "--out", p(&video)]);
    let out = bin()
        .args(["separate", "--input", p(&video), "--window", "400", "--out", p(&dir.path().join("s"))])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("parameter error"));
}

#[test]
fn decode_failure_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.pgm");
    fs::write(&bad, b"P5\n4 4\n255\n\x01\x02").unwrap();
    let out = bin().args(["detect", "--input", p(&bad), "--threshold", "0.5"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("decode error"));
}

#[test]
fn threshold_is_required() {
    let out = bin().args(["detect", "--input", "-"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--threshold"));
}

#[test]
fn roc_on_separable_corpus_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    run(&["synth", "--preset", "crossing", "--count", "4", "--out", p(&corpus)]);
    let out = dir.path().join("roc");
    run(&[
        "roc",
        "--corpus",
        p(&corpus.join("videos")),
        "--labels",
        p(&corpus.join("labels")),
        "--out",
        p(&out),
    ]);
    let auc: Value = serde_json::from_str(&fs::read_to_string(out.join("auc.json")).unwrap()).unwrap();
    assert_eq!(auc["mean_auc"], 1.0);
    assert_eq!(auc["videos"].as_array().unwrap().len(), 4);
    let csv = fs::read_to_string(out.join("roc.csv")).unwrap();
    assert!(csv.starts_with("threshold,fpr,tpr\n"));
    assert!(out.join("manifest.json").exists());
}

#[test]
fn cv_reports_four_folds() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    run(&["synth", "--preset", "blob", "--count", "12", "--format", "dmdw", "--out", p(&corpus)]);
    let out = dir.path().join("cv");
    let (videos, labels) = (corpus.join("videos"), corpus.join("labels"));
    let args = [
        "cv",
        "--corpus",
        p(&videos),
        "--labels",
        p(&labels),
        "--k",
        "4",
        "--cv-seed",
        "5",
        "--out",
        p(&out),
    ];
    run(&args);
    let report: Value = serde_json::from_str(&fs::read_to_string(out.join("cv.json")).unwrap()).unwrap();
    let folds = report["folds"].as_array().unwrap();
    assert_eq!(folds.len(), 4);
    let chosen = report["threshold"].as_f64().unwrap();
    assert!(folds.iter().any(|f| f["threshold"].as_f64().unwrap() == chosen));
    assert_eq!(report["videos"].as_array().unwrap().len(), 12);
    let first = fs::read(out.join("cv.json")).unwrap();
    run(&args);
    assert_eq!(fs::read(out.join("cv.json")).unwrap(), first);
    let curve = fs::read_to_string(out.join("error_curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 1001);
}

#[test]
fn scenario_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    run(&["synth", "--preset", "crossing", "--index", "3", "--out", p(&a)]);
    let b = dir.path().join("b");
    run(&["synth", "--scenario", p(&a.join("scenario.json")), "--out", p(&b)]);
    for name in [frame_file_name(0), frame_file_name(150), "labels.csv".into()] {
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap());
    }
}

#[test]
fn bench_reports_throughput() {
    let out = run(&["bench", "--width", "64", "--height", "48", "--windows", "5"]);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["windows"], 5);
    assert!(report["windows_per_second"].as_f64().unwrap() > 0.0);
}
