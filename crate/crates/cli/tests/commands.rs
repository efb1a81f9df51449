mod common;

use std::collections::BTreeMap;
use std::path::Path;

use common::*;
use metores_core::corpus::{load_canonical, write_canonical_file, Label};
use metores_core::pipeline::read_documents;
use metores_core::synthetic::label_flipped;

const TINY: &str = "model = tiny\nepochs = 2\n";

/// Synthetic separable corpus written as files, so tests can read the gold
/// labels back.
fn corpus(dir: &Path) -> std::path::PathBuf {
    let data = dir.join("data");
    ok(dir, &["synth", "--kind", "separable", "--seed", "3", "--out", data.to_str().unwrap()]);
    data
}

fn file_manifest(dir: &Path, name: &str, data: &str, extra: &str) -> std::path::PathBuf {
    write(
        dir,
        &format!("{name}.txt"),
        &format!("name = {name}\ntrain = {data}/train.jsonl\ndev = {data}/dev.jsonl\ntest = {data}/test.jsonl\n{TINY}{extra}"),
    )
}

fn column(rows: &[csv::StringRecord], i: usize) -> Vec<f64> {
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn exit_codes_separate_validation_from_runtime() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let bad_key = write(d, "bad.txt", "synthetic = separable\nlearning_rat = 0.1\n");
    assert_eq!(code(d, &["train", "--manifest", bad_key.to_str().unwrap()]), 2);
    assert_eq!(code(d, &["train", "--manifest", "missing.txt"]), 2);
    assert_eq!(code(d, &["frobnicate"]), 2);
    let both = write(d, "both.txt", "synthetic = separable\nvariant = aug+mask\n");
    assert_eq!(code(d, &["train", "--manifest", both.to_str().unwrap()]), 2);

    // A well-formed request whose input cannot be parsed is a runtime error.
    let canonical = fixtures().join("canonical.jsonl");
    assert_eq!(code(d, &["stats", canonical.to_str().unwrap(), "--source-format", "relocar"]), 1);

    // Divergence is reported per seed and the command still summarizes.
    let wild = write(d, "wild.txt", &format!("synthetic = separable\n{TINY}learning_rate = 1e300\nseeds = 1-2\n"));
    assert_eq!(code(d, &["train", "--manifest", wild.to_str().unwrap(), "--out", "wild"]), 1);
    let runs = csv_rows(&d.join("wild/runs.csv"));
    assert_eq!(runs.len(), 2);
    assert!(runs.iter().all(|r| &r[1] == "failed" && r[6].contains("diverged")));
}

#[test]
fn train_writes_one_checkpoint_per_seed_and_repeats_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let m = write(d, "one.txt", &format!("synthetic = separable\n{TINY}seeds = 4\n"));
    let m = m.to_str().unwrap();
    ok(d, &["train", "--manifest", m, "--out", "a"]);
    ok(d, &["train", "--manifest", m, "--out", "b", "--format", "txt"]);
    ok(d, &["train", "--manifest", m, "--out", "c"]);
    let ckpts: Vec<_> = snapshot(&d.join("a")).into_keys().filter(|k| k.ends_with(".ckpt")).collect();
    assert_eq!(ckpts, ["seed-4/model.ckpt"]);
    assert!(d.join("a/run.log").is_file());
    assert_eq!(snapshot(&d.join("a")), snapshot(&d.join("c")));
    assert!(d.join("b/summary.txt").is_file());
}

#[test]
fn output_root_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let m = write(d, "envrun.txt", "synthetic = separable\nmodel = tiny\nepochs = 1\n");
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_metores"))
        .args(["train", "--manifest", m.to_str().unwrap()])
        .current_dir(d)
        .env("METORES_OUT", d.join("root"))
        .status()
        .unwrap();
    assert!(status.success());
    assert!(d.join("root/envrun/seed-1/model.ckpt").is_file());
}

#[test]
fn ten_seed_summary_matches_the_runs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let m = write(d, "ten.txt", "synthetic = separable\nmodel = tiny\nepochs = 1\nseeds = 1-10\n");
    ok(d, &["train", "--manifest", m.to_str().unwrap(), "--out", "ten"]);
    let accs = column(&csv_rows(&d.join("ten/runs.csv")), 5);
    assert_eq!(accs.len(), 10);
    let mean = accs.iter().sum::<f64>() / 10.0;
    let std = (accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / 10.0).sqrt();
    let summary = &csv_rows(&d.join("ten/summary.csv"))[0];
    assert_eq!(&summary[2], "10");
    assert!((summary[3].parse::<f64>().unwrap() - mean).abs() < 1e-12);
    assert!((summary[4].parse::<f64>().unwrap() - std).abs() < 1e-12);
    let curves = csv_rows(&d.join("ten/curves.csv"));
    assert_eq!(curves.len(), 1);
    assert_eq!(&curves[0][4], "10");
}

#[test]
fn eval_scores_single_checkpoints_and_votes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    corpus(d);
    let m = file_manifest(d, "ev", "data", "variant = mask\nseeds = 1-3\n");
    let m = m.to_str().unwrap();
    ok(d, &["train", "--manifest", m, "--out", "run"]);
    let runs = csv_rows(&d.join("run/runs.csv"));
    let test = d.join("data/test.jsonl");
    let test = test.to_str().unwrap();

    let single = ok(d, &["eval", "--checkpoint", "run/seed-2/model.ckpt", "--test", test]);
    let row = single.lines().nth(1).unwrap().split(',').collect::<Vec<_>>();
    assert_eq!(row[3], &runs[1][5]);

    let twice = ok(d, &["eval", "--checkpoint", "run/seed-2/model.ckpt", "--checkpoint", "run/seed-2/model.ckpt", "--test", test, "--ensemble"]);
    let row = twice.lines().nth(1).unwrap().split(',').collect::<Vec<_>>();
    assert_eq!(row[5], &runs[1][5]);

    ok(d, &["eval", "--manifest", m, "--run", "run", "--ensemble", "--out", "ev"]);
    // Majority of three binary votes, composed from the per-seed predictions.
    let mut votes: BTreeMap<String, usize> = BTreeMap::new();
    for seed in 1..=3 {
        for r in csv_rows(&d.join(format!("run/seed-{seed}/predictions.csv"))) {
            *votes.entry(r[0].to_string()).or_default() += usize::from(&r[1] == "metonymic");
        }
    }
    let ensemble = csv_rows(&d.join("ev/ensemble_predictions.csv"));
    assert_eq!(ensemble.len(), votes.len());
    for r in &ensemble {
        let expected = if votes[&r[0]] >= 2 { "metonymic" } else { "literal" };
        assert_eq!(&r[1], expected, "{}", &r[0]);
    }
    let gold: BTreeMap<String, Label> = load_canonical(d.join("data/test.jsonl")).unwrap().into_iter().map(|s| (s.id, s.label)).collect();
    let correct = ensemble.iter().filter(|r| &r[1] == gold[&r[0]].as_str()).count();
    let report = &csv_rows(&d.join("ev/eval.csv"))[0];
    assert_eq!(report[5].parse::<f64>().unwrap(), correct as f64 / gold.len() as f64);

    // A vocabulary from another run is rejected.
    std::fs::write(d.join("other_vocab.txt"), "[PAD]\n[UNK]\n[CLS]\n[SEP]\nX\nfoo\n").unwrap();
    assert_eq!(code(d, &["eval", "--checkpoint", "run/seed-1/model.ckpt", "--test", test, "--vocab", "other_vocab.txt"]), 2);
}

#[test]
fn crossdomain_diagonal_and_flipped_twin() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    corpus(d);
    std::fs::create_dir(d.join("twin")).unwrap();
    for part in ["train", "dev", "test"] {
        let samples = load_canonical(d.join(format!("data/{part}.jsonl"))).unwrap();
        write_canonical_file(d.join(format!("twin/{part}.jsonl")), &label_flipped(&samples, "twin")).unwrap();
    }
    let base = file_manifest(d, "base", "data", "reference = semeval_loc\nseeds = 1-2\n");
    let twin = file_manifest(d, "twin", "twin", "reference = relocar\nseeds = 1-2\n");
    let (base, twin) = (base.to_str().unwrap(), twin.to_str().unwrap());
    ok(d, &["crossdomain", "--manifest", base, twin, "--include-diagonal", "--variant", "mask", "--out", "cd"]);
    ok(d, &["train", "--manifest", base, "--variant", "mask", "--out", "direct"]);

    let rows = csv_rows(&d.join("cd/crossdomain.csv"));
    let cell = |s: &str, t: &str| rows.iter().find(|r| &r[0] == s && &r[1] == t).unwrap().clone();
    let diagonal = cell("semeval_loc", "semeval_loc");
    let direct = &csv_rows(&d.join("direct/summary.csv"))[0];
    assert_eq!(&diagonal[4], &direct[3]);
    let transfer: f64 = cell("semeval_loc", "relocar")[4].parse().unwrap();
    assert!((transfer + diagonal[4].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
    // Published annotation for the same pair and variant.
    assert_eq!(&cell("semeval_loc", "relocar")[7], "75.2");

    let listed = write(d, "pairs.txt", "experiments = base.txt, twin.txt\npairs = relocar:semeval_loc\nout = listed\n");
    ok(d, &["crossdomain", "--manifest", listed.to_str().unwrap(), "--variant", "plain"]);
    let rows = csv_rows(&d.join("listed/crossdomain.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!((&rows[0][0], &rows[0][1], &rows[0][2]), ("relocar", "semeval_loc", "plain"));
    assert_eq!(code(d, &["crossdomain", "--manifest", base, twin, "--pair", "base:nowhere"]), 2);
}

#[test]
fn geoparse_reports_match_the_mention_records() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let m = write(d, "geo.txt", &format!("synthetic = separable\n{TINY}variant = mask\n"));
    ok(d, &["train", "--manifest", m.to_str().unwrap(), "--out", "model"]);
    let docs = fixtures().join("geoparse_docs.jsonl");
    let gaz = fixtures().join("geoparse_gazetteer.txt");
    let args = |gaz: &str, out: &str| {
        vec![
            "geoparse".to_string(),
            "--docs".into(),
            docs.to_str().unwrap().into(),
            "--gazetteer".into(),
            gaz.into(),
            "--checkpoint".into(),
            "model/seed-1/model.ckpt".into(),
            "--out".into(),
            out.into(),
        ]
    };
    let run = |a: Vec<String>| ok(d, &a.iter().map(String::as_str).collect::<Vec<_>>());
    run(args(gaz.to_str().unwrap(), "g"));

    let mentions = csv_rows(&d.join("g/mentions.csv"));
    assert!(!mentions.is_empty());
    let predicted: Vec<(String, usize, usize)> = mentions
        .iter()
        .filter(|r| &r[4] == "LOC" && &r[5] == "literal")
        .map(|r| (r[0].to_string(), r[1].parse().unwrap(), r[2].parse().unwrap()))
        .collect();
    let gold: Vec<(String, usize, usize)> = read_documents(&docs)
        .unwrap()
        .iter()
        .flat_map(|doc| doc.gold_literal())
        .map(|s| (s.doc, s.start, s.end))
        .collect();
    let tp = predicted.iter().filter(|p| gold.contains(p)).count();
    let pooled = csv_rows(&d.join("g/geoparse.csv")).into_iter().find(|r| &r[0] == "pooled").unwrap();
    assert_eq!(pooled[4].parse::<usize>().unwrap(), tp);
    assert_eq!(pooled[5].parse::<usize>().unwrap(), predicted.len() - tp);
    assert_eq!(pooled[6].parse::<usize>().unwrap(), gold.len() - tp);

    let empty = write(d, "empty_gazetteer.txt", "# nothing\n");
    run(args(empty.to_str().unwrap(), "e"));
    assert!(csv_rows(&d.join("e/mentions.csv")).is_empty());
    let pooled = csv_rows(&d.join("e/geoparse.csv")).into_iter().find(|r| &r[0] == "pooled").unwrap();
    assert_eq!(&pooled[2], "0");
}

#[test]
fn attention_groups_early_layers() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = corpus(d);
    let m = file_manifest(d, "att", "data", "variant = mask\n");
    ok(d, &["train", "--manifest", m.to_str().unwrap(), "--out", "run"]);
    let dev = data.join("dev.jsonl");
    let n = load_canonical(&dev).unwrap().len();
    for (merge, labels) in [("3", vec!["1-2"]), ("1", vec!["1", "2"])] {
        let out = format!("att{merge}");
        ok(d, &["attention", "--checkpoint", "run/seed-1/model.ckpt", "--data", dev.to_str().unwrap(), "--merge-below", merge, "--out", &out]);
        let rows = csv_rows(&d.join(out).join("attention.csv"));
        assert_eq!(rows.iter().map(|r| r[0].to_string()).collect::<Vec<_>>(), labels);
        let per_group = n * if merge == "3" { 2 } else { 1 };
        assert!(rows.iter().all(|r| r[1].parse::<usize>().unwrap() == per_group));
    }
}

#[test]
fn stats_and_convert() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let canonical = fixtures().join("canonical.jsonl");
    let empty = write(d, "empty.jsonl", "");
    let out = ok(d, &["stats", canonical.to_str().unwrap(), empty.to_str().unwrap(), "--format", "csv"]);
    let lines: Vec<&str> = out.lines().collect();
    // c1 literal; c2, c3 metonymic; one PMW; 5 + 5 + 9 words.
    assert_eq!(lines[1], "canonical,1,2,3,1,6.33");
    assert_eq!(lines[2], "empty,0,0,0,0,0.00");

    let relocar = fixtures().join("relocar.tsv");
    ok(d, &["convert", relocar.to_str().unwrap(), "--source-format", "relocar", "--output", "relocar.jsonl"]);
    let raw = ok(d, &["stats", relocar.to_str().unwrap(), "--source-format", "relocar", "--format", "csv"]);
    let converted = ok(d, &["stats", "relocar.jsonl", "--format", "csv"]);
    assert_eq!(raw, converted);
}

#[test]
fn shipped_manifests_parse() {
    use metores_cli::{CliError, ExperimentManifest};
    let mut seen = 0;
    for entry in std::fs::read_dir(manifests()).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_stem().unwrap().to_str().unwrap().to_string();
        if name == "crossdomain" || name.starts_with("geoparse") {
            continue;
        }
        seen += 1;
        match ExperimentManifest::load(&path) {
            Ok(_) => assert!(name.starts_with("synthetic"), "{name}"),
            // Real datasets are not bundled; everything before the paths validated.
            Err(CliError::Manifest { message, .. }) => assert!(message.contains("does not exist"), "{name}: {message}"),
            Err(e) => panic!("{name}: {e}"),
        }
    }
    assert!(seen >= 9);
}
