//! Black-box tests of the command-line binary: every subcommand end to end
//! on small synthetic data, cache reuse on reruns, and the machine-readable
//! error contract.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gclbench::data::read_jsonl;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gclbench"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn gclbench");
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Failures must exit nonzero and print one JSON line on stderr with `kind`
/// and `error` fields; returns the parsed object.
fn run_err(cmd: &mut Command) -> serde_json::Value {
    let out = cmd.output().expect("spawn gclbench");
    assert!(!out.status.success(), "command unexpectedly succeeded");
    let stderr = String::from_utf8_lossy(&out.stderr);
    let lines: Vec<&str> = stderr.lines().filter(|l| !l.trim().is_empty()).collect();
    assert_eq!(lines.len(), 1, "expected one stderr line, got {:?}", stderr);
    let v: serde_json::Value = serde_json::from_str(lines[0]).expect("stderr line is JSON");
    assert!(v.get("kind").is_some() && v.get("error").is_some(), "bad error object: {}", v);
    v
}

fn gen_dataset(dir: &Path, size: usize) -> std::path::PathBuf {
    let path = dir.join("graphs.jsonl");
    run_ok(bin()
        .args(["gen-synthetic", "--s", "2", "--size", &size.to_string(), "--seed", "0"])
        .arg("--out")
        .arg(&path));
    path
}

fn write_labels(dataset: &Path, labels_path: &Path, binary: bool) -> usize {
    let ds = read_jsonl(dataset, "tmp").unwrap();
    let mut text = String::from("label\n");
    for g in &ds.graphs {
        let l = if binary { g.label % 2 } else { g.label };
        text.push_str(&format!("{}\n", l));
    }
    fs::write(labels_path, text).unwrap();
    ds.len()
}

#[test]
fn gen_synthetic_is_deterministic_and_sized() {
    let tmp = tempfile::tempdir().unwrap();
    let a = gen_dataset(tmp.path(), 24);
    let b = tmp.path().join("again.jsonl");
    run_ok(bin()
        .args(["gen-synthetic", "--s", "2", "--size", "24", "--seed", "0"])
        .arg("--out")
        .arg(&b));

    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 24);
    assert_eq!(text, fs::read_to_string(&b).unwrap(), "same seed must give identical bytes");
}

#[test]
fn pretrain_embed_probe_pipeline_works() {
    let tmp = tempfile::tempdir().unwrap();
    // 10 graphs per class: enough for the nested cross-validation below
    let dataset = gen_dataset(tmp.path(), 60);
    let ckpt = tmp.path().join("encoder.json");
    let loss_csv = tmp.path().join("loss.csv");

    run_ok(bin()
        .args(["pretrain", "--method", "graphcl", "--seed", "0"])
        .args(["--epochs", "2", "--batch-size", "30"])
        .arg("--dataset")
        .arg(&dataset)
        .arg("--out")
        .arg(&ckpt)
        .arg("--loss-out")
        .arg(&loss_csv));

    let ckpt_json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&ckpt).unwrap()).unwrap();
    assert!(ckpt_json.get("version").is_some(), "checkpoint should be versioned");

    let loss = fs::read_to_string(&loss_csv).unwrap();
    let lines: Vec<&str> = loss.lines().collect();
    assert_eq!(lines[0], "epoch,loss");
    assert_eq!(lines.len(), 3, "header plus one row per epoch: {:?}", lines);
    for row in &lines[1..] {
        let v: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert!(v.is_finite());
    }

    let features = tmp.path().join("features.csv");
    run_ok(bin()
        .arg("embed")
        .arg("--checkpoint")
        .arg(&ckpt)
        .arg("--dataset")
        .arg(&dataset)
        .arg("--out")
        .arg(&features));
    let ftext = fs::read_to_string(&features).unwrap();
    assert!(ftext.starts_with("graph_id,f0,"), "feature header: {:?}", ftext.lines().next());
    assert_eq!(ftext.lines().count(), 61, "header plus one row per graph");

    let labels = tmp.path().join("labels.csv");
    write_labels(&dataset, &labels, false);
    let probe_out = tmp.path().join("probe.json");
    let out = run_ok(bin()
        .args(["probe", "--protocol", "svm", "--seeds", "2", "--kfold", "5"])
        .arg("--embeddings")
        .arg(&features)
        .arg("--labels")
        .arg(&labels)
        .arg("--out")
        .arg(&probe_out));

    let stdout: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(stdout["metric"], "accuracy");
    assert_eq!(stdout["per_seed"].as_array().unwrap().len(), 2);
    let mean = stdout["mean"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&mean));
    let written: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&probe_out).unwrap()).unwrap();
    assert_eq!(written, stdout);
}

#[test]
fn untrained_checkpoints_skip_training_and_probe_logreg_uses_splits() {
    let tmp = tempfile::tempdir().unwrap();
    let dataset = gen_dataset(tmp.path(), 60);
    let ckpt = tmp.path().join("frozen.json");
    run_ok(bin()
        .args(["pretrain", "--method", "untrained", "--seed", "1"])
        .arg("--dataset")
        .arg(&dataset)
        .arg("--out")
        .arg(&ckpt));

    let features = tmp.path().join("features.csv");
    run_ok(bin()
        .arg("embed")
        .arg("--checkpoint")
        .arg(&ckpt)
        .arg("--dataset")
        .arg(&dataset)
        .arg("--out")
        .arg(&features));

    let labels = tmp.path().join("labels.csv");
    let n = write_labels(&dataset, &labels, true);
    let splits = tmp.path().join("splits");
    fs::create_dir(&splits).unwrap();
    let chunk = n / 3;
    let write_idx = |name: &str, range: std::ops::Range<usize>| {
        let body: String = range.map(|i| format!("{}\n", i)).collect();
        fs::write(splits.join(name), body).unwrap();
    };
    write_idx("train.csv", 0..chunk);
    write_idx("valid.csv", chunk..2 * chunk);
    write_idx("test.csv", 2 * chunk..n);

    let out = run_ok(bin()
        .args(["probe", "--protocol", "logreg"])
        .arg("--embeddings")
        .arg(&features)
        .arg("--labels")
        .arg(&labels)
        .arg("--splits")
        .arg(&splits));
    let stdout: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(stdout["metric"], "roc-auc");
    let auc = stdout["auc"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&auc));
    assert!(stdout["chosen_c"].as_f64().unwrap() > 0.0);
}

#[test]
fn sweep_covers_the_grid_reuses_cells_and_reports() {
    let tmp = tempfile::tempdir().unwrap();
    // the half-fraction cells keep 10 graphs per class, enough for the
    // nested cross-validation inside the probe
    let dataset = gen_dataset(tmp.path(), 120);
    let out_dir = tmp.path().join("runs");
    let config_path = tmp.path().join("sweep.conf");
    fs::write(
        &config_path,
        format!(
            "# tiny grid for the cheap baselines\n\
             dataset = {}\n\
             methods = untrained, handcrafted, random\n\
             fractions = 0.5, 1.0\n\
             seeds = 0, 1\n\
             probe = svm\n\
             kfold = 5\n\
             out_dir = {}\n",
            dataset.display(),
            out_dir.display()
        ),
    )
    .unwrap();

    let run_sweep = || {
        let out = run_ok(bin()
            .env("GCLBENCH_WORKERS", "1")
            .arg("sweep")
            .arg("--config")
            .arg(&config_path));
        String::from_utf8_lossy(&out.stdout).into_owned()
    };
    let first = run_sweep();
    assert!(first.contains("12 records, 0 failed"), "stdout: {}", first);
    let records_dir = out_dir.join("records");
    assert_eq!(fs::read_dir(&records_dir).unwrap().count(), 12);

    // a second invocation reuses every finished cell and changes nothing
    let snapshot: std::collections::BTreeMap<String, String> = fs::read_dir(&records_dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&p).unwrap())
        })
        .collect();
    let second = run_sweep();
    assert!(second.contains("12 records, 0 failed"), "stdout: {}", second);
    for (name, body) in &snapshot {
        assert_eq!(&fs::read_to_string(records_dir.join(name)).unwrap(), body, "{} changed", name);
    }

    let report_dir = tmp.path().join("report");
    run_ok(bin().arg("report").arg("--in").arg(&out_dir).arg("--out").arg(&report_dir));
    for file in ["aggregate.csv", "summary.json", "reference_table.txt"] {
        assert!(report_dir.join(file).exists(), "missing {}", file);
    }
    let aggregate = fs::read_to_string(report_dir.join("aggregate.csv")).unwrap();

    let report_dir2 = tmp.path().join("report2");
    run_ok(bin().arg("report").arg("--in").arg(&out_dir).arg("--out").arg(&report_dir2));
    assert_eq!(
        aggregate,
        fs::read_to_string(report_dir2.join("aggregate.csv")).unwrap(),
        "reports should be byte-stable"
    );
}

#[test]
fn failures_exit_nonzero_with_one_json_line() {
    let tmp = tempfile::tempdir().unwrap();

    let missing = run_err(bin()
        .args(["probe", "--protocol", "svm"])
        .arg("--embeddings")
        .arg(tmp.path().join("nope.csv"))
        .arg("--labels")
        .arg(tmp.path().join("nope2.csv")));
    assert_eq!(missing["kind"], "baseline");

    let bad_config = tmp.path().join("bad.conf");
    fs::write(&bad_config, "dataset = x.jsonl\nnot_a_key = 3\n").unwrap();
    let config_err = run_err(bin().arg("sweep").arg("--config").arg(&bad_config));
    assert_eq!(config_err["kind"], "config");
    assert!(
        config_err["error"].as_str().unwrap().contains("not_a_key"),
        "message should name the offending key: {}",
        config_err
    );

    let dataset = gen_dataset(tmp.path(), 12);
    let no_encoder = run_err(bin()
        .args(["pretrain", "--method", "handcrafted", "--seed", "0"])
        .arg("--dataset")
        .arg(&dataset)
        .arg("--out")
        .arg(tmp.path().join("x.json")));
    assert_eq!(no_encoder["kind"], "config");
}

#[test]
fn worker_env_is_validated() {
    let tmp = tempfile::tempdir().unwrap();
    let dataset = gen_dataset(tmp.path(), 12);
    let config_path = tmp.path().join("sweep.conf");
    fs::write(
        &config_path,
        format!(
            "dataset = {}\nmethods = handcrafted\nfractions = 1.0\nseeds = 0\nprobe = svm\nkfold = 2\nout_dir = {}\n",
            dataset.display(),
            tmp.path().join("runs").display()
        ),
    )
    .unwrap();
    let err = run_err(bin()
        .env("GCLBENCH_WORKERS", "zero")
        .arg("sweep")
        .arg("--config")
        .arg(&config_path));
    assert_eq!(err["kind"], "config");
    assert!(err["error"].as_str().unwrap().contains("GCLBENCH_WORKERS"));
}
