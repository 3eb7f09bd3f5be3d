use std::path::Path;
use std::process::{Command, Output};

fn kgcn(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kgcn"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("KGCN_OUT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &[&str] = &[
    "--data.classes",
    "3",
    "--data.per_class",
    "8",
    "--data.train_per_class",
    "5",
    "--train.epochs",
    "4",
    "--train.batch",
    "5",
    "--model.K",
    "3",
    "--model.N",
    "2",
];

fn with_small<'a>(head: &[&'a str]) -> Vec<&'a str> {
    head.iter().copied().chain(SMALL.iter().copied()).collect()
}

#[test]
fn gradcheck_passes_for_every_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let o = kgcn(&["gradcheck", "--seed", "1"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("worst relative error"));
    for name in ["linear", "sigmoid", "histogram_intersection"] {
        assert!(text.contains(name), "{text}");
    }
    assert!(dir.path().join("report.txt").is_file());
    assert!(dir.path().join("config.json").is_file());
}

#[test]
fn kernelcheck_reports_every_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let o = kgcn(&["kernelcheck", "--seed", "3"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    for name in ["gaussian", "cauchy", "histogram_intersection b=50"] {
        assert!(text.contains(name), "{text}");
    }
    assert!(text.trim_end().ends_with("ok"));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let o = kgcn(&["train", "--seed", "1", "--config", missing.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("cli/usage"));
    assert!(stderr(&o).contains("Usage"));

    let o = kgcn(&["train"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("seed"));

    let o = kgcn(&["train", "--seed", "1", "--model.depth", "3"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unknown config key `model.depth`"));

    let o = kgcn(&["frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"train\": 3}").unwrap();
    let o = kgcn(
        &["train", "--seed", "1", "--data.source", "file", "--data.path", bad.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn divergence_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let synth = dir.path().join("synth");
    assert_eq!(kgcn(&with_small(&["synth", "--seed", "1"]), &synth).status.code(), Some(0));
    let mut ds: serde_json::Value =
        serde_json::from_slice(&std::fs::read(synth.join("dataset.json")).unwrap()).unwrap();
    for split in ["train", "test"] {
        for g in ds[split].as_array_mut().unwrap() {
            for x in g["signals"]["data"].as_array_mut().unwrap() {
                *x = serde_json::json!(x.as_f64().unwrap() * 1e3);
            }
        }
    }
    let big = dir.path().join("big.json");
    std::fs::write(&big, serde_json::to_vec(&ds).unwrap()).unwrap();
    let args = with_small(&[
        "train",
        "--seed",
        "1",
        "--data.source",
        "file",
        "--data.path",
        big.to_str().unwrap(),
        "--kernel.kind",
        "polynomial",
        "--kernel.p",
        "3",
        "--model.normalize",
        "none",
        "--train.lr0",
        "1e6",
        "--train.lr_bounds",
        "[1, 1e8]",
    ]);
    let o = kgcn(&args, &dir.path().join("run"));
    assert_eq!(o.status.code(), Some(3), "{}{}", stdout(&o), stderr(&o));
    assert!(stderr(&o).contains("train/diverged"));
    assert!(dir.path().join("run").join("metrics.csv").is_file());
}

#[test]
fn train_eval_resume_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let o = kgcn(&with_small(&["train", "--seed", "5"]), &run);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["config.json", "checkpoint.json", "metrics.csv", "report.txt"] {
        assert!(run.join(f).is_file(), "{f}");
    }
    let csv = std::fs::read_to_string(run.join("metrics.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("epoch,loss,lr,train_acc,test_acc"));
    assert_eq!(csv.lines().count(), 5);

    // same seed, same files
    let again = dir.path().join("again");
    assert_eq!(kgcn(&with_small(&["train", "--seed", "5"]), &again).status.code(), Some(0));
    for f in ["config.json", "checkpoint.json", "metrics.csv", "report.txt"] {
        assert_eq!(std::fs::read(run.join(f)).unwrap(), std::fs::read(again.join(f)).unwrap(), "{f}");
    }

    // the config written by a run reproduces it
    let from_cfg = dir.path().join("from_cfg");
    let o = kgcn(&["train", "--config", run.join("config.json").to_str().unwrap()], &from_cfg);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        std::fs::read(run.join("metrics.csv")).unwrap(),
        std::fs::read(from_cfg.join("metrics.csv")).unwrap()
    );

    let ck = run.join("checkpoint.json");
    let eval = dir.path().join("eval");
    let o = kgcn(&["eval", "--checkpoint", ck.to_str().unwrap()], &eval);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("test macro accuracy"));

    // 4 epochs then 4 more equals 8 straight
    let longer: Vec<&str> = with_small(&["train", "--seed", "5"])
        .into_iter()
        .map(|a| if a == "4" { "8" } else { a })
        .collect();
    let straight = dir.path().join("straight");
    assert_eq!(kgcn(&longer, &straight).status.code(), Some(0));
    let resumed = dir.path().join("resumed");
    let mut args = longer.clone();
    args.extend(["--resume", ck.to_str().unwrap()]);
    let o = kgcn(&args, &resumed);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        std::fs::read(straight.join("metrics.csv")).unwrap(),
        std::fs::read(resumed.join("metrics.csv")).unwrap()
    );

    // resuming with a different architecture is refused
    let mut args = with_small(&["train", "--seed", "5", "--kernel.kind", "linear"]);
    args.extend(["--resume", ck.to_str().unwrap()]);
    assert_eq!(kgcn(&args, &dir.path().join("x")).status.code(), Some(1));
}

#[test]
fn synth_then_train_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let synth = dir.path().join("synth");
    let o = kgcn(&with_small(&["synth", "--seed", "2"]), &synth);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let dataset = synth.join("dataset.json");
    assert!(dataset.is_file());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(kgcn(&with_small(&["train", "--seed", "2"]), &a).status.code(), Some(0));
    let o = kgcn(
        &with_small(&["train", "--seed", "2", "--data.source", "file", "--data.path", dataset.to_str().unwrap()]),
        &b,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(std::fs::read(a.join("metrics.csv")).unwrap(), std::fs::read(b.join("metrics.csv")).unwrap());
}

#[test]
fn ablate_and_kpca_write_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = kgcn(&with_small(&["ablate", "--seed", "4"]), dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("ablation.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    for mode in ["FSV_LA", "LSV_FA", "LSV_LA"] {
        assert!(csv.contains(mode));
    }

    let kp = dir.path().join("kpca");
    let o = kgcn(&with_small(&["kpca", "--seed", "4", "--kpca.H", "6", "--kpca.max_anchors", "200"]), &kp);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let saved: serde_json::Value = serde_json::from_slice(&std::fs::read(kp.join("projector.json")).unwrap()).unwrap();
    assert_eq!(saved["projector"]["eigvals"].as_array().unwrap().len(), 6);
    assert_eq!(saved["projector"]["anchors"]["rows"], 200);

    let o = kgcn(&with_small(&["kpca", "--seed", "4", "--kernel.kind", "linear", "--kpca.H", "30"]), &kp);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("kpca/overdim"));
}

#[test]
fn sweep_emits_ninety_nine_rows() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "sweep",
        "--seed",
        "1",
        "--data.classes",
        "2",
        "--data.per_class",
        "3",
        "--data.train_per_class",
        "2",
        "--train.epochs",
        "1",
    ];
    let o = kgcn(&args, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("kernel,K,N,params,train_acc,test_acc,status"));
    assert_eq!(lines.count(), 99);
    assert!(csv.contains("gaussian,5,4,") && csv.contains("histogram_intersection,10,8,"));
}

#[test]
fn kgcn_out_sets_the_output_root() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_kgcn"))
        .args(["gradcheck", "--seed", "2"])
        .env("KGCN_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("gradcheck").join("report.txt").is_file());
}
