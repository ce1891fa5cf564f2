use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = "\
data_dir = data
model_dir = models
out_dir = out
seed = 5
max_epochs = 40
hidden = 4
folds = 3
min_windows = 5
minutes = 5,10,20
bank_minutes = 10,20
cv_lambdas = 1e-4,1
synth.n_matches = 240
synth.player_count = 200
";

fn winpred(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_winpred"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = winpred(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.cfg"), CONFIG).unwrap();
    ok(dir.path(), &["synth", "--config", "run.cfg"]);
    dir
}

fn first_line(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap_or("").to_string()
}

fn first_match(dir: &Path) -> String {
    let text = fs::read_to_string(dir.join("data/truth.csv")).unwrap();
    text.lines().nth(1).unwrap().split(',').next().unwrap().to_string()
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = winpred(dir.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error:usage:"), "{err}");
    assert!(err.contains("Usage:"), "{err}");
}

#[test]
fn error_categories_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = winpred(dir.path(), &["ingest", "missing-dir"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:data:"));

    let out = winpred(dir.path(), &["train", "--set", "no_such_key=1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:usage:"));

    let out = winpred(dir.path(), &["train", "--model", "svm"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn csv_headers_are_stable() {
    let dir = workspace();
    let d = dir.path();
    assert_eq!(first_line(&d.join("data/truth.csv")), "match_id,strength,p_radiant,winner");

    ok(d, &["train", "--config", "run.cfg", "--model", "concat"]);
    assert_eq!(
        first_line(&d.join("models/concat.train.csv")),
        "component,epochs,loss,grad_norm,converged"
    );
    let id = first_match(d);
    let traj = ok(d, &["trajectory", "--config", "run.cfg", "--model", "concat", "--match", &id]);
    assert_eq!(traj.lines().next(), Some("minute,p_radiant"));

    let reports = [
        ("minutes", "model,minute,accuracy,n"),
        ("duration", "duration_start,duration_end,accuracy,n"),
        ("cv", "model,lambda,hidden,activation,cv_accuracy"),
        ("ablation", "features,lr,nn"),
    ];
    for (report, header) in reports {
        let stdout = ok(d, &["evaluate", "--config", "run.cfg", "--report", report]);
        assert!(stdout.contains("wrote"), "{stdout}");
        assert_eq!(first_line(&d.join(format!("out/{report}.csv"))), header, "{report}");
    }
    let ablation = fs::read_to_string(d.join("out/ablation.csv")).unwrap();
    assert_eq!(ablation.lines().count(), 5);
}

#[test]
fn minute_zero_prediction_is_the_prior_model() {
    let dir = workspace();
    let d = dir.path();
    ok(d, &["train", "--config", "run.cfg", "--model", "lr"]);
    ok(d, &["train", "--config", "run.cfg", "--model", "concat"]);
    let id = first_match(d);
    let prior = ok(d, &["predict", "--config", "run.cfg", "--model-file", "models/lr.json", "--match", &id]);
    let combined = ok(
        d,
        &["predict", "--config", "run.cfg", "--model-file", "models/concat.json", "--match", &id, "--minute", "0"],
    );
    assert_eq!(prior, combined);
    let p: f64 = prior.trim().parse().unwrap();
    assert!((0.0..=1.0).contains(&p));
    let out = winpred(d, &["predict", "--config", "run.cfg", "--model-file", "models/lr.json", "--match", "nope"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn flags_override_the_config_file() {
    let dir = workspace();
    let d = dir.path();
    fs::write(d.join("asm.cfg"), format!("{CONFIG}model = asm\n")).unwrap();
    ok(d, &["train", "--config", "asm.cfg", "--model", "lr"]);
    assert!(d.join("models/lr.json").exists());
    assert!(!d.join("models/asm.json").exists());
}

#[test]
fn identical_configs_give_identical_csvs() {
    let runs: Vec<Vec<(String, Vec<u8>)>> = (0..2)
        .map(|_| {
            let dir = workspace();
            let d = dir.path();
            ok(d, &["evaluate", "--config", "run.cfg", "--report", "minutes"]);
            ok(d, &["train", "--config", "run.cfg", "--model", "stacked"]);
            let id = first_match(d);
            ok(
                d,
                &["trajectory", "--config", "run.cfg", "--model", "stacked", "--match", &id, "--out", "out/traj.csv"],
            );
            let mut files = Vec::new();
            for sub in ["data", "out"] {
                for e in fs::read_dir(d.join(sub)).unwrap() {
                    let p = e.unwrap().path();
                    if p.is_file() {
                        files.push((p.file_name().unwrap().to_string_lossy().into(), fs::read(&p).unwrap()));
                    }
                }
            }
            files.sort();
            files
        })
        .collect();
    assert!(runs[0].len() >= 6);
    assert_eq!(runs[0], runs[1]);
}
