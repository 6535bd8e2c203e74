use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const DATA: &str = "a,b,y
0.10,0.20,-1
0.20,0.10,-1
0.30,0.35,-1
0.15,0.40,-1
0.80,0.90,1
0.90,0.70,1
0.70,0.85,1
0.95,0.60,1
";

fn octsvm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_octsvm"))
        .current_dir(dir)
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn train_then_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("d.csv"), DATA).unwrap();
    let out = octsvm(
        dir.path(),
        &[
            "train",
            "--data",
            "d.csv",
            "--header",
            "--depth",
            "1",
            "--node-limit",
            "200",
            "--out",
            "m.json",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout(&out).contains("training accuracy 100.00%"));

    let out = octsvm(
        dir.path(),
        &[
            "predict", "--model", "m.json", "--data", "d.csv", "--header",
        ],
    );
    assert!(out.status.success());
    let labels: Vec<&str> = DATA
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap())
        .collect();
    assert_eq!(stdout(&out).lines().collect::<Vec<_>>(), labels);
    assert!(String::from_utf8_lossy(&out.stderr).contains("accuracy 100.00% (8/8)"));
}

#[test]
fn cart_model_predicts_unlabeled_rows() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("d.csv"), DATA).unwrap();
    fs::write(dir.path().join("u.csv"), "0.12,0.22\n0.88,0.8\n").unwrap();
    let out = octsvm(
        dir.path(),
        &[
            "train", "--data", "d.csv", "--header", "--method", "cart", "--alpha", "0", "--out",
            "c.json",
        ],
    );
    assert!(out.status.success());
    let out = octsvm(
        dir.path(),
        &[
            "predict",
            "--model",
            "c.json",
            "--data",
            "u.csv",
            "--unlabeled",
            "--out",
            "p.txt",
        ],
    );
    assert!(out.status.success());
    assert_eq!(
        fs::read_to_string(dir.path().join("p.txt")).unwrap(),
        "-1\n1\n"
    );
}

#[test]
fn oracle_agrees_on_tiny_data() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("t.csv"), "0.1,-1\n0.4,1\n0.6,-1\n0.9,1\n").unwrap();
    let out = octsvm(dir.path(), &["oracle", "--data", "t.csv", "--depth", "0"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    assert!(text.contains("enumeration") && text.contains("branch-and-bound"));
}

#[test]
fn export_model_writes_lp_text() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("d.csv"), DATA).unwrap();
    let out = octsvm(
        dir.path(),
        &[
            "export-model",
            "--data",
            "d.csv",
            "--header",
            "--depth",
            "1",
        ],
    );
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("Minimize") && text.contains("Subject To") && text.contains("octsvm_11"));
    assert!(text.trim_end().ends_with("End"));
}

#[test]
fn experiment_writes_report_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("d.csv"), DATA).unwrap();
    fs::write(
        dir.path().join("s.toml"),
        "dataset = \"d.csv\"\nhas_header = true\nmethods = [\"cart\"]\nflip_fractions = [0.0, 0.25]\n\
         folds = 2\nreplications = 1\nalpha_grid = [0.0]\ntime_limit_secs = 5\n",
    )
    .unwrap();
    let out = octsvm(
        dir.path(),
        &["experiment", "--spec", "s.toml", "--out", "r.csv"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout(&out).contains("CART"));
    let report = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert_eq!(report.lines().count(), 1 + 2 * 2);
    assert!(dir.path().join("r.csv.summary.txt").exists());
}

#[test]
fn failures_exit_nonzero_with_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("d.csv"), DATA).unwrap();
    fs::write(
        dir.path().join("bad.toml"),
        "dataset = \"d.csv\"\nunknown_key = 1\n",
    )
    .unwrap();
    for args in [
        vec!["train", "--data", "missing.csv", "--out", "m.json"],
        vec![
            "export-model",
            "--data",
            "d.csv",
            "--header",
            "--method",
            "cart",
        ],
        vec!["experiment", "--spec", "bad.toml", "--out", "r.csv"],
        vec!["predict", "--model", "d.csv", "--data", "d.csv"],
    ] {
        let out = octsvm(dir.path(), &args);
        assert!(!out.status.success(), "{args:?} should fail");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.starts_with("error: "), "{args:?}: {err}");
    }
}
