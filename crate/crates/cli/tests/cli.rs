use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn cad(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cad"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("cad runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn synth(dir: &Path, name: &str, n_inlier: &str, n_outlier: &str) {
    let out = cad(
        dir,
        &["synth", "--n-inlier", n_inlier, "--n-outlier", n_outlier, "--d", "2", "--shift", "6", "--seed", "1", "--out", name],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn synth_is_reproducible() {
    let dir = TempDir::new().unwrap();
    synth(dir.path(), "a.csv", "500", "50");
    synth(dir.path(), "b.csv", "500", "50");
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.csv")).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("x0,x1,y\n"));
    assert_eq!(text.lines().count(), 551);

    let stdout = cad(dir.path(), &["synth", "--n-inlier", "500", "--n-outlier", "50", "--shift", "6", "--seed", "1"]);
    assert_eq!(code(&stdout), 0);
    assert_eq!(stdout.stdout, text.as_bytes());
}

#[test]
fn calibrate_then_score_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    synth(d, "s.csv", "300", "30");
    let out = cad(
        d,
        &["calibrate", "s.csv", "--label-col", "y", "--detector", "iforest", "--if-trees", "50", "--method", "cv", "--k", "10", "--seed", "7", "--out", "m.cad"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stderr(&out).contains("n_cal = 300"), "{}", stderr(&out));
    assert!(d.join("m.cad").exists());

    for name in ["r1.csv", "r2.csv"] {
        let out = cad(d, &["score", "m.cad", "s.csv", "--label-col", "y", "--out", name]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    let r1 = fs::read_to_string(d.join("r1.csv")).unwrap();
    assert_eq!(r1, fs::read_to_string(d.join("r2.csv")).unwrap());

    let mut lines = r1.lines();
    assert_eq!(lines.next(), Some("row_index,p_value,p_adjusted,reject"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 330);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[0], i.to_string());
        let p: f64 = r[1].parse().unwrap();
        let adj: f64 = r[2].parse().unwrap();
        assert!((1.0 / 301.0 - 1e-15..=1.0).contains(&p) && (p..=1.0).contains(&adj));
        assert_eq!(r[3] == "1", adj <= 0.2);
    }
    // The outliers (last 30 rows) should mostly be flagged.
    assert!(rows[300..].iter().filter(|r| r[3] == "1").count() >= 20);

    // Same seed, same model file.
    let out = cad(
        d,
        &["calibrate", "s.csv", "--label-col", "y", "--detector", "iforest", "--if-trees", "50", "--method", "cv", "--k", "10", "--seed", "7", "--out", "-"],
    );
    assert_eq!(out.stdout, fs::read(d.join("m.cad")).unwrap());
}

#[test]
fn single_row_batch_is_unadjusted() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    synth(d, "s.csv", "100", "5");
    fs::write(d.join("one.csv"), "x0,x1\n0.5,-0.25\n").unwrap();
    let out = cad(d, &["calibrate", "s.csv", "--label-col", "y", "--method", "jab+", "--k", "5", "--out", "m.cad"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = cad(d, &["score", "m.cad", "one.csv"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[1], row[2]);
}

#[test]
fn validation_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    synth(d, "s.csv", "500", "50");

    let out = cad(d, &["calibrate", "s.csv", "--method", "split", "--k", "5", "--out", "m.cad"]);
    assert_eq!(code(&out), 1);
    assert_eq!(stderr(&out).lines().count(), 1, "{}", stderr(&out));
    assert!(!d.join("m.cad").exists());

    let out = cad(d, &["calibrate", "s.csv", "--label-col", "y", "--detector", "lof", "--lof-k", "600", "--out", "m.cad"]);
    assert_eq!(code(&out), 1);
    assert!(!d.join("m.cad").exists());

    let out = cad(d, &["calibrate", "s.csv", "--method", "jab", "--ratio", "1.5", "--out", "m.cad"]);
    assert_eq!(code(&out), 1);

    let out = cad(d, &["evaluate", "s.csv", "--method", "jab", "--sweep", "100,200"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("sweep"));

    let out = cad(d, &["evaluate", "s.csv", "--label-col", "label"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("label"));

    let out = cad(d, &["sweep", "s.csv", "--method", "cv", "--sizes", "100"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("jab"));

    fs::write(d.join("bad.csv"), "x0,x1\n1.0,oops\n").unwrap();
    let out = cad(d, &["calibrate", "bad.csv", "--out", "m.cad"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("row 1") && stderr(&out).contains("x1"), "{}", stderr(&out));
}

#[test]
fn leave_one_out_gate() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    synth(d, "big.csv", "5000", "10");
    let out = cad(d, &["calibrate", "big.csv", "--label-col", "y", "--method", "jackknife", "--out", "m.cad"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("low-data gate"), "{}", stderr(&out));
    assert!(stderr(&out).contains("--force-loo"));
    assert!(!d.join("m.cad").exists());
}

#[test]
fn dimension_mismatch_exits_one() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    synth(d, "s.csv", "100", "5");
    let out = cad(d, &["calibrate", "s.csv", "--label-col", "y", "--out", "m.cad"]);
    assert_eq!(code(&out), 0);
    fs::write(d.join("wide.csv"), "a,b,c\n1,2,3\n").unwrap();
    let out = cad(d, &["score", "m.cad", "wide.csv", "--out", "r.csv"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("expected 2") && stderr(&out).contains("got 3"), "{}", stderr(&out));
    assert!(!d.join("r.csv").exists());
}

#[test]
fn io_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    synth(d, "s.csv", "100", "5");
    assert_eq!(code(&cad(d, &["score", "missing.cad", "s.csv"])), 2);
    assert_eq!(code(&cad(d, &["calibrate", "missing.csv", "--out", "m.cad"])), 2);
    assert_eq!(code(&cad(d, &["calibrate", "s.csv", "--out", "no/such/dir/m.cad"])), 2);

    // A readable but malformed model is a validation error.
    fs::write(d.join("junk.cad"), "{\"format\":\"something-else\"}").unwrap();
    assert_eq!(code(&cad(d, &["score", "junk.cad", "s.csv"])), 1);
}

#[test]
fn evaluate_and_sweep_reports() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    synth(d, "s.csv", "600", "60");
    let args = ["--replicates", "3", "--test-sets", "2", "--seed", "5"];

    let mut eval = vec!["evaluate", "s.csv", "--method", "cv+", "--k", "5", "--json", "r.json"];
    eval.extend(args);
    let out = cad(d, &eval);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("FDR x̄") && table.contains("P90") && table.contains("σ"));
    assert!(table.contains("cv+ (K=5)"));
    let json = fs::read_to_string(d.join("r.json")).unwrap();
    assert!(json.contains("\"mean_n_cal\": 300.0"), "{json}");
    let again = cad(d, &eval);
    assert_eq!(code(&again), 0);
    assert_eq!(json, fs::read_to_string(d.join("r.json")).unwrap());

    let mut sweep = vec!["sweep", "s.csv", "--sizes", "100,200,300", "--json", "-", "--out", "t.txt"];
    sweep.extend(args);
    let out = cad(d, &sweep);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let json = String::from_utf8(out.stdout).unwrap();
    for n in ["100.0", "200.0", "300.0"] {
        assert!(json.contains(&format!("\"mean_n_cal\": {n}")), "{json}");
    }
    let table = fs::read_to_string(d.join("t.txt")).unwrap();
    assert_eq!(table.lines().filter(|l| l.contains("jab")).count(), 3);
}

#[test]
fn help_and_unknown_flags() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let out = cad(d, &["--help"]);
    assert_eq!(code(&out), 0);
    for sub in ["calibrate", "score", "evaluate", "sweep", "synth"] {
        assert!(String::from_utf8_lossy(&out.stdout).contains(sub));
    }
    let out = cad(d, &["calibrate", "--help"]);
    assert_eq!(code(&out), 0);
    let help = String::from_utf8(out.stdout).unwrap();
    for flag in ["--detector", "--method", "--k", "--ratio", "--seed", "--out", "--force-loo", "--lof-k", "--if-trees", "--pca-components", "--aggregation"] {
        assert!(help.contains(flag), "missing {flag}");
    }

    let out = cad(d, &["synth", "--out", "x.csv", "--bogus"]);
    assert_eq!(code(&out), 1);
    assert!(!d.join("x.csv").exists());
    assert_eq!(code(&cad(d, &[])), 1);
    assert_eq!(code(&cad(d, &["--version"])), 0);
}
