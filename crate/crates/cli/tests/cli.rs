use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_fareylat");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawn fareylat")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data lines, without the digest comment.
fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

const HELP_PAGES: &[&[&str]] = &[
    &[],
    &["tables"],
    &["farey", "list"],
    &["farey", "stats"],
    &["lattice", "compute"],
    &["lattice", "scan"],
    &["fracsum", "eval"],
    &["bounds", "prop31"],
    &["bounds", "vdc"],
    &["bounds", "lemma33"],
    &["bounds", "rcount"],
    &["scan"],
    &["identity-check"],
    &["fit"],
];

fn all_help() -> String {
    let mut text = String::new();
    for page in HELP_PAGES {
        let mut args = page.to_vec();
        args.push("--help");
        let o = run(&args);
        assert!(o.status.success());
        text.push_str(&format!("==== fareylat {}\n", page.join(" ")));
        text.push_str(&stdout(&o));
    }
    text
}

#[test]
fn help_matches_golden() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/help.txt");
    let text = all_help();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&golden, &text).unwrap();
    }
    assert_eq!(text, fs::read_to_string(&golden).unwrap());
}

#[test]
fn help_lists_every_flag() {
    let text = all_help();
    for flag in [
        "--order", "-T", "--N", "--k", "--alpha", "--q", "--epsilon", "--exact", "--from", "--to",
        "--step", "--seed", "--jobs", "--out", "--format",
    ] {
        assert!(text.contains(flag), "{flag} missing from help");
    }
}

#[test]
fn identity_check_to_100() {
    let o = run(&["identity-check", "--to", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows[0], ["T", "E", "Sigma", "Icount", "residual"]);
    assert_eq!(rows.len(), 101);
    assert!(rows[1..].iter().all(|r| r[4] == "0"));
}

#[test]
fn lattice_compute_order_4() {
    let o = run(&["lattice", "compute", "--order", "4", "--exact"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("# manifest-sha256: "));
    let rows = csv_rows(&text);
    assert_eq!(rows[0], ["T", "C", "F", "G", "E", "Sigma", "Icount", "residual"]);
    assert_eq!(rows[1], ["4", "1", "6", "61/144", "-37/24", "11/24", "4", "0"]);
    // the manifest goes to stderr when there is no --out
    let manifest: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(manifest["table_limit"], 4);
}

#[test]
fn lattice_float_matches_exact_small() {
    let o = run(&["lattice", "scan", "--from", "1", "--to", "30", "--step", "7"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&stdout(&o));
    let orders: Vec<&str> = rows[1..].iter().map(|r| r[0].as_str()).collect();
    assert_eq!(orders, ["1", "8", "15", "22", "29"]);
    for r in &rows[1..] {
        assert!(r[7].parse::<f64>().unwrap().abs() < 1e-9);
    }
}

#[test]
fn farey_outputs() {
    let o = run(&["farey", "stats", "-T", "3"]);
    assert_eq!(csv_rows(&stdout(&o))[1], ["3", "4", "3", "13", "36"]);
    let o = run(&["farey", "list", "-T", "3"]);
    let dens: Vec<String> = csv_rows(&stdout(&o))[1..].iter().map(|r| format!("{}/{}", r[1], r[2])).collect();
    assert_eq!(dens, ["0/1", "1/3", "1/2", "2/3"]);
}

#[test]
fn out_file_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = run(&["tables", "--limit", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.ends_with("n,mu,phi,omega,mertens\n1,1,1,0,1\n2,-1,1,1,0\n3,-1,2,1,-1\n"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("t.csv.manifest.json")).unwrap()).unwrap();
    let digest = manifest["inputs_digest"].as_str().unwrap();
    assert!(text.starts_with(&format!("# manifest-sha256: {digest}\n")));
    use sha2::Digest;
    assert_eq!(manifest["outputs"][0]["sha256"], hex::encode(sha2::Sha256::digest(text.as_bytes())));
}

#[test]
fn scan_is_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (i, jobs) in ["1", "3", "3"].iter().enumerate() {
        let out = dir.path().join(format!("r{i}.csv"));
        let o = run(&["scan", "rcount", "--seed", "9", "--jobs", jobs, "--out", out.to_str().unwrap()]);
        assert!(matches!(o.status.code(), Some(0 | 1)));
        outputs.push(fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
    let other = dir.path().join("other.csv");
    run(&["scan", "rcount", "--seed", "10", "--out", other.to_str().unwrap()]);
    assert_ne!(fs::read(&other).unwrap(), outputs[0]);
}

#[test]
fn fit_reads_scan_csv() {
    let dir = tempfile::tempdir().unwrap();
    let scan = dir.path().join("scan.csv");
    let o = run(&["scan", "error-growth", "--from", "20", "--to", "80", "--step", "20", "--out", scan.to_str().unwrap()]);
    let scan_ok = o.status.code();
    assert!(matches!(scan_ok, Some(0 | 1)));
    let o = run(&["fit", "--input", scan.to_str().unwrap(), "--x", "T", "--y", "absE"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let fit: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(fit["point_count"], 4);
    assert!(fit["slope"].as_f64().unwrap() > 1.0);
}

#[test]
fn scan_json_summary() {
    let o = run(&["scan", "mertens", "--from", "16", "--to", "1016", "--step", "100", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for key in ["fits", "max_ratios", "residuals", "seed", "grid"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["grid"].as_array().unwrap().len(), 11);
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["bounds", "vdc", "--N", "x", "--k", "2", "--alpha", "1/3"][..],
        &["lattice", "compute", "--order", "4", "--bogus"],
        &["fracsum", "eval", "--N", "10", "--k", "2", "--alpha", "golden", "--exact"],
        &["fracsum", "eval", "--N", "10", "--k", "1", "--alpha", "1/3"],
        &["scan", "mertens", "--from", "2", "--to", "20"],
        &["identity-check", "--from", "5", "--to", "4"],
    ] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = run(&["bounds", "vdc", "--N", "x", "--k", "2", "--alpha", "1/3"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("--N"));
}

#[test]
fn decimal_alpha_needs_exact_to_be_rational() {
    let o = run(&["fracsum", "eval", "--N", "10", "--k", "2", "--alpha", "0.1", "--exact"]);
    assert_eq!(csv_rows(&stdout(&o))[1], ["10", "2", "1/10", "1", "10", "-1/2"]);
    let o = run(&["fracsum", "eval", "--N", "10", "--k", "2", "--alpha", "0.1"]);
    let row = &csv_rows(&stdout(&o))[1];
    assert_eq!(row[2], "0.1");
    assert!(row[5].parse::<f64>().is_ok());
}
