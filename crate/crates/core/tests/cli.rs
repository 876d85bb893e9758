//! End-to-end runs of the command-line binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bergman-rays"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(format!("{name}.toml"))
}

fn run(args: &[&str], cfg: &Path, out: &Path) -> Output {
    bin()
        .args(args)
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .arg("--threads")
        .arg("2")
        .output()
        .expect("binary runs")
}

#[test]
fn futaki_prints_exact_rationals() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["futaki"], &config("cp1_linear"), dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "F0=1/2 F1=0");
    let json = std::fs::read_to_string(dir.path().join("futaki.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["report"]["f0"], "1/2");
    assert_eq!(v["report"]["residual"], 0.0);
}

#[test]
fn ray_writes_csv_and_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["ray", "--resolution", "32"], &config("cp1_linear"), dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("ray.csv")).unwrap();
    let hash = csv.lines().next().unwrap().strip_prefix("# config_hash: ").unwrap().to_string();
    assert_eq!(hash.len(), 16);
    assert_eq!(csv.lines().nth(1).unwrap(), "x1,t,value,level");
    // six levels plus the envelope, 33 x 33 nodes each
    assert_eq!(csv.lines().count(), 2 + 7 * 33 * 33);
    let diag: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("diagnostics.json")).unwrap()).unwrap();
    assert_eq!(diag["config_hash"], hash.as_str());
    assert_eq!(diag["diagnostics"]["uniform_bound"]["violations"], 0);
}

#[test]
fn identical_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let out = run(&["compare", "--resolution", "32"], &config("kinked"), dir.path());
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let out = run(&["ray", "--resolution", "32"], &config("kinked"), dir.path());
        assert_eq!(out.status.code(), Some(0));
    }
    for file in ["compare.csv", "ray.csv"] {
        let x = std::fs::read(a.path().join(file)).unwrap();
        let y = std::fs::read(b.path().join(file)).unwrap();
        assert!(x == y, "{file} differs between identical runs");
    }
    // a different seed changes the draws but not the header format
    let c = tempfile::tempdir().unwrap();
    run(&["compare", "--seed", "8"], &config("kinked"), c.path());
    let x = std::fs::read_to_string(a.path().join("compare.csv")).unwrap();
    let z = std::fs::read_to_string(c.path().join("compare.csv")).unwrap();
    assert_ne!(x.lines().next(), z.lines().next());
    assert_ne!(x.lines().nth(2), z.lines().nth(2));
}

#[test]
fn every_emitted_file_carries_the_hash() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["bounds"][..], &["mass"], &["moments"], &["triangular"]] {
        let cmd = args[0];
        let out = run(&[args, &["--resolution", "64"]].concat(), &config("cp1_linear"), dir.path());
        assert_eq!(out.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let mut seen = 0;
    let mut hashes = std::collections::BTreeSet::new();
    for entry in std::fs::read_dir(dir.path()).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let hash = match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => text.lines().next().unwrap().strip_prefix("# config_hash: ").map(str::to_string),
            Some("json") => serde_json::from_str::<serde_json::Value>(&text).unwrap()["config_hash"]
                .as_str()
                .map(str::to_string),
            _ => None,
        };
        hashes.insert(hash.unwrap_or_else(|| panic!("{} has no config hash", path.display())));
        seen += 1;
    }
    assert_eq!(seen, 8);
    assert_eq!(hashes.len(), 1);
}

#[test]
fn corrupted_weight_table_exits_with_invariant_violation() {
    let dir = tempfile::tempdir().unwrap();
    // linear weights k - alpha on every level, except one raised entry at k = 16
    let mut table = String::from("k,alpha,eta\n");
    for k in 1..=16i64 {
        for a in 0..=k {
            let eta = if k == 16 && a == 16 { 5 } else { k - a };
            table.push_str(&format!("{k},{a},{eta}\n"));
        }
    }
    std::fs::write(dir.path().join("corrupted.csv"), table).unwrap();
    let base = std::fs::read_to_string(config("cp1_linear")).unwrap();
    let start = base.find("[weights]").unwrap();
    let end = base.find("[levels]").unwrap();
    let cfg = format!(
        "{}[weights]\nkind = \"table\"\ntable = \"corrupted.csv\"\n\n{}",
        &base[..start],
        &base[end..]
    );
    let cfg_path = dir.path().join("corrupted.toml");
    std::fs::write(&cfg_path, cfg).unwrap();

    let out = run(&["triangular", "--k", "16"], &cfg_path, &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("support condition"), "{stderr}");
    let record: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/violation.json")).unwrap()).unwrap();
    let first = &record["report"][0];
    assert_eq!(first["k"], 16);
    assert_eq!(first["violations"][0]["alpha"], serde_json::json!([16]));
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "name = \"bad\"\n[polytope]\nvertices = [[0], [1]]\n[weights]\nkind = \"generator\"\n").unwrap();
    assert_eq!(run(&["ray"], &bad, dir.path()).status.code(), Some(1));
    assert_eq!(run(&["ray"], &dir.path().join("missing.toml"), dir.path()).status.code(), Some(1));
    let out = bin().arg("ray").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin().arg("bogus").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn thread_count_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .env("BERGMAN_RAYS_THREADS", "1")
        .args(["futaki", "--config"])
        .arg(config("trivial"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "F0=0 F1=0");
}
