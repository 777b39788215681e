use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn kpz(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kpz"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

fn single(dir: &Path, ext: &str) -> PathBuf {
    let found: Vec<PathBuf> = files(dir).into_iter().filter(|p| p.extension().is_some_and(|e| e == ext)).collect();
    assert_eq!(found.len(), 1, "{found:?}");
    found[0].clone()
}

fn cdf_column(path: &Path) -> Vec<(f64, f64)> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(2)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap())
        })
        .collect()
}

#[test]
fn same_seed_gives_identical_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [a.path(), b.path()] {
        let o = kpz(dir, &["simulate-asep", "--t", "20", "--replicas", "30", "--p", "0.2", "--q", "0.8", "--sites", "-1,0,1", "--seed", "5"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let o = kpz(dir, &["tau-moment", "--N", "2", "--t", "1", "--tau", "0.25", "--replicas", "300", "--seed", "5"]);
        assert!(o.status.code().is_some_and(|c| c <= 1));
    }
    let (fa, fb) = (files(a.path()), files(b.path()));
    assert_eq!(fa.len(), 3);
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.file_name(), y.file_name());
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{x:?}");
    }
}

#[test]
fn outputs_carry_the_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let o = kpz(dir.path(), &["simulate-asep", "--t", "5", "--replicas", "4"]);
    assert!(o.status.success());
    let csv = fs::read_to_string(single(dir.path(), "csv")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(single(dir.path(), "json")).unwrap()).unwrap();
    let hash = json["config_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert!(csv.starts_with(&format!("# config_hash={hash} seed=1\n")));
    assert_eq!(csv.lines().nth(1), Some("replica,site,canonical_height"));
    for key in ["seed", "pass"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn config_file_and_flags_resolve_to_the_same_hash() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = a.path().join("run.cfg");
    fs::write(&cfg, "experiment = tw-table\n# comment\ns-min = -3\ns_max = 0 # trailing\nds = 0.5\n").unwrap();
    let from_file = Command::new(env!("CARGO_BIN_EXE_kpz"))
        .args(["tw-table", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(a.path().join("o"))
        .output()
        .unwrap();
    assert!(from_file.status.success(), "{}", String::from_utf8_lossy(&from_file.stderr));
    let from_flag = kpz(&b.path().join("o"), &["tw-table", "--s-max", "0", "--ds", "0.5", "--s-min", "-3"]);
    assert!(from_flag.status.success());
    assert_eq!(files(&a.path().join("o"))[0].file_name(), files(&b.path().join("o"))[0].file_name());
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    let cases: Vec<Vec<&str>> = vec![
        vec!["tw-table", "--which", "gxe"],
        vec!["tw-table", "--n", "forty"],
        vec!["tw-table", "--s-min", "3", "--s-max", "1"],
        vec!["tau-moment", "--N", "2", "--sites", "1,0"],
        vec!["tau-moment", "--N", "4"],
        vec!["simulate-asep", "--p", "0.7", "--q", "0.7"],
        vec!["simulate-she", "--check", "crossover", "--dx", "-0.1", "--replicas", "10"],
        vec!["simulate-polymer", "--dist", "exponential", "--rate", "0.5", "--beta", "1"],
        vec!["compare", "--samples", "/nonexistent", "--table", "/nonexistent"],
        vec!["no-such-command"],
    ];
    for args in cases {
        let o = kpz(dir.path(), &args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    fs::write(&cfg, "experiment = crossover\nt = 1\n").unwrap();
    let o = kpz(dir.path(), &["tw-table", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    fs::write(&cfg, "typo_key = 1\n").unwrap();
    let o = kpz(dir.path(), &["tw-table", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(files(dir.path()).iter().all(|p| p == &cfg), "no outputs on configuration errors");
}

#[test]
fn failed_comparison_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("t.csv");
    let samples = dir.path().join("s.txt");
    // uniform table on [0, 1] against samples bunched at its right end
    fs::write(&table, "s,F\n0,0\n0.5,0.5\n1,1\n").unwrap();
    fs::write(&samples, (0..50).map(|i| format!("{}\n", 0.99 + 0.0001 * i as f64)).collect::<String>()).unwrap();
    let o = kpz(&dir.path().join("o"), &["compare", "--samples", samples.to_str().unwrap(), "--table", table.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    fs::write(&samples, (0..400).map(|i| format!("{}\n", (i as f64 + 0.5) / 400.0)).collect::<String>()).unwrap();
    let o = kpz(&dir.path().join("o"), &["compare", "--samples", samples.to_str().unwrap(), "--table", table.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn tw_table_resolution_agreement_and_cache() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["tw-table", "--which", "gue", "--s-min", "-5", "--s-max", "3", "--ds", "0.25"];
    let o = kpz(a.path(), &[&args[..], &["--n", "40"]].concat());
    assert!(o.status.success());
    let o = kpz(b.path(), &[&args[..], &["--n", "80"]].concat());
    assert!(o.status.success());
    let (fa, fb) = (cdf_column(&single(a.path(), "csv")), cdf_column(&single(b.path(), "csv")));
    assert_eq!(fa.len(), fb.len());
    for ((s, x), (_, y)) in fa.iter().zip(&fb) {
        assert!((x - y).abs() < 1e-8, "s = {s}: {x} vs {y}");
    }
    let again = kpz(a.path(), &[&args[..], &["--n", "40"]].concat());
    assert!(again.status.success());
    assert!(String::from_utf8_lossy(&again.stdout).starts_with("cached"));
}

#[test]
fn degenerate_polymer_passes_only_without_disorder() {
    let dir = tempfile::tempdir().unwrap();
    let o = kpz(dir.path(), &["simulate-polymer", "--beta", "0", "--N-ladder", "8,16", "--replicas", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(single(dir.path(), "json")).unwrap()).unwrap();
    assert_eq!(json["degenerate"], serde_json::Value::Bool(true));
}
