use std::fs;
use std::process::Command;

use hyreach_cli::run_main;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hyreach"))
}

fn stats_json(path: &std::path::Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn nav3_tpbfs_reaches_seven_levels() {
    let dir = tempfile::tempdir().unwrap();
    let stats = dir.path().join("stats.json");
    let code = run_main([
        "hyreach", "--model", "nav:3", "--engine", "tpbfs", "--bound", "7", "--T", "10", "--step", "1e-2",
        "--dirs", "box", "--workers", "4", "--out-stats", stats.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let v = stats_json(&stats);
    assert_eq!(v["levels"], 7);
    assert_eq!(v["engine"], "tpbfs");
    assert_eq!(v["total_posts"], v["post_c"].as_u64().unwrap() + v["post_d"].as_u64().unwrap());
}

#[test]
fn circle_bound_zero_region_is_level_zero_only() {
    let dir = tempfile::tempdir().unwrap();
    let region = dir.path().join("region.txt");
    let stats = dir.path().join("stats.json");
    let status = bin()
        .args(["--model", "circle", "--engine", "seq", "--bound", "0", "--step", "1e-2"])
        .args(["--out-region", region.to_str().unwrap(), "--out-stats", stats.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(&region).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(!lines.is_empty());
    for l in &lines {
        let f: Vec<&str> = l.split_whitespace().collect();
        assert_eq!(f[0], "1");
        assert_eq!(f[1], "0");
        assert!(f.len() >= 2 + 2 * 3 && f.len() % 2 == 0);
        assert!(f[2..].iter().all(|x| x.parse::<f64>().unwrap().is_finite()));
    }
    let v = stats_json(&stats);
    assert_eq!(v["post_c"], 1);
    let samples = v["support_samples"].as_u64().unwrap();
    assert_eq!(lines.len() as u64, samples / v["directions"].as_u64().unwrap());
}

#[test]
fn unknown_engine_is_a_flag_error() {
    assert_eq!(run_main(["hyreach", "--model", "circle", "--engine", "nosuch"]), 1);
    let out = bin().args(["--model", "circle", "--engine", "nosuch"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn bad_flags_exit_one() {
    assert_eq!(run_main(["hyreach", "--model", "circle", "--step", "-1"]), 1);
    assert_eq!(run_main(["hyreach", "--model", "circle", "--workers", "0"]), 1);
    assert_eq!(run_main(["hyreach", "--model", "circle", "--project", "0,5"]), 1);
    assert_eq!(run_main(["hyreach", "--model", "circle", "--aggregate", "maybe"]), 1);
    assert_eq!(run_main(["hyreach", "--model", "no/such/file.model"]), 1);
}

#[test]
fn broken_model_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.model");
    fs::write(&path, "vars x\nlocation 1 a\n  flow nonsense\n").unwrap();
    assert_eq!(run_main(["hyreach", "--model", path.to_str().unwrap()]), 2);
    assert_eq!(run_main(["hyreach", "--model", "nav:0"]), 2);
}

#[test]
fn region_files_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for engine in ["seq", "agjh", "tpbfs"] {
        let mut texts = Vec::new();
        for k in 0..2 {
            let region = dir.path().join(format!("{engine}{k}.txt"));
            let code = run_main([
                "hyreach", "--model", "oscillator", "--engine", engine, "--bound", "3", "--step", "1e-2",
                "--workers", "3", "--seed", "5", "--out-region", region.to_str().unwrap(), "--out-stats",
                dir.path().join("s.json").to_str().unwrap(),
            ]);
            assert_eq!(code, 0);
            texts.push(fs::read(&region).unwrap());
        }
        assert_eq!(texts[0], texts[1], "{engine}");
    }
}

#[test]
fn bench_prints_three_engines_per_row() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("bench.json");
    let out = bin()
        .args(["bench", "--models", "circle,nav:3", "--bound", "2", "--step", "1e-2", "--workers", "2"])
        .args(["--out-json", json.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let table = String::from_utf8(out.stdout).unwrap();
    let circle = table.lines().find(|l| l.starts_with("circle")).unwrap();
    assert_eq!(circle.split('|').count(), 4);
    let rows: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    for row in rows.as_array().unwrap() {
        let cells = row["cells"].as_array().unwrap();
        assert_eq!(cells.len(), 3);
        let posts: Vec<u64> = cells.iter().map(|c| c["total_posts"].as_u64().unwrap()).collect();
        assert!(posts.iter().all(|p| *p == posts[0]));
        for c in cells {
            let u = c["utilization"].as_f64().unwrap();
            assert!((0.0..=1.0).contains(&u));
            assert!(c["wall"].as_f64().unwrap() >= 0.0);
        }
    }
}
