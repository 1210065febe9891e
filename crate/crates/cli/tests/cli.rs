use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use radix_topk::{write_batch, write_dataset};
use serde_json::Value;
use tempfile::TempDir;

fn rtk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rtk"))
        .args(args)
        .env_remove("RTK_WORKERS")
        .output()
        .expect("spawn rtk")
}

fn ok(args: &[&str]) -> String {
    let out = rtk(args);
    assert!(
        out.status.success(),
        "rtk {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

#[test]
fn gen_then_topk_verifies() {
    let dir = TempDir::new().unwrap();
    let data = path(&dir, "u.rtk");
    ok(&[
        "gen",
        "uniform",
        "0",
        "1",
        "--n",
        "2^16",
        "--seed",
        "7",
        "-o",
        s(&data),
    ]);
    assert_eq!(std::fs::metadata(&data).unwrap().len(), 13 + 4 * (1 << 16));

    let results = path(&dir, "r.json");
    let report = json(&ok(&[
        "topk",
        s(&data),
        "--k",
        "512",
        "--verify",
        "--grid",
        "3",
        "--out",
        s(&results),
    ]));
    let task = &report["tasks"][0];
    assert_eq!(task["k"], 512);
    assert_eq!(task["verified"], true);
    assert!(task["passes"].as_u64().unwrap() <= 3);
    assert_eq!(report["config"]["engine"]["grid_size"], 3);
    let r = json(&std::fs::read_to_string(&results).unwrap());
    assert_eq!(r[0]["indices"].as_array().unwrap().len(), 512);
}

#[test]
fn checksums_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let a = path(&dir, "a.rtk");
    let b = path(&dir, "b.rtk");
    for p in [&a, &b] {
        ok(&[
            "gen",
            "normal",
            "0",
            "2",
            "--n",
            "5000",
            "--seed",
            "3",
            "-o",
            s(p),
        ]);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let sum = |p: &Path, grid: &str| {
        json(&ok(&["topk", s(p), "--k", "n/4", "--grid", grid]))["tasks"][0]["checksum"].clone()
    };
    assert_eq!(sum(&a, "1"), sum(&b, "4"));
}

#[test]
fn workers_env_overrides_grid() {
    let dir = TempDir::new().unwrap();
    let data = path(&dir, "d.rtk");
    ok(&["gen", "uniform", "--n", "3000", "-o", s(&data)]);
    let out = Command::new(env!("CARGO_BIN_EXE_rtk"))
        .args(["topk", s(&data), "--k", "10", "--grid", "2"])
        .env("RTK_WORKERS", "5")
        .output()
        .unwrap();
    assert!(out.status.success());
    let report = json(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(report["config"]["engine"]["grid_size"], 5);
    assert_eq!(
        report["instrumentation"]["flushes_per_worker"]
            .as_array()
            .unwrap()
            .len(),
        5
    );
}

#[test]
fn batch_from_files_and_container_agree() {
    let dir = TempDir::new().unwrap();
    let mut files = Vec::new();
    let mut tasks = Vec::new();
    for (i, n) in [1023usize, 1024, 1024].into_iter().enumerate() {
        let p = path(&dir, &format!("t{i}.rtk"));
        ok(&[
            "gen",
            "uniform",
            "--n",
            &n.to_string(),
            "--seed",
            &i.to_string(),
            "-o",
            s(&p),
        ]);
        files.push(p);
        tasks.push(n);
    }
    let mut args: Vec<&str> = vec!["topk"];
    args.extend(files.iter().map(|p| s(p)));
    args.extend([
        "--k",
        "100",
        "--verify",
        "--pad",
        "off",
        "--reschedule",
        "off",
    ]);
    let from_files = json(&ok(&args));

    let container = path(&dir, "b.rtkb");
    ok(&[
        "gen",
        "uniform",
        "--lengths",
        "1023,1024,1024",
        "--seed",
        "0",
        "-o",
        s(&container),
    ]);
    let from_container = json(&ok(&["topk", s(&container), "--k", "100", "--verify"]));

    for i in 0..3 {
        assert_eq!(from_files["tasks"][i]["verified"], true);
        assert_eq!(
            from_files["tasks"][i]["checksum"],
            from_container["tasks"][i]["checksum"]
        );
    }
    assert!(from_container["schedule"]["dispatch_rounds"].is_u64());
}

#[test]
fn rejects_nan_and_bad_inputs() {
    let dir = TempDir::new().unwrap();
    let nan = path(&dir, "nan.rtk");
    let mut f = std::fs::File::create(&nan).unwrap();
    write_dataset(&mut f, &[1.0f32, f32::NAN, 3.0]).unwrap();
    drop(f);
    let out = rtk(&["topk", s(&nan), "--k", "1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("NaN at position 1"));

    let good = path(&dir, "g.rtk");
    ok(&["gen", "uniform", "--n", "10", "-o", s(&good)]);
    let out = rtk(&["topk", s(&good), "--k", "11"]);
    assert!(!out.status.success());

    let junk = path(&dir, "junk.rtk");
    std::fs::write(&junk, b"RTK1\x07").unwrap();
    assert!(!rtk(&["topk", s(&junk), "--k", "1"]).status.success());
}

#[test]
fn csv_report_and_u32_container() {
    let dir = TempDir::new().unwrap();
    let container = path(&dir, "u.rtkb");
    let mut f = std::fs::File::create(&container).unwrap();
    let a: Vec<u32> = (0..500).collect();
    let b: Vec<u32> = (0..300).rev().collect();
    write_batch(&mut f, &[&a[..], &b[..]]).unwrap();
    drop(f);
    let csv = ok(&[
        "topk",
        s(&container),
        "--dtype",
        "u32",
        "--k",
        "5,3",
        "--order",
        "smallest",
        "--verify",
        "--format",
        "csv",
    ]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("task,n,k,pivot,checksum"));
    assert!(lines[1].starts_with("0,500,5,4,"));
    assert!(lines[2].starts_with("1,300,3,2,"));
    assert!(lines[1..].iter().all(|l| l.contains(",true,")));
}

#[test]
fn adversarial_scaling_verifies() {
    let dir = TempDir::new().unwrap();
    let data = path(&dir, "adv.rtk");
    ok(&[
        "gen",
        "uniform",
        "128.6",
        "128.7",
        "--n",
        "2^16",
        "-o",
        s(&data),
    ]);
    for mode in ["always", "adaptive"] {
        let report = json(&ok(&[
            "topk",
            s(&data),
            "--k",
            "512",
            "--scale",
            mode,
            "--seed",
            "9",
            "--verify",
        ]));
        assert_eq!(report["tasks"][0]["verified"], true);
        assert!(report["tasks"][0]["scale_index"].is_u64(), "{mode}");
    }
}

#[test]
fn bench_reports_cells_and_errors() {
    let out = ok(&[
        "bench",
        "--n",
        "4096",
        "--k",
        "16,n/2,8192",
        "--batch",
        "1,3",
        "--dist",
        "uniform,zipf",
        "--repeats",
        "2",
        "--verify",
    ]);
    let rows = json(&out);
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 2 * 2 * 3);
    for r in rows {
        if r["k"] == "8192" {
            assert!(r["error"].is_string());
        } else {
            assert_eq!(r["verified"], true, "{r}");
            assert!(r["median_ms"].is_f64());
        }
    }
    let csv = ok(&[
        "bench",
        "--n",
        "2000",
        "--k",
        "n/100",
        "--repeats",
        "1",
        "--format",
        "csv",
        "--dtype",
        "u32",
    ]);
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn ablation_has_eight_verified_variants() {
    let rows = json(&ok(&[
        "ablate",
        "--batch",
        "4",
        "--n",
        "4096",
        "--k",
        "64",
        "--repeats",
        "1",
        "--verify",
        "--grid",
        "2",
    ]));
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r["verified"] == true));
    let checksums: Vec<&Value> = rows.iter().map(|r| &r["checksum"]).collect();
    assert!(checksums.iter().all(|c| *c == checksums[0]));
    let merges = |name: &str| {
        rows.iter().find(|r| r["variant"] == name).unwrap()["global_merges"]
            .as_u64()
            .unwrap()
    };
    assert!(merges("baseline") > merges("full"));
}
