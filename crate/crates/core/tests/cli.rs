use std::fs;
use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_metaevolve");

fn metaevolve(args: &[&str]) -> (i32, String) {
    let out = Command::new(BIN).args(args).output().expect("binary runs");
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap_or(-1), text)
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.toml");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const SMALL: &str = r#"
[bench]
algorithms = ["de", "ga"]
problems = ["C01", "C13"]
runs = 3
max_fe = 3000
population = 20
"#;

#[test]
fn bench_run_is_reproducible_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let outs = ["a", "b"].map(|d| dir.path().join(d));
    for out in &outs {
        let (code, text) = metaevolve(&["bench", "run", "--config", &config, "--out", out.to_str().unwrap()]);
        assert_eq!(code, 0, "{text}");
    }
    for file in ["table_minv.csv", "table_minv.md", "plusminus.csv", "summaries.csv"] {
        let a = fs::read(outs[0].join(file)).unwrap();
        let b = fs::read(outs[1].join(file)).unwrap();
        assert_eq!(a, b, "{file} differs");
    }

    // reporting alone reproduces the same tables
    let first = fs::read(outs[0].join("table_minv.csv")).unwrap();
    let (code, text) = metaevolve(&["bench", "report", "--config", &config, "--out", outs[0].to_str().unwrap()]);
    assert_eq!(code, 0, "{text}");
    assert_eq!(fs::read(outs[0].join("table_minv.csv")).unwrap(), first);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out = dir.path().join("o");
    let (code, text) = metaevolve(&[
        "bench", "run", "--config", &config, "--out", out.to_str().unwrap(), "--runs", "2", "--seed", "40",
        "--max-fe", "1000", "--jobs", "1",
    ]);
    assert_eq!(code, 0, "{text}");
    assert!(out.join("runs/de/C01/41.jsonl").exists());
    assert!(!out.join("runs/de/C01/42.jsonl").exists());
    assert!(fs::read_to_string(out.join("table_minv.md")).unwrap().contains("MaxFE = 1000"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "[bench]\nruns = \"many\"\n");
    assert_eq!(metaevolve(&["bench", "run", "--config", &bad]).0, 1);
    assert_eq!(metaevolve(&["bench", "run", "--runs", "1", "--out", dir.path().to_str().unwrap()]).0, 1);
    assert_eq!(metaevolve(&["frobnicate"]).0, 1);
    assert_eq!(metaevolve(&["solve", "--problem", "C42"]).0, 1);

    // DE needs four members, GA only two: the DE cells fail, the rest finish
    let partial = write_config(dir.path(), &SMALL.replace("population = 20", "population = 3"));
    let out = dir.path().join("partial");
    let (code, text) = metaevolve(&["bench", "run", "--config", &partial, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 2, "{text}");
    assert!(out.join("runs/ga/C13/3.jsonl").exists());
    assert!(out.join("table_minv.csv").exists());
}

#[test]
fn solve_and_oracle_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, text) = metaevolve(&[
        "solve", "--problem", "sphere-ring", "--algorithm", "rule:de_best_1_bin", "--max-fe", "2000", "--out", out,
    ]);
    assert_eq!(code, 0, "{text}");
    assert!(dir.path().join("runs/rule-de_best_1_bin/sphere-ring/1.jsonl").exists());

    let (code, text) = metaevolve(&["oracle-check", "--points", "10"]);
    assert_eq!(code, 0, "{text}");
    assert_eq!(text.lines().filter(|l| l.ends_with(" ok")).count(), 18);
}

#[test]
fn meta_train_with_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = dir.path().join("reply.txt");
    fs::write(
        &fixture,
        "Try this:\n```rule\nF = 0.5;\nCR = 0.9;\nv = r1 + F * (r2 - r3);\noffspring = bincross(x, clamp(v), CR);\n```\n",
    )
    .unwrap();
    let config = write_config(
        dir.path(),
        "[meta]\niterations = 1\nrules_per_iteration = 1\nsuite_size = 1\ninner_budget = 600\npopulation = 10\n",
    );
    let out = dir.path().join("meta");
    let (code, text) = metaevolve(&[
        "meta", "train", "--config", &config, "--out", out.to_str().unwrap(), "--fixture", fixture.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{text}");
    assert!(out.join("archive.json").exists());
    assert!(out.join("transcripts/0.txt").exists() || out.join("transcripts/1.txt").exists());

    // without fixtures an endpoint is mandatory
    let (code, _) = metaevolve(&["meta", "train", "--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 1);

    // the trained archive deploys as a benchmark algorithm
    let archive = format!("archive:{}", out.join("archive.json").display());
    let (code, text) = metaevolve(&[
        "solve", "--problem", "C01", "--algorithm", &archive, "--max-fe", "1000", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{text}");
    assert!(text.contains("llmea on C01"));
}
