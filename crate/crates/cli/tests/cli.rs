use std::path::Path;
use std::process::{Command, Output};

fn svyknn(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svyknn"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("SVYKNN_OUT")
        .env_remove("WINE_DATASET")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn help_lists_subcommands_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let o = svyknn(&["--help"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for word in [
        "estimate",
        "diagnose-c4",
        "diagnose-c9",
        "study",
        "bounds",
        "--config",
        "--out",
        "--seed",
        "--preset",
        "--threads",
    ] {
        assert!(text.contains(word), "help lacks {word}:\n{text}");
    }
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["--bogus"][..],
        &["frobnicate"],
        &["study", "c5"],
        &["bounds", "--seed", "x"],
    ] {
        let o = svyknn(args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn bounds_table_in_two_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let o = svyknn(&["bounds", "--d", "2"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let value = |prefix: &str| -> f64 {
        let line = text.lines().find(|l| l.starts_with(prefix)).unwrap();
        line.split('=').nth(1).unwrap().trim().parse().unwrap()
    };
    assert!((value("V_2") - std::f64::consts::PI).abs() < 1e-9);
    // 2^4 (1 + √2)² / π
    let c2 = 16.0 * (1.0 + 2f64.sqrt()).powi(2) / std::f64::consts::PI;
    assert!((value("c_2") - c2).abs() < 1e-8);
    assert!((c2 - 29.6827).abs() < 2e-3);
    assert!(dir.path().join("bounds.csv").is_file());
    assert!(dir.path().join("manifest.json").is_file());
}

#[test]
fn consistency_study_is_byte_identical_across_runs_and_threads() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let args = ["study", "consistency", "--preset", "desk", "--seed", "1"];
    let oa = svyknn(&args, a.path());
    assert_eq!(oa.status.code(), Some(0), "{}", stderr(&oa));
    assert_eq!(svyknn(&args, b.path()).status.code(), Some(0));
    let mut single = args.to_vec();
    single.extend(["--threads", "1"]);
    assert_eq!(svyknn(&single, c.path()).status.code(), Some(0));
    for file in ["results.csv", "grid.csv"] {
        let first = std::fs::read(a.path().join(file)).unwrap();
        assert!(!first.is_empty());
        assert_eq!(first, std::fs::read(b.path().join(file)).unwrap(), "{file}");
        assert_eq!(
            first,
            std::fs::read(c.path().join(file)).unwrap(),
            "{file} with one thread"
        );
    }
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 1);
    assert_eq!(manifest["config"]["replicates"], 200);
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn manifest_config_reproduces_the_run() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let o = svyknn(
        &["study", "c4", "--seed", "9", "--sizes", "50,100,200"],
        a.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let config_path = b.path().join("saved.toml");
    std::fs::copy(a.path().join("config.toml"), &config_path).unwrap();
    let o = svyknn(
        &["study", "c4", "--config", config_path.to_str().unwrap()],
        b.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        std::fs::read(a.path().join("results.csv")).unwrap(),
        std::fs::read(b.path().join("results.csv")).unwrap()
    );
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "replicates = 3\nsizes = [50, 100]\nseed = 4\n").unwrap();
    let out = dir.path().join("out");
    let o = svyknn(
        &[
            "study",
            "consistency",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            "8",
        ],
        &out,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["seed"], 8);
    assert_eq!(manifest["config"]["replicates"], 3);
    assert_eq!(manifest["config"]["sizes"], serde_json::json!([50, 100]));
}

#[test]
fn wine_without_dataset_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let o = svyknn(&["study", "wine"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("winequality-white.csv"),
        "{}",
        stderr(&o)
    );

    let o = svyknn(
        &["study", "wine", "--dataset", "/nonexistent/wine.csv"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("winequality-white.csv"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn runtime_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "replicats = 3\n").unwrap();
    let o = svyknn(
        &["study", "c4", "--config", cfg.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    let o = svyknn(&["study", "c9", "--preset", "paper"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn estimate_matches_hand_computation() {
    let dir = tempfile::tempdir().unwrap();
    let sample = dir.path().join("s.csv");
    std::fs::write(
        &sample,
        "x,y,pi\n0.1,1,0.5\n0.2,2,0.5\n0.5,3,0.25\n0.9,4,0.5\n",
    )
    .unwrap();
    let pop = dir.path().join("p.csv");
    std::fs::write(&pop, "x,y\n0.1,1\n0.2,2\n0.5,3\n0.9,4\n0.3,9\n").unwrap();
    let o = svyknn(
        &[
            "estimate",
            "--sample",
            sample.to_str().unwrap(),
            "--population",
            pop.to_str().unwrap(),
            "--at",
            "0.8",
            "--k",
            "2",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("estimates.csv")).unwrap();
    let row: Vec<f64> = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    // Neighbors 0.9 (weight 2) and 0.5 (weight 4).
    assert!((row[3] - 20.0 / 6.0).abs() < 1e-12);
    assert!((row[4] - 3.5).abs() < 1e-12);
}

#[test]
fn diagnostics_write_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = svyknn(
        &[
            "diagnose-c4",
            "--population-size",
            "200",
            "--design",
            "srswor",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let c4 = std::fs::read_to_string(dir.path().join("c4.csv")).unwrap();
    assert_eq!(c4.lines().count(), 52);

    let o = svyknn(&["diagnose-c9", "--population-size", "8"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let pairs = std::fs::read_to_string(dir.path().join("c9_pairs.csv")).unwrap();
    assert_eq!(pairs.lines().count(), 1 + 64);
}
