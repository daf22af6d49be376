use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_infousage"));
    cmd.env_remove("INFOUSAGE_SEED");
    cmd
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(String::from)
        .collect()
}

fn golden(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{name}.header"));
    fs::read_to_string(path).unwrap().trim_end().to_string()
}

#[test]
fn column_sets_match_golden_headers() {
    let dir = tempfile::tempdir().unwrap();
    let experiments: &[(&str, &[&str])] = &[
        ("figure1", &["figure1"]),
        ("figure2", &["figure2"]),
        ("figure3", &["figure3"]),
        ("bounds-table", &["bounds-table"]),
        ("multistep", &["multistep", "multistep_linear", "multistep_audit"]),
        ("pvalue", &["pvalue"]),
        ("classify", &["classify"]),
        ("maxinfo", &["maxinfo"]),
        ("prop3-sandwich", &["prop3-sandwich"]),
    ];
    for (experiment, files) in experiments {
        let o = run(&[experiment, "--reps", "20"], dir.path());
        assert!(o.status.success(), "{experiment}: {}", stderr(&o));
        for file in *files {
            let path = dir.path().join(format!("{file}.csv"));
            let text = fs::read_to_string(&path).unwrap();
            assert!(!text.contains('\r'), "{file}: CRLF found");
            assert!(text.contains("# seed = 1\n") && text.contains("# replications = 20\n"), "{file}");
            let lines = data_lines(&path);
            assert_eq!(lines[0], golden(file), "{file}");
            let width = lines[0].split(',').count();
            assert!(lines.len() > 1, "{file}: no rows");
            assert!(lines[1..].iter().all(|l| l.split(',').count() == width), "{file}: ragged rows");
        }
    }
}

#[test]
fn figure1_defaults_give_nine_grid_points() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["figure1", "--reps", "30"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let lines = data_lines(&dir.path().join("figure1.csv"));
    let mus: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(mus, ["1", "1.375", "1.75", "2.125", "2.5", "2.875", "3.25", "3.625", "4"]);
}

#[test]
fn same_seed_gives_byte_identical_artifacts() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        for fmt in ["csv", "json"] {
            let o = run(&["figure1", "--reps", "50", "--seed", "9", "--svg", "--format", fmt], dir.path());
            assert!(o.status.success(), "{}", stderr(&o));
        }
    }
    for file in ["figure1.csv", "figure1.json", "figure1.svg"] {
        let (x, y) = (fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap());
        assert!(!x.is_empty());
        assert_eq!(x, y, "{file} differs between runs");
    }
    let c = tempfile::tempdir().unwrap();
    run(&["figure1", "--reps", "50", "--seed", "10"], c.path());
    assert_ne!(fs::read(a.path().join("figure1.csv")).unwrap(), fs::read(c.path().join("figure1.csv")).unwrap());
}

#[test]
fn artifacts_embed_the_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["maxinfo", "--reps", "40", "--seed", "4", "--format", "json", "--svg"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("maxinfo.json")).unwrap()).unwrap();
    assert_eq!(doc["config"]["seed"], 4);
    assert_eq!(doc["config"]["replications"], 40);
    assert_eq!(doc["config"]["params"]["m"], 100.0);
    assert_eq!(doc["tables"][0]["columns"][0], "mu");
    assert!(doc["checks"].as_array().is_some_and(|c| !c.is_empty()));
    let svg = fs::read_to_string(dir.path().join("maxinfo.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("<desc>") && svg.contains("&quot;seed&quot;:4"));
}

#[test]
fn seed_precedence_env_config_flag() {
    let dir = tempfile::tempdir().unwrap();
    let seed_of = |extra: &[&str], env: Option<&str>| {
        let mut cmd = bin();
        cmd.args(["pvalue", "--reps", "10", "--out"]).arg(dir.path()).args(extra);
        if let Some(v) = env {
            cmd.env("INFOUSAGE_SEED", v);
        }
        let o = cmd.output().unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        let text = fs::read_to_string(dir.path().join("pvalue.csv")).unwrap();
        text.lines().find_map(|l| l.strip_prefix("# seed = ")).unwrap().to_string()
    };
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "seed = 7\n").unwrap();
    let cfg_s = cfg.to_str().unwrap();
    assert_eq!(seed_of(&[], None), "1");
    assert_eq!(seed_of(&[], Some("5")), "5");
    assert_eq!(seed_of(&["--config", cfg_s], Some("5")), "7");
    assert_eq!(seed_of(&["--config", cfg_s, "--seed", "9"], Some("5")), "9");
}

#[test]
fn config_file_sets_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fig.toml");
    fs::write(&cfg, "experiment = \"figure1\"\nreplications = 25\nmu_max = 2\npoints = 3\nemit_svg = true\n").unwrap();
    let o = run(&["figure1", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("figure1.csv")).unwrap();
    assert!(text.contains("# replications = 25\n") && text.contains("# mu_max = 2\n"));
    assert_eq!(data_lines(&dir.path().join("figure1.csv")).len(), 4);
    assert!(dir.path().join("figure1.svg").exists());
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["figure9"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("figure9"));
    assert_eq!(run(&["figure1", "--bogus"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["figure1", "--format", "xml"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["figure1", "--reps", "0"], dir.path()).status.code(), Some(2));

    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "m = 100\nwidth = 3\n").unwrap();
    let o = run(&["figure1", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("width"), "{}", stderr(&o));

    fs::write(&cfg, "m = \"many\"\n").unwrap();
    let o = run(&["figure1", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`m`"), "{}", stderr(&o));

    let o = bin().args(["figure1", "--out"]).arg(dir.path()).env("INFOUSAGE_SEED", "x").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.toml");
    assert_eq!(run(&["figure1", "--config", missing.to_str().unwrap()], dir.path()).status.code(), Some(3));
    let cfg = dir.path().join("broken.toml");
    fs::write(&cfg, "seed = = 3\n").unwrap();
    assert_eq!(run(&["figure1", "--config", cfg.to_str().unwrap()], dir.path()).status.code(), Some(3));
}

#[test]
fn unwritable_output_fails_before_simulating() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "not a directory").unwrap();
    let t = Instant::now();
    // Default replications would take several seconds to simulate.
    let o = run(&["bounds-table"], &blocker.join("sub"));
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("filesystem"));
    assert!(t.elapsed() < Duration::from_secs(3));
}

#[test]
fn failed_checks_exit_5_only_with_check() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["pvalue", "--reps", "20"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
    let o = run(&["pvalue", "--reps", "20", "--check"], dir.path());
    assert_eq!(o.status.code(), Some(5));
    let o = run(&["classify", "--reps", "500", "--check"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn help_lists_experiments_and_defaults() {
    let o = bin().arg("--help").output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    for name in ["figure1", "figure2", "figure3", "bounds-table", "multistep", "pvalue", "classify", "maxinfo", "prop3-sandwich"] {
        assert!(text.contains(name), "{name} missing from help");
    }
    assert!(text.contains("[default: 1000]") && text.contains("INFOUSAGE_SEED"));
}
