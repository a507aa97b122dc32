use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_txconfirm"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no `{key}` in:\n{text}"))
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap()
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

#[test]
fn analyze_paper_configuration() {
    let o = run(&["analyze", "--b", "1750", "--mu", "1.8379e-3", "--lambda", "0.97275"]);
    assert!(o.status.success());
    let f = value(&stdout(&o), "mean_tct_s");
    assert!((f - 568.10).abs() / 568.10 < 0.005, "{f}");
}

#[test]
fn analyze_preset_prints_classes() {
    let o = run(&["analyze", "--preset", "paper"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("work-conserving approximation"));
    assert!(text.contains("H: lambda = 0.90466, mean_tct_s = 562.1"));
    assert!(text.contains("L: lambda = 0.068082, mean_tct_s = 647.0"));
}

#[test]
fn analyze_single_server() {
    let o = run(&["analyze", "--b", "1", "--mu", "1", "--lambda", "0.5"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!((value(&text, "mean_tct_s") - 2.0).abs() < 1e-6);
    assert!((value(&text, "p0") - 0.5).abs() < 1e-12);
    assert_eq!(value(&text, "offered_load"), 0.5);
}

#[test]
fn exit_codes() {
    let unstable = run(&["analyze", "--b", "2", "--mu", "1", "--lambda", "2.5"]);
    assert_eq!(unstable.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&unstable.stderr).contains("unstable"));
    assert_eq!(run(&["analyze", "--lambda", "1"]).status.code(), Some(2));
    assert_eq!(run(&["analyze", "--b", "2", "--nope"]).status.code(), Some(2));
    assert_eq!(run(&["analyze", "--b", "2", "--mu", "-1", "--lambda", "1"]).status.code(), Some(2));
    assert_eq!(
        run(&["analyze", "--b", "2", "--service", "erlang", "--lambda", "1"]).status.code(),
        Some(2)
    );
    let class_unstable = run(&["analyze", "--b", "2", "--mu", "1", "--lambda", "1", "--rates", "1,1.5"]);
    assert_eq!(class_unstable.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&class_unstable.stderr).contains("class 2"));
}

#[test]
fn config_file_with_flag_override() {
    let mut cfg = tempfile::NamedTempFile::new().unwrap();
    writeln!(cfg, "# single server\nb = 1\nmu = 1\nlambda = 0.5").unwrap();
    let path = cfg.path().to_str().unwrap();
    let o = run(&["--config", path, "analyze"]);
    assert!(o.status.success());
    assert!((value(&stdout(&o), "mean_tct_s") - 2.0).abs() < 1e-6);
    let o = run(&["analyze", "--config", path, "--lambda", "0.25"]);
    // 1 + 0.25 * 2 / (2 * 0.75)
    assert!((value(&stdout(&o), "mean_tct_s") - 4.0 / 3.0).abs() < 1e-6);

    let mut bad = tempfile::NamedTempFile::new().unwrap();
    writeln!(bad, "colour = blue").unwrap();
    let o = run(&["--config", bad.path().to_str().unwrap(), "analyze"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn other_service_laws() {
    // deterministic service with b = 1 is M/D/1: 1 + 0.5 / (2 * 0.5) = 1.5
    let o = run(&["analyze", "--service", "det", "--b", "1", "--mu", "1", "--lambda", "0.5"]);
    assert!((value(&stdout(&o), "mean_tct_s") - 1.5).abs() < 1e-6);
    // Erlang-2 with mean 1: E[S^2] = 1.5, so 1 + 0.5 * 1.5 / 1 = 1.75
    let o = run(&[
        "analyze", "--service", "erlang", "--erlang-shape", "2", "--b", "1", "--mu", "1", "--lambda", "0.5",
    ]);
    assert!((value(&stdout(&o), "mean_tct_s") - 1.75).abs() < 1e-6);
    let o = run(&["analyze", "--b", "30", "--service", "det", "--mu", "1", "--lambda", "20", "--precision", "extended"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("precision = extended"));
}

#[test]
fn sweep_single_point() {
    let o = run(&["sweep", "--b", "10", "--mu", "1", "--lambda-start", "5", "--lambda-stop", "5", "--points", "1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "lambda,b,class,mean_tct_s");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("5,10,all,"));
}

#[test]
fn sweep_flags_unstable_points() {
    let o = run(&[
        "sweep", "--mu", "1", "--b-list", "2,4", "--lambda-start", "1", "--lambda-stop", "3", "--points", "3",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(!text.contains('\r'));
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[1], "2,2,all,unstable");
    assert_eq!(rows[2], "3,2,all,unstable");
    assert!(rows[5].starts_with("3,4,all,") && !rows[5].ends_with("unstable"));
}

#[test]
fn sweep_two_class_modes() {
    // total load 3.1 > b = 3 while the high class alone (3.1 * 0.9) is stable
    let o = run(&[
        "sweep", "--mode", "zeta", "--zeta", "9", "--b", "3", "--mu", "1", "--lambda-start", "3.1",
        "--lambda-stop", "3.1", "--points", "1",
    ]);
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert!(rows[0].starts_with("3.1,3,H,") && !rows[0].ends_with("unstable"));
    assert_eq!(rows[1], "3.1,3,L,unstable");

    let o = run(&[
        "sweep", "--mode", "fixed-high", "--lambda-high", "1", "--b", "3", "--mu", "1", "--lambda-start",
        "0.5", "--lambda-stop", "1.5", "--points", "3",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 6);
    let high: Vec<&str> = rows.iter().filter(|r| r.contains(",H,")).map(|r| r.rsplit(',').next().unwrap()).collect();
    assert!(high.windows(2).all(|w| w[0] == w[1]), "{high:?}");
}

#[test]
fn sweep_is_deterministic() {
    let args = [
        "sweep", "--mode", "zeta", "--b-list", "5,20", "--mu", "0.01", "--lambda-start", "0.01",
        "--lambda-stop", "0.2", "--points", "7",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn estimate_csv_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let p1 = dir.path().join("a.csv");
    let p2 = dir.path().join("b.csv");
    for p in [&p1, &p2] {
        let o = run(&[
            "estimate", "--b", "5", "--mu", "1", "--rates", "2,1", "--seed", "4", "--replications", "5",
            "--horizon", "2000", "--warmup", "200", "--out", p.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("class H"));
    }
    let a = std::fs::read(&p1).unwrap();
    assert_eq!(a, std::fs::read(&p2).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("replication,class,mean_tct_s\n0,1,"));
    assert_eq!(text.lines().count(), 1 + 5 * 2);

    let o = run(&["simulate", "--b", "2", "--mu", "1", "--lambda", "3"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn validate_quick_is_seed_free_in_the_analysis() {
    let a = run(&["validate", "--quick", "--seed", "1", "--replications", "10", "--horizon", "20000"]);
    let b = run(&["validate", "--quick", "--seed", "2", "--replications", "10", "--horizon", "20000"]);
    let analytic = |o: &Output| -> Vec<String> {
        stdout(o)
            .lines()
            .filter(|l| l.contains("simulation b="))
            .filter_map(|l| l.split("analytic ").nth(1).map(|s| s.split(',').next().unwrap().to_string()))
            .collect()
    };
    assert_eq!(analytic(&a).len(), 6);
    assert_eq!(analytic(&a), analytic(&b));
    assert_ne!(stdout(&a), stdout(&b));
    assert!(!stdout(&a).contains("table"));
}

#[test]
fn stats_on_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "stats",
        "--blocks",
        &fixture("sample_blocks.csv"),
        "--txs",
        &fixture("sample_txs.csv"),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    for line in [
        "block_generation_time_s,mean,600",
        "block_generation_time_s,variance,60000",
        "block_generation_time_s,median,600",
        "tct_s,mean,1140",
    ] {
        assert!(text.lines().any(|l| l == line), "missing {line}");
    }
    let classes = std::fs::read_to_string(dir.path().join("classes.csv")).unwrap();
    assert!(classes.lines().any(|l| l.starts_with("H,7,600,")));
    assert!(classes.lines().any(|l| l.starts_with("L,3,2400,960000,")));
    assert!(dir.path().join("timeseries.csv").exists());
    assert!(dir.path().join("fees.csv").exists());

    let o = run(&["stats", "--blocks", "/nonexistent.csv", "--txs", &fixture("sample_txs.csv")]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&[
        "stats", "--blocks", &fixture("sample_blocks.csv"), "--txs", &fixture("sample_txs.csv"), "--threshold",
        "lots",
    ]);
    assert_eq!(o.status.code(), Some(2));
    // swapped files fail the header check
    let o = run(&["stats", "--blocks", &fixture("sample_txs.csv"), "--txs", &fixture("sample_blocks.csv")]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn mining_reports_distances() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cdf.csv");
    let o = run(&["mining", "--n", "5700", "--m", "1e7", "--samples", "10000", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(value(&text, "ks_exponential") <= 0.02);
    assert!(value(&text, "exact_sup_distance") <= 1e-3);
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("x,empirical_cdf,exact_cdf,exponential_cdf\n"));
    assert_eq!(csv.lines().count(), 202);

    let o = run(&["mining", "--n", "1", "--m", "1", "--samples", "10000"]);
    assert!(o.status.success());
    let text = stdout(&o).to_lowercase();
    assert!(value(&text, "ks_exponential") > 0.2);
    assert!(!text.contains("pass") && !text.contains("fail"));
    assert_eq!(run(&["mining", "--n", "0", "--m", "1"]).status.code(), Some(2));
}
