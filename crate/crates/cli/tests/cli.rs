use std::path::Path;
use std::process::{Command, Output};

fn ttprp(out_dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ttprp"))
        .args(args)
        .env("TTPRP_OUT_DIR", out_dir)
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
fn solve_writes_trace_and_converges() {
    let dir = tempfile::tempdir().unwrap();
    let o = ttprp(
        dir.path(),
        &["solve", "EX1", "--method", "TT-PRP", "--seed", "7"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary: toml::Table = toml::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["status"].as_str(), Some("converged"));
    let trace = dir.path().join("trace_EX1_TT-PRP_seed7.csv");
    let text = std::fs::read_to_string(trace).unwrap();
    assert!(text.starts_with("# ttprp "));
    assert!(text.contains("# base_seed=7"));
    assert!(text.contains("# stop_tol="));
}

#[test]
fn solve_hits_iteration_cap() {
    let dir = tempfile::tempdir().unwrap();
    let o = ttprp(
        dir.path(),
        &["solve", "EX1", "--max-iters", "1", "--seed", "7"],
    );
    assert_eq!(o.status.code(), Some(1));
    let summary: toml::Table = toml::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["status"].as_str(), Some("iteration_cap"));
}

#[test]
fn solve_from_explicit_point() {
    let dir = tempfile::tempdir().unwrap();
    let o = ttprp(
        dir.path(),
        &[
            "solve",
            "--problem",
            "EX1",
            "--x0",
            "-1.5,0.9",
            "--method",
            "SD",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("trace_EX1_SD_x0.csv").exists());
    let bad = ttprp(dir.path(), &["solve", "EX1", "--x0", "1,2,3"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn unknown_names_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = ttprp(dir.path(), &["solve", "UNKNOWN"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(
        err.contains("UNKNOWN") && err.contains("FDS-1") && err.contains("SLC2-2"),
        "{err}"
    );

    let o = ttprp(dir.path(), &["solve", "EX1", "--method", "Newton"]);
    assert_eq!(o.status.code(), Some(2));
    let o = ttprp(dir.path(), &["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn list_is_machine_readable() {
    let dir = tempfile::tempdir().unwrap();
    let o = ttprp(dir.path(), &["list"]);
    assert_eq!(o.status.code(), Some(0));
    let listing: toml::Table = toml::from_str(&stdout(&o)).unwrap();
    let problems = listing["problem"].as_array().unwrap();
    assert_eq!(problems.len(), 19);
    let fds2 = problems
        .iter()
        .find(|p| p["name"].as_str() == Some("FDS-2"))
        .unwrap();
    assert_eq!(fds2["n"].as_integer(), Some(100));
    assert_eq!(fds2["m"].as_integer(), Some(3));
}

#[test]
fn check_passes_and_filters() {
    let dir = tempfile::tempdir().unwrap();
    let o = ttprp(dir.path(), &["check"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));

    let o = ttprp(dir.path(), &["check", "--filter", "qp"]);
    assert_eq!(o.status.code(), Some(0));
    let report: toml::Table = toml::from_str(&stdout(&o)).unwrap();
    let checks = report["check"].as_array().unwrap();
    assert!(!checks.is_empty());
    assert!(checks
        .iter()
        .all(|c| c["name"].as_str().unwrap().starts_with("qp:")));
}

#[test]
fn check_reports_corrupted_jacobian() {
    let dir = tempfile::tempdir().unwrap();
    let o = ttprp(
        dir.path(),
        &["check", "--inject-fault", "jacobian:FDS-2", "--pretty"],
    );
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    let failed: Vec<&str> = out.lines().filter(|l| l.starts_with("FAIL")).collect();
    assert_eq!(failed.len(), 1, "{out}");
    assert!(failed[0].contains("FDS-2"));
}

#[test]
fn bench_writes_reproducible_report() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "bench",
        "--problem",
        "EX1,MOP5",
        "--starts",
        "4",
        "--seed",
        "11",
        "--workers",
        "2",
    ];
    for d in [&a, &b] {
        let o = ttprp(d.path(), &args);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for f in [
        "results.csv",
        "metrics.csv",
        "profiles.csv",
        "manifest.toml",
    ] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
    let timing = std::fs::read_to_string(a.path().join("wall_times.csv")).unwrap();
    assert!(timing.contains("# platform_dependent=true"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(
        &cfg,
        "problems = [\"EX1\"]\nmethods = [\"SD\", \"TT-PRP\"]\nstarts_per_problem = 3\nbase_seed = 5\n\n[solver]\nmax_iters = 500\n",
    )
    .unwrap();
    let o = ttprp(
        dir.path(),
        &["bench", "--config", cfg.to_str().unwrap(), "--starts", "2"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary: toml::Table = toml::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["runs"].as_integer(), Some(4));
    let manifest = std::fs::read_to_string(dir.path().join("manifest.toml")).unwrap();
    assert!(manifest.contains("base_seed = 5"));
    assert!(manifest.contains("max_iters = 500"));

    std::fs::write(&cfg, "starts_per_problem = \"many\"\n").unwrap();
    let o = ttprp(dir.path(), &["bench", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn profile_from_bench_directory() {
    let dir = tempfile::tempdir().unwrap();
    let o = ttprp(
        dir.path(),
        &["bench", "--problem", "EX1,FDS-1", "--starts", "3"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let input = dir.path().to_str().unwrap().to_string();
    let o = ttprp(
        dir.path(),
        &[
            "profile",
            "--input",
            &input,
            "--measure",
            "iterations,wall_time",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary: toml::Table = toml::from_str(&stdout(&o)).unwrap();
    let rho = summary["rho_at_one"]["iterations"].as_table().unwrap();
    assert_eq!(rho.len(), 4);
    assert!(rho
        .values()
        .all(|v| (0.0..=1.0).contains(&v.as_float().unwrap())));
    let wall = std::fs::read_to_string(dir.path().join("profile_wall_time.csv")).unwrap();
    assert!(wall.contains("# platform_dependent=true"));
    let iters = std::fs::read_to_string(dir.path().join("profile_iterations.csv")).unwrap();
    assert!(!iters.contains("platform_dependent"));

    let o = ttprp(dir.path(), &["profile", "--input", "/nonexistent/dir"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn pareto_export_for_example_problem() {
    let dir = tempfile::tempdir().unwrap();
    let o = ttprp(
        dir.path(),
        &["pareto", "--problem", "EX1", "--starts", "20"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary: toml::Table = toml::from_str(&stdout(&o)).unwrap();
    let entry = &summary["pareto"].as_array().unwrap()[0];
    assert_eq!(entry["rows"].as_integer(), Some(20));
    assert_eq!(entry["converged"].as_integer(), Some(20));
    let csv = std::fs::read_to_string(dir.path().join("pareto_EX1.csv")).unwrap();
    let data: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.len(), 21);
    assert!(data[0].starts_with("method,start,status,x0_1,x0_2,x_1,x_2,phi0_1,phi0_2,phi_1,phi_2"));
}
