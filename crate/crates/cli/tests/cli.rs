use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fixlab"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_with(sub: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn simulate_writes_the_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("picard.csv");
    let o = run_with("simulate", &config("picard.json"), &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    let last: Vec<&str> = csv.lines().last().unwrap().split(',').collect();
    assert_eq!(last[0], "3");
    assert_eq!(last[3].parse::<f64>().unwrap(), 0.125);
    assert!(String::from_utf8_lossy(&o.stdout).contains("r_N = 1.25e-1"));

    let o = run_with("simulate", &config("ig_upper_witness.json"), &out, &[]);
    assert!(o.status.success());
    let csv = fs::read_to_string(&out).unwrap();
    let r1: f64 = csv.lines().nth(2).unwrap().split(',').nth(3).unwrap().parse().unwrap();
    assert!((r1 - 0.43125).abs() < 1e-15);
}

#[test]
fn csv_goes_to_stdout_without_an_output_path() {
    let o = run(&["simulate", "--config", config("picard.json").to_str().unwrap()]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("n,x_0,e_n,r_n,ln_r_n\n"));
}

#[test]
fn config_errors_exit_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config("picard.json")).unwrap().replace("[0.4]", "[0.0]");
    let cfg = write_config(dir.path(), "bad.json", &text);
    let o = run_with("simulate", &cfg, &dir.path().join("x.csv"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("x0 != x*"));

    let o = run(&["simulate", "--config", "/nonexistent/config.json"]);
    assert_eq!(o.status.code(), Some(1));
    let cfg = write_config(dir.path(), "junk.json", "{ not json");
    assert_eq!(run(&["simulate", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn bound_precondition_failures_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config("ig_lower_counterexample.json")).unwrap().replace("\"c\": 0.45", "\"c\": 0.7");
    let cfg = write_config(dir.path(), "pre.json", &text);
    let o = run_with("bounds", &cfg, &dir.path().join("b.csv"), &[]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("index 0"));
}

#[test]
fn bounds_flag_the_counterexample() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.csv");
    let o = run_with("bounds", &config("ig_lower_counterexample.json"), &out, &["--grid", "9"]);
    assert!(o.status.success());
    let csv = fs::read_to_string(&out).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let col = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];
    assert_eq!(col("sandwich"), "lower-violation");
    assert!((col("oracle_lower").parse::<f64>().unwrap() - 0.1).abs() < 1e-12);
    assert!((col("lower_paper").parse::<f64>().unwrap() - 0.1625).abs() < 1e-15);
}

#[test]
fn probe_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("probe.json");
    let o = run_with("probe", &config("ig_lower_counterexample.json"), &out, &["--samples", "50"]);
    assert_eq!(o.status.code(), Some(3));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let cx = &report["counterexample"];
    assert_eq!(cx["index"], 0);
    assert!((cx["ratio"].as_f64().unwrap() - 0.1).abs() < 1e-15);
    assert_eq!(cx["config"]["roles"]["t1"]["coeff"], -1.0);

    let o = run_with("probe", &config("g_lower.json"), &out, &["--samples", "300"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let o = run_with("probe", &config("g_lower.json"), &out, &["--samples", "0"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn compare_writes_csv_and_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cmp.csv");
    let o = run_with("compare", &config("compare_ig_i.json"), &out, &[]);
    assert!(o.status.success());
    let csv = fs::read_to_string(&out).unwrap();
    let r20: f64 = csv.lines().nth(21).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(r20 < 1e-5 && (r20 - (0.45f64 / 0.89).powi(20)).abs() < 1e-15);
    let verdict: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("cmp.json")).unwrap()).unwrap();
    assert_eq!(verdict["conclusion"], "faster");
    assert_eq!(verdict["theorem"], "IG faster than I");

    let text = fs::read_to_string(config("compare_ig_i.json")).unwrap();
    let moved = text.replacen("[0.4]", "[0.3]", 1);
    let cfg = write_config(dir.path(), "moved.json", &moved);
    assert_eq!(run_with("compare", &cfg, &out, &[]).status.code(), Some(1));
}

#[test]
fn classify_reports_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v.json");
    let o = run_with("classify", &config("classify_harmonic.json"), &out, &[]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["verdicts"][0]["converges_to_zero"], "yes");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for (sub, cfg) in [
        ("simulate", "g_lower.json"),
        ("bounds", "g_lower.json"),
        ("compare", "compare_ig_i.json"),
        ("probe", "g_lower.json"),
    ] {
        let first = dir.path().join(format!("{sub}-1.out"));
        let second = dir.path().join(format!("{sub}-2.out"));
        let extra: &[&str] = if sub == "probe" { &["--samples", "200"] } else { &[] };
        run_with(sub, &config(cfg), &first, extra);
        run_with(sub, &config(cfg), &second, extra);
        assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap(), "{sub}");
    }
}
