use std::fs;
use std::path::Path;
use std::process::Command;

use comma_ea::report::{data_section, RUN_HEADER, SCAN_HEADER, SWEEP_HEADER, TELEMETRY_HEADER};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_comma-ea"));
    c.env_remove("COMMA_EA_OUT_DIR");
    c
}

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

const RUN_CONFIG: &str = "n = 40\nmu = 5\nlambda = \"ratio 1.2 ceil\"\nseed = 9\nreplicates = 3\nbudget = 3000\ntrackers = [\"g\", \"levels\"]\n";

#[test]
fn run_writes_header_and_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "run.toml", RUN_CONFIG);
    let out = tmp.path().join("out");
    let st = bin().arg("run").arg("--config").arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert!(st.success());
    let text = fs::read_to_string(out.join("runs.csv")).unwrap();
    assert!(text.starts_with("# comma-ea "));
    assert!(text.contains("# seed = 9"));
    assert!(text.contains("# lambda_resolved = 17"));
    let data = data_section(&text);
    let mut lines = data.lines();
    assert_eq!(lines.next(), Some(RUN_HEADER));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 3);
    for (i, r) in rows.iter().enumerate() {
        let cols: Vec<_> = r.split(',').collect();
        assert_eq!(cols.len(), 4);
        assert_eq!(cols[0].parse::<usize>().unwrap(), i);
        cols[1].parse::<u64>().unwrap();
        cols[2].parse::<u64>().unwrap();
        cols[3].parse::<bool>().unwrap();
    }
    let tel = data_section(&fs::read_to_string(out.join("telemetry_0.csv")).unwrap());
    assert_eq!(tel.lines().next(), Some(TELEMETRY_HEADER));
    for r in tel.lines().skip(1) {
        assert_eq!(r.split(',').count(), TELEMETRY_HEADER.split(',').count());
    }
}

#[test]
fn same_config_and_seed_give_identical_data() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "run.toml", RUN_CONFIG);
    let mut outputs = Vec::new();
    for (k, jobs) in ["1", "2"].iter().enumerate() {
        let out = tmp.path().join(format!("o{k}"));
        let st = bin()
            .args(["run", "--jobs", jobs, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(st.success());
        outputs.push(fs::read_to_string(out.join("runs.csv")).unwrap());
    }
    assert_eq!(data_section(&outputs[0]), data_section(&outputs[1]));
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "run.toml", RUN_CONFIG);
    let out = tmp.path().join("o");
    assert!(bin().args(["run", "--seed", "77", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap().success());
    assert!(fs::read_to_string(out.join("runs.csv")).unwrap().contains("# seed = 77"));
}

#[test]
fn env_var_sets_default_output_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "run.toml", RUN_CONFIG);
    let out = tmp.path().join("env_out");
    let st = bin().arg("run").arg("--config").arg(&cfg).env("COMMA_EA_OUT_DIR", &out).status().unwrap();
    assert!(st.success());
    assert!(out.join("runs.csv").exists());
}

#[test]
fn json_format() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "run.toml", RUN_CONFIG);
    let out = tmp.path().join("o");
    assert!(bin().args(["run", "--format", "json", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap().success());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("runs.json")).unwrap()).unwrap();
    assert_eq!(v["runs"].as_array().unwrap().len(), 3);
    assert_eq!(v["seed"], 9);
}

#[test]
fn sweep_csv_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "sweep.toml",
        "n = 40\nmu = 5\nlambda = 14\nreplicates = 3\nbudget = 2000\n[sweep]\nmu_grid = [3, 5]\nratio_grid = [0.8, 1.2]\nrounding = \"nearest\"\n",
    );
    let out = tmp.path().join("o");
    assert!(bin().arg("sweep").arg("--config").arg(&cfg).arg("--out").arg(&out).status().unwrap().success());
    let data = data_section(&fs::read_to_string(out.join("sweep.csv")).unwrap());
    let mut lines = data.lines();
    assert_eq!(lines.next(), Some(SWEEP_HEADER));
    assert_eq!(SWEEP_HEADER, "n,mu,lambda,ratio,replicates,successes,mean_generations,ci_low,ci_high,in_hypothesis");
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 4);
    for r in rows {
        let c: Vec<_> = r.split(',').collect();
        assert_eq!(c.len(), 10);
        assert_eq!(c[0], "40");
        let lo: f64 = c[7].parse().unwrap();
        let hi: f64 = c[8].parse().unwrap();
        assert!(lo <= hi);
        c[9].parse::<bool>().unwrap();
    }
}

#[test]
fn check_suite_writes_reports_and_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let st = bin().args(["check", "--suite", "lemma7,lemma8,thm5"]).arg("--out").arg(&out).status().unwrap();
    assert!(st.success());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("checks.json")).unwrap()).unwrap();
    let reports = v["reports"].as_array().unwrap();
    let ids: std::collections::BTreeSet<_> = reports.iter().map(|r| r["lemma"].as_str().unwrap()).collect();
    assert_eq!(ids.into_iter().collect::<Vec<_>>(), ["lemma7", "lemma8", "thm5"]);
    for r in reports {
        for key in ["lemma", "hypothesis_ok", "parameters", "empirical", "standard_error", "bound", "pass", "samples"] {
            assert!(r.get(key).is_some(), "missing {key}");
        }
        assert_eq!(r["pass"], true);
    }
}

#[test]
fn out_of_hypothesis_checks_do_not_fail_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "s.toml", "suite = [\"lemma25\", \"lemma28\"]\n[samples]\nlemma25 = 3\nlemma28 = 10\n");
    let out = tmp.path().join("o");
    let st = bin().arg("check").arg("--config").arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert!(st.success());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("checks.json")).unwrap()).unwrap();
    assert!(v["reports"].as_array().unwrap().iter().all(|r| r["hypothesis_ok"] == false));
}

#[test]
fn config_errors_are_line_anchored() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bad.toml", "n = 100\nmu = 25\nlambda = 54\nsedd = 1\n");
    let o = bin().arg("run").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 4"), "{err}");
    let cfg = write(tmp.path(), "bad2.toml", "suite = [\"lemma7\", \"lemma99\"]\n");
    let o = bin().arg("check").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lemma99"));
}

#[test]
fn approx_writes_scan_and_convergents() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    assert!(bin().args(["approx", "--mu-max", "50"]).arg("--out").arg(&out).status().unwrap().success());
    let data = data_section(&fs::read_to_string(out.join("scan.csv")).unwrap());
    assert_eq!(data.lines().next(), Some(SCAN_HEADER));
    assert_eq!(data.lines().count(), 51);
    let conv = data_section(&fs::read_to_string(out.join("convergents.csv")).unwrap());
    assert!(conv.lines().nth(1).unwrap().starts_with("0,2,2,1,"));
}

#[test]
fn surrogate_trajectories() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let st = bin()
        .args(["surrogate", "--mu", "20", "--lambda", "55", "--x0", "0", "--steps", "5", "--trials", "2"])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(st.success());
    let data = data_section(&fs::read_to_string(out.join("surrogate.csv")).unwrap());
    assert_eq!(data.lines().count(), 1 + 2 * 6);
    assert!(data.lines().skip(1).all(|l| l.split(',').nth(2) == Some("0")));
}
