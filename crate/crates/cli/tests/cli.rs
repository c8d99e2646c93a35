use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use epifv_cli::commands::{cmd_convergence, cmd_run};
use epifv_cli::config::{InitialSpec, RunConfig};
use epifv_cli::output::read_snapshot;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_epifv"));
    c.env_remove("EPIFV_OUT_ROOT");
    c
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn small_sir() -> String {
    std::fs::read_to_string(data("small_sir.toml")).unwrap()
}

#[test]
fn run_writes_series_snapshots_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = bin().arg("run").arg(data("small_sir.toml")).arg("--out-dir").arg(&out).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("completed 10 steps"));

    let rows = csv_rows(&out.join("timeseries.csv"));
    assert_eq!(rows[0].join(","), "t,a1,a2,a3,mass1,mass2,mass3,min_u1,min_u2,min_u3");
    assert_eq!(rows.len(), 12);
    for name in ["snapshot_000000.csv", "snapshot_000005.csv", "snapshot_000010.csv"] {
        assert!(out.join(name).exists(), "{name}");
    }
    assert!(!out.join("FAILED").exists());

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "ok");
    assert_eq!(manifest["steps_completed"], 10);
    assert_eq!(manifest["config"]["model"]["alpha"], 2.0);
    assert!(manifest["summary"]["gradient_sum"][1].as_f64().unwrap().is_finite());
}

#[test]
fn snapshots_read_back_exactly() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = RunConfig::parse(&small_sir()).unwrap();
    let report = cmd_run(&cfg, tmp.path()).unwrap();
    let mesh = cfg.build_mesh().unwrap();
    let last = report.snapshots.last().unwrap();
    assert_eq!(last.step, 10);
    let back = read_snapshot(&tmp.path().join(&last.file), &mesh).unwrap();
    assert_eq!(back.fields, report.output.final_state.fields);
}

#[test]
fn file_preset_restarts_from_a_snapshot() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = RunConfig::parse(&small_sir()).unwrap();
    let first = cmd_run(&cfg, &tmp.path().join("a")).unwrap();
    let snap = tmp.path().join("a").join(&first.snapshots.last().unwrap().file);
    let mut again = cfg.clone();
    again.initial = InitialSpec::File { path: snap };
    let mesh = cfg.build_mesh().unwrap();
    assert_eq!(again.initial_state(&mesh).unwrap().fields, first.output.final_state.fields);
}

#[test]
fn zero_data_gives_zero_snapshots() {
    let tmp = tempfile::tempdir().unwrap();
    let text = small_sir().replace(
        "preset = \"example1\"\nsharpness = 20.0\namplitude = 5.0",
        "preset = \"constant\"\nvalues = [0.0, 0.0, 0.0]",
    );
    let report = cmd_run(&RunConfig::parse(&text).unwrap(), tmp.path()).unwrap();
    for s in &report.snapshots {
        for row in csv_rows(&tmp.path().join(&s.file)).iter().skip(1) {
            for v in &row[2..] {
                assert_eq!(v.parse::<f64>().unwrap(), 0.0);
            }
        }
    }
}

#[test]
fn mass_dependent_coefficients_change_in_time() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = RunConfig::parse(&small_sir()).unwrap();
    cmd_run(&cfg, tmp.path()).unwrap();
    let rows = csv_rows(&tmp.path().join("timeseries.csv"));
    let a2: Vec<f64> = rows[1..].iter().map(|r| r[2].parse().unwrap()).collect();
    let a1: Vec<f64> = rows[1..].iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(a2.windows(2).all(|w| w[0] != w[1]), "{a2:?}");
    assert!(a1.iter().all(|&a| a == 0.1));
}

#[test]
fn failed_run_leaves_marker_and_partial_output() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!("{}\n[solver]\npicard_tol = 1e-14\npicard_max = 1\ndamping = 1.0\ncg_tol = 1e-10\ncg_max = 1000\ngronwall_factor = 1.0\n", small_sir());
    let cfg = write_config(tmp.path(), "bad.toml", &text);
    let out = tmp.path().join("out");
    let o = bin().arg("run").arg(&cfg).arg("--out-dir").arg(&out).output().unwrap();
    assert!(!o.status.success());
    assert!(stderr(&o).contains("step 1 failed"), "{}", stderr(&o));
    assert!(out.join("FAILED").exists());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "failed");
    assert!(manifest["error"].as_str().unwrap().contains("fixed-point"));
    // the initial level made it to disk
    assert_eq!(csv_rows(&out.join("timeseries.csv")).len(), 2);
    assert!(out.join("snapshot_000000.csv").exists());
}

fn random_config(dir: &Path) -> PathBuf {
    let text = r#"
[model]
variant = "sars"
alpha = 3.8
mu = 0.3
gamma = 0.8
recruitment = 3.0
treatment = 0.5

[mesh]
nx = 16
ny = 16

[time]
dt = 0.025
t_end = 0.25

[diffusion.1]
law = "constant"
value = 0.1

[diffusion.2]
law = "constant"
value = 0.0001

[diffusion.3]
law = "constant"
value = 0.1

[initial]
preset = "example2-random"
center = [4.010906415, 1.178843705, 4.810249881]
amplitude = [0.001, 0.001, 0.001]
"#;
    write_config(dir, "random.toml", text)
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn same_seed_same_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = random_config(tmp.path());
    let run = |seed: &str, out: &str| {
        let o =
            bin().arg("run").arg(&cfg).args(["--seed", seed, "--out-dir"]).arg(tmp.path().join(out)).output().unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        dir_bytes(&tmp.path().join(out))
    };
    let a = run("11", "a");
    let b = run("11", "b");
    let c = run("12", "c");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn random_preset_without_seed_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = random_config(tmp.path());
    let o = bin().arg("run").arg(&cfg).arg("--out-dir").arg(tmp.path().join("o")).output().unwrap();
    assert!(!o.status.success());
    assert!(stderr(&o).contains("seed"), "{}", stderr(&o));
    let o = bin().arg("run").arg(data("small_sir.toml")).args(["--seed", "3"]).output().unwrap();
    assert!(!o.status.success());
    assert!(stderr(&o).contains("example2-random"), "{}", stderr(&o));
}

#[test]
fn output_root_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin().arg("run").arg(data("small_sir.toml")).env("EPIFV_OUT_ROOT", tmp.path()).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(tmp.path().join("small_sir").join("manifest.json").exists());
}

#[test]
fn syntax_error_reports_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "broken.toml", &small_sir().replace("nx = 12", "nx = twelve"));
    let o = bin().arg("run").arg(&cfg).output().unwrap();
    assert!(!o.status.success());
    assert!(stderr(&o).contains("line 8"), "{}", stderr(&o));
}

#[test]
fn equilibria_command() {
    let o = bin().arg("equilibria").output().unwrap();
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("E1 = (7.217163762, 0.304409883, 2.478426355)  unstable"), "{text}");
    assert!(text.contains("E2 = (4.010906414, 1.178843705, 4.810249881)  stable"), "{text}");

    let o = bin().args(["equilibria", "--sweep-alpha", "3.0,3.8,4.6"]).output().unwrap();
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("alpha")).count(), 3);

    let o = bin().args(["equilibria", "-A", "0", "-r", "0"]).output().unwrap();
    assert_eq!(stdout(&o).matches("flagged point").count(), 2);
}

#[test]
fn stability_command() {
    let o = bin().args(["stability", "--d1", "10", "--d2", "1e-4", "--d3", "10"]).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("stability condition: holds"));
    assert!(text.contains("turing scan: unstable"));
    assert!(text.contains("-> unstable (agrees with the scan)"), "{text}");

    let o = bin().args(["stability", "--point", "e1"]).output().unwrap();
    assert!(stdout(&o).contains("stability condition: fails"));

    let o = bin().args(["stability", "--point", "0,0,0"]).output().unwrap();
    assert!(!o.status.success());
}

#[test]
fn convergence_command() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin()
        .arg("convergence")
        .arg(repo_config("manufactured.toml"))
        .args(["--levels", "8,16,32", "--out-dir"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&tmp.path().join("convergence.csv"));
    assert_eq!(rows.len(), 4);
    let errs: Vec<f64> = rows[1..].iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");

    let o = bin().arg("convergence").arg(data("small_sir.toml")).output().unwrap();
    assert!(!o.status.success());
    assert!(stderr(&o).contains("[manufactured]"));
}

#[test]
fn constant_manufactured_state_is_exact() {
    let text = format!(
        "{}\n[manufactured]\nkind = \"constant\"\nvalues = [1.5, 0.7, 2.0]\n",
        small_sir().replace("law = \"truncated-linear\"\nmax = 1.0\nmin = 0.01", "law = \"constant\"\nvalue = 0.5")
    );
    let cfg = RunConfig::parse(&text).unwrap();
    let (table, _) = cmd_convergence(&cfg, &[4, 8, 16], None).unwrap();
    for r in &table.rows {
        assert!(r.error < 1e-13, "{r:?}");
    }
}

#[test]
fn example1_at_desk_scale() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = RunConfig::load(&repo_config("example1.toml")).unwrap();
    let report = cmd_run(&cfg, tmp.path()).unwrap();
    assert_eq!(csv_rows(&tmp.path().join("timeseries.csv")).len(), 102);
    assert!(report.output.monitors.min_value >= -1e-12);
    // infected spread out of the pockets
    let series = &report.output.series;
    let first = &series[0];
    let last = series.last().unwrap();
    assert!(last.max[1] < first.max[1]);
    assert!(last.mass[2] > 0.0);
}
