//! The work behind each subcommand, returning data plus printable text so
//! the binary stays a thin argument parser.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use epifv::analysis::{
    convergence_study, default_k2_grid, sars_equilibria, stability, turing_scan, ConstantState, ConvergenceTable,
    CosineMode, Equilibria, Manufactured, StabilityReport, StudySetup, TuringReport,
};
use epifv::solver::{run, RunOutput};
use epifv::{ModelParams, Problem};
use serde::Serialize;

use crate::config::{ManufacturedSpec, RunConfig};
use crate::output::{schedule, write_json, RunWriter, SnapshotEntry, FAILURE_MARKER, MANIFEST_FILE, TIMESERIES_FILE};

/// Environment variable naming the root under which runs without an
/// explicit output directory are placed.
pub const OUT_ROOT_ENV: &str = "EPIFV_OUT_ROOT";

/// `--out-dir`, else `[output] dir`, else `<root>/<config stem>` where the
/// root is `$EPIFV_OUT_ROOT` or `out`.
pub fn resolve_out_dir(flag: Option<&Path>, cfg: &RunConfig, config_path: &Path, env_root: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = &cfg.output.dir {
        return p.clone();
    }
    let stem = config_path.file_stem().map(|s| s.to_os_string()).unwrap_or_else(|| "run".into());
    env_root.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("out")).join(stem)
}

#[derive(Debug, Serialize)]
struct Summary {
    picard_iterations: usize,
    max_picard_iterations: usize,
    max_picard_residual: f64,
    cg_iterations: usize,
    min_value: f64,
    negative_roundoff: usize,
    max_l2_sq: [f64; 3],
    gronwall_envelope: Option<[f64; 3]>,
    envelope_violation: Option<(usize, usize)>,
    gradient_sum: [f64; 3],
}

impl From<&RunOutput> for Summary {
    fn from(o: &RunOutput) -> Self {
        let m = &o.monitors;
        Self {
            picard_iterations: o.picard_iterations,
            max_picard_iterations: o.max_picard_iterations,
            max_picard_residual: o.max_picard_residual,
            cg_iterations: o.cg_iterations,
            min_value: m.min_value,
            negative_roundoff: m.negative_roundoff,
            max_l2_sq: m.max_l2_sq,
            gronwall_envelope: m.envelope,
            envelope_violation: m.envelope_violation,
            gradient_sum: m.gradient_sum,
        }
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    status: &'static str,
    error: Option<String>,
    config: &'a RunConfig,
    cells: usize,
    steps_requested: usize,
    steps_completed: usize,
    timeseries: &'static str,
    snapshots: &'a [SnapshotEntry],
    summary: Option<Summary>,
}

#[derive(Debug)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub output: RunOutput,
    pub snapshots: Vec<SnapshotEntry>,
}

impl RunReport {
    pub fn describe(&self) -> String {
        let o = &self.output;
        let m = &o.monitors;
        let mut s = String::new();
        let _ = writeln!(s, "completed {} steps, output in {}", o.steps, self.out_dir.display());
        let _ = writeln!(
            s,
            "picard iterations {} (max {} per step), cg iterations {}",
            o.picard_iterations, o.max_picard_iterations, o.cg_iterations
        );
        let _ = writeln!(s, "minimum value {:.3e}, round-off negatives {}", m.min_value, m.negative_roundoff);
        if let Some((step, species)) = m.envelope_violation {
            let _ = writeln!(s, "warning: L2 norm of species {species} left the Gronwall envelope at step {step}");
        }
        s
    }
}

/// Runs a simulation and writes snapshots, the time series and a manifest
/// into `out_dir`. On solver failure the partial output is kept next to a
/// failure marker and the error is returned.
pub fn cmd_run(cfg: &RunConfig, out_dir: &Path) -> Result<RunReport> {
    cfg.validate()?;
    let mesh = cfg.build_mesh()?;
    let problem = Problem::new(&mesh, cfg.params(), cfg.laws())?;
    let solver = cfg.solver_config();
    let initial = cfg.initial_state(&mesh)?;

    let mut writer = RunWriter::create(out_dir, &mesh)?;
    let result = run(initial, &problem, &solver, &schedule(&cfg.output.snapshots, &solver), &mut writer);
    let steps_completed = writer.last_step;
    let snapshots = writer.finish()?;

    let mut manifest = Manifest {
        status: "ok",
        error: None,
        config: cfg,
        cells: mesh.num_cells(),
        steps_requested: solver.num_steps(),
        steps_completed,
        timeseries: TIMESERIES_FILE,
        snapshots: &snapshots,
        summary: None,
    };
    match result {
        Ok(output) => {
            manifest.summary = Some(Summary::from(&output));
            write_json(&out_dir.join(MANIFEST_FILE), &manifest)?;
            Ok(RunReport { out_dir: out_dir.to_path_buf(), output, snapshots })
        }
        Err(e) => {
            let e = anyhow::Error::new(e);
            let msg = format!("{e:#}");
            manifest.status = "failed";
            manifest.error = Some(msg.clone());
            write_json(&out_dir.join(MANIFEST_FILE), &manifest)?;
            std::fs::write(out_dir.join(FAILURE_MARKER), format!("{msg}\n"))?;
            Err(e.context(format!("run failed; partial output in {}", out_dir.display())))
        }
    }
}

/// Example 2 parameters: `alpha, mu, gamma, A, r`.
pub fn example2_params() -> ModelParams {
    ModelParams::sars(3.8, 0.3, 0.8, 3.0, 0.5)
}

#[derive(Clone, Debug)]
pub struct EquilibriumRow {
    pub params: ModelParams,
    pub outcome: std::result::Result<(Equilibria, [Option<StabilityReport>; 2]), String>,
}

pub fn equilibria_rows(params: &[ModelParams]) -> Vec<EquilibriumRow> {
    params
        .iter()
        .map(|p| {
            let outcome = sars_equilibria(p)
                .map(|eq| {
                    let verdicts = [stability(p, eq.e1).ok(), stability(p, eq.e2).ok()];
                    (eq, verdicts)
                })
                .map_err(|e| e.to_string());
            EquilibriumRow { params: *p, outcome }
        })
        .collect()
}

fn verdict(rep: &StabilityReport) -> String {
    let v = if rep.routh_condition_holds { "stable" } else { "unstable" };
    let check = if rep.verdicts_agree() { "coefficient test agrees" } else { "coefficient test DISAGREES" };
    format!("{v} (max Re lambda = {:.9}; {check})", rep.max_real_part())
}

pub fn format_equilibria(rows: &[EquilibriumRow]) -> String {
    let mut s = String::new();
    for row in rows {
        let p = &row.params;
        let _ = writeln!(
            s,
            "alpha = {:.9}  mu = {:.9}  gamma = {:.9}  A = {:.9}  r = {:.9}",
            p.alpha_incidence, p.mu, p.gamma, p.recruitment, p.treatment
        );
        match &row.outcome {
            Err(e) => {
                let _ = writeln!(s, "  {e}");
            }
            Ok((eq, reports)) => {
                for (k, (point, rep)) in [eq.e1, eq.e2].iter().zip(reports).enumerate() {
                    let status = match (eq.flagged[k], rep) {
                        (true, _) => "flagged point: nonpositive component".to_string(),
                        (false, Some(r)) => verdict(r),
                        (false, None) => "no verdict".to_string(),
                    };
                    let _ = writeln!(s, "  E{} = ({:.9}, {:.9}, {:.9})  {status}", k + 1, point[0], point[1], point[2]);
                }
            }
        }
    }
    s
}

/// The equilibria table for one parameter set, or one row per `alpha` of a sweep.
pub fn cmd_equilibria(base: ModelParams, alpha_sweep: &[f64]) -> String {
    let params: Vec<ModelParams> = if alpha_sweep.is_empty() {
        vec![base]
    } else {
        alpha_sweep.iter().map(|&a| ModelParams { alpha_incidence: a, ..base }).collect()
    };
    format_equilibria(&equilibria_rows(&params))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PointChoice {
    E1,
    E2,
    At([f64; 3]),
}

pub fn resolve_point(p: &ModelParams, choice: PointChoice) -> Result<[f64; 3]> {
    Ok(match choice {
        PointChoice::At(x) => x,
        PointChoice::E1 => sars_equilibria(p)?.e1,
        PointChoice::E2 => sars_equilibria(p)?.e2,
    })
}

/// Stability of the reaction system at a point and a Turing scan of
/// `J - k^2 diag(d)` over `k2_grid`.
pub fn cmd_stability(p: &ModelParams, choice: PointChoice, d: [f64; 3], k2_grid: &[f64]) -> Result<String> {
    let point = resolve_point(p, choice)?;
    let rep = stability(p, point)?;
    let turing = turing_scan(p, point, d, k2_grid)?;
    let mut s = String::new();
    let _ = writeln!(s, "point (u, v, w) = ({:.9}, {:.9}, {:.9})", point[0], point[1], point[2]);
    let _ = writeln!(s, "jacobian:");
    for r in &rep.jacobian {
        let _ = writeln!(s, "  [{:>14.9} {:>14.9} {:>14.9}]", r[0], r[1], r[2]);
    }
    let eig: Vec<String> = rep.eigenvalues.iter().map(|z| format!("{:.9}{:+.9}i", z.re, z.im)).collect();
    let _ = writeln!(s, "eigenvalues: {}", eig.join(", "));
    let _ = writeln!(s, "stability condition: {}", if rep.routh_condition_holds { "holds" } else { "fails" });
    let _ = writeln!(s, "quadratic coefficients positive: {}", rep.coefficients_positive);
    let _ = writeln!(s, "verdicts agree: {}", rep.verdicts_agree());
    let _ = writeln!(s, "diffusion d = ({}, {}, {}), {} wavenumbers", d[0], d[1], d[2], k2_grid.len());
    let _ = writeln!(
        s,
        "turing scan: {} (max Re {:.6e} at k^2 = {:.6e})",
        if turing.unstable { "unstable" } else { "stable" },
        turing.witness.1,
        turing.witness.0
    );
    if let Some(v) = turing.polynomial {
        let agree = if turing.verdicts_agree() == Some(true) { "agrees" } else { "DISAGREES" };
        let _ = writeln!(
            s,
            "reference polynomial (Example 2 set): {v:.12e} -> {} ({agree} with the scan)",
            if v < 0.0 { "unstable" } else { "stable" }
        );
    }
    Ok(s)
}

/// `n` logarithmically spaced values from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    (0..n).map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TuringCell {
    pub d1: f64,
    pub d2: f64,
    pub report: TuringReport,
}

/// Scan and reference-polynomial verdicts on a `(d1, d2)` grid with `d3 = d1`.
pub fn turing_table(
    p: &ModelParams,
    point: [f64; 3],
    d1s: &[f64],
    d2s: &[f64],
    k2_grid: &[f64],
) -> Result<Vec<TuringCell>> {
    let mut cells = Vec::with_capacity(d1s.len() * d2s.len());
    for &d1 in d1s {
        for &d2 in d2s {
            let report = turing_scan(p, point, [d1, d2, d1], k2_grid)?;
            cells.push(TuringCell { d1, d2, report });
        }
    }
    Ok(cells)
}

pub fn format_turing_table(cells: &[TuringCell]) -> String {
    let bad: Vec<&TuringCell> = cells.iter().filter(|c| c.report.verdicts_agree() == Some(false)).collect();
    let unstable = cells.iter().filter(|c| c.report.unstable).count();
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{} grid points, scan unstable at {}, polynomial and scan disagree at {}",
        cells.len(),
        unstable,
        bad.len()
    );
    if !bad.is_empty() {
        let _ =
            writeln!(s, "{:>14} {:>14} {:>16} {:>8} {:>14} {:>14}", "d1", "d2", "polynomial", "scan", "k^2", "max Re");
        for c in bad {
            let r = &c.report;
            let _ = writeln!(
                s,
                "{:>14.6e} {:>14.6e} {:>16.8e} {:>8} {:>14.6e} {:>14.6e}",
                c.d1,
                c.d2,
                r.polynomial.unwrap_or(f64::NAN),
                if r.unstable { "unstable" } else { "stable" },
                r.witness.0,
                r.witness.1
            );
        }
    }
    s
}

/// Default wavenumber grid for a domain of side `length`.
pub fn k2_grid(length: f64) -> Vec<f64> {
    default_k2_grid(length, 64, 200)
}

/// Refinement study against the manufactured solution of the config.
/// Writes `convergence.csv` into `out_dir` when given.
pub fn cmd_convergence(
    cfg: &RunConfig,
    levels: &[usize],
    out_dir: Option<&Path>,
) -> Result<(ConvergenceTable, String)> {
    let Some(spec) = &cfg.manufactured else {
        bail!("the config has no [manufactured] section; a refinement study needs a manufactured solution");
    };
    let (lx, ly) = (cfg.mesh.lx, cfg.mesh.ly);
    let params = cfg.params();
    let laws = cfg.laws();
    let exact: Box<dyn Manufactured> = match spec {
        ManufacturedSpec::Cosine { base, amplitude, .. } => {
            if lx.fract() != 0.0 || ly.fract() != 0.0 {
                bail!("the cosine solution is flux-free only on integer side lengths, got {lx} x {ly}");
            }
            Box::new(CosineMode { base: *base, amplitude: *amplitude, ..CosineMode::new(params, laws, lx, ly) })
        }
        ManufacturedSpec::Constant { values, .. } => Box::new(ConstantState { params, values: *values }),
    };
    let setup = StudySetup {
        params,
        laws,
        lx,
        ly,
        t_end: cfg.time.t_end,
        dt_per_h: spec.dt_per_h(),
        solver: cfg.solver_config(),
    };
    let table = convergence_study(&setup, levels, exact.as_ref())?;

    let mut s = String::new();
    let _ = writeln!(s, "{:>6} {:>12} {:>12} {:>14} {:>8}", "cells", "h", "dt", "L2 error", "order");
    for r in &table.rows {
        let order = r.order.map_or("-".to_string(), |o| format!("{o:.3}"));
        let _ = writeln!(s, "{:>6} {:>12.6e} {:>12.6e} {:>14.6e} {:>8}", r.cells_per_side, r.h, r.dt, r.error, order);
    }
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join("convergence.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["cells", "h", "dt", "error", "order"])?;
        for r in &table.rows {
            let order = r.order.map_or(String::new(), crate::output::fmt_f64);
            w.write_record([
                r.cells_per_side.to_string(),
                crate::output::fmt_f64(r.h),
                crate::output::fmt_f64(r.dt),
                crate::output::fmt_f64(r.error),
                order,
            ])?;
        }
        w.flush()?;
    }
    Ok((table, s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn out_dir_precedence() {
        let cfg: RunConfig = RunConfig::parse(include_str!("../tests/data/small_sir.toml")).unwrap();
        let path = Path::new("configs/small_sir.toml");
        assert_eq!(resolve_out_dir(Some(Path::new("x")), &cfg, path, None), PathBuf::from("x"));
        assert_eq!(resolve_out_dir(None, &cfg, path, Some(Path::new("/r"))), PathBuf::from("/r/small_sir"));
        assert_eq!(resolve_out_dir(None, &cfg, path, None), PathBuf::from("out/small_sir"));
    }

    #[test]
    fn sweep_gives_one_row_per_alpha() {
        let text = cmd_equilibria(example2_params(), &[3.0, 3.8, 4.6]);
        assert_eq!(text.lines().filter(|l| l.starts_with("alpha")).count(), 3);
        // alpha = 3 has no real equilibria, the other two have both
        assert_eq!(text.lines().filter(|l| l.trim_start().starts_with("E1")).count(), 2);
        assert!(text.contains("no real equilibria"));
    }

    #[test]
    fn degenerate_parameters_are_flagged() {
        let text = cmd_equilibria(ModelParams::sars(3.8, 0.3, 0.8, 0.0, 0.0), &[]);
        assert_eq!(text.matches("flagged point").count(), 2, "{text}");
    }

    #[test]
    fn negative_discriminant_is_reported() {
        let text = cmd_equilibria(ModelParams::sars(1.0, 0.3, 0.7, 1.0, 1.0), &[]);
        assert!(text.contains("no real equilibria"), "{text}");
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-3, 1e2, 20);
        assert_eq!(g.len(), 20);
        assert!((g[0] - 1e-3).abs() < 1e-18 && (g[19] - 1e2).abs() < 1e-10);
    }
}
