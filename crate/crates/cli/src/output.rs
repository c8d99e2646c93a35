//! Snapshot, time-series and manifest files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use epifv::solver::{Observer, SnapshotSchedule, TimeSeriesRow};
use epifv::{Field, Mesh, SolverConfig, State};
use serde::Serialize;

pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const FAILURE_MARKER: &str = "FAILED";

/// 17 significant digits, enough to read back the same double.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_snapshot(path: &Path, mesh: &Mesh, state: &State) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["x", "y", "u1", "u2", "u3"])?;
    for (k, c) in mesh.cells().iter().enumerate() {
        w.write_record([
            fmt_f64(c.center[0]),
            fmt_f64(c.center[1]),
            fmt_f64(state.fields[0][k]),
            fmt_f64(state.fields[1][k]),
            fmt_f64(state.fields[2][k]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a snapshot back; rows must follow the mesh storage order.
pub fn read_snapshot(path: &Path, mesh: &Mesh) -> Result<State> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["x", "y", "u1", "u2", "u3"] {
        bail!("{}: expected header x,y,u1,u2,u3", path.display());
    }
    let n = mesh.num_cells();
    let mut cols: [Vec<f64>; 3] = Default::default();
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        if k >= n {
            bail!("{}: more rows than the {n} mesh cells", path.display());
        }
        let parse = |j: usize| -> Result<f64> {
            let s = rec.get(j).unwrap_or("");
            s.trim().parse::<f64>().with_context(|| format!("{} line {line}: bad number {s:?}", path.display()))
        };
        let c = mesh.cells()[k].center;
        let (x, y) = (parse(0)?, parse(1)?);
        let tol = 1e-9 * mesh.size();
        if (x - c[0]).abs() > tol || (y - c[1]).abs() > tol {
            bail!("{} line {line}: ({x}, {y}) is not the center of cell {k}", path.display());
        }
        for (i, col) in cols.iter_mut().enumerate() {
            col.push(parse(2 + i)?);
        }
    }
    if cols[0].len() != n {
        bail!("{}: {} rows for {n} mesh cells", path.display(), cols[0].len());
    }
    let [a, b, c] = cols;
    Ok(State::new(Field::new(a)?, Field::new(b)?, Field::new(c)?)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SnapshotEntry {
    pub step: usize,
    pub t: f64,
    pub file: String,
}

/// Run observer that streams the time series and writes snapshots as the
/// run proceeds, so a failed run still leaves everything up to the failure.
pub struct RunWriter<'a> {
    dir: PathBuf,
    mesh: &'a Mesh,
    series: csv::Writer<BufWriter<File>>,
    pub snapshots: Vec<SnapshotEntry>,
    pub last_step: usize,
}

impl<'a> RunWriter<'a> {
    pub fn create(dir: &Path, mesh: &'a Mesh) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for stale in [FAILURE_MARKER, MANIFEST_FILE] {
            let p = dir.join(stale);
            if p.exists() {
                std::fs::remove_file(&p)?;
            }
        }
        let file = File::create(dir.join(TIMESERIES_FILE))?;
        let mut series = csv::Writer::from_writer(BufWriter::new(file));
        series.write_record(["t", "a1", "a2", "a3", "mass1", "mass2", "mass3", "min_u1", "min_u2", "min_u3"])?;
        Ok(Self { dir: dir.to_path_buf(), mesh, series, snapshots: Vec::new(), last_step: 0 })
    }

    fn write_row(&mut self, r: &TimeSeriesRow) -> Result<()> {
        let mut rec = Vec::with_capacity(10);
        rec.push(fmt_f64(r.t));
        rec.extend(r.coefficients.iter().chain(&r.mass).chain(&r.min).map(|&v| fmt_f64(v)));
        self.series.write_record(&rec)?;
        Ok(())
    }

    fn handle(&mut self, state: &State, row: &TimeSeriesRow, snapshot: bool) -> Result<()> {
        self.write_row(row)?;
        if snapshot {
            let file = format!("snapshot_{:06}.csv", state.step);
            write_snapshot(&self.dir.join(&file), self.mesh, state)?;
            self.snapshots.push(SnapshotEntry { step: state.step, t: state.time, file });
        }
        self.last_step = state.step;
        Ok(())
    }

    pub fn finish(mut self) -> Result<Vec<SnapshotEntry>> {
        self.series.flush()?;
        Ok(self.snapshots)
    }
}

impl Observer for RunWriter<'_> {
    fn observe(&mut self, state: &State, row: &TimeSeriesRow, snapshot: bool) -> epifv::Result<()> {
        self.handle(state, row, snapshot).map_err(|e| epifv::Error::Observer(format!("{e:#}")))
    }
}

/// Requested snapshot times plus the final time.
pub fn schedule(times: &[f64], cfg: &SolverConfig) -> SnapshotSchedule {
    let mut t = times.to_vec();
    t.push(cfg.t_end);
    SnapshotSchedule::new(t)
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut f = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}
