//! Mesh refinement studies against manufactured solutions.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::mesh::{Field, Mesh};
use crate::model::{reaction_rates, DiffusionLaw, ModelParams};
use crate::solver::{
    project_initial, run, Observer, Problem, SnapshotSchedule, SolverConfig, SourceTerm, State, TimeSeriesRow,
};

/// An exact solution together with the source terms that make it one.
pub trait Manufactured: SourceTerm {
    fn exact(&self, species: usize, t: f64, x: [f64; 3]) -> f64;
}

/// A spatially constant steady state held in place by constant sources.
/// The scheme reproduces it exactly on any mesh.
#[derive(Clone, Debug)]
pub struct ConstantState {
    pub params: ModelParams,
    pub values: [f64; 3],
}

impl SourceTerm for ConstantState {
    fn source(&self, species: usize, _t: f64, _x: [f64; 3]) -> f64 {
        let [a, b, c] = self.values;
        -reaction_rates(&self.params, a, b, c, a, b)[species]
    }
}

impl Manufactured for ConstantState {
    fn exact(&self, species: usize, _t: f64, _x: [f64; 3]) -> f64 {
        self.values[species]
    }
}

/// `u_i = base + amplitude cos(pi x) cos(pi y) e^{-t}` for every species.
///
/// Satisfies the zero-flux condition on `[0, lx] x [0, ly]` for integer
/// `lx`, `ly`. With `phi = cos(pi x) cos(pi y)`, `du/dt = -amplitude phi e^{-t}`
/// and `lap u = -2 pi^2 amplitude phi e^{-t}`, so
/// `f_i = -amplitude phi e^{-t} (1 - 2 pi^2 a_i(M(t))) - R_i(u)` where
/// `M(t) = base lx ly + amplitude e^{-t} sin(pi lx) sin(pi ly) / pi^2`.
#[derive(Clone, Debug)]
pub struct CosineMode {
    pub params: ModelParams,
    pub laws: [DiffusionLaw; 3],
    pub lx: f64,
    pub ly: f64,
    pub base: f64,
    pub amplitude: f64,
}

impl CosineMode {
    pub fn new(params: ModelParams, laws: [DiffusionLaw; 3], lx: f64, ly: f64) -> Self {
        Self { params, laws, lx, ly, base: 2.0, amplitude: 1.0 }
    }

    fn mass(&self, t: f64) -> f64 {
        self.base * self.lx * self.ly
            + self.amplitude * (-t).exp() * (PI * self.lx).sin() * (PI * self.ly).sin() / (PI * PI)
    }

    fn value(&self, t: f64, x: [f64; 3]) -> f64 {
        self.base + self.amplitude * (PI * x[0]).cos() * (PI * x[1]).cos() * (-t).exp()
    }
}

impl SourceTerm for CosineMode {
    fn source(&self, species: usize, t: f64, x: [f64; 3]) -> f64 {
        let mode = self.amplitude * (PI * x[0]).cos() * (PI * x[1]).cos() * (-t).exp();
        let u = self.base + mode;
        let a = self.laws[species].eval(self.mass(t));
        let r = reaction_rates(&self.params, u, u, u, u, u)[species];
        -mode + a * 2.0 * PI * PI * mode - r
    }
}

impl Manufactured for CosineMode {
    fn exact(&self, _species: usize, t: f64, x: [f64; 3]) -> f64 {
        self.value(t, x)
    }
}

/// Fixed data of a refinement study; level `n` uses an `n x n` grid and
/// `dt = dt_per_h * lx / n`.
#[derive(Clone, Debug)]
pub struct StudySetup {
    pub params: ModelParams,
    pub laws: [DiffusionLaw; 3],
    pub lx: f64,
    pub ly: f64,
    pub t_end: f64,
    pub dt_per_h: f64,
    pub solver: SolverConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub cells_per_side: usize,
    pub h: f64,
    pub dt: f64,
    /// `L2(Q_T)` error, or the difference to the next finer level for
    /// self-convergence.
    pub error: f64,
    /// Observed order against the previous row.
    pub order: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn errors_strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].error < w[0].error)
    }

    pub fn finest_order(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.order)
    }

    fn fill_orders(&mut self) {
        for k in 1..self.rows.len() {
            let (a, b) = (&self.rows[k - 1], &self.rows[k]);
            self.rows[k].order = (a.error > 0.0 && b.error > 0.0).then(|| (a.error / b.error).ln() / (a.h / b.h).ln());
        }
    }
}

struct ErrorAccumulator<'a> {
    mesh: &'a Mesh,
    exact: &'a dyn Manufactured,
    dt: f64,
    sum: f64,
}

impl Observer for ErrorAccumulator<'_> {
    fn observe(&mut self, state: &State, _: &TimeSeriesRow, _: bool) -> Result<()> {
        if state.step == 0 {
            return Ok(());
        }
        for (k, c) in self.mesh.cells().iter().enumerate() {
            for i in 0..3 {
                let e = state.fields[i][k] - self.exact.exact(i, state.time, c.center);
                self.sum += self.dt * c.measure * e * e;
            }
        }
        Ok(())
    }
}

fn level_config(setup: &StudySetup, n: usize) -> (f64, SolverConfig) {
    let h = setup.lx / n as f64;
    let cfg = SolverConfig { dt: setup.dt_per_h * h, t_end: setup.t_end, ..setup.solver.clone() };
    (h, cfg)
}

/// Runs every level against `exact` and reports the space-time `L2` error
/// summed over the three species.
pub fn convergence_study(setup: &StudySetup, levels: &[usize], exact: &dyn Manufactured) -> Result<ConvergenceTable> {
    if levels.len() < 3 {
        return Err(Error::InsufficientLevels { needed: 3, got: levels.len() });
    }
    let mut table = ConvergenceTable { rows: Vec::with_capacity(levels.len()) };
    for &n in levels {
        let mesh = Mesh::cartesian(n, n, setup.lx, setup.ly)?;
        let problem = Problem::new(&mesh, setup.params, setup.laws)?.with_source(exact);
        let (h, cfg) = level_config(setup, n);
        let fields: Vec<Field> =
            (0..3).map(|i| project_initial(&mesh, |x| exact.exact(i, 0.0, x))).collect::<Result<_>>()?;
        let [u1, u2, u3]: [Field; 3] = fields.try_into().expect("three species");
        let mut acc = ErrorAccumulator { mesh: &mesh, exact, dt: cfg.dt, sum: 0.0 };
        run(State::new(u1, u2, u3)?, &problem, &cfg, &SnapshotSchedule::default(), &mut acc)?;
        table.rows.push(ConvergenceRow { cells_per_side: n, h, dt: cfg.dt, error: acc.sum.sqrt(), order: None });
    }
    table.fill_orders();
    Ok(table)
}

/// Averages a field on a `2n x 2n` grid down to the `n x n` grid.
fn restrict(fine: &Field, n: usize) -> Vec<f64> {
    let f = fine.values();
    let nf = 2 * n;
    let mut out = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            let at = |ii: usize, jj: usize| f[jj * nf + ii];
            out[j * n + i] =
                0.25 * (at(2 * i, 2 * j) + at(2 * i + 1, 2 * j) + at(2 * i, 2 * j + 1) + at(2 * i + 1, 2 * j + 1));
        }
    }
    out
}

/// Without an exact solution: the final-time `L2` difference between each
/// level and the next finer one. Levels must double.
pub fn self_convergence(
    setup: &StudySetup,
    levels: &[usize],
    initial: &dyn Fn(&Mesh) -> Result<State>,
) -> Result<ConvergenceTable> {
    if levels.len() < 3 {
        return Err(Error::InsufficientLevels { needed: 3, got: levels.len() });
    }
    if levels.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(Error::InvalidParameter("self-convergence levels must double".into()));
    }
    let mut finals = Vec::with_capacity(levels.len());
    for &n in levels {
        let mesh = Mesh::cartesian(n, n, setup.lx, setup.ly)?;
        let problem = Problem::new(&mesh, setup.params, setup.laws)?;
        let (_, cfg) = level_config(setup, n);
        let out = run(initial(&mesh)?, &problem, &cfg, &SnapshotSchedule::default(), &mut ())?;
        finals.push(out.final_state);
    }
    let mut table = ConvergenceTable { rows: Vec::with_capacity(levels.len() - 1) };
    for k in 0..levels.len() - 1 {
        let n = levels[k];
        let (h, cfg) = level_config(setup, n);
        let cell = (setup.lx / n as f64) * (setup.ly / n as f64);
        let mut sq = 0.0;
        for i in 0..3 {
            let coarse = finals[k].fields[i].values();
            let fine = restrict(&finals[k + 1].fields[i], n);
            sq += coarse.iter().zip(&fine).map(|(a, b)| cell * (a - b) * (a - b)).sum::<f64>();
        }
        table.rows.push(ConvergenceRow { cells_per_side: n, h, dt: cfg.dt, error: sq.sqrt(), order: None });
    }
    table.fill_orders();
    Ok(table)
}
