//! The implicit finite-volume scheme.
//!
//! Each time step freezes the diffusion coefficients at the time-level-n
//! total masses and then solves the three coupled cell equations with a
//! fixed-point iteration whose inner problems are linear, symmetric
//! positive definite M-matrices.

mod assemble;
mod initial;
mod run;
mod step;
mod translate;

pub use assemble::{assemble_species_system, laplacian, nonlocal_argument};
pub use initial::{example1_initial, example2_random_initial, project_cells, project_initial, unit_uniform, Example1};
pub use run::{run, GronwallEnvelope, History, Monitors, Observer, RunOutput, SnapshotSchedule, TimeSeriesRow};
pub use step::{discrete_residual, step};
pub use translate::{translate_diagnostics, TranslateKind, TranslateRow};

use crate::error::{Error, Result};
use crate::linalg::{SolveReport, SparseMatrix};
use crate::mesh::{Field, Mesh};
use crate::model::{DiffusionLaw, ModelParams};

/// Susceptible, infected and recovered densities at time level `step`.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub fields: [Field; 3],
    pub time: f64,
    pub step: usize,
}

impl State {
    pub fn new(u1: Field, u2: Field, u3: Field) -> Result<Self> {
        if u1.len() != u2.len() || u1.len() != u3.len() {
            return Err(Error::SizeMismatch { expected: u1.len(), found: u2.len().max(u3.len()) });
        }
        Ok(Self { fields: [u1, u2, u3], time: 0.0, step: 0 })
    }

    pub fn zeros(n: usize) -> Self {
        Self { fields: [Field::zeros(n), Field::zeros(n), Field::zeros(n)], time: 0.0, step: 0 }
    }

    pub fn min(&self) -> f64 {
        self.fields.iter().map(Field::min).fold(f64::INFINITY, f64::min)
    }
}

/// Prescribed right-hand side added to species equations, used by
/// manufactured-solution studies. Species are numbered 0, 1, 2.
pub trait SourceTerm: Sync {
    fn source(&self, species: usize, t: f64, x: [f64; 3]) -> f64;
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    pub picard_tol: f64,
    pub picard_max: usize,
    /// Initial damping factor of the fixed-point update, in (0, 1].
    pub damping: f64,
    pub cg_tol: f64,
    pub cg_max: usize,
    /// Allowed ratio of the measured squared L2 norms over the a priori
    /// envelope before the monitor flags a violation.
    pub gronwall_factor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 0.005,
            t_end: 0.5,
            picard_tol: 1e-8,
            picard_max: 200,
            damping: 1.0,
            cg_tol: 1e-10,
            cg_max: 10_000,
            gronwall_factor: 1.0 + 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self { dt, t_end, ..Self::default() }
    }

    /// Smallest `N` with `N dt >= t_end`, ignoring round-off in the ratio.
    pub fn num_steps(&self) -> usize {
        let ratio = self.t_end / self.dt;
        let n = ratio.round();
        if (ratio - n).abs() <= 1e-9 * n.max(1.0) {
            n as usize
        } else {
            ratio.ceil() as usize
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt = {}", self.dt));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end = {}", self.t_end));
        }
        if !(self.picard_tol > 0.0 && self.cg_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if self.picard_max == 0 || self.cg_max == 0 {
            return bad("iteration limits must be positive".into());
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad(format!("damping {} outside (0, 1]", self.damping));
        }
        if !(self.gronwall_factor >= 1.0) {
            return bad(format!("gronwall factor {}", self.gronwall_factor));
        }
        Ok(())
    }
}

/// Evidence trail of one implicit step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepReport {
    pub picard_iterations: usize,
    /// Largest relative change of the last fixed-point update.
    pub picard_residual: f64,
    /// Damping in force when the iteration stopped.
    pub damping: f64,
    /// Last linear solve of each species.
    pub linear: [SolveReport; 3],
    pub cg_iterations: usize,
    /// Diffusion coefficients `a_i` used in this step.
    pub coefficients: [f64; 3],
    /// Cells whose value landed in `(-1e-12, 0)`.
    pub negative_roundoff: usize,
}

/// Everything that stays fixed across a simulation.
pub struct Problem<'a> {
    pub mesh: &'a Mesh,
    pub params: ModelParams,
    pub laws: [DiffusionLaw; 3],
    pub source: Option<&'a dyn SourceTerm>,
    laplacian: SparseMatrix,
}

impl<'a> Problem<'a> {
    pub fn new(mesh: &'a Mesh, params: ModelParams, laws: [DiffusionLaw; 3]) -> Result<Self> {
        params.validate()?;
        for law in &laws {
            law.validate()?;
        }
        Ok(Self { mesh, params, laws, source: None, laplacian: laplacian(mesh) })
    }

    pub fn with_source(mut self, source: &'a dyn SourceTerm) -> Self {
        self.source = Some(source);
        self
    }

    pub(crate) fn laplacian(&self) -> &SparseMatrix {
        &self.laplacian
    }

    /// Diffusion coefficients frozen from the given state.
    pub fn coefficients(&self, state: &State) -> Result<[f64; 3]> {
        let mut a = [0.0; 3];
        for (i, ai) in a.iter_mut().enumerate() {
            let s = nonlocal_argument(self.mesh, &state.fields[i])?;
            *ai = self.laws[i].eval(s);
            if !(*ai > 0.0 && ai.is_finite()) {
                return Err(Error::DegenerateDiffusion { species: i + 1, value: *ai });
            }
        }
        Ok(a)
    }
}
