use std::collections::BTreeSet;

use super::{nonlocal_argument, step, Problem, SolverConfig, State};
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Times at which full snapshots are requested.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SnapshotSchedule {
    pub times: Vec<f64>,
}

impl SnapshotSchedule {
    pub fn new(times: Vec<f64>) -> Self {
        Self { times }
    }

    /// Step index of each scheduled time: the first `n` with `n dt >= t`,
    /// capped at the final step.
    pub fn steps(&self, cfg: &SolverConfig) -> BTreeSet<usize> {
        let last = cfg.num_steps();
        self.times
            .iter()
            .map(|&t| {
                let n = (t / cfg.dt - 1e-9).ceil().max(0.0) as usize;
                n.min(last)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeriesRow {
    pub t: f64,
    /// `a_i` evaluated at the total mass of this time level.
    pub coefficients: [f64; 3],
    pub mass: [f64; 3],
    pub min: [f64; 3],
    pub max: [f64; 3],
}

pub trait Observer {
    fn observe(&mut self, state: &State, row: &TimeSeriesRow, snapshot: bool) -> Result<()>;
}

impl Observer for () {
    fn observe(&mut self, _: &State, _: &TimeSeriesRow, _: bool) -> Result<()> {
        Ok(())
    }
}

/// Keeps every time level, for post-processing such as translate norms.
#[derive(Clone, Debug, Default)]
pub struct History {
    pub states: Vec<State>,
}

impl Observer for History {
    fn observe(&mut self, state: &State, _: &TimeSeriesRow, _: bool) -> Result<()> {
        self.states.push(state.clone());
        Ok(())
    }
}

/// A priori bound on `||u_i^n||^2` obtained by testing each equation with
/// `u_i^{n+1}` and applying the discrete Gronwall argument step by step.
///
/// For nonnegative solutions of the source-free scheme:
///
/// * `(1 - dt [A > 0]) E1' = E1 + dt A^2 |Omega|`
/// * `(1 - 2 dt (alpha - gamma - mu)) E2' = E2`
/// * `(1 - dt gamma - dt [r > 0] + 2 dt mu [SARS]) E3' = E3 + dt gamma E2 + dt r^2 |Omega|`
#[derive(Clone, Debug, PartialEq)]
pub struct GronwallEnvelope {
    bound: [f64; 3],
    params: ModelParams,
    domain: f64,
}

impl GronwallEnvelope {
    pub fn new(params: ModelParams, domain_measure: f64, initial_sq: [f64; 3]) -> Self {
        Self { bound: initial_sq, params, domain: domain_measure }
    }

    pub fn bound(&self) -> [f64; 3] {
        self.bound
    }

    /// Advances one step. Returns `false` once `dt` is too large for the
    /// recursion to be defined; the bound is then infinite.
    pub fn advance(&mut self, dt: f64) -> bool {
        let p = &self.params;
        let sars = p.is_sars();
        let [e1, e2, e3] = self.bound;
        let a = if sars { p.recruitment } else { 0.0 };
        let r = if sars { p.treatment } else { 0.0 };
        let d1 = 1.0 - if a > 0.0 { dt } else { 0.0 };
        let d2 = 1.0 - 2.0 * dt * (p.alpha_incidence - p.gamma - p.mu);
        let d3 = 1.0 - dt * p.gamma - if r > 0.0 { dt } else { 0.0 } + if sars { 2.0 * dt * p.mu } else { 0.0 };
        if d1 <= 0.0 || d2 <= 0.0 || d3 <= 0.0 {
            self.bound = [f64::INFINITY; 3];
            return false;
        }
        self.bound =
            [(e1 + dt * a * a * self.domain) / d1, e2 / d2, (e3 + dt * p.gamma * e2 + dt * r * r * self.domain) / d3];
        true
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Monitors {
    /// `max_n ||u_i^n||^2` in the discrete L2 norm.
    pub max_l2_sq: [f64; 3],
    /// Envelope at the final step, `None` when a source term is present.
    pub envelope: Option<[f64; 3]>,
    /// First `(step, species)` where the measured norm exceeded
    /// `gronwall_factor` times the envelope.
    pub envelope_violation: Option<(usize, usize)>,
    /// `sum_n dt sum_sigma tau |u_L^{n+1} - u_K^{n+1}|^2` per species.
    pub gradient_sum: [f64; 3],
    pub min_value: f64,
    pub negative_roundoff: usize,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub final_state: State,
    pub series: Vec<TimeSeriesRow>,
    pub monitors: Monitors,
    pub steps: usize,
    pub picard_iterations: usize,
    pub max_picard_iterations: usize,
    pub max_picard_residual: f64,
    pub cg_iterations: usize,
}

pub(crate) fn l2_sq(problem: &Problem<'_>, values: &[f64]) -> f64 {
    problem.mesh.cells().iter().zip(values).map(|(c, u)| c.measure * u * u).sum()
}

fn row(problem: &Problem<'_>, state: &State) -> Result<TimeSeriesRow> {
    let mut r = TimeSeriesRow { t: state.time, coefficients: [0.0; 3], mass: [0.0; 3], min: [0.0; 3], max: [0.0; 3] };
    for i in 0..3 {
        let f = &state.fields[i];
        r.mass[i] = nonlocal_argument(problem.mesh, f)?;
        r.coefficients[i] = problem.laws[i].eval(r.mass[i]);
        r.min[i] = f.min();
        r.max[i] = f.max();
    }
    Ok(r)
}

/// Advances `initial` through `cfg.num_steps()` implicit steps, handing each
/// time level (including the initial one) to `observer`.
pub fn run(
    initial: State,
    problem: &Problem<'_>,
    cfg: &SolverConfig,
    schedule: &SnapshotSchedule,
    observer: &mut dyn Observer,
) -> Result<RunOutput> {
    cfg.validate()?;
    for f in &initial.fields {
        problem.mesh.check_field(f)?;
    }
    let total = cfg.num_steps();
    let snaps = schedule.steps(cfg);

    let initial_sq: [f64; 3] = std::array::from_fn(|i| l2_sq(problem, initial.fields[i].values()));
    let mut envelope = problem
        .source
        .is_none()
        .then(|| GronwallEnvelope::new(problem.params, problem.mesh.domain_measure(), initial_sq));
    let mut monitors = Monitors {
        max_l2_sq: initial_sq,
        envelope: envelope.as_ref().map(GronwallEnvelope::bound),
        min_value: initial.min(),
        ..Default::default()
    };
    let mut out = RunOutput {
        final_state: initial.clone(),
        series: Vec::with_capacity(total + 1),
        monitors: Monitors::default(),
        steps: 0,
        picard_iterations: 0,
        max_picard_iterations: 0,
        max_picard_residual: 0.0,
        cg_iterations: 0,
    };

    let first = row(problem, &initial)?;
    observer.observe(&initial, &first, snaps.contains(&0))?;
    out.series.push(first);

    let mut state = initial;
    for n in 0..total {
        let (next, report) =
            step(&state, problem, cfg).map_err(|e| Error::Step { step: n + 1, source: Box::new(e) })?;
        out.picard_iterations += report.picard_iterations;
        out.max_picard_iterations = out.max_picard_iterations.max(report.picard_iterations);
        out.max_picard_residual = out.max_picard_residual.max(report.picard_residual);
        out.cg_iterations += report.cg_iterations;
        monitors.negative_roundoff += report.negative_roundoff;
        monitors.min_value = monitors.min_value.min(next.min());

        if let Some(env) = envelope.as_mut() {
            env.advance(cfg.dt);
            monitors.envelope = Some(env.bound());
        }
        for i in 0..3 {
            let u = next.fields[i].values();
            let sq = l2_sq(problem, u);
            monitors.max_l2_sq[i] = monitors.max_l2_sq[i].max(sq);
            if let Some(bound) = monitors.envelope {
                if sq > cfg.gronwall_factor * bound[i] && monitors.envelope_violation.is_none() {
                    monitors.envelope_violation = Some((n + 1, i + 1));
                }
            }
            let jumps: f64 = problem
                .mesh
                .interfaces()
                .iter()
                .map(|f| {
                    let d = u[f.cells.1] - u[f.cells.0];
                    f.transmissibility() * d * d
                })
                .sum();
            monitors.gradient_sum[i] += cfg.dt * jumps;
        }

        let r = row(problem, &next)?;
        observer.observe(&next, &r, snaps.contains(&(n + 1)))?;
        out.series.push(r);
        out.steps = n + 1;
        state = next;
    }
    out.final_state = state;
    out.monitors = monitors;
    Ok(out)
}
