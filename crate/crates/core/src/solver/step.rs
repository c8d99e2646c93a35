use super::{Problem, SolverConfig, State, StepReport};
use crate::error::{Error, Result};
use crate::linalg::{cg_solve_from, SolveReport};
use crate::mesh::Field;
use crate::model::{incidence, reaction_rates, treatment};

const ROUNDOFF: f64 = -1e-12;

/// Advances `state` by one implicit step.
///
/// One fixed-point sweep solves the recovered, infected and susceptible
/// equations in that order, each with the freshest iterates available.
/// Inside a sweep the nonlinear terms are frozen at the previous iterate in
/// a form that keeps every inner matrix an M-matrix:
///
/// * the loss `sigma(u1, u2, u3)` of the susceptible equation becomes
///   `u1 * alpha u2 / (u1 + u2 + u3)` with the fraction lagged,
/// * the gain `sigma(u1^n, u2, u3)` of the infected equation is lagged
///   entirely into the right-hand side,
/// * the treatment `H(u2)` becomes `u2 * r / u2_prev` in the infected
///   equation and `H(u2_prev)` in the recovered one.
///
/// At a fixed point each of these equals the exact term, so a converged
/// iteration solves the implicit scheme itself.
pub fn step(state: &State, problem: &Problem<'_>, cfg: &SolverConfig) -> Result<(State, StepReport)> {
    let mesh = problem.mesh;
    let n = mesh.num_cells();
    for f in &state.fields {
        mesh.check_field(f)?;
    }
    let p = &problem.params;
    let dt = cfg.dt;
    let sars = p.is_sars();
    let coefficients = problem.coefficients(state)?;
    let next_step = state.step + 1;
    let t_next = next_step as f64 * dt;

    let meas: Vec<f64> = mesh.cells().iter().map(|c| c.measure).collect();
    let old = [state.fields[0].values(), state.fields[1].values(), state.fields[2].values()];

    // fixed right-hand side parts: m(K) u^n / dt + sources
    let mut base_rhs: [Vec<f64>; 3] = std::array::from_fn(|i| (0..n).map(|k| meas[k] * old[i][k] / dt).collect());
    if let Some(src) = problem.source {
        for (i, rhs) in base_rhs.iter_mut().enumerate() {
            for (k, c) in mesh.cells().iter().enumerate() {
                rhs[k] += c.measure * src.source(i, t_next, c.center);
            }
        }
    }
    for k in 0..n {
        base_rhs[2][k] += meas[k] * p.gamma * old[1][k];
        if sars {
            base_rhs[0][k] += meas[k] * p.recruitment;
        }
    }

    let mut report = StepReport { coefficients, damping: cfg.damping, ..Default::default() };
    let mut cur: [Vec<f64>; 3] = std::array::from_fn(|i| old[i].to_vec());
    let mut omega = cfg.damping;
    let mut prev_change = f64::INFINITY;
    let mut shift = vec![0.0; n];
    let mut rhs = vec![0.0; n];

    let solve =
        |species: usize, shift: &[f64], rhs: &[f64], guess: &[f64], report: &mut StepReport| -> Result<Vec<f64>> {
            let a = problem.laplacian().scaled_plus_diagonal(coefficients[species], shift);
            let (mut x, rep) = cg_solve_from(&a, rhs, guess.to_vec(), cfg.cg_tol, cfg.cg_max)?;
            rebalance(&mut x, shift, rhs);
            report.cg_iterations += rep.iterations;
            report.linear[species] = SolveReport { history: Vec::new(), ..rep };
            Ok(x)
        };

    if !sars {
        // the recovered equation only sees time-level-n data
        for k in 0..n {
            shift[k] = meas[k] / dt;
        }
        cur[2] = solve(2, &shift, &base_rhs[2], &cur[2], &mut report)?;
    }

    for iter in 1..=cfg.picard_max {
        let mut change = 0.0f64;

        if sars {
            for k in 0..n {
                shift[k] = meas[k] / dt + meas[k] * p.mu;
                rhs[k] = base_rhs[2][k] + meas[k] * treatment(cur[1][k], p.treatment);
            }
            let fresh = solve(2, &shift, &rhs, &cur[2], &mut report)?;
            change = change.max(relax(&mut cur[2], fresh, omega, old[2]));
        }

        for k in 0..n {
            let (u2, u3) = (cur[1][k], cur[2][k]);
            let h_rate = if sars && u2 > 0.0 { p.treatment / u2 } else { 0.0 };
            shift[k] = meas[k] / dt + meas[k] * (p.gamma + p.mu + h_rate);
            rhs[k] = base_rhs[1][k] + meas[k] * incidence(old[0][k], u2, u3, p.alpha_incidence);
        }
        let fresh = solve(1, &shift, &rhs, &cur[1], &mut report)?;
        change = change.max(relax(&mut cur[1], fresh, omega, old[1]));

        for k in 0..n {
            let (u1, u2, u3) = (cur[0][k], cur[1][k], cur[2][k]);
            let loss_rate = if u1 > 0.0 {
                let total = u1 + u2.max(0.0) + u3.max(0.0);
                p.alpha_incidence * u2.max(0.0) / total
            } else {
                0.0
            };
            shift[k] = meas[k] / dt + meas[k] * (p.mu + loss_rate);
        }
        let fresh = solve(0, &shift, &base_rhs[0], &cur[0], &mut report)?;
        change = change.max(relax(&mut cur[0], fresh, omega, old[0]));

        report.picard_iterations = iter;
        report.picard_residual = change;
        report.damping = omega;
        if change <= cfg.picard_tol {
            let fields: [Field; 3] = cur.map(Field::new).map(|f| f.expect("finite iterate"));
            report.negative_roundoff =
                fields.iter().flat_map(|f| f.values()).filter(|&&v| v < 0.0 && v > ROUNDOFF).count();
            let next = State { fields, time: t_next, step: next_step };
            return Ok((next, report));
        }
        if !change.is_finite() {
            break;
        }
        if iter >= cfg.picard_max / 2 && change >= prev_change {
            omega *= 0.5;
        }
        prev_change = change;
    }
    Err(Error::Picard(Box::new(report)))
}

/// The flux part of every row sums to zero over the mesh, so the exact
/// solution satisfies `sum_K shift_K x_K = sum_K rhs_K`. An inexact linear
/// solve misses this balance by the sum of its residual, which over many
/// steps shows up as mass drift. Rescaling restores it without touching
/// signs or zeros; the factor differs from one at the level of the linear
/// tolerance, anything larger is left alone.
fn rebalance(x: &mut [f64], shift: &[f64], rhs: &[f64]) {
    let have: f64 = x.iter().zip(shift).map(|(a, b)| a * b).sum();
    let want: f64 = rhs.iter().sum();
    if !(have > 0.0 && want > 0.0) {
        return;
    }
    let factor = want / have;
    if (factor - 1.0).abs() <= 1e-6 {
        for v in x.iter_mut() {
            *v *= factor;
        }
    }
}

/// Damped update of one species; returns the relative max-norm change.
fn relax(cur: &mut [f64], fresh: Vec<f64>, omega: f64, old: &[f64]) -> f64 {
    let mut diff = 0.0f64;
    let mut scale = 0.0f64;
    for ((c, f), o) in cur.iter_mut().zip(fresh).zip(old) {
        let next = if omega == 1.0 { f } else { omega * f + (1.0 - omega) * *c };
        diff = diff.max((next - *c).abs());
        scale = scale.max(next.abs()).max(o.abs());
        *c = next;
    }
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Largest per-cell residual `|F_i,K| / m(K)` of the exact discrete
/// equations when `next` is inserted as the time-level-(n+1) solution.
pub fn discrete_residual(problem: &Problem<'_>, prev: &State, next: &State, dt: f64) -> Result<[f64; 3]> {
    let mesh = problem.mesh;
    let a = problem.coefficients(prev)?;
    let t_next = next.time;
    let lap: [Vec<f64>; 3] = std::array::from_fn(|i| problem.laplacian().mul_vec(next.fields[i].values()));
    let mut out = [0.0f64; 3];
    for (k, c) in mesh.cells().iter().enumerate() {
        let u = [next.fields[0][k], next.fields[1][k], next.fields[2][k]];
        let r = reaction_rates(&problem.params, u[0], u[1], u[2], prev.fields[0][k], prev.fields[1][k]);
        for i in 0..3 {
            let src = problem.source.map_or(0.0, |s| s.source(i, t_next, c.center));
            let f = (u[i] - prev.fields[i][k]) / dt + a[i] * lap[i][k] / c.measure - r[i] - src;
            out[i] = out[i].max(f.abs());
        }
    }
    Ok(out)
}
