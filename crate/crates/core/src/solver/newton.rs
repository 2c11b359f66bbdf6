use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::linalg::{norm, pcg, BandedCholesky};
use crate::mesh_fem::{DiscreteField, Discretization, SparseSystem};
use crate::solver::certify_subsonic;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearSolverKind {
    /// Direct below `direct_threshold` free unknowns, CG above.
    Auto,
    ConjugateGradient,
    Direct,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonConfig {
    /// Stop when `‖R‖ ≤ max(rel_tol·‖R₀‖, abs_tol)`.
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_iterations: usize,
    /// Armijo sufficient-decrease factor.
    pub armijo_slope: f64,
    pub min_step: f64,
    pub linear: LinearSolverKind,
    pub cg_rel_tol: f64,
    pub cg_max_iterations: usize,
    pub direct_threshold: usize,
    /// Flux continuation steps tried when the direct solve at `m₀` fails;
    /// zero disables the retry.
    pub flux_ramp_steps: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_iterations: 50,
            armijo_slope: 1e-4,
            min_step: 1e-8,
            linear: LinearSolverKind::Auto,
            cg_rel_tol: 1e-12,
            cg_max_iterations: 50_000,
            direct_threshold: 2000,
            flux_ramp_steps: 4,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("solver.rtol", self.rel_tol),
            ("solver.atol", self.abs_tol),
            ("solver.armijo", self.armijo_slope),
            ("solver.min_step", self.min_step),
            ("solver.cg_rtol", self.cg_rel_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::domain(name, v, "(0, inf)"));
            }
        }
        if self.max_iterations == 0 {
            return Err(Error::domain("solver.max_iter", 0.0, "[1, inf)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    pub converged: bool,
    pub iterations: usize,
    /// `‖R‖` at every accepted iterate, starting with the initial guess.
    pub residual_history: Vec<f64>,
    pub energy_history: Vec<f64>,
    pub step_history: Vec<f64>,
    pub final_energy: f64,
    /// `Q = max |∇φ|` over quadrature points.
    pub max_speed: f64,
    /// `Q² ≤ 1 − 2δ̃₀`.
    pub truncation_certified: bool,
    /// `max |flux − m₀|` over all axial cell midplanes.
    pub flux_error: f64,
    /// Whether the flux-continuation retry was needed.
    pub flux_ramped: bool,
    pub wall_time: Duration,
}

impl SolverReport {
    /// Observed order `log(r_{k+1}/r_k) / log(r_k/r_{k−1})` from the last
    /// three residuals that sit above `floor`.
    pub fn convergence_order(&self, floor: f64) -> Option<f64> {
        let r: Vec<f64> = self
            .residual_history
            .iter()
            .copied()
            .filter(|&v| v > floor)
            .collect();
        if r.len() < 3 {
            return None;
        }
        let n = r.len();
        let (a, b, c) = (r[n - 3], r[n - 2], r[n - 1]);
        Some((c / b).ln() / (b / a).ln())
    }
}

struct Iteration {
    field: DiscreteField,
    residuals: Vec<f64>,
    energies: Vec<f64>,
    steps: Vec<f64>,
}

fn solve_linear(system: &SparseSystem, free: usize, config: &NewtonConfig) -> Result<Vec<f64>> {
    let direct = match config.linear {
        LinearSolverKind::Direct => true,
        LinearSolverKind::ConjugateGradient => false,
        LinearSolverKind::Auto => free < config.direct_threshold,
    };
    if direct {
        return Ok(BandedCholesky::factor(&system.matrix)?.solve(&system.rhs));
    }
    let out = pcg(
        &system.matrix,
        &system.rhs,
        config.cg_rel_tol,
        config.cg_max_iterations,
    )?;
    if out.converged {
        Ok(out.solution)
    } else {
        Ok(BandedCholesky::factor(&system.matrix)?.solve(&system.rhs))
    }
}

/// Damped Newton on the energy with Armijo backtracking.
fn iterate(
    disc: &Discretization,
    m0: f64,
    init: DiscreteField,
    config: &NewtonConfig,
) -> Result<Iteration> {
    let mut field = init;
    field.apply_bcs();
    let free = field.len() - field.dirichlet_count();
    let (mut residual, mut system) = disc.residual_jacobian(&field, m0);
    let mut res_norm = norm(&residual);
    let mut energy = disc.energy(&field, m0);
    let target = (config.rel_tol * res_norm).max(config.abs_tol);
    let mut out = Iteration {
        field: DiscreteField::zeros(disc.mesh()),
        residuals: vec![res_norm],
        energies: vec![energy],
        steps: Vec::new(),
    };

    for it in 0..config.max_iterations {
        if res_norm <= target {
            out.field = field;
            return Ok(out);
        }
        let mut direction = solve_linear(&system, free, config)?;
        let mut slope: f64 = residual.iter().zip(&direction).map(|(r, d)| r * d).sum();
        if !(slope < 0.0) {
            direction = residual.iter().map(|r| -r).collect();
            slope = -res_norm * res_norm;
        }

        let mut step = 1.0;
        let accepted = loop {
            let trial = field.stepped(&direction, step);
            let trial_energy = disc.energy(&trial, m0);
            let armijo = trial_energy <= energy + config.armijo_slope * step * slope;
            // Near convergence the decrease drops below rounding in J; fall
            // back to the residual norm there.
            let rounding = 64.0 * f64::EPSILON * energy.abs().max(1.0);
            if armijo || (trial_energy - energy).abs() <= rounding {
                let (r, s) = disc.residual_jacobian(&trial, m0);
                let n = norm(&r);
                if armijo || n < res_norm {
                    break Some((trial, trial_energy, r, s, n));
                }
            }
            step *= 0.5;
            if step < config.min_step {
                break None;
            }
        };
        let Some((trial, trial_energy, r, s, n)) = accepted else {
            return Err(Error::LineSearch {
                iteration: it,
                residual: res_norm,
            });
        };
        field = trial;
        energy = trial_energy;
        residual = r;
        system = s;
        res_norm = n;
        out.residuals.push(res_norm);
        out.energies.push(energy);
        out.steps.push(step);
    }
    if res_norm <= target {
        out.field = field;
        return Ok(out);
    }
    Err(Error::NoConvergence {
        iterations: config.max_iterations,
        residual: res_norm,
    })
}

fn finish(
    disc: &Discretization,
    m0: f64,
    iteration: Iteration,
    flux_ramped: bool,
    started: Instant,
) -> (DiscreteField, SolverReport) {
    let cert = certify_subsonic(disc, &iteration.field);
    let flux_error = disc
        .station_fluxes(&iteration.field)
        .iter()
        .map(|(_, f)| (f - m0).abs())
        .fold(0.0, f64::max);
    let report = SolverReport {
        converged: true,
        iterations: iteration.steps.len(),
        final_energy: *iteration.energies.last().unwrap(),
        residual_history: iteration.residuals,
        energy_history: iteration.energies,
        step_history: iteration.steps,
        max_speed: cert.max_speed,
        truncation_certified: cert.certified,
        flux_error,
        flux_ramped,
        wall_time: started.elapsed(),
    };
    (iteration.field, report)
}

/// Minimizes the truncated energy at flux `m0` starting from `init`.
///
/// If the iteration fails at the target flux it is retried through
/// `flux_ramp_steps` equally spaced fluxes `m₀/k, 2m₀/k, …, m₀`.
pub fn newton_solve(
    disc: &Discretization,
    m0: f64,
    init: DiscreteField,
    config: &NewtonConfig,
) -> Result<(DiscreteField, SolverReport)> {
    config.validate()?;
    if !(m0 >= 0.0) || !m0.is_finite() {
        return Err(Error::domain("m0", m0, "[0, inf)"));
    }
    let started = Instant::now();
    let first = iterate(disc, m0, init.clone(), config);
    match first {
        Ok(it) => Ok(finish(disc, m0, it, false, started)),
        Err(err) if config.flux_ramp_steps > 1 && m0 > 0.0 => {
            let mut field = init;
            let mut merged: Option<Iteration> = None;
            let steps = config.flux_ramp_steps;
            for k in 1..=steps {
                let flux = m0 * k as f64 / steps as f64;
                let it = iterate(disc, flux, field, config).map_err(|_| err_with_context(&err))?;
                field = it.field.clone();
                merged = Some(match merged {
                    None => it,
                    Some(mut acc) => {
                        acc.steps.extend(it.steps);
                        acc.residuals.extend(it.residuals);
                        acc.energies.extend(it.energies);
                        acc.field = it.field;
                        acc
                    }
                });
            }
            Ok(finish(
                disc,
                m0,
                merged.expect("at least one ramp step"),
                true,
                started,
            ))
        }
        Err(err) => Err(err),
    }
}

fn err_with_context(err: &Error) -> Error {
    match err {
        Error::NoConvergence {
            iterations,
            residual,
        } => Error::NoConvergence {
            iterations: *iterations,
            residual: *residual,
        },
        Error::LineSearch {
            iteration,
            residual,
        } => Error::LineSearch {
            iteration: *iteration,
            residual: *residual,
        },
        other => Error::LinearSolver(other.to_string()),
    }
}
