use std::path::{Path, PathBuf};

use crate::analysis::{
    critical_flux_search, far_field_check, flux_sweep, local_average_diagnostic, uniqueness_check,
    SweepPoint,
};
use crate::cli::config::{Mode, RunConfig};
use crate::cli::output::{vtk_structured_grid, write_atomic, Cell, CsvTable, Snapshot};
use crate::error::Result;
use crate::mesh_fem::{DiscreteField, Discretization};
use crate::solver::{continue_in_length, newton_solve, SolverReport};

/// Maximum gradient error accepted by `validate-cylinder`.
pub const CYLINDER_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Success,
    /// Converged, but the subsonic certificate does not hold.
    Uncertified,
    Failure,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Success => 0,
            RunStatus::Uncertified => 2,
            RunStatus::Failure => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: RunStatus,
    /// Human-readable `key: value` lines.
    pub summary: Vec<String>,
    pub files: Vec<PathBuf>,
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Writer<'_> {
    fn csv(&mut self, name: &str, table: &CsvTable) -> Result<()> {
        let path = self.dir.join(name);
        table.write(&path)?;
        self.files.push(path);
        Ok(())
    }

    fn text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        write_atomic(&path, text)?;
        self.files.push(path);
        Ok(())
    }
}

fn status_of(certified: bool) -> RunStatus {
    if certified {
        RunStatus::Success
    } else {
        RunStatus::Uncertified
    }
}

/// Executes one configured run and writes its output files.
pub fn run(config: &RunConfig) -> Result<Outcome> {
    let mut w = Writer {
        dir: &config.output_dir,
        files: Vec::new(),
    };
    let mut summary = vec![
        format!("mode: {:?}", config.mode),
        format!("config_sha256: {}", config.hash),
    ];
    let status = match config.mode {
        Mode::Solve => {
            let (disc, field, report) = solve_or_continue(config, &mut w, &mut summary)?;
            write_solution(config, &mut w, &disc, &field, &report, config.m0)?;
            describe(&mut summary, &report);
            if let Ok(la) = local_average_diagnostic(&disc, &field, config.m0) {
                summary.push(format!("local_average_ratio: {:.6e}", la.ratio));
            }
            status_of(report.truncation_certified)
        }
        Mode::FarField => {
            let (disc, field, report) = solve_or_continue(config, &mut w, &mut summary)?;
            write_solution(config, &mut w, &disc, &field, &report, config.m0)?;
            describe(&mut summary, &report);
            let ff = far_field_check(&disc, &field, config.m0, &config.probe_offsets)?;
            let mut t = CsvTable::new(&[
                "side",
                "station",
                "mean_axial",
                "reference",
                "deviation",
                "relative_deviation",
                "transverse_sup",
            ]);
            for p in &ff.probes {
                t.row(&[
                    Cell::Text(format!("{:?}", p.side).to_lowercase()),
                    Cell::Num(p.station),
                    Cell::Num(p.mean_axial),
                    Cell::Num(p.reference),
                    Cell::Num(p.deviation),
                    Cell::Num(p.relative_deviation()),
                    Cell::Num(p.transverse_sup),
                ]);
            }
            w.csv("far_field.csv", &t)?;
            summary.push(format!("q_minus: {:.12e}", ff.q_minus));
            summary.push(format!("q_plus: {:.12e}", ff.q_plus));
            summary.push(format!(
                "far_field_relative_deviation: {:.6e}",
                ff.worst_relative_deviation()
            ));
            status_of(report.truncation_certified)
        }
        Mode::ValidateCylinder => {
            let disc = config.problem.discretize()?;
            let q_star = config.q_star.unwrap_or(0.5);
            let rel = disc.energy_density().theta().base();
            let m0 = rel.momentum(q_star)? * disc.map().section_measure(0.0);
            let zero = DiscreteField::zeros(disc.mesh());
            let (field, report) = newton_solve(&disc, m0, zero, &config.newton)?;
            write_solution(config, &mut w, &disc, &field, &report, m0)?;
            describe(&mut summary, &report);
            let dim = disc.mesh().dim();
            let err = disc
                .quadrature_samples(&field)
                .iter()
                .map(|s| {
                    let mut e: f64 = 0.0;
                    for c in 0..dim {
                        let want = if c == dim - 1 { q_star } else { 0.0 };
                        e = e.max((s.gradient[c] - want).abs());
                    }
                    e
                })
                .fold(0.0, f64::max);
            summary.push(format!("m0: {m0:.16e}"));
            summary.push(format!("max_gradient_error: {err:.6e}"));
            if err < CYLINDER_TOLERANCE && report.truncation_certified {
                RunStatus::Success
            } else {
                RunStatus::Failure
            }
        }
        Mode::Uniqueness => {
            let disc = config.problem.discretize()?;
            let u = uniqueness_check(&disc, config.m0, &config.newton)?;
            let mut t = CsvTable::new(&[
                "init",
                "iterations",
                "max_speed",
                "certified",
                "final_energy",
            ]);
            for (name, r) in [("zero", &u.from_zero), ("ramp", &u.from_ramp)] {
                t.row(&[
                    Cell::Text(name.into()),
                    Cell::Int(r.iterations),
                    Cell::Num(r.max_speed),
                    Cell::Bool(r.truncation_certified),
                    Cell::Num(r.final_energy),
                ]);
            }
            w.csv("uniqueness.csv", &t)?;
            summary.push(format!("gradient_discrepancy: {:.6e}", u.discrepancy));
            status_of(u.both_certified())
        }
        Mode::Sweep => {
            let disc = config.problem.discretize()?;
            let sweep = flux_sweep(&disc, &config.sweep_fluxes, &config.newton)?;
            w.csv("q_vs_m0.csv", &points_table(&sweep.points))?;
            let failed = sweep.points.iter().filter(|p| !p.converged).count();
            let uncertified = sweep.points.iter().filter(|p| !p.certified).count();
            summary.push(format!("points: {}", sweep.points.len()));
            summary.push(format!("failed: {failed}"));
            summary.push(format!("uncertified: {uncertified}"));
            if failed > 0 {
                RunStatus::Failure
            } else {
                status_of(uncertified == 0)
            }
        }
        Mode::CriticalFlux => {
            let result = critical_flux_search(
                &config.problem,
                &config.delta0_schedule,
                config.bisections,
                &config.newton,
            )?;
            let mut t = CsvTable::new(&["delta0", "m_lo", "m_hi", "width"]);
            let mut points = Vec::new();
            for b in &result.brackets {
                t.row(&[
                    Cell::Num(b.delta0),
                    Cell::Num(b.m_lo),
                    Cell::Num(b.m_hi),
                    Cell::Num(b.m_hi - b.m_lo),
                ]);
                points.extend_from_slice(&b.points);
            }
            w.csv("critical_flux.csv", &t)?;
            w.csv("critical_points.csv", &points_table(&points))?;
            if let Some((m, width)) = result.estimate() {
                summary.push(format!("critical_flux_estimate: {m:.12e}"));
                summary.push(format!("bracket_width: {width:.6e}"));
            }
            RunStatus::Success
        }
    };
    summary.push(format!("status: {status:?}"));
    let mut text = summary.join("\n");
    text.push('\n');
    w.text("summary.txt", &text)?;
    Ok(Outcome {
        status,
        summary,
        files: w.files,
    })
}

fn solve_or_continue(
    config: &RunConfig,
    w: &mut Writer<'_>,
    summary: &mut Vec<String>,
) -> Result<(Discretization, DiscreteField, SolverReport)> {
    match &config.length_schedule {
        Some(schedule) if schedule.len() > 1 => {
            let report = continue_in_length(&config.problem, config.m0, schedule, &config.newton)?;
            let mut t = CsvTable::new(&[
                "half_length",
                "axial_cells",
                "iterations",
                "max_speed",
                "interior_change",
            ]);
            for s in &report.steps {
                t.row(&[
                    Cell::Num(s.half_length),
                    Cell::Int(s.axial_cells),
                    Cell::Int(s.report.iterations),
                    Cell::Num(s.report.max_speed),
                    Cell::Num(s.interior_change.unwrap_or(f64::NAN)),
                ]);
            }
            w.csv("continuation.csv", &t)?;
            summary.push(format!("continuation_window: {:.6e}", report.window));
            let last = report.steps.into_iter().last().expect("non-empty schedule");
            let disc = config
                .problem
                .with_half_length(last.half_length)
                .discretize()?;
            Ok((disc, last.field, last.report))
        }
        _ => {
            let disc = config.problem.discretize()?;
            let zero = DiscreteField::zeros(disc.mesh());
            let (field, report) = newton_solve(&disc, config.m0, zero, &config.newton)?;
            Ok((disc, field, report))
        }
    }
}

fn write_solution(
    config: &RunConfig,
    w: &mut Writer<'_>,
    disc: &Discretization,
    field: &DiscreteField,
    report: &SolverReport,
    m0: f64,
) -> Result<()> {
    let mut fluxes = CsvTable::new(&["station", "flux", "deviation"]);
    for (x, f) in disc.station_fluxes(field) {
        fluxes.row(&[Cell::Num(x), Cell::Num(f), Cell::Num(f - m0)]);
    }
    w.csv("fluxes.csv", &fluxes)?;

    let mut conv = CsvTable::new(&["iteration", "residual", "energy", "step"]);
    for (i, (r, e)) in report
        .residual_history
        .iter()
        .zip(&report.energy_history)
        .enumerate()
    {
        let step = if i == 0 {
            0.0
        } else {
            report.step_history[i - 1]
        };
        conv.row(&[Cell::Int(i), Cell::Num(*r), Cell::Num(*e), Cell::Num(step)]);
    }
    w.csv("convergence.csv", &conv)?;

    if config.write_snapshot {
        let path = w.dir.join("solution.snapshot");
        Snapshot::capture(disc, field, &config.hash).save(&path)?;
        w.files.push(path);
    }
    if config.write_vtk {
        w.text("solution.vtk", &vtk_structured_grid(disc, field))?;
    }
    Ok(())
}

fn describe(summary: &mut Vec<String>, report: &SolverReport) {
    summary.push(format!("iterations: {}", report.iterations));
    summary.push(format!(
        "final_residual: {:.6e}",
        report.residual_history.last().copied().unwrap_or(0.0)
    ));
    summary.push(format!("final_energy: {:.16e}", report.final_energy));
    summary.push(format!("max_speed: {:.16e}", report.max_speed));
    summary.push(format!("flux_error: {:.6e}", report.flux_error));
    summary.push(format!("certified: {}", report.truncation_certified));
    summary.push(format!("flux_ramped: {}", report.flux_ramped));
}

fn points_table(points: &[SweepPoint]) -> CsvTable {
    let mut t = CsvTable::new(&[
        "delta0",
        "m0",
        "converged",
        "max_speed",
        "certified",
        "flux_error",
        "iterations",
    ]);
    for p in points {
        t.row(&[
            Cell::Num(p.delta0),
            Cell::Num(p.m0),
            Cell::Bool(p.converged),
            Cell::Num(p.max_speed),
            Cell::Bool(p.certified),
            Cell::Num(p.flux_error),
            Cell::Int(p.iterations),
        ]);
    }
    t
}
