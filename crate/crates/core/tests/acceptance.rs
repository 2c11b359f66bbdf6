//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::time::{Duration, Instant};

use common::{air, random_field, tanh_nozzle, unit_cylinder};
use nozzleflow::analysis::{
    critical_flux_search, far_field_check, flux_sweep, local_average_diagnostic, uniqueness_check,
    DEFAULT_DELTA0_SCHEDULE,
};
use nozzleflow::linalg::{dot, pcg};
use nozzleflow::mesh_fem::{DiscreteField, Discretization};
use nozzleflow::nozzle::Profile;
use nozzleflow::solver::{continue_in_length, newton_solve, NewtonConfig, SolverReport};
use nozzleflow::ProblemSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Pinned tolerances.
const CYL_GRADIENT_TOL: f64 = 1e-8;
const CYL_FLUX_TOL: f64 = 1e-10;
const CYL_RUNTIME: Duration = Duration::from_secs(10);
const TANH_FLUX_REL_TOL: f64 = 1e-3;
const TANH_HALVING_RANGE: (f64, f64) = (2.5, 6.0);
const TANH_RUNTIME: Duration = Duration::from_secs(60);
const FAR_FIELD_REL_TOL: f64 = 1e-2;
const UNIQUENESS_TOL: f64 = 1e-8;
const L_STABILITY_TOL: f64 = 1e-4;
const LOCAL_AVERAGE_SPREAD: f64 = 0.05;
const DERIVATIVE_REL_TOL: f64 = 1e-6;
const DERIVATIVE_RUNTIME: Duration = Duration::from_secs(5);
const SYMMETRY_TOL: f64 = 1e-12;
const CRITICAL_FRACTION: f64 = 0.95;
const CRITICAL_RUNTIME: Duration = Duration::from_secs(600);
const SWEEP_TOL: f64 = 1e-8;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn solve(disc: &Discretization, m0: f64) -> (DiscreteField, SolverReport) {
    let zero = DiscreteField::zeros(disc.mesh());
    newton_solve(disc, m0, zero, &NewtonConfig::default()).expect("solve failed")
}

fn max_relative_flux_deviation(disc: &Discretization, field: &DiscreteField, m0: f64) -> f64 {
    disc.station_fluxes(field)
        .iter()
        .map(|(_, f)| ((f - m0) / m0).abs())
        .fold(0.0, f64::max)
}

/// The criterion-2 nozzle: r₋ = 0.5, r₊ = 1, ℓ = 1 on L = 8.
fn tanh_l8(n_t: usize, n_a: usize) -> ProblemSpec {
    tanh_nozzle(8.0, n_t, n_a)
}

fn cylinder_criterion() -> Verdict {
    let started = Instant::now();
    let disc = unit_cylinder(4.0, 16, 128).discretize().unwrap();
    let q_star = 0.5;
    let m0 = air().momentum(q_star).unwrap();
    let (field, report) = solve(&disc, m0);
    let grad_err = disc
        .quadrature_samples(&field)
        .iter()
        .map(|s| s.gradient[0].abs().max((s.gradient[1] - q_star).abs()))
        .fold(0.0, f64::max);
    let flux_err = disc
        .station_fluxes(&field)
        .iter()
        .map(|(_, f)| (f - m0).abs())
        .fold(0.0, f64::max);
    let elapsed = started.elapsed();
    verdict(
        grad_err < CYL_GRADIENT_TOL
            && flux_err < CYL_FLUX_TOL
            && report.truncation_certified
            && elapsed < CYL_RUNTIME,
        format!(
            "sup|grad phi - (0,q*)| = {grad_err:.2e} (< {CYL_GRADIENT_TOL:.0e}), \
             flux error = {flux_err:.2e} (< {CYL_FLUX_TOL:.0e}), time {elapsed:.2?}"
        ),
    )
}

fn tanh_flux_criterion() -> Verdict {
    let coarse = tanh_l8(16, 128).discretize().unwrap();
    let (cf, _) = solve(&coarse, 0.3);
    let coarse_dev = max_relative_flux_deviation(&coarse, &cf, 0.3);

    let started = Instant::now();
    let fine = tanh_l8(32, 256).discretize().unwrap();
    let (ff, report) = solve(&fine, 0.3);
    let elapsed = started.elapsed();
    let fine_dev = max_relative_flux_deviation(&fine, &ff, 0.3);
    let ratio = coarse_dev / fine_dev;
    verdict(
        fine_dev < TANH_FLUX_REL_TOL
            && ratio >= TANH_HALVING_RANGE.0
            && ratio <= TANH_HALVING_RANGE.1
            && report.truncation_certified
            && elapsed < TANH_RUNTIME,
        format!(
            "32x256 relative deviation = {fine_dev:.2e} (< {TANH_FLUX_REL_TOL:.0e}), \
             halving ratio = {ratio:.2} (in [{}, {}]), time {elapsed:.2?}",
            TANH_HALVING_RANGE.0, TANH_HALVING_RANGE.1
        ),
    )
}

fn far_field_criterion() -> Verdict {
    let disc = tanh_l8(32, 256).discretize().unwrap();
    let (field, _) = solve(&disc, 0.3);
    let report = far_field_check(&disc, &field, 0.3, &[8.0 / 4.0]).unwrap();
    let dev = report.worst_relative_deviation();
    let trans = report.worst_relative_transverse();
    verdict(
        dev < FAR_FIELD_REL_TOL && trans < FAR_FIELD_REL_TOL,
        format!(
            "q- = {:.6}, q+ = {:.6}, |qbar - q|/q = {dev:.2e}, transverse/q = {trans:.2e} \
             (< {FAR_FIELD_REL_TOL:.0e})",
            report.q_minus, report.q_plus
        ),
    )
}

fn uniqueness_criterion() -> Verdict {
    let cfg = NewtonConfig::default();
    let cyl = unit_cylinder(4.0, 16, 128).discretize().unwrap();
    let a = uniqueness_check(&cyl, air().momentum(0.5).unwrap(), &cfg).unwrap();
    let tanh = tanh_l8(32, 256).discretize().unwrap();
    let b = uniqueness_check(&tanh, 0.3, &cfg).unwrap();
    verdict(
        a.discrepancy < UNIQUENESS_TOL
            && b.discrepancy < UNIQUENESS_TOL
            && a.both_certified()
            && b.both_certified(),
        format!(
            "cylinder {:.2e}, tanh {:.2e} (< {UNIQUENESS_TOL:.0e})",
            a.discrepancy, b.discrepancy
        ),
    )
}

fn l_stability_criterion() -> Verdict {
    let spec = tanh_nozzle(4.0, 8, 64);
    let lengths = [4.0, 8.0, 16.0];
    let report = continue_in_length(&spec, 0.3, &lengths, &NewtonConfig::default()).unwrap();
    let worst_change = report
        .steps
        .iter()
        .filter_map(|s| s.interior_change)
        .fold(0.0, f64::max);
    let ratios: Vec<f64> = report
        .steps
        .iter()
        .map(|s| {
            let disc = spec.with_half_length(s.half_length).discretize().unwrap();
            local_average_diagnostic(&disc, &s.field, 0.3)
                .unwrap()
                .ratio
        })
        .collect();
    let hi = ratios.iter().copied().fold(f64::MIN, f64::max);
    let lo = ratios.iter().copied().fold(f64::MAX, f64::min);
    let spread = hi / lo - 1.0;
    verdict(
        report.window == 2.0 && worst_change < L_STABILITY_TOL && spread < LOCAL_AVERAGE_SPREAD,
        format!(
            "interior change on |x_n| <= {} = {worst_change:.2e} (< {L_STABILITY_TOL:.0e}), \
             local-average ratios {ratios:.4?} spread {:.2}% (< {}%)",
            report.window,
            100.0 * spread,
            100.0 * LOCAL_AVERAGE_SPREAD
        ),
    )
}

/// Central-difference checks of the gradient and Hessian of the discrete
/// energy along random directions.
fn derivative_criterion() -> Verdict {
    let started = Instant::now();
    let specs = [
        tanh_nozzle(2.0, 8, 32),
        unit_cylinder(2.0, 4, 16),
        ProblemSpec {
            profile: Profile::gaussian_throat(3, 0.5, 0.15, 1.0).unwrap(),
            ..tanh_nozzle(1.0, 2, 8)
        },
    ];
    let discs: Vec<Discretization> = specs.iter().map(|s| s.discretize().unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let eps = 1e-6;
    let (mut worst_grad, mut worst_hess): (f64, f64) = (0.0, 0.0);
    for k in 0..20 {
        let disc = &discs[k % discs.len()];
        let m0 = 0.3;
        let field = random_field(disc, 100 + k as u64, 1.5);
        let (residual, system) = disc.residual_jacobian(&field, m0);
        for _ in 0..3 {
            let mut dir: Vec<f64> = (0..field.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for (i, d) in dir.iter_mut().enumerate() {
                if field.is_dirichlet(i) {
                    *d = 0.0;
                }
            }
            let plus = field.stepped(&dir, eps);
            let minus = field.stepped(&dir, -eps);
            let fd = (disc.energy(&plus, m0) - disc.energy(&minus, m0)) / (2.0 * eps);
            let exact = dot(&residual, &dir);
            worst_grad = worst_grad.max((fd - exact).abs() / exact.abs().max(1e-12));

            let rp = disc.residual(&plus, m0);
            let rm = disc.residual(&minus, m0);
            let mut jv = vec![0.0; dir.len()];
            system.matrix.matvec(&dir, &mut jv);
            let mut num = 0.0f64;
            let mut den = 0.0f64;
            for i in 0..dir.len() {
                if field.is_dirichlet(i) {
                    continue;
                }
                let fd = (rp[i] - rm[i]) / (2.0 * eps);
                num += (fd - jv[i]).powi(2);
                den += jv[i].powi(2);
            }
            worst_hess = worst_hess.max((num / den).sqrt());
        }
    }
    let elapsed = started.elapsed();
    verdict(
        worst_grad < DERIVATIVE_REL_TOL
            && worst_hess < DERIVATIVE_REL_TOL
            && elapsed < DERIVATIVE_RUNTIME,
        format!(
            "gradient rel err {worst_grad:.2e}, Jacobian rel err {worst_hess:.2e} \
             (< {DERIVATIVE_REL_TOL:.0e}) on 20 fields, time {elapsed:.2?}"
        ),
    )
}

fn ellipticity_criterion() -> Verdict {
    let disc = tanh_nozzle(2.0, 8, 32).discretize().unwrap();
    let mut worst_asym: f64 = 0.0;
    let mut min_ritz = f64::INFINITY;
    let mut all_converged = true;
    let mut truncated_fields = 0;
    for seed in 0..20 {
        let scale = 0.5 + 0.25 * seed as f64;
        let field = random_field(&disc, 500 + seed, scale);
        let (q2, _) = disc.max_speed_squared(&field);
        if q2 > 1.0 {
            truncated_fields += 1;
        }
        let (_, system) = disc.residual_jacobian(&field, 0.3);
        let scale = system
            .matrix
            .values
            .iter()
            .fold(1.0f64, |m, v| m.max(v.abs()));
        worst_asym = worst_asym.max(system.matrix.max_asymmetry() / scale);
        let b: Vec<f64> = (0..system.matrix.n)
            .map(|i| ((i % 7) as f64 - 3.0) / 3.0)
            .collect();
        let out = pcg(&system.matrix, &b, 1e-10, 10_000).unwrap();
        all_converged &= out.converged;
        min_ritz = min_ritz.min(out.ritz_min);
    }
    verdict(
        worst_asym <= SYMMETRY_TOL && all_converged && min_ritz > 0.0 && truncated_fields > 0,
        format!(
            "asymmetry {worst_asym:.1e} (<= {SYMMETRY_TOL:.0e}), CG converged on all 20, \
             min Ritz {min_ritz:.2e} > 0, {truncated_fields} fields with |grad phi| > 1"
        ),
    )
}

fn critical_flux_criterion() -> Verdict {
    let started = Instant::now();
    let spec = unit_cylinder(2.0, 4, 16);
    let result = critical_flux_search(
        &spec,
        &DEFAULT_DELTA0_SCHEDULE,
        12,
        &NewtonConfig::default(),
    )
    .unwrap();
    let elapsed = started.elapsed();
    let section = 1.0;
    let tol = section / 4096.0;
    let (m_lo, width) = result.estimate().unwrap();
    let q_ok = result.certified_points().all(|p| p.max_speed < 1.0);
    let brackets: Vec<String> = result
        .brackets
        .iter()
        .map(|b| format!("{}:[{:.5},{:.5}]", b.delta0, b.m_lo, b.m_hi))
        .collect();
    verdict(
        result.brackets_nested(tol)
            && m_lo >= CRITICAL_FRACTION * section
            && q_ok
            && elapsed < CRITICAL_RUNTIME,
        format!(
            "brackets {} nested, m_lo = {m_lo:.6} (>= {CRITICAL_FRACTION}|S|), width {width:.1e}, \
             all certified Q < 1: {q_ok}, time {elapsed:.2?}",
            brackets.join(" ")
        ),
    )
}

fn sweep_criterion() -> Verdict {
    let disc = unit_cylinder(2.0, 4, 16).discretize().unwrap();
    let fluxes: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
    let sweep = flux_sweep(&disc, &fluxes, &NewtonConfig::default()).unwrap();
    let rel = air();
    let increasing = sweep
        .points
        .windows(2)
        .all(|w| w[1].max_speed > w[0].max_speed);
    let worst = sweep
        .points
        .iter()
        .map(|p| (p.max_speed - rel.solve_q_from_flux(p.m0 / 1.0).unwrap()).abs())
        .fold(0.0, f64::max);
    let certified = sweep.points.iter().all(|p| p.certified);
    verdict(
        increasing && worst < SWEEP_TOL && certified,
        format!(
            "Q strictly increasing: {increasing}, max |Q - q(m0)| = {worst:.2e} (< {SWEEP_TOL:.0e})"
        ),
    )
}

fn gradient_scaling_criterion() -> Verdict {
    let disc = unit_cylinder(2.0, 4, 16).discretize().unwrap();
    let mut ok = true;
    let mut ratios = Vec::new();
    for m0 in [0.05, 0.1, 0.2, 0.4] {
        let (_, report) = solve(&disc, m0);
        ok &= report.max_speed <= m0 && report.truncation_certified;
        ratios.push(report.max_speed / m0);
    }
    verdict(ok, format!("max|grad phi|/m0 = {ratios:.4?} (<= 1)"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("cylinder exactness", cylinder_criterion),
        ("flux conservation on tanh nozzle", tanh_flux_criterion),
        ("far-field asymptotics", far_field_criterion),
        ("uniqueness", uniqueness_criterion),
        ("L-stability", l_stability_criterion),
        ("derivative consistency", derivative_criterion),
        ("ellipticity", ellipticity_criterion),
        ("critical flux on cylinder", critical_flux_criterion),
        ("monotone Q(m0) sweep", sweep_criterion),
        ("gradient scaling", gradient_scaling_criterion),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        if !v.passed {
            failures += 1;
        }
        let tag = if v.passed { "PASS" } else { "FAIL" };
        println!("{tag} [{:>2}] {name}: {}", i + 1, v.detail);
    }
    println!(
        "acceptance: {} passed, {failures} failed",
        criteria.len() - failures
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
