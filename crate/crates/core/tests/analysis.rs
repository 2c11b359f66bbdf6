mod common;

use common::*;
use nozzleflow::analysis::*;
use nozzleflow::mesh_fem::DiscreteField;
use nozzleflow::solver::{newton_solve, NewtonConfig};

fn solve(
    spec: &nozzleflow::ProblemSpec,
    m0: f64,
) -> (nozzleflow::mesh_fem::Discretization, DiscreteField) {
    let disc = spec.discretize().unwrap();
    let zero = DiscreteField::zeros(disc.mesh());
    let (field, _) = newton_solve(&disc, m0, zero, &NewtonConfig::default()).unwrap();
    (disc, field)
}

#[test]
fn max_speed_on_cylinder_and_at_rest() {
    let rel = air();
    let m0 = rel.momentum(0.5).unwrap();
    let (disc, field) = solve(&unit_cylinder(2.0, 4, 16), m0);
    let s = max_speed_and_mach(&disc, &field);
    assert!((s.max_speed - 0.5).abs() < 1e-10);
    assert!(s.subsonic);
    let mach = rel.mach(0.5).unwrap();
    assert!((s.max_mach.unwrap() - mach).abs() < 1e-9);

    let zero = DiscreteField::zeros(disc.mesh());
    assert_eq!(max_speed_and_mach(&disc, &zero).max_speed, 0.0);
}

#[test]
fn throat_carries_the_fastest_flow() {
    let (disc, field) = solve(&gaussian_throat(4.0, 8, 64), 0.4);
    let s = max_speed_and_mach(&disc, &field);
    assert!(s.location[1].abs() < 0.5, "{:?}", s.location);
}

#[test]
fn far_field_on_cylinder_is_exact() {
    let (disc, field) = solve(&unit_cylinder(4.0, 4, 32), 0.4);
    let r = far_field_check(&disc, &field, 0.4, &[0.5, 1.0]).unwrap();
    assert_eq!(r.q_minus, r.q_plus);
    assert!(r.worst_relative_deviation() < 1e-10);
    assert!(r.worst_relative_transverse() < 1e-10);

    let zero = DiscreteField::zeros(disc.mesh());
    let r = far_field_check(&disc, &zero, 0.0, &[1.0]).unwrap();
    assert_eq!(r.q_plus, 0.0);
    assert!(r.probes.iter().all(|p| p.deviation == 0.0));
    assert!(far_field_check(&disc, &zero, 0.0, &[9.0]).is_err());
}

#[test]
fn far_field_on_tanh_nozzle() {
    let l = 8.0;
    let (disc, field) = solve(&tanh_nozzle(l, 16, 128), 0.3);
    let r = far_field_check(&disc, &field, 0.3, &[l / 4.0]).unwrap();
    let rel = air();
    assert!((rel.momentum(r.q_minus).unwrap() - 0.3).abs() < 1e-14);
    assert!((rel.momentum(r.q_plus).unwrap() - 0.15).abs() < 1e-14);
    assert!(r.worst_relative_deviation() < 1e-2, "{r:?}");
    assert!(r.worst_relative_transverse() < 1e-2, "{r:?}");
}

#[test]
fn uniqueness_from_two_starts() {
    let cfg = NewtonConfig::default();
    let rel = air();
    let cyl = unit_cylinder(2.0, 4, 16).discretize().unwrap();
    let r = uniqueness_check(&cyl, rel.momentum(0.5).unwrap(), &cfg).unwrap();
    assert!(r.discrepancy < 1e-10, "{}", r.discrepancy);
    assert!(r.both_certified());

    let tanh = tanh_nozzle(4.0, 8, 64).discretize().unwrap();
    let r = uniqueness_check(&tanh, 0.3, &cfg).unwrap();
    assert!(r.discrepancy < 1e-8, "{}", r.discrepancy);
    let r = uniqueness_check(&tanh, 0.0, &cfg).unwrap();
    assert!(r.discrepancy < 1e-12);
}

#[test]
fn cylinder_sweep_matches_flux_inversion() {
    let disc = unit_cylinder(1.0, 2, 8).discretize().unwrap();
    let fluxes: Vec<f64> = (1..=9).map(|k| 0.1 * k as f64).collect();
    let sweep = flux_sweep(&disc, &fluxes, &NewtonConfig::default()).unwrap();
    let rel = air();
    for w in sweep.points.windows(2) {
        assert!(w[1].max_speed > w[0].max_speed);
    }
    for p in &sweep.points {
        let q = rel.solve_q_from_flux(p.m0).unwrap();
        assert!(p.certified);
        assert!((p.max_speed - q).abs() < 1e-8, "{p:?}");
    }
    assert!(flux_sweep(&disc, &[0.2, 0.1], &NewtonConfig::default()).is_err());
}

#[test]
fn uncertified_beyond_choking() {
    let disc = unit_cylinder(1.0, 2, 8).discretize().unwrap();
    let sweep = flux_sweep(&disc, &[1.0, 1.2], &NewtonConfig::default()).unwrap();
    assert!(sweep.points.iter().all(|p| !p.certified));
}

#[test]
fn critical_flux_on_cylinder_approaches_choking() {
    let spec = unit_cylinder(1.0, 2, 8);
    let r = critical_flux_search(
        &spec,
        &DEFAULT_DELTA0_SCHEDULE,
        12,
        &NewtonConfig::default(),
    )
    .unwrap();
    assert_eq!(r.brackets.len(), 3);
    assert!(r.brackets_nested(1.0 / 4096.0));
    let (m_lo, width) = r.estimate().unwrap();
    assert!(m_lo >= 0.95, "{m_lo}");
    assert!(width > 0.0 && m_lo + width <= 1.0);
    assert!(r.certified_points().all(|p| p.max_speed < 1.0));
    // Each bracket sits below the exact certified limit j(√(1−2δ̃₀)).
    let rel = air();
    for b in &r.brackets {
        let exact = rel.momentum((1.0 - 2.0 * b.delta0).sqrt()).unwrap();
        assert!(
            b.m_lo <= exact + 1e-12 && b.m_hi >= exact - 1e-12,
            "{b:?} {exact}"
        );
    }
}

#[test]
fn critical_flux_of_throat_is_below_choke_bound() {
    let spec = gaussian_throat(2.0, 4, 16);
    let disc = spec.discretize().unwrap();
    let bound = choke_bound(&disc);
    assert!((bound - 0.7).abs() < 1e-12);
    let r = critical_flux_search(&spec, &[0.1, 0.05], 8, &NewtonConfig::default()).unwrap();
    let (m_lo, _) = r.estimate().unwrap();
    assert!(m_lo > 0.0 && m_lo < bound);
}

#[test]
fn local_average_on_cylinder_matches_closed_form() {
    let rel = air();
    let q = 0.5;
    let m0 = rel.momentum(q).unwrap();
    let (disc, field) = solve(&unit_cylinder(3.0, 4, 24), m0);
    let la = local_average_diagnostic(&disc, &field, m0).unwrap();
    let rho = rel.density(q * q).unwrap();
    assert!((la.ratio - 1.0 / (rho * rho)).abs() < 1e-9);
    assert!(la.ratio <= 1.0);
    let zero = DiscreteField::zeros(disc.mesh());
    assert_eq!(
        local_average_diagnostic(&disc, &zero, 0.0).unwrap().ratio,
        0.0
    );
}

#[test]
fn poincare_ratio_of_linear_field() {
    let disc = unit_cylinder(2.0, 4, 32).discretize().unwrap();
    let f = DiscreteField::from_fn(disc.mesh(), disc.map(), |x| x[1] + 2.0);
    let r = poincare_diagnostic(&disc, &[f]);
    assert_eq!(r.slabs.len(), 4);
    for s in &r.slabs {
        assert!((s.worst - 1.0 / 12f64.sqrt()).abs() < 1e-12, "{s:?}");
    }
}

#[test]
fn poincare_ratio_is_stable_across_slabs() {
    let disc = tanh_nozzle(3.0, 4, 24).discretize().unwrap();
    let fields: Vec<_> = (0..100).map(|s| random_field(&disc, s, 1.0)).collect();
    let r = poincare_diagnostic(&disc, &fields);
    assert_eq!(r.slabs.len(), 6);
    assert!(r.spread() < 2.0, "{r:?}");
}
