#![allow(clippy::needless_range_loop)]

mod common;

use common::*;
use nozzleflow::linalg::pcg;
use nozzleflow::mesh_fem::DiscreteField;
use nozzleflow::Error;

#[test]
fn zero_field_has_zero_energy() {
    let disc = unit_cylinder(1.0, 4, 8).discretize().unwrap();
    let zero = DiscreteField::zeros(disc.mesh());
    assert_eq!(disc.energy(&zero, 0.7), 0.0);
    assert_eq!(disc.flux_through_section(&zero, 0.0).unwrap(), 0.0);
}

#[test]
fn energy_of_uniform_ramp_on_cylinder() {
    let l = 2.0;
    let disc = unit_cylinder(l, 4, 16).discretize().unwrap();
    let q = 0.4;
    let m0 = 0.3;
    let field = DiscreteField::linear_ramp(disc.mesh(), q);
    let f = disc.energy_density().energy(q * q);
    let expected = 2.0 * l * 1.0 * f - 2.0 * l * m0 * q;
    let got = disc.energy(&field, m0);
    assert!((got - expected).abs() < 1e-13, "{got} vs {expected}");
}

#[test]
fn energy_nonnegative_without_flux() {
    let disc = tanh_nozzle(2.0, 4, 16).discretize().unwrap();
    for seed in 0..10 {
        let field = random_field(&disc, seed, 2.0);
        assert!(disc.energy(&field, 0.0) >= 0.0);
    }
}

#[test]
fn exact_solution_on_cylinder_has_zero_residual() {
    let disc = unit_cylinder(2.0, 4, 16).discretize().unwrap();
    let rel = air();
    let m0 = rel.momentum(0.5).unwrap();
    let q = rel.solve_q_from_flux(m0).unwrap();
    let field = DiscreteField::linear_ramp(disc.mesh(), q);
    let residual = disc.residual(&field, m0);
    assert!(max_abs(&residual) < 1e-12, "{}", max_abs(&residual));
}

#[test]
fn zero_field_residual_lives_on_outlet() {
    let disc = tanh_nozzle(2.0, 4, 8).discretize().unwrap();
    let zero = DiscreteField::zeros(disc.mesh());
    let residual = disc.residual(&zero, 0.3);
    let mesh = disc.mesh();
    let outlet_start = mesh.node_count() - mesh.nodes_per_section();
    for (i, r) in residual.iter().enumerate() {
        if i < outlet_start {
            assert_eq!(*r, 0.0);
        } else {
            assert!(*r < 0.0);
        }
    }
    let total: f64 = residual.iter().sum();
    assert!((total + 0.3).abs() < 1e-14);
}

#[test]
fn uniform_flux_on_cylinder() {
    let disc = unit_cylinder(2.0, 4, 16).discretize().unwrap();
    let rel = air();
    let q = 0.6;
    let field = DiscreteField::linear_ramp(disc.mesh(), q);
    let want = rel.momentum(q).unwrap() * 1.0;
    for station in [-1.9, -0.3, 0.0, 1.2, 1.99] {
        let flux = disc.flux_through_section(&field, station).unwrap();
        assert!((flux - want).abs() < 1e-13);
    }
    assert!(matches!(
        disc.flux_through_section(&field, 2.0),
        Err(Error::StationOutOfRange { .. })
    ));
    assert!(disc.flux_through_section(&field, -2.5).is_err());
}

#[test]
fn jacobian_is_symmetric_and_positive_definite() {
    let disc = tanh_nozzle(2.0, 6, 24).discretize().unwrap();
    for seed in 0..5 {
        let field = random_field(&disc, 100 + seed, 4.0);
        let (q2, _) = disc.max_speed_squared(&field);
        assert!(q2 > 1.0, "field should reach the truncation region");
        let (_, sys) = disc.residual_jacobian(&field, 0.4);
        assert!(sys.matrix.max_asymmetry() < 1e-12);
        let out = pcg(&sys.matrix, &sys.rhs, 1e-12, 5000).unwrap();
        assert!(out.converged && out.ritz_min > 0.0);
    }
}

#[test]
fn three_dimensional_assembly_is_consistent() {
    let mut spec = tanh_nozzle(1.0, 2, 4);
    spec.profile = nozzleflow::nozzle::Profile::gaussian_throat(3, 1.0, 0.3, 0.8).unwrap();
    let disc = spec.discretize().unwrap();
    let field = random_field(&disc, 9, 1.5);
    let m0 = 0.2;
    let residual = disc.residual(&field, m0);
    let free = disc.mesh().nodes_per_section();
    let h = 1e-6;
    let mut worst = 0.0f64;
    for i in free..disc.mesh().node_count() {
        let mut plus = field.clone();
        plus.values_mut()[i] += h;
        let mut minus = field.clone();
        minus.values_mut()[i] -= h;
        let fd = (disc.energy(&plus, m0) - disc.energy(&minus, m0)) / (2.0 * h);
        worst = worst.max((fd - residual[i]).abs());
    }
    assert!(worst / max_abs(&residual) < 1e-6, "{worst}");
}
