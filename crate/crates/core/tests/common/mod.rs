#![allow(dead_code)]

use nozzleflow::gas::{DensityRelation, GasLaw};
use nozzleflow::mesh_fem::{DiscreteField, Discretization};
use nozzleflow::nozzle::Profile;
use nozzleflow::ProblemSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const GAMMA: f64 = 1.4;

pub fn air() -> DensityRelation {
    DensityRelation::new(GasLaw::new(GAMMA).unwrap())
}

/// Half-width 0.5 cylinder in 2D, so |S| = 1.
pub fn unit_cylinder(half_length: f64, n_t: usize, n_a: usize) -> ProblemSpec {
    ProblemSpec {
        gamma: GAMMA,
        delta0: 0.05,
        profile: Profile::cylinder(2, 0.5).unwrap(),
        half_length,
        transverse_cells: n_t,
        axial_cells: n_a,
    }
}

pub fn tanh_nozzle(half_length: f64, n_t: usize, n_a: usize) -> ProblemSpec {
    ProblemSpec {
        gamma: GAMMA,
        delta0: 0.05,
        profile: Profile::tanh_expansion(2, 0.5, 1.0, 1.0).unwrap(),
        half_length,
        transverse_cells: n_t,
        axial_cells: n_a,
    }
}

/// Random coefficients whose gradients reach a few times `scale`.
pub fn random_field(disc: &Discretization, seed: u64, scale: f64) -> DiscreteField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mesh = disc.mesh();
    let h = mesh.axial_spacing().min(mesh.transverse_spacing());
    let values = (0..mesh.node_count())
        .map(|_| rng.gen_range(-1.0..1.0) * scale * h)
        .collect();
    DiscreteField::from_values(mesh, values)
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

pub fn gaussian_throat(half_length: f64, n_t: usize, n_a: usize) -> ProblemSpec {
    ProblemSpec {
        gamma: GAMMA,
        delta0: 0.05,
        profile: Profile::gaussian_throat(2, 0.5, 0.15, 1.0).unwrap(),
        half_length,
        transverse_cells: n_t,
        axial_cells: n_a,
    }
}
