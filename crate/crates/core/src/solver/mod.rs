//! Nonlinear solution of the discrete energy minimization.

mod continuation;
mod newton;

pub use continuation::{continue_in_length, extend_field, ContinuationReport, ContinuationStep};
pub use newton::{newton_solve, LinearSolverKind, NewtonConfig, SolverReport};

use crate::mesh_fem::{DiscreteField, Discretization};

/// Whether a discrete solution stays inside the range where the truncated
/// density coincides with the physical one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certification {
    /// `Q = max |∇φ|` over quadrature points.
    pub max_speed: f64,
    /// Physical location of the maximum.
    pub location: [f64; 3],
    /// `1 − 2δ̃₀`.
    pub limit: f64,
    /// `limit − Q²`; negative when uncertified.
    pub margin: f64,
    /// `Q² ≤ limit` and `Θ(|∇φ|²) = ρ(|∇φ|²)` at every quadrature point.
    pub certified: bool,
}

/// Checks `Q² ≤ 1 − 2δ̃₀` and that the truncated and physical densities
/// agree at every quadrature point of `field`.
pub fn certify_subsonic(disc: &Discretization, field: &DiscreteField) -> Certification {
    let theta = disc.energy_density().theta();
    let limit = theta.certified_limit();
    let samples = disc.quadrature_samples(field);
    let mut q2_max = 0.0;
    let mut location = [0.0; 3];
    let mut agree = true;
    for s in &samples {
        let q2: f64 = s.gradient.iter().map(|g| g * g).sum();
        if q2 > q2_max {
            q2_max = q2;
            location = s.x;
        }
        if q2 <= limit {
            agree &= theta
                .base()
                .density(q2)
                .is_ok_and(|rho| rho == theta.theta(q2));
        }
    }
    let margin = limit - q2_max;
    Certification {
        max_speed: q2_max.sqrt(),
        location,
        limit,
        margin,
        certified: margin >= 0.0 && agree,
    }
}
