//! Diagnostics computed from solved fields.

mod sweep;

pub use sweep::{
    choke_bound, critical_flux_search, flux_sweep, CriticalFluxBracket, SweepPoint, SweepResult,
    DEFAULT_DELTA0_SCHEDULE,
};

use crate::error::{Error, Result};
use crate::mesh_fem::{DiscreteField, Discretization};
use crate::nozzle::Side;
use crate::solver::{newton_solve, NewtonConfig, SolverReport};

/// Largest quadrature-point speed and the corresponding Mach number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedSummary {
    pub max_speed: f64,
    pub location: [f64; 3],
    /// `None` when the speed lies beyond the vacuum limit.
    pub max_mach: Option<f64>,
    pub subsonic: bool,
}

pub fn max_speed_and_mach(disc: &Discretization, field: &DiscreteField) -> SpeedSummary {
    let (q2, location) = disc.max_speed_squared(field);
    let q = q2.sqrt();
    let max_mach = disc.energy_density().theta().base().mach(q).ok();
    SpeedSummary {
        max_speed: q,
        location,
        max_mach,
        subsonic: q < 1.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FarFieldProbe {
    pub side: Side,
    /// Axial station of the midplane actually sampled.
    pub station: f64,
    /// Section-averaged axial velocity.
    pub mean_axial: f64,
    /// Largest transverse velocity magnitude over the section.
    pub transverse_sup: f64,
    /// Far-field speed on this side.
    pub reference: f64,
    /// `|mean_axial − reference|`.
    pub deviation: f64,
}

impl FarFieldProbe {
    /// Deviation relative to the reference speed (zero when both vanish).
    pub fn relative_deviation(&self) -> f64 {
        relative(self.deviation, self.reference)
    }

    pub fn relative_transverse(&self) -> f64 {
        relative(self.transverse_sup, self.reference)
    }
}

fn relative(value: f64, reference: f64) -> f64 {
    if reference > 0.0 {
        value / reference
    } else if value == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldReport {
    pub q_minus: f64,
    pub q_plus: f64,
    pub probes: Vec<FarFieldProbe>,
}

impl FarFieldReport {
    pub fn worst_relative_deviation(&self) -> f64 {
        self.probes
            .iter()
            .map(FarFieldProbe::relative_deviation)
            .fold(0.0, f64::max)
    }

    pub fn worst_relative_transverse(&self) -> f64 {
        self.probes
            .iter()
            .map(FarFieldProbe::relative_transverse)
            .fold(0.0, f64::max)
    }
}

/// Compares section averages at `x_n = ±(L − offset)` with the uniform
/// far-field speeds `q±` solving `ρ(q±²)q± = m₀/|S±|`.
pub fn far_field_check(
    disc: &Discretization,
    field: &DiscreteField,
    m0: f64,
    offsets: &[f64],
) -> Result<FarFieldReport> {
    let rel = disc.energy_density().theta().base();
    let map = disc.map();
    let q_minus = rel.solve_q_from_flux(m0 / map.far_field_measure(Side::Upstream))?;
    let q_plus = rel.solve_q_from_flux(m0 / map.far_field_measure(Side::Downstream))?;
    let half = disc.mesh().half_length();
    let dim = disc.mesh().dim();
    let mut probes = Vec::with_capacity(2 * offsets.len());
    for &offset in offsets {
        for (side, sign, reference) in [
            (Side::Upstream, -1.0, q_minus),
            (Side::Downstream, 1.0, q_plus),
        ] {
            let samples = disc.section_samples(field, sign * (half - offset))?;
            let mut mean = 0.0;
            let mut transverse_sup: f64 = 0.0;
            for p in &samples.points {
                mean += p.weight * p.gradient[dim - 1];
                let t2: f64 = p.gradient[..dim - 1].iter().map(|g| g * g).sum();
                transverse_sup = transverse_sup.max(t2.sqrt());
            }
            mean /= samples.measure;
            probes.push(FarFieldProbe {
                side,
                station: samples.station,
                mean_axial: mean,
                transverse_sup,
                reference,
                deviation: (mean - reference).abs(),
            });
        }
    }
    Ok(FarFieldReport {
        q_minus,
        q_plus,
        probes,
    })
}

#[derive(Debug, Clone)]
pub struct UniquenessReport {
    /// `sup |∇φ₁ − ∇φ₂|` over quadrature points.
    pub discrepancy: f64,
    pub from_zero: SolverReport,
    pub from_ramp: SolverReport,
}

impl UniquenessReport {
    pub fn both_certified(&self) -> bool {
        self.from_zero.truncation_certified && self.from_ramp.truncation_certified
    }
}

/// Solves from the zero field and from the ramp `φ = (m₀/|S₊|)(x_n + L)` and
/// compares the gradients.
pub fn uniqueness_check(
    disc: &Discretization,
    m0: f64,
    config: &NewtonConfig,
) -> Result<UniquenessReport> {
    let slope = m0 / disc.map().far_field_measure(Side::Downstream);
    let (a, from_zero) = newton_solve(disc, m0, DiscreteField::zeros(disc.mesh()), config)?;
    let ramp = DiscreteField::linear_ramp(disc.mesh(), slope);
    let (b, from_ramp) = newton_solve(disc, m0, ramp, config)?;
    Ok(UniquenessReport {
        discrepancy: gradient_discrepancy(disc, &a, &b),
        from_zero,
        from_ramp,
    })
}

/// `sup |∇a − ∇b|` over quadrature points.
pub fn gradient_discrepancy(disc: &Discretization, a: &DiscreteField, b: &DiscreteField) -> f64 {
    let sa = disc.quadrature_samples(a);
    let sb = disc.quadrature_samples(b);
    sa.iter()
        .zip(&sb)
        .map(|(x, y)| {
            x.gradient
                .iter()
                .zip(&y.gradient)
                .map(|(g, h)| (g - h) * (g - h))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalAverage {
    /// Largest window mean of `|∇φ|²`.
    pub worst: f64,
    /// Center of the worst window.
    pub center: f64,
    /// `worst / m₀²`, zero when `m₀ = 0`.
    pub ratio: f64,
}

/// Means of `|∇φ|²` over the windows `|x_n − x₀| < 1`, with `x₀` running over
/// the axial cell midplanes whose window fits inside the domain.
pub fn local_average_diagnostic(
    disc: &Discretization,
    field: &DiscreteField,
    m0: f64,
) -> Result<LocalAverage> {
    let mesh = disc.mesh();
    let half = mesh.half_length();
    if half < 1.0 {
        return Err(Error::domain("domain.L", half, "[1, inf)"));
    }
    // Per axial cell: (∫|∇φ|², volume); windows are unions of cells.
    let cps = mesh.cells_per_section();
    let mut per_cell = vec![(0.0, 0.0); mesh.axial_cells()];
    for s in disc.quadrature_samples(field) {
        let k = s.cell / cps;
        let g2: f64 = s.gradient.iter().map(|g| g * g).sum();
        per_cell[k].0 += s.weight * g2;
        per_cell[k].1 += s.weight;
    }
    let h = mesh.axial_spacing();
    let tol = 1e-9 * h;
    let mut worst = 0.0;
    let mut center = 0.0;
    for k in 0..mesh.axial_cells() {
        let x0 = mesh.axial_midplane(k);
        if x0.abs() > half - 1.0 + tol {
            continue;
        }
        let (mut num, mut vol) = (0.0, 0.0);
        for (j, (a, v)) in per_cell.iter().enumerate() {
            if (mesh.axial_midplane(j) - x0).abs() < 1.0 {
                num += a;
                vol += v;
            }
        }
        let mean = num / vol;
        if mean > worst {
            worst = mean;
            center = x0;
        }
    }
    let ratio = if m0 > 0.0 { worst / (m0 * m0) } else { 0.0 };
    Ok(LocalAverage {
        worst,
        center,
        ratio,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlabRatio {
    /// The slab is `start ≤ x_n < start + 1`.
    pub start: f64,
    /// Largest `‖f − mean‖₂ / ‖∇f‖₂` over the sampled fields.
    pub worst: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoincareReport {
    pub slabs: Vec<SlabRatio>,
    pub worst: f64,
}

impl PoincareReport {
    /// Ratio of the largest to the smallest slab value.
    pub fn spread(&self) -> f64 {
        let lo = self
            .slabs
            .iter()
            .map(|s| s.worst)
            .fold(f64::INFINITY, f64::min);
        self.worst / lo
    }
}

/// Per unit slab, the worst Poincaré ratio `‖f − f̄‖₂ / ‖∇f‖₂` over `fields`.
/// Slabs start at `−L` and the last one ends at or before `L`; fields with
/// zero gradient on a slab are skipped there.
pub fn poincare_diagnostic(disc: &Discretization, fields: &[DiscreteField]) -> PoincareReport {
    let mesh = disc.mesh();
    let half = mesh.half_length();
    let h = mesh.axial_spacing();
    let slab_count = ((2.0 * half + 1e-9 * h).floor() as usize).max(1);
    let slab_of = |xn: f64| -> Option<usize> {
        let s = ((xn + half) / 1.0).floor();
        (s >= 0.0 && (s as usize) < slab_count).then_some(s as usize)
    };
    let mut worst = vec![0.0f64; slab_count];
    for field in fields {
        let samples = disc.quadrature_samples(field);
        let mut sums = vec![[0.0f64; 3]; slab_count];
        for s in &samples {
            if let Some(i) = slab_of(s.x[mesh.dim() - 1]) {
                sums[i][0] += s.weight;
                sums[i][1] += s.weight * s.value;
            }
        }
        let means: Vec<f64> = sums.iter().map(|s| s[1] / s[0]).collect();
        let mut norms = vec![[0.0f64; 2]; slab_count];
        for s in &samples {
            if let Some(i) = slab_of(s.x[mesh.dim() - 1]) {
                let d = s.value - means[i];
                let g2: f64 = s.gradient.iter().map(|g| g * g).sum();
                norms[i][0] += s.weight * d * d;
                norms[i][1] += s.weight * g2;
            }
        }
        for (w, n) in worst.iter_mut().zip(&norms) {
            if n[1] > 0.0 {
                *w = w.max((n[0] / n[1]).sqrt());
            }
        }
    }
    let slabs: Vec<SlabRatio> = worst
        .iter()
        .enumerate()
        .map(|(i, &w)| SlabRatio {
            start: -half + i as f64,
            worst: w,
        })
        .collect();
    let worst = slabs.iter().map(|s| s.worst).fold(0.0, f64::max);
    PoincareReport { slabs, worst }
}
