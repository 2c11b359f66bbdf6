use crate::error::{Error, Result};
use crate::mesh_fem::{DiscreteField, Mesh};
use crate::problem::ProblemSpec;
use crate::solver::{newton_solve, NewtonConfig, SolverReport};

/// One domain length in a continuation run.
#[derive(Debug, Clone)]
pub struct ContinuationStep {
    pub half_length: f64,
    pub axial_cells: usize,
    pub field: DiscreteField,
    pub report: SolverReport,
    /// `max |∇φ_new − ∇φ_prev|` over quadrature points in cells inside the
    /// comparison window; `None` for the first step.
    pub interior_change: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ContinuationReport {
    /// Half-width of the window `|x_n| ≤ window` used for comparisons.
    pub window: f64,
    pub steps: Vec<ContinuationStep>,
}

fn axial_shift(old: &Mesh, new: &Mesh) -> Result<usize> {
    let h = old.axial_spacing();
    let raw = (new.half_length() - old.half_length()) / h;
    let shift = raw.round();
    if shift < 0.0 || (raw - shift).abs() > 1e-9 || (new.axial_spacing() - h).abs() > 1e-12 * h {
        return Err(Error::InvalidResolution(format!(
            "half-length {} is not reachable from {} with axial spacing {}",
            new.half_length(),
            old.half_length(),
            h
        )));
    }
    Ok(shift as usize)
}

/// Transfers `field` from `old` to the longer mesh `new` with the same
/// spacing: the old values are kept in the middle (shifted so the new inlet
/// stays at zero) and extended by constant axial gradient at both ends.
pub fn extend_field(old: &Mesh, field: &DiscreteField, new: &Mesh) -> Result<DiscreteField> {
    if old.dim() != new.dim() || old.transverse_cells() != new.transverse_cells() {
        return Err(Error::InvalidResolution(
            "continuation requires the same transverse mesh".into(),
        ));
    }
    let shift = axial_shift(old, new)?;
    let h = old.axial_spacing();
    let nps = old.nodes_per_section();
    let n_old = old.axial_cells();
    let v = field.values();
    let mut values = vec![0.0; new.node_count()];
    for p in 0..nps {
        let at = |k: usize| v[k * nps + p];
        let inlet_slope = (at(1) - at(0)) / h;
        let outlet_slope = (at(n_old) - at(n_old - 1)) / h;
        let lift = inlet_slope * shift as f64 * h;
        for k in 0..=new.axial_cells() {
            values[k * nps + p] = if k < shift {
                inlet_slope * k as f64 * h
            } else if k - shift <= n_old {
                at(k - shift) + lift
            } else {
                at(n_old) + lift + outlet_slope * (k - shift - n_old) as f64 * h
            };
        }
    }
    Ok(DiscreteField::from_values(new, values))
}

/// Solves at increasing half-lengths with fixed mesh spacing, warm-starting
/// each solve from the extended previous solution, and measures how much the
/// gradient changes on `|x_n| ≤ L₁/2`.
pub fn continue_in_length(
    spec: &ProblemSpec,
    m0: f64,
    half_lengths: &[f64],
    config: &NewtonConfig,
) -> Result<ContinuationReport> {
    let Some(&first) = half_lengths.first() else {
        return Err(Error::InvalidResolution(
            "empty half-length schedule".into(),
        ));
    };
    if half_lengths.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidResolution(
            "half-lengths must be strictly increasing".into(),
        ));
    }
    let window = 0.5 * first;
    let mut steps: Vec<ContinuationStep> = Vec::new();
    let mut previous: Option<(crate::mesh_fem::Discretization, DiscreteField)> = None;
    for &half_length in half_lengths {
        let current = spec.with_half_length(half_length);
        let disc = current.discretize()?;
        let init = match &previous {
            None => DiscreteField::zeros(disc.mesh()),
            Some((old, field)) => extend_field(old.mesh(), field, disc.mesh())?,
        };
        let (field, report) = newton_solve(&disc, m0, init, config)?;
        let interior_change = match &previous {
            None => None,
            Some((old, old_field)) => Some(gradient_change(old, old_field, &disc, &field, window)?),
        };
        steps.push(ContinuationStep {
            half_length,
            axial_cells: current.axial_cells,
            field: field.clone(),
            report,
            interior_change,
        });
        previous = Some((disc, field));
    }
    Ok(ContinuationReport { window, steps })
}

fn gradient_change(
    old: &crate::mesh_fem::Discretization,
    old_field: &DiscreteField,
    new: &crate::mesh_fem::Discretization,
    new_field: &DiscreteField,
    window: f64,
) -> Result<f64> {
    let shift = axial_shift(old.mesh(), new.mesh())?;
    let cps = new.mesh().cells_per_section();
    let a = old.quadrature_samples(old_field);
    let b = new.quadrature_samples(new_field);
    let nqp = b.len() / new.mesh().cell_count();
    let h = new.mesh().axial_spacing();
    let mut worst: f64 = 0.0;
    for k in 0..new.mesh().axial_cells() {
        let mid = new.mesh().axial_midplane(k);
        if mid.abs() + 0.5 * h > window + 1e-12 || k < shift {
            continue;
        }
        for c in 0..cps {
            for q in 0..nqp {
                let gb = b[(k * cps + c) * nqp + q].gradient;
                let ga = a[((k - shift) * cps + c) * nqp + q].gradient;
                let d = gb
                    .iter()
                    .zip(&ga)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
                worst = worst.max(d);
            }
        }
    }
    Ok(worst)
}
