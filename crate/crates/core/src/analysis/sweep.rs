use crate::error::{Error, Result};
use crate::mesh_fem::{DiscreteField, Discretization};
use crate::problem::ProblemSpec;
use crate::solver::{newton_solve, NewtonConfig};

/// Truncation parameters used by [`critical_flux_search`] by default; the
/// certified speed limits are `√0.8`, `√0.9` and `√0.95`.
pub const DEFAULT_DELTA0_SCHEDULE: [f64; 3] = [0.10, 0.05, 0.025];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub m0: f64,
    pub delta0: f64,
    pub converged: bool,
    /// `Q(m₀)`; NaN when the solve failed.
    pub max_speed: f64,
    pub certified: bool,
    /// `max |flux − m₀|` over stations; NaN when the solve failed.
    pub flux_error: f64,
    pub iterations: usize,
}

impl SweepPoint {
    fn failed(m0: f64, delta0: f64) -> Self {
        Self {
            m0,
            delta0,
            converged: false,
            max_speed: f64::NAN,
            certified: false,
            flux_error: f64::NAN,
            iterations: 0,
        }
    }
}

/// Bisection result for one truncation parameter: `m_lo` converged and
/// certified, `m_hi` did not.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalFluxBracket {
    pub delta0: f64,
    pub m_lo: f64,
    pub m_hi: f64,
    /// Every solve made for this bracket, ordered by `m₀`.
    pub points: Vec<SweepPoint>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    /// Plain sweep points ordered by `m₀` (empty for a bracket search).
    pub points: Vec<SweepPoint>,
    pub brackets: Vec<CriticalFluxBracket>,
    pub schedule: Vec<f64>,
}

impl SweepResult {
    /// Critical-flux estimate `(m_lo, m_hi − m_lo)` from the last bracket.
    pub fn estimate(&self) -> Option<(f64, f64)> {
        self.brackets.last().map(|b| (b.m_lo, b.m_hi - b.m_lo))
    }

    /// Whether `m_lo` never drops by more than `tol` along the schedule.
    pub fn brackets_nested(&self, tol: f64) -> bool {
        self.brackets
            .windows(2)
            .all(|w| w[1].m_lo >= w[0].m_lo - tol)
    }

    /// All certified points, from the sweep and from the brackets.
    pub fn certified_points(&self) -> impl Iterator<Item = &SweepPoint> {
        self.points
            .iter()
            .chain(self.brackets.iter().flat_map(|b| b.points.iter()))
            .filter(|p| p.certified)
    }
}

/// Upper bound on any subsonic flux: the smallest section measure along the
/// domain times the maximum of the momentum `ρ(q²)q`, which is one.
pub fn choke_bound(disc: &Discretization) -> f64 {
    let mesh = disc.mesh();
    (0..=mesh.axial_cells())
        .map(|k| disc.map().section_measure(mesh.axial_coordinate(k)))
        .fold(f64::INFINITY, f64::min)
}

fn solve_point(
    disc: &Discretization,
    m0: f64,
    init: &DiscreteField,
    config: &NewtonConfig,
) -> (SweepPoint, Option<DiscreteField>) {
    let delta0 = disc.energy_density().theta().delta0();
    match newton_solve(disc, m0, init.clone(), config) {
        Ok((field, report)) => (
            SweepPoint {
                m0,
                delta0,
                converged: true,
                max_speed: report.max_speed,
                certified: report.truncation_certified,
                flux_error: report.flux_error,
                iterations: report.iterations,
            },
            Some(field),
        ),
        Err(_) => (SweepPoint::failed(m0, delta0), None),
    }
}

/// Solves at each flux in increasing order, warm-starting from the previous
/// converged field. Failed solves are recorded, not propagated.
pub fn flux_sweep(
    disc: &Discretization,
    fluxes: &[f64],
    config: &NewtonConfig,
) -> Result<SweepResult> {
    if fluxes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config {
            line: 0,
            key: "sweep.m0".into(),
            message: "fluxes must be strictly increasing".into(),
        });
    }
    config.validate()?;
    let mut init = DiscreteField::zeros(disc.mesh());
    let mut points = Vec::with_capacity(fluxes.len());
    for &m0 in fluxes {
        let (point, field) = solve_point(disc, m0, &init, config);
        if let Some(f) = field {
            init = f;
        }
        points.push(point);
    }
    Ok(SweepResult {
        points,
        brackets: Vec::new(),
        schedule: vec![disc.energy_density().theta().delta0()],
    })
}

/// Bisects, for each truncation parameter in `schedule`, on the largest flux
/// whose solve converges and certifies. Each search starts from the previous
/// `m_lo` so the brackets are nested, and every solve is warm-started from
/// the last certified field.
pub fn critical_flux_search(
    spec: &ProblemSpec,
    schedule: &[f64],
    bisections: usize,
    config: &NewtonConfig,
) -> Result<SweepResult> {
    if schedule.is_empty() || schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config {
            line: 0,
            key: "critical.delta0_schedule".into(),
            message: "schedule must be non-empty and strictly decreasing".into(),
        });
    }
    config.validate()?;
    let mut brackets: Vec<CriticalFluxBracket> = Vec::with_capacity(schedule.len());
    let mut carried: Option<DiscreteField> = None;
    for &delta0 in schedule {
        let disc = spec.with_delta0(delta0).discretize()?;
        let mut hi = choke_bound(&disc);
        let mut points = Vec::new();
        let (mut lo, mut lo_field) = match (brackets.last(), carried.take()) {
            (Some(prev), Some(field)) => {
                // A certified solution stays certified under a smaller δ̃₀,
                // but re-solve so the warm start belongs to this surrogate.
                let (point, solved) = solve_point(&disc, prev.m_lo, &field, config);
                points.push(point);
                match solved.filter(|_| point.certified) {
                    Some(f) => (prev.m_lo, f),
                    None => (0.0, DiscreteField::zeros(disc.mesh())),
                }
            }
            _ => {
                let probe = 1e-3 * hi;
                let zero = DiscreteField::zeros(disc.mesh());
                let (point, solved) = solve_point(&disc, probe, &zero, config);
                points.push(point);
                if !point.certified || solved.is_none() {
                    return Err(Error::Bracket { m0: probe });
                }
                (probe, solved.unwrap())
            }
        };
        for _ in 0..bisections {
            let mid = 0.5 * (lo + hi);
            let (point, solved) = solve_point(&disc, mid, &lo_field, config);
            points.push(point);
            match solved.filter(|_| point.certified) {
                Some(f) => {
                    lo = mid;
                    lo_field = f;
                }
                None => hi = mid,
            }
        }
        points.sort_by(|a, b| a.m0.total_cmp(&b.m0));
        brackets.push(CriticalFluxBracket {
            delta0,
            m_lo: lo,
            m_hi: hi,
            points,
        });
        carried = Some(lo_field);
    }
    Ok(SweepResult {
        points: Vec::new(),
        brackets,
        schedule: schedule.to_vec(),
    })
}
