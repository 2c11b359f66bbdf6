//! Nozzle geometry and the straightening map onto the reference cylinder.
//!
//! A nozzle is described by a positive half-width `r(x_n)` and a centerline
//! offset `c(x_n)`. The map `T(x) = ((x' − c(x_n)) / r(x_n), x_n)` takes the
//! physical nozzle onto `(−1, 1)^{n−1} × ℝ` and preserves axial stations,
//! so every cross-section `{x_n = k}` goes to `{y_n = k}`.

use crate::error::{Error, Result};

const EDGE_TOL: f64 = 1e-12;

/// Far-field side of the nozzle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `x_n → −∞`.
    Upstream,
    /// `x_n → +∞`.
    Downstream,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileShape {
    Cylinder {
        radius: f64,
    },
    /// `r(x) = r− + (r+ − r−)(1 + tanh(x/ℓ))/2`.
    TanhExpansion {
        r_minus: f64,
        r_plus: f64,
        length: f64,
    },
    /// `r(x) = r0 − d·exp(−x²/w²)`.
    GaussianThroat {
        radius: f64,
        depth: f64,
        width: f64,
    },
}

/// Centerline offset `c(x_n) ∈ ℝ^{n−1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Centerline {
    Straight,
    /// `c(x) = shift·(1 + tanh(x/ℓ))/2`, a smooth lateral jog.
    TanhShift {
        shift: [f64; 2],
        length: f64,
    },
}

/// Value and first two derivatives of a scalar profile function.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub value: f64,
    pub slope: f64,
    pub curvature: f64,
}

fn tanh_jet(lo: f64, hi: f64, length: f64, x: f64) -> Jet {
    let t = (x / length).tanh();
    let span = hi - lo;
    let sech2 = 1.0 - t * t;
    Jet {
        value: lo + 0.5 * span * (1.0 + t),
        slope: 0.5 * span * sech2 / length,
        curvature: -span * t * sech2 / (length * length),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profile {
    dim: usize,
    shape: ProfileShape,
    centerline: Centerline,
}

impl Profile {
    pub fn new(dim: usize, shape: ProfileShape) -> Result<Self> {
        if !(dim == 2 || dim == 3) {
            return Err(Error::Geometry(format!(
                "dimension must be 2 or 3, got {dim}"
            )));
        }
        let finite_positive = |v: f64| v.is_finite() && v > 0.0;
        let ok = match shape {
            ProfileShape::Cylinder { radius } => finite_positive(radius),
            ProfileShape::TanhExpansion {
                r_minus,
                r_plus,
                length,
            } => finite_positive(r_minus) && finite_positive(r_plus) && finite_positive(length),
            ProfileShape::GaussianThroat {
                radius,
                depth,
                width,
            } => {
                finite_positive(radius)
                    && depth.is_finite()
                    && depth >= 0.0
                    && finite_positive(width)
            }
        };
        if !ok {
            return Err(Error::Geometry(format!(
                "invalid profile parameters {shape:?}"
            )));
        }
        Ok(Self {
            dim,
            shape,
            centerline: Centerline::Straight,
        })
    }

    pub fn cylinder(dim: usize, radius: f64) -> Result<Self> {
        Self::new(dim, ProfileShape::Cylinder { radius })
    }

    pub fn tanh_expansion(dim: usize, r_minus: f64, r_plus: f64, length: f64) -> Result<Self> {
        Self::new(
            dim,
            ProfileShape::TanhExpansion {
                r_minus,
                r_plus,
                length,
            },
        )
    }

    /// Throat of depth `d` below `r0`. A depth `d ≥ r0` is accepted here so
    /// that [`verify_regularity`] can report it; [`NozzleMap::new`] rejects it.
    pub fn gaussian_throat(dim: usize, radius: f64, depth: f64, width: f64) -> Result<Self> {
        Self::new(
            dim,
            ProfileShape::GaussianThroat {
                radius,
                depth,
                width,
            },
        )
    }

    pub fn with_centerline(mut self, centerline: Centerline) -> Result<Self> {
        if let Centerline::TanhShift { shift, length } = centerline {
            if !(length > 0.0) || !shift.iter().all(|s| s.is_finite()) {
                return Err(Error::Geometry("invalid centerline parameters".into()));
            }
        }
        self.centerline = centerline;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> ProfileShape {
        self.shape
    }

    pub fn centerline(&self) -> Centerline {
        self.centerline
    }

    pub fn radius(&self, x: f64) -> f64 {
        self.radius_jet(x).value
    }

    pub fn radius_jet(&self, x: f64) -> Jet {
        match self.shape {
            ProfileShape::Cylinder { radius } => Jet {
                value: radius,
                ..Jet::default()
            },
            ProfileShape::TanhExpansion {
                r_minus,
                r_plus,
                length,
            } => tanh_jet(r_minus, r_plus, length, x),
            ProfileShape::GaussianThroat {
                radius,
                depth,
                width,
            } => {
                let w2 = width * width;
                let e = (-x * x / w2).exp();
                Jet {
                    value: radius - depth * e,
                    slope: depth * e * 2.0 * x / w2,
                    curvature: depth * e * (2.0 / w2 - 4.0 * x * x / (w2 * w2)),
                }
            }
        }
    }

    /// Centerline offset jets, one per transverse coordinate.
    pub fn offset_jet(&self, x: f64) -> [Jet; 2] {
        match self.centerline {
            Centerline::Straight => [Jet::default(); 2],
            Centerline::TanhShift { shift, length } => [
                tanh_jet(0.0, shift[0], length, x),
                tanh_jet(0.0, shift[1], length, x),
            ],
        }
    }

    pub fn far_field_radius(&self, side: Side) -> f64 {
        match (self.shape, side) {
            (ProfileShape::Cylinder { radius }, _) => radius,
            (ProfileShape::TanhExpansion { r_minus, .. }, Side::Upstream) => r_minus,
            (ProfileShape::TanhExpansion { r_plus, .. }, Side::Downstream) => r_plus,
            (ProfileShape::GaussianThroat { radius, .. }, _) => radius,
        }
    }

    /// Axial interval outside which `r` approaches its limits monotonically.
    /// All built-in shapes are monotone on either side of the origin.
    pub fn transition_interval(&self) -> (f64, f64) {
        (0.0, 0.0)
    }

    /// Cross-section measure for a half-width `r`: `2r` in 2D, `4r²` in 3D
    /// (square sections).
    pub fn measure_for_radius(&self, r: f64) -> f64 {
        (2.0 * r).powi(self.dim as i32 - 1)
    }
}

/// Derivative data of the straightening map at a reference point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapJacobian {
    /// `σ_ij = ∂y_j/∂x_i`; only the leading `n × n` block is meaningful.
    pub sigma: [[f64; 3]; 3],
    /// Determinant of `∂x/∂y`, i.e. `r(y_n)^{n−1}`.
    pub det: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NozzleMap {
    profile: Profile,
}

impl NozzleMap {
    pub fn new(profile: Profile) -> Result<Self> {
        if let ProfileShape::GaussianThroat { radius, depth, .. } = profile.shape {
            if depth >= radius {
                return Err(Error::Geometry(format!(
                    "throat depth {depth} pinches the nozzle (radius {radius})"
                )));
            }
        }
        Ok(Self { profile })
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn dim(&self) -> usize {
        self.profile.dim
    }

    pub fn map_forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if x.len() != n {
            return Err(Error::OutOfDomain {
                point: x.to_vec(),
                domain: "physical nozzle (wrong dimension)",
            });
        }
        let xn = x[n - 1];
        let r = self.profile.radius(xn);
        let c = self.profile.offset_jet(xn);
        let mut y = x.to_vec();
        for i in 0..n - 1 {
            y[i] = (x[i] - c[i].value) / r;
            if y[i].abs() > 1.0 + EDGE_TOL || !y[i].is_finite() {
                return Err(Error::OutOfDomain {
                    point: x.to_vec(),
                    domain: "physical nozzle",
                });
            }
        }
        Ok(y)
    }

    pub fn map_inverse(&self, y: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if y.len() != n
            || y[..n - 1]
                .iter()
                .any(|v| v.abs() > 1.0 + EDGE_TOL || !v.is_finite())
        {
            return Err(Error::OutOfDomain {
                point: y.to_vec(),
                domain: "reference cylinder",
            });
        }
        Ok(self.inverse_unchecked(y))
    }

    pub(crate) fn inverse_unchecked(&self, y: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let yn = y[n - 1];
        let r = self.profile.radius(yn);
        let c = self.profile.offset_jet(yn);
        let mut x = y.to_vec();
        for i in 0..n - 1 {
            x[i] = r * y[i] + c[i].value;
        }
        x
    }

    /// `σ_ij = ∂y_j/∂x_i` at reference point `y` (transverse entries beyond
    /// the dimension are ignored).
    pub fn jacobian(&self, y: &[f64]) -> MapJacobian {
        let n = self.dim();
        let yn = y[n - 1];
        let r = self.profile.radius_jet(yn);
        let c = self.profile.offset_jet(yn);
        let mut sigma = [[0.0; 3]; 3];
        for i in 0..n - 1 {
            sigma[i][i] = 1.0 / r.value;
            sigma[n - 1][i] = -(c[i].slope + y[i] * r.slope) / r.value;
        }
        sigma[n - 1][n - 1] = 1.0;
        MapJacobian {
            sigma,
            det: r.value.powi(n as i32 - 1),
        }
    }

    /// `|S_{x_n}|`, the measure of the physical cross-section at `x_n`.
    pub fn section_measure(&self, xn: f64) -> f64 {
        self.profile.measure_for_radius(self.profile.radius(xn))
    }

    /// `|S±|`.
    pub fn far_field_measure(&self, side: Side) -> f64 {
        self.profile
            .measure_for_radius(self.profile.far_field_radius(side))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    pub passes: bool,
    pub inf_radius: f64,
    pub sup_radius: f64,
    /// Largest sampled bound on first and second derivatives of `T` and `T⁻¹`.
    pub map_bound: f64,
    pub worst_station: f64,
    pub far_field_monotone: bool,
}

/// Samples the profile on `samples + 1` stations of `[−half_range, half_range]`
/// and checks the map stays bi-regular with derivative bound `k`.
pub fn verify_regularity(
    profile: &Profile,
    k: f64,
    half_range: f64,
    samples: usize,
) -> RegularityReport {
    let n = samples.max(2);
    let mut inf_r = f64::INFINITY;
    let mut sup_r = f64::NEG_INFINITY;
    let mut bound = 0.0f64;
    let mut worst = 0.0;
    let mut worst_val = f64::NEG_INFINITY;
    let (t_lo, t_hi) = profile.transition_interval();
    let mut monotone = true;
    let mut prev_gap_down: Option<f64> = None;
    let r_minus = profile.far_field_radius(Side::Upstream);
    let r_plus = profile.far_field_radius(Side::Downstream);

    for s in 0..=n {
        let x = -half_range + 2.0 * half_range * s as f64 / n as f64;
        let r = profile.radius_jet(x);
        let c = profile.offset_jet(x);
        inf_r = inf_r.min(r.value);
        sup_r = sup_r.max(r.value);
        let c1 = c[0].slope.abs().max(c[1].slope.abs());
        let c2 = c[0].curvature.abs().max(c[1].curvature.abs());
        let r1 = r.slope.abs();
        let r2 = r.curvature.abs();
        let local = if r.value > 0.0 {
            let first_fwd = (1.0f64 / r.value).max((c1 + r1) / r.value);
            let second_fwd = r1 / (r.value * r.value)
                + (c2 + r2) / r.value
                + 2.0 * (c1 + r1) * r1 / (r.value * r.value);
            let first_inv = r.value.max(r1 + c1);
            let second_inv = (r2 + c2).max(r1);
            1.0f64
                .max(first_fwd)
                .max(second_fwd)
                .max(first_inv)
                .max(second_inv)
        } else {
            f64::INFINITY
        };
        bound = bound.max(local);
        if local > worst_val {
            worst_val = local;
            worst = x;
        }

        // Downstream: |r − r+| must shrink moving outward.
        if x > t_hi {
            let gap = (r.value - r_plus).abs();
            if let Some(prev) = prev_gap_down {
                if gap > prev + 1e-14 {
                    monotone = false;
                }
            }
            prev_gap_down = Some(gap);
        }
    }

    // Upstream side: walk outward from the interval toward −half_range.
    let mut prev: Option<f64> = None;
    for s in (0..=n).rev() {
        let x = -half_range + 2.0 * half_range * s as f64 / n as f64;
        if x >= t_lo {
            continue;
        }
        let gap = (profile.radius(x) - r_minus).abs();
        if let Some(p) = prev {
            if gap > p + 1e-14 {
                monotone = false;
            }
        }
        prev = Some(gap);
    }

    RegularityReport {
        passes: inf_r > 0.0 && bound <= k && monotone,
        inf_radius: inf_r,
        sup_radius: sup_r,
        map_bound: bound,
        worst_station: worst,
        far_field_monotone: monotone,
    }
}
