//! Subsonic truncation of the density and the matching energy density.
//!
//! Write `s` for the speed and `κ(s) = −d log Θ / d log s`. On the
//! untruncated branch `κ = M²` (squared Mach number), and the second
//! ellipticity eigenvalue is `Θ + 2Θ's² = Θ(1 − κ)`. The bridge on
//! `[1−2δ̃₀, 1−δ̃₀]` is built on κ rather than on Θ directly:
//!
//! ```text
//! κ(u) = g(u) · [ M²(u) + α (1 − M²(u)) β(u) ],   u ∈ [0, 1] linear in log s
//! ```
//!
//! with `β` a quintic smoothstep rising on `[0, ½]`, `g` a quintic
//! smoothstep falling to zero on `[u₀, 1]`, `α = ½`, and `u₀` chosen so
//! that `∫κ = ∫M²`. That last condition makes `Θ` land exactly on
//! `ρ(1−δ̃₀)` at the right end. Since `0 ≤ κ ≤ M² + (1−M²)/2 < 1`, the
//! truncated operator is monotone and uniformly elliptic, and all
//! derivatives of κ up to second order match at both ends.

use crate::error::{Error, Result};
use crate::gas::DensityRelation;
use crate::quadrature::GaussRule;

const RISE_END: f64 = 0.5;
const LIFT: f64 = 0.5;
const RULE_POINTS: usize = 20;
const RISE_PIECES: usize = 4;
const MIDDLE_PIECES: usize = 4;
const FALL_PIECES: usize = 8;

/// Quintic smoothstep: 0 → 1 on [0, 1] with vanishing first and second
/// derivatives at both ends.
fn smoothstep(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
    }
}

/// Truncated density Θ(s²).
#[derive(Debug, Clone)]
pub struct TruncatedDensity {
    base: DensityRelation,
    delta0: f64,
    lower: f64,
    upper: f64,
    /// Width of the band in log s.
    width: f64,
    fall_start: f64,
    breaks: Vec<f64>,
    log_theta_at: Vec<f64>,
    energy_at: Vec<f64>,
    theta_upper: f64,
    energy_upper: f64,
    rule: GaussRule,
}

impl TruncatedDensity {
    pub fn new(base: DensityRelation, delta0: f64) -> Result<Self> {
        if !(delta0 > 0.0 && delta0 < 0.25) {
            return Err(Error::domain("delta0", delta0, "(0, 1/4)"));
        }
        let lower = 1.0 - 2.0 * delta0;
        let upper = 1.0 - delta0;
        let width = 0.5 * (upper / lower).ln();
        let mut this = Self {
            base,
            delta0,
            lower,
            upper,
            width,
            fall_start: 0.9,
            breaks: Vec::new(),
            log_theta_at: Vec::new(),
            energy_at: Vec::new(),
            theta_upper: base.density_unchecked(upper),
            energy_upper: 0.0,
            rule: GaussRule::new(RULE_POINTS),
        };
        this.fall_start = this.solve_fall_start();
        this.breaks = this.piece_breaks();
        this.tabulate();
        Ok(this)
    }

    pub fn base(&self) -> &DensityRelation {
        &self.base
    }

    pub fn delta0(&self) -> f64 {
        self.delta0
    }

    /// Squared speed `1 − 2δ̃₀` below which Θ ≡ ρ.
    pub fn certified_limit(&self) -> f64 {
        self.lower
    }

    /// Squared speed `1 − δ̃₀` above which Θ is constant.
    pub fn saturation_limit(&self) -> f64 {
        self.upper
    }

    fn speed2_at(&self, u: f64) -> f64 {
        self.lower * (2.0 * self.width * u).exp()
    }

    fn mach2_at(&self, u: f64) -> f64 {
        self.base.mach_squared_unchecked(self.speed2_at(u))
    }

    fn rise(&self, u: f64) -> f64 {
        smoothstep(u / RISE_END)
    }

    fn keep(fall_start: f64, u: f64) -> f64 {
        1.0 - smoothstep((u - fall_start) / (1.0 - fall_start))
    }

    fn kappa_with(&self, fall_start: f64, u: f64) -> f64 {
        let m2 = self.mach2_at(u);
        Self::keep(fall_start, u) * (m2 + LIFT * (1.0 - m2) * self.rise(u))
    }

    fn kappa_at(&self, u: f64) -> f64 {
        self.kappa_with(self.fall_start, u)
    }

    fn integrate_pieces(&self, breaks: &[f64], f: impl Fn(f64) -> f64) -> f64 {
        breaks
            .windows(2)
            .map(|w| self.rule.integrate(w[0], w[1], &f))
            .sum()
    }

    fn breaks_for(fall_start: f64) -> Vec<f64> {
        let mut b = Vec::new();
        let mut push = |a: f64, z: f64, n: usize| {
            for k in 0..n {
                b.push(a + (z - a) * k as f64 / n as f64);
            }
        };
        push(0.0, RISE_END, RISE_PIECES);
        push(RISE_END, fall_start, MIDDLE_PIECES);
        push(fall_start, 1.0, FALL_PIECES);
        b.push(1.0);
        b
    }

    fn piece_breaks(&self) -> Vec<f64> {
        Self::breaks_for(self.fall_start)
    }

    /// Finds u₀ such that `∫κ = ∫M²` over the band.
    fn solve_fall_start(&self) -> f64 {
        let mismatch = |u0: f64| {
            let breaks = Self::breaks_for(u0);
            self.integrate_pieces(&breaks, |u| self.kappa_with(u0, u) - self.mach2_at(u))
        };
        let (mut lo, mut hi) = (RISE_END, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if mismatch(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn tabulate(&mut self) {
        let log_lower = self.base.density_unchecked(self.lower).ln();
        let mut log_theta = vec![log_lower];
        for w in self.breaks.windows(2) {
            let step = self.width * self.rule.integrate(w[0], w[1], |u| self.kappa_at(u));
            log_theta.push(log_theta.last().unwrap() - step);
        }
        self.log_theta_at = log_theta;
        // Pin the right end exactly; the quadrature residual is at rounding level.
        *self.log_theta_at.last_mut().unwrap() = self.theta_upper.ln();

        let mut energy = vec![self.energy_closed_form(self.lower)];
        for (p, w) in self.breaks.windows(2).enumerate() {
            let step = self.band_energy_increment(p, w[0], w[1]);
            energy.push(energy.last().unwrap() + step);
        }
        self.energy_upper = *energy.last().unwrap();
        self.energy_at = energy;
    }

    fn piece_of(&self, u: f64) -> usize {
        let n = self.breaks.len() - 1;
        match self
            .breaks
            .binary_search_by(|b| b.partial_cmp(&u).expect("finite break"))
        {
            Ok(i) => i.min(n - 1),
            Err(i) => (i.max(1) - 1).min(n - 1),
        }
    }

    fn log_theta_in_piece(&self, piece: usize, u: f64) -> f64 {
        let start = self.breaks[piece];
        self.log_theta_at[piece] - self.width * self.rule.integrate(start, u, |v| self.kappa_at(v))
    }

    fn band_energy_increment(&self, piece: usize, a: f64, b: f64) -> f64 {
        // ½∫Θ dt with dt = 2 t W du.
        self.rule.integrate(a, b, |u| {
            let theta = self.log_theta_in_piece(piece, u).exp();
            theta * self.speed2_at(u) * self.width
        })
    }

    fn band_coordinate(&self, s2: f64) -> f64 {
        (0.5 * (s2 / self.lower).ln() / self.width).clamp(0.0, 1.0)
    }

    /// `F` on the untruncated range: `½∫₀^t ρ = p(ρ(0)) − p(ρ(t))`.
    fn energy_closed_form(&self, t: f64) -> f64 {
        let g = self.base.gas().gamma();
        let e = g / (g - 1.0);
        (self.base.base(0.0).powf(e) - self.base.base(t).powf(e)) / g
    }

    /// Θ(s²).
    pub fn theta(&self, s2: f64) -> f64 {
        if s2 <= self.lower {
            self.base.density_unchecked(s2.max(0.0))
        } else if s2 >= self.upper {
            self.theta_upper
        } else {
            let u = self.band_coordinate(s2);
            self.log_theta_in_piece(self.piece_of(u), u).exp()
        }
    }

    /// dΘ/d(s²).
    pub fn theta_prime(&self, s2: f64) -> f64 {
        if s2 <= self.lower {
            self.base.density_derivative_unchecked(s2.max(0.0))
        } else if s2 >= self.upper {
            0.0
        } else {
            let u = self.band_coordinate(s2);
            let theta = self.log_theta_in_piece(self.piece_of(u), u).exp();
            -self.kappa_at(u) * theta / (2.0 * s2)
        }
    }

    /// Θ(s²) and dΘ/d(s²) together.
    pub fn theta_and_prime(&self, s2: f64) -> (f64, f64) {
        if s2 <= self.lower {
            let s2 = s2.max(0.0);
            (
                self.base.density_unchecked(s2),
                self.base.density_derivative_unchecked(s2),
            )
        } else if s2 >= self.upper {
            (self.theta_upper, 0.0)
        } else {
            let u = self.band_coordinate(s2);
            let theta = self.log_theta_in_piece(self.piece_of(u), u).exp();
            (theta, -self.kappa_at(u) * theta / (2.0 * s2))
        }
    }

    /// `Θ + 2Θ's²`, the eigenvalue of the coefficient matrix along the
    /// velocity direction.
    pub fn streamwise_coefficient(&self, s2: f64) -> f64 {
        let (theta, dtheta) = self.theta_and_prime(s2);
        theta + 2.0 * dtheta * s2.max(0.0)
    }

    /// `a_ij(w) ξ_i ξ_j` with `a_ij = Θ δ_ij + 2Θ' w_i w_j`.
    pub fn quadratic_form(&self, w: &[f64], xi: &[f64]) -> f64 {
        let s2: f64 = w.iter().map(|c| c * c).sum();
        let (theta, dtheta) = self.theta_and_prime(s2);
        let xi2: f64 = xi.iter().map(|c| c * c).sum();
        let wxi: f64 = w.iter().zip(xi).map(|(a, b)| a * b).sum();
        theta * xi2 + 2.0 * dtheta * wxi * wxi
    }

    /// `F(q²) = ½ ∫₀^{q²} Θ`.
    pub fn energy(&self, q2: f64) -> f64 {
        let q2 = q2.max(0.0);
        if q2 <= self.lower {
            self.energy_closed_form(q2)
        } else if q2 >= self.upper {
            self.energy_upper + 0.5 * self.theta_upper * (q2 - self.upper)
        } else {
            let u = self.band_coordinate(q2);
            let p = self.piece_of(u);
            self.energy_at[p] + self.band_energy_increment(p, self.breaks[p], u)
        }
    }

    /// Dense-sampling bounds `λ ≤ min(Θ, Θ+2Θ's²)` and
    /// `Λ ≥ max(Θ, Θ+2Θ's²)` over `s² ∈ [0, 4]`.
    pub fn ellipticity_bounds(&self) -> Result<EllipticityBounds> {
        self.ellipticity_bounds_sampled(100_000, 4.0)
    }

    pub fn ellipticity_bounds_sampled(
        &self,
        samples: usize,
        s2_max: f64,
    ) -> Result<EllipticityBounds> {
        let mut lambda = f64::INFINITY;
        let mut big_lambda = f64::NEG_INFINITY;
        for i in 0..=samples {
            let s2 = s2_max * i as f64 / samples as f64;
            let theta = self.theta(s2);
            let stream = self.streamwise_coefficient(s2);
            lambda = lambda.min(theta.min(stream));
            big_lambda = big_lambda.max(theta.max(stream));
        }
        if !(lambda > 0.0) {
            return Err(Error::Ellipticity { lambda });
        }
        Ok(EllipticityBounds { lambda, big_lambda })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticityBounds {
    pub lambda: f64,
    pub big_lambda: f64,
}

/// Energy density `F(q²) = ½ ∫₀^{q²} Θ(s²) ds²` of the truncated problem.
#[derive(Debug, Clone)]
pub struct EnergyDensity {
    theta: TruncatedDensity,
}

impl EnergyDensity {
    pub fn new(theta: TruncatedDensity) -> Self {
        Self { theta }
    }

    pub fn theta(&self) -> &TruncatedDensity {
        &self.theta
    }

    pub fn energy(&self, q2: f64) -> f64 {
        self.theta.energy(q2)
    }

    /// `F'(q²) = Θ(q²)/2`.
    pub fn energy_derivative(&self, q2: f64) -> f64 {
        0.5 * self.theta.theta(q2)
    }
}
