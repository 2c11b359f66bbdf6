//! Polytropic gas, the Bernoulli density–speed relation and its subsonic
//! truncation.
//!
//! All quantities are nondimensional: speeds are scaled by the critical
//! speed and densities by the critical density, so the flow is subsonic
//! exactly when `q < 1`, equivalently when `ρ > 1`, and the momentum
//! `ρ(q²)q` never exceeds 1.

mod truncation;

pub use truncation::{EllipticityBounds, EnergyDensity, TruncatedDensity};

use crate::error::{Error, Result};

/// Polytropic pressure law `p(ρ) = ρ^γ / γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasLaw {
    gamma: f64,
}

impl GasLaw {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(Error::domain("gamma", gamma, "(1, inf)"));
        }
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn pressure(&self, rho: f64) -> f64 {
        rho.powf(self.gamma) / self.gamma
    }

    pub fn pressure_derivative(&self, rho: f64) -> f64 {
        rho.powf(self.gamma - 1.0)
    }

    pub fn pressure_second_derivative(&self, rho: f64) -> f64 {
        (self.gamma - 1.0) * rho.powf(self.gamma - 2.0)
    }

    /// Local sound speed `c = sqrt(p'(ρ))`.
    pub fn sound_speed(&self, rho: f64) -> f64 {
        self.pressure_derivative(rho).sqrt()
    }
}

/// Density as a function of squared speed, from Bernoulli's law with the
/// critical-speed normalization `ρ(1) = 1`:
///
/// `ρ(q²) = ((γ+1)/2 − (γ−1)/2 · q²)^{1/(γ−1)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityRelation {
    gas: GasLaw,
}

impl DensityRelation {
    pub fn new(gas: GasLaw) -> Self {
        Self { gas }
    }

    pub fn gas(&self) -> GasLaw {
        self.gas
    }

    /// Squared speed at which the density vanishes, `(γ+1)/(γ−1)`.
    pub fn vacuum_bound(&self) -> f64 {
        let g = self.gas.gamma;
        (g + 1.0) / (g - 1.0)
    }

    /// `(γ+1)/2 − (γ−1)/2 · q²`, which equals `ρ^{γ−1} = c²`.
    #[inline]
    pub(crate) fn base(&self, q2: f64) -> f64 {
        let g = self.gas.gamma;
        0.5 * (g + 1.0) - 0.5 * (g - 1.0) * q2
    }

    fn check_speed(&self, q2: f64) -> Result<()> {
        if !(q2 >= 0.0 && q2 < self.vacuum_bound() && self.base(q2) > 0.0) {
            return Err(Error::domain(
                "q2",
                q2,
                format!("[0, {})", self.vacuum_bound()),
            ));
        }
        Ok(())
    }

    pub fn density(&self, q2: f64) -> Result<f64> {
        self.check_speed(q2)?;
        Ok(self.density_unchecked(q2))
    }

    #[inline]
    pub(crate) fn density_unchecked(&self, q2: f64) -> f64 {
        self.base(q2).powf(1.0 / (self.gas.gamma - 1.0))
    }

    /// `dρ/d(q²)`.
    pub fn density_derivative(&self, q2: f64) -> Result<f64> {
        self.check_speed(q2)?;
        Ok(self.density_derivative_unchecked(q2))
    }

    #[inline]
    pub(crate) fn density_derivative_unchecked(&self, q2: f64) -> f64 {
        let g = self.gas.gamma;
        -0.5 * self.base(q2).powf((2.0 - g) / (g - 1.0))
    }

    /// `d²ρ/d(q²)²`.
    #[cfg(test)]
    pub(crate) fn density_second_derivative_unchecked(&self, q2: f64) -> f64 {
        let g = self.gas.gamma;
        0.25 * (2.0 - g) * self.base(q2).powf((3.0 - 2.0 * g) / (g - 1.0))
    }

    /// Squared Mach number `q²/c²` as a function of squared speed.
    #[inline]
    pub(crate) fn mach_squared_unchecked(&self, q2: f64) -> f64 {
        q2 / self.base(q2)
    }

    /// Momentum density `j(q) = ρ(q²)·q`.
    pub fn momentum(&self, q: f64) -> Result<f64> {
        Ok(self.density(q * q)? * q)
    }

    pub fn sound_speed(&self, q2: f64) -> Result<f64> {
        self.check_speed(q2)?;
        Ok(self.base(q2).sqrt())
    }

    pub fn mach(&self, q: f64) -> Result<f64> {
        let q2 = q * q;
        self.check_speed(q2)?;
        Ok(q / self.base(q2).sqrt())
    }

    /// Specific enthalpy `h(ρ) = ∫₁^ρ p'(s)/s ds = (ρ^{γ−1} − 1)/(γ−1)`.
    pub fn enthalpy(&self, rho: f64) -> Result<f64> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::domain("rho", rho, "(0, inf)"));
        }
        let g = self.gas.gamma;
        Ok((rho.powf(g - 1.0) - 1.0) / (g - 1.0))
    }

    /// Bernoulli function `½q² + h(ρ)`; equals ½ on the relation.
    pub fn bernoulli(&self, rho: f64, q2: f64) -> Result<f64> {
        Ok(0.5 * q2 + self.enthalpy(rho)?)
    }

    /// The unique subsonic speed `q ∈ [0, 1)` with `ρ(q²)q = j`.
    ///
    /// `ρ(q²)q` is strictly increasing on [0, 1] with maximum 1 at the
    /// critical speed, so bisection on [0, 1] brackets the root.
    pub fn solve_q_from_flux(&self, j: f64) -> Result<f64> {
        if !(j >= 0.0) || j.is_nan() {
            return Err(Error::domain("momentum density", j, "[0, 1)"));
        }
        if j >= 1.0 {
            return Err(Error::InfeasibleFlux(j));
        }
        if j == 0.0 {
            return Ok(0.0);
        }
        let f = |q: f64| self.density_unchecked(q * q) * q - j;
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let q = if f(lo).abs() <= f(hi).abs() { lo } else { hi };
        if q >= 1.0 {
            return Err(Error::InfeasibleFlux(j));
        }
        Ok(q)
    }
}
