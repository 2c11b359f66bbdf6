use crate::error::Result;
use crate::gas::{DensityRelation, EnergyDensity, GasLaw, TruncatedDensity};
use crate::mesh_fem::{build_mesh, Discretization};
use crate::nozzle::{NozzleMap, Profile};

/// Everything needed to build a [`Discretization`] except the flux.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemSpec {
    pub gamma: f64,
    pub delta0: f64,
    pub profile: Profile,
    pub half_length: f64,
    pub transverse_cells: usize,
    pub axial_cells: usize,
}

impl ProblemSpec {
    pub const DEFAULT_DELTA0: f64 = 0.05;

    pub fn discretize(&self) -> Result<Discretization> {
        let gas = GasLaw::new(self.gamma)?;
        let theta = TruncatedDensity::new(DensityRelation::new(gas), self.delta0)?;
        let map = NozzleMap::new(self.profile)?;
        let mesh = build_mesh(
            &map,
            self.half_length,
            self.transverse_cells,
            self.axial_cells,
        )?;
        Discretization::new(mesh, map, EnergyDensity::new(theta))
    }

    pub fn with_delta0(mut self, delta0: f64) -> Self {
        self.delta0 = delta0;
        self
    }

    /// Same axial spacing on a domain of half-length `half_length`.
    pub fn with_half_length(mut self, half_length: f64) -> Self {
        let spacing = 2.0 * self.half_length / self.axial_cells as f64;
        self.axial_cells = ((2.0 * half_length / spacing).round() as usize).max(4);
        self.half_length = half_length;
        self
    }

    pub fn with_resolution(mut self, transverse_cells: usize, axial_cells: usize) -> Self {
        self.transverse_cells = transverse_cells;
        self.axial_cells = axial_cells;
        self
    }

    pub fn axial_spacing(&self) -> f64 {
        2.0 * self.half_length / self.axial_cells as f64
    }
}
