use crate::mesh_fem::Mesh;
use crate::nozzle::NozzleMap;

/// Nodal coefficients of the potential on a [`Mesh`].
///
/// The inlet nodes (the first `pinned` coefficients) carry the Dirichlet
/// condition `φ = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteField {
    values: Vec<f64>,
    pinned: usize,
}

impl DiscreteField {
    pub fn zeros(mesh: &Mesh) -> Self {
        Self {
            values: vec![0.0; mesh.node_count()],
            pinned: mesh.nodes_per_section(),
        }
    }

    /// Wraps raw coefficients; the inlet entries are zeroed.
    pub fn from_values(mesh: &Mesh, values: Vec<f64>) -> Self {
        assert_eq!(
            values.len(),
            mesh.node_count(),
            "coefficient count mismatch"
        );
        let mut f = Self {
            values,
            pinned: mesh.nodes_per_section(),
        };
        f.apply_bcs();
        f
    }

    /// Interpolates `f(x)` at the physical node positions.
    pub fn from_fn(mesh: &Mesh, map: &NozzleMap, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..mesh.node_count())
            .map(|node| f(&mesh.node_physical(map, node)))
            .collect();
        Self::from_values(mesh, values)
    }

    /// `φ = slope·(x_n + L)`, zero on the inlet.
    pub fn linear_ramp(mesh: &Mesh, slope: f64) -> Self {
        let values = (0..mesh.node_count())
            .map(|node| {
                let y = mesh.node_reference(node);
                slope * (y[mesh.dim() - 1] + mesh.half_length())
            })
            .collect();
        Self::from_values(mesh, values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_dirichlet(&self, node: usize) -> bool {
        node < self.pinned
    }

    pub fn dirichlet_count(&self) -> usize {
        self.pinned
    }

    pub fn apply_bcs(&mut self) {
        self.values[..self.pinned].iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn satisfies_bcs(&self) -> bool {
        self.values[..self.pinned].iter().all(|&v| v == 0.0)
    }

    /// `self + step·direction`, keeping the inlet pinned.
    pub fn stepped(&self, direction: &[f64], step: f64) -> Self {
        let mut out = self.clone();
        for (v, d) in out.values.iter_mut().zip(direction) {
            *v += step * d;
        }
        out.apply_bcs();
        out
    }
}
