use crate::error::{Error, Result};
use crate::nozzle::NozzleMap;

/// Tensor-product mesh of `(−1, 1)^{n−1} × (−L, L)` in reference variables.
///
/// Nodes are numbered axial-major: `index = k·P + j·(N_t+1) + i` where `k`
/// is the axial index and `P = (N_t+1)^{n−1}` the nodes per cross-section.
/// The inlet plane `k = 0` is therefore the first `P` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dim: usize,
    half_length: f64,
    n_t: usize,
    n_a: usize,
}

impl Mesh {
    pub fn new(dim: usize, half_length: f64, n_t: usize, n_a: usize) -> Result<Self> {
        if !(dim == 2 || dim == 3) {
            return Err(Error::InvalidResolution(format!(
                "dimension {dim} not in {{2, 3}}"
            )));
        }
        if !(half_length > 0.0) || !half_length.is_finite() {
            return Err(Error::InvalidResolution(format!(
                "L = {half_length} must be positive"
            )));
        }
        if n_t < 2 {
            return Err(Error::InvalidResolution(format!("N_t = {n_t} < 2")));
        }
        if n_a < 4 {
            return Err(Error::InvalidResolution(format!("N_a = {n_a} < 4")));
        }
        Ok(Self {
            dim,
            half_length,
            n_t,
            n_a,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn transverse_cells(&self) -> usize {
        self.n_t
    }

    pub fn axial_cells(&self) -> usize {
        self.n_a
    }

    pub fn transverse_spacing(&self) -> f64 {
        2.0 / self.n_t as f64
    }

    pub fn axial_spacing(&self) -> f64 {
        2.0 * self.half_length / self.n_a as f64
    }

    /// Spacing in reference direction `t` (the last direction is axial).
    pub fn spacing(&self, t: usize) -> f64 {
        if t + 1 == self.dim {
            self.axial_spacing()
        } else {
            self.transverse_spacing()
        }
    }

    pub fn nodes_per_section(&self) -> usize {
        (self.n_t + 1).pow(self.dim as u32 - 1)
    }

    pub fn cells_per_section(&self) -> usize {
        self.n_t.pow(self.dim as u32 - 1)
    }

    pub fn node_count(&self) -> usize {
        self.nodes_per_section() * (self.n_a + 1)
    }

    pub fn cell_count(&self) -> usize {
        self.cells_per_section() * self.n_a
    }

    pub fn nodes_per_cell(&self) -> usize {
        1 << self.dim
    }

    pub fn axial_coordinate(&self, k: usize) -> f64 {
        if k == self.n_a {
            self.half_length
        } else {
            -self.half_length + k as f64 * self.axial_spacing()
        }
    }

    pub fn transverse_coordinate(&self, i: usize) -> f64 {
        if i == self.n_t {
            1.0
        } else {
            -1.0 + i as f64 * self.transverse_spacing()
        }
    }

    /// Axial cell index whose midplane is nearest to `xn`.
    pub fn nearest_axial_cell(&self, xn: f64) -> usize {
        let s = (xn + self.half_length) / self.axial_spacing() - 0.5;
        (s.round().max(0.0) as usize).min(self.n_a - 1)
    }

    pub fn axial_midplane(&self, cell: usize) -> f64 {
        -self.half_length + (cell as f64 + 0.5) * self.axial_spacing()
    }

    /// Splits a node index into (axial index, transverse indices).
    pub fn node_indices(&self, node: usize) -> (usize, [usize; 2]) {
        let p = self.nodes_per_section();
        let k = node / p;
        let rest = node % p;
        let m = self.n_t + 1;
        (k, [rest % m, rest / m])
    }

    pub fn node_index(&self, k: usize, t: [usize; 2]) -> usize {
        let m = self.n_t + 1;
        k * self.nodes_per_section() + t[1] * m + t[0]
    }

    /// Reference coordinates of a node (entries past `dim` are zero).
    pub fn node_reference(&self, node: usize) -> [f64; 3] {
        let (k, t) = self.node_indices(node);
        let mut y = [0.0; 3];
        for (c, &ti) in t.iter().enumerate().take(self.dim - 1) {
            y[c] = self.transverse_coordinate(ti);
        }
        y[self.dim - 1] = self.axial_coordinate(k);
        y
    }

    pub fn node_physical(&self, map: &NozzleMap, node: usize) -> Vec<f64> {
        let y = self.node_reference(node);
        map.inverse_unchecked(&y[..self.dim])
    }

    /// Splits a cell index into (axial cell, transverse cells).
    pub fn cell_indices(&self, cell: usize) -> (usize, [usize; 2]) {
        let p = self.cells_per_section();
        let k = cell / p;
        let rest = cell % p;
        (k, [rest % self.n_t, rest / self.n_t])
    }

    /// Global node numbers of a cell's corners. Local corner `ℓ` has bit `t`
    /// set when it sits on the upper side in reference direction `t`.
    pub fn cell_nodes(&self, cell: usize) -> [usize; 8] {
        let (k, t) = self.cell_indices(cell);
        let mut out = [0usize; 8];
        for (local, slot) in out.iter_mut().enumerate().take(self.nodes_per_cell()) {
            let bit = |d: usize| (local >> d) & 1;
            let axial = k + bit(self.dim - 1);
            let trans = if self.dim == 2 {
                [t[0] + bit(0), 0]
            } else {
                [t[0] + bit(0), t[1] + bit(1)]
            };
            *slot = self.node_index(axial, trans);
        }
        out
    }

    /// Lower reference corner of a cell.
    pub fn cell_origin(&self, cell: usize) -> [f64; 3] {
        let (k, t) = self.cell_indices(cell);
        let mut y = [0.0; 3];
        for (c, &ti) in t.iter().enumerate().take(self.dim - 1) {
            y[c] = self.transverse_coordinate(ti);
        }
        y[self.dim - 1] = self.axial_coordinate(k);
        y
    }

    pub fn is_inlet_node(&self, node: usize) -> bool {
        node < self.nodes_per_section()
    }
}

/// Builds the tensor mesh for a nozzle and checks every node lands inside
/// the physical domain.
pub fn build_mesh(map: &NozzleMap, half_length: f64, n_t: usize, n_a: usize) -> Result<Mesh> {
    let mesh = Mesh::new(map.dim(), half_length, n_t, n_a)?;
    for node in 0..mesh.node_count() {
        let y = mesh.node_reference(node);
        map.map_inverse(&y[..mesh.dim()])?;
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nozzle::Profile;

    #[test]
    fn node_counts() {
        let m2 = Mesh::new(2, 1.0, 2, 4).unwrap();
        assert_eq!(m2.node_count(), 15);
        assert_eq!(m2.cell_count(), 8);
        let m3 = Mesh::new(3, 1.0, 2, 4).unwrap();
        assert_eq!(m3.node_count(), 45);
        assert_eq!(m3.cell_count(), 16);
    }

    #[test]
    fn invalid_resolutions() {
        assert!(Mesh::new(2, 1.0, 1, 4).is_err());
        assert!(Mesh::new(2, 1.0, 2, 3).is_err());
        assert!(Mesh::new(2, 0.0, 2, 4).is_err());
        assert!(Mesh::new(4, 1.0, 2, 4).is_err());
    }

    #[test]
    fn indices_round_trip() {
        for dim in [2, 3] {
            let mesh = Mesh::new(dim, 2.0, 3, 5).unwrap();
            for node in 0..mesh.node_count() {
                let (k, t) = mesh.node_indices(node);
                assert_eq!(mesh.node_index(k, t), node);
            }
            for cell in 0..mesh.cell_count() {
                let nodes = mesh.cell_nodes(cell);
                let origin = mesh.cell_origin(cell);
                let y0 = mesh.node_reference(nodes[0]);
                assert_eq!(origin, y0);
                let last = mesh.node_reference(nodes[mesh.nodes_per_cell() - 1]);
                for t in 0..dim {
                    assert!((last[t] - y0[t] - mesh.spacing(t)).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn all_nodes_inside_nozzle() {
        for dim in [2, 3] {
            let map =
                NozzleMap::new(Profile::gaussian_throat(dim, 1.0, 0.4, 1.0).unwrap()).unwrap();
            let mesh = build_mesh(&map, 3.0, 4, 12).unwrap();
            for node in 0..mesh.node_count() {
                let x = mesh.node_physical(&map, node);
                let y = map.map_forward(&x).unwrap();
                let yr = mesh.node_reference(node);
                for t in 0..dim {
                    assert!((y[t] - yr[t]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn midplane_snapping() {
        let mesh = Mesh::new(2, 4.0, 2, 8).unwrap();
        assert_eq!(mesh.nearest_axial_cell(0.1), 4);
        assert_eq!(mesh.axial_midplane(4), 0.5);
        assert_eq!(mesh.nearest_axial_cell(-3.9), 0);
        assert_eq!(mesh.nearest_axial_cell(3.99), 7);
    }
}
