use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gas::EnergyDensity;
use crate::linalg::CsrMatrix;
use crate::mesh_fem::{DiscreteField, Mesh};
use crate::nozzle::NozzleMap;
use crate::quadrature::GAUSS2;

/// Jacobian and right-hand side `−R` of one Newton step.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct QpGeometry {
    sigma: [[f64; 3]; 3],
    /// Gauss weight times cell scaling times `det ∂x/∂y`.
    weight: f64,
    x: [f64; 3],
}

/// A quadrature point of the volume rule with the field evaluated there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpSample {
    pub cell: usize,
    pub x: [f64; 3],
    pub weight: f64,
    pub value: f64,
    pub gradient: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionPoint {
    pub x: [f64; 3],
    pub weight: f64,
    pub gradient: [f64; 3],
}

/// Quadrature of a physical cross-section at an axial cell midplane.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionSamples {
    pub station: f64,
    pub axial_cell: usize,
    pub measure: f64,
    pub points: Vec<SectionPoint>,
}

/// Multilinear shape functions on a box with local coordinates `ξ ∈ [−1,1]^d`
/// and side lengths `h`. Returns values and reference gradients `∂N/∂y`.
fn shape_functions(dim: usize, xi: [f64; 3], h: [f64; 3]) -> ([f64; 8], [[f64; 3]; 8]) {
    let mut values = [0.0; 8];
    let mut grads = [[0.0; 3]; 8];
    for local in 0..(1 << dim) {
        let sign = |t: usize| if (local >> t) & 1 == 1 { 1.0 } else { -1.0 };
        let factor = |t: usize| 0.5 * (1.0 + sign(t) * xi[t]);
        let mut v = 1.0;
        for t in 0..dim {
            v *= factor(t);
        }
        values[local] = v;
        for t in 0..dim {
            let mut g = 0.5 * sign(t) * 2.0 / h[t];
            for u in 0..dim {
                if u != t {
                    g *= factor(u);
                }
            }
            grads[local][t] = g;
        }
    }
    (values, grads)
}

/// Discrete truncated problem on `Ω_L`: mesh, nozzle map, energy density and
/// cached quadrature geometry.
#[derive(Debug, Clone)]
pub struct Discretization {
    mesh: Mesh,
    map: NozzleMap,
    energy: EnergyDensity,
    ref_values: Vec<[f64; 8]>,
    ref_grads: Vec<[[f64; 3]; 8]>,
    geometry: Vec<QpGeometry>,
    outlet_load: Vec<f64>,
    outlet_measure: f64,
    pattern: CsrMatrix,
    cell_slots: Vec<usize>,
}

impl Discretization {
    pub fn new(mesh: Mesh, map: NozzleMap, energy: EnergyDensity) -> Result<Self> {
        if mesh.dim() != map.dim() {
            return Err(Error::InvalidResolution(format!(
                "mesh dimension {} differs from nozzle dimension {}",
                mesh.dim(),
                map.dim()
            )));
        }
        let dim = mesh.dim();
        let h = [
            mesh.spacing(0),
            mesh.spacing(1),
            mesh.spacing(2.min(dim - 1)),
        ];
        let nqp = 1 << dim;
        let mut ref_values = Vec::with_capacity(nqp);
        let mut ref_grads = Vec::with_capacity(nqp);
        let mut offsets = Vec::with_capacity(nqp);
        for q in 0..nqp {
            let mut xi = [0.0; 3];
            for (t, slot) in xi.iter_mut().enumerate().take(dim) {
                *slot = GAUSS2[(q >> t) & 1];
            }
            let (v, g) = shape_functions(dim, xi, h);
            ref_values.push(v);
            ref_grads.push(g);
            offsets.push(xi);
        }
        let cell_scale: f64 = (0..dim).map(|t| 0.5 * h[t]).product();

        let geometry: Vec<QpGeometry> = (0..mesh.cell_count())
            .into_par_iter()
            .flat_map_iter(|cell| {
                let origin = mesh.cell_origin(cell);
                let map = &map;
                offsets.iter().map(move |xi| {
                    let mut y = [0.0; 3];
                    for t in 0..dim {
                        y[t] = origin[t] + 0.5 * h[t] * (1.0 + xi[t]);
                    }
                    let jac = map.jacobian(&y[..dim]);
                    let xv = map.inverse_unchecked(&y[..dim]);
                    let mut x = [0.0; 3];
                    x[..dim].copy_from_slice(&xv);
                    QpGeometry {
                        sigma: jac.sigma,
                        weight: cell_scale * jac.det,
                        x,
                    }
                })
            })
            .collect();

        // ∫_{S_L^+} N_i dx' by the transverse tensor Gauss rule.
        let mut outlet_load = vec![0.0; mesh.node_count()];
        let r_out = map.profile().radius(mesh.half_length());
        let face_det = r_out.powi(dim as i32 - 1);
        let ht = mesh.transverse_spacing();
        let face_cells = mesh.cells_per_section();
        let face_nodes = 1 << (dim - 1);
        for fc in 0..face_cells {
            let t = [fc % mesh.transverse_cells(), fc / mesh.transverse_cells()];
            for q in 0..face_nodes {
                let w = (0.5 * ht).powi(dim as i32 - 1) * face_det;
                for local in 0..face_nodes {
                    let mut v = 1.0;
                    for d in 0..dim - 1 {
                        let s = if (local >> d) & 1 == 1 { 1.0 } else { -1.0 };
                        v *= 0.5 * (1.0 + s * GAUSS2[(q >> d) & 1]);
                    }
                    let trans = if dim == 2 {
                        [t[0] + (local & 1), 0]
                    } else {
                        [t[0] + (local & 1), t[1] + ((local >> 1) & 1)]
                    };
                    let node = mesh.node_index(mesh.axial_cells(), trans);
                    outlet_load[node] += w * v;
                }
            }
        }
        let outlet_measure = map.section_measure(mesh.half_length());

        let pattern = build_pattern(&mesh);
        let npc = mesh.nodes_per_cell();
        let mut cell_slots = Vec::with_capacity(mesh.cell_count() * npc * npc);
        for cell in 0..mesh.cell_count() {
            let nodes = mesh.cell_nodes(cell);
            for a in 0..npc {
                for b in 0..npc {
                    let pos = pattern
                        .position(nodes[a], nodes[b])
                        .expect("cell coupling present in pattern");
                    cell_slots.push(pos);
                }
            }
        }

        Ok(Self {
            mesh,
            map,
            energy,
            ref_values,
            ref_grads,
            geometry,
            outlet_load,
            outlet_measure,
            pattern,
            cell_slots,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn map(&self) -> &NozzleMap {
        &self.map
    }

    pub fn energy_density(&self) -> &EnergyDensity {
        &self.energy
    }

    /// `|S_L^+|`.
    pub fn outlet_measure(&self) -> f64 {
        self.outlet_measure
    }

    /// `∫_{S_L^+} N_i dx'` per node.
    pub fn outlet_load(&self) -> &[f64] {
        &self.outlet_load
    }

    fn qp_per_cell(&self) -> usize {
        1 << self.mesh.dim()
    }

    fn local_values(&self, field: &DiscreteField, cell: usize) -> ([usize; 8], [f64; 8]) {
        let nodes = self.mesh.cell_nodes(cell);
        let mut phi = [0.0; 8];
        for (slot, &n) in phi
            .iter_mut()
            .zip(nodes.iter())
            .take(self.mesh.nodes_per_cell())
        {
            *slot = field.values()[n];
        }
        (nodes, phi)
    }

    /// Physical basis gradients at one quadrature point.
    #[inline]
    fn physical_basis(&self, q: usize, geo: &QpGeometry) -> [[f64; 3]; 8] {
        let dim = self.mesh.dim();
        let mut out = [[0.0; 3]; 8];
        for (local, g) in out.iter_mut().enumerate().take(1 << dim) {
            let r = &self.ref_grads[q][local];
            for c in 0..dim {
                let mut s = 0.0;
                for t in 0..dim {
                    s += geo.sigma[c][t] * r[t];
                }
                g[c] = s;
            }
        }
        out
    }

    #[inline]
    fn gradient_from(&self, basis: &[[f64; 3]; 8], phi: &[f64; 8]) -> [f64; 3] {
        let dim = self.mesh.dim();
        let mut g = [0.0; 3];
        for local in 0..(1 << dim) {
            for c in 0..dim {
                g[c] += phi[local] * basis[local][c];
            }
        }
        g
    }

    fn boundary_scale(&self, m0: f64) -> f64 {
        m0 / self.outlet_measure
    }

    /// `J_h(ψ) = ∫ F(|∇ψ|²) dx − (m₀/|S_L^+|) ∫_{S_L^+} ψ dx'`.
    pub fn energy(&self, field: &DiscreteField, m0: f64) -> f64 {
        let nqp = self.qp_per_cell();
        let cell_energy: Vec<f64> = (0..self.mesh.cell_count())
            .into_par_iter()
            .map(|cell| {
                let (_, phi) = self.local_values(field, cell);
                let mut e = 0.0;
                for q in 0..nqp {
                    let geo = &self.geometry[cell * nqp + q];
                    let basis = self.physical_basis(q, geo);
                    let g = self.gradient_from(&basis, &phi);
                    let s2 = g[0] * g[0] + g[1] * g[1] + g[2] * g[2];
                    e += geo.weight * self.energy.energy(s2);
                }
                e
            })
            .collect();
        let volume: f64 = cell_energy.iter().sum();
        let boundary: f64 = self
            .outlet_load
            .iter()
            .zip(field.values())
            .map(|(l, v)| l * v)
            .sum();
        volume - self.boundary_scale(m0) * boundary
    }

    /// Gradient of [`energy`](Self::energy) with respect to the free
    /// coefficients (zero on the inlet).
    pub fn residual(&self, field: &DiscreteField, m0: f64) -> Vec<f64> {
        self.assemble(field, m0, false).0
    }

    /// Residual and the symmetric Jacobian with inlet rows and columns
    /// replaced by the identity.
    pub fn residual_jacobian(&self, field: &DiscreteField, m0: f64) -> (Vec<f64>, SparseSystem) {
        let (residual, matrix) = self.assemble(field, m0, true);
        let matrix = matrix.expect("matrix requested");
        let rhs = residual.iter().map(|r| -r).collect();
        (residual, SparseSystem { matrix, rhs })
    }

    fn assemble(
        &self,
        field: &DiscreteField,
        m0: f64,
        with_matrix: bool,
    ) -> (Vec<f64>, Option<CsrMatrix>) {
        let dim = self.mesh.dim();
        let npc = self.mesh.nodes_per_cell();
        let nqp = self.qp_per_cell();
        let theta = self.energy.theta();

        let locals: Vec<([f64; 8], [[f64; 8]; 8])> = (0..self.mesh.cell_count())
            .into_par_iter()
            .map(|cell| {
                let (_, phi) = self.local_values(field, cell);
                let mut res = [0.0; 8];
                let mut mat = [[0.0; 8]; 8];
                for q in 0..nqp {
                    let geo = &self.geometry[cell * nqp + q];
                    let basis = self.physical_basis(q, geo);
                    let g = self.gradient_from(&basis, &phi);
                    let s2 = g[0] * g[0] + g[1] * g[1] + g[2] * g[2];
                    let (th, dth) = theta.theta_and_prime(s2);
                    let mut gb = [0.0; 8];
                    for a in 0..npc {
                        let mut s = 0.0;
                        for c in 0..dim {
                            s += g[c] * basis[a][c];
                        }
                        gb[a] = s;
                        res[a] += geo.weight * th * s;
                    }
                    if with_matrix {
                        for a in 0..npc {
                            for b in a..npc {
                                let mut dotab = 0.0;
                                for c in 0..dim {
                                    dotab += basis[a][c] * basis[b][c];
                                }
                                mat[a][b] += geo.weight * (th * dotab + 2.0 * dth * gb[a] * gb[b]);
                            }
                        }
                    }
                }
                if with_matrix {
                    for a in 0..npc {
                        for b in 0..a {
                            mat[a][b] = mat[b][a];
                        }
                    }
                }
                (res, mat)
            })
            .collect();

        let n = self.mesh.node_count();
        let mut residual = vec![0.0; n];
        let mut matrix = with_matrix.then(|| self.pattern.clone());
        for (cell, (res, mat)) in locals.iter().enumerate() {
            let nodes = self.mesh.cell_nodes(cell);
            for a in 0..npc {
                residual[nodes[a]] += res[a];
            }
            if let Some(m) = matrix.as_mut() {
                let slots = &self.cell_slots[cell * npc * npc..(cell + 1) * npc * npc];
                for a in 0..npc {
                    for b in 0..npc {
                        m.values[slots[a * npc + b]] += mat[a][b];
                    }
                }
            }
        }
        let scale = self.boundary_scale(m0);
        for (r, l) in residual.iter_mut().zip(&self.outlet_load) {
            *r -= scale * l;
        }
        let pinned = field.dirichlet_count();
        residual[..pinned].iter_mut().for_each(|r| *r = 0.0);
        if let Some(m) = matrix.as_mut() {
            for i in 0..n {
                let start = m.row_ptr[i];
                let end = m.row_ptr[i + 1];
                for p in start..end {
                    let j = m.col_idx[p];
                    if i < pinned || j < pinned {
                        m.values[p] = if i == j { 1.0 } else { 0.0 };
                    }
                }
            }
        }
        (residual, matrix)
    }

    /// Volume quadrature points with value and physical gradient.
    pub fn quadrature_samples(&self, field: &DiscreteField) -> Vec<QpSample> {
        let nqp = self.qp_per_cell();
        let npc = self.mesh.nodes_per_cell();
        (0..self.mesh.cell_count())
            .into_par_iter()
            .flat_map_iter(|cell| {
                let (_, phi) = self.local_values(field, cell);
                (0..nqp).map(move |q| {
                    let geo = &self.geometry[cell * nqp + q];
                    let basis = self.physical_basis(q, geo);
                    let gradient = self.gradient_from(&basis, &phi);
                    let value = (0..npc).map(|a| phi[a] * self.ref_values[q][a]).sum();
                    QpSample {
                        cell,
                        x: geo.x,
                        weight: geo.weight,
                        value,
                        gradient,
                    }
                })
            })
            .collect()
    }

    /// `max |∇_x φ|²` over volume quadrature points and where it occurs.
    pub fn max_speed_squared(&self, field: &DiscreteField) -> (f64, [f64; 3]) {
        self.quadrature_samples(field)
            .iter()
            .map(|s| (s.gradient.iter().map(|g| g * g).sum::<f64>(), s.x))
            .fold(
                (0.0, [0.0; 3]),
                |best, cur| if cur.0 > best.0 { cur } else { best },
            )
    }

    fn check_station(&self, station: f64) -> Result<()> {
        let half = self.mesh.half_length();
        if !(station > -half && station < half) {
            return Err(Error::StationOutOfRange {
                station,
                half_length: half,
            });
        }
        Ok(())
    }

    /// Cross-section quadrature at the axial cell midplane nearest to `station`.
    pub fn section_samples(&self, field: &DiscreteField, station: f64) -> Result<SectionSamples> {
        self.check_station(station)?;
        let axial_cell = self.mesh.nearest_axial_cell(station);
        Ok(self.section_at_cell(field, axial_cell))
    }

    pub(crate) fn section_at_cell(
        &self,
        field: &DiscreteField,
        axial_cell: usize,
    ) -> SectionSamples {
        let dim = self.mesh.dim();
        let mesh = &self.mesh;
        let h = [
            mesh.spacing(0),
            mesh.spacing(1),
            mesh.spacing(2.min(dim - 1)),
        ];
        let xn = mesh.axial_midplane(axial_cell);
        let per_section = mesh.cells_per_section();
        let face_qp = 1 << (dim - 1);
        let mut points = Vec::with_capacity(per_section * face_qp);
        let mut measure = 0.0;
        for fc in 0..per_section {
            let cell = axial_cell * per_section + fc;
            let (_, phi) = self.local_values(field, cell);
            let origin = mesh.cell_origin(cell);
            for q in 0..face_qp {
                let mut xi = [0.0; 3];
                for t in 0..dim - 1 {
                    xi[t] = GAUSS2[(q >> t) & 1];
                }
                let (_, ref_grads) = shape_functions(dim, xi, h);
                let mut y = [0.0; 3];
                for t in 0..dim {
                    y[t] = origin[t] + 0.5 * h[t] * (1.0 + xi[t]);
                }
                let jac = self.map.jacobian(&y[..dim]);
                let geo = QpGeometry {
                    sigma: jac.sigma,
                    weight: 0.0,
                    x: [0.0; 3],
                };
                let mut basis = [[0.0; 3]; 8];
                for local in 0..(1 << dim) {
                    for c in 0..dim {
                        let mut s = 0.0;
                        for t in 0..dim {
                            s += geo.sigma[c][t] * ref_grads[local][t];
                        }
                        basis[local][c] = s;
                    }
                }
                let gradient = self.gradient_from(&basis, &phi);
                let weight = (0..dim - 1).map(|t| 0.5 * h[t]).product::<f64>() * jac.det;
                let xv = self.map.inverse_unchecked(&y[..dim]);
                let mut x = [0.0; 3];
                x[..dim].copy_from_slice(&xv);
                measure += weight;
                points.push(SectionPoint {
                    x,
                    weight,
                    gradient,
                });
            }
        }
        SectionSamples {
            station: xn,
            axial_cell,
            measure,
            points,
        }
    }

    /// `∫_S Θ(|∇φ|²) ∂φ/∂x_n dx'` over the cross-section at the midplane
    /// nearest to `station`.
    pub fn flux_through_section(&self, field: &DiscreteField, station: f64) -> Result<f64> {
        let samples = self.section_samples(field, station)?;
        Ok(self.flux_of(&samples))
    }

    pub(crate) fn flux_of(&self, samples: &SectionSamples) -> f64 {
        let dim = self.mesh.dim();
        let theta = self.energy.theta();
        samples
            .points
            .iter()
            .map(|p| {
                let s2: f64 = p.gradient.iter().map(|g| g * g).sum();
                p.weight * theta.theta(s2) * p.gradient[dim - 1]
            })
            .sum()
    }

    /// Flux at every axial cell midplane, in axial order.
    pub fn station_fluxes(&self, field: &DiscreteField) -> Vec<(f64, f64)> {
        (0..self.mesh.axial_cells())
            .into_par_iter()
            .map(|k| {
                let s = self.section_at_cell(field, k);
                (s.station, self.flux_of(&s))
            })
            .collect()
    }

    /// Nodal gradients recovered by averaging the cell gradients at each corner.
    pub fn nodal_gradients(&self, field: &DiscreteField) -> Vec<[f64; 3]> {
        let dim = self.mesh.dim();
        let mesh = &self.mesh;
        let h = [
            mesh.spacing(0),
            mesh.spacing(1),
            mesh.spacing(2.min(dim - 1)),
        ];
        let npc = mesh.nodes_per_cell();
        let mut sum = vec![[0.0; 3]; mesh.node_count()];
        let mut count = vec![0usize; mesh.node_count()];
        for cell in 0..mesh.cell_count() {
            let (nodes, phi) = self.local_values(field, cell);
            let origin = mesh.cell_origin(cell);
            for corner in 0..npc {
                let mut xi = [0.0; 3];
                let mut y = [0.0; 3];
                for t in 0..dim {
                    let up = (corner >> t) & 1 == 1;
                    xi[t] = if up { 1.0 } else { -1.0 };
                    y[t] = origin[t] + if up { h[t] } else { 0.0 };
                }
                let (_, ref_grads) = shape_functions(dim, xi, h);
                let jac = self.map.jacobian(&y[..dim]);
                let mut g = [0.0; 3];
                for local in 0..npc {
                    for c in 0..dim {
                        let mut s = 0.0;
                        for t in 0..dim {
                            s += jac.sigma[c][t] * ref_grads[local][t];
                        }
                        g[c] += phi[local] * s;
                    }
                }
                let node = nodes[corner];
                for c in 0..3 {
                    sum[node][c] += g[c];
                }
                count[node] += 1;
            }
        }
        sum.iter()
            .zip(&count)
            .map(|(s, &n)| [s[0] / n as f64, s[1] / n as f64, s[2] / n as f64])
            .collect()
    }
}

/// Nodal coupling pattern of multilinear elements (3^d stencil).
fn build_pattern(mesh: &Mesh) -> CsrMatrix {
    let dim = mesh.dim();
    let m = mesh.transverse_cells() + 1;
    let na = mesh.axial_cells() + 1;
    let n = mesh.node_count();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::new();
    row_ptr.push(0);
    let range = |c: usize, len: usize| c.saturating_sub(1)..(c + 2).min(len);
    for node in 0..n {
        let (k, t) = mesh.node_indices(node);
        for kk in range(k, na) {
            if dim == 2 {
                for ii in range(t[0], m) {
                    col_idx.push(mesh.node_index(kk, [ii, 0]));
                }
            } else {
                for jj in range(t[1], m) {
                    for ii in range(t[0], m) {
                        col_idx.push(mesh.node_index(kk, [ii, jj]));
                    }
                }
            }
        }
        row_ptr.push(col_idx.len());
    }
    let values = vec![0.0; col_idx.len()];
    CsrMatrix {
        n,
        row_ptr,
        col_idx,
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_functions_partition_unity() {
        for dim in [2, 3] {
            let (v, g) = shape_functions(dim, [0.3, -0.2, 0.7], [0.5, 0.25, 2.0]);
            let sum: f64 = v.iter().take(1 << dim).sum();
            assert!((sum - 1.0).abs() < 1e-15);
            for t in 0..dim {
                let gs: f64 = g.iter().take(1 << dim).map(|gr| gr[t]).sum();
                assert!(gs.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn pattern_is_sorted_stencil() {
        let mesh = Mesh::new(3, 1.0, 2, 4).unwrap();
        let p = build_pattern(&mesh);
        for i in 0..p.n {
            let (cols, _) = p.row(i);
            assert!(cols.windows(2).all(|w| w[0] < w[1]));
            assert!(cols.contains(&i));
        }
        // interior node of a 3x3x5 grid couples to 27 nodes
        let centre = mesh.node_index(2, [1, 1]);
        assert_eq!(p.row(centre).0.len(), 27);
    }
}
