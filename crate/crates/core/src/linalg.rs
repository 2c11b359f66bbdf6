//! Sparse symmetric matrices and the two linear solvers used by Newton:
//! Jacobi-preconditioned conjugate gradients and a banded Cholesky
//! factorization for small systems.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Square matrix in compressed-row layout with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    /// Position of `(i, j)` in `values`, if structurally present.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_ptr[i];
        let (cols, _) = self.row(i);
        cols.binary_search(&j).ok().map(|p| start + p)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |p| self.values[p])
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let (cols, vals) = self.row(i);
            let mut s = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                s += v * x[*c];
            }
            *yi = s;
        });
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `max |A − Aᵀ|`.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Largest `|i − j|` over stored entries.
    pub fn half_bandwidth(&self) -> usize {
        let mut bw = 0;
        for i in 0..self.n {
            let (cols, _) = self.row(i);
            if let (Some(&first), Some(&last)) = (cols.first(), cols.last()) {
                bw = bw.max(i.saturating_sub(first)).max(last.saturating_sub(i));
            }
        }
        bw
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                row[j] = v;
            }
        }
        d
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub relative_residual: f64,
    /// Extreme Ritz values of the preconditioned operator from the Lanczos
    /// tridiagonal implied by the CG coefficients.
    pub ritz_min: f64,
    pub ritz_max: f64,
}

/// Jacobi-preconditioned conjugate gradients for SPD `a`, stopping when
/// `‖r‖ ≤ rel_tol·‖b‖`. Fails on a non-positive curvature `pᵀAp`.
pub fn pcg(a: &CsrMatrix, b: &[f64], rel_tol: f64, max_iter: usize) -> Result<CgOutcome> {
    let n = a.n;
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            solution: x,
            iterations: 0,
            converged: true,
            relative_residual: 0.0,
            ritz_min: f64::NAN,
            ritz_max: f64::NAN,
        });
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut alphas = Vec::new();
    let mut betas = Vec::new();
    let mut rel = 1.0;
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..max_iter {
        a.matvec(&p, &mut ap);
        let curvature = dot(&p, &ap);
        if !(curvature > 0.0) {
            return Err(Error::LinearSolver(format!(
                "non-positive curvature {curvature:.3e} at CG iteration {it}"
            )));
        }
        let alpha = rz / curvature;
        x.par_iter_mut()
            .zip(&p)
            .for_each(|(xi, pi)| *xi += alpha * pi);
        r.par_iter_mut()
            .zip(&ap)
            .for_each(|(ri, api)| *ri -= alpha * api);
        alphas.push(alpha);
        iterations = it + 1;
        rel = norm(&r) / b_norm;
        if rel <= rel_tol {
            converged = true;
            break;
        }
        z.iter_mut()
            .zip(&r)
            .zip(&inv_diag)
            .for_each(|((zi, ri), di)| *zi = ri * di);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        betas.push(beta);
        rz = rz_new;
        p.par_iter_mut()
            .zip(&z)
            .for_each(|(pi, zi)| *pi = zi + beta * *pi);
    }
    let (ritz_min, ritz_max) = lanczos_extremes(&alphas, &betas);
    Ok(CgOutcome {
        solution: x,
        iterations,
        converged,
        relative_residual: rel,
        ritz_min,
        ritz_max,
    })
}

/// Extreme eigenvalues of the Lanczos tridiagonal built from CG step
/// lengths `α_j` and direction updates `β_j`.
fn lanczos_extremes(alphas: &[f64], betas: &[f64]) -> (f64, f64) {
    let m = alphas.len();
    if m == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut diag = vec![0.0; m];
    let mut off = vec![0.0; m.saturating_sub(1)];
    for j in 0..m {
        diag[j] = 1.0 / alphas[j];
        if j > 0 {
            diag[j] += betas[j - 1] / alphas[j - 1];
        }
        if j + 1 < m {
            off[j] = betas[j].sqrt() / alphas[j];
        }
    }
    let gersh_lo = (0..m)
        .map(|j| {
            let l = if j > 0 { off[j - 1].abs() } else { 0.0 };
            let r = if j + 1 < m { off[j].abs() } else { 0.0 };
            diag[j] - l - r
        })
        .fold(f64::INFINITY, f64::min);
    let gersh_hi = (0..m)
        .map(|j| {
            let l = if j > 0 { off[j - 1].abs() } else { 0.0 };
            let r = if j + 1 < m { off[j].abs() } else { 0.0 };
            diag[j] + l + r
        })
        .fold(f64::NEG_INFINITY, f64::max);
    // Sturm count: number of eigenvalues below x.
    let count_below = |x: f64| {
        let mut count = 0;
        let mut d = 1.0;
        for j in 0..m {
            let o2 = if j > 0 { off[j - 1] * off[j - 1] } else { 0.0 };
            d = diag[j] - x - if j > 0 { o2 / d } else { 0.0 };
            if d == 0.0 {
                d = -1e-300;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    let bisect = |target: usize| {
        let (mut lo, mut hi) = (gersh_lo, gersh_hi);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if count_below(mid) > target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    };
    (bisect(0), bisect(m - 1))
}

/// Cholesky factor of a symmetric banded matrix, stored row-wise as the
/// `bw + 1` entries `L[i][i−bw ..= i]`.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    factor: Vec<f64>,
}

impl BandedCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.n;
        let bw = a.half_bandwidth();
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        // l[i*w + (j + bw − i)] holds L[i][j] for i−bw ≤ j ≤ i.
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j <= i {
                    l[i * w + (j + bw - i)] = v;
                }
            }
        }
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let mut s = l[i * w + (j + bw - i)];
                let k0 = j0.max(j.saturating_sub(bw));
                for k in k0..j {
                    s -= l[i * w + (k + bw - i)] * l[j * w + (k + bw - j)];
                }
                if j == i {
                    if !(s > 0.0) {
                        return Err(Error::LinearSolver(format!(
                            "matrix not positive definite (pivot {s:.3e} at row {i})"
                        )));
                    }
                    l[i * w + bw] = s.sqrt();
                } else {
                    l[i * w + (j + bw - i)] = s / l[j * w + bw];
                }
            }
        }
        Ok(Self { n, bw, factor: l })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        let l = &self.factor;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(bw)..i {
                s -= l[i * w + (k + bw - i)] * y[k];
            }
            y[i] = s / l[i * w + bw];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= l[k * w + (i + bw - k)] * y[k];
            }
            y[i] = s / l[i * w + bw];
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 1D Laplacian with Dirichlet ends, n unknowns.
    fn laplacian(n: usize) -> CsrMatrix {
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for i in 0..n {
            if i > 0 {
                col_idx.push(i - 1);
                values.push(-1.0);
            }
            col_idx.push(i);
            values.push(2.0);
            if i + 1 < n {
                col_idx.push(i + 1);
                values.push(-1.0);
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    #[test]
    fn cg_and_cholesky_agree() {
        let a = laplacian(50);
        let b: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let cg = pcg(&a, &b, 1e-13, 500).unwrap();
        assert!(cg.converged);
        let chol = BandedCholesky::factor(&a).unwrap().solve(&b);
        for (x, y) in cg.solution.iter().zip(&chol) {
            assert!((x - y).abs() < 1e-9);
        }
        let mut ax = vec![0.0; 50];
        a.matvec(&chol, &mut ax);
        for (u, v) in ax.iter().zip(&b) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn ritz_values_bracket_spectrum() {
        let n = 30;
        let a = laplacian(n);
        let b = vec![1.0; n];
        let cg = pcg(&a, &b, 1e-14, 200).unwrap();
        // Jacobi scaling by 1/2: spectrum of D⁻¹A is 1 − cos(kπ/(n+1)).
        let lo = 1.0 - (std::f64::consts::PI / (n as f64 + 1.0)).cos();
        let hi = 1.0 + (std::f64::consts::PI / (n as f64 + 1.0)).cos();
        assert!(cg.ritz_min > 0.0);
        assert!(cg.ritz_min >= lo - 1e-8 && cg.ritz_max <= hi + 1e-8);
    }

    #[test]
    fn indefinite_matrix_is_detected() {
        let mut a = laplacian(10);
        for v in a.values.iter_mut() {
            *v = -*v;
        }
        assert!(BandedCholesky::factor(&a).is_err());
        let b = vec![1.0; 10];
        assert!(pcg(&a, &b, 1e-12, 100).is_err() || !pcg(&a, &b, 1e-12, 100).unwrap().converged);
    }

    #[test]
    fn symmetry_and_bandwidth() {
        let a = laplacian(8);
        assert_eq!(a.max_asymmetry(), 0.0);
        assert_eq!(a.half_bandwidth(), 1);
    }
}
