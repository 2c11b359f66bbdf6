//! C ABI for the `nozzleflow` solver.
//!
//! Every function returns an [`NfStatus`]; on failure a description is kept
//! per thread and can be fetched with [`nf_last_error`]. Solvers are opaque
//! handles created by [`nf_solver_new`] and released by [`nf_solver_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nozzleflow::gas::{DensityRelation, GasLaw};
use nozzleflow::mesh_fem::{DiscreteField, Discretization};
use nozzleflow::nozzle::Profile;
use nozzleflow::solver::{newton_solve, NewtonConfig, SolverReport};
use nozzleflow::{Error, ProblemSpec};

/// Result codes shared by all entry points.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Input outside the physical range (e.g. speed beyond the vacuum limit).
    Domain = 3,
    NoConvergence = 4,
    BufferTooSmall = 5,
    /// The handle has no solution yet.
    NotSolved = 6,
    /// A Rust panic was caught at the boundary.
    Panic = 7,
}

/// Nozzle wall shapes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NfProfileKind {
    /// `p1` = radius.
    Cylinder = 0,
    /// `p1` = upstream radius, `p2` = downstream radius, `p3` = transition length.
    TanhExpansion = 1,
    /// `p1` = radius, `p2` = throat depth, `p3` = throat width.
    GaussianThroat = 2,
}

/// Problem description passed to [`nf_solver_new`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NfProblem {
    pub gamma: f64,
    /// Truncation margin; pass 0 for the default.
    pub delta0: f64,
    /// 2 or 3.
    pub dim: u32,
    /// One of the `NfProfileKind` values.
    pub kind: u32,
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub half_length: f64,
    pub transverse_cells: u32,
    pub axial_cells: u32,
}

/// Outcome of [`nf_solver_solve`].
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NfSolveSummary {
    pub iterations: u32,
    /// 1 when the maximum speed stays below the certified limit.
    pub certified: i32,
    pub max_speed: f64,
    pub flux_error: f64,
    pub final_energy: f64,
    pub final_residual: f64,
}

/// Opaque solver handle.
pub struct NfSolver {
    disc: Discretization,
    solution: Option<(DiscreteField, SolverReport)>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> NfStatus {
    match err {
        Error::Domain { .. } | Error::InfeasibleFlux(_) | Error::OutOfDomain { .. } => {
            NfStatus::Domain
        }
        Error::NoConvergence { .. } | Error::LineSearch { .. } | Error::LinearSolver(_) => {
            NfStatus::NoConvergence
        }
        _ => NfStatus::InvalidArgument,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (NfStatus, String)>) -> NfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            NfStatus::Ok
        }
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            NfStatus::Panic
        }
    }
}

fn lift(err: Error) -> (NfStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (NfStatus, String) {
    (NfStatus::NullPointer, format!("{what} is null"))
}

/// Copies the last error message of the calling thread into `buf` (NUL
/// terminated, truncated to `cap`) and returns the full length including
/// the terminator; returns 0 when there is no error.
///
/// # Safety
/// `buf` must be null or valid for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn nf_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n - 1) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Density `ρ(q²)` of the isentropic gas with exponent `gamma`.
///
/// # Safety
/// `out` must be null or point to writable storage for one `double`.
#[no_mangle]
pub unsafe extern "C" fn nf_gas_density(gamma: f64, q2: f64, out: *mut f64) -> NfStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let rel = DensityRelation::new(GasLaw::new(gamma).map_err(lift)?);
        *out = rel.density(q2).map_err(lift)?;
        Ok(())
    })
}

/// Subsonic speed `q` with `ρ(q²)q = j`.
///
/// # Safety
/// `out` must be null or point to writable storage for one `double`.
#[no_mangle]
pub unsafe extern "C" fn nf_gas_speed_from_flux(gamma: f64, j: f64, out: *mut f64) -> NfStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let rel = DensityRelation::new(GasLaw::new(gamma).map_err(lift)?);
        *out = rel.solve_q_from_flux(j).map_err(lift)?;
        Ok(())
    })
}

fn build_spec(p: &NfProblem) -> Result<ProblemSpec, (NfStatus, String)> {
    let dim = p.dim as usize;
    let profile = match p.kind {
        k if k == NfProfileKind::Cylinder as u32 => Profile::cylinder(dim, p.p1),
        k if k == NfProfileKind::TanhExpansion as u32 => {
            Profile::tanh_expansion(dim, p.p1, p.p2, p.p3)
        }
        k if k == NfProfileKind::GaussianThroat as u32 => {
            Profile::gaussian_throat(dim, p.p1, p.p2, p.p3)
        }
        k => {
            return Err((
                NfStatus::InvalidArgument,
                format!("unknown profile kind {k}"),
            ))
        }
    }
    .map_err(lift)?;
    Ok(ProblemSpec {
        gamma: p.gamma,
        delta0: if p.delta0 == 0.0 {
            ProblemSpec::DEFAULT_DELTA0
        } else {
            p.delta0
        },
        profile,
        half_length: p.half_length,
        transverse_cells: p.transverse_cells as usize,
        axial_cells: p.axial_cells as usize,
    })
}

/// Builds the mesh and discretization for `problem` and stores a new handle
/// in `*out`.
///
/// # Safety
/// `problem` must be null or point to a valid `NfProblem`; `out` must be null
/// or writable.
#[no_mangle]
pub unsafe extern "C" fn nf_solver_new(
    problem: *const NfProblem,
    out: *mut *mut NfSolver,
) -> NfStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = ptr::null_mut();
        let problem = problem.as_ref().ok_or_else(|| null("problem"))?;
        let disc = build_spec(problem)?.discretize().map_err(lift)?;
        *out = Box::into_raw(Box::new(NfSolver {
            disc,
            solution: None,
        }));
        Ok(())
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `solver` must be null or a handle from [`nf_solver_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nf_solver_free(solver: *mut NfSolver) {
    if !solver.is_null() {
        drop(Box::from_raw(solver));
    }
}

/// Number of mesh nodes (and potential coefficients).
///
/// # Safety
/// `solver` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn nf_solver_node_count(
    solver: *const NfSolver,
    out: *mut usize,
) -> NfStatus {
    guard(|| {
        let solver = solver.as_ref().ok_or_else(|| null("solver"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = solver.disc.mesh().node_count();
        Ok(())
    })
}

/// Solves at flux `m0` from the zero field. `summary` may be null.
///
/// # Safety
/// `solver` must be null or a live handle; `summary` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn nf_solver_solve(
    solver: *mut NfSolver,
    m0: f64,
    summary: *mut NfSolveSummary,
) -> NfStatus {
    guard(|| {
        let solver = solver.as_mut().ok_or_else(|| null("solver"))?;
        let zero = DiscreteField::zeros(solver.disc.mesh());
        let (field, report) =
            newton_solve(&solver.disc, m0, zero, &NewtonConfig::default()).map_err(lift)?;
        if let Some(s) = summary.as_mut() {
            *s = NfSolveSummary {
                iterations: report.iterations as u32,
                certified: report.truncation_certified as i32,
                max_speed: report.max_speed,
                flux_error: report.flux_error,
                final_energy: report.final_energy,
                final_residual: report.residual_history.last().copied().unwrap_or(0.0),
            };
        }
        solver.solution = Some((field, report));
        Ok(())
    })
}

/// Copies the nodal potential of the last solution into `buf`.
///
/// # Safety
/// `solver` must be null or a live handle; `buf` must be null or valid for
/// `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nf_solver_copy_potential(
    solver: *const NfSolver,
    buf: *mut f64,
    len: usize,
) -> NfStatus {
    guard(|| {
        let solver = solver.as_ref().ok_or_else(|| null("solver"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let (field, _) = solver.solution.as_ref().ok_or((
            NfStatus::NotSolved,
            "solve has not succeeded yet".to_string(),
        ))?;
        let values = field.values();
        if len < values.len() {
            return Err((
                NfStatus::BufferTooSmall,
                format!("need {} doubles, got {len}", values.len()),
            ));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
        Ok(())
    })
}

/// Copies physical node coordinates (`dim` doubles per node, in node order)
/// into `buf`.
///
/// # Safety
/// `solver` must be null or a live handle; `buf` must be null or valid for
/// `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nf_solver_copy_nodes(
    solver: *const NfSolver,
    buf: *mut f64,
    len: usize,
) -> NfStatus {
    guard(|| {
        let solver = solver.as_ref().ok_or_else(|| null("solver"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let mesh = solver.disc.mesh();
        let need = mesh.node_count() * mesh.dim();
        if len < need {
            return Err((
                NfStatus::BufferTooSmall,
                format!("need {need} doubles, got {len}"),
            ));
        }
        let out = std::slice::from_raw_parts_mut(buf, need);
        for (node, chunk) in out.chunks_exact_mut(mesh.dim()).enumerate() {
            chunk.copy_from_slice(&mesh.node_physical(solver.disc.map(), node));
        }
        Ok(())
    })
}
