//! C ABI over the qnls library.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `_free` function. Every entry point returns a
//! [`QnlsStatus`] and never unwinds across the boundary. On failure the
//! message is available from [`qnls_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use num_complex::Complex64;
use qnls::cli::{read_snapshot, write_snapshot, Snapshot};
use qnls::evolution::{evolve_state, EvolutionConfig};
use qnls::fields::{conserved, galilean_boost, FieldPair};
use qnls::grid::{Field, RadialGrid, UniformGrid};
use qnls::ground_state::{petviashvili_solve, GroundState};
use qnls::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QnlsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numeric = 3,
    Io = 4,
    Panic = 5,
}

/// Converged radial ground state.
pub struct QnlsGroundState {
    inner: GroundState,
}

/// Field pair on a uniform periodic grid.
pub struct QnlsFieldPair {
    inner: FieldPair,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QnlsGroundStateConstants {
    pub mass: f64,
    pub kinetic: f64,
    pub potential: f64,
    /// `H/M` and `R/M`.
    pub ratio_kinetic: f64,
    pub ratio_potential: f64,
    pub c_gn: f64,
    pub me_threshold: f64,
    pub mh_threshold: f64,
    pub residual: f64,
    pub iterations: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QnlsConserved {
    pub mass: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub energy: f64,
    /// Unused axes are zero.
    pub momentum: [f64; 3],
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> QnlsStatus {
    match e {
        Error::Io(_) | Error::Format(_) => QnlsStatus::Io,
        Error::NonFinite(_) | Error::NotConverged { .. } | Error::Numeric(_) => QnlsStatus::Numeric,
        _ => QnlsStatus::InvalidArgument,
    }
}

/// Runs `f`, recording any error or panic.
fn guard(f: impl FnOnce() -> Result<(), (QnlsStatus, String)>) -> QnlsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            QnlsStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("panic: {msg}"));
            QnlsStatus::Panic
        }
    }
}

fn lib<T>(r: qnls::Result<T>) -> Result<T, (QnlsStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (QnlsStatus, String) {
    (QnlsStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> (QnlsStatus, String) {
    (QnlsStatus::InvalidArgument, msg.into())
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, (QnlsStatus, String)> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p).to_str().map_err(|_| invalid("path is not valid UTF-8"))?;
    Ok(Path::new(s))
}

/// Message describing the last failure on this thread, empty after a
/// success. The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn qnls_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Solves for the radial ground state on `m` nodes in `[0, r_max]`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn qnls_ground_state_solve(
    m: usize,
    r_max: f64,
    kappa: f64,
    tol: f64,
    max_iter: usize,
    out: *mut *mut QnlsGroundState,
) -> QnlsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let grid = lib(RadialGrid::new(m, r_max))?;
        let inner = lib(petviashvili_solve(grid, kappa, tol, max_iter))?;
        *out = Box::into_raw(Box::new(QnlsGroundState { inner }));
        Ok(())
    })
}

/// # Safety
/// `gs` must come from [`qnls_ground_state_solve`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qnls_ground_state_constants(
    gs: *const QnlsGroundState,
    out: *mut QnlsGroundStateConstants,
) -> QnlsStatus {
    guard(|| {
        let gs = &gs.as_ref().ok_or_else(|| null("ground state"))?.inner;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = QnlsGroundStateConstants {
            mass: gs.mass,
            kinetic: gs.kinetic,
            potential: gs.potential,
            ratio_kinetic: gs.ratios[1],
            ratio_potential: gs.ratios[2],
            c_gn: gs.c_gn,
            me_threshold: gs.me_threshold,
            mh_threshold: gs.mh_threshold,
            residual: gs.residual,
            iterations: gs.iterations as u64,
        };
        Ok(())
    })
}

/// # Safety
/// `gs` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qnls_ground_state_free(gs: *mut QnlsGroundState) {
    if !gs.is_null() {
        drop(Box::from_raw(gs));
    }
}

unsafe fn samples(p: *const f64, count: usize) -> Vec<Complex64> {
    std::slice::from_raw_parts(p, 2 * count).chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect()
}

/// Builds a pair on the cubic grid with `n` points per axis from
/// interleaved `(re, im)` arrays of `2 nᵈ` doubles each.
///
/// # Safety
/// `u` and `v` must point to `2 nᵈ` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qnls_pair_new(
    dim: usize,
    n: usize,
    length: f64,
    kappa: f64,
    u: *const f64,
    v: *const f64,
    out: *mut *mut QnlsFieldPair,
) -> QnlsStatus {
    guard(|| {
        if u.is_null() || v.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let grid = lib(UniformGrid::new(dim, n, length))?;
        let size = grid.size();
        let fu = lib(Field::new(grid, samples(u, size)))?;
        let fv = lib(Field::new(grid, samples(v, size)))?;
        let inner = lib(FieldPair::new(fu, fv, kappa))?;
        *out = Box::into_raw(Box::new(QnlsFieldPair { inner }));
        Ok(())
    })
}

/// Number of complex samples per field.
///
/// # Safety
/// `pair` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qnls_pair_size(pair: *const QnlsFieldPair, out: *mut usize) -> QnlsStatus {
    guard(|| {
        let p = &pair.as_ref().ok_or_else(|| null("pair"))?.inner;
        *out.as_mut().ok_or_else(|| null("out"))? = p.grid().size();
        Ok(())
    })
}

/// # Safety
/// `pair` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qnls_pair_conserved(pair: *const QnlsFieldPair, out: *mut QnlsConserved) -> QnlsStatus {
    guard(|| {
        let p = &pair.as_ref().ok_or_else(|| null("pair"))?.inner;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let c = conserved(p);
        let mut momentum = [0.0; 3];
        momentum[..c.momentum.len()].copy_from_slice(&c.momentum);
        *out = QnlsConserved { mass: c.mass, kinetic: c.kinetic, potential: c.potential, energy: c.energy, momentum };
        Ok(())
    })
}

/// Applies the Galilean boost `(e^{iκx·ξ}u, e^{ix·ξ}v)` in place; `xi`
/// holds one component per grid axis.
///
/// # Safety
/// `pair` must be a live handle; `xi` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qnls_pair_boost(pair: *mut QnlsFieldPair, xi: *const f64, len: usize) -> QnlsStatus {
    guard(|| {
        let p = pair.as_mut().ok_or_else(|| null("pair"))?;
        if xi.is_null() {
            return Err(null("xi"));
        }
        if len != p.inner.grid().dim() {
            return Err(invalid(format!("xi has {len} components, grid dimension {}", p.inner.grid().dim())));
        }
        p.inner = lib(galilean_boost(&p.inner, std::slice::from_raw_parts(xi, len)))?;
        Ok(())
    })
}

/// Advances the pair to `t_final` with step `dt` in place. A flagged
/// blow-up returns a numeric error and leaves the pair unchanged.
///
/// # Safety
/// `pair` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qnls_pair_evolve(pair: *mut QnlsFieldPair, dt: f64, t_final: f64) -> QnlsStatus {
    guard(|| {
        let p = pair.as_mut().ok_or_else(|| null("pair"))?;
        let cfg = EvolutionConfig::new(dt, t_final, p.inner.kappa());
        p.inner = lib(evolve_state(&p.inner, &cfg))?;
        Ok(())
    })
}

/// Copies interleaved `(re, im)` samples into `u_out` and `v_out`, each of
/// `2 · len` doubles where `len` must equal [`qnls_pair_size`].
///
/// # Safety
/// `pair` must be a live handle; the outputs must hold `2 · len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qnls_pair_copy_fields(
    pair: *const QnlsFieldPair,
    u_out: *mut f64,
    v_out: *mut f64,
    len: usize,
) -> QnlsStatus {
    guard(|| {
        let p = &pair.as_ref().ok_or_else(|| null("pair"))?.inner;
        if u_out.is_null() || v_out.is_null() {
            return Err(null("output buffer"));
        }
        if len != p.grid().size() {
            return Err(invalid(format!("buffer holds {len} samples, pair has {}", p.grid().size())));
        }
        for (dst, f) in [(u_out, &p.u), (v_out, &p.v)] {
            let out = std::slice::from_raw_parts_mut(dst, 2 * len);
            for (c, z) in out.chunks_exact_mut(2).zip(f.data()) {
                c[0] = z.re;
                c[1] = z.im;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `pair` must be a live handle; `path` a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn qnls_pair_write_snapshot(pair: *const QnlsFieldPair, t: f64, path: *const c_char) -> QnlsStatus {
    guard(|| {
        let p = &pair.as_ref().ok_or_else(|| null("pair"))?.inner;
        let path = path_arg(path)?;
        lib(write_snapshot(&Snapshot::Uniform(p.clone()), t, path))
    })
}

/// Reads a uniform-grid snapshot; `t_out` may be null.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qnls_pair_read_snapshot(
    path: *const c_char,
    out: *mut *mut QnlsFieldPair,
    t_out: *mut f64,
) -> QnlsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = path_arg(path)?;
        let (snap, t) = lib(read_snapshot(path))?;
        let Snapshot::Uniform(inner) = snap else {
            return Err(invalid("snapshot holds radial data"));
        };
        if let Some(t_out) = t_out.as_mut() {
            *t_out = t;
        }
        *out = Box::into_raw(Box::new(QnlsFieldPair { inner }));
        Ok(())
    })
}

/// # Safety
/// `pair` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qnls_pair_free(pair: *mut QnlsFieldPair) {
    if !pair.is_null() {
        drop(Box::from_raw(pair));
    }
}
