//! C interface to `quasilevel`.
//!
//! Every function returns a [`QlStatus`]; on failure the message is kept in
//! a thread-local buffer readable through [`ql_last_error_message`]. Handles
//! are opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use quasilevel::level::grid::GridField;
use quasilevel::level::percolation::estimate_epsilon_nm;
use quasilevel::level::scan::max_closed_diameter;
use quasilevel::magic::{diameter_bound, make_magic_angle, Rect};
use quasilevel::potential::{Angle, PotentialSpec};
use quasilevel::{Error, Vec2};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidPair = 3,
    Overflow = 4,
    NotPeriodic = 5,
    WindowTooSmall = 6,
    Ambiguous = 7,
    MemoryCap = 8,
    NonGeneric = 9,
    Internal = 10,
}

/// Opaque potential `V(r, α, a)`.
pub struct QlPotential(PotentialSpec);

/// Opaque sampled grid.
pub struct QlGrid(GridField);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QlMagicAngle {
    pub n: u64,
    pub m: u64,
    pub m0: u64,
    pub n0: u64,
    pub angle: f64,
    pub b1_x: f64,
    pub b1_y: f64,
    pub b2_x: f64,
    pub b2_y: f64,
    pub t_nm: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QlClosedStats {
    pub d_hat: f64,
    pub closed: u64,
    pub censored: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QlThreshold {
    pub positive_lo: f64,
    pub positive_hi: f64,
    pub negative_lo: f64,
    pub negative_hi: f64,
    pub spacing: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> QlStatus {
    match e {
        Error::InvalidPair { .. } => QlStatus::InvalidPair,
        Error::IntegerOverflow { .. } => QlStatus::Overflow,
        Error::NotPeriodic { .. } | Error::WrongBoundary { .. } => QlStatus::NotPeriodic,
        Error::WindowTooSmall { .. } => QlStatus::WindowTooSmall,
        Error::Ambiguous { .. } | Error::ThresholdMismatch { .. } => QlStatus::Ambiguous,
        Error::MemoryCapExceeded { .. } => QlStatus::MemoryCap,
        Error::NonGeneric(_) | Error::NewtonStall { .. } => QlStatus::NonGeneric,
        _ => QlStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (QlStatus, String)>) -> QlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            QlStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            QlStatus::Internal
        }
    }
}

fn lib<T>(r: quasilevel::Result<T>) -> Result<T, (QlStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), (QlStatus, String)> {
    if p.is_null() {
        Err((QlStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ql_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates `V(r, α, a)` with `alpha` in radians.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ql_potential_new(
    v0: f64,
    k: f64,
    alpha: f64,
    ax: f64,
    ay: f64,
    out: *mut *mut QlPotential,
) -> QlStatus {
    guard(|| {
        non_null(out, "out")?;
        let spec = lib(PotentialSpec::new(v0, k, Angle::Radians(alpha), Vec2::new(ax, ay)))?;
        *out = Box::into_raw(Box::new(QlPotential(spec)));
        Ok(())
    })
}

/// # Safety
/// `p` must be null or a handle from [`ql_potential_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ql_potential_free(p: *mut QlPotential) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ql_potential_eval(p: *const QlPotential, x: f64, y: f64, out: *mut f64) -> QlStatus {
    guard(|| {
        non_null(p, "potential")?;
        non_null(out, "out")?;
        *out = (*p).0.eval(Vec2::new(x, y));
        Ok(())
    })
}

/// Gradient with respect to `r`.
///
/// # Safety
/// `p` must be a live handle and `gx`, `gy` writable.
#[no_mangle]
pub unsafe extern "C" fn ql_potential_grad(
    p: *const QlPotential,
    x: f64,
    y: f64,
    gx: *mut f64,
    gy: *mut f64,
) -> QlStatus {
    guard(|| {
        non_null(p, "potential")?;
        non_null(gx, "gx")?;
        non_null(gy, "gy")?;
        let g = (*p).0.grad_r(Vec2::new(x, y));
        *gx = g.x;
        *gy = g.y;
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ql_magic_angle(n: u64, m: u64, out: *mut QlMagicAngle) -> QlStatus {
    guard(|| {
        non_null(out, "out")?;
        let a = lib(make_magic_angle(n, m))?;
        *out = QlMagicAngle {
            n: a.n,
            m: a.m,
            m0: a.m0,
            n0: a.n0,
            angle: a.angle,
            b1_x: a.b1.x,
            b1_y: a.b1.y,
            b2_x: a.b2.x,
            b2_y: a.b2.y,
            t_nm: a.t_nm,
        };
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ql_diameter_bound(epsilon: f64, v0: f64, k: f64, out: *mut f64) -> QlStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = lib(diameter_bound(epsilon, v0, k))?;
        Ok(())
    })
}

/// Samples `p` on the square window of edge `edge` centred at `(cx, cy)`.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ql_grid_sample_open(
    p: *const QlPotential,
    cx: f64,
    cy: f64,
    edge: f64,
    spacing: f64,
    out: *mut *mut QlGrid,
) -> QlStatus {
    guard(|| {
        non_null(p, "potential")?;
        non_null(out, "out")?;
        if !(edge.is_finite() && edge > 0.0) {
            return Err((QlStatus::InvalidArgument, format!("edge must be positive, got {edge}")));
        }
        let g = lib(GridField::sample_open(&(*p).0, Rect::centered(Vec2::new(cx, cy), 0.5 * edge), spacing))?;
        *out = Box::into_raw(Box::new(QlGrid(g)));
        Ok(())
    })
}

/// Samples one period cell of the `(n, m)` approximant with shift `a` and
/// `cells` samples per side.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ql_grid_sample_periodic(
    n: u64,
    m: u64,
    ax: f64,
    ay: f64,
    cells: usize,
    out: *mut *mut QlGrid,
) -> QlStatus {
    guard(|| {
        non_null(out, "out")?;
        let angle = lib(make_magic_angle(n, m))?;
        let spec = lib(PotentialSpec::new(1.0, 1.0, Angle::Radians(angle.angle), Vec2::new(ax, ay)))?;
        let g = lib(GridField::sample_periodic(&spec, &angle, cells, Vec2::ZERO))?;
        *out = Box::into_raw(Box::new(QlGrid(g)));
        Ok(())
    })
}

/// # Safety
/// `g` must be null or a grid handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ql_grid_free(g: *mut QlGrid) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Dimensions and a borrowed pointer to the row-major values, valid while
/// the grid lives.
///
/// # Safety
/// `g` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn ql_grid_values(
    g: *const QlGrid,
    nx: *mut usize,
    ny: *mut usize,
    values: *mut *const f64,
) -> QlStatus {
    guard(|| {
        non_null(g, "grid")?;
        non_null(nx, "nx")?;
        non_null(ny, "ny")?;
        non_null(values, "values")?;
        let f = &(*g).0;
        *nx = f.nx();
        *ny = f.ny();
        *values = f.values().as_ptr();
        Ok(())
    })
}

/// Largest closed component diameter at `epsilon` over both signs.
///
/// # Safety
/// `g` must be a live open-window grid handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ql_max_closed_diameter(g: *const QlGrid, epsilon: f64, out: *mut QlClosedStats) -> QlStatus {
    guard(|| {
        non_null(g, "grid")?;
        non_null(out, "out")?;
        let s = lib(max_closed_diameter(&(*g).0, epsilon))?;
        *out = QlClosedStats { d_hat: s.d_hat, closed: s.closed, censored: s.censored };
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ql_estimate_epsilon_nm(
    n: u64,
    m: u64,
    ax: f64,
    ay: f64,
    tol: f64,
    out: *mut QlThreshold,
) -> QlStatus {
    guard(|| {
        non_null(out, "out")?;
        let e = lib(estimate_epsilon_nm(n, m, Vec2::new(ax, ay), tol))?;
        *out = QlThreshold {
            positive_lo: e.positive.0,
            positive_hi: e.positive.1,
            negative_lo: e.negative.0,
            negative_hi: e.negative.1,
            spacing: e.spacing,
        };
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CStr;
    use std::ptr;

    fn last_error() -> String {
        unsafe { CStr::from_ptr(ql_last_error_message()) }.to_string_lossy().into_owned()
    }

    #[test]
    fn potential_round_trip() {
        let mut p = ptr::null_mut();
        unsafe {
            assert_eq!(ql_potential_new(1.0, 1.0, std::f64::consts::FRAC_PI_4, 0.0, 0.0, &mut p), QlStatus::Ok);
            let mut v = 0.0;
            assert_eq!(ql_potential_eval(p, 0.0, 0.0, &mut v), QlStatus::Ok);
            assert_eq!(v, 4.0);
            let (mut gx, mut gy) = (1.0, 1.0);
            assert_eq!(ql_potential_grad(p, 0.0, 0.0, &mut gx, &mut gy), QlStatus::Ok);
            assert_eq!((gx, gy), (0.0, 0.0));
            let mut g = ptr::null_mut();
            assert_eq!(ql_grid_sample_open(p, 0.0, 0.0, 40.0, 0.2, &mut g), QlStatus::Ok);
            let (mut nx, mut ny, mut vals) = (0, 0, ptr::null());
            assert_eq!(ql_grid_values(g, &mut nx, &mut ny, &mut vals), QlStatus::Ok);
            assert!(nx > 100 && ny == nx);
            let mut s = QlClosedStats::default();
            assert_eq!(ql_max_closed_diameter(g, 1.0, &mut s), QlStatus::Ok);
            assert!(s.closed > 0 && s.d_hat > 0.0);
            ql_grid_free(g);
            ql_potential_free(p);
        }
        assert_eq!(last_error(), "");
    }

    #[test]
    fn errors_set_status_and_message() {
        let mut a = QlMagicAngle::default();
        unsafe {
            assert_eq!(ql_magic_angle(4, 2, &mut a), QlStatus::InvalidPair);
            assert!(last_error().contains("invalid magic pair"));
            assert_eq!(ql_magic_angle(3, 1, &mut a), QlStatus::Ok);
            assert_eq!((a.m0, a.n0), (2, 1));
            assert_eq!(ql_potential_eval(ptr::null(), 0.0, 0.0, ptr::null_mut()), QlStatus::NullPointer);
            let mut d = 0.0;
            assert_eq!(ql_diameter_bound(0.0, 1.0, 1.0, &mut d), QlStatus::InvalidArgument);
            let mut g = ptr::null_mut();
            assert_eq!(ql_grid_sample_periodic(2, 1, 0.3, 0.1, 64, &mut g), QlStatus::Ok);
            let mut s = QlClosedStats::default();
            assert_eq!(ql_max_closed_diameter(g, 0.5, &mut s), QlStatus::NotPeriodic);
            ql_grid_free(g);
        }
    }

    #[test]
    fn error_message_is_thread_local() {
        let mut a = QlMagicAngle::default();
        unsafe { ql_magic_angle(2, 2, &mut a) };
        let other = std::thread::spawn(last_error).join().unwrap();
        assert_eq!(other, "");
        assert!(!last_error().is_empty());
    }

    #[test]
    fn threshold_through_ffi() {
        let mut t = QlThreshold::default();
        unsafe {
            assert_eq!(ql_estimate_epsilon_nm(2, 1, 0.0, 0.0, 1e-2, &mut t), QlStatus::Ok);
        }
        assert_eq!(t.positive_lo, 0.0);
    }
}
