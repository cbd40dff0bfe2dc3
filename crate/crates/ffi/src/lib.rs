//! C ABI over `mechpde`.
//!
//! Every function returns an [`MpdStatus`]; on failure the message is
//! available from [`mpd_last_error`] until the next call on the same thread.
//! Handles are opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use mechpde::assembly::{assemble, LinearSystem, Weights};
use mechpde::datagen::{Dataset, GeneratorConfig};
use mechpde::discovery::{add_noise, e_inf, tpr, Terms};
use mechpde::neurlp::{field_gradients, solve_backward, solve_forward, SolveResult, SolverConfig, SolverPath};
use mechpde::problem::ProblemSpec;
use mechpde::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MpdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Shape = 3,
    Solver = 4,
    Parse = 5,
    Io = 6,
    Panic = 7,
}

/// Solver path selector for [`mpd_solve`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MpdPath {
    Auto = 0,
    Direct = 1,
    Iterative = 2,
}

/// Assembled constraint system.
pub struct MpdSystem {
    sys: LinearSystem,
}

/// Forward solution of a system.
pub struct MpdSolution {
    res: SolveResult,
    n_points: usize,
}

/// Dataset of named fields.
pub struct MpdDataset {
    data: Dataset,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> MpdStatus {
    match e {
        Error::Shape(_) => MpdStatus::Shape,
        Error::Breakdown { .. } | Error::NotConverged { .. } | Error::RankDeficient { .. } | Error::ZeroDiagonal { .. } => {
            MpdStatus::Solver
        }
        Error::Parse { .. } | Error::Version { .. } => MpdStatus::Parse,
        Error::Io(_) => MpdStatus::Io,
        _ => MpdStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (MpdStatus, String)>) -> MpdStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MpdStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            MpdStatus::Panic
        }
    }
}

fn lib(e: Error) -> (MpdStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (MpdStatus, String) {
    (MpdStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (MpdStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (MpdStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, want: usize, what: &str) -> Result<&'a mut [f64], (MpdStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    if len != want {
        return Err((MpdStatus::Shape, format!("{what} has length {len}, expected {want}")));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

/// Message for the last failed call on this thread, or null. Owned by the
/// library; valid until the next call.
#[no_mangle]
pub extern "C" fn mpd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds and assembles a constant-coefficient problem from TOML text with
/// keys `sizes`, `steps`, `time`, `derivatives`, `coefficients`, `rhs`,
/// `boundary`.
///
/// # Safety
/// `toml` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mpd_system_from_toml(toml: *const c_char, out: *mut *mut MpdSystem) -> MpdStatus {
    guard(|| {
        let text = str_arg(toml, "toml")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = ProblemSpec::from_toml(text).map_err(lib)?;
        let p = spec.build().map_err(lib)?;
        let sys = assemble(&p.spec, &p.mset, &p.fields, Weights::default()).map_err(lib)?;
        *out = Box::into_raw(Box::new(MpdSystem { sys }));
        Ok(())
    })
}

/// # Safety
/// `sys` must come from [`mpd_system_from_toml`] or be null.
#[no_mangle]
pub unsafe extern "C" fn mpd_system_free(sys: *mut MpdSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Writes the number of unknowns, constraints, grid points, multi-indices
/// and boundary points.
///
/// # Safety
/// `sys` must be a live handle; each output pointer may be null.
#[no_mangle]
pub unsafe extern "C" fn mpd_system_dims(
    sys: *const MpdSystem,
    n_vars: *mut usize,
    n_constraints: *mut usize,
    n_points: *mut usize,
    n_multi: *mut usize,
    n_boundary: *mut usize,
) -> MpdStatus {
    guard(|| {
        let s = &sys.as_ref().ok_or_else(|| null("sys"))?.sys;
        for (p, v) in [
            (n_vars, s.n_v()),
            (n_constraints, s.n_c()),
            (n_points, s.maps.n_points()),
            (n_multi, s.mset.len()),
            (n_boundary, s.maps.boundary().len()),
        ] {
            if !p.is_null() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Solves the least-squares system.
///
/// # Safety
/// `sys` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mpd_solve(sys: *const MpdSystem, path: MpdPath, out: *mut *mut MpdSolution) -> MpdStatus {
    guard(|| {
        let s = &sys.as_ref().ok_or_else(|| null("sys"))?.sys;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = SolverConfig {
            path: match path {
                MpdPath::Auto => SolverPath::Auto,
                MpdPath::Direct => SolverPath::Direct,
                MpdPath::Iterative => SolverPath::Iterative,
            },
            ..SolverConfig::default()
        };
        let res = solve_forward(s, &cfg).map_err(lib)?;
        *out = Box::into_raw(Box::new(MpdSolution { res, n_points: s.maps.n_points() }));
        Ok(())
    })
}

/// # Safety
/// `sol` must come from [`mpd_solve`] or be null.
#[no_mangle]
pub unsafe extern "C" fn mpd_solution_free(sol: *mut MpdSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Copies the block of multi-index `m` (0 is the solution itself) into `buf`,
/// which must hold exactly one value per grid point.
///
/// # Safety
/// `sol` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn mpd_solution_field(sol: *const MpdSolution, m: usize, buf: *mut f64, len: usize) -> MpdStatus {
    guard(|| {
        let sol = sol.as_ref().ok_or_else(|| null("sol"))?;
        let (r, n) = (&sol.res, sol.n_points);
        if (m + 1) * n > r.z.len() {
            return Err((MpdStatus::InvalidArgument, format!("multi-index {m} out of range")));
        }
        out_slice(buf, len, n, "buf")?.copy_from_slice(r.field(m));
        Ok(())
    })
}

/// Relative normal-equation residual `‖Aᵀλ‖ / ‖Aᵀd‖` and iteration count.
///
/// # Safety
/// `sol` must be a live handle; output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn mpd_solution_stats(sol: *const MpdSolution, residual: *mut f64, iterations: *mut usize) -> MpdStatus {
    guard(|| {
        let r = &sol.as_ref().ok_or_else(|| null("sol"))?.res;
        if !residual.is_null() {
            *residual = r.residual_norm;
        }
        if !iterations.is_null() {
            *iterations = r.telemetry.iterations;
        }
        Ok(())
    })
}

/// Backpropagates `g_z` (length `n_vars`) to the problem fields:
/// `grad_coeff` (`n_multi × n_points`, multi-index major), `grad_rhs`
/// (`n_points`) and `grad_bnd` (`n_boundary`).
///
/// # Safety
/// Handles must be live and every buffer valid for its stated length.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn mpd_backward(
    sys: *const MpdSystem,
    sol: *const MpdSolution,
    g_z: *const f64,
    g_len: usize,
    grad_coeff: *mut f64,
    coeff_len: usize,
    grad_rhs: *mut f64,
    rhs_len: usize,
    grad_bnd: *mut f64,
    bnd_len: usize,
) -> MpdStatus {
    guard(|| {
        let s = &sys.as_ref().ok_or_else(|| null("sys"))?.sys;
        let r = &sol.as_ref().ok_or_else(|| null("sol"))?.res;
        if g_z.is_null() {
            return Err(null("g_z"));
        }
        if g_len != s.n_v() || r.z.len() != s.n_v() {
            return Err((MpdStatus::Shape, format!("g_z has length {g_len}, expected {}", s.n_v())));
        }
        let g = std::slice::from_raw_parts(g_z, g_len);
        let n = s.maps.n_points();
        let gc = out_slice(grad_coeff, coeff_len, n * s.mset.len(), "grad_coeff")?;
        let gr = out_slice(grad_rhs, rhs_len, n, "grad_rhs")?;
        let gb = out_slice(grad_bnd, bnd_len, s.maps.boundary().len(), "grad_bnd")?;
        let bwd = solve_backward(s, r, g).map_err(lib)?;
        let fg = field_gradients(s, &bwd);
        for (dst, src) in gc.chunks_mut(n).zip(&fg.coeff) {
            dst.copy_from_slice(src);
        }
        gr.copy_from_slice(&fg.rhs);
        gb.copy_from_slice(&fg.bnd);
        Ok(())
    })
}

fn terms(json: &str, what: &str) -> Result<Terms, (MpdStatus, String)> {
    serde_json::from_str(json).map_err(|e| (MpdStatus::Parse, format!("{what}: {e}")))
}

/// True positivity ratio between two JSON objects mapping term labels to
/// coefficients; `est` is thresholded at `tau` first.
///
/// # Safety
/// Strings must be valid C strings and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mpd_tpr(truth: *const c_char, est: *const c_char, tau: f64, out: *mut f64) -> MpdStatus {
    guard(|| {
        let t = terms(str_arg(truth, "truth")?, "truth")?;
        let e = terms(str_arg(est, "est")?, "est")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = tpr(&t, &e, tau).map_err(lib)?;
        Ok(())
    })
}

/// Largest relative coefficient error over the true nonzero terms.
///
/// # Safety
/// Strings must be valid C strings and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mpd_e_inf(truth: *const c_char, est: *const c_char, out: *mut f64) -> MpdStatus {
    guard(|| {
        let t = terms(str_arg(truth, "truth")?, "truth")?;
        let e = terms(str_arg(est, "est")?, "est")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = e_inf(&t, &e).map_err(lib)?;
        Ok(())
    })
}

/// Adds seeded Gaussian noise with standard deviation `sigma_nr · rms(values)`.
///
/// # Safety
/// `values` must be valid for `len` reads and writes.
#[no_mangle]
pub unsafe extern "C" fn mpd_add_noise(values: *mut f64, len: usize, sigma_nr: f64, seed: u64) -> MpdStatus {
    guard(|| {
        if values.is_null() {
            return Err(null("values"));
        }
        if !(0.0..=1.0).contains(&sigma_nr) {
            return Err((MpdStatus::InvalidArgument, format!("sigma_nr {sigma_nr} outside [0, 1]")));
        }
        add_noise(std::slice::from_raw_parts_mut(values, len), sigma_nr, seed);
        Ok(())
    })
}

/// Runs a generator described by TOML, e.g. `kind = "burgers"` plus its
/// parameters.
///
/// # Safety
/// `toml` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mpd_dataset_generate(toml: *const c_char, out: *mut *mut MpdDataset) -> MpdStatus {
    guard(|| {
        let text = str_arg(toml, "toml")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg: GeneratorConfig =
            toml::from_str(text).map_err(|e| (MpdStatus::Parse, format!("generator config: {}", e.message())))?;
        let data = cfg.generate().map_err(lib)?;
        *out = Box::into_raw(Box::new(MpdDataset { data }));
        Ok(())
    })
}

/// # Safety
/// `path` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mpd_dataset_load(path: *const c_char, out: *mut *mut MpdDataset) -> MpdStatus {
    guard(|| {
        let p = str_arg(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let data = Dataset::load(Path::new(p)).map_err(lib)?;
        *out = Box::into_raw(Box::new(MpdDataset { data }));
        Ok(())
    })
}

/// # Safety
/// `ds` must be a live handle and `path` a valid C string.
#[no_mangle]
pub unsafe extern "C" fn mpd_dataset_save(ds: *const MpdDataset, path: *const c_char) -> MpdStatus {
    guard(|| {
        let d = &ds.as_ref().ok_or_else(|| null("ds"))?.data;
        d.save(Path::new(str_arg(path, "path")?)).map_err(lib)
    })
}

/// # Safety
/// `ds` must come from a dataset constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn mpd_dataset_free(ds: *mut MpdDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Number of grid points of the dataset.
///
/// # Safety
/// `ds` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mpd_dataset_points(ds: *const MpdDataset, out: *mut usize) -> MpdStatus {
    guard(|| {
        let d = &ds.as_ref().ok_or_else(|| null("ds"))?.data;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = d.n_points();
        Ok(())
    })
}

/// Copies field `name` into `buf` (exactly one value per grid point).
///
/// # Safety
/// `ds` must be a live handle, `name` a valid C string and `buf` valid for
/// `len` writes.
#[no_mangle]
pub unsafe extern "C" fn mpd_dataset_field(ds: *const MpdDataset, name: *const c_char, buf: *mut f64, len: usize) -> MpdStatus {
    guard(|| {
        let d = &ds.as_ref().ok_or_else(|| null("ds"))?.data;
        let f = d.field(str_arg(name, "name")?).map_err(lib)?;
        out_slice(buf, len, f.len(), "buf")?.copy_from_slice(f);
        Ok(())
    })
}
