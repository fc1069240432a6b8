//! C ABI for conecg.
//!
//! Objects are opaque handles created by `*_new`/`*_parse` functions and
//! released with the matching `*_free`. Every fallible call returns a
//! [`ConecgStatus`]; on failure a message is available from
//! [`conecg_last_error`] on the same thread. Panics never cross the
//! boundary: they are caught and reported as `CONECG_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::time::Duration;

use conecg::cg::engine::{self, CgConfig, CgTrace, Mode, Pricing};
use conecg::cg::sdp::{SdpMaster, SdpProblem};
use conecg::conic::SolverParams;
use conecg::poly::{cg_polymin, poly_bound, Poly, DEFAULT_GRAM_CAP};
use conecg::stableset::{cg_stableset, dsos1_bound, sdsos1_bound, Graph};
use conecg::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConecgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    SolverError = 4,
    Infeasible = 5,
    SizeLimit = 6,
    Budget = 7,
    Internal = 8,
    Panic = 9,
}

/// Master type: 0 = LP (diagonally dominant), 1 = SOCP (scaled diagonally dominant).
pub const CONECG_MODE_LP: u32 = 0;
pub const CONECG_MODE_SOCP: u32 = 1;
/// Pricing: 0 = eigenvectors, 1 = triples.
pub const CONECG_PRICING_EIG: u32 = 0;
pub const CONECG_PRICING_TRIPLES: u32 = 1;

/// Column-generation settings; fill with [`conecg_config_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct ConecgConfig {
    pub mode: u32,
    pub pricing: u32,
    pub cuts_per_iter: u32,
    pub t1: u64,
    pub t2: u64,
    pub max_iters: u32,
    /// Seconds; zero or negative means no limit.
    pub time_limit_s: f64,
    /// Nonzero to record wall-clock times in the trace.
    pub record_timing: u32,
}

pub struct ConecgGraph {
    inner: Graph,
}

pub struct ConecgPoly {
    inner: Poly,
}

pub struct ConecgSdp {
    inner: SdpProblem,
}

pub struct ConecgTrace {
    inner: CgTrace,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> ConecgStatus {
    match e {
        Error::Parse { .. } => ConecgStatus::ParseError,
        Error::Solver(_) | Error::EigenNonConvergence { .. } => ConecgStatus::SolverError,
        Error::InitialInfeasible(_) => ConecgStatus::Infeasible,
        Error::SizeCap { .. } => ConecgStatus::SizeLimit,
        Error::Budget { .. } => ConecgStatus::Budget,
        Error::Internal(_) => ConecgStatus::Internal,
        _ => ConecgStatus::InvalidArgument,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (ConecgStatus, String)>) -> ConecgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ConecgStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            ConecgStatus::Panic
        }
    }
}

fn lib(e: Error) -> (ConecgStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (ConecgStatus, String) {
    (ConecgStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(s: *const c_char) -> Result<&'a str, (ConecgStatus, String)> {
    if s.is_null() {
        return Err(null("text"));
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        (
            ConecgStatus::InvalidArgument,
            "text is not valid UTF-8".into(),
        )
    })
}

unsafe fn put<T>(out: *mut *mut T, v: T) -> Result<(), (ConecgStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(v));
    Ok(())
}

fn to_config(c: &ConecgConfig) -> Result<CgConfig, (ConecgStatus, String)> {
    let mode = match c.mode {
        CONECG_MODE_LP => Mode::Lp,
        CONECG_MODE_SOCP => Mode::Socp,
        m => return Err((ConecgStatus::InvalidArgument, format!("unknown mode {m}"))),
    };
    let pricing = match c.pricing {
        CONECG_PRICING_EIG => Pricing::Eig,
        CONECG_PRICING_TRIPLES => Pricing::Triples,
        p => {
            return Err((
                ConecgStatus::InvalidArgument,
                format!("unknown pricing {p}"),
            ))
        }
    };
    let mut cfg = CgConfig::new(mode, pricing);
    cfg.cuts_per_iter = c.cuts_per_iter as usize;
    cfg.t1 = c.t1 as usize;
    cfg.t2 = c.t2 as usize;
    cfg.max_iters = c.max_iters as usize;
    if c.time_limit_s.is_nan() {
        return Err((ConecgStatus::InvalidArgument, "time limit is NaN".into()));
    }
    if c.time_limit_s > 0.0 {
        cfg.time_limit = Some(
            Duration::try_from_secs_f64(c.time_limit_s)
                .map_err(|e| (ConecgStatus::InvalidArgument, e.to_string()))?,
        );
    }
    cfg.record_timing = c.record_timing != 0;
    cfg.validate().map_err(lib)?;
    Ok(cfg)
}

unsafe fn config_arg(c: *const ConecgConfig) -> Result<CgConfig, (ConecgStatus, String)> {
    if c.is_null() {
        return Err(null("config"));
    }
    to_config(&*c)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn conecg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread; empty if none. Valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn conecg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Writes the default configuration (LP, eigenvector pricing, one cut per
/// iteration, 50 iterations, no time limit).
///
/// # Safety
/// `out` must be null or point to writable memory for one `ConecgConfig`.
#[no_mangle]
pub unsafe extern "C" fn conecg_config_default(out: *mut ConecgConfig) -> ConecgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let d = CgConfig::new(Mode::Lp, Pricing::Eig);
        *out = ConecgConfig {
            mode: CONECG_MODE_LP,
            pricing: CONECG_PRICING_EIG,
            cuts_per_iter: d.cuts_per_iter as u32,
            t1: d.t1 as u64,
            t2: d.t2 as u64,
            max_iters: d.max_iters as u32,
            time_limit_s: 0.0,
            record_timing: 1,
        };
        Ok(())
    })
}

/// Creates a graph with `n` nodes and no edges.
///
/// # Safety
/// `out` must be null or a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn conecg_graph_new(n: usize, out: *mut *mut ConecgGraph) -> ConecgStatus {
    guard(|| {
        put(
            out,
            ConecgGraph {
                inner: Graph::empty(n),
            },
        )
    })
}

/// Adds edge {i, j} (0-based). Adding an existing edge is a no-op.
///
/// # Safety
/// `g` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn conecg_graph_add_edge(
    g: *mut ConecgGraph,
    i: usize,
    j: usize,
) -> ConecgStatus {
    guard(|| {
        let g = g.as_mut().ok_or_else(|| null("graph"))?;
        g.inner.add_edge(i, j).map_err(lib)?;
        Ok(())
    })
}

/// Parses a DIMACS edge list ("p edge n m", "e i j" with 1-based nodes).
///
/// # Safety
/// `text` must be null or a NUL-terminated string; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn conecg_graph_from_dimacs(
    text: *const c_char,
    out: *mut *mut ConecgGraph,
) -> ConecgStatus {
    guard(|| {
        let g = Graph::parse_dimacs(self::text(text)?).map_err(lib)?;
        put(out, ConecgGraph { inner: g })
    })
}

/// # Safety
/// `g` must be null or a graph handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn conecg_graph_free(g: *mut ConecgGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Node and edge counts.
///
/// # Safety
/// `g` must be a live graph handle; outputs may be null.
#[no_mangle]
pub unsafe extern "C" fn conecg_graph_size(
    g: *const ConecgGraph,
    n: *mut usize,
    m: *mut usize,
) -> ConecgStatus {
    guard(|| {
        let g = g.as_ref().ok_or_else(|| null("graph"))?;
        if let Some(n) = n.as_mut() {
            *n = g.inner.n();
        }
        if let Some(m) = m.as_mut() {
            *m = g.inner.num_edges();
        }
        Ok(())
    })
}

/// Single-master upper bound on the stability number: DSOS₁ (mode LP) or
/// SDSOS₁ (mode SOCP).
///
/// # Safety
/// `g` must be a live graph handle and `out` a writable double.
#[no_mangle]
pub unsafe extern "C" fn conecg_stableset_bound(
    g: *const ConecgGraph,
    mode: u32,
    out: *mut f64,
) -> ConecgStatus {
    guard(|| {
        let g = g.as_ref().ok_or_else(|| null("graph"))?;
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        let b = match mode {
            CONECG_MODE_LP => dsos1_bound(&g.inner),
            CONECG_MODE_SOCP => sdsos1_bound(&g.inner),
            m => return Err((ConecgStatus::InvalidArgument, format!("unknown mode {m}"))),
        }
        .map_err(lib)?;
        *out = b.lambda;
        Ok(())
    })
}

/// Column generation for the stability-number bound.
///
/// # Safety
/// Handles must be live; `cfg` must point to a `ConecgConfig`; `out` to a
/// handle slot.
#[no_mangle]
pub unsafe extern "C" fn conecg_stableset_cg(
    g: *const ConecgGraph,
    cfg: *const ConecgConfig,
    out: *mut *mut ConecgTrace,
) -> ConecgStatus {
    guard(|| {
        let g = g.as_ref().ok_or_else(|| null("graph"))?;
        let cfg = config_arg(cfg)?;
        let run = cg_stableset(&g.inner, &cfg).map_err(lib)?;
        put(out, ConecgTrace { inner: run.trace })
    })
}

/// Parses a polynomial: header "n deg", then lines "e1 … en c".
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn conecg_poly_parse(
    text: *const c_char,
    out: *mut *mut ConecgPoly,
) -> ConecgStatus {
    guard(|| {
        let p = Poly::parse(self::text(text)?).map_err(lib)?;
        put(out, ConecgPoly { inner: p })
    })
}

/// # Safety
/// `p` must be null or a polynomial handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn conecg_poly_free(p: *mut ConecgPoly) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Largest λ such that (p − λ(Σx_i²)^d)(Σx_i²)^r is dsos (mode LP) or
/// sdsos (mode SOCP).
///
/// # Safety
/// `p` must be a live polynomial handle and `out` a writable double.
#[no_mangle]
pub unsafe extern "C" fn conecg_poly_bound(
    p: *const ConecgPoly,
    r: u32,
    mode: u32,
    out: *mut f64,
) -> ConecgStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("polynomial"))?;
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        let mode = match mode {
            CONECG_MODE_LP => Mode::Lp,
            CONECG_MODE_SOCP => Mode::Socp,
            m => return Err((ConecgStatus::InvalidArgument, format!("unknown mode {m}"))),
        };
        *out = poly_bound(
            &p.inner,
            r,
            mode,
            DEFAULT_GRAM_CAP,
            &SolverParams::default(),
        )
        .map_err(lib)?
        .lambda;
        Ok(())
    })
}

/// Column generation for the sphere minimum of a form.
///
/// # Safety
/// As for [`conecg_stableset_cg`].
#[no_mangle]
pub unsafe extern "C" fn conecg_polymin_cg(
    p: *const ConecgPoly,
    cfg: *const ConecgConfig,
    out: *mut *mut ConecgTrace,
) -> ConecgStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("polynomial"))?;
        let cfg = config_arg(cfg)?;
        let run = cg_polymin(&p.inner, &cfg).map_err(lib)?;
        put(out, ConecgTrace { inner: run.trace })
    })
}

/// Parses an SDP: "m n", C, then m blocks of b_i followed by A_i.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn conecg_sdp_parse(
    text: *const c_char,
    out: *mut *mut ConecgSdp,
) -> ConecgStatus {
    guard(|| {
        let s = SdpProblem::parse(self::text(text)?).map_err(lib)?;
        put(out, ConecgSdp { inner: s })
    })
}

/// # Safety
/// `s` must be null or an SDP handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn conecg_sdp_free(s: *mut ConecgSdp) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Column generation for max bᵀy s.t. C − Σ y_iA_i ⪰ 0.
///
/// # Safety
/// As for [`conecg_stableset_cg`].
#[no_mangle]
pub unsafe extern "C" fn conecg_sdp_cg(
    s: *const ConecgSdp,
    cfg: *const ConecgConfig,
    out: *mut *mut ConecgTrace,
) -> ConecgStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("sdp"))?;
        let cfg = config_arg(cfg)?;
        let n = s.inner.n();
        let init = match cfg.mode {
            Mode::Socp if n >= 2 => conecg::atoms::gen_v2(n),
            _ => conecg::atoms::gen_u2(n),
        };
        let run = engine::run(&mut SdpMaster::new(s.inner.clone()), init, &cfg).map_err(lib)?;
        put(out, ConecgTrace { inner: run.trace })
    })
}

/// Number of rows (initial solve plus one per iteration); 0 for null.
///
/// # Safety
/// `t` must be null or a live trace handle.
#[no_mangle]
pub unsafe extern "C" fn conecg_trace_len(t: *const ConecgTrace) -> usize {
    t.as_ref().map(|t| t.inner.records.len()).unwrap_or(0)
}

/// Bound of row `i`.
///
/// # Safety
/// `t` must be a live trace handle and `out` a writable double.
#[no_mangle]
pub unsafe extern "C" fn conecg_trace_bound(
    t: *const ConecgTrace,
    i: usize,
    out: *mut f64,
) -> ConecgStatus {
    guard(|| {
        let t = t.as_ref().ok_or_else(|| null("trace"))?;
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        let r = t.inner.records.get(i).ok_or_else(|| {
            (
                ConecgStatus::InvalidArgument,
                format!("row {i} out of range"),
            )
        })?;
        *out = r.bound;
        Ok(())
    })
}

/// 1 if the run stopped because no violated atom remained, else 0.
///
/// # Safety
/// `t` must be null or a live trace handle.
#[no_mangle]
pub unsafe extern "C" fn conecg_trace_converged(t: *const ConecgTrace) -> i32 {
    t.as_ref().map(|t| t.inner.converged() as i32).unwrap_or(0)
}

/// Trace as CSV (iter,bound,atoms_added,status,elapsed_ms). Release with
/// [`conecg_string_free`]. Null on failure.
///
/// # Safety
/// `t` must be null or a live trace handle.
#[no_mangle]
pub unsafe extern "C" fn conecg_trace_to_csv(t: *const ConecgTrace) -> *mut c_char {
    let mut out = ptr::null_mut();
    let status = guard(|| {
        let t = t.as_ref().ok_or_else(|| null("trace"))?;
        let s = CString::new(t.inner.to_csv(&[]))
            .map_err(|e| (ConecgStatus::Internal, e.to_string()))?;
        out = s.into_raw();
        Ok(())
    });
    if status == ConecgStatus::Ok {
        out
    } else {
        ptr::null_mut()
    }
}

/// # Safety
/// `t` must be null or a trace handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn conecg_trace_free(t: *mut ConecgTrace) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn conecg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
