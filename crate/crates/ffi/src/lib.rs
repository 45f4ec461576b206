//! C ABI over `sgcgen`.
//!
//! Objects cross the boundary as opaque handles created by `sgc_*_new`-style
//! functions and released with the matching `sgc_*_free`. Every fallible call
//! returns an `SgcStatus`; on failure a message is kept per thread and can be
//! read with `sgc_last_error`. Panics never unwind into C.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sgcgen::metrics::MetricVector;
use sgcgen::{
    Error, Graph, IdMapping, Method, Mismatch, ParseOptions, Partition, SbmParams, SelectionConfig,
    SelectionReport,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    EmptyGraph = 4,
    NodeOutOfRange = 5,
    Disconnected = 6,
    InvalidParams = 7,
    InconsistentPartition = 8,
    SizeMismatch = 9,
    TooFewPoints = 10,
    InvalidArgument = 11,
    NotConverged = 12,
    NoCandidate = 13,
    Io = 14,
    Panic = 15,
}

impl From<&Error> for SgcStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Parse { .. } | Error::Json(_) => SgcStatus::Parse,
            Error::EmptyGraph => SgcStatus::EmptyGraph,
            Error::NodeOutOfRange { .. } => SgcStatus::NodeOutOfRange,
            Error::IsolatedNode { .. } | Error::Disconnected => SgcStatus::Disconnected,
            Error::InvalidParams(_) => SgcStatus::InvalidParams,
            Error::InconsistentPartition(_) => SgcStatus::InconsistentPartition,
            Error::SizeMismatch { .. } => SgcStatus::SizeMismatch,
            Error::TooFewPoints { .. } => SgcStatus::TooFewPoints,
            Error::InvalidArgument(_) => SgcStatus::InvalidArgument,
            Error::NotConverged { .. } => SgcStatus::NotConverged,
            Error::AllCandidatesFailed => SgcStatus::NoCandidate,
            Error::Io(_) => SgcStatus::Io,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgcMethod {
    Standard = 0,
    Regularized = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgcMismatch {
    Eig = 0,
    Mod = 1,
    Aic = 2,
    Bic = 3,
}

/// Model-selection settings. Start from `sgc_select_options_default`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SgcSelectOptions {
    pub method: SgcMethod,
    pub mismatch: SgcMismatch,
    /// Penalty weight; negative means the method's default.
    pub alpha: f64,
    /// Largest K tried; 0 means `min(50, n)`.
    pub k_max: usize,
    pub seed: u64,
}

/// Clustering scores. External entries are NaN when no truth was given.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SgcMetrics {
    pub nmi: f64,
    pub ri: f64,
    pub fm: f64,
    pub accuracy: f64,
    pub conductance: f64,
    pub normalized_cut: f64,
    pub avg_odf: f64,
    pub modularity: f64,
}

/// Opaque graph handle.
pub struct SgcGraph(Graph);

/// Opaque community assignment.
pub struct SgcPartition(Partition);

/// Opaque model-selection result.
pub struct SgcReport(SelectionReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn fail(status: SgcStatus, message: impl Into<String>) -> SgcStatus {
    set_error(message.into());
    status
}

/// Runs `body`, translating errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), SgcStatus>) -> SgcStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => SgcStatus::Ok,
        Ok(Err(status)) => status,
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(SgcStatus::Panic, format!("internal panic: {msg}"))
        }
    }
}

fn lib(e: Error) -> SgcStatus {
    let status = SgcStatus::from(&e);
    fail(status, e.to_string())
}

fn null(what: &str) -> SgcStatus {
    fail(SgcStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a, T>(data: *const T, len: usize, what: &str) -> Result<&'a [T], SgcStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn handle<'a, T>(h: *const T, what: &str) -> Result<&'a T, SgcStatus> {
    h.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), SgcStatus> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sgc_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn sgc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a graph on `n` nodes from `m` edges `(us[i], vs[i])`. Duplicates and
/// self-loops are dropped.
///
/// # Safety
/// `us` and `vs` must point to `m` readable elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgc_graph_from_edges(
    n: usize,
    us: *const usize,
    vs: *const usize,
    m: usize,
    out: *mut *mut SgcGraph,
) -> SgcStatus {
    guard(|| {
        let us = slice(us, m, "us")?;
        let vs = slice(vs, m, "vs")?;
        let g = Graph::from_edges(n, us.iter().copied().zip(vs.iter().copied())).map_err(lib)?;
        put(out, SgcGraph(g))
    })
}

/// Parses a whitespace-separated edge list. Node ids are renumbered in order
/// of first appearance; lines starting with `#` are skipped.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgc_graph_parse(
    text: *const c_char,
    out: *mut *mut SgcGraph,
) -> SgcStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|e| fail(SgcStatus::InvalidUtf8, e.to_string()))?;
        let options = ParseOptions {
            ids: IdMapping::FirstAppearance,
            ..ParseOptions::default()
        };
        let parsed = sgcgen::parse_edge_list(text, &options).map_err(lib)?;
        put(out, SgcGraph(parsed.graph))
    })
}

/// Replaces `*graph` with its largest connected component and writes the number
/// of dropped nodes to `dropped` when non-NULL.
///
/// # Safety
/// `graph` must hold a live handle; `dropped` is NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn sgc_graph_keep_largest_component(
    graph: *mut SgcGraph,
    dropped: *mut usize,
) -> SgcStatus {
    guard(|| {
        let g = graph.as_mut().ok_or_else(|| null("graph"))?;
        let (lcc, _) = g.0.largest_connected_component();
        if !dropped.is_null() {
            *dropped = g.0.n() - lcc.n();
        }
        g.0 = lcc;
        Ok(())
    })
}

/// Number of nodes, or 0 for NULL.
///
/// # Safety
/// `graph` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sgc_graph_node_count(graph: *const SgcGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.n())
}

/// Number of edges, or 0 for NULL.
///
/// # Safety
/// `graph` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sgc_graph_edge_count(graph: *const SgcGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.m())
}

/// # Safety
/// `graph` is NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sgc_graph_free(graph: *mut SgcGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Samples a stochastic block model. `p` is the row-major `k x k` symmetric
/// probability matrix. `planted` may be NULL.
///
/// # Safety
/// `sizes` must hold `k` values and `p` `k * k`; `graph` must be writable;
/// `planted` is NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn sgc_generate_sbm(
    k: usize,
    sizes: *const usize,
    p: *const f64,
    seed: u64,
    graph: *mut *mut SgcGraph,
    planted: *mut *mut SgcPartition,
) -> SgcStatus {
    guard(|| {
        let sizes = slice(sizes, k, "sizes")?;
        let p = slice(p, k * k, "p")?;
        let params = SbmParams::new(sizes.to_vec(), p.to_vec()).map_err(lib)?;
        let (g, labels) = sgcgen::generate_sbm(&params, seed).map_err(lib)?;
        if graph.is_null() {
            return Err(null("graph output"));
        }
        if !planted.is_null() {
            put(planted, SgcPartition(labels))?;
        }
        put(graph, SgcGraph(g))
    })
}

/// Partition from labels `0..K`, every community non-empty.
///
/// # Safety
/// `graph` must be live; `labels` must hold `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgc_partition_new(
    graph: *const SgcGraph,
    labels: *const usize,
    n: usize,
    out: *mut *mut SgcPartition,
) -> SgcStatus {
    guard(|| {
        let g = handle(graph, "graph")?;
        let labels = slice(labels, n, "labels")?;
        let p = Partition::new(&g.0, labels.to_vec()).map_err(lib)?;
        put(out, SgcPartition(p))
    })
}

/// Number of communities, or 0 for NULL.
///
/// # Safety
/// `partition` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sgc_partition_k(partition: *const SgcPartition) -> usize {
    partition.as_ref().map_or(0, |p| p.0.k())
}

/// Copies the labels into `out`, which must have room for `len` values and
/// `len` must equal the node count.
///
/// # Safety
/// `partition` must be live; `out` must have `len` writable slots.
#[no_mangle]
pub unsafe extern "C" fn sgc_partition_labels(
    partition: *const SgcPartition,
    out: *mut usize,
    len: usize,
) -> SgcStatus {
    guard(|| {
        let p = handle(partition, "partition")?;
        if len != p.0.n() {
            return Err(lib(Error::SizeMismatch {
                left: len,
                right: p.0.n(),
            }));
        }
        if len > 0 && out.is_null() {
            return Err(null("out"));
        }
        if len > 0 {
            ptr::copy_nonoverlapping(p.0.labels().as_ptr(), out, len);
        }
        Ok(())
    })
}

/// # Safety
/// `partition` is NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sgc_partition_free(partition: *mut SgcPartition) {
    if !partition.is_null() {
        drop(Box::from_raw(partition));
    }
}

#[no_mangle]
pub extern "C" fn sgc_select_options_default() -> SgcSelectOptions {
    SgcSelectOptions {
        method: SgcMethod::Standard,
        mismatch: SgcMismatch::Mod,
        alpha: -1.0,
        k_max: 0,
        seed: 0,
    }
}

fn selection_config(options: &SgcSelectOptions, n: usize) -> SelectionConfig {
    let method = match options.method {
        SgcMethod::Standard => Method::Sgc,
        SgcMethod::Regularized => Method::RegSgc,
    };
    let mismatch = match options.mismatch {
        SgcMismatch::Eig => Mismatch::Eig,
        SgcMismatch::Mod => Mismatch::Mod,
        SgcMismatch::Aic => Mismatch::Aic,
        SgcMismatch::Bic => Mismatch::Bic,
    };
    SelectionConfig {
        alpha: if options.alpha < 0.0 {
            method.default_alpha()
        } else {
            options.alpha
        },
        k_max: if options.k_max == 0 {
            n.min(50)
        } else {
            options.k_max
        },
        seed: options.seed,
        ..SelectionConfig::new(method, mismatch)
    }
}

/// Chooses K and clusters `graph`. `options` may be NULL for defaults. The
/// graph must be connected for the standard method.
///
/// # Safety
/// `graph` must be live; `options` is NULL or readable; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgc_select(
    graph: *const SgcGraph,
    options: *const SgcSelectOptions,
    out: *mut *mut SgcReport,
) -> SgcStatus {
    guard(|| {
        let g = handle(graph, "graph")?;
        let options = options
            .as_ref()
            .copied()
            .unwrap_or_else(|| sgc_select_options_default());
        let config = selection_config(&options, g.0.n());
        let report = sgcgen::select(&g.0, &config).map_err(lib)?;
        put(out, SgcReport(report))
    })
}

/// Chosen number of communities, or 0 for NULL.
///
/// # Safety
/// `report` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sgc_report_k_star(report: *const SgcReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.k_star)
}

/// Copy of the chosen partition; free it with `sgc_partition_free`.
///
/// # Safety
/// `report` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgc_report_partition(
    report: *const SgcReport,
    out: *mut *mut SgcPartition,
) -> SgcStatus {
    guard(|| {
        let r = handle(report, "report")?;
        put(out, SgcPartition(r.0.partition.clone()))
    })
}

/// Full report as JSON; free the string with `sgc_string_free`. NULL on failure.
///
/// # Safety
/// `report` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sgc_report_json(report: *const SgcReport) -> *mut c_char {
    let mut text = ptr::null_mut();
    let status = guard(|| {
        let r = handle(report, "report")?;
        let json = serde_json::to_string(&r.0.to_json()).map_err(|e| lib(e.into()))?;
        text = CString::new(json)
            .map_err(|e| fail(SgcStatus::Parse, e.to_string()))?
            .into_raw();
        Ok(())
    });
    if status == SgcStatus::Ok {
        text
    } else {
        ptr::null_mut()
    }
}

/// # Safety
/// `report` is NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sgc_report_free(report: *mut SgcReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `s` is NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sgc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Scores `predicted` on `graph`. `truth` may be NULL; otherwise it holds one
/// label per node and the external metrics and accuracy are filled in.
///
/// # Safety
/// `graph` and `predicted` must be live; `truth` is NULL or holds `n` values;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgc_evaluate(
    graph: *const SgcGraph,
    predicted: *const SgcPartition,
    truth: *const usize,
    out: *mut SgcMetrics,
) -> SgcStatus {
    guard(|| {
        let g = handle(graph, "graph")?;
        let p = handle(predicted, "predicted")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let truth = if truth.is_null() {
            None
        } else {
            Some(slice(truth, g.0.n(), "truth")?)
        };
        let mv = MetricVector::evaluate(&g.0, &p.0, truth).map_err(lib)?;
        let acc = match truth {
            Some(t) => sgcgen::accuracy(p.0.labels(), t).map_err(lib)?,
            None => f64::NAN,
        };
        *out = SgcMetrics {
            nmi: mv.nmi.unwrap_or(f64::NAN),
            ri: mv.ri.unwrap_or(f64::NAN),
            fm: mv.fm.unwrap_or(f64::NAN),
            accuracy: acc,
            conductance: mv.cond,
            normalized_cut: mv.nc,
            avg_odf: mv.avg_odf,
            modularity: mv.modularity,
        };
        Ok(())
    })
}
