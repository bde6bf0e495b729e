//! C ABI over `fm-core`.
//!
//! Documents and traces are opaque handles owned by the caller and released
//! with their `_free` functions. Every fallible call returns an [`FmStatus`];
//! on failure [`fm_last_error_message`] describes what went wrong on the
//! calling thread. Strings handed out by the library are NUL-terminated and
//! must be released with [`fm_string_free`].

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fm_core::classmap::import_classes;
use fm_core::document::{Document, LoadError};
use fm_core::events::EventId;
use fm_core::render::{overlay, to_dot, RenderOptions};
use fm_core::sim::{simulate_sequence, SimConfig, SimError, SimOutcome, Simulator, Trace};
use fm_core::value::Value;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FmStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    SemanticError = 4,
    NotFound = 5,
    BadArgument = 6,
    Inadmissible = 7,
    StepLimit = 8,
    SimulationError = 9,
    /// The simulation finished but left tokens stuck; the trace is still
    /// returned.
    StuckTokens = 10,
    Panic = 11,
}

/// A parsed and bound model.
pub struct FmDocument {
    doc: Document,
}

/// The records of one simulation run.
pub struct FmTrace {
    trace: Trace,
    stuck: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).unwrap_or_default());
}

type Fallible<T> = Result<T, (FmStatus, String)>;

fn fail<T>(status: FmStatus, msg: impl Into<String>) -> Fallible<T> {
    Err((status, msg.into()))
}

/// Runs `f`, recording its error and turning panics into a status.
fn guard(f: impl FnOnce() -> Fallible<FmStatus>) -> FmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => {
            if s == FmStatus::Ok {
                set_error("");
            }
            s
        }
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            FmStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Fallible<&'a str> {
    if p.is_null() {
        return fail(FmStatus::NullArgument, format!("{what} is null"));
    }
    CStr::from_ptr(p).to_str().or_else(|_| fail(FmStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn opt_text<'a>(p: *const c_char, what: &str) -> Fallible<Option<&'a str>> {
    if p.is_null() {
        Ok(None)
    } else {
        text(p, what).map(Some)
    }
}

unsafe fn document<'a>(p: *const FmDocument) -> Fallible<&'a Document> {
    p.as_ref().map(|d| &d.doc).ok_or((FmStatus::NullArgument, "document is null".into()))
}

unsafe fn out_ptr<T>(out: *mut *mut T) -> Fallible<&'static mut *mut T> {
    out.as_mut().ok_or((FmStatus::NullArgument, "output pointer is null".into()))
}

fn to_c(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).unwrap_or_default().into_raw()
}

fn load_error(e: LoadError) -> (FmStatus, String) {
    match e {
        LoadError::Parse(p) => (FmStatus::ParseError, p.to_string()),
        LoadError::Semantic(d) => (FmStatus::SemanticError, d.to_string()),
    }
}

fn sim_error(e: SimError) -> (FmStatus, String) {
    let status = match e {
        SimError::StepLimitExceeded { .. } => FmStatus::StepLimit,
        SimError::MissingArgument { .. } => FmStatus::BadArgument,
        SimError::InadmissibleSequence { .. } => FmStatus::Inadmissible,
        _ => FmStatus::SimulationError,
    };
    (status, e.to_string())
}

/// `k=v` pairs separated by commas.
fn bindings(list: Option<&str>) -> Fallible<BTreeMap<String, Value>> {
    let mut map = BTreeMap::new();
    for item in list.unwrap_or("").split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let Some((k, v)) = item.split_once('=') else {
            return fail(FmStatus::BadArgument, format!("argument `{item}` is not of the form k=v"));
        };
        map.insert(k.trim().to_string(), Value::parse_scalar(v));
    }
    Ok(map)
}

fn config(bindings: BTreeMap<String, Value>, max_steps: u64) -> SimConfig {
    let mut c = SimConfig { bindings, ..SimConfig::default() };
    if max_steps > 0 {
        c.max_steps = max_steps;
    }
    c
}

fn finish(outcome: SimOutcome, out: &mut *mut FmTrace) -> Fallible<FmStatus> {
    let stuck = outcome.stuck.len();
    let msg = outcome.stuck.iter().map(|s| format!("{} stuck at {}", s.token, s.stage)).collect::<Vec<_>>();
    *out = Box::into_raw(Box::new(FmTrace { trace: outcome.trace, stuck }));
    if stuck == 0 {
        Ok(FmStatus::Ok)
    } else {
        set_error(msg.join("; "));
        Ok(FmStatus::StuckTokens)
    }
}

/// Parses DSL text into a document. On success `*out` owns the new handle.
///
/// # Safety
/// `source` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fm_document_parse(source: *const c_char, out: *mut *mut FmDocument) -> FmStatus {
    guard(|| {
        let out = out_ptr(out)?;
        *out = ptr::null_mut();
        let doc = Document::parse(text(source, "source")?).map_err(load_error)?;
        *out = Box::into_raw(Box::new(FmDocument { doc }));
        Ok(FmStatus::Ok)
    })
}

/// Translates `count` class-diagram sources into one document.
///
/// # Safety
/// `sources` must point to `count` valid NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn fm_document_import_classes(
    sources: *const *const c_char,
    count: usize,
    out: *mut *mut FmDocument,
) -> FmStatus {
    guard(|| {
        let out = out_ptr(out)?;
        *out = ptr::null_mut();
        if sources.is_null() && count > 0 {
            return fail(FmStatus::NullArgument, "sources is null");
        }
        let mut texts = Vec::with_capacity(count);
        for i in 0..count {
            texts.push(text(*sources.add(i), "class source")?);
        }
        let t = import_classes(&texts).map_err(load_error)?;
        *out = Box::into_raw(Box::new(FmDocument { doc: t.doc }));
        Ok(FmStatus::Ok)
    })
}

/// # Safety
/// `doc` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fm_document_free(doc: *mut FmDocument) {
    if !doc.is_null() {
        drop(Box::from_raw(doc));
    }
}

/// Checks the static rules. `*errors` receives the number of errors and,
/// when `report` is not null, `*report` the full diagnostic listing.
///
/// # Safety
/// `doc` must be a live handle; `errors` must be valid; `report` may be null.
#[no_mangle]
pub unsafe extern "C" fn fm_document_validate(
    doc: *const FmDocument,
    errors: *mut usize,
    report: *mut *mut c_char,
) -> FmStatus {
    guard(|| {
        let doc = document(doc)?;
        let errors = errors.as_mut().ok_or((FmStatus::NullArgument, "errors is null".into()))?;
        let d = doc.validate();
        *errors = d.errors().count();
        if let Some(r) = report.as_mut() {
            *r = to_c(d.to_string());
        }
        Ok(FmStatus::Ok)
    })
}

/// Renders the model as DOT. `overlay_events` is null or a comma-separated
/// list of event names to draw as regions.
///
/// # Safety
/// `doc` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fm_document_render_dot(
    doc: *const FmDocument,
    overlay_events: *const c_char,
    out: *mut *mut c_char,
) -> FmStatus {
    guard(|| {
        let doc = document(doc)?;
        let out = out_ptr(out)?;
        *out = ptr::null_mut();
        let names: Vec<String> = opt_text(overlay_events, "overlay")?
            .unwrap_or("")
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect();
        let opts = RenderOptions { overlay: names, ..RenderOptions::default() };
        let dot = if opts.overlay.is_empty() {
            to_dot(&doc.model, &opts)
        } else {
            overlay(&doc.model, &doc.events, &opts).map_err(|d| (FmStatus::NotFound, d.to_string()))?
        };
        *out = to_c(dot);
        Ok(FmStatus::Ok)
    })
}

/// Prints the document back as DSL text.
///
/// # Safety
/// `doc` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fm_document_to_dsl(doc: *const FmDocument, out: *mut *mut c_char) -> FmStatus {
    guard(|| {
        let doc = document(doc)?;
        let out = out_ptr(out)?;
        *out = to_c(doc.to_dsl());
        Ok(FmStatus::Ok)
    })
}

/// Runs `count` methods in order over one shared state. `args[i]` is null
/// or the `k=v` list for `methods[i]`; `args` itself may be null.
/// `max_steps` of 0 keeps the default limit.
///
/// # Safety
/// `methods` must point to `count` valid strings, `args` to `count`
/// nullable strings or be null, and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fm_run_method(
    doc: *const FmDocument,
    methods: *const *const c_char,
    args: *const *const c_char,
    count: usize,
    max_steps: u64,
    out: *mut *mut FmTrace,
) -> FmStatus {
    guard(|| {
        let doc = document(doc)?;
        let out = out_ptr(out)?;
        *out = ptr::null_mut();
        if methods.is_null() && count > 0 {
            return fail(FmStatus::NullArgument, "methods is null");
        }
        let mut sim = Simulator::new(doc, config(BTreeMap::new(), max_steps));
        for i in 0..count {
            let name = text(*methods.add(i), "method name")?;
            let a = if args.is_null() { None } else { opt_text(*args.add(i), "arguments")? };
            let m = doc.method_by_name(name).ok_or((FmStatus::NotFound, format!("no method named `{name}`")))?;
            sim.run_method(m, &bindings(a)?).map_err(sim_error)?;
        }
        finish(sim.finish(), out)
    })
}

/// Runs a comma-separated event sequence from the empty state. When
/// `chronology` is not null the sequence must be admissible under it.
/// `bindings` is null or a `k=v` list used by trigger effects.
///
/// # Safety
/// String arguments must be valid or null where allowed; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fm_simulate_sequence(
    doc: *const FmDocument,
    sequence: *const c_char,
    chronology: *const c_char,
    bindings_list: *const c_char,
    max_steps: u64,
    out: *mut *mut FmTrace,
) -> FmStatus {
    guard(|| {
        let doc = document(doc)?;
        let out = out_ptr(out)?;
        *out = ptr::null_mut();
        let seq = text(sequence, "sequence")?
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|n| doc.event_by_name(n).map(|e| e.id).ok_or((FmStatus::NotFound, format!("no event named `{n}`"))))
            .collect::<Fallible<Vec<EventId>>>()?;
        let chron = match opt_text(chronology, "chronology")? {
            Some(n) => {
                Some(doc.chronology_by_name(n).ok_or((FmStatus::NotFound, format!("no chronology named `{n}`")))?)
            }
            None => None,
        };
        let cfg = config(bindings(opt_text(bindings_list, "bindings")?)?, max_steps);
        let outcome = simulate_sequence(doc, &seq, chron, &cfg).map_err(sim_error)?;
        finish(outcome, out)
    })
}

/// Number of records in the trace, or 0 for a null handle.
///
/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fm_trace_len(trace: *const FmTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.trace.len())
}

/// Number of tokens left stuck by the run, or 0 for a null handle.
///
/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fm_trace_stuck_count(trace: *const FmTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.stuck)
}

/// # Safety
/// `trace` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fm_trace_to_tsv(trace: *const FmTrace, out: *mut *mut c_char) -> FmStatus {
    guard(|| {
        let t = trace.as_ref().ok_or((FmStatus::NullArgument, "trace is null".to_string()))?;
        *out_ptr(out)? = to_c(t.trace.to_tsv());
        Ok(FmStatus::Ok)
    })
}

/// # Safety
/// `trace` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fm_trace_to_json(trace: *const FmTrace, out: *mut *mut c_char) -> FmStatus {
    guard(|| {
        let t = trace.as_ref().ok_or((FmStatus::NullArgument, "trace is null".to_string()))?;
        *out_ptr(out)? = to_c(t.trace.to_json());
        Ok(FmStatus::Ok)
    })
}

/// # Safety
/// `trace` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fm_trace_free(trace: *mut FmTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// The message of the last failed call on this thread, or an empty string.
/// Valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn fm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn fm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
