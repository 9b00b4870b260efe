//! C ABI over `submersion-core`.
//!
//! Every fallible call returns a [`SubStatus`]. On failure the message is
//! kept per thread and can be read with [`sub_last_error`]. Handles are
//! opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use submersion_core::chen::{chen_lemma_gap, LemmaInstance, TheoremId};
use submersion_core::config::{load_config, RunConfig};
use submersion_core::expr::parse_expression;
use submersion_core::report::{render, ReportFile, ReportFormat, Verdict};
use submersion_core::run::{run_verify, RunOptions};
use submersion_core::tolerances::Tolerances;
use submersion_core::{catalog, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Parse = 4,
    Config = 5,
    Domain = 6,
    Numerical = 7,
    Model = 8,
    Io = 9,
    Panic = 10,
}

/// Loaded configuration.
pub struct SubConfig {
    inner: RunConfig,
}

/// Result of a verification run.
pub struct SubReport {
    inner: ReportFile,
}

/// Flat view of one theorem entry. `theorem` points to a static string.
/// The numeric fields are NaN when `has_result` is false.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SubEntry {
    pub point_index: usize,
    pub theorem: *const c_char,
    pub has_result: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub holds: bool,
    pub equality: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SubLemmaResult {
    pub b: f64,
    pub gap: f64,
    pub equality: bool,
    pub condition_residual: f64,
    pub constraint_residual: f64,
}

pub const SUB_VERDICT_ALL_HOLD: i32 = 0;
pub const SUB_VERDICT_ERRORS: i32 = 1;
pub const SUB_VERDICT_VIOLATED: i32 = 2;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

const THEOREM_NAMES: [&CStr; 9] = [
    c"thm31",
    c"thm32",
    c"rsf_thm36",
    c"csf_thm38",
    c"gssf_thm310",
    c"thm41",
    c"rsf_thm43",
    c"csf_thm45",
    c"gssf_thm47",
];

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> SubStatus {
    match e {
        Error::Syntax { .. } | Error::UnknownIdentifier { .. } | Error::Arity { .. } => SubStatus::Parse,
        Error::MissingField(_) | Error::Shape(_) | Error::Serialization(_) => SubStatus::Config,
        Error::DomainViolation(_) | Error::StencilOutsideDomain(_) | Error::NonPositiveDefinite { .. } => {
            SubStatus::Domain
        }
        Error::ModelMisfit { .. }
        | Error::MissingStructure(_)
        | Error::StructureViolation { .. }
        | Error::MixedStructureVector { .. }
        | Error::CrossCheck { .. } => SubStatus::Model,
        Error::Io(_) => SubStatus::Io,
        Error::InvalidArgument(_)
        | Error::DegeneratePlane
        | Error::PlaneOutsideDistribution { .. }
        | Error::DimensionTooSmall { .. }
        | Error::FiberTooSmall { .. }
        | Error::ConstraintViolated { .. } => SubStatus::InvalidArgument,
        Error::RankDeficient { .. } | Error::GramSchmidtBreakdown { .. } | Error::FrameDiscontinuity { .. } => {
            SubStatus::Numerical
        }
    }
}

fn guard(f: impl FnOnce() -> Result<(), SubStatus>) -> SubStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SubStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside submersion-core");
            SubStatus::Panic
        }
    }
}

fn fail(e: Error) -> SubStatus {
    set_error(e.to_string());
    status_of(&e)
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, SubStatus> {
    if s.is_null() {
        set_error("null string argument");
        return Err(SubStatus::NullPointer);
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        SubStatus::InvalidUtf8
    })
}

unsafe fn read_slice<'a>(p: *const f64, len: usize) -> Result<&'a [f64], SubStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        set_error("null array argument");
        return Err(SubStatus::NullPointer);
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn check_out<T>(out: *mut T) -> Result<(), SubStatus> {
    if out.is_null() {
        set_error("null output pointer");
        Err(SubStatus::NullPointer)
    } else {
        Ok(())
    }
}

fn into_c_string(s: String) -> Result<*mut c_char, SubStatus> {
    CString::new(s).map(CString::into_raw).map_err(|_| {
        set_error("output contains a NUL byte");
        SubStatus::InvalidArgument
    })
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sub_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn sub_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => c"unknown",
    };
    VERSION.as_ptr()
}

/// Number of theorem ids known to the library.
#[no_mangle]
pub extern "C" fn sub_theorem_count() -> usize {
    THEOREM_NAMES.len()
}

/// Static name of theorem `i`, or NULL when out of range.
#[no_mangle]
pub extern "C" fn sub_theorem_name(i: usize) -> *const c_char {
    THEOREM_NAMES.get(i).map_or(ptr::null(), |s| s.as_ptr())
}

/// Parse a configuration from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sub_config_from_json(json: *const c_char, out: *mut *mut SubConfig) -> SubStatus {
    guard(|| {
        check_out(out)?;
        let text = read_str(json)?;
        let cfg = RunConfig::from_json(text).map_err(fail)?;
        *out = Box::into_raw(Box::new(SubConfig { inner: cfg }));
        Ok(())
    })
}

/// Load a configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sub_config_from_file(path: *const c_char, out: *mut *mut SubConfig) -> SubStatus {
    guard(|| {
        check_out(out)?;
        let path = read_str(path)?;
        let cfg = load_config(Path::new(path)).map_err(fail)?;
        *out = Box::into_raw(Box::new(SubConfig { inner: cfg }));
        Ok(())
    })
}

/// Load a built-in catalog entry by name.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sub_catalog_load(name: *const c_char, out: *mut *mut SubConfig) -> SubStatus {
    guard(|| {
        check_out(out)?;
        let name = read_str(name)?;
        let cfg = catalog::load(name).map_err(fail)?;
        *out = Box::into_raw(Box::new(SubConfig { inner: cfg }));
        Ok(())
    })
}

/// Number of catalog entries.
#[no_mangle]
pub extern "C" fn sub_catalog_count() -> usize {
    catalog::names().len()
}

/// Name of catalog entry `i` as a newly allocated string (free with
/// [`sub_string_free`]), or NULL when out of range.
#[no_mangle]
pub extern "C" fn sub_catalog_name(i: usize) -> *mut c_char {
    catalog::names()
        .get(i)
        .and_then(|n| CString::new(*n).ok())
        .map_or(ptr::null_mut(), CString::into_raw)
}

/// Config hash as a newly allocated hex string.
///
/// # Safety
/// `cfg` must come from one of the loaders and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sub_config_hash(cfg: *const SubConfig, out: *mut *mut c_char) -> SubStatus {
    guard(|| {
        check_out(out)?;
        let cfg = cfg.as_ref().ok_or_else(|| {
            set_error("null config handle");
            SubStatus::NullPointer
        })?;
        *out = into_c_string(cfg.inner.hash.clone())?;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sub_config_free(cfg: *mut SubConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Run the configured theorems. `point` selects one point (0-based);
/// pass a negative value to run all of them.
///
/// # Safety
/// `cfg` must be a live config handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sub_verify(cfg: *const SubConfig, point: i64, out: *mut *mut SubReport) -> SubStatus {
    guard(|| {
        check_out(out)?;
        let cfg = cfg.as_ref().ok_or_else(|| {
            set_error("null config handle");
            SubStatus::NullPointer
        })?;
        let opts = RunOptions {
            point: usize::try_from(point).ok(),
            theorems: None,
        };
        let report = run_verify(&cfg.inner, &opts).map_err(fail)?;
        *out = Box::into_raw(Box::new(SubReport { inner: report }));
        Ok(())
    })
}

/// # Safety
/// `report` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sub_report_free(report: *mut SubReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// One of the `SUB_VERDICT_*` constants, or -1 for a NULL handle.
///
/// # Safety
/// `report` must be NULL or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn sub_report_verdict(report: *const SubReport) -> i32 {
    match report.as_ref() {
        None => -1,
        Some(r) => match r.inner.verdict() {
            Verdict::AllHold => SUB_VERDICT_ALL_HOLD,
            Verdict::Errors => SUB_VERDICT_ERRORS,
            Verdict::Violated => SUB_VERDICT_VIOLATED,
        },
    }
}

/// # Safety
/// `report` must be NULL or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn sub_report_len(report: *const SubReport) -> usize {
    report.as_ref().map_or(0, |r| r.inner.entries.len())
}

/// Copy entry `i` into `out`.
///
/// # Safety
/// `report` must be a live report handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sub_report_entry(report: *const SubReport, i: usize, out: *mut SubEntry) -> SubStatus {
    guard(|| {
        check_out(out)?;
        let r = report.as_ref().ok_or_else(|| {
            set_error("null report handle");
            SubStatus::NullPointer
        })?;
        let e = r.inner.entries.get(i).ok_or_else(|| {
            set_error(format!("entry {i} out of range ({} entries)", r.inner.entries.len()));
            SubStatus::InvalidArgument
        })?;
        let idx = TheoremId::ALL.iter().position(|t| *t == e.theorem).unwrap_or(0);
        let mut entry = SubEntry {
            point_index: e.point_index,
            theorem: THEOREM_NAMES[idx].as_ptr(),
            has_result: false,
            lhs: f64::NAN,
            rhs: f64::NAN,
            gap: f64::NAN,
            holds: false,
            equality: false,
        };
        if let Some(rep) = &e.report {
            entry.has_result = true;
            entry.lhs = rep.lhs;
            entry.rhs = rep.rhs;
            entry.gap = rep.gap;
            entry.holds = rep.holds;
            entry.equality = rep.equality;
        }
        *out = entry;
        Ok(())
    })
}

/// Error message of entry `i` as a newly allocated string, or NULL when
/// the entry has a result.
///
/// # Safety
/// `report` must be NULL or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn sub_report_entry_error(report: *const SubReport, i: usize) -> *mut c_char {
    report
        .as_ref()
        .and_then(|r| r.inner.entries.get(i))
        .and_then(|e| e.error.clone())
        .and_then(|s| CString::new(s).ok())
        .map_or(ptr::null_mut(), CString::into_raw)
}

unsafe fn render_report(report: *const SubReport, format: ReportFormat, out: *mut *mut c_char) -> SubStatus {
    guard(|| {
        check_out(out)?;
        let r = report.as_ref().ok_or_else(|| {
            set_error("null report handle");
            SubStatus::NullPointer
        })?;
        let text = render(&r.inner, format).map_err(fail)?;
        *out = into_c_string(text)?;
        Ok(())
    })
}

/// Full report as JSON. Free the string with [`sub_string_free`].
///
/// # Safety
/// `report` must be a live report handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sub_report_json(report: *const SubReport, out: *mut *mut c_char) -> SubStatus {
    render_report(report, ReportFormat::Json, out)
}

/// Report as CSV. Free the string with [`sub_string_free`].
///
/// # Safety
/// `report` must be a live report handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sub_report_csv(report: *const SubReport, out: *mut *mut c_char) -> SubStatus {
    render_report(report, ReportFormat::Csv, out)
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sub_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Solve `b` for `a[0..k]` so the lemma constraint holds with equality
/// and evaluate `2 a1 a2 - b`.
///
/// # Safety
/// `a` must point to `k` readable doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sub_lemma(a: *const f64, k: usize, out: *mut SubLemmaResult) -> SubStatus {
    guard(|| {
        check_out(out)?;
        let a = read_slice(a, k)?.to_vec();
        let inst = LemmaInstance::solved(a).map_err(fail)?;
        let res = chen_lemma_gap(&inst, Tolerances::default().lemma_tol).map_err(fail)?;
        *out = SubLemmaResult {
            b: inst.b,
            gap: res.gap,
            equality: res.equality,
            condition_residual: res.condition_residual,
            constraint_residual: res.constraint_residual,
        };
        Ok(())
    })
}

/// Evaluate an expression in variables `x1..xn` at `x[0..n]`.
///
/// # Safety
/// `text` must be NUL-terminated, `x` must hold `n` doubles and `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn sub_expr_eval(text: *const c_char, x: *const f64, n: usize, out: *mut f64) -> SubStatus {
    guard(|| {
        check_out(out)?;
        let text = read_str(text)?;
        let x = read_slice(x, n)?;
        let e = parse_expression(text).map_err(fail)?;
        if let Some(v) = e.max_variable() {
            if v >= n {
                set_error(format!("expression uses x{} but only {n} values were given", v + 1));
                return Err(SubStatus::InvalidArgument);
            }
        }
        *out = e.eval(x).map_err(fail)?;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theorem_table_matches_core() {
        for (i, id) in TheoremId::ALL.iter().enumerate() {
            assert_eq!(THEOREM_NAMES[i].to_str().unwrap(), id.as_str());
        }
    }

    #[test]
    fn every_error_has_a_status() {
        assert_eq!(status_of(&Error::DegeneratePlane), SubStatus::InvalidArgument);
        assert_eq!(status_of(&Error::MissingField("n".into())), SubStatus::Config);
        assert_eq!(status_of(&Error::CrossCheck { residual: 1.0 }), SubStatus::Model);
    }
}
