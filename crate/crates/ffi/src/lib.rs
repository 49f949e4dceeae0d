//! C ABI for the affinity pipeline: opaque handles, integer status codes,
//! caller-supplied buffers. The generated header lives in
//! `include/polidna.h`.
//!
//! Conventions:
//! - Functions returning `PdnaStatus` report failure through the code and
//!   record a message retrievable with `pdna_last_error`.
//! - String getters return the required buffer size including the NUL
//!   terminator (0 on error) and copy when the buffer is large enough.
//! - Every handle must be released with its matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;

use polidna::error::{Error, ErrorClass};
use polidna::gmm::LambdaPolicy;
use polidna::ingest::VoteDataset;
use polidna::pipeline::ReductionMethod;

/// Status code for every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdnaStatus {
    Ok = 0,
    /// Malformed input data or unusable parameters.
    InputError = 2,
    /// Numerical failure (rank deficiency, singular covariance, ...).
    NumericError = 3,
    NullArgument = 4,
    InvalidUtf8 = 5,
    BufferTooSmall = 6,
    IndexOutOfRange = 7,
}

/// Dimensionality-reduction choice for `pdna_analyze`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdnaMethod {
    Pca = 0,
    Spca = 1,
}

/// Shrinkage selection for `pdna_analyze`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdnaLambda {
    Auto = 0,
    Fixed = 1,
}

/// Opaque parsed dataset handle.
pub struct PdnaDataset {
    inner: VoteDataset,
}

/// Opaque analysis result handle.
pub struct PdnaResult {
    voter_ids: Vec<String>,
    nominal_groups: Vec<String>,
    group_ids: Vec<String>,
    affinities: Vec<Vec<f64>>,
    map_points: Vec<[f64; 2]>,
    expressed_variance: f64,
    lambda: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let cleaned: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(cleaned).unwrap_or_default();
    });
}

fn fail(e: &Error) -> PdnaStatus {
    set_error(&e.to_string());
    match e.class() {
        ErrorClass::Input => PdnaStatus::InputError,
        ErrorClass::Numeric => PdnaStatus::NumericError,
    }
}

/// Copy the last error message for this thread into `buf`. Returns the
/// size the message needs, including the NUL terminator; copies only when
/// `len` is large enough.
///
/// # Safety
/// `buf` must point to at least `len` writable bytes, or be null (the call
/// then only reports the required size).
#[no_mangle]
pub unsafe extern "C" fn pdna_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && len >= bytes.len() {
            std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, bytes.len());
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string; do not free.
#[no_mangle]
pub extern "C" fn pdna_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

unsafe fn path_arg<'a>(ptr: *const c_char) -> Result<&'a Path, PdnaStatus> {
    if ptr.is_null() {
        set_error("null path argument");
        return Err(PdnaStatus::NullArgument);
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(Path::new(s)),
        Err(_) => {
            set_error("path is not valid UTF-8");
            Err(PdnaStatus::InvalidUtf8)
        }
    }
}

fn hand_out<T>(out: *mut *mut T, value: T) -> PdnaStatus {
    if out.is_null() {
        set_error("null output handle");
        return PdnaStatus::NullArgument;
    }
    unsafe {
        *out = Box::into_raw(Box::new(value));
    }
    PdnaStatus::Ok
}

/// Parse the three-file CSV schema into a dataset handle.
///
/// # Safety
/// All three paths must be NUL-terminated strings; `out` must be a valid
/// pointer to receive the handle.
#[no_mangle]
pub unsafe extern "C" fn pdna_dataset_load_csv(
    votes: *const c_char,
    voters: *const c_char,
    bills: *const c_char,
    out: *mut *mut PdnaDataset,
) -> PdnaStatus {
    let (votes, voters, bills) = match (path_arg(votes), path_arg(voters), path_arg(bills)) {
        (Ok(a), Ok(b), Ok(c)) => (a, b, c),
        (Err(s), _, _) | (_, Err(s), _) | (_, _, Err(s)) => return s,
    };
    match polidna::ingest::load_csv(votes, voters, bills) {
        Ok(dataset) => hand_out(out, PdnaDataset { inner: dataset }),
        Err(e) => fail(&e),
    }
}

/// Parse the single-document JSON schema into a dataset handle.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pdna_dataset_load_json(
    path: *const c_char,
    out: *mut *mut PdnaDataset,
) -> PdnaStatus {
    let path = match path_arg(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    match polidna::ingest::load_json(path) {
        Ok(dataset) => hand_out(out, PdnaDataset { inner: dataset }),
        Err(e) => fail(&e),
    }
}

/// Apply the cleaning rules in place (secret ballots, never-voting voters,
/// constant bills, iterated to a fixed point).
///
/// # Safety
/// `dataset` must be a live handle from a `pdna_dataset_load_*` call.
#[no_mangle]
pub unsafe extern "C" fn pdna_dataset_clean(dataset: *mut PdnaDataset) -> PdnaStatus {
    let Some(d) = dataset.as_mut() else {
        set_error("null dataset handle");
        return PdnaStatus::NullArgument;
    };
    match polidna::ingest::clean_dataset(&d.inner) {
        Ok((clean, _report)) => {
            d.inner = clean;
            PdnaStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// # Safety
/// `dataset` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pdna_dataset_n_voters(dataset: *const PdnaDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.inner.n_voters())
}

/// # Safety
/// `dataset` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pdna_dataset_n_bills(dataset: *const PdnaDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.inner.n_bills())
}

/// # Safety
/// `dataset` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pdna_dataset_n_groups(dataset: *const PdnaDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.inner.n_groups())
}

/// Release a dataset handle. Null is a no-op.
///
/// # Safety
/// `dataset` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn pdna_dataset_free(dataset: *mut PdnaDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Run the full pipeline on a dataset: clean, encode, standardize, reduce
/// (PCA or sparse PCA with budget `p` and `restarts` extra seeds), fit the
/// per-group Gaussian model (`lambda_mode`/`lambda` control shrinkage),
/// compute every voter's affinity vector and 2-D map position.
///
/// # Safety
/// `dataset` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pdna_analyze(
    dataset: *const PdnaDataset,
    method: PdnaMethod,
    k: usize,
    p: usize,
    restarts: usize,
    lambda_mode: PdnaLambda,
    lambda: f64,
    uniform_priors: bool,
    out: *mut *mut PdnaResult,
) -> PdnaStatus {
    let Some(d) = dataset.as_ref() else {
        set_error("null dataset handle");
        return PdnaStatus::NullArgument;
    };
    let method = match method {
        PdnaMethod::Pca => ReductionMethod::Pca { k },
        PdnaMethod::Spca => ReductionMethod::Spca { k, p, restarts },
    };
    let lambda = match lambda_mode {
        PdnaLambda::Auto => LambdaPolicy::Auto,
        PdnaLambda::Fixed => LambdaPolicy::Fixed(lambda),
    };
    match analyze(&d.inner, method, lambda, uniform_priors) {
        Ok(result) => hand_out(out, result),
        Err(e) => fail(&e),
    }
}

fn analyze(
    raw: &VoteDataset,
    method: ReductionMethod,
    lambda: LambdaPolicy,
    uniform_priors: bool,
) -> Result<PdnaResult, Error> {
    let (dataset, _) = polidna::ingest::clean_dataset(raw)?;
    let encoded = polidna::preprocess::encode(&dataset);
    let standardized = polidna::preprocess::standardize(&encoded)?;
    let basis = method.fit(&standardized)?;
    let evar = polidna::pca::expressed_variance(&standardized, &basis)?;
    let projected = polidna::pca::project(&standardized, &basis)?;
    let mut model = polidna::gmm::gmm_fit(&projected, &dataset.group_assignment(), lambda)?;
    if uniform_priors {
        model = model.with_uniform_priors();
    }
    let dna = polidna::gmm::dna_all(&model, &projected)?;
    let layout = polidna::map::layout_groups(dataset.groups(), None)?;
    let groups = dataset.groups().to_vec();
    let mut map_points = Vec::with_capacity(dna.len());
    for (row, voter) in dna.iter().zip(dataset.voters()) {
        let point = polidna::map::map_point(&layout, &groups, row, &voter.group)?;
        map_points.push(point.gamma);
    }
    Ok(PdnaResult {
        voter_ids: dataset.voters().iter().map(|v| v.id.clone()).collect(),
        nominal_groups: dataset.voters().iter().map(|v| v.group.clone()).collect(),
        group_ids: groups,
        affinities: dna.into_iter().map(|d| d.probs).collect(),
        map_points,
        expressed_variance: evar,
        lambda: model.lambda(),
    })
}

/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pdna_result_n_voters(result: *const PdnaResult) -> usize {
    result.as_ref().map_or(0, |r| r.voter_ids.len())
}

/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pdna_result_n_groups(result: *const PdnaResult) -> usize {
    result.as_ref().map_or(0, |r| r.group_ids.len())
}

/// Fraction of total variance captured by the reduction; NaN on null.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pdna_result_expressed_variance(result: *const PdnaResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.expressed_variance)
}

/// Covariance shrinkage actually used by the fit; NaN on null.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pdna_result_lambda(result: *const PdnaResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.lambda)
}

/// Copy one voter's affinity vector (one entry per group, summing to 1)
/// into `buf`.
///
/// # Safety
/// `result` must be a live handle; `buf` must point to at least `len`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pdna_result_affinity(
    result: *const PdnaResult,
    voter: usize,
    buf: *mut f64,
    len: usize,
) -> PdnaStatus {
    let Some(r) = result.as_ref() else {
        set_error("null result handle");
        return PdnaStatus::NullArgument;
    };
    if buf.is_null() {
        set_error("null output buffer");
        return PdnaStatus::NullArgument;
    }
    let Some(row) = r.affinities.get(voter) else {
        set_error("voter index out of range");
        return PdnaStatus::IndexOutOfRange;
    };
    if len < row.len() {
        set_error("affinity buffer too small");
        return PdnaStatus::BufferTooSmall;
    }
    std::ptr::copy_nonoverlapping(row.as_ptr(), buf, row.len());
    PdnaStatus::Ok
}

/// Copy one voter's 2-D map position into `xy[0..2]`.
///
/// # Safety
/// `result` must be a live handle; `xy` must point to two writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pdna_result_map_point(
    result: *const PdnaResult,
    voter: usize,
    xy: *mut f64,
) -> PdnaStatus {
    let Some(r) = result.as_ref() else {
        set_error("null result handle");
        return PdnaStatus::NullArgument;
    };
    if xy.is_null() {
        set_error("null output buffer");
        return PdnaStatus::NullArgument;
    }
    let Some(point) = r.map_points.get(voter) else {
        set_error("voter index out of range");
        return PdnaStatus::IndexOutOfRange;
    };
    std::ptr::copy_nonoverlapping(point.as_ptr(), xy, 2);
    PdnaStatus::Ok
}

unsafe fn copy_string(s: &str, buf: *mut c_char, len: usize) -> usize {
    let needed = s.len() + 1;
    if !buf.is_null() && len >= needed {
        std::ptr::copy_nonoverlapping(s.as_ptr().cast::<c_char>(), buf, s.len());
        *buf.add(s.len()) = 0;
    }
    needed
}

/// Copy a voter id. Returns the size needed including the NUL terminator,
/// or 0 when the handle or index is invalid; copies only when `len` is
/// large enough.
///
/// # Safety
/// `result` must be null or live; `buf` null or `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn pdna_result_voter_id(
    result: *const PdnaResult,
    voter: usize,
    buf: *mut c_char,
    len: usize,
) -> usize {
    let Some(r) = result.as_ref() else {
        set_error("null result handle");
        return 0;
    };
    let Some(id) = r.voter_ids.get(voter) else {
        set_error("voter index out of range");
        return 0;
    };
    copy_string(id, buf, len)
}

/// Copy a voter's nominal group id; same contract as
/// `pdna_result_voter_id`.
///
/// # Safety
/// `result` must be null or live; `buf` null or `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn pdna_result_nominal_group(
    result: *const PdnaResult,
    voter: usize,
    buf: *mut c_char,
    len: usize,
) -> usize {
    let Some(r) = result.as_ref() else {
        set_error("null result handle");
        return 0;
    };
    let Some(group) = r.nominal_groups.get(voter) else {
        set_error("voter index out of range");
        return 0;
    };
    copy_string(group, buf, len)
}

/// Copy a group id (affinity entries follow this order); same contract as
/// `pdna_result_voter_id`.
///
/// # Safety
/// `result` must be null or live; `buf` null or `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn pdna_result_group_id(
    result: *const PdnaResult,
    group: usize,
    buf: *mut c_char,
    len: usize,
) -> usize {
    let Some(r) = result.as_ref() else {
        set_error("null result handle");
        return 0;
    };
    let Some(id) = r.group_ids.get(group) else {
        set_error("group index out of range");
        return 0;
    };
    copy_string(id, buf, len)
}

/// Release a result handle. Null is a no-op.
///
/// # Safety
/// `result` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn pdna_result_free(result: *mut PdnaResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}
