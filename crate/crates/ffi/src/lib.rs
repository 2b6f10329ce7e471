//! C ABI over `sobary`.
//!
//! Every function returns a [`SobaryStatus`]; on failure a message is kept
//! per thread and can be fetched with [`sobary_last_error_message`].
//! Models and forms are opaque handles owned by the caller and released
//! with the matching `*_free` function. Complex numbers cross the boundary
//! as [`SobaryComplex`]; matrices are written row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use sobary::linalg::{CMatrix, CVector};
use sobary::{Error, Method, Model, StructuredBarycentricForm, C64};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobaryComplex {
    pub re: f64,
    pub im: f64,
}

impl From<SobaryComplex> for C64 {
    fn from(z: SobaryComplex) -> Self {
        C64::new(z.re, z.im)
    }
}

impl From<C64> for SobaryComplex {
    fn from(z: C64) -> Self {
        SobaryComplex { re: z.re, im: z.im }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SobaryStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    AssumptionViolation = 3,
    SingularSolve = 4,
    NearPole = 5,
    Io = 6,
    Parse = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SobaryMethod {
    FirstOrder = 0,
    StiffnessConstrained = 1,
    DampingConstrained = 2,
    ZeroDamping = 3,
}

impl From<SobaryMethod> for Method {
    fn from(m: SobaryMethod) -> Self {
        match m {
            SobaryMethod::FirstOrder => Method::FirstOrder,
            SobaryMethod::StiffnessConstrained => Method::StiffnessConstrained,
            SobaryMethod::DampingConstrained => Method::DampingConstrained,
            SobaryMethod::ZeroDamping => Method::ZeroDamping,
        }
    }
}

/// Which matrix of a model to copy out.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SobaryMatrix {
    Mass = 0,
    Damping = 1,
    Stiffness = 2,
    /// State matrix of a first-order model.
    State = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SobaryVector {
    Input = 0,
    Output = 1,
}

/// Opaque fitted realization.
pub struct SobaryModel(Model);

/// Opaque barycentric form.
pub struct SobaryForm(StructuredBarycentricForm);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> SobaryStatus {
    match e {
        Error::NearPole { .. } | Error::ZeroDenominator { .. } => SobaryStatus::NearPole,
        Error::SingularLoewner { .. } | Error::SingularMass { .. } | Error::SingularDenominator { .. } => {
            SobaryStatus::SingularSolve
        }
        Error::Io(_) => SobaryStatus::Io,
        Error::Parse { .. } | Error::NonMonotoneFrequency { .. } | Error::SchemaMismatch { .. } | Error::Json(_) => {
            SobaryStatus::Parse
        }
        e if e.exit_code() == 2 => SobaryStatus::AssumptionViolation,
        _ => SobaryStatus::InvalidArgument,
    }
}

type FfiResult = Result<(), (SobaryStatus, String)>;

fn fail(status: SobaryStatus, msg: impl Into<String>) -> FfiResult {
    Err((status, msg.into()))
}

fn lib(e: Error) -> (SobaryStatus, String) {
    (status_of(&e), e.to_string())
}

fn guard(f: impl FnOnce() -> FfiResult) -> SobaryStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            SobaryStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SobaryStatus::Panic
        }
    }
}

unsafe fn input<'a>(p: *const SobaryComplex, n: usize, name: &str) -> Result<&'a [SobaryComplex], (SobaryStatus, String)> {
    if p.is_null() {
        return Err((SobaryStatus::NullPointer, format!("{name} is null")));
    }
    Ok(slice::from_raw_parts(p, n))
}

fn to_c64(v: &[SobaryComplex]) -> Vec<C64> {
    v.iter().map(|z| C64::from(*z)).collect()
}

unsafe fn copy_out(values: &[C64], buf: *mut SobaryComplex, capacity: usize, out_len: *mut usize) -> FfiResult {
    if !out_len.is_null() {
        *out_len = values.len();
    }
    if capacity < values.len() {
        return fail(SobaryStatus::BufferTooSmall, format!("buffer holds {capacity}, {} needed", values.len()));
    }
    if values.is_empty() {
        return Ok(());
    }
    if buf.is_null() {
        return fail(SobaryStatus::NullPointer, "output buffer is null");
    }
    for (k, v) in values.iter().enumerate() {
        *buf.add(k) = (*v).into();
    }
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sobary_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn sobary_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Fits a model of order `r` to left data `(lambda, h)` and right data `(mu, g)`.
///
/// `support` must hold `r` points for the stiffness- and damping-constrained
/// methods and be null otherwise. `out_form` and `out_cond` may be null.
///
/// # Safety
/// All non-null pointers must be valid for `r` elements (one for the
/// output pointers).
#[no_mangle]
pub unsafe extern "C" fn sobary_fit(
    method: SobaryMethod,
    lambda: *const SobaryComplex,
    h: *const SobaryComplex,
    mu: *const SobaryComplex,
    g: *const SobaryComplex,
    r: usize,
    support: *const SobaryComplex,
    realify: bool,
    out_model: *mut *mut SobaryModel,
    out_form: *mut *mut SobaryForm,
    out_cond: *mut f64,
) -> SobaryStatus {
    guard(|| {
        if out_model.is_null() {
            return fail(SobaryStatus::NullPointer, "out_model is null");
        }
        *out_model = ptr::null_mut();
        if !out_form.is_null() {
            *out_form = ptr::null_mut();
        }
        if r == 0 {
            return fail(SobaryStatus::InvalidArgument, "order must be positive");
        }
        let data = sobary::InterpolationData::new(
            to_c64(input(lambda, r, "lambda")?),
            to_c64(input(h, r, "h")?),
            to_c64(input(mu, r, "mu")?),
            to_c64(input(g, r, "g")?),
        )
        .map_err(lib)?;
        let support = if support.is_null() { None } else { Some(to_c64(input(support, r, "support")?)) };
        let options = sobary::FitOptions { realify, ..Default::default() };
        let fit = sobary::fit(method.into(), &data, support.as_deref(), &options).map_err(lib)?;
        if !out_cond.is_null() {
            *out_cond = fit.report.cond_estimate;
        }
        if !out_form.is_null() {
            *out_form = Box::into_raw(Box::new(SobaryForm(fit.form)));
        }
        *out_model = Box::into_raw(Box::new(SobaryModel(fit.model)));
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library and not be freed twice; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn sobary_model_free(model: *mut SobaryModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `form` must come from this library and not be freed twice; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn sobary_form_free(form: *mut SobaryForm) {
    if !form.is_null() {
        drop(Box::from_raw(form));
    }
}

unsafe fn model_ref<'a>(model: *const SobaryModel) -> Result<&'a Model, (SobaryStatus, String)> {
    model.as_ref().map(|m| &m.0).ok_or((SobaryStatus::NullPointer, "model is null".into()))
}

/// # Safety
/// `model` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sobary_model_eval(model: *const SobaryModel, s: SobaryComplex, out: *mut SobaryComplex) -> SobaryStatus {
    guard(|| {
        let m = model_ref(model)?;
        if out.is_null() {
            return fail(SobaryStatus::NullPointer, "out is null");
        }
        *out = m.eval(s.into()).map_err(lib)?.into();
        Ok(())
    })
}

/// # Safety
/// `form` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sobary_form_eval(form: *const SobaryForm, s: SobaryComplex, out: *mut SobaryComplex) -> SobaryStatus {
    guard(|| {
        let f = form.as_ref().ok_or((SobaryStatus::NullPointer, "form is null".to_string()))?;
        if out.is_null() {
            return fail(SobaryStatus::NullPointer, "out is null");
        }
        *out = f.0.eval(s.into()).map_err(lib)?.into();
        Ok(())
    })
}

/// Copies the form weights; `out_len` receives the count even when the buffer is too small.
///
/// # Safety
/// `buf` must be valid for `capacity` elements.
#[no_mangle]
pub unsafe extern "C" fn sobary_form_weights(
    form: *const SobaryForm,
    buf: *mut SobaryComplex,
    capacity: usize,
    out_len: *mut usize,
) -> SobaryStatus {
    guard(|| {
        let f = form.as_ref().ok_or((SobaryStatus::NullPointer, "form is null".to_string()))?;
        copy_out(f.0.weights(), buf, capacity, out_len)
    })
}

/// Order `r` of the model and whether it is second order.
///
/// # Safety
/// `model` must be valid; output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn sobary_model_info(
    model: *const SobaryModel,
    out_order: *mut usize,
    out_second_order: *mut bool,
    out_real: *mut bool,
) -> SobaryStatus {
    guard(|| {
        let m = model_ref(model)?;
        if !out_order.is_null() {
            *out_order = m.order();
        }
        if !out_second_order.is_null() {
            *out_second_order = m.as_second_order().is_some();
        }
        if !out_real.is_null() {
            *out_real = m.is_real();
        }
        Ok(())
    })
}

/// Poles of the model (`2r` for second order, `r` for first order).
///
/// # Safety
/// `buf` must be valid for `capacity` elements.
#[no_mangle]
pub unsafe extern "C" fn sobary_model_poles(
    model: *const SobaryModel,
    buf: *mut SobaryComplex,
    capacity: usize,
    out_len: *mut usize,
) -> SobaryStatus {
    guard(|| {
        let m = model_ref(model)?;
        let poles = m.poles().map_err(lib)?;
        copy_out(poles.as_slice(), buf, capacity, out_len)
    })
}

fn row_major(m: &CMatrix) -> Vec<C64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Copies one `r x r` matrix row-major into `buf`.
///
/// # Safety
/// `buf` must be valid for `capacity` elements.
#[no_mangle]
pub unsafe extern "C" fn sobary_model_matrix(
    model: *const SobaryModel,
    which: SobaryMatrix,
    buf: *mut SobaryComplex,
    capacity: usize,
    out_len: *mut usize,
) -> SobaryStatus {
    guard(|| {
        let m = model_ref(model)?;
        let mat = match (m, which) {
            (Model::SecondOrder(so), SobaryMatrix::Mass) => so.mass(),
            (Model::SecondOrder(so), SobaryMatrix::Damping) => so.damping(),
            (Model::SecondOrder(so), SobaryMatrix::Stiffness) => so.stiffness(),
            (Model::FirstOrder(fo), SobaryMatrix::State) => fo.state(),
            _ => return fail(SobaryStatus::InvalidArgument, format!("{which:?} does not exist for this model kind")),
        };
        copy_out(&row_major(mat), buf, capacity, out_len)
    })
}

/// # Safety
/// `buf` must be valid for `capacity` elements.
#[no_mangle]
pub unsafe extern "C" fn sobary_model_vector(
    model: *const SobaryModel,
    which: SobaryVector,
    buf: *mut SobaryComplex,
    capacity: usize,
    out_len: *mut usize,
) -> SobaryStatus {
    guard(|| {
        let m = model_ref(model)?;
        let v: &CVector = match (m, which) {
            (Model::SecondOrder(so), SobaryVector::Input) => so.input(),
            (Model::SecondOrder(so), SobaryVector::Output) => so.output(),
            (Model::FirstOrder(fo), SobaryVector::Input) => fo.input(),
            (Model::FirstOrder(fo), SobaryVector::Output) => fo.output(),
        };
        copy_out(v.as_slice(), buf, capacity, out_len)
    })
}

unsafe fn path_arg<'a>(path: *const c_char) -> Result<&'a str, (SobaryStatus, String)> {
    if path.is_null() {
        return Err((SobaryStatus::NullPointer, "path is null".into()));
    }
    CStr::from_ptr(path).to_str().map_err(|_| (SobaryStatus::InvalidArgument, "path is not UTF-8".into()))
}

/// Reads a model file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out_model` valid.
#[no_mangle]
pub unsafe extern "C" fn sobary_model_read(path: *const c_char, out_model: *mut *mut SobaryModel) -> SobaryStatus {
    guard(|| {
        if out_model.is_null() {
            return fail(SobaryStatus::NullPointer, "out_model is null");
        }
        *out_model = ptr::null_mut();
        let file = sobary::io::read_model(path_arg(path)?).map_err(lib)?;
        *out_model = Box::into_raw(Box::new(SobaryModel(file.model)));
        Ok(())
    })
}

/// Writes a model file without provenance data.
///
/// # Safety
/// `model` must be valid and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn sobary_model_write(model: *const SobaryModel, path: *const c_char) -> SobaryStatus {
    guard(|| {
        let m = model_ref(model)?;
        let file = sobary::io::ModelFile { method: None, model: m.clone(), provenance: Default::default() };
        sobary::io::write_model(path_arg(path)?, &file).map_err(lib)
    })
}
