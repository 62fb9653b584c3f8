//! C ABI for the `interf` toolkit.
//!
//! Matrices and decomposition plans cross the boundary as opaque handles
//! created and destroyed by this library. Every fallible function returns an
//! [`InterfStatus`]; on failure a description of the last error of the
//! calling thread is available from [`interf_last_error`]. Panics are caught
//! and reported as [`InterfStatus::Internal`]. Complex numbers are passed as
//! separate real and imaginary `double`s; matrix data is row-major.

use interf::csd::{decompose, reconstruct, DecompositionPlan};
use interf::immanant::{immanant, permanent, three_photon_coincidence, Partition};
use interf::matrix::haar_random_unitary;
use interf::sun::{dfunction_matrix, IrrepLabel, Omega};
use interf::{ComplexMatrix, Error, UnitaryMatrix, C64};
use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Result codes of the C interface.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InterfStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument is out of range or malformed.
    InvalidArgument = 2,
    /// Matrix dimensions do not fit the operation.
    ShapeError = 3,
    /// A matrix that must be unitary is not.
    NotUnitary = 4,
    /// A numerical routine failed to converge or met a singular input.
    NumericalFailure = 5,
    /// The requested size exceeds a hard limit.
    ComplexityLimit = 6,
    /// Any other toolkit error.
    DomainError = 7,
    /// A panic was caught inside the library.
    Internal = 8,
}

/// Opaque complex matrix.
pub struct InterfMatrix(ComplexMatrix);

/// Opaque decomposition plan.
pub struct InterfPlan(DecompositionPlan);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> InterfStatus {
    match e {
        Error::InvalidDimension(_)
        | Error::InvalidInput(_)
        | Error::PartitionError(_)
        | Error::LabelError(_)
        | Error::InvalidSplit(_)
        | Error::PortError(_)
        | Error::InvalidGamma(_) => InterfStatus::InvalidArgument,
        Error::ShapeError(_) | Error::ShapeMismatch(_) => InterfStatus::ShapeError,
        Error::NotUnitary { .. } => InterfStatus::NotUnitary,
        Error::NumericalFailure(_) | Error::SingularInput(_) => InterfStatus::NumericalFailure,
        Error::ComplexityLimit(_) => InterfStatus::ComplexityLimit,
        _ => InterfStatus::DomainError,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (InterfStatus, String)>) -> InterfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            InterfStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("panic inside interf");
            InterfStatus::Internal
        }
    }
}

fn domain(e: Error) -> (InterfStatus, String) {
    (status_of(&e), format!("{}: {e}", e.code()))
}

fn null(what: &str) -> (InterfStatus, String) {
    (InterfStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> (InterfStatus, String) {
    (InterfStatus::InvalidArgument, msg.into())
}

unsafe fn matrix_ref<'a>(m: *const InterfMatrix, what: &str) -> Result<&'a ComplexMatrix, (InterfStatus, String)> {
    m.as_ref().map(|m| &m.0).ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), (InterfStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], (InterfStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message describing the last failure on the calling thread (empty after a
/// success). The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn interf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn interf_status_name(status: InterfStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        InterfStatus::Ok => b"ok\0",
        InterfStatus::NullPointer => b"null_pointer\0",
        InterfStatus::InvalidArgument => b"invalid_argument\0",
        InterfStatus::ShapeError => b"shape_error\0",
        InterfStatus::NotUnitary => b"not_unitary\0",
        InterfStatus::NumericalFailure => b"numerical_failure\0",
        InterfStatus::ComplexityLimit => b"complexity_limit\0",
        InterfStatus::DomainError => b"domain_error\0",
        InterfStatus::Internal => b"internal\0",
    };
    s.as_ptr().cast()
}

/// Creates a `rows × cols` matrix from row-major real and imaginary parts
/// (`rows·cols` values each).
///
/// # Safety
/// `re` and `im` must point to `rows·cols` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn interf_matrix_new(
    rows: usize,
    cols: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut InterfMatrix,
) -> InterfStatus {
    guard(|| {
        let len = rows.checked_mul(cols).ok_or_else(|| invalid("matrix size overflows"))?;
        let (re, im) = (slice(re, len, "re")?, slice(im, len, "im")?);
        let data = re.iter().zip(im).map(|(&r, &i)| C64::new(r, i)).collect();
        let m = ComplexMatrix::new(rows, cols, data).map_err(domain)?;
        write_out(out, Box::into_raw(Box::new(InterfMatrix(m))), "out")
    })
}

/// Haar-random `n × n` unitary, deterministic in `seed`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn interf_haar_unitary(n: usize, seed: u64, out: *mut *mut InterfMatrix) -> InterfStatus {
    guard(|| {
        let u = haar_random_unitary(n, seed).map_err(domain)?;
        write_out(out, Box::into_raw(Box::new(InterfMatrix(u.into_matrix()))), "out")
    })
}

/// Releases a matrix (null is ignored).
///
/// # Safety
/// `m` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn interf_matrix_free(m: *mut InterfMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Number of rows and columns.
///
/// # Safety
/// `m` must be a live matrix handle; `rows` and `cols` must be writable.
#[no_mangle]
pub unsafe extern "C" fn interf_matrix_shape(m: *const InterfMatrix, rows: *mut usize, cols: *mut usize) -> InterfStatus {
    guard(|| {
        let m = matrix_ref(m, "matrix")?;
        write_out(rows, m.rows(), "rows")?;
        write_out(cols, m.cols(), "cols")
    })
}

/// Copies the row-major entries into `re` and `im`, each of capacity `len`
/// (at least `rows·cols`).
///
/// # Safety
/// `m` must be a live handle; `re` and `im` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn interf_matrix_data(
    m: *const InterfMatrix,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> InterfStatus {
    guard(|| {
        let m = matrix_ref(m, "matrix")?;
        let data = m.as_slice();
        if len < data.len() {
            return Err(invalid(format!("buffers hold {len} values, matrix has {}", data.len())));
        }
        if re.is_null() || im.is_null() {
            return Err(null("output buffer"));
        }
        for (k, z) in data.iter().enumerate() {
            re.add(k).write(z.re);
            im.add(k).write(z.im);
        }
        Ok(())
    })
}

/// Realizes an `(ns·np)`-dimensional unitary as a beam-splitter plan.
/// Fails with [`InterfStatus::NotUnitary`] if `u` is not unitary within `tol`.
///
/// # Safety
/// `u` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn interf_decompose(
    u: *const InterfMatrix,
    ns: usize,
    np: usize,
    tol: f64,
    out: *mut *mut InterfPlan,
) -> InterfStatus {
    guard(|| {
        let u = UnitaryMatrix::new(matrix_ref(u, "u")?.clone(), tol).map_err(domain)?;
        let plan = decompose(&u, ns, np).map_err(domain)?;
        write_out(out, Box::into_raw(Box::new(InterfPlan(plan))), "out")
    })
}

/// Number of optical elements in a plan.
///
/// # Safety
/// `plan` must be a live handle; `count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn interf_plan_len(plan: *const InterfPlan, count: *mut usize) -> InterfStatus {
    guard(|| {
        let p = plan.as_ref().ok_or_else(|| null("plan"))?;
        write_out(count, p.0.elements.len(), "count")
    })
}

/// Multiplies a plan back into its unitary.
///
/// # Safety
/// `plan` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn interf_reconstruct(plan: *const InterfPlan, out: *mut *mut InterfMatrix) -> InterfStatus {
    guard(|| {
        let p = plan.as_ref().ok_or_else(|| null("plan"))?;
        let u = reconstruct(&p.0).map_err(domain)?;
        write_out(out, Box::into_raw(Box::new(InterfMatrix(u.into_matrix()))), "out")
    })
}

/// Releases a plan (null is ignored).
///
/// # Safety
/// `plan` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn interf_plan_free(plan: *mut InterfPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// Permanent of a square matrix.
///
/// # Safety
/// `m` must be a live handle; `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn interf_permanent(m: *const InterfMatrix, re: *mut f64, im: *mut f64) -> InterfStatus {
    guard(|| {
        let v = permanent(matrix_ref(m, "matrix")?).map_err(domain)?;
        write_out(re, v.re, "re")?;
        write_out(im, v.im, "im")
    })
}

/// Immanant of a square matrix for the partition `parts[0..nparts]`
/// (nonincreasing, summing to the matrix order).
///
/// # Safety
/// `m` must be a live handle; `parts` must point to `nparts` values; `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn interf_immanant(
    m: *const InterfMatrix,
    parts: *const u32,
    nparts: usize,
    re: *mut f64,
    im: *mut f64,
) -> InterfStatus {
    guard(|| {
        let p = Partition::new(slice(parts, nparts, "parts")?.to_vec()).map_err(domain)?;
        let v = immanant(matrix_ref(m, "matrix")?, &p).map_err(domain)?;
        write_out(re, v.re, "re")?;
        write_out(im, v.im, "im")
    })
}

/// D-matrix of the `SU(n)` irrep with Dynkin label `kappas[0..nk]` (trailing
/// zeros may be omitted) at the group element `v` (an `n × n` unitary).
///
/// # Safety
/// `v` must be a live handle; `kappas` must point to `nk` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn interf_dfunction_matrix(
    n: usize,
    kappas: *const u32,
    nk: usize,
    v: *const InterfMatrix,
    out: *mut *mut InterfMatrix,
) -> InterfStatus {
    guard(|| {
        let k = IrrepLabel::padded(n, slice(kappas, nk, "kappas")?).map_err(domain)?;
        let v = UnitaryMatrix::new(matrix_ref(v, "v")?.clone(), 1e-9).map_err(domain)?;
        let d = dfunction_matrix(n, &Omega::Matrix(v), &k).map_err(domain)?;
        write_out(out, Box::into_raw(Box::new(InterfMatrix(d.into_matrix()))), "out")
    })
}

/// Coincidence probability of three photons entering inputs 1–3 of the 3×3
/// matrix `u` with delays `taus[0..3]` and a common Gaussian power spectrum
/// of standard deviation `sigma`.
///
/// # Safety
/// `u` must be a live handle; `taus` must point to three doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn interf_three_photon_coincidence(
    u: *const InterfMatrix,
    taus: *const f64,
    sigma: f64,
    out: *mut f64,
) -> InterfStatus {
    guard(|| {
        let t = slice(taus, 3, "taus")?;
        let p = three_photon_coincidence(matrix_ref(u, "u")?, [t[0], t[1], t[2]], sigma).map_err(domain)?;
        write_out(out, p, "out")
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CStr;
    use std::ptr;

    fn last_error() -> String {
        unsafe { CStr::from_ptr(interf_last_error()) }.to_string_lossy().into_owned()
    }

    fn data(m: *const InterfMatrix) -> (usize, usize, Vec<f64>, Vec<f64>) {
        let (mut r, mut c) = (0, 0);
        unsafe {
            assert_eq!(interf_matrix_shape(m, &mut r, &mut c), InterfStatus::Ok);
            let (mut re, mut im) = (vec![0.0; r * c], vec![0.0; r * c]);
            assert_eq!(interf_matrix_data(m, re.as_mut_ptr(), im.as_mut_ptr(), r * c), InterfStatus::Ok);
            (r, c, re, im)
        }
    }

    #[test]
    fn decompose_reconstruct_round_trip() {
        unsafe {
            let mut u = ptr::null_mut();
            assert_eq!(interf_haar_unitary(6, 3, &mut u), InterfStatus::Ok);
            let mut plan = ptr::null_mut();
            assert_eq!(interf_decompose(u, 3, 2, 1e-9, &mut plan), InterfStatus::Ok);
            let mut count = 0;
            assert_eq!(interf_plan_len(plan, &mut count), InterfStatus::Ok);
            assert!(count > 0);
            let mut back = ptr::null_mut();
            assert_eq!(interf_reconstruct(plan, &mut back), InterfStatus::Ok);
            let (_, _, re0, im0) = data(u);
            let (r, c, re1, im1) = data(back);
            assert_eq!((r, c), (6, 6));
            for k in 0..36 {
                assert!((re0[k] - re1[k]).abs() < 1e-9 && (im0[k] - im1[k]).abs() < 1e-9);
            }
            interf_plan_free(plan);
            interf_matrix_free(u);
            interf_matrix_free(back);
        }
    }

    #[test]
    fn permanent_and_immanant_of_identity() {
        unsafe {
            let re = [1.0, 0.0, 0.0, 1.0];
            let im = [0.0; 4];
            let mut m = ptr::null_mut();
            assert_eq!(interf_matrix_new(2, 2, re.as_ptr(), im.as_ptr(), &mut m), InterfStatus::Ok);
            let (mut pr, mut pi) = (0.0, 0.0);
            assert_eq!(interf_permanent(m, &mut pr, &mut pi), InterfStatus::Ok);
            assert_eq!((pr, pi), (1.0, 0.0));
            let parts = [1u32, 1];
            assert_eq!(interf_immanant(m, parts.as_ptr(), 2, &mut pr, &mut pi), InterfStatus::Ok);
            assert_eq!((pr, pi), (1.0, 0.0));
            let bad = [3u32];
            assert_eq!(interf_immanant(m, bad.as_ptr(), 1, &mut pr, &mut pi), InterfStatus::InvalidArgument);
            assert!(last_error().starts_with("PartitionError"));
            interf_matrix_free(m);
        }
    }

    #[test]
    fn dfunction_of_fundamental_irrep_is_the_matrix() {
        unsafe {
            let mut u = ptr::null_mut();
            assert_eq!(interf_haar_unitary(3, 1, &mut u), InterfStatus::Ok);
            let k = [1u32];
            let mut d = ptr::null_mut();
            assert_eq!(interf_dfunction_matrix(3, k.as_ptr(), 1, u, &mut d), InterfStatus::Ok);
            assert_eq!(data(u), data(d));
            let taus = [0.0; 3];
            let mut p = -1.0;
            assert_eq!(interf_three_photon_coincidence(u, taus.as_ptr(), 1.0, &mut p), InterfStatus::Ok);
            let (mut pr, mut pi) = (0.0, 0.0);
            interf_permanent(u, &mut pr, &mut pi);
            assert!((p - (pr * pr + pi * pi)).abs() < 1e-12);
            interf_matrix_free(u);
            interf_matrix_free(d);
        }
    }

    #[test]
    fn errors_are_reported() {
        unsafe {
            let mut m = ptr::null_mut();
            assert_eq!(interf_matrix_new(2, 2, ptr::null(), ptr::null(), &mut m), InterfStatus::NullPointer);
            assert_eq!(last_error(), "re is null");
            let re = [1.0, 2.0, 3.0, 4.0];
            assert_eq!(interf_matrix_new(2, 2, re.as_ptr(), re.as_ptr(), &mut m), InterfStatus::Ok);
            let mut plan = ptr::null_mut();
            assert_eq!(interf_decompose(m, 2, 1, 1e-9, &mut plan), InterfStatus::NotUnitary);
            let mut p = 0.0;
            let taus = [0.0; 3];
            assert_eq!(interf_three_photon_coincidence(m, taus.as_ptr(), 1.0, &mut p), InterfStatus::ShapeError);
            assert_eq!(interf_permanent(ptr::null(), &mut p, &mut p), InterfStatus::NullPointer);
            let name = CStr::from_ptr(interf_status_name(InterfStatus::NotUnitary));
            assert_eq!(name.to_str().unwrap(), "not_unitary");
            interf_matrix_free(m);
            interf_matrix_free(ptr::null_mut());
        }
    }
}
