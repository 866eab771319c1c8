//! Runtime binding to the system LAPACK.
//!
//! The library is opened on first use rather than linked, so that the OpenBLAS
//! kernel selection can be pinned before the library initializes: the
//! autodetected kernels of some OpenBLAS releases return wrong eigenvectors
//! from `dsyevd` on recent AVX-512 parts. Unless `OPENBLAS_CORETYPE` is already
//! set, the AVX2 kernels are requested on CPUs that support them.

use std::ffi::{c_char, c_int, c_void, CStr};
use std::sync::OnceLock;

use crate::error::{Error, Result};

type Dsyevd = unsafe extern "C" fn(
    jobz: *const c_char,
    uplo: *const c_char,
    n: *const c_int,
    a: *mut f64,
    lda: *const c_int,
    w: *mut f64,
    work: *mut f64,
    lwork: *const c_int,
    iwork: *mut c_int,
    liwork: *const c_int,
    info: *mut c_int,
);

const CANDIDATES: [&CStr; 4] = [
    c"libopenblas.so.0",
    c"libopenblas.so",
    c"liblapack.so.3",
    c"liblapack.so",
];

struct Library {
    dsyevd: Dsyevd,
}

static LIBRARY: OnceLock<std::result::Result<Library, String>> = OnceLock::new();

fn pin_kernels() {
    #[cfg(target_arch = "x86_64")]
    if std::env::var_os("OPENBLAS_CORETYPE").is_none()
        && std::is_x86_feature_detected!("avx2")
        && std::is_x86_feature_detected!("fma")
    {
        std::env::set_var("OPENBLAS_CORETYPE", "Haswell");
    }
}

fn open() -> std::result::Result<Library, String> {
    pin_kernels();
    for name in CANDIDATES {
        // SAFETY: plain dlopen/dlsym; the handle is intentionally leaked so the
        // symbol stays valid for the life of the process.
        unsafe {
            let handle = libc::dlopen(name.as_ptr(), libc::RTLD_NOW | libc::RTLD_LOCAL);
            if handle.is_null() {
                continue;
            }
            let sym: *mut c_void = libc::dlsym(handle, c"dsyevd_".as_ptr());
            if sym.is_null() {
                libc::dlclose(handle);
                continue;
            }
            return Ok(Library {
                dsyevd: std::mem::transmute::<*mut c_void, Dsyevd>(sym),
            });
        }
    }
    Err("no LAPACK library providing dsyevd_ found (tried libopenblas, liblapack)".into())
}

fn library() -> Result<&'static Library> {
    LIBRARY
        .get_or_init(open)
        .as_ref()
        .map_err(|msg| Error::LapackUnavailable(msg.clone()))
}

/// In-place `dsyevd` on a column-major `n x n` buffer holding a symmetric
/// matrix (lower triangle referenced). On return `a` holds the eigenvectors
/// in its columns and `w` the ascending eigenvalues.
pub(crate) fn dsyevd(n: usize, a: &mut [f64], w: &mut [f64]) -> Result<()> {
    assert_eq!(a.len(), n * n);
    assert_eq!(w.len(), n);
    let lib = library()?;
    let ni = c_int::try_from(n).map_err(|_| Error::invalid("matrix too large for LAPACK"))?;
    let jobz = b"V".as_ptr() as *const c_char;
    let uplo = b"L".as_ptr() as *const c_char;
    let mut info: c_int = 0;
    let mut work_q = [0.0f64];
    let mut iwork_q: [c_int; 1] = [0];
    // SAFETY: buffer sizes match the LAPACK contract; the first call is a
    // workspace query.
    unsafe {
        (lib.dsyevd)(
            jobz,
            uplo,
            &ni,
            a.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            work_q.as_mut_ptr(),
            &-1,
            iwork_q.as_mut_ptr(),
            &-1,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "dsyevd",
            info,
        });
    }
    let lwork = (work_q[0] as c_int).max(1);
    let liwork = iwork_q[0].max(1);
    let mut work = vec![0.0; lwork as usize];
    let mut iwork = vec![0 as c_int; liwork as usize];
    unsafe {
        (lib.dsyevd)(
            jobz,
            uplo,
            &ni,
            a.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "dsyevd",
            info,
        });
    }
    Ok(())
}
