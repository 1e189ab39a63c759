//! C ABI over the tenslet library.
//!
//! Every entry point returns a [`TnStatus`]. Objects are opaque handles
//! created by `tn_*_new`/`tn_*` constructors and released with the matching
//! `tn_*_free`. The message of the most recent failure on the calling thread
//! is available through [`tn_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use tenslet::fields::relative_l2;
use tenslet::filter_bank::FilterBank;
use tenslet::io_formats;
use tenslet::needlet_transform::{self, ArgConvention, LevelScheme, NeedletDecomposition};
use tenslet::vsh::{project_bandlimited, vsh_synthesis, TangentSampleSeq, Vec3, VectorCoeffPair};
use tenslet::Error;

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TnStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Format = 3,
    Shape = 4,
    DegenerateFrame = 5,
    Resource = 6,
    Config = 7,
    Contract = 8,
    UnknownBank = 9,
    Version = 10,
    Truncated = 11,
    Io = 12,
    InvalidString = 13,
    Panic = 14,
}

/// Which coefficient family an accessor addresses.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TnFamily {
    Div = 0,
    Curl = 1,
}

/// Filter argument convention.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TnConvention {
    Degree = 0,
    Eigenvalue = 1,
}

/// Level scheme plus filter bank.
pub struct TnScheme {
    scheme: LevelScheme,
    bank: FilterBank,
}

/// Coefficient pair `(div, curl)`.
pub struct TnCoeffs(VectorCoeffPair);

/// Weighted node sequence on one rule.
pub struct TnSequence(TangentSampleSeq);

/// Multilevel decomposition.
pub struct TnDecomposition(NeedletDecomposition);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> TnStatus {
    match e {
        Error::Domain(_) => TnStatus::Domain,
        Error::Format(_) => TnStatus::Format,
        Error::Shape { .. } => TnStatus::Shape,
        Error::DegenerateFrame => TnStatus::DegenerateFrame,
        Error::Resource(_) => TnStatus::Resource,
        Error::Config(_) => TnStatus::Config,
        Error::Contract(_) => TnStatus::Contract,
        Error::UnknownBank(_) => TnStatus::UnknownBank,
        Error::Version { .. } => TnStatus::Version,
        Error::Truncated(_) => TnStatus::Truncated,
        Error::Io(_) => TnStatus::Io,
    }
}

enum Fail {
    Lib(Error),
    Null(&'static str),
    Str(&'static str),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            TnStatus::Ok
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Null(name))) => {
            set_error(format!("null pointer passed as `{name}`"));
            TnStatus::NullPointer
        }
        Ok(Err(Fail::Str(name))) => {
            set_error(format!("`{name}` is not valid UTF-8"));
            TnStatus::InvalidString
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            TnStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(name))
}

unsafe fn as_mut<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(name))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn path_arg(p: *const c_char, name: &'static str) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(Fail::Null(name));
    }
    let s = CStr::from_ptr(p).to_str().map_err(|_| Fail::Str(name))?;
    Ok(PathBuf::from(s))
}

fn level_in(s: &LevelScheme, level: u32) -> Result<(), Fail> {
    if level < s.coarsest() || level > s.finest() {
        return Err(Error::Domain(format!("level {level} is outside {}..={}", s.coarsest(), s.finest())).into());
    }
    Ok(())
}

/// Copies the last error message into `buf` (NUL-terminated, truncated to
/// `len`). Returns the full message length excluding the terminator.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn tn_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = e.len().min(len - 1);
            ptr::copy_nonoverlapping(e.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        e.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Gauss–Legendre scheme for levels `j0..=j` with the standard bank.
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn tn_scheme_new_gl(j0: u32, j: u32, convention: TnConvention, out: *mut *mut TnScheme) -> TnStatus {
    guard(|| {
        let conv = match convention {
            TnConvention::Degree => ArgConvention::Degree,
            TnConvention::Eigenvalue => ArgConvention::Eigenvalue,
        };
        let scheme = LevelScheme::gauss_legendre(j0, j, conv)?;
        put(out, TnScheme {
            scheme,
            bank: FilterBank::standard(),
        })
    })
}

/// # Safety
/// `s` must be null or a handle from `tn_scheme_new_gl` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tn_scheme_free(s: *mut TnScheme) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Node count and bandlimit of one level.
///
/// # Safety
/// `s` must be a live handle; outputs must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn tn_scheme_level_info(s: *const TnScheme, level: u32, nodes: *mut usize, bandlimit: *mut usize) -> TnStatus {
    guard(|| {
        let s = as_ref(s, "scheme")?;
        level_in(&s.scheme, level)?;
        if !nodes.is_null() {
            *nodes = s.scheme.rule(level).len();
        }
        if !bandlimit.is_null() {
            *bandlimit = s.scheme.bandlimit(level);
        }
        Ok(())
    })
}

/// Writes node coordinates (`3 * n` doubles) and weights (`n` doubles) of
/// one level. Either output may be null.
///
/// # Safety
/// Non-null outputs must hold `3 * n` and `n` doubles where `n` is the node
/// count of the level.
#[no_mangle]
pub unsafe extern "C" fn tn_scheme_nodes(s: *const TnScheme, level: u32, xyz: *mut f64, weights: *mut f64, n: usize) -> TnStatus {
    guard(|| {
        let s = as_ref(s, "scheme")?;
        level_in(&s.scheme, level)?;
        let rule = s.scheme.rule(level);
        if n != rule.len() {
            return Err(Error::Shape {
                expected: rule.len(),
                got: n,
            }
            .into());
        }
        for (k, p) in rule.points().iter().enumerate() {
            if !xyz.is_null() {
                let v = p.xyz();
                for (i, x) in v.iter().enumerate() {
                    *xyz.add(3 * k + i) = *x;
                }
            }
            if !weights.is_null() {
                *weights.add(k) = rule.weights()[k];
            }
        }
        Ok(())
    })
}

/// Scales the first high-pass mask of the scheme's bank by `factor`.
///
/// # Safety
/// `s` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tn_scheme_inject_defect(s: *mut TnScheme, factor: f64) -> TnStatus {
    guard(|| {
        let s = as_mut(s, "scheme")?;
        s.bank = s.bank.with_high_scaled(1, factor)?;
        Ok(())
    })
}

/// Zero coefficients up to degree `l_max`.
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn tn_coeffs_new(l_max: usize, out: *mut *mut TnCoeffs) -> TnStatus {
    guard(|| put(out, TnCoeffs(VectorCoeffPair::zeros(l_max))))
}

/// Coefficients of synthetic Field A.
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn tn_coeffs_field_a(out: *mut *mut TnCoeffs) -> TnStatus {
    guard(|| put(out, TnCoeffs(tenslet::fields::field_a())))
}

/// # Safety
/// `c` must be null or a live coefficient handle.
#[no_mangle]
pub unsafe extern "C" fn tn_coeffs_free(c: *mut TnCoeffs) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

fn check_lm(c: &VectorCoeffPair, l: usize, m: i64) -> Result<(), Fail> {
    if l == 0 || l > c.l_max() || m.unsigned_abs() as usize > l {
        return Err(Error::Domain(format!("no coefficient ({l}, {m}) at bandlimit {}", c.l_max())).into());
    }
    Ok(())
}

/// # Safety
/// `c` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tn_coeffs_set(c: *mut TnCoeffs, family: TnFamily, l: usize, m: i64, re: f64, im: f64) -> TnStatus {
    guard(|| {
        let c = &mut as_mut(c, "coeffs")?.0;
        check_lm(c, l, m)?;
        let v = C64::new(re, im);
        match family {
            TnFamily::Div => c.set_div(l, m, v),
            TnFamily::Curl => c.set_curl(l, m, v),
        }
        Ok(())
    })
}

/// # Safety
/// `c` must be a live handle; `re` and `im` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn tn_coeffs_get(c: *const TnCoeffs, family: TnFamily, l: usize, m: i64, re: *mut f64, im: *mut f64) -> TnStatus {
    guard(|| {
        let c = &as_ref(c, "coeffs")?.0;
        check_lm(c, l, m)?;
        let v = match family {
            TnFamily::Div => c.get_div(l, m),
            TnFamily::Curl => c.get_curl(l, m),
        };
        *as_mut(re, "re")? = v.re;
        *as_mut(im, "im")? = v.im;
        Ok(())
    })
}

/// # Safety
/// `c` must be a live handle; `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn tn_coeffs_l_max(c: *const TnCoeffs, out: *mut usize) -> TnStatus {
    guard(|| {
        *as_mut(out, "out")? = as_ref(c, "coeffs")?.0.l_max();
        Ok(())
    })
}

/// # Safety
/// `c` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tn_coeffs_save(c: *const TnCoeffs, path: *const c_char) -> TnStatus {
    guard(|| {
        let c = as_ref(c, "coeffs")?;
        io_formats::save_coeffs(&path_arg(path, "path")?, &c.0)?;
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn tn_coeffs_load(path: *const c_char, out: *mut *mut TnCoeffs) -> TnStatus {
    guard(|| {
        let c = io_formats::load_coeffs(&path_arg(path, "path")?)?;
        put(out, TnCoeffs(c))
    })
}

/// Weighted synthesis of `c` on the rule of `level`.
///
/// # Safety
/// Handles must be live; `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn tn_synthesize(s: *const TnScheme, c: *const TnCoeffs, level: u32, out: *mut *mut TnSequence) -> TnStatus {
    guard(|| {
        let s = as_ref(s, "scheme")?;
        let c = as_ref(c, "coeffs")?;
        level_in(&s.scheme, level)?;
        put(out, TnSequence(vsh_synthesis(&c.0, s.scheme.rule(level))))
    })
}

/// Projects real node values (`3 * n` doubles, unweighted) on the finest
/// rule onto its bandlimit, giving a certified sequence.
///
/// # Safety
/// `raw` must hold `3 * n` doubles; `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn tn_project(s: *const TnScheme, raw: *const f64, n: usize, out: *mut *mut TnSequence) -> TnStatus {
    guard(|| {
        let s = as_ref(s, "scheme")?;
        if raw.is_null() {
            return Err(Fail::Null("raw"));
        }
        let j = s.scheme.finest();
        let rule: &Arc<_> = s.scheme.rule(j);
        if n != rule.len() {
            return Err(Error::Shape {
                expected: rule.len(),
                got: n,
            }
            .into());
        }
        let vals = std::slice::from_raw_parts(raw, 3 * n);
        let v: Vec<Vec3> = vals.chunks_exact(3).map(|q| [q[0], q[1], q[2]].map(|x| C64::new(x, 0.0))).collect();
        let p = project_bandlimited(&v, rule, s.scheme.bandlimit(j))?;
        put(out, TnSequence(p.projected))
    })
}

/// # Safety
/// `q` must be null or a live sequence handle.
#[no_mangle]
pub unsafe extern "C" fn tn_sequence_free(q: *mut TnSequence) {
    if !q.is_null() {
        drop(Box::from_raw(q));
    }
}

/// # Safety
/// `q` must be a live handle; `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn tn_sequence_len(q: *const TnSequence, out: *mut usize) -> TnStatus {
    guard(|| {
        *as_mut(out, "out")? = as_ref(q, "sequence")?.0.len();
        Ok(())
    })
}

/// Writes `6 * n` doubles: `(re, im)` of x, y, z per node. With
/// `unweighted` nonzero the `√w` factor is removed first.
///
/// # Safety
/// `buf` must hold `6 * n` doubles.
#[no_mangle]
pub unsafe extern "C" fn tn_sequence_values(q: *const TnSequence, unweighted: i32, buf: *mut f64, n: usize) -> TnStatus {
    guard(|| {
        let q = &as_ref(q, "sequence")?.0;
        if buf.is_null() {
            return Err(Fail::Null("buf"));
        }
        if n != q.len() {
            return Err(Error::Shape {
                expected: q.len(),
                got: n,
            }
            .into());
        }
        let owned;
        let vals: &[Vec3] = if unweighted != 0 {
            owned = q.unweighted();
            &owned
        } else {
            q.values()
        };
        let out = std::slice::from_raw_parts_mut(buf, 6 * n);
        for (k, v) in vals.iter().enumerate() {
            for (i, z) in v.iter().enumerate() {
                out[6 * k + 2 * i] = z.re;
                out[6 * k + 2 * i + 1] = z.im;
            }
        }
        Ok(())
    })
}

/// `‖a - b‖ / ‖a‖` over the stored values.
///
/// # Safety
/// Handles must be live; `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn tn_relative_error(a: *const TnSequence, b: *const TnSequence, out: *mut f64) -> TnStatus {
    guard(|| {
        let (a, b) = (&as_ref(a, "a")?.0, &as_ref(b, "b")?.0);
        if a.len() != b.len() {
            return Err(Error::Shape {
                expected: a.len(),
                got: b.len(),
            }
            .into());
        }
        *as_mut(out, "out")? = relative_l2(a.values(), b.values());
        Ok(())
    })
}

/// Multilevel decomposition of a certified sequence on the finest rule.
///
/// # Safety
/// Handles must be live; `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn tn_decompose(s: *const TnScheme, v: *const TnSequence, out: *mut *mut TnDecomposition) -> TnStatus {
    guard(|| {
        let s = as_ref(s, "scheme")?;
        let v = as_ref(v, "sequence")?;
        let d = needlet_transform::decompose(&v.0, &s.scheme, &s.bank)?;
        put(out, TnDecomposition(d))
    })
}

/// Reconstruction onto the finest rule.
///
/// # Safety
/// Handles must be live; `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn tn_reconstruct(s: *const TnScheme, d: *const TnDecomposition, out: *mut *mut TnSequence) -> TnStatus {
    guard(|| {
        let s = as_ref(s, "scheme")?;
        let d = as_ref(d, "decomposition")?;
        let v = needlet_transform::reconstruct(&d.0, &s.scheme, &s.bank)?;
        put(out, TnSequence(v))
    })
}

/// Zeroes every detail sequence in place.
///
/// # Safety
/// `d` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tn_decomposition_drop_details(d: *mut TnDecomposition) -> TnStatus {
    guard(|| {
        let d = as_mut(d, "decomposition")?;
        d.0 = d.0.without_details();
        Ok(())
    })
}

/// Relative deviation of the stored energy from `reference`.
///
/// # Safety
/// `d` must be a live handle; `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn tn_decomposition_parseval(d: *const TnDecomposition, reference: f64, out: *mut f64) -> TnStatus {
    guard(|| {
        let d = as_ref(d, "decomposition")?;
        *as_mut(out, "out")? = needlet_transform::parseval_report(&d.0, reference).relative_deviation;
        Ok(())
    })
}

/// `Σ_k |v_k|²` of a sequence.
///
/// # Safety
/// `q` must be a live handle; `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn tn_sequence_norm_sqr(q: *const TnSequence, out: *mut f64) -> TnStatus {
    guard(|| {
        *as_mut(out, "out")? = as_ref(q, "sequence")?.0.norm_sqr();
        Ok(())
    })
}

/// # Safety
/// `d` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tn_decomposition_free(d: *mut TnDecomposition) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Writes a decomposition bundle directory.
///
/// # Safety
/// Handles must be live; `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tn_bundle_write(s: *const TnScheme, d: *const TnDecomposition, dir: *const c_char) -> TnStatus {
    guard(|| {
        let s = as_ref(s, "scheme")?;
        let d = as_ref(d, "decomposition")?;
        io_formats::write_bundle(&path_arg(dir, "dir")?, &d.0, &s.scheme)?;
        Ok(())
    })
}

/// Reads a bundle written for the same scheme. The bank named in the
/// manifest must be known and match the scheme's bank.
///
/// # Safety
/// `s` must be live; `dir` a NUL-terminated string; `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn tn_bundle_read(s: *const TnScheme, dir: *const c_char, out: *mut *mut TnDecomposition) -> TnStatus {
    guard(|| {
        let s = as_ref(s, "scheme")?;
        let (d, bank) = io_formats::read_bundle(&path_arg(dir, "dir")?, &s.scheme)?;
        if bank.id() != s.bank.id() {
            return Err(Error::Config(format!("bundle uses bank `{}`, scheme uses `{}`", bank.id(), s.bank.id())).into());
        }
        put(out, TnDecomposition(d))
    })
}
