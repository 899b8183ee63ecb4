//! C ABI over `fsl-core`.
//!
//! Every object crosses the boundary as an opaque pointer created by a
//! `fsl_*_new`/`fsl_*_parse`/`fsl_*_sample` function and released by the
//! matching `fsl_*_free`. Fallible functions return an [`FslStatus`] and write
//! their result through an out-pointer; on failure a message is available from
//! [`fsl_last_error`] on the same thread. Panics never unwind into C.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fsl_core::carpet::{BandPolicy, CarpetCoding, CarpetFamily};
use fsl_core::gwtree::{GapMode, GwTree, OffspringDistribution, DEFAULT_NODE_CAP};
use fsl_core::ldp::BoundedDiscreteRV;
use fsl_core::onevar_ss::{CodingSequence, IfsFamily};
use fsl_core::{DimensionFunction, Error, Summability};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FslStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Model = 4,
    Io = 5,
    Panic = 6,
}

/// Gap mode selector for [`fsl_gw_estimate`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FslGapMode {
    Exact = 0,
    AtLeast = 1,
}

pub struct FslPhi(DimensionFunction);
pub struct FslOffspring(OffspringDistribution);
pub struct FslGwTree(GwTree);
pub struct FslIfsFamily(IfsFamily);
pub struct FslCoding(CodingSequence);
pub struct FslCarpetFamily(CarpetFamily);
pub struct FslCarpetCoding(CarpetCoding);
pub struct FslRv(BoundedDiscreteRV);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> FslStatus {
    match err.kind() {
        fsl_core::ErrorKind::Config => FslStatus::Config,
        fsl_core::ErrorKind::Io => FslStatus::Io,
        fsl_core::ErrorKind::Model => match err {
            Error::InvalidArgument(_) | Error::Domain { .. } => FslStatus::InvalidArgument,
            _ => FslStatus::Model,
        },
    }
}

/// Failure raised inside a call body.
enum Fail {
    Null,
    Arg(String),
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

/// Run `body`, translating errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Fail>) -> FslStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => FslStatus::Ok,
        Ok(Err(Fail::Null)) => {
            set_error("null pointer argument".into());
            FslStatus::NullPointer
        }
        Ok(Err(Fail::Arg(msg))) => {
            set_error(msg);
            FslStatus::InvalidArgument
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            FslStatus::Panic
        }
    }
}

unsafe fn obj<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null)
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null);
    }
    out.write(value);
    Ok(())
}

unsafe fn put_box<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    put(out, Box::into_raw(Box::new(value)))
}

unsafe fn text<'a>(s: *const c_char) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(Fail::Null);
    }
    CStr::from_ptr(s).to_str().map_err(|_| Fail::Arg("string is not UTF-8".into()))
}

unsafe fn slice<'a, T>(p: *const T, len: usize) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null);
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn release<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failure on this thread, or null. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn fsl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn fsl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Per-trial seed derivation shared with the command-line sweeps.
#[no_mangle]
pub unsafe extern "C" fn fsl_derive_seed(master: u64, index: u64, tag: *const c_char, out: *mut u64) -> FslStatus {
    guard(|| put(out, fsl_core::derive_seed(master, index, text(tag)?)))
}

// Dimension functions.

/// Parse `zero`, `const:c`, `power:theta` or `loglog:C`.
#[no_mangle]
pub unsafe extern "C" fn fsl_phi_parse(spec: *const c_char, out: *mut *mut FslPhi) -> FslStatus {
    guard(|| put_box(out, FslPhi(text(spec)?.parse()?)))
}

#[no_mangle]
pub unsafe extern "C" fn fsl_phi_free(phi: *mut FslPhi) {
    release(phi)
}

/// `φ(e^{−u})`.
#[no_mangle]
pub unsafe extern "C" fn fsl_phi_eval_log(phi: *const FslPhi, u: f64, out: *mut f64) -> FslStatus {
    guard(|| put(out, obj(phi)?.0.eval_log(u)?))
}

/// Number of levels between `b^{−k}` and `(b^{−k})^{1+φ}`.
#[no_mangle]
pub unsafe extern "C" fn fsl_phi_gap_levels(phi: *const FslPhi, k: u64, base: f64, out: *mut u64) -> FslStatus {
    guard(|| put(out, obj(phi)?.0.gap_levels(k, base)?))
}

/// Writes 1 if `Σ exp(−φ(e^{−k})k)` diverges, 0 if it converges.
#[no_mangle]
pub unsafe extern "C" fn fsl_phi_is_divergent(phi: *const FslPhi, out: *mut i32) -> FslStatus {
    guard(|| put(out, i32::from(obj(phi)?.0.classify_summability().summability == Summability::Divergent)))
}

// Galton–Watson trees.

#[no_mangle]
pub unsafe extern "C" fn fsl_offspring_new(
    probs: *const f64,
    len: usize,
    metric_base: f64,
    out: *mut *mut FslOffspring,
) -> FslStatus {
    guard(|| put_box(out, FslOffspring(OffspringDistribution::new(slice(probs, len)?.to_vec(), metric_base)?)))
}

#[no_mangle]
pub unsafe extern "C" fn fsl_offspring_free(dist: *mut FslOffspring) {
    release(dist)
}

#[no_mangle]
pub unsafe extern "C" fn fsl_offspring_mean(dist: *const FslOffspring, out: *mut f64) -> FslStatus {
    guard(|| put(out, obj(dist)?.0.mean_offspring()))
}

/// Simulate a tree; with `survive` nonzero, retry seeds `seed + i` until it
/// survives to `depth`.
#[no_mangle]
pub unsafe extern "C" fn fsl_gw_simulate(
    dist: *const FslOffspring,
    depth: usize,
    seed: u64,
    survive: i32,
    out: *mut *mut FslGwTree,
) -> FslStatus {
    guard(|| {
        let d = &obj(dist)?.0;
        let tree = if survive != 0 {
            GwTree::condition_on_survival(d, depth, seed, 1000, DEFAULT_NODE_CAP)?
        } else {
            GwTree::simulate(d, depth, seed, DEFAULT_NODE_CAP)?
        };
        put_box(out, FslGwTree(tree))
    })
}

#[no_mangle]
pub unsafe extern "C" fn fsl_gw_free(tree: *mut FslGwTree) {
    release(tree)
}

/// `Z_k`.
#[no_mangle]
pub unsafe extern "C" fn fsl_gw_population(tree: *const FslGwTree, k: usize, out: *mut u64) -> FslStatus {
    guard(|| {
        let t = &obj(tree)?.0;
        if k > t.depth() {
            return Err(Fail::Arg(format!("level {k} beyond depth {}", t.depth())));
        }
        put(out, t.population(k))
    })
}

/// Number of level-`l` descendants of node `v` at level `k`.
#[no_mangle]
pub unsafe extern "C" fn fsl_gw_covering_count(
    tree: *const FslGwTree,
    k: usize,
    v: usize,
    l: usize,
    out: *mut u64,
) -> FslStatus {
    guard(|| put(out, obj(tree)?.0.covering_count(k, v, l)?))
}

#[no_mangle]
pub unsafe extern "C" fn fsl_gw_estimate(
    tree: *const FslGwTree,
    phi: *const FslPhi,
    k_min: usize,
    k_max: usize,
    mode: FslGapMode,
    out: *mut f64,
) -> FslStatus {
    guard(|| {
        let mode = match mode {
            FslGapMode::Exact => GapMode::ExactGap,
            FslGapMode::AtLeast => GapMode::AtLeastGap,
        };
        put(out, obj(tree)?.0.phi_assouad_estimate(&obj(phi)?.0, k_min..=k_max, mode)?.s_hat)
    })
}

// Self-similar families.

/// Family from parallel arrays of branch counts, ratios and weights.
#[no_mangle]
pub unsafe extern "C" fn fsl_ifs_family_new(
    branch_counts: *const u32,
    ratios: *const f64,
    weights: *const f64,
    len: usize,
    out: *mut *mut FslIfsFamily,
) -> FslStatus {
    guard(|| {
        let (n, c, p) = (slice(branch_counts, len)?, slice(ratios, len)?, slice(weights, len)?);
        let triples: Vec<(u32, f64, f64)> = (0..len).map(|i| (n[i], c[i], p[i])).collect();
        put_box(out, FslIfsFamily(IfsFamily::from_triples(&triples, false)?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn fsl_ifs_family_free(family: *mut FslIfsFamily) {
    release(family)
}

#[no_mangle]
pub unsafe extern "C" fn fsl_ifs_dims(family: *const FslIfsFamily, box_dim: *mut f64, assouad_dim: *mut f64) -> FslStatus {
    guard(|| {
        let f = &obj(family)?.0;
        put(box_dim, f.box_dim())?;
        put(assouad_dim, f.assouad_dim())
    })
}

#[no_mangle]
pub unsafe extern "C" fn fsl_ifs_sample_coding(
    family: *const FslIfsFamily,
    length: usize,
    seed: u64,
    out: *mut *mut FslCoding,
) -> FslStatus {
    guard(|| put_box(out, FslCoding(obj(family)?.0.sample_coding(length, seed)?)))
}

#[no_mangle]
pub unsafe extern "C" fn fsl_coding_free(coding: *mut FslCoding) {
    release(coding)
}

#[no_mangle]
pub unsafe extern "C" fn fsl_coding_estimate(
    coding: *const FslCoding,
    phi: *const FslPhi,
    k_min: usize,
    k_max: usize,
    out: *mut f64,
) -> FslStatus {
    guard(|| put(out, obj(coding)?.0.phi_assouad_estimate(&obj(phi)?.0, k_min..=k_max)?.s_hat))
}

#[no_mangle]
pub unsafe extern "C" fn fsl_coding_count_runs(
    coding: *const FslCoding,
    phi: *const FslPhi,
    eps: f64,
    out: *mut usize,
) -> FslStatus {
    guard(|| put(out, obj(coding)?.0.detect_runs(&obj(phi)?.0, eps).len()))
}

// Carpets.

/// Family from JSON: `{"entries": [{"m": 2, "n": 4, "cells": [[0, 0]], "p": 1}]}`.
#[no_mangle]
pub unsafe extern "C" fn fsl_carpet_family_from_json(json: *const c_char, out: *mut *mut FslCarpetFamily) -> FslStatus {
    guard(|| put_box(out, FslCarpetFamily(CarpetFamily::from_json(text(json)?)?)))
}

#[no_mangle]
pub unsafe extern "C" fn fsl_carpet_family_free(family: *mut FslCarpetFamily) {
    release(family)
}

#[no_mangle]
pub unsafe extern "C" fn fsl_carpet_dims(
    family: *const FslCarpetFamily,
    box_dim: *mut f64,
    quasi_assouad: *mut f64,
    assouad_dim: *mut f64,
) -> FslStatus {
    guard(|| {
        let f = &obj(family)?.0;
        put(box_dim, f.box_dim())?;
        put(quasi_assouad, f.quasi_assouad())?;
        put(assouad_dim, f.assouad_dim())
    })
}

#[no_mangle]
pub unsafe extern "C" fn fsl_carpet_spectrum(family: *const FslCarpetFamily, theta: f64, out: *mut f64) -> FslStatus {
    guard(|| put(out, obj(family)?.0.assouad_spectrum(theta)?))
}

#[no_mangle]
pub unsafe extern "C" fn fsl_carpet_sample_coding(
    family: *const FslCarpetFamily,
    length: usize,
    seed: u64,
    out: *mut *mut FslCarpetCoding,
) -> FslStatus {
    guard(|| put_box(out, FslCarpetCoding(obj(family)?.0.sample_coding(length, seed)?)))
}

#[no_mangle]
pub unsafe extern "C" fn fsl_carpet_coding_free(coding: *mut FslCarpetCoding) {
    release(coding)
}

/// With `enforce_band` nonzero, scales where `φ` leaves the affinity band are rejected.
#[no_mangle]
pub unsafe extern "C" fn fsl_carpet_estimate(
    coding: *const FslCarpetCoding,
    phi: *const FslPhi,
    k_min: usize,
    k_max: usize,
    enforce_band: i32,
    out: *mut f64,
) -> FslStatus {
    guard(|| {
        let policy = if enforce_band != 0 { BandPolicy::Enforce } else { BandPolicy::Ignore };
        put(out, obj(coding)?.0.phi_assouad_estimate(&obj(phi)?.0, k_min..=k_max, policy)?.s_hat)
    })
}

#[no_mangle]
pub unsafe extern "C" fn fsl_carpet_count_events(coding: *const FslCarpetCoding, phi: *const FslPhi, out: *mut usize) -> FslStatus {
    guard(|| put(out, obj(coding)?.0.detect_two_block_runs(&obj(phi)?.0).len()))
}

// Rate functions.

#[no_mangle]
pub unsafe extern "C" fn fsl_rv_new(values: *const f64, probs: *const f64, len: usize, out: *mut *mut FslRv) -> FslStatus {
    guard(|| {
        let (v, p) = (slice(values, len)?, slice(probs, len)?);
        put_box(out, FslRv(BoundedDiscreteRV::new(v.iter().copied().zip(p.iter().copied()).collect())?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn fsl_rv_free(rv: *mut FslRv) {
    release(rv)
}

#[no_mangle]
pub unsafe extern "C" fn fsl_rv_mgf(rv: *const FslRv, theta: f64, out: *mut f64) -> FslStatus {
    guard(|| put(out, obj(rv)?.0.mgf(theta)))
}

/// `I(a)`; may be `+inf`.
#[no_mangle]
pub unsafe extern "C" fn fsl_rv_rate(rv: *const FslRv, a: f64, out: *mut f64) -> FslStatus {
    guard(|| put(out, obj(rv)?.0.rate(a)))
}

/// Fraction of `trials` samples with `S_n ≥ a·n`.
#[no_mangle]
pub unsafe extern "C" fn fsl_rv_empirical_tail(
    rv: *const FslRv,
    a: f64,
    n: u64,
    trials: u64,
    seed: u64,
    out: *mut f64,
) -> FslStatus {
    guard(|| put(out, obj(rv)?.0.empirical_tail(a, n, trials, seed)?.p_hat))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_out_pointer_is_reported() {
        let spec = CString::new("const:0.5").unwrap();
        let status = unsafe { fsl_phi_parse(spec.as_ptr(), ptr::null_mut()) };
        assert_eq!(status, FslStatus::NullPointer);
        let msg = unsafe { CStr::from_ptr(fsl_last_error()) };
        assert_eq!(msg.to_str().unwrap(), "null pointer argument");
    }

    #[test]
    fn free_accepts_null() {
        unsafe {
            fsl_phi_free(ptr::null_mut());
            fsl_gw_free(ptr::null_mut());
            fsl_rv_free(ptr::null_mut());
        }
    }
}
