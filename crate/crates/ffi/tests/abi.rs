//! Calls through the exported C functions.

use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use fsl::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(fsl_last_error()).to_str().unwrap().to_string() }
}

#[test]
fn phi_round_trip() {
    unsafe {
        let mut phi = ptr::null_mut();
        assert_eq!(fsl_phi_parse(c("loglog:1").as_ptr(), &mut phi), FslStatus::Ok);
        let mut gap = 0u64;
        assert_eq!(fsl_phi_gap_levels(phi, 10, 2.0, &mut gap), FslStatus::Ok);
        assert_eq!(gap, 3);
        let mut div = -1;
        assert_eq!(fsl_phi_is_divergent(phi, &mut div), FslStatus::Ok);
        assert_eq!(div, 1);
        let mut v = 0.0;
        assert_eq!(fsl_phi_eval_log(phi, 0.5, &mut v), FslStatus::InvalidArgument);
        assert!(last_error().contains("domain"));
        fsl_phi_free(phi);

        assert_eq!(fsl_phi_parse(c("wat:1").as_ptr(), &mut phi), FslStatus::Config);
        assert_eq!(fsl_phi_parse(ptr::null(), &mut phi), FslStatus::NullPointer);
    }
}

#[test]
fn binary_tree_estimate() {
    unsafe {
        let probs = [0.0, 0.0, 1.0];
        let mut dist = ptr::null_mut();
        assert_eq!(fsl_offspring_new(probs.as_ptr(), 3, 2.0, &mut dist), FslStatus::Ok);
        let mut m = 0.0;
        fsl_offspring_mean(dist, &mut m);
        assert_eq!(m, 2.0);
        let mut tree = ptr::null_mut();
        assert_eq!(fsl_gw_simulate(dist, 10, 1, 1, &mut tree), FslStatus::Ok);
        let mut z = 0u64;
        assert_eq!(fsl_gw_population(tree, 10, &mut z), FslStatus::Ok);
        assert_eq!(z, 1024);
        assert_eq!(fsl_gw_population(tree, 11, &mut z), FslStatus::InvalidArgument);
        let mut count = 0u64;
        assert_eq!(fsl_gw_covering_count(tree, 3, 5, 7, &mut count), FslStatus::Ok);
        assert_eq!(count, 16);
        let mut phi = ptr::null_mut();
        fsl_phi_parse(c("const:0.5").as_ptr(), &mut phi);
        let mut s = 0.0;
        assert_eq!(fsl_gw_estimate(tree, phi, 2, 6, FslGapMode::Exact, &mut s), FslStatus::Ok);
        assert_eq!(s, 1.0);
        assert_eq!(fsl_gw_estimate(tree, phi, 9, 10, FslGapMode::Exact, &mut s), FslStatus::Model);
        fsl_phi_free(phi);
        fsl_gw_free(tree);
        fsl_offspring_free(dist);

        let bad = [0.5, 0.6];
        assert_eq!(fsl_offspring_new(bad.as_ptr(), 2, 2.0, &mut dist), FslStatus::Model);
    }
}

#[test]
fn self_similar_family() {
    unsafe {
        let (n, r, p) = ([2u32, 2], [0.5, 0.25], [0.5, 0.5]);
        let mut fam = ptr::null_mut();
        assert_eq!(fsl_ifs_family_new(n.as_ptr(), r.as_ptr(), p.as_ptr(), 2, &mut fam), FslStatus::Ok);
        let (mut b, mut a) = (0.0, 0.0);
        fsl_ifs_dims(fam, &mut b, &mut a);
        assert!((b - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(a, 1.0);
        let mut coding = ptr::null_mut();
        assert_eq!(fsl_ifs_sample_coding(fam, 5000, 3, &mut coding), FslStatus::Ok);
        let mut phi = ptr::null_mut();
        fsl_phi_parse(c("const:0.1").as_ptr(), &mut phi);
        let mut s = 0.0;
        assert_eq!(fsl_coding_estimate(coding, phi, 1000, 3000, &mut s), FslStatus::Ok);
        assert!(s > 0.5 && s <= 1.0);
        let mut runs = 0usize;
        assert_eq!(fsl_coding_count_runs(coding, phi, 0.0, &mut runs), FslStatus::Ok);
        fsl_phi_free(phi);
        fsl_coding_free(coding);
        fsl_ifs_family_free(fam);
    }
}

#[test]
fn carpet_family() {
    unsafe {
        let json = c(r#"{"entries": [{"m": 2, "n": 4, "cells": [[0, 0], [0, 1], [0, 3], [1, 2]], "p": 1.0}]}"#);
        let mut fam = ptr::null_mut();
        assert_eq!(fsl_carpet_family_from_json(json.as_ptr(), &mut fam), FslStatus::Ok);
        let (mut b, mut q, mut a) = (0.0, 0.0, 0.0);
        fsl_carpet_dims(fam, &mut b, &mut q, &mut a);
        assert!((b - 1.5).abs() < 1e-12);
        assert!((q - (1.0 + 3f64.ln() / 4f64.ln())).abs() < 1e-12);
        let mut s = 0.0;
        fsl_carpet_spectrum(fam, 0.25, &mut s);
        assert!((s - 1.5975).abs() < 1e-4);
        let mut coding = ptr::null_mut();
        assert_eq!(fsl_carpet_sample_coding(fam, 4000, 1, &mut coding), FslStatus::Ok);
        let mut phi = ptr::null_mut();
        fsl_phi_parse(c("const:0.6").as_ptr(), &mut phi);
        assert_eq!(fsl_carpet_estimate(coding, phi, 400, 4000, 1, &mut s), FslStatus::Ok);
        assert!((s - q).abs() < 0.05);
        let mut events = 0usize;
        assert_eq!(fsl_carpet_count_events(coding, phi, &mut events), FslStatus::Ok);
        fsl_phi_free(phi);
        fsl_carpet_coding_free(coding);
        fsl_carpet_family_free(fam);
        assert_eq!(fsl_carpet_family_from_json(c("{").as_ptr(), &mut fam), FslStatus::Config);
    }
}

#[test]
fn rate_function() {
    unsafe {
        let (v, p) = ([-1.0, 1.0], [0.5, 0.5]);
        let mut rv = ptr::null_mut();
        assert_eq!(fsl_rv_new(v.as_ptr(), p.as_ptr(), 2, &mut rv), FslStatus::Ok);
        let mut x = 0.0;
        fsl_rv_mgf(rv, 1.0, &mut x);
        assert!((x - 1f64.cosh()).abs() < 1e-15);
        fsl_rv_rate(rv, 0.2, &mut x);
        assert!((x - 0.020135513550688873).abs() < 1e-12);
        fsl_rv_rate(rv, 2.0, &mut x);
        assert_eq!(x, f64::INFINITY);
        assert_eq!(fsl_rv_empirical_tail(rv, 0.2, 200, 2000, 5, &mut x), FslStatus::Ok);
        assert!((0.0..=0.0179).contains(&x));
        fsl_rv_free(rv);
    }
}

#[test]
fn seeds_match_core() {
    unsafe {
        let mut s = 0u64;
        assert_eq!(fsl_derive_seed(9, 4, c("gw").as_ptr(), &mut s), FslStatus::Ok);
        assert_eq!(s, fsl_core::derive_seed(9, 4, "gw"));
        assert!(CStr::from_ptr(fsl_version()).to_str().unwrap().starts_with("0."));
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include/fsl.h");
    assert!(header.is_file());
    let src = tempfile_path("fsl_header_check.c");
    std::fs::write(
        &src,
        "#include \"fsl.h\"\nint main(void) { FslPhi *p = 0; return fsl_phi_parse(\"zero\", &p) == FSL_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let status = match Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(dir.join("include"))
        .arg(&src)
        .status()
    {
        Ok(s) => s,
        Err(_) => {
            eprintln!("no C compiler available; header check skipped");
            return;
        }
    };
    assert!(status.success());
}

fn tempfile_path(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("{}-{name}", std::process::id()))
}
