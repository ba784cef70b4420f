use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use kellygrowth::nalgebra::{DMatrix, DVector};
use kellygrowth::{full_kelly, GbmParams, MarketConfig};
use kellygrowth_ffi::*;

const MU: [f64; 2] = [0.079, 0.031];
const COV: [f64; 4] = [0.0396, -0.0093, -0.0093, 0.0152];

struct Handle(*mut KgParams);

impl Drop for Handle {
    fn drop(&mut self) {
        unsafe { kg_params_free(self.0) }
    }
}

fn reference_params() -> Handle {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { kg_params_from_covariance(2, MU.as_ptr(), COV.as_ptr(), &mut p) }, KgStatus::Ok);
    Handle(p)
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(kg_last_error_message()) }.to_string_lossy().into_owned()
}

#[test]
fn full_kelly_matches_the_library_bit_for_bit() {
    let h = reference_params();
    assert_eq!(unsafe { kg_params_dim(h.0) }, 2);
    let mut k = [0.0; 2];
    assert_eq!(unsafe { kg_full_kelly(h.0, 0.0, k.as_mut_ptr()) }, KgStatus::Ok);
    let direct = full_kelly(
        &GbmParams::from_covariance(DVector::from_column_slice(&MU), &DMatrix::from_row_slice(2, 2, &COV)).unwrap(),
        &MarketConfig::default(),
    );
    assert_eq!(k[0].to_bits(), direct.as_slice()[0].to_bits());
    assert_eq!(k[1].to_bits(), direct.as_slice()[1].to_bits());
}

#[test]
fn kelly_variants_and_growth() {
    let h = reference_params();
    let mut s = 0.0;
    assert_eq!(unsafe { kg_sharpe_ratio(h.0, 0.0, &mut s) }, KgStatus::Ok);
    assert!((s - 0.588).abs() < 0.005);

    let mut k = [0.0; 2];
    assert_eq!(unsafe { kg_fractional_kelly(h.0, 0.0, 0.3, k.as_mut_ptr()) }, KgStatus::Ok);
    assert!((k[0] - 0.87).abs() < 0.03 && (k[1] - 1.13).abs() < 0.03);

    let mut alpha = 0.0;
    assert_eq!(unsafe { kg_kelly_fraction_estimate(h.0, 0.0, k.as_ptr(), &mut alpha) }, KgStatus::Ok);
    assert!((alpha - 0.3).abs() < 1e-12);
    let off = [1.0, 0.0];
    assert_eq!(unsafe { kg_kelly_fraction_estimate(h.0, 0.0, off.as_ptr(), &mut alpha) }, KgStatus::Ok);
    assert!(alpha.is_nan());

    let mut lambda = f64::NAN;
    assert_eq!(unsafe { kg_constrained_kelly(h.0, 0.0, 2.0, k.as_mut_ptr(), &mut lambda) }, KgStatus::Ok);
    assert!((k[0] + k[1] - 2.0).abs() < 1e-12);
    assert!((k[0] - 1.33).abs() < 0.02 && lambda.is_finite());
    assert_eq!(unsafe { kg_constrained_kelly(h.0, 0.0, 2.0, k.as_mut_ptr(), ptr::null_mut()) }, KgStatus::Ok);

    let (mut l, mut v) = (0.0, 0.0);
    let k = [0.87, 1.13];
    assert_eq!(unsafe { kg_expected_log_growth(h.0, 0.0, k.as_ptr(), &mut l) }, KgStatus::Ok);
    assert_eq!(unsafe { kg_log_return_variance(h.0, k.as_ptr(), &mut v) }, KgStatus::Ok);
    assert!((v.sqrt() - 0.176).abs() < 0.004);
    assert!(l > 0.08 && l < 0.095);
}

#[test]
fn profiles_inversion_and_drawdown() {
    let mut g = KgGrowthProfile {
        expected_log_growth: 0.0,
        log_return_variance: 0.0,
        sharpe: 0.0,
        kelly_fraction: 0.0,
        over_kelly: true,
    };
    assert_eq!(unsafe { kg_fractional_profile(1.0, 0.5, 0.0, &mut g) }, KgStatus::Ok);
    assert_eq!((g.expected_log_growth, g.log_return_variance, g.over_kelly), (0.375, 0.25, false));

    let (mut a, mut s, mut c) = (0.0, 0.0, KgRiskClass::CollapseBound);
    assert_eq!(unsafe { kg_reverse_engineer(0.490, 0.187 * 0.187, 0.0, &mut a, &mut s, &mut c) }, KgStatus::Ok);
    assert!((0.066..=0.072).contains(&a) && (2.66..=2.77).contains(&s));
    assert_eq!(c, KgRiskClass::Fractional);
    assert_eq!(
        unsafe { kg_reverse_engineer(0.1, 0.0, 0.0, &mut a, &mut s, ptr::null_mut()) },
        KgStatus::NotInvertible
    );

    let path = [100.0, 80.0, 120.0, 60.0];
    let (mut f, mut pk, mut tr) = (0.0, 9, 9);
    assert_eq!(unsafe { kg_max_drawdown(path.as_ptr(), 4, &mut f, &mut pk, &mut tr) }, KgStatus::Ok);
    assert_eq!((f, pk, tr), (0.5, 2, 3));
    assert_eq!(
        unsafe { kg_max_drawdown(path.as_ptr(), 0, &mut f, &mut pk, &mut tr) },
        KgStatus::InsufficientData
    );
}

#[test]
fn errors_set_status_and_message() {
    let mut p = ptr::null_mut();
    let bad = [1.0, 2.0, 2.0, 1.0];
    let st = unsafe { kg_params_from_covariance(2, MU.as_ptr(), bad.as_ptr(), &mut p) };
    assert_ne!(st, KgStatus::Ok);
    assert!(p.is_null());
    assert!(!last_error().is_empty());

    let sigma = [0.2, 0.1];
    let corr = [1.0, 0.5, 0.5, 1.0];
    assert_eq!(
        unsafe { kg_params_new(2, MU.as_ptr(), sigma.as_ptr(), corr.as_ptr(), ptr::null_mut()) },
        KgStatus::NullPointer
    );
    assert_eq!(
        unsafe { kg_params_new(2, ptr::null(), sigma.as_ptr(), corr.as_ptr(), &mut p) },
        KgStatus::NullPointer
    );
    let singular = [1.0, 1.0, 1.0, 1.0];
    assert_eq!(
        unsafe { kg_params_new(2, MU.as_ptr(), sigma.as_ptr(), singular.as_ptr(), &mut p) },
        KgStatus::NotPositiveDefinite
    );
    assert!(last_error().contains("pivot 1"), "{}", last_error());
    assert_eq!(unsafe { kg_params_dim(ptr::null()) }, 0);
    unsafe { kg_params_free(ptr::null_mut()) };

    let h = reference_params();
    let mut k = [0.0; 2];
    assert_eq!(unsafe { kg_fractional_kelly(h.0, 0.0, -1.0, k.as_mut_ptr()) }, KgStatus::InvalidArgument);
    assert_eq!(unsafe { kg_full_kelly(h.0, f64::NAN, k.as_mut_ptr()) }, KgStatus::InvalidArgument);
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include")
}

#[test]
fn header_declares_every_export() {
    let h = std::fs::read_to_string(header().join("kellygrowth.h")).unwrap();
    for f in [
        "kg_last_error_message",
        "kg_params_new",
        "kg_params_from_covariance",
        "kg_params_free",
        "kg_params_dim",
        "kg_sharpe_ratio",
        "kg_full_kelly",
        "kg_fractional_kelly",
        "kg_constrained_kelly",
        "kg_expected_log_growth",
        "kg_log_return_variance",
        "kg_kelly_fraction_estimate",
        "kg_fractional_profile",
        "kg_reverse_engineer",
        "kg_max_drawdown",
        "typedef struct KgParams KgParams;",
    ] {
        assert!(h.contains(f), "missing {f}");
    }
}

/// Compiles the C smoke program against the header and the static library
/// when a C compiler is available.
#[test]
fn c_program_links_and_runs() {
    let Ok(exe) = std::env::current_exe() else { return };
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let lib = profile_dir.join("libkellygrowth_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or static library");
        return;
    }
    let dir = tempfile_dir();
    let bin = dir.join("smoke");
    let status = Command::new("cc")
        .arg(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/smoke.c"))
        .arg("-I")
        .arg(header())
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{out:?}");
    let fields: Vec<f64> = String::from_utf8(out.stdout)
        .unwrap()
        .split_whitespace()
        .map(|s| s.parse().unwrap())
        .collect();
    assert!((fields[0] - 2.89).abs() < 0.05 && (fields[1] - 3.78).abs() < 0.05);
    assert!((fields[2] - 0.588).abs() < 0.005);
}

fn tempfile_dir() -> PathBuf {
    let d = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("ffi-smoke");
    std::fs::create_dir_all(&d).unwrap();
    d
}
