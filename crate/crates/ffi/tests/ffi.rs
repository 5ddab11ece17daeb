use std::ffi::{c_char, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use femtopc_ffi::*;

const SMALL: &str = "femto_layout = \"single\"\nfemto_distance_m = 60.0\nwarmup_frames = 30\nwarmup_average_frames = 10\ndata_frames = 40\n";

fn last_error() -> String {
    let mut buf = vec![0u8; 256];
    let n = unsafe { fp_last_error_message(buf.as_mut_ptr().cast::<c_char>(), buf.len()) };
    buf.truncate(n.min(255));
    String::from_utf8(buf).unwrap()
}

fn config(text: &str) -> *mut FpConfig {
    let text = CString::new(text).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(
        unsafe { fp_config_from_toml(text.as_ptr(), &mut cfg) },
        FpStatus::Ok,
        "{}",
        last_error()
    );
    cfg
}

#[test]
fn run_drop_through_the_c_abi() {
    unsafe {
        let cfg = config(SMALL);
        assert_eq!(fp_config_set_scheme(cfg, FpScheme::OpenLoop), FpStatus::Ok);
        let mut res = ptr::null_mut();
        assert_eq!(
            fp_run_drop(cfg, 3, &mut res),
            FpStatus::Ok,
            "{}",
            last_error()
        );

        let mut macro_bps = -1.0;
        let mut femto_bps = -1.0;
        assert_eq!(
            fp_result_macro_throughput(res, &mut macro_bps),
            FpStatus::Ok
        );
        assert_eq!(
            fp_result_femto_throughput(res, &mut femto_bps),
            FpStatus::Ok
        );
        assert!(macro_bps > 0.0 && femto_bps > 0.0);

        let mut n = 0usize;
        assert_eq!(fp_result_user_count(res, &mut n), FpStatus::Ok);
        let mut femtos = 0;
        for i in 0..n {
            let mut class = FpUserClass::Macro;
            let mut bps = -1.0;
            assert_eq!(fp_result_user_class(res, i, &mut class), FpStatus::Ok);
            assert_eq!(fp_result_user_throughput(res, i, &mut bps), FpStatus::Ok);
            assert!(bps >= 0.0);
            femtos += usize::from(class == FpUserClass::Femto);
        }
        assert_eq!(femtos, 4);

        let mut bps = 0.0;
        assert_eq!(
            fp_result_user_throughput(res, n, &mut bps),
            FpStatus::OutOfRange
        );
        assert!(last_error().contains("out of range"));

        let (mut ol, mut pw) = (u64::MAX, u64::MAX);
        assert_eq!(fp_result_open_loop_violations(res, &mut ol), FpStatus::Ok);
        assert_eq!(fp_result_power_violations(res, &mut pw), FpStatus::Ok);
        assert_eq!((ol, pw), (0, 0));

        // Same seed, same drop.
        let mut again = ptr::null_mut();
        assert_eq!(fp_run_drop(cfg, 3, &mut again), FpStatus::Ok);
        let mut macro_again = 0.0;
        fp_result_macro_throughput(again, &mut macro_again);
        assert_eq!(macro_bps, macro_again);

        fp_result_free(again);
        fp_result_free(res);
        fp_config_free(cfg);
    }
}

#[test]
fn no_femto_result_reports_zero_femto_throughput() {
    unsafe {
        let cfg = config(SMALL);
        fp_config_set_scheme(cfg, FpScheme::NoFemto);
        let mut res = ptr::null_mut();
        assert_eq!(fp_run_drop(cfg, 1, &mut res), FpStatus::Ok);
        let mut v = 0.0;
        // The building is still measured; its users are just silent.
        assert_eq!(fp_result_femto_throughput(res, &mut v), FpStatus::Ok);
        assert_eq!(v, 0.0);
        fp_result_free(res);
        fp_config_free(cfg);
    }
}

#[test]
fn errors_are_reported_with_codes_and_messages() {
    unsafe {
        let mut cfg = ptr::null_mut();
        let bad = CString::new("alpha = -2.0\n").unwrap();
        assert_eq!(
            fp_config_from_toml(bad.as_ptr(), &mut cfg),
            FpStatus::InvalidConfig
        );
        assert!(cfg.is_null());
        assert!(last_error().contains("alpha"), "{}", last_error());

        let unknown = CString::new("bogus = 1\n").unwrap();
        assert_eq!(
            fp_config_from_toml(unknown.as_ptr(), &mut cfg),
            FpStatus::InvalidConfig
        );
        assert!(last_error().contains("bogus"), "{}", last_error());

        let not_utf8 = [0xffu8, 0xfe, 0];
        assert_eq!(
            fp_config_from_toml(not_utf8.as_ptr().cast(), &mut cfg),
            FpStatus::InvalidUtf8
        );

        assert_eq!(
            fp_config_from_toml(ptr::null(), &mut cfg),
            FpStatus::NullPointer
        );
        assert_eq!(fp_config_default(ptr::null_mut()), FpStatus::NullPointer);
        let mut v = 0.0;
        assert_eq!(
            fp_result_macro_throughput(ptr::null(), &mut v),
            FpStatus::NullPointer
        );
        assert_eq!(
            fp_run_drop(ptr::null(), 0, ptr::null_mut()),
            FpStatus::NullPointer
        );

        // Message is truncated to the buffer but its full length is returned.
        let mut tiny = [0 as c_char; 4];
        let n = fp_last_error_message(tiny.as_mut_ptr(), tiny.len());
        assert!(n > 3);
        assert_eq!(tiny[3], 0);
        assert_eq!(fp_last_error_message(ptr::null_mut(), 0), n);

        fp_config_free(ptr::null_mut());
        fp_result_free(ptr::null_mut());
    }
}

#[test]
fn numeric_helpers() {
    unsafe {
        assert!((fp_db_to_linear(20.0) - 100.0).abs() < 1e-12);
        let mut v = 0.0;
        assert_eq!(fp_linear_to_db(1000.0, &mut v), FpStatus::Ok);
        assert!((v - 30.0).abs() < 1e-12);
        assert_eq!(fp_linear_to_db(0.0, &mut v), FpStatus::Domain);
        assert_eq!(fp_drmt(1000.0, 950.0, &mut v), FpStatus::Ok);
        assert!((v - 0.05).abs() < 1e-12);
        assert_eq!(fp_drmt(0.0, 1.0, &mut v), FpStatus::Domain);
        assert_eq!(fp_arft(240.0, 200.0, &mut v), FpStatus::Ok);
        assert!((v - 1.2).abs() < 1e-12);
        assert_eq!(fp_arft(1.0, -1.0, &mut v), FpStatus::Domain);
    }
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/femtopc.h")
}

#[test]
fn header_declares_the_whole_api() {
    let h = std::fs::read_to_string(header()).unwrap();
    assert!(h.contains("#ifndef FEMTOPC_H"));
    for name in [
        "FP_STATUS_OK = 0",
        "FP_STATUS_PANIC = 7",
        "FP_SCHEME_CLOSED_LOOP = 3",
        "typedef struct FpConfig FpConfig",
        "typedef struct FpDropResult FpDropResult",
        "fp_last_error_message",
        "fp_config_default",
        "fp_config_from_toml",
        "fp_config_set_scheme",
        "fp_config_free",
        "fp_run_drop",
        "fp_result_free",
        "fp_result_macro_throughput",
        "fp_result_femto_throughput",
        "fp_result_user_count",
        "fp_result_user_throughput",
        "fp_result_user_class",
        "fp_result_open_loop_violations",
        "fp_result_power_violations",
        "fp_db_to_linear",
        "fp_linear_to_db",
        "fp_drmt",
        "fp_arft",
    ] {
        assert!(h.contains(name), "header lacks {name}");
    }
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "femtopc.h"

int main(void) {
    FpConfig *cfg = NULL;
    FpDropResult *res = NULL;
    const char *text = "femto_layout = \"single\"\nwarmup_frames = 30\nwarmup_average_frames = 10\ndata_frames = 20\n";
    if (fp_config_from_toml(text, &cfg) != FP_STATUS_OK) return 1;
    if (fp_config_set_scheme(cfg, FP_SCHEME_CLOSED_LOOP) != FP_STATUS_OK) return 2;
    if (fp_run_drop(cfg, 9, &res) != FP_STATUS_OK) return 3;
    double t = 0.0;
    if (fp_result_macro_throughput(res, &t) != FP_STATUS_OK || t <= 0.0) return 4;
    if (fp_config_from_toml("alpha = -1.0", &cfg) != FP_STATUS_INVALID_CONFIG) return 5;
    char msg[128];
    fp_last_error_message(msg, sizeof msg);
    printf("%.0f %s\n", t, msg);
    fp_result_free(res);
    fp_config_free(cfg);
    return 0;
}
"#;

/// Compiles and runs a C program against the static library and header.
#[test]
fn c_program_links_against_static_library() {
    let exe = std::env::current_exe().unwrap();
    // target/<profile>/deps/<test binary>
    let lib_dir = exe.parent().and_then(Path::parent).unwrap();
    let lib = lib_dir.join("libfemtopc_ffi.a");
    if !lib.is_file() {
        panic!("static library not found at {}", lib.display());
    }
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("main.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let bin = tmp.path().join("main");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&bin)
        .status()
        .expect("C compiler available");
    assert!(status.success(), "C build failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(
        out.status.success(),
        "C program exited with {:?}",
        out.status.code()
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("alpha"), "{stdout}");
}
