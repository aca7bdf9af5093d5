use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use fairshare_ffi::*;

fn last_error() -> String {
    let p = fs_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn disjoint(n: usize) -> *mut FsInstance {
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        values[i * n + i] = 1.0;
    }
    let mut inst = ptr::null_mut();
    assert_eq!(unsafe { fs_instance_new(n, n, values.as_ptr(), &mut inst) }, FsStatus::Ok);
    inst
}

#[test]
fn shares_and_theta_round_trip() {
    unsafe {
        let inst = disjoint(3);
        assert_eq!((fs_instance_agents(inst), fs_instance_items(inst)), (3, 3));
        let mut shares = ptr::null_mut();
        assert_eq!(fs_shares_compute(inst, FsShareKind::Ccs, ptr::null(), &mut shares), FsStatus::Ok);
        assert_eq!(fs_shares_len(shares), 3);
        let mut v = 0.0;
        assert_eq!(fs_shares_get(shares, 2, &mut v), FsStatus::Ok);
        assert_eq!(v, 1.0);

        let mut theta = 0.0;
        let mut unconstrained = true;
        let status = fs_optimal_theta(inst, shares, ptr::null(), &mut theta, &mut unconstrained);
        assert_eq!(status, FsStatus::Ok);
        assert_eq!((theta, unconstrained), (1.0, false));
        fs_shares_free(shares);

        let mut options = fs_options_default();
        options.delta_numer = 1;
        options.delta_denom = 1;
        assert_eq!(fs_shares_compute(inst, FsShareKind::EfsDelta, &options, &mut shares), FsStatus::Ok);
        let mut text = ptr::null_mut();
        assert_eq!(fs_shares_get_exact(shares, 0, &mut text), FsStatus::Ok);
        assert_eq!(CStr::from_ptr(text).to_str().unwrap(), "1/3");
        fs_string_free(text);
        fs_shares_free(shares);
        fs_instance_free(inst);
    }
}

#[test]
fn csv_and_errors() {
    unsafe {
        let mut inst = ptr::null_mut();
        let csv = CString::new("a,b\n1,2\n3,x\n").unwrap();
        assert_eq!(fs_instance_from_csv(csv.as_ptr(), &mut inst), FsStatus::Parse);
        assert!(last_error().contains("row 3, column 2"));
        assert!(inst.is_null());

        let csv = CString::new("a,b\n1,2\n3,4\n").unwrap();
        assert_eq!(fs_instance_from_csv(csv.as_ptr(), &mut inst), FsStatus::Ok);
        let mut shares = ptr::null_mut();
        assert_eq!(fs_shares_compute(inst, FsShareKind::Prop, ptr::null(), &mut shares), FsStatus::Ok);
        let mut v = 0.0;
        assert_eq!(fs_shares_get(shares, 5, &mut v), FsStatus::InvalidArgument);
        assert!(last_error().contains("out of range"));
        assert_eq!(fs_shares_get(shares, 0, ptr::null_mut()), FsStatus::NullPointer);

        let mut options = fs_options_default();
        options.delta_numer = 1;
        options.delta_denom = 2;
        let mut other = ptr::null_mut();
        assert_eq!(fs_shares_compute(inst, FsShareKind::EfsDelta, &options, &mut other), FsStatus::InvalidArgument);
        assert_eq!(fs_shares_compute(ptr::null(), FsShareKind::Prop, ptr::null(), &mut other), FsStatus::NullPointer);

        let mut missing = ptr::null_mut();
        let path = CString::new("/definitely/not/here.csv").unwrap();
        assert_eq!(fs_instance_load(path.as_ptr(), &mut missing), FsStatus::Io);

        let nan = [f64::NAN];
        assert_eq!(fs_instance_new(1, 1, nan.as_ptr(), &mut missing), FsStatus::InvalidArgument);
        fs_shares_free(shares);
        fs_instance_free(inst);
        fs_instance_free(ptr::null_mut());
    }
}

#[test]
fn plane_certificate() {
    let mut passed = false;
    assert_eq!(unsafe { fs_certify_plane(2, ptr::null(), &mut passed) }, FsStatus::Ok);
    assert!(passed);
    assert_eq!(unsafe { fs_certify_plane(4, ptr::null(), &mut passed) }, FsStatus::InvalidArgument);
}

fn target_dir() -> PathBuf {
    // <target>/<profile>/deps/ffi-<hash>
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_header() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(crate_dir.join("include/fairshare.h")).unwrap();
    for name in ["fs_instance_new", "fs_shares_compute", "fs_optimal_theta", "fs_last_error", "FS_STATUS_OK"] {
        assert!(header.contains(name), "{name} missing from header");
    }
    let lib = target_dir().join("libfairshare_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "fairshare.h"

int main(void) {
    double values[4] = {1.0, 0.0, 0.0, 1.0};
    FsInstance *inst = NULL;
    if (fs_instance_new(2, 2, values, &inst) != FS_STATUS_OK) return 1;
    FsShares *shares = NULL;
    FsOptions options = fs_options_default();
    if (fs_shares_compute(inst, FS_SHARE_KIND_PROP, &options, &shares) != FS_STATUS_OK) return 2;
    char *exact = NULL;
    if (fs_shares_get_exact(shares, 1, &exact) != FS_STATUS_OK) return 3;
    double theta = 0.0;
    bool unconstrained = false;
    if (fs_optimal_theta(inst, shares, NULL, &theta, &unconstrained) != FS_STATUS_OK) return 4;
    printf("%s %g\n", exact, theta);
    fs_string_free(exact);
    fs_shares_free(shares);
    fs_instance_free(inst);
    if (fs_instance_new(0, 2, values, &inst) == FS_STATUS_OK) return 5;
    printf("%s\n", fs_last_error());
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("main");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("a C compiler is required for this test");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("1/2 2"));
    assert!(lines.next().unwrap().contains("at least one agent"));
}
