use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use poro_pinn::autodiff::Activation;
use poro_pinn::network::{
    forward, forward_jet, init_params, AffineMap, MlpSpec, NormalizationMaps,
};
use poro_pinn::oracle::{solution_at, SeriesTruncation};
use poro_pinn::residual::NondimParams;
use poro_pinn::trainer::{save_checkpoint, AdamState, Checkpoint};
use poro_pinn_ffi::*;

fn checkpoint(dir: &Path) -> (PathBuf, Checkpoint) {
    let params = init_params(MlpSpec::new(2, 6, Activation::Tanh).unwrap(), 21);
    let ck = Checkpoint {
        adam: AdamState::new(params.len()),
        maps: NormalizationMaps {
            inputs: [
                AffineMap::unit_interval(0.0, 1.0).unwrap(),
                AffineMap::unit_interval(0.0, 1.0).unwrap(),
                AffineMap::unit_interval(0.0, 2.0 * std::f64::consts::PI).unwrap(),
            ],
            outputs: [
                AffineMap::new(0.03, 0.0).unwrap(),
                AffineMap::new(0.04, 0.0).unwrap(),
                AffineMap::new(0.2, 0.0).unwrap(),
            ],
        },
        params,
    };
    let path = dir.join("model.ckpt");
    save_checkpoint(&path, &ck).unwrap();
    (path, ck)
}

fn last_error() -> String {
    let p = pp_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn load_forward_and_free() {
    let dir = tempfile::tempdir().unwrap();
    let (path, ck) = checkpoint(dir.path());
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    let mut model = ptr::null_mut();
    assert_eq!(
        unsafe { pp_model_load(cpath.as_ptr(), &mut model) },
        PpStatus::Ok
    );
    assert!(pp_last_error_message().is_null());
    assert_eq!(unsafe { pp_model_param_count(model) }, ck.params.len());

    let point = [0.3, 0.6, 1.7];
    let mut out = [0.0; 3];
    let s = unsafe { pp_model_forward(model, point[0], point[1], point[2], out.as_mut_ptr()) };
    assert_eq!(s, PpStatus::Ok);
    assert_eq!(out, forward(&ck.params, &ck.maps, point).unwrap());

    let mut jet = [0.0; 30];
    let s = unsafe { pp_model_forward_jet(model, point[0], point[1], point[2], jet.as_mut_ptr()) };
    assert_eq!(s, PpStatus::Ok);
    let want = forward_jet(&ck.params, &ck.maps, point).unwrap();
    for (f, j) in want.fields().into_iter().enumerate() {
        assert_eq!(&jet[10 * f..10 * f + 10], &j.components());
    }
    unsafe { pp_model_free(model) };
    unsafe { pp_model_free(ptr::null_mut()) };
}

#[test]
fn errors_map_to_status_codes() {
    let mut model = ptr::null_mut();
    assert_eq!(
        unsafe { pp_model_load(ptr::null(), &mut model) },
        PpStatus::NullPointer
    );
    assert!(last_error().contains("path"));

    let missing = CString::new("/nonexistent/model.ckpt").unwrap();
    assert_eq!(
        unsafe { pp_model_load(missing.as_ptr(), &mut model) },
        PpStatus::Io
    );
    assert!(model.is_null());

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.ckpt");
    std::fs::write(&bad, "mlp 2 6 tanh\n1 2 3\n").unwrap();
    let cbad = CString::new(bad.to_str().unwrap()).unwrap();
    assert_eq!(
        unsafe { pp_model_load(cbad.as_ptr(), &mut model) },
        PpStatus::Parse
    );
    assert!(last_error().contains(":2:"), "{}", last_error());

    let mut out = [0.0; 3];
    let s = unsafe { pp_model_forward(ptr::null(), 0.0, 0.0, 0.0, out.as_mut_ptr()) };
    assert_eq!(s, PpStatus::NullPointer);
    assert_eq!(unsafe { pp_model_param_count(ptr::null()) }, 0);
}

#[test]
fn analytical_solution_matches_core() {
    let mut prob = PpProblem {
        eta: 0.0,
        beta: 0.0,
        omega: 0.0,
        x0: 0.0,
        z0: 0.0,
        a: 0.0,
        b: 0.0,
        mass_balance: 7,
    };
    assert_eq!(unsafe { pp_problem_default(&mut prob) }, PpStatus::Ok);
    assert_eq!(prob, PpProblem::from(NondimParams::default()));

    let mut out = [0.0; 3];
    let s = unsafe { pp_analytical_solution(&prob, 30, 30, 0.4, 0.7, 2.0, out.as_mut_ptr()) };
    assert_eq!(s, PpStatus::Ok);
    let want = solution_at(
        0.4,
        0.7,
        2.0,
        &NondimParams::default(),
        SeriesTruncation::square(30),
    );
    assert_eq!(out, want);

    let mut null_out = [0.0; 3];
    let s = unsafe {
        pp_analytical_solution(ptr::null(), 30, 30, 0.4, 0.7, 2.0, null_out.as_mut_ptr())
    };
    assert_eq!(s, PpStatus::Ok);
    assert_eq!(null_out, want);

    prob.mass_balance = 2;
    let s = unsafe { pp_analytical_solution(&prob, 30, 30, 0.4, 0.7, 2.0, out.as_mut_ptr()) };
    assert_eq!(s, PpStatus::InvalidArgument);
    prob.mass_balance = 0;
    prob.x0 = 3.0;
    let s = unsafe { pp_analytical_solution(&prob, 30, 30, 0.4, 0.7, 2.0, out.as_mut_ptr()) };
    assert_eq!(s, PpStatus::InvalidArgument);
    let s = unsafe { pp_analytical_solution(ptr::null(), 0, 30, 0.4, 0.7, 2.0, out.as_mut_ptr()) };
    assert_eq!(s, PpStatus::InvalidArgument);
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(pp_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_api() {
    let header =
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/poro_pinn.h"))
            .unwrap();
    for name in [
        "pp_model_load",
        "pp_model_free",
        "pp_model_forward",
        "pp_model_forward_jet",
        "pp_model_param_count",
        "pp_analytical_solution",
        "pp_problem_default",
        "pp_last_error_message",
        "typedef struct PpModel PpModel;",
        "PP_STATUS_OK = 0",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

/// Directory holding the library artifacts of this build.
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

const C_MAIN: &str = r#"
#include <stdio.h>
#include "poro_pinn.h"

int main(int argc, char **argv) {
    PpModel *m = NULL;
    if (argc < 2 || pp_model_load(argv[1], &m) != PP_STATUS_OK) {
        fprintf(stderr, "load failed: %s\n", pp_last_error_message());
        return 1;
    }
    double out[3];
    if (pp_model_forward(m, 0.3, 0.6, 1.7, out) != PP_STATUS_OK) return 2;
    printf("%.17g %.17g %.17g\n", out[0], out[1], out[2]);
    double sol[3];
    if (pp_analytical_solution(NULL, 30, 30, 0.4, 0.7, 2.0, sol) != PP_STATUS_OK) return 3;
    printf("%.17g %.17g %.17g\n", sol[0], sol[1], sol[2]);
    pp_model_free(m);
    return pp_model_load("/nonexistent", &m) == PP_STATUS_IO ? 0 : 4;
}
"#;

#[test]
fn c_program_links_against_static_library() {
    let lib = artifact_dir().join("libporo_pinn_ffi.a");
    assert!(
        lib.exists(),
        "static library not found at {}",
        lib.display()
    );
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, C_MAIN).unwrap();
    let exe = dir.path().join("capi_smoke");
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler not available");
    assert!(status.success(), "C compilation failed");

    let (path, ck) = checkpoint(dir.path());
    let output = Command::new(&exe).arg(&path).output().unwrap();
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    let text = String::from_utf8(output.stdout).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .map(|l| l.split_whitespace().map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(
        rows[0],
        forward(&ck.params, &ck.maps, [0.3, 0.6, 1.7])
            .unwrap()
            .to_vec()
    );
    let want = solution_at(
        0.4,
        0.7,
        2.0,
        &NondimParams::default(),
        SeriesTruncation::square(30),
    );
    assert_eq!(rows[1], want.to_vec());
}
