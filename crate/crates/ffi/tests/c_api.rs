use std::ffi::{CStr, CString};
use std::ptr;

use mechpde_ffi::*;

const LAPLACE: &str = r#"
sizes = [8, 8]
derivatives = ["x", "xx", "y", "yy"]
coefficients = { xx = 1.0, yy = 1.0 }
boundary = { sine_edge = { dim = 0, low = false, k = 1.0 } }
"#;

fn last_error() -> String {
    let p = mpd_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn system(text: &str) -> *mut MpdSystem {
    let c = CString::new(text).unwrap();
    let mut sys = ptr::null_mut();
    let st = unsafe { mpd_system_from_toml(c.as_ptr(), &mut sys) };
    assert_eq!(st, MpdStatus::Ok, "{}", if st == MpdStatus::Ok { String::new() } else { last_error() });
    sys
}

#[test]
fn solve_and_backward_round_trip() {
    let sys = system(LAPLACE);
    let (mut nv, mut nc, mut np, mut nm, mut nb) = (0, 0, 0, 0, 0);
    unsafe {
        assert_eq!(mpd_system_dims(sys, &mut nv, &mut nc, &mut np, &mut nm, &mut nb), MpdStatus::Ok);
    }
    assert_eq!(np, 64);
    assert_eq!(nm, 5);
    assert_eq!(nv, nm * np);
    assert_eq!(nb, 28);
    assert!(nc > nv);

    let mut sol = ptr::null_mut();
    unsafe {
        assert_eq!(mpd_solve(sys, MpdPath::Direct, &mut sol), MpdStatus::Ok);
    }
    let mut res = f64::NAN;
    let mut it = usize::MAX;
    let mut u = vec![0.0; np];
    unsafe {
        assert_eq!(mpd_solution_stats(sol, &mut res, &mut it), MpdStatus::Ok);
        assert_eq!(mpd_solution_field(sol, 0, u.as_mut_ptr(), u.len()), MpdStatus::Ok);
    }
    assert!(res < 1e-8, "{res}");
    // x = 1 edge carries sin(pi y); least squares on 8x8 overshoots a little
    assert!(u.iter().all(|v| (-0.1..=1.1).contains(v)));
    assert!(u.iter().any(|v| *v > 0.5));

    let mut g = vec![0.0; nv];
    g[..np].fill(1.0);
    let mut gc = vec![0.0; nm * np];
    let mut gr = vec![0.0; np];
    let mut gb = vec![0.0; nb];
    unsafe {
        let st = mpd_backward(
            sys,
            sol,
            g.as_ptr(),
            g.len(),
            gc.as_mut_ptr(),
            gc.len(),
            gr.as_mut_ptr(),
            gr.len(),
            gb.as_mut_ptr(),
            gb.len(),
        );
        assert_eq!(st, MpdStatus::Ok);
    }
    // raising the boundary raises the interior, so d(sum u)/d(bnd) > 0
    assert!(gb.iter().sum::<f64>() > 0.0);
    assert!(gc.iter().all(|v| v.is_finite()));

    unsafe {
        let st = mpd_solution_field(sol, 0, u.as_mut_ptr(), u.len() - 1);
        assert_eq!(st, MpdStatus::Shape);
        assert_eq!(mpd_solution_field(sol, 99, u.as_mut_ptr(), u.len()), MpdStatus::InvalidArgument);
        mpd_solution_free(sol);
        mpd_system_free(sys);
    }
}

#[test]
fn errors_are_reported_not_panicked() {
    let mut sys = ptr::null_mut();
    unsafe {
        assert_eq!(mpd_system_from_toml(ptr::null(), &mut sys), MpdStatus::NullPointer);
    }
    assert!(last_error().contains("toml"));

    let bad = CString::new("sizes = [8, 8]\nderivatives = [\"x\"]\ncoefficients = { y = 1.0 }\n").unwrap();
    let st = unsafe { mpd_system_from_toml(bad.as_ptr(), &mut sys) };
    assert_ne!(st, MpdStatus::Ok);
    assert!(sys.is_null());
    assert!(!last_error().is_empty());

    let mut n = 0;
    unsafe {
        assert_eq!(mpd_system_dims(ptr::null(), &mut n, ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut()), MpdStatus::NullPointer);
        mpd_system_free(ptr::null_mut());
        mpd_solution_free(ptr::null_mut());
        mpd_dataset_free(ptr::null_mut());
    }

    // a successful call clears the message
    let sys = system(LAPLACE);
    assert!(mpd_last_error().is_null());
    unsafe { mpd_system_free(sys) };
}

#[test]
fn metrics_through_json() {
    let truth = CString::new(r#"{"a": 1.0, "b": 2.0}"#).unwrap();
    let est = CString::new(r#"{"a": 1.1, "b": 2.0, "c": 0.5}"#).unwrap();
    let (mut t, mut e) = (0.0, 0.0);
    unsafe {
        assert_eq!(mpd_tpr(truth.as_ptr(), est.as_ptr(), 0.02, &mut t), MpdStatus::Ok);
        assert_eq!(mpd_e_inf(truth.as_ptr(), est.as_ptr(), &mut e), MpdStatus::Ok);
    }
    // intersection {a, b}, union {a, b, c}
    assert!((t - 2.0 / 3.0).abs() < 1e-12);
    assert!((e - 0.1).abs() < 1e-12);

    let junk = CString::new("[1, 2]").unwrap();
    unsafe {
        assert_eq!(mpd_tpr(junk.as_ptr(), est.as_ptr(), 0.02, &mut t), MpdStatus::Parse);
    }
}

#[test]
fn noise_is_seeded() {
    let base: Vec<f64> = (0..256).map(|i| (i as f64 * 0.1).sin()).collect();
    let (mut a, mut b) = (base.clone(), base.clone());
    unsafe {
        assert_eq!(mpd_add_noise(a.as_mut_ptr(), a.len(), 0.1, 7), MpdStatus::Ok);
        assert_eq!(mpd_add_noise(b.as_mut_ptr(), b.len(), 0.1, 7), MpdStatus::Ok);
        assert_eq!(mpd_add_noise(b.as_mut_ptr(), b.len(), 1.5, 7), MpdStatus::InvalidArgument);
    }
    assert_eq!(a, b);
    assert_ne!(a, base);
}

#[test]
fn dataset_generate_save_load() {
    let cfg = CString::new("kind = \"diffusion\"\nnt = 8\nnx = 16\n").unwrap();
    let mut ds = ptr::null_mut();
    unsafe {
        assert_eq!(mpd_dataset_generate(cfg.as_ptr(), &mut ds), MpdStatus::Ok, "{}", last_error());
    }
    let mut n = 0;
    unsafe { assert_eq!(mpd_dataset_points(ds, &mut n), MpdStatus::Ok) };
    assert_eq!(n, 128);
    let mut u = vec![0.0; n];
    let name = CString::new("u").unwrap();
    unsafe { assert_eq!(mpd_dataset_field(ds, name.as_ptr(), u.as_mut_ptr(), n), MpdStatus::Ok) };

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("d.bin").to_str().unwrap()).unwrap();
    let mut back = ptr::null_mut();
    let mut v = vec![0.0; n];
    unsafe {
        assert_eq!(mpd_dataset_save(ds, path.as_ptr()), MpdStatus::Ok);
        assert_eq!(mpd_dataset_load(path.as_ptr(), &mut back), MpdStatus::Ok);
        assert_eq!(mpd_dataset_field(back, name.as_ptr(), v.as_mut_ptr(), n), MpdStatus::Ok);
    }
    assert_eq!(u, v);

    let missing = CString::new(dir.path().join("nope.bin").to_str().unwrap()).unwrap();
    let mut none = ptr::null_mut();
    unsafe {
        assert_eq!(mpd_dataset_load(missing.as_ptr(), &mut none), MpdStatus::Io);
        let bad = CString::new("kind = \"bogus\"\n").unwrap();
        assert_eq!(mpd_dataset_generate(bad.as_ptr(), &mut none), MpdStatus::Parse);
        mpd_dataset_free(ds);
        mpd_dataset_free(back);
    }
}

#[test]
fn header_declares_every_entry_point() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/mechpde.h")).unwrap();
    for f in [
        "mpd_last_error",
        "mpd_system_from_toml",
        "mpd_system_dims",
        "mpd_solve",
        "mpd_solution_field",
        "mpd_backward",
        "mpd_tpr",
        "mpd_e_inf",
        "mpd_add_noise",
        "mpd_dataset_generate",
        "mpd_dataset_load",
        "mpd_dataset_field",
    ] {
        assert!(h.contains(&format!("{f}(")), "{f} missing from header");
    }
    assert!(h.contains("typedef struct MpdSystem MpdSystem"));
}
