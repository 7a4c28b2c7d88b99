use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use mcs_ffi::*;

const SCENARIO: &str = r#"
master_seed = 3
[signal]
mode = "classical"
nu_s_hz = 1.0e6
b_amp_gauss = 0.035
[protocol]
kind = "mcs"
m = 200
n_runs = 20
t_us = 15.063
t_init_us = 101.57
t1_nuc_s = 0.7
t1_nuc_laser_us = 210
[readout]
eta0 = 3.0
eta1 = 2.0
"#;

fn last_error() -> String {
    let p = mcs_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn scenario(text: &str) -> *mut McsScenario {
    let c = CString::new(text).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { mcs_scenario_from_toml(c.as_ptr(), &mut s) }, McsStatus::Ok);
    assert!(!s.is_null());
    s
}

#[test]
fn run_through_handles() {
    let s = scenario(SCENARIO);
    unsafe {
        assert_eq!(mcs_scenario_set_workers(s, 1), McsStatus::Ok);
        let mut r = ptr::null_mut();
        assert_eq!(mcs_run(s, &mut r), McsStatus::Ok);
        let n = mcs_result_trace_len(r);
        assert_eq!(n, 200);

        let mut small = vec![0.0; n - 1];
        assert_eq!(mcs_result_trace_counts(r, small.as_mut_ptr(), small.len()), McsStatus::BufferTooSmall);
        let mut buf = vec![0.0; n];
        assert_eq!(mcs_result_trace_counts(r, buf.as_mut_ptr(), n), McsStatus::Ok);
        assert!(buf.iter().all(|c| *c >= 0.0) && buf.iter().any(|c| *c > 0.0));

        let mut sum = std::mem::zeroed::<McsSummary>();
        assert_eq!(mcs_result_summary(r, &mut sum), McsStatus::Ok);
        assert!(sum.resonant);
        assert!(sum.f_u_oracle_hz > 0.0);
        assert!(sum.wall_time_total_s > 0.0);

        let mut js = ptr::null_mut();
        assert_eq!(mcs_result_summary_json(r, &mut js), McsStatus::Ok);
        let text = CStr::from_ptr(js).to_str().unwrap().to_owned();
        mcs_string_free(js);
        assert!(text.contains("\"schema_version\":1"));

        let dir = tempfile::tempdir().unwrap();
        let d = CString::new(dir.path().to_str().unwrap()).unwrap();
        assert_eq!(mcs_result_write_bundle(r, d.as_ptr()), McsStatus::Ok);
        assert!(dir.path().join("summary.json").exists());
        assert!(dir.path().join("trace.csv").exists());

        // Same seed through a second handle reproduces the trace.
        let s2 = scenario(SCENARIO);
        mcs_scenario_set_workers(s2, 2);
        let mut r2 = ptr::null_mut();
        assert_eq!(mcs_run(s2, &mut r2), McsStatus::Ok);
        let mut buf2 = vec![0.0; n];
        mcs_result_trace_counts(r2, buf2.as_mut_ptr(), n);
        assert_eq!(buf, buf2);

        mcs_result_free(r2);
        mcs_scenario_free(s2);
        mcs_result_free(r);
        mcs_scenario_free(s);
    }
}

#[test]
fn null_and_invalid_arguments() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(mcs_scenario_from_toml(ptr::null(), &mut s), McsStatus::NullPointer);
        assert!(last_error().contains("toml"));
        assert_eq!(mcs_run(ptr::null(), ptr::null_mut()), McsStatus::NullPointer);
        assert_eq!(mcs_result_trace_len(ptr::null()), 0);
        assert_eq!(mcs_scenario_set_seed(ptr::null_mut(), 1), McsStatus::NullPointer);
        mcs_scenario_free(ptr::null_mut());
        mcs_result_free(ptr::null_mut());
        mcs_string_free(ptr::null_mut());

        let bad = CString::new(SCENARIO.replace("n_runs = 20", "n_runs = 0")).unwrap();
        assert_eq!(mcs_scenario_from_toml(bad.as_ptr(), &mut s), McsStatus::Config);
        assert!(s.is_null());
        assert!(last_error().contains("protocol.N"));

        let bad = CString::new("schema_version = 7\n".to_owned() + SCENARIO).unwrap();
        assert_eq!(mcs_scenario_from_toml(bad.as_ptr(), &mut s), McsStatus::SchemaMismatch);

        let p = CString::new("/nonexistent/scenario.toml").unwrap();
        assert_eq!(mcs_scenario_load(p.as_ptr(), &mut s), McsStatus::Config);

        let s = scenario(SCENARIO);
        assert_eq!(mcs_scenario_set_runs(s, 0), McsStatus::Config);
        assert_eq!(mcs_scenario_set_runs(s, 5), McsStatus::Ok);
        mcs_scenario_free(s);
    }
}

#[test]
fn closed_forms() {
    unsafe {
        let mut f = 0.0;
        assert_eq!(mcs_undersampled_frequency(1.0e6, 15.063e-6, &mut f), McsStatus::Ok);
        assert!((f - 4182.4).abs() < 1.0, "{f}");
        assert_eq!(mcs_undersampled_frequency(1.0e6, -1.0, &mut f), McsStatus::InvalidParameter);

        let (mut ft, mut ratio) = (0.0, 0.0);
        assert_eq!(mcs_f_t(1991, 15.063e-6, 101.57e-6, &mut ft, &mut ratio), McsStatus::Ok);
        assert!((31.5..31.7).contains(&ft), "{ft}");
        assert!(ratio > 1.0);
        assert_eq!(mcs_f_t(1991, 15.063e-6, 101.57e-6, ptr::null_mut(), &mut ratio), McsStatus::NullPointer);

        let mut tau = 0.0;
        assert_eq!(mcs_effective_memory_lifetime(0.7, 1050.0, 15.063e-6, &mut tau), McsStatus::Ok);
        assert!(tau > 0.0 && tau < 0.7);
    }
    let v = unsafe { CStr::from_ptr(mcs_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_is_generated_and_parses() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/mcs.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for sym in ["mcs_run", "mcs_result_free", "McsStatus", "McsSummary", "mcs_last_error_message"] {
        assert!(text.contains(sym), "{sym}");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("check.c");
    std::fs::write(
        &src,
        "#include \"mcs.h\"\nint main(void){McsScenario*s=0;return mcs_scenario_free(s),MCS_STATUS_OK;}\n",
    )
    .unwrap();
    let inc = header.parent().unwrap();
    match Command::new("cc").arg("-fsyntax-only").arg("-I").arg(inc).arg(&src).output() {
        Ok(out) => assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr)),
        Err(_) => eprintln!("cc not found, skipping compile check"),
    }
}
