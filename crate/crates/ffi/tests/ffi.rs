use std::ffi::{CStr, CString};
use std::ptr;

use yosida_ffi::*;

#[test]
fn resolvent_of_scaled_identity() {
    unsafe {
        let mut op = ptr::null_mut();
        assert_eq!(yosida_operator_scaled_identity(2.0, 2, &mut op), YosidaStatus::Ok);
        assert_eq!(yosida_operator_dim(op), 2);
        let x = [3.0, -1.5];
        let mut xl = [0.0; 2];
        let mut al = [0.0; 2];
        let st = yosida_resolvent(op, 2.0, 0.5, x.as_ptr(), 2, 1e-12, xl.as_mut_ptr(), al.as_mut_ptr());
        assert_eq!(st, YosidaStatus::Ok);
        for i in 0..2 {
            assert!((xl[i] - x[i] / 2.0).abs() < 1e-10);
            assert!((al[i] - x[i]).abs() < 1e-10);
        }
        yosida_operator_free(op);
    }
}

#[test]
fn errors_carry_messages() {
    unsafe {
        let mut op = ptr::null_mut();
        assert_eq!(yosida_operator_power(2.0, -1.0, 1, &mut op), YosidaStatus::InvalidArgument);
        assert!(op.is_null());
        let msg = CStr::from_ptr(yosida_last_error()).to_str().unwrap();
        assert!(!msg.is_empty());

        let x = [1.0];
        let mut out = [0.0];
        let st = yosida_resolvent(ptr::null(), 2.0, 1.0, x.as_ptr(), 1, 1e-12, out.as_mut_ptr(), out.as_mut_ptr());
        assert_eq!(st, YosidaStatus::NullPointer);

        let bad = CString::new("[operator]\nkind = \"power\"\ngama = 2\n").unwrap();
        let mut prob = ptr::null_mut();
        assert_eq!(yosida_problem_from_toml(bad.as_ptr(), &mut prob), YosidaStatus::Validation);
        yosida_operator_free(ptr::null_mut());
        yosida_problem_free(ptr::null_mut());
        yosida_trace_free(ptr::null_mut());
        yosida_string_free(ptr::null_mut());
    }
}

#[test]
fn scalar_annulus_through_handles() {
    let text = CString::new(
        "[operator]\nkind = \"power\"\ngamma = 2.0\ndim = 1\n\n[c]\nkind = \"pointwise\"\ncoeff = -1.0\n\n[annulus]\ng1 = 2.0\ng2 = 0.5\n",
    )
    .unwrap();
    unsafe {
        let mut prob = ptr::null_mut();
        assert_eq!(yosida_problem_from_toml(text.as_ptr(), &mut prob), YosidaStatus::Ok);
        assert_eq!(yosida_problem_dim(prob), 1);
        let mut trace = ptr::null_mut();
        assert_eq!(yosida_annulus_search(prob, &mut trace), YosidaStatus::Ok);
        assert_eq!(yosida_trace_candidate_count(trace), 2);
        let mut x = [0.0];
        let mut norm = 0.0;
        for i in 0..2 {
            assert_eq!(yosida_trace_candidate(trace, i, x.as_mut_ptr(), 1, &mut norm), YosidaStatus::Ok);
            assert!((x[0].abs() - 1.0).abs() < 1e-6);
            assert!((norm - 1.0).abs() < 1e-6);
        }
        assert_eq!(yosida_trace_candidate(trace, 2, x.as_mut_ptr(), 1, &mut norm), YosidaStatus::InvalidArgument);

        let mut csv = ptr::null_mut();
        assert_eq!(yosida_trace_csv(trace, &mut csv), YosidaStatus::Ok);
        let s = CStr::from_ptr(csv).to_str().unwrap();
        assert!(s.starts_with("stage,t,eps,seed,x0"));
        yosida_string_free(csv);
        yosida_trace_free(trace);
        yosida_problem_free(prob);
    }
}

#[test]
fn header_declares_every_entry_point() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/yosida.h")).unwrap();
    for name in [
        "yosida_last_error",
        "yosida_operator_power",
        "yosida_operator_p_laplacian",
        "yosida_resolvent",
        "yosida_problem_from_toml",
        "yosida_annulus_search",
        "yosida_trace_csv",
        "yosida_string_free",
        "YOSIDA_STATUS_OK",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
