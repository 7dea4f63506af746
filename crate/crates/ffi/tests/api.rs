use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::ptr;

use fjeucs_ffi::*;

fn corpus(name: &str) -> CString {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/corpus").join(name);
    CString::new(std::fs::read_to_string(p).unwrap()).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(fj_last_error()) }.to_str().unwrap().to_string()
}

struct Loaded {
    program: *mut FjProgram,
    policy: *mut FjPolicy,
}

impl Drop for Loaded {
    fn drop(&mut self) {
        unsafe {
            fj_program_free(self.program);
            fj_policy_free(self.policy);
        }
    }
}

fn load(program: &str, policy: &str) -> Loaded {
    let mut l = Loaded { program: ptr::null_mut(), policy: ptr::null_mut() };
    unsafe {
        assert_eq!(fj_parse_program(corpus(program).as_ptr(), &mut l.program), FjStatus::Ok);
        assert_eq!(fj_parse_policy(corpus(policy).as_ptr(), &mut l.policy), FjStatus::Ok);
    }
    l
}

fn check(l: &Loaded, entry: &str, ctx: Option<&str>, k: u32) -> (FjStatus, *mut FjReport) {
    let entry = CString::new(entry).unwrap();
    let ctx = ctx.map(|c| CString::new(c).unwrap());
    let mut r = ptr::null_mut();
    let s = unsafe {
        fj_check(l.program, l.policy, entry.as_ptr(), ctx.as_ref().map_or(ptr::null(), |c| c.as_ptr()), k, &mut r)
    };
    (s, r)
}

#[test]
fn compliant_and_violating_reports() {
    let ok = load("ex1.fj", "taint.policy");
    let (s, r) = check(&ok, "C.main", None, 1);
    assert_eq!(s, FjStatus::Ok);
    unsafe {
        assert_eq!(fj_report_is_compliant(r), 1);
        assert_eq!(fj_report_witness_count(r), 0);
        let json = CStr::from_ptr(fj_report_json(r)).to_str().unwrap();
        assert!(json.contains("\"verdict\": \"compliant\""));
        fj_report_free(r);
    }

    let (s, r) = check(&ok, "C.main", Some("constant"), 0);
    assert_eq!(s, FjStatus::Violation);
    unsafe { fj_report_free(r) };

    let bad = load("ex1-mutated.fj", "taint.policy");
    let (s, r) = check(&bad, "C.main", Some("kcfa"), 2);
    assert_eq!(s, FjStatus::Violation);
    unsafe {
        assert_eq!(fj_report_is_compliant(r), 0);
        assert_eq!(fj_report_witness_count(r), 1);
        let text = fj_report_text(r);
        assert!(CStr::from_ptr(text).to_str().unwrap().contains("putString"));
        fj_string_free(text);
        fj_report_free(r);
    }
}

#[test]
fn errors_set_status_and_message() {
    let mut p = ptr::null_mut();
    let src = CString::new("class A { String m() { return ; } }").unwrap();
    assert_eq!(unsafe { fj_parse_program(src.as_ptr(), &mut p) }, FjStatus::ParseError);
    assert!(p.is_null());
    assert!(!last_error().is_empty());

    assert_eq!(unsafe { fj_parse_program(ptr::null(), &mut p) }, FjStatus::InvalidArgument);
    assert!(last_error().contains("null"));

    let l = load("ex1.fj", "taint.policy");
    let (s, r) = check(&l, "Nope.main", None, 1);
    assert_eq!(s, FjStatus::AnalysisError);
    assert!(r.is_null());
    assert!(last_error().contains("Nope.main"));

    let (s, _) = check(&l, "C.main", Some("bogus"), 1);
    assert_eq!(s, FjStatus::InvalidArgument);

    let (s, r) = check(&l, "C.main", None, 1);
    assert_eq!(s, FjStatus::Ok);
    assert!(last_error().is_empty());
    unsafe { fj_report_free(r) };
}

#[test]
fn null_handles_are_tolerated() {
    unsafe {
        assert_eq!(fj_report_is_compliant(ptr::null()), -1);
        assert!(fj_report_json(ptr::null()).is_null());
        fj_report_free(ptr::null_mut());
        fj_program_free(ptr::null_mut());
        fj_policy_free(ptr::null_mut());
        fj_string_free(ptr::null_mut());
        assert!(!CStr::from_ptr(fj_version()).to_str().unwrap().is_empty());
    }
}
