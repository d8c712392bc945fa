use std::ffi::{c_char, CStr, CString};
use std::ptr;

use maxreward_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { mr_last_error_message(buf.as_mut_ptr(), buf.len()) };
    if n == 0 {
        return String::new();
    }
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn dist(spec: &str) -> *mut MrDistribution {
    let s = CString::new(spec).unwrap();
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { mr_distribution_parse(s.as_ptr(), &mut d) }, MrStatus::MrOk);
    d
}

#[test]
fn distribution_round_trip() {
    let d = dist("exponential:rate=2");
    let mut mean = 0.0;
    assert_eq!(unsafe { mr_distribution_mean(d, &mut mean) }, MrStatus::MrOk);
    assert_eq!(mean, 0.5);
    let mut a = [0.0; 16];
    let mut b = [0.0; 16];
    unsafe {
        assert_eq!(mr_distribution_sample(d, 3, 1, a.len(), a.as_mut_ptr()), MrStatus::MrOk);
        assert_eq!(mr_distribution_sample(d, 3, 1, b.len(), b.as_mut_ptr()), MrStatus::MrOk);
        mr_distribution_free(d);
    }
    assert_eq!(a, b);
    assert!(a.iter().all(|&x| x >= 0.0));
}

#[test]
fn bad_spec_reports_error() {
    let s = CString::new("weibull:k=1").unwrap();
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { mr_distribution_parse(s.as_ptr(), &mut d) }, MrStatus::MrInvalidDistribution);
    assert!(d.is_null());
    assert!(last_error().contains("weibull"));
    assert_eq!(unsafe { mr_distribution_parse(ptr::null(), &mut d) }, MrStatus::MrNullPointer);
    let mut mean = 0.0;
    assert_eq!(unsafe { mr_distribution_mean(ptr::null(), &mut mean) }, MrStatus::MrNullPointer);
}

#[test]
fn error_message_truncates_and_clears() {
    let s = CString::new("pareto:xm=-1,alpha=2").unwrap();
    let mut d = ptr::null_mut();
    assert_ne!(unsafe { mr_distribution_parse(s.as_ptr(), &mut d) }, MrStatus::MrOk);
    let full = unsafe { mr_last_error_message(ptr::null_mut(), 0) };
    assert!(full > 5);
    let mut small = [1 as c_char; 5];
    assert_eq!(unsafe { mr_last_error_message(small.as_mut_ptr(), small.len()) }, full);
    assert_eq!(small[4], 0);
    let ok = dist("constant:c=1");
    assert_eq!(unsafe { mr_last_error_message(ptr::null_mut(), 0) }, 0);
    unsafe { mr_distribution_free(ok) };
}

#[test]
fn constant_lattice_is_exact() {
    let d = dist("constant:c=1.5");
    let mut field = ptr::null_mut();
    let mut total = 0.0;
    let mut r = 0.0;
    unsafe {
        assert_eq!(mr_lattice_field_new(d, 20, 0, 0, &mut field), MrStatus::MrOk);
        assert_eq!(mr_lattice_optimal_reward(field, 20, &mut total), MrStatus::MrOk);
        assert_eq!(mr_lattice_field_reward(field, 3, 4, &mut r), MrStatus::MrOk);
        assert_eq!(mr_lattice_field_reward(field, 30, 0, &mut r), MrStatus::MrOutsideWedge);
        mr_lattice_field_free(field);
    }
    assert_eq!(total, 30.0);
    let (mut mean, mut se) = (0.0, 0.0);
    assert_eq!(unsafe { mr_estimate_r_star(d, 50, 4, 9, &mut mean, &mut se) }, MrStatus::MrOk);
    assert_eq!(mean, 1.5);
    unsafe { mr_distribution_free(d) };
}

#[test]
fn plans_over_point_field() {
    let d = dist("exponential:rate=1");
    let mut field = ptr::null_mut();
    let (mut opt, mut rh) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        assert_eq!(mr_point_field_cone(2.0, d, 1.0, 20.0, 5, 0, &mut field), MrStatus::MrOk);
        let mut len = 0;
        assert_eq!(mr_point_field_len(field, &mut len), MrStatus::MrOk);
        assert!(len > 0);
        let mut written = 0;
        let mut buf = vec![MrTarget::default(); len];
        assert_eq!(mr_point_field_targets(field, buf.as_mut_ptr(), 0, &mut written), MrStatus::MrBufferTooSmall);
        assert_eq!(written, len);
        assert_eq!(mr_point_field_targets(field, buf.as_mut_ptr(), len, &mut written), MrStatus::MrOk);
        assert!(buf.windows(2).all(|w| w[0].p1 <= w[1].p1));

        assert_eq!(mr_optimal_plan(field, 0.0, 0.0, 20.0, 1.0, &mut opt), MrStatus::MrOk);
        assert_eq!(mr_receding_plan(field, 20.0, 4.0, 1.0, &mut rh), MrStatus::MrOk);
        let (mut best, mut limited) = (0.0, 0.0);
        mr_plan_total_reward(opt, &mut best);
        mr_plan_total_reward(rh, &mut limited);
        assert!(limited <= best + 1e-9);

        let mut c = MrCounters::default();
        assert_eq!(mr_plan_counters(rh, &mut c), MrStatus::MrOk);
        assert_eq!(c.planner_calls, 5);
        assert_eq!(c.distance, 20.0);

        let mut visited = vec![MrTarget::default(); len];
        assert_eq!(mr_plan_visited(opt, visited.as_mut_ptr(), len, &mut written), MrStatus::MrOk);
        let sum: f64 = visited[..written].iter().map(|t| t.reward).sum();
        assert!((sum - best).abs() < 1e-9);

        let mut again = ptr::null_mut();
        assert_eq!(mr_optimal_plan_targets(buf.as_ptr(), len, 0.0, 0.0, 20.0, 1.0, &mut again), MrStatus::MrOk);
        let mut same = 0.0;
        mr_plan_total_reward(again, &mut same);
        assert_eq!(same, best);

        mr_plan_free(again);
        mr_plan_free(opt);
        mr_plan_free(rh);
        mr_point_field_free(field);
        mr_distribution_free(d);
    }
}

#[test]
fn gaussian_update_adds_precision() {
    let (mut mean, mut precision) = (0.0, 1.0);
    assert_eq!(unsafe { mr_gaussian_update(&mut mean, &mut precision, 2.0, 3.0) }, MrStatus::MrOk);
    assert_eq!(precision, 4.0);
    assert_eq!(mean, 1.5);
    assert_eq!(unsafe { mr_gaussian_update(&mut mean, &mut precision, 1.0, -1.0) }, MrStatus::MrInvalidArgument);
    assert_eq!((mean, precision), (1.5, 4.0));
}

#[test]
fn free_accepts_null() {
    unsafe {
        mr_distribution_free(ptr::null_mut());
        mr_lattice_field_free(ptr::null_mut());
        mr_point_field_free(ptr::null_mut());
        mr_plan_free(ptr::null_mut());
    }
    let v = unsafe { CStr::from_ptr(mr_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
