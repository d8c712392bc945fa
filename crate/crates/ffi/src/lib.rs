//! C ABI over `maxreward`.
//!
//! Every fallible function returns an [`MrStatus`]; on failure the message is
//! kept per thread and can be read with [`mr_last_error_message`]. Objects are
//! handed out as opaque pointers and released with their `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use maxreward::bayes::{GaussianBelief, Measurement};
use maxreward::lattice::{self, LatticeField, Vertex};
use maxreward::planning::{self, ContinuousPlan, RobotState, Solver, WorkloadCounters};
use maxreward::poisson::{MarkedPointField, Target};
use maxreward::{Error, RewardDistribution, SeededRng};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MrStatus {
    MrOk = 0,
    MrNullPointer = 1,
    MrInvalidArgument = 2,
    MrInvalidDistribution = 3,
    MrOutsideWedge = 4,
    MrUnsatisfiableBaseline = 5,
    MrBufferTooSmall = 6,
    MrInternal = 7,
    MrPanic = 8,
}

/// One target of a point field or plan.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MrTarget {
    pub p1: f64,
    pub p2: f64,
    pub reward: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MrCounters {
    pub dp_relaxations: u64,
    pub planner_calls: u64,
    pub targets_visited: u64,
    pub candidates_seen: u64,
    pub distance: f64,
}

/// Reward distribution.
pub struct MrDistribution(RewardDistribution);

/// Materialized lattice reward field.
pub struct MrLatticeField(LatticeField);

/// Marked Poisson point field.
pub struct MrPointField(MarkedPointField);

/// Continuous plan with its workload counters.
pub struct MrPlan {
    plan: ContinuousPlan,
    counters: WorkloadCounters,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Fail(MrStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::InvalidDistribution(_) | Error::DistributionSpec { .. } => MrStatus::MrInvalidDistribution,
            Error::OutsideWedge(..) => MrStatus::MrOutsideWedge,
            Error::UnsatisfiableBaseline(_) => MrStatus::MrUnsatisfiableBaseline,
            Error::InvalidArgument(_) | Error::DegenerateFit(_) => MrStatus::MrInvalidArgument,
            _ => MrStatus::MrInternal,
        };
        Fail(status, e.to_string())
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MrStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MrStatus::MrOk,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            MrStatus::MrPanic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(MrStatus::MrNullPointer, format!("{what} is null"))
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

unsafe fn copy_out<T: Copy>(items: &[T], out: *mut T, capacity: usize, written: *mut usize) -> Result<(), Fail> {
    put(written, items.len(), "written")?;
    if items.len() > capacity {
        return Err(Fail(MrStatus::MrBufferTooSmall, format!("{} items do not fit in {capacity}", items.len())));
    }
    if !items.is_empty() {
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(items.as_ptr(), out, items.len());
    }
    Ok(())
}

fn to_target(t: &Target) -> MrTarget {
    MrTarget { p1: t.p1, p2: t.p2, reward: t.reward }
}

/// Copies the calling thread's last error message into `buf`, NUL-terminated
/// and truncated to `len` bytes. Returns the untruncated length including the
/// terminator, or 0 when there is no error.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn mr_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes_with_nul();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len);
                ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n - 1) = 0;
            }
            bytes.len()
        }
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mr_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// Parses a distribution spec such as `exponential:rate=1`.
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mr_distribution_parse(spec: *const c_char, out: *mut *mut MrDistribution) -> MrStatus {
    guard(|| {
        if spec.is_null() {
            return Err(null("spec"));
        }
        let text =
            CStr::from_ptr(spec).to_str().map_err(|_| Fail(MrStatus::MrInvalidArgument, "spec is not UTF-8".into()))?;
        let dist: RewardDistribution = text.parse()?;
        put(out, boxed(MrDistribution(dist)), "out")
    })
}

/// # Safety
/// `dist` must be null or come from [`mr_distribution_parse`].
#[no_mangle]
pub unsafe extern "C" fn mr_distribution_free(dist: *mut MrDistribution) {
    free(dist)
}

/// Mean of the distribution; infinite for heavy tails without a mean.
///
/// # Safety
/// `dist` must be a live handle; `mean` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mr_distribution_mean(dist: *const MrDistribution, mean: *mut f64) -> MrStatus {
    guard(|| put(mean, get(dist, "dist")?.0.moments().mean, "mean"))
}

/// Draws `count` rewards from stream `(seed, stream)` into `out`.
///
/// # Safety
/// `dist` must be a live handle; `out` must hold `count` doubles.
#[no_mangle]
pub unsafe extern "C" fn mr_distribution_sample(
    dist: *const MrDistribution,
    seed: u64,
    stream: u64,
    count: usize,
    out: *mut f64,
) -> MrStatus {
    guard(|| {
        let d = &get(dist, "dist")?.0;
        if count == 0 {
            return Ok(());
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let mut rng = SeededRng::new(seed, stream);
        for i in 0..count {
            out.add(i).write(d.sample(&mut rng));
        }
        Ok(())
    })
}

/// Lattice field of i.i.d. rewards on every vertex up to `horizon` levels.
///
/// # Safety
/// `dist` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mr_lattice_field_new(
    dist: *const MrDistribution,
    horizon: usize,
    seed: u64,
    stream: u64,
    out: *mut *mut MrLatticeField,
) -> MrStatus {
    guard(|| {
        let d = get(dist, "dist")?.0;
        let field = LatticeField::seeded(d, horizon, &SeededRng::new(seed, stream));
        put(out, boxed(MrLatticeField(field)), "out")
    })
}

/// # Safety
/// `field` must be null or come from [`mr_lattice_field_new`].
#[no_mangle]
pub unsafe extern "C" fn mr_lattice_field_free(field: *mut MrLatticeField) {
    free(field)
}

/// Reward at vertex `(v1, v2)`.
///
/// # Safety
/// `field` must be a live handle; `reward` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mr_lattice_field_reward(
    field: *const MrLatticeField,
    v1: usize,
    v2: usize,
    reward: *mut f64,
) -> MrStatus {
    guard(|| put(reward, get(field, "field")?.0.reward(Vertex(v1, v2))?, "reward"))
}

/// Best total reward over monotone paths of `n` vertices from the origin.
///
/// # Safety
/// `field` must be a live handle; `total` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mr_lattice_optimal_reward(
    field: *const MrLatticeField,
    n: usize,
    total: *mut f64,
) -> MrStatus {
    guard(|| {
        let (t, _) = lattice::optimal_total_reward(&get(field, "field")?.0, n)?;
        put(total, t, "total")
    })
}

/// Monte-Carlo estimate of the mean reward per vertex over `n` vertices.
///
/// # Safety
/// `dist` must be a live handle; `mean` and `stderr` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mr_estimate_r_star(
    dist: *const MrDistribution,
    n: usize,
    trials: usize,
    seed: u64,
    mean: *mut f64,
    stderr: *mut f64,
) -> MrStatus {
    guard(|| {
        let est = lattice::estimate_r_star(&get(dist, "dist")?.0, n, trials, &SeededRng::new(seed, 0))?;
        put(mean, est.mean, "mean")?;
        put(stderr, est.std_err, "stderr")
    })
}

/// Poisson field on the cone reachable from the origin within `length`.
///
/// # Safety
/// `dist` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mr_point_field_cone(
    lambda: f64,
    dist: *const MrDistribution,
    alpha: f64,
    length: f64,
    seed: u64,
    stream: u64,
    out: *mut *mut MrPointField,
) -> MrStatus {
    guard(|| {
        let d = get(dist, "dist")?.0;
        let field = planning::cone_field(lambda, d, alpha, length, &SeededRng::new(seed, stream))?;
        put(out, boxed(MrPointField(field)), "out")
    })
}

/// # Safety
/// `field` must be null or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn mr_point_field_free(field: *mut MrPointField) {
    free(field)
}

/// Number of targets in the field.
///
/// # Safety
/// `field` must be a live handle; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mr_point_field_len(field: *const MrPointField, len: *mut usize) -> MrStatus {
    guard(|| put(len, get(field, "field")?.0.len(), "len"))
}

/// Copies the targets, sorted by `p1`, into `out`. `written` receives the
/// target count even when the buffer is too small.
///
/// # Safety
/// `field` must be a live handle; `out` must hold `capacity` targets.
#[no_mangle]
pub unsafe extern "C" fn mr_point_field_targets(
    field: *const MrPointField,
    out: *mut MrTarget,
    capacity: usize,
    written: *mut usize,
) -> MrStatus {
    guard(|| {
        let ts: Vec<MrTarget> = get(field, "field")?.0.targets().iter().map(to_target).collect();
        copy_out(&ts, out, capacity, written)
    })
}

/// Reward-maximizing plan from `(x1, x2)` over `horizon` of travel.
///
/// # Safety
/// `field` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mr_optimal_plan(
    field: *const MrPointField,
    x1: f64,
    x2: f64,
    horizon: f64,
    alpha: f64,
    out: *mut *mut MrPlan,
) -> MrStatus {
    guard(|| {
        let f = &get(field, "field")?.0;
        let (plan, counters) =
            planning::optimal_plan_counted(f.targets(), RobotState { x1, x2 }, horizon, alpha, Solver::Scan)?;
        put(out, boxed(MrPlan { plan, counters }), "out")
    })
}

/// Reward-maximizing plan over an explicit target list.
///
/// # Safety
/// `targets` must point to `count` targets; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mr_optimal_plan_targets(
    targets: *const MrTarget,
    count: usize,
    x1: f64,
    x2: f64,
    horizon: f64,
    alpha: f64,
    out: *mut *mut MrPlan,
) -> MrStatus {
    guard(|| {
        let items = if count == 0 {
            &[][..]
        } else if targets.is_null() {
            return Err(null("targets"));
        } else {
            std::slice::from_raw_parts(targets, count)
        };
        let ts: Vec<Target> = items.iter().map(|t| Target { p1: t.p1, p2: t.p2, reward: t.reward }).collect();
        let (plan, counters) =
            planning::optimal_plan_counted(&ts, RobotState { x1, x2 }, horizon, alpha, Solver::Scan)?;
        put(out, boxed(MrPlan { plan, counters }), "out")
    })
}

/// Receding-horizon plan from the origin with sensing range `sensing`.
///
/// # Safety
/// `field` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mr_receding_plan(
    field: *const MrPointField,
    length: f64,
    sensing: f64,
    alpha: f64,
    out: *mut *mut MrPlan,
) -> MrStatus {
    guard(|| {
        let f = &get(field, "field")?.0;
        let r = planning::receding_horizon_plan(f, RobotState::ORIGIN, length, sensing, alpha, Solver::Scan)?;
        put(out, boxed(MrPlan { plan: r.plan, counters: r.counters }), "out")
    })
}

/// # Safety
/// `plan` must be null or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn mr_plan_free(plan: *mut MrPlan) {
    free(plan)
}

/// # Safety
/// `plan` must be a live handle; `total` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mr_plan_total_reward(plan: *const MrPlan, total: *mut f64) -> MrStatus {
    guard(|| put(total, get(plan, "plan")?.plan.total_reward, "total"))
}

/// # Safety
/// `plan` must be a live handle; `counters` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mr_plan_counters(plan: *const MrPlan, counters: *mut MrCounters) -> MrStatus {
    guard(|| {
        let c = get(plan, "plan")?.counters;
        let out = MrCounters {
            dp_relaxations: c.dp_relaxations,
            planner_calls: c.planner_calls,
            targets_visited: c.targets_visited,
            candidates_seen: c.candidates_seen,
            distance: c.distance,
        };
        put(counters, out, "counters")
    })
}

/// Copies the visited targets, in visiting order, into `out`.
///
/// # Safety
/// `plan` must be a live handle; `out` must hold `capacity` targets.
#[no_mangle]
pub unsafe extern "C" fn mr_plan_visited(
    plan: *const MrPlan,
    out: *mut MrTarget,
    capacity: usize,
    written: *mut usize,
) -> MrStatus {
    guard(|| {
        let ts: Vec<MrTarget> = get(plan, "plan")?.plan.visited.iter().map(to_target).collect();
        copy_out(&ts, out, capacity, written)
    })
}

/// Conjugate update of a Gaussian belief by one Gaussian measurement.
///
/// # Safety
/// `mean` and `precision` must be readable and writable.
#[no_mangle]
pub unsafe extern "C" fn mr_gaussian_update(
    mean: *mut f64,
    precision: *mut f64,
    value: f64,
    measurement_precision: f64,
) -> MrStatus {
    guard(|| {
        if mean.is_null() || precision.is_null() {
            return Err(null("belief"));
        }
        let b = GaussianBelief::new(*mean, *precision)?.update(&Measurement::new(value, measurement_precision)?);
        *mean = b.mean;
        *precision = b.precision;
        Ok(())
    })
}
