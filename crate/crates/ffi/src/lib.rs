//! C ABI for the hintbid library.
//!
//! Streams and trajectories are opaque handles created and freed here;
//! every fallible call returns an [`HbStatus`] code and leaves a
//! human-readable message retrievable with [`hb_last_error`] on failure.
//! Stream and algorithm descriptions are passed as TOML fragments using the
//! same schema as the CLI config (`family = "sparse"` stream tables,
//! `kind = "alg1"` algorithm tables), so bindings stay in sync with the
//! documented configuration surface.
//!
//! The generated header lands in `include/hintbid.h` at build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use hintbid::auction::{QNorm, Stream, Trajectory};
use hintbid::bench::AlgorithmSpec;
use hintbid::oracles::{best_constant_bid, best_lipschitz_dp, best_sparse_oracle, regret_curve};
use hintbid::streams::{check_moment_stream, load_csv, StreamSpec};

/// Status code of every fallible FFI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    RuntimeError = 4,
    BufferTooSmall = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(sanitized).unwrap_or_default());
}

/// Message for the calling thread's most recent failure. Valid until the
/// next failing call on the same thread; never null.
#[no_mangle]
pub extern "C" fn hb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Opaque auction stream handle.
pub struct HbStream {
    inner: Stream,
}

/// Opaque policy trajectory handle.
pub struct HbTrajectory {
    inner: Trajectory,
}

fn guard(body: impl FnOnce() -> HbStatus) -> HbStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            HbStatus::RuntimeError
        }
    }
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, HbStatus> {
    if ptr.is_null() {
        set_error("null string pointer");
        return Err(HbStatus::NullPointer);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string is not valid UTF-8");
        HbStatus::InvalidUtf8
    })
}

fn fail(status: HbStatus, msg: impl AsRef<str>) -> HbStatus {
    set_error(msg.as_ref());
    status
}

/// Load a `v,m,h,sigma` CSV file into a stream handle. Rows outside `[0,1]`
/// or with `v <= m` are pruned like the CLI loader.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hb_stream_from_csv(
    path: *const c_char,
    sigma_visible: bool,
    out: *mut *mut HbStream,
) -> HbStatus {
    guard(|| {
        if out.is_null() {
            return fail(HbStatus::NullPointer, "null output pointer");
        }
        let path = match read_str(path) {
            Ok(s) => s,
            Err(e) => return e,
        };
        match load_csv(Path::new(path), QNorm::Infinite, sigma_visible) {
            Ok(load) => {
                *out = Box::into_raw(Box::new(HbStream { inner: load.stream }));
                HbStatus::Ok
            }
            Err(e) => fail(HbStatus::RuntimeError, e.to_string()),
        }
    })
}

/// Build a synthetic stream from a TOML table with a `family` key
/// (`two_point`, `single_hint_lb`, `blocks`, `sparse`).
///
/// # Safety
/// `spec_toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hb_stream_generate(
    spec_toml: *const c_char,
    out: *mut *mut HbStream,
) -> HbStatus {
    guard(|| {
        if out.is_null() {
            return fail(HbStatus::NullPointer, "null output pointer");
        }
        let text = match read_str(spec_toml) {
            Ok(s) => s,
            Err(e) => return e,
        };
        let spec: StreamSpec = match toml::from_str(text) {
            Ok(s) => s,
            Err(e) => return fail(HbStatus::InvalidArgument, e.to_string()),
        };
        match spec.build() {
            Ok(stream) => {
                *out = Box::into_raw(Box::new(HbStream { inner: stream }));
                HbStatus::Ok
            }
            Err(e) => fail(HbStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Number of rounds in the stream.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn hb_stream_len(stream: *const HbStream, out: *mut usize) -> HbStatus {
    guard(|| {
        if stream.is_null() || out.is_null() {
            return fail(HbStatus::NullPointer, "null pointer");
        }
        *out = (*stream).inner.horizon();
        HbStatus::Ok
    })
}

/// Whether the stream satisfies its declared hint-accuracy moment bound
/// (sample-mean for finite q, pointwise for q = inf).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn hb_stream_check_moment(
    stream: *const HbStream,
    pass: *mut bool,
) -> HbStatus {
    guard(|| {
        if stream.is_null() || pass.is_null() {
            return fail(HbStatus::NullPointer, "null pointer");
        }
        *pass = check_moment_stream(&(*stream).inner).pass;
        HbStatus::Ok
    })
}

/// Run an algorithm over the stream. `algorithm_toml` is a TOML table with a
/// `kind` key (`alg1`, `single_hint`, `sparse_dp`, `meta`, `doubling_meta`,
/// `no_hint`, `bid_hint_only`, `binned`); omitted fields take the documented
/// defaults. Deterministic given the seed.
///
/// # Safety
/// Pointers must be valid; `algorithm_toml` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn hb_run(
    stream: *const HbStream,
    algorithm_toml: *const c_char,
    seed: u64,
    out: *mut *mut HbTrajectory,
) -> HbStatus {
    guard(|| {
        if stream.is_null() || out.is_null() {
            return fail(HbStatus::NullPointer, "null pointer");
        }
        let text = match read_str(algorithm_toml) {
            Ok(s) => s,
            Err(e) => return e,
        };
        let spec: AlgorithmSpec = match toml::from_str(text) {
            Ok(s) => s,
            Err(e) => return fail(HbStatus::InvalidArgument, e.to_string()),
        };
        match spec.run(&(*stream).inner, seed) {
            Ok(traj) => {
                *out = Box::into_raw(Box::new(HbTrajectory { inner: traj }));
                HbStatus::Ok
            }
            Err(e) => fail(HbStatus::RuntimeError, e.to_string()),
        }
    })
}

/// Number of rounds in the trajectory.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn hb_trajectory_len(
    traj: *const HbTrajectory,
    out: *mut usize,
) -> HbStatus {
    guard(|| {
        if traj.is_null() || out.is_null() {
            return fail(HbStatus::NullPointer, "null pointer");
        }
        *out = (*traj).inner.len();
        HbStatus::Ok
    })
}

/// Total reward of the trajectory.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn hb_trajectory_cumulative_reward(
    traj: *const HbTrajectory,
    out: *mut f64,
) -> HbStatus {
    guard(|| {
        if traj.is_null() || out.is_null() {
            return fail(HbStatus::NullPointer, "null pointer");
        }
        *out = (*traj).inner.cumulative_reward;
        HbStatus::Ok
    })
}

/// Copy per-round bids and rewards into caller buffers. Either buffer may be
/// null to skip it; `cap` is the capacity of each non-null buffer and
/// `written` receives the number of rounds copied.
///
/// # Safety
/// Non-null buffers must hold at least `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn hb_trajectory_copy(
    traj: *const HbTrajectory,
    bids: *mut f64,
    rewards: *mut f64,
    cap: usize,
    written: *mut usize,
) -> HbStatus {
    guard(|| {
        if traj.is_null() || written.is_null() {
            return fail(HbStatus::NullPointer, "null pointer");
        }
        let steps = &(*traj).inner.steps;
        if (!bids.is_null() || !rewards.is_null()) && cap < steps.len() {
            return fail(
                HbStatus::BufferTooSmall,
                format!("need capacity {}, got {cap}", steps.len()),
            );
        }
        for (i, s) in steps.iter().enumerate() {
            if !bids.is_null() {
                *bids.add(i) = s.bid;
            }
            if !rewards.is_null() {
                *rewards.add(i) = s.reward;
            }
        }
        *written = steps.len();
        HbStatus::Ok
    })
}

/// Hindsight oracle selector for [`hb_regret`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HbOracle {
    /// Best constant bid (stream may have varying values).
    Constant = 0,
    /// Best monotone 1-Lipschitz grid function (200 value bins, 1000-point
    /// bid grid).
    Lipschitz = 1,
    /// Best monotone step function over the distinct observed `m` values.
    Sparse = 2,
}

/// Final regret of a trajectory against a hindsight oracle on the same
/// stream.
///
/// # Safety
/// Pointers must be valid; the trajectory must come from this stream.
#[no_mangle]
pub unsafe extern "C" fn hb_regret(
    stream: *const HbStream,
    traj: *const HbTrajectory,
    oracle: HbOracle,
    out: *mut f64,
) -> HbStatus {
    guard(|| {
        if stream.is_null() || traj.is_null() || out.is_null() {
            return fail(HbStatus::NullPointer, "null pointer");
        }
        let rounds = &(*stream).inner.rounds;
        let per_round = match oracle {
            HbOracle::Constant => best_constant_bid(rounds, true).map(|o| o.per_round),
            HbOracle::Lipschitz => best_lipschitz_dp(rounds, 200, 1000).map(|o| o.per_round),
            HbOracle::Sparse => {
                let mut observed: Vec<f64> = rounds.iter().map(|r| r.min_bid_to_win).collect();
                observed.sort_by(f64::total_cmp);
                observed.dedup();
                best_sparse_oracle(rounds, &observed, 200).map(|o| o.per_round)
            }
        };
        let per_round = match per_round {
            Ok(p) => p,
            Err(e) => return fail(HbStatus::RuntimeError, e.to_string()),
        };
        match regret_curve(&(*traj).inner, &per_round) {
            Ok(report) => {
                *out = report.final_regret;
                HbStatus::Ok
            }
            Err(e) => fail(HbStatus::RuntimeError, e.to_string()),
        }
    })
}

/// Free a stream handle; null is a no-op.
///
/// # Safety
/// `stream` must have come from this library and not been freed before.
#[no_mangle]
pub unsafe extern "C" fn hb_stream_free(stream: *mut HbStream) {
    if !stream.is_null() {
        drop(Box::from_raw(stream));
    }
}

/// Free a trajectory handle; null is a no-op.
///
/// # Safety
/// `traj` must have come from this library and not been freed before.
#[no_mangle]
pub unsafe extern "C" fn hb_trajectory_free(traj: *mut HbTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;
    use std::io::Write;

    fn c(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    #[test]
    fn generate_run_and_regret_round_trip() {
        let spec = c(r#"
            family = "sparse"
            horizon = 120
            supports = [0.3, 0.6]
            hint_noise = 0.02
            q = "inf"
            seed = 5
        "#);
        let mut stream: *mut HbStream = std::ptr::null_mut();
        unsafe {
            assert_eq!(hb_stream_generate(spec.as_ptr(), &mut stream), HbStatus::Ok);
            let mut len = 0usize;
            assert_eq!(hb_stream_len(stream, &mut len), HbStatus::Ok);
            assert_eq!(len, 120);
            let mut pass = false;
            assert_eq!(hb_stream_check_moment(stream, &mut pass), HbStatus::Ok);
            assert!(pass);

            let algo = c("kind = \"sparse_dp\"\nvalue_bins = 4\nsupport_cap = 2\nbid_grid = 10");
            let mut traj: *mut HbTrajectory = std::ptr::null_mut();
            assert_eq!(hb_run(stream, algo.as_ptr(), 7, &mut traj), HbStatus::Ok);
            let mut tlen = 0usize;
            assert_eq!(hb_trajectory_len(traj, &mut tlen), HbStatus::Ok);
            assert_eq!(tlen, 120);
            let mut cum = -1.0;
            assert_eq!(hb_trajectory_cumulative_reward(traj, &mut cum), HbStatus::Ok);
            assert!(cum >= 0.0);

            let mut rewards = vec![0.0f64; 120];
            let mut written = 0usize;
            assert_eq!(
                hb_trajectory_copy(traj, std::ptr::null_mut(), rewards.as_mut_ptr(), 120, &mut written),
                HbStatus::Ok
            );
            assert_eq!(written, 120);
            assert!((rewards.iter().sum::<f64>() - cum).abs() < 1e-9);

            let mut regret = f64::NAN;
            assert_eq!(hb_regret(stream, traj, HbOracle::Sparse, &mut regret), HbStatus::Ok);
            assert!(regret.is_finite());

            // Determinism across the ABI.
            let mut traj2: *mut HbTrajectory = std::ptr::null_mut();
            assert_eq!(hb_run(stream, algo.as_ptr(), 7, &mut traj2), HbStatus::Ok);
            let mut cum2 = 0.0;
            hb_trajectory_cumulative_reward(traj2, &mut cum2);
            assert_eq!(cum, cum2);

            hb_trajectory_free(traj);
            hb_trajectory_free(traj2);
            hb_stream_free(stream);
        }
    }

    #[test]
    fn csv_loading_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "0.9,0.4,0.42,0.05").unwrap();
        writeln!(f, "0.8,0.3,0.31,0.02").unwrap();
        drop(f);
        let cpath = c(path.to_str().unwrap());
        let mut stream: *mut HbStream = std::ptr::null_mut();
        unsafe {
            assert_eq!(
                hb_stream_from_csv(cpath.as_ptr(), true, &mut stream),
                HbStatus::Ok
            );
            let mut len = 0;
            hb_stream_len(stream, &mut len);
            assert_eq!(len, 2);
            hb_stream_free(stream);

            // Missing file surfaces a runtime error and a message.
            let missing = c("/nonexistent/x.csv");
            let status = hb_stream_from_csv(missing.as_ptr(), true, &mut stream);
            assert_eq!(status, HbStatus::RuntimeError);
            let msg = CStr::from_ptr(hb_last_error()).to_str().unwrap();
            assert!(!msg.is_empty());

            // Null pointers are rejected, not dereferenced.
            assert_eq!(
                hb_stream_from_csv(std::ptr::null(), true, &mut stream),
                HbStatus::NullPointer
            );
            assert_eq!(
                hb_stream_generate(cpath.as_ptr(), std::ptr::null_mut()),
                HbStatus::NullPointer
            );
        }
    }

    #[test]
    fn bad_specs_are_invalid_argument() {
        let mut stream: *mut HbStream = std::ptr::null_mut();
        unsafe {
            let junk = c("family = \"no_such_family\"");
            assert_eq!(
                hb_stream_generate(junk.as_ptr(), &mut stream),
                HbStatus::InvalidArgument
            );
            let spec = c("family = \"sparse\"\nhorizon = 10\nsupports = [0.4]\nhint_noise = 0.0\nq = \"inf\"\nseed = 1");
            assert_eq!(hb_stream_generate(spec.as_ptr(), &mut stream), HbStatus::Ok);
            let mut traj: *mut HbTrajectory = std::ptr::null_mut();
            let bad_algo = c("kind = \"warp_drive\"");
            assert_eq!(
                hb_run(stream, bad_algo.as_ptr(), 0, &mut traj),
                HbStatus::InvalidArgument
            );
            hb_stream_free(stream);
        }
    }

    #[test]
    fn small_buffer_reports_size() {
        let spec = c("family = \"sparse\"\nhorizon = 10\nsupports = [0.4]\nhint_noise = 0.0\nq = \"inf\"\nseed = 1");
        let mut stream: *mut HbStream = std::ptr::null_mut();
        let mut traj: *mut HbTrajectory = std::ptr::null_mut();
        unsafe {
            hb_stream_generate(spec.as_ptr(), &mut stream);
            let algo = c("kind = \"bid_hint_only\"");
            hb_run(stream, algo.as_ptr(), 0, &mut traj);
            let mut buf = vec![0.0f64; 3];
            let mut written = 0usize;
            assert_eq!(
                hb_trajectory_copy(traj, buf.as_mut_ptr(), std::ptr::null_mut(), 3, &mut written),
                HbStatus::BufferTooSmall
            );
            hb_trajectory_free(traj);
            hb_stream_free(stream);
        }
    }
}
