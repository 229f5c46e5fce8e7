//! C ABI for the planner.
//!
//! Handles are opaque pointers owned by the caller and released with the
//! matching `*_free`. Every fallible call returns a [`PotmmcpStatus`]; on
//! failure the message is kept per thread and read with
//! [`potmmcp_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use potmmcp::envs::tiny::TinyPosgModel;
use potmmcp::harness::{self, AnyProblem, Problem, RunConfig};
use potmmcp::metagame::{make_meta_policy, MetaPolicy, PayoffTable, Tau};
use potmmcp::planner::Planner;
use potmmcp::posg::{rng_from_seed, Rng};
use potmmcp::{with_problem, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotmmcpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Validation = 4,
    UnknownPolicy = 5,
    Depletion = 6,
    CapExceeded = 7,
    Io = 8,
    Unsupported = 9,
    Panic = 10,
}

impl From<&Error> for PotmmcpStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidAction { .. } | Error::JointArity { .. } => PotmmcpStatus::InvalidArgument,
            Error::Config(_) | Error::Json(_) => PotmmcpStatus::Config,
            Error::Validation(_) => PotmmcpStatus::Validation,
            Error::UnknownPolicy(_) | Error::DuplicatePolicy(_) => PotmmcpStatus::UnknownPolicy,
            Error::Depletion(_) => PotmmcpStatus::Depletion,
            Error::CapExceeded { .. } => PotmmcpStatus::CapExceeded,
            Error::Unsupported(_) => PotmmcpStatus::Unsupported,
            Error::Io { .. } => PotmmcpStatus::Io,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn fail(status: PotmmcpStatus, msg: impl Into<String>) -> PotmmcpStatus {
    set_error(msg.into());
    status
}

/// Run `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), PotmmcpStatus>) -> PotmmcpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            PotmmcpStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(PotmmcpStatus::Panic, msg)
        }
    }
}

fn lib<T>(r: potmmcp::Result<T>) -> Result<T, PotmmcpStatus> {
    r.map_err(|e| fail((&e).into(), e.to_string()))
}

unsafe fn str_arg<'a>(s: *const c_char, name: &str) -> Result<&'a str, PotmmcpStatus> {
    if s.is_null() {
        return Err(fail(PotmmcpStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(PotmmcpStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, PotmmcpStatus> {
    p.as_mut().ok_or_else(|| fail(PotmmcpStatus::NullPointer, format!("{name} is null")))
}

unsafe fn handle<'a, T>(p: *mut T) -> Result<&'a mut T, PotmmcpStatus> {
    p.as_mut().ok_or_else(|| fail(PotmmcpStatus::NullPointer, "handle is null"))
}

/// Copy the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn potmmcp_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn potmmcp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Softmax meta-policy over a payoff table.
pub struct PotmmcpMetaPolicy {
    inner: MetaPolicy,
}

/// Build `σ^τ` from a payoff table in JSON. A negative or infinite `tau`
/// gives the uniform meta-policy.
///
/// # Safety
/// `payoffs_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn potmmcp_meta_policy_from_payoffs(
    payoffs_json: *const c_char,
    tau: f64,
    out: *mut *mut PotmmcpMetaPolicy,
) -> PotmmcpStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let json = str_arg(payoffs_json, "payoffs_json")?;
        let table: PayoffTable = lib(serde_json::from_str(json).map_err(Error::from))?;
        if tau.is_nan() {
            return Err(fail(PotmmcpStatus::InvalidArgument, "tau is NaN"));
        }
        let tau = if tau < 0.0 || tau.is_infinite() {
            Tau::Infinite
        } else {
            Tau::Finite(tau)
        };
        *out = Box::into_raw(Box::new(PotmmcpMetaPolicy {
            inner: make_meta_policy(&table, tau),
        }));
        Ok(())
    })
}

/// Number of joint policies (rows) and candidates (columns).
///
/// # Safety
/// `meta` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn potmmcp_meta_policy_shape(
    meta: *mut PotmmcpMetaPolicy,
    joints: *mut usize,
    candidates: *mut usize,
) -> PotmmcpStatus {
    guard(|| {
        let m = handle(meta)?;
        *out_arg(joints, "joints")? = m.inner.joints.len();
        *out_arg(candidates, "candidates")? = m.inner.candidates.len();
        Ok(())
    })
}

/// `σ(candidate | joint)`.
///
/// # Safety
/// `meta` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn potmmcp_meta_policy_prob(
    meta: *mut PotmmcpMetaPolicy,
    joint: usize,
    candidate: usize,
    out: *mut f64,
) -> PotmmcpStatus {
    guard(|| {
        let m = handle(meta)?;
        let p = m
            .inner
            .rows
            .get(joint)
            .and_then(|r| r.get(candidate))
            .ok_or_else(|| fail(PotmmcpStatus::InvalidArgument, "index out of range"))?;
        *out_arg(out, "out")? = *p;
        Ok(())
    })
}

/// # Safety
/// `meta` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn potmmcp_meta_policy_free(meta: *mut PotmmcpMetaPolicy) {
    if !meta.is_null() {
        drop(Box::from_raw(meta));
    }
}

/// An evaluation problem built from a run configuration.
pub struct PotmmcpSession {
    config: RunConfig,
    problem: AnyProblem,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PotmmcpSummary {
    pub episodes: usize,
    pub mean_return: f64,
    pub ci95: f64,
    pub mean_steps: f64,
    pub mean_max_depth: f64,
    pub mean_prob_true_type: f64,
}

/// Build the environment, policy set and payoff table of a JSON run
/// configuration.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn potmmcp_session_new(config_json: *const c_char, out: *mut *mut PotmmcpSession) -> PotmmcpStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let json = str_arg(config_json, "config_json")?;
        let config: RunConfig = lib(serde_json::from_str(json).map_err(Error::from))?;
        let problem = lib(harness::build_problem(&config))?;
        *out = Box::into_raw(Box::new(PotmmcpSession { config, problem }));
        Ok(())
    })
}

/// Run `episodes` episodes with seed `seed` and summarise the planner's
/// returns. Writes no files.
///
/// # Safety
/// `session` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn potmmcp_session_evaluate(
    session: *mut PotmmcpSession,
    episodes: usize,
    seed: u64,
    out: *mut PotmmcpSummary,
) -> PotmmcpStatus {
    guard(|| {
        let s = handle(session)?;
        let out = out_arg(out, "out")?;
        if episodes == 0 {
            return Err(fail(PotmmcpStatus::InvalidArgument, "episodes must be at least 1"));
        }
        let mut config = s.config.clone();
        config.episodes = episodes;
        config.seed = seed;
        let (method, env, hash) = (config.method(), config.env.id(), config.hash());
        let summary = with_problem!(&s.problem, p => {
            let records = lib(harness::run_episodes(p, &config))?;
            harness::summarise(&records, p.set.planner().0, seed, &hash, &method, &env)
        });
        *out = PotmmcpSummary {
            episodes: summary.episodes,
            mean_return: summary.mean_return,
            ci95: summary.ci95,
            mean_steps: summary.mean_steps,
            mean_max_depth: summary.mean_max_depth,
            mean_prob_true_type: summary.mean_prob_true_type,
        };
        Ok(())
    })
}

/// # Safety
/// `session` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn potmmcp_session_free(session: *mut PotmmcpSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// An interactive planner on a tiny game, whose observations are integers.
pub struct PotmmcpPlanner {
    problem: Problem<TinyPosgModel>,
    planner: Planner<TinyPosgModel>,
    rng: Rng,
}

/// Build a planner from a JSON run configuration whose environment is a
/// tiny instance.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn potmmcp_planner_new(
    config_json: *const c_char,
    seed: u64,
    out: *mut *mut PotmmcpPlanner,
) -> PotmmcpStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let json = str_arg(config_json, "config_json")?;
        let config: RunConfig = lib(serde_json::from_str(json).map_err(Error::from))?;
        let AnyProblem::Tiny(problem) = lib(harness::build_problem(&config))? else {
            return Err(fail(PotmmcpStatus::Unsupported, "interactive planners need a tiny instance"));
        };
        let rows = lib(problem.meta_policy(&config.search_policy).and_then(|m| m.aligned(&problem.set)))?;
        let planner = lib(Planner::new(problem.env.clone(), problem.set.clone(), rows, config.planner.clone()))?;
        *out = Box::into_raw(Box::new(PotmmcpPlanner {
            problem,
            planner,
            rng: rng_from_seed(seed),
        }));
        Ok(())
    })
}

/// Start an episode after the planner's initial observation.
///
/// # Safety
/// `planner` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn potmmcp_planner_reset(planner: *mut PotmmcpPlanner, initial_obs: usize) -> PotmmcpStatus {
    guard(|| {
        let p = handle(planner)?;
        lib(p.planner.reset(Some(initial_obs), &mut p.rng))
    })
}

/// Search from the current root and write the chosen action.
///
/// # Safety
/// `planner` must be a live handle; `action` must be writable.
#[no_mangle]
pub unsafe extern "C" fn potmmcp_planner_search(planner: *mut PotmmcpPlanner, action: *mut usize) -> PotmmcpStatus {
    guard(|| {
        let p = handle(planner)?;
        let out = out_arg(action, "action")?;
        *out = lib(p.planner.search(&mut p.rng))?;
        Ok(())
    })
}

/// Root value estimate of the last search.
///
/// # Safety
/// `planner` must be a live handle; `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn potmmcp_planner_root_value(planner: *mut PotmmcpPlanner, value: *mut f64) -> PotmmcpStatus {
    guard(|| {
        let p = handle(planner)?;
        *out_arg(value, "value")? = p.planner.root_value();
        Ok(())
    })
}

/// Move the root to the child reached by `action` and `obs`.
///
/// # Safety
/// `planner` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn potmmcp_planner_advance(planner: *mut PotmmcpPlanner, action: usize, obs: usize) -> PotmmcpStatus {
    guard(|| {
        let p = handle(planner)?;
        let n_actions = p.problem.set.planner_action_count();
        if action >= n_actions {
            return Err(fail(
                PotmmcpStatus::InvalidArgument,
                format!("action {action} out of range (count {n_actions})"),
            ));
        }
        lib(p.planner.advance(action, obs, &mut p.rng)).map(|_| ())
    })
}

/// # Safety
/// `planner` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn potmmcp_planner_free(planner: *mut PotmmcpPlanner) {
    if !planner.is_null() {
        drop(Box::from_raw(planner));
    }
}
