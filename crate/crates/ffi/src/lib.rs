//! C ABI over the twinlog core: load scenarios, plan, measure routes and
//! run whole simulations. Objects are opaque handles; every fallible call
//! returns a `TwinlogStatus` and leaves a message for
//! `twinlog_last_error`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use twinlog::agents::SolveStrategy;
use twinlog::gridworld::{GridMap, MarkerId};
use twinlog::solver::{self, Instance, Mode, Plan, SolverError};
use twinlog::twin::{new_run, run_scenario, RunConfig, TransportMode};
use twinlog::Scenario;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwinlogStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidScenario = 3,
    Infeasible = 4,
    TooLarge = 5,
    InvalidRoute = 6,
    Undefined = 7,
    RunFailed = 8,
    InvalidArgument = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwinlogMode {
    /// Each carrier serves only its own orders.
    Baseline = 0,
    Collaborative = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwinlogStrategy {
    Auto = 0,
    Exact = 1,
    Heuristic = 2,
}

/// A validated scenario.
pub struct TwinlogScenario {
    inner: Scenario,
}

/// A solved plan.
pub struct TwinlogPlan {
    inner: Plan,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

type Outcome = Result<(), (TwinlogStatus, String)>;

fn guard(f: impl FnOnce() -> Outcome) -> TwinlogStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TwinlogStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            TwinlogStatus::Panic
        }
    }
}

fn null(what: &str) -> (TwinlogStatus, String) {
    (TwinlogStatus::NullArgument, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (TwinlogStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| (TwinlogStatus::InvalidUtf8, format!("{what}: {e}")))
}

fn solver_status(e: &SolverError) -> TwinlogStatus {
    match e {
        SolverError::Infeasible(_) => TwinlogStatus::Infeasible,
        SolverError::TooLarge { .. } => TwinlogStatus::TooLarge,
        SolverError::DefinedOnlyForNonEmpty => TwinlogStatus::Undefined,
        _ => TwinlogStatus::InvalidArgument,
    }
}

fn into_c_string(s: String, out: *mut *mut c_char) -> Outcome {
    let c = CString::new(s).map_err(|e| (TwinlogStatus::InvalidUtf8, e.to_string()))?;
    unsafe { *out = c.into_raw() };
    Ok(())
}

/// Message for the last failed call on this thread, or NULL. Valid until
/// the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn twinlog_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses and validates a scenario from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn twinlog_scenario_from_json(
    json: *const c_char,
    out: *mut *mut TwinlogScenario,
) -> TwinlogStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = read_str(json, "json")?;
        let inner = Scenario::from_json(text)
            .map_err(|e| (TwinlogStatus::InvalidScenario, e.to_string()))?;
        *out = Box::into_raw(Box::new(TwinlogScenario { inner }));
        Ok(())
    })
}

/// Loads a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn twinlog_scenario_from_path(
    path: *const c_char,
    out: *mut *mut TwinlogScenario,
) -> TwinlogStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = read_str(path, "path")?;
        let inner = Scenario::from_path(path)
            .map_err(|e| (TwinlogStatus::InvalidScenario, e.to_string()))?;
        *out = Box::into_raw(Box::new(TwinlogScenario { inner }));
        Ok(())
    })
}

/// The bundled three-carrier showcase.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn twinlog_scenario_showcase(out: *mut *mut TwinlogScenario) -> TwinlogStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = Box::into_raw(Box::new(TwinlogScenario {
            inner: twinlog::scenario::showcase(),
        }));
        Ok(())
    })
}

/// # Safety
/// `scenario` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn twinlog_scenario_free(scenario: *mut TwinlogScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Plans `scenario`; `mode` is a `TwinlogMode` and `strategy` a
/// `TwinlogStrategy` value.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn twinlog_solve(
    scenario: *const TwinlogScenario,
    mode: i32,
    strategy: i32,
    out: *mut *mut TwinlogPlan,
) -> TwinlogStatus {
    guard(|| {
        let sc = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        // plain ints: C may pass values outside the enums
        let mode = match mode {
            m if m == TwinlogMode::Baseline as i32 => Mode::Baseline,
            m if m == TwinlogMode::Collaborative as i32 => Mode::Collaborative,
            m => return Err((TwinlogStatus::InvalidArgument, format!("unknown mode {m}"))),
        };
        let strategy = match strategy {
            s if s == TwinlogStrategy::Auto as i32 => SolveStrategy::Auto,
            s if s == TwinlogStrategy::Exact as i32 => SolveStrategy::Exact,
            s if s == TwinlogStrategy::Heuristic as i32 => SolveStrategy::Heuristic,
            s => return Err((TwinlogStatus::InvalidArgument, format!("unknown strategy {s}"))),
        };
        let inst = Instance::from_scenario(&sc.inner, mode);
        let plan = strategy
            .solve(&inst)
            .map_err(|e| (solver_status(&e), e.to_string()))?;
        *out = Box::into_raw(Box::new(TwinlogPlan { inner: plan }));
        Ok(())
    })
}

/// # Safety
/// `plan` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn twinlog_plan_total_blocks(
    plan: *const TwinlogPlan,
    out: *mut u32,
) -> TwinlogStatus {
    guard(|| {
        let plan = plan.as_ref().ok_or_else(|| null("plan"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = plan.inner.total_blocks;
        Ok(())
    })
}

/// The plan as JSON; release with `twinlog_string_free`.
///
/// # Safety
/// `plan` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn twinlog_plan_to_json(
    plan: *const TwinlogPlan,
    out: *mut *mut c_char,
) -> TwinlogStatus {
    guard(|| {
        let plan = plan.as_ref().ok_or_else(|| null("plan"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let text = serde_json::to_string(&plan.inner).expect("plans serialise");
        into_c_string(text, out)
    })
}

/// # Safety
/// `plan` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn twinlog_plan_free(plan: *mut TwinlogPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// Blocks travelled along `route` (`len` marker ids) on the scenario's
/// map, or on the plain 5x5 grid when `scenario` is NULL.
///
/// # Safety
/// `route` must point to `len` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn twinlog_route_length(
    scenario: *const TwinlogScenario,
    route: *const u16,
    len: usize,
    out: *mut u32,
) -> TwinlogStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if route.is_null() && len > 0 {
            return Err(null("route"));
        }
        let ids: Vec<MarkerId> = if len == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(route, len).iter().copied().map(MarkerId).collect()
        };
        let default_map;
        let map: &GridMap = match scenario.as_ref() {
            Some(sc) => sc.inner.map(),
            None => {
                default_map = GridMap::default();
                &default_map
            }
        };
        *out = map
            .route_length(&ids)
            .map_err(|e| (TwinlogStatus::InvalidRoute, e.to_string()))?;
        Ok(())
    })
}

/// Relative saving `(pre - post) / pre`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn twinlog_synergy(pre: u32, post: u32, out: *mut f64) -> TwinlogStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = solver::synergy_blocks(pre, post)
            .map_err(|e| (solver_status(&e), e.to_string()))?;
        Ok(())
    })
}

/// Runs the scenario in-process under the simulated clock and returns the
/// distance report as JSON; release with `twinlog_string_free`.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn twinlog_run(
    scenario: *const TwinlogScenario,
    seed: u64,
    out: *mut *mut c_char,
) -> TwinlogStatus {
    guard(|| {
        let sc = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let config = RunConfig {
            seed,
            ..RunConfig::default()
        };
        let art = run_scenario(&sc.inner, &config, &TransportMode::Local, new_run(&sc.inner, seed));
        let report = art
            .result
            .map_err(|e| (TwinlogStatus::RunFailed, e.to_string()))?;
        into_c_string(serde_json::to_string(&report).expect("reports serialise"), out)
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn twinlog_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
