//! C interface to the attack planners.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `*_free` function. Every fallible call returns an
//! [`OsgStatus`]; on failure [`osg_last_error_message`] describes it.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use orbitsiege::pipeline::{analyze, Analysis};
use orbitsiege::planner::{
    plan_delay, plan_overflow, AttackStrategy, DelayPlanRequest, OverflowPlanRequest, PlanError,
};
use orbitsiege::queue::{expected_downlink, Evacuation};
use orbitsiege::scenario::{load_scenario, parse_scenario, ConstellationScenario, ScenarioError};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OsgStatus {
    Ok = 0,
    /// No strategy reaches the goal; a result, not a fault.
    AttackFail = 1,
    NullPointer = 2,
    InvalidUtf8 = 3,
    Io = 4,
    Parse = 5,
    Validation = 6,
    InvalidRequest = 7,
    UnknownUnit = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OsgEvacuationKind {
    Downlinked = 0,
    /// Still onboard at the end of the horizon.
    Pending = 1,
    Dropped = 2,
}

/// Fate of one unit. `slot` is the downlink or drop slot; zero when pending.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OsgEvacuation {
    pub kind: OsgEvacuationKind,
    pub slot: usize,
}

impl From<Evacuation> for OsgEvacuation {
    fn from(e: Evacuation) -> Self {
        match e {
            Evacuation::Downlinked(t) => OsgEvacuation {
                kind: OsgEvacuationKind::Downlinked,
                slot: t,
            },
            Evacuation::Pending => OsgEvacuation {
                kind: OsgEvacuationKind::Pending,
                slot: 0,
            },
            Evacuation::Dropped(t) => OsgEvacuation {
                kind: OsgEvacuationKind::Dropped,
                slot: t,
            },
        }
    }
}

/// A loaded scenario with its target queue and attack surface.
pub struct OsgScenario {
    scenario: ConstellationScenario,
    analysis: Analysis,
}

/// A planned attack strategy.
pub struct OsgStrategy {
    strategy: AttackStrategy,
    slots: Vec<usize>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

struct Failure(OsgStatus, String);

impl From<orbitsiege::Error> for Failure {
    fn from(e: orbitsiege::Error) -> Self {
        use orbitsiege::Error as E;
        let status = match &e {
            E::Scenario(ScenarioError::Io { .. }) => OsgStatus::Io,
            E::Scenario(ScenarioError::Parse(_)) => OsgStatus::Parse,
            E::Scenario(_) | E::Orbit(_) | E::Config(_) => OsgStatus::Validation,
            E::Queue(_) => OsgStatus::UnknownUnit,
            E::Plan(p) => plan_status(p),
            E::Write { .. } => OsgStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        orbitsiege::Error::from(e).into()
    }
}

impl From<PlanError> for Failure {
    fn from(e: PlanError) -> Self {
        Failure(plan_status(&e), e.to_string())
    }
}

fn plan_status(e: &PlanError) -> OsgStatus {
    match e {
        PlanError::AttackFail(_) => OsgStatus::AttackFail,
        PlanError::InvalidRequest(_) => OsgStatus::InvalidRequest,
        PlanError::Queue(_) => OsgStatus::UnknownUnit,
    }
}

/// Runs `f`, recording its error message and turning panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> OsgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            OsgStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            OsgStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(OsgStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(OsgStatus::InvalidUtf8, format!("`{what}` is not UTF-8")))
}

unsafe fn target_list(
    handle: &OsgScenario,
    targets: *const *const c_char,
    n_targets: usize,
) -> Result<Vec<String>, Failure> {
    if targets.is_null() {
        return Ok(handle.scenario.target.target_unit_ids.clone());
    }
    (0..n_targets)
        .map(|i| text(*targets.add(i), "targets[i]").map(str::to_owned))
        .collect()
}

fn build(scenario: ConstellationScenario) -> Result<*mut OsgScenario, Failure> {
    let analysis = analyze(&scenario)?;
    Ok(Box::into_raw(Box::new(OsgScenario { scenario, analysis })))
}

fn store_strategy(strategy: AttackStrategy, out: *mut *mut OsgStrategy) {
    let slots = strategy.slots.iter().copied().collect();
    unsafe { *out = Box::into_raw(Box::new(OsgStrategy { strategy, slots })) };
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn osg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn osg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a scenario JSON file and prepares its target queue.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn osg_scenario_load(path: *const c_char, out: *mut *mut OsgScenario) -> OsgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let scenario = load_scenario(text(path, "path")?)?;
        *out = build(scenario)?;
        Ok(())
    })
}

/// Same as [`osg_scenario_load`] from JSON text.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn osg_scenario_from_json(json: *const c_char, out: *mut *mut OsgScenario) -> OsgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let scenario = parse_scenario(text(json, "json")?, None)?;
        *out = build(scenario)?;
        Ok(())
    })
}

/// # Safety
/// `handle` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn osg_scenario_free(handle: *mut OsgScenario) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Last slot of the horizon, or 0 for a null handle.
///
/// # Safety
/// `handle` must be null or a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn osg_scenario_last_slot(handle: *const OsgScenario) -> usize {
    handle.as_ref().map_or(0, |h| h.scenario.time.last_slot())
}

/// Fate of `unit_id` under the attacked slots `slots[0..n_slots]`
/// (`slots` may be null when `n_slots` is 0).
///
/// # Safety
/// Pointers must be valid for the given lengths.
#[no_mangle]
pub unsafe extern "C" fn osg_scenario_fate(
    handle: *const OsgScenario,
    slots: *const usize,
    n_slots: usize,
    unit_id: *const c_char,
    out: *mut OsgEvacuation,
) -> OsgStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if slots.is_null() && n_slots > 0 {
            return Err(null("slots"));
        }
        let attacked: BTreeSet<usize> = if n_slots == 0 {
            BTreeSet::new()
        } else {
            std::slice::from_raw_parts(slots, n_slots).iter().copied().collect()
        };
        let model = &h.analysis.surface.model;
        let unit = model
            .unit_index(text(unit_id, "unit_id")?)
            .map_err(|e| Failure(OsgStatus::UnknownUnit, e.to_string()))?;
        *out = expected_downlink(model, &attacked, unit).into();
        Ok(())
    })
}

/// Plans a delay attack keeping the last target onboard past
/// `target_slot`. A null `targets` uses the scenario's own targets.
///
/// # Safety
/// `targets` must hold `n_targets` valid strings when non-null; `out` must
/// be valid.
#[no_mangle]
pub unsafe extern "C" fn osg_plan_delay(
    handle: *const OsgScenario,
    targets: *const *const c_char,
    n_targets: usize,
    target_slot: usize,
    out: *mut *mut OsgStrategy,
) -> OsgStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let request = DelayPlanRequest {
            targets: target_list(h, targets, n_targets)?,
            target_downlink_slot: target_slot,
        };
        store_strategy(plan_delay(&h.analysis.surface, &request)?, out);
        Ok(())
    })
}

/// Plans an overflow attack dropping every target.
///
/// # Safety
/// As for [`osg_plan_delay`].
#[no_mangle]
pub unsafe extern "C" fn osg_plan_overflow(
    handle: *const OsgScenario,
    targets: *const *const c_char,
    n_targets: usize,
    out: *mut *mut OsgStrategy,
) -> OsgStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let request = OverflowPlanRequest {
            targets: target_list(h, targets, n_targets)?,
        };
        store_strategy(plan_overflow(&h.analysis.surface, &request)?, out);
        Ok(())
    })
}

/// Number of attacked slots.
///
/// # Safety
/// `strategy` must be null or a live strategy handle.
#[no_mangle]
pub unsafe extern "C" fn osg_strategy_len(strategy: *const OsgStrategy) -> usize {
    strategy.as_ref().map_or(0, |s| s.slots.len())
}

/// Total cost.
///
/// # Safety
/// `strategy` must be null or a live strategy handle.
#[no_mangle]
pub unsafe extern "C" fn osg_strategy_cost(strategy: *const OsgStrategy) -> u64 {
    strategy.as_ref().map_or(0, |s| s.strategy.total_cost)
}

/// Copies the attacked slots in ascending order into `buf`. `written`
/// receives the slot count even when the buffer is too small.
///
/// # Safety
/// `buf` must hold `capacity` elements; `written` must be valid.
#[no_mangle]
pub unsafe extern "C" fn osg_strategy_slots(
    strategy: *const OsgStrategy,
    buf: *mut usize,
    capacity: usize,
    written: *mut usize,
) -> OsgStatus {
    guard(|| {
        let s = strategy.as_ref().ok_or_else(|| null("strategy"))?;
        if written.is_null() {
            return Err(null("written"));
        }
        *written = s.slots.len();
        if capacity < s.slots.len() {
            return Err(Failure(
                OsgStatus::BufferTooSmall,
                format!("need room for {} slots", s.slots.len()),
            ));
        }
        if !s.slots.is_empty() {
            if buf.is_null() {
                return Err(null("buf"));
            }
            ptr::copy_nonoverlapping(s.slots.as_ptr(), buf, s.slots.len());
        }
        Ok(())
    })
}

/// Fate of the `index`-th target under the strategy.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn osg_strategy_outcome(
    strategy: *const OsgStrategy,
    index: usize,
    out: *mut OsgEvacuation,
) -> OsgStatus {
    guard(|| {
        let s = strategy.as_ref().ok_or_else(|| null("strategy"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = s
            .strategy
            .outcomes
            .get(index)
            .ok_or_else(|| Failure(OsgStatus::InvalidRequest, format!("target index {index} out of range")))?;
        *out = r.evacuation.into();
        Ok(())
    })
}

/// # Safety
/// `strategy` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn osg_strategy_free(strategy: *mut OsgStrategy) {
    if !strategy.is_null() {
        drop(Box::from_raw(strategy));
    }
}
