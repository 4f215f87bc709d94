//! C ABI over the `pbqos` crate.
//!
//! Every fallible function returns a [`PbqosStatus`]; on failure the message
//! is available from [`pbqos_last_error`] on the same thread. Handles are
//! opaque and must be released with their `_free` function. Strings
//! returned through out-parameters are owned by the caller and released
//! with [`pbqos_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use pbqos::harness::{load_config, run_scenario, write_outputs, LoadedScenario, RunOptions, RunResult};
use pbqos::mms::{bandwidth, update_ewma, utilization, CounterSample, MibObject};
use pbqos::policy::{parse_policy_file, PolicyRule};
use pbqos::rms::{compile_with, ClassAllocator, TcRenderer};
use pbqos::simcore::{InterfaceId, NodeId, SimTime};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PbqosStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Compile = 4,
    Config = 5,
    Run = 6,
    Io = 7,
    Measure = 8,
    NotRun = 9,
    OutOfRange = 10,
    Panic = 11,
}

/// Parsed policy rules.
pub struct PbqosPolicySet {
    rules: Vec<PolicyRule>,
}

/// A loaded scenario and the result of its last run.
pub struct PbqosScenario {
    scenario: LoadedScenario,
    result: Option<RunResult>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(PbqosStatus, String);

impl Failure {
    fn new(status: PbqosStatus, msg: impl ToString) -> Self {
        Failure(status, msg.to_string())
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PbqosStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PbqosStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            PbqosStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(PbqosStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure::new(PbqosStatus::InvalidUtf8, format!("{name}: {e}")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::new(PbqosStatus::NullArgument, format!("{name} is null")))
}

unsafe fn mut_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure::new(PbqosStatus::NullArgument, format!("{name} is null")))
}

unsafe fn put<T>(out: *mut T, v: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::new(PbqosStatus::NullArgument, "out is null"));
    }
    out.write(v);
    Ok(())
}

fn owned_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|e| Failure::new(PbqosStatus::InvalidUtf8, e))
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pbqos_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. Valid until
/// the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn pbqos_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` is NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pbqos_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// ---------------------------------------------------------------- policies

/// Parses a policy file's text.
///
/// # Safety
/// `text` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn pbqos_policy_parse(text: *const c_char, out: *mut *mut PbqosPolicySet) -> PbqosStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let rules = parse_policy_file(text).map_err(|e| Failure::new(PbqosStatus::Parse, e))?;
        put(out, Box::into_raw(Box::new(PbqosPolicySet { rules })))
    })
}

/// Number of rules in `set`; 0 for NULL.
///
/// # Safety
/// `set` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pbqos_policy_count(set: *const PbqosPolicySet) -> usize {
    set.as_ref().map_or(0, |s| s.rules.len())
}

/// Canonical text of rule `index`.
///
/// # Safety
/// `set` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn pbqos_policy_rule_text(
    set: *const PbqosPolicySet,
    index: usize,
    out: *mut *mut c_char,
) -> PbqosStatus {
    guard(|| {
        let set = ref_arg(set, "set")?;
        let r = set
            .rules
            .get(index)
            .ok_or_else(|| Failure::new(PbqosStatus::OutOfRange, format!("no rule at index {index}")))?;
        put(out, owned_string(r.to_string())?)
    })
}

/// tc commands for every rule, one per line.
///
/// # Safety
/// `set` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn pbqos_policy_render_tc(set: *const PbqosPolicySet, out: *mut *mut c_char) -> PbqosStatus {
    guard(|| {
        let set = ref_arg(set, "set")?;
        let renderer = TcRenderer::default();
        let mut alloc = ClassAllocator::default();
        let mut text = String::new();
        for r in &set.rules {
            let cmds = compile_with(r, &mut alloc).map_err(|e| Failure::new(PbqosStatus::Compile, e))?;
            for line in cmds.iter().flat_map(|c| renderer.render(c)) {
                text.push_str(&line);
                text.push('\n');
            }
        }
        put(out, owned_string(text)?)
    })
}

/// # Safety
/// `set` is NULL or a live handle, which is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn pbqos_policy_free(set: *mut PbqosPolicySet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

// ---------------------------------------------------------------- scenarios

/// Loads a scenario file and its policy file.
///
/// # Safety
/// `path` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn pbqos_scenario_load(path: *const c_char, out: *mut *mut PbqosScenario) -> PbqosStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let scenario = load_config(Path::new(path)).map_err(|e| Failure::new(PbqosStatus::Config, e))?;
        put(out, Box::into_raw(Box::new(PbqosScenario { scenario, result: None })))
    })
}

/// # Safety
/// `sc` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn pbqos_scenario_set_seed(sc: *mut PbqosScenario, seed: u64) -> PbqosStatus {
    guard(|| {
        mut_arg(sc, "scenario")?.scenario.config.seed = seed;
        Ok(())
    })
}

/// Sets the time compression factor; rejected values leave the scenario
/// unchanged.
///
/// # Safety
/// `sc` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn pbqos_scenario_set_time_compression(sc: *mut PbqosScenario, k: u64) -> PbqosStatus {
    guard(|| {
        let cfg = &mut mut_arg(sc, "scenario")?.scenario.config;
        let old = std::mem::replace(&mut cfg.time_compression, k);
        cfg.validate().map_err(|e| {
            cfg.time_compression = old;
            Failure::new(PbqosStatus::Config, e)
        })
    })
}

/// Runs the scenario, replacing any earlier result.
///
/// # Safety
/// `sc` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn pbqos_scenario_run(sc: *mut PbqosScenario) -> PbqosStatus {
    guard(|| {
        let sc = mut_arg(sc, "scenario")?;
        sc.result = None;
        let r = run_scenario(&sc.scenario, &RunOptions::default()).map_err(|e| Failure::new(PbqosStatus::Run, e))?;
        sc.result = Some(r);
        Ok(())
    })
}

unsafe fn last_result<'a>(sc: *const PbqosScenario) -> Result<(&'a LoadedScenario, &'a RunResult), Failure> {
    let sc = ref_arg(sc, "scenario")?;
    let r = sc
        .result
        .as_ref()
        .ok_or_else(|| Failure::new(PbqosStatus::NotRun, "scenario has not been run"))?;
    Ok((&sc.scenario, r))
}

/// Summary of the last run as JSON.
///
/// # Safety
/// `sc` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn pbqos_scenario_summary_json(sc: *const PbqosScenario, out: *mut *mut c_char) -> PbqosStatus {
    guard(|| {
        let (_, r) = last_result(sc)?;
        let json = serde_json::to_string_pretty(&r.summary).map_err(|e| Failure::new(PbqosStatus::Io, e))?;
        put(out, owned_string(json)?)
    })
}

/// Writes the series, audit log, summary and manifest of the last run.
///
/// # Safety
/// `sc` is a live handle; `dir` is a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn pbqos_scenario_write_outputs(sc: *const PbqosScenario, dir: *const c_char) -> PbqosStatus {
    guard(|| {
        let (s, r) = last_result(sc)?;
        let dir = str_arg(dir, "dir")?;
        write_outputs(Path::new(dir), s, r).map_err(|e| Failure::new(PbqosStatus::Io, e))
    })
}

/// # Safety
/// `sc` is NULL or a live handle, which is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn pbqos_scenario_free(sc: *mut PbqosScenario) {
    if !sc.is_null() {
        drop(Box::from_raw(sc));
    }
}

// ---------------------------------------------------------------- estimators

fn octets(value: u32, t_ps: u64) -> CounterSample {
    CounterSample {
        oid: MibObject::IfOutOctets,
        iface: InterfaceId {
            node: NodeId(0),
            index: 0,
        },
        value,
        t: SimTime::from_ps(t_ps),
    }
}

/// Throughput in bit/s between two 32-bit octet counter readings taken at
/// picosecond timestamps. One counter wrap is allowed.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn pbqos_bandwidth(
    prev_octets: u32,
    prev_t_ps: u64,
    cur_octets: u32,
    cur_t_ps: u64,
    out: *mut f64,
) -> PbqosStatus {
    guard(|| {
        let bw = bandwidth(&octets(prev_octets, prev_t_ps), &octets(cur_octets, cur_t_ps))
            .map_err(|e| Failure::new(PbqosStatus::Measure, e))?;
        put(out, bw)
    })
}

/// Utilization in percent of `if_speed_bps`.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn pbqos_utilization(
    prev_octets: u32,
    prev_t_ps: u64,
    cur_octets: u32,
    cur_t_ps: u64,
    if_speed_bps: u64,
    out: *mut f64,
) -> PbqosStatus {
    guard(|| {
        let u = utilization(
            &octets(prev_octets, prev_t_ps),
            &octets(cur_octets, cur_t_ps),
            if_speed_bps,
        )
        .map_err(|e| Failure::new(PbqosStatus::Measure, e))?;
        put(out, u)
    })
}

/// One EWMA step. With `has_prev` false the sample initializes the average.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn pbqos_ewma(prev: f64, has_prev: bool, sample: f64, alpha: f64, out: *mut f64) -> PbqosStatus {
    guard(|| {
        let v =
            update_ewma(has_prev.then_some(prev), sample, alpha).map_err(|e| Failure::new(PbqosStatus::Measure, e))?;
        put(out, v)
    })
}
