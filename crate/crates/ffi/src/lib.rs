//! C ABI over the pnms engine.
//!
//! Every entry point returns a [`PnmsStatus`]; no Rust panic crosses the
//! boundary. Engines are opaque handles created by [`pnms_engine_new`] and
//! released with [`pnms_engine_free`].

use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use pnms::{Detection, DetectionVector, Engine, NmsConfig, NmsError, TieBreak};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PnmsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidConfig = 2,
    InvalidDetection = 3,
    /// More detections than the engine's `d_max`.
    Capacity = 4,
    /// The output buffer cannot hold every survivor; `out_len` holds the
    /// required length.
    BufferTooSmall = 5,
    Internal = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PnmsTieBreak {
    PaperFaithful = 0,
    ByIndex = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PnmsDetection {
    pub x: u32,
    pub y: u32,
    /// Side length of the square window.
    pub z: u32,
    pub s: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PnmsConfig {
    pub theta: f64,
    pub d_max: usize,
    pub k: usize,
    pub workers: usize,
    pub tie_break: PnmsTieBreak,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PnmsCounters {
    pub map_cells: u64,
    pub map_writes: u64,
    pub reduce_segments: u64,
}

/// Opaque engine handle.
pub struct PnmsEngine {
    engine: Engine,
}

impl From<PnmsConfig> for NmsConfig {
    fn from(c: PnmsConfig) -> Self {
        NmsConfig {
            theta: c.theta,
            d_max: c.d_max,
            k: c.k,
            workers: c.workers,
            tie_break: match c.tie_break {
                PnmsTieBreak::PaperFaithful => TieBreak::PaperFaithful,
                PnmsTieBreak::ByIndex => TieBreak::ByIndex,
            },
        }
    }
}

impl From<&NmsError> for PnmsStatus {
    fn from(e: &NmsError) -> Self {
        match e {
            NmsError::Config(_) => PnmsStatus::InvalidConfig,
            NmsError::Validation(_) => PnmsStatus::InvalidDetection,
            NmsError::Capacity { .. } => PnmsStatus::Capacity,
            _ => PnmsStatus::Internal,
        }
    }
}

fn guard(f: impl FnOnce() -> PnmsStatus) -> PnmsStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(PnmsStatus::Internal)
}

/// Default configuration: theta 0.3, d_max 4096, k 32, one worker.
#[no_mangle]
pub extern "C" fn pnms_config_default() -> PnmsConfig {
    let c = NmsConfig::default();
    PnmsConfig {
        theta: c.theta,
        d_max: c.d_max,
        k: c.k,
        workers: c.workers,
        tie_break: PnmsTieBreak::PaperFaithful,
    }
}

/// Creates an engine and stores its handle in `*out`.
///
/// # Safety
/// `config` must point to a valid `PnmsConfig` and `out` to writable storage
/// for one pointer.
#[no_mangle]
pub unsafe extern "C" fn pnms_engine_new(
    config: *const PnmsConfig,
    out: *mut *mut PnmsEngine,
) -> PnmsStatus {
    guard(|| {
        if config.is_null() || out.is_null() {
            return PnmsStatus::NullPointer;
        }
        *out = std::ptr::null_mut();
        match Engine::new((*config).into()) {
            Ok(engine) => {
                *out = Box::into_raw(Box::new(PnmsEngine { engine }));
                PnmsStatus::Ok
            }
            Err(e) => (&e).into(),
        }
    })
}

/// Releases an engine. Null is ignored.
///
/// # Safety
/// `engine` must be null or a handle from `pnms_engine_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pnms_engine_free(engine: *mut PnmsEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Runs NMS on `n` detections and copies the survivors, in input order, to
/// `out`. `counters` may be null.
///
/// # Safety
/// `engine` must be a live handle, `detections` must point to `n` readable
/// elements (or be null when `n` is 0), `out` to `out_cap` writable elements
/// (or be null when `out_cap` is 0), and `out_len` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn pnms_engine_run(
    engine: *mut PnmsEngine,
    detections: *const PnmsDetection,
    n: usize,
    out: *mut PnmsDetection,
    out_cap: usize,
    out_len: *mut usize,
    counters: *mut PnmsCounters,
) -> PnmsStatus {
    guard(|| {
        if engine.is_null()
            || out_len.is_null()
            || (detections.is_null() && n > 0)
            || (out.is_null() && out_cap > 0)
        {
            return PnmsStatus::NullPointer;
        }
        *out_len = 0;
        let engine = &mut (*engine).engine;
        let input = if n == 0 {
            &[][..]
        } else {
            slice::from_raw_parts(detections, n)
        };
        let dets = input
            .iter()
            .map(|d| Detection::new(d.x, d.y, d.z, d.s))
            .collect();
        let vector = match DetectionVector::new(dets, engine.config().d_max) {
            Ok(v) => v,
            Err(e) => return (&e).into(),
        };
        let (result, work) = match engine.run(&vector) {
            Ok(r) => r,
            Err(e) => return (&e).into(),
        };
        if !counters.is_null() {
            *counters = PnmsCounters {
                map_cells: work.map_cells,
                map_writes: work.map_writes,
                reduce_segments: work.reduce_segments,
            };
        }
        *out_len = result.survivors.len();
        if result.survivors.len() > out_cap {
            return PnmsStatus::BufferTooSmall;
        }
        for (i, d) in result.survivors.iter().enumerate() {
            *out.add(i) = PnmsDetection {
                x: d.x,
                y: d.y,
                z: d.z,
                s: d.s,
            };
        }
        PnmsStatus::Ok
    })
}

/// Static, NUL-terminated description of a status code.
#[no_mangle]
pub extern "C" fn pnms_status_message(status: PnmsStatus) -> *const c_char {
    let msg: &'static CStr = match status {
        PnmsStatus::Ok => c"ok",
        PnmsStatus::NullPointer => c"null pointer argument",
        PnmsStatus::InvalidConfig => c"invalid configuration",
        PnmsStatus::InvalidDetection => c"invalid detection",
        PnmsStatus::Capacity => c"more detections than d_max",
        PnmsStatus::BufferTooSmall => c"output buffer too small",
        PnmsStatus::Internal => c"internal error",
    };
    msg.as_ptr()
}

/// Library version as a static, NUL-terminated string.
#[no_mangle]
pub extern "C" fn pnms_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
