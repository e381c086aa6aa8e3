use std::ffi::CStr;
use std::ptr;

use pnms_ffi::*;

fn det(x: u32, y: u32, z: u32, s: f64) -> PnmsDetection {
    PnmsDetection { x, y, z, s }
}

fn engine(cfg: PnmsConfig) -> *mut PnmsEngine {
    let mut e = ptr::null_mut();
    assert_eq!(unsafe { pnms_engine_new(&cfg, &mut e) }, PnmsStatus::Ok);
    assert!(!e.is_null());
    e
}

fn small() -> PnmsConfig {
    PnmsConfig {
        d_max: 8,
        k: 2,
        ..pnms_config_default()
    }
}

#[test]
fn runs_and_reports_counters() {
    let e = engine(small());
    let input = [
        det(0, 0, 10, 0.9),
        det(1, 1, 10, 0.8),
        det(100, 100, 10, 0.5),
    ];
    let mut out = [det(0, 0, 0, 0.0); 8];
    let mut len = 0;
    let mut counters = PnmsCounters::default();
    let status = unsafe {
        pnms_engine_run(
            e,
            input.as_ptr(),
            input.len(),
            out.as_mut_ptr(),
            out.len(),
            &mut len,
            &mut counters,
        )
    };
    assert_eq!(status, PnmsStatus::Ok);
    assert_eq!(&out[..len], &[input[0], input[2]]);
    assert_eq!(counters.map_cells, 64);
    assert_eq!(counters.reduce_segments, 16);

    // counters are optional and the engine is reusable
    let status = unsafe {
        pnms_engine_run(
            e,
            input.as_ptr(),
            1,
            out.as_mut_ptr(),
            out.len(),
            &mut len,
            ptr::null_mut(),
        )
    };
    assert_eq!((status, len), (PnmsStatus::Ok, 1));
    unsafe { pnms_engine_free(e) };
}

#[test]
fn small_output_buffer_reports_required_length() {
    let e = engine(small());
    let input = [det(0, 0, 10, 0.9), det(50, 50, 10, 0.8)];
    let mut out = [det(0, 0, 0, 0.0); 1];
    let mut len = 0;
    let status = unsafe {
        pnms_engine_run(
            e,
            input.as_ptr(),
            2,
            out.as_mut_ptr(),
            1,
            &mut len,
            ptr::null_mut(),
        )
    };
    assert_eq!((status, len), (PnmsStatus::BufferTooSmall, 2));
    let status = unsafe {
        pnms_engine_run(
            e,
            ptr::null(),
            0,
            ptr::null_mut(),
            0,
            &mut len,
            ptr::null_mut(),
        )
    };
    assert_eq!((status, len), (PnmsStatus::Ok, 0));
    unsafe { pnms_engine_free(e) };
}

#[test]
fn errors_map_to_status_codes() {
    let mut e = ptr::null_mut();
    let bad = PnmsConfig { k: 3, ..small() };
    assert_eq!(
        unsafe { pnms_engine_new(&bad, &mut e) },
        PnmsStatus::InvalidConfig
    );
    assert!(e.is_null());
    assert_eq!(
        unsafe { pnms_engine_new(ptr::null(), &mut e) },
        PnmsStatus::NullPointer
    );
    assert_eq!(
        unsafe { pnms_engine_new(&small(), ptr::null_mut()) },
        PnmsStatus::NullPointer
    );

    let e = engine(small());
    let mut len = 7;
    let mut out = [det(0, 0, 0, 0.0); 9];
    let too_many = [det(0, 0, 10, 0.5); 9];
    let status = unsafe {
        pnms_engine_run(
            e,
            too_many.as_ptr(),
            9,
            out.as_mut_ptr(),
            9,
            &mut len,
            ptr::null_mut(),
        )
    };
    assert_eq!((status, len), (PnmsStatus::Capacity, 0));
    let invalid = [det(0, 0, 0, 0.5)];
    let status = unsafe {
        pnms_engine_run(
            e,
            invalid.as_ptr(),
            1,
            out.as_mut_ptr(),
            9,
            &mut len,
            ptr::null_mut(),
        )
    };
    assert_eq!(status, PnmsStatus::InvalidDetection);
    let nan = [det(0, 0, 4, f64::NAN)];
    let status = unsafe {
        pnms_engine_run(
            e,
            nan.as_ptr(),
            1,
            out.as_mut_ptr(),
            9,
            &mut len,
            ptr::null_mut(),
        )
    };
    assert_eq!(status, PnmsStatus::InvalidDetection);
    let status = unsafe {
        pnms_engine_run(
            e,
            ptr::null(),
            1,
            out.as_mut_ptr(),
            9,
            &mut len,
            ptr::null_mut(),
        )
    };
    assert_eq!(status, PnmsStatus::NullPointer);
    let status = unsafe {
        pnms_engine_run(
            ptr::null_mut(),
            too_many.as_ptr(),
            1,
            out.as_mut_ptr(),
            9,
            &mut len,
            ptr::null_mut(),
        )
    };
    assert_eq!(status, PnmsStatus::NullPointer);
    unsafe {
        pnms_engine_free(e);
        pnms_engine_free(ptr::null_mut());
    }
}

#[test]
fn static_strings() {
    let msg = unsafe { CStr::from_ptr(pnms_status_message(PnmsStatus::BufferTooSmall)) };
    assert_eq!(msg.to_str().unwrap(), "output buffer too small");
    let v = unsafe { CStr::from_ptr(pnms_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
