//! Exercises the C ABI through the extern functions exactly as a foreign
//! binding would: status codes, out-pointer discipline, error messages, and
//! agreement with the underlying library.

use std::ffi::{CStr, CString};
use std::ptr;

use ucal_ffi::*;

unsafe fn last_error() -> String {
    let ptr = ucal_last_error_message();
    assert!(!ptr.is_null(), "expected an error message");
    let msg = CStr::from_ptr(ptr).to_string_lossy().into_owned();
    ucal_string_free(ptr);
    msg
}

fn make_binary(preds: &[f64], outs: &[u8]) -> *mut ucal_transcript {
    let mut handle = ptr::null_mut();
    let status = unsafe {
        ucal_transcript_new_binary(preds.as_ptr(), outs.as_ptr(), preds.len(), &mut handle)
    };
    assert_eq!(status, ucal_status::Ok);
    assert!(!handle.is_null());
    handle
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(ucal_version()) };
    assert!(!v.to_str().unwrap().is_empty());
}

#[test]
fn binary_transcript_metrics_match_library() {
    let preds = [1.0, 1.0, 0.0, 0.25];
    let outs = [1u8, 1, 0, 0];
    let handle = make_binary(&preds, &outs);
    unsafe {
        assert_eq!(ucal_transcript_len(handle), 4);
        assert_eq!(ucal_transcript_arity(handle), 2);

        let t = ucal::metrics::Transcript::binary(preds.to_vec(), outs.to_vec()).unwrap();
        let mut value = f64::NAN;
        assert_eq!(ucal_cal_l1(handle, &mut value), ucal_status::Ok);
        assert_eq!(value, ucal::metrics::cal_l1(&t).unwrap());

        assert_eq!(ucal_cal_l2(handle, &mut value), ucal_status::Ok);
        assert_eq!(value, ucal::metrics::cal_l2(&t).unwrap());

        assert_eq!(ucal_reg_brier(handle, &mut value), ucal_status::Ok);
        let brier = ucal::scoring::BivariateRule::brier();
        assert_eq!(value, ucal::metrics::reg(&brier, &t).unwrap());

        assert_eq!(ucal_vreg(handle, 0.4, &mut value), ucal_status::Ok);
        assert_eq!(value, ucal::metrics::vreg(0.4, &t).unwrap());

        let mut witness = f64::NAN;
        assert_eq!(ucal_vcal(handle, &mut value, &mut witness), ucal_status::Ok);
        let (vc, w) = ucal::metrics::vcal(&t).unwrap();
        assert_eq!(value, vc);
        assert_eq!(witness, w.v);

        ucal_transcript_free(handle);
    }
}

#[test]
fn multiclass_transcript_and_vector_calibration() {
    let preds = [0.5, 0.25, 0.25, 0.1, 0.2, 0.7];
    let outs = [0u32, 2];
    let mut handle = ptr::null_mut();
    unsafe {
        let status =
            ucal_transcript_new_multiclass(3, preds.as_ptr(), outs.as_ptr(), 2, &mut handle);
        assert_eq!(status, ucal_status::Ok);
        assert_eq!(ucal_transcript_arity(handle), 3);
        let mut value = f64::NAN;
        assert_eq!(ucal_cal_l1_multiclass(handle, &mut value), ucal_status::Ok);
        assert!(value.is_finite());
        // Binary-only metric on a multiclass handle: InvalidArgument.
        assert_eq!(ucal_cal_l2(handle, &mut value), ucal_status::InvalidArgument);
        assert!(last_error().contains("arity"));
        ucal_transcript_free(handle);
    }
}

#[test]
fn invalid_inputs_set_errors() {
    unsafe {
        let mut handle = ptr::null_mut();
        // Probability outside [0,1].
        let status = ucal_transcript_new_binary([1.5].as_ptr(), [0u8].as_ptr(), 1, &mut handle);
        assert_eq!(status, ucal_status::InvalidArgument);
        assert!(last_error().contains("outside"));

        // Null pointers.
        let status = ucal_transcript_new_binary(ptr::null(), [0u8].as_ptr(), 1, &mut handle);
        assert_eq!(status, ucal_status::NullPointer);

        let mut value = 0.0;
        assert_eq!(ucal_cal_l1(ptr::null(), &mut value), ucal_status::NullPointer);

        // Unknown fixture.
        let name = CString::new("nope").unwrap();
        let status = ucal_fixture_generate(name.as_ptr(), 100, &mut handle);
        assert_eq!(status, ucal_status::InvalidArgument);
        assert!(last_error().contains("unknown fixture"));
    }
}

#[test]
fn lp_value_and_witness_json() {
    // The 80/20 extreme-prediction fixture: LP value must be at least the
    // wager agent's regret 0.1 T.
    let name = CString::new("low_brier").unwrap();
    let mut handle = ptr::null_mut();
    unsafe {
        assert_eq!(
            ucal_fixture_generate(name.as_ptr(), 200, &mut handle),
            ucal_status::Ok
        );
        let mut value = f64::NAN;
        assert_eq!(ucal_max_agent_reg(handle, 0.0, &mut value), ucal_status::Ok);
        assert!(value >= 20.0 - 1e-9, "lp value {value}");

        let mut json = ptr::null_mut();
        assert_eq!(
            ucal_max_agent_reg_witness_json(handle, 0.0, &mut json),
            ucal_status::Ok
        );
        let text = CStr::from_ptr(json).to_string_lossy().into_owned();
        ucal_string_free(json);
        assert!(text.contains("\"anchors\""), "{text}");
        ucal_transcript_free(handle);
    }
}

#[test]
fn forecaster_runs_are_deterministic_per_seed() {
    let outcomes: Vec<u8> = (0..64).map(|t| (t < 32) as u8).collect();
    unsafe {
        let mut a = ptr::null_mut();
        let mut b = ptr::null_mut();
        assert_eq!(ucal_run_hedge(outcomes.as_ptr(), 64, 7, &mut a), ucal_status::Ok);
        assert_eq!(ucal_run_hedge(outcomes.as_ptr(), 64, 7, &mut b), ucal_status::Ok);
        let mut ja = ptr::null_mut();
        let mut jb = ptr::null_mut();
        assert_eq!(ucal_report_json(a, &mut ja), ucal_status::Ok);
        assert_eq!(ucal_report_json(b, &mut jb), ucal_status::Ok);
        let sa = CStr::from_ptr(ja).to_string_lossy().into_owned();
        let sb = CStr::from_ptr(jb).to_string_lossy().into_owned();
        ucal_string_free(ja);
        ucal_string_free(jb);
        assert_eq!(sa, sb);
        assert!(sa.contains("\"vcal\""));
        ucal_transcript_free(a);
        ucal_transcript_free(b);

        let mc: Vec<u32> = (0..30).map(|t| t % 3).collect();
        let mut m = ptr::null_mut();
        assert_eq!(ucal_run_ftpl(mc.as_ptr(), 30, 3, 1, &mut m), ucal_status::Ok);
        assert_eq!(ucal_transcript_arity(m), 3);
        ucal_transcript_free(m);
    }
}

#[test]
fn csv_roundtrip_through_the_abi() {
    let dir = std::env::temp_dir().join(format!("ucal_ffi_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("t.csv");
    let cpath = CString::new(path.to_str().unwrap()).unwrap();

    let handle = make_binary(&[0.5, 0.123456789], &[1, 0]);
    unsafe {
        assert_eq!(ucal_transcript_write_csv(handle, cpath.as_ptr()), ucal_status::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(ucal_transcript_read_csv(cpath.as_ptr(), &mut back), ucal_status::Ok);
        let mut a = f64::NAN;
        let mut b = f64::NAN;
        assert_eq!(ucal_cal_l1(handle, &mut a), ucal_status::Ok);
        assert_eq!(ucal_cal_l1(back, &mut b), ucal_status::Ok);
        assert_eq!(a.to_bits(), b.to_bits());
        // Missing file surfaces as an io error.
        let missing = CString::new(dir.join("missing.csv").to_str().unwrap()).unwrap();
        let mut none = ptr::null_mut();
        assert_eq!(
            ucal_transcript_read_csv(missing.as_ptr(), &mut none),
            ucal_status::IoError
        );
        ucal_transcript_free(handle);
        ucal_transcript_free(back);
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn generated_header_covers_the_surface() {
    let header = std::fs::read_to_string(
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include/ucal.h"),
    )
    .expect("committed header");
    for decl in [
        "ucal_transcript_new_binary",
        "ucal_vcal",
        "ucal_max_agent_reg",
        "ucal_string_free",
        "UCAL_STATUS_OK",
        "struct ucal_transcript",
    ] {
        assert!(header.contains(decl), "header missing {decl}");
    }
}

#[test]
fn header_compiles_as_c() {
    // Syntax-check the generated header with the system C compiler when one
    // is available.
    let include_dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = std::env::temp_dir().join(format!("ucal_hdr_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let source = dir.join("probe.c");
    std::fs::write(
        &source,
        "#include \"ucal.h\"\nint main(void) { return (int)UCAL_STATUS_OK; }\n",
    )
    .unwrap();
    let result = std::process::Command::new("cc")
        .arg("-fsyntax-only")
        .arg("-Wall")
        .arg("-Werror")
        .arg(format!("-I{}", include_dir.display()))
        .arg(&source)
        .output();
    match result {
        Err(_) => eprintln!("no C compiler on PATH; header syntax check skipped"),
        Ok(out) => assert!(
            out.status.success(),
            "header failed to compile:\n{}",
            String::from_utf8_lossy(&out.stderr)
        ),
    }
    std::fs::remove_dir_all(&dir).unwrap();
}
