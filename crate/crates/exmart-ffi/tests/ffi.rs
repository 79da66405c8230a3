//! Exercises the C ABI the way a foreign caller would: through raw
//! pointers and status codes only.

use exmart_ffi::*;

fn default_config() -> ExmartConfig {
    let mut config = std::mem::MaybeUninit::<ExmartConfig>::uninit();
    let status = unsafe { exmart_config_default(config.as_mut_ptr()) };
    assert_eq!(status, ExmartStatus::Ok);
    unsafe { config.assume_init() }
}

fn new_detector(config: &ExmartConfig) -> *mut ExmartDetector {
    let mut handle: *mut ExmartDetector = std::ptr::null_mut();
    let status = unsafe { exmart_detector_new(config, &mut handle) };
    assert_eq!(status, ExmartStatus::Ok);
    assert!(!handle.is_null());
    handle
}

#[test]
fn null_pointer_statuses() {
    assert_eq!(
        unsafe { exmart_config_default(std::ptr::null_mut()) },
        ExmartStatus::NullPointer
    );
    let config = default_config();
    unsafe {
        assert_eq!(
            exmart_detector_new(std::ptr::null(), &mut std::ptr::null_mut()),
            ExmartStatus::NullPointer
        );
        assert_eq!(
            exmart_detector_new(&config, std::ptr::null_mut()),
            ExmartStatus::NullPointer
        );
        let mut step = std::mem::zeroed::<ExmartStep>();
        assert_eq!(
            exmart_detector_push(std::ptr::null_mut(), [1.0].as_ptr(), 1, &mut step),
            ExmartStatus::NullPointer
        );
        assert_eq!(exmart_detector_alarm_count(std::ptr::null()), 0);
        assert!(!exmart_detector_halted(std::ptr::null()));
        exmart_detector_free(std::ptr::null_mut()); // no-op
    }
}

#[test]
fn invalid_config_is_reported() {
    let mut config = default_config();
    config.alpha = 0.0;
    let mut handle: *mut ExmartDetector = std::ptr::null_mut();
    let status = unsafe { exmart_detector_new(&config, &mut handle) };
    assert_eq!(status, ExmartStatus::InvalidConfig);
    assert!(handle.is_null());

    // doob + plugin pairing is rejected
    let mut config = default_config();
    config.test = ExmartTest::Doob;
    config.betting = ExmartBetting::Plugin;
    let status = unsafe { exmart_detector_new(&config, &mut handle) };
    assert_eq!(status, ExmartStatus::InvalidConfig);
}

#[test]
fn detector_lifecycle_detects_a_shift() {
    let mut config = default_config();
    config.seed = 9;
    config.train_size = 50;
    config.window = 100;
    let detector = new_detector(&config);

    // crude deterministic uniform noise stream, then a far shift
    let mut state = 0x9E3779B97F4A7C15u64;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };

    let mut step = unsafe { std::mem::zeroed::<ExmartStep>() };
    let mut training_rows = 0;
    let mut alarm_seen = false;
    for i in 0..600 {
        let x = if i < 300 { next() } else { next() + 50.0 };
        let status = unsafe { exmart_detector_push(detector, [x].as_ptr(), 1, &mut step) };
        assert_eq!(status, ExmartStatus::Ok);
        if step.in_training {
            training_rows += 1;
        }
        if step.alarm {
            alarm_seen = true;
            assert!(step.statistic > step.threshold);
        }
        if step.halted {
            break;
        }
    }
    assert_eq!(training_rows, 50);
    assert!(alarm_seen);
    unsafe {
        assert_eq!(exmart_detector_alarm_count(detector), 1);
        assert!(exmart_detector_halted(detector));
        // further pushes are ignored but succeed
        let status = exmart_detector_push(detector, [0.0].as_ptr(), 1, &mut step);
        assert_eq!(status, ExmartStatus::Ok);
        assert!(step.halted);
        exmart_detector_free(detector);
    }
}

#[test]
fn invalid_samples_are_rejected() {
    let mut config = default_config();
    config.train_size = 5;
    let detector = new_detector(&config);
    let mut step = unsafe { std::mem::zeroed::<ExmartStep>() };
    unsafe {
        let status = exmart_detector_push(detector, [f64::NAN].as_ptr(), 1, &mut step);
        assert_eq!(status, ExmartStatus::InvalidData);
        let status = exmart_detector_push(detector, [1.0].as_ptr(), 0, &mut step);
        assert_eq!(status, ExmartStatus::InvalidData);
        // dimension change after the first accepted sample
        let status = exmart_detector_push(detector, [1.0].as_ptr(), 1, &mut step);
        assert_eq!(status, ExmartStatus::Ok);
        let status = exmart_detector_push(detector, [1.0, 2.0].as_ptr(), 2, &mut step);
        assert_eq!(status, ExmartStatus::InvalidData);
        exmart_detector_free(detector);
    }
}

#[test]
fn threshold_helpers_match_library() {
    let azuma = exmart_azuma_threshold(100, 0.05);
    assert!((azuma - 27.162030314812).abs() < 1e-9);
    let doob = exmart_doob_threshold(100, 0.05);
    assert!((doob - 12.909944487358).abs() < 1e-9);
    assert_eq!(exmart_ffi_version(), 100);
}

#[test]
fn deterministic_across_handles() {
    let mut config = default_config();
    config.seed = 33;
    config.train_size = 20;
    let a = new_detector(&config);
    let b = new_detector(&config);
    let mut step_a = unsafe { std::mem::zeroed::<ExmartStep>() };
    let mut step_b = unsafe { std::mem::zeroed::<ExmartStep>() };
    for i in 0..200 {
        let x = (i as f64 * 0.7).sin() * 2.0;
        unsafe {
            assert_eq!(
                exmart_detector_push(a, [x].as_ptr(), 1, &mut step_a),
                ExmartStatus::Ok
            );
            assert_eq!(
                exmart_detector_push(b, [x].as_ptr(), 1, &mut step_b),
                ExmartStatus::Ok
            );
        }
        assert_eq!(step_a.p_value, step_b.p_value);
        assert_eq!(step_a.martingale, step_b.martingale);
    }
    unsafe {
        exmart_detector_free(a);
        exmart_detector_free(b);
    }
}
