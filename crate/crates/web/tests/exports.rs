use gestgrasp_web::{canonicalize_view, lambda_sweep, point_at, DEMO_CROP};
use serde_json::Value;

fn parse(s: Result<String, String>) -> Value {
    serde_json::from_str(&s.unwrap()).unwrap()
}

#[test]
fn pointing_lands_near_the_aimed_pixel() {
    for (seed, u, v) in [(1, 80.0, 60.0), (2, 70.0, 55.0), (3, 60.0, 50.0), (5, 90.0, 64.0)] {
        let v = parse(point_at(seed, u, v));
        assert_eq!(v["depth"].as_array().unwrap().len(), 160 * 120);
        assert_eq!(v["hand"].as_array().unwrap().len(), 21);
        assert!(v["error"].is_null(), "{}", v["error"]);
        assert!(v["error_px"].as_f64().unwrap() < 3.0, "seed {seed}: {}", v["error_px"]);
        assert_eq!(v["result"]["crop"]["w"], DEMO_CROP);
    }
}

#[test]
fn pointing_outside_the_scene_is_an_error() {
    let e = point_at(1, -500.0, -500.0).unwrap_err();
    assert!(e.starts_with("[input]"), "{e}");
}

#[test]
fn canonical_form_ignores_the_view() {
    let v = parse(canonicalize_view(4, 35.0, -60.0, 120.0, 0.3));
    assert!(v["max_abs_diff"].as_f64().unwrap() < 1e-6);
    assert!((v["similarity"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!(canonicalize_view(4, 0.0, 0.0, 0.0, 0.0).unwrap_err().starts_with("[input]"));
}

#[test]
fn sweep_deviation_never_increases() {
    let v = parse(lambda_sweep(7, 2.0, 40, true, 20.0));
    let sweep = v["sweep"].as_array().unwrap();
    assert_eq!(sweep.len(), 41);
    assert_eq!(v["candidates"].as_array().unwrap().len(), 24);
    let devs: Vec<f64> = sweep.iter().map(|p| p["deviation"].as_f64().unwrap()).collect();
    assert!(devs.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{devs:?}");
    assert!(lambda_sweep(7, -1.0, 10, true, 20.0).is_err());
}
