use pnc_demo::{af_curve, dnf_scatter, train_small};
use serde_json::Value;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn af_curve_shape_and_saturation() {
    let v = parse(&af_curve(2, "awgn", &[0.0, 30.0], 20_000, 1).unwrap());
    let pts = v.as_array().unwrap();
    assert_eq!(pts.len(), 2);
    assert_eq!(pts[0]["snr_db"], 0.0);
    assert!(pts[1]["sum_rate"].as_f64().unwrap() >= 3.9);
    assert!(af_curve(3, "awgn", &[0.0], 100, 1).is_err());
    assert!(af_curve(2, "fog", &[0.0], 100, 1).is_err());
    assert!(af_curve(2, "awgn", &[0.0], 0, 1).is_err());
}

#[test]
fn af_curve_is_deterministic() {
    let a = af_curve(4, "rayleigh", &[10.0], 2_000, 3).unwrap();
    assert_eq!(a, af_curve(4, "rayleigh", &[10.0], 2_000, 3).unwrap());
}

#[test]
fn train_small_reports_constellations() {
    let v = parse(&train_small("no_csi", 5.0, 2, 0).unwrap());
    assert_eq!(v["loss_history"].as_array().unwrap().len(), 2);
    assert_eq!(v["terminal"].as_array().unwrap().len(), 4);
    assert_eq!(v["relay"].as_array().unwrap().len(), 16);
    assert_eq!(v["relay"][6]["label"], "0110");
    let power: f64 = v["terminal"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["i"].as_f64().unwrap().powi(2) + p["q"].as_f64().unwrap().powi(2))
        .sum::<f64>()
        / 4.0;
    assert!((power - 1.0).abs() < 0.02);
    let r = v["learned_sum_rate"].as_f64().unwrap();
    assert!((0.0..=4.0).contains(&r));
    assert!(train_small("no_csi", 5.0, 0, 0).is_err());
    assert!(train_small("psychic", 5.0, 1, 0).is_err());
}

#[test]
fn dnf_scatter_is_exact_without_noise() {
    let v = parse(&dnf_scatter(200.0, 500, 2).unwrap());
    assert_eq!(v["relay_error_rate"], 0.0);
    for s in v["samples"].as_array().unwrap() {
        assert_eq!(s["x_r"].as_f64().unwrap() > 0.0, s["same"].as_bool().unwrap());
    }
    let noisy = parse(&dnf_scatter(0.0, 2_000, 2).unwrap());
    let e = noisy["relay_error_rate"].as_f64().unwrap();
    assert!(e > 0.05 && e < 0.5, "{e}");
}
