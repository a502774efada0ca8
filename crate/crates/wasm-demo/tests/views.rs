use spectral_spike_wasm_demo::{backends_view, single_spike_view, simulate_view};

#[test]
fn single_spike_atom_appears_above_the_critical_spike() {
    let sup = single_spike_view(2.2, 0.5, 50).unwrap();
    assert_eq!(sup["supercritical"], true);
    assert!((sup["poles"][0].as_f64().unwrap() - 3.116_666_666_666_667).abs() < 1e-10);
    assert!((sup["weights"][0].as_f64().unwrap() - sup["w0"].as_f64().unwrap()).abs() < 1e-10);
    for p in sup["curve"].as_array().unwrap() {
        assert!((p[1].as_f64().unwrap() - p[2].as_f64().unwrap()).abs() < 1e-10);
    }
    let sub = single_spike_view(1.4, 0.5, 10).unwrap();
    assert_eq!(sub["poles"].as_array().unwrap().len(), 0);
    assert!(sub["x0"].is_null());
    assert!(single_spike_view(0.9, 0.5, 10).is_err());
}

#[test]
fn simulation_view_detects_strong_spikes() {
    let v = simulate_view(600, 0.5, 1.0, "8, 6", 2, 3, 40).unwrap();
    assert_eq!(v["r_hat"], 2);
    assert_eq!(v["m"], 1200);
    assert_eq!(v["curve"].as_array().unwrap().len(), 40);
    assert_eq!(v["predicted"][0]["supercritical"], true);
    assert!(simulate_view(10_000, 0.5, 1.0, "", 1, 0, 10).is_err());
    assert!(simulate_view(100, 0.5, 1.0, "4,x", 1, 0, 10).is_err());
}

#[test]
fn backend_view_reports_matching_poles() {
    let v = backends_view("1.5,0.8", "0.9,0.6", 1.0, 0.7, 2000).unwrap();
    assert_eq!(
        v["connection"]["locations"].as_array().unwrap().len(),
        v["finite_section"]["locations"].as_array().unwrap().len()
    );
    assert!(v["discrepancy"].as_f64().unwrap() < 1e-6);
    assert!(backends_view("1.5", "", 1.0, 0.7, 2000).is_err());
}
