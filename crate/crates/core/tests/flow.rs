use loewner_core::drivers::{sample_driver, DriverKind, DriverPath, FiniteEnergyDriver, TimeGrid};
use loewner_core::flow::*;
use num_complex::Complex64;

#[test]
fn zero_driver_maps_match_closed_forms() {
    let u = DriverPath::zero(TimeGrid::new(1.0, 128).unwrap());
    let cfg = FlowConfig::rk4(8);
    let g = forward_point(&u, Complex64::new(0.0, 3.0), 1.0, &cfg).unwrap().value().unwrap();
    assert!((g - Complex64::new(0.0, 5f64.sqrt())).norm() < 1e-6);
    let f = eval_f(&u, Complex64::new(0.0, 5f64.sqrt()), 1.0, &cfg).unwrap();
    assert!((f - Complex64::new(0.0, 3.0)).norm() < 1e-6);
    for &(t, y) in &[(0.25, 1.0), (0.5, 0.1), (1.0, 0.01)] {
        let k = u.grid().index_of(t).unwrap();
        let (_, d) = eval_f_with_derivative_index(&u, Complex64::new(0.0, y), k, &cfg).unwrap();
        let exact = y / (y * y + 4.0 * t).sqrt();
        assert!((d.norm() - exact).abs() < 1e-6, "t={t} y={y}");
    }
}

#[test]
fn backward_and_forward_flows_invert_each_other_on_brownian_paths() {
    let g = TimeGrid::new(1.0, 2048).unwrap();
    let u = sample_driver(&DriverKind::Brownian { kappa: 1.0 }, g, 17).unwrap();
    let cfg = FlowConfig::rk4(8);
    for &z in &[Complex64::new(0.2, 0.5), Complex64::new(-1.0, 0.3)] {
        let w = eval_f(&u, z, 1.0, &cfg).unwrap();
        let back = forward_point(&u, w, 1.0, &cfg).unwrap().value().unwrap() - u.value(2048);
        assert!((back - z).norm() < 1e-5, "{z}: {back}");
    }
}

#[test]
fn slit_and_rk4_schemes_agree_on_derivative() {
    let g = TimeGrid::new(1.0, 1024).unwrap();
    let h = FiniteEnergyDriver::from_derivative_fn(g, |s| 2.0 * (3.0 * s).sin()).unwrap();
    let z = Complex64::new(0.1, 0.05);
    let (_, a) = eval_f_with_derivative_index(h.path(), z, 1024, &FlowConfig::rk4(8)).unwrap();
    let (_, b) = eval_f_with_derivative_index(h.path(), z, 1024, &FlowConfig::slit(8)).unwrap();
    assert!((a - b).norm() / a.norm() < 1e-3);
}
