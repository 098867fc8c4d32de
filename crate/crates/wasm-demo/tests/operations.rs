use slabsteady_wasm_demo::{triangle_negativities, triangle_spectrum, werner};

#[test]
fn werner_values() {
    let v = werner(0.5).unwrap();
    assert!((v[0] - 0.25).abs() < 1e-12 && (v[1] - 0.25).abs() < 1e-12);
    assert!(werner(0.2).unwrap().iter().all(|&x| x.abs() < 1e-12));
    assert!(werner(1.5).is_err());
}

#[test]
fn triangle_operations() {
    let n = triangle_negativities(1.0, 5.0).unwrap();
    assert_eq!(n.len(), 3);
    assert!(n[0] > 0.005 && n[0] < 0.2, "{n:?}");
    // equilibrium: nothing left
    let eq = triangle_negativities(1.0, 300.0).unwrap();
    assert!(eq.iter().all(|&x| x < 1e-8), "{eq:?}");
    let s = triangle_spectrum(0.8, 5.0).unwrap();
    assert_eq!(s.len(), 8 * 5);
    let total: f64 = s.chunks(5).map(|r| r[4]).sum();
    assert!((total - 1.0).abs() < 1e-9);
    assert!(triangle_negativities(0.2, 5.0).is_err());
}
