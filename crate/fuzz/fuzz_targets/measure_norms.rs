//! Measure construction and the norm machinery must not panic on arbitrary
//! numeric input, and the representative-map isometry must hold whenever a
//! measure can be built at all.

#![no_main]

use arbitrary::Arbitrary;
use libfuzzer_sys::fuzz_target;
use ratemeasure::measure::{AtomicMeasure, Interval};

#[derive(Debug, Arbitrary)]
struct Input {
    a: f64,
    b: f64,
    atoms: Vec<(f64, f64)>,
}

fuzz_target!(|input: Input| {
    let Ok(interval) = Interval::new(input.a.abs() % 10.0, input.b.abs() % 10.0) else {
        return;
    };
    let span = interval.length();
    let points: Vec<f64> = input
        .atoms
        .iter()
        .take(32)
        .map(|&(p, _)| {
            if p.is_finite() {
                interval.left() + (p.abs() % 1.0) * span
            } else {
                0.0
            }
        })
        .collect();
    let weights: Vec<f64> = input
        .atoms
        .iter()
        .take(32)
        .map(|&(_, w)| if w.is_finite() { w % 1.0e6 } else { 0.0 })
        .collect();
    let Ok(mu) = AtomicMeasure::new(interval, &points, &weights) else {
        return;
    };

    let norm = mu.hstar_norm();
    assert!(norm.is_finite() && norm >= 0.0, "norm {norm} out of range");
    assert!(mu.hstar_distance(&mu).unwrap() == 0.0);

    let primal = mu.riesz_function().h_norm();
    assert!(
        (primal - norm).abs() <= 1e-6 * norm.max(1.0),
        "isometry violated: {primal} vs {norm}"
    );
});
