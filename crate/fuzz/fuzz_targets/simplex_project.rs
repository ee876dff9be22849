//! The simplex projection must never panic, must land in the simplex and
//! must be idempotent on every input it accepts.

#![no_main]

use libfuzzer_sys::fuzz_target;
use ratemeasure::simplex::{euclidean_distance, project};

fuzz_target!(|values: Vec<f64>| {
    let values: Vec<f64> = values.into_iter().take(64).collect();
    match project(&values) {
        Err(_) => {
            // Rejected inputs are empty or non-finite.
            assert!(values.is_empty() || values.iter().any(|v| !v.is_finite()));
        }
        Ok(p) => {
            assert!(p.coords().iter().all(|&c| c >= 0.0));
            let sum: f64 = p.coords().iter().sum();
            assert!((sum - 1.0).abs() <= 1e-9, "sum {sum}");
            let again = project(p.coords()).unwrap();
            assert!(euclidean_distance(p.coords(), again.coords()) <= 1e-12);
        }
    }
});
