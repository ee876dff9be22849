//! CSV and report rendering. All numbers are written with the shortest
//! representation that parses back to the same value, so outputs are
//! byte-deterministic for a fixed configuration.

use crate::measure::AtomicMeasure;
use crate::pricing::YieldCurve;
use crate::solver::{Ensemble, SimulationPath};

fn push_row(out: &mut String, fields: &[String]) {
    out.push_str(&fields.join(","));
    out.push('\n');
}

/// CSV for a single path: `time,x_1,...,x_n,R`.
pub fn path_csv(path: &SimulationPath) -> String {
    let n = path.states.first().map_or(0, |s| s.len());
    let mut out = String::new();
    let mut header = vec!["time".to_string()];
    header.extend((1..=n).map(|i| format!("x_{i}")));
    header.push("R".to_string());
    push_row(&mut out, &header);
    for (j, &t) in path.times.iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(path.states[j].coords().iter().map(|w| w.to_string()));
        row.push(path.rates[j].to_string());
        push_row(&mut out, &row);
    }
    out
}

/// CSV for an ensemble. A single-path ensemble uses the plain path schema;
/// with several paths a leading `path` column is added.
pub fn paths_csv(ensemble: &Ensemble) -> String {
    if ensemble.paths.len() == 1 {
        return path_csv(&ensemble.paths[0]);
    }
    let n = ensemble.config.support.len();
    let mut out = String::new();
    let mut header = vec!["path".to_string(), "time".to_string()];
    header.extend((1..=n).map(|i| format!("x_{i}")));
    header.push("R".to_string());
    push_row(&mut out, &header);
    for (p, path) in ensemble.paths.iter().enumerate() {
        for (j, &t) in path.times.iter().enumerate() {
            let mut row = vec![p.to_string(), t.to_string()];
            row.extend(path.states[j].coords().iter().map(|w| w.to_string()));
            row.push(path.rates[j].to_string());
            push_row(&mut out, &row);
        }
    }
    out
}

/// CSV for a yield curve: `maturity,price,yield`.
pub fn curve_csv(curve: &YieldCurve) -> String {
    let mut out = String::new();
    push_row(
        &mut out,
        &["maturity".into(), "price".into(), "yield".into()],
    );
    for i in 0..curve.maturities.len() {
        push_row(
            &mut out,
            &[
                curve.maturities[i].to_string(),
                curve.prices[i].to_string(),
                curve.yields[i].to_string(),
            ],
        );
    }
    out
}

/// CSV for the deterministic flow: `r,w_initial,w_t`.
pub fn flow_csv(mu0: &AtomicMeasure, mu_t: &AtomicMeasure) -> String {
    let mut out = String::new();
    push_row(&mut out, &["r".into(), "w_initial".into(), "w_t".into()]);
    for i in 0..mu0.len() {
        push_row(
            &mut out,
            &[
                mu0.atoms()[i].to_string(),
                mu0.weights()[i].to_string(),
                mu_t.weights()[i].to_string(),
            ],
        );
    }
    out
}
