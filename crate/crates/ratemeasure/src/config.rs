//! Run configuration: a flat key-value text format with dotted section keys.
//!
//! ```text
//! interval.a = 0
//! interval.b = 1
//! support.points = 0,1
//! weights.values = 0.5,0.5
//! field.h1.knots = 0,1
//! field.h1.values = 0,1
//! field.h1.beta = 0.5
//! dt = 0.001
//! horizon = 1
//! scheme = projected-euler
//! seed = 42
//! n_paths = 1000
//! ```
//!
//! `#` starts a comment. Rejection messages always name the offending key,
//! and `parse -> to_text -> parse` is the identity on the parsed value.

use crate::error::{Error, Result};
use crate::experiments::{discretize_target, TargetDistribution};
use crate::measure::{AtomicMeasure, Interval, PiecewiseLinearFn};
use crate::simplex::SimplexPoint;
use crate::solver::{Scheme, SimulationConfig};
use crate::volatility::VolatilityField;
use std::collections::BTreeMap;

/// How the support grid is specified.
#[derive(Debug, Clone, PartialEq)]
pub enum SupportSpec {
    /// Explicit list of support points.
    Points(Vec<f64>),
    /// `n` equally spaced atoms (cell midpoints of an `n`-cell partition).
    Grid(usize),
}

/// How the initial weights are specified.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightsSpec {
    /// Explicit weights, one per support point.
    Values(Vec<f64>),
    /// A named target distribution discretized onto the grid.
    Target(TargetDistribution),
}

/// One volatility factor: shape function knots/values and a scale.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSpec {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
    pub beta: f64,
}

/// Parsed run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub interval_a: f64,
    pub interval_b: f64,
    pub support: SupportSpec,
    pub weights: WeightsSpec,
    pub factors: Vec<FactorSpec>,
    pub dt: f64,
    pub horizon: f64,
    pub scheme: Scheme,
    pub seed: u64,
    pub n_paths: usize,
    /// Maturities used by pricing and diagnostics.
    pub maturities: Vec<f64>,
    /// Evaluation time of the `flow` command (defaults to the horizon).
    pub flow_t: Option<f64>,
    /// Grid sizes for the convergence experiment.
    pub convergence_levels: Vec<usize>,
    /// Weight perturbation of the stability experiment.
    pub stability_perturbation: f64,
}

/// A validated model built from a [`RunConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSetup {
    pub sim: SimulationConfig,
    pub x0: SimplexPoint,
    pub mu0: AtomicMeasure,
}

fn parse_num<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.trim()
        .parse::<T>()
        .map_err(|_| Error::config(format!("key '{key}': cannot parse value '{}'", raw.trim())))
}

fn parse_list(key: &str, raw: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|tok| parse_num::<f64>(key, tok))
        .collect()
}

fn join_list(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl RunConfig {
    /// Parses the flat key-value text format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw_line) in text.lines().enumerate() {
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::config(format!(
                    "line {}: expected 'key = value', got '{line}'",
                    lineno + 1
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if map.insert(key.clone(), value).is_some() {
                return Err(Error::config(format!("key '{key}': duplicate entry")));
            }
        }
        Self::from_map(map)
    }

    fn from_map(mut map: BTreeMap<String, String>) -> Result<Self> {
        fn take(map: &mut BTreeMap<String, String>, key: &str) -> Option<String> {
            map.remove(key)
        }
        fn require(map: &mut BTreeMap<String, String>, key: &str) -> Result<String> {
            take(map, key)
                .ok_or_else(|| Error::config(format!("key '{key}': missing required key")))
        }

        let interval_a: f64 = parse_num("interval.a", &require(&mut map, "interval.a")?)?;
        let interval_b: f64 = parse_num("interval.b", &require(&mut map, "interval.b")?)?;

        let support = match (take(&mut map, "support.points"), take(&mut map, "support.n")) {
            (Some(_), Some(_)) => {
                return Err(Error::config(
                    "key 'support.points': conflicts with 'support.n'",
                ))
            }
            (Some(pts), None) => SupportSpec::Points(parse_list("support.points", &pts)?),
            (None, Some(n)) => SupportSpec::Grid(parse_num("support.n", &n)?),
            (None, None) => {
                return Err(Error::config(
                    "key 'support.points': either 'support.points' or 'support.n' is required",
                ))
            }
        };

        let weights = match (take(&mut map, "weights.values"), take(&mut map, "weights.target")) {
            (Some(_), Some(_)) => {
                return Err(Error::config(
                    "key 'weights.values': conflicts with 'weights.target'",
                ))
            }
            (Some(vals), None) => WeightsSpec::Values(parse_list("weights.values", &vals)?),
            (None, Some(name)) => {
                let target = match name.as_str() {
                    "uniform" => TargetDistribution::Uniform,
                    "trunc-exp" => {
                        let rate = match take(&mut map, "weights.rate") {
                            Some(r) => parse_num("weights.rate", &r)?,
                            None => 1.0,
                        };
                        TargetDistribution::TruncatedExponential { rate }
                    }
                    "two-point" => {
                        let length = interval_b + interval_a;
                        let default_points = (
                            -interval_a + 0.25 * length,
                            -interval_a + 0.75 * length,
                        );
                        let points = match take(&mut map, "weights.points") {
                            Some(p) => {
                                let list = parse_list("weights.points", &p)?;
                                if list.len() != 2 {
                                    return Err(Error::config(
                                        "key 'weights.points': expected exactly two points",
                                    ));
                                }
                                (list[0], list[1])
                            }
                            None => default_points,
                        };
                        let masses = match take(&mut map, "weights.masses") {
                            Some(m) => {
                                let list = parse_list("weights.masses", &m)?;
                                if list.len() != 2 {
                                    return Err(Error::config(
                                        "key 'weights.masses': expected exactly two masses",
                                    ));
                                }
                                (list[0], list[1])
                            }
                            None => (0.5, 0.5),
                        };
                        TargetDistribution::TwoPoint { points, masses }
                    }
                    other => {
                        return Err(Error::config(format!(
                            "key 'weights.target': unknown target '{other}' \
                             (expected uniform, trunc-exp or two-point)"
                        )))
                    }
                };
                WeightsSpec::Target(target)
            }
            (None, None) => {
                return Err(Error::config(
                    "key 'weights.values': either 'weights.values' or 'weights.target' is required",
                ))
            }
        };

        let mut factors = Vec::new();
        for k in 1.. {
            let prefix = format!("field.h{k}");
            let knots = take(&mut map, &format!("{prefix}.knots"));
            let values = take(&mut map, &format!("{prefix}.values"));
            let beta = take(&mut map, &format!("{prefix}.beta"));
            if knots.is_none() && values.is_none() && beta.is_none() {
                break;
            }
            let knots_raw = knots.ok_or_else(|| {
                Error::config(format!("key '{prefix}.knots': missing for factor {k}"))
            })?;
            let values_raw = values.ok_or_else(|| {
                Error::config(format!("key '{prefix}.values': missing for factor {k}"))
            })?;
            let beta = match beta {
                Some(b) => parse_num(&format!("{prefix}.beta"), &b)?,
                None => 1.0,
            };
            factors.push(FactorSpec {
                knots: parse_list(&format!("{prefix}.knots"), &knots_raw)?,
                values: parse_list(&format!("{prefix}.values"), &values_raw)?,
                beta,
            });
        }

        let dt: f64 = parse_num("dt", &require(&mut map, "dt")?)?;
        let horizon: f64 = parse_num("horizon", &require(&mut map, "horizon")?)?;
        let scheme = match take(&mut map, "scheme") {
            Some(s) => s
                .parse::<Scheme>()
                .map_err(|e| Error::config(format!("key 'scheme': {e}")))?,
            None => Scheme::ProjectedEuler,
        };
        let seed: u64 = match take(&mut map, "seed") {
            Some(s) => parse_num("seed", &s)?,
            None => 0,
        };
        let n_paths: usize = match take(&mut map, "n_paths") {
            Some(s) => parse_num("n_paths", &s)?,
            None => 1,
        };
        let maturities = match take(&mut map, "maturities") {
            Some(m) => parse_list("maturities", &m)?,
            None => vec![0.5, 1.0, 2.0],
        };
        let flow_t = match take(&mut map, "flow.t") {
            Some(t) => Some(parse_num("flow.t", &t)?),
            None => None,
        };
        let convergence_levels = match take(&mut map, "converge.n_list") {
            Some(list) => list
                .split(',')
                .map(|tok| parse_num::<usize>("converge.n_list", tok))
                .collect::<Result<Vec<_>>>()?,
            None => vec![4, 8, 16, 32],
        };
        let stability_perturbation = match take(&mut map, "stability.perturbation") {
            Some(p) => parse_num("stability.perturbation", &p)?,
            None => 0.05,
        };

        if let Some(unknown) = map.keys().next() {
            return Err(Error::config(format!("key '{unknown}': unknown key")));
        }

        Ok(RunConfig {
            interval_a,
            interval_b,
            support,
            weights,
            factors,
            dt,
            horizon,
            scheme,
            seed,
            n_paths,
            maturities,
            flow_t,
            convergence_levels,
            stability_perturbation,
        })
    }

    /// Canonical serialization: parsing the result reproduces this value.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut push = |key: &str, value: String| {
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(&value);
            out.push('\n');
        };
        push("interval.a", self.interval_a.to_string());
        push("interval.b", self.interval_b.to_string());
        match &self.support {
            SupportSpec::Points(pts) => push("support.points", join_list(pts)),
            SupportSpec::Grid(n) => push("support.n", n.to_string()),
        }
        match &self.weights {
            WeightsSpec::Values(vals) => push("weights.values", join_list(vals)),
            WeightsSpec::Target(target) => match target {
                TargetDistribution::Uniform => push("weights.target", "uniform".into()),
                TargetDistribution::TruncatedExponential { rate } => {
                    push("weights.target", "trunc-exp".into());
                    push("weights.rate", rate.to_string());
                }
                TargetDistribution::TwoPoint { points, masses } => {
                    push("weights.target", "two-point".into());
                    push("weights.points", join_list(&[points.0, points.1]));
                    push("weights.masses", join_list(&[masses.0, masses.1]));
                }
            },
        }
        for (k, factor) in self.factors.iter().enumerate() {
            let prefix = format!("field.h{}", k + 1);
            push(&format!("{prefix}.knots"), join_list(&factor.knots));
            push(&format!("{prefix}.values"), join_list(&factor.values));
            push(&format!("{prefix}.beta"), factor.beta.to_string());
        }
        push("dt", self.dt.to_string());
        push("horizon", self.horizon.to_string());
        push("scheme", self.scheme.to_string());
        push("seed", self.seed.to_string());
        push("n_paths", self.n_paths.to_string());
        push("maturities", join_list(&self.maturities));
        if let Some(t) = self.flow_t {
            push("flow.t", t.to_string());
        }
        push(
            "converge.n_list",
            self.convergence_levels
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        push("stability.perturbation", self.stability_perturbation.to_string());
        out
    }

    pub fn interval(&self) -> Result<Interval> {
        Interval::new(self.interval_a, self.interval_b)
            .map_err(|e| Error::config(format!("key 'interval.a'/'interval.b': {e}")))
    }

    /// Equally spaced cell midpoints for a [`SupportSpec::Grid`].
    pub fn grid_points(interval: Interval, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::config("key 'support.n': must be at least 1"));
        }
        let width = interval.length() / n as f64;
        Ok((0..n)
            .map(|i| interval.left() + (i as f64 + 0.5) * width)
            .collect())
    }

    /// The volatility field described by the factor specs.
    pub fn field(&self) -> Result<VolatilityField> {
        let interval = self.interval()?;
        let mut loadings = Vec::with_capacity(self.factors.len());
        let mut scales = Vec::with_capacity(self.factors.len());
        for (k, factor) in self.factors.iter().enumerate() {
            let loading = PiecewiseLinearFn::new(factor.knots.clone(), factor.values.clone())
                .map_err(|e| Error::config(format!("key 'field.h{}.knots': {e}", k + 1)))?;
            loadings.push(loading);
            scales.push(factor.beta);
        }
        VolatilityField::new(interval, loadings, scales)
            .map_err(|e| Error::config(format!("key 'field.h1.beta': {e}")))
    }

    /// The configured initial measure. Signed weights are allowed here; the
    /// simulation entry point additionally demands a probability measure.
    pub fn initial_measure(&self) -> Result<AtomicMeasure> {
        let interval = self.interval()?;
        match (&self.support, &self.weights) {
            (SupportSpec::Points(pts), WeightsSpec::Values(vals)) => {
                if pts.len() != vals.len() {
                    return Err(Error::config(format!(
                        "key 'weights.values': {} weights for {} support points",
                        vals.len(),
                        pts.len()
                    )));
                }
                AtomicMeasure::new(interval, pts, vals)
                    .map_err(|e| Error::config(format!("key 'support.points': {e}")))
            }
            (SupportSpec::Grid(n), WeightsSpec::Values(vals)) => {
                let pts = Self::grid_points(interval, *n)?;
                if vals.len() != pts.len() {
                    return Err(Error::config(format!(
                        "key 'weights.values': {} weights for a grid of {n} points",
                        vals.len()
                    )));
                }
                AtomicMeasure::new(interval, &pts, vals)
                    .map_err(|e| Error::config(format!("key 'weights.values': {e}")))
            }
            (SupportSpec::Grid(n), WeightsSpec::Target(target)) => {
                discretize_target(target, *n, interval)
                    .map_err(|e| Error::config(format!("key 'weights.target': {e}")))
            }
            (SupportSpec::Points(_), WeightsSpec::Target(_)) => Err(Error::config(
                "key 'weights.target': requires 'support.n' rather than 'support.points'",
            )),
        }
    }

    /// Builds the full simulation setup; the initial measure must be a
    /// probability measure.
    pub fn simulation(&self) -> Result<ModelSetup> {
        let mu0 = self.initial_measure()?;
        if !mu0.is_probability(1e-9) {
            return Err(Error::config(
                "key 'weights.values': initial weights must form a probability vector",
            ));
        }
        let x0 = SimplexPoint::new(mu0.weights().to_vec())
            .map_err(|e| Error::config(format!("key 'weights.values': {e}")))?;
        let sim = SimulationConfig {
            support: mu0.atoms().to_vec(),
            field: self.field()?,
            dt: self.dt,
            horizon: self.horizon,
            scheme: self.scheme,
            seed: self.seed,
            n_paths: self.n_paths,
        };
        sim.validate().map_err(|e| Error::config(e.to_string()))?;
        Ok(ModelSetup { sim, x0, mu0 })
    }
}
