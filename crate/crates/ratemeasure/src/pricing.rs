//! Bond prices, yield curves, pathwise discounting and the Monte Carlo
//! martingale/supermartingale diagnostics that tie the simplex dynamics to
//! the term-structure interpretation `P(t, T) = int e^{-(T-t) r} mu_t(dr)`.

use crate::error::{Error, Result};
use crate::measure::AtomicMeasure;
use crate::operators::short_rate;
use crate::simplex::SimplexPoint;
use crate::solver::{run_path, Ensemble, SimulationConfig, SimulationPath};
use rayon::prelude::*;

/// Zero-coupon bond price `P(tau) = sum_i w_i e^{-tau r_i}`.
///
/// Intended for probability measures, for which
/// `e^{-b tau} <= P(tau) <= e^{a tau}`.
pub fn bond_price(mu: &AtomicMeasure, tau: f64) -> Result<f64> {
    if !tau.is_finite() || tau < 0.0 {
        return Err(Error::argument(format!(
            "maturity must be nonnegative, got {tau}"
        )));
    }
    Ok(mu
        .atoms()
        .iter()
        .zip(mu.weights())
        .map(|(&r, &w)| w * (-tau * r).exp())
        .sum())
}

/// Discount curve: maturities, prices and continuously compounded yields
/// `y(tau) = -ln P(tau) / tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct YieldCurve {
    pub maturities: Vec<f64>,
    pub prices: Vec<f64>,
    pub yields: Vec<f64>,
}

/// Evaluates the curve at the given maturities (positive, ascending).
pub fn yield_curve(mu: &AtomicMeasure, maturities: &[f64]) -> Result<YieldCurve> {
    if maturities.is_empty() {
        return Err(Error::argument("at least one maturity required"));
    }
    for &tau in maturities {
        if !tau.is_finite() || tau <= 0.0 {
            return Err(Error::argument(format!(
                "maturities must be positive, got {tau}"
            )));
        }
    }
    if maturities.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::argument("maturities must be sorted ascending"));
    }
    let prices: Vec<f64> = maturities
        .iter()
        .map(|&tau| bond_price(mu, tau))
        .collect::<Result<_>>()?;
    let yields = maturities
        .iter()
        .zip(&prices)
        .map(|(&tau, &p)| -p.ln() / tau)
        .collect();
    Ok(YieldCurve {
        maturities: maturities.to_vec(),
        prices,
        yields,
    })
}

/// Trapezoidal integral of the piecewise-linear rate path over `[0, t]`.
/// `t` must lie on or be bracketed by the grid.
fn integrate_rates(times: &[f64], rates: &[f64], t: f64) -> Result<f64> {
    let horizon = *times.last().expect("nonempty grid");
    if !t.is_finite() || t < 0.0 || t > horizon + 1e-12 {
        return Err(Error::argument(format!(
            "time {t} outside the simulated horizon [0, {horizon}]"
        )));
    }
    let mut integral = 0.0;
    for j in 0..times.len() - 1 {
        if times[j + 1] <= t {
            integral += 0.5 * (rates[j] + rates[j + 1]) * (times[j + 1] - times[j]);
        } else {
            if t > times[j] {
                let width = times[j + 1] - times[j];
                let rate_t = rates[j] + (rates[j + 1] - rates[j]) * (t - times[j]) / width;
                integral += 0.5 * (rates[j] + rate_t) * (t - times[j]);
            }
            return Ok(integral);
        }
    }
    Ok(integral)
}

/// Linear interpolation of the rate path at `t`.
fn rate_at(times: &[f64], rates: &[f64], t: f64) -> f64 {
    let j = match times.partition_point(|&u| u <= t) {
        0 => 0,
        p => (p - 1).min(times.len() - 2),
    };
    if times.len() == 1 {
        return rates[0];
    }
    let width = times[j + 1] - times[j];
    rates[j] + (rates[j + 1] - rates[j]) * ((t - times[j]) / width).clamp(0.0, 1.0)
}

/// Pathwise discount factor `exp(-int_0^t R_u du)` along a simulated path.
pub fn discount_factor(path: &SimulationPath, t: f64) -> Result<f64> {
    Ok((-integrate_rates(&path.times, &path.rates, t)?).exp())
}

/// Monte Carlo estimate: sample mean, standard error and sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

impl McEstimate {
    fn from_samples_shifted(samples: &[f64], shift: f64) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>()
                / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        McEstimate {
            mean: mean - shift,
            std_error,
            n,
        }
    }
}

/// Streamed per-path reductions of an ensemble: discount factors and short
/// rates captured at fixed checkpoint times, plus simplex-invariant
/// statistics gathered along the way. Paths are never stored, so this scales
/// to large path counts.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSummary {
    pub checkpoints: Vec<f64>,
    /// `discounts[q][p]`: discount factor of path `p` at checkpoint `q`.
    pub discounts: Vec<Vec<f64>>,
    /// `rates[q][p]`: short rate of path `p` at checkpoint `q`.
    pub rates: Vec<Vec<f64>>,
    pub initial_measure: AtomicMeasure,
    pub initial_rate: f64,
    /// Largest observed deviation of a state sum from one.
    pub max_mass_error: f64,
    /// Smallest weight observed over all states and times.
    pub min_weight: f64,
    /// Smallest weight observed among coordinates that started positive.
    pub min_active_weight: f64,
    pub n_paths: usize,
    pub dt: f64,
}

struct PathReduction {
    discounts: Vec<f64>,
    rates: Vec<f64>,
    max_mass_error: f64,
    min_weight: f64,
    min_active_weight: f64,
}

fn reduce_path(
    config: &SimulationConfig,
    x0: &SimplexPoint,
    path_index: u64,
    checkpoints: &[f64],
) -> Result<PathReduction> {
    let times = config.time_grid();
    let mut rates = Vec::with_capacity(times.len());
    let mut max_mass_error: f64 = 0.0;
    let mut min_weight = f64::INFINITY;
    let mut min_active_weight = f64::INFINITY;
    let active: Vec<bool> = x0.coords().iter().map(|&w| w > 0.0).collect();
    run_path(config, x0, path_index, |_, _, state, rate| {
        rates.push(rate);
        let sum: f64 = state.iter().sum();
        max_mass_error = max_mass_error.max((sum - 1.0).abs());
        for (i, &w) in state.iter().enumerate() {
            min_weight = min_weight.min(w);
            if active[i] {
                min_active_weight = min_active_weight.min(w);
            }
        }
    })?;
    let discounts = checkpoints
        .iter()
        .map(|&t| Ok((-integrate_rates(&times, &rates, t)?).exp()))
        .collect::<Result<Vec<f64>>>()?;
    let rates_at = checkpoints
        .iter()
        .map(|&t| rate_at(&times, &rates, t))
        .collect();
    Ok(PathReduction {
        discounts,
        rates: rates_at,
        max_mass_error,
        min_weight,
        min_active_weight,
    })
}

/// Simulates the configured ensemble and reduces every path on the fly.
/// Checkpoints must lie in `(0, horizon]`.
pub fn summarize_ensemble(
    config: &SimulationConfig,
    x0: &SimplexPoint,
    checkpoints: &[f64],
) -> Result<EnsembleSummary> {
    config.validate()?;
    if checkpoints.is_empty() {
        return Err(Error::argument("at least one checkpoint required"));
    }
    for &t in checkpoints {
        if !t.is_finite() || t <= 0.0 || t > config.horizon + 1e-12 {
            return Err(Error::argument(format!(
                "checkpoint {t} outside (0, {}]",
                config.horizon
            )));
        }
    }
    let reductions = (0..config.n_paths as u64)
        .into_par_iter()
        .map(|p| reduce_path(config, x0, p, checkpoints))
        .collect::<Result<Vec<_>>>()?;

    let mut summary = EnsembleSummary {
        checkpoints: checkpoints.to_vec(),
        discounts: vec![Vec::with_capacity(config.n_paths); checkpoints.len()],
        rates: vec![Vec::with_capacity(config.n_paths); checkpoints.len()],
        initial_measure: config.measure(x0)?,
        initial_rate: 0.0,
        max_mass_error: 0.0,
        min_weight: f64::INFINITY,
        min_active_weight: f64::INFINITY,
        n_paths: config.n_paths,
        dt: config.dt,
    };
    summary.initial_rate = short_rate(&summary.initial_measure);
    for r in reductions {
        for (q, (&d, &rt)) in r.discounts.iter().zip(&r.rates).enumerate() {
            summary.discounts[q].push(d);
            summary.rates[q].push(rt);
        }
        summary.max_mass_error = summary.max_mass_error.max(r.max_mass_error);
        summary.min_weight = summary.min_weight.min(r.min_weight);
        summary.min_active_weight = summary.min_active_weight.min(r.min_active_weight);
    }
    Ok(summary)
}

impl Ensemble {
    /// Reduces stored paths to checkpoint summaries; agrees with
    /// [`summarize_ensemble`] run on the same configuration.
    pub fn summarize(&self, checkpoints: &[f64]) -> Result<EnsembleSummary> {
        summarize_ensemble(&self.config, &self.x0, checkpoints)
    }
}

impl EnsembleSummary {
    fn checkpoint_index(&self, t: f64) -> Result<usize> {
        self.checkpoints
            .iter()
            .position(|&c| (c - t).abs() <= 1e-12)
            .ok_or_else(|| {
                Error::argument(format!(
                    "time {t} is not among the summary checkpoints {:?}",
                    self.checkpoints
                ))
            })
    }
}

/// Martingale residual `mean(e^{-int_0^T R}) - P(0, T)` with its standard
/// error. A correct discretization keeps the residual within
/// `3 SE + O(dt)`.
pub fn martingale_residual(summary: &EnsembleSummary, t: f64) -> Result<McEstimate> {
    let q = summary.checkpoint_index(t)?;
    let p0 = bond_price(&summary.initial_measure, t)?;
    Ok(McEstimate::from_samples_shifted(&summary.discounts[q], p0))
}

/// Supermartingale diagnostic `mean(R_T) - R_0` with its standard error;
/// expected nonpositive up to noise for nonnegative measures.
pub fn supermartingale_check(summary: &EnsembleSummary, t: f64) -> Result<McEstimate> {
    let q = summary.checkpoint_index(t)?;
    Ok(McEstimate::from_samples_shifted(
        &summary.rates[q],
        summary.initial_rate,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Interval;
    use crate::reference::{deterministic_flow, flow_normalizer};
    use crate::solver::{simulate_ensemble, simulate_path, Scheme};
    use crate::volatility::VolatilityField;

    fn unit() -> Interval {
        Interval::new(0.0, 1.0).unwrap()
    }

    fn sym() -> Interval {
        Interval::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn bond_price_cases() {
        let d = AtomicMeasure::dirac(sym(), 0.25).unwrap();
        assert!((bond_price(&d, 2.0).unwrap() - (-0.5f64).exp()).abs() < 1e-15);

        let m = AtomicMeasure::new(unit(), &[0.0, 0.1], &[0.5, 0.5]).unwrap();
        let p = bond_price(&m, 2.0).unwrap();
        assert!((p - 0.5 * (1.0 + (-0.2f64).exp())).abs() < 1e-12);
        assert!((p - 0.9093654).abs() < 1e-6);

        assert_eq!(bond_price(&m, 0.0).unwrap(), 1.0);
        assert!(bond_price(&m, -0.5).is_err());
    }

    #[test]
    fn bond_price_bounds_and_monotonicity() {
        let iv = Interval::new(0.5, 1.5).unwrap();
        let m = AtomicMeasure::new(iv, &[-0.4, 0.2, 1.1], &[0.25, 0.35, 0.4]).unwrap();
        let mut previous = f64::INFINITY;
        for tau in [0.1, 0.5, 1.0, 2.0, 5.0] {
            let p = bond_price(&m, tau).unwrap();
            assert!(p <= (iv.a() * tau).exp() + 1e-12);
            assert!(p >= (-iv.b() * tau).exp() - 1e-12);
            let _ = previous;
            previous = p;
        }

        // Supported on [0, b]: prices are nonincreasing in maturity.
        let nonneg = AtomicMeasure::new(unit(), &[0.0, 0.4, 1.0], &[0.3, 0.4, 0.3]).unwrap();
        let mut last = 1.0 + 1e-15;
        for tau in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let p = bond_price(&nonneg, tau).unwrap();
            assert!(p <= last);
            last = p;
        }
    }

    #[test]
    fn yield_curve_cases() {
        let d = AtomicMeasure::dirac(sym(), 0.3).unwrap();
        let curve = yield_curve(&d, &[0.5, 1.0, 2.0]).unwrap();
        for y in curve.yields {
            assert!((y - 0.3).abs() < 1e-12);
        }

        let m = AtomicMeasure::new(unit(), &[0.0, 0.1], &[0.5, 0.5]).unwrap();
        let curve = yield_curve(&m, &[1e-6]).unwrap();
        assert!((curve.yields[0] - 0.05).abs() < 1e-6);

        let flat = AtomicMeasure::dirac(sym(), 0.0).unwrap();
        let curve = yield_curve(&flat, &[1.0]).unwrap();
        assert_eq!(curve.prices[0], 1.0);
        assert_eq!(curve.yields[0], 0.0);

        assert!(yield_curve(&m, &[0.0]).is_err());
        assert!(yield_curve(&m, &[2.0, 1.0]).is_err());
        assert!(yield_curve(&m, &[]).is_err());
    }

    fn config(scheme: Scheme, beta: f64, dt: f64, horizon: f64, n_paths: usize) -> SimulationConfig {
        SimulationConfig {
            support: vec![0.0, 1.0],
            field: if beta == 0.0 {
                VolatilityField::zero(unit())
            } else {
                VolatilityField::linear(unit(), beta).unwrap()
            },
            dt,
            horizon,
            scheme: scheme,
            seed: 9,
            n_paths,
        }
    }

    #[test]
    fn discount_factor_cases() {
        // Dirac state: constant rate, trapezoid exact.
        let c = config(Scheme::ProjectedEuler, 0.5, 0.1, 1.0, 1);
        let x0 = SimplexPoint::vertex(2, 1).unwrap();
        let path = simulate_path(&c, &x0).unwrap();
        let df = discount_factor(&path, 1.0).unwrap();
        assert!((df - (-1.0f64).exp()).abs() < 1e-12);
        assert_eq!(discount_factor(&path, 0.0).unwrap(), 1.0);
        assert!(discount_factor(&path, 2.0).is_err());

        // Off-grid time: bracketed and interpolated.
        let df = discount_factor(&path, 0.55).unwrap();
        assert!((df - (-0.55f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn deterministic_discount_matches_flow_normalizer() {
        let dt = 1e-3;
        let c = config(Scheme::ProjectedEuler, 0.0, dt, 2f64.ln(), 1);
        let x0 = SimplexPoint::new(vec![0.5, 0.5]).unwrap();
        let path = simulate_path(&c, &x0).unwrap();
        let mu0 = c.measure(&x0).unwrap();
        let expect = flow_normalizer(&mu0, 2f64.ln());
        let df = discount_factor(&path, 2f64.ln()).unwrap();
        assert!((df - expect).abs() < 10.0 * dt * dt / dt, "df={df}, G_T={expect}");
        assert!((df - expect).abs() < 10.0 * dt);
    }

    #[test]
    fn summary_agrees_with_stored_paths() {
        let c = config(Scheme::ProjectedEuler, 0.5, 0.05, 1.0, 16);
        let x0 = SimplexPoint::new(vec![0.5, 0.5]).unwrap();
        let checkpoints = [0.5, 1.0];
        let streamed = summarize_ensemble(&c, &x0, &checkpoints).unwrap();
        let ensemble = simulate_ensemble(&c, &x0).unwrap();
        for (q, &t) in checkpoints.iter().enumerate() {
            for (p, path) in ensemble.paths.iter().enumerate() {
                let df = discount_factor(path, t).unwrap();
                assert_eq!(df, streamed.discounts[q][p]);
                assert_eq!(rate_at(&path.times, &path.rates, t), streamed.rates[q][p]);
            }
        }
        assert!(streamed.max_mass_error < 1e-12);
    }

    #[test]
    fn martingale_residual_degenerate_cases() {
        // Single atom: deterministic, sigma vanishes identically.
        let c = SimulationConfig {
            support: vec![0.4],
            field: VolatilityField::linear(unit(), 0.5).unwrap(),
            dt: 0.01,
            horizon: 1.0,
            scheme: Scheme::ProjectedEuler,
            seed: 1,
            n_paths: 8,
        };
        let x0 = SimplexPoint::new(vec![1.0]).unwrap();
        let s = summarize_ensemble(&c, &x0, &[1.0]).unwrap();
        let est = martingale_residual(&s, 1.0).unwrap();
        assert!(est.mean.abs() < 1e-12);
        assert!(est.std_error < 1e-15);
        assert_eq!(est.n, 8);

        let sup = supermartingale_check(&s, 1.0).unwrap();
        assert!(sup.mean.abs() < 1e-15);
    }

    #[test]
    fn deterministic_two_atom_residual_is_discretization_bias() {
        let dt = 1e-3;
        let c = config(Scheme::ProjectedEuler, 0.0, dt, 1.0, 1);
        let x0 = SimplexPoint::new(vec![0.5, 0.5]).unwrap();
        let s = summarize_ensemble(&c, &x0, &[1.0]).unwrap();
        let est = martingale_residual(&s, 1.0).unwrap();
        assert!(est.mean.abs() <= 10.0 * dt, "residual {}", est.mean);
        assert!(martingale_residual(&s, 0.7).is_err());
    }

    #[test]
    fn supermartingale_deterministic_two_atom() {
        // sigma = 0 on {0, 1}: R falls from 1/2 to 1/3 by T = ln 2.
        let dt = 1e-3;
        let c = config(Scheme::ProjectedEuler, 0.0, dt, 2f64.ln(), 4);
        let x0 = SimplexPoint::new(vec![0.5, 0.5]).unwrap();
        let s = summarize_ensemble(&c, &x0, &[2f64.ln()]).unwrap();
        let est = supermartingale_check(&s, 2f64.ln()).unwrap();
        assert!((est.mean - (1.0 / 3.0 - 0.5)).abs() < 10.0 * dt);
        assert!(est.mean < 0.0);
    }

    #[test]
    fn short_rate_drift_identity_along_deterministic_paths() {
        // dR = -int (R - r)^2 mu(dr) dt along sigma = 0 paths.
        let dt = 1e-3;
        let c = config(Scheme::ProjectedEuler, 0.0, dt, 1.0, 1);
        let x0 = SimplexPoint::new(vec![0.5, 0.5]).unwrap();
        let path = simulate_path(&c, &x0).unwrap();
        for j in (1..path.times.len() - 1).step_by(100) {
            let numeric = (path.rates[j + 1] - path.rates[j - 1])
                / (path.times[j + 1] - path.times[j - 1]);
            let state = &path.states[j];
            let r = path.rates[j];
            let variance: f64 = c
                .support
                .iter()
                .zip(state.coords())
                .map(|(&ri, &w)| w * (r - ri) * (r - ri))
                .sum();
            assert!(
                (numeric + variance).abs() < 10.0 * dt,
                "t={}: dR/dt = {numeric}, -var = {}",
                path.times[j],
                -variance
            );
        }
    }

    #[test]
    fn flow_identity_cross_check() {
        // The deterministic path discount agrees with the flowed bond price.
        let m = AtomicMeasure::new(unit(), &[0.0, 1.0], &[0.5, 0.5]).unwrap();
        let (lhs, rhs) = crate::reference::flow_discount_identity(&m, 0.2, 0.9).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
        let flowed = deterministic_flow(&m, 0.2).unwrap();
        assert!((bond_price(&flowed, 0.7).unwrap() - rhs).abs() < 1e-15);
    }
}
