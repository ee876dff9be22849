//! Time-discrete simulation of the atomic evolution
//! `dX_t = b(X_t) dt + sigma(X_t) dW_t` on the probability simplex, with
//! `b_i(x) = x_i (sum_j r_j x_j - r_i)` and per-atom diffusion coefficients
//! from a [`VolatilityField`].
//!
//! Two schemes are provided: projected Euler-Maruyama (step then project back
//! onto the simplex) and a stochastic-exponential scheme that keeps strictly
//! positive coordinates strictly positive. Both freeze coordinates that start
//! at zero, matching the reduction of the dynamics to the active atoms.
//!
//! Randomness follows a splittable-stream contract: path `p` of a run with
//! master seed `s` draws from stream `p` of a counter-based generator seeded
//! by `s`, and each step consumes exactly one normal per factor in factor
//! order. Results are therefore bitwise reproducible regardless of execution
//! order or thread count.

use crate::error::{Error, Result};
use crate::measure::{AtomicMeasure, Interval};
use crate::simplex::SimplexPoint;
use crate::volatility::VolatilityField;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

/// Discretization scheme for the simplex dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Euler-Maruyama step followed by Euclidean projection onto the simplex.
    ProjectedEuler,
    /// Per-coordinate stochastic exponential, renormalized to unit mass.
    Exponential,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::ProjectedEuler => "projected-euler",
            Scheme::Exponential => "exponential",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "projected-euler" => Ok(Scheme::ProjectedEuler),
            "exponential" => Ok(Scheme::Exponential),
            other => Err(Error::argument(format!(
                "unknown scheme '{other}' (expected 'projected-euler' or 'exponential')"
            ))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Full description of a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    /// Strictly increasing support points inside the field's interval.
    pub support: Vec<f64>,
    pub field: VolatilityField,
    /// Time step; the final step is shortened when `horizon` is not a
    /// multiple of `dt`.
    pub dt: f64,
    pub horizon: f64,
    pub scheme: Scheme,
    pub seed: u64,
    pub n_paths: usize,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.support.is_empty() {
            return Err(Error::argument("support must be nonempty"));
        }
        if self.support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::argument("support must be strictly increasing"));
        }
        for &r in &self.support {
            if !self.field.interval().contains(r) {
                return Err(Error::domain(format!(
                    "support point {r} lies outside the interval {}",
                    self.field.interval()
                )));
            }
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::argument(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::argument(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if self.dt > self.horizon {
            return Err(Error::argument(format!(
                "dt = {} exceeds horizon = {}",
                self.dt, self.horizon
            )));
        }
        if self.n_paths == 0 {
            return Err(Error::argument("n_paths must be at least 1"));
        }
        Ok(())
    }

    pub fn interval(&self) -> Interval {
        self.field.interval()
    }

    /// Grid `0 = t_0 < ... < t_m = horizon` with uniform step `dt` and a
    /// shortened final step when needed.
    pub fn time_grid(&self) -> Vec<f64> {
        time_grid(self.dt, self.horizon)
    }

    /// The atomic measure carried by a state on this configuration's support.
    pub fn measure(&self, x: &SimplexPoint) -> Result<AtomicMeasure> {
        AtomicMeasure::new(self.interval(), &self.support, x.coords())
    }
}

/// Uniform grid over `[0, horizon]` with step `dt`; the final step is
/// shortened when the horizon is not a multiple of the step.
pub(crate) fn time_grid(dt: f64, horizon: f64) -> Vec<f64> {
    let ratio = horizon / dt;
    let full = if (ratio - ratio.round()).abs() < 1e-9 {
        ratio.round() as usize
    } else {
        ratio.floor() as usize
    };
    let mut times = Vec::with_capacity(full + 2);
    for j in 0..=full {
        times.push(j as f64 * dt);
    }
    let last = *times.last().expect("nonempty grid");
    if horizon - last > 1e-9 * dt {
        times.push(horizon);
    } else {
        *times.last_mut().expect("nonempty grid") = horizon;
    }
    times
}

/// One simulated trajectory: grid times, simplex states and short rates.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationPath {
    pub times: Vec<f64>,
    pub states: Vec<SimplexPoint>,
    pub rates: Vec<f64>,
}

impl SimulationPath {
    pub fn final_state(&self) -> &SimplexPoint {
        self.states.last().expect("path has at least the initial state")
    }

    pub fn final_rate(&self) -> f64 {
        *self.rates.last().expect("path has at least the initial state")
    }
}

/// A collection of independent paths sharing one configuration; path `p`
/// always uses stream `p` of the master seed, so subsets of a larger run
/// coincide with smaller runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub config: SimulationConfig,
    pub x0: SimplexPoint,
    pub paths: Vec<SimulationPath>,
}

/// Precomputed per-run data: loadings evaluated on the support grid.
pub(crate) struct StepKernel {
    support: Vec<f64>,
    scales: Vec<f64>,
    /// `loadings_at[k][i] = h_k(r_i)`.
    loadings_at: Vec<Vec<f64>>,
}

pub(crate) struct StepScratch {
    next: Vec<f64>,
    sorted: Vec<f64>,
    pairs: Vec<f64>,
    active: Vec<usize>,
    gathered: Vec<f64>,
}

impl StepScratch {
    pub(crate) fn new(n: usize, d: usize) -> Self {
        StepScratch {
            next: vec![0.0; n],
            sorted: Vec::with_capacity(n),
            pairs: vec![0.0; d],
            active: Vec::with_capacity(n),
            gathered: Vec::with_capacity(n),
        }
    }
}

impl StepKernel {
    pub(crate) fn new(field: &VolatilityField, support: &[f64]) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::argument("support must be nonempty"));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::argument("support must be strictly increasing"));
        }
        for &r in support {
            if !field.interval().contains(r) {
                return Err(Error::domain(format!(
                    "support point {r} lies outside the interval {}",
                    field.interval()
                )));
            }
        }
        let loadings_at = field
            .loadings()
            .iter()
            .map(|h| support.iter().map(|&r| h.eval(r)).collect())
            .collect();
        Ok(StepKernel {
            support: support.to_vec(),
            scales: field.scales().to_vec(),
            loadings_at,
        })
    }

    pub(crate) fn factor_count(&self) -> usize {
        self.scales.len()
    }

    fn short_rate(&self, x: &[f64]) -> f64 {
        self.support.iter().zip(x).map(|(&r, &w)| r * w).sum()
    }

    /// Loading `g_k(mu_x, r_i)` given the precomputed pairing `p_k`.
    fn loading(&self, k: usize, i: usize, pair: f64) -> f64 {
        self.scales[k] * (self.loadings_at[k][i] - pair)
    }

    fn fill_pairs(&self, x: &[f64], pairs: &mut [f64]) {
        for (k, p) in pairs.iter_mut().enumerate() {
            *p = self.loadings_at[k].iter().zip(x).map(|(&h, &w)| h * w).sum();
        }
    }

    /// One step of the chosen scheme. `x` must lie on the simplex; `dw` holds
    /// one Brownian increment per factor (variance `dt`). Coordinates equal
    /// to zero stay exactly zero.
    pub(crate) fn step(
        &self,
        scheme: Scheme,
        x: &mut Vec<f64>,
        dw: &[f64],
        dt: f64,
        scratch: &mut StepScratch,
    ) {
        debug_assert_eq!(x.len(), self.support.len());
        debug_assert_eq!(dw.len(), self.factor_count());
        let rate = self.short_rate(x);
        self.fill_pairs(x, &mut scratch.pairs);

        match scheme {
            Scheme::ProjectedEuler => {
                for i in 0..x.len() {
                    let xi = x[i];
                    scratch.next[i] = if xi == 0.0 {
                        0.0
                    } else {
                        let mut diffusion = 0.0;
                        for k in 0..self.factor_count() {
                            diffusion += self.loading(k, i, scratch.pairs[k]) * dw[k];
                        }
                        xi + xi * (rate - self.support[i]) * dt + xi * diffusion
                    };
                }
                // Project the active coordinates onto their sub-simplex;
                // frozen coordinates do not take part.
                scratch.active.clear();
                scratch.gathered.clear();
                for (i, &xi) in x.iter().enumerate() {
                    if xi != 0.0 {
                        scratch.active.push(i);
                        scratch.gathered.push(scratch.next[i]);
                    }
                }
                project_in_place(&mut scratch.gathered, &mut scratch.sorted);
                for (slot, &i) in scratch.active.iter().enumerate() {
                    scratch.next[i] = scratch.gathered[slot];
                }
                std::mem::swap(x, &mut scratch.next);
            }
            Scheme::Exponential => {
                let mut sum = 0.0;
                for i in 0..x.len() {
                    let xi = x[i];
                    scratch.next[i] = if xi > 0.0 {
                        let c = rate - self.support[i];
                        let mut exponent = c * dt;
                        for k in 0..self.factor_count() {
                            let g = self.loading(k, i, scratch.pairs[k]);
                            exponent += g * dw[k] - 0.5 * g * g * dt;
                        }
                        let y = xi * exponent.exp();
                        sum += y;
                        y
                    } else {
                        0.0
                    };
                }
                for v in scratch.next.iter_mut() {
                    *v /= sum;
                }
                std::mem::swap(x, &mut scratch.next);
            }
        }
    }
}

/// In-place Euclidean projection onto the simplex: the same shifted
/// sort-and-threshold as [`crate::simplex::project`], reusing a scratch
/// buffer for the sorted copy.
fn project_in_place(values: &mut [f64], sorted: &mut Vec<f64>) {
    let shift = values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    for v in values.iter_mut() {
        *v = (*v - shift).max(-2.0);
    }
    let tau = crate::simplex::threshold_with_scratch(values, sorted);
    for v in values.iter_mut() {
        *v = (*v - tau).max(0.0);
    }
}

/// One projected-Euler step: drift and diffusion evaluated at `x`, then the
/// result is projected back onto the simplex.
pub fn euler_step(
    x: &SimplexPoint,
    dw: &[f64],
    dt: f64,
    support: &[f64],
    field: &VolatilityField,
) -> Result<SimplexPoint> {
    single_step(Scheme::ProjectedEuler, x, dw, dt, support, field)
}

/// One stochastic-exponential step: each positive coordinate is multiplied by
/// `exp(c_i dt + tau_i . dW - |tau_i|^2 dt / 2)` and the result renormalized
/// to unit mass; zero coordinates stay zero.
pub fn exp_step(
    x: &SimplexPoint,
    dw: &[f64],
    dt: f64,
    support: &[f64],
    field: &VolatilityField,
) -> Result<SimplexPoint> {
    single_step(Scheme::Exponential, x, dw, dt, support, field)
}

fn single_step(
    scheme: Scheme,
    x: &SimplexPoint,
    dw: &[f64],
    dt: f64,
    support: &[f64],
    field: &VolatilityField,
) -> Result<SimplexPoint> {
    let kernel = StepKernel::new(field, support)?;
    if x.len() != support.len() {
        return Err(Error::argument(format!(
            "state has {} coordinates but support has {} points",
            x.len(),
            support.len()
        )));
    }
    if dw.len() != kernel.factor_count() {
        return Err(Error::argument(format!(
            "expected {} Brownian increments, got {}",
            kernel.factor_count(),
            dw.len()
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::argument(format!("dt must be positive, got {dt}")));
    }
    let mut state = x.coords().to_vec();
    let mut scratch = StepScratch::new(state.len(), kernel.factor_count());
    kernel.step(scheme, &mut state, dw, dt, &mut scratch);
    Ok(SimplexPoint::from_unchecked(state))
}

/// The per-path generator: stream `path_index` of a ChaCha generator seeded
/// by the master seed.
pub(crate) fn path_rng(seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_index);
    rng
}

/// Runs one path, invoking `visit(step, time, state, rate)` at every grid
/// point (including the initial one).
pub(crate) fn run_path<F>(
    config: &SimulationConfig,
    x0: &SimplexPoint,
    path_index: u64,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(usize, f64, &[f64], f64),
{
    config.validate()?;
    if x0.len() != config.support.len() {
        return Err(Error::argument(format!(
            "initial state has {} coordinates but support has {} points",
            x0.len(),
            config.support.len()
        )));
    }
    let kernel = StepKernel::new(&config.field, &config.support)?;
    let d = kernel.factor_count();
    let times = config.time_grid();
    let mut rng = path_rng(config.seed, path_index);
    let mut scratch = StepScratch::new(config.support.len(), d);
    let mut dw = vec![0.0; d];
    let mut x = x0.coords().to_vec();

    visit(0, times[0], &x, kernel.short_rate(&x));
    for j in 0..times.len() - 1 {
        let dt = times[j + 1] - times[j];
        let scale = dt.sqrt();
        for slot in dw.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *slot = scale * z;
        }
        kernel.step(config.scheme, &mut x, &dw, dt, &mut scratch);
        visit(j + 1, times[j + 1], &x, kernel.short_rate(&x));
    }
    Ok(())
}

/// Simulates the path with stream index `path_index`.
pub fn simulate_path_indexed(
    config: &SimulationConfig,
    x0: &SimplexPoint,
    path_index: u64,
) -> Result<SimulationPath> {
    let times = config.time_grid();
    let mut states = Vec::with_capacity(times.len());
    let mut rates = Vec::with_capacity(times.len());
    run_path(config, x0, path_index, |_, _, state, rate| {
        states.push(SimplexPoint::from_unchecked(state.to_vec()));
        rates.push(rate);
    })?;
    Ok(SimulationPath {
        times,
        states,
        rates,
    })
}

/// Simulates the first path (stream 0).
pub fn simulate_path(config: &SimulationConfig, x0: &SimplexPoint) -> Result<SimulationPath> {
    simulate_path_indexed(config, x0, 0)
}

/// Simulates `n_paths` independent paths. Paths are computed in parallel but
/// the result is identical to sequential execution.
pub fn simulate_ensemble(config: &SimulationConfig, x0: &SimplexPoint) -> Result<Ensemble> {
    config.validate()?;
    let paths = (0..config.n_paths as u64)
        .into_par_iter()
        .map(|p| simulate_path_indexed(config, x0, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(Ensemble {
        config: config.clone(),
        x0: x0.clone(),
        paths,
    })
}
