//! Finite-factor volatility fields `sigma(mu)(dr) = g(mu, r) mu(dr)`.
//!
//! The factor space is truncated to `R^d` with the standard basis. The
//! built-in loading family
//!
//! ```text
//! g_k(mu, r) = beta_k (h_k(r) - <h_k, mu>)
//! ```
//!
//! is centered by construction (`int g_k(mu, r) mu(dr) = 0` for probability
//! `mu`), bounded by `C = sum_k 2 beta_k sup|h_k|`, and Lipschitz in `mu` on
//! probability measures because the pairing is linear and bounded.

use crate::error::{Error, Result};
use crate::measure::{hstar_norm_squared_on, AtomicMeasure, Interval, PiecewiseLinearFn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Probability tolerance used when validating states handed to the field.
pub(crate) const PROBABILITY_TOL: f64 = 1e-9;

/// A `d`-factor volatility field on an interval.
#[derive(Debug, Clone, PartialEq)]
pub struct VolatilityField {
    interval: Interval,
    loadings: Vec<PiecewiseLinearFn>,
    scales: Vec<f64>,
}

impl VolatilityField {
    /// Builds the centered field with per-factor shape functions `h_k` and
    /// nonnegative scales `beta_k`.
    pub fn new(
        interval: Interval,
        loadings: Vec<PiecewiseLinearFn>,
        scales: Vec<f64>,
    ) -> Result<Self> {
        if loadings.len() != scales.len() {
            return Err(Error::argument(format!(
                "loading/scale length mismatch: {} loadings vs {} scales",
                loadings.len(),
                scales.len()
            )));
        }
        if scales.iter().any(|&b| !b.is_finite() || b < 0.0) {
            return Err(Error::argument("factor scales must be finite and nonnegative"));
        }
        Ok(VolatilityField {
            interval,
            loadings,
            scales,
        })
    }

    /// The deterministic field (`d = 0`).
    pub fn zero(interval: Interval) -> Self {
        VolatilityField {
            interval,
            loadings: Vec::new(),
            scales: Vec::new(),
        }
    }

    /// One factor with `h(r) = r`.
    pub fn linear(interval: Interval, beta: f64) -> Result<Self> {
        VolatilityField::new(interval, vec![PiecewiseLinearFn::identity(interval)], vec![beta])
    }

    /// Two factors: `h_1(r) = r` and a tent peaking at the interval midpoint.
    pub fn linear_and_tent(interval: Interval, beta1: f64, beta2: f64) -> Result<Self> {
        let mid = (interval.left() + interval.right()) / 2.0;
        let tent = PiecewiseLinearFn::hat(interval.left(), mid, interval.right())?;
        VolatilityField::new(
            interval,
            vec![PiecewiseLinearFn::identity(interval), tent],
            vec![beta1, beta2],
        )
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    /// Number of factors `d`.
    pub fn factor_count(&self) -> usize {
        self.loadings.len()
    }

    pub fn loadings(&self) -> &[PiecewiseLinearFn] {
        &self.loadings
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// Same shapes, scales multiplied by `c`.
    pub fn with_scaled(&self, c: f64) -> Result<Self> {
        VolatilityField::new(
            self.interval,
            self.loadings.clone(),
            self.scales.iter().map(|b| b * c).collect(),
        )
    }

    /// Bound constant `C = sum_k 2 beta_k sup|h_k|` from the absolute
    /// continuity assumption: `|g(mu, r)| <= C` for all probability `mu` and
    /// `r` in the interval.
    pub fn bound_constant(&self) -> f64 {
        self.loadings
            .iter()
            .zip(&self.scales)
            .map(|(h, &b)| 2.0 * b * h.sup_abs())
            .sum()
    }

    /// Loading `g_k(mu, r) = beta_k (h_k(r) - <h_k, mu>)`.
    pub fn loading(&self, k: usize, mu: &AtomicMeasure, r: f64) -> f64 {
        let h = &self.loadings[k];
        self.scales[k] * (h.eval(r) - mu.pair(h))
    }

    /// Per-atom diffusion coefficients `s_{i,k} = g_k(mu, r_i) w_i` for a
    /// probability measure `mu`.
    pub fn sigma_atoms(&self, mu: &AtomicMeasure) -> Result<SigmaMatrix> {
        if !mu.is_probability(PROBABILITY_TOL) {
            return Err(Error::domain(
                "sigma is only defined on probability measures",
            ));
        }
        let mut columns = Vec::with_capacity(self.loadings.len());
        for (h, &beta) in self.loadings.iter().zip(&self.scales) {
            let centered = mu.pair(h);
            let column: Vec<f64> = mu
                .atoms()
                .iter()
                .zip(mu.weights())
                .map(|(&r, &w)| beta * (h.eval(r) - centered) * w)
                .collect();
            columns.push(column);
        }
        Ok(SigmaMatrix {
            support: mu.atoms().to_vec(),
            columns,
        })
    }

    /// Hilbert-Schmidt norm of `sigma(mu)`: the root of the summed squared
    /// dual norms of the per-factor column measures.
    pub fn hs_norm(&self, mu: &AtomicMeasure) -> Result<f64> {
        let matrix = self.sigma_atoms(mu)?;
        Ok(hs_norm_columns(self.interval, &matrix.support, &matrix.columns)?)
    }

    /// Hilbert-Schmidt distance `||sigma(mu) - sigma(nu)||` for probability
    /// measures on a common support.
    pub fn hs_distance(&self, mu: &AtomicMeasure, nu: &AtomicMeasure) -> Result<f64> {
        if mu.atoms() != nu.atoms() {
            return Err(Error::argument(
                "hs_distance requires measures on a common support",
            ));
        }
        let a = self.sigma_atoms(mu)?;
        let b = self.sigma_atoms(nu)?;
        let diff: Vec<Vec<f64>> = a
            .columns
            .iter()
            .zip(&b.columns)
            .map(|(ca, cb)| ca.iter().zip(cb).map(|(x, y)| x - y).collect())
            .collect();
        hs_norm_columns(self.interval, &a.support, &diff)
    }

    /// Empirical lower bound on the Lipschitz constant of `mu -> sigma(mu)`:
    /// the maximum over random probability pairs on a common support of the
    /// ratio of Hilbert-Schmidt distance to dual distance.
    pub fn estimate_lipschitz(&self, trials: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best: f64 = 0.0;
        for _ in 0..trials.max(1) {
            let n = rng.random_range(2..=8usize);
            let mut atoms: Vec<f64> = (0..n)
                .map(|_| rng.random_range(self.interval.left()..self.interval.right()))
                .collect();
            atoms.sort_by(f64::total_cmp);
            atoms.dedup();
            if atoms.len() < 2 {
                continue;
            }
            let mu = random_probability(&mut rng, self.interval, &atoms);
            let nu = random_probability(&mut rng, self.interval, &atoms);
            let denom = mu.hstar_distance(&nu).expect("same interval");
            if denom < 1e-12 {
                continue;
            }
            let num = self.hs_distance(&mu, &nu).expect("common support");
            best = best.max(num / denom);
        }
        best
    }
}

fn random_probability(rng: &mut ChaCha8Rng, interval: Interval, atoms: &[f64]) -> AtomicMeasure {
    let raw: Vec<f64> = atoms.iter().map(|_| -rng.random::<f64>().ln()).collect();
    let sum: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / sum).collect();
    AtomicMeasure::new(interval, atoms, &weights).expect("atoms inside interval")
}

/// Per-atom, per-factor diffusion coefficients of `sigma(mu)` at a fixed
/// probability state.
///
/// Column sums vanish (centering) and each atom's factor vector is bounded by
/// the field constant times the atom's weight.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaMatrix {
    support: Vec<f64>,
    /// `columns[k][i] = s_{i,k}`, factor-major.
    columns: Vec<Vec<f64>>,
}

impl SigmaMatrix {
    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn factor_count(&self) -> usize {
        self.columns.len()
    }

    /// Coefficients of factor `k`, one per atom.
    pub fn column(&self, k: usize) -> &[f64] {
        &self.columns[k]
    }

    /// `sum_i s_{i,k}` for factor `k`.
    pub fn column_sum(&self, k: usize) -> f64 {
        self.columns[k].iter().sum()
    }

    /// Euclidean norm of atom `i`'s factor vector `(s_{i,1}, ..., s_{i,d})`.
    pub fn atom_norm(&self, i: usize) -> f64 {
        self.columns
            .iter()
            .map(|col| col[i] * col[i])
            .sum::<f64>()
            .sqrt()
    }
}

/// Hilbert-Schmidt norm of the operator `sum_i z_i delta_{r_i}` described by
/// factor columns (`columns[k][i]` is the `k`-th coordinate of `z_i`):
/// the root of the summed squared dual norms of the column measures.
pub fn hs_norm_columns(interval: Interval, support: &[f64], columns: &[Vec<f64>]) -> Result<f64> {
    if support.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::argument("support must be strictly increasing"));
    }
    let mut total = 0.0;
    for column in columns {
        if column.len() != support.len() {
            return Err(Error::argument(format!(
                "column length {} does not match support size {}",
                column.len(),
                support.len()
            )));
        }
        total += hstar_norm_squared_on(interval, support, column);
    }
    Ok(total.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Interval {
        Interval::new(0.0, 1.0).unwrap()
    }

    fn sym() -> Interval {
        Interval::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn linear_loading_is_centered_short_rate() {
        // d = 1, h(r) = r, beta = 1: g(mu, r) = r - R(mu).
        let field = VolatilityField::linear(unit(), 1.0).unwrap();
        let mu = AtomicMeasure::new(unit(), &[0.0, 1.0], &[0.5, 0.5]).unwrap();
        assert!((field.loading(0, &mu, 0.0) - (-0.5)).abs() < 1e-15);
        assert!((field.loading(0, &mu, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dirac_states_are_absorbing() {
        let field = VolatilityField::linear_and_tent(sym(), 0.7, 0.3).unwrap();
        for r in [-0.5, 0.0, 0.9] {
            let d = AtomicMeasure::dirac(sym(), r).unwrap();
            for k in 0..field.factor_count() {
                assert!(field.loading(k, &d, r).abs() < 1e-15);
            }
            assert!(field.hs_norm(&d).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn constant_loading_is_zero_field() {
        let field = VolatilityField::new(
            sym(),
            vec![PiecewiseLinearFn::constant(3.0)],
            vec![1.0],
        )
        .unwrap();
        let mu = AtomicMeasure::new(sym(), &[-0.5, 0.5], &[0.5, 0.5]).unwrap();
        let m = field.sigma_atoms(&mu).unwrap();
        assert!(m.column(0).iter().all(|&s| s.abs() < 1e-15));
    }

    #[test]
    fn rejects_negative_scale_and_non_probability() {
        assert!(VolatilityField::linear(unit(), -1.0).is_err());
        let field = VolatilityField::linear(unit(), 1.0).unwrap();
        let signed = AtomicMeasure::new(unit(), &[0.0, 1.0], &[0.75, 0.75]).unwrap();
        assert!(matches!(field.sigma_atoms(&signed), Err(Error::Domain(_))));
    }

    #[test]
    fn sigma_atoms_hand_case() {
        let field = VolatilityField::linear(unit(), 1.0).unwrap();
        let mu = AtomicMeasure::new(unit(), &[0.0, 1.0], &[0.5, 0.5]).unwrap();
        let m = field.sigma_atoms(&mu).unwrap();
        assert!((m.column(0)[0] - (-0.25)).abs() < 1e-15);
        assert!((m.column(0)[1] - 0.25).abs() < 1e-15);

        // Weight (1, 0): the zero weight kills atom 1 and centering kills atom 0.
        let vertex = AtomicMeasure::new(unit(), &[0.0, 1.0], &[1.0, 0.0]).unwrap();
        let m = field.sigma_atoms(&vertex).unwrap();
        assert!(m.column(0).iter().all(|&s| s.abs() < 1e-15));
    }

    #[test]
    fn hs_norm_hand_case() {
        // Single factor column 1/4 delta_0 - 1/4 delta_1 on [0,1]: mass 0 and
        // a squared tail integral of 1/16.
        let field = VolatilityField::linear(unit(), 1.0).unwrap();
        let mu = AtomicMeasure::new(unit(), &[0.0, 1.0], &[0.5, 0.5]).unwrap();
        assert!((field.hs_norm(&mu).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn factor_additivity() {
        // Two identical factors scale the norm by sqrt(2).
        let iv = unit();
        let single = VolatilityField::linear(iv, 0.8).unwrap();
        let double = VolatilityField::new(
            iv,
            vec![PiecewiseLinearFn::identity(iv), PiecewiseLinearFn::identity(iv)],
            vec![0.8, 0.8],
        )
        .unwrap();
        let mu = AtomicMeasure::new(iv, &[0.0, 0.4, 1.0], &[0.3, 0.3, 0.4]).unwrap();
        let lhs = double.hs_norm(&mu).unwrap();
        let rhs = 2f64.sqrt() * single.hs_norm(&mu).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn centering_and_per_atom_bound() {
        let field = VolatilityField::linear_and_tent(sym(), 0.6, 0.4).unwrap();
        let cg = field.bound_constant();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..500 {
            let n = rng.random_range(2..=10usize);
            let mut atoms: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            atoms.sort_by(f64::total_cmp);
            atoms.dedup();
            let mu = random_probability(&mut rng, sym(), &atoms);
            let m = field.sigma_atoms(&mu).unwrap();
            for k in 0..m.factor_count() {
                assert!(m.column_sum(k).abs() <= 1e-14, "column sum {}", m.column_sum(k));
            }
            for i in 0..atoms.len() {
                assert!(m.atom_norm(i) <= cg * mu.weights()[i] + 1e-14);
            }
        }
    }

    #[test]
    fn lipschitz_estimate_scales_with_beta() {
        let field = VolatilityField::linear(unit(), 1.0).unwrap();
        let doubled = field.with_scaled(2.0).unwrap();
        let base = field.estimate_lipschitz(200, 99);
        let twice = doubled.estimate_lipschitz(200, 99);
        assert!(base > 0.0);
        assert!((twice / base - 2.0).abs() < 1e-12);

        let zero = VolatilityField::zero(unit());
        assert_eq!(zero.estimate_lipschitz(50, 1), 0.0);
    }

    #[test]
    fn lipschitz_estimate_stable_across_seeds() {
        let field = VolatilityField::linear(unit(), 1.0).unwrap();
        let runs: Vec<f64> = (0..4)
            .map(|s| field.estimate_lipschitz(1000, 1000 + s))
            .collect();
        let lo = runs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = runs.iter().cloned().fold(0.0, f64::max);
        assert!(hi / lo < 1.2, "estimates {runs:?} vary more than 20%");
    }
}
