//! Atomic measures on a bounded interval and the dual-Sobolev geometry that
//! drives everything else in this crate.
//!
//! The state space is the set of finite signed measures on a closed interval
//! `I = [-a, b]` containing the origin, normed by
//!
//! ```text
//! ||mu||^2 = mu(I)^2 + int_{-a}^0 mu[-a,r)^2 dr + int_0^b mu(r,b]^2 dr
//! ```
//!
//! For an atomic measure both tail functions are piecewise constant between
//! atoms, so the norm has an exact closed form. Test functions are restricted
//! to continuous piecewise-linear representatives, for which the primal norm
//! `||phi||^2 = phi(0)^2 + int phi'(r)^2 dr` is equally explicit, and the two
//! sides are linked by an isometric representative map.

use crate::error::{Error, Result};

/// Closed interval `I = [-a, b]` with `a, b >= 0` and `a + b > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    a: f64,
    b: f64,
}

impl Interval {
    /// Builds `[-a, b]`. Both half-widths must be nonnegative and the
    /// interval must be nondegenerate.
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::argument("interval bounds must be finite"));
        }
        if a < 0.0 || b < 0.0 {
            return Err(Error::argument(format!(
                "interval half-widths must be nonnegative, got a={a}, b={b}"
            )));
        }
        if a + b <= 0.0 {
            return Err(Error::argument("interval must have positive length"));
        }
        Ok(Interval { a, b })
    }

    /// Left half-width `a` (the interval extends to `-a`).
    pub fn a(&self) -> f64 {
        self.a
    }

    /// Right endpoint `b`.
    pub fn b(&self) -> f64 {
        self.b
    }

    /// Left endpoint `-a`.
    pub fn left(&self) -> f64 {
        -self.a
    }

    /// Right endpoint `b`.
    pub fn right(&self) -> f64 {
        self.b
    }

    /// Interval length `a + b`.
    pub fn length(&self) -> f64 {
        self.a + self.b
    }

    pub fn contains(&self, r: f64) -> bool {
        r.is_finite() && r >= -self.a && r <= self.b
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {}]", -self.a, self.b)
    }
}

/// Finite signed atomic measure `sum_i w_i delta_{r_i}` on an [`Interval`].
///
/// Support points are kept strictly increasing; construction merges duplicate
/// points by summing their weights, so equal measures have equal
/// representations and zero distance implies identical fields.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure {
    interval: Interval,
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

impl AtomicMeasure {
    /// Builds a measure from parallel lists of support points and weights.
    ///
    /// Points are sorted and duplicates merged by weight summation; every
    /// point must lie inside the interval.
    pub fn new(interval: Interval, points: &[f64], weights: &[f64]) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::argument(format!(
                "support/weight length mismatch: {} points vs {} weights",
                points.len(),
                weights.len()
            )));
        }
        for (&r, &w) in points.iter().zip(weights) {
            if !r.is_finite() || !w.is_finite() {
                return Err(Error::argument("support points and weights must be finite"));
            }
            if !interval.contains(r) {
                return Err(Error::domain(format!(
                    "support point {r} lies outside the interval {interval}"
                )));
            }
        }
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&i, &j| points[i].total_cmp(&points[j]));

        let mut atoms: Vec<f64> = Vec::with_capacity(points.len());
        let mut merged: Vec<f64> = Vec::with_capacity(points.len());
        for &i in &order {
            if let Some(&last) = atoms.last() {
                if points[i] == last {
                    *merged.last_mut().expect("nonempty") += weights[i];
                    continue;
                }
            }
            atoms.push(points[i]);
            merged.push(weights[i]);
        }
        Ok(AtomicMeasure {
            interval,
            atoms,
            weights: merged,
        })
    }

    /// The zero measure (empty support).
    pub fn zero(interval: Interval) -> Self {
        AtomicMeasure {
            interval,
            atoms: Vec::new(),
            weights: Vec::new(),
        }
    }

    /// Unit point mass at `r`.
    pub fn dirac(interval: Interval, r: f64) -> Result<Self> {
        Self::new(interval, &[r], &[1.0])
    }

    /// Internal fast path: `atoms` must already be strictly increasing and
    /// inside the interval.
    pub(crate) fn from_sorted_unchecked(
        interval: Interval,
        atoms: Vec<f64>,
        weights: Vec<f64>,
    ) -> Self {
        debug_assert!(atoms.windows(2).all(|w| w[0] < w[1]));
        debug_assert_eq!(atoms.len(), weights.len());
        AtomicMeasure {
            interval,
            atoms,
            weights,
        }
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    /// Strictly increasing support points.
    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Same support, new weights.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.atoms.len() {
            return Err(Error::argument(format!(
                "expected {} weights, got {}",
                self.atoms.len(),
                weights.len()
            )));
        }
        Ok(AtomicMeasure {
            interval: self.interval,
            atoms: self.atoms.clone(),
            weights,
        })
    }

    /// Total mass `mu(I) = sum_i w_i`.
    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// True iff all weights are `>= -tol` and the total mass is within `tol`
    /// of one.
    pub fn is_probability(&self, tol: f64) -> bool {
        self.weights.iter().all(|&w| w >= -tol) && (self.total_mass() - 1.0).abs() <= tol
    }

    /// Squared dual norm, evaluated exactly segment by segment.
    pub fn hstar_norm_squared(&self) -> f64 {
        hstar_norm_squared_on(self.interval, &self.atoms, &self.weights)
    }

    /// Dual norm of the measure.
    pub fn hstar_norm(&self) -> f64 {
        self.hstar_norm_squared().sqrt()
    }

    /// Difference `self - other` as an atomic measure on the union of the two
    /// supports. Zero-weight atoms are retained.
    pub fn sub(&self, other: &AtomicMeasure) -> Result<AtomicMeasure> {
        if self.interval != other.interval {
            return Err(Error::argument(format!(
                "interval mismatch: {} vs {}",
                self.interval, other.interval
            )));
        }
        let mut atoms = Vec::with_capacity(self.atoms.len() + other.atoms.len());
        let mut weights = Vec::with_capacity(atoms.capacity());
        let (mut i, mut j) = (0, 0);
        while i < self.atoms.len() || j < other.atoms.len() {
            let take_left = match (self.atoms.get(i), other.atoms.get(j)) {
                (Some(&ri), Some(&rj)) => {
                    if ri == rj {
                        atoms.push(ri);
                        weights.push(self.weights[i] - other.weights[j]);
                        i += 1;
                        j += 1;
                        continue;
                    }
                    ri < rj
                }
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (None, None) => break,
            };
            if take_left {
                atoms.push(self.atoms[i]);
                weights.push(self.weights[i]);
                i += 1;
            } else {
                atoms.push(other.atoms[j]);
                weights.push(-other.weights[j]);
                j += 1;
            }
        }
        Ok(AtomicMeasure::from_sorted_unchecked(
            self.interval,
            atoms,
            weights,
        ))
    }

    /// Dual distance `||self - other||`.
    pub fn hstar_distance(&self, other: &AtomicMeasure) -> Result<f64> {
        Ok(self.sub(other)?.hstar_norm())
    }

    /// Duality pairing `<mu, phi> = sum_i w_i phi(r_i)`.
    pub fn pair(&self, phi: &PiecewiseLinearFn) -> f64 {
        self.atoms
            .iter()
            .zip(&self.weights)
            .map(|(&r, &w)| w * phi.eval(r))
            .sum()
    }

    /// Piecewise-linear representative of the measure in the primal space:
    /// the unique `phi` with `phi(0) = mu(I)`, `phi'(r) = mu(r, b]` for
    /// `r > 0` and `phi'(r) = -mu[-a, r)` for `r < 0`.
    ///
    /// Its primal norm equals the measure's dual norm.
    pub fn riesz_function(&self) -> PiecewiseLinearFn {
        let mass = self.total_mass();
        let left = self.interval.left();
        let right = self.interval.right();

        // Knots: interval endpoints, origin and every atom, deduplicated.
        let mut knots: Vec<f64> = Vec::with_capacity(self.atoms.len() + 3);
        knots.push(left);
        knots.push(0.0);
        knots.push(right);
        knots.extend_from_slice(&self.atoms);
        knots.sort_by(f64::total_cmp);
        knots.dedup();

        let origin = knots
            .iter()
            .position(|&k| k == 0.0)
            .expect("origin is a knot");
        let mut values = vec![0.0; knots.len()];
        values[origin] = mass;

        // Integrate mu(r, b] to the right of the origin.
        for j in origin..knots.len() - 1 {
            let (s, e) = (knots[j], knots[j + 1]);
            let tail: f64 = self
                .atoms
                .iter()
                .zip(&self.weights)
                .filter(|(&r, _)| r >= e)
                .map(|(_, &w)| w)
                .sum();
            values[j + 1] = values[j] + tail * (e - s);
        }
        // Integrate mu[-a, r) to the left of the origin.
        for j in (0..origin).rev() {
            let (s, e) = (knots[j], knots[j + 1]);
            let head: f64 = self
                .atoms
                .iter()
                .zip(&self.weights)
                .filter(|(&r, _)| r <= s)
                .map(|(_, &w)| w)
                .sum();
            values[j] = values[j + 1] + head * (e - s);
        }
        PiecewiseLinearFn::new(knots, values).expect("knots are strictly increasing")
    }
}

/// Closed-form squared dual norm of `sum_i weights[i] delta_{atoms[i]}` with
/// `atoms` strictly increasing inside `interval`.
///
/// The two tail functions are constant between consecutive breakpoints
/// (atoms, the origin and the endpoints), so each integral is a finite sum.
pub(crate) fn hstar_norm_squared_on(interval: Interval, atoms: &[f64], weights: &[f64]) -> f64 {
    let mass: f64 = weights.iter().sum();
    let mut total = mass * mass;

    let left = interval.left();
    let right = interval.right();

    // Right integral over [0, b]: on a segment (s, e) free of atoms the tail
    // mu(r, b] equals the weight of atoms >= e.
    if right > 0.0 {
        let mut tail: f64 = 0.0;
        let mut idx = atoms.len();
        // Walk segments from b down to 0, extending the suffix sum as atom
        // positions are crossed.
        let mut upper = right;
        loop {
            while idx > 0 && atoms[idx - 1] >= upper {
                idx -= 1;
                tail += weights[idx];
            }
            let lower = if idx > 0 && atoms[idx - 1] > 0.0 {
                atoms[idx - 1]
            } else {
                0.0
            };
            total += tail * tail * (upper - lower);
            if lower <= 0.0 {
                break;
            }
            upper = lower;
        }
    }

    // Left integral over [-a, 0]: on a segment (s, e) the head mu[-a, r)
    // equals the weight of atoms <= s.
    if left < 0.0 {
        let mut head: f64 = 0.0;
        let mut idx = 0;
        let mut lower = left;
        loop {
            while idx < atoms.len() && atoms[idx] <= lower {
                head += weights[idx];
                idx += 1;
            }
            let upper = if idx < atoms.len() && atoms[idx] < 0.0 {
                atoms[idx]
            } else {
                0.0
            };
            total += head * head * (upper - lower);
            if upper >= 0.0 {
                break;
            }
            lower = upper;
        }
    }

    total
}

/// Continuous piecewise-linear function given by knots and values, extended
/// constantly beyond its first and last knot.
///
/// These are the computable representatives of test functions: the primal
/// norm `phi(0)^2 + int phi'^2` reduces to a finite sum over segments.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearFn {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseLinearFn {
    /// Builds the function; knots must be finite, strictly increasing and
    /// nonempty, with one value per knot.
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::argument("at least one knot required"));
        }
        if knots.len() != values.len() {
            return Err(Error::argument(format!(
                "knot/value length mismatch: {} knots vs {} values",
                knots.len(),
                values.len()
            )));
        }
        if knots.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(Error::argument("knots and values must be finite"));
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::argument("knots must be strictly increasing"));
        }
        Ok(PiecewiseLinearFn { knots, values })
    }

    /// Constant function `r -> c`.
    pub fn constant(c: f64) -> Self {
        PiecewiseLinearFn {
            knots: vec![0.0],
            values: vec![c],
        }
    }

    /// Identity `r -> r` on the given interval.
    pub fn identity(interval: Interval) -> Self {
        PiecewiseLinearFn {
            knots: vec![interval.left(), interval.right()],
            values: vec![interval.left(), interval.right()],
        }
    }

    /// Tent with vertex value 1 at `center`, vanishing at `left` and `right`.
    pub fn hat(left: f64, center: f64, right: f64) -> Result<Self> {
        PiecewiseLinearFn::new(vec![left, center, right], vec![0.0, 1.0, 0.0])
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Pointwise evaluation with constant extension beyond the knot range.
    pub fn eval(&self, r: f64) -> f64 {
        let n = self.knots.len();
        if r <= self.knots[0] {
            return self.values[0];
        }
        if r >= self.knots[n - 1] {
            return self.values[n - 1];
        }
        let j = match self.knots.partition_point(|&k| k <= r) {
            0 => 0,
            p => p - 1,
        };
        let (k0, k1) = (self.knots[j], self.knots[j + 1]);
        let (v0, v1) = (self.values[j], self.values[j + 1]);
        v0 + (v1 - v0) * (r - k0) / (k1 - k0)
    }

    /// Squared primal norm `phi(0)^2 + int phi'(r)^2 dr`, exact.
    pub fn h_norm_squared(&self) -> f64 {
        let mut total = self.eval(0.0).powi(2);
        for j in 0..self.knots.len().saturating_sub(1) {
            let dk = self.knots[j + 1] - self.knots[j];
            let dv = self.values[j + 1] - self.values[j];
            total += dv * dv / dk;
        }
        total
    }

    /// Primal norm of the function.
    pub fn h_norm(&self) -> f64 {
        self.h_norm_squared().sqrt()
    }

    /// Supremum of `|phi|` over the knot range (and hence over any interval,
    /// by constant extension).
    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, &v| m.max(v.abs()))
    }
}
