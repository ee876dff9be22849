//! Euclidean projection onto the probability simplex
//! `Q = { x : x_i >= 0, sum_i x_i = 1 }`.

use crate::error::{Error, Result};

/// A point of the probability simplex: nonnegative coordinates summing to one
/// (renormalized at construction, so the sum holds to 1e-12).
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint(Vec<f64>);

impl SimplexPoint {
    /// Validates and renormalizes a coordinate vector. Coordinates must be
    /// finite and nonnegative up to 1e-12 (tiny negatives are clamped), and
    /// the sum must already be within 1e-6 of one.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::argument("simplex point needs at least one coordinate"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::argument("simplex coordinates must be finite"));
        }
        if coords.iter().any(|&c| c < -1e-12) {
            return Err(Error::argument(format!(
                "simplex coordinates must be nonnegative, got {coords:?}"
            )));
        }
        let mut coords: Vec<f64> = coords.iter().map(|&c| c.max(0.0)).collect();
        let sum: f64 = coords.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::argument(format!(
                "simplex coordinates must sum to one, got {sum}"
            )));
        }
        for c in &mut coords {
            *c /= sum;
        }
        Ok(SimplexPoint(coords))
    }

    /// Uniform point `(1/n, ..., 1/n)`.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::argument("simplex point needs at least one coordinate"));
        }
        Ok(SimplexPoint(vec![1.0 / n as f64; n]))
    }

    /// Vertex `e_i`.
    pub fn vertex(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::argument(format!("vertex index {i} out of range for n={n}")));
        }
        let mut x = vec![0.0; n];
        x[i] = 1.0;
        Ok(SimplexPoint(x))
    }

    pub(crate) fn from_unchecked(coords: Vec<f64>) -> Self {
        SimplexPoint(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for SimplexPoint {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Euclidean projection onto the simplex by descending sort and threshold:
/// with `u` the sorted coordinates, find the largest `k` such that
/// `u_k - (sum_{j<=k} u_j - 1)/k > 0`, set `tau` to that partial-sum average
/// and clip `x_i - tau` at zero.
///
/// The map is idempotent and 1-Lipschitz. The projection is invariant under
/// shifts along the diagonal, so the arithmetic runs on `x - max(x)`: this
/// keeps the threshold math at unit scale for inputs of any magnitude.
/// Coordinates more than one below the maximum project to zero regardless of
/// their exact value, which lets them be clamped against overflow.
pub fn project(x: &[f64]) -> Result<SimplexPoint> {
    if x.is_empty() {
        return Err(Error::argument("cannot project an empty vector"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::argument("cannot project non-finite coordinates"));
    }
    let shift = x.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let shifted: Vec<f64> = x.iter().map(|&v| (v - shift).max(-2.0)).collect();
    let tau = simplex_threshold(&shifted);
    let coords: Vec<f64> = shifted.iter().map(|&v| (v - tau).max(0.0)).collect();
    Ok(SimplexPoint::from_unchecked(coords))
}

/// Sort-and-threshold level `tau` for coordinates already shifted to at most
/// zero: `sum_i max(0, v_i - tau) = 1`.
pub(crate) fn simplex_threshold(shifted: &[f64]) -> f64 {
    let mut sorted = Vec::with_capacity(shifted.len());
    threshold_with_scratch(shifted, &mut sorted)
}

/// As [`simplex_threshold`], reusing a caller-provided buffer for the sorted
/// copy.
pub(crate) fn threshold_with_scratch(shifted: &[f64], sorted: &mut Vec<f64>) -> f64 {
    sorted.clear();
    sorted.extend_from_slice(shifted);
    sorted.sort_by(|p, q| q.total_cmp(p));
    let mut tau = 0.0;
    let mut cumulative = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (k + 1) as f64;
        if u - candidate > 0.0 {
            tau = candidate;
        }
    }
    tau
}

/// Euclidean distance between coordinate slices of equal length.
pub fn euclidean_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hand_cases() {
        let p = project(&[0.6, 0.6]).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15);
        assert!((p[1] - 0.5).abs() < 1e-15);

        let p = project(&[1.2, -0.1, -0.1]).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-15);
        assert_eq!(p[1], 0.0);
        assert_eq!(p[2], 0.0);

        // Points already in the simplex are fixed.
        let inside = [0.2, 0.3, 0.5];
        let p = project(&inside).unwrap();
        for (a, b) in p.coords().iter().zip(&inside) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(project(&[]).is_err());
        assert!(project(&[f64::NAN, 0.0]).is_err());
        assert!(project(&[f64::INFINITY]).is_err());
    }

    #[test]
    fn point_validation() {
        assert!(SimplexPoint::new(vec![0.5, 0.5]).is_ok());
        assert!(SimplexPoint::new(vec![0.5, 0.4]).is_err());
        assert!(SimplexPoint::new(vec![1.5, -0.5]).is_err());
        assert!(SimplexPoint::new(vec![]).is_err());
        let p = SimplexPoint::vertex(3, 1).unwrap();
        assert_eq!(p.coords(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn obtuseness_inequality() {
        // <proj(x) - x, proj(x) - p> <= 0 for every p in the simplex.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..2000 {
            let n = rng.random_range(1..=12);
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let px = project(&x).unwrap();
            let raw: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().ln()).collect();
            let s: f64 = raw.iter().sum();
            let p: Vec<f64> = raw.iter().map(|v| v / s).collect();
            let dot: f64 = (0..n)
                .map(|i| (px[i] - x[i]) * (px[i] - p[i]))
                .sum();
            assert!(dot <= 1e-12, "dot={dot}");
        }
    }

    proptest! {
        #[test]
        fn idempotent(x in prop::collection::vec(-5.0f64..5.0, 1..20)) {
            let p1 = project(&x).unwrap();
            let p2 = project(p1.coords()).unwrap();
            for (a, b) in p1.coords().iter().zip(p2.coords()) {
                prop_assert!((a - b).abs() <= 1e-14);
            }
        }

        #[test]
        fn one_lipschitz(
            x in prop::collection::vec(-5.0f64..5.0, 1..20),
            y in prop::collection::vec(-5.0f64..5.0, 20),
        ) {
            let y = &y[..x.len()];
            let px = project(&x).unwrap();
            let py = project(y).unwrap();
            prop_assert!(
                euclidean_distance(px.coords(), py.coords())
                    <= euclidean_distance(&x, y) + 1e-12
            );
        }

        #[test]
        fn lands_in_simplex(x in prop::collection::vec(-5.0f64..5.0, 1..20)) {
            let p = project(&x).unwrap();
            prop_assert!(p.coords().iter().all(|&c| c >= 0.0));
            let sum: f64 = p.coords().iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12);
        }
    }
}
