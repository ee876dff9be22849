//! Drift machinery: the short rate, the multiplication operator, the star
//! product and the drift `F(mu) = (R(mu) - rho*) mu`, together with the
//! explicit operator bounds that make the drift Lipschitz on probability
//! measures.

use crate::error::{Error, Result};
use crate::measure::{AtomicMeasure, Interval};

/// Mean of the measure, `R(mu) = int r mu(dr) = sum_i w_i r_i`.
///
/// Satisfies `|R(mu)| <= sqrt(a+b) ||mu||`.
pub fn short_rate(mu: &AtomicMeasure) -> f64 {
    mu.atoms()
        .iter()
        .zip(mu.weights())
        .map(|(&r, &w)| w * r)
        .sum()
}

/// Multiplication by the coordinate, `(rho* mu)(dr) = r mu(dr)`.
pub fn rho_star(mu: &AtomicMeasure) -> AtomicMeasure {
    let weights = mu
        .atoms()
        .iter()
        .zip(mu.weights())
        .map(|(&r, &w)| w * r)
        .collect();
    mu.with_weights(weights).expect("same support length")
}

/// Star product `(mu * nu)(dr) = R(mu) nu(dr)`, bilinear in both arguments.
pub fn star_product(mu: &AtomicMeasure, nu: &AtomicMeasure) -> Result<AtomicMeasure> {
    if mu.interval() != nu.interval() {
        return Err(Error::argument(format!(
            "interval mismatch: {} vs {}",
            mu.interval(),
            nu.interval()
        )));
    }
    let r = short_rate(mu);
    let weights = nu.weights().iter().map(|&w| r * w).collect();
    Ok(nu.with_weights(weights).expect("same support length"))
}

/// Drift `F(mu) = (R(mu) - rho*) mu`: atom `i` gets weight
/// `w_i (R(mu) - r_i)`. Zero-weight atoms are retained so support grids stay
/// aligned along a simulated path.
///
/// For a probability measure the result has total mass zero, and every Dirac
/// measure is a fixed point (`F(delta_r) = 0`).
pub fn drift(mu: &AtomicMeasure) -> AtomicMeasure {
    let r_bar = short_rate(mu);
    let weights = mu
        .atoms()
        .iter()
        .zip(mu.weights())
        .map(|(&r, &w)| w * (r_bar - r))
        .collect();
    mu.with_weights(weights).expect("same support length")
}

/// Closed-form operator bounds on `I = [-a, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftConstants {
    pub interval: Interval,
    /// `|R(mu)| <= short_rate_bound * ||mu||`.
    pub short_rate_bound: f64,
    /// `||rho* mu|| <= multiplication_bound * ||mu||`.
    pub multiplication_bound: f64,
    /// `||F(mu) - F(nu)|| <= drift_lipschitz * ||mu - nu||` for probability
    /// measures.
    pub drift_lipschitz: f64,
}

/// Evaluates the three constants for the given interval:
///
/// ```text
/// short_rate_bound      = sqrt(a+b)
/// multiplication_bound  = sqrt(2((a+b)^2 + 2(a+b) + 2))
/// drift_lipschitz       = 2 sqrt(2(a+b)(1+a+b)) + multiplication_bound
/// ```
pub fn drift_constants(interval: Interval) -> DriftConstants {
    let l = interval.length();
    let short_rate_bound = l.sqrt();
    let multiplication_bound = (2.0 * (l * l + 2.0 * l + 2.0)).sqrt();
    let drift_lipschitz = 2.0 * (2.0 * l * (1.0 + l)).sqrt() + multiplication_bound;
    DriftConstants {
        interval,
        short_rate_bound,
        multiplication_bound,
        drift_lipschitz,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit() -> Interval {
        Interval::new(0.0, 1.0).unwrap()
    }

    fn sym() -> Interval {
        Interval::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn short_rate_cases() {
        let d = AtomicMeasure::dirac(sym(), 0.7).unwrap();
        assert!((short_rate(&d) - 0.7).abs() < 1e-15);

        let pm = AtomicMeasure::new(sym(), &[-1.0, 1.0], &[0.5, 0.5]).unwrap();
        assert_eq!(short_rate(&pm), 0.0);

        let half = AtomicMeasure::new(sym(), &[0.0, 1.0], &[0.5, 0.5]).unwrap();
        assert!((short_rate(&half) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rho_star_cases() {
        let d1 = AtomicMeasure::dirac(sym(), 1.0).unwrap();
        let r = rho_star(&d1);
        assert_eq!(r.weights(), &[1.0]);

        let d0 = AtomicMeasure::dirac(sym(), 0.0).unwrap();
        assert_eq!(rho_star(&d0).weights(), &[0.0]);

        let half = AtomicMeasure::new(sym(), &[0.0, 1.0], &[0.5, 0.5]).unwrap();
        assert_eq!(rho_star(&half).weights(), &[0.0, 0.5]);
    }

    #[test]
    fn star_product_cases() {
        let d1 = AtomicMeasure::dirac(sym(), 1.0).unwrap();
        let d0 = AtomicMeasure::dirac(sym(), 0.0).unwrap();
        assert_eq!(star_product(&d1, &d0).unwrap(), d0);

        let nu = AtomicMeasure::new(sym(), &[0.3, 0.9], &[0.4, 0.6]).unwrap();
        let z = star_product(&d0, &nu).unwrap();
        assert!(z.weights().iter().all(|&w| w == 0.0));

        let half = AtomicMeasure::new(sym(), &[0.0, 1.0], &[0.5, 0.5]).unwrap();
        let s = star_product(&half, &d1).unwrap();
        assert_eq!(s.weights(), &[0.5]);

        let foreign = AtomicMeasure::dirac(unit(), 0.5).unwrap();
        assert!(star_product(&d1, &foreign).is_err());
    }

    #[test]
    fn drift_cases() {
        // Dirac measures are fixed points of the drift.
        for r in [-1.0, -0.25, 0.0, 0.5, 1.0] {
            let d = AtomicMeasure::dirac(sym(), r).unwrap();
            assert!(drift(&d).weights().iter().all(|&w| w == 0.0));
        }

        let half = AtomicMeasure::new(unit(), &[0.0, 1.0], &[0.5, 0.5]).unwrap();
        let f = drift(&half);
        assert_eq!(f.weights(), &[0.25, -0.25]);

        let pm = AtomicMeasure::new(sym(), &[-1.0, 1.0], &[0.5, 0.5]).unwrap();
        let f = drift(&pm);
        assert_eq!(f.weights(), &[0.5, -0.5]);
    }

    #[test]
    fn drift_mass_conservation() {
        let m = AtomicMeasure::new(sym(), &[-0.8, -0.1, 0.4, 1.0], &[0.1, 0.3, 0.2, 0.4]).unwrap();
        assert!(drift(&m).total_mass().abs() < 1e-15);
        // In general the mass is R(mu) (mu(I) - 1).
        let signed = AtomicMeasure::new(sym(), &[0.5, 1.0], &[0.4, 0.4]).unwrap();
        let expect = short_rate(&signed) * (signed.total_mass() - 1.0);
        assert!((drift(&signed).total_mass() - expect).abs() < 1e-15);
    }

    #[test]
    fn constants_hand_cases() {
        let c = drift_constants(unit());
        assert!((c.drift_lipschitz - (4.0 + 10f64.sqrt())).abs() < 1e-12);
        assert!((c.short_rate_bound - 1.0).abs() < 1e-15);

        let c = drift_constants(sym());
        assert!((c.multiplication_bound - 20f64.sqrt()).abs() < 1e-12);
        // Algebraic identity between the two forms of the first term.
        let l: f64 = 2.0;
        let alt = 2.0 * l.sqrt() * (2.0 * (1.0 + l)).sqrt() + c.multiplication_bound;
        assert!((c.drift_lipschitz - alt).abs() < 1e-12);
    }

    fn random_probability(rng: &mut ChaCha8Rng, atoms: &[f64], iv: Interval) -> AtomicMeasure {
        let raw: Vec<f64> = atoms.iter().map(|_| -rng.random::<f64>().ln()).collect();
        let s: f64 = raw.iter().sum();
        AtomicMeasure::new(iv, atoms, &raw.iter().map(|w| w / s).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn operator_bounds_random() {
        let iv = sym();
        let c = drift_constants(iv);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let n = rng.random_range(1..=8);
            let mut atoms: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            atoms.sort_by(f64::total_cmp);
            atoms.dedup();
            let weights: Vec<f64> = atoms.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
            let mu = AtomicMeasure::new(iv, &atoms, &weights).unwrap();
            let nu = {
                let w: Vec<f64> = atoms.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
                AtomicMeasure::new(iv, &atoms, &w).unwrap()
            };

            assert!(short_rate(&mu).abs() <= c.short_rate_bound * mu.hstar_norm() + 1e-12);
            assert!(rho_star(&mu).hstar_norm() <= c.multiplication_bound * mu.hstar_norm() + 1e-12);
            assert!(
                star_product(&mu, &nu).unwrap().hstar_norm()
                    <= c.short_rate_bound * mu.hstar_norm() * nu.hstar_norm() + 1e-12
            );
        }
    }

    #[test]
    fn drift_lipschitz_random_probability_pairs() {
        let iv = sym();
        let c1 = drift_constants(iv).drift_lipschitz;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let n = rng.random_range(2..=8);
            let mut atoms: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            atoms.sort_by(f64::total_cmp);
            atoms.dedup();
            let mu = random_probability(&mut rng, &atoms, iv);
            let nu = random_probability(&mut rng, &atoms, iv);
            let lhs = drift(&mu).hstar_distance(&drift(&nu)).unwrap();
            let rhs = c1 * mu.hstar_distance(&nu).unwrap();
            assert!(lhs <= rhs + 1e-12, "lhs={lhs}, rhs={rhs}");
        }
    }

    #[test]
    fn star_product_bilinearity() {
        let iv = sym();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let atoms = [-0.7, 0.1, 0.8];
            let w1: Vec<f64> = atoms.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
            let w2: Vec<f64> = atoms.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
            let w3: Vec<f64> = atoms.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
            let a = AtomicMeasure::new(iv, &atoms, &w1).unwrap();
            let b = AtomicMeasure::new(iv, &atoms, &w2).unwrap();
            let c = AtomicMeasure::new(iv, &atoms, &w3).unwrap();

            // Linearity in the first argument.
            let sum_ab = AtomicMeasure::new(
                iv,
                &atoms,
                &w1.iter().zip(&w2).map(|(x, y)| x + y).collect::<Vec<_>>(),
            )
            .unwrap();
            let lhs = star_product(&sum_ab, &c).unwrap();
            let rhs_a = star_product(&a, &c).unwrap();
            let rhs_b = star_product(&b, &c).unwrap();
            for i in 0..atoms.len() {
                assert!((lhs.weights()[i] - rhs_a.weights()[i] - rhs_b.weights()[i]).abs() < 1e-12);
            }

            // Linearity in the second argument is scaling of weights.
            let lhs2 = star_product(&c, &sum_ab).unwrap();
            let rhs2a = star_product(&c, &a).unwrap();
            let rhs2b = star_product(&c, &b).unwrap();
            for i in 0..atoms.len() {
                assert!(
                    (lhs2.weights()[i] - rhs2a.weights()[i] - rhs2b.weights()[i]).abs() < 1e-12
                );
            }
        }
    }
}
