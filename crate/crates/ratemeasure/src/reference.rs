//! Independent reference computations: the closed-form deterministic flow,
//! brute-force quadrature for the dual norm, and the norm-equivalence
//! constants obtained from hat functions.
//!
//! Everything here deliberately avoids the solver and the closed-form norm
//! code paths it cross-checks.

use crate::error::{Error, Result};
use crate::measure::{AtomicMeasure, Interval, PiecewiseLinearFn};
use crate::pricing::bond_price;

/// Normalizer `G_t = int e^{-rt} mu0(dr)` of the deterministic flow.
pub fn flow_normalizer(mu0: &AtomicMeasure, t: f64) -> f64 {
    mu0.atoms()
        .iter()
        .zip(mu0.weights())
        .map(|(&r, &w)| w * (-r * t).exp())
        .sum()
}

/// Deterministic flow `mu_t(dr) = e^{-rt} mu0(dr) / G_t`, the exact solution
/// of the noise-free evolution. Signed initial measures are accepted as long
/// as `G_t` stays positive.
pub fn deterministic_flow(mu0: &AtomicMeasure, t: f64) -> Result<AtomicMeasure> {
    if !(t >= 0.0) {
        return Err(Error::argument(format!("flow time must be nonnegative, got {t}")));
    }
    let g = flow_normalizer(mu0, t);
    if !(g > 0.0) {
        return Err(Error::domain(format!(
            "flow normalizer must be positive, got G_t = {g}"
        )));
    }
    let weights = mu0
        .atoms()
        .iter()
        .zip(mu0.weights())
        .map(|(&r, &w)| w * (-r * t).exp() / g)
        .collect();
    mu0.with_weights(weights)
}

/// Short rate along the deterministic flow, `R_t = -d/dt log G_t`, evaluated
/// as the mean of the flowed measure.
pub fn deterministic_short_rate(mu0: &AtomicMeasure, t: f64) -> Result<f64> {
    Ok(crate::operators::short_rate(&deterministic_flow(mu0, t)?))
}

/// Both sides of the flow discount identity
/// `e^{-int_t^T R_u du} = G_T / G_t = int e^{-(T-t) r} mu_t(dr)`:
/// returns `(G_T / G_t, bond_price(mu_t, T - t))`.
pub fn flow_discount_identity(mu0: &AtomicMeasure, t: f64, horizon: f64) -> Result<(f64, f64)> {
    if !(0.0 <= t && t <= horizon) {
        return Err(Error::argument(format!(
            "need 0 <= t <= T, got t={t}, T={horizon}"
        )));
    }
    let gt = flow_normalizer(mu0, t);
    let gh = flow_normalizer(mu0, horizon);
    if !(gt > 0.0) || !(gh > 0.0) {
        return Err(Error::domain("flow normalizer must be positive"));
    }
    let mu_t = deterministic_flow(mu0, t)?;
    Ok((gh / gt, bond_price(&mu_t, horizon - t)?))
}

/// Midpoint-rule evaluation of the squared dual norm: the mass term plus the
/// two tail integrals, each integrated with `cells` midpoint cells.
///
/// Converges to the closed form at rate `O(1/cells)` because the integrands
/// jump at atoms.
pub fn hstar_norm_squared_quadrature(mu: &AtomicMeasure, cells: usize) -> Result<f64> {
    if cells == 0 {
        return Err(Error::argument("quadrature needs at least one cell"));
    }
    let interval = mu.interval();
    let mass = mu.total_mass();
    let mut total = mass * mass;

    // Tail mu(r, b]: weight strictly to the right of r.
    let upper_tail = |r: f64| -> f64 {
        mu.atoms()
            .iter()
            .zip(mu.weights())
            .filter(|(&ri, _)| ri > r)
            .map(|(_, &w)| w)
            .sum()
    };
    // Head mu[-a, r): weight strictly to the left of r.
    let lower_head = |r: f64| -> f64 {
        mu.atoms()
            .iter()
            .zip(mu.weights())
            .filter(|(&ri, _)| ri < r)
            .map(|(_, &w)| w)
            .sum()
    };

    let b = interval.right();
    if b > 0.0 {
        let h = b / cells as f64;
        let mut acc = 0.0;
        for i in 0..cells {
            let r = (i as f64 + 0.5) * h;
            let u = upper_tail(r);
            acc += u * u;
        }
        total += acc * h;
    }
    let a = interval.a();
    if a > 0.0 {
        let h = a / cells as f64;
        let mut acc = 0.0;
        for i in 0..cells {
            let r = -a + (i as f64 + 0.5) * h;
            let l = lower_head(r);
            acc += l * l;
        }
        total += acc * h;
    }
    Ok(total)
}

/// Hat functions with vertex value one at each support point: interior atoms
/// get a triangle spanning their two neighbours; boundary atoms keep the
/// single inner slope and extend constantly toward the interval end.
pub fn hat_basis(interval: Interval, support: &[f64]) -> Result<Vec<PiecewiseLinearFn>> {
    validate_support(interval, support)?;
    let n = support.len();
    let mut hats = Vec::with_capacity(n);
    for j in 0..n {
        let mut knots = Vec::with_capacity(3);
        let mut values = Vec::with_capacity(3);
        if j > 0 {
            knots.push(support[j - 1]);
            values.push(0.0);
        }
        knots.push(support[j]);
        values.push(1.0);
        if j + 1 < n {
            knots.push(support[j + 1]);
            values.push(0.0);
        }
        hats.push(PiecewiseLinearFn::new(knots, values)?);
    }
    Ok(hats)
}

/// Constants `(c, C)` of the norm-equivalence sandwich
/// `c sum_i ||z_i|| <= || sum_i z_i delta_{r_i} ||_HS <= C sum_i ||z_i||`:
/// `C` is the largest dual norm of a support Dirac and `c` comes from the hat
/// basis, `c = (1/N) min_j |phi_j(r_j)| / ||phi_j||`.
pub fn norm_equivalence_constants(interval: Interval, support: &[f64]) -> Result<(f64, f64)> {
    validate_support(interval, support)?;
    let big = support
        .iter()
        .map(|&r| {
            AtomicMeasure::dirac(interval, r)
                .expect("support inside interval")
                .hstar_norm()
        })
        .fold(0.0f64, f64::max);
    let hats = hat_basis(interval, support)?;
    let n = support.len() as f64;
    let small = hats
        .iter()
        .map(|phi| 1.0 / phi.h_norm())
        .fold(f64::INFINITY, f64::min)
        / n;
    Ok((small, big))
}

fn validate_support(interval: Interval, support: &[f64]) -> Result<()> {
    if support.is_empty() {
        return Err(Error::argument("support must be nonempty"));
    }
    if support.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::argument(
            "support must be strictly increasing without duplicates",
        ));
    }
    for &r in support {
        if !interval.contains(r) {
            return Err(Error::domain(format!(
                "support point {r} lies outside the interval {interval}"
            )));
        }
    }
    Ok(())
}
