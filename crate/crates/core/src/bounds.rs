//! Closed-form lower and upper bounds on the distance profile, plus the
//! concentration and small-bias helpers the bound derivations rest on.
//!
//! Everything here is a pure formula in (n, theta) and a few auxiliary
//! parameters, valid at sizes far beyond what exact evolution can reach.
//! Bounds with preconditions come back as a [`BoundReport`] carrying a
//! validity flag instead of a bare number; an invalid report must never be
//! compared against exact quantities.  The exact machinery in
//! [`crate::mixing`] is used by the tests to verify that each valid bound
//! sits on the correct side of the truth.

// validation uses the negated form on purpose: !(x > 0) rejects NaN
// where x <= 0 would accept it
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use crate::error::{Error, Result};
use crate::numeric::{gamma, gamma_pow};

/// A bound value together with whether its derivation's preconditions
/// held.  Invalid reports carry the violated precondition and a value of
/// zero that must not be used.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    /// The bound, meaningful only when `valid`.
    pub value: f64,
    /// Whether every precondition of the derivation held.
    pub valid: bool,
    /// The violated precondition when `valid` is false, empty otherwise.
    pub precondition_detail: &'static str,
}

impl BoundReport {
    fn ok(value: f64) -> Self {
        Self { value, valid: true, precondition_detail: "" }
    }

    fn invalid(precondition_detail: &'static str) -> Self {
        Self { value: 0.0, valid: false, precondition_detail }
    }
}

/// The evaluation time both alpha-indexed lower bounds use:
/// round(n log n / (1 + theta) - alpha n), or None when that is negative.
pub fn alpha_time(n: usize, theta: f64, alpha: f64) -> Option<u64> {
    let nf = n as f64;
    let t = nf * nf.ln() / (1.0 + theta) - alpha * nf;
    (t >= 0.0).then(|| t.round() as u64)
}

/// Two-point separation bound: if a statistic separates two distributions
/// by r standard deviations, their total variation distance is at least
/// r^2 / (4 + r^2).
pub fn tv_lower_from_ratio(r: f64) -> f64 {
    let r2 = r * r;
    r2 / (4.0 + r2)
}

/// Lower bound on the distance from stationarity after t steps, started
/// at the all-ones state.  The weight statistic separates the evolved law
/// from stationarity by (n/(1+theta)) gamma^t in mean while both standard
/// deviations stay below sqrt(n)/(1+theta), so the separation ratio is
/// r = sqrt(n) gamma^t.
pub fn distinguishing_lower_bound_at(n: usize, theta: f64, t: u64) -> f64 {
    let r = (n as f64).sqrt() * gamma_pow(n, theta, t as f64);
    tv_lower_from_ratio(r)
}

/// [`distinguishing_lower_bound_at`] evaluated at the alpha-indexed time
/// of [`alpha_time`]; invalid when that time is negative.
pub fn distinguishing_lower_bound(n: usize, theta: f64, alpha: f64) -> BoundReport {
    if !(alpha > 0.0) {
        return BoundReport::invalid("alpha > 0");
    }
    match alpha_time(n, theta, alpha) {
        Some(t) => BoundReport::ok(distinguishing_lower_bound_at(n, theta, t)),
        None => BoundReport::invalid("round(n log n/(1+theta) - alpha n) >= 0"),
    }
}

/// Largest t at which [`distinguishing_lower_bound_at`] still certifies
/// distance > eps; the eps-mixing time therefore exceeds the returned t.
pub fn lower_bound_time(n: usize, theta: f64, eps: f64) -> Result<u64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter {
            name: "eps",
            value: eps,
            expected: "eps in (0, 1)",
        });
    }
    // solve n gamma^{2t} > 4 eps / (1 - eps)
    let threshold = 4.0 * eps / (1.0 - eps);
    if n as f64 <= threshold {
        return Err(Error::InvalidParameter {
            name: "n",
            value: n as f64,
            expected: "n large enough that the bound certifies eps at t = 0",
        });
    }
    let t = (threshold / n as f64).ln() / (2.0 * gamma(n, theta).ln());
    Ok(t.floor() as u64)
}

/// Expected number of coordinates a coordinatewise coupling has not yet
/// matched after t steps: n gamma^t.  By Markov's inequality this also
/// bounds P(not yet coupled), hence the distance from stationarity.
pub fn coupling_tail_bound(n: usize, theta: f64, t: u64) -> f64 {
    n as f64 * gamma_pow(n, theta, t as f64)
}

/// Smallest t with n gamma^t <= eps; the eps-mixing time is at most this.
pub fn coupling_upper_time(n: usize, theta: f64, eps: f64) -> Result<u64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter {
            name: "eps",
            value: eps,
            expected: "eps in (0, 1)",
        });
    }
    let t = (eps / n as f64).ln() / gamma(n, theta).ln();
    Ok(t.ceil().max(0.0) as u64)
}

/// One-sided tail for the weight chain's deviation from its conditional
/// drift path: P(deviation >= s) <= exp(-(2/9) s^2 (1 - gamma^2)).
///
/// The martingale increments contract geometrically at rate gamma, so the
/// exponent carries a 1 - gamma^2 in place of the usual 1/t.
pub fn azuma_tail(n: usize, theta: f64, s: f64) -> f64 {
    let g = gamma(n, theta);
    (-(2.0 / 9.0) * s * s * (1.0 - g * g)).exp()
}

/// Concentration-route lower bound on the distance at the alpha-indexed
/// time t of [`alpha_time`]:
///
/// ```text
/// 1 - exp(-(2/9) s^2 (1 - gamma^2)) - p(1-p)/alpha,
/// s = (1-p) n gamma^t - sqrt(alpha n),
/// ```
///
/// the Chebyshev term being the stationary binomial's tail above
/// n p + sqrt(alpha n).  Clamped below at 0: when s <= 0 or the Chebyshev
/// term dominates, the certificate is vacuous but not wrong.  Invalid
/// when the alpha-indexed time is negative.
pub fn azuma_lower_bound(n: usize, theta: f64, alpha: f64) -> BoundReport {
    if !(alpha > 0.0) {
        return BoundReport::invalid("alpha > 0");
    }
    let Some(t) = alpha_time(n, theta, alpha) else {
        return BoundReport::invalid("round(n log n/(1+theta) - alpha n) >= 0");
    };
    let nf = n as f64;
    let p = theta / (1.0 + theta);
    let s = (1.0 - p) * nf * gamma_pow(n, theta, t as f64) - (alpha * nf).sqrt();
    if s <= 0.0 {
        return BoundReport::ok(0.0);
    }
    let g = gamma(n, theta);
    let tail = (-(2.0 / 9.0) * s * s * (1.0 - g * g)).exp();
    BoundReport::ok((1.0 - tail - p * (1.0 - p) / alpha).max(0.0))
}

/// Mean and a variance upper bound for the count of coordinates never yet
/// refreshed after t steps: (n gamma^t, n gamma^t (1 - gamma^t)).
///
/// Each coordinate survives a step with probability gamma independently
/// of which band fired, and the survival indicators are negatively
/// correlated, so independent-Bernoulli variance is an upper bound.
pub fn coupon_moments(n: usize, theta: f64, t: u64) -> (f64, f64) {
    let g = gamma_pow(n, theta, t as f64);
    let mean = n as f64 * g;
    (mean, mean * (1.0 - g))
}

/// Maximum-crossing tail for a nonnegative supermartingale started at k0
/// with increments bounded by b and conditional variance at least
/// sigma_sq while positive: P(still positive after u steps) <=
/// 4 k0 / (sigma sqrt(u)).  Valid only for u > 12 b^2 / sigma_sq.
pub fn supermartingale_tail(k0: f64, b: f64, sigma_sq: f64, u: f64) -> BoundReport {
    if !(k0 > 0.0 && b > 0.0 && sigma_sq > 0.0) {
        return BoundReport::invalid("k0, b, sigma_sq all positive");
    }
    if !(u > 12.0 * b * b / sigma_sq) {
        return BoundReport::invalid("u > 12 b^2 / sigma_sq");
    }
    BoundReport::ok(4.0 * k0 / (sigma_sq.sqrt() * u.sqrt()))
}

/// Variant of [`supermartingale_tail`] with a free barrier height h:
/// k0/h + 3 k0 h / (u sigma_sq), valid for any u > 0 provided h >= 2b.
///
/// Useful when u is too small for the fixed-constant form; at the
/// barrier of [`optimal_barrier`] it evaluates to
/// 2 sqrt(3) k0 / (sigma sqrt(u)).
pub fn supermartingale_tail_modified(
    k0: f64,
    b: f64,
    sigma_sq: f64,
    u: f64,
    h: f64,
) -> BoundReport {
    if !(k0 > 0.0 && b > 0.0 && sigma_sq > 0.0 && u > 0.0) {
        return BoundReport::invalid("k0, b, sigma_sq, u all positive");
    }
    if h < 2.0 * b {
        return BoundReport::invalid("h >= 2 b");
    }
    BoundReport::ok(k0 / h + 3.0 * k0 * h / (u * sigma_sq))
}

/// The barrier height minimizing [`supermartingale_tail_modified`]:
/// sqrt(u sigma_sq / 3).
pub fn optimal_barrier(sigma_sq: f64, u: f64) -> f64 {
    (u * sigma_sq / 3.0).sqrt()
}

/// The mixing time scale for a bias parameter that may shrink with n:
/// (2 / (1 + theta_n)) n min(log n, log sqrt(n / theta_n)).
///
/// The two min-arguments agree exactly at theta_n = 1/n; above it the
/// sqrt branch is active and the scale tracks how fast theta_n decays,
/// below it the log n branch saturates.  At theta_n = 1 the value reduces
/// to n log n / 2, the constant-bias scale.
pub fn theta_n_cutoff_time(n: usize, theta_n: f64) -> Result<f64> {
    if !(theta_n > 0.0 && theta_n <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "theta_n",
            value: theta_n,
            expected: "theta_n in (0, 1]",
        });
    }
    let nf = n as f64;
    let scale = nf.ln().min((nf / theta_n).sqrt().ln());
    Ok(2.0 / (1.0 + theta_n) * nf * scale)
}

/// Which coordinate of the two-dimensional coupling a variance floor is
/// for: the difference walk r or the sum walk r'.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingCoordinate {
    /// The difference coordinate.
    R,
    /// The sum coordinate.
    Rp,
}

/// Per-step conditional variance floor for a coupling difference walk in
/// the fixed-bias regime, valid while the chain weight k sits in the
/// burn-in window n(p +- delta):
///
/// * r coordinate: 4 (1 - p - delta)(p - delta) theta
/// * r' coordinate: (1 - p - delta) theta
///
/// Invalid when k leaves the window or delta >= p.
pub fn sigma_floor(
    n: usize,
    theta: f64,
    k: usize,
    delta: f64,
    coordinate: CouplingCoordinate,
) -> BoundReport {
    if !(theta > 0.0 && theta <= 1.0) {
        return BoundReport::invalid("theta in (0, 1]");
    }
    let p = theta / (1.0 + theta);
    if !(delta > 0.0 && delta < p) {
        return BoundReport::invalid("delta in (0, theta/(1+theta))");
    }
    let nf = n as f64;
    let kf = k as f64;
    if kf < nf * (p - delta) || kf > nf * (p + delta) {
        return BoundReport::invalid("k inside the burn-in window n(p +- delta)");
    }
    BoundReport::ok(match coordinate {
        CouplingCoordinate::R => 4.0 * (1.0 - p - delta) * (p - delta) * theta,
        CouplingCoordinate::Rp => (1.0 - p - delta) * theta,
    })
}

/// Variance floor for the sum coordinate in the shrinking-bias regime:
/// 4 delta' (1 - p - delta) theta_n, where delta'' = 2 delta/(1 - delta)
/// and delta' is (1 - delta'')/2 when theta_n < delta'' and
/// delta''/(1 + delta'') - delta otherwise.  Requires delta < 1/3 so that
/// delta'' < 1.
pub fn sigma_floor_rp_shrinking(theta_n: f64, delta: f64) -> Result<f64> {
    if !(theta_n > 0.0 && theta_n <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "theta_n",
            value: theta_n,
            expected: "theta_n in (0, 1]",
        });
    }
    if !(delta > 0.0 && delta < 1.0 / 3.0) {
        return Err(Error::InvalidParameter {
            name: "delta",
            value: delta,
            expected: "delta in (0, 1/3)",
        });
    }
    let dpp = 2.0 * delta / (1.0 - delta);
    let dp = if theta_n < dpp {
        (1.0 - dpp) / 2.0
    } else {
        dpp / (1.0 + dpp) - delta
    };
    let p = theta_n / (1.0 + theta_n);
    Ok(4.0 * dp * (1.0 - p - delta) * theta_n)
}

/// Variance floor for the difference coordinate in the shrinking-bias
/// regime, from a base weight of k = k_frac n:
/// 4 (1 - p - delta) k_frac theta_n.
pub fn sigma_floor_r_shrinking(theta_n: f64, delta: f64, k_frac: f64) -> Result<f64> {
    if !(theta_n > 0.0 && theta_n <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "theta_n",
            value: theta_n,
            expected: "theta_n in (0, 1]",
        });
    }
    let p = theta_n / (1.0 + theta_n);
    if !(delta > 0.0 && delta < 1.0 - p) {
        return Err(Error::InvalidParameter {
            name: "delta",
            value: delta,
            expected: "delta in (0, 1 - theta_n/(1+theta_n))",
        });
    }
    if !(k_frac > 0.0 && k_frac <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "k_frac",
            value: k_frac,
            expected: "k_frac in (0, 1]",
        });
    }
    Ok(4.0 * (1.0 - p - delta) * k_frac * theta_n)
}
