//! Shared numerical kernels: log-factorials, binomial weights, decay powers.
//!
//! Everything here is deliberately boring.  The one subtlety worth naming is
//! that binomial masses are assembled in log space and renormalized at the
//! end, so dimensions in the thousands neither overflow nor lose the tiny
//! tail masses to underflow-then-roundoff in intermediate products.

/// ln(i!) for i in 0..=n, built by running accumulation.
///
/// Accumulation (rather than `ln_gamma`) keeps consecutive entries exactly
/// consistent: `lf[i] - lf[i-1] == ln(i)` up to one rounding.
pub fn ln_factorials(n: usize) -> Vec<f64> {
    let mut lf = Vec::with_capacity(n + 1);
    lf.push(0.0);
    let mut acc = 0.0f64;
    for i in 1..=n {
        acc += (i as f64).ln();
        lf.push(acc);
    }
    lf
}

/// Binomial(n, p) probability mass function over 0..=n, renormalized so the
/// returned vector sums to 1 within one rounding of the summation itself.
///
/// Each term is exponentiated from ln C(n,k) + k ln p + (n-k) ln(1-p).
/// Feasible well beyond n = 2048.
pub fn binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    assert!((0.0..=1.0).contains(&p), "p = {p} outside [0,1]");
    if p == 0.0 {
        let mut m = vec![0.0; n + 1];
        m[0] = 1.0;
        return m;
    }
    if p == 1.0 {
        let mut m = vec![0.0; n + 1];
        m[n] = 1.0;
        return m;
    }
    let lf = ln_factorials(n);
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    let mut mass: Vec<f64> = (0..=n)
        .map(|k| {
            let ln_term =
                lf[n] - lf[k] - lf[n - k] + (k as f64) * lp + ((n - k) as f64) * lq;
            ln_term.exp()
        })
        .collect();
    let total: f64 = mass.iter().sum();
    for m in &mut mass {
        *m /= total;
    }
    mass
}

/// gamma^t for gamma = 1 - (1+theta)/(2n), evaluated as exp(t ln1p(..)).
///
/// For n around 1e6 the direct `powi` route would square away the low bits
/// of a gamma that is itself within 1e-6 of 1; going through `ln_1p` keeps
/// full relative precision for t in the tens of millions.
pub fn gamma_pow(n: usize, theta: f64, t: f64) -> f64 {
    let x = -(1.0 + theta) / (2.0 * n as f64);
    (t * x.ln_1p()).exp()
}

/// The decay factor gamma = 1 - (1+theta)/(2n) itself.
pub fn gamma(n: usize, theta: f64) -> f64 {
    1.0 - (1.0 + theta) / (2.0 * n as f64)
}
