//! Monte Carlo couplings whose coalescence tails certify the closed-form
//! upper bounds and the maximum-crossing arguments.
//!
//! Two constructions:
//!
//! * coordinatewise: two full-space chains fed the same (coordinate, band)
//!   draws.  A refresh band writes the same bit into both chains, so a
//!   coordinate agrees forever once touched and the coalescence time is
//!   dominated by the coupon-collector survival count.
//! * independence: two copies of the two-dimensional projected chain over
//!   the same base weight.  A fair coin picks which copy makes a move with
//!   the laziness stripped (the doubled kernel 2P - I); the idle copy
//!   stays.  Per coordinate the index difference then walks by one unit at
//!   a time and cannot jump over agreement.  Once a coordinate agrees it
//!   is locked: proposals in a locked coordinate are accepted for both
//!   copies or rejected for both on a second fair coin, which keeps each
//!   copy's marginal transition law exactly the lazy kernel.
//!
//! Replicates draw from independent, reproducible streams of one seeded
//! generator, so estimates are bit-identical across runs and thread
//! counts.

use crate::error::{Error, Result};
use crate::model::{band_move, is_refresh, BandMove, HypercubeState, ModelParams};
use crate::numeric::binomial_pmf;
use crate::projection::{kernel_1d, kernel_2d, Kernel2D, State2D};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// The generator for one replicate: a fixed-seed stream family, stream
/// index = replicate index.
pub fn replicate_rng(master_seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(replicate);
    rng
}

/// Result of one coordinatewise coupling run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CouplingOutcome {
    /// First step at which the chains agreed everywhere, if within the cap.
    pub coalesced: Option<u64>,
    /// Steps the run was allowed.
    pub capped_at: u64,
    /// Hamming distance between the chains when the run stopped.
    pub final_hamming: usize,
    /// First chain's state when the run stopped.
    pub final_x: HypercubeState,
    /// Second chain's state when the run stopped.
    pub final_y: HypercubeState,
}

/// Result of one independence coupling run on the projected chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Coupling2DOutcome {
    /// First step with equal difference coordinates, if within the cap.
    pub tau_r: Option<u64>,
    /// First step with equal sum coordinates, if within the cap.
    pub tau_rp: Option<u64>,
    /// Steps the run was allowed.
    pub capped_at: u64,
    /// Copy-one state when the run stopped.
    pub final_a: State2D,
    /// Copy-two state when the run stopped.
    pub final_b: State2D,
}

impl Coupling2DOutcome {
    /// Full coalescence time: both coordinates agree from this step on.
    pub fn tau(&self) -> Option<u64> {
        match (self.tau_r, self.tau_rp) {
            (Some(a), Some(b)) => Some(a.max(b)),
            _ => None,
        }
    }
}

/// Runs the shared-randomness coordinatewise coupling for up to `cap`
/// steps.  Each step consumes one coordinate index and one band uniform,
/// in that order.
pub fn run_coordinatewise<R: Rng>(
    model: &ModelParams,
    x0: &HypercubeState,
    y0: &HypercubeState,
    cap: u64,
    rng: &mut R,
) -> Result<CouplingOutcome> {
    model.require_half_lazy()?;
    let n = model.n();
    if x0.n() != n || y0.n() != n {
        return Err(Error::DimensionMismatch {
            left: format!("states of dimension {} and {}", x0.n(), y0.n()),
            right: format!("model dimension {n}"),
        });
    }
    let theta = model.theta();
    let mut x = x0.clone();
    let mut y = y0.clone();
    let mut disagree = x.hamming(&y)?;
    let mut coalesced = if disagree == 0 { Some(0) } else { None };

    for t in 1..=cap {
        let i = rng.random_range(0..n);
        let u: f64 = rng.random();
        match band_move(theta, u) {
            BandMove::Keep => {}
            mv => {
                let bit = matches!(mv, BandMove::SetOne);
                let differed = x.bit(i) != y.bit(i);
                x.set_bit(i, bit);
                y.set_bit(i, bit);
                if differed {
                    disagree -= 1;
                    if disagree == 0 && coalesced.is_none() {
                        coalesced = Some(t);
                    }
                }
            }
        }
        // agreement is absorbing under shared draws
        debug_assert!(coalesced.is_none() || disagree == 0);
    }
    Ok(CouplingOutcome {
        coalesced,
        capped_at: cap,
        final_hamming: disagree,
        final_x: x,
        final_y: y,
    })
}

/// A move of the doubled (laziness-stripped) projected kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Move2D {
    RUp,
    RDown,
    RpUp,
    RpDown,
    Stay,
}

fn draw_nonlazy(kernel: &Kernel2D, i: usize, j: usize, u: f64) -> Move2D {
    let mut acc = 2.0 * kernel.r_up[i];
    if u < acc {
        return Move2D::RUp;
    }
    acc += 2.0 * kernel.r_down[i];
    if u < acc {
        return Move2D::RDown;
    }
    acc += 2.0 * kernel.rp_up[j];
    if u < acc {
        return Move2D::RpUp;
    }
    acc += 2.0 * kernel.rp_down[j];
    if u < acc {
        return Move2D::RpDown;
    }
    Move2D::Stay
}

fn apply_move(cell: &mut (usize, usize), mv: Move2D) {
    match mv {
        Move2D::RUp => cell.0 += 1,
        Move2D::RDown => cell.0 -= 1,
        Move2D::RpUp => cell.1 += 1,
        Move2D::RpDown => cell.1 -= 1,
        Move2D::Stay => {}
    }
}

/// Runs the independence coupling of two projected-chain copies for up to
/// `cap` steps.
///
/// Per step the draw order is: fair coin for the active copy, one uniform
/// for the active copy's doubled-kernel move, and, only when that move
/// falls in a locked coordinate, a second fair coin for joint accept or
/// joint reject.
pub fn run_independence_2d<R: Rng>(
    kernel: &Kernel2D,
    a0: &State2D,
    b0: &State2D,
    cap: u64,
    rng: &mut R,
) -> Result<Coupling2DOutcome> {
    let lattice = kernel.lattice();
    let mut a = lattice.cell_of(a0)?;
    let mut b = lattice.cell_of(b0)?;

    let mut tau_r = if a.0 == b.0 { Some(0) } else { None };
    let mut tau_rp = if a.1 == b.1 { Some(0) } else { None };
    // unit steps cannot jump over agreement, so the sign of an unlocked
    // difference is invariant until it locks
    let r_sign0 = (a.0 as i64 - b.0 as i64).signum();
    let rp_sign0 = (a.1 as i64 - b.1 as i64).signum();

    for t in 1..=cap {
        let active_is_a: bool = rng.random();
        let u: f64 = rng.random();
        let (act, idle) = if active_is_a { (&mut a, &mut b) } else { (&mut b, &mut a) };
        let mv = draw_nonlazy(kernel, act.0, act.1, u);
        let locked = match mv {
            Move2D::RUp | Move2D::RDown => tau_r.is_some(),
            Move2D::RpUp | Move2D::RpDown => tau_rp.is_some(),
            Move2D::Stay => false,
        };
        if locked {
            let accept: bool = rng.random();
            if accept {
                apply_move(act, mv);
                apply_move(idle, mv);
            }
        } else {
            apply_move(act, mv);
        }

        if tau_r.is_none() && a.0 == b.0 {
            tau_r = Some(t);
        }
        if tau_rp.is_none() && a.1 == b.1 {
            tau_rp = Some(t);
        }
        debug_assert!(tau_r.is_none() || a.0 == b.0, "locked difference reopened");
        debug_assert!(tau_rp.is_none() || a.1 == b.1, "locked sum reopened");
        debug_assert!(
            tau_r.is_some() || (a.0 as i64 - b.0 as i64).signum() == r_sign0,
            "difference coordinate jumped over agreement"
        );
        debug_assert!(
            tau_rp.is_some() || (a.1 as i64 - b.1 as i64).signum() == rp_sign0,
            "sum coordinate jumped over agreement"
        );
    }

    Ok(Coupling2DOutcome {
        tau_r,
        tau_rp,
        capped_at: cap,
        final_a: lattice.state_at(a.0, a.1),
        final_b: lattice.state_at(b.0, b.1),
    })
}

/// Inverse-CDF sampler for the projected chain's stationary law: index i
/// is binomial over the base-one coordinates, index j binomial over the
/// base-zero coordinates, independently.
struct StationarySampler2D {
    cdf_i: Vec<f64>,
    cdf_j: Vec<f64>,
}

impl StationarySampler2D {
    fn new(model: &ModelParams, k: usize) -> Result<Self> {
        let p = model.p();
        let cdf = |pmf: Vec<f64>| {
            pmf.into_iter()
                .scan(0.0, |acc, m| {
                    *acc += m;
                    Some(*acc)
                })
                .collect::<Vec<f64>>()
        };
        Ok(Self {
            cdf_i: cdf(binomial_pmf(k, 1.0 - p)),
            cdf_j: cdf(binomial_pmf(model.n() - k, p)),
        })
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> (usize, usize) {
        let pick = |cdf: &[f64], u: f64| {
            cdf.iter().position(|&c| u < c).unwrap_or(cdf.len() - 1)
        };
        let u: f64 = rng.random();
        let i = pick(&self.cdf_i, u);
        let v: f64 = rng.random();
        let j = pick(&self.cdf_j, v);
        (i, j)
    }
}

/// Where the second copy of the independence coupling starts.
#[derive(Debug, Clone)]
pub enum Start2D {
    /// A fixed lattice state.
    At(State2D),
    /// A fresh stationary draw per replicate (two uniforms, consumed
    /// before the step stream).
    Stationary,
}

/// Which coupling to estimate a coalescence tail for.
#[derive(Debug, Clone)]
pub enum CouplingSpec {
    /// Shared-randomness coupling of two full-space chains.
    Coordinatewise {
        /// First chain's start.
        x0: HypercubeState,
        /// Second chain's start.
        y0: HypercubeState,
    },
    /// Independence coupling of two projected copies over base weight k.
    Independence2D {
        /// Base weight of the shared lattice.
        k: usize,
        /// First copy's start.
        a0: State2D,
        /// Second copy's start.
        b0: Start2D,
    },
}

/// Empirical tail of a coalescence time at one threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct TailEstimate {
    /// The step count the tail is evaluated at.
    pub threshold: u64,
    /// Fraction of replicates with coalescence strictly after the
    /// threshold; capped runs count as exceeding every threshold.
    pub p_hat: f64,
    /// sqrt(p_hat (1 - p_hat) / replicates).
    pub se: f64,
    /// Replicates run.
    pub replicates: usize,
    /// The master seed the replicate streams derive from.
    pub seed: u64,
}

/// Tail estimates over a threshold grid, with the capped-run count.
#[derive(Debug, Clone, PartialEq)]
pub struct TailSummary {
    /// One estimate per threshold, thresholds strictly increasing.
    pub estimates: Vec<TailEstimate>,
    /// Replicates that never coalesced within the cap (the largest
    /// threshold); never dropped, always reported.
    pub capped: usize,
    /// The cap the runs used.
    pub cap: u64,
}

/// Estimates P(coalescence > t) at each threshold, running one replicate
/// per stream of the master seed.  Replicates run in parallel; results do
/// not depend on the thread count.
pub fn estimate_coupling_tail(
    model: &ModelParams,
    spec: &CouplingSpec,
    replicates: usize,
    master_seed: u64,
    thresholds: &[u64],
) -> Result<TailSummary> {
    if replicates == 0 {
        return Err(Error::InvalidParameter {
            name: "replicates",
            value: 0.0,
            expected: "at least one replicate",
        });
    }
    let mut thresholds = thresholds.to_vec();
    thresholds.sort_unstable();
    thresholds.dedup();
    let cap = *thresholds.last().ok_or(Error::InvalidParameter {
        name: "thresholds",
        value: 0.0,
        expected: "at least one threshold",
    })?;

    let taus: Vec<Option<u64>> = match spec {
        CouplingSpec::Coordinatewise { x0, y0 } => (0..replicates as u64)
            .into_par_iter()
            .map(|rep| {
                let mut rng = replicate_rng(master_seed, rep);
                run_coordinatewise(model, x0, y0, cap, &mut rng).map(|o| o.coalesced)
            })
            .collect::<Result<_>>()?,
        CouplingSpec::Independence2D { k, a0, b0 } => {
            let kernel = kernel_2d(model, *k)?;
            let lattice = kernel.lattice();
            lattice.cell_of(a0)?;
            let sampler = match b0 {
                Start2D::At(state) => {
                    lattice.cell_of(state)?;
                    None
                }
                Start2D::Stationary => Some(StationarySampler2D::new(model, *k)?),
            };
            (0..replicates as u64)
                .into_par_iter()
                .map(|rep| {
                    let mut rng = replicate_rng(master_seed, rep);
                    let b0 = match (b0, &sampler) {
                        (Start2D::At(state), _) => *state,
                        (Start2D::Stationary, Some(s)) => {
                            let (i, j) = s.draw(&mut rng);
                            lattice.state_at(i, j)
                        }
                        (Start2D::Stationary, None) => unreachable!(),
                    };
                    run_independence_2d(&kernel, a0, &b0, cap, &mut rng).map(|o| o.tau())
                })
                .collect::<Result<_>>()?
        }
    };

    let capped = taus.iter().filter(|t| t.is_none()).count();
    let estimates = thresholds
        .iter()
        .map(|&thr| {
            let exceed = taus.iter().filter(|t| t.is_none_or(|tau| tau > thr)).count();
            let p_hat = exceed as f64 / replicates as f64;
            TailEstimate {
                threshold: thr,
                p_hat,
                se: (p_hat * (1.0 - p_hat) / replicates as f64).sqrt(),
                replicates,
                seed: master_seed,
            }
        })
        .collect();
    Ok(TailSummary { estimates, capped, cap })
}

/// Simulates the refresh process for t steps and reports which
/// coordinates were never refreshed (true = still carrying its initial
/// value's law).  Only the band draw matters, so no chain state is
/// tracked.
pub fn simulate_coupon_mask<R: Rng>(
    model: &ModelParams,
    t: u64,
    rng: &mut R,
) -> Result<Vec<bool>> {
    model.require_half_lazy()?;
    let n = model.n();
    let theta = model.theta();
    let mut untouched = vec![true; n];
    for _ in 0..t {
        let i = rng.random_range(0..n);
        let u: f64 = rng.random();
        if is_refresh(theta, u) {
            untouched[i] = false;
        }
    }
    Ok(untouched)
}

/// Simulates the count of coordinates never refreshed during t steps.
pub fn simulate_coupon<R: Rng>(model: &ModelParams, t: u64, rng: &mut R) -> Result<usize> {
    Ok(simulate_coupon_mask(model, t, rng)?.iter().filter(|&&b| b).count())
}

/// Empirical (mean, variance) of the never-refreshed count over
/// independent replicate streams of the master seed.
pub fn coupon_statistics(
    model: &ModelParams,
    t: u64,
    replicates: usize,
    master_seed: u64,
) -> Result<(f64, f64)> {
    if replicates == 0 {
        return Err(Error::InvalidParameter {
            name: "replicates",
            value: 0.0,
            expected: "at least one replicate",
        });
    }
    let counts: Vec<f64> = (0..replicates as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replicate_rng(master_seed, rep);
            simulate_coupon(model, t, &mut rng).map(|c| c as f64)
        })
        .collect::<Result<_>>()?;
    Ok(crate::stats::sample_mean_var(&counts))
}

/// Runs the full chain for `steps` burn-in steps and reports the weight it
/// lands on.  Callers use this to pick the base weight of a lattice after
/// the chain has forgotten its start.
pub fn burn_in_weight<R: Rng>(
    model: &ModelParams,
    x0: &HypercubeState,
    steps: u64,
    rng: &mut R,
) -> Result<usize> {
    Ok(crate::model::simulate_chain(model, x0, steps, rng)?.weight())
}

/// Simulates the projected weight chain for t steps from weight k0.
/// One uniform per step.
pub fn simulate_weight_chain<R: Rng>(
    model: &ModelParams,
    k0: usize,
    t: u64,
    rng: &mut R,
) -> Result<usize> {
    let kernel = kernel_1d(model)?;
    if k0 > model.n() {
        return Err(Error::InvalidParameter {
            name: "k0",
            value: k0 as f64,
            expected: "k0 <= n",
        });
    }
    let mut s = k0;
    for _ in 0..t {
        let u: f64 = rng.random();
        if u < kernel.up[s] {
            s += 1;
        } else if u < kernel.up[s] + kernel.down[s] {
            s -= 1;
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{
        azuma_tail, coupling_tail_bound, coupon_moments, sigma_floor, CouplingCoordinate,
    };
    use crate::mixing::{evolve_1d, evolve_2d, expected_weight};
    use crate::model::metropolis_row;
    use crate::projection::{Dist1D, Dist2D};
    use crate::stats::{bernoulli_se, chi_square_critical, chi_square_pooled, sample_mean_var};

    #[test]
    fn identical_starts_coalesce_immediately() {
        let model = ModelParams::half_lazy(6, 0.7).unwrap();
        let x = HypercubeState::first_k_ones(6, 3).unwrap();
        let mut rng = replicate_rng(11, 0);
        let out = run_coordinatewise(&model, &x, &x, 50, &mut rng).unwrap();
        assert_eq!(out.coalesced, Some(0));
        assert_eq!(out.final_hamming, 0);

        let kernel = kernel_2d(&model, 3).unwrap();
        let a = kernel.lattice().base_state();
        let out = run_independence_2d(&kernel, &a, &a, 50, &mut rng).unwrap();
        assert_eq!(out.tau(), Some(0));
        assert_eq!(out.final_a, out.final_b);
    }

    #[test]
    fn coordinatewise_tail_obeys_coupon_bound() {
        let n = 12usize;
        let model = ModelParams::half_lazy(n, 0.8).unwrap();
        let x0 = HypercubeState::all_zeros(n);
        let y0 = HypercubeState::all_ones(n);
        let thresholds = [10u64, 30, 60, 120];
        let summary = estimate_coupling_tail(
            &model,
            &CouplingSpec::Coordinatewise { x0, y0 },
            4000,
            2024,
            &thresholds,
        )
        .unwrap();
        for est in &summary.estimates {
            let bound = coupling_tail_bound(n, 0.8, est.threshold).min(1.0);
            let slack = 3.0 * bernoulli_se(bound.max(0.01), est.replicates);
            assert!(
                est.p_hat <= bound + slack,
                "t={}: p_hat {} above bound {bound} + {slack}",
                est.threshold,
                est.p_hat
            );
        }
    }

    #[test]
    fn coordinatewise_marginal_one_step_frequencies() {
        // each coupled chain, viewed alone, must step by the single-site
        // kernel; compare copy-one frequencies against its kernel row
        let n = 4usize;
        let model = ModelParams::half_lazy(n, 0.6).unwrap();
        let x0 = HypercubeState::first_k_ones(n, 2).unwrap();
        let y0 = HypercubeState::all_zeros(n);
        let row = metropolis_row(&model, &x0).unwrap();
        let reps = 100_000usize;
        let mut counts = vec![0u64; 1 << n];
        for rep in 0..reps as u64 {
            let mut rng = replicate_rng(117, rep);
            let out = run_coordinatewise(&model, &x0, &y0, 1, &mut rng).unwrap();
            counts[out.final_x.index() as usize] += 1;
        }
        for (idx, &c) in counts.iter().enumerate() {
            let y = HypercubeState::from_index(n, idx as u64).unwrap();
            let expect = row.prob_to(&y);
            let freq = c as f64 / reps as f64;
            let slack = 4.0 * bernoulli_se(expect.max(1e-4), reps);
            assert!(
                (freq - expect).abs() <= slack,
                "state {idx}: freq {freq} vs kernel {expect}"
            );
        }
    }

    #[test]
    fn coordinatewise_coalesced_runs_end_equal() {
        let n = 10usize;
        let model = ModelParams::half_lazy(n, 1.0).unwrap();
        let x0 = HypercubeState::all_zeros(n);
        let y0 = HypercubeState::all_ones(n);
        let mut seen_coalesced = 0;
        for rep in 0..200u64 {
            let mut rng = replicate_rng(5150, rep);
            let out = run_coordinatewise(&model, &x0, &y0, 300, &mut rng).unwrap();
            if let Some(tau) = out.coalesced {
                assert!(tau <= out.capped_at);
                assert_eq!(out.final_hamming, 0);
                seen_coalesced += 1;
            }
        }
        assert!(seen_coalesced > 150, "only {seen_coalesced} of 200 coalesced");
    }

    #[test]
    fn independence_marginal_one_step_frequencies() {
        // copy-one one-step law must match the lazy kernel row even while
        // the two-coin locked mechanism is in play; start with the sum
        // coordinate locked to exercise it
        let n = 8usize;
        let k = 3usize;
        let model = ModelParams::half_lazy(n, 0.6).unwrap();
        let kernel = kernel_2d(&model, k).unwrap();
        let lattice = kernel.lattice();
        let a0 = State2D::new(-1, 9, k);
        let b0 = State2D::new(1, 9, k);
        let reps = 100_000usize;

        let mut counts = vec![0u64; lattice.len()];
        for rep in 0..reps as u64 {
            let mut rng = replicate_rng(31, rep);
            let out = run_independence_2d(&kernel, &a0, &b0, 1, &mut rng).unwrap();
            let cell = lattice.cell_of(&out.final_a).unwrap();
            counts[lattice.flat(cell.0, cell.1)] += 1;
        }

        let exact = evolve_2d(&kernel, &Dist2D::point(lattice, &a0).unwrap(), 1).unwrap();
        for (idx, (&c, &e)) in counts.iter().zip(exact.mass()).enumerate() {
            let freq = c as f64 / reps as f64;
            let slack = 4.0 * bernoulli_se(e.max(1e-4), reps);
            assert!(
                (freq - e).abs() <= slack,
                "cell {idx}: freq {freq} vs exact {e} (slack {slack})"
            );
        }
    }

    #[test]
    fn independence_marginal_chi_square_at_t20() {
        let n = 8usize;
        let k = 3usize;
        let model = ModelParams::half_lazy(n, 0.6).unwrap();
        let kernel = kernel_2d(&model, k).unwrap();
        let lattice = kernel.lattice();
        let a0 = lattice.base_state();
        let b0 = State2D::new(k as i64, (2 * n - k) as i64, k);
        let t = 20u64;
        let reps = 100_000usize;

        let mut counts = vec![0u64; lattice.len()];
        for rep in 0..reps as u64 {
            let mut rng = replicate_rng(47, rep);
            let out = run_independence_2d(&kernel, &a0, &b0, t, &mut rng).unwrap();
            let cell = lattice.cell_of(&out.final_a).unwrap();
            counts[lattice.flat(cell.0, cell.1)] += 1;
        }

        let exact = evolve_2d(&kernel, &Dist2D::point(lattice, &a0).unwrap(), t).unwrap();
        let expected: Vec<f64> = exact.mass().iter().map(|&m| m * reps as f64).collect();
        let pooled = chi_square_pooled(&counts, &expected, 5.0).unwrap();
        let critical = chi_square_critical(pooled.dof, 0.01).unwrap();
        assert!(
            pooled.statistic <= critical,
            "chi-square {} above the 1% critical value {critical} (dof {})",
            pooled.statistic,
            pooled.dof
        );
    }

    #[test]
    fn independence_tau_is_max_and_coalesced_runs_end_equal() {
        let n = 9usize;
        let k = 4usize;
        let model = ModelParams::half_lazy(n, 1.0).unwrap();
        let kernel = kernel_2d(&model, k).unwrap();
        let a0 = kernel.lattice().base_state();
        let b0 = State2D::new(k as i64, (2 * n - k) as i64, k);
        let mut coalesced = 0usize;
        for rep in 0..500u64 {
            let mut rng = replicate_rng(90125, rep);
            let out = run_independence_2d(&kernel, &a0, &b0, 3000, &mut rng).unwrap();
            if let (Some(tr), Some(trp)) = (out.tau_r, out.tau_rp) {
                assert_eq!(out.tau(), Some(tr.max(trp)));
                assert_eq!(out.final_a, out.final_b);
                coalesced += 1;
            }
        }
        assert!(coalesced > 450, "only {coalesced} of 500 coalesced");
    }

    #[test]
    fn one_step_difference_variance_beats_sigma_floor() {
        // empirical conditional variance of the r-difference walk from an
        // uncoupled state, against the fixed-bias floor
        let n = 100usize;
        let k = 50usize;
        let model = ModelParams::half_lazy(n, 1.0).unwrap();
        let kernel = kernel_2d(&model, k).unwrap();
        let a0 = State2D::new(-(k as i64), 100, k);
        let b0 = State2D::new(k as i64, 100, k);
        let reps = 100_000usize;
        let d0 = a0.r - b0.r;
        let mut diffs = Vec::with_capacity(reps);
        for rep in 0..reps as u64 {
            let mut rng = replicate_rng(2718, rep);
            let out = run_independence_2d(&kernel, &a0, &b0, 1, &mut rng).unwrap();
            diffs.push(((out.final_a.r - out.final_b.r) - d0) as f64);
        }
        let (_, var) = sample_mean_var(&diffs);
        let floor = sigma_floor(n, 1.0, k, 0.05, CouplingCoordinate::R);
        assert!(floor.valid);
        // variance estimator noise at this sample size is far under 0.05
        assert!(
            var >= floor.value - 0.05,
            "one-step variance {var} under floor {}",
            floor.value
        );
    }

    #[test]
    fn tail_estimates_are_deterministic_and_monotone() {
        let model = ModelParams::half_lazy(10, 1.0).unwrap();
        let spec = CouplingSpec::Independence2D {
            k: 5,
            a0: State2D::new(-5, 5, 5),
            b0: Start2D::At(State2D::new(5, 15, 5)),
        };
        let thresholds = [5u64, 20, 80, 320];
        let one = estimate_coupling_tail(&model, &spec, 600, 7, &thresholds).unwrap();
        let two = estimate_coupling_tail(&model, &spec, 600, 7, &thresholds).unwrap();
        assert_eq!(one, two);
        let p_hats: Vec<f64> = one.estimates.iter().map(|e| e.p_hat).collect();
        assert!(p_hats.windows(2).all(|w| w[1] <= w[0]));
        assert!(one.capped <= 600);
        // capped runs are exactly the runs exceeding the cap threshold
        let last = one.estimates.last().unwrap();
        assert_eq!((last.p_hat * 600.0).round() as usize, one.capped);
        for est in &one.estimates {
            let se = (est.p_hat * (1.0 - est.p_hat) / 600.0).sqrt();
            assert!((est.se - se).abs() < 1e-15);
            assert_eq!(est.seed, 7);
        }

        let other_seed = estimate_coupling_tail(&model, &spec, 600, 8, &thresholds).unwrap();
        assert_ne!(
            one.estimates.iter().map(|e| e.p_hat).collect::<Vec<_>>(),
            other_seed.estimates.iter().map(|e| e.p_hat).collect::<Vec<_>>()
        );
    }

    #[test]
    fn single_replicate_tail_is_zero_or_one() {
        let model = ModelParams::half_lazy(8, 1.0).unwrap();
        let spec = CouplingSpec::Independence2D {
            k: 4,
            a0: State2D::new(-4, 4, 4),
            b0: Start2D::At(State2D::new(4, 12, 4)),
        };
        let summary = estimate_coupling_tail(&model, &spec, 1, 99, &[3, 50]).unwrap();
        for est in &summary.estimates {
            assert!(est.p_hat == 0.0 || est.p_hat == 1.0);
            assert_eq!(est.se, 0.0);
        }
    }

    #[test]
    fn stationary_second_start_dominates_exact_distance() {
        // coupling inequality: with the second copy started from the
        // stationary law, P(tau > t) + 3 SE must sit above the exact
        // distance from the base start
        let n = 16usize;
        let k = 8usize;
        let model = ModelParams::half_lazy(n, 1.0).unwrap();
        let kernel = kernel_2d(&model, k).unwrap();
        let lattice = kernel.lattice();
        let spec = CouplingSpec::Independence2D {
            k,
            a0: lattice.base_state(),
            b0: Start2D::Stationary,
        };
        let t_star = (n as f64 * (n as f64).ln() / 2.0).round() as u64;
        let thresholds = [t_star / 2, t_star, 2 * t_star, 4 * t_star];
        let summary = estimate_coupling_tail(&model, &spec, 8000, 1234, &thresholds).unwrap();

        let pi = crate::projection::stationary_2d(&model, k).unwrap();
        let init = Dist2D::point_at_base(lattice);
        for est in &summary.estimates {
            let evolved = evolve_2d(&kernel, &init, est.threshold).unwrap();
            let exact = evolved.tv(&pi).unwrap();
            assert!(
                est.p_hat + 3.0 * est.se.max(1e-3) >= exact,
                "t={}: p_hat {} + noise below exact {exact}",
                est.threshold,
                est.p_hat
            );
        }
    }

    #[test]
    fn coupon_simulation_matches_moment_formulas() {
        let n = 30usize;
        let model = ModelParams::half_lazy(n, 1.0).unwrap();
        let t = 40u64;
        let reps = 20_000usize;
        let (mean, var) = coupon_statistics(&model, t, reps, 314).unwrap();
        let (m, v_bound) = coupon_moments(n, 1.0, t);
        let mean_slack = 4.0 * (v_bound / reps as f64).sqrt();
        assert!((mean - m).abs() <= mean_slack, "{mean} vs {m} ({mean_slack})");
        // negative correlation keeps the variance below the independent
        // bound; allow estimator noise on top
        let var_se = v_bound * (2.0 / (reps as f64 - 1.0)).sqrt();
        assert!(var <= v_bound + 4.0 * var_se, "{var} vs {v_bound}");

        // nothing refreshes in zero steps, and replays are bit-identical
        let (m0, v0) = coupon_statistics(&model, 0, 50, 1).unwrap();
        assert_eq!((m0, v0), (n as f64, 0.0));
        assert_eq!(
            coupon_statistics(&model, t, 500, 314).unwrap(),
            coupon_statistics(&model, t, 500, 314).unwrap()
        );
    }

    #[test]
    fn burn_in_weight_law_matches_level_projection() {
        // the full chain run literally, then projected, must land on the
        // exact level law
        let n = 12usize;
        let model = ModelParams::half_lazy(n, 0.8).unwrap();
        let x0 = HypercubeState::all_ones(n);
        let t = 30u64;
        let reps = 20_000usize;
        let mut counts = vec![0u64; n + 1];
        for rep in 0..reps as u64 {
            let mut rng = replicate_rng(808, rep);
            counts[burn_in_weight(&model, &x0, t, &mut rng).unwrap()] += 1;
        }
        let kernel = kernel_1d(&model).unwrap();
        let exact = evolve_1d(&kernel, &Dist1D::point(n, n).unwrap(), t).unwrap();
        for (w, (&c, &e)) in counts.iter().zip(exact.mass()).enumerate() {
            let freq = c as f64 / reps as f64;
            let slack = 4.0 * bernoulli_se(e.max(1e-4), reps);
            assert!((freq - e).abs() <= slack, "weight {w}: {freq} vs {e}");
        }
    }

    #[test]
    fn burn_in_lands_in_window_with_certified_frequency() {
        // after 6n steps from all-ones the weight sits in n(p +- delta)
        // at least as often as the two-sided deviation bound certifies
        let n = 400usize;
        let theta = 1.0;
        let delta = 0.1f64;
        let model = ModelParams::half_lazy(n, theta).unwrap();
        let x0 = HypercubeState::all_ones(n);
        let steps = 6 * n as u64;
        let reps = 1000usize;
        let mean = expected_weight(&model, n, steps);
        let lo = (n as f64) * (model.p() - delta);
        let hi = (n as f64) * (model.p() + delta);
        let mut within = 0usize;
        for rep in 0..reps as u64 {
            let mut rng = replicate_rng(1896, rep);
            let w = burn_in_weight(&model, &x0, steps, &mut rng).unwrap() as f64;
            if w >= lo && w <= hi {
                within += 1;
            }
        }
        let freq = within as f64 / reps as f64;
        let floor = 1.0
            - azuma_tail(n, theta, hi - mean)
            - azuma_tail(n, theta, mean - lo)
            - 3.0 * bernoulli_se(0.5, reps);
        assert!(floor > 0.5, "test parameters make the floor vacuous: {floor}");
        assert!(freq >= floor, "freq {freq} below certified floor {floor}");
    }

    #[test]
    fn coupon_indicators_negatively_correlated() {
        // empirical covariance of two untouched indicators at n=4, t=3
        let n = 4usize;
        let model = ModelParams::half_lazy(n, 1.0).unwrap();
        let reps = 100_000usize;
        let (mut c0, mut c1, mut c01) = (0u64, 0u64, 0u64);
        for rep in 0..reps as u64 {
            let mut rng = replicate_rng(161803, rep);
            let mask = simulate_coupon_mask(&model, 3, &mut rng).unwrap();
            c0 += mask[0] as u64;
            c1 += mask[1] as u64;
            c01 += (mask[0] && mask[1]) as u64;
        }
        let rf = reps as f64;
        let cov = c01 as f64 / rf - (c0 as f64 / rf) * (c1 as f64 / rf);
        let slack = 3.0 * 0.5 / rf.sqrt();
        assert!(cov <= slack, "covariance {cov} not <= 0 within noise {slack}");
        // and it is genuinely negative here: exact value 0.5^3 - 0.75^6
        let exact = 0.125 - 0.75f64.powi(6);
        assert!((cov - exact).abs() < 5.0 * 0.5 / rf.sqrt());
    }

    #[test]
    fn weight_chain_simulation_matches_exact_law() {
        let n = 8usize;
        let model = ModelParams::half_lazy(n, 0.6).unwrap();
        let kernel = kernel_1d(&model).unwrap();
        let k0 = 5usize;
        let t = 3u64;
        let reps = 60_000usize;
        let mut counts = vec![0u64; n + 1];
        for rep in 0..reps as u64 {
            let mut rng = replicate_rng(404, rep);
            counts[simulate_weight_chain(&model, k0, t, &mut rng).unwrap()] += 1;
        }
        let exact = evolve_1d(&kernel, &Dist1D::point(n, k0).unwrap(), t).unwrap();
        for (w, (&c, &e)) in counts.iter().zip(exact.mass()).enumerate() {
            let freq = c as f64 / reps as f64;
            let slack = 4.0 * bernoulli_se(e.max(1e-4), reps);
            assert!((freq - e).abs() <= slack, "weight {w}: {freq} vs {e}");
        }
    }

    #[test]
    fn weight_chain_tails_dominated_by_azuma_bound() {
        // Monte Carlo deviation tails from the all-ones start
        let n = 50usize;
        let model = ModelParams::half_lazy(n, 0.5).unwrap();
        let t = 200u64;
        let reps = 10_000usize;
        let mean = expected_weight(&model, n, t);
        let mut ups = [0usize; 3];
        let ss = [5.0f64, 10.0, 15.0];
        for rep in 0..reps as u64 {
            let mut rng = replicate_rng(271828, rep);
            let w = simulate_weight_chain(&model, n, t, &mut rng).unwrap() as f64;
            for (slot, &s) in ups.iter_mut().zip(&ss) {
                if w - mean >= s {
                    *slot += 1;
                }
            }
        }
        for (&up, &s) in ups.iter().zip(&ss) {
            let p_hat = up as f64 / reps as f64;
            let bound = azuma_tail(n, 0.5, s);
            let slack = 3.0 * bernoulli_se(bound.clamp(0.01, 0.99), reps);
            assert!(
                p_hat <= bound + slack,
                "s={s}: empirical {p_hat} above bound {bound} + {slack}"
            );
        }
    }

    #[test]
    fn burn_in_concentration_beats_azuma_floor() {
        // frequency of |S_t - E S_t| < s must beat 1 - 2 exp(...) - noise
        let n = 40usize;
        let model = ModelParams::half_lazy(n, 1.0).unwrap();
        let k0 = n;
        let t = 80u64;
        let s = 14.0f64;
        let reps = 4000usize;
        let mean = expected_weight(&model, k0, t);
        let mut within = 0usize;
        for rep in 0..reps as u64 {
            let mut rng = replicate_rng(6502, rep);
            let w = simulate_weight_chain(&model, k0, t, &mut rng).unwrap();
            if (w as f64 - mean).abs() < s {
                within += 1;
            }
        }
        let freq = within as f64 / reps as f64;
        let floor = 1.0 - 2.0 * azuma_tail(n, 1.0, s) - 3.0 * bernoulli_se(0.5, reps);
        assert!(freq >= floor, "freq {freq} below floor {floor}");
    }

    #[test]
    fn coupling_rejects_bad_inputs() {
        let model = ModelParams::half_lazy(6, 0.5).unwrap();
        let x = HypercubeState::all_zeros(6);
        let y = HypercubeState::all_zeros(7);
        let mut rng = replicate_rng(1, 0);
        assert!(run_coordinatewise(&model, &x, &y, 10, &mut rng).is_err());

        let kernel = kernel_2d(&model, 2).unwrap();
        let off = State2D::new(1, 2, 2); // wrong parity for this lattice
        let good = kernel.lattice().base_state();
        assert!(run_independence_2d(&kernel, &off, &good, 10, &mut rng).is_err());

        let spec = CouplingSpec::Coordinatewise { x0: x.clone(), y0: x.clone() };
        assert!(estimate_coupling_tail(&model, &spec, 0, 1, &[5]).is_err());
        assert!(estimate_coupling_tail(&model, &spec, 5, 1, &[]).is_err());
    }
}
