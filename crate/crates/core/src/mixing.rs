//! Exact distance-to-stationarity machinery built on the lumped kernels.
//!
//! Distances are computed on the two-dimensional lattice (or on the weight
//! chain when the base point is a corner of the cube, where the Hamming
//! distance to the base is a function of the weight and the lattice
//! collapses to a line).  Because the lumpings preserve total variation
//! distance from lumped starting points, these profiles equal the
//! full-space distances that would cost 2^n to enumerate.
//!
//! Closed forms used throughout, with gamma = 1 - (1+theta)/(2n):
//!
//! ```text
//! E_k S_t = n p (1 - gamma^t) + k gamma^t
//! E (r_t, r'_t) from (v, v') relaxes the same way toward the stationary
//! means (k(1-theta)/(1+theta), 2n theta/(1+theta) + k(1-theta)/(1+theta)).
//! ```

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::projection::{
    kernel_1d, kernel_2d, stationary_1d, stationary_2d, Dist1D, Dist2D, Kernel1D,
    Kernel2D,
};
use rayon::prelude::*;

/// Kernel applications between renormalization passes of long evolutions.
pub const RENORM_PERIOD: u64 = 10_000;

/// Abort threshold on the total mass drift absorbed by renormalization.
pub const DRIFT_GUARD: f64 = 1e-9;

/// Half the L1 distance between two equally laid out mass vectors.
pub(crate) fn tv_from_slices(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Total variation distance between two mass vectors of equal layout.
pub fn tv_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            left: format!("mass vector of length {}", a.len()),
            right: format!("mass vector of length {}", b.len()),
        });
    }
    Ok(tv_from_slices(a, b))
}

/// Incremental evolution driver: flat mass buffers, a step closure, and the
/// renormalize-and-guard bookkeeping shared by the 1D and 2D paths.
struct Evolver<'k, K: ?Sized> {
    kernel: &'k K,
    cur: Vec<f64>,
    next: Vec<f64>,
    steps: u64,
    since_renorm: u64,
    drift: f64,
}

trait StepKernel {
    fn apply(&self, src: &[f64], dst: &mut [f64]);
}

impl StepKernel for Kernel1D {
    fn apply(&self, src: &[f64], dst: &mut [f64]) {
        self.step_into(src, dst);
    }
}

impl StepKernel for Kernel2D {
    fn apply(&self, src: &[f64], dst: &mut [f64]) {
        self.step_into(src, dst);
    }
}

impl<'k, K: StepKernel + ?Sized> Evolver<'k, K> {
    fn new(kernel: &'k K, init: Vec<f64>) -> Self {
        let len = init.len();
        Self { kernel, cur: init, next: vec![0.0; len], steps: 0, since_renorm: 0, drift: 0.0 }
    }

    fn advance_to(&mut self, t: u64) -> Result<()> {
        debug_assert!(t >= self.steps);
        while self.steps < t {
            self.kernel.apply(&self.cur, &mut self.next);
            std::mem::swap(&mut self.cur, &mut self.next);
            self.steps += 1;
            self.since_renorm += 1;
            if self.since_renorm == RENORM_PERIOD {
                self.renormalize()?;
            }
        }
        Ok(())
    }

    fn renormalize(&mut self) -> Result<()> {
        let total: f64 = self.cur.iter().sum();
        self.drift += (total - 1.0).abs();
        self.since_renorm = 0;
        if self.drift > DRIFT_GUARD {
            return Err(Error::MassDrift {
                drift: self.drift,
                steps: self.steps,
                guard: DRIFT_GUARD,
            });
        }
        log::debug!(
            "renormalized after {} steps: drift now {:e}",
            self.steps,
            self.drift
        );
        for m in &mut self.cur {
            *m /= total;
        }
        Ok(())
    }
}

/// Advances a level distribution t steps under the weight-chain kernel.
///
/// Long runs renormalize every [`RENORM_PERIOD`] applications and abort if
/// the accumulated drift passes [`DRIFT_GUARD`].
pub fn evolve_1d(kernel: &Kernel1D, init: &Dist1D, t: u64) -> Result<Dist1D> {
    if init.n() != kernel.n() {
        return Err(Error::DimensionMismatch {
            left: format!("distribution over 0..={}", init.n()),
            right: format!("kernel over 0..={}", kernel.n()),
        });
    }
    let mut ev = Evolver::new(kernel, init.mass().to_vec());
    ev.advance_to(t)?;
    Dist1D::from_mass(kernel.n(), ev.cur)
}

/// Advances a lattice distribution t steps under the two-dimensional
/// kernel, with the same renormalization guard as [`evolve_1d`].
pub fn evolve_2d(kernel: &Kernel2D, init: &Dist2D, t: u64) -> Result<Dist2D> {
    if init.lattice() != kernel.lattice() {
        return Err(Error::DimensionMismatch {
            left: format!(
                "distribution on lattice n={} k={}",
                init.lattice().n(),
                init.lattice().k()
            ),
            right: format!(
                "kernel on lattice n={} k={}",
                kernel.lattice().n(),
                kernel.lattice().k()
            ),
        });
    }
    let mut ev = Evolver::new(kernel, init.mass().to_vec());
    ev.advance_to(t)?;
    Dist2D::from_mass(kernel.lattice(), ev.cur)
}

/// Identifies where a distance profile was started.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProfileStart {
    /// A single base weight k.
    Level(usize),
    /// Pointwise maximum over profiles started at these weights.
    WorstOf(Vec<usize>),
}

/// A sampled distance-to-stationarity curve.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingProfile {
    /// Cube dimension.
    pub n: usize,
    /// Bias parameter.
    pub theta: f64,
    /// Where the chain started.
    pub start: ProfileStart,
    /// (t, d(t)) pairs, t strictly increasing.
    pub points: Vec<(u64, f64)>,
}

impl MixingProfile {
    /// The distance at an exact grid time, if that time was sampled.
    pub fn distance_at(&self, t: u64) -> Option<f64> {
        self.points
            .binary_search_by_key(&t, |(tt, _)| *tt)
            .ok()
            .map(|idx| self.points[idx].1)
    }
}

fn clean_grid(t_grid: &[u64]) -> Vec<u64> {
    let mut g = t_grid.to_vec();
    g.sort_unstable();
    g.dedup();
    g
}

/// Exact distance to stationarity at the grid times, started from a base
/// point of weight `start_k`.
///
/// Corner starts (k = 0 or k = n) collapse to the weight chain: there the
/// Hamming distance to the base point is determined by the weight, so the
/// one-dimensional distances are the full ones.  Interior starts evolve the
/// two-dimensional lattice from (-k, k).
pub fn distance_profile(
    model: &ModelParams,
    start_k: usize,
    t_grid: &[u64],
) -> Result<MixingProfile> {
    model.require_half_lazy()?;
    let n = model.n();
    if start_k > n {
        return Err(Error::InvalidParameter {
            name: "start_k",
            value: start_k as f64,
            expected: "start_k <= n",
        });
    }
    let grid = clean_grid(t_grid);
    let mut points = Vec::with_capacity(grid.len());

    if start_k == 0 || start_k == n {
        let kernel = kernel_1d(model)?;
        let pi = stationary_1d(model);
        let init = Dist1D::point(n, start_k)?;
        let mut ev = Evolver::new(&kernel, init.mass().to_vec());
        for &t in &grid {
            ev.advance_to(t)?;
            points.push((t, tv_from_slices(&ev.cur, pi.mass())));
        }
    } else {
        let kernel = kernel_2d(model, start_k)?;
        let pi = stationary_2d(model, start_k)?;
        let init = Dist2D::point_at_base(kernel.lattice());
        let mut ev = Evolver::new(&kernel, init.mass().to_vec());
        for &t in &grid {
            ev.advance_to(t)?;
            points.push((t, tv_from_slices(&ev.cur, pi.mass())));
        }
    }

    Ok(MixingProfile {
        n,
        theta: model.theta(),
        start: ProfileStart::Level(start_k),
        points,
    })
}

/// The default start-weight grid for worst-start scans: every weight up to
/// n = 64, the five-point grid {0, n/4, n/2, 3n/4, n} (ceilings) beyond.
pub fn default_k_grid(n: usize) -> Vec<usize> {
    if n <= 64 {
        (0..=n).collect()
    } else {
        let mut g = vec![0, n.div_ceil(4), n.div_ceil(2), (3 * n).div_ceil(4), n];
        g.sort_unstable();
        g.dedup();
        g
    }
}

/// Pointwise maximum of [`distance_profile`] over a grid of start weights
/// (the default grid when `k_grid` is `None`).  Starts evolve in parallel;
/// the reduction is an order-independent pointwise maximum.
///
/// When the grid is a strict subset of 0..=n the result is a lower envelope
/// of the true worst-start curve.
pub fn worst_start_profile(
    model: &ModelParams,
    t_grid: &[u64],
    k_grid: Option<&[usize]>,
) -> Result<MixingProfile> {
    model.require_half_lazy()?;
    let ks: Vec<usize> = match k_grid {
        Some(g) => {
            let mut g = g.to_vec();
            g.sort_unstable();
            g.dedup();
            g
        }
        None => default_k_grid(model.n()),
    };
    if ks.is_empty() {
        return Err(Error::InvalidParameter {
            name: "k_grid",
            value: 0.0,
            expected: "at least one start weight",
        });
    }
    let profiles: Vec<Result<MixingProfile>> = ks
        .par_iter()
        .map(|&k| distance_profile(model, k, t_grid))
        .collect();
    let mut iter = profiles.into_iter();
    let mut worst = iter.next().expect("nonempty grid")?;
    for p in iter {
        let p = p?;
        for (slot, (t, d)) in worst.points.iter_mut().zip(p.points) {
            debug_assert_eq!(slot.0, t);
            if d > slot.1 {
                slot.1 = d;
            }
        }
    }
    worst.start = ProfileStart::WorstOf(ks);
    Ok(worst)
}

/// Smallest sampled time with d(t) <= eps.  The answer is exact on the
/// sampled grid; a coarse grid can only overshoot, never undershoot.
pub fn mixing_time(profile: &MixingProfile, eps: f64) -> Result<u64> {
    if !(0.0..1.0).contains(&eps) || eps <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "eps",
            value: eps,
            expected: "eps in (0, 1)",
        });
    }
    for &(t, d) in &profile.points {
        if d <= eps {
            return Ok(t);
        }
    }
    let (last_t, last_value) = *profile.points.last().unwrap_or(&(0, 1.0));
    Err(Error::Unresolved { target: eps, last_t, last_value })
}

/// Expected weight after t steps from a start of weight k:
/// n p (1 - gamma^t) + k gamma^t.
pub fn expected_weight(model: &ModelParams, k: usize, t: u64) -> f64 {
    let np = model.n() as f64 * model.p();
    let g = model.gamma_pow(t as f64);
    np + (k as f64 - np) * g
}

/// Stationary mean of (r, r') on the lattice over base weight k:
/// (k(1-theta)/(1+theta), 2n theta/(1+theta) + k(1-theta)/(1+theta)).
pub fn stationary_mean_2d(model: &ModelParams, k: usize) -> (f64, f64) {
    let theta = model.theta();
    let mr = k as f64 * (1.0 - theta) / (1.0 + theta);
    let mrp = 2.0 * model.n() as f64 * theta / (1.0 + theta) + mr;
    (mr, mrp)
}

/// Expected (r, r') after t steps from an arbitrary lattice start (v, v'):
/// both coordinates relax geometrically at rate gamma toward the
/// stationary means.
pub fn expected_state_2d(
    model: &ModelParams,
    k: usize,
    start: (f64, f64),
    t: u64,
) -> (f64, f64) {
    let (mr, mrp) = stationary_mean_2d(model, k);
    let g = model.gamma_pow(t as f64);
    (mr + (start.0 - mr) * g, mrp + (start.1 - mrp) * g)
}

/// gamma^u scaled by sqrt(n) at u = round(n log n / (1+theta)).  Tends to 1
/// as n grows; the rate of that convergence is what callers inspect.
pub fn gamma_power_check(n: usize, theta: f64) -> f64 {
    let u = (n as f64 * (n as f64).ln() / (1.0 + theta)).round();
    crate::numeric::gamma_pow(n, theta, u) * (n as f64).sqrt()
}

/// The time scale n log n / (1+theta) the profiles concentrate around.
pub fn predicted_cutoff(model: &ModelParams) -> f64 {
    let n = model.n() as f64;
    n * n.ln() / (1.0 + model.theta())
}

/// A sampling grid for distance profiles: coarse geometric times early,
/// then a dense window of width 8n on both sides of the predicted time
/// (step max(1, n/128), anchored at the predicted time so that offsets
/// which are multiples of the step land exactly on grid), then coarse
/// again out to `t_max`.
pub fn auto_t_grid(model: &ModelParams, t_max: u64) -> Vec<u64> {
    let n = model.n() as u64;
    let t_star = predicted_cutoff(model).round() as u64;
    let lo = t_star.saturating_sub(8 * n);
    let hi = (t_star + 8 * n).min(t_max);
    let step = (n / 128).max(1);

    let mut grid = vec![0u64];
    // geometric ramp below the window
    let mut t = 1u64;
    while t < lo {
        grid.push(t);
        t = (t + t / 3).max(t + 1);
    }
    // dense window anchored at t_star
    if lo <= t_max {
        let mut t = t_star.saturating_sub((t_star - lo) / step * step).max(lo);
        // walk down to the first anchored point at or above lo
        while t >= step && t.saturating_sub(step) >= lo {
            t -= step;
        }
        while t <= hi {
            grid.push(t);
            t += step;
        }
    }
    // coarse tail beyond the window
    let mut t = hi.saturating_add((n / 4).max(1));
    while t < t_max {
        grid.push(t);
        t += (n / 4).max(1);
    }
    grid.push(t_max);
    grid.sort_unstable();
    grid.dedup();
    grid.retain(|&t| t <= t_max);
    grid
}

/// One row of a cutoff-window table.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowStats {
    /// Cube dimension of the profile.
    pub n: usize,
    /// Bias parameter of the profile.
    pub theta: f64,
    /// Time to reach distance 1/4.
    pub t_mix_quarter: u64,
    /// t_mix(0.1) - t_mix(0.9): the window the distance falls through.
    pub width: u64,
    /// t_mix(1/4) / (n log n).
    pub ratio: f64,
}

/// Summarizes a family of profiles into (t_mix(1/4), window width, ratio)
/// rows, one per profile, in input order.  Errors if any of the three
/// thresholds is unresolved on a profile's grid.
pub fn cutoff_window_stats(profiles: &[MixingProfile]) -> Result<Vec<WindowStats>> {
    profiles
        .iter()
        .map(|p| {
            let quarter = mixing_time(p, 0.25)?;
            let tenth = mixing_time(p, 0.1)?;
            let nine_tenths = mixing_time(p, 0.9)?;
            let nf = p.n as f64;
            Ok(WindowStats {
                n: p.n,
                theta: p.theta,
                t_mix_quarter: quarter,
                width: tenth - nine_tenths,
                ratio: quarter as f64 / (nf * nf.ln()),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{full_evolve, full_stationary, FullDist, HypercubeState};
    use crate::projection::lumped_pushforward;

    #[test]
    fn tv_basics() {
        assert_eq!(tv_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(tv_distance(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
        assert!(tv_distance(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn profile_t0_frozen_values() {
        // from a corner of the 2-cube at theta = 1: d(0) = 1 - 1/4
        let model = ModelParams::half_lazy(2, 1.0).unwrap();
        let p = distance_profile(&model, 0, &[0, 1, 2, 3]).unwrap();
        assert!((p.points[0].1 - 0.75).abs() < 1e-15);

        // from the all-ones corner at theta = 1/2: d(0) = 1 - 1/9 = 8/9
        let model = ModelParams::half_lazy(2, 0.5).unwrap();
        let p = distance_profile(&model, 2, &[0]).unwrap();
        assert!((p.points[0].1 - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn profiles_match_brute_force_from_every_weight() {
        // 2D lumped distances vs full-space total variation at n = 10
        let n = 10usize;
        for &theta in &[0.2, 1.0] {
            let model = ModelParams::half_lazy(n, theta).unwrap();
            let pi_full = full_stationary(&model).unwrap();
            let grid: Vec<u64> = vec![0, 1, 2, 3, 5, 8, 13, 21, 34, 55, 60];
            for k in 0..=n {
                let base = HypercubeState::first_k_ones(n, k).unwrap();
                let profile = distance_profile(&model, k, &grid).unwrap();
                let mut mu = FullDist::point(&base).unwrap();
                let mut prev_t = 0u64;
                for &(t, d) in &profile.points {
                    mu = full_evolve(&model, &mu, t - prev_t).unwrap();
                    prev_t = t;
                    let exact = mu.tv(&pi_full).unwrap();
                    assert!(
                        (d - exact).abs() <= 1e-11,
                        "n={n} theta={theta} k={k} t={t}: {d} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn lumping_preserves_tv_from_lumped_starts() {
        // full-space TV equals the lattice TV of the pushforwards
        let n = 8usize;
        let model = ModelParams::half_lazy(n, 0.6).unwrap();
        let pi_full = full_stationary(&model).unwrap();
        for k in [0usize, 3, 5, 8] {
            let base = HypercubeState::first_k_ones(n, k).unwrap();
            let mu = full_evolve(&model, &FullDist::point(&base).unwrap(), 7).unwrap();
            let full_tv = mu.tv(&pi_full).unwrap();
            let lumped_tv = lumped_pushforward(&mu, &base)
                .unwrap()
                .tv(&lumped_pushforward(&pi_full, &base).unwrap())
                .unwrap();
            assert!((full_tv - lumped_tv).abs() < 1e-13);
        }
    }

    #[test]
    fn profile_is_monotone_and_profile_times_sorted() {
        let model = ModelParams::half_lazy(12, 0.35).unwrap();
        let grid: Vec<u64> = (0..=220).collect();
        for k in [0usize, 5, 12] {
            let p = distance_profile(&model, k, &grid).unwrap();
            for w in p.points.windows(2) {
                assert!(w[1].0 > w[0].0);
                assert!(
                    w[1].1 <= w[0].1 + 1e-12,
                    "k={k}: d({}) = {} > d({}) = {}",
                    w[1].0,
                    w[1].1,
                    w[0].0,
                    w[0].1
                );
            }
        }
    }

    #[test]
    fn variance_of_weight_stays_below_ceiling() {
        // from the all-ones start: Var S_t <= n/(1+theta)^2 for all t
        for &theta in &[0.3, 1.0] {
            let model = ModelParams::half_lazy(50, theta).unwrap();
            let kernel = kernel_1d(&model).unwrap();
            let init = Dist1D::point(50, 50).unwrap();
            let ceiling = 50.0 / (1.0 + theta).powi(2) + 1e-9;
            let mut cur = init;
            for _ in 0..400 {
                cur = evolve_1d(&kernel, &cur, 1).unwrap();
                assert!(cur.variance() <= ceiling);
            }
        }
    }

    #[test]
    fn mixing_time_finds_first_grid_crossing_or_reports_unresolved() {
        let profile = MixingProfile {
            n: 16,
            theta: 1.0,
            start: ProfileStart::Level(16),
            points: vec![(0, 0.9), (4, 0.5), (8, 0.2), (12, 0.04)],
        };
        assert_eq!(mixing_time(&profile, 0.25).unwrap(), 8);
        assert_eq!(mixing_time(&profile, 0.5).unwrap(), 4);
        match mixing_time(&profile, 0.01) {
            Err(Error::Unresolved { last_t, .. }) => assert_eq!(last_t, 12),
            other => panic!("expected unresolved, got {other:?}"),
        }
        assert!(mixing_time(&profile, 0.0).is_err());
        assert!(mixing_time(&profile, 1.0).is_err());
    }

    #[test]
    fn expected_weight_frozen_example_and_against_evolution() {
        // n=10, theta=1, k=10, t=1: 5 + 5 * 0.9 = 9.5
        let model = ModelParams::half_lazy(10, 1.0).unwrap();
        assert!((expected_weight(&model, 10, 1) - 9.5).abs() < 1e-15);

        // the numeric mean of the evolved weight chain follows the closed form
        let model = ModelParams::half_lazy(30, 0.7).unwrap();
        let kernel = kernel_1d(&model).unwrap();
        for k in [0usize, 7, 30] {
            let mut cur = Dist1D::point(30, k).unwrap();
            for t in 1..=50u64 {
                cur = evolve_1d(&kernel, &cur, 1).unwrap();
                let closed = expected_weight(&model, k, t);
                assert!(
                    (cur.mean() - closed).abs() < 1e-10,
                    "k={k} t={t}: {} vs {closed}",
                    cur.mean()
                );
            }
        }
    }

    #[test]
    fn expected_state_2d_against_evolution() {
        let model = ModelParams::half_lazy(20, 0.4).unwrap();
        let k = 7usize;
        let kernel = kernel_2d(&model, k).unwrap();
        let lattice = kernel.lattice();

        // canonical start (-k, k) and an interior start
        for start in [lattice.base_state(), crate::projection::State2D::new(-1, 9, k)] {
            let init = Dist2D::point(lattice, &start).unwrap();
            for t in [0u64, 1, 5, 25] {
                let cur = evolve_2d(&kernel, &init, t).unwrap();
                let (mr, mrp) = cur.mean();
                let (er, erp) =
                    expected_state_2d(&model, k, (start.r as f64, start.rp as f64), t);
                assert!((mr - er).abs() < 1e-10, "t={t}: r {mr} vs {er}");
                assert!((mrp - erp).abs() < 1e-10, "t={t}: r' {mrp} vs {erp}");
            }
        }

        // t -> infinity limit is the stationary mean
        let init = Dist2D::point_at_base(lattice);
        let far = evolve_2d(&kernel, &init, 4000).unwrap();
        let (mr, mrp) = far.mean();
        let (sr, srp) = stationary_mean_2d(&model, k);
        assert!((mr - sr).abs() < 1e-9);
        assert!((mrp - srp).abs() < 1e-9);
    }

    #[test]
    fn gamma_power_check_tightens_with_n() {
        let v4 = gamma_power_check(10_000, 1.0);
        let v6 = gamma_power_check(1_000_000, 1.0);
        assert!((v4 - 1.0).abs() <= 0.05, "n=1e4: {v4}");
        assert!((v6 - 1.0).abs() <= 0.01, "n=1e6: {v6}");
        assert!((v6 - 1.0).abs() < (v4 - 1.0).abs());
    }

    #[test]
    fn worst_start_profile_matches_scan_over_all_corners() {
        // brute force over all 2^8 starting states at n = 8
        let n = 8usize;
        let model = ModelParams::half_lazy(n, 0.6).unwrap();
        let pi_full = full_stationary(&model).unwrap();
        let grid: Vec<u64> = (0..=30).step_by(3).collect();

        let worst = worst_start_profile(&model, &grid, None).unwrap();

        for (gi, &t) in grid.iter().enumerate() {
            let mut brute = 0.0f64;
            for idx in 0..1u64 << n {
                let x = HypercubeState::from_index(n, idx).unwrap();
                let mu = full_evolve(&model, &FullDist::point(&x).unwrap(), t).unwrap();
                brute = brute.max(mu.tv(&pi_full).unwrap());
            }
            let (tt, d) = worst.points[gi];
            assert_eq!(tt, t);
            assert!((d - brute).abs() <= 1e-11, "t={t}: {d} vs {brute}");
        }
    }

    #[test]
    fn default_k_grid_shapes() {
        assert_eq!(default_k_grid(4), vec![0, 1, 2, 3, 4]);
        assert_eq!(default_k_grid(64).len(), 65);
        assert_eq!(default_k_grid(128), vec![0, 32, 64, 96, 128]);
        assert_eq!(default_k_grid(1000), vec![0, 250, 500, 750, 1000]);
    }

    #[test]
    fn auto_t_grid_is_sorted_unique_and_anchored() {
        // n large enough that the predicted time clears the 3n offsets
        let n = 1024u64;
        let model = ModelParams::half_lazy(n as usize, 1.0).unwrap();
        let t_star = predicted_cutoff(&model).round() as u64;
        assert!(t_star > 3 * n);
        let t_max = 3 * t_star;
        let grid = auto_t_grid(&model, t_max);
        assert!(grid.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*grid.first().unwrap(), 0);
        assert_eq!(*grid.last().unwrap(), t_max);
        // the anchored window contains the predicted time and +-3n offsets
        assert!(grid.contains(&t_star));
        assert!(grid.contains(&(t_star - 3 * n)));
        assert!(grid.contains(&(t_star + 3 * n)));
    }

    #[test]
    fn cutoff_window_stats_on_synthetic_profiles() {
        let p = MixingProfile {
            n: 100,
            theta: 1.0,
            start: ProfileStart::Level(100),
            points: vec![(0, 0.95), (10, 0.85), (20, 0.6), (30, 0.2), (40, 0.05)],
        };
        let rows = cutoff_window_stats(std::slice::from_ref(&p)).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].t_mix_quarter, 30);
        // t_mix(0.1) = 40, t_mix(0.9) = 10
        assert_eq!(rows[0].width, 40 - 10);
        let expect = 30.0 / (100.0 * 100.0f64.ln());
        assert!((rows[0].ratio - expect).abs() < 1e-15);

        let flat = MixingProfile { points: vec![(0, 0.95)], ..p };
        assert!(cutoff_window_stats(&[flat]).is_err());
    }

    #[test]
    fn corner_start_symmetry_at_theta_one() {
        // theta = 1 makes the two corners exchangeable: identical profiles
        let model = ModelParams::half_lazy(40, 1.0).unwrap();
        let grid: Vec<u64> = (0..=160).step_by(8).collect();
        let from_zero = distance_profile(&model, 0, &grid).unwrap();
        let from_ones = distance_profile(&model, 40, &grid).unwrap();
        for (a, b) in from_zero.points.iter().zip(&from_ones.points) {
            assert!((a.1 - b.1).abs() < 1e-13);
        }
    }
}
