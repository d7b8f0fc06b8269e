//! The chain itself: a single-site Metropolis walk on the hypercube {0,1}^n
//! whose stationary law weights a state by theta^(number of ones).
//!
//! Target distribution, for theta in (0,1]:
//!
//! ```text
//! pi(x) = theta^S(x) / (1+theta)^n ,     S(x) = number of ones of x,
//! ```
//!
//! which is the product measure putting a one in each coordinate
//! independently with probability p = theta/(1+theta).
//!
//! The non-lazy Metropolis proposal flips a uniformly chosen coordinate and
//! accepts a 1 -> 0 flip always, a 0 -> 1 flip with probability theta.  A
//! laziness parameter q mixes in the identity:
//!
//! ```text
//! P_q = (1-q) P_nonlazy + q I .
//! ```
//!
//! The half-lazy chain (q = 1/2) is the one all mixing statements in this
//! crate are calibrated for.  A heat-bath (Gibbs) variant resamples the
//! chosen coordinate from Bernoulli(p); at laziness (1-theta)/2 it is the
//! same matrix as the half-lazy Metropolis chain, which
//! [`metropolis_row`]/[`gibbs_row`] let you verify entry by entry.

use crate::error::{Error, Result};
use rand::Rng;

/// Largest dimension for which 2^n-sized tables may be materialized.
pub const FULL_ENUMERATION_CAP: usize = 16;

/// Dimension, target bias, and laziness of one chain instance.
///
/// Invariants enforced at construction: n >= 1, theta in (0, 1], q in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    n: usize,
    theta: f64,
    q: f64,
}

impl ModelParams {
    /// Validates and builds a parameter set.
    pub fn new(n: usize, theta: f64, q: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                value: n as f64,
                expected: "n >= 1",
            });
        }
        if !(theta > 0.0 && theta <= 1.0) || !theta.is_finite() {
            return Err(Error::InvalidParameter {
                name: "theta",
                value: theta,
                expected: "theta in (0, 1]",
            });
        }
        if !(0.0..=1.0).contains(&q) || !q.is_finite() {
            return Err(Error::InvalidParameter {
                name: "q",
                value: q,
                expected: "q in [0, 1]",
            });
        }
        Ok(Self { n, theta, q })
    }

    /// The half-lazy chain, q = 1/2.
    pub fn half_lazy(n: usize, theta: f64) -> Result<Self> {
        Self::new(n, theta, 0.5)
    }

    /// Dimension of the cube.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Bias parameter of the target law.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Laziness (probability mass held back on the identity).
    pub fn q(&self) -> f64 {
        self.q
    }

    /// Per-coordinate one-probability p = theta / (1 + theta) of the target.
    pub fn p(&self) -> f64 {
        self.theta / (1.0 + self.theta)
    }

    /// One-step decay factor gamma = 1 - (1+theta)/(2n) of the weight
    /// process under the half-lazy chain.
    pub fn gamma(&self) -> f64 {
        crate::numeric::gamma(self.n, self.theta)
    }

    /// gamma^t, precision-safe for very large t.
    pub fn gamma_pow(&self, t: f64) -> f64 {
        crate::numeric::gamma_pow(self.n, self.theta, t)
    }

    pub(crate) fn require_half_lazy(&self) -> Result<()> {
        if self.q == 0.5 {
            Ok(())
        } else {
            Err(Error::RequiresHalfLazy { q: self.q })
        }
    }
}

/// A point of the cube with its one-count cached.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HypercubeState {
    bits: Vec<bool>,
    ones: usize,
}

impl HypercubeState {
    /// The all-zeros state.
    pub fn all_zeros(n: usize) -> Self {
        Self { bits: vec![false; n], ones: 0 }
    }

    /// The all-ones state.
    pub fn all_ones(n: usize) -> Self {
        Self { bits: vec![true; n], ones: n }
    }

    /// Builds a state from explicit bits.
    pub fn from_bits(bits: Vec<bool>) -> Self {
        let ones = bits.iter().filter(|b| **b).count();
        Self { bits, ones }
    }

    /// A state with the first k coordinates set; the canonical representative
    /// of weight k.
    pub fn first_k_ones(n: usize, k: usize) -> Result<Self> {
        if k > n {
            return Err(Error::InvalidParameter {
                name: "k",
                value: k as f64,
                expected: "k <= n",
            });
        }
        let bits = (0..n).map(|i| i < k).collect();
        Ok(Self { bits, ones: k })
    }

    /// Decodes the little-endian integer encoding: bit i of `index` is
    /// coordinate i.  Inverse of [`HypercubeState::index`].
    pub fn from_index(n: usize, index: u64) -> Result<Self> {
        if n > 63 || (n < 63 && index >> n != 0) {
            return Err(Error::InvalidParameter {
                name: "index",
                value: index as f64,
                expected: "index < 2^n with n <= 63",
            });
        }
        let bits: Vec<bool> = (0..n).map(|i| index >> i & 1 == 1).collect();
        Ok(Self::from_bits(bits))
    }

    /// Little-endian integer encoding: coordinate i contributes 2^i.
    pub fn index(&self) -> u64 {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(|(i, _)| 1u64 << i)
            .sum()
    }

    /// Dimension of the ambient cube.
    pub fn n(&self) -> usize {
        self.bits.len()
    }

    /// Number of ones, S(x).
    pub fn weight(&self) -> usize {
        self.ones
    }

    /// Value of coordinate i.
    pub fn bit(&self, i: usize) -> bool {
        self.bits[i]
    }

    /// Sets coordinate i, keeping the cached weight in sync.
    pub fn set_bit(&mut self, i: usize, value: bool) {
        if self.bits[i] != value {
            self.bits[i] = value;
            if value {
                self.ones += 1;
            } else {
                self.ones -= 1;
            }
        }
    }

    /// Hamming distance to another state of the same dimension.
    pub fn hamming(&self, other: &Self) -> Result<usize> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch {
                left: format!("state of dimension {}", self.n()),
                right: format!("state of dimension {}", other.n()),
            });
        }
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count())
    }
}

/// One sparse row of a single-site kernel: a self-loop plus at most n
/// single-coordinate flips.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelRow {
    /// The state the row is anchored at.
    pub state: HypercubeState,
    /// Probability of staying put.
    pub self_loop: f64,
    /// (flipped coordinate, probability) in increasing coordinate order.
    /// Only strictly positive entries are listed.
    pub flips: Vec<(usize, f64)>,
}

impl KernelRow {
    /// Total mass of the row; 1 up to rounding for a well-formed kernel.
    pub fn sum(&self) -> f64 {
        self.self_loop + self.flips.iter().map(|(_, p)| p).sum::<f64>()
    }

    /// Probability of moving to `y`, which must be the anchor itself or one
    /// of its neighbors; anything further away has probability 0.
    pub fn prob_to(&self, y: &HypercubeState) -> f64 {
        if *y == self.state {
            return self.self_loop;
        }
        for (i, p) in &self.flips {
            let mut flipped = self.state.clone();
            flipped.set_bit(*i, !self.state.bit(*i));
            if flipped == *y {
                return *p;
            }
        }
        0.0
    }

    /// Largest absolute entrywise difference to another row anchored at the
    /// same state.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.state != other.state {
            return Err(Error::DimensionMismatch {
                left: format!("row at index {}", self.state.index()),
                right: format!("row at index {}", other.state.index()),
            });
        }
        let n = self.state.n();
        let mut worst = (self.self_loop - other.self_loop).abs();
        for i in 0..n {
            let a = self.flips.iter().find(|(j, _)| *j == i).map_or(0.0, |(_, p)| *p);
            let b = other.flips.iter().find(|(j, _)| *j == i).map_or(0.0, |(_, p)| *p);
            worst = worst.max((a - b).abs());
        }
        Ok(worst)
    }
}

/// The Metropolis row at `x` for laziness q:
///
/// ```text
/// P(x, x - e_i) = (1-q) / n            for each one-coordinate i,
/// P(x, x + e_i) = (1-q) theta / n      for each zero-coordinate i,
/// P(x, x)       = q + (1-q)(n - S(x))(1-theta) / n .
/// ```
pub fn metropolis_row(model: &ModelParams, x: &HypercubeState) -> Result<KernelRow> {
    check_state(model, x)?;
    let n = model.n() as f64;
    let (theta, q) = (model.theta(), model.q());
    let down = (1.0 - q) / n;
    let up = (1.0 - q) * theta / n;
    let flips = (0..model.n())
        .map(|i| (i, if x.bit(i) { down } else { up }))
        .filter(|(_, p)| *p > 0.0)
        .collect();
    let self_loop =
        q + (1.0 - q) * (n - x.weight() as f64) * (1.0 - theta) / n;
    Ok(KernelRow { state: x.clone(), self_loop, flips })
}

/// The heat-bath row at `x` for laziness q: the chosen coordinate is
/// resampled from Bernoulli(p), so
///
/// ```text
/// P(x, x + e_i) = (1-q) p / n ,        P(x, x - e_i) = (1-q)(1-p) / n ,
/// P(x, x)       = q + (1-q)[S(x) p + (n - S(x))(1-p)] / n .
/// ```
pub fn gibbs_row(model: &ModelParams, x: &HypercubeState) -> Result<KernelRow> {
    check_state(model, x)?;
    let n = model.n() as f64;
    let (p, q) = (model.p(), model.q());
    let s = x.weight() as f64;
    let up = (1.0 - q) * p / n;
    let down = (1.0 - q) * (1.0 - p) / n;
    let flips = (0..model.n())
        .map(|i| (i, if x.bit(i) { down } else { up }))
        .filter(|(_, pr)| *pr > 0.0)
        .collect();
    let self_loop = q + (1.0 - q) * (s * p + (n - s) * (1.0 - p)) / n;
    Ok(KernelRow { state: x.clone(), self_loop, flips })
}

/// What the selected coordinate does under the shared uniform draw of the
/// half-lazy chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandMove {
    /// u <= theta/2: the coordinate is set to one.
    SetOne,
    /// theta/2 < u <= 1/2: the coordinate keeps its value.
    Keep,
    /// u > 1/2: the coordinate is set to zero.
    SetZero,
}

/// Classifies a uniform draw u in [0,1) into the three update bands.
pub fn band_move(theta: f64, u: f64) -> BandMove {
    if u <= theta / 2.0 {
        BandMove::SetOne
    } else if u <= 0.5 {
        BandMove::Keep
    } else {
        BandMove::SetZero
    }
}

/// Whether the draw refreshes the coordinate, i.e. forces a value on it
/// independent of its past.  Exactly the complement of the Keep band.
pub fn is_refresh(theta: f64, u: f64) -> bool {
    !matches!(band_move(theta, u), BandMove::Keep)
}

/// One step of the half-lazy chain given the selected coordinate and the
/// uniform draw.  Set-to-one with probability theta/2, keep with
/// probability (1-theta)/2, set-to-zero with probability 1/2; combined with
/// the uniform coordinate choice this is exactly the q = 1/2 Metropolis
/// kernel.
pub fn simulate_step(
    model: &ModelParams,
    x: &HypercubeState,
    coordinate: usize,
    u: f64,
) -> Result<HypercubeState> {
    model.require_half_lazy()?;
    check_state(model, x)?;
    if coordinate >= model.n() {
        return Err(Error::CoordinateOutOfRange { index: coordinate, n: model.n() });
    }
    let mut next = x.clone();
    match band_move(model.theta(), u) {
        BandMove::SetOne => next.set_bit(coordinate, true),
        BandMove::Keep => {}
        BandMove::SetZero => next.set_bit(coordinate, false),
    }
    Ok(next)
}

/// Runs the half-lazy chain for t steps, drawing (coordinate, uniform)
/// pairs from `rng`.  Two draws per step, coordinate first.
pub fn simulate_chain<R: Rng>(
    model: &ModelParams,
    x0: &HypercubeState,
    t: u64,
    rng: &mut R,
) -> Result<HypercubeState> {
    model.require_half_lazy()?;
    check_state(model, x0)?;
    let mut x = x0.clone();
    let theta = model.theta();
    for _ in 0..t {
        let i = rng.random_range(0..model.n());
        let u: f64 = rng.random();
        match band_move(theta, u) {
            BandMove::SetOne => x.set_bit(i, true),
            BandMove::Keep => {}
            BandMove::SetZero => x.set_bit(i, false),
        }
    }
    Ok(x)
}

/// A dense distribution over the whole cube, indexed by the little-endian
/// encoding of states.  Only available up to [`FULL_ENUMERATION_CAP`].
#[derive(Debug, Clone, PartialEq)]
pub struct FullDist {
    n: usize,
    mass: Vec<f64>,
}

impl FullDist {
    /// Point mass at `x`.
    pub fn point(x: &HypercubeState) -> Result<Self> {
        check_cap(x.n())?;
        let mut mass = vec![0.0; 1usize << x.n()];
        mass[x.index() as usize] = 1.0;
        Ok(Self { n: x.n(), mass })
    }

    /// Wraps an explicit mass vector of length 2^n.
    pub fn from_mass(n: usize, mass: Vec<f64>) -> Result<Self> {
        check_cap(n)?;
        if mass.len() != 1usize << n {
            return Err(Error::DimensionMismatch {
                left: format!("mass vector of length {}", mass.len()),
                right: format!("cube of dimension {n} (2^n = {})", 1usize << n),
            });
        }
        if let Some(bad) = mass.iter().find(|m| !m.is_finite() || **m < 0.0) {
            return Err(Error::InvalidParameter {
                name: "mass",
                value: *bad,
                expected: "finite and nonnegative entries",
            });
        }
        Ok(Self { n, mass })
    }

    /// Dimension of the cube.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Mass vector in state-index order.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Total variation distance, half the L1 difference.
    pub fn tv(&self, other: &Self) -> Result<f64> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                left: format!("distribution on dimension {}", self.n),
                right: format!("distribution on dimension {}", other.n),
            });
        }
        Ok(crate::mixing::tv_from_slices(&self.mass, &other.mass))
    }
}

/// The exact stationary law pi(x) = theta^S(x) / (1+theta)^n as a dense
/// vector; independent of q.
pub fn full_stationary(model: &ModelParams) -> Result<FullDist> {
    check_cap(model.n())?;
    let (p, one_minus_p) = (model.p(), 1.0 - model.p());
    let n = model.n();
    let mass = (0..1u64 << n)
        .map(|idx| {
            let s = idx.count_ones() as i32;
            p.powi(s) * one_minus_p.powi(n as i32 - s)
        })
        .collect();
    FullDist::from_mass(n, mass)
}

/// Advances a full-cube distribution t steps under the Metropolis kernel of
/// `model` (any laziness q).  Reference implementation for everything the
/// lumped code computes more cleverly.
pub fn full_evolve(model: &ModelParams, init: &FullDist, t: u64) -> Result<FullDist> {
    check_cap(model.n())?;
    if init.n() != model.n() {
        return Err(Error::DimensionMismatch {
            left: format!("distribution on dimension {}", init.n()),
            right: format!("model of dimension {}", model.n()),
        });
    }
    let n = model.n();
    let nf = n as f64;
    let (theta, q) = (model.theta(), model.q());
    let down = (1.0 - q) / nf;
    let up = (1.0 - q) * theta / nf;
    let mut cur = init.mass().to_vec();
    let mut next = vec![0.0; cur.len()];
    for _ in 0..t {
        next.fill(0.0);
        for (idx, &m) in cur.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let s = idx.count_ones() as f64;
            let self_loop = q + (1.0 - q) * (nf - s) * (1.0 - theta) / nf;
            next[idx] += m * self_loop;
            for i in 0..n {
                let flipped = idx ^ (1usize << i);
                let p_move = if idx >> i & 1 == 1 { down } else { up };
                next[flipped] += m * p_move;
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    FullDist::from_mass(n, cur)
}

fn check_state(model: &ModelParams, x: &HypercubeState) -> Result<()> {
    if x.n() != model.n() {
        return Err(Error::DimensionMismatch {
            left: format!("state of dimension {}", x.n()),
            right: format!("model of dimension {}", model.n()),
        });
    }
    Ok(())
}

fn check_cap(n: usize) -> Result<()> {
    if n > FULL_ENUMERATION_CAP {
        return Err(Error::DimensionTooLarge { n, cap: FULL_ENUMERATION_CAP });
    }
    Ok(())
}
