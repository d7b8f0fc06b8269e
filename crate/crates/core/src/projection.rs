//! Lumpings of the cube walk that preserve the distance to stationarity.
//!
//! Fix a base point x with k ones and write, for a state z,
//!
//! ```text
//! l  = S(z)        (number of ones of z)
//! l' = d(x, z)     (Hamming distance to the base point).
//! ```
//!
//! The pair (l, l') together with k determines the sizes of the four
//! coordinate classes of (x, z): both-zero, one only in z, one only in x,
//! shared ones.  Started from x, the pair evolves as a Markov chain on its
//! own; in the difference/sum coordinates
//!
//! ```text
//! r = l' - l ,    r' = l' + l ,
//! ```
//!
//! the two components move independently of one another through a five-point
//! stencil on the rectangle r in {-k, -k+2, ..., k}, r' in {k, k+2, ...,
//! 2n-k}.  All transition probabilities for the half-lazy chain, at grid
//! indices i = (r+k)/2 and j = (r'-k)/2:
//!
//! ```text
//! r' -> r'+2 :  (n-k-j) theta / (2n)      (a fresh one outside the base)
//! r' -> r'-2 :  j / (2n)                  (such a one removed)
//! r  -> r-2  :  i theta / (2n)            (a lost base one restored)
//! r  -> r+2  :  (k-i) / (2n)              (a base one removed)
//! stay       :  the remainder, always >= 1/2 .
//! ```
//!
//! The weight chain alone is the further lumping S = k + j - i, a
//! birth-death chain with up rate (n-S) theta/(2n) and down rate S/(2n),
//! stationary under Binomial(n, p).

use crate::error::{Error, Result};
use crate::model::{FullDist, HypercubeState, ModelParams};
use crate::numeric::binomial_pmf;

/// Sizes of the four coordinate classes determined by a base point of
/// weight k and a state at level pair (l, l').
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OverlapCounts {
    /// Coordinates that are zero in both the base point and the state.
    pub both_zero: usize,
    /// Ones of the state outside the base point's support.
    pub new_ones: usize,
    /// Ones of the base point cleared in the state.
    pub lost_ones: usize,
    /// Ones shared by the base point and the state.
    pub shared_ones: usize,
}

/// Recovers the four class sizes from (n, k, l, l'):
///
/// ```text
/// new_ones  = (l + l' - k) / 2         lost_ones   = (l' + k - l) / 2
/// shared    = (l + k - l') / 2         both_zero   = n - (l + l' + k) / 2
/// ```
///
/// Errors when any count would be negative or the parity constraint
/// (l + l' + k even) fails, i.e. when no such pair of states exists.
pub fn overlap_counts(n: usize, k: usize, l: usize, lp: usize) -> Result<OverlapCounts> {
    let bad = |detail: String| Err(Error::InvalidLatticePoint { detail });
    if k > n || l > n || lp > n {
        return bad(format!("levels out of range: n={n} k={k} l={l} l'={lp}"));
    }
    let (ki, li, lpi) = (k as i64, l as i64, lp as i64);
    if (ki + li + lpi) % 2 != 0 {
        return bad(format!("parity violation: k={k} l={l} l'={lp}"));
    }
    let new2 = li + lpi - ki;
    let lost2 = lpi + ki - li;
    let shared2 = li + ki - lpi;
    let both2 = 2 * n as i64 - (li + lpi + ki);
    if new2 < 0 || lost2 < 0 || shared2 < 0 || both2 < 0 {
        return bad(format!(
            "no state realizes n={n} k={k} l={l} l'={lp} (a class count is negative)"
        ));
    }
    Ok(OverlapCounts {
        both_zero: (both2 / 2) as usize,
        new_ones: (new2 / 2) as usize,
        lost_ones: (lost2 / 2) as usize,
        shared_ones: (shared2 / 2) as usize,
    })
}

/// Difference/sum coordinates of a level pair: (l, l') -> (l'-l, l'+l).
pub fn reparametrize(l: usize, lp: usize) -> (i64, i64) {
    (lp as i64 - l as i64, lp as i64 + l as i64)
}

/// Inverse of [`reparametrize`].  Errors when r+r' is odd or r' < |r|,
/// since no level pair maps there.
pub fn reparametrize_inv(r: i64, rp: i64) -> Result<(usize, usize)> {
    if (r + rp) % 2 != 0 || rp < r.abs() {
        return Err(Error::InvalidLatticePoint {
            detail: format!("(r, r') = ({r}, {rp}) is not the image of a level pair"),
        });
    }
    Ok((((rp - r) / 2) as usize, ((rp + r) / 2) as usize))
}

/// A point of the two-dimensional lattice in difference/sum coordinates,
/// tagged with the base weight k it lives over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct State2D {
    /// r = l' - l; same parity as k, in [-k, k].
    pub r: i64,
    /// r' = l' + l; same parity as k, in [k, 2n-k].
    pub rp: i64,
    /// Weight of the base point.
    pub k: usize,
}

impl State2D {
    /// Builds a state without range checks; validate against a
    /// [`Lattice2D`] to pin it to a cube dimension.
    pub fn new(r: i64, rp: i64, k: usize) -> Self {
        Self { r, rp, k }
    }

    /// Builds the state for level pair (l, l') over base weight k.
    pub fn from_levels(k: usize, l: usize, lp: usize) -> Self {
        let (r, rp) = reparametrize(l, lp);
        Self { r, rp, k }
    }

    /// The level pair (l, l') = ((r'-r)/2, (r'+r)/2).
    pub fn levels(&self) -> Result<(usize, usize)> {
        reparametrize_inv(self.r, self.rp)
    }
}

/// The rectangular state space of the two-dimensional chain over a base
/// point of weight k in dimension n: (k+1) r-values by (n-k+1) r'-values.
///
/// Every cell of the rectangle is a legal state; states of the wrong
/// parity simply have no cell, so parity conservation is structural.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lattice2D {
    n: usize,
    k: usize,
}

impl Lattice2D {
    /// Builds the lattice for base weight k in dimension n.
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if k > n {
            return Err(Error::InvalidParameter {
                name: "k",
                value: k as f64,
                expected: "k <= n",
            });
        }
        Ok(Self { n, k })
    }

    /// Cube dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Base weight.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of r-values, k+1.
    pub fn rows(&self) -> usize {
        self.k + 1
    }

    /// Number of r'-values, n-k+1.
    pub fn cols(&self) -> usize {
        self.n - self.k + 1
    }

    /// Total number of states, (k+1)(n-k+1).
    pub fn len(&self) -> usize {
        self.rows() * self.cols()
    }

    /// Whether the lattice is empty; never true, kept for clippy symmetry.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// r at row index i: r = 2i - k.
    pub fn r_at(&self, i: usize) -> i64 {
        2 * i as i64 - self.k as i64
    }

    /// r' at column index j: r' = k + 2j.
    pub fn rp_at(&self, j: usize) -> i64 {
        self.k as i64 + 2 * j as i64
    }

    /// The state at grid cell (i, j).
    pub fn state_at(&self, i: usize, j: usize) -> State2D {
        State2D::new(self.r_at(i), self.rp_at(j), self.k)
    }

    /// Grid cell of a state, erroring when it lies off the lattice.
    pub fn cell_of(&self, s: &State2D) -> Result<(usize, usize)> {
        let fail = |detail: String| Err(Error::InvalidLatticePoint { detail });
        if s.k != self.k {
            return fail(format!("state has base weight {}, lattice {}", s.k, self.k));
        }
        let (ri, rpi) = (s.r + self.k as i64, s.rp - self.k as i64);
        if ri % 2 != 0 || rpi % 2 != 0 {
            return fail(format!("parity violation at (r, r') = ({}, {})", s.r, s.rp));
        }
        let (i, j) = (ri / 2, rpi / 2);
        if i < 0 || i >= self.rows() as i64 || j < 0 || j >= self.cols() as i64 {
            return fail(format!(
                "(r, r') = ({}, {}) outside [-k, k] x [k, 2n-k] for n={} k={}",
                s.r, s.rp, self.n, self.k
            ));
        }
        Ok((i as usize, j as usize))
    }

    /// Flat row-major index of grid cell (i, j).
    pub fn flat(&self, i: usize, j: usize) -> usize {
        i * self.cols() + j
    }

    /// All states in row-major order: r ascending, then r' ascending.
    pub fn states(&self) -> impl Iterator<Item = State2D> + '_ {
        (0..self.rows())
            .flat_map(move |i| (0..self.cols()).map(move |j| self.state_at(i, j)))
    }

    /// The canonical start (r, r') = (-k, k), i.e. the base point itself.
    pub fn base_state(&self) -> State2D {
        State2D::new(-(self.k as i64), self.k as i64, self.k)
    }
}

/// Enumerates the two-dimensional state space in row-major order;
/// (k+1)(n-k+1) states.
pub fn enumerate_states_2d(n: usize, k: usize) -> Result<Vec<State2D>> {
    Ok(Lattice2D::new(n, k)?.states().collect())
}

/// The lumped weight chain of the half-lazy kernel: a birth-death chain on
/// 0..=n with
///
/// ```text
/// up[s]   = (n - s) theta / (2n)
/// down[s] = s / (2n)
/// stay[s] = 1 - up[s] - down[s]    ( >= 1/2 ).
/// ```
///
/// Fields are public so tests can inject perturbations; the constructor is
/// the only supported way to build a faithful kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel1D {
    n: usize,
    theta: f64,
    /// Up-step probability per level.
    pub up: Vec<f64>,
    /// Down-step probability per level.
    pub down: Vec<f64>,
    /// Holding probability per level.
    pub stay: Vec<f64>,
}

/// Builds the weight-chain kernel; requires the half-lazy chain.
pub fn kernel_1d(model: &ModelParams) -> Result<Kernel1D> {
    model.require_half_lazy()?;
    let n = model.n();
    let nf = n as f64;
    let theta = model.theta();
    let up: Vec<f64> = (0..=n).map(|s| (nf - s as f64) * theta / (2.0 * nf)).collect();
    let down: Vec<f64> = (0..=n).map(|s| s as f64 / (2.0 * nf)).collect();
    let stay: Vec<f64> = (0..=n).map(|s| 1.0 - up[s] - down[s]).collect();
    Ok(Kernel1D { n, theta, up, down, stay })
}

impl Kernel1D {
    /// Dimension n; levels run over 0..=n.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Bias parameter the kernel was built for.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// One kernel application, gather form: dst[s] collects from s-1, s,
    /// s+1.  Slices must both have length n+1.
    pub fn step_into(&self, src: &[f64], dst: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(src.len(), n + 1);
        debug_assert_eq!(dst.len(), n + 1);
        for s in 0..=n {
            let mut acc = src[s] * self.stay[s];
            if s > 0 {
                acc += src[s - 1] * self.up[s - 1];
            }
            if s < n {
                acc += src[s + 1] * self.down[s + 1];
            }
            dst[s] = acc;
        }
    }
}

/// The five transition probabilities out of one two-dimensional state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil2D {
    /// r' -> r'+2.
    pub rp_up: f64,
    /// r' -> r'-2.
    pub rp_down: f64,
    /// r -> r-2.
    pub r_down: f64,
    /// r -> r+2.
    pub r_up: f64,
    /// Holding probability.
    pub stay: f64,
}

/// The two-dimensional lumped kernel of the half-lazy chain over a base
/// weight k.  The r-moves depend only on the r-index and the r'-moves only
/// on the r'-index, so the kernel is stored as four one-dimensional
/// coefficient arrays.
///
/// Fields are public so tests can inject perturbations; the constructor is
/// the only supported way to build a faithful kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2D {
    lattice: Lattice2D,
    theta: f64,
    /// P(r -> r+2) at r-index i: (k-i)/(2n).
    pub r_up: Vec<f64>,
    /// P(r -> r-2) at r-index i: i theta/(2n).
    pub r_down: Vec<f64>,
    /// P(r' -> r'+2) at r'-index j: (n-k-j) theta/(2n).
    pub rp_up: Vec<f64>,
    /// P(r' -> r'-2) at r'-index j: j/(2n).
    pub rp_down: Vec<f64>,
}

/// Builds the two-dimensional kernel; requires the half-lazy chain.
pub fn kernel_2d(model: &ModelParams, k: usize) -> Result<Kernel2D> {
    model.require_half_lazy()?;
    let lattice = Lattice2D::new(model.n(), k)?;
    let nf = model.n() as f64;
    let kf = k as f64;
    let theta = model.theta();
    let r_up: Vec<f64> = (0..lattice.rows()).map(|i| (kf - i as f64) / (2.0 * nf)).collect();
    let r_down: Vec<f64> = (0..lattice.rows()).map(|i| i as f64 * theta / (2.0 * nf)).collect();
    let rp_up: Vec<f64> = (0..lattice.cols())
        .map(|j| (nf - kf - j as f64) * theta / (2.0 * nf))
        .collect();
    let rp_down: Vec<f64> = (0..lattice.cols()).map(|j| j as f64 / (2.0 * nf)).collect();
    Ok(Kernel2D { lattice, theta, r_up, r_down, rp_up, rp_down })
}

impl Kernel2D {
    /// The state space the kernel acts on.
    pub fn lattice(&self) -> Lattice2D {
        self.lattice
    }

    /// Bias parameter the kernel was built for.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Holding probability at grid cell (i, j): one minus the four moves.
    pub fn stay(&self, i: usize, j: usize) -> f64 {
        1.0 - self.r_up[i] - self.r_down[i] - self.rp_up[j] - self.rp_down[j]
    }

    /// The full stencil at a state.
    pub fn stencil(&self, s: &State2D) -> Result<Stencil2D> {
        let (i, j) = self.lattice.cell_of(s)?;
        Ok(Stencil2D {
            rp_up: self.rp_up[j],
            rp_down: self.rp_down[j],
            r_down: self.r_down[i],
            r_up: self.r_up[i],
            stay: self.stay(i, j),
        })
    }

    /// The same row in level coordinates: target (l, l') pairs with their
    /// probabilities, zero-probability boundary moves omitted, holding term
    /// included.  This is the (l, l') form of the kernel, reached through
    /// the coordinate bijection.
    pub fn row_levels(&self, l: usize, lp: usize) -> Result<Vec<((usize, usize), f64)>> {
        let s = State2D::from_levels(self.lattice.k, l, lp);
        let (i, j) = self.lattice.cell_of(&s)?;
        let mut out = Vec::with_capacity(5);
        let mut push = |r: i64, rp: i64, p: f64| -> Result<()> {
            if p > 0.0 {
                let (l2, lp2) = reparametrize_inv(r, rp)?;
                out.push(((l2, lp2), p));
            }
            Ok(())
        };
        push(s.r, s.rp + 2, self.rp_up[j])?;
        push(s.r, s.rp - 2, self.rp_down[j])?;
        push(s.r - 2, s.rp, self.r_down[i])?;
        push(s.r + 2, s.rp, self.r_up[i])?;
        push(s.r, s.rp, self.stay(i, j))?;
        Ok(out)
    }

    /// One kernel application in gather form over the row-major mass
    /// layout.  Both slices must have length `lattice.len()`.
    pub fn step_into(&self, src: &[f64], dst: &mut [f64]) {
        let rows = self.lattice.rows();
        let cols = self.lattice.cols();
        debug_assert_eq!(src.len(), rows * cols);
        debug_assert_eq!(dst.len(), rows * cols);
        for i in 0..rows {
            let base = i * cols;
            let stay_i = 1.0 - self.r_up[i] - self.r_down[i];
            for j in 0..cols {
                // stay = (1 - r moves at i) - (r' moves at j)
                let mut acc =
                    src[base + j] * (stay_i - self.rp_up[j] - self.rp_down[j]);
                if j > 0 {
                    acc += src[base + j - 1] * self.rp_up[j - 1];
                }
                if j + 1 < cols {
                    acc += src[base + j + 1] * self.rp_down[j + 1];
                }
                if i > 0 {
                    acc += src[base - cols + j] * self.r_up[i - 1];
                }
                if i + 1 < rows {
                    acc += src[base + cols + j] * self.r_down[i + 1];
                }
                dst[base + j] = acc;
            }
        }
    }
}

/// A distribution over weight levels 0..=n.
#[derive(Debug, Clone, PartialEq)]
pub struct Dist1D {
    n: usize,
    mass: Vec<f64>,
}

impl Dist1D {
    /// Point mass at level k.
    pub fn point(n: usize, k: usize) -> Result<Self> {
        if k > n {
            return Err(Error::InvalidParameter {
                name: "k",
                value: k as f64,
                expected: "k <= n",
            });
        }
        let mut mass = vec![0.0; n + 1];
        mass[k] = 1.0;
        Ok(Self { n, mass })
    }

    /// Wraps an explicit level mass vector of length n+1.
    pub fn from_mass(n: usize, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != n + 1 {
            return Err(Error::DimensionMismatch {
                left: format!("mass vector of length {}", mass.len()),
                right: format!("levels 0..={n}"),
            });
        }
        Ok(Self { n, mass })
    }

    /// Dimension n.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Mass by level.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Mean level.
    pub fn mean(&self) -> f64 {
        self.mass.iter().enumerate().map(|(s, m)| s as f64 * m).sum()
    }

    /// Variance of the level.
    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.mass
            .iter()
            .enumerate()
            .map(|(s, m)| (s as f64 - mu).powi(2) * m)
            .sum()
    }

    /// Total variation distance to another level distribution.
    pub fn tv(&self, other: &Self) -> Result<f64> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                left: format!("levels 0..={}", self.n),
                right: format!("levels 0..={}", other.n),
            });
        }
        Ok(crate::mixing::tv_from_slices(&self.mass, &other.mass))
    }
}

/// A distribution over a two-dimensional lattice, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dist2D {
    lattice: Lattice2D,
    mass: Vec<f64>,
}

impl Dist2D {
    /// Point mass at a state of the lattice.
    pub fn point(lattice: Lattice2D, s: &State2D) -> Result<Self> {
        let (i, j) = lattice.cell_of(s)?;
        let mut mass = vec![0.0; lattice.len()];
        mass[lattice.flat(i, j)] = 1.0;
        Ok(Self { lattice, mass })
    }

    /// Point mass at the canonical start (-k, k).
    pub fn point_at_base(lattice: Lattice2D) -> Self {
        let s = lattice.base_state();
        Self::point(lattice, &s).expect("base state is always on the lattice")
    }

    /// Wraps an explicit row-major mass vector.
    pub fn from_mass(lattice: Lattice2D, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != lattice.len() {
            return Err(Error::DimensionMismatch {
                left: format!("mass vector of length {}", mass.len()),
                right: format!("lattice with {} states", lattice.len()),
            });
        }
        Ok(Self { lattice, mass })
    }

    /// The lattice the distribution lives on.
    pub fn lattice(&self) -> Lattice2D {
        self.lattice
    }

    /// Row-major mass.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Mass at a state.
    pub fn mass_at(&self, s: &State2D) -> Result<f64> {
        let (i, j) = self.lattice.cell_of(s)?;
        Ok(self.mass[self.lattice.flat(i, j)])
    }

    /// Mean of (r, r').
    pub fn mean(&self) -> (f64, f64) {
        let cols = self.lattice.cols();
        let mut mr = 0.0;
        let mut mrp = 0.0;
        for (idx, m) in self.mass.iter().enumerate() {
            let (i, j) = (idx / cols, idx % cols);
            mr += self.lattice.r_at(i) as f64 * m;
            mrp += self.lattice.rp_at(j) as f64 * m;
        }
        (mr, mrp)
    }

    /// Pushes the distribution down to the weight chain: S = k + j - i.
    pub fn level_marginal(&self) -> Dist1D {
        let n = self.lattice.n();
        let cols = self.lattice.cols();
        let k = self.lattice.k();
        let mut mass = vec![0.0; n + 1];
        for (idx, m) in self.mass.iter().enumerate() {
            let (i, j) = (idx / cols, idx % cols);
            mass[k + j - i] += m;
        }
        Dist1D { n, mass }
    }

    /// Total variation distance to another distribution on the same
    /// lattice.
    pub fn tv(&self, other: &Self) -> Result<f64> {
        if self.lattice != other.lattice {
            return Err(Error::DimensionMismatch {
                left: format!("lattice n={} k={}", self.lattice.n(), self.lattice.k()),
                right: format!("lattice n={} k={}", other.lattice.n(), other.lattice.k()),
            });
        }
        Ok(crate::mixing::tv_from_slices(&self.mass, &other.mass))
    }
}

/// Stationary law of the weight chain: Binomial(n, p).
pub fn stationary_1d(model: &ModelParams) -> Dist1D {
    Dist1D { n: model.n(), mass: binomial_pmf(model.n(), model.p()) }
}

/// Stationary law of the two-dimensional chain over base weight k.
///
/// Under the target product measure the coordinates are independent, so the
/// r-index (ones lost among the k base coordinates counts down from k) is
/// Binomial(k, 1-p) and the r'-index (ones among the other n-k coordinates)
/// is Binomial(n-k, p), independently:
///
/// ```text
/// mass[i][j] = Bin(k, 1-p)(i) * Bin(n-k, p)(j) .
/// ```
pub fn stationary_2d(model: &ModelParams, k: usize) -> Result<Dist2D> {
    let lattice = Lattice2D::new(model.n(), k)?;
    let p = model.p();
    let row_w = binomial_pmf(k, 1.0 - p);
    let col_w = binomial_pmf(model.n() - k, p);
    let mut mass = Vec::with_capacity(lattice.len());
    for wi in &row_w {
        for wj in &col_w {
            mass.push(wi * wj);
        }
    }
    let total: f64 = mass.iter().sum();
    for m in &mut mass {
        *m /= total;
    }
    Dist2D::from_mass(lattice, mass)
}

/// Pushes a full-cube distribution forward onto the two-dimensional
/// lattice of the given base point: state z lands at level pair
/// (S(z), d(base, z)).
pub fn lumped_pushforward(full: &FullDist, base: &HypercubeState) -> Result<Dist2D> {
    if full.n() != base.n() {
        return Err(Error::DimensionMismatch {
            left: format!("distribution on dimension {}", full.n()),
            right: format!("base point of dimension {}", base.n()),
        });
    }
    let n = full.n();
    let k = base.weight();
    let lattice = Lattice2D::new(n, k)?;
    let cols = lattice.cols();
    let base_idx = base.index();
    let mut mass = vec![0.0; lattice.len()];
    for (idx, m) in full.mass().iter().enumerate() {
        let l = (idx as u64).count_ones() as usize;
        let lp = (idx as u64 ^ base_idx).count_ones() as usize;
        // i = (r+k)/2 = (l'-l+k)/2 , j = (r'-k)/2 = (l'+l-k)/2
        let i = (lp + k - l) / 2;
        let j = (lp + l - k) / 2;
        mass[i * cols + j] += m;
    }
    Dist2D::from_mass(lattice, mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{full_evolve, full_stationary};

    #[test]
    fn overlap_counts_worked_example() {
        // n=11, k=3, l=4, l'=5 -> classes (5, 3, 2, 1)
        let c = overlap_counts(11, 3, 4, 5).unwrap();
        assert_eq!(
            c,
            OverlapCounts { both_zero: 5, new_ones: 3, lost_ones: 2, shared_ones: 1 }
        );
    }

    #[test]
    fn overlap_counts_rejections() {
        // parity violation
        assert!(matches!(
            overlap_counts(4, 1, 1, 1),
            Err(Error::InvalidLatticePoint { .. })
        ));
        // negative class count: all ones erased forces l' = k
        assert!(overlap_counts(4, 4, 0, 0).is_err());
        assert!(overlap_counts(4, 4, 0, 4).is_ok());
        // out of range levels
        assert!(overlap_counts(4, 5, 0, 0).is_err());
    }

    #[test]
    fn overlap_counts_match_explicit_bit_strings() {
        // brute force over every pair of states at n = 6
        let n = 6usize;
        for x in 0u64..1 << n {
            for z in 0u64..1 << n {
                let k = x.count_ones() as usize;
                let l = z.count_ones() as usize;
                let lp = (x ^ z).count_ones() as usize;
                let c = overlap_counts(n, k, l, lp).unwrap();
                assert_eq!(c.both_zero, (!x & !z & ((1 << n) - 1)).count_ones() as usize);
                assert_eq!(c.new_ones, (!x & z).count_ones() as usize);
                assert_eq!(c.lost_ones, (x & !z).count_ones() as usize);
                assert_eq!(c.shared_ones, (x & z).count_ones() as usize);
            }
        }
    }

    #[test]
    fn reparametrize_roundtrip_and_rejections() {
        assert_eq!(reparametrize(4, 5), (1, 9));
        assert_eq!(reparametrize_inv(1, 9).unwrap(), (4, 5));
        assert!(reparametrize_inv(1, 2).is_err()); // odd sum
        assert!(reparametrize_inv(5, 3).is_err()); // rp < |r|
        assert!(reparametrize_inv(-4, 2).is_err()); // rp < |r|
    }

    #[test]
    fn lattice_enumeration_small() {
        let states = enumerate_states_2d(2, 1).unwrap();
        let expect: Vec<(i64, i64)> = vec![(-1, 1), (-1, 3), (1, 1), (1, 3)];
        assert_eq!(states.len(), 4);
        for (s, e) in states.iter().zip(&expect) {
            assert_eq!((s.r, s.rp), *e);
        }
        // counts: (k+1)(n-k+1)
        assert_eq!(enumerate_states_2d(11, 3).unwrap().len(), 4 * 9);
        assert_eq!(enumerate_states_2d(7, 0).unwrap().len(), 8);
        assert_eq!(enumerate_states_2d(7, 7).unwrap().len(), 8);
    }

    #[test]
    fn lattice_cell_roundtrip_and_rejections() {
        let lat = Lattice2D::new(9, 4).unwrap();
        for s in lat.states() {
            let (i, j) = lat.cell_of(&s).unwrap();
            assert_eq!(lat.state_at(i, j), s);
            let (l, lp) = s.levels().unwrap();
            assert_eq!(State2D::from_levels(4, l, lp), s);
        }
        // parity violation
        assert!(lat.cell_of(&State2D::new(-3, 4, 4)).is_err());
        // range violation
        assert!(lat.cell_of(&State2D::new(6, 6, 4)).is_err());
        // base weight mismatch
        assert!(lat.cell_of(&State2D::new(0, 4, 2)).is_err());
    }

    #[test]
    fn kernel_1d_frozen_example_and_row_sums() {
        // n=2, theta=1/2, level 1: up 1/8, down 1/4, stay 5/8
        let model = ModelParams::half_lazy(2, 0.5).unwrap();
        let k1 = kernel_1d(&model).unwrap();
        assert!((k1.up[1] - 0.125).abs() < 1e-16);
        assert!((k1.down[1] - 0.25).abs() < 1e-16);
        assert!((k1.stay[1] - 0.625).abs() < 1e-16);

        for &(n, theta) in &[(7usize, 0.3f64), (40, 1.0), (160, 0.05)] {
            // theta > 1 rejected at model level, 0.05 fine
            let model = ModelParams::half_lazy(n, theta).unwrap();
            let k1 = kernel_1d(&model).unwrap();
            for s in 0..=n {
                let sum = k1.up[s] + k1.down[s] + k1.stay[s];
                assert!((sum - 1.0).abs() <= 1e-15);
                assert!(k1.stay[s] >= 0.5 - 1e-15);
            }
            // boundary levels cannot leave the range
            assert_eq!(k1.up[n], 0.0);
            assert_eq!(k1.down[0], 0.0);
        }
    }

    #[test]
    fn kernel_1d_requires_half_lazy() {
        let model = ModelParams::new(4, 0.5, 0.0).unwrap();
        assert!(matches!(kernel_1d(&model), Err(Error::RequiresHalfLazy { .. })));
    }

    #[test]
    fn kernel_2d_frozen_examples() {
        // n=11, k=3, theta=1, (r, r') = (1, 9):
        // (5/22, 3/22, 1/11, 1/22, 1/2)
        let model = ModelParams::half_lazy(11, 1.0).unwrap();
        let k2 = kernel_2d(&model, 3).unwrap();
        let st = k2.stencil(&State2D::new(1, 9, 3)).unwrap();
        assert!((st.rp_up - 5.0 / 22.0).abs() < 1e-15);
        assert!((st.rp_down - 3.0 / 22.0).abs() < 1e-15);
        assert!((st.r_down - 1.0 / 11.0).abs() < 1e-15);
        assert!((st.r_up - 1.0 / 22.0).abs() < 1e-15);
        assert!((st.stay - 0.5).abs() < 1e-15);

        // n=2, k=1, theta=1 at the corner (-1, 1): only r'+2 and r+2 open
        let model = ModelParams::half_lazy(2, 1.0).unwrap();
        let k2 = kernel_2d(&model, 1).unwrap();
        let st = k2.stencil(&State2D::new(-1, 1, 1)).unwrap();
        assert!((st.rp_up - 0.25).abs() < 1e-16);
        assert_eq!(st.rp_down, 0.0);
        assert_eq!(st.r_down, 0.0);
        assert!((st.r_up - 0.25).abs() < 1e-16);
        assert!((st.stay - 0.5).abs() < 1e-16);
    }

    #[test]
    fn kernel_2d_rows_are_stochastic_and_stay_dominant() {
        for &(n, theta) in &[(5usize, 0.2f64), (12, 1.0), (30, 0.6)] {
            let model = ModelParams::half_lazy(n, theta).unwrap();
            for k in 0..=n {
                let k2 = kernel_2d(&model, k).unwrap();
                for s in k2.lattice().states() {
                    let st = k2.stencil(&s).unwrap();
                    let sum = st.rp_up + st.rp_down + st.r_down + st.r_up + st.stay;
                    assert!((sum - 1.0).abs() <= 1e-15);
                    assert!(st.stay >= 0.5 - 1e-15);
                }
            }
        }
    }

    #[test]
    fn kernel_2d_level_form_via_bijection() {
        let model = ModelParams::half_lazy(11, 1.0).unwrap();
        let k2 = kernel_2d(&model, 3).unwrap();
        // (r, r') = (1, 9) <-> (l, l') = (4, 5)
        let row = k2.row_levels(4, 5).unwrap();
        let get = |l: usize, lp: usize| -> f64 {
            row.iter().find(|((a, b), _)| (*a, *b) == (l, lp)).map_or(0.0, |(_, p)| *p)
        };
        assert!((get(5, 6) - 5.0 / 22.0).abs() < 1e-15); // r' up: l and l' up
        assert!((get(3, 4) - 3.0 / 22.0).abs() < 1e-15); // r' down
        assert!((get(5, 4) - 1.0 / 11.0).abs() < 1e-15); // r down: l up, l' down
        assert!((get(3, 6) - 1.0 / 22.0).abs() < 1e-15); // r up: l down, l' up
        assert!((get(4, 5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn stationary_1d_is_binomial_and_fixed() {
        let model = ModelParams::half_lazy(10, 0.5).unwrap();
        let pi = stationary_1d(&model);
        let sum: f64 = pi.mass().iter().sum();
        assert!((sum - 1.0).abs() < 1e-14);
        assert!((pi.mean() - 10.0 / 3.0).abs() < 1e-12);

        let k1 = kernel_1d(&model).unwrap();
        let mut next = vec![0.0; 11];
        k1.step_into(pi.mass(), &mut next);
        for (s, (a, b)) in next.iter().zip(pi.mass()).enumerate() {
            assert!((a - b).abs() < 1e-16, "level {s}");
        }
    }

    #[test]
    fn stationary_2d_frozen_example_and_moments() {
        // n=2, k=1, theta=1: all four states carry 1/4
        let model = ModelParams::half_lazy(2, 1.0).unwrap();
        let pi = stationary_2d(&model, 1).unwrap();
        for m in pi.mass() {
            assert!((m - 0.25).abs() < 1e-15);
        }

        // moments at a larger size: mean r = k(1-theta)/(1+theta),
        // mean r' = 2n theta/(1+theta) + k(1-theta)/(1+theta)
        let (n, k, theta) = (40usize, 17usize, 0.35f64);
        let model = ModelParams::half_lazy(n, theta).unwrap();
        let pi = stationary_2d(&model, k).unwrap();
        let (mr, mrp) = pi.mean();
        let expect_r = k as f64 * (1.0 - theta) / (1.0 + theta);
        let expect_rp =
            2.0 * n as f64 * theta / (1.0 + theta) + expect_r;
        assert!((mr - expect_r).abs() < 1e-10, "{mr} vs {expect_r}");
        assert!((mrp - expect_rp).abs() < 1e-10, "{mrp} vs {expect_rp}");
    }

    #[test]
    fn stationary_2d_fixed_under_kernel() {
        let model = ModelParams::half_lazy(13, 0.45).unwrap();
        for k in [0usize, 1, 6, 13] {
            let pi = stationary_2d(&model, k).unwrap();
            let k2 = kernel_2d(&model, k).unwrap();
            let mut next = vec![0.0; pi.mass().len()];
            k2.step_into(pi.mass(), &mut next);
            let worst = pi
                .mass()
                .iter()
                .zip(&next)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            assert!(worst < 1e-15, "k={k}: residual {worst}");
        }
    }

    #[test]
    fn pushforward_of_point_mass_hits_the_base_cell() {
        let base = HypercubeState::from_index(9, 0b101100101).unwrap();
        let point = FullDist::point(&base).unwrap();
        let lumped = lumped_pushforward(&point, &base).unwrap();
        let k = base.weight();
        let at_base = lumped.mass_at(&State2D::new(-(k as i64), k as i64, k)).unwrap();
        assert_eq!(at_base, 1.0);
    }

    #[test]
    fn pushforward_of_stationary_matches_product_form() {
        let model = ModelParams::half_lazy(8, 0.5).unwrap();
        let pi_full = full_stationary(&model).unwrap();
        let base = HypercubeState::first_k_ones(8, 3).unwrap();
        let pushed = lumped_pushforward(&pi_full, &base).unwrap();
        let direct = stationary_2d(&model, 3).unwrap();
        assert!(pushed.tv(&direct).unwrap() < 1e-14);
    }

    #[test]
    fn pushforward_commutes_with_one_step() {
        // lumpability: project(P_full mu) = P_2d project(mu)
        let model = ModelParams::half_lazy(6, 0.7).unwrap();
        let base = HypercubeState::first_k_ones(6, 2).unwrap();
        let x0 = HypercubeState::from_index(6, 0b110101).unwrap();
        let mu = FullDist::point(&x0).unwrap();

        let full_then_project =
            lumped_pushforward(&full_evolve(&model, &mu, 1).unwrap(), &base).unwrap();

        let projected = lumped_pushforward(&mu, &base).unwrap();
        let k2 = kernel_2d(&model, 2).unwrap();
        let mut next = vec![0.0; projected.mass().len()];
        k2.step_into(projected.mass(), &mut next);
        let project_then_step = Dist2D::from_mass(projected.lattice(), next).unwrap();

        assert!(full_then_project.tv(&project_then_step).unwrap() < 1e-15);
    }

    #[test]
    fn level_marginal_of_stationary_2d_is_binomial() {
        let model = ModelParams::half_lazy(12, 0.8).unwrap();
        let pi2 = stationary_2d(&model, 5).unwrap();
        let marg = pi2.level_marginal();
        let pi1 = stationary_1d(&model);
        assert!(marg.tv(&pi1).unwrap() < 1e-14);
    }
}
