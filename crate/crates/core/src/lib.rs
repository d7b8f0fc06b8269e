/*!
Exact and Monte Carlo mixing analysis for a lazy Metropolis chain on the
hypercube with a product Bernoulli target.

The library is organized around three views of the same walk:

* [`model`]: the chain on {0,1}^n itself, as kernel rows, single steps,
  and brute-force distributions for small n.  Ground truth for everything
  else.
* [`projection`]: two lumpings that carry all the distance-to-
  stationarity information, the weight chain S(X_t) on {0,...,n} and the
  two-dimensional chain tracking (weight, Hamming distance to a base
  point) in difference/sum coordinates on a rectangular lattice.
* [`mixing`], [`bounds`], [`coupling`]: exact distance profiles and
  mixing times via the lumped kernels, closed-form certificates that
  bracket them, and coupled simulations whose coalescence tails bound the
  same distances from above.

[`verify`] packages the cross-checks between those layers into a
pass/fail suite.

# Example

```
use hypercut::{ModelParams, mixing};

let model = ModelParams::half_lazy(64, 1.0).unwrap();
let grid: Vec<u64> = (0..=300).step_by(10).collect();
let profile = mixing::distance_profile(&model, 64, &grid).unwrap();
let t_mix = mixing::mixing_time(&profile, 0.25).unwrap();
assert!(t_mix > 0);
```
*/

#![forbid(unsafe_code)]
#![warn(missing_docs)]

pub mod bounds;
pub mod coupling;
mod error;
pub mod mixing;
pub mod model;
pub mod numeric;
pub mod projection;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
pub use model::{FullDist, HypercubeState, KernelRow, ModelParams};
pub use projection::{
    Dist1D, Dist2D, Kernel1D, Kernel2D, Lattice2D, OverlapCounts, State2D,
};
pub use mixing::{MixingProfile, ProfileStart, WindowStats};
pub use bounds::BoundReport;
pub use coupling::{
    Coupling2DOutcome, CouplingOutcome, CouplingSpec, Start2D, TailEstimate, TailSummary,
};
