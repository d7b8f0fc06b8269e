//! Benchmark-only package; see `benches/kernels.rs`.
//!
//! The interesting costs are the lumped kernel sweeps (the inner loop of
//! every exact profile), single coupling replicates (the inner loop of
//! every Monte Carlo tail), and the closed-form helpers that run at
//! sizes far beyond exact evolution.
