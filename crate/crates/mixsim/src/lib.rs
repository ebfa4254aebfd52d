//! Mixture transceiver simulation for MISO broadcast channels.
//!
//! A transmitter with `N` antennas serves `K <= N` single-antenna users.
//! Users with closely-aligned channels are grouped adaptively; zero-forcing
//! beamforming separates the groups while superposition coding with
//! successive interference cancellation (SIC) runs inside each group.
//! This crate provides:
//!
//! - complex subspace primitives: orthogonal projectors, sequential
//!   projection, and the `phi`/`theta` alignment metrics ([`subspace`])
//! - Rayleigh channel sampling, chi-square/order-statistic references,
//!   CSI error models, and lower-tail exponent estimation ([`channel`])
//! - the adaptive grouping algorithms: exhaustive threshold search and the
//!   scalable semi-orthogonal (SUS) variant ([`grouping`])
//! - beam design and rate computation: max-min common beams with a `1/c`
//!   certificate, geometric power splits, exact SIC rates, closed-form rate
//!   lower bounds, and ZF/MRT baselines ([`transceiver`])
//! - a deterministic Monte Carlo engine for outage curves, diversity-slope
//!   fits, rate distributions, and sum-rate sweeps ([`montecarlo`])
//!
//! Reproducibility contract: every trial draws from an RNG stream derived
//! from `(master seed, experiment label, domain, trial index)`, and partial
//! results are reduced in a fixed order, so outputs are bit-identical for
//! any worker count (see [`streams`]). The `parallel` feature (default)
//! runs trials on a rayon pool; without it the engine is sequential.

pub mod channel;
pub mod grouping;
pub mod montecarlo;
pub mod streams;
pub mod subspace;
pub mod transceiver;

pub use num_complex::Complex64;
