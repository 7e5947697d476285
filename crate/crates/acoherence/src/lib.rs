//! Counting statistics of quantum radiation fields measured by resonant
//! harmonic detectors.
//!
//! A single field mode couples to a detector mode through the
//! excitation-conserving interaction `κ(a†b + b†a)`, `κ = √(γ₀Δt)`. This
//! crate computes the detector excitation probabilities along four routes —
//! an order-κ⁶ perturbative series, the exact P-representation form, the
//! factored-propagator (BCH) approximation with its Gaussian phase-space
//! overlap evaluation, and a brute-force truncated-Fock oracle — together
//! with the global counting statistics (mean, variance, Mandel Q) and the
//! coherence ratio tests `R = 2P₂P₀/P₁²`, `R′ = 3P₃P₁/(2P₂²)` that
//! discriminate coherent (R = 1), thermal (R = 2) and squeezed (R → 3)
//! fields. A seeded Monte Carlo click sampler, a parametric-bootstrap
//! coherence hypothesis test, and calculators for gravitational-wave
//! detection scenarios round out the toolkit.
//!
//! Each major capability has a runnable example:
//!
//! ```bash
//! cargo run --example ratio_tests          # R, R' across field states and routes
//! cargo run --example probability_routes   # series/exact/BCH/oracle agreement
//! cargo run --example gaussian_ratio       # displaced squeezed thermal states
//! cargo run --example click_sampling       # seeded windowed click counts
//! cargo run --example hypothesis_test      # coherent-null test on sampled data
//! cargo run --example gw_scenarios         # resonant-bar numbers for GW events
//! ```
//!
//! The same functionality is scriptable through the `acoherence` binary
//! (`probs`, `ratio`, `moments`, `sample`, `test`, `astro`).

pub mod astro;
pub mod cli;
pub mod detector;
pub mod error;
pub mod fock;
pub mod sampler;
pub mod states;
pub mod stats;

pub use error::{Error, Result};
