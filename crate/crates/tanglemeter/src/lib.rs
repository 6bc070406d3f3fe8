//! Simulation and estimation of entanglement-measure interferometry.
//!
//! The crate models a generalized Mach–Zehnder interferometer whose
//! controlled operation may be a unitary, a convex mixture of unitaries, or a
//! controlled permutation of state-copy rails. Networks of such circuits
//! measure the moments of ρρ̃ for a two-qubit state ρ, from which the
//! Wootters concurrence is recovered by inverting power sums; the same
//! machinery extends to the residual 3-tangle of pure three-qubit states.
//! Every circuit-derived quantity is checked against an independent
//! matrix-algebra route.
//!
//! Organization:
//!
//! - [`linalg`] — dense complex matrices, partial trace, Jacobi eigensolver
//! - [`states`] — validated density matrices / pure states, generators, file I/O
//! - [`concurrence`] — spin flip, ρρ̃ moments, Wootters concurrence oracle
//! - [`spectrum`] — moments → spectrum → concurrence inversion
//! - [`interferometer`] — intensity law, gate-level simulator, fringe fitting
//! - [`momentcircuits`] — controlled-permutation moment circuits
//! - [`tangle3`] — residual 3-tangle of pure three-qubit states
//! - [`circuitcount`] — circuit counting and canonicalization
//!
//! Heavy inner loops (term evaluation, ensemble simulation) run on rayon
//! when the default `parallel` feature is enabled and fall back to
//! sequential iteration otherwise; results are combined in a fixed order
//! either way, so output is identical across thread counts.

pub mod circuitcount;
pub mod concurrence;
pub mod error;
pub mod interferometer;
pub mod linalg;
pub mod momentcircuits;
pub mod par;
pub mod spectrum;
pub mod states;
pub mod tangle3;

pub use error::{Error, Result};
pub use linalg::CMatrix;
pub use states::{DensityMatrix, PureState};
