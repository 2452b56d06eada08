//! Rewriting quantum circuits that query a controlled black-box unitary into
//! equivalent circuits that query only the uncontrolled unitary.
//!
//! A circuit may call a black-box oracle `U` (or `U†`, `U*`, `Uᵀ`) with or
//! without a control qubit. Controlled calls can read the oracle's global
//! phase, which uncontrolled calls cannot, so a controlled call cannot be
//! simulated exactly by uncontrolled ones. It *can* be simulated up to a
//! uniformly random global phase: [`transform::decontrol`] rewrites every
//! controlled call into a small gadget (two controlled-SWAPs, a controlled
//! counter increment, and one uncontrolled call), and the rewritten circuit's
//! output density matrix equals the original circuit's output averaged over a
//! random phase on the oracle.
//!
//! The crate is organized as:
//!
//! - [`linalg`] / [`eig`] — dense complex vectors and matrices, tensor
//!   products, partial traces, maximally entangled and Choi vectors, and the
//!   Hermitian/unitary eigensolvers backing trace distance and the eigenphase
//!   mixture.
//! - [`circuit`] — the circuit data model: named qudit registers with roles,
//!   fixed gates, abstract oracle calls, adders, and controlled-SWAPs, plus
//!   validation.
//! - [`format`](crate::format) — the JSON file formats for circuits and oracle bindings.
//! - [`sim`] — exact dense evaluation: pure outputs, traced densities,
//!   Feynman-path decompositions, the brute-force phase average, and the
//!   eigenphase mixture.
//! - [`transform`] — the decontrolling rewrite itself, its low-overhead
//!   variants, and structural overhead accounting.
//! - [`harness`] — equivalence checking, seeded randomized property
//!   campaigns, and small exactly-evaluated demos.
//!
//! Core numerics are generic over the real scalar via [`scalar::Scalar`]
//! (`f32` or `f64`); the aliases below fix `f64`, which is what the harness,
//! the CLI, and all stated tolerances use.

pub mod circuit;
pub mod eig;
pub mod format;
pub mod gates;
pub mod harness;
pub mod linalg;
pub mod scalar;
pub mod sim;
pub mod transform;

pub use scalar::Scalar;

/// Tolerance for equivalence assertions between density matrices.
pub const EQUIV_TOL: f64 = 1e-9;
/// Tolerance for unitarity and eigenpair residual checks.
pub const UNITARY_TOL: f64 = 1e-10;
/// Tolerance for exact identities (trace preservation, ricochet).
pub const EXACT_TOL: f64 = 1e-12;

/// `f64` aliases for the generic core types.
pub type ComplexMatrix64 = linalg::ComplexMatrix<f64>;
pub type ComplexVector64 = linalg::ComplexVector<f64>;
pub type Circuit64 = circuit::Circuit<f64>;
pub type CircuitOp64 = circuit::CircuitOp<f64>;
pub type OracleBinding64 = sim::OracleBinding<f64>;
pub type DensityState64 = sim::DensityState<f64>;
