//! Fourier-based linear combinations of unitaries (LCU) for quantum optimization.
//!
//! The crate decomposes hard-to-implement unitaries into weighted sums of simple
//! ones and provides both the exact quasi-probability channel and an ancilla-free
//! randomized sampler, together with the bookkeeping (`Γ` costs, CVaR bounds)
//! needed to reason about the sampling overhead. Two decompositions are built in:
//!
//! * a discrete-Fourier LCU for diagonal unitaries `e^{-iγ f(g(x))}` over the
//!   phase family `V(θ)` ([`lcu::diagonal`]), and
//! * a continuous Fourier LCU over SU(2) for permutation-invariant unitaries
//!   such as the fully connected XY-mixer ([`lcu::su2`]).
//!
//! On top of those sit problem generators (densest-k-subgraph, MIS, SWAP-extended
//! heavy-hex graphs), QAOA circuit builders, estimators (CVaR, feasibility,
//! optimality), a derivative-free optimizer, and an experiment driver exposed
//! through the `lcu` command-line binary.
//!
//! # Conventions
//!
//! * Amplitude storage is little-endian: qubit 0 is the least significant bit of
//!   the basis-state index.
//! * `R_Z(θ) = diag(e^{-iθ/2}, e^{iθ/2})`, `R_Y(θ) = exp(-iθY/2)`,
//!   `R_X(θ) = exp(-iθX/2)`.
//! * State equality is always up to global phase; comparisons use `|⟨a|b⟩|`.
//! * Half-integer spin labels are passed as doubled integers (`twice_j = 2j`).

pub mod estimators;
pub mod io;
pub mod lcu;
pub mod problems;
pub mod qaoa;
pub mod qpd;
pub mod rng;
pub mod sim;
pub mod verify;
pub mod vqopt;

mod error;

pub use error::{Error, Result};
