//! Fourier-based LCU decompositions.
//!
//! [`diagonal`] expands a diagonal target `e^{-iγ f(g(x))}` over the discrete
//! phase family `V(θ_j)`; [`su2`] expands permutation-invariant unitaries over
//! collective single-qubit rotations `R(g)^{⊗n}` with `g ∈ SU(2)`.

pub mod diagonal;
pub mod su2;

pub use diagonal::{
    build_diagonal_lcu, hamming_penalty_values, indicator_window_values, DiagonalLcu,
};
pub use su2::{
    build_su2_pool, coeff_general, coeff_xy, haar_sample, mc_reconstruct_xy, spin_sectors,
    wigner_small_d, xy_unitary_dense, EulerAngles, SpinSectors, Su2Branch, Su2Pool,
};
