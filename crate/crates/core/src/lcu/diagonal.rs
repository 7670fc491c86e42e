//! Discrete-Fourier LCU for diagonal unitaries.
//!
//! Given `f: {0..m} -> R` and an angle `γ`, the target
//! `U_f(γ) = Σ_x e^{-iγ f(g(x))} |x⟩⟨x|` is expanded over the phase family
//! `V(θ) = Σ_x e^{iθ g(x)} |x⟩⟨x|` at the Fourier angles `θ_j = 2πj/(m+1)`:
//!
//! ```text
//! c_j = (1/(m+1)) Σ_k e^{-iγ f(k)} e^{-iθ_j k},   U_f(γ) = Σ_j c_j V(θ_j).
//! ```
//!
//! Since the transformed sequence has unit modulus, Parseval gives `‖c‖₂ = 1`,
//! hence the quasi-probability cost `Γ = ‖c‖₁² ≤ m+1`. For `g` = Hamming
//! weight, `V(θ_j)` is a single layer of `R_Z(θ_j)` gates up to the global
//! phase `e^{-iθ_j n/2}`.

use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::TAU;

use crate::{Error, Result};

/// Coefficients with `|c_j|` below this threshold are dropped from the branch
/// sampling distribution (they stay in `coeffs` for reconstruction).
const BRANCH_PRUNE_THRESHOLD: f64 = 1e-14;

/// A discrete-Fourier LCU of a diagonal unitary. Immutable once built.
#[derive(Clone, Debug)]
pub struct DiagonalLcu {
    gamma: f64,
    f_values: Vec<f64>,
    coeffs: Vec<Complex64>,
    thetas: Vec<f64>,
    gamma_cost: f64,
    /// Pruned branch distribution: `(j, q_j)` with `q_j ∝ |c_j|`.
    branches: Vec<(usize, f64)>,
}

/// Builds the discrete-Fourier LCU of `e^{-iγ f(k)}` for `k = 0..m`.
pub fn build_diagonal_lcu(f_values: &[f64], gamma: f64) -> Result<DiagonalLcu> {
    if f_values.is_empty() {
        return Err(Error::EmptyInput("f_values"));
    }
    if f_values.iter().any(|v| !v.is_finite()) || !gamma.is_finite() {
        return Err(Error::NonFiniteAngle);
    }
    let len = f_values.len();
    let phases: Vec<Complex64> =
        f_values.iter().map(|&f| Complex64::from_polar(1.0, -gamma * f)).collect();
    let thetas: Vec<f64> = (0..len).map(|j| TAU * j as f64 / len as f64).collect();
    // Direct O(m^2) DFT; m stays small at the scales this crate targets.
    let mut coeffs = Vec::with_capacity(len);
    for &theta in &thetas {
        let mut c = Complex64::new(0.0, 0.0);
        for (k, &p) in phases.iter().enumerate() {
            c += p * Complex64::from_polar(1.0, -theta * k as f64);
        }
        coeffs.push(c / len as f64);
    }
    let one_norm: f64 = coeffs.iter().map(|c| c.norm()).sum();
    let gamma_cost = one_norm * one_norm;
    let kept: Vec<(usize, f64)> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() >= BRANCH_PRUNE_THRESHOLD)
        .map(|(j, c)| (j, c.norm()))
        .collect();
    let kept_norm: f64 = kept.iter().map(|(_, a)| a).sum();
    let branches = kept.into_iter().map(|(j, a)| (j, a / kept_norm)).collect();
    Ok(DiagonalLcu { gamma, f_values: f_values.to_vec(), coeffs, thetas, gamma_cost, branches })
}

/// `f(k) = (k - b)^2` for `k = 0..n`, the quadratic Hamming-weight penalty.
pub fn hamming_penalty_values(n: usize, b: usize) -> Result<Vec<f64>> {
    if b > n {
        return Err(Error::InvalidArgument(format!("target cardinality {b} exceeds n = {n}")));
    }
    Ok((0..=n).map(|k| ((k as f64) - (b as f64)).powi(2)).collect())
}

/// Indicator penalty on `{0..m}`: 0 inside `[l, u]`, 1 outside, so feasible
/// values carry no penalty.
pub fn indicator_window_values(m: usize, l: usize, u: usize) -> Result<Vec<f64>> {
    if l > u || u > m {
        return Err(Error::InvalidArgument(format!("window [{l}, {u}] invalid for m = {m}")));
    }
    Ok((0..=m).map(|k| if k >= l && k <= u { 0.0 } else { 1.0 }).collect())
}

impl DiagonalLcu {
    /// Range bound of `g`; the expansion has `m + 1` branches.
    pub fn m(&self) -> usize {
        self.f_values.len() - 1
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn f_values(&self) -> &[f64] {
        &self.f_values
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    /// `Γ = ‖c‖₁²`.
    pub fn gamma_cost(&self) -> f64 {
        self.gamma_cost
    }

    /// Pruned branch distribution as `(branch index, q_j)` pairs.
    pub fn branch_probs(&self) -> &[(usize, f64)] {
        &self.branches
    }

    /// Draws a branch index from the pruned distribution.
    pub fn sample_branch(&self, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for &(j, q) in &self.branches {
            acc += q;
            if u < acc {
                return j;
            }
        }
        self.branches.last().expect("nonempty branch distribution").0
    }

    /// The diagonal phase realized by branch `j` composed with `g`, i.e.
    /// `x ↦ θ_j · g(x)`. Apply with `gamma = -1` so the state picks up
    /// `e^{iθ_j g(x)}`; for `g` = Hamming weight this equals a layer of
    /// `R_Z(θ_j)` up to the global phase `e^{-iθ_j n/2}`.
    pub fn basis_phase_fn<'g>(
        &self,
        j: usize,
        g: &'g (dyn Fn(u64) -> usize + Send + Sync),
    ) -> impl Fn(u64) -> f64 + 'g {
        let theta = self.thetas[j];
        move |x| theta * g(x) as f64
    }

    /// `Σ_j c_j e^{iθ_j k} - e^{-iγ f(k)}` maximized over `k = 0..m`.
    pub fn reconstruction_error(&self) -> f64 {
        (0..self.f_values.len())
            .map(|k| self.pointwise_error(k))
            .fold(0.0, f64::max)
    }

    fn pointwise_error(&self, k: usize) -> f64 {
        let target = Complex64::from_polar(1.0, -self.gamma * self.f_values[k]);
        let sum: Complex64 = self
            .coeffs
            .iter()
            .zip(&self.thetas)
            .map(|(c, t)| c * Complex64::from_polar(1.0, t * k as f64))
            .sum();
        (sum - target).norm()
    }
}

/// Max-norm error of the LCU reconstruction over all `x ∈ {0,1}^n` for a
/// composition function `g`. Exhaustive; capped at 12 qubits.
pub fn reconstruct_unitary_error(
    lcu: &DiagonalLcu,
    g: &(dyn Fn(u64) -> usize + Send + Sync),
    n: usize,
) -> Result<f64> {
    if n > 12 {
        return Err(Error::QubitCountOutOfRange { n, min: 1, max: 12 });
    }
    let mut max_err: f64 = 0.0;
    for x in 0..(1u64 << n) {
        let k = g(x);
        if k > lcu.m() {
            return Err(Error::InvalidArgument(format!(
                "g({x}) = {k} exceeds range bound m = {}",
                lcu.m()
            )));
        }
        max_err = max_err.max(lcu.pointwise_error(k));
    }
    Ok(max_err)
}
