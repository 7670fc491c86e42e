//! Continuous Fourier LCU over SU(2) for permutation-invariant unitaries.
//!
//! An n-qubit permutation-invariant unitary is block diagonal across the
//! total-spin sectors `j ∈ {n/2, n/2-1, ..., j_min}` with multiplicities
//! `m_j = C(n, n/2-j) - C(n, n/2-j-1)`. Expanding each block over the
//! irreducible representations `D^j(g)` gives the coefficient function
//!
//! ```text
//! a_U(g) = Σ_j (2j+1) Tr[U_j D^j(g)†],     U = ∫ a_U(g) R(g)^{⊗n} dμ(g),
//! ```
//!
//! with `dμ` the normalized Haar measure. The induced quasi-probability cost is
//! `Γ_U = (∫ |a_U| dμ)² ≤ (n+1)(n+2)(n+3)/6` and is estimated by Monte Carlo.
//! For the XY-mixer `U_XY(β) = e^{-iβ(Jx²+Jy²)}` the blocks are diagonal with
//! eigenphases `e^{-i4β(j(j+1)-m²)}` and `a_β` has the closed form implemented
//! in [`coeff_xy`].
//!
//! Half-integer spin labels are passed as doubled integers. Spin blocks use
//! basis order `m = j, j-1, ..., -j`, and the representation matrices follow
//! `D^j_{m m'}(α, ϑ, χ) = e^{-imα} d^j_{m m'}(ϑ) e^{-im'χ}`, which makes
//! `D^{1/2}(g)` coincide with `R_Z(α) R_Y(ϑ) R_Z(χ)`.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::rng::{stream_rng, StreamDomain};
use crate::{Error, Result};

/// One total-spin sector: the label `2j` and its multiplicity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpinSector {
    pub twice_j: u64,
    pub multiplicity: u128,
}

/// The spin sectors of `n` qubits, largest `j` first.
#[derive(Clone, Debug)]
pub struct SpinSectors {
    n: usize,
    sectors: Vec<SpinSector>,
}

/// Exact binomial coefficient; `n <= 64` keeps everything inside u128.
fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Spin sectors and multiplicities for `1 <= n <= 64` qubits.
pub fn spin_sectors(n: usize) -> Result<SpinSectors> {
    if !(1..=64).contains(&n) {
        return Err(Error::QubitCountOutOfRange { n, min: 1, max: 64 });
    }
    let mut sectors = Vec::new();
    let mut twice_j = n as u64;
    loop {
        let k = (n as u64 - twice_j) / 2;
        let multiplicity = binomial(n as u64, k) - binomial(n as u64, k.wrapping_sub(1));
        sectors.push(SpinSector { twice_j, multiplicity });
        if twice_j < 2 {
            break;
        }
        twice_j -= 2;
    }
    Ok(SpinSectors { n, sectors })
}

impl SpinSectors {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sectors(&self) -> &[SpinSector] {
        &self.sectors
    }

    /// `Σ_j (2j+1) m_j`, which must equal `2^n` exactly.
    pub fn dimension_sum(&self) -> u128 {
        self.sectors
            .iter()
            .map(|s| (s.twice_j as u128 + 1) * s.multiplicity)
            .sum()
    }

    /// `Σ_j (2j+1)²`, the Cauchy-Schwarz bound on `Γ_U`; equals
    /// `(n+1)(n+2)(n+3)/6`.
    pub fn gamma_bound(&self) -> f64 {
        let n = self.n as u128;
        ((n + 1) * (n + 2) * (n + 3) / 6) as f64
    }
}

fn ln_factorials() -> &'static [f64; 130] {
    static TABLE: OnceLock<[f64; 130]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0.0f64; 130];
        for i in 1..t.len() {
            t[i] = t[i - 1] + (i as f64).ln();
        }
        t
    })
}

fn check_half_integers(twice_j: i64, twice_m1: i64, twice_m2: i64) -> Result<()> {
    let bad = twice_j < 0
        || twice_m1.abs() > twice_j
        || twice_m2.abs() > twice_j
        || (twice_j + twice_m1) % 2 != 0
        || (twice_j + twice_m2) % 2 != 0;
    if bad {
        return Err(Error::InvalidQuantumNumbers { twice_j, twice_m1, twice_m2 });
    }
    Ok(())
}

/// Wigner small-d matrix element `d^j_{m1 m2}(θ)`, computed from the explicit
/// factorial sum with log-factorials. Stable for `j <= 32` at double
/// precision (validated by the orthogonality tests).
pub fn wigner_small_d(twice_j: i64, twice_m1: i64, twice_m2: i64, theta: f64) -> Result<f64> {
    check_half_integers(twice_j, twice_m1, twice_m2)?;
    let lnf = ln_factorials();
    let jpm1 = ((twice_j + twice_m1) / 2) as usize;
    let jmm1 = ((twice_j - twice_m1) / 2) as usize;
    let jpm2 = ((twice_j + twice_m2) / 2) as usize;
    let jmm2 = ((twice_j - twice_m2) / 2) as usize;
    let m1_minus_m2 = (twice_m1 - twice_m2) / 2;
    let prefactor = 0.5 * (lnf[jpm1] + lnf[jmm1] + lnf[jpm2] + lnf[jmm2]);

    let s_min = 0.max(-m1_minus_m2);
    let s_max = (jpm2 as i64).min(jmm1 as i64);
    let (sin_half, cos_half) = (theta / 2.0).sin_cos();
    let mut sum = 0.0;
    for s in s_min..=s_max {
        let cos_exp = jpm2 as i64 + jmm1 as i64 - 2 * s;
        let sin_exp = m1_minus_m2 + 2 * s;
        let log_den = lnf[(jpm2 as i64 - s) as usize]
            + lnf[s as usize]
            + lnf[(m1_minus_m2 + s) as usize]
            + lnf[(jmm1 as i64 - s) as usize];
        let sign = if (m1_minus_m2 + s) % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign
            * (prefactor - log_den).exp()
            * cos_half.powi(cos_exp as i32)
            * sin_half.powi(sin_exp as i32);
    }
    Ok(sum)
}

/// Full `(2j+1) x (2j+1)` small-d matrix in basis order `m = j..-j`.
pub fn wigner_small_d_matrix(twice_j: i64, theta: f64) -> Result<DMatrix<f64>> {
    let dim = twice_j as usize + 1;
    let mut d = DMatrix::zeros(dim, dim);
    for r in 0..dim {
        let tm1 = twice_j - 2 * r as i64;
        for c in 0..dim {
            let tm2 = twice_j - 2 * c as i64;
            d[(r, c)] = wigner_small_d(twice_j, tm1, tm2, theta)?;
        }
    }
    Ok(d)
}

/// Euler angles parametrizing SU(2): `α ∈ [0, 2π)`, `ϑ ∈ [0, π]`,
/// `χ ∈ [0, 4π)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EulerAngles {
    pub alpha: f64,
    pub theta: f64,
    pub chi: f64,
}

impl EulerAngles {
    pub fn new(alpha: f64, theta: f64, chi: f64) -> Result<Self> {
        let ok = (0.0..std::f64::consts::TAU).contains(&alpha)
            && (0.0..=std::f64::consts::PI).contains(&theta)
            && (0.0..2.0 * std::f64::consts::TAU).contains(&chi);
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "Euler angles out of range: ({alpha}, {theta}, {chi})"
            )));
        }
        Ok(EulerAngles { alpha, theta, chi })
    }
}

/// Draws Euler angles from the Haar measure `sinϑ/(16π²) dα dϑ dχ`.
pub fn haar_sample(rng: &mut impl Rng) -> EulerAngles {
    let alpha = rng.gen::<f64>() * std::f64::consts::TAU;
    let chi = rng.gen::<f64>() * 2.0 * std::f64::consts::TAU;
    let theta = (1.0 - 2.0 * rng.gen::<f64>()).clamp(-1.0, 1.0).acos();
    EulerAngles { alpha, theta, chi }
}

/// The 2x2 rotation `R(α, ϑ, χ) = R_Z(α) R_Y(ϑ) R_Z(χ)` (as a matrix product;
/// in circuit order `R_Z(χ)` acts first).
pub fn su2_rotation(g: EulerAngles) -> Matrix2<Complex64> {
    let (sin_half, cos_half) = (g.theta / 2.0).sin_cos();
    let sum = (g.alpha + g.chi) / 2.0;
    let diff = (g.alpha - g.chi) / 2.0;
    Matrix2::new(
        Complex64::from_polar(cos_half, -sum),
        -Complex64::from_polar(sin_half, -diff),
        Complex64::from_polar(sin_half, diff),
        Complex64::from_polar(cos_half, sum),
    )
}

/// Full Wigner D matrix `D^j(g)` in basis order `m = j..-j`.
pub fn wigner_d_full(twice_j: i64, g: EulerAngles) -> Result<DMatrix<Complex64>> {
    let small = wigner_small_d_matrix(twice_j, g.theta)?;
    let dim = twice_j as usize + 1;
    let mut d = DMatrix::zeros(dim, dim);
    for r in 0..dim {
        let m1 = (twice_j - 2 * r as i64) as f64 / 2.0;
        for c in 0..dim {
            let m2 = (twice_j - 2 * c as i64) as f64 / 2.0;
            d[(r, c)] = Complex64::from_polar(1.0, -(m1 * g.alpha + m2 * g.chi)) * small[(r, c)];
        }
    }
    Ok(d)
}

/// Coefficient function `a_U(g) = Σ_j (2j+1) Tr[U_j D^j(g)†]` for a
/// permutation-invariant unitary given by its spin blocks, keyed by `2j` and
/// in basis order `m = j..-j`.
pub fn coeff_general(
    n: usize,
    blocks: &BTreeMap<u64, DMatrix<Complex64>>,
    g: EulerAngles,
) -> Result<Complex64> {
    let sectors = spin_sectors(n)?;
    if blocks.len() != sectors.sectors().len() {
        return Err(Error::InvalidArgument(format!(
            "expected {} spin blocks, got {}",
            sectors.sectors().len(),
            blocks.len()
        )));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for sector in sectors.sectors() {
        let block = blocks
            .get(&sector.twice_j)
            .ok_or(Error::MissingSector { twice_j: sector.twice_j as i64 })?;
        let dim = sector.twice_j as usize + 1;
        if block.nrows() != dim || block.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: block.nrows() });
        }
        let unitarity = (block * block.adjoint() - DMatrix::identity(dim, dim)).norm();
        if unitarity > 1e-8 {
            return Err(Error::NotUnitary { tol: 1e-8 });
        }
        let d = wigner_d_full(sector.twice_j as i64, g)?;
        // Tr[U_j D^j(g)†] = Σ_{rc} (U_j)_{rc} conj(D_{rc}).
        let mut tr = Complex64::new(0.0, 0.0);
        for r in 0..dim {
            for c in 0..dim {
                tr += block[(r, c)] * d[(r, c)].conj();
            }
        }
        acc += Complex64::new(dim as f64, 0.0) * tr;
    }
    Ok(acc)
}

/// The XY-mixer block `A_j(β) = diag(e^{-i4β(j(j+1)-m²)})`, basis `m = j..-j`.
pub fn xy_block(twice_j: u64, beta: f64) -> DMatrix<Complex64> {
    let dim = twice_j as usize + 1;
    DMatrix::from_fn(dim, dim, |r, c| {
        if r != c {
            return Complex64::new(0.0, 0.0);
        }
        let tm = twice_j as i64 - 2 * r as i64;
        // j(j+1) - m² = (2j(2j+2) - (2m)²)/4.
        let eig = (twice_j as i64 * (twice_j as i64 + 2) - tm * tm) as f64 / 4.0;
        Complex64::from_polar(1.0, -4.0 * beta * eig)
    })
}

/// Closed-form XY coefficient function
/// `a_β(g) = Σ_j (2j+1) Σ_m e^{-i4β(j(j+1)-m²)} e^{im(α+χ)} d^j_{mm}(ϑ)`.
pub fn coeff_xy(n: usize, beta: f64, g: EulerAngles) -> Result<Complex64> {
    let sectors = spin_sectors(n)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for sector in sectors.sectors() {
        let tj = sector.twice_j as i64;
        let weight = (tj + 1) as f64;
        for k in 0..=tj {
            let tm = tj - 2 * k;
            let eig = (tj * (tj + 2) - tm * tm) as f64 / 4.0;
            let m = tm as f64 / 2.0;
            let d = wigner_small_d(tj, tm, tm, g.theta)?;
            acc += Complex64::from_polar(weight * d, -4.0 * beta * eig + m * (g.alpha + g.chi));
        }
    }
    Ok(acc)
}

/// One sampled LCU branch: Euler angles with the complex weight `a(g)` in
/// polar pieces.
#[derive(Clone, Debug)]
pub struct Su2Branch {
    pub angles: EulerAngles,
    pub weight: Complex64,
    /// `ψ(g)` with `a(g) = |a(g)| e^{iψ(g)}`. Discarded by the ancilla-free
    /// sampler but required by the exact-QPD verification path.
    pub phase: f64,
    pub abs_weight: f64,
}

/// A Haar-sampled candidate pool with its induced branch distribution and
/// Monte-Carlo cost estimates.
#[derive(Clone, Debug)]
pub struct Su2Pool {
    pub n: usize,
    pub beta: f64,
    pub branches: Vec<Su2Branch>,
    /// Mean `|a|` over the pool itself.
    pub alpha_hat: f64,
    /// `Γ̂ = (mean |a|)²` from an independent Haar batch.
    pub gamma_hat: f64,
    /// Delta-method standard error of `gamma_hat`.
    pub gamma_sigma: f64,
    /// Normalized `|a(g_i)|` over the pool.
    pub sample_probs: Vec<f64>,
}

/// Precomputed per-sample tables for re-estimating `Γ̂(β)` over a fixed Haar
/// batch as `β` varies during optimization.
pub struct XyGammaEstimator {
    eigs: Vec<f64>,
    tables: Vec<Vec<Complex64>>,
}

impl XyGammaEstimator {
    /// Draws `samples` Haar points (stream separate from pool draws) and
    /// tabulates the β-independent factors `(2j+1) d^j_mm(ϑ) e^{im(α+χ)}`.
    pub fn from_seed(n: usize, samples: usize, seed: u64) -> Result<Self> {
        let sectors = spin_sectors(n)?;
        let mut eigs = Vec::new();
        let mut labels = Vec::new();
        for sector in sectors.sectors() {
            let tj = sector.twice_j as i64;
            for k in 0..=tj {
                let tm = tj - 2 * k;
                eigs.push((tj * (tj + 2) - tm * tm) as f64 / 4.0);
                labels.push((tj, tm));
            }
        }
        let tables: Vec<Vec<Complex64>> = (0..samples)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(seed, StreamDomain::GammaEstimate, i as u64);
                let g = haar_sample(&mut rng);
                labels
                    .iter()
                    .map(|&(tj, tm)| {
                        let d = wigner_small_d(tj, tm, tm, g.theta).expect("valid labels");
                        let m = tm as f64 / 2.0;
                        Complex64::from_polar((tj + 1) as f64 * d, m * (g.alpha + g.chi))
                    })
                    .collect()
            })
            .collect();
        Ok(XyGammaEstimator { eigs, tables })
    }

    /// `(Γ̂, σ_Γ̂)` at the given mixing angle.
    pub fn estimate(&self, beta: f64) -> (f64, f64) {
        let phases: Vec<Complex64> = self
            .eigs
            .iter()
            .map(|&e| Complex64::from_polar(1.0, -4.0 * beta * e))
            .collect();
        let abs: Vec<f64> = self
            .tables
            .par_iter()
            .map(|table| {
                table
                    .iter()
                    .zip(&phases)
                    .map(|(t, p)| t * p)
                    .sum::<Complex64>()
                    .norm()
            })
            .collect();
        let count = abs.len() as f64;
        let mean = abs.iter().sum::<f64>() / count;
        let var = abs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / count;
        let sigma_mean = (var / count).sqrt();
        (mean * mean, 2.0 * mean * sigma_mean)
    }
}

/// Builds a Haar pool of `pool_size` samples weighted by `a_β`, estimates
/// `Γ̂` from an independent batch of `gamma_samples`, and draws `circuits`
/// branch indices (with replacement) from the normalized `|a|` distribution.
pub fn build_su2_pool(
    n: usize,
    beta: f64,
    pool_size: usize,
    circuits: usize,
    gamma_samples: usize,
    seed: u64,
) -> Result<(Su2Pool, Vec<usize>)> {
    if pool_size == 0 || circuits == 0 || circuits > pool_size {
        return Err(Error::InvalidArgument(format!(
            "need pool_size >= circuits >= 1, got {pool_size} and {circuits}"
        )));
    }
    spin_sectors(n)?;
    let branches: Vec<Su2Branch> = (0..pool_size)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, StreamDomain::HaarPool, i as u64);
            let angles = haar_sample(&mut rng);
            let weight = coeff_xy(n, beta, angles).expect("n validated");
            Su2Branch { angles, weight, phase: weight.arg(), abs_weight: weight.norm() }
        })
        .collect();
    let total_abs: f64 = branches.iter().map(|b| b.abs_weight).sum();
    let alpha_hat = total_abs / pool_size as f64;
    let sample_probs: Vec<f64> = branches.iter().map(|b| b.abs_weight / total_abs).collect();

    let estimator = XyGammaEstimator::from_seed(n, gamma_samples, seed)?;
    let (gamma_hat, gamma_sigma) = estimator.estimate(beta);

    let pool =
        Su2Pool { n, beta, branches, alpha_hat, gamma_hat, gamma_sigma, sample_probs };
    let selected = pool.sample_branches(circuits, seed);
    Ok((pool, selected))
}

impl Su2Pool {
    /// Draws `count` branch indices with replacement from `sample_probs`.
    pub fn sample_branches(&self, count: usize, seed: u64) -> Vec<usize> {
        let mut cdf = Vec::with_capacity(self.sample_probs.len());
        let mut acc = 0.0;
        for &p in &self.sample_probs {
            acc += p;
            cdf.push(acc);
        }
        let mut rng = stream_rng(seed, StreamDomain::PoolSelection, 0);
        (0..count)
            .map(|_| {
                let u: f64 = rng.gen();
                cdf.partition_point(|&c| c <= u).min(self.sample_probs.len() - 1)
            })
            .collect()
    }
}

/// Dense XY Hamiltonian `J_x² + J_y² = 2nI + 2Σ_{i<j}(X_iX_j + Y_iY_j)`,
/// which is real symmetric in the computational basis.
pub fn xy_hamiltonian_dense(n: usize) -> Result<DMatrix<f64>> {
    if !(1..=8).contains(&n) {
        return Err(Error::QubitCountOutOfRange { n, min: 1, max: 8 });
    }
    let dim = 1usize << n;
    let mut h = DMatrix::zeros(dim, dim);
    for x in 0..dim {
        h[(x, x)] = 2.0 * n as f64;
        for i in 0..n {
            for j in (i + 1)..n {
                if ((x >> i) & 1) != ((x >> j) & 1) {
                    let y = x ^ (1 << i) ^ (1 << j);
                    h[(y, x)] += 4.0;
                }
            }
        }
    }
    Ok(h)
}

/// Exact dense `U_XY(β) = e^{-iβ H_XY}` via symmetric eigendecomposition.
/// The oracle for all XY verification; capped at 8 qubits.
pub fn xy_unitary_dense(n: usize, beta: f64) -> Result<DMatrix<Complex64>> {
    let h = xy_hamiltonian_dense(n)?;
    let eigen = h.symmetric_eigen();
    let dim = eigen.eigenvalues.len();
    let mut u = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        let phase = Complex64::from_polar(1.0, -beta * eigen.eigenvalues[k]);
        let v = eigen.eigenvectors.column(k);
        for r in 0..dim {
            for c in 0..dim {
                u[(r, c)] += phase * v[r] * v[c];
            }
        }
    }
    Ok(u)
}

/// `R(g)^{⊗n}` with entries formed as products of 2x2 elements.
pub fn collective_rotation_dense(n: usize, g: EulerAngles) -> DMatrix<Complex64> {
    let r = su2_rotation(g);
    let dim = 1usize << n;
    DMatrix::from_fn(dim, dim, |row, col| {
        let mut acc = Complex64::new(1.0, 0.0);
        for q in 0..n {
            acc *= r[((row >> q) & 1, (col >> q) & 1)];
        }
        acc
    })
}

/// Monte-Carlo reconstruction `(1/N) Σ a_β(g_i) R(g_i)^{⊗n}` over Haar draws;
/// returns the averaged matrix and its Frobenius distance to the dense XY
/// unitary. Capped at 6 qubits.
pub fn mc_reconstruct_xy(
    n: usize,
    beta: f64,
    samples: usize,
    seed: u64,
) -> Result<(DMatrix<Complex64>, f64)> {
    if n > 6 {
        return Err(Error::QubitCountOutOfRange { n, min: 1, max: 6 });
    }
    if samples == 0 {
        return Err(Error::EmptyInput("samples"));
    }
    let dim = 1usize << n;
    // Fixed-size chunks accumulated in index order keep the result identical
    // across thread counts.
    const CHUNK: usize = 4096;
    let chunks: Vec<DMatrix<Complex64>> = (0..samples.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk_idx| {
            let start = chunk_idx * CHUNK;
            let end = (start + CHUNK).min(samples);
            let mut acc: DMatrix<Complex64> = DMatrix::zeros(dim, dim);
            let mut entries = vec![Complex64::new(0.0, 0.0); dim * dim];
            for i in start..end {
                let mut rng = stream_rng(seed, StreamDomain::HaarPool, i as u64);
                let g = haar_sample(&mut rng);
                let a = coeff_xy(n, beta, g).expect("n validated");
                let r = su2_rotation(g);
                for row in 0..dim {
                    for col in 0..dim {
                        let mut v = Complex64::new(1.0, 0.0);
                        for q in 0..n {
                            v *= r[((row >> q) & 1, (col >> q) & 1)];
                        }
                        entries[row * dim + col] = v;
                    }
                }
                for row in 0..dim {
                    for col in 0..dim {
                        acc[(row, col)] += a * entries[row * dim + col];
                    }
                }
            }
            acc
        })
        .collect();
    let mut mean: DMatrix<Complex64> = DMatrix::zeros(dim, dim);
    for c in chunks {
        mean += c;
    }
    mean /= Complex64::new(samples as f64, 0.0);
    let target = xy_unitary_dense(n, beta)?;
    let err = (&mean - &target).norm();
    Ok((mean, err))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sectors_small_cases() {
        let s2 = spin_sectors(2).unwrap();
        assert_eq!(
            s2.sectors(),
            &[
                SpinSector { twice_j: 2, multiplicity: 1 },
                SpinSector { twice_j: 0, multiplicity: 1 }
            ]
        );
        assert_eq!(s2.dimension_sum(), 4);

        let s3 = spin_sectors(3).unwrap();
        assert_eq!(
            s3.sectors(),
            &[
                SpinSector { twice_j: 3, multiplicity: 1 },
                SpinSector { twice_j: 1, multiplicity: 2 }
            ]
        );
        assert_eq!(s3.dimension_sum(), 8);

        let s4 = spin_sectors(4).unwrap();
        assert_eq!(
            s4.sectors(),
            &[
                SpinSector { twice_j: 4, multiplicity: 1 },
                SpinSector { twice_j: 2, multiplicity: 3 },
                SpinSector { twice_j: 0, multiplicity: 2 }
            ]
        );
        assert_eq!(s4.dimension_sum(), 16);
    }

    #[test]
    fn dimension_identity_up_to_64_qubits() {
        for n in 1..=64 {
            let s = spin_sectors(n).unwrap();
            assert_eq!(s.dimension_sum(), 1u128 << n, "n = {n}");
            let j_min = s.sectors().last().unwrap().twice_j;
            assert_eq!(j_min, (n % 2) as u64);
        }
        assert!(spin_sectors(0).is_err());
        assert!(spin_sectors(65).is_err());
    }

    #[test]
    fn wigner_d_spin_half_and_identity() {
        for theta in [0.0, 0.3, 1.7, PI] {
            let d = wigner_small_d(1, 1, 1, theta).unwrap();
            assert!((d - (theta / 2.0).cos()).abs() < 1e-14);
        }
        for tj in [1i64, 2, 5, 8] {
            for k in 0..=tj {
                let tm = tj - 2 * k;
                assert!((wigner_small_d(tj, tm, tm, 0.0).unwrap() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn wigner_d_spin_one_center_element() {
        for theta in [0.1, 0.9, 2.3] {
            let d = wigner_small_d(2, 0, 0, theta).unwrap();
            assert!((d - theta.cos()).abs() < 1e-13);
        }
        // Cross-check the full spin-1 d-matrix against exp(-iθ J_y) computed
        // by scaled Taylor series on the 3x3 generator.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let jy = DMatrix::from_row_slice(
            3,
            3,
            &[
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, -s),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, s),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, -s),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, s),
                Complex64::new(0.0, 0.0),
            ],
        );
        let theta = 0.77;
        let mut expm = DMatrix::identity(3, 3);
        let x = jy.map(|v| v * Complex64::new(0.0, -theta / 1024.0));
        let mut term: DMatrix<Complex64> = DMatrix::identity(3, 3);
        for k in 1..=12 {
            term = (&term * &x) / Complex64::new(k as f64, 0.0);
            expm += &term;
        }
        for _ in 0..10 {
            expm = &expm * &expm;
        }
        let d = wigner_small_d_matrix(2, theta).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                assert!((expm[(r, c)] - Complex64::new(d[(r, c)], 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn wigner_d_matrices_are_orthogonal() {
        let mut rng = stream_rng(31, StreamDomain::TestOracle, 30);
        for tj in 1..=16i64 {
            let theta: f64 = rng.gen_range(0.0..PI);
            let d = wigner_small_d_matrix(tj, theta).unwrap();
            let dim = tj as usize + 1;
            let err = (&d * d.transpose() - DMatrix::identity(dim, dim)).norm();
            assert!(err < 1e-9, "2j = {tj}: orthogonality error {err}");
        }
    }

    #[test]
    fn invalid_quantum_numbers_rejected() {
        assert!(wigner_small_d(1, 3, 1, 0.5).is_err());
        assert!(wigner_small_d(2, 1, 0, 0.5).is_err());
        assert!(wigner_small_d(-2, 0, 0, 0.5).is_err());
    }

    #[test]
    fn spin_half_d_matches_rotation_matrix() {
        let mut rng = stream_rng(32, StreamDomain::TestOracle, 31);
        for _ in 0..20 {
            let g = haar_sample(&mut rng);
            let d = wigner_d_full(1, g).unwrap();
            let r = su2_rotation(g);
            for row in 0..2 {
                for col in 0..2 {
                    assert!((d[(row, col)] - r[(row, col)]).norm() < 1e-12);
                }
            }
        }
    }

    fn identity_blocks(n: usize) -> BTreeMap<u64, DMatrix<Complex64>> {
        spin_sectors(n)
            .unwrap()
            .sectors()
            .iter()
            .map(|s| {
                let dim = s.twice_j as usize + 1;
                (s.twice_j, DMatrix::identity(dim, dim))
            })
            .collect()
    }

    #[test]
    fn coeff_general_identity_at_origin_is_cubic_bound() {
        for n in [1usize, 2, 3, 4, 6, 12] {
            let g = EulerAngles { alpha: 0.0, theta: 0.0, chi: 0.0 };
            let a = coeff_general(n, &identity_blocks(n), g).unwrap();
            let expected = spin_sectors(n).unwrap().gamma_bound();
            assert!((a.re - expected).abs() < 1e-9, "n = {n}");
            assert!(a.im.abs() < 1e-12);
        }
    }

    #[test]
    fn coeff_general_single_qubit_matches_direct_trace() {
        let mut rng = stream_rng(33, StreamDomain::TestOracle, 32);
        for _ in 0..20 {
            let g0 = haar_sample(&mut rng);
            let g = haar_sample(&mut rng);
            let u = su2_rotation(g0);
            let blocks = BTreeMap::from([(
                1u64,
                DMatrix::from_fn(2, 2, |r, c| u[(r, c)]),
            )]);
            let a = coeff_general(1, &blocks, g).unwrap();
            let direct = (u * su2_rotation(g).adjoint()).trace() * Complex64::new(2.0, 0.0);
            assert!((a - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn coeff_general_validates_blocks() {
        let g = EulerAngles { alpha: 0.1, theta: 0.2, chi: 0.3 };
        let mut blocks = identity_blocks(2);
        blocks.remove(&0);
        assert!(coeff_general(2, &blocks, g).is_err());
        let mut blocks = identity_blocks(2);
        blocks.insert(2, DMatrix::from_element(3, 3, Complex64::new(0.5, 0.0)));
        assert!(matches!(coeff_general(2, &blocks, g), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn mc_fourier_inversion_recovers_blocks() {
        // Averaging a_U(g) D^j(g) over Haar draws reproduces U_j.
        let n = 4;
        let beta = 0.23;
        let blocks: BTreeMap<u64, DMatrix<Complex64>> = spin_sectors(n)
            .unwrap()
            .sectors()
            .iter()
            .map(|s| (s.twice_j, xy_block(s.twice_j, beta)))
            .collect();
        let samples = 400_000;
        let mut sums: BTreeMap<u64, DMatrix<Complex64>> = blocks
            .keys()
            .map(|&tj| (tj, DMatrix::zeros(tj as usize + 1, tj as usize + 1)))
            .collect();
        for i in 0..samples {
            let mut rng = stream_rng(77, StreamDomain::TestOracle, 33 + i as u64);
            let g = haar_sample(&mut rng);
            let a = coeff_general(n, &blocks, g).unwrap();
            for (&tj, sum) in sums.iter_mut() {
                *sum += wigner_d_full(tj as i64, g).unwrap().map(|v| v * a);
            }
        }
        for (&tj, sum) in sums.iter() {
            let recovered = sum.map(|v| v / samples as f64);
            let err = (&recovered - &blocks[&tj]).norm();
            assert!(err < 0.15, "2j = {tj}: recovery error {err}");
        }
    }

    #[test]
    fn coeff_xy_closed_form_examples() {
        let origin = EulerAngles { alpha: 0.0, theta: 0.0, chi: 0.0 };
        let a = coeff_xy(12, 0.0, origin).unwrap();
        assert!((a.re - 455.0).abs() < 1e-9);
        assert!(a.im.abs() < 1e-12);

        let mut rng = stream_rng(35, StreamDomain::TestOracle, 34);
        let g = haar_sample(&mut rng);
        let beta = 0.3;
        let blocks = BTreeMap::from([(2u64, xy_block(2, beta)), (0u64, xy_block(0, beta))]);
        let expected = coeff_general(2, &blocks, g).unwrap();
        let got = coeff_xy(2, beta, g).unwrap();
        assert!((got - expected).norm() < 1e-9);

        // β = 0 reduces to the identity decomposition.
        let a0 = coeff_xy(3, 0.0, g).unwrap();
        let id = coeff_general(3, &identity_blocks(3), g).unwrap();
        assert!((a0 - id).norm() < 1e-9);
    }

    #[test]
    fn coeff_xy_matches_coeff_general_on_random_inputs() {
        let mut rng = stream_rng(36, StreamDomain::TestOracle, 35);
        for trial in 0..100 {
            let n = rng.gen_range(1..=6);
            let beta: f64 = rng.gen_range(-1.0..1.0);
            let g = haar_sample(&mut rng);
            let blocks: BTreeMap<u64, DMatrix<Complex64>> = spin_sectors(n)
                .unwrap()
                .sectors()
                .iter()
                .map(|s| (s.twice_j, xy_block(s.twice_j, beta)))
                .collect();
            let expected = coeff_general(n, &blocks, g).unwrap();
            let got = coeff_xy(n, beta, g).unwrap();
            assert!((got - expected).norm() < 1e-9, "trial {trial}");
        }
    }

    #[test]
    fn haar_sampler_statistics() {
        let draws = 1_000_000usize;
        let mut cos_sum = 0.0;
        let mut alpha_below_pi = 0usize;
        for i in 0..draws {
            let mut rng = stream_rng(42, StreamDomain::TestOracle, 36 + i as u64);
            let g = haar_sample(&mut rng);
            cos_sum += g.theta.cos();
            if g.alpha < PI {
                alpha_below_pi += 1;
            }
            debug_assert!(g.alpha < std::f64::consts::TAU);
            debug_assert!((0.0..=PI).contains(&g.theta));
            debug_assert!(g.chi < 2.0 * std::f64::consts::TAU);
        }
        let mean_cos = cos_sum / draws as f64;
        assert!(mean_cos.abs() < 0.005, "mean cos θ = {mean_cos}");
        let frac = alpha_below_pi as f64 / draws as f64;
        let sigma = 0.5 / (draws as f64).sqrt();
        assert!((frac - 0.5).abs() < 5.0 * sigma);

        let mut r1 = stream_rng(9, StreamDomain::HaarPool, 5);
        let mut r2 = stream_rng(9, StreamDomain::HaarPool, 5);
        assert_eq!(haar_sample(&mut r1), haar_sample(&mut r2));
    }

    #[test]
    fn pool_gamma_bound_and_selection_frequencies() {
        let n = 4;
        let bound = spin_sectors(n).unwrap().gamma_bound();
        let (pool, _) = build_su2_pool(n, 0.0, 50, 10, 20_000, 7).unwrap();
        assert!(pool.gamma_hat <= bound + 3.0 * pool.gamma_sigma);
        assert!((pool.sample_probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let selected = pool.sample_branches(100_000, 7);
        let mut counts = vec![0usize; pool.branches.len()];
        for &idx in &selected {
            counts[idx] += 1;
        }
        for (idx, &count) in counts.iter().enumerate() {
            let p = pool.sample_probs[idx];
            let freq = count as f64 / selected.len() as f64;
            let sigma = (p * (1.0 - p) / selected.len() as f64).sqrt().max(1e-9);
            assert!((freq - p).abs() < 5.0 * sigma, "branch {idx}");
        }
    }

    #[test]
    fn pool_is_deterministic() {
        let (a, sa) = build_su2_pool(3, 0.4, 500, 50, 500, 11).unwrap();
        let (b, sb) = build_su2_pool(3, 0.4, 500, 50, 500, 11).unwrap();
        assert_eq!(sa, sb);
        assert_eq!(a.gamma_hat, b.gamma_hat);
        assert_eq!(a.branches.len(), b.branches.len());
        for (x, y) in a.branches.iter().zip(&b.branches) {
            assert_eq!(x.angles, y.angles);
            assert_eq!(x.weight, y.weight);
        }
    }

    #[test]
    fn xy_dense_spectrum_two_qubits() {
        let h = xy_hamiltonian_dense(2).unwrap();
        let mut eigs: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().copied().collect();
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expected = [0.0, 4.0, 4.0, 8.0];
        for (e, x) in eigs.iter().zip(expected) {
            assert!((e - x).abs() < 1e-10);
        }
    }

    #[test]
    fn xy_dense_spectrum_matches_sector_formula() {
        for n in [3usize, 4] {
            let h = xy_hamiltonian_dense(n).unwrap();
            let mut eigs: Vec<f64> =
                h.symmetric_eigen().eigenvalues.iter().copied().collect();
            eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut expected = Vec::new();
            for sector in spin_sectors(n).unwrap().sectors() {
                let tj = sector.twice_j as i64;
                for k in 0..=tj {
                    let tm = tj - 2 * k;
                    let eig = (tj * (tj + 2) - tm * tm) as f64;
                    for _ in 0..sector.multiplicity {
                        expected.push(eig);
                    }
                }
            }
            expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert_eq!(eigs.len(), expected.len());
            for (e, x) in eigs.iter().zip(expected) {
                assert!((e - x).abs() < 1e-9, "n = {n}");
            }
        }
    }

    #[test]
    fn xy_unitary_commutes_with_transpositions() {
        let n = 4;
        let u = xy_unitary_dense(n, 0.37).unwrap();
        let mut rng = stream_rng(38, StreamDomain::TestOracle, 37);
        for _ in 0..5 {
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n);
            while j == i {
                j = rng.gen_range(0..n);
            }
            let dim = 1usize << n;
            let perm = DMatrix::from_fn(dim, dim, |r, c| {
                let bi = (c >> i) & 1;
                let bj = (c >> j) & 1;
                let swapped = (c & !((1 << i) | (1 << j))) | (bj << i) | (bi << j);
                if r == swapped { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }
            });
            let comm = (&u * &perm - &perm * &u).norm();
            assert!(comm < 1e-10, "commutator norm {comm}");
        }
    }

    #[test]
    fn mc_reconstruction_converges_at_beta_zero() {
        let (_, err) = mc_reconstruct_xy(2, 0.0, 100_000, 5).unwrap();
        assert!(err <= 0.1, "error {err}");
    }
}
