//! Quasi-probability realization of LCU channels.
//!
//! For `U = Σ_j c_j V_j` the induced channel expands as
//!
//! ```text
//! U ρ U† = Σ_j |c_j|² V_j ρ V_j† + Σ_{k<j} 2|c_j||c_k| (Φ⁺_jk - Φ⁻_jk)(ρ),
//! ```
//!
//! where each signed cross term is realized by the Kraus pair
//! `K± = (e^{iφ_jk/2} V_j ± e^{-iφ_jk/2} V_k)/2` or, physically, by one
//! ancilla qubit controlling `V_j`/`V_k` with the outcome sign `(-1)^a`. The
//! quasi-probability cost is `Γ = ‖c‖₁²`.
//!
//! Dropping the sign information yields the ancilla-free sampler: draw branch
//! `j` with probability `q_j = |c_j|/‖c‖₁`, run `prepare + V_j`, and measure.
//! Its outcome distribution dominates the coherent one,
//! `p̃_x ≥ p_x / Γ` for every bitstring `x`.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::estimators::{SampleRecord, SampleSet};
use crate::lcu::diagonal::DiagonalLcu;
use crate::lcu::su2::Su2Pool;
use crate::qaoa::collective_rotation_gates;
use crate::rng::{stream_rng, StreamDomain};
use crate::sim::{circuit_unitary, run_circuit, sample_counts, Circuit, DensityMatrix, GateOp, Statevector};
use crate::{Error, Result};

/// An LCU channel: branch circuit fragments with complex weights.
#[derive(Clone, Debug)]
pub struct LcuChannel {
    n: usize,
    branches: Vec<Circuit>,
    coeffs: Vec<Complex64>,
    gamma_cost: f64,
    branch_probs: Vec<(usize, f64)>,
}

const BRANCH_PRUNE_THRESHOLD: f64 = 1e-14;

impl LcuChannel {
    /// Builds a channel from branch fragments and coefficients. Requires
    /// `Γ = ‖c‖₁² ≥ 1 - 1e-9`, which holds for any decomposition of a
    /// unitary target (`‖c‖₂ = 1` forces `‖c‖₁ ≥ 1`).
    pub fn new(n: usize, branches: Vec<Circuit>, coeffs: Vec<Complex64>) -> Result<Self> {
        if branches.is_empty() || branches.len() != coeffs.len() {
            return Err(Error::DimensionMismatch { expected: branches.len(), got: coeffs.len() });
        }
        if let Some(c) = branches.iter().find(|c| c.n() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: c.n() });
        }
        let one_norm: f64 = coeffs.iter().map(|c| c.norm()).sum();
        let gamma_cost = one_norm * one_norm;
        if gamma_cost < 1.0 - 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "gamma cost {gamma_cost} below 1; not a unitary decomposition"
            )));
        }
        let kept: Vec<(usize, f64)> = coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() >= BRANCH_PRUNE_THRESHOLD)
            .map(|(j, c)| (j, c.norm()))
            .collect();
        let kept_norm: f64 = kept.iter().map(|(_, a)| a).sum();
        let branch_probs = kept.into_iter().map(|(j, a)| (j, a / kept_norm)).collect();
        Ok(LcuChannel { n, branches, coeffs, gamma_cost, branch_probs })
    }

    /// Channel of a diagonal-LCU decomposition composed with `g`. Branches
    /// are exact phase unitaries `Σ_x e^{iθ_j g(x)}|x⟩⟨x|`.
    pub fn from_diagonal_lcu(
        lcu: &DiagonalLcu,
        n: usize,
        g: Arc<dyn Fn(u64) -> usize + Send + Sync>,
    ) -> Result<Self> {
        let mut branches = Vec::with_capacity(lcu.m() + 1);
        for j in 0..=lcu.m() {
            let theta = lcu.thetas()[j];
            let g = Arc::clone(&g);
            let mut circuit = Circuit::new(n);
            circuit.push(GateOp::diagonal_phase(
                Arc::new(move |x: u64| theta * g(x) as f64),
                -1.0,
            ))?;
            branches.push(circuit);
        }
        Self::new(n, branches, lcu.coeffs().to_vec())
    }

    /// Channel of the selected branches of an SU(2) pool: the finite
    /// surrogate `Û = Σ_i ĉ_i R(g_i)^{⊗n}` with `ĉ_i = α̂ e^{iψ_i} / N`.
    pub fn from_su2_selection(pool: &Su2Pool, selected: &[usize]) -> Result<Self> {
        if selected.is_empty() {
            return Err(Error::EmptyInput("selected branches"));
        }
        let scale = pool.alpha_hat / selected.len() as f64;
        let mut branches = Vec::with_capacity(selected.len());
        let mut coeffs = Vec::with_capacity(selected.len());
        for &idx in selected {
            let branch = &pool.branches[idx];
            let mut circuit = Circuit::new(pool.n);
            circuit.extend(collective_rotation_gates(pool.n, branch.angles))?;
            branches.push(circuit);
            coeffs.push(Complex64::from_polar(scale, branch.phase));
        }
        Self::new(pool.n, branches, coeffs)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn branches(&self) -> &[Circuit] {
        &self.branches
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `Γ = ‖c‖₁²`.
    pub fn gamma_cost(&self) -> f64 {
        self.gamma_cost
    }

    /// Pruned sampling distribution `q_j ∝ |c_j|`.
    pub fn branch_probs(&self) -> &[(usize, f64)] {
        &self.branch_probs
    }

    fn branch_state(&self, prepare: &Circuit, j: usize) -> Result<Statevector> {
        let prepared = run_circuit(prepare, &Statevector::zero(self.n)?)?;
        run_circuit(&self.branches[j], &prepared)
    }

    /// Dense `V_j`; requires `n <= 6`.
    fn branch_unitary(&self, j: usize) -> Result<DMatrix<Complex64>> {
        if self.n > 6 {
            return Err(Error::QubitCountOutOfRange { n: self.n, min: 1, max: 6 });
        }
        circuit_unitary(&self.branches[j])
    }

    /// Dense `U = Σ_j c_j V_j`; requires `n <= 6`.
    pub fn coherent_unitary(&self) -> Result<DMatrix<Complex64>> {
        let dim = 1usize << self.n;
        let mut u = DMatrix::zeros(dim, dim);
        for (j, c) in self.coeffs.iter().enumerate() {
            u += self.branch_unitary(j)?.map(|v| v * c);
        }
        Ok(u)
    }
}

/// The two Kraus operators realizing one signed cross term.
#[derive(Clone, Debug)]
pub struct KrausPair {
    pub j: usize,
    pub k: usize,
    /// `φ_jk = φ_j - φ_k`.
    pub phi_jk: f64,
    k_plus: DMatrix<Complex64>,
    k_minus: DMatrix<Complex64>,
}

impl KrausPair {
    /// Kraus pair for branches `(j, k)` of a channel.
    pub fn from_channel(channel: &LcuChannel, j: usize, k: usize) -> Result<Self> {
        let phi_jk = channel.coeffs[j].arg() - channel.coeffs[k].arg();
        Self::from_unitaries(j, k, phi_jk, &channel.branch_unitary(j)?, &channel.branch_unitary(k)?)
    }

    /// Kraus pair from explicit dense unitaries.
    pub fn from_unitaries(
        j: usize,
        k: usize,
        phi_jk: f64,
        v_j: &DMatrix<Complex64>,
        v_k: &DMatrix<Complex64>,
    ) -> Result<Self> {
        if v_j.nrows() != v_k.nrows() || v_j.ncols() != v_k.ncols() {
            return Err(Error::DimensionMismatch { expected: v_j.nrows(), got: v_k.nrows() });
        }
        let half = Complex64::new(0.5, 0.0);
        let plus_phase = Complex64::from_polar(1.0, phi_jk / 2.0);
        let minus_phase = Complex64::from_polar(1.0, -phi_jk / 2.0);
        let k_plus = (v_j.map(|v| v * plus_phase) + v_k.map(|v| v * minus_phase)).map(|v| v * half);
        let k_minus =
            (v_j.map(|v| v * plus_phase) - v_k.map(|v| v * minus_phase)).map(|v| v * half);
        Ok(KrausPair { j, k, phi_jk, k_plus, k_minus })
    }

    /// `‖K₊†K₊ + K₋†K₋ - I‖`; zero because the pair averages two unitaries.
    pub fn completeness_error(&self) -> f64 {
        let dim = self.k_plus.nrows();
        let sum = self.k_plus.adjoint() * &self.k_plus + self.k_minus.adjoint() * &self.k_minus;
        (sum - DMatrix::identity(dim, dim)).norm()
    }
}

/// `Φ⁺(ρ) - Φ⁻(ρ)` for one Kraus pair: equals the cross term
/// `W_jk(ρ) = (e^{iφ} V_j ρ V_k† + h.c.)/2`. The result is Hermitian but
/// signed (not a physical state on its own).
pub fn cross_term_channel(rho: &DensityMatrix, pair: &KrausPair) -> Result<DensityMatrix> {
    if rho.mat().nrows() != pair.k_plus.nrows() {
        return Err(Error::DimensionMismatch {
            expected: pair.k_plus.nrows(),
            got: rho.mat().nrows(),
        });
    }
    let plus = &pair.k_plus * rho.mat() * pair.k_plus.adjoint();
    let minus = &pair.k_minus * rho.mat() * pair.k_minus.adjoint();
    DensityMatrix::new(rho.n(), plus - minus)
}

/// Applies the full quasi-probability expansion of the channel to `ρ`;
/// equals `U ρ U†` for `U = Σ_j c_j V_j`. Dense; `n <= 6`.
pub fn exact_channel_apply(rho: &DensityMatrix, channel: &LcuChannel) -> Result<DensityMatrix> {
    if rho.n() != channel.n {
        return Err(Error::DimensionMismatch { expected: 1 << channel.n, got: rho.mat().nrows() });
    }
    let dim = rho.mat().nrows();
    let unitaries: Vec<DMatrix<Complex64>> = (0..channel.branches.len())
        .map(|j| channel.branch_unitary(j))
        .collect::<Result<_>>()?;
    let mut out: DMatrix<Complex64> = DMatrix::zeros(dim, dim);
    for (j, v) in unitaries.iter().enumerate() {
        let w = channel.coeffs[j].norm_sqr();
        if w == 0.0 {
            continue;
        }
        out += (v * rho.mat() * v.adjoint()).map(|x| x * w);
    }
    for j in 0..unitaries.len() {
        for k in 0..j {
            let weight = 2.0 * channel.coeffs[j].norm() * channel.coeffs[k].norm();
            if weight == 0.0 {
                continue;
            }
            let pair = KrausPair::from_unitaries(
                j,
                k,
                channel.coeffs[j].arg() - channel.coeffs[k].arg(),
                &unitaries[j],
                &unitaries[k],
            )?;
            let cross = cross_term_channel(rho, &pair)?;
            out += cross.mat().map(|x| x * weight);
        }
    }
    DensityMatrix::new(rho.n(), out)
}

/// Simulates the one-ancilla circuit for a cross term on a pure state: H and
/// a phase `φ_jk` on the ancilla, `V_j` controlled on 1, `V_k` on 0, then H
/// and measurement. Returns `ρ_{a=0} - ρ_{a=1}` over the system register,
/// which must equal the Kraus-pair cross term.
pub fn ancilla_cross_term(
    psi: &Statevector,
    channel: &LcuChannel,
    j: usize,
    k: usize,
) -> Result<DensityMatrix> {
    let n = channel.n;
    if psi.n() != n {
        return Err(Error::DimensionMismatch { expected: 1 << n, got: psi.dim() });
    }
    let ancilla = n;
    let dim = 1usize << n;
    let mut amps = vec![Complex64::new(0.0, 0.0); dim << 1];
    amps[..dim].copy_from_slice(psi.amps());
    let mut state = Statevector::from_amplitudes(n + 1, amps)?;

    // Diagonal-phase fragments evaluate their function on the whole register;
    // restrict them to the system bits so the ancilla does not leak into g(x).
    let system_mask = (dim - 1) as u64;
    let masked = |gate: &GateOp| -> GateOp {
        match gate {
            GateOp::DiagonalPhase { f, gamma } => {
                let f = Arc::clone(f);
                GateOp::DiagonalPhase {
                    f: Arc::new(move |x: u64| f(x & system_mask)),
                    gamma: gamma.clone(),
                }
            }
            other => other.clone(),
        }
    };
    let phi_jk = channel.coeffs[j].arg() - channel.coeffs[k].arg();
    state.apply_gate(&GateOp::h(ancilla))?;
    state.apply_gate(&GateOp::phase(ancilla, phi_jk))?;
    for gate in channel.branches[j].ops() {
        state.apply_gate_controlled(&masked(gate), ancilla, true)?;
    }
    for gate in channel.branches[k].ops() {
        state.apply_gate_controlled(&masked(gate), ancilla, false)?;
    }
    state.apply_gate(&GateOp::h(ancilla))?;

    let v0 = nalgebra::DVector::from_column_slice(&state.amps()[..dim]);
    let v1 = nalgebra::DVector::from_column_slice(&state.amps()[dim..]);
    DensityMatrix::new(n, &v0 * v0.adjoint() - &v1 * v1.adjoint())
}

/// Exact sampling distribution of the ancilla-free procedure:
/// `p̃_x = Σ_j q_j |⟨x| V_j |ψ⟩|²` with `|ψ⟩ = prepare |0…0⟩`.
pub fn mixture_distribution(channel: &LcuChannel, prepare: &Circuit) -> Result<Vec<f64>> {
    let mut mix = vec![0.0; 1 << channel.n];
    for &(j, q) in &channel.branch_probs {
        let state = channel.branch_state(prepare, j)?;
        for (x, amp) in state.amps().iter().enumerate() {
            mix[x] += q * amp.norm_sqr();
        }
    }
    Ok(mix)
}

/// Exact coherent distribution `p_x = |⟨x| Σ_j c_j V_j |ψ⟩|²` formed by
/// superposing branch statevectors (works at statevector sizes, no dense
/// matrices required).
pub fn coherent_distribution(channel: &LcuChannel, prepare: &Circuit) -> Result<Vec<f64>> {
    let mut sum = Statevector::from_amplitudes(
        channel.n,
        vec![Complex64::new(0.0, 0.0); 1 << channel.n],
    )?;
    for (j, c) in channel.coeffs.iter().enumerate() {
        if c.norm() == 0.0 {
            continue;
        }
        let state = channel.branch_state(prepare, j)?;
        sum.accumulate(*c, &state);
    }
    Ok(sum.measurement_distribution())
}

/// How sampling shots are assigned to branches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShotAllocation {
    /// Independent draw `j ~ q_j` per shot (the randomized procedure).
    PerShot,
    /// Deterministic `shots * q_j`, rounded by largest remainder; a
    /// variance-reduction option.
    LargestRemainder,
}

fn allocate_shots(channel: &LcuChannel, shots: u64, seed: u64, allocation: ShotAllocation) -> Vec<u64> {
    let mut branch_shots = vec![0u64; channel.branches.len()];
    match allocation {
        ShotAllocation::PerShot => {
            let mut rng = stream_rng(seed, StreamDomain::BranchSelection, 0);
            for _ in 0..shots {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut chosen = channel.branch_probs.last().expect("nonempty").0;
                for &(j, q) in &channel.branch_probs {
                    acc += q;
                    if u < acc {
                        chosen = j;
                        break;
                    }
                }
                branch_shots[chosen] += 1;
            }
        }
        ShotAllocation::LargestRemainder => {
            let mut remainders: Vec<(f64, usize)> = Vec::new();
            let mut assigned = 0u64;
            for &(j, q) in &channel.branch_probs {
                let exact = q * shots as f64;
                let floor = exact.floor() as u64;
                branch_shots[j] = floor;
                assigned += floor;
                remainders.push((exact - floor as f64, j));
            }
            // Largest remainders first; ties broken by branch index.
            remainders.sort_by(|a, b| {
                b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1))
            });
            for &(_, j) in remainders.iter().take((shots - assigned) as usize) {
                branch_shots[j] += 1;
            }
        }
    }
    branch_shots
}

/// Ancilla-free randomized sampler: assign shots to branches (per-shot
/// resampling by default), run `prepare + V_j`, and measure. Records branch
/// provenance per outcome. Deterministic given the seed.
pub fn ancilla_free_sample_with(
    channel: &LcuChannel,
    prepare: &Circuit,
    shots: u64,
    seed: u64,
    allocation: ShotAllocation,
) -> Result<SampleSet> {
    let branch_shots = allocate_shots(channel, shots, seed, allocation);
    let mut samples = SampleSet::new(channel.n);
    for (j, &count) in branch_shots.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let state = channel.branch_state(prepare, j)?;
        let probs = state.measurement_distribution();
        for (bits, c) in sample_counts(&probs, count, seed ^ (j as u64 + 1)) {
            samples.push(SampleRecord { bits, branch: Some(j), weight: c as f64 });
        }
    }
    Ok(samples)
}

/// [`ancilla_free_sample_with`] using per-shot branch resampling.
pub fn ancilla_free_sample(
    channel: &LcuChannel,
    prepare: &Circuit,
    shots: u64,
    seed: u64,
) -> Result<SampleSet> {
    ancilla_free_sample_with(channel, prepare, shots, seed, ShotAllocation::PerShot)
}

/// Minimum slack `min_x (Γ p̃_x - p_x)` of the probability domination bound;
/// nonnegative up to numerical error.
pub fn domination_check(channel: &LcuChannel, prepare: &Circuit) -> Result<f64> {
    let mixture = mixture_distribution(channel, prepare)?;
    let coherent = coherent_distribution(channel, prepare)?;
    let gamma = channel.gamma_cost;
    Ok(mixture
        .iter()
        .zip(&coherent)
        .map(|(&m, &p)| gamma * m - p)
        .fold(f64::INFINITY, f64::min))
}
