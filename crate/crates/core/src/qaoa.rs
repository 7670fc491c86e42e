//! Circuit builders for the experiment variants: warm-start state and mixer,
//! coherent penalty QAOA, penalty-LCU basis circuits, Trotterized XY-QAOA,
//! XY-LCU basis circuits, and the ZYZ Euler-angle extraction used to seed
//! single-branch XY circuits.
//!
//! All builders are pure functions of their inputs. Depth is fixed to one
//! layer, matching the experiments; deeper circuits can be formed by
//! concatenation.

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::lcu::su2::EulerAngles;
use crate::problems::{ising_from_qubo, DksInstance, IsingModel, QuboModel};
use crate::sim::{Circuit, GateOp, Statevector};
use crate::{Error, Result};

/// Warm-start rotation angle `θ_init = 2 asin(√(k/n))`.
pub fn theta_init(n: usize, k: usize) -> f64 {
    2.0 * ((k as f64 / n as f64).sqrt()).asin()
}

/// Probability that the warm-start product state has Hamming weight exactly
/// `k`: the binomial pmf `C(n,k) (k/n)^k (1-k/n)^(n-k)`. Evaluated in log
/// space so it works at any size.
pub fn warm_start_feasibility(n: usize, k: usize) -> f64 {
    if k == 0 || k == n {
        return 1.0;
    }
    let (n_f, k_f) = (n as f64, k as f64);
    let ln_fact = |m: usize| -> f64 { (1..=m).map(|i| (i as f64).ln()).sum() };
    let ln_choose = ln_fact(n) - ln_fact(k) - ln_fact(n - k);
    (ln_choose + k_f * (k_f / n_f).ln() + (n_f - k_f) * (1.0 - k_f / n_f).ln()).exp()
}

/// The biased product state `⊗ (√(1-k/n)|0⟩ + √(k/n)|1⟩)`, preparable by one
/// `R_Y(θ_init)` per qubit. `k ∈ {0, n}` is degenerate (a basis state) and is
/// allowed but flagged.
pub fn warm_start_state(n: usize, k: usize) -> Result<Statevector> {
    if k > n {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds n = {n}")));
    }
    if k == 0 || k == n {
        log::warn!("warm start with k = {k} on {n} qubits is a computational basis state");
    }
    let a1 = (k as f64 / n as f64).sqrt();
    let a0 = (1.0 - k as f64 / n as f64).sqrt();
    Statevector::uniform_product(n, Complex64::new(a0, 0.0), Complex64::new(a1, 0.0))
}

/// Gates preparing the warm-start state from `|0…0⟩`.
pub fn warm_start_gates(n: usize, k: usize) -> Vec<GateOp> {
    let angle = theta_init(n, k);
    (0..n).map(|q| GateOp::ry(q, angle)).collect()
}

/// Phase-separation layer `e^{-iγ H}` for an Ising Hamiltonian: `R_Z(2γh_i)`
/// and `R_ZZ(2γJ_ij)` terms (all commute, so the layer is exact). The
/// constant offset becomes a global phase and is dropped.
pub fn cost_layer(ising: &IsingModel, gamma: f64) -> Vec<GateOp> {
    let mut gates = Vec::new();
    for (i, &h) in ising.h.iter().enumerate() {
        if h != 0.0 {
            gates.push(GateOp::rz(i, 2.0 * gamma * h));
        }
    }
    for (&(i, j), &jij) in &ising.j {
        if jij != 0.0 {
            gates.push(GateOp::rzz(i, j, 2.0 * gamma * jij));
        }
    }
    gates
}

/// Warm-start single-qubit mixer: per qubit `R_Y(-θ_init), R_Z(β),
/// R_Y(θ_init)` in circuit order, i.e. a Z-rotation conjugated into the frame
/// whose pole is the warm-start state. Identity at `β = 0`.
pub fn warm_start_mixer(n: usize, beta: f64, theta_init: f64) -> Vec<GateOp> {
    let mut gates = Vec::with_capacity(3 * n);
    for q in 0..n {
        gates.push(GateOp::ry(q, -theta_init));
        gates.push(GateOp::rz(q, beta));
        gates.push(GateOp::ry(q, theta_init));
    }
    gates
}

/// A uniform `R_Z(θ)` layer (the diagonal-LCU basis unitary up to the global
/// phase `e^{-iθn/2}`).
pub fn rz_layer(n: usize, theta: f64) -> Vec<GateOp> {
    (0..n).map(|q| GateOp::rz(q, theta)).collect()
}

/// Phase factor relating the `R_Z(θ)` layer to the exact phase unitary
/// `Σ_x e^{iθ wt(x)}|x⟩⟨x|`: the layer equals the unitary times
/// `e^{-iθn/2}`. Multiply branch states by this factor's inverse when forming
/// coherent superpositions of branch circuits.
pub fn rz_layer_global_phase(n: usize, theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, -theta * n as f64 / 2.0)
}

/// The collective rotation `R(α,ϑ,χ)^{⊗n}` as gates: per qubit `R_Z(χ),
/// R_Y(ϑ), R_Z(α)` in circuit order, so the final `R_Z(α)` sits immediately
/// before measurement.
pub fn collective_rotation_gates(n: usize, g: EulerAngles) -> Vec<GateOp> {
    let mut gates = Vec::with_capacity(3 * n);
    for q in 0..n {
        gates.push(GateOp::rz(q, g.chi));
        gates.push(GateOp::ry(q, g.theta));
        gates.push(GateOp::rz(q, g.alpha));
    }
    gates
}

/// Second-order Trotterization of `e^{-iβ H_XY}` with
/// `H_XY = 2nI + 2Σ_{i<j}(X_iX_j + Y_iY_j)`: per step, a forward sweep over
/// lexicographically ordered pairs at half angle followed by the reverse
/// sweep. The `2nI` term is a global phase and is dropped.
pub fn trotter_xy_gates(n: usize, beta: f64, steps: usize) -> Vec<GateOp> {
    let pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let half = beta / steps as f64;
    let mut gates = Vec::with_capacity(2 * pairs.len() * steps);
    for _ in 0..steps {
        for &(i, j) in &pairs {
            gates.push(GateOp::xx_plus_yy(i, j, half));
        }
        for &(i, j) in pairs.iter().rev() {
            gates.push(GateOp::xx_plus_yy(i, j, half));
        }
    }
    gates
}

/// Ising form of the bare graph objective (no penalty term).
pub fn objective_ising(instance: &DksInstance) -> IsingModel {
    let quadratic = instance
        .graph
        .edges()
        .iter()
        .map(|&(i, j, w)| ((i, j), w))
        .collect();
    ising_from_qubo(&QuboModel {
        n: instance.n(),
        linear: vec![0.0; instance.n()],
        quadratic,
        constant: 0.0,
    })
}

/// Ising form of the full penalty QUBO.
pub fn penalty_ising(instance: &DksInstance) -> IsingModel {
    ising_from_qubo(&instance.qubo)
}

/// Effective DFT angle for decomposing the penalty factor at QAOA angle `γ`.
/// The maximization QUBO contains `-λ(wt-k)²`, so the phase layer to expand
/// is `e^{+iγλ(wt-k)²} = U_f(-λγ)` with `f(w) = (w-k)²`.
pub fn penalty_lcu_effective_gamma(instance: &DksInstance, gamma: f64) -> f64 {
    -instance.lambda * gamma
}

/// Experiment circuit families.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// Warm start, `e^{-iγ(H₁+H₂)}` with the penalty folded into all-to-all
    /// `R_ZZ` terms, warm-start mixer.
    CoherentPenalty,
    /// Warm start, `e^{-iγH₁}`, one `R_Z(θ_j)` LCU layer, warm-start mixer.
    PenaltyLcu,
    /// Warm start, `e^{-iγH₁}`, Trotterized XY-mixer.
    CoherentXyTrotter,
    /// Warm start, `e^{-iγH₁}`, one collective-rotation LCU layer.
    XyLcu,
    /// [`Variant::PenaltyLcu`] with the layer angle promoted to a free
    /// parameter.
    SingleBranchPenalty,
    /// [`Variant::XyLcu`] with the Euler angles promoted to free parameters;
    /// a warm-start mixer is appended when `beta` is supplied.
    SingleBranchXy,
}

/// Named parameters for [`build_variant_circuit`]. Unset fields default to
/// nothing; missing required parameters are an error.
#[derive(Clone, Copy, Debug, Default)]
pub struct QaoaParams {
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub theta: Option<f64>,
    pub alpha: Option<f64>,
    pub vartheta: Option<f64>,
    pub chi: Option<f64>,
    /// Overrides `2 asin(√(k/n))` when set.
    pub theta_init: Option<f64>,
}

/// Branch data consumed by the LCU variants.
#[derive(Clone, Copy, Debug)]
pub enum BranchData {
    /// `θ_j` for the penalty LCU layer.
    PenaltyTheta(f64),
    /// Euler angles for the XY LCU layer.
    Euler(EulerAngles),
}

/// A fully specified experiment circuit.
#[derive(Clone, Debug)]
pub struct QaoaSpec<'a> {
    pub instance: &'a DksInstance,
    pub variant: Variant,
    pub params: QaoaParams,
    /// Number of Trotter steps for [`Variant::CoherentXyTrotter`].
    pub trotter_steps: usize,
}

impl<'a> QaoaSpec<'a> {
    pub fn new(instance: &'a DksInstance, variant: Variant, params: QaoaParams) -> Self {
        QaoaSpec { instance, variant, params, trotter_steps: 5 }
    }
}

fn require(value: Option<f64>, name: &str) -> Result<f64> {
    value.ok_or_else(|| Error::InvalidArgument(format!("missing parameter `{name}`")))
}

/// Builds the full circuit for a variant. LCU variants take their layer
/// angles from `branch`; the single-branch variants take them from the
/// parameter set instead.
pub fn build_variant_circuit(spec: &QaoaSpec, branch: Option<&BranchData>) -> Result<Circuit> {
    let instance = spec.instance;
    let n = instance.n();
    let ti = spec.params.theta_init.unwrap_or_else(|| theta_init(n, instance.k));
    let mut circuit = Circuit::new(n);
    circuit.extend(warm_start_gates(n, instance.k))?;
    let gamma = require(spec.params.gamma, "gamma")?;

    match spec.variant {
        Variant::CoherentPenalty => {
            circuit.extend(cost_layer(&penalty_ising(instance), gamma))?;
            let beta = require(spec.params.beta, "beta")?;
            circuit.extend(warm_start_mixer(n, beta, ti))?;
        }
        Variant::PenaltyLcu => {
            let theta = match branch {
                Some(BranchData::PenaltyTheta(t)) => *t,
                _ => {
                    return Err(Error::InvalidArgument(
                        "penalty-lcu needs a PenaltyTheta branch".into(),
                    ))
                }
            };
            circuit.extend(cost_layer(&objective_ising(instance), gamma))?;
            circuit.extend(rz_layer(n, theta))?;
            let beta = require(spec.params.beta, "beta")?;
            circuit.extend(warm_start_mixer(n, beta, ti))?;
        }
        Variant::CoherentXyTrotter => {
            circuit.extend(cost_layer(&objective_ising(instance), gamma))?;
            let beta = require(spec.params.beta, "beta")?;
            circuit.extend(trotter_xy_gates(n, beta, spec.trotter_steps))?;
        }
        Variant::XyLcu => {
            let g = match branch {
                Some(BranchData::Euler(g)) => *g,
                _ => return Err(Error::InvalidArgument("xy-lcu needs an Euler branch".into())),
            };
            circuit.extend(cost_layer(&objective_ising(instance), gamma))?;
            circuit.extend(collective_rotation_gates(n, g))?;
        }
        Variant::SingleBranchPenalty => {
            let theta = require(spec.params.theta, "theta")?;
            circuit.extend(cost_layer(&objective_ising(instance), gamma))?;
            circuit.extend(rz_layer(n, theta))?;
            let beta = require(spec.params.beta, "beta")?;
            circuit.extend(warm_start_mixer(n, beta, ti))?;
        }
        Variant::SingleBranchXy => {
            let g = EulerAngles {
                alpha: spec.params.alpha.unwrap_or(0.0),
                theta: require(spec.params.vartheta, "vartheta")?,
                chi: require(spec.params.chi, "chi")?,
            };
            circuit.extend(cost_layer(&objective_ising(instance), gamma))?;
            circuit.extend(collective_rotation_gates(n, g))?;
            if let Some(beta) = spec.params.beta {
                circuit.extend(warm_start_mixer(n, beta, ti))?;
            }
        }
    }
    Ok(circuit)
}

/// ZYZ decomposition of a single-qubit unitary:
/// `U = e^{iφ} R_Z(α) R_Y(ϑ) R_Z(χ)` with `ϑ ∈ [0, π]`, `α ∈ [0, 2π)`,
/// `χ ∈ [0, 4π)`. At the `ϑ ∈ {0, π}` degeneracies only one angle
/// combination is determined and `χ = 0` is chosen canonically.
pub fn euler_from_single_qubit(u: &Matrix2<Complex64>) -> Result<(EulerAngles, f64)> {
    let unitarity = (u * u.adjoint() - Matrix2::identity()).norm();
    if unitarity > 1e-10 {
        return Err(Error::NotUnitary { tol: 1e-10 });
    }
    let theta = 2.0 * u[(1, 0)].norm().atan2(u[(0, 0)].norm());
    const DEGENERATE: f64 = 1e-12;
    // α and χ come from cross ratios that mix diagonal and off-diagonal
    // entries, which pins their relative 2π branch; the leftover overall sign
    // is absorbed into the global phase below.
    let (alpha_raw, chi_raw) = if u[(1, 0)].norm() < DEGENERATE {
        // ϑ = 0: only α + χ is fixed.
        ((u[(1, 1)] / u[(0, 0)]).arg(), 0.0)
    } else if u[(0, 0)].norm() < DEGENERATE {
        // ϑ = π: only α - χ is fixed.
        ((u[(1, 0)] / -u[(0, 1)]).arg(), 0.0)
    } else {
        // u11/(-u01) = e^{iα} cot(ϑ/2), u11/u10 = e^{iχ} cot(ϑ/2).
        ((u[(1, 1)] / -u[(0, 1)]).arg(), (u[(1, 1)] / u[(1, 0)]).arg())
    };
    let alpha = alpha_raw.rem_euclid(std::f64::consts::TAU);
    let chi = chi_raw.rem_euclid(2.0 * std::f64::consts::TAU);
    let angles = EulerAngles { alpha, theta, chi };
    // Any wrap-induced sign lands in the recomputed global phase.
    let m = crate::lcu::su2::su2_rotation(angles);
    let (mut best, mut phase) = (0.0, 0.0);
    for r in 0..2 {
        for c in 0..2 {
            if m[(r, c)].norm() > best {
                best = m[(r, c)].norm();
                phase = (u[(r, c)] / m[(r, c)]).arg();
            }
        }
    }
    Ok((angles, phase))
}

/// `P(wt(x) = k)` of a statevector.
pub fn hamming_weight_probability(state: &Statevector, k: usize) -> f64 {
    state
        .measurement_distribution()
        .iter()
        .enumerate()
        .filter(|(x, _)| (*x as u64).count_ones() as usize == k)
        .map(|(_, p)| p)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lcu::diagonal::{build_diagonal_lcu, hamming_penalty_values};
    use crate::lcu::su2::{haar_sample, su2_rotation, xy_unitary_dense};
    use crate::problems::{build_dks, random_regular_graph};
    use crate::rng::{stream_rng, StreamDomain};
    use crate::sim::{circuit_unitary, run_circuit};
    use rand::Rng;

    fn test_instance(n: usize, k: usize, seed: u64) -> DksInstance {
        build_dks(random_regular_graph(n, 3, seed).unwrap(), k).unwrap()
    }

    #[test]
    fn warm_start_two_qubits_is_uniform() {
        let sv = warm_start_state(2, 1).unwrap();
        for a in sv.amps() {
            assert!((a.re - 0.5).abs() < 1e-12 && a.im.abs() < 1e-15);
        }
        assert!((hamming_weight_probability(&sv, 1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn warm_start_feasibility_matches_simulator_and_formula() {
        let sv = warm_start_state(12, 4).unwrap();
        let p = hamming_weight_probability(&sv, 4);
        assert!((p - 0.23845).abs() < 1e-4);
        assert!((p - warm_start_feasibility(12, 4)).abs() < 1e-12);

        let sv = warm_start_state(8, 3).unwrap();
        let p = hamming_weight_probability(&sv, 3);
        assert!((p - warm_start_feasibility(8, 3)).abs() < 1e-12);

        // Too large to simulate; the closed form covers it.
        assert!((warm_start_feasibility(106, 35) - 0.0822).abs() < 5e-4);
    }

    #[test]
    fn warm_start_gates_prepare_the_state() {
        let mut circuit = Circuit::new(5);
        circuit.extend(warm_start_gates(5, 2)).unwrap();
        let prepared = run_circuit(&circuit, &Statevector::zero(5).unwrap()).unwrap();
        let direct = warm_start_state(5, 2).unwrap();
        assert!(prepared.overlap(&direct).norm() > 1.0 - 1e-12);
    }

    #[test]
    fn cost_layer_matches_diagonal_phase_oracle() {
        let instance = test_instance(4, 2, 3);
        let ising = penalty_ising(&instance);
        let gamma = 0.73;
        let mut circuit = Circuit::new(4);
        circuit.extend(warm_start_gates(4, 2)).unwrap();
        circuit.extend(cost_layer(&ising, gamma)).unwrap();
        let via_gates = run_circuit(&circuit, &Statevector::zero(4).unwrap()).unwrap();

        let mut via_phase = warm_start_state(4, 2).unwrap();
        via_phase.apply_diagonal_phase(|x| ising.evaluate_without_offset(x), gamma);
        for (a, b) in via_gates.amps().iter().zip(via_phase.amps()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn cost_layer_at_zero_gamma_and_half_angle_composition() {
        let instance = test_instance(12, 4, 1);
        let ising = penalty_ising(&instance);
        assert!(cost_layer(&ising, 0.0).iter().all(|g| match g {
            GateOp::Rz { angle, .. } | GateOp::Rzz { angle, .. } =>
                matches!(angle, crate::sim::Angle::Bound(v) if *v == 0.0),
            _ => false,
        }));

        let gamma = 0.9;
        let start = warm_start_state(12, 4).unwrap();
        let mut once = Circuit::new(12);
        once.extend(cost_layer(&ising, gamma)).unwrap();
        let mut twice = Circuit::new(12);
        twice.extend(cost_layer(&ising, gamma / 2.0)).unwrap();
        twice.extend(cost_layer(&ising, gamma / 2.0)).unwrap();
        let a = run_circuit(&once, &start).unwrap();
        let b = run_circuit(&twice, &start).unwrap();
        assert!(a.overlap(&b).norm() > 1.0 - 1e-12);
    }

    #[test]
    fn warm_start_mixer_identities() {
        // β = 0 is the identity.
        let mut c = Circuit::new(1);
        c.extend(warm_start_mixer(1, 0.0, 0.9)).unwrap();
        let u = circuit_unitary(&c).unwrap();
        assert!((&u - nalgebra::DMatrix::identity(2, 2)).norm() < 1e-12);

        // θ_init = 0 reduces to an R_Z layer.
        let mut c = Circuit::new(1);
        c.extend(warm_start_mixer(1, 0.37, 0.0)).unwrap();
        let u = circuit_unitary(&c).unwrap();
        let mut rz = Circuit::new(1);
        rz.push(GateOp::rz(0, 0.37)).unwrap();
        let expect = circuit_unitary(&rz).unwrap();
        assert!((&u - &expect).norm() < 1e-12);

        // General case equals R_Y(θi) R_Z(β) R_Y(-θi) as a matrix product.
        let (beta, ti) = (0.81, 0.62);
        let mut c = Circuit::new(1);
        c.extend(warm_start_mixer(1, beta, ti)).unwrap();
        let u = circuit_unitary(&c).unwrap();
        let ry = |t: f64| {
            let (s, co) = (t / 2.0).sin_cos();
            Matrix2::new(
                Complex64::new(co, 0.0),
                Complex64::new(-s, 0.0),
                Complex64::new(s, 0.0),
                Complex64::new(co, 0.0),
            )
        };
        let rz = |t: f64| {
            Matrix2::new(
                Complex64::from_polar(1.0, -t / 2.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::from_polar(1.0, t / 2.0),
            )
        };
        let expect = ry(ti) * rz(beta) * ry(-ti);
        for r in 0..2 {
            for c2 in 0..2 {
                assert!((u[(r, c2)] - expect[(r, c2)]).norm() < 1e-12);
            }
        }

        // The mixer fixes the warm-start state up to phase.
        let sv = warm_start_state(6, 2).unwrap();
        let mut c = Circuit::new(6);
        c.extend(warm_start_mixer(6, 1.1, theta_init(6, 2))).unwrap();
        let out = run_circuit(&c, &sv).unwrap();
        assert!(out.overlap(&sv).norm() > 1.0 - 1e-10);
    }

    #[test]
    fn penalty_lcu_branches_superpose_to_coherent_circuit() {
        for n in [6usize, 10] {
            let k = n / 3;
            let instance = test_instance(n, k, 17);
            let (beta, gamma) = (0.45, 0.3);
            let coherent = build_variant_circuit(
                &QaoaSpec::new(
                    &instance,
                    Variant::CoherentPenalty,
                    QaoaParams { beta: Some(beta), gamma: Some(gamma), ..Default::default() },
                ),
                None,
            )
            .unwrap();
            let target = run_circuit(&coherent, &Statevector::zero(n).unwrap()).unwrap();

            let f = hamming_penalty_values(n, k).unwrap();
            let lcu =
                build_diagonal_lcu(&f, penalty_lcu_effective_gamma(&instance, gamma)).unwrap();
            let mut sum = Statevector::from_amplitudes(
                n,
                vec![Complex64::new(0.0, 0.0); 1 << n],
            )
            .unwrap();
            for j in 0..=lcu.m() {
                let branch = build_variant_circuit(
                    &QaoaSpec::new(
                        &instance,
                        Variant::PenaltyLcu,
                        QaoaParams { beta: Some(beta), gamma: Some(gamma), ..Default::default() },
                    ),
                    Some(&BranchData::PenaltyTheta(lcu.thetas()[j])),
                )
                .unwrap();
                let state = run_circuit(&branch, &Statevector::zero(n).unwrap()).unwrap();
                // Undo the R_Z layer's global phase before superposing.
                let correction = rz_layer_global_phase(n, lcu.thetas()[j]).conj();
                sum.accumulate(lcu.coeffs()[j] * correction, &state);
            }
            let overlap = target.overlap(&sum).norm();
            assert!(overlap > 1.0 - 1e-8, "n = {n}: overlap {overlap}");
        }
    }

    #[test]
    fn penalty_lcu_at_theta_zero_beta_zero_is_warm_start_plus_cost() {
        let instance = test_instance(8, 2, 5);
        let gamma = 0.64;
        let branch = build_variant_circuit(
            &QaoaSpec::new(
                &instance,
                Variant::PenaltyLcu,
                QaoaParams { beta: Some(0.0), gamma: Some(gamma), ..Default::default() },
            ),
            Some(&BranchData::PenaltyTheta(0.0)),
        )
        .unwrap();
        let got = run_circuit(&branch, &Statevector::zero(8).unwrap()).unwrap();

        let mut reference = Circuit::new(8);
        reference.extend(warm_start_gates(8, 2)).unwrap();
        reference.extend(cost_layer(&objective_ising(&instance), gamma)).unwrap();
        let expect = run_circuit(&reference, &Statevector::zero(8).unwrap()).unwrap();
        assert!(got.overlap(&expect).norm() > 1.0 - 1e-12);
    }

    #[test]
    fn trotter_xy_at_beta_zero_is_cost_only() {
        let instance = test_instance(6, 2, 7);
        let gamma = 0.52;
        let spec = QaoaSpec::new(
            &instance,
            Variant::CoherentXyTrotter,
            QaoaParams { beta: Some(0.0), gamma: Some(gamma), ..Default::default() },
        );
        let circuit = build_variant_circuit(&spec, None).unwrap();
        let got = run_circuit(&circuit, &Statevector::zero(6).unwrap()).unwrap();

        let mut reference = Circuit::new(6);
        reference.extend(warm_start_gates(6, 2)).unwrap();
        reference.extend(cost_layer(&objective_ising(&instance), gamma)).unwrap();
        let expect = run_circuit(&reference, &Statevector::zero(6).unwrap()).unwrap();
        assert!(got.overlap(&expect).norm() > 1.0 - 1e-12);
    }

    fn trotter_distance(n: usize, beta: f64, steps: usize) -> f64 {
        let mut circuit = Circuit::new(n);
        circuit.extend(trotter_xy_gates(n, beta, steps)).unwrap();
        let start = warm_start_state(n, n / 3).unwrap();
        let approx = run_circuit(&circuit, &start).unwrap();
        let dense = xy_unitary_dense(n, beta).unwrap();
        let amps = nalgebra::DVector::from_column_slice(start.amps());
        let exact_amps = &dense * amps;
        let exact =
            Statevector::from_amplitudes(n, exact_amps.iter().copied().collect()).unwrap();
        (2.0 * (1.0 - approx.overlap(&exact).norm())).max(0.0).sqrt()
    }

    #[test]
    fn trotter_fidelity_and_second_order_scaling() {
        let d5 = trotter_distance(6, 0.2, 5);
        let fidelity = 1.0 - d5 * d5 / 2.0;
        assert!(fidelity >= 0.999, "fidelity {fidelity}");
        let d10 = trotter_distance(6, 0.2, 10);
        let ratio = d5 / d10;
        assert!((3.0..6.0).contains(&ratio), "step-doubling ratio {ratio}");
    }

    #[test]
    fn trotter_conserves_hamming_weight() {
        let n = 8;
        let k = 3;
        let mut circuit = Circuit::new(n);
        circuit.extend(trotter_xy_gates(n, 0.37, 5)).unwrap();
        let start = warm_start_state(n, k).unwrap();
        let out = run_circuit(&circuit, &start).unwrap();
        for weight in 0..=n {
            let before = hamming_weight_probability(&start, weight);
            let after = hamming_weight_probability(&out, weight);
            assert!((before - after).abs() < 1e-9, "weight {weight}");
        }
    }

    #[test]
    fn euler_roundtrip_identities() {
        let (angles, phase) = euler_from_single_qubit(&Matrix2::identity()).unwrap();
        assert_eq!((angles.alpha, angles.theta, angles.chi), (0.0, 0.0, 0.0));
        assert!(phase.abs() < 1e-12);

        let t = 0.7f64;
        let (s, c) = (t / 2.0).sin_cos();
        let ry = Matrix2::new(
            Complex64::new(c, 0.0),
            Complex64::new(-s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(c, 0.0),
        );
        let (angles, phase) = euler_from_single_qubit(&ry).unwrap();
        assert!(angles.alpha.abs() < 1e-12);
        assert!((angles.theta - 0.7).abs() < 1e-12);
        assert!(angles.chi.abs() < 1e-12);
        assert!(phase.abs() < 1e-12);
    }

    #[test]
    fn euler_roundtrip_on_haar_random_unitaries() {
        let mut rng = stream_rng(71, StreamDomain::TestOracle, 50);
        for trial in 0..1000 {
            let g = haar_sample(&mut rng);
            let global = Complex64::from_polar(1.0, rng.gen_range(-3.1..3.1));
            let u = su2_rotation(g).map(|v| v * global);
            let (angles, phase) = euler_from_single_qubit(&u).unwrap();
            let rebuilt =
                su2_rotation(angles).map(|v| v * Complex64::from_polar(1.0, phase));
            let err = (rebuilt - u).norm();
            assert!(err < 1e-9, "trial {trial}: error {err}");
            assert!((0.0..std::f64::consts::TAU).contains(&angles.alpha));
            assert!((0.0..=std::f64::consts::PI).contains(&angles.theta));
            assert!((0.0..2.0 * std::f64::consts::TAU).contains(&angles.chi));
        }
    }

    #[test]
    fn euler_extraction_of_single_branch_mixer_product() {
        // R_Z(θ*) R_Y(-θi) R_Z(β*) R_Y(θi) reconstructs through ZYZ angles.
        let (theta_star, beta_star, ti) = (1.1, 0.4, 0.9);
        let mut c = Circuit::new(1);
        c.push(GateOp::ry(0, ti)).unwrap();
        c.push(GateOp::rz(0, beta_star)).unwrap();
        c.push(GateOp::ry(0, -ti)).unwrap();
        c.push(GateOp::rz(0, theta_star)).unwrap();
        let u_dyn = circuit_unitary(&c).unwrap();
        let u = Matrix2::new(u_dyn[(0, 0)], u_dyn[(0, 1)], u_dyn[(1, 0)], u_dyn[(1, 1)]);
        let (angles, phase) = euler_from_single_qubit(&u).unwrap();
        let rebuilt = su2_rotation(angles).map(|v| v * Complex64::from_polar(1.0, phase));
        assert!((rebuilt - u).norm() < 1e-9);
    }

    #[test]
    fn degenerate_theta_pi_takes_canonical_chi() {
        let u = Matrix2::new(
            Complex64::new(0.0, 0.0),
            -Complex64::from_polar(1.0, 0.3),
            Complex64::from_polar(1.0, -0.3),
            Complex64::new(0.0, 0.0),
        );
        let (angles, phase) = euler_from_single_qubit(&u).unwrap();
        assert!((angles.theta - std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(angles.chi, 0.0);
        let rebuilt = su2_rotation(angles).map(|v| v * Complex64::from_polar(1.0, phase));
        assert!((rebuilt - u).norm() < 1e-10);
    }

    #[test]
    fn missing_parameters_are_rejected() {
        let instance = test_instance(6, 2, 2);
        let spec = QaoaSpec::new(
            &instance,
            Variant::CoherentPenalty,
            QaoaParams { gamma: Some(0.1), ..Default::default() },
        );
        assert!(build_variant_circuit(&spec, None).is_err());
        let spec = QaoaSpec::new(
            &instance,
            Variant::PenaltyLcu,
            QaoaParams { beta: Some(0.1), gamma: Some(0.1), ..Default::default() },
        );
        assert!(build_variant_circuit(&spec, None).is_err());
    }

    #[test]
    fn xy_lcu_layer_is_collective_rotation() {
        let instance = test_instance(4, 1, 9);
        let g = EulerAngles { alpha: 0.8, theta: 0.5, chi: 2.2 };
        let circuit = build_variant_circuit(
            &QaoaSpec::new(
                &instance,
                Variant::XyLcu,
                QaoaParams { gamma: Some(0.0), ..Default::default() },
            ),
            Some(&BranchData::Euler(g)),
        )
        .unwrap();
        let got = run_circuit(&circuit, &Statevector::zero(4).unwrap()).unwrap();

        let start = warm_start_state(4, 1).unwrap();
        let dense = crate::lcu::su2::collective_rotation_dense(4, g);
        let amps = nalgebra::DVector::from_column_slice(start.amps());
        let expect_amps = &dense * amps;
        let expect =
            Statevector::from_amplitudes(4, expect_amps.iter().copied().collect()).unwrap();
        assert!(got.overlap(&expect).norm() > 1.0 - 1e-10);
    }
}
