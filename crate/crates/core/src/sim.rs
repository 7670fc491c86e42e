//! Exact statevector and small-scale density-matrix simulation.
//!
//! Amplitudes are stored little-endian: qubit 0 is the least significant bit of
//! the basis index. Statevectors are capped at 16 qubits and density matrices
//! at 8; both caps are hard errors. Gate conventions:
//!
//! * `R_Z(θ) = diag(e^{-iθ/2}, e^{iθ/2})` (includes the global `e^{-iθn/2}`
//!   factor when applied as a layer),
//! * `R_Y(θ) = exp(-iθY/2)`, `R_X(θ) = exp(-iθX/2)`,
//! * `P(φ) = diag(1, e^{iφ})`,
//! * `R_ZZ(θ) = exp(-iθ Z⊗Z / 2)`,
//! * `XXPlusYY(θ) = exp(-iθ (X⊗X + Y⊗Y))`.
//!
//! Equality assertions elsewhere in the crate are made up to global phase via
//! [`Statevector::overlap`].

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::estimators::SampleSet;
use crate::rng::{stream_rng, StreamDomain};
use crate::{Error, Result};
use rand::Rng;

pub const MAX_STATEVECTOR_QUBITS: usize = 16;
pub const MAX_DENSITY_QUBITS: usize = 8;

/// Diagonal phase function `x -> f(x)` over basis-state indices.
pub type DiagonalFn = dyn Fn(u64) -> f64 + Send + Sync;

/// A gate angle: either a bound value or a named parameter resolved by
/// [`Circuit::bind`].
#[derive(Clone, Debug, PartialEq)]
pub enum Angle {
    Bound(f64),
    Param(String),
}

impl Angle {
    fn value(&self) -> Result<f64> {
        match self {
            Angle::Bound(v) if v.is_finite() => Ok(*v),
            Angle::Bound(_) => Err(Error::NonFiniteAngle),
            Angle::Param(name) => Err(Error::UnboundParameter(name.clone())),
        }
    }

    fn bind(&self, params: &HashMap<String, f64>) -> Angle {
        match self {
            Angle::Param(name) => match params.get(name) {
                Some(v) => Angle::Bound(*v),
                None => self.clone(),
            },
            bound => bound.clone(),
        }
    }
}

impl From<f64> for Angle {
    fn from(v: f64) -> Self {
        Angle::Bound(v)
    }
}

/// A single gate operation.
#[derive(Clone)]
pub enum GateOp {
    Rz { target: usize, angle: Angle },
    Ry { target: usize, angle: Angle },
    Rx { target: usize, angle: Angle },
    Phase { target: usize, angle: Angle },
    H { target: usize },
    Rzz { targets: (usize, usize), angle: Angle },
    Cz { targets: (usize, usize) },
    Swap { targets: (usize, usize) },
    XxPlusYy { targets: (usize, usize), angle: Angle },
    /// Exact diagonal phase `|x⟩ -> e^{-iγ f(x)} |x⟩`.
    DiagonalPhase { f: Arc<DiagonalFn>, gamma: Angle },
}

impl fmt::Debug for GateOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateOp::Rz { target, angle } => write!(f, "Rz(q{target}, {angle:?})"),
            GateOp::Ry { target, angle } => write!(f, "Ry(q{target}, {angle:?})"),
            GateOp::Rx { target, angle } => write!(f, "Rx(q{target}, {angle:?})"),
            GateOp::Phase { target, angle } => write!(f, "P(q{target}, {angle:?})"),
            GateOp::H { target } => write!(f, "H(q{target})"),
            GateOp::Rzz { targets, angle } => {
                write!(f, "Rzz(q{}, q{}, {angle:?})", targets.0, targets.1)
            }
            GateOp::Cz { targets } => write!(f, "Cz(q{}, q{})", targets.0, targets.1),
            GateOp::Swap { targets } => write!(f, "Swap(q{}, q{})", targets.0, targets.1),
            GateOp::XxPlusYy { targets, angle } => {
                write!(f, "XxPlusYy(q{}, q{}, {angle:?})", targets.0, targets.1)
            }
            GateOp::DiagonalPhase { gamma, .. } => write!(f, "DiagonalPhase(γ={gamma:?})"),
        }
    }
}

impl GateOp {
    pub fn rz(target: usize, angle: f64) -> Self {
        GateOp::Rz { target, angle: angle.into() }
    }
    pub fn ry(target: usize, angle: f64) -> Self {
        GateOp::Ry { target, angle: angle.into() }
    }
    pub fn rx(target: usize, angle: f64) -> Self {
        GateOp::Rx { target, angle: angle.into() }
    }
    pub fn phase(target: usize, angle: f64) -> Self {
        GateOp::Phase { target, angle: angle.into() }
    }
    pub fn h(target: usize) -> Self {
        GateOp::H { target }
    }
    pub fn rzz(a: usize, b: usize, angle: f64) -> Self {
        GateOp::Rzz { targets: (a, b), angle: angle.into() }
    }
    pub fn cz(a: usize, b: usize) -> Self {
        GateOp::Cz { targets: (a, b) }
    }
    pub fn swap(a: usize, b: usize) -> Self {
        GateOp::Swap { targets: (a, b) }
    }
    pub fn xx_plus_yy(a: usize, b: usize, angle: f64) -> Self {
        GateOp::XxPlusYy { targets: (a, b), angle: angle.into() }
    }
    pub fn diagonal_phase(f: Arc<DiagonalFn>, gamma: f64) -> Self {
        GateOp::DiagonalPhase { f, gamma: gamma.into() }
    }

    /// Qubits the gate acts on.
    pub fn targets(&self) -> Vec<usize> {
        match self {
            GateOp::Rz { target, .. }
            | GateOp::Ry { target, .. }
            | GateOp::Rx { target, .. }
            | GateOp::Phase { target, .. }
            | GateOp::H { target } => vec![*target],
            GateOp::Rzz { targets, .. }
            | GateOp::Cz { targets }
            | GateOp::Swap { targets }
            | GateOp::XxPlusYy { targets, .. } => vec![targets.0, targets.1],
            GateOp::DiagonalPhase { .. } => vec![],
        }
    }

    fn angle(&self) -> Option<&Angle> {
        match self {
            GateOp::Rz { angle, .. }
            | GateOp::Ry { angle, .. }
            | GateOp::Rx { angle, .. }
            | GateOp::Phase { angle, .. }
            | GateOp::Rzz { angle, .. }
            | GateOp::XxPlusYy { angle, .. } => Some(angle),
            GateOp::DiagonalPhase { gamma, .. } => Some(gamma),
            _ => None,
        }
    }

    fn bind(&self, params: &HashMap<String, f64>) -> GateOp {
        let mut g = self.clone();
        match &mut g {
            GateOp::Rz { angle, .. }
            | GateOp::Ry { angle, .. }
            | GateOp::Rx { angle, .. }
            | GateOp::Phase { angle, .. }
            | GateOp::Rzz { angle, .. }
            | GateOp::XxPlusYy { angle, .. } => *angle = angle.bind(params),
            GateOp::DiagonalPhase { gamma, .. } => *gamma = gamma.bind(params),
            _ => {}
        }
        g
    }

    fn validate(&self, n: usize) -> Result<()> {
        let targets = self.targets();
        for &t in &targets {
            if t >= n {
                return Err(Error::TargetOutOfRange { target: t, n });
            }
        }
        if targets.len() == 2 && targets[0] == targets[1] {
            return Err(Error::DuplicateTargets(targets[0]));
        }
        Ok(())
    }
}

/// An ordered list of gates on `n` qubits. Parameters may stay symbolic until
/// [`Circuit::bind`]; running an unbound circuit is an error.
#[derive(Clone, Debug, Default)]
pub struct Circuit {
    n: usize,
    ops: Vec<GateOp>,
}

impl Circuit {
    pub fn new(n: usize) -> Self {
        Circuit { n, ops: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    pub fn push(&mut self, gate: GateOp) -> Result<()> {
        gate.validate(self.n)?;
        self.ops.push(gate);
        Ok(())
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = GateOp>) -> Result<()> {
        for g in gates {
            self.push(g)?;
        }
        Ok(())
    }

    /// Replace named parameters with values; parameters absent from `params`
    /// remain symbolic.
    pub fn bind(&self, params: &HashMap<String, f64>) -> Circuit {
        Circuit {
            n: self.n,
            ops: self.ops.iter().map(|g| g.bind(params)).collect(),
        }
    }

    /// Name of the first unbound parameter, if any.
    pub fn first_unbound(&self) -> Option<&str> {
        self.ops.iter().find_map(|g| match g.angle() {
            Some(Angle::Param(name)) => Some(name.as_str()),
            _ => None,
        })
    }
}

/// Pure state of `n` qubits as 2^n complex amplitudes.
#[derive(Clone, Debug)]
pub struct Statevector {
    n: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    /// `|0...0⟩` on `n` qubits.
    pub fn zero(n: usize) -> Result<Self> {
        if !(1..=MAX_STATEVECTOR_QUBITS).contains(&n) {
            return Err(Error::QubitCountOutOfRange { n, min: 1, max: MAX_STATEVECTOR_QUBITS });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Statevector { n, amps })
    }

    pub fn from_amplitudes(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        if !(1..=MAX_STATEVECTOR_QUBITS).contains(&n) {
            return Err(Error::QubitCountOutOfRange { n, min: 1, max: MAX_STATEVECTOR_QUBITS });
        }
        if amps.len() != 1 << n {
            return Err(Error::DimensionMismatch { expected: 1 << n, got: amps.len() });
        }
        Ok(Statevector { n, amps })
    }

    /// Product state with the same single-qubit amplitudes `(a0, a1)` on every
    /// qubit.
    pub fn uniform_product(n: usize, a0: Complex64, a1: Complex64) -> Result<Self> {
        let mut sv = Self::zero(n)?;
        for x in 0..sv.amps.len() {
            let ones = (x as u64).count_ones() as i32;
            let zeros = n as i32 - ones;
            sv.amps[x] = a0.powi(zeros) * a1.powi(ones);
        }
        Ok(sv)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &Statevector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Adds `weight * other` to this state (used to form LCU superpositions).
    pub fn accumulate(&mut self, weight: Complex64, other: &Statevector) {
        for (a, b) in self.amps.iter_mut().zip(&other.amps) {
            *a += weight * b;
        }
    }

    /// Applies a single gate in place.
    pub fn apply_gate(&mut self, gate: &GateOp) -> Result<()> {
        self.apply_gate_filtered(gate, None)
    }

    /// Applies a gate only on basis states whose `control` bit equals
    /// `control_value`. The control qubit must not be a target.
    pub fn apply_gate_controlled(
        &mut self,
        gate: &GateOp,
        control: usize,
        control_value: bool,
    ) -> Result<()> {
        if control >= self.n {
            return Err(Error::TargetOutOfRange { target: control, n: self.n });
        }
        if gate.targets().contains(&control) {
            return Err(Error::DuplicateTargets(control));
        }
        self.apply_gate_filtered(gate, Some((control, control_value)))
    }

    fn apply_gate_filtered(
        &mut self,
        gate: &GateOp,
        control: Option<(usize, bool)>,
    ) -> Result<()> {
        gate.validate(self.n)?;
        let pass = |idx: usize| match control {
            None => true,
            Some((c, v)) => ((idx >> c) & 1 == 1) == v,
        };
        match gate {
            GateOp::Rz { target, angle } => {
                let theta = angle.value()?;
                let half = theta / 2.0;
                let p0 = Complex64::from_polar(1.0, -half);
                let p1 = Complex64::from_polar(1.0, half);
                self.apply_diag1(*target, p0, p1, &pass);
            }
            GateOp::Phase { target, angle } => {
                let phi = angle.value()?;
                let p1 = Complex64::from_polar(1.0, phi);
                self.apply_diag1(*target, Complex64::new(1.0, 0.0), p1, &pass);
            }
            GateOp::Ry { target, angle } => {
                let half = angle.value()? / 2.0;
                let (s, c) = half.sin_cos();
                let m = [
                    Complex64::new(c, 0.0),
                    Complex64::new(-s, 0.0),
                    Complex64::new(s, 0.0),
                    Complex64::new(c, 0.0),
                ];
                self.apply_1q(*target, &m, &pass);
            }
            GateOp::Rx { target, angle } => {
                let half = angle.value()? / 2.0;
                let (s, c) = half.sin_cos();
                let m = [
                    Complex64::new(c, 0.0),
                    Complex64::new(0.0, -s),
                    Complex64::new(0.0, -s),
                    Complex64::new(c, 0.0),
                ];
                self.apply_1q(*target, &m, &pass);
            }
            GateOp::H { target } => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let m = [
                    Complex64::new(s, 0.0),
                    Complex64::new(s, 0.0),
                    Complex64::new(s, 0.0),
                    Complex64::new(-s, 0.0),
                ];
                self.apply_1q(*target, &m, &pass);
            }
            GateOp::Rzz { targets, angle } => {
                let half = angle.value()? / 2.0;
                let (a, b) = *targets;
                for (idx, amp) in self.amps.iter_mut().enumerate() {
                    if !pass(idx) {
                        continue;
                    }
                    let za = 1 - 2 * ((idx >> a) & 1) as i64;
                    let zb = 1 - 2 * ((idx >> b) & 1) as i64;
                    *amp *= Complex64::from_polar(1.0, -half * (za * zb) as f64);
                }
            }
            GateOp::Cz { targets } => {
                let (a, b) = *targets;
                let mask = (1usize << a) | (1usize << b);
                for (idx, amp) in self.amps.iter_mut().enumerate() {
                    if pass(idx) && idx & mask == mask {
                        *amp = -*amp;
                    }
                }
            }
            GateOp::Swap { targets } => {
                let (a, b) = *targets;
                let ma = 1usize << a;
                let mb = 1usize << b;
                for idx in 0..self.amps.len() {
                    // Visit each swapped pair once, from its (a=1, b=0) member.
                    if idx & ma != 0 && idx & mb == 0 && pass(idx) {
                        let other = (idx & !ma) | mb;
                        self.amps.swap(idx, other);
                    }
                }
            }
            GateOp::XxPlusYy { targets, angle } => {
                let theta = angle.value()?;
                let (s, c) = (2.0 * theta).sin_cos();
                let cos = Complex64::new(c, 0.0);
                let misin = Complex64::new(0.0, -s);
                let (a, b) = *targets;
                let ma = 1usize << a;
                let mb = 1usize << b;
                for idx in 0..self.amps.len() {
                    if idx & ma != 0 && idx & mb == 0 && pass(idx) {
                        let other = (idx & !ma) | mb;
                        let (x, y) = (self.amps[idx], self.amps[other]);
                        self.amps[idx] = cos * x + misin * y;
                        self.amps[other] = misin * x + cos * y;
                    }
                }
            }
            GateOp::DiagonalPhase { f, gamma } => {
                let g = gamma.value()?;
                for (idx, amp) in self.amps.iter_mut().enumerate() {
                    if pass(idx) {
                        *amp *= Complex64::from_polar(1.0, -g * f(idx as u64));
                    }
                }
            }
        }
        Ok(())
    }

    fn apply_diag1(
        &mut self,
        target: usize,
        p0: Complex64,
        p1: Complex64,
        pass: &dyn Fn(usize) -> bool,
    ) {
        let mask = 1usize << target;
        for (idx, amp) in self.amps.iter_mut().enumerate() {
            if pass(idx) {
                *amp *= if idx & mask == 0 { p0 } else { p1 };
            }
        }
    }

    /// Applies a 2x2 matrix `[m00, m01, m10, m11]` to `target`.
    fn apply_1q(&mut self, target: usize, m: &[Complex64; 4], pass: &dyn Fn(usize) -> bool) {
        let mask = 1usize << target;
        let dim = self.amps.len();
        let mut block = 0;
        while block < dim {
            for low in 0..mask {
                let i0 = block + low;
                if !pass(i0) {
                    continue;
                }
                let i1 = i0 | mask;
                let (a0, a1) = (self.amps[i0], self.amps[i1]);
                self.amps[i0] = m[0] * a0 + m[1] * a1;
                self.amps[i1] = m[2] * a0 + m[3] * a1;
            }
            block += 2 * mask;
        }
    }

    /// Applies an arbitrary single-qubit matrix `[m00, m01, m10, m11]` to
    /// `target`.
    pub fn apply_single_qubit(&mut self, target: usize, m: &[Complex64; 4]) -> Result<()> {
        if target >= self.n {
            return Err(Error::TargetOutOfRange { target, n: self.n });
        }
        self.apply_1q(target, m, &|_| true);
        Ok(())
    }

    /// Multiplies every amplitude by `e^{-iγ f(x)}`.
    pub fn apply_diagonal_phase(&mut self, f: impl Fn(u64) -> f64, gamma: f64) {
        for (idx, amp) in self.amps.iter_mut().enumerate() {
            *amp *= Complex64::from_polar(1.0, -gamma * f(idx as u64));
        }
    }

    /// `p_x = |amps[x]|^2` for every basis state.
    pub fn measurement_distribution(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Multinomial sample of `shots` bitstrings; reproducible given `seed`.
    pub fn sample_bitstrings(&self, shots: u64, seed: u64) -> SampleSet {
        let probs = self.measurement_distribution();
        let counts = sample_counts(&probs, shots, seed);
        SampleSet::from_counts(self.n, counts.into_iter().map(|(x, c)| (x, None, c)))
    }
}

/// Multinomial draw from `probs`, returned as sorted (index, count) pairs.
pub(crate) fn sample_counts(probs: &[f64], shots: u64, seed: u64) -> Vec<(u64, u64)> {
    let total: f64 = probs.iter().sum();
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for &p in probs {
        acc += p;
        cdf.push(acc);
    }
    let mut counts: HashMap<u64, u64> = HashMap::new();
    let mut rng = stream_rng(seed, StreamDomain::Measurement, 0);
    for _ in 0..shots {
        let u: f64 = rng.gen::<f64>() * total;
        let idx = cdf.partition_point(|&c| c <= u).min(probs.len() - 1);
        *counts.entry(idx as u64).or_insert(0) += 1;
    }
    let mut out: Vec<(u64, u64)> = counts.into_iter().collect();
    out.sort_unstable();
    out
}

/// Runs `circuit` on `initial`, applying gates in order.
pub fn run_circuit(circuit: &Circuit, initial: &Statevector) -> Result<Statevector> {
    if circuit.n() != initial.n() {
        return Err(Error::DimensionMismatch { expected: 1 << circuit.n(), got: initial.dim() });
    }
    let mut state = initial.clone();
    for gate in circuit.ops() {
        state.apply_gate(gate)?;
    }
    Ok(state)
}

/// Dense unitary of a circuit, column by column. Capped at 8 qubits.
pub fn circuit_unitary(circuit: &Circuit) -> Result<DMatrix<Complex64>> {
    let n = circuit.n();
    if n > MAX_DENSITY_QUBITS {
        return Err(Error::QubitCountOutOfRange { n, min: 1, max: MAX_DENSITY_QUBITS });
    }
    let dim = 1usize << n;
    let mut u = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[col] = Complex64::new(1.0, 0.0);
        let state = run_circuit(circuit, &Statevector::from_amplitudes(n, amps)?)?;
        for row in 0..dim {
            u[(row, col)] = state.amps()[row];
        }
    }
    Ok(u)
}

/// Density matrix of up to [`MAX_DENSITY_QUBITS`] qubits. Trace below one is
/// allowed (unnormalized Kraus branches).
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    n: usize,
    mat: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn new(n: usize, mat: DMatrix<Complex64>) -> Result<Self> {
        if !(1..=MAX_DENSITY_QUBITS).contains(&n) {
            return Err(Error::QubitCountOutOfRange { n, min: 1, max: MAX_DENSITY_QUBITS });
        }
        let dim = 1usize << n;
        if mat.nrows() != dim || mat.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: mat.nrows() });
        }
        Ok(DensityMatrix { n, mat })
    }

    pub fn from_statevector(state: &Statevector) -> Result<Self> {
        let dim = state.dim();
        let v = nalgebra::DVector::from_column_slice(state.amps());
        let mat = &v * v.adjoint();
        let _ = dim;
        Self::new(state.n(), mat)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mat(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn trace(&self) -> Complex64 {
        self.mat.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.mat - self.mat.adjoint()).norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, StreamDomain};
    use rand::Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn fidelity(a: &Statevector, b: &Statevector) -> f64 {
        a.overlap(b).norm()
    }

    #[test]
    fn ry_pi_flips_zero_to_one() {
        let mut sv = Statevector::zero(1).unwrap();
        sv.apply_gate(&GateOp::ry(0, PI)).unwrap();
        assert!(sv.amps()[0].norm() < 1e-12);
        assert!((sv.amps()[1].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rz_leaves_computational_probabilities_invariant() {
        for theta in [0.3, 1.0, -2.5] {
            let mut sv = Statevector::zero(1).unwrap();
            sv.apply_gate(&GateOp::h(0)).unwrap();
            sv.apply_gate(&GateOp::rz(0, theta)).unwrap();
            let p = sv.measurement_distribution();
            assert!((p[0] - 0.5).abs() < 1e-12);
            assert!((p[1] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn cz_negates_one_one() {
        let amps = vec![c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)];
        let mut sv = Statevector::from_amplitudes(2, amps).unwrap();
        sv.apply_gate(&GateOp::cz(0, 1)).unwrap();
        assert!((sv.amps()[3] - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn diagonal_phase_zero_function_is_identity() {
        let mut rng = stream_rng(11, StreamDomain::TestOracle, 0);
        let mut sv = random_state(3, &mut rng);
        let before = sv.clone();
        sv.apply_diagonal_phase(|_| 0.0, 1.234);
        assert!(fidelity(&before, &sv) > 1.0 - 1e-12);
    }

    #[test]
    fn diagonal_phase_single_qubit_sign() {
        let mut sv = Statevector::zero(1).unwrap();
        sv.apply_gate(&GateOp::h(0)).unwrap();
        sv.apply_diagonal_phase(|x| x as f64, PI);
        let a = sv.amps();
        assert!((a[0].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((a[1].re + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn diagonal_phase_matches_per_level_product() {
        // f(x) = (wt(x) - 1)^2 at gamma = 0.7 against an independent loop.
        let mut rng = stream_rng(5, StreamDomain::TestOracle, 1);
        let mut sv = random_state(3, &mut rng);
        let reference = sv.clone();
        let gamma = 0.7;
        sv.apply_diagonal_phase(|x| ((x.count_ones() as f64) - 1.0).powi(2), gamma);
        for x in 0..8u64 {
            let w = x.count_ones() as f64;
            let expected =
                reference.amps()[x as usize] * Complex64::from_polar(1.0, -gamma * (w - 1.0) * (w - 1.0));
            assert!((sv.amps()[x as usize] - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn measurement_distribution_point_mass_and_uniform() {
        let sv = Statevector::zero(3).unwrap();
        let p = sv.measurement_distribution();
        assert_eq!(p[0], 1.0);
        assert!(p[1..].iter().all(|&x| x == 0.0));

        let mut sv = Statevector::zero(3).unwrap();
        for q in 0..3 {
            sv.apply_gate(&GateOp::h(q)).unwrap();
        }
        for p in sv.measurement_distribution() {
            assert!((p - 0.125).abs() < 1e-12);
        }
    }

    #[test]
    fn sampling_point_mass() {
        let sv = Statevector::zero(2).unwrap();
        let samples = sv.sample_bitstrings(100, 42);
        assert_eq!(samples.total_weight(), 100.0);
        assert_eq!(samples.records().len(), 1);
        assert_eq!(samples.records()[0].bits, 0);
    }

    #[test]
    fn sampling_uniform_within_five_sigma() {
        let mut sv = Statevector::zero(2).unwrap();
        sv.apply_gate(&GateOp::h(0)).unwrap();
        sv.apply_gate(&GateOp::h(1)).unwrap();
        let shots = 1_000_000u64;
        let samples = sv.sample_bitstrings(shots, 7);
        let sigma = (0.25 * 0.75 / shots as f64).sqrt();
        for rec in samples.records() {
            let freq = rec.weight / shots as f64;
            assert!((freq - 0.25).abs() < 5.0 * sigma, "freq {freq}");
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let mut sv = Statevector::zero(3).unwrap();
        for q in 0..3 {
            sv.apply_gate(&GateOp::h(q)).unwrap();
        }
        let a = sv.sample_bitstrings(10_000, 123);
        let b = sv.sample_bitstrings(10_000, 123);
        assert_eq!(a.records(), b.records());
    }

    #[test]
    fn run_circuit_empty_and_hh() {
        let sv = Statevector::zero(1).unwrap();
        let out = run_circuit(&Circuit::new(1), &sv).unwrap();
        assert!(fidelity(&sv, &out) > 1.0 - 1e-12);

        let mut circuit = Circuit::new(1);
        circuit.push(GateOp::h(0)).unwrap();
        circuit.push(GateOp::h(0)).unwrap();
        let out = run_circuit(&circuit, &sv).unwrap();
        assert!((out.amps()[0] - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn unbound_parameter_is_an_error() {
        let mut circuit = Circuit::new(1);
        circuit
            .push(GateOp::Rz { target: 0, angle: Angle::Param("beta".into()) })
            .unwrap();
        let sv = Statevector::zero(1).unwrap();
        match run_circuit(&circuit, &sv) {
            Err(Error::UnboundParameter(name)) => assert_eq!(name, "beta"),
            other => panic!("expected unbound-parameter error, got {other:?}"),
        }
        let bound = circuit.bind(&HashMap::from([("beta".to_string(), 0.4)]));
        assert!(bound.first_unbound().is_none());
        run_circuit(&bound, &sv).unwrap();
    }

    #[test]
    fn target_out_of_range_is_an_error() {
        let mut circuit = Circuit::new(2);
        assert!(matches!(
            circuit.push(GateOp::h(2)),
            Err(Error::TargetOutOfRange { target: 2, n: 2 })
        ));
        assert!(matches!(circuit.push(GateOp::cz(1, 1)), Err(Error::DuplicateTargets(1))));
    }

    fn random_state(n: usize, rng: &mut impl Rng) -> Statevector {
        let dim = 1usize << n;
        let mut amps: Vec<Complex64> =
            (0..dim).map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amps {
            *a /= norm;
        }
        Statevector::from_amplitudes(n, amps).unwrap()
    }

    fn random_gate(n: usize, rng: &mut impl Rng) -> GateOp {
        let q1 = rng.gen_range(0..n);
        let mut q2 = rng.gen_range(0..n);
        while q2 == q1 {
            q2 = rng.gen_range(0..n);
        }
        let angle = rng.gen_range(-PI..PI);
        match rng.gen_range(0..9) {
            0 => GateOp::rz(q1, angle),
            1 => GateOp::ry(q1, angle),
            2 => GateOp::rx(q1, angle),
            3 => GateOp::phase(q1, angle),
            4 => GateOp::h(q1),
            5 => GateOp::rzz(q1, q2, angle),
            6 => GateOp::cz(q1, q2),
            7 => GateOp::swap(q1, q2),
            _ => GateOp::xx_plus_yy(q1, q2, angle),
        }
    }

    #[test]
    fn random_circuits_preserve_norm() {
        let mut rng = stream_rng(99, StreamDomain::TestOracle, 2);
        for trial in 0..20 {
            let n = rng.gen_range(2..=10);
            let mut sv = random_state(n, &mut rng);
            for _ in 0..50 {
                sv.apply_gate(&random_gate(n, &mut rng)).unwrap();
            }
            assert!((sv.norm() - 1.0).abs() < 1e-9, "trial {trial}");
        }
    }

    #[test]
    fn diagonal_phases_compose_additively() {
        let mut rng = stream_rng(17, StreamDomain::TestOracle, 3);
        let f1 = |x: u64| (x % 5) as f64;
        let f2 = |x: u64| ((x * x) % 7) as f64 * 0.3;
        let gamma = 0.9;
        let base = random_state(4, &mut rng);
        let mut a = base.clone();
        a.apply_diagonal_phase(f1, gamma);
        a.apply_diagonal_phase(f2, gamma);
        let mut b = base.clone();
        b.apply_diagonal_phase(|x| f1(x) + f2(x), gamma);
        for (x, y) in a.amps().iter().zip(b.amps()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn run_circuit_is_linear() {
        let mut rng = stream_rng(23, StreamDomain::TestOracle, 4);
        for _ in 0..5 {
            let n = 3;
            let mut circuit = Circuit::new(n);
            for _ in 0..12 {
                circuit.push(random_gate(n, &mut rng)).unwrap();
            }
            let u = random_state(n, &mut rng);
            let v = random_state(n, &mut rng);
            let (wa, wb) = (c(0.3, -0.2), c(-0.1, 0.75));
            let mut combo = Statevector::from_amplitudes(
                n,
                u.amps().iter().zip(v.amps()).map(|(a, b)| wa * a + wb * b).collect(),
            )
            .unwrap();
            combo = run_circuit(&circuit, &combo).unwrap();
            let ua = run_circuit(&circuit, &u).unwrap();
            let vb = run_circuit(&circuit, &v).unwrap();
            for i in 0..combo.dim() {
                let expect = wa * ua.amps()[i] + wb * vb.amps()[i];
                assert!((combo.amps()[i] - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn statevector_cap_is_enforced() {
        assert!(Statevector::zero(17).is_err());
        assert!(DensityMatrix::new(9, DMatrix::zeros(512, 512)).is_err());
    }

    #[test]
    fn swap_and_xxplusyy_act_on_correct_subspace() {
        // XXPlusYY(θ) on |01⟩ -> cos(2θ)|01⟩ - i sin(2θ)|10⟩.
        let amps = vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        let mut sv = Statevector::from_amplitudes(2, amps).unwrap();
        let theta = 0.37;
        sv.apply_gate(&GateOp::xx_plus_yy(0, 1, theta)).unwrap();
        assert!((sv.amps()[1] - c((2.0 * theta).cos(), 0.0)).norm() < 1e-12);
        assert!((sv.amps()[2] - c(0.0, -(2.0 * theta).sin())).norm() < 1e-12);
        assert!(sv.amps()[0].norm() < 1e-15 && sv.amps()[3].norm() < 1e-15);

        let mut sv = Statevector::from_amplitudes(
            2,
            vec![c(0.1, 0.0), c(0.9, 0.0), c(0.3, 0.0), c(0.2, 0.0)],
        )
        .unwrap();
        sv.apply_gate(&GateOp::swap(0, 1)).unwrap();
        assert_eq!(sv.amps()[1], c(0.3, 0.0));
        assert_eq!(sv.amps()[2], c(0.9, 0.0));
    }
}
