//! Experiment drivers: the five penalty-based modes and seven XY-mixer modes
//! on a densest-k-subgraph instance, with exact statevector evaluation
//! (optionally degraded to shot sampling with common random numbers).
//!
//! Penalty family:
//! 1. optimize the coherent circuit for `⟨H⟩` over `(β, γ)`;
//! 2. evaluate the diagonal-LCU mixture at the frozen optimum and report `Γ`;
//! 3. re-optimize `(β, γ)` for upper CVaR at `1/Γ(γ)`, recomputing `Γ` per
//!    evaluation;
//! 4. optimize a single LCU basis circuit over `(β, γ, θ)` with `Γ` frozen to
//!    mode 3's value;
//! 5. re-optimize the coherent circuit under the same CVaR.
//!
//! XY family: the same ladder with the Trotterized XY-mixer as the coherent
//! reference, a Haar-sampled branch pool as the LCU, risk levels scaled by
//! the warm-start feasibility, plus two cross-family modes (6, 7) that reuse
//! the penalty family's mode-3 `Γ`. XY objectives add the probability of an
//! optimal sample with weight 1e-5.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::estimators::{dense_masses, metric_report, MetricReport, ObjectiveSpec};
use crate::lcu::diagonal::{build_diagonal_lcu, hamming_penalty_values, DiagonalLcu};
use crate::lcu::su2::{build_su2_pool, su2_rotation, EulerAngles, Su2Pool, XyGammaEstimator};
use crate::problems::DksInstance;
use crate::qaoa::{
    cost_layer, objective_ising, penalty_ising, penalty_lcu_effective_gamma, theta_init,
    trotter_xy_gates, warm_start_feasibility, warm_start_state,
};
use crate::sim::{sample_counts, Statevector};
use crate::vqopt::{OptProblem, OptTrace};
use crate::{Error, Result};

use std::f64::consts::{PI, TAU};

/// Experiment family selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Penalty,
    Xy,
}

/// Sizing knobs for the experiment ladder.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Grid resolution per axis for 2-parameter searches.
    pub grid_2d: usize,
    /// Grid resolution per axis for 3-parameter searches.
    pub grid_3d: usize,
    /// Grid resolution per axis for the 5-parameter search (mode 7).
    pub grid_5d: usize,
    /// Additional evaluations granted to the simplex refinement.
    pub refine_budget: usize,
    pub pool_size: usize,
    pub circuits: usize,
    pub gamma_samples: usize,
    pub trotter_steps: usize,
    /// `None` evaluates distributions exactly; `Some(shots)` resamples every
    /// distribution with a fixed seed (common random numbers).
    pub shots: Option<u64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 7,
            grid_2d: 21,
            grid_3d: 9,
            grid_5d: 5,
            refine_budget: 500,
            pool_size: 1_000_000,
            circuits: 1000,
            gamma_samples: 100_000,
            trotter_steps: 5,
            shots: None,
        }
    }
}

impl ExperimentConfig {
    /// A reduced configuration for fast desk-scale runs and tests.
    pub fn light(seed: u64) -> Self {
        ExperimentConfig {
            seed,
            grid_2d: 11,
            grid_3d: 7,
            grid_5d: 5,
            refine_budget: 150,
            pool_size: 20_000,
            circuits: 200,
            gamma_samples: 20_000,
            trotter_steps: 5,
            shots: None,
        }
    }
}

/// Output of one experiment mode.
#[derive(Clone, Debug)]
pub struct ModeResult {
    pub family: Family,
    pub mode: usize,
    pub label: String,
    /// Final parameter values by name.
    pub params: Vec<(String, f64)>,
    /// Sampling overhead attached to the mode, when one applies.
    pub gamma: Option<f64>,
    /// Risk level of the reported CVaR pair.
    pub eta: f64,
    pub report: MetricReport,
    pub trace: Option<OptTrace>,
    /// Final outcome distribution over bitstrings.
    pub distribution: Vec<f64>,
    /// `(parameter, Γ)` pairs recorded when `Γ` is recomputed per evaluation
    /// (mode 3 of either family).
    pub gamma_log: Vec<(f64, f64)>,
    /// Best feasible objective value carrying probability mass in the final
    /// distribution.
    pub best_feasible_objective: f64,
}

/// Precomputed per-instance tables used by every objective evaluation.
struct Evaluator<'a> {
    instance: &'a DksInstance,
    n: usize,
    dim: usize,
    h_values: Vec<f64>,
    feasible: Vec<bool>,
    optimal_indices: Vec<usize>,
    optimum: f64,
    obj_cost_cache: BTreeMap<u64, Statevector>,
    ti: f64,
    warm: Statevector,
    /// Bitstrings sorted by penalty objective, descending (ties by index).
    order_desc: Vec<usize>,
    shots: Option<u64>,
    shot_seed: u64,
}

fn mat_mul(a: &[Complex64; 4], b: &[Complex64; 4]) -> [Complex64; 4] {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

fn mat_rz(theta: f64) -> [Complex64; 4] {
    [
        Complex64::from_polar(1.0, -theta / 2.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::from_polar(1.0, theta / 2.0),
    ]
}

fn mat_ry(theta: f64) -> [Complex64; 4] {
    let (s, c) = (theta / 2.0).sin_cos();
    [
        Complex64::new(c, 0.0),
        Complex64::new(-s, 0.0),
        Complex64::new(s, 0.0),
        Complex64::new(c, 0.0),
    ]
}

/// Warm-start mixer as a single-qubit matrix: `R_Y(θi) R_Z(β) R_Y(-θi)`.
fn mixer_matrix(beta: f64, ti: f64) -> [Complex64; 4] {
    mat_mul(&mat_ry(ti), &mat_mul(&mat_rz(beta), &mat_ry(-ti)))
}

fn zyz_matrix(g: EulerAngles) -> [Complex64; 4] {
    let m = su2_rotation(g);
    [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]
}

impl<'a> Evaluator<'a> {
    fn new(instance: &'a DksInstance, config: &ExperimentConfig) -> Result<Self> {
        let n = instance.n();
        if n > 14 {
            return Err(Error::InstanceTooLarge(format!(
                "exact experiment evaluation capped at 14 qubits, got {n}"
            )));
        }
        let dim = 1usize << n;
        let h_values: Vec<f64> = (0..dim).map(|x| instance.penalty_objective(x as u64)).collect();
        let feasible: Vec<bool> = (0..dim).map(|x| instance.is_feasible(x as u64)).collect();
        let (optimum, optima) = instance.exact_optimum()?;
        let optimal_indices = optima.iter().map(|&x| x as usize).collect();
        let mut order_desc: Vec<usize> = (0..dim).collect();
        order_desc.sort_by(|&a, &b| h_values[b].partial_cmp(&h_values[a]).unwrap());
        Ok(Evaluator {
            instance,
            n,
            dim,
            h_values,
            feasible,
            optimal_indices,
            optimum,
            obj_cost_cache: BTreeMap::new(),
            ti: theta_init(n, instance.k),
            warm: warm_start_state(n, instance.k)?,
            order_desc,
            shots: config.shots,
            shot_seed: config.seed ^ 0x5EED,
        })
    }

    /// Warm start followed by the objective-only cost layer; memoized per γ.
    fn prefix_objective(&mut self, gamma: f64) -> Statevector {
        let key = gamma.to_bits();
        if let Some(state) = self.obj_cost_cache.get(&key) {
            return state.clone();
        }
        let mut state = self.warm.clone();
        for gate in cost_layer(&objective_ising(self.instance), gamma) {
            state.apply_gate(&gate).expect("valid gate");
        }
        if self.obj_cost_cache.len() > 256 {
            self.obj_cost_cache.clear();
        }
        self.obj_cost_cache.insert(key, state.clone());
        state
    }

    fn finalize(&self, dist: Vec<f64>) -> Vec<f64> {
        match self.shots {
            None => dist,
            Some(shots) => {
                let mut empirical = vec![0.0; dist.len()];
                for (x, c) in sample_counts(&dist, shots, self.shot_seed) {
                    empirical[x as usize] = c as f64 / shots as f64;
                }
                empirical
            }
        }
    }

    fn penalty_coherent_dist(&self, beta: f64, gamma: f64) -> Vec<f64> {
        let mut state = self.warm.clone();
        for gate in cost_layer(&penalty_ising(self.instance), gamma) {
            state.apply_gate(&gate).expect("valid gate");
        }
        let m = mixer_matrix(beta, self.ti);
        for q in 0..self.n {
            state.apply_single_qubit(q, &m).expect("valid target");
        }
        self.finalize(state.measurement_distribution())
    }

    /// Mixture over uniform single-qubit branch matrices applied to a shared
    /// prefix state, accumulated in branch order.
    fn branch_mixture(&self, prefix: &Statevector, branches: &[([Complex64; 4], f64)]) -> Vec<f64> {
        let partials: Vec<Vec<f64>> = branches
            .par_chunks(32)
            .map(|chunk| {
                let mut local = vec![0.0; self.dim];
                for (mat, weight) in chunk {
                    let mut state = prefix.clone();
                    for q in 0..self.n {
                        state.apply_single_qubit(q, mat).expect("valid target");
                    }
                    for (x, amp) in state.amps().iter().enumerate() {
                        local[x] += weight * amp.norm_sqr();
                    }
                }
                local
            })
            .collect();
        let mut dist = vec![0.0; self.dim];
        for partial in partials {
            for (d, p) in dist.iter_mut().zip(partial) {
                *d += p;
            }
        }
        dist
    }

    fn penalty_mixture_dist(&mut self, lcu: &DiagonalLcu, beta: f64, gamma: f64) -> Vec<f64> {
        let prefix = self.prefix_objective(gamma);
        let branches: Vec<([Complex64; 4], f64)> = lcu
            .branch_probs()
            .iter()
            .map(|&(j, q)| {
                (mat_mul(&mixer_matrix(beta, self.ti), &mat_rz(lcu.thetas()[j])), q)
            })
            .collect();
        self.finalize(self.branch_mixture(&prefix, &branches))
    }

    fn penalty_single_dist(&mut self, beta: f64, gamma: f64, theta: f64) -> Vec<f64> {
        let prefix = self.prefix_objective(gamma);
        let mat = mat_mul(&mixer_matrix(beta, self.ti), &mat_rz(theta));
        self.finalize(self.branch_mixture(&prefix, &[(mat, 1.0)]))
    }

    fn xy_coherent_dist(&mut self, beta: f64, gamma: f64, steps: usize) -> Vec<f64> {
        let mut state = self.prefix_objective(gamma);
        for gate in trotter_xy_gates(self.n, beta, steps) {
            state.apply_gate(&gate).expect("valid gate");
        }
        self.finalize(state.measurement_distribution())
    }

    fn xy_mixture_dist(&mut self, gamma: f64, branches: &[(EulerAngles, f64)]) -> Vec<f64> {
        let prefix = self.prefix_objective(gamma);
        let mats: Vec<([Complex64; 4], f64)> =
            branches.iter().map(|&(g, w)| (zyz_matrix(g), w)).collect();
        self.finalize(self.branch_mixture(&prefix, &mats))
    }

    fn xy_single_dist(&mut self, gamma: f64, g: EulerAngles, beta: Option<f64>) -> Vec<f64> {
        let prefix = self.prefix_objective(gamma);
        let mut mat = zyz_matrix(g);
        if let Some(beta) = beta {
            mat = mat_mul(&mixer_matrix(beta, self.ti), &mat);
        }
        self.finalize(self.branch_mixture(&prefix, &[(mat, 1.0)]))
    }

    fn mean_h(&self, dist: &[f64]) -> f64 {
        dist.iter().zip(&self.h_values).map(|(p, h)| p * h).sum()
    }

    /// Upper-tail CVaR over the precomputed value ordering (O(dim) per call).
    fn upper_cvar(&self, dist: &[f64], alpha: f64) -> f64 {
        let target = alpha.clamp(1e-300, 1.0);
        let mut taken = 0.0;
        let mut acc = 0.0;
        for &x in &self.order_desc {
            let w = dist[x];
            if w <= 0.0 {
                continue;
            }
            let take = w.min(target - taken);
            acc += take * self.h_values[x];
            taken += take;
            if taken >= target - 1e-300 {
                break;
            }
        }
        acc / target
    }

    fn p_opt(&self, dist: &[f64]) -> f64 {
        self.optimal_indices.iter().map(|&x| dist[x]).sum()
    }

    fn best_feasible(&self, dist: &[f64]) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for (x, &p) in dist.iter().enumerate() {
            if p > 1e-12 && self.feasible[x] && self.h_values[x] > best {
                best = self.h_values[x];
            }
        }
        best
    }

    fn report(&self, dist: &[f64], gamma: Option<f64>, eta: f64) -> Result<MetricReport> {
        let masses = dense_masses(dist);
        let objective = ObjectiveSpec {
            penalty_objective: &|x: u64| self.instance.penalty_objective(x),
            is_feasible: &|x: u64| self.instance.is_feasible(x),
            optimum: Some(self.optimum),
        };
        metric_report(&masses, &objective, gamma, eta)
    }
}

/// Pool state shared by the XY LCU modes: the Haar pool built at mode 1's
/// `β*`, the fixed selected circuits, and the `Γ̂(β)` estimator over a fixed
/// independent batch.
struct XyPoolBundle {
    pool: Su2Pool,
    selected_angles: Vec<EulerAngles>,
    /// `|a(g_i)|` at the pool's build angle, for importance reweighting.
    selected_base_abs: Vec<f64>,
    estimator: XyGammaEstimator,
    beta0: f64,
}

impl XyPoolBundle {
    /// Branch weights at mixing angle `beta`: the fixed circuits are
    /// importance-reweighted by `|a_β(g_i)| / |a_{β0}(g_i)|` and normalized,
    /// so the mixture tracks the β-dependent LCU distribution.
    fn weights_at(&self, n: usize, beta: f64) -> Vec<(EulerAngles, f64)> {
        let raw: Vec<f64> = self
            .selected_angles
            .iter()
            .zip(&self.selected_base_abs)
            .map(|(&g, &base)| {
                let a = crate::lcu::su2::coeff_xy(n, beta, g).expect("valid n");
                a.norm() / base.max(1e-300)
            })
            .collect();
        let total: f64 = raw.iter().sum();
        self.selected_angles
            .iter()
            .zip(raw)
            .map(|(&g, w)| (g, w / total))
            .collect()
    }
}

/// Runs the experiment ladder with memoized mode results, so later modes can
/// reuse the parameters and `Γ` values of their prerequisites.
pub struct ExperimentRunner<'a> {
    evaluator: Evaluator<'a>,
    config: ExperimentConfig,
    penalty_results: BTreeMap<usize, ModeResult>,
    xy_results: BTreeMap<usize, ModeResult>,
    xy_pool: Option<XyPoolBundle>,
}

fn param_pairs(names: &[&str], values: &[f64]) -> Vec<(String, f64)> {
    names.iter().map(|s| s.to_string()).zip(values.iter().copied()).collect()
}

impl<'a> ExperimentRunner<'a> {
    pub fn new(instance: &'a DksInstance, config: ExperimentConfig) -> Result<Self> {
        Ok(ExperimentRunner {
            evaluator: Evaluator::new(instance, &config)?,
            config,
            penalty_results: BTreeMap::new(),
            xy_results: BTreeMap::new(),
            xy_pool: None,
        })
    }

    pub fn instance(&self) -> &DksInstance {
        self.evaluator.instance
    }

    /// Exact feasible optimum of the instance.
    pub fn optimum(&self) -> f64 {
        self.evaluator.optimum
    }

    /// Supplies a pre-built Haar pool (for example one loaded from a file) to
    /// the XY LCU modes instead of drawing a fresh pool at mode 1's optimum.
    /// Branch weights are importance-reweighted from the pool's build angle
    /// as `β` moves.
    pub fn set_pool(&mut self, pool: Su2Pool, selected: Vec<usize>) -> Result<()> {
        if pool.n != self.evaluator.n {
            return Err(Error::DimensionMismatch { expected: self.evaluator.n, got: pool.n });
        }
        if selected.is_empty() || selected.iter().any(|&i| i >= pool.branches.len()) {
            return Err(Error::InvalidArgument("invalid pool selection".into()));
        }
        let estimator =
            XyGammaEstimator::from_seed(pool.n, self.config.gamma_samples, self.config.seed)?;
        let selected_angles = selected.iter().map(|&i| pool.branches[i].angles).collect();
        let selected_base_abs = selected.iter().map(|&i| pool.branches[i].abs_weight).collect();
        let beta0 = pool.beta;
        self.xy_pool =
            Some(XyPoolBundle { pool, selected_angles, selected_base_abs, estimator, beta0 });
        Ok(())
    }

    /// Runs (or returns the cached result of) one experiment mode.
    pub fn run(&mut self, family: Family, mode: usize) -> Result<&ModeResult> {
        match family {
            Family::Penalty => {
                if !(1..=5).contains(&mode) {
                    return Err(Error::InvalidArgument(format!("penalty mode {mode} not in 1..=5")));
                }
                if !self.penalty_results.contains_key(&mode) {
                    self.run_penalty(mode)?;
                }
                Ok(&self.penalty_results[&mode])
            }
            Family::Xy => {
                if !(1..=7).contains(&mode) {
                    return Err(Error::InvalidArgument(format!("xy mode {mode} not in 1..=7")));
                }
                if !self.xy_results.contains_key(&mode) {
                    self.run_xy(mode)?;
                }
                Ok(&self.xy_results[&mode])
            }
        }
    }

    fn penalty_param(&mut self, mode: usize, name: &str) -> Result<f64> {
        self.run(Family::Penalty, mode)?;
        let result = &self.penalty_results[&mode];
        result
            .params
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::InvalidArgument(format!("mode {mode} lacks parameter {name}")))
    }

    fn penalty_gamma_cost(&mut self, mode: usize) -> Result<f64> {
        self.run(Family::Penalty, mode)?;
        self.penalty_results[&mode]
            .gamma
            .ok_or_else(|| Error::InvalidArgument(format!("penalty mode {mode} has no gamma")))
    }

    fn xy_param(&mut self, mode: usize, name: &str) -> Result<f64> {
        self.run(Family::Xy, mode)?;
        let result = &self.xy_results[&mode];
        result
            .params
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::InvalidArgument(format!("xy mode {mode} lacks parameter {name}")))
    }

    fn penalty_lcu_at(&self, gamma: f64) -> Result<DiagonalLcu> {
        let instance = self.evaluator.instance;
        let f = hamming_penalty_values(instance.n(), instance.k)?;
        build_diagonal_lcu(&f, penalty_lcu_effective_gamma(instance, gamma))
    }

    fn run_penalty(&mut self, mode: usize) -> Result<()> {
        let cfg = self.config.clone();
        let instance = self.evaluator.instance;
        let result = match mode {
            1 => {
                let grid = cfg.grid_2d;
                let budget = grid * grid + cfg.refine_budget;
                let shared = std::sync::Mutex::new(Evaluator::new(instance, &cfg)?);
                let problem = OptProblem {
                    names: vec!["beta".into(), "gamma".into()],
                    bounds: vec![(-PI, PI), (-PI, PI)],
                    grid: vec![grid, grid],
                    budget,
                    objective: |p: &[f64]| {
                        let ev = shared.lock().unwrap();
                        let dist = ev.penalty_coherent_dist(p[0], p[1]);
                        ev.mean_h(&dist)
                    },
                };
                let trace = problem.run(&[])?;
                let (beta, gamma) = (trace.best_params[0], trace.best_params[1]);
                let dist = self.evaluator.penalty_coherent_dist(beta, gamma);
                ModeResult {
                    family: Family::Penalty,
                    mode,
                    label: "coherent penalty QAOA, <H> objective".into(),
                    params: param_pairs(&["beta", "gamma"], &[beta, gamma]),
                    gamma: None,
                    eta: 1.0,
                    report: self.evaluator.report(&dist, None, 1.0)?,
                    trace: Some(trace),
                    best_feasible_objective: self.evaluator.best_feasible(&dist),
                    distribution: dist,
                    gamma_log: Vec::new(),
                }
            }
            2 => {
                let beta = self.penalty_param(1, "beta")?;
                let gamma = self.penalty_param(1, "gamma")?;
                let lcu = self.penalty_lcu_at(gamma)?;
                let cost = lcu.gamma_cost();
                let dist = self.evaluator.penalty_mixture_dist(&lcu, beta, gamma);
                let eta = (1.0 / cost).min(1.0);
                ModeResult {
                    family: Family::Penalty,
                    mode,
                    label: "diagonal LCU mixture at frozen (beta*, gamma*)".into(),
                    params: param_pairs(&["beta", "gamma"], &[beta, gamma]),
                    gamma: Some(cost),
                    eta,
                    report: self.evaluator.report(&dist, Some(cost), eta)?,
                    trace: None,
                    best_feasible_objective: self.evaluator.best_feasible(&dist),
                    distribution: dist,
                    gamma_log: Vec::new(),
                }
            }
            3 => {
                let grid = cfg.grid_2d;
                let budget = grid * grid + cfg.refine_budget;
                let instance_n = instance.n();
                let instance_k = instance.k;
                let shared = std::sync::Mutex::new(Evaluator::new(instance, &cfg)?);
                let f = hamming_penalty_values(instance_n, instance_k)?;
                let objective = |p: &[f64]| {
                    let (beta, gamma) = (p[0], p[1]);
                    let lcu =
                        build_diagonal_lcu(&f, penalty_lcu_effective_gamma(instance, gamma))
                            .expect("valid penalty values");
                    let cost = lcu.gamma_cost();
                    let mut ev = shared.lock().unwrap();
                    let dist = ev.penalty_mixture_dist(&lcu, beta, gamma);
                    ev.upper_cvar(&dist, (1.0 / cost).min(1.0))
                };
                let problem = OptProblem {
                    names: vec!["beta".into(), "gamma".into()],
                    bounds: vec![(-PI, PI), (-PI, PI)],
                    grid: vec![grid, grid],
                    budget,
                    objective,
                };
                let start =
                    vec![self.penalty_param(1, "beta")?, self.penalty_param(1, "gamma")?];
                let trace = problem.run(std::slice::from_ref(&start))?;
                let (beta, gamma) = (trace.best_params[0], trace.best_params[1]);
                let lcu = self.penalty_lcu_at(gamma)?;
                let cost = lcu.gamma_cost();
                let gamma_log: Vec<(f64, f64)> = trace
                    .evaluations
                    .iter()
                    .map(|(p, _)| (p[1], self.penalty_lcu_at(p[1]).unwrap().gamma_cost()))
                    .collect();
                let dist = self.evaluator.penalty_mixture_dist(&lcu, beta, gamma);
                let eta = (1.0 / cost).min(1.0);
                ModeResult {
                    family: Family::Penalty,
                    mode,
                    label: "diagonal LCU mixture, (beta, gamma) re-optimized for CVaR".into(),
                    params: param_pairs(&["beta", "gamma"], &[beta, gamma]),
                    gamma: Some(cost),
                    eta,
                    report: self.evaluator.report(&dist, Some(cost), eta)?,
                    trace: Some(trace),
                    best_feasible_objective: self.evaluator.best_feasible(&dist),
                    distribution: dist,
                    gamma_log,
                }
            }
            4 => {
                let cost = self.penalty_gamma_cost(3)?;
                let eta = (1.0 / cost).min(1.0);
                let beta1 = self.penalty_param(1, "beta")?;
                let gamma1 = self.penalty_param(1, "gamma")?;
                let beta3 = self.penalty_param(3, "beta")?;
                let gamma3 = self.penalty_param(3, "gamma")?;
                let thetas: Vec<f64> = self.penalty_lcu_at(gamma1)?.thetas().to_vec();
                // The frozen mode-2 configuration sits inside this search
                // space: seed every branch angle at both parameter sets.
                let mut candidates = Vec::new();
                for &theta in &thetas {
                    candidates.push(vec![beta1, gamma1, theta]);
                    candidates.push(vec![beta3, gamma3, theta]);
                }
                let grid = cfg.grid_3d;
                let budget = grid * grid * grid + candidates.len() + cfg.refine_budget;
                let shared = std::sync::Mutex::new(Evaluator::new(instance, &cfg)?);
                let problem = OptProblem {
                    names: vec!["beta".into(), "gamma".into(), "theta".into()],
                    bounds: vec![(-PI, PI), (-PI, PI), (0.0, TAU)],
                    grid: vec![grid, grid, grid],
                    budget,
                    objective: |p: &[f64]| {
                        let mut ev = shared.lock().unwrap();
                        let dist = ev.penalty_single_dist(p[0], p[1], p[2]);
                        ev.upper_cvar(&dist, eta)
                    },
                };
                let trace = problem.run(&candidates)?;
                let best = trace.best_params.clone();
                let dist = self.evaluator.penalty_single_dist(best[0], best[1], best[2]);
                ModeResult {
                    family: Family::Penalty,
                    mode,
                    label: "single LCU basis circuit over (beta, gamma, theta)".into(),
                    params: param_pairs(&["beta", "gamma", "theta"], &best),
                    gamma: Some(cost),
                    eta,
                    report: self.evaluator.report(&dist, Some(cost), eta)?,
                    trace: Some(trace),
                    best_feasible_objective: self.evaluator.best_feasible(&dist),
                    distribution: dist,
                    gamma_log: Vec::new(),
                }
            }
            5 => {
                let cost = self.penalty_gamma_cost(3)?;
                let eta = (1.0 / cost).min(1.0);
                let grid = cfg.grid_2d;
                let budget = grid * grid + 1 + cfg.refine_budget;
                let shared = std::sync::Mutex::new(Evaluator::new(instance, &cfg)?);
                let problem = OptProblem {
                    names: vec!["beta".into(), "gamma".into()],
                    bounds: vec![(-PI, PI), (-PI, PI)],
                    grid: vec![grid, grid],
                    budget,
                    objective: |p: &[f64]| {
                        let ev = shared.lock().unwrap();
                        let dist = ev.penalty_coherent_dist(p[0], p[1]);
                        ev.upper_cvar(&dist, eta)
                    },
                };
                let start =
                    vec![self.penalty_param(1, "beta")?, self.penalty_param(1, "gamma")?];
                let trace = problem.run(std::slice::from_ref(&start))?;
                let (beta, gamma) = (trace.best_params[0], trace.best_params[1]);
                let dist = self.evaluator.penalty_coherent_dist(beta, gamma);
                ModeResult {
                    family: Family::Penalty,
                    mode,
                    label: "coherent penalty QAOA re-optimized for CVaR".into(),
                    params: param_pairs(&["beta", "gamma"], &[beta, gamma]),
                    gamma: Some(cost),
                    eta,
                    report: self.evaluator.report(&dist, Some(cost), eta)?,
                    trace: Some(trace),
                    best_feasible_objective: self.evaluator.best_feasible(&dist),
                    distribution: dist,
                    gamma_log: Vec::new(),
                }
            }
            _ => unreachable!("mode validated"),
        };
        self.penalty_results.insert(mode, result);
        Ok(())
    }

    fn ensure_pool(&mut self) -> Result<()> {
        if self.xy_pool.is_some() {
            return Ok(());
        }
        let beta0 = self.xy_param(1, "beta")?;
        let instance = self.evaluator.instance;
        let (pool, selected) = build_su2_pool(
            instance.n(),
            beta0,
            self.config.pool_size,
            self.config.circuits,
            self.config.gamma_samples,
            self.config.seed,
        )?;
        let estimator =
            XyGammaEstimator::from_seed(instance.n(), self.config.gamma_samples, self.config.seed)?;
        let selected_angles: Vec<EulerAngles> =
            selected.iter().map(|&i| pool.branches[i].angles).collect();
        let selected_base_abs: Vec<f64> =
            selected.iter().map(|&i| pool.branches[i].abs_weight).collect();
        self.xy_pool =
            Some(XyPoolBundle { pool, selected_angles, selected_base_abs, estimator, beta0 });
        Ok(())
    }

    fn run_xy(&mut self, mode: usize) -> Result<()> {
        let cfg = self.config.clone();
        let instance = self.evaluator.instance;
        let eta0 = warm_start_feasibility(instance.n(), instance.k);
        let steps = cfg.trotter_steps;
        let result = match mode {
            1 => {
                let grid = cfg.grid_2d;
                let budget = grid * grid + cfg.refine_budget;
                let shared = std::sync::Mutex::new(Evaluator::new(instance, &cfg)?);
                let problem = OptProblem {
                    names: vec!["beta".into(), "gamma".into()],
                    bounds: vec![(-PI, PI), (-PI, PI)],
                    grid: vec![grid, grid],
                    budget,
                    objective: |p: &[f64]| {
                        let mut ev = shared.lock().unwrap();
                        let dist = ev.xy_coherent_dist(p[0], p[1], steps);
                        ev.upper_cvar(&dist, eta0) + 1e-5 * ev.p_opt(&dist)
                    },
                };
                let trace = problem.run(&[])?;
                let (beta, gamma) = (trace.best_params[0], trace.best_params[1]);
                let dist = self.evaluator.xy_coherent_dist(beta, gamma, steps);
                ModeResult {
                    family: Family::Xy,
                    mode,
                    label: "coherent Trotterized XY-QAOA, CVaR objective".into(),
                    params: param_pairs(&["beta", "gamma"], &[beta, gamma]),
                    gamma: None,
                    eta: eta0,
                    report: self.evaluator.report(&dist, None, eta0)?,
                    trace: Some(trace),
                    best_feasible_objective: self.evaluator.best_feasible(&dist),
                    distribution: dist,
                    gamma_log: Vec::new(),
                }
            }
            2 => {
                let beta = self.xy_param(1, "beta")?;
                let gamma = self.xy_param(1, "gamma")?;
                self.ensure_pool()?;
                let bundle = self.xy_pool.as_ref().unwrap();
                let cost = bundle.pool.gamma_hat;
                let uniform: Vec<(EulerAngles, f64)> = bundle
                    .selected_angles
                    .iter()
                    .map(|&g| (g, 1.0 / bundle.selected_angles.len() as f64))
                    .collect();
                let dist = self.evaluator.xy_mixture_dist(gamma, &uniform);
                let eta = (eta0 / cost).min(1.0);
                ModeResult {
                    family: Family::Xy,
                    mode,
                    label: "sampled XY LCU circuits at frozen (beta*, gamma*)".into(),
                    params: param_pairs(&["beta", "gamma"], &[beta, gamma]),
                    gamma: Some(cost),
                    eta,
                    report: self.evaluator.report(&dist, Some(cost), eta)?,
                    trace: None,
                    best_feasible_objective: self.evaluator.best_feasible(&dist),
                    distribution: dist,
                    gamma_log: Vec::new(),
                }
            }
            3 => {
                self.run(Family::Xy, 2)?;
                let bundle = self.xy_pool.as_ref().unwrap();
                let n = instance.n();
                let grid = cfg.grid_2d;
                let budget = grid * grid + 1 + cfg.refine_budget;
                let shared = std::sync::Mutex::new(Evaluator::new(instance, &cfg)?);
                let problem = OptProblem {
                    names: vec!["beta".into(), "gamma".into()],
                    bounds: vec![(-PI, PI), (-PI, PI)],
                    grid: vec![grid, grid],
                    budget,
                    objective: |p: &[f64]| {
                        let (beta, gamma) = (p[0], p[1]);
                        let weights = bundle.weights_at(n, beta);
                        let (cost, _) = bundle.estimator.estimate(beta);
                        let mut ev = shared.lock().unwrap();
                        let dist = ev.xy_mixture_dist(gamma, &weights);
                        ev.upper_cvar(&dist, (eta0 / cost).min(1.0)) + 1e-5 * ev.p_opt(&dist)
                    },
                };
                let start = vec![bundle.beta0, self.xy_results[&1].params[1].1];
                let trace = problem.run(std::slice::from_ref(&start))?;
                let (beta, gamma) = (trace.best_params[0], trace.best_params[1]);
                let bundle = self.xy_pool.as_ref().unwrap();
                let gamma_log: Vec<(f64, f64)> = trace
                    .evaluations
                    .iter()
                    .map(|(p, _)| (p[0], bundle.estimator.estimate(p[0]).0))
                    .collect();
                let (cost, _) = bundle.estimator.estimate(beta);
                let weights = bundle.weights_at(n, beta);
                let dist = self.evaluator.xy_mixture_dist(gamma, &weights);
                let eta = (eta0 / cost).min(1.0);
                ModeResult {
                    family: Family::Xy,
                    mode,
                    label: "sampled XY LCU circuits, (beta, gamma) re-optimized".into(),
                    params: param_pairs(&["beta", "gamma"], &[beta, gamma]),
                    gamma: Some(cost),
                    eta,
                    report: self.evaluator.report(&dist, Some(cost), eta)?,
                    trace: Some(trace),
                    best_feasible_objective: self.evaluator.best_feasible(&dist),
                    distribution: dist,
                    gamma_log,
                }
            }
            4 => {
                self.run(Family::Xy, 3)?;
                let cost = self.xy_results[&3].gamma.expect("mode 3 has gamma");
                let eta = (eta0 / cost).min(1.0);
                let gamma3 = self.xy_results[&3].params[1].1;
                let bundle = self.xy_pool.as_ref().unwrap();
                // Seed with the fixed circuits' angles at mode 3's gamma.
                let mut candidates: Vec<Vec<f64>> = bundle
                    .selected_angles
                    .iter()
                    .map(|g| vec![gamma3, g.theta, g.chi])
                    .collect();
                candidates.dedup();
                let grid = cfg.grid_3d;
                let budget = grid * grid * grid + candidates.len() + cfg.refine_budget;
                let shared = std::sync::Mutex::new(Evaluator::new(instance, &cfg)?);
                let problem = OptProblem {
                    names: vec!["gamma".into(), "vartheta".into(), "chi".into()],
                    bounds: vec![(-PI, PI), (0.0, PI), (0.0, 2.0 * TAU)],
                    grid: vec![grid, grid, grid],
                    budget,
                    objective: |p: &[f64]| {
                        let g = EulerAngles { alpha: 0.0, theta: p[1], chi: p[2] };
                        let mut ev = shared.lock().unwrap();
                        let dist = ev.xy_single_dist(p[0], g, None);
                        ev.upper_cvar(&dist, eta) + 1e-5 * ev.p_opt(&dist)
                    },
                };
                let trace = problem.run(&candidates)?;
                let best = trace.best_params.clone();
                let g = EulerAngles { alpha: 0.0, theta: best[1], chi: best[2] };
                let dist = self.evaluator.xy_single_dist(best[0], g, None);
                ModeResult {
                    family: Family::Xy,
                    mode,
                    label: "single XY LCU basis circuit over (gamma, vartheta, chi)".into(),
                    params: param_pairs(&["gamma", "vartheta", "chi"], &best),
                    gamma: Some(cost),
                    eta,
                    report: self.evaluator.report(&dist, Some(cost), eta)?,
                    trace: Some(trace),
                    best_feasible_objective: self.evaluator.best_feasible(&dist),
                    distribution: dist,
                    gamma_log: Vec::new(),
                }
            }
            5 => {
                self.run(Family::Xy, 3)?;
                let cost = self.xy_results[&3].gamma.expect("mode 3 has gamma");
                let eta = (eta0 / cost).min(1.0);
                let grid = cfg.grid_2d;
                let budget = grid * grid + 1 + cfg.refine_budget;
                let shared = std::sync::Mutex::new(Evaluator::new(instance, &cfg)?);
                let problem = OptProblem {
                    names: vec!["beta".into(), "gamma".into()],
                    bounds: vec![(-PI, PI), (-PI, PI)],
                    grid: vec![grid, grid],
                    budget,
                    objective: |p: &[f64]| {
                        let mut ev = shared.lock().unwrap();
                        let dist = ev.xy_coherent_dist(p[0], p[1], steps);
                        ev.upper_cvar(&dist, eta) + 1e-5 * ev.p_opt(&dist)
                    },
                };
                let start =
                    vec![self.xy_results[&1].params[0].1, self.xy_results[&1].params[1].1];
                let trace = problem.run(std::slice::from_ref(&start))?;
                let (beta, gamma) = (trace.best_params[0], trace.best_params[1]);
                let dist = self.evaluator.xy_coherent_dist(beta, gamma, steps);
                ModeResult {
                    family: Family::Xy,
                    mode,
                    label: "coherent XY-QAOA re-optimized at the LCU risk level".into(),
                    params: param_pairs(&["beta", "gamma"], &[beta, gamma]),
                    gamma: Some(cost),
                    eta,
                    report: self.evaluator.report(&dist, Some(cost), eta)?,
                    trace: Some(trace),
                    best_feasible_objective: self.evaluator.best_feasible(&dist),
                    distribution: dist,
                    gamma_log: Vec::new(),
                }
            }
            6 => {
                let cost = self.penalty_gamma_cost(3)?;
                let eta = (1.0 / cost).min(1.0);
                let grid = cfg.grid_2d;
                let budget = grid * grid + cfg.refine_budget;
                let shared = std::sync::Mutex::new(Evaluator::new(instance, &cfg)?);
                let problem = OptProblem {
                    names: vec!["beta".into(), "gamma".into()],
                    bounds: vec![(-PI, PI), (-PI, PI)],
                    grid: vec![grid, grid],
                    budget,
                    objective: |p: &[f64]| {
                        let mut ev = shared.lock().unwrap();
                        let dist = ev.xy_coherent_dist(p[0], p[1], steps);
                        ev.upper_cvar(&dist, eta) + 1e-5 * ev.p_opt(&dist)
                    },
                };
                let trace = problem.run(&[])?;
                let (beta, gamma) = (trace.best_params[0], trace.best_params[1]);
                let dist = self.evaluator.xy_coherent_dist(beta, gamma, steps);
                ModeResult {
                    family: Family::Xy,
                    mode,
                    label: "coherent XY-QAOA at the penalty family's risk level".into(),
                    params: param_pairs(&["beta", "gamma"], &[beta, gamma]),
                    gamma: Some(cost),
                    eta,
                    report: self.evaluator.report(&dist, Some(cost), eta)?,
                    trace: Some(trace),
                    best_feasible_objective: self.evaluator.best_feasible(&dist),
                    distribution: dist,
                    gamma_log: Vec::new(),
                }
            }
            7 => {
                let cost = self.penalty_gamma_cost(3)?;
                let eta = (1.0 / cost).min(1.0);
                self.run(Family::Xy, 4)?;
                let mode4 = &self.xy_results[&4];
                let candidate = vec![
                    0.0,
                    mode4.params[0].1,
                    0.0,
                    mode4.params[1].1,
                    mode4.params[2].1,
                ];
                let grid = cfg.grid_5d;
                let budget = grid.pow(5) + 1 + cfg.refine_budget;
                let shared = std::sync::Mutex::new(Evaluator::new(instance, &cfg)?);
                let problem = OptProblem {
                    names: vec![
                        "beta".into(),
                        "gamma".into(),
                        "alpha".into(),
                        "vartheta".into(),
                        "chi".into(),
                    ],
                    bounds: vec![(-PI, PI), (-PI, PI), (0.0, TAU), (0.0, PI), (0.0, 2.0 * TAU)],
                    grid: vec![grid; 5],
                    budget,
                    objective: |p: &[f64]| {
                        let g = EulerAngles { alpha: p[2], theta: p[3], chi: p[4] };
                        let mut ev = shared.lock().unwrap();
                        let dist = ev.xy_single_dist(p[1], g, Some(p[0]));
                        ev.upper_cvar(&dist, eta) + 1e-5 * ev.p_opt(&dist)
                    },
                };
                let trace = problem.run(std::slice::from_ref(&candidate))?;
                let best = trace.best_params.clone();
                let g = EulerAngles { alpha: best[2], theta: best[3], chi: best[4] };
                let dist = self.evaluator.xy_single_dist(best[1], g, Some(best[0]));
                ModeResult {
                    family: Family::Xy,
                    mode,
                    label: "single XY LCU basis circuit over (beta, gamma, alpha, vartheta, chi)"
                        .into(),
                    params: param_pairs(&["beta", "gamma", "alpha", "vartheta", "chi"], &best),
                    gamma: Some(cost),
                    eta,
                    report: self.evaluator.report(&dist, Some(cost), eta)?,
                    trace: Some(trace),
                    best_feasible_objective: self.evaluator.best_feasible(&dist),
                    distribution: dist,
                    gamma_log: Vec::new(),
                }
            }
            _ => unreachable!("mode validated"),
        };
        self.xy_results.insert(mode, result);
        Ok(())
    }
}

/// Convenience wrapper running one mode (and its prerequisites) from scratch.
pub fn run_experiment_mode(
    instance: &DksInstance,
    family: Family,
    mode: usize,
    config: ExperimentConfig,
) -> Result<ModeResult> {
    let mut runner = ExperimentRunner::new(instance, config)?;
    runner.run(family, mode)?;
    Ok(match family {
        Family::Penalty => runner.penalty_results.remove(&mode).expect("just computed"),
        Family::Xy => runner.xy_results.remove(&mode).expect("just computed"),
    })
}
