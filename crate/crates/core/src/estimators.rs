//! Metrics over sample sets and exact distributions: CVaR (both tails),
//! expectation values, feasibility and optimality probabilities, and the CVaR
//! sandwich bound around the coherent expectation.

use crate::{Error, Result};

/// One weighted outcome: a measured bitstring, the LCU branch it came from (if
/// any), and a nonnegative weight (a shot count or probability mass).
#[derive(Clone, Debug, PartialEq)]
pub struct SampleRecord {
    pub bits: u64,
    pub branch: Option<usize>,
    pub weight: f64,
}

/// A collection of weighted bitstring outcomes.
#[derive(Clone, Debug, Default)]
pub struct SampleSet {
    n: usize,
    records: Vec<SampleRecord>,
}

impl SampleSet {
    pub fn new(n: usize) -> Self {
        SampleSet { n, records: Vec::new() }
    }

    pub fn from_counts(n: usize, counts: impl IntoIterator<Item = (u64, Option<usize>, u64)>) -> Self {
        let records = counts
            .into_iter()
            .map(|(bits, branch, count)| SampleRecord { bits, branch, weight: count as f64 })
            .collect();
        SampleSet { n, records }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn records(&self) -> &[SampleRecord] {
        &self.records
    }

    pub fn push(&mut self, record: SampleRecord) {
        debug_assert!(record.weight >= 0.0);
        self.records.push(record);
    }

    pub fn total_weight(&self) -> f64 {
        self.records.iter().map(|r| r.weight).sum()
    }

    /// Collapses records to (bitstring, total weight), ordered by bitstring.
    pub fn masses(&self) -> Vec<(u64, f64)> {
        let mut map = std::collections::BTreeMap::new();
        for r in &self.records {
            *map.entry(r.bits).or_insert(0.0) += r.weight;
        }
        map.into_iter().collect()
    }

    /// Total weight per branch index, ordered by branch.
    pub fn branch_weights(&self) -> Vec<(usize, f64)> {
        let mut map = std::collections::BTreeMap::new();
        for r in &self.records {
            if let Some(b) = r.branch {
                *map.entry(b).or_insert(0.0) += r.weight;
            }
        }
        map.into_iter().collect()
    }
}

/// Converts a dense probability vector (index = bitstring) to mass pairs.
pub fn dense_masses(probs: &[f64]) -> Vec<(u64, f64)> {
    probs
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(x, &p)| (x as u64, p))
        .collect()
}

/// Which tail of the distribution CVaR averages over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tail {
    /// Worst (smallest) values.
    Lower,
    /// Best (largest) values.
    Upper,
}

/// Weighted CVaR at level `alpha`: the mean over exactly an `alpha` fraction
/// of the probability mass taken from the chosen tail. The boundary atom is
/// included fractionally, so the result is continuous in `alpha`.
///
/// Ties between equal values keep the input order, so callers that pass
/// bitstring-ordered inputs get deterministic results.
pub fn cvar(values: &[f64], weights: &[f64], alpha: f64, tail: Tail) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} not in (0, 1]")));
    }
    if values.len() != weights.len() {
        return Err(Error::DimensionMismatch { expected: values.len(), got: weights.len() });
    }
    let total: f64 = weights.iter().sum();
    if !total.is_finite() || total <= 0.0 {
        return Err(Error::InvalidArgument("total weight must be positive".into()));
    }
    if weights.iter().any(|&w| w < 0.0) {
        return Err(Error::InvalidArgument("negative weight".into()));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    match tail {
        Tail::Lower => order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap()),
        Tail::Upper => order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap()),
    }
    let target = alpha * total;
    let mut taken = 0.0;
    let mut acc = 0.0;
    for &i in &order {
        if weights[i] == 0.0 {
            continue;
        }
        let take = weights[i].min(target - taken);
        acc += take * values[i];
        taken += take;
        if taken >= target - 1e-300 {
            break;
        }
    }
    Ok(acc / target)
}

/// Checks the CVaR sandwich around the coherent expectation:
/// `CVaR_{1/Γ}(f(X̃)) ≤ E[f(X)] ≤ upper CVaR_{1/Γ}(f(X̃))`.
///
/// `coherent` and `lcu` are densities over the same index space and `f` the
/// per-bitstring objective. Returns `(E - lower CVaR, upper CVaR - E)`; both
/// must be nonnegative up to numerical error.
pub fn cvar_sandwich_check(
    coherent: &[f64],
    lcu: &[f64],
    gamma: f64,
    f: &[f64],
) -> Result<(f64, f64)> {
    if coherent.len() != lcu.len() || coherent.len() != f.len() {
        return Err(Error::DimensionMismatch { expected: coherent.len(), got: lcu.len() });
    }
    let total: f64 = coherent.iter().sum();
    let expectation: f64 =
        coherent.iter().zip(f).map(|(&p, &v)| p * v).sum::<f64>() / total;
    let alpha = (1.0 / gamma).min(1.0);
    let lower = cvar(f, lcu, alpha, Tail::Lower)?;
    let upper = cvar(f, lcu, alpha, Tail::Upper)?;
    Ok((expectation - lower, upper - expectation))
}

/// Per-bitstring classification callbacks used to build a [`MetricReport`].
pub struct ObjectiveSpec<'a> {
    /// Objective including penalty terms (the quantity reported as `⟨H⟩`).
    pub penalty_objective: &'a dyn Fn(u64) -> f64,
    pub is_feasible: &'a dyn Fn(u64) -> bool,
    /// Exact feasible optimum, when known.
    pub optimum: Option<f64>,
}

/// Metrics of one experiment: expectation value, sampling overhead, CVaR pair
/// at risk level `eta`, feasibility and optimality probabilities, and the
/// expectation conditioned on feasibility.
#[derive(Clone, Debug)]
pub struct MetricReport {
    pub expectation: f64,
    pub gamma: Option<f64>,
    pub eta: f64,
    pub cvar_lower: f64,
    pub cvar_upper: f64,
    pub p_feasible: f64,
    pub p_optimal: Option<f64>,
    pub expectation_given_feasible: Option<f64>,
}

/// Builds a [`MetricReport`] from weighted bitstring masses.
///
/// Conditional fields are `None` when the feasible support is empty, and
/// `p_optimal` is `None` when the optimum is unknown.
pub fn metric_report(
    masses: &[(u64, f64)],
    objective: &ObjectiveSpec,
    gamma: Option<f64>,
    eta: f64,
) -> Result<MetricReport> {
    let total: f64 = masses.iter().map(|(_, w)| w).sum();
    if !total.is_finite() || total <= 0.0 {
        return Err(Error::InvalidArgument("empty distribution".into()));
    }
    let values: Vec<f64> = masses.iter().map(|&(x, _)| (objective.penalty_objective)(x)).collect();
    let weights: Vec<f64> = masses.iter().map(|&(_, w)| w).collect();
    let expectation = values.iter().zip(&weights).map(|(v, w)| v * w).sum::<f64>() / total;
    let cvar_lower = cvar(&values, &weights, eta, Tail::Lower)?;
    let cvar_upper = cvar(&values, &weights, eta, Tail::Upper)?;

    let mut feasible_mass = 0.0;
    let mut feasible_value = 0.0;
    let mut optimal_mass = 0.0;
    for (&(x, w), &v) in masses.iter().zip(&values) {
        if (objective.is_feasible)(x) {
            feasible_mass += w;
            feasible_value += w * v;
            if let Some(opt) = objective.optimum {
                if (v - opt).abs() <= 1e-6 {
                    optimal_mass += w;
                }
            }
        }
    }
    let p_feasible = feasible_mass / total;
    let p_optimal = objective.optimum.map(|_| optimal_mass / total);
    let expectation_given_feasible =
        (feasible_mass > 0.0).then(|| feasible_value / feasible_mass);

    Ok(MetricReport {
        expectation,
        gamma,
        eta,
        cvar_lower,
        cvar_upper,
        p_feasible,
        p_optimal,
        expectation_given_feasible,
    })
}
