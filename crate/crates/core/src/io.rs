//! Versioned text formats for decompositions, pools, sample sets, graphs,
//! metric reports, optimization traces, and distribution histograms.
//!
//! Every file starts with `# fourier-lcu <kind> v<version>` followed by a
//! `# config_hash <hex> crate_version <semver>` line, so outputs are
//! byte-diffable across runs with identical configuration. Floats are written
//! with Rust's shortest round-trip formatting (re-parsing reproduces the
//! exact bits).
//!
//! Bitstrings are written as binary with qubit 0 as the rightmost character.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::estimators::{MetricReport, SampleRecord, SampleSet};
use crate::lcu::diagonal::{build_diagonal_lcu, DiagonalLcu};
use crate::lcu::su2::{EulerAngles, Su2Branch, Su2Pool};
use crate::problems::{build_dks, DksInstance, Graph};
use crate::vqopt::OptTrace;
use crate::{Error, Result};

/// FNV-1a 64-bit hash, used to stamp outputs with their configuration.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Standard two-line header for all output files.
pub fn file_header(kind: &str, config_hash: u64) -> String {
    format!(
        "# fourier-lcu {kind} v1\n# config_hash {config_hash:016x} crate_version {}\n",
        env!("CARGO_PKG_VERSION")
    )
}

fn parse_err(context: &str, message: impl Into<String>) -> Error {
    Error::Parse { context: context.to_string(), message: message.into() }
}

fn body_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'))
}

fn parse_f64(context: &str, token: &str) -> Result<f64> {
    token.parse::<f64>().map_err(|e| parse_err(context, format!("bad float `{token}`: {e}")))
}

fn parse_usize(context: &str, token: &str) -> Result<usize> {
    token.parse::<usize>().map_err(|e| parse_err(context, format!("bad integer `{token}`: {e}")))
}

/// Serializes a diagonal LCU: the defining `(f, γ)` pair plus the derived
/// coefficients (as re/im pairs), angles, cost, and branch distribution.
pub fn diagonal_lcu_record(lcu: &DiagonalLcu, config_hash: u64) -> String {
    let mut out = file_header("diagonal-lcu", config_hash);
    let _ = writeln!(out, "gamma {}", lcu.gamma());
    let _ = writeln!(out, "m {}", lcu.m());
    for (k, f) in lcu.f_values().iter().enumerate() {
        let _ = writeln!(out, "f {k} {f}");
    }
    for (j, (c, theta)) in lcu.coeffs().iter().zip(lcu.thetas()).enumerate() {
        let _ = writeln!(out, "coeff {j} {} {}", c.re, c.im);
        let _ = writeln!(out, "theta {j} {theta}");
    }
    let _ = writeln!(out, "gamma_cost {}", lcu.gamma_cost());
    for &(j, q) in lcu.branch_probs() {
        let _ = writeln!(out, "branch {j} {q}");
    }
    out
}

/// Rebuilds a diagonal LCU from its record by re-running the construction on
/// the stored `(f, γ)` and verifying the stored coefficients match.
pub fn load_diagonal_lcu(text: &str) -> Result<DiagonalLcu> {
    const CTX: &str = "diagonal-lcu";
    let mut gamma = None;
    let mut f_values: Vec<(usize, f64)> = Vec::new();
    let mut coeffs: Vec<(usize, Complex64)> = Vec::new();
    for line in body_lines(text) {
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("gamma") => {
                gamma = Some(parse_f64(CTX, tokens.next().unwrap_or_default())?);
            }
            Some("f") => {
                let k = parse_usize(CTX, tokens.next().unwrap_or_default())?;
                let v = parse_f64(CTX, tokens.next().unwrap_or_default())?;
                f_values.push((k, v));
            }
            Some("coeff") => {
                let j = parse_usize(CTX, tokens.next().unwrap_or_default())?;
                let re = parse_f64(CTX, tokens.next().unwrap_or_default())?;
                let im = parse_f64(CTX, tokens.next().unwrap_or_default())?;
                coeffs.push((j, Complex64::new(re, im)));
            }
            Some("m") | Some("theta") | Some("gamma_cost") | Some("branch") => {}
            other => return Err(parse_err(CTX, format!("unknown field {other:?}"))),
        }
    }
    let gamma = gamma.ok_or_else(|| parse_err(CTX, "missing gamma"))?;
    f_values.sort_by_key(|&(k, _)| k);
    let f: Vec<f64> = f_values.iter().map(|&(_, v)| v).collect();
    let lcu = build_diagonal_lcu(&f, gamma)?;
    for (j, stored) in coeffs {
        if j > lcu.m() || (lcu.coeffs()[j] - stored).norm() > 1e-12 {
            return Err(parse_err(CTX, format!("stored coefficient {j} disagrees with rebuild")));
        }
    }
    Ok(lcu)
}

/// Serializes an SU(2) pool (angles plus complex weights) and the selected
/// branch indices, for reuse across runs.
pub fn su2_pool_record(pool: &Su2Pool, selected: &[usize], config_hash: u64) -> String {
    let mut out = file_header("su2-pool", config_hash);
    let _ = writeln!(out, "n {}", pool.n);
    let _ = writeln!(out, "beta {}", pool.beta);
    let _ = writeln!(out, "alpha_hat {}", pool.alpha_hat);
    let _ = writeln!(out, "gamma_hat {}", pool.gamma_hat);
    let _ = writeln!(out, "gamma_sigma {}", pool.gamma_sigma);
    for b in &pool.branches {
        let _ = writeln!(
            out,
            "branch {} {} {} {} {}",
            b.angles.alpha, b.angles.theta, b.angles.chi, b.weight.re, b.weight.im
        );
    }
    for &s in selected {
        let _ = writeln!(out, "selected {s}");
    }
    out
}

/// Loads an SU(2) pool record; returns the pool and the selected indices.
pub fn load_su2_pool(text: &str) -> Result<(Su2Pool, Vec<usize>)> {
    const CTX: &str = "su2-pool";
    let mut n = None;
    let mut beta = None;
    let mut alpha_hat = None;
    let mut gamma_hat = None;
    let mut gamma_sigma = None;
    let mut branches = Vec::new();
    let mut selected = Vec::new();
    for line in body_lines(text) {
        let mut t = line.split_whitespace();
        match t.next() {
            Some("n") => n = Some(parse_usize(CTX, t.next().unwrap_or_default())?),
            Some("beta") => beta = Some(parse_f64(CTX, t.next().unwrap_or_default())?),
            Some("alpha_hat") => alpha_hat = Some(parse_f64(CTX, t.next().unwrap_or_default())?),
            Some("gamma_hat") => gamma_hat = Some(parse_f64(CTX, t.next().unwrap_or_default())?),
            Some("gamma_sigma") => {
                gamma_sigma = Some(parse_f64(CTX, t.next().unwrap_or_default())?)
            }
            Some("branch") => {
                let vals: Vec<f64> = t
                    .map(|tok| parse_f64(CTX, tok))
                    .collect::<Result<_>>()?;
                if vals.len() != 5 {
                    return Err(parse_err(CTX, "branch line needs 5 fields"));
                }
                let weight = Complex64::new(vals[3], vals[4]);
                branches.push(Su2Branch {
                    angles: EulerAngles { alpha: vals[0], theta: vals[1], chi: vals[2] },
                    weight,
                    phase: weight.arg(),
                    abs_weight: weight.norm(),
                });
            }
            Some("selected") => selected.push(parse_usize(CTX, t.next().unwrap_or_default())?),
            other => return Err(parse_err(CTX, format!("unknown field {other:?}"))),
        }
    }
    if branches.is_empty() {
        return Err(parse_err(CTX, "no branches"));
    }
    let total_abs: f64 = branches.iter().map(|b| b.abs_weight).sum();
    let sample_probs = branches.iter().map(|b| b.abs_weight / total_abs).collect();
    Ok((
        Su2Pool {
            n: n.ok_or_else(|| parse_err(CTX, "missing n"))?,
            beta: beta.ok_or_else(|| parse_err(CTX, "missing beta"))?,
            branches,
            alpha_hat: alpha_hat.ok_or_else(|| parse_err(CTX, "missing alpha_hat"))?,
            gamma_hat: gamma_hat.ok_or_else(|| parse_err(CTX, "missing gamma_hat"))?,
            gamma_sigma: gamma_sigma.unwrap_or(0.0),
            sample_probs,
        },
        selected,
    ))
}

fn bits_string(bits: u64, n: usize) -> String {
    (0..n).rev().map(|q| if (bits >> q) & 1 == 1 { '1' } else { '0' }).collect()
}

fn parse_bits(context: &str, s: &str) -> Result<u64> {
    u64::from_str_radix(s, 2).map_err(|e| parse_err(context, format!("bad bitstring `{s}`: {e}")))
}

/// Serializes a sample set: one `record <bits> <branch|-> <weight>` line per
/// distinct (bitstring, branch) pair. `metadata` pairs (such as the shot
/// allocation policy) are written as `meta <key> <value>` lines.
pub fn sample_set_record_with(
    samples: &SampleSet,
    config_hash: u64,
    metadata: &[(&str, String)],
) -> String {
    let mut out = file_header("samples", config_hash);
    let _ = writeln!(out, "n {}", samples.n());
    for (key, value) in metadata {
        let _ = writeln!(out, "meta {key} {value}");
    }
    append_sample_records(&mut out, samples);
    out
}

/// [`sample_set_record_with`] without metadata.
pub fn sample_set_record(samples: &SampleSet, config_hash: u64) -> String {
    sample_set_record_with(samples, config_hash, &[])
}

fn append_sample_records(out: &mut String, samples: &SampleSet) {
    let mut merged: std::collections::BTreeMap<(u64, Option<usize>), f64> =
        std::collections::BTreeMap::new();
    for r in samples.records() {
        *merged.entry((r.bits, r.branch)).or_insert(0.0) += r.weight;
    }
    for ((bits, branch), weight) in merged {
        let branch = branch.map_or_else(|| "-".to_string(), |b| b.to_string());
        let _ = writeln!(out, "record {} {branch} {weight}", bits_string(bits, samples.n()));
    }
}

pub fn load_sample_set(text: &str) -> Result<SampleSet> {
    const CTX: &str = "samples";
    let mut n = None;
    let mut records = Vec::new();
    for line in body_lines(text) {
        let mut t = line.split_whitespace();
        match t.next() {
            Some("n") => n = Some(parse_usize(CTX, t.next().unwrap_or_default())?),
            Some("meta") => {}
            Some("record") => {
                let bits = parse_bits(CTX, t.next().unwrap_or_default())?;
                let branch_tok = t.next().unwrap_or_default();
                let branch = if branch_tok == "-" {
                    None
                } else {
                    Some(parse_usize(CTX, branch_tok)?)
                };
                let weight = parse_f64(CTX, t.next().unwrap_or_default())?;
                records.push(SampleRecord { bits, branch, weight });
            }
            other => return Err(parse_err(CTX, format!("unknown field {other:?}"))),
        }
    }
    let n = n.ok_or_else(|| parse_err(CTX, "missing n"))?;
    let mut set = SampleSet::new(n);
    for r in records {
        set.push(r);
    }
    Ok(set)
}

/// Edge-list graph format: `n`, optional `k`/`lambda` for instances, then
/// one `edge i j w` line per edge.
pub fn graph_record(graph: &Graph, instance: Option<&DksInstance>, config_hash: u64) -> String {
    let mut out = file_header("graph", config_hash);
    let _ = writeln!(out, "n {}", graph.n_nodes());
    if let Some(inst) = instance {
        let _ = writeln!(out, "k {}", inst.k);
        let _ = writeln!(out, "lambda {}", inst.lambda);
    }
    for &(i, j, w) in graph.edges() {
        let _ = writeln!(out, "edge {i} {j} {w}");
    }
    out
}

/// Loads a graph file; returns the graph and `k` when the file carries one.
pub fn load_graph(text: &str) -> Result<(Graph, Option<usize>, Option<f64>)> {
    const CTX: &str = "graph";
    let mut n = None;
    let mut k = None;
    let mut lambda = None;
    let mut edges = Vec::new();
    for line in body_lines(text) {
        let mut t = line.split_whitespace();
        match t.next() {
            Some("n") => n = Some(parse_usize(CTX, t.next().unwrap_or_default())?),
            Some("k") => k = Some(parse_usize(CTX, t.next().unwrap_or_default())?),
            Some("lambda") => lambda = Some(parse_f64(CTX, t.next().unwrap_or_default())?),
            Some("edge") => {
                let i = parse_usize(CTX, t.next().unwrap_or_default())?;
                let j = parse_usize(CTX, t.next().unwrap_or_default())?;
                let w = parse_f64(CTX, t.next().unwrap_or_default())?;
                edges.push((i, j, w));
            }
            other => return Err(parse_err(CTX, format!("unknown field {other:?}"))),
        }
    }
    let n = n.ok_or_else(|| parse_err(CTX, "missing n"))?;
    Ok((Graph::new(n, edges)?, k, lambda))
}

/// Loads an instance file (graph + `k`), rebuilding the penalty QUBO and
/// verifying the stored λ when present.
pub fn load_instance(text: &str) -> Result<DksInstance> {
    let (graph, k, lambda) = load_graph(text)?;
    let k = k.ok_or_else(|| parse_err("graph", "instance file missing k"))?;
    let instance = build_dks(graph, k)?;
    if let Some(l) = lambda {
        if (l - instance.lambda).abs() > 1e-9 {
            return Err(parse_err(
                "graph",
                format!("stored lambda {l} disagrees with derived {}", instance.lambda),
            ));
        }
    }
    Ok(instance)
}

/// One metric report as `field value` lines, in the order the experiment
/// tables use: expectation, Γ, η, CVaR, feasibility, optimality, conditional
/// expectation. Missing values print as `-`.
pub fn metric_report_record(label: &str, report: &MetricReport, config_hash: u64) -> String {
    let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| x.to_string());
    let mut out = file_header("metric-report", config_hash);
    let _ = writeln!(out, "label {label}");
    let _ = writeln!(out, "expectation {}", report.expectation);
    let _ = writeln!(out, "gamma {}", opt(report.gamma));
    let _ = writeln!(out, "eta {}", report.eta);
    let _ = writeln!(out, "cvar_lower {}", report.cvar_lower);
    let _ = writeln!(out, "cvar_upper {}", report.cvar_upper);
    let _ = writeln!(out, "p_feasible {}", report.p_feasible);
    let _ = writeln!(out, "p_optimal {}", opt(report.p_optimal));
    let _ = writeln!(out, "expectation_given_feasible {}", opt(report.expectation_given_feasible));
    out
}

/// Gate-list circuit export: one `gate <kind> <targets> <angle>` line per
/// operation, for external inspection. Circuits containing opaque
/// diagonal-phase oracles cannot be exported.
pub fn circuit_record(circuit: &crate::sim::Circuit, config_hash: u64) -> Result<String> {
    use crate::sim::{Angle, GateOp};
    let angle_str = |a: &Angle| -> String {
        match a {
            Angle::Bound(v) => v.to_string(),
            Angle::Param(name) => format!("${name}"),
        }
    };
    let mut out = file_header("circuit", config_hash);
    let _ = writeln!(out, "n {}", circuit.n());
    for gate in circuit.ops() {
        match gate {
            GateOp::Rz { target, angle } => {
                let _ = writeln!(out, "gate rz {target} {}", angle_str(angle));
            }
            GateOp::Ry { target, angle } => {
                let _ = writeln!(out, "gate ry {target} {}", angle_str(angle));
            }
            GateOp::Rx { target, angle } => {
                let _ = writeln!(out, "gate rx {target} {}", angle_str(angle));
            }
            GateOp::Phase { target, angle } => {
                let _ = writeln!(out, "gate p {target} {}", angle_str(angle));
            }
            GateOp::H { target } => {
                let _ = writeln!(out, "gate h {target}");
            }
            GateOp::Rzz { targets, angle } => {
                let _ = writeln!(out, "gate rzz {} {} {}", targets.0, targets.1, angle_str(angle));
            }
            GateOp::Cz { targets } => {
                let _ = writeln!(out, "gate cz {} {}", targets.0, targets.1);
            }
            GateOp::Swap { targets } => {
                let _ = writeln!(out, "gate swap {} {}", targets.0, targets.1);
            }
            GateOp::XxPlusYy { targets, angle } => {
                let _ = writeln!(
                    out,
                    "gate xx_plus_yy {} {} {}",
                    targets.0,
                    targets.1,
                    angle_str(angle)
                );
            }
            GateOp::DiagonalPhase { .. } => {
                return Err(Error::InvalidArgument(
                    "cannot export circuits containing opaque diagonal-phase oracles".into(),
                ));
            }
        }
    }
    Ok(out)
}

/// Optimization trace as CSV: one evaluation per line with the running best.
pub fn opt_trace_csv(names: &[String], trace: &OptTrace, config_hash: u64) -> String {
    let mut out = file_header("opt-trace", config_hash);
    let _ = writeln!(out, "eval,{},value,best_so_far", names.join(","));
    let best = trace.best_so_far();
    for (i, ((params, value), best)) in trace.evaluations.iter().zip(best).enumerate() {
        let cols: Vec<String> = params.iter().map(|p| p.to_string()).collect();
        let _ = writeln!(out, "{i},{},{value},{best}", cols.join(","));
    }
    out
}

/// Value histogram of a distribution as CSV: one row per distinct objective
/// value with its probability mass, feasibility flag, and (optionally) a
/// reference series such as the coherent distribution scaled by `1/Γ`.
pub fn value_histogram_csv(
    distribution: &[f64],
    reference: Option<&[f64]>,
    objective: impl Fn(u64) -> f64,
    feasible: impl Fn(u64) -> bool,
    config_hash: u64,
) -> String {
    #[derive(Default)]
    struct Bin {
        mass: f64,
        reference: f64,
        feasible: bool,
    }
    let mut bins: std::collections::BTreeMap<(i64, bool), Bin> = std::collections::BTreeMap::new();
    for (x, &p) in distribution.iter().enumerate() {
        let r = reference.map_or(0.0, |r| r[x]);
        if p == 0.0 && r == 0.0 {
            continue;
        }
        let value = objective(x as u64);
        let is_feasible = feasible(x as u64);
        // Key by value rounded to 1e-9 so float noise cannot split bins.
        let key = ((value * 1e9).round() as i64, is_feasible);
        let bin = bins.entry(key).or_default();
        bin.mass += p;
        bin.reference += r;
        bin.feasible = is_feasible;
    }
    let mut out = file_header("value-histogram", config_hash);
    let _ = writeln!(out, "value,mass,feasible,reference_mass");
    for ((key, _), bin) in bins {
        let value = key as f64 / 1e9;
        let _ = writeln!(out, "{value},{},{},{}", bin.mass, bin.feasible as u8, bin.reference);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lcu::diagonal::hamming_penalty_values;
    use crate::lcu::su2::build_su2_pool;
    use crate::problems::random_regular_graph;

    #[test]
    fn diagonal_lcu_roundtrip() {
        let f = hamming_penalty_values(6, 2).unwrap();
        let lcu = build_diagonal_lcu(&f, -1.3).unwrap();
        let text = diagonal_lcu_record(&lcu, 42);
        assert!(text.starts_with("# fourier-lcu diagonal-lcu v1"));
        let loaded = load_diagonal_lcu(&text).unwrap();
        assert_eq!(loaded.m(), lcu.m());
        assert_eq!(loaded.gamma(), lcu.gamma());
        for (a, b) in loaded.coeffs().iter().zip(lcu.coeffs()) {
            assert_eq!(a, b);
        }
        assert_eq!(loaded.gamma_cost(), lcu.gamma_cost());
    }

    #[test]
    fn corrupted_lcu_record_is_rejected() {
        let f = hamming_penalty_values(4, 1).unwrap();
        let lcu = build_diagonal_lcu(&f, 0.7).unwrap();
        let text = diagonal_lcu_record(&lcu, 0);
        let broken = text.replace("coeff 1 ", "coeff 1 0.123456 # ");
        assert!(load_diagonal_lcu(&broken).is_err());
    }

    #[test]
    fn pool_roundtrip_preserves_weights_and_selection() {
        let (pool, selected) = build_su2_pool(3, 0.4, 64, 16, 256, 9).unwrap();
        let text = su2_pool_record(&pool, &selected, 7);
        let (loaded, loaded_selected) = load_su2_pool(&text).unwrap();
        assert_eq!(loaded_selected, selected);
        assert_eq!(loaded.n, pool.n);
        assert_eq!(loaded.branches.len(), pool.branches.len());
        for (a, b) in loaded.branches.iter().zip(&pool.branches) {
            assert_eq!(a.angles, b.angles);
            assert_eq!(a.weight, b.weight);
        }
        assert_eq!(loaded.gamma_hat, pool.gamma_hat);
        for (a, b) in loaded.sample_probs.iter().zip(&pool.sample_probs) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn sample_set_roundtrip_merges_duplicates() {
        let mut set = SampleSet::new(3);
        set.push(SampleRecord { bits: 0b101, branch: Some(2), weight: 3.0 });
        set.push(SampleRecord { bits: 0b101, branch: Some(2), weight: 1.0 });
        set.push(SampleRecord { bits: 0b001, branch: None, weight: 5.0 });
        let text = sample_set_record(&set, 1);
        assert!(text.contains("record 101 2 4"));
        assert!(text.contains("record 001 - 5"));
        let loaded = load_sample_set(&text).unwrap();
        assert_eq!(loaded.total_weight(), 9.0);
        assert_eq!(loaded.masses(), vec![(1, 5.0), (5, 4.0)]);
    }

    #[test]
    fn graph_and_instance_roundtrip() {
        let graph = random_regular_graph(10, 3, 4).unwrap();
        let instance = build_dks(graph.clone(), 3).unwrap();
        let text = graph_record(&graph, Some(&instance), 11);
        let loaded = load_instance(&text).unwrap();
        assert_eq!(loaded.graph, graph);
        assert_eq!(loaded.k, 3);
        assert_eq!(loaded.lambda, instance.lambda);

        // Plain graph file without instance fields.
        let text = graph_record(&graph, None, 11);
        let (loaded, k, lambda) = load_graph(&text).unwrap();
        assert_eq!(loaded, graph);
        assert!(k.is_none() && lambda.is_none());

        // Tampered lambda is rejected.
        let bad = graph_record(&graph, Some(&instance), 11).replace("lambda 4", "lambda 9");
        assert!(load_instance(&bad).is_err());
    }

    #[test]
    fn histogram_bins_by_value_and_feasibility() {
        let dist = vec![0.25, 0.25, 0.25, 0.25];
        let reference = vec![0.1, 0.2, 0.3, 0.4];
        let csv = value_histogram_csv(
            &dist,
            Some(&reference),
            |x| if x == 3 { 1.0 } else { 0.0 },
            |x| x.count_ones() == 1,
            0,
        );
        let lines: Vec<&str> = csv.lines().skip(3).collect();
        // Value 0 splits into infeasible (x=0) and feasible (x=1,2) bins.
        assert_eq!(lines.len(), 3);
        assert!(lines.iter().any(|l| l.starts_with("0,0.25,0,")));
        assert!(lines.iter().any(|l| l.starts_with("0,0.5,1,")));
        assert!(lines.iter().any(|l| l.starts_with("1,0.25,0,0.4")));
    }

    #[test]
    fn headers_carry_hash_and_version() {
        let h = file_header("samples", 0xabcd);
        assert!(h.contains("000000000000abcd"));
        assert!(h.contains(env!("CARGO_PKG_VERSION")));
        assert_ne!(fnv1a64(b"a"), fnv1a64(b"b"));
    }
}
