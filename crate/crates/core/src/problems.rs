//! Problem instances and classical oracles: graph generators (random regular,
//! Erdős–Rényi, SWAP-extended heavy-hex), the densest-k-subgraph QUBO with its
//! penalty factor, QUBO↔Ising conversion, and exhaustive optimum solvers.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::rng::{stream_rng, StreamDomain};
use crate::{Error, Result};

/// Undirected weighted graph; edges are stored as `(i, j, w)` with `i < j`
/// and no duplicates or self-loops.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    n_nodes: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl Graph {
    pub fn new(n_nodes: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for &(i, j, _) in &edges {
            if i >= j {
                return Err(Error::InvalidArgument(format!("edge ({i}, {j}) must have i < j")));
            }
            if j >= n_nodes {
                return Err(Error::InvalidArgument(format!("edge ({i}, {j}) out of range")));
            }
            if !seen.insert((i, j)) {
                return Err(Error::InvalidArgument(format!("duplicate edge ({i}, {j})")));
            }
        }
        Ok(Graph { n_nodes, edges })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn degree(&self, node: usize) -> usize {
        self.edges.iter().filter(|&&(i, j, _)| i == node || j == node).count()
    }

    /// `max_i Σ_{(i,j) ∈ E} |w_ij|`.
    pub fn max_weighted_degree(&self) -> f64 {
        let mut acc = vec![0.0; self.n_nodes];
        for &(i, j, w) in &self.edges {
            acc[i] += w.abs();
            acc[j] += w.abs();
        }
        acc.into_iter().fold(0.0, f64::max)
    }
}

/// QUBO `max_x Σ_i linear_i x_i + Σ_{i<j} quadratic_ij x_i x_j + constant`
/// over `x ∈ {0,1}^n`. The objective sense is always maximization.
#[derive(Clone, Debug, Default)]
pub struct QuboModel {
    pub n: usize,
    pub linear: Vec<f64>,
    pub quadratic: BTreeMap<(usize, usize), f64>,
    pub constant: f64,
}

impl QuboModel {
    pub fn evaluate(&self, x: u64) -> f64 {
        let mut v = self.constant;
        for (i, &a) in self.linear.iter().enumerate() {
            if (x >> i) & 1 == 1 {
                v += a;
            }
        }
        for (&(i, j), &b) in &self.quadratic {
            if (x >> i) & 1 == 1 && (x >> j) & 1 == 1 {
                v += b;
            }
        }
        v
    }
}

/// Ising form `Σ_i h_i z_i + Σ_{i<j} J_ij z_i z_j + offset` with
/// `z_i = 1 - 2x_i ∈ {+1, -1}`.
#[derive(Clone, Debug, Default)]
pub struct IsingModel {
    pub n: usize,
    pub h: Vec<f64>,
    pub j: BTreeMap<(usize, usize), f64>,
    pub offset: f64,
}

impl IsingModel {
    pub fn evaluate(&self, x: u64) -> f64 {
        let z = |i: usize| 1.0 - 2.0 * ((x >> i) & 1) as f64;
        let mut v = self.offset;
        for (i, &hi) in self.h.iter().enumerate() {
            v += hi * z(i);
        }
        for (&(i, jdx), &jij) in &self.j {
            v += jij * z(i) * z(jdx);
        }
        v
    }

    /// Energy without the constant offset (what the phase-separation circuit
    /// actually implements; the offset is a global phase).
    pub fn evaluate_without_offset(&self, x: u64) -> f64 {
        self.evaluate(x) - self.offset
    }
}

/// Substitutes `x_i = (1 - z_i)/2`; the Ising form evaluates identically to
/// the QUBO on every bitstring.
pub fn ising_from_qubo(qubo: &QuboModel) -> IsingModel {
    let n = qubo.n;
    let mut h = vec![0.0; n];
    let mut j = BTreeMap::new();
    let mut offset = qubo.constant;
    for (i, &a) in qubo.linear.iter().enumerate() {
        h[i] -= a / 2.0;
        offset += a / 2.0;
    }
    for (&(a, b), &q) in &qubo.quadratic {
        offset += q / 4.0;
        h[a] -= q / 4.0;
        h[b] -= q / 4.0;
        *j.entry((a, b)).or_insert(0.0) += q / 4.0;
    }
    IsingModel { n, h, j, offset }
}

/// Densest-k-subgraph instance: pick `k` nodes maximizing the induced edge
/// weight. Carries the penalty QUBO with
/// `λ = 1 + max_i Σ_{(i,j) ∈ E} |w_ij|`, which makes constraint violations
/// never beneficial.
#[derive(Clone, Debug)]
pub struct DksInstance {
    pub graph: Graph,
    pub k: usize,
    pub lambda: f64,
    /// Full penalty QUBO `objective - λ (1ᵀx - k)²` expanded to
    /// linear/quadratic/constant form.
    pub qubo: QuboModel,
}

/// Builds the penalty QUBO for densest-k-subgraph on `graph`.
pub fn build_dks(graph: Graph, k: usize) -> Result<DksInstance> {
    let n = graph.n_nodes();
    if k > n {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds node count {n}")));
    }
    let lambda = 1.0 + graph.max_weighted_degree();
    // -λ(Σx - k)² = -λ Σ_i x_i - 2λ Σ_{i<j} x_i x_j + 2λk Σ_i x_i - λk².
    let linear = vec![lambda * (2.0 * k as f64 - 1.0); n];
    let mut quadratic = BTreeMap::new();
    for i in 0..n {
        for j in (i + 1)..n {
            quadratic.insert((i, j), -2.0 * lambda);
        }
    }
    for &(i, j, w) in graph.edges() {
        *quadratic.get_mut(&(i, j)).expect("all pairs present") += w;
    }
    let constant = -lambda * (k as f64) * (k as f64);
    let qubo = QuboModel { n, linear, quadratic, constant };
    Ok(DksInstance { graph, k, lambda, qubo })
}

impl DksInstance {
    pub fn n(&self) -> usize {
        self.graph.n_nodes()
    }

    /// `Σ_{(i,j) ∈ E} w_ij x_i x_j`.
    pub fn objective(&self, x: u64) -> f64 {
        self.graph
            .edges()
            .iter()
            .filter(|&&(i, j, _)| (x >> i) & 1 == 1 && (x >> j) & 1 == 1)
            .map(|&(_, _, w)| w)
            .sum()
    }

    /// `objective(x) - λ (wt(x) - k)²`.
    pub fn penalty_objective(&self, x: u64) -> f64 {
        let excess = x.count_ones() as f64 - self.k as f64;
        self.objective(x) - self.lambda * excess * excess
    }

    pub fn is_feasible(&self, x: u64) -> bool {
        x.count_ones() as usize == self.k
    }

    /// Exact feasible optimum by enumerating weight-k strings.
    pub fn exact_optimum(&self) -> Result<(f64, Vec<u64>)> {
        solve_exact(&self.qubo, SolveMode::FeasibleOnly(self.k))
    }
}

/// Search mode for [`solve_exact`].
#[derive(Clone, Copy, Debug)]
pub enum SolveMode {
    /// All `2^n` strings; `n <= 24`.
    Exhaustive,
    /// Only strings of the given Hamming weight; `C(n, k) <= 1e8`.
    FeasibleOnly(usize),
}

/// Exact optimum of a QUBO by enumeration. Returns the best value and all
/// strings attaining it (within 1e-9).
pub fn solve_exact(qubo: &QuboModel, mode: SolveMode) -> Result<(f64, Vec<u64>)> {
    let n = qubo.n;
    let mut best = f64::NEG_INFINITY;
    let mut arg = Vec::new();
    let mut consider = |x: u64, v: f64| {
        if v > best + 1e-9 {
            best = v;
            arg.clear();
            arg.push(x);
        } else if (v - best).abs() <= 1e-9 {
            arg.push(x);
        }
    };
    match mode {
        SolveMode::Exhaustive => {
            if n > 24 {
                return Err(Error::InstanceTooLarge(format!("exhaustive search over n = {n}")));
            }
            for x in 0..(1u64 << n) {
                consider(x, qubo.evaluate(x));
            }
        }
        SolveMode::FeasibleOnly(k) => {
            if k > n {
                return Err(Error::InvalidArgument(format!("weight {k} exceeds n = {n}")));
            }
            let count = (0..k as u128).fold(1u128, |acc, i| acc * (n as u128 - i) / (i + 1));
            if count > 100_000_000 {
                return Err(Error::InstanceTooLarge(format!("C({n}, {k}) = {count}")));
            }
            if k == 0 {
                consider(0, qubo.evaluate(0));
            } else {
                // Gosper's hack over weight-k strings.
                let mut x: u64 = (1u64 << k) - 1;
                let limit = 1u64 << n;
                while x < limit {
                    consider(x, qubo.evaluate(x));
                    let c = x & x.wrapping_neg();
                    let r = x + c;
                    x = (((r ^ x) >> 2) / c) | r;
                }
            }
        }
    }
    Ok((best, arg))
}

/// Simple d-regular graph on `n` nodes via the pairing model with rejection
/// of self-loops and multi-edges.
pub fn random_regular_graph(n: usize, d: usize, seed: u64) -> Result<Graph> {
    if !(n * d).is_multiple_of(2) || d >= n {
        return Err(Error::GraphGeneration(format!("no {d}-regular graph on {n} nodes")));
    }
    'attempt: for attempt in 0..1000u64 {
        let mut rng = stream_rng(seed, StreamDomain::GraphGeneration, attempt);
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
        stubs.shuffle(&mut rng);
        let mut seen = std::collections::BTreeSet::new();
        for pair in stubs.chunks(2) {
            let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if a == b || !seen.insert((a, b)) {
                continue 'attempt;
            }
        }
        let edges = seen.into_iter().map(|(a, b)| (a, b, 1.0)).collect();
        return Graph::new(n, edges);
    }
    Err(Error::GraphGeneration(format!(
        "rejection budget exceeded for {d}-regular graph on {n} nodes"
    )))
}

/// Erdős–Rényi graph: each unordered pair appears independently with
/// probability `p`.
pub fn erdos_renyi_graph(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("edge probability {p} not in [0, 1]")));
    }
    let mut rng = stream_rng(seed, StreamDomain::GraphGeneration, 0);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen::<f64>() < p {
                edges.push((i, j, 1.0));
            }
        }
    }
    Graph::new(n, edges)
}

/// One SWAP layer of the heavy-hex builder.
#[derive(Clone, Debug)]
pub struct SwapLayer {
    /// Color class whose physical edges were swapped.
    pub color: usize,
    /// Physical edges swapped in parallel (a matching).
    pub physical_edges: Vec<(usize, usize)>,
    /// Logical edges newly added to the graph after this layer.
    pub new_logical_edges: Vec<(usize, usize)>,
    /// Physical position -> logical qubit after this layer.
    pub permutation: Vec<usize>,
}

/// A heavy-hex lattice extended by SWAP layers, with everything needed to
/// rebuild the SWAP circuit.
#[derive(Clone, Debug)]
pub struct HeavyHexGraph {
    pub graph: Graph,
    pub base_edge_count: usize,
    /// 3-edge-coloring of the physical lattice.
    pub color_classes: [Vec<(usize, usize)>; 3],
    pub layers: Vec<SwapLayer>,
    /// Physical position -> logical qubit after all layers.
    pub final_permutation: Vec<usize>,
}

/// Builds the heavy-hex lattice of `rows x cols` cells, 3-edge-colors it, and
/// adds `swap_layers` rounds of parallel SWAPs cycling through the color
/// classes; every physical edge's current logical pair joins the graph after
/// each round.
///
/// Lattice convention: `rows + 1` horizontal chains joined by `cols + 1`
/// bridge qubits per gap, with bridge columns offset by two sites in
/// alternating gaps. The `(5, 3)` cell grid yields exactly 106 nodes.
pub fn heavy_hex_swap_graph(rows: usize, cols: usize, swap_layers: usize) -> Result<HeavyHexGraph> {
    if rows < 1 || cols < 1 {
        return Err(Error::GraphGeneration("heavy-hex grid needs rows, cols >= 1".into()));
    }
    let row_span = 4 * cols + 2; // interior chains cover x = 0..=row_span
    let chain_range = |r: usize| -> (usize, usize) {
        if r == 0 {
            (0, row_span - 2)
        } else if r == rows {
            if (rows - 1).is_multiple_of(2) {
                (0, row_span - 2)
            } else {
                (2, row_span)
            }
        } else {
            (0, row_span)
        }
    };

    // Assign node ids chain by chain, then bridges gap by gap.
    let mut id_of = BTreeMap::new();
    let mut next_id = 0usize;
    for r in 0..=rows {
        let (lo, hi) = chain_range(r);
        for x in lo..=hi {
            id_of.insert(("chain", r, x), next_id);
            next_id += 1;
        }
    }
    for g in 0..rows {
        let offset = if g % 2 == 0 { 0 } else { 2 };
        for b in 0..=cols {
            id_of.insert(("bridge", g, offset + 4 * b), next_id);
            next_id += 1;
        }
    }
    let n_nodes = next_id;

    // Structural 3-edge-coloring: chain r avoids color t_r = r mod 3 and
    // alternates the remaining two colors by x parity; the bridge edge into
    // chain r takes t_r. Adjacent chains have distinct t, so the two edges of
    // every bridge qubit differ.
    let t = |r: usize| r % 3;
    let chain_colors = |r: usize| -> (usize, usize) {
        let mut free = [0usize, 1, 2].into_iter().filter(|&c| c != t(r));
        let a = free.next().unwrap();
        let b = free.next().unwrap();
        (a, b)
    };

    let mut color_classes: [Vec<(usize, usize)>; 3] = Default::default();
    let mut physical_edges = Vec::new();
    let push_edge = |color: usize,
                         u: usize,
                         v: usize,
                         classes: &mut [Vec<(usize, usize)>; 3],
                         all: &mut Vec<(usize, usize)>| {
        let e = (u.min(v), u.max(v));
        classes[color].push(e);
        all.push(e);
    };
    for r in 0..=rows {
        let (lo, hi) = chain_range(r);
        let (even_color, odd_color) = chain_colors(r);
        for x in lo..hi {
            let color = if x % 2 == 0 { even_color } else { odd_color };
            let u = id_of[&("chain", r, x)];
            let v = id_of[&("chain", r, x + 1)];
            push_edge(color, u, v, &mut color_classes, &mut physical_edges);
        }
    }
    for g in 0..rows {
        let offset = if g % 2 == 0 { 0 } else { 2 };
        for b in 0..=cols {
            let x = offset + 4 * b;
            let bridge = id_of[&("bridge", g, x)];
            let up = id_of[&("chain", g, x)];
            let down = id_of[&("chain", g + 1, x)];
            push_edge(t(g), bridge, up, &mut color_classes, &mut physical_edges);
            push_edge(t(g + 1), bridge, down, &mut color_classes, &mut physical_edges);
        }
    }

    let mut logical_edges = std::collections::BTreeSet::new();
    for &(u, v) in &physical_edges {
        logical_edges.insert((u, v));
    }
    let base_edge_count = logical_edges.len();

    let mut permutation: Vec<usize> = (0..n_nodes).collect();
    let mut layers = Vec::new();
    for layer_idx in 0..swap_layers {
        let color = layer_idx % 3;
        for &(u, v) in &color_classes[color] {
            permutation.swap(u, v);
        }
        let mut new_edges = Vec::new();
        for &(u, v) in &physical_edges {
            let (a, b) = (permutation[u].min(permutation[v]), permutation[u].max(permutation[v]));
            if logical_edges.insert((a, b)) {
                new_edges.push((a, b));
            }
        }
        layers.push(SwapLayer {
            color,
            physical_edges: color_classes[color].clone(),
            new_logical_edges: new_edges,
            permutation: permutation.clone(),
        });
    }

    let edges = logical_edges.into_iter().map(|(a, b)| (a, b, 1.0)).collect();
    Ok(HeavyHexGraph {
        graph: Graph::new(n_nodes, edges)?,
        base_edge_count,
        color_classes,
        layers,
        final_permutation: permutation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regular_graph_on_four_nodes_is_complete() {
        let g = random_regular_graph(4, 3, 1).unwrap();
        assert_eq!(g.n_edges(), 6);
        for v in 0..4 {
            assert_eq!(g.degree(v), 3);
        }
    }

    #[test]
    fn regular_graph_has_expected_degrees() {
        let g = random_regular_graph(12, 3, 5).unwrap();
        assert_eq!(g.n_edges(), 18);
        for v in 0..12 {
            assert_eq!(g.degree(v), 3);
        }
        let h = random_regular_graph(12, 3, 5).unwrap();
        assert_eq!(g, h);
        assert!(random_regular_graph(5, 3, 0).is_err());
    }

    #[test]
    fn erdos_renyi_extremes_and_mean() {
        assert_eq!(erdos_renyi_graph(10, 0.0, 3).unwrap().n_edges(), 0);
        assert_eq!(erdos_renyi_graph(10, 1.0, 3).unwrap().n_edges(), 45);

        let pairs = 50.0 * 49.0 / 2.0;
        let p = 0.7;
        let seeds = 200;
        let mean: f64 = (0..seeds)
            .map(|s| erdos_renyi_graph(50, p, s as u64).unwrap().n_edges() as f64)
            .sum::<f64>()
            / seeds as f64;
        let sigma = (pairs * p * (1.0 - p) / seeds as f64).sqrt();
        assert!((mean - pairs * p).abs() < 5.0 * sigma, "mean {mean}");
    }

    #[test]
    fn dks_lambda_and_feasibility() {
        let g = random_regular_graph(12, 3, 7).unwrap();
        let inst = build_dks(g, 4).unwrap();
        assert_eq!(inst.lambda, 4.0);
        let (best, args) = inst.exact_optimum().unwrap();
        for &x in &args {
            assert!(inst.is_feasible(x));
            assert!((inst.penalty_objective(x) - inst.objective(x)).abs() < 1e-12);
            assert!((inst.objective(x) - best).abs() < 1e-9);
        }
    }

    #[test]
    fn qubo_matches_penalty_objective_everywhere() {
        let g = random_regular_graph(10, 3, 11).unwrap();
        let inst = build_dks(g, 3).unwrap();
        for x in 0..(1u64 << 10) {
            assert!((inst.qubo.evaluate(x) - inst.penalty_objective(x)).abs() < 1e-9);
        }
    }

    #[test]
    fn lambda_dominance_on_small_instances() {
        for seed in [0u64, 1, 2] {
            let g = random_regular_graph(12, 3, seed).unwrap();
            let inst = build_dks(g, 4).unwrap();
            let mut best_feasible = f64::NEG_INFINITY;
            let mut best_infeasible = f64::NEG_INFINITY;
            for x in 0..(1u64 << 12) {
                let v = inst.penalty_objective(x);
                if inst.is_feasible(x) {
                    best_feasible = best_feasible.max(v);
                } else {
                    best_infeasible = best_infeasible.max(v);
                }
            }
            assert!(best_feasible > best_infeasible, "seed {seed}");
        }
    }

    #[test]
    fn off_by_one_weight_always_has_better_feasible_neighbor() {
        let g = random_regular_graph(12, 3, 3).unwrap();
        let inst = build_dks(g, 4).unwrap();
        for x in 0..(1u64 << 12) {
            let wt = x.count_ones() as i64;
            if (wt - 4).abs() != 1 {
                continue;
            }
            let mut best_neighbor = f64::NEG_INFINITY;
            for bit in 0..12 {
                let y = x ^ (1u64 << bit);
                if inst.is_feasible(y) {
                    best_neighbor = best_neighbor.max(inst.penalty_objective(y));
                }
            }
            assert!(best_neighbor >= inst.penalty_objective(x) + 1.0 - 1e-9);
        }
    }

    #[test]
    fn ising_substitution_algebra() {
        let qubo = QuboModel { n: 1, linear: vec![1.0], quadratic: BTreeMap::new(), constant: 0.0 };
        let ising = ising_from_qubo(&qubo);
        assert_eq!(ising.h, vec![-0.5]);
        assert_eq!(ising.offset, 0.5);

        let qubo = QuboModel {
            n: 2,
            linear: vec![0.0, 0.0],
            quadratic: BTreeMap::from([((0, 1), 1.0)]),
            constant: 0.0,
        };
        let ising = ising_from_qubo(&qubo);
        assert_eq!(ising.j[&(0, 1)], 0.25);
        assert_eq!(ising.h, vec![-0.25, -0.25]);
        assert_eq!(ising.offset, 0.25);
    }

    #[test]
    fn ising_equals_qubo_on_all_strings() {
        let mut rng = stream_rng(13, StreamDomain::TestOracle, 40);
        let n = 10;
        let mut quadratic = BTreeMap::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen::<f64>() < 0.4 {
                    quadratic.insert((i, j), rng.gen_range(-2.0..2.0));
                }
            }
        }
        let qubo = QuboModel {
            n,
            linear: (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect(),
            quadratic,
            constant: rng.gen_range(-1.0..1.0),
        };
        let ising = ising_from_qubo(&qubo);
        for x in 0..(1u64 << n) {
            assert!((qubo.evaluate(x) - ising.evaluate(x)).abs() < 1e-9);
        }
    }

    #[test]
    fn solve_exact_trivial_cases() {
        let empty = build_dks(Graph::new(4, vec![]).unwrap(), 2).unwrap();
        let (best, args) = empty.exact_optimum().unwrap();
        assert_eq!(best, 0.0);
        assert_eq!(args.len(), 6);

        let k4 = build_dks(random_regular_graph(4, 3, 0).unwrap(), 3).unwrap();
        let (best, _) = k4.exact_optimum().unwrap();
        assert_eq!(best, 3.0);
    }

    #[test]
    fn exhaustive_and_feasible_only_agree_for_penalty_qubo() {
        let g = random_regular_graph(12, 3, 9).unwrap();
        let inst = build_dks(g, 4).unwrap();
        let (vx, ax) = solve_exact(&inst.qubo, SolveMode::Exhaustive).unwrap();
        let (vf, af) = solve_exact(&inst.qubo, SolveMode::FeasibleOnly(4)).unwrap();
        assert!((vx - vf).abs() < 1e-9);
        assert_eq!(ax, af);
    }

    #[test]
    fn solve_exact_rejects_oversized_instances() {
        let qubo = QuboModel { n: 30, linear: vec![0.0; 30], ..Default::default() };
        assert!(solve_exact(&qubo, SolveMode::Exhaustive).is_err());
    }

    fn coloring_is_proper(hh: &HeavyHexGraph) {
        let mut incident: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (color, class) in hh.color_classes.iter().enumerate() {
            for &(u, v) in class {
                incident.entry(u).or_default().push(color);
                incident.entry(v).or_default().push(color);
            }
        }
        for (node, colors) in incident {
            let mut sorted = colors.clone();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), colors.len(), "node {node} has repeated colors");
        }
    }

    #[test]
    fn heavy_hex_base_graph() {
        let hh = heavy_hex_swap_graph(5, 3, 0).unwrap();
        assert_eq!(hh.graph.n_nodes(), 106);
        assert_eq!(hh.graph.n_edges(), hh.base_edge_count);
        assert!(hh.layers.is_empty());
        assert!(hh.graph.edges().iter().all(|&(_, _, w)| w == 1.0));
        coloring_is_proper(&hh);
        // Every node has degree <= 3 on the base lattice.
        for v in 0..hh.graph.n_nodes() {
            assert!(hh.graph.degree(v) <= 3);
        }
    }

    #[test]
    fn heavy_hex_swap_layers_track_permutation() {
        let hh = heavy_hex_swap_graph(5, 3, 3).unwrap();
        assert_eq!(hh.graph.n_nodes(), 106);
        let mut edge_count = hh.base_edge_count;
        for layer in &hh.layers {
            // Permutation stays a bijection.
            let mut seen = [false; 106];
            for &p in &layer.permutation {
                assert!(!seen[p]);
                seen[p] = true;
            }
            edge_count += layer.new_logical_edges.len();
        }
        assert_eq!(hh.graph.n_edges(), edge_count);
        assert_eq!(hh.final_permutation, hh.layers.last().unwrap().permutation);
    }
}
