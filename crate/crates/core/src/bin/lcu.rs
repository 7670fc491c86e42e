//! Experiment command line: decompositions, experiment modes, graph
//! generation, exact solving, parameter optimization, and the verification
//! suite. Outputs are deterministic text files stamped with the configuration
//! hash; reruns with identical configuration are byte-identical.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use fourier_lcu::io;
use fourier_lcu::lcu::diagonal::{
    build_diagonal_lcu, hamming_penalty_values, indicator_window_values,
};
use fourier_lcu::lcu::su2::{build_su2_pool, spin_sectors};
use fourier_lcu::problems::{
    build_dks, erdos_renyi_graph, heavy_hex_swap_graph, random_regular_graph, solve_exact,
    DksInstance, SolveMode,
};
use fourier_lcu::qaoa::{
    build_variant_circuit, penalty_lcu_effective_gamma, warm_start_feasibility, BranchData,
    QaoaParams, QaoaSpec, Variant,
};
use fourier_lcu::verify;
use fourier_lcu::vqopt::experiments::{ExperimentConfig, ExperimentRunner, Family, ModeResult};
use fourier_lcu::{Error, Result};

#[derive(Parser)]
#[command(
    name = "lcu",
    version,
    about = "Fourier-based LCU decompositions and constrained-QAOA experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an LCU decomposition and report its sampling overhead.
    Decompose {
        #[command(subcommand)]
        kind: DecomposeKind,
    },
    /// Run experiment modes on an instance, writing reports and histograms.
    Run(RunArgs),
    /// Run the verification suite; nonzero exit on any failure.
    Verify {
        /// Only run checks whose name contains this substring.
        #[arg(long)]
        filter: Option<String>,
    },
    /// Generate a problem graph or instance file.
    GraphGen {
        #[command(subcommand)]
        generator: GraphGenKind,
    },
    /// Solve an instance file exactly by enumeration.
    SolveExact {
        /// Instance file (edge-list format with k).
        #[arg(long)]
        instance: PathBuf,
        /// `exhaustive` (all strings, n <= 24) or `feasible` (weight-k only).
        #[arg(long, default_value = "feasible")]
        mode: String,
    },
    /// Optimize one experiment mode and write its evaluation trace.
    Optimize(RunArgs),
}

#[derive(Subcommand)]
enum DecomposeKind {
    /// Discrete-Fourier LCU of a diagonal phase function.
    Diagonal {
        /// Range bound of the composed function (qubit count for
        /// Hamming-weight functions).
        #[arg(long)]
        n: usize,
        /// Quadratic-penalty target: f(k) = (k - b)^2.
        #[arg(long)]
        b: Option<usize>,
        /// Indicator window `l,u`: f = 0 inside, 1 outside.
        #[arg(long)]
        indicator: Option<String>,
        /// Explicit comma-separated f(0..=n) values.
        #[arg(long)]
        f_values: Option<String>,
        #[arg(long)]
        gamma: f64,
        /// Output file for the decomposition record.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Haar-sampled SU(2) LCU pool for the XY-mixer.
    Xy {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 1_000_000)]
        pool: usize,
        #[arg(long, default_value_t = 1000)]
        circuits: usize,
        #[arg(long, default_value_t = 100_000)]
        gamma_samples: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GraphGenKind {
    /// Random d-regular graph.
    Regular {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Attach a target cardinality, writing a full instance file.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Erdős–Rényi graph with edge probability p.
    ErdosRenyi {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Heavy-hex lattice extended by SWAP layers.
    HeavyHex {
        #[arg(long, default_value_t = 5)]
        rows: usize,
        #[arg(long, default_value_t = 3)]
        cols: usize,
        #[arg(long, default_value_t = 3)]
        swap_layers: usize,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Experiment family: `penalty` or `xy`.
    #[arg(long)]
    family: String,
    /// Mode number (penalty 1-5, xy 1-7) or `all`.
    #[arg(long)]
    mode: String,
    /// Configuration file (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override any config field: `--set section.key=value`, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (defaults to the config value, then $LCU_OUT_DIR,
    /// then `lcu-out`).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

/// Instance selection in the configuration file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
struct InstanceConfig {
    generator: String,
    n: usize,
    d: usize,
    p: f64,
    rows: usize,
    cols: usize,
    swap_layers: usize,
    k: usize,
    seed: u64,
    /// Instance file path; used when `generator = "file"`.
    path: String,
}

impl Default for InstanceConfig {
    fn default() -> Self {
        InstanceConfig {
            generator: "regular".into(),
            n: 12,
            d: 3,
            p: 0.5,
            rows: 5,
            cols: 3,
            swap_layers: 3,
            k: 4,
            seed: 2025,
            path: String::new(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
struct ExperimentSection {
    seed: u64,
    grid_2d: usize,
    grid_3d: usize,
    grid_5d: usize,
    refine_budget: usize,
    pool_size: usize,
    circuits: usize,
    gamma_samples: usize,
    trotter_steps: usize,
    /// 0 evaluates exactly; otherwise shot-sampled with common random
    /// numbers.
    shots: u64,
    /// Branch shot assignment for emitted sample sets: `per-shot` resampling
    /// or deterministic `largest-remainder` allocation.
    shot_allocation: String,
    /// Path to a previously exported SU(2) pool to reuse for the XY modes
    /// (empty builds a fresh pool).
    pool_file: String,
    /// 0 uses all cores; recorded in the config hash either way.
    workers: usize,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        let d = ExperimentConfig::default();
        ExperimentSection {
            seed: d.seed,
            grid_2d: d.grid_2d,
            grid_3d: d.grid_3d,
            grid_5d: d.grid_5d,
            refine_budget: d.refine_budget,
            pool_size: d.pool_size,
            circuits: d.circuits,
            gamma_samples: d.gamma_samples,
            trotter_steps: d.trotter_steps,
            shots: 0,
            shot_allocation: "per-shot".into(),
            pool_file: String::new(),
            workers: 0,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
struct OutputSection {
    dir: String,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
struct CliConfig {
    instance: InstanceConfig,
    experiment: ExperimentSection,
    output: OutputSection,
}

impl CliConfig {
    fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut config: CliConfig = match path {
            Some(p) => toml::from_str(&std::fs::read_to_string(p)?)
                .map_err(|e| Error::Parse { context: "config".into(), message: e.to_string() })?,
            None => CliConfig::default(),
        };
        for entry in overrides {
            config.apply_override(entry)?;
        }
        Ok(config)
    }

    /// Applies one `section.field=value` override by round-tripping through
    /// TOML, so every field stays overridable without per-field plumbing.
    fn apply_override(&mut self, entry: &str) -> Result<()> {
        let (key, value) = entry.split_once('=').ok_or_else(|| {
            Error::InvalidArgument(format!("override `{entry}` is not key=value"))
        })?;
        let parts: Vec<&str> = key.split('.').collect();
        if parts.len() != 2 {
            return Err(Error::InvalidArgument(format!(
                "override key `{key}` must be section.field"
            )));
        }
        let mut table: toml::Table = toml::Table::try_from(self.clone())
            .map_err(|e| Error::Parse { context: "config".into(), message: e.to_string() })?;
        let node = table
            .get_mut(parts[0])
            .and_then(|section| section.get_mut(parts[1]))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown field `{key}`")))?;
        *node = match node {
            toml::Value::Integer(_) => toml::Value::Integer(value.parse().map_err(|_| {
                Error::InvalidArgument(format!("`{value}` is not an integer for `{key}`"))
            })?),
            toml::Value::Float(_) => toml::Value::Float(value.parse().map_err(|_| {
                Error::InvalidArgument(format!("`{value}` is not a float for `{key}`"))
            })?),
            toml::Value::String(_) => toml::Value::String(value.to_string()),
            toml::Value::Boolean(_) => toml::Value::Boolean(value.parse().map_err(|_| {
                Error::InvalidArgument(format!("`{value}` is not a bool for `{key}`"))
            })?),
            _ => {
                return Err(Error::InvalidArgument(format!("field `{key}` has unsupported type")))
            }
        };
        *self = table.try_into().map_err(|e: toml::de::Error| Error::Parse {
            context: "config".into(),
            message: e.to_string(),
        })?;
        Ok(())
    }

    fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn hash(&self) -> u64 {
        io::fnv1a64(self.canonical().as_bytes())
    }

    fn experiment_config(&self) -> ExperimentConfig {
        let e = &self.experiment;
        ExperimentConfig {
            seed: e.seed,
            grid_2d: e.grid_2d,
            grid_3d: e.grid_3d,
            grid_5d: e.grid_5d,
            refine_budget: e.refine_budget,
            pool_size: e.pool_size,
            circuits: e.circuits,
            gamma_samples: e.gamma_samples,
            trotter_steps: e.trotter_steps,
            shots: (e.shots > 0).then_some(e.shots),
        }
    }

    fn build_instance(&self) -> Result<DksInstance> {
        let i = &self.instance;
        let graph = match i.generator.as_str() {
            "regular" => random_regular_graph(i.n, i.d, i.seed)?,
            "erdos-renyi" => erdos_renyi_graph(i.n, i.p, i.seed)?,
            "heavy-hex" => heavy_hex_swap_graph(i.rows, i.cols, i.swap_layers)?.graph,
            "file" => return io::load_instance(&std::fs::read_to_string(&i.path)?),
            other => return Err(Error::InvalidArgument(format!("unknown generator `{other}`"))),
        };
        let k = if i.generator == "heavy-hex" { graph.n_nodes() / 3 } else { i.k };
        build_dks(graph, k)
    }

    fn out_dir(&self, flag: Option<&Path>) -> PathBuf {
        if let Some(dir) = flag {
            return dir.to_path_buf();
        }
        if !self.output.dir.is_empty() {
            return PathBuf::from(&self.output.dir);
        }
        std::env::var_os("LCU_OUT_DIR").map_or_else(|| PathBuf::from("lcu-out"), PathBuf::from)
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, contents)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn parse_family(name: &str) -> Result<Family> {
    match name {
        "penalty" => Ok(Family::Penalty),
        "xy" => Ok(Family::Xy),
        other => Err(Error::InvalidArgument(format!("unknown family `{other}`"))),
    }
}

fn parse_csv_f64(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidArgument(format!("bad value `{t}` in list: {e}")))
        })
        .collect()
}

fn cmd_decompose(kind: DecomposeKind) -> Result<()> {
    match kind {
        DecomposeKind::Diagonal { n, b, indicator, f_values, gamma, out } => {
            let f = match (b, &indicator, &f_values) {
                (Some(b), None, None) => hamming_penalty_values(n, b)?,
                (None, Some(window), None) => {
                    let bounds = parse_csv_f64(window)?;
                    if bounds.len() != 2 {
                        return Err(Error::InvalidArgument("indicator needs `l,u`".into()));
                    }
                    indicator_window_values(n, bounds[0] as usize, bounds[1] as usize)?
                }
                (None, None, Some(values)) => parse_csv_f64(values)?,
                _ => {
                    return Err(Error::InvalidArgument(
                        "choose exactly one of --b, --indicator, --f-values".into(),
                    ))
                }
            };
            let lcu = build_diagonal_lcu(&f, gamma)?;
            println!("branches          {}", lcu.m() + 1);
            println!("gamma_cost        {:.6}", lcu.gamma_cost());
            println!("bound (m+1)       {}", lcu.m() + 1);
            println!("reconstruction    {:.3e}", lcu.reconstruction_error());
            if let Some(path) = out {
                let hash = io::fnv1a64(format!("diagonal {f:?} {gamma}").as_bytes());
                write_file(&path, &io::diagonal_lcu_record(&lcu, hash))?;
            }
            Ok(())
        }
        DecomposeKind::Xy { n, beta, pool, circuits, gamma_samples, seed, out } => {
            let (pool_data, selected) =
                build_su2_pool(n, beta, pool, circuits, gamma_samples, seed)?;
            let bound = spin_sectors(n)?.gamma_bound();
            println!("pool size         {pool}");
            println!("gamma_hat         {:.6}", pool_data.gamma_hat);
            println!("gamma_sigma       {:.6}", pool_data.gamma_sigma);
            println!("bound (cubic)     {bound:.6}");
            println!("alpha_hat (pool)  {:.6}", pool_data.alpha_hat);
            if pool_data.gamma_hat > bound + 3.0 * pool_data.gamma_sigma {
                return Err(Error::InvalidArgument(
                    "estimated cost exceeds the cubic bound beyond 3 sigma".into(),
                ));
            }
            if let Some(path) = out {
                let hash =
                    io::fnv1a64(format!("xy {n} {beta} {pool} {circuits} {seed}").as_bytes());
                write_file(&path, &io::su2_pool_record(&pool_data, &selected, hash))?;
            }
            Ok(())
        }
    }
}

fn cmd_graph_gen(generator: GraphGenKind) -> Result<()> {
    let (graph, k, out, label) = match generator {
        GraphGenKind::Regular { n, d, seed, k, out } => (
            random_regular_graph(n, d, seed)?,
            k,
            out,
            format!("regular n={n} d={d} seed={seed}"),
        ),
        GraphGenKind::ErdosRenyi { n, p, seed, k, out } => (
            erdos_renyi_graph(n, p, seed)?,
            k,
            out,
            format!("erdos-renyi n={n} p={p} seed={seed}"),
        ),
        GraphGenKind::HeavyHex { rows, cols, swap_layers, k, out } => {
            let hh = heavy_hex_swap_graph(rows, cols, swap_layers)?;
            println!("base edges        {}", hh.base_edge_count);
            for layer in &hh.layers {
                println!(
                    "layer color {}    swaps {} new edges {}",
                    layer.color,
                    layer.physical_edges.len(),
                    layer.new_logical_edges.len()
                );
            }
            (hh.graph, k, out, format!("heavy-hex rows={rows} cols={cols} layers={swap_layers}"))
        }
    };
    println!("n_nodes           {}", graph.n_nodes());
    println!("n_edges           {}", graph.n_edges());
    if let Some(path) = out {
        let hash = io::fnv1a64(label.as_bytes());
        let record = match k {
            Some(k) => {
                let instance = build_dks(graph, k)?;
                io::graph_record(&instance.graph, Some(&instance), hash)
            }
            None => io::graph_record(&graph, None, hash),
        };
        write_file(&path, &record)?;
    }
    Ok(())
}

fn cmd_solve_exact(instance_path: &Path, mode: &str) -> Result<()> {
    let instance = io::load_instance(&std::fs::read_to_string(instance_path)?)?;
    let solve_mode = match mode {
        "exhaustive" => SolveMode::Exhaustive,
        "feasible" => SolveMode::FeasibleOnly(instance.k),
        other => return Err(Error::InvalidArgument(format!("unknown mode `{other}`"))),
    };
    let (best, strings) = solve_exact(&instance.qubo, solve_mode)?;
    println!("optimum           {best}");
    println!("optima            {}", strings.len());
    for &x in strings.iter().take(8) {
        let bits: String =
            (0..instance.n()).rev().map(|q| if (x >> q) & 1 == 1 { '1' } else { '0' }).collect();
        println!("solution          {bits}");
    }
    Ok(())
}

/// Writes the per-mode artifacts: metric report, value histogram (with the
/// coherent/Γ reference series for LCU modes), optimizer trace, and the Γ
/// recomputation log where present.
fn write_mode_outputs(
    dir: &Path,
    instance: &DksInstance,
    prefix: &str,
    result: &ModeResult,
    reference: Option<&ModeResult>,
    hash: u64,
) -> Result<()> {
    let label = format!("{prefix}: {}", result.label);
    write_file(
        &dir.join(format!("{prefix}_report.txt")),
        &io::metric_report_record(&label, &result.report, hash),
    )?;

    let scaled_reference: Option<Vec<f64>> = match (reference, result.gamma) {
        (Some(coherent), Some(gamma)) => {
            Some(coherent.distribution.iter().map(|p| p / gamma).collect())
        }
        _ => None,
    };
    let histogram = io::value_histogram_csv(
        &result.distribution,
        scaled_reference.as_deref(),
        |x| instance.penalty_objective(x),
        |x| instance.is_feasible(x),
        hash,
    );
    write_file(&dir.join(format!("{prefix}_distribution.csv")), &histogram)?;

    if let Some(trace) = &result.trace {
        let names: Vec<String> = result.params.iter().map(|(n, _)| n.clone()).collect();
        write_file(
            &dir.join(format!("{prefix}_trace.csv")),
            &io::opt_trace_csv(&names, trace, hash),
        )?;
    }
    if !result.gamma_log.is_empty() {
        let mut csv = io::file_header("gamma-log", hash);
        csv.push_str("parameter,gamma\n");
        for (p, g) in &result.gamma_log {
            csv.push_str(&format!("{p},{g}\n"));
        }
        write_file(&dir.join(format!("{prefix}_gamma_log.csv")), &csv)?;
    }
    Ok(())
}

fn summary_row(result: &ModeResult) -> String {
    let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"));
    format!(
        "{}\t{}\t{:.6}\t{}\t{:.6}\t{:.6}\t{:.6}\t{}\t{}\n",
        result.mode,
        result.label,
        result.report.expectation,
        opt(result.report.gamma),
        result.report.eta,
        result.report.cvar_upper,
        result.report.p_feasible,
        opt(result.report.p_optimal),
        opt(result.report.expectation_given_feasible),
    )
}

/// Emits an ancilla-free sampled outcome set for a penalty-family LCU mode:
/// the branch circuits are the `R_Z(θ_j)` layer followed by the warm-start
/// mixer, prepared by warm start plus the objective cost layer. The shot
/// allocation policy is flagged in the file metadata.
fn emit_penalty_samples(
    dir: &Path,
    instance: &DksInstance,
    prefix: &str,
    result: &ModeResult,
    config: &CliConfig,
    hash: u64,
) -> Result<()> {
    use fourier_lcu::qaoa::{
        cost_layer, objective_ising, rz_layer, theta_init, warm_start_gates, warm_start_mixer,
    };
    use fourier_lcu::qpd::{ancilla_free_sample_with, LcuChannel, ShotAllocation};
    use fourier_lcu::sim::Circuit;

    let allocation = match config.experiment.shot_allocation.as_str() {
        "per-shot" => ShotAllocation::PerShot,
        "largest-remainder" => ShotAllocation::LargestRemainder,
        other => {
            return Err(Error::InvalidArgument(format!("unknown shot allocation `{other}`")))
        }
    };
    let beta = result.params.iter().find(|(n, _)| n == "beta").map(|(_, v)| *v);
    let gamma = result.params.iter().find(|(n, _)| n == "gamma").map(|(_, v)| *v);
    let (Some(beta), Some(gamma)) = (beta, gamma) else {
        return Ok(());
    };
    let n = instance.n();
    let lcu = build_diagonal_lcu(
        &hamming_penalty_values(n, instance.k)?,
        penalty_lcu_effective_gamma(instance, gamma),
    )?;
    let ti = theta_init(n, instance.k);
    let mut branches = Vec::with_capacity(lcu.m() + 1);
    for j in 0..=lcu.m() {
        let mut circuit = Circuit::new(n);
        circuit.extend(rz_layer(n, lcu.thetas()[j]))?;
        circuit.extend(warm_start_mixer(n, beta, ti))?;
        branches.push(circuit);
    }
    let channel = LcuChannel::new(n, branches, lcu.coeffs().to_vec())?;
    let mut prepare = Circuit::new(n);
    prepare.extend(warm_start_gates(n, instance.k))?;
    prepare.extend(cost_layer(&objective_ising(instance), gamma))?;

    let samples = ancilla_free_sample_with(
        &channel,
        &prepare,
        config.experiment.shots,
        config.experiment.seed,
        allocation,
    )?;
    let metadata = [
        ("shot_allocation", config.experiment.shot_allocation.clone()),
        ("shots", config.experiment.shots.to_string()),
        ("seed", config.experiment.seed.to_string()),
    ];
    write_file(
        &dir.join(format!("{prefix}_samples.txt")),
        &io::sample_set_record_with(&samples, hash, &metadata),
    )
}

/// Smoke pipeline for instances beyond the exact-evaluator cutoff: instance
/// and circuit emission plus formula-level metrics only.
fn run_smoke(dir: &Path, instance: &DksInstance, config: &CliConfig, hash: u64) -> Result<()> {
    println!(
        "instance has {} nodes; beyond the 14-qubit exact evaluator, emitting \
         construction artifacts only",
        instance.n()
    );
    write_file(
        &dir.join("instance.txt"),
        &io::graph_record(&instance.graph, Some(instance), hash),
    )?;

    let feasibility = warm_start_feasibility(instance.n(), instance.k);
    println!("warm-start feasibility {feasibility:.4}");

    let (beta, gamma) = (0.1, 0.01);
    let f = hamming_penalty_values(instance.n(), instance.k)?;
    let lcu = build_diagonal_lcu(&f, penalty_lcu_effective_gamma(instance, gamma))?;
    println!(
        "penalty LCU at gamma={gamma}: {} branches, Gamma {:.4} (bound {})",
        lcu.m() + 1,
        lcu.gamma_cost(),
        lcu.m() + 1
    );
    write_file(&dir.join("penalty_lcu.txt"), &io::diagonal_lcu_record(&lcu, hash))?;

    // One representative branch circuit as a gate list.
    let spec = QaoaSpec::new(
        instance,
        Variant::PenaltyLcu,
        QaoaParams { beta: Some(beta), gamma: Some(gamma), ..Default::default() },
    );
    let circuit = build_variant_circuit(&spec, Some(&BranchData::PenaltyTheta(lcu.thetas()[1])))?;
    write_file(&dir.join("branch_circuit.txt"), &io::circuit_record(&circuit, hash)?)?;

    let mut metrics = io::file_header("smoke-metrics", hash);
    metrics.push_str(&format!("warm_start_feasibility {feasibility}\n"));
    metrics.push_str(&format!("lcu_gamma_cost {}\n", lcu.gamma_cost()));
    metrics.push_str(&format!("shots {}\n", config.experiment.shots));
    write_file(&dir.join("smoke_metrics.txt"), &metrics)
}

fn cmd_run(args: &RunArgs, trace_only: bool) -> Result<()> {
    let config = CliConfig::load(args.config.as_deref(), &args.overrides)?;
    if config.experiment.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.experiment.workers)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    }
    let hash = config.hash();
    let family = parse_family(&args.family)?;
    let instance = config.build_instance()?;
    let dir = config.out_dir(args.out_dir.as_deref());
    std::fs::create_dir_all(&dir)?;
    write_file(&dir.join("config.resolved.toml"), &config.canonical())?;

    if instance.n() > 14 {
        return run_smoke(&dir, &instance, &config, hash);
    }

    let modes: Vec<usize> = if args.mode == "all" {
        match family {
            Family::Penalty => (1..=5).collect(),
            Family::Xy => (1..=7).collect(),
        }
    } else {
        vec![args.mode.parse().map_err(|_| {
            Error::InvalidArgument(format!("mode must be a number or `all`, got `{}`", args.mode))
        })?]
    };

    let family_name = &args.family;
    let mut runner = ExperimentRunner::new(&instance, config.experiment_config())?;
    if !config.experiment.pool_file.is_empty() {
        let text = std::fs::read_to_string(&config.experiment.pool_file)?;
        let (pool, selected) = io::load_su2_pool(&text)?;
        runner.set_pool(pool, selected)?;
        println!("reusing SU(2) pool from {}", config.experiment.pool_file);
    }
    let mut summary = io::file_header("summary", hash);
    summary.push_str(
        "mode\tlabel\texpectation\tgamma\teta\tcvar_upper\tp_feasible\tp_optimal\t\
         expectation_feasible\n",
    );
    // The coherent mode-1 result provides the 1/Γ-scaled reference series.
    let reference = if !trace_only && modes.iter().any(|&m| m != 1) {
        Some(runner.run(family, 1)?.clone())
    } else {
        None
    };
    for &mode in &modes {
        let result = runner.run(family, mode)?.clone();
        println!(
            "{family_name} mode {mode}: <H> {:.4}, CVaR {:.4}, P-feasible {:.4}",
            result.report.expectation, result.report.cvar_upper, result.report.p_feasible
        );
        let prefix = format!("{family_name}_mode{mode}");
        if trace_only {
            if let Some(trace) = &result.trace {
                let names: Vec<String> = result.params.iter().map(|(n, _)| n.clone()).collect();
                write_file(
                    &dir.join(format!("{prefix}_trace.csv")),
                    &io::opt_trace_csv(&names, trace, hash),
                )?;
            } else {
                println!("{family_name} mode {mode} has no optimization trace");
            }
        } else {
            let reference_for_mode = if mode != 1 { reference.as_ref() } else { None };
            write_mode_outputs(&dir, &instance, &prefix, &result, reference_for_mode, hash)?;
            summary.push_str(&summary_row(&result));
            if config.experiment.shots > 0
                && family == Family::Penalty
                && (mode == 2 || mode == 3)
            {
                emit_penalty_samples(&dir, &instance, &prefix, &result, &config, hash)?;
            }
        }
    }
    if !trace_only {
        write_file(&dir.join(format!("{family_name}_summary.tsv")), &summary)?;
    }
    Ok(())
}

fn cmd_verify(filter: Option<&str>) -> Result<bool> {
    let outcomes = verify::run_suite(filter)?;
    if outcomes.is_empty() {
        println!("no checks match filter");
        return Ok(false);
    }
    let mut all_passed = true;
    for outcome in &outcomes {
        let status = if outcome.passed { "PASS" } else { "FAIL" };
        println!("{status} {} ({:.1}s): {}", outcome.name, outcome.seconds, outcome.details);
        all_passed &= outcome.passed;
    }
    Ok(all_passed)
}

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Decompose { kind } => cmd_decompose(kind),
        Command::Run(args) => cmd_run(&args, false),
        Command::Optimize(args) => cmd_run(&args, true),
        Command::Verify { filter } => match cmd_verify(filter.as_deref()) {
            Ok(true) => Ok(()),
            Ok(false) => std::process::exit(1),
            Err(e) => Err(e),
        },
        Command::GraphGen { generator } => cmd_graph_gen(generator),
        Command::SolveExact { instance, mode } => cmd_solve_exact(&instance, &mode),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(2);
    }
}
