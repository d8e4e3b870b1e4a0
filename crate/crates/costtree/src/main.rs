//! Command-line front end: learn trees from samples, run the two
//! message-passing protocols, evaluate error exponents, verify the
//! exact-cover gadget, and drive the Monte-Carlo studies. All output is
//! deterministic for a fixed invocation, so reruns are byte-identical.

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use costtree::experiments::{
    builtin_data_tree, builtin_line_network, run_error_study, run_tradeoff_study, StudyConfig,
    DEFAULT_KAPPA, REFERENCE_BETA,
};
use costtree::formats;
use costtree::hardness::{build_gadget, ordering_checks, verify_reduction, X3CInstance};
use costtree::inference::{max_product_async, max_product_sync, Potentials, Protocol};
use costtree::learn::{
    async_learn, brute_force_async_opt, brute_force_sync_opt, objective_value, sync_learn,
    ObjectiveMode, BRUTE_FORCE_MAX_NODES,
};
use costtree::ldp::{error_exponent_async, error_exponent_sync, Rate, SolverOptions};
use costtree::model::TreeModel;
use costtree::physnet::PhysicalNetwork;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "costtree",
    version,
    about = "Communication-cost-aware tree learning, distributed MAP inference, \
             error-exponent evaluation, and exact-cover gadget verification"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    /// Maximum-weight spanning tree on mutual information minus cost.
    Async,
    /// Greedy growth with diameter-sensitive re-weighting.
    Sync,
    /// Exhaustive maximizer of the async objective (d <= 9).
    BruteAsync,
    /// Exhaustive maximizer of the sync objective (d <= 9).
    BruteSync,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolArg {
    /// Sequential two-sweep unicast schedule.
    Async,
    /// Parallel flooding schedule, one round per diameter step.
    Sync,
}

impl From<ProtocolArg> for Protocol {
    fn from(p: ProtocolArg) -> Protocol {
        match p {
            ProtocolArg::Async => Protocol::Async,
            ProtocolArg::Sync => Protocol::Sync,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StudyKindArg {
    /// Structure/MAP error rates versus sample size, with decay bounds.
    Error,
    /// Accuracy versus communication cost across the gamma grid.
    Tradeoff,
}

#[derive(Subcommand)]
enum Cmd {
    /// Learn a spanning tree from a samples file.
    Learn {
        #[arg(long, value_enum)]
        algo: AlgoArg,
        /// Communication-cost weight in the structure objective.
        #[arg(long)]
        gamma: f64,
        /// Frontier re-weighting strength; sync learner only.
        #[arg(long)]
        beta: Option<f64>,
        /// CSV of 0/1 samples, one row per observation.
        #[arg(long)]
        samples: PathBuf,
        /// Network file, or `line20` for the built-in 20-node line.
        #[arg(long)]
        network: String,
        /// Cost scale of the built-in line network.
        #[arg(long)]
        kappa: Option<f64>,
        /// Output tree file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run max-product message passing on a model restricted to a tree.
    Infer {
        #[arg(long, value_enum)]
        protocol: ProtocolArg,
        /// Model file supplying node and edge marginals.
        #[arg(long)]
        model: PathBuf,
        /// Tree file naming the edges to run on.
        #[arg(long)]
        tree: PathBuf,
        /// Network file, or `line20` for the built-in 20-node line.
        #[arg(long)]
        network: String,
        /// Cost scale of the built-in line network.
        #[arg(long)]
        kappa: Option<f64>,
    },
    /// Evaluate the structure-error exponent of a learner on a model.
    Rate {
        #[arg(long, value_enum)]
        mode: ProtocolArg,
        #[arg(long)]
        model: PathBuf,
        /// Network file, or `line20` for the built-in 20-node line.
        #[arg(long)]
        network: String,
        /// Cost scale of the built-in line network.
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        gamma: f64,
        /// Frontier re-weighting strength; sync mode only.
        #[arg(long)]
        beta: Option<f64>,
        /// Solver convergence tolerance.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Seed of the solver's random restarts.
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Random restarts per crossover problem.
        #[arg(long, default_value_t = 32)]
        starts: usize,
    },
    /// Build the exact-cover gadget and verify the reduction claim.
    Hardness {
        /// Cover size: the element universe is 1..=3s.
        #[arg(long)]
        s: usize,
        /// Subsets file: one triple of element labels per line.
        #[arg(long)]
        subsets: PathBuf,
    },
    /// Run a Monte-Carlo study from a key=value config file.
    Experiment {
        #[arg(value_enum)]
        kind: StudyKindArg,
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the config's `out` key.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_model(path: &Path) -> Result<TreeModel> {
    formats::parse_model(&read_text(path)?)
        .with_context(|| format!("parsing model {}", path.display()))
}

/// `line20` selects the built-in 20-node line (scaled by --kappa);
/// anything else is a network file path, with which --kappa is invalid.
fn load_network(spec: &str, kappa: Option<f64>) -> Result<PhysicalNetwork> {
    if spec == "line20" {
        return Ok(builtin_line_network(kappa.unwrap_or(DEFAULT_KAPPA)));
    }
    if kappa.is_some() {
        bail!("--kappa applies only to the built-in line20 network");
    }
    formats::parse_network(&read_text(Path::new(spec))?)
        .with_context(|| format!("parsing network {spec}"))
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Learn { algo, gamma, beta, samples, network, kappa, out } => {
            cmd_learn(algo, gamma, beta, &samples, &network, kappa, &out)
        }
        Cmd::Infer { protocol, model, tree, network, kappa } => {
            cmd_infer(protocol.into(), &model, &tree, &network, kappa)
        }
        Cmd::Rate { mode, model, network, kappa, gamma, beta, tol, seed, starts } => {
            cmd_rate(mode.into(), &model, &network, kappa, gamma, beta, tol, seed, starts)
        }
        Cmd::Hardness { s, subsets } => cmd_hardness(s, &subsets),
        Cmd::Experiment { kind, config, out } => cmd_experiment(kind, &config, out),
    }
}

fn cmd_learn(
    algo: AlgoArg,
    gamma: f64,
    beta: Option<f64>,
    samples: &Path,
    network: &str,
    kappa: Option<f64>,
    out: &Path,
) -> Result<()> {
    if beta.is_some() && !matches!(algo, AlgoArg::Sync) {
        bail!("--beta applies only to the sync learner");
    }
    let samples = formats::parse_samples(&read_text(samples)?)
        .with_context(|| format!("parsing samples {}", samples.display()))?;
    let net = load_network(network, kappa)?;
    if net.dimension() != samples.dimension() {
        bail!(
            "samples have {} nodes but the network has {}",
            samples.dimension(),
            net.dimension()
        );
    }
    let marg = costtree::model::empirical_stats(&samples).marginals();
    let costs = net.all_pairs_costs();
    let (tree, mode) = match algo {
        AlgoArg::Async => (async_learn(&marg, &costs, gamma), ObjectiveMode::Async),
        AlgoArg::Sync => (
            sync_learn(&marg, &costs, gamma, beta.unwrap_or(REFERENCE_BETA)),
            ObjectiveMode::Sync,
        ),
        AlgoArg::BruteAsync => (brute_force_async_opt(&marg, &costs, gamma)?, ObjectiveMode::Async),
        AlgoArg::BruteSync => (brute_force_sync_opt(&marg, &costs, gamma)?, ObjectiveMode::Sync),
    };
    let objective = objective_value(&tree.edges, &marg, &costs, gamma, mode);
    let text = formats::write_tree(&tree, objective);
    std::fs::write(out, &text).with_context(|| format!("writing {}", out.display()))?;
    // First line of the file is the metadata summary.
    println!("{}", text.lines().next().unwrap_or_default());
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_infer(
    protocol: Protocol,
    model: &Path,
    tree: &Path,
    network: &str,
    kappa: Option<f64>,
) -> Result<()> {
    let model = load_model(model)?;
    let tree_file = formats::parse_tree(&read_text(tree)?)
        .with_context(|| format!("parsing tree {}", tree.display()))?;
    let net = load_network(network, kappa)?;
    if net.dimension() != model.dimension() {
        bail!("model has {} nodes but the network has {}", model.dimension(), net.dimension());
    }
    let pot = Potentials::new(&model.exact_marginals(), &tree_file.edges)
        .context("tree file does not span the model's nodes")?;
    let costs = net.all_pairs_costs();
    let result = match protocol {
        Protocol::Async => max_product_async(&pot, &costs)?,
        Protocol::Sync => max_product_sync(&pot, &costs)?,
    };
    let assignment: String =
        result.map_assignment.iter().map(|&b| char::from(b'0' + b)).collect();
    println!("assignment: {assignment}");
    println!("messages_sent: {}", result.messages_sent);
    println!("total_cost: {}", result.total_cost);
    Ok(())
}

fn json_rate(rate: Rate) -> String {
    match rate {
        Rate::Finite(k) => format!("{k}"),
        Rate::Infinite => "\"infinite\"".to_string(),
    }
}

fn json_edge(e: (usize, usize)) -> String {
    format!("[{},{}]", e.0 + 1, e.1 + 1)
}

fn json_floats(v: &[f64]) -> String {
    let body: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
    format!("[{}]", body.join(","))
}

#[allow(clippy::too_many_arguments)]
fn cmd_rate(
    mode: Protocol,
    model: &Path,
    network: &str,
    kappa: Option<f64>,
    gamma: f64,
    beta: Option<f64>,
    tol: f64,
    seed: u64,
    starts: usize,
) -> Result<()> {
    if beta.is_some() && mode == Protocol::Async {
        bail!("--beta applies only to the sync mode");
    }
    let model = load_model(model)?;
    let net = load_network(network, kappa)?;
    if net.dimension() != model.dimension() {
        bail!("model has {} nodes but the network has {}", model.dimension(), net.dimension());
    }
    let costs = net.all_pairs_costs();
    let opts = SolverOptions { tol, seed, starts, ..SolverOptions::default() };
    let (report, beta_json) = match mode {
        Protocol::Async => (error_exponent_async(&model, &costs, gamma, &opts)?, "null".into()),
        Protocol::Sync => {
            let b = beta.unwrap_or(REFERENCE_BETA);
            (error_exponent_sync(&model, &costs, gamma, b, &opts)?, format!("{b}"))
        }
    };
    let mut out = String::from("{\n");
    let _ = writeln!(
        out,
        "  \"algorithm\": \"{}\",",
        match mode {
            Protocol::Async => "async",
            Protocol::Sync => "sync",
        }
    );
    let _ = writeln!(out, "  \"gamma\": {gamma},");
    let _ = writeln!(out, "  \"beta\": {beta_json},");
    let _ = writeln!(out, "  \"exponent\": {},", json_rate(report.exponent));
    let ideal: Vec<String> = report.ideal_edges.iter().map(|&e| json_edge(e)).collect();
    let _ = writeln!(out, "  \"ideal_edges\": [{}],", ideal.join(","));
    let _ = writeln!(out, "  \"pairs\": [");
    let last = report.pairs.len().saturating_sub(1);
    for (k, p) in report.pairs.iter().enumerate() {
        let minim = match &p.minimizer {
            Some(q) => format!(",\"minimizer\":{}", json_floats(q)),
            None => String::new(),
        };
        let _ = writeln!(
            out,
            "    {{\"favored\":{},\"rival\":{},\"rate\":{}{}}}{}",
            json_edge(p.favored),
            json_edge(p.rival),
            json_rate(p.rate),
            minim,
            if k == last { "" } else { "," }
        );
    }
    out.push_str("  ]\n}");
    println!("{out}");
    Ok(())
}

fn cmd_hardness(s: usize, subsets: &Path) -> Result<()> {
    let triples = formats::parse_subsets(&read_text(subsets)?)
        .with_context(|| format!("parsing subsets {}", subsets.display()))?;
    let inst = X3CInstance::new(s, triples)?;
    let g = build_gadget(&inst);
    let [i1, i2, i3] = g.hop_mi();
    println!(
        "instance: s={} q={} elements={}",
        inst.s(),
        inst.subset_count(),
        inst.element_count()
    );
    println!(
        "gadget: d={} delta={} tail-cost-unit={} hop-mi=[{i1},{i2},{i3}]",
        g.dimension(),
        g.delta(),
        g.tail_cost()
    );
    println!("claimed diameter-4 objective: {}", g.claimed_optimum());
    println!("ordering checks:");
    let checks = ordering_checks(&g);
    for c in &checks {
        println!("  {} {} (margin {})", if c.holds { "ok  " } else { "FAIL" }, c.what, c.margin);
    }
    let ordering_holds = checks.iter().all(|c| c.holds);
    if ordering_holds {
        println!("ordering precondition: holds at this instance scale");
    } else {
        println!(
            "ordering precondition: FAILS; at this size the tail cost unit does not \
             dominate the residual mutual information, so rival tree shapes overtake \
             the claimed diameter-4 optimum"
        );
    }
    if g.dimension() > BRUTE_FORCE_MAX_NODES {
        println!(
            "exhaustive verification: skipped ({} nodes exceed the {}-node enumeration limit)",
            g.dimension(),
            BRUTE_FORCE_MAX_NODES
        );
        return Ok(());
    }
    let verdict = verify_reduction(&inst)?;
    println!("exact cover exists: {}", if verdict.x3c_solvable { "yes" } else { "no" });
    println!(
        "optimal tree objective: {} (diameter {})",
        verdict.opt_objective, verdict.opt_diameter
    );
    let edges: Vec<String> =
        verdict.opt_edges.iter().map(|&(i, j)| format!("{}-{}", i + 1, j + 1)).collect();
    println!("optimal tree edges: {}", edges.join(" "));
    let verdict_line = match (verdict.x3c_solvable, verdict.reduction_holds) {
        (true, true) => "confirmed: the optimum is the claimed diameter-4 cover tree".to_string(),
        (false, true) => {
            "confirmed (negative direction): no tree reaches the claimed objective at diameter 4"
                .to_string()
        }
        (true, false) => format!(
            "NOT confirmed: a cover exists but the optimum has diameter {} and objective {} \
             versus the claimed {}",
            verdict.opt_diameter, verdict.opt_objective, verdict.claimed_objective
        ),
        (false, false) => format!(
            "NOT confirmed: no cover exists yet a diameter-4 tree attains the claimed \
             objective {}",
            verdict.claimed_objective
        ),
    };
    println!("equivalence on this instance: {verdict_line}");
    Ok(())
}

fn cmd_experiment(kind: StudyKindArg, config: &Path, out_flag: Option<PathBuf>) -> Result<()> {
    let cfg_text = read_text(config)?;
    let file = formats::parse_study_config(&cfg_text)
        .with_context(|| format!("parsing config {}", config.display()))?;
    let model = match &file.model {
        formats::ModelSource::Builtin => builtin_data_tree(),
        formats::ModelSource::Path(p) => load_model(Path::new(p))?,
    };
    let network = match &file.network {
        formats::NetworkSource::BuiltinLine { kappa } => builtin_line_network(*kappa),
        formats::NetworkSource::Path(p) => {
            formats::parse_network(&read_text(Path::new(p))?)
                .with_context(|| format!("parsing network {p}"))?
        }
    };
    if network.dimension() != model.dimension() {
        bail!(
            "model has {} nodes but the network has {}",
            model.dimension(),
            network.dimension()
        );
    }
    let protocol = file.algorithm.unwrap_or(match kind {
        StudyKindArg::Error => Protocol::Async,
        StudyKindArg::Tradeoff => Protocol::Sync,
    });
    let cfg = StudyConfig {
        protocol,
        gammas: file.gammas,
        beta: file.beta,
        sample_sizes: file.sample_sizes,
        trials: file.trials,
        seed: file.seed,
    };
    let out_dir = out_flag
        .or_else(|| file.out_dir.as_deref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    let (name, csv, rows) = match kind {
        StudyKindArg::Error => {
            let study = run_error_study(&model, &network, &cfg)?;
            ("error_study.csv", study.csv(), study.rows.len())
        }
        StudyKindArg::Tradeoff => {
            let study = run_tradeoff_study(&model, &network, &cfg)?;
            ("tradeoff_study.csv", study.csv(), study.rows.len())
        }
    };
    let path = out_dir.join(name);
    std::fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {} ({rows} rows)", path.display());
    Ok(())
}
