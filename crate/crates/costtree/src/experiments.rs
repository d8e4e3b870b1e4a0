//! Monte-Carlo studies on the built-in 20-node scenario: structure and
//! MAP error rates versus sample size, and the accuracy/cost trade-off
//! as the cost weight gamma varies. All runs are seed-deterministic and
//! emit plain CSV with the configuration echoed in comment lines.

use crate::inference::{brute_force_map, max_product_async, Potentials, Protocol};
use crate::learn::{async_learn, sync_learn, LearnedTree};
use crate::ldp::{
    error_exponent_async, error_exponent_sync, finite_sample_bound, SolverOptions,
};
use crate::model::{empirical_stats, TreeModel};
use crate::physnet::{CostMatrix, PhysicalNetwork};
use crate::util::splitmix64;
use rayon::prelude::*;
use std::fmt::Write as _;
use thiserror::Error;

/// Nodes in the built-in scenario.
pub const SCENARIO_NODES: usize = 20;
/// Cost scale of the built-in line network. Large enough that the
/// structure objective is cost-dominated at the top of the gamma range.
pub const DEFAULT_KAPPA: f64 = 1.0;
/// Cost scale used by the sample-size error studies, tuned so the
/// finite-sample structure error at gamma = 2 sits in the partial-error
/// regime around n = 10^4 while gamma = 0 converges by n = 3000.
pub const ASYNC_STUDY_KAPPA: f64 = 0.005;
/// Cost scale used by the trade-off studies, tuned so the MAP-error
/// transition of the diameter-penalized learner spans the gamma grid:
/// mostly-correct trees at gamma = 0.5, collapsed short-diameter trees
/// at gamma = 2.5, with a cost ratio near 2.4 between the two.
pub const SYNC_STUDY_KAPPA: f64 = 0.00026;
/// Frontier re-weighting strength of the diameter-penalized learner.
pub const REFERENCE_BETA: f64 = 1.0;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("gamma grid must be non-empty")]
    EmptyGammaGrid,
    #[error("sample-size grid must be non-empty and positive")]
    EmptySampleGrid,
    #[error("at least one trial is required")]
    ZeroTrials,
}

/// The 20-node reference data tree: breadth-first labels, root 0 with
/// three children, inner nodes with two children each, all conditionals
/// P(child=0 | parent=0) = 0.7 and P(child=0 | parent=1) = 0.3, root
/// marginal (0.7, 0.3). Diameter 6.
pub fn builtin_data_tree() -> TreeModel {
    let channel = [0.7, 0.3];
    let parents: [(usize, usize); 19] = [
        (0, 1),
        (0, 2),
        (0, 3),
        (1, 4),
        (1, 5),
        (2, 6),
        (2, 7),
        (3, 8),
        (3, 9),
        (4, 10),
        (4, 11),
        (5, 12),
        (5, 13),
        (6, 14),
        (6, 15),
        (7, 16),
        (7, 17),
        (8, 18),
        (8, 19),
    ];
    let channels: Vec<(usize, usize, [f64; 2])> =
        parents.iter().map(|&(p, c)| (p, c, channel)).collect();
    TreeModel::from_root_channels(SCENARIO_NODES, 0, [0.7, 0.3], &channels)
        .expect("reference tree is valid")
}

/// The 20-node line network: link (i, i+1) costs kappa * 1.1^(i+1) with
/// 1-based i, except 4 kappa, 2 kappa, 0.1 kappa on the first, third and
/// sixth links.
pub fn builtin_line_network(kappa: f64) -> PhysicalNetwork {
    let links: Vec<(usize, usize, f64)> = (0..SCENARIO_NODES - 1)
        .map(|k| {
            let c = match k {
                0 => 4.0,
                2 => 2.0,
                5 => 0.1,
                _ => 1.1f64.powi(k as i32 + 1),
            };
            (k, k + 1, kappa * c)
        })
        .collect();
    PhysicalNetwork::new(SCENARIO_NODES, links).expect("line network is valid")
}

/// Reference model plus the line network at the default cost scale.
pub fn builtin_scenario() -> (TreeModel, PhysicalNetwork) {
    (builtin_data_tree(), builtin_line_network(DEFAULT_KAPPA))
}

/// Tree a learner settles on given unlimited data: the learner run on
/// the model's exact pairwise marginals. Structure-error events in the
/// studies are deviations from this tree.
pub fn ideal_tree(
    model: &TreeModel,
    costs: &CostMatrix,
    gamma: f64,
    beta: f64,
    protocol: Protocol,
) -> LearnedTree {
    let marg = model.exact_marginals();
    match protocol {
        Protocol::Async => async_learn(&marg, costs, gamma),
        Protocol::Sync => sync_learn(&marg, costs, gamma, beta),
    }
}

/// Shared study parameters. Grids must be non-empty, trials >= 1.
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub protocol: Protocol,
    pub gammas: Vec<f64>,
    pub beta: f64,
    pub sample_sizes: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
}

impl StudyConfig {
    fn validate(&self) -> Result<(), ExperimentError> {
        if self.gammas.is_empty() {
            return Err(ExperimentError::EmptyGammaGrid);
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.iter().any(|&n| n == 0) {
            return Err(ExperimentError::EmptySampleGrid);
        }
        if self.trials == 0 {
            return Err(ExperimentError::ZeroTrials);
        }
        Ok(())
    }

    fn protocol_name(&self) -> &'static str {
        match self.protocol {
            Protocol::Async => "async",
            Protocol::Sync => "sync",
        }
    }
}

/// One learning trial: the learned structure with its error flags and
/// the per-protocol communication cost of running MAP inference on it.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub gamma: f64,
    pub n: usize,
    pub trial: usize,
    pub edges: Vec<(usize, usize)>,
    pub structure_error: bool,
    pub map_error: bool,
    pub cost: f64,
}

/// Aggregated grid point.
#[derive(Debug, Clone)]
pub struct StudyRow {
    pub gamma: f64,
    pub n: usize,
    pub trials: usize,
    pub structure_error_rate: f64,
    pub map_error_rate: f64,
    pub mean_cost: f64,
    /// Decay-rate upper bound on the structure-error probability; 0 when
    /// the exponent is infinite, may exceed 1 when vacuous.
    pub bound: f64,
}

#[derive(Debug, Clone)]
pub struct ErrorStudy {
    pub config: StudyConfig,
    pub rows: Vec<StudyRow>,
    pub records: Vec<TrialRecord>,
}

#[derive(Debug, Clone)]
pub struct TradeoffRow {
    pub gamma: f64,
    pub map_error_rate: f64,
    pub structure_error_rate: f64,
    pub mean_cost: f64,
    /// Mean cost divided by the cost of the gamma = 0 ideal tree.
    pub normalized_cost: f64,
}

#[derive(Debug, Clone)]
pub struct TradeoffStudy {
    pub config: StudyConfig,
    pub n: usize,
    pub rows: Vec<TradeoffRow>,
    pub records: Vec<TrialRecord>,
}

/// Stable per-trial seed chain: each level folds one index in.
fn trial_seed(master: u64, gamma_index: usize, n_index: usize, trial: usize) -> u64 {
    let a = splitmix64(master ^ splitmix64(gamma_index as u64 + 1));
    let b = splitmix64(a ^ splitmix64(n_index as u64 + 1));
    splitmix64(b ^ splitmix64(trial as u64 + 1))
}

/// Protocol cost of MAP inference on a learned tree: one message each
/// way per edge (async) or per edge per round over diam rounds (sync).
fn protocol_cost(protocol: Protocol, tree: &LearnedTree, costs: &CostMatrix) -> f64 {
    let link_sum = costs.total(&tree.edges);
    match protocol {
        Protocol::Async => 2.0 * link_sum,
        Protocol::Sync => 2.0 * tree.diameter as f64 * link_sum,
    }
}

/// Runs `trials` independent draws at one (gamma, n) grid point.
fn run_grid_point(
    model: &TreeModel,
    costs: &CostMatrix,
    cfg: &StudyConfig,
    gamma_index: usize,
    n_index: usize,
    gamma: f64,
    n: usize,
    ideal_edges: &[(usize, usize)],
    reference_map: &[u8],
) -> Vec<TrialRecord> {
    (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(cfg.seed, gamma_index, n_index, t);
            let samples = model.sample(n, seed).expect("positive n");
            let marg = empirical_stats(&samples).marginals();
            let learned = match cfg.protocol {
                Protocol::Async => async_learn(&marg, costs, gamma),
                Protocol::Sync => sync_learn(&marg, costs, gamma, cfg.beta),
            };
            let structure_error = learned.edges != ideal_edges;
            let pot = Potentials::new(&marg, &learned.edges).expect("learned spanning tree");
            let decoded = max_product_async(&pot, costs).expect("tree inference");
            let map_error = decoded.map_assignment != reference_map;
            let cost = protocol_cost(cfg.protocol, &learned, costs);
            TrialRecord {
                gamma,
                n,
                trial: t,
                edges: learned.edges,
                structure_error,
                map_error,
                cost,
            }
        })
        .collect()
}

fn rate(records: &[TrialRecord], f: impl Fn(&TrialRecord) -> bool) -> f64 {
    records.iter().filter(|r| f(r)).count() as f64 / records.len() as f64
}

/// Structure/MAP error rates and mean cost over an (n, gamma) grid, with
/// the large-deviation bound on structure error per grid point.
pub fn run_error_study(
    model: &TreeModel,
    network: &PhysicalNetwork,
    cfg: &StudyConfig,
) -> Result<ErrorStudy, ExperimentError> {
    cfg.validate()?;
    let costs = network.all_pairs_costs();
    let d = model.dimension();
    let reference_map = brute_force_map(model).expect("model within MAP cap");
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for (gi, &gamma) in cfg.gammas.iter().enumerate() {
        let ideal = ideal_tree(model, &costs, gamma, cfg.beta, cfg.protocol);
        let opts =
            SolverOptions { seed: splitmix64(cfg.seed ^ splitmix64(gi as u64)), ..SolverOptions::scan() };
        let exponent = match cfg.protocol {
            Protocol::Async => error_exponent_async(model, &costs, gamma, &opts),
            Protocol::Sync => error_exponent_sync(model, &costs, gamma, cfg.beta, &opts),
        }
        .expect("exponent solver")
        .exponent;
        for (ni, &n) in cfg.sample_sizes.iter().enumerate() {
            let trials =
                run_grid_point(model, &costs, cfg, gi, ni, gamma, n, &ideal.edges, &reference_map);
            rows.push(StudyRow {
                gamma,
                n,
                trials: trials.len(),
                structure_error_rate: rate(&trials, |r| r.structure_error),
                map_error_rate: rate(&trials, |r| r.map_error),
                mean_cost: trials.iter().map(|r| r.cost).sum::<f64>() / trials.len() as f64,
                bound: finite_sample_bound(d, n, exponent, cfg.protocol, 2),
            });
            records.extend(trials);
        }
    }
    Ok(ErrorStudy { config: cfg.clone(), rows, records })
}

/// Accuracy/cost trade-off across the gamma grid at fixed n (the first
/// entry of the sample-size grid).
pub fn run_tradeoff_study(
    model: &TreeModel,
    network: &PhysicalNetwork,
    cfg: &StudyConfig,
) -> Result<TradeoffStudy, ExperimentError> {
    cfg.validate()?;
    let costs = network.all_pairs_costs();
    let n = cfg.sample_sizes[0];
    let reference_map = brute_force_map(model).expect("model within MAP cap");
    let base = ideal_tree(model, &costs, 0.0, cfg.beta, cfg.protocol);
    let base_cost = protocol_cost(cfg.protocol, &base, &costs);
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for (gi, &gamma) in cfg.gammas.iter().enumerate() {
        let ideal = ideal_tree(model, &costs, gamma, cfg.beta, cfg.protocol);
        let trials =
            run_grid_point(model, &costs, cfg, gi, 0, gamma, n, &ideal.edges, &reference_map);
        let mean_cost = trials.iter().map(|r| r.cost).sum::<f64>() / trials.len() as f64;
        rows.push(TradeoffRow {
            gamma,
            map_error_rate: rate(&trials, |r| r.map_error),
            structure_error_rate: rate(&trials, |r| r.structure_error),
            mean_cost,
            normalized_cost: mean_cost / base_cost,
        });
        records.extend(trials);
    }
    Ok(TradeoffStudy { config: cfg.clone(), n, rows, records })
}

fn config_header(out: &mut String, cfg: &StudyConfig, kind: &str) {
    writeln!(out, "# study={kind}").unwrap();
    writeln!(out, "# algorithm={}", cfg.protocol_name()).unwrap();
    let gammas: Vec<String> = cfg.gammas.iter().map(|g| g.to_string()).collect();
    writeln!(out, "# gammas={}", gammas.join(",")).unwrap();
    writeln!(out, "# beta={}", cfg.beta).unwrap();
    let ns: Vec<String> = cfg.sample_sizes.iter().map(|n| n.to_string()).collect();
    writeln!(out, "# sample_sizes={}", ns.join(",")).unwrap();
    writeln!(out, "# trials={}", cfg.trials).unwrap();
    writeln!(out, "# seed={}", cfg.seed).unwrap();
}

impl ErrorStudy {
    /// Gnuplot-ready CSV: config in comment lines, one row per grid point.
    pub fn csv(&self) -> String {
        let mut out = String::new();
        config_header(&mut out, &self.config, "error");
        writeln!(out, "gamma,n,trials,structure_error_rate,map_error_rate,mean_cost,bound")
            .unwrap();
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{:.4},{:.4},{:.6},{:.6e}",
                r.gamma, r.n, r.trials, r.structure_error_rate, r.map_error_rate, r.mean_cost,
                r.bound
            )
            .unwrap();
        }
        out
    }
}

impl TradeoffStudy {
    pub fn csv(&self) -> String {
        let mut out = String::new();
        config_header(&mut out, &self.config, "tradeoff");
        writeln!(out, "gamma,n,trials,map_error_rate,structure_error_rate,mean_cost,normalized_cost")
            .unwrap();
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{:.4},{:.4},{:.6},{:.6}",
                r.gamma, self.n, self.config.trials, r.map_error_rate, r.structure_error_rate,
                r.mean_cost, r.normalized_cost
            )
            .unwrap();
        }
        out
    }
}
