//! Cost-aware structure learners and exhaustive spanning-tree oracles.
//!
//! Both learners consume pairwise marginals (empirical or exact) and a
//! matrix of per-message communication costs. The asynchronous learner
//! maximizes sum_e I_e - 2 gamma c_e over spanning trees, a plain
//! maximum-weight spanning tree. The synchronous objective multiplies the
//! cost term by the tree diameter, which makes exact optimization hard, so
//! a greedy cut-growing heuristic is used; an exhaustive oracle over all
//! d^(d-2) trees is provided for small d.

use rayon::prelude::*;
use thiserror::Error;

use crate::model::PairwiseMarginals;
use crate::physnet::CostMatrix;
use crate::util::{adjacency, all_pairs, bfs_distances, is_spanning_tree, pair_count, pair_index, UnionFind};

/// Exhaustive enumeration cap: 9^7 is about 4.8M trees.
pub const BRUTE_FORCE_MAX_NODES: usize = 9;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("brute-force enumeration supports at most {max} nodes, got {got}")]
    TooLarge { got: usize, max: usize },
    #[error("marginals dimension {0} does not match cost dimension {1}")]
    DimensionMismatch(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Async,
    Sync,
    BruteForceAsync,
    BruteForceSync,
}

impl Algorithm {
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Async => "async",
            Algorithm::Sync => "sync",
            Algorithm::BruteForceAsync => "brute-async",
            Algorithm::BruteForceSync => "brute-sync",
        }
    }
}

/// A learned spanning tree with the weights its edges carried when chosen.
#[derive(Debug, Clone)]
pub struct LearnedTree {
    pub edges: Vec<(usize, usize)>,
    pub algorithm: Algorithm,
    pub gamma: f64,
    pub beta: Option<f64>,
    /// Final weight of each edge, aligned with `edges`.
    pub edge_weights: Vec<f64>,
    /// Edge count of the longest simple path.
    pub diameter: usize,
}

/// Complete candidate graph: mutual information, cost, and current weight
/// for every unordered node pair.
#[derive(Debug, Clone)]
pub struct WeightedCandidateGraph {
    d: usize,
    mi: Vec<f64>,
    cost: Vec<f64>,
    weight: Vec<f64>,
}

impl WeightedCandidateGraph {
    /// Initializes weights to I_e - 2 gamma c_e.
    pub fn new(marg: &PairwiseMarginals, costs: &CostMatrix, gamma: f64) -> Self {
        let d = marg.dimension();
        assert_eq!(d, costs.dimension(), "marginals and costs disagree on d");
        let mut mi = vec![0.0; pair_count(d)];
        let mut cost = vec![0.0; pair_count(d)];
        let mut weight = vec![0.0; pair_count(d)];
        for (i, j) in all_pairs(d) {
            let k = pair_index(d, i, j);
            mi[k] = marg.mi(i, j);
            cost[k] = costs.cost(i, j);
            weight[k] = mi[k] - 2.0 * gamma * cost[k];
        }
        WeightedCandidateGraph { d, mi, cost, weight }
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn mi(&self, i: usize, j: usize) -> f64 {
        self.mi[pair_index(self.d, i, j)]
    }

    pub fn cost(&self, i: usize, j: usize) -> f64 {
        self.cost[pair_index(self.d, i, j)]
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weight[pair_index(self.d, i, j)]
    }
}

/// Maximum-weight spanning tree on weights I_e - 2 gamma c_e, built with
/// Kruskal. Ties break toward the lexicographically smaller edge, which
/// makes the output deterministic.
pub fn async_learn(marg: &PairwiseMarginals, costs: &CostMatrix, gamma: f64) -> LearnedTree {
    assert!(gamma >= 0.0);
    let g = WeightedCandidateGraph::new(marg, costs, gamma);
    let d = g.d;
    let mut order: Vec<(usize, usize)> = all_pairs(d).collect();
    order.sort_by(|&a, &b| {
        g.weight(b.0, b.1)
            .partial_cmp(&g.weight(a.0, a.1))
            .expect("weights are finite")
            .then(a.cmp(&b))
    });
    let mut uf = UnionFind::new(d);
    let mut edges = Vec::with_capacity(d.saturating_sub(1));
    for (i, j) in order {
        if uf.union(i, j) {
            edges.push((i, j));
            if edges.len() + 1 == d {
                break;
            }
        }
    }
    edges.sort_unstable();
    let edge_weights = edges.iter().map(|&(i, j)| g.weight(i, j)).collect();
    let diameter = tree_diameter(d, &edges);
    LearnedTree { edges, algorithm: Algorithm::Async, gamma, beta: None, edge_weights, diameter }
}

/// One candidate edge of the synchronous greedy frontier, with the weight
/// it carried when the frontier was scanned.
#[derive(Debug, Clone, Copy)]
pub struct SyncCandidate {
    pub edge: (usize, usize),
    pub mi: f64,
    /// Full weight; `weight - mi` is the distribution-independent part.
    pub weight: f64,
}

/// One growth step of the synchronous greedy learner.
#[derive(Debug, Clone)]
pub struct SyncStep {
    /// Edges already selected before this step, sorted.
    pub tree_before: Vec<(usize, usize)>,
    /// The full candidate frontier scanned at this step.
    pub candidates: Vec<SyncCandidate>,
    /// The maximum-weight candidate (lexicographic tie-break).
    pub chosen: (usize, usize),
}

/// A synchronous greedy run: the resulting tree plus the per-step
/// frontier weights needed for error-exponent analysis.
#[derive(Debug, Clone)]
pub struct SyncRun {
    pub tree: LearnedTree,
    pub steps: Vec<SyncStep>,
}

/// Greedy diameter-penalized learner. The first edge is the maximum of
/// the initial weights I_e - 2 gamma c_e over all pairs; afterwards the
/// frontier is the cut between the grown tree and the rest, reweighted by
///
///   w_e = I_e - 2 gamma diam(T + e) c_e - beta (d/|E_S|) K_e(T)
///         - 2 gamma D(T) c_e,
///
/// where K_e(T) charges the diameter increase against the cost already
/// spent, K_e(T) = (diam(T + e) - diam(T)) sum_{e' in E_S} 2 gamma c_e',
/// and D(T) = sqrt(d) - sqrt(|E_S|) anticipates future diameter growth.
pub fn sync_learn_trace(
    marg: &PairwiseMarginals,
    costs: &CostMatrix,
    gamma: f64,
    beta: f64,
) -> SyncRun {
    assert!(gamma >= 0.0 && beta >= 0.0);
    let g = WeightedCandidateGraph::new(marg, costs, gamma);
    let d = g.d;
    if d == 1 {
        let tree = LearnedTree {
            edges: vec![],
            algorithm: Algorithm::Sync,
            gamma,
            beta: Some(beta),
            edge_weights: vec![],
            diameter: 0,
        };
        return SyncRun { tree, steps: vec![] };
    }

    let mut in_tree = vec![false; d];
    let mut tree_edges: Vec<(usize, usize)> = Vec::with_capacity(d - 1);
    let mut chosen_weights: Vec<((usize, usize), f64)> = Vec::with_capacity(d - 1);
    let mut steps: Vec<SyncStep> = Vec::with_capacity(d - 1);
    let mut spent = 0.0; // sum of 2 gamma c_e over selected edges

    // First pick: initial weights over every pair.
    let init: Vec<SyncCandidate> = all_pairs(d)
        .map(|(i, j)| SyncCandidate { edge: (i, j), mi: g.mi(i, j), weight: g.weight(i, j) })
        .collect();
    let first = best_candidate(&init);
    steps.push(SyncStep { tree_before: vec![], candidates: init, chosen: first.edge });
    in_tree[first.edge.0] = true;
    in_tree[first.edge.1] = true;
    tree_edges.push(first.edge);
    chosen_weights.push((first.edge, first.weight));
    spent += 2.0 * gamma * g.cost(first.edge.0, first.edge.1);

    while tree_edges.len() < d - 1 {
        // Eccentricity of every tree node in the current partial tree.
        let members: Vec<usize> = (0..d).filter(|&v| in_tree[v]).collect();
        let adj = adjacency(d, &tree_edges);
        let mut ecc = vec![0usize; d];
        let mut diam_now = 0usize;
        for &v in &members {
            let dist = bfs_distances(&adj, v);
            let e = members.iter().map(|&u| dist[u]).max().unwrap();
            ecc[v] = e;
            diam_now = diam_now.max(e);
        }
        let edges_in = tree_edges.len() as f64;
        let future = (d as f64).sqrt() - edges_in.sqrt();

        let mut frontier: Vec<SyncCandidate> = Vec::new();
        for &u in &members {
            for v in 0..d {
                if in_tree[v] {
                    continue;
                }
                // Attaching leaf v at u: new paths end at v with length
                // ecc(u) + 1, so the diameter is max(diam, ecc(u) + 1).
                let grown = diam_now.max(ecc[u] + 1) as f64;
                let increase = grown - diam_now as f64;
                let c = g.cost(u, v);
                let w = g.mi(u, v)
                    - 2.0 * gamma * grown * c
                    - beta * (d as f64 / edges_in) * increase * spent
                    - 2.0 * gamma * future * c;
                let edge = (u.min(v), u.max(v));
                frontier.push(SyncCandidate { edge, mi: g.mi(u, v), weight: w });
            }
        }
        frontier.sort_unstable_by_key(|c| c.edge);
        let pick = best_candidate(&frontier);
        let mut tree_before = tree_edges.clone();
        tree_before.sort_unstable();
        steps.push(SyncStep { tree_before, candidates: frontier, chosen: pick.edge });
        in_tree[pick.edge.0] = true;
        in_tree[pick.edge.1] = true;
        tree_edges.push(pick.edge);
        chosen_weights.push((pick.edge, pick.weight));
        spent += 2.0 * gamma * g.cost(pick.edge.0, pick.edge.1);
    }

    chosen_weights.sort_unstable_by_key(|&(e, _)| e);
    let edges: Vec<(usize, usize)> = chosen_weights.iter().map(|&(e, _)| e).collect();
    let edge_weights: Vec<f64> = chosen_weights.iter().map(|&(_, w)| w).collect();
    let diameter = tree_diameter(d, &edges);
    let tree = LearnedTree {
        edges,
        algorithm: Algorithm::Sync,
        gamma,
        beta: Some(beta),
        edge_weights,
        diameter,
    };
    SyncRun { tree, steps }
}

/// Greedy diameter-penalized learner; see [`sync_learn_trace`].
pub fn sync_learn(
    marg: &PairwiseMarginals,
    costs: &CostMatrix,
    gamma: f64,
    beta: f64,
) -> LearnedTree {
    sync_learn_trace(marg, costs, gamma, beta).tree
}

fn best_candidate(cands: &[SyncCandidate]) -> SyncCandidate {
    let mut best = cands[0];
    for &c in &cands[1..] {
        if c.weight > best.weight || (c.weight == best.weight && c.edge < best.edge) {
            best = c;
        }
    }
    best
}

/// Number of labeled spanning trees on d nodes (d^(d-2)).
pub fn spanning_tree_count(d: usize) -> u64 {
    match d {
        0 => 0,
        1 | 2 => 1,
        _ => (d as u64).pow(d as u32 - 2),
    }
}

/// The spanning tree with the given enumeration index, decoded from the
/// base-d digits of the index read as a sequence of node labels.
pub fn spanning_tree_by_index(d: usize, index: u64) -> Vec<(usize, usize)> {
    debug_assert!(index < spanning_tree_count(d));
    if d == 1 {
        return vec![];
    }
    if d == 2 {
        return vec![(0, 1)];
    }
    let mut seq = vec![0usize; d - 2];
    let mut rest = index;
    for slot in seq.iter_mut() {
        *slot = (rest % d as u64) as usize;
        rest /= d as u64;
    }
    decode_tree_sequence(d, &seq)
}

/// Classic linear-time decode of a node-label sequence into its tree.
fn decode_tree_sequence(d: usize, seq: &[usize]) -> Vec<(usize, usize)> {
    debug_assert_eq!(seq.len(), d - 2);
    let mut degree = vec![1usize; d];
    for &s in seq {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(d - 1);
    let mut ptr = 0usize;
    while degree[ptr] != 1 {
        ptr += 1;
    }
    let mut leaf = ptr;
    for &s in seq {
        edges.push((leaf.min(s), leaf.max(s)));
        degree[s] -= 1;
        if degree[s] == 1 && s < ptr {
            leaf = s;
        } else {
            ptr += 1;
            while degree[ptr] != 1 {
                ptr += 1;
            }
            leaf = ptr;
        }
    }
    edges.push((leaf.min(d - 1), leaf.max(d - 1)));
    edges
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveMode {
    Async,
    Sync,
}

/// Reduced structure objective of a spanning tree:
/// async: sum_e I_e - 2 gamma c_e; sync: sum_e I_e - 2 gamma diam(T) sum_e c_e.
pub fn objective_value(
    edges: &[(usize, usize)],
    marg: &PairwiseMarginals,
    costs: &CostMatrix,
    gamma: f64,
    mode: ObjectiveMode,
) -> f64 {
    let d = marg.dimension();
    debug_assert!(is_spanning_tree(d, edges));
    let mi_sum: f64 = edges.iter().map(|&(i, j)| marg.mi(i, j)).sum();
    let cost_sum: f64 = edges.iter().map(|&(i, j)| costs.cost(i, j)).sum();
    match mode {
        ObjectiveMode::Async => mi_sum - 2.0 * gamma * cost_sum,
        ObjectiveMode::Sync => {
            let diam = tree_diameter(d, edges) as f64;
            mi_sum - 2.0 * gamma * diam * cost_sum
        }
    }
}

fn brute_force(
    marg: &PairwiseMarginals,
    costs: &CostMatrix,
    gamma: f64,
    mode: ObjectiveMode,
) -> Result<LearnedTree, LearnError> {
    let d = marg.dimension();
    if d != costs.dimension() {
        return Err(LearnError::DimensionMismatch(d, costs.dimension()));
    }
    if d > BRUTE_FORCE_MAX_NODES {
        return Err(LearnError::TooLarge { got: d, max: BRUTE_FORCE_MAX_NODES });
    }
    let g = WeightedCandidateGraph::new(marg, costs, gamma);
    let score = |edges: &[(usize, usize)]| -> f64 {
        let mi_sum: f64 = edges.iter().map(|&(i, j)| g.mi(i, j)).sum();
        let cost_sum: f64 = edges.iter().map(|&(i, j)| g.cost(i, j)).sum();
        match mode {
            ObjectiveMode::Async => mi_sum - 2.0 * gamma * cost_sum,
            ObjectiveMode::Sync => {
                mi_sum - 2.0 * gamma * tree_diameter(d, edges) as f64 * cost_sum
            }
        }
    };
    // Exact float equality below: ties are resolved toward the
    // lexicographically smaller sorted edge list, a total order, so the
    // parallel reduction is deterministic.
    let better = |a: &(f64, Vec<(usize, usize)>), b: &(f64, Vec<(usize, usize)>)| -> bool {
        a.0 > b.0 || (a.0 == b.0 && a.1 < b.1)
    };
    let best = (0..spanning_tree_count(d))
        .into_par_iter()
        .map(|idx| {
            let mut edges = spanning_tree_by_index(d, idx);
            edges.sort_unstable();
            (score(&edges), edges)
        })
        .reduce_with(|a, b| if better(&a, &b) { a } else { b })
        .expect("at least one spanning tree");
    let (_, edges) = best;
    let diameter = tree_diameter(d, &edges);
    let edge_weights = edges
        .iter()
        .map(|&(i, j)| match mode {
            ObjectiveMode::Async => g.weight(i, j),
            ObjectiveMode::Sync => g.mi(i, j) - 2.0 * gamma * diameter as f64 * g.cost(i, j),
        })
        .collect();
    Ok(LearnedTree {
        edges,
        algorithm: match mode {
            ObjectiveMode::Async => Algorithm::BruteForceAsync,
            ObjectiveMode::Sync => Algorithm::BruteForceSync,
        },
        gamma,
        beta: None,
        edge_weights,
        diameter,
    })
}

/// Exact maximizer of sum_e I_e - 2 gamma c_e by enumeration (d <= 9).
pub fn brute_force_async_opt(
    marg: &PairwiseMarginals,
    costs: &CostMatrix,
    gamma: f64,
) -> Result<LearnedTree, LearnError> {
    brute_force(marg, costs, gamma, ObjectiveMode::Async)
}

/// Exact maximizer of sum_e I_e - 2 gamma diam(T) sum_e c_e by
/// enumeration (d <= 9).
pub fn brute_force_sync_opt(
    marg: &PairwiseMarginals,
    costs: &CostMatrix,
    gamma: f64,
) -> Result<LearnedTree, LearnError> {
    brute_force(marg, costs, gamma, ObjectiveMode::Sync)
}

/// Edge count of the longest simple path, by double BFS.
pub fn tree_diameter(d: usize, edges: &[(usize, usize)]) -> usize {
    assert!(is_spanning_tree(d, edges), "diameter requires a spanning tree");
    if d <= 1 {
        return 0;
    }
    let adj = adjacency(d, edges);
    let from0 = bfs_distances(&adj, 0);
    let far = (0..d).max_by_key(|&v| from0[v]).unwrap();
    let dist = bfs_distances(&adj, far);
    (0..d).map(|v| dist[v]).max().unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TreeModel;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Random but internally consistent pairwise view: node marginals are
    /// uniform and each pair joint is an independent random distribution.
    /// Learners only read per-pair mutual information, so cross-pair
    /// consistency is not needed.
    pub fn random_marginals(d: usize, rng: &mut ChaCha8Rng) -> PairwiseMarginals {
        let node = vec![[0.5, 0.5]; d];
        let pair = (0..pair_count(d))
            .map(|_| {
                let raw: [f64; 4] = [
                    rng.gen_range(0.01..1.0),
                    rng.gen_range(0.01..1.0),
                    rng.gen_range(0.01..1.0),
                    rng.gen_range(0.01..1.0),
                ];
                let s: f64 = raw.iter().sum();
                [[raw[0] / s, raw[1] / s], [raw[2] / s, raw[3] / s]]
            })
            .collect();
        PairwiseMarginals::new(d, node, pair)
    }

    fn random_costs(d: usize, rng: &mut ChaCha8Rng) -> CostMatrix {
        CostMatrix::from_pairs(d, (0..pair_count(d)).map(|_| rng.gen_range(0.05..1.0)).collect())
            .unwrap()
    }

    #[test]
    fn diameter_of_paths_and_stars() {
        let path: Vec<(usize, usize)> = (0..5).map(|i| (i, i + 1)).collect();
        assert_eq!(tree_diameter(6, &path), 5);
        let star: Vec<(usize, usize)> = (1..6).map(|i| (0, i)).collect();
        assert_eq!(tree_diameter(6, &star), 2);
        assert_eq!(tree_diameter(2, &[(0, 1)]), 1);
        assert_eq!(tree_diameter(1, &[]), 0);
    }

    #[test]
    fn tree_enumeration_is_complete_and_distinct() {
        let d = 5;
        let mut seen = std::collections::HashSet::new();
        for idx in 0..spanning_tree_count(d) {
            let mut edges = spanning_tree_by_index(d, idx);
            edges.sort_unstable();
            assert!(is_spanning_tree(d, &edges));
            assert!(seen.insert(edges));
        }
        assert_eq!(seen.len(), 125);
        assert_eq!(spanning_tree_count(2), 1);
        assert_eq!(spanning_tree_count(4), 16);
    }

    #[test]
    fn zero_gamma_recovers_generating_chain() {
        // Strong adjacent correlation decays along the chain, so the MI-only
        // tree is the chain itself.
        let channels: Vec<(usize, usize, [f64; 2])> =
            (1..5).map(|i| (i - 1, i, [0.9, 0.1])).collect();
        let model = TreeModel::from_root_channels(5, 0, [0.5, 0.5], &channels).unwrap();
        let marg = model.exact_marginals();
        let costs = CostMatrix::uniform(5, 1.0).unwrap();
        let chain: Vec<(usize, usize)> = (0..4).map(|i| (i, i + 1)).collect();
        assert_eq!(async_learn(&marg, &costs, 0.0).edges, chain);
        assert_eq!(sync_learn(&marg, &costs, 0.0, 1.0).edges, chain);
        assert_eq!(brute_force_sync_opt(&marg, &costs, 0.0).unwrap().edges, chain);
    }

    #[test]
    fn async_weight_shift_invariance() {
        // Adding a constant to every weight (via uniform costs) cannot
        // change the argmax tree.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let d = rng.gen_range(3..8);
            let marg = random_marginals(d, &mut rng);
            let base = async_learn(&marg, &CostMatrix::uniform(d, 1.0).unwrap(), 0.3);
            let shifted = async_learn(&marg, &CostMatrix::uniform(d, 2.5).unwrap(), 0.3);
            assert_eq!(base.edges, shifted.edges);
        }
    }

    #[test]
    fn async_matches_enumeration_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let d = rng.gen_range(3..8);
            let marg = random_marginals(d, &mut rng);
            let costs = random_costs(d, &mut rng);
            let gamma = rng.gen_range(0.0..1.5);
            let fast = async_learn(&marg, &costs, gamma);
            let slow = brute_force_async_opt(&marg, &costs, gamma).unwrap();
            assert_eq!(fast.edges, slow.edges);
        }
    }

    #[test]
    fn large_gamma_returns_min_cost_tree() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let d = rng.gen_range(3..7);
            let marg = random_marginals(d, &mut rng);
            let costs = random_costs(d, &mut rng);
            let learned = async_learn(&marg, &costs, 1e6);
            // Minimum-total-cost tree by enumeration.
            let best = (0..spanning_tree_count(d))
                .map(|idx| {
                    let mut e = spanning_tree_by_index(d, idx);
                    e.sort_unstable();
                    (costs.total(&e), e)
                })
                .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
                .unwrap();
            assert_eq!(learned.edges, best.1);
        }
    }

    #[test]
    fn sync_always_spans_and_never_beats_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let d = rng.gen_range(2..8);
            let marg = random_marginals(d, &mut rng);
            let costs = random_costs(d, &mut rng);
            let gamma = rng.gen_range(0.0..1.0);
            let beta = rng.gen_range(0.0..2.0);
            let run = sync_learn_trace(&marg, &costs, gamma, beta);
            assert!(is_spanning_tree(d, &run.tree.edges));
            assert_eq!(run.steps.len(), d - 1);
            let greedy = objective_value(&run.tree.edges, &marg, &costs, gamma, ObjectiveMode::Sync);
            let oracle = brute_force_sync_opt(&marg, &costs, gamma).unwrap();
            let best = objective_value(&oracle.edges, &marg, &costs, gamma, ObjectiveMode::Sync);
            assert!(greedy <= best + 1e-12);
        }
    }

    #[test]
    fn sync_trace_layout() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let d = 6;
        let marg = random_marginals(d, &mut rng);
        let costs = random_costs(d, &mut rng);
        let run = sync_learn_trace(&marg, &costs, 0.4, 1.0);
        assert_eq!(run.steps[0].candidates.len(), pair_count(d));
        assert!(run.steps[0].tree_before.is_empty());
        for (t, step) in run.steps.iter().enumerate().skip(1) {
            assert_eq!(step.tree_before.len(), t);
            // Frontier size is |V_S| (d - |V_S|) = (t + 1)(d - t - 1).
            assert_eq!(step.candidates.len(), (t + 1) * (d - t - 1));
            assert!(step.candidates.iter().any(|c| c.edge == step.chosen));
        }
    }

    #[test]
    fn sync_two_nodes_is_trivial() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let marg = random_marginals(2, &mut rng);
        let costs = random_costs(2, &mut rng);
        let t = sync_learn(&marg, &costs, 3.0, 0.5);
        assert_eq!(t.edges, vec![(0, 1)]);
        assert_eq!(t.diameter, 1);
    }

    #[test]
    fn hand_checked_star_versus_path() {
        // d = 4: identical MI everywhere, so only the cost term decides.
        // Star diam 2, path diam 3. Costs pick edges (0,1),(0,2),(0,3) as
        // the cheapest spanning set; with gamma > 0 the sync objective
        // prefers the star over any path.
        let d = 4;
        let rho: f64 = 0.5;
        let joint = [
            [(1.0 + rho) / 4.0, (1.0 - rho) / 4.0],
            [(1.0 - rho) / 4.0, (1.0 + rho) / 4.0],
        ];
        let marg =
            PairwiseMarginals::new(d, vec![[0.5, 0.5]; d], vec![joint; pair_count(d)]);
        let mut pair_costs = vec![1.0; pair_count(d)];
        pair_costs[pair_index(d, 0, 1)] = 0.1;
        pair_costs[pair_index(d, 0, 2)] = 0.1;
        pair_costs[pair_index(d, 0, 3)] = 0.1;
        let costs = CostMatrix::from_pairs(d, pair_costs).unwrap();
        let best = brute_force_sync_opt(&marg, &costs, 0.5).unwrap();
        assert_eq!(best.edges, vec![(0, 1), (0, 2), (0, 3)]);
        assert_eq!(best.diameter, 2);
    }

    #[test]
    fn brute_force_rejects_large_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let d = 10;
        let marg = random_marginals(d, &mut rng);
        let costs = random_costs(d, &mut rng);
        assert!(matches!(
            brute_force_sync_opt(&marg, &costs, 0.1),
            Err(LearnError::TooLarge { .. })
        ));
    }
}
