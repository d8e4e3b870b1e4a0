//! Max-product MAP inference on a tree with exact communication-cost
//! accounting for the two message-passing protocols.
//!
//! The asynchronous protocol sweeps messages from the leaves to a root and
//! back, sending one message per directed edge: 2(d-1) messages costing
//! sum_e 2 c_e. The synchronous protocol floods every directed edge each
//! round for exactly diam(T) rounds: 2(d-1) diam(T) messages costing
//! 2 diam(T) sum_e c_e. Both reach the same fixed point on a tree, and the
//! implementations share one message kernel so the decoded assignments
//! agree bit for bit.

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{empirical_stats, PairwiseMarginals, TreeModel};
use crate::physnet::CostMatrix;
use crate::util::{adjacency, is_spanning_tree, splitmix64};

/// Exhaustive MAP search cap (2^20 assignments).
pub const BRUTE_FORCE_MAX_NODES: usize = 20;

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("edge set is not a spanning tree on {0} nodes")]
    NotSpanningTree(usize),
    #[error("exhaustive MAP supports at most {max} nodes, got {got}")]
    TooLarge { got: usize, max: usize },
    #[error("potentials dimension {0} does not match cost dimension {1}")]
    DimensionMismatch(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    Async,
    Sync,
}

/// Node and edge potentials of a tree factorization: psi_i = Q_i and
/// psi_ij = Q_ij / (Q_i Q_j), stored in log domain.
#[derive(Debug, Clone)]
pub struct Potentials {
    d: usize,
    edges: Vec<(usize, usize)>,
    log_node: Vec<[f64; 2]>,
    // log_edge[k][a][b]: a indexes the smaller endpoint of edges[k].
    log_edge: Vec<[[f64; 2]; 2]>,
}

impl Potentials {
    /// Potentials of the distribution that keeps the given pairwise
    /// marginals on the given spanning tree.
    pub fn new(
        marg: &PairwiseMarginals,
        edges: &[(usize, usize)],
    ) -> Result<Self, InferenceError> {
        let d = marg.dimension();
        if !is_spanning_tree(d, edges) {
            return Err(InferenceError::NotSpanningTree(d));
        }
        let mut edges: Vec<(usize, usize)> =
            edges.iter().map(|&(i, j)| (i.min(j), i.max(j))).collect();
        edges.sort_unstable();
        let log_node = (0..d)
            .map(|i| {
                let m = marg.node(i);
                [m[0].ln(), m[1].ln()]
            })
            .collect();
        let log_edge = edges
            .iter()
            .map(|&(i, j)| {
                let joint = marg.pair(i, j);
                let mi = marg.node(i);
                let mj = marg.node(j);
                let mut le = [[f64::NEG_INFINITY; 2]; 2];
                for a in 0..2 {
                    for b in 0..2 {
                        let denom = mi[a] * mj[b];
                        // A zero marginal forces a zero joint; the potential
                        // contributes nothing either way.
                        if joint[a][b] > 0.0 && denom > 0.0 {
                            le[a][b] = (joint[a][b] / denom).ln();
                        }
                    }
                }
                le
            })
            .collect();
        Ok(Potentials { d, edges, log_node, log_edge })
    }

    /// Potentials of a tree model from its own exact marginals; the
    /// factorization then reproduces the model joint exactly.
    pub fn from_model(model: &TreeModel) -> Self {
        Potentials::new(&model.exact_marginals(), model.edges())
            .expect("model edges form a spanning tree")
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    fn edge_index(&self, i: usize, j: usize) -> usize {
        let key = (i.min(j), i.max(j));
        self.edges.binary_search(&key).expect("edge exists")
    }

    fn log_pair(&self, i: usize, j: usize, xi: usize, xj: usize) -> f64 {
        let k = self.edge_index(i, j);
        if i < j {
            self.log_edge[k][xi][xj]
        } else {
            self.log_edge[k][xj][xi]
        }
    }
}

/// The outcome of one protocol run.
#[derive(Debug, Clone)]
pub struct InferenceResult {
    pub map_assignment: Vec<u8>,
    pub messages_sent: usize,
    pub total_cost: f64,
    /// Sweeps for the async protocol (2), flooding rounds for sync (diam).
    pub iterations: usize,
    pub protocol: Protocol,
}

/// Directed message slot: 2k for smaller-to-larger endpoint of edge k.
fn dir_index(pot: &Potentials, from: usize, to: usize) -> usize {
    let k = pot.edge_index(from, to);
    2 * k + usize::from(from > to)
}

/// Max-product message from `from` to `to`, given current messages.
/// Computed in log domain, returned normalized to sum 1. Neighbors are
/// folded in ascending order so every caller gets bit-identical values.
fn compute_message(
    pot: &Potentials,
    adj: &[Vec<usize>],
    msgs: &[[f64; 2]],
    from: usize,
    to: usize,
) -> [f64; 2] {
    let mut out = [f64::NEG_INFINITY; 2];
    for (xt, slot) in out.iter_mut().enumerate() {
        for xf in 0..2 {
            let mut v = pot.log_node[from][xf] + pot.log_pair(from, to, xf, xt);
            for &k in &adj[from] {
                if k != to {
                    v += msgs[dir_index(pot, k, from)][xf].ln();
                }
            }
            if v > *slot {
                *slot = v;
            }
        }
    }
    let peak = out[0].max(out[1]);
    if peak == f64::NEG_INFINITY {
        // Degenerate zero potentials; keep the message a distribution.
        return [0.5, 0.5];
    }
    let e0 = (out[0] - peak).exp();
    let e1 = (out[1] - peak).exp();
    [e0 / (e0 + e1), e1 / (e0 + e1)]
}

/// Argmax of psi_i times incoming messages at every node; ties prefer 0.
fn decode(pot: &Potentials, adj: &[Vec<usize>], msgs: &[[f64; 2]]) -> Vec<u8> {
    (0..pot.d)
        .map(|i| {
            let belief = |x: usize| -> f64 {
                let mut v = pot.log_node[i][x];
                for &k in &adj[i] {
                    v += msgs[dir_index(pot, k, i)][x].ln();
                }
                v
            };
            u8::from(belief(1) > belief(0))
        })
        .collect()
}

/// Preorder and parent array of a depth-first walk from the root.
fn dfs_order(adj: &[Vec<usize>], root: usize) -> (Vec<usize>, Vec<usize>) {
    let d = adj.len();
    let mut order = Vec::with_capacity(d);
    let mut parent = vec![usize::MAX; d];
    let mut stack = vec![root];
    parent[root] = root;
    while let Some(v) = stack.pop() {
        order.push(v);
        for &w in adj[v].iter().rev() {
            if parent[w] == usize::MAX {
                parent[w] = v;
                stack.push(w);
            }
        }
    }
    (order, parent)
}

/// Leaf-to-root then root-to-leaf sweep from node 0. One message per
/// directed edge: 2(d-1) messages, total cost sum_e 2 c_e.
pub fn max_product_async(
    pot: &Potentials,
    costs: &CostMatrix,
) -> Result<InferenceResult, InferenceError> {
    if pot.d != costs.dimension() {
        return Err(InferenceError::DimensionMismatch(pot.d, costs.dimension()));
    }
    let adj = adjacency(pot.d, &pot.edges);
    let mut msgs = vec![[1.0, 1.0]; 2 * pot.edges.len()];
    let (order, parent) = dfs_order(&adj, 0);
    for &v in order.iter().rev() {
        if v != 0 {
            msgs[dir_index(pot, v, parent[v])] = compute_message(pot, &adj, &msgs, v, parent[v]);
        }
    }
    for &v in &order {
        if v != 0 {
            msgs[dir_index(pot, parent[v], v)] = compute_message(pot, &adj, &msgs, parent[v], v);
        }
    }
    let total_cost = pot.edges.iter().map(|&(i, j)| 2.0 * costs.cost(i, j)).sum();
    Ok(InferenceResult {
        map_assignment: decode(pot, &adj, &msgs),
        messages_sent: 2 * pot.edges.len(),
        total_cost,
        iterations: if pot.d > 1 { 2 } else { 0 },
        protocol: Protocol::Async,
    })
}

/// Parallel flooding for exactly diam(T) rounds with double-buffered
/// messages: every directed edge carries one message per round, so
/// 2(d-1) diam(T) messages costing 2 diam(T) sum_e c_e. On a tree the
/// round-diam messages equal the async fixed point bit for bit.
pub fn max_product_sync(
    pot: &Potentials,
    costs: &CostMatrix,
) -> Result<InferenceResult, InferenceError> {
    if pot.d != costs.dimension() {
        return Err(InferenceError::DimensionMismatch(pot.d, costs.dimension()));
    }
    let adj = adjacency(pot.d, &pot.edges);
    let diam = crate::learn::tree_diameter(pot.d, &pot.edges);
    let mut msgs = vec![[0.5, 0.5]; 2 * pot.edges.len()];
    let mut next = msgs.clone();
    for _ in 0..diam {
        for &(i, j) in &pot.edges {
            next[dir_index(pot, i, j)] = compute_message(pot, &adj, &msgs, i, j);
            next[dir_index(pot, j, i)] = compute_message(pot, &adj, &msgs, j, i);
        }
        std::mem::swap(&mut msgs, &mut next);
    }
    let edge_cost: f64 = pot.edges.iter().map(|&(i, j)| costs.cost(i, j)).sum();
    Ok(InferenceResult {
        map_assignment: decode(pot, &adj, &msgs),
        messages_sent: 2 * pot.edges.len() * diam,
        total_cost: 2.0 * diam as f64 * edge_cost,
        iterations: diam,
        protocol: Protocol::Sync,
    })
}

/// Exhaustive argmax of the model joint; lexicographic tie-break, so ties
/// prefer the smaller symbol at the lowest differing node.
pub fn brute_force_map(model: &TreeModel) -> Result<Vec<u8>, InferenceError> {
    let d = model.dimension();
    if d > BRUTE_FORCE_MAX_NODES {
        return Err(InferenceError::TooLarge { got: d, max: BRUTE_FORCE_MAX_NODES });
    }
    let mut best = vec![0u8; d];
    let mut best_p = -1.0;
    let mut x = vec![0u8; d];
    for assign in 0..1u64 << d {
        for (i, slot) in x.iter_mut().enumerate() {
            *slot = ((assign >> (d - 1 - i)) & 1) as u8;
        }
        let p = model.joint_probability(&x).expect("valid assignment");
        if p > best_p {
            best_p = p;
            best.copy_from_slice(&x);
        }
    }
    Ok(best)
}

/// Fraction of sampling trials in which the MAP assignment of the
/// learned-tree factorization (pairwise marginals refit from that trial's
/// samples) differs from the MAP assignment of the true model.
pub fn map_error_probability(
    true_model: &TreeModel,
    learned_edges: &[(usize, usize)],
    samples_per_trial: usize,
    trials: usize,
    seed: u64,
) -> f64 {
    assert!(trials >= 1 && samples_per_trial >= 1);
    let reference = brute_force_map(true_model).expect("model within MAP cap");
    let adj = adjacency(true_model.dimension(), learned_edges);
    let errors: usize = (0..trials)
        .into_par_iter()
        .map(|t| {
            let trial_seed = splitmix64(seed ^ splitmix64(t as u64));
            let samples = true_model
                .sample(samples_per_trial, trial_seed)
                .expect("positive sample count");
            let marg = empirical_stats(&samples).marginals();
            let pot = Potentials::new(&marg, learned_edges).expect("spanning tree");
            let mut msgs = vec![[1.0, 1.0]; 2 * pot.edges.len()];
            let (order, parent) = dfs_order(&adj, 0);
            for &v in order.iter().rev() {
                if v != 0 {
                    msgs[dir_index(&pot, v, parent[v])] =
                        compute_message(&pot, &adj, &msgs, v, parent[v]);
                }
            }
            for &v in &order {
                if v != 0 {
                    msgs[dir_index(&pot, parent[v], v)] =
                        compute_message(&pot, &adj, &msgs, parent[v], v);
                }
            }
            usize::from(decode(&pot, &adj, &msgs) != reference)
        })
        .sum();
    errors as f64 / trials as f64
}
