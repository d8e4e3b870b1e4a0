//! Tree-structured joint distributions over binary variables: validation,
//! exact evaluation, ancestral sampling, and empirical pairwise statistics.
//!
//! A model is specified by its node marginals and edge pairwise marginals;
//! the joint factorizes as prod_i P_i(x_i) * prod_(i,j) P_ij(x_i,x_j) /
//! (P_i(x_i) P_j(x_j)) over the tree edges. All logarithms are natural.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::util::{adjacency, all_pairs, is_spanning_tree, pair_count, pair_index};

/// Tolerance for distributions summing to one.
pub const SUM_TOL: f64 = 1e-12;
/// Tolerance for edge joints marginalizing back to node marginals.
pub const CONSISTENCY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("edge set is not a spanning tree on {0} nodes")]
    NotSpanningTree(usize),
    #[error("node {0} marginal sums to {1}, expected 1")]
    NodeNotNormalized(usize, f64),
    #[error("edge ({0}, {1}) joint sums to {2}, expected 1")]
    EdgeNotNormalized(usize, usize, f64),
    #[error("edge ({0}, {1}) joint is inconsistent with node {2} marginal")]
    Inconsistent(usize, usize, usize),
    #[error("negative probability in {0}")]
    Negative(String),
    #[error("assignment length {got} does not match model dimension {want}")]
    AssignmentLength { got: usize, want: usize },
    #[error("assignment value {0} outside alphabet {{0, 1}}")]
    BadSymbol(u8),
    #[error("joint mass on a zero marginal at node {0}; model is inconsistent")]
    ZeroMarginalMass(usize),
    #[error("sample count must be at least 1")]
    EmptySampleRequest,
    #[error("sample matrix entry {0} outside alphabet {{0, 1}}")]
    BadSampleValue(u8),
    #[error("sample set must contain at least one row")]
    EmptySampleSet,
    #[error("delta must lie in (0, 1/2), got {0}")]
    DeltaOutOfRange(f64),
    #[error("hop count must be at least 1")]
    ZeroHops,
    #[error("joint distribution sums to {0}, expected 1")]
    JointNotNormalized(f64),
}

/// A tree-structured distribution over d binary variables.
#[derive(Debug, Clone)]
pub struct TreeModel {
    d: usize,
    edges: Vec<(usize, usize)>,
    node_marginals: Vec<[f64; 2]>,
    edge_marginals: Vec<[[f64; 2]; 2]>,
}

impl TreeModel {
    /// Validates and builds a model. `edge_marginals[k][a][b]` is the joint
    /// probability that the smaller endpoint of `edges[k]` takes value `a`
    /// and the larger takes value `b` (after endpoint normalization).
    pub fn new(
        d: usize,
        edges: Vec<(usize, usize)>,
        node_marginals: Vec<[f64; 2]>,
        edge_marginals: Vec<[[f64; 2]; 2]>,
    ) -> Result<Self, ModelError> {
        if d == 0 || !is_spanning_tree(d, &edges) {
            return Err(ModelError::NotSpanningTree(d));
        }
        // Reorder joints to match normalized (sorted) edges.
        let mut paired: Vec<((usize, usize), [[f64; 2]; 2])> = edges
            .iter()
            .zip(edge_marginals)
            .map(|(&(i, j), m)| {
                if i < j {
                    ((i, j), m)
                } else {
                    ((j, i), [[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
                }
            })
            .collect();
        paired.sort_unstable_by_key(|&(e, _)| e);
        let edges: Vec<(usize, usize)> = paired.iter().map(|&(e, _)| e).collect();
        let edge_marginals: Vec<[[f64; 2]; 2]> = paired.into_iter().map(|(_, m)| m).collect();

        if node_marginals.len() != d {
            return Err(ModelError::NotSpanningTree(d));
        }
        for (i, m) in node_marginals.iter().enumerate() {
            if m[0] < 0.0 || m[1] < 0.0 {
                return Err(ModelError::Negative(format!("node {i} marginal")));
            }
            let s = m[0] + m[1];
            if (s - 1.0).abs() > SUM_TOL {
                return Err(ModelError::NodeNotNormalized(i, s));
            }
        }
        for (k, &(i, j)) in edges.iter().enumerate() {
            let m = &edge_marginals[k];
            let mut s = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    if m[a][b] < 0.0 {
                        return Err(ModelError::Negative(format!("edge ({i}, {j}) joint")));
                    }
                    s += m[a][b];
                }
            }
            if (s - 1.0).abs() > SUM_TOL {
                return Err(ModelError::EdgeNotNormalized(i, j, s));
            }
            for a in 0..2 {
                if (m[a][0] + m[a][1] - node_marginals[i][a]).abs() > CONSISTENCY_TOL {
                    return Err(ModelError::Inconsistent(i, j, i));
                }
                if (m[0][a] + m[1][a] - node_marginals[j][a]).abs() > CONSISTENCY_TOL {
                    return Err(ModelError::Inconsistent(i, j, j));
                }
            }
        }
        Ok(TreeModel { d, edges, node_marginals, edge_marginals })
    }

    /// Builds a model from a rooted description: a parent channel per edge.
    /// `channels[k] = (parent, child, [P(child=0|parent=0), P(child=0|parent=1)])`.
    /// Node marginals are propagated from the root marginal.
    pub fn from_root_channels(
        d: usize,
        root: usize,
        root_marginal: [f64; 2],
        channels: &[(usize, usize, [f64; 2])],
    ) -> Result<Self, ModelError> {
        let edges: Vec<(usize, usize)> = channels.iter().map(|&(p, c, _)| (p, c)).collect();
        if !is_spanning_tree(d, &edges) {
            return Err(ModelError::NotSpanningTree(d));
        }
        let mut marg = vec![None::<[f64; 2]>; d];
        marg[root] = Some(root_marginal);
        // Channels are resolved once their parent marginal is known.
        let mut remaining: Vec<&(usize, usize, [f64; 2])> = channels.iter().collect();
        let mut joints: Vec<((usize, usize), [[f64; 2]; 2])> = Vec::with_capacity(channels.len());
        while !remaining.is_empty() {
            let before = remaining.len();
            remaining.retain(|&&(p, c, ch)| {
                let Some(pm) = marg[p] else { return true };
                let joint = [
                    [pm[0] * ch[0], pm[0] * (1.0 - ch[0])],
                    [pm[1] * ch[1], pm[1] * (1.0 - ch[1])],
                ];
                marg[c] = Some([joint[0][0] + joint[1][0], joint[0][1] + joint[1][1]]);
                joints.push(((p, c), joint));
                false
            });
            if remaining.len() == before {
                return Err(ModelError::NotSpanningTree(d));
            }
        }
        let node_marginals: Vec<[f64; 2]> =
            marg.into_iter().map(|m| m.expect("spanning tree reaches all nodes")).collect();
        let (edges, edge_marginals): (Vec<_>, Vec<_>) = joints.into_iter().unzip();
        TreeModel::new(d, edges, node_marginals, edge_marginals)
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    /// Edges in canonical sorted order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn node_marginal(&self, i: usize) -> [f64; 2] {
        self.node_marginals[i]
    }

    /// Joint of edge k, smaller endpoint indexing the first axis.
    pub fn edge_marginal(&self, k: usize) -> [[f64; 2]; 2] {
        self.edge_marginals[k]
    }

    /// Exact probability of a full assignment.
    pub fn joint_probability(&self, x: &[u8]) -> Result<f64, ModelError> {
        if x.len() != self.d {
            return Err(ModelError::AssignmentLength { got: x.len(), want: self.d });
        }
        if let Some(&bad) = x.iter().find(|&&v| v > 1) {
            return Err(ModelError::BadSymbol(bad));
        }
        let mut p = 1.0;
        for (i, m) in self.node_marginals.iter().enumerate() {
            p *= m[x[i] as usize];
        }
        for (k, &(i, j)) in self.edges.iter().enumerate() {
            let (a, b) = (x[i] as usize, x[j] as usize);
            let joint = self.edge_marginals[k][a][b];
            let denom = self.node_marginals[i][a] * self.node_marginals[j][b];
            if denom <= 0.0 {
                if joint > 0.0 {
                    let zero = if self.node_marginals[i][a] <= 0.0 { i } else { j };
                    return Err(ModelError::ZeroMarginalMass(zero));
                }
                return Ok(0.0);
            }
            p *= joint / denom;
        }
        Ok(p)
    }

    /// Rooted orientation from the lowest-index node: (parent, child) pairs
    /// in a top-down visit order, plus the conditional P(child | parent).
    fn rooted_channels(&self) -> Vec<(usize, usize, [[f64; 2]; 2])> {
        let adj = adjacency(self.d, &self.edges);
        let mut order = Vec::with_capacity(self.d.saturating_sub(1));
        let mut seen = vec![false; self.d];
        let mut queue = std::collections::VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    let k = self.edge_index(v, w);
                    let joint = self.edge_marginals[k];
                    let pm = self.node_marginals[v];
                    // cond[a][b] = P(child = b | parent = a)
                    let mut cond = [[0.0; 2]; 2];
                    for a in 0..2 {
                        for b in 0..2 {
                            let j = if v < w { joint[a][b] } else { joint[b][a] };
                            cond[a][b] = if pm[a] > 0.0 { j / pm[a] } else { 0.0 };
                        }
                    }
                    order.push((v, w, cond));
                    queue.push_back(w);
                }
            }
        }
        order
    }

    fn edge_index(&self, i: usize, j: usize) -> usize {
        let key = if i < j { (i, j) } else { (j, i) };
        self.edges.binary_search(&key).expect("edge exists")
    }

    /// n i.i.d. ancestral samples; identical seed gives identical output.
    pub fn sample(&self, n: usize, seed: u64) -> Result<SampleSet, ModelError> {
        if n == 0 {
            return Err(ModelError::EmptySampleRequest);
        }
        let channels = self.rooted_channels();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = vec![0u8; n * self.d];
        for row in 0..n {
            let x = &mut data[row * self.d..(row + 1) * self.d];
            x[0] = u8::from(rng.gen::<f64>() >= self.node_marginals[0][0]);
            for &(p, c, cond) in &channels {
                x[c] = u8::from(rng.gen::<f64>() >= cond[x[p] as usize][0]);
            }
        }
        SampleSet::new(self.d, data)
    }

    /// Exact joint of an arbitrary node pair, marginalized along the tree path.
    pub fn pair_joint(&self, i: usize, j: usize) -> [[f64; 2]; 2] {
        assert!(i != j && i < self.d && j < self.d);
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        let path = self.path_nodes(lo, hi);
        // Chain of conditionals from lo: M[a][b] = P(X_hi = b | X_lo = a).
        let mut chain = [[1.0, 0.0], [0.0, 1.0]];
        for w in path.windows(2) {
            let (u, v) = (w[0], w[1]);
            let k = self.edge_index(u, v);
            let joint = self.edge_marginals[k];
            let pm = self.node_marginals[u];
            let mut step = [[0.0; 2]; 2];
            for a in 0..2 {
                for b in 0..2 {
                    let jv = if u < v { joint[a][b] } else { joint[b][a] };
                    step[a][b] = if pm[a] > 0.0 { jv / pm[a] } else { 0.0 };
                }
            }
            let mut next = [[0.0; 2]; 2];
            for a in 0..2 {
                for b in 0..2 {
                    next[a][b] = chain[a][0] * step[0][b] + chain[a][1] * step[1][b];
                }
            }
            chain = next;
        }
        let pm = self.node_marginals[lo];
        [
            [pm[0] * chain[0][0], pm[0] * chain[0][1]],
            [pm[1] * chain[1][0], pm[1] * chain[1][1]],
        ]
    }

    /// Unique tree path between two nodes, endpoints included.
    pub fn path_nodes(&self, from: usize, to: usize) -> Vec<usize> {
        let adj = adjacency(self.d, &self.edges);
        let mut parent = vec![usize::MAX; self.d];
        let mut queue = std::collections::VecDeque::from([from]);
        parent[from] = from;
        while let Some(v) = queue.pop_front() {
            if v == to {
                break;
            }
            for &w in &adj[v] {
                if parent[w] == usize::MAX {
                    parent[w] = v;
                    queue.push_back(w);
                }
            }
        }
        let mut path = vec![to];
        let mut v = to;
        while v != from {
            v = parent[v];
            path.push(v);
        }
        path.reverse();
        path
    }

    /// Exact node and pairwise marginals for every node pair.
    pub fn exact_marginals(&self) -> PairwiseMarginals {
        let mut pair = vec![[[0.0; 2]; 2]; pair_count(self.d)];
        for (i, j) in all_pairs(self.d) {
            pair[pair_index(self.d, i, j)] = self.pair_joint(i, j);
        }
        PairwiseMarginals { d: self.d, node: self.node_marginals.clone(), pair }
    }

    /// Exact joint over a small node subset (ascending, distinct), flattened
    /// with the first listed node as the most significant bit. Computed by
    /// sum-product elimination over the Steiner tree of the subset.
    pub fn marginal_joint(&self, nodes: &[usize]) -> Vec<f64> {
        assert!(!nodes.is_empty() && nodes.len() <= 8);
        assert!(nodes.windows(2).all(|w| w[0] < w[1]), "nodes must be ascending");
        // Steiner tree: repeatedly strip leaves outside the subset.
        let mut keep = vec![false; self.d];
        let mut degree = vec![0usize; self.d];
        let mut alive_edges: Vec<(usize, usize)> = self.edges.clone();
        for &v in nodes {
            keep[v] = true;
        }
        loop {
            degree.iter_mut().for_each(|x| *x = 0);
            for &(i, j) in &alive_edges {
                degree[i] += 1;
                degree[j] += 1;
            }
            let mut removed = false;
            alive_edges.retain(|&(i, j)| {
                let drop_i = degree[i] == 1 && !keep[i];
                let drop_j = degree[j] == 1 && !keep[j];
                if drop_i || drop_j {
                    removed = true;
                    false
                } else {
                    true
                }
            });
            if !removed {
                break;
            }
        }
        let adj = adjacency(self.d, &alive_edges);
        let root = nodes[0];
        let clamp_pos: std::collections::HashMap<usize, usize> =
            nodes.iter().enumerate().map(|(pos, &v)| (v, pos)).collect();
        let m = nodes.len();
        let mut out = vec![0.0; 1 << m];
        for (assign, slot) in out.iter_mut().enumerate() {
            let value_of = |v: usize| -> Option<usize> {
                clamp_pos.get(&v).map(|&pos| (assign >> (m - 1 - pos)) & 1)
            };
            // Upward sum-product with clamped subset values.
            fn up(
                model: &TreeModel,
                adj: &[Vec<usize>],
                value_of: &dyn Fn(usize) -> Option<usize>,
                v: usize,
                from: usize,
            ) -> [f64; 2] {
                let mut f = [1.0, 1.0];
                if let Some(val) = value_of(v) {
                    f[1 - val] = 0.0;
                }
                for &w in &adj[v] {
                    if w == from {
                        continue;
                    }
                    let child = up(model, adj, value_of, w, v);
                    let k = model.edge_index(v, w);
                    let joint = model.edge_marginals[k];
                    let pm = model.node_marginals[v];
                    for a in 0..2 {
                        let mut s = 0.0;
                        for b in 0..2 {
                            let jv = if v < w { joint[a][b] } else { joint[b][a] };
                            let cond = if pm[a] > 0.0 { jv / pm[a] } else { 0.0 };
                            s += cond * child[b];
                        }
                        f[a] *= s;
                    }
                }
                f
            }
            let f = up(self, &adj, &value_of, root, usize::MAX);
            *slot = self.node_marginals[root][0] * f[0] + self.node_marginals[root][1] * f[1];
        }
        out
    }
}

/// n binary sample vectors of dimension d, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSet {
    n: usize,
    d: usize,
    data: Vec<u8>,
}

impl SampleSet {
    pub fn new(d: usize, data: Vec<u8>) -> Result<Self, ModelError> {
        if d == 0 || data.is_empty() || data.len() % d != 0 {
            return Err(ModelError::EmptySampleSet);
        }
        if let Some(&bad) = data.iter().find(|&&v| v > 1) {
            return Err(ModelError::BadSampleValue(bad));
        }
        Ok(SampleSet { n: data.len() / d, d, data })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.data[i * self.d..(i + 1) * self.d]
    }
}

/// Exact empirical counts: per-node and per-unordered-pair joint counts.
#[derive(Debug, Clone)]
pub struct PairwiseStats {
    d: usize,
    n: usize,
    node_counts: Vec<[u64; 2]>,
    // pair_counts[pair_index][2a + b] with a at the smaller node index.
    pair_counts: Vec<[u64; 4]>,
}

/// Counts every node value and unordered pair combination in the samples.
pub fn empirical_stats(samples: &SampleSet) -> PairwiseStats {
    let d = samples.dimension();
    let mut node_counts = vec![[0u64; 2]; d];
    let mut pair_counts = vec![[0u64; 4]; pair_count(d)];
    for r in 0..samples.len() {
        let row = samples.row(r);
        for i in 0..d {
            node_counts[i][row[i] as usize] += 1;
            for j in i + 1..d {
                pair_counts[pair_index(d, i, j)][2 * row[i] as usize + row[j] as usize] += 1;
            }
        }
    }
    PairwiseStats { d, n: samples.len(), node_counts, pair_counts }
}

impl PairwiseStats {
    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn sample_count(&self) -> usize {
        self.n
    }

    pub fn node_counts(&self, i: usize) -> [u64; 2] {
        self.node_counts[i]
    }

    pub fn pair_counts(&self, i: usize, j: usize) -> [u64; 4] {
        let c = self.pair_counts[pair_index(self.d, i, j)];
        if i < j {
            c
        } else {
            [c[0], c[2], c[1], c[3]]
        }
    }

    /// Empirical joint of the pair (i, j), i < j.
    pub fn pair_joint(&self, i: usize, j: usize) -> [[f64; 2]; 2] {
        let c = self.pair_counts(i, j);
        let n = self.n as f64;
        [[c[0] as f64 / n, c[1] as f64 / n], [c[2] as f64 / n, c[3] as f64 / n]]
    }

    /// Normalized node and pair marginals.
    pub fn marginals(&self) -> PairwiseMarginals {
        let n = self.n as f64;
        let node = self
            .node_counts
            .iter()
            .map(|c| [c[0] as f64 / n, c[1] as f64 / n])
            .collect();
        let pair = all_pairs(self.d)
            .map(|(i, j)| self.pair_joint(i, j))
            .collect();
        PairwiseMarginals { d: self.d, node, pair }
    }
}

/// Node marginals plus a complete table of pairwise joints. This is the
/// common learner input, produced either from samples or from exact models.
#[derive(Debug, Clone)]
pub struct PairwiseMarginals {
    d: usize,
    node: Vec<[f64; 2]>,
    pair: Vec<[[f64; 2]; 2]>,
}

impl PairwiseMarginals {
    pub fn new(d: usize, node: Vec<[f64; 2]>, pair: Vec<[[f64; 2]; 2]>) -> Self {
        assert_eq!(node.len(), d);
        assert_eq!(pair.len(), pair_count(d));
        PairwiseMarginals { d, node, pair }
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn node(&self, i: usize) -> [f64; 2] {
        self.node[i]
    }

    /// Joint of (i, j) with i's value on the first axis; i < j not required.
    pub fn pair(&self, i: usize, j: usize) -> [[f64; 2]; 2] {
        let m = self.pair[pair_index(self.d, i, j)];
        if i < j {
            m
        } else {
            [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
        }
    }

    /// Mutual information of the pair (i, j) in nats.
    pub fn mi(&self, i: usize, j: usize) -> f64 {
        mutual_information(&self.pair(i, j)).expect("stored joints are normalized")
    }
}

/// Mutual information of a 2x2 joint in nats, with 0 ln 0 = 0.
pub fn mutual_information(joint: &[[f64; 2]; 2]) -> Result<f64, ModelError> {
    let mut s = 0.0;
    for row in joint {
        for &v in row {
            if v < 0.0 {
                return Err(ModelError::Negative("pair joint".into()));
            }
            s += v;
        }
    }
    if (s - 1.0).abs() > 1e-9 {
        return Err(ModelError::JointNotNormalized(s));
    }
    let a = [joint[0][0] + joint[0][1], joint[1][0] + joint[1][1]];
    let b = [joint[0][0] + joint[1][0], joint[0][1] + joint[1][1]];
    let mut mi = 0.0;
    for x in 0..2 {
        for y in 0..2 {
            let p = joint[x][y];
            if p > 0.0 {
                mi += p * (p / (a[x] * b[y])).ln();
            }
        }
    }
    Ok(mi.max(0.0))
}

/// Exact mutual information across a k-hop chain of identical symmetric
/// binary channels with flip parameter delta: the endpoint joint has
/// diagonal cells 1/4 + m/2 with m = 2^(k-1) delta^k.
pub fn path_mutual_information(delta: f64, k: u32) -> Result<f64, ModelError> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(ModelError::DeltaOutOfRange(delta));
    }
    if k == 0 {
        return Err(ModelError::ZeroHops);
    }
    let m = 2f64.powi(k as i32 - 1) * delta.powi(k as i32);
    Ok((0.5 + m) * (1.0 + 2.0 * m).ln() + (0.5 - m) * (1.0 - 2.0 * m).ln())
}

/// Mutual information of the symmetric binary joint with correlation rho
/// (diagonal mass (1 + rho)/2). Used by the hardness gadget for chains of
/// heterogeneous symmetric channels, whose correlations multiply.
pub fn symmetric_channel_mi(rho: f64) -> f64 {
    assert!((-1.0..=1.0).contains(&rho));
    let mut mi = 0.0;
    if rho > -1.0 {
        mi += (1.0 - rho) / 2.0 * (1.0 - rho).ln();
    }
    if rho < 1.0 {
        mi += (1.0 + rho) / 2.0 * (1.0 + rho).ln();
    }
    mi.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain_model(d: usize, p: f64) -> TreeModel {
        let channels: Vec<(usize, usize, [f64; 2])> =
            (1..d).map(|i| (i - 1, i, [p, 1.0 - p])).collect();
        TreeModel::from_root_channels(d, 0, [p, 1.0 - p], &channels).unwrap()
    }

    #[test]
    fn single_node_probability() {
        let m = TreeModel::new(1, vec![], vec![[0.7, 0.3]], vec![]).unwrap();
        assert_eq!(m.joint_probability(&[0]).unwrap(), 0.7);
        assert_eq!(m.joint_probability(&[1]).unwrap(), 0.3);
    }

    #[test]
    fn chain_probability_is_root_conditional_product() {
        let m = chain_model(3, 0.7);
        let p = m.joint_probability(&[0, 0, 0]).unwrap();
        assert!((p - 0.343).abs() < 1e-12, "got {p}");
    }

    #[test]
    fn joint_normalizes_exhaustively() {
        let m = chain_model(6, 0.7);
        let mut total = 0.0;
        for assign in 0..1u32 << 6 {
            let x: Vec<u8> = (0..6).map(|i| ((assign >> (5 - i)) & 1) as u8).collect();
            total += m.joint_probability(&x).unwrap();
        }
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn assignment_validation() {
        let m = chain_model(3, 0.7);
        assert!(matches!(
            m.joint_probability(&[0, 0]),
            Err(ModelError::AssignmentLength { .. })
        ));
        assert!(matches!(m.joint_probability(&[0, 2, 0]), Err(ModelError::BadSymbol(2))));
    }

    #[test]
    fn sampling_is_deterministic_and_rejects_empty() {
        let m = chain_model(4, 0.7);
        assert!(matches!(m.sample(0, 1), Err(ModelError::EmptySampleRequest)));
        let a = m.sample(50, 42).unwrap();
        let b = m.sample(50, 42).unwrap();
        assert_eq!(a, b);
        let c = m.sample(50, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sampling_matches_marginal_at_large_n() {
        let m = TreeModel::new(1, vec![], vec![[0.7, 0.3]], vec![]).unwrap();
        let s = m.sample(100_000, 7).unwrap();
        let zeros = (0..s.len()).filter(|&r| s.row(r)[0] == 0).count();
        let freq = zeros as f64 / s.len() as f64;
        assert!((0.69..=0.71).contains(&freq), "freq {freq}");
    }

    #[test]
    fn empirical_counts_are_exact() {
        let s = SampleSet::new(2, vec![0, 0, 1, 1]).unwrap();
        let stats = empirical_stats(&s);
        assert_eq!(stats.pair_counts(0, 1), [1, 0, 0, 1]);
        let joint = stats.pair_joint(0, 1);
        assert_eq!(joint[0][0], 0.5);
        assert_eq!(joint[1][1], 0.5);
        assert_eq!(stats.node_counts(0), [1, 1]);
    }

    #[test]
    fn point_mass_pairs_for_identical_samples() {
        let s = SampleSet::new(3, vec![1, 0, 1, 1, 0, 1]).unwrap();
        let stats = empirical_stats(&s);
        assert_eq!(stats.pair_counts(0, 2), [0, 0, 0, 2]);
        assert_eq!(stats.pair_counts(0, 1), [0, 0, 2, 0]);
    }

    #[test]
    fn mutual_information_reference_points() {
        let independent = [[0.25, 0.25], [0.25, 0.25]];
        assert_eq!(mutual_information(&independent).unwrap(), 0.0);
        let correlated = [[0.5, 0.0], [0.0, 0.5]];
        let mi = mutual_information(&correlated).unwrap();
        assert!((mi - 2f64.ln()).abs() < 1e-15);
        let skewed = [[0.3, 0.2], [0.2, 0.3]];
        let direct = 0.6 * (0.3f64 / 0.25).ln() + 0.4 * (0.2f64 / 0.25).ln();
        assert!((mutual_information(&skewed).unwrap() - direct).abs() < 1e-15);
    }

    #[test]
    fn mutual_information_rejects_unnormalized() {
        let bad = [[0.5, 0.2], [0.2, 0.3]];
        assert!(mutual_information(&bad).is_err());
    }

    #[test]
    fn path_mi_matches_single_hop_joint() {
        let delta = 0.1;
        let joint = [
            [0.25 + delta / 2.0, 0.25 - delta / 2.0],
            [0.25 - delta / 2.0, 0.25 + delta / 2.0],
        ];
        let direct = mutual_information(&joint).unwrap();
        let formula = path_mutual_information(delta, 1).unwrap();
        assert!((direct - formula).abs() < 1e-15);
    }

    #[test]
    fn path_mi_matches_two_hop_channel_composition() {
        let delta = 0.07;
        // Two symmetric channels with flip 1/2 - delta compose to a
        // symmetric channel with correlation (2 delta)^2.
        let rho = (2.0 * delta) * (2.0 * delta);
        let joint = [
            [(1.0 + rho) / 4.0, (1.0 - rho) / 4.0],
            [(1.0 - rho) / 4.0, (1.0 + rho) / 4.0],
        ];
        let direct = mutual_information(&joint).unwrap();
        let formula = path_mutual_information(delta, 2).unwrap();
        assert!((direct - formula).abs() < 1e-15);
    }

    #[test]
    fn path_mi_asymptotic_ratio() {
        // MI = (1/2 + m) ln(1 + 2m) + (1/2 - m) ln(1 - 2m) ~ 2 m^2 for small
        // m, and m = (2 delta)^k / 2, so the leading term is (2 delta)^(2k)/2.
        for k in 1..=4u32 {
            let delta = 0.05;
            let ratio = path_mutual_information(delta, k).unwrap()
                / ((2.0 * delta).powi(2 * k as i32) / 2.0);
            assert!((ratio - 1.0).abs() < 1e-2, "k={k} ratio={ratio}");
        }
    }

    #[test]
    fn path_mi_domain_errors() {
        assert!(path_mutual_information(0.0, 1).is_err());
        assert!(path_mutual_information(0.5, 1).is_err());
        assert!(path_mutual_information(0.1, 0).is_err());
    }

    #[test]
    fn pair_joint_matches_exhaustive_marginalization() {
        let m = chain_model(5, 0.7);
        for i in 0..5 {
            for j in i + 1..5 {
                let fast = m.pair_joint(i, j);
                let mut slow = [[0.0; 2]; 2];
                for assign in 0..1u32 << 5 {
                    let x: Vec<u8> = (0..5).map(|t| ((assign >> (4 - t)) & 1) as u8).collect();
                    slow[x[i] as usize][x[j] as usize] += m.joint_probability(&x).unwrap();
                }
                for a in 0..2 {
                    for b in 0..2 {
                        assert!((fast[a][b] - slow[a][b]).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn subset_marginal_matches_exhaustive_marginalization() {
        let m = chain_model(6, 0.65);
        let nodes = [0usize, 2, 5];
        let fast = m.marginal_joint(&nodes);
        let mut slow = vec![0.0; 8];
        for assign in 0..1u32 << 6 {
            let x: Vec<u8> = (0..6).map(|t| ((assign >> (5 - t)) & 1) as u8).collect();
            let idx = nodes
                .iter()
                .enumerate()
                .fold(0usize, |acc, (pos, &v)| acc | ((x[v] as usize) << (2 - pos)));
            slow[idx] += m.joint_probability(&x).unwrap();
        }
        for (f, s) in fast.iter().zip(&slow) {
            assert!((f - s).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_models_are_rejected() {
        // Cycle.
        assert!(TreeModel::new(
            3,
            vec![(0, 1), (1, 2), (0, 2)],
            vec![[0.5, 0.5]; 3],
            vec![[[0.25; 2]; 2]; 3],
        )
        .is_err());
        // Unnormalized node marginal.
        assert!(TreeModel::new(2, vec![(0, 1)], vec![[0.6, 0.5], [0.5, 0.5]], vec![[[0.25; 2]; 2]])
            .is_err());
        // Joint inconsistent with node marginal.
        assert!(TreeModel::new(
            2,
            vec![(0, 1)],
            vec![[0.9, 0.1], [0.5, 0.5]],
            vec![[[0.25; 2]; 2]],
        )
        .is_err());
    }
}
