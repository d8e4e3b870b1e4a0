//! Physical communication networks: per-link transmission costs and the
//! induced all-pairs cost matrix used to price candidate model edges.

use thiserror::Error;

use crate::util::{pair_count, pair_index};

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("network needs at least 1 node, got {0}")]
    Empty(usize),
    #[error("link ({0}, {1}) is out of range for {2} nodes or is a self-loop")]
    BadLink(usize, usize, usize),
    #[error("link ({0}, {1}) has non-positive or non-finite cost {2}")]
    BadCost(usize, usize, f64),
    #[error("link ({0}, {1}) listed more than once")]
    DuplicateLink(usize, usize),
    #[error("network is disconnected: node pair ({0}, {1}) is unreachable")]
    Disconnected(usize, usize),
}

/// An undirected weighted graph of physical links. Costs are positive and
/// finite; the graph must connect every node pair.
#[derive(Debug, Clone)]
pub struct PhysicalNetwork {
    d: usize,
    links: Vec<(usize, usize, f64)>,
}

impl PhysicalNetwork {
    pub fn new(d: usize, links: Vec<(usize, usize, f64)>) -> Result<Self, NetworkError> {
        if d == 0 {
            return Err(NetworkError::Empty(d));
        }
        let mut seen = std::collections::HashSet::new();
        let mut norm = Vec::with_capacity(links.len());
        for (i, j, c) in links {
            if i == j || i >= d || j >= d {
                return Err(NetworkError::BadLink(i, j, d));
            }
            if !(c.is_finite() && c > 0.0) {
                return Err(NetworkError::BadCost(i, j, c));
            }
            let key = if i < j { (i, j) } else { (j, i) };
            if !seen.insert(key) {
                return Err(NetworkError::DuplicateLink(key.0, key.1));
            }
            norm.push((key.0, key.1, c));
        }
        norm.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let net = PhysicalNetwork { d, links: norm };
        net.check_connected()?;
        Ok(net)
    }

    /// A line network: node i linked to i+1. `base` is the default link
    /// cost; `overrides` replaces the cost of specific links (i, i+1).
    pub fn line(d: usize, base: f64, overrides: &[(usize, f64)]) -> Result<Self, NetworkError> {
        let mut costs = vec![base; d.saturating_sub(1)];
        for &(i, c) in overrides {
            costs[i] = c;
        }
        let links = costs.into_iter().enumerate().map(|(i, c)| (i, i + 1, c)).collect();
        PhysicalNetwork::new(d, links)
    }

    fn check_connected(&self) -> Result<(), NetworkError> {
        let mut adj = vec![Vec::new(); self.d];
        for &(i, j, _) in &self.links {
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut seen = vec![false; self.d];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        match seen.iter().position(|&s| !s) {
            Some(v) => Err(NetworkError::Disconnected(0, v)),
            None => Ok(()),
        }
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn links(&self) -> &[(usize, usize, f64)] {
        &self.links
    }

    /// Cheapest-path costs between all node pairs (Floyd-Warshall).
    pub fn all_pairs_costs(&self) -> CostMatrix {
        let d = self.d;
        let mut dist = vec![f64::INFINITY; d * d];
        for v in 0..d {
            dist[v * d + v] = 0.0;
        }
        for &(i, j, c) in &self.links {
            if c < dist[i * d + j] {
                dist[i * d + j] = c;
                dist[j * d + i] = c;
            }
        }
        for k in 0..d {
            for i in 0..d {
                let dik = dist[i * d + k];
                if !dik.is_finite() {
                    continue;
                }
                for j in 0..d {
                    let via = dik + dist[k * d + j];
                    if via < dist[i * d + j] {
                        dist[i * d + j] = via;
                    }
                }
            }
        }
        let mut pair = vec![0.0; pair_count(d)];
        for i in 0..d {
            for j in i + 1..d {
                pair[pair_index(d, i, j)] = dist[i * d + j];
            }
        }
        CostMatrix { d, pair }
    }
}

/// Symmetric all-pairs communication costs with zero diagonal.
#[derive(Debug, Clone)]
pub struct CostMatrix {
    d: usize,
    pair: Vec<f64>,
}

impl CostMatrix {
    /// Builds directly from per-pair costs; positivity is required so that
    /// edges are never free.
    pub fn from_pairs(d: usize, pair: Vec<f64>) -> Result<Self, NetworkError> {
        if d == 0 {
            return Err(NetworkError::Empty(d));
        }
        if pair.len() != pair_count(d) {
            return Err(NetworkError::BadLink(pair.len(), pair_count(d), d));
        }
        for (idx, &c) in pair.iter().enumerate() {
            if !(c.is_finite() && c > 0.0) {
                return Err(NetworkError::BadCost(idx, idx, c));
            }
        }
        Ok(CostMatrix { d, pair })
    }

    /// Every pair costs the same amount.
    pub fn uniform(d: usize, c: f64) -> Result<Self, NetworkError> {
        CostMatrix::from_pairs(d, vec![c; pair_count(d)])
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn cost(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            self.pair[pair_index(self.d, i, j)]
        }
    }

    /// Total cost of an edge set.
    pub fn total(&self, edges: &[(usize, usize)]) -> f64 {
        edges.iter().map(|&(i, j)| self.cost(i, j)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shortest_paths_on_a_line() {
        let net = PhysicalNetwork::line(4, 1.0, &[(1, 5.0)]).unwrap();
        let costs = net.all_pairs_costs();
        assert_eq!(costs.cost(0, 1), 1.0);
        assert_eq!(costs.cost(1, 2), 5.0);
        assert_eq!(costs.cost(0, 3), 7.0);
        assert_eq!(costs.cost(3, 0), 7.0);
        assert_eq!(costs.cost(2, 2), 0.0);
    }

    #[test]
    fn shortest_path_prefers_detour() {
        // Direct link 0-2 costs 10; the detour through 1 costs 2.
        let net =
            PhysicalNetwork::new(3, vec![(0, 1, 1.0), (1, 2, 1.0), (0, 2, 10.0)]).unwrap();
        let costs = net.all_pairs_costs();
        assert_eq!(costs.cost(0, 2), 2.0);
    }

    #[test]
    fn triangle_inequality_holds_on_random_graphs() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let d = rng.gen_range(3..9);
            let mut links: Vec<(usize, usize, f64)> =
                (1..d).map(|v| (rng.gen_range(0..v), v, rng.gen_range(0.1..2.0))).collect();
            for _ in 0..d {
                let i = rng.gen_range(0..d);
                let j = rng.gen_range(0..d);
                if i != j && !links.iter().any(|&(a, b, _)| (a, b) == (i.min(j), i.max(j))) {
                    links.push((i.min(j), i.max(j), rng.gen_range(0.1..2.0)));
                }
            }
            let costs = PhysicalNetwork::new(d, links).unwrap().all_pairs_costs();
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        assert!(costs.cost(i, j) <= costs.cost(i, k) + costs.cost(k, j) + 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn invalid_networks_are_rejected() {
        assert!(matches!(
            PhysicalNetwork::new(3, vec![(0, 1, 1.0)]),
            Err(NetworkError::Disconnected(..))
        ));
        assert!(matches!(
            PhysicalNetwork::new(2, vec![(0, 0, 1.0), (0, 1, 1.0)]),
            Err(NetworkError::BadLink(..))
        ));
        assert!(matches!(
            PhysicalNetwork::new(2, vec![(0, 1, -1.0)]),
            Err(NetworkError::BadCost(..))
        ));
        assert!(matches!(
            PhysicalNetwork::new(2, vec![(0, 1, 1.0), (1, 0, 2.0)]),
            Err(NetworkError::DuplicateLink(0, 1))
        ));
        assert!(matches!(
            CostMatrix::uniform(3, 0.0),
            Err(NetworkError::BadCost(..))
        ));
    }
}
