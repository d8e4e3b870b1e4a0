//! Small graph and indexing helpers shared across modules.

/// Number of unordered node pairs on `d` nodes.
pub fn pair_count(d: usize) -> usize {
    d * d.saturating_sub(1) / 2
}

/// Triangular index of the unordered pair (i, j), i != j, into a
/// length `pair_count(d)` table. Order of i and j does not matter.
pub fn pair_index(d: usize, i: usize, j: usize) -> usize {
    debug_assert!(i != j && i < d && j < d);
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    i * d - i * (i + 1) / 2 + (j - i - 1)
}

/// Inverse of `pair_index`: all pairs in index order.
pub fn all_pairs(d: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..d).flat_map(move |i| (i + 1..d).map(move |j| (i, j)))
}

/// Union-find with path compression and union by rank.
pub struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
    components: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), rank: vec![0; n], components: n }
    }

    pub fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    /// Returns false if x and y were already connected.
    pub fn union(&mut self, x: usize, y: usize) -> bool {
        let (rx, ry) = (self.find(x), self.find(y));
        if rx == ry {
            return false;
        }
        match self.rank[rx].cmp(&self.rank[ry]) {
            std::cmp::Ordering::Less => self.parent[rx] = ry,
            std::cmp::Ordering::Greater => self.parent[ry] = rx,
            std::cmp::Ordering::Equal => {
                self.parent[ry] = rx;
                self.rank[rx] += 1;
            }
        }
        self.components -= 1;
        true
    }

    pub fn components(&self) -> usize {
        self.components
    }
}

/// Adjacency lists (sorted neighbors) for an undirected edge list.
pub fn adjacency(d: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); d];
    for &(i, j) in edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    adj
}

/// Whether `edges` forms a spanning tree on `d` nodes.
pub fn is_spanning_tree(d: usize, edges: &[(usize, usize)]) -> bool {
    if d == 0 || edges.len() + 1 != d {
        return d == 0 && edges.is_empty();
    }
    let mut uf = UnionFind::new(d);
    for &(i, j) in edges {
        if i >= d || j >= d || i == j || !uf.union(i, j) {
            return false;
        }
    }
    uf.components() == 1
}

/// Hop distances from `start` over adjacency lists; usize::MAX marks unreachable.
pub fn bfs_distances(adj: &[Vec<usize>], start: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; adj.len()];
    let mut queue = std::collections::VecDeque::new();
    dist[start] = 0;
    queue.push_back(start);
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Canonical edge form: endpoints ordered, list sorted.
pub fn normalize_edges(edges: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = edges
        .iter()
        .map(|&(i, j)| if i < j { (i, j) } else { (j, i) })
        .collect();
    out.sort_unstable();
    out
}

/// SplitMix64 step, used to derive independent per-trial seeds.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
