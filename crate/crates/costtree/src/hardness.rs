//! Reduction gadget from exact 3-set cover to diameter-penalized tree
//! selection, with exhaustive verification on tiny instances.
//!
//! An instance with elements {1..3s} and q candidate triples maps to a
//! complete graph on d = 3s+q+3 nodes: one node per element, one per
//! subset, a hub, and a two-node tail hanging off the hub. Every pair
//! gets a mutual-information value and a communication cost from a fixed
//! table keyed by pair type. Maximizing sum(MI) - diam(T) * sum(cost)
//! over spanning trees is claimed to reach 2*TAIL_LINK_MI -
//! (11s+3q)*I1 - 8*kappa with an optimal diameter of 4 exactly when an
//! exact cover exists. The claim's value-ordering assumptions only hold
//! for large s, so the verifier checks them numerically at instance
//! scale and reports, rather than asserts, when they fail.

use crate::learn::{
    spanning_tree_by_index, spanning_tree_count, tree_diameter, BRUTE_FORCE_MAX_NODES,
};
use crate::model::{path_mutual_information, symmetric_channel_mi};
use crate::util::{pair_count, pair_index};
use rayon::prelude::*;
use thiserror::Error;

/// Mutual information pinned on the two tail links (hub-inner, inner-outer).
pub const TAIL_LINK_MI: f64 = 0.368;
/// Mutual information pinned on the hub-to-outer-tail pair.
pub const TAIL_SKIP_MI: f64 = 0.237;
/// Correlation of the channel composed across one tail link when deriving
/// the remaining remote-pair mutual informations; symmetric_channel_mi(0.8)
/// rounds to TAIL_LINK_MI.
const TAIL_CHANNEL_RHO: f64 = 0.8;
/// Tolerance on the claimed-optimum objective comparison.
pub const OBJECTIVE_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum HardnessError {
    #[error("element count parameter s must be positive")]
    ZeroElements,
    #[error("at least one subset is required")]
    NoSubsets,
    #[error("subset {0} must contain exactly three distinct positive elements")]
    MalformedSubset(usize),
    #[error("too many subsets for exhaustive cover search: {got} > {max}")]
    TooManySubsets { got: usize, max: usize },
    #[error("gadget has {got} nodes, exhaustive tree search is capped at {max}")]
    TooLarge { got: usize, max: usize },
}

/// Cap on subsets for the exhaustive cover search.
pub const COVER_SEARCH_MAX_SUBSETS: usize = 20;

/// An exact-3-cover question: can s pairwise-disjoint triples drawn from
/// `subsets` cover {1..3s} exactly?
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct X3CInstance {
    s: usize,
    subsets: Vec<[u32; 3]>,
}

impl X3CInstance {
    /// Validates and stores an instance. Triples must each hold three
    /// distinct positive elements; values above 3s are allowed (they can
    /// never join a cover). Duplicate triples are allowed.
    pub fn new(s: usize, subsets: Vec<[u32; 3]>) -> Result<Self, HardnessError> {
        if s == 0 {
            return Err(HardnessError::ZeroElements);
        }
        if subsets.is_empty() {
            return Err(HardnessError::NoSubsets);
        }
        let mut canonical = subsets;
        for (k, t) in canonical.iter_mut().enumerate() {
            t.sort_unstable();
            if t[0] == 0 || t[0] == t[1] || t[1] == t[2] {
                return Err(HardnessError::MalformedSubset(k));
            }
        }
        Ok(Self { s, subsets: canonical })
    }

    pub fn element_count(&self) -> usize {
        3 * self.s
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn subset_count(&self) -> usize {
        self.subsets.len()
    }

    pub fn subsets(&self) -> &[[u32; 3]] {
        &self.subsets
    }

    /// Index of the lowest subset containing the 1-based element, if any.
    fn owner(&self, element: u32) -> Option<usize> {
        self.subsets.iter().position(|t| t.contains(&element))
    }
}

/// Exhaustive search for an exact cover: a sub-collection whose union is
/// {1..3s} with pairwise-disjoint members. Subsets mentioning elements
/// above 3s are skipped; they cannot appear in any cover.
pub fn x3c_brute_force(inst: &X3CInstance) -> Result<bool, HardnessError> {
    let q = inst.subset_count();
    if q > COVER_SEARCH_MAX_SUBSETS {
        return Err(HardnessError::TooManySubsets { got: q, max: COVER_SEARCH_MAX_SUBSETS });
    }
    let n = inst.element_count();
    // A cover needs exactly s disjoint triples, so s > q is immediately out;
    // this also bounds n below the mask width.
    if inst.s > q || n >= 64 {
        return Ok(false);
    }
    let full: u64 = (1u64 << n) - 1;
    let masks: Vec<u64> = inst
        .subsets
        .iter()
        .filter(|t| t.iter().all(|&e| (e as usize) <= n))
        .map(|t| t.iter().fold(0u64, |m, &e| m | (1u64 << (e - 1))))
        .collect();
    fn cover(covered: u64, full: u64, masks: &[u64]) -> bool {
        if covered == full {
            return true;
        }
        let next = (!covered & full).trailing_zeros();
        masks
            .iter()
            .any(|&m| m & (1 << next) != 0 && m & covered == 0 && cover(covered | m, full, masks))
    }
    Ok(cover(0, full, &masks))
}

/// Pair classification in the gadget's complete graph. Element-subset
/// pairs split by whether the subset contains the element and whether it
/// is the element's designated owner; everything touching the tail that
/// is not a tail link lands in Remote.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    /// Element to its designated (lowest-index) containing subset.
    ElementOwner,
    /// Element to another subset containing it.
    ElementMember,
    /// Element to a subset not containing it.
    ElementOutside,
    /// Two subset nodes.
    SubsetSubset,
    /// Subset node to the hub.
    SubsetHub,
    /// Element node to the hub.
    ElementHub,
    /// Two element nodes.
    ElementElement,
    /// Hub to inner tail, or inner to outer tail.
    TailLink,
    /// Every remaining tail-incident pair.
    Remote,
}

impl EdgeKind {
    pub fn label(self) -> &'static str {
        match self {
            EdgeKind::ElementOwner => "element-owner",
            EdgeKind::ElementMember => "element-member",
            EdgeKind::ElementOutside => "element-outside",
            EdgeKind::SubsetSubset => "subset-subset",
            EdgeKind::SubsetHub => "subset-hub",
            EdgeKind::ElementHub => "element-hub",
            EdgeKind::ElementElement => "element-element",
            EdgeKind::TailLink => "tail-link",
            EdgeKind::Remote => "remote",
        }
    }
}

/// The weighted complete graph built from an instance. Costs are stored
/// pre-folded: the tree objective is sum(MI) - diam(T) * sum(cost).
#[derive(Debug, Clone)]
pub struct GadgetInstance {
    d: usize,
    s: usize,
    q: usize,
    delta: f64,
    tail_cost: f64,
    hop_mi: [f64; 3],
    mi: Vec<f64>,
    cost: Vec<f64>,
    kind: Vec<EdgeKind>,
}

/// Lays out nodes as elements 0..3s-1, subsets 3s..3s+q-1, then hub,
/// inner tail, outer tail, and fills the per-pair tables.
pub fn build_gadget(inst: &X3CInstance) -> GadgetInstance {
    let s = inst.s();
    let q = inst.subset_count();
    let d = 3 * s + q + 3;
    let delta = (TAIL_LINK_MI - TAIL_SKIP_MI) / (4.0 * (3 * s + q) as f64).sqrt();
    let hop_mi = [
        path_mutual_information(delta, 1).expect("correlation step in range"),
        path_mutual_information(delta, 2).expect("correlation step in range"),
        path_mutual_information(delta, 3).expect("correlation step in range"),
    ];
    let [i1, i2, i3] = hop_mi;
    let tail_cost = 9.0 / 8.0 * s as f64 * i1;
    let hub = 3 * s + q;
    let inner = hub + 1;
    let outer = hub + 2;
    // Adjacent nodes are one delta-channel apart; each tail link composes
    // a further 0.8-correlation channel.
    let rho1 = 2.0 * delta;
    let inner_subset_mi = symmetric_channel_mi(TAIL_CHANNEL_RHO * rho1);
    let inner_element_mi = symmetric_channel_mi(TAIL_CHANNEL_RHO * rho1 * rho1);
    let outer_subset_mi = symmetric_channel_mi(TAIL_CHANNEL_RHO * TAIL_CHANNEL_RHO * rho1);
    let outer_element_mi =
        symmetric_channel_mi(TAIL_CHANNEL_RHO * TAIL_CHANNEL_RHO * rho1 * rho1);

    let pairs = pair_count(d);
    let mut mi = vec![0.0; pairs];
    let mut cost = vec![0.0; pairs];
    let mut kind = vec![EdgeKind::Remote; pairs];
    let is_element = |v: usize| v < 3 * s;
    let is_subset = |v: usize| (3 * s..hub).contains(&v);
    for i in 0..d {
        for j in (i + 1)..d {
            let (k, m, c) = if is_element(i) && is_element(j) {
                (EdgeKind::ElementElement, i2, 11.0 / 8.0 * i1 + 0.25 * i2)
            } else if is_element(i) && is_subset(j) {
                let element = i as u32 + 1;
                let subset = j - 3 * s;
                if inst.owner(element) == Some(subset) {
                    (EdgeKind::ElementOwner, i1, i1)
                } else if inst.subsets()[subset].contains(&element) {
                    (EdgeKind::ElementMember, i3, 0.75 * i1 + 0.25 * i3)
                } else {
                    (EdgeKind::ElementOutside, i3, 1.25 * i1 + 0.25 * i2 + 0.25 * i3)
                }
            } else if is_subset(i) && is_subset(j) {
                (EdgeKind::SubsetSubset, i2, 0.75 * i1 + 0.25 * i2)
            } else if is_subset(i) && j == hub {
                (EdgeKind::SubsetHub, i1, 1.5 * i1)
            } else if is_element(i) && j == hub {
                (EdgeKind::ElementHub, i2, 11.0 / 8.0 * i1 + 0.25 * i2)
            } else if (i == hub && j == inner) || (i == inner && j == outer) {
                (EdgeKind::TailLink, TAIL_LINK_MI, tail_cost)
            } else if i == hub && j == outer {
                (EdgeKind::Remote, TAIL_SKIP_MI, 2.0 * tail_cost)
            } else if j == inner {
                let m = if is_subset(i) { inner_subset_mi } else { inner_element_mi };
                (EdgeKind::Remote, m, tail_cost)
            } else {
                debug_assert_eq!(j, outer);
                let m = if is_subset(i) { outer_subset_mi } else { outer_element_mi };
                (EdgeKind::Remote, m, 2.0 * tail_cost)
            };
            let p = pair_index(d, i, j);
            mi[p] = m;
            cost[p] = c;
            kind[p] = k;
        }
    }
    GadgetInstance { d, s, q, delta, tail_cost, hop_mi, mi, cost, kind }
}

impl GadgetInstance {
    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Shared cost unit on tail-incident pairs.
    pub fn tail_cost(&self) -> f64 {
        self.tail_cost
    }

    /// Mutual information across a path of 1, 2, or 3 hops (index 0..2).
    pub fn hop_mi(&self) -> [f64; 3] {
        self.hop_mi
    }

    pub fn hub_node(&self) -> usize {
        3 * self.s + self.q
    }

    pub fn inner_tail_node(&self) -> usize {
        self.hub_node() + 1
    }

    pub fn outer_tail_node(&self) -> usize {
        self.hub_node() + 2
    }

    pub fn mi(&self, i: usize, j: usize) -> f64 {
        self.mi[pair_index(self.d, i, j)]
    }

    pub fn cost(&self, i: usize, j: usize) -> f64 {
        self.cost[pair_index(self.d, i, j)]
    }

    pub fn kind(&self, i: usize, j: usize) -> EdgeKind {
        self.kind[pair_index(self.d, i, j)]
    }

    /// Tree objective sum(MI) - diam * sum(cost) and the diameter.
    pub fn objective(&self, edges: &[(usize, usize)]) -> (f64, usize) {
        let diam = tree_diameter(self.d, edges);
        let mi: f64 = edges.iter().map(|&(i, j)| self.mi(i, j)).sum();
        let cost: f64 = edges.iter().map(|&(i, j)| self.cost(i, j)).sum();
        (mi - diam as f64 * cost, diam)
    }

    /// Objective value the reduction claims for the optimum when a cover
    /// exists: 2*TAIL_LINK_MI - (11s+3q)*I1 - 8*tail_cost.
    pub fn claimed_optimum(&self) -> f64 {
        2.0 * TAIL_LINK_MI - (11 * self.s + 3 * self.q) as f64 * self.hop_mi[0]
            - 8.0 * self.tail_cost
    }

    /// Objective of the diameter-2 tree with every other node hanging off
    /// `center`.
    pub fn star_objective(&self, center: usize) -> f64 {
        let edges: Vec<(usize, usize)> =
            (0..self.d).filter(|&v| v != center).map(|v| (v.min(center), v.max(center))).collect();
        self.objective(&edges).0
    }

    /// Objective of the diameter-3 tree with all element and subset nodes
    /// on the hub and the tail attached as a path.
    pub fn hub_tree_objective(&self) -> f64 {
        let hub = self.hub_node();
        let mut edges: Vec<(usize, usize)> = (0..hub).map(|v| (v, hub)).collect();
        edges.push((hub, self.inner_tail_node()));
        edges.push((self.inner_tail_node(), self.outer_tail_node()));
        self.objective(&edges).0
    }
}

/// One instance-scale inequality behind the reduction's argument.
#[derive(Debug, Clone)]
pub struct OrderingCheck {
    pub what: &'static str,
    pub holds: bool,
    /// Left side minus right side; positive when the check holds.
    pub margin: f64,
}

/// Outcome of exhaustive verification on one instance.
#[derive(Debug, Clone)]
pub struct ReductionVerdict {
    pub d: usize,
    pub s: usize,
    pub q: usize,
    pub x3c_solvable: bool,
    /// Best objective over all spanning trees.
    pub opt_objective: f64,
    pub opt_diameter: usize,
    /// Sorted edge list of the best tree (lexicographically smallest
    /// among exact ties).
    pub opt_edges: Vec<(usize, usize)>,
    pub claimed_objective: f64,
    /// Instance-scale inequalities the reduction's argument relies on.
    pub checks: Vec<OrderingCheck>,
    /// True when every check holds.
    pub ordering_holds: bool,
    /// Solvable: optimum has diameter 4 and the claimed objective.
    /// Unsolvable: optimum has diameter != 4 or falls short of the claim.
    pub reduction_holds: bool,
}

/// Value-ordering checks evaluated at instance scale. The first five are
/// the stated chain TAIL_LINK_MI > TAIL_SKIP_MI > tail_cost > I1 > I2 >
/// I3; the last two compare the claimed optimum against the rival tree
/// shapes that the large-s argument dismisses through the tail cost
/// dwarfing I1 (a separation that shrinks to a factor 9s/8 here).
pub fn ordering_checks(g: &GadgetInstance) -> Vec<OrderingCheck> {
    let [i1, i2, i3] = g.hop_mi();
    let claimed = g.claimed_optimum();
    let best_star = (0..g.dimension())
        .map(|c| g.star_objective(c))
        .fold(f64::NEG_INFINITY, f64::max);
    let pairs = [
        ("tail-link mi > hub-to-outer mi", TAIL_LINK_MI - TAIL_SKIP_MI),
        ("hub-to-outer mi > tail cost unit", TAIL_SKIP_MI - g.tail_cost()),
        ("tail cost unit > one-hop mi", g.tail_cost() - i1),
        ("one-hop mi > two-hop mi", i1 - i2),
        ("two-hop mi > three-hop mi", i2 - i3),
        ("claimed optimum > best diameter-2 star", claimed - best_star),
        ("claimed optimum > all-on-hub tree", claimed - g.hub_tree_objective()),
    ];
    pairs
        .into_iter()
        .map(|(what, margin)| OrderingCheck { what, holds: margin > 0.0, margin })
        .collect()
}

/// Solves the cover question and the tree optimization exhaustively and
/// reports whether the reduction's claim holds on this instance, along
/// with the instance-scale ordering checks. The claim is asserted by the
/// caller only on instances whose checks all pass; tiny instances are
/// expected to fail the star comparison and are reported as such.
pub fn verify_reduction(inst: &X3CInstance) -> Result<ReductionVerdict, HardnessError> {
    let g = build_gadget(inst);
    let d = g.dimension();
    if d > BRUTE_FORCE_MAX_NODES {
        return Err(HardnessError::TooLarge { got: d, max: BRUTE_FORCE_MAX_NODES });
    }
    let x3c_solvable = x3c_brute_force(inst)?;
    // Exact float equality: ties resolve toward the lexicographically
    // smaller sorted edge list, a total order, so the parallel reduction
    // is deterministic.
    let better = |a: &(f64, Vec<(usize, usize)>), b: &(f64, Vec<(usize, usize)>)| -> bool {
        a.0 > b.0 || (a.0 == b.0 && a.1 < b.1)
    };
    let (opt_objective, opt_edges) = (0..spanning_tree_count(d))
        .into_par_iter()
        .map(|idx| {
            let mut edges = spanning_tree_by_index(d, idx);
            edges.sort_unstable();
            (g.objective(&edges).0, edges)
        })
        .reduce_with(|a, b| if better(&a, &b) { a } else { b })
        .expect("at least one spanning tree");
    let opt_diameter = tree_diameter(d, &opt_edges);
    let claimed_objective = g.claimed_optimum();
    let checks = ordering_checks(&g);
    let ordering_holds = checks.iter().all(|c| c.holds);
    let matches_claim =
        opt_diameter == 4 && (opt_objective - claimed_objective).abs() <= OBJECTIVE_TOL;
    let reduction_holds = if x3c_solvable {
        matches_claim
    } else {
        opt_diameter != 4 || opt_objective < claimed_objective - OBJECTIVE_TOL
    };
    Ok(ReductionVerdict {
        d,
        s: g.s,
        q: g.q,
        x3c_solvable,
        opt_objective,
        opt_diameter,
        opt_edges,
        claimed_objective,
        checks,
        ordering_holds,
        reduction_holds,
    })
}
