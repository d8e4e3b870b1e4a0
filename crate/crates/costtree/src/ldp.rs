//! Large-deviation analysis of structure-learning errors: crossover rates
//! between competing edges, whole-run error exponents for both learners,
//! finite-sample error bounds, and empirical decay-rate fits.
//!
//! The crossover rate of an ordered edge pair (e, e') is the minimum KL
//! divergence from the reference joint P to any distribution Q on the
//! endpoint variables at which the weight of e' catches up with the weight
//! of e. Weights are mutual information plus a distribution-independent
//! cost term, so the constraint is a smooth scalar equality on a simplex
//! over 8 cells (shared endpoint) or 16 cells (disjoint edges).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::inference::Protocol;
use crate::learn::{async_learn, sync_learn_trace};
use crate::model::TreeModel;
use crate::physnet::CostMatrix;
use crate::util::{adjacency, all_pairs, splitmix64};

/// Achievable range of a binary-pair mutual information in nats. The
/// difference of two pair MIs over one joint therefore spans exactly
/// [-ln 2, ln 2], which decides crossover feasibility.
pub const MI_SPAN: f64 = std::f64::consts::LN_2;

#[derive(Debug, Error)]
pub enum LdpError {
    #[error("solver stalled: residual {residual:.3e} above tolerance, objective near {best_value:.6}")]
    SolverStalled { best_value: f64, residual: f64 },
    #[error("decay fit needs at least 3 positive error estimates, got {positive_points}")]
    InsufficientDecayData { positive_points: usize },
}

/// A nonnegative rate that is infinite exactly when the crossover event is
/// impossible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rate {
    Finite(f64),
    Infinite,
}

impl Rate {
    pub fn finite(self) -> Option<f64> {
        match self {
            Rate::Finite(v) => Some(v),
            Rate::Infinite => None,
        }
    }

    pub fn min(self, other: Rate) -> Rate {
        match (self, other) {
            (Rate::Infinite, r) | (r, Rate::Infinite) => r,
            (Rate::Finite(a), Rate::Finite(b)) => Rate::Finite(a.min(b)),
        }
    }
}

impl std::fmt::Display for Rate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Rate::Finite(v) => write!(f, "{v}"),
            Rate::Infinite => write!(f, "inf"),
        }
    }
}

/// One crossover question: on the joint distribution of the endpoint
/// variables of edges e and e', how far from the reference must the
/// empirical distribution move before e' outweighs e?
#[derive(Debug, Clone)]
pub struct CrossoverProblem {
    /// Global node ids, ascending; 3 nodes when the edges share one.
    nodes: Vec<usize>,
    /// Reference joint; the node at position p holds bit (k-1-p) of the
    /// cell index.
    reference: Vec<f64>,
    /// Positions (into `nodes`) of the favored edge e.
    e_pair: (usize, usize),
    /// Positions of the rival edge e'.
    ep_pair: (usize, usize),
    /// Distribution-independent part of w_e.
    e_const: f64,
    /// Distribution-independent part of w_e'.
    ep_const: f64,
}

impl CrossoverProblem {
    /// Builds a problem from global edge labels and a reference joint over
    /// the sorted union of their endpoints.
    pub fn new(
        reference: Vec<f64>,
        nodes: Vec<usize>,
        e: (usize, usize),
        ep: (usize, usize),
        e_const: f64,
        ep_const: f64,
    ) -> Self {
        assert!(nodes.windows(2).all(|w| w[0] < w[1]), "nodes must be ascending");
        assert!(matches!(nodes.len(), 3 | 4));
        assert_eq!(reference.len(), 1 << nodes.len());
        let total: f64 = reference.iter().sum();
        assert!(
            (total - 1.0).abs() < 1e-9 && reference.iter().all(|&p| p >= 0.0),
            "reference must be a distribution"
        );
        let pos = |v: usize| nodes.iter().position(|&n| n == v).expect("endpoint in node set");
        let e_pair = (pos(e.0), pos(e.1));
        let ep_pair = (pos(ep.0), pos(ep.1));
        assert!(e.0 != e.1 && ep.0 != ep.1 && e_pair != ep_pair);
        CrossoverProblem { nodes, reference, e_pair, ep_pair, e_const, ep_const }
    }

    /// Reference joint taken from the exact model marginal of the endpoint
    /// union; cost constants supplied by the caller.
    pub fn from_model(
        model: &TreeModel,
        e: (usize, usize),
        ep: (usize, usize),
        e_const: f64,
        ep_const: f64,
    ) -> Self {
        let mut nodes = vec![e.0, e.1, ep.0, ep.1];
        nodes.sort_unstable();
        nodes.dedup();
        let reference = model.marginal_joint(&nodes);
        CrossoverProblem::new(reference, nodes, e, ep, e_const, ep_const)
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    /// Cost-constant difference; the equality constraint is
    /// I_e(Q) - I_e'(Q) = -(e_const - ep_const).
    pub fn const_gap(&self) -> f64 {
        self.e_const - self.ep_const
    }

    /// Projection index of a cell onto an edge's two positions: 2a + b.
    fn project(&self, cell: usize, pair: (usize, usize)) -> usize {
        let k = self.nodes.len();
        let a = (cell >> (k - 1 - pair.0)) & 1;
        let b = (cell >> (k - 1 - pair.1)) & 1;
        2 * a + b
    }

    fn pair_mi(&self, q: &[f64], pair: (usize, usize)) -> f64 {
        let mut joint = [0.0f64; 4];
        for (cell, &qv) in q.iter().enumerate() {
            joint[self.project(cell, pair)] += qv;
        }
        let a = [joint[0] + joint[1], joint[2] + joint[3]];
        let b = [joint[0] + joint[2], joint[1] + joint[3]];
        let mut mi = 0.0;
        for x in 0..2 {
            for y in 0..2 {
                let p = joint[2 * x + y];
                if p > 0.0 {
                    mi += p * (p / (a[x] * b[y])).ln();
                }
            }
        }
        mi.max(0.0)
    }

    /// w_e(Q) - w_e'(Q): positive while e is still preferred under Q.
    pub fn weight_gap(&self, q: &[f64]) -> f64 {
        self.pair_mi(q, self.e_pair) - self.pair_mi(q, self.ep_pair) + self.const_gap()
    }

    /// Gradient of the weight gap; ignores the (constant) cost terms.
    fn weight_gap_grad(&self, q: &[f64], out: &mut [f64]) {
        let mut je = [0.0f64; 4];
        let mut jp = [0.0f64; 4];
        for (cell, &qv) in q.iter().enumerate() {
            je[self.project(cell, self.e_pair)] += qv;
            jp[self.project(cell, self.ep_pair)] += qv;
        }
        let mae = [je[0] + je[1], je[2] + je[3]];
        let mbe = [je[0] + je[2], je[1] + je[3]];
        let map = [jp[0] + jp[1], jp[2] + jp[3]];
        let mbp = [jp[0] + jp[2], jp[1] + jp[3]];
        // d I / d q_cell = ln(M_ab / (M_a M_b)) - 1; the -1 terms cancel
        // between the two edges.
        for (cell, slot) in out.iter_mut().enumerate() {
            let pe = self.project(cell, self.e_pair);
            let pp = self.project(cell, self.ep_pair);
            let te = safe_ln(je[pe]) - safe_ln(mae[pe / 2]) - safe_ln(mbe[pe % 2]);
            let tp = safe_ln(jp[pp]) - safe_ln(map[pp / 2]) - safe_ln(mbp[pp % 2]);
            *slot = te - tp;
        }
    }

    /// KL divergence of q from the reference, with 0 ln 0 = 0.
    fn kl(&self, q: &[f64]) -> f64 {
        let mut s = 0.0;
        for (&qv, &pv) in q.iter().zip(&self.reference) {
            if qv > 0.0 {
                s += qv * (qv / pv).ln();
            }
        }
        s.max(0.0)
    }

    fn kl_grad(&self, q: &[f64], out: &mut [f64]) {
        for ((slot, &qv), &pv) in out.iter_mut().zip(q).zip(&self.reference) {
            *slot = safe_ln(qv) - safe_ln(pv) + 1.0;
        }
    }
}

fn safe_ln(x: f64) -> f64 {
    x.max(1e-300).ln()
}

/// Crossover-rate solve outcome.
#[derive(Debug, Clone)]
pub struct RateResult {
    pub rate: Rate,
    /// Constrained minimizer when the rate is finite and positive.
    pub minimizer: Option<Vec<f64>>,
    /// Total inner solver iterations across restarts.
    pub iterations: usize,
    /// |w_e(Q*) - w_e'(Q*)| at the reported minimizer.
    pub residual: f64,
}

/// Solver knobs. `starts` trades accuracy for speed: the equality surface
/// is non-convex through the mutual-information terms, so the solver
/// restarts from the reference joint plus random simplex draws.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub tol: f64,
    pub starts: usize,
    pub seed: u64,
    pub max_outer: usize,
    pub max_inner: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-8, starts: 32, seed: 7, max_outer: 30, max_inner: 400 }
    }
}

impl SolverOptions {
    /// Cheaper preset for wide scans over many edge pairs.
    pub fn scan() -> Self {
        SolverOptions { starts: 8, max_inner: 250, ..SolverOptions::default() }
    }
}

/// Euclidean projection onto the simplex restricted to `support`; cells
/// outside the support are pinned to zero.
fn project_simplex(v: &mut [f64], support: &[usize]) {
    let mut vals: Vec<f64> = support.iter().map(|&i| v[i]).collect();
    vals.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
    let mut acc = 0.0;
    let mut tau = f64::NEG_INFINITY;
    for (r, &val) in vals.iter().enumerate() {
        acc += val;
        let t = (acc - 1.0) / (r + 1) as f64;
        if val - t > 0.0 {
            tau = t;
        }
    }
    let originals: Vec<f64> = support.iter().map(|&i| v[i]).collect();
    v.iter_mut().for_each(|x| *x = 0.0);
    for (&i, &orig) in support.iter().zip(&originals) {
        v[i] = (orig - tau).max(0.0);
    }
}

/// Minimizes KL(q || reference) subject to weight_gap(q) = 0 from one
/// start, by an augmented Lagrangian with projected gradient descent
/// inner loops. Returns (q, kl, |gap|, inner iterations).
fn solve_from(
    prob: &CrossoverProblem,
    start: &[f64],
    support: &[usize],
    opts: &SolverOptions,
) -> (Vec<f64>, f64, f64, usize) {
    let m = prob.reference.len();
    let mut q = start.to_vec();
    let mut lambda = 0.0f64;
    let mut mu = 10.0f64;
    let mut grad = vec![0.0; m];
    let mut gap_grad = vec![0.0; m];
    let mut prev_gap = f64::INFINITY;
    let mut inner_total = 0usize;

    for _outer in 0..opts.max_outer {
        // Inner: projected gradient with an adaptive step on
        // L(q) = KL(q) + lambda gap(q) + (mu/2) gap(q)^2.
        let mut step = 0.1;
        let lagr = |prob: &CrossoverProblem, q: &[f64], lambda: f64, mu: f64| -> f64 {
            let g = prob.weight_gap(q);
            prob.kl(q) + lambda * g + 0.5 * mu * g * g
        };
        let mut cur = lagr(prob, &q, lambda, mu);
        for _ in 0..opts.max_inner {
            inner_total += 1;
            prob.kl_grad(&q, &mut grad);
            prob.weight_gap_grad(&q, &mut gap_grad);
            let g = prob.weight_gap(&q);
            let scale = lambda + mu * g;
            for (gi, &ggi) in grad.iter_mut().zip(&gap_grad) {
                *gi += scale * ggi;
            }
            let mut improved = false;
            for _ in 0..40 {
                let mut cand: Vec<f64> =
                    q.iter().zip(&grad).map(|(&qi, &gi)| qi - step * gi).collect();
                project_simplex(&mut cand, support);
                let val = lagr(prob, &cand, lambda, mu);
                if val < cur - 1e-15 {
                    let moved: f64 =
                        q.iter().zip(&cand).map(|(a, b)| (a - b).abs()).sum();
                    q = cand;
                    cur = val;
                    step *= 1.5;
                    improved = true;
                    if moved < 1e-14 {
                        improved = false;
                    }
                    break;
                }
                step *= 0.5;
                if step < 1e-18 {
                    break;
                }
            }
            if !improved {
                break;
            }
        }
        let g = prob.weight_gap(&q);
        if g.abs() <= opts.tol * 0.1 {
            break;
        }
        lambda += mu * g;
        if g.abs() > 0.25 * prev_gap {
            mu = (mu * 5.0).min(1e12);
        }
        prev_gap = g.abs();
    }
    let gap = prob.weight_gap(&q).abs();
    let kl = prob.kl(&q);
    (q, kl, gap, inner_total)
}

/// Rate of the crossover event {w_e(empirical) <= w_e'(empirical)} under
/// sampling from the reference joint:
///
/// * 0 when the reference itself already violates the ordering (the event
///   is not rare);
/// * infinite when the cost-constant gap exceeds the achievable mutual-
///   information span, making the event impossible;
/// * otherwise the constrained minimum KL divergence, found by
///   multi-start projected-gradient descent with the equality handled by
///   an augmented Lagrangian.
pub fn crossover_rate(
    problem: &CrossoverProblem,
    opts: &SolverOptions,
) -> Result<RateResult, LdpError> {
    let p = &problem.reference;
    let gap_at_p = problem.weight_gap(p);
    if gap_at_p <= 1e-14 {
        return Ok(RateResult {
            rate: Rate::Finite(0.0),
            minimizer: Some(p.clone()),
            iterations: 0,
            residual: 0.0,
        });
    }
    if problem.const_gap().abs() > MI_SPAN {
        return Ok(RateResult { rate: Rate::Infinite, minimizer: None, iterations: 0, residual: 0.0 });
    }

    let m = p.len();
    let support: Vec<usize> = (0..m).filter(|&i| p[i] > 0.0).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    let mut iterations = 0usize;
    for s in 0..opts.starts.max(1) {
        let start: Vec<f64> = if s == 0 {
            p.clone()
        } else {
            // Exponential draws normalized over the support: uniform-like
            // coverage of the restricted simplex.
            let mut v = vec![0.0; m];
            let mut total = 0.0;
            for &i in &support {
                let e = -(1.0 - rng.gen::<f64>()).ln();
                v[i] = e;
                total += e;
            }
            v.iter_mut().for_each(|x| *x /= total);
            v
        };
        let (q, kl, gap, inner) = solve_from(problem, &start, &support, opts);
        iterations += inner;
        let replace = match &best {
            None => true,
            Some((_, bkl, bgap)) => {
                let ok_new = gap <= opts.tol;
                let ok_old = *bgap <= opts.tol;
                (ok_new && !ok_old)
                    || (ok_new && ok_old && kl < *bkl)
                    || (!ok_new && !ok_old && gap < *bgap)
            }
        };
        if replace {
            best = Some((q, kl, gap));
        }
    }
    let (q, kl, gap) = best.expect("at least one start");
    if gap > opts.tol {
        return Err(LdpError::SolverStalled { best_value: kl, residual: gap });
    }
    Ok(RateResult {
        rate: Rate::Finite(kl.max(0.0)),
        minimizer: Some(q),
        iterations,
        residual: gap,
    })
}

/// One entry of an exponent report: the rate at which the rival edge
/// overtakes a currently favored edge.
#[derive(Debug, Clone)]
pub struct PairRate {
    pub favored: (usize, usize),
    pub rival: (usize, usize),
    pub rate: Rate,
    /// Constrained minimizer behind a finite positive rate.
    pub minimizer: Option<Vec<f64>>,
}

/// Error exponent of a learner on a model: the slowest crossover governs
/// the overall structure-error decay.
#[derive(Debug, Clone)]
pub struct ExponentReport {
    pub exponent: Rate,
    pub pairs: Vec<PairRate>,
    /// The tree the learner recovers from exact marginals.
    pub ideal_edges: Vec<(usize, usize)>,
}

/// Tree edges on the path between the endpoints of `ep`.
fn path_edges(d: usize, tree: &[(usize, usize)], ep: (usize, usize)) -> Vec<(usize, usize)> {
    let adj = adjacency(d, tree);
    let mut parent = vec![usize::MAX; d];
    let mut queue = std::collections::VecDeque::from([ep.0]);
    parent[ep.0] = ep.0;
    while let Some(v) = queue.pop_front() {
        if v == ep.1 {
            break;
        }
        for &w in &adj[v] {
            if parent[w] == usize::MAX {
                parent[w] = v;
                queue.push_back(w);
            }
        }
    }
    let mut edges = Vec::new();
    let mut v = ep.1;
    while v != ep.0 {
        let u = parent[v];
        edges.push((u.min(v), u.max(v)));
        v = u;
    }
    edges
}

/// Asynchronous-learner exponent: for every non-tree pair e' and every
/// tree edge e on the path closed by e', the crossover rate of (e, e')
/// with weights I - 2 gamma c; the minimum is the exponent. The maximum-
/// weight tree property guarantees w_e(P) >= w_e'(P) for every such pair.
pub fn error_exponent_async(
    model: &TreeModel,
    costs: &CostMatrix,
    gamma: f64,
    opts: &SolverOptions,
) -> Result<ExponentReport, LdpError> {
    let d = model.dimension();
    let marg = model.exact_marginals();
    let ideal = async_learn(&marg, costs, gamma);
    let tree_set: std::collections::HashSet<(usize, usize)> =
        ideal.edges.iter().copied().collect();
    let mut tasks: Vec<((usize, usize), (usize, usize))> = Vec::new();
    for ep in all_pairs(d) {
        if tree_set.contains(&ep) {
            continue;
        }
        for e in path_edges(d, &ideal.edges, ep) {
            tasks.push((e, ep));
        }
    }
    let pairs: Result<Vec<PairRate>, LdpError> = tasks
        .par_iter()
        .map(|&(e, ep)| {
            let prob = CrossoverProblem::from_model(
                model,
                e,
                ep,
                -2.0 * gamma * costs.cost(e.0, e.1),
                -2.0 * gamma * costs.cost(ep.0, ep.1),
            );
            let pair_seed = splitmix64(opts.seed ^ splitmix64(task_seed(e, ep)));
            let res = crossover_rate(&prob, &SolverOptions { seed: pair_seed, ..*opts })?;
            Ok(PairRate { favored: e, rival: ep, rate: res.rate, minimizer: res.minimizer })
        })
        .collect();
    let pairs = pairs?;
    let exponent = pairs.iter().fold(Rate::Infinite, |acc, p| acc.min(p.rate));
    Ok(ExponentReport { exponent, pairs, ideal_edges: ideal.edges })
}

/// Synchronous-learner exponent: replays the greedy trajectory on exact
/// marginals; at every step the chosen edge is pitted against each other
/// candidate of that step's frontier, with both weights carrying the
/// step's own cost constants. The minimum crossover rate over the whole
/// trajectory lower-bounds the structure-error decay.
pub fn error_exponent_sync(
    model: &TreeModel,
    costs: &CostMatrix,
    gamma: f64,
    beta: f64,
    opts: &SolverOptions,
) -> Result<ExponentReport, LdpError> {
    let marg = model.exact_marginals();
    let run = sync_learn_trace(&marg, costs, gamma, beta);
    let mut tasks: Vec<((usize, usize), f64, (usize, usize), f64)> = Vec::new();
    for step in &run.steps {
        let chosen = step
            .candidates
            .iter()
            .find(|c| c.edge == step.chosen)
            .expect("chosen edge is a candidate");
        let e_const = chosen.weight - chosen.mi;
        for cand in &step.candidates {
            if cand.edge == step.chosen {
                continue;
            }
            tasks.push((step.chosen, e_const, cand.edge, cand.weight - cand.mi));
        }
    }
    let pairs: Result<Vec<PairRate>, LdpError> = tasks
        .par_iter()
        .map(|&(e, e_const, ep, ep_const)| {
            let prob = CrossoverProblem::from_model(model, e, ep, e_const, ep_const);
            let pair_seed = splitmix64(opts.seed ^ splitmix64(task_seed(e, ep)));
            let res = crossover_rate(&prob, &SolverOptions { seed: pair_seed, ..*opts })?;
            Ok(PairRate { favored: e, rival: ep, rate: res.rate, minimizer: res.minimizer })
        })
        .collect();
    let pairs = pairs?;
    let exponent = pairs.iter().fold(Rate::Infinite, |acc, p| acc.min(p.rate));
    Ok(ExponentReport { exponent, pairs, ideal_edges: run.tree.edges })
}

fn task_seed(e: (usize, usize), ep: (usize, usize)) -> u64 {
    ((e.0 as u64) << 48) | ((e.1 as u64) << 32) | ((ep.0 as u64) << 16) | ep.1 as u64
}

/// Finite-sample bound on the structure-error probability: a polynomial
/// count of competing pairs, times the number of possible empirical
/// distributions on 4 binary variables, times exp(-n K). Evaluated in log
/// domain so large n and tiny K stay accurate.
pub fn finite_sample_bound(
    d: usize,
    n: usize,
    exponent: Rate,
    protocol: Protocol,
    alphabet: usize,
) -> f64 {
    assert!(n >= 1 && d >= 2 && alphabet >= 2);
    let k = match exponent {
        Rate::Infinite => return 0.0,
        Rate::Finite(k) => {
            assert!(k >= 0.0);
            k
        }
    };
    let df = d as f64;
    let prefactor = match protocol {
        Protocol::Async => (df - 1.0) * (df - 1.0) * (df - 2.0) / 2.0,
        Protocol::Sync => (df - 1.0) * df * (df + 1.0) / 6.0,
    };
    let cells = (alphabet as f64).powi(4);
    let nf = n as f64;
    // ln C(n - 1 + cells, cells - 1) via the gamma function.
    let ln_binom =
        ln_gamma(nf + cells) - ln_gamma(cells) - ln_gamma(nf + 1.0);
    let ln_bound = prefactor.ln() + ln_binom - nf * k;
    ln_bound.exp()
}

/// Least-squares estimate of the decay rate from an error-versus-n grid.
#[derive(Debug, Clone, Copy)]
pub struct DecayEstimate {
    /// Slope of -ln(error) against n.
    pub slope: f64,
    /// Standard error of the slope.
    pub stderr: f64,
    /// Grid points with a positive error estimate that entered the fit.
    pub points_used: usize,
}

/// Fits -ln(error) = a + slope * n by ordinary least squares over the
/// grid points with positive error estimates; zero-error points carry no
/// log information and are dropped.
pub fn empirical_decay_rate(grid: &[(usize, f64)]) -> Result<DecayEstimate, LdpError> {
    let pts: Vec<(f64, f64)> = grid
        .iter()
        .filter(|&&(_, err)| err > 0.0)
        .map(|&(n, err)| (n as f64, -err.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(LdpError::InsufficientDecayData { positive_points: pts.len() });
    }
    let n = pts.len() as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let rss: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let dof = (pts.len() as f64 - 2.0).max(1.0);
    let stderr = (rss / dof / sxx).sqrt();
    Ok(DecayEstimate { slope, stderr, points_used: pts.len() })
}
