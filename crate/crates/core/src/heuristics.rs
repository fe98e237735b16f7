//! Static choice of the variables to branch on first, and the dynamic
//! variable-selection policies.

use std::collections::VecDeque;

use fixedbitset::FixedBitSet;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::UndirectedView;
use crate::model::{SearchState, SipInstance};

/// The variables a heuristic wants instantiated before decomposition checks start.
#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicResult {
    pub body_vars: Vec<usize>,
    /// `|body_vars| / |V_p|`.
    pub fraction: f64,
}

impl HeuristicResult {
    fn from_set(view: &UndirectedView, mut vars: Vec<usize>) -> Self {
        // highest degree first, then lowest id
        vars.sort_by(|&a, &b| view.degree(b).cmp(&view.degree(a)).then(a.cmp(&b)));
        let n = view.node_count();
        let fraction = if n == 0 {
            0.0
        } else {
            vars.len() as f64 / n as f64
        };
        HeuristicResult {
            body_vars: vars,
            fraction,
        }
    }

    pub fn as_set(&self, n: usize) -> FixedBitSet {
        let mut s = FixedBitSet::with_capacity(n);
        for &x in &self.body_vars {
            s.insert(x);
        }
        s
    }
}

/// Cycle heuristic (h1): peel nodes of degree at most one until none are
/// left and return the survivors, i.e. the 2-core.
pub fn cycle_heuristic(pattern: &UndirectedView) -> HeuristicResult {
    let n = pattern.node_count();
    let mut degree: Vec<usize> = (0..n).map(|u| pattern.degree(u)).collect();
    let mut removed = vec![false; n];
    let mut queue: VecDeque<usize> = (0..n).filter(|&u| degree[u] <= 1).collect();
    while let Some(u) = queue.pop_front() {
        if removed[u] {
            continue;
        }
        removed[u] = true;
        for &v in pattern.neighbors(u) {
            if !removed[v] {
                degree[v] -= 1;
                if degree[v] == 1 {
                    queue.push_back(v);
                }
            }
        }
    }
    let core = (0..n).filter(|&u| !removed[u]).collect();
    HeuristicResult::from_set(pattern, core)
}

/// Knobs for the bipartitioning local search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionConfig {
    /// Allowed deviation of a side from `n/2`, as a fraction of `n` (rounded up).
    pub tolerance_fraction: f64,
    pub restarts: usize,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        PartitionConfig {
            tolerance_fraction: 0.1,
            restarts: 8,
        }
    }
}

impl PartitionConfig {
    pub fn tolerance(&self, n: usize) -> usize {
        (self.tolerance_fraction * n as f64).ceil() as usize
    }

    /// Whether a side of `size` nodes out of `n` is acceptable.
    pub fn is_balanced(&self, n: usize, size: usize) -> bool {
        let tol2 = 2 * self.tolerance(n);
        size >= 1 && size < n && (2 * size).abs_diff(n) <= tol2
    }
}

/// A 2-partition of the pattern nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bipartition {
    /// `true` = second side.
    pub side: Vec<bool>,
    pub edgecut: usize,
}

impl Bipartition {
    pub fn from_sides(view: &UndirectedView, side: Vec<bool>) -> Self {
        let edgecut = view.edges().filter(|&(u, v)| side[u] != side[v]).count();
        Bipartition { side, edgecut }
    }

    pub fn cut_edges<'a>(&'a self, view: &'a UndirectedView) -> impl Iterator<Item = (usize, usize)> + 'a {
        view.edges().filter(move |&(u, v)| self.side[u] != self.side[v])
    }

    pub fn size_of_second(&self) -> usize {
        self.side.iter().filter(|&&s| s).count()
    }
}

/// One Fiduccia–Mattheyses style pass: move the best-gain unlocked node that
/// keeps balance, lock it, and keep the best prefix of moves. Returns the
/// edgecut reduction.
fn fm_pass(view: &UndirectedView, side: &mut [bool], cfg: &PartitionConfig) -> i64 {
    let n = side.len();
    let mut gain: Vec<i64> = (0..n)
        .map(|u| {
            view.neighbors(u)
                .iter()
                .map(|&v| if side[v] != side[u] { 1 } else { -1 })
                .sum()
        })
        .collect();
    let mut second = side.iter().filter(|&&s| s).count();
    let mut locked = vec![false; n];
    let mut moves = Vec::with_capacity(n);
    let (mut total, mut best, mut best_len) = (0i64, 0i64, 0usize);
    loop {
        let mut pick: Option<usize> = None;
        for u in 0..n {
            if locked[u] {
                continue;
            }
            let new_second = if side[u] { second - 1 } else { second + 1 };
            if !cfg.is_balanced(n, new_second) {
                continue;
            }
            if pick.is_none_or(|p| gain[u] > gain[p]) {
                pick = Some(u);
            }
        }
        let Some(u) = pick else { break };
        total += gain[u];
        second = if side[u] { second - 1 } else { second + 1 };
        side[u] = !side[u];
        locked[u] = true;
        gain[u] = -gain[u];
        for &v in view.neighbors(u) {
            gain[v] += if side[v] == side[u] { -2 } else { 2 };
        }
        moves.push(u);
        if total > best {
            best = total;
            best_len = moves.len();
        }
    }
    for &u in &moves[best_len..] {
        side[u] = !side[u];
    }
    best
}

/// Balanced 2-partition by multi-start local search.
pub fn bipartition(view: &UndirectedView, seed: u64, cfg: &PartitionConfig) -> Bipartition {
    let n = view.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(usize, usize, Bipartition)> = None;
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..cfg.restarts.max(1) {
        order.shuffle(&mut rng);
        let mut side = vec![false; n];
        for &u in &order[..n / 2] {
            side[u] = true;
        }
        while fm_pass(view, &mut side, cfg) > 0 {}
        let part = Bipartition::from_sides(view, side);
        let cover = nodecut(view, &part).len();
        if best
            .as_ref()
            .is_none_or(|(cut, cov, _)| (part.edgecut, cover) < (*cut, *cov))
        {
            best = Some((part.edgecut, cover, part));
        }
    }
    best.expect("at least one restart").2
}

/// Greedy cover of the cut edges: repeatedly take the node touching the most
/// uncovered cut edges (lowest id on ties).
pub fn nodecut(view: &UndirectedView, part: &Bipartition) -> Vec<usize> {
    let n = view.node_count();
    let cut: Vec<(usize, usize)> = part.cut_edges(view).collect();
    let mut covered = vec![false; cut.len()];
    let mut load = vec![0usize; n];
    for &(u, v) in &cut {
        load[u] += 1;
        load[v] += 1;
    }
    let mut chosen = Vec::new();
    let mut remaining = cut.len();
    while remaining > 0 {
        let u = (0..n)
            .max_by(|&a, &b| load[a].cmp(&load[b]).then(b.cmp(&a)))
            .expect("non-empty graph");
        chosen.push(u);
        for (k, &(a, b)) in cut.iter().enumerate() {
            if !covered[k] && (a == u || b == u) {
                covered[k] = true;
                remaining -= 1;
                load[a] -= 1;
                load[b] -= 1;
            }
        }
    }
    chosen
}

/// Partitioning heuristic (h2): the nodecut of a balanced bipartition.
/// Patterns with fewer than two nodes give an empty set.
pub fn partition_heuristic(pattern: &UndirectedView, seed: u64, cfg: &PartitionConfig) -> HeuristicResult {
    if pattern.node_count() < 2 {
        return HeuristicResult::from_set(pattern, Vec::new());
    }
    let part = bipartition(pattern, seed, cfg);
    HeuristicResult::from_set(pattern, nodecut(pattern, &part))
}

/// Variable-selection policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionPolicy<'a> {
    /// Most pattern arcs to other unassigned variables, then smallest domain, then lowest id.
    MaxCstr,
    /// Smallest domain, then lowest id.
    MinSize,
    /// First unassigned variable of the given order.
    Static(&'a [usize]),
}

fn open_arcs(inst: &SipInstance, state: &SearchState, x: usize) -> usize {
    let p = inst.pattern();
    p.successors(x)
        .iter()
        .chain(p.predecessors(x))
        .filter(|&&y| y != x && !state.is_assigned(y))
        .count()
}

/// Picks the next variable to branch on among unassigned variables in `scope`.
pub fn select_variable(
    inst: &SipInstance,
    state: &SearchState,
    policy: SelectionPolicy<'_>,
    scope: Option<&FixedBitSet>,
) -> Option<usize> {
    let in_scope = |x: usize| scope.is_none_or(|s| s.contains(x)) && !state.is_assigned(x);
    match policy {
        SelectionPolicy::Static(order) => order.iter().copied().find(|&x| in_scope(x)),
        SelectionPolicy::MinSize => (0..state.variable_count())
            .filter(|&x| in_scope(x))
            .min_by_key(|&x| (state.domain(x).len(), x)),
        SelectionPolicy::MaxCstr => (0..state.variable_count())
            .filter(|&x| in_scope(x))
            .min_by_key(|&x| {
                (
                    std::cmp::Reverse(open_arcs(inst, state, x)),
                    state.domain(x).len(),
                    x,
                )
            }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{is_singly_connected, DirectedGraph};
    use crate::model::InitOptions;

    fn view(n: usize, edges: &[(usize, usize)]) -> UndirectedView {
        UndirectedView::from_edges(n, edges.iter().copied()).unwrap()
    }

    fn sorted(mut v: Vec<usize>) -> Vec<usize> {
        v.sort_unstable();
        v
    }

    #[test]
    fn h1_examples() {
        assert!(cycle_heuristic(&view(4, &[(0, 1), (1, 2), (2, 3)])).body_vars.is_empty());
        let c5 = view(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]);
        let r = cycle_heuristic(&c5);
        assert_eq!(sorted(r.body_vars), vec![0, 1, 2, 3, 4]);
        assert_eq!(r.fraction, 1.0);
        let tri = view(4, &[(0, 1), (1, 2), (2, 0), (2, 3)]);
        let r = cycle_heuristic(&tri);
        assert_eq!(r.body_vars, vec![2, 0, 1]);
        assert_eq!(r.fraction, 0.75);
        assert!(cycle_heuristic(&view(1, &[])).body_vars.is_empty());
    }

    #[test]
    fn h1_leaves_a_forest() {
        let g = view(7, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 3), (5, 6)]);
        let s = cycle_heuristic(&g).as_set(7);
        let mut rest = g.all_nodes();
        rest.difference_with(&s);
        assert!(is_singly_connected(&g, &rest));
    }

    #[test]
    fn balance_rule() {
        let cfg = PartitionConfig::default();
        assert!(cfg.is_balanced(2, 1));
        assert!(!cfg.is_balanced(2, 0) && !cfg.is_balanced(2, 2));
        assert!(cfg.is_balanced(10, 4) && cfg.is_balanced(10, 6));
        assert!(!cfg.is_balanced(10, 3));
        assert!(cfg.is_balanced(6, 2) && cfg.is_balanced(6, 4) && !cfg.is_balanced(6, 1));
    }

    #[test]
    fn h2_bridge_between_triangles() {
        let g = view(6, &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (2, 3)]);
        let cfg = PartitionConfig::default();
        for seed in 0..8 {
            let p = bipartition(&g, seed, &cfg);
            assert_eq!(p.edgecut, 1, "seed {seed}");
            let s = partition_heuristic(&g, seed, &cfg);
            assert_eq!(s.body_vars.len(), 1);
            assert!(s.body_vars[0] == 2 || s.body_vars[0] == 3);
        }
    }

    #[test]
    fn h2_path_and_edge() {
        let cfg = PartitionConfig::default();
        let p4 = view(4, &[(0, 1), (1, 2), (2, 3)]);
        let p = bipartition(&p4, 3, &cfg);
        assert_eq!(p.edgecut, 1);
        assert_eq!(partition_heuristic(&p4, 3, &cfg).body_vars.len(), 1);

        let e = view(2, &[(0, 1)]);
        let p = bipartition(&e, 0, &cfg);
        assert_eq!(p.edgecut, 1);
        assert_eq!(partition_heuristic(&e, 0, &cfg).body_vars, vec![0]);

        assert!(partition_heuristic(&view(1, &[]), 0, &cfg).body_vars.is_empty());
    }

    #[test]
    fn nodecut_covers_cut() {
        let g = view(4, &[(0, 1), (0, 2), (0, 3), (1, 2)]);
        let part = Bipartition::from_sides(&g, vec![false, true, true, true]);
        assert_eq!(part.edgecut, 3);
        assert_eq!(nodecut(&g, &part), vec![0]);
    }

    fn sip(pn: usize, parcs: &[(usize, usize)], tn: usize) -> SipInstance {
        SipInstance::new(
            DirectedGraph::from_arcs(pn, parcs.iter().copied()).unwrap(),
            DirectedGraph::new(tn),
        )
        .unwrap()
    }

    #[test]
    fn selection_policies() {
        let star = sip(4, &[(1, 0), (2, 0), (0, 3)], 5);
        let s = SearchState::new(&star, InitOptions::default());
        assert_eq!(select_variable(&star, &s, SelectionPolicy::MaxCstr, None), Some(0));
        assert_eq!(select_variable(&star, &s, SelectionPolicy::MinSize, None), Some(0));
        assert_eq!(
            select_variable(&star, &s, SelectionPolicy::Static(&[3, 1]), None),
            Some(3)
        );

        let free = sip(3, &[], 6);
        let mut s = SearchState::new(&free, InitOptions::default());
        let mask = |vals: &[usize]| {
            let mut b = FixedBitSet::with_capacity(6);
            for &v in vals {
                b.insert(v);
            }
            b
        };
        s.intersect(0, &mask(&[0, 1, 2])).unwrap();
        s.intersect(1, &mask(&[3, 4])).unwrap();
        assert_eq!(select_variable(&free, &s, SelectionPolicy::MinSize, None), Some(1));
        assert_eq!(select_variable(&free, &s, SelectionPolicy::MaxCstr, None), Some(1));
        let mut scope = FixedBitSet::with_capacity(3);
        scope.insert(0);
        scope.insert(2);
        assert_eq!(
            select_variable(&free, &s, SelectionPolicy::MinSize, Some(&scope)),
            Some(0)
        );

        for (x, v) in [(0, 0), (1, 3), (2, 5)] {
            s.fix(x, v).unwrap();
        }
        assert_eq!(select_variable(&free, &s, SelectionPolicy::MaxCstr, None), None);
        assert_eq!(select_variable(&free, &s, SelectionPolicy::MinSize, None), None);
    }
}
