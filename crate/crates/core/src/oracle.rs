//! Brute-force subgraph matching for ground truth.
//!
//! Walks every injective map from pattern nodes to target nodes in
//! lexicographic order and checks all pattern arcs only once the map is
//! complete. Nothing here is shared with the solver's propagation code.

use thiserror::Error;

use crate::graph::DirectedGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_pattern_nodes: usize,
    pub max_target_nodes: usize,
    /// Upper bound on the number of complete injective maps visited.
    pub hard_step_limit: u64,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_pattern_nodes: 8,
            max_target_nodes: 16,
            hard_step_limit: 1_000_000_000,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("pattern has {0} nodes, above the oracle limit of {1}")]
    PatternTooLarge(usize, usize),
    #[error("target has {0} nodes, above the oracle limit of {1}")]
    TargetTooLarge(usize, usize),
    #[error("{0} injective maps exceed the step limit of {1}")]
    StepLimit(u128, u64),
}

/// Number of injective maps from `p` nodes to `t` nodes.
pub fn injective_map_count(p: usize, t: usize) -> u128 {
    if p > t {
        return 0;
    }
    ((t - p + 1)..=t).map(|k| k as u128).product()
}

fn check_limits(pattern: &DirectedGraph, target: &DirectedGraph, lim: &OracleLimits) -> Result<(), OracleError> {
    let (p, t) = (pattern.node_count(), target.node_count());
    if p > lim.max_pattern_nodes {
        return Err(OracleError::PatternTooLarge(p, lim.max_pattern_nodes));
    }
    if t > lim.max_target_nodes {
        return Err(OracleError::TargetTooLarge(t, lim.max_target_nodes));
    }
    let maps = injective_map_count(p, t);
    if maps > lim.hard_step_limit as u128 {
        return Err(OracleError::StepLimit(maps, lim.hard_step_limit));
    }
    Ok(())
}

fn walk<F: FnMut(&[usize])>(
    pattern_arcs: &[(usize, usize)],
    target: &DirectedGraph,
    map: &mut Vec<usize>,
    used: &mut [bool],
    p: usize,
    visit: &mut F,
) {
    if map.len() == p {
        if pattern_arcs.iter().all(|&(i, j)| target.has_arc(map[i], map[j])) {
            visit(map);
        }
        return;
    }
    for v in 0..target.node_count() {
        if used[v] {
            continue;
        }
        used[v] = true;
        map.push(v);
        walk(pattern_arcs, target, map, used, p, visit);
        map.pop();
        used[v] = false;
    }
}

fn for_each_match<F: FnMut(&[usize])>(pattern: &DirectedGraph, target: &DirectedGraph, mut visit: F) {
    let arcs: Vec<(usize, usize)> = pattern.arcs().collect();
    let mut map = Vec::with_capacity(pattern.node_count());
    let mut used = vec![false; target.node_count()];
    walk(&arcs, target, &mut map, &mut used, pattern.node_count(), &mut visit);
}

/// Exact number of subgraph isomorphisms from `pattern` into `target`.
pub fn brute_force_count(
    pattern: &DirectedGraph,
    target: &DirectedGraph,
    lim: &OracleLimits,
) -> Result<u64, OracleError> {
    check_limits(pattern, target, lim)?;
    let mut count = 0u64;
    for_each_match(pattern, target, |_| count += 1);
    Ok(count)
}

/// All matches as pattern-indexed target node lists, in lexicographic order.
pub fn brute_force_solutions(
    pattern: &DirectedGraph,
    target: &DirectedGraph,
    lim: &OracleLimits,
) -> Result<Vec<Vec<usize>>, OracleError> {
    check_limits(pattern, target, lim)?;
    let mut out = Vec::new();
    for_each_match(pattern, target, |m| out.push(m.to_vec()));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: usize, arcs: &[(usize, usize)]) -> DirectedGraph {
        DirectedGraph::from_arcs(n, arcs.iter().copied()).unwrap()
    }

    #[test]
    fn small_counts() {
        let lim = OracleLimits::default();
        assert_eq!(brute_force_count(&g(1, &[]), &g(7, &[]), &lim), Ok(7));
        let c3 = g(3, &[(0, 1), (1, 2), (2, 0)]);
        assert_eq!(brute_force_count(&g(2, &[(0, 1)]), &c3, &lim), Ok(3));
        assert_eq!(brute_force_count(&c3, &c3, &lim), Ok(3));
        assert_eq!(brute_force_count(&g(4, &[]), &c3, &lim), Ok(0));
    }

    #[test]
    fn solutions_are_lexicographic() {
        let c3 = g(3, &[(0, 1), (1, 2), (2, 0)]);
        let sols = brute_force_solutions(&g(2, &[(0, 1)]), &c3, &OracleLimits::default()).unwrap();
        assert_eq!(sols, vec![vec![0, 1], vec![1, 2], vec![2, 0]]);
    }

    #[test]
    fn limits_refuse() {
        let lim = OracleLimits::default();
        assert_eq!(
            brute_force_count(&g(9, &[]), &g(10, &[]), &lim),
            Err(OracleError::PatternTooLarge(9, 8))
        );
        assert_eq!(
            brute_force_count(&g(2, &[]), &g(17, &[]), &lim),
            Err(OracleError::TargetTooLarge(17, 16))
        );
        let tight = OracleLimits {
            hard_step_limit: 10,
            ..lim
        };
        assert_eq!(
            brute_force_count(&g(2, &[]), &g(4, &[]), &tight),
            Err(OracleError::StepLimit(12, 10))
        );
        assert_eq!(injective_map_count(8, 16), 518_918_400);
    }
}
