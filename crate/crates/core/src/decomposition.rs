//! Detecting when the residual network falls apart into independent pieces.
//!
//! Assigned variables are dropped from the morphism constraint graph. If the
//! remaining graph has several components whose candidate value sets do not
//! overlap, each component can be solved on its own and the counts multiplied.

use fixedbitset::FixedBitSet;
use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::graph::{connected_components, DisjointSets, GraphError, UndirectedView};
use crate::model::{SearchState, SipInstance};

/// The morphism constraint graph restricted to unassigned variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedGraph {
    pub active: FixedBitSet,
    pub edges: Vec<(usize, usize)>,
}

impl ReducedGraph {
    pub fn is_empty(&self) -> bool {
        self.active.is_clear()
    }

    pub fn components(&self, view: &UndirectedView) -> Vec<Vec<usize>> {
        connected_components(view, &self.active)
    }
}

/// A set of independent variable groups sharing only assigned variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecompositionSplit {
    pub groups: Vec<Vec<usize>>,
    pub shared_assigned: Vec<usize>,
}

fn unassigned_in_scope(state: &SearchState, scope: Option<&FixedBitSet>) -> FixedBitSet {
    let n = state.variable_count();
    let mut active = FixedBitSet::with_capacity(n);
    for x in 0..n {
        if scope.is_none_or(|s| s.contains(x)) && state.domain(x).len() > 1 {
            active.insert(x);
        }
    }
    active
}

/// Builds M. With `scope`, only variables in the scope are considered.
pub fn build_reduced_graph(
    inst: &SipInstance,
    state: &SearchState,
    scope: Option<&FixedBitSet>,
) -> ReducedGraph {
    let active = unassigned_in_scope(state, scope);
    let view = inst.pattern_view();
    let edges = active
        .ones()
        .flat_map(|u| {
            let active = &active;
            view.neighbors(u)
                .iter()
                .filter(move |&&v| v > u && active.contains(v))
                .map(move |&v| (u, v))
        })
        .collect::<Vec<_>>();
    ReducedGraph { active, edges }
}

/// Splits the unassigned variables (within `scope`) into independent groups.
///
/// Components of M whose domain unions overlap are merged; a split is
/// returned only when at least two groups remain.
pub fn detect_decomposition(
    inst: &SipInstance,
    state: &SearchState,
    scope: Option<&FixedBitSet>,
) -> Option<DecompositionSplit> {
    let active = unassigned_in_scope(state, scope);
    let components = connected_components(inst.pattern_view(), &active);
    if components.len() < 2 {
        return None;
    }

    let nt = inst.value_count();
    let mut owner = vec![usize::MAX; nt];
    let mut sets = DisjointSets::new(components.len());
    let mut union = FixedBitSet::with_capacity(nt);
    for (c, comp) in components.iter().enumerate() {
        union.clear();
        for &x in comp {
            union.union_with(state.domain(x).bits());
        }
        for v in union.ones() {
            if owner[v] == usize::MAX {
                owner[v] = c;
            } else {
                sets.union(owner[v], c);
            }
        }
    }

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut group_of_root = vec![usize::MAX; components.len()];
    for (c, comp) in components.into_iter().enumerate() {
        let r = sets.find(c);
        if group_of_root[r] == usize::MAX {
            group_of_root[r] = groups.len();
            groups.push(comp);
        } else {
            groups[group_of_root[r]].extend(comp);
        }
    }
    if groups.len() < 2 {
        return None;
    }
    for g in &mut groups {
        g.sort_unstable();
    }

    let shared_assigned: Vec<usize> = (0..state.variable_count())
        .filter(|&x| scope.is_none_or(|s| s.contains(x)) && state.is_assigned(x))
        .collect();

    // After alldiff forward checking, no open domain can still hold the value
    // of an assigned variable, so overlaps never arise through assigned values.
    debug_assert!((0..state.variable_count())
        .filter_map(|x| state.domain(x).value())
        .all(|v| owner[v] == usize::MAX));

    Some(DecompositionSplit {
        groups,
        shared_assigned,
    })
}

/// Product of independent group counts; zero as soon as one group is empty.
pub fn combine_counts<I>(counts: I) -> BigUint
where
    I: IntoIterator<Item = BigUint>,
{
    let mut total = BigUint::one();
    for c in counts {
        if c.is_zero() {
            return BigUint::zero();
        }
        total *= c;
    }
    total
}

/// A partial solution: `(variable, value)` pairs.
pub type PartialSolution = Vec<(usize, usize)>;

/// Every combination of one solution per group, each prefixed with `shared`.
pub fn combine_solutions(
    shared: &PartialSolution,
    groups: &[Vec<PartialSolution>],
) -> Vec<PartialSolution> {
    let mut acc: Vec<PartialSolution> = vec![shared.clone()];
    for group in groups {
        if group.is_empty() {
            return Vec::new();
        }
        let mut next = Vec::with_capacity(acc.len() * group.len());
        for prefix in &acc {
            for sol in group {
                let mut s = prefix.clone();
                s.extend_from_slice(sol);
                next.push(s);
            }
        }
        acc = next;
    }
    acc
}

/// A rooted DFS spanning tree; every non-tree edge joins a node to an ancestor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PseudoTree {
    pub root: usize,
    pub parent: Vec<Option<usize>>,
    pub order: Vec<usize>,
    entry: Vec<usize>,
    exit: Vec<usize>,
}

impl PseudoTree {
    pub fn children(&self, u: usize) -> Vec<usize> {
        self.order
            .iter()
            .copied()
            .filter(|&v| self.parent[v] == Some(u))
            .collect()
    }

    pub fn is_ancestor(&self, a: usize, b: usize) -> bool {
        self.entry[a] <= self.entry[b] && self.exit[b] <= self.exit[a]
    }

    /// True iff no node has more than one child.
    pub fn is_chain(&self) -> bool {
        let mut child_count = vec![0usize; self.parent.len()];
        for p in self.parent.iter().flatten() {
            child_count[*p] += 1;
            if child_count[*p] > 1 {
                return false;
            }
        }
        true
    }

    /// Checks that every edge of `g` lies on an ancestor/descendant pair.
    pub fn has_back_arc_property(&self, g: &UndirectedView) -> bool {
        g.edges()
            .all(|(u, v)| self.is_ancestor(u, v) || self.is_ancestor(v, u))
    }
}

/// Depth-first pseudo-tree of a connected graph, children visited in
/// ascending id order.
pub fn build_pseudo_tree(g: &UndirectedView, root: usize) -> Result<PseudoTree, GraphError> {
    let n = g.node_count();
    if root >= n {
        return Err(GraphError::NodeOutOfRange {
            id: root,
            node_count: n,
        });
    }
    let mut parent = vec![None; n];
    let mut entry = vec![usize::MAX; n];
    let mut exit = vec![0; n];
    let mut order = Vec::with_capacity(n);
    let mut clock = 0;
    let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
    entry[root] = clock;
    clock += 1;
    order.push(root);
    while let Some(top) = stack.last_mut() {
        let (u, next) = *top;
        if let Some(&v) = g.neighbors(u).get(next) {
            top.1 += 1;
            if entry[v] == usize::MAX {
                parent[v] = Some(u);
                entry[v] = clock;
                clock += 1;
                order.push(v);
                stack.push((v, 0));
            }
        } else {
            exit[u] = clock;
            clock += 1;
            stack.pop();
        }
    }
    if order.len() != n {
        return Err(GraphError::Disconnected);
    }
    let tree = PseudoTree {
        root,
        parent,
        order,
        entry,
        exit,
    };
    assert!(
        tree.has_back_arc_property(g),
        "depth-first tree violates the back-arc property"
    );
    Ok(tree)
}
