//! Subgraph isomorphism as a constraint network.
//!
//! One variable per pattern node, whose domain is a set of target nodes. The
//! morphism constraint is posted as one binary constraint per pattern arc and
//! injectivity as a forward-checked alldiff.

use std::collections::VecDeque;

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::graph::{DirectedGraph, UndirectedView};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("pattern graph has no nodes")]
    EmptyPattern,
    #[error("target graph has no nodes")]
    EmptyTarget,
}

/// A pattern graph to be embedded into a target graph.
#[derive(Debug, Clone)]
pub struct SipInstance {
    pattern: DirectedGraph,
    target: DirectedGraph,
    pattern_view: UndirectedView,
}

impl SipInstance {
    pub fn new(pattern: DirectedGraph, target: DirectedGraph) -> Result<Self, ModelError> {
        if pattern.node_count() == 0 {
            return Err(ModelError::EmptyPattern);
        }
        if target.node_count() == 0 {
            return Err(ModelError::EmptyTarget);
        }
        let pattern_view = pattern.undirected();
        Ok(SipInstance {
            pattern,
            target,
            pattern_view,
        })
    }

    pub fn pattern(&self) -> &DirectedGraph {
        &self.pattern
    }

    pub fn target(&self) -> &DirectedGraph {
        &self.target
    }

    /// Undirected constraint graph of the morphism constraints.
    pub fn pattern_view(&self) -> &UndirectedView {
        &self.pattern_view
    }

    pub fn variable_count(&self) -> usize {
        self.pattern.node_count()
    }

    pub fn value_count(&self) -> usize {
        self.target.node_count()
    }

    /// One morphism constraint per pattern arc.
    pub fn constraints(&self) -> impl Iterator<Item = MorphismConstraint> + '_ {
        self.pattern
            .arcs()
            .map(|(from, to)| MorphismConstraint { from, to })
    }

    /// Checks that `map` is an injective, arc-preserving map of pattern nodes.
    pub fn is_solution(&self, map: &[usize]) -> bool {
        if map.len() != self.variable_count() {
            return false;
        }
        let mut used = FixedBitSet::with_capacity(self.value_count());
        for &v in map {
            if v >= self.value_count() || used.contains(v) {
                return false;
            }
            used.insert(v);
        }
        self.pattern.arcs().all(|(i, j)| self.target.has_arc(map[i], map[j]))
    }
}

/// `(f(from), f(to))` must be a target arc.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MorphismConstraint {
    pub from: usize,
    pub to: usize,
}

/// A set of candidate target nodes with its cardinality cached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Domain {
    values: FixedBitSet,
    size: usize,
}

impl Domain {
    pub fn full(value_count: usize) -> Self {
        let mut values = FixedBitSet::with_capacity(value_count);
        values.insert_range(..);
        Domain {
            values,
            size: value_count,
        }
    }

    pub fn from_bits(values: FixedBitSet) -> Self {
        let size = values.count_ones(..);
        Domain { values, size }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    #[inline]
    pub fn is_assigned(&self) -> bool {
        self.size == 1
    }

    /// The single value of an assigned domain.
    pub fn value(&self) -> Option<usize> {
        if self.size == 1 {
            self.values.minimum()
        } else {
            None
        }
    }

    #[inline]
    pub fn contains(&self, v: usize) -> bool {
        self.values.contains(v)
    }

    pub fn bits(&self) -> &FixedBitSet {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.values.ones()
    }

    pub fn is_subset(&self, other: &Domain) -> bool {
        self.values.is_subset(&other.values)
    }
}

/// Raised when a domain wipes out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("domain of variable {var} became empty")]
pub struct Inconsistent {
    pub var: usize,
}

/// Strength at which the morphism constraints are propagated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Consistency {
    Forward,
    Arc,
}

/// Choice-point handle returned by [`SearchState::checkpoint`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mark {
    depth: usize,
    trail_len: usize,
    stamp: u64,
}

#[derive(Debug, Clone)]
struct TrailEntry {
    var: usize,
    old: Domain,
    old_stamp: u64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct InitOptions {
    /// Drop target nodes whose in/out degree is below the pattern node's.
    pub degree_filter: bool,
}

/// Domains of all pattern variables plus the undo trail and propagation queues.
#[derive(Debug, Clone)]
pub struct SearchState {
    domains: Vec<Domain>,
    assigned_count: usize,
    trail: Vec<TrailEntry>,
    stamps: Vec<u64>,
    marks: Vec<(usize, u64)>,
    next_stamp: u64,
    assigned_queue: Vec<usize>,
    changed_queue: VecDeque<usize>,
    in_changed: FixedBitSet,
    scratch: FixedBitSet,
}

impl SearchState {
    pub fn new(inst: &SipInstance, opts: InitOptions) -> Self {
        let nv = inst.variable_count();
        let nt = inst.value_count();
        let domains: Vec<Domain> = (0..nv)
            .map(|x| {
                if opts.degree_filter {
                    let p = inst.pattern();
                    let t = inst.target();
                    let mut bits = FixedBitSet::with_capacity(nt);
                    for v in 0..nt {
                        if t.out_degree(v) >= p.out_degree(x) && t.in_degree(v) >= p.in_degree(x) {
                            bits.insert(v);
                        }
                    }
                    Domain::from_bits(bits)
                } else {
                    Domain::full(nt)
                }
            })
            .collect();
        let assigned_queue: Vec<usize> = (0..nv).filter(|&x| domains[x].is_assigned()).collect();
        SearchState {
            assigned_count: assigned_queue.len(),
            domains,
            trail: Vec::new(),
            stamps: vec![0; nv],
            marks: Vec::new(),
            next_stamp: 1,
            assigned_queue,
            changed_queue: VecDeque::new(),
            in_changed: FixedBitSet::with_capacity(nv),
            scratch: FixedBitSet::with_capacity(nt),
        }
    }

    pub fn variable_count(&self) -> usize {
        self.domains.len()
    }

    #[inline]
    pub fn domain(&self, x: usize) -> &Domain {
        &self.domains[x]
    }

    pub fn domains(&self) -> &[Domain] {
        &self.domains
    }

    /// Number of variables whose domain is a singleton.
    #[inline]
    pub fn assigned_count(&self) -> usize {
        self.assigned_count
    }

    #[inline]
    pub fn is_assigned(&self, x: usize) -> bool {
        self.domains[x].is_assigned()
    }

    pub fn all_assigned(&self) -> bool {
        self.assigned_count == self.domains.len()
    }

    /// The full assignment, if every variable is fixed.
    pub fn assignment(&self) -> Option<Vec<usize>> {
        self.domains.iter().map(Domain::value).collect()
    }

    /// Depth of nested checkpoints currently open.
    pub fn checkpoint_depth(&self) -> usize {
        self.marks.len()
    }

    pub fn checkpoint(&mut self) -> Mark {
        let stamp = self.next_stamp;
        self.next_stamp += 1;
        self.marks.push((self.trail.len(), stamp));
        Mark {
            depth: self.marks.len() - 1,
            trail_len: self.trail.len(),
            stamp,
        }
    }

    /// Undoes every change made since `mark` and closes it.
    ///
    /// Panics if `mark` is not the innermost open checkpoint.
    pub fn restore(&mut self, mark: Mark) {
        assert!(
            self.marks.len() == mark.depth + 1
                && self.marks[mark.depth] == (mark.trail_len, mark.stamp),
            "restore called with a stale or out-of-order mark"
        );
        while self.trail.len() > mark.trail_len {
            let entry = self.trail.pop().expect("trail entry");
            let was = self.domains[entry.var].is_assigned();
            let now = entry.old.is_assigned();
            if was && !now {
                self.assigned_count -= 1;
            } else if !was && now {
                self.assigned_count += 1;
            }
            self.domains[entry.var] = entry.old;
            self.stamps[entry.var] = entry.old_stamp;
        }
        self.marks.pop();
        self.clear_queues();
    }

    fn current_stamp(&self) -> u64 {
        self.marks.last().map_or(0, |&(_, s)| s)
    }

    fn save(&mut self, x: usize) {
        let stamp = self.current_stamp();
        if stamp != 0 && self.stamps[x] != stamp {
            self.trail.push(TrailEntry {
                var: x,
                old: self.domains[x].clone(),
                old_stamp: self.stamps[x],
            });
            self.stamps[x] = stamp;
        }
    }

    fn after_change(&mut self, x: usize, old_size: usize) -> Result<(), Inconsistent> {
        let size = self.domains[x].values.count_ones(..);
        self.domains[x].size = size;
        if old_size == 1 && size != 1 {
            self.assigned_count -= 1;
        }
        if size == 0 {
            return Err(Inconsistent { var: x });
        }
        if size == 1 && old_size != 1 {
            self.assigned_count += 1;
            self.assigned_queue.push(x);
        }
        if !self.in_changed.contains(x) {
            self.in_changed.insert(x);
            self.changed_queue.push_back(x);
        }
        Ok(())
    }

    /// `D_x <- D_x ∩ mask`. Returns whether the domain shrank.
    pub fn intersect(&mut self, x: usize, mask: &FixedBitSet) -> Result<bool, Inconsistent> {
        if self.domains[x].values.is_subset(mask) {
            return Ok(false);
        }
        self.save(x);
        let old = self.domains[x].size;
        self.domains[x].values.intersect_with(mask);
        self.after_change(x, old)?;
        Ok(true)
    }

    /// Removes value `v` from `D_x`. Returns whether it was present.
    pub fn remove_value(&mut self, x: usize, v: usize) -> Result<bool, Inconsistent> {
        if !self.domains[x].values.contains(v) {
            return Ok(false);
        }
        self.save(x);
        let old = self.domains[x].size;
        self.domains[x].values.set(v, false);
        self.after_change(x, old)?;
        Ok(true)
    }

    /// Reduces `D_x` to `{v}` without propagating.
    pub fn fix(&mut self, x: usize, v: usize) -> Result<(), Inconsistent> {
        assert!(
            self.domains[x].contains(v),
            "value {v} not in domain of variable {x}"
        );
        if self.domains[x].size == 1 {
            return Ok(());
        }
        self.save(x);
        let old = self.domains[x].size;
        let d = &mut self.domains[x].values;
        d.clear();
        d.insert(v);
        self.after_change(x, old)
    }

    /// Queues every variable for arc revision.
    pub fn schedule_all(&mut self) {
        for x in 0..self.domains.len() {
            if !self.in_changed.contains(x) {
                self.in_changed.insert(x);
                self.changed_queue.push_back(x);
            }
        }
    }

    pub fn has_pending(&self) -> bool {
        !self.assigned_queue.is_empty() || !self.changed_queue.is_empty()
    }

    fn clear_queues(&mut self) {
        self.assigned_queue.clear();
        self.changed_queue.clear();
        self.in_changed.clear();
    }
}

/// Removes the value of assigned variable `x` from every other domain.
pub fn propagate_alldiff_fc(
    inst: &SipInstance,
    state: &mut SearchState,
    x: usize,
) -> Result<(), Inconsistent> {
    let v = state
        .domain(x)
        .value()
        .expect("alldiff forward checking needs an assigned variable");
    for y in 0..inst.variable_count() {
        if y != x {
            state.remove_value(y, v)?;
        }
    }
    Ok(())
}

/// Restricts the pattern neighbors of assigned variable `x` to the target
/// neighbors of its value.
pub fn propagate_mc_fc(
    inst: &SipInstance,
    state: &mut SearchState,
    x: usize,
) -> Result<(), Inconsistent> {
    let v = state
        .domain(x)
        .value()
        .expect("morphism forward checking needs an assigned variable");
    let target = inst.target();
    for &j in inst.pattern().successors(x) {
        state.intersect(j, target.successor_row(v))?;
    }
    for &j in inst.pattern().predecessors(x) {
        state.intersect(j, target.predecessor_row(v))?;
    }
    Ok(())
}

/// Keeps in `D_keep` only values with a support in `D_other`, where a
/// support for `u` is some `w` in `D_other` such that `(u, w)` is a target
/// arc (`forward`) or `(w, u)` is one (`!forward`).
fn revise(
    inst: &SipInstance,
    state: &mut SearchState,
    keep: usize,
    other: usize,
    forward: bool,
) -> Result<bool, Inconsistent> {
    let target = inst.target();
    let mut support = std::mem::take(&mut state.scratch);
    support.clear();
    let (dk, doth) = (&state.domains[keep], &state.domains[other]);
    if dk.len() <= doth.len() {
        for u in dk.values.ones() {
            let row = if forward {
                target.successor_row(u)
            } else {
                target.predecessor_row(u)
            };
            if !row.is_disjoint(&doth.values) {
                support.insert(u);
            }
        }
    } else {
        for w in doth.values.ones() {
            let row = if forward {
                target.predecessor_row(w)
            } else {
                target.successor_row(w)
            };
            support.union_with(row);
        }
    }
    let res = state.intersect(keep, &support);
    state.scratch = support;
    res
}

fn revise_neighbors(inst: &SipInstance, state: &mut SearchState, y: usize) -> Result<(), Inconsistent> {
    for &i in inst.pattern().predecessors(y) {
        revise(inst, state, i, y, true)?;
    }
    for &j in inst.pattern().successors(y) {
        revise(inst, state, j, y, false)?;
    }
    Ok(())
}

/// Runs queued work to a fixpoint: forward checking (alldiff and morphism)
/// for each newly assigned variable, then, at [`Consistency::Arc`], arc
/// revision around every changed variable.
pub fn propagate(
    inst: &SipInstance,
    state: &mut SearchState,
    level: Consistency,
) -> Result<(), Inconsistent> {
    let res = propagate_inner(inst, state, level);
    state.clear_queues();
    res
}

fn propagate_inner(
    inst: &SipInstance,
    state: &mut SearchState,
    level: Consistency,
) -> Result<(), Inconsistent> {
    loop {
        if let Some(x) = state.assigned_queue.pop() {
            propagate_alldiff_fc(inst, state, x)?;
            propagate_mc_fc(inst, state, x)?;
            continue;
        }
        if level == Consistency::Arc {
            if let Some(y) = state.changed_queue.pop_front() {
                state.in_changed.set(y, false);
                revise_neighbors(inst, state, y)?;
                continue;
            }
        }
        return Ok(());
    }
}

/// Enforces arc consistency on every morphism constraint (alldiff stays
/// forward checked).
pub fn propagate_mc_ac(inst: &SipInstance, state: &mut SearchState) -> Result<(), Inconsistent> {
    state.schedule_all();
    propagate(inst, state, Consistency::Arc)
}

/// Fixes `x := v` and propagates at `level`.
pub fn assign(
    inst: &SipInstance,
    state: &mut SearchState,
    x: usize,
    v: usize,
    level: Consistency,
) -> Result<(), Inconsistent> {
    let res = state.fix(x, v).and_then(|_| propagate(inst, state, level));
    if res.is_err() {
        state.clear_queues();
    }
    res
}
