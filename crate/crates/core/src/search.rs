//! Depth-first search for the five solver models.
//!
//! `cpfc` and `cpac` are plain chronological backtracking. The decomposing
//! models run in two phases: a cheap forward-checking phase that instantiates
//! the heuristic body variables with a smallest-domain policy, followed, below
//! the switch point, by a fully arc-consistent phase that looks for an
//! independent split at every node and solves the groups separately.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use fixedbitset::FixedBitSet;
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decomposition::{combine_solutions, detect_decomposition, DecompositionSplit, PartialSolution};
use crate::heuristics::{cycle_heuristic, partition_heuristic, select_variable, PartitionConfig, SelectionPolicy};
use crate::model::{assign, propagate, Consistency, InitOptions, SearchState, SipInstance};

/// How often (in search nodes) the wall-clock deadline is polled.
const DEADLINE_POLL_MASK: u64 = (1 << 12) - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    #[serde(rename = "cpfc")]
    Cpfc,
    #[serde(rename = "cpac")]
    Cpac,
    #[serde(rename = "dec")]
    Dec,
    #[serde(rename = "dec-h1")]
    DecH1,
    #[serde(rename = "dec-h2")]
    DecH2,
}

impl Model {
    pub const ALL: [Model; 5] = [Model::Cpfc, Model::Cpac, Model::Dec, Model::DecH1, Model::DecH2];

    pub fn name(self) -> &'static str {
        match self {
            Model::Cpfc => "cpfc",
            Model::Cpac => "cpac",
            Model::Dec => "dec",
            Model::DecH1 => "dec-h1",
            Model::DecH2 => "dec-h2",
        }
    }

    pub fn is_decomposing(self) -> bool {
        matches!(self, Model::Dec | Model::DecH1 | Model::DecH2)
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown model `{0}` (expected cpfc, cpac, dec, dec-h1 or dec-h2)")]
pub struct UnknownModel(String);

impl FromStr for Model {
    type Err = UnknownModel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "cpfc" => Ok(Model::Cpfc),
            "cpac" => Ok(Model::Cpac),
            "dec" | "cp+dec" => Ok(Model::Dec),
            "dec-h1" | "cp+dec+h1" => Ok(Model::DecH1),
            "dec-h2" | "cp+dec+h2" => Ok(Model::DecH2),
            _ => Err(UnknownModel(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    /// Stop at the first solution.
    First,
    #[default]
    CountAll,
    /// Count and materialize every solution.
    EnumerateAll,
}

/// Owned counterpart of [`SelectionPolicy`] for configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariablePolicy {
    MaxCstr,
    MinSize,
}

impl VariablePolicy {
    fn as_selection(self) -> SelectionPolicy<'static> {
        match self {
            VariablePolicy::MaxCstr => SelectionPolicy::MaxCstr,
            VariablePolicy::MinSize => SelectionPolicy::MinSize,
        }
    }
}

/// When the heuristic models leave the forward-checking phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SwitchRule {
    /// Switch once the body set is assigned or the cap is reached, whichever
    /// comes first; if the body set is every variable and exceeds the cap,
    /// never switch (the run is forward checking with smallest-domain order).
    #[default]
    FirstOrCapUnlessFull,
    /// Switch once the body set is assigned or the cap is reached, always.
    FirstOrCap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub model: Model,
    /// Fraction of pattern variables assigned before the decomposing phase starts.
    pub switch_fraction: f64,
    pub switch_rule: SwitchRule,
    pub search_mode: SearchMode,
    pub time_limit: Option<Duration>,
    pub node_limit: Option<u64>,
    pub seed: u64,
    /// Replaces maxcstr in `cpfc`/`cpac`.
    pub selection_override: Option<VariablePolicy>,
    /// `cpac` only: enforce AC after every assignment (otherwise only at the root).
    pub ac_every_node: bool,
    /// Setting this to false turns decomposition checks off in every phase.
    pub decomposition_checks: bool,
    /// Re-solve every split subtree without decomposition and compare counts.
    pub verify_splits: bool,
    pub degree_filter: bool,
    pub partition: PartitionConfig,
    /// Record every attempted `(variable, value)` decision.
    pub record_trace: bool,
}

impl ModelConfig {
    pub fn new(model: Model) -> Self {
        ModelConfig {
            model,
            switch_fraction: 0.30,
            switch_rule: SwitchRule::default(),
            search_mode: SearchMode::CountAll,
            time_limit: None,
            node_limit: None,
            seed: 0,
            selection_override: None,
            ac_every_node: true,
            decomposition_checks: true,
            verify_splits: false,
            degree_filter: false,
            partition: PartitionConfig::default(),
            record_trace: false,
        }
    }

    pub fn with_mode(mut self, mode: SearchMode) -> Self {
        self.search_mode = mode;
        self
    }

    pub fn with_time_limit(mut self, limit: Duration) -> Self {
        self.time_limit = Some(limit);
        self
    }

    /// Number of assigned variables at which phase two starts.
    pub fn switch_cap(&self, variables: usize) -> usize {
        assert!(
            self.switch_fraction > 0.0 && self.switch_fraction <= 1.0,
            "switch fraction must lie in (0, 1]"
        );
        ((self.switch_fraction * variables as f64).ceil() as usize).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Solved,
    Timeout,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: Status,
    /// Exact when solved; a lower bound when timed out.
    pub solution_count: BigUint,
    pub elapsed: Duration,
    pub search_nodes: u64,
    pub decomposition_events: u64,
    pub used_decomposition: bool,
    pub heuristic_fraction: f64,
    /// Decision depth at which phase two was first entered.
    pub phase_switch_depth: Option<usize>,
    /// Full assignments (pattern node -> target node), enumerate mode only.
    pub solutions: Option<Vec<Vec<usize>>>,
    pub trace: Option<Vec<(usize, usize)>>,
    pub split_checks: u64,
    pub split_mismatches: u64,
}

impl SolveResult {
    pub fn is_exact(&self) -> bool {
        self.status == Status::Solved
    }

    pub fn count_u64(&self) -> Option<u64> {
        self.solution_count.to_u64()
    }
}

/// Search budget ran out.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("search budget exhausted")]
pub struct Interrupted {
    /// Solutions fully accounted for before the interruption.
    pub partial: BigUint,
}

#[derive(Debug, Clone, Default)]
struct Tally {
    count: BigUint,
    solutions: Vec<PartialSolution>,
}

impl Tally {
    fn absorb(&mut self, other: Tally) {
        self.count += other.count;
        self.solutions.extend(other.solutions);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stage {
    Plain,
    Phase1 { early: bool },
    Phase2,
}

struct Solver<'a> {
    inst: &'a SipInstance,
    cfg: &'a ModelConfig,
    state: SearchState,
    body: FixedBitSet,
    cap: usize,
    never_switch: bool,
    nodes: u64,
    events: u64,
    switch_depth: Option<usize>,
    shadow_depth: usize,
    split_checks: u64,
    split_mismatches: u64,
    deadline: Option<Instant>,
    trace: Option<Vec<(usize, usize)>>,
}

impl<'a> Solver<'a> {
    fn new(inst: &'a SipInstance, cfg: &'a ModelConfig, state: SearchState, start: Instant) -> Self {
        let n = inst.variable_count();
        Solver {
            inst,
            cfg,
            state,
            body: FixedBitSet::with_capacity(n),
            cap: cfg.switch_cap(n),
            never_switch: false,
            nodes: 0,
            events: 0,
            switch_depth: None,
            shadow_depth: 0,
            split_checks: 0,
            split_mismatches: 0,
            deadline: cfg.time_limit.map(|d| start + d),
            trace: cfg.record_trace.then(Vec::new),
        }
    }

    fn first_only(&self) -> bool {
        self.cfg.search_mode == SearchMode::First
    }

    fn enumerating(&self) -> bool {
        self.cfg.search_mode == SearchMode::EnumerateAll
    }

    fn decompose_enabled(&self) -> bool {
        self.cfg.decomposition_checks && self.shadow_depth == 0
    }

    fn tick(&mut self) -> Result<(), Interrupted> {
        self.nodes += 1;
        let over_nodes = self.cfg.node_limit.is_some_and(|l| self.nodes > l);
        let over_time = self.nodes & DEADLINE_POLL_MASK == 0
            && self.deadline.is_some_and(|d| Instant::now() >= d);
        if over_nodes || over_time {
            Err(Interrupted {
                partial: BigUint::zero(),
            })
        } else {
            Ok(())
        }
    }

    fn plain_level(&self) -> Consistency {
        match self.cfg.model {
            Model::Cpac if self.cfg.ac_every_node => Consistency::Arc,
            _ => Consistency::Forward,
        }
    }

    fn should_switch(&self) -> bool {
        if self.never_switch {
            return false;
        }
        let assigned = self.state.assigned_count();
        if assigned >= self.cap {
            return true;
        }
        self.cfg.model != Model::Dec && self.body.ones().all(|x| self.state.is_assigned(x))
    }

    /// Phase one ends early once assigning a body variable already splits M.
    fn early_trigger(&self, x: usize) -> bool {
        !self.never_switch
            && self.cfg.model != Model::Dec
            && self.decompose_enabled()
            && self.body.contains(x)
            && detect_decomposition(self.inst, &self.state, None).is_some()
    }

    fn scope_done(&self, scope: Option<&FixedBitSet>) -> bool {
        match scope {
            None => self.state.all_assigned(),
            Some(s) => s.ones().all(|x| self.state.is_assigned(x)),
        }
    }

    fn leaf(&self, scope: Option<&FixedBitSet>) -> Tally {
        let solutions = if self.enumerating() {
            let vars: Vec<usize> = match scope {
                None => (0..self.state.variable_count()).collect(),
                Some(s) => s.ones().collect(),
            };
            vec![vars
                .into_iter()
                .map(|x| (x, self.state.domain(x).value().expect("assigned")))
                .collect()]
        } else {
            Vec::new()
        };
        Tally {
            count: BigUint::one(),
            solutions,
        }
    }

    fn enter_phase2(&mut self, depth: usize) -> Result<Tally, Interrupted> {
        if self.switch_depth.is_none() {
            self.switch_depth = Some(depth);
        }
        self.state.schedule_all();
        if propagate(self.inst, &mut self.state, Consistency::Arc).is_err() {
            return Ok(Tally::default());
        }
        self.dfs(Stage::Phase2, None, depth)
    }

    fn dfs(&mut self, stage: Stage, scope: Option<&FixedBitSet>, depth: usize) -> Result<Tally, Interrupted> {
        match stage {
            Stage::Phase1 { early } if early || self.should_switch() => {
                return self.enter_phase2(depth);
            }
            Stage::Phase2 if self.decompose_enabled() => {
                if let Some(split) = detect_decomposition(self.inst, &self.state, scope) {
                    return self.solve_split(&split, scope, depth);
                }
            }
            _ => {}
        }
        if self.scope_done(scope) {
            return Ok(self.leaf(scope));
        }

        let (x, level) = match stage {
            Stage::Plain => {
                let policy = self
                    .cfg
                    .selection_override
                    .unwrap_or(VariablePolicy::MaxCstr)
                    .as_selection();
                (select_variable(self.inst, &self.state, policy, scope), self.plain_level())
            }
            Stage::Phase1 { .. } => {
                let candidates = (self.cfg.model != Model::Dec).then_some(&self.body);
                (
                    select_variable(self.inst, &self.state, SelectionPolicy::MinSize, candidates),
                    Consistency::Forward,
                )
            }
            Stage::Phase2 => (
                select_variable(self.inst, &self.state, SelectionPolicy::MaxCstr, scope),
                Consistency::Arc,
            ),
        };
        let x = x.expect("an unassigned variable remains in scope");

        let values: Vec<usize> = self.state.domain(x).iter().collect();
        let mut acc = Tally::default();
        for v in values {
            if let Err(mut e) = self.tick() {
                e.partial += &acc.count;
                return Err(e);
            }
            if self.shadow_depth == 0 {
                if let Some(t) = self.trace.as_mut() {
                    t.push((x, v));
                }
            }
            let mark = self.state.checkpoint();
            let child = if assign(self.inst, &mut self.state, x, v, level).is_ok() {
                let next = match stage {
                    Stage::Phase1 { .. } => Stage::Phase1 {
                        early: self.early_trigger(x),
                    },
                    s => s,
                };
                self.dfs(next, scope, depth + 1)
            } else {
                Ok(Tally::default())
            };
            self.state.restore(mark);
            match child {
                Ok(t) => acc.absorb(t),
                Err(mut e) => {
                    e.partial += &acc.count;
                    return Err(e);
                }
            }
            if self.first_only() && !acc.count.is_zero() {
                break;
            }
        }
        Ok(acc)
    }

    fn solve_split(
        &mut self,
        split: &DecompositionSplit,
        scope: Option<&FixedBitSet>,
        depth: usize,
    ) -> Result<Tally, Interrupted> {
        self.events += 1;
        let n = self.state.variable_count();
        let mut group_tallies = Vec::with_capacity(split.groups.len());
        let mut total = BigUint::one();
        for group in &split.groups {
            let mut gscope = FixedBitSet::with_capacity(n);
            for &x in group {
                gscope.insert(x);
            }
            let mark = self.state.checkpoint();
            let res = self.dfs(Stage::Phase2, Some(&gscope), depth);
            self.state.restore(mark);
            // a partial group count says nothing about the product
            let t = res.map_err(|_| Interrupted {
                partial: BigUint::zero(),
            })?;
            if t.count.is_zero() {
                total = BigUint::zero();
                group_tallies.clear();
                break;
            }
            total *= &t.count;
            group_tallies.push(t.solutions);
        }

        if self.cfg.verify_splits {
            self.shadow_check(scope, depth, &total)?;
        }

        let solutions = if self.enumerating() && !total.is_zero() {
            let shared: PartialSolution = split
                .shared_assigned
                .iter()
                .map(|&x| (x, self.state.domain(x).value().expect("assigned")))
                .collect();
            combine_solutions(&shared, &group_tallies)
        } else {
            Vec::new()
        };
        Ok(Tally {
            count: total,
            solutions,
        })
    }

    /// Solves the same subtree again with decomposition disabled.
    fn shadow_check(&mut self, scope: Option<&FixedBitSet>, depth: usize, expected: &BigUint) -> Result<(), Interrupted> {
        let saved_nodes = self.nodes;
        self.shadow_depth += 1;
        let mark = self.state.checkpoint();
        let direct = self.dfs(Stage::Phase2, scope, depth);
        self.state.restore(mark);
        self.shadow_depth -= 1;
        self.nodes = saved_nodes;
        let direct = direct.map_err(|_| Interrupted {
            partial: BigUint::zero(),
        })?;
        self.split_checks += 1;
        if &direct.count != expected {
            self.split_mismatches += 1;
        }
        Ok(())
    }
}

/// Body set and its fraction for the configured model.
pub fn heuristic_set(inst: &SipInstance, cfg: &ModelConfig) -> (Vec<usize>, f64) {
    match cfg.model {
        Model::DecH1 => {
            let r = cycle_heuristic(inst.pattern_view());
            (r.body_vars, r.fraction)
        }
        Model::DecH2 => {
            let r = partition_heuristic(inst.pattern_view(), cfg.seed, &cfg.partition);
            (r.body_vars, r.fraction)
        }
        _ => (Vec::new(), 0.0),
    }
}

/// Solves `inst` with the configured model.
pub fn solve(inst: &SipInstance, cfg: &ModelConfig) -> SolveResult {
    let start = Instant::now();
    let n = inst.variable_count();
    let mut state = SearchState::new(
        inst,
        InitOptions {
            degree_filter: cfg.degree_filter,
        },
    );
    let root_level = if cfg.model == Model::Cpac {
        state.schedule_all();
        Consistency::Arc
    } else {
        Consistency::Forward
    };
    let root_ok = propagate(inst, &mut state, root_level).is_ok();

    let (body, fraction) = heuristic_set(inst, cfg);
    let mut solver = Solver::new(inst, cfg, state, start);
    for &x in &body {
        solver.body.insert(x);
    }
    solver.never_switch = cfg.switch_rule == SwitchRule::FirstOrCapUnlessFull
        && matches!(cfg.model, Model::DecH1 | Model::DecH2)
        && body.len() == n
        && body.len() > solver.cap;

    let outcome = if !root_ok {
        Ok(Tally::default())
    } else if cfg.model.is_decomposing() {
        solver.dfs(Stage::Phase1 { early: false }, None, 0)
    } else {
        solver.dfs(Stage::Plain, None, 0)
    };

    let (status, count, solutions) = match outcome {
        Ok(t) => {
            let sols = solver.enumerating().then(|| {
                let mut all: Vec<Vec<usize>> = t
                    .solutions
                    .into_iter()
                    .map(|mut pairs| {
                        pairs.sort_unstable();
                        pairs.into_iter().map(|(_, v)| v).collect()
                    })
                    .collect();
                all.sort_unstable();
                all
            });
            (Status::Solved, t.count, sols)
        }
        Err(e) => (Status::Timeout, e.partial, None),
    };
    SolveResult {
        status,
        solution_count: count,
        elapsed: start.elapsed(),
        search_nodes: solver.nodes,
        decomposition_events: solver.events,
        used_decomposition: solver.events > 0,
        heuristic_fraction: fraction,
        phase_switch_depth: solver.switch_depth,
        solutions,
        trace: solver.trace,
        split_checks: solver.split_checks,
        split_mismatches: solver.split_mismatches,
    }
}

/// Outcome of solving the groups of a split independently.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitOutcome {
    pub group_counts: Vec<BigUint>,
    pub combined: BigUint,
}

/// Solves each group of `split` on its own (arc-consistent, maxcstr) and
/// multiplies the counts. Stops at the first empty group.
pub fn solve_split(
    inst: &SipInstance,
    state: &SearchState,
    split: &DecompositionSplit,
    cfg: &ModelConfig,
) -> Result<SplitOutcome, Interrupted> {
    let mut group_counts = Vec::with_capacity(split.groups.len());
    let mut combined = BigUint::one();
    for group in &split.groups {
        let c = count_solutions_subtree(inst, state, group, cfg)?;
        let empty = c.is_zero();
        combined *= &c;
        group_counts.push(c);
        if empty {
            break;
        }
    }
    Ok(SplitOutcome {
        group_counts,
        combined,
    })
}

/// Counts the ways to extend `state` over exactly the variables `vars`,
/// using the decomposing arc-consistent search.
pub fn count_solutions_subtree(
    inst: &SipInstance,
    state: &SearchState,
    vars: &[usize],
    cfg: &ModelConfig,
) -> Result<BigUint, Interrupted> {
    let mut scope = FixedBitSet::with_capacity(inst.variable_count());
    for &x in vars {
        scope.insert(x);
    }
    let mut cfg = cfg.clone();
    cfg.search_mode = SearchMode::CountAll;
    let mut solver = Solver::new(inst, &cfg, state.clone(), Instant::now());
    solver.state.schedule_all();
    if propagate(inst, &mut solver.state, Consistency::Arc).is_err() {
        return Ok(BigUint::zero());
    }
    solver.dfs(Stage::Phase2, Some(&scope), 0).map(|t| t.count)
}
