//! Benchmark instance families: randomly connected digraphs and irregular
//! d-dimensional meshes, each with a pattern either extracted from the target
//! (satisfiable by construction) or generated independently.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{DirectedGraph, DisjointSets};
use crate::model::SipInstance;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("invalid generator parameter: {0}")]
    InvalidParam(String),
    #[error("cannot add {requested} extra arcs: only {available} non-adjacent pairs")]
    TooManyExtraArcs { requested: usize, available: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternMode {
    /// Random connected induced subgraph of the target.
    #[default]
    Embedded,
    /// Fresh graph drawn from the same family.
    Independent,
}

impl std::str::FromStr for PatternMode {
    type Err = GenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "embedded" => Ok(PatternMode::Embedded),
            "independent" => Ok(PatternMode::Independent),
            _ => Err(GenError::InvalidParam(format!("unknown pattern mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomParams {
    pub n: usize,
    pub eta: f64,
    pub alpha: f64,
    pub seed: u64,
    pub mode: PatternMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshParams {
    pub side: usize,
    pub dims: usize,
    pub rho: f64,
    pub alpha: f64,
    pub seed: u64,
    pub mode: PatternMode,
}

impl MeshParams {
    pub fn node_count(&self) -> usize {
        self.side.pow(self.dims as u32)
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub instance: SipInstance,
    /// Pattern node `i` maps to target node `witness[i]` (embedded mode only).
    pub witness: Option<Vec<usize>>,
}

/// `⌈alpha · n⌉`, clamped to `[1, n]`.
pub fn pattern_size(alpha: f64, n: usize) -> usize {
    ((alpha * n as f64).ceil() as usize).clamp(1, n.max(1))
}

fn check_alpha(alpha: f64) -> Result<(), GenError> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(GenError::InvalidParam(format!("alpha = {alpha} not in (0, 1]")))
    }
}

/// Adds arcs between random nodes of different undirected components until
/// the graph is connected.
pub fn connect<R: Rng>(g: &mut DirectedGraph, rng: &mut R) {
    let n = g.node_count();
    if n < 2 {
        return;
    }
    let mut sets = DisjointSets::new(n);
    let mut components = n;
    for (u, v) in g.arcs().collect::<Vec<_>>() {
        if sets.union(u, v) {
            components -= 1;
        }
    }
    while components > 1 {
        let u = rng.gen_range(0..n);
        let ru = sets.find(u);
        let v = loop {
            let v = rng.gen_range(0..n);
            if sets.find(v) != ru {
                break v;
            }
        };
        let (a, b) = if rng.gen_bool(0.5) { (u, v) } else { (v, u) };
        g.add_arc(a, b).expect("arc between components is new");
        sets.union(u, v);
        components -= 1;
    }
}

/// Each ordered pair gets an arc with probability `eta`; then connectivity is repaired.
pub fn random_connected_digraph<R: Rng>(n: usize, eta: f64, rng: &mut R) -> DirectedGraph {
    let mut g = DirectedGraph::new(n);
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.gen_bool(eta) {
                g.add_arc(u, v).expect("fresh arc");
            }
        }
    }
    connect(&mut g, rng);
    g
}

/// Random connected induced subgraph on `m` nodes, grown from a random seed
/// node by repeatedly adding a uniformly chosen frontier node. Pattern labels
/// are shuffled; the returned witness maps pattern nodes to target nodes.
pub fn extract_connected_pattern<R: Rng>(
    target: &DirectedGraph,
    m: usize,
    rng: &mut R,
) -> (DirectedGraph, Vec<usize>) {
    let n = target.node_count();
    assert!(m >= 1 && m <= n, "pattern size {m} out of range");
    let view = target.undirected();
    let mut in_set = vec![false; n];
    let mut in_frontier = vec![false; n];
    let mut frontier = Vec::new();
    let start = rng.gen_range(0..n);
    let mut chosen = vec![start];
    in_set[start] = true;
    let mut push_neighbors = |u: usize, frontier: &mut Vec<usize>, in_set: &[bool]| {
        for &v in view.neighbors(u) {
            if !in_set[v] && !in_frontier[v] {
                in_frontier[v] = true;
                frontier.push(v);
            }
        }
    };
    push_neighbors(start, &mut frontier, &in_set);
    while chosen.len() < m {
        assert!(!frontier.is_empty(), "target is not connected");
        let k = rng.gen_range(0..frontier.len());
        let u = frontier.swap_remove(k);
        in_set[u] = true;
        chosen.push(u);
        push_neighbors(u, &mut frontier, &in_set);
    }
    chosen.shuffle(rng);
    let mut pattern = DirectedGraph::new(m);
    for (i, &a) in chosen.iter().enumerate() {
        for (j, &b) in chosen.iter().enumerate() {
            if i != j && target.has_arc(a, b) {
                pattern.add_arc(i, j).expect("fresh arc");
            }
        }
    }
    (pattern, chosen)
}

fn make_pattern<R: Rng>(
    target: &DirectedGraph,
    m: usize,
    mode: PatternMode,
    rng: &mut R,
    independent: impl FnOnce(&mut R) -> DirectedGraph,
) -> (DirectedGraph, Option<Vec<usize>>) {
    match mode {
        PatternMode::Embedded => {
            let (p, w) = extract_connected_pattern(target, m, rng);
            (p, Some(w))
        }
        PatternMode::Independent => (independent(rng), None),
    }
}

/// Randomly connected digraph family.
pub fn gen_random(p: &RandomParams) -> Result<GeneratedInstance, GenError> {
    if p.n == 0 {
        return Err(GenError::InvalidParam("n must be positive".into()));
    }
    if !(p.eta > 0.0 && p.eta <= 1.0) {
        return Err(GenError::InvalidParam(format!("eta = {} not in (0, 1]", p.eta)));
    }
    check_alpha(p.alpha)?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let target = random_connected_digraph(p.n, p.eta, &mut rng);
    let m = pattern_size(p.alpha, p.n);
    let (pattern, witness) = make_pattern(&target, m, p.mode, &mut rng, |r| {
        random_connected_digraph(m, p.eta, r)
    });
    let instance = SipInstance::new(pattern, target).expect("non-empty graphs");
    Ok(GeneratedInstance { instance, witness })
}

/// Regular `dims`-dimensional grid with arcs both ways between neighbors.
pub fn regular_mesh(side: usize, dims: usize) -> DirectedGraph {
    let n = side.pow(dims as u32);
    let mut g = DirectedGraph::new(n);
    for u in 0..n {
        let mut stride = 1;
        for _ in 0..dims {
            let coord = (u / stride) % side;
            if coord + 1 < side {
                let v = u + stride;
                g.add_arc(u, v).expect("fresh arc");
                g.add_arc(v, u).expect("fresh arc");
            }
            stride *= side;
        }
    }
    g
}

/// Adds `extra` arcs between uniformly random non-adjacent node pairs.
fn add_random_arcs<R: Rng>(g: &mut DirectedGraph, extra: usize, rng: &mut R) -> Result<(), GenError> {
    let n = g.node_count();
    let edges = g.undirected().edge_count();
    let available = n * n.saturating_sub(1) / 2 - edges;
    if extra > available {
        return Err(GenError::TooManyExtraArcs {
            requested: extra,
            available,
        });
    }
    let mut added = 0;
    while added < extra {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u == v || g.has_arc(u, v) || g.has_arc(v, u) {
            continue;
        }
        g.add_arc(u, v).expect("fresh arc");
        added += 1;
    }
    Ok(())
}

fn irregular_mesh<R: Rng>(side: usize, dims: usize, rho: f64, rng: &mut R) -> Result<DirectedGraph, GenError> {
    let mut g = regular_mesh(side, dims);
    let extra = (rho * g.node_count() as f64).floor() as usize;
    add_random_arcs(&mut g, extra, rng)?;
    Ok(g)
}

/// Irregular mesh family.
pub fn gen_mesh(p: &MeshParams) -> Result<GeneratedInstance, GenError> {
    if p.side < 2 || p.dims < 2 {
        return Err(GenError::InvalidParam(format!(
            "mesh needs side >= 2 and dims >= 2 (got side {}, dims {})",
            p.side, p.dims
        )));
    }
    if p.rho.is_nan() || p.rho < 0.0 {
        return Err(GenError::InvalidParam(format!("rho = {} is negative", p.rho)));
    }
    check_alpha(p.alpha)?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let target = irregular_mesh(p.side, p.dims, p.rho, &mut rng)?;
    let m = pattern_size(p.alpha, target.node_count());
    let (pattern, witness) = match p.mode {
        PatternMode::Embedded => make_pattern(&target, m, p.mode, &mut rng, |_| unreachable!()),
        PatternMode::Independent => {
            // closest mesh of the same dimensionality with at least m nodes,
            // trimmed to a connected induced subgraph of size m
            let mut side: usize = 2;
            while side.pow(p.dims as u32) < m {
                side += 1;
            }
            let host = irregular_mesh(side, p.dims, p.rho, &mut rng)?;
            (extract_connected_pattern(&host, m, &mut rng).0, None)
        }
    };
    let instance = SipInstance::new(pattern, target).expect("non-empty graphs");
    Ok(GeneratedInstance { instance, witness })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::connected_components;

    fn is_connected(g: &DirectedGraph) -> bool {
        let v = g.undirected();
        connected_components(&v, &v.all_nodes()).len() <= 1
    }

    #[test]
    fn complete_when_eta_is_one() {
        let r = gen_random(&RandomParams {
            n: 6,
            eta: 1.0,
            alpha: 0.5,
            seed: 3,
            mode: PatternMode::Embedded,
        })
        .unwrap();
        assert_eq!(r.instance.target().arc_count(), 30);
        assert_eq!(r.instance.pattern().node_count(), 3);
        assert_eq!(r.instance.pattern().arc_count(), 6);
    }

    #[test]
    fn witness_is_an_embedding() {
        for seed in 0..20 {
            let r = gen_random(&RandomParams {
                n: 30,
                eta: 0.05,
                alpha: 0.3,
                seed,
                mode: PatternMode::Embedded,
            })
            .unwrap();
            let w = r.witness.unwrap();
            assert!(r.instance.is_solution(&w));
            assert!(is_connected(r.instance.target()));
            assert!(is_connected(r.instance.pattern()));
        }
    }

    #[test]
    fn independent_pattern_is_connected() {
        let r = gen_random(&RandomParams {
            n: 40,
            eta: 0.02,
            alpha: 0.2,
            seed: 9,
            mode: PatternMode::Independent,
        })
        .unwrap();
        assert!(r.witness.is_none());
        assert_eq!(r.instance.pattern().node_count(), 8);
        assert!(is_connected(r.instance.pattern()));
    }

    #[test]
    fn reproducible() {
        let p = RandomParams {
            n: 50,
            eta: 0.05,
            alpha: 0.2,
            seed: 11,
            mode: PatternMode::Embedded,
        };
        let a = gen_random(&p).unwrap();
        let b = gen_random(&p).unwrap();
        assert_eq!(a.instance.target(), b.instance.target());
        assert_eq!(a.instance.pattern(), b.instance.pattern());
        assert_eq!(a.witness, b.witness);
    }

    #[test]
    fn small_mesh_is_a_cycle() {
        let g = regular_mesh(2, 2);
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.arc_count(), 8);
        assert!(g.undirected().edges().count() == 4);
        assert!((0..4).all(|u| g.undirected().degree(u) == 2));
    }

    #[test]
    fn mesh_class_sizes() {
        let p = MeshParams {
            side: 5,
            dims: 4,
            rho: 0.6,
            alpha: 0.2,
            seed: 1,
            mode: PatternMode::Embedded,
        };
        let r = gen_mesh(&p).unwrap();
        let t = r.instance.target();
        assert_eq!(t.node_count(), 625);
        // 4 * 4 * 125 grid edges, each as two arcs, plus 375 single extra arcs
        assert_eq!(t.arc_count(), 2 * 4 * 4 * 125 + 375);
        assert_eq!(r.instance.pattern().node_count(), 125);
        assert!(r.instance.is_solution(&r.witness.unwrap()));
    }

    #[test]
    fn mesh_rejects_bad_params() {
        let mut p = MeshParams {
            side: 1,
            dims: 2,
            rho: 0.0,
            alpha: 0.5,
            seed: 0,
            mode: PatternMode::Embedded,
        };
        assert!(gen_mesh(&p).is_err());
        p.side = 2;
        p.rho = 5.0;
        assert!(matches!(gen_mesh(&p), Err(GenError::TooManyExtraArcs { .. })));
    }

    #[test]
    fn independent_mesh_pattern() {
        let r = gen_mesh(&MeshParams {
            side: 3,
            dims: 2,
            rho: 0.2,
            alpha: 0.5,
            seed: 2,
            mode: PatternMode::Independent,
        })
        .unwrap();
        assert_eq!(r.instance.pattern().node_count(), 5);
        assert!(is_connected(r.instance.pattern()));
    }
}
