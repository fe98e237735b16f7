// Shared fixtures for the integration tests. Each test binary uses a subset.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sipdec::generators::{extract_connected_pattern, random_connected_digraph};
use sipdec::graph::UndirectedView;
use sipdec::{DirectedGraph, SipInstance};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const ETAS: [f64; 3] = [0.1, 0.2, 0.3];

/// Small random instance: pattern of `2..=8` nodes, target of `4..=16`.
/// Even seeds embed the pattern in the target, odd seeds draw it independently.
pub fn small_instance(seed: u64) -> SipInstance {
    let mut r = rng(seed);
    let eta = ETAS[r.gen_range(0..ETAS.len())];
    let p = r.gen_range(2..=8);
    let t = r.gen_range(p.max(4)..=16);
    let target = random_connected_digraph(t, eta, &mut r);
    let pattern = if seed.is_multiple_of(2) {
        extract_connected_pattern(&target, p, &mut r).0
    } else {
        random_connected_digraph(p, eta, &mut r)
    };
    SipInstance::new(pattern, target).unwrap()
}

/// Disjoint union of graphs; node ids of later graphs are shifted.
pub fn disjoint_union(parts: &[&DirectedGraph]) -> DirectedGraph {
    let n = parts.iter().map(|g| g.node_count()).sum();
    let mut g = DirectedGraph::new(n);
    let mut off = 0;
    for p in parts {
        for (u, v) in p.arcs() {
            g.add_arc(u + off, v + off).unwrap();
        }
        off += p.node_count();
    }
    g
}

/// Two-component pattern mapped into a target made of two clusters joined by
/// one bridge arc. Each pattern component is cut from its own cluster.
pub fn two_cluster_instance(seed: u64) -> SipInstance {
    let mut r = rng(seed);
    let eta = ETAS[r.gen_range(0..ETAS.len())];
    let a = random_connected_digraph(r.gen_range(5..=8), eta.max(0.2), &mut r);
    let b = random_connected_digraph(r.gen_range(5..=8), eta.max(0.2), &mut r);
    let (pa, _) = extract_connected_pattern(&a, r.gen_range(2..=4), &mut r);
    let (pb, _) = extract_connected_pattern(&b, r.gen_range(2..=4), &mut r);
    let mut target = disjoint_union(&[&a, &b]);
    let u = r.gen_range(0..a.node_count());
    let v = a.node_count() + r.gen_range(0..b.node_count());
    if r.gen_bool(0.5) {
        target.add_arc(u, v).unwrap();
    } else {
        target.add_arc(v, u).unwrap();
    }
    let pattern = disjoint_union(&[&pa, &pb]);
    // shuffle pattern labels so the components interleave
    let mut perm: Vec<usize> = (0..pattern.node_count()).collect();
    perm.shuffle(&mut r);
    SipInstance::new(pattern.relabel(&perm).unwrap(), target).unwrap()
}

/// Random pattern for heuristic tests; not necessarily connected.
pub fn random_pattern(seed: u64, max_nodes: usize) -> DirectedGraph {
    let mut r = rng(seed);
    let n = r.gen_range(1..=max_nodes);
    let p: f64 = [0.05, 0.1, 0.2, 0.35, 0.6][r.gen_range(0..5)];
    let mut g = DirectedGraph::new(n);
    for u in 0..n {
        for v in 0..n {
            if u != v && r.gen_bool(p) {
                g.add_arc(u, v).unwrap();
            }
        }
    }
    g
}

/// 2-core by repeated full scans until nothing changes.
pub fn two_core_fixpoint(g: &UndirectedView) -> Vec<usize> {
    let n = g.node_count();
    let mut alive = vec![true; n];
    loop {
        let doomed: Vec<usize> = (0..n)
            .filter(|&u| alive[u] && g.neighbors(u).iter().filter(|&&v| alive[v]).count() < 2)
            .collect();
        if doomed.is_empty() {
            return (0..n).filter(|&u| alive[u]).collect();
        }
        for u in doomed {
            alive[u] = false;
        }
    }
}

/// Acyclicity by union-find over the edges among `keep`.
pub fn is_forest(g: &UndirectedView, keep: &[bool]) -> bool {
    let mut parent: Vec<usize> = (0..g.node_count()).collect();
    fn root(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            x = p[x];
        }
        x
    }
    for (u, v) in g.edges() {
        if keep[u] && keep[v] {
            let (a, b) = (root(&mut parent, u), root(&mut parent, v));
            if a == b {
                return false;
            }
            parent[a] = b;
        }
    }
    true
}

/// Minimum edgecut over all balanced 2-partitions, by enumeration.
pub fn exhaustive_min_edgecut(g: &UndirectedView, balanced: impl Fn(usize) -> bool) -> Option<usize> {
    let n = g.node_count();
    assert!(n <= 20);
    let edges: Vec<(usize, usize)> = g.edges().collect();
    (0u32..1 << n)
        .filter(|mask| balanced(mask.count_ones() as usize))
        .map(|mask| {
            edges
                .iter()
                .filter(|&&(u, v)| (mask >> u & 1) != (mask >> v & 1))
                .count()
        })
        .min()
}

pub fn complete_graph(n: usize) -> DirectedGraph {
    let mut g = DirectedGraph::new(n);
    for u in 0..n {
        for v in 0..n {
            if u != v {
                g.add_arc(u, v).unwrap();
            }
        }
    }
    g
}
