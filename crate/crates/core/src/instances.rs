//! Host and target generators. Hosts are dense balanced bipartite graphs with
//! a guaranteed minimum degree; targets are bounded-degree balanced bipartite
//! graphs together with a vertex order of small bandwidth.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::bitset::BitSet;
use crate::exact::{rat, rat_usize, Rational};
use crate::graph::{BipartiteGraph, Side, VertexId};
use crate::regularity::ClusterPartition;
use crate::seed::rng_for;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InstanceError {
    #[error("gamma = {0} must lie in [0, 1/2)")]
    BadGamma(String),
    #[error("invalid instance parameters: {0}")]
    Invalid(String),
}

/// Independent edges with probability `p` (clamped to `[0, 1]`).
pub fn random_bipartite(n_a: usize, n_b: usize, p: f64, seed: u64) -> BipartiteGraph {
    let mut rng = rng_for(seed, &[0xB1]);
    let p = p.clamp(0.0, 1.0);
    let rows = (0..n_a)
        .map(|_| BitSet::from_indices(n_b, (0..n_b).filter(|_| rng.gen_bool(p))))
        .collect();
    BipartiteGraph::from_rows(n_b, rows)
}

/// Adds random edges at deficient vertices until every degree is at least `delta`.
pub fn patch_min_degree(g: &BipartiteGraph, delta: usize, seed: u64) -> BipartiteGraph {
    let (n_a, n_b) = (g.size_a(), g.size_b());
    let mut rows: Vec<BitSet> = (0..n_a).map(|a| g.row_a(a).clone()).collect();
    let mut deg_b: Vec<usize> = (0..n_b).map(|b| g.row_b(b).count()).collect();
    let mut rng = rng_for(seed, &[0xFA]);
    for a in 0..n_a {
        let mut missing: Vec<usize> = (0..n_b).filter(|&b| !rows[a].contains(b)).collect();
        missing.shuffle(&mut rng);
        while rows[a].count() < delta.min(n_b) {
            let b = missing.pop().expect("enough non-neighbours");
            rows[a].insert(b);
            deg_b[b] += 1;
        }
    }
    for b in 0..n_b {
        if deg_b[b] >= delta {
            continue;
        }
        let mut missing: Vec<usize> = (0..n_a).filter(|&a| !rows[a].contains(b)).collect();
        missing.shuffle(&mut rng);
        while deg_b[b] < delta.min(n_a) {
            let a = missing.pop().expect("enough non-neighbours");
            rows[a].insert(b);
            deg_b[b] += 1;
        }
    }
    BipartiteGraph::from_rows(n_b, rows)
}

/// Balanced host on `n + n` vertices with `δ ≥ ⌈(½+γ)n⌉`: edges with
/// probability `½ + γ + slack`, then deficient vertices are patched.
pub fn random_host_min_degree(
    n: usize,
    gamma: &Rational,
    slack: f64,
    seed: u64,
) -> Result<BipartiteGraph, InstanceError> {
    if gamma < &rat(0, 1) || gamma >= &rat(1, 2) {
        return Err(InstanceError::BadGamma(gamma.to_string()));
    }
    let required = min_degree_required(n, gamma);
    let p = 0.5 + crate::exact::to_f64(gamma) + slack;
    let g = random_bipartite(n, n, p, seed);
    Ok(patch_min_degree(&g, required, seed))
}

/// `⌈(½+γ)n⌉`.
pub fn min_degree_required(n: usize, gamma: &Rational) -> usize {
    crate::exact::ceil_i64(&((rat(1, 2) + gamma) * rat_usize(n))) as usize
}

/// Disjoint complete blocks `K_{m,m}`; block `i` uses indices `i·m..(i+1)·m` on both sides.
pub fn planted_blocks(k: usize, m: usize) -> BipartiteGraph {
    let rows = (0..k * m)
        .map(|a| {
            let blk = a / m;
            BitSet::from_indices(k * m, blk * m..(blk + 1) * m)
        })
        .collect();
    BipartiteGraph::from_rows(k * m, rows)
}

/// Clusters `A_i = B_i = i·m..(i+1)·m` with random pairs of density `p` on
/// `(A_i, B_i)` and `(A_i, B_{i+1 mod k})` and nothing else.
pub fn planted_cycle_pairs(
    k: usize,
    m: usize,
    p: f64,
    seed: u64,
) -> (BipartiteGraph, ClusterPartition) {
    let n = k * m;
    let mut rng = rng_for(seed, &[0xC7]);
    let mut rows = vec![BitSet::new(n); n];
    for (a, row) in rows.iter_mut().enumerate() {
        let i = a / m;
        let mut targets = vec![i];
        if k > 1 {
            targets.push((i + 1) % k);
        }
        targets.dedup();
        for j in targets {
            for b in j * m..(j + 1) * m {
                if rng.gen_bool(p) {
                    row.insert(b);
                }
            }
        }
    }
    let lists: Vec<Vec<usize>> = (0..k).map(|i| (i * m..(i + 1) * m).collect()).collect();
    let part = ClusterPartition::from_lists(n, n, &lists, &lists).expect("valid planted partition");
    (BipartiteGraph::from_rows(n, rows), part)
}

/// A bipartite target together with a vertex order.
#[derive(Debug, Clone, Serialize)]
pub struct Target {
    #[serde(skip)]
    pub graph: BipartiteGraph,
    pub order: Vec<VertexId>,
}

/// Turns a graph given on positions `0..len` (with a side per position and
/// `edges` between positions) into a bipartite graph whose per-side indices
/// follow position order; the order of positions becomes the labelling.
fn from_positions(sides: &[Side], edges: &[(usize, usize)]) -> Result<Target, InstanceError> {
    let mut id = Vec::with_capacity(sides.len());
    let (mut na, mut nb) = (0, 0);
    for &s in sides {
        match s {
            Side::A => {
                id.push(VertexId::a(na));
                na += 1;
            }
            Side::B => {
                id.push(VertexId::b(nb));
                nb += 1;
            }
        }
    }
    let mut e = Vec::with_capacity(edges.len());
    for &(u, v) in edges {
        match (id[u].side, id[v].side) {
            (Side::A, Side::B) => e.push((id[u].index, id[v].index)),
            (Side::B, Side::A) => e.push((id[v].index, id[u].index)),
            _ => {
                return Err(InstanceError::Invalid(format!(
                    "positions {u} and {v} on the same side"
                )))
            }
        }
    }
    let graph =
        BipartiteGraph::new(na, nb, &e).map_err(|err| InstanceError::Invalid(err.to_string()))?;
    Ok(Target { graph, order: id })
}

/// Zig-zag order of a cycle `c_0 … c_{L−1}`: `c_0, c_1, c_{L−1}, c_2, c_{L−2}, …`.
pub fn zigzag(len: usize) -> Vec<usize> {
    let mut out = vec![0];
    let (mut lo, mut hi) = (1, len - 1);
    while lo <= hi {
        out.push(lo);
        if lo != hi {
            out.push(hi);
        }
        lo += 1;
        hi -= 1;
    }
    out
}

/// `C_{2n}` with `c_j` on side `j mod 2` and per-side index `⌊j/2⌋`,
/// labelled in zig-zag order (bandwidth 2).
pub fn hamilton_cycle(n: usize) -> Result<Target, InstanceError> {
    if n < 2 {
        return Err(InstanceError::Invalid("cycle needs n ≥ 2".into()));
    }
    let len = 2 * n;
    let mut e = Vec::with_capacity(len);
    for j in 0..len {
        let (u, v) = (j, (j + 1) % len);
        let (a, b) = if u % 2 == 0 {
            (u / 2, v / 2)
        } else {
            (v / 2, u / 2)
        };
        e.push((a, b));
    }
    let graph = BipartiteGraph::new(n, n, &e).expect("cycle edges in range");
    let order = zigzag(len)
        .into_iter()
        .map(|j| VertexId {
            side: if j % 2 == 0 { Side::A } else { Side::B },
            index: j / 2,
        })
        .collect();
    Ok(Target { graph, order })
}

/// Ladder `P_n × K_2` in natural rung order (bandwidth 2).
pub fn ladder(n: usize) -> Result<Target, InstanceError> {
    if n < 1 {
        return Err(InstanceError::Invalid("ladder needs n ≥ 1".into()));
    }
    let pos = |i: usize, r: usize| 2 * i + r;
    let sides: Vec<Side> = (0..2 * n)
        .map(|p| {
            if (p / 2 + p % 2) % 2 == 0 {
                Side::A
            } else {
                Side::B
            }
        })
        .collect();
    let mut e = Vec::new();
    for i in 0..n {
        e.push((pos(i, 0), pos(i, 1)));
        if i + 1 < n {
            e.push((pos(i, 0), pos(i + 1, 0)));
            e.push((pos(i, 1), pos(i + 1, 1)));
        }
    }
    from_positions(&sides, &e)
}

/// Möbius ladder: `C_{2n}` plus the chords `c_j c_{j+n}`; bipartite iff `n` is odd.
/// Rungs `{c_j, c_{j+n}}` are laid out in zig-zag order.
pub fn moebius_ladder(n: usize) -> Result<Target, InstanceError> {
    if n < 3 || n.is_multiple_of(2) {
        return Err(InstanceError::Invalid(
            "Möbius ladder needs odd n ≥ 3 to be bipartite".into(),
        ));
    }
    let len = 2 * n;
    let mut order = Vec::with_capacity(len);
    for r in zigzag(n) {
        order.push(r);
        order.push(r + n);
    }
    let mut position = vec![0; len];
    for (p, &c) in order.iter().enumerate() {
        position[c] = p;
    }
    let sides: Vec<Side> = order
        .iter()
        .map(|&c| if c % 2 == 0 { Side::A } else { Side::B })
        .collect();
    let mut e = Vec::new();
    for j in 0..len {
        e.push((position[j], position[(j + 1) % len]));
    }
    for j in 0..n {
        e.push((position[j], position[j + n]));
    }
    from_positions(&sides, &e)
}

/// `w × h` grid in row-major order (bandwidth `w`); needs `w·h` even.
pub fn grid(w: usize, h: usize) -> Result<Target, InstanceError> {
    if w == 0 || h == 0 || !(w * h).is_multiple_of(2) {
        return Err(InstanceError::Invalid(
            "grid needs w·h even and positive".into(),
        ));
    }
    let pos = |r: usize, c: usize| r * w + c;
    let sides: Vec<Side> = (0..w * h)
        .map(|p| {
            if (p / w + p % w).is_multiple_of(2) {
                Side::A
            } else {
                Side::B
            }
        })
        .collect();
    let mut e = Vec::new();
    for r in 0..h {
        for c in 0..w {
            if c + 1 < w {
                e.push((pos(r, c), pos(r, c + 1)));
            }
            if r + 1 < h {
                e.push((pos(r, c), pos(r + 1, c)));
            }
        }
    }
    from_positions(&sides, &e)
}

/// `n/2` disjoint 4-cycles, each labelled `a, b, a′, b′` (bandwidth 3); `n` even.
pub fn disjoint_four_cycles(n: usize) -> Result<Target, InstanceError> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(InstanceError::Invalid(
            "need an even number of vertices per side".into(),
        ));
    }
    let sides: Vec<Side> = (0..2 * n)
        .map(|p| if p % 2 == 0 { Side::A } else { Side::B })
        .collect();
    let mut e = Vec::new();
    for c in 0..n / 2 {
        let b = 4 * c;
        e.extend([(b, b + 1), (b + 1, b + 2), (b + 2, b + 3), (b + 3, b)]);
    }
    from_positions(&sides, &e)
}

/// Perfect matching `a_i b_i`, labelled `a_0, b_0, a_1, b_1, …` (bandwidth 1).
pub fn perfect_matching(n: usize) -> Target {
    let sides: Vec<Side> = (0..2 * n)
        .map(|p| if p % 2 == 0 { Side::A } else { Side::B })
        .collect();
    let e: Vec<_> = (0..n).map(|i| (2 * i, 2 * i + 1)).collect();
    from_positions(&sides, &e).expect("matching is bipartite")
}

/// Random graph on `2n` positions with balanced random sides, where edges join
/// opposite-side positions at distance at most `window`, kept with
/// probability `p` while both endpoints have degree below `max_degree`.
pub fn random_local(
    n: usize,
    window: usize,
    p: f64,
    max_degree: usize,
    seed: u64,
) -> Result<Target, InstanceError> {
    if n == 0 || window == 0 {
        return Err(InstanceError::Invalid("need n ≥ 1 and window ≥ 1".into()));
    }
    let mut rng = rng_for(seed, &[0x10CA]);
    let mut sides: Vec<Side> = (0..2 * n)
        .map(|i| if i < n { Side::A } else { Side::B })
        .collect();
    sides.shuffle(&mut rng);
    let mut cand = Vec::new();
    for u in 0..2 * n {
        for v in u + 1..(u + window + 1).min(2 * n) {
            if sides[u] != sides[v] {
                cand.push((u, v));
            }
        }
    }
    cand.shuffle(&mut rng);
    let mut deg = vec![0usize; 2 * n];
    let mut e = Vec::new();
    for (u, v) in cand {
        if deg[u] < max_degree && deg[v] < max_degree && rng.gen_bool(p.clamp(0.0, 1.0)) {
            deg[u] += 1;
            deg[v] += 1;
            e.push((u, v));
        }
    }
    from_positions(&sides, &e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homomorphism::labelling_bandwidth;

    #[test]
    fn host_meets_min_degree() {
        let g = random_host_min_degree(64, &rat(1, 5), 0.0, 0).unwrap();
        assert!(g.min_degree() >= 45);
        assert!(random_host_min_degree(64, &rat(3, 5), 0.0, 0).is_err());
    }

    #[test]
    fn target_bandwidths() {
        let c8 = hamilton_cycle(4).unwrap();
        assert_eq!(labelling_bandwidth(&c8.graph, &c8.order).unwrap(), 2);
        let l = ladder(5).unwrap();
        assert_eq!(labelling_bandwidth(&l.graph, &l.order).unwrap(), 2);
        let g = grid(4, 4).unwrap();
        assert_eq!(labelling_bandwidth(&g.graph, &g.order).unwrap(), 4);
        let q = disjoint_four_cycles(4).unwrap();
        assert_eq!(labelling_bandwidth(&q.graph, &q.order).unwrap(), 3);
        let m = moebius_ladder(5).unwrap();
        assert!(m.graph.max_degree() == 3 && m.graph.is_balanced());
        assert!(labelling_bandwidth(&m.graph, &m.order).unwrap() <= 5);
        let r = random_local(50, 5, 0.5, 4, 1).unwrap();
        assert!(r.graph.is_balanced());
        assert!(labelling_bandwidth(&r.graph, &r.order).unwrap() <= 5);
    }

    #[test]
    fn planted_blocks_shape() {
        let g = planted_blocks(2, 4);
        assert_eq!(g.edge_count(), 32);
        assert!(!g.has_edge(0, 4));
    }
}
