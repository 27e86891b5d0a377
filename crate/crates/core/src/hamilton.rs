//! Hamilton cycles in balanced bipartite graphs: a rotation–extension search
//! for general sizes, exhaustive backtracking for small ones, and a verifier.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{BipartiteGraph, Side, VertexId};
use crate::seed::rng_for;

/// Largest side size accepted by the exhaustive search.
pub const EXHAUSTIVE_MAX: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HamiltonMode {
    RotationExtension,
    ExhaustiveSmall,
    /// Exhaustive up to [`EXHAUSTIVE_MAX`] vertices per side, rotation–extension above.
    Auto,
}

/// Alternating vertex sequence `v_1, …, v_{2m}` read cyclically.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HamiltonCycle {
    pub order: Vec<VertexId>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HamiltonError {
    #[error("graph must be balanced with at least 2 vertices per side")]
    BadInput,
    #[error("exhaustive search only supports up to {EXHAUSTIVE_MAX} vertices per side (got {0})")]
    TooLargeForExhaustive(usize),
    #[error("exhaustive search proved there is no Hamilton cycle")]
    NoCycle,
    #[error(
        "no Hamilton cycle found after {restarts} restarts (min degree {min_degree}; {})",
        if *hypothesis_met { "δ ≥ n/2+1 held, so one exists and the heuristic failed" } else { "δ ≥ n/2+1 not met, none may exist" }
    )]
    BudgetExhausted {
        restarts: usize,
        min_degree: usize,
        hypothesis_met: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize)]
pub enum CycleViolation {
    #[error("cycle has {found} vertices, expected {expected}")]
    WrongLength { found: usize, expected: usize },
    #[error("vertex {0} out of range")]
    OutOfRange(VertexId),
    #[error("vertex {0} visited twice")]
    Repeated(VertexId),
    #[error("sides do not alternate at position {0}")]
    NotAlternating(usize),
    #[error("{0} and {1} are consecutive but not adjacent")]
    NonEdge(VertexId, VertexId),
}

/// Checks every cycle invariant against `g`, reporting the first violation.
pub fn verify_cycle(g: &BipartiteGraph, cycle: &HamiltonCycle) -> Result<(), CycleViolation> {
    let expected = g.size_a() + g.size_b();
    let order = &cycle.order;
    if order.len() != expected || !g.is_balanced() {
        return Err(CycleViolation::WrongLength {
            found: order.len(),
            expected,
        });
    }
    let mut seen_a = vec![false; g.size_a()];
    let mut seen_b = vec![false; g.size_b()];
    for &v in order {
        if v.index >= g.side_size(v.side) {
            return Err(CycleViolation::OutOfRange(v));
        }
        let seen = match v.side {
            Side::A => &mut seen_a[v.index],
            Side::B => &mut seen_b[v.index],
        };
        if std::mem::replace(seen, true) {
            return Err(CycleViolation::Repeated(v));
        }
    }
    for i in 0..order.len() {
        let (u, v) = (order[i], order[(i + 1) % order.len()]);
        if u.side == v.side {
            return Err(CycleViolation::NotAlternating(i));
        }
        if !g.adjacent(u, v) {
            return Err(CycleViolation::NonEdge(u, v));
        }
    }
    Ok(())
}

/// Vertices `0..n` are the A side, `n..2n` the B side.
struct Dense {
    n: usize,
    adj: Vec<Vec<usize>>,
    mat: Vec<Vec<bool>>,
}

impl Dense {
    fn new(g: &BipartiteGraph) -> Self {
        let n = g.size_a();
        let mut adj = vec![Vec::new(); 2 * n];
        let mut mat = vec![vec![false; 2 * n]; 2 * n];
        for (a, b) in g.edges() {
            adj[a].push(n + b);
            adj[n + b].push(a);
            mat[a][n + b] = true;
            mat[n + b][a] = true;
        }
        Dense { n, adj, mat }
    }

    fn id(&self, v: usize) -> VertexId {
        if v < self.n {
            VertexId::a(v)
        } else {
            VertexId::b(v - self.n)
        }
    }

    fn to_cycle(&self, path: &[usize]) -> HamiltonCycle {
        // Start at the smallest A-vertex and read in the direction of its
        // smaller-indexed neighbour so that equal cycles print identically.
        let len = path.len();
        let start = path.iter().position(|&v| v == 0).unwrap_or(0);
        let next = path[(start + 1) % len];
        let prev = path[(start + len - 1) % len];
        let forward = next <= prev;
        let order = (0..len)
            .map(|i| {
                let p = if forward {
                    (start + i) % len
                } else {
                    (start + len - i) % len
                };
                self.id(path[p])
            })
            .collect();
        HamiltonCycle { order }
    }
}

fn rotation_extension(d: &Dense, seed: u64, restarts: usize) -> Option<Vec<usize>> {
    let total = 2 * d.n;
    let max_steps = 4 * total * total + 100;
    for r in 0..restarts {
        let mut rng = rng_for(seed, &[r as u64]);
        let mut on_path = vec![usize::MAX; total];
        let mut path = vec![rng.gen_range(0..total)];
        on_path[path[0]] = 0;
        let reindex = |path: &[usize], on_path: &mut Vec<usize>| {
            for (i, &v) in path.iter().enumerate() {
                on_path[v] = i;
            }
        };
        for _ in 0..max_steps {
            let t = path.len() - 1;
            let end = path[t];
            if path.len() == total && d.mat[path[0]][end] {
                return Some(path);
            }
            // Extension at either end.
            let mut free: Vec<usize> = d.adj[end]
                .iter()
                .copied()
                .filter(|&u| on_path[u] == usize::MAX)
                .collect();
            if free.is_empty() {
                let head = path[0];
                free = d.adj[head]
                    .iter()
                    .copied()
                    .filter(|&u| on_path[u] == usize::MAX)
                    .collect();
                if !free.is_empty() {
                    path.reverse();
                    reindex(&path, &mut on_path);
                }
            }
            if let Some(&u) = free.choose(&mut rng) {
                on_path[u] = path.len();
                path.push(u);
                continue;
            }
            // A closed cycle that is not spanning can be reopened at a vertex
            // with an outside neighbour, which yields a longer path.
            if path.len() % 2 == 0 && path.len() < total && d.mat[path[0]][end] {
                let exit = path.iter().enumerate().find_map(|(i, &v)| {
                    d.adj[v]
                        .iter()
                        .copied()
                        .find(|&u| on_path[u] == usize::MAX)
                        .map(|u| (i, u))
                });
                if let Some((i, u)) = exit {
                    let mut np = vec![u];
                    np.extend_from_slice(&path[i..]);
                    np.extend_from_slice(&path[..i]);
                    path = np;
                    reindex(&path, &mut on_path);
                    continue;
                }
                // Disconnected: no Hamilton cycle can exist.
                return None;
            }
            // Rotation: end ~ path[i] turns v_0..v_i v_t v_{t−1}..v_{i+1}.
            let pivots: Vec<usize> = d.adj[end]
                .iter()
                .map(|&u| on_path[u])
                .filter(|&i| i != usize::MAX && i + 1 < t)
                .collect();
            let Some(&i) = pivots.choose(&mut rng) else {
                break;
            };
            if rng.gen_bool(0.5) {
                path[i + 1..].reverse();
                reindex(&path, &mut on_path);
            } else {
                // Rotate at the other end instead, when possible.
                let head = path[0];
                let hp: Vec<usize> = d.adj[head]
                    .iter()
                    .map(|&u| on_path[u])
                    .filter(|&j| j != usize::MAX && j > 1)
                    .collect();
                if let Some(&j) = hp.choose(&mut rng) {
                    path[..j].reverse();
                } else {
                    path[i + 1..].reverse();
                }
                reindex(&path, &mut on_path);
            }
        }
    }
    None
}

fn exhaustive(d: &Dense) -> Option<Vec<usize>> {
    let total = 2 * d.n;
    let masks: Vec<u32> = (0..total)
        .map(|v| d.adj[v].iter().fold(0u32, |m, &u| m | (1 << u)))
        .collect();
    fn dfs(masks: &[u32], total: usize, path: &mut Vec<usize>, used: u32) -> bool {
        let cur = *path.last().unwrap();
        if path.len() == total {
            return masks[cur] & 1 != 0;
        }
        // Every unvisited vertex still needs two usable neighbours.
        let open = !used & ((1u32 << total) - 1);
        let reachable = open | (1 << cur) | 1;
        let mut rest = open;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            if (masks[v] & reachable).count_ones() < 2 {
                return false;
            }
        }
        let mut cand = masks[cur] & open;
        while cand != 0 {
            let u = cand.trailing_zeros() as usize;
            cand &= cand - 1;
            path.push(u);
            if dfs(masks, total, path, used | (1 << u)) {
                return true;
            }
            path.pop();
        }
        false
    }
    let mut path = vec![0];
    dfs(&masks, total, &mut path, 1).then_some(path)
}

/// Finds a Hamilton cycle; the result is verified before it is returned.
/// `restarts` defaults to `50·n` for rotation–extension.
pub fn find_hamilton_cycle(
    g: &BipartiteGraph,
    mode: HamiltonMode,
    seed: u64,
    restarts: Option<usize>,
) -> Result<HamiltonCycle, HamiltonError> {
    let n = g.size_a();
    if !g.is_balanced() || n < 2 {
        return Err(HamiltonError::BadInput);
    }
    let d = Dense::new(g);
    let use_exhaustive = match mode {
        HamiltonMode::ExhaustiveSmall => {
            if n > EXHAUSTIVE_MAX {
                return Err(HamiltonError::TooLargeForExhaustive(n));
            }
            true
        }
        HamiltonMode::RotationExtension => false,
        HamiltonMode::Auto => n <= EXHAUSTIVE_MAX,
    };
    let budget = restarts.unwrap_or(50 * n);
    let path = if use_exhaustive {
        exhaustive(&d).ok_or(HamiltonError::NoCycle)?
    } else {
        rotation_extension(&d, seed, budget).ok_or_else(|| {
            let min_degree = g.min_degree();
            HamiltonError::BudgetExhausted {
                restarts: budget,
                min_degree,
                hypothesis_met: min_degree > n / 2,
            }
        })?
    };
    let cycle = d.to_cycle(&path);
    verify_cycle(g, &cycle).expect("search returned an invalid cycle");
    Ok(cycle)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c4_and_complete() {
        let c4 = BipartiteGraph::complete(2, 2);
        for mode in [
            HamiltonMode::RotationExtension,
            HamiltonMode::ExhaustiveSmall,
        ] {
            let c = find_hamilton_cycle(&c4, mode, 0, None).unwrap();
            assert_eq!(
                c.order,
                vec![
                    VertexId::a(0),
                    VertexId::b(0),
                    VertexId::a(1),
                    VertexId::b(1)
                ]
            );
            let k5 = BipartiteGraph::complete(5, 5);
            assert!(verify_cycle(&k5, &find_hamilton_cycle(&k5, mode, 1, None).unwrap()).is_ok());
        }
    }

    #[test]
    fn verifier_rejects() {
        let c4 = BipartiteGraph::complete(2, 2);
        let rep = HamiltonCycle {
            order: vec![
                VertexId::a(0),
                VertexId::b(0),
                VertexId::a(0),
                VertexId::b(1),
            ],
        };
        assert_eq!(
            verify_cycle(&c4, &rep),
            Err(CycleViolation::Repeated(VertexId::a(0)))
        );
        let edges: Vec<_> = BipartiteGraph::complete(3, 3)
            .edges()
            .filter(|&e| e != (0, 0))
            .collect();
        let g = BipartiteGraph::new(3, 3, &edges).unwrap();
        let bad = HamiltonCycle {
            order: vec![
                VertexId::a(0),
                VertexId::b(0),
                VertexId::a(1),
                VertexId::b(1),
                VertexId::a(2),
                VertexId::b(2),
            ],
        };
        assert_eq!(
            verify_cycle(&g, &bad),
            Err(CycleViolation::NonEdge(VertexId::a(0), VertexId::b(0)))
        );
    }

    #[test]
    fn disconnected_has_none() {
        let g = BipartiteGraph::new(
            4,
            4,
            &[
                (0, 0),
                (0, 1),
                (1, 0),
                (1, 1),
                (2, 2),
                (2, 3),
                (3, 2),
                (3, 3),
            ],
        )
        .unwrap();
        assert_eq!(
            find_hamilton_cycle(&g, HamiltonMode::ExhaustiveSmall, 0, None),
            Err(HamiltonError::NoCycle)
        );
        assert!(matches!(
            find_hamilton_cycle(&g, HamiltonMode::RotationExtension, 0, Some(5)),
            Err(HamiltonError::BudgetExhausted {
                hypothesis_met: false,
                ..
            })
        ));
    }
}
