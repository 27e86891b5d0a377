//! Maximum bipartite matching (Hopcroft–Karp) and Hall-violator extraction.

use std::collections::VecDeque;

/// A matching between left vertices `0..n_left` and right vertices `0..n_right`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    pub left: Vec<Option<usize>>,
    pub right: Vec<Option<usize>>,
}

impl Matching {
    pub fn size(&self) -> usize {
        self.left.iter().filter(|m| m.is_some()).count()
    }

    pub fn is_left_perfect(&self) -> bool {
        self.left.iter().all(Option::is_some)
    }
}

/// Maximum matching of the bipartite graph with left adjacency lists `adj`.
pub fn hopcroft_karp(n_right: usize, adj: &[Vec<usize>]) -> Matching {
    let n_left = adj.len();
    let mut left = vec![None; n_left];
    let mut right: Vec<Option<usize>> = vec![None; n_right];
    let mut dist = vec![usize::MAX; n_left];
    loop {
        // Layer the free left vertices and everything reachable by alternating paths.
        let mut queue = VecDeque::new();
        for u in 0..n_left {
            dist[u] = if left[u].is_none() {
                queue.push_back(u);
                0
            } else {
                usize::MAX
            };
        }
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                match right[v] {
                    None => found = true,
                    Some(w) if dist[w] == usize::MAX => {
                        dist[w] = dist[u] + 1;
                        queue.push_back(w);
                    }
                    Some(_) => {}
                }
            }
        }
        if !found {
            break;
        }
        let mut progress = false;
        for u in 0..n_left {
            if left[u].is_none() && augment(u, adj, &mut left, &mut right, &mut dist) {
                progress = true;
            }
        }
        if !progress {
            break;
        }
    }
    Matching { left, right }
}

fn augment(
    u: usize,
    adj: &[Vec<usize>],
    left: &mut [Option<usize>],
    right: &mut [Option<usize>],
    dist: &mut [usize],
) -> bool {
    for &v in &adj[u] {
        let ok = match right[v] {
            None => true,
            Some(w) => dist[w] == dist[u] + 1 && augment(w, adj, left, right, dist),
        };
        if ok {
            left[u] = Some(v);
            right[v] = Some(u);
            return true;
        }
    }
    dist[u] = usize::MAX;
    false
}

/// For a maximum matching that leaves some left vertex free, the left
/// vertices reachable from it by alternating paths form a set `Z` with
/// `|N(Z)| < |Z|`; returns `(Z, N(Z))`, both sorted.
pub fn hall_violator(adj: &[Vec<usize>], m: &Matching) -> Option<(Vec<usize>, Vec<usize>)> {
    let start = m.left.iter().position(Option::is_none)?;
    let mut seen_left = vec![false; adj.len()];
    let mut seen_right = vec![false; m.right.len()];
    let mut queue = VecDeque::from([start]);
    seen_left[start] = true;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if seen_right[v] {
                continue;
            }
            seen_right[v] = true;
            // In a maximum matching every right vertex reached here is matched.
            if let Some(w) = m.right[v] {
                if !seen_left[w] {
                    seen_left[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    let z = (0..adj.len()).filter(|&u| seen_left[u]).collect();
    let nz = (0..m.right.len()).filter(|&v| seen_right[v]).collect();
    Some((z, nz))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Maximum matching size by trying every subset of edges' left choices.
    fn brute_force(n_right: usize, adj: &[Vec<usize>]) -> usize {
        fn rec(u: usize, adj: &[Vec<usize>], used: &mut Vec<bool>) -> usize {
            if u == adj.len() {
                return 0;
            }
            let mut best = rec(u + 1, adj, used);
            for &v in &adj[u] {
                if !used[v] {
                    used[v] = true;
                    best = best.max(1 + rec(u + 1, adj, used));
                    used[v] = false;
                }
            }
            best
        }
        rec(0, adj, &mut vec![false; n_right])
    }

    #[test]
    fn matches_brute_force_on_random_graphs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let (nl, nr) = (rng.gen_range(0..7), rng.gen_range(0..7));
            let adj: Vec<Vec<usize>> = (0..nl)
                .map(|_| (0..nr).filter(|_| rng.gen_bool(0.35)).collect())
                .collect();
            let m = hopcroft_karp(nr, &adj);
            assert_eq!(m.size(), brute_force(nr, &adj));
            for (u, v) in m.left.iter().enumerate() {
                if let Some(v) = v {
                    assert!(adj[u].contains(v));
                    assert_eq!(m.right[*v], Some(u));
                }
            }
            if let Some((z, nz)) = hall_violator(&adj, &m) {
                assert!(nz.len() < z.len());
                for &u in &z {
                    assert!(adj[u].iter().all(|v| nz.contains(v)));
                }
            } else {
                assert!(m.is_left_perfect());
            }
        }
    }
}
