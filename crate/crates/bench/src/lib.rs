//! Fixed, seeded instances shared by the benchmarks in `benches/`.

use bipembed_core::instances::{self, patch_min_degree, random_bipartite};
use bipembed_core::{rat, BipartiteGraph};

/// Host with `δ ≥ 0.8n`, the end-to-end acceptance setting.
pub fn dense_host(n: usize, seed: u64) -> BipartiteGraph {
    instances::random_host_min_degree(n, &rat(3, 10), 0.0, seed).expect("γ = 3/10 is admissible")
}

/// Random balanced graph patched to `δ ≥ n/2 + 1`, the Hamilton-cycle setting.
pub fn moon_moser_host(n: usize, seed: u64) -> BipartiteGraph {
    patch_min_degree(&random_bipartite(n, n, 0.3, seed), n / 2 + 1, seed)
}

/// `C_{2n}` with its natural bandwidth-2 order.
pub fn cycle_target(n: usize) -> instances::Target {
    instances::hamilton_cycle(n).expect("n ≥ 2")
}

/// Piece counts alternating between all-A and all-B blocks of `size`.
pub fn alternating_pieces(ell: usize, size: usize) -> (Vec<usize>, Vec<usize>) {
    let x: Vec<usize> = (0..ell)
        .map(|j| if j % 2 == 0 { size } else { 0 })
        .collect();
    let y = x.iter().map(|&a| size - a).collect();
    (x, y)
}
