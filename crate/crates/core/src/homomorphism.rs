//! Bandwidth labellings, interval pieces, the randomized balancing map φ and
//! the linking-vertex homomorphism `f` from a guest `H` onto the cycle `C` on
//! `A_0, B_1, A_1, …, B_{k−1}, A_{k−1}, B_0`.
//!
//! Cluster indices are 0-based: `C` has the edges `{A_i, B_i}` and
//! `{A_i, B_{i+1 mod k}}`.

use std::collections::{HashSet, VecDeque};

use rand::distributions::{Distribution, WeightedIndex};
use serde::{Deserialize, Serialize};

use crate::exact::{rat_usize, Rational};
use crate::graph::{BipartiteGraph, Side, VertexId};
use crate::seed::rng_for;

/// Largest vertex count accepted by [`LabellingMode::ExactSmall`].
pub const EXACT_SMALL_MAX: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HomomorphismError {
    #[error("order is not a permutation of V(H): {0}")]
    NotAPermutation(String),
    #[error("exact-small labelling supports at most {max} vertices, got {size}")]
    TooLargeForExact { size: usize, max: usize },
    #[error("invalid piece partition: {0}")]
    BadPieces(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("no balancing map found in {attempts} attempts ({failed_a} A-bound and {failed_b} B-bound violations)")]
    BalanceExhausted {
        attempts: usize,
        failed_a: usize,
        failed_b: usize,
        /// Per cluster, number of attempts in which its `ā_i` bound failed.
        per_cluster_a: Vec<usize>,
        /// Per cluster, number of attempts in which its `b̄_i` bound failed.
        per_cluster_b: Vec<usize>,
    },
    #[error("internal error: edge {x}–{y} maps to the non-edge {fx}–{fy} of C ({trace})")]
    Internal {
        x: VertexId,
        y: VertexId,
        fx: VertexId,
        fy: VertexId,
        trace: String,
    },
}

pub type Result<T> = std::result::Result<T, HomomorphismError>;

// ---------------------------------------------------------------------------
// Labellings

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabellingMode {
    Given,
    CuthillMcKee,
    ExactSmall,
}

/// A vertex order of `H` with its exact bandwidth.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandwidthLabelling {
    pub order: Vec<VertexId>,
    pub bandwidth: usize,
}

impl BandwidthLabelling {
    /// Position of every vertex, indexed by global id.
    pub fn positions(&self) -> Vec<usize> {
        let slots = self.order.iter().map(|v| v.global() + 1).max().unwrap_or(0);
        let mut pos = vec![usize::MAX; slots];
        for (p, v) in self.order.iter().enumerate() {
            pos[v.global()] = p;
        }
        pos
    }
}

/// Positions indexed by global id, after checking that `order` is a permutation.
fn positions_of(h: &BipartiteGraph, order: &[VertexId]) -> Result<Vec<usize>> {
    let total = h.size_a() + h.size_b();
    if order.len() != total {
        return Err(HomomorphismError::NotAPermutation(format!(
            "length {} but H has {} vertices",
            order.len(),
            total
        )));
    }
    // Global ids of an unbalanced graph are not contiguous, so index by a
    // table large enough for both sides.
    let slots = 2 * h.size_a().max(h.size_b());
    let mut pos = vec![usize::MAX; slots];
    for (p, v) in order.iter().enumerate() {
        if v.index >= h.side_size(v.side) {
            return Err(HomomorphismError::NotAPermutation(format!(
                "{v} is not a vertex of H"
            )));
        }
        let g = v.global();
        if pos[g] != usize::MAX {
            return Err(HomomorphismError::NotAPermutation(format!(
                "{v} appears twice"
            )));
        }
        pos[g] = p;
    }
    Ok(pos)
}

/// Exact bandwidth of `order`: the largest position difference over all edges.
pub fn labelling_bandwidth(h: &BipartiteGraph, order: &[VertexId]) -> Result<usize> {
    let pos = positions_of(h, order)?;
    Ok(h.edges()
        .map(|(a, b)| pos[VertexId::a(a).global()].abs_diff(pos[VertexId::b(b).global()]))
        .max()
        .unwrap_or(0))
}

/// Builds a labelling of `h` in the requested mode; the bandwidth is always
/// recomputed from the edges.
pub fn bandwidth_labelling(
    h: &BipartiteGraph,
    mode: LabellingMode,
    provided: Option<&[VertexId]>,
) -> Result<BandwidthLabelling> {
    let order = match mode {
        LabellingMode::Given => provided
            .ok_or_else(|| HomomorphismError::NotAPermutation("given mode needs an order".into()))?
            .to_vec(),
        LabellingMode::CuthillMcKee => cuthill_mckee(h),
        LabellingMode::ExactSmall => exact_small(h)?,
    };
    let bandwidth = labelling_bandwidth(h, &order)?;
    Ok(BandwidthLabelling { order, bandwidth })
}

fn all_vertices(h: &BipartiteGraph) -> Vec<VertexId> {
    let mut v: Vec<VertexId> = (0..h.size_a())
        .map(VertexId::a)
        .chain((0..h.size_b()).map(VertexId::b))
        .collect();
    v.sort_by_key(|x| x.global());
    v
}

fn neighbour_ids(h: &BipartiteGraph, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
    let side = v.side.opposite();
    h.neighbours(v)
        .iter()
        .map(move |i| VertexId { side, index: i })
}

/// Breadth-first ordering per component: each component starts at its
/// unvisited vertex of least degree (ties to the lowest global id) and
/// neighbours are queued by ascending degree, then global id.
fn cuthill_mckee(h: &BipartiteGraph) -> Vec<VertexId> {
    let verts = all_vertices(h);
    let slots = 2 * h.size_a().max(h.size_b());
    let mut seen = vec![false; slots];
    let mut order = Vec::with_capacity(verts.len());
    let mut starts = verts.clone();
    starts.sort_by_key(|&v| (h.degree(v), v.global()));
    for s in starts {
        if seen[s.global()] {
            continue;
        }
        seen[s.global()] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<VertexId> =
                neighbour_ids(h, v).filter(|u| !seen[u.global()]).collect();
            next.sort_by_key(|&u| (h.degree(u), u.global()));
            for u in next {
                seen[u.global()] = true;
                queue.push_back(u);
            }
        }
    }
    order
}

/// Optimal labelling by iterative deepening on the bandwidth with a
/// branch-and-bound placement search.
fn exact_small(h: &BipartiteGraph) -> Result<Vec<VertexId>> {
    let verts = all_vertices(h);
    let n = verts.len();
    if n > EXACT_SMALL_MAX {
        return Err(HomomorphismError::TooLargeForExact {
            size: n,
            max: EXACT_SMALL_MAX,
        });
    }
    if n == 0 {
        return Ok(verts);
    }
    let local: std::collections::HashMap<VertexId, usize> =
        verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let adj: Vec<u32> = verts
        .iter()
        .map(|&v| neighbour_ids(h, v).fold(0u32, |m, u| m | (1 << local[&u])))
        .collect();
    let lower = if h.edge_count() == 0 {
        0
    } else {
        h.max_degree().div_ceil(2).max(1)
    };
    for b in lower..n {
        let mut search = BandwidthSearch {
            adj: &adj,
            n,
            b,
            pos: vec![usize::MAX; n],
            seq: Vec::new(),
            failed: HashSet::new(),
        };
        if search.place(0) {
            return Ok(search.seq.iter().map(|&i| verts[i]).collect());
        }
    }
    unreachable!("bandwidth n − 1 is always feasible")
}

struct BandwidthSearch<'a> {
    adj: &'a [u32],
    n: usize,
    b: usize,
    pos: Vec<usize>,
    seq: Vec<usize>,
    failed: HashSet<(u32, Vec<usize>)>,
}

impl BandwidthSearch<'_> {
    fn placed_mask(&self) -> u32 {
        self.seq.iter().fold(0, |m, &v| m | (1 << v))
    }

    /// The remaining search depends only on the placed set and the last `b`
    /// placed vertices (earlier ones cannot reach unplaced vertices).
    fn key(&self) -> (u32, Vec<usize>) {
        let t = self.seq.len();
        (
            self.placed_mask(),
            self.seq[t.saturating_sub(self.b)..].to_vec(),
        )
    }

    /// Every unplaced vertex with a placed neighbour at position `p` must be
    /// placed by `p + b`; deadlines must be schedulable.
    fn deadlines_ok(&self, mask: u32) -> bool {
        let t = self.seq.len();
        let mut deadlines: Vec<usize> = (0..self.n)
            .filter(|&w| mask & (1 << w) == 0)
            .filter_map(|w| {
                let m = self.adj[w] & mask;
                (m != 0).then(|| {
                    (0..self.n)
                        .filter(|&u| m & (1 << u) != 0)
                        .map(|u| self.pos[u] + self.b)
                        .min()
                        .unwrap()
                })
            })
            .collect();
        deadlines.sort_unstable();
        deadlines.iter().enumerate().all(|(s, &d)| d >= t + s)
    }

    fn place(&mut self, t: usize) -> bool {
        if t == self.n {
            return true;
        }
        let key = self.key();
        if self.failed.contains(&key) {
            return false;
        }
        let mask = key.0;
        for v in 0..self.n {
            if mask & (1 << v) != 0 {
                continue;
            }
            let placed_nb = self.adj[v] & mask;
            if (0..self.n).any(|u| placed_nb & (1 << u) != 0 && t - self.pos[u] > self.b) {
                continue;
            }
            self.pos[v] = t;
            self.seq.push(v);
            if self.deadlines_ok(mask | (1 << v)) && self.place(t + 1) {
                return true;
            }
            self.seq.pop();
            self.pos[v] = usize::MAX;
        }
        self.failed.insert(key);
        false
    }
}

// ---------------------------------------------------------------------------
// Pieces

/// Consecutive intervals `W_0, …, W_{ℓ−1}` of a labelling.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PiecePartition {
    pub ell: usize,
    /// Position of the first vertex of each piece.
    pub starts: Vec<usize>,
    pub sizes: Vec<usize>,
    /// `x_i = |W_i ∩ X|` (A-side vertices of `H`).
    pub x: Vec<usize>,
    /// `y_i = |W_i ∩ Y|` (B-side vertices of `H`).
    pub y: Vec<usize>,
}

impl PiecePartition {
    pub fn total(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Piece containing position `p`.
    pub fn piece_of(&self, p: usize) -> usize {
        self.starts.partition_point(|&s| s <= p) - 1
    }
}

/// Splits the labelling into `ell` intervals of sizes `⌊N/ℓ⌋` or `⌈N/ℓ⌉`,
/// larger pieces first.
pub fn partition_pieces(labelling: &BandwidthLabelling, ell: usize) -> Result<PiecePartition> {
    let total = labelling.order.len();
    if ell == 0 || ell > total {
        return Err(HomomorphismError::BadPieces(format!(
            "need 1 ≤ ℓ ≤ {total}, got {ell}"
        )));
    }
    let (q, r) = (total / ell, total % ell);
    let mut starts = Vec::with_capacity(ell);
    let mut sizes = Vec::with_capacity(ell);
    let (mut x, mut y) = (Vec::with_capacity(ell), Vec::with_capacity(ell));
    let mut at = 0;
    for i in 0..ell {
        let size = q + usize::from(i < r);
        let piece = &labelling.order[at..at + size];
        starts.push(at);
        sizes.push(size);
        x.push(piece.iter().filter(|v| v.side == Side::A).count());
        y.push(size - x[i]);
        at += size;
    }
    Ok(PiecePartition {
        ell,
        starts,
        sizes,
        x,
        y,
    })
}

// ---------------------------------------------------------------------------
// Balancing map

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalanceConfig {
    pub xi: Rational,
    pub max_retries: usize,
    pub seed: u64,
    /// Require `n_i ≤ n/8` as in the lemma; the practical pipeline may relax it.
    pub enforce_size_cap: bool,
}

impl BalanceConfig {
    pub fn new(xi: Rational, max_retries: usize, seed: u64) -> Self {
        BalanceConfig {
            xi,
            max_retries,
            seed,
            enforce_size_cap: true,
        }
    }
}

/// A map φ from pieces to clusters with its aggregates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalancingAssignment {
    pub phi: Vec<usize>,
    /// `ā_i = Σ_{j ∈ φ⁻¹(i)} x_j`.
    pub a_bar: Vec<usize>,
    /// `b̄_i = Σ_{j ∈ φ⁻¹(i)} y_j`.
    pub b_bar: Vec<usize>,
    /// `S_i = |φ⁻¹(i)|`.
    pub counts: Vec<usize>,
    /// `D_i = Σ_j (ℓ/3n)(x_j − y_j)(1[φ(j)=i] − n_i/n)`.
    #[serde(with = "crate::exact::rational_vec_str")]
    pub d: Vec<Rational>,
    pub retries_used: usize,
}

/// Aggregates `(ā, b̄, S)` of φ.
pub fn aggregates(
    phi: &[usize],
    k: usize,
    x: &[usize],
    y: &[usize],
) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let (mut a, mut b, mut s) = (vec![0; k], vec![0; k], vec![0; k]);
    for (j, &i) in phi.iter().enumerate() {
        a[i] += x[j];
        b[i] += y[j];
        s[i] += 1;
    }
    (a, b, s)
}

/// The centred statistics `D_i`, computed term by term in exact arithmetic.
pub fn d_statistics(phi: &[usize], targets: &[usize], x: &[usize], y: &[usize]) -> Vec<Rational> {
    let n: usize = targets.iter().sum();
    let ell = phi.len();
    let scale = rat_usize(ell) / rat_usize(3 * n);
    (0..targets.len())
        .map(|i| {
            let share = rat_usize(targets[i]) / rat_usize(n);
            phi.iter()
                .enumerate()
                .fold(Rational::from_integer(0.into()), |acc, (j, &p)| {
                    let diff = Rational::from_integer((x[j] as i64 - y[j] as i64).into());
                    let ind = rat_usize(usize::from(p == i));
                    acc + &scale * diff * (ind - &share)
                })
        })
        .collect()
}

/// Whether `(3n/ℓ)·D_i = ā_i − b̄_i` holds for every cluster.
pub fn d_identity_holds(a: &BalancingAssignment, targets: &[usize]) -> bool {
    let n: usize = targets.iter().sum();
    let factor = rat_usize(3 * n) / rat_usize(a.phi.len());
    a.d.iter().enumerate().all(|(i, d)| {
        &factor * d == Rational::from_integer((a.a_bar[i] as i64 - a.b_bar[i] as i64).into())
    })
}

/// Exact check of `ā_i < n_i + ξn` and `b̄_i < n_i + ξn`; returns the clusters
/// violating each bound.
pub fn balance_violations(
    targets: &[usize],
    a_bar: &[usize],
    b_bar: &[usize],
    xi: &Rational,
) -> (Vec<usize>, Vec<usize>) {
    let n: usize = targets.iter().sum();
    let slack = xi * rat_usize(n);
    let bad = |agg: &[usize]| -> Vec<usize> {
        (0..targets.len())
            .filter(|&i| rat_usize(agg[i]) >= rat_usize(targets[i]) + &slack)
            .collect()
    };
    (bad(a_bar), bad(b_bar))
}

/// Samples φ with `P[φ(j) = i] = n_i/n` independently per piece and retries
/// until both aggregate bounds hold; every returned map is checked exactly.
pub fn balance_assignment(
    targets: &[usize],
    x: &[usize],
    y: &[usize],
    cfg: &BalanceConfig,
) -> Result<BalancingAssignment> {
    let k = targets.len();
    let ell = x.len();
    let n: usize = targets.iter().sum();
    let pre = |msg: String| Err(HomomorphismError::Precondition(msg));
    if k == 0 || ell == 0 || y.len() != ell {
        return pre(format!(
            "need k ≥ 1 and matching piece counts (k={k}, |x|={ell}, |y|={})",
            y.len()
        ));
    }
    if n == 0 || x.iter().sum::<usize>() != n || y.iter().sum::<usize>() != n {
        return pre("targets, x and y must all be partitions of the same n > 0".into());
    }
    let zero = Rational::from_integer(0.into());
    if cfg.xi <= zero || cfg.xi > crate::exact::rat(1, 4) {
        return pre(format!("ξ = {} must lie in (0, 1/4]", cfg.xi));
    }
    if cfg.enforce_size_cap {
        if let Some(i) = (0..k).find(|&i| 8 * targets[i] > n) {
            return pre(format!("n_{i} = {} exceeds n/8 = {}/8", targets[i], n));
        }
    }
    let cap = (Rational::from_integer(1.into()) + &cfg.xi) * rat_usize(2 * n) / rat_usize(ell);
    if let Some(j) = (0..ell).find(|&j| rat_usize(x[j] + y[j]) > cap) {
        return pre(format!(
            "x_{j} + y_{j} = {} exceeds (1+ξ)2n/ℓ = {}",
            x[j] + y[j],
            cap
        ));
    }
    let dist =
        WeightedIndex::new(targets).map_err(|e| HomomorphismError::Precondition(e.to_string()))?;
    let (mut per_a, mut per_b) = (vec![0; k], vec![0; k]);
    let (mut failed_a, mut failed_b) = (0, 0);
    for attempt in 0..=cfg.max_retries {
        let mut rng = rng_for(cfg.seed, &[0xBA1A, attempt as u64]);
        let phi: Vec<usize> = (0..ell).map(|_| dist.sample(&mut rng)).collect();
        let (a_bar, b_bar, counts) = aggregates(&phi, k, x, y);
        let (bad_a, bad_b) = balance_violations(targets, &a_bar, &b_bar, &cfg.xi);
        if bad_a.is_empty() && bad_b.is_empty() {
            let d = d_statistics(&phi, targets, x, y);
            let out = BalancingAssignment {
                phi,
                a_bar,
                b_bar,
                counts,
                d,
                retries_used: attempt,
            };
            debug_assert!(d_identity_holds(&out, targets));
            return Ok(out);
        }
        failed_a += usize::from(!bad_a.is_empty());
        failed_b += usize::from(!bad_b.is_empty());
        bad_a.iter().for_each(|&i| per_a[i] += 1);
        bad_b.iter().for_each(|&i| per_b[i] += 1);
    }
    Err(HomomorphismError::BalanceExhausted {
        attempts: cfg.max_retries + 1,
        failed_a,
        failed_b,
        per_cluster_a: per_a,
        per_cluster_b: per_b,
    })
}

/// The union-bound failure estimate `2k·e^{−ξ²ℓ/2} + 2k·e^{−ξ²ℓ/72}` for one
/// sample of φ, unclamped (values ≥ 1 are vacuous).
pub fn failure_probability_bound_raw(k: usize, xi: f64, ell: usize) -> f64 {
    let t = xi * xi * ell as f64;
    2.0 * k as f64 * ((-t / 2.0).exp() + (-t / 72.0).exp())
}

/// [`failure_probability_bound_raw`] clamped into `[0, 1]`.
pub fn failure_probability_bound(k: usize, xi: f64, ell: usize) -> f64 {
    failure_probability_bound_raw(k, xi, ell).clamp(0.0, 1.0)
}

/// The piece count `⌈1000k⁵/ξ²⌉` that makes the single-sample bound non-vacuous.
pub fn lemma_piece_count(k: usize, xi: &Rational) -> num_bigint::BigInt {
    let k5 = num_bigint::BigInt::from(k).pow(5);
    let v = Rational::from_integer(k5 * 1000) / (xi * xi);
    v.ceil().to_integer()
}

// ---------------------------------------------------------------------------
// Cycle homomorphism

/// Which linking vertices form the set `S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkingPolicy {
    /// All `2k` blocks of every piece, `|S| = 2kℓβ_n`; needs `(2k+1)β_n ≤ ⌊N/ℓ⌋`.
    Full,
    /// Only the blocks actually used for linking; needs `(2q_i+1)β_n ≤ |W_i|`.
    Used,
}

/// Linking data of one piece: `q_i = (φ(i) − φ(i−1)) mod k` and the
/// blocks `L_1^i … L_{2q_i}^i` that walk from `φ(i−1)` to `φ(i)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PieceLink {
    pub from: usize,
    pub to: usize,
    pub q: usize,
}

/// A homomorphism `f: V(H) → V(C)` with its linking set `S`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleHomomorphism {
    pub k: usize,
    pub beta_n: usize,
    pub policy: LinkingPolicy,
    /// `f(x)` as an A-cluster index, for every A-side vertex `x` of `H`.
    pub f_a: Vec<usize>,
    /// `f(y)` as a B-cluster index, for every B-side vertex `y` of `H`.
    pub f_b: Vec<usize>,
    /// The linking set `S`, sorted by global id.
    pub s: Vec<VertexId>,
    pub links: Vec<PieceLink>,
    pub pre_a: Vec<usize>,
    pub pre_b: Vec<usize>,
}

impl CycleHomomorphism {
    pub fn image(&self, v: VertexId) -> VertexId {
        match v.side {
            Side::A => VertexId::a(self.f_a[v.index]),
            Side::B => VertexId::b(self.f_b[v.index]),
        }
    }

    pub fn in_s(&self, v: VertexId) -> bool {
        self.s
            .binary_search_by_key(&v.global(), |u| u.global())
            .is_ok()
    }

    /// Recomputes the preimage sizes from `f_a`, `f_b`.
    pub fn recount(&mut self) {
        self.pre_a = count_preimages(&self.f_a, self.k);
        self.pre_b = count_preimages(&self.f_b, self.k);
    }
}

fn count_preimages(f: &[usize], k: usize) -> Vec<usize> {
    let mut c = vec![0; k];
    f.iter().filter(|&&i| i < k).for_each(|&i| c[i] += 1);
    c
}

/// `{A_a, B_b}` is an edge of `C` iff `(b − a) mod k ∈ {0, 1}`.
pub fn cycle_has_edge(k: usize, a: usize, b: usize) -> bool {
    a < k && b < k && matches!((b + k - a) % k, 0 | 1)
}

/// The cycle `C` as a bipartite graph on `k + k` vertices.
pub fn cycle_graph(k: usize) -> BipartiteGraph {
    let edges: Vec<(usize, usize)> = (0..k).flat_map(|i| [(i, i), (i, (i + 1) % k)]).collect();
    BipartiteGraph::new(k, k, &edges).expect("cycle edges are in range")
}

/// Builds `f` by the linking formulas: a vertex at offset `o` of piece `W_i`
/// lies in block `L_j^i` with `j = o/β_n + 1`; if `j ≤ 2q_i` then A-vertices
/// go to `A_{φ(i−1)+⌊j/2⌋}` and B-vertices to `B_{φ(i−1)+⌈j/2⌉}`, otherwise
/// to `A_{φ(i)}` / `B_{φ(i)}`. The first piece has no predecessor and is
/// treated as `φ(−1) = φ(0)`. The result is verified edge by edge.
pub fn build_cycle_homomorphism(
    h: &BipartiteGraph,
    labelling: &BandwidthLabelling,
    pieces: &PiecePartition,
    phi: &[usize],
    beta_n: usize,
    k: usize,
    policy: LinkingPolicy,
) -> Result<CycleHomomorphism> {
    let pre = |msg: String| Err(HomomorphismError::Precondition(msg));
    let pos = positions_of(h, &labelling.order)?;
    let bw = labelling_bandwidth(h, &labelling.order)?;
    if bw != labelling.bandwidth {
        return pre(format!(
            "declared bandwidth {} but the order has bandwidth {bw}",
            labelling.bandwidth
        ));
    }
    if k == 0 {
        return pre("k must be positive".into());
    }
    if bw > beta_n {
        return pre(format!("bandwidth {bw} exceeds β_n = {beta_n}"));
    }
    let ell = pieces.ell;
    if phi.len() != ell || pieces.starts.len() != ell || pieces.sizes.len() != ell {
        return Err(HomomorphismError::BadPieces(format!(
            "φ has {} entries for ℓ = {ell}",
            phi.len()
        )));
    }
    if pieces.total() != labelling.order.len()
        || pieces
            .starts
            .iter()
            .zip(&pieces.sizes)
            .scan(0, |at, (&s, &z)| {
                let ok = s == *at;
                *at += z;
                Some(ok)
            })
            .any(|ok| !ok)
    {
        return Err(HomomorphismError::BadPieces(
            "pieces are not consecutive intervals covering the labelling".into(),
        ));
    }
    if let Some(j) = phi.iter().position(|&c| c >= k) {
        return pre(format!(
            "φ({j}) = {} is not a cluster index below k = {k}",
            phi[j]
        ));
    }
    let links: Vec<PieceLink> = (0..ell)
        .map(|i| {
            let from = if i == 0 { phi[0] } else { phi[i - 1] };
            PieceLink {
                from,
                to: phi[i],
                q: (phi[i] + k - from) % k,
            }
        })
        .collect();
    match policy {
        LinkingPolicy::Full => {
            let min_size = pieces.sizes.iter().copied().min().unwrap_or(0);
            if (2 * k + 1) * beta_n > min_size {
                return pre(format!(
                    "(2k+1)β_n = {} exceeds the smallest piece size {min_size}",
                    (2 * k + 1) * beta_n
                ));
            }
        }
        LinkingPolicy::Used => {
            if let Some(i) = (0..ell).find(|&i| (2 * links[i].q + 1) * beta_n > pieces.sizes[i]) {
                return pre(format!(
                    "piece {i}: (2q+1)β_n = {} exceeds |W_i| = {}",
                    (2 * links[i].q + 1) * beta_n,
                    pieces.sizes[i]
                ));
            }
        }
    }
    let (mut f_a, mut f_b) = (vec![0; h.size_a()], vec![0; h.size_b()]);
    let mut s = Vec::new();
    for (i, link) in links.iter().enumerate() {
        let start = pieces.starts[i];
        let linking_len = match policy {
            LinkingPolicy::Full => 2 * k * beta_n,
            LinkingPolicy::Used => 2 * link.q * beta_n,
        };
        for (o, &v) in labelling.order[start..start + pieces.sizes[i]]
            .iter()
            .enumerate()
        {
            let j = if beta_n == 0 {
                usize::MAX
            } else {
                o / beta_n + 1
            };
            let in_link = j <= 2 * link.q;
            let target = match (v.side, in_link) {
                (Side::A, true) => (link.from + j / 2) % k,
                (Side::B, true) => (link.from + j.div_ceil(2)) % k,
                (_, false) => link.to,
            };
            match v.side {
                Side::A => f_a[v.index] = target,
                Side::B => f_b[v.index] = target,
            }
            if o < linking_len {
                s.push(v);
            }
        }
    }
    s.sort_by_key(|v| v.global());
    let mut hom = CycleHomomorphism {
        k,
        beta_n,
        policy,
        f_a,
        f_b,
        s,
        links,
        pre_a: vec![],
        pre_b: vec![],
    };
    hom.recount();
    if let Some((x, y)) = first_bad_edge(h, &hom) {
        let (px, py) = (pos[x.global()], pos[y.global()]);
        let (ix, iy) = (pieces.piece_of(px), pieces.piece_of(py));
        let trace = format!(
            "x at position {px} in piece {ix} (link {:?}), y at position {py} in piece {iy} (link {:?})",
            hom.links[ix], hom.links[iy]
        );
        return Err(HomomorphismError::Internal {
            x,
            y,
            fx: hom.image(x),
            fy: hom.image(y),
            trace,
        });
    }
    Ok(hom)
}

fn first_bad_edge(h: &BipartiteGraph, hom: &CycleHomomorphism) -> Option<(VertexId, VertexId)> {
    h.edges()
        .find(|&(a, b)| !cycle_has_edge(hom.k, hom.f_a[a], hom.f_b[b]))
        .map(|(a, b)| (VertexId::a(a), VertexId::b(b)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreimageViolation {
    pub side: Side,
    pub cluster: usize,
    pub size: usize,
    pub target: usize,
}

/// Per-clause outcome of [`verify_cycle_homomorphism`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomomorphismReport {
    pub edges_checked: usize,
    /// Every edge of `H` maps to an edge of `C` and `f` is well-formed.
    pub homomorphism: bool,
    pub bad_edge: Option<(VertexId, VertexId)>,
    pub malformed: Option<String>,
    /// `|S| ≤ ξ·2k·n`.
    pub h1: bool,
    pub s_size: usize,
    #[serde(with = "crate::exact::rational_str")]
    pub h1_bound: Rational,
    /// Edges avoiding `S` map to matching pairs `{A_i, B_i}`.
    pub h2: bool,
    pub h2_counterexample: Option<(VertexId, VertexId)>,
    /// `|f⁻¹(A_i)|, |f⁻¹(B_i)| < n_i + ξn`.
    pub h3: bool,
    pub h3_violations: Vec<PreimageViolation>,
}

impl HomomorphismReport {
    pub fn all_passed(&self) -> bool {
        self.homomorphism && self.h1 && self.h2 && self.h3
    }
}

/// Recomputes every clause from `f` and `S` alone.
pub fn verify_cycle_homomorphism(
    h: &BipartiteGraph,
    hom: &CycleHomomorphism,
    targets: &[usize],
    xi: &Rational,
) -> HomomorphismReport {
    let k = hom.k;
    let n = h.size_a().max(h.size_b());
    let mut malformed = None;
    if hom.f_a.len() != h.size_a() || hom.f_b.len() != h.size_b() {
        malformed = Some("f does not cover V(H)".to_string());
    } else if hom.f_a.iter().chain(&hom.f_b).any(|&c| c >= k) {
        malformed = Some(format!("f uses a cluster index ≥ k = {k}"));
    } else if targets.len() != k {
        malformed = Some(format!("{} targets for k = {k}", targets.len()));
    } else if hom.s.iter().any(|v| v.index >= h.side_size(v.side)) {
        malformed = Some("S contains a vertex outside H".to_string());
    }
    let bad_edge = if malformed.is_none() {
        first_bad_edge(h, hom)
    } else {
        None
    };
    let h1_bound = xi * rat_usize(2 * k * n);
    let h1 = rat_usize(hom.s.len()) <= h1_bound;
    let h2_counterexample = if malformed.is_none() {
        h.edges()
            .map(|(a, b)| (VertexId::a(a), VertexId::b(b)))
            .find(|&(x, y)| !hom.in_s(x) && !hom.in_s(y) && hom.f_a[x.index] != hom.f_b[y.index])
    } else {
        None
    };
    let mut h3_violations = Vec::new();
    if malformed.is_none() {
        let slack = xi * rat_usize(n);
        let (pa, pb) = (count_preimages(&hom.f_a, k), count_preimages(&hom.f_b, k));
        for (side, counts) in [(Side::A, &pa), (Side::B, &pb)] {
            for (i, &size) in counts.iter().enumerate() {
                if rat_usize(size) >= rat_usize(targets[i]) + &slack {
                    h3_violations.push(PreimageViolation {
                        side,
                        cluster: i,
                        size,
                        target: targets[i],
                    });
                }
            }
        }
    }
    HomomorphismReport {
        edges_checked: h.edge_count(),
        homomorphism: malformed.is_none() && bad_edge.is_none(),
        bad_edge,
        h1,
        s_size: hom.s.len(),
        h1_bound,
        h2: malformed.is_none() && h2_counterexample.is_none(),
        h2_counterexample,
        h3: malformed.is_none() && h3_violations.is_empty(),
        h3_violations,
        malformed,
    }
}
