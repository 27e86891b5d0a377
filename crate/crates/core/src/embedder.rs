//! Compatibility of a guest partition with a host partition, the two-phase
//! embedding (greedy placement of the linking vertices and their neighbours,
//! then per-component random-greedy placement with a matching finish), and
//! the independent embedding verifier.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::exact::{rat_usize, Surd};
use crate::graph::{BipartiteGraph, Side, VertexId};
use crate::homomorphism::CycleHomomorphism;
use crate::matching::{hall_violator, hopcroft_karp};
use crate::regularity::ClusterPartition;
use crate::seed::rng_for;

/// A graph on classes `A_0…A_{k−1}`, `B_0…B_{k−1}`; an edge `(i, j)` is `{A_i, B_j}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassGraph {
    pub k: usize,
    pub edges: Vec<(usize, usize)>,
}

impl ClassGraph {
    pub fn new(k: usize, mut edges: Vec<(usize, usize)>) -> Self {
        edges.sort_unstable();
        edges.dedup();
        ClassGraph { k, edges }
    }

    /// The cycle `A_0, B_1, A_1, …, B_0, A_0`: edges `{A_i, B_i}` and `{A_i, B_{i+1}}`.
    pub fn cycle(k: usize) -> Self {
        ClassGraph::new(k, (0..k).flat_map(|i| [(i, i), (i, (i + 1) % k)]).collect())
    }

    /// The perfect matching `{A_i, B_i}`.
    pub fn matching(k: usize) -> Self {
        ClassGraph::new(k, (0..k).map(|i| (i, i)).collect())
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.binary_search(&(i, j)).is_ok()
    }

    pub fn is_subgraph_of(&self, other: &ClassGraph) -> bool {
        self.k == other.k && self.edges.iter().all(|&(i, j)| other.has_edge(i, j))
    }

    /// Connected components as lists of classes (isolated classes form their own).
    pub fn components(&self) -> Vec<Vec<VertexId>> {
        let k = self.k;
        let mut parent: Vec<usize> = (0..2 * k).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let next = p[y];
                p[y] = r;
                y = next;
            }
            r
        }
        for &(i, j) in &self.edges {
            let (a, b) = (find(&mut parent, i), find(&mut parent, k + j));
            parent[a.max(b)] = a.min(b);
        }
        let mut groups: Vec<Vec<VertexId>> = Vec::new();
        let mut slot = vec![usize::MAX; 2 * k];
        for node in 0..2 * k {
            let root = find(&mut parent, node);
            if slot[root] == usize::MAX {
                slot[root] = groups.len();
                groups.push(Vec::new());
            }
            let class = if node < k {
                VertexId::a(node)
            } else {
                VertexId::b(node - k)
            };
            groups[slot[root]].push(class);
        }
        groups
    }
}

/// The class of every guest vertex: `X`-vertices in A-classes, `Y`-vertices in B-classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HPartition {
    pub k: usize,
    pub class_a: Vec<usize>,
    pub class_b: Vec<usize>,
}

impl HPartition {
    pub fn from_homomorphism(hom: &CycleHomomorphism) -> Self {
        HPartition {
            k: hom.k,
            class_a: hom.f_a.clone(),
            class_b: hom.f_b.clone(),
        }
    }

    pub fn class_of(&self, v: VertexId) -> usize {
        match v.side {
            Side::A => self.class_a[v.index],
            Side::B => self.class_b[v.index],
        }
    }

    pub fn sizes(&self, side: Side) -> Vec<usize> {
        let mut c = vec![0; self.k];
        let classes = if side == Side::A {
            &self.class_a
        } else {
            &self.class_b
        };
        classes
            .iter()
            .filter(|&&i| i < self.k)
            .for_each(|&i| c[i] += 1);
        c
    }
}

fn h_neighbours(h: &BipartiteGraph, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
    let side = v.side.opposite();
    h.neighbours(v)
        .iter()
        .map(move |index| VertexId { side, index })
}

fn all_vertices(h: &BipartiteGraph) -> impl Iterator<Item = VertexId> + '_ {
    (0..h.size_a())
        .map(VertexId::a)
        .chain((0..h.size_b()).map(VertexId::b))
}

// ---------------------------------------------------------------------------
// Compatibility

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassBoundViolation {
    pub class: VertexId,
    /// `"W"`, `"S"` or `"T"`.
    pub set: String,
    pub size: usize,
    /// The bound as a decimal/rational string.
    pub bound: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompatibilityReport {
    pub k: usize,
    pub epsilon: Surd,
    pub w_sizes_a: Vec<usize>,
    pub w_sizes_b: Vec<usize>,
    pub n_a: Vec<usize>,
    pub n_b: Vec<usize>,
    /// `R′ ⊆ R`.
    pub r_prime_in_r: bool,
    /// (i) `|W_i| ≤ n_i`.
    pub clause_i: bool,
    pub clause_i_violations: Vec<ClassBoundViolation>,
    /// (ii) every guest edge runs between classes adjacent in `R`.
    pub clause_ii: bool,
    pub clause_ii_counterexample: Option<(VertexId, VertexId)>,
    /// Vertices with a neighbour in a class not adjacent in `R′`.
    pub s: Vec<VertexId>,
    /// `N_H(S) \ S`.
    pub t: Vec<VertexId>,
    pub s_sizes_a: Vec<usize>,
    pub s_sizes_b: Vec<usize>,
    pub t_sizes_a: Vec<usize>,
    pub t_sizes_b: Vec<usize>,
    /// (iii) `|S_i| ≤ ε n_i` and `|T_i| ≤ ε·min{n_j : j in the R′-component of i}`.
    pub clause_iii: bool,
    pub clause_iii_violations: Vec<ClassBoundViolation>,
    pub passed: bool,
}

/// Evaluates the three compatibility clauses exactly.
pub fn compatibility_report(
    h: &BipartiteGraph,
    w: &HPartition,
    n_a: &[usize],
    n_b: &[usize],
    r: &ClassGraph,
    r_prime: &ClassGraph,
    epsilon: &Surd,
) -> CompatibilityReport {
    let k = w.k;
    let (w_sizes_a, w_sizes_b) = (w.sizes(Side::A), w.sizes(Side::B));
    let mut clause_i_violations = Vec::new();
    for (side, ws, ns) in [(Side::A, &w_sizes_a, n_a), (Side::B, &w_sizes_b, n_b)] {
        for i in 0..k {
            if ws[i] > ns[i] {
                clause_i_violations.push(ClassBoundViolation {
                    class: VertexId { side, index: i },
                    set: "W".into(),
                    size: ws[i],
                    bound: ns[i].to_string(),
                });
            }
        }
    }
    let edges: Vec<(VertexId, VertexId)> = h
        .edges()
        .map(|(a, b)| (VertexId::a(a), VertexId::b(b)))
        .collect();
    let clause_ii_counterexample = edges
        .iter()
        .copied()
        .find(|&(x, y)| !r.has_edge(w.class_of(x), w.class_of(y)));
    let slots = 2 * h.size_a().max(h.size_b());
    let mut in_s = vec![false; slots];
    for &(x, y) in &edges {
        if !r_prime.has_edge(w.class_of(x), w.class_of(y)) {
            in_s[x.global()] = true;
            in_s[y.global()] = true;
        }
    }
    let mut in_t = vec![false; slots];
    for &(x, y) in &edges {
        if in_s[x.global()] && !in_s[y.global()] {
            in_t[y.global()] = true;
        }
        if in_s[y.global()] && !in_s[x.global()] {
            in_t[x.global()] = true;
        }
    }
    let collect = |flags: &[bool]| -> Vec<VertexId> {
        all_vertices(h).filter(|v| flags[v.global()]).collect()
    };
    let (s, t) = (collect(&in_s), collect(&in_t));
    let per_class = |set: &[VertexId], side: Side| -> Vec<usize> {
        let mut c = vec![0; k];
        set.iter()
            .filter(|v| v.side == side)
            .for_each(|&v| c[w.class_of(v)] += 1);
        c
    };
    let (s_sizes_a, s_sizes_b) = (per_class(&s, Side::A), per_class(&s, Side::B));
    let (t_sizes_a, t_sizes_b) = (per_class(&t, Side::A), per_class(&t, Side::B));
    let n_of = |c: VertexId| {
        if c.side == Side::A {
            n_a[c.index]
        } else {
            n_b[c.index]
        }
    };
    let mut component_min = vec![usize::MAX; 2 * k];
    for comp in r_prime.components() {
        let m = comp.iter().map(|&c| n_of(c)).min().unwrap_or(0);
        comp.iter().for_each(|c| component_min[c.global()] = m);
    }
    let mut clause_iii_violations = Vec::new();
    for (side, ss, ts) in [
        (Side::A, &s_sizes_a, &t_sizes_a),
        (Side::B, &s_sizes_b, &t_sizes_b),
    ] {
        for i in 0..k {
            let class = VertexId { side, index: i };
            for (name, size, base) in [
                ("S", ss[i], n_of(class)),
                ("T", ts[i], component_min[class.global()]),
            ] {
                let bound = epsilon.scale(&rat_usize(base));
                if bound.cmp_rational(&rat_usize(size)).is_lt() {
                    clause_iii_violations.push(ClassBoundViolation {
                        class,
                        set: name.into(),
                        size,
                        bound: bound.to_string(),
                    });
                }
            }
        }
    }
    let r_prime_in_r = r_prime.is_subgraph_of(r);
    let clause_i = clause_i_violations.is_empty();
    let clause_ii = clause_ii_counterexample.is_none();
    let clause_iii = clause_iii_violations.is_empty();
    CompatibilityReport {
        k,
        epsilon: epsilon.clone(),
        w_sizes_a,
        w_sizes_b,
        n_a: n_a.to_vec(),
        n_b: n_b.to_vec(),
        r_prime_in_r,
        clause_i,
        clause_i_violations,
        clause_ii,
        clause_ii_counterexample,
        s,
        t,
        s_sizes_a,
        s_sizes_b,
        t_sizes_a,
        t_sizes_b,
        clause_iii,
        clause_iii_violations,
        passed: r_prime_in_r && clause_i && clause_ii && clause_iii,
    }
}

// ---------------------------------------------------------------------------
// Embeddings and their verification

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlacementPhase {
    /// Placed by the greedy pass (linking vertices and their neighbours, or
    /// non-matched vertices of a component).
    Greedy,
    /// Placed by the matching finish.
    Completion,
}

/// An injective map from the guest into the host; A-side to A-side and
/// B-side to B-side by construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Embedding {
    pub map_a: Vec<usize>,
    pub map_b: Vec<usize>,
    pub phase_a: Vec<PlacementPhase>,
    pub phase_b: Vec<PlacementPhase>,
}

impl Embedding {
    /// The identity map of a graph into itself.
    pub fn identity(g: &BipartiteGraph) -> Self {
        Embedding {
            map_a: (0..g.size_a()).collect(),
            map_b: (0..g.size_b()).collect(),
            phase_a: vec![PlacementPhase::Greedy; g.size_a()],
            phase_b: vec![PlacementPhase::Greedy; g.size_b()],
        }
    }

    pub fn image(&self, v: VertexId) -> VertexId {
        match v.side {
            Side::A => VertexId::a(self.map_a[v.index]),
            Side::B => VertexId::b(self.map_b[v.index]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
pub enum EmbeddingViolation {
    #[error("map of side {side:?} has {found} entries, guest has {expected}")]
    WrongSize {
        side: Side,
        expected: usize,
        found: usize,
    },
    #[error("{vertex} maps outside the host")]
    OutOfRange { vertex: VertexId },
    #[error("{first} and {second} both map to {image}")]
    NotInjective {
        first: VertexId,
        second: VertexId,
        image: VertexId,
    },
    #[error("edge {x}–{y} maps to the non-edge {fx}–{fy}")]
    NonEdge {
        x: VertexId,
        y: VertexId,
        fx: VertexId,
        fy: VertexId,
    },
}

/// Checks injectivity, range and edge preservation exhaustively.
pub fn verify_embedding(
    g: &BipartiteGraph,
    h: &BipartiteGraph,
    emb: &Embedding,
) -> Result<(), EmbeddingViolation> {
    for (side, map, expected, host) in [
        (Side::A, &emb.map_a, h.size_a(), g.size_a()),
        (Side::B, &emb.map_b, h.size_b(), g.size_b()),
    ] {
        if map.len() != expected {
            return Err(EmbeddingViolation::WrongSize {
                side,
                expected,
                found: map.len(),
            });
        }
        let mut owner = vec![usize::MAX; host];
        for (i, &img) in map.iter().enumerate() {
            let vertex = VertexId { side, index: i };
            if img >= host {
                return Err(EmbeddingViolation::OutOfRange { vertex });
            }
            if owner[img] != usize::MAX {
                return Err(EmbeddingViolation::NotInjective {
                    first: VertexId {
                        side,
                        index: owner[img],
                    },
                    second: vertex,
                    image: VertexId { side, index: img },
                });
            }
            owner[img] = i;
        }
    }
    for (a, b) in h.edges() {
        if !g.has_edge(emb.map_a[a], emb.map_b[b]) {
            let (x, y) = (VertexId::a(a), VertexId::b(b));
            return Err(EmbeddingViolation::NonEdge {
                x,
                y,
                fx: emb.image(x),
                fy: emb.image(y),
            });
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Two-phase embedding

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbedConfig {
    pub seed: u64,
    /// Additional attempts with fresh randomness after the first one fails.
    pub retries: usize,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            seed: 0,
            retries: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EmbedError {
    #[error("class {class} has {w} guest vertices but its host cluster has {v}")]
    SizeMismatch { class: VertexId, w: usize, v: usize },
    #[error("guest partition is not compatible: {0}")]
    NotCompatible(String),
    #[error("no admissible host vertex for {vertex} (class {class}) after {attempts} attempts")]
    Stuck {
        vertex: VertexId,
        class: VertexId,
        attempts: usize,
    },
    #[error("matching finish for class {class} is deficient after {attempts} attempts: {} guest vertices see only {} host vertices", hall_set.len(), neighbourhood.len())]
    MatchingDeficiency {
        class: VertexId,
        hall_set: Vec<VertexId>,
        neighbourhood: Vec<VertexId>,
        attempts: usize,
    },
    #[error("internal error, constructed map fails verification: {0}")]
    Internal(EmbeddingViolation),
}

#[derive(Debug, Clone, Serialize)]
pub struct EmbedOutcome {
    pub embedding: Embedding,
    pub greedy_vertices: usize,
    pub completion_vertices: usize,
    pub attempts: usize,
}

struct Ctx<'a> {
    g: &'a BipartiteGraph,
    h: &'a BipartiteGraph,
    part: &'a ClusterPartition,
    w: &'a HPartition,
}

#[derive(Clone)]
struct State {
    map_a: Vec<Option<usize>>,
    map_b: Vec<Option<usize>>,
    used_a: BitSet,
    used_b: BitSet,
}

impl State {
    fn new(ctx: &Ctx) -> Self {
        State {
            map_a: vec![None; ctx.h.size_a()],
            map_b: vec![None; ctx.h.size_b()],
            used_a: BitSet::new(ctx.g.size_a()),
            used_b: BitSet::new(ctx.g.size_b()),
        }
    }

    fn image(&self, v: VertexId) -> Option<usize> {
        match v.side {
            Side::A => self.map_a[v.index],
            Side::B => self.map_b[v.index],
        }
    }

    fn place(&mut self, v: VertexId, img: usize) {
        match v.side {
            Side::A => {
                self.map_a[v.index] = Some(img);
                self.used_a.insert(img);
            }
            Side::B => {
                self.map_b[v.index] = Some(img);
                self.used_b.insert(img);
            }
        }
    }

    /// Unused host vertices of `u`'s cluster adjacent to the images of all
    /// embedded neighbours of `u`.
    fn candidates(&self, ctx: &Ctx, u: VertexId) -> BitSet {
        let mut set = ctx.part.clusters(u.side)[ctx.w.class_of(u)].members.clone();
        set.difference_with(if u.side == Side::A {
            &self.used_a
        } else {
            &self.used_b
        });
        for z in h_neighbours(ctx.h, u) {
            if let Some(img) = self.image(z) {
                set.and_with(ctx.g.neighbours(VertexId {
                    side: z.side,
                    index: img,
                }));
            }
        }
        set
    }

    /// An admissible image for `v` maximising the smallest candidate set left
    /// to its unembedded neighbours; ties broken uniformly at random.
    fn choose(&self, ctx: &Ctx, v: VertexId, rng: &mut ChaCha8Rng) -> Option<usize> {
        let cand = self.candidates(ctx, v);
        let pending: Vec<BitSet> = h_neighbours(ctx.h, v)
            .filter(|&u| self.image(u).is_none())
            .map(|u| self.candidates(ctx, u))
            .collect();
        let mut best = Vec::new();
        let mut best_score = 0;
        for c in cand.iter() {
            let row = ctx.g.neighbours(VertexId {
                side: v.side,
                index: c,
            });
            let score = pending
                .iter()
                .map(|p| row.count_and(p))
                .min()
                .unwrap_or(usize::MAX);
            if best.is_empty() || score > best_score {
                best.clear();
                best_score = score;
            }
            if score == best_score {
                best.push(c);
            }
        }
        best.choose(rng).copied()
    }
}

enum AttemptFailure {
    Stuck(VertexId),
    Deficient {
        class: VertexId,
        hall_set: Vec<VertexId>,
        neighbourhood: Vec<VertexId>,
    },
}

/// Embeds `h` into `g` given compatible partitions with `|W_i| = |V_i|` for
/// every class. Phase 1 places `S ∪ T` greedily, most constrained first; phase 2 handles
/// each component of `r_prime` independently: a maximal independent set `M`
/// of its remaining guest vertices is held back, the others are placed
/// greedily, and `M` is placed by a maximum matching per class. Whole
/// attempts are retried with fresh randomness; the result is verified.
#[allow(clippy::too_many_arguments)]
pub fn embed_compatible(
    g: &BipartiteGraph,
    h: &BipartiteGraph,
    part: &ClusterPartition,
    w: &HPartition,
    r: &ClassGraph,
    r_prime: &ClassGraph,
    order: &[VertexId],
    cfg: &EmbedConfig,
) -> Result<EmbedOutcome, EmbedError> {
    let k = w.k;
    if part.k != k || r.k != k || r_prime.k != k {
        return Err(EmbedError::NotCompatible("class counts differ".into()));
    }
    for side in [Side::A, Side::B] {
        let (ws, vs) = (w.sizes(side), part.sizes(side));
        if let Some(i) = (0..k).find(|&i| ws[i] != vs[i]) {
            return Err(EmbedError::SizeMismatch {
                class: VertexId { side, index: i },
                w: ws[i],
                v: vs[i],
            });
        }
    }
    let report = compatibility_report(
        h,
        w,
        &part.sizes(Side::A),
        &part.sizes(Side::B),
        r,
        r_prime,
        &Surd::one(),
    );
    if !report.clause_ii || !report.r_prime_in_r {
        return Err(EmbedError::NotCompatible(
            match report.clause_ii_counterexample {
                Some((x, y)) => format!("edge {x}–{y} runs between classes not adjacent in R"),
                None => "R′ is not a subgraph of R".into(),
            },
        ));
    }
    let ctx = Ctx { g, h, part, w };
    let slots = 2 * h.size_a().max(h.size_b());
    let mut special = vec![false; slots];
    report
        .s
        .iter()
        .chain(&report.t)
        .for_each(|v| special[v.global()] = true);
    let phase1: Vec<VertexId> = order
        .iter()
        .copied()
        .filter(|v| special[v.global()])
        .collect();
    let components = r_prime.components();
    let mut comp_of = vec![0; 2 * k];
    components
        .iter()
        .enumerate()
        .for_each(|(c, classes)| classes.iter().for_each(|cl| comp_of[cl.global()] = c));
    let mut by_component: Vec<Vec<VertexId>> = vec![Vec::new(); components.len()];
    for &v in order.iter().filter(|v| !special[v.global()]) {
        let class = VertexId {
            side: v.side,
            index: w.class_of(v),
        };
        by_component[comp_of[class.global()]].push(v);
    }
    let attempts = cfg.retries + 1;
    let mut last = None;
    for attempt in 0..attempts {
        match embed_attempt(&ctx, &phase1, &by_component, cfg.seed, attempt as u64) {
            Ok((state, completion)) => {
                let mut phase_a = vec![PlacementPhase::Greedy; h.size_a()];
                let mut phase_b = vec![PlacementPhase::Greedy; h.size_b()];
                for v in &completion {
                    match v.side {
                        Side::A => phase_a[v.index] = PlacementPhase::Completion,
                        Side::B => phase_b[v.index] = PlacementPhase::Completion,
                    }
                }
                let embedding = Embedding {
                    map_a: state
                        .map_a
                        .iter()
                        .map(|m| m.expect("every vertex placed"))
                        .collect(),
                    map_b: state
                        .map_b
                        .iter()
                        .map(|m| m.expect("every vertex placed"))
                        .collect(),
                    phase_a,
                    phase_b,
                };
                verify_embedding(g, h, &embedding).map_err(EmbedError::Internal)?;
                return Ok(EmbedOutcome {
                    greedy_vertices: h.size_a() + h.size_b() - completion.len(),
                    completion_vertices: completion.len(),
                    embedding,
                    attempts: attempt + 1,
                });
            }
            Err(f) => last = Some(f),
        }
    }
    Err(match last.expect("at least one attempt") {
        AttemptFailure::Stuck(vertex) => EmbedError::Stuck {
            vertex,
            class: VertexId {
                side: vertex.side,
                index: w.class_of(vertex),
            },
            attempts,
        },
        AttemptFailure::Deficient {
            class,
            hall_set,
            neighbourhood,
        } => EmbedError::MatchingDeficiency {
            class,
            hall_set,
            neighbourhood,
            attempts,
        },
    })
}

fn embed_attempt(
    ctx: &Ctx,
    phase1: &[VertexId],
    by_component: &[Vec<VertexId>],
    seed: u64,
    attempt: u64,
) -> Result<(State, Vec<VertexId>), AttemptFailure> {
    let mut state = State::new(ctx);
    let mut rng = rng_for(seed, &[0xE3B1, attempt]);
    place_greedily(ctx, &mut state, phase1, &mut rng)?;
    let base = &state;
    let results: Vec<Result<Vec<(VertexId, usize, bool)>, AttemptFailure>> = by_component
        .par_iter()
        .enumerate()
        .map(|(c, verts)| complete_component(ctx, base, verts, seed, attempt, c as u64))
        .collect();
    let mut completion = Vec::new();
    for res in results {
        for (v, img, matched) in res? {
            state.place(v, img);
            if matched {
                completion.push(v);
            }
        }
    }
    Ok((state, completion))
}

/// Places `verts` one at a time, always taking next the vertex with the
/// fewest admissible images (ties by position in `verts`).
fn place_greedily(
    ctx: &Ctx,
    state: &mut State,
    verts: &[VertexId],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(VertexId, usize)>, AttemptFailure> {
    let mut left: Vec<VertexId> = verts.to_vec();
    let mut placed = Vec::with_capacity(verts.len());
    while !left.is_empty() {
        let (pos, _) = left
            .iter()
            .enumerate()
            .map(|(i, &v)| (i, state.candidates(ctx, v).count()))
            .min_by_key(|&(i, c)| (c, i))
            .expect("non-empty");
        let v = left.remove(pos);
        let img = state.choose(ctx, v, rng).ok_or(AttemptFailure::Stuck(v))?;
        state.place(v, img);
        placed.push((v, img));
    }
    Ok(placed)
}

/// Places the remaining guest vertices of one component; returns
/// `(vertex, image, placed_by_matching)` triples.
fn complete_component(
    ctx: &Ctx,
    base: &State,
    verts: &[VertexId],
    seed: u64,
    attempt: u64,
    component: u64,
) -> Result<Vec<(VertexId, usize, bool)>, AttemptFailure> {
    let mut state = base.clone();
    let mut rng = rng_for(seed, &[0xC0DE, attempt, component]);
    let slots = 2 * ctx.h.size_a().max(ctx.h.size_b());
    let mut pending = vec![false; slots];
    verts.iter().for_each(|v| pending[v.global()] = true);
    // Maximal independent set among the pending vertices, in the given order.
    let mut held = vec![false; slots];
    for &v in verts {
        if !h_neighbours(ctx.h, v).any(|u| held[u.global()]) {
            held[v.global()] = true;
        }
    }
    let mut out = Vec::with_capacity(verts.len());
    let free: Vec<VertexId> = verts
        .iter()
        .copied()
        .filter(|v| !held[v.global()])
        .collect();
    for (v, img) in place_greedily(ctx, &mut state, &free, &mut rng)? {
        out.push((v, img, false));
    }
    // The held vertices are pairwise non-adjacent, so each class is an
    // independent assignment problem.
    let mut classes: Vec<(VertexId, Vec<VertexId>)> = Vec::new();
    for &v in verts.iter().filter(|v| held[v.global()]) {
        let class = VertexId {
            side: v.side,
            index: ctx.w.class_of(v),
        };
        match classes.iter_mut().find(|(c, _)| *c == class) {
            Some((_, list)) => list.push(v),
            None => classes.push((class, vec![v])),
        }
    }
    for (class, left) in classes {
        let cluster = &ctx.part.clusters(class.side)[class.index];
        let used = if class.side == Side::A {
            &state.used_a
        } else {
            &state.used_b
        };
        let right: Vec<usize> = cluster.iter().filter(|&x| !used.contains(x)).collect();
        let mut local = vec![usize::MAX; cluster.members.len()];
        right.iter().enumerate().for_each(|(i, &x)| local[x] = i);
        let adj: Vec<Vec<usize>> = left
            .iter()
            .map(|&u| {
                let mut l: Vec<usize> = state.candidates(ctx, u).iter().map(|x| local[x]).collect();
                l.shuffle(&mut rng);
                l
            })
            .collect();
        let m = hopcroft_karp(right.len(), &adj);
        if let Some((z, nz)) = hall_violator(&adj, &m) {
            return Err(AttemptFailure::Deficient {
                class,
                hall_set: z.iter().map(|&i| left[i]).collect(),
                neighbourhood: nz
                    .iter()
                    .map(|&j| VertexId {
                        side: class.side,
                        index: right[j],
                    })
                    .collect(),
            });
        }
        for (i, &u) in left.iter().enumerate() {
            let img = right[m.left[i].expect("left-perfect matching")];
            state.place(u, img);
            out.push((u, img, true));
        }
    }
    Ok(out)
}
