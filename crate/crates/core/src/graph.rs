//! Bipartite graphs with bitset adjacency, vertex sets and exact densities.

use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use num_bigint::BigInt;

use crate::exact::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexId {
    pub side: Side,
    pub index: usize,
}

impl VertexId {
    pub fn a(index: usize) -> Self {
        VertexId {
            side: Side::A,
            index,
        }
    }

    pub fn b(index: usize) -> Self {
        VertexId {
            side: Side::B,
            index,
        }
    }

    /// Global id used by labellings: A-side vertices are even, B-side odd.
    pub fn global(self) -> usize {
        2 * self.index + usize::from(self.side == Side::B)
    }

    pub fn from_global(g: usize) -> Self {
        VertexId {
            side: if g.is_multiple_of(2) {
                Side::A
            } else {
                Side::B
            },
            index: g / 2,
        }
    }
}

impl std::fmt::Display for VertexId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.side {
            Side::A => write!(f, "A{}", self.index),
            Side::B => write!(f, "B{}", self.index),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("edge ({a}, {b}) out of range for sides {n_a}+{n_b}")]
    EdgeOutOfRange {
        a: usize,
        b: usize,
        n_a: usize,
        n_b: usize,
    },
    #[error("vertex {v} out of range")]
    VertexOutOfRange { v: VertexId },
    #[error("density undefined on an empty vertex set")]
    EmptySet,
    #[error("vertex set is on side {found:?}, expected side {expected:?}")]
    SideMismatch { expected: Side, found: Side },
}

/// A subset of one side of a bipartite graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VertexSet {
    pub side: Side,
    pub members: BitSet,
}

impl VertexSet {
    pub fn empty(side: Side, universe: usize) -> Self {
        VertexSet {
            side,
            members: BitSet::new(universe),
        }
    }

    pub fn full(side: Side, universe: usize) -> Self {
        VertexSet {
            side,
            members: BitSet::full(universe),
        }
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(side: Side, universe: usize, it: I) -> Self {
        VertexSet {
            side,
            members: BitSet::from_indices(universe, it),
        }
    }

    pub fn len(&self) -> usize {
        self.members.count()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.contains(i)
    }

    pub fn insert(&mut self, i: usize) -> bool {
        self.members.insert(i)
    }

    pub fn remove(&mut self, i: usize) -> bool {
        self.members.remove(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter()
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.members.iter().collect()
    }
}

/// Bipartite graph on sides `A = {0..n_a}` and `B = {0..n_b}`. Immutable once
/// built; both the A→B rows and the transposed B→A rows are stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    n_a: usize,
    n_b: usize,
    adj_a: Vec<BitSet>,
    adj_b: Vec<BitSet>,
    edges: usize,
}

impl BipartiteGraph {
    /// Builds the graph with the given edge set; duplicate edges collapse.
    pub fn new(n_a: usize, n_b: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut adj_a = vec![BitSet::new(n_b); n_a];
        let mut adj_b = vec![BitSet::new(n_a); n_b];
        let mut m = 0;
        for &(a, b) in edges {
            if a >= n_a || b >= n_b {
                return Err(GraphError::EdgeOutOfRange { a, b, n_a, n_b });
            }
            if adj_a[a].insert(b) {
                adj_b[b].insert(a);
                m += 1;
            }
        }
        Ok(BipartiteGraph {
            n_a,
            n_b,
            adj_a,
            adj_b,
            edges: m,
        })
    }

    /// Builds from A-side adjacency rows (each of universe `n_b`).
    pub fn from_rows(n_b: usize, rows: Vec<BitSet>) -> Self {
        let n_a = rows.len();
        let mut adj_b = vec![BitSet::new(n_a); n_b];
        let mut m = 0;
        for (a, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n_b, "row universe must equal n_b");
            for b in row.iter() {
                adj_b[b].insert(a);
                m += 1;
            }
        }
        BipartiteGraph {
            n_a,
            n_b,
            adj_a: rows,
            adj_b,
            edges: m,
        }
    }

    pub fn complete(n_a: usize, n_b: usize) -> Self {
        BipartiteGraph::from_rows(n_b, vec![BitSet::full(n_b); n_a])
    }

    pub fn size_a(&self) -> usize {
        self.n_a
    }

    pub fn size_b(&self) -> usize {
        self.n_b
    }

    pub fn side_size(&self, side: Side) -> usize {
        match side {
            Side::A => self.n_a,
            Side::B => self.n_b,
        }
    }

    pub fn is_balanced(&self) -> bool {
        self.n_a == self.n_b
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a < self.n_a && self.adj_a[a].contains(b)
    }

    /// Adjacency test for two vertices given by id; same-side pairs are never adjacent.
    pub fn adjacent(&self, u: VertexId, v: VertexId) -> bool {
        match (u.side, v.side) {
            (Side::A, Side::B) => self.has_edge(u.index, v.index),
            (Side::B, Side::A) => self.has_edge(v.index, u.index),
            _ => false,
        }
    }

    /// Neighbourhood row of `v`, a bitset over the opposite side.
    pub fn neighbours(&self, v: VertexId) -> &BitSet {
        match v.side {
            Side::A => &self.adj_a[v.index],
            Side::B => &self.adj_b[v.index],
        }
    }

    pub fn row_a(&self, a: usize) -> &BitSet {
        &self.adj_a[a]
    }

    pub fn row_b(&self, b: usize) -> &BitSet {
        &self.adj_b[b]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.neighbours(v).count()
    }

    pub fn min_degree(&self) -> usize {
        self.adj_a
            .iter()
            .chain(&self.adj_b)
            .map(BitSet::count)
            .min()
            .unwrap_or(0)
    }

    pub fn max_degree(&self) -> usize {
        self.adj_a
            .iter()
            .chain(&self.adj_b)
            .map(BitSet::count)
            .max()
            .unwrap_or(0)
    }

    /// Edges as `(a, b)` pairs in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj_a
            .iter()
            .enumerate()
            .flat_map(|(a, row)| row.iter().map(move |b| (a, b)))
    }

    fn check_set(&self, s: &VertexSet, side: Side) -> Result<(), GraphError> {
        if s.side != side {
            return Err(GraphError::SideMismatch {
                expected: side,
                found: s.side,
            });
        }
        debug_assert_eq!(s.members.len(), self.side_size(side));
        Ok(())
    }

    /// `|N(v) ∩ W|`; `W` must lie on the side opposite `v`.
    pub fn degree_into(&self, v: VertexId, w: &VertexSet) -> Result<usize, GraphError> {
        if v.index >= self.side_size(v.side) {
            return Err(GraphError::VertexOutOfRange { v });
        }
        self.check_set(w, v.side.opposite())?;
        Ok(self.neighbours(v).count_and(&w.members))
    }

    /// `e(U, W)` for an A-side `U` and B-side `W`.
    pub fn edges_between(&self, u: &VertexSet, w: &VertexSet) -> Result<usize, GraphError> {
        self.check_set(u, Side::A)?;
        self.check_set(w, Side::B)?;
        Ok(u.iter().map(|a| self.adj_a[a].count_and(&w.members)).sum())
    }

    /// `e(U, W) / (|U||W|)` exactly.
    pub fn density(&self, u: &VertexSet, w: &VertexSet) -> Result<Rational, GraphError> {
        let e = self.edges_between(u, w)?;
        let (su, sw) = (u.len(), w.len());
        if su == 0 || sw == 0 {
            return Err(GraphError::EmptySet);
        }
        Ok(Rational::new(BigInt::from(e), BigInt::from(su * sw)))
    }

    pub fn full_side(&self, side: Side) -> VertexSet {
        VertexSet::full(side, self.side_size(side))
    }

    /// The induced subgraph on `U × W`, re-indexed in increasing order.
    pub fn induced(&self, u: &[usize], w: &[usize]) -> BipartiteGraph {
        let rows = u
            .iter()
            .map(|&a| {
                BitSet::from_indices(
                    w.len(),
                    w.iter()
                        .enumerate()
                        .filter(|(_, &b)| self.has_edge(a, b))
                        .map(|(j, _)| j),
                )
            })
            .collect();
        BipartiteGraph::from_rows(w.len(), rows)
    }
}
