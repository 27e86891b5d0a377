use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::check::{
    check_regular_pair, check_super_regular_pair, degree_threshold, first_low_degree, CheckConfig,
    LowDegree, PairCertificate,
};
use super::{RegularityError, RegularityParams};
use crate::exact::Rational;
use crate::graph::{BipartiteGraph, Side, VertexId, VertexSet};
use crate::seed::{derive_seed, rng_for};

/// `A = A₀ ⊔ A₁ ⊔ … ⊔ A_k` and `B = B₀ ⊔ … ⊔ B_k`. Clusters are indexed
/// `0..k`; the exceptional sets are stored separately.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterPartition {
    pub k: usize,
    pub clusters_a: Vec<VertexSet>,
    pub clusters_b: Vec<VertexSet>,
    pub exceptional_a: VertexSet,
    pub exceptional_b: VertexSet,
}

impl ClusterPartition {
    /// Builds from index lists; every vertex not listed becomes exceptional.
    pub fn from_lists(
        n_a: usize,
        n_b: usize,
        clusters_a: &[Vec<usize>],
        clusters_b: &[Vec<usize>],
    ) -> Result<Self, RegularityError> {
        if clusters_a.len() != clusters_b.len() {
            return Err(RegularityError::InvalidPartition(
                "different numbers of A- and B-clusters".into(),
            ));
        }
        let mk = |side,
                  n,
                  lists: &[Vec<usize>]|
         -> Result<(Vec<VertexSet>, VertexSet), RegularityError> {
            let mut seen = VertexSet::empty(side, n);
            let mut out = Vec::new();
            for l in lists {
                let mut s = VertexSet::empty(side, n);
                for &v in l {
                    if v >= n || !seen.insert(v) {
                        return Err(RegularityError::InvalidPartition(format!(
                            "vertex {v} on side {side:?} repeated or out of range"
                        )));
                    }
                    s.insert(v);
                }
                out.push(s);
            }
            let exc = VertexSet::from_indices(side, n, (0..n).filter(|&v| !seen.contains(v)));
            Ok((out, exc))
        };
        let (clusters_a, exceptional_a) = mk(Side::A, n_a, clusters_a)?;
        let (clusters_b, exceptional_b) = mk(Side::B, n_b, clusters_b)?;
        Ok(ClusterPartition {
            k: clusters_a.len(),
            clusters_a,
            clusters_b,
            exceptional_a,
            exceptional_b,
        })
    }

    pub fn clusters(&self, side: Side) -> &[VertexSet] {
        match side {
            Side::A => &self.clusters_a,
            Side::B => &self.clusters_b,
        }
    }

    pub fn clusters_mut(&mut self, side: Side) -> &mut Vec<VertexSet> {
        match side {
            Side::A => &mut self.clusters_a,
            Side::B => &mut self.clusters_b,
        }
    }

    pub fn exceptional(&self, side: Side) -> &VertexSet {
        match side {
            Side::A => &self.exceptional_a,
            Side::B => &self.exceptional_b,
        }
    }

    pub fn exceptional_mut(&mut self, side: Side) -> &mut VertexSet {
        match side {
            Side::A => &mut self.exceptional_a,
            Side::B => &mut self.exceptional_b,
        }
    }

    pub fn sizes(&self, side: Side) -> Vec<usize> {
        self.clusters(side).iter().map(VertexSet::len).collect()
    }

    pub fn is_equipartition(&self) -> bool {
        let mut sizes = self.sizes(Side::A).into_iter().chain(self.sizes(Side::B));
        match sizes.next() {
            None => true,
            Some(first) => sizes.all(|s| s == first),
        }
    }

    /// Cluster index of every vertex on `side` (`None` for exceptional).
    pub fn owners(&self, side: Side) -> Vec<Option<usize>> {
        let n = self.exceptional(side).members.len();
        let mut own = vec![None; n];
        for (i, c) in self.clusters(side).iter().enumerate() {
            for v in c.iter() {
                own[v] = Some(i);
            }
        }
        own
    }

    /// Checks that the classes partition both sides.
    pub fn validate(&self, n_a: usize, n_b: usize) -> Result<(), RegularityError> {
        for (side, n) in [(Side::A, n_a), (Side::B, n_b)] {
            if self.clusters(side).len() != self.k {
                return Err(RegularityError::InvalidPartition(format!(
                    "side {side:?} has wrong cluster count"
                )));
            }
            let mut count = vec![0usize; n];
            for set in self
                .clusters(side)
                .iter()
                .chain(std::iter::once(self.exceptional(side)))
            {
                if set.side != side || set.members.len() != n {
                    return Err(RegularityError::InvalidPartition(format!(
                        "class on side {side:?} has wrong universe"
                    )));
                }
                for v in set.iter() {
                    count[v] += 1;
                }
            }
            if let Some(v) = count.iter().position(|&c| c != 1) {
                return Err(RegularityError::InvalidPartition(format!(
                    "vertex {v} on side {side:?} lies in {} classes",
                    count[v]
                )));
            }
        }
        Ok(())
    }

    /// Renumbers clusters: new `A_i` is old `A_{perm_a[i]}`, likewise for B.
    pub fn relabelled(&self, perm_a: &[usize], perm_b: &[usize]) -> ClusterPartition {
        ClusterPartition {
            k: self.k,
            clusters_a: perm_a.iter().map(|&i| self.clusters_a[i].clone()).collect(),
            clusters_b: perm_b.iter().map(|&i| self.clusters_b[i].clone()).collect(),
            exceptional_a: self.exceptional_a.clone(),
            exceptional_b: self.exceptional_b.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LabelledCertificate {
    pub i: usize,
    pub j: usize,
    pub certificate: PairCertificate,
}

/// Reduced graph on clusters `A_0..A_{k−1}`, `B_0..B_{k−1}`; an edge `(i, j)`
/// is present iff the pair `(A_i, B_j)` certified at `params`.
#[derive(Debug, Clone, Serialize)]
pub struct ReducedGraph {
    pub k: usize,
    pub edges: Vec<(usize, usize)>,
    pub params: RegularityParams,
    pub certificates: Vec<LabelledCertificate>,
}

impl ReducedGraph {
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.binary_search(&(i, j)).is_ok()
    }

    pub fn certificate(&self, i: usize, j: usize) -> Option<&PairCertificate> {
        self.certificates
            .iter()
            .find(|c| c.i == i && c.j == j)
            .map(|c| &c.certificate)
    }

    /// The reduced graph as a `k + k` bipartite graph.
    pub fn as_bipartite(&self) -> BipartiteGraph {
        BipartiteGraph::new(self.k, self.k, &self.edges).expect("reduced edges are in range")
    }

    /// Renumbers clusters consistently with [`ClusterPartition::relabelled`]:
    /// new `A_i` is old `A_{perm_a[i]}`, new `B_j` is old `B_{perm_b[j]}`.
    pub fn relabelled(&self, perm_a: &[usize], perm_b: &[usize]) -> ReducedGraph {
        let inverse = |perm: &[usize]| {
            let mut inv = vec![0; perm.len()];
            perm.iter()
                .enumerate()
                .for_each(|(new, &old)| inv[old] = new);
            inv
        };
        let (ia, ib) = (inverse(perm_a), inverse(perm_b));
        let mut edges: Vec<(usize, usize)> =
            self.edges.iter().map(|&(i, j)| (ia[i], ib[j])).collect();
        edges.sort_unstable();
        let mut certificates: Vec<LabelledCertificate> = self
            .certificates
            .iter()
            .map(|c| LabelledCertificate {
                i: ia[c.i],
                j: ib[c.j],
                certificate: c.certificate.clone(),
            })
            .collect();
        certificates.sort_by_key(|c| (c.i, c.j));
        ReducedGraph {
            k: self.k,
            edges,
            params: self.params.clone(),
            certificates,
        }
    }

    pub fn epsilon_regular_count(&self) -> usize {
        self.certificates
            .iter()
            .filter(|c| c.certificate.is_epsilon_regular())
            .count()
    }
}

/// Certifies every pair `(A_i, B_j)` (in parallel, each with its own derived
/// seed) and keeps exactly the certified ones as edges.
pub fn maximal_reduced_graph(
    g: &BipartiteGraph,
    partition: &ClusterPartition,
    params: &RegularityParams,
    cfg: &CheckConfig,
) -> Result<ReducedGraph, RegularityError> {
    let k = partition.k;
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (0..k).map(move |j| (i, j))).collect();
    let certificates = pairs
        .par_iter()
        .map(|&(i, j)| {
            let c = cfg.with_seed(derive_seed(cfg.seed, &[i as u64, j as u64]));
            check_regular_pair(
                g,
                &partition.clusters_a[i],
                &partition.clusters_b[j],
                params,
                &c,
            )
            .map(|certificate| LabelledCertificate { i, j, certificate })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let edges = certificates
        .iter()
        .filter(|c| c.certificate.certifies())
        .map(|c| (c.i, c.j))
        .collect();
    Ok(ReducedGraph {
        k,
        edges,
        params: params.clone(),
        certificates,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundLog {
    pub k: usize,
    pub action: &'static str,
    pub epsilon_regular_pairs: usize,
    pub total_pairs: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BuildReport {
    pub partition: ClusterPartition,
    pub reduced: ReducedGraph,
    pub rounds: Vec<RoundLog>,
}

/// Best partition found before the cluster budget ran out.
pub type PartitionBuildFailure = BuildReport;

const REGROUPS_PER_LEVEL: usize = 3;
const LLOYD_ROUNDS: usize = 12;

fn random_equitable(n: usize, k: usize, seed: u64) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let size = n / k;
    let mut out = Vec::new();
    for (tag, side) in [(1u64, Side::A), (2u64, Side::B)] {
        let _ = side;
        let mut rng = rng_for(seed, &[0xE9, tag]);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let mut clusters: Vec<Vec<usize>> = perm.chunks(size).take(k).map(|c| c.to_vec()).collect();
        clusters.iter_mut().for_each(|c| c.sort_unstable());
        out.push(clusters);
    }
    let b = out.pop().unwrap();
    let a = out.pop().unwrap();
    (a, b)
}

/// Balanced k-means: k-means++ seeding, then Lloyd rounds in which vertices
/// are assigned greedily (closest pairs first) subject to capacity `size`.
fn balanced_kmeans(features: &[Vec<f64>], k: usize, size: usize, seed: u64) -> Vec<Vec<usize>> {
    let n = features.len();
    let dim = features.first().map_or(0, Vec::len);
    let dist = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    let mut rng = rng_for(seed, &[0x6B]);
    let mut centres: Vec<Vec<f64>> = vec![features[rng.gen_range(0..n)].clone()];
    while centres.len() < k {
        let d2: Vec<f64> = features
            .iter()
            .map(|f| {
                centres
                    .iter()
                    .map(|c| dist(f, c))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = d2.iter().sum();
        let pick = if total <= 0.0 {
            rng.gen_range(0..n)
        } else {
            let mut r = rng.gen::<f64>() * total;
            d2.iter()
                .position(|&x| {
                    r -= x;
                    r <= 0.0
                })
                .unwrap_or(n - 1)
        };
        centres.push(features[pick].clone());
    }
    let mut assignment: Vec<Vec<usize>> = Vec::new();
    for _ in 0..LLOYD_ROUNDS {
        let mut cand: Vec<(f64, usize, usize)> = Vec::with_capacity(n * k);
        for (v, f) in features.iter().enumerate() {
            for (c, centre) in centres.iter().enumerate() {
                cand.push((dist(f, centre), v, c));
            }
        }
        cand.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        let mut placed = vec![false; n];
        let mut next: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (_, v, c) in cand {
            if !placed[v] && next[c].len() < size {
                placed[v] = true;
                next[c].push(v);
            }
        }
        next.iter_mut().for_each(|c| c.sort_unstable());
        if next == assignment {
            break;
        }
        for (c, members) in next.iter().enumerate() {
            let mut mean = vec![0.0; dim];
            for &v in members {
                for (m, x) in mean.iter_mut().zip(&features[v]) {
                    *m += x;
                }
            }
            if !members.is_empty() {
                mean.iter_mut().for_each(|m| *m /= members.len() as f64);
                centres[c] = mean;
            }
        }
        assignment = next;
    }
    assignment
}

/// Regroups both sides at the same `k` by clustering vertices on their
/// neighbour-density profile into the witness sets of irregular pairs.
fn regroup(
    g: &BipartiteGraph,
    reduced: &ReducedGraph,
    k: usize,
    size: usize,
    seed: u64,
) -> Option<(Vec<Vec<usize>>, Vec<Vec<usize>>)> {
    let witnesses: Vec<_> = reduced
        .certificates
        .iter()
        .filter_map(|c| c.certificate.witness.as_ref())
        .collect();
    if witnesses.is_empty() {
        return None;
    }
    let n = g.size_a();
    let profile = |side: Side| -> Vec<Vec<f64>> {
        (0..n)
            .map(|v| {
                let row = g.neighbours(VertexId { side, index: v });
                witnesses
                    .iter()
                    .map(|w| {
                        let target = match side {
                            Side::A => &w.b_side,
                            Side::B => &w.a_side,
                        };
                        target.iter().filter(|&&x| row.contains(x)).count() as f64
                            / target.len() as f64
                    })
                    .collect()
            })
            .collect()
    };
    let a = balanced_kmeans(&profile(Side::A), k, size, derive_seed(seed, &[1]));
    let b = balanced_kmeans(&profile(Side::B), k, size, derive_seed(seed, &[2]));
    Some((a, b))
}

/// Splits every cluster in two, members of irregularity witnesses first.
fn double(
    partition: &ClusterPartition,
    reduced: &ReducedGraph,
    n: usize,
) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let k = partition.k;
    let half = n / (2 * k);
    let mut out = Vec::new();
    for side in [Side::A, Side::B] {
        let mut lists = Vec::new();
        for (i, cluster) in partition.clusters(side).iter().enumerate() {
            let mut flagged = VertexSet::empty(side, n);
            for c in &reduced.certificates {
                let Some(w) = &c.certificate.witness else {
                    continue;
                };
                match side {
                    Side::A if c.i == i => w.a_side.iter().for_each(|&v| {
                        flagged.insert(v);
                    }),
                    Side::B if c.j == i => w.b_side.iter().for_each(|&v| {
                        flagged.insert(v);
                    }),
                    _ => {}
                }
            }
            let mut order: Vec<usize> = cluster.iter().filter(|&v| flagged.contains(v)).collect();
            order.extend(cluster.iter().filter(|&v| !flagged.contains(v)));
            lists.push(order[..half].to_vec());
            lists.push(order[half..2 * half].to_vec());
        }
        lists.iter_mut().for_each(|l| l.sort_unstable());
        out.push(lists);
    }
    let b = out.pop().unwrap();
    let a = out.pop().unwrap();
    (a, b)
}

fn enough_regular(reduced: &ReducedGraph, params: &RegularityParams) -> bool {
    // regular ≥ (1−ε)k²  ⇔  ε·k² ≥ k² − regular
    let k2 = reduced.k * reduced.k;
    let irregular = k2 - reduced.epsilon_regular_count();
    params
        .epsilon
        .scale(&Rational::from_integer(k2.into()))
        .cmp_rational(&Rational::from_integer(irregular.into()))
        .is_ge()
}

/// Witness-driven refinement: start from a random equitable partition with
/// `k0` clusters per side, certify all `k²` pairs, and until a `(1−ε)`
/// fraction is ε-regular either regroup at the same `k` by witness profiles
/// (accepted only if it improves the count) or double `k`.
pub fn build_regular_partition(
    g: &BipartiteGraph,
    params: &RegularityParams,
    k0: usize,
    kmax: usize,
    cfg: &CheckConfig,
) -> Result<BuildReport, RegularityError> {
    let n = g.size_a();
    if !g.is_balanced() || n < kmax {
        return Err(RegularityError::GraphTooSmall { n, kmax });
    }
    if k0 == 0 || k0 > kmax {
        return Err(RegularityError::BadClusterRange { k0, kmax });
    }
    let mut rounds = Vec::new();
    let mut k = k0;
    let (a, b) = random_equitable(n, k, cfg.seed);
    let mut partition = ClusterPartition::from_lists(n, n, &a, &b)?;
    let mut reduced = maximal_reduced_graph(
        g,
        &partition,
        params,
        &cfg.with_seed(derive_seed(cfg.seed, &[0])),
    )?;
    let mut round = 0u64;
    rounds.push(RoundLog {
        k,
        action: "initial",
        epsilon_regular_pairs: reduced.epsilon_regular_count(),
        total_pairs: k * k,
    });
    loop {
        if enough_regular(&reduced, params) {
            return Ok(BuildReport {
                partition,
                reduced,
                rounds,
            });
        }
        for _ in 0..REGROUPS_PER_LEVEL {
            round += 1;
            let Some((a, b)) =
                regroup(g, &reduced, k, n / k, derive_seed(cfg.seed, &[0x4E, round]))
            else {
                break;
            };
            let cand = ClusterPartition::from_lists(n, n, &a, &b)?;
            let cand_red = maximal_reduced_graph(
                g,
                &cand,
                params,
                &cfg.with_seed(derive_seed(cfg.seed, &[round])),
            )?;
            let improved = cand_red.epsilon_regular_count() > reduced.epsilon_regular_count();
            rounds.push(RoundLog {
                k,
                action: if improved {
                    "regroup-accepted"
                } else {
                    "regroup-rejected"
                },
                epsilon_regular_pairs: cand_red.epsilon_regular_count(),
                total_pairs: k * k,
            });
            if !improved {
                break;
            }
            partition = cand;
            reduced = cand_red;
            if enough_regular(&reduced, params) {
                break;
            }
        }
        if enough_regular(&reduced, params) {
            continue;
        }
        if 2 * k > kmax {
            let regular_fraction = reduced.epsilon_regular_count() as f64 / (k * k) as f64;
            return Err(RegularityError::KmaxExceeded {
                kmax,
                regular_fraction,
                needed: 1.0 - params.epsilon.to_f64(),
                best: Box::new(BuildReport {
                    partition,
                    reduced,
                    rounds,
                }),
            });
        }
        let (a, b) = double(&partition, &reduced, n);
        k *= 2;
        round += 1;
        partition = ClusterPartition::from_lists(n, n, &a, &b)?;
        reduced = maximal_reduced_graph(
            g,
            &partition,
            params,
            &cfg.with_seed(derive_seed(cfg.seed, &[round])),
        )?;
        rounds.push(RoundLog {
            k,
            action: "double",
            epsilon_regular_pairs: reduced.epsilon_regular_count(),
            total_pairs: k * k,
        });
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RStarCertificate {
    pub i: usize,
    pub j: usize,
    pub certificate: PairCertificate,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuperRegularizeReport {
    pub partition: ClusterPartition,
    /// Vertices moved to the exceptional sets for having too few neighbours.
    pub removed_low_degree: Vec<VertexId>,
    /// Vertices moved to the exceptional sets to re-equalise cluster sizes.
    pub trimmed: Vec<VertexId>,
    /// First violation of the degree condition at the weakened `d` per R*-pair.
    pub degree_violations: Vec<(usize, usize, LowDegree)>,
    /// Super-regularity certificates of all R*-pairs at the weakened params.
    pub certificates: Vec<RStarCertificate>,
    pub all_certified: bool,
}

/// Moves every vertex with fewer than `(d−ε)|partner|` neighbours into an
/// R*-partner cluster to the exceptional sets, trims all clusters to the
/// common minimum size (fewest R*-neighbours first, then lowest index), and
/// repeats until stable. The R*-pairs are then re-certified at `weak`.
#[allow(clippy::too_many_arguments)]
pub fn super_regularize(
    g: &BipartiteGraph,
    partition: &ClusterPartition,
    r: &ReducedGraph,
    r_star: &[(usize, usize)],
    max_degree: usize,
    weak: &RegularityParams,
    exceptional_bound: usize,
    cfg: &CheckConfig,
) -> Result<SuperRegularizeReport, RegularityError> {
    let k = partition.k;
    let mut deg_a = vec![0usize; k];
    let mut deg_b = vec![0usize; k];
    for &(i, j) in r_star {
        if !r.has_edge(i, j) {
            return Err(RegularityError::RStarNotInR(i, j));
        }
        deg_a[i] += 1;
        deg_b[j] += 1;
    }
    let found = deg_a.iter().chain(&deg_b).copied().max().unwrap_or(0);
    if found > max_degree {
        return Err(RegularityError::RStarDegree {
            found,
            allowed: max_degree,
        });
    }
    let factor = r.params.d.sub(&r.params.epsilon);
    let mut p = partition.clone();
    let mut removed = Vec::new();
    let mut trimmed = Vec::new();
    let check_bound = |p: &ClusterPartition, pair: (usize, usize)| -> Result<(), RegularityError> {
        for side in [Side::A, Side::B] {
            let size = p.exceptional(side).len();
            if size > exceptional_bound {
                return Err(RegularityError::ExceptionalOverflow {
                    side,
                    size,
                    bound: exceptional_bound,
                    pair,
                });
            }
        }
        Ok(())
    };
    loop {
        let mut changed = false;
        for &(i, j) in r_star {
            let need_a = degree_threshold(&factor, p.clusters_b[j].len());
            let need_b = degree_threshold(&factor, p.clusters_a[i].len());
            let low_a: Vec<usize> = p.clusters_a[i]
                .iter()
                .filter(|&a| g.row_a(a).count_and(&p.clusters_b[j].members) < need_a)
                .collect();
            let low_b: Vec<usize> = p.clusters_b[j]
                .iter()
                .filter(|&b| g.row_b(b).count_and(&p.clusters_a[i].members) < need_b)
                .collect();
            for a in low_a {
                p.clusters_a[i].remove(a);
                p.exceptional_a.insert(a);
                removed.push(VertexId::a(a));
                changed = true;
            }
            for b in low_b {
                p.clusters_b[j].remove(b);
                p.exceptional_b.insert(b);
                removed.push(VertexId::b(b));
                changed = true;
            }
            check_bound(&p, (i, j))?;
        }
        if changed {
            continue;
        }
        let target = p
            .sizes(Side::A)
            .into_iter()
            .chain(p.sizes(Side::B))
            .min()
            .unwrap_or(0);
        for side in [Side::A, Side::B] {
            for c in 0..k {
                let excess = p.clusters(side)[c].len() - target;
                if excess == 0 {
                    continue;
                }
                let partners: Vec<usize> = r_star
                    .iter()
                    .filter_map(|&(i, j)| match side {
                        Side::A if i == c => Some(j),
                        Side::B if j == c => Some(i),
                        _ => None,
                    })
                    .collect();
                let mut scored: Vec<(usize, usize)> = p.clusters(side)[c]
                    .iter()
                    .map(|v| {
                        let row = g.neighbours(VertexId { side, index: v });
                        let s = partners
                            .iter()
                            .map(|&q| row.count_and(&p.clusters(side.opposite())[q].members))
                            .sum();
                        (s, v)
                    })
                    .collect();
                scored.sort_unstable();
                for &(_, v) in &scored[..excess] {
                    p.clusters_mut(side)[c].remove(v);
                    p.exceptional_mut(side).insert(v);
                    trimmed.push(VertexId { side, index: v });
                }
                changed = true;
                let pair = r_star
                    .iter()
                    .copied()
                    .find(|&(i, j)| if side == Side::A { i == c } else { j == c })
                    .unwrap_or((c, c));
                check_bound(&p, pair)?;
            }
        }
        if !changed {
            break;
        }
    }
    let degree_violations = r_star
        .iter()
        .filter_map(|&(i, j)| {
            first_low_degree(g, &p.clusters_a[i], &p.clusters_b[j], &weak.d).map(|l| (i, j, l))
        })
        .collect();
    let certificates = r_star
        .par_iter()
        .map(|&(i, j)| {
            let c = cfg.with_seed(derive_seed(cfg.seed, &[0x5E, i as u64, j as u64]));
            check_super_regular_pair(g, &p.clusters_a[i], &p.clusters_b[j], weak, &c)
                .map(|certificate| RStarCertificate { i, j, certificate })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let all_certified = certificates.iter().all(|c| c.certificate.certifies());
    Ok(SuperRegularizeReport {
        partition: p,
        removed_low_degree: removed,
        trimmed,
        degree_violations,
        certificates,
        all_certified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    /// Disjoint complete blocks `K_{m,m}` on `{bm..(b+1)m}` per side.
    fn blocks(k: usize, m: usize) -> BipartiteGraph {
        let mut edges = vec![];
        for blk in 0..k {
            for a in 0..m {
                for b in 0..m {
                    edges.push((blk * m + a, blk * m + b));
                }
            }
        }
        BipartiteGraph::new(k * m, k * m, &edges).unwrap()
    }

    fn block_partition(k: usize, m: usize) -> ClusterPartition {
        let lists: Vec<Vec<usize>> = (0..k).map(|b| (b * m..(b + 1) * m).collect()).collect();
        ClusterPartition::from_lists(k * m, k * m, &lists, &lists).unwrap()
    }

    #[test]
    fn planted_blocks_recovered() {
        let g = blocks(2, 128);
        let params = RegularityParams::new(rat(1, 4), rat(1, 2)).unwrap();
        let rep = build_regular_partition(&g, &params, 2, 2, &CheckConfig::default()).unwrap();
        assert_eq!(rep.reduced.edges.len(), 2);
        for &(i, j) in &rep.reduced.edges {
            assert_eq!(
                rep.reduced.certificate(i, j).unwrap().base_density,
                rat(1, 1)
            );
        }
        rep.partition.validate(256, 256).unwrap();
    }

    #[test]
    fn maximal_on_planted_and_empty() {
        let g = blocks(2, 8);
        let p = block_partition(2, 8);
        let params = RegularityParams::new(rat(1, 4), rat(1, 2)).unwrap();
        let r = maximal_reduced_graph(&g, &p, &params, &CheckConfig::exhaustive()).unwrap();
        assert_eq!(r.edges, vec![(0, 0), (1, 1)]);
        let e = BipartiteGraph::new(16, 16, &[]).unwrap();
        let r = maximal_reduced_graph(&e, &p, &params, &CheckConfig::exhaustive()).unwrap();
        assert!(r.edges.is_empty());
    }

    #[test]
    fn super_regularize_planted_is_identity() {
        let g = blocks(2, 8);
        let p = block_partition(2, 8);
        let params = RegularityParams::new(rat(1, 4), rat(1, 2)).unwrap();
        let r = maximal_reduced_graph(&g, &p, &params, &CheckConfig::exhaustive()).unwrap();
        let weak = RegularityParams::new(rat(1, 4), rat(1, 4)).unwrap();
        let rep = super_regularize(
            &g,
            &p,
            &r,
            &[(0, 0), (1, 1)],
            2,
            &weak,
            4,
            &CheckConfig::exhaustive(),
        )
        .unwrap();
        assert_eq!(rep.partition, p);
        assert!(rep.all_certified);
    }

    #[test]
    fn super_regularize_moves_isolated_vertex() {
        // Vertex A0 loses all its edges.
        let full = blocks(2, 8);
        let edges: Vec<_> = full.edges().filter(|&(a, _)| a != 0).collect();
        let g = BipartiteGraph::new(16, 16, &edges).unwrap();
        let p = block_partition(2, 8);
        let params = RegularityParams::new(rat(3, 8), rat(1, 2)).unwrap();
        let r = maximal_reduced_graph(&g, &p, &params, &CheckConfig::exhaustive()).unwrap();
        assert!(r.has_edge(0, 0) && r.has_edge(1, 1));
        let weak = RegularityParams::new(rat(3, 8), rat(1, 8)).unwrap();
        let rep = super_regularize(
            &g,
            &p,
            &r,
            &[(0, 0), (1, 1)],
            2,
            &weak,
            4,
            &CheckConfig::exhaustive(),
        )
        .unwrap();
        assert_eq!(rep.removed_low_degree, vec![VertexId::a(0)]);
        assert_eq!(rep.trimmed.len(), 3);
        assert!(rep.partition.is_equipartition());
        assert_eq!(rep.partition.sizes(Side::A), vec![7, 7]);
        assert!(rep.degree_violations.is_empty());
    }

    #[test]
    fn exceptional_bound_enforced() {
        let full = blocks(2, 8);
        let edges: Vec<_> = full.edges().filter(|&(a, _)| a != 0).collect();
        let g = BipartiteGraph::new(16, 16, &edges).unwrap();
        let p = block_partition(2, 8);
        let params = RegularityParams::new(rat(3, 8), rat(1, 2)).unwrap();
        let r = maximal_reduced_graph(&g, &p, &params, &CheckConfig::exhaustive()).unwrap();
        let weak = params.clone();
        let res = super_regularize(
            &g,
            &p,
            &r,
            &[(0, 0), (1, 1)],
            2,
            &weak,
            0,
            &CheckConfig::exhaustive(),
        );
        assert!(matches!(
            res,
            Err(RegularityError::ExceptionalOverflow { pair: (0, 0), .. })
        ));
    }
}
