//! Turning a dense host into clusters `A_0…A_{k−1}`, `B_0…B_{k−1}` with
//! `(A_i, B_i)` super-regular and `(A_i, B_{i+1})` regular, whose sizes can
//! afterwards be adjusted to any requested nearby values.
//!
//! Phase 1 builds a regular partition, walks a Hamilton cycle of its reduced
//! graph, makes the cycle pairs super-regular and absorbs the exceptional
//! vertices; phase 2 redistributes vertices along the cycle to hit requested
//! cluster sizes exactly.

use rayon::prelude::*;
use serde::Serialize;

use crate::bitset::BitSet;
use crate::exact::{rat, rat_usize, Rational, Surd};
use crate::graph::{BipartiteGraph, Side, VertexId};
use crate::hamilton::{find_hamilton_cycle, HamiltonError, HamiltonMode};
use crate::instances::min_degree_required;
use crate::regularity::{
    build_regular_partition, check_regular_pair, check_super_regular_pair, degree_threshold,
    rebound_after_perturbation, super_regularize, CheckConfig, ClusterPartition, PairCertificate,
    RegularityError, RegularityParams, RoundLog, SuperRegularizeReport,
};
use crate::seed::derive_seed;

#[derive(Debug, thiserror::Error)]
pub enum PartitionerError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("schedule inequality fails: {0}")]
    Inequality(String),
    #[error("exceptional pair ({x}, {y}) has no candidate cluster")]
    EmptyCandidateSet { x: VertexId, y: VertexId },
    #[error("no eligible vertex to move out of {side:?}-cluster {cluster}")]
    NoEligibleVertex { side: Side, cluster: usize },
    #[error("stage {stage}: {source}")]
    Regularity {
        stage: &'static str,
        #[source]
        source: RegularityError,
    },
    #[error("stage reduced-degree: δ(R) = {min_degree} but a Hamilton cycle needs {required}")]
    ReducedDegree { min_degree: usize, required: usize },
    #[error("stage hamilton: {0}")]
    Hamilton(#[from] HamiltonError),
}

pub type Result<T> = std::result::Result<T, PartitionerError>;

fn stage(stage: &'static str) -> impl FnOnce(RegularityError) -> PartitionerError {
    move |source| PartitionerError::Regularity { stage, source }
}

fn zero() -> Rational {
    Rational::from_integer(0.into())
}

fn one() -> Rational {
    Rational::from_integer(1.into())
}

// ---------------------------------------------------------------------------
// Parameter schedule

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleMode {
    /// Constants derived by the closed forms of the proof.
    Faithful,
    /// User-supplied constants that are runnable at desk scale.
    Practical,
}

/// Optional practical-mode values; unset fields fall back to defaults.
#[derive(Debug, Clone, Default)]
pub struct ScheduleOverrides {
    /// Density used when building the regular partition (default 3/10).
    pub d: Option<Rational>,
    /// Size slack accepted by phase 2 (default 1/4).
    pub xi_lg: Option<Rational>,
    /// `(ε″, d″)` for super-regularization and absorption (default `(ε, d − ε)`).
    pub weak: Option<(Rational, Rational)>,
    /// Density for the final certificates (default `d − ε`).
    pub target_d: Option<Rational>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InequalityCheck {
    pub name: &'static str,
    pub holds: bool,
}

/// All constants of the host-side construction. In practical mode the fields
/// are overrides and `provenance` says so.
#[derive(Debug, Clone, Serialize)]
pub struct ParameterSchedule {
    pub mode: ScheduleMode,
    pub provenance: &'static str,
    #[serde(with = "crate::exact::rational_str")]
    pub gamma: Rational,
    pub max_degree: usize,
    #[serde(with = "crate::exact::rational_str")]
    pub epsilon: Rational,
    pub k0: usize,
    pub kmax: usize,
    #[serde(with = "crate::exact::rational_str")]
    pub d_lg: Rational,
    #[serde(with = "crate::exact::rational_str")]
    pub eps_prime: Rational,
    #[serde(with = "crate::exact::rational_str")]
    pub d_prime: Rational,
    #[serde(with = "crate::exact::rational_str")]
    pub eps_dprime: Rational,
    #[serde(with = "crate::exact::rational_str")]
    pub d_dprime: Rational,
    pub eps_hat: Surd,
    #[serde(with = "crate::exact::rational_str")]
    pub d_hat: Rational,
    #[serde(with = "crate::exact::rational_str")]
    pub xi_lg: Rational,
    #[serde(with = "crate::exact::rational_str")]
    pub xi_lh: Rational,
    /// Least `k ≥ k0` with `(γ − d′ − ε″)k ≥ 1` (faithful mode), else `k0`.
    pub k0_prime: usize,
    pub checks: Vec<InequalityCheck>,
}

impl ParameterSchedule {
    /// `(ε′, d′)`: parameters of the regular partition.
    pub fn build_params(&self) -> std::result::Result<RegularityParams, RegularityError> {
        RegularityParams::new(self.eps_prime.clone(), self.d_prime.clone())
    }

    /// `(ε″, d″)`: parameters after super-regularization.
    pub fn weak_params(&self) -> std::result::Result<RegularityParams, RegularityError> {
        RegularityParams::new(
            self.eps_dprime.clone().min(one()),
            self.d_dprime.clone().max(zero()),
        )
    }

    /// `(ε̂, d̂)`: parameters after absorbing the exceptional vertices.
    pub fn hat_params(&self) -> std::result::Result<RegularityParams, RegularityError> {
        RegularityParams::from_surds(
            self.eps_hat.min_rational(&one()),
            Surd::from(self.d_hat.clone().max(zero())),
        )
    }

    /// `(ε, d_lg)`: parameters promised for the final clusters.
    pub fn target_params(&self) -> std::result::Result<RegularityParams, RegularityError> {
        RegularityParams::new(
            self.epsilon.clone().min(one()),
            self.d_lg.clone().max(zero()),
        )
    }
}

/// Derives the schedule. Faithful mode needs `0 < γ < 1/20` and
/// `0 < ε ≤ γ²/1000` and fails naming the first violated inequality;
/// practical mode takes `ε` and the overrides as given.
pub fn derive_parameter_schedule(
    gamma: &Rational,
    max_degree: usize,
    epsilon: &Rational,
    k0: usize,
    kmax: usize,
    mode: ScheduleMode,
    overrides: &ScheduleOverrides,
) -> Result<ParameterSchedule> {
    let pre = |m: String| Err(PartitionerError::Precondition(m));
    if k0 < 2 || k0 > kmax {
        return pre(format!("need 2 ≤ k0 ≤ kmax, got k0 = {k0}, kmax = {kmax}"));
    }
    if max_degree == 0 {
        return pre("Δ must be positive".into());
    }
    if *epsilon <= zero() || *epsilon > one() {
        return pre(format!("ε = {epsilon} must lie in (0, 1]"));
    }
    match mode {
        ScheduleMode::Faithful => faithful_schedule(gamma, max_degree, epsilon, k0, kmax),
        ScheduleMode::Practical => {
            if *gamma < zero() || *gamma >= rat(1, 2) {
                return pre(format!("γ = {gamma} must lie in [0, 1/2)"));
            }
            let d = overrides.d.clone().unwrap_or_else(|| rat(3, 10));
            let target_d = overrides
                .target_d
                .clone()
                .unwrap_or_else(|| (&d - epsilon).max(zero()));
            let (eps_w, d_w) = overrides
                .weak
                .clone()
                .unwrap_or_else(|| (epsilon.clone(), target_d.clone()));
            let xi_lg = overrides.xi_lg.clone().unwrap_or_else(|| rat(1, 4));
            Ok(ParameterSchedule {
                mode,
                provenance: "practical-overrides",
                gamma: gamma.clone(),
                max_degree,
                epsilon: epsilon.clone(),
                k0,
                kmax,
                d_lg: target_d.clone(),
                eps_prime: epsilon.clone(),
                d_prime: d,
                eps_dprime: eps_w,
                d_dprime: d_w,
                eps_hat: Surd::from(epsilon.clone()),
                d_hat: target_d,
                xi_lh: xi_lg.clone(),
                xi_lg,
                k0_prime: k0,
                checks: Vec::new(),
            })
        }
    }
}

fn faithful_schedule(
    gamma: &Rational,
    max_degree: usize,
    epsilon: &Rational,
    k0: usize,
    kmax: usize,
) -> Result<ParameterSchedule> {
    let pre = |m: String| Err(PartitionerError::Precondition(m));
    if *gamma <= zero() || *gamma >= rat(1, 20) {
        return pre(format!("faithful mode needs 0 < γ < 1/20, got γ = {gamma}"));
    }
    if *epsilon > gamma * gamma / rat_usize(1000) {
        return pre(format!(
            "faithful mode needs ε ≤ γ²/1000, got ε = {epsilon}"
        ));
    }
    let two = rat_usize(2);
    let four = rat_usize(4);
    let d_lg = gamma * gamma / rat_usize(100);
    let eps_prime = epsilon * epsilon * epsilon * gamma * gamma * gamma;
    let d_prime = epsilon + gamma * gamma;
    let eps_dprime = &eps_prime / (one() - &two * &eps_prime);
    let d_dprime = &d_prime - &four * &eps_prime;
    let alpha = &eps_dprime / (gamma * (one() - &eps_dprime));
    let eps_hat = Surd::term(rat_usize(6), alpha.clone()).add_rational(&eps_dprime);
    let d_hat = &d_dprime - &four * &alpha;
    let slack = gamma - &d_prime - &eps_dprime;
    let checks = vec![
        InequalityCheck {
            name: "eps_hat <= eps/10",
            holds: eps_hat.cmp_rational(&(epsilon / rat_usize(10))).is_le(),
        },
        InequalityCheck {
            name: "d_hat - eps >= 2 d_lg",
            holds: &d_hat - epsilon >= &two * &d_lg,
        },
        InequalityCheck {
            name: "gamma - d' - eps'' > 0",
            holds: slack > zero(),
        },
        InequalityCheck {
            name: "(1/2 + gamma - eps'')/(1 - d'') >= 1/2 + 2 gamma/3",
            holds: (rat(1, 2) + gamma - &eps_dprime) / (one() - &d_dprime)
                >= rat(1, 2) + rat(2, 3) * gamma,
        },
        InequalityCheck {
            name: "d''/(1 - d'') <= gamma/6",
            holds: &d_dprime / (one() - &d_dprime) <= gamma / rat_usize(6),
        },
    ];
    if let Some(c) = checks.iter().find(|c| !c.holds) {
        return Err(PartitionerError::Inequality(c.name.to_string()));
    }
    let k_needed = (one() / &slack).ceil().to_integer();
    let k0_prime = usize::try_from(k_needed)
        .map(|k| k.max(k0))
        .unwrap_or(usize::MAX);
    // ξ_lg with 100·K₀·√ξ ≤ ε/10 and 100·K₀²·√ξ ≤ d_lg, taking K₀ = kmax.
    let k = rat_usize(kmax);
    let root = (epsilon / (rat_usize(1000) * &k)).min(&d_lg / (rat_usize(100) * &k * &k));
    let xi_lg = &root * &root;
    let xi_lh = &xi_lg * epsilon / (rat_usize(100 * max_degree) * &k * &k);
    Ok(ParameterSchedule {
        mode: ScheduleMode::Faithful,
        provenance: "paper-constants",
        gamma: gamma.clone(),
        max_degree,
        epsilon: epsilon.clone(),
        k0,
        kmax,
        d_lg,
        eps_prime,
        d_prime,
        eps_dprime,
        d_dprime,
        eps_hat,
        d_hat,
        xi_lg,
        xi_lh,
        k0_prime,
        checks,
    })
}

// ---------------------------------------------------------------------------
// Absorption of exceptional vertices

/// `I(x, y)`: clusters `i` with `|N(x) ∩ B_i| ≥ d″|B_i|` and `|N(y) ∩ A_i| ≥ d″|A_i|`.
pub fn candidate_index_set(
    g: &BipartiteGraph,
    x: usize,
    y: usize,
    partition: &ClusterPartition,
    d: &Surd,
) -> Vec<usize> {
    (0..partition.k)
        .filter(|&i| {
            let (ai, bi) = (&partition.clusters_a[i], &partition.clusters_b[i]);
            g.row_a(x).count_and(&bi.members) >= degree_threshold(d, bi.len())
                && g.row_b(y).count_and(&ai.members) >= degree_threshold(d, ai.len())
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Placement {
    pub x: usize,
    pub y: usize,
    pub cluster: usize,
    pub candidates: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct AbsorptionReport {
    pub partition: ClusterPartition,
    pub placements: Vec<Placement>,
    /// Vertices received per cluster pair.
    pub gains: Vec<usize>,
    /// `⌈|A₀|/(γk)⌉`.
    pub gain_bound: usize,
    pub within_gain_bound: bool,
    /// Whether every pair had `|I(x, y)| ≥ γk`.
    pub candidate_claim_holds: bool,
    /// Largest gain relative to the smallest cluster before absorption.
    #[serde(with = "crate::exact::rational_str")]
    pub alpha: Rational,
}

/// Pairs the exceptional vertices (both sides sorted by index, zipped) and
/// moves each pair `(x, y)` into the pair `(A_i, B_i)`, `i ∈ I(x, y)`, that has
/// received the fewest vertices so far (lowest index on ties). `I(x, y)` is
/// evaluated on the partition as given.
pub fn absorb_exceptional_vertices(
    g: &BipartiteGraph,
    partition: &ClusterPartition,
    d: &Surd,
    gamma: &Rational,
) -> Result<AbsorptionReport> {
    let (ea, eb) = (
        partition.exceptional_a.to_vec(),
        partition.exceptional_b.to_vec(),
    );
    if ea.len() != eb.len() {
        return Err(PartitionerError::Precondition(format!(
            "exceptional sets differ in size: |A₀| = {}, |B₀| = {}",
            ea.len(),
            eb.len()
        )));
    }
    if *gamma <= zero() {
        return Err(PartitionerError::Precondition("γ must be positive".into()));
    }
    let k = partition.k;
    let gk = gamma * rat_usize(k);
    let gain_bound = if ea.is_empty() {
        0
    } else {
        usize::try_from((rat_usize(ea.len()) / &gk).ceil().to_integer()).unwrap_or(usize::MAX)
    };
    let mut out = partition.clone();
    let mut gains = vec![0usize; k];
    let mut placements = Vec::with_capacity(ea.len());
    let mut claim = true;
    for (&x, &y) in ea.iter().zip(&eb) {
        let cand = candidate_index_set(g, x, y, partition, d);
        claim &= rat_usize(cand.len()) >= gk;
        let &i = cand.iter().min_by_key(|&&i| (gains[i], i)).ok_or(
            PartitionerError::EmptyCandidateSet {
                x: VertexId::a(x),
                y: VertexId::b(y),
            },
        )?;
        out.exceptional_a.remove(x);
        out.exceptional_b.remove(y);
        out.clusters_a[i].insert(x);
        out.clusters_b[i].insert(y);
        gains[i] += 1;
        placements.push(Placement {
            x,
            y,
            cluster: i,
            candidates: cand.len(),
        });
    }
    let smallest = partition
        .sizes(Side::A)
        .into_iter()
        .chain(partition.sizes(Side::B))
        .min()
        .unwrap_or(0);
    let max_gain = gains.iter().copied().max().unwrap_or(0);
    let alpha = if smallest == 0 {
        zero()
    } else {
        rat_usize(max_gain) / rat_usize(smallest)
    };
    Ok(AbsorptionReport {
        partition: out,
        placements,
        within_gain_bound: max_gain <= gain_bound,
        gains,
        gain_bound,
        candidate_claim_holds: claim,
        alpha,
    })
}

// ---------------------------------------------------------------------------
// Redistribution along the cycle

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Move {
    pub side: Side,
    pub vertex: usize,
    pub from: usize,
    pub to: usize,
}

/// One source-to-sink walk: A-vertices travel `i → i+1`, B-vertices `i → i−1`.
#[derive(Debug, Clone, Serialize)]
pub struct Iteration {
    pub side: Side,
    pub source: usize,
    pub sink: usize,
    pub moves: Vec<Move>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RedistributionReport {
    pub partition: ClusterPartition,
    pub iterations: Vec<Iteration>,
    /// `kξn`, the bound on the number of iterations.
    #[serde(with = "crate::exact::rational_str")]
    pub move_bound: Rational,
    pub within_move_bound: bool,
    /// `(ε′ + 100k√ξ, d′ − 100k²√ξ − ε′)`, clamped, when representable.
    pub conclusion: Option<RegularityParams>,
    /// Whether the size preconditions `ξ ≤ 1/(20k²)` and `|A′_i|, |B′_i| ≥ n/(2k)` were enforced.
    pub bounds_enforced: bool,
}

impl RedistributionReport {
    pub fn move_count(&self) -> usize {
        self.iterations.iter().map(|it| it.moves.len()).sum()
    }
}

/// Moves vertices along the cycle until `|A_i| = |A′_i| + a′_i` and
/// `|B_i| = |B′_i| + b′_i`. Sources are served lowest index first; each step
/// moves the lowest-index eligible vertex: it must have at least `d′|P|`
/// neighbours in its new partner cluster `P`, and its removal must not push
/// any neighbour in its old partner cluster below `⌈d′(|C| − 1)⌉`
/// neighbours in the shrunken cluster `C`.
///
/// `a′_i, b′_i ≤ ξn` and zero sums are always required; with
/// `enforce_bounds` also `ξ ≤ 1/(20k²)` and cluster sizes `≥ n/(2k)`.
pub fn redistribute_cluster_sizes(
    g: &BipartiteGraph,
    partition: &ClusterPartition,
    deltas_a: &[i64],
    deltas_b: &[i64],
    xi: &Rational,
    params: &RegularityParams,
    enforce_bounds: bool,
) -> Result<RedistributionReport> {
    let pre = |m: String| Err(PartitionerError::Precondition(m));
    let k = partition.k;
    let n = g.size_a();
    if deltas_a.len() != k || deltas_b.len() != k {
        return pre(format!("need {k} deltas per side"));
    }
    if !partition.exceptional_a.is_empty() || !partition.exceptional_b.is_empty() {
        return pre("partition must have empty exceptional sets".into());
    }
    let slack = xi * rat_usize(n);
    for (side, deltas) in [(Side::A, deltas_a), (Side::B, deltas_b)] {
        if deltas.iter().sum::<i64>() != 0 {
            return pre(format!("{side:?}-deltas do not sum to zero"));
        }
        let sizes = partition.sizes(side);
        for (i, &d) in deltas.iter().enumerate() {
            if Rational::from_integer(d.into()) > slack {
                return pre(format!(
                    "{side:?}-delta {d} at cluster {i} exceeds ξn = {slack}"
                ));
            }
            if sizes[i] as i64 + d < 0 {
                return pre(format!("{side:?}-cluster {i} would get negative size"));
            }
            if enforce_bounds && 2 * k * sizes[i] < n {
                return pre(format!(
                    "{side:?}-cluster {i} has size {} < n/(2k)",
                    sizes[i]
                ));
            }
        }
    }
    if enforce_bounds && *xi > rat(1, 20) / rat_usize(k * k) {
        return pre(format!("ξ = {xi} exceeds 1/(20k²)"));
    }
    let mut part = partition.clone();
    let mut iterations = Vec::new();
    for (side, deltas) in [(Side::A, deltas_a), (Side::B, deltas_b)] {
        let target: Vec<i64> = part
            .sizes(side)
            .iter()
            .zip(deltas)
            .map(|(&s, &d)| s as i64 + d)
            .collect();
        let step = if side == Side::A { 1 } else { k - 1 };
        while let Some(source) = (0..k).find(|&i| part.clusters(side)[i].len() as i64 > target[i]) {
            let mut moves = Vec::new();
            let mut cur = source;
            loop {
                let next = (cur + step) % k;
                let v = eligible_vertex(g, &part, side, cur, next, &params.d)
                    .ok_or(PartitionerError::NoEligibleVertex { side, cluster: cur })?;
                part.clusters_mut(side)[cur].remove(v);
                part.clusters_mut(side)[next].insert(v);
                moves.push(Move {
                    side,
                    vertex: v,
                    from: cur,
                    to: next,
                });
                if part.clusters(side)[next].len() as i64 <= target[next] {
                    iterations.push(Iteration {
                        side,
                        source,
                        sink: next,
                        moves,
                    });
                    break;
                }
                cur = next;
                assert!(moves.len() <= k, "a walk must reach a sink within k steps");
            }
        }
    }
    let move_bound = rat_usize(k) * &slack;
    let within_move_bound = rat_usize(iterations.len()) <= move_bound;
    Ok(RedistributionReport {
        partition: part,
        iterations,
        move_bound,
        within_move_bound,
        conclusion: adjust_conclusion(params, k, xi),
        bounds_enforced: enforce_bounds,
    })
}

/// Lowest-index vertex of `side`-cluster `cur` that may move to cluster `next`.
fn eligible_vertex(
    g: &BipartiteGraph,
    part: &ClusterPartition,
    side: Side,
    cur: usize,
    next: usize,
    d: &Surd,
) -> Option<usize> {
    let other = side.opposite();
    let here = &part.clusters(side)[cur];
    let old_partner = &part.clusters(other)[cur];
    let new_partner = &part.clusters(other)[next];
    let need_new = degree_threshold(d, new_partner.len());
    let need_old = degree_threshold(d, here.len().saturating_sub(1));
    let tight = BitSet::from_indices(
        old_partner.members.len(),
        old_partner.iter().filter(|&p| {
            g.neighbours(VertexId {
                side: other,
                index: p,
            })
            .count_and(&here.members)
                < need_old + 1
        }),
    );
    here.iter().find(|&v| {
        let row = g.neighbours(VertexId { side, index: v });
        row.count_and(&new_partner.members) >= need_new && !row.intersects(&tight)
    })
}

fn adjust_conclusion(
    params: &RegularityParams,
    k: usize,
    xi: &Rational,
) -> Option<RegularityParams> {
    let eps = params
        .epsilon
        .checked_add(&Surd::term(rat_usize(100 * k), xi.clone()))?;
    let d = params
        .d
        .checked_add(&Surd::term(-rat_usize(100 * k * k), xi.clone()))?
        .checked_add(&params.epsilon.neg())?;
    RegularityParams::from_surds(
        eps.min_rational(&one()),
        d.max_rational(&zero()).min_rational(&one()),
    )
    .ok()
}

// ---------------------------------------------------------------------------
// The two phases

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CyclePairKind {
    /// `(A_i, B_i)`, required super-regular.
    Matching,
    /// `(A_i, B_{i+1})`, required regular.
    Link,
}

#[derive(Debug, Clone, Serialize)]
pub struct CyclePairCertificate {
    pub kind: CyclePairKind,
    pub i: usize,
    pub j: usize,
    pub certificate: PairCertificate,
}

/// Certifies all `2k` cycle pairs in parallel: `(A_i, B_i)` super-regular and
/// `(A_i, B_{i+1})` regular at `params`.
pub fn certify_cycle_pairs(
    g: &BipartiteGraph,
    partition: &ClusterPartition,
    params: &RegularityParams,
    cfg: &CheckConfig,
) -> std::result::Result<Vec<CyclePairCertificate>, RegularityError> {
    let k = partition.k;
    let jobs: Vec<(CyclePairKind, usize, usize)> = (0..k)
        .flat_map(|i| {
            [
                (CyclePairKind::Matching, i, i),
                (CyclePairKind::Link, i, (i + 1) % k),
            ]
        })
        .collect();
    jobs.into_par_iter()
        .map(|(kind, i, j)| {
            let c = cfg.with_seed(derive_seed(cfg.seed, &[0xC7C1, i as u64, j as u64]));
            let (u, w) = (&partition.clusters_a[i], &partition.clusters_b[j]);
            let certificate = match kind {
                CyclePairKind::Matching => check_super_regular_pair(g, u, w, params, &c)?,
                CyclePairKind::Link => check_regular_pair(g, u, w, params, &c)?,
            };
            Ok(CyclePairCertificate {
                kind,
                i,
                j,
                certificate,
            })
        })
        .collect()
}

pub fn all_certified(certs: &[CyclePairCertificate]) -> bool {
    certs.iter().all(|c| c.certificate.certifies())
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub check: CheckConfig,
    pub hamilton_mode: HamiltonMode,
    pub seed: u64,
    /// Fail when the reduced graph misses the Hamilton-cycle degree bound.
    pub require_reduced_degree: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            check: CheckConfig::default(),
            hamilton_mode: HamiltonMode::Auto,
            seed: 0,
            require_reduced_degree: true,
        }
    }
}

/// Output of phase 1: clusters ordered along the cycle with target sizes `n_i`.
#[derive(Debug, Clone, Serialize)]
pub struct LemmaGState {
    pub schedule: ParameterSchedule,
    pub k: usize,
    pub partition: ClusterPartition,
    /// `n_i = |A_i| = |B_i|`.
    pub targets: Vec<usize>,
    pub build_rounds: Vec<RoundLog>,
    pub reduced_edges: usize,
    pub reduced_min_degree: usize,
    /// The Hamilton cycle of the reduced graph in the original cluster labels.
    pub cycle: Vec<VertexId>,
    /// New `A_i` is old `A_{perm_a[i]}`; likewise for B.
    pub perm_a: Vec<usize>,
    pub perm_b: Vec<usize>,
    pub super_regular: SuperRegularizeReport,
    pub absorption: AbsorptionReport,
    /// Weak parameters re-bounded by the absorption fraction.
    pub absorbed_params: Option<RegularityParams>,
    /// Cycle-pair certificates at `(ε̂, d̂)`.
    pub certificates: Vec<CyclePairCertificate>,
}

impl LemmaGState {
    /// `n_i ≥ n/(2k)` for every cluster.
    pub fn targets_large_enough(&self, n: usize) -> bool {
        self.targets.iter().all(|&t| 2 * self.k * t >= n)
    }
}

/// Regular partition → reduced graph → Hamilton cycle → relabelling along the
/// cycle → super-regular cycle pairs → absorption of exceptional vertices.
pub fn lemma_g_phase1(
    g: &BipartiteGraph,
    schedule: &ParameterSchedule,
    cfg: &PipelineConfig,
) -> Result<LemmaGState> {
    let n = g.size_a();
    if !g.is_balanced() {
        return Err(PartitionerError::Precondition(
            "host must be balanced".into(),
        ));
    }
    let need = min_degree_required(n, &schedule.gamma);
    if g.min_degree() < need {
        return Err(PartitionerError::Precondition(format!(
            "δ(G) = {} < (1/2 + γ)n = {need}",
            g.min_degree()
        )));
    }
    let build_params = schedule.build_params().map_err(stage("schedule"))?;
    let check = cfg.check.with_seed(derive_seed(cfg.seed, &[0x9A47]));
    let built = build_regular_partition(g, &build_params, schedule.k0, schedule.kmax, &check)
        .map_err(stage("partition"))?;
    let k = built.partition.k;
    let r = built.reduced.as_bipartite();
    let reduced_min_degree = r.min_degree();
    let required = (k + 3) / 2;
    if cfg.require_reduced_degree && reduced_min_degree < required {
        return Err(PartitionerError::ReducedDegree {
            min_degree: reduced_min_degree,
            required,
        });
    }
    let cycle =
        find_hamilton_cycle(&r, cfg.hamilton_mode, derive_seed(cfg.seed, &[0x4A]), None)?.order;
    // Reading the cycle as A_{p_0}, B_{q_0}, A_{p_1}, …: A_{p_i} becomes A_i and
    // B_{q_i}, which follows it, becomes B_{i+1}.
    let perm_a: Vec<usize> = (0..k).map(|i| cycle[2 * i].index).collect();
    let mut perm_b = vec![0; k];
    (0..k).for_each(|i| perm_b[(i + 1) % k] = cycle[2 * i + 1].index);
    let partition = built.partition.relabelled(&perm_a, &perm_b);
    let reduced = built.reduced.relabelled(&perm_a, &perm_b);
    let mut r_star: Vec<(usize, usize)> = (0..k).flat_map(|i| [(i, i), (i, (i + 1) % k)]).collect();
    r_star.sort_unstable();
    r_star.dedup();
    let weak = schedule.weak_params().map_err(stage("schedule"))?;
    let bound = usize::try_from((&schedule.eps_dprime * rat_usize(n)).floor().to_integer())
        .unwrap_or(usize::MAX);
    let sr_check = cfg.check.with_seed(derive_seed(cfg.seed, &[0x5E6]));
    let super_regular =
        super_regularize(g, &partition, &reduced, &r_star, 2, &weak, bound, &sr_check)
            .map_err(stage("super-regularize"))?;
    let absorption =
        absorb_exceptional_vertices(g, &super_regular.partition, &weak.d, &schedule.gamma)?;
    let absorbed_params =
        rebound_after_perturbation(&weak, &absorption.alpha, &absorption.alpha).ok();
    let partition = absorption.partition.clone();
    let targets = partition.sizes(Side::A);
    debug_assert_eq!(targets, partition.sizes(Side::B));
    let hat = schedule.hat_params().map_err(stage("schedule"))?;
    let cert_check = cfg.check.with_seed(derive_seed(cfg.seed, &[0xCE47]));
    let certificates =
        certify_cycle_pairs(g, &partition, &hat, &cert_check).map_err(stage("certify"))?;
    Ok(LemmaGState {
        schedule: schedule.clone(),
        k,
        partition,
        targets,
        build_rounds: built.rounds,
        reduced_edges: reduced.edges.len(),
        reduced_min_degree,
        cycle,
        perm_a,
        perm_b,
        super_regular,
        absorption,
        absorbed_params,
        certificates,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Phase2Report {
    pub partition: ClusterPartition,
    pub redistribution: RedistributionReport,
    /// Cycle-pair certificates at `(ε, d_lg)`.
    pub certificates: Vec<CyclePairCertificate>,
    /// `|A_i| = a_i` and `|B_i| = b_i` for all `i`.
    pub sizes_exact: bool,
    pub all_certified: bool,
}

/// Resizes the phase-1 clusters to `|A_i| = a_i`, `|B_i| = b_i`; needs
/// `Σa = Σb = n` and `a_i, b_i ≤ n_i + ξ_lg·n`.
pub fn lemma_g_phase2(
    g: &BipartiteGraph,
    state: &LemmaGState,
    a: &[usize],
    b: &[usize],
    cfg: &PipelineConfig,
) -> Result<Phase2Report> {
    let pre = |m: String| Err(PartitionerError::Precondition(m));
    let n = g.size_a();
    let k = state.k;
    if a.len() != k || b.len() != k {
        return pre(format!("need {k} sizes per side"));
    }
    if a.iter().sum::<usize>() != n || b.iter().sum::<usize>() != n {
        return pre(format!("requested sizes must sum to n = {n}"));
    }
    let xi = &state.schedule.xi_lg;
    let cap = xi * rat_usize(n);
    for (side, req) in [(Side::A, a), (Side::B, b)] {
        if let Some(i) = (0..k).find(|&i| rat_usize(req[i]) > rat_usize(state.targets[i]) + &cap) {
            return pre(format!(
                "{side:?}-size {} at cluster {i} exceeds n_i + ξn = {} + {cap}",
                req[i], state.targets[i]
            ));
        }
    }
    let delta = |req: &[usize]| -> Vec<i64> {
        (0..k)
            .map(|i| req[i] as i64 - state.targets[i] as i64)
            .collect()
    };
    let hat = state.schedule.hat_params().map_err(stage("schedule"))?;
    let enforce = state.schedule.mode == ScheduleMode::Faithful;
    let redistribution =
        redistribute_cluster_sizes(g, &state.partition, &delta(a), &delta(b), xi, &hat, enforce)?;
    let partition = redistribution.partition.clone();
    let sizes_exact = partition.sizes(Side::A) == a && partition.sizes(Side::B) == b;
    let target = state.schedule.target_params().map_err(stage("schedule"))?;
    let check = cfg.check.with_seed(derive_seed(cfg.seed, &[0x2F1]));
    let certificates =
        certify_cycle_pairs(g, &partition, &target, &check).map_err(stage("certify"))?;
    Ok(Phase2Report {
        all_certified: all_certified(&certificates),
        partition,
        redistribution,
        certificates,
        sizes_exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;

    fn practical() -> ParameterSchedule {
        derive_parameter_schedule(
            &rat(1, 25),
            2,
            &rat(1, 4),
            8,
            8,
            ScheduleMode::Practical,
            &ScheduleOverrides::default(),
        )
        .unwrap()
    }

    #[test]
    fn faithful_schedule_closed_forms() {
        let gamma = rat(1, 25);
        let eps = &gamma * &gamma / rat_usize(1000);
        let s = derive_parameter_schedule(
            &gamma,
            2,
            &eps,
            2,
            4,
            ScheduleMode::Faithful,
            &ScheduleOverrides::default(),
        )
        .unwrap();
        assert_eq!(s.d_lg, rat(16, 1_000_000));
        assert_eq!(s.eps_prime, &eps * &eps * &eps * &gamma * &gamma * &gamma);
        assert_eq!(s.d_prime, &eps + &gamma * &gamma);
        assert!(s.checks.iter().all(|c| c.holds));
        assert_eq!(s.provenance, "paper-constants");
        assert!(s.k0_prime >= 26);
        assert!(matches!(
            derive_parameter_schedule(
                &rat(1, 10),
                2,
                &eps,
                2,
                4,
                ScheduleMode::Faithful,
                &ScheduleOverrides::default()
            ),
            Err(PartitionerError::Precondition(_))
        ));
    }

    #[test]
    fn practical_schedule_is_flagged() {
        let s = practical();
        assert_eq!(s.provenance, "practical-overrides");
        assert_eq!(s.d_prime, rat(3, 10));
        assert_eq!(s.d_lg, rat(1, 20));
    }

    #[test]
    fn candidate_sets_on_extremes() {
        let g = BipartiteGraph::complete(8, 8);
        let p = ClusterPartition::from_lists(
            8,
            8,
            &[vec![0, 1, 2], vec![3, 4, 5]],
            &[vec![0, 1, 2], vec![3, 4, 5]],
        )
        .unwrap();
        assert_eq!(candidate_index_set(&g, 6, 6, &p, &Surd::one()), vec![0, 1]);
        let mut edges: Vec<(usize, usize)> = g.edges().collect();
        edges.retain(|&(a, _)| a != 6);
        let h = BipartiteGraph::new(8, 8, &edges).unwrap();
        assert!(candidate_index_set(&h, 6, 6, &p, &Surd::from(rat(1, 2))).is_empty());
    }

    #[test]
    fn absorption_forced_choice_and_identity() {
        // Only cluster 1 qualifies for the pair (6, 6).
        let mut edges = Vec::new();
        for a in 0..6 {
            for b in 0..6 {
                if (a < 3) == (b < 3) {
                    edges.push((a, b));
                }
            }
        }
        edges.extend([(6, 3), (6, 4), (3, 6), (4, 6)]);
        let g = BipartiteGraph::new(7, 7, &edges).unwrap();
        let lists = [vec![0, 1, 2], vec![3, 4, 5]];
        let p = ClusterPartition::from_lists(7, 7, &lists, &lists).unwrap();
        let rep = absorb_exceptional_vertices(&g, &p, &Surd::from(rat(1, 2)), &rat(1, 10)).unwrap();
        assert_eq!(rep.gains, vec![0, 1]);
        assert!(rep.partition.clusters_a[1].contains(6) && rep.partition.clusters_b[1].contains(6));
        assert!(rep.partition.exceptional_a.is_empty());
        let none =
            absorb_exceptional_vertices(&g, &rep.partition, &Surd::from(rat(1, 2)), &rat(1, 10))
                .unwrap();
        assert_eq!(none.partition, rep.partition);
    }

    #[test]
    fn redistribution_single_forced_move() {
        let g = BipartiteGraph::complete(8, 8);
        let lists = [vec![0, 1, 2, 3], vec![4, 5, 6, 7]];
        let p = ClusterPartition::from_lists(8, 8, &lists, &lists).unwrap();
        let params = RegularityParams::new(rat(1, 4), rat(1, 2)).unwrap();
        let same = redistribute_cluster_sizes(&g, &p, &[0, 0], &[0, 0], &rat(1, 4), &params, false)
            .unwrap();
        assert_eq!(same.partition, p);
        let rep = redistribute_cluster_sizes(&g, &p, &[1, -1], &[0, 0], &rat(1, 4), &params, false)
            .unwrap();
        assert_eq!(rep.partition.sizes(Side::A), vec![5, 3]);
        assert_eq!(rep.iterations.len(), 1);
        assert_eq!(
            rep.iterations[0].moves,
            vec![Move {
                side: Side::A,
                vertex: 4,
                from: 1,
                to: 0
            }]
        );
        let rep = redistribute_cluster_sizes(&g, &p, &[0, 0], &[1, -1], &rat(1, 4), &params, false)
            .unwrap();
        assert_eq!(rep.partition.sizes(Side::B), vec![5, 3]);
        assert!(
            redistribute_cluster_sizes(&g, &p, &[3, -3], &[0, 0], &rat(1, 4), &params, false)
                .is_err()
        );
        assert!(
            redistribute_cluster_sizes(&g, &p, &[1, -1], &[0, 0], &rat(1, 4), &params, true)
                .is_err()
        );
    }

    #[test]
    fn phase1_on_complete_host() {
        let g = BipartiteGraph::complete(64, 64);
        let state = lemma_g_phase1(&g, &practical(), &PipelineConfig::default()).unwrap();
        assert_eq!(state.k, 8);
        assert_eq!(state.targets, vec![8; 8]);
        assert!(all_certified(&state.certificates));
        assert!(state.targets_large_enough(64));
        let mut a = state.targets.clone();
        a[0] += 1;
        a[3] -= 1;
        let out =
            lemma_g_phase2(&g, &state, &a, &state.targets, &PipelineConfig::default()).unwrap();
        assert!(out.sizes_exact && out.all_certified);
        let mut too_big = state.targets.clone();
        too_big[0] += 21;
        (1..8).for_each(|i| too_big[i] -= 3);
        assert!(lemma_g_phase2(
            &g,
            &state,
            &too_big,
            &state.targets,
            &PipelineConfig::default()
        )
        .is_err());
    }

    #[test]
    fn phase1_rejects_disconnected_host() {
        let g = instances::planted_blocks(2, 32);
        assert!(matches!(
            lemma_g_phase1(&g, &practical(), &PipelineConfig::default()),
            Err(PartitionerError::Precondition(_))
        ));
    }
}
