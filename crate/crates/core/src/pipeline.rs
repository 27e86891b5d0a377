//! End-to-end embedding of a balanced bounded-degree, bounded-bandwidth
//! bipartite graph `H` into a balanced bipartite host `G` of high minimum
//! degree: parameter schedule → cluster partition along a cycle → bandwidth
//! labelling and pieces → balancing assignment → cycle homomorphism → exact
//! cluster sizes → compatibility → two-phase embedding → verification.

use std::time::Instant;

use serde::Serialize;

use crate::embedder::{
    compatibility_report, embed_compatible, verify_embedding, ClassGraph, CompatibilityReport,
    EmbedConfig, EmbedError, EmbedOutcome, EmbeddingViolation, HPartition,
};
use crate::exact::{rat, rat_usize, Rational};
use crate::graph::{BipartiteGraph, Side, VertexId};
use crate::hamilton::HamiltonMode;
use crate::homomorphism::{
    balance_assignment, bandwidth_labelling, build_cycle_homomorphism, lemma_piece_count,
    partition_pieces, verify_cycle_homomorphism, BalanceConfig, BalancingAssignment,
    BandwidthLabelling, CycleHomomorphism, HomomorphismError, HomomorphismReport, LabellingMode,
    LinkingPolicy, PiecePartition,
};
use crate::partitioner::{
    derive_parameter_schedule, lemma_g_phase1, lemma_g_phase2, LemmaGState, ParameterSchedule,
    PartitionerError, Phase2Report, PipelineConfig, ScheduleMode, ScheduleOverrides,
};
use crate::regularity::CheckConfig;
use crate::seed::derive_seed;

#[derive(Debug, Clone)]
pub struct EmbedPipelineConfig {
    pub mode: ScheduleMode,
    pub gamma: Rational,
    pub epsilon: Rational,
    pub k0: usize,
    pub kmax: usize,
    pub overrides: ScheduleOverrides,
    pub labelling: LabellingMode,
    /// Vertex order used with [`LabellingMode::Given`].
    pub given_order: Option<Vec<VertexId>>,
    /// Bandwidth bound `β·n`; defaults to the labelling's bandwidth.
    pub beta_n: Option<usize>,
    /// Number of pieces; defaults to the largest feasible value in practical
    /// mode and to the closed-form count in faithful mode.
    pub ell: Option<usize>,
    /// Balancing tolerance; practical default `1/10`, faithful uses `ξ_lh`.
    pub balance_xi: Option<Rational>,
    pub balance_retries: usize,
    pub embed_retries: usize,
    pub check: CheckConfig,
    pub hamilton_mode: HamiltonMode,
    pub require_reduced_degree: bool,
    pub seed: u64,
}

impl EmbedPipelineConfig {
    /// Practical defaults: `ε = 1/4`, `k₀ = 8`, `k_max = 8`, Cuthill–McKee labelling.
    pub fn practical(gamma: Rational, seed: u64) -> Self {
        EmbedPipelineConfig {
            mode: ScheduleMode::Practical,
            gamma,
            epsilon: rat(1, 4),
            k0: 8,
            kmax: 8,
            overrides: ScheduleOverrides::default(),
            labelling: LabellingMode::CuthillMcKee,
            given_order: None,
            beta_n: None,
            ell: None,
            balance_xi: None,
            balance_retries: 50,
            embed_retries: 20,
            check: CheckConfig::default(),
            hamilton_mode: HamiltonMode::Auto,
            require_reduced_degree: true,
            seed,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("stage input: {0}")]
    Input(String),
    #[error("stage schedule: {0}")]
    Schedule(#[source] PartitionerError),
    #[error("stage partition: {0}")]
    Partition(#[source] PartitionerError),
    #[error("stage labelling: {0}")]
    Labelling(#[source] HomomorphismError),
    #[error("stage pieces: {0}")]
    Pieces(String),
    #[error("stage balance: {0}")]
    Balance(#[source] HomomorphismError),
    #[error("stage homomorphism: {0}")]
    Homomorphism(#[source] HomomorphismError),
    #[error("stage homomorphism-check: {0}")]
    HomomorphismCheck(String),
    #[error("stage resize: {0}")]
    Resize(#[source] PartitionerError),
    #[error("stage embed: {0}")]
    Embed(#[source] EmbedError),
    #[error("stage verify: {0}")]
    Verify(#[source] EmbeddingViolation),
}

impl PipelineError {
    pub fn stage(&self) -> &'static str {
        match self {
            PipelineError::Input(_) => "input",
            PipelineError::Schedule(_) => "schedule",
            PipelineError::Partition(_) => "partition",
            PipelineError::Labelling(_) => "labelling",
            PipelineError::Pieces(_) => "pieces",
            PipelineError::Balance(_) => "balance",
            PipelineError::Homomorphism(_) => "homomorphism",
            PipelineError::HomomorphismCheck(_) => "homomorphism-check",
            PipelineError::Resize(_) => "resize",
            PipelineError::Embed(_) => "embed",
            PipelineError::Verify(_) => "verify",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub stage: &'static str,
    pub millis: u128,
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub n: usize,
    pub max_degree: usize,
    pub schedule: ParameterSchedule,
    pub phase1: LemmaGState,
    pub labelling: BandwidthLabelling,
    pub beta_n: usize,
    pub ell: usize,
    pub ell_requested: Option<usize>,
    /// `ℓ` was lowered so that every piece can host its linking block.
    pub ell_clamped: bool,
    pub policy: LinkingPolicy,
    pub pieces: PiecePartition,
    #[serde(with = "crate::exact::rational_str")]
    pub balance_xi: Rational,
    pub balancing: BalancingAssignment,
    pub homomorphism: CycleHomomorphism,
    pub homomorphism_report: HomomorphismReport,
    pub phase2: Phase2Report,
    pub compatibility: CompatibilityReport,
    pub embedding: EmbedOutcome,
    pub verified: bool,
    pub timings: Vec<StageTiming>,
}

/// Largest `ℓ` for which every piece (of size `⌊N/ℓ⌋` or more) fits a
/// linking block of `(2k−1)β` vertices.
pub fn max_feasible_pieces(total: usize, k: usize, beta_n: usize) -> usize {
    total / ((2 * k).saturating_sub(1).max(1) * beta_n.max(1))
}

/// Runs the whole pipeline; any failure names the stage it occurred in.
pub fn embed_bipartite(
    g: &BipartiteGraph,
    h: &BipartiteGraph,
    cfg: &EmbedPipelineConfig,
) -> Result<PipelineReport, PipelineError> {
    let faithful = cfg.mode == ScheduleMode::Faithful;
    let n = g.size_a();
    if !g.is_balanced() || !h.is_balanced() || h.size_a() != n {
        return Err(PipelineError::Input(format!(
            "host is {}+{}, guest is {}+{}; both must be balanced on the same n",
            g.size_a(),
            g.size_b(),
            h.size_a(),
            h.size_b()
        )));
    }
    let mut timings = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |stage: &'static str, timings: &mut Vec<StageTiming>| {
        timings.push(StageTiming {
            stage,
            millis: clock.elapsed().as_millis(),
        });
        clock = Instant::now();
    };

    let max_degree = h.max_degree().max(1);
    let schedule = derive_parameter_schedule(
        &cfg.gamma,
        max_degree,
        &cfg.epsilon,
        cfg.k0,
        cfg.kmax,
        cfg.mode,
        &cfg.overrides,
    )
    .map_err(PipelineError::Schedule)?;
    let pcfg = PipelineConfig {
        check: cfg.check.clone(),
        hamilton_mode: cfg.hamilton_mode,
        seed: derive_seed(cfg.seed, &[0x9A11]),
        require_reduced_degree: cfg.require_reduced_degree,
    };
    let phase1 = lemma_g_phase1(g, &schedule, &pcfg).map_err(PipelineError::Partition)?;
    let k = phase1.k;
    lap("partition", &mut timings);

    let labelling = bandwidth_labelling(h, cfg.labelling, cfg.given_order.as_deref())
        .map_err(PipelineError::Labelling)?;
    let beta_n = cfg.beta_n.unwrap_or(labelling.bandwidth).max(1);
    if beta_n < labelling.bandwidth {
        return Err(PipelineError::Pieces(format!(
            "β·n = {beta_n} is below the labelling bandwidth {}",
            labelling.bandwidth
        )));
    }
    let balance_xi = match (&cfg.balance_xi, faithful) {
        (Some(xi), _) => xi.clone(),
        (None, true) => schedule.xi_lh.clone(),
        (None, false) => rat(1, 10),
    };
    let total = 2 * n;
    let (ell, ell_clamped, policy) = if faithful {
        let ell = match cfg.ell {
            Some(l) => l,
            None => {
                let needed = lemma_piece_count(k, &schedule.xi_lh);
                usize::try_from(&needed).ok().filter(|&l| l <= total).ok_or_else(|| {
                    PipelineError::Pieces(format!("the closed-form piece count {needed} exceeds the {total} guest vertices"))
                })?
            }
        };
        (ell, false, LinkingPolicy::Full)
    } else {
        let cap = max_feasible_pieces(total, k, beta_n);
        if cap == 0 {
            return Err(PipelineError::Pieces(format!(
                "a linking block of (2k−1)β = {} vertices does not fit into {total} vertices",
                (2 * k - 1) * beta_n
            )));
        }
        let wanted = cfg.ell.unwrap_or(cap);
        // The balancer needs every piece within (1+ξ)·2n/ℓ; rounding up the
        // piece size can break that for large ℓ, so step down until it holds.
        let mut ell = wanted.min(cap);
        while ell > 1
            && rat_usize(total.div_ceil(ell) * ell) > (rat(1, 1) + &balance_xi) * rat_usize(total)
        {
            ell -= 1;
        }
        (ell, ell != wanted, LinkingPolicy::Used)
    };
    let pieces =
        partition_pieces(&labelling, ell).map_err(|e| PipelineError::Pieces(e.to_string()))?;
    lap("labelling", &mut timings);

    let mut bcfg = BalanceConfig::new(
        balance_xi.clone(),
        cfg.balance_retries,
        derive_seed(cfg.seed, &[0xBA1]),
    );
    bcfg.enforce_size_cap = faithful;
    let balancing = balance_assignment(&phase1.targets, &pieces.x, &pieces.y, &bcfg)
        .map_err(PipelineError::Balance)?;
    lap("balance", &mut timings);

    let homomorphism =
        build_cycle_homomorphism(h, &labelling, &pieces, &balancing.phi, beta_n, k, policy)
            .map_err(PipelineError::Homomorphism)?;
    let homomorphism_report =
        verify_cycle_homomorphism(h, &homomorphism, &phase1.targets, &balance_xi);
    let clauses_required = faithful && !(homomorphism_report.h1 && homomorphism_report.h3);
    if !homomorphism_report.homomorphism || !homomorphism_report.h2 || clauses_required {
        return Err(PipelineError::HomomorphismCheck(format!(
            "homomorphism {}, H1 {}, H2 {}, H3 {}",
            homomorphism_report.homomorphism,
            homomorphism_report.h1,
            homomorphism_report.h2,
            homomorphism_report.h3
        )));
    }
    lap("homomorphism", &mut timings);

    let phase2 = lemma_g_phase2(g, &phase1, &homomorphism.pre_a, &homomorphism.pre_b, &pcfg)
        .map_err(PipelineError::Resize)?;
    if !phase2.sizes_exact {
        return Err(PipelineError::Resize(PartitionerError::Precondition(
            "redistribution did not reach the requested sizes".into(),
        )));
    }
    lap("resize", &mut timings);

    let w = HPartition::from_homomorphism(&homomorphism);
    let (r, r_prime) = (ClassGraph::cycle(k), ClassGraph::matching(k));
    let compatibility = compatibility_report(
        h,
        &w,
        &phase2.partition.sizes(Side::A),
        &phase2.partition.sizes(Side::B),
        &r,
        &r_prime,
        &schedule.epsilon.clone().into(),
    );
    let ecfg = EmbedConfig {
        seed: derive_seed(cfg.seed, &[0xE4B]),
        retries: cfg.embed_retries,
    };
    let embedding = embed_compatible(
        g,
        h,
        &phase2.partition,
        &w,
        &r,
        &r_prime,
        &labelling.order,
        &ecfg,
    )
    .map_err(PipelineError::Embed)?;
    verify_embedding(g, h, &embedding.embedding).map_err(PipelineError::Verify)?;
    lap("embed", &mut timings);

    Ok(PipelineReport {
        n,
        max_degree,
        schedule,
        phase1,
        labelling,
        beta_n,
        ell,
        ell_requested: cfg.ell,
        ell_clamped,
        policy,
        pieces,
        balance_xi,
        balancing,
        homomorphism,
        homomorphism_report,
        phase2,
        compatibility,
        embedding,
        verified: true,
        timings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;

    #[test]
    fn cycle_into_random_host() {
        let n = 256;
        let gamma = rat(3, 10);
        let g = instances::random_host_min_degree(n, &gamma, 0.0, 7).unwrap();
        let t = instances::hamilton_cycle(n).unwrap();
        let mut cfg = EmbedPipelineConfig::practical(gamma, 1);
        cfg.k0 = 4;
        cfg.kmax = 4;
        let rep = embed_bipartite(&g, &t.graph, &cfg).unwrap();
        assert!(rep.verified);
        assert!(verify_embedding(&g, &t.graph, &rep.embedding.embedding).is_ok());
    }

    #[test]
    fn rejects_unbalanced_input() {
        let g = BipartiteGraph::complete(4, 4);
        let h = BipartiteGraph::complete(3, 4);
        let err =
            embed_bipartite(&g, &h, &EmbedPipelineConfig::practical(rat(3, 10), 0)).unwrap_err();
        assert_eq!(err.stage(), "input");
    }
}
