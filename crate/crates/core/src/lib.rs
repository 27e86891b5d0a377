//! Embedding balanced bipartite graphs of bounded degree and small bandwidth
//! into dense balanced bipartite hosts, following the regularity-method proof
//! pipeline: regular partition, Hamilton cycle of the reduced graph, cluster
//! size balancing, a homomorphism of the guest onto a cycle, and a final
//! matching-based embedding that is always verified before it is returned.

pub mod bitset;
pub mod embedder;
pub mod exact;
pub mod graph;
pub mod hamilton;
pub mod homomorphism;
pub mod instances;
pub mod matching;
pub mod partitioner;
pub mod pipeline;
pub mod regularity;
pub mod seed;

pub use bitset::BitSet;
pub use embedder::{
    compatibility_report, embed_compatible, verify_embedding, ClassGraph, CompatibilityReport,
    EmbedConfig, EmbedError, Embedding, EmbeddingViolation, HPartition,
};
pub use exact::{parse_rational, rat, Rational, Surd};
pub use graph::{BipartiteGraph, GraphError, Side, VertexId, VertexSet};
pub use hamilton::{find_hamilton_cycle, verify_cycle, HamiltonCycle, HamiltonMode};
pub use homomorphism::{
    balance_assignment, bandwidth_labelling, build_cycle_homomorphism, failure_probability_bound,
    partition_pieces, verify_cycle_homomorphism, BalancingAssignment, BandwidthLabelling,
    CycleHomomorphism, LabellingMode, LinkingPolicy, PiecePartition,
};
pub use partitioner::{
    derive_parameter_schedule, lemma_g_phase1, lemma_g_phase2, ParameterSchedule, ScheduleMode,
};
pub use pipeline::{embed_bipartite, EmbedPipelineConfig, PipelineError, PipelineReport};
pub use regularity::{
    check_regular_pair, check_super_regular_pair, ClusterPartition, PairCertificate, ReducedGraph,
    RegularityParams, Strategy, Verdict,
};
