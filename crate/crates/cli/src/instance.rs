//! Declarative instance specifications; generated graphs are checked against
//! their declared guarantees before they are handed out.

use bipembed_core::homomorphism::labelling_bandwidth;
use bipembed_core::instances::{self, min_degree_required};
use bipembed_core::{BandwidthLabelling, BipartiteGraph, Rational};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum HostSpec {
    /// Edges with probability `1/2 + γ + slack`, deficient vertices patched.
    RandomMinDegree {
        n: usize,
        #[serde(with = "bipembed_core::exact::rational_str")]
        gamma: Rational,
        slack: f64,
        seed: u64,
    },
    /// `k` disjoint copies of `K_{m,m}`.
    PlantedBlocks { k: usize, m: usize },
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TargetSpec {
    /// `C_{2n}`.
    HamiltonCycle { n: usize },
    /// `P_n × K_2` (`n` rungs).
    Ladder { n: usize },
    /// `C_{2n}` plus antipodal chords (`n` odd).
    MoebiusLadder { n: usize },
    /// `width × height` grid, row-major.
    Grid { width: usize, height: usize },
    /// Edges only between positions at distance ≤ `window`.
    RandomLocal {
        n: usize,
        window: usize,
        p: f64,
        max_degree: usize,
        seed: u64,
    },
    /// `n` disjoint edges.
    PerfectMatching { n: usize },
}

pub fn gen_host(spec: &HostSpec) -> anyhow::Result<BipartiteGraph> {
    match spec {
        HostSpec::RandomMinDegree {
            n,
            gamma,
            slack,
            seed,
        } => {
            let g = instances::random_host_min_degree(*n, gamma, *slack, *seed)?;
            let need = min_degree_required(*n, gamma);
            anyhow::ensure!(
                g.min_degree() >= need,
                "generated host has δ = {} < {need}",
                g.min_degree()
            );
            Ok(g)
        }
        HostSpec::PlantedBlocks { k, m } => {
            anyhow::ensure!(*k >= 1 && *m >= 1, "planted blocks need k, m ≥ 1");
            Ok(instances::planted_blocks(*k, *m))
        }
    }
}

/// A target with its labelling, whose bandwidth is recomputed from the edges.
pub struct GeneratedTarget {
    pub graph: BipartiteGraph,
    pub labelling: BandwidthLabelling,
}

pub fn gen_target(spec: &TargetSpec) -> anyhow::Result<GeneratedTarget> {
    let t = match spec {
        TargetSpec::HamiltonCycle { n } => instances::hamilton_cycle(*n)?,
        TargetSpec::Ladder { n } => instances::ladder(*n)?,
        TargetSpec::MoebiusLadder { n } => instances::moebius_ladder(*n)?,
        TargetSpec::Grid { width, height } => instances::grid(*width, *height)?,
        TargetSpec::RandomLocal {
            n,
            window,
            p,
            max_degree,
            seed,
        } => instances::random_local(*n, *window, *p, *max_degree, *seed)?,
        TargetSpec::PerfectMatching { n } => instances::perfect_matching(*n),
    };
    anyhow::ensure!(t.graph.is_balanced(), "generated target is not balanced");
    let bandwidth = labelling_bandwidth(&t.graph, &t.order)?;
    if let TargetSpec::RandomLocal {
        window, max_degree, ..
    } = spec
    {
        anyhow::ensure!(
            bandwidth <= *window,
            "bandwidth {bandwidth} exceeds window {window}"
        );
        anyhow::ensure!(
            t.graph.max_degree() <= *max_degree,
            "Δ exceeds {max_degree}"
        );
    }
    Ok(GeneratedTarget {
        graph: t.graph,
        labelling: BandwidthLabelling {
            order: t.order,
            bandwidth,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use bipembed_core::{rat, Side, VertexId};

    #[test]
    fn host_examples() {
        let g = gen_host(&HostSpec::PlantedBlocks { k: 2, m: 4 }).unwrap();
        assert_eq!(g.edge_count(), 32);
        assert!(g.has_edge(0, 3) && !g.has_edge(0, 4));
        // δ ≥ ⌈0.7 · 64⌉ = 45 from an independent degree scan.
        let g = gen_host(&HostSpec::RandomMinDegree {
            n: 64,
            gamma: rat(1, 5),
            slack: 0.0,
            seed: 0,
        })
        .unwrap();
        for side in [Side::A, Side::B] {
            for i in 0..64 {
                assert!(g.degree(VertexId { side, index: i }) >= 45);
            }
        }
        assert!(gen_host(&HostSpec::RandomMinDegree {
            n: 8,
            gamma: rat(3, 5),
            slack: 0.0,
            seed: 0
        })
        .is_err());
    }

    #[test]
    fn target_examples() {
        let c8 = gen_target(&TargetSpec::HamiltonCycle { n: 4 }).unwrap();
        assert_eq!(c8.labelling.bandwidth, 2);
        assert_eq!(c8.graph.edge_count(), 8);
        let grid = gen_target(&TargetSpec::Grid {
            width: 4,
            height: 4,
        })
        .unwrap();
        assert_eq!(grid.labelling.bandwidth, 4);
        let local = gen_target(&TargetSpec::RandomLocal {
            n: 50,
            window: 5,
            p: 0.5,
            max_degree: 4,
            seed: 1,
        })
        .unwrap();
        assert!(local.labelling.bandwidth <= 5);
        assert_eq!(local.graph.size_a(), local.graph.size_b());
    }
}
