//! End-to-end runs of the `bipembed` binary plus round trips of every
//! on-disk format.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bipembed_cli::format::{
    from_json, parse_graph, parse_labelling, parse_pieces, to_json, write_graph, write_labelling,
    write_pieces,
};
use bipembed_core::embedder::PlacementPhase;
use bipembed_core::homomorphism::{CycleHomomorphism, LinkingPolicy, PieceLink};
use bipembed_core::{BipartiteGraph, ClusterPartition, Embedding, HamiltonCycle, VertexId};
use proptest::prelude::*;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bipembed"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Writes a host and a Hamilton-cycle target on `n` vertices per side.
fn instance(dir: &Path, n: usize) {
    let n = n.to_string();
    let o = run(
        dir,
        &[
            "gen-host", "--n", &n, "--gamma", "0.3", "--seed", "7", "--out", "g.bg",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = run(
        dir,
        &[
            "gen-target",
            "--family",
            "hamilton-cycle",
            "--n",
            &n,
            "--out",
            "h.bg",
            "--labelling",
            "h.lab",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn embed_then_verify_and_reject_a_corrupted_embedding() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    instance(d, 256);
    let o = run(
        d,
        &[
            "embed",
            "--host",
            "g.bg",
            "--target",
            "h.bg",
            "--labelling",
            "h.lab",
            "--k0",
            "4",
            "--seed",
            "7",
            "--out",
            "e.json",
            "--report",
            "r.json",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = json(d.join("r.json"));
    assert_eq!(report["verified"], Value::Bool(true));

    let o = run(
        d,
        &[
            "verify",
            "--host",
            "g.bg",
            "--target",
            "h.bg",
            "--embedding",
            "e.json",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let verdict: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(verdict["valid"], Value::Bool(true));

    // Map two A-vertices to the same host vertex.
    let mut emb: Embedding =
        from_json(&std::fs::read_to_string(d.join("e.json")).unwrap()).unwrap();
    emb.map_a[1] = emb.map_a[0];
    std::fs::write(d.join("bad.json"), to_json(&emb)).unwrap();
    let o = run(
        d,
        &[
            "verify",
            "--host",
            "g.bg",
            "--target",
            "h.bg",
            "--embedding",
            "bad.json",
        ],
    );
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("INVALID"));
}

#[test]
fn stage_artifacts_verify() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    instance(d, 64);

    let o = run(d, &["hamilton", "--host", "g.bg", "--out", "c.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(
        code(&run(d, &["verify", "--host", "g.bg", "--cycle", "c.json"])),
        0
    );
    let mut cycle: HamiltonCycle =
        from_json(&std::fs::read_to_string(d.join("c.json")).unwrap()).unwrap();
    cycle.order.swap(0, 1);
    std::fs::write(d.join("c2.json"), to_json(&cycle)).unwrap();
    assert_eq!(
        code(&run(d, &["verify", "--host", "g.bg", "--cycle", "c2.json"])),
        1
    );

    let o = run(
        d,
        &[
            "regularity",
            "partition",
            "--host",
            "g.bg",
            "--epsilon",
            "1/2",
            "--k0",
            "2",
            "--kmax",
            "4",
            "--out",
            "p.json",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(
        code(&run(
            d,
            &["verify", "--host", "g.bg", "--partition", "p.json"]
        )),
        0
    );

    let o = run(
        d,
        &[
            "regularity",
            "check",
            "--host",
            "g.bg",
            "--epsilon",
            "1",
            "--d",
            "0.5",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = run(
        d,
        &[
            "regularity",
            "check",
            "--host",
            "g.bg",
            "--epsilon",
            "1",
            "--d",
            "0.99",
        ],
    );
    assert_eq!(code(&o), 1, "{}", stderr(&o));

    let o = run(
        d,
        &[
            "homomorphism",
            "--target",
            "h.bg",
            "--labelling",
            "h.lab",
            "--ni",
            "16x4",
            "--ell",
            "4",
            "--policy",
            "full",
            "--xi",
            "1/4",
            "--out",
            "f.json",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = run(
        d,
        &[
            "verify",
            "--target",
            "h.bg",
            "--homomorphism",
            "f.json",
            "--ni",
            "16x4",
            "--xi",
            "1/4",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    assert_eq!(
        code(&run(
            d,
            &[
                "verify",
                "--target",
                "h.bg",
                "--labelling",
                "h.lab",
                "--bandwidth",
                "2"
            ]
        )),
        0
    );
    assert_eq!(
        code(&run(
            d,
            &[
                "verify",
                "--target",
                "h.bg",
                "--labelling",
                "h.lab",
                "--bandwidth",
                "1"
            ]
        )),
        1
    );

    std::fs::write(
        d.join("pieces.txt"),
        write_pieces(&[8, 0, 8, 0], &[0, 8, 0, 8]),
    )
    .unwrap();
    let o = run(
        d,
        &[
            "balance",
            "--ni",
            "8,8",
            "--pieces",
            "pieces.txt",
            "--xi",
            "1/4",
            "--out",
            "b.json",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let b = json(d.join("b.json"));
    assert_eq!(b["phi"].as_array().unwrap().len(), 4);
}

#[test]
fn parse_errors_exit_2_with_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("dup.bg"), "bipartite 2 2 2\n0 1\n0 1\n").unwrap();
    let o = run(d, &["hamilton", "--host", "dup.bg"]);
    assert_eq!(code(&o), 2);
    assert!(
        stderr(&o).contains("dup.bg: line 3: duplicate edge"),
        "{}",
        stderr(&o)
    );

    std::fs::write(d.join("crlf.bg"), "bipartite 1 1 1\r\n0 0\n").unwrap();
    let o = run(d, &["hamilton", "--host", "crlf.bg"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 1"));

    std::fs::write(d.join("h.bg"), "bipartite 2 2 2\n0 0\n1 1\n").unwrap();
    std::fs::write(d.join("bad.lab"), "0\n1\n2\n2\n").unwrap();
    let o = run(d, &["verify", "--target", "h.bg", "--labelling", "bad.lab"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 4"));

    std::fs::write(d.join("e.json"), "{\n  \"map_a\": [0,\n  1]\n").unwrap();
    let o = run(
        d,
        &[
            "verify",
            "--host",
            "h.bg",
            "--target",
            "h.bg",
            "--embedding",
            "e.json",
        ],
    );
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line"));

    assert_eq!(code(&run(d, &["verify"])), 2);
    assert_eq!(
        code(&run(d, &["gen-host", "--n", "10", "--gamma", "abc"])),
        2
    );
    assert_eq!(code(&run(d, &["no-such-command"])), 2);
}

/// Drops the wall-clock fields from an experiment report.
fn without_timings(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("max_millis");
    for r in v["records"].as_array_mut().unwrap() {
        r.as_object_mut().unwrap().remove("millis");
    }
    v
}

#[test]
fn runs_are_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = [
        "experiment",
        "--n",
        "128",
        "--runs",
        "3",
        "--k0",
        "2",
        "--seed",
        "5",
    ];
    let o1 = run(
        d,
        &[&args[..], &["--threads", "1", "--out", "x1.json"]].concat(),
    );
    let o2 = run(
        d,
        &[&args[..], &["--threads", "1", "--out", "x2.json"]].concat(),
    );
    let o3 = run(d, &[&args[..], &["--out", "x3.json"]].concat());
    for o in [&o1, &o2, &o3] {
        assert!(code(o) <= 1, "{}", stderr(o));
    }
    let r1 = without_timings(json(d.join("x1.json")));
    assert_eq!(r1, without_timings(json(d.join("x2.json"))));
    assert_eq!(r1, without_timings(json(d.join("x3.json"))));
    assert_eq!(r1["runs"], 3);

    instance(d, 128);
    for (threads, out) in [("1", "e1.json"), ("1", "e2.json")] {
        let o = run(
            d,
            &[
                "embed",
                "--host",
                "g.bg",
                "--target",
                "h.bg",
                "--k0",
                "2",
                "--seed",
                "3",
                "--threads",
                threads,
                "--out",
                out,
            ],
        );
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    assert_eq!(
        std::fs::read(d.join("e1.json")).unwrap(),
        std::fs::read(d.join("e2.json")).unwrap()
    );
}

#[test]
fn generated_files_parse_back() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = run(
        d,
        &[
            "gen-target",
            "--family",
            "grid",
            "--width",
            "4",
            "--height",
            "6",
            "--out",
            "grid.bg",
            "--labelling",
            "grid.lab",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let g = parse_graph(&std::fs::read_to_string(d.join("grid.bg")).unwrap()).unwrap();
    assert_eq!((g.size_a(), g.size_b(), g.edge_count()), (12, 12, 38));
    let order = parse_labelling(&std::fs::read_to_string(d.join("grid.lab")).unwrap()).unwrap();
    assert_eq!(order.len(), 24);
    let o = run(
        d,
        &[
            "gen-host",
            "--kind",
            "planted-blocks",
            "--k",
            "3",
            "--m",
            "2",
        ],
    );
    assert_eq!(code(&o), 0);
    let g = parse_graph(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(g.edge_count(), 12);
}

fn arb_graph() -> impl Strategy<Value = BipartiteGraph> {
    (1usize..12, 1usize..12).prop_flat_map(|(na, nb)| {
        proptest::collection::btree_set((0..na, 0..nb), 0..=na * nb).prop_map(move |edges| {
            BipartiteGraph::new(na, nb, &edges.into_iter().collect::<Vec<_>>()).unwrap()
        })
    })
}

fn arb_order() -> impl Strategy<Value = Vec<VertexId>> {
    (1usize..30).prop_flat_map(|n| {
        Just((0..2 * n).map(VertexId::from_global).collect::<Vec<_>>()).prop_shuffle()
    })
}

fn arb_partition() -> impl Strategy<Value = ClusterPartition> {
    (1usize..5, 1usize..6, 0usize..4)
        .prop_flat_map(|(k, m, extra)| {
            let n = k * m + extra;
            (
                Just((k, m, n)),
                Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
                Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
            )
        })
        .prop_map(|((k, m, n), pa, pb)| {
            let lists = |p: &[usize]| {
                (0..k)
                    .map(|i| p[i * m..(i + 1) * m].to_vec())
                    .collect::<Vec<_>>()
            };
            ClusterPartition::from_lists(n, n, &lists(&pa), &lists(&pb)).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn graphs_round_trip(g in arb_graph()) {
        let text = write_graph(&g);
        prop_assert_eq!(parse_graph(&text).unwrap(), g.clone());
        // Comments and blank lines are ignored.
        let noisy = format!("# generated\n\n{}", text.replace('\n', "  # edge\n"));
        prop_assert_eq!(parse_graph(&noisy).unwrap(), g);
    }

    #[test]
    fn labellings_round_trip(order in arb_order()) {
        prop_assert_eq!(parse_labelling(&write_labelling(&order)).unwrap(), order);
    }

    #[test]
    fn pieces_round_trip(xy in proptest::collection::vec((0usize..100, 0usize..100), 1..40)) {
        let (x, y): (Vec<usize>, Vec<usize>) = xy.into_iter().unzip();
        prop_assert_eq!(parse_pieces(&write_pieces(&x, &y)).unwrap(), (x, y));
    }

    #[test]
    fn partitions_round_trip(p in arb_partition()) {
        prop_assert_eq!(from_json::<ClusterPartition>(&to_json(&p)).unwrap(), p);
    }

    #[test]
    fn embeddings_round_trip(a in Just((0..20).collect::<Vec<usize>>()).prop_shuffle(), b in Just((0..20).collect::<Vec<usize>>()).prop_shuffle(), greedy in proptest::collection::vec(any::<bool>(), 20)) {
        let phase = |g: &bool| if *g { PlacementPhase::Greedy } else { PlacementPhase::Completion };
        let e = Embedding { map_a: a, map_b: b, phase_a: greedy.iter().map(phase).collect(), phase_b: greedy.iter().rev().map(phase).collect() };
        prop_assert_eq!(from_json::<Embedding>(&to_json(&e)).unwrap(), e);
    }

    #[test]
    fn homomorphisms_round_trip(k in 1usize..6, f in proptest::collection::vec(0usize..6, 2..30), s in proptest::collection::btree_set(0usize..40, 0..10), full in any::<bool>()) {
        let f: Vec<usize> = f.into_iter().map(|c| c % k).collect();
        let hom = CycleHomomorphism {
            k,
            beta_n: 2,
            policy: if full { LinkingPolicy::Full } else { LinkingPolicy::Used },
            f_a: f.clone(),
            f_b: f.iter().rev().copied().collect(),
            s: s.into_iter().map(VertexId::from_global).collect(),
            links: vec![PieceLink { from: 0, to: k - 1, q: k - 1 }],
            pre_a: vec![0; k],
            pre_b: vec![0; k],
        };
        prop_assert_eq!(from_json::<CycleHomomorphism>(&to_json(&hom)).unwrap(), hom);
    }
}
