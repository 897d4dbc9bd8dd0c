use std::io::Write;

use lazyarr::bench::{
    bc_single_source, graph, load_matrix_market, oracle_bc, oracle_triangles, results_match,
    run_benchmark, tc_dense, tc_sparse, BenchOptions, BenchReport, Benchmark, DenseMatrix, Graph,
    SparseGraph,
};
use lazyarr::protocol::Command;
use lazyarr::report::{parse_reports, render_table};
use lazyarr::{ArrayServer, Client, ClientConfig, ServerConfig};

fn client(config: ClientConfig) -> Client {
    Client::local(&ArrayServer::new(ServerConfig::default()), config).unwrap()
}

fn run(bench: Benchmark, input: &str, config: ClientConfig) -> BenchReport {
    run_benchmark(&mut client(config), bench, input, &BenchOptions::default()).unwrap()
}

fn triangles_both_ways(g: &Graph, config: ClientConfig) -> (i64, i64) {
    let mut c = client(config);
    let l = DenseMatrix::lower(&mut c, g).unwrap();
    let dense = tc_dense(&mut c, &l).unwrap();
    l.release(&mut c).unwrap();
    let s = SparseGraph::upload(&mut c, g).unwrap();
    let sparse = tc_sparse(&mut c, &s).unwrap();
    s.release(&mut c).unwrap();
    (dense, sparse)
}

fn choose3(n: i64) -> i64 {
    n * (n - 1) * (n - 2) / 6
}

#[test]
fn closed_form_triangle_counts() {
    for config in [ClientConfig::baseline(), ClientConfig::optimized()] {
        for n in [3, 4, 7, 12] {
            assert_eq!(triangles_both_ways(&graph::complete(n), config), (choose3(n as i64), choose3(n as i64)));
        }
        assert_eq!(triangles_both_ways(&graph::path(5), config), (0, 0));
        assert_eq!(triangles_both_ways(&graph::star(9), config), (0, 0));
    }
    assert_eq!(oracle_triangles(&graph::complete(4)).unwrap(), 4);
}

#[test]
fn random_graphs_agree_with_the_enumeration_oracle() {
    for seed in 0..20 {
        let n = 8 + (seed as usize * 5) % 40;
        let g = graph::gnp(n, 0.25, seed);
        let want = oracle_triangles(&g).unwrap() as i64;
        let config = if seed % 2 == 0 { ClientConfig::optimized() } else { ClientConfig::baseline() };
        assert_eq!(triangles_both_ways(&g, config), (want, want), "gnp:{n}:0.25:{seed}");
    }
}

fn bc(g: &Graph, source: usize, config: ClientConfig) -> (Vec<f64>, Vec<u64>) {
    let mut c = client(config);
    let a = DenseMatrix::adjacency(&mut c, g).unwrap();
    let r = bc_single_source(&mut c, &a, source).unwrap();
    a.release(&mut c).unwrap();
    (r.delta, r.paths)
}

#[test]
fn betweenness_on_paths_and_stars_has_closed_forms() {
    for config in [ClientConfig::baseline(), ClientConfig::optimized()] {
        // from one end of a path, vertex i carries every vertex beyond it
        let (delta, paths) = bc(&graph::path(6), 0, config);
        assert_eq!(delta, vec![0.0, 4.0, 3.0, 2.0, 1.0, 0.0]);
        assert_eq!(paths, vec![1; 6]);

        // from a leaf of a star, the center carries every other leaf
        let (delta, paths) = bc(&graph::star(7), 1, config);
        assert_eq!(delta, vec![5.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(paths, vec![1; 7]);

        // a 4-cycle: two shortest paths reach the far corner
        let square = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let (delta, paths) = bc(&square, 0, config);
        assert_eq!(paths, vec![1, 1, 2, 1]);
        assert_eq!(delta, vec![0.0, 0.5, 0.0, 0.5]);
    }
}

#[test]
fn betweenness_matches_brandes_on_random_graphs() {
    for seed in 0..6 {
        let g = graph::gnp(24, 0.2, seed);
        let source = seed as usize % 24;
        let want = oracle_bc(&g, source).unwrap();
        for config in [ClientConfig::baseline(), ClientConfig::optimized()] {
            let (delta, paths) = bc(&g, source, config);
            assert_eq!(paths, want.paths);
            for (x, y) in delta.iter().zip(&want.delta) {
                assert!((x - y).abs() <= 1e-9, "{x} vs {y}");
            }
        }
    }
}

const SQUARE_WITH_DIAGONAL_SYM: &str = "%%MatrixMarket matrix coordinate pattern symmetric
% lower triangle only
4 4 5
2 1
3 2
4 3
4 1
3 1
";

const SQUARE_WITH_DIAGONAL_GEN: &str = "%%MatrixMarket matrix coordinate real general
4 4 11
1 2 1.0
2 1 1.0
2 3 2.5
3 2 2.5
3 4 1
4 3 1
1 4 1
4 1 1
1 3 1
3 1 1
2 2 0
";

#[test]
fn symmetric_and_general_files_load_the_same_graph() {
    let dir = tempfile::tempdir().unwrap();
    let mut graphs = Vec::new();
    for (name, text) in [("sym.mtx", SQUARE_WITH_DIAGONAL_SYM), ("gen.mtx", SQUARE_WITH_DIAGONAL_GEN)] {
        let path = dir.path().join(name);
        std::fs::File::create(&path).unwrap().write_all(text.as_bytes()).unwrap();
        graphs.push(load_matrix_market(&path).unwrap());
    }
    assert_eq!(graphs[0], graphs[1]);
    assert_eq!(graphs[0].edge_count(), 5);
    assert_eq!(oracle_triangles(&graphs[0]).unwrap(), 2);

    let path = dir.path().join("sym.mtx");
    let r = run_benchmark(
        &mut client(ClientConfig::optimized()),
        Benchmark::TcSparse,
        path.to_str().unwrap(),
        &BenchOptions::default(),
    )
    .unwrap();
    assert_eq!(r.result, 2);
    assert_eq!(r.verified, Some(true));
}

#[test]
fn optimized_triangle_counting_allocates_far_fewer_arrays() {
    for (bench, input) in [(Benchmark::TcSparse, "gnp:64:0.1:3"), (Benchmark::TcDense, "kn:16")] {
        let base = run(bench, input, ClientConfig::baseline());
        let opt = run(bench, input, ClientConfig::optimized());
        assert_eq!(base.verified, Some(true));
        assert_eq!(opt.verified, Some(true));
        assert_eq!(base.result, opt.result);
        assert!(base.arrays_created >= 2 * opt.arrays_created, "{bench} {input}: {} vs {}", base.arrays_created, opt.arrays_created);
        assert!(opt.messages_sent <= base.messages_sent);
        assert_eq!(base.arrays_created, base.arrays_deleted);
        assert_eq!(opt.arrays_created, opt.arrays_deleted);
    }
}

#[test]
fn taxi_chain_reuses_reductions() {
    let reduces = |config: ClientConfig| {
        let mut c = client(config);
        c.enable_trace();
        let r = run_benchmark(&mut c, Benchmark::Taxi, "rand:1000:0:100:7", &BenchOptions::default()).unwrap();
        let n = c.trace().iter().filter(|cmd| matches!(cmd, Command::Reduce { .. })).count();
        (r, n)
    };
    let (base, base_reduces) = reduces(ClientConfig::baseline());
    let (opt, opt_reduces) = reduces(ClientConfig::optimized());
    assert_eq!((base_reduces, opt_reduces), (7, 4));
    assert_eq!((base.messages_sent, opt.messages_sent), (11, 8));
    assert_eq!(base.verified, Some(true));
    assert!(results_match(&base.result, &opt.result, 1e-12));
}

#[test]
fn reports_tabulate_with_ratios() {
    let base = run(Benchmark::TcDense, "kn:8", ClientConfig::baseline());
    let opt = run(Benchmark::TcDense, "kn:8", ClientConfig::optimized());
    let text = format!("{}\n{}\n", base.to_json(), opt.to_json());
    let reports = parse_reports(&text).unwrap();
    assert_eq!(reports, vec![base.clone(), opt.clone()]);
    let table = render_table(&reports);
    let want = format!("{:.2}", base.arrays_created as f64 / opt.arrays_created as f64);
    assert!(table.lines().nth(2).unwrap().contains(&want), "{table}");
}

#[test]
fn oversized_inputs_are_refused() {
    let options = BenchOptions { dense_limit: 10, ..BenchOptions::default() };
    let mut c = client(ClientConfig::optimized());
    assert!(run_benchmark(&mut c, Benchmark::TcDense, "kn:11", &options).is_err());
    assert!(run_benchmark(&mut c, Benchmark::Taxi, "kn:4", &options).is_err());
}
