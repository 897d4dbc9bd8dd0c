//! One PASS/FAIL line per acceptance criterion. Exits non-zero if any fails.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lazyarr::bench::{
    bc_single_source, graph, oracle_bc, oracle_triangles, results_match, run_benchmark, tc_dense,
    tc_sparse, BenchOptions, Benchmark, DenseMatrix, SparseGraph,
};
use lazyarr::protocol::{Command, FillSpec};
use lazyarr::{
    ArrayData, ArrayHandle, ArrayServer, BinOp, Client, ClientConfig, ClientMetrics, Dtype,
    ReduceOp, ServerConfig, UnaryOp,
};

const SAMPLE_TIME_LIMIT: Duration = Duration::from_secs(1);
const ORACLE_TIME_LIMIT: Duration = Duration::from_secs(120);
const FUZZ_TIME_LIMIT: Duration = Duration::from_secs(300);
const ORACLE_GRAPHS: u64 = 24;
const BC_DELTA_ABS_TOL: f64 = 1e-9;
const TAXI_REL_TOL: f64 = 1e-12;
const MIN_SPARSE_ARRAY_RATIO: f64 = 2.0;
const FUZZ_PROGRAMS: u64 = 1000;
const FUZZ_LEN: usize = 24;
const FUZZ_SLOTS: usize = 5;
const FUZZ_SIZE: usize = 8;

struct Outcome {
    pass: bool,
    detail: String,
}

type Check = fn() -> Outcome;

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn session(config: ClientConfig) -> (Arc<ArrayServer>, Client) {
    let server = ArrayServer::new(ServerConfig::default());
    let mut client = Client::local(&server, config).unwrap();
    client.enable_trace();
    (server, client)
}

fn release_all(c: &mut Client, hs: impl IntoIterator<Item = ArrayHandle>) {
    for h in hs {
        c.release(h).unwrap();
    }
}

/// A = randint; B = (A*A)+(A*A); C = randint; print(B). Counts are taken at the print.
fn sample_program(config: ClientConfig) -> (ArrayData, ClientMetrics) {
    let (_s, mut c) = session(config);
    let a = c.randint(0, 10, 10, 1).unwrap();
    let t1 = c.binop(BinOp::Mul, &a, &a).unwrap();
    let t2 = c.binop(BinOp::Mul, &a, &a).unwrap();
    let b = c.binop(BinOp::Add, &t1, &t2).unwrap();
    release_all(&mut c, [t1, t2]);
    let cc = c.randint(0, 10, 10, 2).unwrap();
    let out = c.to_values(&b).unwrap();
    let m = c.metrics();
    release_all(&mut c, [a, b, cc]);
    (out, m)
}

fn a1_sample_program() -> Outcome {
    let start = Instant::now();
    let (vb, base) = sample_program(ClientConfig::baseline());
    let (vo, opt) = sample_program(ClientConfig::optimized());
    let took = start.elapsed();
    let pass = (base.messages_sent, base.arrays_created) == (8, 5)
        && (opt.messages_sent, opt.arrays_created) == (4, 2)
        && vb == vo
        && took < SAMPLE_TIME_LIMIT;
    outcome(
        pass,
        format!(
            "sample program: base {} msgs/{} arrays (want 8/5), opt {} msgs/{} arrays (want 4/2), exact; {:.3}s < 1s",
            base.messages_sent, base.arrays_created, opt.messages_sent, opt.arrays_created, took.as_secs_f64()
        ),
    )
}

fn a2_liveness() -> Outcome {
    let (_s, mut c) = session(ClientConfig::optimized());
    let a = c.randint(0, 10, 10, 1).unwrap();
    let b = c.randint(0, 10, 10, 2).unwrap();
    let cc = c.randint(0, 10, 10, 3).unwrap();
    let c2 = c.binop(BinOp::Add, &b, &a).unwrap();
    c.release(cc).unwrap();
    let a2 = c.binop(BinOp::Add, &c2, &a).unwrap();
    c.release(a).unwrap();
    c.materialize(&a2).unwrap();
    let arrays = c.metrics().arrays_created;
    let last = c.trace().last().cloned();
    let stored_into_s1 = matches!(&last, Some(Command::BinopStore { op: BinOp::Add, dest, .. }) if dest.as_str() == "S1");
    release_all(&mut c, [a2, b, c2]);
    outcome(
        arrays == 3 && stored_into_s1,
        format!("liveness reuse: opt creates {arrays} arrays (want 3), final add stored into S1: {stored_into_s1}; exact"),
    )
}

fn delayed(config: ClientConfig) -> (ArrayData, ClientMetrics) {
    let (_s, mut c) = session(config);
    let a = c.randint(0, 10, 10, 1).unwrap();
    let b = c.randint(0, 10, 10, 2).unwrap();
    let e = c.randint(0, 10, 10, 3).unwrap();
    let f = c.randint(0, 10, 10, 4).unwrap();
    let cc = c.binop(BinOp::Add, &b, &a).unwrap();
    let d = c.binop(BinOp::Add, &e, &f).unwrap();
    let out = c.to_values(&d).unwrap();
    let m = c.metrics();
    release_all(&mut c, [a, b, e, f, cc, d]);
    (out, m)
}

fn a3_delayed() -> Outcome {
    let (vb, base) = delayed(ClientConfig::baseline());
    let (vo, opt) = delayed(ClientConfig::optimized());
    let dm = base.messages_sent as i64 - opt.messages_sent as i64;
    let da = base.arrays_created as i64 - opt.arrays_created as i64;
    outcome(
        dm == 3 && da == 3 && vb == vo,
        format!("delayed computation: opt saves {dm} messages and {da} arrays (want 3 and 3); exact"),
    )
}

fn a4_cse() -> Outcome {
    let (_s, mut c) = session(ClientConfig::optimized());
    let a = c.randint(0, 10, 10, 1).unwrap();
    let b = c.binop(BinOp::Mul, &a, &a).unwrap();
    let cc = c.binop(BinOp::Mul, &a, &a).unwrap();
    let d = c.binop(BinOp::Add, &b, &cc).unwrap();
    let got = c.to_values(&d).unwrap();
    let av = c.to_values(&a).unwrap();
    let muls = c.trace().iter().filter(|t| matches!(t, Command::Binop { op: BinOp::Mul, .. } | Command::BinopStore { op: BinOp::Mul, .. })).count();
    let hits = c.metrics().cache_hits_expr;
    release_all(&mut c, [a, b, cc, d]);
    let want = ArrayData::Int(av.as_int().unwrap().iter().map(|x| 2 * x * x).collect());
    outcome(
        muls == 1 && hits == 1 && got == want,
        format!("common subexpression: {muls} multiply reaches the server (want 1), cache_hits_expr={hits} (want 1); exact"),
    )
}

fn taxi(config: ClientConfig) -> (serde_json::Value, u64, usize) {
    let (_s, mut c) = session(config);
    let r = run_benchmark(&mut c, Benchmark::Taxi, "rand:1000:0:100:7", &BenchOptions::default()).unwrap();
    let reduces = c.trace().iter().filter(|t| matches!(t, Command::Reduce { .. })).count();
    (r.result, r.messages_sent, reduces)
}

fn a5_taxi() -> Outcome {
    let (rb, mb, nb) = taxi(ClientConfig::baseline());
    let (ro, mo, no) = taxi(ClientConfig::optimized());
    let equal = results_match(&rb, &ro, TAXI_REL_TOL);
    outcome(
        nb == 7 && no == 4 && mo < mb && equal,
        format!(
            "taxi chain: reductions base {nb} opt {no} (want 7/4), messages base {mb} opt {mo} (opt fewer), six scalars equal within 1e-12 rel: {equal}"
        ),
    )
}

fn a6_oracles() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    for seed in 0..ORACLE_GRAPHS {
        let n = 10 + (seed as usize * 7) % 55;
        let p = [0.05, 0.1, 0.2, 0.35][seed as usize % 4];
        let g = graph::gnp(n, p, seed);
        let config = if seed % 2 == 0 { ClientConfig::optimized() } else { ClientConfig::baseline() };
        let (_s, mut c) = session(config);

        let want = oracle_triangles(&g).unwrap() as i64;
        let l = DenseMatrix::lower(&mut c, &g).unwrap();
        let dense = tc_dense(&mut c, &l).unwrap();
        l.release(&mut c).unwrap();
        let s = SparseGraph::upload(&mut c, &g).unwrap();
        let sparse = tc_sparse(&mut c, &s).unwrap();
        s.release(&mut c).unwrap();
        if dense != want || sparse != want {
            failures.push(format!("tc gnp:{n}:{p}:{seed} dense {dense} sparse {sparse} oracle {want}"));
        }

        let source = seed as usize % n;
        let want = oracle_bc(&g, source).unwrap();
        let a = DenseMatrix::adjacency(&mut c, &g).unwrap();
        let got = bc_single_source(&mut c, &a, source).unwrap();
        a.release(&mut c).unwrap();
        let delta_ok = got.delta.iter().zip(&want.delta).all(|(x, y)| (x - y).abs() <= BC_DELTA_ABS_TOL);
        if got.paths != want.paths || !delta_ok || got.delta.len() != want.delta.len() {
            failures.push(format!("bc gnp:{n}:{p}:{seed} source {source}"));
        }
    }
    let took = start.elapsed();
    outcome(
        failures.is_empty() && took < ORACLE_TIME_LIMIT,
        format!(
            "oracles on {ORACLE_GRAPHS} G(n,p) graphs (n<=64): tc exact, bc paths exact and delta within 1e-9 abs; {} failures {:?}; {:.2}s < 120s",
            failures.len(),
            failures,
            took.as_secs_f64()
        ),
    )
}

fn array_ratio(bench: Benchmark, input: &str) -> f64 {
    let run = |config| {
        let (_s, mut c) = session(config);
        let r = run_benchmark(&mut c, bench, input, &BenchOptions::default()).unwrap();
        assert_eq!(r.verified, Some(true), "{bench} {input}");
        r.arrays_created as f64
    };
    run(ClientConfig::baseline()) / run(ClientConfig::optimized())
}

fn a7_ratios() -> Outcome {
    let sparse: Vec<f64> = (1..=3).map(|seed| array_ratio(Benchmark::TcSparse, &format!("gnp:64:0.1:{seed}"))).collect();
    let dense = array_ratio(Benchmark::TcDense, "kn:16");
    let floor = sparse.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        floor >= MIN_SPARSE_ARRAY_RATIO && dense > MIN_SPARSE_ARRAY_RATIO,
        format!(
            "array ratio base/opt: sparse tc on gnp:64:0.1 seeds 1-3 {:?} (each >= 2), dense tc on kn:16 {dense:.2} (> 2)",
            sparse.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>()
        ),
    )
}

#[derive(Debug, Clone)]
enum Step {
    Randint { slot: usize, seed: u64 },
    Fill { slot: usize, dtype: Dtype, value: i64 },
    Arange { slot: usize },
    Binop { slot: usize, op: BinOp, left: usize, right: Rhs },
    Unary { slot: usize, op: UnaryOp, a: usize },
    Alias { slot: usize, a: usize },
    Release { slot: usize },
    Print { a: usize },
    Reduce { a: usize, op: ReduceOp },
    Mean { a: usize },
    Std { a: usize },
    Flush,
}

#[derive(Debug, Clone, Copy)]
enum Rhs {
    Slot(usize),
    Int(i64),
    Float(f64),
    Bool(bool),
}

const FUZZ_BINOPS: [BinOp; 11] = [
    BinOp::Add,
    BinOp::Sub,
    BinOp::Mul,
    BinOp::Truediv,
    BinOp::Safediv,
    BinOp::Eq,
    BinOp::Ne,
    BinOp::Lt,
    BinOp::Le,
    BinOp::Gt,
    BinOp::Ge,
];

fn random_program(seed: u64) -> Vec<Step> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut steps = Vec::with_capacity(FUZZ_LEN);
    for _ in 0..FUZZ_LEN {
        let slot = rng.gen_range(0..FUZZ_SLOTS);
        let a = rng.gen_range(0..FUZZ_SLOTS);
        let step = match rng.gen_range(0..20) {
            0..=2 => Step::Randint { slot, seed: rng.gen_range(0..1000) },
            3 => Step::Fill {
                slot,
                dtype: [Dtype::Int64, Dtype::Float64, Dtype::Bool][rng.gen_range(0..3)],
                value: rng.gen_range(-3..4),
            },
            4 => Step::Arange { slot },
            5..=10 => Step::Binop {
                slot,
                op: FUZZ_BINOPS[rng.gen_range(0..FUZZ_BINOPS.len())],
                left: a,
                right: match rng.gen_range(0..6) {
                    0 => Rhs::Int(rng.gen_range(-3..4)),
                    1 => Rhs::Float(rng.gen_range(-2.0..2.0)),
                    2 => Rhs::Bool(rng.gen()),
                    _ => Rhs::Slot(rng.gen_range(0..FUZZ_SLOTS)),
                },
            },
            11 => Step::Unary { slot, op: UnaryOp::ALL[rng.gen_range(0..3)], a },
            12 => Step::Alias { slot, a },
            13 => Step::Release { slot },
            14 | 15 => Step::Print { a },
            16 => Step::Reduce { a, op: ReduceOp::ALL[rng.gen_range(0..ReduceOp::ALL.len())] },
            17 => Step::Mean { a },
            18 => Step::Std { a },
            _ => Step::Flush,
        };
        steps.push(step);
    }
    steps.push(Step::Print { a: 0 });
    steps
}

/// Runs a program and returns everything the user could observe, plus the
/// session counters after every handle is released and the cache drained.
fn run_program(steps: &[Step], config: ClientConfig) -> (Vec<String>, ClientMetrics, usize) {
    let server = ArrayServer::new(ServerConfig::default());
    let mut c = Client::local(&server, config).unwrap();
    let mut slots: Vec<Option<ArrayHandle>> = (0..FUZZ_SLOTS).map(|_| None).collect();
    let mut seen = Vec::new();

    fn assign(c: &mut Client, slots: &mut [Option<ArrayHandle>], slot: usize, h: lazyarr::Result<ArrayHandle>, seen: &mut Vec<String>) {
        match h {
            Ok(h) => {
                if let Some(old) = slots[slot].replace(h) {
                    c.release(old).unwrap();
                }
            }
            Err(e) => seen.push(format!("error {e}")),
        }
    }

    for step in steps {
        match *step {
            Step::Randint { slot, seed } => {
                let h = c.randint(-5, 10, FUZZ_SIZE, seed);
                assign(&mut c, &mut slots, slot, h, &mut seen);
            }
            Step::Fill { slot, dtype, value } => {
                let v = match dtype {
                    Dtype::Int64 => lazyarr::Scalar::Int(value),
                    Dtype::Float64 => lazyarr::Scalar::Float(value as f64 / 2.0),
                    Dtype::Bool => lazyarr::Scalar::Bool(value > 0),
                };
                let h = c.create(FillSpec::Const { value: v }, dtype, FUZZ_SIZE);
                assign(&mut c, &mut slots, slot, h, &mut seen);
            }
            Step::Arange { slot } => {
                let h = c.arange(FUZZ_SIZE);
                assign(&mut c, &mut slots, slot, h, &mut seen);
            }
            Step::Binop { slot, op, left, right } => {
                let Some(l) = slots[left].as_ref() else { continue };
                let h = match right {
                    Rhs::Slot(r) => match slots[r].as_ref() {
                        Some(r) => c.binop(op, l, r),
                        None => continue,
                    },
                    Rhs::Int(x) => c.binop(op, l, x),
                    Rhs::Float(x) => c.binop(op, l, x),
                    Rhs::Bool(x) => c.binop(op, l, x),
                };
                assign(&mut c, &mut slots, slot, h, &mut seen);
            }
            Step::Unary { slot, op, a } => {
                let Some(h) = slots[a].as_ref() else { continue };
                let h = c.unary(op, h);
                assign(&mut c, &mut slots, slot, h, &mut seen);
            }
            Step::Alias { slot, a } => {
                let Some(h) = slots[a].as_ref() else { continue };
                let h = c.clone_handle(h);
                assign(&mut c, &mut slots, slot, Ok(h), &mut seen);
            }
            Step::Release { slot } => {
                if let Some(h) = slots[slot].take() {
                    c.release(h).unwrap();
                }
            }
            Step::Print { a } => {
                if let Some(h) = slots[a].as_ref() {
                    seen.push(format!("{:?}", c.to_values(h)));
                }
            }
            Step::Reduce { a, op } => {
                if let Some(h) = slots[a].as_ref() {
                    seen.push(format!("{op:?} {:?}", c.reduce(op, h)));
                }
            }
            Step::Mean { a } => {
                if let Some(h) = slots[a].as_ref() {
                    seen.push(format!("mean {:?}", c.mean(h)));
                }
            }
            Step::Std { a } => {
                if let Some(h) = slots[a].as_ref() {
                    seen.push(format!("std {:?}", c.std(h)));
                }
            }
            Step::Flush => c.flush().unwrap(),
        }
        if let Err(e) = c.check_invariants() {
            seen.push(format!("invariant {e}"));
        }
    }
    for h in slots.into_iter().flatten() {
        c.release(h).unwrap();
    }
    c.drain_cache().unwrap();
    (seen, c.metrics(), server.live_arrays())
}

fn a8_fuzz() -> Outcome {
    let start = Instant::now();
    let mut mismatches = Vec::new();
    let mut not_monotone = Vec::new();
    let mut leaks = Vec::new();
    let mut saved = 0u64;
    for seed in 0..FUZZ_PROGRAMS {
        let program = random_program(seed);
        let (want, base, live) = run_program(&program, ClientConfig::baseline());
        if live != 0 {
            leaks.push((seed, 0));
        }
        for bits in 1..64u8 {
            let (got, m, live) = run_program(&program, ClientConfig::from_bits(bits));
            if got != want {
                mismatches.push((seed, bits));
            }
            if m.messages_sent > base.messages_sent {
                not_monotone.push((seed, bits));
            }
            if live != 0 {
                leaks.push((seed, bits));
            }
            if bits == 63 {
                saved += base.messages_sent - m.messages_sent.min(base.messages_sent);
            }
        }
    }
    let took = start.elapsed();
    let first = |v: &Vec<(u64, u8)>| v.first().map(|(s, b)| format!(" first seed {s} flags {b:06b}")).unwrap_or_default();
    outcome(
        mismatches.is_empty() && not_monotone.is_empty() && leaks.is_empty() && took < FUZZ_TIME_LIMIT,
        format!(
            "fuzz: {FUZZ_PROGRAMS} programs x 64 flag sets: {} output mismatches{}, {} message increases{}, {} leaks{}; all-on saves {saved} messages; {:.1}s < 300s",
            mismatches.len(),
            first(&mismatches),
            not_monotone.len(),
            first(&not_monotone),
            leaks.len(),
            first(&leaks),
            took.as_secs_f64()
        ),
    )
}

/// C = B + A; A = D + A; print(A); print(C)
fn premature_deletion(config: ClientConfig) -> (ArrayData, ArrayData) {
    let (_s, mut c) = session(config);
    let a = c.randint(0, 100, 16, 11).unwrap();
    let b = c.randint(0, 100, 16, 12).unwrap();
    let d = c.randint(0, 100, 16, 13).unwrap();
    let cc = c.binop(BinOp::Add, &b, &a).unwrap();
    let a2 = c.binop(BinOp::Add, &d, &a).unwrap();
    c.release(a).unwrap();
    let pa = c.to_values(&a2).unwrap();
    let pc = c.to_values(&cc).unwrap();
    release_all(&mut c, [a2, b, d, cc]);
    (pa, pc)
}

fn a9_soundness() -> Outcome {
    let want = premature_deletion(ClientConfig::baseline());
    let bad: Vec<u8> = (0..64u8).filter(|&bits| premature_deletion(ClientConfig::from_bits(bits)) != want).collect();
    outcome(
        bad.is_empty(),
        format!("premature deletion program: prints equal baseline under all 64 flag sets; {} differ {bad:?}; exact", bad.len()),
    )
}

fn main() -> std::process::ExitCode {
    let criteria: [(&str, Check); 9] = [
        ("A1", a1_sample_program),
        ("A2", a2_liveness),
        ("A3", a3_delayed),
        ("A4", a4_cse),
        ("A5", a5_taxi),
        ("A6", a6_oracles),
        ("A7", a7_ratios),
        ("A8", a8_fuzz),
        ("A9", a9_soundness),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        let o = check();
        println!("{name} {} {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed.push(name);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", criteria.len());
        std::process::ExitCode::SUCCESS
    } else {
        println!("acceptance: failed {failed:?}");
        std::process::ExitCode::FAILURE
    }
}
