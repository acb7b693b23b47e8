//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use tokcol::algo::HashSpec;
use tokcol::corpus;
use tokcol::engine::{small_default_bandwidth, Outcome, RunOutput};
use tokcol::topology::{
    assign_tokens, diameter, make_impossibility_pair_with, make_path,
    make_random_connected, make_ring, AssignMode, Instance, Orientation, TokenAssignment, Topology,
};
use tokcol::verify::{check_trace, check_trace_equivalence, faults, oracle_collision, InvariantReport};
use tokcol::{run, Algorithm, Knowledge, RunConfig, RunStatus, Token, Verdict};

const CORPUS_BUDGET: Duration = Duration::from_secs(120);
const IMPOSSIBILITY_BUDGET: Duration = Duration::from_secs(10);
/// Allowed spread of fitted constants and per-point ratios.
const FIT_SPREAD: f64 = 2.0;
/// Multiplier in the absolute round bounds.
const ABS_FACTOR: u64 = 64;
const EQUIVALENCE_ROUNDS: u64 = 200;
const RAND_SEEDS: u64 = 1000;
const HASH_TRIALS: u64 = 1000;

struct Line {
    ok: bool,
    text: String,
}

fn line(ok: bool, text: String) -> Line {
    Line { ok, text }
}

fn clog2(x: usize) -> u32 {
    usize::BITS - (x.max(1) - 1).leading_zeros()
}

struct CorpusRun {
    algorithm: Algorithm,
    pack: bool,
    oracle: Verdict,
    out: RunOutput,
    d: usize,
    k: usize,
    entry: usize,
}

fn corpus_runs() -> (Vec<CorpusRun>, Duration, Vec<String>) {
    let entries = corpus::generate(corpus::DEFAULT_SIZE, corpus::DEFAULT_SEED).expect("corpus generates");
    let start = Instant::now();
    let mut runs = Vec::new();
    let mut errors = Vec::new();
    for e in &entries {
        let Instance { topology, tokens } = &e.instance;
        let oracle = oracle_collision(tokens);
        let d = diameter(topology);
        for cfg in corpus::configs(e) {
            match run(topology, tokens, &cfg) {
                Ok(out) => runs.push(CorpusRun {
                    algorithm: cfg.algorithm,
                    pack: cfg.pack_tokens,
                    oracle,
                    out,
                    d,
                    k: tokens.k(),
                    entry: e.id,
                }),
                Err(err) => errors.push(format!("entry {} {}: {err}", e.id, cfg.algorithm)),
            }
        }
    }
    (runs, start.elapsed(), errors)
}

fn criterion_1(runs: &[CorpusRun], elapsed: Duration, errors: &[String]) -> Line {
    let wrong: Vec<String> = runs
        .iter()
        .filter(|r| r.out.metrics.status != RunStatus::Halted || r.out.metrics.outcome() != Outcome::Agreed(r.oracle))
        .map(|r| {
            format!("entry {} {} pack={}: {} vs {}", r.entry, r.algorithm, r.pack, r.out.metrics.outcome(), r.oracle)
        })
        .collect();
    let instances = runs.iter().map(|r| r.entry).max().map_or(0, |m| m + 1);
    let ok = errors.is_empty() && wrong.is_empty() && instances >= 500 && elapsed < CORPUS_BUDGET;
    let mut text = format!(
        "oracle equivalence: {} instances, {} runs, {} mismatches, {} errors, {:.1}s (budget {}s)",
        instances,
        runs.len(),
        wrong.len(),
        errors.len(),
        elapsed.as_secs_f64(),
        CORPUS_BUDGET.as_secs()
    );
    if let Some(w) = wrong.first().or(errors.first()) {
        text.push_str(&format!("; first: {w}"));
    }
    line(ok, text)
}

fn criterion_2() -> Line {
    let entries = corpus::generate(corpus::DEFAULT_SIZE, corpus::DEFAULT_SEED).expect("corpus generates");
    let mut total = InvariantReport::default();
    for e in &entries {
        for cfg in corpus::configs(e) {
            let Ok(out) = run(&e.instance.topology, &e.instance.tokens, &cfg.with_trace()) else {
                return line(false, format!("invariant suite: entry {} failed to run", e.id));
            };
            let trace = out.trace.expect("full trace requested");
            total.merge(&check_trace(&trace, &e.instance.tokens, &e.instance.topology));
        }
    }
    let faults = match faults::self_test() {
        Ok(f) => f,
        Err(err) => return line(false, format!("invariant suite: fault baseline unusable: {err}")),
    };
    let missed: Vec<String> = faults.iter().filter(|f| !f.caught).map(|f| format!("{}/{}", f.target, f.name)).collect();
    let mut text = format!(
        "invariant suite: {} traces, {} snapshots, {} violations; faults caught {}/{}",
        total.traces,
        total.snapshots,
        total.failures(),
        faults.len() - missed.len(),
        faults.len()
    );
    if let Some(v) = total.first_failure() {
        text.push_str(&format!("; first: {v}"));
    }
    if !missed.is_empty() {
        text.push_str(&format!("; missed: {}", missed.join(",")));
    }
    line(total.passed() && missed.is_empty() && !total.truncated, text)
}

fn fit_through_origin(points: &[(f64, f64)]) -> f64 {
    let sxy: f64 = points.iter().map(|(x, y)| x * y).sum();
    let sxx: f64 = points.iter().map(|(x, _)| x * x).sum();
    sxy / sxx
}

fn criterion_3(runs: &[CorpusRun]) -> Line {
    let mut fits = Vec::new();
    let mut over = Vec::new();
    for n in [8usize, 16, 32, 64] {
        let len = clog2(n) + 2;
        let mut points = Vec::new();
        for seed in 0..3u64 {
            for topo in [make_ring(n, seed), make_random_connected(n, 4.0 / n as f64, seed)] {
                let t = topo.expect("topology");
                let a = assign_tokens(&t, n, len, AssignMode::Distinct, seed).expect("assignment");
                let out = run(&t, &a, &RunConfig::new(Algorithm::DetSmall, Knowledge::N)).expect("run");
                let x = (diameter(&t) + n) as f64;
                if out.metrics.status != RunStatus::Halted || out.metrics.rounds > ABS_FACTOR * x as u64 {
                    over.push(format!("sweep n={n} seed={seed}"));
                }
                points.push((x, out.metrics.rounds as f64));
            }
        }
        fits.push((n, fit_through_origin(&points)));
    }
    for r in runs.iter().filter(|r| r.algorithm == Algorithm::DetSmall) {
        let bound = ABS_FACTOR * (r.d + r.k) as u64;
        if r.out.metrics.status != RunStatus::Halted || r.out.metrics.rounds > bound {
            over.push(format!("corpus entry {} rounds {} > {bound}", r.entry, r.out.metrics.rounds));
        }
    }
    let worst = fits.windows(2).map(|w| (w[1].1 / w[0].1).max(w[0].1 / w[1].1)).fold(1.0, f64::max);
    let shown: Vec<String> = fits.iter().map(|(n, c)| format!("n={n}:{c:.2}")).collect();
    let ok = worst <= FIT_SPREAD && over.is_empty();
    let mut text = format!(
        "small-token round bound: C per size [{}], worst consecutive ratio {worst:.2} (limit {FIT_SPREAD}), {} runs over {ABS_FACTOR}(D+k)",
        shown.join(" "),
        over.len()
    );
    if let Some(o) = over.first() {
        text.push_str(&format!("; first: {o}"));
    }
    line(ok, text)
}

fn criterion_4() -> Line {
    let (n, k, b) = (16usize, 16usize, 16u32);
    let t = make_ring(n, 4).expect("ring");
    let d = diameter(&t) as f64;
    let mut points = Vec::new();
    let mut over = Vec::new();
    for len in [16u32, 64, 256, 1024] {
        let lg = (len as f64 / b as f64).log2().max(1.0);
        let x = d + len as f64 / lg;
        let mut iters = 0.0;
        let seeds = 3u64;
        for seed in 0..seeds {
            let a = assign_tokens(&t, k, len, AssignMode::Distinct, seed).expect("assignment");
            let mut cfg = RunConfig::new(Algorithm::DetLarge, Knowledge::K);
            cfg.bandwidth = Some(b);
            let out = run(&t, &a, &cfg).expect("run");
            let bound = ABS_FACTOR as f64 * (d * lg + k as f64 * len.div_ceil(b) as f64);
            if out.metrics.status != RunStatus::Halted || out.metrics.rounds as f64 > bound {
                over.push(format!("L={len} seed={seed} rounds {} > {bound}", out.metrics.rounds));
            }
            iters += out.metrics.build_done.map_or(f64::INFINITY, |m| m.iteration as f64);
        }
        points.push((len, x, iters / seeds as f64));
    }
    let c = (points.iter().map(|(_, x, y)| (y / x).ln()).sum::<f64>() / points.len() as f64).exp();
    let ratios: Vec<f64> = points.iter().map(|(_, x, y)| y / (c * x)).collect();
    let ok = ratios.iter().all(|r| (1.0 / FIT_SPREAD..=FIT_SPREAD).contains(r)) && over.is_empty();
    let shown: Vec<String> =
        points.iter().zip(&ratios).map(|((l, _, y), r)| format!("L={l}:{y:.1}it/{r:.2}")).collect();
    let mut text = format!(
        "large-token iteration bound: C={c:.3}, [{}] (ratios within {FIT_SPREAD}x), {} runs over the round bound",
        shown.join(" "),
        over.len()
    );
    if let Some(o) = over.first() {
        text.push_str(&format!("; first: {o}"));
    }
    line(ok, text)
}

fn criterion_5() -> Line {
    let start = Instant::now();
    let mut problems = Vec::new();
    let mut compared = Vec::new();
    for n in 3..=6usize {
        let run_pair = |orientation: Orientation| {
            let pair = make_impossibility_pair_with(n, orientation).expect("pair");
            let mut cfg = RunConfig::new(Algorithm::DetSmall, Knowledge::None).with_trace();
            cfg.bandwidth = Some(small_default_bandwidth(2 * n, pair.small.tokens.token_len()));
            cfg.round_limit = Some(EQUIVALENCE_ROUNDS + 8);
            let small = run(&pair.small.topology, &pair.small.tokens, &cfg).expect("small ring runs");
            let big = run(&pair.big.topology, &pair.big.tokens, &cfg).expect("big ring runs");
            (pair, small, big)
        };
        let (pair, small, big) = run_pair(Orientation::Matched);
        let (st, bt) = (small.trace.as_ref().unwrap(), big.trace.as_ref().unwrap());
        let fwd = check_trace_equivalence(st, bt, &pair.correspondence);
        let back = check_trace_equivalence(bt, st, &pair.correspondence);
        let decided = small.metrics.verdicts.iter().chain(&big.metrics.verdicts).any(Option::is_some);
        let rounds = small.metrics.rounds.min(big.metrics.rounds);
        if !fwd.passed() || fwd.passed() != back.passed() || decided || rounds < EQUIVALENCE_ROUNDS {
            problems.push(format!("n={n}: pass={} symmetric={} decided={decided} rounds={rounds}", fwd.passed(), fwd == back));
        }
        compared.push(fwd.compared);
        let (pair, small, big) = run_pair(Orientation::Mismatched);
        let neg =
            check_trace_equivalence(small.trace.as_ref().unwrap(), big.trace.as_ref().unwrap(), &pair.correspondence);
        if neg.passed() {
            problems.push(format!("n={n}: mismatched orientation did not diverge"));
        }
    }
    let elapsed = start.elapsed();
    let ok = problems.is_empty() && elapsed < IMPOSSIBILITY_BUDGET;
    let mut text = format!(
        "impossibility replication: n=3..6, snapshots compared {compared:?}, negative controls diverge, {:.2}s (budget {}s)",
        elapsed.as_secs_f64(),
        IMPOSSIBILITY_BUDGET.as_secs()
    );
    if let Some(p) = problems.first() {
        text.push_str(&format!("; first problem: {p}"));
    }
    line(ok, text)
}

fn criterion_6() -> Line {
    let (n, k, len) = (8usize, 8usize, 128u32);
    let t = make_ring(n, 0).expect("ring");
    let mut distinct_hits = 0u64;
    let mut planted_hits = 0u64;
    for seed in 0..RAND_SEEDS {
        let mut cfg = RunConfig::new(Algorithm::Randomized, Knowledge::K);
        cfg.seed = seed;
        cfg.rand.c = 4;
        cfg.rand.beta = 2;
        let a = assign_tokens(&t, k, len, AssignMode::Distinct, seed).expect("assignment");
        if run(&t, &a, &cfg).expect("run").metrics.outcome() == Outcome::Agreed(Verdict::AllDistinct) {
            distinct_hits += 1;
        }
        let a = assign_tokens(&t, k, len, AssignMode::WithDuplicates(1), seed).expect("assignment");
        if run(&t, &a, &cfg).expect("run").metrics.outcome() == Outcome::Agreed(Verdict::Collision) {
            planted_hits += 1;
        }
    }
    let need = RAND_SEEDS - RAND_SEEDS / k as u64;

    let mut failures = 0u64;
    for trial in 0..HASH_TRIALS {
        let a = assign_tokens(&t, k, len, AssignMode::Distinct, 1_000_000 + trial).expect("assignment");
        let h = HashSpec::build(len, k as u64, 2, trial).expect("hash");
        let mut values: Vec<u64> = a.all_tokens().map(|x| h.eval(x)).collect();
        values.sort_unstable();
        values.dedup();
        if values.len() < k {
            failures += 1;
        }
    }
    let p = 1.0 / (k * k) as f64;
    let limit = p + 3.0 * (p * (1.0 - p) / HASH_TRIALS as f64).sqrt();
    let rate = failures as f64 / HASH_TRIALS as f64;
    let ok = distinct_hits >= need && planted_hits == RAND_SEEDS && rate <= limit;
    line(
        ok,
        format!(
            "randomized success: all-distinct {distinct_hits}/{RAND_SEEDS} (need {need}), planted collision {planted_hits}/{RAND_SEEDS}, hash failure rate {rate:.4} (limit {limit:.4})"
        ),
    )
}

fn criterion_7() -> Line {
    let tok = |len: u32, v: u64| Token::from_u64(len, v).expect("fits");
    let mut cases: Vec<(&str, Topology, TokenAssignment)> = Vec::new();
    let single = make_path(1, 0).expect("path");
    cases.push(("single node distinct", single.clone(), TokenAssignment::from_values(8, &[&[1, 2, 3]]).unwrap()));
    cases.push(("single node duplicate", single.clone(), TokenAssignment::from_values(8, &[&[5, 5]]).unwrap()));
    cases.push(("single node one token", single, TokenAssignment::from_values(8, &[&[0]]).unwrap()));
    let path = make_path(5, 3).expect("path");
    cases.push(("empty middle nodes", path.clone(), TokenAssignment::from_values(8, &[&[4], &[], &[], &[], &[9]]).unwrap()));
    cases.push(("one token on a path", path.clone(), TokenAssignment::from_values(8, &[&[], &[], &[], &[7], &[]]).unwrap()));
    cases.push(("empty ends duplicate", path, TokenAssignment::from_values(8, &[&[], &[3], &[], &[3], &[]]).unwrap()));
    let ring = make_ring(6, 5).expect("ring");
    let heap: Vec<u64> = (10..20).collect();
    cases.push(("all tokens at one node", ring.clone(), TokenAssignment::from_values(8, &[&[], &[], &heap, &[], &[], &[]]).unwrap()));
    let mut dup = heap.clone();
    dup.push(13);
    cases.push(("all tokens at one node, duplicate", ring.clone(), TokenAssignment::from_values(8, &[&[], &[], &[], &dup, &[], &[]]).unwrap()));
    cases.push(("all-ones token with empty nodes", ring.clone(), TokenAssignment::from_values(8, &[&[255], &[], &[254], &[], &[], &[]]).unwrap()));
    cases.push(("only the all-ones token", ring.clone(), TokenAssignment::from_values(8, &[&[], &[], &[], &[255], &[], &[]]).unwrap()));
    let wide = TokenAssignment::new(20, vec![vec![Token::all_ones(20)], vec![], vec![tok(20, 3)], vec![], vec![], vec![]]).unwrap();
    cases.push(("all-ones 20-bit token", ring.clone(), wide));
    let forced = assign_tokens(&ring, 5, 2, AssignMode::Uniform, 9).expect("assignment");
    cases.push(("k > 2^L", ring.clone(), forced));
    let forced = assign_tokens(&ring, 9, 3, AssignMode::Uniform, 1).expect("assignment");
    cases.push(("k > 2^L, L=3", ring, forced));

    let mut bad = Vec::new();
    let mut total = 0;
    for (name, t, a) in &cases {
        let oracle = oracle_collision(a);
        for algorithm in [Algorithm::DetSmall, Algorithm::DetLarge, Algorithm::Randomized] {
            for knowledge in [Knowledge::N, Knowledge::K] {
                let mut cfg = RunConfig::new(algorithm, knowledge);
                if algorithm == Algorithm::DetLarge {
                    cfg.bandwidth = Some(8);
                }
                total += 1;
                match run(t, a, &cfg) {
                    Ok(out) if out.metrics.outcome() == Outcome::Agreed(oracle) => {}
                    Ok(out) => bad.push(format!("{name} {algorithm} {knowledge}: {} vs {oracle}", out.metrics.outcome())),
                    Err(err) => bad.push(format!("{name} {algorithm} {knowledge}: {err}")),
                }
            }
        }
    }
    let mut text = format!("degenerate cases: {} cases, {total} runs, {} wrong", cases.len(), bad.len());
    if let Some(b) = bad.first() {
        text.push_str(&format!("; first: {b}"));
    }
    line(bad.is_empty(), text)
}

fn main() -> ExitCode {
    let (runs, elapsed, errors) = corpus_runs();
    let lines = [
        criterion_1(&runs, elapsed, &errors),
        criterion_2(),
        criterion_3(&runs),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
    ];
    let mut all = true;
    for (i, l) in lines.iter().enumerate() {
        println!("{} {}: {}", if l.ok { "PASS" } else { "FAIL" }, i + 1, l.text);
        all &= l.ok;
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
