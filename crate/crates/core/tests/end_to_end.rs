use proptest::prelude::*;
use tokcol::engine::Outcome;
use tokcol::topology::{assign_tokens, make_path, make_random_connected, make_ring, AssignMode, Topology};
use tokcol::verify::oracle_collision;
use tokcol::{run, Algorithm, Knowledge, RunConfig, RunStatus, Verdict};

fn topology(family: u8, n: usize, seed: u64) -> Topology {
    match family {
        0 if n >= 3 => make_ring(n, seed).unwrap(),
        1 => make_path(n, seed).unwrap(),
        _ => make_random_connected(n, 0.2, seed).unwrap(),
    }
}

fn decide(t: &Topology, a: &tokcol::topology::TokenAssignment, cfg: &RunConfig) -> Outcome {
    let out = run(t, a, cfg).unwrap();
    assert_eq!(out.metrics.status, RunStatus::Halted);
    out.metrics.outcome()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn deterministic_protocols_match_oracle(
        family in 0u8..3,
        n in 1usize..18,
        k in 1usize..28,
        len_idx in 0usize..3,
        dup in 0usize..3,
        know_n in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let len = [6u32, 16, 70][len_idx];
        let t = topology(family, n, seed);
        let mode = if dup > 0 && k >= 2 * dup { AssignMode::WithDuplicates(dup) } else { AssignMode::Uniform };
        let a = assign_tokens(&t, k, len, mode, seed).unwrap();
        let oracle = oracle_collision(&a);
        let know = if know_n { Knowledge::N } else { Knowledge::K };
        if len <= 16 {
            for pack in [false, true] {
                let mut cfg = RunConfig::new(Algorithm::DetSmall, know);
                cfg.pack_tokens = pack;
                prop_assert_eq!(decide(&t, &a, &cfg), Outcome::Agreed(oracle));
            }
        }
        for b in [3, 16] {
            let mut cfg = RunConfig::new(Algorithm::DetLarge, know);
            cfg.bandwidth = Some(b);
            prop_assert_eq!(decide(&t, &a, &cfg), Outcome::Agreed(oracle));
        }
    }

    #[test]
    fn randomized_never_misses_a_collision(
        family in 0u8..3,
        n in 2usize..16,
        k in 2usize..24,
        seed in any::<u64>(),
    ) {
        let t = topology(family, n, seed);
        let a = assign_tokens(&t, k, 32, AssignMode::WithDuplicates(1), seed).unwrap();
        let mut cfg = RunConfig::new(Algorithm::Randomized, Knowledge::N);
        cfg.seed = seed;
        prop_assert_eq!(decide(&t, &a, &cfg), Outcome::Agreed(Verdict::Collision));
    }
}

#[test]
fn single_node_decides_alone() {
    let t = make_path(1, 0).unwrap();
    for (k, mode, want) in [(1, AssignMode::Distinct, Verdict::AllDistinct), (4, AssignMode::WithDuplicates(1), Verdict::Collision)] {
        let a = assign_tokens(&t, k, 8, mode, 3).unwrap();
        for alg in [Algorithm::DetSmall, Algorithm::DetLarge, Algorithm::Randomized] {
            let cfg = RunConfig::new(alg, Knowledge::K);
            assert_eq!(decide(&t, &a, &cfg), Outcome::Agreed(want), "{alg}");
        }
    }
}

#[test]
fn runs_are_reproducible() {
    let t = make_random_connected(14, 0.25, 8).unwrap();
    let a = assign_tokens(&t, 20, 40, AssignMode::Distinct, 8).unwrap();
    for alg in [Algorithm::DetLarge, Algorithm::Randomized] {
        let mut cfg = RunConfig::new(alg, Knowledge::N).with_trace();
        cfg.seed = 17;
        let x = run(&t, &a, &cfg).unwrap();
        let y = run(&t, &a, &cfg).unwrap();
        assert_eq!(x.metrics, y.metrics);
        assert_eq!(x.trace, y.trace);
    }
}
