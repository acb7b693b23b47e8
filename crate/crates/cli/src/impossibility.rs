use std::fs::{self, File};
use std::io::{BufWriter, Write};

use anyhow::Context;
use tokcol::engine::small_default_bandwidth;
use tokcol::topology::{make_impossibility_pair_with, Orientation};
use tokcol::trace_io::write_trace;
use tokcol::verify::check_trace_equivalence;
use tokcol::{Knowledge, RunConfig, RunOutput, Trace};

use crate::exit::{CmdResult, Failure, MISMATCH, USAGE};
use crate::run::algorithm;
use crate::ImpossibilityArgs;

fn save(dir: &std::path::Path, name: &str, trace: &Trace) -> anyhow::Result<()> {
    let path = dir.join(name);
    let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
    write_trace(trace, &mut w)?;
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn cmd_impossibility(a: &ImpossibilityArgs) -> CmdResult {
    let sizes = if a.n.is_empty() { vec![3, 4, 5, 6] } else { a.n.clone() };
    if let Some(&bad) = sizes.iter().find(|&&n| n < 3) {
        return Err(Failure::new(USAGE, format!("ring size must be at least 3, got {bad}")));
    }
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut problems = Vec::new();
    for &n in &sizes {
        let run_pair = |orientation| -> Result<_, Failure> {
            let pair = make_impossibility_pair_with(n, orientation)?;
            let mut cfg = RunConfig::new(algorithm(a.algo), Knowledge::None).with_trace();
            if a.algo == crate::AlgoArg::DetSmall {
                cfg.bandwidth = Some(small_default_bandwidth(2 * n, pair.small.tokens.token_len()));
            }
            cfg.round_limit = Some(a.rounds);
            let small: RunOutput = tokcol::run(&pair.small.topology, &pair.small.tokens, &cfg)?;
            let big: RunOutput = tokcol::run(&pair.big.topology, &pair.big.tokens, &cfg)?;
            Ok((pair, small, big))
        };

        let (pair, small, big) = run_pair(Orientation::Matched)?;
        let (st, bt) = (small.trace.as_ref().expect("trace"), big.trace.as_ref().expect("trace"));
        let rep = check_trace_equivalence(st, bt, &pair.correspondence);
        let decided = small.metrics.verdicts.iter().chain(&big.metrics.verdicts).any(Option::is_some);
        let status = match &rep.divergence {
            None => "identical".to_string(),
            Some(d) => format!(
                "diverge at snapshot {} (big node {}, small node {}): {} vs {}",
                d.snapshot, d.big_node, d.small_node, d.big_state, d.small_state
            ),
        };
        println!(
            "n={n} matched: {} snapshots compared over {} rounds, {status}, decided {decided}",
            rep.compared,
            small.metrics.rounds.min(big.metrics.rounds)
        );
        if !rep.passed() {
            problems.push(format!("n={n}: matched rings diverge"));
        }
        if let Some(dir) = &a.out {
            save(dir, &format!("small_{n}.jsonl"), st)?;
            save(dir, &format!("big_{n}.jsonl"), bt)?;
        }

        let (pair, small, big) = run_pair(Orientation::Mismatched)?;
        let neg = check_trace_equivalence(
            small.trace.as_ref().expect("trace"),
            big.trace.as_ref().expect("trace"),
            &pair.correspondence,
        );
        match &neg.divergence {
            Some(d) => println!("n={n} control (ports flipped on one half): diverges at snapshot {}", d.snapshot),
            None => {
                println!("n={n} control (ports flipped on one half): no divergence");
                problems.push(format!("n={n}: control did not diverge"));
            }
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Failure::new(MISMATCH, problems.join("; ")))
    }
}
