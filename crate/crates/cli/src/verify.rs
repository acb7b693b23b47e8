use std::fs::{self, File};
use std::io::BufReader;

use anyhow::Context;
use rayon::prelude::*;
use tokcol::corpus::{self, Entry};
use tokcol::engine::Outcome;
use tokcol::trace_io::read_trace;
use tokcol::verify::{check_trace, faults, oracle_collision, InvariantReport};
use tokcol::{Algorithm, Error, Knowledge, RunConfig, RunStatus};

use crate::exit::{CmdResult, Failure, INTERNAL, VERIFY};
use crate::run::read_instance;
use crate::sweep::pool;
use crate::VerifyArgs;

#[derive(Default)]
struct EntryResult {
    report: InvariantReport,
    runs: u64,
    wrong: Vec<String>,
    errors: Vec<String>,
}

fn entry_configs(e: &Entry) -> Vec<RunConfig> {
    let mut out = corpus::configs(e);
    let mut r = RunConfig::new(Algorithm::Randomized, if e.id.is_multiple_of(2) { Knowledge::N } else { Knowledge::K });
    r.bandwidth = Some(corpus::PIECE_BITS);
    r.seed = e.seed;
    out.push(r);
    out.into_iter().map(RunConfig::with_trace).collect()
}

fn check_entry(e: &Entry) -> EntryResult {
    let mut res = EntryResult::default();
    let inst = &e.instance;
    let oracle = oracle_collision(&inst.tokens);
    for cfg in entry_configs(e) {
        let out = match tokcol::run(&inst.topology, &inst.tokens, &cfg) {
            Ok(o) => o,
            // The hash range of the randomized protocol does not fit every (k, L).
            Err(Error::InvalidConfig(_)) if cfg.algorithm == Algorithm::Randomized => continue,
            Err(err) => {
                res.errors.push(format!("entry {} {}: {err}", e.id, cfg.algorithm));
                continue;
            }
        };
        res.runs += 1;
        let trace = out.trace.as_ref().expect("trace requested");
        res.report.merge(&check_trace(trace, &inst.tokens, &inst.topology));
        let fine = out.metrics.status == RunStatus::Halted && out.metrics.outcome() == Outcome::Agreed(oracle);
        // The randomized protocol may report a false collision with small probability.
        if !fine && cfg.algorithm != Algorithm::Randomized {
            res.wrong.push(format!("entry {} {} pack={}: {} vs oracle {oracle}", e.id, cfg.algorithm, cfg.pack_tokens, out.metrics.outcome()));
        }
    }
    res
}

pub fn cmd_verify(a: &VerifyArgs) -> CmdResult {
    let mut text = String::new();
    let mut failed = false;

    if let (Some(tp), Some(ip)) = (&a.trace, &a.instance) {
        let inst = read_instance(ip)?;
        let f = File::open(tp).with_context(|| format!("opening {}", tp.display()))?;
        let trace = read_trace(BufReader::new(f)).with_context(|| format!("reading {}", tp.display()))?;
        let report = check_trace(&trace, &inst.tokens, &inst.topology);
        failed |= !report.passed();
        text.push_str(&report.to_text());
    } else {
        let entries = corpus::generate(a.corpus_size, a.seed)?;
        let results: Vec<EntryResult> = pool()?.install(|| entries.par_iter().map(check_entry).collect());
        let mut report = InvariantReport::default();
        let (mut runs, mut wrong, mut errors) = (0, Vec::new(), Vec::new());
        for r in results {
            report.merge(&r.report);
            runs += r.runs;
            wrong.extend(r.wrong);
            errors.extend(r.errors);
        }
        text.push_str(&format!(
            "corpus {} instances seed {} runs {} oracle mismatches {} errors {}\n",
            entries.len(),
            a.seed,
            runs,
            wrong.len(),
            errors.len()
        ));
        for w in wrong.iter().chain(&errors).take(5) {
            text.push_str(&format!("  {w}\n"));
        }
        text.push_str(&report.to_text());
        failed |= !report.passed() || !wrong.is_empty() || !errors.is_empty();
    }

    if a.faults {
        let outcomes = faults::self_test().map_err(|e| Failure::new(INTERNAL, format!("fault baseline: {e}")))?;
        let caught = outcomes.iter().filter(|o| o.caught).count();
        text.push_str(&format!("faults caught {caught}/{}\n", outcomes.len()));
        for o in outcomes.iter().filter(|o| !o.caught) {
            text.push_str(&format!("  missed {} ({})\n", o.name, o.target));
        }
        failed |= caught != outcomes.len();
    }

    print!("{text}");
    if let Some(p) = &a.out {
        fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?;
    }
    if failed {
        Err(Failure::new(VERIFY, "verification failed"))
    } else {
        Ok(())
    }
}
