use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use tokcol::engine::{Outcome, RunOutput};
use tokcol::topology::{parse_instance, Instance};
use tokcol::trace_io::write_trace;
use tokcol::verify::oracle_collision;
use tokcol::{Algorithm, Knowledge, RunConfig, RunStatus, Verdict};

use crate::exit::{CmdResult, Failure, MISMATCH, NO_DECISION, TIMEOUT};
use crate::{AlgoArg, KnowArg, RunArgs};

pub fn algorithm(a: AlgoArg) -> Algorithm {
    match a {
        AlgoArg::DetSmall => Algorithm::DetSmall,
        AlgoArg::DetLarge => Algorithm::DetLarge,
        AlgoArg::Rand => Algorithm::Randomized,
    }
}

pub fn knowledge(k: KnowArg) -> Knowledge {
    match k {
        KnowArg::N => Knowledge::N,
        KnowArg::K => Knowledge::K,
        KnowArg::None => Knowledge::None,
    }
}

pub fn read_instance(path: &Path) -> anyhow::Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_instance(&text).with_context(|| format!("parsing {}", path.display()))
}

/// One result row, shared by `run --out` (JSON) and `sweep` (CSV).
#[derive(Clone, Debug, Serialize)]
pub struct Record {
    pub run_id: u64,
    pub n: usize,
    pub k: usize,
    #[serde(rename = "L")]
    pub len: u32,
    #[serde(rename = "D")]
    pub diameter: usize,
    pub algorithm: String,
    pub knowledge: String,
    #[serde(rename = "B")]
    pub bandwidth: u32,
    pub rounds: u64,
    pub iterations: u64,
    pub verdict: String,
    pub oracle_verdict: String,
    pub max_bits: u64,
    pub seed: u64,
    pub phase_rounds_elect: Option<u64>,
    pub phase_rounds_seed: Option<u64>,
    pub phase_rounds_aggregate: Option<u64>,
    pub config_hash: String,
}

impl Record {
    pub fn new(run_id: u64, out: &RunOutput, oracle: Verdict, config_hash: &str) -> Self {
        let p = &out.params;
        let m = &out.metrics;
        let verdict = match (m.status, m.outcome()) {
            (_, Outcome::NoDecision) if p.knowledge == Knowledge::None => "none".to_string(),
            (RunStatus::Timeout, _) => "timeout".to_string(),
            (RunStatus::Halted, o) => o.to_string(),
        };
        let phases = if p.algorithm == Algorithm::Randomized { m.phase_rounds() } else { None };
        Record {
            run_id,
            n: p.n,
            k: p.k,
            len: p.token_len,
            diameter: p.diameter,
            algorithm: p.algorithm.to_string(),
            knowledge: p.knowledge.to_string(),
            bandwidth: p.bandwidth,
            rounds: m.rounds,
            iterations: m.iterations,
            verdict,
            oracle_verdict: oracle.to_string(),
            max_bits: m.max_message_bits,
            seed: p.seed,
            phase_rounds_elect: phases.map(|x| x.elect),
            phase_rounds_seed: phases.map(|x| x.seed),
            phase_rounds_aggregate: phases.map(|x| x.aggregate),
            config_hash: config_hash.to_string(),
        }
    }
}

/// Exit status for a finished run compared with the oracle.
pub fn judge(out: &RunOutput, oracle: Verdict) -> Result<(), Failure> {
    // Without n or k nothing can be decided; the round limit is the only way out.
    if out.params.knowledge == Knowledge::None && out.metrics.outcome() == Outcome::NoDecision {
        return Err(Failure::new(NO_DECISION, format!("no verdict after {} rounds", out.metrics.rounds)));
    }
    if out.metrics.status == RunStatus::Timeout {
        return Err(Failure::new(TIMEOUT, format!("round limit {} reached", out.params.round_limit)));
    }
    match out.metrics.outcome() {
        Outcome::Agreed(v) if v == oracle => Ok(()),
        Outcome::NoDecision => Err(Failure::new(NO_DECISION, "halted without a verdict")),
        other => Err(Failure::new(MISMATCH, format!("verdict {other}, oracle says {oracle}"))),
    }
}

pub fn cmd_run(a: &RunArgs) -> CmdResult {
    let inst = read_instance(&a.instance)?;
    let mut cfg = RunConfig::new(algorithm(a.algo), knowledge(a.know));
    cfg.bandwidth = a.bandwidth;
    cfg.pack_tokens = a.pack;
    cfg.round_limit = a.round_limit;
    cfg.seed = a.seed;
    cfg.rand.c = a.c;
    cfg.rand.beta = a.beta;
    if a.trace.is_some() {
        cfg = cfg.with_trace();
    }
    let out = tokcol::run(&inst.topology, &inst.tokens, &cfg)?;
    let oracle = oracle_collision(&inst.tokens);

    if let (Some(path), Some(trace)) = (&a.trace, &out.trace) {
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(f);
        write_trace(trace, &mut w)?;
        w.flush().with_context(|| format!("writing {}", path.display()))?;
    }

    let rec = Record::new(0, &out, oracle, "");
    println!(
        "{} knowledge={} n={} k={} L={} D={} B={}: verdict {} (oracle {}), {} rounds, {} iterations, max {} bits",
        rec.algorithm,
        rec.knowledge,
        rec.n,
        rec.k,
        rec.len,
        rec.diameter,
        rec.bandwidth,
        rec.verdict,
        rec.oracle_verdict,
        rec.rounds,
        rec.iterations,
        rec.max_bits
    );
    if let Some(path) = &a.out {
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .with_context(|| format!("opening {}", path.display()))?;
        let line = serde_json::to_string(&rec).context("encoding metrics")?;
        writeln!(f, "{line}").with_context(|| format!("writing {}", path.display()))?;
    }
    judge(&out, oracle)
}
