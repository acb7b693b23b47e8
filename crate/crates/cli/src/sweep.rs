use std::fs::{self, File};
use std::path::PathBuf;

use anyhow::Context;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tokcol::topology::{assign_tokens, Instance};
use tokcol::verify::oracle_collision;
use tokcol::{rng, RunConfig};

use crate::exit::{CmdResult, Failure, USAGE};
use crate::gen::{assign_mode, build_topology};
use crate::run::{algorithm, judge, knowledge, Record};
use crate::{AlgoArg, Kind, KnowArg, Mode, SweepArgs};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub seed: u64,
    #[serde(default = "one")]
    pub repetitions: u32,
    pub output: Option<PathBuf>,
    pub topology: TopologySection,
    #[serde(default)]
    pub assignment: AssignmentSection,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySection {
    pub kinds: Vec<KindName>,
    pub n: Vec<usize>,
    #[serde(default = "default_edge_prob")]
    pub edge_prob: f64,
    #[serde(default)]
    pub bridge: usize,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssignmentSection {
    /// Token counts; `k = n` when absent.
    pub k: Option<Vec<usize>>,
    /// Token lengths; `⌈log2 n⌉ + 2` when absent.
    pub token_len: Option<Vec<u32>>,
    #[serde(default)]
    pub mode: ModeName,
    #[serde(default = "one_usize")]
    pub duplicates: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub algorithms: Vec<AlgoName>,
    pub knowledge: Vec<KnowName>,
    /// Message width for det-small.
    pub message_bits: Option<u32>,
    /// Piece width for det-large and rand.
    pub piece_bits: Option<u32>,
    #[serde(default)]
    pub pack: bool,
    pub round_limit: Option<u64>,
    #[serde(default = "default_c")]
    pub c: u32,
    #[serde(default = "default_beta")]
    pub beta: u32,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            algorithms: vec![AlgoName::DetSmall],
            knowledge: vec![KnowName::N],
            message_bits: None,
            piece_bits: None,
            pack: false,
            round_limit: None,
            c: default_c(),
            beta: default_beta(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindName {
    Ring,
    Path,
    Random,
    Dumbbell,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeName {
    #[default]
    Distinct,
    Duplicates,
    MinFar,
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgoName {
    DetSmall,
    DetLarge,
    Rand,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KnowName {
    N,
    K,
    None,
}

fn one() -> u32 {
    1
}
fn one_usize() -> usize {
    1
}
fn default_edge_prob() -> f64 {
    0.2
}
fn default_c() -> u32 {
    4
}
fn default_beta() -> u32 {
    2
}

impl KindName {
    fn kind(self) -> Kind {
        match self {
            KindName::Ring => Kind::Ring,
            KindName::Path => Kind::Path,
            KindName::Random => Kind::Random,
            KindName::Dumbbell => Kind::Dumbbell,
        }
    }
}

impl ModeName {
    fn mode(self) -> Mode {
        match self {
            ModeName::Distinct => Mode::Distinct,
            ModeName::Duplicates => Mode::Duplicates,
            ModeName::MinFar => Mode::MinFar,
            ModeName::Uniform => Mode::Uniform,
        }
    }
}

impl AlgoName {
    fn arg(self) -> AlgoArg {
        match self {
            AlgoName::DetSmall => AlgoArg::DetSmall,
            AlgoName::DetLarge => AlgoArg::DetLarge,
            AlgoName::Rand => AlgoArg::Rand,
        }
    }
}

impl KnowName {
    fn arg(self) -> KnowArg {
        match self {
            KnowName::N => KnowArg::N,
            KnowName::K => KnowArg::K,
            KnowName::None => KnowArg::None,
        }
    }
}

pub fn parse_config(text: &str) -> anyhow::Result<SweepConfig> {
    let cfg: SweepConfig = toml::from_str(text)?;
    Ok(cfg)
}

/// sha256 of the config re-serialized in canonical field order.
pub fn config_hash(cfg: &SweepConfig) -> anyhow::Result<String> {
    let canonical = toml::to_string(cfg).context("serializing config")?;
    let digest = Sha256::digest(canonical.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn clog2(x: usize) -> u32 {
    if x <= 1 {
        0
    } else {
        usize::BITS - (x - 1).leading_zeros()
    }
}

#[derive(Clone, Debug)]
struct Job {
    run_id: u64,
    kind: KindName,
    n: usize,
    k: Option<usize>,
    len: Option<u32>,
    algo: AlgoName,
    know: KnowName,
    seed: u64,
}

fn jobs(cfg: &SweepConfig) -> Vec<Job> {
    let ks: Vec<Option<usize>> = cfg.assignment.k.as_ref().map_or(vec![None], |v| v.iter().copied().map(Some).collect());
    let lens: Vec<Option<u32>> =
        cfg.assignment.token_len.as_ref().map_or(vec![None], |v| v.iter().copied().map(Some).collect());
    let mut out = Vec::new();
    let mut instance = 0u64;
    for &kind in &cfg.topology.kinds {
        for &n in &cfg.topology.n {
            for &k in &ks {
                for &len in &lens {
                    for _ in 0..cfg.repetitions {
                        let seed = rng::derive(cfg.seed, "sweep", instance);
                        instance += 1;
                        for &algo in &cfg.run.algorithms {
                            for &know in &cfg.run.knowledge {
                                let run_id = out.len() as u64;
                                out.push(Job { run_id, kind, n, k, len, algo, know, seed });
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Runs one job; a failed run still yields a row, with its failure alongside.
fn execute(cfg: &SweepConfig, job: &Job, hash: &str) -> (Record, Option<Failure>) {
    match try_execute(cfg, job, hash) {
        Ok(r) => r,
        Err(f) => {
            let rec = Record {
                run_id: job.run_id,
                n: job.n,
                k: job.k.unwrap_or(0),
                len: job.len.unwrap_or(0),
                diameter: 0,
                algorithm: algorithm(job.algo.arg()).to_string(),
                knowledge: knowledge(job.know.arg()).to_string(),
                bandwidth: 0,
                rounds: 0,
                iterations: 0,
                verdict: "error".into(),
                oracle_verdict: String::new(),
                max_bits: 0,
                seed: job.seed,
                phase_rounds_elect: None,
                phase_rounds_seed: None,
                phase_rounds_aggregate: None,
                config_hash: hash.to_string(),
            };
            (rec, Some(f))
        }
    }
}

fn try_execute(cfg: &SweepConfig, job: &Job, hash: &str) -> Result<(Record, Option<Failure>), Failure> {
    let topology = build_topology(job.kind.kind(), job.n, cfg.topology.edge_prob, cfg.topology.bridge, job.seed)?;
    let n = topology.node_count();
    let k = job.k.unwrap_or(n);
    let len = job.len.unwrap_or(clog2(n) + 2);
    let tokens = assign_tokens(&topology, k, len, assign_mode(cfg.assignment.mode.mode(), cfg.assignment.duplicates), job.seed)?;
    let inst = Instance { topology, tokens };
    let mut rc = RunConfig::new(algorithm(job.algo.arg()), knowledge(job.know.arg()));
    let det_small = rc.algorithm == tokcol::Algorithm::DetSmall;
    rc.bandwidth = if det_small { cfg.run.message_bits } else { cfg.run.piece_bits };
    rc.pack_tokens = det_small && cfg.run.pack;
    rc.round_limit = cfg.run.round_limit;
    rc.seed = job.seed;
    rc.rand.c = cfg.run.c;
    rc.rand.beta = cfg.run.beta;
    let out = tokcol::run(&inst.topology, &inst.tokens, &rc)?;
    let oracle = oracle_collision(&inst.tokens);
    Ok((Record::new(job.run_id, &out, oracle, hash), judge(&out, oracle).err()))
}

/// Least squares `rounds ≈ a + C·x` with `x = D + k·⌈L/B⌉`.
pub fn fit(records: &[&Record]) -> Option<(f64, f64, f64)> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .map(|r| ((r.diameter as u64 + r.k as u64 * (r.len as u64).div_ceil(r.bandwidth as u64)) as f64, r.rounds as f64))
        .collect();
    let m = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let c = sxy / sxx;
    let a = my - c * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some((a, c, r2))
}

pub fn pool() -> anyhow::Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(w) = std::env::var("TOKCOL_WORKERS") {
        let w: usize = w.trim().parse().with_context(|| format!("TOKCOL_WORKERS={w:?} is not a count"))?;
        b = b.num_threads(w);
    }
    Ok(b.build()?)
}

pub fn cmd_sweep(a: &SweepArgs) -> CmdResult {
    let text = fs::read_to_string(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    let mut cfg = parse_config(&text).with_context(|| format!("parsing {}", a.config.display()))?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if cfg.topology.kinds.is_empty() || cfg.topology.n.is_empty() || cfg.run.algorithms.is_empty() || cfg.run.knowledge.is_empty() {
        return Err(Failure::new(USAGE, "config grid is empty"));
    }
    let output = a
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .ok_or_else(|| Failure::new(USAGE, "no output file: set `output` or pass --out"))?;
    let hash = config_hash(&cfg)?;
    let jobs = jobs(&cfg);
    let pool = pool()?;
    let results: Vec<(Record, Option<Failure>)> =
        pool.install(|| jobs.par_iter().map(|j| execute(&cfg, j, &hash)).collect());
    let (records, failures): (Vec<Record>, Vec<Option<Failure>>) = results.into_iter().unzip();

    let f = File::create(&output).with_context(|| format!("creating {}", output.display()))?;
    let mut w = csv::Writer::from_writer(f);
    for r in &records {
        w.serialize(r).context("writing csv row")?;
    }
    w.flush().with_context(|| format!("writing {}", output.display()))?;

    for alg in &cfg.run.algorithms {
        let name = algorithm(alg.arg()).to_string();
        let rows: Vec<&Record> = records.iter().filter(|r| r.algorithm == name).collect();
        let good: Vec<&Record> = rows.iter().copied().filter(|r| r.verdict == r.oracle_verdict).collect();
        let wrong = rows.len() - good.len();
        match fit(&good) {
            Some((a0, c, r2)) => println!(
                "{name}: {} runs, {wrong} not matching the oracle, rounds ≈ {a0:.2} + {c:.3}·(D + k⌈L/B⌉), r² = {r2:.3}",
                rows.len()
            ),
            None => println!("{name}: {} runs, {wrong} not matching the oracle, too few distinct points to fit", rows.len()),
        }
    }
    println!("{} rows written to {} (config {})", records.len(), output.display(), &hash[..12]);
    let failed: Vec<(u64, Failure)> =
        records.iter().zip(failures).filter_map(|(r, f)| f.map(|f| (r.run_id, f))).collect();
    for (id, f) in failed.iter().take(5) {
        eprintln!("run {id}: {}", f.message);
    }
    match failed.into_iter().next() {
        None => Ok(()),
        Some((id, f)) => Err(Failure::new(f.code, format!("run {id} failed (first of the failing runs)"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(d: usize, k: usize, rounds: u64) -> Record {
        Record {
            run_id: 0,
            n: 1,
            k,
            len: 8,
            diameter: d,
            algorithm: "det-large".into(),
            knowledge: "n".into(),
            bandwidth: 4,
            rounds,
            iterations: 0,
            verdict: String::new(),
            oracle_verdict: String::new(),
            max_bits: 0,
            seed: 0,
            phase_rounds_elect: None,
            phase_rounds_seed: None,
            phase_rounds_aggregate: None,
            config_hash: String::new(),
        }
    }

    #[test]
    fn fit_recovers_a_line() {
        // x = d + 2k
        let rs = [rec(1, 1, 13), rec(2, 3, 33), rec(4, 5, 57)];
        let refs: Vec<&Record> = rs.iter().collect();
        let (a, c, r2) = fit(&refs).unwrap();
        assert!((a - 1.0).abs() < 1e-9 && (c - 4.0).abs() < 1e-9 && (r2 - 1.0).abs() < 1e-9, "{a} {c} {r2}");
        assert!(fit(&refs[..1]).is_none());
    }

    #[test]
    fn hash_ignores_formatting() {
        let a = parse_config("seed = 1\n[topology]\nkinds = [\"ring\"]\nn = [4]\n").unwrap();
        let b = parse_config("# c\nseed=1\n\n[topology]\nn=[4]\nkinds=['ring']\nedge_prob = 0.2\n").unwrap();
        assert_eq!(config_hash(&a).unwrap(), config_hash(&b).unwrap());
    }
}
