//! Synchronous round scheduler.
//!
//! One superstep: every live node composes one message per port from its
//! pre-round state; nodes that already hold a verdict then halt; every
//! remaining node reads exactly the messages its peers sent and updates.
//! For the small-token protocol a superstep is one round and every message
//! must fit in `B` bits. The pipelined protocols call a superstep an
//! iteration and charge it `max(1, ⌈largest message / B⌉)` rounds.

use serde::{Deserialize, Serialize};

use crate::algo::{LargeProtocol, RandProtocol, SmallProtocol};
use crate::error::{Error, Result};
use crate::message::{ceil_log2, Layout, RoundMessage, Verdict};
use crate::state::{Core, NodeState};
use crate::token::Token;
use crate::topology::{diameter, Port, Topology, TokenAssignment};

pub const TRACE_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    DetSmall,
    DetLarge,
    Randomized,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::DetSmall => "det-small",
            Algorithm::DetLarge => "det-large",
            Algorithm::Randomized => "rand",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Knowledge {
    N,
    K,
    None,
}

impl std::fmt::Display for Knowledge {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Knowledge::N => "n",
            Knowledge::K => "k",
            Knowledge::None => "none",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceLevel {
    Metrics,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandParams {
    /// Identifier length multiplier.
    pub c: u32,
    /// Hash range exponent offset: `q = khat^(2+beta)`.
    pub beta: u32,
}

impl Default for RandParams {
    fn default() -> Self {
        RandParams { c: 4, beta: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub knowledge: Knowledge,
    /// `None` picks the per-algorithm default.
    pub bandwidth: Option<u32>,
    pub pack_tokens: bool,
    /// In rounds. `None` means `64·(D + k·⌈L/B⌉ + L)`.
    pub round_limit: Option<u64>,
    pub trace: TraceLevel,
    pub seed: u64,
    pub rand: RandParams,
}

impl RunConfig {
    pub fn new(algorithm: Algorithm, knowledge: Knowledge) -> Self {
        RunConfig {
            algorithm,
            knowledge,
            bandwidth: None,
            pack_tokens: false,
            round_limit: None,
            trace: TraceLevel::Metrics,
            seed: 0,
            rand: RandParams::default(),
        }
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = TraceLevel::Full;
        self
    }
}

/// Everything derived from `(topology, assignment, config)` before a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub algorithm: Algorithm,
    pub knowledge: Knowledge,
    pub n: usize,
    pub k: usize,
    pub token_len: u32,
    pub diameter: usize,
    pub bandwidth: u32,
    /// Pieces per identifier and per streamed token.
    pub pieces: u32,
    /// Pieces per iteration.
    pub per_iter: u32,
    /// Identifier width (small: `L`; large: `M·B`; rand: `M·B` over the
    /// sampled identifier length).
    pub id_bits: u32,
    pub pack_tokens: bool,
    pub pack_cap: u32,
    pub round_limit: u64,
    pub seed: u64,
    pub rand: RandParams,
    pub layout: Layout,
}

/// Default `B` for the pipelined protocols.
pub fn default_piece_bits(n: usize) -> u32 {
    (4 * ceil_log2(n as u64 + 1)).clamp(8, 64)
}

/// Exact size of the largest small-protocol message without packing.
pub fn small_default_bandwidth(n: usize, token_len: u32) -> u32 {
    10 + 2 * token_len + ceil_log2(n as u64 + 1)
}

/// Default `B` in packing mode: room for four tokens per message.
pub fn packed_default_bandwidth(n: usize, token_len: u32) -> u32 {
    8 + token_len + ceil_log2(n as u64 + 1) + 2 + ceil_log2(5) + 4 * token_len
}

/// Pieces per iteration `P = max(1, ⌈⌈log2 M⌉ / B⌉)`.
pub fn pieces_per_iteration(m: u32, b: u32) -> u32 {
    ceil_log2(m as u64).div_ceil(b).max(1)
}

/// Identifier length for the randomized protocol.
pub fn rand_id_len(c: u32, knowledge: Knowledge, n: usize, k: usize) -> u32 {
    let bound = match knowledge {
        Knowledge::K => k,
        _ => n,
    };
    c * ceil_log2(bound as u64).max(1)
}

pub fn resolve(t: &Topology, a: &TokenAssignment, cfg: &RunConfig) -> Result<Params> {
    let n = t.node_count();
    if a.node_count() != n {
        return Err(Error::InvalidConfig(format!(
            "assignment covers {} nodes, topology has {n}",
            a.node_count()
        )));
    }
    let k = a.k();
    let len = a.token_len();
    let d = diameter(t);
    let (bandwidth, pieces, per_iter, id_bits, pack_cap) = match cfg.algorithm {
        Algorithm::DetSmall => {
            let header = 8 + len as u64 + ceil_log2(n as u64 + 1) as u64;
            let b = match (cfg.bandwidth, cfg.pack_tokens) {
                (Some(b), _) => b,
                (None, false) => small_default_bandwidth(n, len),
                (None, true) => packed_default_bandwidth(n, len),
            };
            let cap = if cfg.pack_tokens {
                if 2 * len as u64 >= b as u64 {
                    return Err(Error::InvalidConfig(format!(
                        "token packing needs L < B/2, got L = {len}, B = {b}"
                    )));
                }
                let mut c = 1u32;
                while header + 2 + ceil_log2(c as u64 + 2) as u64 + (c as u64 + 1) * len as u64 <= b as u64 {
                    c += 1;
                }
                c
            } else {
                1
            };
            (b, 1, 1, len, cap)
        }
        Algorithm::DetLarge | Algorithm::Randomized => {
            if cfg.pack_tokens {
                return Err(Error::InvalidConfig("token packing applies to det-small only".into()));
            }
            let b = cfg.bandwidth.unwrap_or_else(|| default_piece_bits(n));
            if b == 0 || b > 64 {
                return Err(Error::InvalidConfig(format!("piece width B must be in 1..=64, got {b}")));
            }
            let raw = if cfg.algorithm == Algorithm::DetLarge {
                len
            } else {
                if cfg.knowledge == Knowledge::None {
                    return Err(Error::InvalidConfig("the randomized protocol needs knowledge of n or k".into()));
                }
                if cfg.rand.c < 1 {
                    return Err(Error::InvalidConfig("identifier multiplier c must be positive".into()));
                }
                if crate::algo::HashSpec::build(len, k as u64, cfg.rand.beta, 0).is_err() {
                    return Err(Error::InvalidConfig(format!(
                        "hash range overflows for k = {k}, L = {len}, beta = {}",
                        cfg.rand.beta
                    )));
                }
                rand_id_len(cfg.rand.c, cfg.knowledge, n, k)
            };
            let m = raw.div_ceil(b);
            (b, m, pieces_per_iteration(m, b), m * b, 1)
        }
    };
    if bandwidth == 0 {
        return Err(Error::InvalidConfig("bandwidth must be positive".into()));
    }
    let round_limit = cfg.round_limit.unwrap_or_else(|| {
        64 * (d as u64 + k as u64 * (len as u64).div_ceil(bandwidth as u64) + len as u64)
    });
    let layout = Layout { n, token_len: len, piece_bits: bandwidth, pieces, pack_cap };
    Ok(Params {
        algorithm: cfg.algorithm,
        knowledge: cfg.knowledge,
        n,
        k,
        token_len: len,
        diameter: d,
        bandwidth,
        pieces,
        per_iter,
        id_bits,
        pack_tokens: cfg.pack_tokens,
        pack_cap,
        round_limit,
        seed: cfg.seed,
        rand: cfg.rand,
        layout,
    })
}

/// A node automaton: a pure transition function over its own state.
pub trait Protocol {
    type State: Clone + Into<NodeState>;

    fn init(&self, v: usize, inputs: &[Token], degree: usize) -> Self::State;
    fn compose(&self, s: &Self::State, port: Port) -> RoundMessage;
    /// Bookkeeping after all messages of the round have been composed.
    fn after_send(&self, _s: &mut Self::State) {}
    fn receive(&self, s: &mut Self::State, inbox: &[RoundMessage]);
    fn core<'a>(&self, s: &'a Self::State) -> &'a Core;
    fn hash_known(&self, _s: &Self::State) -> bool {
        false
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mark {
    pub iteration: u64,
    pub round: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseRounds {
    pub elect: u64,
    pub seed: u64,
    pub aggregate: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Halted,
    Timeout,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub status: RunStatus,
    pub rounds: u64,
    pub iterations: u64,
    pub max_message_bits: u64,
    pub total_messages: u64,
    pub verdicts: Vec<Option<Verdict>>,
    /// Iteration in which each node sent its last message.
    pub halted_iteration: Vec<Option<u64>>,
    /// First point at which every node has `build = false`.
    pub build_done: Option<Mark>,
    /// First point at which every node knows the hash seed.
    pub hash_done: Option<Mark>,
    pub first_decision: Option<Mark>,
}

/// Outcome shared by all nodes, if they agree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Agreed(Verdict),
    Disagree,
    NoDecision,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Outcome::Agreed(v) => v.fmt(f),
            Outcome::Disagree => f.write_str("disagree"),
            Outcome::NoDecision => f.write_str("none"),
        }
    }
}

impl RunMetrics {
    pub fn outcome(&self) -> Outcome {
        let first = self.verdicts[0];
        if self.verdicts.iter().any(|v| *v != first) {
            Outcome::Disagree
        } else {
            first.map_or(Outcome::NoDecision, Outcome::Agreed)
        }
    }

    /// Rounds spent electing, broadcasting the seed and aggregating.
    pub fn phase_rounds(&self) -> Option<PhaseRounds> {
        let elect = self.build_done?.round;
        let seed_end = self.hash_done.map_or(self.rounds, |m| m.round);
        let agg_end = self.first_decision.map_or(self.rounds, |m| m.round);
        Some(PhaseRounds {
            elect,
            seed: seed_end.saturating_sub(elect),
            aggregate: agg_end.saturating_sub(seed_end),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub format_version: u32,
    pub params: Params,
}

/// `snapshots[i]` holds every node's state after superstep `i`
/// (`snapshots[0]` is the initial state). `rounds[i]` is the round count
/// at that point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub header: TraceHeader,
    pub snapshots: Vec<Vec<NodeState>>,
    pub rounds: Vec<u64>,
    pub truncated: bool,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub params: Params,
    pub metrics: RunMetrics,
    pub trace: Option<Trace>,
}

pub struct World<'t, P: Protocol> {
    topo: &'t Topology,
    proto: P,
    layout: Layout,
    bandwidth: u64,
    strict: bool,
    states: Vec<P::State>,
    halted: Vec<bool>,
    pub metrics: RunMetrics,
}

impl<'t, P: Protocol> World<'t, P> {
    pub fn new(topo: &'t Topology, a: &TokenAssignment, proto: P, params: &Params) -> Self {
        let n = topo.node_count();
        let states = (0..n).map(|v| proto.init(v, a.tokens_at(v), topo.degree(v))).collect();
        World {
            topo,
            proto,
            layout: params.layout,
            bandwidth: params.bandwidth as u64,
            strict: params.algorithm == Algorithm::DetSmall,
            states,
            halted: vec![false; n],
            metrics: RunMetrics {
                status: RunStatus::Halted,
                rounds: 0,
                iterations: 0,
                max_message_bits: 0,
                total_messages: 0,
                verdicts: vec![None; n],
                halted_iteration: vec![None; n],
                build_done: None,
                hash_done: None,
                first_decision: None,
            },
        }
    }

    pub fn all_halted(&self) -> bool {
        self.halted.iter().all(|&h| h)
    }

    pub fn snapshot(&self) -> Vec<NodeState> {
        self.states.iter().cloned().map(Into::into).collect()
    }

    pub fn step(&mut self) -> Result<()> {
        if self.all_halted() {
            return Ok(());
        }
        let iteration = self.metrics.iterations + 1;
        let n = self.topo.node_count();
        let mut outbox: Vec<Vec<Option<RoundMessage>>> = vec![Vec::new(); n];
        let mut step_bits = 0u64;
        for v in (0..n).filter(|&v| !self.halted[v]) {
            let mut out = Vec::with_capacity(self.topo.degree(v));
            for port in 1..=self.topo.degree(v) as Port {
                let m = self.proto.compose(&self.states[v], port);
                let bits = self.layout.message_bits(&m);
                if self.strict && bits > self.bandwidth {
                    let fields = self
                        .layout
                        .field_bits(&m)
                        .iter()
                        .map(|(name, b)| format!("{name}={b}"))
                        .collect::<Vec<_>>()
                        .join(" ");
                    return Err(Error::BandwidthViolation {
                        round: self.metrics.rounds + 1,
                        bits,
                        budget: self.bandwidth,
                        fields,
                    });
                }
                step_bits = step_bits.max(bits);
                out.push(Some(m));
            }
            self.metrics.total_messages += out.len() as u64;
            outbox[v] = out;
        }
        for v in (0..n).filter(|&v| !self.halted[v]) {
            self.proto.after_send(&mut self.states[v]);
        }
        let mut receivers = Vec::new();
        for v in 0..n {
            if self.halted[v] {
                continue;
            }
            if let Some(r) = self.proto.core(&self.states[v]).res {
                self.halted[v] = true;
                self.metrics.verdicts[v] = Some(r);
                self.metrics.halted_iteration[v] = Some(iteration);
            } else {
                receivers.push(v);
            }
        }
        for v in receivers {
            let mut inbox = Vec::with_capacity(self.topo.degree(v));
            for port in 1..=self.topo.degree(v) as Port {
                let end = self.topo.peer(v, port);
                match outbox[end.node].get(end.port as usize - 1).and_then(Option::as_ref) {
                    Some(m) => inbox.push(m.clone()),
                    None => {
                        return Err(Error::InternalInvariant {
                            round: self.metrics.rounds + 1,
                            detail: format!("live node {v} reads silence on port {port}"),
                        })
                    }
                }
            }
            self.proto.receive(&mut self.states[v], &inbox);
        }

        self.metrics.iterations = iteration;
        self.metrics.max_message_bits = self.metrics.max_message_bits.max(step_bits);
        self.metrics.rounds += if self.strict { 1 } else { step_bits.div_ceil(self.bandwidth).max(1) };
        let mark = Mark { iteration, round: self.metrics.rounds };
        let cores = || self.states.iter().map(|s| self.proto.core(s));
        if self.metrics.build_done.is_none() && cores().all(|c| !c.build) {
            self.metrics.build_done = Some(mark);
        }
        if self.metrics.hash_done.is_none() && self.states.iter().all(|s| self.proto.hash_known(s)) {
            self.metrics.hash_done = Some(mark);
        }
        if self.metrics.first_decision.is_none() && cores().any(|c| c.res.is_some()) {
            self.metrics.first_decision = Some(mark);
        }
        Ok(())
    }
}

fn drive<P: Protocol>(t: &Topology, a: &TokenAssignment, proto: P, params: Params, trace: TraceLevel) -> Result<RunOutput> {
    let mut world = World::new(t, a, proto, &params);
    let mut tr = (trace == TraceLevel::Full).then(|| Trace {
        header: TraceHeader { format_version: TRACE_FORMAT_VERSION, params: params.clone() },
        snapshots: vec![world.snapshot()],
        rounds: vec![0],
        truncated: false,
    });
    while !world.all_halted() {
        if world.metrics.rounds >= params.round_limit {
            world.metrics.status = RunStatus::Timeout;
            if let Some(tr) = tr.as_mut() {
                tr.truncated = true;
            }
            break;
        }
        world.step()?;
        if let Some(tr) = tr.as_mut() {
            tr.snapshots.push(world.snapshot());
            tr.rounds.push(world.metrics.rounds);
        }
    }
    Ok(RunOutput { params, metrics: world.metrics, trace: tr })
}

/// Runs to global halt or the round limit.
pub fn run(t: &Topology, a: &TokenAssignment, cfg: &RunConfig) -> Result<RunOutput> {
    let params = resolve(t, a, cfg)?;
    match cfg.algorithm {
        Algorithm::DetSmall => drive(t, a, SmallProtocol::new(&params), params, cfg.trace),
        Algorithm::DetLarge => drive(t, a, LargeProtocol::new(&params), params, cfg.trace),
        Algorithm::Randomized => drive(t, a, RandProtocol::new(&params), params, cfg.trace),
    }
}
