//! Randomized protocol.
//!
//! Token holders draw random `c·⌈log2 K⌉`-bit identifiers (`K` is the known
//! `k`, or `n`), then run the pipelined tree construction over them. Once a
//! root has its subtree size and token count it picks a hash seed and floods
//! it down the tree; every node then hashes its tokens and the hash values
//! are convergecast instead of the tokens themselves. A real duplicate
//! always hashes equal, so an all-distinct verdict is never wrong.

use rand::Rng;

use crate::engine::{Knowledge, Params, Protocol};
use crate::message::{Ele, HashSeed, RandAux, RoundMessage};
use crate::rng;
use crate::state::{Core, LargeState, Phase, RandState};
use crate::token::{Ident, Token};
use crate::topology::Port;

use super::hash::HashSpec;
use super::large::{absorb_windows, after_send, bfs, compose_rid, detection_children, Geometry};
use super::{absorb_common, decide, msg};

#[derive(Clone, Debug)]
pub struct RandProtocol {
    geo: Geometry,
    knowledge: Knowledge,
    n: usize,
    k: usize,
    token_len: u32,
    id_len: u32,
    beta: u32,
    seed: u64,
}

impl RandProtocol {
    pub fn new(p: &Params) -> Self {
        RandProtocol {
            geo: Geometry { m: p.pieces, p: p.per_iter, b: p.bandwidth },
            knowledge: p.knowledge,
            n: p.n,
            k: p.k,
            token_len: p.token_len,
            id_len: crate::engine::rand_id_len(p.rand.c, p.knowledge, p.n, p.k),
            beta: p.rand.beta,
            seed: p.seed,
        }
    }

    pub fn hash_spec(&self, h: HashSeed) -> HashSpec {
        HashSpec::build(self.token_len, h.khat, self.beta, h.seed).expect("hash range validated before the run")
    }

    fn install_hash(&self, s: &mut RandState, h: HashSeed) {
        let spec = self.hash_spec(h);
        s.hash = Some(h);
        let values: Vec<u64> = s.large.core.x.drain(..).map(|t| spec.eval(&t)).collect();
        s.hashed.extend(values);
    }

    fn detect(&self, s: &mut RandState, inbox: &[RoundMessage]) {
        let g = &self.geo;
        s.large.core.children = detection_children(g, &s.large, inbox);
        let children = s.large.core.children.clone();
        for &c in &children {
            if let Ele::Hashed { value, .. } = msg(inbox, c).ele {
                s.hashed.push_back(value);
            }
        }
        if s.hash.is_none() {
            if let Some(p) = s.large.core.parent {
                if let Some(h) = msg(inbox, p).aux.as_ref().and_then(|a| a.hash) {
                    self.install_hash(s, h);
                }
            }
        }
        if inbox.iter().any(|m| m.build) || s.large.sent != g.m {
            return;
        }
        let counts: Option<Vec<(u32, u64)>> = children
            .iter()
            .map(|&c| {
                let m = msg(inbox, c);
                Some((m.cnt?, m.aux.as_ref()?.tokcnt?))
            })
            .collect();
        if let Some(cs) = counts {
            s.large.core.cnt = Some(1 + cs.iter().map(|c| c.0).sum::<u32>());
            s.tokcnt = Some(s.inputs + cs.iter().map(|c| c.1).sum::<u64>());
        }
        let is_root = s.large.core.parent.is_none();
        if is_root && s.hash.is_none() && s.large.core.cnt.is_some() {
            let h = HashSeed { seed: s.seed_candidate, khat: s.tokcnt.unwrap() };
            self.install_hash(s, h);
        }
        let children_done = children.iter().all(|&c| msg(inbox, c).ele.is_bottom());
        let width = s.hash.and_then(|h| HashSpec::range(h.khat, self.beta)).map(HashSpec::width_for);
        let core = &mut s.large.core;
        if !is_root {
            core.ele = match width {
                None => Ele::Top,
                Some(width) => match s.hashed.pop_front() {
                    Some(value) => Ele::Hashed { value, width },
                    None if children_done => Ele::Bottom,
                    None => Ele::Top,
                },
            };
        } else if let (Some(cnt), Some(_), true, None) = (core.cnt, s.hash, children_done, core.res) {
            core.res = decide(self.knowledge, self.n, self.k, cnt, s.hashed.iter().copied());
        }
    }
}

fn phase_of(s: &RandState) -> Phase {
    if s.large.core.res.is_some() {
        Phase::Done
    } else if s.large.core.build {
        Phase::Elect
    } else if s.hash.is_none() {
        Phase::SeedBroadcast
    } else {
        Phase::Aggregate
    }
}

impl Protocol for RandProtocol {
    type State = RandState;

    fn init(&self, v: usize, inputs: &[Token], degree: usize) -> RandState {
        let mut r = rng::stream(self.seed, "rand-node", v as u64);
        let rid = if inputs.is_empty() {
            Ident::Top
        } else {
            Ident::Value(Token::random(self.id_len, &mut r).widen(self.geo.width()))
        };
        RandState {
            large: LargeState::new(Core::new(inputs, rid), degree),
            phase: Phase::Elect,
            inputs: inputs.len() as u64,
            tokcnt: None,
            hash: None,
            hash_sent: false,
            hashed: Default::default(),
            seed_candidate: r.random(),
        }
    }

    fn compose(&self, s: &RandState, port: Port) -> RoundMessage {
        let core = &s.large.core;
        RoundMessage {
            res: core.res,
            build: core.build,
            rid: compose_rid(&self.geo, &s.large),
            ischild: core.parent == Some(port),
            f: core.f,
            cnt: core.cnt,
            ele: core.ele.clone(),
            aux: Some(RandAux { tokcnt: s.tokcnt, hash: s.hash.filter(|_| !s.hash_sent) }),
        }
    }

    fn after_send(&self, s: &mut RandState) {
        after_send(&self.geo, &mut s.large);
        s.hash_sent = s.hash.is_some();
    }

    fn receive(&self, s: &mut RandState, inbox: &[RoundMessage]) {
        absorb_windows(&self.geo, &mut s.large, inbox);
        absorb_common(&mut s.large.core.res, &mut s.large.core.build, inbox);
        if s.large.core.build {
            bfs(&self.geo, &mut s.large, inbox);
        } else {
            self.detect(s, inbox);
        }
        s.phase = phase_of(s);
    }

    fn core<'a>(&self, s: &'a RandState) -> &'a Core {
        &s.large.core
    }

    fn hash_known(&self, s: &RandState) -> bool {
        s.hash.is_some()
    }
}
