//! Deterministic protocol for tokens that fit in one message.

use crate::engine::{Knowledge, Params, Protocol};
use crate::message::{Ele, RidField, RoundMessage};
use crate::state::{min_ident, Core};
use crate::token::Token;
use crate::topology::Port;

use super::{absorb_common, decide, msg, ports_where};

#[derive(Clone, Debug)]
pub struct SmallProtocol {
    knowledge: Knowledge,
    n: usize,
    k: usize,
    /// Tokens per message when packing; `None` sends one token unpacked.
    pack_cap: Option<usize>,
}

impl SmallProtocol {
    pub fn new(p: &Params) -> Self {
        SmallProtocol {
            knowledge: p.knowledge,
            n: p.n,
            k: p.k,
            pack_cap: p.pack_tokens.then_some(p.pack_cap as usize),
        }
    }

    pub fn with_packing(mut self, cap: Option<usize>) -> Self {
        self.pack_cap = cap;
        self
    }

    fn bfs(&self, s: &mut Core, inbox: &[RoundMessage]) {
        let rid_of = |m: &RoundMessage| match &m.rid {
            RidField::Full(r) => r.clone(),
            RidField::Window { .. } => unreachable!("small protocol sends full identifiers"),
        };
        let min = inbox.iter().map(rid_of).min();
        match min {
            Some(min) if min < s.rid => {
                let j = inbox.iter().position(|m| rid_of(m) == min).unwrap() as Port + 1;
                s.rid = min;
                s.parent = Some(j);
                s.f = false;
            }
            _ if !s.rid.is_top() && inbox.iter().all(|m| rid_of(m) == s.rid) => {
                s.children = ports_where(inbox, |_, m| m.ischild);
                if s.children.iter().all(|&c| msg(inbox, c).f) {
                    s.f = true;
                }
            }
            _ => {}
        }
        if s.parent.is_none() && s.f {
            s.build = false;
        }
    }

    fn detect(&self, s: &mut Core, inbox: &[RoundMessage]) {
        let rid = RidField::Full(s.rid.clone());
        s.children = ports_where(inbox, |_, m| !m.build && m.ischild && m.rid == rid);
        for &c in &s.children {
            match &msg(inbox, c).ele {
                Ele::Token(t) => s.x.push_back(t.clone()),
                Ele::Packed(ts) => s.x.extend(ts.iter().cloned()),
                _ => {}
            }
        }
        if inbox.iter().any(|m| m.build) {
            return;
        }
        let child_cnts: Option<Vec<u32>> = s.children.iter().map(|&c| msg(inbox, c).cnt).collect();
        if let Some(cs) = child_cnts {
            s.cnt = Some(1 + cs.iter().sum::<u32>());
        }
        let children_done = s.children.iter().all(|&c| msg(inbox, c).ele.is_bottom());
        if s.parent.is_some() {
            s.ele = if !s.x.is_empty() {
                match self.pack_cap {
                    None => Ele::Token(s.x.pop_front().unwrap()),
                    Some(cap) => {
                        let take = cap.min(s.x.len());
                        Ele::Packed(s.x.drain(..take).collect())
                    }
                }
            } else if children_done {
                Ele::Bottom
            } else {
                Ele::Top
            };
        } else if let (Some(cnt), true, None) = (s.cnt, children_done, s.res) {
            s.res = decide(self.knowledge, self.n, self.k, cnt, s.x.iter().cloned());
        }
    }
}

impl Protocol for SmallProtocol {
    type State = Core;

    fn init(&self, _v: usize, inputs: &[Token], _degree: usize) -> Core {
        Core::new(inputs, min_ident(inputs))
    }

    fn compose(&self, s: &Core, port: Port) -> RoundMessage {
        RoundMessage {
            res: s.res,
            build: s.build,
            rid: RidField::Full(s.rid.clone()),
            ischild: s.parent == Some(port),
            f: s.f,
            cnt: s.cnt,
            ele: s.ele.clone(),
            aux: None,
        }
    }

    fn receive(&self, s: &mut Core, inbox: &[RoundMessage]) {
        absorb_common(&mut s.res, &mut s.build, inbox);
        if s.build {
            self.bfs(s, inbox);
        } else {
            self.detect(s, inbox);
        }
    }

    fn core<'a>(&self, s: &'a Core) -> &'a Core {
        s
    }
}
