//! Pipelined deterministic protocol for long tokens.
//!
//! Identifiers and tokens are cut into `M = ⌈L/B⌉` pieces of `B` bits, most
//! significant first. Each iteration a node sends the next `P` pieces of its
//! identifier together with their position, so neighbours can compare
//! prefixes (padded with ones) long before the full value has arrived.

use crate::engine::{Knowledge, Params, Protocol};
use crate::message::{Ele, RidField, RoundMessage};
use crate::state::{min_ident, Core, LargeState};
use crate::token::{Ident, Token};
use crate::topology::Port;

use super::{absorb_common, decide, msg, ports_where};

/// Piece arithmetic for `M` pieces of `B` bits.
#[derive(Clone, Copy, Debug)]
pub struct Geometry {
    pub m: u32,
    pub p: u32,
    pub b: u32,
}

impl Geometry {
    pub fn width(&self) -> u32 {
        self.m * self.b
    }

    /// Piece `j` (1-based, most significant first) of a `width()`-bit value.
    pub fn piece(&self, t: &Token, j: u32) -> u64 {
        t.extract((self.m - j) * self.b, self.b)
    }

    pub fn set_piece(&self, t: &mut Token, j: u32, v: u64) {
        t.deposit((self.m - j) * self.b, self.b, v);
    }

    /// Window `[l, r]` following position `pos`.
    pub fn window(&self, pos: u32) -> (u32, u32) {
        (pos + 1, (pos + self.p).min(self.m))
    }

    pub fn ones(&self) -> u64 {
        if self.b == 64 {
            u64::MAX
        } else {
            (1 << self.b) - 1
        }
    }
}

pub(crate) fn compose_rid(g: &Geometry, s: &LargeState) -> RidField {
    let (l, r) = g.window(s.sent);
    let pieces = s.core.rid.value().map(|t| (l..=r).map(|j| g.piece(t, j)).collect());
    RidField::Window { pos: s.sent, pieces }
}

pub(crate) fn after_send(g: &Geometry, s: &mut LargeState) {
    s.sent = g.window(s.sent).1;
}

fn window_pos(m: &RoundMessage) -> u32 {
    match &m.rid {
        RidField::Window { pos, .. } => *pos,
        RidField::Full(_) => unreachable!("pipelined protocol sends identifier windows"),
    }
}

/// Splices every received identifier window into the per-port prefix.
pub(crate) fn absorb_windows(g: &Geometry, s: &mut LargeState, inbox: &[RoundMessage]) {
    for (i, m) in inbox.iter().enumerate() {
        let RidField::Window { pos, pieces } = &m.rid else {
            unreachable!("pipelined protocol sends identifier windows")
        };
        let (l, r) = g.window(*pos);
        s.port_sent[i] = r;
        match pieces {
            None => s.port_rid[i] = Ident::Top,
            Some(ps) => {
                debug_assert_eq!(ps.len() as u32, (r + 1).saturating_sub(l));
                let mut base = match &s.port_rid[i] {
                    Ident::Value(t) => t.clone(),
                    Ident::Top => Token::all_ones(g.width()),
                };
                for (off, &piece) in ps.iter().enumerate() {
                    g.set_piece(&mut base, l + off as u32, piece);
                }
                for j in r + 1..=g.m {
                    g.set_piece(&mut base, j, g.ones());
                }
                s.port_rid[i] = Ident::Value(base);
            }
        }
    }
}

pub(crate) fn bfs(g: &Geometry, s: &mut LargeState, inbox: &[RoundMessage]) {
    let min = s.port_rid.iter().min().cloned();
    match min {
        Some(min) if min < s.core.rid => {
            let j = match s.core.parent {
                Some(p) if s.port_rid[p as usize - 1] == min => p,
                _ => s.port_rid.iter().position(|r| *r == min).unwrap() as Port + 1,
            };
            s.core.rid = min;
            s.sent = window_pos(msg(inbox, j));
            s.core.parent = Some(j);
            s.core.f = false;
        }
        _ if !s.core.rid.is_top()
            && s.port_rid.iter().all(|r| *r == s.core.rid)
            && s.sent == g.m
            && s.port_sent.iter().all(|&x| x == g.m) =>
        {
            s.core.children = ports_where(inbox, |_, m| m.ischild);
            if s.core.children.iter().all(|&c| msg(inbox, c).f) {
                s.core.f = true;
            }
        }
        _ => {}
    }
    if s.core.parent.is_none() && s.core.f {
        s.core.build = false;
    }
}

/// Children under the detection rule: quit building, point at us, have
/// sent their whole identifier, and it equals ours.
pub(crate) fn detection_children(g: &Geometry, s: &LargeState, inbox: &[RoundMessage]) -> Vec<Port> {
    ports_where(inbox, |i, m| {
        !m.build && m.ischild && s.port_sent[i] == g.m && s.port_rid[i] == s.core.rid
    })
}

#[derive(Clone, Debug)]
pub struct LargeProtocol {
    geo: Geometry,
    knowledge: Knowledge,
    n: usize,
    k: usize,
    token_len: u32,
}

impl LargeProtocol {
    pub fn new(p: &Params) -> Self {
        LargeProtocol {
            geo: Geometry { m: p.pieces, p: p.per_iter, b: p.bandwidth },
            knowledge: p.knowledge,
            n: p.n,
            k: p.k,
            token_len: p.token_len,
        }
    }

    pub fn geometry(&self) -> Geometry {
        self.geo
    }

    fn slice(&self, t: &Token, l: u32, r: u32) -> Ele {
        Ele::Pieces((l..=r).map(|j| self.geo.piece(t, j)).collect())
    }

    fn detect(&self, s: &mut LargeState, inbox: &[RoundMessage]) {
        let g = &self.geo;
        s.core.children = detection_children(g, s, inbox);
        for c in s.core.children.clone() {
            let i = c as usize - 1;
            if let Ele::Pieces(ps) = &msg(inbox, c).ele {
                let buf = s.port_ele[i].get_or_insert_with(|| Token::zero(g.width()));
                for (off, &piece) in ps.iter().enumerate() {
                    g.set_piece(buf, s.port_sente[i] + 1 + off as u32, piece);
                }
                s.port_sente[i] = (s.port_sente[i] + ps.len() as u32).min(g.m);
                if s.port_sente[i] == g.m {
                    let t = s.port_ele[i].take().unwrap();
                    s.core.x.push_back(t.narrow(self.token_len).expect("reassembled token fits in L bits"));
                    s.port_sente[i] = 0;
                }
            }
        }
        if inbox.iter().any(|m| m.build) || s.sent != g.m {
            return;
        }
        let core = &mut s.core;
        let child_cnts: Option<Vec<u32>> = core.children.iter().map(|&c| msg(inbox, c).cnt).collect();
        if let Some(cs) = child_cnts {
            core.cnt = Some(1 + cs.iter().sum::<u32>());
        }
        let children_done = core.children.iter().all(|&c| msg(inbox, c).ele.is_bottom());
        if core.parent.is_some() {
            if s.sente0 != 0 {
                let (l, r) = g.window(s.sente0);
                core.ele = self.slice(s.ele0.as_ref().unwrap(), l, r);
                s.sente0 = r % g.m;
            } else if let Some(t) = core.x.pop_front() {
                let t = t.widen(g.width());
                let r = g.p.min(g.m);
                core.ele = self.slice(&t, 1, r);
                s.ele0 = Some(t);
                s.sente0 = r % g.m;
            } else if children_done {
                core.ele = Ele::Bottom;
            } else {
                core.ele = Ele::Top;
            }
        } else if let (Some(cnt), true, None) = (core.cnt, children_done, core.res) {
            core.res = decide(self.knowledge, self.n, self.k, cnt, core.x.iter().cloned());
        }
    }
}

impl Protocol for LargeProtocol {
    type State = LargeState;

    fn init(&self, _v: usize, inputs: &[Token], degree: usize) -> LargeState {
        let rid = match min_ident(inputs) {
            Ident::Value(t) => Ident::Value(t.widen(self.geo.width())),
            Ident::Top => Ident::Top,
        };
        LargeState::new(Core::new(inputs, rid), degree)
    }

    fn compose(&self, s: &LargeState, port: Port) -> RoundMessage {
        RoundMessage {
            res: s.core.res,
            build: s.core.build,
            rid: compose_rid(&self.geo, s),
            ischild: s.core.parent == Some(port),
            f: s.core.f,
            cnt: s.core.cnt,
            ele: s.core.ele.clone(),
            aux: None,
        }
    }

    fn after_send(&self, s: &mut LargeState) {
        after_send(&self.geo, s);
    }

    fn receive(&self, s: &mut LargeState, inbox: &[RoundMessage]) {
        absorb_windows(&self.geo, s, inbox);
        absorb_common(&mut s.core.res, &mut s.core.build, inbox);
        if s.core.build {
            bfs(&self.geo, s, inbox);
        } else {
            self.detect(s, inbox);
        }
    }

    fn core<'a>(&self, s: &'a LargeState) -> &'a Core {
        &s.core
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geo(m: u32, b: u32) -> Geometry {
        Geometry { m, p: 1, b }
    }

    fn window(pos: u32, pieces: &[u64]) -> RoundMessage {
        RoundMessage {
            res: None,
            build: true,
            rid: RidField::Window { pos, pieces: Some(pieces.to_vec()) },
            ischild: false,
            f: false,
            cnt: None,
            ele: Ele::Top,
            aux: None,
        }
    }

    fn state(degree: usize) -> LargeState {
        LargeState::new(Core::new(&[], Ident::Top), degree)
    }

    #[test]
    fn pieces_are_msb_first() {
        let g = geo(4, 4);
        let t = Token::from_u64(16, 0xabcd).unwrap();
        assert_eq!((1..=4).map(|j| g.piece(&t, j)).collect::<Vec<_>>(), vec![0xa, 0xb, 0xc, 0xd]);
    }

    #[test]
    fn prefix_grows_and_pads_with_ones() {
        let g = geo(4, 4);
        let mut s = state(1);
        absorb_windows(&g, &mut s, &[window(0, &[0x1])]);
        assert_eq!(s.port_rid[0], Ident::Value(Token::from_u64(16, 0x1fff).unwrap()));
        absorb_windows(&g, &mut s, &[window(1, &[0x2])]);
        assert_eq!(s.port_rid[0], Ident::Value(Token::from_u64(16, 0x12ff).unwrap()));
        assert_eq!(s.port_sent[0], 2);
    }

    #[test]
    fn restart_abandons_old_suffix() {
        let g = geo(4, 4);
        let mut s = state(1);
        for (pos, p) in [(0, 0x1), (1, 0x2), (2, 0x3)] {
            absorb_windows(&g, &mut s, &[window(pos, &[p])]);
        }
        absorb_windows(&g, &mut s, &[window(0, &[0x0])]);
        assert_eq!(s.port_rid[0], Ident::Value(Token::from_u64(16, 0x0fff).unwrap()));
        assert_eq!(s.port_sent[0], 1);
    }

    #[test]
    fn sticky_parent_on_ties() {
        let g = geo(1, 8);
        let mut s = LargeState::new(Core::new(&[], Ident::Value(Token::from_u64(8, 9).unwrap())), 2);
        s.core.parent = Some(2);
        s.core.rid = Ident::Value(Token::from_u64(8, 7).unwrap());
        let inbox = [window(0, &[5]), window(0, &[5])];
        absorb_windows(&g, &mut s, &inbox);
        bfs(&g, &mut s, &inbox);
        assert_eq!(s.core.parent, Some(2));
        assert_eq!(s.core.rid, Ident::Value(Token::from_u64(8, 5).unwrap()));
    }

    #[test]
    fn adoption_copies_position() {
        let g = geo(8, 4);
        let mut s = LargeState::new(Core::new(&[], Ident::Top), 1);
        let inbox = [window(5, &[3])];
        absorb_windows(&g, &mut s, &inbox);
        bfs(&g, &mut s, &inbox);
        assert_eq!(s.sent, 5);
        assert_eq!(s.core.parent, Some(1));
    }

    #[test]
    fn completion_waits_for_full_identifiers() {
        let g = geo(2, 4);
        let t = Token::from_u64(8, 0x12).unwrap();
        let mut s = LargeState::new(Core::new(&[], Ident::Value(t)), 1);
        s.sent = 2;
        s.core.parent = Some(1);
        let inbox = [window(0, &[0x1])];
        absorb_windows(&g, &mut s, &inbox);
        s.port_rid[0] = s.core.rid.clone();
        bfs(&g, &mut s, &inbox);
        assert!(!s.core.f);
    }
}
